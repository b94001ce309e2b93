//! Simulation, reward and learning core for autonomous drone cinematography
//! over 2.5D height maps.

pub mod agent;
pub mod camera;
pub mod error;
pub mod harness;
pub mod nn;
pub mod reward;
pub mod scene;
pub mod world;

pub use error::{Error, Result};
