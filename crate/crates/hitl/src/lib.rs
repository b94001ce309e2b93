//! Live rating service: exposes each training step over HTTP and feeds the
//! rater's stars back to the training loop as rewards.

mod desk;
mod server;

pub use desk::{
    HumanRater, Progress, RatingAck, RatingDesk, RatingRecord, RatingSubmission, Rejection,
    StepStatus, StepView,
};
pub use server::{router, spawn_server, ServerHandle, MAX_WAIT_MS};
