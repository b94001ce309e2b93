use std::io::{Read, Write};
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EnvConfig, LaneWidths, QNetwork};
use crate::error::{Error, Result};
use crate::nn::{AdamState, Mlp};
use crate::world::HeightMap;

const MAGIC: &[u8; 8] = b"CINERLQN";
const VERSION: u32 = 1;

/// What the network was trained on; evaluation refuses worlds whose map
/// encoding differs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointInfo {
    pub world: String,
    pub route: String,
    pub resolution: f64,
    pub max_obstacle_height: f64,
    pub c_cap: u32,
    pub episodes_trained: u32,
    pub reward_mode: String,
}

impl CheckpointInfo {
    pub fn check_compatible(&self, map: &HeightMap, env: &EnvConfig) -> Result<()> {
        if self.resolution != map.resolution() {
            return Err(Error::Mismatch(format!(
                "trained at {} m/cell, world has {} m/cell",
                self.resolution,
                map.resolution()
            )));
        }
        if self.max_obstacle_height != map.max_obstacle_height() {
            return Err(Error::Mismatch(format!(
                "trained with height scale {} m, world uses {} m",
                self.max_obstacle_height,
                map.max_obstacle_height()
            )));
        }
        if self.c_cap != env.c_cap {
            return Err(Error::Mismatch(format!(
                "trained with c_cap {}, evaluation uses {}",
                self.c_cap, env.c_cap
            )));
        }
        Ok(())
    }
}

/// Network, optimizer and RNG state of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub info: CheckpointInfo,
    pub net: QNetwork,
    pub adam: AdamState,
    pub rng: ChaCha8Rng,
}

#[derive(Serialize, Deserialize)]
struct AdamHeader {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    info: CheckpointInfo,
    lanes: LaneWidths,
    param_counts: [usize; 4],
    adam: AdamHeader,
    rng: ChaCha8Rng,
}

fn write_f64s<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::format("checkpoint", format!("truncated parameter block: {e}")))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

impl Checkpoint {
    /// Layout: magic, version (u32 LE), header length (u64 LE), JSON header,
    /// then little-endian f64 blocks: the four lanes' parameters, Adam first
    /// moments, Adam second moments.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let lanes = self.net.lanes();
        let header = Header {
            info: self.info.clone(),
            lanes: self.net.widths.clone(),
            param_counts: lanes.map(|l| l.param_count()),
            adam: AdamHeader {
                lr: self.adam.lr,
                beta1: self.adam.beta1,
                beta2: self.adam.beta2,
                eps: self.adam.eps,
                t: self.adam.t,
            },
            rng: self.rng.clone(),
        };
        let json = serde_json::to_vec(&header)?;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        for lane in lanes {
            write_f64s(&mut w, lane.params())?;
        }
        write_f64s(&mut w, &self.adam.m)?;
        write_f64s(&mut w, &self.adam.v)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| Error::format("checkpoint", "file too short"))?;
        if &magic != MAGIC {
            return Err(Error::format("checkpoint", "bad magic"));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let version = u32::from_le_bytes(word);
        if version != VERSION {
            return Err(Error::format("checkpoint", format!("unsupported version {version}")));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
        r.read_exact(&mut json)
            .map_err(|_| Error::format("checkpoint", "truncated header"))?;
        let header: Header = serde_json::from_slice(&json)?;

        let mut net = QNetwork::zeros(header.lanes)?;
        let expected = net.lanes().map(|l| l.param_count());
        if expected != header.param_counts {
            return Err(Error::format("checkpoint", "parameter counts do not match lane widths"));
        }
        for (lane, n) in net.lanes_mut().into_iter().zip(expected) {
            let params = read_f64s(&mut r, n)?;
            *lane = Mlp::from_params(lane.defs().to_vec(), params)?;
        }
        let total = net.param_count();
        let m = read_f64s(&mut r, total)?;
        let v = read_f64s(&mut r, total)?;
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::format("checkpoint", "trailing bytes"));
        }
        let adam = AdamState {
            lr: header.adam.lr,
            beta1: header.adam.beta1,
            beta2: header.adam.beta2,
            eps: header.adam.eps,
            t: header.adam.t,
            m,
            v,
        };
        Ok(Self {
            info: header.info,
            net,
            adam,
            rng: header.rng,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}
