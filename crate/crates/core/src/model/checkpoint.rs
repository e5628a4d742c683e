//! Binary model checkpoints: magic `TCKP`, then little-endian
//! `u32 d, u32 T, u32 L, u8 combiner, u8 head`, each tensor as
//! `u32 len` plus `f64` values in [`TemporalModel::tensors`] order, and a
//! length-prefixed JSON echo of the run configuration.

use std::io::{Read, Write};
use std::path::Path;

use super::combiner::{Combiner, CombinerKind};
use super::head::{Dense, TaskHead};
use super::TemporalModel;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"TCKP";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: TemporalModel,
    /// Number of time steps the model was trained on.
    pub steps: usize,
    /// Configuration the model was trained with, as JSON.
    pub config: String,
}

fn kind_code(kind: CombinerKind) -> u8 {
    match kind {
        CombinerKind::Lstm => 0,
        CombinerKind::Rnn => 1,
        CombinerKind::Static => 2,
    }
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&ckpt.to_bytes())
        .map_err(|e| Error::io(path, e))
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let ckpt = self;
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        let m = &ckpt.model;
        let is_link = matches!(m.head, TaskHead::Link(_));
        for v in [m.dim(), ckpt.steps, m.head.classes()] {
            buf.extend_from_slice(&(v as u32).to_le_bytes());
        }
        buf.push(kind_code(m.combiner.kind()));
        buf.push(u8::from(is_link));
        for (_, t) in m.tensors() {
            buf.extend_from_slice(&(t.len() as u32).to_le_bytes());
            for x in t {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        buf.extend_from_slice(&(ckpt.config.len() as u32).to_le_bytes());
        buf.extend_from_slice(ckpt.config.as_bytes());
        buf
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::Format("checkpoint is truncated".into()))?;
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let mut c = Cursor {
        bytes: &bytes,
        pos: 0,
    };
    if c.take(4)? != MAGIC {
        return Err(Error::Format(format!(
            "{} is not a model checkpoint",
            path.display()
        )));
    }
    let dim = c.u32()?;
    let steps = c.u32()?;
    let classes = c.u32()?;
    let flags = c.take(2)?;
    let kind = match flags[0] {
        0 => CombinerKind::Lstm,
        1 => CombinerKind::Rnn,
        2 => CombinerKind::Static,
        k => return Err(Error::Format(format!("unknown combiner code {k}"))),
    };
    if dim == 0 {
        return Err(Error::Format("checkpoint has d = 0".into()));
    }
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let combiner = Combiner::init(kind, dim, &mut rng).zeros_like();
    let head = match flags[1] {
        1 => TaskHead::Link(Dense::zeros(2 * dim, 2)),
        0 => TaskHead::NodeClass(Dense::zeros(dim, classes)),
        h => return Err(Error::Format(format!("unknown head code {h}"))),
    };
    let mut model = TemporalModel { combiner, head };
    for t in model.tensors_mut() {
        let len = c.u32()?;
        if len != t.len() {
            return Err(Error::Format(format!(
                "tensor length {len} does not match expected {}",
                t.len()
            )));
        }
        for (x, chunk) in t.iter_mut().zip(c.take(8 * len)?.chunks_exact(8)) {
            *x = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
    }
    let len = c.u32()?;
    let config = String::from_utf8(c.take(len)?.to_vec())
        .map_err(|_| Error::Format("checkpoint config is not UTF-8".into()))?;
    Ok(Checkpoint {
        model,
        steps,
        config,
    })
}

/// A per-epoch loss trace as `epoch,loss` CSV.
pub fn loss_trace_csv(loss: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (e, l) in loss.iter().enumerate() {
        out.push_str(&format!("{e},{l}\n"));
    }
    out
}
