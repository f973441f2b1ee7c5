//! `AVW1` weights files and seeded initialization.
//!
//! Layout, little-endian throughout: magic `AVW1`, u32 version (1), u32 layer
//! count, then per layer a u8 type code (1 conv, 2 relu, 3 maxpool,
//! 4 global average pool, 5 dense). Conv and dense layers follow the code
//! with u32 `out, in` and then `f32` weights and biases.
//!
//! Random weights come from one [`SplitMix64`] stream seeded with the model
//! seed, drawn layer by layer in storage order: `u` uniform in `[0, 1)` maps
//! to `(2u − 1)·√3·√(2 / fan_in)`, where fan_in is `9·in` for conv and `in`
//! for dense. Biases are zero.

use std::str::FromStr;

use super::{Layer, VictimError, VictimModel};
use crate::rng::SplitMix64;

const MAGIC: &[u8; 4] = b"AVW1";
const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arch {
    /// Three conv blocks, global average pool, dense head.
    TinyCnn,
    /// Global average pool followed by a dense head.
    Linear,
}

impl FromStr for Arch {
    type Err = VictimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tiny-cnn" | "cnn" => Ok(Arch::TinyCnn),
            "linear" => Ok(Arch::Linear),
            _ => Err(VictimError::UnknownArch(s.into())),
        }
    }
}

fn random_tensor(rng: &mut SplitMix64, n: usize, fan_in: usize) -> Vec<f32> {
    let scale = 3f64.sqrt() * (2.0 / fan_in as f64).sqrt();
    (0..n).map(|_| (rng.uniform(-1.0, 1.0) * scale) as f32).collect()
}

fn conv(rng: &mut SplitMix64, in_ch: usize, out_ch: usize) -> Layer {
    Layer::Conv2d {
        out_ch,
        in_ch,
        weights: random_tensor(rng, out_ch * in_ch * 9, in_ch * 9),
        bias: vec![0.0; out_ch],
    }
}

fn dense(rng: &mut SplitMix64, inp: usize, out: usize) -> Layer {
    Layer::Dense {
        out,
        inp,
        weights: random_tensor(rng, out * inp, inp),
        bias: vec![0.0; out],
    }
}

pub fn init_random(arch: Arch, classes: usize, input_size: (usize, usize), seed: u64) -> Result<VictimModel, VictimError> {
    let mut rng = SplitMix64::new(seed);
    let layers = match arch {
        Arch::TinyCnn => vec![
            conv(&mut rng, 3, 8),
            Layer::Relu,
            Layer::MaxPool2,
            conv(&mut rng, 8, 16),
            Layer::Relu,
            Layer::MaxPool2,
            conv(&mut rng, 16, 32),
            Layer::Relu,
            Layer::GlobalAvgPool,
            dense(&mut rng, 32, classes),
        ],
        Arch::Linear => vec![Layer::GlobalAvgPool, dense(&mut rng, 3, classes)],
    };
    VictimModel::new(layers, input_size)
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_f32s(out: &mut Vec<u8>, v: &[f32]) {
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn save_weights(model: &VictimModel) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    put_u32(&mut out, VERSION as usize);
    put_u32(&mut out, model.layers.len());
    for layer in &model.layers {
        match layer {
            Layer::Conv2d {
                out_ch,
                in_ch,
                weights,
                bias,
            } => {
                out.push(1);
                put_u32(&mut out, *out_ch);
                put_u32(&mut out, *in_ch);
                put_f32s(&mut out, weights);
                put_f32s(&mut out, bias);
            }
            Layer::Relu => out.push(2),
            Layer::MaxPool2 => out.push(3),
            Layer::GlobalAvgPool => out.push(4),
            Layer::Dense {
                out: o,
                inp,
                weights,
                bias,
            } => {
                out.push(5);
                put_u32(&mut out, *o);
                put_u32(&mut out, *inp);
                put_f32s(&mut out, weights);
                put_f32s(&mut out, bias);
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    layer: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], VictimError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        let end = end.ok_or(VictimError::Truncated { layer: self.layer })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, VictimError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize, VictimError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, VictimError> {
        let len = n.checked_mul(4).ok_or(VictimError::Truncated { layer: self.layer })?;
        Ok(self
            .take(len)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Parses an `AVW1` file for a model taking `3 × h × w` images.
pub fn load_weights(bytes: &[u8], input_size: (usize, usize)) -> Result<VictimModel, VictimError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        let mut m = [0; 4];
        let n = bytes.len().min(4);
        m[..n].copy_from_slice(&bytes[..n]);
        return Err(VictimError::BadMagic(m));
    }
    let mut r = Reader { bytes, pos: 4, layer: 0 };
    let version = r.u32()?;
    if version as u32 != VERSION {
        return Err(VictimError::Version(version as u32));
    }
    let count = r.u32()?;
    let mut layers = Vec::new();
    for i in 0..count {
        r.layer = i;
        let layer = match r.u8()? {
            1 => {
                let (out_ch, in_ch) = (r.u32()?, r.u32()?);
                Layer::Conv2d {
                    out_ch,
                    in_ch,
                    weights: r.f32s(out_ch.saturating_mul(in_ch).saturating_mul(9))?,
                    bias: r.f32s(out_ch)?,
                }
            }
            2 => Layer::Relu,
            3 => Layer::MaxPool2,
            4 => Layer::GlobalAvgPool,
            5 => {
                let (out, inp) = (r.u32()?, r.u32()?);
                Layer::Dense {
                    out,
                    inp,
                    weights: r.f32s(out.saturating_mul(inp))?,
                    bias: r.f32s(out)?,
                }
            }
            code => return Err(VictimError::UnknownLayer { layer: i, code }),
        };
        layers.push(layer);
    }
    if r.pos != bytes.len() {
        return Err(VictimError::TrailingBytes(bytes.len() - r.pos));
    }
    VictimModel::new(layers, input_size)
}
