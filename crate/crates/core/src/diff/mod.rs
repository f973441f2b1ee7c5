//! Gradient plumbing between the renderer and the victim: sparse Jacobian
//! products, the clamp and resize stages, and a finite-difference checker.

mod gradcheck;
mod image;

pub use gradcheck::{finite_diff_gradcheck, GradcheckReport};
pub use image::{chw_to_hwc, clamp01_backward, clamp01_forward, hwc_to_chw, Resize};

use crate::exec::Exec;
use crate::{Error, Result};

/// One coalesced derivative record: d pixel\[c\] / d texel\[c\] = `weight[c]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacEntry {
    pub pixel: u32,
    pub texel: u32,
    pub weight: [f64; 3],
}

/// Per-channel Jacobian of a frame with respect to the attacked texture,
/// entries sorted by `(pixel, texel)` without duplicates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseJacobian {
    pub entries: Vec<JacEntry>,
    pub pixel_count: usize,
    pub texel_count: usize,
}

const CHUNK: usize = 1 << 14;

impl SparseJacobian {
    /// `J · tex`, a frame-shaped vector.
    pub fn apply(&self, tex: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; 3 * self.pixel_count];
        for e in &self.entries {
            let (p, t) = (3 * e.pixel as usize, 3 * e.texel as usize);
            for c in 0..3 {
                out[p + c] += e.weight[c] * tex[t + c];
            }
        }
        out
    }

    /// `Jᵀ · g` for a frame-shaped gradient `g`. Entries are split into
    /// fixed-size chunks whose partial sums are added in chunk order, so the
    /// result does not depend on `exec`.
    pub fn backprop_to_texture(&self, g: &[f64], exec: Exec) -> Result<Vec<f64>> {
        if g.len() != 3 * self.pixel_count {
            return Err(Error::Shape(format!(
                "image gradient has {} values, jacobian expects {}",
                g.len(),
                3 * self.pixel_count
            )));
        }
        let n = 3 * self.texel_count;
        let chunks = self.entries.len().div_ceil(CHUNK);
        let partials = exec.map(chunks, |k| {
            let mut acc = vec![0.0; n];
            for e in &self.entries[k * CHUNK..((k + 1) * CHUNK).min(self.entries.len())] {
                let (p, t) = (3 * e.pixel as usize, 3 * e.texel as usize);
                for c in 0..3 {
                    acc[t + c] += e.weight[c] * g[p + c];
                }
            }
            acc
        });
        let mut out = vec![0.0; n];
        for part in partials {
            for (o, v) in out.iter_mut().zip(part) {
                *o += v;
            }
        }
        Ok(out)
    }

    /// Texels with at least one entry.
    pub fn support(&self) -> Vec<bool> {
        let mut s = vec![false; self.texel_count];
        for e in &self.entries {
            s[e.texel as usize] = true;
        }
        s
    }
}
