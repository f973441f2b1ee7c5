//! Detection-style reporting: the classifier scores a grid of crops plus the
//! full frame, and each crop becomes a labelled box.

use serde::Serialize;

use crate::diff::{hwc_to_chw, Resize};
use crate::exec::Exec;
use crate::victim::{argmax, softmax, Tensor, VictimModel};
use crate::{Error, Result};

/// Pixel box with exclusive upper corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl BBox {
    pub fn area(&self) -> u64 {
        (self.x1 - self.x0) as u64 * (self.y1 - self.y0) as u64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Detection {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub class_index: usize,
    pub class_name: String,
    pub confidence: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectParams {
    pub grid_n: u32,
    pub overlap: f64,
    pub top_k: usize,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            grid_n: 2,
            overlap: 0.0,
            top_k: 5,
        }
    }
}

fn placements(extent: u32, size: u32, n: u32) -> Vec<u32> {
    if n == 1 {
        return vec![(extent - size) / 2];
    }
    (0..n)
        .map(|i| ((i as f64) * (extent - size) as f64 / (n - 1) as f64).round() as u32)
        .collect()
}

/// `grid_n × grid_n` boxes of side `frame / (grid_n · (1 − overlap))`, clipped
/// to the frame and spread evenly from edge to edge, in row-major order, then
/// the full frame. Repeated boxes are kept once.
pub fn grid_crops(frame_w: u32, frame_h: u32, grid_n: u32, overlap: f64) -> Result<Vec<BBox>> {
    if frame_w == 0 || frame_h == 0 {
        return Err(Error::Shape(format!("degenerate frame {frame_w}x{frame_h}")));
    }
    if grid_n == 0 || !(0.0..1.0).contains(&overlap) {
        return Err(Error::Shape(format!("bad crop grid n={grid_n} overlap={overlap}")));
    }
    let side = |extent: u32| {
        let s = (extent as f64 / (grid_n as f64 * (1.0 - overlap))).round() as u32;
        s.clamp(1, extent)
    };
    let (bw, bh) = (side(frame_w), side(frame_h));
    let xs = placements(frame_w, bw, grid_n);
    let ys = placements(frame_h, bh, grid_n);
    let full = BBox {
        x0: 0,
        y0: 0,
        x1: frame_w,
        y1: frame_h,
    };
    let mut boxes = Vec::with_capacity((grid_n * grid_n + 1) as usize);
    for &y0 in &ys {
        for &x0 in &xs {
            let b = BBox {
                x0,
                y0,
                x1: x0 + bw,
                y1: y0 + bh,
            };
            if b != full && !boxes.contains(&b) {
                boxes.push(b);
            }
        }
    }
    boxes.push(full);
    Ok(boxes)
}

fn crop(frame: &[f64], frame_w: u32, b: &BBox) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * b.area() as usize);
    for y in b.y0..b.y1 {
        let row = 3 * (y * frame_w) as usize;
        out.extend_from_slice(&frame[row + 3 * b.x0 as usize..row + 3 * b.x1 as usize]);
    }
    out
}

/// Classifies every crop of an interleaved RGB `frame` (values in [0, 1]).
/// Detections are ordered by confidence, larger boxes first among equal
/// confidences, then by box order; the first `top_k` are returned.
pub fn detect(
    model: &VictimModel,
    frame: &[f64],
    frame_w: u32,
    frame_h: u32,
    classes: &[String],
    params: &DetectParams,
    exec: Exec,
) -> Result<Vec<Detection>> {
    if frame.len() != 3 * (frame_w * frame_h) as usize {
        return Err(Error::Shape(format!("frame has {} values for {frame_w}x{frame_h}", frame.len())));
    }
    if classes.len() != model.class_count() {
        return Err(Error::Shape(format!(
            "{} class names for a model with {} outputs",
            classes.len(),
            model.class_count()
        )));
    }
    let boxes = grid_crops(frame_w, frame_h, params.grid_n, params.overlap)?;
    let (ih, iw) = model.input_size;
    let scored = exec.try_map(boxes.len(), |i| -> Result<Detection> {
        let b = boxes[i];
        let (bh, bw) = ((b.y1 - b.y0) as usize, (b.x1 - b.x0) as usize);
        let pixels = Resize::new(bh, bw, ih, iw).forward(&crop(frame, frame_w, &b));
        let input = Tensor::new(vec![3, ih, iw], hwc_to_chw(&pixels, ih, iw))?;
        let probs = softmax(&model.logits(&input)?);
        let k = argmax(&probs);
        Ok(Detection {
            bbox: b,
            class_index: k,
            class_name: classes[k].clone(),
            confidence: probs[k],
        })
    })?;
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (&scored[a], &scored[b]);
        db.confidence
            .total_cmp(&da.confidence)
            .then(db.bbox.area().cmp(&da.bbox.area()))
            .then(a.cmp(&b))
    });
    Ok(order.into_iter().take(params.top_k).map(|i| scored[i].clone()).collect())
}
