//! Small image classifiers with an exact input-gradient backward pass.
//!
//! Images are planar `C × H × W`. Weights are stored as `f32`, arithmetic is
//! carried out in `f64`.

mod layers;
mod weights;

pub use weights::{init_random, load_weights, save_weights, Arch};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VictimError {
    #[error("bad weights magic {0:?}, expected \"AVW1\"")]
    BadMagic([u8; 4]),
    #[error("unsupported weights version {0}")]
    Version(u32),
    #[error("unexpected end of data in layer {layer}")]
    Truncated { layer: usize },
    #[error("layer {layer}: unknown type code {code}")]
    UnknownLayer { layer: usize, code: u8 },
    #[error("{0} trailing bytes after the last layer")]
    TrailingBytes(usize),
    #[error("layer {layer}: {msg}")]
    Incompatible { layer: usize, msg: String },
    #[error("model outputs {got} logits but {expected} classes are configured")]
    ClassCount { expected: usize, got: usize },
    #[error("expected input of shape {expected:?}, got {got:?}")]
    Shape { expected: Vec<usize>, got: Vec<usize> },
    #[error("class {class} out of range for {classes} classes")]
    ClassOutOfRange { class: usize, classes: usize },
    #[error("forward cache does not belong to this model")]
    CacheMismatch,
    #[error("unknown architecture {0:?}")]
    UnknownArch(String),
}

/// Dense channels-first tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, VictimError> {
        if shape.is_empty() || shape.len() > 4 || shape.iter().product::<usize>() != data.len() {
            return Err(VictimError::Shape {
                expected: shape,
                got: vec![data.len()],
            });
        }
        Ok(Self { shape, data })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    /// 3×3 cross-correlation, stride 1, zero padding 1. Weights are
    /// `[out][in][ky][kx]`.
    Conv2d {
        out_ch: usize,
        in_ch: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
    },
    Relu,
    /// 2×2 window, stride 2; odd trailing rows and columns are dropped.
    MaxPool2,
    GlobalAvgPool,
    /// `W·x + b` with `W` stored row-major as `[out][in]`.
    Dense {
        out: usize,
        inp: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
    },
}

/// Activation shape between layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Act {
    Spatial { c: usize, h: usize, w: usize },
    Flat(usize),
}

impl Act {
    pub fn len(self) -> usize {
        match self {
            Act::Spatial { c, h, w } => c * h * w,
            Act::Flat(n) => n,
        }
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VictimModel {
    pub layers: Vec<Layer>,
    pub input_size: (usize, usize),
    /// Input shape of each layer followed by the output shape.
    shapes: Vec<Act>,
}

/// Per-layer inputs and pooling argmax indices from one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    inputs: Vec<Vec<f64>>,
    argmax: Vec<Vec<u32>>,
}

impl VictimModel {
    /// Checks that the layer chain maps a `3 × h × w` image to a logit vector.
    pub fn new(layers: Vec<Layer>, input_size: (usize, usize)) -> Result<Self, VictimError> {
        let mut act = Act::Spatial {
            c: 3,
            h: input_size.0,
            w: input_size.1,
        };
        let mut shapes = vec![act];
        for (i, layer) in layers.iter().enumerate() {
            act = layers::output_shape(layer, act).map_err(|msg| VictimError::Incompatible { layer: i, msg })?;
            shapes.push(act);
        }
        if !matches!(act, Act::Flat(n) if n > 0) {
            return Err(VictimError::Incompatible {
                layer: layers.len().saturating_sub(1),
                msg: "model must end in a logit vector".into(),
            });
        }
        Ok(Self {
            layers,
            input_size,
            shapes,
        })
    }

    pub fn class_count(&self) -> usize {
        self.shapes.last().unwrap().len()
    }

    pub fn input_shape(&self) -> Vec<usize> {
        vec![3, self.input_size.0, self.input_size.1]
    }

    pub fn forward(&self, image: &Tensor) -> Result<(Vec<f64>, ForwardCache), VictimError> {
        if image.shape != self.input_shape() {
            return Err(VictimError::Shape {
                expected: self.input_shape(),
                got: image.shape.clone(),
            });
        }
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
            argmax: Vec::with_capacity(self.layers.len()),
        };
        let mut x = image.data.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let (y, arg) = layers::forward(layer, self.shapes[i], &x);
            cache.inputs.push(x);
            cache.argmax.push(arg);
            x = y;
        }
        Ok((x, cache))
    }

    pub fn logits(&self, image: &Tensor) -> Result<Vec<f64>, VictimError> {
        Ok(self.forward(image)?.0)
    }

    /// Gradient of a scalar with respect to the input image, given its
    /// gradient `d_logits` with respect to the logits.
    pub fn backward_input(&self, cache: &ForwardCache, d_logits: &[f64]) -> Result<Tensor, VictimError> {
        let ok = cache.inputs.len() == self.layers.len()
            && cache.inputs.iter().zip(&self.shapes).all(|(x, s)| x.len() == s.len())
            && d_logits.len() == self.class_count();
        if !ok {
            return Err(VictimError::CacheMismatch);
        }
        let mut g = d_logits.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            g = layers::backward(layer, self.shapes[i], &cache.inputs[i], &cache.argmax[i], &g);
        }
        Tensor::new(self.input_shape(), g)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Index of the largest logit; the first one wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// `log Σ exp(logits) − logits[class]` and its gradient `softmax − onehot`.
pub fn cross_entropy(logits: &[f64], class: usize) -> Result<(f64, Vec<f64>), VictimError> {
    if class >= logits.len() {
        return Err(VictimError::ClassOutOfRange {
            class,
            classes: logits.len(),
        });
    }
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    let mut d = softmax(logits);
    d[class] -= 1.0;
    Ok((lse - logits[class], d))
}
