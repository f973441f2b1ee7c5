//! Differentiable Whitted-style ray tracing for adversarial texture attacks.
//!
//! A scenario file describes a scene with one attackable texture, a victim
//! classifier and an attack configuration. The renderer emits, alongside each
//! frame, the exact sparse derivative of every pixel with respect to the
//! attacked texels, which lets a projected-gradient attack optimize the
//! texture over a set of orbiting camera views.

pub mod attack;
pub mod detect;
pub mod diff;
pub mod exec;
pub mod formats;
pub mod geom;
pub mod raytrace;
pub mod rng;
pub mod scene;
pub mod scenecfg;
pub mod victim;

mod error;

pub use error::{Error, Result};
pub use exec::Exec;
