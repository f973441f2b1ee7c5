//! Whitted-style forward renderer with an exact texture derivative record.
//!
//! Diffuse hits take direct lighting from point lights (inverse-square
//! falloff, the 1/π factor folded into intensity, binary shadow rays);
//! mirror and dielectric hits recurse. Albedo enters radiance affinely and
//! nothing recurses off a diffuse hit, so each frame is exactly
//! `base + J · texture`, and the renderer records `J` as it shades.

mod camera;
mod render;
mod texture;

pub use camera::{camera_ray, Camera};
pub use render::{render, schlick, FrameBuffer, RenderOutput, RenderSettings};
pub use texture::{Tap, Texture};
