//! Vector and transform math, triangle meshes, BVH and ray queries.

mod bvh;
mod mesh;
mod obj;
mod transform;
mod vec3;

pub use bvh::{intersect_triangle, Aabb, Bvh, BvhNode, Triangle};
pub use mesh::{make_box, make_plane, make_uv_sphere, TriIndices, TriMesh};
pub use obj::load_obj;
pub use transform::Transform;
pub use vec3::{vec3, Point3, Vec3};

use thiserror::Error;

/// Offset applied to secondary rays to avoid re-hitting their own surface.
pub const T_MIN: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("OBJ line {line}: {msg}")]
    Obj { line: usize, msg: String },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("non-positive dimension: {0}")]
    NonPositive(String),
    #[error("scene has no triangles")]
    EmptyScene,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Point3,
    pub dir: Vec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    /// Ray with a normalized copy of `dir` and the default extents.
    pub fn new(origin: Point3, dir: Vec3) -> Self {
        Self {
            origin,
            dir: dir.normalize(),
            t_min: T_MIN,
            t_max: f64::INFINITY,
        }
    }

    pub fn with_t_min(mut self, t_min: f64) -> Self {
        self.t_min = t_min;
        self
    }

    pub fn at(&self, t: f64) -> Point3 {
        self.origin + self.dir * t
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HitRecord {
    pub t: f64,
    pub point: Point3,
    /// Unit shading normal, flipped to face against the incoming ray.
    pub normal: Vec3,
    /// True when the ray arrives on the side the triangle winding faces.
    pub front_face: bool,
    pub uv: [f64; 2],
    pub object_id: u32,
    pub tri_id: u32,
}
