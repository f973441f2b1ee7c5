use crate::geom::{Ray, Vec3};
use crate::scenecfg::CameraSpec;

/// Pinhole camera basis derived from a [`CameraSpec`]; pixel row 0 is the top.
#[derive(Clone, Debug)]
pub struct Camera {
    pub eye: Vec3,
    pub forward: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    half_w: f64,
    half_h: f64,
    width: f64,
    height: f64,
}

impl Camera {
    pub fn new(spec: &CameraSpec) -> Self {
        let forward = (spec.look_at - spec.eye).normalize();
        let right = forward.cross(spec.up).normalize();
        let up = right.cross(forward);
        let half_h = (spec.fov_deg.to_radians() * 0.5).tan();
        let half_w = half_h * spec.width as f64 / spec.height as f64;
        Self {
            eye: spec.eye,
            forward,
            right,
            up,
            half_w,
            half_h,
            width: spec.width as f64,
            height: spec.height as f64,
        }
    }

    pub fn ray(&self, px: u32, py: u32, jitter: [f64; 2]) -> Ray {
        let sx = 2.0 * (px as f64 + jitter[0]) / self.width - 1.0;
        let sy = 1.0 - 2.0 * (py as f64 + jitter[1]) / self.height;
        let dir = self.forward + self.right * (sx * self.half_w) + self.up * (sy * self.half_h);
        Ray::new(self.eye, dir).with_t_min(0.0)
    }
}

pub fn camera_ray(cam: &CameraSpec, px: u32, py: u32, jitter: [f64; 2]) -> Ray {
    debug_assert!(px < cam.width && py < cam.height);
    Camera::new(cam).ray(px, py, jitter)
}
