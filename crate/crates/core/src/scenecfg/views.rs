use super::types::{AttackSpec, CameraSpec, ViewMode};
use super::ConfigError;
use crate::geom::{vec3, Vec3};

/// Camera poses for the attack. Orbit view `k` of `K` sits at azimuth
/// `2πk/K` and the configured elevation, looking at the orbit center with +y up.
pub fn expand_views(a: &AttackSpec, base: &CameraSpec) -> Result<Vec<CameraSpec>, ConfigError> {
    let v = &a.views;
    if v.count == 0 {
        return Err(ConfigError::Validation {
            path: "attack.views.count".into(),
            msg: "view count must be at least 1".into(),
        });
    }
    match v.mode {
        ViewMode::Single => Ok(vec![base.clone()]),
        ViewMode::Orbit => {
            let r = v.radius.unwrap_or(0.0);
            if r.is_nan() || r <= 0.0 {
                return Err(ConfigError::Validation {
                    path: "attack.views.radius".into(),
                    msg: format!("orbit radius must be positive, found {r}"),
                });
            }
            let center = v.center.unwrap_or(Vec3::ZERO);
            let phi = v.elevation_deg.unwrap_or(0.0).to_radians();
            let k_total = v.count as f64;
            Ok((0..v.count)
                .map(|k| {
                    let theta = 2.0 * std::f64::consts::PI * k as f64 / k_total;
                    let eye = center
                        + vec3(
                            r * theta.cos() * phi.cos(),
                            r * phi.sin(),
                            r * theta.sin() * phi.cos(),
                        );
                    CameraSpec {
                        eye,
                        look_at: center,
                        up: vec3(0.0, 1.0, 0.0),
                        ..base.clone()
                    }
                })
                .collect())
        }
    }
}
