use super::camera::Camera;
use super::texture::Texture;
use crate::diff::{JacEntry, SparseJacobian};
use crate::exec::Exec;
use crate::geom::{HitRecord, Ray, Vec3, T_MIN};
use crate::rng::SplitMix64;
use crate::scene::{Albedo, Material, Scene};
use crate::scenecfg::{CameraSpec, RenderSpec};
use crate::{Error, Result};

/// Linear RGB image, row-major and channel-interleaved.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameBuffer {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f64>,
}

impl FrameBuffer {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; (3 * width * height) as usize],
        }
    }

    pub fn pixel_count(&self) -> usize {
        (self.width * self.height) as usize
    }

    pub fn pixel(&self, x: u32, y: u32) -> [f64; 3] {
        let k = 3 * (y * self.width + x) as usize;
        [self.data[k], self.data[k + 1], self.data[k + 2]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderSettings {
    pub max_depth: u32,
    pub samples_per_pixel: u32,
    pub shadows: bool,
    pub exec: Exec,
}

impl From<&RenderSpec> for RenderSettings {
    fn from(r: &RenderSpec) -> Self {
        Self {
            max_depth: r.max_depth,
            samples_per_pixel: r.samples_per_pixel,
            shadows: r.shadows,
            exec: Exec::default(),
        }
    }
}

impl Default for RenderSettings {
    fn default() -> Self {
        (&RenderSpec::default()).into()
    }
}

#[derive(Clone, Debug)]
pub struct RenderOutput {
    pub frame: FrameBuffer,
    /// Radiance with the attacked texture set to zero.
    pub base: FrameBuffer,
    pub jacobian: SparseJacobian,
}

/// Schlick reflectance for a surface with relative index `ior`, given the
/// cosine of the angle on the optically thinner side.
pub fn schlick(cos: f64, ior: f64) -> f64 {
    let f0 = ((1.0 - ior) / (1.0 + ior)).powi(2);
    f0 + (1.0 - f0) * (1.0 - cos).powi(5)
}

struct Tracer<'a> {
    scene: &'a Scene,
    texture: Option<&'a Texture>,
    settings: &'a RenderSettings,
}

/// Radiance along a path, split into the full value and the part that does
/// not depend on the attacked texture.
#[derive(Clone, Copy, Default)]
struct Radiance {
    total: Vec3,
    base: Vec3,
}

impl Radiance {
    fn uniform(v: Vec3) -> Self {
        Self { total: v, base: v }
    }

    fn scaled(self, s: f64) -> Self {
        Self {
            total: self.total * s,
            base: self.base * s,
        }
    }

    fn add(self, o: Radiance) -> Self {
        Self {
            total: self.total + o.total,
            base: self.base + o.base,
        }
    }
}

impl Tracer<'_> {
    fn trace(&self, ray: &Ray, depth: u32, throughput: f64, tape: &mut Vec<(u32, Vec3)>) -> Radiance {
        let hit = match self.scene.bvh.as_ref().and_then(|b| b.intersect(ray)) {
            Some(h) => h,
            None => return Radiance::uniform(self.scene.background),
        };
        let out = match &self.scene.objects[hit.object_id as usize].material {
            Material::Lambertian(albedo) => self.diffuse(&hit, albedo, throughput, tape),
            Material::Mirror => {
                if depth >= self.settings.max_depth {
                    return Radiance::default();
                }
                let d = ray.dir;
                let r = d - hit.normal * (2.0 * d.dot(hit.normal));
                self.trace(&Ray::new(hit.point, r), depth + 1, throughput, tape)
            }
            Material::Dielectric { ior } => {
                if depth >= self.settings.max_depth {
                    return Radiance::default();
                }
                self.dielectric(ray, &hit, *ior, depth, throughput, tape)
            }
        };
        assert!(
            out.total.is_finite() && out.base.is_finite(),
            "non-finite radiance at depth {depth}"
        );
        out
    }

    fn irradiance(&self, hit: &HitRecord) -> Vec3 {
        let mut e = Vec3::ZERO;
        for light in &self.scene.lights {
            let to_light = light.position - hit.point;
            let d2 = to_light.length_squared();
            let dist = d2.sqrt();
            let w = to_light / dist;
            let cos = hit.normal.dot(w);
            if cos <= 0.0 {
                continue;
            }
            if self.settings.shadows {
                let shadow = Ray {
                    origin: hit.point,
                    dir: w,
                    t_min: T_MIN,
                    t_max: f64::INFINITY,
                };
                if self
                    .scene
                    .bvh
                    .as_ref()
                    .is_some_and(|b| b.intersect_any(&shadow, dist))
                {
                    continue;
                }
            }
            e += light.intensity * (cos / d2);
        }
        e
    }

    fn diffuse(&self, hit: &HitRecord, albedo: &Albedo, throughput: f64, tape: &mut Vec<(u32, Vec3)>) -> Radiance {
        let e = self.irradiance(hit);
        match albedo {
            Albedo::Constant(c) => Radiance::uniform(Vec3::from_array(*c).mul_elem(e)),
            Albedo::Texture(t) => Radiance::uniform(Vec3::from_array(t.sample(hit.uv).0).mul_elem(e)),
            Albedo::Attacked => {
                let tex = self.texture.expect("attacked texture checked in render");
                let (rgb, taps) = tex.sample(hit.uv);
                for (texel, w) in taps {
                    if w != 0.0 {
                        tape.push((texel, e * (w * throughput)));
                    }
                }
                Radiance {
                    total: Vec3::from_array(rgb).mul_elem(e),
                    base: Vec3::ZERO,
                }
            }
        }
    }

    fn dielectric(
        &self,
        ray: &Ray,
        hit: &HitRecord,
        ior: f64,
        depth: u32,
        throughput: f64,
        tape: &mut Vec<(u32, Vec3)>,
    ) -> Radiance {
        let d = ray.dir;
        let n = hit.normal;
        let cos_i = (-d.dot(n)).min(1.0);
        let eta = if hit.front_face { 1.0 / ior } else { ior };
        let reflected = d - n * (2.0 * d.dot(n));
        let sin2_t = eta * eta * (1.0 - cos_i * cos_i);
        if sin2_t > 1.0 {
            return self.trace(&Ray::new(hit.point, reflected), depth + 1, throughput, tape);
        }
        let cos_t = (1.0 - sin2_t).sqrt();
        let refracted = d * eta + n * (eta * cos_i - cos_t);
        // Schlick takes the angle on the thinner side of the interface.
        let f = schlick(if eta > 1.0 { cos_t } else { cos_i }, ior);
        let r = self
            .trace(&Ray::new(hit.point, reflected), depth + 1, throughput * f, tape)
            .scaled(f);
        let t = self
            .trace(&Ray::new(hit.point, refracted), depth + 1, throughput * (1.0 - f), tape)
            .scaled(1.0 - f);
        r.add(t)
    }
}

struct RowOut {
    total: Vec<f64>,
    base: Vec<f64>,
    entries: Vec<JacEntry>,
}

fn jitter(spp: u32, s: u32, rng: &mut SplitMix64) -> [f64; 2] {
    if spp == 1 {
        return [0.5, 0.5];
    }
    let n = (spp as f64).sqrt().ceil() as u32;
    [
        ((s % n) as f64 + rng.next_f64()) / n as f64,
        ((s / n) as f64 + rng.next_f64()) / n as f64,
    ]
}

/// Renders one view. `texture` must be provided when the scene has an
/// attacked object. Rows render in parallel under [`Exec::Parallel`]; jitter
/// is seeded per pixel, so output does not depend on scheduling.
pub fn render(
    scene: &Scene,
    cam: &CameraSpec,
    settings: &RenderSettings,
    texture: Option<&Texture>,
    seed: u64,
) -> Result<RenderOutput> {
    if scene.attacked.is_some() && texture.is_none() {
        return Err(Error::Scene("scene has an attacked object but no texture was given".into()));
    }
    let texel_count = texture.map_or(0, |t| t.texel_count());
    let camera = Camera::new(cam);
    let tracer = Tracer {
        scene,
        texture,
        settings,
    };
    let (w, h) = (cam.width, cam.height);
    let spp = settings.samples_per_pixel.max(1);
    let inv = 1.0 / spp as f64;
    let rows = settings.exec.map(h as usize, |y| {
        let y = y as u32;
        let mut row = RowOut {
            total: Vec::with_capacity(3 * w as usize),
            base: Vec::with_capacity(3 * w as usize),
            entries: Vec::new(),
        };
        let mut tape = Vec::new();
        for x in 0..w {
            let pixel = y * w + x;
            let mut rng = SplitMix64::derive(seed, pixel as u64);
            let mut acc = Radiance::default();
            tape.clear();
            for s in 0..spp {
                let ray = camera.ray(x, y, jitter(spp, s, &mut rng));
                acc = acc.add(tracer.trace(&ray, 0, 1.0, &mut tape));
            }
            let acc = acc.scaled(inv);
            row.total.extend(acc.total.to_array());
            row.base.extend(acc.base.to_array());
            tape.sort_by_key(|e| e.0);
            for (texel, wgt) in tape.iter() {
                match row.entries.last_mut() {
                    Some(last) if last.pixel == pixel && last.texel == *texel => {
                        for c in 0..3 {
                            last.weight[c] += wgt[c] * inv;
                        }
                    }
                    _ => row.entries.push(JacEntry {
                        pixel,
                        texel: *texel,
                        weight: (*wgt * inv).to_array(),
                    }),
                }
            }
        }
        row
    });
    let mut frame = FrameBuffer::new(w, h);
    let mut base = FrameBuffer::new(w, h);
    frame.data.clear();
    base.data.clear();
    let mut entries = Vec::new();
    for r in rows {
        frame.data.extend(r.total);
        base.data.extend(r.base);
        entries.extend(r.entries);
    }
    Ok(RenderOutput {
        frame,
        base,
        jacobian: SparseJacobian {
            entries,
            pixel_count: (w * h) as usize,
            texel_count,
        },
    })
}
