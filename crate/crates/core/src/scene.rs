//! Render-ready scene assembled from a scenario: world-space BVH, resolved
//! materials and lights.

use std::path::Path;

use crate::formats;
use crate::geom::{self, Bvh, Transform, TriMesh, Vec3};
use crate::raytrace::Texture;
use crate::scenecfg::{AlbedoSpec, GeometrySpec, MaterialKind, Scenario, TextureSource};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Albedo {
    Constant([f64; 3]),
    Texture(Texture),
    /// The attacked texture, supplied at render time.
    Attacked,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Material {
    Lambertian(Albedo),
    Mirror,
    Dielectric { ior: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointLight {
    pub position: Vec3,
    pub intensity: Vec3,
}

#[derive(Clone, Debug)]
pub struct SceneObject {
    pub name: String,
    pub material: Material,
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub bvh: Option<Bvh>,
    pub objects: Vec<SceneObject>,
    pub lights: Vec<PointLight>,
    pub background: Vec3,
    /// Object id carrying [`Albedo::Attacked`].
    pub attacked: Option<u32>,
}

impl Scene {
    /// Builds a scene from world-space meshes; mesh `i` becomes object `i`.
    pub fn new(
        objects: Vec<(String, TriMesh, Material)>,
        lights: Vec<PointLight>,
        background: Vec3,
    ) -> Result<Scene> {
        let mut meshes = Vec::with_capacity(objects.len());
        let mut objs = Vec::with_capacity(objects.len());
        let mut attacked = None;
        for (i, (name, mut mesh, material)) in objects.into_iter().enumerate() {
            mesh.object_id = i as u32;
            if material == Material::Lambertian(Albedo::Attacked) {
                if attacked.is_some() {
                    return Err(Error::Scene("more than one attacked object".into()));
                }
                if !mesh.has_full_uvs() {
                    return Err(Error::Scene(format!(
                        "attacked object {name:?} needs texture coordinates on every triangle"
                    )));
                }
                attacked = Some(i as u32);
            }
            meshes.push(mesh);
            objs.push(SceneObject { name, material });
        }
        let bvh = if meshes.iter().all(|m| m.triangles.is_empty()) {
            None
        } else {
            Some(Bvh::build(&meshes)?)
        };
        Ok(Scene {
            bvh,
            objects: objs,
            lights,
            background,
            attacked,
        })
    }

    /// Loads meshes and textures (paths relative to `base_dir`) and returns the
    /// scene with the attacked object's initial texture.
    pub fn from_scenario(s: &Scenario, base_dir: &Path) -> Result<(Scene, Texture)> {
        let mut objects = Vec::new();
        let mut initial = None;
        for o in &s.scene.objects {
            let mesh = match &o.geometry {
                GeometrySpec::Box { size } => geom::make_box(*size)?,
                GeometrySpec::Plane { extent } => geom::make_plane(*extent)?,
                GeometrySpec::UvSphere { radius, n_lat, n_lon } => {
                    geom::make_uv_sphere(*radius, *n_lat, *n_lon)?
                }
                GeometrySpec::Obj { path } => {
                    let full = base_dir.join(path);
                    let text = std::fs::read_to_string(&full).map_err(|e| Error::Io {
                        path: full.display().to_string(),
                        source: e,
                    })?;
                    geom::load_obj(&text)?
                }
            };
            let t = &o.transform;
            let mesh = mesh.transformed(&Transform::from_trs(t.translate, t.rotate_euler_deg, t.scale));
            let material = match o.material.kind {
                MaterialKind::Mirror => Material::Mirror,
                MaterialKind::Dielectric => Material::Dielectric {
                    ior: o.material.ior.expect("validated"),
                },
                MaterialKind::Lambertian => {
                    let albedo = match o.material.albedo.as_ref().expect("validated") {
                        AlbedoSpec::Constant(c) => Albedo::Constant(*c),
                        AlbedoSpec::Texture(r) => {
                            let tex = match &r.source {
                                TextureSource::Init(c) => Texture::uniform(r.width, r.height, *c),
                                TextureSource::Path(p) => {
                                    let full = base_dir.join(p);
                                    let bytes = std::fs::read(&full).map_err(|e| Error::Io {
                                        path: full.display().to_string(),
                                        source: e,
                                    })?;
                                    let tex = formats::decode_texture_raw(&bytes)?;
                                    if (tex.width, tex.height) != (r.width, r.height) {
                                        return Err(Error::Scene(format!(
                                            "{p}: texture is {}x{}, scenario declares {}x{}",
                                            tex.width, tex.height, r.width, r.height
                                        )));
                                    }
                                    tex
                                }
                            };
                            if !tex.is_valid() {
                                return Err(Error::Scene(format!(
                                    "texture of {:?} has values outside [0, 1]",
                                    o.name
                                )));
                            }
                            if o.name == s.attack.attackable {
                                initial = Some(tex);
                                Albedo::Attacked
                            } else {
                                Albedo::Texture(tex)
                            }
                        }
                    };
                    Material::Lambertian(albedo)
                }
            };
            objects.push((o.name.clone(), mesh, material));
        }
        let lights = s
            .scene
            .lights
            .iter()
            .map(|l| PointLight {
                position: l.position,
                intensity: Vec3::from_array(l.intensity),
            })
            .collect();
        let scene = Scene::new(objects, lights, Vec3::from_array(s.scene.background))?;
        let initial = initial.ok_or_else(|| Error::Scene("attacked object has no texture".into()))?;
        Ok((scene, initial))
    }
}
