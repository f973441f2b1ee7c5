//! Typed decoding of a document tree into a [`Scenario`], validation, and the
//! canonical encoding back to a tree.

use super::document::{Node, NodeKind};
use super::types::*;
use super::ConfigError;
use crate::geom::{vec3, Vec3};

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn type_err(node: &Node, path: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Type {
        path: path.to_string(),
        line: node.line,
        col: node.col,
        msg: msg.into(),
    }
}

fn invalid(path: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        path: path.to_string(),
        msg: msg.into(),
    }
}

/// A map being consumed key by key; leftover keys are reported as unknown.
struct MapReader<'a> {
    path: String,
    entries: &'a [(String, Node)],
    used: Vec<bool>,
}

impl<'a> MapReader<'a> {
    fn new(node: &'a Node, path: &str) -> Result<Self, ConfigError> {
        match &node.kind {
            NodeKind::Map(entries) => Ok(Self {
                path: path.to_string(),
                entries,
                used: vec![false; entries.len()],
            }),
            _ => Err(type_err(node, path, "expected a map")),
        }
    }

    fn opt(&mut self, key: &str) -> Option<(&'a Node, String)> {
        let i = self.entries.iter().position(|(k, _)| k == key)?;
        self.used[i] = true;
        Some((&self.entries[i].1, join(&self.path, key)))
    }

    fn req(&mut self, key: &str) -> Result<(&'a Node, String), ConfigError> {
        self.opt(key).ok_or_else(|| ConfigError::MissingKey {
            path: join(&self.path, key),
        })
    }

    fn has(&self, key: &str) -> bool {
        self.entries.iter().any(|(k, _)| k == key)
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.used.iter().position(|u| !u) {
            Some(i) => {
                let (k, n) = &self.entries[i];
                Err(ConfigError::UnknownKey {
                    path: join(&self.path, k),
                    line: n.line,
                    col: n.col,
                })
            }
            None => Ok(()),
        }
    }
}

fn scalar<'a>(node: &'a Node, path: &str) -> Result<(&'a str, bool), ConfigError> {
    match &node.kind {
        NodeKind::Scalar { text, quoted } => Ok((text, *quoted)),
        _ => Err(type_err(node, path, "expected a scalar")),
    }
}

fn f64_of(node: &Node, path: &str) -> Result<f64, ConfigError> {
    let (text, quoted) = scalar(node, path)?;
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite() && !quoted)
        .ok_or_else(|| type_err(node, path, format!("expected a finite number, found {text:?}")))
}

fn u64_of(node: &Node, path: &str) -> Result<u64, ConfigError> {
    let (text, quoted) = scalar(node, path)?;
    text.parse::<u64>()
        .ok()
        .filter(|_| !quoted)
        .ok_or_else(|| type_err(node, path, format!("expected a non-negative integer, found {text:?}")))
}

fn u32_of(node: &Node, path: &str) -> Result<u32, ConfigError> {
    let v = u64_of(node, path)?;
    u32::try_from(v).map_err(|_| type_err(node, path, format!("integer {v} too large")))
}

fn bool_of(node: &Node, path: &str) -> Result<bool, ConfigError> {
    match scalar(node, path)? {
        ("true", false) => Ok(true),
        ("false", false) => Ok(false),
        (text, _) => Err(type_err(node, path, format!("expected true or false, found {text:?}"))),
    }
}

fn string_of(node: &Node, path: &str) -> Result<String, ConfigError> {
    Ok(scalar(node, path)?.0.to_string())
}

fn list_of<'a>(node: &'a Node, path: &str) -> Result<&'a [Node], ConfigError> {
    match &node.kind {
        NodeKind::List(items) => Ok(items),
        _ => Err(type_err(node, path, "expected a list")),
    }
}

fn floats<const N: usize>(node: &Node, path: &str) -> Result<[f64; N], ConfigError> {
    let items = list_of(node, path)?;
    if items.len() != N {
        return Err(type_err(node, path, format!("expected {N} numbers, found {}", items.len())));
    }
    let mut out = [0.0; N];
    for (i, n) in items.iter().enumerate() {
        out[i] = f64_of(n, &format!("{path}.{i}"))?;
    }
    Ok(out)
}

fn vec3_of(node: &Node, path: &str) -> Result<Vec3, ConfigError> {
    floats::<3>(node, path).map(Vec3::from_array)
}

fn enum_of<T: Copy>(node: &Node, path: &str, options: &[(&str, T)]) -> Result<T, ConfigError> {
    let (text, _) = scalar(node, path)?;
    options
        .iter()
        .find(|(name, _)| *name == text)
        .map(|(_, v)| *v)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            type_err(node, path, format!("expected one of {names:?}, found {text:?}"))
        })
}

const MATERIAL_KINDS: [(&str, MaterialKind); 3] = [
    ("lambertian", MaterialKind::Lambertian),
    ("mirror", MaterialKind::Mirror),
    ("dielectric", MaterialKind::Dielectric),
];
const ATTACK_MODES: [(&str, AttackMode); 2] = [
    ("targeted", AttackMode::Targeted),
    ("untargeted", AttackMode::Untargeted),
];
const NORMS: [(&str, Norm); 2] = [("l2", Norm::L2), ("linf", Norm::Linf)];
const VIEW_MODES: [(&str, ViewMode); 2] = [("single", ViewMode::Single), ("orbit", ViewMode::Orbit)];
const VICTIM_KINDS: [(&str, VictimKind); 2] = [("cnn", VictimKind::Cnn), ("linear", VictimKind::Linear)];

fn name_of<T: PartialEq + Copy>(options: &[(&'static str, T)], v: T) -> &'static str {
    options.iter().find(|(_, o)| *o == v).unwrap().0
}

/// Target class as written in the file: an index or a class name.
enum TargetRef {
    Index(usize),
    Name(String, String),
}

pub fn decode(root: &Node) -> Result<Scenario, ConfigError> {
    let mut r = MapReader::new(root, "")?;
    let (n, p) = r.req("scene")?;
    let scene = decode_scene(n, &p)?;
    let (n, p) = r.req("victim")?;
    let victim = decode_victim(n, &p)?;
    let (n, p) = r.req("attack")?;
    let (mut attack, target) = decode_attack(n, &p)?;
    let render = match r.opt("render") {
        Some((n, p)) => decode_render(n, &p)?,
        None => RenderSpec::default(),
    };
    r.finish()?;
    attack.target_class = match target {
        None => None,
        Some(TargetRef::Index(i)) => Some(i),
        Some(TargetRef::Name(name, path)) => Some(
            victim
                .classes
                .iter()
                .position(|c| *c == name)
                .ok_or_else(|| invalid(&path, format!("unknown class name {name:?}")))?,
        ),
    };
    let s = Scenario {
        scene,
        attack,
        victim,
        render,
    };
    validate(&s)?;
    Ok(s)
}

fn decode_scene(node: &Node, path: &str) -> Result<SceneSpec, ConfigError> {
    let mut r = MapReader::new(node, path)?;
    let background = match r.opt("background") {
        Some((n, p)) => floats::<3>(n, &p)?,
        None => [0.0; 3],
    };
    let (n, p) = r.req("camera")?;
    let camera = decode_camera(n, &p)?;
    let lights = match r.opt("lights") {
        Some((n, p)) => list_of(n, &p)?
            .iter()
            .enumerate()
            .map(|(i, l)| decode_light(l, &format!("{p}.{i}")))
            .collect::<Result<_, _>>()?,
        None => Vec::new(),
    };
    let (n, p) = r.req("objects")?;
    let objects = list_of(n, &p)?
        .iter()
        .enumerate()
        .map(|(i, o)| decode_object(o, &format!("{p}.{i}")))
        .collect::<Result<_, _>>()?;
    r.finish()?;
    Ok(SceneSpec {
        background,
        camera,
        lights,
        objects,
    })
}

fn decode_camera(node: &Node, path: &str) -> Result<CameraSpec, ConfigError> {
    let mut r = MapReader::new(node, path)?;
    let cam = CameraSpec {
        eye: r.req("eye").and_then(|(n, p)| vec3_of(n, &p))?,
        look_at: r.req("look_at").and_then(|(n, p)| vec3_of(n, &p))?,
        up: match r.opt("up") {
            Some((n, p)) => vec3_of(n, &p)?,
            None => vec3(0.0, 1.0, 0.0),
        },
        fov_deg: r.req("fov_deg").and_then(|(n, p)| f64_of(n, &p))?,
        width: r.req("width").and_then(|(n, p)| u32_of(n, &p))?,
        height: r.req("height").and_then(|(n, p)| u32_of(n, &p))?,
    };
    r.finish()?;
    Ok(cam)
}

fn decode_light(node: &Node, path: &str) -> Result<LightSpec, ConfigError> {
    let mut r = MapReader::new(node, path)?;
    if let Some((n, p)) = r.opt("kind") {
        enum_of(n, &p, &[("point", ())])?;
    }
    let light = LightSpec {
        position: r.req("position").and_then(|(n, p)| vec3_of(n, &p))?,
        intensity: r.req("intensity").and_then(|(n, p)| floats::<3>(n, &p))?,
    };
    r.finish()?;
    Ok(light)
}

fn decode_object(node: &Node, path: &str) -> Result<ObjectSpec, ConfigError> {
    let mut r = MapReader::new(node, path)?;
    let name = r.req("name").and_then(|(n, p)| string_of(n, &p))?;
    let (n, p) = r.req("geometry")?;
    let geometry = decode_geometry(n, &p)?;
    let transform = match r.opt("transform") {
        Some((n, p)) => {
            let mut t = MapReader::new(n, &p)?;
            let d = TransformSpec::default();
            let out = TransformSpec {
                translate: t.opt("translate").map_or(Ok(d.translate), |(n, p)| vec3_of(n, &p))?,
                rotate_euler_deg: t
                    .opt("rotate_euler_deg")
                    .map_or(Ok(d.rotate_euler_deg), |(n, p)| vec3_of(n, &p))?,
                scale: t.opt("scale").map_or(Ok(d.scale), |(n, p)| vec3_of(n, &p))?,
            };
            t.finish()?;
            out
        }
        None => TransformSpec::default(),
    };
    let (n, p) = r.req("material")?;
    let material = decode_material(n, &p)?;
    r.finish()?;
    Ok(ObjectSpec {
        name,
        geometry,
        transform,
        material,
    })
}

fn decode_geometry(node: &Node, path: &str) -> Result<GeometrySpec, ConfigError> {
    let mut r = MapReader::new(node, path)?;
    let g = if r.has("obj_path") {
        let (n, p) = r.req("obj_path")?;
        GeometrySpec::Obj {
            path: string_of(n, &p)?,
        }
    } else {
        let (n, p) = r.req("primitive")?;
        let kind = enum_of(n, &p, &[("box", 0), ("plane", 1), ("uv_sphere", 2)])?;
        match kind {
            0 => GeometrySpec::Box {
                size: r.req("size").and_then(|(n, p)| vec3_of(n, &p))?,
            },
            1 => GeometrySpec::Plane {
                extent: r.req("extent").and_then(|(n, p)| f64_of(n, &p))?,
            },
            _ => GeometrySpec::UvSphere {
                radius: r.req("radius").and_then(|(n, p)| f64_of(n, &p))?,
                n_lat: r.req("n_lat").and_then(|(n, p)| u32_of(n, &p))?,
                n_lon: r.req("n_lon").and_then(|(n, p)| u32_of(n, &p))?,
            },
        }
    };
    r.finish()?;
    Ok(g)
}

fn decode_material(node: &Node, path: &str) -> Result<MaterialSpec, ConfigError> {
    let mut r = MapReader::new(node, path)?;
    let kind = r.req("kind").and_then(|(n, p)| enum_of(n, &p, &MATERIAL_KINDS))?;
    let albedo = match r.opt("albedo") {
        None => None,
        Some((n, p)) => Some(match &n.kind {
            NodeKind::List(_) => AlbedoSpec::Constant(floats::<3>(n, &p)?),
            _ => {
                let mut t = MapReader::new(n, &p)?;
                let source = match (t.opt("path"), t.opt("init")) {
                    (Some((n, p)), None) => TextureSource::Path(string_of(n, &p)?),
                    (None, Some((n, p))) => TextureSource::Init(floats::<3>(n, &p)?),
                    (Some(_), Some(_)) => {
                        return Err(invalid(&p, "texture takes either `path` or `init`, not both"))
                    }
                    (None, None) => {
                        return Err(ConfigError::MissingKey {
                            path: join(&p, "init"),
                        })
                    }
                };
                let width = t.req("width").and_then(|(n, p)| u32_of(n, &p))?;
                let height = t.req("height").and_then(|(n, p)| u32_of(n, &p))?;
                t.finish()?;
                AlbedoSpec::Texture(TextureRef {
                    source,
                    width,
                    height,
                })
            }
        }),
    };
    let ior = r.opt("ior").map(|(n, p)| f64_of(n, &p)).transpose()?;
    r.finish()?;
    Ok(MaterialSpec { kind, albedo, ior })
}

fn decode_attack(node: &Node, path: &str) -> Result<(AttackSpec, Option<TargetRef>), ConfigError> {
    let mut r = MapReader::new(node, path)?;
    let (n, p) = r.req("attackable")?;
    let attackable = string_of(n, &p)?;
    let attackable = attackable
        .strip_suffix(".texture")
        .filter(|s| !s.is_empty())
        .ok_or_else(|| invalid(&p, format!("attackable must be `<object>.texture`, found {attackable:?}")))?
        .to_string();
    let mode = r.req("mode").and_then(|(n, p)| enum_of(n, &p, &ATTACK_MODES))?;
    let target = match r.opt("target_class") {
        None => None,
        Some((n, p)) => {
            let (text, quoted) = scalar(n, &p)?;
            match text.parse::<usize>() {
                Ok(i) if !quoted => Some(TargetRef::Index(i)),
                _ => Some(TargetRef::Name(text.to_string(), p)),
            }
        }
    };
    let norm = match r.opt("norm") {
        Some((n, p)) => enum_of(n, &p, &NORMS)?,
        None => Norm::L2,
    };
    let epsilon = r.req("epsilon").and_then(|(n, p)| f64_of(n, &p))?;
    let alpha = r.req("alpha").and_then(|(n, p)| f64_of(n, &p))?;
    let iterations = r.req("iterations").and_then(|(n, p)| u32_of(n, &p))?;
    let patience = match r.opt("patience") {
        Some((n, p)) => u32_of(n, &p)?,
        None => DEFAULT_PATIENCE,
    };
    let views = match r.opt("views") {
        Some((n, p)) => {
            let mut v = MapReader::new(n, &p)?;
            let out = ViewsSpec {
                mode: match v.opt("mode") {
                    Some((n, p)) => enum_of(n, &p, &VIEW_MODES)?,
                    None => ViewMode::Single,
                },
                count: v.opt("count").map_or(Ok(1), |(n, p)| u32_of(n, &p))?,
                radius: v.opt("radius").map(|(n, p)| f64_of(n, &p)).transpose()?,
                elevation_deg: v.opt("elevation_deg").map(|(n, p)| f64_of(n, &p)).transpose()?,
                center: v.opt("center").map(|(n, p)| vec3_of(n, &p)).transpose()?,
            };
            v.finish()?;
            out
        }
        None => ViewsSpec::default(),
    };
    let seed = match r.opt("seed") {
        Some((n, p)) => u64_of(n, &p)?,
        None => 0,
    };
    r.finish()?;
    Ok((
        AttackSpec {
            attackable,
            mode,
            target_class: None,
            norm,
            epsilon,
            alpha,
            iterations,
            patience,
            views,
            seed,
        },
        target,
    ))
}

fn decode_victim(node: &Node, path: &str) -> Result<VictimSpec, ConfigError> {
    let mut r = MapReader::new(node, path)?;
    let kind = r.req("kind").and_then(|(n, p)| enum_of(n, &p, &VICTIM_KINDS))?;
    let weights_path = r.req("weights_path").and_then(|(n, p)| string_of(n, &p))?;
    let (n, p) = r.req("input_size")?;
    let size = list_of(n, &p)?;
    if size.len() != 2 {
        return Err(type_err(n, &p, "expected [height, width]"));
    }
    let input_size = (u32_of(&size[0], &format!("{p}.0"))?, u32_of(&size[1], &format!("{p}.1"))?);
    let (n, p) = r.req("classes")?;
    let classes = list_of(n, &p)?
        .iter()
        .enumerate()
        .map(|(i, c)| string_of(c, &format!("{p}.{i}")))
        .collect::<Result<_, _>>()?;
    r.finish()?;
    Ok(VictimSpec {
        kind,
        weights_path,
        input_size,
        classes,
    })
}

fn decode_render(node: &Node, path: &str) -> Result<RenderSpec, ConfigError> {
    let mut r = MapReader::new(node, path)?;
    let d = RenderSpec::default();
    let out = RenderSpec {
        max_depth: r.opt("max_depth").map_or(Ok(d.max_depth), |(n, p)| u32_of(n, &p))?,
        samples_per_pixel: r
            .opt("samples_per_pixel")
            .map_or(Ok(d.samples_per_pixel), |(n, p)| u32_of(n, &p))?,
        shadows: r.opt("shadows").map_or(Ok(d.shadows), |(n, p)| bool_of(n, &p))?,
    };
    r.finish()?;
    Ok(out)
}

fn check(cond: bool, path: &str, msg: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(invalid(path, msg()))
    }
}

fn in_unit(c: &Rgb) -> bool {
    c.iter().all(|v| (0.0..=1.0).contains(v))
}

pub fn validate(s: &Scenario) -> Result<(), ConfigError> {
    let scene = &s.scene;
    check(
        scene.background.iter().all(|v| *v >= 0.0),
        "scene.background",
        || "background must be non-negative".into(),
    )?;
    validate_camera(&scene.camera, "scene.camera")?;
    for (i, l) in scene.lights.iter().enumerate() {
        check(
            l.intensity.iter().all(|v| *v >= 0.0),
            &format!("scene.lights.{i}.intensity"),
            || "light intensity must be non-negative".into(),
        )?;
    }
    check(!scene.objects.is_empty(), "scene.objects", || "at least one object is required".into())?;
    for (i, o) in scene.objects.iter().enumerate() {
        let p = format!("scene.objects.{i}");
        check(!o.name.is_empty(), &format!("{p}.name"), || "empty object name".into())?;
        check(
            scene.objects[..i].iter().all(|q| q.name != o.name),
            &format!("{p}.name"),
            || format!("duplicate object name {:?}", o.name),
        )?;
        let s3 = o.transform.scale;
        check(s3.x != 0.0 && s3.y != 0.0 && s3.z != 0.0, &format!("{p}.transform.scale"), || {
            "scale components must be nonzero".into()
        })?;
        match &o.geometry {
            GeometrySpec::Box { size } => check(
                size.x > 0.0 && size.y > 0.0 && size.z > 0.0,
                &format!("{p}.geometry.size"),
                || "box size must be positive".into(),
            )?,
            GeometrySpec::Plane { extent } => {
                check(*extent > 0.0, &format!("{p}.geometry.extent"), || "plane extent must be positive".into())?
            }
            GeometrySpec::UvSphere { radius, n_lat, n_lon } => {
                check(*radius > 0.0, &format!("{p}.geometry.radius"), || "radius must be positive".into())?;
                check(*n_lat >= 3 && *n_lon >= 3, &format!("{p}.geometry"), || {
                    "sphere tessellation must be at least 3 x 3".into()
                })?;
            }
            GeometrySpec::Obj { path } => {
                check(!path.is_empty(), &format!("{p}.geometry.obj_path"), || "empty path".into())?
            }
        }
        let m = &o.material;
        let mp = format!("{p}.material");
        match (m.kind, &m.albedo) {
            (MaterialKind::Lambertian, None) => {
                return Err(ConfigError::MissingKey {
                    path: format!("{mp}.albedo"),
                })
            }
            (MaterialKind::Lambertian, Some(AlbedoSpec::Constant(c))) => {
                check(in_unit(c), &format!("{mp}.albedo"), || "albedo must lie in [0, 1]".into())?
            }
            (MaterialKind::Lambertian, Some(AlbedoSpec::Texture(t))) => {
                check(t.width > 0 && t.height > 0, &format!("{mp}.albedo"), || {
                    "texture dimensions must be positive".into()
                })?;
                if let TextureSource::Init(c) = &t.source {
                    check(in_unit(c), &format!("{mp}.albedo.init"), || "texture init must lie in [0, 1]".into())?;
                }
            }
            (_, Some(_)) => {
                return Err(invalid(&format!("{mp}.albedo"), "albedo is only valid for lambertian materials"))
            }
            (_, None) => {}
        }
        match (m.kind, m.ior) {
            (MaterialKind::Dielectric, Some(ior)) => {
                check(ior > 1.0, &format!("{mp}.ior"), || format!("ior must exceed 1, found {ior}"))?
            }
            (MaterialKind::Dielectric, None) => {
                return Err(ConfigError::MissingKey {
                    path: format!("{mp}.ior"),
                })
            }
            (_, Some(_)) => return Err(invalid(&format!("{mp}.ior"), "ior is only valid for dielectric materials")),
            (_, None) => {}
        }
    }

    let a = &s.attack;
    let target = s
        .object_index(&a.attackable)
        .ok_or_else(|| invalid("attack.attackable", format!("unknown attackable object {:?}", a.attackable)))?;
    let m = &scene.objects[target].material;
    check(
        m.kind == MaterialKind::Lambertian && matches!(m.albedo, Some(AlbedoSpec::Texture(_))),
        "attack.attackable",
        || format!("object {:?} does not have a textured lambertian material", a.attackable),
    )?;
    check(!s.victim.classes.is_empty(), "victim.classes", || "at least one class is required".into())?;
    match (a.mode, a.target_class) {
        (AttackMode::Targeted, None) => {
            return Err(ConfigError::MissingKey {
                path: "attack.target_class".into(),
            })
        }
        (AttackMode::Targeted, Some(t)) => check(t < s.victim.classes.len(), "attack.target_class", || {
            format!("target class {t} out of range for {} classes", s.victim.classes.len())
        })?,
        (AttackMode::Untargeted, Some(_)) => {
            return Err(invalid("attack.target_class", "target_class is only valid for targeted attacks"))
        }
        (AttackMode::Untargeted, None) => {}
    }
    check(a.epsilon > 0.0, "attack.epsilon", || "epsilon must be positive".into())?;
    check(a.alpha > 0.0, "attack.alpha", || "alpha must be positive".into())?;
    check(a.iterations >= 1, "attack.iterations", || "iterations must be at least 1".into())?;
    check(a.patience >= 1, "attack.patience", || "patience must be at least 1".into())?;
    let v = &a.views;
    check(v.count >= 1, "attack.views.count", || "view count must be at least 1".into())?;
    if v.mode == ViewMode::Orbit {
        check(v.radius.is_some_and(|r| r > 0.0), "attack.views.radius", || {
            "orbit views need a positive radius".into()
        })?;
        check(
            v.elevation_deg.unwrap_or(0.0).abs() < 90.0,
            "attack.views.elevation_deg",
            || "elevation must lie strictly between -90 and 90 degrees".into(),
        )?;
    }

    let (h, w) = s.victim.input_size;
    check(h >= 8 && w >= 8, "victim.input_size", || format!("input size ({h}, {w}) below (8, 8)"))?;
    check(!s.victim.weights_path.is_empty(), "victim.weights_path", || "empty path".into())?;
    check(s.render.max_depth >= 1, "render.max_depth", || "max_depth must be at least 1".into())?;
    check(s.render.samples_per_pixel >= 1, "render.samples_per_pixel", || {
        "samples_per_pixel must be at least 1".into()
    })?;
    Ok(())
}

pub fn validate_camera(c: &CameraSpec, path: &str) -> Result<(), ConfigError> {
    check(c.fov_deg > 0.0 && c.fov_deg < 180.0, &format!("{path}.fov_deg"), || {
        format!("fov {} outside (0, 180)", c.fov_deg)
    })?;
    check(c.width > 0 && c.height > 0, path, || "image size must be positive".into())?;
    let forward = c.look_at - c.eye;
    check(forward.length() > 0.0, &format!("{path}.look_at"), || "eye and look_at coincide".into())?;
    check(
        forward.normalize().cross(c.up.normalize()).length() > 1e-9,
        &format!("{path}.up"),
        || "up is parallel to the view direction".into(),
    )
}

fn num(v: f64) -> Node {
    Node::scalar(format!("{v}"))
}

fn int(v: impl std::fmt::Display) -> Node {
    Node::scalar(v.to_string())
}

fn nums(v: &[f64]) -> Node {
    Node::list(v.iter().map(|x| num(*x)).collect())
}

fn v3(v: Vec3) -> Node {
    nums(&v.to_array())
}

pub fn encode(s: &Scenario) -> Node {
    let c = &s.scene.camera;
    let camera = Node::map(vec![
        ("eye", v3(c.eye)),
        ("look_at", v3(c.look_at)),
        ("up", v3(c.up)),
        ("fov_deg", num(c.fov_deg)),
        ("width", int(c.width)),
        ("height", int(c.height)),
    ]);
    let lights = s
        .scene
        .lights
        .iter()
        .map(|l| {
            Node::map(vec![
                ("kind", Node::scalar("point")),
                ("position", v3(l.position)),
                ("intensity", nums(&l.intensity)),
            ])
        })
        .collect();
    let objects = s.scene.objects.iter().map(encode_object).collect();
    let scene = Node::map(vec![
        ("background", nums(&s.scene.background)),
        ("camera", camera),
        ("lights", Node::list(lights)),
        ("objects", Node::list(objects)),
    ]);

    let a = &s.attack;
    let mut attack = vec![
        ("attackable", Node::string(format!("{}.texture", a.attackable))),
        ("mode", Node::scalar(name_of(&ATTACK_MODES, a.mode))),
    ];
    if let Some(t) = a.target_class {
        attack.push(("target_class", int(t)));
    }
    let mut views = vec![
        ("mode", Node::scalar(name_of(&VIEW_MODES, a.views.mode))),
        ("count", int(a.views.count)),
    ];
    if let Some(r) = a.views.radius {
        views.push(("radius", num(r)));
    }
    if let Some(e) = a.views.elevation_deg {
        views.push(("elevation_deg", num(e)));
    }
    if let Some(c) = a.views.center {
        views.push(("center", v3(c)));
    }
    attack.extend([
        ("norm", Node::scalar(name_of(&NORMS, a.norm))),
        ("epsilon", num(a.epsilon)),
        ("alpha", num(a.alpha)),
        ("iterations", int(a.iterations)),
        ("patience", int(a.patience)),
        ("views", Node::map(views)),
        ("seed", int(a.seed)),
    ]);

    let v = &s.victim;
    let victim = Node::map(vec![
        ("kind", Node::scalar(name_of(&VICTIM_KINDS, v.kind))),
        ("weights_path", Node::string(v.weights_path.clone())),
        ("input_size", Node::list(vec![int(v.input_size.0), int(v.input_size.1)])),
        ("classes", Node::list(v.classes.iter().map(|c| Node::string(c.clone())).collect())),
    ]);
    let render = Node::map(vec![
        ("max_depth", int(s.render.max_depth)),
        ("samples_per_pixel", int(s.render.samples_per_pixel)),
        ("shadows", Node::scalar(if s.render.shadows { "true" } else { "false" })),
    ]);
    Node::map(vec![
        ("scene", scene),
        ("attack", Node::map(attack)),
        ("victim", victim),
        ("render", render),
    ])
}

fn encode_object(o: &ObjectSpec) -> Node {
    let geometry = match &o.geometry {
        GeometrySpec::Obj { path } => Node::map(vec![("obj_path", Node::string(path.clone()))]),
        GeometrySpec::Box { size } => Node::map(vec![("primitive", Node::scalar("box")), ("size", v3(*size))]),
        GeometrySpec::Plane { extent } => {
            Node::map(vec![("primitive", Node::scalar("plane")), ("extent", num(*extent))])
        }
        GeometrySpec::UvSphere { radius, n_lat, n_lon } => Node::map(vec![
            ("primitive", Node::scalar("uv_sphere")),
            ("radius", num(*radius)),
            ("n_lat", int(n_lat)),
            ("n_lon", int(n_lon)),
        ]),
    };
    let t = &o.transform;
    let transform = Node::map(vec![
        ("translate", v3(t.translate)),
        ("rotate_euler_deg", v3(t.rotate_euler_deg)),
        ("scale", v3(t.scale)),
    ]);
    let m = &o.material;
    let mut material = vec![("kind", Node::scalar(name_of(&MATERIAL_KINDS, m.kind)))];
    match &m.albedo {
        Some(AlbedoSpec::Constant(c)) => material.push(("albedo", nums(c))),
        Some(AlbedoSpec::Texture(t)) => {
            let source = match &t.source {
                TextureSource::Path(p) => ("path", Node::string(p.clone())),
                TextureSource::Init(c) => ("init", nums(c)),
            };
            material.push((
                "albedo",
                Node::map(vec![source, ("width", int(t.width)), ("height", int(t.height))]),
            ));
        }
        None => {}
    }
    if let Some(ior) = m.ior {
        material.push(("ior", num(ior)));
    }
    Node::map(vec![
        ("name", Node::string(o.name.clone())),
        ("geometry", geometry),
        ("transform", transform),
        ("material", Node::map(material)),
    ])
}
