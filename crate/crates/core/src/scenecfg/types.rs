use crate::geom::Vec3;

pub type Rgb = [f64; 3];

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub scene: SceneSpec,
    pub attack: AttackSpec,
    pub victim: VictimSpec,
    pub render: RenderSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub background: Rgb,
    pub camera: CameraSpec,
    pub lights: Vec<LightSpec>,
    pub objects: Vec<ObjectSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CameraSpec {
    pub eye: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    pub fov_deg: f64,
    pub width: u32,
    pub height: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectSpec {
    pub name: String,
    pub geometry: GeometrySpec,
    pub transform: TransformSpec,
    pub material: MaterialSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GeometrySpec {
    Obj { path: String },
    Box { size: Vec3 },
    Plane { extent: f64 },
    UvSphere { radius: f64, n_lat: u32, n_lon: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransformSpec {
    pub translate: Vec3,
    pub rotate_euler_deg: Vec3,
    pub scale: Vec3,
}

impl Default for TransformSpec {
    fn default() -> Self {
        Self {
            translate: Vec3::ZERO,
            rotate_euler_deg: Vec3::ZERO,
            scale: Vec3::ONE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaterialKind {
    Lambertian,
    Mirror,
    Dielectric,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaterialSpec {
    pub kind: MaterialKind,
    pub albedo: Option<AlbedoSpec>,
    pub ior: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum AlbedoSpec {
    Constant(Rgb),
    Texture(TextureRef),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TextureRef {
    pub source: TextureSource,
    pub width: u32,
    pub height: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TextureSource {
    /// An `ATX1` texture file, relative to the scenario file.
    Path(String),
    /// Uniform initial color.
    Init(Rgb),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LightSpec {
    pub position: Vec3,
    pub intensity: Rgb,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttackMode {
    Targeted,
    Untargeted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    L2,
    Linf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViewMode {
    Single,
    Orbit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ViewsSpec {
    pub mode: ViewMode,
    pub count: u32,
    pub radius: Option<f64>,
    pub elevation_deg: Option<f64>,
    pub center: Option<Vec3>,
}

impl Default for ViewsSpec {
    fn default() -> Self {
        Self {
            mode: ViewMode::Single,
            count: 1,
            radius: None,
            elevation_deg: None,
            center: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackSpec {
    /// Name of the object whose texture is optimized.
    pub attackable: String,
    pub mode: AttackMode,
    pub target_class: Option<usize>,
    pub norm: Norm,
    pub epsilon: f64,
    pub alpha: f64,
    pub iterations: u32,
    pub patience: u32,
    pub views: ViewsSpec,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VictimKind {
    Cnn,
    Linear,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VictimSpec {
    pub kind: VictimKind,
    pub weights_path: String,
    /// (height, width)
    pub input_size: (u32, u32),
    pub classes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderSpec {
    pub max_depth: u32,
    pub samples_per_pixel: u32,
    pub shadows: bool,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            max_depth: 4,
            samples_per_pixel: 1,
            shadows: true,
        }
    }
}

pub const DEFAULT_PATIENCE: u32 = 5;

impl Scenario {
    pub fn object_index(&self, name: &str) -> Option<usize> {
        self.scene.objects.iter().position(|o| o.name == name)
    }

    pub fn attacked_object(&self) -> &ObjectSpec {
        &self.scene.objects[self.object_index(&self.attack.attackable).expect("validated")]
    }
}
