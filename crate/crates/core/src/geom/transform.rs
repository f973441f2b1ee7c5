use super::vec3::{vec3, Vec3};

type Mat4 = [[f64; 4]; 4];

/// Affine transform with its inverse, composed as
/// `translate · rotZ · rotY · rotX · scale` (Euler angles in degrees,
/// applied X first).
#[derive(Clone, Debug, PartialEq)]
pub struct Transform {
    pub matrix: Mat4,
    pub inverse: Mat4,
}

const IDENTITY: Mat4 = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

fn mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn translation(t: Vec3) -> Mat4 {
    let mut m = IDENTITY;
    m[0][3] = t.x;
    m[1][3] = t.y;
    m[2][3] = t.z;
    m
}

fn scaling(s: Vec3) -> Mat4 {
    let mut m = IDENTITY;
    m[0][0] = s.x;
    m[1][1] = s.y;
    m[2][2] = s.z;
    m
}

fn rotation(axis: usize, deg: f64) -> Mat4 {
    let (s, c) = deg.to_radians().sin_cos();
    let (a, b) = match axis {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    let mut m = IDENTITY;
    m[a][a] = c;
    m[a][b] = -s;
    m[b][a] = s;
    m[b][b] = c;
    m
}

impl Default for Transform {
    fn default() -> Self {
        Self::identity()
    }
}

impl Transform {
    pub fn identity() -> Self {
        Self {
            matrix: IDENTITY,
            inverse: IDENTITY,
        }
    }

    /// Panics if a scale component is zero; scenario validation rejects that earlier.
    pub fn from_trs(translate: Vec3, rotate_euler_deg: Vec3, scale: Vec3) -> Self {
        assert!(
            scale.x != 0.0 && scale.y != 0.0 && scale.z != 0.0,
            "zero scale component"
        );
        let r = rotate_euler_deg;
        let matrix = [
            translation(translate),
            rotation(2, r.z),
            rotation(1, r.y),
            rotation(0, r.x),
            scaling(scale),
        ]
        .iter()
        .fold(IDENTITY, |acc, m| mul(&acc, m));
        let inverse = [
            scaling(vec3(1.0 / scale.x, 1.0 / scale.y, 1.0 / scale.z)),
            rotation(0, -r.x),
            rotation(1, -r.y),
            rotation(2, -r.z),
            translation(-translate),
        ]
        .iter()
        .fold(IDENTITY, |acc, m| mul(&acc, m));
        Self { matrix, inverse }
    }

    fn apply(m: &Mat4, p: Vec3, w: f64) -> Vec3 {
        vec3(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z + m[0][3] * w,
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z + m[1][3] * w,
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z + m[2][3] * w,
        )
    }

    pub fn point(&self, p: Vec3) -> Vec3 {
        Self::apply(&self.matrix, p, 1.0)
    }

    pub fn vector(&self, v: Vec3) -> Vec3 {
        Self::apply(&self.matrix, v, 0.0)
    }

    pub fn inverse_point(&self, p: Vec3) -> Vec3 {
        Self::apply(&self.inverse, p, 1.0)
    }

    /// Normals transform by the inverse transpose; the result is renormalized.
    pub fn normal(&self, n: Vec3) -> Vec3 {
        let m = &self.inverse;
        vec3(
            m[0][0] * n.x + m[1][0] * n.y + m[2][0] * n.z,
            m[0][1] * n.x + m[1][1] * n.y + m[2][1] * n.z,
            m[0][2] * n.x + m[1][2] * n.y + m[2][2] * n.z,
        )
        .normalize()
    }

    /// True if the linear part flips orientation (odd number of negative scales).
    pub fn flips_handedness(&self) -> bool {
        let m = &self.matrix;
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        det < 0.0
    }

    pub fn product_with_inverse(&self) -> Mat4 {
        mul(&self.matrix, &self.inverse)
    }
}
