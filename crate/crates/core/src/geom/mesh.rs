use super::transform::Transform;
use super::vec3::{vec3, Point3, Vec3};
use super::GeomError;

/// Per-corner attribute indices of one triangle (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TriIndices {
    pub pos: [u32; 3],
    pub uv: Option<[u32; 3]>,
    pub normal: Option<[u32; 3]>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriMesh {
    pub positions: Vec<Point3>,
    pub normals: Vec<Vec3>,
    pub uvs: Vec<[f64; 2]>,
    pub triangles: Vec<TriIndices>,
    pub object_id: u32,
}

impl TriMesh {
    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn has_full_uvs(&self) -> bool {
        self.triangles.iter().all(|t| t.uv.is_some())
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        let check = |idx: &[u32; 3], len: usize, what: &str| {
            if idx.iter().any(|&i| i as usize >= len) {
                Err(GeomError::IndexOutOfRange(format!(
                    "{what} index {idx:?} exceeds {len}"
                )))
            } else {
                Ok(())
            }
        };
        for t in &self.triangles {
            check(&t.pos, self.positions.len(), "position")?;
            if let Some(uv) = &t.uv {
                check(uv, self.uvs.len(), "uv")?;
            }
            if let Some(n) = &t.normal {
                check(n, self.normals.len(), "normal")?;
            }
        }
        Ok(())
    }

    /// Returns a copy moved into world space. Winding is reversed when the
    /// transform mirrors, so geometric normals keep pointing outward.
    pub fn transformed(&self, xf: &Transform) -> TriMesh {
        let flip = xf.flips_handedness();
        let swap = |a: [u32; 3]| if flip { [a[0], a[2], a[1]] } else { a };
        TriMesh {
            positions: self.positions.iter().map(|&p| xf.point(p)).collect(),
            normals: self.normals.iter().map(|&n| xf.normal(n)).collect(),
            uvs: self.uvs.clone(),
            triangles: self
                .triangles
                .iter()
                .map(|t| TriIndices {
                    pos: swap(t.pos),
                    uv: t.uv.map(swap),
                    normal: t.normal.map(swap),
                })
                .collect(),
            object_id: self.object_id,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), GeomError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(GeomError::NonPositive(format!("{name} = {v}")))
    }
}

/// Builds a mesh where every attribute shares the position index.
fn indexed(
    positions: Vec<Point3>,
    normals: Vec<Vec3>,
    uvs: Vec<[f64; 2]>,
    tris: Vec<[u32; 3]>,
) -> TriMesh {
    TriMesh {
        triangles: tris
            .into_iter()
            .map(|t| TriIndices {
                pos: t,
                uv: Some(t),
                normal: Some(t),
            })
            .collect(),
        positions,
        normals,
        uvs,
        object_id: 0,
    }
}

/// Axis-aligned box centred at the origin. Each face has its own four
/// vertices and maps to the full [0,1]² texture square.
pub fn make_box(size: Vec3) -> Result<TriMesh, GeomError> {
    positive("box x", size.x)?;
    positive("box y", size.y)?;
    positive("box z", size.z)?;
    let h = size * 0.5;
    // (normal, u axis, v axis); u × v = normal so corners wind CCW seen from outside.
    let faces = [
        (vec3(1.0, 0.0, 0.0), vec3(0.0, 0.0, -1.0), vec3(0.0, 1.0, 0.0)),
        (vec3(-1.0, 0.0, 0.0), vec3(0.0, 0.0, 1.0), vec3(0.0, 1.0, 0.0)),
        (vec3(0.0, 1.0, 0.0), vec3(1.0, 0.0, 0.0), vec3(0.0, 0.0, -1.0)),
        (vec3(0.0, -1.0, 0.0), vec3(1.0, 0.0, 0.0), vec3(0.0, 0.0, 1.0)),
        (vec3(0.0, 0.0, 1.0), vec3(1.0, 0.0, 0.0), vec3(0.0, 1.0, 0.0)),
        (vec3(0.0, 0.0, -1.0), vec3(-1.0, 0.0, 0.0), vec3(0.0, 1.0, 0.0)),
    ];
    let mut positions = Vec::with_capacity(24);
    let mut normals = Vec::with_capacity(24);
    let mut uvs = Vec::with_capacity(24);
    let mut tris = Vec::with_capacity(12);
    for (n, u, v) in faces {
        let base = positions.len() as u32;
        // Corners at (s, t) in {0,1}²; texture row 0 (v = 0) is at the top of the face.
        for (s, t) in [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)] {
            let local = n + u * (2.0 * s - 1.0) + v * (1.0 - 2.0 * t);
            positions.push(local.mul_elem(h));
            normals.push(n);
            uvs.push([s, t]);
        }
        // (s,t) order above runs clockwise in (u, v) space, so wind 0,2,1 / 0,3,2.
        tris.push([base, base + 2, base + 1]);
        tris.push([base, base + 3, base + 2]);
    }
    Ok(indexed(positions, normals, uvs, tris))
}

/// Square in the y = 0 plane with side `extent`, facing +y.
pub fn make_plane(extent: f64) -> Result<TriMesh, GeomError> {
    positive("plane extent", extent)?;
    let h = extent * 0.5;
    let positions = vec![
        vec3(-h, 0.0, -h),
        vec3(h, 0.0, -h),
        vec3(h, 0.0, h),
        vec3(-h, 0.0, h),
    ];
    let normals = vec![vec3(0.0, 1.0, 0.0); 4];
    let uvs = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    Ok(indexed(positions, normals, uvs, vec![[0, 2, 1], [0, 3, 2]]))
}

/// Latitude/longitude sphere with equirectangular UVs. Caps are triangle
/// fans; each fan triangle gets its own pole vertex so the pole UV sits at
/// the middle of its longitude segment.
pub fn make_uv_sphere(radius: f64, n_lat: u32, n_lon: u32) -> Result<TriMesh, GeomError> {
    positive("sphere radius", radius)?;
    if n_lat < 3 || n_lon < 3 {
        return Err(GeomError::NonPositive(format!(
            "sphere tessellation ({n_lat}, {n_lon}) below (3, 3)"
        )));
    }
    let mut positions = Vec::new();
    let mut normals = Vec::new();
    let mut uvs = Vec::new();
    let mut push = |theta: f64, phi: f64, u: f64, v: f64| {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let n = vec3(st * cp, ct, -st * sp);
        positions.push(n * radius);
        normals.push(n);
        uvs.push([u, v]);
        positions.len() as u32 - 1
    };
    let lat = |i: u32| std::f64::consts::PI * i as f64 / n_lat as f64;
    let lon = |j: f64| 2.0 * std::f64::consts::PI * j / n_lon as f64;
    // Interior rings 1..n_lat-1, each with n_lon + 1 vertices (seam duplicated).
    let ring_start: Vec<u32> = (1..n_lat)
        .map(|i| {
            let start = push(lat(i), 0.0, 0.0, i as f64 / n_lat as f64);
            for j in 1..=n_lon {
                push(
                    lat(i),
                    lon(j as f64),
                    j as f64 / n_lon as f64,
                    i as f64 / n_lat as f64,
                );
            }
            start
        })
        .collect();
    let mut tris = Vec::new();
    for j in 0..n_lon {
        let mid = j as f64 + 0.5;
        let top = push(0.0, lon(mid), mid / n_lon as f64, 0.0);
        let r = ring_start[0];
        tris.push([top, r + j, r + j + 1]);
    }
    for i in 0..(n_lat - 2) as usize {
        let (a, b) = (ring_start[i], ring_start[i + 1]);
        for j in 0..n_lon {
            tris.push([a + j, b + j, b + j + 1]);
            tris.push([a + j, b + j + 1, a + j + 1]);
        }
    }
    for j in 0..n_lon {
        let mid = j as f64 + 0.5;
        let bottom = push(std::f64::consts::PI, lon(mid), mid / n_lon as f64, 1.0);
        let r = *ring_start.last().unwrap();
        tris.push([r + j, bottom, r + j + 1]);
    }
    Ok(indexed(positions, normals, uvs, tris))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric_normal(m: &TriMesh, t: &TriIndices) -> Vec3 {
        let [a, b, c] = t.pos.map(|i| m.positions[i as usize]);
        (b - a).cross(c - a).normalize()
    }

    fn assert_outward(m: &TriMesh) {
        for t in &m.triangles {
            let g = geometric_normal(m, t);
            let n = m.normals[t.normal.unwrap()[0] as usize];
            assert!(g.dot(n) > 0.5, "winding disagrees with normal: {g:?} vs {n:?}");
        }
    }

    #[test]
    fn unit_box() {
        let m = make_box(Vec3::ONE).unwrap();
        assert_eq!(m.positions.len(), 24);
        assert_eq!(m.triangle_count(), 12);
        for p in &m.positions {
            assert_eq!([p.x.abs(), p.y.abs(), p.z.abs()], [0.5; 3]);
        }
        for uv in &m.uvs {
            assert!(uv.iter().all(|c| *c == 0.0 || *c == 1.0));
        }
        assert_outward(&m);
        m.validate().unwrap();
    }

    #[test]
    fn plane_of_extent_two() {
        let m = make_plane(2.0).unwrap();
        assert_eq!(m.positions.len(), 4);
        for p in &m.positions {
            assert_eq!([p.x.abs(), p.y, p.z.abs()], [1.0, 0.0, 1.0]);
        }
        assert!(m.normals.iter().all(|n| *n == vec3(0.0, 1.0, 0.0)));
        assert_outward(&m);
    }

    #[test]
    fn sphere_vertices_on_radius() {
        let m = make_uv_sphere(1.0, 8, 16).unwrap();
        for p in &m.positions {
            assert!((p.length() - 1.0).abs() < 1e-9);
        }
        assert_eq!(m.triangle_count(), 2 * 16 * 7);
        assert_outward(&m);
        m.validate().unwrap();
        assert!(m.has_full_uvs());
    }

    #[test]
    fn non_positive_dimensions_rejected() {
        assert!(make_box(vec3(1.0, 0.0, 1.0)).is_err());
        assert!(make_plane(-1.0).is_err());
        assert!(make_uv_sphere(1.0, 2, 8).is_err());
        assert!(make_uv_sphere(0.0, 4, 8).is_err());
    }

    #[test]
    fn mirrored_transform_keeps_outward_winding() {
        let m = make_box(Vec3::ONE).unwrap();
        let xf = Transform::from_trs(Vec3::ZERO, Vec3::ZERO, vec3(-1.0, 2.0, 1.0));
        assert_outward(&m.transformed(&xf));
    }
}
