use super::mesh::TriMesh;
use super::vec3::{vec3, Point3, Vec3};
use super::{GeomError, HitRecord, Ray};

const LEAF_SIZE: usize = 4;

/// A world-space triangle with its resolved per-corner attributes.
#[derive(Clone, Debug, PartialEq)]
pub struct Triangle {
    pub v: [Point3; 3],
    pub normals: Option<[Vec3; 3]>,
    pub uvs: Option<[[f64; 2]; 3]>,
    pub object_id: u32,
    /// Index of the triangle within its source mesh.
    pub tri_id: u32,
}

impl Triangle {
    pub fn centroid(&self) -> Point3 {
        (self.v[0] + self.v[1] + self.v[2]) / 3.0
    }

    pub fn bounds(&self) -> Aabb {
        Aabb {
            min: self.v[0].min(self.v[1]).min(self.v[2]),
            max: self.v[0].max(self.v[1]).max(self.v[2]),
        }
    }

    pub fn geometric_normal(&self) -> Vec3 {
        (self.v[1] - self.v[0]).cross(self.v[2] - self.v[0]).normalize()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: vec3(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        max: vec3(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    pub fn union(self, o: Aabb) -> Aabb {
        Aabb {
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    pub fn contains(&self, o: &Aabb) -> bool {
        (0..3).all(|a| self.min[a] <= o.min[a] && o.max[a] <= self.max[a])
    }

    pub fn disjoint(&self, o: &Aabb) -> bool {
        (0..3).any(|a| self.max[a] < o.min[a] || o.max[a] < self.min[a])
    }

    fn longest_axis(&self) -> usize {
        let e = self.max - self.min;
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    /// Slab test; returns the entry distance when the box overlaps `[t0, t1]`.
    #[inline]
    fn hit(&self, origin: Vec3, inv_dir: Vec3, t0: f64, t1: f64) -> Option<f64> {
        let mut lo = t0;
        let mut hi = t1;
        for a in 0..3 {
            let ta = (self.min[a] - origin[a]) * inv_dir[a];
            let tb = (self.max[a] - origin[a]) * inv_dir[a];
            // f64::min/max discard the NaN produced by 0 * inf on a slab plane.
            lo = lo.max(ta.min(tb));
            hi = hi.min(ta.max(tb));
        }
        (lo <= hi).then_some(lo)
    }
}

/// Flattened node; children of an interior node sit at `index + 1` and `right`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BvhNode {
    pub bounds: Aabb,
    pub right: u32,
    pub first: u32,
    /// Zero for interior nodes.
    pub count: u32,
}

impl BvhNode {
    pub fn is_leaf(&self) -> bool {
        self.count > 0
    }
}

/// Median-split bounding volume hierarchy over the triangles of all meshes.
#[derive(Clone, Debug)]
pub struct Bvh {
    pub nodes: Vec<BvhNode>,
    /// Triangles in leaf order.
    pub triangles: Vec<Triangle>,
    /// `order[i]` is the input position of `triangles[i]`.
    pub order: Vec<u32>,
}

/// Möller–Trumbore; returns `(t, b1, b2)` for any `t`, leaving range checks to the caller.
#[inline]
pub fn intersect_triangle(v: &[Point3; 3], origin: Point3, dir: Vec3) -> Option<(f64, f64, f64)> {
    let e1 = v[1] - v[0];
    let e2 = v[2] - v[0];
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - v[0];
    let b1 = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&b1) {
        return None;
    }
    let q = s.cross(e1);
    let b2 = dir.dot(q) * inv;
    if b2 < 0.0 || b1 + b2 > 1.0 {
        return None;
    }
    Some((e2.dot(q) * inv, b1, b2))
}

impl Bvh {
    pub fn build(meshes: &[TriMesh]) -> Result<Bvh, GeomError> {
        let mut tris = Vec::new();
        for m in meshes {
            m.validate()?;
            for (i, t) in m.triangles.iter().enumerate() {
                tris.push(Triangle {
                    v: t.pos.map(|k| m.positions[k as usize]),
                    normals: t.normal.map(|n| n.map(|k| m.normals[k as usize])),
                    uvs: t.uv.map(|n| n.map(|k| m.uvs[k as usize])),
                    object_id: m.object_id,
                    tri_id: i as u32,
                });
            }
        }
        Self::from_triangles(tris)
    }

    pub fn from_triangles(tris: Vec<Triangle>) -> Result<Bvh, GeomError> {
        if tris.is_empty() {
            return Err(GeomError::EmptyScene);
        }
        let centroids: Vec<Point3> = tris.iter().map(Triangle::centroid).collect();
        let bounds: Vec<Aabb> = tris.iter().map(Triangle::bounds).collect();
        let mut order: Vec<u32> = (0..tris.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1);
        build_node(&mut nodes, &mut order, 0, &centroids, &bounds);
        let triangles = order.iter().map(|&i| tris[i as usize].clone()).collect();
        Ok(Bvh {
            nodes,
            triangles,
            order,
        })
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    fn traverse(&self, ray: &Ray, any: bool) -> Option<(usize, f64, f64, f64)> {
        let inv = vec3(1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z);
        let mut best: Option<(usize, f64, f64, f64)> = None;
        let mut t_far = ray.t_max;
        let mut stack = [0u32; 64];
        let mut sp = 1;
        while sp > 0 {
            sp -= 1;
            let node = &self.nodes[stack[sp] as usize];
            if node.bounds.hit(ray.origin, inv, ray.t_min, t_far).is_none() {
                continue;
            }
            if node.is_leaf() {
                let range = node.first as usize..(node.first + node.count) as usize;
                for i in range {
                    if let Some((t, b1, b2)) = intersect_triangle(&self.triangles[i].v, ray.origin, ray.dir) {
                        let better = match best {
                            None => true,
                            // Equal distances resolve to the earlier input triangle.
                            Some((j, bt, _, _)) => {
                                t < bt || (t == bt && self.order[i] < self.order[j])
                            }
                        };
                        if t > ray.t_min && t <= t_far && better {
                            best = Some((i, t, b1, b2));
                            t_far = t;
                            if any {
                                return best;
                            }
                        }
                    }
                }
            } else {
                let left = stack[sp] + 1;
                let right = node.right;
                let tl = self.nodes[left as usize].bounds.hit(ray.origin, inv, ray.t_min, t_far);
                let tr = self.nodes[right as usize].bounds.hit(ray.origin, inv, ray.t_min, t_far);
                // Push the farther child first so the nearer one is popped next.
                match (tl, tr) {
                    (Some(a), Some(b)) => {
                        let (near, far) = if a <= b { (left, right) } else { (right, left) };
                        stack[sp] = far;
                        stack[sp + 1] = near;
                        sp += 2;
                    }
                    (Some(_), None) => {
                        stack[sp] = left;
                        sp += 1;
                    }
                    (None, Some(_)) => {
                        stack[sp] = right;
                        sp += 1;
                    }
                    (None, None) => {}
                }
            }
        }
        best
    }

    /// Nearest hit with `t` in `(ray.t_min, ray.t_max]`.
    pub fn intersect(&self, ray: &Ray) -> Option<HitRecord> {
        let (i, t, b1, b2) = self.traverse(ray, false)?;
        let tri = &self.triangles[i];
        let b0 = 1.0 - b1 - b2;
        let geometric = tri.geometric_normal();
        let front_face = ray.dir.dot(geometric) < 0.0;
        let mut normal = match tri.normals {
            Some(n) => (n[0] * b0 + n[1] * b1 + n[2] * b2).normalize(),
            None => geometric,
        };
        if !normal.is_finite() {
            normal = geometric;
        }
        if normal.dot(ray.dir) > 0.0 {
            normal = -normal;
        }
        let uv = match tri.uvs {
            Some(uv) => [
                uv[0][0] * b0 + uv[1][0] * b1 + uv[2][0] * b2,
                uv[0][1] * b0 + uv[1][1] * b1 + uv[2][1] * b2,
            ],
            None => [b1, b2],
        };
        Some(HitRecord {
            t,
            point: ray.at(t),
            normal,
            front_face,
            uv,
            object_id: tri.object_id,
            tri_id: tri.tri_id,
        })
    }

    /// True if anything is hit with `t` in `(ray.t_min, t_max)`.
    pub fn intersect_any(&self, ray: &Ray, t_max: f64) -> bool {
        // The traversal range is inclusive; pull the bound in by one ulp.
        let bound = f64::from_bits(t_max.to_bits().saturating_sub(1)).min(ray.t_max);
        let r = Ray { t_max: bound, ..*ray };
        t_max > ray.t_min && self.traverse(&r, true).is_some()
    }
}

fn build_node(
    nodes: &mut Vec<BvhNode>,
    order: &mut [u32],
    offset: u32,
    centroids: &[Point3],
    bounds: &[Aabb],
) -> u32 {
    let bb = order
        .iter()
        .fold(Aabb::EMPTY, |acc, &i| acc.union(bounds[i as usize]));
    let pad = (bb.max - bb.min).max_component().max(1.0) * 1e-9;
    let padded = Aabb {
        min: bb.min - Vec3::ONE * pad,
        max: bb.max + Vec3::ONE * pad,
    };
    let index = nodes.len() as u32;
    nodes.push(BvhNode {
        bounds: padded,
        right: 0,
        first: offset,
        count: order.len() as u32,
    });
    if order.len() <= LEAF_SIZE {
        return index;
    }
    let axis = bb.longest_axis();
    order.sort_by(|&a, &b| {
        centroids[a as usize][axis]
            .total_cmp(&centroids[b as usize][axis])
            .then(a.cmp(&b))
    });
    let mid = order.len() / 2;
    let (lo, hi) = order.split_at_mut(mid);
    build_node(nodes, lo, offset, centroids, bounds);
    let right = build_node(nodes, hi, offset + mid as u32, centroids, bounds);
    let node = &mut nodes[index as usize];
    node.right = right;
    node.count = 0;
    index
}
