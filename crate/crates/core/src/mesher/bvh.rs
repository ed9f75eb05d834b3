use glam::DVec3;

use super::CollisionMesh;
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Ray};

/// Largest triangle count stored in one leaf.
pub const MAX_LEAF: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub triangle: u32,
    /// The ray meets the outward side of the triangle (it is entering the
    /// enclosed region).
    pub front_facing: bool,
}

#[derive(Clone, Debug)]
struct Node {
    bounds: Aabb,
    /// Leaf: `count > 0`, triangles `first..first + count` of the index
    /// array. Interior: children at `first` and `first + 1`.
    first: u32,
    count: u32,
}

/// Median-split bounding volume hierarchy over a triangle mesh.
#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
    triangles: Vec<[DVec3; 3]>,
}

impl Bvh {
    pub fn build(mesh: &CollisionMesh) -> Result<Self> {
        if mesh.triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let triangles: Vec<[DVec3; 3]> = (0..mesh.triangles.len()).map(|i| mesh.triangle(i)).collect();
        let centroids: Vec<DVec3> = triangles.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let scale = mesh.bounds().min.abs().max(mesh.bounds().max.abs()).max_element();
        let pad = 1e-9 * (1.0 + scale);
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * triangles.len() / MAX_LEAF + 1),
            order: (0..triangles.len() as u32).collect(),
            triangles,
        };
        bvh.nodes.push(Node {
            bounds: Aabb::empty(),
            first: 0,
            count: 0,
        });
        let mut stack = vec![(0usize, 0usize, bvh.order.len())];
        while let Some((node, lo, hi)) = stack.pop() {
            let mut bounds = Aabb::empty();
            let mut cbounds = Aabb::empty();
            for &t in &bvh.order[lo..hi] {
                for v in bvh.triangles[t as usize] {
                    bounds.grow(v);
                }
                cbounds.grow(centroids[t as usize]);
            }
            bounds.min -= DVec3::splat(pad);
            bounds.max += DVec3::splat(pad);
            bvh.nodes[node].bounds = bounds;
            if hi - lo <= MAX_LEAF {
                bvh.nodes[node].first = lo as u32;
                bvh.nodes[node].count = (hi - lo) as u32;
                continue;
            }
            let axis = cbounds.longest_axis();
            bvh.order[lo..hi].sort_by(|a, b| {
                centroids[*a as usize][axis]
                    .total_cmp(&centroids[*b as usize][axis])
                    .then(a.cmp(b))
            });
            let mid = lo + (hi - lo) / 2;
            let left = bvh.nodes.len();
            for _ in 0..2 {
                bvh.nodes.push(Node {
                    bounds: Aabb::empty(),
                    first: 0,
                    count: 0,
                });
            }
            bvh.nodes[node].first = left as u32;
            stack.push((left + 1, mid, hi));
            stack.push((left, lo, mid));
        }
        Ok(bvh)
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn bounds(&self) -> &Aabb {
        &self.nodes[0].bounds
    }

    pub fn first_hit(&self, ray: &Ray) -> Option<Hit> {
        self.first_hit_raw(ray.origin, ray.dir.vec(), ray.t_min, ray.t_max)
    }

    /// Nearest intersection with `t ∈ [t_min, t_max]`; ties go to the lower
    /// triangle index.
    pub fn first_hit_raw(&self, origin: DVec3, dir: DVec3, t_min: f64, t_max: f64) -> Option<Hit> {
        self.traverse(origin, dir, t_min, t_max).0
    }

    /// As [`Self::first_hit_raw`], also returning the number of triangle
    /// tests performed.
    pub fn first_hit_counted(&self, origin: DVec3, dir: DVec3, t_min: f64, t_max: f64) -> (Option<Hit>, usize) {
        self.traverse(origin, dir, t_min, t_max)
    }

    fn traverse(&self, origin: DVec3, dir: DVec3, t_min: f64, t_max: f64) -> (Option<Hit>, usize) {
        let inv = dir.recip();
        let mut best: Option<Hit> = None;
        let mut tests = 0;
        let mut stack = Vec::with_capacity(64);
        if slab(&self.nodes[0].bounds, origin, inv, t_min, t_max).is_some() {
            stack.push(0usize);
        }
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            let limit = best.map_or(t_max, |h| h.t);
            if node.count > 0 {
                for &t in &self.order[node.first as usize..(node.first + node.count) as usize] {
                    tests += 1;
                    if let Some(hit) = intersect(&self.triangles[t as usize], t, origin, dir, t_min, limit) {
                        if best.is_none_or(|b| (hit.t, hit.triangle) < (b.t, b.triangle)) {
                            best = Some(hit);
                        }
                    }
                }
                continue;
            }
            let (a, b) = (node.first as usize, node.first as usize + 1);
            let ta = slab(&self.nodes[a].bounds, origin, inv, t_min, limit);
            let tb = slab(&self.nodes[b].bounds, origin, inv, t_min, limit);
            match (ta, tb) {
                (Some(x), Some(y)) => {
                    // Push the farther child first so the nearer is visited first.
                    if x <= y {
                        stack.push(b);
                        stack.push(a);
                    } else {
                        stack.push(a);
                        stack.push(b);
                    }
                }
                (Some(_), None) => stack.push(a),
                (None, Some(_)) => stack.push(b),
                (None, None) => {}
            }
        }
        (best, tests)
    }

    /// Every triangle tested, no acceleration. Reference for the traversal.
    pub fn brute_force_hit(&self, origin: DVec3, dir: DVec3, t_min: f64, t_max: f64) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for (i, tri) in self.triangles.iter().enumerate() {
            if let Some(hit) = intersect(tri, i as u32, origin, dir, t_min, t_max) {
                if best.is_none_or(|b| (hit.t, hit.triangle) < (b.t, b.triangle)) {
                    best = Some(hit);
                }
            }
        }
        best
    }

    /// Checks structural invariants: children inside parents and each
    /// triangle in exactly one leaf.
    pub fn audit(&self) -> bool {
        let mut seen = vec![0u32; self.triangles.len()];
        let mut ok = true;
        for node in &self.nodes {
            if node.count > 0 {
                for &t in &self.order[node.first as usize..(node.first + node.count) as usize] {
                    seen[t as usize] += 1;
                    ok &= self.triangles[t as usize].iter().all(|v| node.bounds.contains(*v));
                }
            } else {
                for c in [node.first as usize, node.first as usize + 1] {
                    ok &= node.bounds.contains_box(&self.nodes[c].bounds);
                }
            }
        }
        ok && seen.iter().all(|c| *c == 1)
    }
}

/// Entry distance of the ray into `b` within `[t0, t1]`. Zero direction
/// components yield NaN slab terms, which `min`/`max` ignore, keeping the
/// test conservative.
#[inline]
fn slab(b: &Aabb, o: DVec3, inv: DVec3, t0: f64, t1: f64) -> Option<f64> {
    let a = (b.min - o) * inv;
    let c = (b.max - o) * inv;
    let mut lo = t0;
    let mut hi = t1;
    for i in 0..3 {
        lo = lo.max(a[i].min(c[i]));
        hi = hi.min(a[i].max(c[i]));
    }
    (lo <= hi).then_some(lo)
}

/// Möller–Trumbore; points on edges count as hits.
#[inline]
fn intersect(tri: &[DVec3; 3], id: u32, o: DVec3, d: DVec3, t_min: f64, t_max: f64) -> Option<Hit> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = d.cross(e2);
    let det = e1.dot(p);
    if det == 0.0 {
        return None;
    }
    let inv = 1.0 / det;
    let s = o - tri[0];
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = d.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    if t < t_min || t > t_max {
        return None;
    }
    // det = -(d · n) with n = e1 × e2 the outward normal.
    Some(Hit {
        t,
        triangle: id,
        front_facing: det > 0.0,
    })
}
