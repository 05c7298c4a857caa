//! Median-split BVH over a triangle mesh.

use crate::aabb::Aabb;
use crate::math::Vec3;
use crate::mesh::TriangleMesh;

/// Meshes at or below this many triangles are traced by brute force.
pub const BRUTE_FORCE_LIMIT: usize = 64;
const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: first triangle in `order`. Interior: index of the right child
    /// (the left child is always the next node).
    start_or_right: u32,
    /// Zero for interior nodes.
    count: u32,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
}

#[derive(Debug, Clone, Copy)]
pub struct TriHit {
    pub t: f64,
    pub face: usize,
    pub u: f64,
    pub v: f64,
}

/// Möller-Trumbore; returns `(t, u, v)` for `t` in `(t_min, t_max)`.
#[inline]
pub fn intersect_triangle(
    origin: Vec3,
    dir: Vec3,
    tri: &[Vec3; 3],
    t_min: f64,
    t_max: f64,
) -> Option<(f64, f64, f64)> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - tri[0];
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    (t > t_min && t < t_max).then_some((t, u, v))
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Bvh {
        let n = mesh.faces.len();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let bounds: Vec<Aabb> = (0..n)
            .map(|f| Aabb::from_points(&mesh.triangle(f)))
            .collect();
        let centroids: Vec<Vec3> = bounds.iter().map(Aabb::center).collect();
        let mut nodes = Vec::with_capacity(2 * n.max(1));
        if n <= BRUTE_FORCE_LIMIT {
            nodes.push(Node {
                bounds: bounds.iter().fold(Aabb::EMPTY, |a, b| a.union(*b)),
                start_or_right: 0,
                count: n as u32,
            });
        } else {
            build_rec(&mut nodes, &mut order, 0, n, &bounds, &centroids);
        }
        Bvh { nodes, order }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn intersect(
        &self,
        mesh: &TriangleMesh,
        origin: Vec3,
        dir: Vec3,
        t_min: f64,
        mut t_max: f64,
        any_hit: bool,
    ) -> Option<TriHit> {
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best: Option<TriHit> = None;
        let mut stack = [0u32; 64];
        let mut sp = 1usize;
        stack[0] = 0;
        while sp > 0 {
            sp -= 1;
            let node = &self.nodes[stack[sp] as usize];
            if node.bounds.hit(origin, inv, t_min, t_max).is_none() {
                continue;
            }
            if node.count > 0 {
                let s = node.start_or_right as usize;
                for &f in &self.order[s..s + node.count as usize] {
                    let tri = mesh.triangle(f as usize);
                    if let Some((t, u, v)) = intersect_triangle(origin, dir, &tri, t_min, t_max) {
                        t_max = t;
                        best = Some(TriHit {
                            t,
                            face: f as usize,
                            u,
                            v,
                        });
                        if any_hit {
                            return best;
                        }
                    }
                }
            } else {
                let idx = stack[sp] as usize;
                stack[sp] = node.start_or_right;
                stack[sp + 1] = (idx + 1) as u32;
                sp += 2;
            }
        }
        best
    }
}

fn build_rec(
    nodes: &mut Vec<Node>,
    order: &mut [u32],
    start: usize,
    end: usize,
    bounds: &[Aabb],
    centroids: &[Vec3],
) -> usize {
    let idx = nodes.len();
    let slice = &mut order[start..end];
    let node_bounds = slice
        .iter()
        .fold(Aabb::EMPTY, |a, &f| a.union(bounds[f as usize]));
    nodes.push(Node {
        bounds: node_bounds,
        start_or_right: start as u32,
        count: (end - start) as u32,
    });
    if end - start <= LEAF_SIZE {
        return idx;
    }
    let cb = Aabb::from_points(slice.iter().map(|&f| &centroids[f as usize]));
    let e = cb.extent();
    let axis = if e.x >= e.y && e.x >= e.z {
        0
    } else if e.y >= e.z {
        1
    } else {
        2
    };
    if e[axis] <= 0.0 {
        return idx;
    }
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis].total_cmp(&centroids[b as usize][axis])
    });
    build_rec(nodes, order, start, start + mid, bounds, centroids);
    let right = build_rec(nodes, order, start + mid, end, bounds, centroids);
    nodes[idx].count = 0;
    nodes[idx].start_or_right = right as u32;
    idx
}
