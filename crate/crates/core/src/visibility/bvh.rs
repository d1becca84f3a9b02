//! Bounding-volume hierarchy over mesh triangles for any-hit occlusion queries.
//!
//! Built top-down with a median split on the longest axis of the centroid
//! bounds. Node boxes are padded slightly so that traversal never rejects a
//! triangle the exact intersection routine would accept; the final decision
//! is always made by the same [`OcclusionRay::blocked_by`] test the naive
//! caster uses, which keeps the two paths bit-identical.

use crate::geom::{Aabb, Vec3};

use super::mesh::TriangleMesh;
use super::raycast::{OcclusionEps, OcclusionQuery, OcclusionRay};
use super::VisibilityError;

pub const DEFAULT_LEAF_SIZE: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum BvhNode {
    Leaf { bounds: Aabb, start: usize, count: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl BvhNode {
    pub fn bounds(&self) -> &Aabb {
        match self {
            BvhNode::Leaf { bounds, .. } | BvhNode::Inner { bounds, .. } => bounds,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BvhAccelerator<'a> {
    mesh: &'a TriangleMesh,
    nodes: Vec<BvhNode>,
    /// Triangle indices, grouped so each leaf owns a contiguous range.
    order: Vec<usize>,
    leaf_size: usize,
}

struct BuildItem {
    tri: usize,
    bounds: Aabb,
    centroid: Vec3,
}

pub fn build_bvh(mesh: &TriangleMesh) -> BvhAccelerator<'_> {
    BvhAccelerator::build(mesh, DEFAULT_LEAF_SIZE)
}

impl<'a> BvhAccelerator<'a> {
    pub fn build(mesh: &'a TriangleMesh, leaf_size: usize) -> Self {
        let leaf_size = leaf_size.max(1);
        let pad = 1e-9 * mesh.bounds().diagonal().max(1.0);
        let mut items: Vec<BuildItem> = (0..mesh.triangles.len())
            .map(|tri| {
                let [a, b, c] = mesh.triangle(tri);
                BuildItem {
                    tri,
                    bounds: Aabb::from_points([a, b, c]).padded(pad),
                    centroid: (a + b + c) / 3.0,
                }
            })
            .collect();
        let mut bvh = BvhAccelerator {
            mesh,
            nodes: Vec::new(),
            order: Vec::with_capacity(items.len()),
            leaf_size,
        };
        if !items.is_empty() {
            bvh.build_node(&mut items);
        }
        bvh
    }

    fn build_node(&mut self, items: &mut [BuildItem]) -> usize {
        let bounds = items.iter().fold(Aabb::empty(), |b, it| b.union(it.bounds));
        let index = self.nodes.len();
        if items.len() <= self.leaf_size {
            let start = self.order.len();
            self.order.extend(items.iter().map(|it| it.tri));
            self.nodes.push(BvhNode::Leaf { bounds, start, count: items.len() });
            return index;
        }
        // Placeholder, patched once both children exist.
        self.nodes.push(BvhNode::Leaf { bounds, start: 0, count: 0 });
        let centroids = Aabb::from_points(items.iter().map(|it| it.centroid));
        let axis = centroids.longest_axis();
        let mid = items.len() / 2;
        items.select_nth_unstable_by(mid, |a, b| {
            a.centroid[axis].total_cmp(&b.centroid[axis]).then(a.tri.cmp(&b.tri))
        });
        let (lo, hi) = items.split_at_mut(mid);
        let left = self.build_node(lo);
        let right = self.build_node(hi);
        self.nodes[index] = BvhNode::Inner { bounds, left, right };
        index
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, BvhNode::Leaf { .. })).count()
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    /// Every triangle in exactly one leaf; every parent box contains its children.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = vec![0usize; self.mesh.triangles.len()];
        for node in &self.nodes {
            match *node {
                BvhNode::Leaf { bounds, start, count } => {
                    for &tri in &self.order[start..start + count] {
                        seen[tri] += 1;
                        let [a, b, c] = self.mesh.triangle(tri);
                        let tb = Aabb::from_points([a, b, c]);
                        if !bounds.contains_box(&tb) {
                            return Err(format!("leaf box does not contain triangle {tri}"));
                        }
                    }
                }
                BvhNode::Inner { bounds, left, right } => {
                    for child in [left, right] {
                        if !bounds.contains_box(self.nodes[child].bounds()) {
                            return Err(format!("node box does not contain child {child}"));
                        }
                    }
                }
            }
        }
        match seen.iter().position(|&c| c != 1) {
            Some(tri) => Err(format!("triangle {tri} appears in {} leaves", seen[tri])),
            None => Ok(()),
        }
    }

    fn any_hit(&self, ray: &OcclusionRay) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let inv = Vec3::new(1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z);
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if !slab_overlaps(node.bounds(), inv, ray.t_min, ray.t_max) {
                continue;
            }
            match *node {
                BvhNode::Leaf { start, count, .. } => {
                    if self.order[start..start + count]
                        .iter()
                        .any(|&tri| ray.blocked_by(self.mesh.triangle(tri)))
                    {
                        return true;
                    }
                }
                BvhNode::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        false
    }
}

/// Slab test for a ray from the origin, conservative on the parameter range.
#[inline]
fn slab_overlaps(b: &Aabb, inv: Vec3, t_min: f64, t_max: f64) -> bool {
    let mut lo = t_min;
    let mut hi = t_max;
    for axis in 0..3 {
        let inv_d = inv[axis];
        let (bmin, bmax) = (b.min[axis], b.max[axis]);
        if inv_d.is_infinite() {
            // Ray parallel to this slab: origin coordinate is zero.
            if bmin > 0.0 || bmax < 0.0 {
                return false;
            }
            continue;
        }
        let mut t0 = bmin * inv_d;
        let mut t1 = bmax * inv_d;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        lo = lo.max(t0);
        hi = hi.min(t1);
        if lo > hi {
            return false;
        }
    }
    true
}

impl OcclusionQuery for BvhAccelerator<'_> {
    fn occluded(&self, point: Vec3, eps: OcclusionEps) -> Result<bool, VisibilityError> {
        let ray = OcclusionRay::toward(point, eps.eps_self, eps.eps_t)?;
        Ok(self.any_hit(&ray))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::visibility::mesh::fixtures::box_mesh;
    use crate::visibility::raycast::NaiveCaster;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tri_at(offset: f64) -> TriangleMesh {
        TriangleMesh {
            vertices: vec![
                Vec3::new(offset, 0.0, 2.0),
                Vec3::new(offset + 1.0, 0.0, 2.0),
                Vec3::new(offset, 1.0, 2.0),
            ],
            triangles: vec![[0, 1, 2]],
        }
    }

    #[test]
    fn single_triangle_is_one_leaf() {
        let m = tri_at(0.0);
        let bvh = build_bvh(&m);
        assert_eq!(bvh.nodes().len(), 1);
        assert!(matches!(bvh.nodes()[0], BvhNode::Leaf { count: 1, .. }));
        bvh.check_invariants().unwrap();
    }

    #[test]
    fn two_triangles_split_into_two_leaves() {
        let mut m = tri_at(0.0);
        m.merge(&tri_at(5.0));
        let bvh = build_bvh(&m);
        assert_eq!(bvh.nodes().len(), 3);
        assert!(matches!(bvh.nodes()[0], BvhNode::Inner { .. }));
        assert_eq!(bvh.leaf_count(), 2);
        bvh.check_invariants().unwrap();
    }

    #[test]
    fn empty_mesh() {
        let m = TriangleMesh::default();
        let bvh = build_bvh(&m);
        let eps = OcclusionEps { eps_self: 1e-4, eps_t: 1e-6 };
        assert!(!bvh.occluded(Vec3::new(0.0, 0.0, 1.0), eps).unwrap());
    }

    #[test]
    fn matches_naive_on_random_boxes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut mesh = TriangleMesh::default();
        for _ in 0..40 {
            let c = Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(3.0..9.0));
            let h = Vec3::new(rng.gen_range(0.1..0.6), rng.gen_range(0.1..0.6), rng.gen_range(0.1..0.6));
            mesh.merge(&box_mesh(c - h, c + h));
        }
        for leaf in [1, 2, 4, 8] {
            let bvh = BvhAccelerator::build(&mesh, leaf);
            bvh.check_invariants().unwrap();
            let naive = NaiveCaster::new(&mesh);
            let eps = OcclusionEps::for_mesh(&mesh);
            for p in mesh.vertices.iter().copied().chain((0..200).map(|_| {
                Vec3::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(1.0..10.0))
            })) {
                assert_eq!(bvh.occluded(p, eps).unwrap(), naive.occluded(p, eps).unwrap(), "point {p:?}");
            }
        }
    }
}
