//! Rectilinear voxel solids and their exact boundary mesh / sharp-edge wireframe.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::visibility::TriangleMesh;
use crate::wireframe::{canonical_pair, WireframeGraph};

use super::ForgeError;

pub const MAX_GRID: usize = 8;
const MAX_GENERATION_ATTEMPTS: usize = 10_000;

type Cell = [i32; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelSolid {
    pub dims: [usize; 3],
    occupancy: Vec<bool>,
    /// Edge length of one voxel in world units.
    pub voxel_size: f64,
}

/// Generator limits for [`generate_solid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridLimits {
    pub max_dims: [usize; 3],
    pub max_voxels: usize,
}

impl Default for GridLimits {
    fn default() -> Self {
        Self {
            max_dims: [4, 4, 4],
            max_voxels: 10,
        }
    }
}

impl VoxelSolid {
    /// Builds a solid from occupied cells; the grid is the cells' bounding box.
    pub fn from_cells(cells: &[[usize; 3]]) -> Result<Self, ForgeError> {
        if cells.is_empty() {
            return Err(ForgeError::InvalidSolid("no occupied voxels".into()));
        }
        let mut dims = [0usize; 3];
        for c in cells {
            for a in 0..3 {
                dims[a] = dims[a].max(c[a] + 1);
            }
        }
        let mut occupancy = vec![false; dims[0] * dims[1] * dims[2]];
        for c in cells {
            occupancy[c[0] + dims[0] * (c[1] + dims[1] * c[2])] = true;
        }
        let solid = Self {
            dims,
            occupancy,
            voxel_size: 1.0,
        };
        if !solid.is_connected() {
            return Err(ForgeError::InvalidSolid("occupied voxels are not 6-connected".into()));
        }
        Ok(solid.rescaled())
    }

    fn rescaled(mut self) -> Self {
        let cells = self.cells();
        let mut lo = [i32::MAX; 3];
        let mut hi = [i32::MIN; 3];
        for c in &cells {
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a] + 1);
            }
        }
        let extent = (0..3).map(|a| hi[a] - lo[a]).max().unwrap_or(1);
        self.voxel_size = 1.0 / extent as f64;
        self
    }

    pub fn get(&self, c: Cell) -> bool {
        if c.iter().any(|&v| v < 0) {
            return false;
        }
        let [x, y, z] = [c[0] as usize, c[1] as usize, c[2] as usize];
        if x >= self.dims[0] || y >= self.dims[1] || z >= self.dims[2] {
            return false;
        }
        self.occupancy[x + self.dims[0] * (y + self.dims[1] * z)]
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for z in 0..self.dims[2] {
            for y in 0..self.dims[1] {
                for x in 0..self.dims[0] {
                    let c = [x as i32, y as i32, z as i32];
                    if self.get(c) {
                        out.push(c);
                    }
                }
            }
        }
        out
    }

    pub fn voxel_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    pub fn is_connected(&self) -> bool {
        let cells = self.cells();
        let Some(&start) = cells.first() else {
            return false;
        };
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for n in face_neighbors(c) {
                if self.get(n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        seen.len() == cells.len()
    }

    /// No enclosed cavities: every empty cell reaches the outside.
    pub fn has_no_cavities(&self) -> bool {
        let lo = -1;
        let hi = self.dims.map(|d| d as i32 + 1);
        let inside = |c: Cell| (0..3).all(|a| c[a] >= lo && c[a] < hi[a]);
        let start = [lo, lo, lo];
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for n in face_neighbors(c) {
                if inside(n) && !self.get(n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        let empty_in_grid = self.occupancy.iter().filter(|&&o| !o).count();
        let total_padded: usize = hi.iter().map(|&h| (h - lo) as usize).product();
        let padding = total_padded - self.occupancy.len();
        seen.len() == padding + empty_in_grid
    }

    /// Boundary is a 2-manifold: around every lattice vertex the occupied and
    /// the empty cells of the 2x2x2 block are each face-connected.
    pub fn is_well_composed(&self) -> bool {
        for z in 0..=self.dims[2] as i32 {
            for y in 0..=self.dims[1] as i32 {
                for x in 0..=self.dims[0] as i32 {
                    let mut occ = [false; 8];
                    for (i, o) in occ.iter_mut().enumerate() {
                        let c = [x - 1 + (i & 1) as i32, y - 1 + ((i >> 1) & 1) as i32, z - 1 + ((i >> 2) & 1) as i32];
                        *o = self.get(c);
                    }
                    if !block_connected(&occ, true) || !block_connected(&occ, false) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Canonical occupancy key, identical for solids related by any of the 48 cube symmetries.
    pub fn canonical_key(&self) -> Vec<Cell> {
        let cells = self.cells();
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut best: Option<Vec<Cell>> = None;
        for perm in perms {
            for flips in 0..8 {
                let mut t: Vec<Cell> = cells
                    .iter()
                    .map(|c| {
                        let mut o = [0; 3];
                        for a in 0..3 {
                            let v = c[perm[a]];
                            o[a] = if flips >> a & 1 == 1 { -v } else { v };
                        }
                        o
                    })
                    .collect();
                let mut min = [i32::MAX; 3];
                for c in &t {
                    for a in 0..3 {
                        min[a] = min[a].min(c[a]);
                    }
                }
                for c in &mut t {
                    for a in 0..3 {
                        c[a] -= min[a];
                    }
                }
                t.sort_unstable();
                if best.as_ref().is_none_or(|b| t < *b) {
                    best = Some(t);
                }
            }
        }
        best.unwrap_or_default()
    }

    /// World position of a lattice vertex; the occupied bounding box is centered at the origin.
    fn lattice_to_world(&self, v: Cell) -> Vec3 {
        let (lo, hi) = self.occupied_bounds();
        let center = [0, 1, 2].map(|a| (lo[a] + hi[a]) as f64 / 2.0);
        Vec3::new(
            (v[0] as f64 - center[0]) * self.voxel_size,
            (v[1] as f64 - center[1]) * self.voxel_size,
            (v[2] as f64 - center[2]) * self.voxel_size,
        )
    }

    fn occupied_bounds(&self) -> (Cell, Cell) {
        let mut lo = [i32::MAX; 3];
        let mut hi = [i32::MIN; 3];
        for c in self.cells() {
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a] + 1);
            }
        }
        (lo, hi)
    }

    fn boundary_faces(&self) -> Vec<Face> {
        let mut faces = Vec::new();
        for c in self.cells() {
            for axis in 0..3 {
                for positive in [false, true] {
                    let mut n = c;
                    n[axis] += if positive { 1 } else { -1 };
                    if !self.get(n) {
                        let mut origin = c;
                        if positive {
                            origin[axis] += 1;
                        }
                        faces.push(Face { origin, axis, positive });
                    }
                }
            }
        }
        faces
    }

    /// Closed boundary mesh, two outward-wound triangles per unit face.
    pub fn boundary_mesh(&self) -> TriangleMesh {
        let mut index: BTreeMap<Cell, u32> = BTreeMap::new();
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for face in self.boundary_faces() {
            let mut corners = face.corners();
            if !face.positive {
                corners.reverse();
            }
            let ids = corners.map(|c| {
                *index.entry(c).or_insert_with(|| {
                    vertices.push(self.lattice_to_world(c));
                    (vertices.len() - 1) as u32
                })
            });
            triangles.push([ids[0], ids[1], ids[2]]);
            triangles.push([ids[0], ids[2], ids[3]]);
        }
        TriangleMesh { vertices, triangles }
    }

    /// Sharp-edge wireframe: collinear unit edges are merged and junctions are
    /// lattice vertices where sharp edges meet at an angle.
    pub fn wireframe(&self) -> WireframeGraph {
        // Unit lattice edge (start vertex, axis) -> normals of the faces sharing it.
        let mut edge_faces: BTreeMap<(Cell, usize), Vec<(usize, bool)>> = BTreeMap::new();
        for face in self.boundary_faces() {
            for (start, axis) in face.edges() {
                edge_faces.entry((start, axis)).or_default().push((face.axis, face.positive));
            }
        }
        // Sharp directions at each lattice vertex, encoded as axis*2 + (positive as usize).
        let mut dirs: BTreeMap<Cell, BTreeSet<usize>> = BTreeMap::new();
        for ((start, axis), normals) in &edge_faces {
            let sharp = normals.len() == 2 && normals[0] != normals[1];
            if !sharp {
                continue;
            }
            let mut end = *start;
            end[*axis] += 1;
            dirs.entry(*start).or_default().insert(axis * 2 + 1);
            dirs.entry(end).or_default().insert(axis * 2);
        }
        let is_junction = |d: &BTreeSet<usize>| !(d.len() == 2 && d.iter().next().map(|x| x / 2) == d.iter().nth(1).map(|x| x / 2));

        let junction_cells: Vec<Cell> = dirs.iter().filter(|(_, d)| is_junction(d)).map(|(c, _)| *c).collect();
        let junction_index: BTreeMap<Cell, usize> = junction_cells.iter().enumerate().map(|(i, c)| (*c, i)).collect();

        let mut lines = BTreeSet::new();
        for (&cell, &from) in &junction_index {
            for &dir in &dirs[&cell] {
                let axis = dir / 2;
                let step = if dir % 2 == 1 { 1 } else { -1 };
                let mut cur = cell;
                loop {
                    cur[axis] += step;
                    if let Some(&to) = junction_index.get(&cur) {
                        lines.insert(canonical_pair(from, to));
                        break;
                    }
                    debug_assert!(dirs.contains_key(&cur), "sharp chain ended without a junction");
                    if !dirs.contains_key(&cur) {
                        break;
                    }
                }
            }
        }
        let junctions = junction_cells.iter().map(|&c| self.lattice_to_world(c)).collect();
        WireframeGraph::new(junctions, lines.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy)]
struct Face {
    /// Lattice vertex with the smallest coordinates.
    origin: Cell,
    axis: usize,
    positive: bool,
}

impl Face {
    /// Corners counter-clockwise around +axis.
    fn corners(&self) -> [Cell; 4] {
        let b = (self.axis + 1) % 3;
        let c = (self.axis + 2) % 3;
        let p = self.origin;
        let mut pb = p;
        pb[b] += 1;
        let mut pbc = pb;
        pbc[c] += 1;
        let mut pc = p;
        pc[c] += 1;
        [p, pb, pbc, pc]
    }

    fn edges(&self) -> [(Cell, usize); 4] {
        let b = (self.axis + 1) % 3;
        let c = (self.axis + 2) % 3;
        let p = self.origin;
        let mut pb = p;
        pb[b] += 1;
        let mut pc = p;
        pc[c] += 1;
        [(p, b), (p, c), (pb, c), (pc, b)]
    }
}

fn face_neighbors(c: Cell) -> [Cell; 6] {
    let mut out = [c; 6];
    for axis in 0..3 {
        out[axis * 2][axis] -= 1;
        out[axis * 2 + 1][axis] += 1;
    }
    out
}

/// Whether cells with `occ == value` in a 2x2x2 block are face-connected (vacuously true if none).
fn block_connected(occ: &[bool; 8], value: bool) -> bool {
    let members: Vec<usize> = (0..8).filter(|&i| occ[i] == value).collect();
    let Some(&first) = members.first() else {
        return true;
    };
    let mut seen = 1u8 << first;
    let mut stack = vec![first];
    while let Some(i) = stack.pop() {
        for bit in [1, 2, 4] {
            let j = i ^ bit;
            if occ[j] == value && seen & (1 << j) == 0 {
                seen |= 1 << j;
                stack.push(j);
            }
        }
    }
    seen.count_ones() as usize == members.len()
}

/// Random connected, well-composed, cavity-free voxel solid; fully determined by `seed`.
pub fn random_solid(seed: u64, limits: &GridLimits) -> Result<VoxelSolid, ForgeError> {
    if limits.max_dims.iter().any(|&d| d == 0 || d > MAX_GRID) || limits.max_voxels == 0 {
        return Err(ForgeError::InvalidConfig(format!(
            "grid limits must be within 1..={MAX_GRID} per axis with at least one voxel, got {limits:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let dims = limits.max_dims.map(|d| rng.gen_range(1..=d));
        let capacity = dims[0] * dims[1] * dims[2];
        let target = rng.gen_range(1..=limits.max_voxels.min(capacity));
        let start = [0, 1, 2].map(|a| rng.gen_range(0..dims[a]) as i32);
        let mut occupied = BTreeSet::from([start]);
        while occupied.len() < target {
            let mut frontier: Vec<Cell> = occupied
                .iter()
                .flat_map(|&c| face_neighbors(c))
                .filter(|n| (0..3).all(|a| n[a] >= 0 && (n[a] as usize) < dims[a]) && !occupied.contains(n))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            frontier.shuffle(&mut rng);
            match frontier.first() {
                Some(&n) => {
                    occupied.insert(n);
                }
                None => break,
            }
        }
        let cells: Vec<[usize; 3]> = occupied.iter().map(|c| c.map(|v| v as usize)).collect();
        let solid = VoxelSolid::from_cells(&cells)?;
        if solid.is_well_composed() && solid.has_no_cavities() {
            return Ok(solid);
        }
    }
    Err(ForgeError::InvalidConfig("could not generate a manifold solid within the attempt budget".into()))
}

/// Boundary mesh and world-frame wireframe of a random solid.
pub fn generate_solid(seed: u64, limits: &GridLimits) -> Result<(TriangleMesh, WireframeGraph), ForgeError> {
    let solid = random_solid(seed, limits)?;
    Ok((solid.boundary_mesh(), solid.wireframe()))
}
