//! Quadric-error edge-collapse simplification and nearest-vertex mapping of
//! points back to the full-resolution mesh.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use log::{debug, warn};
use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector3, Vector4};
use thiserror::Error;

use crate::mesh::{MeshError, TriMesh, Vec3};
use crate::vote::{DistortionPoint, DistortionPointSet};

#[derive(Debug, Error)]
pub enum SimplifyError {
    #[error("target vertex count {0} is below 4")]
    TargetTooSmall(usize),
    #[error("simplification changed genus from {before} to {after}")]
    GenusChanged { before: usize, after: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone)]
pub struct SimplifyResult {
    pub mesh: TriMesh,
    pub target: usize,
    /// False when no admissible collapse was left before reaching the target.
    pub reached: bool,
}

#[derive(PartialEq)]
struct Collapse {
    cost: f64,
    u: usize,
    v: usize,
    stamp: (u32, u32),
    position: Vec3,
}

impl Eq for Collapse {}

impl Ord for Collapse {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| (other.u, other.v).cmp(&(self.u, self.v)))
    }
}

impl PartialOrd for Collapse {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const LENGTH_WEIGHT: f64 = 1e-6;

struct Decimator {
    positions: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    tri_alive: Vec<bool>,
    vert_alive: Vec<bool>,
    vert_tris: Vec<Vec<usize>>,
    quadrics: Vec<Matrix4<f64>>,
    stamps: Vec<u32>,
}

fn plane_quadric(p: [Vec3; 3]) -> Option<Matrix4<f64>> {
    let n = (p[1] - p[0]).cross(&(p[2] - p[0]));
    let len = n.norm();
    if len == 0.0 {
        return None;
    }
    let n = n / len;
    let plane = Vector4::new(n.x, n.y, n.z, -n.dot(&p[0]));
    Some(plane * plane.transpose())
}

fn quadric_error(q: &Matrix4<f64>, p: &Vec3) -> f64 {
    let h = Vector4::new(p.x, p.y, p.z, 1.0);
    (h.transpose() * q * h)[0].max(0.0)
}

impl Decimator {
    fn new(mesh: &TriMesh) -> Self {
        let n = mesh.num_vertices();
        let positions = mesh.positions().to_vec();
        let triangles = mesh.triangles().to_vec();
        let mut vert_tris = vec![Vec::new(); n];
        let mut quadrics = vec![Matrix4::zeros(); n];
        for (t, tri) in triangles.iter().enumerate() {
            let q = plane_quadric(tri.map(|v| positions[v])).unwrap_or_else(Matrix4::zeros);
            for &v in tri {
                vert_tris[v].push(t);
                quadrics[v] += q;
            }
        }
        Decimator {
            positions,
            tri_alive: vec![true; triangles.len()],
            triangles,
            vert_alive: vec![true; n],
            vert_tris,
            quadrics,
            stamps: vec![0; n],
        }
    }

    fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> =
            self.vert_tris[v].iter().flat_map(|&t| self.triangles[t]).filter(|&w| w != v).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn plan(&self, u: usize, v: usize) -> Collapse {
        let (u, v) = (u.min(v), u.max(v));
        let q = self.quadrics[u] + self.quadrics[v];
        let (pu, pv) = (self.positions[u], self.positions[v]);
        let mut options = vec![pu, pv, 0.5 * (pu + pv)];
        let a: Matrix3<f64> = q.fixed_view::<3, 3>(0, 0).into();
        let b: Vector3<f64> = -q.fixed_view::<3, 1>(0, 3).into_owned();
        let eig = SymmetricEigen::new(a);
        let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x.abs())));
        if hi > 0.0 && lo > 1e-8 * hi {
            if let Some(inv) = a.try_inverse() {
                options.insert(0, inv * b);
            }
        }
        let length = (pu - pv).norm_squared() * LENGTH_WEIGHT;
        let (cost, position) = options
            .into_iter()
            .map(|p| (quadric_error(&q, &p), p))
            .fold((f64::INFINITY, pu), |best, cand| if cand.0 < best.0 { cand } else { best });
        Collapse { cost: cost + length, u, v, stamp: (self.stamps[u], self.stamps[v]), position }
    }

    /// Link condition and normal checks for collapsing `v` into `u` at `p`.
    fn admissible(&self, u: usize, v: usize, p: &Vec3) -> bool {
        let shared: Vec<usize> =
            self.vert_tris[u].iter().copied().filter(|t| self.triangles[*t].contains(&v)).collect();
        if shared.len() != 2 {
            return false;
        }
        let nu = self.neighbors(u);
        let nv = self.neighbors(v);
        let common = nu.iter().filter(|w| nv.binary_search(w).is_ok()).count();
        if common != 2 {
            return false;
        }
        for &w in [u, v].iter() {
            for &t in &self.vert_tris[w] {
                if shared.contains(&t) {
                    continue;
                }
                let tri = self.triangles[t];
                let old = tri.map(|x| self.positions[x]);
                let new = tri.map(|x| if x == u || x == v { *p } else { self.positions[x] });
                let n_old = (old[1] - old[0]).cross(&(old[2] - old[0]));
                let n_new = (new[1] - new[0]).cross(&(new[2] - new[0]));
                if n_old.dot(&n_new) <= 0.0 || n_new.norm() <= 1e-12 * n_old.norm() {
                    return false;
                }
            }
        }
        true
    }

    fn collapse(&mut self, c: &Collapse) {
        let (u, v) = (c.u, c.v);
        let v_tris = std::mem::take(&mut self.vert_tris[v]);
        for t in v_tris {
            if self.triangles[t].contains(&u) {
                self.tri_alive[t] = false;
                for w in self.triangles[t] {
                    self.vert_tris[w].retain(|&x| x != t);
                }
            } else {
                for x in self.triangles[t].iter_mut() {
                    if *x == v {
                        *x = u;
                    }
                }
                self.vert_tris[u].push(t);
            }
        }
        self.vert_alive[v] = false;
        self.positions[u] = c.position;
        let qv = self.quadrics[v];
        self.quadrics[u] += qv;
        self.stamps[u] += 1;
    }

    fn finish(self) -> Result<TriMesh, MeshError> {
        let mut remap = vec![usize::MAX; self.positions.len()];
        let mut positions = Vec::new();
        for (v, p) in self.positions.iter().enumerate() {
            if self.vert_alive[v] {
                remap[v] = positions.len();
                positions.push(*p);
            }
        }
        let triangles = self
            .triangles
            .iter()
            .zip(&self.tri_alive)
            .filter(|(_, &alive)| alive)
            .map(|(t, _)| t.map(|v| remap[v]))
            .collect();
        TriMesh::new(positions, triangles)
    }
}

/// Collapses edges in order of increasing quadric error until `target`
/// vertices remain or no admissible collapse is left.
pub fn qem_simplify(mesh: &TriMesh, target: usize) -> Result<SimplifyResult, SimplifyError> {
    if target < 4 {
        return Err(SimplifyError::TargetTooSmall(target));
    }
    let genus = mesh.genus()?;
    if mesh.num_vertices() <= target {
        return Ok(SimplifyResult { mesh: mesh.clone(), target, reached: true });
    }
    let mut dec = Decimator::new(mesh);
    let mut heap = BinaryHeap::new();
    for [a, b] in mesh.edges() {
        heap.push(dec.plan(a, b));
    }
    let mut alive = mesh.num_vertices();
    while alive > target {
        let Some(c) = heap.pop() else { break };
        if !dec.vert_alive[c.u] || !dec.vert_alive[c.v] || c.stamp != (dec.stamps[c.u], dec.stamps[c.v]) {
            continue;
        }
        if !dec.admissible(c.u, c.v, &c.position) {
            continue;
        }
        dec.collapse(&c);
        alive -= 1;
        for w in dec.neighbors(c.u) {
            heap.push(dec.plan(c.u, w));
        }
    }
    let reached = alive <= target;
    if !reached {
        warn!("simplification stopped at {alive} vertices (target {target})");
    }
    let out = dec.finish()?;
    let after = out.genus()?;
    if after != genus {
        return Err(SimplifyError::GenusChanged { before: genus, after });
    }
    debug!("simplified {} -> {} vertices", mesh.num_vertices(), out.num_vertices());
    Ok(SimplifyResult { mesh: out, target, reached })
}

/// Uniform grid over vertex positions for exact nearest-vertex queries.
pub struct NearestVertex<'a> {
    positions: &'a [Vec3],
    origin: Vec3,
    cell: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
    lo: [i64; 3],
    hi: [i64; 3],
}

impl<'a> NearestVertex<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        let positions = mesh.positions();
        let cell = {
            let mean = mesh.total_edge_length() / mesh.num_edges().max(1) as f64;
            if mean > 0.0 {
                mean
            } else {
                1.0
            }
        };
        let origin = mesh.bounding_box().0;
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        let mut grid =
            NearestVertex { positions, origin, cell, cells: HashMap::new(), lo: [i64::MAX; 3], hi: [i64::MIN; 3] };
        for (v, p) in positions.iter().enumerate() {
            let k = grid.key(p);
            for a in 0..3 {
                grid.lo[a] = grid.lo[a].min(k[a]);
                grid.hi[a] = grid.hi[a].max(k[a]);
            }
            cells.entry(k).or_default().push(v);
        }
        grid.cells = cells;
        grid
    }

    fn key(&self, p: &Vec3) -> [i64; 3] {
        let q = (p - self.origin) / self.cell;
        [q.x.floor() as i64, q.y.floor() as i64, q.z.floor() as i64]
    }

    /// Closest vertex; ties go to the smaller index.
    pub fn nearest(&self, p: &Vec3) -> usize {
        let k = self.key(p);
        let mut best: Option<(f64, usize)> = None;
        let max_r = (0..3).map(|a| (self.hi[a] - k[a]).abs().max((k[a] - self.lo[a]).abs())).max().unwrap_or(0);
        for r in 0..=max_r {
            for dx in -r..=r {
                for dy in -r..=r {
                    for dz in -r..=r {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                            continue;
                        }
                        if let Some(vs) = self.cells.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                            for &v in vs {
                                let d = (self.positions[v] - p).norm_squared();
                                if best.is_none_or(|(bd, bv)| d < bd || (d == bd && v < bv)) {
                                    best = Some((d, v));
                                }
                            }
                        }
                    }
                }
            }
            // Cells outside shell r are at least r cells away.
            if let Some((d, _)) = best {
                if d.sqrt() <= r as f64 * self.cell {
                    break;
                }
            }
        }
        best.map(|b| b.1).expect("mesh has vertices")
    }
}

/// Maps points on `simplified` to their nearest vertices on `original`,
/// merging duplicates by keeping the larger vote count.
pub fn map_back(points: &DistortionPointSet, simplified: &TriMesh, original: &TriMesh) -> DistortionPointSet {
    let grid = NearestVertex::new(original);
    let mut merged: HashMap<usize, usize> = HashMap::new();
    for p in &points.points {
        let v = grid.nearest(&simplified.positions()[p.vertex]);
        let e = merged.entry(v).or_insert(0);
        *e = (*e).max(p.votes);
    }
    DistortionPointSet::from_points(
        merged.into_iter().map(|(vertex, votes)| DistortionPoint { vertex, votes }).collect(),
    )
}
