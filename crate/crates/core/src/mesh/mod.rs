//! Indexed triangle meshes: validation, topology queries, OBJ I/O, cutting
//! along edge paths and hole filling.
//!
//! A [`TriMesh`] is always an oriented 2-manifold (possibly with boundary).
//! Meshes derived from another mesh by cutting carry an *origin index* per
//! vertex that points back to the vertex of the source mesh it was copied
//! from, so results computed on differently cut copies can be compared on
//! the source mesh.

mod cut;
mod obj;
mod topology;

pub use cut::{boundary_loops, cut_along, cut_along_edges, fill_holes, EdgePath};
pub use obj::{fmt_g6, load_obj, read_obj, save_obj, write_obj};
pub use topology::{n_ring, MeshTopology};

use nalgebra::Vector3;
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("triangle {tri} references vertex {vertex} but the mesh has {count} vertices")]
    InvalidIndex { tri: usize, vertex: usize, count: usize },
    #[error("triangle {0} repeats a vertex")]
    RepeatedVertex(usize),
    #[error("edge ({0}, {1}) has more than two incident triangles")]
    NonManifoldEdge(usize, usize),
    #[error("edge ({0}, {1}) is used twice with the same orientation")]
    InconsistentOrientation(usize, usize),
    #[error("vertex {0} is non-manifold: its triangle fan is not a single disk")]
    NonManifoldVertex(usize),
    #[error("vertex {0} is not referenced by any triangle")]
    IsolatedVertex(usize),
    #[error("mesh has no triangles")]
    Empty,
    #[error("mesh has a boundary")]
    HasBoundary,
    #[error("mesh is already closed")]
    AlreadyClosed,
    #[error("mesh is not connected")]
    Disconnected,
    #[error("invalid vertex index {0}")]
    InvalidVertex(usize),
    #[error("invalid edge path: {0}")]
    InvalidPath(String),
    #[error("boundary loop has only {0} vertices")]
    DegenerateLoop(usize),
    #[error("per-vertex attribute has length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An oriented manifold triangle mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    positions: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    /// Source-mesh vertex for each vertex. `None` for the whole field means
    /// the mesh is its own source; `None` for an entry marks a vertex that
    /// has no source counterpart (hole-filling centroids).
    origin: Option<Vec<Option<usize>>>,
    /// Triangles added by hole filling.
    filled: Vec<bool>,
}

impl TriMesh {
    /// Builds a mesh after checking indices, edge and vertex manifoldness and
    /// orientation consistency.
    pub fn new(positions: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let filled = vec![false; triangles.len()];
        let mesh = TriMesh { positions, triangles, origin: None, filled };
        mesh.validate()?;
        Ok(mesh)
    }

    pub(crate) fn from_parts(
        positions: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        origin: Option<Vec<Option<usize>>>,
        filled: Vec<bool>,
    ) -> Result<Self, MeshError> {
        let mesh = TriMesh { positions, triangles, origin, filled };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Attaches an origin index to every vertex.
    pub fn with_origin(mut self, origin: Vec<Option<usize>>) -> Result<Self, MeshError> {
        if origin.len() != self.positions.len() {
            return Err(MeshError::LengthMismatch { got: origin.len(), expected: self.positions.len() });
        }
        self.origin = Some(origin);
        Ok(self)
    }

    /// Replaces the filled-triangle mask.
    pub fn with_filled(mut self, filled: Vec<bool>) -> Result<Self, MeshError> {
        if filled.len() != self.triangles.len() {
            return Err(MeshError::LengthMismatch { got: filled.len(), expected: self.triangles.len() });
        }
        self.filled = filled;
        Ok(self)
    }

    fn validate(&self) -> Result<(), MeshError> {
        let n = self.positions.len();
        if self.triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        if let Some(origin) = &self.origin {
            if origin.len() != n {
                return Err(MeshError::LengthMismatch { got: origin.len(), expected: n });
            }
        }
        if self.filled.len() != self.triangles.len() {
            return Err(MeshError::LengthMismatch { got: self.filled.len(), expected: self.triangles.len() });
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                if v >= n {
                    return Err(MeshError::InvalidIndex { tri: t, vertex: v, count: n });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedVertex(t));
            }
        }

        // Directed edges must be unique (orientation) and undirected edges
        // may carry at most two triangles.
        let mut directed: Vec<(usize, usize)> = Vec::with_capacity(self.triangles.len() * 3);
        for tri in &self.triangles {
            for k in 0..3 {
                directed.push((tri[k], tri[(k + 1) % 3]));
            }
        }
        directed.sort_unstable();
        for w in directed.windows(2) {
            if w[0] == w[1] {
                let (a, b) = w[0];
                // Same directed edge twice: either three or more triangles on
                // the edge or two triangles with clashing orientation.
                let reverse = directed.binary_search(&(b, a)).is_ok();
                return Err(if reverse {
                    MeshError::NonManifoldEdge(a.min(b), a.max(b))
                } else {
                    MeshError::InconsistentOrientation(a.min(b), a.max(b))
                });
            }
        }

        // Each vertex fan must be a single cycle or a single open chain.
        let mut link: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for tri in &self.triangles {
            for k in 0..3 {
                link[tri[k]].push((tri[(k + 1) % 3], tri[(k + 2) % 3]));
            }
        }
        for (v, edges) in link.iter().enumerate() {
            if edges.is_empty() {
                return Err(MeshError::IsolatedVertex(v));
            }
            if !single_fan(edges) {
                return Err(MeshError::NonManifoldVertex(v));
            }
        }
        Ok(())
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Source-mesh vertex that `v` was derived from.
    pub fn origin_of(&self, v: usize) -> Option<usize> {
        match &self.origin {
            None => Some(v),
            Some(o) => o[v],
        }
    }

    pub fn has_origin(&self) -> bool {
        self.origin.is_some()
    }

    pub fn is_filled(&self, t: usize) -> bool {
        self.filled[t]
    }

    pub fn filled_mask(&self) -> &[bool] {
        &self.filled
    }

    pub fn num_filled(&self) -> usize {
        self.filled.iter().filter(|&&f| f).count()
    }

    /// Unique undirected edges as `[min, max]`, sorted.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut edges: Vec<[usize; 2]> = self
            .triangles
            .iter()
            .flat_map(|t| {
                (0..3).map(move |k| {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    [a.min(b), a.max(b)]
                })
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges().len()
    }

    /// V − E + F.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_triangles() as i64
    }

    pub fn is_closed(&self) -> bool {
        boundary_loops(self).is_empty()
    }

    /// Number of connected components of the vertex-edge graph.
    pub fn num_components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.num_vertices()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for t in &self.triangles {
            for k in 0..2 {
                let a = find(&mut parent, t[k]);
                let b = find(&mut parent, t[k + 1]);
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        (0..self.num_vertices()).filter(|&v| find(&mut parent, v) == v).count()
    }

    /// Genus of a closed connected surface, from V − E + F = 2 − 2g.
    pub fn genus(&self) -> Result<usize, MeshError> {
        if !self.is_closed() {
            return Err(MeshError::HasBoundary);
        }
        if self.num_components() != 1 {
            return Err(MeshError::Disconnected);
        }
        let chi = self.euler_characteristic();
        debug_assert!(chi <= 2 && chi % 2 == 0);
        Ok(((2 - chi) / 2) as usize)
    }

    pub fn edge_length(&self, a: usize, b: usize) -> f64 {
        (self.positions[a] - self.positions[b]).norm()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let p = &self.positions;
        0.5 * (p[b] - p[a]).cross(&(p[c] - p[a])).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn total_edge_length(&self) -> f64 {
        self.edges().iter().map(|&[a, b]| self.edge_length(a, b)).sum()
    }

    /// Copy with every position multiplied by `s`.
    pub fn scaled(&self, s: f64) -> TriMesh {
        let mut m = self.clone();
        for p in &mut m.positions {
            *p *= s;
        }
        m
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &self.positions {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }
}

/// `edges` are the link edges (b, c) of the triangles (v, b, c) around one
/// vertex. They form a single fan iff following `b -> c` visits them all.
fn single_fan(edges: &[(usize, usize)]) -> bool {
    if edges.len() == 1 {
        return true;
    }
    let next = |b: usize| edges.iter().find(|e| e.0 == b).map(|e| e.1);
    let has_incoming = |b: usize| edges.iter().any(|e| e.1 == b);
    // Start from a chain end if there is one.
    let start = edges.iter().find(|e| !has_incoming(e.0)).unwrap_or(&edges[0]).0;
    let mut cur = start;
    let mut count = 0;
    while let Some(nx) = next(cur) {
        count += 1;
        cur = nx;
        if cur == start || count > edges.len() {
            break;
        }
    }
    count == edges.len()
}
