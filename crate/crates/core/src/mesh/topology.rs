use std::collections::{BTreeSet, HashMap, VecDeque};

use super::{MeshError, TriMesh};

/// Adjacency tables derived from a [`TriMesh`].
#[derive(Debug, Clone, PartialEq)]
pub struct MeshTopology {
    vertex_triangles: Vec<Vec<usize>>,
    /// Sorted ascending.
    vertex_neighbors: Vec<Vec<usize>>,
    /// Undirected edges `[min, max]`, sorted.
    edges: Vec<[usize; 2]>,
    edge_index: HashMap<[usize; 2], usize>,
    edge_triangles: Vec<Vec<usize>>,
    /// Neighbour across edge (c[k], c[k+1]) of each triangle.
    triangle_neighbors: Vec<[Option<usize>; 3]>,
    boundary_edges: BTreeSet<[usize; 2]>,
}

impl MeshTopology {
    pub fn new(mesh: &TriMesh) -> Self {
        let n = mesh.num_vertices();
        let mut vertex_triangles = vec![Vec::new(); n];
        let mut vertex_neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            for k in 0..3 {
                vertex_triangles[tri[k]].push(t);
                vertex_neighbors[tri[k]].push(tri[(k + 1) % 3]);
                vertex_neighbors[tri[k]].push(tri[(k + 2) % 3]);
            }
        }
        for nb in &mut vertex_neighbors {
            nb.sort_unstable();
            nb.dedup();
        }

        let edges = mesh.edges();
        let edge_index: HashMap<[usize; 2], usize> = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut edge_triangles = vec![Vec::with_capacity(2); edges.len()];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edge_triangles[edge_index[&[a.min(b), a.max(b)]]].push(t);
            }
        }

        let mut triangle_neighbors = vec![[None; 3]; mesh.num_triangles()];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let e = edge_index[&[a.min(b), a.max(b)]];
                triangle_neighbors[t][k] = edge_triangles[e].iter().copied().find(|&o| o != t);
            }
        }

        let boundary_edges =
            edges.iter().zip(&edge_triangles).filter(|(_, ts)| ts.len() == 1).map(|(e, _)| *e).collect();

        MeshTopology {
            vertex_triangles,
            vertex_neighbors,
            edges,
            edge_index,
            edge_triangles,
            triangle_neighbors,
            boundary_edges,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_neighbors.len()
    }

    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_triangles[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.vertex_neighbors[v]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&[a.min(b), a.max(b)]).copied()
    }

    pub fn edge_triangles(&self, a: usize, b: usize) -> Option<&[usize]> {
        self.edge_id(a, b).map(|e| self.edge_triangles[e].as_slice())
    }

    pub fn edge_triangles_by_id(&self, e: usize) -> &[usize] {
        &self.edge_triangles[e]
    }

    pub fn triangle_neighbors(&self, t: usize) -> &[Option<usize>; 3] {
        &self.triangle_neighbors[t]
    }

    pub fn boundary_edges(&self) -> &BTreeSet<[usize; 2]> {
        &self.boundary_edges
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_edges.is_empty()
    }

    /// Vertices within `n` edge hops of `v`, excluding `v` itself.
    pub fn n_ring(&self, v: usize, n: usize) -> Result<BTreeSet<usize>, MeshError> {
        if v >= self.num_vertices() {
            return Err(MeshError::InvalidVertex(v));
        }
        let mut seen = BTreeSet::new();
        if n == 0 {
            return Ok(seen);
        }
        let mut depth = HashMap::new();
        depth.insert(v, 0usize);
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            let d = depth[&u];
            if d == n {
                continue;
            }
            for &w in self.neighbors(u) {
                if let std::collections::hash_map::Entry::Vacant(e) = depth.entry(w) {
                    e.insert(d + 1);
                    seen.insert(w);
                    queue.push_back(w);
                }
            }
        }
        seen.remove(&v);
        Ok(seen)
    }
}

/// Breadth-first `n`-ring of `v` on `mesh`.
pub fn n_ring(mesh: &TriMesh, v: usize, n: usize) -> Result<BTreeSet<usize>, MeshError> {
    MeshTopology::new(mesh).n_ring(v, n)
}
