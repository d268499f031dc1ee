use std::collections::{BTreeMap, HashSet};

use super::{MeshError, MeshTopology, TriMesh, Vec3};

/// A walk along mesh edges: an open path or a closed loop.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgePath {
    pub vertices: Vec<usize>,
    pub closed: bool,
}

impl EdgePath {
    pub fn open(vertices: Vec<usize>) -> Self {
        EdgePath { vertices, closed: false }
    }

    pub fn closed(vertices: Vec<usize>) -> Self {
        EdgePath { vertices, closed: true }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Consecutive vertex pairs, including the closing pair of a loop.
    pub fn edges(&self) -> impl Iterator<Item = [usize; 2]> + '_ {
        let n = self.vertices.len();
        let m = if self.closed { n } else { n.saturating_sub(1) };
        (0..m).map(move |i| [self.vertices[i], self.vertices[(i + 1) % n]])
    }

    pub fn length(&self, mesh: &TriMesh) -> f64 {
        self.edges().map(|[a, b]| mesh.edge_length(a, b)).sum()
    }

    /// Checks the path invariants against `topology`.
    pub fn validate(&self, topology: &MeshTopology) -> Result<(), MeshError> {
        let min_len = if self.closed { 3 } else { 2 };
        if self.vertices.len() < min_len {
            return Err(MeshError::InvalidPath(format!(
                "{} path needs at least {min_len} vertices",
                if self.closed { "closed" } else { "open" }
            )));
        }
        let mut seen = HashSet::new();
        for &v in &self.vertices {
            if v >= topology.num_vertices() {
                return Err(MeshError::InvalidVertex(v));
            }
            if !seen.insert(v) {
                return Err(MeshError::InvalidPath(format!("path visits vertex {v} twice")));
            }
        }
        for [a, b] in self.edges() {
            if topology.edge_id(a, b).is_none() {
                return Err(MeshError::InvalidPath(format!("({a}, {b}) is not a mesh edge")));
            }
        }
        Ok(())
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Cuts `mesh` open along a simple edge path or loop.
pub fn cut_along(mesh: &TriMesh, path: &EdgePath) -> Result<TriMesh, MeshError> {
    let topology = MeshTopology::new(mesh);
    path.validate(&topology)?;
    let edges: Vec<[usize; 2]> = path.edges().collect();
    cut_with_topology(mesh, &topology, &edges)
}

/// Cuts `mesh` open along an arbitrary set of edges (a cut graph).
///
/// Around every vertex the incident triangles are grouped into sectors
/// separated by cut edges; each sector gets its own copy of the vertex. The
/// first sector (lowest corner id) keeps the original index, further copies
/// are appended in vertex order. Triangle order and count are unchanged.
pub fn cut_along_edges(mesh: &TriMesh, edges: &[[usize; 2]]) -> Result<TriMesh, MeshError> {
    let topology = MeshTopology::new(mesh);
    cut_with_topology(mesh, &topology, edges)
}

fn cut_with_topology(mesh: &TriMesh, topology: &MeshTopology, edges: &[[usize; 2]]) -> Result<TriMesh, MeshError> {
    let mut cut = HashSet::with_capacity(edges.len());
    for &[a, b] in edges {
        match topology.edge_id(a, b) {
            Some(e) => {
                cut.insert(e);
            }
            None => return Err(MeshError::InvalidPath(format!("({a}, {b}) is not a mesh edge"))),
        }
    }

    let tris = mesh.triangles();
    let corner = |t: usize, v: usize| -> usize {
        let k = tris[t].iter().position(|&x| x == v).expect("vertex belongs to triangle");
        3 * t + k
    };
    let mut uf = UnionFind::new(3 * tris.len());
    for (e, &[a, b]) in topology.edges().iter().enumerate() {
        let ts = topology.edge_triangles_by_id(e);
        if ts.len() != 2 || cut.contains(&e) {
            continue;
        }
        uf.union(corner(ts[0], a), corner(ts[1], a));
        uf.union(corner(ts[0], b), corner(ts[1], b));
    }

    let n = mesh.num_vertices();
    let mut positions = mesh.positions().to_vec();
    let mut origin: Vec<Option<usize>> = (0..n).map(|v| mesh.origin_of(v)).collect();
    let mut new_tris = tris.to_vec();
    for v in 0..n {
        let mut corners: Vec<usize> = topology.vertex_triangles(v).iter().map(|&t| corner(t, v)).collect();
        corners.sort_unstable();
        let mut sectors: Vec<(usize, usize)> = Vec::new();
        for c in corners {
            let root = uf.find(c);
            let id = match sectors.iter().find(|s| s.0 == root) {
                Some(&(_, id)) => id,
                None => {
                    let id = if sectors.is_empty() {
                        v
                    } else {
                        positions.push(mesh.positions()[v]);
                        origin.push(mesh.origin_of(v));
                        positions.len() - 1
                    };
                    sectors.push((root, id));
                    id
                }
            };
            new_tris[c / 3][c % 3] = id;
        }
    }

    TriMesh::from_parts(positions, new_tris, Some(origin), mesh.filled_mask().to_vec())
}

/// Boundary loops, each oriented along the boundary half-edges of its
/// triangles and starting at its smallest vertex index. Loops are sorted by
/// that start vertex.
pub fn boundary_loops(mesh: &TriMesh) -> Vec<Vec<usize>> {
    let mut directed = HashSet::with_capacity(mesh.num_triangles() * 3);
    for t in mesh.triangles() {
        for k in 0..3 {
            directed.insert((t[k], t[(k + 1) % 3]));
        }
    }
    let mut next: BTreeMap<usize, usize> = BTreeMap::new();
    for &(a, b) in &directed {
        if !directed.contains(&(b, a)) {
            next.insert(a, b);
        }
    }
    let mut loops = Vec::new();
    let mut visited = HashSet::new();
    for &start in next.keys() {
        if visited.contains(&start) {
            continue;
        }
        let mut lp = vec![start];
        visited.insert(start);
        let mut cur = next[&start];
        while cur != start {
            lp.push(cur);
            visited.insert(cur);
            cur = match next.get(&cur) {
                Some(&n) => n,
                None => break,
            };
        }
        loops.push(lp);
    }
    loops
}

/// Closes every boundary loop with a fan of triangles around a new centroid
/// vertex. New triangles are flagged as filled; new vertices have no origin.
pub fn fill_holes(mesh: &TriMesh) -> Result<TriMesh, MeshError> {
    let loops = boundary_loops(mesh);
    if loops.is_empty() {
        return Err(MeshError::AlreadyClosed);
    }
    let mut positions = mesh.positions().to_vec();
    let mut triangles = mesh.triangles().to_vec();
    let mut origin: Vec<Option<usize>> = (0..mesh.num_vertices()).map(|v| mesh.origin_of(v)).collect();
    let mut filled = mesh.filled_mask().to_vec();
    for lp in &loops {
        if lp.len() < 3 {
            return Err(MeshError::DegenerateLoop(lp.len()));
        }
        let centroid = lp.iter().fold(Vec3::zeros(), |acc, &v| acc + mesh.positions()[v]) / lp.len() as f64;
        let c = positions.len();
        positions.push(centroid);
        origin.push(None);
        for i in 0..lp.len() {
            let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
            triangles.push([b, a, c]);
            filled.push(true);
        }
    }
    TriMesh::from_parts(positions, triangles, Some(origin), filled)
}
