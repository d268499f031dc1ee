//! Random cuts that open a closed mesh into a disk.
//!
//! Genus-zero meshes are cut along the shortest edge path between a random
//! vertex and the vertex farthest from it. Higher genus meshes first have
//! their handles removed: non-separating loops from a tree-cotree
//! decomposition (with randomly perturbed edge weights, so that the loops
//! move from run to run) are cut open and the resulting holes are filled.

use std::collections::HashSet;

use log::debug;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::EdgeGraph;
use crate::mesh::{boundary_loops, cut_along, cut_along_edges, fill_holes, EdgePath, MeshError, MeshTopology, TriMesh};

#[derive(Debug, Error)]
pub enum CutError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("no edge path between vertices {0} and {1}")]
    Disconnected(usize, usize),
    #[error("shortest path needs two distinct vertices")]
    SameVertex,
    #[error("expected a genus-0 mesh, got genus {0}")]
    NotGenusZero(usize),
    #[error("cut did not produce a disk ({boundaries} boundary loops, euler characteristic {euler})")]
    NotADisk { boundaries: usize, euler: i64 },
    #[error("cutting handle loops left genus {got}, expected {expected}")]
    HandleCut { got: usize, expected: usize },
}

/// Deterministic random stream: one per candidate run.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// A disk-topology copy of a closed mesh.
#[derive(Debug, Clone)]
pub struct CutResult {
    /// The cut mesh; its origin index points into the source mesh and its
    /// filled mask marks triangles added by hole filling.
    pub disk: TriMesh,
    /// Cut paths in source-mesh vertex indices. A path crossing a filled
    /// region is split into the pieces that lie on the source mesh.
    pub cut_paths: Vec<EdgePath>,
}

impl CutResult {
    pub fn filled(&self) -> &[bool] {
        self.disk.filled_mask()
    }
}

/// Vertex with the largest Euclidean distance from `from`; ties go to the
/// smallest index.
pub fn farthest_vertex(mesh: &TriMesh, from: usize) -> Result<usize, MeshError> {
    let p = mesh.positions();
    let origin = *p.get(from).ok_or(MeshError::InvalidVertex(from))?;
    let mut best = (0usize, -1.0f64);
    for (k, q) in p.iter().enumerate() {
        let d = (q - origin).norm_squared();
        if d > best.1 {
            best = (k, d);
        }
    }
    Ok(best.0)
}

/// Dijkstra path over mesh edges with Euclidean lengths.
pub fn shortest_edge_path(mesh: &TriMesh, a: usize, b: usize) -> Result<EdgePath, CutError> {
    let topology = MeshTopology::new(mesh);
    let graph = EdgeGraph::euclidean(mesh, &topology);
    shortest_path_in(&graph, a, b)
}

fn shortest_path_in(graph: &EdgeGraph, a: usize, b: usize) -> Result<EdgePath, CutError> {
    let n = graph.num_vertices();
    for v in [a, b] {
        if v >= n {
            return Err(MeshError::InvalidVertex(v).into());
        }
    }
    if a == b {
        return Err(CutError::SameVertex);
    }
    let sp = graph.dijkstra(&[a], Some(b));
    sp.path_to(b).map(EdgePath::open).ok_or(CutError::Disconnected(a, b))
}

/// An open path of a single edge cannot open an indexed mesh (neither
/// endpoint is duplicated), so extend it by one more edge from its end.
pub(crate) fn extend_single_edge(path: &mut EdgePath, topology: &MeshTopology) {
    if path.closed || path.len() != 2 {
        return;
    }
    let (a, b) = (path.vertices[0], path.vertices[1]);
    if let Some(c) = topology.neighbors(b).iter().copied().find(|&c| c != a) {
        path.vertices.push(c);
    }
}

pub(crate) fn check_disk(disk: &TriMesh) -> Result<(), CutError> {
    let boundaries = boundary_loops(disk).len();
    let euler = disk.euler_characteristic();
    if boundaries != 1 || euler != 1 {
        return Err(CutError::NotADisk { boundaries, euler });
    }
    Ok(())
}

fn map_to_source(mesh: &TriMesh, path: &EdgePath) -> Vec<EdgePath> {
    let mut pieces = Vec::new();
    let mut cur = Vec::new();
    let verts: Vec<Option<usize>> = path.vertices.iter().map(|&v| mesh.origin_of(v)).collect();
    let all = verts.iter().all(|v| v.is_some());
    if all && path.closed {
        return vec![EdgePath::closed(verts.into_iter().flatten().collect())];
    }
    for v in verts {
        match v {
            Some(v) => cur.push(v),
            None => {
                if cur.len() >= 2 {
                    pieces.push(EdgePath::open(std::mem::take(&mut cur)));
                }
                cur.clear();
            }
        }
    }
    if cur.len() >= 2 {
        pieces.push(EdgePath::open(cur));
    }
    pieces
}

/// Cuts a closed genus-0 mesh from a uniformly drawn vertex to the vertex
/// farthest from it.
pub fn random_genus0_cut(mesh: &TriMesh, rng: &mut RngStream) -> Result<CutResult, CutError> {
    let genus = mesh.genus()?;
    if genus != 0 {
        return Err(CutError::NotGenusZero(genus));
    }
    let start = rng.random_range(0..mesh.num_vertices());
    let end = farthest_vertex(mesh, start)?;
    let topology = MeshTopology::new(mesh);
    let graph = EdgeGraph::euclidean(mesh, &topology);
    let mut path = shortest_path_in(&graph, start, end)?;
    extend_single_edge(&mut path, &topology);
    debug!("genus-0 cut {start} -> {end}, {} vertices", path.len());
    let disk = cut_along(mesh, &path)?;
    check_disk(&disk)?;
    Ok(CutResult { cut_paths: map_to_source(mesh, &path), disk })
}

/// Non-separating loops from a tree-cotree decomposition with the given
/// per-edge weights: a shortest-path tree from `root`, a maximum spanning
/// tree of the dual graph (weighted by fundamental-loop length) over the
/// remaining edges, and one loop per leftover edge, trimmed at the lowest
/// common ancestor of its endpoints. Loops are sorted by length.
pub(crate) fn tree_cotree_loops(
    mesh: &TriMesh,
    topology: &MeshTopology,
    weights: &[f64],
    root: usize,
) -> Vec<EdgePath> {
    let graph = EdgeGraph::with_weights(topology, weights);
    let sp = graph.dijkstra(&[root], None);
    let n = mesh.num_vertices();
    let mut depth = vec![usize::MAX; n];
    let tree_edge: HashSet<usize> =
        (0..n).filter_map(|v| sp.pred[v].map(|p| topology.edge_id(v, p).expect("tree edge"))).collect();
    fn depth_of(v: usize, pred: &[Option<usize>], depth: &mut [usize]) -> usize {
        if depth[v] != usize::MAX {
            return depth[v];
        }
        let mut chain = vec![v];
        let mut cur = v;
        while let Some(p) = pred[cur] {
            if depth[p] != usize::MAX {
                break;
            }
            chain.push(p);
            cur = p;
        }
        let mut d = match pred[cur] {
            Some(p) => depth[p] + 1,
            None => 0,
        };
        for &u in chain.iter().rev() {
            depth[u] = d;
            d += 1;
        }
        depth[v]
    }
    for v in 0..n {
        depth_of(v, &sp.pred, &mut depth);
    }

    // Dual spanning tree over non-tree edges, heaviest fundamental loops first.
    let edges = topology.edges();
    let loop_len = |e: usize| {
        let [a, b] = edges[e];
        sp.dist[a] + sp.dist[b] + weights[e]
    };
    let mut candidates: Vec<usize> = (0..edges.len()).filter(|e| !tree_edge.contains(e)).collect();
    candidates.sort_by(|&x, &y| loop_len(y).total_cmp(&loop_len(x)).then(x.cmp(&y)));
    let mut parent: Vec<usize> = (0..mesh.num_triangles()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut leftover = Vec::new();
    for e in candidates {
        let ts = topology.edge_triangles_by_id(e);
        let joined = if ts.len() == 2 {
            let (a, b) = (find(&mut parent, ts[0]), find(&mut parent, ts[1]));
            if a != b {
                parent[a.max(b)] = a.min(b);
                true
            } else {
                false
            }
        } else {
            false
        };
        if !joined {
            leftover.push(e);
        }
    }

    let mut loops: Vec<(f64, usize, EdgePath)> = leftover
        .into_iter()
        .map(|e| {
            let [mut a, mut b] = edges[e];
            let (mut left, mut right) = (vec![a], vec![b]);
            while a != b {
                if depth[a] >= depth[b] {
                    a = sp.pred[a].expect("non-root has parent");
                    left.push(a);
                } else {
                    b = sp.pred[b].expect("non-root has parent");
                    right.push(b);
                }
            }
            // left ends at the common ancestor; right ends there too.
            right.pop();
            right.reverse();
            let mut verts = right;
            verts.extend(left);
            // verts: b-side from just below LCA down to b, then a up to LCA.
            let path = EdgePath::closed(verts);
            (path.length(mesh), e, path)
        })
        .collect();
    loops.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    loops.into_iter().map(|l| l.2).collect()
}

/// Union of the full fundamental cycles (tree paths to the root included)
/// with dangling tree branches pruned: a cut graph that opens a closed
/// surface into a disk.
pub(crate) fn tree_cotree_cut_graph(mesh: &TriMesh, topology: &MeshTopology, root: usize) -> Vec<[usize; 2]> {
    let weights: Vec<f64> = topology.edges().iter().map(|&[a, b]| mesh.edge_length(a, b)).collect();
    let loops = tree_cotree_loops(mesh, topology, &weights, root);
    if loops.is_empty() {
        return Vec::new();
    }
    let graph = EdgeGraph::with_weights(topology, &weights);
    let sp = graph.dijkstra(&[root], None);
    let mut edges: HashSet<[usize; 2]> = HashSet::new();
    let add_root_path = |v: usize, edges: &mut HashSet<[usize; 2]>| {
        let mut cur = v;
        while let Some(p) = sp.pred[cur] {
            edges.insert([cur.min(p), cur.max(p)]);
            cur = p;
        }
    };
    for lp in &loops {
        for [a, b] in lp.edges() {
            edges.insert([a.min(b), a.max(b)]);
        }
        add_root_path(lp.vertices[0], &mut edges);
    }
    prune_leaves(edges.into_iter().collect(), &HashSet::new())
}

/// Repeatedly removes degree-1 vertices not in `keep`. Output is sorted.
pub(crate) fn prune_leaves(mut edges: Vec<[usize; 2]>, keep: &HashSet<usize>) -> Vec<[usize; 2]> {
    loop {
        let mut degree: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        for &[a, b] in &edges {
            *degree.entry(a).or_default() += 1;
            *degree.entry(b).or_default() += 1;
        }
        let before = edges.len();
        edges.retain(|&[a, b]| {
            let leaf = |v: usize| degree[&v] == 1 && !keep.contains(&v);
            !(leaf(a) || leaf(b))
        });
        if edges.len() == before {
            break;
        }
    }
    edges.sort_unstable();
    edges
}

/// `2g` non-separating loops whose edge weights are Euclidean lengths times
/// a random factor in `[1, 1 + rho]`. The tree root is drawn uniformly.
/// Returns an empty list for genus 0.
pub fn handle_loops(mesh: &TriMesh, rng: &mut RngStream, rho: f64) -> Result<Vec<EdgePath>, CutError> {
    let genus = mesh.genus()?;
    if genus == 0 {
        return Ok(Vec::new());
    }
    let topology = MeshTopology::new(mesh);
    let weights: Vec<f64> =
        topology.edges().iter().map(|&[a, b]| mesh.edge_length(a, b) * (1.0 + rho * rng.random::<f64>())).collect();
    let root = rng.random_range(0..mesh.num_vertices());
    let loops = tree_cotree_loops(mesh, &topology, &weights, root);
    debug_assert_eq!(loops.len(), 2 * genus);
    Ok(loops)
}

/// Opens any closed mesh into a disk. Handles are removed round by round:
/// a greedy vertex-disjoint subset of the current handle loops is cut and the
/// holes are filled, until the surface has genus 0; then the genus-0 cut is
/// applied.
pub fn to_disk(mesh: &TriMesh, rng: &mut RngStream, rho: f64) -> Result<CutResult, CutError> {
    let mut genus = mesh.genus()?;
    if genus == 0 {
        return random_genus0_cut(mesh, rng);
    }
    let mut current = mesh.clone();
    let mut paths = Vec::new();
    while genus > 0 {
        let loops = handle_loops(&current, rng, rho)?;
        let mut used = HashSet::new();
        let mut chosen: Vec<&EdgePath> = Vec::new();
        for lp in &loops {
            if lp.vertices.iter().all(|v| !used.contains(v)) {
                used.extend(lp.vertices.iter().copied());
                chosen.push(lp);
            }
        }
        let edges: Vec<[usize; 2]> = chosen.iter().flat_map(|lp| lp.edges()).collect();
        let opened = match chosen.as_slice() {
            [single] => cut_along(&current, single)?,
            _ => cut_along_edges(&current, &edges)?,
        };
        let closed = fill_holes(&opened)?;
        let expected = genus - chosen.len();
        let got = closed.genus()?;
        if got != expected {
            return Err(CutError::HandleCut { got, expected });
        }
        for lp in chosen {
            paths.extend(map_to_source(&current, lp));
        }
        debug!("cut {} handle loops, genus {genus} -> {got}", genus - got);
        current = closed;
        genus = got;
    }
    let mut result = random_genus0_cut(&current, rng)?;
    paths.append(&mut result.cut_paths);
    result.cut_paths = paths;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn farthest_on_cube() {
        let cube = shapes::cube();
        let origin = cube.positions().iter().position(|p| p.norm() == 0.0).unwrap();
        let far = farthest_vertex(&cube, origin).unwrap();
        assert_eq!(cube.positions()[far], crate::mesh::Vec3::new(1.0, 1.0, 1.0));
        assert!(matches!(farthest_vertex(&cube, 8), Err(MeshError::InvalidVertex(8))));
    }

    #[test]
    fn farthest_matches_scan_with_ties() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // A closed mesh whose positions are replaced by random points; the
        // connectivity is irrelevant to the farthest-vertex query.
        let base = shapes::icosphere(1);
        let mut pts: Vec<_> = (0..base.num_vertices())
            .map(|_| crate::mesh::Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        // Duplicate the point that is farthest from vertex 0 at a later index.
        let far =
            (0..pts.len()).max_by(|&a, &b| (pts[a] - pts[0]).norm().total_cmp(&(pts[b] - pts[0]).norm())).unwrap();
        let last = pts.len() - 1;
        pts[last] = pts[far];
        let m = TriMesh::new(pts.clone(), base.triangles().to_vec()).unwrap();
        for from in 0..pts.len() {
            let mut best = 0;
            for k in 0..pts.len() {
                if (pts[k] - pts[from]).norm_squared() > (pts[best] - pts[from]).norm_squared() {
                    best = k;
                }
            }
            assert_eq!(farthest_vertex(&m, from).unwrap(), best);
        }
        assert_eq!(farthest_vertex(&m, 0).unwrap(), far.min(last));
    }

    #[test]
    fn adjacent_vertices_give_direct_edge() {
        let m = shapes::icosahedron();
        let topo = MeshTopology::new(&m);
        let b = topo.neighbors(0)[0];
        assert_eq!(shortest_edge_path(&m, 0, b).unwrap().vertices, vec![0, b]);
        assert!(matches!(shortest_edge_path(&m, 0, 0), Err(CutError::SameVertex)));
    }

    #[test]
    fn five_cycle_takes_short_side() {
        // Pentagon fan: the rim is a 5-cycle with unit-ish edges; the centre
        // is lifted far away so no path goes through it.
        let mut m = shapes::fan(5, 1.0);
        let mut p = m.positions().to_vec();
        p[0].z = 100.0;
        m = TriMesh::new(p, m.triangles().to_vec()).unwrap();
        // Rim vertices 1..=5; 1 -> 3 has a 2-edge side and a 3-edge side.
        let path = shortest_edge_path(&m, 1, 3).unwrap();
        // Oracle: enumerate both simple rim paths.
        let side_a = [1, 2, 3];
        let side_b = [1, 5, 4, 3];
        let len = |vs: &[usize]| vs.windows(2).map(|w| m.edge_length(w[0], w[1])).sum::<f64>();
        assert!(len(&side_a) < len(&side_b));
        assert_eq!(path.vertices, side_a);
    }

    #[test]
    fn cube_diagonal_path_is_graph_shortest() {
        let m = shapes::cube();
        let from = 0;
        let to = farthest_vertex(&m, from).unwrap();
        let path = shortest_edge_path(&m, from, to).unwrap();
        // Floyd-Warshall on the 8-vertex graph.
        let n = 8;
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for [a, b] in m.edges() {
            d[a][b] = m.edge_length(a, b);
            d[b][a] = d[a][b];
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
                }
            }
        }
        assert!((path.length(&m) - d[from][to]).abs() < 1e-12);
    }

    #[test]
    fn genus0_cut_is_deterministic_disk() {
        let m = shapes::icosphere(2);
        let a = random_genus0_cut(&m, &mut RngStream::new(5, 0)).unwrap();
        let b = random_genus0_cut(&m, &mut RngStream::new(5, 0)).unwrap();
        assert_eq!(a.disk, b.disk);
        assert_eq!(a.cut_paths, b.cut_paths);
        assert_eq!(a.disk.euler_characteristic(), 1);
        assert_eq!(boundary_loops(&a.disk).len(), 1);
    }

    #[test]
    fn genus0_cut_varies_with_stream() {
        let m = shapes::icosphere(3);
        let paths: HashSet<Vec<usize>> = (0..10)
            .map(|s| random_genus0_cut(&m, &mut RngStream::new(1, s)).unwrap().cut_paths[0].vertices.clone())
            .collect();
        assert!(paths.len() >= 2);
    }

    #[test]
    fn tetrahedron_cut_is_extended_to_two_edges() {
        let m = shapes::tetrahedron();
        let r = random_genus0_cut(&m, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(r.disk.num_vertices(), 5);
    }

    #[test]
    fn genus0_cut_rejects_torus() {
        let t = shapes::torus(8, 6, 1.0, 0.3);
        assert!(matches!(random_genus0_cut(&t, &mut RngStream::new(0, 0)), Err(CutError::NotGenusZero(1))));
    }

    #[test]
    fn torus_has_two_non_separating_loops() {
        let t = shapes::torus(16, 8, 1.0, 0.35);
        let loops = handle_loops(&t, &mut RngStream::new(3, 0), 0.5).unwrap();
        assert_eq!(loops.len(), 2);
        for lp in &loops {
            let cut = cut_along(&t, lp).unwrap();
            assert_eq!(cut.num_components(), 1);
            assert_eq!(boundary_loops(&cut).len(), 2);
        }
    }

    #[test]
    fn genus_two_has_four_loops() {
        let m = shapes::double_torus(2);
        let loops = handle_loops(&m, &mut RngStream::new(0, 0), 0.5).unwrap();
        assert_eq!(loops.len(), 4);
    }

    #[test]
    fn genus_zero_has_no_loops() {
        assert!(handle_loops(&shapes::cube(), &mut RngStream::new(0, 0), 0.5).unwrap().is_empty());
    }

    #[test]
    fn perturbation_moves_loops() {
        let t = shapes::torus(24, 12, 1.0, 0.35);
        let sets: HashSet<Vec<Vec<usize>>> = (0..10)
            .map(|s| {
                handle_loops(&t, &mut RngStream::new(9, s), 0.5)
                    .unwrap()
                    .into_iter()
                    .map(|l| {
                        let mut v = l.vertices;
                        v.sort_unstable();
                        v
                    })
                    .collect()
            })
            .collect();
        assert!(sets.len() >= 2);
    }

    #[test]
    fn all_loops_and_fill_give_genus_zero() {
        let m = shapes::double_torus(2);
        let topo = MeshTopology::new(&m);
        let cut_graph = tree_cotree_cut_graph(&m, &topo, 0);
        let disk = cut_along_edges(&m, &cut_graph).unwrap();
        check_disk(&disk).unwrap();
        assert_eq!(fill_holes(&disk).unwrap().genus().unwrap(), 0);
    }

    #[test]
    fn to_disk_on_torus_and_double_torus() {
        for m in [shapes::torus(20, 10, 1.0, 0.35), shapes::double_torus(2)] {
            for s in 0..4 {
                let r = to_disk(&m, &mut RngStream::new(2, s), 0.5).unwrap();
                check_disk(&r.disk).unwrap();
                assert_eq!(r.disk.num_triangles(), m.num_triangles() + r.disk.num_filled());
                assert!(r.disk.num_filled() > 0);
                // Boundary vertices come from cut paths or filled rims.
                let on_paths: HashSet<usize> = r.cut_paths.iter().flat_map(|p| p.vertices.iter().copied()).collect();
                for lp in boundary_loops(&r.disk) {
                    for v in lp {
                        if let Some(o) = r.disk.origin_of(v) {
                            assert!(on_paths.contains(&o));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn to_disk_genus0_equals_random_cut() {
        let m = shapes::icosphere(2);
        let a = to_disk(&m, &mut RngStream::new(4, 1), 0.5).unwrap();
        let b = random_genus0_cut(&m, &mut RngStream::new(4, 1)).unwrap();
        assert_eq!(a.disk, b.disk);
        let c = to_disk(&m, &mut RngStream::new(4, 1), 0.5).unwrap();
        assert_eq!(a.disk, c.disk);
    }
}
