//! Cut graph through the distortion points: an approximate Steiner tree
//! built from the minimum spanning tree of pairwise shortest edge paths.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::cutgen::{
    extend_single_edge, farthest_vertex, prune_leaves, random_genus0_cut, tree_cotree_cut_graph, CutError, RngStream,
};
use crate::graph::{EdgeGraph, ShortestPaths};
use crate::mesh::{EdgePath, MeshTopology, TriMesh};

fn key(a: usize, b: usize) -> [usize; 2] {
    [a.min(b), a.max(b)]
}

/// Splits an edge set into maximal paths between vertices of degree ≠ 2,
/// plus closed loops for cycles without such vertices.
pub fn edges_to_paths(edges: &[[usize; 2]]) -> Vec<EdgePath> {
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &[a, b] in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    for nb in adj.values_mut() {
        nb.sort_unstable();
    }
    let mut used: HashSet<[usize; 2]> = HashSet::new();
    let mut paths = Vec::new();
    let walk = |start: usize, first: usize, used: &mut HashSet<[usize; 2]>| {
        let mut verts = vec![start, first];
        used.insert(key(start, first));
        let mut prev = start;
        let mut cur = first;
        while adj[&cur].len() == 2 && cur != start {
            let next = if adj[&cur][0] == prev { adj[&cur][1] } else { adj[&cur][0] };
            if !used.insert(key(cur, next)) {
                break;
            }
            verts.push(next);
            prev = cur;
            cur = next;
        }
        verts
    };
    for (&v, nb) in &adj {
        if nb.len() == 2 {
            continue;
        }
        for &u in nb {
            if !used.contains(&key(v, u)) {
                let mut verts = walk(v, u, &mut used);
                if verts.len() > 3 && verts.last() == Some(&v) {
                    verts.pop();
                    paths.push(EdgePath::closed(verts));
                } else {
                    paths.push(EdgePath::open(verts));
                }
            }
        }
    }
    for (&v, nb) in &adj {
        for &u in nb {
            if !used.contains(&key(v, u)) {
                let mut verts = walk(v, u, &mut used);
                if verts.last() == Some(&v) {
                    verts.pop();
                }
                paths.push(EdgePath::closed(verts));
            }
        }
    }
    paths
}

/// Cut paths through `points`. With no points a genus-0 mesh gets a random
/// cut; a single point on a genus-0 mesh is joined to its farthest vertex.
/// On higher genus a loop cut graph joins the tree as one extra node.
pub fn mst_cut(mesh: &TriMesh, points: &[usize], rng: &mut RngStream) -> Result<Vec<EdgePath>, CutError> {
    let genus = mesh.genus()?;
    let terminals: Vec<usize> = points.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    for &v in &terminals {
        if v >= mesh.num_vertices() {
            return Err(crate::mesh::MeshError::InvalidVertex(v).into());
        }
    }
    let topology = MeshTopology::new(mesh);
    let graph = EdgeGraph::euclidean(mesh, &topology);

    if genus == 0 {
        match terminals.as_slice() {
            [] => return Ok(random_genus0_cut(mesh, rng)?.cut_paths),
            [p] => {
                let far = farthest_vertex(mesh, *p)?;
                let target = if far == *p { topology.neighbors(*p)[0] } else { far };
                let mut path = EdgePath::open(graph.dijkstra(&[*p], Some(target)).path_to(target).expect("connected"));
                extend_single_edge(&mut path, &topology);
                return Ok(vec![path]);
            }
            _ => {}
        }
    }

    let loops = if genus > 0 { tree_cotree_cut_graph(mesh, &topology, 0) } else { Vec::new() };
    let loop_vertices: Vec<usize> =
        loops.iter().flat_map(|e| e.iter().copied()).collect::<BTreeSet<_>>().into_iter().collect();

    // Nodes: terminals, then the loop graph as one super-node.
    let mut sources: Vec<Vec<usize>> = terminals.iter().map(|&t| vec![t]).collect();
    if !loop_vertices.is_empty() {
        sources.push(loop_vertices.clone());
    }
    let trees: Vec<ShortestPaths> = sources.iter().map(|s| graph.dijkstra(s, None)).collect();
    let k = sources.len();
    let node_dist =
        |i: usize, j: usize| -> f64 { sources[j].iter().map(|&v| trees[i].dist[v]).fold(f64::INFINITY, f64::min) };

    // Prim's algorithm on the complete node graph.
    let mut in_tree = vec![false; k];
    let mut best = vec![(f64::INFINITY, usize::MAX); k];
    let mut mst = Vec::new();
    if k > 0 {
        in_tree[0] = true;
        for j in 1..k {
            best[j] = (node_dist(0, j), 0);
        }
        for _ in 1..k {
            let j = (0..k)
                .filter(|&j| !in_tree[j])
                .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0).then(a.cmp(&b)))
                .expect("node left");
            in_tree[j] = true;
            mst.push((best[j].1, j));
            for l in 0..k {
                if !in_tree[l] {
                    let d = node_dist(j, l);
                    if d < best[l].0 {
                        best[l] = (d, j);
                    }
                }
            }
        }
    }

    let mut edges: Vec<[usize; 2]> = loops.clone();
    let mut path_edges = Vec::new();
    for (i, j) in mst {
        // The super-node (last index) can only be a path source.
        let (from, to) = if j >= terminals.len() { (j, i) } else { (i, j) };
        let target = sources[to][0];
        let verts = trees[from].path_to(target).expect("connected mesh");
        for w in verts.windows(2) {
            path_edges.push(key(w[0], w[1]));
        }
    }

    // Keep the loop graph intact; add path edges as a spanning forest on top.
    let mut parent: Vec<usize> = (0..mesh.num_vertices()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &[a, b] in &loops {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra.max(rb)] = ra.min(rb);
    }
    path_edges.sort_unstable();
    path_edges.dedup();
    let loop_set: HashSet<[usize; 2]> = loops.iter().copied().collect();
    for e in path_edges {
        if loop_set.contains(&e) {
            continue;
        }
        let (ra, rb) = (find(&mut parent, e[0]), find(&mut parent, e[1]));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
            edges.push(e);
        }
    }
    let keep: HashSet<usize> = terminals.iter().copied().collect();
    let mut edges = prune_leaves(edges, &keep);
    if edges.len() == 1 {
        let mut p = EdgePath::open(edges[0].to_vec());
        extend_single_edge(&mut p, &topology);
        edges = p.edges().map(|[a, b]| key(a, b)).collect();
    }
    Ok(edges_to_paths(&edges))
}
