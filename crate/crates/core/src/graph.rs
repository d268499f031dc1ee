//! Weighted vertex-edge graph of a mesh and Dijkstra shortest paths.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::mesh::{MeshTopology, TriMesh};

/// Adjacency in compressed rows; neighbours of each vertex are sorted by
/// index so traversal order (and thus tie-breaking) is deterministic.
#[derive(Debug, Clone)]
pub struct EdgeGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    edge_ids: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ShortestPaths {
    pub dist: Vec<f64>,
    pub pred: Vec<Option<usize>>,
}

impl ShortestPaths {
    /// Vertices from the nearest source to `v`, or `None` if unreachable.
    pub fn path_to(&self, v: usize) -> Option<Vec<usize>> {
        if !self.dist[v].is_finite() {
            return None;
        }
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.pred[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (distance, vertex).
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl EdgeGraph {
    /// Graph with Euclidean edge lengths.
    pub fn euclidean(mesh: &TriMesh, topology: &MeshTopology) -> Self {
        let w: Vec<f64> = topology.edges().iter().map(|&[a, b]| mesh.edge_length(a, b)).collect();
        Self::with_weights(topology, &w)
    }

    /// Graph with one weight per topology edge id.
    pub fn with_weights(topology: &MeshTopology, weights: &[f64]) -> Self {
        let n = topology.num_vertices();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut w = Vec::new();
        let mut edge_ids = Vec::new();
        offsets.push(0);
        for v in 0..n {
            for &u in topology.neighbors(v) {
                let e = topology.edge_id(v, u).expect("neighbour shares an edge");
                targets.push(u);
                w.push(weights[e]);
                edge_ids.push(e);
            }
            offsets.push(targets.len());
        }
        EdgeGraph { offsets, targets, weights: w, edge_ids }
    }

    pub fn num_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    /// `(neighbour, weight, edge id)` triples of `v`, ascending by neighbour.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64, usize)> + '_ {
        (self.offsets[v]..self.offsets[v + 1]).map(move |i| (self.targets[i], self.weights[i], self.edge_ids[i]))
    }

    /// Multi-source Dijkstra. Stops early once `target` is settled.
    pub fn dijkstra(&self, sources: &[usize], target: Option<usize>) -> ShortestPaths {
        let n = self.num_vertices();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            dist[s] = 0.0;
            heap.push(Entry(0.0, s));
        }
        while let Some(Entry(d, v)) = heap.pop() {
            if done[v] {
                continue;
            }
            done[v] = true;
            if Some(v) == target {
                break;
            }
            for (u, w, _) in self.neighbors(v) {
                let nd = d + w;
                if nd < dist[u] {
                    dist[u] = nd;
                    pred[u] = Some(v);
                    heap.push(Entry(nd, u));
                }
            }
        }
        ShortestPaths { dist, pred }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn distances_match_floyd_warshall_on_icosahedron() {
        let m = shapes::icosahedron();
        let topo = MeshTopology::new(&m);
        let g = EdgeGraph::euclidean(&m, &topo);
        let n = m.num_vertices();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (v, row) in d.iter_mut().enumerate() {
            row[v] = 0.0;
        }
        for &[a, b] in topo.edges() {
            d[a][b] = m.edge_length(a, b);
            d[b][a] = d[a][b];
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        for s in 0..n {
            let sp = g.dijkstra(&[s], None);
            for t in 0..n {
                assert!((sp.dist[t] - d[s][t]).abs() < 1e-12);
            }
        }
    }
}
