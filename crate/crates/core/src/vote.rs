//! Voting over candidate runs and ring-based post-filtering.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::detect::CandidateSet;
use crate::mesh::{MeshError, MeshTopology, TriMesh};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VoteTally {
    pub counts: BTreeMap<usize, usize>,
    pub runs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DistortionPoint {
    pub vertex: usize,
    pub votes: usize,
}

/// Selected points, sorted by vertex index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DistortionPointSet {
    pub points: Vec<DistortionPoint>,
}

impl DistortionPointSet {
    pub fn from_points(mut points: Vec<DistortionPoint>) -> Self {
        points.sort_by_key(|p| p.vertex);
        DistortionPointSet { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn vertices(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.vertex).collect()
    }
}

/// Number of runs containing each vertex.
pub fn tally(runs: &[CandidateSet]) -> VoteTally {
    let mut counts = BTreeMap::new();
    for run in runs {
        let unique: HashSet<usize> = run.vertices().collect();
        for v in unique {
            *counts.entry(v).or_insert(0) += 1;
        }
    }
    VoteTally { counts, runs: runs.len() }
}

/// Vertices with at least `min_votes` votes.
pub fn select(tally: &VoteTally, min_votes: usize) -> DistortionPointSet {
    DistortionPointSet::from_points(
        tally
            .counts
            .iter()
            .filter(|(_, &c)| c >= min_votes)
            .map(|(&vertex, &votes)| DistortionPoint { vertex, votes })
            .collect(),
    )
}

/// Greedy by votes (descending, then index ascending): a point is accepted
/// unless it lies within the `n`-ring of an already accepted point.
pub fn post_filter(points: &DistortionPointSet, mesh: &TriMesh, n: usize) -> Result<DistortionPointSet, MeshError> {
    let topology = MeshTopology::new(mesh);
    post_filter_with(points, &topology, n)
}

pub fn post_filter_with(
    points: &DistortionPointSet,
    topology: &MeshTopology,
    n: usize,
) -> Result<DistortionPointSet, MeshError> {
    let mut order = points.points.clone();
    order.sort_by(|a, b| b.votes.cmp(&a.votes).then(a.vertex.cmp(&b.vertex)));
    let mut accepted: Vec<DistortionPoint> = Vec::new();
    let mut blocked: HashSet<usize> = HashSet::new();
    for p in order {
        if blocked.contains(&p.vertex) {
            continue;
        }
        blocked.extend(topology.n_ring(p.vertex, n)?);
        blocked.insert(p.vertex);
        accepted.push(p);
    }
    Ok(DistortionPointSet::from_points(accepted))
}
