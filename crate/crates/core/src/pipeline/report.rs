use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::json;

use super::PipelineConfig;
use crate::mesh::TriMesh;
use crate::vote::DistortionPointSet;

/// Isometric distortion statistics of a final parameterization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionReport {
    #[serde(skip)]
    pub per_triangle: Vec<f64>,
    pub delta_avg: f64,
    pub delta_max: f64,
    pub delta_std: f64,
    pub cut_length_ratio: f64,
    pub n_triangles: usize,
    pub timings_ms: BTreeMap<String, f64>,
}

impl DistortionReport {
    /// Unweighted mean, maximum and population standard deviation.
    pub fn from_field(per_triangle: Vec<f64>, cut_length_ratio: f64) -> Self {
        let n = per_triangle.len();
        let mean = per_triangle.iter().sum::<f64>() / n as f64;
        let max = per_triangle.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let var = per_triangle.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        DistortionReport {
            per_triangle,
            delta_avg: mean,
            delta_max: max,
            delta_std: var.sqrt(),
            cut_length_ratio,
            n_triangles: n,
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointsMeta {
    pub seed: u64,
    #[serde(rename = "R")]
    pub runs: usize,
    pub min_votes: usize,
    pub n_ring: usize,
    #[serde(rename = "E_th")]
    pub e_th: f64,
    pub simplified: bool,
}

/// Points document: metadata plus vertex, votes and position per point.
pub fn points_json(points: &DistortionPointSet, mesh: &TriMesh, cfg: &PipelineConfig, simplified: bool) -> String {
    let meta = PointsMeta {
        seed: cfg.seed,
        runs: cfg.runs,
        min_votes: cfg.min_votes,
        n_ring: cfg.n_ring,
        e_th: cfg.e_th,
        simplified,
    };
    let pts: Vec<_> = points
        .points
        .iter()
        .map(|p| {
            let x = mesh.positions()[p.vertex];
            json!({ "vertex": p.vertex, "votes": p.votes, "position": [x.x, x.y, x.z] })
        })
        .collect();
    serde_json::to_string_pretty(&json!({ "meta": meta, "points": pts })).expect("points serialize")
}
