//! Hierarchical median clustering of high-distortion triangles and their
//! conversion to candidate vertices.

use std::collections::{BTreeMap, VecDeque};

use log::warn;

use crate::mesh::{MeshTopology, TriMesh};

/// Per-triangle isometric distortion with an exclusion mask (true = excluded,
/// e.g. hole-filling triangles).
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionField {
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl DistortionField {
    pub fn new(values: Vec<f64>, mask: Vec<bool>) -> Self {
        assert_eq!(values.len(), mask.len(), "one mask flag per triangle");
        DistortionField { values, mask }
    }

    pub fn unmasked(values: Vec<f64>) -> Self {
        let mask = vec![false; values.len()];
        DistortionField { values, mask }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn usable(&self, t: usize) -> bool {
        !self.mask[t] && self.values[t].is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Candidate {
    /// Vertex of the source mesh.
    pub vertex: usize,
    /// Distortion of the triangle it was taken from.
    pub peak: f64,
}

/// Candidates of one run, sorted by vertex, without duplicates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.candidates.iter().map(|c| c.vertex)
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// A region popped from the queue together with the triangle recorded for it.
#[derive(Debug, Clone)]
pub struct RegionRecord {
    pub triangles: Vec<usize>,
    pub argmax: usize,
}

/// Edge-connected components of `members` (sorted by smallest triangle).
fn components(members: &[usize], topology: &MeshTopology, stamp: &mut [u32], generation: u32) -> Vec<Vec<usize>> {
    let inside = generation * 2;
    let seen = inside + 1;
    for &t in members {
        stamp[t] = inside;
    }
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    for &start in &sorted {
        if stamp[start] != inside {
            continue;
        }
        stamp[start] = seen;
        let mut comp = vec![start];
        let mut head = 0;
        while head < comp.len() {
            let t = comp[head];
            head += 1;
            for nb in topology.triangle_neighbors(t).iter().flatten() {
                if stamp[*nb] == inside {
                    stamp[*nb] = seen;
                    comp.push(*nb);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

fn argmax(region: &[usize], values: &[f64]) -> usize {
    let mut best = region[0];
    for &t in region {
        if values[t] > values[best] || (values[t] == values[best] && t < best) {
            best = t;
        }
    }
    best
}

/// Distortion triangles `T^d` in the order they were recorded.
pub fn detect_distortion_triangles(
    field: &DistortionField,
    topology: &MeshTopology,
    n: usize,
    e_th: f64,
) -> Vec<usize> {
    detect_traced(field, topology, n, e_th, |_| {})
}

/// As [`detect_distortion_triangles`], reporting every popped region.
pub fn detect_traced(
    field: &DistortionField,
    topology: &MeshTopology,
    n: usize,
    e_th: f64,
    mut on_region: impl FnMut(RegionRecord),
) -> Vec<usize> {
    let n = n.max(1);
    let values = &field.values;
    let mut stamp = vec![0u32; values.len()];
    let mut generation = 1u32;
    let mut result: Vec<usize> = Vec::new();
    let mut recorded = vec![false; values.len()];
    let mut record = |t: usize, result: &mut Vec<usize>| {
        if !recorded[t] {
            recorded[t] = true;
            result.push(t);
        }
    };

    let first: Vec<usize> = (0..values.len()).filter(|&t| field.usable(t) && values[t] >= e_th).collect();
    let mut queue = VecDeque::new();
    for comp in components(&first, topology, &mut stamp, generation) {
        if comp.len() >= n {
            record(argmax(&comp, values), &mut result);
            queue.push_back(comp);
        }
    }

    while let Some(region) = queue.pop_front() {
        let top = argmax(&region, values);
        record(top, &mut result);
        let mut sorted: Vec<f64> = region.iter().map(|&t| values[t]).collect();
        sorted.sort_unstable_by(f64::total_cmp);
        let median = sorted[(sorted.len() - 1) / 2];
        let mut kept: Vec<usize> = region.iter().copied().filter(|&t| values[t] >= median).collect();
        if kept.len() == region.len() {
            // The lower median is the minimum; drop the minimum level instead.
            kept.retain(|&t| values[t] > median);
        }
        on_region(RegionRecord { triangles: region, argmax: top });
        if kept.is_empty() {
            continue;
        }
        generation += 1;
        for comp in components(&kept, topology, &mut stamp, generation) {
            if comp.len() >= n {
                queue.push_back(comp);
            }
        }
    }
    result
}

/// One source-mesh vertex per distortion triangle: the corner with the
/// largest summed distortion over its incident triangles.
pub fn triangles_to_candidates(tris: &[usize], field: &DistortionField, disk: &TriMesh) -> CandidateSet {
    let topology = MeshTopology::new(disk);
    let incident_sum = |v: usize| -> f64 {
        topology.vertex_triangles(v).iter().filter(|&&t| field.usable(t)).map(|&t| field.values[t]).sum()
    };
    let mut best: BTreeMap<usize, f64> = BTreeMap::new();
    for &t in tris {
        if field.mask[t] {
            warn!("distortion triangle {t} lies in a filled region; skipped");
            continue;
        }
        let mut choice: Option<(f64, usize)> = None;
        for &v in &disk.triangles()[t] {
            let Some(o) = disk.origin_of(v) else { continue };
            let s = incident_sum(v);
            choice = match choice {
                Some((bs, bo)) if bs > s || (bs == s && bo <= o) => Some((bs, bo)),
                _ => Some((s, o)),
            };
        }
        if let Some((_, o)) = choice {
            let peak = field.values[t];
            best.entry(o).and_modify(|p| *p = p.max(peak)).or_insert(peak);
        }
    }
    CandidateSet { candidates: best.into_iter().map(|(vertex, peak)| Candidate { vertex, peak }).collect() }
}

/// Minimum region size `max(1, round(0.001 · min(N_v, N_v_thres)))`.
pub fn region_threshold(n_v: usize, n_v_thres: usize) -> usize {
    ((0.001 * n_v.min(n_v_thres) as f64).round() as usize).max(1)
}
