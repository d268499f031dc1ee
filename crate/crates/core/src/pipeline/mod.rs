//! End-to-end detection, cutting and final parameterization.

mod config;
mod cut;
mod report;

pub use config::PipelineConfig;
pub use cut::{edges_to_paths, mst_cut};
pub use report::{points_json, DistortionReport, PointsMeta};

use std::collections::BTreeMap;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use thiserror::Error;

use crate::cutgen::{random_genus0_cut, to_disk, CutError, RngStream};
use crate::detect::{
    detect_distortion_triangles, region_threshold, triangles_to_candidates, CandidateSet, DistortionField,
};
use crate::mesh::{cut_along_edges, EdgePath, MeshError, MeshTopology, TriMesh};
use crate::param::{
    iso_field, normalize_area, optimize_acap, optimize_isometric, tutte_embed, OptimizeStatus, ParamError, PlanarParam,
};
use crate::simplify::{map_back, qem_simplify, SimplifyError};
use crate::vote::{post_filter_with, select, tally, DistortionPointSet, VoteTally};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Cut(#[from] CutError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Simplify(#[from] SimplifyError),
    #[error("only {ok} of {runs} candidate runs succeeded, need {needed}")]
    TooFewRuns { ok: usize, runs: usize, needed: usize },
    #[error("configuration: {0}")]
    Config(String),
    #[error("cut does not open the mesh into a disk ({0} boundary loops)")]
    NotADisk(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Outcome of one candidate run.
#[derive(Debug, Clone)]
pub struct RunDiagnostics {
    pub run: usize,
    /// Stream that produced the accepted cut.
    pub stream: u64,
    pub attempts: usize,
    pub status: Option<OptimizeStatus>,
    pub distortion_triangles: usize,
    pub candidates: Option<CandidateSet>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Detection {
    /// Points on the input mesh.
    pub points: DistortionPointSet,
    pub tally: VoteTally,
    pub runs: Vec<RunDiagnostics>,
    pub simplified: bool,
    /// Vertex count of the mesh detection ran on.
    pub detection_vertices: usize,
    pub region_n: usize,
}

/// One random cut, ACAP flattening and clustering pass. Returns candidates
/// on `mesh`.
pub fn candidate_run(
    mesh: &TriMesh,
    cfg: &PipelineConfig,
    region_n: usize,
    rng: &mut RngStream,
) -> Result<(CandidateSet, OptimizeStatus, usize), PipelineError> {
    let cut = to_disk(mesh, rng, cfg.rho)?;
    let disk = &cut.disk;
    let init = tutte_embed(disk)?;
    let opt = optimize_acap(disk, &init, &cfg.optimizer)?;
    let uv = normalize_area(disk, &opt.uv, Some(disk.filled_mask()));
    let field = DistortionField::new(iso_field(disk, &uv)?, disk.filled_mask().to_vec());
    let topology = MeshTopology::new(disk);
    let tris = detect_distortion_triangles(&field, &topology, region_n, cfg.e_th);
    Ok((triangles_to_candidates(&tris, &field, disk), opt.status, tris.len()))
}

fn run_with_retries(mesh: &TriMesh, cfg: &PipelineConfig, region_n: usize, run: usize) -> RunDiagnostics {
    let mut last_err = None;
    for attempt in 0..=cfg.max_retries {
        let stream = (run + cfg.runs * attempt) as u64;
        match candidate_run(mesh, cfg, region_n, &mut RngStream::new(cfg.seed, stream)) {
            Ok((candidates, status, ntris)) => {
                return RunDiagnostics {
                    run,
                    stream,
                    attempts: attempt + 1,
                    status: Some(status),
                    distortion_triangles: ntris,
                    candidates: Some(candidates),
                    error: None,
                };
            }
            Err(e) => {
                warn!("run {run} stream {stream} failed: {e}");
                last_err = Some(e.to_string());
            }
        }
    }
    RunDiagnostics {
        run,
        stream: (run + cfg.runs * cfg.max_retries) as u64,
        attempts: cfg.max_retries + 1,
        status: None,
        distortion_triangles: 0,
        candidates: None,
        error: last_err,
    }
}

fn thread_pool() -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("DP_THREADS").ok().and_then(|s| s.parse::<usize>().ok()).filter(|&n| n > 0) {
        builder = builder.num_threads(n);
    }
    builder.build().expect("thread pool")
}

/// Candidate runs, voting and post-filtering; simplifies first when the
/// mesh exceeds `nv_thres` vertices and simplification is enabled.
pub fn detect_points(mesh: &TriMesh, cfg: &PipelineConfig) -> Result<Detection, PipelineError> {
    cfg.validate()?;
    mesh.genus()?;
    let simplified = cfg.simplify && mesh.num_vertices() > cfg.nv_thres;
    let working = if simplified {
        let s = qem_simplify(mesh, cfg.nv_thres)?;
        info!("simplified to {} vertices", s.mesh.num_vertices());
        s.mesh
    } else {
        mesh.clone()
    };
    let region_n = cfg.region_n.unwrap_or_else(|| region_threshold(mesh.num_vertices(), cfg.nv_thres));

    let runs: Vec<RunDiagnostics> = thread_pool()
        .install(|| (0..cfg.runs).into_par_iter().map(|r| run_with_retries(&working, cfg, region_n, r)).collect());
    let ok: Vec<CandidateSet> = runs.iter().filter_map(|r| r.candidates.clone()).collect();
    let needed = cfg.runs.div_ceil(2);
    if ok.len() < needed {
        return Err(PipelineError::TooFewRuns { ok: ok.len(), runs: cfg.runs, needed });
    }
    let votes = tally(&ok);
    let selected = select(&votes, cfg.min_votes);
    let topology = MeshTopology::new(&working);
    let filtered = post_filter_with(&selected, &topology, cfg.n_ring)?;
    let points = if simplified { map_back(&filtered, &working, mesh) } else { filtered };
    info!("{} distortion points from {} runs", points.len(), ok.len());
    Ok(Detection { points, tally: votes, runs, simplified, detection_vertices: working.num_vertices(), region_n })
}

/// Result of cutting along a cut graph and flattening the resulting disk.
#[derive(Debug, Clone)]
pub struct FinalParam {
    pub disk: TriMesh,
    pub uv: PlanarParam,
    pub report: DistortionReport,
    pub status: OptimizeStatus,
}

/// Cuts `mesh` along `cut`, flattens with Tutte and minimizes the
/// area-weighted isometric objective.
pub fn final_parameterize(mesh: &TriMesh, cut: &[EdgePath], cfg: &PipelineConfig) -> Result<FinalParam, PipelineError> {
    let start = Instant::now();
    let mut edges: Vec<[usize; 2]> = cut.iter().flat_map(|p| p.edges().map(|[a, b]| [a.min(b), a.max(b)])).collect();
    edges.sort_unstable();
    edges.dedup();
    let disk = if mesh.is_closed() { cut_along_edges(mesh, &edges)? } else { mesh.clone() };
    let loops = crate::mesh::boundary_loops(&disk).len();
    if loops != 1 {
        return Err(PipelineError::NotADisk(loops));
    }
    let init = normalize_area(&disk, &tutte_embed(&disk)?, None);
    let opt = optimize_isometric(&disk, &init, &cfg.optimizer)?;
    let iso = iso_field(&disk, &opt.uv)?;
    let cut_length: f64 = edges.iter().map(|&[a, b]| mesh.edge_length(a, b)).sum();
    let mut report = DistortionReport::from_field(iso, cut_length / mesh.total_edge_length());
    if cfg.timings {
        report.timings_ms.insert("final_parameterize".into(), start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(FinalParam { disk, uv: opt.uv, report, status: opt.status })
}

/// Final parameterization through a random genus-0 cut (a baseline).
pub fn random_cut_parameterize(
    mesh: &TriMesh,
    cfg: &PipelineConfig,
    rng: &mut RngStream,
) -> Result<FinalParam, PipelineError> {
    let cut = random_genus0_cut(mesh, rng)?;
    final_parameterize(mesh, &cut.cut_paths, cfg)
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub detection: Detection,
    pub cut: Vec<EdgePath>,
    pub result: FinalParam,
}

/// Detection, MST cut through the points and final parameterization.
pub fn run_pipeline(mesh: &TriMesh, cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    let mut timings = BTreeMap::new();
    let t0 = Instant::now();
    let detection = detect_points(mesh, cfg)?;
    timings.insert("detect".to_string(), t0.elapsed().as_secs_f64() * 1e3);
    let t1 = Instant::now();
    let cut = mst_cut(mesh, &detection.points.vertices(), &mut RngStream::new(cfg.seed, u64::MAX))?;
    timings.insert("cut".to_string(), t1.elapsed().as_secs_f64() * 1e3);
    let mut result = final_parameterize(mesh, &cut, cfg)?;
    if cfg.timings {
        result.report.timings_ms.extend(timings);
    }
    Ok(PipelineOutput { detection, cut, result })
}
