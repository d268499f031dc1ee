//! `dpoints`: distortion point detection, cutting and parameterization.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::{json, Value};

use distortion_points::cutgen::RngStream;
use distortion_points::mesh::{cut_along_edges, load_obj, save_obj, EdgePath, TriMesh};
use distortion_points::pipeline::{
    detect_points, final_parameterize, mst_cut, points_json, run_pipeline, PipelineConfig, PipelineError,
};

#[derive(Parser)]
#[command(name = "dpoints", version, about = "Distortion point detection and low-distortion parameterization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect distortion points and write the points JSON.
    Detect {
        mesh: PathBuf,
        /// Points JSON (stdout when absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        opts: ConfigArgs,
    },
    /// Cut the mesh through the given points.
    Cut {
        mesh: PathBuf,
        #[arg(short, long)]
        points: PathBuf,
        /// Cut-open disk mesh as OBJ.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Cut paths as JSON (stdout when absent).
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        opts: ConfigArgs,
    },
    /// Cut through the given points and compute the final parameterization.
    Param {
        mesh: PathBuf,
        #[arg(short, long)]
        points: PathBuf,
        /// Disk mesh with `vt` coordinates.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Report JSON (stdout when absent).
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        opts: ConfigArgs,
    },
    /// Run every stage and write points.json, cut.json, uv.obj and report.json.
    Pipeline {
        mesh: PathBuf,
        /// Output directory (report JSON on stdout when absent).
        #[arg(short, long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        opts: ConfigArgs,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Candidate runs.
    #[arg(short = 'R', long)]
    runs: Option<usize>,
    #[arg(long)]
    min_votes: Option<usize>,
    #[arg(long)]
    n_ring: Option<usize>,
    /// First-filter distortion threshold.
    #[arg(long)]
    e_th: Option<f64>,
    /// Vertex count above which detection runs on a simplified mesh.
    #[arg(long)]
    nv_thres: Option<usize>,
    /// Region-size threshold override.
    #[arg(long)]
    region_n: Option<usize>,
    #[arg(long)]
    no_simplify: bool,
    /// Handle-loop perturbation.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    max_retries: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Record stage timings in the report.
    #[arg(long)]
    timings: bool,
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

fn bad_input(message: impl ToString) -> Failure {
    Failure { code: 1, kind: "bad_input", message: message.to_string() }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(_) | PipelineError::Io(_) => bad_input(e),
            _ => Failure { code: 2, kind: "pipeline_failure", message: e.to_string() },
        }
    }
}

impl ConfigArgs {
    fn build(&self) -> Result<PipelineConfig, Failure> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path).map_err(|e| bad_input(format!("{}: {e}", path.display())))?;
        }
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field { $target = v; })*
            };
        }
        set!(seed => cfg.seed, runs => cfg.runs, min_votes => cfg.min_votes, n_ring => cfg.n_ring, e_th => cfg.e_th,
            nv_thres => cfg.nv_thres, rho => cfg.rho, max_retries => cfg.max_retries,
            tol => cfg.optimizer.tol, max_iters => cfg.optimizer.max_iters);
        if self.region_n.is_some() {
            cfg.region_n = self.region_n;
        }
        if self.no_simplify {
            cfg.simplify = false;
        }
        if self.timings {
            cfg.timings = true;
        }
        cfg.validate().map_err(bad_input)?;
        Ok(cfg)
    }
}

fn read_mesh(path: &Path) -> Result<TriMesh, Failure> {
    let mesh = load_obj(path).map_err(|e| bad_input(format!("{}: {e}", path.display())))?;
    if !mesh.is_closed() {
        return Err(bad_input(format!("{}: mesh has a boundary", path.display())));
    }
    mesh.genus().map_err(|e| bad_input(format!("{}: {e}", path.display())))?;
    Ok(mesh)
}

fn read_points(path: &Path, mesh: &TriMesh) -> Result<Vec<usize>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| bad_input(format!("{}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| bad_input(format!("{}: {e}", path.display())))?;
    let list =
        doc["points"].as_array().ok_or_else(|| bad_input(format!("{}: missing \"points\" array", path.display())))?;
    let mut out = Vec::with_capacity(list.len());
    for p in list {
        let v = p["vertex"]
            .as_u64()
            .map(|v| v as usize)
            .filter(|&v| v < mesh.num_vertices())
            .ok_or_else(|| bad_input(format!("{}: invalid vertex entry {p}", path.display())))?;
        out.push(v);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, format!("{text}\n")).map_err(|e| bad_input(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn write_obj_file(
    mesh: &TriMesh,
    uv: Option<&distortion_points::param::PlanarParam>,
    path: &Path,
) -> Result<(), Failure> {
    save_obj(mesh, uv, path).map_err(|e| bad_input(format!("{}: {e}", path.display())))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn cut_json(paths: &[EdgePath], mesh: &TriMesh) -> String {
    let total: f64 = paths.iter().map(|p| p.length(mesh)).sum();
    let list: Vec<Value> = paths.iter().map(|p| json!({ "vertices": p.vertices, "closed": p.closed })).collect();
    serde_json::to_string_pretty(&json!({ "paths": list, "cut_length": total })).expect("cut serializes")
}

fn cut_rng(cfg: &PipelineConfig) -> RngStream {
    RngStream::new(cfg.seed, u64::MAX)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Detect { mesh, output, opts } => {
            let cfg = opts.build()?;
            let mesh = read_mesh(&mesh)?;
            let det = detect_points(&mesh, &cfg)?;
            emit(&points_json(&det.points, &mesh, &cfg, det.simplified), output.as_deref())
        }
        Command::Cut { mesh, points, output, json, opts } => {
            let cfg = opts.build()?;
            let mesh = read_mesh(&mesh)?;
            let pts = read_points(&points, &mesh)?;
            let paths = mst_cut(&mesh, &pts, &mut cut_rng(&cfg)).map_err(PipelineError::from)?;
            if let Some(out) = output {
                let mut edges: Vec<[usize; 2]> =
                    paths.iter().flat_map(|p| p.edges()).map(|[a, b]| [a.min(b), a.max(b)]).collect();
                edges.sort_unstable();
                edges.dedup();
                let disk = cut_along_edges(&mesh, &edges).map_err(PipelineError::from)?;
                write_obj_file(&disk, None, &out)?;
            }
            emit(&cut_json(&paths, &mesh), json.as_deref())
        }
        Command::Param { mesh, points, output, report, opts } => {
            let cfg = opts.build()?;
            let mesh = read_mesh(&mesh)?;
            let pts = read_points(&points, &mesh)?;
            let paths = mst_cut(&mesh, &pts, &mut cut_rng(&cfg)).map_err(PipelineError::from)?;
            let result = final_parameterize(&mesh, &paths, &cfg)?;
            if let Some(out) = output {
                write_obj_file(&result.disk, Some(&result.uv), &out)?;
            }
            emit(&result.report.to_json(), report.as_deref())
        }
        Command::Pipeline { mesh, out_dir, opts } => {
            let cfg = opts.build()?;
            let mesh = read_mesh(&mesh)?;
            let out = run_pipeline(&mesh, &cfg)?;
            let report = out.result.report.to_json();
            match out_dir {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| bad_input(format!("{}: {e}", dir.display())))?;
                    let det = &out.detection;
                    emit(&points_json(&det.points, &mesh, &cfg, det.simplified), Some(&dir.join("points.json")))?;
                    emit(&cut_json(&out.cut, &mesh), Some(&dir.join("cut.json")))?;
                    write_obj_file(&out.result.disk, Some(&out.result.uv), &dir.join("uv.obj"))?;
                    emit(&report, Some(&dir.join("report.json")))
                }
                None => emit(&report, None),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let usage = e.render().to_string();
            eprintln!("{usage}");
            eprintln!("{}", json!({ "error": "usage", "message": usage.lines().next().unwrap_or_default() }));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": f.kind, "message": f.message }));
            ExitCode::from(f.code)
        }
    }
}
