//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use distortion_points::cutgen::{handle_loops, random_genus0_cut, to_disk, RngStream};
use distortion_points::detect::{detect_distortion_triangles, DistortionField};
use distortion_points::mesh::{boundary_loops, MeshTopology, TriMesh, Vec3};
use distortion_points::param::{
    amips_energy, amips_gradient, area_energy, iso_distortion, jacobians, local_frames, mips_energy, optimize_acap,
    singular_values, tutte_embed, JacobianField, OptimizerConfig, PlanarParam,
};
use distortion_points::pipeline::{
    detect_points, final_parameterize, mst_cut, points_json, random_cut_parameterize, run_pipeline, Detection,
    PipelineConfig,
};
use distortion_points::shapes;
use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = Box<dyn FnMut(&mut Shared) -> Outcome>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, format!("took {:.1} s, limit {} s", t.as_secs_f64(), limit.as_secs()))
}

/// Singular values from the rotation/reflection split of `J`.
fn svd_oracle(j: &Matrix2<f64>) -> (f64, f64) {
    let (a, b, c, d) = (j[(0, 0)], j[(0, 1)], j[(1, 0)], j[(1, 1)]);
    let s1 = 0.5 * ((a + d).hypot(c - b) + (a - d).hypot(c + b));
    (s1, j.determinant() / s1)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn c1_energy_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 1000 {
        let j = Matrix2::from_fn(|_, _| rng.random_range(-2.0..2.0));
        if j.determinant() <= 1e-3 {
            continue;
        }
        n += 1;
        let (s1, s2) = svd_oracle(&j);
        let mips = 0.5 * (s1 / s2 + s2 / s1);
        let area = 0.5 * (s1 * s2 + 1.0 / (s1 * s2));
        let iso = 0.5 * (area + mips);
        let (g1, g2) = singular_values(&j);
        let amips = amips_energy(&JacobianField::from_jacobians(vec![j]));
        for (got, want) in [
            (g1, s1),
            (g2, s2),
            (mips_energy(&j), mips),
            (area_energy(&j), area),
            (iso_distortion(&j), iso),
            (amips, mips.exp()),
        ] {
            worst = worst.max(rel(got, want));
        }
    }
    ensure(worst < 1e-10, format!("max relative error {worst:e}"))?;
    let mut minima: f64 = 0.0;
    for _ in 0..100 {
        let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let s: f64 = rng.random_range(0.1..10.0);
        let r = Matrix2::new(th.cos(), -th.sin(), th.sin(), th.cos());
        minima = minima.max((mips_energy(&(r * s)) - 1.0).abs()).max((iso_distortion(&r) - 1.0).abs());
    }
    ensure(minima < 1e-12, format!("minimum off by {minima:e}"))?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("1000 matrices, max rel err {worst:.1e}; minima within {minima:.1e}"))
}

fn c2_gradient() -> Outcome {
    let start = Instant::now();
    let disk = shapes::grid_disk(5, 5);
    ensure(disk.num_triangles() == 50, "disk must have 50 triangles")?;
    let frames = local_frames(&disk).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut configs = 0;
    while configs < 20 {
        let (a, b, c, d) = (
            rng.random_range(0.5..2.0),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(0.5..2.0),
        );
        let uv = PlanarParam::from_flat(
            &disk
                .positions()
                .iter()
                .flat_map(|p| {
                    let (x, y) = (p.x + rng.random_range(-0.06..0.06), p.y + rng.random_range(-0.06..0.06));
                    [a * x + b * y, c * x + d * y]
                })
                .collect::<Vec<_>>(),
        );
        if !jacobians(&disk, &frames, &uv).is_flip_free() {
            continue;
        }
        configs += 1;
        let (_, grad) = amips_gradient(&disk, &frames, &uv).ok_or("flipped configuration")?;
        let x = uv.to_flat();
        let h = 1e-6;
        let f = |x: &[f64]| amips_energy(&jacobians(&disk, &frames, &PlanarParam::from_flat(x)));
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        for i in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            let fd = (f(&xp) - f(&xm)) / (2.0 * h);
            worst = worst.max((grad[i] - fd).abs() / gmax);
        }
    }
    ensure(worst < 1e-5, format!("max relative error {worst:e}"))?;
    within(start, Duration::from_secs(5))?;
    Ok(format!("20 configurations, max relative error {worst:.1e}"))
}

fn c3_flip_free() -> Outcome {
    let start = Instant::now();
    let mesh = shapes::icosphere(4);
    ensure(mesh.num_vertices() == 2562, "icosphere must have 2562 vertices")?;
    let mut iters = 0;
    let mut worst_det = f64::INFINITY;
    for s in 0..30 {
        let cut = random_genus0_cut(&mesh, &mut RngStream::new(3, s)).map_err(|e| e.to_string())?;
        let init = tutte_embed(&cut.disk).map_err(|e| e.to_string())?;
        let opt = optimize_acap(&cut.disk, &init, &OptimizerConfig::default()).map_err(|e| e.to_string())?;
        ensure(opt.min_det.len() == opt.iterations + 1, format!("cut {s}: trace length"))?;
        let m = opt.min_det.iter().copied().fold(f64::INFINITY, f64::min);
        ensure(m > 0.0, format!("cut {s}: min det {m}"))?;
        ensure(opt.log_energy.windows(2).all(|w| w[1] <= w[0]), format!("cut {s}: energy increased"))?;
        worst_det = worst_det.min(m);
        iters += opt.iterations;
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("30 cuts, {iters} iterates, smallest det {worst_det:.2e}, traces monotone"))
}

/// Edge adjacency by comparing every pair of triangles.
fn brute_adjacency(mesh: &TriMesh) -> Vec<Vec<usize>> {
    let tris = mesh.triangles();
    let mut adj = vec![Vec::new(); tris.len()];
    for a in 0..tris.len() {
        for b in a + 1..tris.len() {
            if tris[a].iter().filter(|v| tris[b].contains(v)).count() == 2 {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    adj
}

/// Peak of every connected superlevel set of size at least `n`, over every level `>= e_th`.
fn superlevel_peaks(field: &DistortionField, adj: &[Vec<usize>], n: usize, e_th: f64) -> BTreeSet<usize> {
    let usable = |t: usize| !field.mask[t] && field.values[t].is_finite();
    let mut levels: Vec<f64> =
        (0..field.len()).filter(|&t| usable(t) && field.values[t] >= e_th).map(|t| field.values[t]).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut peaks = BTreeSet::new();
    for &c in &levels {
        let inside: Vec<bool> = (0..field.len()).map(|t| usable(t) && field.values[t] >= c).collect();
        let mut seen = vec![false; field.len()];
        for s in 0..field.len() {
            if !inside[s] || seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut i = 0;
            while i < comp.len() {
                for &nb in &adj[comp[i]] {
                    if inside[nb] && !seen[nb] {
                        seen[nb] = true;
                        comp.push(nb);
                    }
                }
                i += 1;
            }
            if comp.len() >= n {
                let top = comp.iter().copied().fold(comp[0], |b, t| {
                    if field.values[t] > field.values[b] || (field.values[t] == field.values[b] && t < b) {
                        t
                    } else {
                        b
                    }
                });
                peaks.insert(top);
            }
        }
    }
    peaks
}

/// Sub-threshold noise carrying separated unimodal bumps of random width
/// and height, with a few masked triangles.
fn bump_field(rng: &mut ChaCha8Rng, len: usize, e_th: f64) -> DistortionField {
    let mut values: Vec<f64> = (0..len).map(|_| rng.random_range(1.0..e_th)).collect();
    let mut t = rng.random_range(0..10);
    while t + 3 < len {
        let width = rng.random_range(1..=40).min(len - t - 2);
        let peak_at = t + rng.random_range(0..width);
        let top = rng.random_range(e_th + 0.5..12.0);
        values[peak_at] = top;
        let mut v = top;
        for i in (t..peak_at).rev() {
            v -= rng.random_range(0.01..0.6);
            values[i] = v.max(1.0 + 1e-3 * rng.random::<f64>());
        }
        let mut v = top;
        for value in values.iter_mut().take(t + width).skip(peak_at + 1) {
            v -= rng.random_range(0.01..0.6);
            *value = v.max(1.0 + 1e-3 * rng.random::<f64>());
        }
        values[t + width] = rng.random_range(1.0..e_th);
        t += width + rng.random_range(2..30);
    }
    let mask = (0..len).map(|_| rng.random::<f64>() < 0.02).collect();
    DistortionField::new(values, mask)
}

fn c4_clustering_oracle() -> Outcome {
    let start = Instant::now();
    let mesh = shapes::fan(300, 1.0);
    ensure(mesh.num_triangles() == 300, "fan must have 300 triangles")?;
    let topology = MeshTopology::new(&mesh);
    let adj = brute_adjacency(&mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut total = 0;
    for k in 0..20 {
        let field = bump_field(&mut rng, 300, 2.0);
        let n = rng.random_range(1..=12);
        let got: BTreeSet<usize> = detect_distortion_triangles(&field, &topology, n, 2.0).into_iter().collect();
        let want = superlevel_peaks(&field, &adj, n, 2.0);
        ensure(got == want, format!("field {k} (N = {n}): got {got:?}, oracle {want:?}"))?;
        total += got.len();
    }
    within(start, Duration::from_secs(1))?;
    Ok(format!("20 fields equal the oracle ({total} triangles)"))
}

const CORNER_RADIUS: f64 = 0.05;

fn cube_corners() -> Vec<Vec3> {
    (0..8).map(|i| Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64)).collect()
}

/// Corner index of every point; each point must lie within the radius of a
/// distinct corner. On the three faces around a corner the geodesic
/// distance to it is the straight-line distance.
fn corner_assignment(mesh: &TriMesh, det: &Detection) -> Result<Vec<usize>, String> {
    let corners = cube_corners();
    let mut used = Vec::new();
    for p in &det.points.points {
        let x = mesh.positions()[p.vertex];
        let (c, d) = corners
            .iter()
            .enumerate()
            .map(|(i, c)| (i, (x - c).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("eight corners");
        ensure(d <= CORNER_RADIUS, format!("vertex {} is {d:.4} from the nearest corner", p.vertex))?;
        ensure(!used.contains(&c), format!("two points share corner {c}"))?;
        used.push(c);
    }
    Ok(used)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

struct Shared {
    cube: TriMesh,
    cube_detection: Option<Detection>,
}

fn c5_cube(shared: &mut Shared) -> Outcome {
    let start = Instant::now();
    let mesh = &shared.cube;
    let cfg = PipelineConfig::default();
    let det = detect_points(mesh, &cfg).map_err(|e| e.to_string())?;
    shared.cube_detection = Some(det.clone());
    ensure(det.points.len() == 8, format!("{} points", det.points.len()))?;
    corner_assignment(mesh, &det)?;
    let cut =
        mst_cut(mesh, &det.points.vertices(), &mut RngStream::new(cfg.seed, u64::MAX)).map_err(|e| e.to_string())?;
    let ours = final_parameterize(mesh, &cut, &cfg).map_err(|e| e.to_string())?.report.delta_avg;
    let mut random = Vec::new();
    for s in 0..5 {
        let r = random_cut_parameterize(mesh, &cfg, &mut RngStream::new(5, s)).map_err(|e| e.to_string())?;
        random.push(r.report.delta_avg);
    }
    let base = median(random);
    let drop = 1.0 - ours / base;
    let excess_drop = 1.0 - (ours - 1.0) / (base - 1.0);
    let detail = format!(
        "8 corner points; delta_avg {ours:.4} vs random-cut median {base:.4}: {:.1}% lower (excess over 1: {:.1}% lower)",
        100.0 * drop,
        100.0 * excess_drop
    );
    ensure(drop >= 0.15, format!("{detail}; need >= 15% lower"))?;
    within(start, Duration::from_secs(120))?;
    Ok(detail)
}

fn c6_sphere() -> Outcome {
    let start = Instant::now();
    let mesh = shapes::icosphere(4);
    let det = detect_points(&mesh, &PipelineConfig::default()).map_err(|e| e.to_string())?;
    let most = det.tally.counts.values().copied().max().unwrap_or(0);
    ensure(det.points.is_empty(), format!("{} points", det.points.len()))?;
    within(start, Duration::from_secs(60))?;
    Ok(format!("no points on {} vertices (largest vote count {most})", mesh.num_vertices()))
}

fn c7_torus() -> Outcome {
    let start = Instant::now();
    let mesh = shapes::torus(64, 32, 1.0, 0.4);
    let genus = mesh.genus().map_err(|e| e.to_string())?;
    ensure(genus == 1, format!("genus {genus}"))?;
    let cfg = PipelineConfig::default();
    for r in 0..cfg.runs as u64 {
        let loops = handle_loops(&mesh, &mut RngStream::new(cfg.seed, r), cfg.rho).map_err(|e| e.to_string())?;
        ensure(loops.len() == 2 * genus, format!("run {r}: {} handle loops", loops.len()))?;
        let cut = to_disk(&mesh, &mut RngStream::new(cfg.seed, r), cfg.rho).map_err(|e| format!("run {r}: {e}"))?;
        let d = &cut.disk;
        ensure(
            boundary_loops(d).len() == 1 && d.euler_characteristic() == 1 && d.num_components() == 1,
            format!("run {r}: not a disk"),
        )?;
    }
    let det = detect_points(&mesh, &cfg).map_err(|e| e.to_string())?;
    let first_try = det.runs.iter().filter(|r| r.attempts == 1 && r.candidates.is_some()).count();
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "{} vertices: 10/10 disks, 2 handle loops each; detection gave {} points ({first_try}/10 runs on first stream)",
        mesh.num_vertices(),
        det.points.len()
    ))
}

fn c8_simplification() -> Outcome {
    let start = Instant::now();
    let mesh = shapes::subdivided_cube(71);
    let mut out = Vec::new();
    for simplify in [true, false] {
        let cfg = PipelineConfig { simplify, ..Default::default() };
        let t = Instant::now();
        let det = detect_points(&mesh, &cfg).map_err(|e| e.to_string())?;
        let elapsed = t.elapsed().as_secs_f64();
        ensure(det.simplified == simplify, "simplification flag not honoured")?;
        let cut = mst_cut(&mesh, &det.points.vertices(), &mut RngStream::new(cfg.seed, u64::MAX))
            .map_err(|e| e.to_string())?;
        let r = final_parameterize(&mesh, &cut, &cfg).map_err(|e| e.to_string())?;
        out.push((r.report.delta_avg, elapsed, det.points.len()));
    }
    let (with, without) = (out[0], out[1]);
    let gap = (with.0 - without.0).abs() / without.0;
    let detail = format!(
        "{} vertices: delta_avg {:.4} ({} pts, detect {:.1} s) vs {:.4} ({} pts, detect {:.1} s), gap {:.2}%",
        mesh.num_vertices(),
        with.0,
        with.2,
        with.1,
        without.0,
        without.2,
        without.1,
        100.0 * gap
    );
    ensure(gap <= 0.10, format!("{detail}; gap over 10%"))?;
    ensure(with.1 < without.1, format!("{detail}; simplified detection not faster"))?;
    within(start, Duration::from_secs(300))?;
    Ok(detail)
}

fn c9_determinism() -> Outcome {
    let mesh = shapes::perturbed_cube(10, 0.25, 9);
    let cfg = PipelineConfig { seed: 42, ..Default::default() };
    let run = || -> Result<(String, String), String> {
        let out = run_pipeline(&mesh, &cfg).map_err(|e| e.to_string())?;
        Ok((points_json(&out.detection.points, &mesh, &cfg, out.detection.simplified), out.result.report.to_json()))
    };
    let (a, b) = (run()?, run()?);
    ensure(a == b, "reports differ between runs")?;
    Ok(format!("points ({} bytes) and report ({} bytes) byte-identical", a.0.len(), a.1.len()))
}

fn c10_tessellation(shared: &Shared) -> Outcome {
    let regular = &shared.cube;
    let det_a = match &shared.cube_detection {
        Some(d) => d.clone(),
        None => detect_points(regular, &PipelineConfig::default()).map_err(|e| e.to_string())?,
    };
    let jittered = shapes::perturbed_cube(27, 0.3, 5);
    let det_b = detect_points(&jittered, &PipelineConfig::default()).map_err(|e| e.to_string())?;
    let a = corner_assignment(regular, &det_a).map_err(|e| format!("regular: {e}"))?;
    let b = corner_assignment(&jittered, &det_b).map_err(|e| format!("jittered: {e}"))?;
    let (sa, sb): (BTreeSet<usize>, BTreeSet<usize>) = (a.iter().copied().collect(), b.iter().copied().collect());
    ensure(sa.len() == 8 && sa == sb, format!("corners {sa:?} vs {sb:?}"))?;
    Ok(format!(
        "{} and {} vertex tessellations: all 8 corners matched within {CORNER_RADIUS}",
        regular.num_vertices(),
        jittered.num_vertices()
    ))
}

fn main() {
    let mut shared = Shared { cube: shapes::subdivided_cube(29), cube_detection: None };
    let criteria: Vec<(&str, Criterion)> = vec![
        ("energy oracles", Box::new(|_| c1_energy_oracles())),
        ("gradient correctness", Box::new(|_| c2_gradient())),
        ("flip-free guarantee", Box::new(|_| c3_flip_free())),
        ("clustering oracle equivalence", Box::new(|_| c4_clustering_oracle())),
        ("cube benchmark", Box::new(c5_cube)),
        ("sphere negative control", Box::new(|_| c6_sphere())),
        ("high-genus pipeline", Box::new(|_| c7_torus())),
        ("simplification fidelity", Box::new(|_| c8_simplification())),
        ("determinism", Box::new(|_| c9_determinism())),
        ("tessellation robustness", Box::new(|s| c10_tessellation(s))),
    ];
    let mut failed = 0;
    let mut total = 0;
    for (i, (name, mut f)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| f(&mut shared))).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match &outcome {
            Ok(d) => println!("PASS  {:>2}. {name}: {d} [{secs:.1} s]", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL  {:>2}. {name}: {e} [{secs:.1} s]", i + 1);
            }
        }
        total += 1;
    }
    println!("acceptance: {} passed, {failed} failed", total - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
