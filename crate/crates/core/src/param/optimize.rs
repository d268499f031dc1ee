//! Flip-free descent on `Σ_t w_t exp(f(J_t))` with a per-triangle
//! PSD-projected Newton model, a fixed sparse pattern and an
//! injectivity-capped backtracking line search.

use log::{debug, trace};
use nalgebra::{Matrix2, SMatrix, SVector, SymmetricEigen};

use super::energy::{iso_derivatives, mips_derivatives, Grad4, Hess4};
use super::sparse::SpdPattern;
use super::{local_frames, LocalFrames, ParamError, PlanarParam};
use crate::mesh::TriMesh;

type Mat46 = SMatrix<f64, 4, 6>;
type Vec6 = SVector<f64, 6>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Stop once the relative energy decrease of an accepted step drops below this.
    pub tol: f64,
    pub max_iters: usize,
    /// Backtracking factor.
    pub shrink: f64,
    pub max_line_search: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { tol: 1e-6, max_iters: 500, shrink: 0.5, max_line_search: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizeStatus {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub uv: PlanarParam,
    pub status: OptimizeStatus,
    /// Accepted steps.
    pub iterations: usize,
    /// Natural log of the objective at the start and after every accepted step.
    pub log_energy: Vec<f64>,
    /// Smallest `det J_t` at the same iterates.
    pub min_det: Vec<f64>,
}

pub(crate) trait ExpEnergy {
    /// Exponent with gradient and Hessian in `vec J`; `None` when flipped.
    fn exponent(&self, j: &Matrix2<f64>) -> Option<(f64, Grad4, Hess4)>;
}

struct Conformal;

impl ExpEnergy for Conformal {
    fn exponent(&self, j: &Matrix2<f64>) -> Option<(f64, Grad4, Hess4)> {
        mips_derivatives(j)
    }
}

struct Isometric;

impl ExpEnergy for Isometric {
    fn exponent(&self, j: &Matrix2<f64>) -> Option<(f64, Grad4, Hess4)> {
        iso_derivatives(j)
    }
}

/// Minimizes the unweighted AMIPS energy `Σ exp(E_MIPS)` with every vertex free.
pub fn optimize_acap(disk: &TriMesh, init: &PlanarParam, cfg: &OptimizerConfig) -> Result<OptimizeResult, ParamError> {
    let frames = local_frames(disk)?;
    let weights = vec![1.0; disk.num_triangles()];
    Problem::new(disk, &frames, weights, Conformal)?.run(init, cfg)
}

/// Minimizes the area-weighted isometric objective `Σ area_t exp(E_iso)`.
pub fn optimize_isometric(
    disk: &TriMesh,
    init: &PlanarParam,
    cfg: &OptimizerConfig,
) -> Result<OptimizeResult, ParamError> {
    let frames = local_frames(disk)?;
    let total: f64 = frames.areas().iter().sum();
    let weights = frames.areas().iter().map(|a| a / total).collect();
    Problem::new(disk, &frames, weights, Isometric)?.run(init, cfg)
}

/// Unweighted AMIPS energy and its gradient in `(u0, v0, u1, v1, ...)`
/// order; `None` if any triangle is flipped.
pub fn amips_gradient(disk: &TriMesh, frames: &LocalFrames, uv: &PlanarParam) -> Option<(f64, Vec<f64>)> {
    let x = uv.to_flat();
    let mut grad = vec![0.0; x.len()];
    let mut energy = 0.0;
    for (t, tri) in disk.triangles().iter().enumerate() {
        let d = dmatrix(frames, t);
        let (f, g4, _) = mips_derivatives(&jacobian(&x, tri, frames, t))?;
        let w = f.exp();
        energy += w;
        let g6 = d.transpose() * g4 * w;
        for (i, gi) in g6.iter().enumerate() {
            grad[2 * tri[i / 2] + i % 2] += gi;
        }
    }
    Some((energy, grad))
}

fn jacobian(x: &[f64], &[a, b, c]: &[usize; 3], frames: &LocalFrames, t: usize) -> Matrix2<f64> {
    let u = Matrix2::new(
        x[2 * b] - x[2 * a],
        x[2 * c] - x[2 * a],
        x[2 * b + 1] - x[2 * a + 1],
        x[2 * c + 1] - x[2 * a + 1],
    );
    u * frames.edge_inverse(t)
}

/// `∂ vec J / ∂ (u0, v0, u1, v1, u2, v2)`.
fn dmatrix(frames: &LocalFrames, t: usize) -> Mat46 {
    let xi = frames.edge_inverse(t);
    let g1 = [xi[(0, 0)], xi[(0, 1)]];
    let g2 = [xi[(1, 0)], xi[(1, 1)]];
    let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
    let gs = [g0, g1, g2];
    let mut d = Mat46::zeros();
    for a in 0..2 {
        for b in 0..2 {
            for (k, g) in gs.iter().enumerate() {
                d[(2 * a + b, 2 * k + a)] = g[b];
            }
        }
    }
    d
}

fn project_psd(h: &Hess4) -> Hess4 {
    let eig = SymmetricEigen::new(*h);
    let clamped = eig.eigenvalues.map(|l| l.max(0.0));
    eig.eigenvectors * Hess4::from_diagonal(&clamped) * eig.eigenvectors.transpose()
}

/// Smallest positive `α` with `det(A + αB) = 0`, or `∞`.
fn flip_root(a: &Matrix2<f64>, b: &Matrix2<f64>) -> f64 {
    let c0 = a.determinant();
    let c1 = a[(0, 0)] * b[(1, 1)] + b[(0, 0)] * a[(1, 1)] - a[(0, 1)] * b[(1, 0)] - b[(0, 1)] * a[(1, 0)];
    let c2 = b.determinant();
    let mut best = f64::INFINITY;
    let mut consider = |r: f64| {
        if r > 0.0 && r < best {
            best = r;
        }
    };
    if c2.abs() <= 1e-14 * (c1.abs() + c0.abs()) {
        if c1 != 0.0 {
            consider(-c0 / c1);
        }
        return best;
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return best;
    }
    let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
    if q != 0.0 {
        consider(q / c2);
        consider(c0 / q);
    } else {
        consider((c0 / c2).abs().sqrt());
    }
    best
}

struct Problem<'a, E> {
    tris: &'a [[usize; 3]],
    frames: &'a LocalFrames,
    weights: Vec<f64>,
    energy: E,
    dmats: Vec<Mat46>,
    pattern: SpdPattern,
    slots: Vec<[usize; 36]>,
    diag: Vec<usize>,
}

struct Eval {
    /// `Σ w exp(f - shift)`.
    value: f64,
    max_exponent: f64,
    min_det: f64,
}

impl<'a, E: ExpEnergy> Problem<'a, E> {
    fn new(disk: &'a TriMesh, frames: &'a LocalFrames, weights: Vec<f64>, energy: E) -> Result<Self, ParamError> {
        let tris = disk.triangles();
        let n = 2 * disk.num_vertices();
        let global = |tri: &[usize; 3], i: usize| 2 * tri[i / 2] + i % 2;
        let entries = tris.iter().flat_map(|tri| (0..36).map(move |k| (global(tri, k / 6), global(tri, k % 6))));
        let pattern = SpdPattern::new(n, entries)?;
        let slots = tris
            .iter()
            .map(|tri| {
                let mut s = [usize::MAX; 36];
                for (k, slot) in s.iter_mut().enumerate() {
                    let (gi, gj) = (global(tri, k / 6), global(tri, k % 6));
                    if gi >= gj {
                        *slot = pattern.slot(gi, gj);
                    }
                }
                s
            })
            .collect();
        let diag = (0..n).map(|i| pattern.slot(i, i)).collect();
        let dmats = (0..tris.len()).map(|t| dmatrix(frames, t)).collect();
        Ok(Problem { tris, frames, weights, energy, dmats, pattern, slots, diag })
    }

    fn evaluate(&self, x: &[f64], shift: f64) -> Option<Eval> {
        let mut value = 0.0;
        let mut max_exponent = f64::NEG_INFINITY;
        let mut min_det = f64::INFINITY;
        for (t, tri) in self.tris.iter().enumerate() {
            let j = jacobian(x, tri, self.frames, t);
            let (f, _, _) = self.energy.exponent(&j)?;
            value += self.weights[t] * (f - shift).exp();
            max_exponent = max_exponent.max(f);
            min_det = min_det.min(j.determinant());
        }
        Some(Eval { value, max_exponent, min_det })
    }

    /// Gradient and PSD-projected Hessian values of the shifted objective.
    fn assemble(&self, x: &[f64], shift: f64, grad: &mut [f64], hess: &mut [f64]) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        hess.iter_mut().for_each(|h| *h = 0.0);
        for (t, tri) in self.tris.iter().enumerate() {
            let j = jacobian(x, tri, self.frames, t);
            let (f, g4, h4) = self.energy.exponent(&j).expect("assembled at a flip-free iterate");
            let w = self.weights[t] * (f - shift).exp();
            if w == 0.0 {
                continue;
            }
            let d = &self.dmats[t];
            let g6: Vec6 = d.transpose() * g4 * w;
            let p4 = project_psd(&(g4 * g4.transpose() + h4));
            let h6 = d.transpose() * p4 * d * w;
            for i in 0..6 {
                grad[2 * tri[i / 2] + i % 2] += g6[i];
                for jj in 0..6 {
                    let s = self.slots[t][6 * i + jj];
                    if s != usize::MAX {
                        hess[s] += h6[(i, jj)];
                    }
                }
            }
        }
    }

    fn newton_direction(&self, grad: &[f64], hess: &[f64]) -> Option<Vec<f64>> {
        let mean_diag = self.diag.iter().map(|&s| hess[s]).sum::<f64>() / self.diag.len() as f64;
        let mut mu = 1e-8 * if mean_diag > 0.0 { mean_diag } else { 1.0 };
        for _ in 0..4 {
            let mut values = hess.to_vec();
            for &s in &self.diag {
                values[s] += mu;
            }
            let mut p: Vec<f64> = grad.iter().map(|g| -g).collect();
            if self.pattern.solve(&values, &mut p, 1).is_ok() {
                return Some(p);
            }
            mu *= 100.0;
        }
        None
    }

    fn max_step(&self, x: &[f64], p: &[f64]) -> f64 {
        let mut alpha = f64::INFINITY;
        for &[a, b, c] in self.tris {
            let edges = |v: &[f64]| {
                Matrix2::new(
                    v[2 * b] - v[2 * a],
                    v[2 * c] - v[2 * a],
                    v[2 * b + 1] - v[2 * a + 1],
                    v[2 * c + 1] - v[2 * a + 1],
                )
            };
            alpha = alpha.min(flip_root(&edges(x), &edges(p)));
        }
        alpha
    }

    fn run(&self, init: &PlanarParam, cfg: &OptimizerConfig) -> Result<OptimizeResult, ParamError> {
        let n = init.len();
        if 2 * n != self.diag.len() {
            return Err(ParamError::LengthMismatch { got: n, expected: self.diag.len() / 2 });
        }
        let mut x = init.to_flat();
        let probe = self.evaluate(&x, 0.0).ok_or(ParamError::Flipped)?;
        let mut shift = probe.max_exponent;
        let mut cur = self.evaluate(&x, shift).ok_or(ParamError::Flipped)?;
        let mut log_energy = vec![shift + cur.value.ln()];
        let mut min_det = vec![cur.min_det];
        let mut grad = vec![0.0; x.len()];
        let mut hess = vec![0.0; self.pattern.nnz()];
        let scale = {
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for (i, v) in x.iter().enumerate() {
                lo[i % 2] = lo[i % 2].min(*v);
                hi[i % 2] = hi[i % 2].max(*v);
            }
            (hi[0] - lo[0]).hypot(hi[1] - lo[1])
        };

        let mut status = OptimizeStatus::MaxIterations;
        let mut iterations = 0;
        for _ in 0..cfg.max_iters {
            self.assemble(&x, shift, &mut grad, &mut hess);
            let g_inf = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            if g_inf * scale <= 1e-12 * cur.value {
                status = OptimizeStatus::Converged;
                break;
            }
            let mut accepted = None;
            let newton = self.newton_direction(&grad, &hess);
            let steepest: Vec<f64> = grad.iter().map(|g| -g).collect();
            for p in newton.into_iter().chain(std::iter::once(steepest)) {
                let slope: f64 = grad.iter().zip(&p).map(|(g, d)| g * d).sum();
                if !(slope < 0.0) {
                    continue;
                }
                let mut alpha = (0.8 * self.max_step(&x, &p)).min(1.0);
                for _ in 0..cfg.max_line_search {
                    let trial: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + alpha * pi).collect();
                    if let Some(e) = self.evaluate(&trial, shift) {
                        if e.min_det > 0.0 && e.value <= cur.value + 1e-4 * alpha * slope {
                            accepted = Some((trial, e));
                            break;
                        }
                    }
                    alpha *= cfg.shrink;
                }
                if accepted.is_some() {
                    break;
                }
            }
            let Some((next, eval)) = accepted else {
                status = OptimizeStatus::LineSearchFailed;
                break;
            };
            iterations += 1;
            let decrease = (cur.value - eval.value) / cur.value;
            x = next;
            log_energy.push(shift + eval.value.ln());
            min_det.push(eval.min_det);
            cur = eval;
            trace!("iter {iterations}: log E = {:.9}, min det = {:.3e}", log_energy.last().unwrap(), cur.min_det);
            if (cur.max_exponent - shift).abs() > 200.0 {
                shift = cur.max_exponent;
                cur = self.evaluate(&x, shift).expect("accepted iterate is flip-free");
            }
            if decrease < cfg.tol {
                status = OptimizeStatus::Converged;
                break;
            }
        }
        debug!("optimizer: {status:?} after {iterations} steps, log E {:.6}", log_energy.last().unwrap());
        Ok(OptimizeResult { uv: PlanarParam::from_flat(&x), status, iterations, log_energy, min_det })
    }
}
