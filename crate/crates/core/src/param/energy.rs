//! Per-triangle distortion energies of a 2×2 Jacobian and their derivatives
//! with respect to `vec J = (j11, j12, j21, j22)`.

use nalgebra::{Matrix2, Matrix4, Vector4};

use super::{LocalFrames, PlanarParam};
use crate::mesh::TriMesh;

/// Singular values `(σ1, σ2)`, `σ1 ≥ σ2 ≥ 0`, in closed form.
pub fn singular_values(j: &Matrix2<f64>) -> (f64, f64) {
    let (a, b, c, d) = (j[(0, 0)], j[(0, 1)], j[(1, 0)], j[(1, 1)]);
    let e = 0.5 * (a + d);
    let f = 0.5 * (a - d);
    let g = 0.5 * (c + b);
    let h = 0.5 * (c - b);
    let q = e.hypot(h);
    let r = f.hypot(g);
    (q + r, (q - r).abs())
}

/// `½‖J‖²/det J`; `+∞` for `det J ≤ 0`.
pub fn mips_energy(j: &Matrix2<f64>) -> f64 {
    let det = j.determinant();
    if det <= 0.0 {
        return f64::INFINITY;
    }
    0.5 * j.norm_squared() / det
}

/// `½(det J + 1/det J)`; `+∞` for `det J ≤ 0`.
pub fn area_energy(j: &Matrix2<f64>) -> f64 {
    let det = j.determinant();
    if det <= 0.0 {
        return f64::INFINITY;
    }
    0.5 * (det + 1.0 / det)
}

/// Isometric distortion `½(E_area + E_MIPS)`; `+∞` for `det J ≤ 0`.
pub fn iso_distortion(j: &Matrix2<f64>) -> f64 {
    0.5 * (area_energy(j) + mips_energy(j))
}

/// Jacobians of a parameterization with cached singular values and energies.
#[derive(Debug, Clone)]
pub struct JacobianField {
    pub jacobians: Vec<Matrix2<f64>>,
    pub singular_values: Vec<(f64, f64)>,
    pub mips: Vec<f64>,
    pub iso: Vec<f64>,
}

impl JacobianField {
    pub fn from_jacobians(jacobians: Vec<Matrix2<f64>>) -> Self {
        let singular_values = jacobians.iter().map(singular_values).collect();
        let mips = jacobians.iter().map(mips_energy).collect();
        let iso = jacobians.iter().map(iso_distortion).collect();
        JacobianField { jacobians, singular_values, mips, iso }
    }

    pub fn len(&self) -> usize {
        self.jacobians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jacobians.is_empty()
    }

    pub fn min_det(&self) -> f64 {
        self.jacobians.iter().map(|j| j.determinant()).fold(f64::INFINITY, f64::min)
    }

    pub fn is_flip_free(&self) -> bool {
        self.min_det() > 0.0
    }
}

/// `J_t` with `[uv edges] = J_t [frame edges]` for every triangle.
pub fn jacobians(disk: &TriMesh, frames: &LocalFrames, uv: &PlanarParam) -> JacobianField {
    let p = uv.coords();
    let js = disk
        .triangles()
        .iter()
        .enumerate()
        .map(|(t, &[a, b, c])| {
            let u = Matrix2::from_columns(&[p[b] - p[a], p[c] - p[a]]);
            u * frames.edge_inverse(t)
        })
        .collect();
    JacobianField::from_jacobians(js)
}

/// Unweighted `Σ exp(E_MIPS)`; `+∞` if any triangle is flipped.
pub fn amips_energy(field: &JacobianField) -> f64 {
    field.mips.iter().map(|m| m.exp()).sum()
}

pub(crate) type Grad4 = Vector4<f64>;
pub(crate) type Hess4 = Matrix4<f64>;

fn vec_j(j: &Matrix2<f64>) -> Grad4 {
    Grad4::new(j[(0, 0)], j[(0, 1)], j[(1, 0)], j[(1, 1)])
}

fn det_grad(j: &Matrix2<f64>) -> Grad4 {
    Grad4::new(j[(1, 1)], -j[(1, 0)], -j[(0, 1)], j[(0, 0)])
}

fn det_hess() -> Hess4 {
    let mut h = Hess4::zeros();
    h[(0, 3)] = 1.0;
    h[(3, 0)] = 1.0;
    h[(1, 2)] = -1.0;
    h[(2, 1)] = -1.0;
    h
}

/// E_MIPS with gradient and Hessian; `None` if `det J ≤ 0`.
pub(crate) fn mips_derivatives(j: &Matrix2<f64>) -> Option<(f64, Grad4, Hess4)> {
    let d = j.determinant();
    if d <= 0.0 {
        return None;
    }
    let a = vec_j(j);
    let s = a.norm_squared();
    let gd = det_grad(j);
    let d2 = d * d;
    let f = 0.5 * s / d;
    let g = a / d - gd * (0.5 * s / d2);
    let h = Hess4::identity() / d - (a * gd.transpose() + gd * a.transpose()) / d2 - det_hess() * (0.5 * s / d2)
        + gd * gd.transpose() * (s / (d2 * d));
    Some((f, g, h))
}

/// E_area with gradient and Hessian; `None` if `det J ≤ 0`.
pub(crate) fn area_derivatives(j: &Matrix2<f64>) -> Option<(f64, Grad4, Hess4)> {
    let d = j.determinant();
    if d <= 0.0 {
        return None;
    }
    let gd = det_grad(j);
    let k = 0.5 * (1.0 - 1.0 / (d * d));
    let f = 0.5 * (d + 1.0 / d);
    let g = gd * k;
    let h = det_hess() * k + gd * gd.transpose() / (d * d * d);
    Some((f, g, h))
}

/// E_iso with gradient and Hessian; `None` if `det J ≤ 0`.
pub(crate) fn iso_derivatives(j: &Matrix2<f64>) -> Option<(f64, Grad4, Hess4)> {
    let (fm, gm, hm) = mips_derivatives(j)?;
    let (fa, ga, ha) = area_derivatives(j)?;
    Some((0.5 * (fm + fa), 0.5 * (gm + ga), 0.5 * (hm + ha)))
}
