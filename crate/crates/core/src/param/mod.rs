//! Planar parameterization of disk-topology meshes.

mod energy;
mod frames;
mod optimize;
mod sparse;
mod tutte;

pub use energy::{amips_energy, area_energy, iso_distortion, jacobians, mips_energy, singular_values, JacobianField};
pub use frames::{local_frames, LocalFrames};
pub use optimize::{
    amips_gradient, optimize_acap, optimize_isometric, OptimizeResult, OptimizeStatus, OptimizerConfig,
};
pub use tutte::tutte_embed;

use nalgebra::Vector2;
use thiserror::Error;

use crate::mesh::{MeshError, TriMesh};

pub type Vec2 = Vector2<f64>;

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("triangle {0} is degenerate")]
    DegenerateTriangle(usize),
    #[error("expected exactly one boundary loop, found {0}")]
    NotADisk(usize),
    #[error("initial parameterization has a flipped triangle")]
    Flipped,
    #[error("parameterization has {got} coordinates, mesh has {expected} vertices")]
    LengthMismatch { got: usize, expected: usize },
    #[error("sparse solve failed: {0}")]
    Solver(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// One 2D coordinate per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarParam {
    uv: Vec<Vec2>,
}

impl PlanarParam {
    pub fn new(uv: Vec<Vec2>) -> Self {
        PlanarParam { uv }
    }

    /// From `(u0, v0, u1, v1, ...)`.
    pub fn from_flat(x: &[f64]) -> Self {
        PlanarParam { uv: x.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect() }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.uv.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    pub fn len(&self) -> usize {
        self.uv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.uv.is_empty()
    }

    pub fn coords(&self) -> &[Vec2] {
        &self.uv
    }

    pub fn coords_mut(&mut self) -> &mut [Vec2] {
        &mut self.uv
    }

    pub fn scaled(&self, s: f64) -> Self {
        PlanarParam { uv: self.uv.iter().map(|p| p * s).collect() }
    }
}

/// Uniformly rescales `uv` so that its area matches the 3D area, both summed
/// over the triangles not excluded by `mask`.
pub fn normalize_area(mesh: &TriMesh, uv: &PlanarParam, mask: Option<&[bool]>) -> PlanarParam {
    let p = uv.coords();
    let (mut a3, mut a2) = (0.0, 0.0);
    for (t, &[a, b, c]) in mesh.triangles().iter().enumerate() {
        if mask.is_some_and(|m| m[t]) {
            continue;
        }
        a3 += mesh.triangle_area(t);
        a2 += 0.5 * (p[b] - p[a]).perp(&(p[c] - p[a]));
    }
    if a2 <= 0.0 {
        return uv.clone();
    }
    uv.scaled((a3 / a2).sqrt())
}

/// Isometric distortion of every triangle of `mesh` under `uv`.
pub fn iso_field(mesh: &TriMesh, uv: &PlanarParam) -> Result<Vec<f64>, ParamError> {
    if uv.len() != mesh.num_vertices() {
        return Err(ParamError::LengthMismatch { got: uv.len(), expected: mesh.num_vertices() });
    }
    let frames = local_frames(mesh)?;
    Ok(jacobians(mesh, &frames, uv).iso)
}
