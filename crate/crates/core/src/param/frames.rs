use nalgebra::{Matrix2, Vector2};

use super::{ParamError, Vec2};
use crate::mesh::TriMesh;

/// Isometric flattening of every triangle into its own 2D frame.
#[derive(Debug, Clone)]
pub struct LocalFrames {
    corners: Vec<[Vec2; 3]>,
    inverse: Vec<Matrix2<f64>>,
    areas: Vec<f64>,
}

impl LocalFrames {
    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    pub fn corners(&self, t: usize) -> &[Vec2; 3] {
        &self.corners[t]
    }

    /// Inverse of the frame edge matrix `[c1 - c0, c2 - c0]`.
    pub fn edge_inverse(&self, t: usize) -> &Matrix2<f64> {
        &self.inverse[t]
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }
}

/// Corner 0 at the origin, corner 1 on the +x axis, corner 2 above it.
pub fn local_frames(mesh: &TriMesh) -> Result<LocalFrames, ParamError> {
    let n = mesh.num_triangles();
    let mean_area = mesh.total_area() / n.max(1) as f64;
    let p = mesh.positions();
    let mut corners = Vec::with_capacity(n);
    let mut inverse = Vec::with_capacity(n);
    let mut areas = Vec::with_capacity(n);
    for (t, &[a, b, c]) in mesh.triangles().iter().enumerate() {
        let e1 = p[b] - p[a];
        let e2 = p[c] - p[a];
        let l1 = e1.norm();
        let cross = e1.cross(&e2).norm();
        let area = 0.5 * cross;
        if !(area > 1e-12 * mean_area) || l1 == 0.0 {
            return Err(ParamError::DegenerateTriangle(t));
        }
        let x2 = Vector2::new(e1.dot(&e2) / l1, cross / l1);
        let frame = [Vec2::zeros(), Vec2::new(l1, 0.0), x2];
        let edges = Matrix2::from_columns(&[frame[1], frame[2]]);
        inverse.push(edges.try_inverse().ok_or(ParamError::DegenerateTriangle(t))?);
        corners.push(frame);
        areas.push(area);
    }
    Ok(LocalFrames { corners, inverse, areas })
}
