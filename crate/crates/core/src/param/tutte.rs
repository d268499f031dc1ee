use std::f64::consts::TAU;

use super::sparse::SpdPattern;
use super::{ParamError, PlanarParam, Vec2};
use crate::mesh::{boundary_loops, MeshTopology, TriMesh};

/// Uniform-weight Tutte embedding with the boundary on the unit circle,
/// spaced proportionally to 3D boundary edge length.
pub fn tutte_embed(disk: &TriMesh) -> Result<PlanarParam, ParamError> {
    let loops = boundary_loops(disk);
    if loops.len() != 1 {
        return Err(ParamError::NotADisk(loops.len()));
    }
    let boundary = &loops[0];
    let n = disk.num_vertices();
    let mut uv = vec![Vec2::zeros(); n];

    let seg: Vec<f64> =
        (0..boundary.len()).map(|i| disk.edge_length(boundary[i], boundary[(i + 1) % boundary.len()])).collect();
    let total: f64 = seg.iter().sum();
    let mut acc = 0.0;
    for (i, &v) in boundary.iter().enumerate() {
        let theta = TAU * acc / total;
        uv[v] = Vec2::new(theta.cos(), theta.sin());
        acc += seg[i];
    }

    let mut index = vec![usize::MAX; n];
    let mut on_boundary = vec![false; n];
    for &v in boundary {
        on_boundary[v] = true;
    }
    let interior: Vec<usize> = (0..n).filter(|&v| !on_boundary[v]).collect();
    for (k, &v) in interior.iter().enumerate() {
        index[v] = k;
    }
    if interior.is_empty() {
        return Ok(PlanarParam::new(uv));
    }

    let topology = MeshTopology::new(disk);
    let m = interior.len();
    let entries = interior.iter().flat_map(|&v| {
        let index = &index;
        topology.neighbors(v).iter().filter(move |&&u| index[u] != usize::MAX).map(move |&u| (index[v], index[u]))
    });
    let pattern = SpdPattern::new(m, entries)?;
    let mut values = vec![0.0; pattern.nnz()];
    let mut rhs = vec![0.0; 2 * m];
    for (k, &v) in interior.iter().enumerate() {
        let nb = topology.neighbors(v);
        values[pattern.slot(k, k)] = nb.len() as f64;
        for &u in nb {
            if index[u] == usize::MAX {
                rhs[k] += uv[u].x;
                rhs[m + k] += uv[u].y;
            } else if index[u] < k {
                values[pattern.slot(k, index[u])] = -1.0;
            }
        }
    }
    pattern.solve(&values, &mut rhs, 2)?;
    for (k, &v) in interior.iter().enumerate() {
        uv[v] = Vec2::new(rhs[k], rhs[m + k]);
    }
    Ok(PlanarParam::new(uv))
}
