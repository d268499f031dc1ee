//! Procedural test meshes.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::{TriMesh, Vec3};

pub fn tetrahedron() -> TriMesh {
    let p = vec![
        Vec3::new(1.0, 1.0, 1.0),
        Vec3::new(1.0, -1.0, -1.0),
        Vec3::new(-1.0, 1.0, -1.0),
        Vec3::new(-1.0, -1.0, 1.0),
    ];
    TriMesh::new(p, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]).expect("valid tetrahedron")
}

/// Unit cube `[0,1]^3` with 8 vertices and 12 triangles.
pub fn cube() -> TriMesh {
    subdivided_cube(1)
}

/// Unit cube with every face split into a `k x k` grid of squares.
pub fn subdivided_cube(k: usize) -> TriMesh {
    voxel_surface(&[[0, 0, 0]], k, |_| false)
}

/// Subdivided unit cube with randomly chosen square diagonals and vertices
/// jittered tangentially by up to `jitter` grid cells. Corners stay fixed and
/// edge vertices stay on their cube edge.
pub fn perturbed_cube(k: usize, jitter: f64, seed: u64) -> TriMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut diag = HashMap::new();
    let mut mesh = voxel_surface(&[[0, 0, 0]], k, |key| *diag.entry(key).or_insert_with(|| rng.random::<bool>()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let h = 1.0 / k as f64;
    let eps = 1e-9;
    let positions: Vec<Vec3> = mesh
        .positions()
        .iter()
        .map(|p| {
            let mut q = *p;
            for a in 0..3 {
                if p[a] > eps && p[a] < 1.0 - eps {
                    q[a] += (rng.random::<f64>() * 2.0 - 1.0) * jitter * h;
                }
            }
            q
        })
        .collect();
    mesh = TriMesh::new(positions, mesh.triangles().to_vec()).expect("jitter keeps topology");
    mesh
}

/// Boundary surface of a union of unit voxels, each voxel face split into a
/// `k x k` grid. `flip(key)` chooses the diagonal of each grid square.
pub fn voxel_surface(cells: &[[i32; 3]], k: usize, mut flip: impl FnMut((usize, [i64; 3])) -> bool) -> TriMesh {
    let occupied: std::collections::HashSet<[i32; 3]> = cells.iter().copied().collect();
    let k = k as i64;
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    let mut vid = |q: [i64; 3], positions: &mut Vec<Vec3>| -> usize {
        *index.entry(q).or_insert_with(|| {
            positions.push(Vec3::new(q[0] as f64, q[1] as f64, q[2] as f64) / k as f64);
            positions.len() - 1
        })
    };
    let mut sorted: Vec<[i32; 3]> = occupied.iter().copied().collect();
    sorted.sort_unstable();
    for c in sorted {
        for a in 0..3 {
            let (b, cc) = ((a + 1) % 3, (a + 2) % 3);
            for side in [1i32, -1] {
                let mut nb = c;
                nb[a] += side;
                if occupied.contains(&nb) {
                    continue;
                }
                let plane = (c[a] as i64 + if side > 0 { 1 } else { 0 }) * k;
                for i in 0..k {
                    for j in 0..k {
                        let at = |di: i64, dj: i64| {
                            let mut q = [0i64; 3];
                            q[a] = plane;
                            q[b] = c[b] as i64 * k + i + di;
                            q[cc] = c[cc] as i64 * k + j + dj;
                            q
                        };
                        let corners = [at(0, 0), at(1, 0), at(1, 1), at(0, 1)];
                        let ids = corners.map(|q| vid(q, &mut positions));
                        let key = (a, corners[0]);
                        let mut quad = if flip(key) {
                            [[ids[0], ids[1], ids[3]], [ids[1], ids[2], ids[3]]]
                        } else {
                            [[ids[0], ids[1], ids[2]], [ids[0], ids[2], ids[3]]]
                        };
                        if side < 0 {
                            for t in &mut quad {
                                t.swap(1, 2);
                            }
                        }
                        triangles.extend(quad);
                    }
                }
            }
        }
    }
    TriMesh::new(positions, triangles).expect("voxel surface is manifold")
}

/// Genus-2 slab: a 5 x 3 x 1 block of voxels with two through-holes.
pub fn double_torus(k: usize) -> TriMesh {
    let mut cells = Vec::new();
    for x in 0..5 {
        for y in 0..3 {
            if y == 1 && (x == 1 || x == 3) {
                continue;
            }
            cells.push([x, y, 0]);
        }
    }
    voxel_surface(&cells, k, |_| false)
}

pub fn icosahedron() -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let p = raw.iter().map(|c| Vec3::new(c[0], c[1], c[2]).normalize()).collect();
    let f = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    TriMesh::new(p, f).expect("valid icosahedron")
}

/// Unit icosphere; `level` 4-to-1 subdivisions give `10 * 4^level + 2` vertices.
pub fn icosphere(level: usize) -> TriMesh {
    let base = icosahedron();
    let mut positions = base.positions().to_vec();
    let mut triangles = base.triangles().to_vec();
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for t in &triangles {
            let mut m = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                m[k] = *mid.entry(key).or_insert_with(|| {
                    positions.push(((positions[a] + positions[b]) * 0.5).normalize());
                    positions.len() - 1
                });
            }
            next.push([t[0], m[0], m[2]]);
            next.push([t[1], m[1], m[0]]);
            next.push([t[2], m[2], m[1]]);
            next.push([m[0], m[1], m[2]]);
        }
        triangles = next;
    }
    TriMesh::new(positions, triangles).expect("valid icosphere")
}

/// Torus with `nu` segments around the main ring and `nv` around the tube.
/// Vertex `(i, j)` has index `i * nv + j`.
pub fn torus(nu: usize, nv: usize, major: f64, minor: f64) -> TriMesh {
    let mut positions = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * std::f64::consts::PI * i as f64 / nu as f64;
        for j in 0..nv {
            let v = 2.0 * std::f64::consts::PI * j as f64 / nv as f64;
            let r = major + minor * v.cos();
            positions.push(Vec3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut triangles = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::new(positions, triangles).expect("valid torus")
}

/// Flat `[0,1]^2` grid with `nx x ny` squares.
pub fn grid_disk(nx: usize, ny: usize) -> TriMesh {
    let mut positions = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            positions.push(Vec3::new(i as f64 / nx as f64, j as f64 / ny as f64, 0.0));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::new(positions, triangles).expect("valid grid")
}

/// Regular hexagon of radius `r` fanned around its centre (vertex 0).
pub fn hex_fan(r: f64) -> TriMesh {
    fan(6, r)
}

/// `n` triangles fanned around a centre vertex (index 0) with boundary
/// vertices evenly spaced on a circle of radius `r`.
pub fn fan(n: usize, r: f64) -> TriMesh {
    let mut positions = vec![Vec3::zeros()];
    for i in 0..n {
        let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
        positions.push(Vec3::new(r * a.cos(), r * a.sin(), 0.0));
    }
    let triangles = (0..n).map(|i| [0, 1 + i, 1 + (i + 1) % n]).collect();
    TriMesh::new(positions, triangles).expect("valid fan")
}

/// Developable L-shaped strip: the planar union of `[0,3]x[0,1]` and
/// `[0,1]x[0,3]` meshed with spacing `1/k`, folded by 90 degrees along `x = 2`.
pub fn folded_l_strip(k: usize) -> TriMesh {
    let n = 3 * k;
    let inside = |i: usize, j: usize| i < k || j < k; // square cell (i, j)
    let mut index = HashMap::new();
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    let h = 1.0 / k as f64;
    let mut vid = |i: usize, j: usize, positions: &mut Vec<Vec3>| {
        *index.entry((i, j)).or_insert_with(|| {
            let (x, y) = (i as f64 * h, j as f64 * h);
            let p = if x <= 2.0 { Vec3::new(x, y, 0.0) } else { Vec3::new(2.0, y, x - 2.0) };
            positions.push(p);
            positions.len() - 1
        })
    };
    for j in 0..n {
        for i in 0..n {
            if !inside(i, j) {
                continue;
            }
            let a = vid(i, j, &mut positions);
            let b = vid(i + 1, j, &mut positions);
            let c = vid(i + 1, j + 1, &mut positions);
            let d = vid(i, j + 1, &mut positions);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TriMesh::new(positions, triangles).expect("valid strip")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(icosphere(4).num_vertices(), 2562);
        assert_eq!(subdivided_cube(29).num_vertices(), 6 * 29 * 29 + 2);
        assert_eq!(torus(64, 32, 1.0, 0.35).num_vertices(), 2048);
        assert_eq!(folded_l_strip(4).num_components(), 1);
    }

    #[test]
    fn closed_surfaces_have_expected_genus() {
        assert_eq!(cube().genus().unwrap(), 0);
        assert_eq!(perturbed_cube(6, 0.3, 3).genus().unwrap(), 0);
        assert_eq!(icosphere(2).genus().unwrap(), 0);
        assert_eq!(double_torus(2).genus().unwrap(), 2);
    }

    #[test]
    fn outward_orientation() {
        // Signed volume is positive for outward-facing triangles.
        for m in [cube(), icosphere(1), torus(10, 6, 1.0, 0.3), double_torus(1), tetrahedron()] {
            let vol: f64 = m
                .triangles()
                .iter()
                .map(|t| {
                    let p = m.positions();
                    p[t[0]].dot(&p[t[1]].cross(&p[t[2]])) / 6.0
                })
                .sum();
            assert!(vol > 0.0);
        }
    }

    #[test]
    fn folded_strip_is_isometric_to_plane() {
        let m = folded_l_strip(3);
        let flat_area = 5.0; // 3 + 3 - 1
        assert!((m.total_area() - flat_area).abs() < 1e-12);
    }
}
