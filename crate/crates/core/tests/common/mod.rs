//! Dense reference assembly shared by the oracle and acceptance suites.

use fff_thermal::mesostructure::{Material, VoxelGrid};
use fff_thermal::thermal::{Integration, Materials, ThermalScenario};
use nalgebra::{DMatrix, DVector};

pub struct Dense {
    k: DMatrix<f64>,
    c: DVector<f64>,
    f: DVector<f64>,
    fixed: Vec<bool>,
}

/// Textbook assembly in SI units. `m` is the 1D element mass per unit length:
/// lumped `diag(1/2, 1/2)` for vertex quadrature, `[[1/3, 1/6], [1/6, 1/3]]`
/// for exact integration.
pub fn dense_reference(grid: &VoxelGrid, mats: &Materials, sc: &ThermalScenario, rule: Integration) -> Dense {
    let m = match rule {
        Integration::Nodal => [[0.5, 0.0], [0.0, 0.5]],
        Integration::Gauss => [[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]],
    };
    let a = [[1.0, -1.0], [-1.0, 1.0]];
    let [nx, ny, nz] = grid.dims();
    let (px, py) = (nx + 1, ny + 1);
    let n = px * py * (nz + 1);
    let node = |i: usize, j: usize, k: usize| i + px * (j + py * k);
    let [hx, hy, hz] = grid.spacing().map(|d| d * 1e-3);
    let mut k = DMatrix::zeros(n, n);
    let mut c = DVector::zeros(n);
    let mut f = DVector::zeros(n);

    for ck in 0..nz {
        for cj in 0..ny {
            for ci in 0..nx {
                let mat = grid.material_at(ci, cj, ck);
                let p = mats.get(mat);
                let local: Vec<(usize, [usize; 3])> = (0..8)
                    .map(|l| {
                        let (a0, b0, c0) = (l & 1, (l >> 1) & 1, l >> 2);
                        (node(ci + a0, cj + b0, ck + c0), [a0, b0, c0])
                    })
                    .collect();
                let vol = hx * hy * hz;
                for &(gi, [a1, b1, c1]) in &local {
                    c[gi] += p.density * p.specific_heat * vol / 8.0;
                    if mat == Material::Pla {
                        f[gi] += sc.q_vol * vol / 8.0;
                    }
                    for &(gj, [a2, b2, c2]) in &local {
                        k[(gi, gj)] += p.conductivity
                            * (hy * hz / hx * a[a1][a2] * m[b1][b2] * m[c1][c2]
                                + hx * hz / hy * m[a1][a2] * a[b1][b2] * m[c1][c2]
                                + hx * hy / hz * m[a1][a2] * m[b1][b2] * a[c1][c2]);
                    }
                }
            }
        }
    }

    // Robin faces: four sides at the side ambient, the top at the top ambient
    let mut face = |nodes: [usize; 4], area: f64, ambient: f64| {
        for (r, &gi) in nodes.iter().enumerate() {
            f[gi] += sc.h * ambient * area / 4.0;
            for (s, &gj) in nodes.iter().enumerate() {
                // local order (0,0) (1,0) (0,1) (1,1)
                k[(gi, gj)] += sc.h * area * m[r & 1][s & 1] * m[r >> 1][s >> 1];
            }
        }
    };
    for j in 0..ny {
        for i in 0..nx {
            let q = [node(i, j, nz), node(i + 1, j, nz), node(i, j + 1, nz), node(i + 1, j + 1, nz)];
            face(q, hx * hy, sc.top_ambient);
        }
    }
    for kk in 0..nz {
        for j in 0..ny {
            for i in [0, nx] {
                face([node(i, j, kk), node(i, j + 1, kk), node(i, j, kk + 1), node(i, j + 1, kk + 1)], hy * hz, sc.side_ambient);
            }
        }
        for i in 0..nx {
            for j in [0, ny] {
                face([node(i, j, kk), node(i + 1, j, kk), node(i, j, kk + 1), node(i + 1, j, kk + 1)], hx * hz, sc.side_ambient);
            }
        }
    }
    let fixed = (0..n).map(|g| g < px * py).collect();
    Dense { k, c, f, fixed }
}

/// Backward Euler with the bed nodes eliminated; `dt = None` gives the steady state.
pub fn dense_solve(d: &Dense, sc: &ThermalScenario, dt: Option<f64>, steps: usize) -> Vec<f64> {
    let free: Vec<usize> = (0..d.fixed.len()).filter(|&i| !d.fixed[i]).collect();
    let mut t: Vec<f64> = d
        .fixed
        .iter()
        .map(|&fx| if fx { sc.bed_temperature } else { sc.initial_temperature })
        .collect();
    let nf = free.len();
    let shift = dt.map_or(0.0, |dt| 1.0 / dt);
    let mut lhs = DMatrix::zeros(nf, nf);
    for (r, &i) in free.iter().enumerate() {
        for (s, &j) in free.iter().enumerate() {
            lhs[(r, s)] = d.k[(i, j)];
        }
        lhs[(r, r)] += shift * d.c[i];
    }
    let lu = lhs.lu();
    for _ in 0..steps.max(1) {
        let mut rhs = DVector::zeros(nf);
        for (r, &i) in free.iter().enumerate() {
            rhs[r] = d.f[i] + shift * d.c[i] * t[i];
            for j in 0..t.len() {
                if d.fixed[j] {
                    rhs[r] -= d.k[(i, j)] * t[j];
                }
            }
        }
        let x = lu.solve(&rhs).expect("nonsingular");
        for (r, &i) in free.iter().enumerate() {
            t[i] = x[r];
        }
    }
    t
}

pub fn mixed_grid(dims: [usize; 3], spacing: [f64; 3]) -> VoxelGrid {
    let n = dims.iter().product();
    let cells = (0..n)
        .map(|i| if i % 3 == 1 { Material::Air } else { Material::Pla })
        .collect();
    VoxelGrid::new(dims, spacing, cells).unwrap()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
