//! Element integrals for the 8-node trilinear brick and its 4-node faces.

use serde::{Deserialize, Serialize};

/// Local node `l = a + 2b + 4c` sits at natural coordinates
/// `(2a-1, 2b-1, 2c-1)`.
#[inline]
fn corner(l: usize) -> [f64; 3] {
    [
        if l & 1 == 0 { -1.0 } else { 1.0 },
        if l & 2 == 0 { -1.0 } else { 1.0 },
        if l & 4 == 0 { -1.0 } else { 1.0 },
    ]
}

const GAUSS: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// Quadrature for the conduction and convective face integrals.
///
/// `Gauss` integrates the trilinear brick exactly (2×2×2 points) with the
/// consistent face matrix. `Nodal` places the points on the element vertices
/// and lumps the face matrix; off-diagonal couplings are then never positive,
/// which keeps discrete solutions inside the range of their boundary and
/// initial data. Both reproduce fields linear in x, y, z exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integration {
    #[default]
    Nodal,
    Gauss,
}

impl Integration {
    fn points(self) -> Vec<[f64; 3]> {
        match self {
            Integration::Gauss => GAUSS
                .iter()
                .flat_map(|&x| GAUSS.iter().flat_map(move |&y| GAUSS.iter().map(move |&z| [x, y, z])))
                .collect(),
            Integration::Nodal => (0..8).map(corner).collect(),
        }
    }
}

/// Conductivity matrix `∫ k ∇Nᵢ·∇Nⱼ dV` of a brick with edges `h` (metres).
pub fn brick_conductivity(conductivity: f64, h: [f64; 3], rule: Integration) -> [[f64; 8]; 8] {
    let jac = h[0] * h[1] * h[2] / 8.0;
    let mut ke = [[0.0; 8]; 8];
    for p in rule.points() {
        let mut grad = [[0.0; 3]; 8];
        for (l, g) in grad.iter_mut().enumerate() {
            let c = corner(l);
            let f = [1.0 + c[0] * p[0], 1.0 + c[1] * p[1], 1.0 + c[2] * p[2]];
            g[0] = c[0] * f[1] * f[2] / 8.0 * 2.0 / h[0];
            g[1] = f[0] * c[1] * f[2] / 8.0 * 2.0 / h[1];
            g[2] = f[0] * f[1] * c[2] / 8.0 * 2.0 / h[2];
        }
        for a in 0..8 {
            for b in 0..8 {
                let dot = grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1] + grad[a][2] * grad[b][2];
                ke[a][b] += conductivity * dot * jac;
            }
        }
    }
    ke
}

/// Row-sum lumped heat capacity per node, `Σⱼ ∫ ρc Nᵢ Nⱼ dV`.
pub fn brick_lumped_capacity(rho_cp: f64, h: [f64; 3]) -> [f64; 8] {
    let jac = h[0] * h[1] * h[2] / 8.0;
    let mut lumped = [0.0; 8];
    for p in Integration::Gauss.points() {
        let n: Vec<f64> = (0..8)
            .map(|l| {
                let c = corner(l);
                (1.0 + c[0] * p[0]) * (1.0 + c[1] * p[1]) * (1.0 + c[2] * p[2]) / 8.0
            })
            .collect();
        let total: f64 = n.iter().sum();
        for (out, ni) in lumped.iter_mut().zip(&n) {
            *out += rho_cp * ni * total * jac;
        }
    }
    lumped
}

/// `∫ Nᵢ Nⱼ dA` of a rectangular 4-node face with area `area`, nodes ordered
/// around the perimeter. Nodal quadrature gives the lumped `area/4` diagonal.
pub fn face_mass(area: f64, rule: Integration) -> [[f64; 4]; 4] {
    match rule {
        Integration::Gauss => {
            let s = area / 36.0;
            [
                [4.0 * s, 2.0 * s, s, 2.0 * s],
                [2.0 * s, 4.0 * s, 2.0 * s, s],
                [s, 2.0 * s, 4.0 * s, 2.0 * s],
                [2.0 * s, s, 2.0 * s, 4.0 * s],
            ]
        }
        Integration::Nodal => {
            let d = area / 4.0;
            [[d, 0.0, 0.0, 0.0], [0.0, d, 0.0, 0.0], [0.0, 0.0, d, 0.0], [0.0, 0.0, 0.0, d]]
        }
    }
}
