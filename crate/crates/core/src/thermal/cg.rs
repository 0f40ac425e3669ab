//! Jacobi-preconditioned conjugate gradients on the free nodes of a
//! constrained thermal system.

use super::system::ThermalSystem;
use super::SolverError;

/// `(shift·C + S)` restricted to unconstrained nodes. Rows of prescribed
/// nodes produce zero, so iterates that vanish there stay there.
pub struct ConstrainedOperator<'a> {
    system: &'a ThermalSystem,
    shift: f64,
    inv_diag: Vec<f64>,
}

impl<'a> ConstrainedOperator<'a> {
    pub fn new(system: &'a ThermalSystem, shift: f64) -> Self {
        let diag = system.conductance().diagonal();
        let inv_diag = diag
            .iter()
            .zip(system.capacity())
            .zip(system.fixed())
            .map(|((d, c), f)| if f.is_some() { 0.0 } else { 1.0 / (d + shift * c) })
            .collect();
        Self {
            system,
            shift,
            inv_diag,
        }
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.system.conductance().mul_vec(x, y);
        for (((yi, xi), c), f) in y
            .iter_mut()
            .zip(x)
            .zip(self.system.capacity())
            .zip(self.system.fixed())
        {
            if f.is_some() {
                *yi = 0.0;
            } else {
                *yi += self.shift * c * xi;
            }
        }
    }

    pub fn precondition(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * d;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `A x = b` on the free nodes. `b` and the initial `x` must vanish on
/// prescribed nodes. Stops at `‖r‖ ≤ tol·‖b‖`.
pub fn pcg(
    op: &ConstrainedOperator<'_>,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgStats, SolverError> {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    op.precondition(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = dot(&r, &r).sqrt() / b_norm;
    for it in 0..max_iter {
        if res <= tol {
            return Ok(CgStats {
                iterations: it,
                relative_residual: res,
            });
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(SolverError::Breakdown {
                iterations: it,
                relative_residual: res,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        op.precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt() / b_norm;
    }
    if res <= tol {
        return Ok(CgStats {
            iterations: max_iter,
            relative_residual: res,
        });
    }
    Err(SolverError::NotConverged {
        iterations: max_iter,
        relative_residual: res,
    })
}
