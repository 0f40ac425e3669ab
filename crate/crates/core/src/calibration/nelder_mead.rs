//! Nelder–Mead simplex search inside a box.

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Initial simplex edge per coordinate.
    pub step: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Stop once every coordinate's spread across the simplex is below this.
    pub spread_tolerance: f64,
    pub max_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

fn spread(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let n = simplex[0].0.len();
    (0..n)
        .map(|d| {
            let (lo, hi) = simplex.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| {
                (lo.min(x[d]), hi.max(x[d]))
            });
            hi - lo
        })
        .fold(0.0, f64::max)
}

/// Minimize `f` from `x0`. Trial points are clamped into the box; failed
/// evaluations (`None`) count as +∞. The returned value never exceeds `f(x0)`.
pub fn minimize(mut f: impl FnMut(&[f64]) -> Option<f64>, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        f(x).filter(|v| v.is_finite()).unwrap_or(f64::INFINITY)
    };

    let mut start = x0.to_vec();
    project(&mut start, &opts.lower, &opts.upper);
    let mut simplex = vec![(start.clone(), eval(&start, &mut evals))];
    for d in 0..n {
        let mut x = start.clone();
        x[d] += opts.step[d];
        if x[d] > opts.upper[d] {
            x[d] = start[d] - opts.step[d];
        }
        project(&mut x, &opts.lower, &opts.upper);
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let mut converged = false;
    while evals < opts.max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if spread(&simplex) < opts.spread_tolerance {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|(x, _)| x[d]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            project(&mut x, &opts.lower, &opts.upper);
            x
        };
        let (best, second_worst, worst) = (simplex[0].1, simplex[n - 1].1, simplex[n].1);

        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < best {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < second_worst {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let x = along(0.5);
            let v = eval(&x, &mut evals);
            (x, v)
        } else {
            let x = along(-0.5);
            let v = eval(&x, &mut evals);
            (x, v)
        };
        if fc < worst.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x0 = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for (xi, bi) in x.iter_mut().zip(&x0) {
                *xi = bi + 0.5 * (*xi - bi);
            }
            *v = eval(x, &mut evals);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        evaluations: evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(n: usize, lo: f64, hi: f64) -> NelderMeadOptions {
        NelderMeadOptions {
            step: vec![0.5; n],
            lower: vec![lo; n],
            upper: vec![hi; n],
            spread_tolerance: 1e-6,
            max_evaluations: 5000,
        }
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| Some((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let m = minimize(f, &[-1.2, 1.0], &opts(2, -5.0, 5.0));
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-3 && (m.x[1] - 1.0).abs() < 1e-3, "{:?}", m.x);
    }

    #[test]
    fn respects_box() {
        let f = |x: &[f64]| Some((x[0] - 10.0).powi(2));
        let m = minimize(f, &[0.0], &opts(1, -1.0, 2.0));
        assert!((m.x[0] - 2.0).abs() < 1e-5);
    }

    #[test]
    fn failures_are_avoided() {
        let f = |x: &[f64]| if x[0] > 1.0 { None } else { Some((x[0] - 3.0).powi(2)) };
        let m = minimize(f, &[0.0], &opts(1, -5.0, 5.0));
        assert!(m.x[0] <= 1.0 && m.x[0] > 0.99);
    }
}
