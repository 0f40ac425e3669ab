use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nelder_mead::{minimize, NelderMeadOptions};
use super::response::{MeanBasis, ResponseModel, Temperatures};
use super::trace::{aligned, ExperimentTrace};
use super::CalibrationError;
use crate::thermal::ProbeSeries;

/// Hypothesis about the ambient temperatures seen by the free surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CalibrationCase {
    /// Both zones at room temperature; only `h` is fitted.
    Case1,
    /// One shared ambient temperature.
    Case2,
    /// Separate side and top ambient temperatures.
    Case3,
}

impl CalibrationCase {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Self::Case1),
            2 => Some(Self::Case2),
            3 => Some(Self::Case3),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Self::Case1 => 1,
            Self::Case2 => 2,
            Self::Case3 => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// W/(m²·K)
    pub h: (f64, f64),
    /// °C
    pub side: (f64, f64),
    /// °C
    pub top: (f64, f64),
}

impl Bounds {
    /// `h` in [5, 60] and both ambients between room and bed temperature.
    pub fn default_for(initial: f64, bed: f64) -> Self {
        let t = (initial.min(bed), initial.max(bed));
        Self {
            h: (5.0, 60.0),
            side: t,
            top: t,
        }
    }

    pub fn validate(&self) -> Result<(), CalibrationError> {
        for (name, (lo, hi)) in [("h", self.h), ("T_c_side", self.side), ("T_c_top", self.top)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(CalibrationError::InvalidBounds(format!("{name} bounds [{lo}, {hi}] are not ordered")));
            }
        }
        if self.h.0 < 0.0 {
            return Err(CalibrationError::InvalidBounds(format!("h lower bound {} is negative", self.h.0)));
        }
        Ok(())
    }

    /// Range of the shared ambient of case 2.
    pub fn tied(&self) -> Result<(f64, f64), CalibrationError> {
        let lo = self.side.0.max(self.top.0);
        let hi = self.side.1.min(self.top.1);
        if lo > hi {
            return Err(CalibrationError::InvalidBounds(format!(
                "side [{}, {}] and top [{}, {}] ranges do not overlap",
                self.side.0, self.side.1, self.top.0, self.top.1
            )));
        }
        Ok((lo, hi))
    }
}

/// Candidate values swept before refinement. Case 2 takes its shared ambient
/// from `side`; case 1 ignores both temperature lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub h: Vec<f64>,
    pub side: Vec<f64>,
    pub top: Vec<f64>,
}

fn steps(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if hi <= lo || step <= 0.0 {
        return vec![lo];
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
    if hi - v[n] > 1e-9 * step {
        v.push(hi);
    }
    v
}

impl Lattice {
    /// Evenly spaced points covering `bounds`, end points included.
    pub fn spanning(bounds: &Bounds, h_step: f64, t_step: f64) -> Self {
        Self {
            h: steps(bounds.h.0, bounds.h.1, h_step),
            side: steps(bounds.side.0, bounds.side.1, t_step),
            top: steps(bounds.top.0, bounds.top.1, t_step),
        }
    }
}

/// One evaluated candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEntry {
    pub h: f64,
    pub side_ambient: f64,
    pub top_ambient: f64,
    /// °C
    pub rmse: f64,
}

pub struct CalibrationProblem {
    pub case: CalibrationCase,
    pub trace: ExperimentTrace,
    pub bounds: Bounds,
    pub lattice: Lattice,
    model: Arc<ResponseModel>,
    search: Option<Arc<ResponseModel>>,
}

impl CalibrationProblem {
    /// Default bounds and a lattice with 5 W/(m²·K) and 1 °C spacing.
    pub fn new(case: CalibrationCase, trace: ExperimentTrace, model: Arc<ResponseModel>) -> Self {
        let sc = model.scenario();
        let bounds = Bounds::default_for(sc.initial_temperature, sc.bed_temperature);
        let lattice = Lattice::spanning(&bounds, 5.0, 1.0);
        Self {
            case,
            trace,
            bounds,
            lattice,
            model,
            search: None,
        }
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn with_lattice(mut self, lattice: Lattice) -> Self {
        self.lattice = lattice;
        self
    }

    /// Sweep and refine on `search` (typically a coarsened grid), then polish
    /// on the problem's own model.
    pub fn with_search_model(mut self, search: Arc<ResponseModel>) -> Self {
        self.search = Some(search);
        self
    }

    /// Same specimen and settings, different measured trace.
    pub fn with_trace(&self, trace: ExperimentTrace) -> Self {
        Self {
            case: self.case,
            trace,
            bounds: self.bounds,
            lattice: self.lattice.clone(),
            model: Arc::clone(&self.model),
            search: self.search.clone(),
        }
    }

    pub fn model(&self) -> &Arc<ResponseModel> {
        &self.model
    }

    pub fn validate(&self) -> Result<(), CalibrationError> {
        self.bounds.validate()?;
        self.trace.validate()?;
        let inside = |v: &[f64], (lo, hi): (f64, f64), name: &str| {
            match v.iter().find(|x| !(lo..=hi).contains(*x)) {
                Some(x) => Err(CalibrationError::InvalidBounds(format!(
                    "lattice {name} value {x} outside [{lo}, {hi}]"
                ))),
                None if v.is_empty() => Err(CalibrationError::InvalidBounds(format!("lattice {name} is empty"))),
                None => Ok(()),
            }
        };
        inside(&self.lattice.h, self.bounds.h, "h")?;
        match self.case {
            CalibrationCase::Case1 => {}
            CalibrationCase::Case2 => inside(&self.lattice.side, self.bounds.tied()?, "T_c")?,
            CalibrationCase::Case3 => {
                inside(&self.lattice.side, self.bounds.side, "T_c_side")?;
                inside(&self.lattice.top, self.bounds.top, "T_c_top")?;
            }
        }
        Ok(())
    }

    fn temperatures(&self, model: &ResponseModel, side: f64, top: f64) -> Temperatures {
        let sc = model.scenario();
        Temperatures {
            bed: sc.bed_temperature,
            initial: sc.initial_temperature,
            side,
            top,
        }
    }

    /// Ambient pairs of the lattice for this case.
    fn lattice_ambients(&self) -> Vec<(f64, f64)> {
        let ta = self.model.scenario().initial_temperature;
        match self.case {
            CalibrationCase::Case1 => vec![(ta, ta)],
            CalibrationCase::Case2 => self.lattice.side.iter().map(|&c| (c, c)).collect(),
            CalibrationCase::Case3 => self
                .lattice
                .side
                .iter()
                .flat_map(|&s| self.lattice.top.iter().map(move |&t| (s, t)))
                .collect(),
        }
    }
}

/// Mean trace of a candidate against the measured one, sample by sample.
struct Objective {
    basis: MeanBasis,
    idx: Vec<usize>,
    measured: Vec<f64>,
}

impl Objective {
    fn new(model: &ResponseModel, h: f64, trace: &ExperimentTrace) -> Result<Self, CalibrationError> {
        let r = model
            .responses(h)
            .map_err(|source| CalibrationError::Simulation { h, source })?;
        let (idx, measured) = aligned(&r.times, trace)?;
        Ok(Self {
            basis: r.mean_basis(),
            idx,
            measured,
        })
    }

    fn rmse(&self, t: &Temperatures) -> f64 {
        let sum: f64 = self
            .idx
            .iter()
            .zip(&self.measured)
            .map(|(&i, m)| (self.basis.at(i, t) - m).powi(2))
            .sum();
        (sum / self.idx.len() as f64).sqrt()
    }

    /// Best ambients at this `h` within the case's bounds (bounded linear
    /// least squares; the trace is linear in the ambient temperatures).
    fn best_ambients(&self, case: CalibrationCase, bounds: &Bounds, base: Temperatures) -> Result<(f64, f64), CalibrationError> {
        let ta = base.initial;
        // residual after the fixed contributions, and the two free columns
        let fixed = Temperatures {
            side: ta,
            top: ta,
            ..base
        };
        let y: Vec<f64> = self
            .idx
            .iter()
            .zip(&self.measured)
            .map(|(&i, m)| m - self.basis.at(i, &fixed))
            .collect();
        let us: Vec<f64> = self.idx.iter().map(|&i| self.basis.side[i]).collect();
        let ut: Vec<f64> = self.idx.iter().map(|&i| self.basis.top[i]).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let solve1 = |u: &[f64], r: &[f64], (lo, hi): (f64, f64)| {
            let uu = dot(u, u);
            let x = if uu > 0.0 { dot(u, r) / uu } else { lo - ta };
            (x + ta).clamp(lo, hi)
        };
        match case {
            CalibrationCase::Case1 => Ok((ta, ta)),
            CalibrationCase::Case2 => {
                let u: Vec<f64> = us.iter().zip(&ut).map(|(a, b)| a + b).collect();
                let c = solve1(&u, &y, bounds.tied()?);
                Ok((c, c))
            }
            CalibrationCase::Case3 => {
                let (ss, tt, st) = (dot(&us, &us), dot(&ut, &ut), dot(&us, &ut));
                let (sy, ty) = (dot(&us, &y), dot(&ut, &y));
                let det = ss * tt - st * st;
                if det > 1e-12 * ss * tt {
                    let s = (tt * sy - st * ty) / det + ta;
                    let t = (ss * ty - st * sy) / det + ta;
                    if (bounds.side.0..=bounds.side.1).contains(&s) && (bounds.top.0..=bounds.top.1).contains(&t) {
                        return Ok((s, t));
                    }
                }
                // optimum on the boundary: fix one ambient at a bound, solve the other
                let mut candidates = Vec::with_capacity(4);
                for s in [bounds.side.0, bounds.side.1] {
                    let r: Vec<f64> = y.iter().zip(&us).map(|(yi, u)| yi - (s - ta) * u).collect();
                    candidates.push((s, solve1(&ut, &r, bounds.top)));
                }
                for t in [bounds.top.0, bounds.top.1] {
                    let r: Vec<f64> = y.iter().zip(&ut).map(|(yi, u)| yi - (t - ta) * u).collect();
                    candidates.push((solve1(&us, &r, bounds.side), t));
                }
                Ok(candidates
                    .into_iter()
                    .map(|(s, t)| ((s, t), self.rmse(&Temperatures { side: s, top: t, ..base })))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(p, _)| p)
                    .expect("four candidates"))
            }
        }
    }
}

/// Cost of every lattice point of the case's free parameters.
pub fn sweep(problem: &CalibrationProblem) -> Result<Vec<CostEntry>, CalibrationError> {
    problem.validate()?;
    let model = problem.search.as_deref().unwrap_or(&problem.model);
    let rows: Vec<Vec<CostEntry>> = problem
        .lattice
        .h
        .par_iter()
        .map(|&h| sweep_h(problem, model, h))
        .collect::<Result<_, _>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn sweep_h(problem: &CalibrationProblem, model: &ResponseModel, h: f64) -> Result<Vec<CostEntry>, CalibrationError> {
    let obj = Objective::new(model, h, &problem.trace)?;
    Ok(problem
        .lattice_ambients()
        .into_iter()
        .map(|(s, t)| CostEntry {
            h,
            side_ambient: s,
            top_ambient: t,
            rmse: obj.rmse(&problem.temperatures(model, s, t)),
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub case: CalibrationCase,
    /// W/(m²·K)
    pub h: f64,
    /// °C
    pub side_ambient: f64,
    /// °C
    pub top_ambient: f64,
    /// °C
    pub rmse: f64,
    /// Lattice sweep, in lattice order.
    pub table: Vec<CostEntry>,
    /// Distinct `h` values simulated during refinement.
    pub refinement_evaluations: usize,
    /// Simulated probes at the fitted parameters.
    pub series: ProbeSeries,
}

/// Lattice sweep, then a Nelder–Mead search over `h` from the best lattice
/// point with the ambients re-optimized at every trial `h`.
pub fn fit(problem: &CalibrationProblem) -> Result<FitResult, CalibrationError> {
    problem.validate()?;
    let search = problem.search.as_deref().unwrap_or(&problem.model);

    let mut failures = Vec::new();
    let mut table = Vec::new();
    let rows: Vec<_> = problem
        .lattice
        .h
        .par_iter()
        .map(|&h| sweep_h(problem, search, h))
        .collect();
    for row in rows {
        match row {
            Ok(r) => table.extend(r),
            Err(e @ CalibrationError::EmptyOverlap { .. }) => return Err(e),
            Err(e) => failures.push(e.to_string()),
        }
    }
    let best = *table
        .iter()
        .min_by(|a, b| a.rmse.total_cmp(&b.rmse))
        .ok_or(CalibrationError::AllFailed(failures))?;

    let h_step = problem
        .lattice
        .h
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(f64::INFINITY, f64::min);
    let h_step = if h_step.is_finite() && h_step > 0.0 {
        h_step / 2.0
    } else {
        ((problem.bounds.h.1 - problem.bounds.h.0) / 10.0).max(0.5)
    };
    let (mut h, mut side, mut top, mut rmse, mut evals) =
        refine(problem, search, best.h, h_step, (best.side_ambient, best.top_ambient, best.rmse))?;
    if problem.search.is_some() {
        // polish on the full model around the coarse optimum
        let obj = Objective::new(&problem.model, h, &problem.trace)?;
        let t = problem.temperatures(&problem.model, side, top);
        let (s, tp) = obj.best_ambients(problem.case, &problem.bounds, t)?;
        let start = obj.rmse(&problem.temperatures(&problem.model, s, tp));
        let polished = refine(problem, &problem.model, h, 1.0, (s, tp, start))?;
        (h, side, top, rmse) = (polished.0, polished.1, polished.2, polished.3);
        evals += polished.4;
    }
    let series = problem
        .model
        .responses(h)
        .map_err(|source| CalibrationError::Simulation { h, source })?
        .series(&problem.temperatures(&problem.model, side, top));
    Ok(FitResult {
        case: problem.case,
        h,
        side_ambient: side,
        top_ambient: top,
        rmse,
        table,
        refinement_evaluations: evals,
        series,
    })
}

/// Nelder–Mead over `h` on `model`; keeps `start` unless it finds better.
fn refine(
    problem: &CalibrationProblem,
    model: &ResponseModel,
    h0: f64,
    step: f64,
    start: (f64, f64, f64),
) -> Result<(f64, f64, f64, f64, usize), CalibrationError> {
    // surfaces a missing overlap or a failing start point as an error
    Objective::new(model, h0, &problem.trace)?;
    let mut evals = 0usize;
    let mut profile = |x: &[f64]| -> Option<(f64, f64, f64)> {
        evals += 1;
        let obj = Objective::new(model, x[0], &problem.trace).ok()?;
        let base = problem.temperatures(model, 0.0, 0.0);
        let (s, t) = obj.best_ambients(problem.case, &problem.bounds, base).ok()?;
        Some((s, t, obj.rmse(&problem.temperatures(model, s, t))))
    };
    let opts = NelderMeadOptions {
        step: vec![step],
        lower: vec![problem.bounds.h.0],
        upper: vec![problem.bounds.h.1],
        spread_tolerance: 0.1,
        max_evaluations: 60,
    };
    let min = minimize(|x| profile(x).map(|p| p.2), &[h0], &opts);
    let (mut h, (mut s, mut t, mut r)) = (h0, start);
    if min.value < r {
        if let Some(p) = profile(&min.x) {
            if p.2 < r {
                (h, s, t, r) = (min.x[0], p.0, p.1, p.2);
            }
        }
    }
    Ok((h, s, t, r, evals))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationEntry {
    pub id: String,
    /// °C
    pub rmse: f64,
    /// Mean over the final minute of overlap, °C.
    pub simulated_steady: f64,
    pub measured_steady: f64,
    /// `|simulated − measured|` in °C.
    pub steady_discrepancy: f64,
    /// Discrepancy as a percentage of the measured rise above room temperature.
    pub steady_discrepancy_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub entries: Vec<ValidationEntry>,
}

/// Simulate each problem's specimen with the fitted parameters.
pub fn validate(fit: &FitResult, problems: &[CalibrationProblem]) -> Result<ValidationReport, CalibrationError> {
    let entries = problems
        .par_iter()
        .map(|p| {
            let obj = Objective::new(&p.model, fit.h, &p.trace)?;
            let t = p.temperatures(&p.model, fit.side_ambient, fit.top_ambient);
            let rmse = obj.rmse(&t);
            let n = obj.idx.len();
            let tail = n.saturating_sub(60)..n;
            let k = tail.len() as f64;
            let sim: f64 = obj.idx[tail.clone()].iter().map(|&i| obj.basis.at(i, &t)).sum::<f64>() / k;
            let meas: f64 = obj.measured[tail].iter().sum::<f64>() / k;
            let rise = (meas - t.initial).abs();
            let d = (sim - meas).abs();
            Ok(ValidationEntry {
                id: p.trace.id.clone(),
                rmse,
                simulated_steady: sim,
                measured_steady: meas,
                steady_discrepancy: d,
                steady_discrepancy_pct: if rise > 0.0 { 100.0 * d / rise } else { f64::INFINITY },
            })
        })
        .collect::<Result<_, CalibrationError>>()?;
    Ok(ValidationReport { entries })
}
