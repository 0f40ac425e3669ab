use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::RunConfig;
use super::geometry::build_grid;
use super::IoError;
use crate::mesostructure::VoxelGrid;
use crate::thermal::{
    default_probes, run_transient_with, steady_state_with, Integration, Materials, ProbeSeries, ThermalScenario,
    TransientOptions,
};

/// Flag pairs whose steady deviation exceeds this share of the rise.
pub const DEFAULT_THRESHOLD_PCT: f64 = 2.0;

/// One mesh of the same specimen.
#[derive(Debug, Clone)]
pub struct Variant {
    pub label: String,
    pub grid: VoxelGrid,
    pub materials: Materials,
    pub scenario: ThermalScenario,
    pub integration: Integration,
}

impl Variant {
    pub fn from_config(config: &RunConfig) -> Result<Self, IoError> {
        Ok(Self {
            label: config.label().to_string(),
            grid: build_grid(&config.geometry)?,
            materials: config.materials,
            scenario: config.scenario,
            integration: config.solver.integration,
        })
    }
}

#[derive(Debug, Clone)]
pub struct VariantResult {
    pub label: String,
    pub elements: usize,
    /// Steady mean of the top-face probes, °C.
    pub steady_mean: f64,
    /// Wall-clock of the steady solve (assembly included).
    pub steady_wall_clock: Duration,
    pub trace: Option<ProbeSeries>,
    pub transient_wall_clock: Option<Duration>,
}

#[derive(Debug, Clone)]
pub struct PairDeviation {
    pub a: String,
    pub b: String,
    /// |steady mean a − steady mean b|, °C.
    pub steady_c: f64,
    /// `steady_c` over the larger of the two rises above the initial temperature.
    pub steady_pct: f64,
    /// Largest deviation of the mean traces over their common samples.
    pub max_c: Option<f64>,
    pub max_pct: Option<f64>,
    pub exceeds_threshold: bool,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub initial_temperature: f64,
    pub threshold_pct: f64,
    pub variants: Vec<VariantResult>,
    pub pairs: Vec<PairDeviation>,
}

fn probe_mean(field: &crate::thermal::TemperatureField, positions: &[[f64; 2]]) -> f64 {
    positions.iter().map(|p| field.top_value(p[0], p[1])).sum::<f64>() / positions.len() as f64
}

fn run_variant(v: &Variant, with_traces: bool) -> Result<VariantResult, IoError> {
    let positions = default_probes(&v.grid);
    let start = Instant::now();
    let steady = steady_state_with(&v.grid, &v.materials, &v.scenario, v.integration)?;
    let steady_wall_clock = start.elapsed();
    let steady_mean = probe_mean(&steady, &positions);
    let (trace, transient_wall_clock) = if with_traces {
        let options = TransientOptions {
            integration: v.integration,
            ..Default::default()
        };
        let start = Instant::now();
        let r = run_transient_with(&v.grid, &v.materials, &v.scenario, &options, |_| {})?;
        (Some(r.probes), Some(start.elapsed()))
    } else {
        (None, None)
    };
    Ok(VariantResult {
        label: v.label.clone(),
        elements: v.grid.cell_count(),
        steady_mean,
        steady_wall_clock,
        trace,
        transient_wall_clock,
    })
}

/// Deviations between every pair of results.
pub fn pairwise(results: &[VariantResult], initial: f64, threshold_pct: f64) -> Vec<PairDeviation> {
    let mut pairs = Vec::new();
    for (i, a) in results.iter().enumerate() {
        for b in &results[i + 1..] {
            let rise = (a.steady_mean - initial).abs().max((b.steady_mean - initial).abs());
            let pct = |d: f64| if rise > 0.0 { 100.0 * d / rise } else { 0.0 };
            let steady_c = (a.steady_mean - b.steady_mean).abs();
            let max_c = match (&a.trace, &b.trace) {
                (Some(ta), Some(tb)) => Some(
                    ta.mean
                        .iter()
                        .zip(&tb.mean)
                        .map(|(x, y)| (x - y).abs())
                        .fold(0.0, f64::max),
                ),
                _ => None,
            };
            pairs.push(PairDeviation {
                a: a.label.clone(),
                b: b.label.clone(),
                steady_c,
                steady_pct: pct(steady_c),
                max_c,
                max_pct: max_c.map(pct),
                exceeds_threshold: pct(steady_c) > threshold_pct,
            });
        }
    }
    pairs
}

/// Solve every variant (concurrently, on the current rayon pool) and tabulate
/// steady probe means, pairwise deviations, element counts and wall-clock.
/// With `with_traces` each variant also runs the full transient.
pub fn compare(variants: &[Variant], threshold_pct: f64, with_traces: bool) -> Result<ComparisonReport, IoError> {
    if variants.len() < 2 {
        return Err(IoError::Invalid {
            field: "compare".into(),
            constraint: format!("needs at least 2 variants, got {}", variants.len()),
        });
    }
    let reference = &variants[0];
    if let Some(v) = variants.iter().find(|v| v.scenario != reference.scenario) {
        return Err(IoError::Invalid {
            field: "scenario".into(),
            constraint: format!("of '{}' differs from that of '{}'", v.label, reference.label),
        });
    }
    let results = variants
        .par_iter()
        .map(|v| run_variant(v, with_traces))
        .collect::<Result<Vec<_>, _>>()?;
    let initial = reference.scenario.initial_temperature;
    Ok(ComparisonReport {
        initial_temperature: initial,
        threshold_pct,
        pairs: pairwise(&results, initial, threshold_pct),
        variants: results,
    })
}

impl ComparisonReport {
    pub fn any_exceeds(&self) -> bool {
        self.pairs.iter().any(|p| p.exceeds_threshold)
    }

    /// Plain-text table.
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str("variant,elements,steady_mean_C,steady_wall_s,transient_wall_s\n");
        for v in &self.variants {
            s.push_str(&format!(
                "{},{},{},{:.3},{}\n",
                v.label,
                v.elements,
                v.steady_mean,
                v.steady_wall_clock.as_secs_f64(),
                v.transient_wall_clock
                    .map(|d| format!("{:.3}", d.as_secs_f64()))
                    .unwrap_or_default()
            ));
        }
        s.push('\n');
        s.push_str("a,b,steady_dev_C,steady_dev_pct,max_dev_C,max_dev_pct,exceeds\n");
        for p in &self.pairs {
            let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                p.a,
                p.b,
                p.steady_c,
                p.steady_pct,
                opt(p.max_c),
                opt(p.max_pct),
                p.exceeds_threshold
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn variant(label: &str) -> Variant {
        let mut c = RunConfig::block(2.7, 2.7, 1.0);
        c.name = Some(label.into());
        c.scenario.duration = 20.0;
        Variant::from_config(&c).unwrap()
    }

    #[test]
    fn identical_variants_do_not_deviate() {
        let r = compare(&[variant("a"), variant("b")], DEFAULT_THRESHOLD_PCT, true).unwrap();
        assert_eq!(r.pairs.len(), 1);
        assert_eq!(r.pairs[0].steady_c, 0.0);
        assert_eq!(r.pairs[0].max_c, Some(0.0));
        assert!(!r.any_exceeds());
        assert_eq!(r.variants[0].elements, 5 * 5 * 5);
    }

    #[test]
    fn mismatched_scenarios_rejected() {
        let a = variant("a");
        let mut b = variant("b");
        b.scenario.h = 10.0;
        assert!(matches!(compare(&[a, b], 2.0, false), Err(IoError::Invalid { .. })));
        assert!(compare(&[variant("a")], 2.0, false).is_err());
    }
}
