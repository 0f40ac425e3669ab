use std::sync::Arc;

use fff_thermal::calibration::{
    cost, fit, sweep, validate, Bounds, CalibrationCase, CalibrationProblem, ExperimentTrace, Lattice, ResponseModel,
};
use fff_thermal::mesostructure::{build_continuum_grid, coarsen, FilamentSection};
use fff_thermal::thermal::{run_transient, Materials, ProbeSeries, ThermalScenario};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn scenario(duration: f64) -> ThermalScenario {
    ThermalScenario {
        duration,
        ..ThermalScenario::default()
    }
}

fn model(duration: f64) -> Arc<ResponseModel> {
    let grid = build_continuum_grid(2.7, 2.7, 2.0, &FilamentSection::default()).unwrap();
    Arc::new(ResponseModel::new(grid, Materials::default(), scenario(duration)))
}

fn truth(m: &ResponseModel, h: f64, side: f64, top: f64) -> ProbeSeries {
    let sc = ThermalScenario {
        h,
        side_ambient: side,
        top_ambient: top,
        ..*m.scenario()
    };
    run_transient(m.grid(), m.materials(), &sc).unwrap().probes
}

fn noisy(series: &ProbeSeries, sigma: f64, seed: u64) -> ExperimentTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mean = series.mean.iter().map(|m| m + noise.sample(&mut rng)).collect();
    ExperimentTrace::new(format!("seed{seed}"), series.times.clone(), mean).unwrap()
}

#[test]
fn noise_sets_the_floor_of_the_cost() {
    let m = model(2400.0);
    let s = truth(&m, 25.0, 56.0, 27.0);
    for seed in 0..3 {
        let trace = noisy(&s, 0.5, seed);
        let r = cost(&s, &trace).unwrap();
        assert!((0.4..=0.6).contains(&r), "seed {seed}: {r}");
    }
}

#[test]
fn case_nesting_is_exact() {
    let m = model(300.0);
    let trace = ExperimentTrace::from_series("t", &truth(&m, 20.0, 40.0, 30.0)).unwrap();
    let hs = vec![10.0, 20.0, 30.0];
    let problem = |case, side: f64, top: f64| {
        CalibrationProblem::new(case, trace.clone(), Arc::clone(&m))
            .with_bounds(Bounds {
                h: (5.0, 60.0),
                side: (side, side),
                top: (top, top),
            })
            .with_lattice(Lattice {
                h: hs.clone(),
                side: vec![side],
                top: vec![top],
            })
    };
    let case1 = sweep(&problem(CalibrationCase::Case1, 25.0, 25.0)).unwrap();
    let case2 = sweep(&problem(CalibrationCase::Case2, 25.0, 25.0)).unwrap();
    assert_eq!(case1, case2);

    let case2 = sweep(&problem(CalibrationCase::Case2, 35.0, 35.0)).unwrap();
    let case3 = sweep(&problem(CalibrationCase::Case3, 35.0, 35.0)).unwrap();
    assert_eq!(case2, case3);

    // and the refined fits agree too
    let f1 = fit(&problem(CalibrationCase::Case1, 25.0, 25.0)).unwrap();
    let f2 = fit(&problem(CalibrationCase::Case2, 25.0, 25.0)).unwrap();
    assert_eq!((f1.h, f1.rmse), (f2.h, f2.rmse));
}

#[test]
fn cost_ignores_sample_order_and_duplicate_columns() {
    let m = model(60.0);
    let sim = truth(&m, 20.0, 40.0, 30.0);
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for (i, (&t, row)) in sim.times.iter().zip(&sim.temperatures).enumerate() {
        times.push(t);
        rows.push(row.iter().map(|v| v + 0.3 * (i % 3) as f64).collect::<Vec<_>>());
        // a second reading at the same instant
        times.push(t);
        rows.push(row.iter().map(|v| v - 0.2).collect());
    }
    let a = ExperimentTrace::from_probes("a", times.clone(), rows.clone()).unwrap();

    let mut swapped = rows.clone();
    for pair in swapped.chunks_mut(2) {
        pair.swap(0, 1);
    }
    let b = ExperimentTrace::from_probes("b", times.clone(), swapped).unwrap();
    let doubled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().chain(r).copied().collect()).collect();
    let c = ExperimentTrace::from_probes("c", times, doubled).unwrap();

    let ca = cost(&sim, &a).unwrap();
    assert!(ca > 0.0);
    assert!((cost(&sim, &b).unwrap() - ca).abs() < 1e-12);
    assert!((cost(&sim, &c).unwrap() - ca).abs() < 1e-12);
}

#[test]
fn fit_is_no_worse_than_lattice_and_validates_to_itself() {
    let m = model(600.0);
    let trace = noisy(&truth(&m, 23.0, 47.3, 28.6), 0.3, 7);
    for case in [CalibrationCase::Case1, CalibrationCase::Case2, CalibrationCase::Case3] {
        let p = CalibrationProblem::new(case, trace.clone(), Arc::clone(&m));
        let f = fit(&p).unwrap();
        let best = f.table.iter().map(|e| e.rmse).fold(f64::INFINITY, f64::min);
        assert!(f.rmse <= best, "{case:?}: {} > {best}", f.rmse);
        assert!((p.bounds.h.0..=p.bounds.h.1).contains(&f.h));
        assert!((p.bounds.side.0..=p.bounds.side.1).contains(&f.side_ambient));
        assert!((p.bounds.top.0..=p.bounds.top.1).contains(&f.top_ambient));

        let report = validate(&f, &[p.with_trace(trace.clone())]).unwrap();
        assert!((report.entries[0].rmse - f.rmse).abs() < 1e-12);
        assert!((cost(&f.series, &trace).unwrap() - f.rmse).abs() < 1e-9);
    }
}

#[test]
fn single_point_lattice_matches_direct_simulation() {
    let m = model(300.0);
    let trace = ExperimentTrace::from_series("t", &truth(&m, 15.0, 50.0, 26.0)).unwrap();
    let p = CalibrationProblem::new(CalibrationCase::Case3, trace.clone(), Arc::clone(&m)).with_lattice(Lattice {
        h: vec![30.0],
        side: vec![40.0],
        top: vec![35.0],
    });
    let table = sweep(&p).unwrap();
    assert_eq!(table.len(), 1);
    let direct = cost(&truth(&m, 30.0, 40.0, 35.0), &trace).unwrap();
    assert!((table[0].rmse - direct).abs() < 1e-6, "{} vs {direct}", table[0].rmse);
}

/// The 30 x 30 x 20 mm block at coarsening factor 5. Small blocks do not
/// separate the side ambient from the bed.
#[test]
fn synthetic_round_trip_recovers_h() {
    let grid = coarsen(&build_continuum_grid(30.0, 30.0, 20.0, &FilamentSection::default()).unwrap(), 5).unwrap();
    let m = Arc::new(ResponseModel::new(grid, Materials::default(), scenario(2400.0)));
    let s = truth(&m, 25.0, 56.0, 27.0);
    for seed in 0..5 {
        let trace = noisy(&s, 0.5, seed);
        let f = fit(&CalibrationProblem::new(CalibrationCase::Case3, trace, Arc::clone(&m))).unwrap();
        assert!(
            (f.h - 25.0).abs() <= 1.0,
            "seed {seed}: h = {}, side = {}, top = {}",
            f.h,
            f.side_ambient,
            f.top_ambient
        );
    }
}
