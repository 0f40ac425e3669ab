use std::path::PathBuf;

use fff_thermal::calibration::CostEntry;
use fff_thermal::io::{
    build_grid, emit_config, ingest_experiment, parse_config, parse_config_str, read_cost_table, read_grid,
    write_cost_table, write_grid, write_probe_csv, RunConfig,
};
use fff_thermal::mesostructure::{InfillPattern, InfillSpec};
use fff_thermal::thermal::ProbeSeries;
use proptest::prelude::*;

fn sample(name: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs")).join(name)
}

#[test]
fn sample_configs_parse_and_build() {
    let s1 = parse_config(&sample("s1.toml")).unwrap();
    assert_eq!(s1.scenario.duration, 2400.0);
    assert_eq!(build_grid(&s1.geometry).unwrap().cell_count(), 422_500);
    for i in 1..=7 {
        let mut c = parse_config(&sample(&format!("s{i}.toml"))).unwrap();
        assert_eq!(c.label(), format!("S{i}"));
        c.geometry.coarsen = 5;
        let g = build_grid(&c.geometry).unwrap();
        let expected = if i <= 5 { 3380 } else { 338 };
        assert_eq!(g.cell_count(), expected, "s{i}");
        assert_eq!(parse_config_str(&emit_config(&c).unwrap()).unwrap(), c);
    }
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        1.0f64..40.0,
        1.0f64..40.0,
        0.2f64..20.0,
        prop::option::of((any::<bool>(), prop::sample::select(vec![0.25, 0.5, 0.75]))),
        20.0f64..30.0,
        0.0f64..80.0,
        0.1f64..5.0,
        1usize..6,
    )
        .prop_map(|(l, w, h, infill, init, hc, dt, f)| {
            let mut c = RunConfig::block(l, w, h);
            c.geometry.infill = infill.map(|(gyroid, d)| {
                let pattern = if gyroid { InfillPattern::Gyroid } else { InfillPattern::Rectilinear };
                InfillSpec::new(pattern, d).unwrap()
            });
            c.geometry.coarsen = f;
            c.scenario.initial_temperature = init;
            c.scenario.h = hc;
            c.scenario.dt = dt;
            c
        })
}

proptest! {
    #[test]
    fn config_round_trip(c in arb_config()) {
        let text = emit_config(&c).unwrap();
        prop_assert_eq!(parse_config_str(&text).unwrap(), c);
    }

    #[test]
    fn probe_csv_round_trip(rows in prop::collection::vec(prop::collection::vec(-50.0f64..150.0, 5), 1..40)) {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ProbeSeries::new(vec![[0.0, 0.0]; 5]);
        for (i, r) in rows.iter().enumerate() {
            s.push(i as f64 * 0.5, r.clone());
        }
        let path = dir.path().join("p.csv");
        write_probe_csv(&path, &s).unwrap();
        let t = ingest_experiment(&path).unwrap();
        prop_assert_eq!(&t.times, &s.times);
        prop_assert_eq!(&t.probes, &s.temperatures);
        for (a, b) in t.mean.iter().zip(&s.mean) {
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn cost_table_round_trip(entries in prop::collection::vec((0.0f64..100.0, 0.0f64..80.0, 0.0f64..80.0, 0.0f64..10.0), 0..30)) {
        let dir = tempfile::tempdir().unwrap();
        let table: Vec<CostEntry> = entries
            .iter()
            .map(|&(h, s, t, r)| CostEntry { h, side_ambient: s, top_ambient: t, rmse: r })
            .collect();
        let path = dir.path().join("c.csv");
        write_cost_table(&path, &table).unwrap();
        prop_assert_eq!(read_cost_table(&path).unwrap(), table);
    }
}

#[test]
fn experiment_at_one_hertz() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.csv");
    let mut text = String::from("time_s,T1,T2,T3\n");
    for t in 0..2400 {
        let v = 25.0 + 31.0 * (1.0 - (-(t as f64) / 400.0).exp());
        text.push_str(&format!("{t},{v},{},{}\n", v + 0.1, v - 0.1));
    }
    std::fs::write(&path, text).unwrap();
    let trace = ingest_experiment(&path).unwrap();
    assert_eq!(trace.len(), 2400);
    assert_eq!(trace.duration(), 2399.0);
    assert_eq!(trace.probes[0].len(), 3);
    assert!((trace.mean[0] - 25.0).abs() < 1e-12);
}

#[test]
fn malformed_experiment_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "time_s,mean_C\n0,25\n1,abc\n").unwrap();
    let e = ingest_experiment(&path).unwrap_err().to_string();
    assert!(e.contains("line 3"), "{e}");
    assert!(e.contains("bad.csv"), "{e}");
}

#[test]
fn grid_file_round_trip_for_sample() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = parse_config(&sample("s3.toml")).unwrap();
    c.geometry.coarsen = 2;
    let g = build_grid(&c.geometry).unwrap();
    let path = dir.path().join("s3.grid");
    write_grid(&path, &g).unwrap();
    assert_eq!(read_grid(&path).unwrap(), g);
}
