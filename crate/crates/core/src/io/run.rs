use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::config::RunConfig;
use super::csvio::{ingest_experiment, write_cost_table, write_probe_csv};
use super::geometry::build_grid;
use super::vtk::{write_field_vtk, write_grid_vtk};
use super::IoError;
use crate::calibration::{fit, CalibrationCase, CalibrationProblem, ExperimentTrace, FitResult, Lattice, ResponseModel};
use crate::thermal::{run_transient_with, TransientOptions};

#[derive(Debug, Clone)]
pub struct SimulationSummary {
    pub elements: usize,
    pub nodes: usize,
    pub wall_clock: Duration,
    /// Probe mean at the final sample, °C.
    pub final_mean: f64,
    pub final_min: f64,
    pub final_max: f64,
    pub files: Vec<PathBuf>,
}

fn create_dir(dir: &Path) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|e| IoError::file(dir, e))
}

/// Run the transient of `config` and write `probes.csv`, `grid.vtk`,
/// `final.vtk` and, if enabled, `snapshot_<t>s.vtk` into `out_dir`.
pub fn run_simulation(config: &RunConfig, out_dir: &Path) -> Result<SimulationSummary, IoError> {
    config.validate()?;
    create_dir(out_dir)?;
    let grid = build_grid(&config.geometry)?;
    let mut files = Vec::new();
    let grid_path = out_dir.join("grid.vtk");
    write_grid_vtk(&grid_path, &grid)?;
    files.push(grid_path);

    let options = TransientOptions {
        snapshot_every: config.output.snapshot_every_s,
        integration: config.solver.integration,
        ..Default::default()
    };
    let mut snapshot_error = None;
    let start = Instant::now();
    let result = run_transient_with(&grid, &config.materials, &config.scenario, &options, |field| {
        if options.snapshot_every.is_none() || snapshot_error.is_some() {
            return;
        }
        let path = out_dir.join(format!("snapshot_{}s.vtk", field.time().round() as u64));
        match write_field_vtk(&path, field) {
            Ok(()) => files.push(path),
            Err(e) => snapshot_error = Some(e),
        }
    })?;
    let wall_clock = start.elapsed();
    if let Some(e) = snapshot_error {
        return Err(e);
    }

    let probes_path = out_dir.join("probes.csv");
    write_probe_csv(&probes_path, &result.probes)?;
    files.push(probes_path);
    let final_path = out_dir.join("final.vtk");
    write_field_vtk(&final_path, &result.final_field)?;
    files.push(final_path);

    Ok(SimulationSummary {
        elements: grid.cell_count(),
        nodes: grid.node_count(),
        wall_clock,
        final_mean: *result.probes.mean.last().expect("t = 0 is always sampled"),
        final_min: result.final_field.min(),
        final_max: result.final_field.max(),
        files,
    })
}

#[derive(Debug, Clone)]
pub struct CalibrationRun {
    pub fit: FitResult,
    pub trace: ExperimentTrace,
    pub wall_clock: Duration,
}

/// Build the calibration problem of `config` (relative paths resolved against
/// `base`). `case` and `h_values` override the config.
pub fn calibration_problem(
    config: &RunConfig,
    base: &Path,
    case: Option<CalibrationCase>,
    h_values: Option<Vec<f64>>,
) -> Result<CalibrationProblem, IoError> {
    config.validate()?;
    let cal = config.calibration.clone().unwrap_or_default();
    let case = match case {
        Some(c) => c,
        None => cal.case()?,
    };
    let experiment = cal.experiment.as_deref().ok_or_else(|| IoError::Invalid {
        field: "calibration.experiment".into(),
        constraint: "must name the measured trace".into(),
    })?;
    let trace = ingest_experiment(&RunConfig::resolve(base, experiment))?;

    let grid = build_grid(&config.geometry)?;
    let model = ResponseModel::new(grid, config.materials, config.scenario).with_integration(config.solver.integration);
    let bounds = cal.bounds(&config.scenario);
    let mut lattice = Lattice::spanning(&bounds, cal.h_step, cal.temperature_step);
    if let Some(h) = h_values {
        lattice.h = h;
    }
    let mut problem = CalibrationProblem::new(case, trace, Arc::new(model))
        .with_bounds(bounds)
        .with_lattice(lattice);
    if let Some(f) = cal.search_coarsen {
        let mut geometry = config.geometry.clone();
        geometry.coarsen = config.geometry.coarsen * f;
        let coarse = build_grid(&geometry)?;
        let search =
            ResponseModel::new(coarse, config.materials, config.scenario).with_integration(config.solver.integration);
        problem = problem.with_search_model(Arc::new(search));
    }
    Ok(problem)
}

/// Fit the convective parameters of `config` against its experiment file.
pub fn calibrate(config: &RunConfig, base: &Path, case: Option<CalibrationCase>) -> Result<CalibrationRun, IoError> {
    let problem = calibration_problem(config, base, case, None)?;
    let start = Instant::now();
    let fit = fit(&problem)?;
    Ok(CalibrationRun {
        fit,
        trace: problem.trace,
        wall_clock: start.elapsed(),
    })
}

/// `costs.csv`, `fitted_probes.csv` and `summary.txt` into `out_dir`.
pub fn write_fit_report(run: &CalibrationRun, out_dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    create_dir(out_dir)?;
    let costs = out_dir.join("costs.csv");
    write_cost_table(&costs, &run.fit.table)?;
    let probes = out_dir.join("fitted_probes.csv");
    write_probe_csv(&probes, &run.fit.series)?;
    let summary = out_dir.join("summary.txt");
    let f = &run.fit;
    let text = format!(
        "experiment: {}\ncase: {}\nh_W_m2K: {}\nT_c_side_C: {}\nT_c_top_C: {}\nrmse_C: {}\nlattice_points: {}\nrefinement_simulations: {}\nwall_clock_s: {:.3}\n",
        run.trace.id,
        f.case.number(),
        f.h,
        f.side_ambient,
        f.top_ambient,
        f.rmse,
        f.table.len(),
        f.refinement_evaluations,
        run.wall_clock.as_secs_f64()
    );
    fs::write(&summary, text).map_err(|e| IoError::file(&summary, e))?;
    Ok(vec![costs, probes, summary])
}
