use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fff_thermal::calibration::{sweep, CalibrationCase};
use fff_thermal::io::{
    build_grid, calibrate, calibration_problem, compare, parse_config, run_simulation, write_cost_table,
    write_fit_report, write_grid, write_grid_vtk, RunConfig, Variant, DEFAULT_THRESHOLD_PCT,
};

/// Heat transfer in FFF-printed blocks: meshing, simulation, calibration.
#[derive(Parser)]
#[command(name = "fffheat", version)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Time step in seconds.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Mesh coarsening factor.
    #[arg(long, global = true)]
    coarsen: Option<usize>,
    /// Field snapshot interval in seconds.
    #[arg(long = "snapshot-every", global = true)]
    snapshot_every: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the grid; `.vtk` output is written as VTK, anything else as the binary dump.
    GenMesh {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the transient and write probes, snapshots and the final field.
    Simulate {
        config: PathBuf,
        /// Output directory; defaults to the config's `output.directory`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fit h and the ambient temperatures to the configured experiment.
    Calibrate {
        config: PathBuf,
        #[arg(long, value_parser = parse_case)]
        case: Option<CalibrationCase>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Solve several variants of one specimen and tabulate their deviations.
    Compare {
        #[arg(required = true, num_args = 2..)]
        configs: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Flag pairs deviating by more than this % of the rise.
        #[arg(long, default_value_t = DEFAULT_THRESHOLD_PCT)]
        threshold: f64,
        /// Also run each transient and report the largest trace deviation.
        #[arg(long)]
        traces: bool,
    },
    /// Cost table over a parameter range, e.g. `--param h=10:30:5`.
    Sweep {
        config: PathBuf,
        #[arg(long = "param", required = true, value_parser = parse_param)]
        params: Vec<Param>,
        #[arg(long, value_parser = parse_case)]
        case: Option<CalibrationCase>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Debug)]
struct Param {
    name: String,
    values: Vec<f64>,
}

fn parse_case(s: &str) -> std::result::Result<CalibrationCase, String> {
    s.parse::<u8>()
        .ok()
        .and_then(CalibrationCase::from_number)
        .ok_or_else(|| format!("case must be 1, 2 or 3, got '{s}'"))
}

/// `name=lo:hi:step` or `name=v`.
fn parse_param(s: &str) -> std::result::Result<Param, String> {
    let (name, range) = s.split_once('=').ok_or("expected name=lo:hi:step")?;
    if !matches!(name, "h" | "side" | "top") {
        return Err(format!("unknown parameter '{name}' (h, side or top)"));
    }
    let nums = range
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("'{p}' is not a number")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let values = match nums[..] {
        [v] => vec![v],
        [lo, hi, step] if step > 0.0 && lo <= hi => {
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| lo + i as f64 * step).collect()
        }
        _ => return Err(format!("expected lo:hi:step with step > 0 and lo <= hi, got '{range}'")),
    };
    Ok(Param {
        name: name.to_string(),
        values,
    })
}

fn load(path: &Path, o: &Overrides) -> Result<RunConfig> {
    let mut c = parse_config(path)?;
    if let Some(dt) = o.dt {
        c.scenario.dt = dt;
    }
    if let Some(f) = o.coarsen {
        c.geometry.coarsen = f;
    }
    if let Some(s) = o.snapshot_every {
        c.output.snapshot_every_s = Some(s);
    }
    c.validate()
        .with_context(|| format!("{} (after command-line overrides)", path.display()))?;
    Ok(c)
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.overrides.threads {
        if n == 0 {
            bail!("--threads must be >= 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let o = &cli.overrides;
    match cli.command {
        Command::GenMesh { config, output } => {
            let c = load(&config, o)?;
            let grid = build_grid(&c.geometry)?;
            if output.extension().is_some_and(|e| e == "vtk") {
                write_grid_vtk(&output, &grid)?;
            } else {
                write_grid(&output, &grid)?;
            }
            let [nx, ny, nz] = grid.dims();
            println!(
                "{}: {nx}x{ny}x{nz} = {} cells, PLA fraction {:.4}",
                output.display(),
                grid.cell_count(),
                grid.pla_fraction()
            );
        }
        Command::Simulate { config, output } => {
            let c = load(&config, o)?;
            let output = match (output, &c.output.directory) {
                (Some(out), _) => out,
                (None, Some(dir)) => RunConfig::resolve(base_dir(&config), dir),
                (None, None) => bail!("no output directory: pass -o or set output.directory"),
            };
            let s = run_simulation(&c, &output)?;
            println!(
                "{}: {} cells, {:.2} s, final probe mean {:.3} °C (field {:.3}..{:.3})",
                c.label(),
                s.elements,
                s.wall_clock.as_secs_f64(),
                s.final_mean,
                s.final_min,
                s.final_max
            );
            println!("wrote {} files to {}", s.files.len(), output.display());
        }
        Command::Calibrate { config, case, output } => {
            let c = load(&config, o)?;
            let r = calibrate(&c, base_dir(&config), case)?;
            write_fit_report(&r, &output)?;
            println!(
                "case {}: h = {:.3} W/m²K, T_c_side = {:.3} °C, T_c_top = {:.3} °C, rmse = {:.4} °C",
                r.fit.case.number(),
                r.fit.h,
                r.fit.side_ambient,
                r.fit.top_ambient,
                r.fit.rmse
            );
        }
        Command::Compare {
            configs,
            output,
            threshold,
            traces,
        } => {
            let variants = configs
                .iter()
                .map(|p| {
                    let c = load(p, o)?;
                    Variant::from_config(&c).with_context(|| p.display().to_string())
                })
                .collect::<Result<Vec<_>>>()?;
            let report = compare(&variants, threshold, traces)?;
            let text = report.render();
            std::fs::write(&output, &text).with_context(|| output.display().to_string())?;
            print!("{text}");
            if report.any_exceeds() {
                eprintln!("warning: some pairs deviate by more than {threshold}% of the rise");
            }
        }
        Command::Sweep {
            config,
            params,
            case,
            output,
        } => {
            let c = load(&config, o)?;
            let h = params.iter().rev().find(|p| p.name == "h").map(|p| p.values.clone());
            let mut problem = calibration_problem(&c, base_dir(&config), case, h)?;
            for p in &params {
                let (lo, hi) = p
                    .values
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                match p.name.as_str() {
                    "h" => problem.bounds.h = (problem.bounds.h.0.min(lo), problem.bounds.h.1.max(hi)),
                    "side" => {
                        problem.lattice.side = p.values.clone();
                        problem.bounds.side = (lo, hi);
                    }
                    _ => {
                        problem.lattice.top = p.values.clone();
                        problem.bounds.top = (lo, hi);
                    }
                }
            }
            let table = sweep(&problem)?;
            write_cost_table(&output, &table)?;
            if let Some(best) = table.iter().min_by(|a, b| a.rmse.total_cmp(&b.rmse)) {
                println!(
                    "{} points; best h = {}, T_c_side = {}, T_c_top = {}, rmse = {:.4} °C",
                    table.len(),
                    best.h,
                    best.side_ambient,
                    best.top_ambient,
                    best.rmse
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
