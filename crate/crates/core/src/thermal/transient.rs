use super::cg::{pcg, CgStats, ConstrainedOperator};
use super::scenario::ThermalScenario;
use super::element::Integration;
use super::system::{build_system_with, check_not_singular, Materials, ThermalSystem};
use super::SolverError;
use crate::mesostructure::VoxelGrid;

/// Relative residual at which a time step's linear solve stops.
pub const STEP_TOLERANCE: f64 = 1e-8;
/// Relative residual for steady-state solves.
pub const STEADY_TOLERANCE: f64 = 1e-10;

/// Nodal temperatures (°C) of a grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureField {
    node_dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    values: Vec<f64>,
    time: f64,
}

impl TemperatureField {
    pub fn uniform(grid: &VoxelGrid, value: f64) -> Self {
        Self {
            node_dims: grid.node_dims(),
            spacing: grid.spacing(),
            origin: grid.origin(),
            values: vec![value; grid.node_count()],
            time: 0.0,
        }
    }

    pub fn from_values(grid: &VoxelGrid, values: Vec<f64>, time: f64) -> Result<Self, SolverError> {
        if values.len() != grid.node_count() {
            return Err(SolverError::Shape(format!(
                "{} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::Shape("non-finite temperature".into()));
        }
        Ok(Self {
            node_dims: grid.node_dims(),
            spacing: grid.spacing(),
            origin: grid.origin(),
            values,
            time,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node_dims(&self) -> [usize; 3] {
        self.node_dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    /// Seconds since the start of heating.
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        let [nx, ny, _] = self.node_dims;
        self.values[i + nx * (j + ny * k)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Bilinear interpolation on the top face at `(x, y)` mm.
    pub fn top_value(&self, x: f64, y: f64) -> f64 {
        let [nx, ny, nz] = self.node_dims;
        let locate = |p: f64, origin: f64, h: f64, n: usize| {
            let s = ((p - origin) / h).clamp(0.0, (n - 1) as f64);
            let i = (s.floor() as usize).min(n.saturating_sub(2));
            (i, s - i as f64)
        };
        let (i, fx) = locate(x, self.origin[0], self.spacing[0], nx);
        let (j, fy) = locate(y, self.origin[1], self.spacing[1], ny);
        let k = nz - 1;
        let i1 = (i + 1).min(nx - 1);
        let j1 = (j + 1).min(ny - 1);
        (1.0 - fx) * (1.0 - fy) * self.at(i, j, k)
            + fx * (1.0 - fy) * self.at(i1, j, k)
            + fx * fy * self.at(i1, j1, k)
            + (1.0 - fx) * fy * self.at(i, j1, k)
    }

    /// Whether swapping x and y maps the field onto itself within `tol`.
    pub fn xy_symmetry_error(&self) -> f64 {
        let [nx, ny, nz] = self.node_dims;
        assert_eq!(nx, ny, "symmetry needs a square footprint");
        let mut err: f64 = 0.0;
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    err = err.max((self.at(i, j, k) - self.at(j, i, k)).abs());
                }
            }
        }
        err
    }
}

/// Top-face probe positions (mm): the centre and the four quarter points.
pub fn default_probes(grid: &VoxelGrid) -> Vec<[f64; 2]> {
    let [lx, ly, _] = grid.extent();
    let o = grid.origin();
    [(0.5, 0.5), (0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)]
        .iter()
        .map(|&(fx, fy)| [o[0] + fx * lx, o[1] + fy * ly])
        .collect()
}

/// Probe temperatures sampled on a regular clock.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSeries {
    pub positions: Vec<[f64; 2]>,
    pub times: Vec<f64>,
    /// `temperatures[t][p]`
    pub temperatures: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
}

impl ProbeSeries {
    pub fn new(positions: Vec<[f64; 2]>) -> Self {
        Self {
            positions,
            times: Vec::new(),
            temperatures: Vec::new(),
            mean: Vec::new(),
        }
    }

    pub fn push(&mut self, time: f64, values: Vec<f64>) {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        self.times.push(time);
        self.temperatures.push(values);
        self.mean.push(mean);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// First sample time at which the mean has covered `fraction` of its rise
    /// from `start` to `target`.
    pub fn time_to_fraction(&self, start: f64, target: f64, fraction: f64) -> Option<f64> {
        let level = start + fraction * (target - start);
        self.times
            .iter()
            .zip(&self.mean)
            .find(|(_, &m)| if target >= start { m >= level } else { m <= level })
            .map(|(&t, _)| t)
    }

    fn sample(field: &TemperatureField, positions: &[[f64; 2]]) -> Vec<f64> {
        positions.iter().map(|p| field.top_value(p[0], p[1])).collect()
    }
}

/// Backward-Euler stepper `(C/dt + S) ΔT = F − S Tₙ` with the system matrix
/// held fixed across steps.
pub struct TransientSolver<'a> {
    system: &'a ThermalSystem,
    op: ConstrainedOperator<'a>,
    dt: f64,
    guess: Vec<f64>,
    residual: Vec<f64>,
    tolerance: f64,
    max_iter: usize,
}

impl<'a> TransientSolver<'a> {
    pub fn new(system: &'a ThermalSystem, dt: f64) -> Result<Self, SolverError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SolverError::Shape(format!("time step must be > 0, got {dt}")));
        }
        let n = system.node_count();
        Ok(Self {
            system,
            op: ConstrainedOperator::new(system, 1.0 / dt),
            dt,
            guess: vec![0.0; n],
            residual: vec![0.0; n],
            tolerance: STEP_TOLERANCE,
            max_iter: 10 * n,
        })
    }

    /// Relative residual each step is solved to (default [`STEP_TOLERANCE`]).
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Set prescribed nodes of `field` to their values.
    pub fn impose_constraints(&self, field: &mut TemperatureField) {
        for (v, f) in field.values.iter_mut().zip(self.system.fixed()) {
            if let Some(t) = f {
                *v = *t;
            }
        }
    }

    /// Advance `field` by one step in place.
    pub fn step(&mut self, field: &mut TemperatureField) -> Result<CgStats, SolverError> {
        self.impose_constraints(field);
        let s = self.system;
        s.conductance().mul_vec(&field.values, &mut self.residual);
        for ((r, f), fixed) in self.residual.iter_mut().zip(s.load()).zip(s.fixed()) {
            *r = if fixed.is_some() { 0.0 } else { f - *r };
        }
        // the previous increment is a good first guess for a slowly varying response
        let stats = pcg(&self.op, &self.residual, &mut self.guess, self.tolerance, self.max_iter)?;
        for (v, d) in field.values.iter_mut().zip(&self.guess) {
            *v += d;
        }
        field.time += self.dt;
        Ok(stats)
    }
}

/// One backward-Euler step from `state`.
pub fn step(state: &TemperatureField, system: &ThermalSystem, dt: f64) -> Result<TemperatureField, SolverError> {
    let mut solver = TransientSolver::new(system, dt)?;
    let mut next = state.clone();
    solver.step(&mut next)?;
    Ok(next)
}

pub struct TransientResult {
    pub probes: ProbeSeries,
    pub final_field: TemperatureField,
}

#[derive(Debug, Clone, Default)]
pub struct TransientOptions {
    /// Top-face probe positions (mm); defaults to [`default_probes`].
    pub probes: Option<Vec<[f64; 2]>>,
    /// Probe clock in seconds (default 1 s).
    pub sample_interval: Option<f64>,
    /// Snapshot interval in seconds; `None` disables snapshots.
    pub snapshot_every: Option<f64>,
    pub integration: Integration,
    /// CG relative residual per step; defaults to [`STEP_TOLERANCE`].
    pub tolerance: Option<f64>,
}

/// Heat the grid from a uniform initial temperature for `scenario.duration`.
pub fn run_transient(grid: &VoxelGrid, materials: &Materials, scenario: &ThermalScenario) -> Result<TransientResult, SolverError> {
    run_transient_with(grid, materials, scenario, &TransientOptions::default(), |_| {})
}

/// As [`run_transient`]; `on_snapshot` sees the field at t = 0 and every
/// `snapshot_every` seconds.
pub fn run_transient_with(
    grid: &VoxelGrid,
    materials: &Materials,
    scenario: &ThermalScenario,
    options: &TransientOptions,
    mut on_snapshot: impl FnMut(&TemperatureField),
) -> Result<TransientResult, SolverError> {
    scenario.validate().map_err(SolverError::Shape)?;
    let system = build_system_with(grid, materials, scenario, options.integration);
    let positions = options.probes.clone().unwrap_or_else(|| default_probes(grid));
    let interval = options.sample_interval.unwrap_or(1.0);
    if !(interval > 0.0) {
        return Err(SolverError::Shape(format!("sample interval must be > 0, got {interval}")));
    }

    let tolerance = options.tolerance.unwrap_or(STEP_TOLERANCE);
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(SolverError::Shape(format!("CG tolerance must lie in (0, 1), got {tolerance}")));
    }
    let mut solver = TransientSolver::new(&system, scenario.dt)?.with_tolerance(tolerance);
    let mut field = TemperatureField::uniform(grid, scenario.initial_temperature);
    let mut probes = ProbeSeries::new(positions.clone());
    let mut prev = ProbeSeries::sample(&field, &positions);
    probes.push(0.0, prev.clone());
    solver.impose_constraints(&mut field);
    on_snapshot(&field);

    let eps = 1e-9 * scenario.dt;
    let mut next_sample = 1usize;
    let mut next_snapshot = options.snapshot_every.map(|s| (s, 1usize));
    while field.time < scenario.duration - eps {
        let t0 = field.time;
        solver
            .step(&mut field)
            .map_err(|e| e.at_time(field.time + scenario.dt))?;
        let now = ProbeSeries::sample(&field, &positions);
        loop {
            let ts = next_sample as f64 * interval;
            if ts > field.time + eps || ts > scenario.duration + eps {
                break;
            }
            let w = ((ts - t0) / (field.time - t0)).clamp(0.0, 1.0);
            let values = prev.iter().zip(&now).map(|(a, b)| a + w * (b - a)).collect();
            probes.push(ts, values);
            next_sample += 1;
        }
        if let Some((every, ref mut count)) = next_snapshot {
            if field.time + eps >= *count as f64 * every {
                on_snapshot(&field);
                *count = (field.time / every + 1e-9).floor() as usize + 1;
            }
        }
        prev = now;
    }
    Ok(TransientResult {
        probes,
        final_field: field,
    })
}

/// Solve `S T = F` with prescribed nodes held, starting from `initial`.
pub fn steady_state_of(system: &ThermalSystem, initial: f64) -> Result<TemperatureField, SolverError> {
    check_not_singular(system)?;
    let grid = system.grid();
    let n = system.node_count();
    let mut base: Vec<f64> = system
        .fixed()
        .iter()
        .map(|f| f.unwrap_or(initial))
        .collect();
    let mut rhs = vec![0.0; n];
    system.conductance().mul_vec(&base, &mut rhs);
    for ((r, f), fixed) in rhs.iter_mut().zip(system.load()).zip(system.fixed()) {
        *r = if fixed.is_some() { 0.0 } else { f - *r };
    }
    let op = ConstrainedOperator::new(system, 0.0);
    let mut delta = vec![0.0; n];
    pcg(&op, &rhs, &mut delta, STEADY_TOLERANCE, 10 * n)?;
    for (b, d) in base.iter_mut().zip(&delta) {
        *b += d;
    }
    TemperatureField::from_values(grid, base, f64::INFINITY)
}

/// Long-time limit of [`run_transient`].
pub fn steady_state(grid: &VoxelGrid, materials: &Materials, scenario: &ThermalScenario) -> Result<TemperatureField, SolverError> {
    steady_state_with(grid, materials, scenario, Integration::default())
}

pub fn steady_state_with(
    grid: &VoxelGrid,
    materials: &Materials,
    scenario: &ThermalScenario,
    rule: Integration,
) -> Result<TemperatureField, SolverError> {
    scenario.validate().map_err(SolverError::Shape)?;
    let system = build_system_with(grid, materials, scenario, rule);
    steady_state_of(&system, scenario.initial_temperature)
}
