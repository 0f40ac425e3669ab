use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::mesostructure::VoxelGrid;
use crate::thermal::{
    run_transient_with, Integration, Materials, ProbeSeries, SolverError, ThermalScenario, TransientOptions,
};

/// Ambient and bed temperatures of one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperatures {
    pub bed: f64,
    pub initial: f64,
    pub side: f64,
    pub top: f64,
}

/// Probe responses at one `h` to a unit rise of each driving temperature and
/// to the volumetric source, all from a zero initial field.
///
/// The problem is linear with a uniform initial field, so the probes of any
/// candidate are `T_a + (T_b − T_a)·bed + (T_cs − T_a)·side + (T_ct − T_a)·top + source`.
#[derive(Debug, Clone)]
pub struct UnitResponses {
    pub times: Vec<f64>,
    pub positions: Vec<[f64; 2]>,
    /// `[t][p]`
    pub bed: Vec<Vec<f64>>,
    pub side: Vec<Vec<f64>>,
    pub top: Vec<Vec<f64>>,
    pub source: Option<Vec<Vec<f64>>>,
}

fn mean_of(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().map(|r| r.iter().sum::<f64>() / r.len() as f64).collect()
}

impl UnitResponses {
    /// Probe traces for the given temperatures.
    pub fn series(&self, t: &Temperatures) -> ProbeSeries {
        let mut s = ProbeSeries::new(self.positions.clone());
        for (i, &time) in self.times.iter().enumerate() {
            let row = (0..self.positions.len())
                .map(|p| {
                    let mut v = t.initial
                        + (t.bed - t.initial) * self.bed[i][p]
                        + (t.side - t.initial) * self.side[i][p]
                        + (t.top - t.initial) * self.top[i][p];
                    if let Some(q) = &self.source {
                        v += q[i][p];
                    }
                    v
                })
                .collect();
            s.push(time, row);
        }
        s
    }

    /// Mean-trace basis `(offset, bed, side, top)` for least squares.
    pub fn mean_basis(&self) -> MeanBasis {
        MeanBasis {
            source: self.source.as_deref().map(mean_of),
            bed: mean_of(&self.bed),
            side: mean_of(&self.side),
            top: mean_of(&self.top),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeanBasis {
    pub bed: Vec<f64>,
    pub side: Vec<f64>,
    pub top: Vec<f64>,
    pub source: Option<Vec<f64>>,
}

impl MeanBasis {
    /// Mean trace at sample `i`. Every candidate cost goes through here, so
    /// equal temperatures give bit-identical costs whichever case produced them.
    #[inline]
    pub fn at(&self, i: usize, t: &Temperatures) -> f64 {
        let mut v = t.initial
            + (t.bed - t.initial) * self.bed[i]
            + (t.side - t.initial) * self.side[i]
            + (t.top - t.initial) * self.top[i];
        if let Some(q) = &self.source {
            v += q[i];
        }
        v
    }
}

/// A specimen (grid, materials, heating protocol) whose unit responses are
/// computed once per `h` and shared by every trace fitted against it.
pub struct ResponseModel {
    grid: VoxelGrid,
    materials: Materials,
    scenario: ThermalScenario,
    integration: Integration,
    cache: Mutex<HashMap<u64, Arc<UnitResponses>>>,
}

impl ResponseModel {
    /// `scenario` supplies duration, step, and source; its temperatures and
    /// `h` are ignored.
    pub fn new(grid: VoxelGrid, materials: Materials, scenario: ThermalScenario) -> Self {
        Self {
            grid,
            materials,
            scenario,
            integration: Integration::default(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_integration(mut self, rule: Integration) -> Self {
        self.integration = rule;
        self
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn materials(&self) -> &Materials {
        &self.materials
    }

    pub fn scenario(&self) -> &ThermalScenario {
        &self.scenario
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().expect("cache poisoned").len()
    }

    pub fn responses(&self, h: f64) -> Result<Arc<UnitResponses>, SolverError> {
        if let Some(r) = self.cache.lock().expect("cache poisoned").get(&h.to_bits()) {
            return Ok(Arc::clone(r));
        }
        let r = Arc::new(self.compute(h)?);
        self.cache
            .lock()
            .expect("cache poisoned")
            .insert(h.to_bits(), Arc::clone(&r));
        Ok(r)
    }

    fn compute(&self, h: f64) -> Result<UnitResponses, SolverError> {
        let zero = ThermalScenario {
            bed_temperature: 0.0,
            initial_temperature: 0.0,
            side_ambient: 0.0,
            top_ambient: 0.0,
            h,
            q_vol: 0.0,
            ..self.scenario
        };
        let options = TransientOptions {
            integration: self.integration,
            ..Default::default()
        };
        let run = |sc: ThermalScenario| {
            run_transient_with(&self.grid, &self.materials, &sc, &options, |_| {}).map(|r| r.probes)
        };
        let bed = run(ThermalScenario {
            bed_temperature: 1.0,
            ..zero
        })?;
        let side = run(ThermalScenario {
            side_ambient: 1.0,
            ..zero
        })?;
        let top = run(ThermalScenario {
            top_ambient: 1.0,
            ..zero
        })?;
        let source = if self.scenario.q_vol != 0.0 {
            Some(
                run(ThermalScenario {
                    q_vol: self.scenario.q_vol,
                    ..zero
                })?
                .temperatures,
            )
        } else {
            None
        };
        Ok(UnitResponses {
            times: bed.times,
            positions: bed.positions,
            bed: bed.temperatures,
            side: side.temperatures,
            top: top.temperatures,
            source,
        })
    }
}
