use serde::{Deserialize, Serialize};

/// Boundary and initial conditions for one heating experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalScenario {
    /// Bed surface temperature, prescribed on the bottom face (°C).
    pub bed_temperature: f64,
    /// Room temperature, also the initial temperature (°C).
    pub initial_temperature: f64,
    /// Ambient air temperature at the side faces (°C).
    pub side_ambient: f64,
    /// Ambient air temperature at the top face (°C).
    pub top_ambient: f64,
    /// Heat transfer coefficient, W/(m²·K).
    pub h: f64,
    /// Volumetric heat source in PLA, W/m³.
    pub q_vol: f64,
    #[serde(rename = "duration_s")]
    pub duration: f64,
    #[serde(rename = "dt_s")]
    pub dt: f64,
}

impl Default for ThermalScenario {
    fn default() -> Self {
        Self {
            bed_temperature: 56.0,
            initial_temperature: 25.0,
            side_ambient: 56.0,
            top_ambient: 27.0,
            h: 25.0,
            q_vol: 0.0,
            duration: 2400.0,
            dt: 1.0,
        }
    }
}

impl ThermalScenario {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("bed_temperature", self.bed_temperature),
            ("initial_temperature", self.initial_temperature),
            ("side_ambient", self.side_ambient),
            ("top_ambient", self.top_ambient),
            ("q_vol", self.q_vol),
        ] {
            if !v.is_finite() {
                return Err(format!("scenario.{name} must be finite, got {v}"));
            }
        }
        if !(self.h >= 0.0 && self.h.is_finite()) {
            return Err(format!("scenario.h must be >= 0, got {}", self.h));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(format!("scenario.duration_s must be > 0, got {}", self.duration));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(format!("scenario.dt_s must be > 0, got {}", self.dt));
        }
        Ok(())
    }

    /// Lowest and highest temperature any boundary or initial value imposes.
    pub fn temperature_bounds(&self) -> (f64, f64) {
        let t = [
            self.bed_temperature,
            self.initial_temperature,
            self.side_ambient,
            self.top_ambient,
        ];
        (
            t.iter().copied().fold(f64::INFINITY, f64::min),
            t.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    }
}
