use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::calibration::{Bounds, CalibrationCase};
use crate::mesostructure::{FilamentSection, InfillPattern, InfillSpec};
use crate::thermal::{Integration, Materials, ThermalScenario};

/// Block dimensions and mesostructure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub length_mm: f64,
    pub width_mm: f64,
    pub height_mm: f64,
    #[serde(default)]
    pub filament: FilamentSection,
    /// Dense when neither `infill` nor `voids` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infill: Option<InfillSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voids: Option<VoidConfig>,
    /// Merge this many filament cells per axis; 1 keeps full resolution.
    #[serde(default = "one")]
    pub coarsen: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoidConfig {
    pub a: f64,
    #[serde(default = "default_subdivision")]
    pub subdivision: usize,
}

fn default_subdivision() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative paths resolve against the config file's directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    /// Write a temperature field every this many seconds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_every_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub integration: Integration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    /// 1, 2 or 3.
    pub case: u8,
    /// Measured trace; relative paths resolve against the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<PathBuf>,
    /// Defaults to [5, 60].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_bounds: Option<[f64; 2]>,
    /// Defaults to [T_a, T_b].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side_bounds: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_bounds: Option<[f64; 2]>,
    pub h_step: f64,
    pub temperature_step: f64,
    /// Sweep and refine on a grid coarsened by this factor, then polish at
    /// the configured resolution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search_coarsen: Option<usize>,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            case: 3,
            experiment: None,
            h_bounds: None,
            side_bounds: None,
            top_bounds: None,
            h_step: 5.0,
            temperature_step: 1.0,
            search_coarsen: None,
        }
    }
}

impl CalibrationConfig {
    pub fn case(&self) -> Result<CalibrationCase, IoError> {
        CalibrationCase::from_number(self.case)
            .ok_or_else(|| invalid("calibration.case", format!("must be 1, 2 or 3, got {}", self.case)))
    }

    pub fn bounds(&self, scenario: &ThermalScenario) -> Bounds {
        let mut b = Bounds::default_for(scenario.initial_temperature, scenario.bed_temperature);
        if let Some([lo, hi]) = self.h_bounds {
            b.h = (lo, hi);
        }
        if let Some([lo, hi]) = self.side_bounds {
            b.side = (lo, hi);
        }
        if let Some([lo, hi]) = self.top_bounds {
            b.top = (lo, hi);
        }
        b
    }
}

/// Everything one run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Label used in reports; defaults to the config file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub materials: Materials,
    #[serde(default)]
    pub scenario: ThermalScenario,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationConfig>,
}

fn invalid(field: &str, constraint: impl Into<String>) -> IoError {
    IoError::Invalid {
        field: field.to_string(),
        constraint: constraint.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<(), IoError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be > 0, got {v}")))
    }
}

impl RunConfig {
    /// A dense block with default materials and scenario.
    pub fn block(length_mm: f64, width_mm: f64, height_mm: f64) -> Self {
        Self {
            name: None,
            geometry: GeometryConfig {
                length_mm,
                width_mm,
                height_mm,
                filament: FilamentSection::default(),
                infill: None,
                voids: None,
                coarsen: 1,
            },
            materials: Materials::default(),
            scenario: ThermalScenario::default(),
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
            calibration: None,
        }
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or("run")
    }

    pub fn validate(&self) -> Result<(), IoError> {
        let g = &self.geometry;
        positive("geometry.length_mm", g.length_mm)?;
        positive("geometry.width_mm", g.width_mm)?;
        positive("geometry.height_mm", g.height_mm)?;
        positive("geometry.filament.width_mm", g.filament.width)?;
        positive("geometry.filament.layer_height_mm", g.filament.layer_height)?;
        if g.coarsen == 0 {
            return Err(invalid("geometry.coarsen", "must be >= 1, got 0"));
        }
        if g.infill.is_some() && g.voids.is_some() {
            return Err(invalid("geometry", "infill and voids are mutually exclusive"));
        }
        if let Some(spec) = &g.infill {
            if !(spec.density > 0.0 && spec.density <= 1.0) {
                return Err(invalid(
                    "geometry.infill.density",
                    format!("must lie in (0, 1], got {}", spec.density),
                ));
            }
            if spec.pattern == InfillPattern::Dense && spec.density != 1.0 {
                return Err(invalid(
                    "geometry.infill.density",
                    format!("must be 1 for the dense pattern, got {}", spec.density),
                ));
            }
            positive("geometry.infill.gyroid_period_mm", spec.gyroid_period)?;
        }
        if let Some(v) = &g.voids {
            if !(v.a >= 0.0 && v.a < std::f64::consts::FRAC_1_SQRT_2) {
                return Err(invalid("geometry.voids.a", format!("must lie in [0, 1/sqrt(2)), got {}", v.a)));
            }
            if v.subdivision < 4 || v.subdivision % 2 != 0 {
                return Err(invalid(
                    "geometry.voids.subdivision",
                    format!("must be even and >= 4, got {}", v.subdivision),
                ));
            }
        }
        self.materials
            .pla
            .validate("materials.pla")
            .and_then(|_| self.materials.air.validate("materials.air"))
            .map_err(|m| split_message(&m))?;
        self.scenario.validate().map_err(|m| split_message(&m))?;
        if let Some(s) = self.output.snapshot_every_s {
            positive("output.snapshot_every_s", s)?;
        }
        if let Some(c) = &self.calibration {
            c.case()?;
            positive("calibration.h_step", c.h_step)?;
            positive("calibration.temperature_step", c.temperature_step)?;
            if let Some(f) = c.search_coarsen {
                if f < 2 {
                    return Err(invalid("calibration.search_coarsen", format!("must be >= 2, got {f}")));
                }
            }
            for (name, b) in [("h_bounds", c.h_bounds), ("side_bounds", c.side_bounds), ("top_bounds", c.top_bounds)] {
                if let Some([lo, hi]) = b {
                    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                        return Err(invalid(&format!("calibration.{name}"), format!("must be ordered, got [{lo}, {hi}]")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Resolve a path from this config against `base` (the config's directory).
    pub fn resolve(base: &Path, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            base.join(path)
        }
    }
}

/// `"scope.field must ..."` → field and constraint.
fn split_message(m: &str) -> IoError {
    match m.split_once(' ') {
        Some((field, rest)) => invalid(field, rest),
        None => invalid("config", m),
    }
}

/// Parse and validate a TOML run configuration.
pub fn parse_config_str(text: &str) -> Result<RunConfig, IoError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Read, parse and validate a config file. A missing `name` becomes the file stem.
pub fn parse_config(path: &Path) -> Result<RunConfig, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    let mut config = parse_config_str(&text).map_err(|e| e.in_file(path))?;
    if config.name.is_none() {
        config.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    }
    Ok(config)
}

pub fn emit_config(config: &RunConfig) -> Result<String, IoError> {
    toml::to_string(config).map_err(|e| IoError::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const S1: &str = r#"
[geometry]
length_mm = 30.0
width_mm = 30.0
height_mm = 20.0

[geometry.infill]
pattern = "dense"
density = 1.0

[scenario]
duration_s = 2400.0
"#;

    #[test]
    fn defaults_fill_in() {
        let c = parse_config_str(S1).unwrap();
        assert_eq!(c.scenario.initial_temperature, 25.0);
        assert_eq!(c.scenario.bed_temperature, 56.0);
        assert_eq!(c.scenario.dt, 1.0);
        assert_eq!(c.materials, Materials::default());
        assert_eq!(c.geometry.filament, FilamentSection::default());
        assert_eq!(c.geometry.coarsen, 1);
        let spec = c.geometry.infill.unwrap();
        assert_eq!(spec.perimeter_walls, 2);
    }

    #[test]
    fn empty_scenario_block() {
        let c = parse_config_str("[geometry]\nlength_mm = 1\nwidth_mm = 1\nheight_mm = 1\n[scenario]\n").unwrap();
        assert_eq!(c.scenario, ThermalScenario::default());
    }

    #[test]
    fn density_out_of_range_names_field() {
        let text = S1.replace("pattern = \"dense\"\ndensity = 1.0", "pattern = \"rectilinear\"\ndensity = 1.3");
        let err = parse_config_str(&text).unwrap_err();
        match err {
            IoError::Invalid { field, constraint } => {
                assert_eq!(field, "geometry.infill.density");
                assert!(constraint.contains("(0, 1]"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn scenario_errors_name_field() {
        let err = parse_config_str(&format!("{S1}dt_s = -1.0\n")).unwrap_err();
        assert!(matches!(err, IoError::Invalid { ref field, .. } if field == "scenario.dt_s"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(parse_config_str(&format!("{S1}bogus = 1\n")), Err(IoError::Parse(_))));
        assert!(matches!(
            parse_config_str("[geometry]\nlength_mm = 1\n"),
            Err(IoError::Parse(_))
        ));
    }

    #[test]
    fn emit_round_trip() {
        let mut c = parse_config_str(S1).unwrap();
        c.calibration = Some(CalibrationConfig {
            experiment: Some("trace.csv".into()),
            search_coarsen: Some(5),
            ..CalibrationConfig::default()
        });
        c.output.snapshot_every_s = Some(60.0);
        c.geometry.voids = None;
        let text = emit_config(&c).unwrap();
        assert_eq!(parse_config_str(&text).unwrap(), c);
    }
}
