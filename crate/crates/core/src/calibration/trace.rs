use serde::{Deserialize, Serialize};

use super::CalibrationError;
use crate::thermal::ProbeSeries;

/// Spread of repeated measurements around the mean trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Measured mean top-surface temperature of one specimen.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTrace {
    pub id: String,
    /// s, non-decreasing
    pub times: Vec<f64>,
    /// °C
    pub mean: Vec<f64>,
    /// `probes[t][p]`; empty when only the mean was recorded.
    pub probes: Vec<Vec<f64>>,
    pub envelope: Option<Envelope>,
}

impl ExperimentTrace {
    pub fn new(id: impl Into<String>, times: Vec<f64>, mean: Vec<f64>) -> Result<Self, CalibrationError> {
        let trace = Self {
            id: id.into(),
            times,
            mean,
            probes: Vec::new(),
            envelope: None,
        };
        trace.validate()?;
        Ok(trace)
    }

    /// Trace whose mean is the row average of per-probe readings.
    pub fn from_probes(id: impl Into<String>, times: Vec<f64>, probes: Vec<Vec<f64>>) -> Result<Self, CalibrationError> {
        if probes.iter().any(|row| row.is_empty()) {
            return Err(CalibrationError::Trace("probe row without readings".into()));
        }
        let mean = probes
            .iter()
            .map(|row| row.iter().sum::<f64>() / row.len() as f64)
            .collect();
        let mut trace = Self::new(id, times, mean)?;
        trace.probes = probes;
        Ok(trace)
    }

    /// Mean trace of a simulation, e.g. to fit against synthetic data.
    pub fn from_series(id: impl Into<String>, series: &ProbeSeries) -> Result<Self, CalibrationError> {
        let mut trace = Self::new(id, series.times.clone(), series.mean.clone())?;
        trace.probes = series.temperatures.clone();
        Ok(trace)
    }

    pub fn with_envelope(mut self, envelope: Envelope) -> Result<Self, CalibrationError> {
        if envelope.lower.len() != self.len() || envelope.upper.len() != self.len() {
            return Err(CalibrationError::Trace("envelope length differs from trace".into()));
        }
        self.envelope = Some(envelope);
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CalibrationError> {
        if self.times.is_empty() {
            return Err(CalibrationError::Trace(format!("trace '{}' is empty", self.id)));
        }
        if self.times.len() != self.mean.len() {
            return Err(CalibrationError::Trace(format!(
                "trace '{}' has {} times but {} means",
                self.id,
                self.times.len(),
                self.mean.len()
            )));
        }
        if !self.probes.is_empty() && self.probes.len() != self.times.len() {
            return Err(CalibrationError::Trace(format!("trace '{}' probe rows differ from times", self.id)));
        }
        if self.times.iter().chain(&self.mean).any(|v| !v.is_finite()) {
            return Err(CalibrationError::Trace(format!("trace '{}' has non-finite values", self.id)));
        }
        if let Some(i) = self.times.windows(2).position(|w| w[1] < w[0]) {
            return Err(CalibrationError::Trace(format!(
                "trace '{}' time decreases at sample {}",
                self.id,
                i + 1
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Last time minus first time.
    pub fn duration(&self) -> f64 {
        self.times[self.len() - 1] - self.times[0]
    }

    /// Samples that share a time are averaged, so their order is irrelevant.
    fn collapsed(&self) -> (Vec<f64>, Vec<f64>) {
        let mut times: Vec<f64> = Vec::with_capacity(self.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.len());
        let mut count = 0usize;
        for (&t, &m) in self.times.iter().zip(&self.mean) {
            if times.last() == Some(&t) {
                let v = values.last_mut().expect("paired with times");
                count += 1;
                *v += (m - *v) / count as f64;
            } else {
                times.push(t);
                values.push(m);
                count = 1;
            }
        }
        (times, values)
    }

    /// Linear interpolation of the mean at each of `at` that lies inside the
    /// recorded range; `None` outside.
    pub fn interpolate(&self, at: &[f64]) -> Vec<Option<f64>> {
        let (times, values) = self.collapsed();
        let (t0, t1) = (times[0], times[times.len() - 1]);
        let mut idx = 0;
        at.iter()
            .map(|&t| {
                if t < t0 || t > t1 {
                    return None;
                }
                while idx + 1 < times.len() && times[idx + 1] < t {
                    idx += 1;
                }
                while idx > 0 && times[idx] > t {
                    idx -= 1;
                }
                if idx + 1 == times.len() || times[idx] == t {
                    return Some(values[idx]);
                }
                let w = (t - times[idx]) / (times[idx + 1] - times[idx]);
                Some(values[idx] + w * (values[idx + 1] - values[idx]))
            })
            .collect()
    }
}

/// Simulation times and experimental means interpolated onto them, restricted
/// to the shared time range.
pub(crate) fn aligned(sim_times: &[f64], exp: &ExperimentTrace) -> Result<(Vec<usize>, Vec<f64>), CalibrationError> {
    let mut idx = Vec::new();
    let mut values = Vec::new();
    for (i, v) in exp.interpolate(sim_times).into_iter().enumerate() {
        if let Some(v) = v {
            idx.push(i);
            values.push(v);
        }
    }
    if idx.is_empty() {
        return Err(CalibrationError::EmptyOverlap {
            id: exp.id.clone(),
        });
    }
    Ok((idx, values))
}

/// Root-mean-square difference (°C) between simulated and measured mean traces
/// over the simulation samples inside the measured time range.
pub fn cost(sim: &ProbeSeries, exp: &ExperimentTrace) -> Result<f64, CalibrationError> {
    rmse(&sim.times, &sim.mean, exp)
}

pub(crate) fn rmse(sim_times: &[f64], sim_mean: &[f64], exp: &ExperimentTrace) -> Result<f64, CalibrationError> {
    let (idx, values) = aligned(sim_times, exp)?;
    let sum: f64 = idx
        .iter()
        .zip(&values)
        .map(|(&i, v)| (sim_mean[i] - v).powi(2))
        .sum();
    Ok((sum / idx.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(times: Vec<f64>, mean: Vec<f64>) -> ProbeSeries {
        let mut s = ProbeSeries::new(vec![[0.0, 0.0]]);
        for (t, m) in times.into_iter().zip(mean) {
            s.push(t, vec![m]);
        }
        s
    }

    #[test]
    fn identical_and_offset() {
        let t: Vec<f64> = (0..100).map(f64::from).collect();
        let m: Vec<f64> = t.iter().map(|x| 25.0 + 0.1 * x).collect();
        let exp = ExperimentTrace::new("a", t.clone(), m.clone()).unwrap();
        assert_eq!(cost(&series(t.clone(), m.clone()), &exp).unwrap(), 0.0);
        let shifted: Vec<f64> = m.iter().map(|v| v + 1.0).collect();
        assert!((cost(&series(t, shifted), &exp).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interpolates_coarser_experiment() {
        let exp = ExperimentTrace::new("a", vec![0.0, 10.0], vec![20.0, 30.0]).unwrap();
        let sim = series(vec![0.0, 5.0, 10.0, 15.0], vec![20.0, 25.0, 30.0, 99.0]);
        assert_eq!(cost(&sim, &exp).unwrap(), 0.0);
    }

    #[test]
    fn no_overlap_is_an_error() {
        let exp = ExperimentTrace::new("a", vec![100.0, 200.0], vec![1.0, 2.0]).unwrap();
        let sim = series(vec![0.0, 1.0], vec![1.0, 1.0]);
        assert!(matches!(cost(&sim, &exp), Err(CalibrationError::EmptyOverlap { .. })));
    }

    #[test]
    fn equal_time_samples_are_averaged() {
        let a = ExperimentTrace::new("a", vec![0.0, 1.0, 1.0, 2.0], vec![0.0, 1.0, 3.0, 2.0]).unwrap();
        let b = ExperimentTrace::new("b", vec![0.0, 1.0, 1.0, 2.0], vec![0.0, 3.0, 1.0, 2.0]).unwrap();
        let sim = series(vec![0.0, 1.0, 2.0], vec![0.5, 1.5, 2.5]);
        assert_eq!(cost(&sim, &a).unwrap(), cost(&sim, &b).unwrap());
        assert_eq!(a.interpolate(&[1.0]), vec![Some(2.0)]);
    }

    #[test]
    fn rejects_decreasing_time() {
        assert!(ExperimentTrace::new("a", vec![0.0, 2.0, 1.0], vec![0.0; 3]).is_err());
        assert!(ExperimentTrace::new("a", vec![], vec![]).is_err());
    }

    #[test]
    fn mean_from_probes() {
        let t = ExperimentTrace::from_probes("p", vec![0.0, 1.0], vec![vec![1.0, 3.0], vec![2.0, 6.0]]).unwrap();
        assert_eq!(t.mean, vec![2.0, 4.0]);
    }
}
