//! Control-pulse parameterizations for the transmon frequencies.
//!
//! A [`PulseTable`] holds `K × N` frequency values in GHz over a gate of
//! duration `Θ` ns. Two shapes are supported:
//!
//! * piecewise constant: `N` equal bins of width `Θ/N`, each holding one
//!   value. Bins are right-open; the last one is closed at `Θ`.
//! * piecewise error function: `N` knots at `t_l = l·Θ/(N−1)` joined by
//!   error-function steps centred between consecutive knots, modelling the
//!   first-order smoothing of a Gaussian line filter.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{param_err, Error, Result};
use crate::fmt::fmt_g12;
use crate::model::TransmonChainSpec;

/// Steepness of the inter-knot error-function step, in units of `1/Δt`.
pub const ERF_STEEPNESS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    PiecewiseConstant,
    PiecewiseErf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseTable {
    theta: f64,
    shape: PulseShape,
    values: Vec<Vec<f64>>,
}

/// On-disk layout of a pulse table.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PulseFile {
    theta_ns: f64,
    dt_ns: f64,
    shape: PulseShape,
    values: Vec<Vec<f64>>,
}

impl PulseTable {
    pub fn new(theta: f64, shape: PulseShape, values: Vec<Vec<f64>>) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return param_err(format!("pulse duration must be positive, got {theta}"));
        }
        let n = values.first().map_or(0, Vec::len);
        if values.is_empty() || n < 2 {
            return param_err("a pulse needs at least one transmon and two bins");
        }
        if values.iter().any(|row| row.len() != n) {
            return param_err("ragged pulse table");
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return param_err("pulse values must be finite");
        }
        Ok(Self { theta, shape, values })
    }

    /// Constant pulse holding `levels[k]` on transmon `k`.
    pub fn constant(theta: f64, shape: PulseShape, n_bins: usize, levels: &[f64]) -> Result<Self> {
        Self::new(theta, shape, levels.iter().map(|&v| vec![v; n_bins]).collect())
    }

    /// Rebuilds a table from a flat genome laid out row-major per transmon.
    pub fn from_genome(theta: f64, shape: PulseShape, n_transmons: usize, genome: &[f64]) -> Result<Self> {
        if n_transmons == 0 || genome.len() % n_transmons != 0 {
            return param_err("genome length is not a multiple of the transmon count");
        }
        let n = genome.len() / n_transmons;
        Self::new(theta, shape, genome.chunks(n).map(<[f64]>::to_vec).collect())
    }

    pub fn genome(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn shape(&self) -> PulseShape {
        self.shape
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn n_transmons(&self) -> usize {
        self.values.len()
    }

    pub fn n_bins(&self) -> usize {
        self.values[0].len()
    }

    /// Bin width for piecewise-constant pulses, knot spacing for erf pulses.
    pub fn dt(&self) -> f64 {
        match self.shape {
            PulseShape::PiecewiseConstant => self.theta / self.n_bins() as f64,
            PulseShape::PiecewiseErf => self.theta / (self.n_bins() - 1) as f64,
        }
    }

    /// Number of propagation intervals: bins, or gaps between knots.
    pub fn n_intervals(&self) -> usize {
        match self.shape {
            PulseShape::PiecewiseConstant => self.n_bins(),
            PulseShape::PiecewiseErf => self.n_bins() - 1,
        }
    }

    pub fn with_shape(&self, shape: PulseShape) -> Self {
        Self {
            shape,
            ..self.clone()
        }
    }

    pub fn within_bounds(&self, spec: &TransmonChainSpec) -> bool {
        self.values
            .iter()
            .flatten()
            .all(|&v| v >= spec.freq_min && v <= spec.freq_max)
    }

    /// Per-transmon frequencies at time `t`.
    pub fn sample(&self, t: f64) -> Result<Vec<f64>> {
        if !(0.0..=self.theta).contains(&t) {
            return param_err(format!("time {t} outside [0, {}]", self.theta));
        }
        let mut out = vec![0.0; self.n_transmons()];
        self.sample_into(t, &mut out);
        Ok(out)
    }

    /// Unchecked sampling for the propagator hot loop.
    pub(crate) fn sample_into(&self, t: f64, out: &mut [f64]) {
        let dt = self.dt();
        let last = self.n_intervals() - 1;
        let l = ((t / dt).floor().max(0.0) as usize).min(last);
        match self.shape {
            PulseShape::PiecewiseConstant => {
                for (o, row) in out.iter_mut().zip(&self.values) {
                    *o = row[l];
                }
            }
            PulseShape::PiecewiseErf => {
                let mid = (l as f64 + 0.5) * dt;
                let step = erf(ERF_STEEPNESS / dt * (t - mid));
                for (o, row) in out.iter_mut().zip(&self.values) {
                    let (a, b) = (row[l], row[l + 1]);
                    *o = 0.5 * (a + b) + 0.5 * (b - a) * step;
                }
            }
        }
    }

    /// `∫₀^Θ ε_k(t) dt` for piecewise-constant pulses.
    pub fn integral(&self, k: usize) -> Result<f64> {
        match self.shape {
            PulseShape::PiecewiseConstant => Ok(self.values[k].iter().sum::<f64>() * self.dt()),
            PulseShape::PiecewiseErf => param_err("closed-form integral only for piecewise-constant pulses"),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = PulseFile {
            theta_ns: self.theta,
            dt_ns: self.dt(),
            shape: self.shape,
            values: self.values.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PulseFile = serde_json::from_str(text)?;
        let table = Self::new(file.theta_ns, file.shape, file.values)?;
        if (table.dt() - file.dt_ns).abs() > 1e-9 * table.dt() {
            return Err(Error::Parameter(format!(
                "dt_ns {} inconsistent with theta_ns and bin count (expected {})",
                file.dt_ns,
                table.dt()
            )));
        }
        Ok(table)
    }

    /// CSV samples `t_ns,eps1_ghz,…` at `n_samples` equally spaced times.
    pub fn to_csv(&self, n_samples: usize) -> Result<String> {
        if n_samples < 2 {
            return param_err("need at least two samples");
        }
        let mut out = String::from("t_ns");
        for k in 1..=self.n_transmons() {
            out.push_str(&format!(",eps{k}_ghz"));
        }
        out.push('\n');
        for i in 0..n_samples {
            let t = self.theta * i as f64 / (n_samples - 1) as f64;
            out.push_str(&fmt_g12(t));
            for v in self.sample(t)? {
                out.push(',');
                out.push_str(&fmt_g12(v));
            }
            out.push('\n');
        }
        Ok(out)
    }
}

/// Adds independent uniform noise `δε·U[−1,1]` to every entry. `delta_khz`
/// is in kHz. The result is deliberately not clipped to the control bounds.
pub fn perturb_pulse<R: Rng + ?Sized>(p: &PulseTable, delta_khz: f64, rng: &mut R) -> Result<PulseTable> {
    if !(delta_khz >= 0.0) {
        return param_err("noise amplitude must be non-negative");
    }
    let delta_ghz = delta_khz * 1e-6;
    let values = p
        .values
        .iter()
        .map(|row| {
            row.iter()
                .map(|&v| v + delta_ghz * rng.random_range(-1.0..=1.0))
                .collect()
        })
        .collect();
    Ok(PulseTable { values, ..p.clone() })
}

/// Avoided-crossing flux pulse for the two-transmon CZ gate. Times in ns,
/// frequencies in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CzPulseSpec {
    pub omega_off: f64,
    pub omega_on: f64,
    pub t_ramp: f64,
    pub t_gate: f64,
}

impl CzPulseSpec {
    pub fn new(omega_off: f64, omega_on: f64, t_ramp: f64, t_gate: f64) -> Result<Self> {
        let s = Self {
            omega_off,
            omega_on,
            t_ramp,
            t_gate,
        };
        s.validate()?;
        Ok(s)
    }

    /// Gate built from a plateau duration rather than a total duration.
    pub fn from_t_on(omega_off: f64, omega_on: f64, t_ramp: f64, t_on: f64) -> Result<Self> {
        Self::new(omega_off, omega_on, t_ramp, t_on + 2.0 * t_ramp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_ramp > 0.0 && self.t_gate > 2.0 * self.t_ramp) {
            return param_err("CZ pulse needs t_ramp > 0 and t_gate > 2·t_ramp");
        }
        Ok(())
    }

    pub fn t_on(&self) -> f64 {
        self.t_gate - 2.0 * self.t_ramp
    }
}

/// Frequency of the tuned transmon at time `t` of the CZ pulse.
pub fn cz_pulse(spec: &CzPulseSpec, t: f64) -> Result<f64> {
    spec.validate()?;
    if !(0.0..=spec.t_gate).contains(&t) {
        return param_err(format!("time {t} outside [0, {}]", spec.t_gate));
    }
    Ok(cz_pulse_unchecked(spec, t))
}

pub(crate) fn cz_pulse_unchecked(spec: &CzPulseSpec, t: f64) -> f64 {
    let CzPulseSpec {
        omega_off,
        omega_on,
        t_ramp,
        t_gate,
    } = *spec;
    omega_off
        + 0.5
            * (omega_on - omega_off)
            * (erf((4.0 * t - 2.0 * t_ramp) / t_ramp) - erf((4.0 * t - 4.0 * t_gate + 2.0 * t_ramp) / t_ramp))
}
