//! Reproducible studies built on the simulation and optimization layers:
//! gate synthesis, fidelity against gate time, control-noise robustness,
//! decoherence scans, energy spectra and the two-transmon CZ pulse.
//!
//! Every study is driven by a [`RunConfig`] read from JSON. CSV outputs
//! start with a `#` line carrying the config digest and seed, then a header.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{param_err, Error, Result};
use crate::fmt::fmt_g12;
use crate::gates::{make_target, verify_truth_table, GateName, GateTarget};
use crate::linalg::{max_abs_diff, unitarity_defect};
use crate::model::{spectrum_sweep, SpectrumTable, TransmonChainSpec};
use crate::noise::{amplitude_damping_kraus, average_state_fidelity_with, phase_damping_kraus, NoiseSpec};
use crate::optimizer::{run_sussade, GenerationStats, SussadeConfig, Termination};
use crate::propagation::{
    compensated_fidelity, default_substeps, full_space_unitary, GateObjective, PhaseCompensation, Propagator,
};
use crate::pulses::{cz_pulse_unchecked, perturb_pulse, CzPulseSpec, PulseShape, PulseTable};

/// Fidelity used to define the robustness threshold.
pub const ROBUST_FIDELITY: f64 = 0.9999;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub gate: GateName,
    pub theta_ns: f64,
    pub dt_ns: f64,
    pub g_mhz: f64,
    pub eta_mhz: f64,
    pub pulse_shape: PulseShape,
    /// Integration substeps per interval; shape default when unset.
    pub substeps: Option<usize>,
    pub optimizer: SussadeConfig,
    pub noise: Option<NoiseSpec>,
    pub sweep: Option<SweepSpec>,
    pub robustness: Option<RobustnessSpec>,
    pub decoherence: Option<DecoherenceSpec>,
    pub spectrum: Option<SpectrumSpec>,
    pub cz_study: Option<CzStudySpec>,
    /// Pulse file consumed by the robustness and decoherence studies.
    pub pulse_path: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gate: GateName::Ccz,
            theta_ns: 26.0,
            dt_ns: 1.0,
            g_mhz: 30.0,
            eta_mhz: 200.0,
            pulse_shape: PulseShape::PiecewiseConstant,
            substeps: None,
            optimizer: SussadeConfig {
                target_fitness: 0.999,
                max_evaluations: Some(200_000),
                ..SussadeConfig::default()
            },
            noise: None,
            sweep: None,
            robustness: None,
            decoherence: None,
            spectrum: None,
            cz_study: None,
            pulse_path: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_ns > 0.0 && self.dt_ns > 0.0) {
            return param_err("theta_ns and dt_ns must be positive");
        }
        let n = self.theta_ns / self.dt_ns;
        if (n - n.round()).abs() > 1e-9 || n.round() < 1.0 {
            return param_err(format!("theta_ns {} is not a whole number of dt_ns {}", self.theta_ns, self.dt_ns));
        }
        if self.pulse_shape == PulseShape::PiecewiseErf && n.round() < 1.0 {
            return param_err("erf pulses need at least two knots");
        }
        self.chain()?.validate()
    }

    /// Parameters per transmon: `Θ/Δt` bins (constant) or knots (erf).
    pub fn n_params(&self) -> usize {
        (self.theta_ns / self.dt_ns).round() as usize
    }

    pub fn chain(&self) -> Result<TransmonChainSpec> {
        let spec = TransmonChainSpec::cubic(self.gate.n_qubits(), self.eta_mhz * 1e-3, self.g_mhz * 1e-3);
        spec.validate()?;
        Ok(spec)
    }

    pub fn substeps(&self) -> usize {
        self.substeps.unwrap_or_else(|| default_substeps(self.pulse_shape))
    }

    /// Hex SHA-256 of the canonical JSON form, ignoring `output_dir`.
    pub fn digest(&self) -> String {
        let canonical = Self {
            output_dir: PathBuf::new(),
            ..self.clone()
        };
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let d = Sha256::digest(json.as_bytes());
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn csv_preamble(&self) -> String {
        format!("# config_sha256={} seed={}\n", self.digest(), self.optimizer.seed)
    }

    fn objective(&self, theta: f64, g_ghz: f64) -> Result<GateObjective> {
        let spec = self.chain()?.with_coupling(g_ghz);
        let n = (theta / self.dt_ns).round() as usize;
        let obj = GateObjective::new(spec, make_target(self.gate.synthesis_form()), theta, self.pulse_shape)?
            .with_substeps(self.substeps());
        debug_assert_eq!(obj.n_transmons() * n, self.gate.n_qubits() * n);
        Ok(obj)
    }
}

/// Seed for sub-task `index`, split off a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index + 1);
    rng.next_u64()
}

// ---------------------------------------------------------------- optimize

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeReport {
    pub gate: GateName,
    pub synthesized: GateName,
    pub theta_ns: f64,
    pub n_params: usize,
    pub fidelity: f64,
    pub leakage: Vec<f64>,
    pub compensation: PhaseCompensation,
    pub evaluations: u64,
    pub generations: usize,
    pub termination: Termination,
    pub target_reached: bool,
    #[serde(skip)]
    pub pulse: PulseTable,
    #[serde(skip)]
    pub history: Vec<GenerationStats>,
}

impl OptimizeReport {
    pub fn history_csv(&self) -> String {
        crate::optimizer::history_csv(&self.history)
    }
}

/// Runs the optimizer on the configured gate. `warm_start` seeds one
/// population member with an existing pulse.
pub fn cmd_optimize(cfg: &RunConfig, warm_start: Option<&PulseTable>) -> Result<OptimizeReport> {
    cfg.validate()?;
    optimize_cell(cfg, cfg.theta_ns, cfg.g_mhz * 1e-3, &cfg.optimizer, warm_start)
}

fn optimize_cell(
    cfg: &RunConfig,
    theta: f64,
    g_ghz: f64,
    opt: &SussadeConfig,
    warm_start: Option<&PulseTable>,
) -> Result<OptimizeReport> {
    let obj = cfg.objective(theta, g_ghz)?;
    let n = (theta / cfg.dt_ns).round() as usize;
    let dims = obj.n_transmons() * n;
    let mut opt = opt.clone();
    let spec = obj.propagator.spec();
    opt.bounds = (spec.freq_min, spec.freq_max);
    let warm = match warm_start {
        Some(p) if p.genome().len() != dims => return param_err("warm-start pulse has the wrong size"),
        Some(p) => Some(p.genome()),
        None => None,
    };
    let f = |x: &[f64]| obj.evaluate(x);
    let out = run_sussade(&f, dims, &opt, warm.as_deref())?;
    if let Termination::ObjectiveFailed(msg) = &out.termination {
        return Err(Error::Objective(msg.clone()));
    }
    let pulse = obj.pulse(&out.best_genome)?;
    let evo = obj.propagator.evolve(&pulse, obj.substeps)?;
    let (fidelity, compensation) = compensated_fidelity(&evo.computational_unitary, &obj.target);
    Ok(OptimizeReport {
        gate: cfg.gate,
        synthesized: cfg.gate.synthesis_form(),
        theta_ns: theta,
        n_params: dims,
        fidelity,
        leakage: evo.leakage,
        compensation,
        evaluations: out.evaluations,
        generations: out.history.last().map_or(0, |h| h.generation),
        target_reached: out.termination == Termination::TargetReached,
        termination: out.termination,
        pulse,
        history: out.history,
    })
}

/// Writes `pulse.json`, `history.csv` and `report.json`.
pub fn write_optimize_artifacts(cfg: &RunConfig, report: &OptimizeReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("pulse.json"), report.pulse.to_json()?)?;
    fs::write(dir.join("history.csv"), cfg.csv_preamble() + &report.history_csv())?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)?)?;
    Ok(())
}

/// Independent re-evaluation of a pulse file against a gate.
pub fn evaluate_pulse(cfg: &RunConfig, pulse: &PulseTable) -> Result<(f64, PhaseCompensation)> {
    let spec = cfg.chain()?;
    let prop = Propagator::new(spec)?;
    let target = make_target(cfg.gate.synthesis_form());
    let u = prop.computational_unitary(pulse, cfg.substeps())?;
    Ok(compensated_fidelity(&u, &target))
}

// -------------------------------------------------------------- sweep-time

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub g_mhz: Vec<f64>,
    pub theta_ns: Vec<f64>,
    /// Fidelity defining the threshold gate time `Θ*`.
    pub threshold: f64,
    pub max_evaluations_per_cell: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            g_mhz: vec![20.0, 30.0, 40.0, 50.0],
            theta_ns: vec![10.0, 14.0, 18.0, 22.0, 26.0, 30.0, 34.0, 38.0],
            threshold: 0.99,
            max_evaluations_per_cell: 100_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub g_mhz: f64,
    pub theta_ns: f64,
    pub fidelity: Option<f64>,
    pub evaluations: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = a·x + b`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
    /// `(g, Θ*)` with `Θ*` linearly interpolated between grid points.
    pub thresholds: Vec<(f64, Option<f64>)>,
    /// Fit of `1/Θ*` (1/ns) against `g` (MHz).
    pub inverse_time_fit: Option<LinearFit>,
}

/// First crossing of `threshold` along an increasing `theta` grid.
pub fn threshold_time(points: &[(f64, f64)], threshold: f64) -> Option<f64> {
    let mut best_so_far: Option<(f64, f64)> = None;
    for &(t, f) in points {
        if f >= threshold {
            return Some(match best_so_far {
                Some((t0, f0)) if f > f0 => t0 + (threshold - f0) * (t - t0) / (f - f0),
                _ => t,
            });
        }
        best_so_far = Some((t, f));
    }
    None
}

pub fn cmd_sweep_time(cfg: &RunConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let sweep = cfg.sweep.clone().unwrap_or_default();
    let mut thetas = sweep.theta_ns.clone();
    thetas.sort_by(f64::total_cmp);
    let grid: Vec<(f64, f64)> = sweep
        .g_mhz
        .iter()
        .flat_map(|&g| thetas.iter().map(move |&t| (g, t)))
        .collect();
    let cells: Vec<SweepCell> = grid
        .par_iter()
        .enumerate()
        .map(|(idx, &(g, theta))| {
            let opt = SussadeConfig {
                seed: derive_seed(cfg.optimizer.seed, idx as u64),
                max_evaluations: Some(sweep.max_evaluations_per_cell),
                ..cfg.optimizer.clone()
            };
            match optimize_cell(cfg, theta, g * 1e-3, &opt, None) {
                Ok(r) => SweepCell {
                    g_mhz: g,
                    theta_ns: theta,
                    fidelity: Some(r.fidelity),
                    evaluations: r.evaluations,
                    error: None,
                },
                Err(e) => SweepCell {
                    g_mhz: g,
                    theta_ns: theta,
                    fidelity: None,
                    evaluations: 0,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let thresholds: Vec<(f64, Option<f64>)> = sweep
        .g_mhz
        .iter()
        .map(|&g| {
            let pts: Vec<(f64, f64)> = cells
                .iter()
                .filter(|c| c.g_mhz == g)
                .filter_map(|c| c.fidelity.map(|f| (c.theta_ns, f)))
                .collect();
            (g, threshold_time(&pts, sweep.threshold))
        })
        .collect();
    let (gs, inv): (Vec<f64>, Vec<f64>) = thresholds.iter().filter_map(|&(g, t)| t.map(|t| (g, 1.0 / t))).unzip();
    Ok(SweepReport {
        cells,
        inverse_time_fit: linear_fit(&gs, &inv),
        thresholds,
    })
}

pub fn sweep_csv(cfg: &RunConfig, r: &SweepReport) -> String {
    let mut out = cfg.csv_preamble() + "g_mhz,theta_ns,fidelity\n";
    for c in &r.cells {
        let f = c.fidelity.map_or_else(|| "nan".to_string(), fmt_g12);
        let _ = writeln!(out, "{},{},{}", fmt_g12(c.g_mhz), fmt_g12(c.theta_ns), f);
    }
    out
}

pub fn threshold_csv(cfg: &RunConfig, r: &SweepReport) -> String {
    let mut out = cfg.csv_preamble() + "g_mhz,theta_star_ns,inverse_theta_star\n";
    for (g, t) in &r.thresholds {
        match t {
            Some(t) => {
                let _ = writeln!(out, "{},{},{}", fmt_g12(*g), fmt_g12(*t), fmt_g12(1.0 / t));
            }
            None => {
                let _ = writeln!(out, "{},nan,nan", fmt_g12(*g));
            }
        }
    }
    out
}

// -------------------------------------------------------------- robustness

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobustnessSpec {
    pub delta_khz: Vec<f64>,
    pub trials_per_point: usize,
}

impl Default for RobustnessSpec {
    fn default() -> Self {
        Self {
            delta_khz: vec![0.0, 100.0, 200.0, 400.0, 600.0, 800.0, 1000.0, 1500.0, 2000.0, 3000.0],
            trials_per_point: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub delta_khz: f64,
    pub mean_fidelity: f64,
    pub min_fidelity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RobustnessReport {
    pub unperturbed: f64,
    pub rows: Vec<RobustnessRow>,
    /// Largest grid `δε` up to which every point keeps mean `F ≥ 0.9999`.
    pub threshold_khz: Option<f64>,
}

pub fn cmd_robustness(cfg: &RunConfig, pulse: &PulseTable, spec: &RobustnessSpec, seed: u64) -> Result<RobustnessReport> {
    if spec.trials_per_point == 0 {
        return param_err("trials_per_point must be positive");
    }
    let chain = cfg.chain()?;
    let prop = Propagator::new(chain)?;
    let target = make_target(cfg.gate.synthesis_form());
    let substeps = cfg.substeps();
    let score = |p: &PulseTable| -> Result<f64> {
        Ok(compensated_fidelity(&prop.computational_unitary(p, substeps)?, &target).0)
    };
    let unperturbed = score(pulse)?;
    let mut deltas = spec.delta_khz.clone();
    deltas.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(deltas.len());
    for (pi, &delta) in deltas.iter().enumerate() {
        let fids: Vec<f64> = (0..spec.trials_per_point)
            .into_par_iter()
            .map(|trial| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((pi as u64) << 32) | trial as u64);
                score(&perturb_pulse(pulse, delta, &mut rng)?)
            })
            .collect::<Result<_>>()?;
        rows.push(RobustnessRow {
            delta_khz: delta,
            // accumulated as offsets so identical trials reproduce `unperturbed` exactly
            mean_fidelity: unperturbed + fids.iter().map(|f| f - unperturbed).sum::<f64>() / fids.len() as f64,
            min_fidelity: fids.iter().copied().fold(f64::INFINITY, f64::min),
        });
    }
    let threshold_khz = rows
        .iter()
        .take_while(|r| r.mean_fidelity >= ROBUST_FIDELITY)
        .last()
        .map(|r| r.delta_khz);
    Ok(RobustnessReport {
        unperturbed,
        rows,
        threshold_khz,
    })
}

pub fn robustness_csv(cfg: &RunConfig, r: &RobustnessReport, seed: u64) -> String {
    let mut out = format!("# config_sha256={} seed={}\n", cfg.digest(), seed);
    out.push_str("delta_khz,mean_fidelity,min_fidelity\n");
    for row in &r.rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_g12(row.delta_khz),
            fmt_g12(row.mean_fidelity),
            fmt_g12(row.min_fidelity)
        );
    }
    out
}

// ------------------------------------------------------------ decoherence

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoherenceSpec {
    pub t_us: Vec<f64>,
}

impl Default for DecoherenceSpec {
    fn default() -> Self {
        Self {
            t_us: vec![10.0, 20.0, 30.0, 60.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecoherenceRow {
    pub t_us: f64,
    pub fbar: f64,
    /// `(1 − F̄)·T/Θ`
    pub coefficient: f64,
    pub max_trace_deficit: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecoherenceReport {
    pub intrinsic_fidelity: f64,
    pub theta_ns: f64,
    pub rows: Vec<DecoherenceRow>,
    /// Least-squares `c` in `1 − F̄ ≈ c·Θ/T`.
    pub fitted_coefficient: f64,
}

pub fn cmd_decoherence(cfg: &RunConfig, pulse: &PulseTable, spec: &DecoherenceSpec) -> Result<DecoherenceReport> {
    let chain = cfg.chain()?;
    let prop = Propagator::new(chain)?;
    let target = make_target(cfg.gate.synthesis_form());
    let substeps = cfg.substeps();
    let (intrinsic, comp) = compensated_fidelity(&prop.computational_unitary(pulse, substeps)?, &target);
    let base = cfg.noise.unwrap_or_default();
    let theta = pulse.theta();
    let rows: Vec<DecoherenceRow> = spec
        .t_us
        .par_iter()
        .map(|&t_us| {
            let noise = NoiseSpec {
                t1: t_us * 1e3,
                t2: t_us * 1e3,
                ..base
            };
            let ev = average_state_fidelity_with(&prop, pulse, &target, &noise, &comp, substeps)?;
            Ok(DecoherenceRow {
                t_us,
                fbar: ev.fbar,
                coefficient: (1.0 - ev.fbar) * t_us * 1e3 / theta,
                max_trace_deficit: ev.max_trace_deficit,
            })
        })
        .collect::<Result<_>>()?;
    // minimise Σ (y − c·x)² with x = Θ/T, y = 1 − F̄
    let (sxy, sxx) = rows.iter().fold((0.0, 0.0), |(a, b), r| {
        let x = theta / (r.t_us * 1e3);
        (a + x * (1.0 - r.fbar), b + x * x)
    });
    Ok(DecoherenceReport {
        intrinsic_fidelity: intrinsic,
        theta_ns: theta,
        rows,
        fitted_coefficient: if sxx > 0.0 { sxy / sxx } else { f64::NAN },
    })
}

pub fn decoherence_csv(cfg: &RunConfig, r: &DecoherenceReport) -> String {
    let mut out = cfg.csv_preamble() + "T_us,Fbar\n";
    for row in &r.rows {
        let _ = writeln!(out, "{},{}", fmt_g12(row.t_us), fmt_g12(row.fbar));
    }
    out
}

// ---------------------------------------------------------------- spectrum

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSpec {
    /// Frequencies of all transmons, GHz; the swept entry is overwritten.
    pub base_ghz: Vec<f64>,
    /// Zero-based index of the swept transmon.
    pub swept: usize,
    pub range_ghz: (f64, f64),
    pub points: usize,
    pub truncation: Option<usize>,
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        Self {
            base_ghz: vec![4.8, 6.0, 6.8],
            swept: 1,
            range_ghz: (4.5, 7.5),
            points: 301,
            truncation: Some(3),
        }
    }
}

pub fn cmd_spectrum(cfg: &RunConfig, spec: &SpectrumSpec) -> Result<SpectrumTable> {
    let chain = cfg.chain()?;
    if spec.base_ghz.len() != chain.n_transmons {
        return param_err("base_ghz must list one frequency per transmon");
    }
    spectrum_sweep(&chain, &spec.base_ghz, spec.swept, spec.range_ghz, spec.points, spec.truncation)
}

pub fn spectrum_csv(cfg: &RunConfig, t: &SpectrumTable) -> String {
    cfg.csv_preamble() + &t.to_csv()
}

// ---------------------------------------------------------------- cz-study

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CzStudySpec {
    /// Fixed frequency of transmon 1, GHz.
    pub eps1_ghz: f64,
    pub omega_off_ghz: f64,
    pub t_ramp_ns: f64,
    /// Scan window for the plateau time, ns.
    pub t_on_range_ns: (f64, f64),
    pub t_on_points: usize,
    /// Offsets from `ε₁ + η` tried for `ω_on`, GHz.
    pub omega_on_offsets_ghz: Vec<f64>,
    pub steps_per_ns: usize,
}

impl Default for CzStudySpec {
    fn default() -> Self {
        Self {
            eps1_ghz: 6.5,
            omega_off_ghz: 7.5,
            t_ramp_ns: 1.0,
            t_on_range_ns: (2.0, 30.0),
            t_on_points: 113,
            omega_on_offsets_ghz: (-10..=10).map(|i| i as f64 * 2e-3).collect(),
            steps_per_ns: 50,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CzStudyReport {
    pub g_mhz: f64,
    /// Prediction `1/(2√2·g)` for the plateau time, ns.
    pub predicted_t_on: f64,
    /// `(t_on, fidelity)` at `ω_on = ε₁ + η`.
    pub scan: Vec<(f64, f64)>,
    pub best_t_on: f64,
    pub best_fidelity: f64,
    /// Best `(ω_on, t_on, fidelity)` over the ω_on offsets.
    pub tuned: (f64, f64, f64),
}

/// Compensated two-qubit CZ fidelity of the avoided-crossing pulse.
pub fn cz_fidelity(prop: &Propagator, spec: &CzStudySpec, omega_on: f64, t_on: f64) -> Result<f64> {
    let pulse = CzPulseSpec::from_t_on(spec.omega_off_ghz, omega_on, spec.t_ramp_ns, t_on)?;
    let steps = ((pulse.t_gate * spec.steps_per_ns as f64).ceil() as usize).max(1);
    let eps1 = spec.eps1_ghz;
    let sectors = prop.sector_unitaries_fn(pulse.t_gate, steps, |t, f| {
        f[0] = eps1;
        f[1] = cz_pulse_unchecked(&pulse, t);
    })?;
    Ok(compensated_fidelity(&prop.project(&sectors), &make_target(GateName::Cz)).0)
}

fn refine_peak(f: &dyn Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    // golden-section search on a bracket assumed unimodal
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    for _ in 0..40 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = f(b)?;
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = f(a)?;
        }
    }
    Ok(if fa > fb { (a, fa) } else { (b, fb) })
}

pub fn cmd_cz_study(cfg: &RunConfig, spec: &CzStudySpec) -> Result<CzStudyReport> {
    let g = cfg.g_mhz * 1e-3;
    let eta = cfg.eta_mhz * 1e-3;
    let chain = TransmonChainSpec {
        freq_min: f64::NEG_INFINITY,
        freq_max: f64::INFINITY,
        ..TransmonChainSpec::cubic(2, eta, g)
    };
    let prop = Propagator::new(chain)?;
    if spec.t_on_points < 3 {
        return param_err("t_on scan needs at least three points");
    }
    let (t0, t1) = spec.t_on_range_ns;
    let step = (t1 - t0) / (spec.t_on_points - 1) as f64;
    let omega_res = spec.eps1_ghz + eta;
    let grid: Vec<f64> = (0..spec.t_on_points).map(|i| t0 + step * i as f64).collect();
    let scan: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&t| Ok((t, cz_fidelity(&prop, spec, omega_res, t)?)))
        .collect::<Result<_>>()?;
    let peak = |s: &[(f64, f64)]| s.iter().copied().fold((f64::NAN, f64::NEG_INFINITY), |b, x| if x.1 > b.1 { x } else { b });
    let (tc, _) = peak(&scan);
    let (best_t_on, best_fidelity) = refine_peak(
        &|t| cz_fidelity(&prop, spec, omega_res, t),
        (tc - step).max(t0),
        (tc + step).min(t1),
    )?;
    let tuned = spec
        .omega_on_offsets_ghz
        .par_iter()
        .map(|&d| {
            let w = omega_res + d;
            let (t, f) = refine_peak(
                &|t| cz_fidelity(&prop, spec, w, t),
                (best_t_on - 2.0 * step).max(t0),
                (best_t_on + 2.0 * step).min(t1),
            )?;
            Ok((w, t, f))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((omega_res, best_t_on, best_fidelity), |b, x| if x.2 > b.2 { x } else { b });
    Ok(CzStudyReport {
        g_mhz: cfg.g_mhz,
        predicted_t_on: 1.0 / (2.0 * 2f64.sqrt() * g),
        scan,
        best_t_on,
        best_fidelity,
        tuned,
    })
}

pub fn cz_csv(cfg: &RunConfig, r: &CzStudyReport) -> String {
    let mut out = cfg.csv_preamble() + "t_on_ns,fidelity\n";
    for (t, f) in &r.scan {
        let _ = writeln!(out, "{},{}", fmt_g12(*t), fmt_g12(*f));
    }
    out
}

// ------------------------------------------------------------------ verify

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

/// Truth tables of every gate plus a quick invariant suite.
pub fn cmd_verify(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for name in GateName::ALL {
        let t: GateTarget = make_target(name);
        let report = verify_truth_table(&t);
        out.push(check(
            &format!("truth table {name}"),
            report.passed(),
            format!("{} rows", report.rows.len()),
        ));
        let d = unitarity_defect(&t.matrix);
        out.push(check(&format!("unitary {name}"), d < 1e-12, format!("defect {d:e}")));
    }
    let spec = TransmonChainSpec::three_qubit();
    let prop = Propagator::new(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let values: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..6).map(|_| rand::Rng::random_range(&mut rng, -2.5..2.5)).collect())
            .collect();
        let p = PulseTable::new(6.0, PulseShape::PiecewiseConstant, values)?;
        let truncated = prop.assemble(&prop.sector_unitaries(&p, 1)?);
        let full = full_space_unitary(&spec, &p, 1)?;
        let idx = prop.model().basis.full_indices();
        let block = crate::linalg::CMatrix::from_fn(idx.len(), idx.len(), |i, j| full[(idx[i], idx[j])]);
        worst = worst.max(max_abs_diff(&truncated, &block));
    }
    out.push(check("truncation equivalence", worst < 1e-10, format!("max deviation {worst:e}")));
    let deficit = [1e-5, 1e-4, 1e-3]
        .iter()
        .map(|&r| {
            Ok(amplitude_damping_kraus(r, 1.0, 3)?
                .completeness_deficit
                .max(phase_damping_kraus(r, 1.0, 3)?.completeness_deficit))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.push(check("Kraus completeness", deficit < 1e-9, format!("deficit {deficit:e}")));
    let ident = make_target(GateName::Ccz);
    let (f, _) = compensated_fidelity(&ident.matrix, &ident);
    out.push(check("fidelity of exact target", (f - 1.0).abs() < 1e-12, format!("{f}")));
    Ok(out)
}
