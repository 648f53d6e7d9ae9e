//! Time-ordered evolution under a control pulse, projection onto the qubit
//! subspace and local-Z phase compensation.
//!
//! The propagator works sector by sector: the truncated Hamiltonian is block
//! diagonal in the total excitation number, and every block is real
//! symmetric, so each step exponential is an eigen-decomposition of a matrix
//! no larger than 10×10. Phases accumulate as `exp(−i·2π·(H/h)·t)` with `H/h`
//! in GHz and `t` in ns.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{param_err, Result};
use crate::gates::GateTarget;
use crate::linalg::{expm, CMatrix, SymmetricSpectrum};
use crate::model::{build_hamiltonian, BasisTag, ExcitationModel, OperatorMatrix, TransmonChainSpec};
use crate::pulses::{PulseShape, PulseTable};

/// Default substeps per interval for smooth (erf) pulses.
pub const DEFAULT_ERF_SUBSTEPS: usize = 20;

pub fn default_substeps(shape: PulseShape) -> usize {
    match shape {
        PulseShape::PiecewiseConstant => 1,
        PulseShape::PiecewiseErf => DEFAULT_ERF_SUBSTEPS,
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub full_unitary: OperatorMatrix,
    pub computational_unitary: CMatrix,
    /// `1 − ‖P U |k⟩‖²` for every computational basis state `k`.
    pub leakage: Vec<f64>,
}

/// Evolution of the truncated chain, reused across many pulses.
#[derive(Debug, Clone)]
pub struct Propagator {
    model: ExcitationModel,
    /// `(sector, local index)` of each computational state, binary order
    comp: Vec<(usize, usize)>,
}

impl Propagator {
    pub fn new(spec: TransmonChainSpec) -> Result<Self> {
        let model = ExcitationModel::three_qubit(spec)?;
        let comp = model
            .basis
            .computational_indices()
            .into_iter()
            .map(|g| {
                let s = (0..model.n_sectors())
                    .find(|&s| model.sector_range(s).contains(&g))
                    .expect("every state lives in a sector");
                (s, g - model.sector_range(s).start)
            })
            .collect();
        Ok(Self { model, comp })
    }

    pub fn spec(&self) -> &TransmonChainSpec {
        &self.model.spec
    }

    pub fn model(&self) -> &ExcitationModel {
        &self.model
    }

    fn check(&self, p: &PulseTable, substeps: usize) -> Result<()> {
        if p.n_transmons() != self.model.spec.n_transmons {
            return param_err(format!(
                "pulse drives {} transmons, chain has {}",
                p.n_transmons(),
                self.model.spec.n_transmons
            ));
        }
        if substeps == 0 {
            return param_err("substeps_per_bin must be at least 1");
        }
        Ok(())
    }

    /// Step unitaries of one sector for each pulse interval.
    fn interval_step(&self, p: &PulseTable, interval: usize, substeps: usize, freqs: &mut [f64]) -> Vec<CMatrix> {
        let dt = p.dt();
        let t0 = interval as f64 * dt;
        let n_sec = self.model.n_sectors();
        let mut out: Vec<CMatrix> = (0..n_sec)
            .map(|s| {
                let n = self.model.sector_range(s).len();
                CMatrix::identity(n, n)
            })
            .collect();
        // piecewise-constant values do not change inside a bin: one exact step
        let (steps, dts) = match p.shape() {
            PulseShape::PiecewiseConstant => (1, dt),
            PulseShape::PiecewiseErf => (substeps, dt / substeps as f64),
        };
        for j in 0..steps {
            let t = (t0 + (j as f64 + 0.5) * dts).min(p.theta());
            p.sample_into(t, freqs);
            for (s, u) in out.iter_mut().enumerate() {
                let e = SymmetricSpectrum::new(self.model.sector_hamiltonian(s, freqs)).unitary(TAU * dts);
                *u = e * &*u;
            }
        }
        out
    }

    /// Per-interval sector unitaries, in time order.
    pub fn interval_unitaries(&self, p: &PulseTable, substeps: usize) -> Result<Vec<Vec<CMatrix>>> {
        self.check(p, substeps)?;
        let mut freqs = vec![0.0; p.n_transmons()];
        Ok((0..p.n_intervals())
            .map(|l| self.interval_step(p, l, substeps, &mut freqs))
            .collect())
    }

    /// Sector blocks of `U(Θ)`.
    pub fn sector_unitaries(&self, p: &PulseTable, substeps: usize) -> Result<Vec<CMatrix>> {
        self.check(p, substeps)?;
        let mut freqs = vec![0.0; p.n_transmons()];
        let mut total: Option<Vec<CMatrix>> = None;
        for l in 0..p.n_intervals() {
            let step = self.interval_step(p, l, substeps, &mut freqs);
            total = Some(match total {
                None => step,
                Some(acc) => step.iter().zip(acc).map(|(e, u)| e * u).collect(),
            });
        }
        Ok(total.expect("pulses have at least one interval"))
    }

    /// Sector blocks of `U(Θ)` for an arbitrary frequency schedule, using
    /// `n_steps` midpoint steps.
    pub fn sector_unitaries_fn<F>(&self, theta: f64, n_steps: usize, mut freqs_at: F) -> Result<Vec<CMatrix>>
    where
        F: FnMut(f64, &mut [f64]),
    {
        if n_steps == 0 || !(theta > 0.0) {
            return param_err("schedule needs a positive duration and at least one step");
        }
        let dts = theta / n_steps as f64;
        let mut freqs = vec![0.0; self.model.spec.n_transmons];
        let mut out: Vec<CMatrix> = (0..self.model.n_sectors())
            .map(|s| {
                let n = self.model.sector_range(s).len();
                CMatrix::identity(n, n)
            })
            .collect();
        for j in 0..n_steps {
            freqs_at((j as f64 + 0.5) * dts, &mut freqs);
            for (s, u) in out.iter_mut().enumerate() {
                let e = SymmetricSpectrum::new(self.model.sector_hamiltonian(s, &freqs)).unitary(TAU * dts);
                *u = e * &*u;
            }
        }
        Ok(out)
    }

    /// Assembles sector blocks into a dense matrix over the truncated basis.
    pub fn assemble(&self, sectors: &[CMatrix]) -> CMatrix {
        let n = self.model.dim();
        let mut u = CMatrix::zeros(n, n);
        for (s, block) in sectors.iter().enumerate() {
            let r = self.model.sector_range(s);
            u.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(block);
        }
        u
    }

    /// `P U P†` from sector blocks.
    pub fn project(&self, sectors: &[CMatrix]) -> CMatrix {
        let n = self.comp.len();
        CMatrix::from_fn(n, n, |a, b| {
            let (sa, ia) = self.comp[a];
            let (sb, ib) = self.comp[b];
            if sa == sb {
                sectors[sa][(ia, ib)]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn computational_unitary(&self, p: &PulseTable, substeps: usize) -> Result<CMatrix> {
        Ok(self.project(&self.sector_unitaries(p, substeps)?))
    }

    pub fn evolve(&self, p: &PulseTable, substeps: usize) -> Result<EvolutionResult> {
        let sectors = self.sector_unitaries(p, substeps)?;
        let full = self.assemble(&sectors);
        let ucb = self.project(&sectors);
        let leakage = (0..ucb.ncols())
            .map(|j| 1.0 - ucb.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>())
            .collect();
        Ok(EvolutionResult {
            full_unitary: OperatorMatrix {
                basis: BasisTag::Excitation {
                    n_transmons: self.model.spec.n_transmons,
                    max_excitation: self.model.basis.max_excitation,
                },
                matrix: full,
            },
            computational_unitary: ucb,
            leakage,
        })
    }
}

pub fn propagate(spec: &TransmonChainSpec, p: &PulseTable, substeps: usize) -> Result<EvolutionResult> {
    Propagator::new(*spec)?.evolve(p, substeps)
}

/// `U(Θ)` in the full `4^K` space by dense Padé exponentials of the
/// untruncated Hamiltonian, one per substep. Independent of the sector
/// route and much slower; used as a cross-check.
pub fn full_space_unitary(spec: &TransmonChainSpec, p: &PulseTable, substeps: usize) -> Result<CMatrix> {
    if p.n_transmons() != spec.n_transmons || substeps == 0 {
        return param_err("pulse does not fit the chain or substeps is zero");
    }
    let steps = match p.shape() {
        PulseShape::PiecewiseConstant => 1,
        PulseShape::PiecewiseErf => substeps,
    };
    let dts = p.dt() / steps as f64;
    let dim = spec.full_dim();
    let mut u = CMatrix::identity(dim, dim);
    for l in 0..p.n_intervals() {
        for j in 0..steps {
            let t = (l as f64 * p.dt() + (j as f64 + 0.5) * dts).min(p.theta());
            let h = build_hamiltonian(spec, &p.sample(t)?)?;
            u = expm(&(h.matrix * Complex64::new(0.0, -TAU * dts))) * u;
        }
    }
    Ok(u)
}

/// Local z-rotation angles applied before and after the target gate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCompensation {
    pub beta_pre: Vec<f64>,
    pub beta_post: Vec<f64>,
}

impl PhaseCompensation {
    pub fn zero(n_qubits: usize) -> Self {
        Self {
            beta_pre: vec![0.0; n_qubits],
            beta_post: vec![0.0; n_qubits],
        }
    }

    /// `U_post · U_target · U_pre`.
    pub fn apply(&self, target: &CMatrix) -> CMatrix {
        let pre = local_z_diagonal(&self.beta_pre);
        let post = local_z_diagonal(&self.beta_post);
        CMatrix::from_fn(target.nrows(), target.ncols(), |i, j| post[i] * target[(i, j)] * pre[j])
    }
}

/// Diagonal of `R_z(β1) ⊗ … ⊗ R_z(βK)` with `R_z(β) = diag(1, e^{−iβ})`.
pub fn local_z_diagonal(betas: &[f64]) -> Vec<Complex64> {
    let k = betas.len();
    (0..1usize << k)
        .map(|s| {
            let phase: f64 = (0..k)
                .filter(|&q| (s >> (k - 1 - q)) & 1 == 1)
                .map(|q| betas[q])
                .sum();
            Complex64::from_polar(1.0, -phase)
        })
        .collect()
}

/// Uncompensated trace overlap `|Tr(T† U)| / d`.
pub fn trace_fidelity(u_cb: &CMatrix, target: &CMatrix) -> f64 {
    let d = target.nrows() as f64;
    let tr: Complex64 = target
        .iter()
        .zip(u_cb.iter())
        .map(|(t, u)| t.conj() * u)
        .sum();
    tr.norm() / d
}

/// Operator-norm distance `‖P U P† − T‖₂` (diagnostic only).
pub fn operator_norm_distance(u_cb: &CMatrix, target: &CMatrix) -> f64 {
    (u_cb - target)
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

const COMPENSATION_STARTS: usize = 8;
const COMPENSATION_TOL: f64 = 1e-10;
const COMPENSATION_MAX_SWEEPS: usize = 500;

/// One term `w · e^{i(Σ pre-bits·β_pre + Σ post-bits·β_post)}` of the
/// compensated trace.
struct OverlapTerm {
    weight: Complex64,
    /// bitmask over the 2K angles: bits 0..K for `β_pre`, K..2K for `β_post`
    mask: u32,
}

fn overlap(terms: &[OverlapTerm], angles: &[f64]) -> Complex64 {
    terms
        .iter()
        .map(|t| {
            let phase: f64 = (0..angles.len())
                .filter(|&a| t.mask >> a & 1 == 1)
                .map(|a| angles[a])
                .sum();
            t.weight * Complex64::from_polar(1.0, phase)
        })
        .sum()
}

/// Maximises `|Tr((U_post T U_pre)† U_cb)| / d` over all local-Z angles.
///
/// Each angle enters the trace as `A + B·e^{iβ}`, so a coordinate update
/// has the closed form `β = arg A − arg B`. Coordinate ascent is restarted
/// from the origin and from fixed pseudo-random points; the best optimum is
/// returned with angles in `[0, 2π)`.
pub fn compensated_fidelity(u_cb: &CMatrix, target: &GateTarget) -> (f64, PhaseCompensation) {
    let t = &target.matrix;
    let d = t.nrows();
    let k = target.n_qubits();
    assert_eq!(u_cb.shape(), t.shape(), "target and propagator dimensions differ");
    let bits = |s: usize| -> u32 {
        // qubit q (MSB first) -> angle index q
        (0..k).filter(|&q| (s >> (k - 1 - q)) & 1 == 1).fold(0, |m, q| m | 1 << q)
    };
    let mut terms = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if t[(i, j)].norm() == 0.0 {
                continue;
            }
            terms.push(OverlapTerm {
                weight: t[(i, j)].conj() * u_cb[(i, j)],
                mask: bits(j) | bits(i) << k,
            });
        }
    }
    let n_angles = 2 * k;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
    let mut best = (-1.0, vec![0.0; n_angles]);
    for start in 0..COMPENSATION_STARTS {
        let mut angles: Vec<f64> = if start == 0 {
            vec![0.0; n_angles]
        } else {
            (0..n_angles).map(|_| rng.random_range(0.0..TAU)).collect()
        };
        let mut value = overlap(&terms, &angles).norm();
        for _ in 0..COMPENSATION_MAX_SWEEPS {
            let before = value;
            for a in 0..n_angles {
                let mut with = Complex64::new(0.0, 0.0);
                let mut without = Complex64::new(0.0, 0.0);
                for term in &terms {
                    let phase: f64 = (0..n_angles)
                        .filter(|&b| b != a && term.mask >> b & 1 == 1)
                        .map(|b| angles[b])
                        .sum();
                    let z = term.weight * Complex64::from_polar(1.0, phase);
                    if term.mask >> a & 1 == 1 {
                        with += z;
                    } else {
                        without += z;
                    }
                }
                if with.norm() > 0.0 && without.norm() > 0.0 {
                    angles[a] = without.arg() - with.arg();
                }
                value = (without + with * Complex64::from_polar(1.0, angles[a])).norm();
            }
            if value - before <= COMPENSATION_TOL * before.max(1e-300) {
                break;
            }
        }
        if value > best.0 + 1e-15 {
            best = (value, angles);
        }
    }
    let (value, mut angles) = best;
    if target.is_diagonal() {
        // only β_pre + β_post matters for a diagonal target
        for q in 0..k {
            angles[q] += angles[q + k];
            angles[q + k] = 0.0;
        }
    }
    let wrap = |x: f64| {
        let y = x.rem_euclid(TAU);
        if TAU - y < 1e-12 || y < 1e-12 {
            0.0
        } else {
            y
        }
    };
    let comp = PhaseCompensation {
        beta_pre: angles[..k].iter().map(|&x| wrap(x)).collect(),
        beta_post: angles[k..].iter().map(|&x| wrap(x)).collect(),
    };
    ((value / d as f64).min(1.0), comp)
}

/// Gate objective evaluated on flat genomes; the quantity the optimizer
/// maximises.
#[derive(Debug, Clone)]
pub struct GateObjective {
    pub propagator: Propagator,
    pub target: GateTarget,
    pub theta: f64,
    pub shape: PulseShape,
    pub substeps: usize,
    pub compensate: bool,
}

impl GateObjective {
    pub fn new(spec: TransmonChainSpec, target: GateTarget, theta: f64, shape: PulseShape) -> Result<Self> {
        if target.n_qubits() != spec.n_transmons {
            return param_err(format!(
                "{} acts on {} qubits but the chain has {} transmons",
                target.name,
                target.n_qubits(),
                spec.n_transmons
            ));
        }
        Ok(Self {
            propagator: Propagator::new(spec)?,
            target,
            theta,
            shape,
            substeps: default_substeps(shape),
            compensate: true,
        })
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps;
        self
    }

    pub fn n_transmons(&self) -> usize {
        self.propagator.spec().n_transmons
    }

    pub fn pulse(&self, genome: &[f64]) -> Result<PulseTable> {
        PulseTable::from_genome(self.theta, self.shape, self.n_transmons(), genome)
    }

    pub fn fidelity_of(&self, p: &PulseTable) -> Result<f64> {
        let u = self.propagator.computational_unitary(p, self.substeps)?;
        Ok(if self.compensate {
            compensated_fidelity(&u, &self.target).0
        } else {
            trace_fidelity(&u, &self.target.matrix)
        })
    }

    pub fn evaluate(&self, genome: &[f64]) -> Result<f64> {
        self.fidelity_of(&self.pulse(genome)?)
    }
}

/// Compensated intrinsic fidelity of a pulse against a target.
pub fn fitness(spec: &TransmonChainSpec, p: &PulseTable, target: &GateTarget, substeps: usize) -> Result<f64> {
    let u = Propagator::new(*spec)?.computational_unitary(p, substeps)?;
    if target.dim() != u.nrows() {
        return param_err("target dimension does not match the chain");
    }
    Ok(compensated_fidelity(&u, target).0)
}

/// Magnitudes and phases of `U_cb`, for inspection.
#[derive(Debug, Serialize)]
pub struct UnitaryDump {
    pub magnitude: Vec<Vec<f64>>,
    pub phase: Vec<Vec<f64>>,
    pub leakage: Vec<f64>,
}

impl EvolutionResult {
    pub fn dump_json(&self) -> Result<String> {
        let u = &self.computational_unitary;
        let dump = UnitaryDump {
            magnitude: (0..u.nrows()).map(|i| (0..u.ncols()).map(|j| u[(i, j)].norm()).collect()).collect(),
            phase: (0..u.nrows())
                .map(|i| (0..u.ncols()).map(|j| u[(i, j)].arg().rem_euclid(2.0 * PI)).collect())
                .collect(),
            leakage: self.leakage.clone(),
        };
        Ok(serde_json::to_string_pretty(&dump)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{make_target, GateName};
    use crate::linalg::{max_abs_diff, unitarity_defect};

    fn random_pulse(seed: u64, shape: PulseShape, n: usize, theta: f64) -> PulseTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..3).map(|_| (0..n).map(|_| rng.random_range(-2.5..2.5)).collect()).collect();
        PulseTable::new(theta, shape, rows).unwrap()
    }

    #[test]
    fn tiny_duration_gives_identity() {
        let spec = TransmonChainSpec::three_qubit();
        let p = PulseTable::constant(1e-14, PulseShape::PiecewiseConstant, 2, &[1.0, 2.0, -1.0]).unwrap();
        let r = propagate(&spec, &p, 1).unwrap();
        assert!(max_abs_diff(&r.full_unitary.matrix, &CMatrix::identity(20, 20)) < 1e-10);
    }

    #[test]
    fn uncoupled_single_mode_phase() {
        let spec = TransmonChainSpec::three_qubit().with_coupling(0.0);
        let (c0, theta) = (0.37, 5.0);
        let p = PulseTable::constant(theta, PulseShape::PiecewiseConstant, 5, &[c0, 0.0, 0.0]).unwrap();
        let r = propagate(&spec, &p, 1).unwrap();
        let u = &r.computational_unitary;
        let expect = Complex64::from_polar(1.0, -TAU * c0 * theta);
        assert!((u[(0b100, 0b100)] - expect).norm() < 1e-12);
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert!(u[(i, j)].norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn erf_substep_convergence() {
        let spec = TransmonChainSpec::three_qubit();
        let p = random_pulse(11, PulseShape::PiecewiseErf, 27, 26.0);
        let prop = Propagator::new(spec).unwrap();
        let a = prop.evolve(&p, 10).unwrap().full_unitary.matrix;
        let b = prop.evolve(&p, 40).unwrap().full_unitary.matrix;
        let c = prop.evolve(&p, 80).unwrap().full_unitary.matrix;
        let d10 = max_abs_diff(&a, &c);
        let d40 = max_abs_diff(&b, &c);
        // second-order convergence: quadrupling the substeps cuts the error ~16x
        assert!(d40 < d10 / 8.0, "{d10} {d40}");
    }

    #[test]
    fn concatenation_at_bin_boundary() {
        let spec = TransmonChainSpec::three_qubit();
        let p = random_pulse(5, PulseShape::PiecewiseConstant, 10, 10.0);
        let first = PulseTable::new(5.0, PulseShape::PiecewiseConstant, p.values().iter().map(|r| r[..5].to_vec()).collect()).unwrap();
        let second = PulseTable::new(5.0, PulseShape::PiecewiseConstant, p.values().iter().map(|r| r[5..].to_vec()).collect()).unwrap();
        let prop = Propagator::new(spec).unwrap();
        let u = prop.evolve(&p, 1).unwrap().full_unitary.matrix;
        let u1 = prop.evolve(&first, 1).unwrap().full_unitary.matrix;
        let u2 = prop.evolve(&second, 1).unwrap().full_unitary.matrix;
        assert!(max_abs_diff(&u, &(u2 * u1)) < 1e-10);
    }

    #[test]
    fn leakage_plus_population_is_one() {
        let spec = TransmonChainSpec::three_qubit();
        let prop = Propagator::new(spec).unwrap();
        for seed in 0..20 {
            let p = random_pulse(seed, PulseShape::PiecewiseConstant, 8, 8.0);
            let r = prop.evolve(&p, 1).unwrap();
            assert!(unitarity_defect(&r.full_unitary.matrix) < 1e-9);
            for (j, leak) in r.leakage.iter().enumerate() {
                let pop: f64 = r.computational_unitary.column(j).iter().map(|z| z.norm_sqr()).sum();
                assert!(pop <= 1.0 + 1e-9);
                assert!((leak + pop - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn transmon_count_mismatch_rejected() {
        let spec = TransmonChainSpec::three_qubit();
        let p = PulseTable::constant(2.0, PulseShape::PiecewiseConstant, 2, &[0.0, 0.0]).unwrap();
        assert!(propagate(&spec, &p, 1).is_err());
        let q = PulseTable::constant(2.0, PulseShape::PiecewiseConstant, 2, &[0.0; 3]).unwrap();
        assert!(propagate(&spec, &q, 0).is_err());
    }

    #[test]
    fn exact_target_has_unit_fidelity_and_zero_phases() {
        for name in [GateName::Ccz, GateName::Fredkin, GateName::Czz, GateName::Toffoli] {
            let t = make_target(name);
            let (f, comp) = compensated_fidelity(&t.matrix, &t);
            assert!((f - 1.0).abs() < 1e-12, "{name}");
            assert!(comp.beta_pre.iter().chain(&comp.beta_post).all(|&b| b == 0.0), "{name}: {comp:?}");
        }
    }

    #[test]
    fn local_z_dressing_is_compensated() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for name in [GateName::Ccz, GateName::Fredkin, GateName::Czz, GateName::Cxx] {
            let t = make_target(name);
            for _ in 0..10 {
                let post: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..TAU)).collect();
                let pre: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..TAU)).collect();
                let dressed = PhaseCompensation {
                    beta_pre: pre,
                    beta_post: post,
                }
                .apply(&t.matrix)
                    * Complex64::from_polar(1.0, rng.random_range(0.0..TAU));
                let (f, comp) = compensated_fidelity(&dressed, &t);
                assert!((f - 1.0).abs() < 1e-9, "{name}: {f}");
                assert!(comp.beta_pre.iter().chain(&comp.beta_post).all(|&b| (0.0..TAU).contains(&b)));
                assert!((trace_fidelity(&dressed, &comp.apply(&t.matrix)) - f).abs() < 1e-12);
            }
        }
    }

    /// Dense grid over the summed angles followed by a fine local search.
    /// For diagonal targets only `β_pre + β_post` matters, so three angles
    /// span the whole class.
    fn grid_oracle(u: &CMatrix, t: &CMatrix) -> f64 {
        let n = 64;
        let eval = |b: [f64; 3]| {
            let dz = local_z_diagonal(&b);
            let tr: Complex64 = (0..8).map(|i| (t[(i, i)] * dz[i]).conj() * u[(i, i)]).sum();
            tr.norm() / 8.0
        };
        let mut best = ([0.0; 3], 0.0);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let b = [i as f64, j as f64, k as f64].map(|x| x * TAU / n as f64);
                    let v = eval(b);
                    if v > best.1 {
                        best = (b, v);
                    }
                }
            }
        }
        let mut step = TAU / n as f64;
        while step > 1e-9 {
            let mut improved = false;
            for a in 0..3 {
                for s in [-step, step] {
                    let mut b = best.0;
                    b[a] += s;
                    let v = eval(b);
                    if v > best.1 {
                        best = (b, v);
                        improved = true;
                    }
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
        best.1
    }

    #[test]
    fn identity_against_ccz_matches_grid_oracle() {
        let t = make_target(GateName::Ccz);
        let id = CMatrix::identity(8, 8);
        assert!((trace_fidelity(&id, &t.matrix) - 0.75).abs() < 1e-15);
        let (f, _) = compensated_fidelity(&id, &t);
        let oracle = grid_oracle(&id, &t.matrix);
        assert!((f - oracle).abs() < 1e-9, "{f} vs {oracle}");
        assert!(f >= 0.75);
    }

    #[test]
    fn random_unitaries_match_grid_oracle() {
        let spec = TransmonChainSpec::three_qubit();
        let prop = Propagator::new(spec).unwrap();
        let t = make_target(GateName::Ccz);
        for seed in 0..3 {
            let p = random_pulse(100 + seed, PulseShape::PiecewiseConstant, 6, 6.0);
            let u = prop.computational_unitary(&p, 1).unwrap();
            let (f, _) = compensated_fidelity(&u, &t);
            let oracle = grid_oracle(&u, &t.matrix);
            assert!(f >= oracle - 1e-9, "{f} vs {oracle}");
            assert!(f >= trace_fidelity(&u, &t.matrix) - 1e-15);
        }
    }

    #[test]
    fn fitness_of_realized_gate_is_one() {
        let spec = TransmonChainSpec::three_qubit();
        let p = random_pulse(8, PulseShape::PiecewiseConstant, 6, 6.0);
        let u = propagate(&spec, &p, 1).unwrap().computational_unitary;
        // normalize leakage away so the realized map is exactly unitary
        let svd = u.clone().svd(true, true);
        let polar = svd.u.unwrap() * svd.v_t.unwrap();
        let realized = GateTarget {
            name: GateName::Ccz,
            matrix: polar.clone(),
            truth_table: vec![],
        };
        let (f, _) = compensated_fidelity(&polar, &realized);
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_is_global_phase_invariant() {
        let spec = TransmonChainSpec::three_qubit();
        let p = random_pulse(21, PulseShape::PiecewiseConstant, 6, 6.0);
        let u = propagate(&spec, &p, 1).unwrap().computational_unitary;
        let t = make_target(GateName::Fredkin);
        let (f1, _) = compensated_fidelity(&u, &t);
        let (f2, _) = compensated_fidelity(&(u.clone() * Complex64::from_polar(1.0, 1.234)), &t);
        assert!((f1 - f2).abs() < 1e-12);
        assert!(f1 <= 1.0 + 1e-12 && f1 >= 0.0);
    }

    #[test]
    fn operator_norm_distance_is_zero_for_exact_gate() {
        let t = make_target(GateName::Fredkin);
        assert!(operator_norm_distance(&t.matrix, &t.matrix) < 1e-15);
        assert!((operator_norm_distance(&(-t.matrix.clone()), &t.matrix) - 2.0).abs() < 1e-12);
    }
}
