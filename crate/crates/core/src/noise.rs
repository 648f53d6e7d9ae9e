//! Amplitude- and phase-damping Kraus channels acting on each transmon, and
//! the average state fidelity of a pulse under them.
//!
//! Density matrices live in the full `4^K` product space. Each time bin is
//! one unitary step (the truncated propagator, identity on states above the
//! excitation cut) followed by the per-site channels for the bin duration.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};
use crate::gates::GateTarget;
use crate::linalg::{c, CMatrix};
use crate::model::{full_index, LEVELS};
use crate::propagation::{PhaseCompensation, Propagator};
use crate::pulses::PulseTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelOrder {
    #[default]
    AmplitudeThenPhase,
    PhaseThenAmplitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    /// Amplitude relaxation time, ns.
    pub t1: f64,
    /// Dephasing time, ns.
    pub t2: f64,
    pub kraus_order: usize,
    /// Largest tolerated per-step trace deviation before renormalization.
    pub trace_tolerance: f64,
    pub order: ChannelOrder,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::uniform(30_000.0)
    }
}

impl NoiseSpec {
    /// `T1 = T2 = t`.
    pub fn uniform(t: f64) -> Self {
        Self {
            t1: t,
            t2: t,
            kraus_order: 3,
            trace_tolerance: 1e-6,
            order: ChannelOrder::AmplitudeThenPhase,
        }
    }

    pub fn noiseless() -> Self {
        Self::uniform(f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1 > 0.0 && self.t2 > 0.0) {
            return param_err("coherence times must be positive");
        }
        if self.kraus_order > LEVELS - 1 {
            return param_err(format!("Kraus order above {} is not defined on four levels", LEVELS - 1));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct KrausSet {
    pub operators: Vec<CMatrix>,
    pub duration: f64,
    /// `‖I − Σ K†K‖_max`
    pub completeness_deficit: f64,
}

impl KrausSet {
    fn new(operators: Vec<CMatrix>, duration: f64) -> Self {
        let n = operators[0].nrows();
        let sum = operators
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, k| acc + k.adjoint() * k);
        let deficit = (CMatrix::identity(n, n) - sum)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        Self {
            operators,
            duration,
            completeness_deficit: deficit,
        }
    }

    /// Superoperator `Σ K ⊗ K̄` acting on `vec(ρ)` with row-major pairs
    /// `(a, b) → a·n + b`.
    fn superoperator(&self) -> CMatrix {
        let n = self.operators[0].nrows();
        let mut s = CMatrix::zeros(n * n, n * n);
        for k in &self.operators {
            for a in 0..n {
                for b in 0..n {
                    for c_ in 0..n {
                        for d in 0..n {
                            s[(a * n + b, c_ * n + d)] += k[(a, c_)] * k[(b, d)].conj();
                        }
                    }
                }
            }
        }
        s
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (n + 1 - i) as f64 / i as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

fn check_duration(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return param_err("channel duration must be non-negative");
    }
    Ok(())
}

/// `A_l = Σ_{j≥l} √C(j,l) e^{−t(j−l)/2T₁} (1 − e^{−t/T₁})^{l/2} |j−l⟩⟨j|`.
pub fn amplitude_damping_kraus(t: f64, t1: f64, order: usize) -> Result<KrausSet> {
    check_duration(t)?;
    if order > LEVELS - 1 {
        return param_err("Kraus order exceeds the transmon truncation");
    }
    let decay = (-t / t1).exp();
    let ops = (0..=order)
        .map(|l| {
            let mut a = CMatrix::zeros(LEVELS, LEVELS);
            for j in l..LEVELS {
                let amp = binomial(j, l).sqrt()
                    * decay.powf((j - l) as f64 / 2.0)
                    * (1.0 - decay).powf(l as f64 / 2.0);
                a[(j - l, j)] = c(amp, 0.0);
            }
            a
        })
        .collect();
    Ok(KrausSet::new(ops, t))
}

/// `𝔸_l = Σ_j e^{−j²t/2T₂} √((j²t/T₂)^l / l!) |j⟩⟨j|`, `l` from 0.
pub fn phase_damping_kraus(t: f64, t2: f64, order: usize) -> Result<KrausSet> {
    check_duration(t)?;
    let ops = (0..=order)
        .map(|l| {
            let mut a = CMatrix::zeros(LEVELS, LEVELS);
            for j in 0..LEVELS {
                let x = (j * j) as f64 * t / t2;
                let amp = (-x / 2.0).exp() * (x.powi(l as i32) / factorial(l)).sqrt();
                a[(j, j)] = c(amp, 0.0);
            }
            a
        })
        .collect();
    Ok(KrausSet::new(ops, t))
}

/// Combined single-site superoperator for one step of duration `dt`.
#[derive(Debug, Clone)]
pub struct SiteChannel {
    superop: CMatrix,
    pub completeness_deficit: f64,
}

impl SiteChannel {
    pub fn new(noise: &NoiseSpec, dt: f64) -> Result<Self> {
        noise.validate()?;
        let amp = amplitude_damping_kraus(dt, noise.t1, noise.kraus_order)?;
        let ph = phase_damping_kraus(dt, noise.t2, noise.kraus_order)?;
        let (sa, sp) = (amp.superoperator(), ph.superoperator());
        let superop = match noise.order {
            ChannelOrder::AmplitudeThenPhase => sp * sa,
            ChannelOrder::PhaseThenAmplitude => sa * sp,
        };
        Ok(Self {
            superop,
            completeness_deficit: amp.completeness_deficit.max(ph.completeness_deficit),
        })
    }

    /// Applies the channel to `site` of a `k`-site density matrix in place.
    pub fn apply(&self, rho: &mut CMatrix, site: usize, k: usize) {
        let stride = LEVELS.pow((k - 1 - site) as u32);
        let dim = rho.nrows();
        let digit = |i: usize| (i / stride) % LEVELS;
        let mut block = [Complex64::new(0.0, 0.0); LEVELS * LEVELS];
        for a0 in (0..dim).filter(|&a| digit(a) == 0) {
            for b0 in (0..dim).filter(|&b| digit(b) == 0) {
                for x in 0..LEVELS {
                    for y in 0..LEVELS {
                        block[x * LEVELS + y] = rho[(a0 + x * stride, b0 + y * stride)];
                    }
                }
                for x in 0..LEVELS {
                    for y in 0..LEVELS {
                        let row = x * LEVELS + y;
                        let v: Complex64 = (0..LEVELS * LEVELS).map(|q| self.superop[(row, q)] * block[q]).sum();
                        rho[(a0 + x * stride, b0 + y * stride)] = v;
                    }
                }
            }
        }
    }
}

/// `ρ → K(dt)[U ρ U†]` with the result renormalized to unit trace.
/// Returns the new state and the trace deficit before renormalization.
pub fn apply_channel_step(
    rho: &CMatrix,
    u_step: &CMatrix,
    channel: &SiteChannel,
    n_transmons: usize,
    tolerance: f64,
) -> Result<(CMatrix, f64)> {
    let dim = LEVELS.pow(n_transmons as u32);
    if rho.shape() != (dim, dim) || u_step.shape() != (dim, dim) {
        return param_err(format!("channel step expects {dim}×{dim} matrices"));
    }
    let mut out = u_step * rho * u_step.adjoint();
    for site in 0..n_transmons {
        channel.apply(&mut out, site, n_transmons);
    }
    let tr: Complex64 = out.diagonal().iter().sum();
    let deficit = 1.0 - tr.re;
    if deficit.abs() > tolerance || tr.im.abs() > tolerance {
        return Err(Error::NumericalIntegrity(format!("trace drifted to {tr} in one step")));
    }
    log::trace!("channel step trace deficit {deficit:e}");
    out /= c(tr.re, 0.0);
    // remove rounding asymmetry
    let herm = (&out + out.adjoint()) * c(0.5, 0.0);
    Ok((herm, deficit))
}

/// Embeds a truncated-basis unitary into the full product space.
pub fn embed_truncated(prop: &Propagator, u: &CMatrix) -> CMatrix {
    let full = prop.model().basis.full_indices();
    let dim = LEVELS.pow(prop.spec().n_transmons as u32);
    let mut out = CMatrix::identity(dim, dim);
    for (i, &fi) in full.iter().enumerate() {
        for (j, &fj) in full.iter().enumerate() {
            out[(fi, fj)] = u[(i, j)];
        }
    }
    out
}

/// Full-space index of the computational state `k` (MSB = transmon 1).
pub fn computational_full_index(k: usize, n_qubits: usize) -> usize {
    let occ: Vec<u8> = (0..n_qubits).map(|q| ((k >> (n_qubits - 1 - q)) & 1) as u8).collect();
    full_index(&occ)
}

#[derive(Debug, Clone)]
pub struct NoisyEvaluation {
    pub fbar: f64,
    /// `⟨ψ_k|ρ_k|ψ_k⟩` per input state.
    pub overlaps: Vec<f64>,
    pub max_trace_deficit: f64,
}

/// `F̄ = (1/2^K) Σ_k √|⟨ψ_k|ρ_k|ψ_k⟩|` where `ψ_k` is the image of `|k⟩`
/// under the phase-compensated target.
pub fn average_state_fidelity_with(
    prop: &Propagator,
    p: &PulseTable,
    target: &GateTarget,
    noise: &NoiseSpec,
    comp: &PhaseCompensation,
    substeps: usize,
) -> Result<NoisyEvaluation> {
    let k = prop.spec().n_transmons;
    if target.n_qubits() != k {
        return param_err("target and chain sizes differ");
    }
    let dim = LEVELS.pow(k as u32);
    let steps: Vec<CMatrix> = prop
        .interval_unitaries(p, substeps)?
        .iter()
        .map(|sectors| embed_truncated(prop, &prop.assemble(sectors)))
        .collect();
    let channel = SiteChannel::new(noise, p.dt())?;
    let ideal = comp.apply(&target.matrix);
    let n = target.dim();
    let mut overlaps = Vec::with_capacity(n);
    let mut max_deficit: f64 = 0.0;
    for input in 0..n {
        let fi = computational_full_index(input, k);
        let mut rho = CMatrix::zeros(dim, dim);
        rho[(fi, fi)] = c(1.0, 0.0);
        for u in &steps {
            let (next, deficit) = apply_channel_step(&rho, u, &channel, k, noise.trace_tolerance)?;
            max_deficit = max_deficit.max(deficit.abs());
            rho = next;
        }
        let mut psi = vec![Complex64::new(0.0, 0.0); dim];
        for out in 0..n {
            psi[computational_full_index(out, k)] = ideal[(out, input)];
        }
        let mut ov = Complex64::new(0.0, 0.0);
        for a in 0..dim {
            if psi[a] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..dim {
                ov += psi[a].conj() * rho[(a, b)] * psi[b];
            }
        }
        overlaps.push(ov.norm());
    }
    let fbar = overlaps.iter().map(|o| o.sqrt()).sum::<f64>() / n as f64;
    if max_deficit > 0.0 {
        log::debug!("largest per-step trace deficit {max_deficit:e}");
    }
    Ok(NoisyEvaluation {
        fbar,
        overlaps,
        max_trace_deficit: max_deficit,
    })
}

pub fn average_state_fidelity(
    prop: &Propagator,
    p: &PulseTable,
    target: &GateTarget,
    noise: &NoiseSpec,
    comp: &PhaseCompensation,
) -> Result<f64> {
    let substeps = crate::propagation::default_substeps(p.shape());
    Ok(average_state_fidelity_with(prop, p, target, noise, comp, substeps)?.fbar)
}

/// Random density matrix `G G† / Tr` over `dim` states.
pub fn random_density_matrix<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = DMatrix::from_fn(dim, dim, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let rho = &g * g.adjoint();
    let tr: Complex64 = rho.diagonal().iter().sum();
    rho / tr
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::GateName;
    use crate::linalg::{hermiticity_defect, max_abs_diff};
    use crate::model::{embed_site, TransmonChainSpec};
    use crate::pulses::PulseShape;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Brute force: each site's Kraus operators tensored up to the full space.
    fn brute_force_channel(rho: &CMatrix, set: &KrausSet, k: usize) -> CMatrix {
        let mut out = rho.clone();
        for site in 0..k {
            let full: Vec<CMatrix> = set.operators.iter().map(|a| embed_site(a, site, k)).collect();
            out = full
                .iter()
                .fold(CMatrix::zeros(out.nrows(), out.ncols()), |acc, a| acc + a * &out * a.adjoint());
        }
        out
    }

    #[test]
    fn zero_duration_is_identity() {
        for set in [amplitude_damping_kraus(0.0, 100.0, 3).unwrap(), phase_damping_kraus(0.0, 100.0, 3).unwrap()] {
            assert!(max_abs_diff(&set.operators[0], &CMatrix::identity(4, 4)) < 1e-15);
            for op in &set.operators[1..] {
                assert!(op.iter().all(|z| z.norm() == 0.0));
            }
        }
    }

    #[test]
    fn qubit_block_of_amplitude_damping() {
        let t = 5.0;
        let t1 = 40.0;
        let set = amplitude_damping_kraus(t, t1, 3).unwrap();
        let gamma = 1.0 - (-t / t1).exp();
        assert!((set.operators[0][(1, 1)].re - (1.0 - gamma).sqrt()).abs() < 1e-15);
        assert!((set.operators[1][(0, 1)].re - gamma.sqrt()).abs() < 1e-15);
        assert_eq!(set.operators[0][(0, 0)].re, 1.0);
        // a three-photon drop needs l = 3 from level 3
        assert!((set.operators[3][(0, 3)].re - gamma.powf(1.5)).abs() < 1e-15);
    }

    #[test]
    fn completeness_deficit() {
        for ratio in [1e-5, 1e-4, 1e-3] {
            let a = amplitude_damping_kraus(ratio, 1.0, 3).unwrap();
            let p = phase_damping_kraus(ratio, 1.0, 3).unwrap();
            assert!(a.completeness_deficit < 1e-12);
            assert!(p.completeness_deficit < 1e-9, "{}", p.completeness_deficit);
        }
        let deficits: Vec<f64> = (0..=3)
            .map(|l| phase_damping_kraus(1e-2, 1.0, l).unwrap().completeness_deficit)
            .collect();
        assert!(deficits.windows(2).all(|w| w[1] < w[0]));
        let amp: Vec<f64> = (0..=3)
            .map(|l| amplitude_damping_kraus(1e-2, 1.0, l).unwrap().completeness_deficit)
            .collect();
        assert!(amp.windows(2).all(|w| w[1] <= w[0]));
        assert!(amplitude_damping_kraus(1.0, 1.0, 4).is_err());
        assert!(amplitude_damping_kraus(-1.0, 1.0, 3).is_err());
    }

    #[test]
    fn site_superoperator_matches_brute_force() {
        let noise = NoiseSpec {
            t1: 300.0,
            t2: 200.0,
            ..NoiseSpec::default()
        };
        let dt = 7.0;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density_matrix(64, &mut rng);
        let ch = SiteChannel::new(&noise, dt).unwrap();
        let mut fast = rho.clone();
        for s in 0..3 {
            ch.apply(&mut fast, s, 3);
        }
        let amp = amplitude_damping_kraus(dt, noise.t1, 3).unwrap();
        let ph = phase_damping_kraus(dt, noise.t2, 3).unwrap();
        // amplitude on every site then phase on every site: sites commute
        let slow = brute_force_channel(&brute_force_channel(&rho, &amp, 3), &ph, 3);
        assert!(max_abs_diff(&fast, &slow) < 1e-14);
    }

    #[test]
    fn ground_state_is_fixed() {
        let ch = SiteChannel::new(&NoiseSpec::uniform(100.0), 1.0).unwrap();
        let mut rho = CMatrix::zeros(64, 64);
        rho[(0, 0)] = c(1.0, 0.0);
        let (out, _) = apply_channel_step(&rho, &CMatrix::identity(64, 64), &ch, 3, 1e-6).unwrap();
        assert!(max_abs_diff(&out, &rho) < 1e-15);
    }

    #[test]
    fn infinite_coherence_is_unitary() {
        let ch = SiteChannel::new(&NoiseSpec::noiseless(), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rho = random_density_matrix(64, &mut rng);
        let h = random_density_matrix(64, &mut rng);
        let u = crate::linalg::expm(&(h * c(0.0, -3.0)));
        let (out, _) = apply_channel_step(&rho, &u, &ch, 3, 1e-6).unwrap();
        assert!(max_abs_diff(&out, &(&u * &rho * u.adjoint())) < 1e-13);
    }

    #[test]
    fn excited_population_decay() {
        let (dt, t1) = (1.0, 1000.0);
        let noise = NoiseSpec {
            t1,
            t2: 700.0,
            ..NoiseSpec::default()
        };
        let ch = SiteChannel::new(&noise, dt).unwrap();
        let i111 = computational_full_index(7, 3);
        let mut rho = CMatrix::zeros(64, 64);
        rho[(i111, i111)] = c(1.0, 0.0);
        let (out, _) = apply_channel_step(&rho, &CMatrix::identity(64, 64), &ch, 3, 1e-6).unwrap();
        let amp = amplitude_damping_kraus(dt, t1, 3).unwrap();
        let ph = phase_damping_kraus(dt, noise.t2, 3).unwrap();
        let brute = brute_force_channel(&brute_force_channel(&rho, &amp, 3), &ph, 3);
        assert!((out[(i111, i111)].re - (-3.0 * dt / t1).exp()).abs() < 1e-12);
        assert!((brute[(i111, i111)].re - out[(i111, i111)].re).abs() < 1e-12);
    }

    #[test]
    fn channel_preserves_hermiticity_and_positivity() {
        let ch = SiteChannel::new(&NoiseSpec::uniform(1000.0), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let rho = random_density_matrix(64, &mut rng);
            let (out, deficit) = apply_channel_step(&rho, &CMatrix::identity(64, 64), &ch, 3, 1e-6).unwrap();
            assert!(deficit.abs() < 1e-9);
            assert!(hermiticity_defect(&out) < 1e-12);
            let min = out.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
            assert!(min > -1e-10);
        }
    }

    #[test]
    fn trace_drift_is_an_error() {
        let ch = SiteChannel::new(&NoiseSpec::uniform(100.0), 1.0).unwrap();
        let mut rho = CMatrix::zeros(64, 64);
        rho[(5, 5)] = c(1.1, 0.0);
        assert!(matches!(
            apply_channel_step(&rho, &CMatrix::identity(64, 64), &ch, 3, 1e-6),
            Err(Error::NumericalIntegrity(_))
        ));
    }

    #[test]
    fn identity_pulse_on_uncoupled_chain() {
        // uncoupled chain at zero frequency: U = 1, so F̄ = 1 without noise
        let spec = TransmonChainSpec::three_qubit().with_coupling(0.0);
        let prop = Propagator::new(spec).unwrap();
        let p = PulseTable::constant(10.0, PulseShape::PiecewiseConstant, 10, &[0.0; 3]).unwrap();
        let target = crate::gates::GateTarget {
            name: GateName::Ccz,
            matrix: CMatrix::identity(8, 8),
            truth_table: Vec::new(),
        };
        let comp = PhaseCompensation::zero(3);
        let clean = average_state_fidelity(&prop, &p, &target, &NoiseSpec::noiseless(), &comp).unwrap();
        assert!((clean - 1.0).abs() < 1e-12);
        // pure decay of |q⟩: overlap e^{−n t/T1} times dephasing-free diagonal
        let t = 2000.0;
        let noisy = average_state_fidelity_with(&prop, &p, &target, &NoiseSpec::uniform(t), &comp, 1).unwrap();
        for (k, ov) in noisy.overlaps.iter().enumerate() {
            let n = k.count_ones() as f64;
            assert!((ov - (-n * 10.0 / t).exp()).abs() < 1e-12);
        }
    }
}
