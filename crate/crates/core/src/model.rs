//! Hamiltonian of a chain of capacitively coupled four-level transmons.
//!
//! All Hamiltonians are stored as `H/h` in GHz. States of the full tensor
//! basis are indexed with transmon 1 as the most significant digit, so the
//! full index of `|n1 n2 n3⟩` is `n1·16 + n2·4 + n3`.

use std::collections::HashMap;
use std::ops::Range;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};
use crate::fmt::fmt_g12;
use crate::linalg::{c, commutator, hermiticity_defect, max_abs, CMatrix, RMatrix};

pub const LEVELS: usize = 4;

/// Physical constants of the transmon chain. Frequencies in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmonChainSpec {
    pub n_transmons: usize,
    pub levels_per_transmon: usize,
    pub eta: f64,
    pub eta_prime: f64,
    pub g: f64,
    pub freq_min: f64,
    pub freq_max: f64,
}

impl TransmonChainSpec {
    /// Chain with `η′ = 3η` and the default ±2.5 GHz control bounds.
    pub fn cubic(n_transmons: usize, eta: f64, g: f64) -> Self {
        Self {
            n_transmons,
            levels_per_transmon: LEVELS,
            eta,
            eta_prime: 3.0 * eta,
            g,
            freq_min: -2.5,
            freq_max: 2.5,
        }
    }

    /// Three transmons, η = 200 MHz, g = 30 MHz.
    pub fn three_qubit() -> Self {
        Self::cubic(3, 0.200, 0.030)
    }

    pub fn two_qubit() -> Self {
        Self::cubic(2, 0.200, 0.030)
    }

    pub fn with_coupling(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.n_transmons) {
            return param_err(format!("n_transmons must be 2 or 3, got {}", self.n_transmons));
        }
        if self.levels_per_transmon != LEVELS {
            return param_err("only four-level transmons are modeled");
        }
        if !(self.g >= 0.0 && self.eta > 0.0) {
            return param_err("coupling must be non-negative and anharmonicity positive");
        }
        if !(self.freq_min < self.freq_max) {
            return param_err("freq_min must be below freq_max");
        }
        Ok(())
    }

    pub fn full_dim(&self) -> usize {
        LEVELS.pow(self.n_transmons as u32)
    }

    /// Level energy of a single transmon at frequency `eps` occupying level `n`.
    pub fn level_energy(&self, n: u8, eps: f64) -> f64 {
        match n {
            0 => 0.0,
            1 => eps,
            2 => 2.0 * eps - self.eta,
            3 => 3.0 * eps - self.eta_prime,
            _ => unreachable!("four-level transmon"),
        }
    }
}

/// Tag recording which basis an operator is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisTag {
    Full { n_transmons: usize },
    Excitation { n_transmons: usize, max_excitation: usize },
    Computational { n_qubits: usize },
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub basis: BasisTag,
    pub matrix: CMatrix,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermiticity_defect(&self.matrix) <= tol
    }
}

/// Occupation-number basis truncated to at most `max_excitation` quanta.
///
/// States are ordered by total excitation, then lexicographically by
/// `(n1, n2, …)`, so every excitation sector is a contiguous block.
#[derive(Debug, Clone)]
pub struct ExcitationBasis {
    pub n_transmons: usize,
    pub max_excitation: usize,
    pub basis_states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    blocks: Vec<Range<usize>>,
}

impl ExcitationBasis {
    pub fn new(n_transmons: usize, max_excitation: usize) -> Self {
        let mut states: Vec<Vec<u8>> = (0..LEVELS.pow(n_transmons as u32))
            .map(|i| occupation(i, n_transmons))
            .filter(|s| total(s) <= max_excitation)
            .collect();
        states.sort_by(|a, b| total(a).cmp(&total(b)).then_with(|| a.cmp(b)));
        let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let mut blocks = Vec::new();
        let mut start = 0;
        for n in 0..=max_excitation {
            let len = states[start..].iter().take_while(|s| total(s) == n).count();
            if len > 0 {
                blocks.push(start..start + len);
            }
            start += len;
        }
        Self {
            n_transmons,
            max_excitation,
            basis_states: states,
            index,
            blocks,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis_states.len()
    }

    pub fn index_of(&self, occupation: &[u8]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    /// Contiguous index ranges of the fixed-excitation sectors.
    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    /// Positions of the qubit states `|q1…qK⟩`, listed in binary order with
    /// transmon 1 as the most significant bit.
    pub fn computational_indices(&self) -> Vec<usize> {
        let k = self.n_transmons;
        (0..1usize << k)
            .map(|b| {
                let occ: Vec<u8> = (0..k).map(|site| ((b >> (k - 1 - site)) & 1) as u8).collect();
                self.index_of(&occ).expect("computational states need max_excitation >= n_transmons")
            })
            .collect()
    }

    /// Index of each basis state in the full `4^K` tensor basis.
    pub fn full_indices(&self) -> Vec<usize> {
        self.basis_states.iter().map(|s| full_index(s)).collect()
    }

    pub fn label(&self, i: usize) -> String {
        self.basis_states[i].iter().map(|n| char::from(b'0' + n)).collect()
    }
}

pub fn occupation(full_index: usize, n_transmons: usize) -> Vec<u8> {
    (0..n_transmons)
        .map(|site| ((full_index / LEVELS.pow((n_transmons - 1 - site) as u32)) % LEVELS) as u8)
        .collect()
}

pub fn full_index(occupation: &[u8]) -> usize {
    occupation.iter().fold(0, |acc, &n| acc * LEVELS + n as usize)
}

fn total(s: &[u8]) -> usize {
    s.iter().map(|&n| n as usize).sum()
}

/// Generalized Pauli `X = a + a†` on one four-level site.
pub fn pauli_x() -> CMatrix {
    let s2 = 2f64.sqrt();
    let s3 = 3f64.sqrt();
    let r = [
        0.0, 1.0, 0.0, 0.0, //
        1.0, 0.0, s2, 0.0, //
        0.0, s2, 0.0, s3, //
        0.0, 0.0, s3, 0.0,
    ];
    CMatrix::from_row_slice(4, 4, &r.map(|x| c(x, 0.0)))
}

/// Generalized Pauli `Y = i(a† − a)` on one four-level site.
pub fn pauli_y() -> CMatrix {
    let s2 = 2f64.sqrt();
    let s3 = 3f64.sqrt();
    let r = [
        0.0, -1.0, 0.0, 0.0, //
        1.0, 0.0, -s2, 0.0, //
        0.0, s2, 0.0, -s3, //
        0.0, 0.0, s3, 0.0,
    ];
    CMatrix::from_row_slice(4, 4, &r.map(|x| c(0.0, x)))
}

/// Embeds a single-site operator at `site` of a `k`-site chain.
pub fn embed_site(op: &CMatrix, site: usize, k: usize) -> CMatrix {
    let id = CMatrix::identity(LEVELS, LEVELS);
    (0..k).fold(CMatrix::identity(1, 1), |acc, s| {
        acc.kronecker(if s == site { op } else { &id })
    })
}

/// Total excitation number `N̂ = Σ_k diag(0,1,2,3)_k` in the full basis.
pub fn number_operator(k: usize) -> CMatrix {
    let dim = LEVELS.pow(k as u32);
    CMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |i, _| {
        c(total(&occupation(i, k)) as f64, 0.0)
    }))
}

/// Full-basis `H/h` in GHz for the given instantaneous frequencies.
pub fn build_hamiltonian(spec: &TransmonChainSpec, freqs: &[f64]) -> Result<OperatorMatrix> {
    spec.validate()?;
    let k = spec.n_transmons;
    if freqs.len() != k {
        return param_err(format!("expected {k} frequencies, got {}", freqs.len()));
    }
    if freqs.iter().any(|f| !f.is_finite()) {
        return param_err("frequencies must be finite");
    }
    let mut h = CMatrix::zeros(spec.full_dim(), spec.full_dim());
    for (site, &eps) in freqs.iter().enumerate() {
        let local = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(LEVELS, |n, _| {
            c(spec.level_energy(n as u8, eps), 0.0)
        }));
        h += embed_site(&local, site, k);
    }
    let (x, y) = (pauli_x(), pauli_y());
    for site in 0..k - 1 {
        let xx = embed_site(&x, site, k) * embed_site(&x, site + 1, k);
        let yy = embed_site(&y, site, k) * embed_site(&y, site + 1, k);
        h += (xx + yy).scale(spec.g / 2.0);
    }
    Ok(OperatorMatrix {
        basis: BasisTag::Full { n_transmons: k },
        matrix: h,
    })
}

/// Restricts a full-basis, excitation-preserving operator to the sectors
/// holding at most `max_excitation` quanta.
pub fn project_to_excitation_subspace(h: &OperatorMatrix, max_excitation: usize) -> Result<OperatorMatrix> {
    let BasisTag::Full { n_transmons } = h.basis else {
        return param_err("projection expects an operator in the full tensor basis");
    };
    let n_op = number_operator(n_transmons);
    let defect = max_abs(&commutator(&h.matrix, &n_op));
    let tol = 1e-10 * max_abs(&h.matrix).max(1.0);
    if defect > tol {
        return Err(Error::Model(format!(
            "operator does not conserve excitation number (‖[H,N]‖ = {defect:e})"
        )));
    }
    let basis = ExcitationBasis::new(n_transmons, max_excitation);
    let idx = basis.full_indices();
    let m = CMatrix::from_fn(idx.len(), idx.len(), |i, j| h.matrix[(idx[i], idx[j])]);
    Ok(OperatorMatrix {
        basis: BasisTag::Excitation {
            n_transmons,
            max_excitation,
        },
        matrix: m,
    })
}

/// Block-structured Hamiltonian on an [`ExcitationBasis`], assembled directly
/// from occupation numbers. Used by the propagator; every sector is a real
/// symmetric matrix.
#[derive(Debug, Clone)]
pub struct ExcitationModel {
    pub spec: TransmonChainSpec,
    pub basis: ExcitationBasis,
    sectors: Vec<Sector>,
}

#[derive(Debug, Clone)]
struct Sector {
    range: Range<usize>,
    /// occupation numbers of each state, per site
    occupations: Vec<Vec<u8>>,
    /// constant diagonal offset `−Σ anharmonic shifts`
    offsets: Vec<f64>,
    /// coupling part, already scaled by `g`
    coupling: RMatrix,
}

impl ExcitationModel {
    pub fn new(spec: TransmonChainSpec, max_excitation: usize) -> Result<Self> {
        spec.validate()?;
        let basis = ExcitationBasis::new(spec.n_transmons, max_excitation);
        let sectors = basis
            .blocks()
            .iter()
            .map(|range| {
                let states = &basis.basis_states[range.clone()];
                let n = states.len();
                let mut coupling = RMatrix::zeros(n, n);
                for (j, s) in states.iter().enumerate() {
                    // g (a_k† a_{k+1} + a_k a_{k+1}†)
                    for site in 0..spec.n_transmons - 1 {
                        for (from, to) in [(site + 1, site), (site, site + 1)] {
                            if s[from] == 0 || s[to] as usize == LEVELS - 1 {
                                continue;
                            }
                            let amp = (s[from] as f64).sqrt() * ((s[to] + 1) as f64).sqrt();
                            let mut t = s.clone();
                            t[from] -= 1;
                            t[to] += 1;
                            if let Some(i) = states.iter().position(|x| *x == t) {
                                coupling[(i, j)] += spec.g * amp;
                            }
                        }
                    }
                }
                let offsets = states
                    .iter()
                    .map(|s| s.iter().map(|&n| spec.level_energy(n, 0.0)).sum())
                    .collect();
                Sector {
                    range: range.clone(),
                    occupations: states.to_vec(),
                    offsets,
                    coupling,
                }
            })
            .collect();
        Ok(Self { spec, basis, sectors })
    }

    pub fn three_qubit(spec: TransmonChainSpec) -> Result<Self> {
        let m = spec.n_transmons;
        Self::new(spec, m)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn n_sectors(&self) -> usize {
        self.sectors.len()
    }

    pub fn sector_range(&self, s: usize) -> Range<usize> {
        self.sectors[s].range.clone()
    }

    /// Real symmetric Hamiltonian of sector `s` at the given frequencies.
    pub fn sector_hamiltonian(&self, s: usize, freqs: &[f64]) -> RMatrix {
        let sec = &self.sectors[s];
        let mut h = sec.coupling.clone();
        for (i, occ) in sec.occupations.iter().enumerate() {
            let lin: f64 = occ.iter().zip(freqs).map(|(&n, &e)| n as f64 * e).sum();
            h[(i, i)] += lin + sec.offsets[i];
        }
        h
    }

    /// Assembled dense Hamiltonian over the whole truncated basis.
    pub fn hamiltonian(&self, freqs: &[f64]) -> Result<OperatorMatrix> {
        if freqs.len() != self.spec.n_transmons {
            return param_err("frequency vector length does not match the chain");
        }
        let mut h = CMatrix::zeros(self.dim(), self.dim());
        for s in 0..self.sectors.len() {
            let r = self.sectors[s].range.clone();
            let hs = self.sector_hamiltonian(s, freqs);
            for (i, gi) in r.clone().enumerate() {
                for (j, gj) in r.clone().enumerate() {
                    h[(gi, gj)] = c(hs[(i, j)], 0.0);
                }
            }
        }
        Ok(OperatorMatrix {
            basis: BasisTag::Excitation {
                n_transmons: self.spec.n_transmons,
                max_excitation: self.basis.max_excitation,
            },
            matrix: h,
        })
    }
}

/// Energy levels as a function of one swept transmon frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    pub rows: Vec<(f64, Vec<f64>)>,
}

impl SpectrumTable {
    pub fn to_csv(&self) -> String {
        let n = self.rows.first().map_or(0, |r| r.1.len());
        let mut out = String::from("epsilon_ghz");
        for i in 0..n {
            out.push_str(&format!(",E{i}"));
        }
        out.push('\n');
        for (eps, levels) in &self.rows {
            out.push_str(&fmt_g12(*eps));
            for e in levels {
                out.push(',');
                out.push_str(&fmt_g12(*e));
            }
            out.push('\n');
        }
        out
    }
}

/// Sweeps the frequency of `swept` linearly over `range` while the other
/// transmons stay at `base_freqs`, returning sorted eigenvalues of the
/// Hamiltonian (optionally restricted to `truncation` excitations).
pub fn spectrum_sweep(
    spec: &TransmonChainSpec,
    base_freqs: &[f64],
    swept: usize,
    range: (f64, f64),
    n_points: usize,
    truncation: Option<usize>,
) -> Result<SpectrumTable> {
    if n_points < 2 {
        return param_err("a sweep needs at least two points");
    }
    if !(range.0.is_finite() && range.1.is_finite()) {
        return param_err("sweep range must be finite");
    }
    if swept >= spec.n_transmons {
        return param_err(format!("swept transmon {swept} out of range"));
    }
    let mut rows = Vec::with_capacity(n_points);
    for p in 0..n_points {
        let eps = range.0 + (range.1 - range.0) * p as f64 / (n_points - 1) as f64;
        let mut freqs = base_freqs.to_vec();
        freqs[swept] = eps;
        let mut h = build_hamiltonian(spec, &freqs)?;
        if let Some(m) = truncation {
            h = project_to_excitation_subspace(&h, m)?;
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(h.matrix).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        rows.push((eps, ev));
    }
    Ok(SpectrumTable { rows })
}
