//! Target unitaries and their truth tables.
//!
//! Basis states are labelled `|q1 q2 q3⟩` with qubit 1 the most significant
//! bit, matching the ordering used by the propagator.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};
use crate::linalg::{c, max_abs_diff, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateName {
    Cz,
    Ccz,
    Toffoli,
    Fredkin,
    Czz,
    Cxx,
}

impl GateName {
    pub const ALL: [GateName; 6] = [
        GateName::Cz,
        GateName::Ccz,
        GateName::Toffoli,
        GateName::Fredkin,
        GateName::Czz,
        GateName::Cxx,
    ];

    pub fn n_qubits(self) -> usize {
        match self {
            GateName::Cz => 2,
            _ => 3,
        }
    }

    /// The form actually synthesized on hardware; Hadamard-conjugated gates
    /// map to their diagonal partner.
    pub fn synthesis_form(self) -> GateName {
        match self {
            GateName::Toffoli => GateName::Ccz,
            GateName::Cxx => GateName::Czz,
            other => other,
        }
    }
}

impl fmt::Display for GateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GateName::Cz => "CZ",
            GateName::Ccz => "CCZ",
            GateName::Toffoli => "TOFFOLI",
            GateName::Fredkin => "FREDKIN",
            GateName::Czz => "CZZ",
            GateName::Cxx => "CXX",
        };
        f.write_str(s)
    }
}

impl FromStr for GateName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CZ" => Ok(GateName::Cz),
            "CCZ" => Ok(GateName::Ccz),
            "TOFFOLI" | "CCX" | "CCNOT" => Ok(GateName::Toffoli),
            "FREDKIN" | "CSWAP" => Ok(GateName::Fredkin),
            "CZZ" => Ok(GateName::Czz),
            "CXX" | "CNOTNOT" => Ok(GateName::Cxx),
            other => param_err(format!("unknown gate {other:?}")),
        }
    }
}

/// One truth-table row: `|input⟩ ↦ amplitude·|output⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthRow {
    pub input: usize,
    pub output: usize,
    pub amplitude: Complex64,
}

#[derive(Debug, Clone)]
pub struct GateTarget {
    pub name: GateName,
    pub matrix: CMatrix,
    pub truth_table: Vec<TruthRow>,
}

impl GateTarget {
    pub fn n_qubits(&self) -> usize {
        self.name.n_qubits()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.matrix[(i, j)].norm() == 0.0))
    }

    pub fn label(&self, state: usize) -> String {
        basis_label(state, self.n_qubits())
    }

    /// Entries as `[re, im]` pairs, row-major.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct GateFile {
            name: String,
            dim: usize,
            matrix: Vec<Vec<[f64; 2]>>,
            truth_table: Vec<(String, String, [f64; 2])>,
        }
        let n = self.dim();
        let file = GateFile {
            name: self.name.to_string(),
            dim: n,
            matrix: (0..n)
                .map(|i| (0..n).map(|j| [self.matrix[(i, j)].re, self.matrix[(i, j)].im]).collect())
                .collect(),
            truth_table: self
                .truth_table
                .iter()
                .map(|r| (self.label(r.input), self.label(r.output), [r.amplitude.re, r.amplitude.im]))
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}

pub fn basis_label(state: usize, n_qubits: usize) -> String {
    (0..n_qubits)
        .map(|q| if (state >> (n_qubits - 1 - q)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn bit(state: usize, qubit: usize, n_qubits: usize) -> usize {
    (state >> (n_qubits - 1 - qubit)) & 1
}

fn hadamard() -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])
}

fn diag(entries: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        entries.len(),
        entries.iter().map(|&x| c(x, 0.0)),
    ))
}

fn permutation(n: usize, image: impl Fn(usize) -> usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for j in 0..n {
        m[(image(j), j)] = c(1.0, 0.0);
    }
    m
}

/// Truth tables written out from the gate definitions, independent of the
/// matrix construction.
fn truth_table(name: GateName) -> Vec<TruthRow> {
    let n = name.n_qubits();
    (0..1usize << n)
        .map(|s| {
            let b = |q| bit(s, q, n);
            let (output, sign) = match name {
                GateName::Cz => (s, if b(0) & b(1) == 1 { -1.0 } else { 1.0 }),
                GateName::Ccz => (s, if s == 0b111 { -1.0 } else { 1.0 }),
                GateName::Toffoli => (if b(0) & b(1) == 1 { s ^ 0b001 } else { s }, 1.0),
                GateName::Fredkin => {
                    let out = if b(0) == 1 { (s & 0b100) | (b(2) << 1) | b(1) } else { s };
                    (out, 1.0)
                }
                GateName::Czz => (s, if b(0) == 1 && (b(1) + b(2)) % 2 == 1 { -1.0 } else { 1.0 }),
                GateName::Cxx => (if b(0) == 1 { s ^ 0b011 } else { s }, 1.0),
            };
            TruthRow {
                input: s,
                output,
                amplitude: c(sign, 0.0),
            }
        })
        .collect()
}

pub fn make_target(name: GateName) -> GateTarget {
    let id2 = CMatrix::identity(2, 2);
    let h = hadamard();
    let matrix = match name {
        GateName::Cz => diag(&[1.0, 1.0, 1.0, -1.0]),
        GateName::Ccz => diag(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, -1.0]),
        GateName::Czz => diag(&[1.0, 1.0, 1.0, 1.0, 1.0, -1.0, -1.0, 1.0]),
        GateName::Fredkin => permutation(8, |s| match s {
            0b101 => 0b110,
            0b110 => 0b101,
            other => other,
        }),
        GateName::Toffoli => {
            let hh = id2.kronecker(&id2).kronecker(&h);
            &hh * make_target(GateName::Ccz).matrix * &hh
        }
        GateName::Cxx => {
            let hh = id2.kronecker(&h).kronecker(&h);
            &hh * make_target(GateName::Czz).matrix * &hh
        }
    };
    GateTarget {
        name,
        matrix,
        truth_table: truth_table(name),
    }
}

pub fn make_target_by_name(name: &str) -> Result<GateTarget> {
    Ok(make_target(name.parse()?))
}

#[derive(Debug, Clone)]
pub struct TruthTableReport {
    pub gate: GateName,
    /// `(input label, output label, passed)`
    pub rows: Vec<(String, String, bool)>,
}

impl TruthTableReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.2)
    }
}

/// Applies the gate matrix to every computational basis vector and checks
/// the result against the tabulated image.
pub fn verify_truth_table(g: &GateTarget) -> TruthTableReport {
    let n = g.dim();
    let rows = g
        .truth_table
        .iter()
        .map(|row| {
            let col = g.matrix.column(row.input);
            let ok = (0..n).all(|i| {
                let expect = if i == row.output { row.amplitude } else { c(0.0, 0.0) };
                (col[i] - expect).norm() < 1e-12
            });
            (g.label(row.input), g.label(row.output), ok)
        })
        .collect();
    TruthTableReport { gate: g.name, rows }
}

/// `‖A − B‖_max` between two gate matrices.
pub fn gate_distance(a: &GateTarget, b: &GateTarget) -> f64 {
    max_abs_diff(&a.matrix, &b.matrix)
}
