//! Particle-conserving rotation gates and their generators.
//!
//! Every gate here is a rotation inside one two-dimensional plane
//! `span{|p>, |q>}` of its local register and the identity elsewhere.
//! Local indices put the first listed qubit in the most significant bit.
//!
//! | kind         | plane `(p, q)`      | prefactor `c` |
//! |--------------|---------------------|---------------|
//! | G2, A2       | `(|01>, |10>)`      | 1/2           |
//! | G4, A4       | `(|0011>, |1100>)`  | 1/8           |
//! | BEMPA_A      | `(|01>, |10>)`      | 1             |
//! | BEMPA_B      | `(|001>, |110>)`    | 1             |
//! | G2_COMPLEX   | `(|01>, |10>)`      | 1/2           |
//! | G4_COMPLEX   | `(|0011>, |1100>)`  | 1/8           |
//!
//! G kinds act as `[[c, -e^{iφ}s], [e^{-iφ}s, c]]` on `(p, q)` (φ = 0 for the
//! real kinds) and equal `exp(iθ·c·generator)`. A kinds act as
//! `[[c, s], [s, -c]]`, which is `A(0)·G(-θ)`.

pub mod decompose;
pub mod generators;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::{CMat, C64};

pub use decompose::{
    decompose, decomposition_matrix, multi_controlled_ry, resource_count, Decomposition,
    ElementaryGate, ElementaryKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    G2,
    A2,
    G4,
    A4,
    BempaA,
    BempaB,
    G2Complex,
    G4Complex,
}

pub type Block = [[C64; 2]; 2];

impl GateKind {
    pub const ALL: [GateKind; 8] = [
        GateKind::G2,
        GateKind::A2,
        GateKind::G4,
        GateKind::A4,
        GateKind::BempaA,
        GateKind::BempaB,
        GateKind::G2Complex,
        GateKind::G4Complex,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::G2 | GateKind::A2 | GateKind::BempaA | GateKind::G2Complex => 2,
            GateKind::BempaB => 3,
            GateKind::G4 | GateKind::A4 | GateKind::G4Complex => 4,
        }
    }

    pub fn is_complex(self) -> bool {
        matches!(self, GateKind::G2Complex | GateKind::G4Complex)
    }

    pub fn is_reflection(self) -> bool {
        matches!(self, GateKind::A2 | GateKind::A4)
    }

    pub fn prefactor(self) -> f64 {
        match self.arity() {
            _ if matches!(self, GateKind::BempaA | GateKind::BempaB) => 1.0,
            2 => 0.5,
            _ => 0.125,
        }
    }

    /// Local basis indices `(p, q)` of the active plane.
    pub fn plane(self) -> (usize, usize) {
        match self.arity() {
            2 => (0b01, 0b10),
            3 => (0b001, 0b110),
            _ => (0b0011, 0b1100),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::G2 => "G2",
            GateKind::A2 => "A2",
            GateKind::G4 => "G4",
            GateKind::A4 => "A4",
            GateKind::BempaA => "BEMPA_A",
            GateKind::BempaB => "BEMPA_B",
            GateKind::G2Complex => "G2_COMPLEX",
            GateKind::G4Complex => "G4_COMPLEX",
        }
    }

    fn check_phi(self, phi: Option<f64>) -> Result<f64> {
        match (self.is_complex(), phi) {
            (true, Some(p)) => Ok(p),
            (false, None) => Ok(0.0),
            (true, None) => Err(Error::Invalid(format!("{} needs a phase", self.name()))),
            (false, Some(_)) => Err(Error::Invalid(format!("{} takes no phase", self.name()))),
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Invalid(format!("unknown gate kind {s:?}")))
    }
}

fn cis(x: f64) -> C64 {
    C64::from_polar(1.0, x)
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Active 2×2 block in `(p, q)` order. `phi` is ignored by the real kinds.
pub fn block(kind: GateKind, theta: f64, phi: f64) -> Block {
    let (s, c) = theta.sin_cos();
    if kind.is_reflection() {
        [[re(c), re(s)], [re(s), re(-c)]]
    } else {
        [[re(c), -cis(phi) * s], [cis(-phi) * s, re(c)]]
    }
}

pub fn block_dtheta(kind: GateKind, theta: f64, phi: f64) -> Block {
    let (s, c) = theta.sin_cos();
    if kind.is_reflection() {
        [[re(-s), re(c)], [re(c), re(s)]]
    } else {
        [[re(-s), -cis(phi) * c], [cis(-phi) * c, re(-s)]]
    }
}

pub fn block_dphi(kind: GateKind, theta: f64, phi: f64) -> Block {
    let s = theta.sin();
    let i = C64::i();
    if kind.is_complex() {
        let z = re(0.0);
        [[z, -i * cis(phi) * s], [-i * cis(-phi) * s, z]]
    } else {
        [[re(0.0); 2]; 2]
    }
}

fn embed_block(kind: GateKind, b: Block, identity: bool) -> CMat {
    let dim = 1 << kind.arity();
    let mut m = if identity {
        CMat::identity(dim, dim)
    } else {
        DMatrix::zeros(dim, dim)
    };
    let (p, q) = kind.plane();
    m[(p, p)] = b[0][0];
    m[(p, q)] = b[0][1];
    m[(q, p)] = b[1][0];
    m[(q, q)] = b[1][1];
    m
}

/// Published `(CNOT count, depth)` per decomposed kind.
pub const REFERENCE_RESOURCES: [(GateKind, (usize, usize)); 5] = [
    (GateKind::G2, (2, 5)),
    (GateKind::A2, (3, 7)),
    (GateKind::BempaB, (8, 12)),
    (GateKind::G4, (14, 22)),
    (GateKind::A4, (14, 22)),
];

/// Local unitary of size `2^arity`.
pub fn gate_matrix(kind: GateKind, theta: f64, phi: Option<f64>) -> Result<CMat> {
    let phi = kind.check_phi(phi)?;
    Ok(embed_block(kind, block(kind, theta, phi), true))
}

/// `∂U/∂θ`, zero outside the active plane.
pub fn gate_dtheta(kind: GateKind, theta: f64, phi: Option<f64>) -> Result<CMat> {
    let phi = kind.check_phi(phi)?;
    Ok(embed_block(kind, block_dtheta(kind, theta, phi), false))
}

/// `∂U/∂φ`, zero for the real kinds.
pub fn gate_dphi(kind: GateKind, theta: f64, phi: Option<f64>) -> Result<CMat> {
    let phi = kind.check_phi(phi)?;
    Ok(embed_block(kind, block_dphi(kind, theta, phi), false))
}

/// Hermitian generator on the local register `0..arity`.
///
/// G kinds satisfy `U(θ) = exp(iθ·c·generator)`; for A kinds the generator is
/// that of the continuous factor, `A(θ) = A(0)·exp(-iθ·c·generator)`.
pub fn generator(kind: GateKind, phi: Option<f64>) -> Result<PauliSum> {
    let phi = kind.check_phi(phi)?;
    let n = kind.arity();
    let local: Vec<usize> = (0..n).collect();
    Ok(generator_on(kind, phi, n, &local))
}

/// Generator embedded on `qubits` of an `n_qubits` register.
pub fn generator_on(kind: GateKind, phi: f64, n_qubits: usize, qubits: &[usize]) -> PauliSum {
    use generators as g;
    let q = qubits;
    match kind {
        GateKind::G2 | GateKind::A2 => g::hop_a(n_qubits, q[0], q[1]),
        GateKind::G4 | GateKind::A4 => g::pair_hop_a(n_qubits, q[0], q[1], q[2], q[3]),
        GateKind::BempaA => g::bempa_a(n_qubits, q[0], q[1]),
        GateKind::BempaB => g::bempa_b(n_qubits, q[0], q[1], q[2]),
        GateKind::G2Complex => g::hop_a(n_qubits, q[0], q[1]).scale_re(phi.cos())
            - g::hop_s(n_qubits, q[0], q[1]).scale_re(phi.sin()),
        GateKind::G4Complex => g::pair_hop_a(n_qubits, q[0], q[1], q[2], q[3]).scale_re(phi.cos())
            - g::pair_hop_s(n_qubits, q[0], q[1], q[2], q[3]).scale_re(phi.sin()),
    }
}

/// Reflection `A(0)`: `-1` on `|q>` (`|10>` or `|1100>`).
pub fn reflection(kind: GateKind) -> Result<CMat> {
    if !kind.is_reflection() {
        return Err(Error::Invalid(format!("{} is not a reflection gate", kind.name())));
    }
    let dim = 1 << kind.arity();
    let mut m = CMat::identity(dim, dim);
    let (_, q) = kind.plane();
    m[(q, q)] = re(-1.0);
    Ok(m)
}
