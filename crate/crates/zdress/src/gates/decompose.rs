//! CNOT + single-qubit decompositions and resource counting.
//!
//! Rotations follow `R_k(α) = exp(−iασ_k/2)`, so `R_y(α)|0> = cos(α/2)|0> + sin(α/2)|1>`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::embed;
use crate::{CMat, C64};

use super::GateKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementaryKind {
    Cnot,
    Ry,
    Rz,
    H,
    X,
    /// `diag(1, e^{iα})`.
    Phase,
}

impl ElementaryKind {
    fn name(self) -> &'static str {
        match self {
            ElementaryKind::Cnot => "CNOT",
            ElementaryKind::Ry => "RY",
            ElementaryKind::Rz => "RZ",
            ElementaryKind::H => "H",
            ElementaryKind::X => "X",
            ElementaryKind::Phase => "PHASE",
        }
    }

    fn has_angle(self) -> bool {
        matches!(self, ElementaryKind::Ry | ElementaryKind::Rz | ElementaryKind::Phase)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementaryGate {
    pub kind: ElementaryKind,
    /// `[control, target]` for CNOT, a single qubit otherwise.
    pub qubits: Vec<usize>,
    /// Radians; zero for CNOT, H and X.
    pub angle: f64,
}

impl ElementaryGate {
    pub fn cnot(control: usize, target: usize) -> Self {
        assert_ne!(control, target, "CNOT control equals target");
        ElementaryGate {
            kind: ElementaryKind::Cnot,
            qubits: vec![control, target],
            angle: 0.0,
        }
    }

    pub fn single(kind: ElementaryKind, q: usize, angle: f64) -> Self {
        assert!(kind != ElementaryKind::Cnot);
        ElementaryGate {
            kind,
            qubits: vec![q],
            angle,
        }
    }

    pub fn ry(q: usize, a: f64) -> Self {
        Self::single(ElementaryKind::Ry, q, a)
    }
    pub fn rz(q: usize, a: f64) -> Self {
        Self::single(ElementaryKind::Rz, q, a)
    }
    pub fn h(q: usize) -> Self {
        Self::single(ElementaryKind::H, q, 0.0)
    }
    pub fn x(q: usize) -> Self {
        Self::single(ElementaryKind::X, q, 0.0)
    }
    pub fn phase(q: usize, a: f64) -> Self {
        Self::single(ElementaryKind::Phase, q, a)
    }

    /// Local matrix (`4×4` for CNOT with the control as the high bit).
    pub fn local_matrix(&self) -> CMat {
        let r = |v: f64| C64::new(v, 0.0);
        let (s, c) = (self.angle / 2.0).sin_cos();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m2 = |a: [C64; 4]| CMat::from_row_slice(2, 2, &a);
        match self.kind {
            ElementaryKind::Cnot => {
                let mut m = CMat::zeros(4, 4);
                for (row, col) in [(0, 0), (1, 1), (3, 2), (2, 3)] {
                    m[(row, col)] = r(1.0);
                }
                m
            }
            ElementaryKind::Ry => m2([r(c), r(-s), r(s), r(c)]),
            ElementaryKind::Rz => m2([C64::from_polar(1.0, -self.angle / 2.0), r(0.0), r(0.0), C64::from_polar(1.0, self.angle / 2.0)]),
            ElementaryKind::H => m2([r(h), r(h), r(h), r(-h)]),
            ElementaryKind::X => m2([r(0.0), r(1.0), r(1.0), r(0.0)]),
            ElementaryKind::Phase => m2([r(1.0), r(0.0), r(0.0), C64::from_polar(1.0, self.angle)]),
        }
    }
}

impl fmt::Display for ElementaryGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.name())?;
        for q in &self.qubits {
            write!(f, " {q}")?;
        }
        if self.kind.has_angle() {
            write!(f, " {:.17e}", self.angle)?;
        }
        Ok(())
    }
}

impl FromStr for ElementaryGate {
    type Err = Error;
    fn from_str(line: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse {
            line: 0,
            msg: format!("{msg}: {line:?}"),
        };
        let parts: Vec<&str> = line.split_whitespace().collect();
        let kind = match parts.first().copied() {
            Some("CNOT") => ElementaryKind::Cnot,
            Some("RY") => ElementaryKind::Ry,
            Some("RZ") => ElementaryKind::Rz,
            Some("H") => ElementaryKind::H,
            Some("X") => ElementaryKind::X,
            Some("PHASE") => ElementaryKind::Phase,
            _ => return Err(bad("unknown elementary gate")),
        };
        let nq = if kind == ElementaryKind::Cnot { 2 } else { 1 };
        let want = 1 + nq + usize::from(kind.has_angle());
        if parts.len() != want {
            return Err(bad("wrong field count"));
        }
        let qubits = parts[1..=nq]
            .iter()
            .map(|t| t.parse::<usize>().map_err(|_| bad("bad qubit")))
            .collect::<Result<Vec<_>>>()?;
        if nq == 2 && qubits[0] == qubits[1] {
            return Err(bad("CNOT control equals target"));
        }
        let angle = if kind.has_angle() {
            parts[want - 1].parse::<f64>().map_err(|_| bad("bad angle"))?
        } else {
            0.0
        };
        Ok(ElementaryGate { kind, qubits, angle })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub n_qubits: usize,
    pub gates: Vec<ElementaryGate>,
    pub declared_cnots: usize,
    pub declared_depth: usize,
}

impl Decomposition {
    fn new(n_qubits: usize, gates: Vec<ElementaryGate>) -> Self {
        let (declared_cnots, declared_depth) = count(&gates);
        Decomposition {
            n_qubits,
            gates,
            declared_cnots,
            declared_depth,
        }
    }

    /// Line format, one gate per line.
    pub fn emit(&self) -> String {
        self.gates.iter().map(|g| format!("{g}\n")).collect()
    }

    pub fn parse(n_qubits: usize, text: &str) -> Result<Self> {
        let mut gates = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let g: ElementaryGate = line.parse().map_err(|e| match e {
                Error::Parse { msg, .. } => Error::Parse { line: ln + 1, msg },
                other => other,
            })?;
            if g.qubits.iter().any(|&q| q >= n_qubits) {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: "qubit outside register".into(),
                });
            }
            gates.push(g);
        }
        Ok(Self::new(n_qubits, gates))
    }
}

fn count(gates: &[ElementaryGate]) -> (usize, usize) {
    let cnots = gates.iter().filter(|g| g.kind == ElementaryKind::Cnot).count();
    let mut free_at: Vec<usize> = Vec::new();
    let mut depth = 0;
    for g in gates {
        let top = *g.qubits.iter().max().unwrap_or(&0);
        if free_at.len() <= top {
            free_at.resize(top + 1, 0);
        }
        let layer = 1 + g.qubits.iter().map(|&q| free_at[q]).max().unwrap_or(0);
        for &q in &g.qubits {
            free_at[q] = layer;
        }
        depth = depth.max(layer);
    }
    (cnots, depth)
}

/// `(cnots, depth)` with greedy earliest-layer scheduling.
pub fn resource_count(d: &Decomposition) -> (usize, usize) {
    count(&d.gates)
}

/// Product of the gates in time order on `d.n_qubits` qubits.
pub fn decomposition_matrix(d: &Decomposition) -> CMat {
    let dim = 1 << d.n_qubits;
    d.gates.iter().fold(CMat::identity(dim, dim), |acc, g| {
        embed(&g.local_matrix(), &g.qubits, d.n_qubits) * acc
    })
}

/// Gray-code uniformly controlled `R_y`: applies `R_y(α)` to `target` iff all
/// `controls` are 1, using `2^m` CNOTs. `controls[m-1]` toggles most often.
pub fn mcry_gates(controls: &[usize], target: usize, alpha: f64) -> Vec<ElementaryGate> {
    let m = controls.len();
    let steps = 1usize << m;
    let a = alpha / steps as f64;
    let mut out = Vec::with_capacity(2 * steps);
    for t in 1..=steps {
        let flip = if t == steps { m - 1 } else { t.trailing_zeros() as usize };
        out.push(ElementaryGate::cnot(controls[m - 1 - flip], target));
        let sign = if t % 2 == 1 { -1.0 } else { 1.0 };
        out.push(ElementaryGate::ry(target, sign * a));
    }
    out
}

/// `C^m R_y(α)` with controls `0..m` and target `m`.
pub fn multi_controlled_ry(m: usize, alpha: f64) -> Result<Decomposition> {
    if !(1..=6).contains(&m) {
        return Err(Error::Invalid(format!("control count {m} outside 1..=6")));
    }
    let controls: Vec<usize> = (0..m).collect();
    Ok(Decomposition::new(m + 1, mcry_gates(&controls, m, alpha)))
}

/// Doubly controlled phase `e^{iα}` on `|111>` of `(a, b, c)`, six CNOTs.
fn ccphase_gates(a: usize, b: usize, c: usize, alpha: f64) -> Vec<ElementaryGate> {
    use ElementaryGate as E;
    let q = alpha / 4.0;
    vec![
        E::phase(a, q),
        E::phase(b, q),
        E::phase(c, q),
        E::cnot(a, c),
        E::phase(c, -q),
        E::cnot(b, c),
        E::phase(c, q),
        E::cnot(a, c),
        E::phase(c, -q),
        E::cnot(b, c),
        E::cnot(a, b),
        E::phase(b, -q),
        E::cnot(a, b),
    ]
}

fn cascade(i: usize, j: usize, k: usize, l: usize) -> Vec<ElementaryGate> {
    vec![
        ElementaryGate::cnot(l, k),
        ElementaryGate::cnot(l, j),
        ElementaryGate::cnot(l, i),
        ElementaryGate::x(k),
    ]
}

fn uncascade(i: usize, j: usize, k: usize, l: usize) -> Vec<ElementaryGate> {
    let mut g = cascade(i, j, k, l);
    g.reverse();
    g
}

/// Elementary decomposition of a real gate on local qubits `0..arity`.
///
/// The A4 reflection block has determinant −1, which the Gray-code scheme on
/// the target alone cannot produce; it is built as a conjugated `C^3 R_y(π)`
/// plus a doubly controlled `S` on the controls (20 CNOTs).
pub fn decompose(kind: GateKind, theta: f64) -> Result<Decomposition> {
    use ElementaryGate as E;
    let gates = match kind {
        GateKind::G2 | GateKind::BempaA => vec![
            E::h(0),
            E::cnot(0, 1),
            E::ry(0, -theta),
            E::ry(1, -theta),
            E::cnot(0, 1),
            E::h(0),
        ],
        GateKind::A2 => vec![
            E::h(0),
            E::cnot(0, 1),
            E::ry(0, theta),
            E::ry(1, theta),
            E::cnot(0, 1),
            E::h(0),
            E::ry(1, -FRAC_PI_2),
            E::cnot(0, 1),
            E::ry(1, FRAC_PI_2),
        ],
        GateKind::BempaB => {
            let mut g = vec![E::cnot(0, 1), E::cnot(0, 2), E::x(1)];
            g.extend(mcry_gates(&[1, 2], 0, 2.0 * theta));
            g.extend([E::x(1), E::cnot(0, 2), E::cnot(0, 1)]);
            g
        }
        GateKind::G4 => {
            let mut g = cascade(0, 1, 2, 3);
            g.extend(mcry_gates(&[0, 1, 2], 3, -2.0 * theta));
            g.extend(uncascade(0, 1, 2, 3));
            g
        }
        GateKind::A4 => {
            // Mapped block on q3 is U = −R_y(−2θ)Z = i·W R_y(π) W†,
            // W = R_y(π−θ)·Z·H·S†.
            let w_dag = [
                E::ry(3, theta - PI),
                E::phase(3, PI),
                E::h(3),
                E::phase(3, FRAC_PI_2),
            ];
            let w = [
                E::phase(3, -FRAC_PI_2),
                E::h(3),
                E::phase(3, PI),
                E::ry(3, PI - theta),
            ];
            let mut g = cascade(0, 1, 2, 3);
            g.extend(w_dag);
            g.extend(mcry_gates(&[0, 1, 2], 3, PI));
            g.extend(w);
            g.extend(ccphase_gates(0, 1, 2, FRAC_PI_2));
            g.extend(uncascade(0, 1, 2, 3));
            g
        }
        GateKind::G2Complex | GateKind::G4Complex => {
            return Err(Error::Invalid(format!("no decomposition for {}", kind.name())))
        }
    };
    Ok(Decomposition::new(kind.arity(), gates))
}
