//! Parametrised circuits of rotation gates: simulation, Jacobians,
//! reachability probes and greedy spanning-circuit construction.
//!
//! Every gate in [`GateKind`] is a 2×2 block on a set of basis-state pairs,
//! so a circuit compiles to a list of index pairs per gate over either the
//! full register or a sector that the gates conserve.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gates::{block, block_dphi, block_dtheta, Block, GateKind};
use crate::sector::{bit, format_bits, parse_bits, SectorBasis};
use crate::C64;

/// Relative singular-value cutoff for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Param(usize),
    Fixed(f64),
}

impl Angle {
    pub fn value(self, params: &[f64]) -> f64 {
        match self {
            Angle::Param(k) => params[k],
            Angle::Fixed(a) => a,
        }
    }

    fn param(self) -> Option<usize> {
        match self {
            Angle::Param(k) => Some(k),
            Angle::Fixed(_) => None,
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angle::Param(k) => write!(f, "p{k}"),
            Angle::Fixed(a) => write!(f, "{a:.17e}"),
        }
    }
}

impl FromStr for Angle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if let Some(k) = s.strip_prefix('p') {
            k.parse()
                .map(Angle::Param)
                .map_err(|_| Error::Invalid(format!("bad parameter reference {s:?}")))
        } else {
            s.parse()
                .map(Angle::Fixed)
                .map_err(|_| Error::Invalid(format!("bad angle {s:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateInstance {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub theta: Angle,
    /// Phase angle, present exactly for the complex kinds.
    pub phi: Option<Angle>,
}

impl GateInstance {
    pub fn new(kind: GateKind, qubits: &[usize], theta: Angle) -> Self {
        GateInstance {
            kind,
            qubits: qubits.to_vec(),
            theta,
            phi: None,
        }
    }

    pub fn with_phase(mut self, phi: Angle) -> Self {
        self.phi = Some(phi);
        self
    }
}

impl fmt::Display for GateInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        for q in &self.qubits {
            write!(f, " {q}")?;
        }
        write!(f, " {}", self.theta)?;
        if let Some(p) = self.phi {
            write!(f, " {p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub input_state: u64,
    pub gates: Vec<GateInstance>,
    pub n_params: usize,
}

impl Circuit {
    pub fn new(n_qubits: usize, input_state: u64) -> Self {
        Circuit {
            n_qubits,
            input_state,
            gates: Vec::new(),
            n_params: 0,
        }
    }

    /// Appends `kind` on `qubits` with a fresh parameter (two for complex kinds).
    pub fn push_new(&mut self, kind: GateKind, qubits: &[usize]) -> Result<()> {
        let mut g = GateInstance::new(kind, qubits, Angle::Param(self.n_params));
        let mut extra = 1;
        if kind.is_complex() {
            g.phi = Some(Angle::Param(self.n_params + 1));
            extra = 2;
        }
        self.check_gate(&g, self.n_params + extra)?;
        self.gates.push(g);
        self.n_params += extra;
        Ok(())
    }

    fn check_gate(&self, g: &GateInstance, n_params: usize) -> Result<()> {
        if g.qubits.len() != g.kind.arity() {
            return Err(Error::Invalid(format!(
                "{} needs {} qubits, got {}",
                g.kind,
                g.kind.arity(),
                g.qubits.len()
            )));
        }
        for (i, &q) in g.qubits.iter().enumerate() {
            if q >= self.n_qubits {
                return Err(Error::Invalid(format!("qubit {q} outside {}-qubit register", self.n_qubits)));
            }
            if g.qubits[..i].contains(&q) {
                return Err(Error::Invalid(format!("repeated qubit {q} in {g}")));
            }
        }
        if g.kind.is_complex() != g.phi.is_some() {
            return Err(Error::Invalid(format!("{}: phase angle present iff complex kind", g.kind)));
        }
        for a in std::iter::once(g.theta).chain(g.phi) {
            if let Angle::Param(k) = a {
                if k >= n_params {
                    return Err(Error::Invalid(format!("parameter p{k} beyond declared {n_params}")));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > 30 {
            return Err(Error::Invalid(format!("register of {} qubits", self.n_qubits)));
        }
        if self.input_state >> self.n_qubits != 0 {
            return Err(Error::Invalid("input state wider than register".into()));
        }
        let mut used = vec![false; self.n_params];
        for g in &self.gates {
            self.check_gate(g, self.n_params)?;
            for k in std::iter::once(g.theta).chain(g.phi).filter_map(Angle::param) {
                used[k] = true;
            }
        }
        if let Some(k) = used.iter().position(|u| !u) {
            return Err(Error::Invalid(format!("parameter p{k} is never used")));
        }
        Ok(())
    }

    pub fn is_real(&self) -> bool {
        self.gates.iter().all(|g| !g.kind.is_complex())
    }

    /// First `k` gates with parameters renumbered in order of first use.
    pub fn truncated(&self, k: usize) -> Circuit {
        let mut map = HashMap::new();
        let mut remap = |a: Angle| match a {
            Angle::Param(p) => {
                let next = map.len();
                Angle::Param(*map.entry(p).or_insert(next))
            }
            fixed => fixed,
        };
        let gates: Vec<GateInstance> = self.gates[..k.min(self.gates.len())]
            .iter()
            .map(|g| GateInstance {
                kind: g.kind,
                qubits: g.qubits.clone(),
                theta: remap(g.theta),
                phi: g.phi.map(&mut remap),
            })
            .collect();
        Circuit {
            n_qubits: self.n_qubits,
            input_state: self.input_state,
            gates,
            n_params: map.len(),
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Circuit> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        text.parse()
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.n_qubits)?;
        writeln!(f, "input {}", format_bits(self.input_state, self.n_qubits))?;
        writeln!(f, "params {}", self.n_params)?;
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

impl FromStr for Circuit {
    type Err = Error;
    fn from_str(text: &str) -> Result<Self> {
        let mut n_qubits = None;
        let mut input = None;
        let mut n_params = None;
        let mut gates = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: no + 1, msg };
            let words: Vec<&str> = line.split_whitespace().collect();
            match words[0] {
                "qubits" | "input" | "params" if words.len() != 2 => {
                    return Err(err(format!("expected one value after {}", words[0])));
                }
                "qubits" => n_qubits = Some(words[1].parse().map_err(|_| err("bad qubit count".into()))?),
                "input" => input = Some(parse_bits(words[1]).map_err(|e| err(e.to_string()))?),
                "params" => n_params = Some(words[1].parse().map_err(|_| err("bad parameter count".into()))?),
                kind => {
                    let kind: GateKind = kind.parse().map_err(|e: Error| err(e.to_string()))?;
                    let n_angles = if kind.is_complex() { 2 } else { 1 };
                    if words.len() != 1 + kind.arity() + n_angles {
                        return Err(err(format!("{kind} takes {} qubits and {n_angles} angle(s)", kind.arity())));
                    }
                    let qubits = words[1..=kind.arity()]
                        .iter()
                        .map(|w| w.parse::<usize>().map_err(|_| err(format!("bad qubit {w:?}"))))
                        .collect::<Result<Vec<_>>>()?;
                    let mut angles = words[1 + kind.arity()..].iter().map(|w| w.parse::<Angle>());
                    let theta = angles.next().unwrap().map_err(|e| err(e.to_string()))?;
                    let phi = angles.next().transpose().map_err(|e| err(e.to_string()))?;
                    gates.push(GateInstance { kind, qubits, theta, phi });
                }
            }
        }
        let n_qubits = n_qubits.ok_or(Error::Parse { line: 0, msg: "missing `qubits`".into() })?;
        let input_state: u64 = input.ok_or(Error::Parse { line: 0, msg: "missing `input`".into() })?;
        let n_params = n_params.ok_or(Error::Parse { line: 0, msg: "missing `params`".into() })?;
        let c = Circuit {
            n_qubits,
            input_state,
            gates,
            n_params,
        };
        c.validate()?;
        Ok(c)
    }
}

/// The 19-parameter circuit shipped with the crate.
pub fn fig1_circuit() -> Circuit {
    include_str!("../data/fig1_circuit.txt")
        .parse()
        .expect("shipped circuit parses")
}

struct CompiledGate {
    kind: GateKind,
    pairs: Vec<(usize, usize)>,
    theta: Angle,
    phi: Option<Angle>,
}

impl CompiledGate {
    fn angles(&self, params: &[f64]) -> (f64, f64) {
        (self.theta.value(params), self.phi.map_or(0.0, |p| p.value(params)))
    }

    fn apply(&self, params: &[f64], v: &mut [C64]) {
        let (t, p) = self.angles(params);
        apply_block(&block(self.kind, t, p), &self.pairs, v);
    }

    fn apply_adjoint(&self, params: &[f64], v: &mut [C64]) {
        let (t, p) = self.angles(params);
        let b = block(self.kind, t, p);
        let adj = [[b[0][0].conj(), b[1][0].conj()], [b[0][1].conj(), b[1][1].conj()]];
        apply_block(&adj, &self.pairs, v);
    }
}

fn apply_block(b: &Block, pairs: &[(usize, usize)], v: &mut [C64]) {
    for &(i, j) in pairs {
        let (x, y) = (v[i], v[j]);
        v[i] = b[0][0] * x + b[0][1] * y;
        v[j] = b[1][0] * x + b[1][1] * y;
    }
}

/// Derivative block applied to `v`; zero outside the gate's pairs.
fn derivative(b: &Block, pairs: &[(usize, usize)], v: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::default(); v.len()];
    for &(i, j) in pairs {
        let (x, y) = (v[i], v[j]);
        out[i] = b[0][0] * x + b[0][1] * y;
        out[j] = b[1][0] * x + b[1][1] * y;
    }
    out
}

/// A circuit lowered to index pairs over a basis (full register or sector).
pub struct Compiled {
    dim: usize,
    n_params: usize,
    input_index: usize,
    gates: Vec<CompiledGate>,
}

impl Compiled {
    /// Compiles over the whole `2^n` register.
    pub fn full(c: &Circuit) -> Result<Self> {
        c.validate()?;
        if c.n_qubits > 24 {
            return Err(Error::TooLarge {
                what: "state-vector register",
                limit: 24,
                got: c.n_qubits,
            });
        }
        let states: Vec<u64> = (0..1u64 << c.n_qubits).collect();
        Self::build(c, &states, |s| Some(s as usize))
    }

    /// Compiles over `sector`, which every gate must map into itself.
    pub fn on_sector(c: &Circuit, sector: &SectorBasis) -> Result<Self> {
        c.validate()?;
        if sector.n_qubits() != c.n_qubits {
            return Err(Error::QubitMismatch(c.n_qubits, sector.n_qubits()));
        }
        Self::build(c, sector.states(), |s| sector.index_of(s))
    }

    fn build(c: &Circuit, states: &[u64], index: impl Fn(u64) -> Option<usize>) -> Result<Self> {
        let n = c.n_qubits;
        let input_index = index(c.input_state).ok_or_else(|| {
            Error::Invalid(format!("input {} outside the sector", format_bits(c.input_state, n)))
        })?;
        let mut gates = Vec::with_capacity(c.gates.len());
        for g in &c.gates {
            let k = g.qubits.len();
            let (p, q) = g.kind.plane();
            let mask: u64 = g.qubits.iter().map(|&x| 1u64 << (n - 1 - x)).sum();
            let with_local = |s: u64, l: usize| {
                g.qubits.iter().enumerate().fold(s & !mask, |acc, (t, &x)| {
                    if l >> (k - 1 - t) & 1 == 1 {
                        acc | 1u64 << (n - 1 - x)
                    } else {
                        acc
                    }
                })
            };
            let local = |s: u64| {
                g.qubits
                    .iter()
                    .fold(0usize, |acc, &x| acc << 1 | usize::from(bit(s, n, x)))
            };
            let mut pairs = Vec::new();
            for (i, &s) in states.iter().enumerate() {
                let l = local(s);
                if l != p && l != q {
                    continue;
                }
                let other = with_local(s, if l == p { q } else { p });
                let Some(j) = index(other) else {
                    return Err(Error::Invalid(format!(
                        "gate {g} maps {} outside the basis",
                        format_bits(s, n)
                    )));
                };
                if l == p {
                    pairs.push((i, j));
                }
            }
            gates.push(CompiledGate {
                kind: g.kind,
                pairs,
                theta: g.theta,
                phi: g.phi,
            });
        }
        Ok(Compiled {
            dim: states.len(),
            n_params: c.n_params,
            input_index,
            gates,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::Invalid(format!(
                "expected {} parameters, got {}",
                self.n_params,
                params.len()
            )));
        }
        Ok(())
    }

    /// `U(θ)|input>`.
    pub fn state(&self, params: &[f64]) -> Result<Vec<C64>> {
        self.check_params(params)?;
        let mut v = vec![C64::default(); self.dim];
        v[self.input_index] = C64::new(1.0, 0.0);
        for g in &self.gates {
            g.apply(params, &mut v);
        }
        Ok(v)
    }

    /// State and `∂ψ/∂θ_k` for every parameter, by forward insertion of each
    /// gate's derivative block.
    pub fn state_and_jacobian(&self, params: &[f64]) -> Result<(Vec<C64>, Vec<Vec<C64>>)> {
        self.check_params(params)?;
        let mut cols = vec![vec![C64::default(); self.dim]; self.n_params];
        let mut v = vec![C64::default(); self.dim];
        v[self.input_index] = C64::new(1.0, 0.0);
        for (idx, g) in self.gates.iter().enumerate() {
            let (t, p) = g.angles(params);
            let mut push = |k: usize, b: Block| {
                let mut d = derivative(&b, &g.pairs, &v);
                for later in &self.gates[idx + 1..] {
                    later.apply(params, &mut d);
                }
                cols[k].iter_mut().zip(&d).for_each(|(c, x)| *c += x);
            };
            if let Some(k) = g.theta.param() {
                push(k, block_dtheta(g.kind, t, p));
            }
            if let Some(k) = g.phi.and_then(Angle::param) {
                push(k, block_dphi(g.kind, t, p));
            }
            g.apply(params, &mut v);
        }
        Ok((v, cols))
    }

    /// `∇_θ Re<ψ|M|ψ>` for any `M` given as `m(ψ) = M ψ` (Hermitian `M`),
    /// by one reverse sweep; returns `(value, gradient)`.
    pub fn expectation_gradient(&self, params: &[f64], m: impl Fn(&[C64]) -> Vec<C64>) -> Result<(f64, Vec<f64>)> {
        let psi = self.state(params)?;
        let mut lam = m(&psi);
        let value = crate::linalg::inner(&psi, &lam).re;
        let mut grad = vec![0.0; self.n_params];
        let mut phi = psi;
        for g in self.gates.iter().rev() {
            g.apply_adjoint(params, &mut phi);
            let (t, p) = g.angles(params);
            // ψ_after = U ψ_before; d value = 2 Re <λ| dU ψ_before>.
            if let Some(k) = g.theta.param() {
                let d = derivative(&block_dtheta(g.kind, t, p), &g.pairs, &phi);
                grad[k] += 2.0 * crate::linalg::inner(&lam, &d).re;
            }
            if let Some(k) = g.phi.and_then(Angle::param) {
                let d = derivative(&block_dphi(g.kind, t, p), &g.pairs, &phi);
                grad[k] += 2.0 * crate::linalg::inner(&lam, &d).re;
            }
            g.apply_adjoint(params, &mut lam);
        }
        Ok((value, grad))
    }
}

/// Full-register state `U(θ)|input>`.
pub fn apply_circuit(c: &Circuit, params: &[f64]) -> Result<Vec<C64>> {
    Compiled::full(c)?.state(params)
}

/// Sector-compressed state, ordered as `sector.states()`.
pub fn apply_circuit_sector(c: &Circuit, params: &[f64], sector: &SectorBasis) -> Result<Vec<C64>> {
    Compiled::on_sector(c, sector)?.state(params)
}

#[derive(Debug, Clone)]
pub struct JacobianReport {
    /// `w × p`, column `k` is `∂_k` of the sector amplitudes.
    pub matrix: DMatrix<C64>,
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub reference_point: Vec<f64>,
}

/// Real rank of a complex matrix (rows of real and imaginary parts stacked).
pub fn real_rank(m: &DMatrix<C64>) -> (usize, Vec<f64>) {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return (0, Vec::new());
    }
    let stacked = DMatrix::<f64>::from_fn(2 * r, c, |i, j| if i < r { m[(i, j)].re } else { m[(i - r, j)].im });
    let mut sv: Vec<f64> = stacked.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let top = sv.first().copied().unwrap_or(0.0);
    let rank = if top == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > RANK_TOL * top).count()
    };
    (rank, sv)
}

pub fn jacobian(c: &Circuit, params: &[f64], sector: &SectorBasis) -> Result<JacobianReport> {
    let compiled = Compiled::on_sector(c, sector)?;
    let (_, cols) = compiled.state_and_jacobian(params)?;
    let matrix = DMatrix::from_fn(compiled.dim(), cols.len(), |i, k| cols[k][i]);
    let (rank, singular_values) = real_rank(&matrix);
    Ok(JacobianReport {
        matrix,
        rank,
        singular_values,
        reference_point: params.to_vec(),
    })
}

/// Uniform parameters in `(−π, π)`.
pub fn random_params(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect()
}

/// Gaussian-normalised point on `S^{w−1}`.
pub fn random_unit_vector(rng: &mut impl Rng, w: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..w).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Cost `‖f(θ) − y‖²` below which a target counts as reached.
    pub tol: f64,
}

impl Default for ReachConfig {
    fn default() -> Self {
        ReachConfig {
            restarts: 5,
            max_iters: 2000,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachReport {
    pub n_targets: usize,
    pub reached: usize,
    /// Best cost per target, in target order.
    pub residuals: Vec<f64>,
    pub tol: f64,
}

impl ReachReport {
    pub fn max_reached_cost(&self) -> Option<f64> {
        self.residuals.iter().copied().filter(|&r| r < self.tol).reduce(f64::max)
    }

    pub fn unreached(&self) -> Vec<f64> {
        self.residuals.iter().copied().filter(|&r| r >= self.tol).collect()
    }
}

fn real_residual(psi: &[C64], y: &[f64]) -> Vec<f64> {
    psi.iter().zip(y).map(|(a, b)| a.re - b).collect()
}

/// Levenberg–Marquardt on `‖Re f(θ) − y‖²` from `start`; returns `(θ, cost)`.
pub fn fit_target(compiled: &Compiled, y: &[f64], start: &[f64], max_iters: usize) -> Result<(Vec<f64>, f64)> {
    let p = compiled.n_params();
    let mut theta = start.to_vec();
    let (psi, mut cols) = compiled.state_and_jacobian(&theta)?;
    let mut r = real_residual(&psi, y);
    let mut cost: f64 = r.iter().map(|x| x * x).sum();
    let mut lambda = 1e-3;
    for _ in 0..max_iters {
        if cost < 1e-30 {
            break;
        }
        let j = DMatrix::from_fn(y.len(), p, |i, k| cols[k][i].re);
        let jt = j.transpose();
        let a = &jt * &j;
        let g = &jt * DVector::from_column_slice(&r);
        let mut accepted = false;
        while lambda < 1e12 {
            let mut damped = a.clone();
            for k in 0..p {
                damped[(k, k)] += lambda * (a[(k, k)] + 1e-12);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 4.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            let (psi_t, cols_t) = compiled.state_and_jacobian(&trial)?;
            let r_t = real_residual(&psi_t, y);
            let cost_t: f64 = r_t.iter().map(|x| x * x).sum();
            if cost_t < cost {
                let done = cost - cost_t <= 1e-15 * cost;
                theta = trial;
                cols = cols_t;
                r = r_t;
                cost = cost_t;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = !done;
                break;
            }
            lambda *= 2.0;
        }
        if !accepted {
            break;
        }
    }
    Ok((theta, cost))
}

/// Probes random targets on the real unit sphere of `sector`.
///
/// Target `t` draws its point and restarts from a stream seeded with
/// `seed ^ t`, so results do not depend on scheduling.
pub fn reachability_test(c: &Circuit, sector: &SectorBasis, n_targets: usize, seed: u64) -> Result<ReachReport> {
    reachability_with(c, sector, n_targets, seed, ReachConfig::default())
}

pub fn reachability_with(
    c: &Circuit,
    sector: &SectorBasis,
    n_targets: usize,
    seed: u64,
    cfg: ReachConfig,
) -> Result<ReachReport> {
    if !c.is_real() {
        return Err(Error::Invalid("reachability needs a real-mode circuit".into()));
    }
    let compiled = Compiled::on_sector(c, sector)?;
    let residuals = (0..n_targets)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ t as u64);
            let y = random_unit_vector(&mut rng, compiled.dim());
            let mut best = f64::INFINITY;
            for _ in 0..cfg.restarts.max(1) {
                let start = random_params(&mut rng, compiled.n_params());
                let (_, cost) = fit_target(&compiled, &y, &start, cfg.max_iters)?;
                best = best.min(cost);
                if best < cfg.tol {
                    break;
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<f64>>>()?;
    let reached = residuals.iter().filter(|&&r| r < cfg.tol).count();
    Ok(ReachReport {
        n_targets,
        reached,
        residuals,
        tol: cfg.tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanningOptions {
    pub max_extras: usize,
    pub probe_targets: usize,
    /// Pool candidates tried per extra gate before giving up.
    pub candidates_per_extra: usize,
    pub reach: ReachConfig,
}

impl Default for SpanningOptions {
    fn default() -> Self {
        SpanningOptions {
            max_extras: 4,
            probe_targets: 50,
            candidates_per_extra: 8,
            reach: ReachConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpanningResult {
    pub circuit: Circuit,
    /// Gates in the rank-`w−1` core; later gates are extras.
    pub core_len: usize,
    pub rank: usize,
    /// Reached counts of the probe after the core and after each extra.
    pub probes: Vec<usize>,
}

/// Greedy construction: append pool gates (each with a fresh parameter) that
/// raise the Jacobian rank at a seeded random reference until it reaches
/// `w−1`, then add up to `max_extras` gates while the reachability probe
/// improves.
pub fn build_spanning_circuit(
    sector: &SectorBasis,
    input_state: u64,
    pool: &[GateInstance],
    seed: u64,
    opts: SpanningOptions,
) -> Result<SpanningResult> {
    if pool.is_empty() {
        return Err(Error::Invalid("empty gate pool".into()));
    }
    let target = sector.dim().saturating_sub(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut circuit = Circuit::new(sector.n_qubits(), input_state);
    let mut reference: Vec<f64> = Vec::new();
    let mut rank = 0;
    let mut order: Vec<usize> = (0..pool.len()).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
    while rank < target {
        let mut grew = false;
        for &i in &order {
            let g = &pool[i];
            let mut trial = circuit.clone();
            trial.push_new(g.kind, &g.qubits)?;
            let mut trial_ref = reference.clone();
            trial_ref.extend(random_params(&mut rng, trial.n_params - circuit.n_params));
            let r = jacobian(&trial, &trial_ref, sector)?.rank;
            if r > rank {
                circuit = trial;
                reference = trial_ref;
                rank = r;
                grew = true;
                if rank == target {
                    break;
                }
            }
        }
        if !grew {
            return Err(Error::Numerical(format!(
                "pool exhausted at Jacobian rank {rank} < {target}"
            )));
        }
    }
    let core_len = circuit.gates.len();
    let mut probes = Vec::new();
    if opts.max_extras > 0 && opts.probe_targets > 0 {
        let probe = |c: &Circuit| reachability_with(c, sector, opts.probe_targets, seed, opts.reach).map(|r| r.reached);
        let mut best = probe(&circuit)?;
        probes.push(best);
        let mut next = 0usize;
        for _ in 0..opts.max_extras {
            if best == opts.probe_targets {
                break;
            }
            let mut improved = false;
            for _ in 0..opts.candidates_per_extra.min(pool.len()) {
                let g = &pool[order[next % order.len()]];
                next += 1;
                let mut trial = circuit.clone();
                trial.push_new(g.kind, &g.qubits)?;
                let reached = probe(&trial)?;
                if reached > best {
                    circuit = trial;
                    best = reached;
                    probes.push(best);
                    improved = true;
                    break;
                }
            }
            if !improved {
                break;
            }
        }
    }
    Ok(SpanningResult {
        circuit,
        core_len,
        rank,
        probes,
    })
}

/// Gate templates for the `S_z`-preserving fuzzy-sphere pool: same-`m` `G2`
/// and every `G4` quartet with `m_i + m_j = m_k + m_l`.
pub fn fuzzy_gate_pool(n_orbitals: usize) -> Vec<GateInstance> {
    let n = 2 * n_orbitals;
    let w = crate::sector::fuzzy_weights(n_orbitals);
    let zero = Angle::Fixed(0.0);
    let mut out: Vec<GateInstance> = (0..n_orbitals)
        .map(|o| GateInstance::new(GateKind::G2, &[2 * o, 2 * o + 1], zero))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for &(k, l) in &pairs[a + 1..] {
            if k == i || k == j || l == i || l == j || w[i] + w[j] != w[k] + w[l] {
                continue;
            }
            out.push(GateInstance::new(GateKind::G4, &[i, j, k, l], zero));
        }
    }
    out
}

/// All-pair (or adjacent-only) `G2` templates on `n` qubits.
pub fn g2_pool(n: usize, adjacent_only: bool) -> Vec<GateInstance> {
    let zero = Angle::Fixed(0.0);
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !adjacent_only || j == i + 1)
        .map(|(i, j)| GateInstance::new(GateKind::G2, &[i, j], zero))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{gate_dtheta, gate_matrix, generator_on};
    use crate::linalg::{embed, norm};
    use crate::sector::{enumerate_sector, SectorSpec};
    use proptest::prelude::*;

    fn fuzzy4() -> SectorBasis {
        enumerate_sector(&SectorSpec::fuzzy(4)).unwrap()
    }

    fn dense_state(c: &Circuit, params: &[f64]) -> Vec<C64> {
        let dim = 1usize << c.n_qubits;
        let mut v = nalgebra::DVector::<C64>::zeros(dim);
        v[c.input_state as usize] = C64::new(1.0, 0.0);
        for g in &c.gates {
            let phi = g.phi.map(|p| p.value(params));
            let u = gate_matrix(g.kind, g.theta.value(params), phi).unwrap();
            v = embed(&u, &g.qubits, c.n_qubits) * v;
        }
        v.iter().copied().collect()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn shipped_circuit_shape() {
        let c = fig1_circuit();
        assert_eq!(c.n_params, 19);
        assert_eq!(c.gates.len(), 19);
        assert_eq!(c.input_state, parse_bits("01010101").unwrap());
        let text = c.to_string();
        assert_eq!(text.parse::<Circuit>().unwrap(), c);
        let core = c.truncated(17);
        assert_eq!(core.n_params, 17);
        core.validate().unwrap();
    }

    #[test]
    fn parse_errors() {
        assert!("qubits 2\ninput 01\nparams 1\nG2 0 0 p0\n".parse::<Circuit>().is_err());
        assert!("qubits 2\ninput 01\nparams 2\nG2 0 1 p0\n".parse::<Circuit>().is_err());
        assert!("qubits 2\ninput 01\nparams 1\nG4 0 1 p0\n".parse::<Circuit>().is_err());
        assert!("qubits 2\ninput 01\nparams 1\nG2_COMPLEX 0 1 p0\n".parse::<Circuit>().is_err());
        let c: Circuit = "qubits 2\ninput 01\nparams 0\nG2 0 1 0.5\n".parse().unwrap();
        assert_eq!(c.gates[0].theta, Angle::Fixed(0.5));
    }

    #[test]
    fn zero_params_identity() {
        let c = fig1_circuit();
        let v = apply_circuit(&c, &[0.0; 19]).unwrap();
        assert_eq!(v[c.input_state as usize], C64::new(1.0, 0.0));
        assert!((norm(&v) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_g2_matches_gate_matrix() {
        let mut c = Circuit::new(2, 0b01);
        c.push_new(GateKind::G2, &[0, 1]).unwrap();
        let t = 0.37;
        let v = apply_circuit(&c, &[t]).unwrap();
        let u = gate_matrix(GateKind::G2, t, None).unwrap();
        for r in 0..4 {
            assert!((v[r] - u[(r, 1)]).norm() < 1e-15);
        }
        assert!((v[1].re - t.cos()).abs() < 1e-15);
        assert!((v[2].re - t.sin()).abs() < 1e-15);
    }

    #[test]
    fn sector_support_and_dense_agreement() {
        let c = fig1_circuit();
        let s = fuzzy4();
        let mut r = rng(11);
        for _ in 0..5 {
            let p = random_params(&mut r, 19);
            let v = apply_circuit(&c, &p).unwrap();
            let d = dense_state(&c, &p);
            let diff = v.iter().zip(&d).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-13);
            for (i, a) in v.iter().enumerate() {
                if s.index_of(i as u64).is_none() {
                    assert_eq!(a.norm(), 0.0);
                }
            }
            let vs = apply_circuit_sector(&c, &p, &s).unwrap();
            for (k, &st) in s.states().iter().enumerate() {
                assert_eq!(vs[k], v[st as usize]);
            }
            assert!((norm(&v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sector_compile_rejects_non_conserving_gate() {
        let mut c = Circuit::new(8, parse_bits("01010101").unwrap());
        c.push_new(GateKind::G2, &[1, 2]).unwrap();
        assert!(Compiled::on_sector(&c, &fuzzy4()).is_err());
    }

    #[test]
    fn jacobian_at_zero_is_generator_action() {
        let c = fig1_circuit();
        let s = fuzzy4();
        let rep = jacobian(&c, &[0.0; 19], &s).unwrap();
        // Each gate used once: J_k = sector part of i·c·H_k|ψ0>.
        let dim = 1usize << 8;
        for (k, g) in c.gates.iter().enumerate() {
            let h = generator_on(g.kind, 0.0, 8, &g.qubits).to_matrix().unwrap();
            let mut psi0 = nalgebra::DVector::<C64>::zeros(dim);
            psi0[c.input_state as usize] = C64::new(1.0, 0.0);
            let col = h * psi0 * C64::new(0.0, g.kind.prefactor());
            for (i, &st) in s.states().iter().enumerate() {
                assert!((rep.matrix[(i, k)] - col[st as usize]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn shipped_rank_17() {
        let c = fig1_circuit();
        let s = fuzzy4();
        let mut r = rng(2024);
        for _ in 0..5 {
            let p = random_params(&mut r, 19);
            assert_eq!(jacobian(&c, &p, &s).unwrap().rank, 17);
        }
    }

    #[test]
    fn adjacent_only_rank_bound() {
        // Free-fermion bound n_q (N_q - n_q) = 4 < w - 1 = 5 on (4,2).
        let s = enumerate_sector(&SectorSpec::hamming(4, 2)).unwrap();
        let mut c = Circuit::new(4, 0b0011);
        for _ in 0..3 {
            for i in 0..3 {
                c.push_new(GateKind::G2, &[i, i + 1]).unwrap();
            }
        }
        let mut r = rng(5);
        for _ in 0..20 {
            let p = random_params(&mut r, c.n_params);
            assert!(jacobian(&c, &p, &s).unwrap().rank <= 4);
        }
    }

    #[test]
    fn repeated_generator_rank() {
        let s = enumerate_sector(&SectorSpec::hamming(3, 1)).unwrap();
        let mut c = Circuit::new(3, 0b001);
        c.push_new(GateKind::G2, &[1, 2]).unwrap();
        c.push_new(GateKind::G2, &[0, 1]).unwrap();
        c.push_new(GateKind::G2, &[1, 2]).unwrap();
        // At θ = 0 both G_12 columns coincide and G_01 annihilates |001>.
        assert_eq!(jacobian(&c, &[0.0; 3], &s).unwrap().rank, 1);
        assert_eq!(jacobian(&c, &[0.4, 0.9, -0.3], &s).unwrap().rank, 2);
        let mut same = Circuit::new(3, 0b001);
        same.push_new(GateKind::G2, &[1, 2]).unwrap();
        same.push_new(GateKind::G2, &[1, 2]).unwrap();
        assert_eq!(jacobian(&same, &[0.0, 0.0], &s).unwrap().rank, 1);
        assert_eq!(jacobian(&same, &[0.3, 1.1], &s).unwrap().rank, 1);
    }

    #[test]
    fn trivial_target_reached() {
        let c = fig1_circuit();
        let s = fuzzy4();
        let comp = Compiled::on_sector(&c, &s).unwrap();
        let p0 = vec![0.0; 19];
        let y: Vec<f64> = comp.state(&p0).unwrap().iter().map(|a| a.re).collect();
        let (_, cost) = fit_target(&comp, &y, &p0, 10).unwrap();
        assert!(cost < 1e-14);
    }

    #[test]
    fn small_reachability() {
        // Rank-5 all-pair circuit on (4,2) reaches random targets.
        let s = enumerate_sector(&SectorSpec::hamming(4, 2)).unwrap();
        let res = build_spanning_circuit(&s, 0b0011, &g2_pool(4, false), 3, SpanningOptions { max_extras: 0, ..Default::default() }).unwrap();
        assert_eq!(res.rank, 5);
        assert_eq!(res.circuit.n_params, 5);
        let rep = reachability_test(&res.circuit, &s, 10, 1).unwrap();
        assert_eq!(rep.n_targets, 10);
        assert!(rep.reached >= 1);
        let again = reachability_test(&res.circuit, &s, 10, 1).unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn spanning_errors_on_adjacent_pool() {
        let s = enumerate_sector(&SectorSpec::hamming(4, 2)).unwrap();
        let r = build_spanning_circuit(&s, 0b0011, &g2_pool(4, true), 1, SpanningOptions::default());
        assert!(matches!(r, Err(Error::Numerical(_))));
    }

    #[test]
    fn spanning_fuzzy_core() {
        let s = fuzzy4();
        let res = build_spanning_circuit(
            &s,
            parse_bits("01010101").unwrap(),
            &fuzzy_gate_pool(4),
            9,
            SpanningOptions { max_extras: 0, ..Default::default() },
        )
        .unwrap();
        assert_eq!(res.rank, 17);
        assert_eq!(res.circuit.n_params, 17);
    }

    #[test]
    fn gradient_adjoint_matches_jacobian() {
        let c = fig1_circuit();
        let s = fuzzy4();
        let comp = Compiled::on_sector(&c, &s).unwrap();
        let mut r = rng(8);
        let p = random_params(&mut r, 19);
        let diag: Vec<f64> = (0..s.dim()).map(|i| i as f64 - 3.0).collect();
        let m = |v: &[C64]| v.iter().zip(&diag).map(|(a, d)| a * d).collect::<Vec<_>>();
        let (val, g) = comp.expectation_gradient(&p, m).unwrap();
        let (psi, cols) = comp.state_and_jacobian(&p).unwrap();
        let want: f64 = psi.iter().zip(&diag).map(|(a, d)| a.norm_sqr() * d).sum();
        assert!((val - want).abs() < 1e-12);
        for k in 0..19 {
            let gk: f64 = 2.0 * psi.iter().zip(&cols[k]).zip(&diag).map(|((a, b), d)| (a.conj() * b).re * d).sum::<f64>();
            assert!((g[k] - gk).abs() < 1e-12);
        }
    }

    #[test]
    fn complex_gates_simulate() {
        let mut c = Circuit::new(2, 0b01);
        c.push_new(GateKind::G2Complex, &[0, 1]).unwrap();
        let v = apply_circuit(&c, &[0.4, 0.7]).unwrap();
        let u = gate_matrix(GateKind::G2Complex, 0.4, Some(0.7)).unwrap();
        for r in 0..4 {
            assert!((v[r] - u[(r, 1)]).norm() < 1e-15);
        }
        let s = enumerate_sector(&SectorSpec::hamming(2, 1)).unwrap();
        assert_eq!(jacobian(&c, &[0.4, 0.7], &s).unwrap().rank, 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]
        #[test]
        fn jacobian_matches_finite_differences(seed in any::<u64>()) {
            let c = fig1_circuit();
            let s = fuzzy4();
            let p = random_params(&mut rng(seed), 19);
            let rep = jacobian(&c, &p, &s).unwrap();
            let h = 1e-5;
            for k in 0..19 {
                let mut a = p.clone();
                let mut b = p.clone();
                a[k] += h;
                b[k] -= h;
                let fa = apply_circuit_sector(&c, &a, &s).unwrap();
                let fb = apply_circuit_sector(&c, &b, &s).unwrap();
                for i in 0..s.dim() {
                    let fd = (fa[i] - fb[i]) / (2.0 * h);
                    prop_assert!((fd - rep.matrix[(i, k)]).norm() < 1e-6);
                }
            }
            let psi = apply_circuit_sector(&c, &p, &s).unwrap();
            for k in 0..19 {
                let ov: f64 = psi.iter().enumerate().map(|(i, a)| (a.conj() * rep.matrix[(i, k)]).re).sum();
                prop_assert!(ov.abs() < 1e-10);
            }
            prop_assert!((norm(&psi) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn derivative_blocks_match_dense(seed in any::<u64>()) {
            let t = random_params(&mut rng(seed), 1)[0];
            let mut c = Circuit::new(4, 0b0011);
            c.push_new(GateKind::A4, &[2, 3, 0, 1]).unwrap();
            let comp = Compiled::full(&c).unwrap();
            let (_, cols) = comp.state_and_jacobian(&[t]).unwrap();
            let d = embed(&gate_dtheta(GateKind::A4, t, None).unwrap(), &[2, 3, 0, 1], 4);
            for i in 0..16 {
                prop_assert!((cols[0][i] - d[(i, 0b0011)]).norm() < 1e-14);
            }
        }
    }
}
