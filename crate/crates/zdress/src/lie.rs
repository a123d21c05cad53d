//! Commutator identities and dynamical Lie algebra closure on a sector.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gates::generators::{
    bempa_a, bempa_b, hop_a, hop_s, ketbra, pair_hop_a, pair_hop_s, pin_projector, z,
};
use crate::pauli::{PauliString, PauliSum};
use crate::sector::{enumerate_sector, SectorBasis, SectorSpec};
use crate::{CMat, C64};

/// Largest sector handled by [`closure_dimension`].
pub const MAX_CLOSURE_DIM: usize = 64;
/// Relative residual above which a commutator counts as a new direction.
pub const NEW_DIRECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct GeneratorSet {
    pub n_qubits: usize,
    /// Hermitian generators; closure works with `i·H`.
    pub generators: Vec<PauliSum>,
    pub label: String,
}

impl GeneratorSet {
    pub fn new(label: impl Into<String>, n_qubits: usize, generators: Vec<PauliSum>) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| g.n_qubits() != n_qubits) {
            return Err(Error::QubitMismatch(n_qubits, g.n_qubits()));
        }
        Ok(GeneratorSet {
            n_qubits,
            generators,
            label: label.into(),
        })
    }

    /// Parses blocks in the Pauli-sum line format, separated by lines holding `---`.
    pub fn parse(label: &str, text: &str) -> Result<Self> {
        let mut gens = Vec::new();
        for block in text.split("\n---") {
            let block = block.trim_start_matches("---");
            if block.lines().all(|l| l.split('#').next().unwrap_or("").trim().is_empty()) {
                continue;
            }
            gens.push(block.parse::<PauliSum>()?);
        }
        let n = gens.first().map(|g| g.n_qubits()).ok_or(Error::Parse {
            line: 0,
            msg: "no generators".into(),
        })?;
        Self::new(label, n, gens)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosureReport {
    pub dimension: usize,
    pub iterations: usize,
    pub target_dim: Option<usize>,
    pub matched: Option<bool>,
    pub converged: bool,
}

impl std::fmt::Display for ClosureReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "dimension {} after {} sweeps", self.dimension, self.iterations)?;
        if let (Some(t), Some(m)) = (self.target_dim, self.matched) {
            write!(f, ", target {t} {}", if m { "matched" } else { "NOT matched" })?;
        }
        if !self.converged {
            write!(f, " (iteration cap reached)")?;
        }
        Ok(())
    }
}

/// Closure result with the orthonormal skew basis it found.
#[derive(Debug, Clone)]
pub struct Closure {
    pub report: ClosureReport,
    pub basis: Vec<CMat>,
}

fn flatten(m: &CMat, complex: bool) -> Vec<f64> {
    let mut v: Vec<f64> = m.iter().map(|c| c.re).collect();
    if complex {
        v.extend(m.iter().map(|c| c.im));
    }
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Span {
    complex: bool,
    vecs: Vec<Vec<f64>>,
    mats: Vec<CMat>,
}

impl Span {
    /// Gram–Schmidt twice; admits `m` if the relative residual exceeds the tolerance.
    fn admit(&mut self, m: &CMat) -> bool {
        let v0 = flatten(m, self.complex);
        let n0 = dot(&v0, &v0).sqrt();
        if n0 == 0.0 {
            return false;
        }
        let mut v = v0;
        for _ in 0..2 {
            for b in &self.vecs {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = dot(&v, &v).sqrt();
        if n <= NEW_DIRECTION_TOL * n0 {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= n);
        let (r, c) = m.shape();
        let w = r * c;
        let mat = CMat::from_fn(r, c, |i, j| {
            let k = j * r + i;
            C64::new(v[k], if self.complex { v[w + k] } else { 0.0 })
        });
        self.vecs.push(v);
        self.mats.push(mat);
        true
    }
}

/// Skew sector matrix `i·P H P` of a Hermitian generator.
pub fn project_skew(h: &PauliSum, sector: &SectorBasis) -> CMat {
    h.project(sector.states()) * C64::i()
}

/// Dimension of the Lie algebra generated by `i·H_k` restricted to `sector`.
///
/// In real mode the projected generators must be real antisymmetric; complex
/// mode allows any anti-Hermitian matrix.
pub fn closure_dimension(gens: &GeneratorSet, sector: &SectorBasis, complex_mode: bool) -> Result<Closure> {
    let w = sector.dim();
    if w > MAX_CLOSURE_DIM {
        return Err(Error::TooLarge {
            what: "closure sector",
            limit: MAX_CLOSURE_DIM,
            got: w,
        });
    }
    if gens.n_qubits != sector.n_qubits() {
        return Err(Error::QubitMismatch(gens.n_qubits, sector.n_qubits()));
    }
    let mut span = Span {
        complex: complex_mode,
        vecs: Vec::new(),
        mats: Vec::new(),
    };
    for g in &gens.generators {
        let m = project_skew(g, sector);
        if !complex_mode && m.iter().any(|c| c.im.abs() > 1e-12) {
            return Err(Error::Invalid(format!(
                "{}: generator is not real on the sector; use complex mode",
                gens.label
            )));
        }
        span.admit(&m);
    }
    let cap = if complex_mode { w * w } else { w * (w - 1) / 2 }.max(1);
    let max_sweeps = cap * cap;
    let mut done = 0usize;
    let mut sweeps = 0usize;
    let mut converged = true;
    while done < span.mats.len() {
        if sweeps == max_sweeps {
            converged = false;
            break;
        }
        sweeps += 1;
        let frontier = span.mats.len();
        for i in done..frontier {
            // Commutators in parallel, admission in fixed order.
            let new: Vec<CMat> = (0..i)
                .into_par_iter()
                .map(|j| &span.mats[i] * &span.mats[j] - &span.mats[j] * &span.mats[i])
                .collect();
            for c in &new {
                span.admit(c);
            }
        }
        done = frontier;
    }
    let dimension = span.mats.len();
    Ok(Closure {
        report: ClosureReport {
            dimension,
            iterations: sweeps,
            target_dim: None,
            matched: None,
            converged,
        },
        basis: span.mats,
    })
}

/// [`closure_dimension`] compared against `so(w)` (real) or `su(w)` (complex).
pub fn closure_against_target(gens: &GeneratorSet, sector: &SectorBasis, complex_mode: bool) -> Result<Closure> {
    let mut c = closure_dimension(gens, sector, complex_mode)?;
    let w = sector.dim();
    let target = if complex_mode { w * w - 1 } else { w * (w - 1) / 2 };
    c.report.target_dim = Some(target);
    c.report.matched = Some(c.report.dimension == target);
    Ok(c)
}

fn support(p: &PauliSum) -> u64 {
    p.terms().fold(0, |acc, (s, _)| acc | s.x_mask() | s.z_mask())
}

/// `base · Π_k (I + (−1)^{b_k} Z_k)/2` over spectator pins `(qubit, b_k)`.
pub fn dressed_generator(base: &PauliSum, spectators: &[(usize, bool)]) -> Result<PauliSum> {
    let sup = support(base);
    for &(q, _) in spectators {
        if q >= base.n_qubits() {
            return Err(Error::Invalid(format!("spectator {q} outside register")));
        }
        if sup >> q & 1 == 1 {
            return Err(Error::Invalid(format!("spectator {q} overlaps the generator support")));
        }
    }
    Ok(base * &pin_projector(base.n_qubits(), spectators))
}

/// Outcome of one identity check.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub name: String,
    pub passed: bool,
    /// `[a, b] − rhs`, empty when the identity holds.
    pub diff: PauliSum,
}

/// Exact coefficient-level check of `[a, b] = rhs`.
pub fn verify_identity(name: &str, a: &PauliSum, b: &PauliSum, rhs: &PauliSum) -> Result<IdentityCheck> {
    let lhs = a.commutator(b)?;
    let diff = lhs.try_add(&rhs.scale_re(-1.0))?;
    // Coefficients are exact dyadic rationals, so equality is exact.
    let passed = diff.is_empty();
    Ok(IdentityCheck {
        name: name.to_string(),
        passed,
        diff,
    })
}

/// Named identity `[a, b] = rhs`.
#[derive(Debug, Clone)]
pub struct Identity {
    pub name: String,
    pub a: PauliSum,
    pub b: PauliSum,
    pub rhs: PauliSum,
}

fn ident(name: impl Into<String>, a: PauliSum, b: PauliSum, rhs: PauliSum) -> Identity {
    Identity {
        name: name.into(),
        a,
        b,
        rhs,
    }
}

fn ci(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `E^a_xy = |x><y| − |y><x|` over the full register.
pub fn single_plane_a(n: usize, x: u64, y: u64) -> PauliSum {
    let all: Vec<usize> = (0..n).collect();
    ketbra(n, &all, x, y) - ketbra(n, &all, y, x)
}

/// `E^s_xy = i(|x><y| + |y><x|)`.
pub fn single_plane_s(n: usize, x: u64, y: u64) -> PauliSum {
    let all: Vec<usize> = (0..n).collect();
    (ketbra(n, &all, x, y) + ketbra(n, &all, y, x)).scale(ci(0.0, 1.0))
}

/// `E^d_xy = i(|x><x| − |y><y|)`.
pub fn single_plane_d(n: usize, x: u64, y: u64) -> PauliSum {
    let all: Vec<usize> = (0..n).collect();
    (ketbra(n, &all, x, x) - ketbra(n, &all, y, y)).scale(ci(0.0, 1.0))
}

/// Every identity the completeness arguments rely on.
pub fn identity_corpus() -> Vec<Identity> {
    let mut out = Vec::new();
    let m2i = ci(0.0, -2.0);

    out.push(ident("[L_01, L_12] = -2i L_02 Z_1", hop_a(3, 0, 1), hop_a(3, 1, 2), (&hop_a(3, 0, 2) * &z(3, 1)).scale(m2i)));
    out.push(ident("[L_02, L_23] = -2i L_03 Z_2", hop_a(4, 0, 2), hop_a(4, 2, 3), (&hop_a(4, 0, 3) * &z(4, 2)).scale(m2i)));
    out.push(ident(
        "[L^s_02, L^s_23] = 2i L^a_03 Z_2",
        hop_s(4, 0, 2),
        hop_s(4, 2, 3),
        (&hop_a(4, 0, 3) * &z(4, 2)).scale(ci(0.0, 2.0)),
    ));
    out.push(ident(
        "[L^a_02, L^s_23] = -2i L^s_03 Z_2",
        hop_a(4, 0, 2),
        hop_s(4, 2, 3),
        (&hop_s(4, 0, 3) * &z(4, 2)).scale(m2i),
    ));
    out.push(ident(
        "[L^a_01, L^s_01] = 4i (Z_0 - Z_1)",
        hop_a(2, 0, 1),
        hop_s(2, 0, 1),
        (z(2, 0) - z(2, 1)).scale(ci(0.0, 4.0)),
    ));
    out.push(ident(
        "[G_A;01, G_B;123] = -i G_B;023 Z_1",
        bempa_a(4, 0, 1),
        bempa_b(4, 1, 2, 3),
        (&bempa_b(4, 0, 2, 3) * &z(4, 1)).scale(ci(0.0, -1.0)),
    ));
    out.push(ident(
        "[L_01, L_1234] = -2i L_0234 Z_1",
        hop_a(5, 0, 1),
        pair_hop_a(5, 1, 2, 3, 4),
        (&pair_hop_a(5, 0, 2, 3, 4) * &z(5, 1)).scale(m2i),
    ));
    out.push(ident(
        "[L_0123, L_2345] = -4i L_0145 (Z_2 + Z_3)",
        pair_hop_a(6, 0, 1, 2, 3),
        pair_hop_a(6, 2, 3, 4, 5),
        (&pair_hop_a(6, 0, 1, 4, 5) * &(z(6, 2) + z(6, 3))).scale(ci(0.0, -4.0)),
    ));
    let q = [0, 1, 2, 3];
    out.push(ident(
        "[L^s_0123, L^a_0123] = 128i (|1100><1100| - |0011><0011|)",
        pair_hop_s(4, 0, 1, 2, 3),
        pair_hop_a(4, 0, 1, 2, 3),
        (ketbra(4, &q, 0b1100, 0b1100) - ketbra(4, &q, 0b0011, 0b0011)).scale(ci(0.0, 128.0)),
    ));
    out.push(ident(
        "[P, I] = 0",
        PauliSum::from_string(PauliString::from_letters(3, &[(0, crate::pauli::Pauli::X), (2, crate::pauli::Pauli::Y)])),
        PauliSum::identity(3),
        PauliSum::zero(3),
    ));

    // Single-plane generators on the (4, 2) sector.
    let states = enumerate_sector(&SectorSpec::hamming(4, 2))
        .expect("small sector")
        .states()
        .to_vec();
    for &x in &states {
        for &y in &states {
            if x == y {
                continue;
            }
            out.push(ident(
                format!("[E^a_{x:04b},{y:04b}, E^s] = 2 E^d"),
                single_plane_a(4, x, y),
                single_plane_s(4, x, y),
                single_plane_d(4, x, y).scale_re(2.0),
            ));
            for &zz in &states {
                if zz == x || zz == y {
                    continue;
                }
                out.push(ident(
                    format!("[E_{x:04b},{y:04b}, E_{y:04b},{zz:04b}] = E_{x:04b},{zz:04b}"),
                    single_plane_a(4, x, y),
                    single_plane_a(4, y, zz),
                    single_plane_a(4, x, zz),
                ));
            }
        }
    }
    out
}

/// Checks the dressing identity `E_xy = (i/2) L_ij Π_k (I + (−1)^{x_k} Z_k)/2`
/// for every pair in the `(n, k)` sector that differs on exactly two qubits.
pub fn dressing_checks(n: usize, k: usize) -> Result<Vec<IdentityCheck>> {
    let basis = enumerate_sector(&SectorSpec::hamming(n, k))?;
    let bit = |s: u64, q: usize| crate::sector::bit(s, n, q);
    let mut out = Vec::new();
    for &x in basis.states() {
        for &y in basis.states() {
            let d = x ^ y;
            if d.count_ones() != 2 {
                continue;
            }
            let diff: Vec<usize> = (0..n).filter(|&q| bit(d, q)).collect();
            let (i, j) = if bit(x, diff[0]) { (diff[0], diff[1]) } else { (diff[1], diff[0]) };
            let pins: Vec<(usize, bool)> = (0..n).filter(|q| !diff.contains(q)).map(|q| (q, bit(x, q))).collect();
            let dressed = dressed_generator(&hop_a(n, i, j), &pins)?.scale(ci(0.0, 0.5));
            let want = single_plane_a(n, x, y);
            let delta = dressed.try_add(&want.scale_re(-1.0))?;
            out.push(IdentityCheck {
                name: format!("E_{x:0n$b},{y:0n$b} = (i/2) L_{i}{j} · pins"),
                passed: delta.is_empty(),
                diff: delta,
            });
        }
    }
    Ok(out)
}

/// Runs the identity corpus and the `(4, 2)` dressing checks.
pub fn verify_all() -> Result<Vec<IdentityCheck>> {
    let mut out = Vec::new();
    for id in identity_corpus() {
        out.push(verify_identity(&id.name, &id.a, &id.b, &id.rhs)?);
    }
    out.extend(dressing_checks(4, 2)?);
    Ok(out)
}

/// All-pair `L_ij` generators on `n` qubits.
pub fn all_pair_hops(n: usize) -> Vec<PauliSum> {
    let mut v = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            v.push(hop_a(n, i, j));
        }
    }
    v
}

/// Nearest-neighbour `L_{i,i+1}` generators.
pub fn adjacent_hops(n: usize) -> Vec<PauliSum> {
    (0..n.saturating_sub(1)).map(|i| hop_a(n, i, i + 1)).collect()
}

/// `S_z`-preserving pool for the fuzzy-sphere register: same-`m` isospin
/// swaps `L_{2o,2o+1}` and every `L_ijkl` with `m_i + m_j = m_k + m_l`.
pub fn fuzzy_pool(n_orbitals: usize) -> Vec<PauliSum> {
    let n = 2 * n_orbitals;
    let w = crate::sector::fuzzy_weights(n_orbitals);
    let mut out: Vec<PauliSum> = (0..n_orbitals).map(|o| hop_a(n, 2 * o, 2 * o + 1)).collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for &(k, l) in &pairs[a + 1..] {
            if k == i || k == j || l == i || l == j || w[i] + w[j] != w[k] + w[l] {
                continue;
            }
            out.push(pair_hop_a(n, i, j, k, l));
        }
    }
    out
}

/// Binary-encoded bosons: `modes` registers of `bits` qubits, qubit
/// `mode·bits + t` carrying weight `2^t`.
pub fn bempa_sector(modes: usize, bits: usize, total: u64) -> Result<SectorBasis> {
    let n = modes * bits;
    let states: Vec<u64> = (0..1u64 << n)
        .filter(|&s| {
            (0..n)
                .filter(|&q| crate::sector::bit(s, n, q))
                .map(|q| 1u64 << (q % bits))
                .sum::<u64>()
                == total
        })
        .collect();
    SectorBasis::from_states(n, states)
}

/// Every `Ĝ_A` pairing equal-significance qubits of different modes, and every
/// `Ĝ_B` moving a pair at significance `t` into one qubit at `t+1`.
pub fn bempa_generators(modes: usize, bits: usize) -> Vec<PauliSum> {
    let n = modes * bits;
    let q = |m: usize, t: usize| m * bits + t;
    let mut out = Vec::new();
    for t in 0..bits {
        for a in 0..modes {
            for b in a + 1..modes {
                out.push(bempa_a(n, q(a, t), q(b, t)));
            }
        }
    }
    for t in 0..bits.saturating_sub(1) {
        for a in 0..modes {
            for b in a + 1..modes {
                for c in 0..modes {
                    out.push(bempa_b(n, q(a, t), q(b, t), q(c, t + 1)));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Pauli;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    fn hamming(n: usize, k: usize) -> SectorBasis {
        enumerate_sector(&SectorSpec::hamming(n, k)).unwrap()
    }

    // Oracle: repeated commutation of the whole span, dimension by SVD rank,
    // with projection done by dense matrices rather than PauliSum::project.
    fn oracle_dim(gens: &[PauliSum], sector: &SectorBasis, complex: bool) -> usize {
        let n = sector.n_qubits();
        let dim = 1usize << n;
        let w = sector.dim();
        let p = DMatrix::<C64>::from_fn(dim, w, |r, c| {
            if sector.states()[c] as usize == r { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
        });
        let mut elems: Vec<CMat> = gens
            .iter()
            .map(|g| p.adjoint() * g.to_matrix().unwrap() * &p * C64::i())
            .collect();
        let rank = |es: &[CMat]| -> (usize, Vec<CMat>) {
            let rows: Vec<Vec<f64>> = es.iter().map(|m| flatten(m, complex)).collect();
            if rows.is_empty() {
                return (0, vec![]);
            }
            let a = DMatrix::<f64>::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
            let svd = a.svd(false, true);
            let smax = svd.singular_values.max();
            let vt = svd.v_t.unwrap();
            let mut keep = Vec::new();
            for (k, s) in svd.singular_values.iter().enumerate() {
                if *s > 1e-9 * smax.max(1e-300) {
                    let r = vt.row(k);
                    keep.push(CMat::from_fn(w, w, |i, j| {
                        let idx = j * w + i;
                        C64::new(r[idx], if complex { r[w * w + idx] } else { 0.0 })
                    }));
                }
            }
            (keep.len(), keep)
        };
        let (mut d, mut basis) = rank(&elems);
        loop {
            elems = basis.clone();
            for a in &basis {
                for b in &basis {
                    elems.push(a * b - b * a);
                }
            }
            let (d2, b2) = rank(&elems);
            if d2 == d {
                return d;
            }
            d = d2;
            basis = b2;
        }
    }

    fn set(label: &str, n: usize, g: Vec<PauliSum>) -> GeneratorSet {
        GeneratorSet::new(label, n, g).unwrap()
    }

    #[test]
    fn corpus_passes() {
        let checks = verify_all().unwrap();
        assert!(checks.len() > 150);
        for c in &checks {
            assert!(c.passed, "{} failed: diff\n{}", c.name, c.diff);
        }
    }

    #[test]
    fn wrong_identity_reports_diff() {
        let c = verify_identity("bad", &hop_a(3, 0, 1), &hop_a(3, 1, 2), &(&hop_a(3, 0, 2) * &z(3, 1))).unwrap();
        assert!(!c.passed);
        assert!(!c.diff.is_empty());
    }

    #[test]
    fn all_pair_so6() {
        let s = hamming(4, 2);
        let g = all_pair_hops(4);
        let c = closure_against_target(&set("all", 4, g.clone()), &s, false).unwrap();
        assert_eq!(c.report.dimension, 15);
        assert_eq!(c.report.matched, Some(true));
        assert_eq!(oracle_dim(&g, &s, false), 15);
    }

    #[test]
    fn adjacent_only_so4() {
        let s = hamming(4, 2);
        let g = adjacent_hops(4);
        let c = closure_dimension(&set("adj", 4, g.clone()), &s, false).unwrap();
        assert_eq!(c.report.dimension, 6);
        assert_eq!(oracle_dim(&g, &s, false), 6);
    }

    #[test]
    fn complex_all_pair_su6() {
        let s = hamming(4, 2);
        let mut g = all_pair_hops(4);
        for i in 0..4 {
            for j in i + 1..4 {
                g.push(hop_s(4, i, j));
            }
        }
        let c = closure_against_target(&set("cplx", 4, g.clone()), &s, true).unwrap();
        assert_eq!(c.report.dimension, 35);
        assert_eq!(c.report.matched, Some(true));
        assert_eq!(oracle_dim(&g, &s, true), 35);
        for m in &c.basis {
            assert!(m.trace().norm() < 1e-12);
            assert!((m + m.adjoint()).iter().all(|v| v.norm() < 1e-12));
        }
    }

    #[test]
    fn real_mode_rejects_complex_generators() {
        let s = hamming(2, 1);
        assert!(closure_dimension(&set("s", 2, vec![hop_s(2, 0, 1)]), &s, false).is_err());
    }

    #[test]
    fn fuzzy_sector_so18() {
        let s = enumerate_sector(&SectorSpec::fuzzy(4)).unwrap();
        let pool = fuzzy_pool(4);
        let c = closure_against_target(&set("fuzzy", 8, pool.clone()), &s, false).unwrap();
        assert_eq!(c.report.dimension, 153);
        assert_eq!(c.report.matched, Some(true));
        // Same-m swaps alone never change orbital occupancies.
        let swaps: Vec<PauliSum> = (0..4).map(|o| hop_a(8, 2 * o, 2 * o + 1)).collect();
        let d = closure_dimension(&set("swaps", 8, swaps.clone()), &s, false).unwrap().report.dimension;
        assert_eq!(d, oracle_dim(&swaps, &s, false));
        assert!(d < 153);
    }

    #[test]
    fn bempa_three_boson_sector() {
        let s = bempa_sector(2, 2, 3).unwrap();
        assert_eq!(s.dim(), 4);
        let g = bempa_generators(2, 2);
        let d = closure_dimension(&set("bempa", 4, g.clone()), &s, false).unwrap().report.dimension;
        assert_eq!(d, oracle_dim(&g, &s, false));
    }

    #[test]
    fn dressing_examples() {
        let d = dressed_generator(&hop_a(3, 0, 1), &[(2, false)]).unwrap();
        let m = d.to_matrix().unwrap();
        let nz: Vec<(usize, usize)> = (0..8)
            .flat_map(|r| (0..8).map(move |c| (r, c)))
            .filter(|&(r, c)| m[(r, c)].norm() > 0.0)
            .collect();
        assert_eq!(nz, vec![(0b010, 0b100), (0b100, 0b010)]);
        assert_eq!(dressed_generator(&hop_a(3, 0, 1), &[]).unwrap(), hop_a(3, 0, 1));
        assert!(dressed_generator(&hop_a(3, 0, 1), &[(1, true)]).is_err());
        let e = single_plane_a(4, 0b1100, 0b1010).to_matrix().unwrap();
        assert_eq!(e[(0b1100, 0b1010)], C64::new(1.0, 0.0));
        assert_eq!(e[(0b1010, 0b1100)], C64::new(-1.0, 0.0));
    }

    #[test]
    fn generator_file_format() {
        let g = GeneratorSet::parse("f", "1 0 XYI\n-1 0 YXI\n---\n1 0 IXY\n-1 0 IYX\n").unwrap();
        assert_eq!(g.generators.len(), 2);
        assert_eq!(g.generators[1], hop_a(3, 1, 2));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(5))]
        #[test]
        fn order_and_mixing_invariance(seed in any::<u64>()) {
            let s = hamming(4, 2);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let base = adjacent_hops(4);
            let mut shuffled = base.clone();
            shuffled.shuffle(&mut rng);
            let d1 = closure_dimension(&set("a", 4, shuffled.clone()), &s, false).unwrap().report.dimension;
            // Random orthogonal re-mixing of the same span.
            let k = shuffled.len();
            let m = DMatrix::<f64>::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
            let q = m.qr().q();
            let mixed: Vec<PauliSum> = (0..k)
                .map(|r| (0..k).fold(PauliSum::zero(4), |acc, c| acc + shuffled[c].scale_re(q[(r, c)])))
                .collect();
            let d2 = closure_dimension(&set("b", 4, mixed), &s, false).unwrap().report.dimension;
            prop_assert_eq!(d1, 6);
            prop_assert_eq!(d2, 6);
        }

        #[test]
        fn monotone_in_generators(mask in 1u32..64) {
            let s = hamming(4, 2);
            let all = all_pair_hops(4);
            let sub: Vec<PauliSum> = all.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, g)| g.clone()).collect();
            let d_sub = closure_dimension(&set("s", 4, sub.clone()), &s, false).unwrap();
            for extra in &all {
                let mut more = sub.clone();
                more.push(extra.clone());
                let d = closure_dimension(&set("m", 4, more), &s, false).unwrap().report.dimension;
                prop_assert!(d >= d_sub.report.dimension);
            }
            for m in &d_sub.basis {
                prop_assert!(m.iter().all(|v| v.im.abs() < 1e-12));
                prop_assert!((m + m.transpose()).iter().all(|v| v.norm() < 1e-12));
            }
        }
    }

    #[test]
    fn p_letter_helper() {
        let p = PauliString::from_letters(2, &[(0, Pauli::X), (1, Pauli::Z)]);
        assert_eq!(p.to_string(), "XZ");
    }
}
