//! Phase-exact Pauli strings and sums over at most 64 qubits.
//!
//! Bit `k` of a mask refers to qubit `k`. In dense matrices and basis-state
//! indices qubit 0 is the most significant bit, so the ket `|q0 q1 ... >`
//! reads left to right like the binary index.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::{CMat, C64};

/// Coefficients below this magnitude are dropped from a [`PauliSum`].
pub const PRUNE: f64 = 1e-14;

/// Dense realization guard.
pub const MAX_DENSE_QUBITS: usize = 14;

const I_POW: [C64; 4] = [
    C64::new(1.0, 0.0),
    C64::new(0.0, 1.0),
    C64::new(-1.0, 0.0),
    C64::new(0.0, -1.0),
];

pub(crate) fn i_pow(p: u8) -> C64 {
    I_POW[(p & 3) as usize]
}

fn mask_for(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Maps a qubit mask to the index convention (qubit 0 = most significant bit).
pub fn mask_to_index(mask: u64, n: usize) -> u64 {
    if n == 0 {
        0
    } else {
        mask.reverse_bits() >> (64 - n)
    }
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// `i^phase · Π_k X_k^{x_k} Z_k^{z_k}`, with the X factor to the left on each qubit.
///
/// A `Y` letter is stored as both bits set and one extra unit of phase, since
/// `Y = iXZ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    x_mask: u64,
    z_mask: u64,
    phase_power: u8,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        assert!(n_qubits <= 64, "at most 64 qubits");
        PauliString {
            n_qubits,
            x_mask: 0,
            z_mask: 0,
            phase_power: 0,
        }
    }

    /// Raw constructor; masks must fit in `n_qubits`.
    pub fn from_masks(n_qubits: usize, x_mask: u64, z_mask: u64, phase_power: u8) -> Result<Self> {
        if n_qubits > 64 {
            return Err(Error::TooLarge {
                what: "qubit count",
                limit: 64,
                got: n_qubits,
            });
        }
        let m = mask_for(n_qubits);
        if x_mask & !m != 0 || z_mask & !m != 0 {
            return Err(Error::Invalid("mask bits beyond the register".into()));
        }
        Ok(PauliString {
            n_qubits,
            x_mask,
            z_mask,
            phase_power: phase_power & 3,
        })
    }

    /// The Hermitian string with letters given by the masks (each Y counted as a letter).
    pub fn hermitian(n_qubits: usize, x_mask: u64, z_mask: u64) -> Self {
        let y = (x_mask & z_mask).count_ones() as u8;
        PauliString {
            n_qubits,
            x_mask,
            z_mask,
            phase_power: y & 3,
        }
    }

    /// Single letter on one qubit.
    pub fn single(n_qubits: usize, qubit: usize, p: Pauli) -> Self {
        assert!(qubit < n_qubits, "qubit out of range");
        let (x, z) = p.bits();
        Self::hermitian(n_qubits, (x as u64) << qubit, (z as u64) << qubit)
    }

    /// Letters placed on the listed qubits, identity elsewhere.
    pub fn from_letters(n_qubits: usize, letters: &[(usize, Pauli)]) -> Self {
        let mut s = Self::identity(n_qubits);
        for &(q, p) in letters {
            s = s.mul(&Self::single(n_qubits, q, p));
        }
        s
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }
    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }
    pub fn phase_power(&self) -> u8 {
        self.phase_power
    }

    pub fn letter(&self, qubit: usize) -> Pauli {
        Pauli::from_bits(self.x_mask >> qubit & 1 == 1, self.z_mask >> qubit & 1 == 1)
    }

    /// Phase relative to the Hermitian string with the same letters.
    pub fn hermitian_phase(&self) -> u8 {
        let y = (self.x_mask & self.z_mask).count_ones() as u8;
        self.phase_power.wrapping_sub(y) & 3
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        let s = (self.z_mask & other.x_mask).count_ones() + (self.x_mask & other.z_mask).count_ones();
        s % 2 == 0
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitMismatch(self.n_qubits, other.n_qubits));
        }
        let swaps = (self.z_mask & other.x_mask).count_ones() as u8;
        Ok(PauliString {
            n_qubits: self.n_qubits,
            x_mask: self.x_mask ^ other.x_mask,
            z_mask: self.z_mask ^ other.z_mask,
            phase_power: (self.phase_power + other.phase_power + 2 * (swaps & 1)) & 3,
        })
    }

    /// Panics on a qubit-count mismatch; see [`PauliString::try_mul`].
    pub fn mul(&self, other: &Self) -> Self {
        self.try_mul(other).expect("qubit count mismatch")
    }

    /// Image of a basis index: returns `(phase_power, new_index)` with
    /// `P|b> = i^phase_power |new_index>`.
    pub fn apply_index(&self, b: u64) -> (u8, u64) {
        let zr = mask_to_index(self.z_mask, self.n_qubits);
        let xr = mask_to_index(self.x_mask, self.n_qubits);
        let sign = ((zr & b).count_ones() & 1) as u8;
        ((self.phase_power + 2 * sign) & 3, b ^ xr)
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        PauliSum::from_string(*self).to_matrix()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pre = ["", "i·", "-", "-i·"][self.hermitian_phase() as usize];
        write!(f, "{pre}")?;
        for q in 0..self.n_qubits {
            write!(f, "{}", self.letter(q).as_char())?;
        }
        Ok(())
    }
}

/// Complex-weighted sum of Hermitian Pauli strings at a fixed register size.
///
/// Terms are keyed by `(x_mask, z_mask)` and always refer to the Hermitian
/// string with those letters, so a sum is Hermitian iff all its coefficients
/// are real.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<(u64, u64), C64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        assert!(n_qubits <= 64, "at most 64 qubits");
        PauliSum {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::from_string(PauliString::identity(n_qubits))
    }

    pub fn from_string(s: PauliString) -> Self {
        let mut out = Self::zero(s.n_qubits);
        out.add_term(s, C64::new(1.0, 0.0));
        out
    }

    /// Sum built from `(coefficient, word)` pairs such as `(1.0, "XY")`.
    pub fn from_words(n_qubits: usize, words: &[(C64, &str)]) -> Result<Self> {
        let mut out = Self::zero(n_qubits);
        for (c, w) in words {
            let s = parse_word(w, 0)?;
            if s.n_qubits != n_qubits {
                return Err(Error::QubitMismatch(n_qubits, s.n_qubits));
            }
            out.add_term(s, *c);
        }
        Ok(out)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Iterates `(hermitian string, coefficient)` in key order.
    pub fn terms(&self) -> impl Iterator<Item = (PauliString, C64)> + '_ {
        self.terms
            .iter()
            .map(move |(&(x, z), &c)| (PauliString::hermitian(self.n_qubits, x, z), c))
    }

    pub fn coefficient(&self, s: &PauliString) -> C64 {
        let c = self
            .terms
            .get(&(s.x_mask, s.z_mask))
            .copied()
            .unwrap_or_default();
        c * i_pow(s.hermitian_phase()).conj()
    }

    /// Adds `coeff · s`, folding the string's phase into the coefficient.
    pub fn add_term(&mut self, s: PauliString, coeff: C64) {
        assert_eq!(s.n_qubits, self.n_qubits, "qubit count mismatch");
        let c = coeff * i_pow(s.hermitian_phase());
        let key = (s.x_mask, s.z_mask);
        let e = self.terms.entry(key).or_default();
        *e += c;
        if e.norm() < PRUNE {
            self.terms.remove(&key);
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::zero(self.n_qubits);
        for (&k, &v) in &self.terms {
            let w = v * c;
            if w.norm() >= PRUNE {
                out.terms.insert(k, w);
            }
        }
        out
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitMismatch(self.n_qubits, other.n_qubits));
        }
        let mut out = self.clone();
        for (&(x, z), &c) in &other.terms {
            out.add_term(PauliString::hermitian(self.n_qubits, x, z), c);
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitMismatch(self.n_qubits, other.n_qubits));
        }
        let mut acc: BTreeMap<(u64, u64), C64> = BTreeMap::new();
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                let p = a.mul(&b);
                *acc.entry((p.x_mask, p.z_mask)).or_default() += ca * cb * i_pow(p.hermitian_phase());
            }
        }
        acc.retain(|_, c| c.norm() >= PRUNE);
        Ok(PauliSum {
            n_qubits: self.n_qubits,
            terms: acc,
        })
    }

    /// `[a, b] = ab − ba`. Only anticommuting string pairs contribute, each with `2ab`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitMismatch(self.n_qubits, other.n_qubits));
        }
        let mut acc: BTreeMap<(u64, u64), C64> = BTreeMap::new();
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                if a.commutes_with(&b) {
                    continue;
                }
                let p = a.mul(&b);
                *acc.entry((p.x_mask, p.z_mask)).or_default() +=
                    2.0 * ca * cb * i_pow(p.hermitian_phase());
            }
        }
        acc.retain(|_, c| c.norm() >= PRUNE);
        Ok(PauliSum {
            n_qubits: self.n_qubits,
            terms: acc,
        })
    }

    pub fn dagger(&self) -> Self {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(&k, v)| (k, v.conj())).collect(),
        }
    }

    /// Every coefficient real to within `1e-12`.
    pub fn is_hermitian(&self) -> bool {
        self.terms.values().all(|c| c.im.abs() <= 1e-12)
    }

    /// Largest coefficient magnitude of `self − other`.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let d = self.clone() - other.clone();
        d.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let n = self.n_qubits;
        if n > MAX_DENSE_QUBITS {
            return Err(Error::TooLarge {
                what: "dense qubit count",
                limit: MAX_DENSE_QUBITS,
                got: n,
            });
        }
        let dim = 1usize << n;
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        for (s, c) in self.terms() {
            for b in 0..dim as u64 {
                let (p, r) = s.apply_index(b);
                m[(r as usize, b as usize)] += c * i_pow(p);
            }
        }
        Ok(m)
    }

    /// Row-compressed sparse form for repeated application to state vectors.
    pub fn to_sparse(&self) -> SparseOp {
        SparseOp::from_sum(self)
    }

    /// Matrix element `<row|self|col>` between basis indices.
    pub fn element(&self, row: u64, col: u64) -> C64 {
        let mut acc = C64::default();
        for (s, c) in self.terms() {
            let (p, r) = s.apply_index(col);
            if r == row {
                acc += c * i_pow(p);
            }
        }
        acc
    }

    /// Sector projection `<states[i]|self|states[j]>`.
    pub fn project(&self, states: &[u64]) -> CMat {
        let w = states.len();
        let pos: std::collections::HashMap<u64, usize> =
            states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut m = DMatrix::<C64>::zeros(w, w);
        for (s, c) in self.terms() {
            for (j, &b) in states.iter().enumerate() {
                let (p, r) = s.apply_index(b);
                if let Some(&i) = pos.get(&r) {
                    m[(i, j)] += c * i_pow(p);
                }
            }
        }
        m
    }
}

impl Add for PauliSum {
    type Output = PauliSum;
    fn add(self, rhs: PauliSum) -> PauliSum {
        self.try_add(&rhs).expect("qubit count mismatch")
    }
}

impl Sub for PauliSum {
    type Output = PauliSum;
    fn sub(self, rhs: PauliSum) -> PauliSum {
        self.try_add(&rhs.scale_re(-1.0)).expect("qubit count mismatch")
    }
}

impl Neg for PauliSum {
    type Output = PauliSum;
    fn neg(self) -> PauliSum {
        self.scale_re(-1.0)
    }
}

impl Mul for PauliSum {
    type Output = PauliSum;
    fn mul(self, rhs: PauliSum) -> PauliSum {
        self.try_mul(&rhs).expect("qubit count mismatch")
    }
}

impl Mul<&PauliSum> for &PauliSum {
    type Output = PauliSum;
    fn mul(self, rhs: &PauliSum) -> PauliSum {
        self.try_mul(rhs).expect("qubit count mismatch")
    }
}

impl fmt::Display for PauliSum {
    /// One term per line: `<re> <im> <word>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (s, c) in self.terms() {
            let word: String = (0..self.n_qubits).map(|q| s.letter(q).as_char()).collect();
            writeln!(f, "{} {} {}", c.re, c.im, word)?;
        }
        Ok(())
    }
}

fn parse_word(w: &str, line: usize) -> Result<PauliString> {
    let n = w.chars().count();
    if n == 0 || n > 64 {
        return Err(Error::Parse {
            line,
            msg: format!("bad Pauli word length {n}"),
        });
    }
    let mut letters = Vec::with_capacity(n);
    for (q, ch) in w.chars().enumerate() {
        let p = Pauli::from_char(ch).ok_or_else(|| Error::Parse {
            line,
            msg: format!("bad Pauli letter {ch:?}"),
        })?;
        letters.push((q, p));
    }
    Ok(PauliString::from_letters(n, &letters))
}

impl FromStr for PauliSum {
    type Err = Error;

    /// Parses the `<re> <im> <word>` line format. Blank lines and `#` comments are skipped.
    fn from_str(text: &str) -> Result<Self> {
        let mut out: Option<PauliSum> = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: "expected `<re> <im> <word>`".into(),
                });
            }
            let num = |t: &str| {
                t.parse::<f64>().map_err(|e| Error::Parse {
                    line: ln + 1,
                    msg: e.to_string(),
                })
            };
            let c = C64::new(num(parts[0])?, num(parts[1])?);
            let s = parse_word(parts[2], ln + 1)?;
            let acc = out.get_or_insert_with(|| PauliSum::zero(s.n_qubits));
            if acc.n_qubits != s.n_qubits {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: "inconsistent word length".into(),
                });
            }
            acc.add_term(s, c);
        }
        out.ok_or(Error::Parse {
            line: 0,
            msg: "no terms".into(),
        })
    }
}

/// Sparse matrix in row-compressed form.
#[derive(Debug, Clone)]
pub struct SparseOp {
    pub dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOp {
    fn from_sum(s: &PauliSum) -> Self {
        let dim = 1usize << s.n_qubits;
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); dim];
        for (p, c) in s.terms() {
            for b in 0..dim as u64 {
                let (ph, r) = p.apply_index(b);
                *rows[r as usize].entry(b as usize).or_default() += c * i_pow(ph);
            }
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in rows {
            for (c, v) in r {
                if v.norm() >= PRUNE {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseOp {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.vals[k] * v[self.cols[k]])
                    .sum()
            })
            .collect()
    }

    /// `<v|A|v>`.
    pub fn expectation(&self, v: &[C64]) -> C64 {
        self.apply(v)
            .iter()
            .zip(v)
            .map(|(a, b)| b.conj() * a)
            .sum()
    }
}
