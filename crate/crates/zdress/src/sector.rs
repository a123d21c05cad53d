//! Hamming-weight and S_z symmetry sectors.
//!
//! Basis states are `u64` indices in the register convention of
//! [`crate::pauli`]: qubit 0 is the most significant bit.

use std::collections::{HashMap, VecDeque};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Largest register for explicit enumeration.
pub const MAX_ENUM_QUBITS: usize = 30;
/// Largest sector for explicit enumeration.
pub const MAX_ENUM_STATES: usize = 1 << 24;

/// Occupation of `qubit` in `state`.
#[inline]
pub fn bit(state: u64, n_qubits: usize, qubit: usize) -> bool {
    state >> (n_qubits - 1 - qubit) & 1 == 1
}

/// Index mask of a single qubit.
#[inline]
pub fn qubit_mask(n_qubits: usize, qubit: usize) -> u64 {
    1u64 << (n_qubits - 1 - qubit)
}

/// Parses a ket label such as `01010101` (qubit 0 first).
pub fn parse_bits(s: &str) -> Result<u64> {
    if s.is_empty() || s.len() > 64 {
        return Err(Error::Invalid(format!("bad bitstring {s:?}")));
    }
    s.chars().try_fold(0u64, |acc, c| match c {
        '0' => Ok(acc << 1),
        '1' => Ok(acc << 1 | 1),
        _ => Err(Error::Invalid(format!("bad bitstring {s:?}"))),
    })
}

pub fn format_bits(state: u64, n_qubits: usize) -> String {
    (0..n_qubits)
        .map(|q| if bit(state, n_qubits, q) { '1' } else { '0' })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorSpec {
    pub n_qubits: usize,
    pub hamming_weight: usize,
    /// Per-qubit `2m`; when present the sector requires `Σ 2m_k n_k = 0`.
    pub sz_weights: Option<Vec<i32>>,
}

impl SectorSpec {
    pub fn hamming(n_qubits: usize, hamming_weight: usize) -> Self {
        SectorSpec {
            n_qubits,
            hamming_weight,
            sz_weights: None,
        }
    }

    /// Half-filled `S_z = 0` sector of the fuzzy sphere with `n_orbitals = 2s+1`.
    ///
    /// Qubits are ordered by `m` ascending with spin up before down, so qubit 0
    /// is `(m = -s, up)`.
    pub fn fuzzy(n_orbitals: usize) -> Self {
        SectorSpec {
            n_qubits: 2 * n_orbitals,
            hamming_weight: n_orbitals,
            sz_weights: Some(fuzzy_weights(n_orbitals)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > 64 {
            return Err(Error::Invalid(format!("register of {} qubits", self.n_qubits)));
        }
        if self.hamming_weight > self.n_qubits {
            return Err(Error::Invalid("Hamming weight exceeds register".into()));
        }
        if let Some(w) = &self.sz_weights {
            if w.len() != self.n_qubits {
                return Err(Error::Invalid("S_z weight list length differs from register".into()));
            }
        }
        Ok(())
    }

    pub fn contains(&self, state: u64) -> bool {
        if state.count_ones() as usize != self.hamming_weight {
            return false;
        }
        if self.n_qubits < 64 && state >> self.n_qubits != 0 {
            return false;
        }
        match &self.sz_weights {
            None => true,
            Some(w) => sz2(state, w) == 0,
        }
    }
}

/// Doubled `m` of each fuzzy-sphere qubit.
pub fn fuzzy_weights(n_orbitals: usize) -> Vec<i32> {
    let top = n_orbitals as i32 - 1;
    (0..2 * n_orbitals)
        .map(|q| 2 * (q / 2) as i32 - top)
        .collect()
}

/// `2 S_z` of a basis state.
pub fn sz2(state: u64, weights: &[i32]) -> i64 {
    let n = weights.len();
    (0..n)
        .filter(|&q| bit(state, n, q))
        .map(|q| weights[q] as i64)
        .sum()
}

#[derive(Debug, Clone)]
pub struct SectorBasis {
    n_qubits: usize,
    spec: Option<SectorSpec>,
    states: Vec<u64>,
    index_of: HashMap<u64, usize>,
}

impl SectorBasis {
    /// Sector given by an explicit state list, for constraints outside [`SectorSpec`].
    pub fn from_states(n_qubits: usize, mut states: Vec<u64>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 64 {
            return Err(Error::Invalid(format!("register of {n_qubits} qubits")));
        }
        if n_qubits < 64 && states.iter().any(|&s| s >> n_qubits != 0) {
            return Err(Error::Invalid("state outside the register".into()));
        }
        states.sort_unstable();
        states.dedup();
        let index_of = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(SectorBasis {
            n_qubits,
            spec: None,
            states,
            index_of,
        })
    }

    /// `None` for sectors built with [`SectorBasis::from_states`].
    pub fn spec(&self) -> Option<&SectorSpec> {
        self.spec.as_ref()
    }
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
    pub fn states(&self) -> &[u64] {
        &self.states
    }
    pub fn dim(&self) -> usize {
        self.states.len()
    }
    pub fn index_of(&self, state: u64) -> Option<usize> {
        self.index_of.get(&state).copied()
    }
}

pub fn enumerate_sector(spec: &SectorSpec) -> Result<SectorBasis> {
    spec.validate()?;
    let n = spec.n_qubits;
    if n > MAX_ENUM_QUBITS {
        return Err(Error::TooLarge {
            what: "enumeration register",
            limit: MAX_ENUM_QUBITS,
            got: n,
        });
    }
    let count = count_sector(spec);
    if count > BigUint::from(MAX_ENUM_STATES) {
        return Err(Error::TooLarge {
            what: "sector size",
            limit: MAX_ENUM_STATES,
            got: usize::MAX,
        });
    }
    let k = spec.hamming_weight;
    let mut states = Vec::new();
    if k == 0 {
        states.push(0);
    } else {
        // Gosper's hack visits weight-k words in ascending order.
        let mut v: u64 = (1u64 << k) - 1;
        let limit = 1u64 << n;
        while v < limit {
            if spec.contains(v) {
                states.push(v);
            }
            let t = v | (v - 1);
            v = (t + 1) | (((!t & (!t).wrapping_neg()) - 1) >> (v.trailing_zeros() + 1));
        }
    }
    let index_of = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    Ok(SectorBasis {
        n_qubits: n,
        spec: Some(spec.clone()),
        states,
        index_of,
    })
}

/// Sector size by dynamic programming over (qubits seen, particles, 2·S_z).
pub fn count_sector(spec: &SectorSpec) -> BigUint {
    let n = spec.n_qubits;
    let k = spec.hamming_weight;
    if k > n {
        return BigUint::zero();
    }
    let weights: Vec<i64> = match &spec.sz_weights {
        Some(w) => w.iter().map(|&x| x as i64).collect(),
        None => vec![0; n],
    };
    let mut table: HashMap<(usize, i64), BigUint> = HashMap::new();
    table.insert((0, 0), BigUint::one());
    for &w in &weights {
        let mut next: HashMap<(usize, i64), BigUint> = HashMap::with_capacity(table.len() * 2);
        for ((p, s), c) in table {
            if p < k {
                *next.entry((p + 1, s + w)).or_default() += &c;
            }
            *next.entry((p, s)).or_default() += c;
        }
        table = next;
    }
    table.remove(&(k, 0)).unwrap_or_default()
}

/// Which transitions connect two configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeRule {
    /// Any pair of qubits exchanging one particle.
    PairSwap,
    /// Same-`m` pair swaps plus two-particle transfers `ij -> kl` with
    /// `m_i + m_j = m_k + m_l`.
    SzConserving,
}

fn adjacent(a: u64, b: u64, n: usize, rule: EdgeRule, weights: Option<&[i32]>) -> bool {
    let d = a ^ b;
    let lost = a & d;
    let gained = b & d;
    if lost.count_ones() != gained.count_ones() {
        return false;
    }
    let msum = |m: u64| -> i64 {
        let w = weights.expect("S_z rule needs weights");
        (0..n).filter(|&q| bit(m, n, q)).map(|q| w[q] as i64).sum()
    };
    match (rule, d.count_ones()) {
        (EdgeRule::PairSwap, 2) => true,
        (EdgeRule::SzConserving, 2 | 4) => msum(lost) == msum(gained),
        _ => false,
    }
}

/// Breadth-first connectivity of the configuration graph.
pub fn pairwise_swap_graph_connected(basis: &SectorBasis, rule: EdgeRule) -> bool {
    let states = basis.states();
    if states.len() <= 1 {
        return true;
    }
    let n = basis.n_qubits();
    let weights = basis.spec().and_then(|s| s.sz_weights.as_deref());
    let mut seen = vec![false; states.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(i) = queue.pop_front() {
        for j in 0..states.len() {
            if !seen[j] && adjacent(states[i], states[j], n, rule, weights) {
                seen[j] = true;
                reached += 1;
                queue.push_back(j);
            }
        }
    }
    reached == states.len()
}
