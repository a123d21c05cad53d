//! Small dense helpers shared by the gate and circuit modules.

use crate::{CMat, C64};

/// Embeds a `2^k × 2^k` local operator acting on `qubits` (first = most
/// significant local bit) into an `n`-qubit register.
pub fn embed(local: &CMat, qubits: &[usize], n: usize) -> CMat {
    let k = qubits.len();
    assert_eq!(local.nrows(), 1 << k);
    let dim = 1usize << n;
    let masks: Vec<usize> = qubits.iter().map(|&q| 1usize << (n - 1 - q)).collect();
    let all: usize = masks.iter().sum();
    let local_index = |b: usize| {
        masks
            .iter()
            .fold(0usize, |acc, &m| acc << 1 | usize::from(b & m != 0))
    };
    let global = |base: usize, l: usize| {
        masks.iter().enumerate().fold(base, |acc, (t, &m)| {
            if l >> (k - 1 - t) & 1 == 1 {
                acc | m
            } else {
                acc
            }
        })
    };
    let mut out = CMat::zeros(dim, dim);
    for col in 0..dim {
        let base = col & !all;
        let lc = local_index(col);
        for lr in 0..(1 << k) {
            let v = local[(lr, lc)];
            if v != C64::default() {
                out[(global(base, lr), col)] = v;
            }
        }
    }
    out
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embed_matches_kron() {
        let x = CMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0].map(|v| C64::new(v, 0.0)));
        let id = CMat::identity(2, 2);
        let want = id.kronecker(&x).kronecker(&id);
        assert_eq!(embed(&x, &[1], 3), want);
        let cnot = CMat::from_fn(4, 4, |r, c| {
            let t = if c >= 2 { c ^ 1 } else { c };
            C64::new(f64::from(u8::from(r == t)), 0.0)
        });
        // CNOT with control 2, target 0 on three qubits: |c0 c1 c2>
        let m = embed(&cnot, &[2, 0], 3);
        assert_eq!(m[(0b101, 0b001)], C64::new(1.0, 0.0));
        assert_eq!(m[(0b010, 0b010)], C64::new(1.0, 0.0));
    }
}
