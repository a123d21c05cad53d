//! Named Pauli-sum generators.

use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::C64;

fn term(n: usize, letters: &[(usize, Pauli)]) -> PauliSum {
    PauliSum::from_string(PauliString::from_letters(n, letters))
}

fn signed(n: usize, words: &[(f64, [Pauli; 4])], q: [usize; 4]) -> PauliSum {
    let mut out = PauliSum::zero(n);
    for (c, w) in words {
        let letters: Vec<(usize, Pauli)> = q.iter().copied().zip(w.iter().copied()).collect();
        out = out + term(n, &letters).scale_re(*c);
    }
    out
}

pub fn z(n: usize, k: usize) -> PauliSum {
    term(n, &[(k, Pauli::Z)])
}

/// `L_ij = X_i Y_j − Y_i X_j = 2i(|01><10| − |10><01|)` on `(i, j)`.
pub fn hop_a(n: usize, i: usize, j: usize) -> PauliSum {
    term(n, &[(i, Pauli::X), (j, Pauli::Y)]) - term(n, &[(i, Pauli::Y), (j, Pauli::X)])
}

/// `L^s_ij = X_i X_j + Y_i Y_j`.
pub fn hop_s(n: usize, i: usize, j: usize) -> PauliSum {
    term(n, &[(i, Pauli::X), (j, Pauli::X)]) + term(n, &[(i, Pauli::Y), (j, Pauli::Y)])
}

/// The eight-term `L_ijkl`, equal to `8i(|0011><1100| − |1100><0011|)`.
pub fn pair_hop_a(n: usize, i: usize, j: usize, k: usize, l: usize) -> PauliSum {
    use Pauli::{X, Y};
    signed(
        n,
        &[
            (1.0, [X, X, X, Y]),
            (1.0, [X, X, Y, X]),
            (-1.0, [X, Y, X, X]),
            (-1.0, [Y, X, X, X]),
            (1.0, [X, Y, Y, Y]),
            (1.0, [Y, X, Y, Y]),
            (-1.0, [Y, Y, X, Y]),
            (-1.0, [Y, Y, Y, X]),
        ],
        [i, j, k, l],
    )
}

/// `L^s_ijkl = 8(|0011><1100| + |1100><0011|)`.
pub fn pair_hop_s(n: usize, i: usize, j: usize, k: usize, l: usize) -> PauliSum {
    let q = [i, j, k, l];
    let a = ketbra(n, &q, 0b0011, 0b1100);
    let b = ketbra(n, &q, 0b1100, 0b0011);
    (a + b).scale_re(8.0)
}

/// `Ĝ_A = ½(X⊗Y − Y⊗X)`.
pub fn bempa_a(n: usize, i: usize, j: usize) -> PauliSum {
    hop_a(n, i, j).scale_re(0.5)
}

/// `Ĝ_B = ¼(XXY − YYY − XYX − YXX) = i(|001><110| − |110><001|)`.
pub fn bempa_b(n: usize, i: usize, j: usize, k: usize) -> PauliSum {
    use Pauli::{X, Y};
    let w = |a, b, c| term(n, &[(i, a), (j, b), (k, c)]);
    (w(X, X, Y) - w(Y, Y, Y) - w(X, Y, X) - w(Y, X, X)).scale_re(0.25)
}

/// `|ket><bra|` on the listed qubits; bit patterns read with `qubits[0]` most significant.
pub fn ketbra(n: usize, qubits: &[usize], ket: u64, bra: u64) -> PauliSum {
    let m = qubits.len();
    let half = C64::new(0.5, 0.0);
    let ihalf = C64::new(0.0, 0.5);
    let mut out = PauliSum::identity(n);
    for (t, &q) in qubits.iter().enumerate() {
        let a = ket >> (m - 1 - t) & 1;
        let b = bra >> (m - 1 - t) & 1;
        let id = PauliSum::identity(n);
        let x = term(n, &[(q, Pauli::X)]);
        let y = term(n, &[(q, Pauli::Y)]);
        let zq = z(n, q);
        let f = match (a, b) {
            (0, 0) => (id + zq).scale(half),
            (1, 1) => (id - zq).scale(half),
            (0, 1) => x.scale(half) + y.scale(ihalf),
            _ => x.scale(half) - y.scale(ihalf),
        };
        out = &out * &f;
    }
    out
}

/// `Π_k (I + (−1)^{b_k} Z_k)/2` over `(qubit, bit)` pins.
pub fn pin_projector(n: usize, pins: &[(usize, bool)]) -> PauliSum {
    let mut out = PauliSum::identity(n);
    for &(q, b) in pins {
        let sign = if b { -1.0 } else { 1.0 };
        let f = (PauliSum::identity(n) + z(n, q).scale_re(sign)).scale_re(0.5);
        out = &out * &f;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_hop_is_ketbra_form() {
        let q = [0, 1, 2, 3];
        let kb = (ketbra(4, &q, 0b0011, 0b1100) - ketbra(4, &q, 0b1100, 0b0011)).scale(C64::new(0.0, 8.0));
        assert_eq!(pair_hop_a(4, 0, 1, 2, 3), kb);
        assert_eq!(pair_hop_a(4, 0, 1, 2, 3).len(), 8);
        assert_eq!(pair_hop_s(4, 0, 1, 2, 3).len(), 8);
    }

    #[test]
    fn two_qubit_forms() {
        let kb = (ketbra(2, &[0, 1], 0b01, 0b10) - ketbra(2, &[0, 1], 0b10, 0b01)).scale(C64::new(0.0, 2.0));
        assert_eq!(hop_a(2, 0, 1), kb);
        let ks = (ketbra(2, &[0, 1], 0b01, 0b10) + ketbra(2, &[0, 1], 0b10, 0b01)).scale_re(2.0);
        assert_eq!(hop_s(2, 0, 1), ks);
    }

    #[test]
    fn bempa_b_ketbra_form() {
        let q = [0, 1, 2];
        let kb = (ketbra(3, &q, 0b001, 0b110) - ketbra(3, &q, 0b110, 0b001)).scale(C64::new(0.0, 1.0));
        assert_eq!(bempa_b(3, 0, 1, 2), kb);
    }

    #[test]
    fn projector_matrix() {
        let p = pin_projector(2, &[(0, true)]).to_matrix().unwrap();
        let d: Vec<f64> = (0..4).map(|k| p[(k, k)].re).collect();
        assert_eq!(d, vec![0.0, 0.0, 1.0, 1.0]);
    }
}
