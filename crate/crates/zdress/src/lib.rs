pub mod circuit;
pub mod error;
pub mod fuzzy;
pub mod gates;
pub mod lie;
pub mod linalg;
pub mod pauli;
pub mod sector;
pub mod varopt;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMat = nalgebra::DMatrix<C64>;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/sectors.md")]
    mod sectors {}
    #[doc = include_str!("../../../book/src/closures.md")]
    mod closures {}
    #[doc = include_str!("../../../book/src/gates.md")]
    mod gates {}
    #[doc = include_str!("../../../book/src/circuits.md")]
    mod circuits {}
    #[doc = include_str!("../../../book/src/fuzzy.md")]
    mod fuzzy {}
    #[doc = include_str!("../../../book/src/varopt.md")]
    mod varopt {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
