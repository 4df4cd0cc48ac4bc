//! Resonance-method numerics: extreme values of `ζ(1/2+it)` and of quadratic
//! `L(1/2, χ_{8d})`, with the averaged cusp-form identities alongside.

pub mod arith;
pub mod cli;
pub mod dirichlet;
pub mod error;
pub mod hunt;
pub mod modform;
pub mod quad;
pub mod ratio;
pub mod report;
pub mod resonator;
pub mod special;
pub mod sum;
pub mod zeta;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/resonators.md")]
    mod resonators {}
    #[doc = include_str!("../../../book/src/ratio.md")]
    mod ratio {}
    #[doc = include_str!("../../../book/src/zeta.md")]
    mod zeta {}
    #[doc = include_str!("../../../book/src/hunting.md")]
    mod hunting {}
    #[doc = include_str!("../../../book/src/quadratic.md")]
    mod quadratic {}
    #[doc = include_str!("../../../book/src/petersson.md")]
    mod petersson {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    mod reproducibility {}
}
