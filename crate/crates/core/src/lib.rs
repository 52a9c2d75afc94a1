//! Spectral analysis of discrete periodic Schrödinger operators `H = Δ + Q`
//! on Z^d-periodic graphs perturbed by decaying potentials `±tV`.
//!
//! The crate covers band structure and gaps ([`floquet`]), the asymptotic
//! coefficients of the eigenvalue counting functions ([`gamma`]), the
//! counting functions themselves on box compressions ([`counting`]),
//! weak-ℓp functionals ([`weak_lp`]) and finite sections of discrete
//! pseudodifferential operators ([`pdo`]).

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod counting;
pub mod error;
pub mod floquet;
pub mod gamma;
pub mod graph;
pub mod linalg;
pub mod pdo;
pub mod torus;
pub mod weak_lp;

pub use error::{Error, Result};

/// Direction of the perturbation. `Plus` tracks eigenvalues of `H + tV`
/// crossing `λ` upwards, `Minus` those of `H - tV` crossing it downwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_char(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" => Ok(Sign::Plus),
            "-" | "minus" => Ok(Sign::Minus),
            _ => Err(Error::InvalidArgument(format!("sign must be + or -, got {s:?}"))),
        }
    }
}
