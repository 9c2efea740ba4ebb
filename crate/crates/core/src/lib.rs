//! Exact arithmetic for the Fourier coefficients of fermionic n-point
//! functions.
//!
//! The crate computes the coefficient series F_r and G_{r,s} of the
//! Bloch-Okounkov n-point function by three mutually independent routes and
//! cross-checks them:
//!
//! - [`fock`]: brute-force trace over charge-zero occupation states of the
//!   infinite-wedge space (the ground truth),
//! - [`zeta`] + [`closed`]: constant-term extraction from a bivariate
//!   (zeta, q) Laurent expansion,
//! - [`closed`]: the explicit multi-sum q-series.
//!
//! On top of the exact series the crate provides
//!
//! - [`falsetheta`]: decomposition of cyclotomic-cleared coefficient series
//!   into P(q) * Psi(q) + Q(q) with Psi Rogers' false theta function,
//! - [`asym`]: exact rational small-y expansions driven by Euler polynomial
//!   values, and partition-benchmark ratio scans of the q-coefficients,
//! - [`numeric`]: high-precision evaluation of the series at q = e^{-2 pi y}
//!   with rigorous truncation-tail bounds.
//!
//! All q-series live on a fixed 1/8-integer exponent grid ([`Exp8`]) with
//! arbitrary-precision integer coefficients and explicit, pessimistically
//! propagated truncation orders.

pub mod asym;
pub mod closed;
pub mod error;
pub mod exp;
pub mod falsetheta;
pub mod fock;
pub mod numeric;
pub mod series;
pub mod verify;
pub mod zeta;

pub use error::Error;
pub use exp::Exp8;
pub use series::QSeries;
pub use zeta::ZetaLaurent;

pub use closed::CoeffQuery;
pub use falsetheta::{FalseThetaPair, HalfPoly};
pub use fock::{ExponentSpec, FockState, SignedMode};

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
