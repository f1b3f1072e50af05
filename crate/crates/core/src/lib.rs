//! Decomposition of transient signals `x(t) = Σ αₙ e^{−λₙt}` into decay
//! rates and expansion coefficients.
//!
//! The core loop ([`decompose`]) reads the slowest rate and its coefficient
//! off the signal's behaviour at large `t`, subtracts that term, and repeats.
//! Around it sit the two tail limits ([`tail`]), an orthonormal exponential
//! basis built from shifted Jacobi polynomials ([`jacobi`], [`oet`]), a
//! classical Prony baseline ([`prony`]), and the biorthogonal functionals
//! that formalise coefficient extraction ([`functionals`]).
//!
//! Numeric code is generic over the scalar through [`scalar::Real`]; term
//! arithmetic only needs [`scalar::Scalar`], so it also runs over exact
//! rationals. The aliases below fix the common instantiations.

pub mod error;
pub mod quadrature;
pub mod scalar;
pub mod signal;
pub mod tail;
pub mod decompose;
pub mod jacobi;
pub mod oet;
pub mod prony;
pub mod functionals;
pub mod harness;

pub use error::{Error, Result};

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

/// Symbolic transient over `f64`.
pub type Transient = signal::SymbolicTransient<f64>;
/// Symbolic transient with exact rational rates and coefficients.
pub type ExactTransient = signal::SymbolicTransient<Rational>;
pub type Samples = signal::SampledSignal<f64>;
pub type Source = signal::SignalSource<f64>;
pub type Decomposition = decompose::DecompositionResult<f64>;
pub type ExactDecomposition = decompose::DecompositionResult<Rational>;
pub type Basis = oet::ExponentialBasis<f64>;
pub type Ledger = functionals::FunctionalLedger<f64>;
pub type ExactLedger = functionals::FunctionalLedger<Rational>;
pub type Polynomial = functionals::PolynomialNoConstant<f64>;
pub type ExactPolynomial = functionals::PolynomialNoConstant<Rational>;
