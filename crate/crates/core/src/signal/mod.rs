//! Transient signal representations.
//!
//! A transient signal is a finite sum `x(t) = Σ αₙ e^{-λₙ t}` over `t ≥ 0`
//! with `0 < λ₁ < λ₂ < ⋯`. [`SymbolicTransient`] holds the `(rate, coeff)`
//! list and supports exact term arithmetic; [`SampledSignal`] holds a finite
//! observation; [`SignalSource`] unifies both with black-box evaluators.

mod bounds;
mod io;
mod sampled;
mod source;
mod synth;

pub use bounds::{
    coefficient_isolation_bound, l2_norm_bound, l2_norm_bound_check, laplace_sequence_bounds,
    tail_truncation_bound, vanishing_bound,
};
pub use io::{read_sampled_csv, read_signal_spec, signal_spec_from_str, write_sampled_csv, SignalSpec};
pub use sampled::SampledSignal;
pub use source::{Evaluator, SignalSource};
pub use synth::{synthesize_samples, TimeGrid};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// One exponential component `coeff · e^{-rate·t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term<T> {
    pub rate: T,
    pub coeff: T,
}

impl<T> Term<T> {
    pub fn new(rate: T, coeff: T) -> Self {
        Self { rate, coeff }
    }
}

impl<T: Real> Term<T> {
    #[inline]
    pub fn evaluate(&self, t: T) -> T {
        self.coeff * (-self.rate * t).exp()
    }
}

/// Finite truncation of a transient signal: ordered `(rate, coeff)` pairs.
///
/// Rates are strictly positive and strictly increasing. Zero coefficients are
/// allowed; [`SymbolicTransient::canonicalize`] drops them.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicTransient<T> {
    terms: Vec<Term<T>>,
}

impl<T: Scalar> Default for SymbolicTransient<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Scalar> SymbolicTransient<T> {
    /// Validates ordering and positivity of the rates.
    pub fn new(terms: Vec<Term<T>>) -> Result<Self> {
        for (i, term) in terms.iter().enumerate() {
            if term.rate <= T::zero() {
                return Err(Error::InvalidSignal(format!(
                    "terms[{i}].rate = {:?} must be strictly positive",
                    term.rate
                )));
            }
            if i > 0 && terms[i - 1].rate >= term.rate {
                return Err(Error::InvalidSignal(format!(
                    "terms[{i}].rate = {:?} must exceed terms[{}].rate = {:?}",
                    term.rate,
                    i - 1,
                    terms[i - 1].rate
                )));
            }
        }
        Ok(Self { terms })
    }

    /// Builds from `(rate, coeff)` pairs, converting through `f64`.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let terms = pairs
            .iter()
            .map(|&(r, c)| {
                let rate = T::from_f64(r)
                    .ok_or_else(|| Error::InvalidSignal(format!("rate {r} not representable")))?;
                let coeff = T::from_f64(c)
                    .ok_or_else(|| Error::InvalidSignal(format!("coeff {c} not representable")))?;
                Ok(Term::new(rate, coeff))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms)
    }

    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<Term<T>> {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn rates(&self) -> impl Iterator<Item = &T> {
        self.terms.iter().map(|t| &t.rate)
    }

    /// All coefficients nonzero.
    pub fn is_canonical(&self) -> bool {
        self.terms.iter().all(|t| !t.coeff.is_zero())
    }

    /// Drops zero-coefficient terms.
    pub fn canonicalize(mut self) -> Self {
        self.terms.retain(|t| !t.coeff.is_zero());
        self
    }

    /// Smallest rate carrying a nonzero coefficient.
    pub fn dominant_term(&self) -> Option<&Term<T>> {
        self.terms.iter().find(|t| !t.coeff.is_zero())
    }

    pub fn coefficient_of(&self, rate: &T) -> Option<&T> {
        self.position(rate).ok().map(|i| &self.terms[i].coeff)
    }

    /// `Σ |αₙ|`.
    pub fn abs_coeff_sum(&self) -> T {
        self.terms
            .iter()
            .fold(T::zero(), |acc, t| acc + t.coeff.abs())
    }

    fn position(&self, rate: &T) -> std::result::Result<usize, usize> {
        self.terms.binary_search_by(|t| {
            t.rate
                .partial_cmp(rate)
                .unwrap_or(std::cmp::Ordering::Less)
        })
    }

    /// Adds `coeff · e^{-rate·t}` exactly, merging with an existing rate and
    /// removing the term when its coefficient becomes exactly zero.
    pub fn add_term(&self, rate: T, coeff: T) -> Result<Self> {
        if rate <= T::zero() {
            return Err(Error::InvalidSignal(format!(
                "rate {rate:?} must be strictly positive"
            )));
        }
        let mut terms = self.terms.clone();
        match self.position(&rate) {
            Ok(i) => {
                let merged = terms[i].coeff.clone() + coeff;
                if merged.is_zero() {
                    terms.remove(i);
                } else {
                    terms[i].coeff = merged;
                }
            }
            Err(i) => {
                if !coeff.is_zero() {
                    terms.insert(i, Term::new(rate, coeff));
                }
            }
        }
        Ok(Self { terms })
    }

    /// `self − coeff · e^{-rate·t}` in exact term arithmetic.
    pub fn subtract_term(&self, rate: T, coeff: T) -> Result<Self> {
        self.add_term(rate, -coeff)
    }

    pub fn scale(&self, factor: &T) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Term::new(t.rate.clone(), t.coeff.clone() * factor.clone()))
            .filter(|t| !t.coeff.is_zero())
            .collect();
        Self { terms }
    }

    /// Term-wise `a·self + b·other`.
    pub fn linear_combination(&self, a: &T, other: &Self, b: &T) -> Self {
        let mut out = self.scale(a);
        for t in &other.terms {
            out = out
                .add_term(t.rate.clone(), t.coeff.clone() * b.clone())
                .expect("rates validated on construction");
        }
        out
    }

    /// First `k` terms.
    pub fn truncated(&self, k: usize) -> Self {
        Self {
            terms: self.terms.iter().take(k).cloned().collect(),
        }
    }

    /// Evaluates through `f64`, for scalar types without transcendental functions.
    pub fn evaluate_f64(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| term.coeff.approx_f64() * (-term.rate.approx_f64() * t).exp())
            .sum()
    }

    pub fn to_f64(&self) -> SymbolicTransient<f64> {
        SymbolicTransient {
            terms: self
                .terms
                .iter()
                .map(|t| Term::new(t.rate.approx_f64(), t.coeff.approx_f64()))
                .collect(),
        }
    }
}

impl<T: Real> SymbolicTransient<T> {
    /// `Σ αₙ e^{-λₙ t}`.
    pub fn evaluate(&self, t: T) -> T {
        self.terms.iter().map(|term| term.evaluate(t)).sum()
    }
}
