//! Closed-form bounds on transient signals and their tail sequences.
//!
//! With `S = Σ|αₙ|` and `B(t) = e^{-(λ₂-λ₁)t} Σ_{n≥2}|αₙ|`:
//!
//! * `|x(t)| ≤ e^{-λ₁t} S`
//! * `|e^{λ₁t}x(t) − α₁| ≤ B(t)`
//! * `λ₁ − ln(|α₁| + B)/t ≤ −ln|x(t)|/t ≤ λ₁ − ln(|α₁| − B)/t` once `B < |α₁|`
//! * `sup |x − Σ_{n≤k} αₙe^{-λₙt}| ≤ Σ_{n>k}|αₙ|`
//! * `∫₀^∞ x² ≤ S²/(2λ₁)`

use super::{SignalSource, SymbolicTransient};
use crate::quadrature::{inner_product, QuadratureConfig};
use crate::scalar::{lit, Real, Scalar};

/// `e^{-λ₁t} Σ|αₙ|`; zero for the empty signal.
pub fn vanishing_bound<T: Real>(s: &SymbolicTransient<T>, t: T) -> T {
    match s.terms().first() {
        Some(first) => (-first.rate * t).exp() * s.abs_coeff_sum(),
        None => T::zero(),
    }
}

/// `Σ_{n>k} |αₙ|`, the uniform error of keeping the first `k` terms.
pub fn tail_truncation_bound<T: Scalar>(s: &SymbolicTransient<T>, k: usize) -> T {
    s.terms()
        .iter()
        .skip(k)
        .fold(T::zero(), |acc, term| acc + term.coeff.abs())
}

/// `e^{-(λ₂-λ₁)t} Σ_{n≥2}|αₙ|`, bounding `|e^{λ₁t}x(t) − α₁|`.
pub fn coefficient_isolation_bound<T: Real>(s: &SymbolicTransient<T>, t: T) -> T {
    let terms = s.terms();
    if terms.len() < 2 {
        return T::zero();
    }
    let gap = terms[1].rate - terms[0].rate;
    (-gap * t).exp() * tail_truncation_bound(s, 1)
}

/// Interval containing `−ln|x(t)|/t` for `t > 0`.
///
/// The upper end is `+∞` while the contamination bound still reaches
/// `|α₁|` (the signal may cross zero there). `None` for the empty signal or
/// `t ≤ 0`.
pub fn laplace_sequence_bounds<T: Real>(s: &SymbolicTransient<T>, t: T) -> Option<(T, T)> {
    let first = s.terms().first()?;
    if t <= T::zero() {
        return None;
    }
    let b = coefficient_isolation_bound(s, t);
    let a = first.coeff.abs();
    let lo = first.rate - (a + b).ln() / t;
    let hi = if b < a {
        first.rate - (a - b).ln() / t
    } else {
        T::infinity()
    };
    Some((lo, hi))
}

/// `(Σ|αₙ|)² / (2λ₁)`; zero for the empty signal.
pub fn l2_norm_bound<T: Scalar>(s: &SymbolicTransient<T>) -> T {
    match s.terms().first() {
        Some(first) => {
            let sum = s.abs_coeff_sum();
            sum.clone() * sum / (int2::<T>() * first.rate.clone())
        }
        None => T::zero(),
    }
}

fn int2<T: Scalar>() -> T {
    T::one() + T::one()
}

/// Whether the quadrature value of `∫x²` respects [`l2_norm_bound`] up to
/// a relative slack of `1e-9` (plus `1e-12` absolute).
pub fn l2_norm_bound_check<T: Real>(s: &SymbolicTransient<T>, q: &QuadratureConfig) -> bool {
    let src = SignalSource::Symbolic(s.clone());
    let Ok(energy) = inner_product(&src, &src, q) else {
        return false;
    };
    let bound = l2_norm_bound(s);
    energy <= bound + bound * lit(1e-9) + lit(1e-12)
}
