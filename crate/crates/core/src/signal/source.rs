use std::fmt;
use std::sync::Arc;

use super::{SampledSignal, SymbolicTransient, Term};
use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Black-box signal `t ↦ x(t)` defined on a declared support window.
#[derive(Clone)]
pub struct Evaluator<T> {
    f: Arc<dyn Fn(T) -> T + Send + Sync>,
    support: (T, T),
}

impl<T: Real> Evaluator<T> {
    /// Evaluator defined on `[0, ∞)`.
    pub fn new(f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            support: (T::zero(), T::infinity()),
        }
    }

    pub fn with_support(mut self, lo: T, hi: T) -> Self {
        self.support = (lo, hi);
        self
    }

    pub fn support(&self) -> (T, T) {
        self.support
    }

    pub fn call(&self, t: T) -> T {
        (self.f)(t)
    }
}

impl<T> fmt::Debug for Evaluator<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Evaluator")
            .field("support", &self.support)
            .finish_non_exhaustive()
    }
}

/// Any evaluatable signal over `t ≥ 0`.
#[derive(Debug, Clone)]
pub enum SignalSource<T> {
    Symbolic(SymbolicTransient<T>),
    Sampled(SampledSignal<T>),
    Evaluator(Evaluator<T>),
}

impl<T: Real> From<SymbolicTransient<T>> for SignalSource<T> {
    fn from(s: SymbolicTransient<T>) -> Self {
        SignalSource::Symbolic(s)
    }
}

impl<T: Real> From<SampledSignal<T>> for SignalSource<T> {
    fn from(s: SampledSignal<T>) -> Self {
        SignalSource::Sampled(s)
    }
}

impl<T: Real> From<Evaluator<T>> for SignalSource<T> {
    fn from(s: Evaluator<T>) -> Self {
        SignalSource::Evaluator(s)
    }
}

impl<T: Real> SignalSource<T> {
    pub fn evaluator(f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        SignalSource::Evaluator(Evaluator::new(f))
    }

    /// Closed window on which evaluation is defined.
    pub fn support(&self) -> (T, T) {
        match self {
            SignalSource::Symbolic(_) => (T::zero(), T::infinity()),
            SignalSource::Sampled(s) => s.support(),
            SignalSource::Evaluator(e) => e.support(),
        }
    }

    pub fn evaluate(&self, t: T) -> Result<T> {
        match self {
            SignalSource::Symbolic(s) => {
                if t < T::zero() || t.is_nan() {
                    return Err(out_of_support(t, (T::zero(), T::infinity())));
                }
                Ok(s.evaluate(t))
            }
            SignalSource::Sampled(s) => s.evaluate(t),
            SignalSource::Evaluator(e) => {
                let (lo, hi) = e.support();
                if !(t >= lo && t <= hi) {
                    return Err(out_of_support(t, (lo, hi)));
                }
                Ok(e.call(t))
            }
        }
    }

    /// `self(t) − coeff·e^{-rate·t}`.
    ///
    /// Symbolic inputs stay symbolic (exact term arithmetic); sampled inputs
    /// are updated on their grid; evaluators are wrapped.
    pub fn subtract_term(&self, rate: T, coeff: T) -> Result<Self> {
        if !(rate > T::zero()) {
            return Err(Error::InvalidSignal(format!(
                "rate {rate} must be strictly positive"
            )));
        }
        Ok(match self {
            SignalSource::Symbolic(s) => SignalSource::Symbolic(s.subtract_term(rate, coeff)?),
            SignalSource::Sampled(s) => {
                let term = Term::new(rate, coeff);
                SignalSource::Sampled(s.map_values(|t, v| v - term.evaluate(t)))
            }
            SignalSource::Evaluator(e) => {
                let inner = e.clone();
                let term = Term::new(rate, coeff);
                let (lo, hi) = e.support();
                SignalSource::Evaluator(
                    Evaluator::new(move |t| inner.call(t) - term.evaluate(t)).with_support(lo, hi),
                )
            }
        })
    }

    /// Observation grid inside `[lo, hi]`: the sample times for sampled
    /// signals, otherwise `probe_points` uniformly spaced points.
    pub fn grid(&self, lo: T, hi: T, probe_points: usize) -> Vec<T> {
        match self {
            SignalSource::Sampled(s) => s
                .times()
                .iter()
                .copied()
                .filter(|&t| t >= lo && t <= hi)
                .collect(),
            _ => {
                let n = probe_points.max(2);
                let step = (hi - lo) / T::from_usize(n - 1).unwrap();
                (0..n)
                    .map(|i| {
                        if i == n - 1 {
                            hi
                        } else {
                            lo + step * T::from_usize(i).unwrap()
                        }
                    })
                    .collect()
            }
        }
    }

    pub fn sample(&self, times: &[T]) -> Result<Vec<T>> {
        times.iter().map(|&t| self.evaluate(t)).collect()
    }

    pub fn as_symbolic(&self) -> Option<&SymbolicTransient<T>> {
        match self {
            SignalSource::Symbolic(s) => Some(s),
            _ => None,
        }
    }
}

fn out_of_support<T: Scalar>(t: T, (lo, hi): (T, T)) -> Error {
    Error::OutOfSupport {
        t: t.approx_f64(),
        lo: lo.approx_f64(),
        hi: hi.approx_f64(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluator_subtraction() {
        let s = SignalSource::evaluator(|t: f64| (-t).exp() + (-3.0 * t).exp());
        let r = s.subtract_term(1.0, 1.0).unwrap();
        assert_eq!(r.evaluate(0.0).unwrap(), 1.0);
        let t = 0.7;
        assert!((r.evaluate(t).unwrap() - (-3.0 * t).exp()).abs() < 1e-15);
    }

    #[test]
    fn sampled_subtraction_acts_on_grid() {
        let sym = SymbolicTransient::from_pairs(&[(1.0, 2.0), (2.0, 3.0)]).unwrap();
        let times: Vec<f64> = (0..11).map(|i| i as f64 * 0.5).collect();
        let vals = times.iter().map(|&t| sym.evaluate(t)).collect();
        let s = SignalSource::Sampled(SampledSignal::new(times.clone(), vals).unwrap());
        let r = s.subtract_term(1.0, 2.0).unwrap();
        for &t in &times {
            let want = 3.0 * (-2.0 * t).exp();
            assert!((r.evaluate(t).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn symbolic_subtraction_stays_symbolic() {
        let s: SignalSource<f64> = SymbolicTransient::from_pairs(&[(1.0, 2.0), (2.0, 3.0)])
            .unwrap()
            .into();
        let r = s.subtract_term(1.0, 2.0).unwrap();
        assert_eq!(
            r.as_symbolic().unwrap(),
            &SymbolicTransient::from_pairs(&[(2.0, 3.0)]).unwrap()
        );
    }

    #[test]
    fn rejects_negative_time_and_rate() {
        let s: SignalSource<f64> = SymbolicTransient::from_pairs(&[(1.0, 1.0)]).unwrap().into();
        assert!(s.evaluate(-1.0).is_err());
        assert!(s.subtract_term(0.0, 1.0).is_err());
    }
}
