use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Finite observation of a signal on an increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal<T> {
    times: Vec<T>,
    values: Vec<T>,
    uniform_step: Option<T>,
}

const UNIFORM_REL_TOL: f64 = 1e-12;

impl<T: Real> SampledSignal<T> {
    /// Validates the grid and detects a uniform step.
    pub fn new(times: Vec<T>, values: Vec<T>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidSignal(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::InvalidSignal("empty sample grid".into()));
        }
        if times[0] < T::zero() {
            return Err(Error::InvalidSignal(format!(
                "times[0] = {} is negative",
                times[0]
            )));
        }
        for i in 1..times.len() {
            if times[i] <= times[i - 1] {
                return Err(Error::InvalidSignal(format!(
                    "times[{i}] = {} does not exceed times[{}] = {}",
                    times[i],
                    i - 1,
                    times[i - 1]
                )));
            }
        }
        let uniform_step = detect_uniform_step(&times);
        Ok(Self {
            times,
            values,
            uniform_step,
        })
    }

    /// Samples at `start + i·step`.
    pub fn uniform(start: T, step: T, values: Vec<T>) -> Result<Self> {
        if step <= T::zero() {
            return Err(Error::InvalidSignal(format!("step {step} must be positive")));
        }
        let times = (0..values.len())
            .map(|i| start + step * T::from_usize(i).unwrap())
            .collect();
        let mut s = Self::new(times, values)?;
        if s.times.len() > 1 {
            s.uniform_step = Some(step);
        }
        Ok(s)
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn uniform_step(&self) -> Option<T> {
        self.uniform_step
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn support(&self) -> (T, T) {
        (self.times[0], *self.times.last().unwrap())
    }

    /// Grid value, or the piecewise-linear interpolant between grid points.
    pub fn evaluate(&self, t: T) -> Result<T> {
        let (lo, hi) = self.support();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfSupport {
                t: t.approx_f64(),
                lo: lo.approx_f64(),
                hi: hi.approx_f64(),
            });
        }
        let idx = self.times.partition_point(|&x| x < t);
        if idx < self.times.len() && self.times[idx] == t {
            return Ok(self.values[idx]);
        }
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let (v0, v1) = (self.values[idx - 1], self.values[idx]);
        let w = (t - t0) / (t1 - t0);
        Ok(v0 + w * (v1 - v0))
    }

    /// Same grid, values transformed pointwise.
    pub fn map_values(&self, mut f: impl FnMut(T, T) -> T) -> Self {
        let values = self
            .times
            .iter()
            .zip(&self.values)
            .map(|(&t, &v)| f(t, v))
            .collect();
        Self {
            times: self.times.clone(),
            values,
            uniform_step: self.uniform_step,
        }
    }
}

fn detect_uniform_step<T: Real>(times: &[T]) -> Option<T> {
    if times.len() < 2 {
        return None;
    }
    let n = T::from_usize(times.len() - 1).unwrap();
    let step = (*times.last().unwrap() - times[0]) / n;
    let tol = lit::<T>(UNIFORM_REL_TOL) * step;
    // relative tolerance is applied to the step, with a floor for accumulated rounding in t
    let slack = T::epsilon() * times.last().unwrap().abs() * lit(4.0);
    let ok = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() <= tol.max(slack));
    ok.then_some(step)
}
