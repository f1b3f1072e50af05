//! Gauss–Legendre quadrature and the half-line integral `∫₀^∞ h(t) dt`.
//!
//! The half line is mapped onto `(0, 1]` by `z = e^{-t}`, which turns
//! `e^{-λt}` into `z^λ`; sums of exponentials with integer rates become
//! polynomials and are integrated exactly by a rule of sufficient order.
//! Rates below 1/2 leave an integrable endpoint singularity at `z = 0`; the
//! optional graded mode splits `[ε, 1]` into decade panels for those cases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{int, lit, Real};
use crate::signal::SignalSource;

/// Environment variable overriding [`QuadratureConfig::nodes`].
pub const QUAD_NODES_ENV: &str = "TRANSIENT_LAB_QUAD_NODES";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Gauss–Legendre order (per panel in graded mode).
    pub nodes: usize,
    /// Lower end of the `z` interval.
    pub epsilon: f64,
    /// `0` integrates `[ε, 1]` as one panel; `d > 0` uses panels
    /// `[10^{-(k+1)}, 10^{-k}]` for `k < d` plus `[ε, 10^{-d}]`.
    pub graded_decades: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes: 128,
            epsilon: 1e-300,
            graded_decades: 0,
        }
    }
}

impl QuadratureConfig {
    pub fn with_nodes(nodes: usize) -> Self {
        Self {
            nodes,
            ..Self::default()
        }
    }

    /// Decade-graded panels with `nodes` points each.
    pub fn graded(nodes: usize, decades: usize) -> Self {
        Self {
            nodes,
            graded_decades: decades,
            ..Self::default()
        }
    }

    /// Applies the `TRANSIENT_LAB_QUAD_NODES` override when set.
    pub fn with_env_override(mut self) -> Result<Self> {
        if let Ok(v) = std::env::var(QUAD_NODES_ENV) {
            self.nodes = v.trim().parse().map_err(|_| {
                Error::InvalidConfig(format!("{QUAD_NODES_ENV}={v:?} is not a positive integer"))
            })?;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::InvalidConfig("quadrature nodes must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "quadrature epsilon {} must lie in (0, 1)",
                self.epsilon
            )));
        }
        if self.graded_decades > 0 && 10f64.powi(-(self.graded_decades as i32)) <= self.epsilon {
            return Err(Error::InvalidConfig(format!(
                "{} graded decades reach below epsilon {}",
                self.graded_decades, self.epsilon
            )));
        }
        Ok(())
    }

    /// Panels covering `[max(ε, lo), hi]` inside `(0, 1]`.
    fn panels<T: Real>(&self, lo: T, hi: T) -> Vec<(T, T)> {
        let lo = lo.max(lit(self.epsilon));
        if lo >= hi {
            return Vec::new();
        }
        if self.graded_decades == 0 {
            return vec![(lo, hi)];
        }
        let ten = lit::<T>(10.0);
        let mut out = Vec::new();
        let mut top = hi;
        for _ in 0..self.graded_decades {
            let next = top / ten;
            if next <= lo {
                break;
            }
            out.push((next, top));
            top = next;
        }
        out.push((lo, top));
        out
    }
}

/// Nodes and weights of the `n`-point rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Newton iteration on `P_n` from the Tricomi initial guesses.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("Gauss–Legendre order must be positive".into()));
        }
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = T::from_usize(n).unwrap();
        let half = (n + 1) / 2;
        for i in 0..half {
            let theta = T::PI() * (T::from_usize(i).unwrap() + lit(0.75)) / (nf + lit(0.5));
            let mut x = theta.cos();
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x = x - dx;
                if dx.abs() <= T::epsilon() * lit(2.0) {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = lit::<T>(2.0) / ((T::one() - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = T::zero();
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `∫_a^b f`, failing on the first non-finite integrand value.
    pub fn integrate<F>(&self, a: T, b: T, mut f: F) -> Result<T>
    where
        F: FnMut(T) -> Result<T>,
    {
        let half = (b - a) / lit(2.0);
        let mid = (b + a) / lit(2.0);
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let z = mid + half * x;
            let v = f(z)?;
            if !v.is_finite() {
                return Err(Error::QuadratureFailure {
                    node: z.to_f64().unwrap_or(f64::NAN),
                });
            }
            acc = acc + w * v;
        }
        Ok(acc * half)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = int::<T>(k as i64);
        let p2 = ((lit::<T>(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (T::one(), T::zero());
    }
    let nf = int::<T>(n as i64);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// `∫₀¹ g(z) dz` over the configured panels of `[ε, 1]`.
pub fn integrate_unit<T, F>(q: &QuadratureConfig, g: F) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    integrate_z(q, T::zero(), T::one(), g)
}

fn integrate_z<T, F>(q: &QuadratureConfig, lo: T, hi: T, mut g: F) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    q.validate()?;
    let rule = GaussLegendre::<T>::new(q.nodes)?;
    let mut acc = T::zero();
    for (a, b) in q.panels(lo, hi) {
        acc = acc + rule.integrate(a, b, &mut g)?;
    }
    Ok(acc)
}

/// `∫₀^∞ h(t) dt = ∫₀¹ h(−ln z)/z dz`.
pub fn integrate_half_line<T, F>(q: &QuadratureConfig, h: F) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    integrate_over(q, (T::zero(), T::infinity()), h)
}

/// `∫_{t_lo}^{t_hi} h(t) dt` through the same substitution, with the
/// `z` interval `[e^{-t_hi}, e^{-t_lo}]` clipped below at `ε`.
pub fn integrate_over<T, F>(q: &QuadratureConfig, (t_lo, t_hi): (T, T), mut h: F) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    let t_lo = t_lo.max(T::zero());
    integrate_z(q, (-t_hi).exp(), (-t_lo).exp(), |z: T| {
        // keep the nodes inside the time window despite rounding in ln
        let t = (-z.ln()).max(t_lo).min(t_hi);
        Ok(h(t)? / z)
    })
}

/// `⟨f, g⟩ = ∫ f(t) g(t) dt` over the common support of `f` and `g`.
pub fn inner_product<T: Real>(
    f: &SignalSource<T>,
    g: &SignalSource<T>,
    q: &QuadratureConfig,
) -> Result<T> {
    let (fl, fh) = f.support();
    let (gl, gh) = g.support();
    integrate_over(q, (fl.max(gl), fh.min(gh)), |t| Ok(f.evaluate(t)? * g.evaluate(t)?))
}
