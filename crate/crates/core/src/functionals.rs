//! Biorthogonal functionals over transient signals and over monomials.
//!
//! `Rₙ` reads the coefficient of `e^{−λₙt}` as a limit at infinity once the
//! terms `R₁..R_{n−1}` have been stripped:
//!
//! ```text
//! Rₙ(x) = lim_{t→∞} e^{λₙt} (x(t) − Σ_{k<n} Rₖ(x) e^{−λₖt})
//! ```
//!
//! `Qₙ` does the same at `z → 0⁺` for polynomials without a constant term:
//!
//! ```text
//! Qₙ(f) = lim_{z→0⁺} z^{−n} (f(z) − Σ_{k<n} Qₖ(f) zᵏ)
//! ```
//!
//! Both recursions keep their state in a [`FunctionalLedger`], which only
//! accepts values in index order.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{int, lit, Real, Scalar};
use crate::signal::{SignalSource, SymbolicTransient, Term};
use crate::tail::{estimate_coefficient_detailed, tail_window, TailFitConfig};

/// `f(z) = Σ_k coeffs[k]·z^{k+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialNoConstant<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> PolynomialNoConstant<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    /// `zⁿ`, `n ≥ 1`.
    pub fn monomial(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig(
                "monomial degree must be at least 1".into(),
            ));
        }
        let mut coeffs = vec![T::zero(); n];
        coeffs[n - 1] = T::one();
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Highest power with a nonzero coefficient (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|c| !c.is_zero())
            .map_or(0, |i| i + 1)
    }

    /// Coefficient of `zⁿ`; zero beyond the stored length and for `n = 0`.
    pub fn coeff(&self, n: usize) -> T {
        match n {
            0 => T::zero(),
            _ => self.coeffs.get(n - 1).cloned().unwrap_or_else(T::zero),
        }
    }

    pub fn evaluate(&self, z: &T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| (acc + c.clone()) * z.clone())
    }

    /// `x(t) = f(e^{−t})`: one term of rate `k` per nonzero coefficient of `zᵏ`.
    pub fn to_transient(&self) -> SymbolicTransient<T> {
        let terms = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| Term::new(int(k as i64 + 1), c.clone()))
            .collect();
        SymbolicTransient::new(terms).expect("integer rates are ordered")
    }
}

/// Known rates and the functional values extracted so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalLedger<T> {
    known_rates: Vec<T>,
    extracted: Vec<T>,
}

impl<T: Scalar> FunctionalLedger<T> {
    pub fn new(known_rates: Vec<T>) -> Result<Self> {
        for (i, r) in known_rates.iter().enumerate() {
            if *r <= T::zero() || (i > 0 && known_rates[i - 1] >= *r) {
                return Err(Error::InvalidConfig(format!(
                    "known_rates[{i}] = {r:?} breaks the positive ascending order"
                )));
            }
        }
        Ok(Self {
            known_rates,
            extracted: Vec::new(),
        })
    }

    /// Ledger over the rates `1..=count`, as used by `Qₙ` and by `f(e^{−t})`.
    pub fn integer_rates(count: usize) -> Self {
        Self {
            known_rates: (1..=count as i64).map(int).collect(),
            extracted: Vec::new(),
        }
    }

    pub fn known_rates(&self) -> &[T] {
        &self.known_rates
    }

    pub fn extracted(&self) -> &[T] {
        &self.extracted
    }

    /// Index of the next functional to extract (1-based).
    pub fn next_index(&self) -> usize {
        self.extracted.len() + 1
    }

    /// `λₙ`, 1-based.
    pub fn rate(&self, n: usize) -> Result<&T> {
        n.checked_sub(1)
            .and_then(|i| self.known_rates.get(i))
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "index {n} outside 1..={}",
                    self.known_rates.len()
                ))
            })
    }

    /// Fails with `LedgerOrder` unless `n` is the next index.
    pub fn check_next(&self, n: usize) -> Result<()> {
        if n != self.next_index() {
            return Err(Error::LedgerOrder {
                expected: self.next_index(),
                got: n,
            });
        }
        self.rate(n).map(|_| ())
    }

    pub fn record(&mut self, n: usize, value: T) -> Result<()> {
        self.check_next(n)?;
        self.extracted.push(value);
        Ok(())
    }
}

/// `Rₙ` on a symbolic signal by exact term arithmetic.
pub fn apply_r_exact<T: Scalar>(
    n: usize,
    s: &SymbolicTransient<T>,
    ledger: &FunctionalLedger<T>,
) -> Result<T> {
    ledger.check_next(n)?;
    let rate = ledger.rate(n)?.clone();
    let mut residual = s.clone();
    for (k, value) in ledger.extracted.iter().enumerate() {
        residual = residual.subtract_term(ledger.known_rates[k].clone(), value.clone())?;
    }
    match residual.dominant_term() {
        None => Ok(T::zero()),
        Some(t) if t.rate < rate => Err(Error::Diverging {
            growth: f64::INFINITY,
        }),
        Some(t) if t.rate == rate => Ok(t.coeff.clone()),
        Some(_) => Ok(T::zero()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitMethod {
    /// Richardson extrapolation with the known exponents: on each window,
    /// `e^{λₙt}·residual` is fitted by a constant plus `e^{−(λₖ−λₙ)t}` for
    /// every other known rate, and the constant is the limit.
    KnownRates,
    /// Coefficient isolation from the tail estimator, which does not use
    /// the other known rates.
    CoefficientIsolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitConfig {
    pub method: LimitMethod,
    pub tail: TailFitConfig,
    /// Right end of the observation support for symbolic and evaluator sources.
    pub horizon: f64,
    /// Window end points scanned, geometric from `min_end_fraction·horizon`.
    pub window_ends: usize,
    pub min_end_fraction: f64,
    /// Samples per window for the known-rate fit.
    pub fit_points: usize,
    /// Leftover slower terms above this fraction of `sup|x|` mean an
    /// unstripped rate below `λₙ`.
    pub divergence_tol: f64,
}

impl Default for LimitConfig {
    fn default() -> Self {
        Self {
            method: LimitMethod::KnownRates,
            tail: crate::decompose::accurate_tail_config(),
            horizon: 60.0,
            window_ends: 48,
            min_end_fraction: 0.02,
            fit_points: 200,
            divergence_tol: 1e-6,
        }
    }
}

impl LimitConfig {
    pub fn with_horizon(horizon: f64) -> Self {
        Self {
            horizon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.tail.validate()?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "horizon {} must be positive and finite",
                self.horizon
            )));
        }
        if self.window_ends == 0 || !(self.min_end_fraction > 0.0 && self.min_end_fraction <= 1.0) {
            return Err(Error::InvalidConfig(
                "window_ends must be positive and min_end_fraction in (0, 1]".into(),
            ));
        }
        if self.fit_points < 4 {
            return Err(Error::InvalidConfig(format!(
                "fit_points {} must be at least 4",
                self.fit_points
            )));
        }
        if !(self.divergence_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "divergence_tol {} must be positive",
                self.divergence_tol
            )));
        }
        Ok(())
    }
}

/// Numeric `Rₙ` with the window it was read from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate<T> {
    pub value: T,
    pub window: (T, T),
    /// Rounding-error estimate for the known-rate fit, last Aitken
    /// correction for coefficient isolation.
    pub uncertainty: T,
}

/// Numeric `Rₙ`: strips the ledger terms and takes the tail limit.
pub fn apply_r_numeric<T: Real>(
    n: usize,
    s: &SignalSource<T>,
    ledger: &FunctionalLedger<T>,
    cfg: &LimitConfig,
) -> Result<LimitEstimate<T>> {
    cfg.validate()?;
    ledger.check_next(n)?;
    let rate = *ledger.rate(n)?;
    let mut residual = s.clone();
    for (k, &value) in ledger.extracted.iter().enumerate() {
        if value != T::zero() {
            residual = residual.subtract_term(ledger.known_rates[k], value)?;
        }
    }
    let (lo, hi) = s.support();
    let hi = hi.min(lit(cfg.horizon));
    let grid = s.grid(lo, hi, cfg.tail.probe_points);
    let sup = |src: &SignalSource<T>| -> Result<T> {
        Ok(src
            .sample(&grid)?
            .into_iter()
            .fold(T::zero(), |m, v| m.max(v.abs())))
    };
    let scale = sup(s)?;
    // a residual below the tail estimator's floor has nothing left to isolate
    if sup(&residual)? <= scale * lit(cfg.tail.abs_floor) {
        return Ok(LimitEstimate {
            value: T::zero(),
            window: tail_window((lo, hi), &cfg.tail),
            uncertainty: T::zero(),
        });
    }

    let first = lo + (hi - lo) * lit(cfg.min_end_fraction);
    let ends: Vec<T> = (0..cfg.window_ends)
        .map(|i| {
            if cfg.window_ends == 1 || i + 1 == cfg.window_ends {
                return hi;
            }
            let u = lit::<T>(i as f64 / (cfg.window_ends - 1) as f64);
            (lo + (first - lo) * ((hi - lo) / (first - lo)).powf(u)).min(hi)
        })
        .collect();

    let mut best: Option<(LimitEstimate<T>, T)> = None;
    let mut diverging = None;
    let mut last_err = None;
    for b in ends {
        let est = match cfg.method {
            LimitMethod::KnownRates => known_rate_limit(&residual, n, ledger, (lo, b), cfg),
            LimitMethod::CoefficientIsolation => {
                estimate_coefficient_detailed(&residual, rate, (lo, b), &cfg.tail).map(|e| {
                    let est = LimitEstimate {
                        value: e.coeff,
                        window: e.window,
                        uncertainty: e.uncertainty,
                    };
                    (est, T::zero())
                })
            }
        };
        match est {
            Ok((e, leftover)) if e.uncertainty.is_finite() => {
                if best.map_or(true, |(x, _)| e.uncertainty < x.uncertainty) {
                    best = Some((e, leftover));
                }
            }
            Ok(_) => {}
            Err(e @ Error::Diverging { .. }) => diverging = Some(e),
            Err(e) => last_err = Some(e),
        }
    }
    match (best, diverging, last_err) {
        // growth in any window means a slower term was left in the residual
        (_, Some(e), _) if cfg.method == LimitMethod::CoefficientIsolation => Err(e),
        (Some((_, leftover)), _, _) if leftover > scale * lit(cfg.divergence_tol) => {
            Err(Error::Diverging {
                growth: (leftover / scale).to_f64().unwrap_or(f64::INFINITY),
            })
        }
        (Some((b, _)), _, _) => Ok(b),
        (None, Some(e), _) => Err(e),
        (None, None, Some(e)) => Err(e),
        (None, None, None) => Err(Error::SignalVanished {
            found: 0,
            needed: cfg.fit_points,
        }),
    }
}

/// Least-squares fit of `e^{λₙt}·r(t)` on one window by a constant plus the
/// other known exponentials. Also returns `Σ|dₖ|` over the fitted slower
/// terms `dₖe^{−λₖt}`, `k < n`.
fn known_rate_limit<T: Real>(
    residual: &SignalSource<T>,
    n: usize,
    ledger: &FunctionalLedger<T>,
    support: (T, T),
    cfg: &LimitConfig,
) -> Result<(LimitEstimate<T>, T)> {
    let rate = ledger.known_rates[n - 1];
    let window = tail_window(support, &cfg.tail);
    let a = window.0;
    let times = residual.grid(window.0, window.1, cfg.fit_points);
    let others: Vec<(usize, T)> = ledger
        .known_rates
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != n - 1)
        .map(|(k, &r)| (k, r - rate))
        .collect();
    let m = others.len() + 1;
    if times.len() < 2 * m {
        return Err(Error::SignalVanished {
            found: times.len(),
            needed: 2 * m,
        });
    }
    let g: Vec<T> = residual
        .sample(&times)?
        .into_iter()
        .zip(&times)
        .map(|(v, &t)| (rate * t).exp() * v)
        .collect();
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSignal("non-finite scaled residual".into()));
    }
    let columns: Vec<Vec<T>> = std::iter::once(vec![T::one(); times.len()])
        .chain(
            others
                .iter()
                .map(|&(_, mu)| times.iter().map(|&t| (-mu * (t - a)).exp()).collect()),
        )
        .collect();
    let fit = least_squares(columns, &g).ok_or(Error::RankDeficient { order: m })?;

    let leftover = others
        .iter()
        .zip(&fit.solution[1..])
        .filter(|((k, _), _)| *k < n - 1)
        .fold(T::zero(), |acc, (&(_, mu), &c)| acc + (c * (mu * a).exp()).abs());
    let gmax = g.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let rounding = T::epsilon() * gmax * T::from_usize(times.len()).unwrap().sqrt();
    let est = LimitEstimate {
        value: fit.solution[0],
        window,
        uncertainty: rounding * fit.first_row_norm,
    };
    Ok((est, leftover))
}

struct LsFit<T> {
    solution: Vec<T>,
    /// Norm of the first row of `(AᵀA)^{-1/2}`, i.e. `sqrt((AᵀA)^{-1}_{00})`.
    first_row_norm: T,
}

/// Column-scaled Householder least squares.
fn least_squares<T: Real>(mut cols: Vec<Vec<T>>, b: &[T]) -> Option<LsFit<T>> {
    let m = cols.len();
    let rows = b.len();
    let scales: Vec<T> = cols
        .iter()
        .map(|c| c.iter().map(|v| *v * *v).sum::<T>().sqrt())
        .collect();
    if scales.iter().any(|s| !(*s > T::zero()) || !s.is_finite()) {
        return None;
    }
    for (c, s) in cols.iter_mut().zip(&scales) {
        c.iter_mut().for_each(|v| *v = *v / *s);
    }
    let mut rhs = b.to_vec();
    for j in 0..m {
        let norm = cols[j][j..].iter().map(|v| *v * *v).sum::<T>().sqrt();
        if norm <= T::epsilon() * lit(rows as f64) {
            return None;
        }
        let alpha = if cols[j][j] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = cols[j][j..].to_vec();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().map(|x| *x * *x).sum::<T>();
        if vnorm2 > T::zero() {
            let reflect = |col: &mut [T]| {
                let dot = v.iter().zip(col.iter()).map(|(a, b)| *a * *b).sum::<T>();
                let f = lit::<T>(2.0) * dot / vnorm2;
                col.iter_mut().zip(&v).for_each(|(c, vi)| *c = *c - f * *vi);
            };
            for col in cols.iter_mut().skip(j) {
                reflect(&mut col[j..]);
            }
            reflect(&mut rhs[j..]);
        }
    }
    // back substitution on R x = Qᵀb
    let mut x = vec![T::zero(); m];
    for i in (0..m).rev() {
        let s = (i + 1..m).fold(rhs[i], |acc, k| acc - cols[k][i] * x[k]);
        x[i] = s / cols[i][i];
    }
    // first row of R^{-1}: solve Rᵀ y = e₀ is not needed; row 0 of R^{-1}
    // is the solution of (R^{-1})ᵀ-style back substitution below
    let mut w = vec![T::zero(); m];
    w[0] = T::one() / cols[0][0];
    for j in 1..m {
        let s = (0..j).fold(T::zero(), |acc, k| acc + w[k] * cols[j][k]);
        w[j] = -s / cols[j][j];
    }
    let first_row_norm = w.iter().map(|v| *v * *v).sum::<T>().sqrt() / scales[0];
    let solution = x.iter().zip(&scales).map(|(v, s)| *v / *s).collect();
    Some(LsFit {
        solution,
        first_row_norm,
    })
}

/// `Rₙ`, exact when `s` is symbolic with rates inside the known set,
/// numeric otherwise.
pub fn apply_r<T: Real>(
    n: usize,
    s: &SignalSource<T>,
    ledger: &FunctionalLedger<T>,
    cfg: &LimitConfig,
) -> Result<T> {
    if let Some(sym) = s.as_symbolic() {
        if sym.rates().all(|r| ledger.known_rates.contains(r)) {
            return apply_r_exact(n, sym, ledger);
        }
    }
    apply_r_numeric(n, s, ledger, cfg).map(|e| e.value)
}

/// Runs `R₁..R_count` in order and returns the filled ledger.
pub fn extract_r_exact<T: Scalar>(
    s: &SymbolicTransient<T>,
    known_rates: Vec<T>,
) -> Result<FunctionalLedger<T>> {
    let mut ledger = FunctionalLedger::new(known_rates)?;
    for n in 1..=ledger.known_rates.len() {
        let v = apply_r_exact(n, s, &ledger)?;
        ledger.record(n, v)?;
    }
    Ok(ledger)
}

pub fn extract_r_numeric<T: Real>(
    s: &SignalSource<T>,
    known_rates: Vec<T>,
    cfg: &LimitConfig,
) -> Result<FunctionalLedger<T>> {
    let mut ledger = FunctionalLedger::new(known_rates)?;
    for n in 1..=ledger.known_rates.len() {
        let v = apply_r_numeric(n, s, &ledger, cfg)?.value;
        ledger.record(n, v)?;
    }
    Ok(ledger)
}

/// Normalization applied to the stripped limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QNormalization {
    /// The Taylor coefficient of `zⁿ`; `Qₙ(zᵏ) = δₙₖ`.
    #[default]
    Taylor,
    /// `f⁽ⁿ⁾(0)/Γ(n)`, which is `n` times the Taylor coefficient.
    GammaN,
}

/// `Qₙ(f)` by exact coefficient stripping.
pub fn apply_q<T: Scalar>(
    n: usize,
    f: &PolynomialNoConstant<T>,
    ledger: &FunctionalLedger<T>,
    norm: QNormalization,
) -> Result<T> {
    ledger.check_next(n)?;
    let mut stripped = f.coeffs.clone();
    stripped.resize(stripped.len().max(n), T::zero());
    for (k, q) in ledger.extracted.iter().enumerate() {
        stripped[k] = stripped[k].clone() - q.clone();
    }
    if let Some(k) = stripped[..n - 1].iter().position(|c| !c.is_zero()) {
        // z^{k+1} survives stripping and z^{-n} z^{k+1} blows up
        return Err(Error::Diverging {
            growth: f64::from((n - k - 1) as u32),
        });
    }
    let taylor = stripped[n - 1].clone();
    Ok(match norm {
        QNormalization::Taylor => taylor,
        QNormalization::GammaN => taylor * int(n as i64),
    })
}

/// Direct evaluation of `z^{−n}(f(z) − Σ_{k<n} Qₖ zᵏ)` at the given `z`.
pub fn q_limit_at<T: Scalar>(
    n: usize,
    f: &PolynomialNoConstant<T>,
    ledger: &FunctionalLedger<T>,
    z: &T,
) -> Result<T> {
    ledger.check_next(n)?;
    let mut power = T::one();
    let mut stripped = f.evaluate(z);
    for q in &ledger.extracted {
        power = power * z.clone();
        stripped = stripped - q.clone() * power.clone();
    }
    power = power * z.clone();
    Ok(stripped / power)
}

/// Points where [`q_cross_check`] evaluates the stripped quotient.
pub const Q_CHECK_POINTS: [f64; 3] = [1e-2, 1e-4, 1e-6];

/// `Qₙ(f)` together with the direct quotient at [`Q_CHECK_POINTS`].
pub fn q_cross_check<T: Scalar>(
    n: usize,
    f: &PolynomialNoConstant<T>,
    ledger: &FunctionalLedger<T>,
) -> Result<(T, [T; 3])> {
    let exact = apply_q(n, f, ledger, QNormalization::Taylor)?;
    let mut limits = [T::zero(), T::zero(), T::zero()];
    for (slot, z) in limits.iter_mut().zip(Q_CHECK_POINTS) {
        *slot = q_limit_at(n, f, ledger, &lit(z))?;
    }
    Ok((exact, limits))
}

pub fn extract_q<T: Scalar>(
    f: &PolynomialNoConstant<T>,
    count: usize,
    norm: QNormalization,
) -> Result<FunctionalLedger<T>> {
    let mut ledger = FunctionalLedger::integer_rates(count);
    for n in 1..=count {
        // the ledger always holds Taylor values; the normalization only scales the readout
        let v = apply_q(n, f, &ledger, QNormalization::Taylor)?;
        ledger.record(n, v)?;
    }
    if norm == QNormalization::GammaN {
        for (k, v) in ledger.extracted.iter_mut().enumerate() {
            *v = v.clone() * int(k as i64 + 1);
        }
    }
    Ok(ledger)
}

/// `max_n |Rₙ(f(e^{−t})) − Qₙ(f)|` with `R` computed exactly.
pub fn correspondence_check_exact<T: Scalar>(f: &PolynomialNoConstant<T>) -> Result<T> {
    let deg = f.degree();
    let r = extract_r_exact(&f.to_transient(), (1..=deg as i64).map(int).collect())?;
    let q = extract_q(f, deg, QNormalization::Taylor)?;
    Ok(max_abs_diff(r.extracted(), q.extracted()))
}

/// As [`correspondence_check_exact`], with `R` read numerically from
/// `f(e^{−t})` observed on `[0, cfg.horizon]`.
pub fn correspondence_check_numeric<T: Real>(
    f: &PolynomialNoConstant<T>,
    cfg: &LimitConfig,
) -> Result<T> {
    let deg = f.degree();
    let source: SignalSource<T> = f.to_transient().into();
    let r = extract_r_numeric(&source, (1..=deg as i64).map(int).collect(), cfg)?;
    let q = extract_q(f, deg, QNormalization::Taylor)?;
    Ok(max_abs_diff(r.extracted(), q.extracted()))
}

fn max_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.clone() - y.clone()).abs())
        .fold(T::zero(), |m, d| if d > m { d } else { m })
}

/// `[Rₙ(e^{−λₖt})]` in exact arithmetic; row `n`, column `k`.
pub fn r_matrix_exact<T: Scalar>(rates: &[T]) -> Result<Vec<Vec<T>>> {
    let mut columns = Vec::with_capacity(rates.len());
    for r in rates {
        let basis = SymbolicTransient::new(vec![Term::new(r.clone(), T::one())])?;
        columns.push(extract_r_exact(&basis, rates.to_vec())?.extracted);
    }
    Ok(transpose(columns))
}

pub fn r_matrix_numeric<T: Real>(rates: &[T], cfg: &LimitConfig) -> Result<Vec<Vec<T>>> {
    let mut columns = Vec::with_capacity(rates.len());
    for &r in rates {
        let basis: SignalSource<T> = SymbolicTransient::new(vec![Term::new(r, T::one())])?.into();
        columns.push(extract_r_numeric(&basis, rates.to_vec(), cfg)?.extracted);
    }
    Ok(transpose(columns))
}

/// `[Qₙ(zᵏ)]` for `n, k ≤ size`.
pub fn q_matrix<T: Scalar>(size: usize, norm: QNormalization) -> Result<Vec<Vec<T>>> {
    let mut columns = Vec::with_capacity(size);
    for k in 1..=size {
        columns.push(extract_q(&PolynomialNoConstant::monomial(k)?, size, norm)?.extracted);
    }
    Ok(transpose(columns))
}

fn transpose<T: Clone>(columns: Vec<Vec<T>>) -> Vec<Vec<T>> {
    let n = columns.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| columns.iter().map(|c| c[i].clone()).collect())
        .collect()
}

/// Largest `|m[i][j] − δᵢⱼ|`.
pub fn identity_deviation<T: Scalar>(m: &[Vec<T>]) -> T {
    let mut worst = T::zero();
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { T::one() } else { T::zero() };
            let d = (v.clone() - target).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Writes `n,k,value` rows with 1-based indices.
pub fn write_matrix_csv<W: Write, T: Scalar>(w: W, m: &[Vec<T>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    wtr.write_record(["n", "k", "value"]).map_err(io)?;
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            wtr.write_record([
                (i + 1).to_string(),
                (j + 1).to_string(),
                format!("{:e}", v.approx_f64()),
            ])
            .map_err(io)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn sym(pairs: &[(f64, f64)]) -> SymbolicTransient<f64> {
        SymbolicTransient::from_pairs(pairs).unwrap()
    }

    #[test]
    fn r1_of_leading_exponential_is_one() {
        let ledger = FunctionalLedger::new(vec![1.5]).unwrap();
        assert_eq!(apply_r_exact(1, &sym(&[(1.5, 1.0)]), &ledger).unwrap(), 1.0);
    }

    #[test]
    fn r1_of_faster_exponential_is_zero() {
        let ledger = FunctionalLedger::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(apply_r_exact(1, &sym(&[(2.0, 1.0)]), &ledger).unwrap(), 0.0);
        let src: SignalSource<f64> = sym(&[(2.0, 1.0)]).into();
        let cfg = LimitConfig::default();
        let v = apply_r_numeric(1, &src, &ledger, &cfg).unwrap().value;
        assert!(v.abs() < 1e-12, "{v}");
    }

    #[test]
    fn ledger_enforces_order() {
        let ledger = FunctionalLedger::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            apply_r_exact(2, &sym(&[(1.0, 1.0)]), &ledger),
            Err(Error::LedgerOrder { expected: 1, got: 2 })
        ));
        let mut ledger = ledger;
        ledger.record(1, 1.0).unwrap();
        assert!(matches!(
            ledger.record(1, 1.0),
            Err(Error::LedgerOrder { expected: 2, got: 1 })
        ));
        assert!(FunctionalLedger::new(vec![2.0, 1.0]).is_err());
        assert!(FunctionalLedger::new(vec![0.0]).is_err());
    }

    #[test]
    fn unstripped_slower_rate_diverges() {
        let s = sym(&[(1.0, 2.0), (2.0, 3.0)]);
        let mut ledger = FunctionalLedger::new(vec![1.0, 2.0]).unwrap();
        ledger.record(1, 0.0).unwrap();
        assert!(matches!(apply_r_exact(2, &s, &ledger), Err(Error::Diverging { .. })));
        let src: SignalSource<f64> = s.into();
        for method in [LimitMethod::KnownRates, LimitMethod::CoefficientIsolation] {
            let cfg = LimitConfig {
                method,
                horizon: 40.0,
                ..LimitConfig::default()
            };
            assert!(
                matches!(apply_r_numeric(2, &src, &ledger, &cfg), Err(Error::Diverging { .. })),
                "{method:?}"
            );
        }
    }

    #[test]
    fn exact_r_matrix_is_identity() {
        let rates = vec![rat(1, 2), rat(1, 1), rat(17, 10), rat(11, 5), rat(3, 1)];
        let m = r_matrix_exact(&rates).unwrap();
        assert_eq!(identity_deviation(&m), rat(0, 1));
    }

    #[test]
    fn numeric_r_matrix_is_identity() {
        let rates = [0.5, 1.0, 1.7, 2.2, 3.0];
        for method in [LimitMethod::KnownRates, LimitMethod::CoefficientIsolation] {
            let cfg = LimitConfig {
                method,
                ..LimitConfig::with_horizon(60.0)
            };
            let m = r_matrix_numeric(&rates, &cfg).unwrap();
            assert!(identity_deviation(&m) < 1e-8, "{method:?} {m:?}");
        }
    }

    #[test]
    fn q_examples() {
        let ledger = FunctionalLedger::<f64>::integer_rates(3);
        let z2 = PolynomialNoConstant::<f64>::monomial(2).unwrap();
        let z3 = PolynomialNoConstant::<f64>::monomial(3).unwrap();
        assert_eq!(extract_q(&z2, 2, QNormalization::Taylor).unwrap().extracted()[1], 1.0);
        assert_eq!(extract_q(&z3, 2, QNormalization::Taylor).unwrap().extracted()[1], 0.0);
        let f = PolynomialNoConstant::new(vec![3.0, 5.0]);
        assert_eq!(extract_q(&f, 2, QNormalization::Taylor).unwrap().extracted(), &[3.0, 5.0]);

        let z = PolynomialNoConstant::monomial(1).unwrap();
        let (exact, limits) = q_cross_check(1, &z, &ledger).unwrap();
        assert_eq!(exact, 1.0);
        assert!((limits[2] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn q_cross_check_converges() {
        let f = PolynomialNoConstant::<f64>::new(vec![2.0, -1.0, 4.0]);
        let mut ledger = FunctionalLedger::integer_rates(3);
        for n in 1..=3 {
            let (exact, limits) = q_cross_check(n, &f, &ledger).unwrap();
            assert!((limits[1] - exact).abs() < 1e-3, "{n} {limits:?}");
            ledger.record(n, exact).unwrap();
        }
    }

    #[test]
    fn gamma_normalization_scales_by_n() {
        let m = q_matrix::<BigRational>(4, QNormalization::GammaN).unwrap();
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { rat(i as i64 + 1, 1) } else { rat(0, 1) };
                assert_eq!(*v, want);
            }
        }
    }

    #[test]
    fn q_matrix_is_identity() {
        let m = q_matrix::<BigRational>(10, QNormalization::Taylor).unwrap();
        assert_eq!(identity_deviation(&m), rat(0, 1));
    }

    #[test]
    fn correspondence_examples() {
        let z = PolynomialNoConstant::new(vec![1.0]);
        assert_eq!(correspondence_check_exact(&z).unwrap(), 0.0);
        let f = PolynomialNoConstant::new(vec![2.0, 3.0]);
        assert!(correspondence_check_exact(&f).unwrap() < 1e-12);
        let d = correspondence_check_numeric(&f, &LimitConfig::with_horizon(40.0)).unwrap();
        assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn apply_r_dispatches_to_exact() {
        let s: SignalSource<f64> = sym(&[(1.0, 2.0), (2.0, 3.0)]).into();
        let mut ledger = FunctionalLedger::new(vec![1.0, 2.0]).unwrap();
        let cfg = LimitConfig::default();
        let r1 = apply_r(1, &s, &ledger, &cfg).unwrap();
        assert_eq!(r1, 2.0);
        ledger.record(1, r1).unwrap();
        assert_eq!(apply_r(2, &s, &ledger, &cfg).unwrap(), 3.0);
    }

    #[test]
    fn matrix_csv() {
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &q_matrix::<f64>(2, QNormalization::Taylor).unwrap()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "n,k,value\n1,1,1e0\n1,2,0e0\n2,1,0e0\n2,2,1e0\n");
    }

    #[test]
    fn least_squares_recovers_exact_fit() {
        let t: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let cols = vec![vec![1.0; 20], t.iter().map(|x| (-x).exp()).collect()];
        let b: Vec<f64> = t.iter().map(|x| 2.0 - 3.0 * (-x).exp()).collect();
        let fit = least_squares(cols, &b).unwrap();
        assert!((fit.solution[0] - 2.0).abs() < 1e-13);
        assert!((fit.solution[1] + 3.0).abs() < 1e-13);
    }
}
