//! Sequential decomposition: repeatedly estimate the slowest rate, isolate
//! its coefficient, subtract the term, and continue on the residual.
//!
//! [`decompose_exact`] runs the loop with exact term arithmetic on a
//! symbolic signal. [`decompose_numeric`] runs it on any [`SignalSource`],
//! estimating both limits from a tail window.
//!
//! The numeric mode does not use a single fixed window. Each iteration scans
//! a geometric family of window end points and fits rate and coefficient on
//! each. A window is trusted only as far as its fit agrees with its two
//! neighbours: early windows are contaminated by faster terms, late windows
//! are swamped by the residual left over from earlier subtractions, and in
//! both regimes neighbouring windows disagree. The candidate with the
//! smallest disagreement score wins.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real, Scalar};
use crate::signal::{SignalSource, SymbolicTransient, Term};
use crate::tail::{fit_window, tail_window, FitOrder, TailFitConfig, WindowFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    /// Residual sup-norm fell below the configured fraction of the input's.
    ResidualFloor,
    MaxTerms,
    /// No tail window supports another term.
    SignalVanished,
    /// The best remaining tail fit repeats a rate already extracted.
    RateCollision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionMode {
    Exact,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermDiagnostics<T> {
    pub mode: DecompositionMode,
    /// RMS of the log-linear fit on the chosen window (zero in exact mode).
    pub rate_residual_rms: T,
    /// Chosen tail window; `None` in exact mode.
    pub window: Option<(T, T)>,
    pub rate_uncertainty: T,
    pub coeff_uncertainty: T,
    /// Neighbour-disagreement score of the chosen window.
    pub score: T,
    /// Sup of the residual over the input's tail window after subtraction.
    pub tail_residual_sup: T,
    /// `sup|residual| / sup|extracted term|` over the chosen window after
    /// subtraction; large values mean the window still held other terms.
    pub window_residual_ratio: T,
    /// Largest rate difference between the chosen window and any later
    /// trusted window; a merged pair of close rates drifts with the window.
    pub rate_spread: T,
    /// Set when the score exceeds 1% of the acceptance threshold, the
    /// window residual ratio exceeds the threshold itself, or the rate
    /// spread exceeds `rate_merge_tol`.
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionResult<T> {
    pub terms: Vec<Term<T>>,
    pub diagnostics: Vec<TermDiagnostics<T>>,
    pub terminal_residual_norm: T,
    pub termination_reason: TerminationReason,
    /// The repeated-rate fit that ended a [`TerminationReason::RateCollision`] run.
    pub collision: Option<Term<T>>,
}

impl<T: Scalar + Serialize> DecompositionResult<T> {
    /// `{"terms": [...], "diagnostics": {...}}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "terms": self.terms,
            "diagnostics": {
                "termination_reason": self.termination_reason,
                "terminal_residual_norm": self.terminal_residual_norm,
                "collision": self.collision,
                "per_term": self.diagnostics,
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoppingPolicy {
    /// Stop once `sup|residual| < residual_floor × sup|input|` over the grid.
    pub residual_floor: f64,
    pub max_terms: usize,
    /// Absolute rate distance treated as a repeated rate.
    pub rate_merge_tol: f64,
    /// Number of tail-window end points scanned per iteration.
    pub candidate_windows: usize,
    /// Largest disagreement score for which a window is trusted.
    pub accept_score: f64,
    /// One Newton polish of each rate against the windowed least-squares residual.
    pub refine_rates: bool,
}

impl Default for StoppingPolicy {
    fn default() -> Self {
        Self {
            residual_floor: 1e-10,
            max_terms: 16,
            rate_merge_tol: 1e-3,
            candidate_windows: 48,
            accept_score: 1e-2,
            refine_rates: false,
        }
    }
}

impl StoppingPolicy {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.residual_floor >= 0.0) {
            return bad(format!("residual_floor {} must be ≥ 0", self.residual_floor));
        }
        if !(self.rate_merge_tol > 0.0) {
            return bad(format!("rate_merge_tol {} must be positive", self.rate_merge_tol));
        }
        if self.candidate_windows < 3 {
            return bad(format!(
                "candidate_windows {} must be at least 3",
                self.candidate_windows
            ));
        }
        if !(self.accept_score > 0.0) {
            return bad(format!("accept_score {} must be positive", self.accept_score));
        }
        Ok(())
    }
}

/// Exact-arithmetic decomposition of a symbolic signal.
///
/// Zero-coefficient terms are dropped first; each step takes the minimal
/// remaining rate and its coefficient and removes that term exactly.
pub fn decompose_exact<T: Scalar>(s: &SymbolicTransient<T>) -> DecompositionResult<T> {
    let mut residual = s.clone().canonicalize();
    let mut terms = Vec::with_capacity(residual.len());
    let mut diagnostics = Vec::with_capacity(residual.len());
    while let Some(dominant) = residual.dominant_term() {
        let gamma = dominant.rate.clone();
        let beta = residual
            .coefficient_of(&gamma)
            .cloned()
            .expect("dominant rate is present");
        residual = residual
            .subtract_term(gamma.clone(), beta.clone())
            .expect("rates of a validated signal are positive");
        terms.push(Term::new(gamma, beta));
        diagnostics.push(TermDiagnostics {
            mode: DecompositionMode::Exact,
            rate_residual_rms: T::zero(),
            window: None,
            rate_uncertainty: T::zero(),
            coeff_uncertainty: T::zero(),
            score: T::zero(),
            tail_residual_sup: T::zero(),
            window_residual_ratio: T::zero(),
            rate_spread: T::zero(),
            low_confidence: false,
        });
    }
    DecompositionResult {
        terms,
        diagnostics,
        terminal_residual_norm: T::zero(),
        termination_reason: TerminationReason::SignalVanished,
        collision: None,
    }
}

/// Symbolic signal from the recovered terms.
pub fn reconstruct<T: Scalar>(r: &DecompositionResult<T>) -> SymbolicTransient<T> {
    SymbolicTransient::new(r.terms.clone()).expect("recovered rates are positive and increasing")
}

struct Candidate<T> {
    fit: WindowFit<T>,
    window: (T, T),
    score: T,
}

fn sup_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// `n` window end points spaced geometrically in `t − lo` up to `hi`.
fn window_ends<T: Real>(times: &[T], lo: T, hi: T, n: usize) -> Vec<T> {
    let span = hi - lo;
    let first = (span / lit(200.0)).max(times.get(1).map_or(span, |&t| t - lo));
    if first >= span {
        return vec![hi];
    }
    let ratio = (span / first).ln();
    let nf = T::from_usize(n - 1).unwrap();
    let mut ends: Vec<T> = (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + first * (ratio * T::from_usize(i).unwrap() / nf).exp()
            }
        })
        .collect();
    ends.dedup();
    ends
}

fn scan_windows<T: Real>(
    times: &[T],
    values: &[T],
    support: (T, T),
    cfg: &TailFitConfig,
    stop: &StoppingPolicy,
) -> Vec<Candidate<T>> {
    let (lo, hi) = support;
    let min_points = cfg
        .min_window_points
        .max(4 * (2 * cfg.fit_order.rounds() + 1));
    let wf = lit::<T>(cfg.window_fraction);
    let raw: Vec<Option<(WindowFit<T>, (T, T))>> = window_ends(times, lo, hi, stop.candidate_windows)
        .into_iter()
        .map(|b| {
            let a = b - wf * (b - lo);
            let i0 = times.partition_point(|&t| t < a);
            let i1 = times.partition_point(|&t| t <= b);
            if i1 <= i0 || i1 - i0 < min_points {
                return None;
            }
            let y = &values[i0..i1];
            let positive = y[0] > T::zero();
            if y.iter().any(|&v| v.is_zero() || (v > T::zero()) != positive) {
                return None;
            }
            fit_window(&times[i0..i1], y, cfg.fit_order).map(|f| (f, (a, b)))
        })
        .collect();

    let mut out = Vec::new();
    for i in 1..raw.len().saturating_sub(1) {
        let (Some((fit, window)), Some((left, _)), Some((right, _))) =
            (&raw[i], &raw[i - 1], &raw[i + 1])
        else {
            continue;
        };
        let b = window.1;
        let c = fit.coeff.abs();
        let mut score = fit.rate_unc * b + fit.coeff_unc / c;
        for n in [left, right] {
            score = score.max((n.rate - fit.rate).abs() * b + (n.coeff - fit.coeff).abs() / c);
        }
        if score.is_finite() {
            out.push(Candidate {
                fit: *fit,
                window: *window,
                score,
            });
        }
    }
    out
}

/// Newton step on `F(r) = min_c Σ (y − c e^{−rt})²`, then the optimal `c`.
fn refine_rate<T: Real>(t: &[T], y: &[T], rate: T) -> Option<(T, T)> {
    let amp = |r: T| {
        let (mut ye, mut ee) = (T::zero(), T::zero());
        for (&ti, &yi) in t.iter().zip(y) {
            let e = (-r * ti).exp();
            ye = ye + yi * e;
            ee = ee + e * e;
        }
        (ye, ee)
    };
    let objective = |r: T| {
        let (ye, ee) = amp(r);
        -(ye * ye) / ee
    };
    let h = rate * lit(1e-4);
    let (fm, f0, fp) = (objective(rate - h), objective(rate), objective(rate + h));
    let d1 = (fp - fm) / (h + h);
    let d2 = (fp - f0 - f0 + fm) / (h * h);
    let r = if d2 > T::zero() { rate - d1 / d2 } else { rate };
    if !(r.is_finite() && r > T::zero()) || (r - rate).abs() > rate * lit(0.1) {
        return None;
    }
    let (ye, ee) = amp(r);
    Some((r, ye / ee))
}

/// Numeric decomposition over `support` using windowed tail fits.
///
/// Rates must grow by at least `rate_merge_tol` per step. A trusted fit of
/// the residual at or below the last extracted rate whose amplitude exceeds
/// `accept_score` relative to that term ends the run with
/// [`TerminationReason::RateCollision`]; the offending fit is reported in
/// `collision`.
pub fn decompose_numeric<T: Real>(
    s: &SignalSource<T>,
    support: (T, T),
    cfg: &TailFitConfig,
    stop: &StoppingPolicy,
) -> Result<DecompositionResult<T>> {
    cfg.validate()?;
    stop.validate()?;
    let (lo, hi) = support;
    if !(hi > lo && lo >= T::zero() && hi.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "support ({lo}, {hi}) must satisfy 0 ≤ t_lo < t_hi < ∞"
        )));
    }
    let times = s.grid(lo, hi, cfg.probe_points);
    if times.len() < 2 {
        return Err(Error::SignalVanished {
            found: times.len(),
            needed: cfg.min_window_points,
        });
    }
    let (tail_lo, tail_hi) = tail_window(support, cfg);
    let tail_sup = |v: &[T]| {
        times
            .iter()
            .zip(v)
            .filter(|(&t, _)| t >= tail_lo && t <= tail_hi)
            .fold(T::zero(), |m, (_, x)| m.max(x.abs()))
    };

    let mut residual = s.clone();
    let mut values = residual.sample(&times)?;
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidSignal(format!(
            "non-finite value at t = {}",
            times[i]
        )));
    }
    let floor = sup_abs(&values) * lit(stop.residual_floor);
    let merge_tol = lit::<T>(stop.rate_merge_tol);
    let accept = lit::<T>(stop.accept_score);
    let mut terms: Vec<Term<T>> = Vec::new();
    let mut diagnostics = Vec::new();
    let mut collision = None;

    let reason = loop {
        if sup_abs(&values) < floor || sup_abs(&values).is_zero() {
            break if terms.is_empty() {
                TerminationReason::SignalVanished
            } else {
                TerminationReason::ResidualFloor
            };
        }
        if terms.len() >= stop.max_terms {
            break TerminationReason::MaxTerms;
        }
        let prev = terms.last().map(|t| (t.rate, t.coeff));
        let (fresh, repeated): (Vec<_>, Vec<_>) = scan_windows(&times, &values, support, cfg, stop)
            .into_iter()
            .filter(|c| c.fit.rate > T::zero() && c.score <= accept)
            .partition(|c| prev.map_or(true, |(r, _)| c.fit.rate >= r + merge_tol));
        // A trusted fit at or below the last extracted rate means that term
        // absorbed part of its neighbour; its weight is measured against the
        // extracted term at the end of the candidate window.
        let clash = repeated
            .into_iter()
            .filter_map(|c| {
                let (r, a) = prev?;
                let b = c.window.1;
                let weight = (c.fit.coeff * (-c.fit.rate * b).exp()).abs()
                    / (a * (-r * b).exp()).abs();
                (weight > accept).then_some((weight, c))
            })
            .max_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        if let Some((_, c)) = clash {
            collision = Some(Term::new(c.fit.rate, c.fit.coeff));
            break TerminationReason::RateCollision;
        }
        let Some(best) = fresh.iter().min_by(|a, b| a.score.partial_cmp(&b.score).unwrap())
        else {
            break TerminationReason::SignalVanished;
        };
        let rate_spread = fresh
            .iter()
            .filter(|c| c.window.1 > best.window.1)
            .fold(T::zero(), |m, c| m.max((c.fit.rate - best.fit.rate).abs()));

        let (mut rate, mut coeff) = (best.fit.rate, best.fit.coeff);
        if stop.refine_rates {
            let i0 = times.partition_point(|&t| t < best.window.0);
            let i1 = times.partition_point(|&t| t <= best.window.1);
            if let Some((r, c)) = refine_rate(&times[i0..i1], &values[i0..i1], rate) {
                if prev.map_or(true, |(p, _)| r >= p + merge_tol) {
                    rate = r;
                    coeff = c;
                }
            }
        }
        residual = residual.subtract_term(rate, coeff)?;
        values = residual.sample(&times)?;
        let term = Term::new(rate, coeff);
        let i0 = times.partition_point(|&t| t < best.window.0);
        let i1 = times.partition_point(|&t| t <= best.window.1);
        let term_sup = times[i0..i1]
            .iter()
            .fold(T::zero(), |m, &t| m.max(term.evaluate(t).abs()));
        let window_residual_ratio = sup_abs(&values[i0..i1]) / term_sup;
        terms.push(term);
        diagnostics.push(TermDiagnostics {
            mode: DecompositionMode::Numeric,
            rate_residual_rms: best.fit.residual_rms,
            window: Some(best.window),
            rate_uncertainty: best.fit.rate_unc,
            coeff_uncertainty: best.fit.coeff_unc,
            score: best.score,
            tail_residual_sup: tail_sup(&values),
            window_residual_ratio,
            rate_spread,
            low_confidence: best.score > accept * lit(1e-2)
                || window_residual_ratio > accept
                || rate_spread > merge_tol,
        });
    };

    Ok(DecompositionResult {
        terms,
        diagnostics,
        terminal_residual_norm: tail_sup(&values),
        termination_reason: reason,
        collision,
    })
}

/// Configuration used for noiseless, densely sampled inputs.
pub fn accurate_tail_config() -> TailFitConfig {
    TailFitConfig {
        fit_order: FitOrder::Richardson2,
        ..TailFitConfig::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synthesize_samples, TimeGrid};
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn sym(pairs: &[(f64, f64)]) -> SymbolicTransient<f64> {
        SymbolicTransient::from_pairs(pairs).unwrap()
    }

    #[test]
    fn exact_mode_returns_input_terms() {
        let s = sym(&[(1.0, 2.0), (2.0, 3.0)]);
        let r = decompose_exact(&s);
        assert_eq!(r.terms, s.terms());
        assert_eq!(r.terminal_residual_norm, 0.0);
        assert_eq!(r.termination_reason, TerminationReason::SignalVanished);
        assert_eq!(reconstruct(&r), s);
    }

    #[test]
    fn exact_mode_on_empty_and_zero_coefficients() {
        let r = decompose_exact(&SymbolicTransient::<f64>::zero());
        assert!(r.terms.is_empty());
        assert_eq!(r.termination_reason, TerminationReason::SignalVanished);
        assert_eq!(reconstruct(&r), SymbolicTransient::zero());
        let r = decompose_exact(&sym(&[(1.0, 0.0), (2.0, 3.0)]));
        assert_eq!(r.terms, vec![Term::new(2.0, 3.0)]);
    }

    #[test]
    fn exact_mode_over_rationals() {
        let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        let s = SymbolicTransient::new(vec![
            Term::new(q(1, 7), q(-3, 5)),
            Term::new(q(2, 7), q(9, 4)),
            Term::new(q(11, 3), q(1, 1000)),
        ])
        .unwrap();
        let r = decompose_exact(&s);
        assert_eq!(reconstruct(&r), s);
    }

    fn sampled(pairs: &[(f64, f64)], horizon: f64, count: usize) -> SignalSource<f64> {
        synthesize_samples(&sym(pairs), &TimeGrid::spanning(horizon, count), 0.0, 0)
            .unwrap()
            .into()
    }

    #[test]
    fn numeric_two_terms() {
        let s = sampled(&[(1.0, 2.0), (2.0, 3.0)], 40.0, 4001);
        let r = decompose_numeric(&s, (0.0, 40.0), &accurate_tail_config(), &StoppingPolicy::default())
            .unwrap();
        assert!(r.terms.len() >= 2, "{r:?}");
        for (got, want) in r.terms.iter().zip([(1.0, 2.0), (2.0, 3.0)]) {
            assert!((got.rate - want.0).abs() < 1e-3, "{got:?}");
            assert!((got.coeff - want.1).abs() < 1e-3, "{got:?}");
        }
        let json = r.to_json();
        assert!(json["terms"].is_array());
        assert!(json["diagnostics"]["termination_reason"].is_string());
    }

    #[test]
    fn numeric_single_term_hits_floor() {
        let s = sampled(&[(1.0, 1.0)], 40.0, 4001);
        let r = decompose_numeric(&s, (0.0, 40.0), &accurate_tail_config(), &StoppingPolicy::default())
            .unwrap();
        assert_eq!(r.terms.len(), 1);
        assert!((r.terms[0].rate - 1.0).abs() < 1e-9);
        assert!((r.terms[0].coeff - 1.0).abs() < 1e-9);
        assert_eq!(r.termination_reason, TerminationReason::ResidualFloor);
    }

    #[test]
    fn numeric_zero_signal_vanishes() {
        let s = sampled(&[], 10.0, 101);
        let r = decompose_numeric(&s, (0.0, 10.0), &TailFitConfig::default(), &StoppingPolicy::default())
            .unwrap();
        assert!(r.terms.is_empty());
        assert_eq!(r.termination_reason, TerminationReason::SignalVanished);
    }

    #[test]
    fn max_terms_stops_early() {
        let s = sampled(&[(1.0, 2.0), (2.0, 3.0)], 40.0, 4001);
        let stop = StoppingPolicy {
            max_terms: 1,
            ..StoppingPolicy::default()
        };
        let r = decompose_numeric(&s, (0.0, 40.0), &accurate_tail_config(), &stop).unwrap();
        assert_eq!(r.terms.len(), 1);
        assert_eq!(r.termination_reason, TerminationReason::MaxTerms);
    }

    #[test]
    fn refined_rates_stay_accurate() {
        let s = sampled(&[(1.0, 2.0), (2.0, 3.0)], 40.0, 4001);
        let stop = StoppingPolicy {
            refine_rates: true,
            ..StoppingPolicy::default()
        };
        let r = decompose_numeric(&s, (0.0, 40.0), &accurate_tail_config(), &stop).unwrap();
        assert!((r.terms[0].rate - 1.0).abs() < 1e-3);
        assert!((r.terms[1].rate - 2.0).abs() < 1e-3);
    }

    #[test]
    fn close_rates_merge_with_a_flag() {
        // the second term contaminates any window on [0, 20] by e^{-0.05 t}
        let s = sampled(&[(1.0, 2.0), (1.05, 3.0)], 20.0, 2001);
        for cfg in [TailFitConfig::default(), accurate_tail_config()] {
            let r = decompose_numeric(&s, (0.0, 20.0), &cfg, &StoppingPolicy::default()).unwrap();
            let flagged = r.diagnostics.iter().any(|d| d.low_confidence);
            assert!(
                r.termination_reason == TerminationReason::RateCollision || flagged,
                "{r:?}"
            );
        }
    }

    #[test]
    fn clean_extraction_is_not_flagged() {
        let s = sampled(&[(1.0, 2.0), (2.0, 3.0)], 40.0, 4001);
        let r = decompose_numeric(&s, (0.0, 40.0), &accurate_tail_config(), &StoppingPolicy::default())
            .unwrap();
        assert!(r.diagnostics.iter().all(|d| !d.low_confidence), "{r:?}");
    }

    #[test]
    fn policy_validation() {
        assert!(StoppingPolicy::default().validate().is_ok());
        let p = StoppingPolicy {
            candidate_windows: 2,
            ..StoppingPolicy::default()
        };
        assert!(p.validate().is_err());
    }
}
