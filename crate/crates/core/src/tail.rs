//! Finite-horizon estimates of the two limits at infinity:
//! `λ₁ = lim −ln|x(t)|/t` and `α₁ = lim e^{λ₁t} x(t)`.
//!
//! Both are read off a tail window `[t_hi − f·(t_hi − t_lo), t_hi]`. The
//! rate comes from a least-squares line through `(t, ln|x|)`, which is exact
//! for a single exponential and cancels the `ln|α₁|/t` bias of the raw
//! sequence. The Richardson orders split the window into `2k + 1` equal
//! sub-windows and accelerate the sub-window slopes (and the sub-window means
//! of `e^{λt}x`) with `k` rounds of Aitken's Δ² process. The contamination
//! from the next term decays geometrically from one sub-window to the next,
//! so each round removes one exponential component of the error without
//! needing to know the rate gap.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use crate::signal::SignalSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitOrder {
    /// Plain least-squares slope over the whole window.
    SlopeFit,
    /// One Aitken round over three sub-windows.
    #[serde(rename = "richardson_1")]
    Richardson1,
    /// Two Aitken rounds over five sub-windows.
    #[serde(rename = "richardson_2")]
    Richardson2,
}

impl FitOrder {
    pub fn rounds(self) -> usize {
        match self {
            FitOrder::SlopeFit => 0,
            FitOrder::Richardson1 => 1,
            FitOrder::Richardson2 => 2,
        }
    }

    fn sub_windows(self) -> usize {
        2 * self.rounds() + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailFitConfig {
    /// Fraction of the support used as the tail window, in `(0, 1)`.
    pub window_fraction: f64,
    pub min_window_points: usize,
    pub fit_order: FitOrder,
    /// Samples below `abs_floor × max|x|` over the window are skipped.
    pub abs_floor: f64,
    pub diverge_factor: f64,
    /// Grid size used to probe symbolic and evaluator sources.
    pub probe_points: usize,
}

impl Default for TailFitConfig {
    fn default() -> Self {
        Self {
            window_fraction: 0.5,
            min_window_points: 8,
            fit_order: FitOrder::SlopeFit,
            abs_floor: 1e-13,
            diverge_factor: 10.0,
            probe_points: 4000,
        }
    }
}

impl TailFitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.window_fraction > 0.0 && self.window_fraction < 1.0) {
            return bad(format!(
                "window_fraction {} must lie in (0, 1)",
                self.window_fraction
            ));
        }
        if self.min_window_points < 4 {
            return bad(format!(
                "min_window_points {} must be at least 4",
                self.min_window_points
            ));
        }
        if !(self.abs_floor > 0.0) {
            return bad(format!("abs_floor {} must be positive", self.abs_floor));
        }
        if !(self.diverge_factor > 1.0) {
            return bad(format!(
                "diverge_factor {} must exceed 1",
                self.diverge_factor
            ));
        }
        if self.probe_points < self.min_window_points {
            return bad(format!(
                "probe_points {} is below min_window_points {}",
                self.probe_points, self.min_window_points
            ));
        }
        Ok(())
    }
}

/// Decay-rate estimate from a tail window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate<T> {
    pub rate: T,
    /// Estimate of `ln|α|`.
    pub intercept: T,
    pub window: (T, T),
    /// RMS of `ln|x| − (intercept − rate·t)` over the window.
    pub residual_rms: T,
    /// Spread between sub-window estimates (last Aitken correction for the
    /// Richardson orders, half-window slope difference for the plain fit).
    pub uncertainty: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEstimate<T> {
    pub coeff: T,
    pub window: (T, T),
    pub uncertainty: T,
}

/// Rate and coefficient fitted jointly on one window of samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct WindowFit<T> {
    pub rate: T,
    pub coeff: T,
    pub rate_unc: T,
    pub coeff_unc: T,
    pub residual_rms: T,
}

/// Splits `0..n` into `k` contiguous ranges whose lengths differ by at most one.
pub(crate) fn split_ranges(n: usize, k: usize) -> Vec<std::ops::Range<usize>> {
    let (q, r) = (n / k, n % k);
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = q + usize::from(i < r);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// Least-squares `(slope, intercept)` of `y` against `t`.
pub(crate) fn line_fit<T: Real>(t: &[T], y: &[T]) -> Option<(T, T)> {
    if t.len() < 2 {
        return None;
    }
    let n = T::from_usize(t.len()).unwrap();
    let tm = t.iter().copied().sum::<T>() / n;
    let ym = y.iter().copied().sum::<T>() / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (&ti, &yi) in t.iter().zip(y) {
        sxy = sxy + (ti - tm) * (yi - ym);
        sxx = sxx + (ti - tm) * (ti - tm);
    }
    if sxx <= T::zero() {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, ym - slope * tm))
}

/// Iterated Aitken Δ² on `seq`; returns the final value and the size of
/// the last correction.
pub(crate) fn aitken_limit<T: Real>(seq: &[T]) -> (T, T) {
    let mut cur = seq.to_vec();
    let mut prev_last = *cur.last().expect("non-empty sequence");
    let mut correction = T::zero();
    while cur.len() >= 3 {
        let scale = cur.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let guard = T::epsilon() * lit(64.0) * scale;
        let next: Vec<T> = cur
            .windows(3)
            .map(|w| {
                let d1 = w[1] - w[0];
                let d2 = w[2] - w[1];
                let den = d2 - d1;
                if den.abs() <= guard {
                    w[2]
                } else {
                    w[2] - d2 * d2 / den
                }
            })
            .collect();
        let last = *next.last().unwrap();
        correction = (last - prev_last).abs();
        prev_last = last;
        cur = next;
    }
    (prev_last, correction)
}

fn mean<T: Real>(v: impl Iterator<Item = T>) -> T {
    let mut n = 0usize;
    let mut acc = T::zero();
    for x in v {
        acc = acc + x;
        n += 1;
    }
    acc / T::from_usize(n.max(1)).unwrap()
}

/// Joint fit on samples with nonzero `y`; `None` when the window is too
/// short for the requested order or the data is degenerate.
pub(crate) fn fit_window<T: Real>(t: &[T], y: &[T], order: FitOrder) -> Option<WindowFit<T>> {
    let n = t.len();
    let logs: Vec<T> = y.iter().map(|v| v.abs().ln()).collect();
    if logs.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let (rate, rate_unc) = match order {
        FitOrder::SlopeFit => {
            if n < 4 {
                return None;
            }
            let (slope, _) = line_fit(t, &logs)?;
            let h = split_ranges(n, 2);
            let (s0, _) = line_fit(&t[h[0].clone()], &logs[h[0].clone()])?;
            let (s1, _) = line_fit(&t[h[1].clone()], &logs[h[1].clone()])?;
            (-slope, (s1 - s0).abs())
        }
        _ => {
            let k = order.sub_windows();
            if n < 2 * k {
                return None;
            }
            let slopes = split_ranges(n, k)
                .into_iter()
                .map(|r| line_fit(&t[r.clone()], &logs[r]).map(|(s, _)| -s))
                .collect::<Option<Vec<T>>>()?;
            aitken_limit(&slopes)
        }
    };
    if !rate.is_finite() {
        return None;
    }
    let scaled: Vec<T> = t
        .iter()
        .zip(y)
        .map(|(&ti, &yi)| (rate * ti).exp() * yi)
        .collect();
    let (coeff, coeff_unc) = match order {
        FitOrder::SlopeFit => {
            let h = split_ranges(n, 2);
            let m0 = mean(scaled[h[0].clone()].iter().copied());
            let m1 = mean(scaled[h[1].clone()].iter().copied());
            (mean(scaled.iter().copied()), (m1 - m0).abs())
        }
        _ => {
            let means: Vec<T> = split_ranges(n, order.sub_windows())
                .into_iter()
                .map(|r| mean(scaled[r].iter().copied()))
                .collect();
            aitken_limit(&means)
        }
    };
    if !coeff.is_finite() || coeff.is_zero() {
        return None;
    }
    let intercept = coeff.abs().ln();
    let ss = t
        .iter()
        .zip(&logs)
        .map(|(&ti, &li)| {
            let d = li - (intercept - rate * ti);
            d * d
        })
        .sum::<T>();
    Some(WindowFit {
        rate,
        coeff,
        rate_unc,
        coeff_unc,
        residual_rms: (ss / T::from_usize(n).unwrap()).sqrt(),
    })
}

/// Tail window of `support` under `cfg`.
pub fn tail_window<T: Real>(support: (T, T), cfg: &TailFitConfig) -> (T, T) {
    let (lo, hi) = support;
    (hi - lit::<T>(cfg.window_fraction) * (hi - lo), hi)
}

/// Samples on the tail window with the vanishing floor applied.
fn tail_samples<T: Real>(
    s: &SignalSource<T>,
    support: (T, T),
    cfg: &TailFitConfig,
) -> Result<(Vec<T>, Vec<T>, (T, T))> {
    cfg.validate()?;
    let (lo, hi) = support;
    if !(hi > lo && lo >= T::zero()) {
        return Err(Error::InvalidConfig(format!(
            "support ({lo}, {hi}) must satisfy 0 ≤ t_lo < t_hi"
        )));
    }
    let window = tail_window(support, cfg);
    let times = s.grid(window.0, window.1, cfg.probe_points);
    let values = s.sample(&times)?;
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidSignal(format!(
            "non-finite value at t = {}",
            times[i]
        )));
    }
    let peak = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let floor = (peak * lit(cfg.abs_floor)).max(T::min_positive_value());
    let (t, y): (Vec<T>, Vec<T>) = times
        .into_iter()
        .zip(values)
        .filter(|(_, v)| v.abs() >= floor)
        .unzip();
    let needed = cfg
        .min_window_points
        .max(2 * cfg.fit_order.sub_windows())
        .max(4);
    if t.len() < needed {
        return Err(Error::SignalVanished {
            found: t.len(),
            needed,
        });
    }
    Ok((t, y, window))
}

/// Laplace-principle rate estimate on the tail window.
pub fn estimate_rate<T: Real>(
    s: &SignalSource<T>,
    support: (T, T),
    cfg: &TailFitConfig,
) -> Result<RateEstimate<T>> {
    let (t, y, window) = tail_samples(s, support, cfg)?;
    let logs: Vec<T> = y.iter().map(|v| v.abs().ln()).collect();
    let (slope, _) = line_fit(&t, &logs).ok_or(Error::SignalVanished {
        found: t.len(),
        needed: 2,
    })?;
    if slope >= T::zero() {
        return Err(Error::NonDecaying {
            slope: slope.to_f64().unwrap_or(f64::NAN),
        });
    }
    let fit = fit_window(&t, &y, cfg.fit_order).ok_or(Error::SignalVanished {
        found: t.len(),
        needed: 2 * cfg.fit_order.sub_windows(),
    })?;
    if fit.rate <= T::zero() {
        return Err(Error::NonDecaying {
            slope: (-fit.rate).to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(RateEstimate {
        rate: fit.rate,
        intercept: fit.coeff.abs().ln(),
        window,
        residual_rms: fit.residual_rms,
        uncertainty: fit.rate_unc,
    })
}

/// Coefficient-isolation estimate `lim e^{rate·t} x(t)` on the tail window.
pub fn estimate_coefficient<T: Real>(
    s: &SignalSource<T>,
    rate: T,
    support: (T, T),
    cfg: &TailFitConfig,
) -> Result<T> {
    estimate_coefficient_detailed(s, rate, support, cfg).map(|c| c.coeff)
}

pub fn estimate_coefficient_detailed<T: Real>(
    s: &SignalSource<T>,
    rate: T,
    support: (T, T),
    cfg: &TailFitConfig,
) -> Result<CoefficientEstimate<T>> {
    let (t, y, window) = tail_samples(s, support, cfg)?;
    let scaled: Vec<T> = t
        .iter()
        .zip(&y)
        .map(|(&ti, &yi)| (rate * ti).exp() * yi)
        .collect();
    let k = cfg.fit_order.sub_windows().max(3);
    let parts = split_ranges(scaled.len(), k);
    let first = mean(scaled[parts[0].clone()].iter().map(|v| v.abs()));
    let last = mean(scaled[parts[k - 1].clone()].iter().map(|v| v.abs()));
    if !last.is_finite() || last > first * lit(cfg.diverge_factor) {
        return Err(Error::Diverging {
            growth: (last / first).to_f64().unwrap_or(f64::INFINITY),
        });
    }
    let (coeff, uncertainty) = match cfg.fit_order {
        FitOrder::SlopeFit => {
            let h = split_ranges(scaled.len(), 2);
            let m0 = mean(scaled[h[0].clone()].iter().copied());
            let m1 = mean(scaled[h[1].clone()].iter().copied());
            (mean(scaled.iter().copied()), (m1 - m0).abs())
        }
        order => {
            let means: Vec<T> = split_ranges(scaled.len(), order.sub_windows())
                .into_iter()
                .map(|r| mean(scaled[r].iter().copied()))
                .collect();
            aitken_limit(&means)
        }
    };
    Ok(CoefficientEstimate {
        coeff,
        window,
        uncertainty,
    })
}

/// Raw sequence `−ln|x(t)|/t` on the probe grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSequence<T> {
    pub points: Vec<(T, T)>,
    /// Times where the entry was non-finite (`t = 0` or `x(t) = 0`).
    pub skipped: Vec<T>,
}

pub fn rate_sequence<T: Real>(
    s: &SignalSource<T>,
    support: (T, T),
    cfg: &TailFitConfig,
) -> Result<RateSequence<T>> {
    let times = s.grid(support.0, support.1, cfg.probe_points);
    let mut points = Vec::with_capacity(times.len());
    let mut skipped = Vec::new();
    for t in times {
        let v = -s.evaluate(t)?.abs().ln() / t;
        if t > T::zero() && v.is_finite() {
            points.push((t, v));
        } else {
            skipped.push(t);
        }
    }
    Ok(RateSequence { points, skipped })
}

/// Writes `t,value` rows.
pub fn write_rate_sequence_csv<W: Write, T: Real>(w: W, seq: &RateSequence<T>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["t", "value"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for (t, v) in &seq.points {
        wtr.write_record([t.to_string(), v.to_string()])
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::SymbolicTransient;

    fn src(pairs: &[(f64, f64)]) -> SignalSource<f64> {
        SymbolicTransient::from_pairs(pairs).unwrap().into()
    }

    #[test]
    fn single_exponential_rate_is_exact() {
        let cfg = TailFitConfig::default();
        let est = estimate_rate(&src(&[(3.0, 1.0)]), (0.0, 20.0), &cfg).unwrap();
        assert!((est.rate - 3.0).abs() < 1e-9);
        assert!(est.intercept.abs() < 1e-9);
        assert_eq!(est.window, (10.0, 20.0));
    }

    #[test]
    fn two_term_rate_and_coefficient() {
        let s = src(&[(1.0, 2.0), (2.0, 3.0)]);
        let cfg = TailFitConfig::default();
        // contamination at the window start: (3/2)e^{-20}
        let est = estimate_rate(&s, (0.0, 40.0), &cfg).unwrap();
        assert!((est.rate - 1.0).abs() < 1e-6);
        let c = estimate_coefficient(&s, 1.0, (0.0, 40.0), &cfg).unwrap();
        assert!((c - 2.0).abs() < 1e-6);
    }

    #[test]
    fn coefficient_of_pure_exponential() {
        let c = estimate_coefficient(
            &src(&[(2.0, 5.0)]),
            2.0,
            (0.0, 20.0),
            &TailFitConfig::default(),
        )
        .unwrap();
        assert!((c - 5.0).abs() < 1e-10);
    }

    #[test]
    fn overestimated_rate_diverges() {
        let r = estimate_coefficient(
            &src(&[(1.0, 1.0)]),
            2.0,
            (0.0, 20.0),
            &TailFitConfig::default(),
        );
        assert!(matches!(r, Err(Error::Diverging { .. })));
    }

    #[test]
    fn zero_signal_vanishes() {
        let s = SignalSource::Symbolic(SymbolicTransient::<f64>::zero());
        let cfg = TailFitConfig::default();
        assert!(matches!(
            estimate_rate(&s, (0.0, 10.0), &cfg),
            Err(Error::SignalVanished { .. })
        ));
        assert!(matches!(
            estimate_coefficient(&s, 1.0, (0.0, 10.0), &cfg),
            Err(Error::SignalVanished { .. })
        ));
    }

    #[test]
    fn growing_signal_is_non_decaying() {
        let s = SignalSource::evaluator(|t: f64| t.exp());
        let r = estimate_rate(&s, (0.0, 10.0), &TailFitConfig::default());
        assert!(matches!(r, Err(Error::NonDecaying { .. })));
    }

    #[test]
    fn richardson_beats_plain_fit_on_close_rates() {
        let s = src(&[(1.0, 2.0), (1.6, -3.0)]);
        let mut cfg = TailFitConfig::default();
        let plain = estimate_rate(&s, (0.0, 20.0), &cfg).unwrap();
        cfg.fit_order = FitOrder::Richardson2;
        let acc = estimate_rate(&s, (0.0, 20.0), &cfg).unwrap();
        assert!((acc.rate - 1.0).abs() < (plain.rate - 1.0).abs() / 10.0);
    }

    #[test]
    fn rate_sequence_closed_forms() {
        let cfg = TailFitConfig {
            probe_points: 11,
            ..TailFitConfig::default()
        };
        let seq = rate_sequence(&src(&[(1.0, 1.0)]), (0.0, 10.0), &cfg).unwrap();
        assert_eq!(seq.skipped, vec![0.0]);
        assert!(seq.points.iter().all(|&(_, v)| (v - 1.0).abs() < 1e-15));

        let seq = rate_sequence(&src(&[(1.0, 2.0)]), (2f64.ln(), 1.0), &cfg).unwrap();
        assert!(seq.points[0].1.abs() < 1e-15);

        let seq = rate_sequence(&src(&[(1.0, 2.0), (2.0, 3.0)]), (0.0, 10.0), &cfg).unwrap();
        let (t, v) = *seq.points.last().unwrap();
        assert_eq!(t, 10.0);
        let oracle = 1.0 - (2.0 + 3.0 * (-10f64).exp()).ln() / 10.0;
        assert!((v - oracle).abs() < 1e-14);
    }

    #[test]
    fn rate_sequence_csv() {
        let cfg = TailFitConfig {
            probe_points: 3,
            ..TailFitConfig::default()
        };
        let seq = rate_sequence(&src(&[(1.0, 1.0)]), (0.0, 2.0), &cfg).unwrap();
        let mut buf = Vec::new();
        write_rate_sequence_csv(&mut buf, &seq).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,value\n1,1\n2,1\n");
    }

    #[test]
    fn aitken_removes_geometric_error() {
        let seq: Vec<f64> = (0..5).map(|i| 1.0 + 0.3 * 0.5f64.powi(i)).collect();
        let (v, _) = aitken_limit(&seq);
        assert!((v - 1.0).abs() < 1e-14);
        let (v, c) = aitken_limit(&[2.0, 2.0, 2.0]);
        assert_eq!((v, c), (2.0, 0.0));
    }

    #[test]
    fn split_ranges_cover_everything() {
        let r = split_ranges(11, 3);
        assert_eq!(r, vec![0..4, 4..8, 8..11]);
    }

    #[test]
    fn config_validation() {
        let mut c = TailFitConfig::default();
        assert!(c.validate().is_ok());
        c.window_fraction = 1.0;
        assert!(c.validate().is_err());
        let c = TailFitConfig {
            min_window_points: 3,
            ..TailFitConfig::default()
        };
        assert!(c.validate().is_err());
        let c: TailFitConfig = serde_json::from_str(r#"{"fit_order":"richardson_2"}"#).unwrap();
        assert_eq!(c.fit_order, FitOrder::Richardson2);
        assert_eq!(c.window_fraction, 0.5);
    }
}
