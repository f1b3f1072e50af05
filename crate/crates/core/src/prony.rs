//! Classical least-squares Prony fitting of uniform samples.
//!
//! Uniform samples `x_i = Σ_j A_j z_j^i` satisfy a linear recurrence whose
//! characteristic polynomial has the poles `z_j` as roots. The fit solves
//! the linear-prediction system for that polynomial, roots it through the
//! companion matrix, and recovers amplitudes from the Vandermonde system
//! `V[i][j] = z_j^i`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PronyOptions {
    /// Prediction systems with `σ_min/σ_max` below this are treated as singular.
    pub rank_tol: f64,
    /// Roots with `|Im z| ≤ imag_tol·max(1, |z|)` are treated as real.
    pub imag_tol: f64,
}

impl Default for PronyOptions {
    fn default() -> Self {
        Self {
            rank_tol: 1e-11,
            imag_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PronyFlag {
    /// The prediction system was singular at the requested order.
    OrderReduced { requested: usize, used: usize },
    /// Complex-conjugate roots excluded from the model.
    ComplexRoots { count: usize },
    /// Real roots outside `(0, 1)` excluded from the model.
    OutOfRangeRoots { count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PronyModel {
    /// Order of the prediction system actually solved.
    pub order: usize,
    /// Kept poles, descending (so rates ascend).
    pub poles: Vec<f64>,
    pub rates: Vec<f64>,
    /// Amplitudes referred to `t = 0`.
    pub amplitudes: Vec<f64>,
    pub vandermonde_condition: f64,
    pub step: f64,
    /// Every characteristic root as `(re, im)`.
    pub roots: Vec<(f64, f64)>,
    pub flags: Vec<PronyFlag>,
}

impl PronyModel {
    pub fn evaluate(&self, t: f64) -> f64 {
        self.rates
            .iter()
            .zip(&self.amplitudes)
            .map(|(r, a)| a * (-r * t).exp())
            .sum()
    }
}

pub fn prony_fit(s: &SampledSignal<f64>, order: usize) -> Result<PronyModel> {
    prony_fit_with(s, order, &PronyOptions::default())
}

pub fn prony_fit_with(s: &SampledSignal<f64>, order: usize, opts: &PronyOptions) -> Result<PronyModel> {
    let step = s.uniform_step().ok_or_else(|| {
        Error::InvalidSignal("Prony fitting needs uniformly spaced samples".into())
    })?;
    if order == 0 {
        return Err(Error::InvalidConfig("Prony order must be positive".into()));
    }
    let x = s.values();
    if x.len() < 2 * order {
        return Err(Error::InvalidSignal(format!(
            "{} samples cannot support order {order} (need {})",
            x.len(),
            2 * order
        )));
    }

    let mut p = order;
    let predictor = loop {
        match linear_prediction(x, p, opts.rank_tol) {
            Some(a) => break a,
            None if p > 1 => p -= 1,
            None => return Err(Error::RankDeficient { order: p }),
        }
    };
    let mut flags = Vec::new();
    if p < order {
        flags.push(PronyFlag::OrderReduced {
            requested: order,
            used: p,
        });
    }

    let roots = characteristic_roots(&predictor);
    let mut poles = Vec::new();
    let (mut complex, mut out_of_range) = (0, 0);
    for &(re, im) in &roots {
        if im.abs() > opts.imag_tol * re.hypot(im).max(1.0) {
            complex += 1;
        } else if re > 0.0 && re < 1.0 {
            poles.push(re);
        } else {
            out_of_range += 1;
        }
    }
    if complex > 0 {
        flags.push(PronyFlag::ComplexRoots { count: complex });
    }
    if out_of_range > 0 {
        flags.push(PronyFlag::OutOfRangeRoots {
            count: out_of_range,
        });
    }
    poles.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let (amplitudes, condition) = if poles.is_empty() {
        (Vec::new(), f64::NAN)
    } else {
        let v = vandermonde(&poles, x.len());
        let cond = condition_number(&v);
        let amp = least_squares(v, DVector::from_column_slice(x)).ok_or_else(|| {
            Error::InvalidSignal("Vandermonde solve failed: singular system".into())
        })?;
        (amp, cond)
    };

    let t0 = s.times()[0];
    let rates: Vec<f64> = poles.iter().map(|z| -z.ln() / step).collect();
    let amplitudes = amplitudes
        .into_iter()
        .zip(&rates)
        .map(|(a, r)| a * (r * t0).exp())
        .collect();
    Ok(PronyModel {
        order: p,
        poles,
        rates,
        amplitudes,
        vandermonde_condition: condition,
        step,
        roots,
        flags,
    })
}

/// Least-squares `a` with `x_{i+p} + Σ_k a_k x_{i+p−k} = 0`; `None` when
/// the system is numerically singular.
fn linear_prediction(x: &[f64], p: usize, rank_tol: f64) -> Option<Vec<f64>> {
    let rows = x.len() - p;
    let a = DMatrix::from_fn(rows, p, |i, k| x[i + p - 1 - k]);
    let b = DVector::from_fn(rows, |i, _| -x[i + p]);
    let sv = a.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if !(smax > 0.0) || smin / smax < rank_tol {
        return None;
    }
    least_squares(a, b)
}

/// Householder QR least squares for a full-column-rank `a`.
// nalgebra's SVD with singular vectors loses accuracy on some of these
// graded systems (reconstruction error ~1e-5), so solves go through QR.
fn least_squares(a: DMatrix<f64>, b: DVector<f64>) -> Option<Vec<f64>> {
    let qr = a.qr();
    let rhs = qr.q().transpose() * b;
    qr.r()
        .solve_upper_triangular(&rhs)
        .map(|v| v.iter().copied().collect())
}

/// Roots of `z^p + a₁z^{p−1} + ⋯ + a_p` as eigenvalues of the companion matrix.
fn characteristic_roots(a: &[f64]) -> Vec<(f64, f64)> {
    let p = a.len();
    let mut c = DMatrix::<f64>::zeros(p, p);
    for k in 0..p {
        c[(0, k)] = -a[k];
    }
    for i in 1..p {
        c[(i, i - 1)] = 1.0;
    }
    let mut roots: Vec<(f64, f64)> = c
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .collect();
    roots.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(y.1.partial_cmp(&x.1).unwrap()));
    roots
}

fn vandermonde(poles: &[f64], rows: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, poles.len(), |i, j| poles[j].powi(i as i32))
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    sv.max() / sv.min()
}

/// Condition number of `V[i][j] = z_j^i`, `i < rows`.
pub fn pole_vandermonde_condition(poles: &[f64], rows: usize) -> f64 {
    condition_number(&vandermonde(poles, rows))
}

/// Condition number of the Vandermonde matrix for `rates` on uniform `times`,
/// with poles `e^{-rate·Δt}`.
pub fn vandermonde_condition(rates: &[f64], times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::InvalidSignal("need at least two sample times".into()));
    }
    let grid = SampledSignal::new(times.to_vec(), vec![0.0; times.len()])?;
    let step = grid
        .uniform_step()
        .ok_or_else(|| Error::InvalidSignal("times are not uniformly spaced".into()))?;
    let poles: Vec<f64> = rates.iter().map(|r| (-r * step).exp()).collect();
    Ok(pole_vandermonde_condition(&poles, times.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synthesize_samples, SymbolicTransient, TimeGrid};

    fn samples(pairs: &[(f64, f64)], step: f64, count: usize) -> SampledSignal<f64> {
        let s = SymbolicTransient::from_pairs(pairs).unwrap();
        synthesize_samples(&s, &TimeGrid::Uniform { start: 0.0, step, count }, 0.0, 0).unwrap()
    }

    #[test]
    fn one_term() {
        let m = prony_fit(&samples(&[(0.5, 2.0)], 1.0, 10), 1).unwrap();
        assert!((m.poles[0] - (-0.5f64).exp()).abs() < 1e-10);
        assert!((m.rates[0] - 0.5).abs() < 1e-10);
        assert!((m.amplitudes[0] - 2.0).abs() < 1e-10);
        assert!(m.flags.is_empty());
    }

    #[test]
    fn two_terms() {
        let m = prony_fit(&samples(&[(1.0, 2.0), (2.0, 3.0)], 0.5, 20), 2).unwrap();
        assert!((m.rates[0] - 1.0).abs() < 1e-8 && (m.rates[1] - 2.0).abs() < 1e-8);
        assert!((m.amplitudes[0] - 2.0).abs() < 1e-8 && (m.amplitudes[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn four_terms_on_a_long_record() {
        let pairs = [
            (0.6259795186162602, -3.1712521115395016),
            (1.4255792608275462, -1.2065252256205115),
            (1.9268981796740128, 4.494721274323417),
            (2.682236661320489, 3.570336225982762),
        ];
        let m = prony_fit(&samples(&pairs, 0.5, 40), 4).unwrap();
        for (i, (r, c)) in pairs.iter().enumerate() {
            assert!(((m.rates[i] - r) / r).abs() < 1e-8, "rate {}", m.rates[i]);
            assert!(((m.amplitudes[i] - c) / c).abs() < 1e-8, "amplitude {}", m.amplitudes[i]);
        }
    }

    #[test]
    fn shifted_start_refers_amplitudes_to_zero() {
        let s = SymbolicTransient::from_pairs(&[(1.0, 2.0), (2.0, 3.0)]).unwrap();
        let smp = synthesize_samples(&s, &TimeGrid::Uniform { start: 1.5, step: 0.5, count: 20 }, 0.0, 0)
            .unwrap();
        let m = prony_fit(&smp, 2).unwrap();
        assert!((m.amplitudes[0] - 2.0).abs() < 1e-8 && (m.amplitudes[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn excess_order_is_reduced() {
        let m = prony_fit(&samples(&[(1.0, 2.0), (2.0, 3.0)], 0.5, 20), 4).unwrap();
        assert_eq!(m.order, 2);
        assert!(m.flags.contains(&PronyFlag::OrderReduced { requested: 4, used: 2 }));
        assert!((m.rates[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn oscillation_is_flagged_complex() {
        let times: Vec<f64> = (0..30).map(|i| i as f64 * 0.3).collect();
        let vals = times.iter().map(|t| (-0.2 * t).exp() * (2.0 * t).cos()).collect();
        let m = prony_fit(&SampledSignal::new(times, vals).unwrap(), 2).unwrap();
        assert!(m.flags.contains(&PronyFlag::ComplexRoots { count: 2 }));
        assert!(m.rates.is_empty());
        assert_eq!(m.roots.len(), 2);
    }

    #[test]
    fn growing_mode_is_out_of_range() {
        let times: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let vals = times.iter().map(|t| (0.1 * t).exp()).collect();
        let m = prony_fit(&SampledSignal::new(times, vals).unwrap(), 1).unwrap();
        assert!(m.flags.contains(&PronyFlag::OutOfRangeRoots { count: 1 }));
    }

    #[test]
    fn rejects_bad_input() {
        let times = vec![0.0, 1.0, 3.0, 4.0];
        let s = SampledSignal::new(times, vec![1.0; 4]).unwrap();
        assert!(prony_fit(&s, 1).is_err());
        assert!(prony_fit(&samples(&[(1.0, 1.0)], 1.0, 3), 2).is_err());
        assert!(matches!(
            prony_fit(&samples(&[], 1.0, 10), 1),
            Err(Error::RankDeficient { order: 1 })
        ));
    }

    #[test]
    fn single_pole_condition_is_one() {
        assert!((pole_vandermonde_condition(&[0.9], 10) - 1.0).abs() < 1e-15);
        let times: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!((vandermonde_condition(&[0.3], &times).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_roundtrip() {
        let m = prony_fit(&samples(&[(1.0, 2.0)], 0.5, 10), 1).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: PronyModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
