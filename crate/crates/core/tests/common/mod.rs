#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use transient_lab::signal::SymbolicTransient;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// 1 to 10 terms, rates log-uniform on [0.1, 10] with gaps of at least 0.05,
/// nonzero coefficients in [-5, 5].
pub fn random_canonical(rng: &mut ChaCha8Rng) -> SymbolicTransient<f64> {
    let n = rng.gen_range(1..=10);
    let rates = loop {
        let mut r: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(0.1f64.ln()..10f64.ln()).exp())
            .collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if r.windows(2).all(|w| w[1] - w[0] >= 0.05) {
            break r;
        }
    };
    let pairs: Vec<(f64, f64)> = rates
        .into_iter()
        .map(|r| (r, rng.gen_range(0.1..5.0) * random_sign(rng)))
        .collect();
    SymbolicTransient::from_pairs(&pairs).unwrap()
}

/// Three-term member of the numeric decomposition family: λ₁ log-uniform on
/// [0.5, 1.5], gaps uniform on [0.5, 1.0], |coeff| uniform on [0.1, 5] with a
/// random sign. Returns the signal and its horizon 40/λ₁.
pub fn three_term(rng: &mut ChaCha8Rng) -> (SymbolicTransient<f64>, f64) {
    let l1 = rng.gen_range(0.5f64.ln()..1.5f64.ln()).exp();
    let g1 = rng.gen_range(0.5..1.0);
    let g2 = rng.gen_range(0.5..1.0);
    let rates = [l1, l1 + g1, l1 + g1 + g2];
    let coeffs: Vec<f64> = (0..3)
        .map(|_| rng.gen_range(0.1..5.0) * random_sign(rng))
        .collect();
    let pairs: Vec<(f64, f64)> = rates.iter().copied().zip(coeffs).collect();
    (SymbolicTransient::from_pairs(&pairs).unwrap(), 40.0 / l1)
}

/// Singular values of a dense row-major matrix by one-sided Jacobi rotations,
/// descending.
pub fn jacobi_singular_values(a: &[Vec<f64>]) -> Vec<f64> {
    let rows = a.len();
    let cols = a[0].len();
    let mut u: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| a[i][j]).collect()).collect();
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = u[p].iter().map(|x| x * x).sum();
                let beta: f64 = u[q].iter().map(|x| x * x).sum();
                let gamma: f64 = u[p].iter().zip(&u[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let (x, y) = (u[p][i], u[q][i]);
                    u[p][i] = c * x - s * y;
                    u[q][i] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sv: Vec<f64> = u.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// `V[i][j] = poles[j]^i`.
pub fn vandermonde(poles: &[f64], rows: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|i| poles.iter().map(|z| z.powi(i as i32)).collect())
        .collect()
}

pub fn oracle_condition(poles: &[f64], rows: usize) -> f64 {
    let sv = jacobi_singular_values(&vandermonde(poles, rows));
    sv[0] / sv[sv.len() - 1]
}
