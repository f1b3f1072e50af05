//! Jacobi polynomials on `[0, 1]` in the Rodrigues normalization
//!
//! ```text
//! J_n^{(a,b)}(z) = Γ(b)/Γ(b+n) · z^{1-b} (1-z)^{b-a} · dⁿ/dzⁿ [ z^{b+n-1} (1-z)^{a+n-b} ]
//! ```
//!
//! orthogonal under the weight `w(z) = z^{b-1} (1-z)^{a-b}`. With `J_n(0) = 1`
//! the shifted Legendre polynomials are `(a, b) = (1, 1)` and the shifted
//! Chebyshev polynomials of the first kind are `(0, 1/2)`.
//!
//! Coefficients come from the Leibniz rule applied to the closed-form
//! derivatives of the two factors, so the table is exact over rational
//! scalars and free of differentiation error in floating point.

use std::io::Write;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_unit, QuadratureConfig};
use crate::scalar::{int, lit, Real, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct JacobiParams<T> {
    pub a: T,
    pub b: T,
}

impl<T: Scalar> JacobiParams<T> {
    pub fn new(a: T, b: T) -> Self {
        Self { a, b }
    }

    /// `a > 0` and `a + 1 > b`.
    pub fn orthogonality_valid(&self) -> bool {
        self.a > T::zero() && self.a.clone() + T::one() > self.b
    }

    /// `(a + 1, b + 1)`.
    pub fn raised(&self) -> Self {
        Self::new(self.a.clone() + T::one(), self.b.clone() + T::one())
    }

    /// `(a + 2, b + 1)`, the family containing `d/dz J_n^{(a,b)}`.
    pub fn derivative_family(&self) -> Self {
        Self::new(self.a.clone() + T::one() + T::one(), self.b.clone() + T::one())
    }

    /// `(a − 1, b − 1)`.
    pub fn lowered(&self) -> Self {
        Self::new(self.a.clone() - T::one(), self.b.clone() - T::one())
    }
}

impl<T: Scalar> JacobiParams<T> {
    pub fn shifted_legendre() -> Self {
        Self::new(T::one(), T::one())
    }

    pub fn shifted_chebyshev() -> Self {
        Self::new(T::zero(), T::one() / (T::one() + T::one()))
    }
}

/// `x (x − 1) ⋯ (x − k + 1)`.
fn falling<T: Scalar>(x: &T, k: usize) -> T {
    (0..k).fold(T::one(), |acc, i| acc * (x.clone() - int::<T>(i as i64)))
}

/// `x (x + 1) ⋯ (x + k − 1)`.
fn rising<T: Scalar>(x: &T, k: usize) -> T {
    (0..k).fold(T::one(), |acc, i| acc * (x.clone() + int::<T>(i as i64)))
}

fn binomial_row<T: Scalar>(n: usize) -> Vec<T> {
    let mut row = vec![T::one()];
    for _ in 0..n {
        let mut next = vec![T::one(); row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1].clone() + row[i].clone();
        }
        row = next;
    }
    row
}

/// Monomial coefficients `[m₀, …, m_n]` of `J_n^{(a,b)}(z) = Σ m_k z^k`.
pub fn jacobi_monomial_coeffs<T: Scalar>(params: &JacobiParams<T>, n: usize) -> Result<Vec<T>> {
    let JacobiParams { a, b } = params;
    if b.is_nonpositive_integer() {
        return Err(Error::GammaPole {
            arg: b.approx_f64(),
        });
    }
    let bn = b.clone() + int::<T>(n as i64);
    if bn.is_nonpositive_integer() {
        return Err(Error::GammaPole {
            arg: bn.approx_f64(),
        });
    }
    let prefactor = rising(b, n);
    if prefactor.is_zero() {
        return Err(Error::GammaPole {
            arg: b.approx_f64(),
        });
    }
    let p = b.clone() + int::<T>(n as i64 - 1);
    let q = a.clone() + int::<T>(n as i64) - b.clone();
    let choose_n = binomial_row::<T>(n);
    let mut out = vec![T::zero(); n + 1];
    // Leibniz: Σ_j C(n,j) (z^p)^{(j)} ((1-z)^q)^{(n-j)}, times z^{1-b}(1-z)^{b-a},
    // leaves z^{n-j} (1-z)^j with coefficient C(n,j) p^{(j)} (-1)^{n-j} q^{(n-j)}.
    for j in 0..=n {
        let mut c = choose_n[j].clone() * falling(&p, j) * falling(&q, n - j);
        if (n - j) % 2 == 1 {
            c = -c;
        }
        if c.is_zero() {
            continue;
        }
        let choose_j = binomial_row::<T>(j);
        for (i, cj) in choose_j.into_iter().enumerate() {
            let term = c.clone() * cj;
            let k = n - j + i;
            if i % 2 == 1 {
                out[k] = out[k].clone() - term;
            } else {
                out[k] = out[k].clone() + term;
            }
        }
    }
    Ok(out.into_iter().map(|v| v / prefactor.clone()).collect())
}

/// Horner evaluation of `Σ c_k z^k`.
pub fn eval_poly<T: Scalar>(coeffs: &[T], z: &T) -> T {
    coeffs
        .iter()
        .rev()
        .fold(T::zero(), |acc, c| acc * z.clone() + c.clone())
}

/// Coefficients of the derivative.
pub fn derivative_coeffs<T: Scalar>(coeffs: &[T]) -> Vec<T> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c.clone() * int::<T>(k as i64))
        .collect()
}

/// Monomial table `m[n][k]` for degrees `0..=max_degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiBasis<T> {
    params: JacobiParams<T>,
    table: Vec<Vec<T>>,
}

impl<T: Scalar> JacobiBasis<T> {
    pub fn new(params: JacobiParams<T>, max_degree: usize) -> Result<Self> {
        let table = (0..=max_degree)
            .map(|n| jacobi_monomial_coeffs(&params, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { params, table })
    }

    pub fn params(&self) -> &JacobiParams<T> {
        &self.params
    }

    pub fn max_degree(&self) -> usize {
        self.table.len() - 1
    }

    pub fn row(&self, n: usize) -> &[T] {
        &self.table[n]
    }

    pub fn table(&self) -> &[Vec<T>] {
        &self.table
    }

    pub fn evaluate(&self, n: usize, z: &T) -> T {
        eval_poly(&self.table[n], z)
    }

    /// Writes `n,k,coeff` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["n", "k", "coeff"])
            .map_err(|e| Error::Io(e.to_string()))?;
        for (n, row) in self.table.iter().enumerate() {
            for (k, c) in row.iter().enumerate() {
                wtr.write_record([n.to_string(), k.to_string(), format!("{:e}", c.approx_f64())])
                    .map_err(|e| Error::Io(e.to_string()))?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// `max_z |d/dz J_n^{(a,b)}(z) + n(n+a)/b · J_{n-1}^{(a+1,b+1)}(z)|`.
///
/// With the lowered family taken as `(a+1, b+1)` the relation is exact only
/// for `n = 1`; at `n = 2, a = b = 2` the residual is `4z/3`.
/// [`check_derivative_recurrence_shifted`] uses `(a+2, b+1)`, which holds at
/// every degree.
pub fn check_derivative_recurrence<T: Real>(
    params: &JacobiParams<T>,
    n: usize,
    points: &[T],
) -> Result<T> {
    derivative_residual(params, &params.raised(), n, points)
}

/// `max_z |d/dz J_n^{(a,b)}(z) + n(n+a)/b · J_{n-1}^{(a+2,b+1)}(z)|`.
pub fn check_derivative_recurrence_shifted<T: Real>(
    params: &JacobiParams<T>,
    n: usize,
    points: &[T],
) -> Result<T> {
    derivative_residual(params, &params.derivative_family(), n, points)
}

fn derivative_residual<T: Real>(
    params: &JacobiParams<T>,
    lower_family: &JacobiParams<T>,
    n: usize,
    points: &[T],
) -> Result<T> {
    if n == 0 || params.b.is_zero() {
        return Err(Error::InvalidConfig(
            "derivative recurrence needs n ≥ 1 and b ≠ 0".into(),
        ));
    }
    let d = derivative_coeffs(&jacobi_monomial_coeffs(params, n)?);
    let lower = jacobi_monomial_coeffs(lower_family, n - 1)?;
    let nf = int::<T>(n as i64);
    let factor = nf * (nf + params.a) / params.b;
    Ok(points.iter().fold(T::zero(), |m, z| {
        m.max((eval_poly(&d, z) + factor * eval_poly(&lower, z)).abs())
    }))
}

/// `max_z |z J_n^{(a,b)}(z) − (b−1)/(2n+a) · (J_n^{(a−1,b−1)}(z) − J_{n+1}^{(a−1,b−1)}(z))|`.
pub fn check_multiplication_recurrence<T: Real>(
    params: &JacobiParams<T>,
    n: usize,
    points: &[T],
) -> Result<T> {
    let nf = int::<T>(n as i64);
    let denom = lit::<T>(2.0) * nf + params.a;
    if denom.is_zero() {
        return Err(Error::InvalidConfig(
            "multiplication recurrence needs 2n + a ≠ 0".into(),
        ));
    }
    let own = jacobi_monomial_coeffs(params, n)?;
    let low = params.lowered();
    let p0 = jacobi_monomial_coeffs(&low, n)?;
    let p1 = jacobi_monomial_coeffs(&low, n + 1)?;
    let factor = (params.b - T::one()) / denom;
    Ok(points.iter().fold(T::zero(), |m, &z| {
        let lhs = z * eval_poly(&own, &z);
        let rhs = factor * (eval_poly(&p0, &z) - eval_poly(&p1, &z));
        m.max((lhs - rhs).abs())
    }))
}

/// `∫₀¹ J_m J_n z^{b−1} (1−z)^{a−b} dz` by Gauss–Legendre quadrature.
pub fn orthogonality_integral<T: Real>(
    params: &JacobiParams<T>,
    m: usize,
    n: usize,
    q: &QuadratureConfig,
) -> Result<T> {
    if !params.orthogonality_valid() {
        return Err(Error::InvalidConfig(format!(
            "(a, b) = ({}, {}) is outside a > 0, a + 1 > b",
            params.a, params.b
        )));
    }
    let pm = jacobi_monomial_coeffs(params, m)?;
    let pn = jacobi_monomial_coeffs(params, n)?;
    let (e0, e1) = (params.b - T::one(), params.a - params.b);
    integrate_unit(q, |z: T| {
        let w = z.powf(e0) * (T::one() - z).powf(e1);
        Ok(eval_poly(&pm, &z) * eval_poly(&pn, &z) * w)
    })
}

/// Diagonal norm in the form `Γ(n)Γ²(b)Γ(n+a−b+1) / ((a+2n)Γ(a+n)Γ(b+n))`.
///
/// This agrees with the integral only at `n = 1` (where `Γ(n) = Γ(n+1)`);
/// see [`orthogonality_norm`] for the form valid at every degree.
pub fn printed_orthogonality_norm(a: f64, b: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::GammaPole { arg: 0.0 });
    }
    norm_with(a, b, n, gamma(n as f64))
}

/// `n! Γ²(b) Γ(n+a−b+1) / ((a+2n) Γ(a+n) Γ(b+n))`, the squared norm of
/// `J_n^{(a,b)}` under `z^{b−1}(1−z)^{a−b}`.
pub fn orthogonality_norm(a: f64, b: f64, n: usize) -> Result<f64> {
    norm_with(a, b, n, gamma(n as f64 + 1.0))
}

fn norm_with(a: f64, b: f64, n: usize, lead: f64) -> Result<f64> {
    let nf = n as f64;
    for arg in [b, nf + a - b + 1.0, a + nf, b + nf] {
        if arg <= 0.0 && arg.fract() == 0.0 {
            return Err(Error::GammaPole { arg });
        }
    }
    let den = (a + 2.0 * nf) * gamma(a + nf) * gamma(b + nf);
    if den == 0.0 {
        return Err(Error::GammaPole { arg: a + 2.0 * nf });
    }
    Ok(lead * gamma(b).powi(2) * gamma(nf + a - b + 1.0) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn p22() -> JacobiParams<f64> {
        JacobiParams::new(2.0, 2.0)
    }

    #[test]
    fn low_degree_rows() {
        assert_eq!(jacobi_monomial_coeffs(&p22(), 0).unwrap(), vec![1.0]);
        assert_eq!(
            jacobi_monomial_coeffs(&JacobiParams::new(3.7, 0.4), 0).unwrap(),
            vec![1.0]
        );
        assert_eq!(jacobi_monomial_coeffs(&p22(), 1).unwrap(), vec![1.0, -1.5]);
    }

    #[test]
    fn exact_rows_match_symbolic_expansion() {
        // rows for a = b = 2 from an independent symbolic expansion of the Rodrigues formula
        let want: Vec<Vec<BigRational>> = vec![
            vec![q(1, 1), q(-4, 1), q(10, 3)],
            vec![q(1, 1), q(-15, 2), q(15, 1), q(-35, 4)],
            vec![q(1, 1), q(-12, 1), q(42, 1), q(-56, 1), q(126, 5)],
            vec![q(1, 1), q(-35, 2), q(280, 3), q(-210, 1), q(210, 1), q(-77, 1)],
            vec![q(1, 1), q(-24, 1), q(180, 1), q(-600, 1), q(990, 1), q(-792, 1), q(1716, 7)],
        ];
        let params = JacobiParams::new(q(2, 1), q(2, 1));
        for (i, row) in want.into_iter().enumerate() {
            assert_eq!(jacobi_monomial_coeffs(&params, i + 2).unwrap(), row);
        }
    }

    #[test]
    fn leading_coefficients_nonzero() {
        let basis = JacobiBasis::new(p22(), 10).unwrap();
        for n in 0..=10 {
            assert_eq!(basis.row(n).len(), n + 1);
            assert!(basis.row(n)[n] != 0.0);
        }
    }

    #[test]
    fn gamma_poles() {
        assert!(matches!(
            jacobi_monomial_coeffs(&JacobiParams::new(0.0, 0.0), 2),
            Err(Error::GammaPole { .. })
        ));
        assert!(matches!(
            jacobi_monomial_coeffs(&JacobiParams::new(1.0, -2.0), 1),
            Err(Error::GammaPole { .. })
        ));
        assert!(jacobi_monomial_coeffs(&JacobiParams::new(-0.5, -0.5), 4).is_ok());
    }

    #[test]
    fn classical_special_cases() {
        // shifted Legendre P̃₂(z) = 6z² − 6z + 1
        let leg = jacobi_monomial_coeffs(&JacobiParams::<f64>::shifted_legendre(), 2).unwrap();
        assert_eq!(leg, vec![1.0, -6.0, 6.0]);
        // shifted Chebyshev T₂(2z−1) = 8z² − 8z + 1
        let che = jacobi_monomial_coeffs(&JacobiParams::<f64>::shifted_chebyshev(), 2).unwrap();
        for (g, w) in che.iter().zip([1.0, -8.0, 8.0]) {
            assert!((g - w).abs() < 1e-14);
        }
    }

    #[test]
    fn recurrences() {
        let pts = [0.0, 0.5, 1.0];
        assert!(check_derivative_recurrence(&p22(), 1, &pts).unwrap() < 1e-12);
        assert!(check_derivative_recurrence(&JacobiParams::new(2.0, 1.0), 1, &pts).unwrap() < 1e-12);
        assert!(check_multiplication_recurrence(&p22(), 0, &pts).unwrap() < 1e-12);
        assert!(check_multiplication_recurrence(&JacobiParams::new(3.0, 2.0), 0, &pts).unwrap() < 1e-12);
        let grid: Vec<f64> = (0..33).map(|i| i as f64 / 32.0).collect();
        for params in [p22(), JacobiParams::new(3.0, 2.0)] {
            for n in 1..=8 {
                assert!(check_derivative_recurrence_shifted(&params, n, &grid).unwrap() < 1e-9);
            }
            for n in 0..=8 {
                assert!(check_multiplication_recurrence(&params, n, &grid).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn unshifted_derivative_family_fails_beyond_degree_one() {
        let grid: Vec<f64> = (0..33).map(|i| i as f64 / 32.0).collect();
        // residual 4z/3, largest at z = 1
        let r = check_derivative_recurrence(&p22(), 2, &grid).unwrap();
        assert!((r - 4.0 / 3.0).abs() < 1e-12);
        for n in 2..=8 {
            assert!(check_derivative_recurrence(&p22(), n, &grid).unwrap() > 1.0);
        }
    }

    #[test]
    fn recurrences_hold_exactly_over_rationals() {
        let params = JacobiParams::new(q(7, 3), q(5, 4));
        for n in 1..6 {
            let d = derivative_coeffs(&jacobi_monomial_coeffs(&params, n).unwrap());
            let lower = jacobi_monomial_coeffs(&params.derivative_family(), n - 1).unwrap();
            let nn = q(n as i64, 1);
            let factor = nn.clone() * (nn + params.a.clone()) / params.b.clone();
            for (x, y) in d.iter().zip(&lower) {
                assert_eq!(x.clone() + factor.clone() * y.clone(), q(0, 1));
            }
        }
    }

    #[test]
    fn orthogonality() {
        let cfg = QuadratureConfig::default();
        assert!(orthogonality_integral(&p22(), 0, 1, &cfg).unwrap().abs() < 1e-12);
        let d1 = orthogonality_integral(&p22(), 1, 1, &cfg).unwrap();
        assert!((d1 - 1.0 / 16.0).abs() < 1e-10);
        assert!((printed_orthogonality_norm(2.0, 2.0, 1).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        for m in 0..=8 {
            for n in 0..=8 {
                if m != n {
                    assert!(orthogonality_integral(&p22(), m, n, &cfg).unwrap().abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn norms_against_quadrature() {
        let cfg = QuadratureConfig::default();
        for (a, b) in [(2.0, 2.0), (3.0, 2.0), (2.0, 1.0), (4.0, 3.0)] {
            let params = JacobiParams::new(a, b);
            for n in 0..=6 {
                let quad = orthogonality_integral(&params, n, n, &cfg).unwrap();
                let closed = orthogonality_norm(a, b, n).unwrap();
                assert!((quad - closed).abs() < 1e-12 * closed.max(1.0), "{a},{b},{n}");
            }
        }
        // a = b = 2: 1/(2(n+1)³)
        for n in 0..=6 {
            let want = 0.5 / ((n + 1) as f64).powi(3);
            assert!((orthogonality_norm(2.0, 2.0, n).unwrap() - want).abs() < 1e-15);
        }
        assert!(matches!(
            printed_orthogonality_norm(2.0, 2.0, 0),
            Err(Error::GammaPole { .. })
        ));
    }

    #[test]
    fn invalid_params_rejected_for_orthogonality() {
        let p = JacobiParams::new(-0.5, -0.5);
        assert!(!p.orthogonality_valid());
        assert!(orthogonality_integral(&p, 0, 1, &QuadratureConfig::default()).is_err());
        assert!(JacobiParams::new(4.0, 3.0).orthogonality_valid());
        assert!(!JacobiParams::new(1.0, 2.5).orthogonality_valid());
    }

    #[test]
    fn csv_export() {
        let basis = JacobiBasis::new(p22(), 1).unwrap();
        let mut buf = Vec::new();
        basis.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "n,k,coeff\n0,0,1e0\n1,0,1e0\n1,1,-1.5e0\n");
    }
}
