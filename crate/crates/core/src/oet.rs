//! Orthogonal exponential transform built on `J^{(2,2)}` and `z = e^{-t}`.
//!
//! The `n`th basis element is
//! `𝑱̃ₙ(t) = (−1)^{n−1} √(2n³) e^{-t} J_{n−1}^{(2,2)}(e^{-t}) = Σ_{k=1}^{n} c[n][k] e^{-kt}`,
//! orthonormal in `L²[0, ∞)`. Only signals whose rates are positive
//! integers lie in the span; other rates are approximated, never recovered.

use std::io::Write;

use crate::error::{Error, Result};
use crate::jacobi::{jacobi_monomial_coeffs, JacobiParams};
use crate::quadrature::{integrate_over, QuadratureConfig};
use crate::scalar::{int, lit, Real};
use crate::signal::{SignalSource, SymbolicTransient, Term};

/// Coefficient table `c[n][k]` of `𝑱̃ₙ` on `e^{-kt}`, `1 ≤ k ≤ n ≤ max_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialBasis<T> {
    table: Vec<Vec<T>>,
}

pub fn build_exponential_basis<T: Real>(max_index: usize) -> Result<ExponentialBasis<T>> {
    if max_index == 0 {
        return Err(Error::InvalidConfig("max_index must be at least 1".into()));
    }
    let params = JacobiParams::new(lit::<T>(2.0), lit::<T>(2.0));
    let table = (1..=max_index)
        .map(|n| {
            let nf = int::<T>(n as i64);
            let mut scale = (lit::<T>(2.0) * nf * nf * nf).sqrt();
            if n % 2 == 0 {
                scale = -scale;
            }
            Ok(jacobi_monomial_coeffs(&params, n - 1)?
                .into_iter()
                .map(|m| m * scale)
                .collect())
        })
        .collect::<Result<Vec<Vec<T>>>>()?;
    Ok(ExponentialBasis { table })
}

impl<T: Real> ExponentialBasis<T> {
    pub fn max_index(&self) -> usize {
        self.table.len()
    }

    /// `c[n][k]`, zero outside `1 ≤ k ≤ n`.
    pub fn coeff(&self, n: usize, k: usize) -> T {
        if n == 0 || k == 0 || k > n || n > self.table.len() {
            return T::zero();
        }
        self.table[n - 1][k - 1]
    }

    /// `[c[n][1], …, c[n][n]]`.
    pub fn row(&self, n: usize) -> &[T] {
        &self.table[n - 1]
    }

    /// `𝑱̃ₙ` as a symbolic signal with rates `1..=n`.
    pub fn element(&self, n: usize) -> SymbolicTransient<T> {
        let terms = self.table[n - 1]
            .iter()
            .enumerate()
            .map(|(k, &c)| Term::new(int::<T>(k as i64 + 1), c))
            .collect();
        SymbolicTransient::new(terms).expect("integer rates are increasing")
    }

    /// `𝑱̃ₙ(t)` via Horner in `z = e^{-t}`.
    pub fn evaluate(&self, n: usize, t: T) -> T {
        let z = (-t).exp();
        self.table[n - 1]
            .iter()
            .rev()
            .fold(T::zero(), |acc, &c| acc * z + c)
            * z
    }

    /// `⟨𝑱̃ₘ, 𝑱̃ₙ⟩` from `⟨e^{-jt}, e^{-kt}⟩ = 1/(j + k)`, without quadrature.
    pub fn gram_closed_form(&self) -> Vec<Vec<T>> {
        let n = self.table.len();
        let mut g = vec![vec![T::zero(); n]; n];
        for m in 0..n {
            for p in 0..=m {
                let mut acc = T::zero();
                for (j, &cm) in self.table[m].iter().enumerate() {
                    for (k, &cp) in self.table[p].iter().enumerate() {
                        acc = acc + cm * cp / int::<T>((j + k + 2) as i64);
                    }
                }
                g[m][p] = acc;
                g[p][m] = acc;
            }
        }
        g
    }

    /// Writes `n,k,coeff` rows (1-based).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["n", "k", "coeff"])
            .map_err(|e| Error::Io(e.to_string()))?;
        for (n, row) in self.table.iter().enumerate() {
            for (k, c) in row.iter().enumerate() {
                wtr.write_record([(n + 1).to_string(), (k + 1).to_string(), format!("{c:e}")])
                    .map_err(|e| Error::Io(e.to_string()))?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Projections onto the basis and the exponential coefficients they fold to.
#[derive(Debug, Clone, PartialEq)]
pub struct OetAnalysis<T> {
    /// `⟨s, 𝑱̃ₙ⟩` for `n = 1..=max_index`.
    pub projections: Vec<T>,
    /// `αₖ = Σₙ ⟨s, 𝑱̃ₙ⟩ c[n][k]` for `k = 1..=max_index`.
    pub coefficients: Vec<T>,
}

pub fn oet_analyze<T: Real>(
    s: &SignalSource<T>,
    basis: &ExponentialBasis<T>,
    q: &QuadratureConfig,
) -> Result<OetAnalysis<T>> {
    let support = s.support();
    let projections = (1..=basis.max_index())
        .map(|n| integrate_over(q, support, |t| Ok(s.evaluate(t)? * basis.evaluate(n, t))))
        .collect::<Result<Vec<T>>>()?;
    let coefficients = fold_coefficients(&projections, basis)?;
    Ok(OetAnalysis {
        projections,
        coefficients,
    })
}

/// `αₖ = Σₙ pₙ c[n][k]` for `k = 1..=projections.len()`.
pub fn fold_coefficients<T: Real>(projections: &[T], basis: &ExponentialBasis<T>) -> Result<Vec<T>> {
    if projections.len() > basis.max_index() {
        return Err(Error::InvalidConfig(format!(
            "{} projections exceed basis size {}",
            projections.len(),
            basis.max_index()
        )));
    }
    Ok((1..=projections.len())
        .map(|k| {
            projections
                .iter()
                .enumerate()
                .skip(k - 1)
                .fold(T::zero(), |acc, (i, &p)| acc + p * basis.coeff(i + 1, k))
        })
        .collect())
}

/// `Σₖ αₖ e^{-kt}` with `αₖ` folded from the projections; zero
/// coefficients are dropped.
pub fn oet_synthesize<T: Real>(
    projections: &[T],
    basis: &ExponentialBasis<T>,
) -> Result<SymbolicTransient<T>> {
    let alphas = fold_coefficients(projections, basis)?;
    let terms = alphas
        .into_iter()
        .enumerate()
        .map(|(k, a)| Term::new(int::<T>(k as i64 + 1), a))
        .collect();
    Ok(SymbolicTransient::new(terms)?.canonicalize())
}

/// Whether every rate of `s` is a positive integer no larger than `max_index`.
pub fn in_span<T: Real>(s: &SymbolicTransient<T>, max_index: usize) -> bool {
    s.terms().iter().all(|t| {
        let r = t.rate;
        r.fract().is_zero() && r >= T::one() && r <= int::<T>(max_index as i64)
    })
}
