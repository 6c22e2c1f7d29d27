//! Empirical covariance, least-squares and Gaussian-posterior estimates of the
//! latent vector, and the minimum-eigenvalue diagnostic.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::types::{dot, ContextVector};

/// Relative threshold below which eigenvalues are treated as zero.
pub const PINV_RTOL: f64 = 1e-10;

/// Updates between full recomputations of `Z` from the raw history.
pub const RECOMPUTE_EVERY: usize = 10_000;

/// Running sums `Z = Σ x xᵀ`, `xr = Σ r x` and the observation count.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    z: DMatrix<f64>,
    xr: DVector<f64>,
    n: usize,
}

impl SufficientStats {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Self {
            z: DMatrix::zeros(dim, dim),
            xr: DVector::zeros(dim),
            n: 0,
        }
    }

    /// Recomputes the sums from scratch with pairwise summation.
    pub fn from_entries<X: AsRef<[f64]>>(dim: usize, entries: &[(X, f64)]) -> Result<Self> {
        for (x, _) in entries {
            check_dim(dim, x.as_ref().len())?;
        }
        let (z, xr) = pairwise_sums(dim, entries);
        Ok(Self {
            z: DMatrix::from_vec(dim, dim, z),
            xr: DVector::from_vec(xr),
            n: entries.len(),
        })
    }

    pub fn dim(&self) -> usize {
        self.xr.len()
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn xr(&self) -> &DVector<f64> {
        &self.xr
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn update(&mut self, x: &[f64], r: f64) -> Result<()> {
        let d = self.dim();
        check_dim(d, x.len())?;
        let z = self.z.as_mut_slice();
        for j in 0..d {
            let xj = x[j];
            let col = &mut z[j * d..(j + 1) * d];
            for (zij, xi) in col.iter_mut().zip(x) {
                *zij += xi * xj;
            }
        }
        for (acc, xi) in self.xr.iter_mut().zip(x) {
            *acc += r * xi;
        }
        self.n += 1;
        Ok(())
    }
}

/// Value-style update: returns the stats with `(x, r)` folded in.
pub fn update_stats(mut s: SufficientStats, x: &ContextVector, r: f64) -> Result<SufficientStats> {
    s.update(x.as_slice(), r)?;
    Ok(s)
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn pairwise_sums<X: AsRef<[f64]>>(d: usize, entries: &[(X, f64)]) -> (Vec<f64>, Vec<f64>) {
    if entries.len() <= 64 {
        let mut z = vec![0.0; d * d];
        let mut xr = vec![0.0; d];
        for (x, r) in entries {
            let x = x.as_ref();
            for j in 0..d {
                for i in 0..d {
                    z[j * d + i] += x[i] * x[j];
                }
                xr[j] += r * x[j];
            }
        }
        return (z, xr);
    }
    let (left, right) = entries.split_at(entries.len() / 2);
    let (mut z, mut xr) = pairwise_sums(d, left);
    let (z2, xr2) = pairwise_sums(d, right);
    z.iter_mut().zip(z2).for_each(|(a, b)| *a += b);
    xr.iter_mut().zip(xr2).for_each(|(a, b)| *a += b);
    (z, xr)
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix,
/// stored row-major.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Vec<f64>,
    d: usize,
}

impl Cholesky {
    /// Factors `m + ridge·I`. Returns `None` when a pivot falls below
    /// `PINV_RTOL` times the largest diagonal entry.
    pub fn new(m: &DMatrix<f64>, ridge: f64) -> Option<Self> {
        let d = m.nrows();
        let max_diag = (0..d).map(|i| m[(i, i)] + ridge).fold(0.0_f64, f64::max);
        if max_diag <= 0.0 || !max_diag.is_finite() {
            return None;
        }
        let tol = PINV_RTOL * max_diag;
        let mut l = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let mut s = m[(i, j)] + if i == j { ridge } else { 0.0 };
                for k in 0..j {
                    s -= l[i * d + k] * l[j * d + k];
                }
                if i == j {
                    if s <= tol {
                        return None;
                    }
                    l[i * d + i] = s.sqrt();
                } else {
                    l[i * d + j] = s / l[j * d + j];
                }
            }
        }
        Some(Self { l, d })
    }

    /// Forward substitution: returns `L⁻¹ b`.
    #[allow(clippy::needless_range_loop)]
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let d = self.d;
        let mut y = b.to_vec();
        for i in 0..d {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * d + k] * y[k];
            }
            y[i] = s / self.l[i * d + i];
        }
        y
    }

    /// Solves `(L Lᵀ) v = b`.
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let d = self.d;
        let mut y = self.forward(b);
        for i in (0..d).rev() {
            let mut s = y[i];
            for k in i + 1..d {
                s -= self.l[k * d + i] * y[k];
            }
            y[i] = s / self.l[i * d + i];
        }
        y
    }

    /// `bᵀ (L Lᵀ)⁻¹ b`.
    pub fn inv_quad(&self, b: &[f64]) -> f64 {
        let y = self.forward(b);
        dot(&y, &y)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let d = self.d;
        let mut inv = DMatrix::zeros(d, d);
        let mut e = vec![0.0; d];
        for j in 0..d {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..d {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Solver for `M v = b` with `M` symmetric positive semidefinite: Cholesky
/// when `M` is numerically definite, otherwise an eigendecomposition-based
/// pseudo-inverse.
#[derive(Debug, Clone)]
pub enum SymSolver {
    Definite(Cholesky),
    Semidefinite {
        /// Eigenvectors with non-negligible eigenvalues, and their inverse eigenvalues.
        range: Vec<(DVector<f64>, f64)>,
        /// Eigenvectors spanning the (numerical) null space.
        null: Vec<DVector<f64>>,
    },
}

impl SymSolver {
    pub fn new(m: &DMatrix<f64>, ridge: f64) -> Self {
        if let Some(c) = Cholesky::new(m, ridge) {
            return SymSolver::Definite(c);
        }
        let d = m.nrows();
        let shifted = m + DMatrix::identity(d, d) * ridge;
        let eig = SymmetricEigen::new(shifted);
        let max = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        let tol = PINV_RTOL * max;
        let mut range = Vec::new();
        let mut null = Vec::new();
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(k).into_owned();
            if max > 0.0 && lambda > tol {
                range.push((v, 1.0 / lambda));
            } else {
                null.push(v);
            }
        }
        SymSolver::Semidefinite { range, null }
    }

    /// Minimum-norm solution `M⁺ b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            SymSolver::Definite(c) => c.solve(b),
            SymSolver::Semidefinite { range, .. } => {
                let mut out = vec![0.0; b.len()];
                for (v, inv) in range {
                    let coef = dot(v.as_slice(), b) * inv;
                    for (o, vi) in out.iter_mut().zip(v.iter()) {
                        *o += coef * vi;
                    }
                }
                out
            }
        }
    }

    /// `xᵀ M⁻¹ x`, or `None` when `x` has a non-negligible component in the
    /// null space of `M` (the quadratic form is unbounded there).
    pub fn inv_quad(&self, x: &[f64]) -> Option<f64> {
        match self {
            SymSolver::Definite(c) => Some(c.inv_quad(x)),
            SymSolver::Semidefinite { range, null } => {
                let scale = dot(x, x).sqrt().max(f64::MIN_POSITIVE);
                let leak = null
                    .iter()
                    .map(|v| dot(v.as_slice(), x).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if leak > 1e-9 * scale {
                    return None;
                }
                Some(
                    range
                        .iter()
                        .map(|(v, inv)| dot(v.as_slice(), x).powi(2) * inv)
                        .sum(),
                )
            }
        }
    }
}

/// Least-squares estimate `Z⁻¹ xr`, or the minimum-norm solution when `Z` is singular.
pub fn ols_estimate(s: &SufficientStats) -> DVector<f64> {
    if s.n == 0 {
        return DVector::zeros(s.dim());
    }
    DVector::from_vec(SymSolver::new(&s.z, 0.0).solve(s.xr.as_slice()))
}

/// A Gaussian prior `N(mean, cov)` with its precision precomputed.
#[derive(Debug, Clone)]
pub struct GaussianPrior {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    precision: DMatrix<f64>,
    precision_mean: DVector<f64>,
}

impl GaussianPrior {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: cov.nrows(),
            });
        }
        check_symmetric(&cov)?;
        let chol = Cholesky::new(&cov, 0.0).ok_or_else(|| {
            Error::NotPositiveDefinite("prior covariance has a non-positive eigenvalue".into())
        })?;
        let precision = chol.inverse();
        let precision = (&precision + precision.transpose()) * 0.5;
        let precision_mean = &precision * &mean;
        Ok(Self {
            mean,
            cov,
            precision,
            precision_mean,
        })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `(Z + Σ⁻¹)⁻¹ (xr + Σ⁻¹ θ̄)`.
    pub fn posterior_mean(&self, s: &SufficientStats) -> Result<DVector<f64>> {
        check_dim(self.dim(), s.dim())?;
        if s.n == 0 {
            return Ok(self.mean.clone());
        }
        let a = &s.z + &self.precision;
        let b = &s.xr + &self.precision_mean;
        Ok(DVector::from_vec(SymSolver::new(&a, 0.0).solve(b.as_slice())))
    }
}

/// Posterior mean of the latent vector under a Gaussian prior and unit-variance
/// Gaussian reward noise.
pub fn bayes_posterior_mean(
    s: &SufficientStats,
    prior_mean: &DVector<f64>,
    prior_cov: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    GaussianPrior::new(prior_mean.clone(), prior_cov.clone())?.posterior_mean(s)
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let scale = m.iter().fold(1.0_f64, |a, &b| a.max(b.abs()));
    let asym = (m - m.transpose()).amax();
    if asym > 1e-9 * scale {
        return Err(Error::Asymmetric(asym));
    }
    Ok(())
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    check_symmetric(m)?;
    if m.nrows() == 2 {
        // closed form avoids the iterative solver in per-round diagnostics
        let (a, b, c) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
        let half_tr = 0.5 * (a + c);
        let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        return Ok(half_tr - disc);
    }
    let eig = SymmetricEigen::new(m.clone());
    Ok(eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Euclidean distance between the true latent vector and an estimate.
pub fn estimate_error(theta: &[f64], estimate: &[f64]) -> Result<f64> {
    check_dim(theta.len(), estimate.len())?;
    Ok(theta
        .iter()
        .zip(estimate)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn stats_from(rows: &[&[f64]], rewards: &[f64]) -> SufficientStats {
        let mut s = SufficientStats::new(rows[0].len());
        for (x, r) in rows.iter().zip(rewards) {
            s.update(x, *r).unwrap();
        }
        s
    }

    #[test]
    fn update_from_empty() {
        let x = ContextVector::new(vec![1.0, 0.0]).unwrap();
        let s = update_stats(SufficientStats::new(2), &x, 2.0).unwrap();
        assert_eq!(s.z(), &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(s.xr().as_slice(), &[2.0, 0.0]);
        assert_eq!(s.n(), 1);
    }

    #[test]
    fn update_rejects_wrong_dimension() {
        let mut s = SufficientStats::new(2);
        assert!(matches!(
            s.update(&[1.0], 1.0),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn update_order_does_not_matter() {
        let a = stats_from(&[&[1.0, 2.0], &[0.5, -1.0]], &[0.3, 1.2]);
        let b = stats_from(&[&[0.5, -1.0], &[1.0, 2.0]], &[1.2, 0.3]);
        assert_relative_eq!(a.z(), b.z(), epsilon = 1e-15);
        assert_relative_eq!(a.xr(), b.xr(), epsilon = 1e-15);
    }

    #[test]
    fn ols_identity_design() {
        let s = stats_from(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.3, 0.7]);
        assert_relative_eq!(ols_estimate(&s).as_slice(), &[0.3, 0.7][..], epsilon = 1e-12);
    }

    #[test]
    fn ols_normal_equations() {
        let s = stats_from(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]], &[1.0, 0.0, 1.0]);
        assert_relative_eq!(ols_estimate(&s).as_slice(), &[0.5, 1.0][..], epsilon = 1e-12);
    }

    #[test]
    fn ols_minimum_norm_when_singular() {
        let s = stats_from(&[&[1.0, 0.0]], &[1.0]);
        assert_relative_eq!(ols_estimate(&s).as_slice(), &[1.0, 0.0][..], epsilon = 1e-12);
        // rank one along [1,1]: min-norm solution of θ₁+θ₂ = 2 is [1,1]
        let s = stats_from(&[&[1.0, 1.0]], &[2.0]);
        assert_relative_eq!(ols_estimate(&s).as_slice(), &[1.0, 1.0][..], epsilon = 1e-10);
    }

    #[test]
    fn posterior_with_no_data_is_prior_mean() {
        let mean = DVector::from_vec(vec![0.3, -2.0]);
        let cov = DMatrix::identity(2, 2) * 0.5;
        let s = SufficientStats::new(2);
        assert_eq!(bayes_posterior_mean(&s, &mean, &cov).unwrap(), mean);
    }

    #[test]
    fn posterior_single_observation() {
        let s = stats_from(&[&[1.0, 0.0]], &[1.0]);
        let post =
            bayes_posterior_mean(&s, &DVector::zeros(2), &DMatrix::identity(2, 2)).unwrap();
        assert_relative_eq!(post.as_slice(), &[0.5, 0.0][..], epsilon = 1e-12);
    }

    #[test]
    fn posterior_flat_prior_matches_ols() {
        let s = stats_from(
            &[&[1.0, 0.2], &[0.1, 0.9], &[0.7, 0.7], &[-0.3, 0.5]],
            &[1.0, -0.5, 0.2, 2.0],
        );
        let post = bayes_posterior_mean(
            &s,
            &DVector::from_vec(vec![3.0, -1.0]),
            &(DMatrix::identity(2, 2) * 1e8),
        )
        .unwrap();
        assert_relative_eq!(post, ols_estimate(&s), epsilon = 1e-4);
    }

    #[test]
    fn posterior_rejects_singular_prior() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let err = bayes_posterior_mean(&SufficientStats::new(2), &DVector::zeros(2), &cov);
        assert!(matches!(err, Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn min_eigenvalue_examples() {
        let m = |v: &[f64]| DMatrix::from_row_slice(2, 2, v);
        assert_relative_eq!(min_eigenvalue(&m(&[2.0, 0.0, 0.0, 5.0])).unwrap(), 2.0, epsilon = 1e-10);
        assert_relative_eq!(min_eigenvalue(&m(&[2.0, 1.0, 1.0, 2.0])).unwrap(), 1.0, epsilon = 1e-10);
        assert_relative_eq!(min_eigenvalue(&m(&[1.0, 0.0, 0.0, 0.0])).unwrap(), 0.0, epsilon = 1e-10);
        let m3 = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.0, 0.0, 0.0, 1.5]);
        // eigenvalues of [[4,1],[1,3]] are (7 ± √5)/2; third is 1.5
        assert_relative_eq!(min_eigenvalue(&m3).unwrap(), 1.5, epsilon = 1e-10);
    }

    #[test]
    fn min_eigenvalue_rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(min_eigenvalue(&m), Err(Error::Asymmetric(_))));
    }

    #[test]
    fn estimate_error_examples() {
        assert_eq!(estimate_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_relative_eq!(estimate_error(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2f64.sqrt());
        assert!(estimate_error(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn semidefinite_solver_flags_null_space() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.0]);
        let s = SymSolver::new(&m, 0.0);
        assert!(matches!(s, SymSolver::Semidefinite { .. }));
        assert_relative_eq!(s.inv_quad(&[1.0, 0.0]).unwrap(), 0.25, epsilon = 1e-12);
        assert!(s.inv_quad(&[0.0, 1.0]).is_none());
        assert!(s.inv_quad(&[1.0, 1.0]).is_none());
    }
}
