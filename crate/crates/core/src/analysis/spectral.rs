//! Spectral structure of the stacked desired-angle map: the ring Laplacian,
//! its closed-form left null vector and the consensus limit of `exp(-L t)`.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use super::expm::expm;
use crate::control::compact_form;
use crate::error::{Error, Result};
use crate::formation::Guideline;

pub const LEFT_RESIDUAL_TOL: f64 = 1e-10;
pub const BIAS_RESIDUAL_TOL: f64 = 1e-10;
pub const ROW_SUM_TOL: f64 = 1e-12;
pub const LIMIT_TOL: f64 = 1e-6;

/// Nominal horizon for the consensus limit; lengthened for slowly mixing rings.
pub const BASE_HORIZON: f64 = 50.0;

pub fn laplacian(a: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::identity(a.nrows(), a.ncols()) - a
}

/// Normalised left null vector of the ring Laplacian, in closed form.
///
/// Entry `i` is proportional to `(g_{i-1} + g_i) * prod_{j != i, i-1} g_j`
/// where `g` are the guideline's unnormalised desired gaps (for FG1,
/// `g_j = mu_j + mu_{j+1}`).
pub fn left_eigenvector(guideline: Guideline, mu: &[f64]) -> DVector<f64> {
    let n = mu.len();
    assert!(n >= 2, "left eigenvector needs at least two robots");
    let g = guideline.gap_weights(mu);
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let prev = (i + n - 1) % n;
            let others: f64 = (0..n)
                .filter(|&j| j != i && j != prev)
                .map(|j| g[j])
                .product();
            (g[prev] + g[i]) * others
        })
        .collect();
    let total: f64 = raw.iter().sum();
    DVector::from_iterator(n, raw.into_iter().map(|w| w / total))
}

/// Smallest real part among the nonzero eigenvalues of `l`.
pub fn slowest_rate(l: &DMatrix<f64>) -> f64 {
    let eig = l.clone().complex_eigenvalues();
    eig.iter()
        .filter(|z| z.norm() > 1e-9)
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min)
}

/// Horizon long enough for `exp(-L T)` to reach its limit.
pub fn consensus_horizon(l: &DMatrix<f64>) -> f64 {
    let rate = slowest_rate(l);
    if rate.is_finite() && rate > 0.0 {
        BASE_HORIZON * (1.0 / rate).max(1.0)
    } else {
        BASE_HORIZON
    }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().map(f64::abs).fold(0.0, f64::max)
}

/// Induced infinity norm (maximum absolute row sum).
pub fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCertificate {
    pub laplacian: DMatrix<f64>,
    pub w_left: DVector<f64>,
    /// `max |(w^T L)_j|`.
    pub residual_left: f64,
    /// `|w^T 1 - 1|`.
    pub residual_norm: f64,
    /// `|w^T b|`; zero means the angle error converges to zero, not to a constant offset.
    pub residual_bias: f64,
    /// `max |(A 1)_i - 1|`.
    pub row_sum_residual: f64,
    pub horizon: f64,
    /// `||exp(-L T) - 1 w^T||_inf` at `T = horizon`.
    pub limit_error: f64,
}

impl SpectralCertificate {
    pub fn check(&self) -> Result<()> {
        let checks = [
            ("w_l^T L_p", self.residual_left, LEFT_RESIDUAL_TOL),
            ("w_l^T 1 - 1", self.residual_norm, LEFT_RESIDUAL_TOL),
            ("w_l^T b", self.residual_bias, BIAS_RESIDUAL_TOL),
            ("A row sums", self.row_sum_residual, ROW_SUM_TOL),
            ("exp(-L_p T) - 1 w_l^T", self.limit_error, LIMIT_TOL),
        ];
        for (check, residual, tolerance) in checks {
            if !(residual < tolerance) {
                return Err(Error::CertificateFailure {
                    check,
                    residual,
                    tolerance,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for SpectralCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "left={:.3e} norm={:.3e} bias={:.3e} rows={:.3e} limit={:.3e} (T={:.1})",
            self.residual_left,
            self.residual_norm,
            self.residual_bias,
            self.row_sum_residual,
            self.limit_error,
            self.horizon
        )
    }
}

/// Residuals for a given stacked map `(a, b)` and candidate left vector `w`.
pub fn certify_consensus(a: &DMatrix<f64>, b: &DVector<f64>, w: &DVector<f64>) -> SpectralCertificate {
    let n = a.nrows();
    let l = laplacian(a);
    let residual_left = max_abs((w.transpose() * &l).iter().copied());
    let residual_norm = (w.sum() - 1.0).abs();
    let residual_bias = w.dot(b).abs();
    let row_sum_residual = max_abs(a.row_iter().map(|r| r.sum() - 1.0));
    let horizon = consensus_horizon(&l);
    let propagator = expm(&(-&l * horizon));
    let limit = DVector::from_element(n, 1.0) * w.transpose();
    let limit_error = norm_inf(&(propagator - limit));
    SpectralCertificate {
        laplacian: l,
        w_left: w.clone(),
        residual_left,
        residual_norm,
        residual_bias,
        row_sum_residual,
        horizon,
        limit_error,
    }
}

/// Builds the certificate for ring-ordered utilities and checks every residual.
pub fn verify_consensus_limit(guideline: Guideline, mu: &[f64]) -> Result<SpectralCertificate> {
    let (a, b) = compact_form(guideline, mu);
    let w = left_eigenvector(guideline, mu);
    let cert = certify_consensus(&a, &b, &w);
    cert.check()?;
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    /// Null vector of `L^T` from an SVD, normalised to unit sum. Independent of
    /// the closed form above.
    fn null_space_oracle(l: &DMatrix<f64>) -> DVector<f64> {
        let svd = l.transpose().svd(false, true);
        let v_t = svd.v_t.unwrap();
        let (idx, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let v: DVector<f64> = v_t.row(idx).transpose();
        &v / v.sum()
    }

    #[test]
    fn equal_utilities_give_uniform_vector() {
        for n in 2..=9 {
            for g in Guideline::ALL {
                let w = left_eigenvector(g, &vec![2.5; n]);
                assert!(w.iter().all(|&x| (x - 1.0 / n as f64).abs() < 1e-15));
            }
        }
    }

    #[test]
    fn two_robots_are_balanced() {
        let w = left_eigenvector(Guideline::Fg1, &[0.2, 9.0]);
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn equal_ring_limit_is_uniform() {
        let cert = verify_consensus_limit(Guideline::Fg1, &[1.0; 4]).unwrap();
        let e = expm(&(-&cert.laplacian * cert.horizon));
        assert!(e.iter().all(|&x| (x - 0.25).abs() < 1e-6));
        // equal four-ring mixes at rate 1, so the nominal horizon is kept
        assert!((cert.horizon - BASE_HORIZON).abs() < 1e-9);
    }

    #[test]
    fn stage_one_utilities_pass() {
        let cert = verify_consensus_limit(Guideline::Fg1, &[20.0, 1.0, 20.0, 20.0]).unwrap();
        assert!(cert.residual_left < 1e-6 && cert.limit_error < 1e-6);
    }

    #[test]
    fn corrupted_map_fails() {
        let mu = [1.0, 2.0, 3.0, 4.0];
        let (mut a, b) = compact_form(Guideline::Fg1, &mu);
        a[(0, 1)] = -a[(0, 1)];
        let w = left_eigenvector(Guideline::Fg1, &mu);
        let err = certify_consensus(&a, &b, &w).check().unwrap_err();
        assert!(matches!(err, Error::CertificateFailure { .. }));
    }

    #[test]
    fn random_five_robot_case_matches_oracle() {
        let mu = [0.7, 3.1, 1.9, 12.0, 0.4];
        let (a, _) = compact_form(Guideline::Fg1, &mu);
        let oracle = null_space_oracle(&laplacian(&a));
        let w = left_eigenvector(Guideline::Fg1, &mu);
        assert!((w - oracle).amax() < 1e-10);
    }

    fn utilities() -> impl Strategy<Value = Vec<f64>> {
        (2usize..=10).prop_flat_map(|n| prop::collection::vec(-2.0f64..2.0, n))
            .prop_map(|logs| logs.into_iter().map(|x| 10f64.powf(x)).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn closed_form_is_left_null_vector(mu in utilities()) {
            for g in Guideline::ALL {
                let (a, b) = compact_form(g, &mu);
                let l = laplacian(&a);
                let w = left_eigenvector(g, &mu);
                prop_assert!(w.iter().all(|&x| x > 0.0));
                prop_assert!((w.transpose() * &l).amax() < 1e-10);
                prop_assert!(w.dot(&b).abs() < 1e-10);
                prop_assert!((w - null_space_oracle(&l)).amax() < 1e-10);
                // right null vector is the all-ones vector
                prop_assert!((&l * DVector::from_element(mu.len(), 1.0)).amax() < 1e-12);
            }
        }

        #[test]
        fn propagator_is_row_stochastic(mu in utilities(), t in 0.0f64..20.0) {
            let (a, _) = compact_form(Guideline::Fg1, &mu);
            let e = expm(&(-laplacian(&a) * t));
            for row in e.row_iter() {
                prop_assert!((row.sum() - 1.0).abs() < 1e-9);
                prop_assert!(row.iter().all(|&x| x >= -1e-12));
            }
        }
    }
}
