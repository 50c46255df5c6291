//! Order preservation: the gap dynamics `Delta' = k_phi M Delta` are governed
//! by a Metzler matrix, so the gaps stay positive for all time.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use super::expm::expm;
use crate::error::{Error, Result};
use crate::formation::Guideline;

/// Times at which `exp(k_phi M t)` is checked for entrywise non-negativity.
pub const SAMPLE_TIMES: [f64; 3] = [0.1, 1.0, 10.0];
pub const NONNEGATIVE_TOL: f64 = -1e-12;
pub const COLUMN_SUM_TOL: f64 = 1e-12;

/// Gap-dynamics matrix over ring-ordered utilities.
///
/// Row `i` reads `w_{i+1} D_{i+1} - ((1 - w_{i+1}) + w_i) D_i + (1 - w_i) D_{i-1}`
/// where `w_i` is robot `i`'s forward weight. With two robots the
/// neighbour terms land on the same entry.
pub fn build_m_delta(guideline: Guideline, mu: &[f64]) -> DMatrix<f64> {
    let n = mu.len();
    assert!(n >= 2, "gap dynamics need at least two robots");
    let weight = |i: usize| guideline.forward_weight(mu[(i + n - 1) % n], mu[i], mu[(i + 1) % n]);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let next = (i + 1) % n;
        let (w_self, w_next) = (weight(i), weight(next));
        m[(i, next)] += w_next;
        m[(i, i)] -= (1.0 - w_next) + w_self;
        m[(i, prev)] += 1.0 - w_self;
    }
    m
}

pub fn is_metzler(m: &DMatrix<f64>) -> bool {
    m.iter()
        .enumerate()
        .all(|(k, &x)| k % m.nrows() == k / m.nrows() || x >= 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderCertificate {
    pub m_delta: DMatrix<f64>,
    pub is_metzler: bool,
    pub min_off_diagonal: f64,
    /// Minimum entry of `exp(k_phi M t)` over [`SAMPLE_TIMES`].
    pub min_exp_entry: f64,
    /// Largest absolute column sum of `M`.
    pub column_sum_residual: f64,
    /// `max |M f|` for the guideline's desired spacing `f`.
    pub fixed_point_residual: f64,
}

impl OrderCertificate {
    pub fn check(&self) -> Result<()> {
        if !self.is_metzler {
            return Err(Error::CertificateFailure {
                check: "M_delta off-diagonal sign",
                residual: self.min_off_diagonal,
                tolerance: 0.0,
            });
        }
        if !(self.min_exp_entry >= NONNEGATIVE_TOL) {
            return Err(Error::CertificateFailure {
                check: "exp(k_phi M_delta t) entry",
                residual: self.min_exp_entry,
                tolerance: NONNEGATIVE_TOL,
            });
        }
        if !(self.column_sum_residual < COLUMN_SUM_TOL) {
            return Err(Error::CertificateFailure {
                check: "M_delta column sums",
                residual: self.column_sum_residual,
                tolerance: COLUMN_SUM_TOL,
            });
        }
        Ok(())
    }
}

impl fmt::Display for OrderCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "metzler={} min_offdiag={:.3e} min_exp={:.3e} colsum={:.3e} fixed_point={:.3e}",
            self.is_metzler,
            self.min_off_diagonal,
            self.min_exp_entry,
            self.column_sum_residual,
            self.fixed_point_residual
        )
    }
}

pub fn certify_gap_dynamics(m: &DMatrix<f64>, desired: &[f64], k_phi: f64) -> OrderCertificate {
    let n = m.nrows();
    let min_off_diagonal = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)])
        .fold(f64::INFINITY, f64::min);
    let min_exp_entry = SAMPLE_TIMES
        .iter()
        .map(|&t| expm(&(m * (k_phi * t))).min())
        .fold(f64::INFINITY, f64::min);
    let column_sum_residual = m
        .column_iter()
        .map(|c| c.sum().abs())
        .fold(0.0, f64::max);
    let fixed_point_residual = (m * DVector::from_column_slice(desired)).amax();
    OrderCertificate {
        m_delta: m.clone(),
        is_metzler: is_metzler(m),
        min_off_diagonal,
        min_exp_entry,
        column_sum_residual,
        fixed_point_residual,
    }
}

/// Builds `M_delta` for ring-ordered utilities and checks it.
pub fn certify_order(guideline: Guideline, mu: &[f64], k_phi: f64) -> Result<OrderCertificate> {
    let m = build_m_delta(guideline, mu);
    let desired = guideline.desired_spacing(mu);
    let cert = certify_gap_dynamics(&m, desired.deltas(), k_phi);
    cert.check()?;
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn equal_three_ring() {
        let m = build_m_delta(Guideline::Fg1, &[4.0; 3]);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m[(i, j)], if i == j { -1.0 } else { 0.5 });
            }
        }
    }

    #[test]
    fn two_robot_pattern() {
        let m = build_m_delta(Guideline::Fg1, &[0.3, 8.0]);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]));
    }

    #[test]
    fn matches_explicit_fg1_entries() {
        let mu = [1.0, 2.0, 3.0, 4.0, 5.0];
        let m = build_m_delta(Guideline::Fg1, &mu);
        let (m1, m2, m3, m4, mn) = (mu[0], mu[1], mu[2], mu[3], mu[4]);
        let d1 = -(m2 + m3) / (m3 + 2.0 * m2 + m1) - (mn + m1) / (m2 + 2.0 * m1 + mn);
        assert!((m[(0, 0)] - d1).abs() < 1e-15);
        assert!((m[(0, 1)] - (m1 + m2) / (m3 + 2.0 * m2 + m1)).abs() < 1e-15);
        assert!((m[(0, 4)] - (m1 + m2) / (m2 + 2.0 * m1 + mn)).abs() < 1e-15);
        assert!((m[(1, 0)] - (m2 + m3) / (m3 + 2.0 * m2 + m1)).abs() < 1e-15);
        let d2 = -(m3 + m4) / (m4 + 2.0 * m3 + m2) - (m1 + m2) / (m3 + 2.0 * m2 + m1);
        assert!((m[(1, 1)] - d2).abs() < 1e-15);
        assert!((m[(4, 0)] - (mn + m1) / (m2 + 2.0 * m1 + mn)).abs() < 1e-15);
        assert_eq!(m[(0, 2)], 0.0);
    }

    #[test]
    fn negated_entry_is_caught() {
        let mut m = build_m_delta(Guideline::Fg1, &[1.0, 2.0, 3.0]);
        m[(0, 1)] = -m[(0, 1)];
        let f = Guideline::Fg1.desired_spacing(&[1.0, 2.0, 3.0]);
        assert!(certify_gap_dynamics(&m, f.deltas(), 1.0).check().is_err());
    }

    fn utilities(min_n: usize) -> impl Strategy<Value = Vec<f64>> {
        (min_n..=10).prop_flat_map(|n| prop::collection::vec(-2.0f64..2.0, n))
            .prop_map(|logs| logs.into_iter().map(|x| 10f64.powf(x)).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn metzler_with_zero_column_sums(mu in utilities(2)) {
            for g in Guideline::ALL {
                let cert = certify_order(g, &mu, 2.5).unwrap();
                prop_assert!(cert.fixed_point_residual < 1e-12);
                prop_assert!(cert.min_off_diagonal >= 0.0);
            }
        }

        #[test]
        fn six_ring_off_diagonals_nonnegative(mu in prop::collection::vec(0.01f64..100.0, 6)) {
            let m = build_m_delta(Guideline::Fg1, &mu);
            prop_assert!(is_metzler(&m));
        }
    }
}
