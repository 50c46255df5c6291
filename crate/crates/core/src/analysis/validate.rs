//! Randomised certificate sweep: spectral and order certificates over random
//! positive utility vectors for every ring size up to `n_max`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::order::{build_m_delta, certify_gap_dynamics, OrderCertificate};
use super::spectral::{certify_consensus, left_eigenvector, SpectralCertificate};
use crate::control::compact_form;
use crate::error::{Error, Result};
use crate::formation::Guideline;

/// Utilities are drawn log-uniformly from this range.
pub const UTILITY_RANGE: (f64, f64) = (0.01, 100.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub n_max: usize,
    pub trials: usize,
    pub seed: u64,
    /// Gap-dynamics gain used for the `exp(k_phi M t)` samples.
    pub k_phi: f64,
    /// Negates one off-diagonal entry of every map before certification.
    /// Exists only to prove the failure path works.
    pub inject_fault: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            n_max: 10,
            trials: 100,
            seed: 0,
            k_phi: 1.0,
            inject_fault: false,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_max < 2 {
            return Err(Error::InvalidScenario(format!("n_max must be at least 2, got {}", self.n_max)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidScenario("trials must be at least 1".into()));
        }
        if !(self.k_phi.is_finite() && self.k_phi > 0.0) {
            return Err(Error::InvalidScenario(format!("k_phi must be positive, got {}", self.k_phi)));
        }
        Ok(())
    }
}

/// Seed of one trial, derived so that any single case can be rerun alone.
pub fn trial_seed(seed: u64, n: usize, trial: usize) -> u64 {
    seed ^ ((n as u64) << 32) ^ trial as u64
}

pub fn random_utilities(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let (lo, hi) = (UTILITY_RANGE.0.ln(), UTILITY_RANGE.1.ln());
    (0..n).map(|_| rng.random_range(lo..hi).exp()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub guideline: Guideline,
    pub mu: Vec<f64>,
    pub error: Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "FAIL n={} trial={} seed={} guideline={} mu={:?}: {}",
            self.n, self.trial, self.seed, self.guideline, self.mu, self.error
        )
    }
}

/// Worst residuals seen for one ring size.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SizeSummary {
    pub n: usize,
    pub cases: usize,
    pub max_left: f64,
    pub max_bias: f64,
    pub max_row_sum: f64,
    pub max_limit: f64,
    pub min_exp_entry: f64,
    pub max_column_sum: f64,
    pub max_fixed_point: f64,
}

impl SizeSummary {
    fn absorb(&mut self, s: &SpectralCertificate, o: &OrderCertificate) {
        self.cases += 1;
        self.max_left = self.max_left.max(s.residual_left.max(s.residual_norm));
        self.max_bias = self.max_bias.max(s.residual_bias);
        self.max_row_sum = self.max_row_sum.max(s.row_sum_residual);
        self.max_limit = self.max_limit.max(s.limit_error);
        self.min_exp_entry = self.min_exp_entry.min(o.min_exp_entry);
        self.max_column_sum = self.max_column_sum.max(o.column_sum_residual);
        self.max_fixed_point = self.max_fixed_point.max(o.fixed_point_residual);
    }
}

impl fmt::Display for SizeSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={:<2} cases={:<4} |wL|={:.2e} |wb|={:.2e} rows={:.2e} limit={:.2e} min_exp={:.2e} colsum={:.2e} Mf={:.2e}",
            self.n,
            self.cases,
            self.max_left,
            self.max_bias,
            self.max_row_sum,
            self.max_limit,
            self.min_exp_entry,
            self.max_column_sum,
            self.max_fixed_point
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteReport {
    pub sizes: Vec<SizeSummary>,
    pub failures: Vec<Failure>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn cases(&self) -> usize {
        self.sizes.iter().map(|s| s.cases).sum()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.sizes {
            writeln!(f, "{s}")?;
        }
        for failure in &self.failures {
            writeln!(f, "{failure}")?;
        }
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{verdict}: {} cases, {} failures", self.cases(), self.failures.len())
    }
}

/// Certifies one utility vector under one guideline.
pub fn certify_case(
    guideline: Guideline,
    mu: &[f64],
    k_phi: f64,
    inject_fault: bool,
) -> (SpectralCertificate, OrderCertificate, Result<()>) {
    let (mut a, b) = compact_form(guideline, mu);
    let mut m = build_m_delta(guideline, mu);
    if inject_fault {
        let n = mu.len();
        a[(0, n - 1)] = -a[(0, n - 1)];
        m[(0, 1)] = -m[(0, 1)];
    }
    let w = left_eigenvector(guideline, mu);
    let spectral = certify_consensus(&a, &b, &w);
    let desired = guideline.desired_spacing(mu);
    let order = certify_gap_dynamics(&m, desired.deltas(), k_phi);
    let verdict = spectral.check().and_then(|_| order.check());
    (spectral, order, verdict)
}

pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let mut report = SuiteReport::default();
    for n in 2..=config.n_max {
        let mut summary = SizeSummary {
            n,
            min_exp_entry: f64::INFINITY,
            ..SizeSummary::default()
        };
        for trial in 0..config.trials {
            let seed = trial_seed(config.seed, n, trial);
            let mu = random_utilities(&mut ChaCha8Rng::seed_from_u64(seed), n);
            for guideline in Guideline::ALL {
                let (s, o, verdict) = certify_case(guideline, &mu, config.k_phi, config.inject_fault);
                summary.absorb(&s, &o);
                if let Err(error) = verdict {
                    report.failures.push(Failure {
                        n,
                        trial,
                        seed,
                        guideline,
                        mu: mu.clone(),
                        error,
                    });
                }
            }
        }
        report.sizes.push(summary);
    }
    Ok(report)
}
