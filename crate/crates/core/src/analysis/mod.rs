//! Numerical certificates for the closed loop and post-processing of logs.

pub mod expm;
pub mod order;
pub mod series;
pub mod spectral;
pub mod validate;

pub use expm::expm;
pub use order::{build_m_delta, certify_order, OrderCertificate};
pub use series::{error_series, fit_decay_rate, ErrorSeries, RobotErrors};
pub use spectral::{left_eigenvector, verify_consensus_limit, SpectralCertificate};
pub use validate::{run_suite, SuiteConfig, SuiteReport};
