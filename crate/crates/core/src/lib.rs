//! Binary classification of stopped Cox-process paths.
//!
//! Paths are simulated by thinning, turned into integral and jump-sum
//! features over a bounded dictionary, and classified by logit-loss ERM over
//! `ℓ¹` balls with penalized choice of the ball size. When the true
//! intensities are known, [`oracle`] gives the Bayes posterior and risk.

pub mod config;
pub mod erm;
pub mod error;
pub mod experiment;
pub mod features;
pub mod model;
pub mod oracle;
pub mod paths;
pub mod quadrature;
pub mod select;
pub mod simulate;
pub mod stats;

pub use config::RunConfig;
pub use erm::{empirical_risk, fit_erm, logit_loss, project_l1, Coefficients, FitOptions, FitReport, Method};
pub use error::{Error, Result};
pub use experiment::{run_experiment, run_girsanov_check, ExperimentReport, GirsanovReport};
pub use features::{class_bound, compute_phi, compute_psi, feature_matrix, FeatureMatrix};
pub use model::{cosine_dictionary, eta_from_xi, scenario, CosineDictionary, Dictionary, IntensityModel};
pub use oracle::{bayes_classify, posterior, xi, OracleTable, RiskEstimate};
pub use paths::{read_dataset, stop_pair, write_dataset, CountingPath, CovariatePath, Label, LabeledSample};
pub use select::{default_schedule, fit_penalized, penalty, SelectionPlan, SelectionReport, SelectionSettings, Selector};
pub use simulate::{girsanov_log_weight, simulate_dataset, CovariateKind, SimConfig};
