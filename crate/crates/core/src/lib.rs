//! Dirichlet-multinomial regression (DMR) topic models.
//!
//! A DMR topic model replaces the single corpus-wide Dirichlet prior of LDA
//! with a document-specific prior whose parameters are a log-linear function
//! of observed document features:
//!
//! ```text
//! alpha[d][t] = exp(x_d . lambda_t)
//! ```
//!
//! Topic assignments are inferred with collapsed Gibbs sampling and the
//! feature weights `lambda` are fitted by stochastic EM, alternating sweeps
//! with quasi-Newton optimization of the collapsed log likelihood.
//!
//! Modules:
//! - [`corpus`]: ingestion, vocabulary and feature dictionaries, metadata encoders
//! - [`numeric`]: special functions, log-sum-exp and an L-BFGS minimizer
//! - [`sampler`]: topic state, count tables and the collapsed Gibbs sweep
//! - [`trainer`]: DMR objective and gradient, stochastic EM, the LDA baseline
//! - [`eval`]: held-out perplexity, empirical likelihood, metadata ranking, reports

pub mod corpus;
pub mod eval;
pub mod numeric;
pub mod sampler;
pub mod trainer;

mod error;

pub use error::{Error, Result};
