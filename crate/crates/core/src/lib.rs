//! Heavy-tailed mixture models for binned flow-arrival counts.
//!
//! The crate fits three nested models to per-window flow counts: a discrete
//! Pareto tail alone (`P`), mixed with one exponential (`EP`), or with two
//! (`EEP`). Parameters are estimated by constrained maximum likelihood with a
//! log-barrier continuation, and the model for each trace is chosen by
//! BIC-approximated Bayes factors.
//!
//! Modules:
//! - [`dists`]: zeta-normalized Pareto and exponential components, samplers
//! - [`mixture`]: mixture pmf, likelihood, responsibilities, tail threshold
//! - [`fit`]: barrier-method MLE with quasi-Newton inner solves and restarts
//! - [`select`]: BIC, Bayes factors, nested selection, strength labels
//! - [`ingest`]: flow records to binned series, series file format
//! - [`experiments`]: synthetic validation studies and the Hill baseline

pub mod dists;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod ingest;
pub mod mixture;
pub mod rng;
pub mod select;

pub use dists::{ExpMode, ExpParams, ParetoParams};
pub use error::{Result, TailmixError};
pub use fit::{fit_mle, BarrierSchedule, FitConfig, FitDiagnostics, FittedModel};
pub use ingest::{bin_series, standard_window_sweep, FlowRecord, UptimeIntervals, STANDARD_WINDOWS};
pub use mixture::{BinnedSeries, MixtureParams, ModelKind, ModelSpec};
pub use select::{select_nested, SelectConfig, SelectionResult, Strength};
