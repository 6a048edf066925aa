//! Reference class forecasting of project outcomes.
//!
//! Completed projects' forecast-versus-actual outcomes become an empirical
//! overrun distribution; the distribution's quantiles give the uplift a new
//! project's base budget needs for a chosen acceptable risk of overrun.
//!
//! - [`dataset`]: records, reference classes, CSV ingestion, overrun measure
//! - [`stats`]: empirical distribution, quantiles, summaries, tests
//! - [`uplift`]: required uplifts, uplift curves, uplift table, appraisal
//! - [`registry`]: on-disk store, pooling check, leave-one-out backtest
//! - [`cli`]: the `refcast` command line

pub mod cli;
pub mod dataset;
pub mod fixtures;
pub mod registry;
pub mod stats;
pub mod uplift;

pub use dataset::{Metric, Outcome, ProjectRecord, Provenance, ReferenceClass};
pub use stats::{OverrunDistribution, SummaryStats, TestReport};
pub use uplift::{AppraisalRequest, AppraisalResult, UpliftCurve, UpliftTableEntry};
