//! Depth-based homogeneity testing for functional data.
//!
//! A functional sample is a set of curves discretized on a shared grid.
//! This crate measures how central each curve is within a sample
//! (functional depth), pairs the depths of two samples into a
//! depth-versus-depth scatter, and tests the hypothesis that both samples
//! come from the same generating process by checking how tightly that
//! scatter hugs the unit diagonal.
//!
//! Modules:
//!
//! * [`curves`] — grids, samples, Gaussian-process simulation, CSV I/O.
//! * [`depth`] — FM, random-projection, and second-order integrated depths.
//! * [`halfspace`] — exact bivariate Tukey depth (used by FD2).
//! * [`ddplot`] — depth-vs-depth plots, the diagonal line fit, and the
//!   bootstrap-t homogeneity test.
//! * [`flores`] — a baseline homogeneity test comparing the deepest curves
//!   across samples.
//! * [`sim`] — Monte-Carlo power/size experiments and parameter sweeps.
//! * [`plot`] — SVG rendering of depth-vs-depth scatters.
//!
//! All randomness flows through explicit [`RngSeed`]s; every operation is a
//! pure function of its inputs, and parallel execution never changes
//! results.

pub mod curves;
pub mod ddplot;
pub mod depth;
pub mod error;
pub mod flores;
pub mod halfspace;
pub mod plot;
mod pooled_depth;
pub mod seed;
pub mod sim;

pub use curves::{
    load_sample_csv, make_grid, parse_sample_csv, sample_to_csv, simulate_sample, split_by_label,
    write_sample_csv, CsvLayout, FunctionalSample, Grid, MeanFunction, ModelSpec,
};
pub use ddplot::{
    bootstrap_test, build_ddplot, fit_ols, t_statistics, DdPlot, NullScheme, OlsFit, TestResult,
};
pub use depth::{
    fd2_depth, fm_depth, rp_depth, univariate_fm_depth, DepthConfig, DepthMethod, DepthVector,
    Fd2Config, PairBudget, RpConfig,
};
pub use error::{Error, Result};
pub use flores::{depth_in_augmented, flores_statistics, flores_test, FloresStats};
pub use halfspace::{halfspace_depth_2d, halfspace_depth_2d_oracle};
pub use seed::RngSeed;
pub use sim::{
    builtin_model, delta_sweep, m_sweep, run_experiment, ExperimentSpec, ExperimentSuite,
    PowerRow, PowerSummary, PowerTable, Protocol, TestConfig, TestMethod,
};
