//! Game mechanic alignment estimation from playtrace corpora.
//!
//! * [`trace`]: playtraces, corpora and the `.mtl` trace log format.
//! * [`estimation`]: normalized frequency distributions, first Wasserstein
//!   distance and the signed systemic/agential alignment scores.
//! * [`arena`]: small deterministic games and scripted personas that produce
//!   corpora with known tendencies.
//! * [`report`]: quadrant labels, CSV and SVG charts, playstyle profiles and
//!   nearest-profile classification.

pub mod arena;
pub mod estimation;
pub mod report;
pub mod trace;

pub use estimation::{
    alignment_value, build_distribution, compute_chart, direction, dist_mean,
    normalized_frequencies, wasserstein1, AlignmentChart, AlignmentPoint, ChartOptions, Direction,
    EmpiricalDistribution, EstimationError,
};
pub use trace::{Condition, Corpus, MechanicId, Outcome, Playtrace, Predicate, TraceError};
