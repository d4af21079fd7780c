//! Functional view, per-pair triangle reports and cross-pair statistics.

mod crossview;
mod lmc;
mod report;

pub use crossview::{crossview_stats, CrossViewStats, PairScores};
pub use lmc::{alpha_grid, barrier_height, interpolate, lmc_curve, self_lmc_under_pruning, LmcCurve, SelfLmcPoint};
pub use report::{
    build_triangle_report, Derived, FunctionalPanel, StaticPanel, TriangleConfig, TriangleReport,
    DEFAULT_DISAGREEMENT_THRESHOLD,
};
