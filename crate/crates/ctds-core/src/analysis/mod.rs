//! Everything downstream of trajectories: solution enumeration and
//! clustering, basin / search-time / FSLE maps, decay-law fitting,
//! boundary fractal-dimension estimation, Wada probes, and intermittency
//! diagnostics.

mod clusters;
mod diagnostics;
mod export;
mod fits;
mod maps;

pub use clusters::{cluster_solutions, enumerate_solutions, enumerate_solutions_capped, ClusterSet};
pub use diagnostics::{trajectory_diagnostics, DiagnosticsBundle};
pub use export::{basin_labels_ppm, basin_times_ppm, fsle_ppm, label_color, map_csv};
pub use fits::{
    fit_eta_scaling, fit_exponential_decay, fit_rate_scaling, fit_step_powerlaw, rate_law_time,
    survival_points, FitModel, ScalingFit, DEFAULT_WINDOW,
};
pub use maps::{
    basin_map, boundary_dimension, fsle_for_system, fsle_map, separation_time, wada_probe,
    BasinMap, BoxCounts, CellLabel, FsleMap, LabelBy, PlaneSpec, WadaReport,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("formula too large for exhaustive enumeration ({num_vars} > {cap} variables)")]
    TooLarge { num_vars: usize, cap: usize },
    #[error("insufficient data: need {need}, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("degenerate fit window")]
    DegenerateWindow,
    #[error("unresolved cell fraction {0} above threshold")]
    UnresolvedCells(f64),
    #[error("map has a single label, boundary dimension undefined")]
    NoBoundary,
    #[error("trace too short for diagnostics")]
    TraceTooShort,
}
