//! Checkers that compare simulated quantities against propagation bounds.

pub mod annulus;
pub mod density;
pub mod holder;
pub mod lrb;
pub mod moments;
pub mod report;
pub mod truncation;

pub use annulus::{annulus_mvb, AnnulusParams};
pub use density::{density_window, density_window_check, scan_radii, DensityWindow};
pub use holder::check_operator_holder;
pub use lrb::{lrb_scan, LrbPoint, LrbSample, LrbScan};
pub use moments::{check_moment_bounds, MomentParams, MomentReports};
pub use report::{midpoint_split, min_gap, minimal_constant, BoundReport, Verdict, EXACT_TOL, FIT_TOL};
pub use truncation::truncation_consistency;
