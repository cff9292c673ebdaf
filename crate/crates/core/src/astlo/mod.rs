//! Moving localization observables: smooth cutoffs, the multiscale ladder,
//! the remainder functional and the bad-time monitor.

pub mod bad_time;
pub mod cutoff;
pub mod observable;
pub mod remainder;
pub mod schedule;

pub use bad_time::{bad_time, monitor_bad_time, BadTime, LevelSeries};
pub use cutoff::{CutoffFunction, DEFAULT_RESOLUTION, MIN_HOLDER_POINTS};
pub use observable::{astlo_operator, astlo_weights, cutoff_argument, AstloObservable, Sign};
pub use remainder::{level_remainder, remainder_functional};
pub use schedule::{Level, MultiscaleSchedule};
