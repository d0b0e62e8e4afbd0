//! Variance attribution, main-sequence fitting and condition comparisons.

pub mod compare;
pub mod fit;
pub mod pvaf;
pub mod tdist;

pub use compare::{
    ci_overlap_report, difference_curve, paired_t_test, ConditionOverlap, DifferenceCurve, Overlap, TTestResult,
};
pub use fit::{fit_exponential, fit_model, fit_power_law, MainSequenceFit, Model};
pub use pvaf::{aggregate_pvaf, incremental_pvaf, incremental_pvaf_values, IncrementalPvaf, PvafTable};
