//! Numerical toolkit for Dixmier-type traces on weighted Marcinkiewicz spaces.

// `!(x < y)` guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod counterexample;
pub mod error;
pub mod functionals;
pub mod logscale;
pub mod piecewise;
pub mod quad;
pub mod series;
pub mod spectral;
pub mod weights;

pub use counterexample::{
    build_counterexample, counterexample_report, gap_window, sedaev_discrepancy, window_mean, CounterexampleReport,
};
pub use error::{Error, Result};
pub use functionals::{
    cesaro, check_adjusted_agreement, check_lower_estimate_lemma, check_upper_estimate_lemmas, cutoff_level,
    dx_bound_constant, heat_kernel_at, heat_kernel_series, lidskii_cutoff_at, lidskii_cutoff_series, partial_sum_ratio,
    partial_sum_ratio_at, pi_window_fn, pi_window_series, pi_window_step, sequence_cutoff_sum, tail_gap_at,
    tail_gap_series, CutoffMode,
};
pub use logscale::{log_add, log_sub, log_sum, Dd, LogValue};
pub use piecewise::{check_eq3, Decreasing, DecreasingFunction, DecreasingStep, Dilation, StepFunction};
pub use series::{Grid, SeriesDocument, WindowSeries};
pub use spectral::{
    eigen_cutoff_sum, heat_kernel_matrix, ringrose_split, singular_values, spectrum, trace_estimate_compare,
    triangularize, weyl_check, MatrixSpec, RingroseSplit, SpectrumData, TraceComparison, Triangularization, C64,
};
pub use weights::{
    classify_good_upper_bound, classify_limit_condition, classify_sedaev, marcinkiewicz_norm_function,
    marcinkiewicz_norm_sequence, solve_exp_sqrt_level, Classification, ClassifierConfig, SequenceNorm, Verdict,
    WeightFunction,
};
