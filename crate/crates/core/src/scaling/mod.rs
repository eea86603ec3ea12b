//! Finite-size scaling of the winding-number curves: crossings of
//! consecutive sizes, extrapolation of the critical disorder and the
//! density scan that produces the curves.

mod crossing;
mod protocol;

pub use crossing::{
    collapse_points, consecutive_crossings, extrapolate_critical, intersection, BetaRule, CriticalPoint, Crossing,
    CurvePoint, Extrapolation, ScalingCurve, DISORDER_CONVENTION,
};
pub use protocol::{
    analyze_density, curves_from_runs, phase_diagram, run_scan, scan_seeds, AnalysisOptions, DensityAnalysis,
    FailedPair, RealizationRun, ScanProtocol, ScanResult,
};
