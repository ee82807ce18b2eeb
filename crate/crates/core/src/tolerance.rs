//! Tolerances and sampling defaults shared by every checker.
//!
//! Exact instances are held to zero deviation. Numerical instances carry an
//! instance tolerance; laws that apply a transport twice get twice that.

/// Deviation allowed for exact (combinatorial or dyadic) instances.
pub const EXACT: f64 = 0.0;

/// Coordinate tolerance used when comparing sampled continuous paths.
pub const PATH_COORD: f64 = 1e-12;

/// Tolerance for matching a fibre element to the path point it lies over.
pub const POINT_MATCH: f64 = 1e-9;

/// Distance kept from the chart poles theta = 0 and theta = pi.
pub const POLE_MARGIN: f64 = 1e-6;

/// Default RK4 step for ODE transports.
pub const RK4_STEP: f64 = 1e-3;

/// Instance tolerance of the RK4 transport at the default step on arcs up to pi.
pub const RK4_INSTANCE: f64 = 1e-6;

/// Tolerance for laws composing two numerical transports.
pub const RK4_TWO_APPLICATION: f64 = 2.0 * RK4_INSTANCE;

/// Relative tolerance for linearity of a linear-ODE flow.
pub const LINEARITY_RELATIVE: f64 = 1e-9;

/// Tolerance for synthetic counterexamples built from closed-form rotations.
pub const CLOSED_FORM: f64 = 1e-9;

/// Default number of random trials per law.
pub const DEFAULT_TRIALS: usize = 200;

/// Default number of equispaced parameters used to compare continuous paths.
pub const DEFAULT_SAMPLE_GRID: usize = 101;

/// Default number of sampled re-anchorings when validating a lift assignment.
pub const LIFT_REANCHORINGS: usize = 100;

/// Default seed when neither a flag nor the environment supplies one.
pub const DEFAULT_SEED: u64 = 0x5eed_f1b3;

/// `n` equispaced parameters covering `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}
