//! Holonomy of a vector transport around closed loops.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::{rotation_angle, LinearOdeTransport};
use crate::path::Path;
use crate::transport::{FibreMap, Transport, TransportExt};

/// Holonomy angle of the octant loop: the solid angle of the octant,
/// counted positively for its orientation.
pub const OCTANT_HOLONOMY: f64 = PI / 2.0;

/// The transport matrix once around `loop_path`, in the frame over its
/// start point.
pub fn holonomy_matrix(transport: &dyn Transport, loop_path: &Path) -> Result<DMatrix<f64>> {
    let d = loop_path.domain();
    if !loop_path.eval(d.lo())?.same_as(&loop_path.eval(d.hi())?) {
        return Err(Error::LoopNotClosed);
    }
    match transport.fibre_map(loop_path, d.lo(), d.hi())? {
        FibreMap::Matrix(m) => Ok(m),
        FibreMap::Permutation(_) => Err(Error::WrongFibreKind { expected: "vector" }),
    }
}

/// Signed rotation angle of the holonomy in an orthonormal frame of the
/// bundle metric at the start point (Euclidean without a metric). Only
/// two-dimensional fibres have a rotation angle.
pub fn holonomy_angle(transport: &dyn Transport, loop_path: &Path) -> Result<f64> {
    let m = holonomy_matrix(transport, loop_path)?;
    if m.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: m.nrows(),
        });
    }
    let x = loop_path.eval(loop_path.domain().lo())?;
    let g = match transport.bundle().metric() {
        Some(metric) => metric.at(&x),
        None => DMatrix::identity(2, 2),
    };
    rotation_angle(&m, &g)
}

/// Angle recovered from the deviation `|R u - u| = 2 sin(a / 2)` of a unit
/// vector under a rotation by `a`.
pub fn angle_from_deviation(deviation: f64) -> f64 {
    2.0 * (deviation / 2.0).clamp(-1.0, 1.0).asin()
}

/// One row of a step sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub step: f64,
    pub angle: f64,
    /// `|angle - oracle|` when an oracle is given, else against the
    /// finest step of the sweep.
    pub error: f64,
}

/// Levi-Civita holonomy of `loop_path` at every step size.
pub fn step_sweep(loop_path: &Path, steps: &[f64], oracle: Option<f64>) -> Result<Vec<SweepRow>> {
    let angles = steps
        .par_iter()
        .map(|&h| holonomy_angle(&LinearOdeTransport::sphere_levi_civita(h)?, loop_path))
        .collect::<Result<Vec<f64>>>()?;
    sweep_rows(steps, &angles, oracle)
}

/// Builds sweep rows from precomputed angles.
pub fn sweep_rows(steps: &[f64], angles: &[f64], oracle: Option<f64>) -> Result<Vec<SweepRow>> {
    let finest = steps
        .iter()
        .zip(angles)
        .min_by(|a, b| a.0.total_cmp(b.0))
        .map(|(_, &a)| a)
        .ok_or_else(|| Error::Config("empty step sweep".into()))?;
    let reference = oracle.unwrap_or(finest);
    Ok(steps
        .iter()
        .zip(angles)
        .map(|(&step, &angle)| SweepRow {
            step,
            angle,
            error: (angle - reference).abs(),
        })
        .collect())
}

/// Observed orders `log2(e(h) / e(h/2))` between consecutive rows, for
/// rows ordered by decreasing step with ratio 2.
pub fn observed_orders(rows: &[SweepRow]) -> Vec<f64> {
    rows.windows(2)
        .map(|w| (w[0].error / w[1].error).ln() / (w[0].step / w[1].step).ln())
        .collect()
}
