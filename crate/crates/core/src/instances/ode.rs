use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2, Vector2};

use crate::bundle::{wrap_angle, BasePoint, FibreBundle, FibreElement};
use crate::error::{Error, Result};
use crate::path::{CurvePath, Path, Side};
use crate::tolerance;
use crate::transport::{FibreMap, Properties, Transport};

/// `gamma[a][b][c]` is the coefficient `Gamma^a_{bc}` in the chart frame.
pub type Christoffel = [[[f64; 2]; 2]; 2];

type CoefficientFn = dyn Fn([f64; 2]) -> Christoffel + Send + Sync;

/// Connection coefficients on the sphere chart.
#[derive(Clone)]
pub struct ConnectionCoefficients {
    name: String,
    gamma: Arc<CoefficientFn>,
}

impl fmt::Debug for ConnectionCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConnectionCoefficients({})", self.name)
    }
}

impl ConnectionCoefficients {
    pub fn new(name: &str, gamma: impl Fn([f64; 2]) -> Christoffel + Send + Sync + 'static) -> Self {
        ConnectionCoefficients {
            name: name.to_string(),
            gamma: Arc::new(gamma),
        }
    }

    /// Levi-Civita connection of the round metric `diag(1, sin^2 theta)`:
    /// `Gamma^theta_{phi phi} = -sin cos`, `Gamma^phi_{theta phi} = cot`.
    pub fn round_sphere() -> Self {
        ConnectionCoefficients::new("levi-civita", |[theta, _]| {
            let (s, c) = theta.sin_cos();
            let mut g = [[[0.0; 2]; 2]; 2];
            g[0][1][1] = -s * c;
            g[1][0][1] = c / s;
            g[1][1][0] = c / s;
            g
        })
    }

    pub fn zero() -> Self {
        ConnectionCoefficients::new("zero", |_| [[[0.0; 2]; 2]; 2])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn at(&self, x: [f64; 2]) -> Result<Christoffel> {
        let g = (self.gamma)(x);
        if g.iter().flatten().flatten().all(|v| v.is_finite()) {
            Ok(g)
        } else {
            Err(Error::NonFiniteCoefficients(x[0], x[1]))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Rk4,
}

/// Stepper settings. `max_arc` records the longest arc the instance
/// tolerance is meant for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub step: f64,
    pub max_arc: f64,
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Config(format!("integrator step must be positive, got {step}")));
        }
        Ok(IntegratorConfig {
            method: Method::Rk4,
            step,
            max_arc: PI,
        })
    }

    /// Instance tolerance: the default bound at the default step, scaled
    /// with the fourth power of the step beyond it.
    pub fn instance_tolerance(&self) -> f64 {
        tolerance::RK4_INSTANCE * (self.step / tolerance::RK4_STEP).powi(4).max(1.0)
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig::rk4(tolerance::RK4_STEP).expect("positive step")
    }
}

/// Linear transport solving `du^a/dr = -Gamma^a_{bc}(p(r)) dp^b/dr u^c`
/// along chart curves with a fixed-step RK4 stepper. Integration is split
/// at the kinks of the path and runs backwards when `t < s`.
#[derive(Clone, Debug)]
pub struct LinearOdeTransport {
    name: String,
    bundle: FibreBundle,
    gamma: ConnectionCoefficients,
    cfg: IntegratorConfig,
    properties: Properties,
}

impl LinearOdeTransport {
    /// `metric_compatible` declares that `gamma` preserves the bundle metric.
    pub fn new(
        name: &str,
        bundle: FibreBundle,
        gamma: ConnectionCoefficients,
        cfg: IntegratorConfig,
        metric_compatible: bool,
    ) -> Result<Self> {
        if bundle.dim() != Some(2) || bundle.base_id() != "sphere" {
            return Err(Error::WrongBundleKind {
                expected: "rank-2 vector bundle over the sphere chart",
            });
        }
        let mut properties = Properties::LOCAL | Properties::REPARAM_INVARIANT | Properties::LINEAR;
        if metric_compatible {
            if bundle.metric().is_none() {
                return Err(Error::WrongBundleKind { expected: "metric" });
            }
            properties |= Properties::METRIC_CONSISTENT;
        }
        Ok(LinearOdeTransport {
            name: name.to_string(),
            bundle,
            gamma,
            cfg,
            properties,
        })
    }

    /// Levi-Civita transport on the round unit sphere.
    pub fn sphere_levi_civita(step: f64) -> Result<Self> {
        LinearOdeTransport::new(
            "sphere-levi-civita",
            FibreBundle::sphere_tangent(),
            ConnectionCoefficients::round_sphere(),
            IntegratorConfig::rk4(step)?,
            true,
        )
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.cfg
    }

    /// The transport matrix from `s` to `t` in the chart frames.
    pub fn matrix(&self, p: &Path, s: f64, t: f64) -> Result<Matrix2<f64>> {
        let c = p
            .as_curve()
            .ok_or_else(|| Error::InvalidPath("ODE transport needs a chart curve".into()))?;
        let mut m = Matrix2::identity();
        if s == t {
            return Ok(m);
        }
        let (lo, hi) = (s.min(t), s.max(t));
        let mut marks = vec![s];
        let mut inner: Vec<f64> = c.kinks.iter().copied().filter(|&k| lo < k && k < hi).collect();
        if t < s {
            inner.reverse();
        }
        marks.extend(inner);
        marks.push(t);
        for w in marks.windows(2) {
            m = self.segment(c, w[0], w[1], m)?;
        }
        Ok(m)
    }

    fn segment(&self, c: &CurvePath, a: f64, b: f64, mut m: Matrix2<f64>) -> Result<Matrix2<f64>> {
        let len = (b - a).abs();
        let n = ((len / self.cfg.step).ceil() as usize).max(1);
        let (seg_lo, seg_hi) = (a.min(b), a.max(b));
        let rhs = |r: f64, m: &Matrix2<f64>| -> Result<Matrix2<f64>> {
            Ok(-self.coefficient_matrix(c, r, seg_lo, seg_hi)? * m)
        };
        let mut r0 = a;
        for i in 1..=n {
            let r1 = if i == n { b } else { a + (b - a) * (i as f64 / n as f64) };
            let h = r1 - r0;
            let mid = r0 + 0.5 * h;
            let k1 = rhs(r0, &m)?;
            let k2 = rhs(mid, &(m + k1 * (0.5 * h)))?;
            let k3 = rhs(mid, &(m + k2 * (0.5 * h)))?;
            let k4 = rhs(r1, &(m + k3 * h))?;
            m += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            r0 = r1;
        }
        Ok(m)
    }

    /// `A^a_c(r) = Gamma^a_{bc}(p(r)) dp^b/dr`, with one-sided velocities
    /// taken from inside the segment `[seg_lo, seg_hi]`.
    fn coefficient_matrix(&self, c: &CurvePath, r: f64, seg_lo: f64, seg_hi: f64) -> Result<Matrix2<f64>> {
        let x = c.curve.point(r);
        if !(x[0] >= tolerance::POLE_MARGIN && x[0] <= PI - tolerance::POLE_MARGIN) {
            return Err(Error::ChartExit(x[0]));
        }
        let side = if r >= seg_hi { Side::Left } else { Side::Right };
        let v = match c.curve.velocity(r, side) {
            Some(v) => v,
            None => self.finite_difference(c, r, seg_lo, seg_hi),
        };
        let g = self.gamma.at(x)?;
        let mut a = Matrix2::zeros();
        for i in 0..2 {
            for k in 0..2 {
                a[(i, k)] = g[i][0][k] * v[0] + g[i][1][k] * v[1];
            }
        }
        Ok(a)
    }

    fn finite_difference(&self, c: &CurvePath, r: f64, seg_lo: f64, seg_hi: f64) -> [f64; 2] {
        let d = self.cfg.step / 10.0;
        let (a, b) = if r - d >= seg_lo && r + d <= seg_hi {
            (r - d, r + d)
        } else if r + d <= seg_hi {
            (r, r + d)
        } else if r - d >= seg_lo {
            (r - d, r)
        } else {
            (seg_lo, seg_hi)
        };
        if b <= a {
            return [0.0, 0.0];
        }
        let (pa, pb) = (c.curve.point(a), c.curve.point(b));
        [(pb[0] - pa[0]) / (b - a), wrap_angle(pb[1] - pa[1]) / (b - a)]
    }
}

impl Transport for LinearOdeTransport {
    fn name(&self) -> &str {
        &self.name
    }

    fn bundle(&self) -> &FibreBundle {
        &self.bundle
    }

    fn properties(&self) -> Properties {
        self.properties
    }

    fn tolerance(&self) -> f64 {
        self.cfg.instance_tolerance()
    }

    fn apply(&self, p: &Path, s: f64, t: f64, u: &FibreElement) -> Result<FibreElement> {
        let v = u.as_vector().ok_or(Error::WrongFibreKind { expected: "vector" })?;
        let m = self.matrix(p, s, t)?;
        let out = m * Vector2::new(v[0], v[1]);
        Ok(FibreElement::vector(
            BasePoint::Chart(p.as_curve().expect("checked by matrix").curve.point(t)),
            nalgebra::DVector::from_column_slice(out.as_slice()),
        ))
    }

    fn map(&self, p: &Path, s: f64, t: f64) -> Result<FibreMap> {
        let m = self.matrix(p, s, t)?;
        Ok(FibreMap::Matrix(DMatrix::from_column_slice(2, 2, m.as_slice())))
    }
}

/// Rotation angle of a map of the fibre over `x` into itself, measured in
/// an orthonormal frame of the metric `g` at `x`.
pub fn rotation_angle(m: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<f64> {
    let l = g.clone().cholesky().ok_or(Error::NotInvertible)?.l();
    let l_inv = l.clone().try_inverse().ok_or(Error::NotInvertible)?;
    // coordinates w = L^T u are orthonormal
    let r = l.transpose() * m * l_inv.transpose();
    Ok((r[(1, 0)] - r[(0, 1)]).atan2(r[(0, 0)] + r[(1, 1)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{latitude_arc, meridian_arc, quarter_equator, Interval};
    use crate::transport::TransportExt;

    fn lc() -> LinearOdeTransport {
        LinearOdeTransport::sphere_levi_civita(1e-3).unwrap()
    }

    #[test]
    fn coefficients_vanish_on_the_equator() {
        let g = ConnectionCoefficients::round_sphere().at([PI / 2.0, 0.3]).unwrap();
        assert!(g[0][1][1].abs() < 1e-16);
        assert!(g[1][0][1].abs() < 1e-16);
    }

    #[test]
    fn frame_is_parallel_along_the_equator() {
        let t = lc();
        let p = quarter_equator();
        let m = t.matrix(&p, 0.0, 1.0).unwrap();
        assert!((m - Matrix2::identity()).amax() < 1e-15);
    }

    #[test]
    fn latitude_circle_rotates_by_the_closed_form_angle() {
        // around the circle theta = theta0, parallel transport rotates the
        // frame by 2 pi cos(theta0) relative to the coordinate frame
        let theta0: f64 = 1.0;
        let p = latitude_arc(theta0, 0.0, 2.0 * PI, Interval::unit()).unwrap();
        let t = lc();
        let m = t.fibre_map(&p, 0.0, 1.0).unwrap();
        let FibreMap::Matrix(m) = m else { unreachable!() };
        let g = crate::bundle::BundleMetric::round_sphere().at(&BasePoint::chart(theta0, 0.0));
        let angle = rotation_angle(&m, &g).unwrap();
        let expected = wrap_angle(-2.0 * PI * theta0.cos());
        assert!((wrap_angle(angle - expected)).abs() < 1e-9, "{angle} vs {expected}");
    }

    #[test]
    fn meridians_are_geodesics() {
        let p = meridian_arc(0.4, 0.5, 2.5, Interval::unit()).unwrap();
        let m = lc().matrix(&p, 0.0, 1.0).unwrap();
        // d_theta stays d_theta
        assert!((m[(0, 0)] - 1.0).abs() < 1e-12 && m[(1, 0)].abs() < 1e-12);
        // d_phi scales with 1 / sin theta
        let expected = 0.5f64.sin() / 2.5f64.sin();
        assert!((m[(1, 1)] - expected).abs() < 1e-10);
    }

    #[test]
    fn backward_integration_inverts_forward() {
        let p = meridian_arc(0.4, 0.5, 2.5, Interval::unit()).unwrap();
        let t = lc();
        let fwd = t.matrix(&p, 0.1, 0.9).unwrap();
        let bwd = t.matrix(&p, 0.9, 0.1).unwrap();
        assert!((bwd * fwd - Matrix2::identity()).amax() < 1e-10);
        let inv = fwd.try_inverse().unwrap();
        assert!((bwd - inv).amax() < 1e-10);
    }

    #[test]
    fn chart_exit_is_reported() {
        let curve = crate::path::FnCurve::new(|s: f64| [1.0 - s, 0.0], Some(|_s: f64| [-1.0, 0.0]));
        let p = Path::curve("to-pole", Interval::unit(), Arc::new(curve), vec![]);
        assert!(matches!(lc().matrix(&p, 0.0, 1.0), Err(Error::ChartExit(_))));
    }

    #[test]
    fn finite_differences_match_analytic_velocities() {
        let p = latitude_arc(1.2, 0.0, 1.0, Interval::unit()).unwrap();
        let c = p.as_curve().unwrap();
        let fd_curve = crate::path::FnCurve::new(
            {
                let inner = c.curve.clone();
                move |s| inner.point(s)
            },
            None::<fn(f64) -> [f64; 2]>,
        );
        let q = Path::curve("fd", Interval::unit(), Arc::new(fd_curve), vec![]);
        let t = lc();
        let a = t.matrix(&p, 0.0, 1.0).unwrap();
        let b = t.matrix(&q, 0.0, 1.0).unwrap();
        assert!((a - b).amax() < 1e-8);
    }
}
