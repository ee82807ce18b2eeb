//! Curves on the sphere chart and the named path generators.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Rotation3, Unit, Vector3};

use super::{ChiParameter, Interval, Orientation, Path, Reparameterization};
use crate::bundle::wrap_angle;
use crate::error::{Error, Result};

/// Which one-sided derivative to take at a kink.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flipped(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// A parameterized curve in chart coordinates `(theta, phi)`.
pub trait Curve: Send + Sync {
    fn point(&self, s: f64) -> [f64; 2];

    /// Coordinate velocity, when known analytically. At a kink `side`
    /// selects the one-sided derivative.
    fn velocity(&self, _s: f64, _side: Side) -> Option<[f64; 2]> {
        None
    }
}

/// A curve given by closures.
pub struct FnCurve<P, V> {
    point: P,
    velocity: Option<V>,
}

impl<P, V> FnCurve<P, V>
where
    P: Fn(f64) -> [f64; 2] + Send + Sync,
    V: Fn(f64) -> [f64; 2] + Send + Sync,
{
    pub fn new(point: P, velocity: Option<V>) -> Self {
        FnCurve { point, velocity }
    }
}

impl<P, V> Curve for FnCurve<P, V>
where
    P: Fn(f64) -> [f64; 2] + Send + Sync,
    V: Fn(f64) -> [f64; 2] + Send + Sync,
{
    fn point(&self, s: f64) -> [f64; 2] {
        (self.point)(s)
    }

    fn velocity(&self, s: f64, _side: Side) -> Option<[f64; 2]> {
        self.velocity.as_ref().map(|v| v(s))
    }
}

pub(crate) struct Reparametrized {
    pub inner: Arc<dyn Curve>,
    pub tau: Reparameterization,
}

impl Curve for Reparametrized {
    fn point(&self, s: f64) -> [f64; 2] {
        self.inner.point(self.tau.apply(s))
    }

    fn velocity(&self, s: f64, side: Side) -> Option<[f64; 2]> {
        let inner_side = match self.tau.orientation() {
            Orientation::Preserving => side,
            Orientation::Reversing => side.flipped(),
        };
        let v = self.inner.velocity(self.tau.apply(s), inner_side)?;
        let d = self.tau.derivative(s);
        Some([v[0] * d, v[1] * d])
    }
}

/// Relative distance from the joint of a product within which the side
/// argument decides the branch.
const JOINT_SLACK: f64 = 1e-12;

pub(crate) struct Joined {
    pub first: Arc<dyn Curve>,
    pub second: Arc<dyn Curve>,
    pub chi: ChiParameter,
}

impl Joined {
    /// Parameters within rounding of the joint count as the joint, so a
    /// kink carried through a reparameterization keeps its one-sided
    /// velocities.
    fn first_side(&self, s: f64, side: Side) -> bool {
        let c0 = self.chi.c0();
        if (s - c0).abs() <= JOINT_SLACK * c0.abs().max(1.0) {
            side == Side::Left
        } else {
            s < c0
        }
    }
}

impl Curve for Joined {
    fn point(&self, s: f64) -> [f64; 2] {
        if s <= self.chi.c0() {
            self.first.point(self.chi.tau1().apply(s))
        } else {
            self.second.point(self.chi.tau2().apply(s))
        }
    }

    fn velocity(&self, s: f64, side: Side) -> Option<[f64; 2]> {
        let (curve, tau) = if self.first_side(s, side) {
            (&self.first, self.chi.tau1())
        } else {
            (&self.second, self.chi.tau2())
        };
        let v = curve.velocity(tau.apply(s), side)?;
        let d = tau.derivative(s);
        Some([v[0] * d, v[1] * d])
    }
}

/// Unit vector of the chart point `(theta, phi)`.
pub fn chart_to_unit(theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

/// Chart coordinates of a unit vector, longitude in `(-pi, pi]`.
pub fn unit_to_chart(x: &Vector3<f64>) -> [f64; 2] {
    let rho = x.x.hypot(x.y);
    [rho.atan2(x.z), x.y.atan2(x.x)]
}

/// Minor great-circle arc traversed at constant speed.
struct GreatCircleArc {
    start: Vector3<f64>,
    tangent: Vector3<f64>,
    angle: f64,
    domain: Interval,
    phi0: f64,
}

impl GreatCircleArc {
    fn lambda(&self, s: f64) -> (f64, f64) {
        let w = self.domain.width();
        if w == 0.0 {
            (0.0, 0.0)
        } else {
            (self.angle * (s - self.domain.lo()) / w, self.angle / w)
        }
    }
}

impl Curve for GreatCircleArc {
    fn point(&self, s: f64) -> [f64; 2] {
        let (l, _) = self.lambda(s);
        let x = self.start * l.cos() + self.tangent * l.sin();
        let [theta, phi] = unit_to_chart(&x);
        [theta, self.phi0 + wrap_angle(phi - self.phi0)]
    }

    fn velocity(&self, s: f64, _side: Side) -> Option<[f64; 2]> {
        let (l, dl) = self.lambda(s);
        let x = self.start * l.cos() + self.tangent * l.sin();
        let dx = (self.tangent * l.cos() - self.start * l.sin()) * dl;
        let rho2 = x.x * x.x + x.y * x.y;
        let rho = rho2.sqrt();
        let drho = (x.x * dx.x + x.y * dx.y) / rho;
        let dtheta = x.z * drho - rho * dx.z;
        let dphi = (x.x * dx.y - x.y * dx.x) / rho2;
        Some([dtheta, dphi])
    }
}

/// Arc of a latitude circle `theta = const` at constant longitude speed.
struct LatitudeArc {
    theta: f64,
    phi0: f64,
    phi1: f64,
    domain: Interval,
}

impl Curve for LatitudeArc {
    fn point(&self, s: f64) -> [f64; 2] {
        let f = unit_fraction(self.domain, s);
        [self.theta, self.phi0 + (self.phi1 - self.phi0) * f]
    }

    fn velocity(&self, _s: f64, _side: Side) -> Option<[f64; 2]> {
        Some([0.0, rate(self.domain, self.phi1 - self.phi0)])
    }
}

/// Arc of a meridian `phi = const` at constant colatitude speed.
struct MeridianArc {
    phi: f64,
    theta0: f64,
    theta1: f64,
    domain: Interval,
}

impl Curve for MeridianArc {
    fn point(&self, s: f64) -> [f64; 2] {
        let f = unit_fraction(self.domain, s);
        [self.theta0 + (self.theta1 - self.theta0) * f, self.phi]
    }

    fn velocity(&self, _s: f64, _side: Side) -> Option<[f64; 2]> {
        Some([rate(self.domain, self.theta1 - self.theta0), 0.0])
    }
}

fn unit_fraction(domain: Interval, s: f64) -> f64 {
    if domain.width() == 0.0 {
        0.0
    } else {
        (s - domain.lo()) / domain.width()
    }
}

fn rate(domain: Interval, span: f64) -> f64 {
    if domain.width() == 0.0 {
        0.0
    } else {
        span / domain.width()
    }
}

impl fmt::Debug for dyn Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Curve")
    }
}

/// Rejects curves that come closer than `margin` to a pole, or whose
/// longitude jumps (an arc sweeping too far around a pole).
fn check_chart(curve: &dyn Curve, domain: Interval, margin: f64) -> Result<()> {
    let grid = crate::tolerance::linspace(domain.lo(), domain.hi(), 513);
    let mut prev: Option<[f64; 2]> = None;
    for s in grid {
        let [theta, phi] = curve.point(s);
        if !(theta >= margin && theta <= PI - margin) {
            return Err(Error::ChartExit(theta));
        }
        if let Some(p) = prev {
            if (phi - p[1]).abs() > 1.0 {
                return Err(Error::InvalidPath("curve sweeps its longitude discontinuously".into()));
            }
        }
        prev = Some([theta, phi]);
    }
    Ok(())
}

/// Minimal distance from the poles kept by the named generators.
pub const GENERATOR_POLE_MARGIN: f64 = 0.05;

/// The minor great-circle arc from `from` to `to` (chart points), on `domain`.
pub fn great_circle_arc(from: [f64; 2], to: [f64; 2], domain: Interval) -> Result<Path> {
    let a = chart_to_unit(from[0], from[1]);
    let b = chart_to_unit(to[0], to[1]);
    let angle = a.cross(&b).norm().atan2(a.dot(&b));
    if angle > PI - 1e-9 {
        return Err(Error::InvalidPath("antipodal ends do not fix a great circle".into()));
    }
    let tangent = if angle < 1e-15 {
        // any unit vector orthogonal to a; the arc is constant anyway
        a.cross(&Vector3::z()).try_normalize(0.0).unwrap_or_else(Vector3::x)
    } else {
        (b - a * a.dot(&b)).normalize()
    };
    great_circle_from(from, tangent, angle, domain)
}

/// Great-circle arc of `length` leaving `from` in the 3D direction `tangent`.
pub fn great_circle_from(from: [f64; 2], tangent: Vector3<f64>, length: f64, domain: Interval) -> Result<Path> {
    if !(0.0..=PI).contains(&length) {
        return Err(Error::InvalidPath(format!("arc length {length} outside [0, pi]")));
    }
    let start = chart_to_unit(from[0], from[1]);
    let tangent = (tangent - start * start.dot(&tangent))
        .try_normalize(1e-12)
        .ok_or_else(|| Error::InvalidPath("tangent is parallel to the start point".into()))?;
    let curve = GreatCircleArc {
        start,
        tangent,
        angle: length,
        domain,
        phi0: from[1],
    };
    check_chart(&curve, domain, GENERATOR_POLE_MARGIN)?;
    Ok(Path::curve(
        &format!("great-circle[{:.4},{:.4}; len {:.4}]", from[0], from[1], length),
        domain,
        Arc::new(curve),
        Vec::new(),
    ))
}

/// Arc of the latitude circle `theta` from longitude `phi0` to `phi1`.
pub fn latitude_arc(theta: f64, phi0: f64, phi1: f64, domain: Interval) -> Result<Path> {
    let curve = LatitudeArc {
        theta,
        phi0,
        phi1,
        domain,
    };
    check_chart(&curve, domain, crate::tolerance::POLE_MARGIN)?;
    Ok(Path::curve(
        &format!("latitude[{theta:.4}; {phi0:.4}->{phi1:.4}]"),
        domain,
        Arc::new(curve),
        Vec::new(),
    ))
}

/// Arc of the meridian `phi` from colatitude `theta0` to `theta1`.
pub fn meridian_arc(phi: f64, theta0: f64, theta1: f64, domain: Interval) -> Result<Path> {
    let curve = MeridianArc {
        phi,
        theta0,
        theta1,
        domain,
    };
    check_chart(&curve, domain, crate::tolerance::POLE_MARGIN)?;
    Ok(Path::curve(
        &format!("meridian[{phi:.4}; {theta0:.4}->{theta1:.4}]"),
        domain,
        Arc::new(curve),
        Vec::new(),
    ))
}

/// Quarter of the equator, `phi: 0 -> pi/2` on `[0, 1]`.
pub fn quarter_equator() -> Path {
    latitude_arc(PI / 2.0, 0.0, PI / 2.0, Interval::unit()).expect("equator stays in the chart")
}

/// The meridian `phi = pi/2` climbing from the equator by `PI / 2 - 0.4`
/// radians. A full quarter would reach the excluded pole.
pub fn equator_meridian_arc() -> Path {
    meridian_arc(PI / 2.0, PI / 2.0, 0.4, Interval::unit()).expect("meridian arc stays in the chart")
}

/// The full equator as a closed loop on `[0, 1]`.
pub fn equator_loop() -> Path {
    latitude_arc(PI / 2.0, 0.0, 2.0 * PI, Interval::unit())
        .expect("equator stays in the chart")
        .with_crossing(0.0, 1.0)
        .expect("equator closes")
}

/// The rotation taking the octant centre `(1,1,1)/sqrt 3` onto the equator
/// point `e_x`, so that no vertex or edge of the octant meets a pole.
pub fn octant_rotation() -> Rotation3<f64> {
    let centre = Unit::new_normalize(Vector3::new(1.0, 1.0, 1.0));
    Rotation3::rotation_between(&centre, &Vector3::x_axis()).expect("non-antipodal")
}

/// Vertices of the octant triangle in chart coordinates.
pub fn octant_vertices() -> [[f64; 2]; 3] {
    let r = octant_rotation();
    [Vector3::x(), Vector3::y(), Vector3::z()].map(|e| unit_to_chart(&(r * e)))
}

/// The geodesic triangle with three right angles (an octant of the sphere,
/// solid angle `pi/2`), as a closed loop on `[0, 1]` with one third of the
/// parameter per edge. The octant is rotated off the chart poles.
pub fn octant_loop() -> Result<Path> {
    let [v1, v2, v3] = octant_vertices();
    let unit = Interval::unit();
    let e1 = great_circle_arc(v1, v2, unit)?;
    let e2 = great_circle_arc(v2, v3, unit)?;
    let e3 = great_circle_arc(v3, v1, unit)?;
    let third = 1.0 / 3.0;
    let two_thirds = 2.0 / 3.0;
    let first_two = Path::concatenate(&e1, &e2, &ChiParameter::affine(0.0, third, two_thirds, unit, unit)?)?;
    let loop_path = Path::concatenate(
        &first_two,
        &e3,
        &ChiParameter::affine(0.0, two_thirds, 1.0, Interval::new(0.0, two_thirds)?, unit)?,
    )?;
    loop_path.with_label("octant-loop").with_crossing(0.0, 1.0)
}

/// Geodesic triangle with the given chart vertices, as a loop on `[0, 1]`.
pub fn geodesic_triangle(v: [[f64; 2]; 3]) -> Result<Path> {
    let unit = Interval::unit();
    let e1 = great_circle_arc(v[0], v[1], unit)?;
    let e2 = great_circle_arc(v[1], v[2], unit)?;
    let e3 = great_circle_arc(v[2], v[0], unit)?;
    let third = 1.0 / 3.0;
    let two_thirds = 2.0 / 3.0;
    let first_two = Path::concatenate(&e1, &e2, &ChiParameter::affine(0.0, third, two_thirds, unit, unit)?)?;
    Path::concatenate(
        &first_two,
        &e3,
        &ChiParameter::affine(0.0, two_thirds, 1.0, Interval::new(0.0, two_thirds)?, unit)?,
    )?
    .with_label("geodesic-triangle")
    .with_crossing(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn octant_vertices_are_orthogonal_and_off_the_poles() {
        let v = octant_vertices();
        let u: Vec<_> = v.iter().map(|c| chart_to_unit(c[0], c[1])).collect();
        for i in 0..3 {
            assert!(u[i].dot(&u[(i + 1) % 3]).abs() < 1e-14);
            assert!(v[i][0] > 0.5 && v[i][0] < PI - 0.5);
        }
    }

    #[test]
    fn octant_loop_closes() {
        let p = octant_loop().unwrap();
        let a = p.eval(0.0).unwrap();
        let b = p.eval(1.0).unwrap();
        assert!(a.coincides(&b, 1e-12));
        assert_eq!(p.crossings(), vec![(0.0, 1.0)]);
        let kinks = p.kinks();
        assert_eq!(kinks.len(), 2);
        assert!((kinks[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn great_circle_velocity_matches_finite_differences() {
        let p = great_circle_arc([1.0, 0.2], [2.0, 1.5], Interval::unit()).unwrap();
        let c = p.as_curve().unwrap();
        for s in [0.1, 0.4, 0.77] {
            let v = c.curve.velocity(s, Side::Right).unwrap();
            let h = 1e-6;
            let a = c.curve.point(s - h);
            let b = c.curve.point(s + h);
            assert!(((b[0] - a[0]) / (2.0 * h) - v[0]).abs() < 1e-7);
            assert!(((b[1] - a[1]) / (2.0 * h) - v[1]).abs() < 1e-7);
        }
    }

    #[test]
    fn arcs_through_the_pole_are_rejected() {
        let r = great_circle_arc([0.3, 0.0], [0.3, PI - 0.01], Interval::unit());
        assert!(r.is_err());
        assert!(meridian_arc(0.0, PI / 2.0, 0.0, Interval::unit()).is_err());
    }

    #[test]
    fn great_circle_endpoints() {
        let p = great_circle_arc([1.0, 3.0], [1.4, -2.9], Interval::new(0.0, 2.0).unwrap()).unwrap();
        assert!(p
            .eval(0.0)
            .unwrap()
            .coincides(&crate::bundle::BasePoint::chart(1.0, 3.0), 1e-12));
        assert!(p
            .eval(2.0)
            .unwrap()
            .coincides(&crate::bundle::BasePoint::chart(1.4, -2.9), 1e-12));
    }
}
