use std::fmt;
use std::sync::Arc;

use super::Interval;
use crate::error::{Error, Result};
use crate::tolerance;

/// Whether a reparameterization keeps or swaps the interval ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Preserving,
    Reversing,
}

type RealFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A monotone bijection `tau: source -> target` with its inverse and derivative.
#[derive(Clone)]
pub struct Reparameterization {
    source: Interval,
    target: Interval,
    orientation: Orientation,
    name: String,
    map: Arc<RealFn>,
    inverse: Arc<RealFn>,
    derivative: Arc<RealFn>,
}

impl fmt::Debug for Reparameterization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Reparameterization")
            .field("name", &self.name)
            .field("source", &self.source)
            .field("target", &self.target)
            .field("orientation", &self.orientation)
            .finish()
    }
}

impl Reparameterization {
    /// Builds a reparameterization from closures, checking the endpoint
    /// conditions and strict monotonicity on a sample grid.
    pub fn new(
        name: &str,
        source: Interval,
        target: Interval,
        orientation: Orientation,
        map: impl Fn(f64) -> f64 + Send + Sync + 'static,
        inverse: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let tau = Reparameterization {
            source,
            target,
            orientation,
            name: name.to_string(),
            map: Arc::new(map),
            inverse: Arc::new(inverse),
            derivative: Arc::new(derivative),
        };
        tau.validate()?;
        Ok(tau)
    }

    fn validate(&self) -> Result<()> {
        if self.source.is_degenerate() != self.target.is_degenerate() {
            return Err(Error::InvalidReparameterization(
                "a bijection cannot map a point onto an interval".into(),
            ));
        }
        let tol = 1e-12 * (1.0 + self.target.width());
        let (lo_img, hi_img) = match self.orientation {
            Orientation::Preserving => (self.target.lo(), self.target.hi()),
            Orientation::Reversing => (self.target.hi(), self.target.lo()),
        };
        if ((self.map)(self.source.lo()) - lo_img).abs() > tol || ((self.map)(self.source.hi()) - hi_img).abs() > tol {
            return Err(Error::InvalidReparameterization(format!(
                "`{}` does not map the source ends onto the target ends",
                self.name
            )));
        }
        if self.source.is_degenerate() {
            return Ok(());
        }
        let grid = tolerance::linspace(self.source.lo(), self.source.hi(), 65);
        let sign = match self.orientation {
            Orientation::Preserving => 1.0,
            Orientation::Reversing => -1.0,
        };
        for w in grid.windows(2) {
            let d = sign * ((self.map)(w[1]) - (self.map)(w[0]));
            if d.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::InvalidReparameterization(format!(
                    "`{}` is not strictly monotone",
                    self.name
                )));
            }
        }
        for &s in &grid {
            let back = (self.inverse)((self.map)(s));
            if (back - s).abs() > 1e-9 * (1.0 + self.source.width()) {
                return Err(Error::InvalidReparameterization(format!(
                    "inverse of `{}` does not invert it",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// The identity on `j`.
    pub fn identity(j: Interval) -> Self {
        Reparameterization {
            source: j,
            target: j,
            orientation: Orientation::Preserving,
            name: "id".into(),
            map: Arc::new(|s| s),
            inverse: Arc::new(|s| s),
            derivative: Arc::new(|_| 1.0),
        }
    }

    /// The affine bijection `source -> target` with the given orientation.
    pub fn affine(source: Interval, target: Interval, orientation: Orientation) -> Result<Self> {
        let (s0, sw) = (source.lo(), source.width());
        let (t0, t1, tw) = (target.lo(), target.hi(), target.width());
        let ratio = if sw > 0.0 { tw / sw } else { 0.0 };
        let name = format!(
            "affine[{},{}]->[{},{}]{}",
            source.lo(),
            source.hi(),
            t0,
            t1,
            if orientation == Orientation::Reversing {
                " reversed"
            } else {
                ""
            }
        );
        let tau = match orientation {
            Orientation::Preserving => Reparameterization::new(
                &name,
                source,
                target,
                orientation,
                move |s| t0 + (s - s0) * ratio,
                move |t| if ratio > 0.0 { s0 + (t - t0) / ratio } else { s0 },
                move |_| ratio,
            ),
            Orientation::Reversing => Reparameterization::new(
                &name,
                source,
                target,
                orientation,
                move |s| t1 - (s - s0) * ratio,
                move |t| if ratio > 0.0 { s0 + (t1 - t) / ratio } else { s0 },
                move |_| -ratio,
            ),
        }?;
        Ok(tau)
    }

    /// The canonical reversal `s -> 1 - s` of `[0, 1]`.
    pub fn canonical_reverse() -> Self {
        Reparameterization::affine(Interval::unit(), Interval::unit(), Orientation::Reversing)
            .expect("unit interval reversal")
    }

    /// `s -> lo + w ((s - lo) / w)^k` on `j`, orientation preserving.
    pub fn power(j: Interval, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidReparameterization(format!(
                "power exponent {k} must be positive"
            )));
        }
        let (lo, w) = (j.lo(), j.width());
        if w == 0.0 {
            return Ok(Reparameterization::identity(j));
        }
        Reparameterization::new(
            &format!("power^{k}"),
            j,
            j,
            Orientation::Preserving,
            move |s| lo + w * ((s - lo) / w).max(0.0).powf(k),
            move |t| lo + w * ((t - lo) / w).max(0.0).powf(1.0 / k),
            move |s| k * ((s - lo) / w).max(0.0).powf(k - 1.0),
        )
    }

    /// `self . inner`: first `inner`, then `self`.
    pub fn compose(&self, inner: &Reparameterization) -> Result<Self> {
        if !inner.target.approx_eq(&self.source, tolerance::PATH_COORD) {
            return Err(Error::DomainMismatch);
        }
        let (outer_map, inner_map) = (self.map.clone(), inner.map.clone());
        let (outer_inv, inner_inv) = (self.inverse.clone(), inner.inverse.clone());
        let (outer_d, inner_d) = (self.derivative.clone(), inner.derivative.clone());
        let inner_map_d = inner.map.clone();
        let orientation = if self.orientation == inner.orientation {
            Orientation::Preserving
        } else {
            Orientation::Reversing
        };
        Ok(Reparameterization {
            source: inner.source,
            target: self.target,
            orientation,
            name: format!("{} . {}", self.name, inner.name),
            map: Arc::new(move |s| outer_map(inner_map(s))),
            inverse: Arc::new(move |t| inner_inv(outer_inv(t))),
            derivative: Arc::new(move |s| outer_d(inner_map_d(s)) * inner_d(s)),
        })
    }

    pub fn source(&self) -> Interval {
        self.source
    }

    pub fn target(&self) -> Interval {
        self.target
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `tau(s)`, with the interval ends mapped exactly and the result
    /// clamped into the target.
    pub fn apply(&self, s: f64) -> f64 {
        let (first, last) = match self.orientation {
            Orientation::Preserving => (self.target.lo(), self.target.hi()),
            Orientation::Reversing => (self.target.hi(), self.target.lo()),
        };
        if s == self.source.lo() {
            first
        } else if s == self.source.hi() {
            last
        } else {
            self.target.clamp((self.map)(s))
        }
    }

    /// `tau^{-1}(t)`, with the ends mapped exactly.
    pub fn invert(&self, t: f64) -> f64 {
        let (at_lo, at_hi) = match self.orientation {
            Orientation::Preserving => (self.source.lo(), self.source.hi()),
            Orientation::Reversing => (self.source.hi(), self.source.lo()),
        };
        if t == self.target.lo() {
            at_lo
        } else if t == self.target.hi() {
            at_hi
        } else {
            self.source.clamp((self.inverse)(t))
        }
    }

    /// `tau^{-1}(t)`, nudged by a few ulps so that `apply` returns `t`
    /// exactly whenever some nearby float does. Keeps breakpoints of
    /// piecewise paths pointwise consistent after reparameterization.
    pub fn preimage(&self, t: f64) -> f64 {
        let s0 = self.invert(t);
        if self.apply(s0) == t {
            return s0;
        }
        let (mut up, mut down) = (s0, s0);
        for _ in 0..64 {
            up = self.source.clamp(up.next_up());
            down = self.source.clamp(down.next_down());
            if self.apply(up) == t {
                return up;
            }
            if self.apply(down) == t {
                return down;
            }
        }
        s0
    }

    /// `d tau / ds`.
    pub fn derivative(&self, s: f64) -> f64 {
        (self.derivative)(s)
    }
}

/// The parameter `chi = (a0, b0, c0; tau1, tau2)` of a path product.
#[derive(Clone, Debug)]
pub struct ChiParameter {
    a0: f64,
    b0: f64,
    c0: f64,
    tau1: Reparameterization,
    tau2: Reparameterization,
}

impl ChiParameter {
    pub fn new(a0: f64, b0: f64, c0: f64, tau1: Reparameterization, tau2: Reparameterization) -> Result<Self> {
        if !(a0 <= c0 && c0 <= b0) {
            return Err(Error::ChiIncompatible(format!(
                "need a0 <= c0 <= b0, got ({a0}, {b0}, {c0})"
            )));
        }
        if tau1.orientation() != Orientation::Preserving || tau2.orientation() != Orientation::Preserving {
            return Err(Error::ChiIncompatible("tau1 and tau2 must preserve orientation".into()));
        }
        let tol = tolerance::PATH_COORD;
        if !tau1.source().approx_eq(&Interval::new(a0, c0)?, tol)
            || !tau2.source().approx_eq(&Interval::new(c0, b0)?, tol)
        {
            return Err(Error::ChiIncompatible(
                "tau1 must start on [a0, c0] and tau2 on [c0, b0]".into(),
            ));
        }
        Ok(ChiParameter { a0, b0, c0, tau1, tau2 })
    }

    /// Affine `tau1: [a0, c0] -> j1` and `tau2: [c0, b0] -> j2`.
    pub fn affine(a0: f64, c0: f64, b0: f64, j1: Interval, j2: Interval) -> Result<Self> {
        let tau1 = Reparameterization::affine(Interval::new(a0, c0)?, j1, Orientation::Preserving)?;
        let tau2 = Reparameterization::affine(Interval::new(c0, b0)?, j2, Orientation::Preserving)?;
        ChiParameter::new(a0, b0, c0, tau1, tau2)
    }

    /// `chi^c = (0, 1, 1/2; s -> 2s, s -> 2s - 1)`.
    pub fn canonical() -> Self {
        let half = 0.5;
        let tau1 = Reparameterization::new(
            "s->2s",
            Interval::new(0.0, half).unwrap(),
            Interval::unit(),
            Orientation::Preserving,
            |s| 2.0 * s,
            |t| t / 2.0,
            |_| 2.0,
        )
        .expect("canonical tau1");
        let tau2 = Reparameterization::new(
            "s->2s-1",
            Interval::new(half, 1.0).unwrap(),
            Interval::unit(),
            Orientation::Preserving,
            |s| 2.0 * s - 1.0,
            |t| (t + 1.0) / 2.0,
            |_| 2.0,
        )
        .expect("canonical tau2");
        ChiParameter {
            a0: 0.0,
            b0: 1.0,
            c0: half,
            tau1,
            tau2,
        }
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn tau1(&self) -> &Reparameterization {
        &self.tau1
    }

    pub fn tau2(&self) -> &Reparameterization {
        &self.tau2
    }

    pub fn domain(&self) -> Interval {
        Interval::new(self.a0, self.b0).expect("validated")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_chi_values() {
        let chi = ChiParameter::canonical();
        assert_eq!(chi.tau1().apply(0.0), 0.0);
        assert_eq!(chi.tau1().apply(0.5), 1.0);
        assert_eq!(chi.tau2().apply(0.5), 0.0);
        assert_eq!(chi.tau2().apply(1.0), 1.0);
        assert_eq!(chi.tau1().apply(chi.c0()), 1.0);
        assert_eq!(chi.tau2().apply(chi.c0()), 0.0);
        assert_eq!(chi.tau1().apply(0.25), 0.5);
        assert_eq!(chi.tau2().apply(0.75), 0.5);
    }

    #[test]
    fn reverse_swaps_ends() {
        let r = Reparameterization::canonical_reverse();
        assert_eq!(r.apply(0.0), 1.0);
        assert_eq!(r.apply(1.0), 0.0);
        assert_eq!(r.apply(0.25), 0.75);
        assert_eq!(r.orientation(), Orientation::Reversing);
    }

    #[test]
    fn non_monotone_map_is_rejected() {
        let j = Interval::unit();
        let r = Reparameterization::new(
            "fold",
            j,
            j,
            Orientation::Preserving,
            |s| s + 0.3 * (4.0 * std::f64::consts::PI * s).sin(),
            |t| t,
            |_| 1.0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn wrong_orientation_in_chi_is_rejected() {
        let rev = Reparameterization::affine(
            Interval::new(0.0, 0.5).unwrap(),
            Interval::unit(),
            Orientation::Reversing,
        )
        .unwrap();
        let tau2 = ChiParameter::canonical().tau2().clone();
        assert!(matches!(
            ChiParameter::new(0.0, 1.0, 0.5, rev, tau2),
            Err(Error::ChiIncompatible(_))
        ));
    }

    #[test]
    fn compose_orientations() {
        let rev = Reparameterization::canonical_reverse();
        let twice = rev.compose(&rev).unwrap();
        assert_eq!(twice.orientation(), Orientation::Preserving);
        for s in [0.0, 0.1, 0.5, 0.9, 1.0] {
            assert!((twice.apply(s) - s).abs() < 1e-15);
        }
        let sq = Reparameterization::power(Interval::unit(), 2.0).unwrap();
        let c = sq.compose(&rev).unwrap();
        assert!((c.apply(0.25) - 0.5625).abs() < 1e-15);
        assert!((c.derivative(0.25) - (-1.5)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_source_needs_degenerate_target() {
        let p = Interval::new(0.3, 0.3).unwrap();
        assert!(Reparameterization::affine(p, Interval::unit(), Orientation::Preserving).is_err());
        let q = Interval::new(2.0, 2.0).unwrap();
        let tau = Reparameterization::affine(p, q, Orientation::Preserving).unwrap();
        assert_eq!(tau.apply(0.3), 2.0);
    }
}
