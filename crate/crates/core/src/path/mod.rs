//! Paths over closed real intervals and the operations the transport laws
//! quantify over: restriction, reparameterization, inversion and products.

mod curve;
mod discrete;
mod reparam;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use curve::{
    chart_to_unit, equator_loop, equator_meridian_arc, geodesic_triangle, great_circle_arc, great_circle_from,
    latitude_arc, meridian_arc, octant_loop, octant_rotation, octant_vertices, quarter_equator, unit_to_chart, Curve,
    FnCurve, Side, GENERATOR_POLE_MARGIN,
};
pub use discrete::{ConstancyRun, DiscreteTrace};
pub use reparam::{ChiParameter, Orientation, Reparameterization};

use crate::bundle::{BasePoint, BaseSpace};
use crate::error::{Error, Result};
use crate::tolerance;

/// A closed interval `[lo, hi]`, possibly degenerate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    /// `[0, 1]`.
    pub fn unit() -> Self {
        Interval { lo: 0.0, hi: 1.0 }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Containment up to a slack proportional to the magnitude of the ends.
    pub fn contains_approx(&self, x: f64, tol: f64) -> bool {
        let slack = tol * (1.0 + self.lo.abs().max(self.hi.abs()));
        self.lo - slack <= x && x <= self.hi + slack
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn approx_eq(&self, other: &Interval, tol: f64) -> bool {
        let scale = 1.0 + self.lo.abs().max(self.hi.abs());
        (self.lo - other.lo).abs() <= tol * scale && (self.hi - other.hi).abs() <= tol * scale
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// A curve in the sphere chart together with its declared structure.
#[derive(Clone, Debug)]
pub struct CurvePath {
    pub curve: Arc<dyn Curve>,
    /// Parameters where the velocity may jump, sorted, interior to the domain.
    pub kinks: Vec<f64>,
    /// Declared self-intersections `(r, s)` with `r < s` and `p(r) = p(s)`.
    pub crossings: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub enum PathKind {
    Discrete(DiscreteTrace),
    Curve(CurvePath),
}

/// A path `p: J -> B` in a declared base space.
#[derive(Clone, Debug)]
pub struct Path {
    domain: Interval,
    base_id: String,
    label: String,
    kind: PathKind,
}

impl Path {
    /// A piecewise-constant path in a graph base.
    pub fn discrete(base: &BaseSpace, trace: DiscreteTrace) -> Result<Self> {
        let n = base.nodes().len();
        if !matches!(base, BaseSpace::Graph { .. }) {
            return Err(Error::InvalidPath("piecewise paths need a graph base".into()));
        }
        if let Some(bad) = trace.trace_nodes().into_iter().find(|&k| k >= n) {
            return Err(Error::PointNotInBase(format!("node#{bad}")));
        }
        let names: Vec<&str> = trace
            .runs()
            .iter()
            .map(|r| base.node_name(r.node).unwrap_or("?"))
            .collect();
        Ok(Path {
            domain: trace.domain(),
            base_id: base.id(),
            label: names.join(">"),
            kind: PathKind::Discrete(trace),
        })
    }

    /// Visits the named nodes in order on equal-length pieces of `domain`.
    pub fn through(base: &BaseSpace, domain: Interval, nodes: &[&str]) -> Result<Self> {
        let idx = nodes
            .iter()
            .map(|n| {
                base.node_index(n)
                    .ok_or_else(|| Error::PointNotInBase((*n).to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Path::discrete(base, DiscreteTrace::through_nodes(domain, &idx)?)
    }

    /// A sphere-chart path.
    pub fn curve(label: &str, domain: Interval, curve: Arc<dyn Curve>, kinks: Vec<f64>) -> Self {
        Path {
            domain,
            base_id: BaseSpace::Sphere.id(),
            label: label.to_string(),
            kind: PathKind::Curve(CurvePath {
                curve,
                kinks,
                crossings: Vec::new(),
            }),
        }
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn base_id(&self) -> &str {
        &self.base_id
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &PathKind {
        &self.kind
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    pub fn as_discrete(&self) -> Option<&DiscreteTrace> {
        match &self.kind {
            PathKind::Discrete(d) => Some(d),
            PathKind::Curve(_) => None,
        }
    }

    pub fn as_curve(&self) -> Option<&CurvePath> {
        match &self.kind {
            PathKind::Curve(c) => Some(c),
            PathKind::Discrete(_) => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.as_discrete().is_some()
    }

    /// Interior parameters where the path may change value (discrete) or
    /// direction (curves).
    pub fn kinks(&self) -> Vec<f64> {
        match &self.kind {
            PathKind::Discrete(d) => {
                let k = d.knots();
                if k.len() <= 2 {
                    Vec::new()
                } else {
                    k[1..k.len() - 1].to_vec()
                }
            }
            PathKind::Curve(c) => c.kinks.clone(),
        }
    }

    /// Declared crossings of a chart path. Discrete paths report none here;
    /// their self-intersections are read off the trace exactly.
    pub fn crossings(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            PathKind::Discrete(_) => Vec::new(),
            PathKind::Curve(c) => c.crossings.clone(),
        }
    }

    /// Declares the self-intersection `p(r) = p(s)`.
    pub fn with_crossing(mut self, r: f64, s: f64) -> Result<Self> {
        let a = self.eval(r)?;
        let b = self.eval(s)?;
        if !a.same_as(&b) {
            return Err(Error::InvalidPath(format!(
                "declared crossing ({r}, {s}) joins {a} and {b}"
            )));
        }
        let pair = if r <= s { (r, s) } else { (s, r) };
        if let PathKind::Curve(c) = &mut self.kind {
            if !c.crossings.contains(&pair) {
                c.crossings.push(pair);
                c.crossings.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
            }
        }
        Ok(self)
    }

    fn check_param(&self, s: f64) -> Result<f64> {
        if self.domain.contains_approx(s, tolerance::PATH_COORD) {
            Ok(self.domain.clamp(s))
        } else {
            Err(Error::ParameterOutOfDomain(s))
        }
    }

    pub fn contains_param(&self, s: f64) -> bool {
        self.domain.contains_approx(s, tolerance::PATH_COORD)
    }

    pub fn eval(&self, s: f64) -> Result<BasePoint> {
        let s = self.check_param(s)?;
        Ok(match &self.kind {
            PathKind::Discrete(d) => BasePoint::Node(d.eval(s)),
            PathKind::Curve(c) => BasePoint::Chart(c.curve.point(s)),
        })
    }

    /// `p|_j`.
    pub fn restrict(&self, j: Interval) -> Result<Self> {
        let d = self.domain;
        let contained =
            d.contains_approx(j.lo(), tolerance::PATH_COORD) && d.contains_approx(j.hi(), tolerance::PATH_COORD);
        if !contained {
            return Err(Error::IntervalNotContained {
                lo: j.lo(),
                hi: j.hi(),
                domain_lo: d.lo(),
                domain_hi: d.hi(),
            });
        }
        let j = Interval::new(d.clamp(j.lo()), d.clamp(j.hi()))?;
        let kind = match &self.kind {
            PathKind::Discrete(t) => PathKind::Discrete(t.restrict(j.lo(), j.hi())),
            PathKind::Curve(c) => PathKind::Curve(CurvePath {
                curve: c.curve.clone(),
                kinks: c.kinks.iter().copied().filter(|&k| j.lo() < k && k < j.hi()).collect(),
                crossings: c
                    .crossings
                    .iter()
                    .copied()
                    .filter(|&(r, s)| j.contains(r) && j.contains(s))
                    .collect(),
            }),
        };
        Ok(Path {
            domain: j,
            base_id: self.base_id.clone(),
            label: format!("{}|{}", self.label, j),
            kind,
        })
    }

    /// `p o tau`.
    pub fn reparameterize(&self, tau: &Reparameterization) -> Result<Self> {
        if !tau.target().approx_eq(&self.domain, tolerance::PATH_COORD) {
            return Err(Error::DomainMismatch);
        }
        let kind = match &self.kind {
            PathKind::Discrete(t) => PathKind::Discrete(t.reparameterize(tau)?),
            PathKind::Curve(c) => {
                let mut kinks: Vec<f64> = c.kinks.iter().map(|&k| tau.preimage(k)).collect();
                kinks.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                let crossings = c
                    .crossings
                    .iter()
                    .map(|&(r, s)| {
                        let (a, b) = (tau.preimage(r), tau.preimage(s));
                        if a <= b {
                            (a, b)
                        } else {
                            (b, a)
                        }
                    })
                    .collect();
                PathKind::Curve(CurvePath {
                    curve: Arc::new(curve::Reparametrized {
                        inner: c.curve.clone(),
                        tau: tau.clone(),
                    }),
                    kinks,
                    crossings,
                })
            }
        };
        Ok(Path {
            domain: tau.source(),
            base_id: self.base_id.clone(),
            label: format!("{}.{}", self.label, tau.name()),
            kind,
        })
    }

    /// The inverse path `p o (s -> 1 - s)` of a path on `[0, 1]`.
    pub fn invert(&self) -> Result<Self> {
        if !self.domain.approx_eq(&Interval::unit(), 0.0) {
            return Err(Error::NonCanonicalDomain);
        }
        let mut out = self.reparameterize(&Reparameterization::canonical_reverse())?;
        out.label = format!("{}^-1", self.label);
        Ok(out)
    }

    /// The product `(p1 p2)_chi`.
    pub fn concatenate(p1: &Path, p2: &Path, chi: &ChiParameter) -> Result<Self> {
        if p1.base_id != p2.base_id {
            return Err(Error::BaseMismatch {
                path: p2.base_id.clone(),
                bundle: p1.base_id.clone(),
            });
        }
        let tol = tolerance::PATH_COORD;
        if !chi.tau1().target().approx_eq(&p1.domain, tol) || !chi.tau2().target().approx_eq(&p2.domain, tol) {
            return Err(Error::ChiIncompatible(format!(
                "tau targets {} and {} do not match the domains {} and {}",
                chi.tau1().target(),
                chi.tau2().target(),
                p1.domain,
                p2.domain
            )));
        }
        let end = p1.eval(p1.domain.hi())?;
        let start = p2.eval(p2.domain.lo())?;
        if !end.coincides(&start, tol) {
            return Err(Error::EndpointMismatch);
        }
        let c0 = chi.c0();
        let kind = match (&p1.kind, &p2.kind) {
            (PathKind::Discrete(a), PathKind::Discrete(b)) => {
                PathKind::Discrete(DiscreteTrace::concatenate(a, b, chi)?)
            }
            (PathKind::Curve(a), PathKind::Curve(b)) => {
                let mut kinks: Vec<f64> = a.kinks.iter().map(|&k| chi.tau1().preimage(k)).collect();
                if chi.a0() < c0 && c0 < chi.b0() {
                    kinks.push(c0);
                }
                kinks.extend(b.kinks.iter().map(|&k| chi.tau2().preimage(k)));
                let mut crossings: Vec<(f64, f64)> = a
                    .crossings
                    .iter()
                    .map(|&(r, s)| (chi.tau1().preimage(r), chi.tau1().preimage(s)))
                    .collect();
                crossings.extend(
                    b.crossings
                        .iter()
                        .map(|&(r, s)| (chi.tau2().preimage(r), chi.tau2().preimage(s))),
                );
                PathKind::Curve(CurvePath {
                    curve: Arc::new(curve::Joined {
                        first: a.curve.clone(),
                        second: b.curve.clone(),
                        chi: chi.clone(),
                    }),
                    kinks,
                    crossings,
                })
            }
            _ => {
                return Err(Error::InvalidPath(
                    "cannot join a piecewise path with a chart curve".into(),
                ))
            }
        };
        Ok(Path {
            domain: chi.domain(),
            base_id: p1.base_id.clone(),
            label: format!("({}*{})", p1.label, p2.label),
            kind,
        })
    }

    /// Pointwise comparison on `samples` equispaced parameters.
    pub fn approx_eq(&self, other: &Path, samples: usize, tol: f64) -> bool {
        if self.base_id != other.base_id || !self.domain.approx_eq(&other.domain, tol) {
            return false;
        }
        tolerance::linspace(self.domain.lo(), self.domain.hi(), samples)
            .into_iter()
            .all(|s| match (self.eval(s), other.eval(s)) {
                (Ok(a), Ok(b)) => a.coincides(&b, tol),
                _ => false,
            })
    }

    /// Loads a piecewise path from
    /// `{"domain":[lo,hi],"pieces":[{"until":t,"point":name-or-index},...]}`.
    pub fn from_json(text: &str, base: &BaseSpace) -> Result<Self> {
        let doc: PathDocument = serde_json::from_str(text)?;
        let domain = Interval::new(doc.domain[0], doc.domain[1])?;
        let pieces = doc
            .pieces
            .iter()
            .map(|p| {
                let node = match &p.point {
                    PointRef::Index(i) => *i,
                    PointRef::Name(n) => base.node_index(n).ok_or_else(|| Error::PointNotInBase(n.clone()))?,
                };
                Ok((p.until, node))
            })
            .collect::<Result<Vec<_>>>()?;
        Path::discrete(base, DiscreteTrace::from_pieces(domain, &pieces)?)
    }
}

#[derive(Deserialize)]
struct PathDocument {
    domain: [f64; 2],
    pieces: Vec<PieceDocument>,
}

#[derive(Deserialize)]
struct PieceDocument {
    until: f64,
    point: PointRef,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PointRef {
    Index(usize),
    Name(String),
}
