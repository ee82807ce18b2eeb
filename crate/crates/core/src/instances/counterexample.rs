//! Maps with the signature of a transport that break exactly one law.
//!
//! All of them live on a graph base with `R^2` fibres. Writing `k_x` for
//! the index of node `x` and `R(a)` for the rotation by `a`:
//!
//! * `group_breaking`: `R(c (k_t - k_s)^3)`, odd but not additive.
//! * `metric_breaking`: `2^(k_t - k_s)`, a group of scalings.
//! * `nonlinear`: `R(c (k_s - k_t) |u|) u`, norm-dependent rotation.
//! * `nonlocal`: `R(c n (k_t - k_s))` with `n` the number of distinct nodes
//!   on the whole path, which shrinks under restriction.
//! * `non_reparam_invariant`: `R(c (t - s))`, reads the raw parameters.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DVector, Rotation2, Vector2};

use crate::bundle::{BaseSpace, BundleMetric, FibreBundle, FibreElement, FibreKind};
use crate::error::{Error, Result};
use crate::path::Path;
use crate::tolerance;
use crate::transport::{Properties, Transport};

const RATE: f64 = 0.7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CounterexampleKind {
    Nonlocal,
    NonReparamInvariant,
    Nonlinear,
    MetricBreaking,
    GroupBreaking,
}

impl CounterexampleKind {
    pub const ALL: [CounterexampleKind; 5] = [
        CounterexampleKind::Nonlocal,
        CounterexampleKind::NonReparamInvariant,
        CounterexampleKind::Nonlinear,
        CounterexampleKind::MetricBreaking,
        CounterexampleKind::GroupBreaking,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CounterexampleKind::Nonlocal => "nonlocal",
            CounterexampleKind::NonReparamInvariant => "non_reparam_invariant",
            CounterexampleKind::Nonlinear => "nonlinear",
            CounterexampleKind::MetricBreaking => "metric_breaking",
            CounterexampleKind::GroupBreaking => "group_breaking",
        }
    }

    /// Id of the law the construction breaks.
    pub fn broken_law(&self) -> &'static str {
        match self {
            CounterexampleKind::Nonlocal => "2.5/2.7",
            CounterexampleKind::NonReparamInvariant => "2.6",
            CounterexampleKind::Nonlinear => "2.8",
            CounterexampleKind::MetricBreaking => "2.9",
            CounterexampleKind::GroupBreaking => "2.2",
        }
    }
}

impl fmt::Display for CounterexampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CounterexampleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CounterexampleKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownInstance(format!("counterexample:{s}")))
    }
}

#[derive(Clone, Debug)]
pub struct Counterexample {
    kind: CounterexampleKind,
    name: String,
    bundle: FibreBundle,
}

impl Counterexample {
    pub fn new(kind: CounterexampleKind) -> Self {
        let base = BaseSpace::graph("w4", &["w0", "w1", "w2", "w3"]);
        let bundle = FibreBundle::new(base, FibreKind::Vector { dim: 2 }).expect("valid bundle");
        // the nonlinear map is not compared against a metric
        let bundle = if kind == CounterexampleKind::Nonlinear {
            bundle
        } else {
            bundle.with_metric(BundleMetric::euclidean(2))
        };
        Counterexample {
            kind,
            name: format!("counterexample:{}", kind.name()),
            bundle,
        }
    }

    pub fn kind(&self) -> CounterexampleKind {
        self.kind
    }
}

impl Transport for Counterexample {
    fn name(&self) -> &str {
        &self.name
    }

    fn bundle(&self) -> &FibreBundle {
        &self.bundle
    }

    fn properties(&self) -> Properties {
        let all =
            Properties::LOCAL | Properties::REPARAM_INVARIANT | Properties::LINEAR | Properties::METRIC_CONSISTENT;
        match self.kind {
            CounterexampleKind::Nonlocal => all - Properties::LOCAL,
            CounterexampleKind::NonReparamInvariant => all - Properties::REPARAM_INVARIANT,
            CounterexampleKind::Nonlinear => all - Properties::LINEAR - Properties::METRIC_CONSISTENT,
            CounterexampleKind::MetricBreaking => all - Properties::METRIC_CONSISTENT,
            CounterexampleKind::GroupBreaking => all,
        }
    }

    fn tolerance(&self) -> f64 {
        tolerance::CLOSED_FORM
    }

    fn apply(&self, p: &Path, s: f64, t: f64, u: &FibreElement) -> Result<FibreElement> {
        let x = p.eval(s)?;
        let y = p.eval(t)?;
        let index = |pt: &crate::bundle::BasePoint| {
            pt.node()
                .map(|n| n as f64)
                .ok_or(Error::WrongBundleKind { expected: "graph" })
        };
        let (ks, kt) = (index(&x)?, index(&y)?);
        let v = u.as_vector().ok_or(Error::WrongFibreKind { expected: "vector" })?;
        let v = Vector2::new(v[0], v[1]);
        let out = match self.kind {
            CounterexampleKind::GroupBreaking => Rotation2::new(RATE * (kt - ks).powi(3)) * v,
            CounterexampleKind::MetricBreaking => v * 2f64.powi((kt - ks) as i32),
            CounterexampleKind::Nonlinear => Rotation2::new(RATE * (ks - kt) * v.norm()) * v,
            CounterexampleKind::Nonlocal => {
                let n = p
                    .as_discrete()
                    .map(|d| d.trace_nodes().len())
                    .ok_or_else(|| Error::InvalidPath("needs a piecewise path".into()))?;
                Rotation2::new(RATE * n as f64 * (kt - ks)) * v
            }
            CounterexampleKind::NonReparamInvariant => Rotation2::new(RATE * (t - s)) * v,
        };
        Ok(FibreElement::vector(y, DVector::from_column_slice(out.as_slice())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip_through_names() {
        for k in CounterexampleKind::ALL {
            assert_eq!(k.name().parse::<CounterexampleKind>().unwrap(), k);
        }
        assert!("bogus".parse::<CounterexampleKind>().is_err());
    }

    #[test]
    fn declared_properties_omit_the_broken_law() {
        let c = Counterexample::new(CounterexampleKind::Nonlocal);
        assert!(!c.properties().contains(Properties::LOCAL));
        assert!(c.properties().contains(Properties::LINEAR));
    }
}
