//! The transport interface and the fibre maps it induces.

mod laws;

use std::fmt;

use bitflags::bitflags;
use nalgebra::{DMatrix, DVector};

pub use laws::{
    check_axioms, check_group_law, check_identity_law, check_inverse_path_law, check_inversion, check_linearity,
    check_locality, check_metric_consistency, check_product_law, check_reparam_invariance, check_same_side_product_law,
    check_transported_sections, law_tolerance, standard_reparameterizations, CheckConfig, Failure, LawReport,
    MAX_RECORDED_FAILURES,
};
pub(crate) use laws::{rebased, special_params, Sampler};

use crate::bundle::{BasePoint, FibreBundle, FibreDescription, FibreElement, FibreValue, Section};
use crate::error::{Error, Result};
use crate::path::Path;

bitflags! {
    /// Optional properties a transport declares about itself.
    #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
    pub struct Properties: u8 {
        const LOCAL = 1;
        const REPARAM_INVARIANT = 1 << 1;
        const LINEAR = 1 << 2;
        const METRIC_CONSISTENT = 1 << 3;
        const GLOBAL = 1 << 4;
    }
}

impl Properties {
    pub fn names(&self) -> Vec<&'static str> {
        self.iter_names().map(|(n, _)| n).collect()
    }
}

/// A transport `I`: for every path `p` and parameters `s, t` a map from
/// the fibre over `p(s)` to the fibre over `p(t)`.
///
/// Implementors provide [`apply`](Transport::apply) on validated arguments;
/// callers go through [`TransportExt`], which checks the typing first.
pub trait Transport: Send + Sync {
    fn name(&self) -> &str;

    fn bundle(&self) -> &FibreBundle;

    fn properties(&self) -> Properties;

    /// Accuracy of a single application: 0 for exact instances.
    fn tolerance(&self) -> f64 {
        0.0
    }

    /// `I^p_{s->t}(u)` for `s, t` in the domain and `u` over `p(s)`. The
    /// result must lie over `p(t)`.
    fn apply(&self, p: &Path, s: f64, t: f64, u: &FibreElement) -> Result<FibreElement>;

    /// The whole map `I^p_{s->t}` on the fibre. The default enumerates
    /// finite fibres and applies the transport to the frame vectors of
    /// vector fibres; the latter is meaningful for linear transports only.
    fn map(&self, p: &Path, s: f64, t: f64) -> Result<FibreMap> {
        let x = p.eval(s)?;
        p.eval(t)?;
        let bundle = self.bundle();
        match bundle.fibre_at(&x)? {
            FibreDescription::Labels(_) => {
                let mut table = Vec::new();
                for u in bundle.fibre_elements(&x)? {
                    let v = self.apply(p, s, t, &u)?;
                    table.push(bundle.fibre_index(&v)?);
                }
                Ok(FibreMap::Permutation(table))
            }
            FibreDescription::Frame { dim, .. } => {
                let mut m = DMatrix::zeros(dim, dim);
                for j in 0..dim {
                    let e = FibreElement::vector(x.clone(), DVector::from_fn(dim, |i, _| f64::from(i == j)));
                    let v = self.apply(p, s, t, &e)?;
                    m.set_column(j, v.as_vector().expect("vector fibre"));
                }
                Ok(FibreMap::Matrix(m))
            }
        }
    }
}

impl fmt::Debug for dyn Transport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Transport({})", self.name())
    }
}

/// Validating entry points for every [`Transport`].
pub trait TransportExt: Transport {
    /// Checks that `p` lives in the bundle's base and that `s` is a parameter of `p`.
    fn check_path(&self, p: &Path, s: f64) -> Result<BasePoint> {
        let bundle_base = self.bundle().base_id();
        if p.base_id() != bundle_base {
            return Err(Error::BaseMismatch {
                path: p.base_id().to_string(),
                bundle: bundle_base,
            });
        }
        if !p.contains_param(s) {
            return Err(Error::ParameterOutOfDomain(s));
        }
        p.eval(s)
    }

    /// `I^p_{s->t}(u)` with the typing `u in pi^{-1}(p(s))` enforced.
    fn transport(&self, p: &Path, s: f64, t: f64, u: &FibreElement) -> Result<FibreElement> {
        let x = self.check_path(p, s)?;
        self.check_path(p, t)?;
        if !u.over.same_as(&x) {
            return Err(Error::ElementNotOverPathPoint(s));
        }
        self.bundle().check_element(u)?;
        let s = p.domain().clamp(s);
        let t = p.domain().clamp(t);
        let u = FibreElement {
            over: x,
            value: u.value.clone(),
        };
        self.apply(p, s, t, &u)
    }

    /// `I^p_{s->t}` as a permutation table or matrix in fibre coordinates.
    fn fibre_map(&self, p: &Path, s: f64, t: f64) -> Result<FibreMap> {
        self.check_path(p, s)?;
        self.check_path(p, t)?;
        self.map(p, p.domain().clamp(s), p.domain().clamp(t))
    }

    /// `(I^p_{s->t})^{-1}`, realized as `I^p_{t->s}`.
    fn inverse_transport(&self, p: &Path, s: f64, t: f64) -> Result<FibreMap> {
        self.fibre_map(p, t, s)
    }

    /// `t -> I^p_{s0->t}(u0)` on `grid`.
    fn propagate_section(
        &self,
        p: &Path,
        s0: f64,
        u0: &FibreElement,
        grid: &[f64],
    ) -> Result<Vec<(f64, FibreElement)>> {
        grid.iter().map(|&t| Ok((t, self.transport(p, s0, t, u0)?))).collect()
    }

    /// Largest deviation from `sigma(p(t)) = I^p_{s0->t} sigma(p(s0))` over `grid`.
    fn transported_section_deviation(&self, sigma: &Section, p: &Path, s0: f64, grid: &[f64]) -> Result<f64> {
        let x0 = self.check_path(p, s0)?;
        let u0 = sigma.at(&x0).ok_or(Error::SectionUndefinedOnPath)?;
        let mut worst: f64 = 0.0;
        for &t in grid {
            let y = self.check_path(p, t)?;
            let expected = sigma.at(&y).ok_or(Error::SectionUndefinedOnPath)?;
            let got = self.transport(p, s0, t, &u0)?;
            worst = worst.max(nan_as_inf(self.bundle().distance(&got, &expected)));
        }
        Ok(worst)
    }

    /// Whether `sigma` is an `I`-transported section along `p` with the
    /// initial parameter fixed at `s0`.
    fn is_transported_section(&self, sigma: &Section, p: &Path, s0: f64, grid: &[f64], tol: f64) -> Result<bool> {
        Ok(self.transported_section_deviation(sigma, p, s0, grid)? <= tol)
    }
}

impl<T: Transport + ?Sized> TransportExt for T {}

pub(crate) fn nan_as_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

/// A map between two fibres in fibre coordinates: a table of fibre
/// positions for finite fibres, a matrix in the frames for vector fibres.
#[derive(Clone, Debug, PartialEq)]
pub enum FibreMap {
    Permutation(Vec<usize>),
    Matrix(DMatrix<f64>),
}

impl FibreMap {
    pub fn identity_like(&self) -> FibreMap {
        match self {
            FibreMap::Permutation(p) => FibreMap::Permutation((0..p.len()).collect()),
            FibreMap::Matrix(m) => FibreMap::Matrix(DMatrix::identity(m.nrows(), m.ncols())),
        }
    }

    /// Size of the fibre (finite) or its dimension (vector).
    pub fn size(&self) -> usize {
        match self {
            FibreMap::Permutation(p) => p.len(),
            FibreMap::Matrix(m) => m.ncols(),
        }
    }

    /// `self o inner`.
    pub fn compose(&self, inner: &FibreMap) -> Result<FibreMap> {
        match (self, inner) {
            (FibreMap::Permutation(a), FibreMap::Permutation(b)) => {
                if a.len() != b.len() {
                    return Err(Error::DimensionMismatch {
                        expected: a.len(),
                        found: b.len(),
                    });
                }
                Ok(FibreMap::Permutation(b.iter().map(|&i| a[i]).collect()))
            }
            (FibreMap::Matrix(a), FibreMap::Matrix(b)) => {
                if a.ncols() != b.nrows() {
                    return Err(Error::DimensionMismatch {
                        expected: a.ncols(),
                        found: b.nrows(),
                    });
                }
                Ok(FibreMap::Matrix(a * b))
            }
            _ => Err(Error::WrongFibreKind {
                expected: "matching fibre maps",
            }),
        }
    }

    pub fn inverse(&self) -> Result<FibreMap> {
        match self {
            FibreMap::Permutation(p) => {
                let mut inv = vec![usize::MAX; p.len()];
                for (i, &j) in p.iter().enumerate() {
                    if j >= p.len() || inv[j] != usize::MAX {
                        return Err(Error::NotInvertible);
                    }
                    inv[j] = i;
                }
                Ok(FibreMap::Permutation(inv))
            }
            FibreMap::Matrix(m) => m
                .clone()
                .try_inverse()
                .map(FibreMap::Matrix)
                .ok_or(Error::NotInvertible),
        }
    }

    pub fn is_bijective(&self) -> bool {
        self.inverse().is_ok()
    }

    /// Distance between two maps: the number of disagreeing positions for
    /// tables, the largest entry difference for matrices.
    pub fn deviation(&self, other: &FibreMap) -> f64 {
        match (self, other) {
            (FibreMap::Permutation(a), FibreMap::Permutation(b)) if a.len() == b.len() => {
                a.iter().zip(b).filter(|(x, y)| x != y).count() as f64
            }
            (FibreMap::Matrix(a), FibreMap::Matrix(b)) if a.shape() == b.shape() => nan_as_inf((a - b).amax()),
            _ => f64::INFINITY,
        }
    }

    /// Applies the map to `u`, producing an element over `to`.
    pub fn apply_element(&self, bundle: &FibreBundle, u: &FibreElement, to: &BasePoint) -> Result<FibreElement> {
        match (self, &u.value) {
            (FibreMap::Permutation(p), FibreValue::Label(_)) => {
                let i = bundle.fibre_index(u)?;
                let target = bundle.fibre_elements(to)?;
                let j = *p.get(i).ok_or(Error::DimensionMismatch {
                    expected: p.len(),
                    found: i + 1,
                })?;
                target.get(j).cloned().ok_or(Error::DimensionMismatch {
                    expected: target.len(),
                    found: j + 1,
                })
            }
            (FibreMap::Matrix(m), FibreValue::Vector(v)) => {
                if m.ncols() != v.len() {
                    return Err(Error::DimensionMismatch {
                        expected: m.ncols(),
                        found: v.len(),
                    });
                }
                Ok(FibreElement::vector(to.clone(), m * v))
            }
            _ => Err(Error::WrongFibreKind {
                expected: "matching fibre map",
            }),
        }
    }

    /// Row-major entries (matrices) or the table (permutations), for serialization.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            FibreMap::Permutation(p) => serde_json::json!(p),
            FibreMap::Matrix(m) => {
                let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
                serde_json::json!(rows)
            }
        }
    }
}
