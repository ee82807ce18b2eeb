use nalgebra::DMatrix;

use crate::bundle::{BaseSpace, BundleMetric, FibreBundle, FibreElement, FibreKind};
use crate::error::{Error, Result};
use crate::path::Path;
use crate::transport::{FibreMap, Properties, Transport};

/// A path-independent family `P(x, y)` of fibre maps over a finite base,
/// stored as a full table and checked for the cocycle law on construction.
#[derive(Clone, Debug)]
pub struct Parallelization {
    table: Vec<Vec<DMatrix<f64>>>,
}

impl Parallelization {
    /// `table[x][y] = P(x, y)`. Fails unless `P(z, y) P(x, z) = P(x, y)` and
    /// `P(x, x) = id` for every triple, within `tol` entrywise.
    pub fn new(table: Vec<Vec<DMatrix<f64>>>, tol: f64) -> Result<Self> {
        let n = table.len();
        if n == 0 || table.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidBundle("parallelization table must be square".into()));
        }
        let dim = table[0][0].nrows();
        for row in &table {
            for m in row {
                if m.shape() != (dim, dim) {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: m.nrows(),
                    });
                }
            }
        }
        let id = DMatrix::identity(dim, dim);
        let mut worst: f64 = 0.0;
        for x in 0..n {
            worst = worst.max((&table[x][x] - &id).amax());
            for y in 0..n {
                for z in 0..n {
                    let composed = &table[z][y] * &table[x][z];
                    worst = worst.max((composed - &table[x][y]).amax());
                }
            }
        }
        if worst.is_nan() || worst > tol {
            return Err(Error::CocycleViolation(worst));
        }
        Ok(Parallelization { table })
    }

    /// `P(x, y) = A_y^{-1} A_x` from frames `A_x` and their inverses.
    pub fn from_frames(frames: &[DMatrix<f64>], inverses: &[DMatrix<f64>], tol: f64) -> Result<Self> {
        if frames.len() != inverses.len() {
            return Err(Error::DimensionMismatch {
                expected: frames.len(),
                found: inverses.len(),
            });
        }
        let table = (0..frames.len())
            .map(|x| (0..frames.len()).map(|y| &inverses[y] * &frames[x]).collect())
            .collect();
        Parallelization::new(table, tol)
    }

    pub fn dim(&self) -> usize {
        self.table[0][0].nrows()
    }

    pub fn nodes(&self) -> usize {
        self.table.len()
    }

    pub fn get(&self, x: usize, y: usize) -> &DMatrix<f64> {
        &self.table[x][y]
    }
}

/// Signed monomial matrix with power-of-two entries and its exact inverse.
/// `perm[i]` is the column of the nonzero entry of row `i`.
pub fn dyadic_monomial(perm: &[usize], signs: &[f64], exponents: &[i32]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = perm.len();
    let mut m = DMatrix::zeros(n, n);
    let mut inv = DMatrix::zeros(n, n);
    for i in 0..n {
        let v = signs[i] * 2f64.powi(exponents[i]);
        m[(i, perm[i])] = v;
        inv[(perm[i], i)] = 1.0 / v;
    }
    (m, inv)
}

/// `u -> P(p(s), p(t)) u`.
#[derive(Clone, Debug)]
pub struct ParallelizationTransport {
    name: String,
    bundle: FibreBundle,
    p: Parallelization,
}

impl ParallelizationTransport {
    pub fn new(name: &str, p: Parallelization, bundle: FibreBundle) -> Result<Self> {
        if bundle.dim() != Some(p.dim()) {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                found: bundle.dim().unwrap_or(0),
            });
        }
        if bundle.base().nodes().len() != p.nodes() {
            return Err(Error::InvalidBundle("parallelization does not cover the base".into()));
        }
        Ok(ParallelizationTransport {
            name: name.to_string(),
            bundle,
            p,
        })
    }

    /// Graph base with `R^n` fibres and frames `A_x`; the bundle metric is
    /// `g_x = A_x^T A_x`, for which every `P(x, y)` is an isometry.
    pub fn from_frames(
        name: &str,
        base: BaseSpace,
        frames: Vec<DMatrix<f64>>,
        inverses: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let p = Parallelization::from_frames(&frames, &inverses, 0.0)?;
        let metric = BundleMetric::new("frame-pullback", true, move |x| {
            let a = &frames[x.node().expect("graph base")];
            a.transpose() * a
        });
        let bundle = FibreBundle::new(base, FibreKind::Vector { dim: p.dim() })?.with_metric(metric);
        ParallelizationTransport::new(name, p, bundle)
    }

    pub fn parallelization(&self) -> &Parallelization {
        &self.p
    }
}

impl Transport for ParallelizationTransport {
    fn name(&self) -> &str {
        &self.name
    }

    fn bundle(&self) -> &FibreBundle {
        &self.bundle
    }

    fn properties(&self) -> Properties {
        Properties::LOCAL | Properties::REPARAM_INVARIANT | Properties::LINEAR | Properties::GLOBAL
    }

    fn apply(&self, p: &Path, s: f64, t: f64, u: &FibreElement) -> Result<FibreElement> {
        let x = p.eval(s)?.node().ok_or(Error::WrongBundleKind { expected: "graph" })?;
        let y_point = p.eval(t)?;
        let y = y_point.node().ok_or(Error::WrongBundleKind { expected: "graph" })?;
        let v = u.as_vector().ok_or(Error::WrongFibreKind { expected: "vector" })?;
        Ok(FibreElement::vector(y_point, self.p.get(x, y) * v))
    }

    fn map(&self, p: &Path, s: f64, t: f64) -> Result<FibreMap> {
        let x = p.eval(s)?.node().ok_or(Error::WrongBundleKind { expected: "graph" })?;
        let y = p.eval(t)?.node().ok_or(Error::WrongBundleKind { expected: "graph" })?;
        Ok(FibreMap::Matrix(self.p.get(x, y).clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_inverse_is_exact() {
        let (m, inv) = dyadic_monomial(&[1, 0, 2], &[-1.0, 1.0, 1.0], &[3, -2, 5]);
        assert_eq!(&m * &inv, DMatrix::identity(3, 3));
        assert_eq!(&inv * &m, DMatrix::identity(3, 3));
    }

    #[test]
    fn broken_cocycle_is_rejected() {
        let id = DMatrix::<f64>::identity(2, 2);
        let twice = &id * 2.0;
        let table = vec![vec![id.clone(), twice.clone()], vec![twice, id]];
        assert!(matches!(
            Parallelization::new(table, 0.0),
            Err(Error::CocycleViolation(_))
        ));
    }

    #[test]
    fn frame_parallelization_is_a_cocycle() {
        let (a0, i0) = dyadic_monomial(&[0, 1], &[1.0, 1.0], &[0, 0]);
        let (a1, i1) = dyadic_monomial(&[1, 0], &[-1.0, 1.0], &[1, -1]);
        let p = Parallelization::from_frames(&[a0, a1], &[i0, i1], 0.0).unwrap();
        assert_eq!(p.get(0, 1) * p.get(1, 0), DMatrix::identity(2, 2));
    }
}
