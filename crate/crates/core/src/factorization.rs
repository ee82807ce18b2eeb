//! Factorizations `I_{s->t} = F_t^{-1} o F_s` of a transport along one path
//! through a fixed target set, and the gauge freedom `F_s -> D o F_s`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bundle::{BasePoint, FibreBundle, FibreDescription, FibreElement};
use crate::error::{Error, Result};
use crate::instances::dyadic_monomial;
use crate::path::Path;
use crate::transport::{Failure, FibreMap, LawReport, Properties, Transport, TransportExt};

/// A family of bijections `F_s` from the fibre over `p(s)` onto the target
/// set `Q`, stored on a finite parameter grid.
///
/// `Q` is the fibre over the anchor `p(s0)`, in fibre coordinates.
#[derive(Clone, Debug)]
pub struct Factorization {
    bundle: FibreBundle,
    s0: f64,
    anchor: BasePoint,
    target: FibreDescription,
    grid: Vec<f64>,
    maps: Vec<FibreMap>,
}

impl Factorization {
    /// A family given explicitly on `grid`. Every map must be invertible
    /// and of the size of the anchor fibre.
    pub fn new(bundle: &FibreBundle, p: &Path, s0: f64, grid: Vec<f64>, maps: Vec<FibreMap>) -> Result<Self> {
        if grid.len() != maps.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: maps.len(),
            });
        }
        let anchor = p.eval(s0)?;
        let target = bundle.fibre_at(&anchor)?;
        for (&s, m) in grid.iter().zip(&maps) {
            p.eval(s)?;
            if m.size() != target.size() {
                return Err(Error::DimensionMismatch {
                    expected: target.size(),
                    found: m.size(),
                });
            }
            m.inverse()?;
        }
        Ok(Factorization {
            bundle: bundle.clone(),
            s0,
            anchor,
            target,
            grid,
            maps,
        })
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn anchor(&self) -> &BasePoint {
        &self.anchor
    }

    /// The target set `Q`.
    pub fn target(&self) -> &FibreDescription {
        &self.target
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn maps(&self) -> &[FibreMap] {
        &self.maps
    }

    pub fn bundle(&self) -> &FibreBundle {
        &self.bundle
    }

    /// `F_s`; only grid parameters are defined.
    pub fn at(&self, s: f64) -> Result<&FibreMap> {
        self.grid
            .iter()
            .position(|&g| g == s)
            .map(|i| &self.maps[i])
            .ok_or(Error::ParameterNotInFamily(s))
    }

    /// `F_t^{-1} o F_s`.
    pub fn induced(&self, s: f64, t: f64) -> Result<FibreMap> {
        self.at(t)?.inverse()?.compose(self.at(s)?)
    }

    /// `{"s0": .., "grid": [..], "maps": [..]}` with permutation tables or
    /// row-major matrices.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "s0": self.s0,
            "grid": self.grid,
            "maps": self.maps.iter().map(FibreMap::to_json).collect::<Vec<_>>(),
        })
    }
}

/// `F_s = I_{s->s0}` for every grid parameter; `F_{s0}` is the identity.
pub fn canonical_factorization(transport: &dyn Transport, p: &Path, s0: f64, grid: &[f64]) -> Result<Factorization> {
    transport.check_path(p, s0)?;
    let maps = grid
        .par_iter()
        .map(|&s| transport.fibre_map(p, s, s0))
        .collect::<Result<Vec<_>>>()?;
    Factorization::new(transport.bundle(), p, s0, grid.to_vec(), maps)
}

/// The transport `F_t^{-1} o F_s` along the factorized path.
#[derive(Clone, Debug)]
pub struct FactorizedTransport {
    name: String,
    path: Path,
    factorization: Factorization,
    tol: f64,
}

/// Synthesizes the transport of `f` along `p`. It is defined only on `p`
/// and only between grid parameters.
pub fn transport_from_factorization(f: &Factorization, p: &Path) -> Result<FactorizedTransport> {
    if !p.eval(f.s0)?.same_as(&f.anchor) {
        return Err(Error::BasePointMismatch);
    }
    Ok(FactorizedTransport {
        name: format!("factorized({})", p.label()),
        path: p.clone(),
        factorization: f.clone(),
        tol: 0.0,
    })
}

impl FactorizedTransport {
    /// Declared accuracy, for factorizations of a numerical transport.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn factorization(&self) -> &Factorization {
        &self.factorization
    }

    fn check_same_path(&self, p: &Path) -> Result<()> {
        if p.label() != self.path.label() || p.domain() != self.path.domain() {
            return Err(Error::InvalidPath(format!(
                "factorization is defined along `{}` only",
                self.path.label()
            )));
        }
        Ok(())
    }
}

impl Transport for FactorizedTransport {
    fn name(&self) -> &str {
        &self.name
    }

    fn bundle(&self) -> &FibreBundle {
        &self.factorization.bundle
    }

    fn properties(&self) -> Properties {
        Properties::empty()
    }

    fn tolerance(&self) -> f64 {
        self.tol
    }

    fn apply(&self, p: &Path, s: f64, t: f64, u: &FibreElement) -> Result<FibreElement> {
        self.check_same_path(p)?;
        self.map(p, s, t)?.apply_element(self.bundle(), u, &p.eval(t)?)
    }

    fn map(&self, p: &Path, s: f64, t: f64) -> Result<FibreMap> {
        self.check_same_path(p)?;
        self.factorization.induced(s, t)
    }
}

/// An `s`-independent bijection `D: Q' -> Q` between the targets of two
/// factorizations of the same transport.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeMap {
    pub map: FibreMap,
}

/// `D = F1_{s*} o (F2_{s*})^{-1}` at the first grid point, then verified
/// to satisfy `F1_s = D o F2_s` at every grid point within `tol`.
pub fn gauge_between(f1: &Factorization, f2: &Factorization, tol: f64) -> Result<GaugeMap> {
    if f1.grid != f2.grid || f1.grid.is_empty() {
        return Err(Error::Config("factorizations must share a nonempty grid".into()));
    }
    let n = f1.grid.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let worst = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (s, t) = (f1.grid[i], f1.grid[j]);
            Ok(f1.induced(s, t)?.deviation(&f2.induced(s, t)?))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if worst > tol {
        return Err(Error::NotSameTransport(worst));
    }
    let d = f1.maps[0].compose(&f2.maps[0].inverse()?)?;
    let mut drift: f64 = 0.0;
    for (a, b) in f1.maps.iter().zip(&f2.maps) {
        drift = drift.max(a.deviation(&d.compose(b)?));
    }
    if drift > tol {
        return Err(Error::GaugeInconsistent(drift));
    }
    Ok(GaugeMap { map: d })
}

/// The family `s -> D o F_s`; the induced transport is unchanged.
pub fn apply_gauge(f: &Factorization, d: &GaugeMap) -> Result<Factorization> {
    if d.map.size() != f.target.size() {
        return Err(Error::DimensionMismatch {
            expected: f.target.size(),
            found: d.map.size(),
        });
    }
    d.map.inverse()?;
    let maps = f.maps.iter().map(|m| d.map.compose(m)).collect::<Result<Vec<_>>>()?;
    Ok(Factorization { maps, ..f.clone() })
}

/// A random invertible map of the kind and size of `like`: a uniform
/// permutation, or a signed permutation matrix with power-of-two entries,
/// whose products and inverses are computed without rounding.
pub fn random_invertible<R: Rng + ?Sized>(like: &FibreMap, rng: &mut R) -> FibreMap {
    let n = like.size();
    match like {
        FibreMap::Permutation(_) => {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(rng);
            FibreMap::Permutation(p)
        }
        FibreMap::Matrix(_) => {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(rng);
            let signs: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            let exps: Vec<i32> = (0..n).map(|_| rng.random_range(-2..=2)).collect();
            FibreMap::Matrix(dyadic_monomial(&perm, &signs, &exps).0)
        }
    }
}

/// A random family of bijections along `p` anchored at `s0`.
pub fn random_factorization(bundle: &FibreBundle, p: &Path, s0: f64, grid: &[f64], seed: u64) -> Result<Factorization> {
    let size = bundle.fibre_at(&p.eval(s0)?)?.size();
    let like = if bundle.is_finite() {
        FibreMap::Permutation((0..size).collect())
    } else {
        FibreMap::Matrix(DMatrix::identity(size, size))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let maps = grid.iter().map(|_| random_invertible(&like, &mut rng)).collect();
    Factorization::new(bundle, p, s0, grid.to_vec(), maps)
}

/// Law `3.6-roundtrip`: `transport_from_factorization(canonical_factorization(T))`
/// against `T` on every ordered pair of grid parameters.
pub fn round_trip_report(transport: &dyn Transport, p: &Path, s0: f64, grid: &[f64], tol: f64) -> Result<LawReport> {
    let f = canonical_factorization(transport, p, s0, grid)?;
    let rebuilt = transport_from_factorization(&f, p)?;
    let pairs: Vec<(f64, f64)> = grid.iter().flat_map(|&s| grid.iter().map(move |&t| (s, t))).collect();
    let deviations = pairs
        .par_iter()
        .map(|&(s, t)| Ok(transport.fibre_map(p, s, t)?.deviation(&rebuilt.map(p, s, t)?)))
        .collect::<Result<Vec<f64>>>()?;
    let mut report = LawReport::new("3.6-roundtrip", transport.name(), tol);
    for (&(s, t), dev) in pairs.iter().zip(deviations) {
        report.record(dev, || Failure {
            path: p.label().to_string(),
            params: vec![s, t],
            elements: Vec::new(),
            deviation: dev,
        });
    }
    Ok(report)
}

/// Law `3.11/3.12`: for `count` random gauges `D`, `gauge_between` applied
/// to the canonical factorization and its gauged copy recovers `D`, and the
/// induced transport is unchanged.
pub fn gauge_report(
    transport: &dyn Transport,
    p: &Path,
    s0: f64,
    grid: &[f64],
    count: usize,
    seed: u64,
    tol: f64,
) -> Result<LawReport> {
    let f = canonical_factorization(transport, p, s0, grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauges: Vec<GaugeMap> = (0..count)
        .map(|_| GaugeMap {
            map: random_invertible(&f.maps[0], &mut rng),
        })
        .collect();
    let mut report = LawReport::new("3.11/3.12", transport.name(), tol);
    for (k, d) in gauges.iter().enumerate() {
        let gauged = apply_gauge(&f, d)?;
        let recovered = gauge_between(&gauged, &f, tol.max(0.0))
            .map(|g| g.map.deviation(&d.map))
            .unwrap_or(f64::INFINITY);
        let mut unchanged: f64 = 0.0;
        for &s in grid {
            for &t in grid {
                unchanged = unchanged.max(gauged.induced(s, t)?.deviation(&f.induced(s, t)?));
            }
        }
        let dev = recovered.max(unchanged);
        report.record(dev, || Failure {
            path: p.label().to_string(),
            params: vec![k as f64],
            elements: vec![d.map.to_json().to_string()],
            deviation: dev,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{perm_c3, preset};
    use crate::tolerance::linspace;

    #[test]
    fn single_point_grid_is_the_identity() {
        let t = perm_c3().unwrap();
        let p = Path::through(t.bundle().base(), crate::path::Interval::unit(), &["x0", "x1", "x2"]).unwrap();
        let f = canonical_factorization(&t, &p, 0.5, &[0.5]).unwrap();
        assert_eq!(f.maps(), &[FibreMap::Permutation(vec![0, 1, 2])]);
    }

    #[test]
    fn permutation_factors_fold_the_inverse_steps() {
        let t = perm_c3().unwrap();
        let p = Path::through(t.bundle().base(), crate::path::Interval::unit(), &["x0", "x1", "x2"]).unwrap();
        let f = canonical_factorization(&t, &p, 0.0, &[0.0, 0.5, 0.9]).unwrap();
        // back along x1 -> x0 is (a b); back along x2 -> x1 -> x0 is (a b)(b c)
        assert_eq!(f.at(0.5).unwrap(), &FibreMap::Permutation(vec![1, 0, 2]));
        assert_eq!(f.at(0.9).unwrap(), &FibreMap::Permutation(vec![1, 2, 0]));
        assert!(matches!(f.at(0.3), Err(Error::ParameterNotInFamily(_))));
    }

    #[test]
    fn identity_family_gives_identity_transport() {
        let t = perm_c3().unwrap();
        let p = Path::through(t.bundle().base(), crate::path::Interval::unit(), &["x0", "x1", "x2"]).unwrap();
        let grid = linspace(0.0, 1.0, 5);
        let maps = vec![FibreMap::Permutation(vec![0, 1, 2]); 5];
        let f = Factorization::new(t.bundle(), &p, 0.0, grid, maps).unwrap();
        let r = transport_from_factorization(&f, &p).unwrap();
        assert_eq!(r.map(&p, 0.0, 1.0).unwrap(), FibreMap::Permutation(vec![0, 1, 2]));
    }

    #[test]
    fn different_transports_are_told_apart() {
        let inst = preset("perm-c3").unwrap();
        let p = &inst.paths[0];
        let grid = linspace(0.0, 1.0, 11);
        let f1 = canonical_factorization(inst.transport.as_ref(), p, 0.0, &grid).unwrap();
        let f2 = random_factorization(inst.transport.bundle(), p, 0.0, &grid, 9).unwrap();
        assert!(matches!(gauge_between(&f1, &f2, 0.0), Err(Error::NotSameTransport(_))));
        let same = gauge_between(&f1, &f1, 0.0).unwrap();
        assert_eq!(same.map, FibreMap::Permutation(vec![0, 1, 2]));
    }

    #[test]
    fn gauge_of_wrong_size_is_rejected() {
        let inst = preset("perm-c3").unwrap();
        let f = canonical_factorization(inst.transport.as_ref(), &inst.paths[0], 0.0, &[0.0, 1.0]).unwrap();
        let d = GaugeMap {
            map: FibreMap::Permutation(vec![1, 0]),
        };
        assert!(matches!(apply_gauge(&f, &d), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn json_layout() {
        let inst = preset("parallelization-flat").unwrap();
        let f = canonical_factorization(inst.transport.as_ref(), &inst.paths[0], 0.0, &[0.0, 1.0]).unwrap();
        let v = f.to_json();
        assert_eq!(v["s0"], 0.0);
        assert_eq!(v["maps"][0], serde_json::json!([[1.0, 0.0], [0.0, 1.0]]));
    }
}
