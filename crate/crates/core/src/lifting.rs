//! Liftings of paths into the total space and the transports they induce.
//!
//! A transport `I` generates the lifting `s -> I_{s0->s}(u)` of `p` through
//! `u`; conversely a consistent assignment of liftings defines the
//! transport `u -> lift(p, u, s)(t)`.

use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;

use crate::bundle::{BasePoint, FibreBundle, FibreDescription, FibreElement, FibreKind};
use crate::error::{Error, Result};
use crate::path::Path;
use crate::tolerance;
use crate::transport::{
    rebased, special_params, CheckConfig, Failure, LawReport, Properties, Sampler, Transport, TransportExt,
};

/// Representative parameters `s` with `p(s) = pi(u)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OccurrenceSet {
    pub parameters: Vec<f64>,
}

impl OccurrenceSet {
    pub fn is_singleton(&self) -> bool {
        self.parameters.len() == 1
    }
}

/// One parameter per maximal constancy run through `pi(u)` for piecewise
/// paths. On chart paths only the special parameters (ends and kinks)
/// and the declared crossings are tested against `pi(u)`; other
/// self-intersections are not searched for.
pub fn occurrence_set(p: &Path, u: &FibreElement) -> Result<OccurrenceSet> {
    let x = u.projection();
    let mut parameters = match p.as_discrete() {
        Some(trace) => trace
            .runs()
            .into_iter()
            .filter(|r| BasePoint::Node(r.node).same_as(x))
            .map(|r| r.representative())
            .collect::<Vec<_>>(),
        None => {
            let d = p.domain();
            let mut candidates = vec![d.lo(), d.hi()];
            candidates.extend(p.kinks());
            for (r, s) in p.crossings() {
                candidates.push(r);
                candidates.push(s);
            }
            let mut hits = Vec::new();
            for s in candidates {
                if p.eval(s)?.same_as(x) {
                    hits.push(s);
                }
            }
            hits
        }
    };
    parameters.sort_by(f64::total_cmp);
    parameters.dedup();
    if parameters.is_empty() {
        return Err(Error::PointNotOnPath);
    }
    Ok(OccurrenceSet { parameters })
}

/// A rule assigning to `(p, u, s0)` the lifting of `p` through `u` at `s0`.
pub trait LiftAssignment: Send + Sync {
    fn name(&self) -> &str;

    fn bundle(&self) -> &FibreBundle;

    /// The value at `s` of the lifting of `p` through `u` anchored at `s0`.
    fn lift_at(&self, p: &Path, u: &FibreElement, s0: f64, s: f64) -> Result<FibreElement>;
}

/// The liftings generated by a transport.
#[derive(Clone)]
pub struct GeneratedLifts(pub Arc<dyn Transport>);

impl LiftAssignment for GeneratedLifts {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn bundle(&self) -> &FibreBundle {
        self.0.bundle()
    }

    fn lift_at(&self, p: &Path, u: &FibreElement, s0: f64, s: f64) -> Result<FibreElement> {
        self.0.transport(p, s0, s, u)
    }
}

/// A lifting of `base_path` through `through`, anchored at `s0`.
#[derive(Clone)]
pub struct Lifting {
    source: Arc<dyn LiftAssignment>,
    base_path: Path,
    through: FibreElement,
    s0: f64,
}

impl Lifting {
    pub fn base_path(&self) -> &Path {
        &self.base_path
    }

    pub fn through(&self) -> &FibreElement {
        &self.through
    }

    pub fn anchor(&self) -> f64 {
        self.s0
    }

    pub fn eval(&self, s: f64) -> Result<FibreElement> {
        self.source.lift_at(&self.base_path, &self.through, self.s0, s)
    }

    /// `(s, element)` at every parameter of `grid`.
    pub fn sample(&self, grid: &[f64]) -> Result<Vec<(f64, FibreElement)>> {
        grid.par_iter().map(|&s| Ok((s, self.eval(s)?))).collect()
    }

    /// `[[s, "element"], ...]` for plotting.
    pub fn to_json(&self, grid: &[f64]) -> Result<serde_json::Value> {
        let bundle = self.source.bundle();
        let rows: Vec<serde_json::Value> = self
            .sample(grid)?
            .iter()
            .map(|(s, u)| serde_json::json!([s, bundle.describe(u)]))
            .collect();
        Ok(serde_json::Value::Array(rows))
    }
}

fn check_anchor(p: &Path, u: &FibreElement, s0: f64) -> Result<()> {
    if !p.contains_param(s0) || !p.eval(s0)?.same_as(u.projection()) {
        return Err(Error::AnchorNotInOccurrenceSet(s0));
    }
    Ok(())
}

/// The lifting `s -> I_{s0->s}(u)`; `s0` must satisfy `p(s0) = pi(u)`.
pub fn lift(transport: &Arc<dyn Transport>, p: &Path, u: &FibreElement, s0: f64) -> Result<Lifting> {
    lift_with(
        &(Arc::new(GeneratedLifts(transport.clone())) as Arc<dyn LiftAssignment>),
        p,
        u,
        s0,
    )
}

/// The lifting given by an arbitrary assignment.
pub fn lift_with(source: &Arc<dyn LiftAssignment>, p: &Path, u: &FibreElement, s0: f64) -> Result<Lifting> {
    check_anchor(p, u, s0)?;
    source.bundle().check_element(u)?;
    Ok(Lifting {
        source: source.clone(),
        base_path: p.clone(),
        through: rebased(u, p.eval(s0)?),
        s0,
    })
}

/// Parameters at which liftings are compared: the breakpoints and piece
/// midpoints plus an even grid.
fn comparison_grid(p: &Path) -> Vec<f64> {
    let d = p.domain();
    let mut g = special_params(p);
    g.extend(tolerance::linspace(d.lo(), d.hi(), 17));
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// Largest pointwise distance between two liftings of `p` on `grid`.
fn lifting_distance(
    bundle: &FibreBundle,
    a: impl Fn(f64) -> Result<FibreElement>,
    b: impl Fn(f64) -> Result<FibreElement>,
    grid: &[f64],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in grid {
        worst = worst.max(bundle.distance(&a(t)?, &b(t)?));
    }
    Ok(worst)
}

/// The transport `u -> lift(p, u, s)(t)` defined by a lift assignment.
#[derive(Clone)]
pub struct LiftedTransport {
    name: String,
    source: Arc<dyn LiftAssignment>,
    tol: f64,
}

impl LiftedTransport {
    pub fn source(&self) -> &Arc<dyn LiftAssignment> {
        &self.source
    }
}

impl Transport for LiftedTransport {
    fn name(&self) -> &str {
        &self.name
    }

    fn bundle(&self) -> &FibreBundle {
        self.source.bundle()
    }

    fn properties(&self) -> Properties {
        Properties::empty()
    }

    fn tolerance(&self) -> f64 {
        self.tol
    }

    fn apply(&self, p: &Path, s: f64, t: f64, u: &FibreElement) -> Result<FibreElement> {
        self.source.lift_at(p, u, s, t)
    }
}

/// Builds the transport of `source` after sampling its consistency on
/// `paths`: with `v = lift(p, u, s)(r)`, the lifting through `v` at `r` must
/// equal the lifting through `u` at `s`, and every lifting must pass through
/// its anchor. `cfg.trials` re-anchorings are drawn; any deviation
/// beyond `cfg.tol` gives `LiftInconsistent` with the largest one.
pub fn transport_from_lifting(
    source: Arc<dyn LiftAssignment>,
    paths: &[Path],
    cfg: &CheckConfig,
) -> Result<LiftedTransport> {
    let report = consistency_report(source.as_ref(), paths, cfg)?;
    if !report.passed() {
        return Err(Error::LiftInconsistent(report.max_deviation));
    }
    Ok(LiftedTransport {
        name: format!("lifted({})", source.name()),
        tol: cfg.tol / 2.0,
        source,
    })
}

/// Default configuration for the re-anchoring validation.
pub fn reanchoring_config(tol: f64) -> CheckConfig {
    CheckConfig::new(tolerance::LIFT_REANCHORINGS, tol, tolerance::DEFAULT_SEED)
}

fn consistency_report(source: &dyn LiftAssignment, paths: &[Path], cfg: &CheckConfig) -> Result<LawReport> {
    let law = "4.6";
    let bundle = source.bundle();
    let draws = Sampler::new(cfg, law).draws(bundle, paths, 2, 0, 1)?;
    let grids: Vec<Vec<f64>> = paths.iter().map(comparison_grid).collect();
    let deviations = draws
        .par_iter()
        .map(|d| {
            let p = &paths[d.path];
            let (s, r) = (d.params[0], d.params[1]);
            let u = &d.elements[0];
            let at_anchor = bundle.distance(&source.lift_at(p, u, s, s)?, u);
            let v = source.lift_at(p, u, s, r)?;
            let moved = lifting_distance(
                bundle,
                |t| source.lift_at(p, &v, r, t),
                |t| source.lift_at(p, u, s, t),
                &grids[d.path],
            )?;
            Ok(at_anchor.max(moved))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut report = LawReport::new(law, source.name(), cfg.tol);
    for (d, dev) in draws.iter().zip(deviations) {
        report.record(dev, || Failure {
            path: paths[d.path].label().to_string(),
            params: d.params.clone(),
            elements: d.elements.iter().map(|u| bundle.describe(u)).collect(),
            deviation: dev,
        });
    }
    Ok(report)
}

/// Law `4.6` for the liftings generated by `transport`: re-anchoring a
/// lifting at any of its points reproduces it.
pub fn check_self_consistency(transport: &Arc<dyn Transport>, paths: &[Path], cfg: &CheckConfig) -> Result<LawReport> {
    let mut report = consistency_report(&GeneratedLifts(transport.clone()), paths, cfg)?;
    report.transport = transport.name().to_string();
    Ok(report)
}

/// Which pairs `r, s` with `p(r) = p(s)` the uniqueness check visits.
#[derive(Clone, Debug, PartialEq)]
pub enum UniquenessScope {
    /// Every self-intersection of every given path.
    Paths,
    /// Only pairs in the occurrence set of this element, on paths through it.
    Point(FibreElement),
}

/// Parameter pairs `r < s` with `p(r) = p(s)`: representatives of distinct
/// constancy runs on the same node, or declared crossings.
pub fn self_intersections(p: &Path) -> Vec<(f64, f64)> {
    match p.as_discrete() {
        Some(trace) => {
            let runs = trace.runs();
            let mut out = Vec::new();
            for (i, a) in runs.iter().enumerate() {
                for b in &runs[i + 1..] {
                    if a.node == b.node {
                        out.push((a.representative(), b.representative()));
                    }
                }
            }
            out
        }
        None => p.crossings(),
    }
}

/// A fixed sample of a fibre: every element of a finite fibre, or the
/// metric-normalized frame vectors and their normalized sum.
pub fn fibre_sample(bundle: &FibreBundle, x: &BasePoint) -> Result<Vec<FibreElement>> {
    match bundle.fibre_at(x)? {
        FibreDescription::Labels(_) => bundle.fibre_elements(x),
        FibreDescription::Frame { dim, .. } => {
            let mut vs: Vec<nalgebra::DVector<f64>> = (0..dim)
                .map(|i| nalgebra::DVector::from_fn(dim, |j, _| if i == j { 1.0 } else { 0.0 }))
                .collect();
            vs.push(nalgebra::DVector::from_element(dim, 1.0));
            Ok(vs
                .into_iter()
                .map(|v| {
                    let u = FibreElement::vector(x.clone(), v.clone());
                    let n = bundle.norm(&u);
                    FibreElement::vector(x.clone(), v / n)
                })
                .collect())
        }
    }
}

/// Law `4.4`: `I_{r->s}` is the identity whenever `p(r) = p(s)`. The
/// deviation of a pair is the largest distance `|I_{r->s} u - u|` over
/// [`fibre_sample`]; for a rotation by `a` of unit vectors it is
/// `2 sin(a / 2)`. The equivalent form comparing liftings through
/// `v = lift(u, r)(s1)` is checked alongside.
pub fn check_global_uniqueness(
    transport: &dyn Transport,
    paths: &[Path],
    scope: &UniquenessScope,
    tol: f64,
) -> Result<LawReport> {
    let bundle = transport.bundle();
    let mut report = LawReport::new("4.4", transport.name(), tol);
    for p in paths {
        let pairs = match scope {
            UniquenessScope::Paths => self_intersections(p),
            UniquenessScope::Point(u) => match occurrence_set(p, u) {
                Ok(q) => {
                    let ps = q.parameters;
                    (0..ps.len())
                        .flat_map(|i| {
                            let a = ps[i];
                            ps[i + 1..].iter().map(move |&b| (a, b)).collect::<Vec<_>>()
                        })
                        .collect()
                }
                Err(Error::PointNotOnPath) => Vec::new(),
                Err(e) => return Err(e),
            },
        };
        let grid = comparison_grid(p);
        let deviations = pairs
            .par_iter()
            .map(|&(r, s)| {
                let x = p.eval(r)?;
                let sample = match scope {
                    UniquenessScope::Paths => fibre_sample(bundle, &x)?,
                    UniquenessScope::Point(u) => vec![rebased(u, x.clone())],
                };
                let y = p.eval(s)?;
                let mut worst: f64 = 0.0;
                for u in &sample {
                    let moved = transport.transport(p, r, s, u)?;
                    worst = worst.max(bundle.distance(&moved, &rebased(u, y.clone())));
                    // liftings through u at r and at s coincide
                    let other = rebased(u, y.clone());
                    let lifts = lifting_distance(
                        bundle,
                        |t| transport.transport(p, r, t, u),
                        |t| transport.transport(p, s, t, &other),
                        &grid,
                    )?;
                    worst = worst.max(lifts);
                }
                Ok(worst)
            })
            .collect::<Result<Vec<f64>>>()?;
        for (&(r, s), dev) in pairs.iter().zip(deviations) {
            report.record(dev, || Failure {
                path: p.label().to_string(),
                params: vec![r, s],
                elements: Vec::new(),
                deviation: dev,
            });
        }
    }
    Ok(report)
}

/// Liftings of one path either share no sampled element or coincide.
/// Requires uniqueness along every path; otherwise `HypothesisNotSatisfied`.
/// Half the draws take `v` on the lifting through `u`, which must give
/// equal liftings; the other half take a different `v` over `pi(u)`, which
/// must give disjoint ones.
pub fn liftings_disjoint_or_equal(transport: &dyn Transport, paths: &[Path], cfg: &CheckConfig) -> Result<LawReport> {
    let unique = check_global_uniqueness(transport, paths, &UniquenessScope::Paths, cfg.tol)?;
    if !unique.passed() {
        return Err(Error::HypothesisNotSatisfied(unique.max_deviation));
    }
    let law = "disjoint-or-equal";
    let bundle = transport.bundle();
    let mut sampler = Sampler::new(cfg, law);
    let draws = sampler.draws(bundle, paths, 3, 0, 2)?;
    let grids: Vec<Vec<f64>> = paths.iter().map(comparison_grid).collect();
    let deviations = draws
        .par_iter()
        .enumerate()
        .map(|(k, d)| {
            let p = &paths[d.path];
            let grid = &grids[d.path];
            let (r, s1) = (d.params[0], d.params[1]);
            let u = &d.elements[0];
            let (v, s) = if k % 2 == 0 {
                (transport.transport(p, r, s1, u)?, s1)
            } else {
                (d.elements[1].clone(), r)
            };
            let a: Vec<FibreElement> = grid
                .iter()
                .map(|&t| transport.transport(p, r, t, u))
                .collect::<Result<_>>()?;
            let b: Vec<FibreElement> = grid
                .iter()
                .map(|&t| transport.transport(p, s, t, &v))
                .collect::<Result<_>>()?;
            let pointwise = a.iter().zip(&b).map(|(x, y)| bundle.distance(x, y)).fold(0.0, f64::max);
            if pointwise <= cfg.tol {
                return Ok(0.0);
            }
            // not equal, so no element may be shared
            let shared = a.iter().any(|x| b.iter().any(|y| bundle.distance(x, y) <= cfg.tol));
            Ok(if shared { pointwise } else { 0.0 })
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut report = LawReport::new(law, transport.name(), cfg.tol);
    for (d, dev) in draws.iter().zip(deviations) {
        report.record(dev, || Failure {
            path: paths[d.path].label().to_string(),
            params: d.params.clone(),
            elements: d.elements.iter().map(|u| bundle.describe(u)).collect(),
            deviation: dev,
        });
    }
    Ok(report)
}

/// Law `4.7` at `s = s0`: the liftings through the elements of the fibre
/// over `p(s0)` cover the total space over the trace of `p`. The deviation
/// is the size of the symmetric difference of the two finite sets.
pub fn fibre_cover(transport: &dyn Transport, p: &Path, s0: f64) -> Result<LawReport> {
    let bundle = transport.bundle();
    if !matches!(bundle.fibre(), FibreKind::Finite { .. } | FibreKind::Sections { .. }) {
        return Err(Error::WrongBundleKind { expected: "finite" });
    }
    let trace = p.as_discrete().ok_or(Error::WrongBundleKind { expected: "finite" })?;
    let params = special_params(p);
    let mut union = BTreeSet::new();
    for u in bundle.fibre_elements(&p.eval(s0)?)? {
        for &t in &params {
            let v = transport.transport(p, s0, t, &u)?;
            let node = v
                .projection()
                .node()
                .ok_or(Error::WrongBundleKind { expected: "graph" })?;
            union.insert((node, v.as_label().ok_or(Error::WrongFibreKind { expected: "finite" })?));
        }
    }
    let total: BTreeSet<(usize, usize)> = bundle.total_space_over(&trace.trace_nodes())?.into_iter().collect();
    let dev = union.symmetric_difference(&total).count() as f64;
    let mut report = LawReport::new("4.7", transport.name(), 0.0);
    report.record(dev, || Failure {
        path: p.label().to_string(),
        params: vec![s0],
        elements: union
            .symmetric_difference(&total)
            .map(|&(n, l)| bundle.describe(&FibreElement::label(BasePoint::Node(n), l)))
            .collect(),
        deviation: dev,
    });
    Ok(report)
}

/// Law `4.2`: every generated lifting projects onto the path and passes
/// through its anchor element.
pub fn check_projection(transport: &dyn Transport, paths: &[Path], cfg: &CheckConfig) -> Result<LawReport> {
    let law = "4.2";
    let bundle = transport.bundle();
    let draws = Sampler::new(cfg, law).draws(bundle, paths, 2, 0, 1)?;
    let deviations = draws
        .par_iter()
        .map(|d| {
            let p = &paths[d.path];
            let (s0, s) = (d.params[0], d.params[1]);
            let u = &d.elements[0];
            let v = transport.transport(p, s0, s, u)?;
            let off = if v.projection().same_as(&p.eval(s)?) {
                0.0
            } else {
                f64::INFINITY
            };
            let anchor = bundle.distance(&transport.transport(p, s0, s0, u)?, u);
            Ok(off.max(anchor))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut report = LawReport::new(law, transport.name(), cfg.tol);
    for (d, dev) in draws.iter().zip(deviations) {
        report.record(dev, || Failure {
            path: paths[d.path].label().to_string(),
            params: d.params.clone(),
            elements: d.elements.iter().map(|u| bundle.describe(u)).collect(),
            deviation: dev,
        });
    }
    Ok(report)
}

/// A lift assignment on a section family that follows the section through
/// `u` forward of the anchor and the next section behind it. It passes
/// through its anchor but fails the re-anchoring law.
#[derive(Clone, Debug)]
pub struct SectionSwitchingLifts {
    bundle: FibreBundle,
}

impl SectionSwitchingLifts {
    pub fn new(bundle: FibreBundle) -> Result<Self> {
        match bundle.fibre() {
            FibreKind::Sections { sections, .. } if sections.len() >= 2 => Ok(SectionSwitchingLifts { bundle }),
            _ => Err(Error::WrongBundleKind {
                expected: "section family with two or more sections",
            }),
        }
    }
}

impl LiftAssignment for SectionSwitchingLifts {
    fn name(&self) -> &str {
        "section-switching"
    }

    fn bundle(&self) -> &FibreBundle {
        &self.bundle
    }

    fn lift_at(&self, p: &Path, u: &FibreElement, s0: f64, s: f64) -> Result<FibreElement> {
        check_anchor(p, u, s0)?;
        let FibreKind::Sections { sections, .. } = self.bundle.fibre() else {
            unreachable!("checked at construction")
        };
        let alpha = self.bundle.section_through(u)?;
        let beta = if s >= s0 { alpha } else { (alpha + 1) % sections.len() };
        let x = p.eval(s)?;
        let node = x.node().ok_or(Error::WrongBundleKind { expected: "graph" })?;
        Ok(FibreElement::label(x, sections[beta][node]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{figure_eight, preset};
    use crate::path::Interval;

    #[test]
    fn figure_eight_visits_the_centre_three_times() {
        let inst = preset("parallelization-flat").unwrap();
        let p = figure_eight(inst.transport.bundle().base()).unwrap();
        let u = FibreElement::vector(BasePoint::Node(0), nalgebra::DVector::from_vec(vec![1.0, 0.0]));
        let q = occurrence_set(&p, &u).unwrap();
        assert_eq!(q.parameters, vec![0.1, 0.5, 0.9]);
        let v = FibreElement::vector(BasePoint::Node(1), nalgebra::DVector::from_vec(vec![1.0, 0.0]));
        assert!(occurrence_set(&p, &v).unwrap().is_singleton());
        let w = FibreElement::vector(BasePoint::Node(3), nalgebra::DVector::from_vec(vec![1.0, 0.0]));
        assert!(matches!(occurrence_set(&p, &w), Err(Error::PointNotOnPath)));
    }

    #[test]
    fn constant_path_has_one_representative() {
        let inst = preset("perm-c3").unwrap();
        let p = &inst.paths[3];
        let u = FibreElement::label(BasePoint::Node(1), 0);
        assert_eq!(occurrence_set(p, &u).unwrap().parameters, vec![0.5]);
    }

    #[test]
    fn anchor_must_lie_over_the_element() {
        let inst = preset("perm-c3").unwrap();
        let u = FibreElement::label(BasePoint::Node(0), 0);
        assert!(matches!(
            lift(&inst.transport, &inst.paths[0], &u, 0.9),
            Err(Error::AnchorNotInOccurrenceSet(_))
        ));
        let l = lift(&inst.transport, &inst.paths[0], &u, 0.0).unwrap();
        assert_eq!(l.eval(0.0).unwrap(), u);
    }

    #[test]
    fn section_switching_is_rejected() {
        let inst = preset("foliation-2sec").unwrap();
        let bad = SectionSwitchingLifts::new(inst.transport.bundle().clone()).unwrap();
        let cfg = reanchoring_config(0.0);
        assert!(matches!(
            transport_from_lifting(Arc::new(bad), &inst.paths, &cfg),
            Err(Error::LiftInconsistent(_))
        ));
    }

    #[test]
    fn injective_paths_are_vacuously_unique() {
        let inst = preset("counterexample:group_breaking").unwrap();
        let p = Path::through(inst.transport.bundle().base(), Interval::unit(), &["w0", "w1", "w2"]).unwrap();
        let r = check_global_uniqueness(inst.transport.as_ref(), &[p], &UniquenessScope::Paths, 0.0).unwrap();
        assert!(r.passed());
        assert_eq!(r.trials, 0);
    }

    #[test]
    fn permutation_cover_has_nine_elements() {
        let inst = preset("perm-c3").unwrap();
        let r = fibre_cover(inst.transport.as_ref(), &inst.paths[0], 0.0).unwrap();
        assert!(r.passed(), "{r}");
    }
}
