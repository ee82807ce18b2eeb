//! Sampling checkers for the transport laws.
//!
//! Every checker draws its samples sequentially from a seeded generator,
//! evaluates them in parallel and assembles the report in draw order, so a
//! report depends only on the configuration.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{nan_as_inf, Transport, TransportExt};
use crate::bundle::{BasePoint, BundleMetric, FibreBundle, FibreElement};
use crate::error::{Error, Result};
use crate::path::{ChiParameter, Interval, Orientation, Path, Reparameterization};
use crate::tolerance;

/// Number of failures kept verbatim in a report.
pub const MAX_RECORDED_FAILURES: usize = 20;

/// One failing trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub path: String,
    pub params: Vec<f64>,
    pub elements: Vec<String>,
    pub deviation: f64,
}

/// Outcome of one law checker.
///
/// `failures` is empty exactly when `max_deviation <= tolerance`; at most
/// [`MAX_RECORDED_FAILURES`] are kept and `failure_count` has the total.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawReport {
    pub law: String,
    pub transport: String,
    pub trials: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub failure_count: usize,
    pub failures: Vec<Failure>,
}

impl LawReport {
    pub fn new(law: &str, transport: &str, tolerance: f64) -> Self {
        LawReport {
            law: law.to_string(),
            transport: transport.to_string(),
            trials: 0,
            max_deviation: 0.0,
            tolerance,
            failure_count: 0,
            failures: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }

    /// Records one trial; `describe` is only called for failures.
    pub fn record(&mut self, deviation: f64, describe: impl FnOnce() -> Failure) {
        let deviation = nan_as_inf(deviation);
        self.trials += 1;
        self.max_deviation = self.max_deviation.max(deviation);
        if deviation > self.tolerance {
            self.failure_count += 1;
            if self.failures.len() < MAX_RECORDED_FAILURES {
                let mut f = describe();
                f.deviation = deviation;
                self.failures.push(f);
            }
        }
    }

    /// Folds `other` into `self`, keeping this report's law and tolerance.
    pub fn absorb(&mut self, other: &LawReport) {
        self.trials += other.trials;
        self.max_deviation = self.max_deviation.max(other.max_deviation);
        self.failure_count += other.failure_count;
        for f in &other.failures {
            if self.failures.len() < MAX_RECORDED_FAILURES {
                self.failures.push(f.clone());
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

impl fmt::Display for LawReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "law {:<12} {:<6} {:<28} trials={:<6} max_deviation={:.3e} tol={:.1e}",
            self.law,
            if self.passed() { "PASS" } else { "FAIL" },
            self.transport,
            self.trials,
            self.max_deviation,
            self.tolerance
        )
    }
}

/// Tolerance of a law for an instance whose single applications are
/// accurate to `instance_tol`. Laws comparing two applications get twice
/// the instance tolerance.
pub fn law_tolerance(law: &str, instance_tol: f64) -> f64 {
    match law {
        "2.3" | "2.9" | "4.2" | "4.4" | "4.7" => instance_tol,
        "2.8" => {
            if instance_tol > 0.0 {
                tolerance::LINEARITY_RELATIVE
            } else {
                0.0
            }
        }
        _ => 2.0 * instance_tol,
    }
}

/// Sampling configuration shared by all checkers.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckConfig {
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
    /// Enumerate every combination of breakpoint parameters and fibre
    /// elements instead of sampling, when the paths are piecewise and the
    /// fibres finite.
    pub exhaustive: bool,
    /// Draw parameters from this grid instead of uniformly.
    pub grid: Option<Vec<f64>>,
}

impl CheckConfig {
    pub fn new(trials: usize, tol: f64, seed: u64) -> Self {
        CheckConfig {
            trials,
            tol,
            seed,
            exhaustive: false,
            grid: None,
        }
    }

    /// Defaults for `law` on `transport`: 200 trials, the law tolerance
    /// and the default seed.
    pub fn for_law(law: &str, transport: &dyn Transport) -> Self {
        CheckConfig::new(
            tolerance::DEFAULT_TRIALS,
            law_tolerance(law, transport.tolerance()),
            tolerance::DEFAULT_SEED,
        )
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn exhaustive(mut self) -> Self {
        self.exhaustive = true;
        self
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.grid = Some(grid);
        self
    }

    pub(crate) fn rng(&self, law: &str) -> ChaCha8Rng {
        // one stream per law so that adding a law does not shift the others
        let salt = law
            .bytes()
            .fold(0u64, |h, b| h.wrapping_mul(131).wrapping_add(u64::from(b)));
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.rotate_left(17))
    }
}

/// Parameters worth hitting exactly: every breakpoint including the ends,
/// plus one interior point of every piece.
pub(crate) fn special_params(p: &Path) -> Vec<f64> {
    let d = p.domain();
    let mut out = vec![d.lo()];
    match p.as_discrete() {
        Some(trace) => {
            let k = trace.knots();
            for w in k.windows(2) {
                out.push(0.5 * (w[0] + w[1]));
                out.push(w[1]);
            }
        }
        None => {
            let mut prev = d.lo();
            for k in p.kinks().into_iter().chain(std::iter::once(d.hi())) {
                out.push(0.5 * (prev + k));
                out.push(k);
                prev = k;
            }
        }
    }
    out.dedup();
    out
}

/// One sampled case.
#[derive(Clone, Debug)]
pub(crate) struct Draw {
    pub(crate) path: usize,
    pub(crate) params: Vec<f64>,
    pub(crate) elements: Vec<FibreElement>,
    pub(crate) scalars: Vec<f64>,
}

pub(crate) struct Sampler<'a> {
    cfg: &'a CheckConfig,
    rng: ChaCha8Rng,
}

impl<'a> Sampler<'a> {
    pub(crate) fn new(cfg: &'a CheckConfig, law: &str) -> Self {
        Sampler { cfg, rng: cfg.rng(law) }
    }

    pub(crate) fn param(&mut self, p: &Path, earlier: &[f64]) -> f64 {
        let d = p.domain();
        if let Some(grid) = &self.cfg.grid {
            let inside: Vec<f64> = grid.iter().copied().filter(|&g| d.contains(g)).collect();
            if !inside.is_empty() {
                return inside[self.rng.random_range(0..inside.len())];
            }
        }
        let roll: f64 = self.rng.random();
        if roll < 0.08 && !earlier.is_empty() {
            earlier[self.rng.random_range(0..earlier.len())]
        } else if roll < 0.16 {
            let special = special_params(p);
            special[self.rng.random_range(0..special.len())]
        } else if d.is_degenerate() {
            d.lo()
        } else {
            self.rng.random_range(d.lo()..=d.hi())
        }
    }

    pub(crate) fn params(&mut self, p: &Path, arity: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(arity);
        for _ in 0..arity {
            let x = self.param(p, &out);
            out.push(x);
        }
        out
    }

    pub(crate) fn scalar(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..=hi)
    }

    pub(crate) fn element(&mut self, bundle: &FibreBundle, x: &BasePoint) -> Result<FibreElement> {
        bundle.random_element(x, &mut self.rng)
    }

    /// Draws with `arity` parameters and `n_elements` fibre elements over
    /// `p(params[element_at])`.
    pub(crate) fn draws(
        &mut self,
        bundle: &FibreBundle,
        paths: &[Path],
        arity: usize,
        element_at: usize,
        n_elements: usize,
    ) -> Result<Vec<Draw>> {
        if paths.is_empty() {
            return Ok(Vec::new());
        }
        let enumerable = bundle.is_finite() && paths.iter().all(Path::is_discrete);
        if self.cfg.exhaustive && enumerable {
            let mut out = Vec::new();
            for (i, p) in paths.iter().enumerate() {
                let special = special_params(p);
                for params in tuples(&special, arity) {
                    let x = p.eval(params[element_at])?;
                    let fibre = bundle.fibre_elements(&x)?;
                    for elements in tuples(&fibre, n_elements) {
                        out.push(Draw {
                            path: i,
                            params: params.clone(),
                            elements,
                            scalars: Vec::new(),
                        });
                    }
                }
            }
            return Ok(out);
        }
        let mut out = Vec::with_capacity(self.cfg.trials);
        for _ in 0..self.cfg.trials {
            let i = self.rng.random_range(0..paths.len());
            let params = self.params(&paths[i], arity);
            let x = paths[i].eval(params[element_at])?;
            let elements = (0..n_elements)
                .map(|_| self.element(bundle, &x))
                .collect::<Result<Vec<_>>>()?;
            out.push(Draw {
                path: i,
                params,
                elements,
                scalars: Vec::new(),
            });
        }
        Ok(out)
    }
}

fn tuples<T: Clone>(items: &[T], k: usize) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                items.iter().map(move |it| {
                    let mut v = prefix.clone();
                    v.push(it.clone());
                    v
                })
            })
            .collect();
    }
    out
}

/// Evaluates `eval` on every draw in parallel and folds the results in
/// draw order.
pub(crate) fn assemble(
    law: &str,
    transport: &dyn Transport,
    cfg: &CheckConfig,
    paths: &[Path],
    draws: &[Draw],
    eval: impl Fn(&Draw) -> Result<f64> + Sync,
) -> Result<LawReport> {
    let bundle = transport.bundle();
    let deviations: Vec<Result<f64>> = draws.par_iter().map(&eval).collect();
    let mut report = LawReport::new(law, transport.name(), cfg.tol);
    for (d, dev) in draws.iter().zip(deviations) {
        let dev = dev?;
        report.record(dev, || Failure {
            path: format!("{} on {}", paths[d.path].label(), paths[d.path].domain()),
            params: d.params.iter().chain(&d.scalars).copied().collect(),
            elements: d.elements.iter().map(|u| bundle.describe(u)).collect(),
            deviation: dev,
        });
    }
    Ok(report)
}

pub(crate) fn rebased(u: &FibreElement, over: BasePoint) -> FibreElement {
    FibreElement {
        over,
        value: u.value.clone(),
    }
}

/// `I_{t->r} o I_{s->t} = I_{s->r}`.
pub fn check_group_law(transport: &dyn Transport, paths: &[Path], cfg: &CheckConfig) -> Result<LawReport> {
    let law = "2.2";
    let bundle = transport.bundle();
    let draws = Sampler::new(cfg, law).draws(bundle, paths, 3, 1, 1)?;
    assemble(law, transport, cfg, paths, &draws, |d| {
        let p = &paths[d.path];
        let [r, s, t] = [d.params[0], d.params[1], d.params[2]];
        let u = &d.elements[0];
        let via = transport.transport(p, s, t, u)?;
        let lhs = transport.transport(p, t, r, &via)?;
        let rhs = transport.transport(p, s, r, u)?;
        Ok(bundle.distance(&lhs, &rhs))
    })
}

/// `I_{s->s} = id`.
pub fn check_identity_law(transport: &dyn Transport, paths: &[Path], cfg: &CheckConfig) -> Result<LawReport> {
    let law = "2.3";
    let bundle = transport.bundle();
    let draws = Sampler::new(cfg, law).draws(bundle, paths, 1, 0, 1)?;
    assemble(law, transport, cfg, paths, &draws, |d| {
        let s = d.params[0];
        let u = &d.elements[0];
        Ok(bundle.distance(&transport.transport(&paths[d.path], s, s, u)?, u))
    })
}

/// Both defining laws in one report labelled `2.2/2.3`.
pub fn check_axioms(transport: &dyn Transport, paths: &[Path], cfg: &CheckConfig) -> Result<LawReport> {
    let mut report = check_group_law(transport, paths, cfg)?;
    report.absorb(&check_identity_law(transport, paths, cfg)?);
    report.law = "2.2/2.3".into();
    Ok(report)
}

/// `(I_{s->t})^{-1} = I_{t->s}`, measured as the round trip `s -> t -> s`.
pub fn check_inversion(transport: &dyn Transport, paths: &[Path], cfg: &CheckConfig) -> Result<LawReport> {
    let law = "3.1";
    let bundle = transport.bundle();
    let draws = Sampler::new(cfg, law).draws(bundle, paths, 2, 0, 1)?;
    assemble(law, transport, cfg, paths, &draws, |d| {
        let p = &paths[d.path];
        let (s, t) = (d.params[0], d.params[1]);
        let u = &d.elements[0];
        let back = transport.transport(p, t, s, &transport.transport(p, s, t, u)?)?;
        Ok(bundle.distance(&back, u))
    })
}

/// Transport along `p` against transport along restrictions of `p`: to
/// `[min(s,t), max(s,t)]` and to a larger subinterval containing `s, t`.
pub fn check_locality(transport: &dyn Transport, paths: &[Path], cfg: &CheckConfig) -> Result<LawReport> {
    let law = "2.5/2.7";
    let bundle = transport.bundle();
    let draws = Sampler::new(cfg, law).draws(bundle, paths, 3, 0, 1)?;
    assemble(law, transport, cfg, paths, &draws, |d| {
        let p = &paths[d.path];
        let [s, t, x] = [d.params[0], d.params[1], d.params[2]];
        let u = &d.elements[0];
        let full = transport.transport(p, s, t, u)?;
        let tight = p.restrict(Interval::new(s.min(t), s.max(t))?)?;
        let wide = p.restrict(Interval::new(s.min(t).min(x), s.max(t).max(x))?)?;
        let a = transport.transport(&tight, s, t, &rebased(u, tight.eval(s)?))?;
        let b = transport.transport(&wide, s, t, &rebased(u, wide.eval(s)?))?;
        Ok(bundle
            .distance(&full, &rebased(&a, full.over.clone()))
            .max(bundle.distance(&full, &rebased(&b, full.over.clone()))))
    })
}

/// A small family of reparameterizations onto `j`. Besides the identity it
/// holds affine maps of both orientations. A square map and its composite
/// with the reversal follow.
pub fn standard_reparameterizations(j: Interval) -> Vec<Reparameterization> {
    let mut out = vec![Reparameterization::identity(j)];
    if j.is_degenerate() {
        return out;
    }
    let stretched = Interval::new(-1.0, 2.0 + 3.0 * j.width()).expect("ordered");
    if let Ok(t) = Reparameterization::affine(stretched, j, Orientation::Preserving) {
        out.push(t);
    }
    if let Ok(t) = Reparameterization::affine(j, j, Orientation::Reversing) {
        out.push(t.clone());
        if let Ok(sq) = Reparameterization::power(j, 2.0) {
            out.push(sq.clone());
            if let Ok(c) = sq.compose(&t) {
                out.push(c);
            }
        }
    }
    out
}

/// `I^{p o tau}_{s->t} = I^p_{tau(s)->tau(t)}`. Uses `taus` whose target is
/// the path's domain, or [`standard_reparameterizations`] when `taus` is empty.
pub fn check_reparam_invariance(
    transport: &dyn Transport,
    paths: &[Path],
    taus: &[Reparameterization],
    cfg: &CheckConfig,
) -> Result<LawReport> {
    let law = "2.6";
    let bundle = transport.bundle();
    // one reparameterized path per (path, tau) pair
    let mut pairs: Vec<(usize, Reparameterization)> = Vec::new();
    for (i, p) in paths.iter().enumerate() {
        let own = if taus.is_empty() {
            standard_reparameterizations(p.domain())
        } else {
            taus.iter()
                .filter(|t| t.target().approx_eq(&p.domain(), tolerance::PATH_COORD))
                .cloned()
                .collect()
        };
        pairs.extend(own.into_iter().map(|t| (i, t)));
    }
    let reparametrized = pairs
        .iter()
        .map(|(i, tau)| paths[*i].reparameterize(tau))
        .collect::<Result<Vec<_>>>()?;
    let draws = Sampler::new(cfg, law).draws(bundle, &reparametrized, 2, 0, 1)?;
    assemble(law, transport, cfg, &reparametrized, &draws, |d| {
        let q = &reparametrized[d.path];
        let (i, tau) = &pairs[d.path];
        let p = &paths[*i];
        let (s, t) = (d.params[0], d.params[1]);
        let u = &d.elements[0];
        let lhs = transport.transport(q, s, t, u)?;
        let (ts, tt) = (tau.apply(s), tau.apply(t));
        let rhs = transport.transport(p, ts, tt, &rebased(u, p.eval(ts)?))?;
        Ok(bundle.distance(&lhs, &rebased(&rhs, lhs.over.clone())))
    })
}

fn to_unit_domain(p: &Path) -> Result<Path> {
    if p.domain() == Interval::unit() {
        return Ok(p.clone());
    }
    let tau = Reparameterization::affine(Interval::unit(), p.domain(), Orientation::Preserving)?;
    p.reparameterize(&tau)
}

/// Transport along the inverse path against transport along `p` from
/// `1 - s` to `1 - t`. Paths off `[0, 1]` are first mapped affinely onto it.
pub fn check_inverse_path_law(transport: &dyn Transport, paths: &[Path], cfg: &CheckConfig) -> Result<LawReport> {
    let law = "3.2";
    let bundle = transport.bundle();
    let canonical = paths.iter().map(to_unit_domain).collect::<Result<Vec<_>>>()?;
    let inverted = canonical.iter().map(Path::invert).collect::<Result<Vec<_>>>()?;
    let reverse = Reparameterization::canonical_reverse();
    let draws = Sampler::new(cfg, law).draws(bundle, &inverted, 2, 0, 1)?;
    assemble(law, transport, cfg, &inverted, &draws, |d| {
        let q = &inverted[d.path];
        let p = &canonical[d.path];
        let (s, t) = (d.params[0], d.params[1]);
        let u = &d.elements[0];
        let lhs = transport.transport(q, s, t, u)?;
        let (rs, rt) = (reverse.apply(s), reverse.apply(t));
        let rhs = transport.transport(p, rs, rt, &rebased(u, p.eval(rs)?))?;
        Ok(bundle.distance(&lhs, &rebased(&rhs, lhs.over.clone())))
    })
}

/// For `t1 <= c0 <= t2`, transport along the product from `t1` to `t2`
/// against `I^{p2}_{a2->tau2(t2)} o I^{p1}_{tau1(t1)->b1}`.
pub fn check_product_law(
    transport: &dyn Transport,
    p1: &Path,
    p2: &Path,
    chi: &ChiParameter,
    cfg: &CheckConfig,
) -> Result<LawReport> {
    let law = "3.4";
    let bundle = transport.bundle();
    let product = vec![Path::concatenate(p1, p2, chi)?];
    let prod = &product[0];
    let left = prod.restrict(Interval::new(chi.a0(), chi.c0())?)?;
    let right = prod.restrict(Interval::new(chi.c0(), chi.b0())?)?;
    let mut sampler = Sampler::new(cfg, law);
    let mut draws = Vec::with_capacity(cfg.trials);
    for _ in 0..cfg.trials {
        let t1 = sampler.params(&left, 1)[0];
        let t2 = sampler.params(&right, 1)[0];
        let u = sampler.element(bundle, &prod.eval(t1)?)?;
        draws.push(Draw {
            path: 0,
            params: vec![t1, t2],
            elements: vec![u],
            scalars: Vec::new(),
        });
    }
    let (b1, a2) = (p1.domain().hi(), p2.domain().lo());
    assemble(law, transport, cfg, &product, &draws, |d| {
        let (t1, t2) = (d.params[0], d.params[1]);
        let u = &d.elements[0];
        let lhs = transport.transport(prod, t1, t2, u)?;
        let x1 = chi.tau1().apply(t1);
        let mid = transport.transport(p1, x1, b1, &rebased(u, p1.eval(x1)?))?;
        let mid = rebased(&mid, p2.eval(a2)?);
        let rhs = transport.transport(p2, a2, chi.tau2().apply(t2), &mid)?;
        Ok(bundle.distance(&lhs, &rebased(&rhs, lhs.over.clone())))
    })
}

/// For `t1, t2` on the same side of `c0`, transport along the product
/// against the single factor `I^{p1}_{tau1(t1)->tau1(t2)}` (or its `p2`
/// analogue).
pub fn check_same_side_product_law(
    transport: &dyn Transport,
    p1: &Path,
    p2: &Path,
    chi: &ChiParameter,
    cfg: &CheckConfig,
) -> Result<LawReport> {
    let law = "3.5";
    let bundle = transport.bundle();
    let product = vec![Path::concatenate(p1, p2, chi)?];
    let prod = &product[0];
    let halves = [
        prod.restrict(Interval::new(chi.a0(), chi.c0())?)?,
        prod.restrict(Interval::new(chi.c0(), chi.b0())?)?,
    ];
    let mut sampler = Sampler::new(cfg, law);
    let mut draws = Vec::with_capacity(cfg.trials);
    for k in 0..cfg.trials {
        let side = k % 2;
        let ts = sampler.params(&halves[side], 2);
        let u = sampler.element(bundle, &prod.eval(ts[0])?)?;
        draws.push(Draw {
            path: 0,
            params: ts,
            elements: vec![u],
            scalars: vec![side as f64],
        });
    }
    assemble(law, transport, cfg, &product, &draws, |d| {
        let (t1, t2) = (d.params[0], d.params[1]);
        let u = &d.elements[0];
        let lhs = transport.transport(prod, t1, t2, u)?;
        let (factor, tau) = if d.scalars[0] == 0.0 {
            (p1, chi.tau1())
        } else {
            (p2, chi.tau2())
        };
        let (x1, x2) = (tau.apply(t1), tau.apply(t2));
        let rhs = transport.transport(factor, x1, x2, &rebased(u, factor.eval(x1)?))?;
        Ok(bundle.distance(&lhs, &rebased(&rhs, lhs.over.clone())))
    })
}

fn vector_of(u: &FibreElement) -> Result<&nalgebra::DVector<f64>> {
    u.as_vector().ok_or(Error::WrongFibreKind { expected: "vector" })
}

/// `I(lambda u + mu v) = lambda I(u) + mu I(v)`, relative to
/// `|lambda| |I u| + |mu| |I v|`.
pub fn check_linearity(transport: &dyn Transport, paths: &[Path], cfg: &CheckConfig) -> Result<LawReport> {
    let law = "2.8";
    let bundle = transport.bundle();
    if !bundle.is_vector() {
        return Err(Error::WrongFibreKind { expected: "vector" });
    }
    let mut sampler = Sampler::new(cfg, law);
    let mut draws = sampler.draws(bundle, paths, 2, 0, 2)?;
    for d in &mut draws {
        d.scalars = vec![sampler.scalar(-2.0, 2.0), sampler.scalar(-2.0, 2.0)];
    }
    assemble(law, transport, cfg, paths, &draws, |d| {
        let p = &paths[d.path];
        let (s, t) = (d.params[0], d.params[1]);
        let (lambda, mu) = (d.scalars[0], d.scalars[1]);
        let (u, v) = (&d.elements[0], &d.elements[1]);
        let combo = FibreElement::vector(u.over.clone(), vector_of(u)? * lambda + vector_of(v)? * mu);
        let lhs = transport.transport(p, s, t, &combo)?;
        let iu = transport.transport(p, s, t, u)?;
        let iv = transport.transport(p, s, t, v)?;
        let rhs = FibreElement::vector(iu.over.clone(), vector_of(&iu)? * lambda + vector_of(&iv)? * mu);
        let scale = lambda.abs() * bundle.norm(&iu) + mu.abs() * bundle.norm(&iv);
        let dev = bundle.distance(&lhs, &rhs);
        Ok(if scale > 0.0 { dev / scale } else { dev })
    })
}

/// `g_{p(s)}(u, v) = g_{p(t)}(I u, I v)`.
pub fn check_metric_consistency(
    transport: &dyn Transport,
    metric: &BundleMetric,
    paths: &[Path],
    cfg: &CheckConfig,
) -> Result<LawReport> {
    let law = "2.9";
    let bundle = transport.bundle();
    if !bundle.is_vector() {
        return Err(Error::WrongFibreKind { expected: "vector" });
    }
    let draws = Sampler::new(cfg, law).draws(bundle, paths, 2, 0, 2)?;
    assemble(law, transport, cfg, paths, &draws, |d| {
        let p = &paths[d.path];
        let (s, t) = (d.params[0], d.params[1]);
        let (u, v) = (&d.elements[0], &d.elements[1]);
        let before = metric.evaluate(&u.over, u, v)?;
        let iu = transport.transport(p, s, t, u)?;
        let iv = transport.transport(p, s, t, v)?;
        let after = metric.evaluate(&iu.over, &iu, &iv)?;
        Ok((before - after).abs())
    })
}

/// Transported sections. Every defining section of a section-family bundle
/// is checked along every path with a random initial parameter; for every
/// bundle a section propagated from a random `u0` at `s0` is checked to
/// satisfy the same equation from a second initial parameter `s1`.
pub fn check_transported_sections(transport: &dyn Transport, paths: &[Path], cfg: &CheckConfig) -> Result<LawReport> {
    let law = "2.4";
    let bundle = transport.bundle();
    let sections = bundle.sections_of_family().unwrap_or_default();
    let mut sampler = Sampler::new(cfg, law);
    let mut report = LawReport::new(law, transport.name(), cfg.tol);
    for p in paths {
        let grid = tolerance::linspace(p.domain().lo(), p.domain().hi(), 21);
        for sigma in &sections {
            let s0 = sampler.param(p, &[]);
            let dev = transport.transported_section_deviation(sigma, p, s0, &grid)?;
            report.record(dev, || Failure {
                path: format!("{} on {}", p.label(), p.domain()),
                params: vec![s0],
                elements: vec![sigma.name().to_string()],
                deviation: dev,
            });
        }
        let rounds = (cfg.trials / paths.len().max(1)).max(1);
        for _ in 0..rounds {
            let s0 = sampler.param(p, &[]);
            let s1 = sampler.param(p, &[s0]);
            let u0 = sampler.element(bundle, &p.eval(s0)?)?;
            let along = transport.propagate_section(p, s0, &u0, &grid)?;
            let at_s1 = transport.transport(p, s0, s1, &u0)?;
            let mut dev: f64 = 0.0;
            for (t, expected) in &along {
                let got = transport.transport(p, s1, *t, &at_s1)?;
                dev = dev.max(bundle.distance(&got, &rebased(expected, got.over.clone())));
            }
            report.record(dev, || Failure {
                path: format!("{} on {}", p.label(), p.domain()),
                params: vec![s0, s1],
                elements: vec![bundle.describe(&u0)],
                deviation: dev,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_invariant_failures_iff_above_tolerance() {
        let mut r = LawReport::new("2.2", "t", 0.5);
        r.record(0.25, || unreachable!());
        assert!(r.passed());
        r.record(0.75, || Failure {
            path: "p".into(),
            params: vec![],
            elements: vec![],
            deviation: 0.0,
        });
        assert!(!r.passed());
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].deviation, 0.75);
        r.record(f64::NAN, || Failure {
            path: "p".into(),
            params: vec![],
            elements: vec![],
            deviation: 0.0,
        });
        assert_eq!(r.max_deviation, f64::INFINITY);
    }

    #[test]
    fn tuples_enumerate_products() {
        assert_eq!(tuples(&[1, 2], 2), vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
        assert_eq!(tuples(&[1, 2], 0), vec![Vec::<i32>::new()]);
    }

    #[test]
    fn two_application_laws_double_the_instance_tolerance() {
        assert_eq!(law_tolerance("2.2", 1e-6), 2e-6);
        assert_eq!(law_tolerance("2.9", 1e-6), 1e-6);
        assert_eq!(law_tolerance("2.8", 1e-6), 1e-9);
        assert_eq!(law_tolerance("2.8", 0.0), 0.0);
    }

    #[test]
    fn standard_taus_target_the_domain() {
        let j = Interval::new(0.5, 2.0).unwrap();
        let taus = standard_reparameterizations(j);
        assert_eq!(taus.len(), 5);
        for t in &taus {
            assert!(t.target().approx_eq(&j, 1e-15));
        }
    }
}
