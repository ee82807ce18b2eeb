//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any fails.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use fibre_transport::bundle::{FibreBundle, FibreElement, FibreKind};
use fibre_transport::cli::{applicable_laws, run_law, RunConfig};
use fibre_transport::error::{Error, Result as Res};
use fibre_transport::factorization::{gauge_report, round_trip_report};
use fibre_transport::holonomy::{angle_from_deviation, holonomy_angle, observed_orders, step_sweep, OCTANT_HOLONOMY};
use fibre_transport::instances::{figure_eight, preset, CounterexampleKind, Instance};
use fibre_transport::lifting::{
    check_global_uniqueness, fibre_sample, lift, reanchoring_config, transport_from_lifting, GeneratedLifts,
    LiftAssignment, SectionSwitchingLifts, UniquenessScope,
};
use fibre_transport::path::{octant_loop, quarter_equator, Path};
use fibre_transport::tolerance::{self, linspace};
use fibre_transport::transport::{
    check_group_law, check_identity_law, check_inversion, check_linearity, check_locality, check_metric_consistency,
    check_product_law, check_reparam_invariance, check_same_side_product_law, CheckConfig, LawReport, Transport,
    TransportExt,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const DISCRETE: [&str; 3] = ["perm-c3", "foliation-2sec", "parallelization-flat"];
const SPHERE: &str = "sphere-levi-civita";
const SPHERE_TOL: f64 = 2e-6;
const SEED: u64 = tolerance::DEFAULT_SEED;

fn config(t: &dyn Transport, tol: f64) -> CheckConfig {
    let cfg = CheckConfig::new(tolerance::DEFAULT_TRIALS, tol, SEED);
    if t.bundle().is_finite() {
        cfg.exhaustive()
    } else {
        cfg
    }
}

fn require(report: &LawReport, what: &str) -> Result<f64, String> {
    if report.passed() {
        Ok(report.max_deviation)
    } else {
        Err(format!(
            "{what}: law {} deviation {:.3e} > {:.1e}",
            report.law, report.max_deviation, report.tolerance
        ))
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:?}, limit {limit:?}"))
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

/// Exact axioms on the three discrete presets.
fn axiom_suite() -> Outcome {
    let start = Instant::now();
    let mut checks = 0;
    for name in DISCRETE {
        let inst = preset(name).map_err(err)?;
        let t = inst.transport.as_ref();
        let cfg = config(t, 0.0);
        let p = &inst.paths;
        for report in [
            check_group_law(t, p, &cfg),
            check_identity_law(t, p, &cfg),
            check_inversion(t, p, &cfg),
            check_locality(t, p, &cfg),
            check_reparam_invariance(t, p, &[], &cfg),
        ] {
            let report = report.map_err(err)?;
            if report.max_deviation != 0.0 {
                return Err(format!(
                    "{name}: law {} deviation {:.3e}",
                    report.law, report.max_deviation
                ));
            }
            checks += 1;
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("{checks} checks exact in {elapsed:.2?}"))
}

/// Group, identity, inversion, linearity and metric laws on the sphere.
fn numeric_axiom_suite() -> Outcome {
    let start = Instant::now();
    let inst = preset(SPHERE).map_err(err)?;
    let t = inst.transport.as_ref();
    let p = &inst.paths;
    let mut worst: f64 = 0.0;
    for report in [
        check_group_law(t, p, &config(t, SPHERE_TOL)),
        check_identity_law(t, p, &config(t, SPHERE_TOL)),
        check_inversion(t, p, &config(t, SPHERE_TOL)),
    ] {
        worst = worst.max(require(&report.map_err(err)?, SPHERE)?);
    }
    let linear = check_linearity(t, p, &config(t, tolerance::LINEARITY_RELATIVE)).map_err(err)?;
    require(&linear, SPHERE)?;
    let metric = t.bundle().metric().ok_or("sphere bundle has no metric")?;
    let metric_report = check_metric_consistency(t, metric, p, &config(t, 1e-6)).map_err(err)?;
    require(&metric_report, SPHERE)?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "group/identity/inversion {worst:.2e}, linearity {:.2e}, metric {:.2e} in {elapsed:.2?}",
        linear.max_deviation, metric_report.max_deviation
    ))
}

fn factorization_grid(inst: &Instance) -> Vec<f64> {
    let d = inst.lift_path.domain();
    linspace(d.lo(), d.hi(), 11)
}

/// Canonical factorization round trip and gauge recovery.
fn factorization_round_trip() -> Outcome {
    let mut notes = Vec::new();
    for name in DISCRETE.into_iter().chain([SPHERE]) {
        let inst = preset(name).map_err(err)?;
        let t = inst.transport.as_ref();
        let tol = if name == SPHERE { SPHERE_TOL } else { 0.0 };
        let grid = factorization_grid(&inst);
        let s0 = inst.lift_path.domain().lo();
        let report = round_trip_report(t, &inst.lift_path, s0, &grid, tol).map_err(err)?;
        notes.push(format!("{name} {:.1e}", require(&report, name)?));
        if t.bundle().is_finite() {
            let gauges = gauge_report(t, &inst.lift_path, s0, &grid, 20, SEED, 0.0).map_err(err)?;
            if gauges.trials != 20 {
                return Err(format!("{name}: {} gauges drawn", gauges.trials));
            }
            require(&gauges, name)?;
            notes.push(format!("{name} gauges exact"));
        }
    }
    Ok(notes.join(", "))
}

/// Largest distance between `a` and `b` applied on every pair of grid
/// parameters of every path to every sampled element.
fn pointwise_gap(
    bundle: &FibreBundle,
    paths: &[Path],
    a: impl Fn(&Path, f64, f64, &FibreElement) -> Res<FibreElement>,
    b: impl Fn(&Path, f64, f64, &FibreElement) -> Res<FibreElement>,
) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for p in paths {
        let d = p.domain();
        let grid = linspace(d.lo(), d.hi(), 7);
        for &s in &grid {
            let x = p.eval(s).map_err(err)?;
            for u in fibre_sample(bundle, &x).map_err(err)? {
                for &t in &grid {
                    let lhs = a(p, s, t, &u).map_err(err)?;
                    let rhs = b(p, s, t, &u).map_err(err)?;
                    worst = worst.max(bundle.distance(&lhs, &rhs));
                }
            }
        }
    }
    Ok(worst)
}

/// Liftings that stay on the section through `u`, built from the section
/// table alone.
struct LeafLifts(FibreBundle);

impl LiftAssignment for LeafLifts {
    fn name(&self) -> &str {
        "leaf"
    }

    fn bundle(&self) -> &FibreBundle {
        &self.0
    }

    fn lift_at(&self, p: &Path, u: &FibreElement, _s0: f64, s: f64) -> Res<FibreElement> {
        let FibreKind::Sections { sections, .. } = self.0.fibre() else {
            return Err(Error::WrongBundleKind {
                expected: "section family",
            });
        };
        let alpha = self.0.section_through(u)?;
        let x = p.eval(s)?;
        let node = x.node().ok_or(Error::WrongBundleKind { expected: "graph" })?;
        Ok(FibreElement::label(x, sections[alpha][node]))
    }
}

/// Levi-Civita liftings along the equator, where the Christoffel symbols
/// vanish and chart components stay constant.
struct EquatorLifts(FibreBundle);

impl LiftAssignment for EquatorLifts {
    fn name(&self) -> &str {
        "equator"
    }

    fn bundle(&self) -> &FibreBundle {
        &self.0
    }

    fn lift_at(&self, p: &Path, u: &FibreElement, _s0: f64, s: f64) -> Res<FibreElement> {
        let v = u.as_vector().ok_or(Error::WrongFibreKind { expected: "vector" })?;
        Ok(FibreElement::vector(p.eval(s)?, v.clone()))
    }
}

/// Both round trips between `original` and an independently built lift
/// assignment on `paths`.
fn independent_round_trip(
    original: &Arc<dyn Transport>,
    source: Arc<dyn LiftAssignment>,
    paths: &[Path],
    tol: f64,
) -> Result<f64, String> {
    let bundle = original.bundle();
    let rebuilt = transport_from_lifting(source.clone(), paths, &reanchoring_config(tol)).map_err(err)?;
    let forward = pointwise_gap(
        bundle,
        paths,
        |p, s, t, u| original.transport(p, s, t, u),
        |p, s, t, u| rebuilt.transport(p, s, t, u),
    )?;
    let backward = pointwise_gap(
        bundle,
        paths,
        |p, s, t, u| source.lift_at(p, u, s, t),
        |p, s, t, u| lift(original, p, u, s)?.eval(t),
    )?;
    Ok(forward.max(backward))
}

/// Round trips between transports and liftings in both directions. An
/// inconsistent lift assignment must be rejected.
fn lifting_correspondence() -> Outcome {
    let mut notes = Vec::new();
    let foliation = preset("foliation-2sec").map_err(err)?;
    let leaf = Arc::new(LeafLifts(foliation.transport.bundle().clone()));
    let gap = independent_round_trip(&foliation.transport, leaf, &foliation.paths, 0.0)?;
    if gap != 0.0 {
        return Err(format!("leaf liftings deviate by {gap:.3e}"));
    }
    notes.push("leaf liftings exact".to_string());
    let sphere = preset(SPHERE).map_err(err)?;
    let equator = Arc::new(EquatorLifts(sphere.transport.bundle().clone()));
    let gap = independent_round_trip(&sphere.transport, equator, &[quarter_equator()], SPHERE_TOL)?;
    if gap > SPHERE_TOL {
        return Err(format!("equator liftings deviate by {gap:.3e}"));
    }
    notes.push(format!("equator liftings {gap:.1e}"));
    for name in DISCRETE.into_iter().chain([SPHERE]) {
        let inst = preset(name).map_err(err)?;
        let tol = if name == SPHERE { SPHERE_TOL } else { 0.0 };
        let original = inst.transport.clone();
        let t_bundle = original.bundle();
        let source: Arc<dyn LiftAssignment> = Arc::new(GeneratedLifts(original.clone()));
        let rebuilt = transport_from_lifting(source.clone(), &inst.paths, &reanchoring_config(tol)).map_err(err)?;
        let forward = pointwise_gap(
            t_bundle,
            &inst.paths,
            |p, s, t, u| original.transport(p, s, t, u),
            |p, s, t, u| rebuilt.transport(p, s, t, u),
        )?;
        let rebuilt: Arc<dyn Transport> = Arc::new(rebuilt);
        let backward = pointwise_gap(
            t_bundle,
            &inst.paths,
            |p, s, t, u| source.lift_at(p, u, s, t),
            |p, s, t, u| lift(&rebuilt, p, u, s)?.eval(t),
        )?;
        let gap = forward.max(backward);
        if gap > tol {
            return Err(format!("{name}: round trip deviation {gap:.3e} > {tol:.1e}"));
        }
        notes.push(format!("{name} {gap:.1e}"));
    }
    let foliation = preset("foliation-2sec").map_err(err)?;
    let switching = SectionSwitchingLifts::new(foliation.transport.bundle().clone()).map_err(err)?;
    match transport_from_lifting(Arc::new(switching), &foliation.paths, &reanchoring_config(0.0)) {
        Err(Error::LiftInconsistent(dev)) => notes.push(format!("switching lifts rejected ({dev:.0})")),
        Err(e) => return Err(format!("switching lifts: unexpected error {e}")),
        Ok(_) => return Err("switching lifts accepted".into()),
    }
    Ok(notes.join(", "))
}

/// Flat parallelization is path independent; the sphere octant is not.
fn uniqueness_dichotomy() -> Outcome {
    let flat = preset("parallelization-flat").map_err(err)?;
    let eight = figure_eight(flat.transport.bundle().base()).map_err(err)?;
    let flat_report =
        check_global_uniqueness(flat.transport.as_ref(), &[eight], &UniquenessScope::Paths, 0.0).map_err(err)?;
    if !flat_report.passed() || flat_report.max_deviation != 0.0 || flat_report.trials == 0 {
        return Err(format!(
            "flat figure-eight: deviation {:.3e} over {} pairs",
            flat_report.max_deviation, flat_report.trials
        ));
    }
    let sphere = preset(SPHERE).map_err(err)?;
    let octant = octant_loop().map_err(err)?;
    let report = check_global_uniqueness(
        sphere.transport.as_ref(),
        std::slice::from_ref(&octant),
        &UniquenessScope::Paths,
        SPHERE_TOL,
    )
    .map_err(err)?;
    if report.passed() {
        return Err("sphere octant passed global uniqueness".into());
    }
    let measured = angle_from_deviation(report.max_deviation);
    let direct = holonomy_angle(sphere.transport.as_ref(), &octant).map_err(err)?;
    if (measured - FRAC_PI_2).abs() > 1e-4 || (direct - FRAC_PI_2).abs() > 1e-4 {
        return Err(format!(
            "octant rotation {measured:.6} (holonomy {direct:.6}), expected pi/2"
        ));
    }
    Ok(format!(
        "flat exact over {} pairs, octant rotation {measured:.6} (|err| {:.1e})",
        flat_report.trials,
        (measured - FRAC_PI_2).abs()
    ))
}

/// Product law on permutation paths and on the sphere.
fn product_law() -> Outcome {
    let mut notes = Vec::new();
    for (name, tol) in [("perm-c3", 0.0), (SPHERE, SPHERE_TOL)] {
        let inst = preset(name).map_err(err)?;
        let t = inst.transport.as_ref();
        let (p1, p2, chi) = inst.product.as_ref().ok_or("no product")?;
        let cfg = config(t, tol);
        let joint = check_product_law(t, p1, p2, chi, &cfg).map_err(err)?;
        let same_side = check_same_side_product_law(t, p1, p2, chi, &cfg).map_err(err)?;
        notes.push(format!(
            "{name} {:.1e}/{:.1e}",
            require(&joint, name)?,
            require(&same_side, name)?
        ));
    }
    Ok(notes.join(", "))
}

/// Fourth-order convergence of the octant holonomy.
fn convergence() -> Outcome {
    let start = Instant::now();
    let octant = octant_loop().map_err(err)?;
    let steps = [4e-3, 2e-3, 1e-3];
    let rows = step_sweep(&octant, &steps, Some(OCTANT_HOLONOMY)).map_err(err)?;
    let orders = observed_orders(&rows);
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(120))?;
    let listed = orders.iter().map(|o| format!("{o:.2}")).collect::<Vec<_>>().join(", ");
    let decreasing = rows.windows(2).all(|w| w[1].error < w[0].error);
    if !decreasing || orders.iter().any(|&o| o.is_nan() || o < 3.5) {
        return Err(format!("observed orders [{listed}]"));
    }
    Ok(format!("observed orders [{listed}] in {elapsed:.2?}"))
}

/// Laws that follow from each counterexample's broken law and so cannot
/// hold alongside its failure.
fn consequences(kind: CounterexampleKind) -> &'static [&'static str] {
    match kind {
        CounterexampleKind::GroupBreaking => &["2.4", "3.4", "3.5", "3.6-roundtrip", "3.11/3.12", "4.6"],
        CounterexampleKind::Nonlocal => &["3.4", "3.5"],
        CounterexampleKind::NonReparamInvariant => &["3.2", "3.4", "3.5"],
        CounterexampleKind::Nonlinear | CounterexampleKind::MetricBreaking => &[],
    }
}

const CORE_CHECKERS: [&str; 5] = ["2.2", "2.5/2.7", "2.6", "2.8", "2.9"];

/// Each counterexample trips its own checker and no other core checker.
/// Laws independent of the broken one keep passing.
fn negative_controls() -> Outcome {
    let mut notes = Vec::new();
    for kind in CounterexampleKind::ALL {
        let name = format!("counterexample:{}", kind.name());
        let inst = preset(&name).map_err(err)?;
        let cfg = RunConfig::new(&name);
        let mut failing = BTreeSet::new();
        let mut preserved = 0;
        for law in applicable_laws(&inst) {
            let report = run_law(&inst, law, &cfg).map_err(err)?;
            if !report.passed() {
                failing.insert(law);
            } else if !consequences(kind).contains(&law) {
                preserved += 1;
            }
        }
        let core: Vec<&str> = CORE_CHECKERS.into_iter().filter(|l| failing.contains(l)).collect();
        if core != [kind.broken_law()] {
            return Err(format!("{name}: core checkers failing {core:?}"));
        }
        let stray: Vec<&&str> = failing
            .iter()
            .filter(|l| **l != kind.broken_law() && !consequences(kind).contains(l))
            .collect();
        if !stray.is_empty() {
            return Err(format!("{name}: preserved laws failing {stray:?}"));
        }
        notes.push(format!(
            "{} flags {} ({preserved} preserved)",
            kind.name(),
            kind.broken_law()
        ));
    }
    Ok(notes.join(", "))
}

/// Two `check` runs with one seed write identical bytes.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_ftransport"))
            .args(["check", "--instance", "perm-c3", "--seed", "42", "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("check exited with {:?}", status.status.code()));
        }
        let mut files: Vec<_> = fs::read_dir(&out)
            .map_err(|e| e.to_string())?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        files.sort();
        let contents = files
            .iter()
            .map(|f| Ok((f.file_name().map(|n| n.to_owned()), fs::read(f)?)))
            .collect::<Result<Vec<_>, std::io::Error>>()
            .map_err(|e| e.to_string())?;
        outputs.push(contents);
    }
    if outputs[0].is_empty() || outputs[0] != outputs[1] {
        return Err("reports differ between runs".into());
    }
    Ok(format!("{} reports byte-identical", outputs[0].len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("axiom suite", axiom_suite),
        ("numeric axiom suite", numeric_axiom_suite),
        ("factorization round trip", factorization_round_trip),
        ("lifting correspondence", lifting_correspondence),
        ("uniqueness dichotomy", uniqueness_dichotomy),
        ("product law", product_law),
        ("convergence", convergence),
        ("negative controls", negative_controls),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
