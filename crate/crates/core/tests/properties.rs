//! Property tests for the path algebra, bundles, transports, factorizations,
//! liftings and instances.

use std::sync::Arc;

use fibre_transport::bundle::{BasePoint, BaseSpace, FibreElement, Section};
use fibre_transport::cli::{applicable_laws, run_law, RunConfig};
use fibre_transport::factorization::{
    canonical_factorization, gauge_between, random_factorization, transport_from_factorization,
};
use fibre_transport::holonomy::{step_sweep, OCTANT_HOLONOMY};
use fibre_transport::instances::{figure_eight, preset, sample_sphere_arcs, CounterexampleKind, PRESETS};
use fibre_transport::lifting::{check_global_uniqueness, check_self_consistency, UniquenessScope};
use fibre_transport::path::{
    octant_loop, ChiParameter, DiscreteTrace, Interval, Orientation, Path, Reparameterization,
};
use fibre_transport::tolerance::{linspace, DEFAULT_SEED, DEFAULT_TRIALS};
use fibre_transport::transport::{check_group_law, CheckConfig, Transport, TransportExt};
use nalgebra::{DVector, Vector2};
use proptest::prelude::*;

fn graph() -> BaseSpace {
    BaseSpace::graph("g5", &["n0", "n1", "n2", "n3", "n4"])
}

fn discrete(nodes: &[usize], lo: f64, hi: f64) -> Path {
    Path::discrete(
        &graph(),
        DiscreteTrace::through_nodes(Interval::new(lo, hi).unwrap(), nodes).unwrap(),
    )
    .unwrap()
}

fn knots(p: &Path) -> Vec<f64> {
    p.as_discrete().map(|t| t.knots().to_vec()).unwrap_or_default()
}

/// Parameters of `j` at least `gap` away from every knot of `paths`.
fn clear_samples(j: Interval, paths: &[&Path], gap: f64) -> Vec<f64> {
    let all: Vec<f64> = paths.iter().flat_map(|p| knots(p)).collect();
    linspace(j.lo(), j.hi(), 97)
        .into_iter()
        .filter(|s| all.iter().all(|k| (s - k).abs() > gap))
        .collect()
}

fn assert_same_points(p: &Path, q: &Path, samples: &[f64]) -> Result<(), TestCaseError> {
    for &s in samples {
        let (a, b) = (p.eval(s).unwrap(), q.eval(s).unwrap());
        prop_assert!(a.same_as(&b), "differ at {s}: {a:?} vs {b:?}");
    }
    Ok(())
}

fn node_list() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..5, 1..7)
}

fn interval() -> impl Strategy<Value = (f64, f64)> {
    (-2.0f64..2.0, 0.25f64..3.0).prop_map(|(lo, w)| (lo, lo + w))
}

fn orientation() -> impl Strategy<Value = Orientation> {
    prop_oneof![Just(Orientation::Preserving), Just(Orientation::Reversing)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn restriction_composes(nodes in node_list(), (lo, hi) in interval(), cuts in prop::array::uniform4(0.0f64..1.0)) {
        let p = discrete(&nodes, lo, hi);
        let mut c = cuts;
        c.sort_by(f64::total_cmp);
        let at = |f: f64| lo + (hi - lo) * f;
        let outer = Interval::new(at(c[0]), at(c[3])).unwrap();
        let inner = Interval::new(at(c[1]), at(c[2])).unwrap();
        let twice = p.restrict(outer).unwrap().restrict(inner).unwrap();
        let once = p.restrict(inner).unwrap();
        prop_assert_eq!(twice.domain(), once.domain());
        assert_same_points(&twice, &once, &linspace(inner.lo(), inner.hi(), 41))?;
    }

    #[test]
    fn reparameterizations_compose(
        nodes in node_list(),
        (lo, hi) in interval(),
        (klo, khi) in interval(),
        k in 0.4f64..2.5,
        o1 in orientation(),
        o2 in orientation(),
    ) {
        let p = discrete(&nodes, lo, hi);
        let d = p.domain();
        let k_dom = Interval::new(klo, khi).unwrap();
        let tau = Reparameterization::power(d, k).unwrap()
            .compose(&Reparameterization::affine(d, d, o1).unwrap()).unwrap();
        let sigma = Reparameterization::affine(k_dom, d, o2).unwrap();
        let at_once = p.reparameterize(&tau.compose(&sigma).unwrap()).unwrap();
        let stepwise = p.reparameterize(&tau).unwrap().reparameterize(&sigma).unwrap();
        let samples = clear_samples(k_dom, &[&at_once, &stepwise], 1e-9);
        assert_same_points(&at_once, &stepwise, &samples)?;
    }

    #[test]
    fn sphere_reparameterizations_compose(seed in any::<u64>(), k in 0.4f64..2.5, o in orientation()) {
        let p = &sample_sphere_arcs(1, seed)[0];
        let d = p.domain();
        let tau = Reparameterization::power(d, k).unwrap();
        let sigma = Reparameterization::affine(Interval::unit(), d, o).unwrap();
        let at_once = p.reparameterize(&tau.compose(&sigma).unwrap()).unwrap();
        let stepwise = p.reparameterize(&tau).unwrap().reparameterize(&sigma).unwrap();
        for s in linspace(0.0, 1.0, 33) {
            prop_assert!(at_once.eval(s).unwrap().coincides(&stepwise.eval(s).unwrap(), 1e-12));
        }
    }

    #[test]
    fn concatenation_follows_its_factors(
        first in node_list(),
        second in node_list(),
        (a0, w) in (-1.0f64..1.0, 0.5f64..2.0),
        split in 0.1f64..0.9,
        canonical in any::<bool>(),
    ) {
        let p1 = discrete(&first, 0.0, 1.0);
        let mut nodes2 = vec![*first.last().unwrap()];
        nodes2.extend(second);
        let p2 = discrete(&nodes2, 0.0, 1.0);
        let chi = if canonical {
            ChiParameter::canonical()
        } else {
            let (c0, b0) = (a0 + w * split, a0 + w);
            ChiParameter::affine(a0, c0, b0, p1.domain(), p2.domain()).unwrap()
        };
        let q = Path::concatenate(&p1, &p2, &chi).unwrap();
        let c0 = chi.c0();
        let first_half = clear_samples(Interval::new(chi.a0(), c0).unwrap(), &[&q], 1e-9);
        for s in first_half.into_iter().chain([c0]) {
            prop_assert!(q.eval(s).unwrap().same_as(&p1.eval(chi.tau1().apply(s)).unwrap()));
        }
        let second_half = clear_samples(Interval::new(c0, chi.b0()).unwrap(), &[&q], 1e-9);
        for s in second_half.into_iter().chain([c0]) {
            prop_assert!(q.eval(s).unwrap().same_as(&p2.eval(chi.tau2().apply(s)).unwrap()));
        }
    }

    #[test]
    fn inversion_is_an_involution(nodes in node_list()) {
        let p = discrete(&nodes, 0.0, 1.0);
        let back = p.invert().unwrap().invert().unwrap();
        prop_assert_eq!(back.domain(), p.domain());
        assert_same_points(&back, &p, &clear_samples(p.domain(), &[&p, &back], 1e-12))?;
    }

    #[test]
    fn sphere_metric_is_symmetric_and_bilinear(
        theta in 0.3f64..2.8,
        phi in -3.0f64..3.0,
        u in prop::array::uniform2(-2.0f64..2.0),
        v in prop::array::uniform2(-2.0f64..2.0),
        w in prop::array::uniform2(-2.0f64..2.0),
        a in -3.0f64..3.0,
    ) {
        let inst = preset("sphere-levi-civita").unwrap();
        let bundle = inst.transport.bundle();
        let x = BasePoint::chart(theta, phi);
        let el = |c: [f64; 2]| FibreElement::vector(x.clone(), DVector::from_column_slice(&c));
        let g = |p: [f64; 2], q: [f64; 2]| bundle.evaluate_metric(&x, &el(p), &el(q)).unwrap();
        let (uv, vu) = (g(u, v), g(v, u));
        prop_assert!((uv - vu).abs() <= 1e-12 * (1.0 + uv.abs()));
        let lin = Vector2::from(u) * a + Vector2::from(w);
        let lhs = g([lin.x, lin.y], v);
        let rhs = a * g(u, v) + g(w, v);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs() + rhs.abs()));
    }

    #[test]
    fn transported_section_verdict_ignores_the_anchor(labels in prop::array::uniform3(0usize..3), i in 0usize..6, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let inst = preset("perm-c3").unwrap();
        let p = &inst.paths[i];
        let d = p.domain();
        let sigma = Section::from_node_labels("random", labels.to_vec());
        let grid = linspace(d.lo(), d.hi(), 41);
        let at = |f: f64| d.lo() + d.width() * f;
        let t_ref = inst.transport.as_ref();
        let first = t_ref.is_transported_section(&sigma, p, at(s), &grid, 0.0).unwrap();
        let second = t_ref.is_transported_section(&sigma, p, at(t), &grid, 0.0).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn sphere_transport_round_trips(seed in any::<u64>(), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let inst = preset("sphere-levi-civita").unwrap();
        let p = &sample_sphere_arcs(1, seed)[0];
        let d = p.domain();
        let (s, t) = (d.lo() + d.width() * s, d.lo() + d.width() * t);
        let there = inst.transport.fibre_map(p, s, t).unwrap();
        let back = inst.transport.fibre_map(p, t, s).unwrap();
        let loop_map = back.compose(&there).unwrap();
        prop_assert!(loop_map.deviation(&loop_map.identity_like()) <= 2e-6);
    }

    #[test]
    fn random_families_come_back_up_to_gauge(seed in any::<u64>(), which in 0usize..3) {
        let name = ["perm-c3", "foliation-2sec", "parallelization-flat"][which];
        let inst = preset(name).unwrap();
        let p = &inst.lift_path;
        let d = p.domain();
        let grid = linspace(d.lo(), d.hi(), 11);
        let bundle = inst.transport.bundle();
        let family = random_factorization(bundle, p, d.lo(), &grid, seed).unwrap();
        let induced = transport_from_factorization(&family, p).unwrap();
        let recovered = canonical_factorization(&induced, p, d.lo(), &grid).unwrap();
        prop_assert!(gauge_between(&recovered, &family, 0.0).is_ok());
        for &r in &grid {
            prop_assert!(induced.map(p, r, r).unwrap().deviation(&family.maps()[0].identity_like()) == 0.0);
            for &s in &grid {
                let rs = induced.map(p, r, s).unwrap();
                let sr = induced.map(p, s, r).unwrap();
                prop_assert_eq!(rs.inverse().unwrap().deviation(&sr), 0.0);
                for &t in grid.iter().step_by(3) {
                    let composed = induced.map(p, s, t).unwrap().compose(&rs).unwrap();
                    prop_assert_eq!(composed.deviation(&induced.map(p, r, t).unwrap()), 0.0);
                }
            }
        }
    }

    #[test]
    fn injective_paths_are_vacuously_unique(order in Just(vec![0usize, 1, 2]).prop_shuffle(), len in 1usize..4) {
        let inst = preset("perm-c3").unwrap();
        let names = ["x0", "x1", "x2"];
        let nodes: Vec<&str> = order[..len].iter().map(|&i| names[i]).collect();
        let p = Path::through(inst.transport.bundle().base(), Interval::unit(), &nodes).unwrap();
        let report = check_global_uniqueness(inst.transport.as_ref(), &[p], &UniquenessScope::Paths, 0.0).unwrap();
        prop_assert!(report.passed());
        prop_assert_eq!(report.trials, 0);
    }
}

#[test]
fn fibres_are_equipollent() {
    for name in PRESETS {
        let inst = preset(name).unwrap();
        let bundle = inst.transport.bundle();
        let sizes: Vec<usize> = inst
            .paths
            .iter()
            .flat_map(|p| {
                let d = p.domain();
                linspace(d.lo(), d.hi(), 9).into_iter().map(move |s| p.eval(s).unwrap())
            })
            .map(|x| bundle.fibre_at(&x).unwrap().size())
            .collect();
        assert!(sizes.windows(2).all(|w| w[0] == w[1]), "{name}: {sizes:?}");
    }
}

#[test]
fn leaves_partition_the_total_space() {
    let inst = preset("foliation-2sec").unwrap();
    let bundle = inst.transport.bundle();
    let nodes: Vec<usize> = (0..bundle.base().nodes().len()).collect();
    let sections = bundle.sections_of_family().unwrap();
    for (n, l) in bundle.total_space_over(&nodes).unwrap() {
        let u = FibreElement::label(BasePoint::Node(n), l);
        let hits = sections
            .iter()
            .filter(|s| s.at(&BasePoint::Node(n)) == Some(u.clone()))
            .count();
        assert_eq!(hits, 1, "node {n} label {l}");
    }
}

#[test]
fn foliation_sections_are_transported() {
    let inst = preset("foliation-2sec").unwrap();
    let t = inst.transport.as_ref();
    for sigma in t.bundle().sections_of_family().unwrap() {
        for p in &inst.paths {
            let d = p.domain();
            let grid = linspace(d.lo(), d.hi(), 33);
            for &s0 in &[d.lo(), d.hi()] {
                assert!(t.is_transported_section(&sigma, p, s0, &grid, 0.0).unwrap());
            }
        }
    }
}

#[test]
fn declared_properties_are_honest() {
    for name in PRESETS {
        let inst = preset(name).unwrap();
        let cfg = RunConfig::new(name);
        for law in applicable_laws(&inst) {
            let report = run_law(&inst, law, &cfg).unwrap();
            assert!(report.passed(), "{name} law {law}: {}", report.max_deviation);
        }
    }
    for kind in CounterexampleKind::ALL {
        let name = format!("counterexample:{}", kind.name());
        let inst = preset(&name).unwrap();
        let report = run_law(&inst, kind.broken_law(), &RunConfig::new(&name)).unwrap();
        assert!(!report.passed(), "{name} passes {}", kind.broken_law());
    }
}

#[test]
fn self_consistency_agrees_with_the_group_law() {
    let names = PRESETS.iter().map(|s| s.to_string()).chain(
        CounterexampleKind::ALL
            .iter()
            .map(|k| format!("counterexample:{}", k.name())),
    );
    for name in names {
        let inst = preset(&name).unwrap();
        let t: &Arc<dyn Transport> = &inst.transport;
        let tol = fibre_transport::transport::law_tolerance("2.2", t.tolerance());
        let mut cfg = CheckConfig::new(DEFAULT_TRIALS, tol, DEFAULT_SEED);
        if t.bundle().is_finite() {
            cfg = cfg.exhaustive();
        }
        let group = check_group_law(t.as_ref(), &inst.paths, &cfg).unwrap();
        let lifts = check_self_consistency(t, &inst.paths, &cfg).unwrap();
        assert_eq!(group.passed(), lifts.passed(), "{name}");
    }
}

#[test]
fn parallelization_is_path_independent_on_loops() {
    let inst = preset("parallelization-flat").unwrap();
    let mut loops = inst.paths.clone();
    loops.extend(inst.loop_path.clone());
    loops.push(figure_eight(inst.transport.bundle().base()).unwrap());
    let report = check_global_uniqueness(inst.transport.as_ref(), &loops, &UniquenessScope::Paths, 0.0).unwrap();
    assert!(report.passed() && report.trials > 0);
}

#[test]
fn halving_the_step_cuts_the_error_twelvefold() {
    let rows = step_sweep(&octant_loop().unwrap(), &[4e-3, 2e-3], Some(OCTANT_HOLONOMY)).unwrap();
    let ratio = rows[0].error / rows[1].error;
    assert!(ratio >= 12.0, "{ratio}");
}
