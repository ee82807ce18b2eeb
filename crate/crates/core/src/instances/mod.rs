//! Concrete transports and the named presets built from them.

mod counterexample;
mod foliation;
mod ode;
mod parallelization;
mod permutation;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

pub use counterexample::{Counterexample, CounterexampleKind};
pub use foliation::FoliationTransport;
pub use ode::{rotation_angle, Christoffel, ConnectionCoefficients, IntegratorConfig, LinearOdeTransport, Method};
pub use parallelization::{dyadic_monomial, Parallelization, ParallelizationTransport};
pub use permutation::PermutationTransport;

use crate::bundle::{BaseSpace, BundleDescriptor, FibreBundle, FibreKind};
use crate::error::{Error, Result};
use crate::path::{
    equator_meridian_arc, great_circle_from, latitude_arc, octant_loop, quarter_equator, ChiParameter, DiscreteTrace,
    Interval, Path,
};
use crate::tolerance;
use crate::transport::Transport;

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 4] = [
    "perm-c3",
    "foliation-2sec",
    "parallelization-flat",
    "sphere-levi-civita",
];

/// A transport bundled with the paths its laws are checked on.
#[derive(Clone)]
pub struct Instance {
    pub name: String,
    pub transport: Arc<dyn Transport>,
    /// Sample paths for the law checkers.
    pub paths: Vec<Path>,
    /// Factors and parameter of a product for the product laws.
    pub product: Option<(Path, Path, ChiParameter)>,
    /// A closed loop for holonomy and uniqueness checks.
    pub loop_path: Option<Path>,
    /// Default path for liftings and factorizations.
    pub lift_path: Path,
    /// Set on counterexamples: checks run every law the structure admits,
    /// not only the declared ones.
    pub negative_control: bool,
}

impl std::fmt::Debug for Instance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Instance")
            .field("name", &self.name)
            .field("paths", &self.paths.len())
            .finish()
    }
}

/// Builds a preset by name: one of [`PRESETS`] or `counterexample:<kind>`.
pub fn preset(name: &str) -> Result<Instance> {
    if let Some(kind) = name.strip_prefix("counterexample:") {
        return Ok(counterexample_instance(kind.parse()?));
    }
    match name {
        "perm-c3" => perm_c3_instance(),
        "foliation-2sec" => foliation_2sec_instance(),
        "parallelization-flat" => parallelization_flat_instance(),
        "sphere-levi-civita" => sphere_instance(tolerance::RK4_STEP),
        _ => Err(Error::UnknownInstance(name.to_string())),
    }
}

/// Every preset name, counterexamples included.
pub fn all_preset_names() -> Vec<String> {
    PRESETS
        .iter()
        .map(|s| s.to_string())
        .chain(
            CounterexampleKind::ALL
                .iter()
                .map(|k| format!("counterexample:{}", k.name())),
        )
        .collect()
}

fn trace(base: &BaseSpace, lo: f64, hi: f64, nodes: &[&str]) -> Result<Path> {
    Path::through(base, Interval::new(lo, hi)?, nodes)
}

/// Three labels over the 3-cycle `x0 -> x1 -> x2 -> x0` with edge
/// permutations `(a b)`, `(b c)` and the identity; the holonomy of the
/// cycle sends `a` to `c`.
pub fn perm_c3() -> Result<PermutationTransport> {
    let base = BaseSpace::graph_with_edges("c3", &["x0", "x1", "x2"], &[("x0", "x1"), ("x1", "x2"), ("x2", "x0")])?;
    PermutationTransport::new(
        "perm-c3",
        base,
        &["a", "b", "c"],
        &[
            ((0, 1), vec![1, 0, 2]),
            ((1, 2), vec![0, 2, 1]),
            ((2, 0), vec![0, 1, 2]),
        ],
    )
}

fn perm_c3_instance() -> Result<Instance> {
    let t = perm_c3()?;
    let b = t.bundle().base().clone();
    let irregular = Path::discrete(
        &b,
        DiscreteTrace::from_pieces(Interval::unit(), &[(0.1, 0), (0.35, 1), (0.9, 2), (1.0, 0)])?,
    )?;
    let paths = vec![
        trace(&b, 0.0, 1.0, &["x0", "x1", "x2"])?,
        trace(&b, 0.0, 1.0, &["x0", "x1", "x2", "x0"])?,
        trace(&b, -1.0, 2.0, &["x2", "x1", "x0", "x1"])?,
        trace(&b, 0.0, 1.0, &["x1"])?,
        trace(&b, 0.0, 3.0, &["x1", "x0", "x1", "x2", "x0", "x1"])?,
        irregular,
    ];
    let product = (
        trace(&b, 0.0, 1.0, &["x0", "x1"])?,
        trace(&b, 0.0, 1.0, &["x1", "x2", "x0"])?,
        ChiParameter::canonical(),
    );
    Ok(Instance {
        name: "perm-c3".into(),
        loop_path: Some(paths[1].clone()),
        lift_path: paths[1].clone(),
        negative_control: false,
        paths,
        product: Some(product),
        transport: Arc::new(t),
    })
}

/// Two non-constant, pairwise non-intersecting sections over four nodes.
pub fn foliation_2sec() -> Result<FoliationTransport> {
    let bundle = FibreBundle::new(
        BaseSpace::graph("g4", &["y0", "y1", "y2", "y3"]),
        FibreKind::Sections {
            labels: ["l0", "l1", "l2", "l3"].iter().map(|s| s.to_string()).collect(),
            sections: vec![vec![0, 1, 2, 3], vec![1, 2, 3, 0]],
        },
    )?;
    FoliationTransport::new("foliation-2sec", bundle)
}

fn foliation_2sec_instance() -> Result<Instance> {
    let t = foliation_2sec()?;
    let b = t.bundle().base().clone();
    let paths = vec![
        trace(&b, 0.0, 1.0, &["y0", "y1", "y2", "y3"])?,
        trace(&b, 0.0, 2.0, &["y3", "y0", "y2"])?,
        trace(&b, 0.0, 1.0, &["y0", "y2", "y0", "y1", "y0"])?,
        trace(&b, 0.0, 1.0, &["y2"])?,
        trace(&b, -0.5, 0.5, &["y1", "y3", "y1", "y2"])?,
    ];
    let product = (
        trace(&b, 0.0, 1.0, &["y0", "y1"])?,
        trace(&b, 0.0, 1.0, &["y1", "y3"])?,
        ChiParameter::canonical(),
    );
    Ok(Instance {
        name: "foliation-2sec".into(),
        loop_path: Some(paths[2].clone()),
        lift_path: paths[0].clone(),
        negative_control: false,
        paths,
        product: Some(product),
        transport: Arc::new(t),
    })
}

/// `R^2` fibres over four nodes with dyadic monomial frames, so every
/// `P(x, y)` and every composition is computed exactly.
pub fn parallelization_flat() -> Result<ParallelizationTransport> {
    let specs: [(&[usize], &[f64], &[i32]); 4] = [
        (&[0, 1], &[1.0, 1.0], &[0, 0]),
        (&[1, 0], &[-1.0, 1.0], &[1, 0]),
        (&[0, 1], &[1.0, -1.0], &[-1, 2]),
        (&[1, 0], &[1.0, 1.0], &[3, -2]),
    ];
    let (frames, inverses): (Vec<_>, Vec<_>) = specs
        .iter()
        .map(|(perm, signs, exps)| dyadic_monomial(perm, signs, exps))
        .unzip();
    ParallelizationTransport::from_frames(
        "parallelization-flat",
        BaseSpace::graph("z4", &["z0", "z1", "z2", "z3"]),
        frames,
        inverses,
    )
}

/// The figure-eight loop `z0 > z1 > z0 > z2 > z0` of the flat preset: it
/// passes `z0` three times.
pub fn figure_eight(base: &BaseSpace) -> Result<Path> {
    trace(base, 0.0, 1.0, &["z0", "z1", "z0", "z2", "z0"])
}

fn parallelization_flat_instance() -> Result<Instance> {
    let t = parallelization_flat()?;
    let b = t.bundle().base().clone();
    let eight = figure_eight(&b)?;
    let paths = vec![
        trace(&b, 0.0, 1.0, &["z0", "z1", "z2", "z3"])?,
        eight.clone(),
        trace(&b, 1.0, 4.0, &["z3", "z1", "z3", "z0"])?,
        trace(&b, 0.0, 1.0, &["z2"])?,
    ];
    let product = (
        trace(&b, 0.0, 1.0, &["z0", "z3"])?,
        trace(&b, 0.0, 1.0, &["z3", "z1", "z2"])?,
        ChiParameter::canonical(),
    );
    Ok(Instance {
        name: "parallelization-flat".into(),
        loop_path: Some(eight),
        lift_path: paths[0].clone(),
        negative_control: false,
        paths,
        product: Some(product),
        transport: Arc::new(t),
    })
}

/// Seeded great-circle arcs of length up to `pi`, kept off the poles.
pub fn sample_sphere_arcs(count: usize, seed: u64) -> Vec<Path> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let theta = rng.random_range(0.6..(PI - 0.6));
        let phi = rng.random_range(-PI..PI);
        let dir = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let length = if out.is_empty() { PI } else { rng.random_range(0.1..=PI) };
        let lo = rng.random_range(-1.0..1.0);
        let width = rng.random_range(0.5..2.0);
        let domain = Interval::new(lo, lo + width).expect("ordered");
        if let Ok(p) = great_circle_from([theta, phi], dir, length, domain) {
            out.push(p);
        }
    }
    out
}

/// The product of the quarter equator with a meridian arc, on `[0, 1]`.
pub fn sphere_product_path() -> Result<Path> {
    Path::concatenate(&quarter_equator(), &equator_meridian_arc(), &ChiParameter::canonical())
}

/// Levi-Civita transport on the round sphere at integrator step `step`.
pub fn sphere_instance(step: f64) -> Result<Instance> {
    let t = LinearOdeTransport::sphere_levi_civita(step)?;
    let mut paths = sample_sphere_arcs(6, tolerance::DEFAULT_SEED);
    paths.push(quarter_equator());
    paths.push(equator_meridian_arc());
    paths.push(latitude_arc(1.0, 0.0, 2.0, Interval::new(-0.5, 1.5)?)?);
    paths.push(sphere_product_path()?);
    let octant = octant_loop()?;
    paths.push(octant.clone());
    Ok(Instance {
        name: "sphere-levi-civita".into(),
        lift_path: quarter_equator(),
        negative_control: false,
        paths,
        product: Some((quarter_equator(), equator_meridian_arc(), ChiParameter::canonical())),
        loop_path: Some(octant),
        transport: Arc::new(t),
    })
}

fn counterexample_instance(kind: CounterexampleKind) -> Instance {
    let t = Counterexample::new(kind);
    let b = t.bundle().base().clone();
    let p = |lo, hi, nodes: &[&str]| trace(&b, lo, hi, nodes).expect("valid preset path");
    let paths = vec![
        p(0.0, 1.0, &["w0", "w1", "w2", "w3"]),
        p(0.0, 2.0, &["w3", "w1", "w0"]),
        p(0.0, 1.0, &["w0", "w2", "w0", "w3", "w1"]),
        p(-1.0, 1.0, &["w2", "w3", "w1"]),
    ];
    Instance {
        name: t.name().to_string(),
        lift_path: paths[0].clone(),
        negative_control: true,
        product: Some((
            p(0.0, 1.0, &["w0", "w1"]),
            p(0.0, 1.0, &["w1", "w3"]),
            ChiParameter::canonical(),
        )),
        loop_path: Some(paths[2].clone()),
        paths,
        transport: Arc::new(t),
    }
}

/// Custom finite instance:
/// `{"bundle": <bundle descriptor>, "transport": {"kind": "permutation",
/// "edges": [{"from": "x0", "to": "x1", "perm": ["b", "a", "c"]}]}
/// | {"kind": "foliation"}, "paths": [<path>, ...], "product": [i, j],
/// "loop": k}`. `perm` lists the images of the labels in label order.
pub fn instance_from_json(text: &str) -> Result<Instance> {
    let doc: InstanceDocument = serde_json::from_str(text)?;
    let bundle = doc.bundle.build()?;
    let name = doc.name.unwrap_or_else(|| "custom".into());
    let transport: Arc<dyn Transport> = match &doc.transport {
        TransportDocument::Permutation { edges } => {
            let base = bundle.base().clone();
            let node = |n: &str| base.node_index(n).ok_or_else(|| Error::PointNotInBase(n.into()));
            let label = |l: &str| {
                bundle
                    .label_index(l)
                    .ok_or_else(|| Error::Config(format!("unknown label `{l}`")))
            };
            let perms = edges
                .iter()
                .map(|e| {
                    let table = e.perm.iter().map(|l| label(l)).collect::<Result<Vec<_>>>()?;
                    Ok(((node(&e.from)?, node(&e.to)?), table))
                })
                .collect::<Result<Vec<_>>>()?;
            let labels: Vec<&str> = bundle.labels().iter().map(String::as_str).collect();
            if !matches!(bundle.fibre(), FibreKind::Finite { .. }) {
                return Err(Error::WrongBundleKind { expected: "finite" });
            }
            Arc::new(PermutationTransport::new(&name, base.clone(), &labels, &perms)?)
        }
        TransportDocument::Foliation => Arc::new(FoliationTransport::new(&name, bundle.clone())?),
    };
    let base = bundle.base();
    let paths = doc
        .paths
        .iter()
        .map(|v| Path::from_json(&v.to_string(), base))
        .collect::<Result<Vec<_>>>()?;
    if paths.is_empty() {
        return Err(Error::Config("instance needs at least one path".into()));
    }
    let pick = |i: usize| {
        paths
            .get(i)
            .cloned()
            .ok_or_else(|| Error::Config(format!("path index {i} out of range")))
    };
    let product = match doc.product {
        Some([i, j]) => {
            let (p1, p2) = (pick(i)?, pick(j)?);
            let chi = ChiParameter::affine(0.0, 0.5, 1.0, p1.domain(), p2.domain())?;
            Some((p1, p2, chi))
        }
        None => None,
    };
    let loop_path = doc.r#loop.map(pick).transpose()?;
    Ok(Instance {
        name,
        lift_path: paths[0].clone(),
        negative_control: false,
        paths,
        product,
        loop_path,
        transport,
    })
}

#[derive(Deserialize)]
struct InstanceDocument {
    #[serde(default)]
    name: Option<String>,
    bundle: BundleDescriptor,
    transport: TransportDocument,
    paths: Vec<serde_json::Value>,
    #[serde(default)]
    product: Option<[usize; 2]>,
    #[serde(default)]
    r#loop: Option<usize>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum TransportDocument {
    Permutation { edges: Vec<EdgeDocument> },
    Foliation,
}

#[derive(Deserialize)]
struct EdgeDocument {
    from: String,
    to: String,
    perm: Vec<String>,
}
