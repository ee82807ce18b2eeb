//! Fibre bundles `(E, pi, B)`: base spaces, fibres, sections and bundle metrics.
//!
//! Two kinds of base are supported: finite graphs (points compared by node
//! identity) and the round unit sphere in the spherical chart `(theta, phi)`
//! with the poles excluded. Fibres are finite label sets, families of
//! pairwise non-intersecting sections, or vector spaces with an explicit
//! frame at every point. Nothing here assumes local triviality.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance;

/// A point `x` of the base space.
#[derive(Clone, Debug, PartialEq)]
pub enum BasePoint {
    /// Node of a finite graph, by index.
    Node(usize),
    /// Chart coordinates `(theta, phi)` on the sphere.
    Chart([f64; 2]),
}

impl BasePoint {
    pub fn chart(theta: f64, phi: f64) -> Self {
        BasePoint::Chart([theta, phi])
    }

    pub fn node(&self) -> Option<usize> {
        match self {
            BasePoint::Node(n) => Some(*n),
            BasePoint::Chart(_) => None,
        }
    }

    pub fn coords(&self) -> Option<[f64; 2]> {
        match self {
            BasePoint::Chart(c) => Some(*c),
            BasePoint::Node(_) => None,
        }
    }

    /// Point identity: exact for nodes, within `tol` for chart points with
    /// the longitude compared modulo `2 pi`.
    pub fn coincides(&self, other: &BasePoint, tol: f64) -> bool {
        match (self, other) {
            (BasePoint::Node(a), BasePoint::Node(b)) => a == b,
            (BasePoint::Chart(a), BasePoint::Chart(b)) => {
                (a[0] - b[0]).abs() <= tol && wrap_angle(a[1] - b[1]).abs() <= tol
            }
            _ => false,
        }
    }

    /// [`coincides`](Self::coincides) at the element-matching tolerance.
    pub fn same_as(&self, other: &BasePoint) -> bool {
        self.coincides(other, tolerance::POINT_MATCH)
    }
}

impl fmt::Display for BasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasePoint::Node(n) => write!(f, "node#{n}"),
            BasePoint::Chart([t, p]) => write!(f, "(theta={t:.6}, phi={p:.6})"),
        }
    }
}

/// Angle reduced to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// The value of a fibre element relative to its fibre.
#[derive(Clone, Debug, PartialEq)]
pub enum FibreValue {
    /// Index into the bundle's label universe.
    Label(usize),
    /// Components in the frame declared at the base point.
    Vector(DVector<f64>),
}

/// An element `u` of the fibre `pi^{-1}(over)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FibreElement {
    pub over: BasePoint,
    pub value: FibreValue,
}

impl FibreElement {
    pub fn label(over: BasePoint, label: usize) -> Self {
        FibreElement {
            over,
            value: FibreValue::Label(label),
        }
    }

    pub fn vector(over: BasePoint, components: DVector<f64>) -> Self {
        FibreElement {
            over,
            value: FibreValue::Vector(components),
        }
    }

    /// The projection `pi(u)`.
    pub fn projection(&self) -> &BasePoint {
        &self.over
    }

    pub fn as_label(&self) -> Option<usize> {
        match self.value {
            FibreValue::Label(l) => Some(l),
            FibreValue::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&DVector<f64>> {
        match &self.value {
            FibreValue::Vector(v) => Some(v),
            FibreValue::Label(_) => None,
        }
    }
}

/// The base space `B`.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseSpace {
    /// Finite graph. Edges are informational; transports may require them.
    Graph {
        name: String,
        nodes: Vec<String>,
        edges: Vec<(usize, usize)>,
    },
    /// Round unit sphere in the chart `(theta, phi)`, poles excluded.
    Sphere,
}

impl BaseSpace {
    pub fn graph(name: &str, nodes: &[&str]) -> Self {
        BaseSpace::Graph {
            name: name.to_string(),
            nodes: nodes.iter().map(|s| s.to_string()).collect(),
            edges: Vec::new(),
        }
    }

    /// Graph with directed edges given by node names.
    pub fn graph_with_edges(name: &str, nodes: &[&str], edges: &[(&str, &str)]) -> Result<Self> {
        let index = |n: &str| {
            nodes
                .iter()
                .position(|m| *m == n)
                .ok_or_else(|| Error::PointNotInBase(n.to_string()))
        };
        let edges = edges
            .iter()
            .map(|(a, b)| Ok((index(a)?, index(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BaseSpace::Graph {
            name: name.to_string(),
            nodes: nodes.iter().map(|s| s.to_string()).collect(),
            edges,
        })
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        match self {
            BaseSpace::Graph { edges, .. } => edges,
            BaseSpace::Sphere => &[],
        }
    }

    pub fn id(&self) -> String {
        match self {
            BaseSpace::Graph { name, .. } => format!("graph:{name}"),
            BaseSpace::Sphere => "sphere".to_string(),
        }
    }

    pub fn contains(&self, x: &BasePoint) -> bool {
        match (self, x) {
            (BaseSpace::Graph { nodes, .. }, BasePoint::Node(n)) => *n < nodes.len(),
            (BaseSpace::Sphere, BasePoint::Chart([theta, phi])) => {
                theta.is_finite()
                    && phi.is_finite()
                    && *theta >= tolerance::POLE_MARGIN
                    && *theta <= PI - tolerance::POLE_MARGIN
            }
            _ => false,
        }
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        match self {
            BaseSpace::Graph { nodes, .. } => nodes.iter().position(|n| n == name),
            BaseSpace::Sphere => None,
        }
    }

    pub fn node_name(&self, idx: usize) -> Option<&str> {
        match self {
            BaseSpace::Graph { nodes, .. } => nodes.get(idx).map(String::as_str),
            BaseSpace::Sphere => None,
        }
    }

    pub fn nodes(&self) -> &[String] {
        match self {
            BaseSpace::Graph { nodes, .. } => nodes,
            BaseSpace::Sphere => &[],
        }
    }

    pub fn point_name(&self, x: &BasePoint) -> String {
        match x {
            BasePoint::Node(n) => self.node_name(*n).map(str::to_string).unwrap_or_else(|| x.to_string()),
            BasePoint::Chart(_) => x.to_string(),
        }
    }
}

/// What the fibres look like.
#[derive(Clone, Debug, PartialEq)]
pub enum FibreKind {
    /// The same finite label set over every point.
    Finite { labels: Vec<String> },
    /// Fibres made of the values of pairwise non-intersecting sections.
    /// `sections[alpha][node]` is a label index.
    Sections {
        labels: Vec<String>,
        sections: Vec<Vec<usize>>,
    },
    /// `R^dim` with the standard frame `e_1..e_dim` at every point.
    Vector { dim: usize },
    /// Tangent planes of the sphere in the coordinate frame `(d_theta, d_phi)`.
    Tangent,
}

/// The description of one fibre `pi^{-1}(x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum FibreDescription {
    /// The enumerated labels of a finite fibre, in fibre order.
    Labels(Vec<usize>),
    /// A vector fibre with its frame names and the metric matrix at `x`.
    Frame {
        dim: usize,
        frame: Vec<String>,
        metric: Option<DMatrix<f64>>,
    },
}

impl FibreDescription {
    /// Cardinality of a finite fibre or dimension of a vector fibre.
    pub fn size(&self) -> usize {
        match self {
            FibreDescription::Labels(l) => l.len(),
            FibreDescription::Frame { dim, .. } => *dim,
        }
    }
}

type FormFn = dyn Fn(&BasePoint) -> DMatrix<f64> + Send + Sync;

/// A family of bilinear forms `g_x` on the fibres, given as matrices in the
/// declared frames.
#[derive(Clone)]
pub struct BundleMetric {
    name: String,
    form: Arc<FormFn>,
    /// `true` when the form is declared a metric (nondegenerate), not just a form.
    pub nondegenerate: bool,
}

impl fmt::Debug for BundleMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BundleMetric")
            .field("name", &self.name)
            .field("nondegenerate", &self.nondegenerate)
            .finish()
    }
}

impl BundleMetric {
    pub fn new(
        name: &str,
        nondegenerate: bool,
        form: impl Fn(&BasePoint) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        BundleMetric {
            name: name.to_string(),
            form: Arc::new(form),
            nondegenerate,
        }
    }

    /// First fundamental form of the unit sphere, `diag(1, sin^2 theta)`.
    pub fn round_sphere() -> Self {
        BundleMetric::new("round-sphere", true, |x| {
            let theta = x.coords().map(|c| c[0]).unwrap_or(f64::NAN);
            let s = theta.sin();
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, s * s]))
        })
    }

    /// The identity form in every frame.
    pub fn euclidean(dim: usize) -> Self {
        BundleMetric::new("euclidean", true, move |_| DMatrix::identity(dim, dim))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The matrix of `g_x`.
    pub fn at(&self, x: &BasePoint) -> DMatrix<f64> {
        (self.form)(x)
    }

    /// `g_x(u, v)`.
    pub fn evaluate(&self, x: &BasePoint, u: &FibreElement, v: &FibreElement) -> Result<f64> {
        if !u.over.same_as(x) || !v.over.same_as(x) {
            return Err(Error::BasePointMismatch);
        }
        let (a, b) = match (u.as_vector(), v.as_vector()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::WrongFibreKind { expected: "vector" }),
        };
        let g = self.at(x);
        if g.nrows() != a.len() || a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: g.nrows(),
                found: a.len(),
            });
        }
        Ok(a.dot(&(&g * b)))
    }

    /// Checks symmetry, and nondegeneracy when declared, at `x`.
    pub fn validate_at(&self, x: &BasePoint, tol: f64) -> Result<()> {
        let g = self.at(x);
        let asym = (&g - g.transpose()).amax();
        if asym > tol {
            return Err(Error::InvalidBundle(format!(
                "metric `{}` is not symmetric at {x}",
                self.name
            )));
        }
        if self.nondegenerate && g.determinant().abs() <= tol {
            return Err(Error::InvalidBundle(format!(
                "metric `{}` is degenerate at {x}",
                self.name
            )));
        }
        Ok(())
    }
}

type SectionFn = dyn Fn(&BasePoint) -> Option<FibreValue> + Send + Sync;

/// A section `sigma: B -> E`. Values are always returned over the queried
/// point, so `pi . sigma = id` holds by construction.
#[derive(Clone)]
pub struct Section {
    name: String,
    assignment: Arc<SectionFn>,
}

impl fmt::Debug for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Section").field("name", &self.name).finish()
    }
}

impl Section {
    pub fn new(name: &str, assignment: impl Fn(&BasePoint) -> Option<FibreValue> + Send + Sync + 'static) -> Self {
        Section {
            name: name.to_string(),
            assignment: Arc::new(assignment),
        }
    }

    /// Section over a graph given by one label per node.
    pub fn from_node_labels(name: &str, labels: Vec<usize>) -> Self {
        Section::new(name, move |x| {
            x.node().and_then(|n| labels.get(n)).map(|&l| FibreValue::Label(l))
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `sigma(x)`, or `None` where the section is undefined.
    pub fn at(&self, x: &BasePoint) -> Option<FibreElement> {
        (self.assignment)(x).map(|value| FibreElement { over: x.clone(), value })
    }
}

/// A fibre bundle `(E, pi, B)` with an optional bundle metric.
#[derive(Clone, Debug)]
pub struct FibreBundle {
    base: BaseSpace,
    fibre: FibreKind,
    metric: Option<BundleMetric>,
}

impl FibreBundle {
    pub fn new(base: BaseSpace, fibre: FibreKind) -> Result<Self> {
        let bundle = FibreBundle {
            base,
            fibre,
            metric: None,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn with_metric(mut self, metric: BundleMetric) -> Self {
        self.metric = Some(metric);
        self
    }

    /// Tangent bundle of the unit sphere with the round metric.
    pub fn sphere_tangent() -> Self {
        FibreBundle {
            base: BaseSpace::Sphere,
            fibre: FibreKind::Tangent,
            metric: Some(BundleMetric::round_sphere()),
        }
    }

    fn validate(&self) -> Result<()> {
        match (&self.base, &self.fibre) {
            (BaseSpace::Graph { nodes, edges, .. }, fibre) => {
                if nodes.is_empty() {
                    return Err(Error::InvalidBundle("graph base has no nodes".into()));
                }
                let unique: HashSet<_> = nodes.iter().collect();
                if unique.len() != nodes.len() {
                    return Err(Error::InvalidBundle("duplicate node names".into()));
                }
                if edges.iter().any(|&(a, b)| a >= nodes.len() || b >= nodes.len()) {
                    return Err(Error::InvalidBundle("edge refers to a missing node".into()));
                }
                match fibre {
                    FibreKind::Finite { labels } => validate_labels(labels),
                    FibreKind::Sections { labels, sections } => {
                        validate_labels(labels)?;
                        if sections.is_empty() {
                            return Err(Error::InvalidBundle("empty section family".into()));
                        }
                        for (alpha, s) in sections.iter().enumerate() {
                            if s.len() != nodes.len() {
                                return Err(Error::InvalidBundle(format!(
                                    "section {alpha} is not defined on every node"
                                )));
                            }
                            if s.iter().any(|&l| l >= labels.len()) {
                                return Err(Error::InvalidBundle(format!("section {alpha} uses an unknown label")));
                            }
                        }
                        for n in 0..nodes.len() {
                            let values: HashSet<usize> = sections.iter().map(|s| s[n]).collect();
                            if values.len() != sections.len() {
                                return Err(Error::InvalidBundle(format!(
                                    "sections intersect over node `{}`",
                                    nodes[n]
                                )));
                            }
                        }
                        Ok(())
                    }
                    FibreKind::Vector { dim } if *dim > 0 => Ok(()),
                    FibreKind::Vector { .. } => Err(Error::InvalidBundle("vector fibre of dimension 0".into())),
                    FibreKind::Tangent => Err(Error::InvalidBundle("tangent fibres need a chart base".into())),
                }
            }
            (BaseSpace::Sphere, FibreKind::Tangent) => Ok(()),
            (BaseSpace::Sphere, FibreKind::Vector { dim }) if *dim > 0 => Ok(()),
            (BaseSpace::Sphere, _) => Err(Error::InvalidBundle(
                "sphere base supports tangent or vector fibres".into(),
            )),
        }
    }

    pub fn base(&self) -> &BaseSpace {
        &self.base
    }

    pub fn fibre(&self) -> &FibreKind {
        &self.fibre
    }

    pub fn metric(&self) -> Option<&BundleMetric> {
        self.metric.as_ref()
    }

    pub fn base_id(&self) -> String {
        self.base.id()
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.fibre, FibreKind::Finite { .. } | FibreKind::Sections { .. })
    }

    pub fn is_vector(&self) -> bool {
        !self.is_finite()
    }

    /// Dimension of vector fibres.
    pub fn dim(&self) -> Option<usize> {
        match self.fibre {
            FibreKind::Vector { dim } => Some(dim),
            FibreKind::Tangent => Some(2),
            _ => None,
        }
    }

    pub fn labels(&self) -> &[String] {
        match &self.fibre {
            FibreKind::Finite { labels } | FibreKind::Sections { labels, .. } => labels,
            _ => &[],
        }
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.labels().iter().position(|l| l == name)
    }

    /// The fibre `pi^{-1}(x)`.
    pub fn fibre_at(&self, x: &BasePoint) -> Result<FibreDescription> {
        if !self.base.contains(x) {
            return Err(Error::PointNotInBase(x.to_string()));
        }
        Ok(match &self.fibre {
            FibreKind::Finite { labels } => FibreDescription::Labels((0..labels.len()).collect()),
            FibreKind::Sections { sections, .. } => {
                let n = x.node().expect("graph base");
                FibreDescription::Labels(sections.iter().map(|s| s[n]).collect())
            }
            FibreKind::Vector { dim } => FibreDescription::Frame {
                dim: *dim,
                frame: (1..=*dim).map(|i| format!("e{i}")).collect(),
                metric: self.metric.as_ref().map(|m| m.at(x)),
            },
            FibreKind::Tangent => FibreDescription::Frame {
                dim: 2,
                frame: vec!["d_theta".into(), "d_phi".into()],
                metric: self.metric.as_ref().map(|m| m.at(x)),
            },
        })
    }

    /// All elements of a finite fibre, in fibre order.
    pub fn fibre_elements(&self, x: &BasePoint) -> Result<Vec<FibreElement>> {
        match self.fibre_at(x)? {
            FibreDescription::Labels(ls) => Ok(ls.into_iter().map(|l| FibreElement::label(x.clone(), l)).collect()),
            FibreDescription::Frame { .. } => Err(Error::WrongFibreKind { expected: "finite" }),
        }
    }

    /// Position of `u` within the enumerated fibre over its base point.
    pub fn fibre_index(&self, u: &FibreElement) -> Result<usize> {
        match (self.fibre_at(&u.over)?, &u.value) {
            (FibreDescription::Labels(ls), FibreValue::Label(l)) => ls
                .iter()
                .position(|x| x == l)
                .ok_or(Error::ElementNotOverPathPoint(f64::NAN)),
            _ => Err(Error::WrongFibreKind { expected: "finite" }),
        }
    }

    /// Checks that `u` is an element of the fibre over its own base point.
    pub fn check_element(&self, u: &FibreElement) -> Result<()> {
        match (self.fibre_at(&u.over)?, &u.value) {
            (FibreDescription::Labels(ls), FibreValue::Label(l)) => {
                if ls.contains(l) {
                    Ok(())
                } else {
                    Err(Error::InvalidBundle(format!(
                        "label {l} is not in the fibre over {}",
                        u.over
                    )))
                }
            }
            (FibreDescription::Frame { dim, .. }, FibreValue::Vector(v)) => {
                if v.len() == dim {
                    Ok(())
                } else {
                    Err(Error::DimensionMismatch {
                        expected: dim,
                        found: v.len(),
                    })
                }
            }
            (FibreDescription::Labels(_), _) => Err(Error::WrongFibreKind { expected: "finite" }),
            (FibreDescription::Frame { .. }, _) => Err(Error::WrongFibreKind { expected: "vector" }),
        }
    }

    /// Uniform label (finite fibres) or a point of the unit ball in frame
    /// coordinates (vector fibres).
    pub fn random_element<R: Rng + ?Sized>(&self, x: &BasePoint, rng: &mut R) -> Result<FibreElement> {
        match self.fibre_at(x)? {
            FibreDescription::Labels(ls) => {
                let l = ls[rng.random_range(0..ls.len())];
                Ok(FibreElement::label(x.clone(), l))
            }
            FibreDescription::Frame { dim, .. } => Ok(FibreElement::vector(x.clone(), random_in_unit_ball(dim, rng))),
        }
    }

    /// Distance between two elements, used as the deviation of every law.
    ///
    /// Labels: 0 when equal, 1 otherwise. Vectors: norm of the difference in
    /// the bundle metric when there is one, Euclidean frame norm otherwise.
    /// Elements over different points are infinitely far apart.
    pub fn distance(&self, a: &FibreElement, b: &FibreElement) -> f64 {
        if !a.over.same_as(&b.over) {
            return f64::INFINITY;
        }
        match (&a.value, &b.value) {
            (FibreValue::Label(x), FibreValue::Label(y)) => {
                if x == y {
                    0.0
                } else {
                    1.0
                }
            }
            (FibreValue::Vector(x), FibreValue::Vector(y)) => {
                if x.len() != y.len() {
                    return f64::INFINITY;
                }
                let d = x - y;
                match self.metric.as_ref().filter(|m| m.nondegenerate) {
                    Some(m) => {
                        let g = m.at(&a.over);
                        d.dot(&(&g * &d)).max(0.0).sqrt()
                    }
                    None => d.norm(),
                }
            }
            _ => f64::INFINITY,
        }
    }

    /// Norm of a vector element (metric norm when available).
    pub fn norm(&self, u: &FibreElement) -> f64 {
        match &u.value {
            FibreValue::Vector(v) => {
                let zero = FibreElement::vector(u.over.clone(), DVector::zeros(v.len()));
                self.distance(u, &zero)
            }
            FibreValue::Label(_) => 0.0,
        }
    }

    /// `g_x(u, v)` with the bundle metric.
    pub fn evaluate_metric(&self, x: &BasePoint, u: &FibreElement, v: &FibreElement) -> Result<f64> {
        let m = self
            .metric
            .as_ref()
            .ok_or(Error::WrongBundleKind { expected: "metric" })?;
        m.evaluate(x, u, v)
    }

    /// The defining sections of a section-family bundle.
    pub fn sections_of_family(&self) -> Result<Vec<Section>> {
        match &self.fibre {
            FibreKind::Sections { sections, .. } => Ok(sections
                .iter()
                .enumerate()
                .map(|(alpha, s)| Section::from_node_labels(&format!("sigma{alpha}"), s.clone()))
                .collect()),
            _ => Err(Error::WrongBundleKind {
                expected: "section-family",
            }),
        }
    }

    /// Index `alpha(u)` of the unique defining section through `u`.
    pub fn section_through(&self, u: &FibreElement) -> Result<usize> {
        match (&self.fibre, &u.over, &u.value) {
            (FibreKind::Sections { sections, .. }, BasePoint::Node(n), FibreValue::Label(l)) => sections
                .iter()
                .position(|s| s.get(*n) == Some(l))
                .ok_or(Error::ElementNotOnAnySection),
            (FibreKind::Sections { .. }, _, _) => Err(Error::ElementNotOnAnySection),
            _ => Err(Error::WrongBundleKind {
                expected: "section-family",
            }),
        }
    }

    /// Every element of the total space over the listed nodes, as
    /// `(node, label)` pairs.
    pub fn total_space_over(&self, nodes: &[usize]) -> Result<Vec<(usize, usize)>> {
        let mut out = Vec::new();
        for &n in nodes {
            for u in self.fibre_elements(&BasePoint::Node(n))? {
                out.push((n, u.as_label().expect("finite fibre")));
            }
        }
        Ok(out)
    }

    /// Human-readable rendering of an element.
    pub fn describe(&self, u: &FibreElement) -> String {
        let at = self.base.point_name(&u.over);
        match &u.value {
            FibreValue::Label(l) => {
                let name = self.labels().get(*l).cloned().unwrap_or_else(|| l.to_string());
                format!("{name}@{at}")
            }
            FibreValue::Vector(v) => {
                let comps: Vec<String> = v.iter().map(|c| format!("{c:.17e}")).collect();
                format!("[{}]@{at}", comps.join(", "))
            }
        }
    }
}

fn validate_labels(labels: &[String]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::InvalidBundle("empty label set".into()));
    }
    let unique: HashSet<_> = labels.iter().collect();
    if unique.len() != labels.len() {
        return Err(Error::InvalidBundle("duplicate labels".into()));
    }
    Ok(())
}

/// Uniform sample of the closed unit ball in `R^dim`.
pub fn random_in_unit_ball<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..=1.0));
        if v.norm_squared() <= 1.0 {
            return v;
        }
    }
}

/// JSON bundle descriptor, e.g.
/// `{"base":{"kind":"graph","nodes":["a","b"]},"fibre":{"kind":"finite","labels":["x","y"]}}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BundleDescriptor {
    pub base: BaseDescriptor,
    pub fibre: FibreDescriptor,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaseDescriptor {
    Graph {
        nodes: Vec<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        edges: Vec<[String; 2]>,
        #[serde(default = "default_graph_name")]
        name: String,
    },
    Sphere,
}

fn default_graph_name() -> String {
    "custom".to_string()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FibreDescriptor {
    Finite {
        labels: Vec<String>,
    },
    /// One list of labels per section, indexed like the base nodes.
    Sections {
        labels: Vec<String>,
        sections: Vec<Vec<String>>,
    },
    Vector {
        dim: usize,
    },
    Tangent,
}

impl BundleDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<FibreBundle> {
        let base = match &self.base {
            BaseDescriptor::Graph { nodes, edges, name } => {
                let idx = |n: &String| {
                    nodes
                        .iter()
                        .position(|x| x == n)
                        .ok_or_else(|| Error::PointNotInBase(n.clone()))
                };
                let edges = edges
                    .iter()
                    .map(|[a, b]| Ok((idx(a)?, idx(b)?)))
                    .collect::<Result<Vec<_>>>()?;
                BaseSpace::Graph {
                    name: name.clone(),
                    nodes: nodes.clone(),
                    edges,
                }
            }
            BaseDescriptor::Sphere => BaseSpace::Sphere,
        };
        let fibre = match &self.fibre {
            FibreDescriptor::Finite { labels } => FibreKind::Finite { labels: labels.clone() },
            FibreDescriptor::Sections { labels, sections } => {
                let lookup = |l: &String| {
                    labels
                        .iter()
                        .position(|x| x == l)
                        .ok_or_else(|| Error::InvalidBundle(format!("unknown label `{l}`")))
                };
                let sections = sections
                    .iter()
                    .map(|s| s.iter().map(lookup).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?;
                FibreKind::Sections {
                    labels: labels.clone(),
                    sections,
                }
            }
            FibreDescriptor::Vector { dim } => FibreKind::Vector { dim: *dim },
            FibreDescriptor::Tangent => FibreKind::Tangent,
        };
        let metric = match (&base, &fibre) {
            (BaseSpace::Sphere, FibreKind::Tangent) => Some(BundleMetric::round_sphere()),
            _ => None,
        };
        let mut bundle = FibreBundle::new(base, fibre)?;
        bundle.metric = metric;
        Ok(bundle)
    }
}
