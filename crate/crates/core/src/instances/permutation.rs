use std::collections::HashMap;

use crate::bundle::{BasePoint, BaseSpace, FibreBundle, FibreElement, FibreKind};
use crate::error::{Error, Result};
use crate::path::Path;
use crate::transport::{FibreMap, Properties, Transport};

/// Transport on a finite bundle over a graph: every directed edge carries a
/// permutation of the labels, the reverse edge its inverse. Moving along a
/// piecewise path composes the permutations of the edges it crosses.
#[derive(Clone, Debug)]
pub struct PermutationTransport {
    name: String,
    bundle: FibreBundle,
    edges: HashMap<(usize, usize), Vec<usize>>,
}

impl PermutationTransport {
    /// `edge_perms[i] = ((from, to), table)` where `table[label] = image`.
    /// Reverse edges get the inverse table unless declared, in which case
    /// the declaration must be that inverse.
    pub fn new(
        name: &str,
        base: BaseSpace,
        labels: &[&str],
        edge_perms: &[((usize, usize), Vec<usize>)],
    ) -> Result<Self> {
        let bundle = FibreBundle::new(
            base,
            FibreKind::Finite {
                labels: labels.iter().map(|s| s.to_string()).collect(),
            },
        )?;
        let n_nodes = bundle.base().nodes().len();
        let mut edges: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for ((a, b), table) in edge_perms {
            if *a >= n_nodes || *b >= n_nodes {
                return Err(Error::InvalidBundle(format!("edge ({a}, {b}) leaves the graph")));
            }
            if a == b {
                return Err(Error::InvalidBundle(format!("loop edge at node {a}")));
            }
            if table.len() != labels.len() {
                return Err(Error::DimensionMismatch {
                    expected: labels.len(),
                    found: table.len(),
                });
            }
            let FibreMap::Permutation(inverse) = FibreMap::Permutation(table.clone()).inverse()? else {
                unreachable!()
            };
            for (key, value) in [((*a, *b), table.clone()), ((*b, *a), inverse)] {
                match edges.get(&key) {
                    Some(existing) if *existing != value => {
                        return Err(Error::InvalidBundle(format!(
                            "edge ({}, {}) is declared inconsistently with its reverse",
                            key.0, key.1
                        )))
                    }
                    _ => {
                        edges.insert(key, value);
                    }
                }
            }
        }
        Ok(PermutationTransport {
            name: name.to_string(),
            bundle,
            edges,
        })
    }

    /// The permutation table of the directed edge `from -> to`.
    pub fn edge(&self, from: usize, to: usize) -> Option<&[usize]> {
        self.edges.get(&(from, to)).map(Vec::as_slice)
    }

    fn node_name(&self, n: usize) -> String {
        self.bundle.base().node_name(n).unwrap_or("?").to_string()
    }

    /// The composite table along a sequence of nodes.
    pub fn along(&self, nodes: &[usize]) -> Result<Vec<usize>> {
        let mut table: Vec<usize> = (0..self.bundle.labels().len()).collect();
        for w in nodes.windows(2) {
            let step = self
                .edges
                .get(&(w[0], w[1]))
                .ok_or_else(|| Error::PathNotEdgeConsistent {
                    from: self.node_name(w[0]),
                    to: self.node_name(w[1]),
                })?;
            for l in table.iter_mut() {
                *l = step[*l];
            }
        }
        Ok(table)
    }
}

impl Transport for PermutationTransport {
    fn name(&self) -> &str {
        &self.name
    }

    fn bundle(&self) -> &FibreBundle {
        &self.bundle
    }

    fn properties(&self) -> Properties {
        Properties::LOCAL | Properties::REPARAM_INVARIANT
    }

    fn apply(&self, p: &Path, s: f64, t: f64, u: &FibreElement) -> Result<FibreElement> {
        let trace = p
            .as_discrete()
            .ok_or_else(|| Error::InvalidPath("permutation transport needs a piecewise path".into()))?;
        let nodes = trace.nodes_between(s, t);
        let table = self.along(&nodes)?;
        let label = u.as_label().ok_or(Error::WrongFibreKind { expected: "finite" })?;
        Ok(FibreElement::label(
            BasePoint::Node(*nodes.last().expect("at least one node")),
            table[label],
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::Interval;
    use crate::transport::TransportExt;

    fn line() -> PermutationTransport {
        let base = BaseSpace::graph_with_edges("l3", &["n0", "n1", "n2"], &[("n0", "n1"), ("n1", "n2")]).unwrap();
        // e1 = (a b), e2 = (b c)
        PermutationTransport::new(
            "line",
            base,
            &["a", "b", "c"],
            &[((0, 1), vec![1, 0, 2]), ((1, 2), vec![0, 2, 1])],
        )
        .unwrap()
    }

    #[test]
    fn two_transpositions_send_a_to_c() {
        let t = line();
        let p = Path::through(t.bundle().base(), Interval::unit(), &["n0", "n1", "n2"]).unwrap();
        let u = FibreElement::label(BasePoint::Node(0), 0);
        let v = t.transport(&p, 0.0, 1.0, &u).unwrap();
        assert_eq!(v, FibreElement::label(BasePoint::Node(2), 2));
        let back = t.transport(&p, 1.0, 0.0, &v).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn cycle_edge_steps_a_to_b() {
        let base = BaseSpace::graph("pair", &["x", "y"]);
        let t = PermutationTransport::new("cyc", base, &["a", "b", "c"], &[((0, 1), vec![1, 2, 0])]).unwrap();
        let p = Path::through(t.bundle().base(), Interval::unit(), &["x", "y"]).unwrap();
        let v = t
            .transport(&p, 0.0, 1.0, &FibreElement::label(BasePoint::Node(0), 0))
            .unwrap();
        assert_eq!(v.as_label(), Some(1));
    }

    #[test]
    fn missing_edges_are_reported() {
        let t = line();
        let p = Path::through(t.bundle().base(), Interval::unit(), &["n0", "n2"]).unwrap();
        let r = t.transport(&p, 0.0, 1.0, &FibreElement::label(BasePoint::Node(0), 0));
        assert!(matches!(r, Err(Error::PathNotEdgeConsistent { .. })));
    }

    #[test]
    fn inconsistent_reverse_declaration_is_rejected() {
        let base = BaseSpace::graph("pair", &["x", "y"]);
        let r = PermutationTransport::new(
            "bad",
            base,
            &["a", "b", "c"],
            &[((0, 1), vec![1, 2, 0]), ((1, 0), vec![1, 2, 0])],
        );
        assert!(r.is_err());
    }
}
