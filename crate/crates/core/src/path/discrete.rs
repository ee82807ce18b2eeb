//! Piecewise-constant paths in a finite base.
//!
//! A trace is an alternating sequence of atoms: the knots `k_0 < ... < k_m`
//! (with `k_0 = lo`, `k_m = hi`) and the open intervals between them. Every
//! atom carries a node. Keeping the value at each knot separately keeps
//! restriction and reparameterization exact at the breakpoints.

use super::{Interval, Orientation, Reparameterization};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteTrace {
    knots: Vec<f64>,
    at_knot: Vec<usize>,
    between: Vec<usize>,
}

/// A maximal run of consecutive atoms carrying the same node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstancyRun {
    pub node: usize,
    pub lo: f64,
    pub hi: f64,
    /// Index of the first atom of the run (even = knot, odd = open interval).
    pub first_atom: usize,
    pub last_atom: usize,
}

impl ConstancyRun {
    /// The representative parameter of the run: the midpoint of its extent.
    pub fn representative(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

impl DiscreteTrace {
    fn from_parts(knots: Vec<f64>, at_knot: Vec<usize>, between: Vec<usize>) -> Result<Self> {
        if knots.is_empty() || at_knot.len() != knots.len() || between.len() + 1 != knots.len() {
            return Err(Error::InvalidPath("malformed piecewise trace".into()));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) || knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidPath(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        Ok(DiscreteTrace {
            knots,
            at_knot,
            between,
        })
    }

    /// The path staying at `node` over `domain`.
    pub fn constant(domain: Interval, node: usize) -> Self {
        if domain.is_degenerate() {
            DiscreteTrace {
                knots: vec![domain.lo()],
                at_knot: vec![node],
                between: vec![],
            }
        } else {
            DiscreteTrace {
                knots: vec![domain.lo(), domain.hi()],
                at_knot: vec![node, node],
                between: vec![node],
            }
        }
    }

    /// Builds a trace from right-continuous pieces: piece `i` covers
    /// `[until_{i-1}, until_i)`, the last piece is closed and must end at
    /// `domain.hi`.
    pub fn from_pieces(domain: Interval, pieces: &[(f64, usize)]) -> Result<Self> {
        let Some(&(last_until, last_node)) = pieces.last() else {
            return Err(Error::InvalidPath("no pieces".into()));
        };
        if last_until != domain.hi() {
            return Err(Error::InvalidPath(format!(
                "last piece ends at {last_until}, domain ends at {}",
                domain.hi()
            )));
        }
        if domain.is_degenerate() {
            return Ok(DiscreteTrace::constant(domain, last_node));
        }
        let mut knots = vec![domain.lo()];
        let mut at_knot = vec![pieces[0].1];
        let mut between = Vec::new();
        let mut prev = domain.lo();
        for (i, &(until, node)) in pieces.iter().enumerate() {
            if until.is_nan() || until <= prev {
                return Err(Error::InvalidPath(format!(
                    "piece {i} ends at {until}, not after {prev}"
                )));
            }
            between.push(node);
            knots.push(until);
            // right-continuous: the knot belongs to the next piece
            at_knot.push(pieces.get(i + 1).map_or(node, |p| p.1));
            prev = until;
        }
        Ok(DiscreteTrace::from_parts(knots, at_knot, between)?.simplified())
    }

    /// Visits `nodes` in order on equal-length pieces of `domain`.
    pub fn through_nodes(domain: Interval, nodes: &[usize]) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidPath("no nodes".into()));
        }
        let k = nodes.len();
        let pieces: Vec<(f64, usize)> = nodes
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let until = if i + 1 == k {
                    domain.hi()
                } else {
                    domain.lo() + domain.width() * (i + 1) as f64 / k as f64
                };
                (until, n)
            })
            .collect();
        DiscreteTrace::from_pieces(domain, &pieces)
    }

    /// Drops knots whose value agrees with both neighbouring intervals.
    fn simplified(mut self) -> Self {
        let m = self.knots.len();
        if m <= 2 {
            return self;
        }
        let mut knots = vec![self.knots[0]];
        let mut at_knot = vec![self.at_knot[0]];
        let mut between = vec![self.between[0]];
        for j in 1..m - 1 {
            let left = *between.last().unwrap();
            let right = self.between[j];
            if self.at_knot[j] == left && left == right {
                continue;
            }
            knots.push(self.knots[j]);
            at_knot.push(self.at_knot[j]);
            between.push(right);
        }
        knots.push(self.knots[m - 1]);
        at_knot.push(self.at_knot[m - 1]);
        self.knots = knots;
        self.at_knot = at_knot;
        self.between = between;
        self
    }

    pub fn domain(&self) -> Interval {
        Interval::new(self.knots[0], *self.knots.last().unwrap()).expect("ordered knots")
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Atom index of parameter `s` (assumed inside the domain).
    fn atom_of(&self, s: f64) -> usize {
        match self.knots.binary_search_by(|k| k.partial_cmp(&s).expect("finite")) {
            Ok(j) => 2 * j,
            Err(0) => 0,
            Err(j) if j >= self.knots.len() => 2 * (self.knots.len() - 1),
            Err(j) => 2 * (j - 1) + 1,
        }
    }

    fn atom_node(&self, atom: usize) -> usize {
        if atom.is_multiple_of(2) {
            self.at_knot[atom / 2]
        } else {
            self.between[atom / 2]
        }
    }

    fn atom_extent(&self, atom: usize) -> (f64, f64) {
        if atom.is_multiple_of(2) {
            let k = self.knots[atom / 2];
            (k, k)
        } else {
            (self.knots[atom / 2], self.knots[atom / 2 + 1])
        }
    }

    fn atom_count(&self) -> usize {
        2 * self.knots.len() - 1
    }

    pub fn eval(&self, s: f64) -> usize {
        self.atom_node(self.atom_of(s))
    }

    /// Nodes visited when moving from `s` to `t`, consecutive repeats collapsed.
    pub fn nodes_between(&self, s: f64, t: f64) -> Vec<usize> {
        let (a, b) = (self.atom_of(s), self.atom_of(t));
        let atoms: Box<dyn Iterator<Item = usize>> = if a <= b {
            Box::new(a..=b)
        } else {
            Box::new((b..=a).rev())
        };
        let mut out: Vec<usize> = Vec::new();
        for atom in atoms {
            let n = self.atom_node(atom);
            if out.last() != Some(&n) {
                out.push(n);
            }
        }
        out
    }

    /// Restriction to `[a, b]`, assumed inside the domain.
    pub fn restrict(&self, a: f64, b: f64) -> Self {
        if a == b {
            return DiscreteTrace::constant(Interval::new(a, a).unwrap(), self.eval(a));
        }
        let mut knots = vec![a];
        let mut at_knot = vec![self.eval(a)];
        for (j, &k) in self.knots.iter().enumerate() {
            if k > a && k < b {
                knots.push(k);
                at_knot.push(self.at_knot[j]);
            }
        }
        knots.push(b);
        at_knot.push(self.eval(b));
        let between = knots.windows(2).map(|w| self.eval(0.5 * (w[0] + w[1]))).collect();
        DiscreteTrace {
            knots,
            at_knot,
            between,
        }
    }

    /// Precomposition with `tau` (whose target is this trace's domain).
    ///
    /// The breakpoints are pulled back through `tau` as evaluated in floating
    /// point, so the open pieces of the result hold parameters whose computed
    /// `tau(s)` lies in the matching piece of this trace, up to the few floats
    /// that round onto a breakpoint. A breakpoint that no float maps onto
    /// exactly keeps no atom of its own.
    pub fn reparameterize(&self, tau: &Reparameterization) -> Result<Self> {
        let src = tau.source();
        let m = self.knots.len();
        let rev = tau.orientation() == Orientation::Reversing;
        let (first, last) = if rev {
            (self.at_knot[m - 1], self.at_knot[0])
        } else {
            (self.at_knot[0], self.at_knot[m - 1])
        };
        if src.is_degenerate() {
            return Ok(DiscreteTrace::constant(src, first));
        }
        let order: Vec<usize> = if rev {
            (1..m - 1).rev().collect()
        } else {
            (1..m - 1).collect()
        };
        let mut knots = vec![src.lo()];
        let mut at_knot = vec![first];
        let mut between = Vec::with_capacity(m - 1);
        for i in order {
            let k = self.knots[i];
            let b = pullback_boundary(tau, k, rev);
            let exact = tau.apply(b) == k;
            between.push(if rev { self.between[i] } else { self.between[i - 1] });
            knots.push(b);
            at_knot.push(match (exact, rev) {
                (true, _) => self.at_knot[i],
                (false, false) => self.between[i],
                (false, true) => self.between[i - 1],
            });
        }
        between.push(if rev { self.between[0] } else { self.between[m - 2] });
        knots.push(src.hi());
        at_knot.push(last);
        DiscreteTrace::from_parts(knots, at_knot, between)
            .map(DiscreteTrace::simplified)
            .map_err(|_| Error::InvalidPath("reparameterization collapses breakpoints".into()))
    }

    /// The product `(first . second)_chi`; endpoint agreement is checked by the caller.
    pub fn concatenate(first: &Self, second: &Self, chi: &super::ChiParameter) -> Result<Self> {
        let left = first.reparameterize(chi.tau1())?;
        let right = second.reparameterize(chi.tau2())?;
        let mut knots = left.knots.clone();
        let mut at_knot = left.at_knot.clone();
        let mut between = left.between.clone();
        knots.extend_from_slice(&right.knots[1..]);
        at_knot.extend_from_slice(&right.at_knot[1..]);
        between.extend_from_slice(&right.between);
        Ok(DiscreteTrace::from_parts(knots, at_knot, between)?.simplified())
    }

    /// Maximal constancy runs in parameter order.
    pub fn runs(&self) -> Vec<ConstancyRun> {
        let mut runs: Vec<ConstancyRun> = Vec::new();
        for atom in 0..self.atom_count() {
            let node = self.atom_node(atom);
            let (lo, hi) = self.atom_extent(atom);
            match runs.last_mut() {
                Some(r) if r.node == node => {
                    r.hi = hi;
                    r.last_atom = atom;
                }
                _ => runs.push(ConstancyRun {
                    node,
                    lo,
                    hi,
                    first_atom: atom,
                    last_atom: atom,
                }),
            }
        }
        runs
    }

    /// Distinct nodes of the trace, in order of first visit.
    pub fn trace_nodes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for r in self.runs() {
            if !out.contains(&r.node) {
                out.push(r.node);
            }
        }
        out
    }
}

/// The computed inverse `tau^{-1}(k)` when `tau` maps it exactly onto `k`.
/// Otherwise the least float `s` of the source of `tau` whose computed image
/// has reached `k`: `tau(s) >= k` when `tau` preserves orientation,
/// `tau(s) <= k` when it reverses it.
fn pullback_boundary(tau: &Reparameterization, k: f64, reversing: bool) -> f64 {
    const MAX_ULPS: usize = 4096;
    let src = tau.source();
    let natural = src.clamp(tau.invert(k));
    if tau.apply(natural) == k {
        return natural;
    }
    let reached = |s: f64| {
        let y = tau.apply(s);
        if reversing {
            y <= k
        } else {
            y >= k
        }
    };
    let mut x = src.clamp(tau.invert(k));
    if reached(x) {
        for _ in 0..MAX_ULPS {
            let d = x.next_down();
            if d < src.lo() || !reached(d) {
                break;
            }
            x = d;
        }
    } else {
        for _ in 0..MAX_ULPS {
            let u = x.next_up();
            if u > src.hi() {
                break;
            }
            x = u;
            if reached(x) {
                break;
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Interval {
        Interval::unit()
    }

    #[test]
    fn right_continuous_pieces() {
        let t = DiscreteTrace::from_pieces(unit(), &[(0.5, 0), (1.0, 1)]).unwrap();
        assert_eq!(t.eval(0.0), 0);
        assert_eq!(t.eval(0.49), 0);
        assert_eq!(t.eval(0.5), 1);
        assert_eq!(t.eval(1.0), 1);
        assert_eq!(
            t.restrict(0.6, 1.0),
            DiscreteTrace::constant(Interval::new(0.6, 1.0).unwrap(), 1)
        );
    }

    #[test]
    fn restriction_keeps_breakpoint_values() {
        let t = DiscreteTrace::from_pieces(unit(), &[(0.5, 0), (1.0, 1)]).unwrap();
        let r = t.restrict(0.2, 0.5);
        assert_eq!(r.eval(0.5), 1);
        assert_eq!(r.eval(0.3), 0);
        assert_eq!(r.nodes_between(0.2, 0.5), vec![0, 1]);
    }

    #[test]
    fn reversal_is_exact_at_breakpoints() {
        let t = DiscreteTrace::from_pieces(unit(), &[(0.25, 0), (0.75, 1), (1.0, 2)]).unwrap();
        let rev = t.reparameterize(&Reparameterization::canonical_reverse()).unwrap();
        for s in [0.0, 0.1, 0.25, 0.3, 0.5, 0.75, 0.9, 1.0] {
            assert_eq!(rev.eval(1.0 - s), t.eval(s), "s = {s}");
        }
    }

    #[test]
    fn nodes_between_collapses_repeats() {
        let t = DiscreteTrace::through_nodes(unit(), &[0, 1, 1, 2]).unwrap();
        assert_eq!(t.nodes_between(0.0, 1.0), vec![0, 1, 2]);
        assert_eq!(t.nodes_between(1.0, 0.0), vec![2, 1, 0]);
        assert_eq!(t.nodes_between(0.3, 0.3), vec![1]);
    }

    #[test]
    fn runs_of_a_figure_eight() {
        let t = DiscreteTrace::from_pieces(unit(), &[(0.2, 0), (0.3, 1), (0.7, 2), (0.8, 1), (1.0, 3)]).unwrap();
        let reps: Vec<f64> = t
            .runs()
            .iter()
            .filter(|r| r.node == 1)
            .map(|r| r.representative())
            .collect();
        assert_eq!(reps.len(), 2);
        assert!((reps[0] - 0.25).abs() < 1e-15 && (reps[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn bad_pieces_are_rejected() {
        assert!(DiscreteTrace::from_pieces(unit(), &[(0.5, 0)]).is_err());
        assert!(DiscreteTrace::from_pieces(unit(), &[(0.5, 0), (0.5, 1), (1.0, 2)]).is_err());
        assert!(DiscreteTrace::from_pieces(unit(), &[]).is_err());
    }
}
