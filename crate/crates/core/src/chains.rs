//! Cycle certificates, curve search between atoms, and the `M_alpha`
//! perturbation inequality for cycles on a transport path.

use std::collections::VecDeque;

use num::{Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{EdgeChain, PathCurve, TransportNetwork, VertexId};
use crate::rational::Rational;

/// Either a nonzero cycle on the network or proof-by-search that none exists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CycleCertificate {
    CycleFree,
    /// Nonzero chain with zero boundary and `|coeff| <= w` on every edge.
    Cycle(EdgeChain),
}

impl CycleCertificate {
    pub fn is_cycle_free(&self) -> bool {
        matches!(self, CycleCertificate::CycleFree)
    }
}

/// Looks for an undirected cycle in the support. Edges are scanned in index
/// order and the first edge closing a loop in the forest built so far defines
/// the certificate, with amplitude equal to the smallest weight on the loop.
pub fn find_cycle(network: &TransportNetwork) -> Result<CycleCertificate> {
    network
        .require_valid()
        .map_err(|e| Error::Precondition(e.to_string()))?;
    Ok(find_cycle_unchecked(network))
}

pub(crate) fn find_cycle_unchecked(network: &TransportNetwork) -> CycleCertificate {
    let n = network.vertices().len();
    let edges = network.edges();
    // forest adjacency: (neighbour position, edge index)
    let mut forest: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];

    for (k, e) in edges.iter().enumerate() {
        if !e.weight.is_positive() {
            continue;
        }
        let (Some(t), Some(h)) = (
            network.vertex_position(e.tail),
            network.vertex_position(e.head),
        ) else {
            continue;
        };
        match forest_path(&forest, h, t) {
            None => {
                forest[t].push((h, k));
                forest[h].push((t, k));
            }
            Some(path) => {
                // traverse tail -> head along k, then back from head to tail
                let mut loop_edges = vec![(k, true)];
                let mut at = h;
                for edge in path {
                    let forward = network.vertex_position(edges[edge].tail) == Some(at);
                    loop_edges.push((edge, forward));
                    at = if forward {
                        network.vertex_position(edges[edge].head).unwrap()
                    } else {
                        network.vertex_position(edges[edge].tail).unwrap()
                    };
                }
                let eps = loop_edges
                    .iter()
                    .map(|&(edge, _)| edges[edge].weight.clone())
                    .min()
                    .unwrap();
                let mut chain = EdgeChain::zeros(edges.len());
                for (edge, forward) in loop_edges {
                    chain.set(edge, if forward { eps.clone() } else { -eps.clone() });
                }
                return CycleCertificate::Cycle(chain);
            }
        }
    }
    CycleCertificate::CycleFree
}

/// Edge sequence of the unique forest path from `from` to `to`, if connected.
fn forest_path(forest: &[Vec<(usize, usize)>], from: usize, to: usize) -> Option<Vec<usize>> {
    if from == to {
        return Some(Vec::new());
    }
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; forest.len()];
    let mut seen = vec![false; forest.len()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        for &(w, e) in &forest[v] {
            if seen[w] {
                continue;
            }
            seen[w] = true;
            parent[w] = Some((v, e));
            if w == to {
                let mut path = Vec::new();
                let mut at = to;
                while let Some((p, e)) = parent[at] {
                    path.push(e);
                    at = p;
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(w);
        }
    }
    None
}

/// Directed path over positive-weight edges from `from` to `to`.
///
/// Breadth-first search with out-edges visited in index order, so the result
/// has the fewest edges and, among those, the lexicographically smallest edge
/// sequence. On a cycle-free network it is the only directed path.
pub fn find_curve(network: &TransportNetwork, from: VertexId, to: VertexId) -> Option<PathCurve> {
    let allowed: Vec<bool> = network
        .edges()
        .iter()
        .map(|e| e.weight.is_positive())
        .collect();
    find_curve_within(network, &allowed, from, to)
}

/// Same search restricted to edges with `allowed[e]`.
pub fn find_curve_within(
    network: &TransportNetwork,
    allowed: &[bool],
    from: VertexId,
    to: VertexId,
) -> Option<PathCurve> {
    let start = network.vertex_position(from)?;
    let goal = network.vertex_position(to)?;
    if start == goal {
        return None;
    }
    let n = network.vertices().len();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, e) in network.edges().iter().enumerate() {
        if allowed[k] {
            if let Some(t) = network.vertex_position(e.tail) {
                out[t].push(k);
            }
        }
    }

    let mut via: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &k in &out[v] {
            let Some(w) = network.vertex_position(network.edges()[k].head) else {
                continue;
            };
            if seen[w] {
                continue;
            }
            seen[w] = true;
            via[w] = Some(k);
            if w == goal {
                let mut path = Vec::new();
                let mut at = goal;
                while let Some(k) = via[at] {
                    path.push(k);
                    at = network
                        .vertex_position(network.edges()[k].tail)
                        .expect("edge tail on network");
                }
                path.reverse();
                return PathCurve::new(network, path).ok();
            }
            queue.push_back(w);
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perturbation {
    pub cost_plus: f64,
    pub cost_minus: f64,
    pub cost_t: f64,
}

impl Perturbation {
    pub fn min_perturbed(&self) -> f64 {
        self.cost_plus.min(self.cost_minus)
    }

    /// `(cost_T - min) / cost_T`.
    pub fn relative_margin(&self) -> f64 {
        (self.cost_t - self.min_perturbed()) / self.cost_t
    }
}

/// Costs `M_alpha(T + S)`, `M_alpha(T - S)` and `M_alpha(T)` for a cycle `S`
/// on `T`. By strict concavity of `t -> |w + t c|^alpha` the smaller of the
/// first two is strictly below the third unless `S = 0`.
pub fn perturbation_inequality(
    network: &TransportNetwork,
    s: &EdgeChain,
    alpha: f64,
) -> Result<Perturbation> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} outside (0, 1)")));
    }
    if s.len() != network.edges().len() {
        return Err(Error::Precondition(format!(
            "chain has {} coefficients, network has {} edges",
            s.len(),
            network.edges().len()
        )));
    }
    if !network.is_on(s) {
        return Err(Error::Precondition("chain is not on the network".into()));
    }
    if !network.boundary(s).is_zero() {
        return Err(Error::Precondition("chain has nonzero boundary".into()));
    }
    let t = network.chain();
    let plus = &t + s;
    let minus = &t - s;
    let expected = network.boundary(&t);
    if network.boundary(&plus) != expected || network.boundary(&minus) != expected {
        return Err(Error::Invariant("perturbation changed the boundary".into()));
    }
    Ok(Perturbation {
        cost_plus: network.chain_cost(&plus, alpha),
        cost_minus: network.chain_cost(&minus, alpha),
        cost_t: network.chain_cost(&t, alpha),
    })
}

/// Number of connected components of the undirected positive-weight support,
/// counting isolated vertices.
pub fn component_count(network: &TransportNetwork) -> usize {
    let n = network.vertices().len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in network.edges() {
        if e.weight.is_zero() {
            continue;
        }
        if let (Some(t), Some(h)) = (
            network.vertex_position(e.tail),
            network.vertex_position(e.head),
        ) {
            adj[t].push(h);
            adj[h].push(t);
        }
    }
    let mut seen = vec![false; n];
    let mut count = 0;
    for root in 0..n {
        if seen[root] {
            continue;
        }
        count += 1;
        seen[root] = true;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

/// Helper for callers holding a certificate: the amplitude of the cycle.
pub fn certificate_amplitude(chain: &EdgeChain) -> Rational {
    chain
        .coeffs()
        .iter()
        .filter(|c| !c.is_zero())
        .map(|c| c.abs())
        .min()
        .unwrap_or_else(Rational::zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{AtomicMeasure, Edge, Point};
    use crate::rational::int;

    #[test]
    fn example_tree_is_cycle_free() {
        let t = fixtures::example3_1().network;
        assert_eq!(find_cycle(&t).unwrap(), CycleCertificate::CycleFree);
    }

    #[test]
    fn crossing_network_has_hexagon_certificate() {
        let t = fixtures::remark4_crossing().network;
        let CycleCertificate::Cycle(c) = find_cycle(&t).unwrap() else {
            panic!("expected a cycle");
        };
        assert!(!c.is_zero());
        assert!(t.boundary(&c).is_zero());
        assert!(t.is_on(&c));
        // the loop through both crossing vertices uses the six middle edges
        assert_eq!(c.support(), vec![2, 3, 4, 6, 7, 8]);
        assert_eq!(certificate_amplitude(&c), int(1));
    }

    #[test]
    fn single_edge_is_cycle_free() {
        let t = TransportNetwork::new(
            1,
            vec![Point::new(1, vec![int(0)]), Point::new(2, vec![int(1)])],
            vec![Edge::new(1, 2, int(1))],
            AtomicMeasure::from_masses([(VertexId(1), int(1))]).unwrap(),
            AtomicMeasure::from_masses([(VertexId(2), int(1))]).unwrap(),
        );
        assert!(find_cycle(&t).unwrap().is_cycle_free());
    }

    #[test]
    fn parallel_edges_form_a_cycle() {
        let t = TransportNetwork::new(
            1,
            vec![Point::new(1, vec![int(0)]), Point::new(2, vec![int(1)])],
            vec![Edge::new(1, 2, int(2)), Edge::new(1, 2, int(3))],
            AtomicMeasure::from_masses([(VertexId(1), int(5))]).unwrap(),
            AtomicMeasure::from_masses([(VertexId(2), int(5))]).unwrap(),
        );
        let CycleCertificate::Cycle(c) = find_cycle(&t).unwrap() else {
            panic!("expected a cycle");
        };
        assert_eq!(c.coeffs(), &[int(-2), int(2)]);
    }

    #[test]
    fn invalid_network_is_a_precondition_error() {
        let t = fixtures::example3_1().network;
        let mut w: Vec<Rational> = t.edges().iter().map(|e| e.weight.clone()).collect();
        w[2] = int(5);
        assert!(matches!(
            find_cycle(&t.with_weights(w)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn curve_through_both_junctions() {
        let t = fixtures::example3_1().network;
        let g = find_curve(&t, VertexId(1), VertexId(101)).unwrap();
        assert_eq!(g.edges(), &[0, 2, 3]);
        assert_eq!(g.vertices(&t).len(), 4);
        assert!(find_curve(&t, VertexId(101), VertexId(1)).is_none());
    }

    #[test]
    fn curve_absent_without_middle_edge() {
        let t = fixtures::example3_1().network;
        let allowed = [true, true, false, true, true];
        assert!(find_curve_within(&t, &allowed, VertexId(1), VertexId(101)).is_none());
    }

    #[test]
    fn min_hop_curve_on_crossing() {
        let t = fixtures::remark4_crossing().network;
        // both branches have the same length; the upper one has smaller indices
        let g = find_curve(&t, VertexId(1), VertexId(101)).unwrap();
        assert_eq!(g.edges(), &[0, 2, 3, 4, 5]);
    }

    #[test]
    fn zero_perturbation_is_flat() {
        let t = fixtures::remark4_crossing().network;
        let p = perturbation_inequality(&t, &EdgeChain::zeros(t.edges().len()), 0.5).unwrap();
        assert_eq!(p.cost_plus, p.cost_t);
        assert_eq!(p.cost_minus, p.cost_t);
    }

    #[test]
    fn crossing_cycle_lowers_cost() {
        let t = fixtures::remark4_crossing().network;
        let CycleCertificate::Cycle(c) = find_cycle(&t).unwrap() else {
            unreachable!()
        };
        let p = perturbation_inequality(&t, &c, 0.5).unwrap();
        assert!(p.min_perturbed() < p.cost_t);
        assert!(perturbation_inequality(&t, &c.scaled(&int(2)), 0.5).is_err());
        assert!(perturbation_inequality(&t, &c, 1.0).is_err());
    }

    #[test]
    fn components_of_disjoint_pieces() {
        assert_eq!(component_count(&fixtures::example3_1().network), 1);
        assert_eq!(component_count(&fixtures::ex6_11x11().network), 2);
    }
}
