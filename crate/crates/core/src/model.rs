//! Value types for atomic measures, weighted transport networks, edge chains and
//! directed curves, together with the elementary chain algebra: boundary, mass,
//! the `M_alpha` cost, and the "on" / subcurrent predicates.
//!
//! Masses, weights and chain coefficients are exact rationals. Edge lengths and
//! costs are `f64`, since Euclidean lengths are irrational in general.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{format_rational, to_f64, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Point {
    pub id: VertexId,
    /// Display name such as `x1` or `y3`; purely cosmetic.
    pub label: Option<String>,
    pub coords: Vec<Rational>,
}

impl Point {
    pub fn new(id: u32, coords: Vec<Rational>) -> Self {
        Self {
            id: VertexId(id),
            label: None,
            coords,
        }
    }

    pub fn labeled(id: u32, label: &str, coords: Vec<Rational>) -> Self {
        Self {
            id: VertexId(id),
            label: Some(label.to_string()),
            coords,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub tail: VertexId,
    pub head: VertexId,
    pub weight: Rational,
}

impl Edge {
    pub fn new(tail: u32, head: u32, weight: Rational) -> Self {
        Self {
            tail: VertexId(tail),
            head: VertexId(head),
            weight,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub vertex: VertexId,
    pub mass: Rational,
}

/// Finite sum of weighted Dirac masses. Every mass is strictly positive and the
/// vertices are pairwise distinct.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let mut seen = HashSet::new();
        for atom in &atoms {
            if !atom.mass.is_positive() {
                return Err(Error::InvalidMeasure(format!(
                    "mass {} at vertex {} is not positive",
                    format_rational(&atom.mass),
                    atom.vertex
                )));
            }
            if !seen.insert(atom.vertex) {
                return Err(Error::InvalidMeasure(format!(
                    "duplicate atom at vertex {}",
                    atom.vertex
                )));
            }
        }
        Ok(Self { atoms })
    }

    /// Builds a measure from `(vertex, mass)` pairs, silently dropping zero
    /// masses. Negative masses are still rejected.
    pub fn from_masses<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (VertexId, Rational)>,
    {
        let atoms = pairs
            .into_iter()
            .filter(|(_, m)| !m.is_zero())
            .map(|(vertex, mass)| Atom { vertex, mass })
            .collect();
        Self::new(atoms)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total(&self) -> Rational {
        self.atoms.iter().map(|a| &a.mass).sum()
    }

    pub fn mass_at(&self, v: VertexId) -> Rational {
        self.atoms
            .iter()
            .find(|a| a.vertex == v)
            .map_or_else(Rational::zero, |a| a.mass.clone())
    }

    pub fn position(&self, v: VertexId) -> Option<usize> {
        self.atoms.iter().position(|a| a.vertex == v)
    }

    pub fn to_signed(&self) -> SignedNodeMeasure {
        let mut out = SignedNodeMeasure::zero();
        for a in &self.atoms {
            out.add_at(a.vertex, &a.mass);
        }
        out
    }
}

/// Real (here rational) combination of Dirac masses at vertices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SignedNodeMeasure {
    coeffs: BTreeMap<VertexId, Rational>,
}

impl SignedNodeMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn add_at(&mut self, v: VertexId, amount: &Rational) {
        let entry = self.coeffs.entry(v).or_insert_with(Rational::zero);
        *entry += amount;
        if entry.is_zero() {
            self.coeffs.remove(&v);
        }
    }

    pub fn get(&self, v: VertexId) -> Rational {
        self.coeffs.get(&v).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, &Rational)> {
        self.coeffs.iter().map(|(v, c)| (*v, c))
    }

    /// Total variation `sum |c_v|`.
    pub fn mass(&self) -> Rational {
        self.coeffs.values().map(|c| c.abs()).sum()
    }

    pub fn scaled(&self, factor: &Rational) -> Self {
        let mut out = Self::zero();
        for (v, c) in &self.coeffs {
            out.add_at(*v, &(c * factor));
        }
        out
    }

    /// `target - source`, the boundary a transport path must have.
    pub fn transport_boundary(source: &AtomicMeasure, target: &AtomicMeasure) -> Self {
        &target.to_signed() - &source.to_signed()
    }
}

impl Add for &SignedNodeMeasure {
    type Output = SignedNodeMeasure;

    fn add(self, rhs: &SignedNodeMeasure) -> SignedNodeMeasure {
        let mut out = self.clone();
        for (v, c) in &rhs.coeffs {
            out.add_at(*v, c);
        }
        out
    }
}

impl Sub for &SignedNodeMeasure {
    type Output = SignedNodeMeasure;

    fn sub(self, rhs: &SignedNodeMeasure) -> SignedNodeMeasure {
        let mut out = self.clone();
        for (v, c) in &rhs.coeffs {
            out.add_at(*v, &-c);
        }
        out
    }
}

/// Rational coefficients over the edge basis of a parent network. A negative
/// coefficient means the chain runs against the edge orientation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EdgeChain {
    coeffs: Vec<Rational>,
}

impl EdgeChain {
    pub fn zeros(n_edges: usize) -> Self {
        Self {
            coeffs: vec![Rational::zero(); n_edges],
        }
    }

    pub fn unit(n_edges: usize, edge: usize) -> Self {
        let mut c = Self::zeros(n_edges);
        c.coeffs[edge] = Rational::from_integer(1.into());
        c
    }

    pub fn from_coeffs(coeffs: Vec<Rational>) -> Self {
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn get(&self, edge: usize) -> &Rational {
        &self.coeffs[edge]
    }

    pub fn set(&mut self, edge: usize, value: Rational) {
        self.coeffs[edge] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Edge indices with a nonzero coefficient.
    pub fn support(&self) -> Vec<usize> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, _)| e)
            .collect()
    }

    pub fn scaled(&self, factor: &Rational) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, other: &EdgeChain, factor: &Rational) {
        assert_eq!(self.len(), other.len(), "chains over different networks");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            if !b.is_zero() {
                *a += b * factor;
            }
        }
    }
}

impl Add for &EdgeChain {
    type Output = EdgeChain;

    fn add(self, rhs: &EdgeChain) -> EdgeChain {
        assert_eq!(self.len(), rhs.len(), "chains over different networks");
        EdgeChain {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &EdgeChain {
    type Output = EdgeChain;

    fn sub(self, rhs: &EdgeChain) -> EdgeChain {
        assert_eq!(self.len(), rhs.len(), "chains over different networks");
        EdgeChain {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &EdgeChain {
    type Output = EdgeChain;

    fn neg(self) -> EdgeChain {
        EdgeChain {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul<&Rational> for &EdgeChain {
    type Output = EdgeChain;

    fn mul(self, rhs: &Rational) -> EdgeChain {
        self.scaled(rhs)
    }
}

/// Simple directed edge path: consecutive edges share endpoints and no vertex
/// repeats. Parametrization is not stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathCurve {
    edges: Vec<usize>,
    start: VertexId,
    end: VertexId,
}

impl PathCurve {
    pub fn new(network: &TransportNetwork, edges: Vec<usize>) -> Result<Self> {
        let first = *edges
            .first()
            .ok_or_else(|| Error::InvalidCurve("empty edge sequence".into()))?;
        let all = network.edges();
        if let Some(&bad) = edges.iter().find(|&&e| e >= all.len()) {
            return Err(Error::InvalidCurve(format!("edge {bad} does not exist")));
        }
        let start = all[first].tail;
        let mut visited = HashSet::from([start]);
        let mut at = start;
        for &e in &edges {
            let edge = &all[e];
            if edge.tail != at {
                return Err(Error::InvalidCurve(format!(
                    "edge {e} starts at {} but the curve is at {at}",
                    edge.tail
                )));
            }
            at = edge.head;
            if !visited.insert(at) {
                return Err(Error::InvalidCurve(format!("vertex {at} visited twice")));
            }
        }
        Ok(Self {
            edges,
            start,
            end: at,
        })
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn start(&self) -> VertexId {
        self.start
    }

    pub fn end(&self) -> VertexId {
        self.end
    }

    /// Unit-coefficient chain along the traversed edges.
    pub fn chain(&self, n_edges: usize) -> EdgeChain {
        let mut c = EdgeChain::zeros(n_edges);
        for &e in &self.edges {
            c.coeffs[e] += Rational::from_integer(1.into());
        }
        c
    }

    pub fn vertices(&self, network: &TransportNetwork) -> Vec<VertexId> {
        std::iter::once(self.start)
            .chain(self.edges.iter().map(|&e| network.edges()[e].head))
            .collect()
    }
}

/// One reason a network fails its invariants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DuplicateVertex(VertexId),
    DimensionMismatch {
        vertex: VertexId,
        expected: usize,
        found: usize,
    },
    EdgeEndpointMissing {
        edge: usize,
        vertex: VertexId,
    },
    SelfLoop {
        edge: usize,
    },
    NonPositiveWeight {
        edge: usize,
        weight: Rational,
    },
    ZeroLength {
        edge: usize,
    },
    AtomVertexMissing {
        side: Side,
        vertex: VertexId,
    },
    SourceTargetOverlap {
        vertex: VertexId,
    },
    /// `actual = out-weight - in-weight` differs from the required net outflow.
    Imbalance {
        vertex: VertexId,
        expected: Rational,
        actual: Rational,
    },
    MassMismatch {
        source_total: Rational,
        target_total: Rational,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Source => "source",
            Side::Target => "target",
        })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateVertex(v) => write!(f, "vertex {v} declared twice"),
            Violation::DimensionMismatch {
                vertex,
                expected,
                found,
            } => write!(
                f,
                "vertex {vertex} has {found} coordinates, expected {expected}"
            ),
            Violation::EdgeEndpointMissing { edge, vertex } => {
                write!(f, "edge {edge} refers to unknown vertex {vertex}")
            }
            Violation::SelfLoop { edge } => write!(f, "edge {edge} is a self-loop"),
            Violation::NonPositiveWeight { edge, weight } => write!(
                f,
                "edge {edge} has non-positive weight {}",
                format_rational(weight)
            ),
            Violation::ZeroLength { edge } => write!(f, "edge {edge} has zero length"),
            Violation::AtomVertexMissing { side, vertex } => {
                write!(f, "{side} atom sits on unknown vertex {vertex}")
            }
            Violation::SourceTargetOverlap { vertex } => {
                write!(f, "vertex {vertex} carries both source and target mass")
            }
            Violation::Imbalance {
                vertex,
                expected,
                actual,
            } => write!(
                f,
                "vertex {vertex} imbalance {}: net outflow {} but expected {}",
                format_rational(&(actual - expected)),
                format_rational(actual),
                format_rational(expected)
            ),
            Violation::MassMismatch {
                source_total,
                target_total,
            } => write!(
                f,
                "source mass {} differs from target mass {}",
                format_rational(source_total),
                format_rational(target_total)
            ),
        }
    }
}

/// Weighted directed graph carrying a transport path from `source` to `target`.
#[derive(Clone, Debug)]
pub struct TransportNetwork {
    dimension: usize,
    vertices: Vec<Point>,
    edges: Vec<Edge>,
    source: AtomicMeasure,
    target: AtomicMeasure,
    index: HashMap<VertexId, usize>,
}

impl PartialEq for TransportNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.dimension == other.dimension
            && self.vertices == other.vertices
            && self.edges == other.edges
            && self.source == other.source
            && self.target == other.target
    }
}

impl TransportNetwork {
    /// Assembles a network without checking it; see [`TransportNetwork::validate`].
    pub fn new(
        dimension: usize,
        vertices: Vec<Point>,
        edges: Vec<Edge>,
        source: AtomicMeasure,
        target: AtomicMeasure,
    ) -> Self {
        let mut index = HashMap::new();
        for (k, p) in vertices.iter().enumerate() {
            index.entry(p.id).or_insert(k);
        }
        Self {
            dimension,
            vertices,
            edges,
            source,
            target,
            index,
        }
    }

    /// Same network with replaced edge weights.
    pub fn with_weights(&self, weights: Vec<Rational>) -> Self {
        assert_eq!(weights.len(), self.edges.len());
        let edges = self
            .edges
            .iter()
            .zip(weights)
            .map(|(e, w)| Edge {
                tail: e.tail,
                head: e.head,
                weight: w,
            })
            .collect();
        Self::new(
            self.dimension,
            self.vertices.clone(),
            edges,
            self.source.clone(),
            self.target.clone(),
        )
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn source(&self) -> &AtomicMeasure {
        &self.source
    }

    pub fn target(&self) -> &AtomicMeasure {
        &self.target
    }

    pub fn vertex(&self, id: VertexId) -> Option<&Point> {
        self.index.get(&id).map(|&k| &self.vertices[k])
    }

    pub(crate) fn vertex_position(&self, id: VertexId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Label if present, otherwise the numeric id.
    pub fn label(&self, id: VertexId) -> String {
        self.vertex(id)
            .and_then(|p| p.label.clone())
            .unwrap_or_else(|| id.to_string())
    }

    pub fn source_label(&self, i: usize) -> String {
        self.label(self.source.atoms()[i].vertex)
    }

    pub fn target_label(&self, j: usize) -> String {
        self.label(self.target.atoms()[j].vertex)
    }

    /// The chain `sum_e w(e) [e]` carried by the network itself.
    pub fn chain(&self) -> EdgeChain {
        EdgeChain::from_coeffs(self.edges.iter().map(|e| e.weight.clone()).collect())
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let e = &self.edges[edge];
        match (self.vertex(e.tail), self.vertex(e.head)) {
            (Some(a), Some(b)) => a
                .coords
                .iter()
                .zip(&b.coords)
                .map(|(x, y)| {
                    let d = to_f64(&(x - y));
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            _ => f64::NAN,
        }
    }

    /// `sum_e coeff(e) (delta_head - delta_tail)`.
    pub fn boundary(&self, chain: &EdgeChain) -> SignedNodeMeasure {
        let mut out = SignedNodeMeasure::zero();
        for (e, c) in chain.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let edge = &self.edges[e];
            out.add_at(edge.head, c);
            out.add_at(edge.tail, &-c);
        }
        out
    }

    /// `sum_e |coeff(e)| * length(e)`.
    pub fn mass(&self, chain: &EdgeChain) -> f64 {
        chain
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, c)| to_f64(&c.abs()) * self.edge_length(e))
            .sum()
    }

    /// `M_alpha` cost of the network itself, `sum_e w(e)^alpha * length(e)`.
    /// `alpha = 1` gives the mass.
    pub fn cost_alpha(&self, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha = {alpha} outside [0, 1]")));
        }
        Ok(self.chain_cost(&self.chain(), alpha))
    }

    /// `sum_{coeff != 0} |coeff(e)|^alpha * length(e)`.
    pub fn chain_cost(&self, chain: &EdgeChain, alpha: f64) -> f64 {
        chain
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, c)| {
                let w = to_f64(&c.abs());
                let scale = if alpha == 1.0 { w } else { w.powf(alpha) };
                scale * self.edge_length(e)
            })
            .sum()
    }

    /// `|coeff_S(e)| <= w(e)` on every edge; orientation may be reversed.
    pub fn is_on(&self, chain: &EdgeChain) -> bool {
        chain.len() == self.edges.len()
            && chain
                .coeffs
                .iter()
                .zip(&self.edges)
                .all(|(c, e)| c.abs() <= e.weight)
    }

    /// `0 <= coeff_S(e) <= w(e)` on every edge, i.e. `M(T - S) + M(S) = M(T)`.
    pub fn is_subcurrent(&self, chain: &EdgeChain) -> bool {
        chain.len() == self.edges.len()
            && chain
                .coeffs
                .iter()
                .zip(&self.edges)
                .all(|(c, e)| !c.is_negative() && *c <= e.weight)
    }

    /// Every invariant violation; empty iff the network is a valid transport
    /// path between its source and target measures.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        let mut seen = HashSet::new();
        for p in &self.vertices {
            if !seen.insert(p.id) {
                out.push(Violation::DuplicateVertex(p.id));
            }
            if p.coords.len() != self.dimension {
                out.push(Violation::DimensionMismatch {
                    vertex: p.id,
                    expected: self.dimension,
                    found: p.coords.len(),
                });
            }
        }

        for (k, e) in self.edges.iter().enumerate() {
            let mut endpoints_ok = true;
            for v in [e.tail, e.head] {
                if self.vertex(v).is_none() {
                    out.push(Violation::EdgeEndpointMissing { edge: k, vertex: v });
                    endpoints_ok = false;
                }
            }
            if e.tail == e.head {
                out.push(Violation::SelfLoop { edge: k });
            } else if endpoints_ok && self.edge_length(k) == 0.0 {
                out.push(Violation::ZeroLength { edge: k });
            }
            if !e.weight.is_positive() {
                out.push(Violation::NonPositiveWeight {
                    edge: k,
                    weight: e.weight.clone(),
                });
            }
        }

        for (side, measure) in [(Side::Source, &self.source), (Side::Target, &self.target)] {
            for a in measure.atoms() {
                if self.vertex(a.vertex).is_none() {
                    out.push(Violation::AtomVertexMissing {
                        side,
                        vertex: a.vertex,
                    });
                }
            }
        }
        for a in self.source.atoms() {
            if self.target.position(a.vertex).is_some() {
                out.push(Violation::SourceTargetOverlap { vertex: a.vertex });
            }
        }

        let source_total = self.source.total();
        let target_total = self.target.total();
        if source_total != target_total {
            out.push(Violation::MassMismatch {
                source_total,
                target_total,
            });
        }

        // net outflow must equal source mass minus target mass at every vertex
        let required = &self.source.to_signed() - &self.target.to_signed();
        let actual = self
            .boundary(&self.chain())
            .scaled(&Rational::from_integer((-1).into()));
        let mut vertices: Vec<VertexId> = self.vertices.iter().map(|p| p.id).collect();
        vertices.sort();
        vertices.dedup();
        for v in vertices {
            let expected = required.get(v);
            let got = actual.get(v);
            if expected != got {
                out.push(Violation::Imbalance {
                    vertex: v,
                    expected,
                    actual: got,
                });
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    pub(crate) fn require_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidNetwork(violations))
        }
    }
}
