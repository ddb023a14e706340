//! Curve measures on a transport network: extraction of a good decomposition
//! by path stripping, its verification, the cell chains `S_ij`, vanishing
//! four-cell cycles, and the pivot sweep producing a better decomposition.

use std::collections::HashMap;

use num::{Signed, Zero};

use crate::chains::find_curve;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{EdgeChain, PathCurve, TransportNetwork, VertexId};
use crate::rational::{format_rational, Rational};
use crate::stairshape::rescale_measure;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedCurve {
    pub curve: PathCurve,
    pub weight: Rational,
}

/// Finitely supported positive measure on directed curves of one network.
/// Identical curves are merged, keeping the position of the first occurrence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CurveMeasure {
    atoms: Vec<WeightedCurve>,
}

impl CurveMeasure {
    pub fn new(atoms: Vec<WeightedCurve>) -> Result<Self> {
        let mut merged: Vec<WeightedCurve> = Vec::with_capacity(atoms.len());
        for atom in atoms {
            if !atom.weight.is_positive() {
                return Err(Error::InvalidMeasure(format!(
                    "curve weight {} is not positive",
                    format_rational(&atom.weight)
                )));
            }
            match merged.iter_mut().find(|a| a.curve == atom.curve) {
                Some(existing) => existing.weight += atom.weight,
                None => merged.push(atom),
            }
        }
        Ok(Self { atoms: merged })
    }

    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PathCurve, Rational)>,
    {
        Self::new(
            pairs
                .into_iter()
                .map(|(curve, weight)| WeightedCurve { curve, weight })
                .collect(),
        )
    }

    /// `sum a_ij delta_{g_ij}` where `g_ij` is the curve returned by
    /// [`find_curve`] between the `i`-th source and `j`-th target atom.
    pub fn from_matrix(network: &TransportNetwork, a: &Matrix) -> Result<Self> {
        check_matrix_shape(network, a)?;
        let mut atoms = Vec::new();
        for (i, j, x) in a.entries() {
            if x.is_zero() {
                continue;
            }
            if x.is_negative() {
                return Err(Error::Domain(format!(
                    "negative entry {} at ({}, {})",
                    format_rational(x),
                    i + 1,
                    j + 1
                )));
            }
            let from = network.source().atoms()[i].vertex;
            let to = network.target().atoms()[j].vertex;
            let curve = find_curve(network, from, to).ok_or_else(|| {
                Error::InvalidCurve(format!(
                    "no directed curve from {} to {} for entry ({}, {})",
                    network.label(from),
                    network.label(to),
                    i + 1,
                    j + 1
                ))
            })?;
            atoms.push(WeightedCurve {
                curve,
                weight: x.clone(),
            });
        }
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[WeightedCurve] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_weight(&self) -> Rational {
        self.atoms.iter().map(|a| &a.weight).sum()
    }

    /// `sum weight(g) * chain(g)`.
    pub fn chain(&self, n_edges: usize) -> EdgeChain {
        let mut out = EdgeChain::zeros(n_edges);
        for a in &self.atoms {
            for &e in a.curve.edges() {
                let c = out.get(e) + &a.weight;
                out.set(e, c);
            }
        }
        out
    }

    /// Matrix `A` with `a_ij` the total weight of curves from `x_i` to `y_j`.
    pub fn representing_matrix(&self, network: &TransportNetwork) -> Result<Matrix> {
        Ok(Cells::new(network, self)?.matrix)
    }
}

pub(crate) fn check_matrix_shape(network: &TransportNetwork, a: &Matrix) -> Result<()> {
    let expected = (network.source().len(), network.target().len());
    if a.shape() != expected {
        return Err(Error::Shape {
            expected,
            found: a.shape(),
        });
    }
    Ok(())
}

/// Cell `(i, j)` of every atom plus the representing matrix.
pub(crate) struct Cells {
    pub of_atom: Vec<(usize, usize)>,
    pub matrix: Matrix,
}

impl Cells {
    pub fn new(network: &TransportNetwork, eta: &CurveMeasure) -> Result<Self> {
        let mut matrix = Matrix::zeros(network.source().len(), network.target().len());
        let mut of_atom = Vec::with_capacity(eta.len());
        for a in eta.atoms() {
            let (i, j) = cell_of(network, &a.curve)?;
            matrix[(i, j)] += &a.weight;
            of_atom.push((i, j));
        }
        Ok(Self { of_atom, matrix })
    }
}

fn cell_of(network: &TransportNetwork, curve: &PathCurve) -> Result<(usize, usize)> {
    let i = network.source().position(curve.start());
    let j = network.target().position(curve.end());
    match (i, j) {
        (Some(i), Some(j)) => Ok((i, j)),
        _ => Err(Error::InvalidCurve(format!(
            "curve from {} to {} does not join a source atom to a target atom",
            network.label(curve.start()),
            network.label(curve.end())
        ))),
    }
}

/// Greedy path stripping. Repeatedly takes the first source atom with mass
/// left, follows the out-edge with the largest remaining weight (smaller index
/// on ties) until it reaches a target atom with unmet demand, and removes the
/// bottleneck amount along that curve.
pub fn extract_good_decomposition(network: &TransportNetwork) -> Result<CurveMeasure> {
    network
        .require_valid()
        .map_err(|e| Error::Precondition(e.to_string()))?;
    let edges = network.edges();
    let n = network.vertices().len();
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, e) in edges.iter().enumerate() {
        out_edges[network.vertex_position(e.tail).unwrap()].push(k);
    }

    let mut rem_edge: Vec<Rational> = edges.iter().map(|e| e.weight.clone()).collect();
    let mut rem_source: Vec<Rational> = network
        .source()
        .atoms()
        .iter()
        .map(|a| a.mass.clone())
        .collect();
    let mut rem_target: Vec<Rational> = network
        .target()
        .atoms()
        .iter()
        .map(|a| a.mass.clone())
        .collect();
    let mut atoms = Vec::new();

    while let Some(i) = rem_source.iter().position(|m| m.is_positive()) {
        let start = network.source().atoms()[i].vertex;
        let mut at = start;
        let mut visited = vec![false; n];
        visited[network.vertex_position(at).unwrap()] = true;
        let mut path: Vec<usize> = Vec::new();

        let j = loop {
            if at != start {
                if let Some(j) = network.target().position(at) {
                    if rem_target[j].is_positive() {
                        break j;
                    }
                }
            }
            let pos = network.vertex_position(at).unwrap();
            let mut best: Option<usize> = None;
            for &k in &out_edges[pos] {
                if rem_edge[k].is_positive() && best.is_none_or(|b| rem_edge[k] > rem_edge[b]) {
                    best = Some(k);
                }
            }
            let Some(k) = best else {
                return Err(Error::Structural {
                    edge: path.last().copied().unwrap_or(usize::MAX),
                    reason: format!("directed dead end at vertex {}", network.label(at)),
                });
            };
            path.push(k);
            at = edges[k].head;
            let next = network.vertex_position(at).unwrap();
            if visited[next] {
                return Err(Error::Structural {
                    edge: k,
                    reason: format!(
                        "edge closes a directed cycle through vertex {}",
                        network.label(at)
                    ),
                });
            }
            visited[next] = true;
        };

        let mut amount = rem_source[i].clone().min(rem_target[j].clone());
        for &k in &path {
            amount = amount.min(rem_edge[k].clone());
        }
        rem_source[i] -= &amount;
        rem_target[j] -= &amount;
        for &k in &path {
            rem_edge[k] -= &amount;
        }
        atoms.push(WeightedCurve {
            curve: PathCurve::new(network, path)?,
            weight: amount,
        });
    }

    if let Some(k) = rem_edge.iter().position(|w| w.is_positive()) {
        return Err(Error::Structural {
            edge: k,
            reason: format!(
                "weight {} left over after stripping all source mass (edge lies on a directed cycle)",
                format_rational(&rem_edge[k])
            ),
        });
    }
    CurveMeasure::new(atoms)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeMismatch {
    pub edge: usize,
    pub expected: Rational,
    pub found: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomMismatch {
    pub vertex: VertexId,
    pub expected: Rational,
    pub found: Rational,
}

/// Outcome of [`verify_good_decomposition`]; every list empty means good.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GoodReport {
    pub edge_mismatches: Vec<EdgeMismatch>,
    pub source_mismatches: Vec<AtomMismatch>,
    pub target_mismatches: Vec<AtomMismatch>,
    /// Curves whose edges leave the network or whose endpoints are not atoms.
    pub stray_curves: Vec<usize>,
    pub boundary_mass: Rational,
    pub twice_total_weight: Rational,
}

impl GoodReport {
    pub fn is_good(&self) -> bool {
        self.edge_mismatches.is_empty()
            && self.source_mismatches.is_empty()
            && self.target_mismatches.is_empty()
            && self.stray_curves.is_empty()
            && self.boundary_mass == self.twice_total_weight
    }
}

/// Exact check that `eta` superposes to the network chain with no
/// cancellation and that its endpoint pushforwards are the source and target
/// measures.
pub fn verify_good_decomposition(network: &TransportNetwork, eta: &CurveMeasure) -> GoodReport {
    let n_edges = network.edges().len();
    let mut report = GoodReport::default();
    let mut flow = vec![Rational::zero(); n_edges];
    let mut starts: HashMap<VertexId, Rational> = HashMap::new();
    let mut ends: HashMap<VertexId, Rational> = HashMap::new();

    for (k, a) in eta.atoms().iter().enumerate() {
        let on_network = a.curve.edges().iter().all(|&e| e < n_edges)
            && PathCurve::new(network, a.curve.edges().to_vec()).is_ok_and(|c| c == a.curve);
        let endpoints_ok = network.source().position(a.curve.start()).is_some()
            && network.target().position(a.curve.end()).is_some();
        if !on_network || !endpoints_ok {
            report.stray_curves.push(k);
        }
        if !on_network {
            continue;
        }
        for &e in a.curve.edges() {
            flow[e] += &a.weight;
        }
        *starts.entry(a.curve.start()).or_insert_with(Rational::zero) += &a.weight;
        *ends.entry(a.curve.end()).or_insert_with(Rational::zero) += &a.weight;
    }

    for (e, edge) in network.edges().iter().enumerate() {
        if flow[e] != edge.weight {
            report.edge_mismatches.push(EdgeMismatch {
                edge: e,
                expected: edge.weight.clone(),
                found: flow[e].clone(),
            });
        }
    }

    let compare = |measure: &crate::model::AtomicMeasure,
                   got: &HashMap<VertexId, Rational>,
                   out: &mut Vec<AtomMismatch>| {
        let mut vertices: Vec<VertexId> = measure
            .atoms()
            .iter()
            .map(|a| a.vertex)
            .chain(got.keys().copied())
            .collect();
        vertices.sort();
        vertices.dedup();
        for v in vertices {
            let expected = measure.mass_at(v);
            let found = got.get(&v).cloned().unwrap_or_else(Rational::zero);
            if expected != found {
                out.push(AtomMismatch {
                    vertex: v,
                    expected,
                    found,
                });
            }
        }
    };
    compare(network.source(), &starts, &mut report.source_mismatches);
    compare(network.target(), &ends, &mut report.target_mismatches);

    report.boundary_mass = network.boundary(&network.chain()).mass();
    report.twice_total_weight = eta.total_weight() * Rational::from_integer(2.into());
    report
}

/// `S_ij`: the weight-averaged chain of the curves from `x_i` to `y_j`, or the
/// zero chain for an empty cell. Indices are zero-based.
pub fn cell_chain(
    network: &TransportNetwork,
    eta: &CurveMeasure,
    i: usize,
    j: usize,
) -> Result<EdgeChain> {
    let cells = Cells::new(network, eta)?;
    Ok(cell_chain_from(network, eta, &cells, i, j))
}

fn cell_chain_from(
    network: &TransportNetwork,
    eta: &CurveMeasure,
    cells: &Cells,
    i: usize,
    j: usize,
) -> EdgeChain {
    let n_edges = network.edges().len();
    let mass = &cells.matrix[(i, j)];
    let mut out = EdgeChain::zeros(n_edges);
    if mass.is_zero() {
        return out;
    }
    for (a, &cell) in eta.atoms().iter().zip(&cells.of_atom) {
        if cell == (i, j) {
            out.add_scaled(&a.curve.chain(n_edges), &(&a.weight / mass));
        }
    }
    out
}

/// `C = S_{i1 j1} - S_{i1 j2} - S_{i2 j1} + S_{i2 j2}` with the common sign of
/// the four cells when they agree (exactly when `C` has zero boundary).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VanishingCycle {
    pub chain: EdgeChain,
    pub sign: Option<u8>,
}

impl VanishingCycle {
    pub fn vanishes(&self) -> bool {
        self.chain.is_zero()
    }
}

pub fn vanishing_cycle(
    network: &TransportNetwork,
    eta: &CurveMeasure,
    (i1, j1): (usize, usize),
    (i2, j2): (usize, usize),
) -> Result<VanishingCycle> {
    if i1 >= i2 || j1 >= j2 {
        return Err(Error::Precondition(format!(
            "need i1 < i2 and j1 < j2, got ({}, {}) and ({}, {})",
            i1 + 1,
            j1 + 1,
            i2 + 1,
            j2 + 1
        )));
    }
    let cells = Cells::new(network, eta)?;
    if i2 >= cells.matrix.rows() || j2 >= cells.matrix.cols() {
        return Err(Error::Precondition("cell index out of range".into()));
    }
    Ok(four_cell(network, eta, &cells, (i1, j1), (i2, j2)))
}

fn four_cell(
    network: &TransportNetwork,
    eta: &CurveMeasure,
    cells: &Cells,
    (i1, j1): (usize, usize),
    (i2, j2): (usize, usize),
) -> VanishingCycle {
    let s = |i, j| cell_chain_from(network, eta, cells, i, j);
    let chain = &(&(&s(i1, j1) - &s(i1, j2)) - &s(i2, j1)) + &s(i2, j2);
    let sgn = |i, j| u8::from(cells.matrix[(i, j)].is_positive());
    let signs = [sgn(i1, j1), sgn(i1, j2), sgn(i2, j1), sgn(i2, j2)];
    let sign = signs.iter().all(|&x| x == signs[0]).then_some(signs[0]);
    VanishingCycle { chain, sign }
}

/// Index pairs ordered by `i + j`, then by `i`: (0,0), (0,1), (1,0), (0,2), ...
pub fn graded_order(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (i, j)))
        .collect();
    out.sort_by_key(|&(i, j)| (i + j, i));
    out
}

/// `A_eta(i*, j*)`: pairs `(i, j)` with `i > i*`, `j > j*` whose four-cell
/// cycle with the base vanishes and whose four cells are all positive. Listed
/// in graded order.
pub fn candidate_set(
    network: &TransportNetwork,
    eta: &CurveMeasure,
    base: (usize, usize),
) -> Result<Vec<(usize, usize)>> {
    let cells = Cells::new(network, eta)?;
    let mut checker = VanishChecker::new(network, eta, &cells);
    Ok(candidates(&cells.matrix, base, &mut checker))
}

type Cell = (usize, usize);

struct VanishChecker<'a> {
    network: &'a TransportNetwork,
    eta: &'a CurveMeasure,
    cells: &'a Cells,
    cache: HashMap<(Cell, Cell), bool>,
}

impl<'a> VanishChecker<'a> {
    fn new(network: &'a TransportNetwork, eta: &'a CurveMeasure, cells: &'a Cells) -> Self {
        Self {
            network,
            eta,
            cells,
            cache: HashMap::new(),
        }
    }

    fn vanishes(&mut self, base: (usize, usize), other: (usize, usize)) -> bool {
        let (network, eta, cells) = (self.network, self.eta, self.cells);
        *self
            .cache
            .entry((base, other))
            .or_insert_with(|| four_cell(network, eta, cells, base, other).vanishes())
    }
}

/// Candidates for `base` given current cell masses `a`. Cell chains are taken
/// from the checker's original measure, which is valid as long as `a` only
/// rescales cells proportionally.
fn candidates(
    a: &Matrix,
    (bi, bj): (usize, usize),
    checker: &mut VanishChecker,
) -> Vec<(usize, usize)> {
    if !a[(bi, bj)].is_positive() {
        return Vec::new();
    }
    graded_order(a.rows(), a.cols())
        .into_iter()
        .filter(|&(i, j)| {
            i > bi
                && j > bj
                && a[(bi, j)].is_positive()
                && a[(i, bj)].is_positive()
                && a[(i, j)].is_positive()
                && checker.vanishes((bi, bj), (i, j))
        })
        .collect()
}

/// True when every candidate set is empty.
pub fn is_better(network: &TransportNetwork, eta: &CurveMeasure) -> Result<bool> {
    let cells = Cells::new(network, eta)?;
    let mut checker = VanishChecker::new(network, eta, &cells);
    Ok(graded_order(cells.matrix.rows(), cells.matrix.cols())
        .into_iter()
        .all(|base| candidates(&cells.matrix, base, &mut checker).is_empty()))
}

/// One update `a[base] += m`, `a[base.0][partner.1] -= m`,
/// `a[partner.0][base.1] -= m`, `a[partner] += m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pivot {
    pub base: (usize, usize),
    pub partner: (usize, usize),
    pub amount: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BetterDecomposition {
    pub measure: CurveMeasure,
    pub pivots: Vec<Pivot>,
}

/// Sweeps base cells in graded order; for each base, repeatedly pivots with
/// the first candidate until the candidate set is empty. Mass moves
/// proportionally inside multi-curve cells, so every cell chain `S_ij` is kept.
pub fn better_decompose(
    network: &TransportNetwork,
    eta: &CurveMeasure,
) -> Result<BetterDecomposition> {
    let report = verify_good_decomposition(network, eta);
    if !report.is_good() {
        return Err(Error::Precondition(
            "input is not a good decomposition of the network".into(),
        ));
    }
    let cells = Cells::new(network, eta)?;
    let mut checker = VanishChecker::new(network, eta, &cells);
    let mut a = cells.matrix.clone();
    let (rows, cols) = a.shape();
    let mut pivots = Vec::new();

    for base in graded_order(rows, cols) {
        let mut steps = 0usize;
        while let Some(&partner) = candidates(&a, base, &mut checker).first() {
            steps += 1;
            if steps > rows * cols {
                return Err(Error::Invariant(format!(
                    "pivot count for base ({}, {}) exceeds {}",
                    base.0 + 1,
                    base.1 + 1,
                    rows * cols
                )));
            }
            let before = a.positive_count();
            let (bi, bj) = base;
            let (i, j) = partner;
            let m = a[(bi, j)].clone().min(a[(i, bj)].clone());
            a[(bi, bj)] += &m;
            a[(bi, j)] -= &m;
            a[(i, bj)] -= &m;
            a[(i, j)] += &m;
            if a.positive_count() >= before {
                return Err(Error::Invariant("pivot did not empty a cell".into()));
            }
            pivots.push(Pivot {
                base,
                partner,
                amount: m,
            });
        }
    }

    let measure = rescale_measure(network, eta, &a)?;
    Ok(BetterDecomposition { measure, pivots })
}

/// `eta_tilde << eta`: every cell charged by `eta_tilde` is charged by `eta`
/// with the same cell chain.
pub fn precc_check(
    network: &TransportNetwork,
    eta_tilde: &CurveMeasure,
    eta: &CurveMeasure,
) -> Result<bool> {
    let ct = Cells::new(network, eta_tilde)?;
    let c = Cells::new(network, eta)?;
    for (i, j, x) in ct.matrix.entries() {
        if !x.is_positive() {
            continue;
        }
        if !c.matrix[(i, j)].is_positive() {
            return Ok(false);
        }
        if cell_chain_from(network, eta_tilde, &ct, i, j) != cell_chain_from(network, eta, &c, i, j)
        {
            return Ok(false);
        }
    }
    Ok(true)
}
