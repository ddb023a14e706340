//! Splitting a transport path into parts: one part per target plus a remainder
//! (single-target split), a map-compatible plus a plan-compatible part, and the
//! difference of two map-compatible parts for stair-shaped decompositions.
//! Also the compatibility check between a path and a transport plan.

use std::collections::BTreeMap;

use num::{Signed, Zero};

use crate::chains::{find_curve_within, find_cycle_unchecked};
use crate::decomposition::{
    check_matrix_shape, is_better, verify_good_decomposition, Cells, CurveMeasure, WeightedCurve,
};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{AtomicMeasure, EdgeChain, SignedNodeMeasure, TransportNetwork};
use crate::rational::Rational;
use crate::stairshape::{is_stair_shaped, rescale_measure};

/// Which atoms a map sends where.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapDirection {
    /// Source atoms to target atoms.
    Forward,
    /// Target atoms to source atoms.
    Reverse,
}

/// Map between atom indices together with the mass carried by each domain
/// atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransportMap {
    pub direction: MapDirection,
    /// domain atom index -> (image atom index, mass)
    pub assignment: BTreeMap<usize, (usize, Rational)>,
}

impl TransportMap {
    /// Mass received by each image atom.
    pub fn pushforward(&self, image_len: usize) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); image_len];
        for (image, mass) in self.assignment.values() {
            out[*image] += mass;
        }
        out
    }

    /// Induced plan `(id x map)_# mu` as a sources-by-targets matrix.
    pub fn plan(&self, sources: usize, targets: usize) -> Matrix {
        let mut out = Matrix::zeros(sources, targets);
        for (&domain, (image, mass)) in &self.assignment {
            let cell = match self.direction {
                MapDirection::Forward => (domain, *image),
                MapDirection::Reverse => (*image, domain),
            };
            out[cell] += mass;
        }
        out
    }

    pub fn image_of(&self, domain: usize) -> Option<usize> {
        self.assignment.get(&domain).map(|(image, _)| *image)
    }
}

/// One piece of a split with the sub-measure of `eta` that carries it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitPart {
    pub label: String,
    pub chain: EdgeChain,
    pub source: AtomicMeasure,
    pub target: AtomicMeasure,
    pub witness: CurveMeasure,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SingleTargetSplit {
    /// `parts[0]` is `T_0`; `parts[j + 1]` is the part ending at target `j`.
    pub parts: Vec<SplitPart>,
    /// Source indices feeding at least two targets.
    pub b0: Vec<usize>,
    /// `bj[j]`: source indices feeding only target `j`.
    pub bj: Vec<Vec<usize>>,
    pub matrix: Matrix,
}

fn check_split_preconditions(network: &TransportNetwork, eta: &CurveMeasure) -> Result<()> {
    network
        .require_valid()
        .map_err(|e| Error::Precondition(e.to_string()))?;
    if !verify_good_decomposition(network, eta).is_good() {
        return Err(Error::Precondition(
            "curve measure is not a good decomposition".into(),
        ));
    }
    if !find_cycle_unchecked(network).is_cycle_free() {
        return Err(Error::Precondition("network is not cycle-free".into()));
    }
    Ok(())
}

/// Witness restricted to the cells where `keep` holds.
fn restrict(
    eta: &CurveMeasure,
    cells: &Cells,
    keep: impl Fn(usize, usize) -> bool,
) -> Result<CurveMeasure> {
    CurveMeasure::new(
        eta.atoms()
            .iter()
            .zip(&cells.of_atom)
            .filter(|(_, &(i, j))| keep(i, j))
            .map(|(a, _)| a.clone())
            .collect(),
    )
}

fn measure_from(
    network: &TransportNetwork,
    masses: &[Rational],
    sources: bool,
) -> Result<AtomicMeasure> {
    let atoms = if sources {
        network.source().atoms()
    } else {
        network.target().atoms()
    };
    AtomicMeasure::from_masses(atoms.iter().zip(masses).map(|(a, m)| (a.vertex, m.clone())))
}

fn make_part(
    network: &TransportNetwork,
    label: String,
    witness: CurveMeasure,
    source_masses: &[Rational],
    target_masses: &[Rational],
) -> Result<SplitPart> {
    let chain = witness.chain(network.edges().len());
    let part = SplitPart {
        label,
        chain,
        source: measure_from(network, source_masses, true)?,
        target: measure_from(network, target_masses, false)?,
        witness,
    };
    if !network.is_subcurrent(&part.chain) {
        return Err(Error::Invariant(format!(
            "{} is not a subcurrent",
            part.label
        )));
    }
    let expected = SignedNodeMeasure::transport_boundary(&part.source, &part.target);
    if network.boundary(&part.chain) != expected {
        return Err(Error::Invariant(format!(
            "{} has the wrong boundary",
            part.label
        )));
    }
    Ok(part)
}

fn check_parts_sum(network: &TransportNetwork, parts: &[&SplitPart]) -> Result<()> {
    let mut total = EdgeChain::zeros(network.edges().len());
    for p in parts {
        total = &total + &p.chain;
    }
    if total != network.chain() {
        return Err(Error::Invariant("parts do not sum to the network".into()));
    }
    Ok(())
}

/// `X_j = {i : a_ij > 0}`, `B_0` the union of pairwise intersections,
/// `B_j = X_j \ B_0`; `T_j` is carried by the cells of `B_j` and `T_0` by the
/// rows in `B_0`.
pub fn split_single_target(
    network: &TransportNetwork,
    eta: &CurveMeasure,
) -> Result<SingleTargetSplit> {
    check_split_preconditions(network, eta)?;
    if !is_better(network, eta)? {
        return Err(Error::Precondition(
            "curve measure is not a better decomposition".into(),
        ));
    }
    let cells = Cells::new(network, eta)?;
    let a = &cells.matrix;
    let (m, n) = a.shape();

    let x: Vec<Vec<usize>> = (0..n)
        .map(|j| (0..m).filter(|&i| a[(i, j)].is_positive()).collect())
        .collect();
    let mut in_b0 = vec![false; m];
    for j1 in 0..n {
        for j2 in j1 + 1..n {
            let common: Vec<usize> = x[j1]
                .iter()
                .copied()
                .filter(|i| x[j2].contains(i))
                .collect();
            if common.len() >= 2 {
                return Err(Error::Inconsistent(format!(
                    "targets {} and {} share {} sources; the network is not cycle-free or the decomposition is not better",
                    network.target_label(j1),
                    network.target_label(j2),
                    common.len()
                )));
            }
            for i in common {
                in_b0[i] = true;
            }
        }
    }
    let b0: Vec<usize> = (0..m).filter(|&i| in_b0[i]).collect();
    if b0.len() > n * n.saturating_sub(1) / 2 {
        return Err(Error::Invariant(format!("|B_0| = {} too large", b0.len())));
    }
    let bj: Vec<Vec<usize>> = x
        .iter()
        .map(|xj| xj.iter().copied().filter(|&i| !in_b0[i]).collect())
        .collect();

    let source_masses: Vec<Rational> = network
        .source()
        .atoms()
        .iter()
        .map(|a| a.mass.clone())
        .collect();
    let mut parts = Vec::with_capacity(n + 1);
    let mut tilde = vec![Rational::zero(); n];
    for j in 0..n {
        let mut src = vec![Rational::zero(); m];
        for &i in &bj[j] {
            src[i] = source_masses[i].clone();
            tilde[j] += &a[(i, j)];
        }
        let mut tgt = vec![Rational::zero(); n];
        tgt[j] = tilde[j].clone();
        let witness = restrict(eta, &cells, |i, jj| jj == j && !in_b0[i])?;
        parts.push(make_part(
            network,
            format!("T{}", j + 1),
            witness,
            &src,
            &tgt,
        )?);
    }
    let src0: Vec<Rational> = (0..m)
        .map(|i| {
            if in_b0[i] {
                source_masses[i].clone()
            } else {
                Rational::zero()
            }
        })
        .collect();
    let tgt0: Vec<Rational> = network
        .target()
        .atoms()
        .iter()
        .zip(&tilde)
        .map(|(atom, t)| &atom.mass - t)
        .collect();
    let witness0 = restrict(eta, &cells, |i, _| in_b0[i])?;
    parts.insert(0, make_part(network, "T0".into(), witness0, &src0, &tgt0)?);

    check_parts_sum(network, &parts.iter().collect::<Vec<_>>())?;
    Ok(SingleTargetSplit {
        parts,
        b0,
        bj,
        matrix: a.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapPlanSplit {
    pub map_part: SplitPart,
    pub map: TransportMap,
    pub plan_part: SplitPart,
    pub plan: Matrix,
    pub map_report: CompatibilityReport,
    pub plan_report: CompatibilityReport,
}

/// `T = T_phi + T_pi`: `phi` sends each source of `B_j` to `y_j`; the plan
/// keeps the rows of `B_0`, each of which feeds at least two targets.
pub fn split_map_plan(network: &TransportNetwork, eta: &CurveMeasure) -> Result<MapPlanSplit> {
    let single = split_single_target(network, eta)?;
    let (m, n) = single.matrix.shape();

    let mut assignment = BTreeMap::new();
    for (j, sources) in single.bj.iter().enumerate() {
        for &i in sources {
            assignment.insert(i, (j, network.source().atoms()[i].mass.clone()));
        }
    }
    let map = TransportMap {
        direction: MapDirection::Forward,
        assignment,
    };

    let mut plan = Matrix::zeros(m, n);
    for &i in &single.b0 {
        for j in 0..n {
            plan[(i, j)] = single.matrix[(i, j)].clone();
        }
        let fed = (0..n).filter(|&j| plan[(i, j)].is_positive()).count();
        if fed < 2 {
            return Err(Error::Invariant(format!(
                "plan row of {} feeds {fed} target(s)",
                network.source_label(i)
            )));
        }
    }

    let mut parts = single.parts.into_iter();
    let t0 = parts.next().expect("T0 present");
    let mut phi_witness = Vec::new();
    for p in parts {
        phi_witness.extend(p.witness.atoms().iter().cloned());
    }
    let phi_witness = CurveMeasure::new(phi_witness)?;
    let phi_plan = map.plan(m, n);
    let map_part = make_part(
        network,
        "T_phi".into(),
        phi_witness,
        &phi_plan.row_sums(),
        &phi_plan.col_sums(),
    )?;
    if map.pushforward(n) != phi_plan.col_sums() {
        return Err(Error::Invariant("map pushforward mismatch".into()));
    }
    let plan_part = SplitPart {
        label: "T_pi".into(),
        ..t0
    };
    if plan.row_sums() != measure_masses(network, &plan_part.source, true)
        || plan.col_sums() != measure_masses(network, &plan_part.target, false)
    {
        return Err(Error::Invariant("plan marginals mismatch".into()));
    }
    check_parts_sum(network, &[&map_part, &plan_part])?;

    let map_report =
        verify_compatibility(network, &map_part.chain, Some(&map_part.witness), &phi_plan)?;
    let plan_report =
        verify_compatibility(network, &plan_part.chain, Some(&plan_part.witness), &plan)?;
    if !map_report.is_compatible() || !plan_report.is_compatible() {
        return Err(Error::Invariant("split part failed compatibility".into()));
    }
    Ok(MapPlanSplit {
        map_part,
        map,
        plan_part,
        plan,
        map_report,
        plan_report,
    })
}

fn measure_masses(
    network: &TransportNetwork,
    measure: &AtomicMeasure,
    sources: bool,
) -> Vec<Rational> {
    let atoms = if sources {
        network.source().atoms()
    } else {
        network.target().atoms()
    };
    atoms.iter().map(|a| measure.mass_at(a.vertex)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoMapSplit {
    pub b: Matrix,
    pub b1: Matrix,
    pub b2: Matrix,
    /// `phi`: source `i` to the column of its last positive entry.
    pub phi: TransportMap,
    /// `psi`: target `j` to the row of its positive entry in `B2`.
    pub psi: TransportMap,
    pub t1: SplitPart,
    pub t2: SplitPart,
    pub phi_report: CompatibilityReport,
    pub psi_report: CompatibilityReport,
}

/// `T = T1 + T2` for a stair-shaped good decomposition. `B1` keeps the last
/// positive entry of every row and `B2 = B - B1`; then `(T1, phi)` and
/// `(-T2, psi)` are both map-compatible.
pub fn split_two_maps(network: &TransportNetwork, eta: &CurveMeasure) -> Result<TwoMapSplit> {
    network
        .require_valid()
        .map_err(|e| Error::Precondition(e.to_string()))?;
    if !verify_good_decomposition(network, eta).is_good() {
        return Err(Error::Precondition(
            "curve measure is not a good decomposition".into(),
        ));
    }
    let b = eta.representing_matrix(network)?;
    if let Err(bad) = is_stair_shaped(&b) {
        return Err(Error::Precondition(format!(
            "representing matrix is not stair-shaped (entry ({}, {}))",
            bad.row + 1,
            bad.col + 1
        )));
    }
    let (m, n) = b.shape();
    let mut b1 = Matrix::zeros(m, n);
    for i in 0..m {
        if let Some(j) = (0..n).rev().find(|&j| b[(i, j)].is_positive()) {
            b1[(i, j)] = b[(i, j)].clone();
        }
    }
    let b2 = b.sub(&b1)?;

    let mut phi = BTreeMap::new();
    for (i, j, x) in b1.entries() {
        if x.is_positive() {
            phi.insert(i, (j, x.clone()));
        }
    }
    let mut psi = BTreeMap::new();
    for (i, j, x) in b2.entries() {
        if x.is_positive() && psi.insert(j, (i, x.clone())).is_some() {
            return Err(Error::Invariant(format!(
                "column {} of B2 has two positive entries",
                j + 1
            )));
        }
    }
    let phi = TransportMap {
        direction: MapDirection::Forward,
        assignment: phi,
    };
    let psi = TransportMap {
        direction: MapDirection::Reverse,
        assignment: psi,
    };

    let eta1 = rescale_measure(network, eta, &b1)?;
    let eta2 = rescale_measure(network, eta, &b2)?;
    let t1 = make_part(network, "T1".into(), eta1, &b1.row_sums(), &b1.col_sums())?;
    let t2 = make_part(network, "T2".into(), eta2, &b2.row_sums(), &b2.col_sums())?;
    check_parts_sum(network, &[&t1, &t2])?;
    if phi.pushforward(n) != b1.col_sums() || psi.pushforward(m) != b2.row_sums() {
        return Err(Error::Invariant("map pushforward mismatch".into()));
    }

    let phi_report = verify_compatibility(network, &t1.chain, Some(&t1.witness), &phi.plan(m, n))?;
    // -T2 runs from targets back to sources; its witness is eta2 reversed, so
    // the check is done on T2 against the transposed plan of psi
    let psi_report = verify_compatibility(network, &t2.chain, Some(&t2.witness), &psi.plan(m, n))?;
    Ok(TwoMapSplit {
        b,
        b1,
        b2,
        phi,
        psi,
        t1,
        t2,
        phi_report,
        psi_report,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CompatibilityReport {
    /// Edges where the witness superposition differs from the part.
    pub chain_mismatches: Vec<usize>,
    /// Cells where the witness endpoint pushforward differs from the plan.
    pub plan_mismatches: Vec<(usize, usize)>,
    /// Cells with positive plan mass but no directed curve on the support.
    pub missing_curves: Vec<(usize, usize)>,
    /// Whether the support of the part has no undirected cycle.
    pub support_cycle_free: bool,
    /// Whether the witness was built from the plan and the unique curves.
    pub witness_synthesized: bool,
}

impl CompatibilityReport {
    pub fn is_compatible(&self) -> bool {
        self.chain_mismatches.is_empty()
            && self.plan_mismatches.is_empty()
            && self.missing_curves.is_empty()
    }
}

/// Checks that `witness` superposes to `part`, that its endpoint pushforward is
/// `plan`, and, on a cycle-free support, that every charged cell has a
/// directed curve along the support. Without a witness one is built as
/// `sum q_ij delta_{g_ij}`.
pub fn verify_compatibility(
    network: &TransportNetwork,
    part: &EdgeChain,
    witness: Option<&CurveMeasure>,
    plan: &Matrix,
) -> Result<CompatibilityReport> {
    check_matrix_shape(network, plan)?;
    if part.len() != network.edges().len() {
        return Err(Error::Precondition(
            "chain does not match the network".into(),
        ));
    }
    let mut report = CompatibilityReport::default();
    let support_weights: Vec<Rational> = part.coeffs().iter().map(|c| c.abs()).collect();
    report.support_cycle_free =
        find_cycle_unchecked(&network.with_weights(support_weights)).is_cycle_free();
    let forward: Vec<bool> = part.coeffs().iter().map(|c| c.is_positive()).collect();

    let mut curves: BTreeMap<(usize, usize), bool> = BTreeMap::new();
    let mut synthesized_atoms = Vec::new();
    for (i, j, q) in plan.entries() {
        if !q.is_positive() {
            continue;
        }
        let from = network.source().atoms()[i].vertex;
        let to = network.target().atoms()[j].vertex;
        let curve = find_curve_within(network, &forward, from, to);
        curves.insert((i, j), curve.is_some());
        if let Some(curve) = curve {
            synthesized_atoms.push(WeightedCurve {
                curve,
                weight: q.clone(),
            });
        }
    }
    if report.support_cycle_free {
        report.missing_curves = curves
            .iter()
            .filter(|(_, &present)| !present)
            .map(|(&cell, _)| cell)
            .collect();
    }

    let synthesized;
    let witness = match witness {
        Some(w) => w,
        None => {
            report.witness_synthesized = true;
            synthesized = CurveMeasure::new(synthesized_atoms)?;
            &synthesized
        }
    };

    let chain = witness.chain(network.edges().len());
    report.chain_mismatches = (0..part.len())
        .filter(|&e| chain.get(e) != part.get(e))
        .collect();
    match witness.representing_matrix(network) {
        Ok(pushed) => {
            report.plan_mismatches = pushed
                .entries()
                .filter(|&(i, j, x)| x != &plan[(i, j)])
                .map(|(i, j, _)| (i, j))
                .collect();
        }
        Err(_) => {
            report.plan_mismatches = plan.entries().map(|(i, j, _)| (i, j)).collect();
        }
    }
    Ok(report)
}
