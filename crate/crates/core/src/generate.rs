//! Seeded random instances: forest-supported (hence cycle-free) transport
//! paths, and the same paths with one extra chord carrying a circulation.

use std::collections::HashSet;

use num::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chains::{find_cycle_unchecked, CycleCertificate};
use crate::error::{Error, Result};
use crate::model::{Atom, AtomicMeasure, Edge, EdgeChain, Point, TransportNetwork, VertexId};
use crate::rational::{int, ratio, Rational};

/// How source and target masses are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Masses {
    /// Sources `k/d` with `k` in 1..=6 and `d` in 1..=4; targets split the
    /// total in random proportions.
    Rational,
    /// Every mass an integer in `1..=max` on both sides (redrawn until the
    /// totals agree).
    Integer { max: i64 },
}

/// Random cycle-free network with `sources` source atoms and `targets` target
/// atoms, reproducible from `seed`.
///
/// A random tree is grown over the atoms plus a few junctions; each tree edge
/// carries the net supply of the subtree below it, oriented along the flow.
/// Zero-flow edges and the junctions they strand are dropped, so the support
/// is a forest. Vertices get distinct integer coordinates in the plane.
pub fn random_forest(
    seed: u64,
    sources: usize,
    targets: usize,
    masses: Masses,
) -> Result<TransportNetwork> {
    if sources == 0 || targets == 0 {
        return Err(Error::Domain(
            "need at least one source and one target".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (supply, demand) = draw_masses(&mut rng, sources, targets, masses)?;

    let junctions = rng.gen_range(0..=(sources + targets) / 2);
    let n = sources + targets + junctions;
    // net supply per node: positive at sources, negative at targets
    let mut net = vec![Rational::zero(); n];
    for (i, m) in supply.iter().enumerate() {
        net[i] = m.clone();
    }
    for (j, m) in demand.iter().enumerate() {
        net[sources + j] = -m.clone();
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut parent = vec![usize::MAX; n];
    for k in 1..n {
        parent[order[k]] = order[rng.gen_range(0..k)];
    }

    // subtree supplies, children before parents
    let mut subtree = net.clone();
    for &v in order.iter().skip(1).rev() {
        let s = subtree[v].clone();
        subtree[parent[v]] += s;
    }

    let mut raw_edges: Vec<(usize, usize, Rational)> = Vec::new();
    for &v in order.iter().skip(1) {
        let flow = &subtree[v];
        if flow.is_positive() {
            raw_edges.push((v, parent[v], flow.clone()));
        } else if flow.is_negative() {
            raw_edges.push((parent[v], v, -flow.clone()));
        }
    }

    let mut used = vec![false; n];
    used[..sources + targets].fill(true);
    for (t, h, _) in &raw_edges {
        used[*t] = true;
        used[*h] = true;
    }
    let id = |k: usize| -> u32 {
        if k < sources {
            k as u32 + 1
        } else if k < sources + targets {
            (100 * digits_base(sources.max(targets)) + k - sources + 1) as u32
        } else {
            (200 * digits_base(sources.max(targets)) + k - sources - targets + 1) as u32
        }
    };
    let label = |k: usize| -> String {
        if k < sources {
            format!("x{}", k + 1)
        } else if k < sources + targets {
            format!("y{}", k - sources + 1)
        } else {
            format!("j{}", k - sources - targets + 1)
        }
    };

    let grid = 4 * n as i64;
    let mut taken = HashSet::new();
    let mut vertices = Vec::new();
    for (k, &keep) in used.iter().enumerate() {
        let (x, y) = loop {
            let p = (rng.gen_range(0..grid), rng.gen_range(0..grid));
            if taken.insert(p) {
                break p;
            }
        };
        if keep {
            vertices.push(Point::labeled(id(k), &label(k), vec![int(x), int(y)]));
        }
    }

    let edges = raw_edges
        .into_iter()
        .map(|(t, h, w)| Edge::new(id(t), id(h), w))
        .collect();
    let source = AtomicMeasure::new(
        supply
            .into_iter()
            .enumerate()
            .map(|(i, mass)| Atom {
                vertex: VertexId(id(i)),
                mass,
            })
            .collect(),
    )?;
    let target = AtomicMeasure::new(
        demand
            .into_iter()
            .enumerate()
            .map(|(j, mass)| Atom {
                vertex: VertexId(id(sources + j)),
                mass,
            })
            .collect(),
    )?;
    Ok(TransportNetwork::new(2, vertices, edges, source, target))
}

/// Id block size: 1 for up to 99 atoms per side, then powers of ten.
fn digits_base(count: usize) -> usize {
    let mut base = 1;
    while count >= 100 * base {
        base *= 10;
    }
    base
}

fn draw_masses(
    rng: &mut ChaCha8Rng,
    sources: usize,
    targets: usize,
    masses: Masses,
) -> Result<(Vec<Rational>, Vec<Rational>)> {
    match masses {
        Masses::Rational => {
            let supply: Vec<Rational> = (0..sources)
                .map(|_| ratio(rng.gen_range(1..=6), rng.gen_range(1..=4)))
                .collect();
            let total: Rational = supply.iter().sum();
            let weights: Vec<i64> = (0..targets).map(|_| rng.gen_range(1..=6)).collect();
            let wsum: i64 = weights.iter().sum();
            let demand = weights.iter().map(|&w| &total * ratio(w, wsum)).collect();
            Ok((supply, demand))
        }
        Masses::Integer { max } => {
            if max < 1
                || (sources as i64) * max < targets as i64
                || (targets as i64) * max < sources as i64
            {
                return Err(Error::Domain(format!(
                    "cannot balance {sources} sources and {targets} targets with masses up to {max}"
                )));
            }
            loop {
                let supply: Vec<i64> = (0..sources).map(|_| rng.gen_range(1..=max)).collect();
                let demand: Vec<i64> = (0..targets).map(|_| rng.gen_range(1..=max)).collect();
                if supply.iter().sum::<i64>() == demand.iter().sum::<i64>() {
                    return Ok((
                        supply.into_iter().map(int).collect(),
                        demand.into_iter().map(int).collect(),
                    ));
                }
            }
        }
    }
}

/// Adds one chord between two vertices of a component of `network` and pushes
/// a circulation around the loop it closes, keeping every weight positive.
/// Returns the new network (still balanced, no longer cycle-free) and its
/// cycle certificate. `None` when no component has two non-adjacent vertices.
pub fn with_chord(network: &TransportNetwork, seed: u64) -> Option<(TransportNetwork, EdgeChain)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices = network.vertices();
    let mut pairs = Vec::new();
    for (a, pa) in vertices.iter().enumerate() {
        for pb in &vertices[a + 1..] {
            let adjacent = network.edges().iter().any(|e| {
                (e.tail == pa.id && e.head == pb.id) || (e.tail == pb.id && e.head == pa.id)
            });
            if !adjacent {
                pairs.push((pa.id, pb.id));
            }
        }
    }
    pairs.shuffle(&mut rng);

    for (u, v) in pairs {
        // probe: a zero-free chord closes a loop only if u and v are connected
        let mut edges = network.edges().to_vec();
        edges.push(Edge {
            tail: u,
            head: v,
            weight: int(1),
        });
        let probe = TransportNetwork::new(
            network.dimension(),
            vertices.to_vec(),
            edges.clone(),
            AtomicMeasure::empty(),
            AtomicMeasure::empty(),
        );
        let CycleCertificate::Cycle(loop_chain) = find_cycle_unchecked(&probe) else {
            continue;
        };
        let chord = edges.len() - 1;
        if loop_chain.get(chord).is_zero() {
            continue;
        }
        // loop_chain has +-1 on the loop, +1 on the chord after normalizing
        let unit = loop_chain.scaled(&(Rational::from_integer(1.into()) / loop_chain.get(chord)));
        let slack = unit
            .coeffs()
            .iter()
            .enumerate()
            .filter(|&(e, c)| e != chord && c.is_negative())
            .map(|(e, _)| edges[e].weight.clone())
            .min();
        let max_amount = slack.unwrap_or_else(|| int(4));
        let amount = max_amount * ratio(rng.gen_range(1..=3), 4);
        for (e, c) in unit.coeffs().iter().enumerate() {
            if e == chord {
                edges[e].weight = amount.clone();
            } else if !c.is_zero() {
                edges[e].weight += c * &amount;
            }
        }
        let out = TransportNetwork::new(
            network.dimension(),
            vertices.to_vec(),
            edges,
            network.source().clone(),
            network.target().clone(),
        );
        if !out.is_valid() {
            continue;
        }
        if let CycleCertificate::Cycle(c) = find_cycle_unchecked(&out) {
            return Some((out, c));
        }
    }
    None
}
