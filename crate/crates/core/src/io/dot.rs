//! Graphviz export. Vertices are placed at their first two coordinates
//! (`pos` with `!`, for `neato -n`), edges are labelled with their weights.

use std::fmt::Write;

use num::Zero;

use crate::model::{EdgeChain, TransportNetwork};
use crate::rational::{format_rational, to_f64};

const PALETTE: [&str; 8] = [
    "firebrick",
    "royalblue",
    "darkgreen",
    "darkorange",
    "purple",
    "teal",
    "goldenrod",
    "deeppink",
];

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn header(network: &TransportNetwork, name: &str) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(name)).unwrap();
    writeln!(out, "  node [shape=circle, fontsize=10];").unwrap();
    for p in network.vertices() {
        let x = p.coords.first().map_or(0.0, to_f64) * 72.0;
        let y = p.coords.get(1).map_or(0.0, to_f64) * 72.0;
        let shape = if network.source().position(p.id).is_some() {
            ", shape=box"
        } else if network.target().position(p.id).is_some() {
            ", shape=doublecircle"
        } else {
            ""
        };
        writeln!(
            out,
            "  v{} [label=\"{}\", pos=\"{x:.3},{y:.3}!\"{shape}];",
            p.id,
            escape(&network.label(p.id))
        )
        .unwrap();
    }
    out
}

pub fn to_dot(network: &TransportNetwork, name: &str) -> String {
    let mut out = header(network, name);
    for e in network.edges() {
        writeln!(
            out,
            "  v{} -> v{} [label=\"{}\"];",
            e.tail,
            e.head,
            format_rational(&e.weight)
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

/// One coloured edge set per part; edges with a zero coefficient in a part are
/// omitted from it.
pub fn to_dot_with_parts(
    network: &TransportNetwork,
    name: &str,
    parts: &[(String, EdgeChain)],
) -> String {
    let mut out = header(network, name);
    for (k, (label, chain)) in parts.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        for (e, c) in chain.coeffs().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let edge = &network.edges()[e];
            writeln!(
                out,
                "  v{} -> v{} [label=\"{}: {}\", color={color}, fontcolor={color}];",
                edge.tail,
                edge.head,
                escape(label),
                format_rational(c)
            )
            .unwrap();
        }
    }
    out.push_str("}\n");
    out
}
