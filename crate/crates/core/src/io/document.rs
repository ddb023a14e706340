//! The network document: a TOML file with `vertices`, `edges`, `source`,
//! `target`, and optional `curves` and `[matrix]`.
//!
//! ```toml
//! dimension = 2
//!
//! vertices = [
//!   { id = 1, label = "x1", coords = ["-1", "1"] },
//!   { id = 101, label = "y1", coords = ["1", "1"] },
//! ]
//!
//! edges = [
//!   { tail = 1, head = 101, weight = "3/2" },
//! ]
//!
//! source = [
//!   { vertex = 1, mass = "3/2" },
//! ]
//!
//! target = [
//!   { vertex = 101, mass = "3/2" },
//! ]
//!
//! curves = [
//!   { name = "c1", edges = [0], weight = "3/2" },
//! ]
//!
//! [matrix]
//! entries = [
//!   ["3/2"],
//! ]
//! ```
//!
//! Numbers may be written as strings (`"p/q"`, integers, decimals) or as bare
//! TOML integers and floats; floats are read through their shortest decimal
//! form. A curve is either an explicit edge-index list or a `from`/`to` pair
//! resolved to the shortest directed path. [`emit_document`] writes the
//! canonical form, which parses back to the same values.

use std::collections::HashSet;
use std::ops::Range;

use serde::Deserialize;
use toml::Spanned;

use crate::chains::find_curve;
use crate::decomposition::{CurveMeasure, WeightedCurve};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{Atom, AtomicMeasure, Edge, PathCurve, Point, TransportNetwork, VertexId};
use crate::rational::{format_rational, parse_rational, rational_from_f64, Rational};

#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub network: TransportNetwork,
    pub curves: Option<CurveMeasure>,
    pub matrix: Option<Matrix>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Number {
    Text(String),
    Int(i64),
    Float(f64),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    dimension: Option<Spanned<usize>>,
    #[serde(default)]
    vertices: Vec<Spanned<RawVertex>>,
    #[serde(default)]
    edges: Vec<Spanned<RawEdge>>,
    #[serde(default)]
    source: Vec<Spanned<RawAtom>>,
    #[serde(default)]
    target: Vec<Spanned<RawAtom>>,
    curves: Option<Vec<Spanned<RawCurve>>>,
    matrix: Option<RawMatrix>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVertex {
    id: u32,
    label: Option<String>,
    coords: Vec<Spanned<Number>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    tail: u32,
    head: u32,
    weight: Spanned<Number>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtom {
    vertex: u32,
    mass: Spanned<Number>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurve {
    #[allow(dead_code)]
    name: Option<String>,
    edges: Option<Vec<usize>>,
    from: Option<u32>,
    to: Option<u32>,
    weight: Spanned<Number>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    entries: Spanned<Vec<Vec<Spanned<Number>>>>,
}

/// Converts byte offsets into 1-based line and column numbers.
struct Locator<'a> {
    text: &'a str,
}

impl Locator<'_> {
    fn position(&self, offset: usize) -> (usize, usize) {
        let offset = offset.min(self.text.len());
        let before = &self.text[..offset];
        let line = before.matches('\n').count() + 1;
        let column = before.rfind('\n').map_or(offset, |nl| offset - nl - 1) + 1;
        (line, column)
    }

    fn error(&self, span: Range<usize>, message: impl Into<String>) -> Error {
        let (line, column) = self.position(span.start);
        Error::Document {
            message: message.into(),
            line,
            column,
        }
    }

    fn number(&self, n: &Spanned<Number>) -> Result<Rational> {
        let parsed = match n.get_ref() {
            Number::Text(s) => parse_rational(s),
            Number::Int(i) => Ok(Rational::from_integer((*i).into())),
            Number::Float(f) => rational_from_f64(*f),
        };
        parsed.map_err(|e| self.error(n.span(), e.to_string()))
    }
}

pub fn parse_document(text: &str) -> Result<Document> {
    let loc = Locator { text };
    let raw: RawDocument = toml::from_str(text).map_err(|e| {
        let span = e.span().unwrap_or(0..0);
        loc.error(span, e.message().to_string())
    })?;

    let mut ids = HashSet::new();
    let mut vertices = Vec::with_capacity(raw.vertices.len());
    for v in &raw.vertices {
        let inner = v.get_ref();
        if !ids.insert(inner.id) {
            return Err(loc.error(v.span(), format!("duplicate vertex id {}", inner.id)));
        }
        let coords = inner
            .coords
            .iter()
            .map(|c| loc.number(c))
            .collect::<Result<Vec<_>>>()?;
        vertices.push(Point {
            id: VertexId(inner.id),
            label: inner.label.clone(),
            coords,
        });
    }
    let dimension = match &raw.dimension {
        Some(d) => {
            if *d.get_ref() == 0 {
                return Err(loc.error(d.span(), "dimension must be at least 1"));
            }
            *d.get_ref()
        }
        None => vertices.first().map_or(1, |p| p.coords.len().max(1)),
    };
    for (v, p) in raw.vertices.iter().zip(&vertices) {
        if p.coords.len() != dimension {
            return Err(loc.error(
                v.span(),
                format!(
                    "vertex {} has {} coordinates, expected {dimension}",
                    p.id,
                    p.coords.len()
                ),
            ));
        }
    }

    let known = |id: u32, span: Range<usize>| -> Result<VertexId> {
        if ids.contains(&id) {
            Ok(VertexId(id))
        } else {
            Err(loc.error(span, format!("unknown vertex {id}")))
        }
    };

    let mut edges = Vec::with_capacity(raw.edges.len());
    for e in &raw.edges {
        let inner = e.get_ref();
        edges.push(Edge {
            tail: known(inner.tail, e.span())?,
            head: known(inner.head, e.span())?,
            weight: loc.number(&inner.weight)?,
        });
    }

    let measure = |atoms: &[Spanned<RawAtom>]| -> Result<AtomicMeasure> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(atoms.len());
        for a in atoms {
            let inner = a.get_ref();
            let vertex = known(inner.vertex, a.span())?;
            if !seen.insert(vertex) {
                return Err(loc.error(a.span(), format!("duplicate atom at vertex {vertex}")));
            }
            out.push(Atom {
                vertex,
                mass: loc.number(&inner.mass)?,
            });
        }
        AtomicMeasure::new(out).map_err(|e| {
            let span = atoms.first().map_or(0..0, Spanned::span);
            loc.error(span, e.to_string())
        })
    };
    let source = measure(&raw.source)?;
    let target = measure(&raw.target)?;
    let network = TransportNetwork::new(dimension, vertices, edges, source, target);

    let curves = match &raw.curves {
        None => None,
        Some(list) => {
            let mut atoms = Vec::with_capacity(list.len());
            for c in list {
                let inner = c.get_ref();
                let curve = match (&inner.edges, inner.from, inner.to) {
                    (Some(edges), None, None) => PathCurve::new(&network, edges.clone())
                        .map_err(|e| loc.error(c.span(), e.to_string()))?,
                    (None, Some(from), Some(to)) => {
                        let from = known(from, c.span())?;
                        let to = known(to, c.span())?;
                        find_curve(&network, from, to).ok_or_else(|| {
                            loc.error(c.span(), format!("no directed curve from {from} to {to}"))
                        })?
                    }
                    _ => {
                        return Err(loc.error(
                            c.span(),
                            "a curve needs either `edges` or both `from` and `to`",
                        ))
                    }
                };
                atoms.push(WeightedCurve {
                    curve,
                    weight: loc.number(&inner.weight)?,
                });
            }
            let span = list.first().map_or(0..0, Spanned::span);
            Some(CurveMeasure::new(atoms).map_err(|e| loc.error(span, e.to_string()))?)
        }
    };

    let matrix = match &raw.matrix {
        None => None,
        Some(m) => {
            let rows = m
                .entries
                .get_ref()
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|x| loc.number(x))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Some(Matrix::from_rows(rows).map_err(|e| loc.error(m.entries.span(), e.to_string()))?)
        }
    };

    Ok(Document {
        network,
        curves,
        matrix,
    })
}

fn quoted(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn num(r: &Rational) -> String {
    quoted(&format_rational(r))
}

/// Canonical text of a document.
pub fn emit_document(doc: &Document) -> String {
    let t = &doc.network;
    let mut out = format!("dimension = {}\n", t.dimension());

    let mut section = |name: &str, lines: Vec<String>| {
        out.push('\n');
        if lines.is_empty() {
            out.push_str(&format!("{name} = []\n"));
        } else {
            out.push_str(&format!("{name} = [\n"));
            for line in lines {
                out.push_str(&format!("  {line},\n"));
            }
            out.push_str("]\n");
        }
    };

    section(
        "vertices",
        t.vertices()
            .iter()
            .map(|p| {
                let coords: Vec<String> = p.coords.iter().map(num).collect();
                let label = p
                    .label
                    .as_deref()
                    .map(|l| format!(", label = {}", quoted(l)))
                    .unwrap_or_default();
                format!(
                    "{{ id = {}{label}, coords = [{}] }}",
                    p.id,
                    coords.join(", ")
                )
            })
            .collect(),
    );
    section(
        "edges",
        t.edges()
            .iter()
            .map(|e| {
                format!(
                    "{{ tail = {}, head = {}, weight = {} }}",
                    e.tail,
                    e.head,
                    num(&e.weight)
                )
            })
            .collect(),
    );
    let atoms = |m: &AtomicMeasure| -> Vec<String> {
        m.atoms()
            .iter()
            .map(|a| format!("{{ vertex = {}, mass = {} }}", a.vertex, num(&a.mass)))
            .collect()
    };
    section("source", atoms(t.source()));
    section("target", atoms(t.target()));
    if let Some(curves) = &doc.curves {
        section(
            "curves",
            curves
                .atoms()
                .iter()
                .enumerate()
                .map(|(k, a)| {
                    let edges: Vec<String> = a.curve.edges().iter().map(usize::to_string).collect();
                    format!(
                        "{{ name = \"c{}\", edges = [{}], weight = {} }}",
                        k + 1,
                        edges.join(", "),
                        num(&a.weight)
                    )
                })
                .collect(),
        );
    }
    if let Some(m) = &doc.matrix {
        out.push_str("\n[matrix]\n");
        if m.rows() == 0 {
            out.push_str("entries = []\n");
        } else {
            out.push_str("entries = [\n");
            for i in 0..m.rows() {
                let cells: Vec<String> = m.row(i).iter().map(num).collect();
                out.push_str(&format!("  [{}],\n", cells.join(", ")));
            }
            out.push_str("]\n");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::{int, ratio};

    #[test]
    fn round_trips_fixtures() {
        for (name, text) in fixtures::ALL {
            let doc = parse_document(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            let emitted = emit_document(&doc);
            let again = parse_document(&emitted).unwrap();
            assert_eq!(again, doc, "{name}");
            assert_eq!(emit_document(&again), emitted, "{name}");
        }
    }

    #[test]
    fn degenerate_empty_network() {
        let doc =
            parse_document("dimension = 2\nvertices = []\nedges = []\nsource = []\ntarget = []\n")
                .unwrap();
        assert!(doc.network.validate().is_empty());
        assert_eq!(doc.network.dimension(), 2);
        assert!(doc.curves.is_none() && doc.matrix.is_none());
    }

    #[test]
    fn number_forms() {
        let text = r#"
vertices = [
  { id = 1, coords = [0, 0.5] },
  { id = 2, coords = ["1/3", "-2"] },
]
edges = [ { tail = 1, head = 2, weight = 1.25 } ]
source = [ { vertex = 1, mass = "5/4" } ]
target = [ { vertex = 2, mass = "1.25" } ]
"#;
        let doc = parse_document(text).unwrap();
        let t = doc.network;
        assert_eq!(t.dimension(), 2);
        assert_eq!(t.edges()[0].weight, ratio(5, 4));
        assert_eq!(t.vertices()[1].coords, vec![ratio(1, 3), int(-2)]);
        assert!(t.is_valid());
    }

    #[test]
    fn positioned_diagnostics() {
        let text =
            "vertices = [\n  { id = 1, coords = [\"0\"] },\n  { id = 2, coords = [\"1/0\"] },\n]\n";
        match parse_document(text) {
            Err(Error::Document { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column > 1);
            }
            other => panic!("{other:?}"),
        }

        let dangling = "vertices = [ { id = 1, coords = [0] } ]\nedges = [\n  { tail = 1, head = 9, weight = 1 },\n]\n";
        match parse_document(dangling) {
            Err(Error::Document { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("unknown vertex 9"));
            }
            other => panic!("{other:?}"),
        }

        let dup = "vertices = [ { id = 1, coords = [0] } ]\nsource = [\n  { vertex = 1, mass = 1 },\n  { vertex = 1, mass = 2 },\n]\n";
        match parse_document(dup) {
            Err(Error::Document { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }

        assert!(matches!(
            parse_document("bogus = 1\n"),
            Err(Error::Document { .. })
        ));
        assert!(matches!(
            parse_document("vertices = [\n"),
            Err(Error::Document { .. })
        ));
    }

    #[test]
    fn curves_by_endpoints() {
        let mut text = fixtures::EXAMPLE3_1
            .split("curves")
            .next()
            .unwrap()
            .to_string();
        text.push_str("curves = [\n  { from = 1, to = 101, weight = 2 },\n  { from = 2, to = 102, weight = 3 },\n]\n");
        let doc = parse_document(&text).unwrap();
        let curves = doc.curves.unwrap();
        assert_eq!(curves.atoms()[0].curve.edges(), &[0, 2, 3]);
        assert_eq!(curves.atoms()[1].curve.edges(), &[1, 2, 4]);

        let bad = text.replace("from = 2, to = 102", "from = 101, to = 1");
        assert!(parse_document(&bad).is_err());
    }
}
