//! Worked example networks and matrices shipped with the crate. The files live
//! in `fixtures/` next to the crate manifest and are embedded at compile time.
//! Vertex ids follow one convention: source `x_i` is `i`, target `y_j` is
//! `100 + j`, junctions start at 201. Coordinates come from the drawings and
//! only influence lengths and costs.

use crate::io::{parse_document, parse_matrix_csv, Document};
use crate::matrix::Matrix;

pub const EXAMPLE3_1: &str = include_str!("../fixtures/example3_1.toml");
pub const REMARK4_CROSSING: &str = include_str!("../fixtures/remark4_crossing.toml");
pub const SEC5_G1: &str = include_str!("../fixtures/sec5_g1.toml");
pub const SEC5_G2: &str = include_str!("../fixtures/sec5_g2.toml");
pub const EX6_CROSSING_2X2: &str = include_str!("../fixtures/ex6_crossing_2x2.toml");
pub const EX6_5X5: &str = include_str!("../fixtures/ex6_5x5.toml");
pub const EX6_11X11: &str = include_str!("../fixtures/ex6_11x11.toml");
pub const EX6_A_CSV: &str = include_str!("../fixtures/ex6_A.csv");
pub const EX6_11X11_A_CSV: &str = include_str!("../fixtures/ex6_11x11_A.csv");

/// Every network document by name.
pub const ALL: [(&str, &str); 7] = [
    ("example3_1", EXAMPLE3_1),
    ("remark4_crossing", REMARK4_CROSSING),
    ("sec5_g1", SEC5_G1),
    ("sec5_g2", SEC5_G2),
    ("ex6_crossing_2x2", EX6_CROSSING_2X2),
    ("ex6_5x5", EX6_5X5),
    ("ex6_11x11", EX6_11X11),
];

/// Embedded text by name; CSV fixtures are found by their file name.
pub fn lookup(name: &str) -> Option<&'static str> {
    match name {
        "ex6_A.csv" | "ex6_A" => Some(EX6_A_CSV),
        "ex6_11x11_A.csv" | "ex6_11x11_A" => Some(EX6_11X11_A_CSV),
        _ => {
            let stem = name.strip_suffix(".toml").unwrap_or(name);
            ALL.iter().find(|(n, _)| *n == stem).map(|(_, text)| *text)
        }
    }
}

fn load(text: &str) -> Document {
    parse_document(text).expect("embedded fixture parses")
}

/// Two sources, two targets, a shared trunk; curves give `[[2, 2], [1, 1]]`.
pub fn example3_1() -> Document {
    load(EXAMPLE3_1)
}

/// Acyclic flow whose support contains an undirected loop.
pub fn remark4_crossing() -> Document {
    load(REMARK4_CROSSING)
}

/// Path compatible with the plan in its matrix.
pub fn sec5_g1() -> Document {
    load(SEC5_G1)
}

/// Path with the same plan but no curve from `x1` to `y2`.
pub fn sec5_g2() -> Document {
    load(SEC5_G2)
}

/// Curves give `[[1, 1], [1, 0]]`; the pair `(x2, y2)` has no curve.
pub fn ex6_crossing_2x2() -> Document {
    load(EX6_CROSSING_2X2)
}

/// All-positive 5x5 representing matrix in the document's matrix section.
pub fn ex6_5x5() -> Document {
    load(EX6_5X5)
}

/// Block-structured 11x11 representing matrix in the matrix section.
pub fn ex6_11x11() -> Document {
    load(EX6_11X11)
}

pub fn ex6_a() -> Matrix {
    parse_matrix_csv(EX6_A_CSV).expect("embedded fixture parses")
}

pub fn ex6_11x11_a() -> Matrix {
    parse_matrix_csv(EX6_11X11_A_CSV).expect("embedded fixture parses")
}

/// Blockwise stair-shaped form of the 11x11 matrix.
pub fn ex6_11x11_b() -> Matrix {
    Matrix::from_ints(&[
        [4, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 3, 8, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 6, 8, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 3, 8, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 4, 7, 6, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 1, 9, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 3, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 3, 3],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 5],
    ])
}
