//! Stair-shaped matrices: recognition, northwest-corner stairification,
//! elementary-move congruences, positive-block detection, and rescaling a
//! curve measure to a new representing matrix.
//!
//! Indices are zero-based throughout; reports shift them by one.

use std::collections::BTreeMap;
use std::fmt;

use num::{Signed, Zero};

use crate::decomposition::{check_matrix_shape, Cells, CurveMeasure, WeightedCurve};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::TransportNetwork;
use crate::rational::{format_rational, Rational};

/// Monotone staircase `(r_k, c_k)` from `(0, 0)` to `(M-1, N-1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StairProfile {
    positions: Vec<(usize, usize)>,
}

impl StairProfile {
    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    pub fn contains(&self, cell: (usize, usize)) -> bool {
        self.positions.contains(&cell)
    }
}

impl fmt::Display for StairProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self
            .positions
            .iter()
            .map(|(r, c)| format!("({},{})", r + 1, c + 1))
            .collect();
        f.write_str(&cells.join(" "))
    }
}

/// A positive entry that no staircase through the matrix can cover.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NotStairShaped {
    pub row: usize,
    pub col: usize,
}

/// Walks from the top-left corner to the bottom-right one. At each cell it
/// steps down if the column still has positive entries below, right if the row
/// still has positive entries to the right; both at once is a violation.
pub fn is_stair_shaped(a: &Matrix) -> std::result::Result<StairProfile, NotStairShaped> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(StairProfile {
            positions: Vec::new(),
        });
    }
    let mut positions = vec![(0, 0)];
    let (mut r, mut c) = (0, 0);
    while (r, c) != (m - 1, n - 1) {
        let down = if r == m - 1 {
            false
        } else if c == n - 1 {
            true
        } else {
            let below = (r + 1..m).any(|i| a[(i, c)].is_positive());
            let right = (c + 1..n).find(|&j| a[(r, j)].is_positive());
            match (below, right) {
                (true, Some(j)) => return Err(NotStairShaped { row: r, col: j }),
                (true, None) => true,
                _ => false,
            }
        };
        if down {
            r += 1;
        } else {
            c += 1;
        }
        positions.push((r, c));
    }
    Ok(StairProfile { positions })
}

fn require_nonnegative(a: &Matrix) -> Result<()> {
    match a.entries().find(|(_, _, x)| x.is_negative()) {
        Some((i, j, x)) => Err(Error::Domain(format!(
            "negative entry {} at ({}, {})",
            format_rational(x),
            i + 1,
            j + 1
        ))),
        None => Ok(()),
    }
}

/// Stair-shaped matrix with the same row and column sums.
///
/// At the active cell with row remainder `R` and column remainder `C`: if
/// `R <= C` the cell takes `R` and the walk moves down, otherwise it takes `C`
/// and moves right. In the last row (column) only rightward (downward) moves
/// remain.
pub fn stairify(a: &Matrix) -> Result<Matrix> {
    require_nonnegative(a)?;
    let (m, n) = a.shape();
    let mut b = Matrix::zeros(m, n);
    if m == 0 || n == 0 {
        return Ok(b);
    }
    let mut rows = a.row_sums();
    let mut cols = a.col_sums();
    let (mut i, mut j) = (0, 0);
    loop {
        let take_row = if i == m - 1 {
            false
        } else if j == n - 1 {
            true
        } else {
            rows[i] <= cols[j]
        };
        let value = if take_row {
            rows[i].clone()
        } else {
            cols[j].clone()
        };
        rows[i] -= &value;
        cols[j] -= &value;
        b[(i, j)] = value;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if take_row {
            i += 1;
        } else {
            j += 1;
        }
    }
    Ok(b)
}

/// `t * E[(i1, j1), (i2, j2)]`: `+t` on the diagonal corners, `-t` on the
/// other two.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementaryMove {
    pub first: (usize, usize),
    pub second: (usize, usize),
    pub amount: Rational,
}

impl ElementaryMove {
    pub fn apply(&self, a: &mut Matrix) {
        let ((i1, j1), (i2, j2)) = (self.first, self.second);
        a[(i1, j1)] += &self.amount;
        a[(i2, j2)] += &self.amount;
        a[(i1, j2)] -= &self.amount;
        a[(i2, j1)] -= &self.amount;
    }

    pub fn is_admissible_to(&self, a: &Matrix) -> bool {
        let ((i1, j1), (i2, j2)) = (self.first, self.second);
        [(i1, j1), (i1, j2), (i2, j1), (i2, j2)]
            .iter()
            .all(|&cell| a[cell].is_positive())
    }
}

impl fmt::Display for ElementaryMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} * E[({},{}),({},{})]",
            format_rational(&self.amount),
            self.first.0 + 1,
            self.first.1 + 1,
            self.second.0 + 1,
            self.second.1 + 1
        )
    }
}

/// `A + sum moves`.
pub fn apply_moves(a: &Matrix, moves: &[ElementaryMove]) -> Matrix {
    let mut out = a.clone();
    for mv in moves {
        mv.apply(&mut out);
    }
    out
}

/// `Some(moves)` with `B = A + sum moves` when the row and column sums agree.
/// The moves all use the top-left cell as first corner.
pub fn congruent(a: &Matrix, b: &Matrix) -> Result<Option<Vec<ElementaryMove>>> {
    a.check_same_shape(b)?;
    if a.row_sums() != b.row_sums() || a.col_sums() != b.col_sums() {
        return Ok(None);
    }
    let d = b.sub(a)?;
    let moves = d
        .entries()
        .filter(|&(i, j, x)| i > 0 && j > 0 && !x.is_zero())
        .map(|(i, j, x)| ElementaryMove {
            first: (0, 0),
            second: (i, j),
            amount: x.clone(),
        })
        .collect();
    Ok(Some(moves))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AdmissibleWitness {
    /// Moves admissible to `A` whose sum is `B - A`.
    Moves(Vec<ElementaryMove>),
    /// No combination of admissible moves reaches `B`; nothing is claimed
    /// about other routes.
    NotVerified,
}

/// Solves `B - A = sum t_k E_k` over the elementary matrices admissible to
/// `A` (all four corners positive in `A`), exactly.
pub fn admissible_moves_witness(a: &Matrix, b: &Matrix) -> Result<AdmissibleWitness> {
    if congruent(a, b)?.is_none() {
        return Err(Error::Precondition(
            "matrices have different row or column sums".into(),
        ));
    }
    let d = b.sub(a)?;
    if d.is_zero() {
        return Ok(AdmissibleWitness::Moves(Vec::new()));
    }
    let (m, n) = a.shape();
    let cols = a.cols();

    // independent admissible generators, echelon-reduced on the side
    let max_rank = (m - 1) * (n - 1);
    let mut basis: BTreeMap<usize, BTreeMap<usize, Rational>> = BTreeMap::new();
    let mut chosen: Vec<CellPair> = Vec::new();
    'outer: for i1 in 0..m {
        for i2 in i1 + 1..m {
            for j1 in 0..n {
                for j2 in j1 + 1..n {
                    let mv = ElementaryMove {
                        first: (i1, j1),
                        second: (i2, j2),
                        amount: Rational::zero(),
                    };
                    if !mv.is_admissible_to(a) {
                        continue;
                    }
                    let v = move_vector(&mv, cols);
                    if let Some(reduced) = reduce(&basis, v) {
                        let (&pivot, lead) = reduced.iter().next().unwrap();
                        let lead = lead.clone();
                        let normalized = reduced.into_iter().map(|(k, x)| (k, x / &lead)).collect();
                        basis.insert(pivot, normalized);
                        chosen.push(((i1, j1), (i2, j2)));
                        if chosen.len() == max_rank {
                            break 'outer;
                        }
                    }
                }
            }
        }
    }

    match solve_combination(&chosen, &d, cols) {
        Some(coeffs) => {
            let moves: Vec<ElementaryMove> = chosen
                .into_iter()
                .zip(coeffs)
                .filter(|(_, t)| !t.is_zero())
                .map(|((first, second), amount)| ElementaryMove {
                    first,
                    second,
                    amount,
                })
                .collect();
            if apply_moves(a, &moves) != *b {
                return Err(Error::Invariant(
                    "admissible witness does not reach B".into(),
                ));
            }
            Ok(AdmissibleWitness::Moves(moves))
        }
        None => Ok(AdmissibleWitness::NotVerified),
    }
}

fn move_vector(mv: &ElementaryMove, cols: usize) -> BTreeMap<usize, Rational> {
    let ((i1, j1), (i2, j2)) = (mv.first, mv.second);
    let one = Rational::from_integer(1.into());
    BTreeMap::from([
        (i1 * cols + j1, one.clone()),
        (i2 * cols + j2, one.clone()),
        (i1 * cols + j2, -one.clone()),
        (i2 * cols + j1, -one),
    ])
}

/// Reduces `v` against a basis whose vectors have their pivot as smallest
/// index; `None` if `v` lies in the span.
fn reduce(
    basis: &BTreeMap<usize, BTreeMap<usize, Rational>>,
    mut v: BTreeMap<usize, Rational>,
) -> Option<BTreeMap<usize, Rational>> {
    let mut cursor = 0;
    loop {
        let next = v
            .range(cursor..)
            .map(|(&k, _)| k)
            .find(|k| basis.contains_key(k));
        let Some(k) = next else { break };
        let factor = v[&k].clone();
        for (&idx, x) in &basis[&k] {
            let entry = v.entry(idx).or_insert_with(Rational::zero);
            *entry -= x * &factor;
            if entry.is_zero() {
                v.remove(&idx);
            }
        }
        cursor = k + 1;
    }
    (!v.is_empty()).then_some(v)
}

/// Two opposite corners of an elementary move.
type CellPair = ((usize, usize), (usize, usize));

/// Coefficients `t` with `sum t_k E_k = d`, by Gaussian elimination on the
/// dense system (columns = chosen generators).
fn solve_combination(chosen: &[CellPair], d: &Matrix, cols: usize) -> Option<Vec<Rational>> {
    let unknowns = chosen.len();
    let equations = d.rows() * d.cols();
    let mut rows: Vec<Vec<Rational>> = (0..equations)
        .map(|r| {
            let mut row = vec![Rational::zero(); unknowns + 1];
            row[unknowns] = d.get(r / cols, r % cols).clone();
            row
        })
        .collect();
    for (k, &(first, second)) in chosen.iter().enumerate() {
        let mv = ElementaryMove {
            first,
            second,
            amount: Rational::zero(),
        };
        for (idx, x) in move_vector(&mv, cols) {
            rows[idx][k] = x;
        }
    }

    let mut pivot_row = 0;
    let mut pivots = Vec::new();
    for col in 0..unknowns {
        let Some(r) = (pivot_row..equations).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(pivot_row, r);
        let lead = rows[pivot_row][col].clone();
        for x in rows[pivot_row].iter_mut() {
            *x /= &lead;
        }
        let pivot = rows[pivot_row].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != pivot_row && !row[col].is_zero() {
                let factor = row[col].clone();
                for (x, p) in row.iter_mut().zip(&pivot) {
                    *x -= p * &factor;
                }
            }
        }
        pivots.push(col);
        pivot_row += 1;
    }
    if rows[pivot_row..].iter().any(|row| !row[unknowns].is_zero()) {
        return None;
    }
    let mut t = vec![Rational::zero(); unknowns];
    for (r, &col) in pivots.iter().enumerate() {
        t[col] = rows[r][unknowns].clone();
    }
    Some(t)
}

/// Inclusive index rectangle `[top..=bottom] x [left..=right]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Block {
    pub top: usize,
    pub left: usize,
    pub bottom: usize,
    pub right: usize,
}

impl Block {
    pub fn contains(&self, (i, j): (usize, usize)) -> bool {
        self.top <= i && i <= self.bottom && self.left <= j && j <= self.right
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.bottom - self.top + 1, self.right - self.left + 1)
    }

    fn area(&self) -> usize {
        let (r, c) = self.shape();
        r * c
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rows {}..{} cols {}..{}",
            self.top + 1,
            self.bottom + 1,
            self.left + 1,
            self.right + 1
        )
    }
}

/// Chain of all-positive blocks covering every positive entry: the first block
/// starts at the top-left cell, and each next block starts at `(i', j')`,
/// `(i', j'+1)`, `(i'+1, j')` or `(i'+1, j'+1)` relative to the previous
/// block's bottom-right corner `(i', j')`. Starts sharing fewer lines with the
/// previous block are tried first, and at each start maximal blocks before
/// larger ones; the first chain found is returned.
pub fn detect_blocks(a: &Matrix) -> Option<Vec<Block>> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 || !a[(0, 0)].is_positive() {
        return None;
    }
    let positives: Vec<(usize, usize)> = a
        .entries()
        .filter(|(_, _, x)| x.is_positive())
        .map(|(i, j, _)| (i, j))
        .collect();
    let mut chain = Vec::new();
    search_blocks(a, &positives, (0, 0), &mut chain).then_some(chain)
}

fn search_blocks(
    a: &Matrix,
    positives: &[(usize, usize)],
    start: (usize, usize),
    chain: &mut Vec<Block>,
) -> bool {
    for block in candidate_blocks(a, start) {
        chain.push(block);
        let uncovered: Vec<(usize, usize)> = positives
            .iter()
            .copied()
            .filter(|&p| !chain.iter().any(|b| b.contains(p)))
            .collect();
        if uncovered.is_empty() {
            return true;
        }
        let (bi, bj) = (block.bottom, block.right);
        for next in [(bi + 1, bj + 1), (bi, bj + 1), (bi + 1, bj), (bi, bj)] {
            if next == start || next.0 >= a.rows() || next.1 >= a.cols() {
                continue;
            }
            if !a[next].is_positive() {
                continue;
            }
            if uncovered.iter().any(|&(r, c)| r < next.0 || c < next.1) {
                continue;
            }
            if search_blocks(a, positives, next, chain) {
                return true;
            }
        }
        chain.pop();
    }
    false
}

/// All-positive rectangles with top-left corner `start`: maximal ones first,
/// then by decreasing area, then by increasing height.
fn candidate_blocks(a: &Matrix, (i0, j0): (usize, usize)) -> Vec<Block> {
    let (m, n) = a.shape();
    let mut out = Vec::new();
    let mut width = n - j0;
    for bottom in i0..m {
        let run = (j0..n)
            .take_while(|&j| a[(bottom, j)].is_positive())
            .count();
        width = width.min(run);
        if width == 0 {
            break;
        }
        for w in 1..=width {
            out.push(Block {
                top: i0,
                left: j0,
                bottom,
                right: j0 + w - 1,
            });
        }
    }
    let all_positive = |rows: std::ops::RangeInclusive<usize>,
                        cols: std::ops::RangeInclusive<usize>| {
        rows.clone()
            .all(|i| cols.clone().all(|j| a[(i, j)].is_positive()))
    };
    let maximal = |b: &Block| {
        let up = b.top > 0 && all_positive(b.top - 1..=b.top - 1, b.left..=b.right);
        let down = b.bottom + 1 < m && all_positive(b.bottom + 1..=b.bottom + 1, b.left..=b.right);
        let left = b.left > 0 && all_positive(b.top..=b.bottom, b.left - 1..=b.left - 1);
        let right = b.right + 1 < n && all_positive(b.top..=b.bottom, b.right + 1..=b.right + 1);
        !(up || down || left || right)
    };
    out.sort_by_key(|b| (!maximal(b), std::cmp::Reverse(b.area()), b.bottom));
    out
}

/// Stairifies each detected block in turn, in place, each block read from the
/// matrix as updated by the previous ones.
pub fn blockwise_stairify(a: &Matrix) -> Result<(Matrix, Vec<Block>)> {
    require_nonnegative(a)?;
    let blocks =
        detect_blocks(a).ok_or_else(|| Error::Precondition("no block structure".into()))?;
    let mut b = a.clone();
    for block in &blocks {
        let sub = b.submatrix(block.top, block.left, block.bottom, block.right);
        b.set_submatrix(block.top, block.left, &stairify(&sub)?);
    }
    Ok((b, blocks))
}

/// `eta_B = sum (b_ij / a_ij) eta_A` restricted to cell `(i, j)`.
///
/// Fails with a domain error when `B` charges a cell that `eta_A` leaves
/// empty, since no curve is available to carry that mass.
pub fn rescale_measure(
    network: &TransportNetwork,
    eta_a: &CurveMeasure,
    b: &Matrix,
) -> Result<CurveMeasure> {
    check_matrix_shape(network, b)?;
    let cells = Cells::new(network, eta_a)?;
    if let Some((i, j, x)) = b
        .entries()
        .find(|&(i, j, x)| x.is_positive() && !cells.matrix[(i, j)].is_positive())
    {
        return Err(Error::Domain(format!(
            "entry ({}, {}) = {} has no curves to rescale",
            i + 1,
            j + 1,
            format_rational(x)
        )));
    }
    rescale_on_support(network, eta_a, b)
}

/// Applies the cellwise factor `b_ij / a_ij` wherever `a_ij > 0` and ignores
/// entries of `B` on empty cells.
pub fn rescale_on_support(
    network: &TransportNetwork,
    eta_a: &CurveMeasure,
    b: &Matrix,
) -> Result<CurveMeasure> {
    check_matrix_shape(network, b)?;
    require_nonnegative(b)?;
    let cells = Cells::new(network, eta_a)?;
    let atoms = eta_a
        .atoms()
        .iter()
        .zip(&cells.of_atom)
        .filter_map(|(atom, &(i, j))| {
            let factor = &b[(i, j)] / &cells.matrix[(i, j)];
            (!factor.is_zero()).then(|| WeightedCurve {
                curve: atom.curve.clone(),
                weight: &atom.weight * factor,
            })
        })
        .collect();
    CurveMeasure::new(atoms)
}
