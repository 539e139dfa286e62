//! Constrained optimization over probability simplices and stochastic kernels.
//!
//! Every infimum and supremum in the exponent formulas is realized here as an
//! exhaustive search over a finite grid of joint distributions that satisfy the
//! marginal constraints exactly, optionally followed by a local refinement.
//!
//! Grid points are indexed in lexicographic order and reductions take the
//! minimum of `(value, index)`, so results do not depend on how the work is
//! split between threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{compositions, mutual_information, Distribution, JointDistribution};

/// Slack allowed on the information constraint at grid points.
pub const INFORMATION_SLACK: f64 = 1e-9;

/// Grid resolution and refinement knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Denominator `k` of the grid.
    pub resolution: usize,
    #[serde(default = "default_refine")]
    pub refine: bool,
    #[serde(default = "default_refine_tolerance")]
    pub refine_tolerance: f64,
    #[serde(default = "default_max_refine_iters")]
    pub max_refine_iters: usize,
}

fn default_refine() -> bool {
    true
}

fn default_refine_tolerance() -> f64 {
    1e-7
}

fn default_max_refine_iters() -> usize {
    500
}

impl GridSpec {
    /// Production settings: grid followed by refinement.
    pub fn new(resolution: usize) -> Self {
        Self {
            resolution,
            refine: true,
            refine_tolerance: default_refine_tolerance(),
            max_refine_iters: default_max_refine_iters(),
        }
    }

    /// Pure exhaustive grid, no refinement.
    pub fn pure(resolution: usize) -> Self {
        Self {
            refine: false,
            ..Self::new(resolution)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid resolution must be >= 2, got {}",
                self.resolution
            )));
        }
        if !(self.refine_tolerance > 0.0) || self.max_refine_iters == 0 {
            return Err(Error::InvalidParameter("refinement settings must be positive".into()));
        }
        Ok(())
    }
}

/// Joint distributions over `rows x cols` with optional fixed marginals and an
/// optional upper bound on the mutual information between rows and columns.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibleSet {
    rows: usize,
    cols: usize,
    row_marginal: Option<Distribution>,
    col_marginal: Option<Distribution>,
    max_information: Option<f64>,
}

impl FeasibleSet {
    /// All joints over `rows x cols`.
    pub fn unconstrained(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_marginal: None,
            col_marginal: None,
            max_information: None,
        }
    }

    /// Both marginals fixed.
    pub fn with_marginals(rows: Distribution, cols: Distribution) -> Self {
        Self {
            rows: rows.len(),
            cols: cols.len(),
            row_marginal: Some(rows),
            col_marginal: Some(cols),
            max_information: None,
        }
    }

    /// Row marginal fixed; columns free.
    pub fn with_row_marginal(rows: Distribution, cols: usize) -> Self {
        Self {
            rows: rows.len(),
            cols,
            row_marginal: Some(rows),
            col_marginal: None,
            max_information: None,
        }
    }

    /// Column marginal fixed; rows free.
    pub fn with_col_marginal(rows: usize, cols: Distribution) -> Self {
        Self {
            rows,
            cols: cols.len(),
            row_marginal: None,
            col_marginal: Some(cols),
            max_information: None,
        }
    }

    pub fn with_information_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "information bound must be >= 0, got {bound}"
            )));
        }
        self.max_information = Some(bound);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn max_information(&self) -> Option<f64> {
        self.max_information
    }

    /// Whether `q` satisfies every constraint (marginals within `1e-9`,
    /// information within [`INFORMATION_SLACK`]).
    pub fn contains(&self, q: &JointDistribution) -> bool {
        if q.rows() != self.rows || q.cols() != self.cols || q.probs().iter().any(|&p| p < 0.0) {
            return false;
        }
        let close = |a: &Distribution, b: &Distribution| {
            a.probs().iter().zip(b.probs()).all(|(x, y)| (x - y).abs() <= 1e-9)
        };
        if let Some(r) = &self.row_marginal {
            if !close(r, &q.row_marginal()) {
                return false;
            }
        }
        if let Some(c) = &self.col_marginal {
            if !close(c, &q.col_marginal()) {
                return false;
            }
        }
        self.information_ok(q.probs())
    }

    fn information_ok(&self, probs: &[f64]) -> bool {
        match self.max_information {
            None => true,
            Some(bound) => {
                let q = JointDistribution::from_raw(self.rows, self.cols, probs.to_vec());
                mutual_information(&q) <= bound + INFORMATION_SLACK
            }
        }
    }

    /// Enumerates the grid at resolution `k`.
    pub fn grid(&self, k: usize) -> Result<Grid> {
        let counts = |d: &Distribution| {
            d.scaled_counts(k).ok_or(Error::NonIntegralComposition {
                denominator: k,
                nearest: d.nearest_denominator(k, 64 * k.max(16)),
            })
        };
        match (&self.row_marginal, &self.col_marginal) {
            (Some(r), Some(c)) => {
                let tables = contingency_tables(&counts(r)?, &counts(c)?);
                Ok(Grid::Tables {
                    rows: self.rows,
                    cols: self.cols,
                    denominator: k,
                    tables,
                })
            }
            (Some(r), None) => Ok(Grid::Blocks(BlockGrid::new(r, self.cols, k, false))),
            (None, Some(c)) => Ok(Grid::Blocks(BlockGrid::new(c, self.rows, k, true))),
            (None, None) => {
                let tables = compositions(k, self.rows * self.cols);
                Ok(Grid::Tables {
                    rows: self.rows,
                    cols: self.cols,
                    denominator: k,
                    tables,
                })
            }
        }
    }

    /// Marginal-preserving search directions.
    pub fn moves(&self) -> Vec<Move> {
        let idx = |r: usize, c: usize| r * self.cols + c;
        let mut out = Vec::new();
        match (&self.row_marginal, &self.col_marginal) {
            (Some(_), Some(_)) => {
                for r1 in 0..self.rows {
                    for r2 in r1 + 1..self.rows {
                        for c1 in 0..self.cols {
                            for c2 in c1 + 1..self.cols {
                                out.push(Move::new(
                                    vec![idx(r1, c1), idx(r2, c2)],
                                    vec![idx(r1, c2), idx(r2, c1)],
                                ));
                            }
                        }
                    }
                }
            }
            (Some(_), None) => {
                for r in 0..self.rows {
                    for c1 in 0..self.cols {
                        for c2 in c1 + 1..self.cols {
                            out.push(Move::new(vec![idx(r, c1)], vec![idx(r, c2)]));
                        }
                    }
                }
            }
            (None, Some(_)) => {
                for c in 0..self.cols {
                    for r1 in 0..self.rows {
                        for r2 in r1 + 1..self.rows {
                            out.push(Move::new(vec![idx(r1, c)], vec![idx(r2, c)]));
                        }
                    }
                }
            }
            (None, None) => {
                let n = self.rows * self.cols;
                for a in 0..n {
                    for b in a + 1..n {
                        out.push(Move::new(vec![a], vec![b]));
                    }
                }
            }
        }
        out
    }
}

/// Marginal-preserving directions for triple joints over `(X x X') x Y`
/// (row `x * second + x'`) whose `X` and `X'` marginals are fixed: output
/// transfers inside each `(x, x')` row, and `2 x 2` swaps of the pair
/// marginal carried by a single output symbol.
pub fn coupling_moves(first: usize, second: usize, outputs: usize) -> Vec<Move> {
    let cell = |a: usize, b: usize, y: usize| (a * second + b) * outputs + y;
    let mut out = Vec::new();
    for a in 0..first {
        for b in 0..second {
            for y1 in 0..outputs {
                for y2 in y1 + 1..outputs {
                    out.push(Move::new(vec![cell(a, b, y1)], vec![cell(a, b, y2)]));
                }
            }
        }
    }
    for a1 in 0..first {
        for a2 in a1 + 1..first {
            for b1 in 0..second {
                for b2 in b1 + 1..second {
                    for y in 0..outputs {
                        out.push(Move::new(
                            vec![cell(a1, b1, y), cell(a2, b2, y)],
                            vec![cell(a1, b2, y), cell(a2, b1, y)],
                        ));
                    }
                }
            }
        }
    }
    out
}

/// Integer tables with the given row and column sums, in lexicographic order
/// of their row-major entries.
pub fn contingency_tables(row_sums: &[usize], col_sums: &[usize]) -> Vec<Vec<usize>> {
    fn fill_row(
        row: usize,
        col: usize,
        row_left: usize,
        cols_left: &mut Vec<usize>,
        row_sums: &[usize],
        table: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let ncols = cols_left.len();
        if row == row_sums.len() {
            if cols_left.iter().all(|&c| c == 0) {
                out.push(table.clone());
            }
            return;
        }
        if col == ncols - 1 {
            if row_left > cols_left[col] {
                return;
            }
            cols_left[col] -= row_left;
            table.push(row_left);
            let next_left = row_sums.get(row + 1).copied().unwrap_or(0);
            fill_row(row + 1, 0, next_left, cols_left, row_sums, table, out);
            table.pop();
            cols_left[col] += row_left;
            return;
        }
        for v in 0..=row_left.min(cols_left[col]) {
            cols_left[col] -= v;
            table.push(v);
            fill_row(row, col + 1, row_left - v, cols_left, row_sums, table, out);
            table.pop();
            cols_left[col] += v;
        }
    }
    let mut out = Vec::new();
    if row_sums.iter().sum::<usize>() != col_sums.iter().sum::<usize>()
        || row_sums.is_empty()
        || col_sums.is_empty()
    {
        return out;
    }
    let mut cols_left = col_sums.to_vec();
    let mut table = Vec::with_capacity(row_sums.len() * col_sums.len());
    fill_row(0, 0, row_sums[0], &mut cols_left, row_sums, &mut table, &mut out);
    out
}

/// Product of independent per-block simplex grids: the joint of a fixed
/// marginal with a gridded conditional.
///
/// A block whose marginal mass is `c/k` gets the compositions of `c`
/// (the joint is then a type with denominator `k`); when the marginal is not a
/// `k`-type every block is gridded as a conditional row at resolution `k`.
#[derive(Clone, Debug)]
pub struct BlockGrid {
    block_mass: Vec<f64>,
    block_denominators: Vec<usize>,
    options: Vec<Vec<Vec<usize>>>,
    width: usize,
    transposed: bool,
}

impl BlockGrid {
    fn new(marginal: &Distribution, width: usize, k: usize, transposed: bool) -> Self {
        let (denominators, mass): (Vec<usize>, Vec<f64>) = match marginal.scaled_counts(k) {
            Some(counts) => (counts, marginal.probs().to_vec()),
            None => (vec![k; marginal.len()], marginal.probs().to_vec()),
        };
        let options = denominators
            .iter()
            .zip(&mass)
            .map(|(&d, &m)| {
                if d == 0 || m == 0.0 {
                    vec![vec![0; width]]
                } else {
                    compositions(d, width)
                }
            })
            .collect();
        Self {
            block_mass: mass,
            block_denominators: denominators,
            options,
            width,
            transposed,
        }
    }

    pub fn len(&self) -> usize {
        self.options.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn fill(&self, mut index: usize, out: &mut [f64]) {
        let nblocks = self.options.len();
        for b in (0..nblocks).rev() {
            let opts = &self.options[b];
            let choice = &opts[index % opts.len()];
            index /= opts.len();
            let d = self.block_denominators[b];
            for (j, &c) in choice.iter().enumerate() {
                let p = if d == 0 { 0.0 } else { self.block_mass[b] * c as f64 / d as f64 };
                let cell = if self.transposed { j * nblocks + b } else { b * self.width + j };
                out[cell] = p;
            }
        }
    }
}

/// A finite set of candidate joints, addressable by index.
#[derive(Clone, Debug)]
pub enum Grid {
    /// Explicit integer tables with a common denominator.
    Tables {
        rows: usize,
        cols: usize,
        denominator: usize,
        tables: Vec<Vec<usize>>,
    },
    Blocks(BlockGrid),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::Tables { tables, .. } => tables.len(),
            Grid::Blocks(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes grid point `index` into `out` (row-major).
    pub fn fill(&self, index: usize, out: &mut [f64]) {
        match self {
            Grid::Tables {
                denominator, tables, ..
            } => {
                for (o, &c) in out.iter_mut().zip(&tables[index]) {
                    *o = c as f64 / *denominator as f64;
                }
            }
            Grid::Blocks(b) => b.fill(index, out),
        }
    }

    fn cells(&self) -> usize {
        match self {
            Grid::Tables { rows, cols, .. } => rows * cols,
            Grid::Blocks(b) => b.options.len() * b.width,
        }
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.cells()];
        self.fill(index, &mut out);
        out
    }
}

/// Outcome of a grid search.
#[derive(Clone, Debug)]
pub struct GridOutcome {
    pub value: f64,
    pub argmin: JointDistribution,
    /// Lexicographic index of the best grid point.
    pub index: usize,
    /// Best value over grid points, before refinement.
    pub grid_value: f64,
    pub feasible_points: usize,
    pub refined: bool,
}

/// Smaller of two `(value, index)` pairs; NaN sorts as `+inf`, ties go to the
/// lower index.
#[inline]
pub fn better(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    let key = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
    match key(a.0).total_cmp(&key(b.0)) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => {
            if a.1 <= b.1 {
                a
            } else {
                b
            }
        }
    }
}

/// Minimum of `objective` over the feasible grid points.
pub fn grid_minimize<F>(objective: F, feasible: &FeasibleSet, grid: &GridSpec) -> Result<GridOutcome>
where
    F: Fn(&JointDistribution) -> f64 + Sync,
{
    grid.validate()?;
    let points = feasible.grid(grid.resolution)?;
    let (rows, cols) = (feasible.rows, feasible.cols);
    let best = (0..points.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; rows * cols],
            |buf, i| {
                points.fill(i, buf);
                if !feasible.information_ok(buf) {
                    return (None, 0usize);
                }
                let q = JointDistribution::from_raw(rows, cols, buf.clone());
                (Some((objective(&q), i)), 1usize)
            },
        )
        .reduce(
            || (None, 0),
            |(a, na), (b, nb)| {
                let m = match (a, b) {
                    (Some(a), Some(b)) => Some(better(a, b)),
                    (a, None) => a,
                    (None, b) => b,
                };
                (m, na + nb)
            },
        );
    let (Some((grid_value, index)), feasible_points) = best else {
        return Err(Error::EmptyFeasibleGrid {
            resolution: grid.resolution,
        });
    };
    let start = points.point(index);
    let mut outcome = GridOutcome {
        value: grid_value,
        argmin: JointDistribution::from_raw(rows, cols, start.clone()),
        index,
        grid_value,
        feasible_points,
        refined: false,
    };
    if grid.refine && grid_value.is_finite() {
        let eval = |p: &[f64]| objective(&JointDistribution::from_raw(rows, cols, p.to_vec()));
        let moves = feasible.moves();
        let escapes = composite_moves(&moves);
        let refined = refine_escaping(
            eval,
            start,
            grid_value,
            &moves,
            &escapes,
            |p| feasible.information_ok(p),
            grid,
        );
        outcome.value = refined.value;
        outcome.argmin = JointDistribution::from_raw(rows, cols, refined.point);
        outcome.refined = true;
    }
    Ok(outcome)
}

/// Maximum of `objective` over the feasible grid points (`argmin` holds the
/// maximizer).
pub fn grid_maximize<F>(objective: F, feasible: &FeasibleSet, grid: &GridSpec) -> Result<GridOutcome>
where
    F: Fn(&JointDistribution) -> f64 + Sync,
{
    let mut out = grid_minimize(|q| -objective(q), feasible, grid)?;
    out.value = -out.value;
    out.grid_value = -out.grid_value;
    Ok(out)
}

/// A direction in the space of joints: `+1` on `plus` cells, `-1` on `minus`
/// cells. Directions used for refinement preserve the constrained marginals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Move {
    pub plus: Vec<usize>,
    pub minus: Vec<usize>,
}

impl Move {
    pub fn new(plus: Vec<usize>, minus: Vec<usize>) -> Self {
        Self { plus, minus }
    }

    /// Admissible step range `[lo, hi]` keeping every cell nonnegative.
    fn step_range(&self, p: &[f64]) -> (f64, f64) {
        let hi = self.minus.iter().map(|&c| p[c]).fold(f64::INFINITY, f64::min);
        let lo = -self.plus.iter().map(|&c| p[c]).fold(f64::INFINITY, f64::min);
        (lo, hi)
    }

    fn apply(&self, p: &[f64], t: f64, out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(p);
        for &c in &self.plus {
            out[c] = (out[c] + t).max(0.0);
        }
        for &c in &self.minus {
            out[c] = (out[c] - t).max(0.0);
        }
    }
}

/// Result of [`refine_minimize`].
#[derive(Clone, Debug)]
pub struct Refined {
    pub value: f64,
    pub point: Vec<f64>,
    pub sweeps: usize,
}

/// Projected coordinate descent along `moves` from `start`.
///
/// Each move is line-searched over the step range that keeps the point
/// nonnegative and `feasible`; `feasible` must describe a convex set containing
/// `start`. A step is accepted only if it lowers the objective, so the value
/// never increases. Stops when a full sweep gains less than
/// `grid.refine_tolerance` or after `grid.max_refine_iters` sweeps.
pub fn refine_minimize<F, C>(
    objective: F,
    start: Vec<f64>,
    start_value: f64,
    moves: &[Move],
    feasible: C,
    grid: &GridSpec,
) -> Refined
where
    F: Fn(&[f64]) -> f64,
    C: Fn(&[f64]) -> bool,
{
    let mut point = start;
    let mut value = start_value;
    let mut trial = Vec::with_capacity(point.len());
    let mut sweeps = 0;
    while sweeps < grid.max_refine_iters {
        sweeps += 1;
        let before = value;
        for mv in moves {
            let (mut lo, mut hi) = mv.step_range(&point);
            if hi - lo <= 1e-15 {
                continue;
            }
            let at = |t: f64, trial: &mut Vec<f64>| {
                mv.apply(&point, t, trial);
                feasible(trial)
            };
            if !at(hi, &mut trial) {
                hi = feasible_edge(0.0, hi, |t| at(t, &mut trial));
            }
            if !at(lo, &mut trial) {
                lo = feasible_edge(0.0, lo, |t| at(t, &mut trial));
            }
            if hi - lo <= 1e-15 {
                continue;
            }
            let mut phi = |t: f64| {
                mv.apply(&point, t, &mut trial);
                objective(&trial)
            };
            let mut best = (value, 0.0);
            for t in [lo, hi] {
                let v = phi(t);
                if v < best.0 {
                    best = (v, t);
                }
            }
            let (t, v) = brent_minimize(&mut phi, lo, hi, 1e-11, 100);
            if v < best.0 {
                best = (v, t);
            }
            if best.1 != 0.0 && best.0 < value {
                mv.apply(&point, best.1, &mut trial);
                if feasible(&trial) {
                    std::mem::swap(&mut point, &mut trial);
                    value = best.0;
                }
            }
        }
        if !(before - value >= grid.refine_tolerance) {
            break;
        }
    }
    Refined {
        value,
        point,
        sweeps,
    }
}

/// Sums and differences of pairs of moves with disjoint cells. Used to leave
/// points where every single move ascends, such as kinks of `max` and `[.]_+`.
pub fn composite_moves(moves: &[Move]) -> Vec<Move> {
    let mut out = Vec::new();
    for (i, a) in moves.iter().enumerate() {
        for b in &moves[i + 1..] {
            let shared = a
                .plus
                .iter()
                .chain(&a.minus)
                .any(|c| b.plus.contains(c) || b.minus.contains(c));
            if shared {
                continue;
            }
            let join = |x: &[usize], y: &[usize]| x.iter().chain(y).copied().collect::<Vec<_>>();
            out.push(Move::new(join(&a.plus, &b.plus), join(&a.minus, &b.minus)));
            out.push(Move::new(join(&a.plus, &b.minus), join(&a.minus, &b.plus)));
        }
    }
    out
}

/// [`refine_minimize`] along `moves`; whenever it stalls, one sweep along
/// `escapes` is tried and descent resumes if that sweep gained anything.
pub fn refine_escaping<F, C>(
    objective: F,
    start: Vec<f64>,
    start_value: f64,
    moves: &[Move],
    escapes: &[Move],
    feasible: C,
    grid: &GridSpec,
) -> Refined
where
    F: Fn(&[f64]) -> f64,
    C: Fn(&[f64]) -> bool,
{
    let one_sweep = GridSpec {
        max_refine_iters: 1,
        ..grid.clone()
    };
    let mut r = refine_minimize(&objective, start, start_value, moves, &feasible, grid);
    let mut sweeps = r.sweeps;
    while sweeps < grid.max_refine_iters && !escapes.is_empty() {
        let e = refine_minimize(&objective, r.point.clone(), r.value, escapes, &feasible, &one_sweep);
        sweeps += 1;
        if !(r.value - e.value >= grid.refine_tolerance) {
            if e.value < r.value {
                r.value = e.value;
                r.point = e.point;
            }
            break;
        }
        r = refine_minimize(&objective, e.point, e.value, moves, &feasible, grid);
        sweeps += r.sweeps;
    }
    r.sweeps = sweeps;
    r
}

/// Last feasible step between `inside` (feasible) and `outside` (infeasible),
/// by bisection.
fn feasible_edge(mut inside: f64, mut outside: f64, mut feasible: impl FnMut(f64) -> bool) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (inside + outside);
        if feasible(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// Brent's method for a minimum of `f` on `[a, b]`. Falls back to golden
/// section steps where function values are infinite.
pub fn brent_minimize(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, xtol: f64, max_iter: usize) -> (f64, f64) {
    const GOLD: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x = a + GOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        let tol1 = xtol + 1e-12 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let finite = fx.is_finite() && fw.is_finite() && fv.is_finite();
        let mut golden = true;
        if e.abs() > tol1 && finite {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= m { a - x } else { b - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// Result of [`concave_search_rho`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoSearch {
    pub rho_star: f64,
    pub value: f64,
    /// Set when the maximizer sits within `tol` of the upper end of the range.
    pub boundary_flag: bool,
}

/// Golden-section maximization of a concave function on `[lo, hi]`.
///
/// Both endpoints are evaluated as well, so a maximum at `lo` is returned
/// exactly.
pub fn concave_search_rho(mut inner: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> RhoSearch {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut cands: Vec<(f64, f64)> = Vec::new();
    let mut eval = |r: f64, cands: &mut Vec<(f64, f64)>| {
        let v = inner(r);
        cands.push((r, v));
        v
    };
    let f_lo = eval(lo, &mut cands);
    let f_hi = eval(hi, &mut cands);
    let _ = (f_lo, f_hi);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c, &mut cands);
    let mut fd = eval(d, &mut cands);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c, &mut cands);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d, &mut cands);
        }
    }
    // Largest value; ties go to the smaller rho.
    let (rho_star, value) = cands
        .into_iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |best, (r, v)| {
            if v > best.1 || (v == best.1 && r < best.0) || best.0.is_nan() {
                (r, v)
            } else {
                best
            }
        });
    RhoSearch {
        rho_star,
        value,
        boundary_flag: hi - rho_star < tol,
    }
}
