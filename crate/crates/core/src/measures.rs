//! Finite-alphabet probability objects and information measures.
//!
//! All quantities are in nats. Divergences live on the extended reals:
//! `0 ln 0 = 0` and `p ln(p/0) = +inf` for `p > 0`, represented with
//! `f64::INFINITY`.
//!
//! Triple joints over `(X, X', Y)` are stored as a [`JointDistribution`]
//! whose rows index the product alphabet `X x X'` (row `x * |X'| + x'`) and
//! whose columns index `Y`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for simplex validation of distributions and kernels.
pub const PROB_TOLERANCE: f64 = 1e-12;

/// Row-sum tolerance accepted for channel matrices read from files.
pub const CHANNEL_ROW_TOLERANCE: f64 = 1e-9;

/// `p ln p` with `0 ln 0 = 0`.
#[inline]
pub fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// `p ln(p / q)` with `0 ln(0/q) = 0` and `p ln(p/0) = +inf`.
#[inline]
pub fn plog_ratio(p: f64, q: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else if q <= 0.0 {
        f64::INFINITY
    } else {
        p * (p / q).ln()
    }
}

fn normalize_simplex(probs: &mut [f64], tol: f64, what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what} is empty")));
    }
    for p in probs.iter_mut() {
        if !p.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "{what} has a non-finite entry"
            )));
        }
        if *p < 0.0 {
            if *p >= -tol {
                *p = 0.0;
            } else {
                return Err(Error::InvalidDistribution(format!(
                    "{what} has a negative entry {p}"
                )));
            }
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::InvalidDistribution(format!(
            "{what} sums to {sum}, not 1"
        )));
    }
    if sum != 1.0 {
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(())
}

/// A finite alphabet `{0, .., size - 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet(usize);

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidParameter("alphabet size must be >= 1".into()));
        }
        Ok(Self(size))
    }

    pub fn size(self) -> usize {
        self.0
    }
}

/// A probability vector over a finite alphabet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.probs
    }
}

impl Distribution {
    /// Validates and normalizes away residue up to [`PROB_TOLERANCE`].
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        normalize_simplex(&mut probs, PROB_TOLERANCE, "distribution")?;
        Ok(Self { probs })
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        Self { probs }
    }

    /// # Panics
    /// If `size == 0`.
    pub fn uniform(size: usize) -> Self {
        assert!(size > 0, "alphabet size must be >= 1");
        Self {
            probs: vec![1.0 / size as f64; size],
        }
    }

    /// # Panics
    /// If `symbol >= size`.
    pub fn point_mass(size: usize, symbol: usize) -> Self {
        assert!(symbol < size, "symbol out of range");
        let mut probs = vec![0.0; size];
        probs[symbol] = 1.0;
        Self { probs }
    }

    /// The type `counts / sum(counts)`.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("all counts are zero".into()));
        }
        Ok(Self {
            probs: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet(self.probs.len())
    }

    pub fn get(&self, symbol: usize) -> f64 {
        self.probs[symbol]
    }

    /// `denominator * p` as integers, or `None` when some entry is not within
    /// `1e-9` of an integer.
    pub fn scaled_counts(&self, denominator: usize) -> Option<Vec<usize>> {
        scaled_counts(&self.probs, denominator)
    }

    /// Smallest denominator at most `limit` for which [`Self::scaled_counts`]
    /// succeeds, searching outward from `near`.
    pub fn nearest_denominator(&self, near: usize, limit: usize) -> Option<usize> {
        (0..=limit).find_map(|offset| {
            let below = near.checked_sub(offset).filter(|&d| d >= 1);
            let above = Some(near + offset).filter(|&d| d <= limit);
            [below, above]
                .into_iter()
                .flatten()
                .find(|&d| self.scaled_counts(d).is_some())
        })
    }

    /// Product joint `P(a) Q(b)`.
    pub fn product(&self, other: &Distribution) -> JointDistribution {
        let mut probs = Vec::with_capacity(self.len() * other.len());
        for &p in &self.probs {
            probs.extend(other.probs.iter().map(|&q| p * q));
        }
        JointDistribution {
            rows: self.len(),
            cols: other.len(),
            probs,
        }
    }
}

pub(crate) fn scaled_counts(probs: &[f64], denominator: usize) -> Option<Vec<usize>> {
    probs
        .iter()
        .map(|&p| {
            let scaled = p * denominator as f64;
            let rounded = scaled.round();
            ((scaled - rounded).abs() <= 1e-9).then_some(rounded as usize)
        })
        .collect()
}

/// A probability matrix over `rows x cols`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(rows: usize, cols: usize, mut probs: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || probs.len() != rows * cols {
            return Err(Error::InvalidDistribution(format!(
                "joint of shape {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                probs.len()
            )));
        }
        normalize_simplex(&mut probs, PROB_TOLERANCE, "joint distribution")?;
        Ok(Self { rows, cols, probs })
    }

    pub fn from_matrix(matrix: &[Vec<f64>]) -> Result<Self> {
        let rows = matrix.len();
        let cols = matrix.first().map_or(0, Vec::len);
        if matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidDistribution("ragged matrix".into()));
        }
        Self::new(rows, cols, matrix.concat())
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), rows * cols);
        Self { rows, cols, probs }
    }

    pub fn from_counts(rows: usize, cols: usize, counts: &[usize]) -> Result<Self> {
        if counts.len() != rows * cols {
            return Err(Error::InvalidDistribution("count table has wrong size".into()));
        }
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("all counts are zero".into()));
        }
        Ok(Self {
            rows,
            cols,
            probs: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.probs[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.probs[row * self.cols..(row + 1) * self.cols]
    }

    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        self.probs.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn row_marginal(&self) -> Distribution {
        Distribution::from_raw(self.probs.chunks(self.cols).map(|r| r.iter().sum()).collect())
    }

    pub fn col_marginal(&self) -> Distribution {
        let mut out = vec![0.0; self.cols];
        for r in self.probs.chunks(self.cols) {
            out.iter_mut().zip(r).for_each(|(o, p)| *o += p);
        }
        Distribution::from_raw(out)
    }

    pub fn transpose(&self) -> JointDistribution {
        let mut probs = Vec::with_capacity(self.probs.len());
        for c in 0..self.cols {
            probs.extend((0..self.rows).map(|r| self.get(r, c)));
        }
        JointDistribution {
            rows: self.cols,
            cols: self.rows,
            probs,
        }
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mixture(&self, other: &JointDistribution, lambda: f64) -> Result<JointDistribution> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::AlphabetMismatch("mixture of differently shaped joints".into()));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!("mixture weight {lambda}")));
        }
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Ok(JointDistribution {
            rows: self.rows,
            cols: self.cols,
            probs,
        })
    }

    /// Conditional of columns given rows. Rows without mass get a uniform row.
    pub fn conditional_rows(&self) -> ConditionalDistribution {
        let mut probs = Vec::with_capacity(self.probs.len());
        for r in self.probs.chunks(self.cols) {
            let mass: f64 = r.iter().sum();
            if mass > 0.0 {
                probs.extend(r.iter().map(|p| p / mass));
            } else {
                probs.extend(std::iter::repeat_n(1.0 / self.cols as f64, self.cols));
            }
        }
        ConditionalDistribution {
            inputs: self.rows,
            outputs: self.cols,
            probs,
        }
    }

    pub fn l1_distance(&self, other: &JointDistribution) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum()
    }
}

impl Serialize for JointDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        self.to_matrix().serialize(s)
    }
}

impl<'de> Deserialize<'de> for JointDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let m = Vec::<Vec<f64>>::deserialize(d)?;
        Self::from_matrix(&m).map_err(serde::de::Error::custom)
    }
}

/// A stochastic kernel: one distribution over `outputs` per input symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalDistribution {
    inputs: usize,
    outputs: usize,
    probs: Vec<f64>,
}

impl ConditionalDistribution {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        Self::with_tolerance(rows, PROB_TOLERANCE)
    }

    pub fn with_tolerance(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let inputs = rows.len();
        let outputs = rows.first().map_or(0, Vec::len);
        if inputs == 0 || outputs == 0 {
            return Err(Error::InvalidDistribution("empty kernel".into()));
        }
        if rows.iter().any(|r| r.len() != outputs) {
            return Err(Error::InvalidDistribution("ragged kernel".into()));
        }
        let mut probs = Vec::with_capacity(inputs * outputs);
        for (i, r) in rows.iter().enumerate() {
            let mut r = r.clone();
            normalize_simplex(&mut r, tol, &format!("kernel row {i}"))?;
            probs.extend(r);
        }
        Ok(Self {
            inputs,
            outputs,
            probs,
        })
    }

    pub fn identity(size: usize) -> Self {
        let mut probs = vec![0.0; size * size];
        (0..size).for_each(|i| probs[i * size + i] = 1.0);
        Self {
            inputs: size,
            outputs: size,
            probs,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn get(&self, input: usize, output: usize) -> f64 {
        self.probs[input * self.outputs + output]
    }

    pub fn row(&self, input: usize) -> &[f64] {
        &self.probs[input * self.outputs..(input + 1) * self.outputs]
    }

    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        self.probs.chunks(self.outputs).map(<[f64]>::to_vec).collect()
    }

    /// Joint `P(a) K(b|a)`.
    pub fn joint_with(&self, input: &Distribution) -> Result<JointDistribution> {
        if input.len() != self.inputs {
            return Err(Error::AlphabetMismatch(format!(
                "kernel has {} inputs, distribution has {} symbols",
                self.inputs,
                input.len()
            )));
        }
        let probs = self
            .probs
            .chunks(self.outputs)
            .zip(input.probs())
            .flat_map(|(row, &p)| row.iter().map(move |k| p * k))
            .collect();
        Ok(JointDistribution::from_raw(self.inputs, self.outputs, probs))
    }
}

/// A discrete memoryless channel `W(y|x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    cond: ConditionalDistribution,
}

/// On-disk channel format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub input_size: usize,
    pub output_size: usize,
    pub matrix: Vec<Vec<f64>>,
}

impl Channel {
    /// Rows must sum to one within [`CHANNEL_ROW_TOLERANCE`].
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if r.iter().any(|w| !w.is_finite()) {
                return Err(Error::InvalidChannel(format!("row {i} has a non-finite entry")));
            }
            if r.iter().any(|&w| w < 0.0) {
                return Err(Error::InvalidChannel(format!("row {i} has a negative entry")));
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > CHANNEL_ROW_TOLERANCE {
                return Err(Error::InvalidChannel(format!("row {i} sums to {sum}")));
            }
        }
        let cond = ConditionalDistribution::with_tolerance(rows, CHANNEL_ROW_TOLERANCE)
            .map_err(|e| Error::InvalidChannel(e.to_string()))?;
        Ok(Self { cond })
    }

    pub fn from_file(file: &ChannelFile) -> Result<Self> {
        if file.matrix.len() != file.input_size
            || file.matrix.iter().any(|r| r.len() != file.output_size)
        {
            return Err(Error::InvalidChannel(format!(
                "matrix shape does not match {}x{}",
                file.input_size, file.output_size
            )));
        }
        Self::new(&file.matrix)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ChannelFile = serde_json::from_str(text)?;
        Self::from_file(&file)
    }

    pub fn to_file(&self) -> ChannelFile {
        ChannelFile {
            input_size: self.input_size(),
            output_size: self.output_size(),
            matrix: self.cond.to_matrix(),
        }
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Self::new(&[vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Identity channel on `size` symbols.
    pub fn noiseless(size: usize) -> Self {
        Self {
            cond: ConditionalDistribution::identity(size),
        }
    }

    pub fn input_size(&self) -> usize {
        self.cond.inputs()
    }

    pub fn output_size(&self) -> usize {
        self.cond.outputs()
    }

    /// `W(y|x)`.
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.cond.get(x, y)
    }

    pub fn kernel(&self) -> &ConditionalDistribution {
        &self.cond
    }

    /// Product-channel probability `W(y|x)` of a block.
    pub fn block_prob(&self, x: &[usize], y: &[usize]) -> f64 {
        x.iter().zip(y).map(|(&a, &b)| self.prob(a, b)).product()
    }
}

pub fn entropy(p: &Distribution) -> f64 {
    -p.probs().iter().map(|&q| plogp(q)).sum::<f64>()
}

pub fn joint_entropy(j: &JointDistribution) -> f64 {
    -j.probs().iter().map(|&q| plogp(q)).sum::<f64>()
}

/// `I(A;B)` of a pairwise joint, by direct summation. Clamped at zero.
pub fn mutual_information(j: &JointDistribution) -> f64 {
    information_of(j.probs(), j.rows(), j.cols())
}

/// [`mutual_information`] of a row-major `rows x cols` slice.
pub(crate) fn information_of(probs: &[f64], rows: usize, cols: usize) -> f64 {
    let mut pr = [0.0f64; 16];
    let mut pc = [0.0f64; 16];
    let (mut pr_heap, mut pc_heap);
    let (pr, pc): (&mut [f64], &mut [f64]) = if rows <= 16 && cols <= 16 {
        (&mut pr[..rows], &mut pc[..cols])
    } else {
        pr_heap = vec![0.0; rows];
        pc_heap = vec![0.0; cols];
        (&mut pr_heap[..], &mut pc_heap[..])
    };
    for r in 0..rows {
        for c in 0..cols {
            let p = probs[r * cols + c];
            pr[r] += p;
            pc[c] += p;
        }
    }
    let mut total = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            total += plog_ratio(probs[r * cols + c], pr[r] * pc[c]);
        }
    }
    total.max(0.0)
}

/// `D(Q_{Y|X} || W | Q_X)`, `+inf` when `Q` charges a zero of `W` at an input
/// with positive probability.
pub fn conditional_divergence(
    q: &ConditionalDistribution,
    w: &Channel,
    qx: &Distribution,
) -> Result<f64> {
    if q.inputs() != w.input_size() || q.outputs() != w.output_size() || qx.len() != q.inputs()
    {
        return Err(Error::AlphabetMismatch(
            "kernel, channel and input distribution disagree".into(),
        ));
    }
    let mut total = 0.0;
    for x in 0..q.inputs() {
        let px = qx.get(x);
        if px <= 0.0 {
            continue;
        }
        let d: f64 = (0..q.outputs())
            .map(|y| plog_ratio(q.get(x, y), w.prob(x, y)))
            .sum();
        total += px * d;
    }
    Ok(total.max(0.0))
}

/// Marginals of a triple joint stored over `(X x X') x Y`.
#[derive(Clone, Debug)]
pub struct TripleMarginals {
    /// `Q_{XX'}`
    pub pair: JointDistribution,
    /// `Q_{XY}`
    pub first_output: JointDistribution,
    /// `Q_{X'Y}`
    pub second_output: JointDistribution,
    /// `Q_Y`
    pub output: Distribution,
}

fn check_triple(j: &JointDistribution, first_size: usize) -> Result<usize> {
    if first_size == 0 || !j.rows().is_multiple_of(first_size) {
        return Err(Error::AlphabetMismatch(format!(
            "{} product rows are not a multiple of |X| = {first_size}",
            j.rows()
        )));
    }
    Ok(j.rows() / first_size)
}

pub fn triple_marginals(j: &JointDistribution, first_size: usize) -> Result<TripleMarginals> {
    let second_size = check_triple(j, first_size)?;
    let ny = j.cols();
    let mut pair = vec![0.0; first_size * second_size];
    let mut first = vec![0.0; first_size * ny];
    let mut second = vec![0.0; second_size * ny];
    for a in 0..first_size {
        for b in 0..second_size {
            for (y, &p) in j.row(a * second_size + b).iter().enumerate() {
                pair[a * second_size + b] += p;
                first[a * ny + y] += p;
                second[b * ny + y] += p;
            }
        }
    }
    Ok(TripleMarginals {
        pair: JointDistribution::from_raw(first_size, second_size, pair),
        first_output: JointDistribution::from_raw(first_size, ny, first),
        second_output: JointDistribution::from_raw(second_size, ny, second),
        output: j.col_marginal(),
    })
}

/// `I(X';Y|X)` for a triple joint over `(X x X') x Y`, by direct summation of
/// `Q(x,x',y) ln[Q(x,x',y) Q(x) / (Q(x,x') Q(x,y))]`.
pub fn conditional_mutual_information(j: &JointDistribution, first_size: usize) -> Result<f64> {
    let second_size = check_triple(j, first_size)?;
    let m = triple_marginals(j, first_size)?;
    let qx = m.pair.row_marginal();
    let mut total = 0.0;
    for a in 0..first_size {
        for b in 0..second_size {
            for y in 0..j.cols() {
                let p = j.get(a * second_size + b, y);
                if p > 0.0 {
                    total += p * (p * qx.get(a) / (m.pair.get(a, b) * m.first_output.get(a, y))).ln();
                }
            }
        }
    }
    Ok(total.max(0.0))
}

/// Joint type of two equal-length sequences.
pub fn empirical_joint(
    x: &[usize],
    y: &[usize],
    x_size: usize,
    y_size: usize,
) -> Result<JointDistribution> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::InvalidParameter("empty sequences".into()));
    }
    let counts = joint_counts(x, y, x_size, y_size)?;
    JointDistribution::from_counts(x_size, y_size, &counts)
}

pub(crate) fn joint_counts(
    x: &[usize],
    y: &[usize],
    x_size: usize,
    y_size: usize,
) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; x_size * y_size];
    for (&a, &b) in x.iter().zip(y) {
        if a >= x_size || b >= y_size {
            return Err(Error::AlphabetMismatch(format!(
                "symbol pair ({a}, {b}) outside {x_size}x{y_size}"
            )));
        }
        counts[a * y_size + b] += 1;
    }
    Ok(counts)
}

/// All ways to write `total` as an ordered sum of `parts` nonnegative
/// integers, in lexicographic order.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(remaining: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in 0..=remaining {
            prefix.push(c);
            rec(remaining - c, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

/// Every type with denominator `n` over `alphabet`.
pub fn enumerate_types(alphabet: Alphabet, n: usize) -> Result<Vec<Distribution>> {
    if n == 0 {
        return Err(Error::InvalidParameter("blocklength must be >= 1".into()));
    }
    Ok(compositions(n, alphabet.size())
        .iter()
        .map(|c| Distribution::from_counts(c).expect("compositions of n >= 1 are nonzero"))
        .collect())
}

/// Number of words `m' != m` whose conditional type given `words[m]` is
/// exactly `kernel` (rows for symbols absent from `words[m]` are ignored).
pub fn conditional_type_count(
    words: &[Vec<usize>],
    m: usize,
    kernel: &ConditionalDistribution,
) -> Result<usize> {
    let base = words
        .get(m)
        .ok_or_else(|| Error::InvalidParameter(format!("message {m} out of range")))?;
    let (nx, nx2) = (kernel.inputs(), kernel.outputs());
    let mut row_counts = vec![0usize; nx];
    for &a in base {
        if a >= nx {
            return Err(Error::AlphabetMismatch(format!("symbol {a} outside kernel inputs")));
        }
        row_counts[a] += 1;
    }
    let mut target = Vec::with_capacity(nx * nx2);
    for (a, &n_a) in row_counts.iter().enumerate() {
        for b in 0..nx2 {
            let scaled = kernel.get(a, b) * n_a as f64;
            let rounded = scaled.round();
            if (scaled - rounded).abs() > 1e-9 {
                return Ok(0);
            }
            target.push(rounded as usize);
        }
    }
    let mut count = 0;
    for (idx, w) in words.iter().enumerate() {
        if idx == m {
            continue;
        }
        if joint_counts(base, w, nx, nx2)? == target {
            count += 1;
        }
    }
    Ok(count)
}
