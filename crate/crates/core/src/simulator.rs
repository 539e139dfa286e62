//! Desk-scale simulation of the generalized likelihood decoder over
//! constant-composition codes: posteriors, exact and Monte Carlo error
//! probabilities, the good-code property and half-expurgation.
//!
//! Every random quantity comes from a ChaCha8 stream derived from a master
//! seed and an index (trial, code), so results do not depend on how work is
//! split across threads.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::alpha;
use crate::measures::{information_of, Channel, Distribution};
use crate::metrics::{MetricKind, MetricSpec};

/// Default limit on `|Y|^n` for exhaustive output enumeration.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 1 << 24;

/// Outputs per parallel chunk of an exhaustive enumeration. Chunk sums are
/// added in chunk order, which keeps totals independent of the thread count.
const CHUNK: usize = 4096;

/// `M` codewords of length `n`, all of the same type.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    words: Vec<Vec<usize>>,
    input_size: usize,
    composition: Distribution,
}

impl Codebook {
    /// Validates that every word has the type of the first.
    pub fn new(words: Vec<Vec<usize>>, input_size: usize) -> Result<Self> {
        let first = words
            .first()
            .ok_or_else(|| Error::InvalidParameter("a codebook needs at least one word".into()))?;
        if first.is_empty() {
            return Err(Error::InvalidParameter("codewords must be nonempty".into()));
        }
        let counts = symbol_counts(first, input_size)?;
        for w in &words[1..] {
            if w.len() != first.len() {
                return Err(Error::LengthMismatch {
                    left: first.len(),
                    right: w.len(),
                });
            }
            if symbol_counts(w, input_size)? != counts {
                return Err(Error::InvalidParameter("codewords do not share one composition".into()));
            }
        }
        Ok(Self {
            composition: Distribution::from_counts(&counts)?,
            words,
            input_size,
        })
    }

    pub fn words(&self) -> &[Vec<usize>] {
        &self.words
    }

    pub fn word(&self, m: usize) -> &[usize] {
        &self.words[m]
    }

    /// Number of messages `M`.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Blocklength `n`.
    pub fn blocklength(&self) -> usize {
        self.words[0].len()
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn composition(&self) -> &Distribution {
        &self.composition
    }

    /// `ln(M) / n`.
    pub fn rate(&self) -> f64 {
        (self.len() as f64).ln() / self.blocklength() as f64
    }

    /// The words at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let words = indices
            .iter()
            .map(|&i| {
                self.words
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::InvalidParameter(format!("message {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(words, self.input_size)
    }

    /// One line per word, symbols separated by spaces.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for w in &self.words {
            let line: Vec<String> = w.iter().map(usize::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// Inverse of [`Self::to_lines`]; blank lines are skipped.
    pub fn from_lines(text: &str, input_size: usize) -> Result<Self> {
        let words = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split_whitespace()
                    .map(|t| {
                        t.parse::<usize>()
                            .map_err(|_| Error::InvalidParameter(format!("bad symbol {t:?}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(words, input_size)
    }
}

fn symbol_counts(word: &[usize], size: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; size];
    for &a in word {
        if a >= size {
            return Err(Error::AlphabetMismatch(format!("symbol {a} outside an alphabet of {size}")));
        }
        counts[a] += 1;
    }
    Ok(counts)
}

/// RNG for item `index` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `M = max(2, round(e^{nR}))`.
pub fn code_size(n: usize, rate: f64) -> usize {
    ((n as f64 * rate).exp().round() as usize).max(2)
}

/// `max(0.01, (2/n) ln 2)`.
pub fn default_epsilon(n: usize) -> f64 {
    (2.0 * std::f64::consts::LN_2 / n as f64).max(0.01)
}

/// `M` independent words, each uniform over the type class of `composition`
/// at blocklength `n`.
pub fn sample_code(composition: &Distribution, n: usize, m: usize, rng: &mut impl Rng) -> Result<Codebook> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("blocklength and code size must be >= 1".into()));
    }
    let counts = composition.scaled_counts(n).ok_or(Error::NonIntegralComposition {
        denominator: n,
        nearest: composition.nearest_denominator(n, 64 * n.max(16)),
    })?;
    let base: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(a, &c)| std::iter::repeat_n(a, c))
        .collect();
    let words = (0..m)
        .map(|_| {
            let mut w = base.clone();
            w.shuffle(rng);
            w
        })
        .collect();
    Codebook::new(words, composition.len())
}

/// `n g(P)` for the joint type with the given `inputs x outputs` counts.
fn type_score(metric: &MetricSpec, counts: &[usize], outputs: usize, n: usize) -> f64 {
    match (metric.kind(), metric.scores()) {
        (MetricKind::Constant, _) => 0.0,
        (MetricKind::EmpiricalMutualInformation, _) => {
            let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
            n as f64 * information_of(&probs, counts.len() / outputs, outputs)
        }
        (_, Some(s)) => {
            let mut total = 0.0;
            for (&c, &v) in counts.iter().zip(s.as_slice()) {
                if c > 0 {
                    total += c as f64 * v;
                }
            }
            total
        }
        _ => unreachable!("log-likelihood metrics always carry scores"),
    }
}

fn check_metric(codebook: &Codebook, metric: &MetricSpec, outputs: usize) -> Result<()> {
    if let Some(s) = metric.scores() {
        if s.inputs() != codebook.input_size() || s.outputs() != outputs {
            return Err(Error::AlphabetMismatch(format!(
                "metric is {}x{}, code and channel are {}x{outputs}",
                s.inputs(),
                s.outputs(),
                codebook.input_size()
            )));
        }
    }
    Ok(())
}

fn output_size(metric: &MetricSpec, y: &[usize]) -> usize {
    metric
        .scores()
        .map(|s| s.outputs())
        .unwrap_or_else(|| y.iter().copied().max().map_or(1, |v| v + 1))
}

/// `n g(P_{x_m, y})` for every message.
fn scores_into(codebook: &Codebook, y: &[usize], metric: &MetricSpec, outputs: usize, out: &mut Vec<f64>) {
    let nx = codebook.input_size();
    let n = y.len();
    let mut counts = vec![0usize; nx * outputs];
    out.clear();
    for w in codebook.words() {
        counts.iter_mut().for_each(|c| *c = 0);
        for (&a, &b) in w.iter().zip(y) {
            counts[a * outputs + b] += 1;
        }
        out.push(type_score(metric, &counts, outputs, n));
    }
}

/// Decoder posterior for one output sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub probs: Vec<f64>,
    /// Every score was `-inf`; the posterior was set to uniform.
    pub degenerate: bool,
}

fn normalize_scores(scores: &[f64]) -> Posterior {
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        let p = 1.0 / scores.len() as f64;
        return Posterior {
            probs: vec![p; scores.len()],
            degenerate: true,
        };
    }
    let mut probs: Vec<f64> = scores.iter().map(|&s| (s - top).exp()).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Posterior {
        probs,
        degenerate: false,
    }
}

fn check_output(codebook: &Codebook, y: &[usize]) -> Result<()> {
    if y.len() != codebook.blocklength() {
        return Err(Error::LengthMismatch {
            left: codebook.blocklength(),
            right: y.len(),
        });
    }
    Ok(())
}

/// `P(m | y) ~ exp{n g(P_{x_m, y})}`.
pub fn gld_posterior(codebook: &Codebook, y: &[usize], metric: &MetricSpec) -> Result<Posterior> {
    check_output(codebook, y)?;
    let outputs = output_size(metric, y);
    if let Some(&b) = y.iter().find(|&&b| b >= outputs) {
        return Err(Error::AlphabetMismatch(format!("output symbol {b} outside the metric's alphabet")));
    }
    check_metric(codebook, metric, outputs)?;
    let mut scores = Vec::with_capacity(codebook.len());
    scores_into(codebook, y, metric, outputs, &mut scores);
    Ok(normalize_scores(&scores))
}

fn sample_index(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left `acc` just below 1: take the last index with mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// One draw from [`gld_posterior`].
pub fn gld_decode(codebook: &Codebook, y: &[usize], metric: &MetricSpec, rng: &mut impl Rng) -> Result<usize> {
    let post = gld_posterior(codebook, y, metric)?;
    Ok(sample_index(&post.probs, rng))
}

/// Channel output for input word `x`.
pub fn transmit(channel: &Channel, x: &[usize], rng: &mut impl Rng) -> Vec<usize> {
    x.iter()
        .map(|&a| sample_index(channel.kernel().row(a), rng))
        .collect()
}

fn enumeration_size(outputs: usize, n: usize) -> u128 {
    let mut total: u128 = 1;
    for _ in 0..n {
        total = total.saturating_mul(outputs as u128);
    }
    total
}

/// The `index`-th output sequence in lexicographic order.
fn decode_output(mut index: usize, outputs: usize, y: &mut [usize]) {
    for slot in y.iter_mut().rev() {
        *slot = index % outputs;
        index /= outputs;
    }
}

fn check_channel(codebook: &Codebook, channel: &Channel, metric: &MetricSpec) -> Result<()> {
    if channel.input_size() != codebook.input_size() {
        return Err(Error::AlphabetMismatch(format!(
            "code alphabet {} vs channel inputs {}",
            codebook.input_size(),
            channel.input_size()
        )));
    }
    check_metric(codebook, metric, channel.output_size())
}

/// `P_{e|m}` for every message by enumerating all of `Y^n`.
pub fn exact_error_probabilities(
    codebook: &Codebook,
    channel: &Channel,
    metric: &MetricSpec,
    budget: u128,
) -> Result<Vec<f64>> {
    check_channel(codebook, channel, metric)?;
    let n = codebook.blocklength();
    let ny = channel.output_size();
    let total = enumeration_size(ny, n);
    if total > budget {
        return Err(Error::BudgetExceeded {
            required: total,
            budget,
        });
    }
    let total = total as usize;
    let m_count = codebook.len();
    let chunks = total.div_ceil(CHUNK);
    let partial: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut acc = vec![0.0; m_count];
            let mut y = vec![0usize; n];
            let mut scores = Vec::with_capacity(m_count);
            for index in chunk * CHUNK..((chunk + 1) * CHUNK).min(total) {
                decode_output(index, ny, &mut y);
                scores_into(codebook, &y, metric, ny, &mut scores);
                let post = normalize_scores(&scores);
                for (m, a) in acc.iter_mut().enumerate() {
                    let w = channel.block_prob(codebook.word(m), &y);
                    if w > 0.0 {
                        *a += w * (1.0 - post.probs[m]);
                    }
                }
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; m_count];
    for acc in partial {
        for (o, a) in out.iter_mut().zip(acc) {
            *o += a;
        }
    }
    Ok(out.into_iter().map(|p| p.clamp(0.0, 1.0)).collect())
}

/// `P_{e|m} = sum_y W(y|x_m) (1 - P(m|y))`, by exhaustive enumeration within
/// [`DEFAULT_ENUMERATION_BUDGET`].
pub fn exact_error_probability(codebook: &Codebook, m: usize, channel: &Channel, metric: &MetricSpec) -> Result<f64> {
    if m >= codebook.len() {
        return Err(Error::InvalidParameter(format!("message {m} out of range")));
    }
    Ok(exact_error_probabilities(codebook, channel, metric, DEFAULT_ENUMERATION_BUDGET)?[m])
}

/// Monte Carlo estimate of an error probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    /// `sqrt(p (1 - p) / trials)`.
    pub stderr: f64,
    pub trials: u64,
    pub errors: u64,
}

/// Sends `x_m` through the channel and decodes, `trials` times. Trial `t`
/// uses [`stream_rng`]`(seed, t)`.
pub fn monte_carlo_error(
    codebook: &Codebook,
    m: usize,
    channel: &Channel,
    metric: &MetricSpec,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_channel(codebook, channel, metric)?;
    if m >= codebook.len() {
        return Err(Error::InvalidParameter(format!("message {m} out of range")));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let ny = channel.output_size();
    let x = codebook.word(m);
    let errors: u64 = (0..trials)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(codebook.len()),
            |scores, t| {
                let mut rng = stream_rng(seed, t);
                let y = transmit(channel, x, &mut rng);
                scores_into(codebook, &y, metric, ny, scores);
                let post = normalize_scores(scores);
                u64::from(sample_index(&post.probs, &mut rng) != m)
            },
        )
        .sum();
    let p = errors as f64 / trials as f64;
    Ok(McEstimate {
        estimate: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
        errors,
    })
}

/// Outcome of [`check_good_code`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodCodeReport {
    pub holds: bool,
    /// `min_{m,y} (1/n) ln sum_{m' != m} e^{n g(P_{x_m', y})} - alpha(R - eps, P_y)`.
    pub worst_margin: f64,
    /// `(m, y)` attaining the worst margin.
    pub witness: Option<(usize, Vec<usize>)>,
    /// False when outputs were sampled because `|Y|^n` exceeded the budget.
    pub exhaustive: bool,
    pub outputs_checked: u64,
}

/// Limits for [`check_good_code`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodCodeOptions {
    pub budget: u128,
    /// Outputs drawn uniformly from `Y^n` when over budget.
    pub samples: u64,
    pub seed: u64,
}

impl Default for GoodCodeOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_ENUMERATION_BUDGET,
            samples: 1 << 16,
            seed: 0,
        }
    }
}

/// Checks `sum_{m' != m} exp{n g(P_{x_m', y})} >= exp{n alpha(R - eps, P_y)}`
/// for every message `m` and output `y`.
pub fn check_good_code(
    codebook: &Codebook,
    metric: &MetricSpec,
    output_size: usize,
    rate: f64,
    epsilon: f64,
    options: &GoodCodeOptions,
) -> Result<GoodCodeReport> {
    if codebook.len() < 2 {
        return Err(Error::InvalidParameter("the good-code test needs M >= 2".into()));
    }
    if !(epsilon > 0.0) || !rate.is_finite() {
        return Err(Error::InvalidParameter("epsilon must be > 0 and the rate finite".into()));
    }
    check_metric(codebook, metric, output_size)?;
    let n = codebook.blocklength();
    let total = enumeration_size(output_size, n);
    let exhaustive = total <= options.budget;
    let count = if exhaustive { total as u64 } else { options.samples };
    let output_at = |index: u64, y: &mut Vec<usize>| {
        if exhaustive {
            decode_output(index as usize, output_size, y);
        } else {
            let mut rng = stream_rng(options.seed, index);
            y.iter_mut().for_each(|b| *b = rng.gen_range(0..output_size));
        }
    };
    // alpha depends on y only through its type.
    let mut types: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut y = vec![0usize; n];
    for index in 0..count {
        output_at(index, &mut y);
        let key = symbol_counts(&y, output_size)?;
        if let std::collections::hash_map::Entry::Vacant(slot) = types.entry(key) {
            let q = Distribution::from_counts(slot.key())?;
            slot.insert(alpha(rate - epsilon, &q, metric)?);
        }
    }
    let chunks = (count as usize).div_ceil(CHUNK);
    let worst = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut y = vec![0usize; n];
            let mut scores = Vec::with_capacity(codebook.len());
            let mut best: Option<(f64, usize, u64)> = None;
            let end = ((chunk + 1) * CHUNK).min(count as usize);
            for index in (chunk * CHUNK) as u64..end as u64 {
                output_at(index, &mut y);
                let a = types[&symbol_counts(&y, output_size).expect("validated above")];
                scores_into(codebook, &y, metric, output_size, &mut scores);
                for m in 0..codebook.len() {
                    let margin = competitor_margin(&scores, m, n, a);
                    if best.is_none_or(|b| margin < b.0) {
                        best = Some((margin, m, index));
                    }
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<(f64, usize, u64)>, b| match acc {
            Some(a) if a.0 <= b.0 => Some(a),
            _ => Some(b),
        });
    let (worst_margin, m, index) = worst.expect("at least one output is checked");
    output_at(index, &mut y);
    Ok(GoodCodeReport {
        holds: worst_margin >= 0.0,
        worst_margin,
        witness: Some((m, y)),
        exhaustive,
        outputs_checked: count,
    })
}

/// `(1/n) ln sum_{m' != m} e^{s_m'} - a`, with `rhs = 0` (`a = -inf`)
/// always satisfied.
fn competitor_margin(scores: &[f64], m: usize, n: usize, a: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let top = scores
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != m)
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = scores
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != m)
        .map(|(_, &s)| (s - top).exp())
        .sum();
    (top + sum.ln()) / n as f64 - a
}

/// Messages kept by [`half_expurgate`] and the code they form.
#[derive(Clone, Debug, PartialEq)]
pub struct Expurgation {
    /// Kept message indices, ascending.
    pub kept: Vec<usize>,
    pub codebook: Codebook,
}

/// Indices of the `ceil(M/2)` smallest error probabilities, ties to the
/// smaller index, returned in ascending order.
pub fn good_half(error_probs: &[f64]) -> Result<Vec<usize>> {
    if error_probs.len() < 2 {
        return Err(Error::InvalidParameter("half-expurgation needs M >= 2".into()));
    }
    let mut order: Vec<usize> = (0..error_probs.len()).collect();
    order.sort_by(|&a, &b| error_probs[a].total_cmp(&error_probs[b]).then(a.cmp(&b)));
    let mut kept = order[..error_probs.len().div_ceil(2)].to_vec();
    kept.sort_unstable();
    Ok(kept)
}

/// Keeps the better half of the code by per-message error probability.
pub fn half_expurgate(codebook: &Codebook, error_probs: &[f64]) -> Result<Expurgation> {
    if error_probs.len() != codebook.len() {
        return Err(Error::LengthMismatch {
            left: codebook.len(),
            right: error_probs.len(),
        });
    }
    let kept = good_half(error_probs)?;
    Ok(Expurgation {
        codebook: codebook.subset(&kept)?,
        kept,
    })
}

/// One instance of `(2/M) sum_m P_{e|m}^{1/rho} >= [max_{m kept} P_{e|m}]^{1/rho}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovCheck {
    pub rho: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// The inequality from the code's error probabilities and those of the kept
/// messages.
pub fn markov_bound(error_probs: &[f64], kept_probs: &[f64], rho: f64) -> Result<MarkovCheck> {
    if !(rho >= 1.0) {
        return Err(Error::InvalidParameter(format!("rho must be >= 1, got {rho}")));
    }
    if error_probs.is_empty() || kept_probs.is_empty() {
        return Err(Error::InvalidParameter("empty error profile".into()));
    }
    let m = error_probs.len() as f64;
    let lhs = 2.0 / m * error_probs.iter().map(|p| p.powf(1.0 / rho)).sum::<f64>();
    let rhs = kept_probs.iter().copied().fold(0.0, f64::max).powf(1.0 / rho);
    Ok(MarkovCheck {
        rho,
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-12,
    })
}

/// [`markov_bound`] with exact error probabilities, the right side taken over
/// the good half chosen by [`half_expurgate`].
pub fn markov_bound_check(codebook: &Codebook, channel: &Channel, metric: &MetricSpec, rho: f64) -> Result<MarkovCheck> {
    let probs = exact_error_probabilities(codebook, channel, metric, DEFAULT_ENUMERATION_BUDGET)?;
    markov_bound_from_probs(&probs, rho)
}

/// [`markov_bound`] for a known error profile.
pub fn markov_bound_from_probs(error_probs: &[f64], rho: f64) -> Result<MarkovCheck> {
    let kept: Vec<f64> = good_half(error_probs)?.into_iter().map(|i| error_probs[i]).collect();
    markov_bound(error_probs, &kept, rho)
}

/// Best expurgated code found at one blocklength.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPoint {
    pub n: usize,
    /// `M = max(2, round(e^{nR}))`.
    pub code_size: usize,
    /// `ln(M) / n`.
    pub effective_rate: f64,
    /// Smallest `max_{m kept} P_{e|m}` over the sampled codes.
    pub best_max_error: f64,
    /// `-ln(best_max_error) / n`; `+inf` for a zero-error code.
    pub exponent: f64,
}

/// For each `n`: samples `codes_per_n` codes (code `j` from
/// [`stream_rng`]`(seed, (n << 32) | j)`), computes exact per-message error
/// probabilities, keeps the good half and records the best maximum over the
/// kept messages.
pub fn empirical_exponent(
    composition: &Distribution,
    rate: f64,
    channel: &Channel,
    metric: &MetricSpec,
    blocklengths: &[usize],
    codes_per_n: usize,
    seed: u64,
) -> Result<Vec<EmpiricalPoint>> {
    if codes_per_n == 0 {
        return Err(Error::InvalidParameter("codes_per_n must be >= 1".into()));
    }
    blocklengths
        .iter()
        .map(|&n| {
            let size = code_size(n, rate);
            let maxima = (0..codes_per_n)
                .into_par_iter()
                .map(|j| {
                    let mut rng = stream_rng(seed, ((n as u64) << 32) | j as u64);
                    let code = sample_code(composition, n, size, &mut rng)?;
                    let probs = exact_error_probabilities(&code, channel, metric, DEFAULT_ENUMERATION_BUDGET)?;
                    let kept = good_half(&probs)?;
                    Ok(kept.into_iter().map(|i| probs[i]).fold(0.0, f64::max))
                })
                .collect::<Result<Vec<f64>>>()?;
            let best = maxima.into_iter().fold(f64::INFINITY, f64::min);
            Ok(EmpiricalPoint {
                n,
                code_size: size,
                effective_rate: (size as f64).ln() / n as f64,
                best_max_error: best,
                exponent: if best > 0.0 { -best.ln() / n as f64 } else { f64::INFINITY },
            })
        })
        .collect()
}
