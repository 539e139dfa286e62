//! Expurgated exponent objectives of the generalized likelihood decoder.
//!
//! Notation follows the usual method-of-types conventions:
//!
//! * `alpha(R, Q_Y) = sup { g(Q_XY) - I(X;Y) : Q_{X|Y}, I(X;Y) <= R } + R`
//! * `Gamma(Q_XX', R) = inf over Q_{Y|XX'} of
//!   D(Q_{Y|X} || W | Q_X) + I(X';Y|X) + [max{g(Q_XY), alpha(R, Q_Y)} - g(Q_X'Y)]_+`
//! * expurgated form: `inf { Gamma + I(X;X') : Q_X' = Q_X, I(X;X') <= R } - R`
//! * sup-min form: `sup_{rho >= 1} min_{Q_X'|X} { Gamma + rho (I(X;X') - R) }`
//!
//! The two forms coincide for affine `g`; otherwise only the sup-min form is
//! a valid exponent and [`exponent_form`] selects it.
//!
//! Both infima are computed over a grid of joint types with denominator `k`
//! (the pair `Q_XX'` as an integer table with margins `k Q_X`, the triple
//! `Q_XX'Y` by splitting each cell of that table over the outputs), then
//! refined by coordinate descent on the triple joint.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{compositions, information_of, plog_ratio, Channel, Distribution, JointDistribution};
use crate::metrics::{MetricKind, MetricSpec, ScoreTable};
use crate::optimizer::{
    better, concave_search_rho, contingency_tables, coupling_moves, grid_maximize, grid_minimize,
    composite_moves, refine_escaping, FeasibleSet, Refined, GridSpec, RhoSearch, INFORMATION_SLACK,
};

/// Default upper end of the `rho` search.
pub const DEFAULT_RHO_MAX: f64 = 64.0;

/// Argument tolerance of the `rho` search.
pub const RHO_TOLERANCE: f64 = 1e-5;

/// Best grid couplings refined by the expurgated search.
const STARTS: usize = 3;

/// `[a - b]_+` on the extended reals: `a - (-inf) = +inf` and `[-inf - b]_+ = 0`.
#[inline]
pub fn clipped_gap(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        0.0
    } else if b == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        (a - b).max(0.0)
    }
}

/// Inputs shared by every exponent computation.
#[derive(Clone, Debug)]
pub struct ExponentQuery {
    /// Coding rate `R` in nats per channel use.
    pub rate: f64,
    /// Common composition `Q_X` of the codewords.
    pub composition: Distribution,
    pub channel: Channel,
    pub metric: MetricSpec,
    /// Slack in `alpha(R - epsilon, .)`; zero for the exponent itself.
    pub epsilon: f64,
    /// Upper end of the `rho` search.
    pub rho_max: f64,
}

impl ExponentQuery {
    pub fn new(rate: f64, composition: Distribution, channel: Channel, metric: MetricSpec) -> Result<Self> {
        let q = Self {
            rate,
            composition,
            channel,
            metric,
            epsilon: 0.0,
            rho_max: DEFAULT_RHO_MAX,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn with_rate(&self, rate: f64) -> Result<Self> {
        let q = Self { rate, ..self.clone() };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("rate must be >= 0, got {}", self.rate)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon <= self.rate) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in [0, R], got {}",
                self.epsilon
            )));
        }
        if !(self.rho_max >= 1.0 && self.rho_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho_max must be >= 1, got {}", self.rho_max)));
        }
        if self.composition.len() != self.channel.input_size() {
            return Err(Error::AlphabetMismatch(format!(
                "composition has {} symbols, channel has {} inputs",
                self.composition.len(),
                self.channel.input_size()
            )));
        }
        if let Some(s) = self.metric.scores() {
            if s.inputs() != self.channel.input_size() || s.outputs() != self.channel.output_size() {
                return Err(Error::AlphabetMismatch("metric kernel shape differs from the channel".into()));
            }
        }
        Ok(())
    }

    fn alpha_rate(&self) -> f64 {
        self.rate - self.epsilon
    }
}

/// Which exponent expression a result holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentForm {
    /// `inf [Gamma + I] - R` over couplings with `I(X;X') <= R`.
    Expurgated,
    /// `sup_rho min [Gamma + rho (I - R)]`.
    MaxMin,
}

#[derive(Clone, Debug)]
pub struct ExponentResult {
    /// Exponent in nats; `+inf` when forced by support constraints.
    pub value: f64,
    pub form: ExponentForm,
    /// Optimizing coupling `Q_XX'`.
    pub argmin: Option<JointDistribution>,
    /// Optimizing triple `Q_XX'Y` (rows `x * |X| + x'`).
    pub argmin_triple: Option<JointDistribution>,
    pub rho_star: Option<f64>,
    pub boundary_flag: bool,
    /// Expurgated value minus sup-min value, when both were computed.
    pub gap: Option<f64>,
    pub expurgated_value: Option<f64>,
    pub maxmin_value: Option<f64>,
    /// Best value over grid points only.
    pub grid_value: f64,
    pub resolution: usize,
    pub refined: bool,
    pub affine: bool,
    pub notes: Vec<String>,
}

/// `alpha(rate, Q_Y)` for the query's metric.
///
/// Constant and empirical-mutual-information metrics make `g - I` constant in
/// `Q_{X|Y}`, so `alpha = rate`. For log-likelihood metrics the supremum is a
/// concave program solved through its Lagrangian: for a tilt `gamma` in
/// `(0, 1]` the maximizer of `gamma E[s] - I` is
/// `Q(x|y) ~ q(x) exp(gamma s(x,y))` with `q` the fixed point of the
/// Blahut-Arimoto iteration, and `gamma` is bisected until the information
/// constraint is met. Every candidate visited is feasible, so the returned
/// value never exceeds the true supremum.
///
/// A negative `rate` has an empty feasible set and gives `-inf`.
pub fn alpha(rate: f64, output: &Distribution, metric: &MetricSpec) -> Result<f64> {
    if let Some(s) = metric.scores() {
        if s.outputs() != output.len() {
            return Err(Error::AlphabetMismatch(format!(
                "Q_Y has {} symbols, metric has {} outputs",
                output.len(),
                s.outputs()
            )));
        }
    }
    Ok(alpha_value(rate, output.probs(), metric))
}

fn alpha_value(rate: f64, q_y: &[f64], metric: &MetricSpec) -> f64 {
    if rate < 0.0 {
        return f64::NEG_INFINITY;
    }
    match (metric.kind(), metric.scores()) {
        (MetricKind::Constant | MetricKind::EmpiricalMutualInformation, _) => rate,
        (_, Some(scores)) => TiltSolver::new(scores, q_y).alpha(rate),
        _ => unreachable!("log-likelihood metrics always carry scores"),
    }
}

struct TiltSolver<'a> {
    scores: &'a ScoreTable,
    q_y: &'a [f64],
    /// Output symbols with positive mass.
    support: Vec<usize>,
    weights: Vec<f64>,
    q: Vec<f64>,
    next: Vec<f64>,
    z: Vec<f64>,
}

impl<'a> TiltSolver<'a> {
    const MAX_ITERS: usize = 5_000;

    fn new(scores: &'a ScoreTable, q_y: &'a [f64]) -> Self {
        let nx = scores.inputs();
        let support: Vec<usize> = (0..q_y.len()).filter(|&y| q_y[y] > 0.0).collect();
        Self {
            scores,
            q_y,
            weights: vec![0.0; nx * support.len()],
            support,
            q: vec![1.0 / nx as f64; nx],
            next: vec![0.0; nx],
            z: vec![0.0; q_y.len()],
        }
    }

    fn alpha(mut self, rate: f64) -> f64 {
        let nx = self.scores.inputs();
        // g is -inf for every kernel when some output in the support is
        // reachable from no input.
        if self
            .support
            .iter()
            .any(|&y| (0..nx).all(|x| self.scores.get(x, y) == f64::NEG_INFINITY))
        {
            return f64::NEG_INFINITY;
        }
        // Independent kernels: g - I is best at a vertex.
        let vertex = (0..nx)
            .map(|x| {
                self.support
                    .iter()
                    .map(|&y| self.q_y[y] * self.scores.get(x, y))
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let mut best = vertex;
        if rate == 0.0 || nx == 1 {
            return best + rate;
        }
        let (g, info) = self.tilt(1.0);
        if info <= rate {
            return best.max(g - info) + rate;
        }
        // I along the tilt path increases from 0 at gamma = 0; find where it
        // crosses the rate by Illinois regula falsi.
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let (mut h_lo, mut h_hi) = (-rate, info - rate);
        let mut side = 0i8;
        for _ in 0..100 {
            if hi - lo <= 1e-13 {
                break;
            }
            let mut mid = lo - h_lo * (hi - lo) / (h_hi - h_lo);
            if !(mid > lo && mid < hi) {
                mid = 0.5 * (lo + hi);
            }
            let (g, info) = self.tilt(mid);
            let h = info - rate;
            if h <= 0.0 {
                best = best.max(g - info);
                if h > -1e-14 {
                    break;
                }
                lo = mid;
                h_lo = h;
                if side == -1 {
                    h_hi *= 0.5;
                }
                side = -1;
            } else {
                hi = mid;
                h_hi = h;
                if side == 1 {
                    h_lo *= 0.5;
                }
                side = 1;
            }
        }
        best + rate
    }

    fn blahut_arimoto(&mut self) {
        let nx = self.scores.inputs();
        let ns = self.support.len();
        // Warm start from the previous tilt, kept strictly positive.
        let floor = 1e-12 / nx as f64;
        let total: f64 = self.q.iter().map(|&p| p + floor).sum();
        self.q.iter_mut().for_each(|p| *p = (*p + floor) / total);
        for _ in 0..Self::MAX_ITERS {
            for j in 0..ns {
                self.z[j] = (0..nx).map(|x| self.q[x] * self.weights[x * ns + j]).sum();
            }
            let mut norm = 0.0;
            for x in 0..nx {
                let r: f64 = (0..ns)
                    .map(|j| {
                        let w = self.weights[x * ns + j];
                        if w > 0.0 {
                            self.q_y[self.support[j]] * w / self.z[j]
                        } else {
                            0.0
                        }
                    })
                    .sum();
                self.next[x] = self.q[x] * r;
                norm += self.next[x];
            }
            let mut diff = 0.0f64;
            for x in 0..nx {
                let v = self.next[x] / norm;
                diff = diff.max((v - self.q[x]).abs());
                self.q[x] = v;
            }
            if diff < 1e-14 {
                break;
            }
        }
    }

    /// Two inputs: maximize the concave `sum_y Q_Y(y) ln[q a_y + (1-q) b_y]`
    /// over `q` in `[0, 1]` by safeguarded Newton steps.
    fn binary_fixed_point(&mut self) {
        let ns = self.support.len();
        let derivs = |q: f64| {
            let (mut d1, mut d2) = (0.0, 0.0);
            for j in 0..ns {
                let (a, b) = (self.weights[j], self.weights[ns + j]);
                let c = self.q_y[self.support[j]];
                let den = q * a + (1.0 - q) * b;
                let diff = a - b;
                if den > 0.0 {
                    d1 += c * diff / den;
                    d2 -= c * diff * diff / (den * den);
                } else if diff != 0.0 {
                    d1 += c * diff.signum() * f64::INFINITY;
                }
            }
            (d1, d2)
        };
        let q = if derivs(0.0).0 <= 0.0 {
            0.0
        } else if derivs(1.0).0 >= 0.0 {
            1.0
        } else {
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            let mut q = self.q[0].clamp(1e-9, 1.0 - 1e-9);
            for _ in 0..200 {
                let (d1, d2) = derivs(q);
                if d1 > 0.0 {
                    lo = q;
                } else {
                    hi = q;
                }
                let newton = q - d1 / d2;
                let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
                if (next - q).abs() <= 1e-16 || hi - lo <= 1e-16 {
                    q = next;
                    break;
                }
                q = next;
            }
            q
        };
        self.q[0] = q;
        self.q[1] = 1.0 - q;
    }

    /// Maximizer of `gamma E[s] - I` over `Q_{X|Y}`; returns `(g, I)` of it.
    fn tilt(&mut self, gamma: f64) -> (f64, f64) {
        let nx = self.scores.inputs();
        let ns = self.support.len();
        // Per-output shifts leave Q(x|y) unchanged and keep exp() in range.
        for (j, &y) in self.support.iter().enumerate() {
            let top = (0..nx).map(|x| self.scores.get(x, y)).fold(f64::NEG_INFINITY, f64::max);
            for x in 0..nx {
                let s = self.scores.get(x, y);
                self.weights[x * ns + j] = if s == f64::NEG_INFINITY { 0.0 } else { (gamma * (s - top)).exp() };
            }
        }
        if nx == 2 {
            self.binary_fixed_point();
        } else {
            self.blahut_arimoto();
        }
        for j in 0..ns {
            self.z[j] = (0..nx).map(|x| self.q[x] * self.weights[x * ns + j]).sum();
        }
        let mut joint = vec![0.0; nx * ns];
        let mut g = 0.0;
        for x in 0..nx {
            for (j, &y) in self.support.iter().enumerate() {
                let p = self.q_y[y] * self.q[x] * self.weights[x * ns + j] / self.z[j];
                joint[x * ns + j] = p;
                if p > 0.0 {
                    g += p * self.scores.get(x, y);
                }
            }
        }
        (g, information_of(&joint, nx, ns))
    }
}

/// `alpha` by exhaustive search over the grid of `Q_{X|Y}` at the given
/// resolution (plus refinement when `grid.refine`). Never exceeds the true
/// supremum.
pub fn alpha_on_grid(rate: f64, output: &Distribution, metric: &MetricSpec, inputs: usize, grid: &GridSpec) -> Result<f64> {
    if rate < 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let set = FeasibleSet::with_col_marginal(inputs, output.clone()).with_information_bound(rate)?;
    let best = grid_maximize(
        |q| {
            let g = metric.evaluate(q).unwrap_or(f64::NEG_INFINITY);
            g - information_of(q.probs(), q.rows(), q.cols())
        },
        &set,
        grid,
    )?;
    Ok(best.value + rate)
}

/// Value of `g` on a row-major `rows x cols` slice.
#[inline]
fn g_of(metric: &MetricSpec, probs: &[f64], rows: usize, cols: usize) -> f64 {
    match (metric.kind(), metric.scores()) {
        (MetricKind::Constant, _) => 0.0,
        (MetricKind::EmpiricalMutualInformation, _) => information_of(probs, rows, cols),
        (_, Some(s)) => s.expectation(probs),
        _ => unreachable!("log-likelihood metrics always carry scores"),
    }
}

/// R-independent pieces of the Gamma integrand at a triple joint.
#[derive(Clone, Debug)]
struct TripleParts {
    /// `D(Q_{Y|XX'} || W(.|x) | Q_XX') = D(Q_{Y|X}||W|Q_X) + I(X';Y|X)`.
    kernel_divergence: f64,
    g_first: f64,
    g_second: f64,
    output: Vec<f64>,
    pair_information: f64,
}

struct TripleModel<'a> {
    nx: usize,
    ny: usize,
    channel: &'a Channel,
    metric: &'a MetricSpec,
}

impl<'a> TripleModel<'a> {
    fn new(channel: &'a Channel, metric: &'a MetricSpec) -> Self {
        Self {
            nx: channel.input_size(),
            ny: channel.output_size(),
            channel,
            metric,
        }
    }

    fn parts(&self, t: &[f64]) -> TripleParts {
        let (nx, ny) = (self.nx, self.ny);
        let mut pair = vec![0.0; nx * nx];
        let mut first = vec![0.0; nx * ny];
        let mut second = vec![0.0; nx * ny];
        let mut output = vec![0.0; ny];
        for a in 0..nx {
            for b in 0..nx {
                for y in 0..ny {
                    let p = t[(a * nx + b) * ny + y];
                    pair[a * nx + b] += p;
                    first[a * ny + y] += p;
                    second[b * ny + y] += p;
                    output[y] += p;
                }
            }
        }
        let mut kernel_divergence = 0.0;
        for a in 0..nx {
            for b in 0..nx {
                let mass = pair[a * nx + b];
                if mass <= 0.0 {
                    continue;
                }
                for y in 0..ny {
                    kernel_divergence += plog_ratio(t[(a * nx + b) * ny + y], mass * self.channel.prob(a, y));
                }
            }
        }
        TripleParts {
            kernel_divergence: kernel_divergence.max(0.0),
            g_first: g_of(self.metric, &first, nx, ny),
            g_second: g_of(self.metric, &second, nx, ny),
            output,
            pair_information: information_of(&pair, nx, nx),
        }
    }

    fn integrand(parts: &TripleParts, alpha: f64) -> f64 {
        parts.kernel_divergence + clipped_gap(parts.g_first.max(alpha), parts.g_second)
    }

    /// Gamma integrand with `alpha` evaluated at the triple's own `Q_Y`.
    fn integrand_at(&self, t: &[f64], alpha_rate: f64) -> (f64, TripleParts) {
        let parts = self.parts(t);
        let a = alpha_value(alpha_rate, &parts.output, self.metric);
        (Self::integrand(&parts, a), parts)
    }

    fn to_joint(&self, t: Vec<f64>) -> JointDistribution {
        JointDistribution::from_raw(self.nx * self.nx, self.ny, t)
    }
}

fn check_pair_marginals(pair: &JointDistribution, composition: &Distribution) -> Result<()> {
    let n = composition.len();
    if pair.rows() != n || pair.cols() != n {
        return Err(Error::AlphabetMismatch(format!(
            "coupling is {}x{}, composition has {n} symbols",
            pair.rows(),
            pair.cols()
        )));
    }
    let close = |d: &Distribution| d.probs().iter().zip(composition.probs()).all(|(a, b)| (a - b).abs() <= 1e-9);
    if !close(&pair.row_marginal()) || !close(&pair.col_marginal()) {
        return Err(Error::InvalidParameter("coupling marginals differ from the composition".into()));
    }
    Ok(())
}

/// Result of [`gamma`].
#[derive(Clone, Debug)]
pub struct GammaResult {
    pub value: f64,
    /// Minimizing triple `Q_XX'Y`.
    pub argmin: JointDistribution,
    pub grid_value: f64,
    pub refined: bool,
}

/// `Gamma(Q_XX', R)` at `alpha(R - epsilon, .)`, minimizing over `Q_{Y|XX'}`.
///
/// The inner grid splits each cell of `Q_XX'` over the outputs: joint types
/// with denominator `k` when `k Q_XX'` is integral, otherwise each
/// conditional row at resolution `k`.
pub fn gamma(query: &ExponentQuery, pair: &JointDistribution, grid: &GridSpec) -> Result<GammaResult> {
    query.validate()?;
    check_pair_marginals(pair, &query.composition)?;
    let model = TripleModel::new(&query.channel, &query.metric);
    let rate = query.alpha_rate();
    let set = FeasibleSet::with_row_marginal(Distribution::from_raw(pair.probs().to_vec()), model.ny);
    let out = grid_minimize(|t| model.integrand_at(t.probs(), rate).0, &set, grid)?;
    Ok(GammaResult {
        value: out.value,
        argmin: out.argmin,
        grid_value: out.grid_value,
        refined: out.refined,
    })
}

#[derive(Clone, Debug)]
struct PairPoint {
    information: f64,
    start: usize,
    len: usize,
}

#[derive(Clone, Copy, Debug)]
struct InnerPoint {
    kernel_divergence: f64,
    g_first: f64,
    g_second: f64,
    output: u32,
}

/// Rate-independent grid of triple joint types with `X` and `X'` marginals
/// equal to a composition. Shared across rates by [`rate_sweep`]; `alpha` is
/// cached per distinct output type and rate.
pub struct CouplingGrid {
    nx: usize,
    ny: usize,
    resolution: usize,
    pairs: Vec<PairPoint>,
    inner: Vec<InnerPoint>,
    counts: Vec<u16>,
    outputs: Vec<Vec<f64>>,
}

struct GammaTable {
    gamma: Vec<f64>,
    best_inner: Vec<usize>,
}

impl CouplingGrid {
    pub fn new(query: &ExponentQuery, resolution: usize) -> Result<Self> {
        query.validate()?;
        if resolution < 2 {
            return Err(Error::InvalidParameter(format!("grid resolution must be >= 2, got {resolution}")));
        }
        if resolution > u16::MAX as usize {
            return Err(Error::InvalidParameter("grid resolution too large".into()));
        }
        let k = resolution;
        let marg = query.composition.scaled_counts(k).ok_or(Error::NonIntegralComposition {
            denominator: k,
            nearest: query.composition.nearest_denominator(k, 64 * k.max(16)),
        })?;
        let model = TripleModel::new(&query.channel, &query.metric);
        let (nx, ny) = (model.nx, model.ny);
        let tables = contingency_tables(&marg, &marg);
        let per_pair: Vec<(Vec<u16>, Vec<(InnerPoint, Vec<u16>)>)> = tables
            .par_iter()
            .map(|table| {
                let options: Vec<Vec<Vec<usize>>> = table.iter().map(|&c| compositions(c, ny)).collect();
                let total: usize = options.iter().map(Vec::len).product();
                let mut inner = Vec::with_capacity(total);
                let mut counts = Vec::with_capacity(total * nx * nx * ny);
                let mut t = vec![0.0; nx * nx * ny];
                for mut idx in 0..total {
                    let mut cell_counts = vec![0u16; nx * nx * ny];
                    for cell in (0..nx * nx).rev() {
                        let opts = &options[cell];
                        let choice = &opts[idx % opts.len()];
                        idx /= opts.len();
                        for (y, &c) in choice.iter().enumerate() {
                            cell_counts[cell * ny + y] = c as u16;
                        }
                    }
                    for (p, &c) in t.iter_mut().zip(&cell_counts) {
                        *p = c as f64 / k as f64;
                    }
                    let parts = model.parts(&t);
                    let mut out_counts = vec![0u16; ny];
                    for (i, &c) in cell_counts.iter().enumerate() {
                        out_counts[i % ny] += c;
                    }
                    counts.extend_from_slice(&cell_counts);
                    inner.push((
                        InnerPoint {
                            kernel_divergence: parts.kernel_divergence,
                            g_first: parts.g_first,
                            g_second: parts.g_second,
                            output: 0,
                        },
                        out_counts,
                    ));
                }
                (counts, inner)
            })
            .collect();
        let mut pairs = Vec::with_capacity(tables.len());
        let mut inner = Vec::new();
        let mut counts = Vec::new();
        let mut outputs = Vec::new();
        let mut output_ids: HashMap<Vec<u16>, u32> = HashMap::new();
        for (table, (c, pts)) in tables.iter().zip(per_pair) {
            let probs: Vec<f64> = table.iter().map(|&c| c as f64 / k as f64).collect();
            let information = information_of(&probs, nx, nx);
            pairs.push(PairPoint {
                information,
                start: inner.len(),
                len: pts.len(),
            });
            counts.extend(c);
            for (mut p, out) in pts {
                let next = output_ids.len() as u32;
                let id = *output_ids.entry(out.clone()).or_insert_with(|| {
                    outputs.push(out.iter().map(|&c| c as f64 / k as f64).collect());
                    next
                });
                p.output = id;
                inner.push(p);
            }
        }
        Ok(Self {
            nx,
            ny,
            resolution,
            pairs,
            inner,
            counts,
            outputs,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Number of pair couplings on the grid.
    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    /// Number of triple joints on the grid.
    pub fn triple_count(&self) -> usize {
        self.inner.len()
    }

    fn triple(&self, inner_index: usize) -> Vec<f64> {
        let stride = self.nx * self.nx * self.ny;
        self.counts[inner_index * stride..(inner_index + 1) * stride]
            .iter()
            .map(|&c| c as f64 / self.resolution as f64)
            .collect()
    }

    fn gamma_table(&self, query: &ExponentQuery) -> GammaTable {
        let rate = query.alpha_rate();
        let alphas: Vec<f64> = self
            .outputs
            .par_iter()
            .map(|q| alpha_value(rate, q, &query.metric))
            .collect();
        let (gamma, best_inner) = self
            .pairs
            .par_iter()
            .map(|pair| {
                let mut best = (f64::INFINITY, pair.start);
                for i in pair.start..pair.start + pair.len {
                    let p = &self.inner[i];
                    let v = p.kernel_divergence + clipped_gap(p.g_first.max(alphas[p.output as usize]), p.g_second);
                    best = better(best, (v, i));
                }
                best
            })
            .unzip();
        GammaTable { gamma, best_inner }
    }

    fn expurgated(&self, query: &ExponentQuery, table: &GammaTable, grid: &GridSpec) -> Result<ExponentResult> {
        let rate = query.rate;
        let mut best: Option<(f64, usize)> = None;
        for (i, pair) in self.pairs.iter().enumerate() {
            if pair.information > rate + INFORMATION_SLACK {
                continue;
            }
            let v = table.gamma[i] + pair.information - rate;
            best = Some(best.map_or((v, i), |b| better(b, (v, i))));
        }
        let (grid_value, index) = best.ok_or(Error::EmptyFeasibleGrid {
            resolution: self.resolution,
        })?;
        let model = TripleModel::new(&query.channel, &query.metric);
        let mut triple = self.triple(table.best_inner[index]);
        let mut value = grid_value;
        let mut notes = Vec::new();
        let refined = grid.refine && grid_value.is_finite();
        if refined {
            let alpha_rate = query.alpha_rate();
            let objective = |t: &[f64]| {
                let (f, parts) = model.integrand_at(t, alpha_rate);
                f + parts.pair_information - rate
            };
            let feasible = |t: &[f64]| pair_information(t, self.nx, self.ny) <= rate + INFORMATION_SLACK;
            let mut ranked: Vec<(f64, usize)> = (0..self.pairs.len())
                .filter(|&i| self.pairs[i].information <= rate + INFORMATION_SLACK)
                .map(|i| (table.gamma[i] + self.pairs[i].information - rate, i))
                .filter(|(v, _)| v.is_finite())
                .collect();
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let starts = ranked
                .iter()
                .take(STARTS)
                .map(|&(v, i)| (self.triple(table.best_inner[i]), v))
                .collect();
            let r = self.descend(&objective, starts, feasible, grid);
            value = r.value;
            triple = r.point;
        }
        if value == f64::INFINITY {
            notes.push(
                "support: Gamma is +inf at every feasible coupling (finite divergence forces the competing \
                 metric to -inf)"
                    .to_string(),
            );
        }
        let triple = model.to_joint(triple);
        Ok(ExponentResult {
            value,
            form: ExponentForm::Expurgated,
            argmin: Some(pair_of(&triple, self.nx)),
            argmin_triple: Some(triple),
            rho_star: None,
            boundary_flag: false,
            gap: None,
            expurgated_value: Some(value),
            maxmin_value: None,
            grid_value,
            resolution: self.resolution,
            refined,
            affine: query.metric.is_affine(),
            notes,
        })
    }

    /// Refinement from each start; the lowest value wins, ties to the earlier start.
    fn descend(
        &self,
        objective: &impl Fn(&[f64]) -> f64,
        starts: Vec<(Vec<f64>, f64)>,
        feasible: impl Fn(&[f64]) -> bool,
        grid: &GridSpec,
    ) -> Refined {
        let moves = coupling_moves(self.nx, self.nx, self.ny);
        let escapes = composite_moves(&moves);
        let mut best: Option<Refined> = None;
        for (point, value) in starts {
            let r = refine_escaping(objective, point, value, &moves, &escapes, &feasible, grid);
            if best.as_ref().is_none_or(|b| r.value < b.value) {
                best = Some(r);
            }
        }
        best.expect("at least one start")
    }

    /// Grid minimum of `Gamma + rho (I - R)` and its pair index.
    fn grid_inner(&self, table: &GammaTable, rate: f64, rho: f64) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for (i, pair) in self.pairs.iter().enumerate() {
            best = better(best, (table.gamma[i] + rho * (pair.information - rate), i));
        }
        best
    }

    fn maxmin(
        &self,
        query: &ExponentQuery,
        table: &GammaTable,
        grid: &GridSpec,
        seeds: &[Vec<f64>],
    ) -> Result<ExponentResult> {
        let rate = query.rate;
        let alpha_rate = query.alpha_rate();
        let model = TripleModel::new(&query.channel, &query.metric);
        let (first, _) = self.grid_inner(table, rate, 1.0);
        if first == f64::INFINITY {
            let (_, index) = self.grid_inner(table, rate, 1.0);
            let triple = model.to_joint(self.triple(table.best_inner[index]));
            return Ok(ExponentResult {
                value: f64::INFINITY,
                form: ExponentForm::MaxMin,
                argmin: Some(pair_of(&triple, self.nx)),
                argmin_triple: Some(triple),
                rho_star: Some(1.0),
                boundary_flag: false,
                gap: None,
                expurgated_value: None,
                maxmin_value: Some(f64::INFINITY),
                grid_value: f64::INFINITY,
                resolution: self.resolution,
                refined: false,
                affine: query.metric.is_affine(),
                notes: vec!["support: Gamma is +inf at every coupling".to_string()],
            });
        }
        let refine = grid.refine;
        // Evaluations of the inner minimum, in search order. Each refinement
        // also starts from the previous refined point and from `seeds`.
        let mut history: Vec<(f64, f64, f64, Vec<f64>)> = Vec::new();
        let inner = |rho: f64, history: &mut Vec<(f64, f64, f64, Vec<f64>)>| -> f64 {
            let (grid_value, index) = self.grid_inner(table, rate, rho);
            let start = self.triple(table.best_inner[index]);
            if !refine || !grid_value.is_finite() {
                history.push((rho, grid_value, grid_value, start));
                return grid_value;
            }
            let objective = |t: &[f64]| {
                let (f, parts) = model.integrand_at(t, alpha_rate);
                f + rho * (parts.pair_information - rate)
            };
            let mut starts = vec![(start, grid_value)];
            for extra in history.last().map(|h| &h.3).into_iter().chain(seeds) {
                let v = objective(extra);
                if v.is_finite() {
                    starts.push((extra.clone(), v));
                }
            }
            let r = self.descend(&objective, starts, |_| true, grid);
            history.push((rho, r.value, grid_value, r.point));
            r.value
        };
        // I(X;X') - R at a minimizer is a supergradient of the concave inner
        // minimum, so a nonpositive value at rho = 1 settles the search.
        let at_one = inner(1.0, &mut history);
        let settled = {
            let point = &history[0].3;
            pair_information(point, self.nx, self.ny) <= rate
        };
        let search = if settled {
            RhoSearch {
                rho_star: 1.0,
                value: at_one,
                boundary_flag: false,
            }
        } else {
            concave_search_rho(|rho| inner(rho, &mut history), 1.0, query.rho_max, RHO_TOLERANCE)
        };
        let (_, value, grid_value, triple) = history
            .into_iter()
            .find(|h| h.0 == search.rho_star && h.1 == search.value)
            .expect("the selected rho was evaluated");
        let rho_star = search.rho_star;
        let triple = model.to_joint(triple);
        let mut notes = Vec::new();
        if search.boundary_flag {
            notes.push(format!(
                "rho search reached rho_max = {}; the supremum may lie at larger rho",
                query.rho_max
            ));
        }
        Ok(ExponentResult {
            value,
            form: ExponentForm::MaxMin,
            argmin: Some(pair_of(&triple, self.nx)),
            argmin_triple: Some(triple),
            rho_star: Some(rho_star),
            boundary_flag: search.boundary_flag,
            gap: None,
            expurgated_value: None,
            maxmin_value: Some(value),
            grid_value,
            resolution: self.resolution,
            refined: refine,
            affine: query.metric.is_affine(),
            notes,
        })
    }

    fn forms(&self, query: &ExponentQuery, grid: &GridSpec) -> Result<ExponentResult> {
        let table = self.gamma_table(query);
        let exp = self.expurgated(query, &table, grid)?;
        let mm = self.maxmin(query, &table, grid, &exp_seed(&exp))?;
        let gap = form_gap(exp.value, mm.value);
        let mut selected = if query.metric.is_affine() {
            exp.clone()
        } else {
            let mut m = mm.clone();
            m.notes.push("non-affine metric: sup-min form reported".to_string());
            m
        };
        selected.gap = Some(gap);
        selected.expurgated_value = Some(exp.value);
        selected.maxmin_value = Some(mm.value);
        selected.rho_star = mm.rho_star;
        selected.boundary_flag = mm.boundary_flag;
        Ok(selected)
    }
}

/// `expurgated - maxmin`, with `inf - inf = 0`.
fn form_gap(expurgated: f64, maxmin: f64) -> f64 {
    if expurgated == f64::INFINITY && maxmin == f64::INFINITY {
        0.0
    } else {
        expurgated - maxmin
    }
}

fn pair_information(t: &[f64], nx: usize, ny: usize) -> f64 {
    let pair: Vec<f64> = t.chunks(ny).map(|r| r.iter().sum()).collect();
    information_of(&pair, nx, nx)
}

fn pair_of(triple: &JointDistribution, nx: usize) -> JointDistribution {
    let probs = triple.probs().chunks(triple.cols()).map(|r| r.iter().sum()).collect();
    JointDistribution::from_raw(nx, nx, probs)
}

/// Expurgated form: `inf [Gamma(Q_XX', R) + I(X;X')] - R` over couplings with
/// both marginals `Q_X` and `I(X;X') <= R`.
pub fn expurgated_exponent(query: &ExponentQuery, grid: &GridSpec) -> Result<ExponentResult> {
    grid.validate()?;
    let cg = CouplingGrid::new(query, grid.resolution)?;
    let table = cg.gamma_table(query);
    cg.expurgated(query, &table, grid)
}

/// Sup-min form: `sup_{1 <= rho <= rho_max} min [Gamma + rho (I(X;X') - R)]`.
pub fn maxmin_exponent(query: &ExponentQuery, grid: &GridSpec) -> Result<ExponentResult> {
    grid.validate()?;
    let cg = CouplingGrid::new(query, grid.resolution)?;
    let table = cg.gamma_table(query);
    let seeds = match cg.expurgated(query, &table, grid) {
        Ok(exp) => exp_seed(&exp),
        Err(Error::EmptyFeasibleGrid { .. }) => Vec::new(),
        Err(e) => return Err(e),
    };
    cg.maxmin(query, &table, grid, &seeds)
}

/// The refined expurgated minimizer, a natural start for the `rho = 1`
/// inner problem.
fn exp_seed(exp: &ExponentResult) -> Vec<Vec<f64>> {
    match &exp.argmin_triple {
        Some(t) if exp.refined && exp.value.is_finite() => vec![t.probs().to_vec()],
        _ => Vec::new(),
    }
}

/// Both forms; returns the expurgated form for affine metrics and the
/// sup-min form otherwise, with `gap = expurgated - maxmin` recorded.
pub fn exponent_form(query: &ExponentQuery, grid: &GridSpec) -> Result<ExponentResult> {
    grid.validate()?;
    let cg = CouplingGrid::new(query, grid.resolution)?;
    cg.forms(query, grid)
}

/// [`exponent_form`] at each rate, sharing the rate-independent grid.
pub fn rate_sweep(template: &ExponentQuery, rates: &[f64], grid: &GridSpec) -> Result<Vec<ExponentResult>> {
    grid.validate()?;
    if rates.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter("rates must be sorted ascending".into()));
    }
    let cg = CouplingGrid::new(template, grid.resolution)?;
    rates
        .iter()
        .map(|&r| cg.forms(&template.with_rate(r)?, grid))
        .collect()
}

/// The exchanged objective for a triple joint over `(X x X') x Y`:
/// `-E ln[W(Y|X) Q(X) Q(X')] - H(X,X',Y) + rho (I(X;X') - R)
///  + [max{g(Q_XY), alpha(R, Q_Y)} - g(Q_X'Y)]_+`.
pub fn exchanged_objective(query: &ExponentQuery, triple: &JointDistribution, rho: f64) -> Result<f64> {
    query.validate()?;
    let model = TripleModel::new(&query.channel, &query.metric);
    let (nx, ny) = (model.nx, model.ny);
    if triple.rows() != nx * nx || triple.cols() != ny {
        return Err(Error::AlphabetMismatch("triple joint shape differs from the channel".into()));
    }
    let t = triple.probs();
    let qx = query.composition.probs();
    let mut linear = 0.0;
    let mut neg_entropy = 0.0;
    for a in 0..nx {
        for b in 0..nx {
            for y in 0..ny {
                let p = t[(a * nx + b) * ny + y];
                if p > 0.0 {
                    let w = query.channel.prob(a, y) * qx[a] * qx[b];
                    linear += if w > 0.0 { -p * w.ln() } else { f64::INFINITY };
                    neg_entropy += p * p.ln();
                }
            }
        }
    }
    let parts = model.parts(t);
    let a = alpha_value(query.alpha_rate(), &parts.output, &query.metric);
    Ok(linear + neg_entropy + rho * (parts.pair_information - query.rate) + clipped_gap(parts.g_first.max(a), parts.g_second))
}
