//! Decoding functionals `g(Q_XY)` for the generalized likelihood decoder.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{mutual_information, Channel, JointDistribution};

/// Family of the decoding functional.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricKind {
    /// `sum Q(x,y) ln W(y|x)` with the true channel.
    Matched(Channel),
    /// `sum Q(x,y) ln K(y|x)` with a nonnegative decoding kernel `K`.
    Mismatched(DecodingKernel),
    /// `g = 0`: every codeword equally likely, the random-guessing decoder.
    Constant,
    /// `g(Q) = I_Q(X;Y)`.
    EmpiricalMutualInformation,
}

/// Nonnegative `|X| x |Y|` matrix with no all-zero row.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodingKernel {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
}

impl DecodingKernel {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let inputs = rows.len();
        let outputs = rows.first().map_or(0, Vec::len);
        if inputs == 0 || outputs == 0 || rows.iter().any(|r| r.len() != outputs) {
            return Err(Error::InvalidMetric("kernel must be a non-empty rectangular matrix".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::InvalidMetric(format!("kernel row {i} has an invalid entry")));
            }
            if r.iter().all(|&w| w == 0.0) {
                return Err(Error::InvalidMetric(format!("kernel row {i} is all zero")));
            }
        }
        Ok(Self {
            inputs,
            outputs,
            weights: rows.concat(),
        })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.weights[x * self.outputs + y]
    }

    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        self.weights.chunks(self.outputs).map(<[f64]>::to_vec).collect()
    }
}

/// Per-letter scores `beta ln K(y|x)` of an affine metric.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    inputs: usize,
    outputs: usize,
    scores: Vec<f64>,
}

impl ScoreTable {
    fn from_weights(inputs: usize, outputs: usize, weights: impl Fn(usize, usize) -> f64, beta: f64) -> Self {
        let mut scores = Vec::with_capacity(inputs * outputs);
        for x in 0..inputs {
            for y in 0..outputs {
                let w = weights(x, y);
                scores.push(if w > 0.0 { beta * w.ln() } else { f64::NEG_INFINITY });
            }
        }
        Self {
            inputs,
            outputs,
            scores,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.scores[x * self.outputs + y]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.scores
    }

    /// `sum_{x,y} q(x,y) s(x,y)` over a row-major `inputs x outputs` slice;
    /// cells with `q = 0` contribute nothing even where `s = -inf`.
    #[inline]
    pub fn expectation(&self, q: &[f64]) -> f64 {
        debug_assert_eq!(q.len(), self.scores.len());
        let mut total = 0.0;
        for (&p, &s) in q.iter().zip(&self.scores) {
            if p > 0.0 {
                total += p * s;
            }
        }
        total
    }
}

/// A decoding functional together with its temperature.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpec {
    kind: MetricKind,
    beta: f64,
    scores: Option<ScoreTable>,
}

/// On-disk metric format. `kernel` is used by `mismatched` only; `matched`
/// takes its kernel from the channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub kind: MetricName,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Vec<Vec<f64>>>,
}

fn default_beta() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricName {
    Matched,
    Mismatched,
    Constant,
    Emi,
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidMetric(format!("temperature must be positive, got {beta}")));
    }
    Ok(())
}

impl MetricSpec {
    pub fn matched(channel: &Channel, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let scores = ScoreTable::from_weights(
            channel.input_size(),
            channel.output_size(),
            |x, y| channel.prob(x, y),
            beta,
        );
        Ok(Self {
            kind: MetricKind::Matched(channel.clone()),
            beta,
            scores: Some(scores),
        })
    }

    pub fn mismatched(kernel: DecodingKernel, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let scores = ScoreTable::from_weights(kernel.inputs, kernel.outputs, |x, y| kernel.get(x, y), beta);
        Ok(Self {
            kind: MetricKind::Mismatched(kernel),
            beta,
            scores: Some(scores),
        })
    }

    pub fn constant() -> Self {
        Self {
            kind: MetricKind::Constant,
            beta: 1.0,
            scores: None,
        }
    }

    pub fn empirical_mutual_information() -> Self {
        Self {
            kind: MetricKind::EmpiricalMutualInformation,
            beta: 1.0,
            scores: None,
        }
    }

    pub fn from_config(config: &MetricConfig, channel: &Channel) -> Result<Self> {
        check_beta(config.beta)?;
        let spec = match config.kind {
            MetricName::Matched => Self::matched(channel, config.beta)?,
            MetricName::Mismatched => {
                let rows = config
                    .kernel
                    .as_ref()
                    .ok_or_else(|| Error::InvalidMetric("mismatched metric needs a kernel".into()))?;
                let kernel = DecodingKernel::new(rows)?;
                if kernel.inputs != channel.input_size() || kernel.outputs != channel.output_size() {
                    return Err(Error::AlphabetMismatch(
                        "mismatched kernel shape differs from the channel".into(),
                    ));
                }
                Self::mismatched(kernel, config.beta)?
            }
            MetricName::Constant => Self::constant(),
            MetricName::Emi => Self::empirical_mutual_information(),
        };
        Ok(spec)
    }

    pub fn to_config(&self) -> MetricConfig {
        let (kind, kernel) = match &self.kind {
            MetricKind::Matched(_) => (MetricName::Matched, None),
            MetricKind::Mismatched(k) => (MetricName::Mismatched, Some(k.to_matrix())),
            MetricKind::Constant => (MetricName::Constant, None),
            MetricKind::EmpiricalMutualInformation => (MetricName::Emi, None),
        };
        MetricConfig {
            kind,
            beta: self.beta,
            kernel,
        }
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Score table of an affine log-likelihood metric.
    pub fn scores(&self) -> Option<&ScoreTable> {
        self.scores.as_ref()
    }

    /// Whether `g` is affine in `Q_XY`.
    pub fn is_affine(&self) -> bool {
        !matches!(self.kind, MetricKind::EmpiricalMutualInformation)
    }

    /// `g(Q)`; `-inf` when a log-likelihood metric is charged at a kernel zero.
    pub fn evaluate(&self, q: &JointDistribution) -> Result<f64> {
        match (&self.kind, &self.scores) {
            (MetricKind::Constant, _) => Ok(0.0),
            (MetricKind::EmpiricalMutualInformation, _) => Ok(mutual_information(q)),
            (_, Some(table)) => {
                if q.rows() != table.inputs || q.cols() != table.outputs {
                    return Err(Error::AlphabetMismatch(format!(
                        "joint is {}x{}, metric kernel is {}x{}",
                        q.rows(),
                        q.cols(),
                        table.inputs,
                        table.outputs
                    )));
                }
                Ok(table.expectation(q.probs()))
            }
            _ => unreachable!("log-likelihood metrics always carry scores"),
        }
    }
}

/// Free-function form of [`MetricSpec::evaluate`].
pub fn evaluate_g(spec: &MetricSpec, q: &JointDistribution) -> Result<f64> {
    spec.evaluate(q)
}

pub fn is_affine(spec: &MetricSpec) -> bool {
    spec.is_affine()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Distribution;

    #[test]
    fn constant_is_zero() {
        let q = Distribution::uniform(3).product(&Distribution::new(vec![0.2, 0.8]).unwrap());
        assert_eq!(evaluate_g(&MetricSpec::constant(), &q).unwrap(), 0.0);
    }

    #[test]
    fn matched_point_mass() {
        let w = Channel::bsc(0.1).unwrap();
        let spec = MetricSpec::matched(&w, 2.5).unwrap();
        let q = JointDistribution::new(2, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((spec.evaluate(&q).unwrap() - 2.5 * 0.1f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn matched_bsc_joint() {
        let w = Channel::bsc(0.1).unwrap();
        let spec = MetricSpec::matched(&w, 1.0).unwrap();
        let q = w.kernel().joint_with(&Distribution::uniform(2)).unwrap();
        let expected = 0.9 * 0.9f64.ln() + 0.1 * 0.1f64.ln();
        let g = spec.evaluate(&q).unwrap();
        assert!((g - expected).abs() < 1e-15);
        assert!((g + 0.325083).abs() < 1e-6);
    }

    #[test]
    fn matched_off_support_is_minus_infinity() {
        let spec = MetricSpec::matched(&Channel::noiseless(2), 1.0).unwrap();
        let q = Distribution::uniform(2).product(&Distribution::uniform(2));
        assert_eq!(spec.evaluate(&q).unwrap(), f64::NEG_INFINITY);
        let diag = JointDistribution::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_eq!(spec.evaluate(&diag).unwrap(), 0.0);
    }

    #[test]
    fn alphabet_mismatch_rejected() {
        let spec = MetricSpec::matched(&Channel::bsc(0.1).unwrap(), 1.0).unwrap();
        let q = Distribution::uniform(3).product(&Distribution::uniform(2));
        assert!(matches!(spec.evaluate(&q), Err(Error::AlphabetMismatch(_))));
    }

    #[test]
    fn affinity_flags() {
        let w = Channel::bsc(0.1).unwrap();
        assert!(MetricSpec::matched(&w, 2.0).unwrap().is_affine());
        assert!(MetricSpec::constant().is_affine());
        assert!(!MetricSpec::empirical_mutual_information().is_affine());
    }

    #[test]
    fn emi_fails_midpoint_affinity() {
        // Two deterministic couplings whose midpoint is independent.
        let q1 = JointDistribution::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let q2 = JointDistribution::new(2, 2, vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        let mid = q1.mixture(&q2, 0.5).unwrap();
        let g = MetricSpec::empirical_mutual_information();
        let lhs = g.evaluate(&mid).unwrap();
        let rhs = 0.5 * g.evaluate(&q1).unwrap() + 0.5 * g.evaluate(&q2).unwrap();
        assert!(lhs.abs() < 1e-15);
        assert!((rhs - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn invalid_specs() {
        let w = Channel::bsc(0.1).unwrap();
        assert!(MetricSpec::matched(&w, 0.0).is_err());
        assert!(MetricSpec::matched(&w, -1.0).is_err());
        assert!(DecodingKernel::new(&[vec![0.0, 0.0], vec![1.0, 1.0]]).is_err());
        assert!(DecodingKernel::new(&[vec![-0.1, 1.0]]).is_err());
        let cfg = MetricConfig {
            kind: MetricName::Mismatched,
            beta: 1.0,
            kernel: None,
        };
        assert!(MetricSpec::from_config(&cfg, &w).is_err());
        let cfg: MetricConfig = serde_json::from_str(r#"{"kind":"matched","beta":-1}"#).unwrap();
        assert!(MetricSpec::from_config(&cfg, &w).is_err());
    }

    #[test]
    fn config_round_trip() {
        let w = Channel::bsc(0.1).unwrap();
        let cfg: MetricConfig =
            serde_json::from_str(r#"{"kind":"mismatched","beta":0.5,"kernel":[[0.8,0.2],[0.3,0.7]]}"#).unwrap();
        let spec = MetricSpec::from_config(&cfg, &w).unwrap();
        assert_eq!(spec.to_config(), cfg);
        assert!((spec.scores().unwrap().get(1, 0) - 0.5 * 0.3f64.ln()).abs() < 1e-15);
    }
}
