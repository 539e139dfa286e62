//! Self-checks against pure-grid and exact-enumeration references.

use gld_core::exponents::{
    exchanged_objective, expurgated_exponent, exponent_form, maxmin_exponent, ExponentQuery, DEFAULT_RHO_MAX,
};
use gld_core::measures::{Channel, Distribution, JointDistribution};
use gld_core::metrics::{DecodingKernel, MetricSpec};
use gld_core::optimizer::GridSpec;
use gld_core::simulator::{
    exact_error_probabilities, markov_bound_from_probs, monte_carlo_error, sample_code, stream_rng,
    DEFAULT_ENUMERATION_BUDGET,
};
use rand::Rng;

use crate::config::RunConfig;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Level {
    Quick,
    Full,
}

struct Row {
    property: String,
    cases: usize,
    worst: f64,
    tolerance: f64,
}

impl Row {
    fn pass(&self) -> bool {
        self.worst <= self.tolerance
    }
}

const RESOLUTION: usize = 16;
const SEED: u64 = 0x5eed;

fn random_rows(rng: &mut impl Rng, inputs: usize, outputs: usize) -> Vec<Vec<f64>> {
    (0..inputs)
        .map(|_| {
            let r: Vec<f64> = (0..outputs).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = r.iter().sum();
            r.into_iter().map(|v| v / s).collect()
        })
        .collect()
}

fn bsc() -> Channel {
    Channel::bsc(0.1).expect("valid crossover")
}

/// Refined exponents never exceed the grid values they start from, and the
/// grid phase reproduces a pure grid run.
fn grid_oracle(instances: u64) -> Result<Row, CliError> {
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let mut rng = stream_rng(SEED, i);
        let w = Channel::new(&random_rows(&mut rng, 2, 2))?;
        let metric = match i % 3 {
            0 => MetricSpec::matched(&w, rng.gen_range(0.5..2.0))?,
            1 => MetricSpec::mismatched(DecodingKernel::new(&random_rows(&mut rng, 2, 2))?, 1.0)?,
            _ => MetricSpec::empirical_mutual_information(),
        };
        let q = ExponentQuery::new(rng.gen_range(0.05..0.4), Distribution::uniform(2), w, metric)?;
        let prod = expurgated_exponent(&q, &GridSpec::new(RESOLUTION))?;
        let pure = expurgated_exponent(&q, &GridSpec::pure(RESOLUTION))?;
        let mm = maxmin_exponent(&q, &GridSpec::new(RESOLUTION))?;
        worst = worst
            .max((prod.grid_value - pure.value).abs())
            .max(prod.value - prod.grid_value)
            .max(mm.value - mm.grid_value);
    }
    Ok(Row {
        property: "grid-oracle equivalence".into(),
        cases: instances as usize,
        worst,
        tolerance: 1e-9,
    })
}

struct DualityCase {
    channel: Channel,
    metric: MetricSpec,
    composition: Distribution,
    rate: f64,
    resolution: usize,
}

fn duality_cases(level: Level) -> Result<Vec<DualityCase>, CliError> {
    let mut channels = vec![(bsc(), vec![vec![0.8, 0.2], vec![0.3, 0.7]])];
    if level == Level::Full {
        channels.push((
            Channel::new(&[vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]])?,
            vec![vec![0.6, 0.3, 0.1], vec![0.2, 0.3, 0.5]],
        ));
    }
    let betas: &[f64] = match level {
        Level::Quick => &[1.0],
        Level::Full => &[0.5, 1.0, 2.0],
    };
    let mut out = Vec::new();
    for (w, kernel) in channels {
        let mut metrics = vec![MetricSpec::empirical_mutual_information()];
        for &b in betas {
            metrics.push(MetricSpec::matched(&w, b)?);
            metrics.push(MetricSpec::mismatched(DecodingKernel::new(&kernel)?, b)?);
        }
        for metric in metrics {
            for rate in [0.1, 0.3] {
                out.push(DualityCase {
                    channel: w.clone(),
                    metric: metric.clone(),
                    composition: Distribution::uniform(2),
                    rate,
                    resolution: RESOLUTION,
                });
            }
        }
    }
    Ok(out)
}

/// `maxmin <= expurgated`, and equality for affine metrics, within 0.02.
fn duality(cases: &[DualityCase]) -> Result<(Row, Row), CliError> {
    let mut weak: f64 = f64::NEG_INFINITY;
    let mut exchange: f64 = 0.0;
    let mut affine = 0;
    for c in cases {
        let q = ExponentQuery::new(c.rate, c.composition.clone(), c.channel.clone(), c.metric.clone())?;
        let r = exponent_form(&q, &GridSpec::new(c.resolution))?;
        let (ex, mm) = (r.expurgated_value.unwrap_or(f64::NAN), r.maxmin_value.unwrap_or(f64::NAN));
        if ex.is_finite() {
            weak = weak.max(mm - ex);
            if r.affine {
                affine += 1;
                exchange = exchange.max((mm - ex).abs());
            }
        }
    }
    Ok((
        Row {
            property: "weak duality".into(),
            cases: cases.len(),
            worst: weak,
            tolerance: 0.02,
        },
        Row {
            property: "affine exchange".into(),
            cases: affine,
            worst: exchange,
            tolerance: 0.02,
        },
    ))
}

/// Random triple over `(X x X') x Y` with uniform binary `X` and `X'`.
fn random_triple(rng: &mut impl Rng, outputs: usize) -> Result<JointDistribution, CliError> {
    let a: f64 = rng.gen_range(0.0..0.5);
    let pair = [a, 0.5 - a, 0.5 - a, a];
    let rows = random_rows(rng, 4, outputs);
    let probs = pair.iter().zip(&rows).flat_map(|(m, r)| r.iter().map(move |v| m * v)).collect();
    Ok(JointDistribution::new(4, outputs, probs)?)
}

fn convexity(pairs: usize) -> Result<Row, CliError> {
    let mut rng = stream_rng(SEED, 1 << 20);
    let w = Channel::new(&[vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]])?;
    let metrics = [
        MetricSpec::matched(&w, 1.0)?,
        MetricSpec::mismatched(DecodingKernel::new(&random_rows(&mut rng, 2, 3))?, 0.7)?,
    ];
    let mut worst = f64::NEG_INFINITY;
    for i in 0..pairs {
        let q = ExponentQuery::new(rng.gen_range(0.02..0.5), Distribution::uniform(2), w.clone(), metrics[i % 2].clone())?;
        let rho = rng.gen_range(1.0..DEFAULT_RHO_MAX);
        let a = random_triple(&mut rng, 3)?;
        let b = random_triple(&mut rng, 3)?;
        let mid = a.mixture(&b, 0.5)?;
        let f = |t: &JointDistribution| exchanged_objective(&q, t, rho);
        worst = worst.max(f(&mid)? - 0.5 * (f(&a)? + f(&b)?));
    }
    Ok(Row {
        property: "midpoint convexity".into(),
        cases: pairs,
        worst,
        tolerance: 1e-9,
    })
}

/// Largest Monte Carlo deviation from the exact error, in standard errors.
fn exact_vs_mc(codes: u64, trials: u64) -> Result<Row, CliError> {
    let w = bsc();
    let metric = MetricSpec::matched(&w, 1.0)?;
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for i in 0..codes {
        let mut rng = stream_rng(SEED, (2 << 20) + i);
        let code = sample_code(&Distribution::uniform(2), 6, 3, &mut rng)?;
        let exact = exact_error_probabilities(&code, &w, &metric, DEFAULT_ENUMERATION_BUDGET)?;
        for (m, p) in exact.iter().enumerate() {
            let mc = monte_carlo_error(&code, m, &w, &metric, trials, rng.gen())?;
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            let dev = (mc.estimate - p).abs();
            worst = worst.max(if sigma > 0.0 { dev / sigma } else if dev > 0.0 { f64::INFINITY } else { 0.0 });
            cases += 1;
        }
    }
    Ok(Row {
        property: "exact vs Monte Carlo (sigma)".into(),
        cases,
        worst,
        tolerance: 4.0,
    })
}

/// `rhs - lhs` of the Markov step; nonpositive when it holds.
fn markov(codes: u64) -> Result<Row, CliError> {
    let w = bsc();
    let metric = MetricSpec::matched(&w, 1.0)?;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..codes {
        let mut rng = stream_rng(SEED, (3 << 20) + i);
        let code = sample_code(&Distribution::uniform(2), 6, 4, &mut rng)?;
        let probs = exact_error_probabilities(&code, &w, &metric, DEFAULT_ENUMERATION_BUDGET)?;
        for rho in [1.0, 2.0, 5.0] {
            let c = markov_bound_from_probs(&probs, rho)?;
            worst = worst.max(c.rhs - c.lhs);
        }
    }
    Ok(Row {
        property: "Markov step (rhs - lhs)".into(),
        cases: 3 * codes as usize,
        worst,
        tolerance: 1e-12,
    })
}

pub fn run(level: Level, config: Option<&RunConfig>) -> Result<(), CliError> {
    let mut cases = duality_cases(level)?;
    if let Some(c) = config {
        let r = c.resolve()?;
        for rate in c.rate_points().unwrap_or_else(|_| vec![0.1]) {
            cases.push(DualityCase {
                channel: r.channel.clone(),
                metric: r.metric.clone(),
                composition: r.composition.clone(),
                rate,
                resolution: c.resolution,
            });
        }
    }
    let (instances, pairs, codes, trials) = match level {
        Level::Quick => (10, 200, 2, 20_000),
        Level::Full => (50, 1000, 5, 100_000),
    };
    let (weak, exchange) = duality(&cases)?;
    let rows = [
        grid_oracle(instances)?,
        weak,
        exchange,
        convexity(pairs)?,
        exact_vs_mc(codes, trials)?,
        markov(if level == Level::Quick { 20 } else { 100 })?,
    ];
    println!("{:<30} {:>6} {:>12} {:>10}  status", "property", "cases", "worst", "tolerance");
    for r in &rows {
        println!(
            "{:<30} {:>6} {:>12.3e} {:>10.1e}  {}",
            r.property,
            r.cases,
            r.worst,
            r.tolerance,
            if r.pass() { "pass" } else { "FAIL" }
        );
    }
    let failed: Vec<&str> = rows.iter().filter(|r| !r.pass()).map(|r| r.property.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}
