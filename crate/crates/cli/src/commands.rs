//! The `exponent`, `sweep` and `simulate` commands.

use std::path::Path;

use gld_core::exponents::{exponent_form, rate_sweep, ExponentForm, ExponentQuery, ExponentResult};
use gld_core::simulator::{
    check_good_code, code_size, default_epsilon, exact_error_probabilities, good_half, markov_bound_from_probs,
    monte_carlo_error, sample_code, stream_rng, Codebook, GoodCodeOptions, DEFAULT_ENUMERATION_BUDGET,
};
use gld_core::Error;
use rand::Rng;
use serde_json::{json, Map, Value};

use crate::config::{Format, Resolved, RunConfig};
use crate::output::{cell, emit, matrix, opt_real, pretty, real, reals};
use crate::CliError;

fn query(config: &RunConfig, r: &Resolved, rate: f64) -> Result<ExponentQuery, CliError> {
    let mut q = ExponentQuery::new(rate, r.composition.clone(), r.channel.clone(), r.metric.clone())?;
    if let Some(rho) = config.rho_max {
        q.rho_max = rho;
        q.validate()?;
    }
    Ok(q)
}

/// The config as echoed in reports; the output block is left out so the
/// report does not depend on where it is written.
fn config_value(config: &RunConfig) -> Value {
    let mut c = config.clone();
    c.output = Default::default();
    serde_json::to_value(&c).expect("config is serializable")
}

fn form_name(form: ExponentForm) -> &'static str {
    match form {
        ExponentForm::Expurgated => "expurgated",
        ExponentForm::MaxMin => "max_min",
    }
}

pub fn result_value(rate: f64, r: &ExponentResult) -> Value {
    json!({
        "rate": real(rate),
        "value": real(r.value),
        "form": form_name(r.form),
        "expurgated": opt_real(r.expurgated_value),
        "maxmin": opt_real(r.maxmin_value),
        "gap": opt_real(r.gap),
        "rho_star": opt_real(r.rho_star),
        "boundary_flag": r.boundary_flag,
        "argmin": matrix(&r.argmin),
        "argmin_triple": matrix(&r.argmin_triple),
        "grid_value": real(r.grid_value),
        "resolution": r.resolution,
        "refined": r.refined,
        "affine": r.affine,
        "notes": r.notes,
    })
}

const CSV_HEADER: &str = "rate,exponent,maxmin,gap,rho_star,boundary_flag,infinite\n";

fn csv_row(rate: f64, r: &ExponentResult) -> String {
    format!(
        "{},{},{},{},{},{},{}\n",
        cell(Some(rate)),
        cell(Some(r.value)),
        cell(r.maxmin_value),
        cell(r.gap),
        cell(r.rho_star),
        u8::from(r.boundary_flag),
        u8::from(r.value.is_infinite()),
    )
}

pub fn exponent(config: &RunConfig) -> Result<(), CliError> {
    let resolved = config.resolve()?;
    let rate = config.single_rate()?;
    let result = exponent_form(&query(config, &resolved, rate)?, &resolved.grid)?;
    let text = match config.output.format.unwrap_or(Format::Json) {
        Format::Json => pretty(&json!({ "config": config_value(config), "result": result_value(rate, &result) })),
        Format::Csv => format!("{CSV_HEADER}{}", csv_row(rate, &result)),
    };
    emit(config.output.path.as_deref(), &text)
}

pub fn sweep(config: &RunConfig) -> Result<(), CliError> {
    let resolved = config.resolve()?;
    let rates = config.rate_points()?;
    let base = query(config, &resolved, rates[0])?;
    let results = rate_sweep(&base, &rates, &resolved.grid)?;
    let text = match config.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = String::from(CSV_HEADER);
            for (rate, r) in rates.iter().zip(&results) {
                s.push_str(&csv_row(*rate, r));
            }
            s
        }
        Format::Json => {
            let rows: Vec<Value> = rates.iter().zip(&results).map(|(&rate, r)| result_value(rate, r)).collect();
            pretty(&json!({ "config": config_value(config), "results": rows }))
        }
    };
    emit(config.output.path.as_deref(), &text)
}

fn codebook(config: &RunConfig, resolved: &Resolved) -> Result<Codebook, CliError> {
    let sim = config.simulation.as_ref().ok_or_else(|| CliError::Input("config has no `simulation` block".into()))?;
    let nx = resolved.channel.input_size();
    if let Some(words) = &sim.codewords {
        let code = Codebook::from_lines(&words.join("\n"), nx)?;
        if sim.n.is_some_and(|n| n != code.blocklength()) {
            return Err(CliError::Input(format!(
                "codewords have length {}, simulation.n is {}",
                code.blocklength(),
                sim.n.unwrap_or_default()
            )));
        }
        return Ok(code);
    }
    let n = sim.n.ok_or_else(|| CliError::Input("simulation.n is required".into()))?;
    let m = match (sim.m, config.rate) {
        (Some(m), _) => m,
        (None, Some(rate)) => code_size(n, rate),
        (None, None) => return Err(CliError::Input("give simulation.M or a rate".into())),
    };
    let mut rng = stream_rng(sim.seed, 0);
    Ok(sample_code(&resolved.composition, n, m, &mut rng)?)
}

/// Seed for the Monte Carlo run of message `m`.
fn message_seed(seed: u64, m: usize) -> u64 {
    stream_rng(seed, 1 + m as u64).gen()
}

pub fn simulate(config: &RunConfig, codebook_out: Option<&Path>) -> Result<(), CliError> {
    if config.output.format == Some(Format::Csv) {
        return Err(CliError::Input("simulation reports are JSON only".into()));
    }
    let resolved = config.resolve()?;
    let sim = config.simulation.clone().unwrap_or_default();
    if sim.trials == Some(0) {
        return Err(CliError::Input("simulation.trials must be >= 1".into()));
    }
    let code = codebook(config, &resolved)?;
    if code.len() < 2 {
        return Err(CliError::Input("simulation needs M >= 2".into()));
    }
    let (channel, metric) = (&resolved.channel, &resolved.metric);
    let n = code.blocklength();
    let monte_carlo = |trials: u64| -> Result<(Vec<f64>, Vec<f64>), CliError> {
        let mut est = Vec::with_capacity(code.len());
        let mut err = Vec::with_capacity(code.len());
        for m in 0..code.len() {
            let r = monte_carlo_error(&code, m, channel, metric, trials, message_seed(sim.seed, m))?;
            est.push(r.estimate);
            err.push(r.stderr);
        }
        Ok((est, err))
    };
    let mut report = Map::new();
    let probs = match exact_error_probabilities(&code, channel, metric, DEFAULT_ENUMERATION_BUDGET) {
        Ok(p) => {
            report.insert("per_message_error".into(), json!({ "method": "exact", "values": reals(&p) }));
            if let Some(trials) = sim.trials {
                let (est, err) = monte_carlo(trials)?;
                report.insert(
                    "monte_carlo".into(),
                    json!({ "trials": trials, "values": reals(&est), "stderr": reals(&err) }),
                );
            }
            p
        }
        Err(Error::BudgetExceeded { .. }) => {
            let trials = sim.trials.ok_or_else(|| {
                CliError::Input("exhaustive enumeration exceeds the budget; set simulation.trials".into())
            })?;
            let (est, err) = monte_carlo(trials)?;
            report.insert(
                "per_message_error".into(),
                json!({ "method": "monte_carlo", "trials": trials, "values": reals(&est), "stderr": reals(&err) }),
            );
            est
        }
        Err(e) => return Err(e.into()),
    };
    let epsilon = sim.epsilon.unwrap_or_else(|| default_epsilon(n));
    let rate = config.rate.unwrap_or_else(|| code.rate());
    let options = GoodCodeOptions {
        seed: sim.seed,
        ..GoodCodeOptions::default()
    };
    let good = check_good_code(&code, metric, channel.output_size(), rate, epsilon, &options)?;
    report.insert(
        "good_code_report".into(),
        json!({
            "holds": good.holds,
            "worst_margin": real(good.worst_margin),
            "witness": good.witness.as_ref().map(|(m, y)| json!({ "message": m, "output": y })),
            "exhaustive": good.exhaustive,
            "outputs_checked": good.outputs_checked,
            "rate": real(rate),
            "epsilon": real(epsilon),
        }),
    );
    report.insert("expurgated_indices".into(), json!(good_half(&probs)?));
    let rhos = sim.rho.clone().unwrap_or_else(|| vec![1.0, 2.0, 5.0]);
    let checks = rhos
        .iter()
        .map(|&rho| {
            let c = markov_bound_from_probs(&probs, rho)?;
            Ok(json!({ "rho": real(c.rho), "lhs": real(c.lhs), "rhs": real(c.rhs), "holds": c.holds }))
        })
        .collect::<Result<Vec<Value>, Error>>()?;
    report.insert("markov_checks".into(), Value::Array(checks));
    report.insert("effective_rate".into(), real(code.rate()));
    report.insert("n".into(), json!(n));
    report.insert("code_size".into(), json!(code.len()));
    report.insert("codebook".into(), json!(code.to_lines().lines().collect::<Vec<_>>()));
    report.insert("config".into(), config_value(config));
    if let Some(p) = codebook_out {
        emit(Some(p), &code.to_lines())?;
    }
    emit(config.output.path.as_deref(), &pretty(&Value::Object(report)))
}
