//! Run configuration: one JSON file, with scalar fields overridable from the
//! command line.

use std::path::{Path, PathBuf};

use gld_core::measures::{Channel, ChannelFile, Distribution};
use gld_core::metrics::{MetricConfig, MetricSpec};
use gld_core::optimizer::GridSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A channel given by file path (relative to the config file) or inline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelSource {
    Path(PathBuf),
    Inline(ChannelFile),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRange {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl RateRange {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.start.is_finite() && self.end.is_finite() && self.start >= 0.0) {
            return Err(CliError::Input("rate range must be finite and nonnegative".into()));
        }
        if self.start > self.end {
            return Err(CliError::Input(format!(
                "rate range start {} exceeds end {}",
                self.start, self.end
            )));
        }
        if !(self.step > 0.0) {
            return Err(CliError::Input(format!("rate step must be > 0, got {}", self.step)));
        }
        Ok(())
    }

    /// `start + i * step` for every `i` with the point at most `end`.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n: Option<usize>,
    /// Code size; defaults to `max(2, round(e^{nR}))`.
    #[serde(rename = "M", alias = "m")]
    pub m: Option<usize>,
    pub trials: Option<u64>,
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Explicit codewords, one space-separated symbol string each.
    pub codewords: Option<Vec<String>>,
    pub rho: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub channel: ChannelSource,
    pub metric: MetricConfig,
    /// `Q_X`; uniform when absent.
    pub composition: Option<Vec<f64>>,
    pub rate: Option<f64>,
    pub rates: Option<RateRange>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    pub rho_max: Option<f64>,
    pub simulation: Option<SimConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_resolution() -> usize {
    16
}

/// Validated objects built from a [`RunConfig`].
pub struct Resolved {
    pub channel: Channel,
    pub metric: MetricSpec,
    pub composition: Distribution,
    pub grid: GridSpec,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        // Inline the channel so the echoed config is self-contained.
        if let ChannelSource::Path(p) = &config.channel {
            let full = match path.parent() {
                Some(dir) if p.is_relative() => dir.join(p),
                _ => p.clone(),
            };
            let text = std::fs::read_to_string(&full)
                .map_err(|e| CliError::Input(format!("cannot read channel {}: {e}", full.display())))?;
            let file: ChannelFile = serde_json::from_str(&text)
                .map_err(|e| CliError::Input(format!("channel {}: {e}", full.display())))?;
            config.channel = ChannelSource::Inline(file);
        }
        Ok(config)
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        if self.resolution < 2 {
            return Err(CliError::Input(format!("resolution must be >= 2, got {}", self.resolution)));
        }
        if let Some(r) = &self.rates {
            r.validate()?;
        }
        if let Some(r) = self.rate {
            if !(r.is_finite() && r >= 0.0) {
                return Err(CliError::Input(format!("rate must be finite and >= 0, got {r}")));
            }
        }
        let file = match &self.channel {
            ChannelSource::Inline(f) => f,
            ChannelSource::Path(p) => {
                return Err(CliError::Input(format!("channel {} was not loaded", p.display())))
            }
        };
        let channel = Channel::from_file(file)?;
        let metric = MetricSpec::from_config(&self.metric, &channel)?;
        let composition = match &self.composition {
            Some(p) => Distribution::new(p.clone())?,
            None => Distribution::uniform(channel.input_size()),
        };
        Ok(Resolved {
            channel,
            metric,
            composition,
            grid: GridSpec::new(self.resolution),
        })
    }

    pub fn single_rate(&self) -> Result<f64, CliError> {
        self.rate
            .ok_or_else(|| CliError::Input("config has no `rate` (give one or pass --rate)".into()))
    }

    pub fn rate_points(&self) -> Result<Vec<f64>, CliError> {
        match (&self.rates, self.rate) {
            (Some(r), _) => {
                r.validate()?;
                Ok(r.points())
            }
            (None, Some(r)) => Ok(vec![r]),
            (None, None) => Err(CliError::Input("config has no `rates` range".into())),
        }
    }
}
