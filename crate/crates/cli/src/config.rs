//! Run configuration: a TOML file plus command-line overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use oamsim_core::io::parse_seed;
use oamsim_core::photonsim::Control;
use oamsim_core::{BasisSpec, GateKind, NoiseModel, SourceSpec};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::CliError;

/// Gate averages used by `--calibrated`: X, X^2, X^dag.
pub const REFERENCE_AVERAGES: [f64; 3] = [0.9366, 0.9347, 0.9289];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    #[default]
    VerifyGates,
    Table1,
    Bases,
    Controlled,
    CustomCircuit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Everything one invocation needs. Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(with = "via_str")]
    pub gate: GateKind,
    /// Test basis index, 1..=7.
    pub basis: usize,
    #[serde(with = "via_str")]
    pub control: Control,
    /// Decimal or `0x` hex; falls back to `OAMSIM_SEED`, then 0.
    #[serde(with = "seed_str", skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub format: Format,
    pub out: PathBuf,
    /// Inclusive OAM window `[min, max]`.
    pub window: [i32; 2],
    pub dove_angle_deg: f64,
    /// Circuit JSON for `custom-circuit`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circuit: Option<PathBuf>,
    /// When set, coupling and preparation efficiencies are fitted to these
    /// X, X^2, X^dag averages and replace those in `noise`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibrate_targets: Option<[f64; 3]>,
    pub source: SourceSpec,
    pub noise: NoiseModel,
}

impl Default for RunConfig {
    fn default() -> Self {
        let b = BasisSpec::default();
        Self {
            scenario: Scenario::default(),
            gate: GateKind::X,
            basis: 2,
            control: Control::H,
            seed: None,
            format: Format::default(),
            out: PathBuf::from("oamsim-out"),
            window: [b.oam_min(), b.oam_max()],
            dove_angle_deg: 45.0,
            circuit: None,
            calibrate_targets: None,
            source: SourceSpec::default(),
            noise: NoiseModel::ideal(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(1..=7).contains(&self.basis) {
            return bad(format!("basis must be in 1..=7, got {}", self.basis));
        }
        if self.window[0] > self.window[1] {
            return bad(format!("window {:?} is empty", self.window));
        }
        if !self.dove_angle_deg.is_finite() {
            return bad("dove_angle_deg must be finite".into());
        }
        if self.scenario == Scenario::CustomCircuit && self.circuit.is_none() {
            return bad("custom-circuit needs `circuit`".into());
        }
        self.source.validate().map_err(CliError::config)?;
        self.noise.validate().map_err(CliError::config)?;
        Ok(())
    }

    /// Seed from the config, else `env_seed`, else 0.
    pub fn effective_seed(&self, env_seed: Option<&str>) -> Result<u64, CliError> {
        match (self.seed, env_seed) {
            (Some(s), _) => Ok(s),
            (None, Some(text)) => parse_seed(text).map_err(|e| CliError::Config(format!("OAMSIM_SEED: {e}"))),
            (None, None) => Ok(0),
        }
    }

    pub fn basis_spec(&self, paths: u8) -> Result<BasisSpec, CliError> {
        BasisSpec::new(self.window[0], self.window[1], paths, true).map_err(CliError::config)
    }
}

mod via_str {
    use super::*;

    pub fn serialize<T: fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: fmt::Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

mod seed_str {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(u64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(seed) => s.collect_str(seed),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(Some(n)),
            Raw::Text(t) => parse_seed(&t).map(Some).map_err(serde::de::Error::custom),
        }
    }
}

/// Command-line interface. Flags override values from `--config`.
#[derive(Debug, Parser)]
#[command(name = "oamsim", version, about = "Simulate and verify four-dimensional OAM cyclic gates")]
pub struct Args {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub scenario: Option<Scenario>,
    /// x, x2 or xdag.
    #[arg(long)]
    pub gate: Option<String>,
    /// Test basis index 1..=7.
    #[arg(long)]
    pub basis: Option<usize>,
    /// Control polarization for `controlled`: h or diagonal.
    #[arg(long)]
    pub control: Option<String>,
    /// Decimal or 0x-hex seed.
    #[arg(long)]
    pub seed: Option<String>,
    /// TOML noise model replacing the configured one.
    #[arg(long)]
    pub noise_file: Option<PathBuf>,
    /// Fit coupling and preparation efficiencies to the reference averages.
    #[arg(long)]
    pub calibrated: bool,
    /// Output directory for tables and the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// OAM window as MIN,MAX.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub window: Option<Vec<i32>>,
    /// Dove-prism angle of the parity sorter, degrees.
    #[arg(long, allow_negative_numbers = true)]
    pub dove_angle: Option<f64>,
    /// Circuit JSON for `custom-circuit`.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    pub print_config: bool,
}

impl Args {
    /// Config file (if any) with every given flag applied on top.
    pub fn resolve(&self, env_seed: Option<&str>) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_toml(&read(path)?)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.scenario {
            cfg.scenario = s;
        }
        if let Some(g) = &self.gate {
            cfg.gate = g.parse().map_err(CliError::config)?;
        }
        if let Some(b) = self.basis {
            cfg.basis = b;
        }
        if let Some(c) = &self.control {
            cfg.control = c.parse().map_err(CliError::config)?;
        }
        if let Some(s) = &self.seed {
            cfg.seed = Some(parse_seed(s).map_err(CliError::config)?);
        }
        if cfg.seed.is_none() {
            cfg.seed = Some(cfg.effective_seed(env_seed)?);
        }
        if let Some(path) = &self.noise_file {
            cfg.noise = toml::from_str(&read(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        }
        if self.calibrated {
            cfg.calibrate_targets = Some(REFERENCE_AVERAGES);
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        if let Some(w) = &self.window {
            let [lo, hi] = w[..] else {
                return Err(CliError::Config(format!("--window takes MIN,MAX, got {w:?}")));
            };
            cfg.window = [lo, hi];
        }
        if let Some(a) = self.dove_angle {
            cfg.dove_angle_deg = a;
        }
        if let Some(c) = &self.circuit {
            cfg.circuit = Some(c.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
