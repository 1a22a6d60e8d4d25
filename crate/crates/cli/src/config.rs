//! Run configuration: command-line flags layered over an optional TOML file.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ghz_metrology::PhaseVector;
use serde::Deserialize;

/// Environment variable naming the default directory for machine outputs.
pub const OUT_DIR_ENV: &str = "GHZ_SENSE_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    State,
    Qfim,
    Cfim,
    Transform,
    Bounds,
    Sweep,
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::State => "state",
            Command::Qfim => "qfim",
            Command::Cfim => "cfim",
            Command::Transform => "transform",
            Command::Bounds => "bounds",
            Command::Sweep => "sweep",
            Command::Simulate => "simulate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartName {
    Original,
    Mc,
    D4Orthogonal,
}

impl ChartName {
    pub fn as_str(self) -> &'static str {
        match self {
            ChartName::Original => "original",
            ChartName::Mc => "mc",
            ChartName::D4Orthogonal => "d4-orthogonal",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindName {
    Quantum,
    Classical,
}

/// Validation failure; maps to exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Flags shared by every subcommand. Anything left unset falls back to the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// TOML file with the same keys as the flags; flags win on conflict.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Photon number N (comma-separated list for sweep).
    #[arg(long = "N", value_name = "N")]
    pub photons: Option<String>,

    /// Node count d (comma-separated list for sweep).
    #[arg(long = "d", value_name = "D")]
    pub nodes: Option<String>,

    /// `uniform:<value>` or a comma-separated list of d phases.
    #[arg(long, allow_hyphen_values = true)]
    pub phases: Option<String>,

    #[arg(long, value_enum)]
    pub chart: Option<ChartName>,

    /// Keep the irrelevant coordinate θ₀ in transformed charts.
    #[arg(long)]
    pub keep_irrelevant: bool,

    #[arg(long, value_enum)]
    pub kind: Option<KindName>,

    /// `avg`, a chart parameter label such as `theta1`, or a comma-separated weight list.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,

    #[arg(long)]
    pub shots: Option<u64>,

    #[arg(long)]
    pub replicates: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Output file, or `-` for stdout. Defaults to `<command>.<ext>` in $GHZ_SENSE_OUT_DIR or the working directory.
    #[arg(long)]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Treat an unavailable exact bound as an error.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(untagged)]
enum IntsValue {
    #[default]
    Missing,
    One(usize),
    Many(Vec<usize>),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum FloatsValue {
    Many(Vec<f64>),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<Command>,
    #[serde(rename = "N", default)]
    photons: IntsValue,
    #[serde(default)]
    d: IntsValue,
    phases: Option<FloatsValue>,
    chart: Option<ChartName>,
    keep_irrelevant: Option<bool>,
    kind: Option<KindName>,
    alpha: Option<FloatsValue>,
    shots: Option<u64>,
    replicates: Option<usize>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    format: Option<Format>,
    strict: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PhaseSpec {
    Uniform(f64),
    List(Vec<f64>),
}

impl PhaseSpec {
    pub fn resolve(&self, d: usize) -> Result<PhaseVector, ConfigError> {
        match self {
            PhaseSpec::Uniform(v) => Ok(PhaseVector::uniform(d, *v)),
            PhaseSpec::List(values) if values.len() == d => Ok(PhaseVector::new(values.clone())),
            PhaseSpec::List(values) => Err(invalid(format!("--phases lists {} values but d = {d}", values.len()))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AlphaSpec {
    Average,
    Label(String),
    List(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Destination {
    Stdout,
    File(PathBuf),
}

/// Fully merged and validated configuration for one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub photons: Vec<usize>,
    pub nodes: Vec<usize>,
    pub phases: Option<PhaseSpec>,
    pub chart: ChartName,
    pub keep_irrelevant: bool,
    pub kind: KindName,
    pub alpha: AlphaSpec,
    pub shots: u64,
    pub replicates: usize,
    pub seed: u64,
    pub destination: Destination,
    pub format: Format,
    pub strict: bool,
}

impl RunConfig {
    pub fn n(&self) -> usize {
        self.photons[0]
    }

    pub fn d(&self) -> usize {
        self.nodes[0]
    }

    pub fn phase_vector(&self) -> Result<PhaseVector, ConfigError> {
        let spec = self.phases.as_ref().ok_or_else(|| invalid(format!("{} needs --phases", self.command.name())))?;
        spec.resolve(self.d())
    }
}

fn parse_ints(flag: &str, text: &str) -> Result<Vec<usize>, ConfigError> {
    text.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| invalid(format!("{flag}: '{s}' is not a non-negative integer"))))
        .collect()
}

fn parse_floats(flag: &str, text: &str) -> Result<Vec<f64>, ConfigError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| invalid(format!("{flag}: '{s}' is not a finite number")))
        })
        .collect()
}

fn parse_phases(text: &str) -> Result<PhaseSpec, ConfigError> {
    match text.strip_prefix("uniform:") {
        Some(v) => {
            let v = parse_floats("--phases", v)?;
            match v.as_slice() {
                [x] => Ok(PhaseSpec::Uniform(*x)),
                _ => Err(invalid("--phases uniform:<value> takes exactly one value")),
            }
        }
        None => Ok(PhaseSpec::List(parse_floats("--phases", text)?)),
    }
}

fn parse_alpha(text: &str) -> Result<AlphaSpec, ConfigError> {
    let text = text.trim();
    if text == "avg" {
        return Ok(AlphaSpec::Average);
    }
    if text.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
        return Ok(AlphaSpec::Label(text.to_string()));
    }
    Ok(AlphaSpec::List(parse_floats("--alpha", text)?))
}

fn ints_from_file(key: &str, value: IntsValue) -> Result<Option<Vec<usize>>, ConfigError> {
    match value {
        IntsValue::Missing => Ok(None),
        IntsValue::One(v) => Ok(Some(vec![v])),
        IntsValue::Many(v) => Ok(Some(v)),
        IntsValue::Text(t) => parse_ints(key, &t).map(Some),
    }
}

fn read_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read config file {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| invalid(format!("config file {}: {e}", path.display())))
}

fn default_destination(command: Command, format: Format) -> PathBuf {
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    dir.join(format!("{}.{}", command.name(), format.extension()))
}

/// Merge flags over the optional config file and validate what `command` requires.
pub fn resolve(command: Command, flags: &Flags) -> Result<RunConfig, ConfigError> {
    let file = match &flags.config {
        Some(path) => read_file(path)?,
        None => FileConfig::default(),
    };
    if let Some(c) = file.command {
        if c != command {
            return Err(invalid(format!("config file is for '{}' but '{}' was requested", c.name(), command.name())));
        }
    }

    let photons = match &flags.photons {
        Some(t) => Some(parse_ints("--N", t)?),
        None => ints_from_file("N", file.photons)?,
    };
    let nodes = match &flags.nodes {
        Some(t) => Some(parse_ints("--d", t)?),
        None => ints_from_file("d", file.d)?,
    };
    let phases = match (&flags.phases, file.phases) {
        (Some(t), _) => Some(parse_phases(t)?),
        (None, Some(FloatsValue::Text(t))) => Some(parse_phases(&t)?),
        (None, Some(FloatsValue::Many(v))) => Some(PhaseSpec::List(v)),
        // the transformed matrices do not depend on φ
        (None, None) if command == Command::Transform => Some(PhaseSpec::Uniform(0.0)),
        (None, None) => None,
    };
    let alpha = match (&flags.alpha, file.alpha) {
        (Some(t), _) => parse_alpha(t)?,
        (None, Some(FloatsValue::Text(t))) => parse_alpha(&t)?,
        (None, Some(FloatsValue::Many(v))) => AlphaSpec::List(v),
        (None, None) => AlphaSpec::Average,
    };
    let default_chart = if command == Command::Transform { ChartName::Mc } else { ChartName::Original };
    let default_kind = if command == Command::Bounds { KindName::Classical } else { KindName::Quantum };
    let default_format = if command == Command::Sweep { Format::Csv } else { Format::Json };
    let format = flags.format.or(file.format).unwrap_or(default_format);
    let destination = match flags.output.clone().or(file.output) {
        Some(p) if p.as_os_str() == "-" => Destination::Stdout,
        Some(p) => Destination::File(p),
        None => Destination::File(default_destination(command, format)),
    };

    let photons = photons.ok_or_else(|| invalid(format!("{} needs --N", command.name())))?;
    let nodes = nodes.ok_or_else(|| invalid(format!("{} needs --d", command.name())))?;
    let config = RunConfig {
        command,
        photons,
        nodes,
        phases,
        chart: flags.chart.or(file.chart).unwrap_or(default_chart),
        keep_irrelevant: flags.keep_irrelevant || file.keep_irrelevant.unwrap_or(false),
        kind: flags.kind.or(file.kind).unwrap_or(default_kind),
        alpha,
        shots: flags.shots.or(file.shots).unwrap_or(if command == Command::Simulate { 100_000 } else { 1 }),
        replicates: flags.replicates.or(file.replicates).unwrap_or(200),
        seed: flags.seed.or(file.seed).unwrap_or(0),
        destination,
        format,
        strict: flags.strict || file.strict.unwrap_or(false),
    };
    validate(&config)?;
    Ok(config)
}

fn validate(c: &RunConfig) -> Result<(), ConfigError> {
    let name = c.command.name();
    if c.photons.is_empty() || c.nodes.is_empty() {
        return Err(invalid(format!("{name}: --N and --d must not be empty")));
    }
    if c.command != Command::Sweep && (c.photons.len() != 1 || c.nodes.len() != 1) {
        return Err(invalid(format!("{name} takes a single N and a single d; lists are for sweep")));
    }
    if let Some(&n) = c.photons.iter().find(|&&n| n < 2 || n % 2 != 0) {
        return Err(invalid(format!("N must be even and at least 2, got {n}")));
    }
    if let Some(&d) = c.nodes.iter().find(|&&d| d < 3) {
        return Err(invalid(format!("d must be at least 3, got {d}")));
    }
    let needs_even_d = matches!(c.command, Command::Transform | Command::Sweep | Command::Simulate)
        || c.chart != ChartName::Original;
    if needs_even_d {
        if let Some(&d) = c.nodes.iter().find(|&&d| d % 2 != 0 || d < 4) {
            return Err(invalid(format!("{name} needs an even d ≥ 4 for the transformed chart, got {d}")));
        }
    }
    if c.chart == ChartName::D4Orthogonal && c.d() != 4 {
        return Err(invalid(format!("the d4-orthogonal chart needs d = 4, got {}", c.d())));
    }
    if c.command == Command::Transform && c.chart == ChartName::Original {
        return Err(invalid("transform needs --chart mc or --chart d4-orthogonal"));
    }
    if matches!(c.command, Command::Qfim | Command::Cfim | Command::Bounds | Command::Simulate | Command::State)
        && c.phases.is_none()
    {
        return Err(invalid(format!("{name} needs --phases")));
    }
    if let Some(spec) = &c.phases {
        if c.command != Command::Sweep {
            spec.resolve(c.d())?;
        }
    }
    if c.shots == 0 {
        return Err(invalid("--shots must be at least 1"));
    }
    if c.command == Command::Simulate && c.replicates < ghz_metrology::montecarlo::MIN_REPLICATES {
        return Err(invalid(format!(
            "simulate needs --replicates ≥ {}, got {}",
            ghz_metrology::montecarlo::MIN_REPLICATES,
            c.replicates
        )));
    }
    Ok(())
}
