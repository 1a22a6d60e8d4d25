//! One function per subcommand. Each returns the machine-readable artifact and a human summary.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use ghz_metrology::crb::{self, WeightVector};
use ghz_metrology::io::{self, fmt17, BoundDoc, ExperimentDoc, FisherDoc, InverseCheckDoc, ReparamDoc, StateDoc};
use ghz_metrology::montecarlo::{self, ExperimentConfig};
use ghz_metrology::qfim::{self, DEFAULT_RANK_TOL};
use ghz_metrology::reparam::{self, ReparamKind};
use ghz_metrology::{ghz_state, measurement, Chart, FisherMatrix};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::{AlphaSpec, ChartName, Command, ConfigError, Format, KindName, RunConfig};

/// Raised by `bounds --strict` when the exact bound needs an inverse that does not exist.
#[derive(Debug)]
pub struct SingularBound(pub String);

impl std::fmt::Display for SingularBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exact bound unavailable: {}", self.0)
    }
}

impl std::error::Error for SingularBound {}

pub struct Artifacts {
    pub machine: String,
    /// Companion files written next to the main output (path suffix, contents).
    pub extra: Vec<(String, String)>,
    pub summary: String,
}

impl Artifacts {
    fn new(machine: String, summary: String) -> Self {
        Self { machine, extra: Vec::new(), summary }
    }
}

pub fn run(config: &RunConfig) -> Result<Artifacts> {
    match config.command {
        Command::State => state(config),
        Command::Qfim => fisher_command(config, KindName::Quantum),
        Command::Cfim => fisher_command(config, KindName::Classical),
        Command::Transform => transform(config),
        Command::Bounds => bounds(config),
        Command::Sweep => sweep(config),
        Command::Simulate => simulate(config),
    }
}

/// Six significant digits for human-facing output.
pub fn fmt6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
        if s == "-0" { "0".into() } else { s }
    } else {
        format!("{x:.5e}")
    }
}

fn matrix_table(m: &DMatrix<f64>, rows: &[String], cols: &[String]) -> String {
    let cells: Vec<Vec<String>> = m.row_iter().map(|r| r.iter().map(|v| fmt6(*v)).collect()).collect();
    let width = cells.iter().flatten().chain(cols).map(|s| s.chars().count()).max().unwrap_or(1);
    let label_width = rows.iter().map(|s| s.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    let _ = write!(out, "{:label_width$}", "");
    for l in cols {
        let _ = write!(out, "  {l:>width$}");
    }
    out.push('\n');
    for (label, row) in rows.iter().zip(&cells) {
        let _ = write!(out, "{label:label_width$}");
        for c in row {
            let _ = write!(out, "  {c:>width$}");
        }
        out.push('\n');
    }
    out
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(io::to_json(value)?)
}

fn chart_for(config: &RunConfig) -> Result<Chart> {
    Ok(io::chart_from_name(config.chart.as_str(), config.d(), !config.keep_irrelevant)?)
}

fn fisher_for(config: &RunConfig, kind: KindName, chart: &Chart) -> Result<FisherMatrix> {
    let phases = config.phase_vector()?;
    let f = match kind {
        KindName::Quantum => qfim::qfim_pure(config.n(), config.d(), &phases, chart)?,
        KindName::Classical => measurement::cfim(config.n(), config.d(), &phases, chart)?,
    };
    Ok(f)
}

fn describe_fisher(f: &FisherMatrix) -> String {
    let mut out = format!(
        "{} Fisher matrix, N = {}, d = {}, chart {}\n",
        f.kind(),
        f.meta().photons,
        f.meta().nodes,
        f.chart().name()
    );
    let labels = f.labels();
    out.push_str(&matrix_table(f.entries(), &labels, &labels));
    let report = qfim::rank_and_nullspace(f, DEFAULT_RANK_TOL);
    let status = if report.is_singular() { "singular" } else { "full rank" };
    let _ = writeln!(out, "rank {} of {} ({status})", report.rank, report.dim());
    for v in &report.null_basis {
        let entries: Vec<String> = v.iter().map(|x| fmt6(*x)).collect();
        let _ = writeln!(out, "null direction: ({})", entries.join(", "));
    }
    out
}

fn state(config: &RunConfig) -> Result<Artifacts> {
    let phases = config.phase_vector()?;
    let out = ghz_state::output_state(config.n(), config.d(), &phases)?;
    let machine = match config.format {
        Format::Json => json(&StateDoc::from_state(&out))?,
        Format::Csv => {
            let mut s = String::from("pair,pol,re,im\n");
            for (label, amp) in out.terms() {
                let (a, b) = label.pair();
                let _ = writeln!(s, "{a}-{b},{},{},{}", label.polarization(), fmt17(amp.re), fmt17(amp.im));
            }
            s
        }
    };
    let mut summary = format!("output state, N = {}, d = {}: {} terms\n", config.n(), config.d(), out.len());
    for (label, amp) in out.terms() {
        let sign = if amp.im < 0.0 { '-' } else { '+' };
        let _ = writeln!(summary, "  |{label}⟩  {} {sign} {}i", fmt6(amp.re), fmt6(amp.im.abs()));
    }
    let _ = writeln!(summary, "norm² = {}", fmt6(out.norm_sqr()));
    Ok(Artifacts::new(machine, summary))
}

fn fisher_command(config: &RunConfig, kind: KindName) -> Result<Artifacts> {
    let chart = chart_for(config)?;
    let f = fisher_for(config, kind, &chart)?;
    let machine = match config.format {
        Format::Json => json(&FisherDoc::from_fisher(&f))?,
        Format::Csv => io::fisher_to_csv(&f),
    };
    let mut summary = describe_fisher(&f);
    if kind == KindName::Classical && config.command == Command::Cfim {
        let dist = measurement::outcome_distribution(config.n(), config.d(), &config.phase_vector()?)?;
        let zero = dist.probabilities().iter().filter(|p| **p == 0.0).count();
        let _ = writeln!(summary, "{} outcomes, {zero} with zero probability", dist.probabilities().len());
    }
    Ok(Artifacts::new(machine, summary))
}

#[derive(Serialize)]
struct TransformDoc {
    reparam: ReparamDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    inverse_check: Option<InverseCheckDoc>,
    inverse_column_sums: Vec<io::Sig17>,
    fisher: FisherDoc,
}

fn transform(config: &RunConfig) -> Result<Artifacts> {
    let d = config.d();
    let r = match config.chart {
        ChartName::Mc => reparam::build_mc(d)?,
        ChartName::D4Orthogonal => reparam::build_orthogonal_d4(),
        ChartName::Original => bail!(ConfigError("transform needs a transformed chart".into())),
    };
    let chart = chart_for(config)?;
    let f = fisher_for(config, config.kind, &chart)?;
    let check = match r.kind() {
        ReparamKind::Mc => Some(reparam::closed_form_inverse_check(d)?),
        ReparamKind::D4Orthogonal => None,
    };
    let sums = r.inverse_column_sums();
    let machine = match config.format {
        Format::Json => json(&TransformDoc {
            reparam: ReparamDoc::from_reparam(&r),
            inverse_check: check.as_ref().map(InverseCheckDoc::from_check),
            inverse_column_sums: sums.iter().copied().map(io::Sig17).collect(),
            fisher: FisherDoc::from_fisher(&f),
        })?,
        Format::Csv => io::fisher_to_csv(&f),
    };
    let phi_labels: Vec<String> = (1..=d).map(|j| format!("phi{j}")).collect();
    let mut summary = format!("{} reparametrization, d = {d}\nforward (θ = M φ):\n", r.kind().name());
    summary.push_str(&matrix_table(r.forward(), r.labels(), &phi_labels));
    let sums: Vec<String> = sums.iter().map(|v| fmt6(*v)).collect();
    let _ = writeln!(summary, "inverse column sums: ({})", sums.join(", "));
    if let Some(c) = &check {
        let _ = writeln!(
            summary,
            "closed-form inverse vs numerical: max discrepancy {} (numerical inverse is used)",
            fmt6(c.max_discrepancy)
        );
    }
    summary.push_str(&describe_fisher(&f));
    Ok(Artifacts::new(machine, summary))
}

fn weights(config: &RunConfig, chart: &Chart) -> Result<WeightVector> {
    let d = config.d();
    let values = match &config.alpha {
        AlphaSpec::Average => chart.average_phase_weights(d)?,
        AlphaSpec::Label(label) => {
            let labels = chart.labels(d);
            let idx = labels.iter().position(|l| l == label).ok_or_else(|| {
                ConfigError(format!("--alpha {label} is not a parameter of the {} chart ({})", chart.name(), labels.join(", ")))
            })?;
            let mut v = vec![0.0; labels.len()];
            v[idx] = 1.0;
            v
        }
        AlphaSpec::List(v) => {
            let p = chart.param_count(d);
            if v.len() != p {
                bail!(ConfigError(format!("--alpha lists {} weights but the {} chart has {p} parameters", v.len(), chart.name())));
            }
            v.clone()
        }
    };
    Ok(WeightVector::new(values)?)
}

fn bounds(config: &RunConfig) -> Result<Artifacts> {
    let chart = chart_for(config)?;
    let f = fisher_for(config, config.kind, &chart)?;
    let alpha = weights(config, &chart)?;
    let report = crb::bound_report(&f, &alpha, config.shots)?;
    if config.strict {
        if let Some(why) = &report.exact_unavailable {
            bail!(SingularBound(why.clone()));
        }
    }
    let machine = match config.format {
        Format::Json => json(&BoundDoc::from_report(&report))?,
        Format::Csv => io::bound_to_csv(&report),
    };
    let alpha_text: Vec<String> = alpha.as_slice().iter().map(|v| fmt6(*v)).collect();
    let mut summary = format!(
        "{} Fisher matrix, N = {}, d = {}, chart {}, shots {}\nalpha = ({})\n",
        f.kind(),
        config.n(),
        config.d(),
        chart.name(),
        config.shots,
        alpha_text.join(", ")
    );
    match (report.weak_bound, &report.weak_unavailable) {
        (Some(v), _) => {
            let _ = writeln!(summary, "weak bound:  Var ≥ {}  (std ≥ {})", fmt6(v), fmt6(v.sqrt()));
        }
        (None, why) => {
            let _ = writeln!(summary, "weak bound:  unavailable ({})", why.as_deref().unwrap_or("unknown"));
        }
    }
    match (report.exact_bound, &report.exact_unavailable) {
        (Some(v), _) => {
            let _ = writeln!(summary, "exact bound: Var ≥ {}  (std ≥ {})", fmt6(v), fmt6(v.sqrt()));
        }
        (None, why) => {
            let _ = writeln!(
                summary,
                "exact bound: unavailable without reparametrization ({})",
                why.as_deref().unwrap_or("unknown")
            );
        }
    }
    if let Some(gap) = report.equality_gap() {
        let _ = writeln!(summary, "exact − weak = {}", fmt6(gap));
    }
    Ok(Artifacts::new(machine, summary))
}

fn sweep(config: &RunConfig) -> Result<Artifacts> {
    let rows = crb::heisenberg_sweep(&config.photons, &config.nodes)?;
    let machine = match config.format {
        Format::Json => json(&io::sweep_to_docs(&rows))?,
        Format::Csv => io::sweep_to_csv(&rows),
    };
    let mut summary = String::from("   N    d          qcrb          ccrb         ratio\n");
    for r in &rows {
        let _ = writeln!(
            summary,
            "{:>4} {:>4}  {:>12}  {:>12}  {:>12}",
            r.photons,
            r.nodes,
            fmt6(r.qcrb),
            fmt6(r.ccrb),
            fmt6(r.ratio)
        );
    }
    Ok(Artifacts::new(machine, summary))
}

fn simulate(config: &RunConfig) -> Result<Artifacts> {
    let cfg = ExperimentConfig::new(
        config.n(),
        config.d(),
        config.phase_vector()?,
        config.shots,
        config.replicates,
        config.seed,
    );
    let report = montecarlo::crb_saturation_experiment(&cfg).context("saturation experiment failed")?;
    let csv = io::experiment_summary_csv(&report);
    let mut artifacts = match config.format {
        Format::Json => {
            let mut a = Artifacts::new(json(&ExperimentDoc::from_report(&report))?, String::new());
            a.extra.push(("summary.csv".into(), csv));
            a
        }
        Format::Csv => Artifacts::new(csv, String::new()),
    };
    let theta: Vec<String> = report.true_theta.iter().map(|v| fmt6(*v)).collect();
    artifacts.summary = format!(
        "saturation experiment, N = {}, d = {}, shots {}, replicates {}, seed {}\n\
         true θ = ({})\n\
         mean θ̂₁ = {}  bias = {}  (standard error of mean {})\n\
         Var(θ̂₁) = {}  bound 1/(N²·shots) = {}\n\
         ratio Var/bound = {}\n",
        cfg.photons,
        cfg.nodes,
        cfg.shots,
        cfg.replicates,
        cfg.seed,
        theta.join(", "),
        fmt6(report.mean_theta1),
        fmt6(report.bias),
        fmt6(report.mean_standard_error),
        fmt6(report.variance_theta1),
        fmt6(report.bound),
        fmt6(report.ratio)
    );
    Ok(artifacts)
}

/// Path for a companion file: `out.json` + `summary.csv` → `out.summary.csv`.
pub fn companion_path(main: &std::path::Path, suffix: &str) -> PathBuf {
    let stem = main.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "output".into());
    main.with_file_name(format!("{stem}.{suffix}"))
}

pub fn ensure_parent_dir(path: &std::path::Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    Ok(())
}
