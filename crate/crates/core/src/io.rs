//! JSON and CSV documents for states, matrices, charts, distributions, sweeps and experiments.
//!
//! Every floating-point value in a machine-readable document is written with 17 significant digits in
//! scientific notation (`{:.16e}`), which identifies an `f64` uniquely. Parsing a document and writing
//! it again therefore reproduces the original bytes.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::Deserializer;
use serde::ser::{Error as _, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::crb::{BoundReport, SweepRow};
use crate::error::{Error, Result};
use crate::fisher::{Chart, FisherKind, FisherMatrix, FisherMeta};
use crate::ghz_state::{KetLabel, PhaseVector, Polarization, SparseKetState};
use crate::measurement::OutcomeDistribution;
use crate::montecarlo::SaturationReport;
use crate::reparam::{self, InverseCheck, ReparamKind, Reparametrization};

/// 17 significant digits, scientific notation.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// `f64` that serializes with 17 significant digits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(S::Error::custom(format!("non-finite value {}", self.0)));
        }
        RawValue::from_string(fmt17(self.0)).map_err(S::Error::custom)?.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Sig17 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(deserializer).map(Sig17)
    }
}

fn sig(values: &[f64]) -> Vec<Sig17> {
    values.iter().copied().map(Sig17).collect()
}

fn unsig(values: &[Sig17]) -> Vec<f64> {
    values.iter().map(|v| v.0).collect()
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<Sig17>> {
    m.row_iter().map(|r| r.iter().copied().map(Sig17).collect()).collect()
}

fn rows_matrix(rows: &[Vec<Sig17>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Format("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j].0))
}

/// Pretty JSON followed by a newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermDoc {
    pub pair: [usize; 2],
    pub pol: Polarization,
    pub re: Sig17,
    pub im: Sig17,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StateDoc {
    #[serde(rename = "N")]
    pub photons: usize,
    pub d: usize,
    pub terms: Vec<TermDoc>,
}

impl StateDoc {
    pub fn from_state(state: &SparseKetState) -> Self {
        let terms = state
            .terms()
            .map(|(label, amp)| {
                let (a, b) = label.pair();
                TermDoc { pair: [a, b], pol: label.polarization(), re: Sig17(amp.re), im: Sig17(amp.im) }
            })
            .collect();
        Self { photons: state.photons(), d: state.nodes(), terms }
    }

    pub fn to_state(&self) -> Result<SparseKetState> {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let label = KetLabel::from_pair((t.pair[0], t.pair[1]), self.d, t.pol)?;
                Ok((label, Complex64::new(t.re.0, t.im.0)))
            })
            .collect::<Result<Vec<_>>>()?;
        SparseKetState::from_terms(self.photons, self.d, terms)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FisherDoc {
    pub kind: String,
    pub chart: String,
    pub drop_irrelevant: bool,
    #[serde(rename = "N")]
    pub photons: usize,
    pub d: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub phases: Option<Vec<Sig17>>,
    pub labels: Vec<String>,
    pub entries: Vec<Vec<Sig17>>,
}

/// Build a chart from its name (`original`, `mc`, `d4-orthogonal`).
pub fn chart_from_name(name: &str, d: usize, drop_irrelevant: bool) -> Result<Chart> {
    let reparam = match name {
        "original" => return Ok(Chart::Original),
        "mc" => reparam::build_mc(d)?,
        "d4-orthogonal" => {
            if d != 4 {
                return Err(Error::InvalidArgument(format!("the d4-orthogonal chart needs d = 4, got {d}")));
            }
            reparam::build_orthogonal_d4()
        }
        other => return Err(Error::Format(format!("unknown chart '{other}'"))),
    };
    Ok(Chart::Transformed { reparam: Arc::new(reparam), drop_irrelevant })
}

impl FisherDoc {
    pub fn from_fisher(f: &FisherMatrix) -> Self {
        Self {
            kind: f.kind().name().to_string(),
            chart: f.chart().name().to_string(),
            drop_irrelevant: f.chart().drops_irrelevant(),
            photons: f.meta().photons,
            d: f.meta().nodes,
            phases: f.meta().phases.as_ref().map(|p| sig(p.as_slice())),
            labels: f.labels(),
            entries: matrix_rows(f.entries()),
        }
    }

    pub fn to_fisher(&self) -> Result<FisherMatrix> {
        let kind = match self.kind.as_str() {
            "quantum" => FisherKind::Quantum,
            "classical" => FisherKind::Classical,
            other => return Err(Error::Format(format!("unknown Fisher kind '{other}'"))),
        };
        let chart = chart_from_name(&self.chart, self.d, self.drop_irrelevant)?;
        let meta = FisherMeta {
            photons: self.photons,
            nodes: self.d,
            phases: self.phases.as_ref().map(|p| PhaseVector::new(unsig(p))),
        };
        FisherMatrix::new(rows_matrix(&self.entries)?, kind, chart, meta)
    }
}

/// Row-major CSV with a header of parameter labels.
pub fn matrix_to_csv(m: &DMatrix<f64>, labels: &[String]) -> String {
    let mut out = labels.join(",");
    out.push('\n');
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| fmt17(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn fisher_to_csv(f: &FisherMatrix) -> String {
    matrix_to_csv(f.entries(), &f.labels())
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReparamDoc {
    pub kind: ReparamKind,
    pub d: usize,
    pub labels: Vec<String>,
    pub forward: Vec<Vec<Sig17>>,
    pub inverse: Vec<Vec<Sig17>>,
}

impl ReparamDoc {
    pub fn from_reparam(r: &Reparametrization) -> Self {
        Self {
            kind: r.kind(),
            d: r.dim(),
            labels: r.labels().to_vec(),
            forward: matrix_rows(r.forward()),
            inverse: matrix_rows(r.inverse()),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct InverseCheckDoc {
    pub d: usize,
    pub max_discrepancy: Sig17,
    pub identity_residual: Sig17,
    pub column_discrepancy: Vec<(String, Sig17)>,
    pub closed_form: Vec<Vec<Sig17>>,
    pub numerical: Vec<Vec<Sig17>>,
}

impl InverseCheckDoc {
    pub fn from_check(c: &InverseCheck) -> Self {
        Self {
            d: c.d,
            max_discrepancy: Sig17(c.max_discrepancy),
            identity_residual: Sig17(c.identity_residual),
            column_discrepancy: c.column_discrepancy.iter().map(|(l, v)| (l.clone(), Sig17(*v))).collect(),
            closed_form: matrix_rows(&c.closed_form),
            numerical: matrix_rows(&c.numerical),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OutcomeDoc {
    pub pair: [usize; 2],
    pub pattern: String,
    pub probability: Sig17,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DistributionDoc {
    #[serde(rename = "N")]
    pub photons: usize,
    pub d: usize,
    pub phases: Vec<Sig17>,
    pub outcomes: Vec<OutcomeDoc>,
}

impl DistributionDoc {
    pub fn from_distribution(dist: &OutcomeDistribution) -> Self {
        let d = dist.nodes();
        let outcomes = dist
            .iter()
            .map(|(label, p)| {
                let (a, b) = label.nodes(d);
                OutcomeDoc { pair: [a, b], pattern: label.pattern.symbol().to_string(), probability: Sig17(p) }
            })
            .collect();
        Self { photons: dist.photons(), d, phases: sig(dist.phases().as_slice()), outcomes }
    }
}

/// CSV rows `pair,pattern,probability` with the pair written as `j-k`.
pub fn distribution_to_csv(dist: &OutcomeDistribution) -> String {
    let mut out = String::from("pair,pattern,probability\n");
    for (label, p) in dist.iter() {
        let (a, b) = label.nodes(dist.nodes());
        let _ = writeln!(out, "{a}-{b},{},{}", label.pattern.symbol(), fmt17(p));
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SweepRowDoc {
    #[serde(rename = "N")]
    pub photons: usize,
    pub d: usize,
    pub qcrb: Sig17,
    pub ccrb: Sig17,
    pub ratio: Sig17,
}

pub fn sweep_to_docs(rows: &[SweepRow]) -> Vec<SweepRowDoc> {
    rows.iter()
        .map(|r| SweepRowDoc {
            photons: r.photons,
            d: r.nodes,
            qcrb: Sig17(r.qcrb),
            ccrb: Sig17(r.ccrb),
            ratio: Sig17(r.ratio),
        })
        .collect()
}

/// Long-format CSV with header `N,d,qcrb,ccrb,ratio`.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("N,d,qcrb,ccrb,ratio\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.photons, r.nodes, fmt17(r.qcrb), fmt17(r.ccrb), fmt17(r.ratio));
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BoundDoc {
    pub kind: String,
    pub chart: String,
    #[serde(rename = "N")]
    pub photons: usize,
    pub d: usize,
    pub alpha: Vec<Sig17>,
    pub shots: u64,
    pub exact_bound: Option<Sig17>,
    pub exact_unavailable: Option<String>,
    pub weak_bound: Option<Sig17>,
    pub weak_unavailable: Option<String>,
    pub equality_gap: Option<Sig17>,
}

impl BoundDoc {
    pub fn from_report(r: &BoundReport) -> Self {
        Self {
            kind: r.provenance.kind.name().to_string(),
            chart: r.provenance.chart.to_string(),
            photons: r.provenance.photons,
            d: r.provenance.nodes,
            alpha: sig(r.weight.as_slice()),
            shots: r.shots,
            exact_bound: r.exact_bound.map(Sig17),
            exact_unavailable: r.exact_unavailable.clone(),
            weak_bound: r.weak_bound.map(Sig17),
            weak_unavailable: r.weak_unavailable.clone(),
            equality_gap: r.equality_gap().map(Sig17),
        }
    }
}

pub fn bound_to_csv(r: &BoundReport) -> String {
    let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
    format!(
        "kind,chart,N,d,shots,exact_bound,weak_bound,equality_gap\n{},{},{},{},{},{},{},{}\n",
        r.provenance.kind,
        r.provenance.chart,
        r.provenance.photons,
        r.provenance.nodes,
        r.shots,
        opt(r.exact_bound),
        opt(r.weak_bound),
        opt(r.equality_gap())
    )
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfigDoc {
    #[serde(rename = "N")]
    pub photons: usize,
    pub d: usize,
    pub phases: Vec<Sig17>,
    pub shots: u64,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReplicateDoc {
    pub replicate: usize,
    pub theta: Vec<Sig17>,
    pub log_likelihood: Sig17,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExperimentSummaryDoc {
    pub mean_theta1: Sig17,
    pub variance_theta1: Sig17,
    pub bias: Sig17,
    pub mean_standard_error: Sig17,
    pub bound: Sig17,
    pub ratio: Sig17,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExperimentDoc {
    pub config: ExperimentConfigDoc,
    pub true_theta: Vec<Sig17>,
    pub summary: ExperimentSummaryDoc,
    pub replicates: Vec<ReplicateDoc>,
}

impl ExperimentDoc {
    pub fn from_report(r: &SaturationReport) -> Self {
        let c = &r.config;
        Self {
            config: ExperimentConfigDoc {
                photons: c.photons,
                d: c.nodes,
                phases: sig(c.phases.as_slice()),
                shots: c.shots,
                replicates: c.replicates,
                seed: c.seed,
            },
            true_theta: sig(&r.true_theta),
            summary: ExperimentSummaryDoc {
                mean_theta1: Sig17(r.mean_theta1),
                variance_theta1: Sig17(r.variance_theta1),
                bias: Sig17(r.bias),
                mean_standard_error: Sig17(r.mean_standard_error),
                bound: Sig17(r.bound),
                ratio: Sig17(r.ratio),
            },
            replicates: r
                .estimates
                .iter()
                .enumerate()
                .map(|(i, e)| ReplicateDoc {
                    replicate: i,
                    theta: sig(&e.theta),
                    log_likelihood: Sig17(e.log_likelihood),
                    iterations: e.iterations,
                })
                .collect(),
        }
    }
}

/// One-row CSV summary of a saturation experiment.
pub fn experiment_summary_csv(r: &SaturationReport) -> String {
    let c = &r.config;
    format!(
        "N,d,shots,replicates,seed,mean_theta1,variance_theta1,bound,ratio,bias\n{},{},{},{},{},{},{},{},{},{}\n",
        c.photons,
        c.nodes,
        c.shots,
        c.replicates,
        c.seed,
        fmt17(r.mean_theta1),
        fmt17(r.variance_theta1),
        fmt17(r.bound),
        fmt17(r.ratio),
        fmt17(r.bias)
    )
}
