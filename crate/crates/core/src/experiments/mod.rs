//! Scaling experiments driven by a JSON plan, with CSV tables and a JSON
//! summary as output.

mod runners;
pub mod stats;

pub use runners::{flow_certificates, FlowCertificate, run_cover_scaling, run_flow_certificates, run_gff_scaling, run_grid_census, run_resistance_scaling};

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Resistance,
    Cover,
    Gff,
    Flow,
    Grid,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Resistance => "resistance",
            ExperimentKind::Cover => "cover",
            ExperimentKind::Gff => "gff",
            ExperimentKind::Flow => "flow",
            ExperimentKind::Grid => "grid",
        }
    }
}

/// Acceptance windows applied to fitted statistics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Windows {
    #[serde(default = "defaults::r2_min")]
    pub r2_min: f64,
    #[serde(default = "defaults::ratio_max")]
    pub ratio_max: f64,
    #[serde(default = "defaults::constant_factor")]
    pub constant_factor: f64,
}

impl Default for Windows {
    fn default() -> Self {
        Windows {
            r2_min: defaults::r2_min(),
            ratio_max: defaults::ratio_max(),
            constant_factor: defaults::constant_factor(),
        }
    }
}

mod defaults {
    use super::ExperimentKind;
    pub fn d() -> usize {
        2
    }
    pub fn seeds() -> usize {
        10
    }
    pub fn trials() -> usize {
        20
    }
    pub fn k() -> usize {
        12
    }
    pub fn alpha() -> f64 {
        0.5
    }
    pub fn c() -> f64 {
        0.25
    }
    pub fn c1() -> f64 {
        0.35
    }
    pub fn gff_trials() -> usize {
        1000
    }
    pub fn flow_alpha() -> f64 {
        2.0
    }
    pub fn flow_c() -> f64 {
        0.1
    }
    pub fn flow_pairs() -> usize {
        5
    }
    pub fn d3_guard() -> f64 {
        0.25
    }
    pub fn experiments() -> Vec<ExperimentKind> {
        vec![
            ExperimentKind::Resistance,
            ExperimentKind::Cover,
            ExperimentKind::Gff,
            ExperimentKind::Flow,
        ]
    }
    pub fn r2_min() -> f64 {
        0.9
    }
    pub fn ratio_max() -> f64 {
        4.0
    }
    pub fn constant_factor() -> f64 {
        2.0
    }
}

/// An experiment plan. Every field except `p` and `n_list` has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    #[serde(default = "defaults::d")]
    pub d: usize,
    pub p: f64,
    pub n_list: Vec<usize>,
    #[serde(default = "defaults::seeds")]
    pub seeds_per_n: usize,
    /// Random-walk trials per configuration.
    #[serde(default = "defaults::trials")]
    pub trials: usize,
    /// Renormalization scale for the grid census.
    #[serde(rename = "K", default = "defaults::k")]
    pub k: usize,
    /// Strip-width constant of the renormalized grid.
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    /// Crossing-count constant of the renormalized grid.
    #[serde(default = "defaults::c")]
    pub c: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::experiments")]
    pub experiments: Vec<ExperimentKind>,
    /// Beard length constant: `m = max(1, floor(c1 ln n))`.
    #[serde(default = "defaults::c1")]
    pub c1: f64,
    #[serde(default = "defaults::gff_trials")]
    pub gff_trials: usize,
    /// Square half-width constant of the lattice-scale flows.
    #[serde(default = "defaults::flow_alpha")]
    pub flow_alpha: f64,
    /// Crossings per strip of the lattice-scale flows: `ceil(2 c A)`.
    #[serde(default = "defaults::flow_c")]
    pub flow_c: f64,
    #[serde(default = "defaults::flow_pairs")]
    pub flow_pairs: usize,
    /// Smallest `p` accepted for `d = 3`.
    #[serde(default = "defaults::d3_guard")]
    pub d3_p_guard: f64,
    #[serde(default)]
    pub windows: Windows,
}

impl ExperimentPlan {
    pub fn new(d: usize, p: f64, n_list: Vec<usize>) -> Self {
        let mut plan: ExperimentPlan = serde_json::from_value(serde_json::json!({
            "p": p,
            "n_list": n_list,
        }))
        .expect("defaults deserialize");
        plan.d = d;
        plan
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: ExperimentPlan = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Configuration(msg));
        if self.n_list.is_empty() || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_list must be nonempty and strictly increasing".into());
        }
        if self.n_list[0] < 2 {
            return bad("every n must be at least 2".into());
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p = {} outside [0, 1]", self.p));
        }
        match self.d {
            2 if self.p <= 0.5 => return bad(format!("d = 2 needs p > 1/2, got {}", self.p)),
            3 if self.p < self.d3_p_guard => {
                return bad(format!("d = 3 needs p >= {}, got {}", self.d3_p_guard, self.p))
            }
            2 | 3 => {}
            d => return bad(format!("experiments support d = 2 or 3, got {d}")),
        }
        if self.seeds_per_n == 0 || self.trials == 0 {
            return bad("seeds_per_n and trials must be positive".into());
        }
        if self.gff_trials < crate::gff::MIN_MAX_TRIALS {
            return bad(format!("gff_trials must be at least {}", crate::gff::MIN_MAX_TRIALS));
        }
        if self.experiments.contains(&ExperimentKind::Flow) && self.d != 2 {
            return bad("flow certificates need d = 2".into());
        }
        if self.experiments.contains(&ExperimentKind::Grid) && self.k == 0 {
            return bad("grid census needs K >= 1".into());
        }
        Ok(())
    }
}

/// A CSV table; every cell is already formatted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub statistic: String,
    pub n: usize,
    #[serde(flatten)]
    pub spread: stats::Spread,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitRow {
    pub statistic: String,
    pub regressor: String,
    #[serde(flatten)]
    pub fit: stats::LinearFit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowCheck {
    pub name: String,
    pub value: f64,
    /// `"<= 4"`, `">= 0.9"` and so on.
    pub window: String,
    pub passed: bool,
    /// Whether a failure makes the whole run fail.
    pub asserted: bool,
}

impl WindowCheck {
    pub fn at_most(name: &str, value: f64, limit: f64, asserted: bool) -> Self {
        WindowCheck {
            name: name.into(),
            value,
            window: format!("<= {limit}"),
            passed: value <= limit,
            asserted,
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64, asserted: bool) -> Self {
        WindowCheck {
            name: name.into(),
            value,
            window: format!(">= {limit}"),
            passed: value >= limit,
            asserted,
        }
    }

    pub fn above(name: &str, value: f64, limit: f64, asserted: bool) -> Self {
        WindowCheck {
            name: name.into(),
            value,
            window: format!("> {limit}"),
            passed: value > limit,
            asserted,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub experiment: ExperimentKind,
    pub summary: Vec<SummaryRow>,
    pub fits: Vec<FitRow>,
    pub windows: Vec<WindowCheck>,
    #[serde(skip)]
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
}

impl ScalingReport {
    pub fn new(experiment: ExperimentKind) -> Self {
        ScalingReport {
            experiment,
            summary: Vec::new(),
            fits: Vec::new(),
            windows: Vec::new(),
            tables: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.windows.iter().all(|w| w.passed || !w.asserted)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn window(&self, name: &str) -> Option<&WindowCheck> {
        self.windows.iter().find(|w| w.name == name)
    }

    pub fn median(&self, statistic: &str, n: usize) -> Option<f64> {
        self.summary
            .iter()
            .find(|r| r.statistic == statistic && r.n == n)
            .map(|r| r.spread.median)
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new("summary", &["statistic", "n", "median", "q1", "q3", "iqr", "count"]);
        for r in &self.summary {
            t.push(vec![
                r.statistic.clone(),
                r.n.to_string(),
                fmt(r.spread.median),
                fmt(r.spread.q1),
                fmt(r.spread.q3),
                fmt(r.spread.iqr()),
                r.spread.count.to_string(),
            ]);
        }
        t
    }
}

pub(crate) fn fmt(x: f64) -> String {
    format!("{x}")
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub plan: ExperimentPlan,
    pub reports: Vec<ScalingReport>,
    pub passed: bool,
}

pub fn run_experiment(plan: &ExperimentPlan, kind: ExperimentKind) -> Result<ScalingReport> {
    match kind {
        ExperimentKind::Resistance => run_resistance_scaling(plan),
        ExperimentKind::Cover => run_cover_scaling(plan),
        ExperimentKind::Gff => run_gff_scaling(plan),
        ExperimentKind::Flow => run_flow_certificates(plan),
        ExperimentKind::Grid => run_grid_census(plan),
    }
}

/// Runs every experiment of the plan in order.
pub fn run_plan(plan: &ExperimentPlan) -> Result<RunSummary> {
    plan.validate()?;
    let mut reports = Vec::new();
    for &kind in &plan.experiments {
        reports.push(run_experiment(plan, kind)?);
    }
    let passed = reports.iter().all(ScalingReport::passed);
    Ok(RunSummary {
        plan: plan.clone(),
        reports,
        passed,
    })
}

/// Writes `<kind>_<table>.csv`, `<kind>_summary.csv` and `summary.json`.
pub fn write_outputs(summary: &RunSummary, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for report in &summary.reports {
        let kind = report.experiment.name();
        for table in report.tables.iter().cloned().chain([report.summary_table()]) {
            let path = dir.join(format!("{kind}_{}.csv", table.name));
            fs::write(&path, table.to_csv()?)?;
            written.push(path);
        }
    }
    let path = dir.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(summary)? + "\n")?;
    written.push(path);
    Ok(written)
}
