//! Run configuration: one TOML document with a section per subcommand.
//! Every field has a default, unknown keys are rejected, and `--set
//! section.key=value` overrides are applied to the parsed tree before it is
//! deserialized.

use std::path::Path;

use msgwas::design::SearchGrid;
use msgwas::reseq::Purpose;
use msgwas::significance::Method;
use msgwas::MarkerCausalModel;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    pub table1: Table1Config,
    pub power: PowerConfig,
    pub design: DesignConfig,
    pub simulate: SimulateConfig,
    pub gxe: GxeConfig,
    pub significance: SignificanceConfig,
    pub reseq: ReseqConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            table1: Table1Config::default(),
            power: PowerConfig::default(),
            design: DesignConfig::default(),
            simulate: SimulateConfig::default(),
            gxe: GxeConfig::default(),
            significance: SignificanceConfig::default(),
            reseq: ReseqConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub delta: f64,
    pub rr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Table1Config {
    pub marker_freq: f64,
    pub causal_freq: f64,
    pub blocks: Vec<Block>,
}

impl Default for Table1Config {
    fn default() -> Self {
        Table1Config {
            marker_freq: 0.2,
            causal_freq: 0.05,
            blocks: [(0.036, 2.0), (-0.010, 0.0), (-0.010, 3.0), (0.036, 0.5)]
                .iter()
                .map(|&(delta, rr)| Block { delta, rr })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerDesign {
    pub stage1_fraction: f64,
    pub alpha1: f64,
    /// Solved from `power.fwer` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_joint: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerConfig {
    pub n_markers: u64,
    pub fwer: f64,
    pub lambda: Vec<f64>,
    pub designs: Vec<PowerDesign>,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            n_markers: 500_000,
            fwer: 0.05,
            lambda: vec![20.0, 30.0, 40.0],
            designs: vec![
                PowerDesign {
                    stage1_fraction: 0.3,
                    alpha1: 0.0037,
                    alpha_joint: None,
                },
                PowerDesign {
                    stage1_fraction: 0.5,
                    alpha1: 0.001,
                    alpha_joint: None,
                },
                PowerDesign {
                    stage1_fraction: 1.0,
                    alpha1: 1.0,
                    alpha_joint: None,
                },
            ],
        }
    }
}

/// Marker/causal-variant model. With `causal_freq` and `delta` both absent
/// the marker is itself the causal variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub marker_freq: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub causal_freq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub rr: f64,
}

impl ModelConfig {
    pub fn build(&self, key: &str) -> Result<MarkerCausalModel, CliError> {
        let wrap = |e: msgwas::Error| match e {
            msgwas::Error::InvalidParameter { name, reason } => {
                CliError::invalid(format!("{key}.{name}"), reason)
            }
            other => CliError::invalid(key, other.to_string()),
        };
        match (self.causal_freq, self.delta) {
            (None, None) => MarkerCausalModel::direct(self.marker_freq, self.rr).map_err(wrap),
            (Some(pg), Some(d)) => MarkerCausalModel::new(self.marker_freq, pg, d, self.rr).map_err(wrap),
            _ => Err(CliError::invalid(key, "give both causal_freq and delta, or neither")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluatePoint {
    pub stage1_fraction: f64,
    pub alpha1: f64,
    /// Overrides `design.flanking` for this row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flanking: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    pub cost_ratio: f64,
    pub flanking: u32,
    pub n_markers: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective_tests: Option<f64>,
    pub fwer: f64,
    pub power: f64,
    /// Per-subject noncentrality; overrides `effect` when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noncentrality: Option<f64>,
    pub effect: ModelConfig,
    pub case_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u64>,
    /// Switches to maximizing power under this expected cost.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    pub grid: SearchGrid,
    /// Fixed designs to cost alongside the optimum.
    pub evaluate: Vec<EvaluatePoint>,
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig {
            cost_ratio: 17.5,
            flanking: 0,
            n_markers: 500_000,
            effective_tests: None,
            fwer: 0.05,
            power: 0.8,
            noncentrality: None,
            effect: ModelConfig {
                marker_freq: 0.2,
                causal_freq: None,
                delta: None,
                rr: 1.5,
            },
            case_fraction: 0.5,
            n_max: None,
            budget: None,
            grid: SearchGrid::default(),
            evaluate: vec![
                EvaluatePoint {
                    stage1_fraction: 0.30,
                    alpha1: 0.0037,
                    flanking: None,
                },
                EvaluatePoint {
                    stage1_fraction: 0.49,
                    alpha1: 0.0005,
                    flanking: Some(5),
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    /// Position in the panel.
    pub marker: usize,
    pub marker_freq: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub causal_freq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub rr: f64,
}

impl SignalConfig {
    fn model(&self) -> ModelConfig {
        ModelConfig {
            marker_freq: self.marker_freq,
            causal_freq: self.causal_freq,
            delta: self.delta,
            rr: self.rr,
        }
    }
}

/// Null markers at `null_freq` with the listed signal markers substituted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PanelConfig {
    pub n_markers: usize,
    pub null_freq: f64,
    pub signals: Vec<SignalConfig>,
}

impl Default for PanelConfig {
    fn default() -> Self {
        PanelConfig {
            n_markers: 1000,
            null_freq: 0.3,
            signals: vec![SignalConfig {
                marker: 0,
                marker_freq: 0.2,
                causal_freq: Some(0.05),
                delta: Some(0.036),
                rr: 2.0,
            }],
        }
    }
}

impl PanelConfig {
    pub fn build(&self, key: &str) -> Result<Vec<MarkerCausalModel>, CliError> {
        if self.n_markers == 0 {
            return Err(CliError::invalid(format!("{key}.n_markers"), "must be at least 1"));
        }
        let null = MarkerCausalModel::null(self.null_freq)
            .map_err(|e| CliError::invalid(format!("{key}.null_freq"), e.to_string()))?;
        let mut panel = vec![null; self.n_markers];
        for (i, s) in self.signals.iter().enumerate() {
            let k = format!("{key}.signals[{i}]");
            if s.marker >= self.n_markers {
                return Err(CliError::invalid(
                    format!("{k}.marker"),
                    format!("{} is outside a panel of {}", s.marker, self.n_markers),
                ));
            }
            panel[s.marker] = s.model().build(&k)?;
        }
        Ok(panel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub n_cases: usize,
    pub n_controls: usize,
    pub replicates: usize,
    pub panel: PanelConfig,
    pub stage1_fraction: f64,
    pub alpha1: f64,
    /// Solved from `fwer` over the panel when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_joint: Option<f64>,
    pub fwer: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_carried: Option<usize>,
    /// Also write replicate 0 as a cohort file.
    pub write_cohort: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            n_cases: 500,
            n_controls: 500,
            replicates: 10,
            panel: PanelConfig::default(),
            stage1_fraction: 0.5,
            alpha1: 0.01,
            alpha_joint: None,
            fwer: 0.05,
            max_carried: None,
            write_cohort: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GxeConfig {
    pub n_cases: usize,
    pub n_controls: usize,
    pub replicates: usize,
    pub n_markers: usize,
    pub marker_freq: f64,
    pub exposure_prevalence: f64,
    pub exposure_or: f64,
    pub interaction_or: f64,
    /// Markers that interact with the exposure.
    pub interacting: Vec<usize>,
    pub ge_log_odds: f64,
    pub alpha_screen: f64,
    pub alpha_test: f64,
}

impl Default for GxeConfig {
    fn default() -> Self {
        GxeConfig {
            n_cases: 1000,
            n_controls: 1000,
            replicates: 5,
            n_markers: 10_000,
            marker_freq: 0.3,
            exposure_prevalence: 0.3,
            exposure_or: 1.5,
            interaction_or: 1.8,
            interacting: (0..5).collect(),
            ge_log_odds: 0.0,
            alpha_screen: 0.05,
            alpha_test: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignificanceConfig {
    /// Cohort files written by `simulate`; a cohort is simulated from
    /// `panel` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub genotypes: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phenotypes: Option<String>,
    pub panel: PanelConfig,
    pub n_cases: usize,
    pub n_controls: usize,
    pub stage1_fraction: f64,
    pub alpha1: f64,
    pub methods: Vec<Method>,
    pub replicates: usize,
}

impl Default for SignificanceConfig {
    fn default() -> Self {
        SignificanceConfig {
            genotypes: None,
            phenotypes: None,
            panel: PanelConfig {
                n_markers: 50,
                ..PanelConfig::default()
            },
            n_cases: 100,
            n_controls: 100,
            stage1_fraction: 0.7,
            alpha1: 0.01,
            methods: vec![Method::Lin, Method::Dudbridge],
            replicates: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RiskIndexConfig {
    /// Markers of the index; the built-in five-marker panel when empty.
    pub markers: Vec<ModelConfig>,
    /// Per-marker weights; marker log odds ratios when empty.
    pub coefficients: Vec<f64>,
    pub quantiles: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<f64>>,
    pub draws: usize,
}

impl Default for RiskIndexConfig {
    fn default() -> Self {
        RiskIndexConfig {
            markers: Vec::new(),
            coefficients: Vec::new(),
            quantiles: 5,
            edges: None,
            draws: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReseqConfig {
    pub model: ModelConfig,
    /// Case and control gametes in the main study; stratum sizes are their
    /// expected split unless `population` is given.
    pub case_units: u64,
    pub control_units: u64,
    /// Stratum sizes: control/major, case/major, control/minor, case/minor.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub population: Option<[u64; 4]>,
    pub budget: u64,
    pub purpose: Purpose,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub risk_index: Option<RiskIndexConfig>,
}

impl Default for ReseqConfig {
    fn default() -> Self {
        ReseqConfig {
            model: ModelConfig {
                marker_freq: 0.2,
                causal_freq: Some(0.05),
                delta: Some(0.036),
                rr: 2.0,
            },
            case_units: 2000,
            control_units: 2000,
            population: None,
            budget: 96,
            purpose: Purpose::JointAnalysis,
            risk_index: None,
        }
    }
}

/// Parses the right-hand side of `--set` as a TOML value, falling back to a
/// bare string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::invalid(key, "empty path segment"));
    }
    let mut table = root;
    for p in &parts[..parts.len() - 1] {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::invalid(key, format!("`{p}` is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl Config {
    /// Reads `path` (if any), applies `overrides` in order, deserializes and
    /// validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_str_with(&text, overrides)
    }

    pub fn from_str_with(text: &str, overrides: &[String]) -> Result<Config, CliError> {
        let mut root: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        let config: Config = toml::Value::Table(root)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Range checks that do not need a library call.
    pub fn validate(&self) -> Result<(), CliError> {
        let unit = |key: &str, v: f64, closed_top: bool| {
            let ok = v > 0.0 && (v < 1.0 || (closed_top && v == 1.0));
            if ok {
                Ok(())
            } else {
                Err(CliError::invalid(key, format!("{v} is outside (0, 1{}", if closed_top { "]" } else { ")" })))
            }
        };
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::invalid(key, format!("{v} must be positive")))
            }
        };
        let count = |key: &str, v: usize| {
            if v > 0 {
                Ok(())
            } else {
                Err(CliError::invalid(key, "must be at least 1"))
            }
        };

        let t = &self.table1;
        unit("table1.marker_freq", t.marker_freq, false)?;
        unit("table1.causal_freq", t.causal_freq, false)?;
        for (i, b) in t.blocks.iter().enumerate() {
            if !(b.rr >= 0.0 && b.rr.is_finite()) {
                return Err(CliError::invalid(format!("table1.blocks[{i}].rr"), "must be non-negative"));
            }
        }

        let p = &self.power;
        unit("power.fwer", p.fwer, false)?;
        if p.n_markers == 0 {
            return Err(CliError::invalid("power.n_markers", "must be at least 1"));
        }
        for (i, l) in p.lambda.iter().enumerate() {
            if !(*l >= 0.0 && l.is_finite()) {
                return Err(CliError::invalid(format!("power.lambda[{i}]"), "must be non-negative"));
            }
        }
        for (i, d) in p.designs.iter().enumerate() {
            unit(&format!("power.designs[{i}].stage1_fraction"), d.stage1_fraction, true)?;
            unit(&format!("power.designs[{i}].alpha1"), d.alpha1, true)?;
            if let Some(a) = d.alpha_joint {
                unit(&format!("power.designs[{i}].alpha_joint"), a, true)?;
            }
        }

        let d = &self.design;
        positive("design.cost_ratio", d.cost_ratio)?;
        unit("design.fwer", d.fwer, false)?;
        unit("design.power", d.power, false)?;
        unit("design.case_fraction", d.case_fraction, false)?;
        if d.n_markers == 0 {
            return Err(CliError::invalid("design.n_markers", "must be at least 1"));
        }
        if let Some(b) = d.budget {
            positive("design.budget", b)?;
        }
        if let Some(l) = d.noncentrality {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(CliError::invalid("design.noncentrality", "must be non-negative"));
            }
        }
        for (i, e) in d.evaluate.iter().enumerate() {
            unit(&format!("design.evaluate[{i}].stage1_fraction"), e.stage1_fraction, true)?;
            unit(&format!("design.evaluate[{i}].alpha1"), e.alpha1, true)?;
        }

        let s = &self.simulate;
        count("simulate.n_cases", s.n_cases)?;
        count("simulate.n_controls", s.n_controls)?;
        count("simulate.replicates", s.replicates)?;
        unit("simulate.stage1_fraction", s.stage1_fraction, true)?;
        unit("simulate.alpha1", s.alpha1, true)?;
        unit("simulate.fwer", s.fwer, false)?;

        let g = &self.gxe;
        count("gxe.n_cases", g.n_cases)?;
        count("gxe.n_controls", g.n_controls)?;
        count("gxe.replicates", g.replicates)?;
        count("gxe.n_markers", g.n_markers)?;
        unit("gxe.marker_freq", g.marker_freq, false)?;
        unit("gxe.exposure_prevalence", g.exposure_prevalence, false)?;
        positive("gxe.exposure_or", g.exposure_or)?;
        positive("gxe.interaction_or", g.interaction_or)?;
        unit("gxe.alpha_screen", g.alpha_screen, true)?;
        unit("gxe.alpha_test", g.alpha_test, false)?;
        if let Some(j) = g.interacting.iter().find(|&&j| j >= g.n_markers) {
            return Err(CliError::invalid("gxe.interacting", format!("marker {j} is outside the panel")));
        }

        let q = &self.significance;
        count("significance.n_cases", q.n_cases)?;
        count("significance.n_controls", q.n_controls)?;
        unit("significance.stage1_fraction", q.stage1_fraction, false)?;
        unit("significance.alpha1", q.alpha1, true)?;
        if q.genotypes.is_some() != q.phenotypes.is_some() {
            return Err(CliError::invalid(
                "significance.genotypes",
                "genotypes and phenotypes must be given together",
            ));
        }

        let r = &self.reseq;
        if r.budget == 0 {
            return Err(CliError::invalid("reseq.budget", "must be at least 1"));
        }
        if let Some(ri) = &r.risk_index {
            count("reseq.risk_index.quantiles", ri.quantiles)?;
            count("reseq.risk_index.draws", ri.draws)?;
        }
        Ok(())
    }
}
