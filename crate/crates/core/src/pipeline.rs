//! End-to-end two-stage analysis of a cohort: stage split, stage-I
//! selection, joint analysis, effect estimates and replication.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::assoc::AlleleCounts;
use crate::cohort::{simulate_cohort, SimConfig, SimulatedCohort};
use crate::error::{Error, Result};
use crate::normal;
use crate::power::{two_stage_p_value, SignRule};
use crate::rng::{derive_seed, substream, TAG_REPLICATE, TAG_SPLIT};
use crate::TwoStageDesign;

/// Subject indices of each stage, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSplit {
    pub stage1: Vec<usize>,
    pub stage2: Vec<usize>,
}

impl StageSplit {
    pub fn realized_fraction(&self) -> f64 {
        self.stage1.len() as f64 / (self.stage1.len() + self.stage2.len()) as f64
    }
}

/// Seeded split keeping the case:control ratio in both stages. Each stage
/// that receives subjects needs at least 2 cases and 2 controls.
pub fn split_stages(cohort: &SimulatedCohort, stage1_fraction: f64, seed: u64) -> Result<StageSplit> {
    if !(stage1_fraction > 0.0 && stage1_fraction <= 1.0) {
        return Err(Error::param("stage1_fraction", "must lie in (0, 1]"));
    }
    let mut rng = substream(derive_seed(seed, TAG_SPLIT), 0);
    let mut stage1 = Vec::new();
    let mut stage2 = Vec::new();
    for outcome in [1u8, 0] {
        let mut group: Vec<usize> = (0..cohort.n_subjects())
            .filter(|&i| cohort.phenotype()[i] == outcome)
            .collect();
        let k = (stage1_fraction * group.len() as f64).round() as usize;
        group.shuffle(&mut rng);
        let (first, rest) = group.split_at(k);
        let label = if outcome == 1 { "cases" } else { "controls" };
        if first.len() < 2 || (stage1_fraction < 1.0 && rest.len() < 2) {
            return Err(Error::param(
                "stage1_fraction",
                format!(
                    "split leaves {} stage-I and {} stage-II {label}; each stage needs at least 2",
                    first.len(),
                    rest.len()
                ),
            ));
        }
        stage1.extend_from_slice(first);
        stage2.extend_from_slice(rest);
    }
    stage1.sort_unstable();
    stage2.sort_unstable();
    Ok(StageSplit { stage1, stage2 })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PipelineOptions {
    /// Seed of the stage split.
    pub seed: u64,
    /// Carry forward at most this many markers, best stage-I p first.
    pub max_carried: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkerOutcome {
    pub marker: usize,
    pub z_stage1: f64,
    pub p_stage1: f64,
    pub selected: bool,
    pub z_stage2: Option<f64>,
    pub z_joint: Option<f64>,
    /// Two-hurdle p-value; one for markers that are not carried forward.
    pub p_joint: f64,
    pub discovered: bool,
    /// Allelic odds ratio in the full sample, for discoveries.
    pub odds_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineResult {
    pub markers: Vec<MarkerOutcome>,
    pub realized_fraction: f64,
    pub critical_joint: f64,
    pub n_selected: usize,
    pub n_discovered: usize,
}

/// Runs the two-hurdle rule with the design's thresholds on `cohort`. The
/// joint statistic weights the stages by the realized stage-I fraction.
pub fn run_two_stage(
    cohort: &SimulatedCohort,
    design: &TwoStageDesign,
    options: &PipelineOptions,
) -> Result<PipelineResult> {
    design.validate_stage_one()?;
    if !(design.alpha_joint > 0.0 && design.alpha_joint <= 1.0) {
        return Err(Error::param("alpha_joint", "must lie in (0, 1]"));
    }
    let split = split_stages(cohort, design.stage1_fraction, options.seed)?;
    let pi = split.realized_fraction();
    let realized = TwoStageDesign {
        stage1_fraction: pi,
        ..design.clone()
    };
    let y = cohort.phenotype();
    let stage1 = AlleleCounts::tally(cohort, &split.stage1, y);
    let z1 = stage1.z_scores();
    let p1: Vec<f64> = z1.iter().map(|&z| normal::two_sided_p(z)).collect();

    let mut selected: Vec<usize> = (0..z1.len()).filter(|&j| p1[j] < design.alpha1).collect();
    if let Some(cap) = options.max_carried {
        selected.sort_by(|&a, &b| p1[a].total_cmp(&p1[b]).then(a.cmp(&b)));
        selected.truncate(cap);
        selected.sort_unstable();
    }
    let stage2 = AlleleCounts::tally(cohort, &split.stage2, y);
    let full = if selected.is_empty() {
        None
    } else {
        Some(AlleleCounts::all(cohort))
    };
    let critical = normal::two_sided_critical(design.alpha_joint);

    let mut markers: Vec<MarkerOutcome> = (0..z1.len())
        .map(|j| MarkerOutcome {
            marker: j,
            z_stage1: z1[j],
            p_stage1: p1[j],
            selected: false,
            z_stage2: None,
            z_joint: None,
            p_joint: 1.0,
            discovered: false,
            odds_ratio: None,
        })
        .collect();
    for &j in &selected {
        let z2 = stage2.z(j);
        let zj = pi.sqrt() * z1[j] + (1.0 - pi).sqrt() * z2;
        let sign_ok = design.sign_rule == SignRule::Ignored || zj.signum() == z1[j].signum();
        let o = &mut markers[j];
        o.selected = true;
        o.z_stage2 = Some(z2);
        o.z_joint = Some(zj);
        o.p_joint = two_stage_p_value(&realized, z1[j], zj)?;
        o.discovered = zj.abs() > critical && sign_ok;
        if o.discovered {
            o.odds_ratio = full.as_ref().map(|f| f.odds_ratio(j));
        }
    }
    let n_discovered = markers.iter().filter(|m| m.discovered).count();
    Ok(PipelineResult {
        markers,
        realized_fraction: pi,
        critical_joint: critical,
        n_selected: selected.len(),
        n_discovered,
    })
}

/// Markers significant at per-marker level `alpha` using all subjects.
pub fn one_stage_scan(cohort: &SimulatedCohort, alpha: f64) -> Result<Vec<bool>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param("alpha", "must lie in (0, 1]"));
    }
    let c = normal::two_sided_critical(alpha);
    Ok(AlleleCounts::all(cohort)
        .z_scores()
        .into_iter()
        .map(|z| z.abs() > c)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinnersCurse {
    pub true_or: f64,
    /// Mean full-sample odds ratio over discoveries of the effect markers.
    pub mean_or: f64,
    pub standard_error: f64,
    pub bias: f64,
    pub discoveries: usize,
    /// Effect-marker trials (effect markers x replicates).
    pub trials: usize,
}

/// Replicate seed for the stage split of replicate `r`.
pub fn replicate_seed(seed: u64, r: u64) -> u64 {
    derive_seed(derive_seed(seed, TAG_REPLICATE), r)
}

/// Mean estimated odds ratio of effect markers conditional on discovery over
/// `config.replicates` simulated studies. Effect markers are the associated
/// markers of the panel; their marker-level odds ratio must equal `true_or`.
pub fn winners_curse(config: &SimConfig, design: &TwoStageDesign, true_or: f64) -> Result<WinnersCurse> {
    config.validate()?;
    let effect: Vec<usize> = config
        .panel
        .iter()
        .enumerate()
        .filter(|(_, m)| m.rr_causal != 1.0 && m.delta != 0.0)
        .map(|(j, _)| j)
        .collect();
    if effect.is_empty() {
        return Err(Error::param("panel", "contains no associated marker"));
    }
    for &j in &effect {
        let or = config.panel[j].cell_table()?.marker_odds_ratio();
        if (or - true_or).abs() > 1e-9 * true_or.max(1.0) {
            return Err(Error::param(
                "true_or",
                format!("marker {j} has odds ratio {or}, not {true_or}"),
            ));
        }
    }
    let per_rep: Vec<Vec<f64>> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let cohort = simulate_cohort(config, r)?;
            let opts = PipelineOptions {
                seed: replicate_seed(config.seed, r),
                max_carried: None,
            };
            let res = run_two_stage(&cohort, design, &opts)?;
            Ok(effect
                .iter()
                .filter(|&&j| res.markers[j].discovered)
                .filter_map(|&j| res.markers[j].odds_ratio)
                .collect())
        })
        .collect::<Result<_>>()?;
    let ors: Vec<f64> = per_rep.into_iter().flatten().collect();
    if ors.is_empty() {
        return Err(Error::Infeasible(format!(
            "no discoveries in {} replicates; increase replicates or power",
            config.replicates
        )));
    }
    let k = ors.len() as f64;
    let mean = ors.iter().sum::<f64>() / k;
    let var = if ors.len() > 1 {
        ors.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    Ok(WinnersCurse {
        true_or,
        mean_or: mean,
        standard_error: (var / k).sqrt(),
        bias: mean - true_or,
        discoveries: ors.len(),
        trials: effect.len() * config.replicates,
    })
}

/// Per-marker replication flags for the discoveries: significant at
/// `alpha_rep` (two-sided) in the replication cohort with the same sign as
/// the discovery joint statistic. `None` for markers not discovered.
pub fn evaluate_replication(
    discovery: &PipelineResult,
    replication: &SimulatedCohort,
    alpha_rep: f64,
) -> Result<Vec<Option<bool>>> {
    if !(alpha_rep > 0.0 && alpha_rep <= 1.0) {
        return Err(Error::param("alpha_rep", "must lie in (0, 1]"));
    }
    if discovery.markers.len() != replication.n_markers() {
        return Err(Error::DimensionMismatch(format!(
            "discovery has {} markers, replication cohort {}",
            discovery.markers.len(),
            replication.n_markers()
        )));
    }
    let counts = AlleleCounts::all(replication);
    let c = normal::two_sided_critical(alpha_rep);
    Ok(discovery
        .markers
        .iter()
        .map(|m| {
            m.discovered.then(|| {
                let z = counts.z(m.marker);
                z.abs() > c && z.signum() == m.z_joint.unwrap_or(m.z_stage1).signum()
            })
        })
        .collect())
}
