//! One function per subcommand, each turning the resolved configuration
//! into output tables (and, for `simulate`, a cohort file).

use msgwas::cohort::{simulate_cohort, ExposureModel, SimConfig, SimulatedCohort};
use msgwas::design::{evaluate_design, optimize_max_power, optimize_min_cost, EffectSpec, OptimizedDesign};
use msgwas::genetics::{MarkerAllele, Stratum};
use msgwas::gxe::two_step_gxe;
use msgwas::pipeline::{replicate_seed, run_two_stage, PipelineOptions};
use msgwas::power::{joint_two_stage_power, null_rate, solve_joint_threshold};
use msgwas::reseq::{
    example_risk_panel, expected_population, recommend_plan, risk_index_yields, stratum_yields, BinSpec,
};
use msgwas::significance::{dudbridge_adjusted_p, lin_adjusted_p, max_statistic_reference, AdjustOptions, Method};
use msgwas::{CostModel, DesignConstraints, MarkerCausalModel, TwoStageDesign};
use rayon::prelude::*;

use crate::config::{Config, DesignConfig, GxeConfig};
use crate::error::CliError;
use crate::report::{Cell, Table};

/// Everything a subcommand produces, in write order.
#[derive(Debug, Default)]
pub struct Output {
    pub tables: Vec<Table>,
    /// Files written verbatim, by name.
    pub files: Vec<(String, Vec<u8>)>,
}

pub fn table1(config: &Config) -> Result<Output, CliError> {
    let c = &config.table1;
    let mut t = Table::new(
        "table1",
        &[
            "block", "delta", "rr_causal", "marker_rr", "outcome", "marker_allele", "joint_noncarrier",
            "joint_carrier", "carrier_probability", "highest_yield",
        ],
    );
    for (i, b) in c.blocks.iter().enumerate() {
        let key = format!("table1.blocks[{i}]");
        let model = MarkerCausalModel::new(c.marker_freq, c.causal_freq, b.delta, b.rr)
            .map_err(|e| CliError::invalid(&key, e.to_string()))?;
        let table = model.cell_table().map_err(|e| CliError::invalid(&key, e.to_string()))?;
        let yields = stratum_yields(&model).map_err(CliError::core("table1"))?;
        for s in Stratum::ALL {
            t.push(vec![
                (i + 1).into(),
                b.delta.into(),
                b.rr.into(),
                table.marker_rr.into(),
                label_outcome(s).into(),
                label_allele(s.marker).into(),
                (*table.joint(s.outcome, s.marker, false)).into(),
                (*table.joint(s.outcome, s.marker, true)).into(),
                (*table.carrier_probability(s)).into(),
                (s == yields.argmax).into(),
            ]);
        }
    }
    Ok(Output {
        tables: vec![t],
        files: Vec::new(),
    })
}

fn label_outcome(s: Stratum) -> &'static str {
    match s.outcome {
        msgwas::genetics::Outcome::Case => "case",
        msgwas::genetics::Outcome::Control => "control",
    }
}

fn label_allele(a: MarkerAllele) -> &'static str {
    match a {
        MarkerAllele::Major => "major",
        MarkerAllele::Minor => "minor",
    }
}

pub fn power(config: &Config) -> Result<Output, CliError> {
    let c = &config.power;
    let mut t = Table::new("power", &["pi", "alpha1", "alpha_joint", "lambda", "power", "null_rate"]);
    for (i, d) in c.designs.iter().enumerate() {
        let key = format!("power.designs[{i}]");
        let base = TwoStageDesign {
            n_total: 1,
            stage1_fraction: d.stage1_fraction,
            alpha1: d.alpha1,
            alpha_joint: d.alpha1,
            n_markers: c.n_markers,
            effective_tests: None,
            sign_rule: Default::default(),
        };
        let alpha_joint = match d.alpha_joint {
            Some(a) => a,
            None => solve_joint_threshold(&base, c.fwer).map_err(CliError::core("power"))?,
        };
        let design = base.with_alpha_joint(alpha_joint);
        design
            .validate()
            .map_err(|e| CliError::invalid(&key, e.to_string()))?;
        let rate = null_rate(&design).map_err(CliError::core("power"))?;
        for &lambda in &c.lambda {
            let p = joint_two_stage_power(&design, lambda).map_err(CliError::core("power"))?;
            t.push(vec![
                d.stage1_fraction.into(),
                d.alpha1.into(),
                alpha_joint.into(),
                lambda.into(),
                p.into(),
                rate.into(),
            ]);
        }
    }
    Ok(Output {
        tables: vec![t],
        files: Vec::new(),
    })
}

fn design_inputs(c: &DesignConfig, flanking: u32) -> Result<(DesignConstraints, CostModel), CliError> {
    let effect = match c.noncentrality {
        Some(per_subject) => EffectSpec::Noncentrality { per_subject },
        None => EffectSpec::Model {
            model: c.effect.build("design.effect")?,
            case_fraction: c.case_fraction,
        },
    };
    let constraints = DesignConstraints {
        fwer_target: c.fwer,
        power_target: c.power,
        effect,
        n_max: c.n_max,
        n_markers: c.n_markers,
        effective_tests: c.effective_tests,
    };
    let cost = CostModel::new(c.cost_ratio, flanking).map_err(CliError::core("design"))?;
    Ok((constraints, cost))
}

const SUMMARY_COLUMNS: [&str; 15] = [
    "row",
    "stage1_fraction",
    "alpha1",
    "alpha_joint",
    "flanking",
    "n_total",
    "power",
    "family_wise_error",
    "stage1_cost",
    "stage2_cost",
    "total_cost",
    "stage1_cost_share",
    "stage2_markers",
    "cost_vs_one_stage",
    "cost_vs_one_stage_equal_n",
];

fn summary_row(label: String, flanking: u32, d: &OptimizedDesign<f64>) -> Vec<Cell> {
    vec![
        label.into(),
        d.design.stage1_fraction.into(),
        d.design.alpha1.into(),
        d.design.alpha_joint.into(),
        (flanking as u64).into(),
        d.design.n_total.into(),
        d.power.into(),
        d.family_wise_error.into(),
        d.cost.stage1_cost.into(),
        d.cost.stage2_cost.into(),
        d.cost.total_cost.into(),
        d.cost.stage1_share.into(),
        d.cost.stage2_markers.into(),
        d.cost_vs_one_stage.into(),
        d.cost_vs_one_stage_equal_n.into(),
    ]
}

pub fn design_optimize(config: &Config) -> Result<Output, CliError> {
    let c = &config.design;
    let (constraints, cost) = design_inputs(c, c.flanking)?;
    let opt = match c.budget {
        Some(b) => optimize_max_power(b, &constraints, &cost, &c.grid),
        None => optimize_min_cost(&constraints, &cost, &c.grid),
    }
    .map_err(CliError::core("design"))?;

    let mut grid = Table::new(
        "design_grid",
        &[
            "stage1_fraction", "alpha1", "alpha_joint", "lambda_required", "n_total", "power", "total_cost",
            "feasible", "refined",
        ],
    );
    for g in &opt.grid {
        grid.push(vec![
            g.stage1_fraction.into(),
            g.alpha1.into(),
            g.alpha_joint.into(),
            g.lambda_required.into(),
            g.n_total.into(),
            g.power.into(),
            g.total_cost.into(),
            g.feasible.into(),
            g.refined.into(),
        ]);
    }

    let mut summary = Table::new("design_summary", &SUMMARY_COLUMNS);
    let label = if c.budget.is_some() { "max_power" } else { "min_cost" };
    summary.push(summary_row(label.into(), c.flanking, &opt.best));
    for (i, e) in c.evaluate.iter().enumerate() {
        let flanking = e.flanking.unwrap_or(c.flanking);
        let (constraints, cost) = design_inputs(c, flanking)?;
        let d = evaluate_design(e.stage1_fraction, e.alpha1, &constraints, &cost)
            .map_err(CliError::core("design.evaluate"))?;
        summary.push(summary_row(format!("evaluate[{i}]"), flanking, &d));
    }
    Ok(Output {
        tables: vec![summary, grid],
        files: Vec::new(),
    })
}

fn simulation_design(
    n_total: usize,
    stage1_fraction: f64,
    alpha1: f64,
    alpha_joint: Option<f64>,
    fwer: f64,
    m: usize,
) -> Result<TwoStageDesign, CliError> {
    let base = TwoStageDesign {
        n_total: n_total as u64,
        stage1_fraction,
        alpha1,
        alpha_joint: alpha1,
        n_markers: m as u64,
        effective_tests: None,
        sign_rule: Default::default(),
    };
    let aj = match alpha_joint {
        Some(a) => a,
        None => solve_joint_threshold(&base, fwer).map_err(CliError::core("simulate"))?,
    };
    let d = base.with_alpha_joint(aj);
    d.validate().map_err(CliError::core("simulate"))?;
    Ok(d)
}

pub fn simulate(config: &Config) -> Result<Output, CliError> {
    let c = &config.simulate;
    let panel = c.panel.build("simulate.panel")?;
    let m = panel.len();
    let mut sim = SimConfig::new(config.seed, c.n_cases, c.n_controls, panel);
    sim.replicates = c.replicates;
    sim.validate().map_err(CliError::core("simulate"))?;
    let design = simulation_design(c.n_cases + c.n_controls, c.stage1_fraction, c.alpha1, c.alpha_joint, c.fwer, m)?;

    let results: Vec<(SimulatedCohort, msgwas::pipeline::PipelineResult)> = (0..c.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let cohort = simulate_cohort(&sim, r)?;
            let opts = PipelineOptions {
                seed: replicate_seed(config.seed, r),
                max_carried: c.max_carried,
            };
            let res = run_two_stage(&cohort, &design, &opts)?;
            Ok((cohort, res))
        })
        .collect::<msgwas::Result<_>>()
        .map_err(CliError::core("simulate"))?;

    let associated = results[0].0.associated().to_vec();
    let mut reps = Table::new(
        "simulate_replicates",
        &[
            "replicate", "realized_fraction", "n_selected", "n_discovered", "true_discoveries",
            "false_discoveries",
        ],
    );
    let mut selected = vec![0usize; m];
    let mut discovered = vec![0usize; m];
    let mut or_sum = vec![0.0f64; m];
    for (r, (_, res)) in results.iter().enumerate() {
        let mut true_d = 0usize;
        for mk in &res.markers {
            selected[mk.marker] += mk.selected as usize;
            if mk.discovered {
                discovered[mk.marker] += 1;
                or_sum[mk.marker] += mk.odds_ratio.unwrap_or(f64::NAN);
                true_d += associated[mk.marker] as usize;
            }
        }
        reps.push(vec![
            r.into(),
            res.realized_fraction.into(),
            res.n_selected.into(),
            res.n_discovered.into(),
            true_d.into(),
            (res.n_discovered - true_d).into(),
        ]);
    }
    let mut markers = Table::new(
        "simulate_markers",
        &["marker", "associated", "selection_rate", "discovery_rate", "discoveries", "mean_discovered_or"],
    );
    let n = c.replicates as f64;
    for j in 0..m {
        markers.push(vec![
            j.into(),
            associated[j].into(),
            (selected[j] as f64 / n).into(),
            (discovered[j] as f64 / n).into(),
            discovered[j].into(),
            (discovered[j] > 0).then(|| or_sum[j] / discovered[j] as f64).into(),
        ]);
    }
    let mut files = Vec::new();
    if c.write_cohort {
        let cohort = &results[0].0;
        let mut g = Vec::new();
        let mut p = Vec::new();
        cohort.write_genotypes(&mut g).map_err(CliError::core("simulate"))?;
        cohort.write_phenotypes(&mut p).map_err(CliError::core("simulate"))?;
        files.push(("cohort.gwsc".to_string(), g));
        files.push(("cohort_phenotypes.csv".to_string(), p));
    }
    Ok(Output {
        tables: vec![reps, markers],
        files,
    })
}

/// The G×E simulation described by `c`: null markers at `marker_freq`,
/// with the interacting markers typed directly.
pub fn gxe_simulation(seed: u64, c: &GxeConfig) -> Result<SimConfig, CliError> {
    let null = MarkerCausalModel::null(c.marker_freq).map_err(CliError::core("gxe"))?;
    let mut panel = vec![null; c.n_markers];
    for &j in &c.interacting {
        if j >= c.n_markers {
            return Err(CliError::invalid("gxe.interacting", format!("marker {j} is outside the panel")));
        }
        panel[j] = MarkerCausalModel::direct(c.marker_freq, 1.0).map_err(CliError::core("gxe"))?;
    }
    let mut sim = SimConfig::new(seed, c.n_cases, c.n_controls, panel);
    sim.replicates = c.replicates;
    sim.exposure = Some(ExposureModel {
        prevalence: c.exposure_prevalence,
        exposure_or: c.exposure_or,
        interaction_or: c.interaction_or,
        interacting: c.interacting.clone(),
        ge_log_odds: c.ge_log_odds,
    });
    sim.validate().map_err(CliError::core("gxe"))?;
    Ok(sim)
}

pub fn gxe(config: &Config) -> Result<Output, CliError> {
    let c = &config.gxe;
    let sim = gxe_simulation(config.seed, c)?;

    let results = (0..c.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let cohort = simulate_cohort(&sim, r)?;
            let res = two_step_gxe(&cohort, c.alpha_screen, c.alpha_test)?;
            Ok((cohort.associated().to_vec(), res))
        })
        .collect::<msgwas::Result<Vec<_>>>()
        .map_err(CliError::core("gxe"))?;

    let mut reps = Table::new(
        "gxe_replicates",
        &[
            "replicate", "n_passed", "two_step_level", "one_step_level", "two_step_rejections",
            "one_step_rejections", "two_step_true", "one_step_true",
        ],
    );
    for (r, (assoc, res)) in results.iter().enumerate() {
        let true_two = res.markers.iter().filter(|g| g.rejected_two_step && assoc[g.marker]).count();
        let true_one = res.markers.iter().filter(|g| g.rejected_one_step && assoc[g.marker]).count();
        reps.push(vec![
            r.into(),
            res.n_passed.into(),
            res.two_step_level.into(),
            res.one_step_level.into(),
            res.two_step_rejections.into(),
            res.one_step_rejections.into(),
            true_two.into(),
            true_one.into(),
        ]);
    }
    let mut markers = Table::new(
        "gxe_markers",
        &[
            "marker", "interacting", "screen_z", "screen_p", "passed", "interaction_log_or", "interaction_p",
            "rejected_two_step", "rejected_one_step",
        ],
    );
    let (assoc, first) = &results[0];
    for g in &first.markers {
        markers.push(vec![
            g.marker.into(),
            assoc[g.marker].into(),
            g.screen_z.into(),
            g.screen_p.into(),
            g.passed.into(),
            g.interaction.into(),
            g.interaction_p.into(),
            g.rejected_two_step.into(),
            g.rejected_one_step.into(),
        ]);
    }
    Ok(Output {
        tables: vec![reps, markers],
        files: Vec::new(),
    })
}

pub fn significance(config: &Config) -> Result<Output, CliError> {
    let c = &config.significance;
    let cohort = match (&c.genotypes, &c.phenotypes) {
        (Some(g), Some(p)) => {
            let gf = std::fs::File::open(g).map_err(|e| CliError::invalid("significance.genotypes", e.to_string()))?;
            let pf = std::fs::File::open(p).map_err(|e| CliError::invalid("significance.phenotypes", e.to_string()))?;
            SimulatedCohort::read(std::io::BufReader::new(gf), std::io::BufReader::new(pf))
                .map_err(|e| CliError::invalid("significance.genotypes", e.to_string()))?
        }
        _ => {
            let panel = c.panel.build("significance.panel")?;
            let sim = SimConfig::new(config.seed, c.n_cases, c.n_controls, panel);
            simulate_cohort(&sim, 0).map_err(CliError::core("significance"))?
        }
    };
    let design = TwoStageDesign {
        n_total: cohort.n_subjects() as u64,
        stage1_fraction: c.stage1_fraction,
        alpha1: c.alpha1,
        alpha_joint: c.alpha1,
        n_markers: cohort.n_markers() as u64,
        effective_tests: None,
        sign_rule: Default::default(),
    };
    let options = AdjustOptions::new(c.replicates, config.seed);
    let mut t = Table::new(
        "significance",
        &["marker", "method", "statistic", "raw_p", "adjusted_p", "standard_error", "replicates"],
    );
    let mut methods = c.methods.clone();
    methods.sort_by_key(|m| m.label());
    methods.dedup();
    for method in methods {
        let res = match method {
            Method::Lin => lin_adjusted_p(&cohort, &design, &options),
            Method::Dudbridge => dudbridge_adjusted_p(&cohort, &design, &options),
            Method::MaxStatistic => max_statistic_reference(&cohort, c.replicates, config.seed),
        }
        .map_err(CliError::core("significance"))?;
        for j in 0..res.adjusted.len() {
            t.push(vec![
                j.into(),
                method.label().into(),
                res.statistic[j].into(),
                res.raw[j].into(),
                res.adjusted[j].into(),
                res.standard_error[j].into(),
                res.replicates.into(),
            ]);
        }
    }
    Ok(Output {
        tables: vec![t],
        files: Vec::new(),
    })
}

pub fn reseq_plan(config: &Config) -> Result<Output, CliError> {
    let c = &config.reseq;
    let model = c.model.build("reseq.model")?;
    let population = match c.population {
        Some(p) => p,
        None => expected_population(&model, c.case_units, c.control_units).map_err(CliError::core("reseq"))?,
    };
    let plan = recommend_plan(&model, &population, c.budget, c.purpose).map_err(CliError::core("reseq"))?;
    let argmax = stratum_yields(&model).map_err(CliError::core("reseq"))?.argmax;
    let mut t = Table::new(
        "reseq_plan",
        &[
            "stratum", "outcome", "marker_allele", "population", "sampled", "fraction", "carrier_probability",
            "expected_carriers", "offset", "highest_yield",
        ],
    );
    for (s, key) in plan.strata.iter().zip(Stratum::ALL) {
        let fc = plan.fraction(msgwas::genetics::Outcome::Case, s.class).unwrap_or(0.0);
        let fn_ = plan.fraction(msgwas::genetics::Outcome::Control, s.class).unwrap_or(0.0);
        let offset = (fc > 0.0 && fn_ > 0.0).then(|| (fc / fn_).ln());
        t.push(vec![
            s.label.clone().into(),
            label_outcome(key).into(),
            label_allele(key.marker).into(),
            s.population.into(),
            s.sampled.into(),
            s.fraction.into(),
            s.carrier_probability.into(),
            s.expected_carriers().into(),
            offset.into(),
            (key == argmax).into(),
        ]);
    }
    let mut tables = vec![t];
    if let Some(ri) = &c.risk_index {
        let (models, coefficients) = if ri.markers.is_empty() {
            example_risk_panel()
        } else {
            let models = ri
                .markers
                .iter()
                .enumerate()
                .map(|(i, m)| m.build(&format!("reseq.risk_index.markers[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let coefficients = if ri.coefficients.is_empty() {
                models
                    .iter()
                    .map(|m| m.cell_table().map(|t| t.marker_odds_ratio().ln()))
                    .collect::<msgwas::Result<Vec<_>>>()
                    .map_err(CliError::core("reseq.risk_index"))?
            } else {
                ri.coefficients.clone()
            };
            (models, coefficients)
        };
        let bins = match &ri.edges {
            Some(e) => BinSpec::Edges(e.clone()),
            None => BinSpec::Quantiles(ri.quantiles),
        };
        let r = risk_index_yields(&models, &coefficients, &bins, ri.draws, config.seed)
            .map_err(CliError::core("reseq.risk_index"))?;
        let mut y = Table::new(
            "reseq_risk_index",
            &["outcome", "bin", "lower", "upper", "units", "carriers", "carrier_probability", "standard_error"],
        );
        for b in &r.bins {
            y.push(vec![
                match b.outcome {
                    msgwas::genetics::Outcome::Case => "case",
                    msgwas::genetics::Outcome::Control => "control",
                }
                .into(),
                b.bin.into(),
                b.lower.into(),
                b.upper.into(),
                b.units.into(),
                b.carriers.into(),
                b.carrier_probability.into(),
                b.standard_error.into(),
            ]);
        }
        tables.push(y);
    }
    Ok(Output {
        tables,
        files: Vec::new(),
    })
}
