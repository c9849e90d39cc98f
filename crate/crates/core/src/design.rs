//! Genotyping cost model and grid search for cost-optimal two-stage designs.
//!
//! Stage I genotypes all `m` markers on a fraction `pi` of the subjects; stage
//! II genotypes the expected `m * alpha1 * (1 + flanking)` carried-forward
//! markers on the rest, at `cost_ratio` times the per-genotype price.
//!
//! The required noncentrality of a design depends only on
//! `(pi, alpha1, alpha_joint)`, so the sample size for a given effect is that
//! noncentrality divided by the per-subject noncentrality of the effect. The
//! search minimizes the continuous-sample-size cost; the returned design rounds
//! the sample size up.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genetics::MarkerCausalModel;
use crate::power::{
    joint_two_stage_power, noncentrality, null_rate, required_noncentrality, single_stage_power,
    solve_joint_threshold, SignRule, TwoStageDesign,
};
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel<T> {
    /// Stage-II over stage-I price per genotype.
    pub cost_ratio: T,
    pub stage1_unit_cost: T,
    /// Extra stage-II markers genotyped around each stage-I hit.
    pub flanking_per_hit: u32,
}

impl<T: Real> CostModel<T> {
    pub fn new(cost_ratio: T, flanking_per_hit: u32) -> Result<Self> {
        let c = CostModel {
            cost_ratio,
            stage1_unit_cost: T::one(),
            flanking_per_hit,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cost_ratio > T::zero() && self.cost_ratio.is_finite()) {
            return Err(Error::param("cost_ratio", "must be positive and finite"));
        }
        if !(self.stage1_unit_cost > T::zero() && self.stage1_unit_cost.is_finite()) {
            return Err(Error::param("stage1_unit_cost", "must be positive and finite"));
        }
        Ok(())
    }

    /// Genotyping cost per enrolled subject.
    pub fn per_subject(&self, stage1_fraction: T, alpha1: T, n_markers: u64) -> T {
        let m: T = lit(n_markers as f64);
        let hits = alpha1 * lit::<T>(1.0 + self.flanking_per_hit as f64);
        self.stage1_unit_cost
            * m
            * (stage1_fraction + self.cost_ratio * hits * (T::one() - stage1_fraction))
    }
}

/// Source of the per-subject noncentrality.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EffectSpec<T> {
    Noncentrality { per_subject: T },
    Model { model: MarkerCausalModel<T>, case_fraction: T },
}

impl<T: Real> EffectSpec<T> {
    /// Multiplicative per-allele RR 1.5 at a directly typed marker with minor
    /// allele frequency 0.2, equal numbers of cases and controls.
    pub fn reference() -> Self {
        EffectSpec::Model {
            model: MarkerCausalModel::direct(lit(0.2), lit(1.5)).expect("valid reference model"),
            case_fraction: lit(0.5),
        }
    }

    pub fn lambda_per_subject(&self) -> Result<T> {
        match self {
            EffectSpec::Noncentrality { per_subject } => {
                if *per_subject >= T::zero() && per_subject.is_finite() {
                    Ok(*per_subject)
                } else {
                    Err(Error::param("effect.per_subject", "must be non-negative"))
                }
            }
            EffectSpec::Model {
                model,
                case_fraction,
            } => noncentrality(model, T::one(), *case_fraction),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignConstraints<T> {
    pub fwer_target: T,
    pub power_target: T,
    pub effect: EffectSpec<T>,
    pub n_max: Option<u64>,
    pub n_markers: u64,
    pub effective_tests: Option<T>,
}

impl<T: Real> DesignConstraints<T> {
    pub fn reference(n_markers: u64) -> Self {
        DesignConstraints {
            fwer_target: lit(0.05),
            power_target: lit(0.8),
            effect: EffectSpec::reference(),
            n_max: None,
            n_markers,
            effective_tests: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("fwer_target", self.fwer_target), ("power_target", self.power_target)] {
            if !(v > T::zero() && v < T::one()) {
                return Err(Error::param(name, format!("{} must lie in (0, 1)", to_f64(&v))));
            }
        }
        if self.n_markers == 0 {
            return Err(Error::param("n_markers", "must be at least 1"));
        }
        if let Some(e) = self.effective_tests {
            if !(e >= T::one()) {
                return Err(Error::param("effective_tests", "must be at least 1"));
            }
        }
        self.effect.lambda_per_subject()?;
        Ok(())
    }

    fn multiplicity(&self) -> T {
        self.effective_tests
            .unwrap_or_else(|| lit(self.n_markers as f64))
    }

    fn stage_one_design(&self, stage1_fraction: T, alpha1: T) -> TwoStageDesign<T> {
        TwoStageDesign {
            n_total: 0,
            stage1_fraction,
            alpha1,
            alpha_joint: alpha1,
            n_markers: self.n_markers,
            effective_tests: self.effective_tests,
            sign_rule: SignRule::Consistent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBreakdown<T> {
    pub stage1_cost: T,
    pub stage2_cost: T,
    pub total_cost: T,
    pub stage1_share: T,
    /// Expected number of markers genotyped in stage II, `m alpha1 (1 + flanking)`.
    pub stage2_markers: T,
}

/// Expected genotyping cost. Stage-II hits are counted under the null
/// (`m * alpha1`), which dominates when true associations are few.
pub fn expected_cost<T: Real>(design: &TwoStageDesign<T>, cost: &CostModel<T>) -> CostBreakdown<T> {
    let m: T = lit(design.n_markers as f64);
    let n: T = lit(design.n_total as f64);
    let pi = design.stage1_fraction;
    let stage2_markers = m * design.alpha1 * lit::<T>(1.0 + cost.flanking_per_hit as f64);
    let stage1_cost = cost.stage1_unit_cost * m * pi * n;
    let stage2_cost =
        cost.stage1_unit_cost * cost.cost_ratio * stage2_markers * (T::one() - pi) * n;
    let total_cost = stage1_cost + stage2_cost;
    let stage1_share = if stage2_cost == T::zero() {
        T::one()
    } else {
        stage1_cost / total_cost
    };
    CostBreakdown {
        stage1_cost,
        stage2_cost,
        total_cost,
        stage1_share,
        stage2_markers,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneStageEquivalent<T> {
    pub n_total: u64,
    pub cost: T,
    /// Per-marker Bonferroni level.
    pub alpha: T,
    pub power: T,
}

fn one_stage_for_power<T: Real>(
    constraints: &DesignConstraints<T>,
    cost: &CostModel<T>,
    power_target: T,
) -> Result<OneStageEquivalent<T>> {
    let alpha = constraints.fwer_target / constraints.multiplicity();
    let per_subject = constraints.effect.lambda_per_subject()?;
    if per_subject <= T::zero() {
        return Err(Error::Unattainable {
            target: to_f64(&power_target),
            reason: "the effect has zero noncentrality".into(),
        });
    }
    let lambda = required_noncentrality(|l| single_stage_power(l, alpha), power_target)?;
    let mut n = (lambda / per_subject).ceil().to_u64().unwrap_or(u64::MAX);
    while single_stage_power(lit::<T>(n as f64) * per_subject, alpha)? < power_target {
        n += 1;
    }
    while n > 1 && single_stage_power(lit::<T>((n - 1) as f64) * per_subject, alpha)? >= power_target {
        n -= 1;
    }
    if let Some(cap) = constraints.n_max {
        if n > cap {
            return Err(Error::Unattainable {
                target: to_f64(&power_target),
                reason: format!("one-stage design needs {n} subjects, above n_max = {cap}"),
            });
        }
    }
    let power = single_stage_power(lit::<T>(n as f64) * per_subject, alpha)?;
    let m: T = lit(constraints.n_markers as f64);
    Ok(OneStageEquivalent {
        n_total: n,
        cost: cost.stage1_unit_cost * m * lit(n as f64),
        alpha,
        power,
    })
}

/// Smallest one-stage sample reaching the power target at the Bonferroni level.
pub fn one_stage_equivalent<T: Real>(
    constraints: &DesignConstraints<T>,
    cost: &CostModel<T>,
) -> Result<OneStageEquivalent<T>> {
    constraints.validate()?;
    cost.validate()?;
    one_stage_for_power(constraints, cost, constraints.power_target)
}

/// Search grid over the stage-I fraction and stage-I significance level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchGrid {
    pub pi_min: f64,
    pub pi_max: f64,
    pub pi_step: f64,
    pub alpha1_min: f64,
    pub alpha1_max: f64,
    pub alpha1_points: usize,
    /// Local pass at ten times the resolution around the coarse optimum.
    pub refine: bool,
}

impl Default for SearchGrid {
    fn default() -> Self {
        SearchGrid {
            pi_min: 0.05,
            pi_max: 1.0,
            pi_step: 0.01,
            alpha1_min: 1e-5,
            alpha1_max: 0.1,
            alpha1_points: 60,
            refine: true,
        }
    }
}

impl SearchGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.pi_min > 0.0 && self.pi_min <= self.pi_max && self.pi_max <= 1.0) {
            return Err(Error::param("grid.pi_min", "need 0 < pi_min <= pi_max <= 1"));
        }
        if !(self.pi_step > 0.0) {
            return Err(Error::param("grid.pi_step", "must be positive"));
        }
        if !(self.alpha1_min > 0.0 && self.alpha1_min <= self.alpha1_max && self.alpha1_max <= 1.0) {
            return Err(Error::param(
                "grid.alpha1_min",
                "need 0 < alpha1_min <= alpha1_max <= 1",
            ));
        }
        if self.alpha1_points == 0 {
            return Err(Error::param("grid.alpha1_points", "must be at least 1"));
        }
        Ok(())
    }

    pub fn pi_values(&self) -> Vec<f64> {
        let count = ((self.pi_max - self.pi_min) / self.pi_step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| round9(self.pi_min + i as f64 * self.pi_step))
            .filter(|p| *p <= self.pi_max + 1e-12)
            .collect()
    }

    fn log_ratio(&self) -> f64 {
        if self.alpha1_points < 2 {
            0.0
        } else {
            (self.alpha1_max / self.alpha1_min).ln() / (self.alpha1_points - 1) as f64
        }
    }

    pub fn alpha1_values(&self) -> Vec<f64> {
        let step = self.log_ratio();
        (0..self.alpha1_points)
            .map(|i| (self.alpha1_min.ln() + i as f64 * step).exp())
            .collect()
    }

    fn refined_cells(&self, pi: f64, alpha1: f64) -> Vec<(f64, f64)> {
        let fine = self.pi_step / 10.0;
        let pis: Vec<f64> = (-10..=10)
            .map(|i| round9(pi + i as f64 * fine))
            .filter(|p| *p >= self.pi_min - 1e-12 && *p <= self.pi_max + 1e-12)
            .collect();
        let step = self.log_ratio() / 10.0;
        let alphas: Vec<f64> = (-10..=10)
            .map(|i| alpha1 * (i as f64 * step).exp())
            .filter(|a| *a >= self.alpha1_min * (1.0 - 1e-12) && *a <= self.alpha1_max * (1.0 + 1e-12))
            .map(|a| a.min(1.0))
            .collect();
        pis.iter()
            .flat_map(|p| alphas.iter().map(move |a| (*p, *a)))
            .collect()
    }
}

fn round9(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell<T> {
    pub stage1_fraction: T,
    pub alpha1: T,
    pub alpha_joint: Option<T>,
    /// Noncentrality needed for the power target (min-cost search only).
    pub lambda_required: Option<T>,
    /// Sample size, continuous for min-cost and integral for max-power.
    pub n_total: Option<T>,
    pub power: Option<T>,
    pub total_cost: Option<T>,
    pub feasible: bool,
    pub refined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizedDesign<T> {
    pub design: TwoStageDesign<T>,
    pub cost: CostBreakdown<T>,
    pub power: T,
    /// `m * per-marker null rate`; at most the FWER target.
    pub family_wise_error: T,
    pub one_stage: Option<OneStageEquivalent<T>>,
    /// Total cost relative to the one-stage design with the same power.
    pub cost_vs_one_stage: Option<T>,
    /// Total cost relative to genotyping every marker on the same subjects.
    pub cost_vs_one_stage_equal_n: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Optimization<T> {
    pub best: OptimizedDesign<T>,
    pub grid: Vec<GridCell<T>>,
}

fn min_cost_cell<T: Real>(
    pi: f64,
    alpha1: f64,
    refined: bool,
    constraints: &DesignConstraints<T>,
    cost: &CostModel<T>,
    per_subject: T,
) -> GridCell<T> {
    let pi_t: T = lit(pi);
    let a1_t: T = lit(alpha1);
    let mut cell = GridCell {
        stage1_fraction: pi_t,
        alpha1: a1_t,
        alpha_joint: None,
        lambda_required: None,
        n_total: None,
        power: None,
        total_cost: None,
        feasible: false,
        refined,
    };
    let base = constraints.stage_one_design(pi_t, a1_t);
    let Ok(alpha_joint) = solve_joint_threshold(&base, constraints.fwer_target) else {
        return cell;
    };
    cell.alpha_joint = Some(alpha_joint);
    let design = base.with_alpha_joint(alpha_joint);
    let Ok(lambda) =
        required_noncentrality(|l| joint_two_stage_power(&design, l), constraints.power_target)
    else {
        return cell;
    };
    let n = lambda / per_subject;
    cell.lambda_required = Some(lambda);
    cell.n_total = Some(n);
    cell.power = Some(constraints.power_target);
    cell.total_cost = Some(n * cost.per_subject(pi_t, a1_t, constraints.n_markers));
    cell.feasible = match constraints.n_max {
        Some(cap) => n <= lit(cap as f64),
        None => true,
    };
    cell
}

// First strictly better cell wins, so ties resolve to the earlier grid entry
// (smaller pi, then smaller alpha1).
fn argbest<T: Real, F: Fn(&GridCell<T>, &GridCell<T>) -> bool>(
    cells: &[GridCell<T>],
    better: F,
) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in cells.iter().enumerate() {
        if !c.feasible {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) if better(c, &cells[b]) => best = Some(i),
            _ => {}
        }
    }
    best
}

fn cheaper<T: Real>(a: &GridCell<T>, b: &GridCell<T>) -> bool {
    let (ca, cb) = (a.total_cost.unwrap(), b.total_cost.unwrap());
    ca < cb
        || (ca == cb
            && (a.stage1_fraction < b.stage1_fraction
                || (a.stage1_fraction == b.stage1_fraction && a.alpha1 < b.alpha1)))
}

fn finish<T: Real>(
    cell: &GridCell<T>,
    n_total: u64,
    constraints: &DesignConstraints<T>,
    cost: &CostModel<T>,
    per_subject: T,
) -> Result<OptimizedDesign<T>> {
    let design = TwoStageDesign {
        n_total,
        alpha_joint: cell.alpha_joint.expect("feasible cell has a threshold"),
        ..constraints.stage_one_design(cell.stage1_fraction, cell.alpha1)
    };
    let breakdown = expected_cost(&design, cost);
    let power = joint_two_stage_power(&design, lit::<T>(n_total as f64) * per_subject)?;
    let family_wise_error = null_rate(&design)? * constraints.multiplicity();
    let one_stage = if power > T::zero() && power < T::one() {
        one_stage_for_power(constraints, cost, power).ok()
    } else {
        None
    };
    let m: T = lit(constraints.n_markers as f64);
    Ok(OptimizedDesign {
        cost_vs_one_stage: one_stage.map(|o| breakdown.total_cost / o.cost),
        cost_vs_one_stage_equal_n: breakdown.total_cost
            / (cost.stage1_unit_cost * m * lit(n_total as f64)),
        design,
        cost: breakdown,
        power,
        family_wise_error,
        one_stage,
    })
}

/// Cheapest design meeting the FWER and power targets.
pub fn optimize_min_cost<T: Real>(
    constraints: &DesignConstraints<T>,
    cost: &CostModel<T>,
    grid: &SearchGrid,
) -> Result<Optimization<T>> {
    constraints.validate()?;
    cost.validate()?;
    grid.validate()?;
    let per_subject = constraints.effect.lambda_per_subject()?;
    if per_subject <= T::zero() {
        return Err(Error::Infeasible(
            "the effect has zero noncentrality; no sample size reaches the power target".into(),
        ));
    }
    let alphas = grid.alpha1_values();
    let coarse: Vec<(f64, f64)> = grid
        .pi_values()
        .into_iter()
        .flat_map(|p| alphas.iter().map(move |a| (p, *a)))
        .collect();
    let mut cells: Vec<GridCell<T>> = coarse
        .par_iter()
        .map(|&(p, a)| min_cost_cell(p, a, false, constraints, cost, per_subject))
        .collect();
    let Some(mut best) = argbest(&cells, cheaper) else {
        return Err(Error::Infeasible(
            "no grid design meets the power target within n_max".into(),
        ));
    };
    if grid.refine {
        let (p, a) = coarse[best];
        let fine: Vec<GridCell<T>> = grid
            .refined_cells(p, a)
            .par_iter()
            .map(|&(p, a)| min_cost_cell(p, a, true, constraints, cost, per_subject))
            .collect();
        if let Some(i) = argbest(&fine, cheaper) {
            if cheaper(&fine[i], &cells[best]) {
                best = cells.len() + i;
            }
        }
        cells.extend(fine);
    }
    let out = finish_rounded(&cells[best], constraints, cost, per_subject)?;
    Ok(Optimization {
        best: out,
        grid: cells,
    })
}

/// Rounds the continuous sample size of a feasible cell up until the
/// integer design reaches the power target.
fn finish_rounded<T: Real>(
    cell: &GridCell<T>,
    constraints: &DesignConstraints<T>,
    cost: &CostModel<T>,
    per_subject: T,
) -> Result<OptimizedDesign<T>> {
    let n = cell.n_total.expect("feasible");
    let mut n_int = n.ceil().to_u64().unwrap_or(u64::MAX).max(1);
    loop {
        let out = finish(cell, n_int, constraints, cost, per_subject)?;
        if out.power >= constraints.power_target {
            return Ok(out);
        }
        n_int += 1;
    }
}

/// Cheapest sample size and resulting cost of one fixed `(pi, alpha1)`
/// design under the same targets as [`optimize_min_cost`].
pub fn evaluate_design<T: Real>(
    stage1_fraction: f64,
    alpha1: f64,
    constraints: &DesignConstraints<T>,
    cost: &CostModel<T>,
) -> Result<OptimizedDesign<T>> {
    constraints.validate()?;
    cost.validate()?;
    constraints
        .stage_one_design(lit(stage1_fraction), lit(alpha1))
        .validate_stage_one()?;
    let per_subject = constraints.effect.lambda_per_subject()?;
    if per_subject <= T::zero() {
        return Err(Error::Infeasible(
            "the effect has zero noncentrality; no sample size reaches the power target".into(),
        ));
    }
    let cell = min_cost_cell(stage1_fraction, alpha1, false, constraints, cost, per_subject);
    if cell.alpha_joint.is_none() || cell.n_total.is_none() {
        return Err(Error::Infeasible(format!(
            "no joint threshold or sample size for pi = {stage1_fraction}, alpha1 = {alpha1}"
        )));
    }
    if !cell.feasible {
        return Err(Error::Infeasible(format!(
            "pi = {stage1_fraction}, alpha1 = {alpha1} needs more than n_max subjects"
        )));
    }
    finish_rounded(&cell, constraints, cost, per_subject)
}

/// Most powerful design whose expected cost stays within `budget`. The
/// power target in `constraints` is not used.
pub fn optimize_max_power<T: Real>(
    budget: T,
    constraints: &DesignConstraints<T>,
    cost: &CostModel<T>,
    grid: &SearchGrid,
) -> Result<Optimization<T>> {
    if !(budget > T::zero()) {
        return Err(Error::param("budget", "must be positive"));
    }
    cost.validate()?;
    grid.validate()?;
    if !(constraints.fwer_target > T::zero() && constraints.fwer_target < T::one()) {
        return Err(Error::param("fwer_target", "must lie in (0, 1)"));
    }
    let per_subject = constraints.effect.lambda_per_subject()?;
    let alphas = grid.alpha1_values();
    let coarse: Vec<(f64, f64)> = grid
        .pi_values()
        .into_iter()
        .flat_map(|p| alphas.iter().map(move |a| (p, *a)))
        .collect();
    let cells: Vec<GridCell<T>> = coarse
        .par_iter()
        .map(|&(p, a)| {
            let pi_t: T = lit(p);
            let a1_t: T = lit(a);
            let mut cell = GridCell {
                stage1_fraction: pi_t,
                alpha1: a1_t,
                alpha_joint: None,
                lambda_required: None,
                n_total: None,
                power: None,
                total_cost: None,
                feasible: false,
                refined: false,
            };
            let base = constraints.stage_one_design(pi_t, a1_t);
            let Ok(alpha_joint) = solve_joint_threshold(&base, constraints.fwer_target) else {
                return cell;
            };
            cell.alpha_joint = Some(alpha_joint);
            let per = cost.per_subject(pi_t, a1_t, constraints.n_markers);
            let mut n = (budget / per).floor().to_u64().unwrap_or(u64::MAX);
            if let Some(cap) = constraints.n_max {
                n = n.min(cap);
            }
            let design = TwoStageDesign {
                n_total: n,
                ..base.with_alpha_joint(alpha_joint)
            };
            while n > 0 && expected_cost(&design_with_n(&design, n), cost).total_cost > budget {
                n -= 1;
            }
            if n == 0 {
                return cell;
            }
            let Ok(power) = joint_two_stage_power(&design, lit::<T>(n as f64) * per_subject) else {
                return cell;
            };
            cell.n_total = Some(lit(n as f64));
            cell.power = Some(power);
            cell.total_cost = Some(expected_cost(&design_with_n(&design, n), cost).total_cost);
            cell.feasible = true;
            cell
        })
        .collect();
    let more_powerful = |a: &GridCell<T>, b: &GridCell<T>| {
        let (pa, pb) = (a.power.unwrap(), b.power.unwrap());
        pa > pb || (pa == pb && cheaper(a, b))
    };
    let Some(best) = argbest(&cells, more_powerful) else {
        return Err(Error::Infeasible(format!(
            "budget {} does not cover a single subject in any grid design",
            to_f64(&budget)
        )));
    };
    let cell = &cells[best];
    let n = cell.n_total.unwrap().to_u64().expect("integral sample size");
    let out = finish(cell, n, constraints, cost, per_subject)?;
    Ok(Optimization {
        best: out,
        grid: cells,
    })
}

fn design_with_n<T: Real>(design: &TwoStageDesign<T>, n: u64) -> TwoStageDesign<T> {
    TwoStageDesign {
        n_total: n,
        ..design.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn design(pi: f64, alpha1: f64) -> TwoStageDesign<f64> {
        TwoStageDesign {
            n_total: 1000,
            stage1_fraction: pi,
            alpha1,
            alpha_joint: alpha1.min(1e-7),
            n_markers: 500_000,
            effective_tests: None,
            sign_rule: SignRule::Consistent,
        }
    }

    #[test]
    fn cost_share_examples() {
        let plain = expected_cost(&design(0.30, 0.0037), &CostModel::new(17.5, 0).unwrap());
        assert_abs_diff_eq!(plain.stage1_share, 0.87, epsilon = 0.01);
        assert_abs_diff_eq!(plain.stage2_markers, 1850.0, epsilon = 1e-9);
        let flank = expected_cost(&design(0.49, 0.0005), &CostModel::new(17.5, 5).unwrap());
        assert_abs_diff_eq!(flank.stage1_share, 0.95, epsilon = 0.01);
        let none = expected_cost(&design(0.30, 0.0), &CostModel::new(17.5, 0).unwrap());
        assert_eq!(none.stage1_share, 1.0);
    }

    #[test]
    fn breakdown_matches_per_subject_cost() {
        let cost = CostModel::new(17.5, 2).unwrap();
        let d = design(0.4, 0.002);
        let b = expected_cost(&d, &cost);
        let per = cost.per_subject(0.4, 0.002, 500_000) * 1000.0;
        assert_abs_diff_eq!(b.total_cost, per, epsilon = 1e-6 * per);
    }

    #[test]
    fn grid_shape() {
        let g = SearchGrid::default();
        let pis = g.pi_values();
        assert_eq!(pis.len(), 96);
        assert_eq!(pis[0], 0.05);
        assert_eq!(*pis.last().unwrap(), 1.0);
        let alphas = g.alpha1_values();
        assert_eq!(alphas.len(), 60);
        assert_abs_diff_eq!(alphas[0], 1e-5, epsilon = 1e-18);
        assert_abs_diff_eq!(alphas[59], 0.1, epsilon = 1e-14);
    }

    #[test]
    fn one_stage_unattainable_for_null_effect() {
        let mut c = DesignConstraints::<f64>::reference(1000);
        c.effect = EffectSpec::Noncentrality { per_subject: 0.0 };
        let cost = CostModel::new(17.5, 0).unwrap();
        assert!(matches!(
            one_stage_equivalent(&c, &cost),
            Err(Error::Unattainable { .. })
        ));
    }

    #[test]
    fn one_stage_sample_grows_with_marker_count() {
        let cost = CostModel::new(17.5, 0).unwrap();
        let a = one_stage_equivalent(&DesignConstraints::<f64>::reference(250_000), &cost).unwrap();
        let b = one_stage_equivalent(&DesignConstraints::<f64>::reference(500_000), &cost).unwrap();
        assert!(b.n_total > a.n_total);
        assert!(a.power >= 0.8 && b.power >= 0.8);
    }

    #[test]
    fn one_stage_respects_cap() {
        let mut c = DesignConstraints::<f64>::reference(500_000);
        c.n_max = Some(100);
        let cost = CostModel::new(17.5, 0).unwrap();
        assert!(one_stage_equivalent(&c, &cost).is_err());
    }

    fn small_grid() -> SearchGrid {
        SearchGrid {
            pi_min: 0.1,
            pi_max: 1.0,
            pi_step: 0.05,
            alpha1_min: 1e-4,
            alpha1_max: 0.1,
            alpha1_points: 10,
            refine: false,
        }
    }

    #[test]
    fn free_stage_two_pushes_pi_to_grid_minimum() {
        let c = DesignConstraints::<f64>::reference(10_000);
        let cost = CostModel::new(1e-9, 0).unwrap();
        let out = optimize_min_cost(&c, &cost, &small_grid()).unwrap();
        assert_eq!(out.best.design.stage1_fraction, 0.1);
    }

    #[test]
    fn optimum_satisfies_constraints() {
        let c = DesignConstraints::<f64>::reference(10_000);
        let cost = CostModel::new(17.5, 0).unwrap();
        let out = optimize_min_cost(&c, &cost, &small_grid()).unwrap();
        assert!(out.best.power >= 0.8);
        assert!(out.best.family_wise_error <= 0.05 * (1.0 + 1e-9));
        out.best.design.validate().unwrap();
        assert!(out.best.cost.stage1_share > 0.0 && out.best.cost.stage1_share <= 1.0);
        assert!(out.best.cost_vs_one_stage.unwrap() > 0.0);
    }

    #[test]
    fn infeasible_under_tight_cap() {
        let mut c = DesignConstraints::<f64>::reference(10_000);
        c.n_max = Some(10);
        let cost = CostModel::new(17.5, 0).unwrap();
        assert!(matches!(
            optimize_min_cost(&c, &cost, &small_grid()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn max_power_budget_too_small() {
        let c = DesignConstraints::<f64>::reference(10_000);
        let cost = CostModel::new(17.5, 0).unwrap();
        assert!(optimize_max_power(1.0, &c, &cost, &small_grid()).is_err());
    }
}
