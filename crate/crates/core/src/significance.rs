//! Multiplicity-adjusted p-values for two-stage scans.
//!
//! The per-marker statistic is `T = |Z_joint|` when the marker passes the
//! stage-I hurdle with a sign-consistent joint statistic, otherwise 0. Each
//! adjusted p-value is the null probability that the largest `T` over all
//! markers reaches the observed one, estimated either from simulated score
//! vectors ([`lin_adjusted_p`]) or by permuting labels within stage I and
//! re-running the two-stage analysis on a subsample ([`dudbridge_adjusted_p`]).
//! Marker statistics are Armitage trend (score) z-scores.
//!
//! Adjusted p-values are never reported below the two-hurdle p-value of the
//! marker itself.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assoc::trend_statistic;
use crate::cohort::SimulatedCohort;
use crate::error::{Error, Result};
use crate::normal;
use crate::pipeline::{split_stages, StageSplit};
use crate::power::{two_stage_p_value, SignRule};
use crate::rng::{derive_seed, substream, TAG_DRAWS, TAG_PERMUTE, TAG_SUBSAMPLE};
use crate::TwoStageDesign;

pub const MIN_REPLICATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleKind {
    #[default]
    CaseControl,
    Family,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Lin,
    Dudbridge,
    MaxStatistic,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Lin => "lin",
            Method::Dudbridge => "dudbridge",
            Method::MaxStatistic => "max-statistic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjustOptions {
    /// Monte Carlo draws or permutations.
    pub replicates: usize,
    pub seed: u64,
    /// Seed of the stage split (as in the pipeline).
    pub split_seed: u64,
    pub stage1_kind: SampleKind,
    pub stage2_kind: SampleKind,
}

impl AdjustOptions {
    pub fn new(replicates: usize, seed: u64) -> Self {
        AdjustOptions {
            replicates,
            seed,
            split_seed: seed,
            stage1_kind: SampleKind::CaseControl,
            stage2_kind: SampleKind::CaseControl,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates < MIN_REPLICATES {
            return Err(Error::param(
                "replicates",
                format!("{} is below the minimum of {MIN_REPLICATES}", self.replicates),
            ));
        }
        if self.stage1_kind == SampleKind::CaseControl && self.stage2_kind == SampleKind::Family {
            return Err(Error::Unsupported(
                "case-control stage I with family-based stage II".into(),
            ));
        }
        if self.stage1_kind == SampleKind::Family || self.stage2_kind == SampleKind::Family {
            return Err(Error::Unsupported("family-based samples".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjustedPValues {
    pub method: Method,
    pub statistic: Vec<f64>,
    pub raw: Vec<f64>,
    pub adjusted: Vec<f64>,
    pub standard_error: Vec<f64>,
    pub replicates: usize,
}

/// Precomputed genotype sums for trend statistics over a fixed subject set.
struct TrendBasis<'a> {
    cohort: &'a SimulatedCohort,
    subjects: Vec<usize>,
    sum_g: Vec<f64>,
    ss: Vec<f64>,
}

impl<'a> TrendBasis<'a> {
    fn new(cohort: &'a SimulatedCohort, subjects: &[usize]) -> Self {
        let m = cohort.n_markers();
        let mut sum_g = vec![0.0; m];
        let mut sum_gg = vec![0.0; m];
        for &i in subjects {
            for (j, &g) in cohort.row(i).iter().enumerate() {
                sum_g[j] += g as f64;
                sum_gg[j] += (g as f64) * (g as f64);
            }
        }
        let n = subjects.len() as f64;
        let ss = sum_g.iter().zip(&sum_gg).map(|(s, q)| q - s * s / n).collect();
        TrendBasis {
            cohort,
            subjects: subjects.to_vec(),
            sum_g,
            ss,
        }
    }

    /// Trend z-scores with `is_case(i)` giving the label of subject `i`.
    fn z<F: Fn(usize) -> bool>(&self, is_case: F) -> Vec<f64> {
        let m = self.cohort.n_markers();
        let mut case_g = vec![0.0; m];
        let mut cases = 0usize;
        for &i in &self.subjects {
            if is_case(i) {
                cases += 1;
                for (c, &g) in case_g.iter_mut().zip(self.cohort.row(i)) {
                    *c += g as f64;
                }
            }
        }
        let n = self.subjects.len() as f64;
        let ybar = cases as f64 / n;
        (0..m)
            .map(|j| {
                trend_statistic(case_g[j] - ybar * self.sum_g[j], ybar, self.ss[j], n)
            })
            .collect()
    }
}

#[inline]
fn hurdle_statistic(z1: f64, zj: f64, a: f64, sign_rule: SignRule) -> f64 {
    let sign_ok = sign_rule == SignRule::Ignored || z1.signum() == zj.signum();
    if z1.abs() > a && sign_ok {
        zj.abs()
    } else {
        0.0
    }
}

struct Observed {
    split: StageSplit,
    statistic: Vec<f64>,
    raw: Vec<f64>,
    pi: f64,
}

fn observe(cohort: &SimulatedCohort, design: &TwoStageDesign, options: &AdjustOptions) -> Result<Observed> {
    design.validate_stage_one()?;
    if !(design.stage1_fraction < 1.0) {
        return Err(Error::param("stage1_fraction", "two-stage adjustment needs a stage II"));
    }
    let split = split_stages(cohort, design.stage1_fraction, options.split_seed)?;
    let pi = split.realized_fraction();
    let y = cohort.phenotype();
    let z1 = TrendBasis::new(cohort, &split.stage1).z(|i| y[i] == 1);
    let z2 = TrendBasis::new(cohort, &split.stage2).z(|i| y[i] == 1);
    let a = normal::two_sided_critical(design.alpha1);
    let realized = TwoStageDesign {
        stage1_fraction: pi,
        ..design.clone()
    };
    let mut statistic = Vec::with_capacity(z1.len());
    let mut raw = Vec::with_capacity(z1.len());
    for j in 0..z1.len() {
        let zj = pi.sqrt() * z1[j] + (1.0 - pi).sqrt() * z2[j];
        statistic.push(hurdle_statistic(z1[j], zj, a, design.sign_rule));
        raw.push(two_stage_p_value(&realized, z1[j], zj)?);
    }
    Ok(Observed {
        split,
        statistic,
        raw,
        pi,
    })
}

/// Converts null maxima into adjusted p-values: `(k + plus_one) / (n + plus_one)`
/// with `k` the number of maxima at or above the observed statistic.
fn exceedance(
    method: Method,
    mut maxima: Vec<f64>,
    statistic: Vec<f64>,
    raw: Vec<f64>,
    plus_one: bool,
) -> AdjustedPValues {
    maxima.sort_by(f64::total_cmp);
    let n = maxima.len();
    let extra = plus_one as usize;
    let mut adjusted = Vec::with_capacity(statistic.len());
    let mut standard_error = Vec::with_capacity(statistic.len());
    for (t, r) in statistic.iter().zip(&raw) {
        let below = maxima.partition_point(|&x| x < *t);
        let k = n - below;
        let p = (k + extra) as f64 / (n + extra) as f64;
        adjusted.push(p.max(*r).min(1.0));
        standard_error.push((p * (1.0 - p) / n as f64).sqrt());
    }
    AdjustedPValues {
        method,
        statistic,
        raw,
        adjusted,
        standard_error,
        replicates: n,
    }
}

/// Correlation of the stage-I efficient scores, regularized toward the
/// identity until positive definite. Returns its Cholesky factor.
fn score_correlation_factor(cohort: &SimulatedCohort, subjects: &[usize]) -> Result<DMatrix<f64>> {
    let m = cohort.n_markers();
    let n = subjects.len();
    let y = cohort.phenotype();
    let ybar = subjects.iter().filter(|&&i| y[i] == 1).count() as f64 / n as f64;
    let mut mean_g = vec![0.0; m];
    for &i in subjects {
        for (s, &g) in mean_g.iter_mut().zip(cohort.row(i)) {
            *s += g as f64;
        }
    }
    mean_g.iter_mut().for_each(|s| *s /= n as f64);
    let mut u = DMatrix::<f64>::zeros(n, m);
    for (r, &i) in subjects.iter().enumerate() {
        let dy = y[i] as f64 - ybar;
        for (j, &g) in cohort.row(i).iter().enumerate() {
            u[(r, j)] = dy * (g as f64 - mean_g[j]);
        }
    }
    for j in 0..m {
        let mean = u.column(j).mean();
        u.column_mut(j).add_scalar_mut(-mean);
    }
    let cov = u.tr_mul(&u);
    let sd: Vec<f64> = (0..m).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    let mut corr = DMatrix::<f64>::identity(m, m);
    for a in 0..m {
        for b in 0..a {
            if sd[a] > 0.0 && sd[b] > 0.0 {
                let r = cov[(a, b)] / (sd[a] * sd[b]);
                corr[(a, b)] = r;
                corr[(b, a)] = r;
            }
        }
    }
    let mut weight = 1e-6 * corr.trace() / m as f64;
    if let Some(c) = corr.clone().cholesky() {
        return Ok(c.unpack());
    }
    for _ in 0..12 {
        let mut shrunk = corr.clone();
        for j in 0..m {
            shrunk[(j, j)] += weight;
        }
        if let Some(c) = shrunk.cholesky() {
            return Ok(c.unpack());
        }
        weight *= 10.0;
    }
    Err(Error::Degenerate(
        "score covariance is not positive definite after regularization".into(),
    ))
}

const BATCH: usize = 256;

/// Monte Carlo adjustment from the asymptotic joint normal distribution of
/// the stage-I and stage-II scores, with correlation estimated from stage I.
pub fn lin_adjusted_p(
    cohort: &SimulatedCohort,
    design: &TwoStageDesign,
    options: &AdjustOptions,
) -> Result<AdjustedPValues> {
    options.validate()?;
    let obs = observe(cohort, design, options)?;
    let chol = score_correlation_factor(cohort, &obs.split.stage1)?;
    let m = cohort.n_markers();
    let a = normal::two_sided_critical(design.alpha1);
    let (w1, w2) = (obs.pi.sqrt(), (1.0 - obs.pi).sqrt());
    let seed = derive_seed(options.seed, TAG_DRAWS);
    let n = options.replicates;
    let maxima: Vec<f64> = (0..n.div_ceil(BATCH))
        .into_par_iter()
        .flat_map_iter(|b| {
            let lo = b * BATCH;
            let width = BATCH.min(n - lo);
            let mut x1 = DMatrix::<f64>::zeros(m, width);
            let mut x2 = DMatrix::<f64>::zeros(m, width);
            for c in 0..width {
                let mut rng = substream(seed, (lo + c) as u64);
                for j in 0..m {
                    x1[(j, c)] = StandardNormal.sample(&mut rng);
                }
                for j in 0..m {
                    x2[(j, c)] = StandardNormal.sample(&mut rng);
                }
            }
            let z1 = &chol * x1;
            let z2 = &chol * x2;
            (0..width)
                .map(|c| {
                    (0..m)
                        .map(|j| {
                            let s1 = z1[(j, c)];
                            hurdle_statistic(s1, w1 * s1 + w2 * z2[(j, c)], a, design.sign_rule)
                        })
                        .fold(0.0, f64::max)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(exceedance(Method::Lin, maxima, obs.statistic, obs.raw, false))
}

/// Permutation adjustment within stage I: a stratified subsample of the
/// permuted stage-I data plays stage I and the whole stage-I sample plays
/// the combined sample. Thresholds stay on the z scale, so the hurdle
/// scales with the reduced sample size.
pub fn dudbridge_adjusted_p(
    cohort: &SimulatedCohort,
    design: &TwoStageDesign,
    options: &AdjustOptions,
) -> Result<AdjustedPValues> {
    options.validate()?;
    let obs = observe(cohort, design, options)?;
    let stage1 = &obs.split.stage1;
    let y = cohort.phenotype();
    let n_cases = stage1.iter().filter(|&&i| y[i] == 1).count();
    let n_controls = stage1.len() - n_cases;
    let sub_cases = (design.stage1_fraction * n_cases as f64).round() as usize;
    let sub_controls = (design.stage1_fraction * n_controls as f64).round() as usize;
    if sub_cases < 2 || sub_controls < 2 || n_cases - sub_cases < 2 || n_controls - sub_controls < 2 {
        return Err(Error::param(
            "stage1_fraction",
            format!(
                "stage I ({n_cases} cases, {n_controls} controls) is too small to subsample at fraction {}",
                design.stage1_fraction
            ),
        ));
    }
    let full = TrendBasis::new(cohort, stage1);
    let a = normal::two_sided_critical(design.alpha1);
    let seed = derive_seed(options.seed, TAG_SUBSAMPLE);
    let n_subjects = cohort.n_subjects();
    let maxima: Vec<f64> = (0..options.replicates as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b);
            let mut labels: Vec<u8> = stage1.iter().map(|&i| y[i]).collect();
            labels.shuffle(&mut rng);
            let mut permuted = vec![0u8; n_subjects];
            for (&i, &l) in stage1.iter().zip(&labels) {
                permuted[i] = l;
            }
            let mut cases: Vec<usize> = stage1.iter().copied().filter(|&i| permuted[i] == 1).collect();
            let mut controls: Vec<usize> = stage1.iter().copied().filter(|&i| permuted[i] == 0).collect();
            cases.shuffle(&mut rng);
            controls.shuffle(&mut rng);
            let mut sub: Vec<usize> = cases[..sub_cases]
                .iter()
                .chain(&controls[..sub_controls])
                .copied()
                .collect();
            sub.sort_unstable();
            let z_sub = TrendBasis::new(cohort, &sub).z(|i| permuted[i] == 1);
            let z_all = full.z(|i| permuted[i] == 1);
            z_sub
                .iter()
                .zip(&z_all)
                .map(|(&s, &j)| hurdle_statistic(s, j, a, design.sign_rule))
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(exceedance(Method::Dudbridge, maxima, obs.statistic, obs.raw, true))
}

/// Single-stage max-|z| permutation adjustment on all subjects.
pub fn max_statistic_reference(
    cohort: &SimulatedCohort,
    n_permutations: usize,
    seed: u64,
) -> Result<AdjustedPValues> {
    if n_permutations < MIN_REPLICATES {
        return Err(Error::param(
            "replicates",
            format!("{n_permutations} is below the minimum of {MIN_REPLICATES}"),
        ));
    }
    let y = cohort.phenotype();
    let cases = y.iter().filter(|&&v| v == 1).count();
    if cases == 0 || cases == y.len() {
        return Err(Error::param("phenotype", "needs both cases and controls"));
    }
    let subjects: Vec<usize> = (0..cohort.n_subjects()).collect();
    let basis = TrendBasis::new(cohort, &subjects);
    let observed: Vec<f64> = basis.z(|i| y[i] == 1).iter().map(|z| z.abs()).collect();
    let raw: Vec<f64> = observed.iter().map(|&z| normal::two_sided_p(z)).collect();
    let seed = derive_seed(seed, TAG_PERMUTE);
    let maxima: Vec<f64> = (0..n_permutations as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b);
            let mut labels = y.to_vec();
            labels.shuffle(&mut rng);
            basis
                .z(|i| labels[i] == 1)
                .iter()
                .fold(0.0, |acc: f64, z| acc.max(z.abs()))
        })
        .collect();
    Ok(exceedance(Method::MaxStatistic, maxima, observed, raw, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{simulate_cohort, SimConfig};
    use crate::MarkerCausalModel;

    fn null_cohort(seed: u64, m: usize) -> SimulatedCohort {
        let panel = vec![MarkerCausalModel::null(0.3).unwrap(); m];
        simulate_cohort(&SimConfig::new(seed, 100, 100, panel), 0).unwrap()
    }

    fn design() -> TwoStageDesign {
        TwoStageDesign::new(200, 0.5, 0.2, 0.01, 10).unwrap()
    }

    #[test]
    fn rejects_family_stage_two() {
        let mut o = AdjustOptions::new(200, 1);
        o.stage2_kind = SampleKind::Family;
        let c = null_cohort(1, 3);
        assert!(matches!(lin_adjusted_p(&c, &design(), &o), Err(Error::Unsupported(_))));
        assert!(matches!(dudbridge_adjusted_p(&c, &design(), &o), Err(Error::Unsupported(_))));
    }

    #[test]
    fn too_few_replicates() {
        let c = null_cohort(1, 3);
        assert!(lin_adjusted_p(&c, &design(), &AdjustOptions::new(99, 1)).is_err());
    }

    #[test]
    fn adjusted_bounds_and_monotone() {
        let c = null_cohort(3, 10);
        for res in [
            lin_adjusted_p(&c, &design(), &AdjustOptions::new(2000, 5)).unwrap(),
            dudbridge_adjusted_p(&c, &design(), &AdjustOptions::new(999, 5)).unwrap(),
        ] {
            for j in 0..10 {
                assert!(res.adjusted[j] >= res.raw[j] && res.adjusted[j] <= 1.0);
                for k in 0..10 {
                    if res.statistic[j] > res.statistic[k] {
                        assert!(res.adjusted[j] <= res.adjusted[k]);
                    }
                }
            }
        }
    }

    #[test]
    fn permutation_estimator_definition() {
        let res = exceedance(
            Method::Dudbridge,
            (0..999).map(|i| i as f64).collect(),
            vec![990.0, 0.0],
            vec![0.0, 1.0],
            true,
        );
        // maxima >= 990: 990..=998, k = 9
        assert_eq!(res.adjusted[0], 10.0 / 1000.0);
        assert_eq!(res.adjusted[1], 1.0);
    }

    #[test]
    fn duplicated_columns_share_reference_p() {
        let base = null_cohort(4, 3);
        let mut g = Vec::new();
        for i in 0..base.n_subjects() {
            let r = base.row(i);
            g.extend_from_slice(&[r[0], r[0], r[1], r[2]]);
        }
        let dup = SimulatedCohort::from_parts(4, g, base.phenotype().to_vec(), None).unwrap();
        let res = max_statistic_reference(&dup, 500, 9).unwrap();
        assert_eq!(res.adjusted[0], res.adjusted[1]);
    }
}
