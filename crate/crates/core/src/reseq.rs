//! Stratified subsampling for deep resequencing after a hit.
//!
//! The sampling unit is the gamete (one chromosome), matching the gamete
//! model in [`crate::genetics`]: strata are (outcome, marker allele) cells, or
//! (outcome, risk-index bin) cells when several markers are combined into a
//! score. Only substudy inference is provided: the offset-logistic fit uses
//! the sampled units alone, not the mixture likelihood over the main study.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genetics::{MarkerAllele, Outcome, Stratum};
use crate::logistic::{fit, BinomialData, LogisticFit};
use crate::rng::{derive_seed, substream, TAG_RISK_INDEX, TAG_SUBSTUDY};
use crate::scalar::Field;
use crate::MarkerCausalModel;

/// Carrier yield `Pr(G = 1 | marker, outcome)` of each stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumYields<T> {
    /// In [`Stratum::ALL`] order.
    pub yields: [(Stratum, T); 4],
    /// Highest-yield stratum; ties go to the earlier stratum in table order.
    pub argmax: Stratum,
}

impl<T: Field> StratumYields<T> {
    pub fn get(&self, stratum: Stratum) -> &T {
        &self.yields.iter().find(|(s, _)| *s == stratum).expect("all strata present").1
    }

    /// Strata from highest to lowest yield, ties in table order.
    pub fn ranking(&self) -> [Stratum; 4] {
        let mut order = self.yields.clone();
        // stable sort keeps table order among ties
        order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        std::array::from_fn(|i| order[i].0)
    }
}

pub fn stratum_yields<T: Field>(model: &crate::genetics::MarkerCausalModel<T>) -> Result<StratumYields<T>> {
    let table = model.cell_table()?;
    let yields = Stratum::ALL.map(|s| (s, table.carrier_probability(s).clone()));
    let mut argmax = 0;
    for k in 1..4 {
        if yields[k].1 > yields[argmax].1 {
            argmax = k;
        }
    }
    Ok(StratumYields {
        argmax: yields[argmax].0,
        yields,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Purpose {
    /// Maximize the number of carriers found; strata may go unsampled.
    DiscoveryOnly,
    /// Every stratum gets a nonzero sampling probability so the substudy can
    /// be analyzed with offsets.
    JointAnalysis,
}

/// One stratum of a sampling plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanStratum {
    pub outcome: Outcome,
    /// Marker allele index (0 major, 1 minor) or risk-index bin.
    pub class: usize,
    pub label: String,
    pub population: u64,
    pub sampled: u64,
    pub fraction: f64,
    /// Carrier probability of a unit drawn from this stratum.
    pub carrier_probability: f64,
}

impl PlanStratum {
    pub fn expected_carriers(&self) -> f64 {
        self.sampled as f64 * self.carrier_probability
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingPlan {
    pub purpose: Purpose,
    pub strata: Vec<PlanStratum>,
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<()> {
        for s in &self.strata {
            if !(0.0..=1.0).contains(&s.fraction) {
                return Err(Error::param("fraction", format!("{} has fraction {}", s.label, s.fraction)));
            }
            if s.sampled > s.population {
                return Err(Error::param(
                    "sampled",
                    format!("{} samples {} of {}", s.label, s.sampled, s.population),
                ));
            }
            if self.purpose == Purpose::JointAnalysis && s.fraction <= 0.0 {
                return Err(Error::param(
                    "fraction",
                    format!("{} is unsampled; joint analysis needs every fraction > 0", s.label),
                ));
            }
        }
        Ok(())
    }

    pub fn total_sampled(&self) -> u64 {
        self.strata.iter().map(|s| s.sampled).sum()
    }

    pub fn expected_carriers(&self) -> f64 {
        self.strata.iter().map(PlanStratum::expected_carriers).sum()
    }

    pub fn fraction(&self, outcome: Outcome, class: usize) -> Option<f64> {
        self.strata
            .iter()
            .find(|s| s.outcome == outcome && s.class == class)
            .map(|s| s.fraction)
    }

    /// Stratum with the most sampled units, ties in plan order.
    pub fn heaviest(&self) -> Option<&PlanStratum> {
        self.strata
            .iter()
            .fold(None, |best: Option<&PlanStratum>, s| match best {
                Some(b) if b.sampled >= s.sampled => Some(b),
                _ => Some(s),
            })
    }
}

/// Expected stratum sizes, in [`Stratum::ALL`] order, of a main study with
/// the given numbers of case and control gametes.
pub fn expected_population(model: &MarkerCausalModel, case_units: u64, control_units: u64) -> Result<[u64; 4]> {
    let table = model.cell_table()?;
    Ok(Stratum::ALL.map(|s| {
        let n = match s.outcome {
            Outcome::Case => case_units,
            Outcome::Control => control_units,
        };
        let minor = (n as f64 * table.minor_allele_freq(s.outcome)).round() as u64;
        match s.marker {
            MarkerAllele::Minor => minor,
            MarkerAllele::Major => n - minor,
        }
    }))
}

/// Allocates `budget` units over the four strata of `population` (given in
/// [`Stratum::ALL`] order).
///
/// Discovery-only plans fill strata in order of decreasing yield. Joint
/// analysis plans give each stratum one unit and share the rest in proportion
/// to yield, capped by stratum size.
pub fn recommend_plan(
    model: &MarkerCausalModel,
    population: &[u64; 4],
    budget: u64,
    purpose: Purpose,
) -> Result<SamplingPlan> {
    let yields = stratum_yields(model)?;
    let total: u64 = population.iter().sum();
    if budget == 0 {
        return Err(Error::param("budget", "must be positive"));
    }
    if budget > total {
        return Err(Error::param(
            "budget",
            format!("{budget} exceeds the {total} units available"),
        ));
    }
    let y: Vec<f64> = yields.yields.iter().map(|(_, v)| *v).collect();
    let sampled = match purpose {
        Purpose::DiscoveryOnly => {
            let mut left = budget;
            let mut out = [0u64; 4];
            for s in yields.ranking() {
                let k = Stratum::ALL.iter().position(|t| *t == s).unwrap();
                out[k] = left.min(population[k]);
                left -= out[k];
            }
            out
        }
        Purpose::JointAnalysis => {
            if budget < 4 {
                return Err(Error::param("budget", "joint analysis needs at least 4 units"));
            }
            if let Some(k) = population.iter().position(|&p| p == 0) {
                return Err(Error::param(
                    "population",
                    format!("stratum {} is empty; joint analysis needs every stratum", Stratum::ALL[k].label()),
                ));
            }
            proportional_allocation(&y, population, budget)
        }
    };
    let strata = Stratum::ALL
        .iter()
        .enumerate()
        .map(|(k, s)| PlanStratum {
            outcome: s.outcome,
            class: s.marker.index(),
            label: s.label().to_string(),
            population: population[k],
            sampled: sampled[k],
            fraction: sampled[k] as f64 / population[k].max(1) as f64,
            carrier_probability: y[k],
        })
        .collect();
    let plan = SamplingPlan { purpose, strata };
    plan.validate()?;
    Ok(plan)
}

/// One unit per stratum, then the remainder by water-filling in proportion
/// to `weights` under the stratum caps; largest remainders are rounded up.
fn proportional_allocation(weights: &[f64], caps: &[u64; 4], budget: u64) -> [u64; 4] {
    let extra = (budget - 4) as f64;
    let room: Vec<f64> = caps.iter().map(|&c| (c - 1) as f64).collect();
    let mut share = [0.0f64; 4];
    let mut capped = [false; 4];
    loop {
        let left = extra - (0..4).filter(|&k| capped[k]).map(|k| share[k]).sum::<f64>();
        let free: Vec<usize> = (0..4).filter(|&k| !capped[k]).collect();
        let w: f64 = free.iter().map(|&k| weights[k]).sum();
        for &k in &free {
            share[k] = if w > 0.0 {
                left * weights[k] / w
            } else {
                left / free.len() as f64
            };
        }
        let over: Vec<usize> = free.iter().copied().filter(|&k| share[k] > room[k]).collect();
        if over.is_empty() {
            break;
        }
        for k in over {
            share[k] = room[k];
            capped[k] = true;
        }
    }
    let mut out: [u64; 4] = std::array::from_fn(|k| 1 + share[k].floor() as u64);
    let mut left = budget - out.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| {
        let fa = share[a] - share[a].floor();
        let fb = share[b] - share[b].floor();
        fb.partial_cmp(&fa)
            .unwrap()
            .then(weights[b].partial_cmp(&weights[a]).unwrap())
    });
    while left > 0 {
        for &k in &order {
            if left > 0 && out[k] < caps[k] {
                out[k] += 1;
                left -= 1;
            }
        }
    }
    out
}

/// Offset per class, `log(f_case(class) / f_control(class))`, indexed by
/// class. Every stratum must have a nonzero fraction.
pub fn sampling_offsets(plan: &SamplingPlan) -> Result<Vec<f64>> {
    let n_class = plan.strata.iter().map(|s| s.class + 1).max().unwrap_or(0);
    let mut offsets = Vec::with_capacity(n_class);
    for class in 0..n_class {
        let f = |o: Outcome| {
            plan.fraction(o, class).ok_or_else(|| {
                Error::param("strata", format!("class {class} lacks a stratum for one outcome"))
            })
        };
        let (fc, fn_) = (f(Outcome::Case)?, f(Outcome::Control)?);
        if !(fc > 0.0 && fn_ > 0.0) {
            return Err(Error::param(
                "fraction",
                format!("class {class} has a zero sampling fraction; offsets undefined"),
            ));
        }
        offsets.push((fc / fn_).ln());
    }
    Ok(offsets)
}

/// Logistic fit with fixed per-unit offsets.
pub type OffsetFit = LogisticFit;

/// Maximum-likelihood logistic regression of `outcome` on `design` with the
/// per-unit `offsets` added to the linear predictor.
pub fn offset_logistic_fit(design: DMatrix<f64>, outcome: &[u8], offsets: &[f64]) -> Result<OffsetFit> {
    let data = BinomialData::bernoulli(design, outcome)?;
    fit(&data, Some(offsets))
}

/// A gamete of the main study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Unit {
    pub outcome: Outcome,
    pub marker: MarkerAllele,
    pub carrier: bool,
}

impl Unit {
    pub fn stratum(&self) -> Stratum {
        Stratum::new(self.outcome, self.marker)
    }
}

/// Draws a main study of case and control gametes from the model's cell
/// table.
pub fn simulate_units(model: &MarkerCausalModel, case_units: usize, control_units: usize, seed: u64) -> Result<Vec<Unit>> {
    let table = model.cell_table()?;
    let mut rng = substream(derive_seed(seed, TAG_SUBSTUDY), 0);
    let mut units = Vec::with_capacity(case_units + control_units);
    for (outcome, n) in [(Outcome::Case, case_units), (Outcome::Control, control_units)] {
        let row = &table.joint[outcome.index()];
        for _ in 0..n {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut cell = (1, 1);
            'find: for m in 0..2 {
                for g in 0..2 {
                    acc += row[m][g];
                    if u < acc {
                        cell = (m, g);
                        break 'find;
                    }
                }
            }
            units.push(Unit {
                outcome,
                marker: MarkerAllele::ALL[cell.0],
                carrier: cell.1 == 1,
            });
        }
    }
    Ok(units)
}

/// Stratum sizes of `units` in [`Stratum::ALL`] order.
pub fn population_counts(units: &[Unit]) -> [u64; 4] {
    let mut counts = [0u64; 4];
    for u in units {
        let k = Stratum::ALL.iter().position(|s| *s == u.stratum()).unwrap();
        counts[k] += 1;
    }
    counts
}

/// Selects each unit independently with its stratum's planned fraction, so
/// the expected size of each stratum matches the plan. Returns indices into
/// `units`, in order. Requires a genotype-class plan.
pub fn draw_substudy(units: &[Unit], plan: &SamplingPlan, seed: u64) -> Result<Vec<usize>> {
    let mut fraction = [[None; 2]; 2];
    for s in &plan.strata {
        if s.class > 1 {
            return Err(Error::param("strata", "substudy draws need a genotype-class plan"));
        }
        fraction[s.outcome.index()][s.class] = Some(s.fraction);
    }
    let mut rng = substream(derive_seed(seed, TAG_SUBSTUDY), 1);
    let mut picked = Vec::with_capacity(plan.total_sampled() as usize);
    for (i, u) in units.iter().enumerate() {
        let f = fraction[u.outcome.index()][u.marker.index()]
            .ok_or_else(|| Error::param("strata", format!("no stratum for {}", u.stratum().label())))?;
        if rng.random::<f64>() < f {
            picked.push(i);
        }
    }
    Ok(picked)
}

/// Intercept-plus-minor-allele design, outcomes and per-unit offsets for the
/// selected units.
pub fn marker_design(units: &[Unit], selected: &[usize], class_offsets: &[f64]) -> (DMatrix<f64>, Vec<u8>, Vec<f64>) {
    let design = DMatrix::from_fn(selected.len(), 2, |i, j| {
        if j == 0 {
            1.0
        } else {
            units[selected[i]].marker.index() as f64
        }
    });
    let outcome = selected.iter().map(|&i| units[i].outcome.index() as u8).collect();
    let offsets = selected
        .iter()
        .map(|&i| class_offsets[units[i].marker.index()])
        .collect();
    (design, outcome, offsets)
}

/// How the score axis is cut into bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinSpec {
    /// Equal-probability bins of the simulated population (control) score;
    /// coincident edges from a discrete score are merged.
    Quantiles(usize),
    /// Interior edges, strictly increasing. Bin `k` is `[e[k-1], e[k])`.
    Edges(Vec<f64>),
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec::Quantiles(5)
    }
}

/// Carrier probability in one (outcome, bin) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinYield {
    pub outcome: Outcome,
    pub bin: usize,
    pub lower: f64,
    pub upper: f64,
    pub units: u64,
    pub carriers: u64,
    /// `None` when the bin is empty for this outcome.
    pub carrier_probability: Option<f64>,
    pub standard_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskIndexYields {
    /// Interior bin edges.
    pub edges: Vec<f64>,
    /// Controls first, then cases; bins in increasing score within each.
    pub bins: Vec<BinYield>,
}

impl RiskIndexYields {
    pub fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn curve(&self, outcome: Outcome) -> Vec<&BinYield> {
        self.bins.iter().filter(|b| b.outcome == outcome).collect()
    }

    pub fn empty_bins(&self) -> Vec<(Outcome, usize)> {
        self.bins
            .iter()
            .filter(|b| b.units == 0)
            .map(|b| (b.outcome, b.bin))
            .collect()
    }
}

const RISK_BLOCK: usize = 4096;

/// Monte Carlo carrier yield by outcome and risk-index bin.
///
/// Each gamete carries one (marker, causal) pair per model, independently
/// across models; its score is `sum coefficients[j] * minor_j` and it is a
/// carrier if any causal allele is present. Case gametes follow the product
/// of the per-model case rows, which is exact for a multiplicative risk
/// model in the rare-disease limit.
pub fn risk_index_yields(
    models: &[MarkerCausalModel],
    coefficients: &[f64],
    bins: &BinSpec,
    draws: usize,
    seed: u64,
) -> Result<RiskIndexYields> {
    if models.is_empty() {
        return Err(Error::param("models", "need at least one marker"));
    }
    if coefficients.len() != models.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {} markers",
            coefficients.len(),
            models.len()
        )));
    }
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::param("coefficients", "must be finite"));
    }
    if draws < 2 {
        return Err(Error::param("draws", "need at least 2 draws per outcome"));
    }
    if models.iter().any(|m| m.prevalence.is_some()) {
        return Err(Error::Unsupported(
            "risk-index yields assume the rare-disease limit; drop `prevalence`".into(),
        ));
    }
    let tables = models.iter().map(|m| m.cell_table()).collect::<Result<Vec<_>>>()?;
    let base = derive_seed(seed, TAG_RISK_INDEX);

    let sample = |outcome: Outcome| -> Vec<(f64, bool)> {
        let n_blocks = draws.div_ceil(RISK_BLOCK);
        (0..n_blocks)
            .into_par_iter()
            .flat_map_iter(|b| {
                let mut rng = substream(base, (outcome.index() as u64) << 32 | b as u64);
                let len = RISK_BLOCK.min(draws - b * RISK_BLOCK);
                let tables = &tables;
                (0..len).map(move |_| {
                    let mut score = 0.0;
                    let mut carrier = false;
                    for (t, c) in tables.iter().zip(coefficients) {
                        let row = &t.joint[outcome.index()];
                        let u: f64 = rng.random();
                        let (m, g) = if u < row[0][0] {
                            (0, 0)
                        } else if u < row[0][0] + row[0][1] {
                            (0, 1)
                        } else if u < row[0][0] + row[0][1] + row[1][0] {
                            (1, 0)
                        } else {
                            (1, 1)
                        };
                        score += c * m as f64;
                        carrier |= g == 1;
                    }
                    (score, carrier)
                })
            })
            .collect()
    };
    let controls = sample(Outcome::Control);
    let cases = sample(Outcome::Case);

    let edges = match bins {
        BinSpec::Edges(e) => {
            if e.windows(2).any(|w| !(w[0] < w[1])) || e.iter().any(|v| !v.is_finite()) {
                return Err(Error::param("bins", "edges must be finite and strictly increasing"));
            }
            e.clone()
        }
        BinSpec::Quantiles(k) => {
            if *k == 0 {
                return Err(Error::param("bins", "need at least one bin"));
            }
            let mut s: Vec<f64> = controls.iter().map(|c| c.0).collect();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let (lo, hi) = (s[0], s[s.len() - 1]);
            let mut e: Vec<f64> = (1..*k).map(|q| s[q * s.len() / k]).collect();
            e.dedup();
            // an edge at the minimum would leave the first bin empty by construction
            e.retain(|v| *v > lo && *v <= hi);
            e
        }
    };
    let bin_of = |score: f64| edges.partition_point(|e| *e <= score);
    let nb = edges.len() + 1;
    let mut out = Vec::with_capacity(2 * nb);
    for (outcome, draws) in [(Outcome::Control, &controls), (Outcome::Case, &cases)] {
        let mut units = vec![0u64; nb];
        let mut carriers = vec![0u64; nb];
        for &(score, carrier) in draws.iter() {
            let b = bin_of(score);
            units[b] += 1;
            carriers[b] += carrier as u64;
        }
        for b in 0..nb {
            let p = (units[b] > 0).then(|| carriers[b] as f64 / units[b] as f64);
            out.push(BinYield {
                outcome,
                bin: b,
                lower: if b == 0 { f64::NEG_INFINITY } else { edges[b - 1] },
                upper: if b == nb - 1 { f64::INFINITY } else { edges[b] },
                units: units[b],
                carriers: carriers[b],
                carrier_probability: p,
                standard_error: p.map(|p| (p * (1.0 - p) / units[b] as f64).sqrt()),
            });
        }
    }
    Ok(RiskIndexYields { edges, bins: out })
}

/// Five markers in positive LD with rare risk variants of varying strength,
/// weighted by their marker log odds ratios.
pub fn example_risk_panel() -> (Vec<MarkerCausalModel>, Vec<f64>) {
    let specs = [
        (0.2, 0.05, 0.030, 2.0),
        (0.3, 0.04, 0.020, 1.8),
        (0.15, 0.05, 0.025, 2.5),
        (0.25, 0.03, 0.015, 1.6),
        (0.1, 0.02, 0.012, 3.0),
    ];
    let models: Vec<MarkerCausalModel> = specs
        .iter()
        .map(|&(pm, pg, d, rr)| MarkerCausalModel::new(pm, pg, d, rr).expect("valid example model"))
        .collect();
    let coefficients = models
        .iter()
        .map(|m| m.cell_table().expect("valid").marker_odds_ratio().ln())
        .collect();
    (models, coefficients)
}
