//! Synthetic case-control cohorts drawn from the gamete model.
//!
//! Panel markers are in linkage equilibrium with each other. Risk is
//! multiplicative per causal allele, so for a marker that does not interact
//! with the exposure the two gametes of a case are independent draws from the
//! risk-tilted gamete distribution; they are sampled by per-gamete rejection.
//! Markers that interact with the exposure are sampled jointly with it by
//! subject-level rejection against the maximal risk of that block.

use std::io::{BufRead, Read, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::MarkerCausalModel;
use crate::rng::{derive_seed, substream, TAG_COHORT};

pub const MAGIC: &[u8; 5] = b"GWSC1";
/// Attempts allowed per subject before a rejection failure is reported.
pub const MAX_ATTEMPTS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureModel {
    /// Exposure prevalence among subjects with no causal alleles at the
    /// interacting markers.
    pub prevalence: f64,
    /// Main-effect odds ratio of the exposure.
    pub exposure_or: f64,
    /// Per-allele interaction odds ratio at each interacting marker.
    pub interaction_or: f64,
    pub interacting: Vec<usize>,
    /// Log-odds change in exposure per causal allele at the interacting
    /// markers. Zero makes genes and exposure independent in the population.
    #[serde(default)]
    pub ge_log_odds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub n_cases: usize,
    pub n_controls: usize,
    pub panel: Vec<MarkerCausalModel>,
    pub exposure: Option<ExposureModel>,
    pub replicates: usize,
}

impl SimConfig {
    pub fn new(seed: u64, n_cases: usize, n_controls: usize, panel: Vec<MarkerCausalModel>) -> Self {
        SimConfig {
            seed,
            n_cases,
            n_controls,
            panel,
            exposure: None,
            replicates: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cases == 0 {
            return Err(Error::param("n_cases", "must be at least 1"));
        }
        if self.n_controls == 0 {
            return Err(Error::param("n_controls", "must be at least 1"));
        }
        if self.panel.is_empty() {
            return Err(Error::param("panel", "must contain at least one marker"));
        }
        if self.replicates == 0 {
            return Err(Error::param("replicates", "must be at least 1"));
        }
        if self.n_cases + self.n_controls > u32::MAX as usize || self.panel.len() > u32::MAX as usize {
            return Err(Error::param("n_cases", "cohort dimensions must fit in u32"));
        }
        for m in &self.panel {
            m.validate()?;
            if m.rr_causal.is_infinite() {
                return Err(Error::param("panel.rr_causal", "must be finite"));
            }
        }
        if let Some(e) = &self.exposure {
            if !(e.prevalence > 0.0 && e.prevalence < 1.0) {
                return Err(Error::param("exposure.prevalence", "must lie in (0, 1)"));
            }
            for (name, v) in [
                ("exposure.exposure_or", e.exposure_or),
                ("exposure.interaction_or", e.interaction_or),
            ] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::param(name, "must be positive and finite"));
                }
            }
            if !e.ge_log_odds.is_finite() {
                return Err(Error::param("exposure.ge_log_odds", "must be finite"));
            }
            for &j in &e.interacting {
                if j >= self.panel.len() {
                    return Err(Error::param(
                        "exposure.interacting",
                        format!("marker index {j} is outside the panel"),
                    ));
                }
                if self.panel[j].prevalence.is_some() {
                    return Err(Error::param(
                        "panel.prevalence",
                        "interacting markers use the rare-disease limit",
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCohort {
    n_subjects: usize,
    n_markers: usize,
    /// Row-major subjects x markers minor-allele dosages.
    genotypes: Vec<u8>,
    /// 1 = case. Simulated cohorts list cases first.
    phenotype: Vec<u8>,
    exposure: Option<Vec<u8>>,
    /// Marker associated with disease in the generating model.
    associated: Vec<bool>,
}

impl SimulatedCohort {
    pub fn from_parts(
        n_markers: usize,
        genotypes: Vec<u8>,
        phenotype: Vec<u8>,
        exposure: Option<Vec<u8>>,
    ) -> Result<Self> {
        let n = phenotype.len();
        if genotypes.len() != n * n_markers {
            return Err(Error::DimensionMismatch(format!(
                "{} dosages for {n} subjects x {n_markers} markers",
                genotypes.len()
            )));
        }
        if let Some(&g) = genotypes.iter().find(|&&g| g > 2) {
            return Err(Error::Format(format!("dosage {g} outside 0..=2")));
        }
        if let Some(&y) = phenotype.iter().find(|&&y| y > 1) {
            return Err(Error::Format(format!("phenotype {y} is not 0/1")));
        }
        if let Some(e) = &exposure {
            if e.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{} exposures for {n} subjects",
                    e.len()
                )));
            }
            if e.iter().any(|&x| x > 1) {
                return Err(Error::Format("exposure is not 0/1".into()));
            }
        }
        Ok(SimulatedCohort {
            n_subjects: n,
            n_markers,
            genotypes,
            phenotype,
            exposure,
            associated: vec![false; n_markers],
        })
    }

    pub fn n_subjects(&self) -> usize {
        self.n_subjects
    }

    pub fn n_markers(&self) -> usize {
        self.n_markers
    }

    pub fn n_cases(&self) -> usize {
        self.phenotype.iter().filter(|&&y| y == 1).count()
    }

    #[inline]
    pub fn dosage(&self, subject: usize, marker: usize) -> u8 {
        self.genotypes[subject * self.n_markers + marker]
    }

    #[inline]
    pub fn row(&self, subject: usize) -> &[u8] {
        &self.genotypes[subject * self.n_markers..(subject + 1) * self.n_markers]
    }

    pub fn genotypes(&self) -> &[u8] {
        &self.genotypes
    }

    pub fn phenotype(&self) -> &[u8] {
        &self.phenotype
    }

    pub fn exposure(&self) -> Option<&[u8]> {
        self.exposure.as_deref()
    }

    pub fn associated(&self) -> &[bool] {
        &self.associated
    }

    /// Writes the binary genotype file: magic, `n_subjects` and `n_markers`
    /// as little-endian u32, then the row-major dosages.
    pub fn write_genotypes<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.n_subjects as u32).to_le_bytes())?;
        w.write_all(&(self.n_markers as u32).to_le_bytes())?;
        w.write_all(&self.genotypes)?;
        w.flush()?;
        Ok(())
    }

    /// Writes `subject,phenotype[,exposure]` rows.
    pub fn write_phenotypes<W: Write>(&self, mut w: W) -> Result<()> {
        match &self.exposure {
            Some(_) => w.write_all(b"subject,phenotype,exposure\n")?,
            None => w.write_all(b"subject,phenotype\n")?,
        }
        for i in 0..self.n_subjects {
            match &self.exposure {
                Some(e) => writeln!(w, "{i},{},{}", self.phenotype[i], e[i])?,
                None => writeln!(w, "{i},{}", self.phenotype[i])?,
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read, P: BufRead>(mut genotypes: R, phenotypes: P) -> Result<Self> {
        let mut header = [0u8; 13];
        genotypes
            .read_exact(&mut header)
            .map_err(|_| Error::Format("genotype file shorter than its header".into()))?;
        if &header[..5] != MAGIC {
            return Err(Error::Format("bad magic; expected GWSC1".into()));
        }
        let n = u32::from_le_bytes(header[5..9].try_into().unwrap()) as usize;
        let m = u32::from_le_bytes(header[9..13].try_into().unwrap()) as usize;
        let mut dosages = Vec::new();
        genotypes.read_to_end(&mut dosages)?;
        if dosages.len() != n * m {
            return Err(Error::Format(format!(
                "expected {} dosage bytes, found {}",
                n * m,
                dosages.len()
            )));
        }
        let mut lines = phenotypes.lines();
        let head = lines
            .next()
            .ok_or_else(|| Error::Format("empty phenotype file".into()))??;
        let with_exposure = match head.trim_end() {
            "subject,phenotype" => false,
            "subject,phenotype,exposure" => true,
            other => return Err(Error::Format(format!("unexpected phenotype header {other:?}"))),
        };
        let mut phenotype = Vec::with_capacity(n);
        let mut exposure = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            let want = if with_exposure { 3 } else { 2 };
            let parse = |s: &str| {
                s.parse::<u8>()
                    .map_err(|_| Error::Format(format!("line {}: bad value {s:?}", i + 2)))
            };
            if fields.len() != want || fields[0].parse::<usize>().ok() != Some(i) {
                return Err(Error::Format(format!("line {}: malformed row", i + 2)));
            }
            phenotype.push(parse(fields[1])?);
            if with_exposure {
                exposure.push(parse(fields[2])?);
            }
        }
        if phenotype.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} phenotype rows for {n} subjects",
                phenotype.len()
            )));
        }
        Self::from_parts(m, dosages, phenotype, with_exposure.then_some(exposure))
    }
}

const CELL_MARKER: [u8; 4] = [0, 0, 1, 1];
const CELL_CAUSAL: [u8; 4] = [0, 1, 0, 1];

#[derive(Debug, Clone)]
struct MarkerSampler {
    /// Cumulative population probabilities of cells (m0g0, m0g1, m1g0, m1g1).
    cumulative: [f64; 4],
    /// Acceptance probability of a gamete by `[outcome][causal]`.
    accept: [[f64; 2]; 2],
    rr: f64,
    /// Hardy-Weinberg cumulative dosage probabilities, for unassociated markers.
    hwe: [f64; 2],
    tilted: bool,
}

impl MarkerSampler {
    fn new(model: &MarkerCausalModel) -> Self {
        let p = model.gamete_probabilities();
        let cells = [p[0][0], p[0][1], p[1][0], p[1][1]];
        let mut cumulative = [0.0; 4];
        let mut acc = 0.0_f64;
        for (c, v) in cumulative.iter_mut().zip(cells) {
            acc += v.max(0.0);
            *c = acc;
        }
        for c in cumulative.iter_mut() {
            *c /= acc;
        }
        cumulative[3] = 1.0;
        let rr = model.rr_causal;
        let case = [1.0 / rr.max(1.0), rr / rr.max(1.0)];
        let control = match model.prevalence {
            None => [1.0, 1.0],
            Some(k) => {
                let b = k / (1.0 - model.causal_freq + model.causal_freq * rr);
                let w = [1.0 - b, 1.0 - b * rr];
                let top = w[0].max(w[1]);
                [w[0] / top, w[1] / top]
            }
        };
        let q = model.marker_freq;
        MarkerSampler {
            cumulative,
            accept: [control, case],
            rr,
            hwe: [(1.0 - q) * (1.0 - q), (1.0 - q) * (1.0 - q) + 2.0 * q * (1.0 - q)],
            tilted: case != [1.0, 1.0] || control != [1.0, 1.0],
        }
    }

    #[inline]
    fn cell(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.random();
        self.cumulative.iter().position(|&c| u < c).unwrap_or(3)
    }

    #[inline]
    fn gamete(&self, rng: &mut ChaCha8Rng, outcome: usize, attempts: &mut u64) -> Option<usize> {
        loop {
            *attempts += 1;
            if *attempts > MAX_ATTEMPTS {
                return None;
            }
            let c = self.cell(rng);
            let a = self.accept[outcome][CELL_CAUSAL[c] as usize];
            if a >= 1.0 || rng.random::<f64>() < a {
                return Some(c);
            }
        }
    }

    #[inline]
    fn hwe_dosage(&self, rng: &mut ChaCha8Rng) -> u8 {
        let u: f64 = rng.random();
        if u < self.hwe[0] {
            0
        } else if u < self.hwe[1] {
            1
        } else {
            2
        }
    }
}

struct Plan {
    samplers: Vec<MarkerSampler>,
    /// Marker is sampled jointly with the exposure.
    in_block: Vec<bool>,
    exposure: Option<BlockPlan>,
}

struct BlockPlan {
    base_logit: f64,
    ge_log_odds: f64,
    exposure_or: f64,
    interaction_or: f64,
    interacting: Vec<usize>,
    bound: f64,
}

impl Plan {
    fn new(config: &SimConfig) -> Self {
        let samplers: Vec<MarkerSampler> = config.panel.iter().map(MarkerSampler::new).collect();
        let mut in_block = vec![false; samplers.len()];
        let exposure = config.exposure.as_ref().map(|e| {
            let mut interacting = e.interacting.clone();
            interacting.sort_unstable();
            interacting.dedup();
            for &j in &interacting {
                in_block[j] = true;
            }
            let bound_for = |x: f64| -> f64 {
                interacting
                    .iter()
                    .map(|&j| {
                        let r = samplers[j].rr;
                        (r * x).max(1.0).max(r).powi(2)
                    })
                    .product()
            };
            let bound = bound_for(1.0).max(e.exposure_or * bound_for(e.interaction_or));
            BlockPlan {
                base_logit: (e.prevalence / (1.0 - e.prevalence)).ln(),
                ge_log_odds: e.ge_log_odds,
                exposure_or: e.exposure_or,
                interaction_or: e.interaction_or,
                interacting,
                bound,
            }
        });
        Plan {
            samplers,
            in_block,
            exposure,
        }
    }

    fn subject(&self, rng: &mut ChaCha8Rng, case: bool, row: &mut [u8]) -> std::result::Result<u8, u64> {
        let outcome = case as usize;
        let mut attempts = 0u64;
        let mut exposed = 0u8;
        if let Some(b) = &self.exposure {
            let mut causal = vec![0u8; b.interacting.len()];
            loop {
                attempts += 1;
                if attempts > MAX_ATTEMPTS {
                    return Err(attempts);
                }
                let mut risk = 1.0;
                let mut burden = 0.0;
                for (k, &j) in b.interacting.iter().enumerate() {
                    let s = &self.samplers[j];
                    let (c1, c2) = (s.cell(rng), s.cell(rng));
                    row[j] = CELL_MARKER[c1] + CELL_MARKER[c2];
                    causal[k] = CELL_CAUSAL[c1] + CELL_CAUSAL[c2];
                    burden += causal[k] as f64;
                }
                let logit = b.base_logit + b.ge_log_odds * burden;
                let u: f64 = rng.random();
                exposed = (u < 1.0 / (1.0 + (-logit).exp())) as u8;
                if !case {
                    break;
                }
                let x = if exposed == 1 { b.interaction_or } else { 1.0 };
                if exposed == 1 {
                    risk *= b.exposure_or;
                }
                for (k, &j) in b.interacting.iter().enumerate() {
                    risk *= (self.samplers[j].rr * x).powi(causal[k] as i32);
                }
                if rng.random::<f64>() * b.bound < risk {
                    break;
                }
            }
        }
        for (j, s) in self.samplers.iter().enumerate() {
            if self.in_block[j] {
                continue;
            }
            row[j] = if s.tilted {
                let g1 = s.gamete(rng, outcome, &mut attempts).ok_or(attempts)?;
                let g2 = s.gamete(rng, outcome, &mut attempts).ok_or(attempts)?;
                CELL_MARKER[g1] + CELL_MARKER[g2]
            } else {
                s.hwe_dosage(rng)
            };
        }
        Ok(exposed)
    }
}

/// Simulates replicate `replicate` of the configured study. Subject `i` draws
/// from its own substream, so the cohort does not depend on thread count.
pub fn simulate_cohort(config: &SimConfig, replicate: u64) -> Result<SimulatedCohort> {
    config.validate()?;
    let plan = Plan::new(config);
    let n = config.n_cases + config.n_controls;
    let m = config.panel.len();
    let seed = derive_seed(derive_seed(config.seed, TAG_COHORT), replicate);
    let mut genotypes = vec![0u8; n * m];
    let outcomes: Vec<std::result::Result<u8, u64>> = genotypes
        .par_chunks_mut(m)
        .enumerate()
        .map(|(i, row)| {
            let mut rng = substream(seed, i as u64);
            plan.subject(&mut rng, i < config.n_cases, row)
        })
        .collect();
    let mut exposure = Vec::with_capacity(n);
    for o in &outcomes {
        match o {
            Ok(e) => exposure.push(*e),
            Err(attempts) => {
                let accepted = outcomes.iter().filter(|o| o.is_ok()).count();
                return Err(Error::RejectionFailure {
                    attempts: *attempts,
                    accepted: accepted as u64,
                    acceptance_rate: accepted as f64 / n as f64,
                });
            }
        }
    }
    let mut phenotype = vec![0u8; n];
    phenotype[..config.n_cases].fill(1);
    let associated = config
        .panel
        .iter()
        .enumerate()
        .map(|(j, model)| {
            let marginal = model.rr_causal != 1.0 && model.delta != 0.0;
            let interacts = config
                .exposure
                .as_ref()
                .is_some_and(|e| e.interacting.contains(&j) && e.interaction_or != 1.0 && model.delta != 0.0);
            marginal || interacts
        })
        .collect();
    Ok(SimulatedCohort {
        n_subjects: n,
        n_markers: m,
        genotypes,
        phenotype,
        exposure: config.exposure.as_ref().map(|_| exposure),
        associated,
    })
}
