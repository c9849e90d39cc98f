//! Gamete-level algebra for a biallelic marker in linkage disequilibrium with
//! a biallelic causal variant under a multiplicative risk model.
//!
//! Everything here works one allele (gamete) at a time. Controls follow the
//! population gamete distribution (rare-disease limit) unless a baseline
//! prevalence is supplied; cases follow the population distribution tilted by
//! the per-allele relative risk of the causal variant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{pmax, pmin, to_f64, Field};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Control,
    Case,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Control, Outcome::Case];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Outcome::Control => 0,
            Outcome::Case => 1,
        }
    }
}

/// Allele carried at the marker locus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerAllele {
    Major,
    Minor,
}

impl MarkerAllele {
    pub const ALL: [MarkerAllele; 2] = [MarkerAllele::Major, MarkerAllele::Minor];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            MarkerAllele::Major => 0,
            MarkerAllele::Minor => 1,
        }
    }
}

/// One (outcome, marker allele) cell of the sampling frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Stratum {
    pub outcome: Outcome,
    pub marker: MarkerAllele,
}

impl Stratum {
    /// Table order: major-allele controls, major-allele cases, minor-allele
    /// controls, minor-allele cases. Also the tie-break order for argmax.
    pub const ALL: [Stratum; 4] = [
        Stratum::new(Outcome::Control, MarkerAllele::Major),
        Stratum::new(Outcome::Case, MarkerAllele::Major),
        Stratum::new(Outcome::Control, MarkerAllele::Minor),
        Stratum::new(Outcome::Case, MarkerAllele::Minor),
    ];

    pub const fn new(outcome: Outcome, marker: MarkerAllele) -> Self {
        Stratum { outcome, marker }
    }

    pub fn label(&self) -> &'static str {
        match (self.outcome, self.marker) {
            (Outcome::Control, MarkerAllele::Major) => "control_major",
            (Outcome::Case, MarkerAllele::Major) => "case_major",
            (Outcome::Control, MarkerAllele::Minor) => "control_minor",
            (Outcome::Case, MarkerAllele::Minor) => "case_minor",
        }
    }
}

/// Marker/causal-variant pair with LD coefficient `delta`, defined through
/// `Pr(M and G) = Pr(M) Pr(G) + delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerCausalModel<T> {
    pub marker_freq: T,
    pub causal_freq: T,
    pub delta: T,
    pub rr_causal: T,
    /// Per-gamete disease prevalence. `None` is the rare-disease limit, where
    /// controls are distributed like the population.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prevalence: Option<T>,
}

fn check_freq<T: Field>(name: &'static str, p: &T) -> Result<()> {
    if *p > T::zero() && *p < T::one() {
        Ok(())
    } else {
        Err(Error::param(name, format!("{} must lie in (0, 1)", to_f64(p))))
    }
}

/// Feasible interval for the LD coefficient given the two allele frequencies.
/// The upper end is D' = +1 and the lower end D' = -1.
pub fn delta_bounds<T: Field>(marker_freq: T, causal_freq: T) -> Result<(T, T)> {
    check_freq("marker_freq", &marker_freq)?;
    check_freq("causal_freq", &causal_freq)?;
    let pm = marker_freq;
    let pg = causal_freq;
    let qm = T::one() - pm.clone();
    let qg = T::one() - pg.clone();
    let lo = pmax(
        T::zero() - pm.clone() * pg.clone(),
        T::zero() - qm.clone() * qg.clone(),
    );
    let hi = pmin(pm * qg, qm * pg);
    Ok((lo, hi))
}

impl<T: Field> MarkerCausalModel<T> {
    pub fn new(marker_freq: T, causal_freq: T, delta: T, rr_causal: T) -> Result<Self> {
        let model = MarkerCausalModel {
            marker_freq,
            causal_freq,
            delta,
            rr_causal,
            prevalence: None,
        };
        model.validate()?;
        Ok(model)
    }

    /// The marker is itself the causal variant (D' = 1, matched frequencies).
    pub fn direct(freq: T, rr_causal: T) -> Result<Self> {
        let delta = freq.clone() * (T::one() - freq.clone());
        Self::new(freq.clone(), freq, delta, rr_causal)
    }

    /// Marker unlinked to a causal variant with no effect.
    pub fn null(marker_freq: T) -> Result<Self> {
        let half = T::one() / (T::one() + T::one());
        Self::new(marker_freq, half, T::zero(), T::one())
    }

    pub fn with_prevalence(mut self, prevalence: T) -> Result<Self> {
        self.prevalence = Some(prevalence);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = delta_bounds(self.marker_freq.clone(), self.causal_freq.clone())?;
        if self.rr_causal < T::zero() {
            return Err(Error::param(
                "rr_causal",
                format!("{} must be non-negative", to_f64(&self.rr_causal)),
            ));
        }
        if self.delta < lo || self.delta > hi {
            return Err(Error::InfeasibleDelta {
                delta: to_f64(&self.delta),
                min: to_f64(&lo),
                max: to_f64(&hi),
            });
        }
        if let Some(k) = &self.prevalence {
            check_freq("prevalence", k)?;
            let baseline = self.baseline_risk(k);
            let top = pmax(T::one(), self.rr_causal.clone());
            if baseline * top > T::one() {
                return Err(Error::param(
                    "prevalence",
                    format!(
                        "{} implies a risk above one for causal-allele carriers",
                        to_f64(k)
                    ),
                ));
            }
        }
        Ok(())
    }

    fn baseline_risk(&self, prevalence: &T) -> T {
        let mean_rr = T::one() - self.causal_freq.clone()
            + self.causal_freq.clone() * self.rr_causal.clone();
        prevalence.clone() / mean_rr
    }

    /// Population gamete probabilities indexed `[marker][causal]`.
    pub fn gamete_probabilities(&self) -> [[T; 2]; 2] {
        let pm = self.marker_freq.clone();
        let pg = self.causal_freq.clone();
        let qm = T::one() - pm.clone();
        let qg = T::one() - pg.clone();
        let d = self.delta.clone();
        [
            [qm.clone() * qg.clone() + d.clone(), qm * pg.clone() - d.clone()],
            [pm.clone() * qg - d.clone(), pm * pg + d],
        ]
    }

    pub fn cell_table(&self) -> Result<GameteCellTable<T>> {
        cell_table(self)
    }
}

/// Joint gamete distributions by outcome plus the derived carrier
/// probabilities and marker relative risk.
#[derive(Debug, Clone, PartialEq)]
pub struct GameteCellTable<T> {
    /// `joint[outcome][marker][causal]`; each outcome row sums to one.
    pub joint: [[[T; 2]; 2]; 2],
    /// `Pr(G = 1 | marker, outcome)`, indexed `[outcome][marker]`.
    pub conditional_carrier: [[T; 2]; 2],
    pub marker_rr: T,
}

impl<T: Field> GameteCellTable<T> {
    pub fn joint(&self, outcome: Outcome, marker: MarkerAllele, carrier: bool) -> &T {
        &self.joint[outcome.index()][marker.index()][carrier as usize]
    }

    pub fn carrier_probability(&self, stratum: Stratum) -> &T {
        &self.conditional_carrier[stratum.outcome.index()][stratum.marker.index()]
    }

    /// Frequency of the marker minor allele among gametes of this outcome.
    pub fn minor_allele_freq(&self, outcome: Outcome) -> T {
        let row = &self.joint[outcome.index()][MarkerAllele::Minor.index()];
        row[0].clone() + row[1].clone()
    }

    /// Allelic odds ratio of the marker minor allele, cases versus controls.
    pub fn marker_odds_ratio(&self) -> T {
        let pc = self.minor_allele_freq(Outcome::Case);
        let pn = self.minor_allele_freq(Outcome::Control);
        (pc.clone() * (T::one() - pn.clone())) / ((T::one() - pc) * pn)
    }
}

pub fn cell_table<T: Field>(model: &MarkerCausalModel<T>) -> Result<GameteCellTable<T>> {
    model.validate()?;
    let pop = model.gamete_probabilities();
    let rr = model.rr_causal.clone();
    let risk = |causal: usize| if causal == 1 { rr.clone() } else { T::one() };

    let tilt = |weight: &dyn Fn(usize) -> T| -> Result<[[T; 2]; 2]> {
        let raw: [[T; 2]; 2] =
            std::array::from_fn(|m| std::array::from_fn(|g| pop[m][g].clone() * weight(g)));
        let total = raw
            .iter()
            .flatten()
            .fold(T::zero(), |acc, x| acc + x.clone());
        if total <= T::zero() {
            return Err(Error::Degenerate(
                "outcome has zero probability under this model".into(),
            ));
        }
        Ok(std::array::from_fn(|m| {
            std::array::from_fn(|g| raw[m][g].clone() / total.clone())
        }))
    };

    let controls = match &model.prevalence {
        None => pop.clone(),
        Some(k) => {
            let b = model.baseline_risk(k);
            tilt(&|g| T::one() - b.clone() * risk(g))?
        }
    };
    let cases = tilt(&|g| risk(g))?;
    let joint = [controls, cases];

    let conditional_carrier = std::array::from_fn(|y| {
        std::array::from_fn(|m| {
            let row = &joint[y][m];
            let total = row[0].clone() + row[1].clone();
            if total.is_zero() {
                T::zero()
            } else {
                row[1].clone() / total
            }
        })
    });

    let marker_rr = marker_rr_from_population(&pop, &rr)?;
    Ok(GameteCellTable {
        joint,
        conditional_carrier,
        marker_rr,
    })
}

fn marker_rr_from_population<T: Field>(pop: &[[T; 2]; 2], rr: &T) -> Result<T> {
    let penetrance = |m: usize| {
        let carrier = pop[m][1].clone() / (pop[m][0].clone() + pop[m][1].clone());
        T::one() + carrier * (rr.clone() - T::one())
    };
    let minor = penetrance(MarkerAllele::Minor.index());
    let major = penetrance(MarkerAllele::Major.index());
    if major.is_zero() {
        return Err(Error::Degenerate(
            "major-allele gametes carry zero risk; marker RR undefined".into(),
        ));
    }
    Ok(minor / major)
}

/// Relative risk of disease for the marker minor allele induced through LD.
pub fn marker_rr<T: Field>(model: &MarkerCausalModel<T>) -> Result<T> {
    model.validate()?;
    marker_rr_from_population(&model.gamete_probabilities(), &model.rr_causal)
}

/// Squared allelic correlation between marker and causal variant.
pub fn r_squared<T: Field>(model: &MarkerCausalModel<T>) -> Result<T> {
    model.validate()?;
    let pm = model.marker_freq.clone();
    let pg = model.causal_freq.clone();
    let denom = pm.clone() * (T::one() - pm) * pg.clone() * (T::one() - pg);
    Ok(model.delta.clone() * model.delta.clone() / denom)
}
