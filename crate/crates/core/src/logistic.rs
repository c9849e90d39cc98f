//! Binomial logistic regression by iteratively reweighted least squares.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 50;
/// Convergence threshold on the largest coefficient change.
pub const TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Fitted probabilities hit 0 or 1: (quasi-)complete separation.
    pub separated: bool,
    /// Offsets used, one per observation.
    pub offsets: Vec<f64>,
}

impl LogisticFit {
    pub fn z(&self, k: usize) -> f64 {
        self.coefficients[k] / self.standard_errors[k]
    }

    /// Two-sided Wald p-value of coefficient `k`; one if the fit did not
    /// converge.
    pub fn wald_p(&self, k: usize) -> f64 {
        if !self.converged || !self.standard_errors[k].is_finite() {
            return 1.0;
        }
        crate::normal::two_sided_p(self.z(k))
    }
}

/// Observations with covariate rows, success counts and trial counts.
#[derive(Debug, Clone, PartialEq)]
pub struct BinomialData {
    pub design: DMatrix<f64>,
    pub successes: Vec<f64>,
    pub trials: Vec<f64>,
}

impl BinomialData {
    /// One Bernoulli observation per row.
    pub fn bernoulli(design: DMatrix<f64>, outcome: &[u8]) -> Result<Self> {
        let data = BinomialData {
            successes: outcome.iter().map(|&y| y as f64).collect(),
            trials: vec![1.0; outcome.len()],
            design,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.design.nrows();
        if self.successes.len() != n || self.trials.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} design rows, {} successes, {} trials",
                self.successes.len(),
                self.trials.len()
            )));
        }
        for (s, t) in self.successes.iter().zip(&self.trials) {
            if !(*t >= 0.0 && *s >= 0.0 && s <= t) {
                return Err(Error::Format(format!("invalid binomial count {s}/{t}")));
            }
        }
        Ok(())
    }
}

/// Maximum-likelihood fit with a fixed offset added to each linear
/// predictor. `None` behaves exactly like all-zero offsets.
pub fn fit(data: &BinomialData, offsets: Option<&[f64]>) -> Result<LogisticFit> {
    data.validate()?;
    let x = &data.design;
    let (n, p) = x.shape();
    let offsets: Vec<f64> = match offsets {
        Some(o) if o.len() != n => {
            return Err(Error::DimensionMismatch(format!("{} offsets for {n} rows", o.len())))
        }
        Some(o) => {
            if o.iter().any(|v| !v.is_finite()) {
                return Err(Error::param("offsets", "must be finite"));
            }
            o.to_vec()
        }
        None => vec![0.0; n],
    };
    let mut beta = DVector::<f64>::zeros(p);
    let mut converged = false;
    let mut separated = false;
    let mut iterations = 0;
    let mut info = DMatrix::<f64>::zeros(p, p);

    for it in 1..=MAX_ITERATIONS {
        iterations = it;
        let eta = x * &beta;
        let mut score = DVector::<f64>::zeros(p);
        info.fill(0.0);
        let mut extreme = false;
        for i in 0..n {
            let t = data.trials[i];
            if t == 0.0 {
                continue;
            }
            let mu = 1.0 / (1.0 + (-(eta[i] + offsets[i])).exp());
            let w = t * mu * (1.0 - mu);
            if mu < 1e-12 || mu > 1.0 - 1e-12 {
                extreme = true;
            }
            let r = data.successes[i] - t * mu;
            let row = x.row(i);
            for a in 0..p {
                score[a] += row[a] * r;
                for b in 0..=a {
                    info[(a, b)] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                info[(b, a)] = info[(a, b)];
            }
        }
        let Some(chol) = info.clone().cholesky() else {
            if it == 1 {
                return Err(Error::Degenerate("design matrix is rank deficient".into()));
            }
            separated = true;
            break;
        };
        let step = chol.solve(&score);
        beta += &step;
        if step.amax() < TOLERANCE {
            converged = !extreme;
            separated = extreme;
            break;
        }
        if extreme && beta.amax() > 30.0 {
            separated = true;
            break;
        }
    }
    let standard_errors = match info.clone().cholesky() {
        Some(c) => c.inverse().diagonal().iter().map(|v| v.sqrt()).collect(),
        None => vec![f64::INFINITY; p],
    };
    Ok(LogisticFit {
        coefficients: beta.iter().copied().collect(),
        standard_errors,
        iterations,
        converged: converged && !separated,
        separated,
        offsets,
    })
}
