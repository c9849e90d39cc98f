//! Two-step gene-by-environment scan: a gene-exposure association screen in
//! cases and controls combined, then the case-control interaction test on
//! the markers that pass, Bonferroni-corrected for their number only.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::assoc::allele_z;
use crate::cohort::SimulatedCohort;
use crate::error::{Error, Result};
use crate::logistic::{fit, BinomialData};
use crate::normal;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GxeMarker {
    pub marker: usize,
    pub screen_z: f64,
    pub screen_p: f64,
    pub passed: bool,
    /// Estimated interaction log odds ratio.
    pub interaction: f64,
    pub interaction_p: f64,
    pub rejected_two_step: bool,
    pub rejected_one_step: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GxeResult {
    pub markers: Vec<GxeMarker>,
    pub n_passed: usize,
    /// Per-marker level of the second step, `alpha_test / n_passed`.
    pub two_step_level: Option<f64>,
    /// Per-marker level of the one-step scan, `alpha_test / m`.
    pub one_step_level: f64,
    pub two_step_rejections: usize,
    pub one_step_rejections: usize,
}

/// Counts by `[dosage][exposure][outcome]` for every marker.
pub fn cell_counts(cohort: &SimulatedCohort) -> Result<Vec<[[[u32; 2]; 2]; 3]>> {
    let exposure = cohort
        .exposure()
        .ok_or_else(|| Error::param("exposure", "cohort has no exposure data"))?;
    let mut cells = vec![[[[0u32; 2]; 2]; 3]; cohort.n_markers()];
    for i in 0..cohort.n_subjects() {
        let (e, y) = (exposure[i] as usize, cohort.phenotype()[i] as usize);
        for (c, &g) in cells.iter_mut().zip(cohort.row(i)) {
            c[g as usize][e][y] += 1;
        }
    }
    Ok(cells)
}

/// Gene-exposure association in the combined sample: minor-allele frequency
/// in exposed versus unexposed subjects.
fn screen(cells: &[[[u32; 2]; 2]; 3]) -> f64 {
    let mut minor = [0u64; 2];
    let mut people = [0u64; 2];
    for (g, by_e) in cells.iter().enumerate() {
        for (e, by_y) in by_e.iter().enumerate() {
            let k = (by_y[0] + by_y[1]) as u64;
            minor[e] += g as u64 * k;
            people[e] += k;
        }
    }
    allele_z(minor[1], 2 * people[1], minor[0], 2 * people[0])
}

/// Wald test of the product term in `logit P(case) = b0 + bG g + bE e + bGE g e`.
fn interaction(cells: &[[[u32; 2]; 2]; 3]) -> (f64, f64) {
    let mut rows = Vec::with_capacity(6);
    for (g, by_e) in cells.iter().enumerate() {
        for (e, by_y) in by_e.iter().enumerate() {
            let t = (by_y[0] + by_y[1]) as f64;
            if t > 0.0 {
                rows.push((g as f64, e as f64, by_y[1] as f64, t));
            }
        }
    }
    let design = DMatrix::from_fn(rows.len(), 4, |i, k| {
        let (g, e, _, _) = rows[i];
        [1.0, g, e, g * e][k]
    });
    let data = BinomialData {
        design,
        successes: rows.iter().map(|r| r.2).collect(),
        trials: rows.iter().map(|r| r.3).collect(),
    };
    match fit(&data, None) {
        Ok(f) if f.converged => (f.coefficients[3], f.wald_p(3)),
        _ => (0.0, 1.0),
    }
}

/// Runs the screen at `alpha_screen` (pass when `p <= alpha_screen`) and the
/// interaction test at `alpha_test / n_passed`, alongside the one-step scan
/// at `alpha_test / m` on the same data.
pub fn two_step_gxe(cohort: &SimulatedCohort, alpha_screen: f64, alpha_test: f64) -> Result<GxeResult> {
    if !(alpha_screen > 0.0 && alpha_screen <= 1.0) {
        return Err(Error::param("alpha_screen", "must lie in (0, 1]"));
    }
    if !(alpha_test > 0.0 && alpha_test < 1.0) {
        return Err(Error::param("alpha_test", "must lie in (0, 1)"));
    }
    let cells = cell_counts(cohort)?;
    let m = cells.len();
    let mut markers: Vec<GxeMarker> = cells
        .par_iter()
        .enumerate()
        .map(|(j, c)| {
            let z = screen(c);
            let p = normal::two_sided_p(z);
            let (b, pi) = interaction(c);
            GxeMarker {
                marker: j,
                screen_z: z,
                screen_p: p,
                passed: p <= alpha_screen,
                interaction: b,
                interaction_p: pi,
                rejected_two_step: false,
                rejected_one_step: false,
            }
        })
        .collect();
    let n_passed = markers.iter().filter(|g| g.passed).count();
    let two_step_level = (n_passed > 0).then(|| alpha_test / n_passed as f64);
    let one_step_level = alpha_test / m as f64;
    for g in markers.iter_mut() {
        g.rejected_one_step = g.interaction_p <= one_step_level;
        g.rejected_two_step = g.passed && two_step_level.is_some_and(|l| g.interaction_p <= l);
    }
    Ok(GxeResult {
        two_step_rejections: markers.iter().filter(|g| g.rejected_two_step).count(),
        one_step_rejections: markers.iter().filter(|g| g.rejected_one_step).count(),
        markers,
        n_passed,
        two_step_level,
        one_step_level,
    })
}
