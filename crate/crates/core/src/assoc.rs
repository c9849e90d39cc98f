//! Single-marker case-control association statistics.

use crate::cohort::SimulatedCohort;

/// Minor-allele counts by outcome for a set of subjects.
#[derive(Debug, Clone, PartialEq)]
pub struct AlleleCounts {
    pub case_minor: Vec<u64>,
    pub control_minor: Vec<u64>,
    pub n_cases: u64,
    pub n_controls: u64,
}

impl AlleleCounts {
    /// Tallies `subjects` using `phenotype` (indexed by subject, 1 = case).
    pub fn tally(cohort: &SimulatedCohort, subjects: &[usize], phenotype: &[u8]) -> Self {
        let m = cohort.n_markers();
        let mut case_minor = vec![0u64; m];
        let mut control_minor = vec![0u64; m];
        let (mut n_cases, mut n_controls) = (0, 0);
        for &i in subjects {
            let target = if phenotype[i] == 1 {
                n_cases += 1;
                &mut case_minor
            } else {
                n_controls += 1;
                &mut control_minor
            };
            for (t, &g) in target.iter_mut().zip(cohort.row(i)) {
                *t += g as u64;
            }
        }
        AlleleCounts {
            case_minor,
            control_minor,
            n_cases,
            n_controls,
        }
    }

    pub fn all(cohort: &SimulatedCohort) -> Self {
        let subjects: Vec<usize> = (0..cohort.n_subjects()).collect();
        Self::tally(cohort, &subjects, cohort.phenotype())
    }

    pub fn n_markers(&self) -> usize {
        self.case_minor.len()
    }

    pub fn z(&self, marker: usize) -> f64 {
        allele_z(
            self.case_minor[marker],
            2 * self.n_cases,
            self.control_minor[marker],
            2 * self.n_controls,
        )
    }

    pub fn z_scores(&self) -> Vec<f64> {
        (0..self.n_markers()).map(|j| self.z(j)).collect()
    }

    /// Allelic odds ratio of the minor allele; adds 0.5 to every cell when
    /// any cell is empty.
    pub fn odds_ratio(&self, marker: usize) -> f64 {
        let a = self.case_minor[marker] as f64;
        let b = (2 * self.n_cases) as f64 - a;
        let c = self.control_minor[marker] as f64;
        let d = (2 * self.n_controls) as f64 - c;
        if a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0 {
            ((a + 0.5) * (d + 0.5)) / ((b + 0.5) * (c + 0.5))
        } else {
            (a * d) / (b * c)
        }
    }
}

/// Unpooled two-proportion z statistic on allele counts, positive when the
/// minor allele is more frequent in cases. Zero if both samples are
/// monomorphic or either is empty.
pub fn allele_z(case_minor: u64, case_alleles: u64, control_minor: u64, control_alleles: u64) -> f64 {
    if case_alleles == 0 || control_alleles == 0 {
        return 0.0;
    }
    let pc = case_minor as f64 / case_alleles as f64;
    let pn = control_minor as f64 / control_alleles as f64;
    let var = pc * (1.0 - pc) / case_alleles as f64 + pn * (1.0 - pn) / control_alleles as f64;
    if var <= 0.0 {
        0.0
    } else {
        (pc - pn) / var.sqrt()
    }
}

/// Score (Armitage trend) z for `U = sum (y - ybar) g` standardized by its
/// exact permutation variance `n / (n - 1) ybar (1 - ybar) sum (g - gbar)^2`.
/// `ss` is `sum (g - gbar)^2`. Zero when the variance vanishes.
pub fn trend_statistic(u: f64, ybar: f64, ss: f64, n: f64) -> f64 {
    let v = ybar * (1.0 - ybar) * ss * n / (n - 1.0);
    if !(v > 1e-12 * n) {
        0.0
    } else {
        u / v.sqrt()
    }
}

/// Trend z-scores of every marker over `subjects`.
pub fn trend_z(cohort: &SimulatedCohort, subjects: &[usize], phenotype: &[u8]) -> Vec<f64> {
    let m = cohort.n_markers();
    let n = subjects.len() as f64;
    let mut sum_g = vec![0.0; m];
    let mut sum_gg = vec![0.0; m];
    let mut sum_yg = vec![0.0; m];
    let mut sum_y = 0.0;
    for &i in subjects {
        let y = phenotype[i] as f64;
        sum_y += y;
        for (j, &g) in cohort.row(i).iter().enumerate() {
            let g = g as f64;
            sum_g[j] += g;
            sum_gg[j] += g * g;
            sum_yg[j] += y * g;
        }
    }
    let ybar = sum_y / n;
    (0..m)
        .map(|j| {
            let u = sum_yg[j] - ybar * sum_g[j];
            let ss = sum_gg[j] - sum_g[j] * sum_g[j] / n;
            trend_statistic(u, ybar, ss, n)
        })
        .collect()
}
