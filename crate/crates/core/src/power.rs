//! Analytic size and power for one-stage and jointly analysed two-stage scans.
//!
//! Stage statistics are standardized so that, with noncentrality `lambda` for
//! the full sample, `Z1 ~ N(sqrt(pi lambda), 1)` on the stage-I fraction `pi`
//! and the joint statistic `Zj = sqrt(pi) Z1 + sqrt(1 - pi) Z2 ~ N(sqrt(lambda), 1)`,
//! with `corr(Z1, Zj) = sqrt(pi)`. A marker is declared when it passes the
//! stage-I hurdle `|Z1| > z_{alpha1/2}` and the joint hurdle
//! `|Zj| > z_{alpha_joint/2}`, with matching signs unless disabled.

use serde::{Deserialize, Serialize};

use crate::bivariate::upper_orthant;
use crate::error::{Error, Result};
use crate::genetics::{MarkerCausalModel, Outcome};
use crate::normal;
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignRule {
    /// Stage-I and joint statistics must agree in sign.
    #[default]
    Consistent,
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStageDesign<T> {
    pub n_total: u64,
    pub stage1_fraction: T,
    pub alpha1: T,
    pub alpha_joint: T,
    pub n_markers: u64,
    /// Multiplicity used in place of `n_markers` for Bonferroni-type baselines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective_tests: Option<T>,
    #[serde(default)]
    pub sign_rule: SignRule,
}

impl<T: Real> TwoStageDesign<T> {
    pub fn new(n_total: u64, stage1_fraction: T, alpha1: T, alpha_joint: T, n_markers: u64) -> Result<Self> {
        let d = TwoStageDesign {
            n_total,
            stage1_fraction,
            alpha1,
            alpha_joint,
            n_markers,
            effective_tests: None,
            sign_rule: SignRule::Consistent,
        };
        d.validate()?;
        Ok(d)
    }

    /// One-stage scan of everyone at per-marker level `alpha`.
    pub fn one_stage(n_total: u64, alpha: T, n_markers: u64) -> Result<Self> {
        Self::new(n_total, T::one(), T::one(), alpha, n_markers)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_stage_one()?;
        if !(self.alpha_joint > T::zero() && self.alpha_joint <= self.alpha1) {
            return Err(Error::param(
                "alpha_joint",
                format!("{} must lie in (0, alpha1]", to_f64(&self.alpha_joint)),
            ));
        }
        Ok(())
    }

    /// Checks everything except `alpha_joint`, which may still be unsolved.
    pub fn validate_stage_one(&self) -> Result<()> {
        let pi = self.stage1_fraction;
        if !(pi > T::zero() && pi <= T::one()) {
            return Err(Error::param(
                "stage1_fraction",
                format!("{} must lie in (0, 1]", to_f64(&pi)),
            ));
        }
        if !(self.alpha1 > T::zero() && self.alpha1 <= T::one()) {
            return Err(Error::param(
                "alpha1",
                format!("{} must lie in (0, 1]", to_f64(&self.alpha1)),
            ));
        }
        if self.n_markers == 0 {
            return Err(Error::param("n_markers", "must be at least 1"));
        }
        if let Some(e) = self.effective_tests {
            if !(e >= T::one()) {
                return Err(Error::param("effective_tests", "must be at least 1"));
            }
        }
        Ok(())
    }

    /// Number of tests the genome-wide error rate is spread over.
    pub fn multiplicity(&self) -> T {
        self.effective_tests
            .unwrap_or_else(|| lit(self.n_markers as f64))
    }

    pub fn with_alpha_joint(&self, alpha_joint: T) -> Self {
        TwoStageDesign {
            alpha_joint,
            ..self.clone()
        }
    }
}

/// Marker minor-allele frequencies among cases and controls.
pub fn allele_frequencies<T: Real>(model: &MarkerCausalModel<T>) -> Result<(T, T)> {
    let table = model.cell_table()?;
    Ok((
        table.minor_allele_freq(Outcome::Case),
        table.minor_allele_freq(Outcome::Control),
    ))
}

/// Noncentrality of the allele-count z-test comparing cases and controls,
/// with `2 n phi` case alleles and `2 n (1 - phi)` control alleles.
pub fn noncentrality<T: Real>(model: &MarkerCausalModel<T>, n_total: T, case_fraction: T) -> Result<T> {
    if !(case_fraction > T::zero() && case_fraction < T::one()) {
        return Err(Error::param(
            "case_fraction",
            format!("{} must lie in (0, 1)", to_f64(&case_fraction)),
        ));
    }
    if !(n_total >= T::zero()) {
        return Err(Error::param("n_total", "must be non-negative"));
    }
    let (pc, pn) = allele_frequencies(model)?;
    let two: T = lit(2.0);
    let var = pc * (T::one() - pc) / (two * case_fraction)
        + pn * (T::one() - pn) / (two * (T::one() - case_fraction));
    if var <= T::zero() {
        return Err(Error::Degenerate(
            "marker is monomorphic among cases and controls".into(),
        ));
    }
    let diff = pc - pn;
    Ok(n_total * diff * diff / var)
}

fn check_alpha<T: Real>(name: &'static str, alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha <= T::one() {
        Ok(())
    } else {
        Err(Error::param(name, format!("{} must lie in (0, 1]", to_f64(&alpha))))
    }
}

/// Two-sided power `P(|Z| > z_{alpha/2})` for `Z ~ N(sqrt(lambda), 1)`.
pub fn single_stage_power<T: Real>(lambda: T, alpha: T) -> Result<T> {
    check_alpha("alpha", alpha)?;
    if !(lambda >= T::zero()) {
        return Err(Error::param("lambda", "must be non-negative"));
    }
    if lambda == T::infinity() {
        return Ok(T::one());
    }
    let c = normal::two_sided_critical(alpha);
    let mu = lambda.sqrt();
    Ok(normal::sf(c - mu) + normal::sf(c + mu))
}

/// Probability that a marker with noncentrality `lambda` passes both hurdles.
pub fn joint_two_stage_power<T: Real>(design: &TwoStageDesign<T>, lambda: T) -> Result<T> {
    design.validate()?;
    if !(lambda >= T::zero()) {
        return Err(Error::param("lambda", "must be non-negative"));
    }
    if lambda == T::infinity() {
        return Ok(T::one());
    }
    let pi = design.stage1_fraction;
    let rho = pi.sqrt();
    let a = normal::two_sided_critical(design.alpha1);
    let c = normal::two_sided_critical(design.alpha_joint);
    let mu_joint = lambda.sqrt();
    let mu_stage1 = (pi * lambda).sqrt();

    let mut p = upper_orthant(a - mu_stage1, c - mu_joint, rho)?
        + upper_orthant(a + mu_stage1, c + mu_joint, rho)?;
    if design.sign_rule == SignRule::Ignored {
        p = p
            + upper_orthant(a - mu_stage1, c + mu_joint, -rho)?
            + upper_orthant(a + mu_stage1, c - mu_joint, -rho)?;
    }
    Ok(p.min(T::one()))
}

/// Per-marker probability of a false declaration under the null.
pub fn null_rate<T: Real>(design: &TwoStageDesign<T>) -> Result<T> {
    joint_two_stage_power(design, T::zero())
}

/// Two-sided p-value of an observed two-stage outcome: the null probability
/// of passing stage I and reaching a joint statistic at least as extreme.
/// Returns one when the observed marker fails stage I or the sign rule.
pub fn two_stage_p_value<T: Real>(design: &TwoStageDesign<T>, z_stage1: T, z_joint: T) -> Result<T> {
    design.validate_stage_one()?;
    let a = normal::two_sided_critical(design.alpha1);
    let passes = z_stage1.abs() > a
        && (design.sign_rule == SignRule::Ignored || z_stage1.signum() == z_joint.signum());
    if !passes {
        return Ok(T::one());
    }
    let rho = design.stage1_fraction.sqrt();
    let t = z_joint.abs();
    let two: T = lit(2.0);
    let mut p = two * upper_orthant(a, t, rho)?;
    if design.sign_rule == SignRule::Ignored {
        p = p + two * upper_orthant(a, t, -rho)?;
    }
    Ok(p.min(T::one()))
}

/// Per-marker `alpha_joint` giving family-wise error `fwer_target` over the
/// design's multiplicity, found by bisection on a log scale to relative
/// tolerance 1e-6. The returned level never exceeds the target rate and is
/// never below the Bonferroni level.
pub fn solve_joint_threshold<T: Real>(design: &TwoStageDesign<T>, fwer_target: T) -> Result<T> {
    design.validate_stage_one()?;
    if !(fwer_target > T::zero() && fwer_target < T::one()) {
        return Err(Error::param(
            "fwer_target",
            format!("{} must lie in (0, 1)", to_f64(&fwer_target)),
        ));
    }
    let per_marker = fwer_target / design.multiplicity();
    let rate = |alpha_joint: T| null_rate(&design.with_alpha_joint(alpha_joint));

    if per_marker > design.alpha1 {
        return Err(Error::NoRoot(format!(
            "Bonferroni level {:e} exceeds alpha1 {:e}",
            to_f64(&per_marker),
            to_f64(&design.alpha1)
        )));
    }
    let mut lo = per_marker;
    if rate(lo)? >= per_marker {
        return Ok(lo);
    }
    let mut hi = design.alpha1;
    let at_hi = rate(hi)?;
    if at_hi < per_marker {
        return Err(Error::NoRoot(format!(
            "even alpha_joint = alpha1 = {:e} gives per-marker null rate {:e} below the target {:e}",
            to_f64(&design.alpha1),
            to_f64(&at_hi),
            to_f64(&per_marker)
        )));
    }
    if at_hi == per_marker {
        return Ok(hi);
    }
    let tol: T = lit(1e-6);
    for _ in 0..200 {
        if hi - lo <= tol * lo {
            break;
        }
        let mid = (lo * hi).sqrt();
        if rate(mid)? <= per_marker {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Noncentrality needed for the given power. `power_fn` must be continuous
/// and nondecreasing in lambda.
pub fn required_noncentrality<T: Real, F>(power_fn: F, target: T) -> Result<T>
where
    F: Fn(T) -> Result<T>,
{
    let size = power_fn(T::zero())?;
    if !(target > size && target < T::one()) {
        return Err(Error::Unattainable {
            target: to_f64(&target),
            reason: format!("power must lie strictly between the size {:e} and one", to_f64(&size)),
        });
    }
    let mut lo = T::zero();
    let mut hi = T::one();
    let mut p_hi = power_fn(hi)?;
    let mut guard = 0;
    while p_hi < target {
        lo = hi;
        hi = hi * lit(2.0);
        p_hi = power_fn(hi)?;
        guard += 1;
        if guard > 200 {
            return Err(Error::Unattainable {
                target: to_f64(&target),
                reason: "power does not reach the target for any finite noncentrality".into(),
            });
        }
    }
    // Illinois-modified regula falsi on power(lambda) - target, keeping the
    // bracket [lo, hi] with power(hi) >= target.
    let tol: T = lit(1e-10);
    let mut f_lo = power_fn(lo)? - target;
    let mut f_hi = p_hi - target;
    let mut side = 0i8;
    for _ in 0..300 {
        if hi - lo <= tol * hi {
            break;
        }
        let mut mid = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        if !(mid > lo && mid < hi) {
            mid = (lo + hi) * lit(0.5);
        }
        let f_mid = power_fn(mid)? - target;
        if f_mid >= T::zero() {
            hi = mid;
            f_hi = f_mid;
            if side == 1 {
                f_lo = f_lo * lit(0.5);
            }
            side = 1;
        } else {
            lo = mid;
            f_lo = f_mid;
            if side == -1 {
                f_hi = f_hi * lit(0.5);
            }
            side = -1;
        }
        if f_hi == T::zero() {
            break;
        }
    }
    Ok(hi)
}

/// Which test a coverage-averaged power refers to.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerTest<T> {
    SingleStage { alpha: T },
    TwoStage(TwoStageDesign<T>),
}

impl<T: Real> PowerTest<T> {
    pub fn power(&self, lambda: T) -> Result<T> {
        match self {
            PowerTest::SingleStage { alpha } => single_stage_power(lambda, *alpha),
            PowerTest::TwoStage(design) => joint_two_stage_power(design, lambda),
        }
    }
}

/// Discrete distribution of marker/causal r^2 values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageDistribution<T> {
    points: Vec<(T, T)>,
}

impl<T: Real> CoverageDistribution<T> {
    pub fn new(points: Vec<(T, T)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::param("coverage", "needs at least one support point"));
        }
        let mut total = T::zero();
        for (r2, w) in &points {
            if !(*r2 >= T::zero() && *r2 <= T::one()) {
                return Err(Error::param("coverage", format!("r^2 {} outside [0, 1]", to_f64(r2))));
            }
            if !(*w >= T::zero()) {
                return Err(Error::param("coverage", format!("negative weight {}", to_f64(w))));
            }
            total = total + *w;
        }
        if (total - T::one()).abs() > lit(1e-9) {
            return Err(Error::param(
                "coverage",
                format!("weights sum to {} instead of 1", to_f64(&total)),
            ));
        }
        Ok(CoverageDistribution { points })
    }

    pub fn point_mass(r2: T) -> Result<Self> {
        Self::new(vec![(r2, T::one())])
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    pub fn mean_r2(&self) -> T {
        self.points.iter().fold(T::zero(), |s, (r, w)| s + *r * *w)
    }
}

/// Power averaged over the coverage distribution, the marker noncentrality
/// being `lambda_causal * r^2`.
pub fn coverage_averaged_power<T: Real>(
    test: &PowerTest<T>,
    lambda_causal: T,
    coverage: &CoverageDistribution<T>,
) -> Result<T> {
    coverage
        .points()
        .iter()
        .try_fold(T::zero(), |acc, (r2, w)| Ok(acc + *w * test.power(lambda_causal * *r2)?))
}

/// Prior probabilities of the three kinds of stage-I hit: marker in strong LD
/// with the causal variant, in weak LD, or unlinked; plus the stage-I type-II
/// error rates for the first two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypePrior<T> {
    pub pi1: T,
    pub pi2: T,
    pub pi3: T,
    pub beta1: T,
    pub beta2: T,
}

impl<T: Real> TypePrior<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("pi1", self.pi1), ("pi2", self.pi2), ("pi3", self.pi3)] {
            if !(p >= T::zero()) {
                return Err(Error::param(name, "must be non-negative"));
            }
        }
        let total = self.pi1 + self.pi2 + self.pi3;
        if (total - T::one()).abs() > lit(1e-9) {
            return Err(Error::param("pi", format!("priors sum to {}", to_f64(&total))));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b >= T::zero() && b <= T::one()) {
                return Err(Error::param(name, "must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Posterior probability that a stage-I hit at level `alpha1` is of the
/// weak-LD kind, the only kind where extra flanking markers can help.
pub fn posterior_type2<T: Real>(prior: &TypePrior<T>, alpha1: T) -> Result<T> {
    prior.validate()?;
    if !(alpha1 > T::zero() && alpha1 < T::one()) {
        return Err(Error::param("alpha1", "must lie in (0, 1)"));
    }
    let type1 = (T::one() - prior.beta1) * prior.pi1;
    let type2 = (T::one() - prior.beta2) * prior.pi2;
    let type3 = alpha1 * prior.pi3;
    let denom = type1 + type2 + type3;
    if denom <= T::zero() {
        return Err(Error::Degenerate(
            "no association type can produce a stage-I hit".into(),
        ));
    }
    Ok(type2 / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn single_stage_size_and_limits() {
        assert_abs_diff_eq!(single_stage_power(0.0, 0.05).unwrap(), 0.05, epsilon = 1e-15);
        assert_eq!(single_stage_power(f64::INFINITY, 0.05).unwrap(), 1.0);
        assert!(single_stage_power(1e4, 0.05).unwrap() > 1.0 - 1e-15);
        // z_{0.975} + z_{0.80} = sqrt(lambda)
        let lambda = (1.959_963_984_540_054_f64 + 0.841_621_233_572_914_3).powi(2);
        assert_abs_diff_eq!(lambda, 7.849, epsilon = 1e-3);
        assert_abs_diff_eq!(single_stage_power(lambda, 0.05).unwrap(), 0.80, epsilon = 1e-6);
    }

    #[test]
    fn degenerate_two_stage_is_one_stage() {
        for lambda in [0.0, 4.0, 30.0] {
            let d = TwoStageDesign::one_stage(1000, 1e-7, 500_000).unwrap();
            assert_abs_diff_eq!(
                joint_two_stage_power(&d, lambda).unwrap(),
                single_stage_power(lambda, 1e-7).unwrap(),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn null_rate_bounds() {
        for (pi, a1, aj) in [(0.3, 0.0037_f64, 1.6e-7), (0.5, 0.05, 0.01), (0.9, 0.2, 0.2)] {
            let d = TwoStageDesign::new(1000, pi, a1, aj, 10).unwrap();
            let r = null_rate(&d).unwrap();
            assert!(r >= 0.0 && r <= a1.min(aj));
        }
        // Without the sign rule and with no stage-I hurdle the joint level is exact.
        let mut d = TwoStageDesign::new(1000, 0.4, 1.0, 1e-4, 10).unwrap();
        d.sign_rule = SignRule::Ignored;
        assert_relative_eq!(null_rate(&d).unwrap(), 1e-4, max_relative = 1e-9);
    }

    #[test]
    fn power_is_monotone() {
        let base = TwoStageDesign::new(1000, 0.3, 0.0037, 1.6e-7, 500_000).unwrap();
        let mut last = 0.0;
        for lambda in [0.0, 5.0, 10.0, 20.0, 30.0, 40.0, 60.0] {
            let p = joint_two_stage_power(&base, lambda).unwrap();
            assert!(p >= last);
            last = p;
        }
        let mut last = 0.0;
        for a1 in [1e-4, 1e-3, 0.0037, 0.01, 0.1] {
            let p = joint_two_stage_power(&TwoStageDesign { alpha1: a1, ..base.clone() }, 30.0).unwrap();
            assert!(p >= last);
            last = p;
        }
        let mut last = 0.0;
        for aj in [1e-9, 1e-8, 1e-7, 1e-6, 1e-4] {
            let p = joint_two_stage_power(&base.with_alpha_joint(aj), 30.0).unwrap();
            assert!(p >= last);
            last = p;
        }
    }

    #[test]
    fn bonferroni_reduction_is_exact() {
        let d = TwoStageDesign::new(1000, 1.0, 1.0, 1.0, 500_000).unwrap();
        assert_eq!(solve_joint_threshold(&d, 0.05).unwrap(), 0.05 / 500_000.0);
    }

    #[test]
    fn solved_threshold_hits_target() {
        let d = TwoStageDesign::new(1000, 0.3, 0.0037, 0.0037, 500_000).unwrap();
        let aj = solve_joint_threshold(&d, 0.05).unwrap();
        assert!(aj >= 0.05 / 500_000.0);
        let rate = null_rate(&d.with_alpha_joint(aj)).unwrap() * 500_000.0;
        assert!(rate <= 0.05);
        assert_relative_eq!(rate, 0.05, max_relative = 1e-5);
    }

    #[test]
    fn threshold_without_root_is_reported() {
        let d = TwoStageDesign::new(1000, 0.3, 1e-8, 1e-8, 500_000).unwrap();
        assert!(matches!(solve_joint_threshold(&d, 0.05), Err(Error::NoRoot(_))));
    }

    #[test]
    fn effective_tests_replace_marker_count() {
        let mut d = TwoStageDesign::new(1000, 1.0, 1.0, 1.0, 500_000).unwrap();
        d.effective_tests = Some(250_000.0);
        assert_eq!(solve_joint_threshold(&d, 0.05).unwrap(), 0.05 / 250_000.0);
    }

    #[test]
    fn two_stage_p_value_matches_null_rate() {
        let d = TwoStageDesign::new(1000, 0.3, 0.0037, 1e-6, 100).unwrap();
        let c = normal::two_sided_critical(1e-6);
        let p = two_stage_p_value(&d, 3.5, c).unwrap();
        assert_relative_eq!(p, null_rate(&d).unwrap(), max_relative = 1e-10);
        assert_eq!(two_stage_p_value(&d, 1.0, 8.0).unwrap(), 1.0);
        assert_eq!(two_stage_p_value(&d, 3.5, -6.0).unwrap(), 1.0);
    }

    #[test]
    fn required_noncentrality_inverts_power() {
        let lambda = required_noncentrality(|l| single_stage_power(l, 0.05), 0.8).unwrap();
        // The one-tailed identity ignores the opposite tail (about 1e-6 of power).
        let exact = (1.959_963_984_540_054_f64 + 0.841_621_233_572_914_3).powi(2);
        assert_relative_eq!(lambda, exact, max_relative = 1e-5);
        assert_relative_eq!(single_stage_power(lambda, 0.05).unwrap(), 0.8, max_relative = 1e-9);
        let d = TwoStageDesign::new(1000, 0.3, 0.0037, 1.9e-7, 500_000).unwrap();
        let lambda = required_noncentrality(|l| joint_two_stage_power(&d, l), 0.8).unwrap();
        assert!(joint_two_stage_power(&d, lambda).unwrap() >= 0.8);
        assert!(joint_two_stage_power(&d, lambda * (1.0 - 1e-8)).unwrap() < 0.8);
        assert!(required_noncentrality(|l| single_stage_power(l, 0.05), 0.01).is_err());
    }

    #[test]
    fn coverage_extremes() {
        let test = PowerTest::SingleStage { alpha: 5e-8 };
        let full = CoverageDistribution::point_mass(1.0).unwrap();
        let none = CoverageDistribution::point_mass(0.0).unwrap();
        assert_eq!(
            coverage_averaged_power(&test, 40.0, &full).unwrap(),
            test.power(40.0).unwrap()
        );
        assert_abs_diff_eq!(coverage_averaged_power(&test, 40.0, &none).unwrap(), 5e-8, epsilon = 1e-20);
        assert!(CoverageDistribution::new(vec![(0.5, 0.4), (0.2, 0.4)]).is_err());
        assert!(CoverageDistribution::new(vec![(1.5, 1.0)]).is_err());
    }

    #[test]
    fn averaged_power_below_power_at_mean_coverage() {
        let test = PowerTest::SingleStage { alpha: 5e-8 };
        let cov = CoverageDistribution::new(vec![(0.2, 0.5), (1.0, 0.5)]).unwrap();
        let lambda = 60.0;
        let averaged = coverage_averaged_power(&test, lambda, &cov).unwrap();
        let at_mean = test.power(lambda * cov.mean_r2()).unwrap();
        assert!(averaged < at_mean, "{averaged} vs {at_mean}");
    }

    #[test]
    fn posterior_examples() {
        let sym = TypePrior { pi1: 0.5, pi2: 0.5, pi3: 0.0, beta1: 0.3, beta2: 0.3 };
        assert_abs_diff_eq!(posterior_type2(&sym, 0.01).unwrap(), 0.5, epsilon = 1e-15);
        let none = TypePrior { pi1: 0.2, pi2: 0.0, pi3: 0.8, beta1: 0.3, beta2: 0.3 };
        assert_eq!(posterior_type2(&none, 0.01).unwrap(), 0.0);
        let dead = TypePrior { pi1: 0.0, pi2: 0.0, pi3: 1.0, beta1: 1.0, beta2: 1.0 };
        assert!(posterior_type2(&dead, 0.0037).is_ok());
        let dead = TypePrior { pi1: 0.5, pi2: 0.5, pi3: 0.0, beta1: 1.0, beta2: 1.0 };
        assert!(matches!(posterior_type2(&dead, 0.0037), Err(Error::Degenerate(_))));
    }

    #[test]
    fn noncentrality_scales_with_n() {
        let m = MarkerCausalModel::new(0.2, 0.05, 0.036, 2.0).unwrap();
        let a = noncentrality(&m, 2000.0, 0.5).unwrap();
        let b = noncentrality(&m, 4000.0, 0.5).unwrap();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-12);
        let null = MarkerCausalModel::new(0.2, 0.05, 0.036, 1.0).unwrap();
        assert_eq!(noncentrality(&null, 2000.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn generic_over_single_precision() {
        let d = TwoStageDesign::<f32>::new(1000, 0.3, 0.0037, 1.6e-7, 500_000).unwrap();
        let p32 = joint_two_stage_power(&d, 35.0).unwrap();
        let d64 = TwoStageDesign::<f64>::new(1000, 0.3, 0.0037, 1.6e-7, 500_000).unwrap();
        let p64 = joint_two_stage_power(&d64, 35.0).unwrap();
        assert_abs_diff_eq!(p32 as f64, p64, epsilon = 1e-3);
    }
}
