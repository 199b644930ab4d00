use super::dist::t_two_sided;
use super::summary::{mean, variance, SampleSummary};
use super::{require_len, StatsError, TestMethod, TestResult};
use crate::Scalar;

/// Welch's unequal-variance t test with Satterthwaite degrees of freedom.
///
/// The statistic is `(mean_a − mean_b) / se`. Two constant samples give a
/// flagged conventional result: p = 1 when the constants agree, otherwise
/// p = 0 with an infinite statistic.
pub fn welch_t<T: Scalar>(a: &[T], b: &[T]) -> Result<TestResult<T>, StatsError> {
    require_len("welch_t", a, 2)?;
    require_len("welch_t", b, 2)?;
    let sa = SampleSummary {
        n: a.len(),
        mean: mean(a),
        sd: variance(a).sqrt(),
        median: T::nan(),
    };
    let sb = SampleSummary {
        n: b.len(),
        mean: mean(b),
        sd: variance(b).sqrt(),
        median: T::nan(),
    };
    welch_t_summary(&sa, &sb)
}

/// Welch's t test from summary moments alone.
pub fn welch_t_summary<T: Scalar>(
    a: &SampleSummary<T>,
    b: &SampleSummary<T>,
) -> Result<TestResult<T>, StatsError> {
    if a.n < 2 || b.n < 2 {
        return Err(StatsError::TooFewObservations {
            what: "welch_t",
            need: 2,
            got: a.n.min(b.n),
        });
    }
    let na = a.n as f64;
    let nb = b.n as f64;
    let va = a.variance().to_f64_lossy() / na;
    let vb = b.variance().to_f64_lossy() / nb;
    let diff = (a.mean - b.mean).to_f64_lossy();
    let se2 = va + vb;
    if se2 == 0.0 {
        let result = if diff == 0.0 {
            TestResult::new(TestMethod::WelchT, T::zero(), 1.0)
        } else {
            let inf = if diff > 0.0 { T::infinity() } else { T::neg_infinity() };
            TestResult::new(TestMethod::WelchT, inf, 0.0)
        };
        return Ok(result.flagged());
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    Ok(TestResult::new(TestMethod::WelchT, T::of(t), t_two_sided(t, df)).with_df(T::of(df)))
}

/// Cohen's d for the shift from `a` to `b`: `(mean_b − mean_a) / pooled_sd`.
///
/// The pooled variance weights each group by n−1, which reduces to
/// `(sd_a² + sd_b²) / 2` for equal group sizes.
pub fn cohens_d<T: Scalar>(a: &[T], b: &[T]) -> Result<T, StatsError> {
    let sa = SampleSummary::of(a)?;
    let sb = SampleSummary::of(b)?;
    cohens_d_summary(&sa, &sb)
}

pub fn cohens_d_summary<T: Scalar>(
    a: &SampleSummary<T>,
    b: &SampleSummary<T>,
) -> Result<T, StatsError> {
    if a.n < 2 || b.n < 2 {
        return Err(StatsError::TooFewObservations {
            what: "cohens_d",
            need: 2,
            got: a.n.min(b.n),
        });
    }
    let wa = T::of_usize(a.n - 1);
    let wb = T::of_usize(b.n - 1);
    let pooled = ((wa * a.variance() + wb * b.variance()) / (wa + wb)).sqrt();
    if pooled == T::zero() {
        return Err(StatsError::ZeroSpread("cohens_d"));
    }
    Ok((b.mean - a.mean) / pooled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn welch_identity() {
        let a = [1.0, 4.0, 2.0, 8.0];
        let r = welch_t(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn welch_shifted_integers() {
        // se = sqrt(2.5/5 + 2.5/5) = 1, df = 1 / (2 * 0.25 / 4) = 8
        let r = welch_t(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_abs_diff_eq!(r.statistic, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.df.unwrap(), 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_value, 0.346_593_507_087_334_16, epsilon = 1e-8);
    }

    #[test]
    fn welch_unequal_variance_reference() {
        let a = [2.1, 3.4, 1.9, 5.6, 4.4, 3.3];
        let b = [6.1, 5.2, 7.7, 6.9, 5.5];
        let r = welch_t(&a, &b).unwrap();
        assert_abs_diff_eq!(r.statistic, -3.864_644_336_813_579, epsilon = 1e-9);
        assert_abs_diff_eq!(r.df.unwrap(), 8.902_217_580_932_069, epsilon = 1e-9);
        assert_abs_diff_eq!(r.p_value, 0.003_899_434_572_377_011_5, epsilon = 1e-8);
    }

    #[test]
    fn welch_constant_samples() {
        let same = welch_t(&[3.0, 3.0], &[3.0, 3.0, 3.0]).unwrap();
        assert!(same.degenerate);
        assert_eq!(same.p_value, 1.0);
        let apart = welch_t(&[3.0, 3.0], &[4.0, 4.0]).unwrap();
        assert!(apart.degenerate);
        assert_eq!(apart.p_value, 0.0);
        assert_eq!(apart.statistic, f64::NEG_INFINITY);
    }

    #[test]
    fn welch_rejects_singletons() {
        assert!(welch_t(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn welch_from_published_quality_moments() {
        let h = SampleSummary::from_moments(1375, 2.69f64, 0.47);
        let min = SampleSummary::from_moments(1375, 4.55, 0.44);
        let r = welch_t_summary(&h, &min).unwrap();
        assert!(r.p_value < 1e-10);
        assert!(r.statistic < 0.0);
    }

    #[test]
    fn cohens_d_published_moments() {
        let h = SampleSummary::from_moments(1375, 2.69f64, 0.47);
        let d = cohens_d_summary(&h, &SampleSummary::from_moments(1375, 4.55, 0.44)).unwrap();
        assert!((d - 4.102).abs() < 0.05, "d = {d}");
        let d = cohens_d_summary(&h, &SampleSummary::from_moments(1375, 4.74, 0.38)).unwrap();
        assert!((d - 4.814).abs() < 0.05, "d = {d}");
    }

    #[test]
    fn cohens_d_identical_and_zero_spread() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(cohens_d(&a, &a).unwrap(), 0.0);
        assert_eq!(
            cohens_d(&[2.0, 2.0], &[2.0, 2.0]),
            Err(StatsError::ZeroSpread("cohens_d"))
        );
    }

    #[test]
    fn cohens_d_unequal_n_weights_by_dof() {
        let a = [1.0, 2.0, 3.0];
        let b = [2.0, 4.0, 6.0, 8.0, 10.0];
        // var_a = 1, var_b = 10; pooled = (2*1 + 4*10)/6 = 7
        let d = cohens_d(&a, &b).unwrap();
        assert_abs_diff_eq!(d, 4.0 / 7f64.sqrt(), epsilon = 1e-12);
    }
}
