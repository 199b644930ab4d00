use super::dist::f_upper;
use super::summary::{mean, median};
use super::{StatsError, TestMethod, TestResult};
use crate::Scalar;

#[derive(Clone, Copy)]
enum Center {
    Median,
    Mean,
}

/// Brown–Forsythe test: one-way ANOVA on absolute deviations from each
/// group's median.
pub fn brown_forsythe<T: Scalar>(groups: &[&[T]]) -> Result<TestResult<T>, StatsError> {
    deviation_anova(groups, Center::Median, TestMethod::BrownForsythe)
}

/// Levene's test with mean centering.
pub fn levene_mean<T: Scalar>(groups: &[&[T]]) -> Result<TestResult<T>, StatsError> {
    deviation_anova(groups, Center::Mean, TestMethod::LeveneMean)
}

fn deviation_anova<T: Scalar>(
    groups: &[&[T]],
    center: Center,
    method: TestMethod,
) -> Result<TestResult<T>, StatsError> {
    let what = match method {
        TestMethod::BrownForsythe => "brown_forsythe",
        _ => "levene_mean",
    };
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups {
            what,
            need: 2,
            got: groups.len(),
        });
    }
    if let Some(g) = groups.iter().find(|g| g.len() < 2) {
        return Err(StatsError::TooFewObservations {
            what,
            need: 2,
            got: g.len(),
        });
    }

    let deviations: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let c = match center {
                Center::Median => median(g),
                Center::Mean => mean(g),
            };
            g.iter().map(|&x| (x - c).abs().to_f64_lossy()).collect()
        })
        .collect();

    let k = groups.len();
    let total: usize = groups.iter().map(|g| g.len()).sum();
    let group_means: Vec<f64> = deviations.iter().map(|z| mean(z)).collect();
    let grand = deviations.iter().flatten().sum::<f64>() / total as f64;

    let between: f64 = deviations
        .iter()
        .zip(&group_means)
        .map(|(z, &m)| z.len() as f64 * (m - grand).powi(2))
        .sum();
    let within: f64 = deviations
        .iter()
        .zip(&group_means)
        .map(|(z, &m)| z.iter().map(|&v| (v - m).powi(2)).sum::<f64>())
        .sum();

    let df1 = (k - 1) as f64;
    let df2 = (total - k) as f64;
    let base = |stat: f64, p: f64| {
        TestResult::new(method, T::of(stat), p)
            .with_df(T::of(df1))
            .with_df2(T::of(df2))
    };

    if within == 0.0 {
        return Ok(if between == 0.0 {
            base(0.0, 1.0).flagged()
        } else {
            base(f64::INFINITY, 0.0).flagged()
        });
    }
    let f = (between / df1) / (within / df2);
    Ok(base(f, f_upper(f, df1, df2)))
}
