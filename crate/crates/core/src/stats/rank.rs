use super::dist::{chi2_upper, normal_two_sided};
use super::{StatsError, TestMethod, TestResult};
use crate::Scalar;

/// Largest combined sample size for which the Mann–Whitney p value is
/// computed exactly (tie-free input only).
pub const EXACT_MWU_MAX_TOTAL: usize = 12;

/// Average ranks (1-based) of `xs`, plus the tie-group sizes.
pub fn rank_average<T: Scalar>(xs: &[T]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].partial_cmp(&xs[j]).expect("rank of NaN"));
    let mut ranks = vec![0.0; xs.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        if end - start > 1 {
            ties.push(end - start);
        }
        start = end;
    }
    (ranks, ties)
}

fn tie_term(ties: &[usize]) -> f64 {
    ties.iter().map(|&t| (t * t * t - t) as f64).sum()
}

/// Kruskal–Wallis H with tie correction; p from χ²(k−1).
pub fn kruskal_wallis<T: Scalar>(groups: &[&[T]]) -> Result<TestResult<T>, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups {
            what: "kruskal_wallis",
            need: 2,
            got: groups.len(),
        });
    }
    if groups.iter().any(|g| g.is_empty()) {
        return Err(StatsError::TooFewObservations {
            what: "kruskal_wallis",
            need: 1,
            got: 0,
        });
    }
    let pooled: Vec<T> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    let n = pooled.len();
    if n < 3 {
        return Err(StatsError::TooFewObservations {
            what: "kruskal_wallis",
            need: 3,
            got: n,
        });
    }
    let df = (groups.len() - 1) as f64;
    let (ranks, ties) = rank_average(&pooled);
    let nf = n as f64;
    let correction = 1.0 - tie_term(&ties) / (nf * nf * nf - nf);
    if correction <= 0.0 {
        return Ok(TestResult::new(TestMethod::KruskalWallis, T::zero(), 1.0)
            .with_df(T::of(df))
            .flagged());
    }
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let h = (12.0 / (nf * (nf + 1.0)) * sum - 3.0 * (nf + 1.0)) / correction;
    let h = h.max(0.0);
    Ok(TestResult::new(TestMethod::KruskalWallis, T::of(h), chi2_upper(h, df)).with_df(T::of(df)))
}

/// Mann–Whitney U for `a` against `b`; the statistic is U of `a`
/// (pairs with a > b, ties counting one half).
///
/// Tie-free inputs with `|a| + |b| <= 12` get the exact two-sided p value
/// from the permutation distribution of U. Otherwise the normal
/// approximation with tie and continuity corrections is used.
pub fn mann_whitney_u<T: Scalar>(a: &[T], b: &[T]) -> Result<TestResult<T>, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::TooFewObservations {
            what: "mann_whitney_u",
            need: 1,
            got: 0,
        });
    }
    let pooled: Vec<T> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = rank_average(&pooled);
    let na = a.len();
    let nb = b.len();
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let u = rank_sum_a - (na * (na + 1)) as f64 / 2.0;

    if ties.is_empty() && na + nb <= EXACT_MWU_MAX_TOTAL {
        let counts = u_distribution(na, nb);
        let total: f64 = counts.iter().sum();
        let u_idx = u.round() as usize;
        let lower: f64 = counts[..=u_idx].iter().sum::<f64>() / total;
        let upper: f64 = counts[u_idx..].iter().sum::<f64>() / total;
        let p = (2.0 * lower.min(upper)).min(1.0);
        return Ok(TestResult::new(TestMethod::MannWhitneyExact, T::of(u), p));
    }

    let n = (na + nb) as f64;
    let mu = (na * nb) as f64 / 2.0;
    let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - tie_term(&ties) / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok(TestResult::new(TestMethod::MannWhitney, T::of(u), 1.0).flagged());
    }
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(TestResult::new(TestMethod::MannWhitney, T::of(u), normal_two_sided(z)))
}

/// Number of arrangements giving each U value, for U in 0..=na*nb.
fn u_distribution(na: usize, nb: usize) -> Vec<f64> {
    // table[i][j] = counts of U for i values from `a` and j from `b`
    let max_u = na * nb;
    let mut table = vec![vec![Vec::<f64>::new(); nb + 1]; na + 1];
    for i in 0..=na {
        for j in 0..=nb {
            let mut dist = vec![0.0; i * j + 1];
            if i == 0 || j == 0 {
                dist[0] = 1.0;
            } else {
                // largest element belongs to `a`: it exceeds all j values from `b`
                for (u, c) in table[i - 1][j].iter().enumerate() {
                    dist[u + j] += c;
                }
                for (u, c) in table[i][j - 1].iter().enumerate() {
                    dist[u] += c;
                }
            }
            table[i][j] = dist;
        }
    }
    let out = std::mem::take(&mut table[na][nb]);
    debug_assert_eq!(out.len(), max_u + 1);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kruskal_wallis_separated_triples() {
        // rank sums 6, 15, 24: 12/90 * (12 + 75 + 192) - 30 = 7.2
        let r = kruskal_wallis(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &[7.0, 8.0, 9.0]]).unwrap();
        assert_abs_diff_eq!(r.statistic, 7.2, epsilon = 1e-9);
        assert_abs_diff_eq!(r.p_value, (-3.6f64).exp(), epsilon = 1e-10);
        assert_eq!(r.df, Some(2.0));
    }

    #[test]
    fn kruskal_wallis_ties_reference() {
        let r = kruskal_wallis(&[
            &[1.0, 2.0, 2.0, 3.0][..],
            &[2.0, 3.0, 4.0, 4.0, 5.0],
            &[5.0, 5.0, 6.0],
        ])
        .unwrap();
        assert_abs_diff_eq!(r.statistic, 7.799_305_555_555_559, epsilon = 1e-9);
        assert_abs_diff_eq!(r.p_value, 0.020_248_941_107_635_362, epsilon = 1e-8);
    }

    #[test]
    fn kruskal_wallis_identical_values() {
        let r = kruskal_wallis(&[&[2.0, 2.0], &[2.0, 2.0]]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let g = [1.0, 5.0, 3.0];
        let r = kruskal_wallis(&[&g, &g, &g]).unwrap();
        assert_abs_diff_eq!(r.statistic, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mann_whitney_exact_small() {
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.method, TestMethod::MannWhitneyExact);
        assert_abs_diff_eq!(r.p_value, 2.0 / 6.0, epsilon = 1e-12);

        let r = mann_whitney_u(&[1.5, 3.2, 4.1, 7.7, 2.2], &[5.0, 6.1, 8.3, 9.9, 4.4, 7.0]).unwrap();
        assert_abs_diff_eq!(r.statistic, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_value, 0.051_948_051_948_051_95, epsilon = 1e-10);
    }

    #[test]
    fn mann_whitney_ties_normal_approximation() {
        let a = [1.0, 2.0, 2.0, 3.0, 3.0, 3.0, 4.0, 8.0];
        let b = [3.0, 4.0, 4.0, 5.0, 5.0, 6.0, 7.0, 7.0, 9.0];
        let r = mann_whitney_u(&a, &b).unwrap();
        assert_eq!(r.method, TestMethod::MannWhitney);
        assert_abs_diff_eq!(r.statistic, 11.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_value, 0.019_604_108_570_366_05, epsilon = 1e-8);
    }

    #[test]
    fn mann_whitney_self_is_null_center() {
        let a = [1.0, 3.0, 7.0, 2.0, 9.0, 4.0, 11.0];
        let r = mann_whitney_u(&a, &a).unwrap();
        assert_abs_diff_eq!(r.statistic, 24.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn u_distribution_sums_to_binomial() {
        let d = u_distribution(4, 5);
        assert_eq!(d.iter().sum::<f64>(), 126.0);
        assert_eq!(d.len(), 21);
    }

    #[test]
    fn ranks_average_ties() {
        let (r, t) = rank_average(&[10.0, 20.0, 20.0, 5.0]);
        assert_eq!(r, vec![2.0, 3.5, 3.5, 1.0]);
        assert_eq!(t, vec![2]);
    }
}
