//! Tail probabilities of the reference distributions, evaluated in f64.

use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal, StudentsT};

pub fn t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

pub fn f_upper(f: f64, df1: f64, df2: f64) -> f64 {
    if f.is_infinite() {
        return 0.0;
    }
    if f <= 0.0 {
        return 1.0;
    }
    let dist = FisherSnedecor::new(df1, df2).expect("df > 0");
    dist.sf(f)
}

pub fn chi2_upper(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df).expect("df > 0");
    dist.sf(x)
}

pub fn chi2_quantile(p: f64, df: f64) -> f64 {
    ChiSquared::new(df).expect("df > 0").inverse_cdf(p)
}

pub fn normal_two_sided(z: f64) -> f64 {
    let dist = Normal::standard();
    (2.0 * dist.sf(z.abs())).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // t(8) two-sided at |t| = 1
        assert!((t_two_sided(-1.0, 8.0) - 0.346_593_2).abs() < 1e-6);
        assert!((chi2_upper(7.2, 2.0) - (-3.6f64).exp()).abs() < 1e-12);
        assert!((normal_two_sided(1.959_963_985) - 0.05).abs() < 1e-8);
        assert!((chi2_quantile(0.95, 2.0) - 5.991_464_547).abs() < 1e-6);
    }
}
