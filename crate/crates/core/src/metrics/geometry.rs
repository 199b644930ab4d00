use super::profile::{StructuralProfile, PROFILE_DIMS};
use super::MetricsError;
use crate::Scalar;

pub fn euclidean<T: Scalar, S>(a: &StructuralProfile<T, S>, b: &StructuralProfile<T, S>) -> T {
    a.distance(b)
}

/// Componentwise mean.
pub fn centroid<T: Scalar, S>(profiles: &[StructuralProfile<T, S>]) -> Result<StructuralProfile<T, S>, MetricsError> {
    if profiles.is_empty() {
        return Err(MetricsError::TooFew {
            what: "centroid",
            need: 1,
            got: 0,
        });
    }
    let n = T::of_usize(profiles.len());
    let mut v = [T::zero(); PROFILE_DIMS];
    for p in profiles {
        for (slot, x) in v.iter_mut().zip(p.values()) {
            *slot = *slot + *x;
        }
    }
    Ok(StructuralProfile::with_scale(v.map(|s| s / n)))
}

/// `d_H / (d_H + d_A)`.
pub fn rr_from_distances<T: Scalar>(d_to_h: T, d_to_a: T) -> Result<T, MetricsError> {
    if d_to_h < T::zero() || d_to_a < T::zero() {
        return Err(MetricsError::InvalidParameter("distances must be non-negative".into()));
    }
    let total = d_to_h + d_to_a;
    if total == T::zero() {
        return Err(MetricsError::DegenerateAxis);
    }
    Ok(d_to_h / total)
}

/// Share of the H-to-A distance budget spent moving away from H.
pub fn replacement_ratio<T: Scalar, S>(
    c_aug: &StructuralProfile<T, S>,
    c_h: &StructuralProfile<T, S>,
    c_a: &StructuralProfile<T, S>,
) -> Result<T, MetricsError> {
    if c_h == c_a {
        return Err(MetricsError::DegenerateAxis);
    }
    rr_from_distances(c_aug.distance(c_h), c_aug.distance(c_a))
}

/// Distance from `point` to the infinite line through `start` and `end`.
pub fn perpendicular_distance<T: Scalar, S>(
    point: &StructuralProfile<T, S>,
    start: &StructuralProfile<T, S>,
    end: &StructuralProfile<T, S>,
) -> Result<T, MetricsError> {
    let axis: [T; PROFILE_DIMS] = std::array::from_fn(|d| end[d] - start[d]);
    let rel: [T; PROFILE_DIMS] = std::array::from_fn(|d| point[d] - start[d]);
    let len2: T = axis.iter().map(|x| *x * *x).sum();
    if len2 == T::zero() {
        return Err(MetricsError::DegenerateAxis);
    }
    let t = axis.iter().zip(&rel).map(|(a, r)| *a * *r).sum::<T>() / len2;
    let ss: T = axis
        .iter()
        .zip(&rel)
        .map(|(a, r)| {
            let o = *r - t * *a;
            o * o
        })
        .sum();
    Ok(ss.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Raw;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type P = StructuralProfile<f64, Raw>;

    #[test]
    fn centroid_cases() {
        let c = centroid(&[P::new([0.0; 5]), P::new([2.0; 5])]).unwrap();
        assert_eq!(c, P::new([1.0; 5]));
        let one = P::new([1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(centroid(&[one]).unwrap(), one);
        assert!(centroid::<f64, Raw>(&[]).is_err());
    }

    #[test]
    fn rr_cases() {
        assert!((rr_from_distances(3.035f64, 1.302).unwrap() - 0.700).abs() < 5e-4);
        assert!((rr_from_distances(4.339f64, 1.345).unwrap() - 0.763).abs() < 5e-4);
        let h = P::new([0.0; 5]);
        let a = P::new([2.0, 0.0, 0.0, 0.0, 0.0]);
        let mid = P::new([1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(replacement_ratio(&mid, &h, &a).unwrap(), 0.5);
        assert_eq!(replacement_ratio(&mid, &h, &h), Err(MetricsError::DegenerateAxis));
    }

    #[test]
    fn perpendicular_cases() {
        let o = P::new([0.0; 5]);
        let e1 = P::new([1.0, 0.0, 0.0, 0.0, 0.0]);
        let e2 = P::new([0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(perpendicular_distance(&e2, &o, &e1).unwrap(), 1.0);
        let on = P::new([-3.5, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(perpendicular_distance(&on, &o, &e1).unwrap(), 0.0);
        assert!(perpendicular_distance(&e2, &o, &o).is_err());
    }

    #[test]
    fn perpendicular_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut r = || P::new(std::array::from_fn(|_| rng.random_range(-2.0..2.0)));
        for _ in 0..20 {
            let (x, s, e) = (r(), r(), r());
            let d = perpendicular_distance(&x, &s, &e).unwrap();
            // scan t in [-10, 10] at 1e-4 resolution
            let best = (-100_000..=100_000)
                .map(|k| {
                    let t = k as f64 * 1e-4;
                    let q = P::new(std::array::from_fn(|i| s[i] + t * (e[i] - s[i])));
                    x.distance(&q)
                })
                .fold(f64::INFINITY, f64::min);
            assert!(best >= d - 1e-12);
            assert!(best - d < 1e-6, "{best} vs {d}");
        }
    }
}
