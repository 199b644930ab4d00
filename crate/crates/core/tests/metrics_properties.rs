use homogen_core::corpus::ConditionLabel;
use homogen_core::evalgen::{DimensionScores, FeatureRow, FeatureTable};
use homogen_core::metrics::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type P = StructuralProfile<f64, Standardized>;

fn sp(v: [f64; 5]) -> P {
    StructuralProfile::standardized(v)
}

fn vec5() -> impl Strategy<Value = [f64; 5]> {
    prop::array::uniform5(-5.0..5.0f64)
}

fn rotate(v: [f64; 5], theta: f64) -> [f64; 5] {
    // rotation in the plane of the first two axes, then a cyclic shift
    let (s, c) = theta.sin_cos();
    let r = [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2], v[3], v[4]];
    [r[4], r[0], r[1], r[2], r[3]]
}

proptest! {
    #[test]
    fn rr_is_similarity_invariant(
        aug in vec5(), h in vec5(), a in vec5(), shift in vec5(),
        theta in 0.0..6.28f64, scale in 0.1..10.0f64,
    ) {
        prop_assume!(sp(h).distance(&sp(a)) > 1e-3);
        let base = replacement_ratio(&sp(aug), &sp(h), &sp(a)).unwrap();
        let t = |v: [f64; 5]| {
            let r = rotate(v, theta);
            sp(std::array::from_fn(|d| r[d] * scale + shift[d]))
        };
        let moved = replacement_ratio(&t(aug), &t(h), &t(a)).unwrap();
        prop_assert!((base - moved).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&base));
    }

    #[test]
    fn rr_swaps_to_complement(aug in vec5(), h in vec5(), a in vec5()) {
        prop_assume!(sp(h).distance(&sp(a)) > 1e-3);
        let rr = replacement_ratio(&sp(aug), &sp(h), &sp(a)).unwrap();
        let swapped = replacement_ratio(&sp(aug), &sp(a), &sp(h)).unwrap();
        prop_assert!((rr + swapped - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perpendicular_symmetric_and_translation_free(
        p in vec5(), h in vec5(), a in vec5(), shift in vec5(), t in -3.0..3.0f64,
    ) {
        prop_assume!(sp(h).distance(&sp(a)) > 1e-3);
        let d = perpendicular_distance(&sp(p), &sp(h), &sp(a)).unwrap();
        let swapped = perpendicular_distance(&sp(p), &sp(a), &sp(h)).unwrap();
        prop_assert!((d - swapped).abs() < 1e-9);
        let mv = |v: [f64; 5]| sp(std::array::from_fn(|k| v[k] + shift[k]));
        prop_assert!((d - perpendicular_distance(&mv(p), &mv(h), &mv(a)).unwrap()).abs() < 1e-9);
        // bounded by the distance to either anchor, zero on the line
        prop_assert!(d <= sp(p).distance(&sp(h)) + 1e-9);
        let on_line = sp(std::array::from_fn(|k| h[k] + t * (a[k] - h[k])));
        prop_assert!(perpendicular_distance(&on_line, &sp(h), &sp(a)).unwrap() < 1e-9);
    }

    #[test]
    fn hi_identity_and_vr_reciprocity(
        h in prop::collection::vec(0.0..5.0f64, 2..40),
        aug in prop::collection::vec(0.0..5.0f64, 2..40),
    ) {
        let spread = |x: &[f64]| x.iter().any(|v| (v - x[0]).abs() > 1e-6);
        prop_assume!(spread(&h) && spread(&aug));
        let vr = variance_ratio(&h, &aug).unwrap();
        let back = variance_ratio(&aug, &h).unwrap();
        prop_assert!((vr * back - 1.0).abs() < 1e-9);
        let hi = homogenization_index(&h, &aug).unwrap();
        prop_assert!((hi - (1.0 - 1.0 / vr)).abs() < 1e-12);
        prop_assert!((hi - hi_from_vr(vr)).abs() < 1e-12);
        prop_assert!(hi < 1.0);
        prop_assert_eq!(homogenization_index(&h, &h).unwrap(), 0.0);
    }

    #[test]
    fn hi_is_scale_and_shift_invariant(
        h in prop::collection::vec(0.0..5.0f64, 3..30),
        aug in prop::collection::vec(0.0..5.0f64, 3..30),
        k in 0.1..10.0f64, c in -5.0..5.0f64,
    ) {
        prop_assume!(h.iter().any(|v| (v - h[0]).abs() > 1e-3));
        prop_assume!(aug.iter().any(|v| (v - aug[0]).abs() > 1e-3));
        let t = |x: &[f64]| x.iter().map(|v| v * k + c).collect::<Vec<_>>();
        let a = homogenization_index(&h, &aug).unwrap();
        let b = homogenization_index(&t(&h), &t(&aug)).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn degenerate_inputs() {
    let p = sp([1.0; 5]);
    assert!(matches!(replacement_ratio(&p, &p, &p), Err(MetricsError::DegenerateAxis)));
    assert!(perpendicular_distance(&p, &p, &p).is_err());
    assert_eq!(variance_ratio(&[1.0, 1.0], &[2.0, 2.0]).unwrap(), 1.0);
    assert_eq!(variance_ratio(&[1.0, 3.0], &[2.0, 2.0]).unwrap(), f64::INFINITY);
    assert_eq!(hi_from_vr(f64::INFINITY), 1.0);
    assert!(matches!(homogenization_index(&[2.0, 2.0], &[1.0, 3.0]), Err(MetricsError::ZeroVariance(_))));
    assert!(variance_ratio(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn single_precision_matches_double() {
    let h = [2.0f32, 2.5, 3.0, 1.5, 2.2];
    let aug = [2.1f32, 2.2, 2.3, 2.0, 2.15];
    let hi32 = homogenization_index(&h, &aug).unwrap();
    let hi64 = homogenization_index(&h.map(f64::from), &aug.map(f64::from)).unwrap();
    assert!((f64::from(hi32) - hi64).abs() < 1e-5);

    let h32 = StructuralProfile::<f32, Standardized>::standardized([0.0; 5]);
    let a32 = StructuralProfile::<f32, Standardized>::standardized([1.0; 5]);
    let x32 = StructuralProfile::<f32, Standardized>::standardized([0.7, 0.7, 0.7, 0.7, 0.9]);
    let rr = replacement_ratio(&x32, &h32, &a32).unwrap();
    let rr64 = replacement_ratio(&sp([0.7, 0.7, 0.7, 0.7, 0.9]), &sp([0.0; 5]), &sp([1.0; 5])).unwrap();
    assert!((f64::from(rr) - rr64).abs() < 1e-5);
}

fn cloud(rng: &mut ChaCha8Rng, n: usize, center: [f64; 5], sd: f64) -> Vec<P> {
    (0..n)
        .map(|_| {
            sp(std::array::from_fn(|d| {
                let z: f64 = StandardNormal.sample(rng);
                center[d] + sd * z
            }))
        })
        .collect()
}

#[test]
fn centroid_within_three_standard_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let center = [0.5, -1.0, 2.0, 0.0, 1.5];
    let pts = cloud(&mut rng, 1375, center, 0.8);
    let c = centroid(&pts).unwrap();
    let se = 0.8 / (1375f64).sqrt();
    for d in 0..5 {
        assert!((c[d] - center[d]).abs() < 3.0 * se);
    }
}

fn cfg(n: usize, seed: u64) -> EmergenceConfig {
    EmergenceConfig {
        n_permutations: n,
        seed,
        resample_axis: true,
    }
}

#[test]
fn emergence_independent_of_thread_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = cloud(&mut rng, 200, [0.0; 5], 1.0);
    let a = cloud(&mut rng, 200, [1.0; 5], 1.0);
    let aug = cloud(&mut rng, 200, [0.6; 5], 1.0);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| convergence(&h, &a, &aug, &cfg(500, 77)).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, convergence(&h, &a, &aug, &cfg(500, 77)).unwrap());
    assert_ne!(one.emergence_p, convergence(&h, &a, &aug, &cfg(500, 78)).unwrap().emergence_p);
    assert!(one.emergence_p >= 1.0 / 501.0 && one.emergence_p <= 1.0);
}

#[test]
fn emergence_p_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = cloud(&mut rng, 100, [0.0; 5], 1.0);
    let a = cloud(&mut rng, 100, [2.0; 5], 1.0);
    let aug = cloud(&mut rng, 100, [1.0, 1.0, 1.0, 3.0, -1.0], 0.5);
    let r = emergence_test(&h, &a, &aug, &cfg(999, 1)).unwrap();
    assert_eq!(r.p_value, (1 + r.exceedances) as f64 / 1000.0);
    assert_eq!(r.exceedances, 0);
    assert!((r.lambda - replacement_ratio(&centroid(&aug).unwrap(), &centroid(&h).unwrap(), &centroid(&a).unwrap()).unwrap()).abs() < 1e-15);
    assert!(emergence_test(&h, &a, &aug, &cfg(0, 1)).is_err());
    assert!(emergence_test(&h[..1], &a, &aug, &cfg(10, 1)).is_err());
}

fn table(groups: &[(ConditionLabel, Vec<[f64; 5]>)]) -> FeatureTable {
    let mut rows = Vec::new();
    for (c, pts) in groups {
        for (i, p) in pts.iter().enumerate() {
            let id = format!("{}-{i:04}", c.short());
            rows.push(FeatureRow {
                essay_id: id.clone(),
                base_id: id,
                condition: *c,
                topic_id: 0,
                mean: DimensionScores::from_array([p[0], p[1], p[2], p[3], p[4], 3.0]),
                cv: DimensionScores::zeros(),
                run_count: 1,
            });
        }
    }
    FeatureTable::new(rows)
}

fn raw_cloud(rng: &mut ChaCha8Rng, n: usize, center: [f64; 5], sd: f64) -> Vec<[f64; 5]> {
    cloud(rng, n, center, sd).iter().map(|p| *p.values()).collect()
}

#[test]
fn projection_of_separated_conditions() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let t = table(&[
        (ConditionLabel::HumanOnly, raw_cloud(&mut rng, 300, [1.0; 5], 0.2)),
        (ConditionLabel::AiOnly, raw_cloud(&mut rng, 300, [4.0; 5], 0.2)),
    ]);
    let z = zscore_standardize(&t, StandardizeMode::Pooled).unwrap();
    let p = project_2d(&z).unwrap();
    assert!(p.explained_share[0] >= 0.80, "{:?}", p.explained_share);
    assert!(p.explained_share[0] >= p.explained_share[1]);
    let h = p.conditions.iter().find(|c| c.condition == ConditionLabel::HumanOnly).unwrap();
    let a = p.conditions.iter().find(|c| c.condition == ConditionLabel::AiOnly).unwrap();
    assert!(h.centroid_x * a.centroid_x < 0.0);
    assert_eq!(p.points.len(), 600);
}

#[test]
fn isotropic_projection_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let t = table(&[(ConditionLabel::HumanOnly, raw_cloud(&mut rng, 500, [2.5; 5], 0.5))]);
    let z = zscore_standardize(&t, StandardizeMode::HOnly).unwrap();
    let p1 = project_2d(&z).unwrap();
    let p2 = project_2d(&z).unwrap();
    assert_eq!(p1, p2);
    for c in &p1.components {
        let norm: f64 = c.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-9);
        let lead = c.iter().cloned().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        assert!(lead > 0.0);
    }
    // roughly equal shares, near 1/5 each
    assert!(p1.explained_share[0] < 0.3);
}

#[test]
fn collinear_points_are_rank_deficient() {
    let pts: Vec<[f64; 5]> = (0..10).map(|i| [i as f64; 5]).collect();
    assert!(matches!(pca_2d(&pts), Err(MetricsError::RankDeficient)));
    assert!(pca_2d(&pts[..2]).is_err());
}

#[test]
fn ellipse_of_axis_aligned_cloud() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let pts: Vec<[f64; 2]> = (0..5000)
        .map(|_| {
            let x: f64 = StandardNormal.sample(&mut rng);
            let y: f64 = StandardNormal.sample(&mut rng);
            [3.0 * x, y]
        })
        .collect();
    let e = Ellipse::of(&pts).unwrap();
    let q = 5.991_464_547_107_979f64.sqrt();
    assert!((e.major / (3.0 * q) - 1.0).abs() < 0.05);
    assert!((e.minor / q - 1.0).abs() < 0.05);
    assert!(e.angle.abs() < 0.05);
}
