//! Acceptance criteria 1-10. Runs without libtest so every criterion
//! prints exactly one PASS/FAIL line; exits nonzero if any fails.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use homogen_core::evalgen::{
    aggregate_runs, run_extraction, ClientPolicy, CredentialPool, DimensionScores, EvaluatorRubric, MockEvaluator,
    ScoreRun,
};
use homogen_core::metrics::{
    convergence, dimension_homogenization, hi_from_vr, rr_from_distances, EmergenceConfig, Standardized,
    StructuralProfile,
};
use homogen_core::stats::{
    brown_forsythe, cohens_d_summary, kruskal_wallis, levene_mean, mann_whitney_u, welch_t, BootstrapConfig,
    SampleSummary,
};
use homogen_core::Dimension;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde_json::Value;

// Pinned tolerances.
const HI_TOL: f64 = 0.002;
const RR_TOL: f64 = 0.001;
const D_TOL: f64 = 0.06;
const VR_RANGE: (f64, f64) = (3.5, 4.5);
const COVERAGE_RANGE: (f64, f64) = (0.91, 0.99);
const NULL_PASS_SHARE: f64 = 0.90;
const POWER_P_MAX: f64 = 0.001;
const STAT_TOL: f64 = 1e-6;
const P_TOL: f64 = 1e-4;
const CV_TOL: f64 = 1e-4;

// Reference VR and HI, rows argument depth, perspective plurality,
// abstract-concrete oscillation, cohesion architecture, structural
// originality; columns minimal, structural, delegative.
const REFERENCE_VR: [[f64; 3]; 5] = [
    [1.881, 0.528, 2.065],
    [0.771, 0.959, 0.685],
    [0.737, 0.711, 0.761],
    [4.554, 3.160, 3.180],
    [1.563, 1.413, 2.082],
];
const REFERENCE_HI: [[f64; 3]; 5] = [
    [0.468, -0.894, 0.516],
    [-0.297, -0.043, -0.461],
    [-0.357, -0.407, -0.314],
    [0.780, 0.684, 0.686],
    [0.360, 0.292, 0.520],
];
// d(aug, H), d(aug, A), RR per prompt.
const REFERENCE_DISTANCES: [(f64, f64, f64); 3] = [(3.035, 1.302, 0.700), (4.339, 1.345, 0.763), (3.189, 1.136, 0.737)];
// Quality mean and SD of H, then of each prompt condition, and the effect sizes.
const QUALITY_H: (f64, f64) = (2.69, 0.47);
const QUALITY_PROMPTS: [(f64, f64); 3] = [(4.55, 0.44), (4.23, 0.35), (4.74, 0.38)];
const REFERENCE_D: [f64; 3] = [4.102, 3.754, 4.814];
const N_PER_CONDITION: usize = 1375;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = 0;
    for (vr_row, hi_row) in REFERENCE_VR.iter().zip(REFERENCE_HI) {
        for (vr, hi) in vr_row.iter().zip(hi_row) {
            let err = (hi_from_vr(*vr) - hi).abs();
            worst = worst.max(err);
            ok += usize::from(err <= HI_TOL);
        }
    }
    outcome(ok == 15, format!("{ok}/15 HI = 1 - 1/VR within {HI_TOL} (max error {worst:.4})"))
}

fn c2() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (dh, da, want) in REFERENCE_DISTANCES {
        let rr = rr_from_distances(dh, da).unwrap();
        pass &= (rr - want).abs() <= RR_TOL;
        parts.push(format!("{rr:.4}"));
    }
    outcome(pass, format!("RR {} vs 0.700/0.763/0.737 within {RR_TOL}", parts.join("/")))
}

fn c3() -> Outcome {
    let h = SampleSummary::from_moments(N_PER_CONDITION, QUALITY_H.0, QUALITY_H.1);
    let mut parts = Vec::new();
    let mut pass = true;
    for ((m, s), want) in QUALITY_PROMPTS.into_iter().zip(REFERENCE_D) {
        let d = cohens_d_summary(&h, &SampleSummary::from_moments(N_PER_CONDITION, m, s)).unwrap();
        pass &= (d - want).abs() <= D_TOL;
        parts.push(format!("{d:.3}"));
    }
    outcome(pass, format!("d {} vs 4.102/3.754/4.814 within {D_TOL}", parts.join("/")))
}

fn normal_sample(rng: &mut ChaCha8Rng, n: usize, mean: f64, sd: f64) -> Vec<f64> {
    let dist = Normal::new(mean, sd).unwrap();
    (0..n).map(|_| dist.sample(rng)).collect()
}

fn c4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = normal_sample(&mut rng, N_PER_CONDITION, 3.0, 1.0);
    let aug = normal_sample(&mut rng, N_PER_CONDITION, 3.0, 0.5);
    let boot = BootstrapConfig {
        n_resamples: 10_000,
        ..BootstrapConfig::with_seed(44)
    };
    let r = dimension_homogenization(Dimension::CohesionArchitecture, &h, &aug, &boot).unwrap();
    let pass = (VR_RANGE.0..=VR_RANGE.1).contains(&r.vr) && r.brown_forsythe.p_value < 0.001 && r.vr_ci.contains(4.0);
    outcome(
        pass,
        format!(
            "VR {:.3}, BF p {:.2e}, 95% CI [{:.3}, {:.3}]",
            r.vr, r.brown_forsythe.p_value, r.vr_ci.lower, r.vr_ci.upper
        ),
    )
}

fn c5() -> Outcome {
    let trials = 200;
    let mut covered = 0;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(t);
        let a = normal_sample(&mut rng, 200, 0.0, 1.0);
        let b = normal_sample(&mut rng, 200, 0.0, 1.0);
        let boot = BootstrapConfig {
            n_resamples: 10_000,
            ..BootstrapConfig::with_seed(t)
        };
        let r = dimension_homogenization(Dimension::ArgumentDepth, &a, &b, &boot).unwrap();
        covered += usize::from(r.vr_ci.contains(1.0));
    }
    let share = covered as f64 / trials as f64;
    outcome(
        (COVERAGE_RANGE.0..=COVERAGE_RANGE.1).contains(&share),
        format!("CI covers VR = 1 in {covered}/{trials} trials ({:.1}%)", 100.0 * share),
    )
}

type Profile = StructuralProfile<f64, Standardized>;

fn draw(rng: &mut ChaCha8Rng, center: [f64; 5]) -> [f64; 5] {
    std::array::from_fn(|d| {
        let z: f64 = StandardNormal.sample(rng);
        center[d] + z
    })
}

/// H around 0, A around 1.5 on every axis, augmented points mixing fresh H
/// and A draws at weight `lambda`, shifted by `offset`.
fn mixture(seed: u64, n: usize, lambda: f64, offset: [f64; 5]) -> (Vec<Profile>, Vec<Profile>, Vec<Profile>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c_a = [1.5; 5];
    let h = (0..n).map(|_| Profile::standardized(draw(&mut rng, [0.0; 5]))).collect();
    let a = (0..n).map(|_| Profile::standardized(draw(&mut rng, c_a))).collect();
    let aug = (0..n)
        .map(|_| {
            let x = draw(&mut rng, [0.0; 5]);
            let y = draw(&mut rng, c_a);
            Profile::standardized(std::array::from_fn(|d| lambda * y[d] + (1.0 - lambda) * x[d] + offset[d]))
        })
        .collect();
    (h, a, aug)
}

fn c6() -> Outcome {
    let trials = 100;
    let mut null_pass = 0;
    for t in 0..trials {
        let (h, a, aug) = mixture(6_000 + t, 200, 0.7, [0.0; 5]);
        let cfg = EmergenceConfig {
            n_permutations: 1_000,
            seed: t,
            resample_axis: true,
        };
        let r = convergence(&h, &a, &aug, &cfg).unwrap();
        null_pass += usize::from(r.emergence_p > 0.05);
    }
    let s = 0.5f64.sqrt();
    let (h, a, aug) = mixture(66, N_PER_CONDITION, 0.7, [s, -s, 0.0, 0.0, 0.0]);
    let cfg = EmergenceConfig {
        n_permutations: 10_000,
        seed: 66,
        resample_axis: true,
    };
    let power = convergence(&h, &a, &aug, &cfg).unwrap();
    let share = null_pass as f64 / trials as f64;
    outcome(
        share >= NULL_PASS_SHARE && power.emergence_p <= POWER_P_MAX,
        format!(
            "on-axis p > 0.05 in {null_pass}/{trials}; offset 1.0 gives p {:.5} (perp {:.3})",
            power.emergence_p, power.perpendicular_distance
        ),
    )
}

fn c7() -> Outcome {
    let mut checks: Vec<(&str, f64, f64, f64, f64)> = Vec::new();
    let w = welch_t(&[2.1, 3.4, 1.9, 5.6, 4.4, 3.3], &[6.1, 5.2, 7.7, 6.9, 5.5]).unwrap();
    checks.push(("welch", w.statistic, -3.864_644_336_813_579, w.p_value, 0.003_899_434_572_377_011_5));
    let (h1, h2, h3) = (
        [1.0, 2.0, 2.0, 3.0, 10.0],
        [2.0, 4.0, 4.0, 5.0, 6.0, 7.0],
        [0.5, 1.0, 8.0, 9.0],
    );
    let bf = brown_forsythe(&[&h1, &h2, &h3]).unwrap();
    checks.push(("brown-forsythe", bf.statistic, 1.853_133_845_531_742_5, bf.p_value, 0.198_906_742_778_506_2));
    let lv = levene_mean(&[&h1, &h2, &h3]).unwrap();
    checks.push(("levene", lv.statistic, 3.650_607_093_338_171, lv.p_value, 0.057_753_684_414_815_27));
    let kw = kruskal_wallis(&[&[1.0, 2.0, 2.0, 3.0][..], &[2.0, 3.0, 4.0, 4.0, 5.0], &[5.0, 5.0, 6.0]]).unwrap();
    checks.push(("kruskal-wallis", kw.statistic, 7.799_305_555_555_559, kw.p_value, 0.020_248_941_107_635_362));
    let kw3 = kruskal_wallis(&[&[1.0, 2.0, 3.0][..], &[4.0, 5.0, 6.0], &[7.0, 8.0, 9.0]]).unwrap();
    checks.push(("kruskal-wallis separated", kw3.statistic, 7.2, kw3.p_value, (-3.6f64).exp()));
    let mw = mann_whitney_u(&[1.5, 3.2, 4.1, 7.7, 2.2], &[5.0, 6.1, 8.3, 9.9, 4.4, 7.0]).unwrap();
    checks.push(("mann-whitney exact", mw.statistic, 4.0, mw.p_value, 0.051_948_051_948_051_95));
    let mwt = mann_whitney_u(
        &[1.0, 2.0, 2.0, 3.0, 3.0, 3.0, 4.0, 8.0],
        &[3.0, 4.0, 4.0, 5.0, 5.0, 6.0, 7.0, 7.0, 9.0],
    )
    .unwrap();
    checks.push(("mann-whitney ties", mwt.statistic, 11.5, mwt.p_value, 0.019_604_108_570_366_05));
    let failed: Vec<&str> = checks
        .iter()
        .filter(|(_, s, ws, p, wp)| (s - ws).abs() > STAT_TOL || (p - wp).abs() > P_TOL)
        .map(|c| c.0)
        .collect();
    outcome(
        failed.is_empty(),
        format!("{}/{} kernel oracles match{}", checks.len() - failed.len(), checks.len(), if failed.is_empty() {
            String::new()
        } else {
            format!("; failed: {}", failed.join(", "))
        }),
    )
}

fn homogen(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_homogen"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn golden(dir: &Path) -> bool {
    if dir.join("syn/features.jsonl").exists() {
        return true;
    }
    homogen(dir, &["synth", "--seed", "20240601", "--out", "syn", "-q"]).status.success()
}

fn c8(work: &Path) -> Outcome {
    if !golden(work) {
        return outcome(false, "synth failed".into());
    }
    let o = homogen(work, &["analyze", "syn/features.jsonl", "--out", "c8", "-q"]);
    if !o.status.success() {
        return outcome(false, format!("analyze failed: {}", String::from_utf8_lossy(&o.stderr)));
    }
    let r: Value = serde_json::from_str(&fs::read_to_string(work.join("c8/summary.json")).unwrap()).unwrap();
    let row = |dim: &str| -> Vec<f64> {
        r["stage2"]["result"]["rows"]
            .as_array()
            .unwrap()
            .iter()
            .find(|x| x["dimension"] == dim)
            .unwrap()["hi"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect()
    };
    let coh = row("cohesion_architecture");
    let aco = row("abstract_concrete_oscillation");
    let ad = row("argument_depth");
    let verdicts: Vec<bool> = r["stage1"]["result"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["verdict"].as_bool().unwrap())
        .collect();
    let rr: Vec<f64> = r["stage3"]["result"]["conditions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["rr"].as_f64().unwrap())
        .collect();
    let pass = coh.iter().all(|h| *h > 0.6)
        && aco.iter().all(|h| *h < 0.0)
        && ad[0] > 0.0
        && ad[1] < 0.0
        && ad[2] > 0.0
        && verdicts.len() == 3
        && verdicts.iter().all(|v| *v)
        && rr.len() == 3
        && rr.iter().all(|x| *x > 0.65);
    let f = |v: &[f64]| v.iter().map(|x| format!("{x:+.3}")).collect::<Vec<_>>().join("/");
    outcome(
        pass,
        format!(
            "cohesion HI {}, abstract-concrete HI {}, argument depth HI {}, verdicts {:?}, RR {}",
            f(&coh),
            f(&aco),
            f(&ad),
            verdicts,
            rr.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join("/")
        ),
    )
}

fn c9(work: &Path) -> Outcome {
    let dir = work.join("c9");
    fs::create_dir_all(&dir).unwrap();
    let mut corpus = String::new();
    for i in 1..=10 {
        corpus.push_str(&format!(
            "{{\"essay_id\":\"h{i:02}\",\"topic_id\":0,\"condition\":\"H\",\"text\":\"Essay {i}.\"}}\n"
        ));
    }
    fs::write(dir.join("corpus.jsonl"), corpus).unwrap();
    let policy = "[policy]\nbase_delay_ms = 1\nmax_delay_ms = 2\nmax_concurrent = 4\ncheckpoint_interval = 5\n";
    fs::write(dir.join("cut.toml"), format!("{policy}[endpoint.mock]\nabort_after = 13\ncall_log = \"calls.log\"\n")).unwrap();
    fs::write(dir.join("go.toml"), format!("{policy}[endpoint.mock]\ncall_log = \"calls.log\"\n")).unwrap();
    let first = homogen(&dir, &["--config", "cut.toml", "evaluate", "corpus.jsonl", "-q"]);
    let second = homogen(&dir, &["--config", "go.toml", "evaluate", "corpus.jsonl", "--resume", "-q"]);
    let calls: Vec<String> = fs::read_to_string(dir.join("calls.log"))
        .unwrap_or_default()
        .lines()
        .map(String::from)
        .collect();
    let unique: BTreeSet<&String> = calls.iter().collect();
    let resume_ok = first.status.code() == Some(5)
        && second.status.success()
        && calls.len() == 30
        && unique.len() == 30;

    let runs: Vec<ScoreRun> = [2.0, 3.0, 4.0]
        .iter()
        .enumerate()
        .map(|(i, v)| ScoreRun {
            essay_id: "e".into(),
            run_index: i as u32,
            scores: DimensionScores::from_array([*v; 6]),
        })
        .collect();
    let agg = &aggregate_runs(&runs).unwrap()[0];
    let cv = agg.cv.get(Dimension::Quality);
    let cv_ok = (cv - 0.2722).abs() <= CV_TOL && agg.mean.get(Dimension::Quality) == 3.0;

    let corpus = homogen_core::corpus::load_corpus(&dir.join("corpus.jsonl"), homogen_core::corpus::CorpusFormat::Jsonl).unwrap();
    let mock = MockEvaluator::new().with_delay(Duration::from_millis(5));
    let policy = ClientPolicy {
        max_concurrent: 4,
        ..ClientPolicy::default()
    };
    let r = run_extraction(
        &corpus,
        3,
        &EvaluatorRubric::default(),
        &mock,
        &policy,
        &CredentialPool::default(),
        None,
    )
    .unwrap();
    let conc_ok = r.is_complete() && mock.max_in_flight() <= 4 && mock.max_in_flight() > 1;

    outcome(
        resume_ok && cv_ok && conc_ok,
        format!(
            "interrupted+resumed: {} calls, {} unique; CV(2,3,4) = {cv:.4}; max in flight {} (limit 4)",
            calls.len(),
            unique.len(),
            mock.max_in_flight()
        ),
    )
}

fn c10(work: &Path) -> Outcome {
    if !golden(work) {
        return outcome(false, "synth failed".into());
    }
    for out in ["d1", "d2"] {
        let o = homogen(work, &["analyze", "syn/features.jsonl", "--corpus", "syn/corpus.jsonl", "--topic-split", "--out", out, "-q"]);
        if !o.status.success() {
            return outcome(false, format!("analyze failed: {}", String::from_utf8_lossy(&o.stderr)));
        }
    }
    let names: BTreeSet<String> = fs::read_dir(work.join("d1"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| fs::read(work.join("d1").join(n)).ok() != fs::read(work.join("d2").join(n)).ok())
        .collect();
    outcome(
        differing.is_empty() && names.len() > 10,
        format!("{} bundle files, {} differ", names.len(), differing.len()),
    )
}

fn main() {
    let work = tempfile::tempdir().unwrap();
    let w = work.path();
    let criteria: Vec<(u32, &str, u64, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, "metric identity", 1, Box::new(c1)),
        (2, "RR reconstruction", 1, Box::new(c2)),
        (3, "effect-size reconstruction", 1, Box::new(c3)),
        (4, "VR oracle", 30, Box::new(c4)),
        (5, "bootstrap calibration", 120, Box::new(c5)),
        (6, "emergence calibration", 300, Box::new(c6)),
        (7, "kernel oracles", 1, Box::new(c7)),
        (8, "end-to-end pattern", 120, Box::new(move || c8(w))),
        (9, "extraction harness", 30, Box::new(move || c9(w))),
        (10, "determinism", 120, Box::new(move || c10(w))),
    ];
    let mut failed = 0;
    for (n, name, limit, run) in &criteria {
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs < *limit as f64;
        let pass = o.pass && in_time;
        failed += usize::from(!pass);
        println!(
            "criterion {n:>2} {} {name}: {} [{secs:.2} s, limit {limit} s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
