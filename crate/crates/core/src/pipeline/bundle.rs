//! Report bundle: `summary.json`, one CSV per table, projection files and a
//! plain-text summary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::report::{AnalysisReport, StageOutcome};
use super::PipelineError;
use crate::metrics::Projection;

pub const BUNDLE_FILES: &[&str] = &[
    "summary.json",
    "summary.txt",
    "descriptives.csv",
    "text_characteristics.csv",
    "stability.csv",
    "topic_bias.csv",
    "quality.csv",
    "variance_ratio.csv",
    "homogenization_index.csv",
    "convergence.csv",
    "moderation.csv",
    "tercile_convergence.csv",
    "threshold_convergence.csv",
    "topic_robustness.csv",
    "projection.json",
    "projection_points.csv",
    "projection_conditions.csv",
];

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_csv(dir: &Path, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), PipelineError> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| PipelineError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let fail = |e: csv::Error| PipelineError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(&r).map_err(fail)?;
    }
    w.flush().map_err(|e| PipelineError::io(&path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

/// Writes the bundle into `dir` (created if needed). Tables of stages that
/// did not complete are omitted. Returns the file names written.
pub fn write_bundle(report: &AnalysisReport, dir: &Path) -> Result<Vec<String>, PipelineError> {
    fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let mut written = Vec::new();
    let mut csv = |name: &str, header: &[&str], rows: Vec<Vec<String>>| -> Result<(), PipelineError> {
        write_csv(dir, name, header, rows)?;
        written.push(name.to_string());
        Ok(())
    };

    csv(
        "descriptives.csv",
        &["condition", "dimension", "n", "mean", "sd", "median"],
        report
            .descriptives
            .iter()
            .map(|d| {
                vec![
                    d.condition.to_string(),
                    d.dimension.key().into(),
                    d.n.to_string(),
                    num(d.mean),
                    opt(d.sd),
                    num(d.median),
                ]
            })
            .collect(),
    )?;
    if let Some(tc) = &report.text_characteristics {
        csv(
            "text_characteristics.csv",
            &["condition", "n", "mean_chars", "sd_chars", "difference_from_h"],
            tc.iter()
                .map(|t| {
                    vec![
                        t.condition.to_string(),
                        t.n.to_string(),
                        num(t.mean_chars),
                        opt(t.sd_chars),
                        opt(t.difference_from_h),
                    ]
                })
                .collect(),
        )?;
    }
    csv(
        "stability.csv",
        &["dimension", "mean_cv", "max_cv", "threshold", "pass"],
        report
            .stability
            .dimensions
            .iter()
            .map(|d| {
                vec![
                    d.dimension.key().into(),
                    num(d.mean_cv),
                    num(d.max_cv),
                    num(report.stability.threshold),
                    d.pass.to_string(),
                ]
            })
            .collect(),
    )?;
    if let StageOutcome::Ok(tb) = &report.topic_bias {
        csv(
            "topic_bias.csv",
            &["condition", "dimension", "topic_a", "topic_b", "median_a", "median_b", "u", "p", "significant"],
            tb.rows
                .iter()
                .map(|r| {
                    vec![
                        tb.condition.to_string(),
                        r.dimension.key().into(),
                        r.topic_a.to_string(),
                        r.topic_b.to_string(),
                        num(r.median_a),
                        num(r.median_b),
                        num(r.test.statistic),
                        num(r.test.p_value),
                        r.significant.to_string(),
                    ]
                })
                .collect(),
        )?;
    }
    if let StageOutcome::Ok(s1) = &report.stage1 {
        csv(
            "quality.csv",
            &[
                "condition", "baseline_mean", "target_mean", "delta_mean", "cohens_d", "welch_t", "df", "p",
                "p_bonferroni", "homogenized_dims", "verdict", "verdict_bonferroni",
            ],
            s1.iter()
                .map(|v| {
                    vec![
                        v.condition.to_string(),
                        num(v.quality.baseline_mean),
                        num(v.quality.target_mean),
                        num(v.quality.delta_mean),
                        num(v.quality.cohens_d),
                        num(v.quality.welch.statistic),
                        opt(v.quality.welch.df),
                        num(v.quality.welch.p_value),
                        num(v.quality.p_bonferroni),
                        v.homogenized_dims.iter().map(|d| d.key()).collect::<Vec<_>>().join(";"),
                        v.verdict.to_string(),
                        v.verdict_bonferroni.to_string(),
                    ]
                })
                .collect(),
        )?;
        csv(
            "variance_ratio.csv",
            &[
                "condition", "dimension", "vr", "ci_lower", "ci_upper", "bf_f", "bf_p", "bf_p_bonferroni",
                "homogenized", "homogenized_bonferroni",
            ],
            s1.iter()
                .flat_map(|v| {
                    v.dimensions.iter().map(|d| {
                        vec![
                            v.condition.to_string(),
                            d.dimension.key().into(),
                            num(d.vr),
                            num(d.vr_ci.lower),
                            num(d.vr_ci.upper),
                            num(d.brown_forsythe.statistic),
                            num(d.brown_forsythe.p_value),
                            num(d.p_bonferroni),
                            d.homogenized.to_string(),
                            d.homogenized_bonferroni.to_string(),
                        ]
                    })
                })
                .collect(),
        )?;
    }
    if let StageOutcome::Ok(m) = &report.stage2 {
        let mut header: Vec<String> = vec!["dimension".into()];
        header.extend(m.conditions.iter().map(|c| c.to_string()));
        header.extend(["mean".to_string(), "direction".to_string()]);
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        csv(
            "homogenization_index.csv",
            &header,
            m.rows
                .iter()
                .map(|r| {
                    let mut row = vec![r.dimension.key().to_string()];
                    row.extend(r.hi.iter().map(|x| num(*x)));
                    row.push(num(r.mean_hi));
                    row.push(r.direction.key().into());
                    row
                })
                .collect(),
        )?;
    }
    if let StageOutcome::Ok(c) = &report.stage3 {
        csv(
            "convergence.csv",
            &["condition", "n", "d_to_h", "d_to_a", "rr", "perpendicular_distance", "emergence_p", "n_permutations"],
            c.conditions
                .iter()
                .map(|x| {
                    vec![
                        x.condition.to_string(),
                        x.n.to_string(),
                        num(x.result.d_to_h),
                        num(x.result.d_to_a),
                        num(x.result.rr),
                        num(x.result.perpendicular_distance),
                        num(x.result.emergence_p),
                        x.result.n_permutations.to_string(),
                    ]
                })
                .collect(),
        )?;
    }
    if let StageOutcome::Ok(m) = &report.stage4 {
        csv(
            "moderation.csv",
            &["dimension", "levene_f", "levene_p", "kw_h", "kw_p", "variance_differs", "mean_differs", "reversal"],
            m.rows
                .iter()
                .map(|r| {
                    vec![
                        r.dimension.key().into(),
                        num(r.levene.statistic),
                        num(r.levene.p_value),
                        num(r.kruskal_wallis.statistic),
                        num(r.kruskal_wallis.p_value),
                        r.variance_differs.to_string(),
                        r.mean_differs.to_string(),
                        r.reversal.to_string(),
                    ]
                })
                .collect(),
        )?;
    }
    if let StageOutcome::Ok(ts) = &report.terciles {
        csv(
            "tercile_convergence.csv",
            &["target", "dimension", "tercile", "n", "baseline_mean", "post_mean", "change", "spread_before", "spread_after"],
            ts.iter()
                .flat_map(|t| {
                    t.terciles.iter().map(move |r| {
                        vec![
                            t.target.to_string(),
                            t.dimension.key().into(),
                            r.tercile.clone(),
                            r.n.to_string(),
                            num(r.baseline_mean),
                            num(r.post_mean),
                            num(r.change),
                            num(t.spread_before),
                            num(t.spread_after),
                        ]
                    })
                })
                .collect(),
        )?;
    }
    if let StageOutcome::Ok(ts) = &report.thresholds {
        csv(
            "threshold_convergence.csv",
            &["target", "dimension", "group", "cut", "n", "mean_before", "mean_after", "change"],
            ts.iter()
                .flat_map(|t| {
                    [("high", t.high_cut, &t.high), ("low", t.low_cut, &t.low)].map(|(g, cut, c)| {
                        vec![
                            t.target.to_string(),
                            t.dimension.key().into(),
                            g.into(),
                            num(cut),
                            c.n.to_string(),
                            opt(c.mean_before),
                            opt(c.mean_after),
                            opt(c.change),
                        ]
                    })
                })
                .collect(),
        )?;
    }
    if let StageOutcome::Ok(r) = &report.robustness {
        csv(
            "topic_robustness.csv",
            &["finding", "topic", "summary", "consistency"],
            r.findings
                .iter()
                .flat_map(|f| {
                    f.per_topic.iter().map(move |(t, s)| {
                        vec![f.finding.clone(), t.to_string(), s.clone(), f.consistency.key().into()]
                    })
                })
                .collect(),
        )?;
    }
    if let Some(p) = report.stage3.ok().and_then(|c| c.projection.as_ref()) {
        written.extend(write_projection(p, dir)?);
    }

    let json = serde_json::to_string_pretty(report).expect("report serializes");
    write_text(&dir.join("summary.json"), &(json + "\n"))?;
    write_text(&dir.join("summary.txt"), &render_summary(report))?;
    written.push("summary.json".into());
    written.push("summary.txt".into());
    Ok(written)
}

fn write_projection(p: &Projection, dir: &Path) -> Result<Vec<String>, PipelineError> {
    let json = serde_json::to_string_pretty(p).expect("projection serializes");
    write_text(&dir.join("projection.json"), &(json + "\n"))?;
    write_csv(
        dir,
        "projection_points.csv",
        &["essay_id", "condition", "x", "y"],
        p.points
            .iter()
            .map(|q| vec![q.essay_id.clone(), q.condition.to_string(), num(q.x), num(q.y)])
            .collect(),
    )?;
    write_csv(
        dir,
        "projection_conditions.csv",
        &["condition", "n", "centroid_x", "centroid_y", "ellipse_major", "ellipse_minor", "ellipse_angle"],
        p.conditions
            .iter()
            .map(|c| {
                vec![
                    c.condition.to_string(),
                    c.n.to_string(),
                    num(c.centroid_x),
                    num(c.centroid_y),
                    opt(c.ellipse.as_ref().map(|e| e.major)),
                    opt(c.ellipse.as_ref().map(|e| e.minor)),
                    opt(c.ellipse.as_ref().map(|e| e.angle)),
                ]
            })
            .collect(),
    )?;
    Ok(vec![
        "projection.json".into(),
        "projection_points.csv".into(),
        "projection_conditions.csv".into(),
    ])
}

fn p_fmt(p: f64) -> String {
    if p < 0.0001 {
        "< 0.0001".into()
    } else {
        format!("{p:.4}")
    }
}

fn status<T>(s: &StageOutcome<T>) -> Option<String> {
    match s {
        StageOutcome::Ok(_) => None,
        StageOutcome::Failed(f) => Some(format!("  FAILED: {}\n", f.message)),
        StageOutcome::Skipped(r) => Some(format!("  skipped: {r}\n")),
    }
}

/// Plain-text rendering of the main results.
pub fn render_summary(r: &AnalysisReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "homogen {} analysis summary", r.tool_version);
    let _ = writeln!(s, "features: {} essays, fingerprint {}", r.n_essays, r.fingerprint);
    let _ = writeln!(
        s,
        "seed {} | alpha {} | {} resamples | {} permutations | standardize {}",
        r.seeds.master,
        r.config.alpha,
        r.config.n_resamples,
        r.config.n_permutations,
        r.config.standardize.key()
    );
    let counts: Vec<String> = r
        .condition_counts
        .iter()
        .map(|(c, n)| format!("{}={n}", c.short()))
        .collect();
    let _ = writeln!(s, "counts: {}", counts.join(" "));
    if !r.low_n.is_empty() {
        let l: Vec<&str> = r.low_n.iter().map(|c| c.short()).collect();
        let _ = writeln!(s, "warning: low-n conditions: {}", l.join(", "));
    }

    let _ = writeln!(s, "\nEvaluator stability (CV threshold {})", r.stability.threshold);
    for d in &r.stability.dimensions {
        let _ = writeln!(
            s,
            "  {:<32} mean CV {:.3}  max CV {:.3}  {}",
            d.dimension.title(),
            d.mean_cv,
            d.max_cv,
            if d.pass { "pass" } else { "FAIL" }
        );
    }

    let _ = writeln!(s, "\nStage 1: quality-homogenization tradeoff");
    match &r.stage1 {
        StageOutcome::Ok(v) => {
            for t in v {
                let dims: Vec<&str> = t.homogenized_dims.iter().map(|d| d.title()).collect();
                let _ = writeln!(
                    s,
                    "  {:<11} quality {:.2} -> {:.2}  d = {:.3}  p {}  homogenized: {}  verdict {} (Bonferroni {})",
                    t.condition.short(),
                    t.quality.baseline_mean,
                    t.quality.target_mean,
                    t.quality.cohens_d,
                    p_fmt(t.quality.welch.p_value),
                    if dims.is_empty() { "none".into() } else { dims.join(", ") },
                    t.verdict,
                    t.verdict_bonferroni
                );
                for d in &t.dimensions {
                    let _ = writeln!(
                        s,
                        "      {:<32} VR {:.3} [{:.2}, {:.2}]  BF p {}",
                        d.dimension.title(),
                        d.vr,
                        d.vr_ci.lower,
                        d.vr_ci.upper,
                        p_fmt(d.brown_forsythe.p_value)
                    );
                }
            }
        }
        other => s.push_str(&status(other).unwrap()),
    }

    let _ = writeln!(s, "\nStage 2: homogenization index");
    match &r.stage2 {
        StageOutcome::Ok(m) => {
            let heads: Vec<String> = m.conditions.iter().map(|c| format!("{:>11}", c.short())).collect();
            let _ = writeln!(s, "  {:<32}{} {:>8}  direction", "", heads.join(""), "mean");
            for row in &m.rows {
                let cells: Vec<String> = row.hi.iter().map(|h| format!("{h:>+11.3}")).collect();
                let _ = writeln!(
                    s,
                    "  {:<32}{} {:>+8.3}  {}",
                    row.dimension.title(),
                    cells.join(""),
                    row.mean_hi,
                    row.direction.key()
                );
            }
        }
        other => s.push_str(&status(other).unwrap()),
    }

    let _ = writeln!(s, "\nStage 3: convergence");
    match &r.stage3 {
        StageOutcome::Ok(c) => {
            for x in &c.conditions {
                let _ = writeln!(
                    s,
                    "  {:<11} d(H) {:.3}  d(A) {:.3}  RR {:.3}  perp {:.3}  emergence p {}",
                    x.condition.short(),
                    x.result.d_to_h,
                    x.result.d_to_a,
                    x.result.rr,
                    x.result.perpendicular_distance,
                    p_fmt(x.result.emergence_p)
                );
            }
        }
        other => s.push_str(&status(other).unwrap()),
    }

    let _ = writeln!(s, "\nStage 4: prompt moderation");
    match &r.stage4 {
        StageOutcome::Ok(m) => {
            for row in &m.rows {
                let _ = writeln!(
                    s,
                    "  {:<32} Levene p {:<9} KW p {:<9} variance {}  mean {}{}",
                    row.dimension.title(),
                    p_fmt(row.levene.p_value),
                    p_fmt(row.kruskal_wallis.p_value),
                    if row.variance_differs { "differs" } else { "same" },
                    if row.mean_differs { "differs" } else { "same" },
                    if row.reversal { "  REVERSAL" } else { "" }
                );
            }
        }
        other => s.push_str(&status(other).unwrap()),
    }

    let _ = writeln!(s, "\nTercile convergence");
    match &r.terciles {
        StageOutcome::Ok(ts) => {
            for t in ts {
                let parts: Vec<String> = t
                    .terciles
                    .iter()
                    .map(|x| format!("{} {:.2}->{:.2}", x.tercile, x.baseline_mean, x.post_mean))
                    .collect();
                let _ = writeln!(
                    s,
                    "  {:<11} {}: {}  spread {:.2} -> {:.2}",
                    t.target.short(),
                    t.dimension.title(),
                    parts.join(", "),
                    t.spread_before,
                    t.spread_after
                );
            }
        }
        other => s.push_str(&status(other).unwrap()),
    }
    let _ = writeln!(s, "\nThreshold convergence");
    match &r.thresholds {
        StageOutcome::Ok(ts) => {
            for t in ts {
                let g = |c: &super::GroupChange| match (c.mean_before, c.mean_after) {
                    (Some(b), Some(a)) => format!("n={} {b:.2}->{a:.2}", c.n),
                    _ => "n=0".into(),
                };
                let _ = writeln!(
                    s,
                    "  {:<11} {}: high (>= {}) {}; low (<= {}) {}",
                    t.target.short(),
                    t.dimension.title(),
                    t.high_cut,
                    g(&t.high),
                    t.low_cut,
                    g(&t.low)
                );
            }
        }
        other => s.push_str(&status(other).unwrap()),
    }

    let _ = writeln!(s, "\nTopic bias (Mann-Whitney, {})", r.config.baseline.short());
    match &r.topic_bias {
        StageOutcome::Ok(tb) => {
            for row in &tb.rows {
                let _ = writeln!(
                    s,
                    "  {:<32} topics {} vs {}  p {}{}",
                    row.dimension.title(),
                    row.topic_a,
                    row.topic_b,
                    p_fmt(row.test.p_value),
                    if row.significant { "  *" } else { "" }
                );
            }
        }
        other => s.push_str(&status(other).unwrap()),
    }

    if !matches!(r.robustness, StageOutcome::Skipped(_)) {
        let _ = writeln!(s, "\nTopic robustness");
        match &r.robustness {
            StageOutcome::Ok(rb) => {
                for f in &rb.findings {
                    let parts: Vec<String> = f.per_topic.iter().map(|(t, x)| format!("topic {t}: {x}")).collect();
                    let _ = writeln!(s, "  {:<40} {}  [{}]", f.finding, parts.join(" | "), f.consistency.key());
                }
            }
            other => s.push_str(&status(other).unwrap()),
        }
    }
    s
}
