use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DimensionScores, EvalError};
use crate::corpus::{ConditionLabel, CorpusSet};
use crate::Dimension;

/// One evaluation of one essay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRun {
    pub essay_id: String,
    pub run_index: u32,
    pub scores: DimensionScores,
}

/// Per-essay mean and coefficient of variation across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssayAggregate {
    pub essay_id: String,
    pub mean: DimensionScores,
    pub cv: DimensionScores,
    pub run_count: usize,
}

/// Averages repeated runs per essay.
///
/// CV is the population standard deviation across runs divided by the mean.
/// Runs are combined in `run_index` order, so the result does not depend on
/// the order runs arrive in.
pub fn aggregate_runs(runs: &[ScoreRun]) -> Result<Vec<EssayAggregate>, EvalError> {
    let mut by_essay: BTreeMap<&str, Vec<&ScoreRun>> = BTreeMap::new();
    for r in runs {
        by_essay.entry(&r.essay_id).or_default().push(r);
    }
    let mut out = Vec::with_capacity(by_essay.len());
    for (essay_id, mut list) in by_essay {
        list.sort_by_key(|r| r.run_index);
        if let Some(w) = list.windows(2).find(|w| w[0].run_index == w[1].run_index) {
            return Err(EvalError::DuplicateRun {
                essay_id: essay_id.to_string(),
                run_index: w[0].run_index,
            });
        }
        let n = list.len() as f64;
        let mut mean = DimensionScores::zeros();
        let mut cv = DimensionScores::zeros();
        for dim in Dimension::ALL {
            let m = list.iter().map(|r| r.scores.get(dim)).sum::<f64>() / n;
            let var = list
                .iter()
                .map(|r| (r.scores.get(dim) - m).powi(2))
                .sum::<f64>()
                / n;
            mean.set(dim, m);
            cv.set(dim, if m > 0.0 { var.sqrt() / m } else { 0.0 });
        }
        out.push(EssayAggregate {
            essay_id: essay_id.to_string(),
            mean,
            cv,
            run_count: list.len(),
        });
    }
    Ok(out)
}

/// One line of the feature file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub essay_id: String,
    #[serde(default)]
    pub base_id: String,
    pub condition: ConditionLabel,
    pub topic_id: u32,
    pub mean: DimensionScores,
    pub cv: DimensionScores,
    pub run_count: usize,
}

/// Aggregated scores of every essay, kept sorted by `essay_id`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new(mut rows: Vec<FeatureRow>) -> Self {
        for r in &mut rows {
            if r.base_id.is_empty() {
                r.base_id = r.essay_id.clone();
            }
        }
        rows.sort_by(|a, b| a.essay_id.cmp(&b.essay_id));
        FeatureTable { rows }
    }

    /// Attaches corpus metadata to aggregates. Every corpus essay must have
    /// at least one run.
    pub fn join(corpus: &CorpusSet, aggregates: Vec<EssayAggregate>) -> Result<Self, EvalError> {
        let (table, missing) = Self::join_partial(corpus, aggregates);
        if !missing.is_empty() {
            return Err(EvalError::MissingRuns(missing));
        }
        Ok(table)
    }

    /// Like [`join`](Self::join) but leaves out essays without runs and
    /// returns their ids.
    pub fn join_partial(corpus: &CorpusSet, aggregates: Vec<EssayAggregate>) -> (Self, Vec<String>) {
        let mut by_id: BTreeMap<String, EssayAggregate> = aggregates
            .into_iter()
            .map(|a| (a.essay_id.clone(), a))
            .collect();
        let mut rows = Vec::with_capacity(corpus.len());
        let mut missing = Vec::new();
        for r in corpus.records() {
            match by_id.remove(&r.essay_id) {
                Some(a) => rows.push(FeatureRow {
                    essay_id: r.essay_id.clone(),
                    base_id: r.base_id.clone(),
                    condition: r.condition,
                    topic_id: r.topic_id,
                    mean: a.mean,
                    cv: a.cv,
                    run_count: a.run_count,
                }),
                None => missing.push(r.essay_id.clone()),
            }
        }
        (FeatureTable::new(rows), missing)
    }

    pub fn rows(&self) -> &[FeatureRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn conditions(&self) -> BTreeSet<ConditionLabel> {
        self.rows.iter().map(|r| r.condition).collect()
    }

    pub fn topics(&self) -> BTreeSet<u32> {
        self.rows.iter().map(|r| r.topic_id).collect()
    }

    pub fn count(&self, condition: ConditionLabel) -> usize {
        self.rows.iter().filter(|r| r.condition == condition).count()
    }

    pub fn by_condition(&self, condition: ConditionLabel) -> impl Iterator<Item = &FeatureRow> {
        self.rows.iter().filter(move |r| r.condition == condition)
    }

    /// Mean scores on `dim` for one condition, in essay-id order.
    pub fn values(&self, condition: ConditionLabel, dim: Dimension) -> Vec<f64> {
        self.by_condition(condition).map(|r| r.mean.get(dim)).collect()
    }

    pub fn restrict_topic(&self, topic: u32) -> FeatureTable {
        FeatureTable {
            rows: self.rows.iter().filter(|r| r.topic_id == topic).cloned().collect(),
        }
    }

    pub fn get(&self, essay_id: &str) -> Option<&FeatureRow> {
        self.rows
            .binary_search_by(|r| r.essay_id.as_str().cmp(essay_id))
            .ok()
            .map(|i| &self.rows[i])
    }

    pub fn read_jsonl(path: &Path) -> Result<Self, EvalError> {
        let file = File::open(path).map_err(|e| EvalError::io(path, e))?;
        let mut rows = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| EvalError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let row: FeatureRow = serde_json::from_str(&line).map_err(|e| EvalError::Malformed {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
            rows.push(row);
        }
        Ok(FeatureTable::new(rows))
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), EvalError> {
        let file = File::create(path).map_err(|e| EvalError::io(path, e))?;
        let mut w = BufWriter::new(file);
        for row in &self.rows {
            let line = serde_json::to_string(row).expect("feature rows serialize");
            writeln!(w, "{line}").map_err(|e| EvalError::io(path, e))?;
        }
        w.flush().map_err(|e| EvalError::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionStability {
    pub dimension: Dimension,
    pub mean_cv: f64,
    pub max_cv: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnstableEssay {
    pub essay_id: String,
    pub dimension: Dimension,
    pub cv: f64,
}

/// Run-to-run stability of the evaluator. Essays over the threshold are
/// listed but kept in the analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub threshold: f64,
    pub essays: usize,
    pub single_run_essays: usize,
    pub dimensions: Vec<DimensionStability>,
    pub unstable: Vec<UnstableEssay>,
    pub all_pass: bool,
}

pub fn validate_stability(table: &FeatureTable, threshold: f64) -> StabilityReport {
    let n = table.len().max(1) as f64;
    let dimensions: Vec<DimensionStability> = Dimension::ALL
        .into_iter()
        .map(|dim| {
            let cvs = table.rows().iter().map(|r| r.cv.get(dim));
            let mean_cv = cvs.clone().sum::<f64>() / n;
            let max_cv = cvs.fold(0.0, f64::max);
            DimensionStability {
                dimension: dim,
                mean_cv,
                max_cv,
                pass: mean_cv < threshold,
            }
        })
        .collect();
    let unstable = table
        .rows()
        .iter()
        .flat_map(|r| {
            Dimension::ALL.into_iter().filter_map(move |dim| {
                let cv = r.cv.get(dim);
                (cv >= threshold).then(|| UnstableEssay {
                    essay_id: r.essay_id.clone(),
                    dimension: dim,
                    cv,
                })
            })
        })
        .collect();
    StabilityReport {
        threshold,
        essays: table.len(),
        single_run_essays: table.rows().iter().filter(|r| r.run_count == 1).count(),
        all_pass: dimensions.iter().all(|d| d.pass),
        dimensions,
        unstable,
    }
}
