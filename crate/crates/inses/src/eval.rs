//! Scoring question-answering runs: exact match after answer normalization,
//! model-judged semantic equivalence, and model-judged evidence sufficiency,
//! aggregated overall and per source article.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{BackendError, ChatBackend};
use crate::navigator;
use crate::prompts;
use crate::router::RouteCause;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("duplicate dataset item id {0:?}")]
    DuplicateItem(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("article {0:?} has no scored answers")]
    EmptyArticle(String),
    #[error("the {0} metric needs a language-model backend")]
    JudgeRequiresBackend(&'static str),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type EvalResult<T> = Result<T, EvalError>;

/// Lowercases, strips ASCII punctuation characters, drops the articles
/// a/an/the, and collapses whitespace. The standard normalization for
/// short-answer exact match.
pub fn normalize_answer(text: &str) -> String {
    let lowered = text.to_lowercase();
    let no_punct: String = lowered.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    no_punct
        .split_whitespace()
        .filter(|t| !matches!(*t, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Exact match after normalization.
pub fn exact_match(prediction: &str, gold: &str) -> bool {
    normalize_answer(prediction) == normalize_answer(gold)
}

/// Byte-for-byte exact match.
pub fn exact_match_strict(prediction: &str, gold: &str) -> bool {
    prediction == gold
}

/// A semantic-equivalence judgment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub is_equivalent: bool,
    pub explanation: String,
}

/// The equivalence-judge prompt.
pub fn judge_equivalence_prompt(question: &str, ground_truth: &str, prediction: &str) -> String {
    prompts::fill(prompts::JUDGE_EQUIVALENCE, &[
        ("question", question),
        ("ground_truth", ground_truth),
        ("prediction", prediction),
    ])
}

/// The sufficiency-judge prompt.
pub fn judge_sufficiency_prompt(context: &str, correct_answer: &str) -> String {
    prompts::fill(prompts::JUDGE_SUFFICIENCY, &[
        ("context", context),
        ("correct_answer", correct_answer),
    ])
}

/// Parses an equivalence judgment. `is_equivalent` must be a boolean (or
/// the strings "true"/"false"); `explanation` defaults to empty.
pub fn parse_equivalence_response(raw: &str) -> Result<JudgeVerdict, String> {
    let Some(object) = navigator::first_json_object(raw) else {
        return Err(raw.to_owned());
    };
    let is_equivalent = match object.get("is_equivalent") {
        Some(serde_json::Value::Bool(b)) => *b,
        Some(serde_json::Value::String(s)) if s.trim().eq_ignore_ascii_case("true") => true,
        Some(serde_json::Value::String(s)) if s.trim().eq_ignore_ascii_case("false") => false,
        _ => return Err(raw.to_owned()),
    };
    let explanation = object
        .get("explanation")
        .and_then(serde_json::Value::as_str)
        .unwrap_or_default()
        .to_owned();
    Ok(JudgeVerdict { is_equivalent, explanation })
}

/// Parses a sufficiency judgment: the response must be a bare "1" or "0"
/// (surrounding whitespace tolerated).
pub fn parse_sufficiency_response(raw: &str) -> Result<bool, String> {
    match raw.trim() {
        "1" => Ok(true),
        "0" => Ok(false),
        _ => Err(raw.to_owned()),
    }
}

/// Judges whether `prediction` answers `question` the same way
/// `ground_truth` does. An unparseable response is retried once with a
/// format reminder and then fails closed: the verdict is "not equivalent".
pub fn judge_equivalence(
    question: &str,
    ground_truth: &str,
    prediction: &str,
    backend: &dyn ChatBackend,
) -> EvalResult<JudgeVerdict> {
    let prompt = judge_equivalence_prompt(question, ground_truth, prediction);
    let response = backend.complete(&prompt)?;
    if let Ok(verdict) = parse_equivalence_response(&response) {
        return Ok(verdict);
    }
    log::warn!("equivalence judgment unparseable, retrying once");
    let retry_prompt = format!("{prompt}\n\nRespond with only the JSON object.");
    let retry = backend.complete(&retry_prompt)?;
    Ok(parse_equivalence_response(&retry).unwrap_or_else(|raw| {
        log::warn!("equivalence judgment still unparseable, scoring as not equivalent");
        JudgeVerdict {
            is_equivalent: false,
            explanation: format!("unparseable judge response: {raw}"),
        }
    }))
}

/// Judges whether `context` contains the information in `correct_answer`.
/// An unparseable response is retried once and then fails closed to false.
pub fn judge_sufficiency(
    context: &str,
    correct_answer: &str,
    backend: &dyn ChatBackend,
) -> EvalResult<bool> {
    let prompt = judge_sufficiency_prompt(context, correct_answer);
    let response = backend.complete(&prompt)?;
    if let Ok(verdict) = parse_sufficiency_response(&response) {
        return Ok(verdict);
    }
    log::warn!("sufficiency judgment unparseable, retrying once");
    let retry_prompt = format!("{prompt}\n\nRespond with only 1 or 0.");
    let retry = backend.complete(&retry_prompt)?;
    Ok(parse_sufficiency_response(&retry).unwrap_or_else(|_| {
        log::warn!("sufficiency judgment still unparseable, scoring as insufficient");
        false
    }))
}

/// One question of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetItem {
    pub id: String,
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub article_id: Option<String>,
}

/// Reads a JSONL dataset, skipping blank lines and rejecting duplicate ids.
pub fn load_dataset<R: BufRead>(reader: R) -> EvalResult<Vec<DatasetItem>> {
    let mut items = Vec::new();
    let mut seen = BTreeSet::new();
    for (offset, line) in reader.lines().enumerate() {
        let line_no = offset + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item: DatasetItem = serde_json::from_str(&line)
            .map_err(|e| EvalError::MalformedRecord { line: line_no, message: e.to_string() })?;
        if !seen.insert(item.id.clone()) {
            return Err(EvalError::DuplicateItem(item.id));
        }
        items.push(item);
    }
    Ok(items)
}

/// What to score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    ExactMatch,
    Judge,
    Sufficiency,
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "em" => Ok(Metric::ExactMatch),
            "judge" => Ok(Metric::Judge),
            "sufficiency" => Ok(Metric::Sufficiency),
            other => Err(format!("unknown metric {other:?} (expected em, judge, or sufficiency)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub metrics: BTreeSet<Metric>,
    /// Score exact match on raw bytes instead of normalized text.
    pub em_strict: bool,
    /// Pause after each judge call, for rate-limited backends.
    pub judge_delay: Option<Duration>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            metrics: [Metric::ExactMatch].into_iter().collect(),
            em_strict: false,
            judge_delay: None,
        }
    }
}

/// A pipeline's response to one dataset question.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineAnswer {
    pub answer: String,
    /// Supporting context, judged by the sufficiency metric when present.
    pub context: Option<String>,
    /// Routing cause, for router pipelines.
    pub route: Option<RouteCause>,
}

/// Answers dataset questions. Per-question failures are reported as values
/// so one bad question cannot sink a whole run.
pub trait QuestionPipeline {
    fn answer(&mut self, item: &DatasetItem) -> Result<PipelineAnswer, String>;
}

/// Per-question scoring outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub question: String,
    pub gold: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub article_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_match: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge: Option<JudgeVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sufficiency: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route_cause: Option<RouteCause>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleScore {
    pub article_id: String,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// Accuracy over one article's correctness flags; empty input is an error.
pub fn score_article(article_id: &str, outcomes: &[bool]) -> EvalResult<ArticleScore> {
    if outcomes.is_empty() {
        return Err(EvalError::EmptyArticle(article_id.to_owned()));
    }
    let correct = outcomes.iter().filter(|b| **b).count();
    Ok(ArticleScore {
        article_id: article_id.to_owned(),
        correct,
        total: outcomes.len(),
        accuracy: correct as f64 / outcomes.len() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub total: usize,
    /// Questions the pipeline answered without error; metric means are
    /// taken over these.
    pub answered: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_match_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sufficiency_rate: Option<f64>,
    pub per_article: Vec<ArticleScore>,
    /// Echo of the configuration the run used.
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: Vec<EvalRecord>,
    pub summary: EvalSummary,
}

impl EvalReport {
    /// One JSON line per record, then a closing `{"summary": ...}` line.
    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut writer, record)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            writer.write_all(b"\n")?;
        }
        let closing = serde_json::json!({ "summary": self.summary });
        serde_json::to_writer(&mut writer, &closing)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        writer.write_all(b"\n")?;
        Ok(())
    }
}

fn mean(flags: &[bool]) -> Option<f64> {
    if flags.is_empty() {
        None
    } else {
        Some(flags.iter().filter(|b| **b).count() as f64 / flags.len() as f64)
    }
}

/// Runs `pipeline` over `items` and scores the requested metrics.
///
/// Judge-backed metrics require `judge_backend`. Per-article accuracy uses
/// the judge verdict when that metric is enabled and exact match otherwise.
pub fn run_eval(
    items: &[DatasetItem],
    pipeline: &mut dyn QuestionPipeline,
    options: &EvalOptions,
    judge_backend: Option<&dyn ChatBackend>,
    config: serde_json::Value,
) -> EvalResult<EvalReport> {
    if items.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let wants_judge = options.metrics.contains(&Metric::Judge);
    let wants_sufficiency = options.metrics.contains(&Metric::Sufficiency);
    if wants_judge && judge_backend.is_none() {
        return Err(EvalError::JudgeRequiresBackend("judge"));
    }
    if wants_sufficiency && judge_backend.is_none() {
        return Err(EvalError::JudgeRequiresBackend("sufficiency"));
    }

    let pause = |did_call: bool| {
        if did_call {
            if let Some(delay) = options.judge_delay {
                std::thread::sleep(delay);
            }
        }
    };

    let mut records = Vec::with_capacity(items.len());
    for item in items {
        let mut record = EvalRecord {
            id: item.id.clone(),
            question: item.question.clone(),
            gold: item.answer.clone(),
            article_id: item.article_id.clone(),
            prediction: None,
            exact_match: None,
            judge: None,
            sufficiency: None,
            route_cause: None,
            error: None,
        };
        match pipeline.answer(item) {
            Err(message) => {
                log::warn!("pipeline failed on {}: {message}", item.id);
                record.error = Some(message);
            }
            Ok(answer) => {
                record.exact_match = Some(if options.em_strict {
                    exact_match_strict(&answer.answer, &item.answer)
                } else {
                    exact_match(&answer.answer, &item.answer)
                });
                if wants_judge {
                    let backend = judge_backend.expect("checked above");
                    let verdict =
                        judge_equivalence(&item.question, &item.answer, &answer.answer, backend)?;
                    record.judge = Some(verdict);
                    pause(true);
                }
                if wants_sufficiency {
                    if let Some(context) = &answer.context {
                        let backend = judge_backend.expect("checked above");
                        record.sufficiency =
                            Some(judge_sufficiency(context, &item.answer, backend)?);
                        pause(true);
                    }
                }
                record.route_cause = answer.route;
                record.prediction = Some(answer.answer);
            }
        }
        records.push(record);
    }

    let answered: Vec<&EvalRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    let em_flags: Vec<bool> = answered.iter().filter_map(|r| r.exact_match).collect();
    let judge_flags: Vec<bool> =
        answered.iter().filter_map(|r| r.judge.as_ref().map(|j| j.is_equivalent)).collect();
    let sufficiency_flags: Vec<bool> =
        answered.iter().filter_map(|r| r.sufficiency).collect();

    let mut by_article: BTreeMap<String, Vec<bool>> = BTreeMap::new();
    for record in &answered {
        let Some(article) = &record.article_id else {
            continue;
        };
        let correct = if wants_judge {
            record.judge.as_ref().map(|j| j.is_equivalent)
        } else {
            record.exact_match
        };
        if let Some(correct) = correct {
            by_article.entry(article.clone()).or_default().push(correct);
        }
    }
    let mut per_article = Vec::new();
    for (article_id, outcomes) in &by_article {
        per_article.push(score_article(article_id, outcomes)?);
    }

    let summary = EvalSummary {
        total: records.len(),
        answered: answered.len(),
        exact_match_accuracy: if options.metrics.contains(&Metric::ExactMatch) {
            mean(&em_flags)
        } else {
            None
        },
        judge_accuracy: if wants_judge { mean(&judge_flags) } else { None },
        sufficiency_rate: if wants_sufficiency { mean(&sufficiency_flags) } else { None },
        per_article,
        config,
    };
    Ok(EvalReport { records, summary })
}
