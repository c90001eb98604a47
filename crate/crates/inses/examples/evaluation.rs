//! Scoring a pipeline over a dataset: normalized exact match, per-article
//! accuracy, and the JSONL report format. The pipeline here is a lookup
//! table so the scores are fully predictable.
//!
//!     cargo run --example evaluation

use std::collections::BTreeMap;
use std::error::Error;

use inses::eval::{
    load_dataset, normalize_answer, run_eval, DatasetItem, EvalOptions, PipelineAnswer,
    QuestionPipeline,
};

const DATASET: &str = r#"
{"id": "q1", "question": "What is the capital of France?", "answer": "Paris", "article_id": "geography"}
{"id": "q2", "question": "Which river flows through Paris?", "answer": "The Seine", "article_id": "geography"}
{"id": "q3", "question": "Who wrote Hamlet?", "answer": "Shakespeare", "article_id": "literature"}
"#;

/// Answers from a fixed table; unknown questions are reported as failures.
struct TablePipeline(BTreeMap<&'static str, &'static str>);

impl QuestionPipeline for TablePipeline {
    fn answer(&mut self, item: &DatasetItem) -> Result<PipelineAnswer, String> {
        match self.0.get(item.id.as_str()) {
            Some(answer) => Ok(PipelineAnswer {
                answer: (*answer).to_owned(),
                context: None,
                route: None,
            }),
            None => Err("no answer recorded".to_owned()),
        }
    }
}

fn main() -> Result<(), Box<dyn Error>> {
    let items = load_dataset(DATASET.trim().as_bytes())?;

    // Exact match normalizes case, articles, and punctuation, so
    // "the seine." still counts against gold "The Seine".
    println!(
        "normalize_answer(\"The Seine.\") = {:?}\n",
        normalize_answer("The Seine.")
    );

    let mut pipeline = TablePipeline(BTreeMap::from([
        ("q1", "paris"),
        ("q2", "the seine."),
        ("q3", "Christopher Marlowe"),
    ]));
    let config = serde_json::json!({ "pipeline": "table" });
    let report = run_eval(&items, &mut pipeline, &EvalOptions::default(), None, config)?;

    for record in &report.records {
        println!(
            "{}: gold {:?}, predicted {:?}, exact match {}",
            record.id,
            record.gold,
            record.prediction.as_deref().unwrap_or("(error)"),
            record.exact_match.map(|b| b.to_string()).unwrap_or_default()
        );
    }

    let summary = &report.summary;
    println!(
        "\n{} of {} answered, exact-match accuracy {:.3}",
        summary.answered,
        summary.total,
        summary.exact_match_accuracy.unwrap_or(0.0)
    );
    for article in &summary.per_article {
        println!(
            "  article {:?}: {}/{} correct",
            article.article_id, article.correct, article.total
        );
    }

    // The report serializes as one JSON line per record plus a summary
    // line, the same format the command-line `eval` writes.
    let mut jsonl = Vec::new();
    report.write_jsonl(&mut jsonl)?;
    println!("\nreport as JSONL:\n{}", String::from_utf8(jsonl)?);
    Ok(())
}
