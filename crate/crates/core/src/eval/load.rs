//! Benchmark ingestion from local JSONL exports in each dataset's published
//! column schema. Items come back in file order, which is the dataset order
//! the exemplar split relies on.
//!
//! | benchmark      | columns                                                        |
//! |----------------|----------------------------------------------------------------|
//! | belebele       | `flores_passage`, `question`, `mc_answer1..4`, `correct_answer_num` |
//! | global_mmlu    | `sample_id`, `question`, `option_a..d`, `answer`               |
//! | sib200         | `index_id`, `text`, `category`                                 |
//! | flores_*       | `id`, `sentence_eng_Latn`, `sentence_{code}`                   |

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde_json::{Map, Value};

use super::{Benchmark, Choice, EvalError, EvalItem, Gold};

pub const SIB200_LABELS: [&str; 7] =
    ["science/technology", "travel", "politics", "sports", "health", "entertainment", "geography"];

const LETTERS: [&str; 4] = ["A", "B", "C", "D"];

type Row = Map<String, Value>;

fn field(row: &Row, key: &str, line: usize) -> Result<String, EvalError> {
    match row.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        _ => Err(EvalError::Schema { line, message: format!("missing column {key:?}") }),
    }
}

fn belebele(row: &Row, line: usize) -> Result<EvalItem, EvalError> {
    let choices = (1..=4)
        .map(|i| Ok(Choice { label: LETTERS[i - 1].into(), text: field(row, &format!("mc_answer{i}"), line)? }))
        .collect::<Result<Vec<_>, EvalError>>()?;
    let num = field(row, "correct_answer_num", line)?;
    let gold = match num.trim().parse::<usize>() {
        Ok(n @ 1..=4) => LETTERS[n - 1],
        _ => return Err(EvalError::Schema { line, message: format!("correct_answer_num {num:?} not in 1..4") }),
    };
    let item_id = match (row.get("link"), row.get("question_number")) {
        (Some(Value::String(link)), Some(q)) => format!("{link}#{q}"),
        _ => format!("belebele-{line}"),
    };
    Ok(EvalItem {
        item_id,
        context: Some(field(row, "flores_passage", line)?),
        question_or_source: field(row, "question", line)?,
        choices: Some(choices),
        gold: Gold::Label(gold.into()),
    })
}

fn global_mmlu(row: &Row, line: usize) -> Result<EvalItem, EvalError> {
    let choices = ["a", "b", "c", "d"]
        .iter()
        .zip(LETTERS)
        .map(|(k, l)| Ok(Choice { label: l.into(), text: field(row, &format!("option_{k}"), line)? }))
        .collect::<Result<Vec<_>, EvalError>>()?;
    let answer = field(row, "answer", line)?.trim().to_uppercase();
    if !LETTERS.contains(&answer.as_str()) {
        return Err(EvalError::Schema { line, message: format!("answer {answer:?} not in A..D") });
    }
    Ok(EvalItem {
        item_id: field(row, "sample_id", line)?,
        context: None,
        question_or_source: field(row, "question", line)?,
        choices: Some(choices),
        gold: Gold::Label(answer),
    })
}

fn sib200(row: &Row, line: usize) -> Result<EvalItem, EvalError> {
    let category = field(row, "category", line)?;
    if !SIB200_LABELS.contains(&category.as_str()) {
        return Err(EvalError::Schema { line, message: format!("unknown category {category:?}") });
    }
    Ok(EvalItem {
        item_id: field(row, "index_id", line)?,
        context: None,
        question_or_source: field(row, "text", line)?,
        choices: Some(SIB200_LABELS.iter().map(|l| Choice { label: l.to_string(), text: l.to_string() }).collect()),
        gold: Gold::Label(category),
    })
}

fn flores(row: &Row, line: usize, code: &str, into_english: bool) -> Result<EvalItem, EvalError> {
    let english = field(row, "sentence_eng_Latn", line)?;
    let other = field(row, &format!("sentence_{code}"), line)?;
    let (source, reference) = if into_english { (other, english) } else { (english, other) };
    Ok(EvalItem {
        item_id: field(row, "id", line)?,
        context: None,
        question_or_source: source,
        choices: None,
        gold: Gold::Reference(reference),
    })
}

pub fn load_benchmark(benchmark: Benchmark, language_code: &str, path: &Path) -> Result<Vec<EvalItem>, EvalError> {
    let file = File::open(path).map_err(|e| EvalError::DataUnavailable(format!("{}: {e}", path.display())))?;
    let mut items = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| EvalError::DataUnavailable(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row =
            serde_json::from_str(&line).map_err(|e| EvalError::Schema { line: line_no, message: e.to_string() })?;
        let item = match benchmark {
            Benchmark::Belebele => belebele(&row, line_no)?,
            Benchmark::GlobalMmlu => global_mmlu(&row, line_no)?,
            Benchmark::Sib200 => sib200(&row, line_no)?,
            Benchmark::FloresXxEn => flores(&row, line_no, language_code, true)?,
            Benchmark::FloresEnXx => flores(&row, line_no, language_code, false)?,
        };
        items.push(item);
    }
    if items.is_empty() {
        return Err(EvalError::DataUnavailable(format!("{} has no rows", path.display())));
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::TaskKind;
    use std::io::Write;

    fn write(lines: &[Value]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn sib200_row_is_classification_over_fixed_labels() {
        let f = write(&[serde_json::json!({"index_id": 7, "text": "Sugeng enjing", "category": "travel"})]);
        let items = load_benchmark(Benchmark::Sib200, "jav_Latn", f.path()).unwrap();
        assert_eq!(Benchmark::Sib200.task_kind(), TaskKind::Classification);
        let labels: Vec<_> = items[0].choices.as_ref().unwrap().iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, SIB200_LABELS);
        assert_eq!(items[0].gold, Gold::Label("travel".into()));
        assert_eq!(items[0].item_id, "7");
        items[0].validate(TaskKind::Classification).unwrap();
    }

    #[test]
    fn flores_direction() {
        let row = serde_json::json!({"id": 1, "sentence_eng_Latn": "Hello", "sentence_jav_Latn": "Halo"});
        let f = write(&[row]);
        let en_xx = load_benchmark(Benchmark::FloresEnXx, "jav_Latn", f.path()).unwrap();
        assert_eq!(en_xx[0].question_or_source, "Hello");
        assert_eq!(en_xx[0].gold, Gold::Reference("Halo".into()));
        let xx_en = load_benchmark(Benchmark::FloresXxEn, "jav_Latn", f.path()).unwrap();
        assert_eq!(xx_en[0].question_or_source, "Halo");
        assert_eq!(xx_en[0].gold, Gold::Reference("Hello".into()));
    }

    #[test]
    fn belebele_and_mmlu_schemas() {
        let b = write(&[serde_json::json!({
            "link": "x", "question_number": 2, "flores_passage": "P", "question": "Q",
            "mc_answer1": "a", "mc_answer2": "b", "mc_answer3": "c", "mc_answer4": "d", "correct_answer_num": "3"
        })]);
        let items = load_benchmark(Benchmark::Belebele, "jav_Latn", b.path()).unwrap();
        assert_eq!(items[0].gold, Gold::Label("C".into()));
        assert_eq!(items[0].item_id, "x#2");
        let m = write(&[serde_json::json!({
            "sample_id": "s1", "question": "Q", "option_a": "a", "option_b": "b",
            "option_c": "c", "option_d": "d", "answer": "D"
        })]);
        let items = load_benchmark(Benchmark::GlobalMmlu, "jv", m.path()).unwrap();
        assert_eq!(items[0].gold, Gold::Label("D".into()));
        items[0].validate(TaskKind::MultipleChoice).unwrap();
    }

    #[test]
    fn empty_or_missing_file_is_unavailable() {
        let f = write(&[]);
        assert!(matches!(load_benchmark(Benchmark::Sib200, "x", f.path()), Err(EvalError::DataUnavailable(_))));
        let missing = Path::new("/nonexistent/sib.jsonl");
        assert!(matches!(load_benchmark(Benchmark::Sib200, "x", missing), Err(EvalError::DataUnavailable(_))));
    }

    #[test]
    fn missing_column_is_schema_error() {
        let f = write(&[serde_json::json!({"index_id": 1, "text": "t"})]);
        assert!(matches!(load_benchmark(Benchmark::Sib200, "x", f.path()), Err(EvalError::Schema { line: 1, .. })));
    }
}
