//! Paraphrase and human-judgment dataset loaders.
//!
//! A dataset is described by a small TOML schema file:
//!
//! ```toml
//! name = "paraphraser-ru"
//! languages = ["ru"]          # one tag for both sides, or [lang_a, lang_b]
//! path = "ru_test.tsv"        # relative to the schema file
//! format = "tsv"              # or "jsonl"
//! split = "test"
//! exclude_ids = []            # ids dropped before binarization
//! skip_empty = false          # drop (and count) rows with an empty side
//!
//! [columns]
//! text_a = "text_1"
//! text_b = "text_2"
//! label = "class"
//! id = "id"                   # optional
//!
//! [binarization]
//! kind = "merge_classes"      # or "threshold_geq" with `threshold = 4`
//! positive = ["precise", "near"]
//! negative = ["none"]         # optional; when given, other labels are errors
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::d2t::JudgedSample;
use crate::error::{Error, Result};
use crate::measures::SegmentPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    Tsv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub text_a: String,
    pub text_b: String,
    pub label: String,
    #[serde(default)]
    pub id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BinarizationRule {
    /// Numeric labels `>= threshold` are positive.
    ThresholdGeq { threshold: f64 },
    /// Labels in `positive` are positive; if `negative` is non-empty, the two
    /// sets together are the whole label domain.
    MergeClasses {
        positive: Vec<String>,
        #[serde(default)]
        negative: Vec<String>,
    },
}

impl BinarizationRule {
    pub fn apply(&self, raw: &str) -> std::result::Result<bool, String> {
        let raw = raw.trim();
        match self {
            BinarizationRule::ThresholdGeq { threshold } => raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(|v| v >= *threshold)
                .ok_or_else(|| format!("label {raw:?} is not numeric")),
            BinarizationRule::MergeClasses { positive, negative } => {
                if positive.iter().any(|p| p == raw) {
                    Ok(true)
                } else if negative.is_empty() || negative.iter().any(|n| n == raw) {
                    Ok(false)
                } else {
                    Err(format!("label {raw:?} is outside the declared classes"))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub languages: Vec<String>,
    pub path: PathBuf,
    pub format: DatasetFormat,
    pub split: Split,
    pub columns: ColumnMap,
    pub binarization: BinarizationRule,
    #[serde(default)]
    pub exclude_ids: Vec<String>,
    #[serde(default)]
    pub skip_empty: bool,
}

impl DatasetSpec {
    /// Reads a schema file; a relative `path` is resolved against the
    /// schema's directory.
    pub fn from_file(schema: &Path) -> Result<Self> {
        let text = fs::read_to_string(schema)
            .map_err(|e| Error::Config(format!("cannot read schema {}: {e}", schema.display())))?;
        let mut spec: DatasetSpec =
            toml::from_str(&text).map_err(|e| Error::Config(format!("invalid schema {}: {e}", schema.display())))?;
        if spec.path.is_relative() {
            if let Some(dir) = schema.parent() {
                spec.path = dir.join(&spec.path);
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.languages.is_empty() || self.languages.len() > 2 {
            return Err(Error::Config(format!(
                "dataset {} must declare one or two languages",
                self.name
            )));
        }
        Ok(())
    }

    fn lang_a(&self) -> &str {
        &self.languages[0]
    }

    fn lang_b(&self) -> &str {
        self.languages.last().expect("validated")
    }
}

/// Counts gathered while loading a dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub excluded: usize,
    pub dropped_empty: usize,
    pub positives: usize,
    pub negatives: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub name: String,
    pub split: Split,
    pub pairs: Vec<SegmentPair>,
    pub report: LoadReport,
}

pub fn load_pairs(spec: &DatasetSpec) -> Result<LoadedDataset> {
    spec.validate()?;
    let file =
        fs::File::open(&spec.path).map_err(|e| Error::Data(format!("cannot open {}: {e}", spec.path.display())))?;
    let origin = spec.path.display().to_string();
    match spec.format {
        DatasetFormat::Tsv => load_tsv(spec, file, &origin),
        DatasetFormat::Jsonl => load_jsonl(spec, BufReader::new(file), &origin),
    }
}

/// A raw row before binarization; `line` is 1-based in the source file.
struct RawRow {
    line: usize,
    id: Option<String>,
    text_a: String,
    text_b: String,
    label: String,
}

fn finish(spec: &DatasetSpec, rows: Vec<RawRow>, origin: &str) -> Result<LoadedDataset> {
    let mut report = LoadReport::default();
    let mut pairs = Vec::with_capacity(rows.len());
    for row in rows {
        report.rows_read += 1;
        let id = row.id.clone().unwrap_or_else(|| format!("{}-{}", spec.name, row.line));
        if spec.exclude_ids.contains(&id) {
            report.excluded += 1;
            continue;
        }
        let row_err = |message: String| Error::Row {
            path: origin.to_string(),
            line: row.line,
            message,
        };
        if row.text_a.trim().is_empty() || row.text_b.trim().is_empty() {
            if spec.skip_empty {
                report.dropped_empty += 1;
                continue;
            }
            return Err(row_err("empty text".into()));
        }
        let label = spec.binarization.apply(&row.label).map_err(row_err)?;
        if label {
            report.positives += 1;
        } else {
            report.negatives += 1;
        }
        pairs.push(SegmentPair {
            id: Some(id),
            text_a: row.text_a,
            text_b: row.text_b,
            lang_a: Some(spec.lang_a().to_string()),
            lang_b: Some(spec.lang_b().to_string()),
            label: Some(label),
        });
    }
    Ok(LoadedDataset {
        name: spec.name.clone(),
        split: spec.split,
        pairs,
        report,
    })
}

fn load_tsv(spec: &DatasetSpec, reader: impl Read, origin: &str) -> Result<LoadedDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Data(format!("{origin}: cannot read header: {e}")))?
        .clone();
    let column = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Row {
            path: origin.to_string(),
            line: 1,
            message: format!("missing column {name:?}"),
        })
    };
    let ca = column(&spec.columns.text_a)?;
    let cb = column(&spec.columns.text_b)?;
    let cl = column(&spec.columns.label)?;
    let cid = spec.columns.id.as_deref().map(column).transpose()?;
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Row {
            path: origin.to_string(),
            line,
            message: e.to_string(),
        })?;
        let field = |c: usize| record.get(c).unwrap_or("").to_string();
        rows.push(RawRow {
            line,
            id: cid.map(field),
            text_a: field(ca),
            text_b: field(cb),
            label: field(cl),
        });
    }
    finish(spec, rows, origin)
}

fn json_field(obj: &serde_json::Map<String, Value>, key: &str) -> Option<String> {
    match obj.get(key)? {
        Value::String(s) => Some(s.clone()),
        Value::Null => None,
        other => Some(other.to_string()),
    }
}

fn load_jsonl(spec: &DatasetSpec, reader: impl BufRead, origin: &str) -> Result<LoadedDataset> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row_err = |message: String| Error::Row {
            path: origin.to_string(),
            line: line_no,
            message,
        };
        let value: Value = serde_json::from_str(&line).map_err(|e| row_err(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| row_err("record is not an object".into()))?;
        let get = |key: &str| json_field(obj, key).ok_or_else(|| row_err(format!("missing column {key:?}")));
        rows.push(RawRow {
            line: line_no,
            id: spec.columns.id.as_deref().map(get).transpose()?,
            text_a: get(&spec.columns.text_a)?,
            text_b: get(&spec.columns.text_b)?,
            label: get(&spec.columns.label)?,
        });
    }
    finish(spec, rows, origin)
}

/// Writes pairs as JSONL, one [`SegmentPair`] per line.
pub fn write_pairs_jsonl(pairs: &[SegmentPair], mut out: impl Write) -> Result<()> {
    for pair in pairs {
        serde_json::to_writer(&mut out, pair).map_err(std::io::Error::other)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_pairs_jsonl(reader: impl BufRead, origin: &str) -> Result<Vec<SegmentPair>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Row {
            path: origin.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Counts from pairing two aligned datasets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CrosslingualReport {
    pub aligned_rows: usize,
    /// Rows present in only one of the two datasets (matched by id).
    pub dropped_unmatched: usize,
}

/// Builds cross-lingual pairs from two row-aligned translations of the same
/// dataset: every row `(A, B, y)` yields `(A_en, B_xx, y)` and `(A_xx, B_en, y)`.
///
/// When every pair carries an id the datasets are aligned by id and rows that
/// exist on one side only are dropped and counted. Otherwise rows are aligned
/// by position and the lengths must agree.
pub fn build_crosslingual_pairs(
    dataset_en: &[SegmentPair],
    dataset_xx: &[SegmentPair],
) -> Result<(Vec<SegmentPair>, CrosslingualReport)> {
    let by_id = dataset_en.iter().chain(dataset_xx).all(|p| p.id.is_some());
    let mut report = CrosslingualReport::default();
    let aligned: Vec<(&SegmentPair, &SegmentPair)> = if by_id {
        let xx: HashMap<&str, &SegmentPair> = dataset_xx.iter().map(|p| (p.id.as_deref().unwrap(), p)).collect();
        let mut matched = Vec::new();
        for en in dataset_en {
            match xx.get(en.id.as_deref().unwrap()) {
                Some(x) => matched.push((en, *x)),
                None => report.dropped_unmatched += 1,
            }
        }
        report.dropped_unmatched += dataset_xx.len() - matched.len();
        matched
    } else {
        if dataset_en.len() != dataset_xx.len() {
            return Err(Error::Data(format!(
                "cannot align datasets of {} and {} rows",
                dataset_en.len(),
                dataset_xx.len()
            )));
        }
        dataset_en.iter().zip(dataset_xx).collect()
    };
    let mut out = Vec::with_capacity(aligned.len() * 2);
    for (i, (en, xx)) in aligned.iter().enumerate() {
        if en.label != xx.label {
            return Err(Error::Data(format!(
                "label mismatch between aligned rows {}",
                en.id.clone().unwrap_or_else(|| i.to_string())
            )));
        }
        let id = en.id.clone().unwrap_or_else(|| i.to_string());
        out.push(SegmentPair {
            id: Some(format!("{id}:a-en")),
            text_a: en.text_a.clone(),
            text_b: xx.text_b.clone(),
            lang_a: en.lang_a.clone(),
            lang_b: xx.lang_b.clone(),
            label: en.label,
        });
        out.push(SegmentPair {
            id: Some(format!("{id}:b-en")),
            text_a: xx.text_a.clone(),
            text_b: en.text_b.clone(),
            lang_a: xx.lang_a.clone(),
            lang_b: en.lang_b.clone(),
            label: en.label,
        });
    }
    report.aligned_rows = aligned.len();
    Ok((out, report))
}

#[derive(Deserialize)]
struct JudgedRecord {
    doc_id: String,
    system_id: String,
    hypothesis: String,
    references: Vec<String>,
    ratings: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    language: Option<String>,
}

/// Loads human judgments, one JSON object per line with fields
/// `doc_id, system_id, hypothesis, references, ratings[, language]`.
pub fn load_judged_samples(path: &Path, default_language: &str) -> Result<Vec<JudgedSample>> {
    let file = fs::File::open(path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    read_judged_samples(BufReader::new(file), &path.display().to_string(), default_language)
}

pub fn read_judged_samples(reader: impl BufRead, origin: &str, default_language: &str) -> Result<Vec<JudgedSample>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row_err = |message: String| Error::Row {
            path: origin.to_string(),
            line: i + 1,
            message,
        };
        let rec: JudgedRecord = serde_json::from_str(&line).map_err(|e| row_err(e.to_string()))?;
        if rec.references.is_empty() {
            return Err(row_err("no references".into()));
        }
        if rec.hypothesis.trim().is_empty() || rec.references.iter().any(|r| r.trim().is_empty()) {
            return Err(row_err("empty hypothesis or reference".into()));
        }
        out.push(JudgedSample {
            doc_id: rec.doc_id,
            system_id: rec.system_id,
            hypothesis: rec.hypothesis,
            references: rec.references,
            ratings: rec.ratings,
            language: rec.language.unwrap_or_else(|| default_language.to_string()),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn spec(rule: BinarizationRule) -> DatasetSpec {
        DatasetSpec {
            name: "fixture".into(),
            languages: vec!["fi".into()],
            path: PathBuf::from("unused"),
            format: DatasetFormat::Tsv,
            split: Split::Test,
            columns: ColumnMap {
                text_a: "a".into(),
                text_b: "b".into(),
                label: "label".into(),
                id: None,
            },
            binarization: rule,
            exclude_ids: vec![],
            skip_empty: false,
        }
    }

    fn load(spec: &DatasetSpec, tsv: &str) -> Result<LoadedDataset> {
        load_tsv(spec, Cursor::new(tsv.to_string()), "fixture.tsv")
    }

    #[test]
    fn threshold_rule() {
        let s = spec(BinarizationRule::ThresholdGeq { threshold: 4.0 });
        let d = load(&s, "a\tb\tlabel\nx\ty\t4\nx\tz\t3\ny\tz\t4\n").unwrap();
        let labels: Vec<_> = d.pairs.iter().map(|p| p.label.unwrap()).collect();
        assert_eq!(labels, [true, false, true]);
        assert_eq!(d.report.positives, 2);
        assert_eq!(d.pairs[0].lang_a.as_deref(), Some("fi"));
        assert_eq!(d.pairs[0].lang_b.as_deref(), Some("fi"));
    }

    #[test]
    fn merge_classes_rule() {
        let rule = BinarizationRule::MergeClasses {
            positive: vec!["precise".into(), "near".into()],
            negative: vec!["none".into()],
        };
        let labels: Vec<_> = ["precise", "near", "none"]
            .iter()
            .map(|l| rule.apply(l).unwrap())
            .collect();
        assert_eq!(labels, [true, true, false]);
        assert!(rule.apply("other").is_err());
    }

    #[test]
    fn row_numbered_errors() {
        let s = spec(BinarizationRule::ThresholdGeq { threshold: 4.0 });
        match load(&s, "a\tb\tlabel\nx\ty\t4\nx\tz\tfour\n") {
            Err(Error::Row { line: 3, message, .. }) => assert!(message.contains("not numeric")),
            other => panic!("unexpected {other:?}"),
        }
        match load(&s, "a\tb\tlabel\nx\t \t4\n") {
            Err(Error::Row { line: 2, message, .. }) => assert!(message.contains("empty")),
            other => panic!("unexpected {other:?}"),
        }
        match load(&s, "a\tc\tlabel\nx\ty\t4\n") {
            Err(Error::Row { line: 1, message, .. }) => assert!(message.contains("\"b\"")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            load(&s, "a\tb\tlabel\nx\ty\n"),
            Err(Error::Row { line: 2, .. })
        ));
    }

    #[test]
    fn exclusions_and_empty_rows() {
        let mut s = spec(BinarizationRule::ThresholdGeq { threshold: 1.0 });
        s.columns.id = Some("id".into());
        s.exclude_ids = vec!["r2".into()];
        s.skip_empty = true;
        let d = load(&s, "id\ta\tb\tlabel\nr1\tx\ty\t1\nr2\tx\ty\t0\nr3\t\ty\t0\n").unwrap();
        assert_eq!(d.pairs.len(), 1);
        assert_eq!(d.report.excluded, 1);
        assert_eq!(d.report.dropped_empty, 1);
        assert_eq!(d.report.rows_read, 3);
    }

    #[test]
    fn quotes_are_literal_in_tsv() {
        let s = spec(BinarizationRule::ThresholdGeq { threshold: 1.0 });
        let d = load(&s, "a\tb\tlabel\n\"quoted\" start\tsay \"hi\"\t1\n").unwrap();
        assert_eq!(d.pairs[0].text_a, "\"quoted\" start");
    }

    #[test]
    fn jsonl_rows_accept_numeric_labels() {
        let mut s = spec(BinarizationRule::ThresholdGeq { threshold: 1.0 });
        s.format = DatasetFormat::Jsonl;
        let text = "{\"a\":\"x\",\"b\":\"y\",\"label\":1}\n\n{\"a\":\"x\",\"b\":\"z\",\"label\":\"0\"}\n";
        let d = load_jsonl(&s, Cursor::new(text), "f.jsonl").unwrap();
        assert_eq!(d.pairs.len(), 2);
        assert_eq!(d.pairs[1].label, Some(false));
        assert!(matches!(
            load_jsonl(&s, Cursor::new("{\"a\":\"x\",\"label\":1}\n"), "f.jsonl"),
            Err(Error::Row { line: 1, .. })
        ));
    }

    fn tagged(id: Option<&str>, a: &str, b: &str, lang: &str, label: bool) -> SegmentPair {
        let mut p = SegmentPair::new(a, b).with_langs(lang, lang).with_label(label);
        p.id = id.map(str::to_string);
        p
    }

    #[test]
    fn crosslingual_construction() {
        let en = vec![tagged(None, "A en", "B en", "en", true)];
        let de = vec![tagged(None, "A de", "B de", "de", true)];
        let (pairs, report) = build_crosslingual_pairs(&en, &de).unwrap();
        assert_eq!(report.aligned_rows, 1);
        assert_eq!(pairs.len(), 2);
        assert_eq!((pairs[0].text_a.as_str(), pairs[0].text_b.as_str()), ("A en", "B de"));
        assert_eq!(
            (pairs[0].lang_a.as_deref(), pairs[0].lang_b.as_deref()),
            (Some("en"), Some("de"))
        );
        assert_eq!((pairs[1].text_a.as_str(), pairs[1].text_b.as_str()), ("A de", "B en"));
        assert!(pairs.iter().all(|p| p.label == Some(true)));
    }

    #[test]
    fn crosslingual_errors_and_id_alignment() {
        let en = vec![tagged(None, "a", "b", "en", true), tagged(None, "c", "d", "en", false)];
        let de = vec![tagged(None, "a", "b", "de", true)];
        assert!(build_crosslingual_pairs(&en, &de).is_err());
        let de = vec![tagged(None, "a", "b", "de", true), tagged(None, "c", "d", "de", true)];
        assert!(build_crosslingual_pairs(&en, &de).is_err());

        let en = vec![
            tagged(Some("1"), "a", "b", "en", true),
            tagged(Some("2"), "c", "d", "en", false),
        ];
        let de = vec![
            tagged(Some("2"), "c", "d", "de", false),
            tagged(Some("3"), "e", "f", "de", true),
        ];
        let (pairs, report) = build_crosslingual_pairs(&en, &de).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(report.dropped_unmatched, 2);
    }

    #[test]
    fn judged_samples() {
        let text = r#"{"doc_id":"d1","system_id":"s1","hypothesis":"h","references":["r1","r2"],"ratings":{"correctness":[4,5]}}"#;
        let s = read_judged_samples(Cursor::new(text), "j.jsonl", "en").unwrap();
        assert_eq!(s[0].language, "en");
        assert_eq!(s[0].references.len(), 2);
        let bad = r#"{"doc_id":"d1","system_id":"s1","hypothesis":"h","references":[],"ratings":{}}"#;
        assert!(matches!(
            read_judged_samples(Cursor::new(bad), "j", "en"),
            Err(Error::Row { line: 1, .. })
        ));
    }
}
