//! Experiment outcomes and their JSON/CSV serialisation.

use serde::Serialize;
use std::collections::BTreeMap;
use std::io;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The computation itself failed; recorded instead of aborting the run.
    Error,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(&self) -> bool {
        *self == Verdict::Pass
    }
}

/// Tabular output with a header row.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Series {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Series { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            // shortest round-trip formatting, stable across runs
            w.write_record(row.iter().map(|x| format!("{x:?}")))?;
        }
        w.flush()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutcome {
    pub name: String,
    pub kind: String,
    pub model: String,
    pub verdict: Verdict,
    pub message: Option<String>,
    /// Headline numbers, keyed by name.
    pub scalars: BTreeMap<String, f64>,
    pub details: serde_json::Value,
    #[serde(skip)]
    pub series: Vec<Series>,
}

impl ExperimentOutcome {
    pub fn new(name: &str, kind: &str, model: &str) -> Self {
        ExperimentOutcome {
            name: name.into(),
            kind: kind.into(),
            model: model.into(),
            verdict: Verdict::Pass,
            message: None,
            scalars: BTreeMap::new(),
            details: serde_json::Value::Null,
            series: Vec::new(),
        }
    }

    pub fn scalar(&mut self, key: &str, value: f64) {
        self.scalars.insert(key.into(), value);
    }

    /// Records a failed check; the first message is kept.
    pub fn require(&mut self, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            if self.verdict == Verdict::Pass {
                self.verdict = Verdict::Fail;
            }
            if self.message.is_none() {
                self.message = Some(message());
            }
        }
    }

    pub fn errored(name: &str, kind: &str, model: &str, message: String) -> Self {
        let mut o = Self::new(name, kind, model);
        o.verdict = Verdict::Error;
        o.message = Some(message);
        o
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialises");
    s.push('\n');
    s
}

pub fn details<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).unwrap_or(serde_json::Value::Null)
}
