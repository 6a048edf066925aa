//! Project outcome records, reference classes and CSV ingestion.
//!
//! A [`ProjectRecord`] pairs the value forecast at the time of the decision
//! to build with the value actually realised. The overrun of a completed
//! project is `actual / forecast - 1`, kept as a fraction everywhere inside
//! the crate; percent only shows up at presentation boundaries.
//!
//! Abandoned projects carry no actual value. They are kept so that a class
//! can report its attrition rate, but they never enter distribution math.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column names of the ingestion format, in order.
pub const CSV_HEADER: [&str; 10] = [
    "id",
    "category",
    "metric",
    "forecast_value",
    "actual_value",
    "status",
    "currency_or_unit",
    "price_basis_year",
    "decision_year",
    "completion_year",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("project '{0}' has no actual outcome (abandoned)")]
    NoActualOutcome(String),
    #[error("reference class is empty")]
    EmptyClass,
    #[error("reference class has no completed records")]
    NoCompletedRecords,
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("record '{id}' does not belong to the class: {reason}")]
    ForeignRecord { id: String, reason: String },
    #[error("duplicate record id '{0}'")]
    DuplicateId(String),
    #[error("invalid class name '{0}': use letters, digits, '_', '-' or '.'")]
    InvalidClassName(String),
    #[error("missing CSV header")]
    MissingHeader,
    #[error("unexpected CSV header: expected `{expected}`, found `{found}`")]
    BadHeader { expected: String, found: String },
    #[error("CSV error: {0}")]
    Csv(String),
}

/// What a record measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    CapitalCost,
    Demand,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::CapitalCost => "capital_cost",
            Metric::Demand => "demand",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "capital_cost" => Ok(Metric::CapitalCost),
            "demand" => Ok(Metric::Demand),
            other => Err(format!("unknown metric '{other}'")),
        }
    }
}

/// How a project ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Completed { actual_value: f64 },
    Abandoned,
}

impl Outcome {
    pub fn status_str(&self) -> &'static str {
        match self {
            Outcome::Completed { .. } => "completed",
            Outcome::Abandoned => "abandoned",
        }
    }
}

/// Where the numbers of a record come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub currency_or_unit: String,
    pub price_basis_year: i32,
    /// Year of the decision to build; the forecast is taken at this point.
    pub decision_year: i32,
    pub completion_year: Option<i32>,
}

impl Provenance {
    pub fn new(
        currency_or_unit: impl Into<String>,
        price_basis_year: i32,
        decision_year: i32,
    ) -> Self {
        Self {
            currency_or_unit: currency_or_unit.into(),
            price_basis_year,
            decision_year,
            completion_year: None,
        }
    }

    pub fn completed_in(mut self, year: i32) -> Self {
        self.completion_year = Some(year);
        self
    }
}

/// One completed or abandoned project.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectRecord {
    id: String,
    category: String,
    metric: Metric,
    forecast_value: f64,
    #[serde(flatten)]
    outcome: Outcome,
    #[serde(flatten)]
    provenance: Provenance,
}

impl ProjectRecord {
    pub fn new(
        id: impl Into<String>,
        category: impl Into<String>,
        metric: Metric,
        forecast_value: f64,
        outcome: Outcome,
        provenance: Provenance,
    ) -> Result<Self, DatasetError> {
        let id = id.into();
        let category = category.into();
        if id.trim().is_empty() {
            return Err(DatasetError::InvalidRecord("empty id".into()));
        }
        if category.trim().is_empty() {
            return Err(DatasetError::InvalidRecord(format!(
                "record '{id}': empty category"
            )));
        }
        if !(forecast_value.is_finite() && forecast_value > 0.0) {
            return Err(DatasetError::InvalidRecord(format!(
                "record '{id}': non-positive forecast"
            )));
        }
        if let Outcome::Completed { actual_value } = outcome {
            if !(actual_value.is_finite() && actual_value > 0.0) {
                return Err(DatasetError::InvalidRecord(format!(
                    "record '{id}': non-positive actual"
                )));
            }
        }
        if let Some(done) = provenance.completion_year {
            if done < provenance.decision_year {
                return Err(DatasetError::InvalidRecord(format!(
                    "record '{id}': completion year {done} precedes decision year {}",
                    provenance.decision_year
                )));
            }
        }
        Ok(Self {
            id,
            category,
            metric,
            forecast_value,
            outcome,
            provenance,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn category(&self) -> &str {
        &self.category
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn forecast_value(&self) -> f64 {
        self.forecast_value
    }

    pub fn actual_value(&self) -> Option<f64> {
        match self.outcome {
            Outcome::Completed { actual_value } => Some(actual_value),
            Outcome::Abandoned => None,
        }
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn is_completed(&self) -> bool {
        matches!(self.outcome, Outcome::Completed { .. })
    }

    /// Overrun as a fraction: `actual / forecast - 1`. Underruns are negative.
    pub fn overrun(&self) -> Result<f64, DatasetError> {
        match self.outcome {
            Outcome::Completed { actual_value } => Ok(actual_value / self.forecast_value - 1.0),
            Outcome::Abandoned => Err(DatasetError::NoActualOutcome(self.id.clone())),
        }
    }

    /// Forecast inaccuracy in percent, `100 * overrun`.
    pub fn inaccuracy_percent(&self) -> Result<f64, DatasetError> {
        self.overrun().map(|o| o * 100.0)
    }
}

/// Free-function form of [`ProjectRecord::overrun`].
pub fn overrun(record: &ProjectRecord) -> Result<f64, DatasetError> {
    record.overrun()
}

/// Free-function form of [`ProjectRecord::inaccuracy_percent`].
pub fn inaccuracy_percent(record: &ProjectRecord) -> Result<f64, DatasetError> {
    record.inaccuracy_percent()
}

/// A named set of comparable projects sharing one category and metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceClass {
    name: String,
    category: String,
    metric: Metric,
    records: Vec<ProjectRecord>,
    source_note: String,
}

pub(crate) fn valid_class_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('.')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl ReferenceClass {
    pub fn new(
        name: impl Into<String>,
        category: impl Into<String>,
        metric: Metric,
        records: Vec<ProjectRecord>,
        source_note: impl Into<String>,
    ) -> Result<Self, DatasetError> {
        let name = name.into();
        let category = category.into();
        if !valid_class_name(&name) {
            return Err(DatasetError::InvalidClassName(name));
        }
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if r.category != category {
                return Err(DatasetError::ForeignRecord {
                    id: r.id.clone(),
                    reason: format!("category '{}' != '{category}'", r.category),
                });
            }
            if r.metric != metric {
                return Err(DatasetError::ForeignRecord {
                    id: r.id.clone(),
                    reason: format!("metric '{}' != '{metric}'", r.metric),
                });
            }
            if !seen.insert(r.id.as_str()) {
                return Err(DatasetError::DuplicateId(r.id.clone()));
            }
        }
        Ok(Self {
            name,
            category,
            metric,
            records,
            source_note: source_note.into(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn category(&self) -> &str {
        &self.category
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn records(&self) -> &[ProjectRecord] {
        &self.records
    }

    pub fn source_note(&self) -> &str {
        &self.source_note
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn completed(&self) -> impl Iterator<Item = &ProjectRecord> {
        self.records.iter().filter(|r| r.is_completed())
    }

    pub fn completed_count(&self) -> usize {
        self.completed().count()
    }

    pub fn abandoned_count(&self) -> usize {
        self.records.len() - self.completed_count()
    }

    /// Overruns of the completed records, in record order.
    pub fn overruns(&self) -> Result<Vec<f64>, DatasetError> {
        let values: Vec<f64> = self
            .completed()
            .map(|r| r.overrun().expect("completed record"))
            .collect();
        if values.is_empty() {
            return Err(DatasetError::NoCompletedRecords);
        }
        Ok(values)
    }

    /// Share of records that were abandoned before completion.
    pub fn attrition_rate(&self) -> Result<f64, DatasetError> {
        if self.records.is_empty() {
            return Err(DatasetError::EmptyClass);
        }
        Ok(self.abandoned_count() as f64 / self.records.len() as f64)
    }

    /// Non-fatal data quality findings.
    pub fn warnings(&self) -> Vec<String> {
        let years: BTreeSet<i32> = self
            .records
            .iter()
            .map(|r| r.provenance.price_basis_year)
            .collect();
        let mut out = Vec::new();
        if years.len() > 1 {
            let list: Vec<String> = years.iter().map(i32::to_string).collect();
            out.push(format!(
                "mixed price basis years ({}); overruns assume constant prices and are not deflated",
                list.join(", ")
            ));
        }
        out
    }
}

/// Free-function form of [`ReferenceClass::attrition_rate`].
pub fn attrition_rate(class: &ReferenceClass) -> Result<f64, DatasetError> {
    class.attrition_rate()
}

/// A row that could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowDiagnostic {
    /// 1-based line number in the input; the header is line 1.
    pub row: u64,
    pub reason: String,
}

impl fmt::Display for RowDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: {}", self.row, self.reason)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedRecords {
    pub records: Vec<ProjectRecord>,
    pub diagnostics: Vec<RowDiagnostic>,
}

fn parse_positive(field: &str, what: &str) -> Result<f64, String> {
    let v: f64 = field
        .parse()
        .map_err(|_| format!("unparseable {what} '{field}'"))?;
    if !v.is_finite() {
        return Err(format!("unparseable {what} '{field}'"));
    }
    if v <= 0.0 {
        return Err(format!("non-positive {what}"));
    }
    Ok(v)
}

fn parse_year(field: &str, what: &str) -> Result<i32, String> {
    field
        .parse()
        .map_err(|_| format!("unparseable {what} '{field}'"))
}

fn parse_row(row: &csv::StringRecord) -> Result<ProjectRecord, String> {
    if row.len() != CSV_HEADER.len() {
        return Err(format!(
            "expected {} fields, found {}",
            CSV_HEADER.len(),
            row.len()
        ));
    }
    let field = |i: usize| row.get(i).unwrap_or("").trim();

    let id = field(0);
    if id.is_empty() {
        return Err("empty id".into());
    }
    let category = field(1);
    if category.is_empty() {
        return Err("empty category".into());
    }
    let metric: Metric = field(2).parse()?;
    let forecast = parse_positive(field(3), "forecast")?;
    let outcome = match field(5) {
        "completed" => {
            if field(4).is_empty() {
                return Err("completed project without actual value".into());
            }
            Outcome::Completed {
                actual_value: parse_positive(field(4), "actual")?,
            }
        }
        "abandoned" => {
            if !field(4).is_empty() {
                return Err("abandoned project with actual value".into());
            }
            Outcome::Abandoned
        }
        other => return Err(format!("unknown status '{other}'")),
    };
    let currency = field(6);
    if currency.is_empty() {
        return Err("empty currency_or_unit".into());
    }
    let provenance = Provenance {
        currency_or_unit: currency.to_string(),
        price_basis_year: parse_year(field(7), "price_basis_year")?,
        decision_year: parse_year(field(8), "decision_year")?,
        completion_year: match field(9) {
            "" => None,
            y => Some(parse_year(y, "completion_year")?),
        },
    };
    ProjectRecord::new(id, category, metric, forecast, outcome, provenance).map_err(|e| match e {
        DatasetError::InvalidRecord(msg) => msg
            .split_once(": ")
            .map(|(_, reason)| reason.to_string())
            .unwrap_or(msg),
        other => other.to_string(),
    })
}

/// Parses CSV text in the ingestion format.
///
/// A missing or wrong header fails the whole input. Individual bad rows are
/// skipped and reported as diagnostics; record order follows the input.
pub fn parse_records(raw_text: &str) -> Result<ParsedRecords, DatasetError> {
    let text = raw_text.strip_prefix('\u{feff}').unwrap_or(raw_text);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());

    let header = reader
        .headers()
        .map_err(|e| DatasetError::Csv(e.to_string()))?
        .clone();
    if header.is_empty() || (header.len() == 1 && header.get(0) == Some("")) {
        return Err(DatasetError::MissingHeader);
    }
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found != CSV_HEADER {
        return Err(DatasetError::BadHeader {
            expected: CSV_HEADER.join(","),
            found: found.join(","),
        });
    }

    let mut parsed = ParsedRecords::default();
    for result in reader.records() {
        match result {
            Ok(row) => {
                let line = row.position().map_or(0, |p| p.line());
                if row.iter().all(|f| f.trim().is_empty()) {
                    continue;
                }
                match parse_row(&row) {
                    Ok(rec) => parsed.records.push(rec),
                    Err(reason) => parsed.diagnostics.push(RowDiagnostic { row: line, reason }),
                }
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                parsed.diagnostics.push(RowDiagnostic {
                    row: line,
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(parsed)
}

/// Serialises records in the ingestion format (LF line endings).
pub fn write_records(records: &[ProjectRecord]) -> String {
    let mut out = CSV_HEADER.join(",");
    out.push('\n');
    for r in records {
        let actual = r.actual_value().map(|v| v.to_string()).unwrap_or_default();
        let completion = r
            .provenance
            .completion_year
            .map(|y| y.to_string())
            .unwrap_or_default();
        let fields = [
            quote(&r.id),
            quote(&r.category),
            r.metric.as_str().to_string(),
            r.forecast_value.to_string(),
            actual,
            r.outcome.status_str().to_string(),
            quote(&r.provenance.currency_or_unit),
            r.provenance.price_basis_year.to_string(),
            r.provenance.decision_year.to_string(),
            completion,
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) || field != field.trim() {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}
