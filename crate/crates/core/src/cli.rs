//! Command-line front end.
//!
//! Every command renders into a string so the whole surface can be driven
//! in-process by tests; `main` only forwards the strings and the exit code.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::dataset::{self, Metric, ReferenceClass};
use crate::registry::{self, CategoryTaxonomy, PoolDecision, RegistryError, Store};
use crate::stats::{self, OverrunDistribution, StatsError, TestReport};
use crate::uplift::{
    self, AppraisalRequest, AppraisedBudget, DownwardAdjustment, ProjectStage, TableUplift,
    UpliftSource,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_CORRUPT: i32 = 2;

pub const DEFAULT_STORE: &str = "refcast-store";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum StageArg {
    #[default]
    BusinessCase,
    PreBusinessCase,
}

impl From<StageArg> for ProjectStage {
    fn from(s: StageArg) -> Self {
        match s {
            StageArg::BusinessCase => ProjectStage::BusinessCase,
            StageArg::PreBusinessCase => ProjectStage::PreBusinessCase,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "refcast",
    version,
    about = "Reference class forecasting of project cost overruns"
)]
pub struct Cli {
    /// Registry directory.
    #[arg(long, global = true, env = "REFCAST_STORE", default_value = DEFAULT_STORE)]
    pub store: PathBuf,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a CSV of project outcomes and store it as a reference class.
    Ingest {
        csv: PathBuf,
        #[arg(long)]
        name: String,
        #[arg(long)]
        category: String,
        #[arg(long, default_value = "capital_cost")]
        metric: String,
        #[arg(long, default_value = "")]
        source_note: String,
        /// Replace an existing class of the same name.
        #[arg(long)]
        overwrite: bool,
    },
    /// Summary statistics and tests for a stored class.
    Stats { class: String },
    /// Required uplift as a function of acceptable risk, as CSV.
    Curve {
        class: String,
        /// Comma-separated risks (`0.5,0.2`) or `start:stop:step` (`0.95:0.05:0.05`).
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Required uplift at one acceptable risk.
    Uplift {
        #[arg(required_unless_present = "category")]
        class: Option<String>,
        /// Use the built-in uplift table instead of a stored class.
        #[arg(long, conflicts_with = "class")]
        category: Option<String>,
        #[arg(long)]
        risk: f64,
    },
    /// Uplift a base budget.
    Appraise {
        #[arg(
            long,
            required_unless_present = "category",
            conflicts_with = "category"
        )]
        class: Option<String>,
        #[arg(long)]
        category: Option<String>,
        /// Plain decimal amount, no separators or currency symbols.
        #[arg(long)]
        base: String,
        /// Read --base as an integer count of minor units (pence, cents).
        #[arg(long)]
        minor_units: bool,
        #[arg(long)]
        risk: Option<f64>,
        /// Reduce the uplift by this fraction; requires --evidence.
        #[arg(long)]
        adjust: Option<f64>,
        #[arg(long)]
        evidence: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        stage: StageArg,
        /// Round amounts to millions (default: on for text output).
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        display_millions: Option<bool>,
        #[arg(long, default_value = "£")]
        currency_symbol: String,
    },
    /// Leave-one-out coverage of percentile budgets.
    Backtest {
        class: String,
        #[arg(long, default_value_t = 0.8)]
        percentile: f64,
    },
    /// Test whether two classes may be pooled.
    PoolCheck {
        class_a: String,
        class_b: String,
        #[arg(long, default_value_t = registry::DEFAULT_POOL_ALPHA)]
        alpha: f64,
    },
    /// Print the built-in optimism-bias uplift table.
    Table,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn user(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USER,
            message: message.into(),
        }
    }
}

impl From<RegistryError> for CliError {
    fn from(e: RegistryError) -> Self {
        Self {
            code: if e.is_corruption() {
                EXIT_CORRUPT
            } else {
                EXIT_USER
            },
            message: e.to_string(),
        }
    }
}

macro_rules! user_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::user(e.to_string())
            }
        }
    )*};
}
user_errors!(dataset::DatasetError, StatsError, uplift::UpliftError);

/// What a finished invocation prints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

/// Result of one command before rendering.
struct Rendered {
    text: String,
    csv: Option<String>,
    payload: Value,
    warnings: Vec<String>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USER,
            };
            let rendered = e.render().to_string();
            return if code == EXIT_OK {
                Output {
                    stdout: rendered,
                    stderr: String::new(),
                    code,
                }
            } else {
                Output {
                    stdout: String::new(),
                    stderr: rendered,
                    code,
                }
            };
        }
    };
    execute(&cli)
}

pub fn execute(cli: &Cli) -> Output {
    match dispatch(cli) {
        Ok(r) => render_ok(cli.format, r),
        Err(e) => render_err(cli.format, e),
    }
}

fn render_ok(format: Format, r: Rendered) -> Output {
    match format {
        Format::Json => {
            let envelope = json!({
                "format": "json",
                "payload": r.payload,
                "warnings": r.warnings,
                "exit_code": EXIT_OK,
            });
            Output {
                stdout: format!(
                    "{}\n",
                    serde_json::to_string_pretty(&envelope).expect("json")
                ),
                stderr: String::new(),
                code: EXIT_OK,
            }
        }
        Format::Text => {
            let mut stdout = r.text;
            for w in &r.warnings {
                let _ = writeln!(stdout, "warning: {w}");
            }
            Output {
                stdout,
                stderr: String::new(),
                code: EXIT_OK,
            }
        }
        Format::Csv => {
            let stdout = r.csv.unwrap_or_else(|| flat_csv(&r.payload));
            let stderr = r
                .warnings
                .iter()
                .map(|w| format!("warning: {w}\n"))
                .collect();
            Output {
                stdout,
                stderr,
                code: EXIT_OK,
            }
        }
    }
}

fn render_err(format: Format, e: CliError) -> Output {
    match format {
        Format::Json => {
            let envelope = json!({
                "format": "json",
                "error": e.message,
                "warnings": [],
                "exit_code": e.code,
            });
            Output {
                stdout: format!(
                    "{}\n",
                    serde_json::to_string_pretty(&envelope).expect("json")
                ),
                stderr: String::new(),
                code: e.code,
            }
        }
        Format::Text | Format::Csv => Output {
            stdout: String::new(),
            stderr: format!("error: {}\n", e.message),
            code: e.code,
        },
    }
}

/// Header plus one row from the scalar fields of a JSON object.
fn flat_csv(payload: &Value) -> String {
    fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        match v {
            Value::Object(map) => {
                for (k, v) in map {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    flatten(&key, v, out);
                }
            }
            Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
                for (i, v) in items.iter().enumerate() {
                    flatten(&format!("{prefix}.{i}"), v, out);
                }
            }
            Value::Array(_) => {}
            Value::Null => out.push((prefix.to_string(), String::new())),
            Value::String(s) => out.push((prefix.to_string(), s.clone())),
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut cells = Vec::new();
    flatten("", payload, &mut cells);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(cells.iter().map(|(k, _)| k.as_str()))
        .expect("csv");
    w.write_record(cells.iter().map(|(_, v)| v.as_str()))
        .expect("csv");
    String::from_utf8(w.into_inner().expect("csv")).expect("utf8")
}

fn dispatch(cli: &Cli) -> Result<Rendered, CliError> {
    match &cli.command {
        Command::Ingest {
            csv,
            name,
            category,
            metric,
            source_note,
            overwrite,
        } => cmd_ingest(cli, csv, name, category, metric, source_note, *overwrite),
        Command::Stats { class } => cmd_stats(cli, class),
        Command::Curve {
            class,
            grid,
            output,
        } => cmd_curve(cli, class, grid.as_deref(), output.as_ref()),
        Command::Uplift {
            class,
            category,
            risk,
        } => cmd_uplift(cli, class.as_deref(), category.as_deref(), *risk),
        Command::Appraise {
            class,
            category,
            base,
            minor_units,
            risk,
            adjust,
            evidence,
            stage,
            display_millions,
            currency_symbol,
        } => {
            let base = parse_budget(base, *minor_units)?;
            let adjustment = match (adjust, evidence) {
                (Some(amount), evidence) => Some(DownwardAdjustment {
                    amount: *amount,
                    evidence: evidence.clone().unwrap_or_default(),
                }),
                (None, Some(_)) => return Err(CliError::user("--evidence given without --adjust")),
                (None, None) => None,
            };
            let request = AppraisalRequest {
                base_budget: base,
                acceptable_risk: *risk,
                adjustment,
                stage: (*stage).into(),
            };
            let millions = display_millions.unwrap_or(cli.format == Format::Text);
            cmd_appraise(
                cli,
                class.as_deref(),
                category.as_deref(),
                &request,
                millions,
                currency_symbol,
            )
        }
        Command::Backtest { class, percentile } => cmd_backtest(cli, class, *percentile),
        Command::PoolCheck {
            class_a,
            class_b,
            alpha,
        } => cmd_pool_check(cli, class_a, class_b, *alpha),
        Command::Table => cmd_table(),
    }
}

fn load(cli: &Cli, name: &str) -> Result<ReferenceClass, CliError> {
    Ok(Store::open_existing(&cli.store)?.load_class(name)?)
}

fn pct(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

fn fmt_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}

/// Percent label for a probability, e.g. `20%` or `12.5%`.
fn risk_label(r: f64) -> String {
    let v = r * 100.0;
    if (v - v.round()).abs() < 1e-9 {
        format!("{}%", v.round() as i64)
    } else {
        format!("{}%", v)
    }
}

/// Money for display: whole millions from 10m up, tenths of a million below.
pub fn format_money(amount: f64, symbol: &str, millions: bool) -> String {
    if millions {
        let m = amount / 1e6;
        if m.abs() >= 10.0 {
            format!("{symbol}{m:.0}m")
        } else {
            format!("{symbol}{m:.1}m")
        }
    } else {
        format!("{symbol}{amount:.2}")
    }
}

fn parse_budget(raw: &str, minor_units: bool) -> Result<f64, CliError> {
    let s = raw.trim();
    let bad = || {
        CliError::user(format!(
            "invalid budget '{raw}': expected a plain decimal number"
        ))
    };
    if minor_units {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(CliError::user(format!(
                "invalid budget '{raw}': expected integer minor units"
            )));
        }
        let v: u64 = s.parse().map_err(|_| bad())?;
        return Ok(v as f64 / 100.0);
    }
    let digits = s.strip_prefix('-').unwrap_or(s);
    let mut parts = digits.splitn(2, '.');
    let int = parts.next().unwrap_or("");
    let frac = parts.next();
    let plain = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
    if int.is_empty() || !plain(int) || frac.is_some_and(|f| f.is_empty() || !plain(f)) {
        return Err(bad());
    }
    s.parse().map_err(|_| bad())
}

/// Parses `0.5,0.2` or `start:stop:step`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid range '{spec}' must be start:stop:step"));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("invalid number '{s}' in grid"))
        };
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step.is_nan() || step <= 0.0 {
            return Err("grid step must be positive".into());
        }
        let count = ((start - stop).abs() / step + 1e-9).floor() as usize + 1;
        let dir = if stop < start { -1.0 } else { 1.0 };
        // round to 12 decimals so 0.95 - 9 * 0.05 prints as 0.5
        Ok((0..count)
            .map(|i| ((start + dir * step * i as f64) * 1e12).round() / 1e12)
            .collect())
    } else {
        spec.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("invalid number '{s}' in grid"))
            })
            .collect()
    }
}

fn cmd_ingest(
    cli: &Cli,
    csv_path: &PathBuf,
    name: &str,
    category: &str,
    metric: &str,
    source_note: &str,
    overwrite: bool,
) -> Result<Rendered, CliError> {
    let metric: Metric = metric.parse().map_err(CliError::user)?;
    let taxonomy = CategoryTaxonomy::seeded();
    let mut warnings = Vec::new();
    let category = match taxonomy.get(category) {
        Some(c) => c.key.clone(),
        None => {
            warnings.push(format!(
                "category '{category}' is not in the built-in taxonomy"
            ));
            category.to_string()
        }
    };

    let raw = fs::read_to_string(csv_path)
        .map_err(|e| CliError::user(format!("{}: {e}", csv_path.display())))?;
    let parsed = dataset::parse_records(&raw)
        .map_err(|e| CliError::user(format!("{}: {e}", csv_path.display())))?;

    let mut diagnostics = parsed.diagnostics;
    let mut seen = std::collections::HashSet::new();
    let mut records = Vec::new();
    for rec in parsed.records {
        let reason = if rec.category() != category {
            Some(format!(
                "category '{}' does not match '{category}'",
                rec.category()
            ))
        } else if rec.metric() != metric {
            Some(format!(
                "metric '{}' does not match '{metric}'",
                rec.metric()
            ))
        } else if !seen.insert(rec.id().to_string()) {
            Some(format!("duplicate id '{}'", rec.id()))
        } else {
            None
        };
        match reason {
            Some(reason) => diagnostics.push(dataset::RowDiagnostic {
                row: line_of(&raw, rec.id()),
                reason,
            }),
            None => records.push(rec),
        }
    }
    diagnostics.sort_by_key(|d| d.row);
    if records.is_empty() {
        let mut msg = format!("{}: no valid records", csv_path.display());
        for d in &diagnostics {
            let _ = write!(msg, "\n  {d}");
        }
        return Err(CliError::user(msg));
    }

    let class = ReferenceClass::new(name, category.clone(), metric, records, source_note)?;
    warnings.extend(class.warnings());
    let store = Store::open(&cli.store)?;
    let path = store.save_class(&class, overwrite)?;
    let attrition = class.attrition_rate()?;

    let mut text = format!(
        "stored class '{}' (category {}, metric {}) in {}\n{} records: {} completed, {} abandoned; attrition rate {}%\n",
        class.name(),
        class.category(),
        class.metric(),
        path.display(),
        class.len(),
        class.completed_count(),
        class.abandoned_count(),
        pct(attrition)
    );
    if !diagnostics.is_empty() {
        let _ = writeln!(text, "{} row(s) skipped:", diagnostics.len());
        for d in &diagnostics {
            let _ = writeln!(text, "  {d}");
        }
    }
    let payload = json!({
        "name": class.name(),
        "category": class.category(),
        "metric": class.metric(),
        "file": path.display().to_string(),
        "records": class.len(),
        "completed": class.completed_count(),
        "abandoned": class.abandoned_count(),
        "attrition_rate": attrition,
        "diagnostics": diagnostics,
    });
    Ok(Rendered {
        text,
        csv: None,
        payload,
        warnings,
    })
}

/// Line number of the first data row whose id field is `id`.
fn line_of(raw: &str, id: &str) -> u64 {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(raw.strip_prefix('\u{feff}').unwrap_or(raw).as_bytes());
    let mut hits = reader
        .records()
        .filter_map(Result::ok)
        .filter(|r| r.get(0).map(str::trim) == Some(id))
        .filter_map(|r| r.position().map(|p| p.line()));
    // the last occurrence is the one rejected as a duplicate
    let first = hits.next().unwrap_or(0);
    hits.last().unwrap_or(first)
}

#[derive(Serialize)]
struct StatsPayload<'a> {
    class: &'a str,
    category: &'a str,
    metric: Metric,
    records: usize,
    completed: usize,
    abandoned: usize,
    attrition_rate: f64,
    summary: stats::SummaryStats,
    t_test: Option<TestReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_test_unavailable: Option<String>,
    jarque_bera: Option<TestReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    jarque_bera_unavailable: Option<String>,
}

fn cmd_stats(cli: &Cli, name: &str) -> Result<Rendered, CliError> {
    let class = load(cli, name)?;
    let overruns = class.overruns()?;
    let summary = stats::summary(&overruns)?;
    let t = stats::t_test_mean_zero(&overruns).map_err(|e| e.to_string());
    let jb = stats::jarque_bera_normality(&overruns).map_err(|e| e.to_string());
    let attrition = class.attrition_rate()?;

    let mut text = String::new();
    let _ = writeln!(
        text,
        "Reference class: {} (category {}, metric {})",
        class.name(),
        class.category(),
        class.metric()
    );
    let _ = writeln!(
        text,
        "Records: {} ({} completed, {} abandoned; attrition {}%)",
        class.len(),
        class.completed_count(),
        class.abandoned_count(),
        pct(attrition)
    );
    text.push('\n');
    let sd = summary.sd.map_or("n/a".to_string(), pct);
    let p = t.as_ref().map_or("n/a".to_string(), |r| fmt_p(r.p_value));
    let rows = [
        [
            "Type of project",
            "N",
            "Average inaccuracy (%)",
            "Standard deviation",
            "Level of significance, p",
        ]
        .map(String::from),
        [
            class.name().to_string(),
            summary.n.to_string(),
            pct(summary.mean),
            sd,
            p,
        ],
    ];
    text.push_str(&columns(&rows));
    text.push('\n');
    let _ = writeln!(text, "Median inaccuracy (%): {}", pct(summary.median));
    let _ = writeln!(
        text,
        "Range (%): {} to {}",
        pct(summary.min),
        pct(summary.max)
    );
    match &t {
        Ok(r) => {
            let _ = writeln!(
                text,
                "t test (mean zero): t = {:.3}, df = {}, p = {}",
                r.statistic,
                r.n - 1,
                fmt_p(r.p_value)
            );
        }
        Err(e) => {
            let _ = writeln!(text, "t test (mean zero): unavailable ({e})");
        }
    }
    match &jb {
        Ok(r) => {
            let _ = writeln!(
                text,
                "Jarque-Bera normality: JB = {:.3}, p = {}",
                r.statistic,
                fmt_p(r.p_value)
            );
        }
        Err(e) => {
            let _ = writeln!(text, "Jarque-Bera normality: unavailable ({e})");
        }
    }

    let payload = serde_json::to_value(StatsPayload {
        class: class.name(),
        category: class.category(),
        metric: class.metric(),
        records: class.len(),
        completed: class.completed_count(),
        abandoned: class.abandoned_count(),
        attrition_rate: attrition,
        summary,
        t_test_unavailable: t.as_ref().err().cloned(),
        t_test: t.ok(),
        jarque_bera_unavailable: jb.as_ref().err().cloned(),
        jarque_bera: jb.ok(),
    })
    .expect("json");
    Ok(Rendered {
        text,
        csv: None,
        payload,
        warnings: class.warnings(),
    })
}

/// Left-aligned columns separated by two spaces, no trailing whitespace.
fn columns<const N: usize>(rows: &[[String; N]]) -> String {
    let mut widths = [0usize; N];
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            if i + 1 < N {
                line.extend(std::iter::repeat_n(' ', widths[i] - cell.chars().count()));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn cmd_curve(
    cli: &Cli,
    name: &str,
    grid: Option<&str>,
    output: Option<&PathBuf>,
) -> Result<Rendered, CliError> {
    let grid = match grid {
        Some(spec) => parse_grid(spec).map_err(CliError::user)?,
        None => uplift::default_risk_grid(),
    };
    let class = load(cli, name)?;
    let dist = OverrunDistribution::new(&class.overruns()?)?;
    let curve = uplift::uplift_curve(&dist, &grid)?;
    let csv = curve.to_csv();
    let payload = serde_json::to_value(&curve).expect("json");
    if let Some(path) = output {
        let body = if cli.format == Format::Json {
            format!(
                "{}\n",
                serde_json::to_string_pretty(&payload).expect("json")
            )
        } else {
            csv.clone()
        };
        fs::write(path, body).map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
        let note = format!(
            "wrote {} points to {}\n",
            curve.points.len(),
            path.display()
        );
        return Ok(Rendered {
            text: note.clone(),
            csv: Some(note),
            payload: json!({ "file": path.display().to_string(), "points": curve.points.len() }),
            warnings: vec![],
        });
    }
    Ok(Rendered {
        text: csv.clone(),
        csv: Some(csv),
        payload,
        warnings: vec![],
    })
}

fn cmd_uplift(
    cli: &Cli,
    class: Option<&str>,
    category: Option<&str>,
    risk: f64,
) -> Result<Rendered, CliError> {
    let (source, n, value) = match (class, category) {
        (Some(name), _) => {
            let class = load(cli, name)?;
            let dist = OverrunDistribution::new(&class.overruns()?)?;
            (
                format!("class {name}"),
                Some(dist.n()),
                uplift::required_uplift(&dist, risk)?,
            )
        }
        (None, Some(cat)) => {
            let entry = uplift::lookup(&uplift::builtin_table(), cat)?;
            (
                format!("uplift table, {}", entry.category),
                None,
                entry.uplift_at(risk)?,
            )
        }
        (None, None) => return Err(CliError::user("give a class name or --category")),
    };
    let n_note = n.map(|n| format!(", n = {n}")).unwrap_or_default();
    let text = format!(
        "required uplift at {} acceptable risk (P{}): {}% ({source}{n_note})\n",
        risk_label(risk),
        risk_label(1.0 - risk).trim_end_matches('%'),
        pct(value)
    );
    let payload = json!({ "source": source, "n": n, "acceptable_risk": risk, "uplift": value });
    Ok(Rendered {
        text,
        csv: None,
        payload,
        warnings: vec![],
    })
}

fn cmd_appraise(
    cli: &Cli,
    class: Option<&str>,
    category: Option<&str>,
    request: &AppraisalRequest,
    millions: bool,
    symbol: &str,
) -> Result<Rendered, CliError> {
    let (label, result) = match (class, category) {
        (Some(name), _) => {
            let class = load(cli, name)?;
            let dist = OverrunDistribution::new(&class.overruns()?)?;
            (
                format!("reference class {name} (n = {})", dist.n()),
                uplift::appraise(UpliftSource::Distribution(&dist), request)?,
            )
        }
        (None, Some(cat)) => {
            let entry = uplift::lookup(&uplift::builtin_table(), cat)?;
            (
                format!("uplift table, {}", entry.display_name),
                uplift::appraise(UpliftSource::Table(&entry), request)?,
            )
        }
        (None, None) => return Err(CliError::user("give --class or --category")),
    };

    let money = |v: f64| format_money(v, symbol, millions);
    let mut rows: Vec<[String; 2]> = vec![
        ["Uplift source:".into(), label],
        ["Base budget:".into(), money(result.base_budget)],
    ];
    if let Some(r) = result.acceptable_risk {
        rows.push([
            "Acceptable risk:".into(),
            format!(
                "{} (P{})",
                risk_label(r),
                risk_label(1.0 - r).trim_end_matches('%')
            ),
        ]);
    }
    match result.budget {
        AppraisedBudget::Point {
            uplift_unadjusted,
            uplift_applied,
            final_budget,
        } => {
            if uplift_applied != uplift_unadjusted {
                rows.push([
                    "Unadjusted uplift:".into(),
                    format!("{}%", pct(uplift_unadjusted)),
                ]);
            }
            rows.push(["Uplift:".into(), format!("{}%", pct(uplift_applied))]);
            rows.push(["Final budget:".into(), money(final_budget)]);
        }
        AppraisedBudget::Range {
            uplift_low,
            uplift_high,
            budget_low,
            budget_high,
        } => {
            rows.push([
                "Uplift range:".into(),
                format!("{}% to {}%", pct(uplift_low), pct(uplift_high)),
            ]);
            rows.push([
                "Budget range:".into(),
                format!("{}-{}", money(budget_low), money(budget_high)),
            ]);
        }
    }
    if let Some(note) = &result.adjustment_note {
        rows.push(["Adjustment:".into(), note.clone()]);
    }
    let text = columns(&rows);
    let warnings = result.warnings.clone();
    let payload = serde_json::to_value(&result).expect("json");
    Ok(Rendered {
        text,
        csv: None,
        payload,
        warnings,
    })
}

fn cmd_backtest(cli: &Cli, name: &str, percentile: f64) -> Result<Rendered, CliError> {
    let class = load(cli, name)?;
    let report = registry::backtest(&class, percentile)?;
    let (lo, hi) = report.binomial_95_interval;
    let text = format!(
        "Backtest of '{name}' at percentile {}: {}/{} actual costs within the uplifted budget (coverage {}%), exact 95% interval [{}%, {}%]\n",
        risk_label(percentile),
        report.covered,
        report.trials,
        pct(report.coverage),
        pct(lo),
        pct(hi)
    );
    Ok(Rendered {
        text,
        csv: None,
        payload: serde_json::to_value(&report).expect("json"),
        warnings: vec![],
    })
}

fn cmd_pool_check(cli: &Cli, a: &str, b: &str, alpha: f64) -> Result<Rendered, CliError> {
    let ca = load(cli, a)?;
    let cb = load(cli, b)?;
    let check = registry::pool_check(&ca, &cb, alpha)?;
    let decision = match check.decision {
        PoolDecision::Poolable => "poolable",
        PoolDecision::Distinct => "distinct",
    };
    let text = format!(
        "{a} vs {b}: KS D = {:.4}, p = {} (n = {}, {}); alpha = {} -> {decision}\n",
        check.report.statistic,
        fmt_p(check.report.p_value),
        check.report.n,
        check.report.n2.unwrap_or(0),
        alpha
    );
    Ok(Rendered {
        text,
        csv: None,
        payload: serde_json::to_value(&check).expect("json"),
        warnings: vec![],
    })
}

pub const TABLE_FOOTNOTE: &str =
    "*) Based on Mott MacDonald (2002: 32); no probability distribution available.";

fn cmd_table() -> Result<Rendered, CliError> {
    let table = uplift::builtin_table();
    let taxonomy = CategoryTaxonomy::seeded();
    let types_of = |key: &str| {
        taxonomy
            .get(key)
            .map(|c| c.project_types.join(", "))
            .unwrap_or_default()
    };

    let mut rows = vec![[
        "Category".to_string(),
        "Types of projects".to_string(),
        "50% percentile".to_string(),
        "80% percentile".to_string(),
    ]];
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "category",
        "display_name",
        "types_of_projects",
        "kind",
        "p50",
        "p80",
        "range_low",
        "range_high",
    ])
    .expect("csv");
    let mut entries = Vec::new();
    for e in &table {
        let (c50, c80) = e.percent_cells();
        rows.push([e.display_name.clone(), types_of(&e.category), c50, c80]);
        let (kind, cells) = match e.uplift {
            TableUplift::DistributionBacked {
                p50_uplift,
                p80_uplift,
            } => (
                "distribution_backed",
                [
                    p50_uplift.to_string(),
                    p80_uplift.to_string(),
                    String::new(),
                    String::new(),
                ],
            ),
            TableUplift::RangeOnly {
                range_low,
                range_high,
            } => (
                "range_only",
                [
                    String::new(),
                    String::new(),
                    range_low.to_string(),
                    range_high.to_string(),
                ],
            ),
        };
        let types = types_of(&e.category);
        let mut rec = vec![
            e.category.as_str(),
            e.display_name.as_str(),
            types.as_str(),
            kind,
        ];
        rec.extend(cells.iter().map(String::as_str));
        w.write_record(rec).expect("csv");
        let mut v = serde_json::to_value(e).expect("json");
        v["types_of_projects"] = json!(taxonomy.get(&e.category).map(|c| c.project_types.clone()));
        entries.push(v);
    }
    let mut text = columns(&rows);
    text.push('\n');
    text.push_str(TABLE_FOOTNOTE);
    text.push('\n');
    Ok(Rendered {
        text,
        csv: Some(String::from_utf8(w.into_inner().expect("csv")).expect("utf8")),
        payload: json!({ "entries": entries, "footnote": TABLE_FOOTNOTE }),
        warnings: vec![],
    })
}
