//! File-backed store of reference classes, plus the checks that decide
//! whether classes may be pooled and whether a class is calibrated.
//!
//! A store is one directory holding `manifest.json` and one CSV per class.
//! Class files are named after their content hash, so a new version never
//! overwrites the file the manifest currently points at; the manifest itself
//! is replaced by an atomic rename. A reader therefore sees either the old
//! or the new class, never a torn one.

mod taxonomy;

pub use taxonomy::{Category, CategoryTaxonomy};

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{self, DatasetError, Metric, ReferenceClass};
use crate::stats::{self, special, OverrunDistribution, StatsError, TestReport};
use crate::uplift::apply_uplift;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;
pub const DEFAULT_POOL_ALPHA: f64 = 0.05;
pub const MIN_POOL_N: usize = stats::MIN_KS_N;
pub const MIN_BACKTEST_N: usize = 10;

/// Relative slack when comparing an actual cost with an uplifted budget;
/// absorbs the rounding in `forecast * (1 + actual / forecast - 1)`.
pub const COVERAGE_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("class '{0}' already exists (pass overwrite to replace it)")]
    Collision(String),
    #[error("unknown class '{0}'")]
    UnknownClass(String),
    #[error("corrupt store: {0}")]
    Corrupt(String),
    #[error("metric mismatch: '{a}' is {metric_a}, '{b}' is {metric_b}")]
    MetricMismatch {
        a: String,
        metric_a: Metric,
        b: String,
        metric_b: Metric,
    },
    #[error("class '{name}' has {got} completed records; at least {needed} required")]
    Undersized {
        name: String,
        needed: usize,
        got: usize,
    },
    #[error("{what} {value} must lie strictly between 0 and 1")]
    OutOfUnitInterval { what: &'static str, value: f64 },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl RegistryError {
    pub fn is_corruption(&self) -> bool {
        matches!(self, RegistryError::Corrupt(_))
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RegistryError + '_ {
    move |source| RegistryError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub category: String,
    pub metric: Metric,
    pub count: usize,
    pub file: String,
    pub sha256: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source_note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryManifest {
    pub version: u32,
    pub classes: Vec<ManifestEntry>,
}

impl Default for RegistryManifest {
    fn default() -> Self {
        Self {
            version: MANIFEST_VERSION,
            classes: Vec::new(),
        }
    }
}

impl RegistryManifest {
    pub fn get(&self, name: &str) -> Option<&ManifestEntry> {
        self.classes.iter().find(|c| c.name == name)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `contents` to `path` through a temp file in the same directory.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), RegistryError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(contents).map_err(io_err(tmp.path()))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| RegistryError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(not(test), allow(dead_code))]
enum Fault {
    /// Stop after the class file is in place but before the manifest moves.
    AfterClassFile,
}

/// Handle on a store directory. Cheap to create; holds no open files.
#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    /// Opens a store, creating the directory and an empty manifest if needed.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, RegistryError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        let store = Self { root };
        if !store.manifest_path().exists() {
            store.write_manifest(&RegistryManifest::default())?;
        }
        Ok(store)
    }

    /// Opens an existing store without creating anything.
    pub fn open_existing(root: impl Into<PathBuf>) -> Result<Self, RegistryError> {
        let store = Self { root: root.into() };
        if !store.manifest_path().is_file() {
            return Err(RegistryError::Io {
                path: store.manifest_path(),
                source: io::Error::new(io::ErrorKind::NotFound, "no registry manifest"),
            });
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn manifest_path(&self) -> PathBuf {
        self.root.join(MANIFEST_FILE)
    }

    pub fn manifest(&self) -> Result<RegistryManifest, RegistryError> {
        let path = self.manifest_path();
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let manifest: RegistryManifest = serde_json::from_str(&text)
            .map_err(|e| RegistryError::Corrupt(format!("{}: {e}", path.display())))?;
        if manifest.version != MANIFEST_VERSION {
            return Err(RegistryError::Corrupt(format!(
                "unsupported manifest version {}",
                manifest.version
            )));
        }
        Ok(manifest)
    }

    fn write_manifest(&self, manifest: &RegistryManifest) -> Result<(), RegistryError> {
        let mut json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        json.push('\n');
        write_atomic(&self.manifest_path(), json.as_bytes())
    }

    /// Saves a class and returns the path of its CSV file.
    pub fn save_class(
        &self,
        class: &ReferenceClass,
        overwrite: bool,
    ) -> Result<PathBuf, RegistryError> {
        self.save_inner(class, overwrite, None)
    }

    fn save_inner(
        &self,
        class: &ReferenceClass,
        overwrite: bool,
        fault: Option<Fault>,
    ) -> Result<PathBuf, RegistryError> {
        let mut manifest = self.manifest()?;
        let previous = manifest.get(class.name()).cloned();
        if previous.is_some() && !overwrite {
            return Err(RegistryError::Collision(class.name().to_string()));
        }

        let csv = dataset::write_records(class.records());
        let digest = sha256_hex(csv.as_bytes());
        let file = format!("{}.{}.csv", class.name(), &digest[..12]);
        let path = self.root.join(&file);
        write_atomic(&path, csv.as_bytes())?;

        if fault == Some(Fault::AfterClassFile) {
            return Err(RegistryError::Io {
                path,
                source: io::Error::new(io::ErrorKind::Interrupted, "injected fault"),
            });
        }

        let entry = ManifestEntry {
            name: class.name().to_string(),
            category: class.category().to_string(),
            metric: class.metric(),
            count: class.len(),
            file: file.clone(),
            sha256: digest,
            source_note: class.source_note().to_string(),
        };
        match manifest.classes.iter_mut().find(|c| c.name == entry.name) {
            Some(slot) => *slot = entry,
            None => manifest.classes.push(entry),
        }
        self.write_manifest(&manifest)?;

        if let Some(old) = previous {
            if old.file != file {
                // best effort; an orphaned file is harmless
                let _ = fs::remove_file(self.root.join(old.file));
            }
        }
        Ok(path)
    }

    pub fn load_class(&self, name: &str) -> Result<ReferenceClass, RegistryError> {
        let manifest = self.manifest()?;
        let entry = manifest
            .get(name)
            .ok_or_else(|| RegistryError::UnknownClass(name.to_string()))?;
        self.load_entry(entry)
    }

    fn load_entry(&self, entry: &ManifestEntry) -> Result<ReferenceClass, RegistryError> {
        if entry.file.contains(['/', '\\']) || entry.file.starts_with('.') {
            return Err(RegistryError::Corrupt(format!(
                "class '{}' points outside the store: {}",
                entry.name, entry.file
            )));
        }
        let path = self.root.join(&entry.file);
        let bytes = fs::read(&path).map_err(|e| {
            if e.kind() == io::ErrorKind::NotFound {
                RegistryError::Corrupt(format!(
                    "class '{}': missing file {}",
                    entry.name,
                    path.display()
                ))
            } else {
                io_err(&path)(e)
            }
        })?;
        let actual = sha256_hex(&bytes);
        if actual != entry.sha256 {
            return Err(RegistryError::Corrupt(format!(
                "checksum mismatch for {} (expected {}, found {actual})",
                path.display(),
                entry.sha256
            )));
        }
        let text = String::from_utf8(bytes)
            .map_err(|_| RegistryError::Corrupt(format!("{} is not UTF-8", path.display())))?;
        let parsed = dataset::parse_records(&text)
            .map_err(|e| RegistryError::Corrupt(format!("{}: {e}", path.display())))?;
        if let Some(d) = parsed.diagnostics.first() {
            return Err(RegistryError::Corrupt(format!("{}: {d}", path.display())));
        }
        if parsed.records.len() != entry.count {
            return Err(RegistryError::Corrupt(format!(
                "{}: manifest lists {} records, file has {}",
                path.display(),
                entry.count,
                parsed.records.len()
            )));
        }
        ReferenceClass::new(
            entry.name.clone(),
            entry.category.clone(),
            entry.metric,
            parsed.records,
            entry.source_note.clone(),
        )
        .map_err(|e| RegistryError::Corrupt(format!("class '{}': {e}", entry.name)))
    }

    /// Checks every class file against the manifest.
    pub fn verify(&self) -> Result<usize, RegistryError> {
        let manifest = self.manifest()?;
        for entry in &manifest.classes {
            self.load_entry(entry)?;
        }
        Ok(manifest.classes.len())
    }
}

/// Free-function form of [`Store::save_class`]; opens (and if needed
/// initialises) the store at `store_path`.
pub fn save_class(
    class: &ReferenceClass,
    store_path: &Path,
    overwrite: bool,
) -> Result<PathBuf, RegistryError> {
    Store::open(store_path)?.save_class(class, overwrite)
}

/// Free-function form of [`Store::load_class`].
pub fn load_class(name: &str, store_path: &Path) -> Result<ReferenceClass, RegistryError> {
    Store::open_existing(store_path)?.load_class(name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolDecision {
    Poolable,
    Distinct,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoolCheck {
    pub decision: PoolDecision,
    pub alpha: f64,
    pub report: TestReport,
}

fn completed_overruns(class: &ReferenceClass, needed: usize) -> Result<Vec<f64>, RegistryError> {
    let got = class.completed_count();
    if got < needed {
        return Err(RegistryError::Undersized {
            name: class.name().to_string(),
            needed,
            got,
        });
    }
    Ok(class.overruns()?)
}

/// Two-sample KS comparison of the classes' overruns; poolable iff `p >= alpha`.
pub fn pool_check(
    a: &ReferenceClass,
    b: &ReferenceClass,
    alpha: f64,
) -> Result<PoolCheck, RegistryError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RegistryError::OutOfUnitInterval {
            what: "alpha",
            value: alpha,
        });
    }
    if a.metric() != b.metric() {
        return Err(RegistryError::MetricMismatch {
            a: a.name().to_string(),
            metric_a: a.metric(),
            b: b.name().to_string(),
            metric_b: b.metric(),
        });
    }
    let xa = completed_overruns(a, MIN_POOL_N)?;
    let xb = completed_overruns(b, MIN_POOL_N)?;
    let report = stats::ks_two_sample(&xa, &xb)?;
    let decision = if report.p_value >= alpha {
        PoolDecision::Poolable
    } else {
        PoolDecision::Distinct
    };
    Ok(PoolCheck {
        decision,
        alpha,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestReport {
    pub percentile: f64,
    pub trials: usize,
    pub covered: usize,
    pub coverage: f64,
    /// Exact (Clopper-Pearson) 95% interval for the coverage.
    pub binomial_95_interval: (f64, f64),
}

/// Exact two-sided binomial confidence interval at level `1 - alpha`.
pub fn clopper_pearson(successes: usize, trials: usize, alpha: f64) -> (f64, f64) {
    let (k, n) = (successes as f64, trials as f64);
    let low = if successes == 0 {
        0.0
    } else {
        special::beta_inc_inv(k, n - k + 1.0, alpha / 2.0)
    };
    let high = if successes == trials {
        1.0
    } else {
        special::beta_inc_inv(k + 1.0, n - k, 1.0 - alpha / 2.0)
    };
    (low, high)
}

/// Leave-one-out check of the percentile budget: for each completed record,
/// uplift its forecast using the distribution of all other records and see
/// whether the actual value stays within it.
pub fn backtest(class: &ReferenceClass, percentile: f64) -> Result<BacktestReport, RegistryError> {
    if !(percentile > 0.0 && percentile < 1.0) {
        return Err(RegistryError::OutOfUnitInterval {
            what: "percentile",
            value: percentile,
        });
    }
    let overruns = completed_overruns(class, MIN_BACKTEST_N)?;
    let completed: Vec<_> = class.completed().collect();
    let mut others = Vec::with_capacity(overruns.len() - 1);
    let mut covered = 0;
    for (i, record) in completed.iter().enumerate() {
        others.clear();
        others.extend(
            overruns
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, v)| *v),
        );
        let dist = OverrunDistribution::new(&others)?;
        let uplift = dist.quantile(percentile)?;
        let budget = apply_uplift(record.forecast_value(), uplift).expect("forecast is positive");
        let actual = record.actual_value().expect("completed record");
        if actual <= budget + COVERAGE_REL_TOL * budget.abs() {
            covered += 1;
        }
    }
    let trials = completed.len();
    Ok(BacktestReport {
        percentile,
        trials,
        covered,
        coverage: covered as f64 / trials as f64,
        binomial_95_interval: clopper_pearson(covered, trials, 0.05),
    })
}
