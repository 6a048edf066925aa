//! Optimism-bias uplifts: turning an overrun distribution and an acceptable
//! risk of overrun into the uplift a base budget needs, plus budget appraisal.
//!
//! The uplift at acceptable risk `r` is the `1 - r` quantile of the overrun
//! distribution. A budget uplifted that way stays within budget with
//! probability `1 - r` under the reference class.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::stats::{OverrunDistribution, StatsError};

/// Wording used whenever a percentile is requested from a range-only entry.
pub const NO_DISTRIBUTION: &str = "no probability distribution available";

/// Classes smaller than this get a warning when appraised.
pub const SMALL_CLASS_WARNING_N: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UpliftError {
    #[error("acceptable risk {0} must lie strictly between 0 and 1")]
    RiskOutOfRange(f64),
    #[error("risk grid is empty")]
    EmptyGrid,
    #[error("risk grid must be strictly monotone (offending value {0})")]
    NonMonotoneGrid(f64),
    #[error("base budget must be positive, got {0}")]
    NonPositiveBudget(f64),
    #[error("{category}: {NO_DISTRIBUTION}")]
    NoDistribution { category: String },
    #[error("{category}: the uplift table only carries 50% and 80% percentiles (risk 0.5 or 0.2); use a reference class for risk {risk}")]
    RiskNotTabulated { category: String, risk: f64 },
    #[error("an acceptable risk is required for this appraisal")]
    RiskRequired,
    #[error("a downward adjustment needs non-empty evidence text")]
    MissingEvidence,
    #[error("downward adjustment must be a positive fraction, got {0}")]
    InvalidAdjustment(f64),
    #[error("unknown uplift table category '{0}'")]
    UnknownCategory(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

fn check_risk(risk: f64) -> Result<(), UpliftError> {
    if risk > 0.0 && risk < 1.0 {
        Ok(())
    } else {
        Err(UpliftError::RiskOutOfRange(risk))
    }
}

/// Uplift needed so that the chance of overrunning the uplifted budget is
/// `acceptable_risk`. May be negative for classes with frequent underruns.
pub fn required_uplift(
    dist: &OverrunDistribution,
    acceptable_risk: f64,
) -> Result<f64, UpliftError> {
    check_risk(acceptable_risk)?;
    Ok(dist.quantile(1.0 - acceptable_risk)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub acceptable_risk: f64,
    pub uplift: f64,
}

/// Required uplift as a function of acceptable risk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpliftCurve {
    pub points: Vec<CurvePoint>,
    pub source_n: usize,
}

impl UpliftCurve {
    /// CSV with header `acceptable_risk,uplift`, six decimals per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("acceptable_risk,uplift\n");
        for p in &self.points {
            let _ = writeln!(out, "{:.6},{:.6}", p.acceptable_risk, p.uplift);
        }
        out
    }
}

pub fn uplift_curve(
    dist: &OverrunDistribution,
    risk_grid: &[f64],
) -> Result<UpliftCurve, UpliftError> {
    if risk_grid.is_empty() {
        return Err(UpliftError::EmptyGrid);
    }
    for r in risk_grid {
        check_risk(*r)?;
    }
    if risk_grid.len() > 1 {
        let increasing = risk_grid[1] > risk_grid[0];
        for w in risk_grid.windows(2) {
            let ok = if increasing { w[1] > w[0] } else { w[1] < w[0] };
            if !ok {
                return Err(UpliftError::NonMonotoneGrid(w[1]));
            }
        }
    }
    let points = risk_grid
        .iter()
        .map(|&r| {
            Ok(CurvePoint {
                acceptable_risk: r,
                uplift: required_uplift(dist, r)?,
            })
        })
        .collect::<Result<Vec<_>, UpliftError>>()?;
    Ok(UpliftCurve {
        points,
        source_n: dist.n(),
    })
}

/// Risk grid from 0.95 down to 0.05 in steps of 0.05.
pub fn default_risk_grid() -> Vec<f64> {
    (1..=19).rev().map(|i| i as f64 / 20.0).collect()
}

/// `base_budget * (1 + uplift)` at full precision.
pub fn apply_uplift(base_budget: f64, uplift: f64) -> Result<f64, UpliftError> {
    if !(base_budget.is_finite() && base_budget > 0.0) {
        return Err(UpliftError::NonPositiveBudget(base_budget));
    }
    Ok(base_budget * (1.0 + uplift))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TableUplift {
    DistributionBacked { p50_uplift: f64, p80_uplift: f64 },
    RangeOnly { range_low: f64, range_high: f64 },
}

/// One row of the published uplift table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpliftTableEntry {
    pub category: String,
    pub display_name: String,
    #[serde(flatten)]
    pub uplift: TableUplift,
    pub source_note: String,
}

impl UpliftTableEntry {
    pub fn is_range_only(&self) -> bool {
        matches!(self.uplift, TableUplift::RangeOnly { .. })
    }

    /// Uplift at an acceptable risk of 0.5 (P50) or 0.2 (P80).
    pub fn uplift_at(&self, acceptable_risk: f64) -> Result<f64, UpliftError> {
        check_risk(acceptable_risk)?;
        match self.uplift {
            TableUplift::RangeOnly { .. } => Err(UpliftError::NoDistribution {
                category: self.category.clone(),
            }),
            TableUplift::DistributionBacked {
                p50_uplift,
                p80_uplift,
            } => {
                if acceptable_risk == 0.5 {
                    Ok(p50_uplift)
                } else if acceptable_risk == 0.2 {
                    Ok(p80_uplift)
                } else {
                    Err(UpliftError::RiskNotTabulated {
                        category: self.category.clone(),
                        risk: acceptable_risk,
                    })
                }
            }
        }
    }

    /// Percent cell(s) as printed in the table: `15%` / `32%`, or `4-51%*`.
    pub fn percent_cells(&self) -> (String, String) {
        fn pct(v: f64) -> String {
            format!("{}", (v * 100.0).round() as i64)
        }
        match self.uplift {
            TableUplift::DistributionBacked {
                p50_uplift,
                p80_uplift,
            } => (
                format!("{}%", pct(p50_uplift)),
                format!("{}%", pct(p80_uplift)),
            ),
            TableUplift::RangeOnly {
                range_low,
                range_high,
            } => (
                format!("{}-{}%*", pct(range_low), pct(range_high)),
                String::new(),
            ),
        }
    }
}

const DISTRIBUTION_NOTE: &str = "empirical reference class distribution";
const RANGE_NOTE: &str = "Mott MacDonald (2002: 32); no probability distribution available";

/// Capital expenditure optimism-bias uplifts used by the UK Department for
/// Transport (constant prices).
pub fn builtin_table() -> Vec<UpliftTableEntry> {
    let backed = |key: &str, name: &str, p50: f64, p80: f64| UpliftTableEntry {
        category: key.into(),
        display_name: name.into(),
        uplift: TableUplift::DistributionBacked {
            p50_uplift: p50,
            p80_uplift: p80,
        },
        source_note: DISTRIBUTION_NOTE.into(),
    };
    let ranged = |key: &str, name: &str, low: f64, high: f64| UpliftTableEntry {
        category: key.into(),
        display_name: name.into(),
        uplift: TableUplift::RangeOnly {
            range_low: low,
            range_high: high,
        },
        source_note: RANGE_NOTE.into(),
    };
    vec![
        backed("roads", "Roads", 0.15, 0.32),
        backed("rail", "Rail", 0.40, 0.57),
        backed("fixed_links", "Fixed links", 0.23, 0.55),
        ranged("building_projects", "Building projects", 0.04, 0.51),
        ranged("it_projects", "IT projects", 0.10, 2.00),
        ranged("standard_civil", "Standard civil engineering", 0.03, 0.44),
        ranged(
            "non_standard_civil",
            "Non-standard civil engineering",
            0.06,
            0.66,
        ),
    ]
}

pub(crate) fn normalize_key(s: &str) -> String {
    s.trim()
        .to_lowercase()
        .chars()
        .map(|c| if c == ' ' || c == '-' { '_' } else { c })
        .collect()
}

/// Finds a table row by category key or display name (case-insensitive).
pub fn lookup(table: &[UpliftTableEntry], category: &str) -> Result<UpliftTableEntry, UpliftError> {
    let wanted = normalize_key(category);
    table
        .iter()
        .find(|e| normalize_key(&e.category) == wanted || normalize_key(&e.display_name) == wanted)
        .cloned()
        .ok_or_else(|| UpliftError::UnknownCategory(category.to_string()))
}

/// Where the uplift for an appraisal comes from.
#[derive(Debug, Clone, Copy)]
pub enum UpliftSource<'a> {
    Distribution(&'a OverrunDistribution),
    Table(&'a UpliftTableEntry),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectStage {
    /// Business case submitted (decision to build); uplifts are calibrated here.
    #[default]
    BusinessCase,
    /// Earlier than the business case; risks and uplifts run higher.
    PreBusinessCase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DownwardAdjustment {
    pub amount: f64,
    pub evidence: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppraisalRequest {
    pub base_budget: f64,
    pub acceptable_risk: Option<f64>,
    pub adjustment: Option<DownwardAdjustment>,
    pub stage: ProjectStage,
}

impl AppraisalRequest {
    pub fn new(base_budget: f64, acceptable_risk: Option<f64>) -> Self {
        Self {
            base_budget,
            acceptable_risk,
            adjustment: None,
            stage: ProjectStage::BusinessCase,
        }
    }

    pub fn with_adjustment(mut self, amount: f64, evidence: impl Into<String>) -> Self {
        self.adjustment = Some(DownwardAdjustment {
            amount,
            evidence: evidence.into(),
        });
        self
    }

    pub fn at_stage(mut self, stage: ProjectStage) -> Self {
        self.stage = stage;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AppraisedBudget {
    Point {
        /// Uplift before any downward adjustment.
        uplift_unadjusted: f64,
        uplift_applied: f64,
        final_budget: f64,
    },
    Range {
        uplift_low: f64,
        uplift_high: f64,
        budget_low: f64,
        budget_high: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppraisalResult {
    pub base_budget: f64,
    pub acceptable_risk: Option<f64>,
    #[serde(flatten)]
    pub budget: AppraisedBudget,
    pub adjustment_note: Option<String>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl AppraisalResult {
    pub fn final_budget(&self) -> Option<f64> {
        match self.budget {
            AppraisedBudget::Point { final_budget, .. } => Some(final_budget),
            AppraisedBudget::Range { .. } => None,
        }
    }

    pub fn uplift_unadjusted(&self) -> Option<f64> {
        match self.budget {
            AppraisedBudget::Point {
                uplift_unadjusted, ..
            } => Some(uplift_unadjusted),
            AppraisedBudget::Range { .. } => None,
        }
    }

    pub fn uplift_applied(&self) -> Option<f64> {
        match self.budget {
            AppraisedBudget::Point { uplift_applied, .. } => Some(uplift_applied),
            AppraisedBudget::Range { .. } => None,
        }
    }
}

/// Lowers a positive uplift by `amount`, never below zero. Non-positive
/// uplifts are left alone.
fn adjust_down(uplift: f64, amount: f64) -> f64 {
    if uplift > 0.0 {
        (uplift - amount).max(0.0)
    } else {
        uplift
    }
}

pub fn appraise(
    source: UpliftSource<'_>,
    request: &AppraisalRequest,
) -> Result<AppraisalResult, UpliftError> {
    let base = request.base_budget;
    if !(base.is_finite() && base > 0.0) {
        return Err(UpliftError::NonPositiveBudget(base));
    }
    if let Some(adj) = &request.adjustment {
        if !(adj.amount.is_finite() && adj.amount > 0.0) {
            return Err(UpliftError::InvalidAdjustment(adj.amount));
        }
        if adj.evidence.trim().is_empty() {
            return Err(UpliftError::MissingEvidence);
        }
    }
    let adjustment = request.adjustment.as_ref().map_or(0.0, |a| a.amount);
    let adjustment_note = request.adjustment.as_ref().map(|a| {
        format!(
            "uplift reduced by {:.1} percentage points; evidence: {}",
            a.amount * 100.0,
            a.evidence.trim()
        )
    });

    let mut warnings = Vec::new();
    if request.stage == ProjectStage::PreBusinessCase {
        warnings.push(
            "project is before the business case stage; uplifts are calibrated at the decision to build and are likely underestimated here"
                .to_string(),
        );
    }

    let budget = match source {
        UpliftSource::Table(entry) => match entry.uplift {
            TableUplift::RangeOnly {
                range_low,
                range_high,
            } => {
                if request.acceptable_risk.is_some() {
                    return Err(UpliftError::NoDistribution {
                        category: entry.category.clone(),
                    });
                }
                let low = adjust_down(range_low, adjustment);
                let high = adjust_down(range_high, adjustment);
                warnings.push(format!(
                    "{}: {NO_DISTRIBUTION}; reporting the published uplift range",
                    entry.category
                ));
                AppraisedBudget::Range {
                    uplift_low: low,
                    uplift_high: high,
                    budget_low: apply_uplift(base, low)?,
                    budget_high: apply_uplift(base, high)?,
                }
            }
            TableUplift::DistributionBacked { .. } => {
                let risk = request.acceptable_risk.ok_or(UpliftError::RiskRequired)?;
                let raw = entry.uplift_at(risk)?;
                point(base, raw, adjustment, &mut warnings)?
            }
        },
        UpliftSource::Distribution(dist) => {
            let risk = request.acceptable_risk.ok_or(UpliftError::RiskRequired)?;
            let raw = required_uplift(dist, risk)?;
            if dist.n() < SMALL_CLASS_WARNING_N {
                warnings.push(format!(
                    "small reference class (n = {}); percentile estimates are unstable",
                    dist.n()
                ));
            }
            point(base, raw, adjustment, &mut warnings)?
        }
    };

    Ok(AppraisalResult {
        base_budget: base,
        acceptable_risk: request.acceptable_risk,
        budget,
        adjustment_note,
        warnings,
    })
}

fn point(
    base: f64,
    raw: f64,
    adjustment: f64,
    warnings: &mut Vec<String>,
) -> Result<AppraisedBudget, UpliftError> {
    if raw < 0.0 {
        warnings.push(format!(
            "negative uplift ({:.1}%): the reference class underruns at this risk level",
            raw * 100.0
        ));
    }
    let applied = if adjustment > 0.0 {
        adjust_down(raw, adjustment)
    } else {
        raw
    };
    Ok(AppraisedBudget::Point {
        uplift_unadjusted: raw,
        uplift_applied: applied,
        final_budget: apply_uplift(base, applied)?,
    })
}
