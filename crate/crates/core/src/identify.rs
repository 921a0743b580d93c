//! Gallery search: homologous pairing, median aggregation and ranked
//! candidate lists.

use std::cmp::Ordering;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matcher::{MatchError, Matcher, ProbeScorer};
use crate::templates::{EyeLabel, Template};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IdentifyError {
    #[error("gallery is empty")]
    EmptyGallery,
    #[error("probe has no templates")]
    EmptyProbe,
    #[error("gallery entry {0:?} has no templates")]
    EmptyEntry(String),
    #[error("no admissible probe/gallery eye pairing")]
    NoComparablePair,
    #[error("every admissible comparison failed: {0}")]
    AllComparisonsFailed(MatchError),
    #[error("cannot aggregate an empty or non-finite score list")]
    InvalidScores,
    #[error(transparent)]
    Match(#[from] MatchError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalleryEntry {
    pub identity_id: String,
    pub templates: Vec<Template>,
}

impl GalleryEntry {
    pub fn new(identity_id: impl Into<String>, templates: Vec<Template>) -> Result<Self, IdentifyError> {
        let identity_id = identity_id.into();
        if templates.is_empty() {
            return Err(IdentifyError::EmptyEntry(identity_id));
        }
        Ok(Self {
            identity_id,
            templates,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub identity_id: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FailurePolicy {
    /// Identities without a usable comparison are left out and reported.
    #[default]
    Propagate,
    /// Such identities receive the matcher's failure sentinel.
    Sentinel,
}

impl std::str::FromStr for FailurePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "propagate" => Ok(Self::Propagate),
            "sentinel" => Ok(Self::Sentinel),
            _ => Err(format!("unknown failure policy {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub candidate_list_length: usize,
    pub failure_policy: FailurePolicy,
    /// Score identities on the rayon pool.
    pub parallel: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            candidate_list_length: 20,
            failure_policy: FailurePolicy::default(),
            parallel: true,
        }
    }
}

/// Left never meets Right; Unspecified pairs with anything.
pub fn admissible(probe: EyeLabel, gallery: EyeLabel) -> bool {
    !matches!(
        (probe, gallery),
        (EyeLabel::Left, EyeLabel::Right) | (EyeLabel::Right, EyeLabel::Left)
    )
}

pub fn pair_comparisons<'a>(
    probe: &'a [Template],
    entry: &'a GalleryEntry,
) -> Result<Vec<(&'a Template, &'a Template)>, IdentifyError> {
    if probe.is_empty() {
        return Err(IdentifyError::EmptyProbe);
    }
    if entry.templates.is_empty() {
        return Err(IdentifyError::EmptyEntry(entry.identity_id.clone()));
    }
    let pairs: Vec<_> = probe
        .iter()
        .flat_map(|p| {
            entry
                .templates
                .iter()
                .filter(|g| admissible(p.eye, g.eye))
                .map(move |g| (p, g))
        })
        .collect();
    if pairs.is_empty() {
        return Err(IdentifyError::NoComparablePair);
    }
    Ok(pairs)
}

/// Median; the mean of the two middle values for even counts.
pub fn aggregate_identity(scores: &[f64]) -> Result<f64, IdentifyError> {
    if scores.is_empty() || scores.iter().any(|s| !s.is_finite()) {
        return Err(IdentifyError::InvalidScores);
    }
    let mut s = scores.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    Ok(if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    })
}

/// A probe bound to a matcher, ready to score many gallery entries.
pub struct PreparedProbe<'a> {
    templates: Vec<(EyeLabel, Box<dyn ProbeScorer + 'a>)>,
}

impl<'a> PreparedProbe<'a> {
    pub fn new(probe: &'a [Template], matcher: &'a dyn Matcher) -> Result<Self, IdentifyError> {
        if probe.is_empty() {
            return Err(IdentifyError::EmptyProbe);
        }
        let templates = probe
            .iter()
            .map(|t| Ok((t.eye, matcher.prepare(&t.payload)?)))
            .collect::<Result<_, MatchError>>()?;
        Ok(Self { templates })
    }

    /// Aggregated score of one identity.
    ///
    /// An Unspecified probe template contributes the minimum over its
    /// admissible gallery templates; a Left or Right probe template
    /// contributes every admissible comparison. The median of all
    /// contributions is the identity score. Failed comparisons are skipped.
    pub fn score_entry(&self, entry: &GalleryEntry) -> Result<f64, IdentifyError> {
        let mut contributions = Vec::new();
        let mut any_pair = false;
        let mut last_err = None;
        for (eye, scorer) in &self.templates {
            let mut best: Option<f64> = None;
            for g in entry.templates.iter().filter(|g| admissible(*eye, g.eye)) {
                any_pair = true;
                match scorer.score(&g.payload) {
                    Ok(s) if *eye == EyeLabel::Unspecified => {
                        best = Some(best.map_or(s, |b| b.min(s)));
                    }
                    Ok(s) => contributions.push(s),
                    Err(e) => last_err = Some(e),
                }
            }
            contributions.extend(best);
        }
        if !any_pair {
            return Err(IdentifyError::NoComparablePair);
        }
        if contributions.is_empty() {
            return Err(IdentifyError::AllComparisonsFailed(
                last_err.expect("admissible pairs exist, so something failed"),
            ));
        }
        aggregate_identity(&contributions)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedIdentity {
    pub identity_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub candidates: Vec<Candidate>,
    /// Identities with no usable comparison, under either policy.
    pub failed: Vec<FailedIdentity>,
}

fn by_score_then_id(a: &(f64, &str), b: &(f64, &str)) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1))
}

pub fn search_1n(
    probe: &[Template],
    gallery: &[GalleryEntry],
    matcher: &dyn Matcher,
    cfg: &SearchConfig,
) -> Result<SearchOutcome, IdentifyError> {
    if gallery.is_empty() {
        return Err(IdentifyError::EmptyGallery);
    }
    let prepared = PreparedProbe::new(probe, matcher)?;
    let results: Vec<Result<f64, IdentifyError>> = if cfg.parallel {
        gallery.par_iter().map(|e| prepared.score_entry(e)).collect()
    } else {
        gallery.iter().map(|e| prepared.score_entry(e)).collect()
    };

    let mut scored: Vec<(f64, &str)> = Vec::with_capacity(gallery.len());
    let mut failed = Vec::new();
    for (entry, result) in gallery.iter().zip(results) {
        match result {
            Ok(s) => scored.push((s, &entry.identity_id)),
            Err(e) => {
                failed.push(FailedIdentity {
                    identity_id: entry.identity_id.clone(),
                    reason: e.to_string(),
                });
                if cfg.failure_policy == FailurePolicy::Sentinel {
                    scored.push((matcher.failure_sentinel(), &entry.identity_id));
                }
            }
        }
    }
    let keep = cfg.candidate_list_length.min(scored.len());
    if keep < scored.len() {
        scored.select_nth_unstable_by(keep, by_score_then_id);
        scored.truncate(keep);
    }
    scored.sort_by(by_score_then_id);
    failed.sort_by(|a, b| a.identity_id.cmp(&b.identity_id));
    Ok(SearchOutcome {
        candidates: scored
            .into_iter()
            .enumerate()
            .map(|(i, (score, id))| Candidate {
                identity_id: id.to_string(),
                score,
                rank: i + 1,
            })
            .collect(),
        failed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TimedOperation {
    TemplateCreation,
    Search,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingEvent {
    pub operation: TimedOperation,
    pub label: String,
    pub seconds: f64,
}

impl TimingEvent {
    pub fn new(operation: TimedOperation, label: impl Into<String>, elapsed: Duration) -> Self {
        Self {
            operation,
            label: label.into(),
            seconds: elapsed.as_secs_f64(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingBudgets {
    pub creation_seconds: f64,
    pub search_seconds: f64,
}

impl Default for TimingBudgets {
    fn default() -> Self {
        Self {
            creation_seconds: 1.5,
            search_seconds: 25.0,
        }
    }
}

impl TimingBudgets {
    pub fn budget(&self, op: TimedOperation) -> f64 {
        match op {
            TimedOperation::TemplateCreation => self.creation_seconds,
            TimedOperation::Search => self.search_seconds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedResult {
    pub operation: TimedOperation,
    pub label: String,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub operation: TimedOperation,
    pub count: usize,
    pub failures: usize,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimingReport {
    pub events: Vec<TimedResult>,
    pub summaries: Vec<TimingSummary>,
}

impl TimingReport {
    pub fn all_pass(&self) -> bool {
        self.events.iter().all(|e| e.pass)
    }
}

/// Nearest-rank percentile of sorted data.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn timing_report(log: &[TimingEvent], budgets: &TimingBudgets) -> TimingReport {
    let events: Vec<TimedResult> = log
        .iter()
        .map(|e| {
            let budget = budgets.budget(e.operation);
            TimedResult {
                operation: e.operation,
                label: e.label.clone(),
                seconds: e.seconds,
                budget_seconds: budget,
                pass: e.seconds <= budget,
            }
        })
        .collect();
    let summaries = [TimedOperation::TemplateCreation, TimedOperation::Search]
        .into_iter()
        .filter_map(|op| {
            let mut t: Vec<f64> = events
                .iter()
                .filter(|e| e.operation == op)
                .map(|e| e.seconds)
                .collect();
            if t.is_empty() {
                return None;
            }
            t.sort_by(f64::total_cmp);
            Some(TimingSummary {
                operation: op,
                count: t.len(),
                failures: events.iter().filter(|e| e.operation == op && !e.pass).count(),
                p50: percentile(&t, 50.0),
                p90: percentile(&t, 90.0),
                p99: percentile(&t, 99.0),
                max: t[t.len() - 1],
            })
        })
        .collect();
    TimingReport { events, summaries }
}
