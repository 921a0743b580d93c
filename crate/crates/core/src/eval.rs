//! Score-level evaluation: failure-handling protocols, verification and
//! identification metrics, and cross-implementation parity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::identify::Candidate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("need at least one genuine and one imposter score (got {genuine} and {imposter})")]
    InsufficientScores { genuine: usize, imposter: usize },
    #[error("the two score sets share no scored pair")]
    NoCommonPairs,
    #[error("no sentinel entry for method {0:?}")]
    UnknownMethod(String),
    #[error("histogram needs at least one bin")]
    InvalidBins,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Orientation {
    #[default]
    Dissimilarity,
    Similarity,
}

/// One comparison; `score == None` is a failed comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub method_id: String,
    pub probe_id: String,
    pub gallery_id: String,
    pub genuine: bool,
    pub score: Option<f64>,
}

/// Reads a score field. `FAIL`, NaN and exactly -1.0 all denote failure.
pub fn parse_score(field: &str) -> Result<Option<f64>, std::num::ParseFloatError> {
    let f = field.trim();
    if f.eq_ignore_ascii_case("fail") {
        return Ok(None);
    }
    let v: f64 = f.parse()?;
    Ok(if v.is_nan() || v == -1.0 { None } else { Some(v) })
}

pub fn format_score(score: Option<f64>) -> String {
    match score {
        Some(v) => format!("{v}"),
        None => "FAIL".to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sentinel {
    pub value: f64,
    pub orientation: Orientation,
}

/// Per-method failure substitutes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentinelTable {
    entries: BTreeMap<String, Sentinel>,
}

impl Default for SentinelTable {
    fn default() -> Self {
        let mut t = Self {
            entries: BTreeMap::new(),
        };
        let dis = Orientation::Dissimilarity;
        t.insert("angular", 3.2, dis);
        t.insert("euclidean", 10_000.0, dis);
        for m in ["hdbif", "osiris", "usitv3", "wci", "crypts", "crypts-emd"] {
            t.insert(m, 1.0, dis);
        }
        for m in ["dgr", "verieye"] {
            t.insert(m, 0.0, Orientation::Similarity);
        }
        t
    }
}

impl SentinelTable {
    pub fn insert(&mut self, method: &str, value: f64, orientation: Orientation) {
        self.entries
            .insert(method.to_ascii_lowercase(), Sentinel { value, orientation });
    }

    pub fn get(&self, method: &str) -> Option<Sentinel> {
        self.entries.get(&method.to_ascii_lowercase()).copied()
    }

    pub fn orientation(&self, method: &str) -> Orientation {
        self.get(method).map(|s| s.orientation).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub probe_id: String,
    pub gallery_id: String,
    pub genuine: bool,
    pub score: f64,
}

/// Scores of one method after a failure-handling protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub method_id: String,
    pub orientation: Orientation,
    pub pairs: Vec<ScoredPair>,
    /// Failed comparisons in the input, before any protocol.
    pub failed: usize,
    /// All comparisons in the input.
    pub attempted: usize,
}

impl ScoreSet {
    /// Failed share of attempted comparisons.
    pub fn fte(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.failed as f64 / self.attempted as f64
        }
    }

    pub fn genuine(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().filter(|p| p.genuine).map(|p| p.score)
    }

    pub fn imposter(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().filter(|p| !p.genuine).map(|p| p.score)
    }
}

fn by_method(records: &[ScoreRecord]) -> BTreeMap<&str, Vec<&ScoreRecord>> {
    let mut m: BTreeMap<&str, Vec<&ScoreRecord>> = BTreeMap::new();
    for r in records {
        m.entry(r.method_id.as_str()).or_default().push(r);
    }
    m
}

fn build_set(
    method: &str,
    orientation: Orientation,
    records: &[&ScoreRecord],
    mut score_of: impl FnMut(&ScoreRecord) -> Option<f64>,
) -> ScoreSet {
    ScoreSet {
        method_id: method.to_string(),
        orientation,
        pairs: records
            .iter()
            .filter_map(|r| {
                score_of(r).map(|score| ScoredPair {
                    probe_id: r.probe_id.clone(),
                    gallery_id: r.gallery_id.clone(),
                    genuine: r.genuine,
                    score,
                })
            })
            .collect(),
        failed: records.iter().filter(|r| r.score.is_none()).count(),
        attempted: records.len(),
    }
}

/// Drops failed comparisons. Orientation comes from `table`, defaulting to
/// dissimilarity for unlisted methods.
pub fn protocol_discard(records: &[ScoreRecord], table: &SentinelTable) -> BTreeMap<String, ScoreSet> {
    by_method(records)
        .into_iter()
        .map(|(m, rs)| (m.to_string(), build_set(m, table.orientation(m), &rs, |r| r.score)))
        .collect()
}

/// Replaces every failure with the method's worst score.
pub fn protocol_failure_as_nonmatch(
    records: &[ScoreRecord],
    table: &SentinelTable,
) -> Result<BTreeMap<String, ScoreSet>, EvalError> {
    by_method(records)
        .into_iter()
        .map(|(m, rs)| {
            let s = table.get(m).ok_or_else(|| EvalError::UnknownMethod(m.to_string()))?;
            Ok((
                m.to_string(),
                build_set(m, s.orientation, &rs, |r| Some(r.score.unwrap_or(s.value))),
            ))
        })
        .collect()
}

pub const DEFAULT_FTE_THRESHOLD: f64 = 0.30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionOutcome {
    pub sets: BTreeMap<String, ScoreSet>,
    /// Methods left out for exceeding the FTE threshold, with their FTE.
    pub excluded: Vec<(String, f64)>,
}

fn pair_key(r: &ScoreRecord) -> (String, String) {
    if r.probe_id <= r.gallery_id {
        (r.probe_id.clone(), r.gallery_id.clone())
    } else {
        (r.gallery_id.clone(), r.probe_id.clone())
    }
}

/// Restricts every admitted method to the unordered pairs that all admitted
/// methods scored. A method is admitted when its FTE is at most `fte_threshold`.
pub fn protocol_intersection(
    records: &[ScoreRecord],
    table: &SentinelTable,
    fte_threshold: f64,
) -> IntersectionOutcome {
    let mut excluded = Vec::new();
    let mut admitted = Vec::new();
    for (m, rs) in by_method(records) {
        let set = build_set(m, table.orientation(m), &rs, |r| r.score);
        if set.fte() > fte_threshold {
            excluded.push((m.to_string(), set.fte()));
        } else {
            admitted.push((m, rs, set));
        }
    }
    let mut common: Option<BTreeSet<(String, String)>> = None;
    for (_, rs, _) in &admitted {
        let mut ok = BTreeSet::new();
        let mut bad = BTreeSet::new();
        for r in rs {
            if r.score.is_some() { &mut ok } else { &mut bad }.insert(pair_key(r));
        }
        let accepted: BTreeSet<_> = ok.difference(&bad).cloned().collect();
        common = Some(match common {
            None => accepted,
            Some(c) => c.intersection(&accepted).cloned().collect(),
        });
    }
    let common = common.unwrap_or_default();
    let sets = admitted
        .into_iter()
        .map(|(m, rs, mut set)| {
            let keep: Vec<&ScoreRecord> = rs.into_iter().filter(|r| common.contains(&pair_key(r))).collect();
            set.pairs = build_set(m, set.orientation, &keep, |r| r.score).pairs;
            (m.to_string(), set)
        })
        .collect();
    IntersectionOutcome { sets, excluded }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fmr: f64,
    pub fnmr: f64,
}

/// Threshold sweep in dissimilarity orientation (accept when `score <= t`),
/// starting from the reject-everything point at `t = -inf`.
pub fn roc_curve(genuine: &[f64], imposter: &[f64]) -> Vec<RocPoint> {
    let mut g = genuine.to_vec();
    let mut i = imposter.to_vec();
    g.sort_by(f64::total_cmp);
    i.sort_by(f64::total_cmp);
    let (ng, ni) = (g.len() as f64, i.len() as f64);
    let mut points = vec![RocPoint {
        threshold: f64::NEG_INFINITY,
        fmr: 0.0,
        fnmr: 1.0,
    }];
    let (mut gi, mut ii) = (0, 0);
    while gi < g.len() || ii < i.len() {
        let t = match (g.get(gi), i.get(ii)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while gi < g.len() && g[gi] <= t {
            gi += 1;
        }
        while ii < i.len() && i[ii] <= t {
            ii += 1;
        }
        points.push(RocPoint {
            threshold: t,
            fmr: ii as f64 / ni,
            fnmr: (g.len() - gi) as f64 / ng,
        });
    }
    points
}

/// Area under the (FMR, 1 - FNMR) curve by the trapezoid rule.
pub fn auc(roc: &[RocPoint]) -> f64 {
    roc.windows(2)
        .map(|w| (w[1].fmr - w[0].fmr) * ((1.0 - w[0].fnmr) + (1.0 - w[1].fnmr)) / 2.0)
        .sum()
}

/// Linear interpolation at the first sign change of `FMR - FNMR`.
pub fn eer(roc: &[RocPoint]) -> f64 {
    for k in 0..roc.len() {
        let d = roc[k].fmr - roc[k].fnmr;
        if d == 0.0 {
            return roc[k].fmr;
        }
        if d > 0.0 {
            let (p, q) = (&roc[k - 1], &roc[k]);
            let dp = p.fmr - p.fnmr;
            let lambda = -dp / (d - dp);
            return p.fmr + lambda * (q.fmr - p.fmr);
        }
    }
    // The sweep ends at FMR = 1, FNMR = 0, so a sign change always exists.
    unreachable!("ROC must end at FMR = 1")
}

/// FNMR at the largest threshold whose FMR does not exceed `target`.
pub fn fnmr_at_fmr(roc: &[RocPoint], target: f64) -> f64 {
    roc.iter()
        .take_while(|p| p.fmr <= target)
        .last()
        .map_or(1.0, |p| p.fnmr)
}

fn mean_and_sample_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Decidability index with sample variances.
pub fn dprime(genuine: &[f64], imposter: &[f64]) -> f64 {
    let (mg, vg) = mean_and_sample_var(genuine);
    let (mi, vi) = mean_and_sample_var(imposter);
    let diff = (mg - mi).abs();
    let denom = ((vg + vi) / 2.0).sqrt();
    if denom == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / denom
    }
}

/// Candidate lists per probe, plus each probe's enrolled mates.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankInput {
    pub lists: BTreeMap<String, Vec<Candidate>>,
    pub mates: BTreeMap<String, BTreeSet<String>>,
}

impl RankInput {
    /// Ranks every probe's gallery by score (ties by gallery id); mates are
    /// the genuine pairs.
    pub fn from_score_set(set: &ScoreSet) -> Self {
        let mut per_probe: BTreeMap<String, Vec<(f64, String)>> = BTreeMap::new();
        let mut mates: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let sign = match set.orientation {
            Orientation::Dissimilarity => 1.0,
            Orientation::Similarity => -1.0,
        };
        for p in &set.pairs {
            per_probe
                .entry(p.probe_id.clone())
                .or_default()
                .push((sign * p.score, p.gallery_id.clone()));
            if p.genuine {
                mates.entry(p.probe_id.clone()).or_default().insert(p.gallery_id.clone());
            }
        }
        let lists = per_probe
            .into_iter()
            .map(|(probe, mut scores)| {
                scores.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
                let cands = scores
                    .into_iter()
                    .enumerate()
                    .map(|(i, (s, id))| Candidate {
                        identity_id: id,
                        score: sign * s,
                        rank: i + 1,
                    })
                    .collect();
                (probe, cands)
            })
            .collect();
        Self { lists, mates }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankAccuracy {
    pub k: usize,
    /// Denominator: probes with an enrolled mate.
    pub mated_probes: f64,
    /// Denominator: every probe with a candidate list.
    pub all_probes: f64,
}

pub fn rank_accuracy(input: &RankInput, k: usize) -> RankAccuracy {
    let mut hits = 0usize;
    let mut mated = 0usize;
    for (probe, list) in &input.lists {
        let Some(m) = input.mates.get(probe).filter(|m| !m.is_empty()) else {
            continue;
        };
        mated += 1;
        if list.iter().any(|c| c.rank <= k && m.contains(&c.identity_id)) {
            hits += 1;
        }
    }
    let ratio = |n: usize| if n == 0 { 0.0 } else { hits as f64 / n as f64 };
    RankAccuracy {
        k,
        mated_probes: ratio(mated),
        all_probes: ratio(input.lists.len()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FnmrAtFmr {
    pub fmr: f64,
    pub fnmr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method_id: String,
    pub auc: f64,
    pub eer: f64,
    pub dprime: f64,
    pub fnmr_at_fmr: Vec<FnmrAtFmr>,
    pub rank_k: Vec<RankAccuracy>,
    pub fte: f64,
    pub genuine_count: usize,
    pub imposter_count: usize,
    pub failed_count: usize,
}

pub const DEFAULT_FMR_TARGETS: [f64; 2] = [0.001, 0.0001];
pub const DEFAULT_RANKS: [usize; 2] = [1, 5];

pub fn compute_metrics(
    set: &ScoreSet,
    fmr_targets: &[f64],
    ranks: &[usize],
    rank_source: Option<&RankInput>,
) -> Result<MetricsReport, EvalError> {
    let sign = match set.orientation {
        Orientation::Dissimilarity => 1.0,
        Orientation::Similarity => -1.0,
    };
    let g: Vec<f64> = set.genuine().map(|s| sign * s).collect();
    let i: Vec<f64> = set.imposter().map(|s| sign * s).collect();
    if g.is_empty() || i.is_empty() {
        return Err(EvalError::InsufficientScores {
            genuine: g.len(),
            imposter: i.len(),
        });
    }
    let roc = roc_curve(&g, &i);
    Ok(MetricsReport {
        method_id: set.method_id.clone(),
        auc: auc(&roc),
        eer: eer(&roc),
        dprime: dprime(&g, &i),
        fnmr_at_fmr: fmr_targets
            .iter()
            .map(|&fmr| FnmrAtFmr {
                fmr,
                fnmr: fnmr_at_fmr(&roc, fmr),
            })
            .collect(),
        rank_k: rank_source
            .map(|r| ranks.iter().map(|&k| rank_accuracy(r, k)).collect())
            .unwrap_or_default(),
        fte: set.fte(),
        genuine_count: g.len(),
        imposter_count: i.len(),
        failed_count: set.failed,
    })
}

/// `0.0001` -> `"0.01"`, without float noise.
fn percent_label(rate: f64) -> String {
    let s = format!("{:.6}", 100.0 * rate);
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Aligned text table, one column per method.
pub fn metrics_table(reports: &[MetricsReport]) -> String {
    let pct = |v: f64| format!("{:.2}", 100.0 * v);
    let mut rows: Vec<(String, Vec<String>)> = vec![
        ("AUC".into(), reports.iter().map(|r| format!("{:.4}", r.auc)).collect()),
        ("EER (%)".into(), reports.iter().map(|r| pct(r.eer)).collect()),
        ("d'".into(), reports.iter().map(|r| format!("{:.4}", r.dprime)).collect()),
    ];
    let mut ks: Vec<usize> = reports.iter().flat_map(|r| r.rank_k.iter().map(|a| a.k)).collect();
    ks.sort_unstable();
    ks.dedup();
    for k in ks {
        let cell = |r: &MetricsReport, all: bool| {
            r.rank_k
                .iter()
                .find(|a| a.k == k)
                .map_or("-".into(), |a| pct(if all { a.all_probes } else { a.mated_probes }))
        };
        rows.push((format!("Rank-{k} (%)"), reports.iter().map(|r| cell(r, false)).collect()));
        rows.push((
            format!("Rank-{k} (%, all probes)"),
            reports.iter().map(|r| cell(r, true)).collect(),
        ));
    }
    let mut fmrs: Vec<f64> = reports.iter().flat_map(|r| r.fnmr_at_fmr.iter().map(|f| f.fmr)).collect();
    fmrs.sort_by(|a, b| b.total_cmp(a));
    fmrs.dedup();
    for fmr in fmrs {
        rows.push((
            format!("FNMR @ FMR={}%", percent_label(fmr)),
            reports
                .iter()
                .map(|r| {
                    r.fnmr_at_fmr
                        .iter()
                        .find(|f| f.fmr == fmr)
                        .map_or("-".into(), |f| format!("{:.4}", f.fnmr))
                })
                .collect(),
        ));
    }
    rows.push(("FTE (%)".into(), reports.iter().map(|r| pct(r.fte)).collect()));

    let header: Vec<&str> = reports.iter().map(|r| r.method_id.as_str()).collect();
    let label_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max("Metric".len());
    let col_w: Vec<usize> = (0..reports.len())
        .map(|c| rows.iter().map(|r| r.1[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let _ = write!(out, "{:<label_w$}", "Metric");
    for (h, w) in header.iter().zip(&col_w) {
        let _ = write!(out, "  {h:>w$}");
    }
    out.push('\n');
    for (label, cells) in rows {
        let _ = write!(out, "{label:<label_w$}");
        for (c, w) in cells.iter().zip(&col_w) {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push('\n');
    }
    out
}

fn serialize_r2<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if *v == f64::NEG_INFINITY {
        s.serialize_str("-Infinity")
    } else {
        s.serialize_f64(*v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParityStats {
    pub count: usize,
    pub mad: f64,
    pub max_delta: f64,
    /// Negative infinity when the reference is constant but the scores differ.
    #[serde(serialize_with = "serialize_r2")]
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParityReport {
    pub genuine: Option<ParityStats>,
    pub imposter: Option<ParityStats>,
    /// Pairs scored only by A, only by B, or failed on either side.
    pub only_in_a: usize,
    pub only_in_b: usize,
    pub failed: usize,
}

/// `(a, b, genuine)` for every pair both sides scored, keyed by
/// `(probe_id, gallery_id)`; `b` supplies the genuine flag.
pub struct MatchedPairs {
    pub pairs: Vec<(f64, f64, bool)>,
    pub only_in_a: usize,
    pub only_in_b: usize,
    pub failed: usize,
}

pub fn match_pairs(a: &[ScoreRecord], b: &[ScoreRecord]) -> MatchedPairs {
    let key = |r: &ScoreRecord| (r.probe_id.clone(), r.gallery_id.clone());
    let am: BTreeMap<_, _> = a.iter().map(|r| (key(r), r)).collect();
    let bm: BTreeMap<_, _> = b.iter().map(|r| (key(r), r)).collect();
    let mut out = MatchedPairs {
        pairs: Vec::new(),
        only_in_a: am.keys().filter(|k| !bm.contains_key(*k)).count(),
        only_in_b: bm.keys().filter(|k| !am.contains_key(*k)).count(),
        failed: 0,
    };
    for (k, rb) in &bm {
        let Some(ra) = am.get(k) else { continue };
        match (ra.score, rb.score) {
            (Some(x), Some(y)) => out.pairs.push((x, y, rb.genuine)),
            _ => out.failed += 1,
        }
    }
    out
}

fn parity_stats(pairs: &[(f64, f64)]) -> Option<ParityStats> {
    if pairs.is_empty() {
        return None;
    }
    let n = pairs.len() as f64;
    let mad = pairs.iter().map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
    let max_delta = pairs.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mean_b = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let ss_res: f64 = pairs.iter().map(|(a, b)| (a - b).powi(2)).sum();
    let ss_tot: f64 = pairs.iter().map(|(_, b)| (b - mean_b).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    Some(ParityStats {
        count: pairs.len(),
        mad,
        max_delta,
        r2,
    })
}

/// Agreement of implementation A with reference B, split by pair type.
pub fn parity(a: &[ScoreRecord], b: &[ScoreRecord]) -> Result<ParityReport, EvalError> {
    let m = match_pairs(a, b);
    if m.pairs.is_empty() {
        return Err(EvalError::NoCommonPairs);
    }
    let split = |genuine: bool| -> Vec<(f64, f64)> {
        m.pairs.iter().filter(|p| p.2 == genuine).map(|p| (p.0, p.1)).collect()
    };
    Ok(ParityReport {
        genuine: parity_stats(&split(true)),
        imposter: parity_stats(&split(false)),
        only_in_a: m.only_in_a,
        only_in_b: m.only_in_b,
        failed: m.failed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaHistogram {
    /// `bins + 1` ascending edges; the last bin is closed on the right.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl DeltaHistogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", self.edges[i], self.edges[i + 1], c);
        }
        out
    }
}

/// Histogram of `a - b` over the given deltas. A zero-width range is widened
/// to `[d - 0.5, d + 0.5]`.
pub fn delta_histogram(deltas: &[f64], bins: usize) -> Result<DeltaHistogram, EvalError> {
    if bins == 0 {
        return Err(EvalError::InvalidBins);
    }
    if deltas.is_empty() {
        return Err(EvalError::NoCommonPairs);
    }
    let mut lo = deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = deltas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = hi - lo;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + width * i as f64 / bins as f64).collect();
    edges.push(hi);
    let mut counts = vec![0; bins];
    for &d in deltas {
        let idx = (((d - lo) / width) * bins as f64).floor() as usize;
        counts[idx.min(bins - 1)] += 1;
    }
    Ok(DeltaHistogram { edges, counts })
}

pub fn emit_delta_histogram(
    a: &[ScoreRecord],
    b: &[ScoreRecord],
    bins: usize,
) -> Result<DeltaHistogram, EvalError> {
    let deltas: Vec<f64> = match_pairs(a, b).pairs.iter().map(|(x, y, _)| x - y).collect();
    delta_histogram(&deltas, bins)
}
