//! Flat `key = value` run configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use iriskit_core::crypts::EmdConfig;
use iriskit_core::eval::{Orientation, SentinelTable, DEFAULT_FTE_THRESHOLD};
use iriskit_core::geometry::{QualityThresholds, DEFAULT_ANGULAR_RES, DEFAULT_RADIAL_RES};
use iriskit_core::hdbif::{
    FilterBank, ShiftStrategy, DEFAULT_FILTER_COUNT, DEFAULT_FILTER_SEED, DEFAULT_FILTER_SIZE,
    DEFAULT_MAX_SHIFT,
};
use iriskit_core::identify::FailurePolicy;
use iriskit_core::matcher::{HdbifMatcher, MatcherSettings};
use iriskit_core::templates::{EmbeddingMetric, EyeLabel};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Discard,
    FailureAsNonmatch,
    Intersection,
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "discard" => Ok(Self::Discard),
            "failureasnonmatch" | "nonmatch" | "sentinel" => Ok(Self::FailureAsNonmatch),
            "intersection" => Ok(Self::Intersection),
            _ => Err(format!("unknown protocol {s:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub matcher: String,
    pub max_shift: usize,
    pub strategy: ShiftStrategy,
    pub min_bits: Option<usize>,

    pub target_width: usize,
    pub target_height: usize,
    pub radial_res: usize,
    pub angular_res: usize,
    pub quality: QualityThresholds,

    pub filter_bank: Option<PathBuf>,
    pub filter_count: usize,
    pub filter_size: usize,
    pub filter_seed: u64,
    pub metric: EmbeddingMetric,
    pub eye: EyeLabel,

    pub candidate_list_length: usize,
    pub failure_policy: FailurePolicy,
    pub parallel: bool,

    pub emd: EmdConfig,

    pub protocol: Protocol,
    pub fte_threshold: f64,
    pub fmr_targets: Vec<f64>,
    pub ranks: Vec<usize>,
    pub bins: usize,
    pub sentinels: SentinelTable,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            matcher: "hdbif".into(),
            max_shift: DEFAULT_MAX_SHIFT,
            strategy: ShiftStrategy::default(),
            min_bits: None,
            target_width: 640,
            target_height: 480,
            radial_res: DEFAULT_RADIAL_RES,
            angular_res: DEFAULT_ANGULAR_RES,
            quality: QualityThresholds::default(),
            filter_bank: None,
            filter_count: DEFAULT_FILTER_COUNT,
            filter_size: DEFAULT_FILTER_SIZE,
            filter_seed: DEFAULT_FILTER_SEED,
            metric: EmbeddingMetric::Angular,
            eye: EyeLabel::Unspecified,
            candidate_list_length: 20,
            failure_policy: FailurePolicy::Propagate,
            parallel: true,
            emd: EmdConfig::default(),
            protocol: Protocol::Discard,
            fte_threshold: DEFAULT_FTE_THRESHOLD,
            fmr_targets: vec![0.001, 0.0001],
            ranks: vec![1, 5],
            bins: 50,
            sentinels: SentinelTable::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("{key}: cannot parse {value:?}"))
}

fn positive(key: &str, value: &str) -> Result<usize, String> {
    match parse::<usize>(key, value)? {
        0 => Err(format!("{key} must be positive")),
        v => Ok(v),
    }
}

fn ratio(key: &str, value: &str) -> Result<f64, String> {
    let v: f64 = parse(key, value)?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{key} must lie in [0, 1]"))
    }
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(|s| parse(key, s.trim()))
        .collect()
}

fn boolean(key: &str, value: &str) -> Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(format!("{key}: expected a boolean, got {value:?}")),
    }
}

impl RunConfig {
    /// Applies one setting. `base` resolves relative paths.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<(), String> {
        let key = key.trim();
        let value = value.trim();
        match key {
            "matcher" => self.matcher = value.to_ascii_lowercase(),
            "max_shift" => self.max_shift = parse(key, value)?,
            "strategy" => self.strategy = value.parse()?,
            "min_bits" => self.min_bits = Some(parse(key, value)?),
            "target_width" => self.target_width = positive(key, value)?,
            "target_height" => self.target_height = positive(key, value)?,
            "radial_res" => {
                self.radial_res = parse(key, value)?;
                if self.radial_res < 2 {
                    return Err("radial_res must be at least 2".into());
                }
            }
            "angular_res" => {
                self.angular_res = parse(key, value)?;
                if self.angular_res < 4 {
                    return Err("angular_res must be at least 4".into());
                }
            }
            "min_pupil_radius" => self.quality.min_pupil_radius = parse(key, value)?,
            "min_iris_radius" => self.quality.min_iris_radius = parse(key, value)?,
            "min_alpha" => self.quality.alpha_range.0 = parse(key, value)?,
            "max_alpha" => self.quality.alpha_range.1 = parse(key, value)?,
            "min_visible_fraction" => self.quality.min_visible_fraction = ratio(key, value)?,
            "max_center_deviation" => self.quality.max_center_deviation = parse(key, value)?,
            "filter_bank" => {
                let p = base.join(value);
                if !p.is_file() {
                    return Err(format!("filter_bank: no such file {}", p.display()));
                }
                self.filter_bank = Some(p);
            }
            "filter_count" => self.filter_count = positive(key, value)?,
            "filter_size" => {
                self.filter_size = positive(key, value)?;
                if self.filter_size % 2 == 0 {
                    return Err("filter_size must be odd".into());
                }
            }
            "filter_seed" => {
                self.filter_seed = match value.strip_prefix("0x").or_else(|| value.strip_prefix("0X")) {
                    Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16)
                        .map_err(|_| format!("filter_seed: cannot parse {value:?}"))?,
                    None => parse(key, &value.replace('_', ""))?,
                }
            }
            "metric" => {
                self.metric = match value.to_ascii_lowercase().as_str() {
                    "angular" => EmbeddingMetric::Angular,
                    "euclidean" => EmbeddingMetric::Euclidean,
                    _ => return Err(format!("metric: unknown metric {value:?}")),
                }
            }
            "eye" => {
                self.eye = EyeLabel::parse(value).ok_or_else(|| format!("eye: unknown label {value:?}"))?
            }
            "candidate_list_length" => self.candidate_list_length = positive(key, value)?,
            "failure_policy" => self.failure_policy = value.parse()?,
            "parallel" => self.parallel = boolean(key, value)?,
            "size_ratio_max" => {
                self.emd.size_ratio_max = parse(key, value)?;
                if !(self.emd.size_ratio_max >= 1.0) {
                    return Err("size_ratio_max must be at least 1".into());
                }
            }
            "min_overlap" => self.emd.min_overlap = ratio(key, value)?,
            "max_pivots" => self.emd.max_pivots = Some(parse(key, value)?),
            "max_cells" => self.emd.max_cells = positive(key, value)?,
            "protocol" => self.protocol = value.parse()?,
            "fte_threshold" => self.fte_threshold = ratio(key, value)?,
            "fmr_targets" => {
                let v: Vec<f64> = list(key, value)?;
                if v.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
                    return Err("fmr_targets must lie in (0, 1]".into());
                }
                self.fmr_targets = v;
            }
            "ranks" => {
                let v: Vec<usize> = list(key, value)?;
                if v.contains(&0) {
                    return Err("ranks must be positive".into());
                }
                self.ranks = v;
            }
            "bins" => self.bins = positive(key, value)?,
            _ => {
                // sentinel.<method> = value[:similarity]
                let Some(method) = key.strip_prefix("sentinel.") else {
                    return Err(format!("unknown configuration key {key:?}"));
                };
                let (v, orientation) = match value.split_once(':') {
                    Some((v, o)) if o.eq_ignore_ascii_case("similarity") => (v, Orientation::Similarity),
                    Some((v, o)) if o.eq_ignore_ascii_case("dissimilarity") => (v, Orientation::Dissimilarity),
                    Some(_) => return Err(format!("{key}: orientation must be similarity or dissimilarity")),
                    None => (value, Orientation::Dissimilarity),
                };
                self.sentinels.insert(method, parse(key, v)?, orientation);
            }
        }
        Ok(())
    }

    /// Applies a `key=value` assignment.
    pub fn assign(&mut self, assignment: &str, base: &Path) -> Result<(), String> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got {assignment:?}"))?;
        self.set(k, v, base)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            cfg.assign(line, base)
                .map_err(|e| CliError::Validation(format!("{}:{}: {e}", path.display(), n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn matcher_settings(&self) -> MatcherSettings {
        MatcherSettings {
            hdbif: HdbifMatcher {
                max_shift: self.max_shift,
                strategy: self.strategy,
                min_bits: self.min_bits,
            },
            emd: self.emd,
        }
    }

    pub fn filter_bank(&self) -> Result<FilterBank, CliError> {
        match &self.filter_bank {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?;
                iriskit_core::hdbif::load_filter_bank(&text)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))
            }
            None => FilterBank::pseudo_random(self.filter_count, self.filter_size, self.filter_seed)
                .map_err(|e| CliError::Validation(e.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignments() {
        let mut c = RunConfig::default();
        let here = Path::new(".");
        c.assign("max_shift = 8", here).unwrap();
        c.assign("strategy=exhaustive", here).unwrap();
        c.assign("filter_seed=0x1D1F_2024", here).unwrap();
        c.assign("fmr_targets=0.01,0.001", here).unwrap();
        c.assign("sentinel.mine=0:similarity", here).unwrap();
        assert_eq!(c.max_shift, 8);
        assert_eq!(c.strategy, ShiftStrategy::Exhaustive);
        assert_eq!(c.filter_seed, DEFAULT_FILTER_SEED);
        assert_eq!(c.fmr_targets, [0.01, 0.001]);
        assert_eq!(c.sentinels.get("mine").unwrap().orientation, Orientation::Similarity);
        assert!(c.assign("nonsense=1", here).is_err());
        assert!(c.assign("bins=0", here).is_err());
        assert!(c.assign("filter_bank=/definitely/not/here", here).is_err());
    }
}
