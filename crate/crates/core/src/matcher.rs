//! Matchers behind a common trait, registered by name.
//!
//! Every built-in matcher emits a dissimilarity: lower is a better match.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::crypts::{self, EmdConfig};
use crate::embedding::{self, EmbeddingError};
use crate::hdbif::{self, HdbifError, PreparedCode, ShiftStrategy};
use crate::templates::{BinaryCodeTemplate, Payload, TemplateKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error(transparent)]
    Hdbif(#[from] HdbifError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("matcher {matcher} expects {expected:?} templates, got {actual:?}")]
    WrongKind {
        matcher: String,
        expected: TemplateKind,
        actual: TemplateKind,
    },
    #[error("unknown matcher {0:?}")]
    UnknownMatcher(String),
}

fn kind_of(p: &Payload) -> TemplateKind {
    match p {
        Payload::Embedding(_) => TemplateKind::Embedding,
        Payload::BinaryCode(_) => TemplateKind::BinaryCode,
        Payload::CryptMask(_) => TemplateKind::CryptMask,
    }
}

/// A probe bound to a matcher, possibly with precomputed state.
pub trait ProbeScorer: Send + Sync {
    fn score(&self, reference: &Payload) -> Result<f64, MatchError>;
}

pub trait Matcher: Send + Sync {
    /// Registry key, also used as the method id in score files.
    fn name(&self) -> &str;

    fn kind(&self) -> TemplateKind;

    /// Worst score, substituted when a comparison fails.
    fn failure_sentinel(&self) -> f64;

    fn compare(&self, probe: &Payload, reference: &Payload) -> Result<f64, MatchError>;

    fn check_kind(&self, p: &Payload) -> Result<(), MatchError> {
        if kind_of(p) != self.kind() {
            return Err(MatchError::WrongKind {
                matcher: self.name().to_string(),
                expected: self.kind(),
                actual: kind_of(p),
            });
        }
        Ok(())
    }

    /// Binds a probe for repeated comparisons. The default just forwards to
    /// [`Matcher::compare`].
    fn prepare<'a>(&'a self, probe: &'a Payload) -> Result<Box<dyn ProbeScorer + 'a>, MatchError> {
        self.check_kind(probe)?;
        Ok(Box::new(Unprepared { matcher: self, probe }))
    }
}

struct Unprepared<'a, M: ?Sized> {
    matcher: &'a M,
    probe: &'a Payload,
}

impl<M: Matcher + ?Sized> ProbeScorer for Unprepared<'_, M> {
    fn score(&self, reference: &Payload) -> Result<f64, MatchError> {
        self.matcher.compare(self.probe, reference)
    }
}

impl fmt::Debug for dyn Matcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matcher({})", self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HdbifMatcher {
    pub max_shift: usize,
    pub strategy: ShiftStrategy,
    /// Overlap requirement in compared bits; `None` uses one percent of the code.
    pub min_bits: Option<usize>,
}

impl Default for HdbifMatcher {
    fn default() -> Self {
        Self {
            max_shift: hdbif::DEFAULT_MAX_SHIFT,
            strategy: ShiftStrategy::default(),
            min_bits: None,
        }
    }
}

impl HdbifMatcher {
    fn code<'p>(&self, p: &'p Payload) -> Result<&'p BinaryCodeTemplate, MatchError> {
        match p {
            Payload::BinaryCode(c) => Ok(c),
            other => Err(MatchError::WrongKind {
                matcher: self.name().to_string(),
                expected: TemplateKind::BinaryCode,
                actual: kind_of(other),
            }),
        }
    }

    fn min_bits_for(&self, code: &BinaryCodeTemplate) -> usize {
        self.min_bits.unwrap_or_else(|| hdbif::default_min_bits(code))
    }
}

struct PreparedHdbif {
    code: PreparedCode,
    strategy: ShiftStrategy,
    min_bits: usize,
    name: &'static str,
}

impl ProbeScorer for PreparedHdbif {
    fn score(&self, reference: &Payload) -> Result<f64, MatchError> {
        let Payload::BinaryCode(r) = reference else {
            return Err(MatchError::WrongKind {
                matcher: self.name.to_string(),
                expected: TemplateKind::BinaryCode,
                actual: kind_of(reference),
            });
        };
        Ok(self.code.best_match(r, self.strategy, self.min_bits)?.score)
    }
}

impl Matcher for HdbifMatcher {
    fn name(&self) -> &str {
        "hdbif"
    }

    fn kind(&self) -> TemplateKind {
        TemplateKind::BinaryCode
    }

    fn failure_sentinel(&self) -> f64 {
        1.0
    }

    fn compare(&self, probe: &Payload, reference: &Payload) -> Result<f64, MatchError> {
        let (a, b) = (self.code(probe)?, self.code(reference)?);
        let m = hdbif::best_match(a, b, self.max_shift, self.strategy, self.min_bits_for(a))?;
        Ok(m.score)
    }

    fn prepare<'a>(&'a self, probe: &'a Payload) -> Result<Box<dyn ProbeScorer + 'a>, MatchError> {
        let code = self.code(probe)?;
        Ok(Box::new(PreparedHdbif {
            code: PreparedCode::new(code, self.max_shift),
            strategy: self.strategy,
            min_bits: self.min_bits_for(code),
            name: "hdbif",
        }))
    }
}

fn embeddings<'p>(
    m: &dyn Matcher,
    a: &'p Payload,
    b: &'p Payload,
) -> Result<(&'p crate::templates::FloatEmbeddingTemplate, &'p crate::templates::FloatEmbeddingTemplate), MatchError>
{
    m.check_kind(a)?;
    m.check_kind(b)?;
    match (a, b) {
        (Payload::Embedding(x), Payload::Embedding(y)) => Ok((x, y)),
        _ => unreachable!("kinds checked above"),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AngularMatcher;

impl Matcher for AngularMatcher {
    fn name(&self) -> &str {
        "angular"
    }

    fn kind(&self) -> TemplateKind {
        TemplateKind::Embedding
    }

    fn failure_sentinel(&self) -> f64 {
        3.2
    }

    fn compare(&self, probe: &Payload, reference: &Payload) -> Result<f64, MatchError> {
        let (a, b) = embeddings(self, probe, reference)?;
        Ok(embedding::angular_distance(a, b)?)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EuclideanMatcher;

impl Matcher for EuclideanMatcher {
    fn name(&self) -> &str {
        "euclidean"
    }

    fn kind(&self) -> TemplateKind {
        TemplateKind::Embedding
    }

    fn failure_sentinel(&self) -> f64 {
        10_000.0
    }

    fn compare(&self, probe: &Payload, reference: &Payload) -> Result<f64, MatchError> {
        let (a, b) = embeddings(self, probe, reference)?;
        Ok(embedding::euclidean_distance(a, b)?)
    }
}

/// EMD between crypt masks. Failures are already folded into a score of 1.0,
/// so `compare` only errors on a kind mismatch.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CryptsEmdMatcher {
    pub config: EmdConfig,
}

impl Matcher for CryptsEmdMatcher {
    fn name(&self) -> &str {
        "crypts-emd"
    }

    fn kind(&self) -> TemplateKind {
        TemplateKind::CryptMask
    }

    fn failure_sentinel(&self) -> f64 {
        crypts::FAILURE_SCORE
    }

    fn compare(&self, probe: &Payload, reference: &Payload) -> Result<f64, MatchError> {
        self.check_kind(probe)?;
        self.check_kind(reference)?;
        match (probe, reference) {
            (Payload::CryptMask(a), Payload::CryptMask(b)) => Ok(crypts::emd_2d(a, b, &self.config)),
            _ => unreachable!("kinds checked above"),
        }
    }
}

/// Tunables for the built-in matchers.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MatcherSettings {
    pub hdbif: HdbifMatcher,
    pub emd: EmdConfig,
}

#[derive(Clone, Default)]
pub struct MatcherRegistry {
    matchers: BTreeMap<String, Arc<dyn Matcher>>,
}

impl MatcherRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding the four built-in matchers.
    pub fn builtin(settings: &MatcherSettings) -> Self {
        let mut r = Self::new();
        r.register(Arc::new(settings.hdbif));
        r.register(Arc::new(AngularMatcher));
        r.register(Arc::new(EuclideanMatcher));
        r.register(Arc::new(CryptsEmdMatcher {
            config: settings.emd,
        }));
        r
    }

    /// Adds or replaces a matcher under its own name.
    pub fn register(&mut self, m: Arc<dyn Matcher>) {
        self.matchers.insert(m.name().to_string(), m);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Matcher>, MatchError> {
        self.matchers
            .get(&name.to_ascii_lowercase())
            .cloned()
            .ok_or_else(|| MatchError::UnknownMatcher(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.matchers.keys().map(String::as_str)
    }
}

impl fmt::Debug for MatcherRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}
