//! Distances between deep-embedding templates.

use thiserror::Error;

use crate::templates::{EmbeddingMetric, FloatEmbeddingTemplate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("embedding has zero norm or non-finite values")]
    DegenerateEmbedding,
    #[error("incompatible embeddings: dim {0} vs {1}")]
    IncompatibleTemplates(usize, usize),
    #[error("embedding uses {actual:?} metric, expected {expected:?}")]
    WrongMetric {
        expected: EmbeddingMetric,
        actual: EmbeddingMetric,
    },
}

/// Projects `v` onto the unit hypersphere.
pub fn normalize_embedding(v: &[f64]) -> Result<Vec<f64>, EmbeddingError> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(EmbeddingError::DegenerateEmbedding);
    }
    // Scale by the max magnitude first so the squared sum cannot overflow.
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Err(EmbeddingError::DegenerateEmbedding);
    }
    let norm = v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt() * scale;
    Ok(v.iter().map(|x| x / norm).collect())
}

fn check(
    a: &FloatEmbeddingTemplate,
    b: &FloatEmbeddingTemplate,
    metric: EmbeddingMetric,
) -> Result<(), EmbeddingError> {
    for t in [a, b] {
        if t.metric() != metric {
            return Err(EmbeddingError::WrongMetric {
                expected: metric,
                actual: t.metric(),
            });
        }
    }
    if a.dim() != b.dim() {
        return Err(EmbeddingError::IncompatibleTemplates(a.dim(), b.dim()));
    }
    Ok(())
}

/// Angle in `[0, pi]` between two embeddings.
pub fn angular_distance(
    a: &FloatEmbeddingTemplate,
    b: &FloatEmbeddingTemplate,
) -> Result<f64, EmbeddingError> {
    check(a, b, EmbeddingMetric::Angular)?;
    angle_between(a.values(), b.values())
}

/// Angle between raw vectors; both are normalized first.
pub fn angle_between(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::IncompatibleTemplates(a.len(), b.len()));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 || !na.is_finite() || !nb.is_finite() {
        return Err(EmbeddingError::DegenerateEmbedding);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0).acos())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn euclidean_distance(
    a: &FloatEmbeddingTemplate,
    b: &FloatEmbeddingTemplate,
) -> Result<f64, EmbeddingError> {
    check(a, b, EmbeddingMetric::Euclidean)?;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}
