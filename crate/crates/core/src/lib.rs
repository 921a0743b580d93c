//! Iris recognition toolkit.
//!
//! Segmentation geometry and rubber-sheet normalization, canonical template
//! formats, the HDBIF binary code, embedding and crypt matchers, 1:N search
//! and score-level evaluation.

pub mod crypts;
pub mod embedding;
pub mod eval;
pub mod geometry;
pub mod hdbif;
pub mod identify;
pub mod image;
pub mod io;
pub mod matcher;
pub mod morphology;
pub mod templates;
pub mod transport;

pub use geometry::{CircleParams, NormalizedIris};
pub use image::{BinaryMask, GrayImage};
pub use matcher::{Matcher, MatcherRegistry};
pub use templates::{
    BinaryCodeTemplate, CryptMaskTemplate, EyeLabel, FloatEmbeddingTemplate, Payload, Template,
};
