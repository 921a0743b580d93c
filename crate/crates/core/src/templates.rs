//! Template data model and byte layouts.
//!
//! Two encodings are supported:
//!
//! * **canonical** (`.irxt`): a versioned, self-describing container.
//!
//!   ```text
//!   "IRXT" | version=0x01 | eye | kind | header (u32 LE dims) | payload
//!   ```
//!
//!   Embeddings store `dim: u32`, a metric byte, then `dim` little-endian
//!   `f64`s. Boolean rasters are packed LSB-first into little-endian `u64`
//!   words, row-major, zero-padded to a whole word. Binary codes store the
//!   `k*R*A` code bits followed by the separately padded `R*A` validity bits.
//!
//! * **wire** (`.irxw`): the header-less layout of the evaluation API: one eye
//!   byte followed by raw `f64`s, or one byte (0/1) per boolean. Decoding it
//!   needs the dimensions from elsewhere, see [`WireLayout`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::BinaryMask;

pub const MAGIC: [u8; 4] = *b"IRXT";
pub const FORMAT_VERSION: u8 = 1;
/// Magic, version, eye and kind bytes.
pub const CANONICAL_PREFIX_LEN: usize = 7;

/// Tolerance on the L2 norm of angular embeddings.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemplateError {
    #[error("not a template (bad magic)")]
    NotATemplate,
    #[error("unsupported template format version {0}")]
    UnsupportedVersion(u8),
    #[error("corrupt template: {0}")]
    Corrupt(String),
    #[error("invalid template: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub enum EyeLabel {
    #[default]
    Unspecified,
    Right,
    Left,
}

impl EyeLabel {
    pub fn to_byte(self) -> u8 {
        match self {
            Self::Unspecified => 0,
            Self::Right => 1,
            Self::Left => 2,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Self::Unspecified),
            1 => Some(Self::Right),
            2 => Some(Self::Left),
            _ => None,
        }
    }

    /// Accepts `L`/`R`/`U`, full names, or the numeric wire values.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l" | "left" | "2" => Some(Self::Left),
            "r" | "right" | "1" => Some(Self::Right),
            "u" | "unspecified" | "0" | "" => Some(Self::Unspecified),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Unspecified => "U",
            Self::Right => "R",
            Self::Left => "L",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EmbeddingMetric {
    Angular,
    Euclidean,
}

impl EmbeddingMetric {
    fn to_byte(self) -> u8 {
        match self {
            Self::Angular => 0,
            Self::Euclidean => 1,
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Self::Angular),
            1 => Some(Self::Euclidean),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloatEmbeddingTemplate {
    values: Vec<f64>,
    metric: EmbeddingMetric,
}

impl FloatEmbeddingTemplate {
    pub fn new(values: Vec<f64>, metric: EmbeddingMetric) -> Result<Self, TemplateError> {
        if values.is_empty() {
            return Err(TemplateError::Invalid("embedding has zero dimensions".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TemplateError::Invalid("embedding has non-finite values".into()));
        }
        if metric == EmbeddingMetric::Angular {
            let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return Err(TemplateError::Invalid(format!(
                    "angular embedding must be unit length, norm is {norm}"
                )));
            }
        }
        Ok(Self { values, metric })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn metric(&self) -> EmbeddingMetric {
        self.metric
    }
}

/// Binary iris code with a per-pixel validity mask.
///
/// Bits are held packed, one padded run of `u64` words per polar row, so
/// that each row can be rotated and compared word-wise. Validity is `true`
/// where the texture was visible.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryCodeTemplate {
    planes: usize,
    rows: usize,
    cols: usize,
    words_per_row: usize,
    code: Vec<u64>,
    valid: Vec<u64>,
}

impl BinaryCodeTemplate {
    /// All-zero code with every position marked valid.
    pub fn new(planes: usize, rows: usize, cols: usize) -> Result<Self, TemplateError> {
        if planes == 0 || rows == 0 || cols == 0 {
            return Err(TemplateError::Invalid(format!(
                "binary code dims must be positive, got {planes}x{rows}x{cols}"
            )));
        }
        let words_per_row = cols.div_ceil(64);
        let mut t = Self {
            planes,
            rows,
            cols,
            words_per_row,
            code: vec![0; planes * rows * words_per_row],
            valid: vec![0; rows * words_per_row],
        };
        for r in 0..rows {
            for a in 0..cols {
                t.set_valid(r, a, true);
            }
        }
        Ok(t)
    }

    /// Builds from flat booleans: `bits` is plane-major then row-major
    /// (`k*R*A`), `valid` is row-major (`R*A`).
    pub fn from_bools(
        planes: usize,
        rows: usize,
        cols: usize,
        bits: &[bool],
        valid: &[bool],
    ) -> Result<Self, TemplateError> {
        let mut t = Self::new(planes, rows, cols)?;
        if bits.len() != planes * rows * cols || valid.len() != rows * cols {
            return Err(TemplateError::Invalid(format!(
                "expected {} code bits and {} mask bits, got {} and {}",
                planes * rows * cols,
                rows * cols,
                bits.len(),
                valid.len()
            )));
        }
        for k in 0..planes {
            for r in 0..rows {
                for a in 0..cols {
                    t.set_bit(k, r, a, bits[(k * rows + r) * cols + a]);
                }
            }
        }
        for r in 0..rows {
            for a in 0..cols {
                t.set_valid(r, a, valid[r * cols + a]);
            }
        }
        Ok(t)
    }

    /// Builds from packed words in the internal `[plane][row][word]` layout.
    /// Padding bits past `cols` in each row must be clear.
    pub fn from_words(
        planes: usize,
        rows: usize,
        cols: usize,
        code: Vec<u64>,
        valid: Vec<u64>,
    ) -> Result<Self, TemplateError> {
        let mut t = Self::new(planes, rows, cols)?;
        if code.len() != t.code.len() || valid.len() != t.valid.len() {
            return Err(TemplateError::Invalid("packed word count mismatch".into()));
        }
        let tail = cols % 64;
        if tail != 0 {
            let pad = !((1u64 << tail) - 1);
            let dirty = code
                .iter()
                .chain(&valid)
                .skip(t.words_per_row - 1)
                .step_by(t.words_per_row)
                .any(|w| w & pad != 0);
            if dirty {
                return Err(TemplateError::Invalid("padding bits set".into()));
            }
        }
        t.code = code;
        t.valid = valid;
        Ok(t)
    }

    pub fn planes(&self) -> usize {
        self.planes
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.planes, self.rows, self.cols)
    }

    /// Packed code words, `[plane][row][word]`.
    pub fn code_words(&self) -> &[u64] {
        &self.code
    }

    /// Packed validity words, `[row][word]`.
    pub fn valid_words(&self) -> &[u64] {
        &self.valid
    }

    #[inline]
    pub fn bit(&self, plane: usize, row: usize, col: usize) -> bool {
        let w = self.code[(plane * self.rows + row) * self.words_per_row + col / 64];
        (w >> (col % 64)) & 1 == 1
    }

    #[inline]
    pub fn valid(&self, row: usize, col: usize) -> bool {
        let w = self.valid[row * self.words_per_row + col / 64];
        (w >> (col % 64)) & 1 == 1
    }

    pub fn set_bit(&mut self, plane: usize, row: usize, col: usize, value: bool) {
        let idx = (plane * self.rows + row) * self.words_per_row + col / 64;
        set_word_bit(&mut self.code[idx], col % 64, value);
    }

    pub fn set_valid(&mut self, row: usize, col: usize, value: bool) {
        let idx = row * self.words_per_row + col / 64;
        set_word_bit(&mut self.valid[idx], col % 64, value);
    }

    pub fn code_bools(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.planes * self.rows * self.cols);
        for k in 0..self.planes {
            for r in 0..self.rows {
                for a in 0..self.cols {
                    out.push(self.bit(k, r, a));
                }
            }
        }
        out
    }

    pub fn valid_bools(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for r in 0..self.rows {
            for a in 0..self.cols {
                out.push(self.valid(r, a));
            }
        }
        out
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().map(|w| w.count_ones() as usize).sum()
    }
}

#[inline]
fn set_word_bit(word: &mut u64, bit: usize, value: bool) {
    if value {
        *word |= 1 << bit;
    } else {
        *word &= !(1 << bit);
    }
}

/// Crypt masks are plain boolean rasters (`true` = crypt pixel).
pub type CryptMaskTemplate = BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemplateKind {
    Embedding,
    BinaryCode,
    CryptMask,
}

impl TemplateKind {
    fn to_byte(self) -> u8 {
        match self {
            Self::Embedding => 0,
            Self::BinaryCode => 1,
            Self::CryptMask => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Embedding(FloatEmbeddingTemplate),
    BinaryCode(BinaryCodeTemplate),
    CryptMask(CryptMaskTemplate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub eye: EyeLabel,
    pub payload: Payload,
}

impl Template {
    pub fn new(eye: EyeLabel, payload: Payload) -> Self {
        Self { eye, payload }
    }

    pub fn kind(&self) -> TemplateKind {
        match self.payload {
            Payload::Embedding(_) => TemplateKind::Embedding,
            Payload::BinaryCode(_) => TemplateKind::BinaryCode,
            Payload::CryptMask(_) => TemplateKind::CryptMask,
        }
    }
}

fn pack_bools(bits: impl ExactSizeIterator<Item = bool>, out: &mut Vec<u8>) {
    let n = bits.len();
    let mut words = vec![0u64; n.div_ceil(64)];
    for (i, b) in bits.enumerate() {
        if b {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    for w in words {
        out.extend_from_slice(&w.to_le_bytes());
    }
}

/// Exact canonical length for a template.
pub fn canonical_len(t: &Template) -> usize {
    let words = |n: usize| n.div_ceil(64) * 8;
    CANONICAL_PREFIX_LEN
        + match &t.payload {
            Payload::Embedding(e) => 4 + 1 + 8 * e.dim(),
            Payload::BinaryCode(b) => {
                12 + words(b.planes * b.rows * b.cols) + words(b.rows * b.cols)
            }
            Payload::CryptMask(m) => 8 + words(m.width() * m.height()),
        }
}

pub fn serialize_canonical(t: &Template) -> Vec<u8> {
    let mut out = Vec::with_capacity(canonical_len(t));
    out.extend_from_slice(&MAGIC);
    out.push(FORMAT_VERSION);
    out.push(t.eye.to_byte());
    out.push(t.kind().to_byte());
    match &t.payload {
        Payload::Embedding(e) => {
            out.extend_from_slice(&(e.dim() as u32).to_le_bytes());
            out.push(e.metric.to_byte());
            for v in &e.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Payload::BinaryCode(b) => {
            for d in [b.planes, b.rows, b.cols] {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            pack_bools(b.code_bools().into_iter(), &mut out);
            pack_bools(b.valid_bools().into_iter(), &mut out);
        }
        Payload::CryptMask(m) => {
            // Rows then columns, matching the H x W naming.
            out.extend_from_slice(&(m.height() as u32).to_le_bytes());
            out.extend_from_slice(&(m.width() as u32).to_le_bytes());
            pack_bools(m.bits().iter().copied(), &mut out);
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TemplateError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                TemplateError::Corrupt(format!(
                    "truncated: need {n} bytes at offset {}, have {}",
                    self.pos,
                    self.bytes.len() - self.pos
                ))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, TemplateError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize, TemplateError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> Result<f64, TemplateError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn packed_bools(&mut self, n: usize) -> Result<Vec<bool>, TemplateError> {
        let n_words = n.div_ceil(64);
        let raw = self.take(n_words.checked_mul(8).ok_or_else(|| {
            TemplateError::Corrupt("boolean payload size overflows".into())
        })?)?;
        let mut out = Vec::with_capacity(n);
        for (wi, chunk) in raw.chunks_exact(8).enumerate() {
            let w = u64::from_le_bytes(chunk.try_into().unwrap());
            let used = (n - wi * 64).min(64);
            if used < 64 && w >> used != 0 {
                return Err(TemplateError::Corrupt("non-zero padding bits".into()));
            }
            out.extend((0..used).map(|b| (w >> b) & 1 == 1));
        }
        Ok(out)
    }

    fn finish(self) -> Result<(), TemplateError> {
        if self.pos != self.bytes.len() {
            return Err(TemplateError::Corrupt(format!(
                "{} trailing bytes",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn checked_area(dims: &[usize]) -> Result<usize, TemplateError> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| TemplateError::Corrupt(format!("dimensions {dims:?} overflow")))
}

fn invalid_to_corrupt(e: TemplateError) -> TemplateError {
    match e {
        TemplateError::Invalid(m) => TemplateError::Corrupt(m),
        other => other,
    }
}

pub fn deserialize_canonical(bytes: &[u8]) -> Result<Template, TemplateError> {
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(TemplateError::NotATemplate);
    }
    let mut r = Reader { bytes, pos: 4 };
    let version = r.u8()?;
    if version != FORMAT_VERSION {
        return Err(TemplateError::UnsupportedVersion(version));
    }
    let eye_byte = r.u8()?;
    let eye = EyeLabel::from_byte(eye_byte)
        .ok_or_else(|| TemplateError::Corrupt(format!("unknown eye byte {eye_byte}")))?;
    let payload = match r.u8()? {
        0 => {
            let dim = r.u32()?;
            let metric_byte = r.u8()?;
            let metric = EmbeddingMetric::from_byte(metric_byte).ok_or_else(|| {
                TemplateError::Corrupt(format!("unknown metric byte {metric_byte}"))
            })?;
            if dim.saturating_mul(8) > bytes.len() - r.pos {
                return Err(TemplateError::Corrupt("truncated embedding payload".into()));
            }
            let values = (0..dim).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
            Payload::Embedding(FloatEmbeddingTemplate::new(values, metric).map_err(invalid_to_corrupt)?)
        }
        1 => {
            let (k, rows, cols) = (r.u32()?, r.u32()?, r.u32()?);
            let n_code = checked_area(&[k, rows, cols])?;
            let n_valid = checked_area(&[rows, cols])?;
            if n_code.div_ceil(64) * 8 > bytes.len() - r.pos {
                return Err(TemplateError::Corrupt("truncated binary code payload".into()));
            }
            let code = r.packed_bools(n_code)?;
            let valid = r.packed_bools(n_valid)?;
            Payload::BinaryCode(
                BinaryCodeTemplate::from_bools(k, rows, cols, &code, &valid)
                    .map_err(invalid_to_corrupt)?,
            )
        }
        2 => {
            let (h, w) = (r.u32()?, r.u32()?);
            let n = checked_area(&[h, w])?;
            if n.div_ceil(64) * 8 > bytes.len() - r.pos {
                return Err(TemplateError::Corrupt("truncated crypt mask payload".into()));
            }
            let cells = r.packed_bools(n)?;
            Payload::CryptMask(
                BinaryMask::new(w, h, cells).map_err(|e| TemplateError::Corrupt(e.to_string()))?,
            )
        }
        other => return Err(TemplateError::Corrupt(format!("unknown kind byte {other}"))),
    };
    r.finish()?;
    Ok(Template { eye, payload })
}

pub fn serialize_wire(t: &Template) -> Vec<u8> {
    let mut out = vec![t.eye.to_byte()];
    match &t.payload {
        Payload::Embedding(e) => {
            for v in e.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Payload::BinaryCode(b) => {
            out.extend(b.code_bools().into_iter().map(u8::from));
            out.extend(b.valid_bools().into_iter().map(u8::from));
        }
        Payload::CryptMask(m) => out.extend(m.bits().iter().map(|&b| u8::from(b))),
    }
    out
}

/// Dimensions required to decode a wire-format template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WireLayout {
    Embedding { dim: usize, metric: EmbeddingMetric },
    BinaryCode { planes: usize, rows: usize, cols: usize },
    CryptMask { height: usize, width: usize },
}

impl WireLayout {
    pub fn of(t: &Template) -> Self {
        match &t.payload {
            Payload::Embedding(e) => Self::Embedding {
                dim: e.dim(),
                metric: e.metric(),
            },
            Payload::BinaryCode(b) => Self::BinaryCode {
                planes: b.planes,
                rows: b.rows,
                cols: b.cols,
            },
            Payload::CryptMask(m) => Self::CryptMask {
                height: m.height(),
                width: m.width(),
            },
        }
    }
}

pub fn deserialize_wire(bytes: &[u8], layout: WireLayout) -> Result<Template, TemplateError> {
    let mut r = Reader { bytes, pos: 0 };
    let eye_byte = r.u8()?;
    let eye = EyeLabel::from_byte(eye_byte)
        .ok_or_else(|| TemplateError::Corrupt(format!("unknown eye byte {eye_byte}")))?;
    let bools = |r: &mut Reader, n: usize| -> Result<Vec<bool>, TemplateError> {
        r.take(n)?
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(TemplateError::Corrupt(format!("boolean byte {other}"))),
            })
            .collect()
    };
    let payload = match layout {
        WireLayout::Embedding { dim, metric } => {
            let values = (0..dim).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
            Payload::Embedding(FloatEmbeddingTemplate::new(values, metric).map_err(invalid_to_corrupt)?)
        }
        WireLayout::BinaryCode { planes, rows, cols } => {
            let code = bools(&mut r, checked_area(&[planes, rows, cols])?)?;
            let valid = bools(&mut r, checked_area(&[rows, cols])?)?;
            Payload::BinaryCode(
                BinaryCodeTemplate::from_bools(planes, rows, cols, &code, &valid)
                    .map_err(invalid_to_corrupt)?,
            )
        }
        WireLayout::CryptMask { height, width } => {
            let cells = bools(&mut r, checked_area(&[height, width])?)?;
            Payload::CryptMask(
                BinaryMask::new(width, height, cells)
                    .map_err(|e| TemplateError::Corrupt(e.to_string()))?,
            )
        }
    };
    r.finish()?;
    Ok(Template { eye, payload })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_prefix_bytes() {
        let t = Template::new(
            EyeLabel::Left,
            Payload::Embedding(FloatEmbeddingTemplate::new(vec![1.0, 0.0], EmbeddingMetric::Angular).unwrap()),
        );
        let bytes = serialize_canonical(&t);
        assert_eq!(&bytes[..7], &[0x49, 0x52, 0x58, 0x54, 0x01, 0x02, 0x00]);
        assert_eq!(&bytes[7..12], &[2, 0, 0, 0, 0]);
        assert_eq!(&bytes[12..20], &1.0f64.to_le_bytes());
        assert_eq!(bytes.len(), canonical_len(&t));
    }

    #[test]
    fn binary_code_packs_lsb_first() {
        let b = BinaryCodeTemplate::from_bools(1, 1, 3, &[true, false, true], &[true; 3]).unwrap();
        let bytes = serialize_canonical(&Template::new(EyeLabel::Right, Payload::BinaryCode(b)));
        assert_eq!(bytes.len(), 7 + 12 + 16);
        assert_eq!(&bytes[19..27], &5u64.to_le_bytes());
        assert_eq!(&bytes[27..35], &7u64.to_le_bytes());
    }

    #[test]
    fn bad_magic_and_version() {
        assert_eq!(deserialize_canonical(b"XXXX\x01\x00\x00"), Err(TemplateError::NotATemplate));
        assert_eq!(deserialize_canonical(b"IR"), Err(TemplateError::NotATemplate));
        assert_eq!(
            deserialize_canonical(b"IRXT\x02\x00\x00"),
            Err(TemplateError::UnsupportedVersion(2))
        );
    }

    #[test]
    fn truncation_and_trailing_bytes_are_corrupt() {
        let m = BinaryMask::from_fn(5, 3, |x, y| (x + y) % 2 == 0);
        let bytes = serialize_canonical(&Template::new(EyeLabel::Unspecified, Payload::CryptMask(m)));
        assert!(matches!(
            deserialize_canonical(&bytes[..bytes.len() - 1]),
            Err(TemplateError::Corrupt(_))
        ));
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(matches!(deserialize_canonical(&longer), Err(TemplateError::Corrupt(_))));
        let mut dirty = bytes.clone();
        *dirty.last_mut().unwrap() = 0xff;
        assert!(matches!(deserialize_canonical(&dirty), Err(TemplateError::Corrupt(_))));
    }

    #[test]
    fn huge_declared_dims_do_not_allocate() {
        let mut bytes = b"IRXT\x01\x00\x00".to_vec();
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        bytes.push(1);
        assert!(matches!(deserialize_canonical(&bytes), Err(TemplateError::Corrupt(_))));
    }

    #[test]
    fn wire_layouts() {
        let e = Template::new(
            EyeLabel::Left,
            Payload::Embedding(FloatEmbeddingTemplate::new(vec![0.0], EmbeddingMetric::Euclidean).unwrap()),
        );
        assert_eq!(serialize_wire(&e), vec![2, 0, 0, 0, 0, 0, 0, 0, 0]);

        let b = BinaryCodeTemplate::from_bools(1, 1, 2, &[true, false], &[true, true]).unwrap();
        let t = Template::new(EyeLabel::Right, Payload::BinaryCode(b));
        let wire = serialize_wire(&t);
        assert_eq!(wire, vec![1, 1, 0, 1, 1]);
        assert_eq!(deserialize_wire(&wire, WireLayout::of(&t)).unwrap(), t);
        assert!(deserialize_wire(&[1, 2, 0, 1, 1], WireLayout::of(&t)).is_err());
    }

    #[test]
    fn angular_embedding_must_be_unit() {
        assert!(FloatEmbeddingTemplate::new(vec![3.0, 4.0], EmbeddingMetric::Angular).is_err());
        assert!(FloatEmbeddingTemplate::new(vec![0.6, 0.8], EmbeddingMetric::Angular).is_ok());
        assert!(FloatEmbeddingTemplate::new(vec![f64::NAN], EmbeddingMetric::Euclidean).is_err());
    }

    #[test]
    fn eye_label_parsing() {
        assert_eq!(EyeLabel::parse("left"), Some(EyeLabel::Left));
        assert_eq!(EyeLabel::parse("R"), Some(EyeLabel::Right));
        assert_eq!(EyeLabel::parse("U"), Some(EyeLabel::Unspecified));
        assert_eq!(EyeLabel::parse("x"), None);
    }
}
