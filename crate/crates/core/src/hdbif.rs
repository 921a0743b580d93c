//! Filter-bank binary encoding and masked fractional Hamming matching.
//!
//! Shift convention: a score at shift `s` compares column `i` of the first
//! code with column `(i + s) mod A` of the second. If `b` is `a` rotated so
//! that `b[i] = a[i - 3]`, the best shift is `+3`.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::NormalizedIris;
use crate::templates::BinaryCodeTemplate;

pub const FILTER_HEADER: &str = "HDBIF-FILTERS";
pub const DEFAULT_FILTER_COUNT: usize = 7;
pub const DEFAULT_FILTER_SIZE: usize = 9;
pub const DEFAULT_FILTER_SEED: u64 = 0x1D1F_2024;
pub const DEFAULT_MAX_SHIFT: usize = 16;

/// Kernels whose coefficients sum beyond this are re-centred on load.
const ZERO_MEAN_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HdbifError {
    #[error("bad filter file: {0}")]
    BadFilterFile(String),
    #[error("kernel side {kernel} exceeds polar image {rows}x{cols}")]
    KernelTooLarge { kernel: usize, rows: usize, cols: usize },
    #[error("incompatible templates: {0:?} vs {1:?}")]
    IncompatibleTemplates((usize, usize, usize), (usize, usize, usize)),
    #[error("shift {shift} outside +/-{limit}")]
    ShiftOutOfRange { shift: i64, limit: usize },
    #[error("insufficient overlap: {bits} bits compared, {required} required")]
    InsufficientOverlap { bits: usize, required: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    count: usize,
    size: usize,
    weights: Vec<f64>,
}

impl FilterBank {
    /// Builds a bank from `count` row-major `size x size` kernels, re-centring
    /// any kernel that is not zero-mean.
    pub fn new(count: usize, size: usize, mut weights: Vec<f64>) -> Result<Self, HdbifError> {
        if count == 0 || size == 0 {
            return Err(HdbifError::BadFilterFile(format!(
                "filter count and size must be positive (k={count}, s={size})"
            )));
        }
        if size % 2 == 0 {
            return Err(HdbifError::BadFilterFile(format!("kernel side {size} is even")));
        }
        if weights.len() != count * size * size {
            return Err(HdbifError::BadFilterFile(format!(
                "expected {} coefficients, found {}",
                count * size * size,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(HdbifError::BadFilterFile("non-finite coefficient".into()));
        }
        for (i, kernel) in weights.chunks_exact_mut(size * size).enumerate() {
            let sum: f64 = kernel.iter().sum();
            if sum.abs() > ZERO_MEAN_TOLERANCE {
                log::warn!("filter {i} sums to {sum}; re-centring to zero mean");
                let mean = sum / kernel.len() as f64;
                kernel.iter_mut().for_each(|w| *w -= mean);
            }
        }
        Ok(Self {
            count,
            size,
            weights,
        })
    }

    /// Deterministic zero-mean Gaussian kernels.
    pub fn pseudo_random(count: usize, size: usize, seed: u64) -> Result<Self, HdbifError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights: Vec<f64> = (0..count * size * size)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        for kernel in weights.chunks_exact_mut(size * size) {
            let mean = kernel.iter().sum::<f64>() / kernel.len() as f64;
            kernel.iter_mut().for_each(|w| *w -= mean);
        }
        Self::new(count, size, weights)
    }

    pub fn default_bank() -> Self {
        Self::pseudo_random(DEFAULT_FILTER_COUNT, DEFAULT_FILTER_SIZE, DEFAULT_FILTER_SEED)
            .expect("default bank parameters are valid")
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn kernel(&self, i: usize) -> &[f64] {
        let n = self.size * self.size;
        &self.weights[i * n..(i + 1) * n]
    }

    /// Text form accepted by [`load_filter_bank`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{FILTER_HEADER} {} {}\n", self.count, self.size);
        for kernel in self.weights.chunks_exact(self.size * self.size) {
            for row in kernel.chunks_exact(self.size) {
                let line: Vec<String> = row.iter().map(|w| format!("{w:e}")).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        out
    }
}

/// Parses `HDBIF-FILTERS k s` followed by `k*s*s` whitespace separated reals.
pub fn load_filter_bank(source: &str) -> Result<FilterBank, HdbifError> {
    let mut lines = source.lines();
    let header = lines
        .by_ref()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| HdbifError::BadFilterFile("empty file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [tag, k, s] = fields.as_slice() else {
        return Err(HdbifError::BadFilterFile(format!("malformed header {header:?}")));
    };
    if *tag != FILTER_HEADER {
        return Err(HdbifError::BadFilterFile(format!("unknown header tag {tag:?}")));
    }
    let parse_dim = |v: &str| {
        v.parse::<usize>()
            .map_err(|_| HdbifError::BadFilterFile(format!("bad dimension {v:?}")))
    };
    let (k, s) = (parse_dim(k)?, parse_dim(s)?);
    let weights = lines
        .flat_map(str::split_whitespace)
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| HdbifError::BadFilterFile(format!("bad coefficient {t:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    FilterBank::new(k, s, weights)
}

/// Cross-correlates each kernel with the polar image (circular along the
/// angle, clamped along the radius) and keeps `response > 0`. A bit is valid
/// only if every pixel under the kernel footprint is valid.
pub fn encode(iris: &NormalizedIris, bank: &FilterBank) -> Result<BinaryCodeTemplate, HdbifError> {
    let (rows, cols) = (iris.radial_res(), iris.angular_res());
    let s = bank.size();
    if s > rows.min(cols) {
        return Err(HdbifError::KernelTooLarge {
            kernel: s,
            rows,
            cols,
        });
    }
    let half = (s / 2) as isize;
    let row_at = |r: usize, i: usize| (r as isize + i as isize - half).clamp(0, rows as isize - 1) as usize;
    let col_at = |a: usize, j: usize| (a as isize + j as isize - half).rem_euclid(cols as isize) as usize;

    let mut code = BinaryCodeTemplate::new(bank.count(), rows, cols)
        .expect("polar dims are positive");
    let img = iris.image();
    let mut response_row = vec![0.0f64; cols];
    for k in 0..bank.count() {
        let kernel = bank.kernel(k);
        for r in 0..rows {
            response_row.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..s {
                let src = &img[row_at(r, i) * cols..(row_at(r, i) + 1) * cols];
                for j in 0..s {
                    let w = kernel[i * s + j];
                    if w == 0.0 {
                        continue;
                    }
                    for (a, out) in response_row.iter_mut().enumerate() {
                        *out += w * src[col_at(a, j)];
                    }
                }
            }
            for (a, &v) in response_row.iter().enumerate() {
                if v > 0.0 {
                    code.set_bit(k, r, a, true);
                }
            }
        }
    }
    for r in 0..rows {
        for a in 0..cols {
            let ok = (0..s).all(|i| (0..s).all(|j| iris.valid(row_at(r, i), col_at(a, j))));
            code.set_valid(r, a, ok);
        }
    }
    Ok(code)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    pub score: f64,
    pub shift: i64,
    pub bits_compared: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum ShiftStrategy {
    Exhaustive,
    #[default]
    EvenThenNeighbors,
}

impl FromStr for ShiftStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "exhaustive" => Ok(Self::Exhaustive),
            "eventhenneighbors" | "even" => Ok(Self::EvenThenNeighbors),
            _ => Err(format!("unknown shift strategy {s:?}")),
        }
    }
}

impl fmt::Display for ShiftStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exhaustive => "exhaustive",
            Self::EvenThenNeighbors => "even-then-neighbors",
        })
    }
}

/// Default overlap requirement: one percent of all code bits.
pub fn default_min_bits(code: &BinaryCodeTemplate) -> usize {
    code.planes() * code.rows() * code.cols() / 100
}

/// Reads `n <= 64` bits starting at bit `p` of a packed row.
#[inline]
fn read_bits(row: &[u64], p: usize, n: usize) -> u64 {
    let w = p / 64;
    let o = p % 64;
    let mut v = row[w] >> o;
    if o != 0 && w + 1 < row.len() {
        v |= row[w + 1] << (64 - o);
    }
    if n < 64 {
        v &= (1u64 << n) - 1;
    }
    v
}

/// `dst` bit `i` = `src` bit `(i + shift) mod cols`.
fn rotate_row(src: &[u64], cols: usize, shift: usize, dst: &mut [u64]) {
    for (j, out) in dst.iter_mut().enumerate() {
        let start = j * 64;
        let n = (cols - start).min(64);
        let p = (start + shift) % cols;
        *out = if p + n <= cols {
            read_bits(src, p, n)
        } else {
            let first = cols - p;
            read_bits(src, p, first) | (read_bits(src, 0, n - first) << first)
        };
    }
}

/// Rotates every row of a code so that column `i` holds old column `(i + shift) mod A`.
pub fn rotate_columns(t: &BinaryCodeTemplate, shift: i64) -> BinaryCodeTemplate {
    let (k, rows, cols) = t.dims();
    let wpr = t.words_per_row();
    let s = shift.rem_euclid(cols as i64) as usize;
    let mut code = vec![0u64; k * rows * wpr];
    let mut valid = vec![0u64; rows * wpr];
    for (src, dst) in t.code_words().chunks_exact(wpr).zip(code.chunks_exact_mut(wpr)) {
        rotate_row(src, cols, s, dst);
    }
    for (src, dst) in t.valid_words().chunks_exact(wpr).zip(valid.chunks_exact_mut(wpr)) {
        rotate_row(src, cols, s, dst);
    }
    BinaryCodeTemplate::from_words(k, rows, cols, code, valid).expect("rotation keeps padding clear")
}

/// Counts `(disagreeing bits, jointly valid positions)` between two aligned codes.
#[inline]
fn aligned_counts(a: &BinaryCodeTemplate, b: &BinaryCodeTemplate) -> (usize, usize) {
    let plane_words = a.rows() * a.words_per_row();
    let av = a.valid_words();
    let bv = b.valid_words();
    let mut valid = 0u32;
    let mut diff = 0u32;
    let ac = a.code_words();
    let bc = b.code_words();
    for w in 0..plane_words {
        let m = av[w] & bv[w];
        valid += m.count_ones();
        if m == 0 {
            continue;
        }
        let mut off = w;
        for _ in 0..a.planes() {
            diff += ((ac[off] ^ bc[off]) & m).count_ones();
            off += plane_words;
        }
    }
    (diff as usize, valid as usize)
}

fn finish_score(
    diff: usize,
    valid: usize,
    planes: usize,
    shift: i64,
    min_bits: usize,
) -> Result<MatchScore, HdbifError> {
    let bits_compared = planes * valid;
    if bits_compared == 0 || bits_compared < min_bits {
        return Err(HdbifError::InsufficientOverlap {
            bits: bits_compared,
            required: min_bits.max(1),
        });
    }
    Ok(MatchScore {
        score: diff as f64 / bits_compared as f64,
        shift,
        bits_compared,
    })
}

fn check_compatible(a: &BinaryCodeTemplate, b: &BinaryCodeTemplate) -> Result<(), HdbifError> {
    if a.dims() != b.dims() {
        return Err(HdbifError::IncompatibleTemplates(a.dims(), b.dims()));
    }
    Ok(())
}

/// Masked fractional Hamming distance between `a` and `b` rotated by `shift` columns.
pub fn fractional_hamming(
    a: &BinaryCodeTemplate,
    b: &BinaryCodeTemplate,
    shift: i64,
    min_bits: usize,
) -> Result<MatchScore, HdbifError> {
    check_compatible(a, b)?;
    let limit = a.cols() / 2;
    if shift.unsigned_abs() as usize > limit {
        return Err(HdbifError::ShiftOutOfRange { shift, limit });
    }
    let rotated = rotate_columns(b, shift);
    let (diff, valid) = aligned_counts(a, &rotated);
    finish_score(diff, valid, a.planes(), shift, min_bits)
}

/// `true` when `x` should replace `best` under the tie rules: lower score,
/// then smaller |shift|, then the negative shift.
fn improves(x: &MatchScore, best: &MatchScore) -> bool {
    (x.score, x.shift.unsigned_abs(), x.shift) < (best.score, best.shift.unsigned_abs(), best.shift)
}

/// Shift search over `[-max_shift, max_shift]` (clamped to half the code width).
fn search_shifts(
    max_shift: i64,
    strategy: ShiftStrategy,
    mut score_at: impl FnMut(i64) -> Result<MatchScore, HdbifError>,
) -> Result<MatchScore, HdbifError> {
    let mut best: Option<MatchScore> = None;
    let mut last_err = None;
    let mut consider = |s: i64, best: &mut Option<MatchScore>| match score_at(s) {
        Ok(m) => {
            if best.as_ref().is_none_or(|b| improves(&m, b)) {
                *best = Some(m);
            }
        }
        Err(e) => last_err = Some(e),
    };
    match strategy {
        ShiftStrategy::Exhaustive => {
            for s in -max_shift..=max_shift {
                consider(s, &mut best);
            }
        }
        ShiftStrategy::EvenThenNeighbors => {
            let first_even = if max_shift % 2 == 0 { -max_shift } else { -max_shift + 1 };
            for s in (first_even..=max_shift).step_by(2) {
                consider(s, &mut best);
            }
            if let Some(even) = best {
                for s in [even.shift - 1, even.shift + 1] {
                    if s.abs() <= max_shift {
                        consider(s, &mut best);
                    }
                }
            }
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or(HdbifError::InsufficientOverlap {
            bits: 0,
            required: 1,
        })
    })
}

pub fn best_match(
    a: &BinaryCodeTemplate,
    b: &BinaryCodeTemplate,
    max_shift: usize,
    strategy: ShiftStrategy,
    min_bits: usize,
) -> Result<MatchScore, HdbifError> {
    check_compatible(a, b)?;
    let max_shift = max_shift.min(a.cols() / 2) as i64;
    search_shifts(max_shift, strategy, |s| fractional_hamming(a, b, s, min_bits))
}

/// A probe code with every rotation in the search window precomputed.
///
/// Scoring at shift `s` uses the probe rotated by `-s` against the
/// unrotated reference, which permutes both operands identically and
/// therefore yields exactly the counts of [`fractional_hamming`].
#[derive(Debug, Clone)]
pub struct PreparedCode {
    max_shift: i64,
    /// Index `s + max_shift` holds the probe rotated by `-s`.
    rotations: Vec<BinaryCodeTemplate>,
}

impl PreparedCode {
    pub fn new(probe: &BinaryCodeTemplate, max_shift: usize) -> Self {
        let max_shift = max_shift.min(probe.cols() / 2) as i64;
        let rotations = (-max_shift..=max_shift)
            .map(|s| rotate_columns(probe, -s))
            .collect();
        Self {
            max_shift,
            rotations,
        }
    }

    pub fn probe(&self) -> &BinaryCodeTemplate {
        &self.rotations[self.max_shift as usize]
    }

    pub fn score_at(
        &self,
        reference: &BinaryCodeTemplate,
        shift: i64,
        min_bits: usize,
    ) -> Result<MatchScore, HdbifError> {
        let probe = self.probe();
        check_compatible(probe, reference)?;
        if shift.abs() > self.max_shift {
            return Err(HdbifError::ShiftOutOfRange {
                shift,
                limit: self.max_shift as usize,
            });
        }
        let rotated = &self.rotations[(shift + self.max_shift) as usize];
        let (diff, valid) = aligned_counts(rotated, reference);
        finish_score(diff, valid, probe.planes(), shift, min_bits)
    }

    pub fn best_match(
        &self,
        reference: &BinaryCodeTemplate,
        strategy: ShiftStrategy,
        min_bits: usize,
    ) -> Result<MatchScore, HdbifError> {
        check_compatible(self.probe(), reference)?;
        search_shifts(self.max_shift, strategy, |s| self.score_at(reference, s, min_bits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_code(bits: &str) -> BinaryCodeTemplate {
        let b: Vec<bool> = bits.chars().map(|c| c == '1').collect();
        BinaryCodeTemplate::from_bools(1, 1, b.len(), &b, &vec![true; b.len()]).unwrap()
    }

    #[test]
    fn hand_computed_distance() {
        let a = row_code("10110011");
        let b = row_code("10101010");
        let m = fractional_hamming(&a, &b, 0, 0).unwrap();
        assert_eq!(m.score, 0.375);
        assert_eq!(m.bits_compared, 8);
    }

    #[test]
    fn identity_and_complement() {
        let a = row_code("1101001110100101");
        let not_a = row_code("0010110001011010");
        assert_eq!(fractional_hamming(&a, &a, 0, 0).unwrap().score, 0.0);
        assert_eq!(fractional_hamming(&a, &not_a, 0, 0).unwrap().score, 1.0);
    }

    #[test]
    fn rotation_convention() {
        // b[i] = a[i - 3]
        let a = row_code("1100000000000000");
        let b = row_code("0001100000000000");
        assert_eq!(fractional_hamming(&a, &b, 3, 0).unwrap().score, 0.0);
        let r = rotate_columns(&a, -3);
        assert_eq!(r, b);
    }

    #[test]
    fn rotation_across_word_boundaries() {
        let cols = 150;
        let bits: Vec<bool> = (0..cols).map(|i| (i * 7 + i / 3) % 5 < 2).collect();
        let t = BinaryCodeTemplate::from_bools(1, 1, cols, &bits, &vec![true; cols]).unwrap();
        for s in [-75i64, -64, -1, 0, 1, 63, 64, 65, 75] {
            let r = rotate_columns(&t, s);
            for i in 0..cols {
                let src = (i as i64 + s).rem_euclid(cols as i64) as usize;
                assert_eq!(r.bit(0, 0, i), bits[src], "shift {s} col {i}");
            }
        }
    }

    #[test]
    fn shift_limit_and_dims_are_checked() {
        let a = row_code("10110011");
        assert!(matches!(
            fractional_hamming(&a, &a, 5, 0),
            Err(HdbifError::ShiftOutOfRange { .. })
        ));
        let b = row_code("1011");
        assert!(matches!(
            fractional_hamming(&a, &b, 0, 0),
            Err(HdbifError::IncompatibleTemplates(..))
        ));
    }

    #[test]
    fn no_overlap_is_a_failure() {
        let a = BinaryCodeTemplate::from_bools(1, 1, 4, &[true; 4], &[true, true, false, false]).unwrap();
        let b = BinaryCodeTemplate::from_bools(1, 1, 4, &[true; 4], &[false, false, true, true]).unwrap();
        assert!(matches!(
            fractional_hamming(&a, &b, 0, 0),
            Err(HdbifError::InsufficientOverlap { bits: 0, .. })
        ));
        assert!(fractional_hamming(&a, &b, 2, 0).is_ok());
        assert!(matches!(
            fractional_hamming(&a, &a, 0, 3),
            Err(HdbifError::InsufficientOverlap { bits: 2, required: 3 })
        ));
    }

    #[test]
    fn exhaustive_finds_constructed_rotation() {
        // Aperiodic bits from an LCG, so no other shift comes close.
        let mut x = 12345u64;
        let bits: Vec<bool> = (0..64)
            .map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                x >> 63 == 1
            })
            .collect();
        let a = BinaryCodeTemplate::from_bools(1, 1, 64, &bits, &[true; 64]).unwrap();
        let b = rotate_columns(&a, -3);
        let m = best_match(&a, &b, 8, ShiftStrategy::Exhaustive, 0).unwrap();
        assert_eq!((m.score, m.shift), (0.0, 3));
        let p = PreparedCode::new(&a, 8).best_match(&b, ShiftStrategy::Exhaustive, 0).unwrap();
        assert_eq!(p, m);
    }

    #[test]
    fn neighbors_strategy_follows_a_smooth_profile() {
        // One wide block of ones gives a V-shaped score profile.
        let bits: Vec<bool> = (0..64).map(|i| (10..42).contains(&i)).collect();
        let a = BinaryCodeTemplate::from_bools(1, 1, 64, &bits, &[true; 64]).unwrap();
        let b = rotate_columns(&a, -3);
        for strategy in [ShiftStrategy::Exhaustive, ShiftStrategy::EvenThenNeighbors] {
            let m = best_match(&a, &b, 8, strategy, 0).unwrap();
            assert_eq!((m.score, m.shift), (0.0, 3), "{strategy}");
            let p = PreparedCode::new(&a, 8).best_match(&b, strategy, 0).unwrap();
            assert_eq!(p, m);
        }
    }

    #[test]
    fn ties_prefer_small_then_negative_shift() {
        // Constant code: every shift scores 0.
        let a = row_code("1111111111111111");
        let m = best_match(&a, &a, 4, ShiftStrategy::Exhaustive, 0).unwrap();
        assert_eq!(m.shift, 0);
        // Period-2 code rotated by one: only odd shifts match, so -1 beats +1.
        let a = row_code("1010101010101010");
        let b = rotate_columns(&a, 1);
        let m = best_match(&a, &b, 4, ShiftStrategy::Exhaustive, 0).unwrap();
        assert_eq!((m.score, m.shift), (0.0, -1));
    }

    #[test]
    fn filter_file_parsing() {
        let text = format!("{FILTER_HEADER} 2 3\n{}", "1 -1 0 0 0 0 0 1 -1\n".repeat(2));
        let bank = load_filter_bank(&text).unwrap();
        assert_eq!((bank.count(), bank.size()), (2, 3));
        let short = format!("{FILTER_HEADER} 2 3\n{}", "0 ".repeat(17));
        assert!(matches!(load_filter_bank(&short), Err(HdbifError::BadFilterFile(_))));
        assert!(load_filter_bank("HDBIF-FILTERS 1 2\n0 0 0 0").is_err());
        assert!(load_filter_bank("NOPE 1 1\n0").is_err());
        let flat = format!("{FILTER_HEADER} 1 3\n{}", "0.111111111111 ".repeat(9));
        let bank = load_filter_bank(&flat).unwrap();
        assert!(bank.kernel(0).iter().all(|w| w.abs() < 1e-12));
        let round = load_filter_bank(&bank.to_text()).unwrap();
        assert_eq!(round, bank);
    }

    #[test]
    fn default_bank_is_deterministic_and_zero_mean() {
        let a = FilterBank::default_bank();
        assert_eq!(a, FilterBank::default_bank());
        for k in 0..a.count() {
            assert!(a.kernel(k).iter().sum::<f64>().abs() < 1e-6);
        }
    }

    fn polar(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> NormalizedIris {
        let img = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        NormalizedIris::new(rows, cols, img, vec![true; rows * cols]).unwrap()
    }

    fn difference_bank() -> FilterBank {
        FilterBank::new(1, 3, vec![0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn constant_image_gives_all_zero_bits() {
        let code = encode(&polar(4, 8, |_, _| 0.4), &difference_bank()).unwrap();
        assert!(code.code_bools().iter().all(|b| !b));
        assert!(code.valid_bools().iter().all(|&b| b));
    }

    #[test]
    fn step_image_sets_rising_edge_bits() {
        // Columns 0..4 dark, 4..8 bright: response img[a+1] - img[a-1] > 0 at a = 3, 4.
        let code = encode(&polar(3, 8, |_, a| if a >= 4 { 1.0 } else { 0.0 }), &difference_bank()).unwrap();
        for r in 0..3 {
            let row: Vec<bool> = (0..8).map(|a| code.bit(0, r, a)).collect();
            assert_eq!(row, [false, false, false, true, true, false, false, false]);
        }
    }

    #[test]
    fn occluded_input_masks_everything() {
        let iris = NormalizedIris::new(4, 8, vec![0.5; 32], vec![false; 32]).unwrap();
        let code = encode(&iris, &difference_bank()).unwrap();
        assert!(code.valid_bools().iter().all(|b| !b));
    }

    #[test]
    fn occlusion_is_eroded_by_footprint() {
        let mut mask = vec![true; 5 * 8];
        mask[2 * 8 + 5] = false;
        let iris = NormalizedIris::new(5, 8, vec![0.5; 40], mask).unwrap();
        let code = encode(&iris, &difference_bank()).unwrap();
        for r in 0..5 {
            for a in 0..8 {
                let near = (r as i64 - 2).abs() <= 1 && (a as i64 - 5).abs() <= 1;
                assert_eq!(code.valid(r, a), !near, "({r},{a})");
            }
        }
    }

    #[test]
    fn kernel_larger_than_image() {
        let bank = FilterBank::pseudo_random(1, 5, 1).unwrap();
        assert!(matches!(
            encode(&polar(4, 8, |_, _| 0.0), &bank),
            Err(HdbifError::KernelTooLarge { .. })
        ));
    }
}
