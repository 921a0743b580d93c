//! Image preprocessing, circle fitting, biological-viability gating and
//! rubber-sheet polar normalization.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{BinaryMask, GrayImage, ImageError};
use crate::morphology::{connected_components, fill_holes, Connectivity};

/// Default radial resolution of the polar grid.
pub const DEFAULT_RADIAL_RES: usize = 64;
/// Default angular resolution of the polar grid.
pub const DEFAULT_ANGULAR_RES: usize = 512;

/// Smallest radius searched by the Hough fitter.
pub const HOUGH_MIN_RADIUS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid image: {0}")]
    InvalidImage(#[from] ImageError),
    #[error("invalid circle parameters: {0}")]
    InvalidCircle(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("mask contains no foreground pixels")]
    EmptyMask,
    #[error("no circular boundary detectable in mask: {0}")]
    NoBoundary(String),
}

/// Pupil and iris boundary circles in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleParams {
    pub px: f64,
    pub py: f64,
    pub pr: f64,
    pub ix: f64,
    pub iy: f64,
    pub ir: f64,
}

impl CircleParams {
    pub fn new(px: f64, py: f64, pr: f64, ix: f64, iy: f64, ir: f64) -> Result<Self, GeometryError> {
        let c = Self {
            px,
            py,
            pr,
            ix,
            iy,
            ir,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn concentric(cx: f64, cy: f64, pr: f64, ir: f64) -> Result<Self, GeometryError> {
        Self::new(cx, cy, pr, cx, cy, ir)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let values = [self.px, self.py, self.pr, self.ix, self.iy, self.ir];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidCircle(format!(
                "non-finite value in {self:?}"
            )));
        }
        if self.pr <= 0.0 || self.ir <= 0.0 {
            return Err(GeometryError::InvalidCircle(format!(
                "radii must be positive (pr={}, ir={})",
                self.pr, self.ir
            )));
        }
        Ok(())
    }

    /// Pupil-to-iris radius ratio.
    pub fn alpha(&self) -> f64 {
        self.pr / self.ir
    }

    /// Distance between the two centres.
    pub fn center_offset(&self) -> f64 {
        (self.px - self.ix).hypot(self.py - self.iy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QualityReason {
    AbnormalRadii,
    InsufficientRadii,
    AbnormalRatio,
    InsufficientIrisVisible,
    ExcessiveConcentricDeviation,
}

impl QualityReason {
    pub fn code(self) -> &'static str {
        match self {
            Self::AbnormalRadii => "abnormal_radii",
            Self::InsufficientRadii => "insufficient_radii",
            Self::AbnormalRatio => "abnormal_ratio",
            Self::InsufficientIrisVisible => "insufficient_iris_visible",
            Self::ExcessiveConcentricDeviation => "excessive_concentric_deviation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QualityVerdict {
    pub reasons: BTreeSet<QualityReason>,
}

impl QualityVerdict {
    pub fn accepted(&self) -> bool {
        self.reasons.is_empty()
    }
}

/// Quality thresholds. The defaults are the published rule constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityThresholds {
    pub min_pupil_radius: f64,
    pub min_iris_radius: f64,
    pub alpha_range: (f64, f64),
    pub min_visible_fraction: f64,
    pub max_center_deviation: f64,
}

impl Default for QualityThresholds {
    fn default() -> Self {
        Self {
            min_pupil_radius: 12.0,
            min_iris_radius: 16.0,
            alpha_range: (0.1, 0.8),
            min_visible_fraction: 0.1,
            max_center_deviation: 0.5,
        }
    }
}

pub fn quality_gate(c: &CircleParams, mask: Option<&BinaryMask>) -> QualityVerdict {
    quality_gate_with(c, mask, &QualityThresholds::default())
}

/// Applies the five viability rules and reports every one that fires.
pub fn quality_gate_with(
    c: &CircleParams,
    mask: Option<&BinaryMask>,
    t: &QualityThresholds,
) -> QualityVerdict {
    let mut reasons = BTreeSet::new();
    if c.ir <= c.pr {
        reasons.insert(QualityReason::AbnormalRadii);
    }
    if c.pr <= t.min_pupil_radius || c.ir <= t.min_iris_radius {
        reasons.insert(QualityReason::InsufficientRadii);
    }
    let alpha = c.alpha();
    if !(alpha >= t.alpha_range.0 && alpha <= t.alpha_range.1) {
        reasons.insert(QualityReason::AbnormalRatio);
    }
    if let Some(mask) = mask {
        // Plain IEEE evaluation: a negative annulus (ir < pr) gives a ratio
        // below any positive threshold; ir == pr gives inf or NaN and passes.
        let annulus = PI * (c.ir + c.pr) * (c.ir - c.pr);
        if (mask.count() as f64) / annulus < t.min_visible_fraction {
            reasons.insert(QualityReason::InsufficientIrisVisible);
        }
    }
    if c.center_offset() / c.ir > t.max_center_deviation {
        reasons.insert(QualityReason::ExcessiveConcentricDeviation);
    }
    QualityVerdict { reasons }
}

/// Mapping between the source image frame and the padded + rescaled frame
/// produced by [`preprocess_image`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMap {
    pub pad_left: usize,
    pub pad_top: usize,
    pub scale_x: f64,
    pub scale_y: f64,
}

impl FrameMap {
    fn radius_scale(&self) -> f64 {
        0.5 * (self.scale_x + self.scale_y)
    }

    pub fn point_to_target(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x + self.pad_left as f64) * self.scale_x,
            (y + self.pad_top as f64) * self.scale_y,
        )
    }

    pub fn point_to_source(&self, x: f64, y: f64) -> (f64, f64) {
        (
            x / self.scale_x - self.pad_left as f64,
            y / self.scale_y - self.pad_top as f64,
        )
    }

    pub fn circles_to_target(&self, c: &CircleParams) -> CircleParams {
        let (px, py) = self.point_to_target(c.px, c.py);
        let (ix, iy) = self.point_to_target(c.ix, c.iy);
        let s = self.radius_scale();
        CircleParams {
            px,
            py,
            pr: c.pr * s,
            ix,
            iy,
            ir: c.ir * s,
        }
    }

    pub fn circles_to_source(&self, c: &CircleParams) -> CircleParams {
        let (px, py) = self.point_to_source(c.px, c.py);
        let (ix, iy) = self.point_to_source(c.ix, c.iy);
        let s = self.radius_scale();
        CircleParams {
            px,
            py,
            pr: c.pr / s,
            ix,
            iy,
            ir: c.ir / s,
        }
    }
}

/// Pads `raw` symmetrically with zeros to the target aspect ratio, then
/// rescales it bilinearly to exactly `target_width x target_height`.
pub fn preprocess_image(
    raw: &GrayImage,
    target_width: usize,
    target_height: usize,
) -> Result<(GrayImage, FrameMap), GeometryError> {
    if target_width == 0 || target_height == 0 {
        return Err(GeometryError::InvalidImage(ImageError::ZeroArea {
            width: target_width,
            height: target_height,
        }));
    }
    let (w, h) = (raw.width(), raw.height());
    let (tw, th) = (target_width, target_height);
    // Compare w/h against tw/th without rounding.
    let (pw, ph) = match (w * th).cmp(&(h * tw)) {
        std::cmp::Ordering::Less => ((h * tw + th / 2) / th, h),
        std::cmp::Ordering::Greater => (w, (w * th + tw / 2) / tw),
        std::cmp::Ordering::Equal => (w, h),
    };
    let pad_left = (pw.max(w) - w) / 2;
    let pad_top = (ph.max(h) - h) / 2;
    let padded = GrayImage::from_fn(pw.max(w), ph.max(h), |x, y| {
        if x >= pad_left && y >= pad_top && x - pad_left < w && y - pad_top < h {
            raw.get(x - pad_left, y - pad_top)
        } else {
            0.0
        }
    })?;
    let map = FrameMap {
        pad_left,
        pad_top,
        scale_x: tw as f64 / padded.width() as f64,
        scale_y: th as f64 / padded.height() as f64,
    };
    let out = GrayImage::from_fn(tw, th, |x, y| {
        padded.sample_bilinear_clamped(x as f64 / map.scale_x, y as f64 / map.scale_y)
    })?;
    Ok((out, map))
}

/// Circle estimate produced by [`fit_circles_hough`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleFit {
    pub circles: CircleParams,
    /// The mask had no inner boundary; the pupil is a fallback guess.
    pub degenerate: bool,
}

/// Fraction of the iris radius used for the pupil when no inner boundary exists.
pub const DEGENERATE_PUPIL_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct HoughPeak {
    votes: u32,
    cx: usize,
    cy: usize,
    r: usize,
}

/// Voting space over integer centres and radii. An edge point votes for every
/// centre whose rounded distance to it equals the radius.
fn hough_circle(edges: &[(usize, usize)], width: usize, height: usize) -> Option<HoughPeak> {
    let max_r = width.min(height) / 2;
    if edges.is_empty() || max_r < HOUGH_MIN_RADIUS {
        return None;
    }
    let mut rings: Vec<Vec<(isize, isize)>> = vec![Vec::new(); max_r + 1];
    let reach = max_r as isize;
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let r = ((dx * dx + dy * dy) as f64).sqrt().round() as usize;
            if (HOUGH_MIN_RADIUS..=max_r).contains(&r) {
                rings[r].push((dx, dy));
            }
        }
    }
    let mut acc = vec![0u32; width * height];
    let mut best: Option<HoughPeak> = None;
    for (r, ring) in rings.iter().enumerate().skip(HOUGH_MIN_RADIUS) {
        acc.iter_mut().for_each(|v| *v = 0);
        for &(ex, ey) in edges {
            for &(dx, dy) in ring {
                let cx = ex as isize + dx;
                let cy = ey as isize + dy;
                if cx >= 0 && cy >= 0 && (cx as usize) < width && (cy as usize) < height {
                    acc[cy as usize * width + cx as usize] += 1;
                }
            }
        }
        // Row-major scan keeps the first maximum: smaller cy, then smaller cx.
        let mut local: Option<HoughPeak> = None;
        for (i, &votes) in acc.iter().enumerate() {
            if votes > 0 && local.is_none_or(|p| votes > p.votes) {
                local = Some(HoughPeak {
                    votes,
                    cx: i % width,
                    cy: i / width,
                    r,
                });
            }
        }
        // Radii ascend, so strict improvement keeps the smaller radius on ties.
        if let Some(p) = local {
            if best.is_none_or(|b| p.votes > b.votes) {
                best = Some(p);
            }
        }
    }
    best
}

/// Pixels on either side of the boundary of `region`: region pixels with an
/// in-bounds 4-neighbour outside it and vice versa.
fn boundary_pixels(region: &BinaryMask, within: impl Fn(usize, usize) -> bool) -> Vec<(usize, usize)> {
    let (w, h) = (region.width(), region.height());
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !within(x, y) {
                continue;
            }
            let inside = region.get(x, y);
            let differs = [(0isize, -1isize), (-1, 0), (1, 0), (0, 1)].iter().any(|&(dx, dy)| {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                nx >= 0
                    && ny >= 0
                    && (nx as usize) < w
                    && (ny as usize) < h
                    && within(nx as usize, ny as usize)
                    && region.get(nx as usize, ny as usize) != inside
            });
            if differs {
                out.push((x, y));
            }
        }
    }
    out
}

/// Fits the pupil circle to the inner boundary and the iris circle to the
/// outer boundary of an annular iris mask.
pub fn fit_circles_hough(mask: &BinaryMask) -> Result<CircleFit, GeometryError> {
    if mask.is_empty() {
        return Err(GeometryError::EmptyMask);
    }
    let (w, h) = (mask.width(), mask.height());
    let filled = fill_holes(mask);
    let outer_edges = boundary_pixels(&filled, |_, _| true);
    let iris = hough_circle(&outer_edges, w, h)
        .ok_or_else(|| GeometryError::NoBoundary("outer iris boundary".into()))?;

    let holes = BinaryMask::from_fn(w, h, |x, y| filled.get(x, y) && !mask.get(x, y));
    let labeled = connected_components(&holes, Connectivity::Four);
    let pupil = if labeled.count == 0 {
        None
    } else {
        let areas = labeled.areas();
        // Largest hole is the pupil; earlier label wins ties.
        let pupil_label = (1..=labeled.count)
            .max_by(|&a, &b| areas[a as usize].cmp(&areas[b as usize]).then(b.cmp(&a)))
            .expect("at least one hole");
        let pupil_region = BinaryMask::from_fn(w, h, |x, y| labeled.label(x, y) == pupil_label);
        let inner_edges = boundary_pixels(&pupil_region, |x, y| filled.get(x, y));
        hough_circle(&inner_edges, w, h)
    };

    let (ix, iy, ir) = (iris.cx as f64, iris.cy as f64, iris.r as f64);
    let fit = match pupil {
        Some(p) => CircleFit {
            circles: CircleParams::new(p.cx as f64, p.cy as f64, p.r as f64, ix, iy, ir)?,
            degenerate: false,
        },
        None => CircleFit {
            circles: CircleParams::new(ix, iy, DEGENERATE_PUPIL_FRACTION * ir, ix, iy, ir)?,
            degenerate: true,
        },
    };
    Ok(fit)
}

/// Polar-unwrapped iris texture. Row 0 lies on the pupil boundary and row
/// `radial_res - 1` on the iris boundary; column `a` is at angle `2*pi*a/angular_res`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedIris {
    radial_res: usize,
    angular_res: usize,
    image: Vec<f64>,
    mask: Vec<bool>,
}

impl NormalizedIris {
    pub fn new(
        radial_res: usize,
        angular_res: usize,
        image: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<Self, GeometryError> {
        let n = radial_res * angular_res;
        if n == 0 || image.len() != n || mask.len() != n {
            return Err(GeometryError::InvalidGeometry(format!(
                "polar buffers must hold {radial_res}x{angular_res} values"
            )));
        }
        Ok(Self {
            radial_res,
            angular_res,
            image,
            mask,
        })
    }

    pub fn radial_res(&self) -> usize {
        self.radial_res
    }

    pub fn angular_res(&self) -> usize {
        self.angular_res
    }

    pub fn image(&self) -> &[f64] {
        &self.image
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn pixel(&self, r: usize, a: usize) -> f64 {
        self.image[r * self.angular_res + a]
    }

    #[inline]
    pub fn valid(&self, r: usize, a: usize) -> bool {
        self.mask[r * self.angular_res + a]
    }
}

/// Daugman rubber-sheet unwrapping between the (possibly non-concentric)
/// pupil and iris circles.
pub fn rubber_sheet(
    img: &GrayImage,
    c: &CircleParams,
    mask: Option<&BinaryMask>,
    radial_res: usize,
    angular_res: usize,
) -> Result<NormalizedIris, GeometryError> {
    c.validate()?;
    let verdict = quality_gate(c, None);
    if !verdict.accepted() {
        return Err(GeometryError::InvalidGeometry(format!(
            "circles rejected by quality gate: {:?}",
            verdict.reasons
        )));
    }
    if radial_res < 2 || angular_res < 4 {
        return Err(GeometryError::InvalidGeometry(format!(
            "polar grid {radial_res}x{angular_res} too small (need R >= 2, A >= 4)"
        )));
    }
    if let Some(m) = mask {
        if m.width() != img.width() || m.height() != img.height() {
            return Err(GeometryError::InvalidGeometry(format!(
                "mask is {}x{} but image is {}x{}",
                m.width(),
                m.height(),
                img.width(),
                img.height()
            )));
        }
    }

    let n = radial_res * angular_res;
    let mut image = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    let trig: Vec<(f64, f64)> = (0..angular_res)
        .map(|a| {
            let theta = 2.0 * PI * a as f64 / angular_res as f64;
            (theta.cos(), theta.sin())
        })
        .collect();
    let (w, h) = (img.width() as f64, img.height() as f64);
    for r in 0..radial_res {
        let t = r as f64 / (radial_res - 1) as f64;
        for &(cos, sin) in &trig {
            let (x0, y0) = (c.px + c.pr * cos, c.py + c.pr * sin);
            let (x1, y1) = (c.ix + c.ir * cos, c.iy + c.ir * sin);
            let x = (1.0 - t) * x0 + t * x1;
            let y = (1.0 - t) * y0 + t * y1;
            match img.sample_bilinear(x, y) {
                Some(v) => {
                    image.push(v);
                    let (nx, ny) = (x.round(), y.round());
                    let inside = nx < w && ny < h;
                    valid.push(match mask {
                        Some(m) => inside && m.get(nx as usize, ny as usize),
                        None => inside,
                    });
                }
                None => {
                    image.push(0.0);
                    valid.push(false);
                }
            }
        }
    }
    NormalizedIris::new(radial_res, angular_res, image, valid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circles(pr: f64, ir: f64) -> CircleParams {
        CircleParams::concentric(100.0, 100.0, pr, ir).unwrap()
    }

    #[test]
    fn accepts_typical_eye_with_full_annulus() {
        let c = circles(30.0, 60.0);
        // Mask of exactly pi * 2700 pixels is not representable; use a mask whose
        // count equals the annulus area rounded up so the ratio is >= 1.
        let area = (PI * 2700.0).ceil() as usize;
        let mut bits = vec![false; 200 * 200];
        bits[..area].iter_mut().for_each(|b| *b = true);
        let mask = BinaryMask::new(200, 200, bits).unwrap();
        assert!(quality_gate(&c, Some(&mask)).accepted());
    }

    #[test]
    fn pupil_radius_boundary_is_inclusive() {
        let v = quality_gate(&circles(12.0, 100.0), None);
        assert_eq!(v.reasons, BTreeSet::from([QualityReason::InsufficientRadii]));
    }

    #[test]
    fn equal_radii_report_both_reasons() {
        let v = quality_gate(&circles(40.0, 40.0), None);
        assert_eq!(
            v.reasons,
            BTreeSet::from([QualityReason::AbnormalRadii, QualityReason::AbnormalRatio])
        );
    }

    #[test]
    fn offset_centres_trip_deviation_rule() {
        let c = CircleParams::new(126.0, 100.0, 20.0, 100.0, 100.0, 50.0).unwrap();
        let v = quality_gate(&c, None);
        assert_eq!(
            v.reasons,
            BTreeSet::from([QualityReason::ExcessiveConcentricDeviation])
        );
    }

    #[test]
    fn non_finite_circles_are_rejected() {
        assert!(CircleParams::new(f64::NAN, 0.0, 1.0, 0.0, 0.0, 2.0).is_err());
        assert!(CircleParams::new(0.0, 0.0, 0.0, 0.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn matching_aspect_is_pure_downscale() {
        let raw = GrayImage::from_fn(640, 480, |x, y| ((x + y) % 7) as f64 / 7.0).unwrap();
        let (out, map) = preprocess_image(&raw, 320, 240).unwrap();
        assert_eq!((out.width(), out.height()), (320, 240));
        assert_eq!((map.pad_left, map.pad_top), (0, 0));
        assert_eq!((map.scale_x, map.scale_y), (0.5, 0.5));
        assert_eq!(out.get(10, 20), raw.get(20, 40));
    }

    #[test]
    fn narrow_input_is_padded_on_both_sides() {
        let raw = GrayImage::filled(600, 480, 1.0).unwrap();
        let (out, map) = preprocess_image(&raw, 320, 240).unwrap();
        assert_eq!(map.pad_left, 20);
        assert_eq!(map.pad_top, 0);
        assert_eq!(map.scale_x, 0.5);
        assert_eq!(out.get(0, 0), 0.0);
        assert_eq!(out.get(160, 120), 1.0);
    }

    #[test]
    fn constant_image_stays_constant() {
        let raw = GrayImage::filled(333, 250, 0.5).unwrap();
        let (out, _) = preprocess_image(&raw, 333, 250).unwrap();
        assert!(out.pixels().iter().all(|&v| v == 0.5));
        let raw = GrayImage::filled(100, 75, 0.5).unwrap();
        let (out, _) = preprocess_image(&raw, 64, 48).unwrap();
        assert!(out.pixels().iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn zero_target_is_invalid() {
        let raw = GrayImage::filled(4, 3, 0.5).unwrap();
        assert!(preprocess_image(&raw, 0, 3).is_err());
    }

    #[test]
    fn hough_empty_mask() {
        assert_eq!(
            fit_circles_hough(&BinaryMask::empty(50, 50)),
            Err(GeometryError::EmptyMask)
        );
    }

    #[test]
    fn hough_full_disk_falls_back() {
        let m = BinaryMask::from_fn(160, 160, |x, y| {
            let (dx, dy) = (x as f64 - 80.0, y as f64 - 80.0);
            dx * dx + dy * dy <= 2500.0
        });
        let fit = fit_circles_hough(&m).unwrap();
        assert!(fit.degenerate);
        assert!((fit.circles.ir - 50.0).abs() <= 1.0);
        assert!((fit.circles.pr - 15.0).abs() <= 0.3);
        assert_eq!((fit.circles.px, fit.circles.py), (fit.circles.ix, fit.circles.iy));
    }

    #[test]
    fn rubber_sheet_rejects_bad_geometry() {
        let img = GrayImage::filled(200, 200, 0.5).unwrap();
        assert!(rubber_sheet(&img, &circles(40.0, 40.0), None, 8, 16).is_err());
        assert!(rubber_sheet(&img, &circles(20.0, 60.0), None, 1, 16).is_err());
        assert!(rubber_sheet(&img, &circles(20.0, 60.0), None, 8, 3).is_err());
    }

    #[test]
    fn rubber_sheet_marks_out_of_bounds_samples() {
        let img = GrayImage::filled(120, 120, 0.7).unwrap();
        let c = CircleParams::concentric(20.0, 60.0, 15.0, 50.0).unwrap();
        let n = rubber_sheet(&img, &c, None, 8, 16).unwrap();
        // Column 8 points left (theta = pi); the outer rows leave the image.
        assert!(!n.valid(7, 8));
        assert_eq!(n.pixel(7, 8), 0.0);
        assert!(n.valid(0, 0));
        assert_eq!(n.pixel(0, 0), 0.7);
    }
}
