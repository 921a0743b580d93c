//! Binary and grayscale morphology: component labeling, area opening, hole
//! filling and reconstruction by dilation.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{BinaryMask, GrayImage};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorphologyError {
    #[error("marker and mask dimensions differ ({0}x{1} vs {2}x{3})")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("marker exceeds mask at ({x}, {y})")]
    InvalidMarker { x: usize, y: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl Connectivity {
    pub fn from_number(n: u32) -> Option<Self> {
        match n {
            4 => Some(Self::Four),
            8 => Some(Self::Eight),
            _ => None,
        }
    }

    fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
        const EIGHT: [(isize, isize); 8] = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        match self {
            Self::Four => &FOUR,
            Self::Eight => &EIGHT,
        }
    }

    /// Neighbours already visited in a forward raster scan.
    fn causal_offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 2] = [(0, -1), (-1, 0)];
        const EIGHT: [(isize, isize); 4] = [(-1, -1), (0, -1), (1, -1), (-1, 0)];
        match self {
            Self::Four => &FOUR,
            Self::Eight => &EIGHT,
        }
    }
}

/// Component labels; 0 is background, components are numbered `1..=count`
/// in raster order of their first pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledMask {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub count: u32,
}

impl LabeledMask {
    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Pixel count per label; index 0 holds the background count.
    pub fn areas(&self) -> Vec<usize> {
        let mut areas = vec![0usize; self.count as usize + 1];
        for &l in &self.labels {
            areas[l as usize] += 1;
        }
        areas
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let ra = find(parent, a);
    let rb = find(parent, b);
    // Keep the smaller provisional label as root so first-occurrence order survives.
    if ra < rb {
        parent[rb as usize] = ra;
    } else if rb < ra {
        parent[ra as usize] = rb;
    }
}

/// Two-pass union-find labeling.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> LabeledMask {
    let (w, h) = (mask.width(), mask.height());
    let mut provisional = vec![0u32; w * h];
    let mut parent: Vec<u32> = vec![0];
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let mut current = 0u32;
            for &(dx, dy) in connectivity.causal_offsets() {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx < 0 || ny < 0 || nx >= w as isize {
                    continue;
                }
                let l = provisional[ny as usize * w + nx as usize];
                if l == 0 {
                    continue;
                }
                if current == 0 {
                    current = l;
                } else if current != l {
                    union(&mut parent, current, l);
                }
            }
            if current == 0 {
                current = parent.len() as u32;
                parent.push(current);
            }
            provisional[y * w + x] = current;
        }
    }

    // Roots are always the minimum provisional label of their set, and provisional
    // labels grow in raster order, so renumbering roots in order keeps raster ordering.
    let mut remap = vec![0u32; parent.len()];
    let mut count = 0u32;
    for l in 1..parent.len() as u32 {
        let root = find(&mut parent, l);
        if root == l {
            count += 1;
            remap[l as usize] = count;
        }
    }
    let labels = provisional
        .iter()
        .map(|&l| {
            if l == 0 {
                0
            } else {
                remap[find(&mut parent, l) as usize]
            }
        })
        .collect();
    LabeledMask {
        width: w,
        height: h,
        labels,
        count,
    }
}

/// Removes components with fewer than `min_area` pixels.
pub fn area_open(mask: &BinaryMask, min_area: usize, connectivity: Connectivity) -> BinaryMask {
    let labeled = connected_components(mask, connectivity);
    let areas = labeled.areas();
    BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
        let l = labeled.label(x, y);
        l != 0 && areas[l as usize] >= min_area
    })
}

/// Sets every background region that is not 4-connected to the image border.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let background = BinaryMask::from_fn(w, h, |x, y| !mask.get(x, y));
    let labeled = connected_components(&background, Connectivity::Four);
    let mut touches_border = vec![false; labeled.count as usize + 1];
    for y in 0..h {
        for x in 0..w {
            if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                touches_border[labeled.label(x, y) as usize] = true;
            }
        }
    }
    BinaryMask::from_fn(w, h, |x, y| {
        mask.get(x, y) || !touches_border[labeled.label(x, y) as usize]
    })
}

/// Grayscale reconstruction by dilation of `marker` under `mask` (8-connectivity),
/// using the hybrid raster/anti-raster + FIFO scheme.
pub fn morph_reconstruct(marker: &GrayImage, mask: &GrayImage) -> Result<GrayImage, MorphologyError> {
    let (w, h) = (mask.width(), mask.height());
    if marker.width() != w || marker.height() != h {
        return Err(MorphologyError::DimensionMismatch(
            marker.width(),
            marker.height(),
            w,
            h,
        ));
    }
    if let Some(i) = marker
        .pixels()
        .iter()
        .zip(mask.pixels())
        .position(|(m, g)| m > g)
    {
        return Err(MorphologyError::InvalidMarker { x: i % w, y: i / w });
    }

    let limit = mask.pixels();
    let mut out = marker.pixels().to_vec();
    let idx = |x: usize, y: usize| y * w + x;
    let neighbours = |x: usize, y: usize| {
        Connectivity::Eight.offsets().iter().filter_map(move |&(dx, dy)| {
            let nx = x as isize + dx;
            let ny = y as isize + dy;
            (nx >= 0 && ny >= 0 && nx < w as isize && ny < h as isize)
                .then(|| (nx as usize, ny as usize))
        })
    };
    const FORWARD: [(isize, isize); 4] = [(-1, -1), (0, -1), (1, -1), (-1, 0)];
    const BACKWARD: [(isize, isize); 4] = [(1, 1), (0, 1), (-1, 1), (1, 0)];
    let in_bounds = |x: isize, y: isize| x >= 0 && y >= 0 && x < w as isize && y < h as isize;

    for y in 0..h {
        for x in 0..w {
            let mut v = out[idx(x, y)];
            for &(dx, dy) in &FORWARD {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if in_bounds(nx, ny) {
                    v = v.max(out[idx(nx as usize, ny as usize)]);
                }
            }
            out[idx(x, y)] = v.min(limit[idx(x, y)]);
        }
    }

    let mut queue = VecDeque::new();
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            let mut v = out[idx(x, y)];
            for &(dx, dy) in &BACKWARD {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if in_bounds(nx, ny) {
                    v = v.max(out[idx(nx as usize, ny as usize)]);
                }
            }
            let v = v.min(limit[idx(x, y)]);
            out[idx(x, y)] = v;
            for &(dx, dy) in &BACKWARD {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if in_bounds(nx, ny) {
                    let q = idx(nx as usize, ny as usize);
                    if out[q] < v && out[q] < limit[q] {
                        queue.push_back((x, y));
                        break;
                    }
                }
            }
        }
    }

    while let Some((x, y)) = queue.pop_front() {
        let v = out[idx(x, y)];
        for (nx, ny) in neighbours(x, y) {
            let q = idx(nx, ny);
            if out[q] < v && out[q] != limit[q] {
                out[q] = v.min(limit[q]);
                queue.push_back((nx, ny));
            }
        }
    }

    Ok(GrayImage::new(w, h, out).expect("reconstruction stays within mask range"))
}
