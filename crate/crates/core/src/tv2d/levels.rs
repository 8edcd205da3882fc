use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::Image2D;

/// Default quantization tolerance, relative to the image's dynamic range.
pub const DEFAULT_QUANT_TOL: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    /// Mean of the pixel values in the cluster.
    pub value: f64,
    pub pixel_count: usize,
}

/// `{u ≥ threshold}` at a boundary between consecutive levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperlevelSet {
    pub threshold: f64,
    pub pixel_count: usize,
    /// One 4-connected component.
    pub indecomposable: bool,
    /// Complement is 8-connected (or empty).
    pub saturated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetReport {
    pub width: usize,
    pub height: usize,
    /// Ascending.
    pub levels: Vec<Level>,
    /// One per level boundary, ascending threshold.
    pub superlevel_sets: Vec<SuperlevelSet>,
    pub quantization_tol: f64,
    pub dynamic_range: f64,
    /// Largest distance from a pixel value to its level value.
    pub quantization_error: f64,
    /// Level index of every pixel.
    #[serde(skip)]
    pub labels: Vec<usize>,
}

impl LevelSetReport {
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Every superlevel set is indecomposable and saturated.
    pub fn all_simple(&self) -> bool {
        self.superlevel_sets.iter().all(|s| s.indecomposable && s.saturated)
    }

    /// Image with every pixel replaced by its level value.
    pub fn quantized(&self) -> Image2D {
        Image2D {
            width: self.width,
            height: self.height,
            values: self.labels.iter().map(|&l| self.levels[l].value).collect(),
        }
    }

    /// Indicator of the superlevel set above boundary `k` (levels `k+1..`).
    pub fn superlevel_mask(&self, k: usize) -> Vec<bool> {
        self.labels.iter().map(|&l| l > k).collect()
    }
}

/// Clusters the sorted pixel values, splitting wherever consecutive values
/// differ by more than `quant_tol` times the dynamic range, and checks the
/// superlevel set at every cluster boundary with flood fills.
pub fn level_set_report(u: &Image2D, quant_tol: f64) -> LevelSetReport {
    let (lo, hi) = u.min_max();
    let range = if u.is_empty() { 0.0 } else { hi - lo };
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| u.values[a].total_cmp(&u.values[b]));

    // spreads at rounding level are not resolved into levels
    let gap = if range <= 1e-12 * lo.abs().max(hi.abs()).max(1.0) { f64::INFINITY } else { quant_tol * range };
    let mut labels = vec![0usize; u.len()];
    let mut levels: Vec<Level> = Vec::new();
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut starts = Vec::new();
    for (rank, &p) in order.iter().enumerate() {
        let v = u.values[p];
        if rank > 0 && v - u.values[order[rank - 1]] > gap {
            levels.push(Level { value: sum / count as f64, pixel_count: count });
            sum = 0.0;
            count = 0;
            starts.push(v);
        }
        labels[p] = levels.len();
        sum += v;
        count += 1;
    }
    if count > 0 {
        levels.push(Level { value: sum / count as f64, pixel_count: count });
    }

    let quantization_error = u
        .values
        .iter()
        .zip(&labels)
        .map(|(v, &l)| (v - levels[l].value).abs())
        .fold(0.0, f64::max);

    let (w, h) = (u.width, u.height);
    let superlevel_sets = starts
        .iter()
        .enumerate()
        .map(|(k, &threshold)| {
            let mask: Vec<bool> = labels.iter().map(|&l| l > k).collect();
            let complement: Vec<bool> = mask.iter().map(|b| !b).collect();
            SuperlevelSet {
                threshold,
                pixel_count: mask.iter().filter(|&&b| b).count(),
                indecomposable: components(&mask, w, h, false) == 1,
                saturated: components(&complement, w, h, true) <= 1,
            }
        })
        .collect();

    LevelSetReport {
        width: w,
        height: h,
        levels,
        superlevel_sets,
        quantization_tol: quant_tol,
        dynamic_range: range,
        quantization_error,
        labels,
    }
}

/// Number of connected components of `mask` (4- or 8-connectivity).
pub(crate) fn components(mask: &[bool], w: usize, h: usize, eight: bool) -> usize {
    let mut seen = vec![false; mask.len()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            let (c, r) = ((p % w) as isize, (p / w) as isize);
            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    if (dr == 0 && dc == 0) || (!eight && dr != 0 && dc != 0) {
                        continue;
                    }
                    let (nc, nr) = (c + dc, r + dr);
                    if nc < 0 || nr < 0 || nc >= w as isize || nr >= h as isize {
                        continue;
                    }
                    let q = nr as usize * w + nc as usize;
                    if mask[q] && !seen[q] {
                        seen[q] = true;
                        queue.push_back(q);
                    }
                }
            }
        }
    }
    count
}
