//! Tolerant confusion counts and the derived benchmark scores.

mod ssim;
mod thinning;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ensure_same_dims, Grid, Pixel};
use crate::postproc::BinaryEdgeMap;

pub use ssim::{ssim, ssim_grids};
pub use thinning::zhang_suen;

/// Window half-width of the tolerant match (5x5).
pub const MATCH_RADIUS: usize = 2;
pub const TP_MIN: usize = 3;
pub const TP_MAX: usize = 12;
pub const FP_MIN: usize = 12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

impl ConfusionCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Summed-area table with a zero first row and column.
struct Integral {
    cols: usize,
    sums: Vec<u32>,
}

impl Integral {
    fn new(mask: &Grid<bool>) -> Self {
        let (rows, cols) = mask.dims();
        let w = cols + 1;
        let mut sums = vec![0u32; (rows + 1) * w];
        for r in 0..rows {
            let mut line = 0u32;
            for c in 0..cols {
                line += u32::from(mask[(r, c)]);
                sums[(r + 1) * w + c + 1] = sums[r * w + c + 1] + line;
            }
        }
        Self { cols: w, sums }
    }

    /// Count over rows `r0..r1`, cols `c0..c1` (half-open).
    fn window(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> usize {
        let at = |r: usize, c: usize| self.sums[r * self.cols + c] as i64;
        (at(r1, c1) - at(r0, c1) - at(r1, c0) + at(r0, c0)) as usize
    }
}

/// Per GT edge pixel: 3..=12 predicted edges in its clipped 5x5 window is a
/// TP, anything else an FN. Per GT background pixel: 12 or more is an FP.
pub fn count_confusion(pred: &BinaryEdgeMap, gt: &BinaryEdgeMap) -> Result<ConfusionCounts> {
    ensure_same_dims(gt.dims(), pred.dims())?;
    let (rows, cols) = gt.dims();
    let integral = Integral::new(&pred.to_mask());
    let gt_grid = gt.as_grid();
    let mut c = ConfusionCounts::default();
    for r in 0..rows {
        let (r0, r1) = (r.saturating_sub(MATCH_RADIUS), (r + MATCH_RADIUS + 1).min(rows));
        for col in 0..cols {
            let (c0, c1) = (col.saturating_sub(MATCH_RADIUS), (col + MATCH_RADIUS + 1).min(cols));
            let n = integral.window(r0, r1, c0, c1);
            if gt_grid[(r, col)] == crate::postproc::EDGE {
                if (TP_MIN..=TP_MAX).contains(&n) {
                    c.tp += 1;
                } else {
                    c.fn_ += 1;
                }
            } else if n >= FP_MIN {
                c.fp += 1;
            }
        }
    }
    Ok(c)
}

/// Harmonic mean of precision and recall; 0 when undefined.
pub fn f_measure(c: &ConfusionCounts) -> f64 {
    let (p, r) = (c.precision(), c.recall());
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdsOis {
    pub ods: f64,
    /// Threshold index achieving the ODS (first on ties).
    pub ods_index: usize,
    pub ois: f64,
    /// Per image: best threshold index and its F.
    pub per_image_best: Vec<(usize, f64)>,
}

/// `sweep[i][t]` holds image `i`'s counts at threshold `t`.
pub fn ods_ois(sweep: &[Vec<ConfusionCounts>]) -> Result<OdsOis> {
    let n_t = sweep.first().map(Vec::len).ok_or(Error::Empty("no images in sweep"))?;
    if n_t == 0 {
        return Err(Error::Empty("no thresholds in sweep"));
    }
    if sweep.iter().any(|s| s.len() != n_t) {
        return Err(Error::InvalidParameter("images swept over different threshold grids".into()));
    }
    let best = |fs: &mut dyn Iterator<Item = f64>| {
        fs.enumerate()
            .fold((0usize, f64::NEG_INFINITY), |(bi, bf), (i, f)| if f > bf { (i, f) } else { (bi, bf) })
    };
    let (ods_index, ods) = best(&mut (0..n_t).map(|t| f_measure(&sweep.iter().map(|s| s[t]).sum())));
    let per_image_best: Vec<(usize, f64)> = sweep.iter().map(|s| best(&mut s.iter().map(f_measure))).collect();
    let ois = per_image_best.iter().map(|b| b.1).sum::<f64>() / sweep.len() as f64;
    Ok(OdsOis {
        ods,
        ods_index,
        ois,
        per_image_best,
    })
}

/// 8-connected components of the `true` cells, each in BFS order.
pub fn connected_components(mask: &Grid<bool>) -> Vec<Vec<Pixel>> {
    let (rows, cols) = mask.dims();
    let mut seen = Grid::filled(rows, cols, false);
    let mut out = Vec::new();
    for (p, &on) in mask.indexed_iter() {
        if !on || seen[p] {
            continue;
        }
        seen[p] = true;
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([p]);
        while let Some(q) = queue.pop_front() {
            comp.push(q);
            for n in mask.neighbors8(q.0, q.1) {
                if mask[n] && !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Mean pixel count of 8-connected edge components; 0 for an empty map.
pub fn average_contour_length(map: &BinaryEdgeMap) -> f64 {
    let comps = connected_components(&map.to_mask());
    if comps.is_empty() {
        0.0
    } else {
        comps.iter().map(Vec::len).sum::<usize>() as f64 / comps.len() as f64
    }
}

/// GT pixels scored TP per predicted edge pixel; 0 for an empty prediction.
pub fn area_coverage(pred: &BinaryEdgeMap, gt: &BinaryEdgeMap) -> Result<f64> {
    let c = count_confusion(pred, gt)?;
    let n = pred.edge_count();
    Ok(if n == 0 { 0.0 } else { c.tp as f64 / n as f64 })
}

/// Per component, pixel count over skeleton pixel count, averaged.
pub fn mean_edge_thickness(map: &BinaryEdgeMap) -> f64 {
    let mask = map.to_mask();
    let comps = connected_components(&mask);
    if comps.is_empty() {
        return 0.0;
    }
    let skel = zhang_suen(&mask);
    let total: f64 = comps
        .iter()
        .map(|c| {
            let s = c.iter().filter(|&&p| skel[p]).count().max(1);
            c.len() as f64 / s as f64
        })
        .sum();
    total / comps.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub name: String,
    pub counts: ConfusionCounts,
    pub f: f64,
    pub ac: f64,
    pub acl: f64,
    pub ssim: f64,
    pub thickness: f64,
    pub edge_pixels: usize,
}

pub fn evaluate_image(name: &str, pred: &BinaryEdgeMap, gt: &BinaryEdgeMap) -> Result<ImageMetrics> {
    let counts = count_confusion(pred, gt)?;
    let n = pred.edge_count();
    Ok(ImageMetrics {
        name: name.to_string(),
        counts,
        f: f_measure(&counts),
        ac: if n == 0 { 0.0 } else { counts.tp as f64 / n as f64 },
        acl: average_contour_length(pred),
        ssim: ssim(pred, gt)?,
        thickness: mean_edge_thickness(pred),
        edge_pixels: n,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ods: f64,
    pub ois: f64,
    pub ac: f64,
    pub acl: f64,
    pub ssim: f64,
    pub thickness: f64,
    pub per_image: Vec<ImageMetrics>,
}

impl MetricsReport {
    /// Averages the per-image scores; ODS and OIS come from a sweep.
    pub fn new(ods: f64, ois: f64, per_image: Vec<ImageMetrics>) -> Result<Self> {
        if per_image.is_empty() {
            return Err(Error::Empty("no images evaluated"));
        }
        let n = per_image.len() as f64;
        let mean = |f: fn(&ImageMetrics) -> f64| per_image.iter().map(f).sum::<f64>() / n;
        Ok(Self {
            ods,
            ois,
            ac: mean(|m| m.ac),
            acl: mean(|m| m.acl),
            ssim: mean(|m| m.ssim),
            thickness: mean(|m| m.thickness),
            per_image,
        })
    }
}
