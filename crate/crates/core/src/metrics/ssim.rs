//! Structural similarity with an 11x11 Gaussian window (sigma 1.5), valid
//! windows only. Maps smaller than the window use one global window.

use crate::error::Result;
use crate::grid::{ensure_same_dims, Grid};
use crate::postproc::BinaryEdgeMap;

const WIN: usize = 11;
const SIGMA: f64 = 1.5;
const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

fn gaussian() -> [f64; WIN] {
    let half = (WIN / 2) as f64;
    let w: [f64; WIN] = std::array::from_fn(|i| (-((i as f64 - half).powi(2)) / (2.0 * SIGMA * SIGMA)).exp());
    let s: f64 = w.iter().sum();
    w.map(|v| v / s)
}

/// Separable valid-mode filtering.
fn filter(img: &Grid<f64>, w: &[f64; WIN]) -> Grid<f64> {
    let (rows, cols) = img.dims();
    let oc = cols + 1 - WIN;
    let horiz = Grid::from_fn(rows, oc, |r, c| (0..WIN).map(|k| w[k] * img[(r, c + k)]).sum::<f64>());
    Grid::from_fn(rows + 1 - WIN, oc, |r, c| (0..WIN).map(|k| w[k] * horiz[(r + k, c)]).sum::<f64>())
}

fn ssim_value(mx: f64, my: f64, vx: f64, vy: f64, cxy: f64) -> f64 {
    ((2.0 * mx * my + C1) * (2.0 * cxy + C2)) / ((mx * mx + my * my + C1) * (vx + vy + C2))
}

pub fn ssim_grids(a: &Grid<f64>, b: &Grid<f64>) -> Result<f64> {
    ensure_same_dims(a.dims(), b.dims())?;
    let (rows, cols) = a.dims();
    if rows == 0 || cols == 0 {
        return Ok(1.0);
    }
    if rows < WIN || cols < WIN {
        let n = (rows * cols) as f64;
        let mx = a.iter().sum::<f64>() / n;
        let my = b.iter().sum::<f64>() / n;
        let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(b.iter()) {
            vx += (x - mx) * (x - mx);
            vy += (y - my) * (y - my);
            cxy += (x - mx) * (y - my);
        }
        return Ok(ssim_value(mx, my, vx / n, vy / n, cxy / n));
    }
    let w = gaussian();
    let mu_a = filter(a, &w);
    let mu_b = filter(b, &w);
    let aa = filter(&a.zip_map(a, |x, y| x * y)?, &w);
    let bb = filter(&b.zip_map(b, |x, y| x * y)?, &w);
    let ab = filter(&a.zip_map(b, |x, y| x * y)?, &w);
    let n = mu_a.len() as f64;
    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (mx, my) = (mu_a.as_slice()[i], mu_b.as_slice()[i]);
        let vx = aa.as_slice()[i] - mx * mx;
        let vy = bb.as_slice()[i] - my * my;
        let cxy = ab.as_slice()[i] - mx * my;
        total += ssim_value(mx, my, vx, vy, cxy);
    }
    Ok(total / n)
}

pub fn ssim(pred: &BinaryEdgeMap, gt: &BinaryEdgeMap) -> Result<f64> {
    let to_f = |m: &BinaryEdgeMap| m.as_grid().map(|&v| f64::from(v));
    ssim_grids(&to_f(pred), &to_f(gt))
}
