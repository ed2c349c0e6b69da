//! Deterministic synthetic images with boundary ground truth.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{save_edge_map, save_gray};
use crate::error::Result;
use crate::grid::{GrayImage, Grid};
use crate::pipeline::Sample;
use crate::postproc::BinaryEdgeMap;

pub fn constant_image(rows: usize, cols: usize, level: f64) -> GrayImage {
    Grid::filled(rows, cols, level)
}

/// Uniform noise in `[0, 255]`.
pub fn random_image(rng: &mut impl Rng, rows: usize, cols: usize) -> GrayImage {
    Grid::from_fn(rows, cols, |_, _| rng.random_range(0.0..=255.0))
}

/// Dark left half, bright from column `step_col` on.
pub fn vertical_step(rows: usize, cols: usize, step_col: usize, lo: f64, hi: f64) -> GrayImage {
    Grid::from_fn(rows, cols, |_, c| if c < step_col { lo } else { hi })
}

/// Bright bar of the given width crossing the image, tilted by `angle`
/// radians from vertical.
pub fn oriented_bar(rows: usize, cols: usize, width: f64, angle: f64) -> GrayImage {
    let (cr, cc) = (rows as f64 / 2.0, cols as f64 / 2.0);
    let (s, c) = angle.sin_cos();
    Grid::from_fn(rows, cols, |r, col| {
        let d = (col as f64 - cc) * c - (r as f64 - cr) * s;
        if d.abs() <= width / 2.0 {
            200.0
        } else {
            50.0
        }
    })
}

/// Ground truth of a region labeling: a pixel is an edge when its label
/// differs from its right or lower neighbor.
pub fn label_boundaries(labels: &Grid<u32>) -> BinaryEdgeMap {
    let (rows, cols) = labels.dims();
    let mask = Grid::from_fn(rows, cols, |r, c| {
        let l = labels[(r, c)];
        (c + 1 < cols && labels[(r, c + 1)] != l) || (r + 1 < rows && labels[(r + 1, c)] != l)
    });
    BinaryEdgeMap::from_mask(&mask)
}

fn box_blur(img: &GrayImage) -> GrayImage {
    let (rows, cols) = img.dims();
    Grid::from_fn(rows, cols, |r, c| {
        let mut s = 0.0;
        let mut n = 0.0;
        for dr in -1isize..=1 {
            for dc in -1isize..=1 {
                if let Some(v) = img.get_signed(r as isize + dr, c as isize + dc) {
                    s += v;
                    n += 1.0;
                }
            }
        }
        s / n
    })
}

/// Rectangles and discs of random gray levels over a shaded background,
/// lightly blurred, with additive noise. Boundaries of the painted regions
/// are the ground truth.
pub fn shapes_scene(seed: u64, rows: usize, cols: usize) -> Sample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Grid::filled(rows, cols, 0u32);
    let mut levels = vec![rng.random_range(60.0..120.0)];
    let shapes = rng.random_range(4..8);
    for k in 1..=shapes {
        // prefer levels well separated from those already used
        let mut level: f64 = rng.random_range(20.0..235.0);
        for _ in 0..64 {
            if levels.iter().all(|&o: &f64| (o - level).abs() > 30.0) {
                break;
            }
            level = rng.random_range(20.0..235.0);
        }
        levels.push(level);
        let h = rng.random_range(rows / 6..rows / 2);
        let w = rng.random_range(cols / 6..cols / 2);
        let r0 = rng.random_range(4..rows - h - 4);
        let c0 = rng.random_range(4..cols - w - 4);
        let disc = rng.random_bool(0.4);
        for r in r0..r0 + h {
            for c in c0..c0 + w {
                let inside = if disc {
                    let (dy, dx) = (
                        (r as f64 - (r0 as f64 + h as f64 / 2.0)) / (h as f64 / 2.0),
                        (c as f64 - (c0 as f64 + w as f64 / 2.0)) / (w as f64 / 2.0),
                    );
                    dy * dy + dx * dx <= 1.0
                } else {
                    true
                };
                if inside {
                    labels[(r, c)] = k;
                }
            }
        }
    }
    let shade = rng.random_range(-0.2..0.2);
    let painted = Grid::from_fn(rows, cols, |r, c| {
        let l = labels[(r, c)];
        let base = levels[l as usize];
        if l == 0 {
            base + shade * (r + c) as f64
        } else {
            base
        }
    });
    let sigma = rng.random_range(2.0..6.0);
    let blurred = box_blur(&painted);
    let image = blurred.map(|&v| {
        // sum of uniforms approximates a Gaussian well enough here
        let n: f64 = (0..4).map(|_| rng.random_range(-1.0..1.0)).sum::<f64>() * sigma * 0.866;
        (v + n).clamp(0.0, 255.0)
    });
    Sample {
        name: format!("scene_{seed:03}"),
        image,
        gt: label_boundaries(&labels),
    }
}

/// `n` scenes of `rows x cols`, seeds `base_seed..base_seed + n`.
pub fn sample_corpus(n: usize, base_seed: u64, rows: usize, cols: usize) -> Vec<Sample> {
    (0..n as u64).map(|i| shapes_scene(base_seed + i, rows, cols)).collect()
}

/// Writes `images/<name>.png` and `gt/<name>.png`.
pub fn write_dataset(dir: &Path, samples: &[Sample]) -> Result<()> {
    std::fs::create_dir_all(dir.join("images"))?;
    std::fs::create_dir_all(dir.join("gt"))?;
    for s in samples {
        save_gray(&s.image, &dir.join("images").join(format!("{}.png", s.name)))?;
        save_edge_map(&s.gt, &dir.join("gt").join(format!("{}.png", s.name)))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_deterministic() {
        assert_eq!(shapes_scene(7, 64, 64), shapes_scene(7, 64, 64));
        assert_ne!(shapes_scene(7, 64, 64).image, shapes_scene(8, 64, 64).image);
    }

    #[test]
    fn scene_has_boundaries() {
        let s = shapes_scene(1, 80, 80);
        assert!(s.gt.edge_count() > 50);
        assert!(s.image.iter().all(|v| (0.0..=255.0).contains(v)));
    }

    #[test]
    fn boundary_of_square() {
        let labels = Grid::from_fn(6, 6, |r, c| u32::from((2..4).contains(&r) && (2..4).contains(&c)));
        let gt = label_boundaries(&labels);
        assert!(gt.is_edge((1, 2)));
        assert!(gt.is_edge((2, 1)));
        assert!(gt.is_edge((3, 3)));
        assert!(!gt.is_edge((0, 0)));
    }
}
