//! Convolutional state-space scanner.
//!
//! The image is visited in one row-major raster. At every pixel a 7x7 input
//! tile `u` is fed to two independent recurrences (one per gradient axis)
//! carrying a 5x5 state `x`:
//!
//! ```text
//! x_bar = a * (A ⋆ pad(x_prev)) + b * (B ⋆ u)          5x5
//! y     = center(C ⋆ x_bar) + (D ⋆ center3(u))         scalar
//! x     = c * x_bar + d * (D ⋆ u)                       5x5
//! ```
//!
//! `⋆` is valid cross-correlation and `pad` a one-pixel zero ring. The state
//! is never reset between rows and starts at zero.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conv::{Convolver, ExactConvolver};
use crate::crossbar::{CrossbarConfig, CrossbarConvolver};
use crate::error::{Error, Result};
use crate::grid::{ensure_same_dims, GrayImage, Grid};
use crate::kernels::{Kernel3, KernelSet};

/// Mixing weights of the recurrence, each within the `[0, 2]` search range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaimWeights {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for SaimWeights {
    /// `c` is held at 0.3 so that `a * c * rho(A)` stays below one; with
    /// `c = 0.8` the state grows by ~2.1x per pixel and overflows within a
    /// few hundred rows of any real image.
    fn default() -> Self {
        Self {
            a: 0.8,
            b: 1.0,
            c: 0.3,
            d: 1.0,
        }
    }
}

impl SaimWeights {
    pub const MIN: f64 = 0.0;
    pub const MAX: f64 = 2.0;

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let w = Self { a, b, c, d };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d)] {
            if !(Self::MIN..=Self::MAX).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "weight {name} = {v} outside [{}, {}]",
                    Self::MIN,
                    Self::MAX
                )));
            }
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn from_array([a, b, c, d]: [f64; 4]) -> Self {
        Self { a, b, c, d }
    }
}

impl FromStr for SaimWeights {
    type Err = Error;

    /// Parses `a,b,c,d`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::InvalidParameter(format!(
                "expected 4 comma-separated weights, got {s:?}"
            )));
        }
        let mut vals = [0.0; 4];
        for (slot, p) in vals.iter_mut().zip(&parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad weight {p:?}")))?;
        }
        let w = Self::from_array(vals);
        w.validate()?;
        Ok(w)
    }
}

impl fmt::Display for SaimWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.a, self.b, self.c, self.d)
    }
}

/// 5x5 state carried along the raster.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SaimState(pub [[f64; 5]; 5]);

/// 7x7 input neighborhood centered on the current pixel.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InputTile(pub [[f64; 7]; 7]);

impl InputTile {
    pub fn center3(&self) -> [[f64; 3]; 3] {
        std::array::from_fn(|r| std::array::from_fn(|c| self.0[r + 2][c + 2]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BorderPolicy {
    /// Mirror without repeating the edge sample (`dcb|abcd|cba`).
    #[default]
    Reflect,
    Zero,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fusion {
    /// Keep the `(gx, gy)` pair with the largest magnitude.
    #[default]
    MaxMagnitude,
    Average,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flip {
    Horizontal,
    Vertical,
}

/// Extra scans over mirrored copies of the image; each member adds one scan.
/// Serialized as `"none"`, `"h"`, `"v"` or `"hv"`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Flips {
    pub horizontal: bool,
    pub vertical: bool,
}

impl Flips {
    pub const NONE: Flips = Flips { horizontal: false, vertical: false };
    pub const H: Flips = Flips { horizontal: true, vertical: false };
    pub const V: Flips = Flips { horizontal: false, vertical: true };
    pub const HV: Flips = Flips { horizontal: true, vertical: true };

    pub fn members(&self) -> Vec<Flip> {
        let mut out = Vec::with_capacity(2);
        if self.horizontal {
            out.push(Flip::Horizontal);
        }
        if self.vertical {
            out.push(Flip::Vertical);
        }
        out
    }
}

impl FromStr for Flips {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "" => Ok(Flips::NONE),
            "h" => Ok(Flips::H),
            "v" => Ok(Flips::V),
            "hv" | "vh" => Ok(Flips::HV),
            other => Err(Error::InvalidParameter(format!(
                "flips must be one of h, v, hv, none; got {other:?}"
            ))),
        }
    }
}

impl TryFrom<String> for Flips {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Flips> for String {
    fn from(f: Flips) -> String {
        f.to_string()
    }
}

impl fmt::Display for Flips {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match (self.horizontal, self.vertical) {
            (false, false) => "none",
            (true, false) => "h",
            (false, true) => "v",
            (true, true) => "hv",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub weights: SaimWeights,
    pub kernels: KernelSet,
    pub flips: Flips,
    pub border_policy: BorderPolicy,
    pub fusion: Fusion,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            weights: SaimWeights::default(),
            kernels: KernelSet::default(),
            flips: Flips::H,
            border_policy: BorderPolicy::Reflect,
            fusion: Fusion::MaxMagnitude,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()
    }

    /// Estimated spectral radius of the state transition `x -> a c A ⋆ pad(x)`,
    /// maximized over both axes. Values >= 1 make the scan diverge.
    pub fn state_gain(&self) -> f64 {
        let k = &self.kernels;
        let rho = transition_radius(&k.a_x).max(transition_radius(&k.a_y));
        self.weights.a * self.weights.c * rho
    }
}

/// Spectral radius of the zero-padded 5x5 correlation with `kernel`, by
/// normalized power iteration.
fn transition_radius(kernel: &Kernel3) -> f64 {
    const STEPS: usize = 4000;
    let mut x = SaimState(std::array::from_fn(|r| {
        std::array::from_fn(|c| 1.0 + 0.01 * (r * 5 + c) as f64)
    }));
    let mut log_growth = 0.0;
    for _ in 0..STEPS {
        let next: [[f64; 5]; 5] = ExactConvolver.correlate(&pad_state(&x), kernel);
        let norm = next.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let prev = x.0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        log_growth = (norm / prev).ln();
        x = SaimState(next.map(|row| row.map(|v| v / norm)));
    }
    log_growth.exp()
}

fn pad_state(state: &SaimState) -> [[f64; 7]; 7] {
    let mut out = [[0.0; 7]; 7];
    for r in 0..5 {
        out[r + 1][1..6].copy_from_slice(&state.0[r]);
    }
    out
}

/// One recurrence step with exact arithmetic.
pub fn saim_step(
    state: &SaimState,
    tile: &InputTile,
    weights: &SaimWeights,
    kernels: &KernelSet,
    axis: Axis,
) -> (f64, SaimState) {
    saim_step_with(&mut ExactConvolver, state, tile, weights, kernels, axis)
}

pub fn saim_step_with<C: Convolver>(
    conv: &mut C,
    state: &SaimState,
    tile: &InputTile,
    weights: &SaimWeights,
    kernels: &KernelSet,
    axis: Axis,
) -> (f64, SaimState) {
    let (a_k, b_k, c_k, d_k) = match axis {
        Axis::X => (&kernels.a_x, &kernels.b_x, &kernels.c_x, &kernels.d_x),
        Axis::Y => (&kernels.a_y, &kernels.b_y, &kernels.c_y, &kernels.d_y),
    };
    let carried: [[f64; 5]; 5] = conv.correlate(&pad_state(state), a_k);
    let driven: [[f64; 5]; 5] = conv.correlate(&tile.0, b_k);
    let mut x_bar = [[0.0; 5]; 5];
    for r in 0..5 {
        for c in 0..5 {
            x_bar[r][c] = weights.a * carried[r][c] + weights.b * driven[r][c];
        }
    }
    let readout: [[f64; 3]; 3] = conv.correlate(&x_bar, c_k);
    let direct: [[f64; 1]; 1] = conv.correlate(&tile.center3(), d_k);
    let y = readout[1][1] + direct[0][0];

    let low_dim: [[f64; 5]; 5] = conv.correlate(&tile.0, d_k);
    let mut next = [[0.0; 5]; 5];
    for r in 0..5 {
        for c in 0..5 {
            next[r][c] = weights.c * x_bar[r][c] + weights.d * low_dim[r][c];
        }
    }
    (y, SaimState(next))
}

#[inline]
fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// 7x7 neighborhood of `(row, col)`; out-of-image samples follow `policy`.
pub fn extract_tile(image: &GrayImage, row: usize, col: usize, policy: BorderPolicy) -> InputTile {
    let (rows, cols) = image.dims();
    InputTile(std::array::from_fn(|dr| {
        std::array::from_fn(|dc| {
            let r = row as isize + dr as isize - 3;
            let c = col as isize + dc as isize - 3;
            match policy {
                BorderPolicy::Zero => image.get_signed(r, c).copied().unwrap_or(0.0),
                BorderPolicy::Reflect => image[(reflect_index(r, rows), reflect_index(c, cols))],
            }
        })
    }))
}

/// Image with a 3-pixel border already applied, for fast tile slicing.
struct PaddedImage {
    cols: usize,
    data: Vec<f64>,
}

impl PaddedImage {
    fn new(image: &GrayImage, policy: BorderPolicy) -> Self {
        let (rows, cols) = image.dims();
        let (pr, pc) = (rows + 6, cols + 6);
        let mut data = Vec::with_capacity(pr * pc);
        for r in 0..pr {
            for c in 0..pc {
                let (sr, sc) = (r as isize - 3, c as isize - 3);
                data.push(match policy {
                    BorderPolicy::Zero => image.get_signed(sr, sc).copied().unwrap_or(0.0),
                    BorderPolicy::Reflect => image[(reflect_index(sr, rows), reflect_index(sc, cols))],
                });
            }
        }
        Self { cols: pc, data }
    }

    #[inline]
    fn tile(&self, row: usize, col: usize) -> InputTile {
        InputTile(std::array::from_fn(|dr| {
            let start = (row + dr) * self.cols + col;
            let mut line = [0.0; 7];
            line.copy_from_slice(&self.data[start..start + 7]);
            line
        }))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientField {
    pub gx: Grid<f64>,
    pub gy: Grid<f64>,
}

impl GradientField {
    pub fn new(gx: Grid<f64>, gy: Grid<f64>) -> Result<Self> {
        ensure_same_dims(gx.dims(), gy.dims())?;
        Ok(Self { gx, gy })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            gx: Grid::new(rows, cols),
            gy: Grid::new(rows, cols),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.gx.dims()
    }

    pub fn is_finite(&self) -> bool {
        self.gx.iter().chain(self.gy.iter()).all(|v| v.is_finite())
    }
}

/// Single raster scan, exact arithmetic, no flips.
pub fn scan_image(image: &GrayImage, config: &ScanConfig) -> Result<GradientField> {
    scan_image_with(image, config, &mut ExactConvolver, &mut ExactConvolver)
}

/// Single raster scan with one convolver per axis chain.
pub fn scan_image_with<C: Convolver + Send>(
    image: &GrayImage,
    config: &ScanConfig,
    conv_x: &mut C,
    conv_y: &mut C,
) -> Result<GradientField> {
    if image.is_empty() {
        return Err(Error::Empty("image has no pixels"));
    }
    let padded = PaddedImage::new(image, config.border_policy);
    let (gx, gy) = rayon::join(
        || scan_axis(&padded, image.dims(), config, conv_x, Axis::X),
        || scan_axis(&padded, image.dims(), config, conv_y, Axis::Y),
    );
    Ok(GradientField { gx, gy })
}

fn scan_axis<C: Convolver>(
    padded: &PaddedImage,
    (rows, cols): (usize, usize),
    config: &ScanConfig,
    conv: &mut C,
    axis: Axis,
) -> Grid<f64> {
    let mut out = Vec::with_capacity(rows * cols);
    let mut state = SaimState::default();
    for r in 0..rows {
        for c in 0..cols {
            let tile = padded.tile(r, c);
            let (y, next) = saim_step_with(conv, &state, &tile, &config.weights, &config.kernels, axis);
            out.push(y);
            state = next;
        }
    }
    Grid::from_vec(rows, cols, out).expect("raster covers the image")
}

fn flip_image(image: &GrayImage, flip: Flip) -> GrayImage {
    match flip {
        Flip::Horizontal => image.flip_horizontal(),
        Flip::Vertical => image.flip_vertical(),
    }
}

/// Maps a field computed on a mirrored image back to the original frame:
/// un-mirror both planes and negate the component along the mirrored axis.
pub fn unflip_field(field: &GradientField, flip: Flip) -> GradientField {
    match flip {
        Flip::Horizontal => GradientField {
            gx: field.gx.flip_horizontal().scale(-1.0),
            gy: field.gy.flip_horizontal(),
        },
        Flip::Vertical => GradientField {
            gx: field.gx.flip_vertical(),
            gy: field.gy.flip_vertical().scale(-1.0),
        },
    }
}

/// Per-pixel fusion of the base scan with un-flipped mirrored scans.
pub fn fuse_scans(
    base: &GradientField,
    flipped: &[(Flip, GradientField)],
    fusion: Fusion,
) -> Result<GradientField> {
    for (_, f) in flipped {
        ensure_same_dims(base.dims(), f.dims())?;
    }
    if flipped.is_empty() {
        return Ok(base.clone());
    }
    let (rows, cols) = base.dims();
    let mut out = base.clone();
    for r in 0..rows {
        for c in 0..cols {
            let p = (r, c);
            match fusion {
                Fusion::MaxMagnitude => {
                    let mut best = (base.gx[p], base.gy[p]);
                    let mut best_mag = best.0.hypot(best.1);
                    for (_, f) in flipped {
                        let cand = (f.gx[p], f.gy[p]);
                        let mag = cand.0.hypot(cand.1);
                        if mag > best_mag {
                            best = cand;
                            best_mag = mag;
                        }
                    }
                    out.gx[p] = best.0;
                    out.gy[p] = best.1;
                }
                Fusion::Average => {
                    let n = (flipped.len() + 1) as f64;
                    out.gx[p] = (base.gx[p] + flipped.iter().map(|(_, f)| f.gx[p]).sum::<f64>()) / n;
                    out.gy[p] = (base.gy[p] + flipped.iter().map(|(_, f)| f.gy[p]).sum::<f64>()) / n;
                }
            }
        }
    }
    Ok(out)
}

/// Where the scanner's convolutions are evaluated.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum ScanBackend {
    #[default]
    Exact,
    Crossbar(CrossbarConfig),
}

/// Base scan plus every configured flip, fused. Scan directions run in
/// parallel; each crossbar chain gets its own noise stream.
pub fn scan_with_flips(
    image: &GrayImage,
    config: &ScanConfig,
    backend: &ScanBackend,
) -> Result<GradientField> {
    use rayon::prelude::*;

    config.validate()?;
    let mut directions: Vec<Option<Flip>> = vec![None];
    directions.extend(config.flips.members().into_iter().map(Some));
    let fields: Vec<Result<(Option<Flip>, GradientField)>> = directions
        .par_iter()
        .enumerate()
        .map(|(i, &flip)| {
            let src = match flip {
                Some(f) => flip_image(image, f),
                None => image.clone(),
            };
            let field = match backend {
                ScanBackend::Exact => scan_image(&src, config)?,
                ScanBackend::Crossbar(cfg) => {
                    cfg.validate()?;
                    let mut cx = CrossbarConvolver::new(cfg.clone(), 2 * i as u64);
                    let mut cy = CrossbarConvolver::new(cfg.clone(), 2 * i as u64 + 1);
                    scan_image_with(&src, config, &mut cx, &mut cy)?
                }
            };
            Ok((flip, flip.map_or(field.clone(), |f| unflip_field(&field, f))))
        })
        .collect();
    let mut base = None;
    let mut flipped = Vec::new();
    for item in fields {
        match item? {
            (None, f) => base = Some(f),
            (Some(flip), f) => flipped.push((flip, f)),
        }
    }
    fuse_scans(&base.expect("base scan always runs"), &flipped, config.fusion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::build_kernel_set;

    fn direct_only_config() -> ScanConfig {
        ScanConfig {
            kernels: KernelSet::default().direct_only(),
            flips: Flips::NONE,
            ..ScanConfig::default()
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let ks = KernelSet::default();
        let (y, next) = saim_step(&SaimState::default(), &InputTile::default(), &SaimWeights::default(), &ks, Axis::X);
        assert_eq!(y, 0.0);
        assert_eq!(next, SaimState::default());
    }

    #[test]
    fn direct_path_alone_is_sobel() {
        let ks = KernelSet::default().direct_only();
        let mut tile = InputTile::default();
        for r in 2..5 {
            tile.0[r][4] = 1.0;
        }
        let w = SaimWeights::new(1.7, 0.4, 1.1, 2.0).unwrap();
        let state = SaimState([[3.0; 5]; 5]);
        let (y, _) = saim_step(&state, &tile, &w, &ks, Axis::X);
        assert_eq!(y, 4.0);
    }

    #[test]
    fn constant_tile_from_rest() {
        // x_bar = b * 2.63 * kappa everywhere; Sobel of a constant is zero.
        let ks = build_kernel_set(1.3);
        let w = SaimWeights::new(0.8, 1.5, 0.3, 1.0).unwrap();
        let kappa = 10.0;
        let tile = InputTile([[kappa; 7]; 7]);
        let (y, next) = saim_step(&SaimState::default(), &tile, &w, &ks, Axis::X);
        assert!(y.abs() < 1e-12);
        // next = c * x_bar + d * (D ⋆ u) = c * x_bar
        for v in next.0.iter().flatten() {
            assert!((v - w.c * 2.63 * w.b * kappa).abs() < 1e-9);
        }
    }

    #[test]
    fn reflect_index_mirrors_without_repeat() {
        let idx: Vec<usize> = (-3..8).map(|i| reflect_index(i, 5)).collect();
        assert_eq!(idx, vec![3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1]);
        assert_eq!(reflect_index(-3, 1), 0);
        assert_eq!(reflect_index(5, 2), 1);
    }

    #[test]
    fn tile_extraction_policies() {
        let img = Grid::from_fn(10, 10, |r, c| (r * 10 + c) as f64);
        let t = extract_tile(&img, 5, 5, BorderPolicy::Zero);
        assert_eq!(t.0[0][0], img[(2, 2)]);
        assert_eq!(t.0[6][6], img[(8, 8)]);
        let z = extract_tile(&img, 0, 0, BorderPolicy::Zero);
        assert_eq!(z.0[0][0], 0.0);
        assert_eq!(z.0[3][3], 0.0 + img[(0, 0)]);
        assert_eq!(z.0[4][5], img[(1, 2)]);
        let m = extract_tile(&img, 0, 0, BorderPolicy::Reflect);
        // row -3 -> 3, col -1 -> 1
        assert_eq!(m.0[0][2], img[(3, 1)]);
        assert_eq!(m.0[3][3], img[(0, 0)]);
    }

    #[test]
    fn padded_tiles_match_extract_tile() {
        let img = Grid::from_fn(4, 6, |r, c| (r * 7 + c * 3) as f64);
        for policy in [BorderPolicy::Zero, BorderPolicy::Reflect] {
            let padded = PaddedImage::new(&img, policy);
            for r in 0..4 {
                for c in 0..6 {
                    assert_eq!(padded.tile(r, c), extract_tile(&img, r, c, policy));
                }
            }
        }
    }

    #[test]
    fn single_pixel_image() {
        let img = Grid::filled(1, 1, 100.0);
        let cfg = ScanConfig { border_policy: BorderPolicy::Zero, ..ScanConfig::default() };
        let f = scan_image(&img, &cfg).unwrap();
        assert_eq!(f.dims(), (1, 1));
        assert!(scan_image(&Grid::new(0, 0), &cfg).is_err());
    }

    #[test]
    fn direct_only_scan_is_sobel_inside() {
        let img = Grid::from_fn(12, 11, |r, c| ((r * 37 + c * 91) % 256) as f64);
        let f = scan_image(&img, &direct_only_config()).unwrap();
        for r in 1..11 {
            for c in 1..10 {
                let mut s = 0.0;
                for u in 0..3 {
                    for v in 0..3 {
                        s += crate::kernels::SOBEL_X.at(u, v) * img[(r + u - 1, c + v - 1)];
                    }
                }
                assert_eq!(f.gx[(r, c)], s);
            }
        }
    }

    #[test]
    fn default_weights_are_stable_and_paper_weights_are_not() {
        let cfg = ScanConfig::default();
        let g = cfg.state_gain();
        assert!((g - 0.24 * 3.298_770_854).abs() < 1e-6, "{g}");
        let hot = ScanConfig {
            weights: SaimWeights::new(0.8, 1.0, 0.8, 1.0).unwrap(),
            ..cfg
        };
        assert!(hot.state_gain() > 2.0);
    }

    #[test]
    fn fuse_rules() {
        let mk = |x: f64, y: f64| GradientField {
            gx: Grid::filled(1, 1, x),
            gy: Grid::filled(1, 1, y),
        };
        let base = mk(3.0, 0.0);
        let out = fuse_scans(&base, &[(Flip::Horizontal, mk(0.0, 5.0))], Fusion::MaxMagnitude).unwrap();
        assert_eq!((out.gx[(0, 0)], out.gy[(0, 0)]), (0.0, 5.0));
        let avg = fuse_scans(&mk(2.0, 0.0), &[(Flip::Vertical, mk(0.0, 2.0))], Fusion::Average).unwrap();
        assert_eq!((avg.gx[(0, 0)], avg.gy[(0, 0)]), (1.0, 1.0));
        assert_eq!(fuse_scans(&base, &[], Fusion::Average).unwrap(), base);
        assert_eq!(fuse_scans(&base, &[(Flip::Horizontal, base.clone())], Fusion::MaxMagnitude).unwrap(), base);
        let wrong = GradientField::zeros(2, 2);
        assert!(fuse_scans(&base, &[(Flip::Horizontal, wrong)], Fusion::Average).is_err());
    }

    #[test]
    fn unflip_of_symmetric_sobel_is_consistent() {
        // For the direct Sobel path, mirroring commutes up to the sign flip.
        let img = Grid::from_fn(9, 9, |r, c| ((r * 13 + c * 29) % 256) as f64);
        let cfg = direct_only_config();
        let base = scan_image(&img, &cfg).unwrap();
        let hf = unflip_field(&scan_image(&img.flip_horizontal(), &cfg).unwrap(), Flip::Horizontal);
        let vf = unflip_field(&scan_image(&img.flip_vertical(), &cfg).unwrap(), Flip::Vertical);
        for r in 1..8 {
            for c in 1..8 {
                assert!((base.gx[(r, c)] - hf.gx[(r, c)]).abs() < 1e-9);
                assert!((base.gy[(r, c)] - hf.gy[(r, c)]).abs() < 1e-9);
                assert!((base.gx[(r, c)] - vf.gx[(r, c)]).abs() < 1e-9);
                assert!((base.gy[(r, c)] - vf.gy[(r, c)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn flag_parsing() {
        assert_eq!("hv".parse::<Flips>().unwrap(), Flips::HV);
        assert_eq!("none".parse::<Flips>().unwrap(), Flips::NONE);
        assert!("x".parse::<Flips>().is_err());
        let w: SaimWeights = "0.8, 1, 0.3,1".parse().unwrap();
        assert_eq!(w, SaimWeights::default());
        assert!("1,2,3".parse::<SaimWeights>().is_err());
        assert!("1,2,3,4".parse::<SaimWeights>().is_err());
        assert_eq!(w.to_string().parse::<SaimWeights>().unwrap(), w);
    }

    #[test]
    fn flips_serialize_as_strings() {
        for (f, text) in [(Flips::NONE, "\"none\""), (Flips::H, "\"h\""), (Flips::HV, "\"hv\"")] {
            assert_eq!(serde_json::to_string(&f).unwrap(), text);
            assert_eq!(serde_json::from_str::<Flips>(text).unwrap(), f);
        }
        assert!(serde_json::from_str::<Flips>("\"x\"").is_err());
    }
}
