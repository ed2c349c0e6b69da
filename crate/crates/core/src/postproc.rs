//! Gradient field to binary edge map: magnitude, direction, non-maximum
//! suppression and single-pass hysteresis.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_8};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ensure_same_dims, Grid, Pixel};
use crate::scan::GradientField;

pub const EDGE: u8 = 255;

/// Non-negative gradient magnitudes.
pub type MagnitudeMap = Grid<f64>;

/// Directions `atan(gx / gy)` in `(-pi/2, pi/2]`.
pub type DirectionMap = Grid<f64>;

pub fn gradient_magnitude(field: &GradientField) -> MagnitudeMap {
    field.gx.zip_map(&field.gy, |x, y| x.hypot(*y)).expect("field planes share dims")
}

pub fn gradient_direction(field: &GradientField) -> DirectionMap {
    field
        .gx
        .zip_map(&field.gy, |&x, &y| {
            if y == 0.0 {
                FRAC_PI_2
            } else {
                let t = (x / y).atan();
                if t <= -FRAC_PI_2 {
                    FRAC_PI_2
                } else {
                    t
                }
            }
        })
        .expect("field planes share dims")
}

/// Neighbor offsets compared against for a direction. `0` points along the
/// rows (gx = 0), `pi/2` along the columns.
fn nms_offsets(theta: f64) -> [(isize, isize); 2] {
    if theta.abs() >= 3.0 * FRAC_PI_8 {
        [(0, -1), (0, 1)]
    } else if theta >= FRAC_PI_8 {
        [(1, 1), (-1, -1)]
    } else if theta >= -FRAC_PI_8 {
        [(-1, 0), (1, 0)]
    } else {
        [(-1, 1), (1, -1)]
    }
}

/// Keeps a pixel only when it is `>=` both in-bounds neighbors along its
/// quantized direction.
pub fn non_max_suppress(mag: &MagnitudeMap, dir: &DirectionMap) -> Result<MagnitudeMap> {
    ensure_same_dims(mag.dims(), dir.dims())?;
    let (rows, cols) = mag.dims();
    Ok(Grid::from_fn(rows, cols, |r, c| {
        let m = mag[(r, c)];
        let keep = nms_offsets(dir[(r, c)]).iter().all(|&(dr, dc)| {
            mag.get_signed(r as isize + dr, c as isize + dc)
                .is_none_or(|&n| m >= n)
        });
        if keep {
            m
        } else {
            0.0
        }
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HysteresisParams {
    pub high: f64,
    pub low: f64,
}

impl HysteresisParams {
    pub const LOW_RATIO: f64 = 0.95;

    pub fn new(high: f64, low: f64) -> Result<Self> {
        let p = Self { high, low };
        p.validate()?;
        Ok(p)
    }

    /// `low = 0.95 * high`.
    pub fn from_high(high: f64) -> Result<Self> {
        Self::new(high, Self::LOW_RATIO * high)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("high", self.high), ("low", self.low)] {
            if !(0.0..=255.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} threshold {v} outside [0, 255]")));
            }
        }
        if self.low > self.high {
            return Err(Error::InvalidParameter(format!(
                "low threshold {} exceeds high threshold {}",
                self.low, self.high
            )));
        }
        Ok(())
    }
}

impl Default for HysteresisParams {
    fn default() -> Self {
        Self {
            high: 100.0,
            low: 95.0,
        }
    }
}

/// Map whose pixels are all 0 or 255.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Grid<u8>", into = "Grid<u8>")]
pub struct BinaryEdgeMap(Grid<u8>);

impl BinaryEdgeMap {
    pub fn from_grid(grid: Grid<u8>) -> Result<Self> {
        if let Some(v) = grid.iter().find(|&&v| v != 0 && v != EDGE) {
            return Err(Error::InvalidParameter(format!("edge map value {v} is neither 0 nor 255")));
        }
        Ok(Self(grid))
    }

    pub fn from_mask(mask: &Grid<bool>) -> Self {
        Self(mask.map(|&e| if e { EDGE } else { 0 }))
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self(Grid::new(rows, cols))
    }

    pub fn from_pixels(rows: usize, cols: usize, pixels: impl IntoIterator<Item = Pixel>) -> Self {
        let mut g = Grid::new(rows, cols);
        for p in pixels {
            g[p] = EDGE;
        }
        Self(g)
    }

    pub fn as_grid(&self) -> &Grid<u8> {
        &self.0
    }

    pub fn into_grid(self) -> Grid<u8> {
        self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    #[inline]
    pub fn is_edge(&self, p: Pixel) -> bool {
        self.0[p] == EDGE
    }

    pub fn to_mask(&self) -> Grid<bool> {
        self.0.map(|&v| v == EDGE)
    }

    pub fn edge_pixels(&self) -> Vec<Pixel> {
        self.0.indexed_iter().filter(|(_, &v)| v == EDGE).map(|(p, _)| p).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.0.iter().filter(|&&v| v == EDGE).count()
    }
}

impl TryFrom<Grid<u8>> for BinaryEdgeMap {
    type Error = Error;

    fn try_from(g: Grid<u8>) -> Result<Self> {
        Self::from_grid(g)
    }
}

impl From<BinaryEdgeMap> for Grid<u8> {
    fn from(m: BinaryEdgeMap) -> Self {
        m.0
    }
}

/// Single pass: strong (`> high`) pixels become edges; weak pixels
/// (`low <= m <= high`, `m > 0`) become edges only if 8-adjacent to a pixel
/// that was strong in the initial labeling.
pub fn hysteresis_threshold(mag: &MagnitudeMap, params: &HysteresisParams) -> Result<BinaryEdgeMap> {
    params.validate()?;
    let (rows, cols) = mag.dims();
    let strong = mag.map(|&m| m > params.high);
    let out = Grid::from_fn(rows, cols, |r, c| {
        let m = mag[(r, c)];
        if strong[(r, c)] {
            true
        } else if m >= params.low && m > 0.0 {
            strong.neighbors8(r, c).any(|p| strong[p])
        } else {
            false
        }
    });
    Ok(BinaryEdgeMap::from_mask(&out))
}

/// How raw magnitudes are brought to the threshold scale.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagnitudeScale {
    Raw,
    /// Linear rescale so the largest magnitude becomes 255.
    #[default]
    NormalizeMax,
}

/// Below this the map is treated as flat and scaled to zero.
pub const FLAT_MAGNITUDE: f64 = 1e-6;

pub fn scale_magnitude(mag: &MagnitudeMap, scale: MagnitudeScale) -> MagnitudeMap {
    match scale {
        MagnitudeScale::Raw => mag.clone(),
        MagnitudeScale::NormalizeMax => {
            let max = mag.iter().fold(0.0_f64, |m, &v| m.max(v));
            if max < FLAT_MAGNITUDE {
                Grid::new(mag.rows(), mag.cols())
            } else {
                mag.scale(255.0 / max)
            }
        }
    }
}

/// Magnitude, direction, NMS and hysteresis in one call.
pub fn edges_from_gradients(
    field: &GradientField,
    params: &HysteresisParams,
    scale: MagnitudeScale,
) -> Result<BinaryEdgeMap> {
    if !field.is_finite() {
        return Err(Error::NonFiniteGradient);
    }
    let mag = scale_magnitude(&gradient_magnitude(field), scale);
    let thin = non_max_suppress(&mag, &gradient_direction(field))?;
    hysteresis_threshold(&thin, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn field(gx: Vec<f64>, gy: Vec<f64>, rows: usize, cols: usize) -> GradientField {
        GradientField::new(Grid::from_vec(rows, cols, gx).unwrap(), Grid::from_vec(rows, cols, gy).unwrap()).unwrap()
    }

    #[test]
    fn magnitude_examples() {
        let f = field(vec![3.0, 0.0, -3.0], vec![4.0, 0.0, 4.0], 1, 3);
        assert_eq!(gradient_magnitude(&f).as_slice(), &[5.0, 0.0, 5.0]);
    }

    #[test]
    fn direction_examples() {
        let f = field(vec![1.0, 0.0, 1.0, -1.0], vec![1.0, 1.0, 0.0, 0.0], 1, 4);
        let d = gradient_direction(&f);
        assert!((d[(0, 0)] - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(d[(0, 1)], 0.0);
        assert_eq!(d[(0, 2)], FRAC_PI_2);
        assert_eq!(d[(0, 3)], FRAC_PI_2);
    }

    #[test]
    fn nms_local_max_and_suppression() {
        // vertical neighbors for theta = 0
        let mag = Grid::from_vec(3, 1, vec![3.0, 5.0, 4.0]).unwrap();
        let dir = Grid::new(3, 1);
        let out = non_max_suppress(&mag, &dir).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 5.0, 0.0]);
    }

    #[test]
    fn nms_plateau_survives() {
        let mag = Grid::filled(4, 4, 7.0);
        let dir = Grid::filled(4, 4, 0.3);
        assert_eq!(non_max_suppress(&mag, &dir).unwrap(), mag);
    }

    #[test]
    fn nms_rejects_mismatch() {
        assert!(non_max_suppress(&Grid::new(2, 2), &Grid::new(2, 3)).is_err());
    }

    #[test]
    fn bins_map_to_offsets() {
        assert_eq!(nms_offsets(0.0), [(-1, 0), (1, 0)]);
        assert_eq!(nms_offsets(FRAC_PI_4), [(1, 1), (-1, -1)]);
        assert_eq!(nms_offsets(FRAC_PI_2), [(0, -1), (0, 1)]);
        assert_eq!(nms_offsets(-FRAC_PI_2 + 0.01), [(0, -1), (0, 1)]);
        assert_eq!(nms_offsets(-FRAC_PI_4), [(-1, 1), (1, -1)]);
    }

    #[test]
    fn vertical_step_thins_to_one_column() {
        // Sobel-like response of a vertical step: two equal columns.
        let (rows, cols) = (8, 8);
        let gx = Grid::from_fn(rows, cols, |_, c| match c {
            3 => 4.0,
            4 => 2.0,
            _ => 0.0,
        });
        let f = GradientField::new(gx, Grid::new(rows, cols)).unwrap();
        let thin = non_max_suppress(&gradient_magnitude(&f), &gradient_direction(&f)).unwrap();
        for r in 0..rows {
            let nz: Vec<usize> = (0..cols).filter(|&c| thin[(r, c)] > 0.0).collect();
            assert_eq!(nz, vec![3]);
        }
    }

    #[test]
    fn hysteresis_examples() {
        let p = HysteresisParams::new(100.0, 50.0).unwrap();
        let mag = Grid::from_vec(1, 5, vec![120.0, 75.0, 0.0, 30.0, 75.0]).unwrap();
        let e = hysteresis_threshold(&mag, &p).unwrap();
        assert_eq!(e.as_grid().as_slice(), &[255, 255, 0, 0, 0]);
    }

    #[test]
    fn hysteresis_is_single_pass() {
        // weak chain: only the pixel touching the strong one is promoted
        let p = HysteresisParams::new(100.0, 50.0).unwrap();
        let mag = Grid::from_vec(1, 4, vec![200.0, 60.0, 60.0, 60.0]).unwrap();
        let e = hysteresis_threshold(&mag, &p).unwrap();
        assert_eq!(e.as_grid().as_slice(), &[255, 255, 0, 0]);
    }

    #[test]
    fn zero_magnitude_never_an_edge() {
        let p = HysteresisParams::new(0.0, 0.0).unwrap();
        let mag = Grid::from_vec(1, 3, vec![0.0, 1.0, 0.0]).unwrap();
        let e = hysteresis_threshold(&mag, &p).unwrap();
        assert_eq!(e.as_grid().as_slice(), &[0, 255, 0]);
    }

    #[test]
    fn params_validation() {
        assert!(HysteresisParams::new(10.0, 20.0).is_err());
        assert!(HysteresisParams::new(300.0, 20.0).is_err());
        let p = HysteresisParams::from_high(100.0).unwrap();
        assert!((p.low - 95.0).abs() < 1e-12);
    }

    #[test]
    fn normalization() {
        let mag = Grid::from_vec(1, 3, vec![0.0, 5.0, 10.0]).unwrap();
        assert_eq!(scale_magnitude(&mag, MagnitudeScale::NormalizeMax).as_slice(), &[0.0, 127.5, 255.0]);
        assert_eq!(scale_magnitude(&mag, MagnitudeScale::Raw), mag);
        let flat = Grid::filled(2, 2, 1e-9);
        assert!(scale_magnitude(&flat, MagnitudeScale::NormalizeMax).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn binary_map_rejects_gray() {
        assert!(BinaryEdgeMap::from_grid(Grid::filled(1, 1, 50u8)).is_err());
        let m = BinaryEdgeMap::from_pixels(2, 2, [(0, 1)]);
        assert_eq!(m.edge_pixels(), vec![(0, 1)]);
        assert_eq!(m.edge_count(), 1);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<BinaryEdgeMap>(&json).unwrap(), m);
    }

    #[test]
    fn non_finite_field_rejected() {
        let f = field(vec![f64::NAN], vec![0.0], 1, 1);
        assert!(matches!(
            edges_from_gradients(&f, &HysteresisParams::default(), MagnitudeScale::Raw),
            Err(Error::NonFiniteGradient)
        ));
    }
}
