//! Row-major 2-D grids used for images, gradient planes and edge maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(row, col)` coordinate of a pixel.
pub type Pixel = (usize, usize);

/// 8-neighborhood offsets in clockwise order starting at north.
pub(crate) const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// Grayscale intensities, nominally in `[0, 255]`.
pub type GrayImage = Grid<f64>;

impl<T: Clone> Grid<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }
}

impl<T: Clone + Default> Grid<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, T::default())
    }
}

impl<T> Grid<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {rows}x{cols} grid",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<&T> {
        if row < self.rows && col < self.cols {
            Some(&self.data[row * self.cols + col])
        } else {
            None
        }
    }

    /// Signed lookup; `None` outside the grid.
    #[inline]
    pub fn get_signed(&self, row: isize, col: isize) -> Option<&T> {
        if row < 0 || col < 0 {
            return None;
        }
        self.get(row as usize, col as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    /// Iterates `((row, col), &value)` in raster order.
    pub fn indexed_iter(&self) -> impl Iterator<Item = (Pixel, &T)> {
        let cols = self.cols;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| ((i / cols, i % cols), v))
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn zip_map<U, V>(&self, other: &Grid<U>, mut f: impl FnMut(&T, &U) -> V) -> Result<Grid<V>> {
        ensure_same_dims(self.dims(), other.dims())?;
        Ok(Grid {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    /// In-bounds 8-neighbors of `(row, col)`.
    pub fn neighbors8(&self, row: usize, col: usize) -> impl Iterator<Item = Pixel> + '_ {
        NEIGHBORS_8.iter().filter_map(move |&(dr, dc)| {
            let r = row as isize + dr;
            let c = col as isize + dc;
            (r >= 0 && c >= 0 && (r as usize) < self.rows && (c as usize) < self.cols)
                .then_some((r as usize, c as usize))
        })
    }
}

impl<T: Clone> Grid<T> {
    /// Mirror left-right.
    pub fn flip_horizontal(&self) -> Self {
        Grid::from_fn(self.rows, self.cols, |r, c| {
            self[(r, self.cols - 1 - c)].clone()
        })
    }

    /// Mirror top-bottom.
    pub fn flip_vertical(&self) -> Self {
        Grid::from_fn(self.rows, self.cols, |r, c| {
            self[(self.rows - 1 - r, c)].clone()
        })
    }

    pub fn transpose(&self) -> Self {
        Grid::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }
}

impl Grid<f64> {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }
}

impl<T> std::ops::Index<Pixel> for Grid<T> {
    type Output = T;

    #[inline]
    fn index(&self, (row, col): Pixel) -> &T {
        assert!(row < self.rows && col < self.cols, "({row}, {col}) out of bounds");
        &self.data[row * self.cols + col]
    }
}

impl<T> std::ops::IndexMut<Pixel> for Grid<T> {
    #[inline]
    fn index_mut(&mut self, (row, col): Pixel) -> &mut T {
        assert!(row < self.rows && col < self.cols, "({row}, {col}) out of bounds");
        &mut self.data[row * self.cols + col]
    }
}

pub(crate) fn ensure_same_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            found: b,
        });
    }
    Ok(())
}
