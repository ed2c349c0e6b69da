//! Valid-mode 3x3 cross-correlation, symmetric zero padding and center
//! sampling, on dynamic grids and on the fixed-size tiles used by the scanner.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::Kernel3;

/// Embeds `grid` in the center of a zero field of `target` size.
pub fn zero_pad(grid: &Grid<f64>, target: (usize, usize)) -> Result<Grid<f64>> {
    let (rows, cols) = grid.dims();
    let (tr, tc) = target;
    if tr < rows || tc < cols || (tr - rows) % 2 != 0 || (tc - cols) % 2 != 0 {
        return Err(Error::Shape(format!(
            "cannot pad {rows}x{cols} symmetrically to {tr}x{tc}"
        )));
    }
    let (off_r, off_c) = ((tr - rows) / 2, (tc - cols) / 2);
    Ok(Grid::from_fn(tr, tc, |r, c| {
        if r >= off_r && r < off_r + rows && c >= off_c && c < off_c + cols {
            grid[(r - off_r, c - off_c)]
        } else {
            0.0
        }
    }))
}

/// Cross-correlation (no kernel flip) over fully overlapping windows; the
/// output shrinks by two in each axis.
pub fn valid_convolve(input: &Grid<f64>, kernel: &Kernel3) -> Result<Grid<f64>> {
    let (rows, cols) = input.dims();
    if rows < 3 || cols < 3 {
        return Err(Error::Shape(format!(
            "{rows}x{cols} input is smaller than a 3x3 kernel"
        )));
    }
    Ok(Grid::from_fn(rows - 2, cols - 2, |r, c| {
        let mut acc = 0.0;
        for u in 0..3 {
            for v in 0..3 {
                acc += kernel.at(u, v) * input[(r + u, c + v)];
            }
        }
        acc
    }))
}

pub fn center_sample(grid: &Grid<f64>) -> Result<f64> {
    if grid.dims() != (3, 3) {
        return Err(Error::Shape(format!(
            "center sampling expects 3x3, got {:?}",
            grid.dims()
        )));
    }
    Ok(grid[(1, 1)])
}

/// Fixed-size valid cross-correlation: `N`x`N` input, `M = N - 2` output.
#[inline]
pub fn correlate_fixed<const N: usize, const M: usize>(
    input: &[[f64; N]; N],
    kernel: &Kernel3,
) -> [[f64; M]; M] {
    debug_assert_eq!(M + 2, N);
    let mut out = [[0.0; M]; M];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for u in 0..3 {
                for v in 0..3 {
                    acc += kernel.0[u][v] * input[r + u][c + v];
                }
            }
            *cell = acc;
        }
    }
    out
}

/// Backend performing the scanner's convolutions.
pub trait Convolver {
    fn correlate<const N: usize, const M: usize>(
        &mut self,
        input: &[[f64; N]; N],
        kernel: &Kernel3,
    ) -> [[f64; M]; M];
}

/// Exact digital arithmetic.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactConvolver;

impl Convolver for ExactConvolver {
    #[inline]
    fn correlate<const N: usize, const M: usize>(
        &mut self,
        input: &[[f64; N]; N],
        kernel: &Kernel3,
    ) -> [[f64; M]; M] {
        correlate_fixed(input, kernel)
    }
}
