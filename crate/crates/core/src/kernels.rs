//! The fixed 3x3 kernel family driving the state-space scanner.

use serde::{Deserialize, Serialize};

/// Default value of the `v` parameter shaping the input kernels.
pub const DEFAULT_V: f64 = 1.3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel3(pub [[f64; 3]; 3]);

impl Kernel3 {
    pub const ZERO: Kernel3 = Kernel3([[0.0; 3]; 3]);

    pub fn transpose(&self) -> Self {
        let k = &self.0;
        Kernel3(std::array::from_fn(|r| std::array::from_fn(|c| k[c][r])))
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().flatten().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.0[row][col]
    }
}

/// Kernels for both gradient axes. `a_*` propagate the state, `b_*` inject
/// the wide input tile, `c_*` read the state out and `d_*` are the direct
/// (Sobel) path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSet {
    pub a_x: Kernel3,
    pub a_y: Kernel3,
    pub b_x: Kernel3,
    pub b_y: Kernel3,
    pub c_x: Kernel3,
    pub c_y: Kernel3,
    pub d_x: Kernel3,
    pub d_y: Kernel3,
    pub v: f64,
}

impl Default for KernelSet {
    fn default() -> Self {
        build_kernel_set(DEFAULT_V)
    }
}

pub const SOBEL_X: Kernel3 = Kernel3([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]]);

const STATE_X: Kernel3 = Kernel3([[-1.0, -0.5, 0.0], [-0.5, 0.0, -0.5], [0.0, -0.5, -1.0]]);

pub fn build_kernel_set(v: f64) -> KernelSet {
    let s = v - v * v;
    let t = 2.0 * v;
    let b_x = Kernel3([[s, t, -1.0], [s, t, -2.0], [s, t, -1.0]]);
    KernelSet {
        a_x: STATE_X,
        a_y: STATE_X.transpose(),
        b_x,
        b_y: b_x.transpose(),
        c_x: SOBEL_X,
        c_y: SOBEL_X.transpose(),
        d_x: SOBEL_X,
        d_y: SOBEL_X.transpose(),
        v,
    }
}

impl KernelSet {
    /// State and input paths removed: the scanner collapses to a plain Sobel
    /// operator.
    pub fn direct_only(&self) -> Self {
        KernelSet {
            a_x: Kernel3::ZERO,
            a_y: Kernel3::ZERO,
            b_x: Kernel3::ZERO,
            b_y: Kernel3::ZERO,
            c_x: Kernel3::ZERO,
            c_y: Kernel3::ZERO,
            ..*self
        }
    }
}
