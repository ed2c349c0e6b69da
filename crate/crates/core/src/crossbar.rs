//! Numerical model of the memristor-crossbar convolution accelerator.
//!
//! Pixel intensities are mapped to input voltages (`V = p_v * x`), kernel
//! entries to conductances (`G = p_g * k`), and each output is the inverting
//! transimpedance sum `O = -r_k1 * sum(G * V)`. Decoding divides by
//! `-r_k1 * p_v * p_g`. Negative kernel entries map to negative conductances;
//! no differential pair is modelled.
//!
//! Readout noise is zero-mean uniform with amplitude `noise_level` times the
//! full-scale output of the call, drawn independently per sample and averaged
//! over `samples_per_pulse` samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conv::{correlate_fixed, valid_convolve, Convolver};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::Kernel3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossbarConfig {
    /// Volts per intensity unit.
    pub p_v: f64,
    /// Siemens per kernel unit.
    pub p_g: f64,
    /// Feedback resistance in ohms.
    pub r_k1: f64,
    /// Uniform conductance levels; `None` disables quantization.
    pub conductance_levels: Option<u32>,
    /// Noise amplitude as a fraction of full-scale output.
    pub noise_level: f64,
    pub samples_per_pulse: u32,
    pub rng_seed: u64,
}

impl Default for CrossbarConfig {
    fn default() -> Self {
        Self {
            p_v: 1e-2,
            p_g: 1e-4,
            r_k1: 1e5,
            conductance_levels: Some(256),
            noise_level: 0.0,
            samples_per_pulse: 1,
            rng_seed: 0,
        }
    }
}

impl CrossbarConfig {
    /// Noise-free and unquantized: decoded output equals digital convolution.
    pub fn ideal() -> Self {
        Self {
            conductance_levels: None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")))
            }
        };
        positive("p_v", self.p_v)?;
        positive("p_g", self.p_g)?;
        positive("r_k1", self.r_k1)?;
        if !(self.noise_level.is_finite() && self.noise_level >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise_level must be >= 0, got {}",
                self.noise_level
            )));
        }
        if self.samples_per_pulse == 0 {
            return Err(Error::InvalidParameter("samples_per_pulse must be >= 1".into()));
        }
        if matches!(self.conductance_levels, Some(l) if l < 2) {
            return Err(Error::InvalidParameter("conductance_levels must be >= 2".into()));
        }
        Ok(())
    }

    /// `-r_k1 * p_v * p_g`: volts per unit of digital convolution output.
    pub fn output_gain(&self) -> f64 {
        -self.r_k1 * self.p_v * self.p_g
    }
}

pub fn map_to_voltages(x: &Grid<f64>, cfg: &CrossbarConfig) -> Grid<f64> {
    x.scale(cfg.p_v)
}

/// Conductances for a kernel, quantized to `conductance_levels` uniform
/// levels spanning `[-max|k| p_g, +max|k| p_g]` when enabled.
pub fn map_to_conductances(k: &Kernel3, cfg: &CrossbarConfig) -> Kernel3 {
    let g_max = k.max_abs() * cfg.p_g;
    let quantize = |g: f64| match cfg.conductance_levels {
        Some(levels) if g_max > 0.0 => {
            let step = 2.0 * g_max / f64::from(levels - 1);
            let idx = ((g + g_max) / step).round().clamp(0.0, f64::from(levels - 1));
            idx * step - g_max
        }
        _ => g,
    };
    Kernel3(k.0.map(|row| row.map(|v| quantize(v * cfg.p_g))))
}

fn apply_readout_noise(values: &mut [f64], cfg: &CrossbarConfig, rng: &mut impl Rng) {
    let full_scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let amplitude = cfg.noise_level * full_scale;
    if amplitude <= 0.0 {
        return;
    }
    let n = cfg.samples_per_pulse.max(1);
    for v in values.iter_mut() {
        let mut acc = 0.0;
        for _ in 0..n {
            acc += rng.random_range(-amplitude..=amplitude);
        }
        *v += acc / f64::from(n);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossbarOutput {
    /// Op-amp output voltages.
    pub volts: Grid<f64>,
    /// Volts scaled back to convolution units.
    pub decoded: Grid<f64>,
}

/// Valid 3x3 convolution computed through the crossbar model.
pub fn crossbar_convolve(
    x: &Grid<f64>,
    k: &Kernel3,
    cfg: &CrossbarConfig,
    rng: &mut impl Rng,
) -> Result<CrossbarOutput> {
    let volts_in = map_to_voltages(x, cfg);
    let g = map_to_conductances(k, cfg);
    let mut volts = valid_convolve(&volts_in, &g)?.scale(-cfg.r_k1);
    apply_readout_noise(volts.as_mut_slice(), cfg, rng);
    let decoded = volts.scale(1.0 / cfg.output_gain());
    Ok(CrossbarOutput { volts, decoded })
}

/// Scanner backend that performs every convolution on the crossbar model.
#[derive(Clone, Debug)]
pub struct CrossbarConvolver {
    cfg: CrossbarConfig,
    rng: ChaCha8Rng,
}

impl CrossbarConvolver {
    /// `stream` separates independent scan chains sharing one seed.
    pub fn new(cfg: CrossbarConfig, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        rng.set_stream(stream);
        Self { cfg, rng }
    }
}

impl Convolver for CrossbarConvolver {
    fn correlate<const N: usize, const M: usize>(
        &mut self,
        input: &[[f64; N]; N],
        kernel: &Kernel3,
    ) -> [[f64; M]; M] {
        let p_v = self.cfg.p_v;
        let volts_in = input.map(|row| row.map(|x| x * p_v));
        let g = map_to_conductances(kernel, &self.cfg);
        let mut out: [[f64; M]; M] = correlate_fixed(&volts_in, &g);
        let r_k1 = self.cfg.r_k1;
        out.iter_mut().flatten().for_each(|v| *v *= -r_k1);
        apply_readout_noise(out.as_flattened_mut(), &self.cfg, &mut self.rng);
        let gain = self.cfg.output_gain();
        out.map(|row| row.map(|v| v / gain))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutError {
    /// Mean of |decoded - exact| / full-scale.
    pub mean_rel_error: f64,
    pub max_rel_error: f64,
    /// RMS of the signed normalized error.
    pub rms_error: f64,
    pub trials: usize,
}

/// Monte-Carlo estimate of decoded error on random 7x7 tiles in `[0, 255]`.
/// Trial `i` draws from stream `i` of `cfg.rng_seed`, so results do not depend
/// on thread scheduling.
pub fn readout_error(cfg: &CrossbarConfig, kernel: &Kernel3, trials: usize) -> Result<ReadoutError> {
    cfg.validate()?;
    if trials < 100 {
        return Err(Error::InvalidParameter(format!(
            "readout_error needs at least 100 trials, got {trials}"
        )));
    }
    let per_trial: Vec<(f64, f64, f64, usize)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            rng.set_stream(trial as u64);
            let x = Grid::from_fn(7, 7, |_, _| rng.random_range(0.0..=255.0));
            let exact = valid_convolve(&x, kernel).expect("7x7 input");
            let out = crossbar_convolve(&x, kernel, cfg, &mut rng).expect("7x7 input");
            let full_scale = exact.max_abs();
            if full_scale == 0.0 {
                return (0.0, 0.0, 0.0, 0);
            }
            let mut sum_abs = 0.0;
            let mut max_abs = 0.0_f64;
            let mut sum_sq = 0.0;
            for (d, e) in out.decoded.iter().zip(exact.iter()) {
                let rel = (d - e) / full_scale;
                sum_abs += rel.abs();
                sum_sq += rel * rel;
                max_abs = max_abs.max(rel.abs());
            }
            (sum_abs, max_abs, sum_sq, exact.len())
        })
        .collect();
    let count: usize = per_trial.iter().map(|t| t.3).sum();
    if count == 0 {
        return Err(Error::Empty("all readout trials had zero full-scale output"));
    }
    let n = count as f64;
    Ok(ReadoutError {
        mean_rel_error: per_trial.iter().map(|t| t.0).sum::<f64>() / n,
        max_rel_error: per_trial.iter().fold(0.0_f64, |m, t| m.max(t.1)),
        rms_error: (per_trial.iter().map(|t| t.2).sum::<f64>() / n).sqrt(),
        trials,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThroughputAnchor {
    pub resolution: String,
    pub pixel_count: u64,
    pub seconds: f64,
    /// FPS column as published; it was computed from unrounded times and
    /// can differ from `1 / seconds`.
    pub reported_fps: f64,
}

/// Accelerator array the reference timings were measured on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardwareSpec {
    pub crossbar_count: u32,
    pub memristors_per_crossbar: u32,
    pub cycle_seconds: f64,
    pub duty: f64,
}

impl Default for HardwareSpec {
    fn default() -> Self {
        Self {
            crossbar_count: 2000,
            memristors_per_crossbar: 4000,
            cycle_seconds: 1e-5,
            duty: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThroughputModel {
    pub anchors: Vec<ThroughputAnchor>,
    pub hw: HardwareSpec,
}

const REFERENCE_TIMINGS: [(&str, u64, f64, f64); 20] = [
    ("640x480", 307_200, 0.0005, 1887.1),
    ("1280x720", 921_600, 0.0014, 695.6),
    ("1600x900", 1_440_000, 0.0024, 421.1),
    ("1920x1080", 2_073_600, 0.0034, 295.3),
    ("2560x1440", 3_686_400, 0.0063, 159.3),
    ("2560x2048", 5_242_880, 0.0116, 86.5),
    ("3840x2160", 8_294_400, 0.0177, 56.4),
    ("4068x3072", 12_496_896, 0.0290, 34.4),
    ("5120x2880", 14_745_600, 0.0314, 31.9),
    ("6524x4353", 28_398_972, 0.0587, 17.0),
    ("8000x4500", 36_000_000, 0.0746, 13.4),
    ("9000x4651", 41_859_000, 0.0901, 11.1),
    ("9396x5960", 56_000_160, 0.1181, 8.5),
    ("9376x6336", 59_406_336, 0.1225, 8.2),
    ("10922x6000", 65_532_000, 0.1376, 7.3),
    ("11245x6604", 74_261_980, 0.1722, 5.8),
    ("12000x7300", 87_600_000, 0.1835, 5.4),
    ("10000x10000", 100_000_000, 0.22907, 4.5),
    ("19944x6309", 125_826_696, 0.2932, 3.4),
    ("16877x13107", 221_206_839, 0.5225, 1.9),
];

impl ThroughputModel {
    /// Published timings of the 2000-crossbar, 4000-memristor array.
    pub fn reference() -> Self {
        Self {
            anchors: REFERENCE_TIMINGS
                .iter()
                .map(|&(res, px, s, fps)| ThroughputAnchor {
                    resolution: res.to_string(),
                    pixel_count: px,
                    seconds: s,
                    reported_fps: fps,
                })
                .collect(),
            hw: HardwareSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.anchors.len() < 2 {
            return Err(Error::InvalidParameter("throughput model needs >= 2 anchors".into()));
        }
        for w in self.anchors.windows(2) {
            if w[1].pixel_count <= w[0].pixel_count || w[1].seconds <= w[0].seconds {
                return Err(Error::InvalidParameter(format!(
                    "anchors must increase strictly: {} then {}",
                    w[0].resolution, w[1].resolution
                )));
            }
        }
        Ok(())
    }

    /// Copy with anchor `index` removed (leave-one-out checks).
    pub fn without_anchor(&self, index: usize) -> Self {
        let mut m = self.clone();
        m.anchors.remove(index);
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThroughputEstimate {
    pub seconds: f64,
    pub fps: f64,
}

/// Piecewise-linear interpolation over the anchors, extended linearly past
/// either end with the nearest segment's slope.
pub fn estimate_throughput(pixel_count: u64, model: &ThroughputModel) -> Result<ThroughputEstimate> {
    if pixel_count == 0 {
        return Err(Error::InvalidParameter("pixel_count must be > 0".into()));
    }
    model.validate()?;
    let a = &model.anchors;
    let seg = match a.iter().position(|x| x.pixel_count >= pixel_count) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => a.len() - 2,
    };
    let (lo, hi) = (&a[seg], &a[seg + 1]);
    let t = (pixel_count as f64 - lo.pixel_count as f64) / (hi.pixel_count as f64 - lo.pixel_count as f64);
    let seconds = if pixel_count == hi.pixel_count {
        hi.seconds
    } else {
        lo.seconds + t * (hi.seconds - lo.seconds)
    };
    if seconds <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "{pixel_count} px extrapolates to a non-positive time"
        )));
    }
    Ok(ThroughputEstimate {
        seconds,
        fps: 1.0 / seconds,
    })
}
