use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};

use ssm_edge::erosion::ErosionParams;
use ssm_edge::postproc::HysteresisParams;
use ssm_edge::scan::{Flips, SaimWeights};
use ssm_edge::PipelineConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    fn enabled(self) -> bool {
        self == Switch::On
    }
}

/// Options shared by every command that runs the detector. Flags override
/// values read from `--config`.
#[derive(Args, Clone, Debug, Default)]
pub struct PipelineOpts {
    /// JSON pipeline configuration
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// High hysteresis threshold; low defaults to 0.95 of it
    #[arg(long)]
    pub high: Option<f64>,

    #[arg(long)]
    pub low: Option<f64>,

    /// Scanner weights
    #[arg(long, value_name = "A,B,C,D")]
    pub weights: Option<SaimWeights>,

    /// Mirrored scans fused with the base scan: none, h, v or hv
    #[arg(long)]
    pub flips: Option<Flips>,

    #[arg(long, value_enum)]
    pub erosion: Option<Switch>,

    #[arg(long, value_name = "P_MEAN,L_T,C_T,P_T,BAND")]
    pub erosion_params: Option<ErosionParams>,

    /// Run the scanner's convolutions through the crossbar model
    #[arg(long, value_enum)]
    pub crossbar: Option<Switch>,

    /// Crossbar readout noise as a fraction of full scale
    #[arg(long)]
    pub noise: Option<f64>,

    /// Crossbar samples averaged per output
    #[arg(long)]
    pub samples: Option<u32>,

    /// Crossbar noise seed
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Worker threads (default: all cores)
    #[arg(long)]
    pub workers: Option<usize>,
}

impl PipelineOpts {
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                PipelineConfig::from_json(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => PipelineConfig::default(),
        };
        match (self.high, self.low) {
            (Some(h), Some(l)) => cfg.hysteresis = HysteresisParams::new(h, l)?,
            (Some(h), None) => cfg.hysteresis = HysteresisParams::from_high(h)?,
            (None, Some(l)) => cfg.hysteresis = HysteresisParams::new(cfg.hysteresis.high, l)?,
            (None, None) => {}
        }
        if let Some(w) = self.weights {
            cfg.scan.weights = w;
        }
        if let Some(f) = self.flips {
            cfg.scan.flips = f;
        }
        if let Some(e) = self.erosion {
            cfg.erosion.enabled = e.enabled();
        }
        if let Some(p) = self.erosion_params {
            cfg.erosion.params = p;
        }
        if let Some(c) = self.crossbar {
            cfg.crossbar.enabled = c.enabled();
        }
        if let Some(n) = self.noise {
            cfg.crossbar.config.noise_level = n;
        }
        if let Some(s) = self.samples {
            cfg.crossbar.config.samples_per_pulse = s;
        }
        if let Some(s) = self.seed {
            cfg.crossbar.config.rng_seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(w) = self.workers {
            cfg.workers = Some(w);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn out_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("ssm-edge-out"))
}

/// `WxH` or a plain pixel count.
pub fn parse_pixels(s: &str) -> Result<u64> {
    let n = match s.split_once(['x', 'X']) {
        Some((w, h)) => {
            let w: u64 = w.trim().parse().with_context(|| format!("bad width in {s:?}"))?;
            let h: u64 = h.trim().parse().with_context(|| format!("bad height in {s:?}"))?;
            w.checked_mul(h).context("pixel count overflows")?
        }
        None => s.trim().parse().with_context(|| format!("expected WxH or a pixel count, got {s:?}"))?,
    };
    if n == 0 {
        bail!("pixel count must be > 0");
    }
    Ok(n)
}

pub fn ensure_dir(p: &Path) -> Result<()> {
    if !p.is_dir() {
        bail!("{} is not a directory", p.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_defaults() {
        let opts = PipelineOpts {
            high: Some(80.0),
            flips: Some(Flips::HV),
            erosion: Some(Switch::Off),
            noise: Some(0.2),
            ..PipelineOpts::default()
        };
        let cfg = opts.resolve().unwrap();
        assert_eq!(cfg.hysteresis.high, 80.0);
        assert!((cfg.hysteresis.low - 76.0).abs() < 1e-12);
        assert_eq!(cfg.scan.flips, Flips::HV);
        assert!(!cfg.erosion.enabled);
        assert_eq!(cfg.crossbar.config.noise_level, 0.2);
    }

    #[test]
    fn low_above_high_is_rejected() {
        let opts = PipelineOpts {
            high: Some(50.0),
            low: Some(60.0),
            ..PipelineOpts::default()
        };
        assert!(opts.resolve().is_err());
    }

    #[test]
    fn pixel_specs() {
        assert_eq!(parse_pixels("640x480").unwrap(), 307_200);
        assert_eq!(parse_pixels("1000").unwrap(), 1000);
        assert!(parse_pixels("0").is_err());
        assert!(parse_pixels("axb").is_err());
    }
}
