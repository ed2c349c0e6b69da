//! End-to-end detection and the threshold / weight sweeps.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossbar::CrossbarConfig;
use crate::erosion::{wind_erosion, ErosionParams, ErosionTrace};
use crate::error::{Error, Result};
use crate::grid::GrayImage;
use crate::metrics::{
    count_confusion, evaluate_image, f_measure, ods_ois, ConfusionCounts, ImageMetrics, MetricsReport, OdsOis,
};
use crate::postproc::{
    gradient_direction, gradient_magnitude, hysteresis_threshold, non_max_suppress, scale_magnitude,
    BinaryEdgeMap, HysteresisParams, MagnitudeMap, MagnitudeScale,
};
use crate::scan::{scan_with_flips, GradientField, SaimWeights, ScanBackend, ScanConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErosionStage {
    pub enabled: bool,
    pub params: ErosionParams,
}

impl Default for ErosionStage {
    fn default() -> Self {
        Self {
            enabled: true,
            params: ErosionParams::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossbarStage {
    /// Route the scanner's convolutions through the crossbar model.
    pub enabled: bool,
    pub config: CrossbarConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub scan: ScanConfig,
    pub hysteresis: HysteresisParams,
    pub magnitude_scale: MagnitudeScale,
    pub erosion: ErosionStage,
    pub crossbar: CrossbarStage,
    /// Report directory.
    pub out: Option<std::path::PathBuf>,
    /// Image-level parallelism; `None` uses all cores.
    pub workers: Option<usize>,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.scan.validate()?;
        self.hysteresis.validate()?;
        self.erosion.params.validate()?;
        self.crossbar.config.validate()?;
        if self.workers == Some(0) {
            return Err(Error::InvalidParameter("workers must be >= 1".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn backend(&self) -> ScanBackend {
        if self.crossbar.enabled {
            ScanBackend::Crossbar(self.crossbar.config.clone())
        } else {
            ScanBackend::Exact
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOutput {
    pub edges: BinaryEdgeMap,
    pub gradients: GradientField,
    /// Scaled, non-maximum-suppressed magnitudes.
    pub thinned: MagnitudeMap,
    /// Hysteresis output before erosion, when erosion ran.
    pub pre_erosion: Option<BinaryEdgeMap>,
    pub trace: Option<ErosionTrace>,
}

/// Scan, then scaled magnitude through NMS. Everything threshold-independent.
pub fn prepare(image: &GrayImage, config: &PipelineConfig) -> Result<(GradientField, MagnitudeMap)> {
    config.validate()?;
    let field = scan_with_flips(image, &config.scan, &config.backend())?;
    if !field.is_finite() {
        return Err(Error::NonFiniteGradient);
    }
    let mag = scale_magnitude(&gradient_magnitude(&field), config.magnitude_scale);
    let thinned = non_max_suppress(&mag, &gradient_direction(&field))?;
    Ok((field, thinned))
}

pub fn run_pipeline(image: &GrayImage, config: &PipelineConfig) -> Result<PipelineOutput> {
    let (gradients, thinned) = prepare(image, config)?;
    let edges = hysteresis_threshold(&thinned, &config.hysteresis)?;
    if config.erosion.enabled {
        let (eroded, trace) = wind_erosion(&edges, &config.erosion.params)?;
        Ok(PipelineOutput {
            edges: eroded,
            gradients,
            thinned,
            pre_erosion: Some(edges),
            trace: Some(trace),
        })
    } else {
        Ok(PipelineOutput {
            edges,
            gradients,
            thinned,
            pre_erosion: None,
            trace: None,
        })
    }
}

/// Image with ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub name: String,
    pub image: GrayImage,
    pub gt: BinaryEdgeMap,
}

/// `H_i = 2.55 i` for `i = 0..=100`.
pub fn threshold_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 * 255.0 / 100.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSweep {
    pub highs: Vec<f64>,
    pub names: Vec<String>,
    /// `counts[image][threshold]`.
    pub counts: Vec<Vec<ConfusionCounts>>,
    pub scores: OdsOis,
    /// Per-image metrics at the ODS threshold.
    pub report: MetricsReport,
}

impl ThresholdSweep {
    pub fn ods_threshold(&self) -> HysteresisParams {
        HysteresisParams::from_high(self.highs[self.scores.ods_index]).expect("grid within range")
    }

    pub fn dataset_counts(&self, t: usize) -> ConfusionCounts {
        self.counts.iter().map(|c| c[t]).sum()
    }
}

/// Evaluates all 101 thresholds with `low = 0.95 high` and erosion off.
pub fn sweep_thresholds(samples: &[Sample], config: &PipelineConfig) -> Result<ThresholdSweep> {
    if samples.is_empty() {
        return Err(Error::Empty("threshold sweep needs images with ground truth"));
    }
    let highs = threshold_grid();
    let params: Vec<HysteresisParams> = highs
        .iter()
        .map(|&h| HysteresisParams::from_high(h))
        .collect::<Result<_>>()?;
    let per_image: Vec<(Vec<ConfusionCounts>, Vec<BinaryEdgeMap>)> = samples
        .par_iter()
        .map(|s| {
            let (_, thinned) = prepare(&s.image, config)?;
            let mut counts = Vec::with_capacity(params.len());
            let mut maps = Vec::with_capacity(params.len());
            for p in &params {
                let e = hysteresis_threshold(&thinned, p)?;
                counts.push(count_confusion(&e, &s.gt)?);
                maps.push(e);
            }
            Ok((counts, maps))
        })
        .collect::<Result<_>>()?;
    let counts: Vec<Vec<ConfusionCounts>> = per_image.iter().map(|p| p.0.clone()).collect();
    let scores = ods_ois(&counts)?;
    let at = scores.ods_index;
    let metrics: Vec<ImageMetrics> = samples
        .iter()
        .zip(&per_image)
        .map(|(s, p)| evaluate_image(&s.name, &p.1[at], &s.gt))
        .collect::<Result<_>>()?;
    let report = MetricsReport::new(scores.ods, scores.ois, metrics)?;
    Ok(ThresholdSweep {
        highs,
        names: samples.iter().map(|s| s.name.clone()).collect(),
        counts,
        scores,
        report,
    })
}

/// How the weight grid is searched.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightProtocol {
    /// One weight at a time over its 21 values, repeated until stable.
    #[default]
    Coordinate,
    /// All 21^4 combinations.
    Full,
    /// Coordinate search per image, then the per-weight mode over images.
    Paper,
}

impl FromStr for WeightProtocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coordinate" => Ok(Self::Coordinate),
            "full" => Ok(Self::Full),
            "paper" => Ok(Self::Paper),
            other => Err(Error::InvalidParameter(format!(
                "weight protocol must be coordinate, full or paper; got {other:?}"
            ))),
        }
    }
}

/// `0.0, 0.1, ..., 2.0`.
pub fn weight_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 10.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSweep {
    pub protocol: WeightProtocol,
    pub best: SaimWeights,
    pub f: f64,
    pub evaluations: usize,
}

/// Dataset F at fixed thresholds; a diverging scan scores 0.
pub fn weights_score(samples: &[Sample], config: &PipelineConfig, weights: SaimWeights) -> Result<f64> {
    let mut cfg = config.clone();
    cfg.scan.weights = weights;
    let counts: Vec<Option<ConfusionCounts>> = samples
        .par_iter()
        .map(|s| match run_pipeline(&s.image, &cfg) {
            Ok(out) => count_confusion(&out.edges, &s.gt).map(Some),
            Err(Error::NonFiniteGradient) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    if counts.iter().any(Option::is_none) {
        return Ok(0.0);
    }
    Ok(f_measure(&counts.into_iter().flatten().sum()))
}

fn coordinate_search(samples: &[Sample], config: &PipelineConfig, evals: &mut usize) -> Result<(SaimWeights, f64)> {
    let grid = weight_grid();
    let mut w = config.scan.weights.as_array();
    let mut best_f = weights_score(samples, config, SaimWeights::from_array(w))?;
    *evals += 1;
    for _round in 0..5 {
        let mut changed = false;
        for k in 0..4 {
            let (mut arg, mut top) = (w[k], f64::NEG_INFINITY);
            for &v in &grid {
                let mut cand = w;
                cand[k] = v;
                let f = weights_score(samples, config, SaimWeights::from_array(cand))?;
                *evals += 1;
                if f > top {
                    top = f;
                    arg = v;
                }
            }
            if arg != w[k] {
                changed = true;
            }
            w[k] = arg;
            best_f = top;
        }
        if !changed {
            break;
        }
    }
    Ok((SaimWeights::from_array(w), best_f))
}

/// Grid search of `(a, b, c, d)` over `{0, 0.1, ..., 2}`; ties go to the
/// smaller value.
pub fn sweep_weights(samples: &[Sample], config: &PipelineConfig, protocol: WeightProtocol) -> Result<WeightSweep> {
    if samples.is_empty() {
        return Err(Error::Empty("weight sweep needs images with ground truth"));
    }
    config.validate()?;
    let mut evaluations = 0;
    let (best, f) = match protocol {
        WeightProtocol::Coordinate => coordinate_search(samples, config, &mut evaluations)?,
        WeightProtocol::Full => {
            let grid = weight_grid();
            let mut top = (SaimWeights::from_array([0.0; 4]), f64::NEG_INFINITY);
            for &a in &grid {
                for &b in &grid {
                    for &c in &grid {
                        for &d in &grid {
                            let w = SaimWeights::from_array([a, b, c, d]);
                            let f = weights_score(samples, config, w)?;
                            evaluations += 1;
                            if f > top.1 {
                                top = (w, f);
                            }
                        }
                    }
                }
            }
            top
        }
        WeightProtocol::Paper => {
            let mut per_image = Vec::with_capacity(samples.len());
            for s in samples {
                let (w, _) = coordinate_search(std::slice::from_ref(s), config, &mut evaluations)?;
                per_image.push(w.as_array());
            }
            let grid = weight_grid();
            let mut w = [0.0; 4];
            for (k, slot) in w.iter_mut().enumerate() {
                let mut votes = vec![0usize; grid.len()];
                for p in &per_image {
                    votes[(p[k] * 10.0).round() as usize] += 1;
                }
                let idx = votes
                    .iter()
                    .enumerate()
                    .fold(0, |bi, (i, &v)| if v > votes[bi] { i } else { bi });
                *slot = grid[idx];
            }
            let best = SaimWeights::from_array(w);
            let f = weights_score(samples, config, best)?;
            evaluations += 1;
            (best, f)
        }
    };
    Ok(WeightSweep {
        protocol,
        best,
        f,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn cfg_no_erosion() -> PipelineConfig {
        PipelineConfig {
            erosion: ErosionStage {
                enabled: false,
                ..ErosionStage::default()
            },
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn constant_image_has_no_edges() {
        let img = Grid::filled(24, 24, 77.0);
        let out = run_pipeline(&img, &PipelineConfig::default()).unwrap();
        assert_eq!(out.edges.edge_count(), 0);
    }

    #[test]
    fn grids() {
        let h = threshold_grid();
        assert_eq!(h.len(), 101);
        assert_eq!((h[0], h[50], h[100]), (0.0, 127.5, 255.0));
        let w = weight_grid();
        assert_eq!(w.len(), 21);
        assert_eq!((w[0], w[20]), (0.0, 2.0));
    }

    #[test]
    fn config_json_roundtrip_and_defaults() {
        let cfg = PipelineConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(PipelineConfig::from_json(&text).unwrap(), cfg);
        let partial = PipelineConfig::from_json(r#"{"hysteresis": {"high": 50, "low": 40}}"#).unwrap();
        assert_eq!(partial.hysteresis.high, 50.0);
        assert_eq!(partial.scan, ScanConfig::default());
        assert!(PipelineConfig::from_json(r#"{"hysteresis": {"high": 10, "low": 40}}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn protocol_parse() {
        assert_eq!("paper".parse::<WeightProtocol>().unwrap(), WeightProtocol::Paper);
        assert!("x".parse::<WeightProtocol>().is_err());
    }

    #[test]
    fn erosion_output_within_raw_output() {
        let img = Grid::from_fn(40, 40, |r, c| if (r / 8 + c / 8) % 2 == 0 { 40.0 } else { 200.0 });
        let out = run_pipeline(&img, &PipelineConfig::default()).unwrap();
        let raw = run_pipeline(&img, &cfg_no_erosion()).unwrap();
        assert_eq!(out.pre_erosion.as_ref(), Some(&raw.edges));
        for p in out.edges.edge_pixels() {
            assert!(raw.edges.is_edge(p));
        }
    }
}
