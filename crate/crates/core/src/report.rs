//! Report files: `edges/<stem>.png`, `metrics.csv`, `metrics.json`,
//! `sweep.csv` and `config.json`.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dataset::save_edge_map;
use crate::error::Result;
use crate::metrics::{f_measure, ImageMetrics, MetricsReport};
use crate::pipeline::{PipelineConfig, ThresholdSweep, WeightSweep};
use crate::postproc::BinaryEdgeMap;

#[derive(Clone, Debug, PartialEq)]
pub struct ImageResult {
    pub name: String,
    pub edges: BinaryEdgeMap,
    pub metrics: Option<ImageMetrics>,
}

#[derive(Serialize)]
struct MetricsJson<'a> {
    config: &'a PipelineConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<&'a MetricsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ods_high: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<&'a WeightSweep>,
    images: Vec<&'a ImageMetrics>,
}

#[derive(Serialize)]
struct MetricsRow<'a> {
    image: &'a str,
    edge_pixels: usize,
    tp: u64,
    fp: u64,
    #[serde(rename = "fn")]
    fn_: u64,
    f: f64,
    ac: f64,
    acl: f64,
    ssim: f64,
    thickness: f64,
}

#[derive(Serialize)]
struct SweepRow {
    index: usize,
    high: f64,
    low: f64,
    tp: u64,
    fp: u64,
    #[serde(rename = "fn")]
    fn_: u64,
    precision: f64,
    recall: f64,
    f: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Extras<'a> {
    pub summary: Option<&'a MetricsReport>,
    pub sweep: Option<&'a ThresholdSweep>,
    pub weights: Option<&'a WeightSweep>,
}

/// Writes everything under `out`; returns the files written.
pub fn emit_reports(
    out: &Path,
    results: &[ImageResult],
    config: &PipelineConfig,
    extras: &Extras<'_>,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out.join("edges"))?;
    let mut written = Vec::new();
    for r in results {
        let p = out.join("edges").join(format!("{}.png", r.name));
        save_edge_map(&r.edges, &p)?;
        written.push(p);
    }

    let config_path = out.join("config.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(config)? + "\n")?;
    written.push(config_path);

    let metrics: Vec<&ImageMetrics> = results.iter().filter_map(|r| r.metrics.as_ref()).collect();
    if !metrics.is_empty() {
        let csv_path = out.join("metrics.csv");
        let mut w = csv::Writer::from_path(&csv_path)?;
        for m in &metrics {
            w.serialize(MetricsRow {
                image: &m.name,
                edge_pixels: m.edge_pixels,
                tp: m.counts.tp,
                fp: m.counts.fp,
                fn_: m.counts.fn_,
                f: m.f,
                ac: m.ac,
                acl: m.acl,
                ssim: m.ssim,
                thickness: m.thickness,
            })?;
        }
        w.flush()?;
        written.push(csv_path);
    }

    let json_path = out.join("metrics.json");
    let summary = extras.summary.or(extras.sweep.map(|s| &s.report));
    let doc = MetricsJson {
        config,
        summary,
        ods_high: extras.sweep.map(|s| s.highs[s.scores.ods_index]),
        weights: extras.weights,
        images: metrics,
    };
    std::fs::write(&json_path, serde_json::to_string_pretty(&doc)? + "\n")?;
    written.push(json_path);

    if let Some(s) = extras.sweep {
        let sweep_path = out.join("sweep.csv");
        let mut w = csv::Writer::from_path(&sweep_path)?;
        for (i, &h) in s.highs.iter().enumerate() {
            let c = s.dataset_counts(i);
            w.serialize(SweepRow {
                index: i,
                high: h,
                low: 0.95 * h,
                tp: c.tp,
                fp: c.fp,
                fn_: c.fn_,
                precision: c.precision(),
                recall: c.recall(),
                f: f_measure(&c),
            })?;
        }
        w.flush()?;
        written.push(sweep_path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::load_edge_map;
    use crate::metrics::evaluate_image;

    #[test]
    fn reports_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let gt = BinaryEdgeMap::from_pixels(10, 12, (2..10).map(|c| (4, c)));
        let pred = BinaryEdgeMap::from_pixels(10, 12, (3..10).map(|c| (4, c)));
        let results: Vec<ImageResult> = ["a", "b"]
            .iter()
            .map(|n| ImageResult {
                name: n.to_string(),
                edges: pred.clone(),
                metrics: Some(evaluate_image(n, &pred, &gt).unwrap()),
            })
            .collect();
        let cfg = PipelineConfig::default();
        emit_reports(dir.path(), &results, &cfg, &Extras::default()).unwrap();

        assert_eq!(load_edge_map(&dir.path().join("edges/a.png")).unwrap(), pred);
        let mut rdr = csv::Reader::from_path(dir.path().join("metrics.csv")).unwrap();
        assert_eq!(rdr.records().count(), 2);
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
        let echoed: PipelineConfig = serde_json::from_value(v["config"].clone()).unwrap();
        assert_eq!(echoed, cfg);
    }
}
