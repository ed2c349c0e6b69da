use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use ssm_edge::crossbar::{estimate_throughput, readout_error, CrossbarConfig, ThroughputModel};
use ssm_edge::dataset::{load_dataset, load_edge_map, load_gray, DatasetEntry, IMAGE_EXTENSIONS};
use ssm_edge::kernels::{build_kernel_set, SOBEL_X};
use ssm_edge::metrics::{evaluate_image, f_measure, ImageMetrics, MetricsReport};
use ssm_edge::pipeline::{sweep_thresholds, sweep_weights, Sample, WeightProtocol};
use ssm_edge::report::{emit_reports, Extras, ImageResult};
use ssm_edge::{run_pipeline, PipelineConfig};

use crate::opts::out_dir;

/// A dataset directory, a plain directory of images, or one image file.
fn collect_inputs(input: &Path) -> Result<Vec<DatasetEntry>> {
    if input.is_file() {
        let stem = input
            .file_stem()
            .and_then(|s| s.to_str())
            .context("input file name is not valid UTF-8")?;
        return Ok(vec![DatasetEntry {
            stem: stem.to_string(),
            image: input.to_path_buf(),
            gt: None,
        }]);
    }
    if input.join("images").is_dir() {
        return Ok(load_dataset(input)?.entries);
    }
    if !input.is_dir() {
        bail!("{} does not exist", input.display());
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(input)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|image| {
            let stem = image.file_stem().and_then(|s| s.to_str()).context("bad file name")?.to_string();
            Ok(DatasetEntry { stem, image, gt: None })
        })
        .collect()
}

fn load_samples(dir: &Path) -> Result<Vec<Sample>> {
    let manifest = load_dataset(dir)?;
    if manifest.entries.is_empty() {
        bail!("no images under {}", dir.join("images").display());
    }
    if !manifest.has_gt() {
        bail!("{} needs a gt/ image for every input", dir.display());
    }
    manifest
        .entries
        .par_iter()
        .map(|e| {
            Ok(Sample {
                name: e.stem.clone(),
                image: load_gray(&e.image)?,
                gt: load_edge_map(e.gt.as_ref().expect("checked above"))?,
            })
        })
        .collect()
}

fn fixed_threshold_report(metrics: Vec<ImageMetrics>) -> Result<MetricsReport> {
    let total = metrics.iter().map(|m| m.counts).sum();
    let ois = metrics.iter().map(|m| m.f).sum::<f64>() / metrics.len().max(1) as f64;
    Ok(MetricsReport::new(f_measure(&total), ois, metrics)?)
}

fn print_summary(r: &MetricsReport) {
    println!(
        "ODS {:.4}  OIS {:.4}  AC {:.4}  ACL {:.2}  SSIM {:.4}  thickness {:.3}",
        r.ods, r.ois, r.ac, r.acl, r.ssim, r.thickness
    );
}

pub fn detect(input: &Path, cfg: &PipelineConfig) -> Result<()> {
    let entries = collect_inputs(input)?;
    if entries.is_empty() {
        bail!("no images found in {}", input.display());
    }
    let results: Vec<ImageResult> = entries
        .par_iter()
        .map(|e| {
            let img = load_gray(&e.image)?;
            let out = run_pipeline(&img, cfg).with_context(|| format!("detecting {}", e.image.display()))?;
            let metrics = match &e.gt {
                Some(g) => Some(evaluate_image(&e.stem, &out.edges, &load_edge_map(g)?)?),
                None => None,
            };
            Ok(ImageResult {
                name: e.stem.clone(),
                edges: out.edges,
                metrics,
            })
        })
        .collect::<Result<_>>()?;
    for r in &results {
        println!("{}: {} edge pixels", r.name, r.edges.edge_count());
    }
    let summary = if results.iter().all(|r| r.metrics.is_some()) {
        Some(fixed_threshold_report(results.iter().filter_map(|r| r.metrics.clone()).collect())?)
    } else {
        None
    };
    if let Some(s) = &summary {
        print_summary(s);
    }
    let out = out_dir(cfg);
    emit_reports(
        &out,
        &results,
        cfg,
        &Extras {
            summary: summary.as_ref(),
            ..Extras::default()
        },
    )?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn eval(dataset: &Path, pred: Option<&Path>, cfg: &PipelineConfig) -> Result<()> {
    let manifest = load_dataset(dataset)?;
    if !manifest.has_gt() {
        bail!("{} needs a gt/ image for every input", dataset.display());
    }
    let results: Vec<ImageResult> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let gt = load_edge_map(e.gt.as_ref().expect("checked above"))?;
            let edges = match pred {
                Some(dir) => load_edge_map(&dir.join(format!("{}.png", e.stem)))?,
                None => run_pipeline(&load_gray(&e.image)?, cfg)?.edges,
            };
            let metrics = evaluate_image(&e.stem, &edges, &gt)?;
            Ok(ImageResult {
                name: e.stem.clone(),
                edges,
                metrics: Some(metrics),
            })
        })
        .collect::<Result<_>>()?;
    let report = fixed_threshold_report(results.iter().filter_map(|r| r.metrics.clone()).collect())?;
    for m in &report.per_image {
        println!("{}: F {:.4}  AC {:.4}  ACL {:.2}  SSIM {:.4}", m.name, m.f, m.ac, m.acl, m.ssim);
    }
    print_summary(&report);
    let out = out_dir(cfg);
    emit_reports(
        &out,
        &results,
        cfg,
        &Extras {
            summary: Some(&report),
            ..Extras::default()
        },
    )?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn sweep_thresholds_cmd(dataset: &Path, cfg: &PipelineConfig) -> Result<()> {
    let samples = load_samples(dataset)?;
    let mut cfg = cfg.clone();
    cfg.erosion.enabled = false;
    let sweep = sweep_thresholds(&samples, &cfg)?;
    let best = sweep.ods_threshold();
    println!("ODS at high {:.2} (low {:.3})", best.high, best.low);
    print_summary(&sweep.report);

    cfg.hysteresis = best;
    let results: Vec<ImageResult> = samples
        .par_iter()
        .zip(sweep.report.per_image.par_iter())
        .map(|(s, m)| {
            Ok(ImageResult {
                name: s.name.clone(),
                edges: run_pipeline(&s.image, &cfg)?.edges,
                metrics: Some(m.clone()),
            })
        })
        .collect::<Result<_>>()?;
    let out = out_dir(&cfg);
    emit_reports(
        &out,
        &results,
        &cfg,
        &Extras {
            sweep: Some(&sweep),
            ..Extras::default()
        },
    )?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn sweep_weights_cmd(dataset: &Path, protocol: WeightProtocol, cfg: &PipelineConfig) -> Result<()> {
    let samples = load_samples(dataset)?;
    let sweep = sweep_weights(&samples, cfg, protocol)?;
    println!(
        "best weights {} with F {:.4} ({} evaluations)",
        sweep.best, sweep.f, sweep.evaluations
    );
    let mut cfg = cfg.clone();
    cfg.scan.weights = sweep.best;
    let results: Vec<ImageResult> = samples
        .par_iter()
        .map(|s| {
            let edges = run_pipeline(&s.image, &cfg)?.edges;
            let metrics = evaluate_image(&s.name, &edges, &s.gt)?;
            Ok(ImageResult {
                name: s.name.clone(),
                edges,
                metrics: Some(metrics),
            })
        })
        .collect::<Result<_>>()?;
    let report = fixed_threshold_report(results.iter().filter_map(|r| r.metrics.clone()).collect())?;
    let out = out_dir(&cfg);
    emit_reports(
        &out,
        &results,
        &cfg,
        &Extras {
            summary: Some(&report),
            weights: Some(&sweep),
            ..Extras::default()
        },
    )?;
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum BenchKernel {
    /// Input-injection kernel of the scanner
    Input,
    Sobel,
}

pub struct BenchOpts {
    pub noise: Vec<f64>,
    pub samples: Vec<u32>,
    pub levels: u32,
    pub trials: usize,
    pub seed: u64,
    pub kernel: BenchKernel,
    pub v: f64,
    pub out: Option<PathBuf>,
}

pub fn crossbar_bench(o: &BenchOpts) -> Result<()> {
    let kernel = match o.kernel {
        BenchKernel::Input => build_kernel_set(o.v).b_x,
        BenchKernel::Sobel => SOBEL_X,
    };
    let mut lines = vec!["noise,samples,levels,trials,mean_rel_error,max_rel_error,rms_error".to_string()];
    for &noise in &o.noise {
        for &samples in &o.samples {
            let cfg = CrossbarConfig {
                noise_level: noise,
                samples_per_pulse: samples,
                conductance_levels: (o.levels > 0).then_some(o.levels),
                rng_seed: o.seed,
                ..CrossbarConfig::default()
            };
            let e = readout_error(&cfg, &kernel, o.trials)?;
            lines.push(format!(
                "{noise},{samples},{},{},{:.6e},{:.6e},{:.6e}",
                o.levels, e.trials, e.mean_rel_error, e.max_rel_error, e.rms_error
            ));
        }
    }
    emit_lines(&lines, o.out.as_deref(), "crossbar.csv")
}

pub fn throughput(pixels: &[u64], leave_one_out: bool, out: Option<&Path>) -> Result<()> {
    let model = ThroughputModel::reference();
    let mut lines = Vec::new();
    if leave_one_out {
        lines.push("resolution,pixels,seconds,estimated_seconds,relative_error".to_string());
        for i in 1..model.anchors.len() - 1 {
            let a = &model.anchors[i];
            let est = estimate_throughput(a.pixel_count, &model.without_anchor(i))?;
            lines.push(format!(
                "{},{},{},{:.6},{:.4}",
                a.resolution,
                a.pixel_count,
                a.seconds,
                est.seconds,
                (est.seconds - a.seconds) / a.seconds
            ));
        }
    } else {
        lines.push("pixels,seconds,fps".to_string());
        let counts: Vec<u64> = if pixels.is_empty() {
            model.anchors.iter().map(|a| a.pixel_count).collect()
        } else {
            pixels.to_vec()
        };
        for px in counts {
            let t = estimate_throughput(px, &model)?;
            lines.push(format!("{px},{:.6},{:.2}", t.seconds, t.fps));
        }
    }
    emit_lines(&lines, out, "throughput.csv")
}

fn emit_lines(lines: &[String], out: Option<&Path>, file: &str) -> Result<()> {
    let text = lines.join("\n") + "\n";
    print!("{text}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let p = dir.join(file);
        std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}
