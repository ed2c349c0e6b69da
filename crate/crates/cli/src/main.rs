use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use ssm_edge::pipeline::WeightProtocol;

mod commands;
mod opts;

use commands::{BenchKernel, BenchOpts};
use opts::{ensure_dir, parse_pixels, PipelineOpts};

#[derive(Parser, Debug)]
#[command(name = "ssm-edge", version, about = "State-space edge detection, evaluation and crossbar simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Detect edges in an image, a directory of images or a dataset
    Detect {
        input: PathBuf,
        #[command(flatten)]
        pipeline: PipelineOpts,
    },
    /// Score edge maps against ground truth at fixed thresholds
    Eval {
        dataset: PathBuf,
        /// Existing edge maps named `<stem>.png`; detect when omitted
        #[arg(long)]
        pred: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineOpts,
    },
    /// Sweep the high threshold over 0..=255 (low = 0.95 high, erosion off)
    SweepThresholds {
        dataset: PathBuf,
        #[command(flatten)]
        pipeline: PipelineOpts,
    },
    /// Search the scanner weights over 0..=2 in steps of 0.1
    SweepWeights {
        dataset: PathBuf,
        #[arg(long, default_value = "coordinate", value_parser = parse_protocol)]
        weight_protocol: WeightProtocol,
        #[command(flatten)]
        pipeline: PipelineOpts,
    },
    /// Monte-Carlo readout error of the crossbar model
    CrossbarBench {
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.3")]
        noise: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,4,16,64")]
        samples: Vec<u32>,
        /// Conductance levels; 0 disables quantization
        #[arg(long, default_value_t = 256)]
        levels: u32,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "input")]
        kernel: BenchKernel,
        /// Shape parameter of the input kernel
        #[arg(long, default_value_t = ssm_edge::kernels::DEFAULT_V)]
        v: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Estimated accelerator time per frame
    Throughput {
        /// Image sizes as WxH or pixel counts; defaults to the reference sizes
        #[arg(value_parser = parse_pixels)]
        sizes: Vec<u64>,
        /// Re-estimate each interior reference size with its own timing removed
        #[arg(long, conflicts_with = "sizes")]
        leave_one_out: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_protocol(s: &str) -> Result<WeightProtocol, String> {
    s.parse().map_err(|e: ssm_edge::Error| e.to_string())
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n);
    }
    b.build()?.install(f)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Detect { input, pipeline } => {
            let cfg = pipeline.resolve()?;
            in_pool(cfg.workers, || commands::detect(&input, &cfg))
        }
        Command::Eval {
            dataset,
            pred,
            pipeline,
        } => {
            let cfg = pipeline.resolve()?;
            ensure_dir(&dataset)?;
            in_pool(cfg.workers, || commands::eval(&dataset, pred.as_deref(), &cfg))
        }
        Command::SweepThresholds { dataset, pipeline } => {
            let cfg = pipeline.resolve()?;
            ensure_dir(&dataset)?;
            in_pool(cfg.workers, || commands::sweep_thresholds_cmd(&dataset, &cfg))
        }
        Command::SweepWeights {
            dataset,
            weight_protocol,
            pipeline,
        } => {
            let cfg = pipeline.resolve()?;
            ensure_dir(&dataset)?;
            in_pool(cfg.workers, || commands::sweep_weights_cmd(&dataset, weight_protocol, &cfg))
        }
        Command::CrossbarBench {
            noise,
            samples,
            levels,
            trials,
            seed,
            kernel,
            v,
            out,
            workers,
        } => {
            let o = BenchOpts {
                noise,
                samples,
                levels,
                trials,
                seed,
                kernel,
                v,
                out,
            };
            in_pool(workers, || commands::crossbar_bench(&o))
        }
        Command::Throughput {
            sizes,
            leave_one_out,
            out,
        } => commands::throughput(&sizes, leave_one_out, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
