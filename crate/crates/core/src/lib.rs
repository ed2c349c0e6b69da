//! Edge detection with a convolutional state-space scanner, graph-based
//! false-edge removal, tolerant benchmark metrics and a numerical model of a
//! memristor-crossbar convolution accelerator.
//!
//! ```
//! use ssm_edge::{pipeline::{run_pipeline, PipelineConfig}, synth};
//!
//! let img = synth::vertical_step(32, 32, 16, 40.0, 200.0);
//! let out = run_pipeline(&img, &PipelineConfig::default()).unwrap();
//! assert!(out.edges.edge_count() > 0);
//! ```

pub mod conv;
pub mod crossbar;
pub mod dataset;
pub mod erosion;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod metrics;
pub mod pipeline;
pub mod postproc;
pub mod report;
pub mod scan;
pub mod synth;

pub use error::{Error, Result};
pub use grid::{GrayImage, Grid, Pixel};
pub use pipeline::{run_pipeline, PipelineConfig};
pub use postproc::BinaryEdgeMap;
