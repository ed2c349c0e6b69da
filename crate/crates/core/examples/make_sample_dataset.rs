//! Writes a synthetic dataset with ground truth.
//!
//! cargo run --example make_sample_dataset -- DIR [COUNT] [SIZE] [SEED]

use std::path::PathBuf;

use ssm_edge::synth;

fn main() -> ssm_edge::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "sample_data".into()));
    let mut num = |default: u64| args.next().and_then(|s| s.parse().ok()).unwrap_or(default);
    let (count, size, seed) = (num(12), num(96), num(100));
    let samples = synth::sample_corpus(count as usize, seed, size as usize, size as usize);
    synth::write_dataset(&dir, &samples)?;
    println!("wrote {} images to {}", samples.len(), dir.display());
    Ok(())
}
