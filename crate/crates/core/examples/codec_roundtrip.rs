//! End-to-end compression with a real bitstream: train a small marginal
//! system, compress a file of source samples with the range coder, decode
//! with the side information, and compare the measured bits per sample
//! against the evaluated cross-entropy rate.
//!
//! About two minutes: `cargo run --release --example codec_roundtrip`

use wzlearn::entropy_coding::{codec_decode, codec_encode};
use wzlearn::sources::sample_pairs;
use wzlearn::{CorrelationDirection, PriorKind, SourceModel, TrainConfig};

fn main() -> wzlearn::Result<()> {
    let source = SourceModel::new(CorrelationDirection::XEqualsYPlusN, 1.0, 0.1)?;
    let mut cfg = TrainConfig::new(PriorKind::Marginal, source, 18.0, 5);
    cfg.total_steps = 8_000;
    cfg.eval_samples = 1 << 18;

    println!("training marginal system ...");
    let (system, report) = wzlearn::training::train(&cfg)?;
    let evaluated = report.final_point.rate_bits;

    let n = 100_000;
    let batch = sample_pairs(&source, n, 123);
    let file = codec_encode(&system, &batch.x)?;
    let measured = 8.0 * file.len() as f64 / n as f64;
    println!("compressed {n} samples into {} bytes", file.len());
    println!("  measured  : {measured:.4} bits/sample (including header)");
    println!("  evaluated : {evaluated:.4} bits/sample (cross-entropy rate)");

    let (indices, x_hat) = codec_decode(&system, &file, &batch.y)?;
    let direct: Vec<usize> = batch
        .x
        .iter()
        .map(|&x| wzlearn::evaluation::encode_deterministic(&system, x))
        .collect();
    assert_eq!(indices, direct, "decoded indices must match the encoder");
    let mse: f64 =
        batch.x.iter().zip(&x_hat).map(|(x, xh)| (x - xh) * (x - xh)).sum::<f64>() / n as f64;
    println!("round-trip exact; reconstruction distortion {:.3} dB", 10.0 * mse.log10());
    Ok(())
}
