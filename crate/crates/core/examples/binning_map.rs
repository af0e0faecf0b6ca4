//! Reveal binning: train a marginal system on a low-noise source, extract
//! the deterministic quantizer map, and show that single bin indices cover
//! several disjoint source intervals while the decoder stays affine in the
//! side information within each interval.
//!
//! A few minutes: `cargo run --release --example binning_map`

use wzlearn::evaluation::{binning_score, decoder_linearity, quantizer_map};
use wzlearn::{CorrelationDirection, PriorKind, SourceModel, TrainConfig};

fn main() -> wzlearn::Result<()> {
    let source = SourceModel::new(CorrelationDirection::XEqualsYPlusN, 1.0, 0.01)?;
    let mut cfg = TrainConfig::new(PriorKind::Marginal, source, 110.0, 2);
    cfg.total_steps = 14_000;
    cfg.eval_samples = 1 << 18;

    println!("training low-noise marginal system (lambda {}) ...", cfg.lambda);
    let (system, report) = wzlearn::training::train(&cfg)?;
    let p = &report.final_point;
    println!("operational point: {:.4} bits, {:.3} dB\n", p.rate_bits, p.distortion_db);

    let map = quantizer_map(&system, -3.5, 3.5, 4096)?;
    let score = binning_score(&map);
    println!("quantizer map over [-3.5, 3.5]:");
    for u in map.distinct_u() {
        let intervals = map.intervals_of(u);
        let desc: Vec<String> = intervals
            .iter()
            .map(|(lo, hi)| format!("[{lo:+.2}, {hi:+.2}]"))
            .collect();
        println!("  u={u:>2}: {}", desc.join("  "));
    }
    println!(
        "\n{} of {} indices are discontiguous; reuse factor {:.2}",
        score.discontiguous_bin_count,
        map.distinct_u().len(),
        score.reuse_factor
    );

    let lin = decoder_linearity(&system, &map, &source, 1 << 16, 9);
    let good = lin.fits.iter().filter(|f| !f.degenerate && f.r2 > 0.95).count();
    println!(
        "decoder linearity: {}/{} fitted cells have R^2 > 0.95 ({} skipped as thin)",
        good,
        lin.fits.len(),
        lin.skipped.len()
    );
    let mean_slope: f64 =
        lin.fits.iter().filter(|f| !f.degenerate).map(|f| f.slope).sum::<f64>()
            / lin.fits.iter().filter(|f| !f.degenerate).count().max(1) as f64;
    println!("mean fitted slope d(x_hat)/dy = {mean_slope:.4}");
    Ok(())
}
