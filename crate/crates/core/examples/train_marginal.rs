//! Train one marginal-prior system (one-shot encoder + classic entropy
//! coder) and checkpoint it for the other examples.
//!
//! About two minutes: `cargo run --release --example train_marginal`

use wzlearn::sources::{point_to_point_rd_db, space_filling_offset_db, wz_rd_distortion_db};
use wzlearn::{CorrelationDirection, PriorKind, SourceModel, TrainConfig};

fn main() -> wzlearn::Result<()> {
    let source = SourceModel::new(CorrelationDirection::XEqualsYPlusN, 1.0, 0.1)?;
    let mut cfg = TrainConfig::new(PriorKind::Marginal, source, 18.0, 3);
    cfg.total_steps = 10_000;
    cfg.eval_samples = 1 << 18;

    println!("training marginal system at lambda {} ...", cfg.lambda);
    let (system, report) = wzlearn::training::train_with_progress(&cfg, |r| {
        if r.step % 2000 == 0 {
            println!(
                "  step {:>6}: loss {:>8.4}, relaxed rate {:>6.3} bits, mse {:>9.6}, t {:.3}",
                r.step, r.loss, r.rate_bits, r.distortion, r.temperature
            );
        }
    })?;

    let p = &report.final_point;
    println!("\nevaluated point: {:.4} bits, {:.3} dB ({} samples)", p.rate_bits, p.distortion_db, p.sample_count);
    println!("at that rate:");
    println!("  asymptotic Wyner-Ziv bound   : {:.3} dB", wz_rd_distortion_db(&source, p.rate_bits)?);
    println!("  one-shot bound (WZ + offset) : {:.3} dB", wz_rd_distortion_db(&source, p.rate_bits)? + space_filling_offset_db());
    println!("  point-to-point (no side info): {:.3} dB", point_to_point_rd_db(&source, p.rate_bits));

    let path = std::env::temp_dir().join("wzlearn_marginal_example.wzck");
    system.save_checkpoint(&path)?;
    println!("checkpoint saved to {}", path.display());
    Ok(())
}
