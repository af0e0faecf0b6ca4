//! Train one conditional-prior system (learned quantizer + ideal
//! Slepian-Wolf coder) on the X = Y + N source and compare the evaluated
//! operational point against the closed-form bounds.
//!
//! About two minutes: `cargo run --release --example train_conditional`

use wzlearn::sources::{point_to_point_rd_db, wz_rd_distortion_db};
use wzlearn::{CorrelationDirection, PriorKind, SourceModel, TrainConfig};

fn main() -> wzlearn::Result<()> {
    let source = SourceModel::new(CorrelationDirection::XEqualsYPlusN, 1.0, 0.1)?;
    let mut cfg = TrainConfig::new(PriorKind::Conditional, source, 18.0, 7);
    cfg.total_steps = 10_000;
    cfg.eval_samples = 1 << 18;

    println!("training conditional system at lambda {} ...", cfg.lambda);
    let (_, report) = wzlearn::training::train_with_progress(&cfg, |r| {
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
    println!("  asymptotic Wyner-Ziv bound : {:.3} dB", wz_rd_distortion_db(&source, p.rate_bits)?);
    println!("  point-to-point (no side info): {:.3} dB", point_to_point_rd_db(&source, p.rate_bits));
    println!("trained in {:.1} s", report.wall_time_secs);
    Ok(())
}
