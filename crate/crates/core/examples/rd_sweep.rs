//! Sweep the trade-off weight lambda to trace a rate-distortion curve with
//! the conditional objective, then write it as CSV next to the closed-form
//! baselines.
//!
//! Several minutes (one short training run per lambda):
//! `cargo run --release --example rd_sweep`

use wzlearn::training::{sweep, write_sweep_csv};
use wzlearn::{CorrelationDirection, PriorKind, SourceModel, TrainConfig};

fn main() -> wzlearn::Result<()> {
    let source = SourceModel::new(CorrelationDirection::XEqualsYPlusN, 1.0, 0.1)?;
    let mut base = TrainConfig::new(PriorKind::Conditional, source, 10.0, 11);
    base.total_steps = 8_000;
    base.eval_samples = 1 << 18;

    let lambdas = [4.0, 9.0, 18.0, 40.0, 80.0];
    println!("sweeping {} lambdas (parallel) ...", lambdas.len());
    let runs = sweep(&base, &lambdas, None)?;

    for run in &runs {
        match &run.outcome {
            Ok(sp) => println!(
                "  lambda {:>6.1}: {:.4} bits, {:.3} dB",
                run.lambda, sp.point.rate_bits, sp.point.distortion_db
            ),
            Err(e) => println!("  lambda {:>6.1}: failed: {e}", run.lambda),
        }
    }

    let out = std::env::temp_dir().join("wzlearn_rd_curve.csv");
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &runs, "rd_sweep example")?;
    std::fs::write(&out, buf)?;
    println!("curve written to {}", out.display());
    Ok(())
}
