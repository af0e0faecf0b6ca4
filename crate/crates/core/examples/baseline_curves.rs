//! Print the closed-form quadratic-Gaussian baselines for both correlation
//! setups: the asymptotic Wyner-Ziv curve, the same curve plus the one-shot
//! space-filling offset, and the point-to-point curve.
//!
//! Runs instantly: `cargo run --release --example baseline_curves`

use wzlearn::sources::{
    point_to_point_rd_db, space_filling_offset_db, wz_rd_distortion_db, CorrelationDirection,
    SourceModel,
};

fn main() -> wzlearn::Result<()> {
    let setups = [
        ("X = Y + N, Var(Y)=1, Var(N)=0.1", SourceModel::new(CorrelationDirection::XEqualsYPlusN, 1.0, 0.1)?),
        ("Y = X + N, Var(X)=1, Var(N)=0.01", SourceModel::new(CorrelationDirection::YEqualsXPlusN, 1.0, 0.01)?),
    ];
    println!("space-filling offset: {:.6} dB\n", space_filling_offset_db());
    for (name, model) in setups {
        println!("{name}");
        println!("  conditional variance {:.6}, Var(X) {:.4}", model.conditional_variance(), model.var_x());
        println!("  {:>9} | {:>12} | {:>12} | {:>12}", "rate", "wz_db", "wz+offset_db", "p2p_db");
        for i in 0..=12 {
            let rate = i as f64 * 0.5;
            let wz = wz_rd_distortion_db(&model, rate)?;
            println!(
                "  {rate:>9.2} | {wz:>12.6} | {:>12.6} | {:>12.6}",
                wz + space_filling_offset_db(),
                point_to_point_rd_db(&model, rate)
            );
        }
        println!();
    }
    Ok(())
}
