//! End-to-end checks of the command-line surface: every subcommand, output
//! determinism, and exit codes.

use std::fs;
use std::path::Path;
use wzlearn::cli::run;

fn write_smoke_config(path: &Path, out_dir: &Path, extra: &str) {
    let text = format!(
        "prior_kind = \"marginal\"\n\
         lambda = 18.0\n\
         k = 8\n\
         hidden_units = 16\n\
         batch_size = 32\n\
         total_steps = 400\n\
         eval_samples = 8192\n\
         record_interval = 100\n\
         seed = 9\n\
         output_dir = \"{}\"\n\
         {extra}",
        out_dir.display()
    );
    fs::write(path, text).unwrap();
}

#[test]
fn train_is_idempotent_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");

    let out_a = dir.path().join("a");
    write_smoke_config(&cfg, &out_a, "");
    assert_eq!(run(["wzlearn", "train", "--config", cfg.to_str().unwrap()]), 0);
    for f in ["checkpoint.wzck", "train_report.csv", "rd_point.csv"] {
        assert!(out_a.join(f).exists(), "missing {f}");
    }

    let out_b = dir.path().join("b");
    write_smoke_config(&cfg, &out_b, "");
    assert_eq!(run(["wzlearn", "train", "--config", cfg.to_str().unwrap()]), 0);

    // identical bytes, independent of where the output lands
    assert_eq!(
        fs::read(out_a.join("checkpoint.wzck")).unwrap(),
        fs::read(out_b.join("checkpoint.wzck")).unwrap()
    );
    assert_eq!(
        fs::read(out_a.join("train_report.csv")).unwrap(),
        fs::read(out_b.join("train_report.csv")).unwrap()
    );
    assert_eq!(
        fs::read(out_a.join("rd_point.csv")).unwrap(),
        fs::read(out_b.join("rd_point.csv")).unwrap()
    );
}

#[test]
fn lambda_override_lands_in_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    let out = dir.path().join("out");
    write_smoke_config(&cfg, &out, "total_steps = 50\neval_samples = 1024\n");
    assert_eq!(
        run([
            "wzlearn",
            "train",
            "--config",
            cfg.to_str().unwrap(),
            "--lambda",
            "50"
        ]),
        0
    );
    let system = wzlearn::WzSystem::load_checkpoint(out.join("checkpoint.wzck")).unwrap();
    assert_eq!(system.config.lambda, 50.0);
    assert_eq!(system.config.seed, 9);
}

#[test]
fn sweep_writes_sorted_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    let out = dir.path().join("out");
    write_smoke_config(&cfg, &out, "total_steps = 60\neval_samples = 1024\n");
    assert_eq!(
        run([
            "wzlearn",
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--lambdas",
            "9,3",
        ]),
        0
    );
    let text = fs::read_to_string(out.join("rd_curve.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with('#'));
    assert_eq!(
        lines.next().unwrap(),
        "lambda,k,seed,steps,rate_bits,distortion_db,checkpoint_path"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("3"), "rows sorted by lambda: {rows:?}");
    assert!(rows[1].starts_with("9"));
    assert!(out.join("checkpoints/lambda_000.wzck").exists());
}

#[test]
fn eval_command_reports_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    let out = dir.path().join("out");
    write_smoke_config(&cfg, &out, "total_steps = 50\neval_samples = 1024\n");
    assert_eq!(run(["wzlearn", "train", "--config", cfg.to_str().unwrap()]), 0);
    let ckpt = out.join("checkpoint.wzck");
    let point_csv = dir.path().join("point.csv");
    assert_eq!(
        run([
            "wzlearn",
            "eval",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--samples",
            "4096",
            "--out",
            point_csv.to_str().unwrap(),
        ]),
        0
    );
    let text = fs::read_to_string(&point_csv).unwrap();
    assert!(text.contains("rate_bits,distortion_db"));
}

#[test]
fn baseline_reproduces_closed_form_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("baselines.csv");
    assert_eq!(
        run([
            "wzlearn",
            "baseline",
            "--noise-variance",
            "0.1",
            "--rate-min",
            "0",
            "--rate-max",
            "6",
            "--rate-step",
            "6",
            "--out",
            out.to_str().unwrap(),
        ]),
        0
    );
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|t| t.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert!((rows[0][1] - (-10.0)).abs() < 1e-6);
    assert!((rows[0][2] - (-8.46706896)).abs() < 1e-6);
    assert!((rows[0][3] - 0.41392685).abs() < 1e-6);
    assert!((rows[1][1] - (-46.12359948)).abs() < 1e-6);

    // rerun -> identical bytes
    let out2 = dir.path().join("baselines2.csv");
    run([
        "wzlearn",
        "baseline",
        "--noise-variance",
        "0.1",
        "--rate-min",
        "0",
        "--rate-max",
        "6",
        "--rate-step",
        "6",
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&out2).unwrap());
}

#[test]
fn map_and_codec_commands_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    let out = dir.path().join("out");
    write_smoke_config(&cfg, &out, "");
    assert_eq!(run(["wzlearn", "train", "--config", cfg.to_str().unwrap()]), 0);
    let ckpt = out.join("checkpoint.wzck");

    let map_dir = dir.path().join("map");
    assert_eq!(
        run([
            "wzlearn",
            "map",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--grid",
            "512",
            "--samples",
            "20000",
            "--out-dir",
            map_dir.to_str().unwrap(),
        ]),
        0
    );
    for f in ["map.csv", "decoder_curves.csv", "fits.csv"] {
        assert!(map_dir.join(f).exists(), "missing {f}");
    }

    // codec: build sample files, compress, decompress, compare
    let batch = wzlearn::sources::sample_pairs(
        &wzlearn::SourceModel::new(wzlearn::CorrelationDirection::XEqualsYPlusN, 1.0, 0.1).unwrap(),
        5000,
        77,
    );
    let x_path = dir.path().join("x.txt");
    let y_path = dir.path().join("y.txt");
    wzlearn::models::write_sample_file(&x_path, &batch.x).unwrap();
    wzlearn::models::write_sample_file(&y_path, &batch.y).unwrap();
    let comp = dir.path().join("compressed.wzb");
    assert_eq!(
        run([
            "wzlearn",
            "codec",
            "encode",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--input",
            x_path.to_str().unwrap(),
            "--side",
            y_path.to_str().unwrap(),
            "--out",
            comp.to_str().unwrap(),
        ]),
        0
    );
    let xhat_a = dir.path().join("xhat_a.txt");
    let xhat_b = dir.path().join("xhat_b.txt");
    for xhat in [&xhat_a, &xhat_b] {
        assert_eq!(
            run([
                "wzlearn",
                "codec",
                "decode",
                "--checkpoint",
                ckpt.to_str().unwrap(),
                "--input",
                comp.to_str().unwrap(),
                "--side",
                y_path.to_str().unwrap(),
                "--out",
                xhat.to_str().unwrap(),
            ]),
            0
        );
    }
    let a = fs::read(&xhat_a).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, fs::read(&xhat_b).unwrap());

    // wrong-length side file fails before writing output
    let y_short = dir.path().join("y_short.txt");
    wzlearn::models::write_sample_file(&y_short, &batch.y[..100]).unwrap();
    let xhat_c = dir.path().join("xhat_c.txt");
    assert_eq!(
        run([
            "wzlearn",
            "codec",
            "decode",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--input",
            comp.to_str().unwrap(),
            "--side",
            y_short.to_str().unwrap(),
            "--out",
            xhat_c.to_str().unwrap(),
        ]),
        2
    );
    assert!(!xhat_c.exists());
}

#[test]
fn divergent_training_exits_three_and_keeps_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    let out = dir.path().join("out");
    write_smoke_config(&cfg, &out, "learning_rate = 1e9\n");
    assert_eq!(run(["wzlearn", "train", "--config", cfg.to_str().unwrap()]), 3);
    let report = fs::read_to_string(out.join("train_report.csv")).unwrap();
    assert!(report.contains("# aborted:"), "partial report kept:\n{report}");
}
