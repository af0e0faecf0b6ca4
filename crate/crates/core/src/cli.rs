//! Command-line surface: train, sweep, eval, baseline, map, codec.
//!
//! Commands are driven by a flat TOML config (every key typed, unknown keys
//! rejected) with flag overrides on top. All outputs are deterministic given
//! the same inputs and seeds. Exit codes: 0 ok, 2 usage or config error,
//! 3 numeric divergence, 4 I/O or corrupt file.

use crate::entropy_coding::{codec_decode, codec_encode};
use crate::error::Error;
use crate::evaluation::{
    binning_score, decoder_linearity, export_figure_data, quantizer_map, LinearityReport, RdPoint,
};
use crate::models::{read_sample_file, write_sample_file, PriorKind, WzSystem};
use crate::sources::{
    point_to_point_rd_db, space_filling_offset_db, wz_rd_distortion_db, CorrelationDirection,
    SourceModel,
};
use crate::training::{
    sweep, train_with_progress, write_report_csv, write_sweep_csv, DecayShape, TemperatureSchedule,
    TrainConfig, TrainRecord,
};
use crate::util::{fmt_g9, fnv1a64};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Flat run configuration; mirrors [`TrainConfig`] plus evaluation and map
/// settings. Every field has a default, so a config file only lists what it
/// changes; unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub prior_kind: PriorKind,
    pub lambda: f64,
    pub k: usize,
    pub batch_size: usize,
    pub total_steps: u64,
    pub learning_rate: f64,
    /// Final learning rate (exponential decay); equal to `learning_rate`
    /// for a constant rate.
    pub learning_rate_end: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub decay_shape: DecayShape,
    pub seed: u64,
    pub direction: CorrelationDirection,
    pub base_variance: f64,
    pub noise_variance: f64,
    pub hidden_units: usize,
    pub leaky_slope: f64,
    pub eval_samples: usize,
    pub record_interval: u64,
    pub map_grid: usize,
    /// Map range as a multiple of the source standard deviation.
    pub map_range_sigmas: f64,
    /// Samples used for decoder-linearity fits.
    pub linearity_samples: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            prior_kind: PriorKind::Marginal,
            lambda: 10.0,
            k: 16,
            batch_size: 256,
            total_steps: 30_000,
            learning_rate: 1e-3,
            learning_rate_end: 1e-3,
            t_start: 1.0,
            t_end: 0.1,
            decay_shape: DecayShape::Exponential,
            seed: 0,
            direction: CorrelationDirection::XEqualsYPlusN,
            base_variance: 1.0,
            noise_variance: 0.1,
            hidden_units: 100,
            leaky_slope: 0.01,
            eval_samples: 1 << 20,
            record_interval: 500,
            map_grid: 4096,
            map_range_sigmas: 3.5,
            linearity_samples: 1 << 16,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("bad config: {e}")))
    }

    pub fn source(&self) -> crate::Result<SourceModel> {
        SourceModel::new(self.direction, self.base_variance, self.noise_variance)
    }

    pub fn train_config(&self) -> crate::Result<TrainConfig> {
        let source = self.source()?;
        let cfg = TrainConfig {
            prior_kind: self.prior_kind,
            lambda: self.lambda,
            k: self.k,
            batch_size: self.batch_size,
            total_steps: self.total_steps,
            learning_rate: self.learning_rate,
            learning_rate_end: self.learning_rate_end,
            temperature: TemperatureSchedule {
                t_start: self.t_start,
                t_end: self.t_end,
                shape: self.decay_shape,
            },
            seed: self.seed,
            source,
            hidden_units: self.hidden_units,
            leaky_slope: self.leaky_slope,
            eval_samples: self.eval_samples,
            record_interval: self.record_interval,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Hash of the canonical serialized config, quoted in output files.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).unwrap_or_default();
        format!("{:016x}", fnv1a64(text.as_bytes()))
    }
}

#[derive(Parser)]
#[command(
    name = "wzlearn",
    version = TOOL_VERSION,
    about = "Train and analyze learned one-shot compressors with decoder side information"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one system and write checkpoint, report, and evaluated point.
    Train(TrainArgs),
    /// Train one system per lambda and collect the rate-distortion curve.
    Sweep(SweepArgs),
    /// Evaluate a checkpoint on fresh samples.
    Eval(EvalArgs),
    /// Export the closed-form rate-distortion baseline curves as CSV.
    Baseline(BaselineArgs),
    /// Extract the quantizer map, binning score, and decoder-linearity fits.
    Map(MapArgs),
    /// Compress or decompress sample files with a marginal checkpoint.
    Codec(CodecArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file; omitted keys use defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config's lambda.
    #[arg(long)]
    lambda: Option<f64>,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's total training steps.
    #[arg(long)]
    steps: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> crate::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(l) = self.lambda {
            cfg.lambda = l;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.steps {
            cfg.total_steps = n;
        }
        if let Some(dir) = &self.out {
            cfg.output_dir = dir.clone();
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated lambda list, e.g. 5,10,20.
    #[arg(long, value_delimiter = ',', required = true)]
    lambdas: Vec<f64>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Evaluation sample count.
    #[arg(long, default_value_t = 1 << 20)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long, value_enum, default_value = "x-equals-y-plus-n")]
    direction: DirectionArg,
    #[arg(long, default_value_t = 1.0)]
    base_variance: f64,
    #[arg(long, default_value_t = 0.1)]
    noise_variance: f64,
    #[arg(long, default_value_t = 0.0)]
    rate_min: f64,
    #[arg(long, default_value_t = 6.0)]
    rate_max: f64,
    #[arg(long, default_value_t = 0.25)]
    rate_step: f64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum DirectionArg {
    XEqualsYPlusN,
    YEqualsXPlusN,
}

impl From<DirectionArg> for CorrelationDirection {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::XEqualsYPlusN => CorrelationDirection::XEqualsYPlusN,
            DirectionArg::YEqualsXPlusN => CorrelationDirection::YEqualsXPlusN,
        }
    }
}

#[derive(Args)]
struct MapArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    x_min: Option<f64>,
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long, default_value_t = 4096)]
    grid: usize,
    /// Samples for the decoder-linearity fits.
    #[arg(long, default_value_t = 1 << 16)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CodecArgs {
    #[command(subcommand)]
    direction: CodecDirection,
}

#[derive(Subcommand)]
enum CodecDirection {
    /// Compress a file of source samples.
    Encode(CodecEncodeArgs),
    /// Decompress and reconstruct with side information.
    Decode(CodecDecodeArgs),
}

#[derive(Args)]
struct CodecEncodeArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// File of source samples, one float per line.
    #[arg(long)]
    input: PathBuf,
    /// File of side-information samples (same length); checked now so
    /// decode cannot surprise later.
    #[arg(long)]
    side: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CodecDecodeArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Compressed file produced by `codec encode`.
    #[arg(long)]
    input: PathBuf,
    /// File of side-information samples, one float per line.
    #[arg(long)]
    side: PathBuf,
    /// Reconstruction output, one float per line.
    #[arg(long)]
    out: PathBuf,
    /// Optional output for the decoded bin indices.
    #[arg(long)]
    indices_out: Option<PathBuf>,
}

/// Parse and execute; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 2 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Map(a) => cmd_map(a),
        Command::Codec(a) => match a.direction {
            CodecDirection::Encode(e) => cmd_codec_encode(e),
            CodecDirection::Decode(d) => cmd_codec_decode(d),
        },
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Usage(_) => 2,
        Error::Numeric(_) | Error::Diverged { .. } => 3,
        Error::Io(_) | Error::Corrupt(_) => 4,
    }
}

fn comment_for(cfg_hash: &str) -> String {
    format!("wzlearn {TOOL_VERSION} config_hash={cfg_hash}")
}

fn write_rd_point_csv(path: &Path, point: &RdPoint, comment: &str) -> crate::Result<()> {
    let mut text = String::new();
    text.push_str(&format!("# {comment}\n"));
    text.push_str("rate_bits,distortion_db,sample_count,lambda,seed,prior_kind,k,infinite_rate\n");
    text.push_str(&format!(
        "{},{},{},{},{},{:?},{},{}\n",
        fmt_g9(point.rate_bits),
        fmt_g9(point.distortion_db),
        point.sample_count,
        fmt_g9(point.lambda),
        point.seed,
        point.prior_kind,
        point.k,
        point.infinite_rate
    ));
    std::fs::write(path, text)?;
    Ok(())
}

fn write_fits_csv(path: &Path, report: &LinearityReport, comment: &str) -> crate::Result<()> {
    let mut text = String::new();
    text.push_str(&format!("# {comment}\n"));
    text.push_str("u,x_lo,x_hi,slope,intercept,r2,n_samples,degenerate\n");
    for f in &report.fits {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            f.u,
            fmt_g9(f.x_lo),
            fmt_g9(f.x_hi),
            fmt_g9(f.slope),
            fmt_g9(f.intercept),
            fmt_g9(f.r2),
            f.n_samples,
            f.degenerate
        ));
    }
    for s in &report.skipped {
        text.push_str(&format!("# skipped: {s}\n"));
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn cmd_train(args: TrainArgs) -> crate::Result<()> {
    let cfg = args.config.resolve()?;
    let train_cfg = cfg.train_config()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let comment = comment_for(&cfg.hash());

    let mut records: Vec<TrainRecord> = Vec::new();
    let outcome = train_with_progress(&train_cfg, |r| {
        eprintln!(
            "step {:>8}  loss {:>10.4}  rate {:>7.3} bits  mse {:>10.6}  t {:.3}",
            r.step, r.loss, r.rate_bits, r.distortion, r.temperature
        );
        records.push(*r);
    });

    let report_path = cfg.output_dir.join("train_report.csv");
    match outcome {
        Ok((system, report)) => {
            let ckpt = cfg.output_dir.join("checkpoint.wzck");
            system.save_checkpoint(&ckpt)?;
            let mut buf = Vec::new();
            write_report_csv(&mut buf, &report, &comment)?;
            std::fs::write(&report_path, buf)?;
            write_rd_point_csv(&cfg.output_dir.join("rd_point.csv"), &report.final_point, &comment)?;
            println!(
                "trained lambda={} -> rate {:.4} bits, distortion {:.3} dB ({} samples); checkpoint {}",
                train_cfg.lambda,
                report.final_point.rate_bits,
                report.final_point.distortion_db,
                report.final_point.sample_count,
                ckpt.display()
            );
            Ok(())
        }
        Err(e) => {
            // keep the partial report for diagnosis
            let mut text = format!("# {comment}\n# aborted: {e}\n");
            text.push_str("step,loss,rate_bits,distortion,temperature\n");
            for r in &records {
                text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.step,
                    fmt_g9(r.loss),
                    fmt_g9(r.rate_bits),
                    fmt_g9(r.distortion),
                    fmt_g9(r.temperature)
                ));
            }
            let _ = std::fs::write(&report_path, text);
            Err(e)
        }
    }
}

fn cmd_sweep(args: SweepArgs) -> crate::Result<()> {
    let cfg = args.config.resolve()?;
    let train_cfg = cfg.train_config()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let ckpt_dir = cfg.output_dir.join("checkpoints");
    let runs = sweep(&train_cfg, &args.lambdas, Some(&ckpt_dir))?;
    let comment = format!("{} lambdas={:?}", comment_for(&cfg.hash()), args.lambdas);
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &runs, &comment)?;
    let csv_path = cfg.output_dir.join("rd_curve.csv");
    std::fs::write(&csv_path, buf)?;
    for run in &runs {
        match &run.outcome {
            Ok(sp) => println!(
                "lambda {:>10.4}: rate {:.4} bits, distortion {:.3} dB",
                run.lambda, sp.point.rate_bits, sp.point.distortion_db
            ),
            Err(e) => eprintln!("lambda {:>10.4}: FAILED: {e}", run.lambda),
        }
    }
    println!("curve written to {}", csv_path.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> crate::Result<()> {
    let system = WzSystem::load_checkpoint(&args.checkpoint)?;
    let source = system.config.source;
    let point = crate::evaluation::evaluate(&system, &source, args.samples, args.seed)?;
    println!(
        "rate {:.6} bits/sample, distortion {:.4} dB over {} samples (lambda {}, {:?})",
        point.rate_bits, point.distortion_db, point.sample_count, point.lambda, point.prior_kind
    );
    if let Some(out) = &args.out {
        let comment = format!(
            "wzlearn {TOOL_VERSION} checkpoint={} seed={}",
            args.checkpoint.display(),
            args.seed
        );
        write_rd_point_csv(out, &point, &comment)?;
    }
    Ok(())
}

fn cmd_baseline(args: BaselineArgs) -> crate::Result<()> {
    if !(args.rate_step > 0.0) {
        return Err(Error::Usage(format!("rate-step must be positive, got {}", args.rate_step)));
    }
    if args.rate_max < args.rate_min || args.rate_min < 0.0 {
        return Err(Error::Usage("need 0 <= rate-min <= rate-max".into()));
    }
    let model = SourceModel::new(args.direction.into(), args.base_variance, args.noise_variance)?;
    let offset = space_filling_offset_db();
    let mut text = String::new();
    let params = format!(
        "direction={:?} base_variance={} noise_variance={}",
        model.direction, model.base_variance, model.noise_variance
    );
    text.push_str(&format!(
        "# wzlearn {TOOL_VERSION} config_hash={:016x} {params}\n",
        fnv1a64(params.as_bytes())
    ));
    text.push_str("rate_bits,wz_db,wz_plus_offset_db,p2p_db\n");
    let mut rate = args.rate_min;
    while rate <= args.rate_max + 1e-12 {
        let wz = wz_rd_distortion_db(&model, rate)?;
        text.push_str(&format!(
            "{},{},{},{}\n",
            fmt_g9(rate),
            fmt_g9(wz),
            fmt_g9(wz + offset),
            fmt_g9(point_to_point_rd_db(&model, rate))
        ));
        rate += args.rate_step;
    }
    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(&args.out, text)?;
    println!("baselines written to {}", args.out.display());
    Ok(())
}

fn cmd_map(args: MapArgs) -> crate::Result<()> {
    let system = WzSystem::load_checkpoint(&args.checkpoint)?;
    let sd_x = system.config.source.var_x().sqrt();
    let x_min = args.x_min.unwrap_or(-3.5 * sd_x);
    let x_max = args.x_max.unwrap_or(3.5 * sd_x);
    let map = quantizer_map(&system, x_min, x_max, args.grid)?;
    let score = binning_score(&map);
    let fits = decoder_linearity(&system, &map, &system.config.source, args.samples, args.seed);
    let comment = format!(
        "wzlearn {TOOL_VERSION} checkpoint={} grid={} range=[{x_min},{x_max}]",
        args.checkpoint.display(),
        args.grid
    );
    std::fs::create_dir_all(&args.out_dir)?;
    export_figure_data(&system, &map, &args.out_dir, &comment)?;
    write_fits_csv(&args.out_dir.join("fits.csv"), &fits, &comment)?;
    println!(
        "map: {} runs over {} indices; discontiguous_bin_count={} reuse_factor={:.3}",
        map.runs.len(),
        map.distinct_u().len(),
        score.discontiguous_bin_count,
        score.reuse_factor
    );
    println!(
        "linearity: {} fits ({} skipped); files in {}",
        fits.fits.len(),
        fits.skipped.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_codec_encode(args: CodecEncodeArgs) -> crate::Result<()> {
    let system = WzSystem::load_checkpoint(&args.checkpoint)?;
    let xs = read_sample_file(&args.input)?;
    let ys = read_sample_file(&args.side)?;
    if xs.len() != ys.len() {
        return Err(Error::Usage(format!(
            "input has {} samples but side file has {}",
            xs.len(),
            ys.len()
        )));
    }
    let file = codec_encode(&system, &xs)?;
    std::fs::write(&args.out, &file)?;
    println!(
        "{} samples -> {} bytes ({:.4} bits/sample) at {}",
        xs.len(),
        file.len(),
        8.0 * file.len() as f64 / xs.len() as f64,
        args.out.display()
    );
    Ok(())
}

fn cmd_codec_decode(args: CodecDecodeArgs) -> crate::Result<()> {
    let system = WzSystem::load_checkpoint(&args.checkpoint)?;
    let file = std::fs::read(&args.input)?;
    let ys = read_sample_file(&args.side)?;
    let (indices, x_hat) = codec_decode(&system, &file, &ys)?;
    write_sample_file(&args.out, &x_hat)?;
    if let Some(ipath) = &args.indices_out {
        let text: String = indices.iter().map(|u| format!("{u}\n")).collect();
        std::fs::write(ipath, text)?;
    }
    println!(
        "decoded {} samples to {}",
        x_hat.len(),
        args.out.display()
    );
    Ok(())
}
