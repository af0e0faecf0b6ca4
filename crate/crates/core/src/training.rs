//! The two Lagrangian objectives, the stochastic training loop with
//! temperature annealing, and lambda sweeps producing rate-distortion curves.
//!
//! Both objectives have the same shape: a rate term (log-density ratio of the
//! encoder posterior to the rate model, both evaluated as relaxed
//! distributions at the soft sample) plus `lambda` times squared error. The
//! marginal variant prices indices under a free distribution `q(u)`; the
//! conditional variant under `q(u|y)`.

use crate::autodiff::{Graph, NodeId, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
use crate::distributions::{concrete_log_density_node, concrete_sample_node, standard_gumbel_vec};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, RdPoint};
use crate::matrix::Matrix;
use crate::models::{Prior, PriorKind, SystemConfig, WzSystem};
use crate::sources::{sample_pairs, SampleBatch, SourceModel};
use crate::util::{derive_seed, derive_seed_labeled, fmt_g9};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayShape {
    Exponential,
    Linear,
}

/// Temperature schedule for the relaxed sampler: anneal from `t_start` to
/// `t_end` across training, then hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSchedule {
    pub t_start: f64,
    pub t_end: f64,
    pub shape: DecayShape,
}

impl Default for TemperatureSchedule {
    fn default() -> Self {
        TemperatureSchedule { t_start: 1.0, t_end: 0.1, shape: DecayShape::Exponential }
    }
}

impl TemperatureSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_start >= self.t_end) {
            return Err(Error::Config(format!(
                "temperature schedule requires t_start >= t_end > 0, got {} -> {}",
                self.t_start, self.t_end
            )));
        }
        Ok(())
    }

    pub fn at(&self, step: u64, total_steps: u64) -> f64 {
        if total_steps <= 1 {
            return self.t_end;
        }
        let frac = (step as f64 / (total_steps - 1) as f64).min(1.0);
        match self.shape {
            DecayShape::Exponential => self.t_start * (self.t_end / self.t_start).powf(frac),
            DecayShape::Linear => self.t_start + (self.t_end - self.t_start) * frac,
        }
    }
}

/// Everything one training run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub prior_kind: PriorKind,
    pub lambda: f64,
    pub k: usize,
    pub batch_size: usize,
    pub total_steps: u64,
    pub learning_rate: f64,
    /// Final learning rate; the rate decays exponentially from
    /// `learning_rate` to this across training. Equal values mean no decay.
    pub learning_rate_end: f64,
    pub temperature: TemperatureSchedule,
    pub seed: u64,
    pub source: SourceModel,
    pub hidden_units: usize,
    pub leaky_slope: f64,
    /// Sample count for the discrete-mode evaluation appended to the report.
    pub eval_samples: usize,
    /// Steps between report records.
    pub record_interval: u64,
}

impl TrainConfig {
    pub fn new(prior_kind: PriorKind, source: SourceModel, lambda: f64, seed: u64) -> Self {
        TrainConfig {
            prior_kind,
            lambda,
            k: 16,
            batch_size: 256,
            total_steps: 30_000,
            learning_rate: 1e-3,
            learning_rate_end: 1e-3,
            temperature: TemperatureSchedule::default(),
            seed,
            source,
            hidden_units: 100,
            leaky_slope: 0.01,
            eval_samples: 1 << 20,
            record_interval: 500,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda <= 0.0 {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.total_steps < 1 {
            return Err(Error::Config("total_steps must be at least 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.eval_samples < 1 {
            return Err(Error::Config("eval_samples must be at least 1".into()));
        }
        if self.record_interval < 1 {
            return Err(Error::Config("record_interval must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate_end > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        self.temperature.validate()?;
        self.system_config().validate()
    }

    pub fn system_config(&self) -> SystemConfig {
        SystemConfig {
            k: self.k,
            lambda: self.lambda,
            prior_kind: self.prior_kind,
            hidden_units: self.hidden_units,
            leaky_slope: self.leaky_slope,
            source: self.source,
            seed: self.seed,
        }
    }
}

/// One report line from the training loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainRecord {
    pub step: u64,
    pub loss: f64,
    pub rate_bits: f64,
    /// Mean squared error of the relaxed reconstruction.
    pub distortion: f64,
    pub temperature: f64,
}

/// Full outcome of one training run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub records: Vec<TrainRecord>,
    pub final_point: RdPoint,
    pub wall_time_secs: f64,
}

/// The scalar loss node together with the report values of its two terms.
pub struct LossParts {
    pub loss: NodeId,
    pub rate_bits: f64,
    /// Mean squared error term (unweighted).
    pub distortion: f64,
}

/// Relaxed-sample rate plus distortion for a marginal-prior system, with
/// noise drawn from `rng`. Errors unless the system's prior is marginal.
pub fn loss_marginal<R: Rng>(
    g: &mut Graph,
    system: &WzSystem,
    batch: &SampleBatch,
    temperature: f64,
    rng: &mut R,
) -> Result<LossParts> {
    if system.config.prior_kind != PriorKind::Marginal {
        return Err(Error::Usage("loss_marginal needs a marginal-prior system".into()));
    }
    let noise = draw_noise(system.k(), batch.len(), rng);
    build_loss(g, system, batch, temperature, &noise)
}

/// Same as [`loss_marginal`] but with `q(u|y)`. Errors unless conditional.
pub fn loss_conditional<R: Rng>(
    g: &mut Graph,
    system: &WzSystem,
    batch: &SampleBatch,
    temperature: f64,
    rng: &mut R,
) -> Result<LossParts> {
    if system.config.prior_kind != PriorKind::Conditional {
        return Err(Error::Usage("loss_conditional needs a conditional-prior system".into()));
    }
    let noise = draw_noise(system.k(), batch.len(), rng);
    build_loss(g, system, batch, temperature, &noise)
}

/// Loss with caller-supplied (frozen) Gumbel noise, `[K x B]`. This is the
/// deterministic core used by the training loop and by gradient checks.
pub fn build_loss(
    g: &mut Graph,
    system: &WzSystem,
    batch: &SampleBatch,
    temperature: f64,
    noise: &Matrix,
) -> Result<LossParts> {
    let b = batch.len();
    if b == 0 {
        return Err(Error::Usage("empty batch".into()));
    }
    if noise.rows() != system.k() || noise.cols() != b {
        return Err(Error::Config(format!(
            "noise must be {}x{}, got {}x{}",
            system.k(),
            b,
            noise.rows(),
            noise.cols()
        )));
    }
    let store = system.store();
    let x_node = g.constant(Matrix::row_vector(&batch.x));
    let y_node = g.constant(Matrix::row_vector(&batch.y));

    let enc_logits = system.encoder().forward(g, store, x_node)?;
    let (u, ln_u) = concrete_sample_node(g, enc_logits, noise, temperature)?;
    let ld_p = concrete_log_density_node(g, enc_logits, ln_u, temperature);

    let q_logits = match system.prior() {
        Prior::Marginal(pid) => {
            let p = g.param(store, *pid);
            g.broadcast_cols(p, b)
        }
        Prior::Conditional(mlp) => mlp.forward(g, store, y_node)?,
    };
    let ld_q = concrete_log_density_node(g, q_logits, ln_u, temperature);
    let rate_nats = g.sub(ld_p, ld_q);

    let dec_in = g.concat_rows(u, y_node);
    let x_hat = system.decoder().forward(g, store, dec_in)?;
    let err = g.sub(x_node, x_hat);
    let sq_err = g.square(err);

    let weighted = g.scale(sq_err, system.config.lambda);
    let per_example = g.add(rate_nats, weighted);
    let loss = g.mean_all(per_example);

    let mean = |m: &Matrix| m.data().iter().sum::<f64>() / m.numel() as f64;
    Ok(LossParts {
        loss,
        rate_bits: mean(g.value(rate_nats)) / std::f64::consts::LN_2,
        distortion: mean(g.value(sq_err)),
    })
}

fn draw_noise<R: Rng>(k: usize, b: usize, rng: &mut R) -> Matrix {
    let mut m = Matrix::zeros(k, b);
    for c in 0..b {
        for (r, gk) in standard_gumbel_vec(rng, k).into_iter().enumerate() {
            m.set(r, c, gk);
        }
    }
    m
}

/// Run the configured training loop; deterministic given the seed.
pub fn train(config: &TrainConfig) -> Result<(WzSystem, TrainReport)> {
    train_with_progress(config, |_| {})
}

/// [`train`] with a callback invoked at every report record.
pub fn train_with_progress(
    config: &TrainConfig,
    mut on_record: impl FnMut(&TrainRecord),
) -> Result<(WzSystem, TrainReport)> {
    config.validate()?;
    let start = Instant::now();
    let mut system = WzSystem::new(config.system_config())?;
    let batch_seed = derive_seed_labeled(config.seed, "batch");
    let noise_seed = derive_seed_labeled(config.seed, "gumbel");
    let rate_guard_bits = (config.k as f64).log2() + 5.0;
    let mut records = Vec::new();

    for step in 0..config.total_steps {
        let temperature = config.temperature.at(step, config.total_steps);
        let lr = if config.total_steps > 1 {
            let frac = step as f64 / (config.total_steps - 1) as f64;
            config.learning_rate * (config.learning_rate_end / config.learning_rate).powf(frac)
        } else {
            config.learning_rate
        };
        let batch = sample_pairs(&config.source, config.batch_size, derive_seed(batch_seed, step));
        let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(noise_seed, step));
        let noise = draw_noise(config.k, config.batch_size, &mut noise_rng);

        let mut g = Graph::new();
        let parts = build_loss(&mut g, &system, &batch, temperature, &noise)?;
        let loss_val = g.value(parts.loss).get(0, 0);
        if !loss_val.is_finite() || parts.rate_bits > rate_guard_bits {
            return Err(Error::Diverged {
                step,
                detail: format!(
                    "loss {loss_val}, rate {} bits, distortion {}, temperature {temperature}",
                    parts.rate_bits, parts.distortion
                ),
            });
        }
        g.backward(parts.loss, system.store_mut())?;
        system.store_mut().adam_step(lr, ADAM_BETA1, ADAM_BETA2, ADAM_EPS);

        if step % config.record_interval == 0 || step + 1 == config.total_steps {
            let rec = TrainRecord {
                step,
                loss: loss_val,
                rate_bits: parts.rate_bits,
                distortion: parts.distortion,
                temperature,
            };
            on_record(&rec);
            records.push(rec);
        }
    }

    let final_point = evaluate(
        &system,
        &config.source,
        config.eval_samples,
        derive_seed_labeled(config.seed, "eval"),
    )?;
    let report = TrainReport {
        records,
        final_point,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok((system, report))
}

/// Outcome of one sweep run; failures are recorded, not propagated.
#[derive(Debug)]
pub struct SweepRun {
    pub lambda: f64,
    pub seed: u64,
    pub outcome: std::result::Result<SweepPoint, String>,
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub point: RdPoint,
    pub steps: u64,
    pub checkpoint_path: Option<PathBuf>,
}

/// The config a sweep uses for its `index`-th lambda. Exposed so callers can
/// reproduce any single sweep run with [`train`] directly.
pub fn sweep_run_config(base: &TrainConfig, index: usize, lambda: f64) -> TrainConfig {
    let mut cfg = base.clone();
    cfg.lambda = lambda;
    cfg.seed = derive_seed(base.seed, index as u64);
    cfg
}

/// One independent training run per lambda (runs execute in parallel but
/// results come back in lambda-list order). Checkpoints are written to
/// `checkpoint_dir` when given.
pub fn sweep(
    base: &TrainConfig,
    lambdas: &[f64],
    checkpoint_dir: Option<&Path>,
) -> Result<Vec<SweepRun>> {
    if lambdas.is_empty() {
        return Err(Error::Usage("sweep needs at least one lambda".into()));
    }
    if let Some(dir) = checkpoint_dir {
        std::fs::create_dir_all(dir)?;
    }
    let runs: Vec<SweepRun> = lambdas
        .par_iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let cfg = sweep_run_config(base, i, lambda);
            let seed = cfg.seed;
            let outcome = (|| -> Result<SweepPoint> {
                let (system, report) = train(&cfg)?;
                let checkpoint_path = match checkpoint_dir {
                    Some(dir) => {
                        let path = dir.join(format!("lambda_{i:03}.wzck"));
                        system.save_checkpoint(&path)?;
                        Some(path)
                    }
                    None => None,
                };
                Ok(SweepPoint {
                    point: report.final_point,
                    steps: cfg.total_steps,
                    checkpoint_path,
                })
            })()
            .map_err(|e| e.to_string());
            SweepRun { lambda, seed, outcome }
        })
        .collect();
    Ok(runs)
}

/// Write sweep results as CSV: one row per successful run, sorted by lambda.
pub fn write_sweep_csv<W: Write>(mut w: W, runs: &[SweepRun], comment: &str) -> Result<()> {
    writeln!(w, "# {comment}")?;
    writeln!(w, "lambda,k,seed,steps,rate_bits,distortion_db,checkpoint_path")?;
    let mut ordered: Vec<&SweepRun> = runs.iter().collect();
    ordered.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    for run in ordered {
        if let Ok(sp) = &run.outcome {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                fmt_g9(run.lambda),
                sp.point.k,
                run.seed,
                sp.steps,
                fmt_g9(sp.point.rate_bits),
                fmt_g9(sp.point.distortion_db),
                sp.checkpoint_path
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default()
            )?;
        }
    }
    Ok(())
}

/// Write the per-step training records as CSV.
pub fn write_report_csv<W: Write>(mut w: W, report: &TrainReport, comment: &str) -> Result<()> {
    writeln!(w, "# {comment}")?;
    writeln!(w, "step,loss,rate_bits,distortion,temperature")?;
    for r in &report.records {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.step,
            fmt_g9(r.loss),
            fmt_g9(r.rate_bits),
            fmt_g9(r.distortion),
            fmt_g9(r.temperature)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{cross_entropy_bits, entropy_bits, CategoricalHead};
    use crate::gradcheck;
    use crate::sources::CorrelationDirection;

    fn small_config(prior_kind: PriorKind, seed: u64) -> TrainConfig {
        let source = SourceModel::new(CorrelationDirection::XEqualsYPlusN, 1.0, 0.1).unwrap();
        let mut cfg = TrainConfig::new(prior_kind, source, 5.0, seed);
        cfg.k = 4;
        cfg.hidden_units = 8;
        cfg.batch_size = 16;
        cfg.total_steps = 120;
        cfg.eval_samples = 1 << 10;
        cfg.record_interval = 1;
        cfg
    }

    fn small_system(prior_kind: PriorKind, k: usize, hidden: usize, seed: u64) -> WzSystem {
        let mut cfg = small_config(prior_kind, seed);
        cfg.k = k;
        cfg.hidden_units = hidden;
        WzSystem::new(cfg.system_config()).unwrap()
    }

    #[test]
    fn temperature_schedule_endpoints() {
        let s = TemperatureSchedule::default();
        assert!((s.at(0, 1000) - 1.0).abs() < 1e-12);
        assert!((s.at(999, 1000) - 0.1).abs() < 1e-12);
        let mid = s.at(500, 1001);
        assert!((mid - (0.1f64).sqrt()).abs() < 1e-3);
        assert!(TemperatureSchedule { t_start: 0.1, t_end: 1.0, shape: DecayShape::Linear }
            .validate()
            .is_err());
    }

    #[test]
    fn loss_kind_mismatch_is_usage_error() {
        let sys = small_system(PriorKind::Marginal, 4, 8, 0);
        let batch = sample_pairs(&sys.config.source, 8, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut g = Graph::new();
        assert!(matches!(
            loss_conditional(&mut g, &sys, &batch, 0.5, &mut rng),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn conditional_with_constant_logits_reduces_to_marginal() {
        // Zero out the conditional prior network: q(u|y) becomes uniform,
        // exactly the all-zero marginal logits.
        let marginal = small_system(PriorKind::Marginal, 4, 8, 7);
        let mut conditional = small_system(PriorKind::Conditional, 4, 8, 7);
        if let Prior::Conditional(mlp) = conditional.prior().clone() {
            for pid in mlp.weight_ids().iter().chain(mlp.bias_ids()) {
                conditional.store_mut().value_mut(*pid).fill(0.0);
            }
        }
        let batch = sample_pairs(&marginal.config.source, 32, 5);
        let mut noise_rng = ChaCha8Rng::seed_from_u64(11);
        let noise = draw_noise(4, 32, &mut noise_rng);
        let mut g1 = Graph::new();
        let l1 = build_loss(&mut g1, &marginal, &batch, 0.7, &noise).unwrap();
        let mut g2 = Graph::new();
        let l2 = build_loss(&mut g2, &conditional, &batch, 0.7, &noise).unwrap();
        let v1 = g1.value(l1.loss).get(0, 0);
        let v2 = g2.value(l2.loss).get(0, 0);
        assert!((v1 - v2).abs() < 1e-12, "{v1} vs {v2}");
    }

    #[test]
    fn discrete_rate_dominates_empirical_entropy() {
        // Hard samples priced under any q cost at least the empirical
        // entropy; pricing under the empirical marginal attains it.
        let sys = small_system(PriorKind::Marginal, 8, 12, 3);
        let batch = sample_pairs(&sys.config.source, 4000, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut counts = vec![0usize; 8];
        for &x in &batch.x {
            let head = CategoricalHead::new(sys.encoder_logits(x));
            counts[head.gumbel_max_sample(&mut rng)] += 1;
        }
        let n: f64 = batch.len() as f64;
        let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
        let q: Vec<f64> = sys
            .prior_log_probs(None)
            .unwrap()
            .iter()
            .map(|l| l.exp())
            .collect();
        let rate_under_q = cross_entropy_bits(&empirical, &q);
        let h = entropy_bits(&empirical);
        assert!(rate_under_q >= h - 1e-12);
        let rate_under_empirical = cross_entropy_bits(&empirical, &empirical);
        assert!((rate_under_empirical - h).abs() < 1e-12);
    }

    #[test]
    fn zero_lambda_loss_collapses_rate() {
        // With no distortion pressure, minimizing the objective drives the
        // relaxed rate term toward zero (everything lands in one index).
        let mut cfg = small_config(PriorKind::Marginal, 17);
        cfg.lambda = 1.0;
        let mut system_cfg = cfg.system_config();
        system_cfg.lambda = 0.0;
        let mut sys = WzSystem::new(system_cfg).unwrap();
        let mut rate = f64::NAN;
        for step in 0..400 {
            let batch = sample_pairs(&cfg.source, 32, derive_seed(1, step));
            let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(2, step));
            let noise = draw_noise(cfg.k, 32, &mut noise_rng);
            let mut g = Graph::new();
            let parts = build_loss(&mut g, &sys, &batch, 0.5, &noise).unwrap();
            g.backward(parts.loss, sys.store_mut()).unwrap();
            sys.store_mut().adam_step(5e-3, ADAM_BETA1, ADAM_BETA2, ADAM_EPS);
            rate = parts.rate_bits;
        }
        assert!(rate.abs() < 0.35, "relaxed rate did not collapse: {rate} bits");
    }

    #[test]
    fn both_losses_match_finite_differences() {
        for (seed, kind) in [(100u64, PriorKind::Marginal), (101, PriorKind::Conditional)] {
            let mut sys = small_system(kind, 3, 4, seed);
            let batch = sample_pairs(&sys.config.source, 4, seed + 1);
            let mut noise_rng = ChaCha8Rng::seed_from_u64(seed + 2);
            let noise = draw_noise(3, 4, &mut noise_rng);

            let mut g = Graph::new();
            let parts = build_loss(&mut g, &sys, &batch, 0.6, &noise).unwrap();
            g.backward(parts.loss, sys.store_mut()).unwrap();
            let params: Vec<_> = sys.store().ids().collect();
            let expected: Vec<Matrix> =
                params.iter().map(|&p| sys.store().grad(p).clone()).collect();

            let base = sys.clone();
            let mut probe_store = sys.store().clone();
            let report = gradcheck::compare_to_finite_differences(
                &mut probe_store,
                &params,
                &expected,
                1e-5,
                &mut |s| {
                    let mut tmp = base.clone();
                    *tmp.store_mut() = s.clone();
                    let mut g = Graph::new();
                    let parts = build_loss(&mut g, &tmp, &batch, 0.6, &noise).unwrap();
                    g.value(parts.loss).get(0, 0)
                },
            );
            assert!(
                report.max_rel_err < 1e-4,
                "{kind:?}: rel err {} over {} entries",
                report.max_rel_err,
                report.entries_checked
            );
        }
    }

    #[test]
    fn trained_conditional_prior_depends_on_y() {
        let mut cfg = small_config(PriorKind::Conditional, 19);
        cfg.total_steps = 600;
        cfg.lambda = 30.0;
        let (sys, _) = train(&cfg).unwrap();
        let a = sys.prior_log_probs(Some(-1.0)).unwrap();
        let b = sys.prior_log_probs(Some(1.0)).unwrap();
        let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        assert!(diff > 1e-3, "conditional prior ignores y: diff {diff}");
    }

    #[test]
    fn train_is_deterministic() {
        let cfg = small_config(PriorKind::Marginal, 55);
        let (sys_a, rep_a) = train(&cfg).unwrap();
        let (sys_b, rep_b) = train(&cfg).unwrap();
        for (pa, pb) in sys_a.store().ids().zip(sys_b.store().ids()) {
            assert_eq!(sys_a.store().value(pa).data(), sys_b.store().value(pb).data());
        }
        assert_eq!(rep_a.records, rep_b.records);
        assert_eq!(rep_a.final_point.rate_bits.to_bits(), rep_b.final_point.rate_bits.to_bits());
    }

    #[test]
    fn smoke_run_records_every_step() {
        let mut cfg = small_config(PriorKind::Conditional, 8);
        cfg.total_steps = 100;
        let (_, report) = train(&cfg).unwrap();
        assert_eq!(report.records.len(), 100);
        assert!(report.records.windows(2).all(|w| w[0].step < w[1].step));
    }

    #[test]
    fn sweep_validates_and_matches_direct_training() {
        let cfg = small_config(PriorKind::Marginal, 31);
        assert!(matches!(sweep(&cfg, &[], None), Err(Error::Usage(_))));

        let runs = sweep(&cfg, &[3.0, 8.0], None).unwrap();
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0].lambda, 3.0);
        let direct_cfg = sweep_run_config(&cfg, 1, 8.0);
        let (_, direct) = train(&direct_cfg).unwrap();
        let swept = runs[1].outcome.as_ref().unwrap();
        assert_eq!(swept.point.rate_bits.to_bits(), direct.final_point.rate_bits.to_bits());
        assert_eq!(
            swept.point.distortion_db.to_bits(),
            direct.final_point.distortion_db.to_bits()
        );
    }
}
