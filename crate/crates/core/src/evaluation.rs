//! Discrete-mode evaluation (operational rate and distortion), quantizer-map
//! extraction, binning detection, and decoder-linearity analysis.
//!
//! Evaluation always runs the deterministic system: the encoder emits the
//! mode of `p(u|x)`, the decoder receives a one-hot `u`, and the rate is the
//! cross-entropy of the transmitted indices under the learned rate model.

use crate::distributions::CategoricalHead;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::models::{PriorKind, WzSystem};
use crate::sources::{sample_pairs, SourceModel};
use crate::util::{argmax, derive_seed, fmt_g9, log_softmax_slice};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

/// Samples per evaluation chunk. Fixed so that results do not depend on how
/// many threads the chunks are spread across.
const EVAL_CHUNK: usize = 8192;

/// One evaluated operational point with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct RdPoint {
    pub rate_bits: f64,
    pub distortion_db: f64,
    pub sample_count: usize,
    pub lambda: f64,
    pub seed: u64,
    pub prior_kind: PriorKind,
    pub k: usize,
    /// Set when some transmitted index had zero probability under the rate
    /// model; `rate_bits` is infinite in that case.
    pub infinite_rate: bool,
}

/// Deterministic encoding: the mode of the encoder head at `x`.
pub fn encode_deterministic(system: &WzSystem, x: f64) -> usize {
    CategoricalHead::new(system.encoder_logits(x)).mode()
}

fn one_hot(k: usize, index: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[index] = 1.0;
    v
}

/// Evaluate rate (bits/sample) and distortion (dB) over `n` fresh source
/// realizations. Chunked for parallelism; the reduction order is fixed, so
/// the result is identical for any thread count.
pub fn evaluate(system: &WzSystem, source: &SourceModel, n: usize, seed: u64) -> Result<RdPoint> {
    evaluate_with_histogram(system, source, n, seed).map(|(p, _)| p)
}

/// [`evaluate`] plus the histogram of transmitted indices.
pub fn evaluate_with_histogram(
    system: &WzSystem,
    source: &SourceModel,
    n: usize,
    seed: u64,
) -> Result<(RdPoint, Vec<u64>)> {
    if n < 1 {
        return Err(Error::Usage("evaluation needs at least one sample".into()));
    }
    let k = system.k();
    let n_chunks = n.div_ceil(EVAL_CHUNK);
    let marginal_log_q: Option<Vec<f64>> = match system.config.prior_kind {
        PriorKind::Marginal => Some(system.prior_log_probs(None)?),
        PriorKind::Conditional => None,
    };

    struct ChunkSums {
        nats: f64,
        sq_err: f64,
        hist: Vec<u64>,
        zero_prob: bool,
    }

    let chunks: Vec<ChunkSums> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let count = EVAL_CHUNK.min(n - c * EVAL_CHUNK);
            let batch = sample_pairs(source, count, derive_seed(seed, c as u64));
            let logits = system.encoder_logits_batch(&batch.x);
            let mut u = Vec::with_capacity(count);
            let mut hist = vec![0u64; k];
            for col in 0..count {
                let idx = argmax(&logits.column(col));
                hist[idx] += 1;
                u.push(idx);
            }

            let mut nats = 0.0;
            let mut zero_prob = false;
            match &marginal_log_q {
                Some(log_q) => {
                    for &ui in &u {
                        if log_q[ui] == f64::NEG_INFINITY {
                            zero_prob = true;
                        }
                        nats -= log_q[ui];
                    }
                }
                None => {
                    let q_logits = system.conditional_prior_logits_batch(&batch.y).unwrap();
                    for (col, &ui) in u.iter().enumerate() {
                        let log_q = log_softmax_slice(&q_logits.column(col));
                        if log_q[ui] == f64::NEG_INFINITY {
                            zero_prob = true;
                        }
                        nats -= log_q[ui];
                    }
                }
            }

            let mut u_mat = Matrix::zeros(k, count);
            for (col, &ui) in u.iter().enumerate() {
                u_mat.set(ui, col, 1.0);
            }
            let x_hat = system.decode_batch(&u_mat, &batch.y);
            let sq_err: f64 = batch
                .x
                .iter()
                .zip(&x_hat)
                .map(|(x, xh)| (x - xh) * (x - xh))
                .sum();
            ChunkSums { nats, sq_err, hist, zero_prob }
        })
        .collect();

    let mut nats = 0.0;
    let mut sq_err = 0.0;
    let mut hist = vec![0u64; k];
    let mut zero_prob = false;
    for c in &chunks {
        nats += c.nats;
        sq_err += c.sq_err;
        zero_prob |= c.zero_prob;
        for (h, ch) in hist.iter_mut().zip(&c.hist) {
            *h += ch;
        }
    }
    let rate_bits = nats / n as f64 / std::f64::consts::LN_2;
    let mse = sq_err / n as f64;
    let point = RdPoint {
        rate_bits: if zero_prob { f64::INFINITY } else { rate_bits },
        distortion_db: 10.0 * mse.log10(),
        sample_count: n,
        lambda: system.config.lambda,
        seed,
        prior_kind: system.config.prior_kind,
        k,
        infinite_rate: zero_prob,
    };
    Ok((point, hist))
}

/// One maximal contiguous run of grid points sharing an index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MapRun {
    pub u: usize,
    pub start: usize,
    pub len: usize,
}

/// The deterministic encoder sampled on a uniform grid, with its run-length
/// decomposition.
#[derive(Debug, Clone)]
pub struct QuantizerMap {
    pub x_min: f64,
    pub x_max: f64,
    pub u: Vec<usize>,
    pub runs: Vec<MapRun>,
}

impl QuantizerMap {
    pub fn grid_size(&self) -> usize {
        self.u.len()
    }

    pub fn x_at(&self, idx: usize) -> f64 {
        let n = self.u.len();
        if n == 1 {
            return self.x_min;
        }
        self.x_min + (self.x_max - self.x_min) * idx as f64 / (n - 1) as f64
    }

    /// Indices that appear anywhere in the map, ascending.
    pub fn distinct_u(&self) -> Vec<usize> {
        let mut us: Vec<usize> = self.runs.iter().map(|r| r.u).collect();
        us.sort_unstable();
        us.dedup();
        us
    }

    /// The disjoint `x` intervals mapped to `u`, in grid order.
    pub fn intervals_of(&self, u: usize) -> Vec<(f64, f64)> {
        self.runs
            .iter()
            .filter(|r| r.u == u)
            .map(|r| (self.x_at(r.start), self.x_at(r.start + r.len - 1)))
            .collect()
    }
}

fn validate_grid(x_min: f64, x_max: f64, grid_size: usize) -> Result<()> {
    if grid_size < 2 {
        return Err(Error::Usage("quantizer map needs a grid of at least 2".into()));
    }
    if !(x_max > x_min) {
        return Err(Error::Usage("quantizer map needs x_max > x_min".into()));
    }
    Ok(())
}

fn map_from_indices(u: Vec<usize>, x_min: f64, x_max: f64) -> QuantizerMap {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=u.len() {
        if i == u.len() || u[i] != u[start] {
            runs.push(MapRun { u: u[start], start, len: i - start });
            start = i;
        }
    }
    QuantizerMap { x_min, x_max, u, runs }
}

/// Sample an arbitrary encoder function on a uniform grid.
pub fn quantizer_map_fn(
    encode: impl Fn(f64) -> usize,
    x_min: f64,
    x_max: f64,
    grid_size: usize,
) -> Result<QuantizerMap> {
    validate_grid(x_min, x_max, grid_size)?;
    let u: Vec<usize> = (0..grid_size)
        .map(|i| encode(x_min + (x_max - x_min) * i as f64 / (grid_size - 1) as f64))
        .collect();
    Ok(map_from_indices(u, x_min, x_max))
}

/// Sample the system's deterministic encoder on a uniform grid. Batched; the
/// result is identical to calling [`encode_deterministic`] per point.
pub fn quantizer_map(
    system: &WzSystem,
    x_min: f64,
    x_max: f64,
    grid_size: usize,
) -> Result<QuantizerMap> {
    validate_grid(x_min, x_max, grid_size)?;
    let xs: Vec<f64> = (0..grid_size)
        .map(|i| x_min + (x_max - x_min) * i as f64 / (grid_size - 1) as f64)
        .collect();
    let logits = system.encoder_logits_batch(&xs);
    let u: Vec<usize> = (0..grid_size).map(|c| argmax(&logits.column(c))).collect();
    Ok(map_from_indices(u, x_min, x_max))
}

/// Binning summary of a quantizer map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinningScore {
    /// How many indices own two or more disjoint intervals.
    pub discontiguous_bin_count: usize,
    /// Total intervals divided by distinct indices; 1.0 means a plain
    /// contiguous quantizer.
    pub reuse_factor: f64,
}

pub fn binning_score(map: &QuantizerMap) -> BinningScore {
    let distinct = map.distinct_u();
    let mut discontiguous = 0;
    for &u in &distinct {
        if map.runs.iter().filter(|r| r.u == u).count() >= 2 {
            discontiguous += 1;
        }
    }
    BinningScore {
        discontiguous_bin_count: discontiguous,
        reuse_factor: map.runs.len() as f64 / distinct.len() as f64,
    }
}

/// Least-squares line fit of the reconstruction against the side information
/// within one (index, interval) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub u: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; `NaN` when the fit is degenerate.
    pub r2: f64,
    pub n_samples: usize,
    /// True when the reconstruction is constant over the cell, leaving the
    /// fit undefined.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct LinearityReport {
    pub fits: Vec<LinearFit>,
    /// Human-readable notices for cells skipped due to thin support.
    pub skipped: Vec<String>,
}

/// Minimum samples an interval needs before it is fitted.
pub const LINEARITY_MIN_SAMPLES: usize = 10;

/// Regress reconstructions on side information per (index, interval), using
/// Monte Carlo draws from the joint source restricted to plausible `y`
/// (within three conditional standard deviations of the conditional mean).
pub fn decoder_linearity(
    system: &WzSystem,
    map: &QuantizerMap,
    source: &SourceModel,
    n: usize,
    seed: u64,
) -> LinearityReport {
    decoder_linearity_fn(
        |u, y| system.decode(&one_hot(system.k(), u), y),
        map,
        source,
        n,
        seed,
    )
}

/// Generic version of [`decoder_linearity`] taking the decode function
/// directly.
pub fn decoder_linearity_fn(
    decode: impl Fn(usize, f64) -> f64,
    map: &QuantizerMap,
    source: &SourceModel,
    n: usize,
    seed: u64,
) -> LinearityReport {
    let grid = map.grid_size();
    // run id per grid cell
    let mut run_of = vec![0usize; grid];
    for (ri, r) in map.runs.iter().enumerate() {
        for i in r.start..r.start + r.len {
            run_of[i] = ri;
        }
    }
    let step = (map.x_max - map.x_min) / (grid - 1) as f64;
    let cond_sd = source.cond_var_y_given_x().sqrt();

    let batch = sample_pairs(source, n, seed);
    let mut per_run: Vec<Vec<(f64, f64)>> = vec![Vec::new(); map.runs.len()];
    for (&x, &y) in batch.x.iter().zip(&batch.y) {
        if x < map.x_min || x > map.x_max {
            continue;
        }
        if (y - source.cond_mean_y_given_x(x)).abs() > 3.0 * cond_sd {
            continue;
        }
        let idx = (((x - map.x_min) / step).round() as usize).min(grid - 1);
        let run = run_of[idx];
        per_run[run].push((y, decode(map.runs[run].u, y)));
    }

    let mut fits = Vec::new();
    let mut skipped = Vec::new();
    for (ri, samples) in per_run.iter().enumerate() {
        let run = &map.runs[ri];
        let (x_lo, x_hi) = (map.x_at(run.start), map.x_at(run.start + run.len - 1));
        if samples.len() < LINEARITY_MIN_SAMPLES {
            skipped.push(format!(
                "interval [{x_lo:.4}, {x_hi:.4}] of u={} skipped: {} plausible samples",
                run.u,
                samples.len()
            ));
            continue;
        }
        let m = samples.len() as f64;
        let mean_y = samples.iter().map(|(y, _)| y).sum::<f64>() / m;
        let mean_v = samples.iter().map(|(_, v)| v).sum::<f64>() / m;
        let mut s_yy = 0.0;
        let mut s_yv = 0.0;
        let mut s_vv = 0.0;
        for &(y, v) in samples {
            s_yy += (y - mean_y) * (y - mean_y);
            s_yv += (y - mean_y) * (v - mean_v);
            s_vv += (v - mean_v) * (v - mean_v);
        }
        if s_vv < 1e-18 * m {
            fits.push(LinearFit {
                u: run.u,
                x_lo,
                x_hi,
                slope: 0.0,
                intercept: mean_v,
                r2: f64::NAN,
                n_samples: samples.len(),
                degenerate: true,
            });
            continue;
        }
        let slope = s_yv / s_yy;
        let intercept = mean_v - slope * mean_y;
        let ss_res = s_vv - slope * s_yv;
        fits.push(LinearFit {
            u: run.u,
            x_lo,
            x_hi,
            slope,
            intercept,
            r2: 1.0 - ss_res / s_vv,
            n_samples: samples.len(),
            degenerate: false,
        });
    }
    LinearityReport { fits, skipped }
}

/// Write the (x, u) map and the per-index decoder curves as two CSV files
/// under `dir`. Returns the two paths.
pub fn export_figure_data(
    system: &WzSystem,
    map: &QuantizerMap,
    dir: &Path,
    comment: &str,
) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let map_path = dir.join("map.csv");
    let curves_path = dir.join("decoder_curves.csv");

    let mut out = String::new();
    out.push_str(&format!("# {comment}\n"));
    out.push_str("x,u\n");
    for (i, &u) in map.u.iter().enumerate() {
        out.push_str(&format!("{},{}\n", fmt_g9(map.x_at(i)), u));
    }
    std::fs::write(&map_path, out)?;

    let sd_y = system.config.source.var_y().sqrt();
    let y_lo = -3.5 * sd_y;
    let y_hi = 3.5 * sd_y;
    let points = 257;
    let mut out = String::new();
    out.push_str(&format!("# {comment}\n"));
    out.push_str("u,y,x_hat\n");
    for u in map.distinct_u() {
        let hot = one_hot(system.k(), u);
        for i in 0..points {
            let y = y_lo + (y_hi - y_lo) * i as f64 / (points - 1) as f64;
            out.push_str(&format!("{},{},{}\n", u, fmt_g9(y), fmt_g9(system.decode(&hot, y))));
        }
    }
    std::fs::write(&curves_path, out)?;
    Ok((map_path, curves_path))
}

/// Parse a map.csv produced by [`export_figure_data`].
pub fn parse_map_csv(text: &str) -> Result<Vec<(f64, usize)>> {
    let mut out = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with("x,") || line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let x = parts
            .next()
            .and_then(|t| t.parse::<f64>().ok())
            .ok_or_else(|| Error::Corrupt(format!("bad map row {line:?}")))?;
        let u = parts
            .next()
            .and_then(|t| t.parse::<usize>().ok())
            .ok_or_else(|| Error::Corrupt(format!("bad map row {line:?}")))?;
        out.push((x, u));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::cross_entropy_bits;
    use crate::models::{SystemConfig, WzSystem};
    use crate::sources::CorrelationDirection;

    fn test_system(prior_kind: PriorKind, seed: u64) -> WzSystem {
        WzSystem::new(SystemConfig {
            k: 16,
            lambda: 10.0,
            prior_kind,
            hidden_units: 100,
            leaky_slope: 0.01,
            source: SourceModel::new(CorrelationDirection::XEqualsYPlusN, 1.0, 0.1).unwrap(),
            seed,
        })
        .unwrap()
    }

    #[test]
    fn encode_deterministic_matches_mode() {
        let sys = test_system(PriorKind::Marginal, 1);
        for x in [-2.0, -0.3, 0.0, 1.7] {
            assert_eq!(encode_deterministic(&sys, x), encode_deterministic(&sys, x));
            let head = CategoricalHead::new(sys.encoder_logits(x));
            assert_eq!(encode_deterministic(&sys, x), head.mode());
        }
    }

    #[test]
    fn untrained_uniform_prior_rate_is_log2_k() {
        let sys = test_system(PriorKind::Marginal, 2);
        let point = evaluate(&sys, &sys.config.source.clone(), 1 << 14, 7).unwrap();
        assert!((point.rate_bits - 4.0).abs() < 1e-12, "rate {}", point.rate_bits);
        assert!(!point.infinite_rate);
        assert_eq!(point.sample_count, 1 << 14);
    }

    #[test]
    fn identity_decoder_hits_noise_floor() {
        // Surgery: make the decoder output its y input exactly, so the
        // distortion is E (x - y)^2 = noise variance.
        let mut sys = test_system(PriorKind::Marginal, 3);
        let k = sys.k();
        let slope = sys.config.leaky_slope;
        let gain = 1.0 + slope;
        for pid in sys.store().ids().collect::<Vec<_>>() {
            if sys.store().name(pid).starts_with("decoder") {
                sys.store_mut().value_mut(pid).fill(0.0);
            }
        }
        let w0 = sys.decoder().weight_ids()[0];
        sys.store_mut().value_mut(w0).set(0, k, 1.0);
        sys.store_mut().value_mut(w0).set(1, k, -1.0);
        let w1 = sys.decoder().weight_ids()[1];
        sys.store_mut().value_mut(w1).set(0, 0, 1.0 / gain);
        sys.store_mut().value_mut(w1).set(0, 1, -1.0 / gain);
        sys.store_mut().value_mut(w1).set(1, 0, -1.0 / gain);
        sys.store_mut().value_mut(w1).set(1, 1, 1.0 / gain);
        let w2 = sys.decoder().weight_ids()[2];
        sys.store_mut().value_mut(w2).set(0, 0, 1.0 / gain);
        sys.store_mut().value_mut(w2).set(0, 1, -1.0 / gain);

        let hot: Vec<f64> = one_hot(k, 4);
        for y in [-1.3, 0.0, 0.8] {
            assert!((sys.decode(&hot, y) - y).abs() < 1e-12);
        }
        let point = evaluate(&sys, &sys.config.source.clone(), 1 << 20, 11).unwrap();
        assert!(
            (point.distortion_db - (-10.0)).abs() < 0.05,
            "distortion {}",
            point.distortion_db
        );
    }

    #[test]
    fn evaluate_rate_equals_histogram_cross_entropy() {
        let sys = test_system(PriorKind::Marginal, 5);
        let source = sys.config.source;
        let (point, hist) = evaluate_with_histogram(&sys, &source, 20_000, 13).unwrap();
        let n: u64 = hist.iter().sum();
        let empirical: Vec<f64> = hist.iter().map(|&c| c as f64 / n as f64).collect();
        let q: Vec<f64> = sys.prior_log_probs(None).unwrap().iter().map(|l| l.exp()).collect();
        let ce = cross_entropy_bits(&empirical, &q);
        assert!((point.rate_bits - ce).abs() < 1e-9);
    }

    #[test]
    fn evaluate_is_thread_count_independent() {
        let sys = test_system(PriorKind::Conditional, 6);
        let source = sys.config.source;
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let quad = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = single.install(|| evaluate(&sys, &source, 50_000, 21).unwrap());
        let b = quad.install(|| evaluate(&sys, &source, 50_000, 21).unwrap());
        assert_eq!(a.rate_bits.to_bits(), b.rate_bits.to_bits());
        assert_eq!(a.distortion_db.to_bits(), b.distortion_db.to_bits());
    }

    #[test]
    fn conditioning_cannot_increase_rate_brute_force() {
        // Bayes-optimal per-level q(u|y) prices u at the conditional entropy,
        // never above the marginal entropy. 64 y levels, K = 8.
        let cfg = SystemConfig {
            k: 8,
            lambda: 10.0,
            prior_kind: PriorKind::Marginal,
            hidden_units: 16,
            leaky_slope: 0.01,
            source: SourceModel::new(CorrelationDirection::XEqualsYPlusN, 1.0, 0.1).unwrap(),
            seed: 77,
        };
        let sys = WzSystem::new(cfg).unwrap();
        let source = sys.config.source;
        let batch = sample_pairs(&source, 200_000, 3);
        let levels = 64usize;
        let sd_y = source.var_y().sqrt();
        let mut joint = vec![vec![0u64; 8]; levels];
        let mut marginal = vec![0u64; 8];
        for (&x, &y) in batch.x.iter().zip(&batch.y) {
            let level = (((y / (4.0 * sd_y) + 1.0) / 2.0 * levels as f64) as isize)
                .clamp(0, levels as isize - 1) as usize;
            let u = encode_deterministic(&sys, x);
            joint[level][u] += 1;
            marginal[u] += 1;
        }
        let n = batch.len() as f64;
        let p_marg: Vec<f64> = marginal.iter().map(|&c| c as f64 / n).collect();
        let h_marg = cross_entropy_bits(&p_marg, &p_marg);
        let mut h_cond = 0.0;
        for row in &joint {
            let total: u64 = row.iter().sum();
            if total == 0 {
                continue;
            }
            let p: Vec<f64> = row.iter().map(|&c| c as f64 / total as f64).collect();
            h_cond += (total as f64 / n) * cross_entropy_bits(&p, &p);
        }
        assert!(
            h_cond <= h_marg + 1e-12,
            "conditional {h_cond} vs marginal {h_marg}"
        );
    }

    #[test]
    fn synthetic_periodic_map_has_two_intervals_per_index() {
        // u(x) = floor(4x) mod 4 on [0, 2): every index owns two intervals.
        let map = quantizer_map_fn(
            |x| ((4.0 * x).floor() as usize) % 4,
            0.0,
            1.9999,
            4096,
        )
        .unwrap();
        let score = binning_score(&map);
        assert_eq!(score.discontiguous_bin_count, 4);
        assert!((score.reuse_factor - 2.0).abs() < 1e-12);
        for u in 0..4 {
            assert_eq!(map.intervals_of(u).len(), 2);
        }
        // partition property: runs cover the grid exactly
        let total: usize = map.runs.iter().map(|r| r.len).sum();
        assert_eq!(total, map.grid_size());
    }

    #[test]
    fn monotone_staircase_has_no_binning() {
        let map = quantizer_map_fn(|x| (x.floor() as isize + 3) as usize, -3.0, 2.999, 512).unwrap();
        let score = binning_score(&map);
        assert_eq!(score.discontiguous_bin_count, 0);
        assert!((score.reuse_factor - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_refinement_moves_boundaries_less_than_one_coarse_cell() {
        let enc = |x: f64| ((4.0 * x).floor() as usize) % 4;
        let coarse = quantizer_map_fn(enc, 0.0, 1.9999, 256).unwrap();
        let fine = quantizer_map_fn(enc, 0.0, 1.9999, 512).unwrap();
        let cell = (coarse.x_max - coarse.x_min) / 255.0;
        for u in 0..4 {
            let a = coarse.intervals_of(u);
            let b = fine.intervals_of(u);
            assert_eq!(a.len(), b.len());
            for ((lo_a, hi_a), (lo_b, hi_b)) in a.iter().zip(&b) {
                assert!((lo_a - lo_b).abs() < cell);
                assert!((hi_a - hi_b).abs() < cell);
            }
        }
    }

    #[test]
    fn quantizer_map_validates_inputs() {
        let sys = test_system(PriorKind::Marginal, 8);
        assert!(quantizer_map(&sys, -1.0, 1.0, 1).is_err());
        assert!(quantizer_map(&sys, 1.0, -1.0, 64).is_err());
        let map = quantizer_map(&sys, -3.5, 3.5, 128).unwrap();
        assert_eq!(map.u[0], encode_deterministic(&sys, -3.5));
        assert_eq!(map.u[127], encode_deterministic(&sys, 3.5));
    }

    #[test]
    fn synthetic_linear_decoder_is_recovered() {
        let source = SourceModel::new(CorrelationDirection::XEqualsYPlusN, 1.0, 0.1).unwrap();
        let map = quantizer_map_fn(|x| (x.floor() as isize + 4) as usize, -3.5, 3.5, 512).unwrap();
        let report = decoder_linearity_fn(
            |u, y| 0.9 * y + 0.1 * (u as f64 - 4.0),
            &map,
            &source,
            50_000,
            5,
        );
        assert!(!report.fits.is_empty());
        for fit in &report.fits {
            assert!(!fit.degenerate);
            assert!((fit.slope - 0.9).abs() < 1e-6, "slope {}", fit.slope);
            assert!((fit.r2 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_decoder_reports_degenerate() {
        let source = SourceModel::new(CorrelationDirection::XEqualsYPlusN, 1.0, 0.1).unwrap();
        let map = quantizer_map_fn(|x| if x < 0.0 { 0 } else { 1 }, -3.0, 3.0, 64).unwrap();
        let report = decoder_linearity_fn(|_, _| 2.5, &map, &source, 10_000, 6);
        assert!(!report.fits.is_empty());
        for fit in &report.fits {
            assert!(fit.degenerate);
            assert_eq!(fit.slope, 0.0);
            assert!(fit.r2.is_nan());
        }
    }

    #[test]
    fn thin_intervals_are_skipped_with_notice() {
        let source = SourceModel::new(CorrelationDirection::XEqualsYPlusN, 1.0, 0.1).unwrap();
        // One sliver interval far in the tail gets almost no samples.
        let map = quantizer_map_fn(
            |x| if x > 3.4999 { 1 } else { 0 },
            -3.5,
            3.5,
            4096,
        )
        .unwrap();
        let report = decoder_linearity_fn(|u, y| u as f64 + 0.5 * y, &map, &source, 2_000, 7);
        assert!(!report.skipped.is_empty());
    }

    #[test]
    fn export_roundtrip_and_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let sys = test_system(PriorKind::Marginal, 9);
        let map = quantizer_map(&sys, -2.0, 2.0, 64).unwrap();
        let (map_path, curves_path) =
            export_figure_data(&sys, &map, dir.path(), "test export").unwrap();
        let text = std::fs::read_to_string(&map_path).unwrap();
        assert!(text.starts_with("# test export\nx,u\n"));
        let parsed = parse_map_csv(&text).unwrap();
        assert_eq!(parsed.len(), map.grid_size());
        for (i, (x, u)) in parsed.iter().enumerate() {
            assert!((x - map.x_at(i)).abs() < 1e-7);
            assert_eq!(*u, map.u[i]);
        }
        let curves = std::fs::read_to_string(&curves_path).unwrap();
        let blocks: std::collections::BTreeSet<&str> = curves
            .lines()
            .skip(2)
            .map(|l| l.split(',').next().unwrap())
            .collect();
        assert_eq!(blocks.len(), map.distinct_u().len());
    }
}
