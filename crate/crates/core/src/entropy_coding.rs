//! Bit-exact static-model range coding for the marginal scheme, so measured
//! bitstream lengths can be compared against the cross-entropy rate.
//!
//! The coder is a 32-bit-register byte-wise range coder with explicit carry
//! propagation. Interval boundaries are computed by exact 64-bit
//! multiply-shift against a frequency table whose total is exactly 2^16, so
//! the per-symbol truncation loss is far below a hundredth of a bit and the
//! whole-stream overhead stays within the documented 32-bit budget.

use crate::error::{Error, Result};
use crate::evaluation::encode_deterministic;
use crate::models::{PriorKind, WzSystem};
use crate::util::fnv1a64;

/// Frequency tables always sum to exactly this.
pub const MODEL_TOTAL: u32 = 1 << 16;

/// Renormalization threshold: emit a byte whenever `range` drops below it.
const RANGE_TOP: u32 = 1 << 24;

/// Quantized cumulative-frequency model over `K` symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingModel {
    freq: Vec<u32>,
    /// `cum[s] = sum of freq[..s]`; `cum[K] = MODEL_TOTAL`.
    cum: Vec<u32>,
}

impl CodingModel {
    pub fn k(&self) -> usize {
        self.freq.len()
    }

    pub fn freq(&self) -> &[u32] {
        &self.freq
    }

    /// 64-bit FNV-1a over the frequency table (little-endian u32 entries).
    pub fn hash(&self) -> u64 {
        let mut bytes = Vec::with_capacity(self.freq.len() * 4);
        for f in &self.freq {
            bytes.extend_from_slice(&f.to_le_bytes());
        }
        fnv1a64(&bytes)
    }

    /// Probability the quantized model assigns to `s`.
    pub fn prob(&self, s: usize) -> f64 {
        self.freq[s] as f64 / MODEL_TOTAL as f64
    }

    /// Ideal codelength of a symbol sequence under the quantized model.
    pub fn ideal_bits(&self, symbols: &[usize]) -> f64 {
        symbols.iter().map(|&s| -self.prob(s).log2()).sum()
    }

    pub fn from_freqs(freq: Vec<u32>) -> Result<Self> {
        if freq.is_empty() || freq.len() > u16::MAX as usize {
            return Err(Error::Config(format!(
                "coding model needs 1..=65535 symbols, got {}",
                freq.len()
            )));
        }
        let mut cum = Vec::with_capacity(freq.len() + 1);
        let mut acc: u64 = 0;
        cum.push(0);
        for &f in &freq {
            if f == 0 {
                return Err(Error::Config("zero frequency in coding model".into()));
            }
            acc += f as u64;
            cum.push(acc as u32);
        }
        if acc != MODEL_TOTAL as u64 {
            return Err(Error::Config(format!(
                "coding model total must be {MODEL_TOTAL}, got {acc}"
            )));
        }
        Ok(CodingModel { freq, cum })
    }
}

/// Quantize a probability vector to 16-bit frequencies with every symbol
/// kept codable (count >= 1). Uses largest-remainder rounding, which
/// minimizes the L1 distortion of the quantized distribution.
pub fn build_model(probs: &[f64]) -> Result<CodingModel> {
    if probs.is_empty() {
        return Err(Error::Config("empty probability vector".into()));
    }
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|&p| !(p > 0.0)) || (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Config(
            "build_model needs strictly positive probabilities summing to 1".into(),
        ));
    }
    let t = MODEL_TOTAL as f64;
    let k = probs.len();
    let mut freq: Vec<u32> = Vec::with_capacity(k);
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(k);
    let mut total: i64 = 0;
    for (i, &p) in probs.iter().enumerate() {
        let exact = p / sum * t;
        let base = (exact.floor() as u32).max(1);
        remainders.push((i, exact - exact.floor()));
        freq.push(base);
        total += base as i64;
    }
    let mut deficit = MODEL_TOTAL as i64 - total;
    if deficit > 0 {
        remainders.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut idx = 0;
        while deficit > 0 {
            freq[remainders[idx % k].0] += 1;
            idx += 1;
            deficit -= 1;
        }
    } else {
        while deficit < 0 {
            // shave the most over-allocated entry that can spare a count
            let victim = (0..k)
                .filter(|&i| freq[i] > 1)
                .max_by(|&a, &b| {
                    let sa = freq[a] as f64 - probs[a] / sum * t;
                    let sb = freq[b] as f64 - probs[b] / sum * t;
                    sa.total_cmp(&sb)
                })
                .expect("total exceeds symbol count, some entry is above 1");
            freq[victim] -= 1;
            deficit += 1;
        }
    }
    CodingModel::from_freqs(freq)
}

/// A coded payload. The coder is byte-aligned, so `bit_len` is always
/// `8 * bytes.len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitstream {
    pub bytes: Vec<u8>,
    pub bit_len: usize,
}

struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    ff_run: u64,
    first: bool,
    out: Vec<u8>,
}

impl RangeEncoder {
    fn new() -> Self {
        RangeEncoder { low: 0, range: u32::MAX, cache: 0, ff_run: 0, first: true, out: Vec::new() }
    }

    #[inline]
    fn bound(&self, cum: u32) -> u32 {
        ((self.range as u64 * cum as u64) >> 16) as u32
    }

    fn encode(&mut self, model: &CodingModel, s: usize) {
        let lo = self.bound(model.cum[s]);
        let hi = self.bound(model.cum[s + 1]);
        self.low += lo as u64;
        self.range = hi - lo;
        while self.range < RANGE_TOP {
            self.shift_low();
            self.range <<= 8;
        }
    }

    fn shift_low(&mut self) {
        let carry = (self.low >> 32) as u8;
        if (self.low as u32) < 0xFF00_0000 || carry == 1 {
            if !self.first {
                self.out.push(self.cache.wrapping_add(carry));
            }
            for _ in 0..self.ff_run {
                self.out.push(0xFFu8.wrapping_add(carry));
            }
            self.ff_run = 0;
            self.cache = (self.low >> 24) as u8;
            self.first = false;
        } else {
            self.ff_run += 1;
        }
        self.low = (self.low << 8) & 0xFFFF_FFFF;
    }

    fn finish(mut self) -> Vec<u8> {
        // Pin the stream to the smallest multiple of 2^24 inside the final
        // interval: one more settled byte, the remaining 24 bits are zero
        // and the decoder pads them itself.
        let v = (self.low + (RANGE_TOP as u64 - 1)) & !(RANGE_TOP as u64 - 1);
        self.low = v;
        self.shift_low();
        if !self.first {
            self.out.push(self.cache);
        }
        for _ in 0..self.ff_run {
            self.out.push(0xFF);
        }
        self.out
    }
}

struct RangeDecoder<'a> {
    bytes: &'a [u8],
    pos: usize,
    code: u32,
    range: u32,
}

impl<'a> RangeDecoder<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        let mut d = RangeDecoder { bytes, pos: 0, code: 0, range: u32::MAX };
        for _ in 0..4 {
            d.code = (d.code << 8) | d.next_byte() as u32;
        }
        d
    }

    #[inline]
    fn next_byte(&mut self) -> u8 {
        let b = self.bytes.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b
    }

    #[inline]
    fn bound(&self, cum: u32) -> u32 {
        ((self.range as u64 * cum as u64) >> 16) as u32
    }

    fn decode(&mut self, model: &CodingModel) -> usize {
        // largest s with bound(cum[s]) <= code
        let mut lo = 0usize;
        let mut hi = model.k();
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.bound(model.cum[mid]) <= self.code {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = lo;
        let base = self.bound(model.cum[s]);
        let width = self.bound(model.cum[s + 1]) - base;
        self.code -= base;
        self.range = width;
        while self.range < RANGE_TOP {
            self.code = (self.code << 8) | self.next_byte() as u32;
            self.range <<= 8;
        }
        s
    }
}

/// Encode a symbol sequence under a static model.
pub fn encode(model: &CodingModel, symbols: &[usize]) -> Result<Bitstream> {
    let mut enc = RangeEncoder::new();
    for &s in symbols {
        if s >= model.k() {
            return Err(Error::Usage(format!("symbol {s} out of range for K={}", model.k())));
        }
        enc.encode(model, s);
    }
    let bytes = enc.finish();
    let bit_len = bytes.len() * 8;
    Ok(Bitstream { bytes, bit_len })
}

/// Decode exactly `n` symbols. Integrity is the caller's contract: a wrong
/// model or count yields garbage, not an error.
pub fn decode(model: &CodingModel, bitstream: &Bitstream, n: usize) -> Vec<usize> {
    let mut dec = RangeDecoder::new(&bitstream.bytes);
    (0..n).map(|_| dec.decode(model)).collect()
}

// ---------------------------------------------------------------------------
// Compressed-file pipeline for the marginal scheme.
// ---------------------------------------------------------------------------

pub const FILE_MAGIC: &[u8; 4] = b"WZB1";
pub const FILE_VERSION: u8 = 1;

/// Build the coding model of a marginal-prior system from its learned `q(u)`.
pub fn model_from_system(system: &WzSystem) -> Result<CodingModel> {
    if system.config.prior_kind != PriorKind::Marginal {
        return Err(Error::Usage(
            "entropy coding applies to the marginal scheme; conditional rates are ideal-SW only"
                .into(),
        ));
    }
    let probs: Vec<f64> = system
        .prior_log_probs(None)?
        .iter()
        .map(|l| l.exp())
        .collect();
    build_model(&probs)
}

/// Compress a file of source samples: header plus range-coded bin indices.
///
/// Layout: magic `WZB1`, version u8, `K` u16 LE, model-hash u64 LE,
/// symbol-count u64 LE, `K` u16 LE frequencies (0 encodes 65536, which only
/// a single-symbol model produces), payload bytes.
pub fn codec_encode(system: &WzSystem, xs: &[f64]) -> Result<Vec<u8>> {
    let model = model_from_system(system)?;
    let symbols: Vec<usize> = xs.iter().map(|&x| encode_deterministic(system, x)).collect();
    let payload = encode(&model, &symbols)?;
    let mut out = Vec::with_capacity(payload.bytes.len() + 32);
    out.extend_from_slice(FILE_MAGIC);
    out.push(FILE_VERSION);
    out.extend_from_slice(&(model.k() as u16).to_le_bytes());
    out.extend_from_slice(&model.hash().to_le_bytes());
    out.extend_from_slice(&(symbols.len() as u64).to_le_bytes());
    for &f in model.freq() {
        let stored: u16 = if f == MODEL_TOTAL { 0 } else { f as u16 };
        out.extend_from_slice(&stored.to_le_bytes());
    }
    out.extend_from_slice(&payload.bytes);
    Ok(out)
}

/// Decompress a file produced by [`codec_encode`], reconstructing with the
/// supplied side-information samples. Returns the decoded bin indices and
/// the reconstructions.
pub fn codec_decode(system: &WzSystem, file: &[u8], ys: &[f64]) -> Result<(Vec<usize>, Vec<f64>)> {
    let model = model_from_system(system)?;
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        if *pos + n > file.len() {
            return Err(Error::Corrupt("truncated compressed file".into()));
        }
        let s = &file[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    if take(&mut pos, 4)? != FILE_MAGIC {
        return Err(Error::Corrupt("bad compressed-file magic".into()));
    }
    let version = take(&mut pos, 1)?[0];
    if version != FILE_VERSION {
        return Err(Error::Corrupt(format!("unsupported compressed-file version {version}")));
    }
    let k = u16::from_le_bytes(take(&mut pos, 2)?.try_into().unwrap()) as usize;
    if k != model.k() {
        return Err(Error::Corrupt(format!(
            "compressed file has K={k}, checkpoint model has K={}",
            model.k()
        )));
    }
    let hash = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    if hash != model.hash() {
        return Err(Error::Corrupt(
            "frequency-table hash mismatch: file was coded under a different model".into(),
        ));
    }
    let count = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
    let mut freqs = Vec::with_capacity(k);
    for _ in 0..k {
        let stored = u16::from_le_bytes(take(&mut pos, 2)?.try_into().unwrap());
        freqs.push(if stored == 0 { MODEL_TOTAL } else { stored as u32 });
    }
    if freqs != model.freq() {
        return Err(Error::Corrupt("frequency table mismatch".into()));
    }
    if ys.len() != count {
        return Err(Error::Usage(format!(
            "side-information length {} does not match symbol count {count}",
            ys.len()
        )));
    }
    let payload = Bitstream { bytes: file[pos..].to_vec(), bit_len: (file.len() - pos) * 8 };
    let symbols = decode(&model, &payload, count);
    let k_sys = system.k();
    let mut x_hat = Vec::with_capacity(count);
    for (&u, &y) in symbols.iter().zip(ys) {
        let mut hot = vec![0.0; k_sys];
        hot[u] = 1.0;
        x_hat.push(system.decode(&hot, y));
    }
    Ok((symbols, x_hat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_probs(rng: &mut ChaCha8Rng, k: usize, floor: f64) -> Vec<f64> {
        let mut v: Vec<f64> = (0..k).map(|_| rng.random_range(floor..1.0)).collect();
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|p| *p /= s);
        v
    }

    fn tv_distance(p: &[f64], model: &CodingModel) -> f64 {
        p.iter()
            .zip(model.freq())
            .map(|(&pi, &f)| (pi - f as f64 / MODEL_TOTAL as f64).abs())
            .sum::<f64>()
            / 2.0
    }

    fn draw_symbols(rng: &mut ChaCha8Rng, probs: &[f64], n: usize) -> Vec<usize> {
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in probs {
            acc += p;
            cdf.push(acc);
        }
        (0..n)
            .map(|_| {
                let r: f64 = rng.random();
                cdf.iter().position(|&c| r < c).unwrap_or(probs.len() - 1)
            })
            .collect()
    }

    #[test]
    fn uniform_four_gets_equal_frequencies() {
        let m = build_model(&[0.25; 4]).unwrap();
        assert_eq!(m.freq(), &[16384; 4]);
    }

    #[test]
    fn rare_symbol_keeps_a_count() {
        let m = build_model(&[0.999, 0.001]).unwrap();
        assert!(m.freq()[1] >= 1);
        assert_eq!(m.freq().iter().sum::<u32>(), MODEL_TOTAL);
        let m = build_model(&[0.9999999, 0.0000001]).unwrap();
        assert_eq!(m.freq()[1], 1);
    }

    #[test]
    fn build_model_rejects_bad_input() {
        assert!(build_model(&[]).is_err());
        assert!(build_model(&[0.5, 0.0, 0.5]).is_err());
        assert!(build_model(&[0.5, 0.4]).is_err());
    }

    #[test]
    fn quantization_tv_distance_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        // Small alphabets meet the 2^-15 budget outright.
        for _ in 0..1000 {
            let k = rng.random_range(2..=8usize);
            let p = random_probs(&mut rng, k, 0.005);
            let m = build_model(&p).unwrap();
            assert!(tv_distance(&p, &m) <= 1.0 / 32768.0, "k={k}");
        }
        // Larger alphabets scale as K / (4 * total).
        for _ in 0..200 {
            let k = rng.random_range(9..=64usize);
            let p = random_probs(&mut rng, k, 1e-6);
            let m = build_model(&p).unwrap();
            let bound = k as f64 / (2.0 * MODEL_TOTAL as f64);
            assert!(tv_distance(&p, &m) <= bound, "k={k}");
        }
    }

    #[test]
    fn empty_sequence_roundtrips() {
        let m = build_model(&[0.5, 0.5]).unwrap();
        let bs = encode(&m, &[]).unwrap();
        assert!(bs.bytes.len() <= 4);
        assert_eq!(decode(&m, &bs, 0), Vec::<usize>::new());
    }

    #[test]
    fn single_symbol_alphabet_costs_nothing_per_symbol() {
        let m = CodingModel::from_freqs(vec![MODEL_TOTAL]).unwrap();
        let bs = encode(&m, &vec![0; 10_000]).unwrap();
        assert!(bs.bytes.len() <= 4, "got {} bytes", bs.bytes.len());
        assert_eq!(decode(&m, &bs, 10_000), vec![0; 10_000]);
    }

    #[test]
    fn uniform_four_ten_thousand_symbols_is_two_bits_each() {
        let m = build_model(&[0.25; 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let symbols = draw_symbols(&mut rng, &[0.25; 4], 10_000);
        let bs = encode(&m, &symbols).unwrap();
        assert!(bs.bit_len >= 20_000, "bit_len {}", bs.bit_len);
        assert!(bs.bit_len <= 20_064, "bit_len {}", bs.bit_len);
        assert_eq!(decode(&m, &bs, symbols.len()), symbols);
    }

    #[test]
    fn codelength_stays_within_32_bit_overhead() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for trial in 0..60 {
            let k = rng.random_range(2..=32usize);
            let skew = rng.random_range(0.0..4.0f64);
            let mut p: Vec<f64> = (0..k)
                .map(|i| ((-(i as f64) * skew / k as f64).exp()) * rng.random_range(0.2..1.0))
                .collect();
            let s: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= s);
            let m = build_model(&p).unwrap();
            let q: Vec<f64> = m.freq().iter().map(|&f| f as f64 / MODEL_TOTAL as f64).collect();
            let n = if trial == 0 { 100_000 } else { rng.random_range(1..5000) };
            let symbols = draw_symbols(&mut rng, &q, n);
            let bs = encode(&m, &symbols).unwrap();
            let ideal = m.ideal_bits(&symbols);
            let overhead = bs.bit_len as f64 - ideal;
            assert!(
                (0.0..=32.0).contains(&overhead),
                "trial {trial}: overhead {overhead} (n={n}, k={k})"
            );
            assert_eq!(decode(&m, &bs, n), symbols, "trial {trial}");
        }
    }

    #[test]
    fn hundred_thousand_symbol_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let p = random_probs(&mut rng, 16, 1e-4);
        let m = build_model(&p).unwrap();
        let symbols = draw_symbols(&mut rng, &p, 100_000);
        let bs = encode(&m, &symbols).unwrap();
        assert_eq!(decode(&m, &bs, symbols.len()), symbols);
    }

    #[test]
    fn out_of_range_symbol_is_rejected() {
        let m = build_model(&[0.5, 0.5]).unwrap();
        assert!(matches!(encode(&m, &[0, 2]), Err(Error::Usage(_))));
    }

    #[test]
    fn golden_bitstream_is_stable() {
        // Frozen bytes: any change to the coder that alters the wire format
        // must be deliberate and bump the file version.
        let m = build_model(&[0.5, 0.25, 0.125, 0.125]).unwrap();
        assert_eq!(m.freq(), &[32768, 16384, 8192, 8192]);
        let symbols: Vec<usize> = (0..64).map(|i| (i * 7 + i / 5) % 4).collect();
        let bs = encode(&m, &symbols).unwrap();
        let hex: String = bs.bytes.iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(hex, "7d1f47d0f47d1f47d1f47d1f47d1f47d00");
        assert_eq!(decode(&m, &bs, symbols.len()), symbols);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn roundtrip_random_models_and_sequences(seed in 0u64..10_000, k in 1usize..16, n in 0usize..2000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_probs(&mut rng, k, 1e-5);
            let m = build_model(&p).unwrap();
            let symbols = draw_symbols(&mut rng, &p, n);
            let bs = encode(&m, &symbols).unwrap();
            prop_assert_eq!(decode(&m, &bs, n), symbols);
        }
    }
}
