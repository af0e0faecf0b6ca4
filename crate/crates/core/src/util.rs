//! Small shared helpers: seed derivation, hashing, numeric kernels.

/// Derive an independent stream seed from a base seed and a stream index.
///
/// SplitMix64 finalizer over the combined words; cheap, well-mixed, and
/// stable across platforms so derived RNG streams are reproducible.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a seed from a base seed and a label (component name).
pub fn derive_seed_labeled(base: u64, label: &str) -> u64 {
    derive_seed(base, fnv1a64(label.as_bytes()))
}

/// FNV-1a 64-bit hash. Used for config hashes and frequency-table hashes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// log(sum(exp(x))) with max subtraction.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Numerically stable log-softmax of a slice.
pub fn log_softmax_slice(xs: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(xs);
    xs.iter().map(|&x| x - lse).collect()
}

/// ln(n!) computed by direct summation; exact enough for the n used here.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// Format a float with 9 significant digits for CSV output.
pub fn fmt_g9(v: f64) -> String {
    if v == 0.0 {
        return "0.0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    format!("{v:.8e}")
}

/// Argmax over a slice; ties break toward the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
