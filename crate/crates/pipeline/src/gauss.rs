//! Discretized Gaussian impulse-response helpers.

/// Gaussian weights sampled at bin centres around `center` (1-indexed bin
/// coordinates), truncated at `±ceil(4 sigma)` bins and clipped to
/// `[1, t_bins]`, then renormalized to unit sum.
///
/// The unit sum makes the total expected signal of a pulse independent of
/// where it lands, including at the edges of the observation window.
/// Returns `(bin, weight)` pairs with 1-indexed bins, ascending.
pub fn irf_weights(center: f64, sigma: f64, t_bins: usize) -> Vec<(usize, f64)> {
    debug_assert!(sigma > 0.0 && t_bins > 0);
    let reach = (4.0 * sigma).ceil() as i64;
    let lo = ((center - reach as f64).ceil() as i64).max(1);
    let hi = ((center + reach as f64).floor() as i64).min(t_bins as i64);
    let inv_two_var = 1.0 / (2.0 * sigma * sigma);
    let mut weights = Vec::with_capacity((hi - lo + 1).max(0) as usize);
    let mut total = 0.0;
    for t in lo..=hi {
        let d = t as f64 - center;
        let w = (-d * d * inv_two_var).exp();
        total += w;
        weights.push((t as usize, w));
    }
    if total > 0.0 {
        for (_, w) in &mut weights {
            *w /= total;
        }
    }
    weights
}

/// Matched-filter kernel: unit-sum Gaussian taps at integer offsets
/// `-m..=m` with `m = max(1, ceil(3 sigma))`, so at least 3 taps.
pub fn matched_kernel(sigma: f64) -> Vec<f64> {
    debug_assert!(sigma > 0.0);
    let m = ((3.0 * sigma).ceil() as i64).max(1);
    let inv_two_var = 1.0 / (2.0 * sigma * sigma);
    let mut taps: Vec<f64> = (-m..=m)
        .map(|k| (-(k * k) as f64 * inv_two_var).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= total;
    }
    taps
}
