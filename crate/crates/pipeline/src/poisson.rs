//! Poisson sampling on seeded streams.
//!
//! Small means use multiplicative inversion; large means use Hormann's
//! transformed-rejection method (PTRS). Both consume a variable number of
//! uniforms, which is safe because every (pixel, bin) site owns an
//! independent stream.

use spadsr_core::SplitMix64;

const INVERSION_CUTOFF: f64 = 10.0;

/// Draw one Poisson variate with the given mean from `rng`.
pub fn sample_poisson(lambda: f64, rng: &mut SplitMix64) -> u32 {
    debug_assert!(lambda >= 0.0 && lambda.is_finite());
    if lambda <= 0.0 {
        0
    } else if lambda < INVERSION_CUTOFF {
        sample_inversion(lambda, rng)
    } else {
        sample_ptrs(lambda, rng)
    }
}

fn sample_inversion(lambda: f64, rng: &mut SplitMix64) -> u32 {
    let limit = (-lambda).exp();
    let mut k = 0u32;
    let mut p = 1.0;
    loop {
        p *= rng.next_f64();
        if p <= limit {
            return k;
        }
        k += 1;
    }
}

// Hormann 1993, "The transformed rejection method for generating Poisson
// random variables", algorithm PTRS. Valid for lambda >= 10.
fn sample_ptrs(lambda: f64, rng: &mut SplitMix64) -> u32 {
    let smu = lambda.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    let ln_lambda = lambda.ln();
    loop {
        let u = rng.next_f64() - 0.5;
        let v = rng.next_f64();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u32;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if (v * inv_alpha / (a / (us * us) + b)).ln() <= k * ln_lambda - lambda - ln_gamma(k + 1.0) {
            return k as u32;
        }
    }
}

// Lanczos approximation (g = 7, n = 9), accurate to ~1e-13 for x > 0.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    debug_assert!(x > 0.0);
    let x = x - 1.0;
    let mut acc = 0.999_999_999_999_809_93;
    for (i, &c) in COEFFS.iter().enumerate() {
        acc += c / (x + i as f64 + 1.0);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..15u32 {
            if n > 1 {
                fact *= (n - 1) as f64;
            }
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn zero_mean_yields_zero() {
        let mut rng = SplitMix64::new(1);
        assert_eq!(sample_poisson(0.0, &mut rng), 0);
    }

    // CLT bound on the empirical mean and variance over 1e5 draws, for
    // means on both sides of the inversion/PTRS cutoff.
    #[test]
    fn empirical_moments_match() {
        for &lambda in &[0.3f64, 3.0, 9.9, 10.1, 37.0, 310.0] {
            let n = 100_000u64;
            let mut sum = 0.0f64;
            let mut sumsq = 0.0f64;
            for i in 0..n {
                let mut rng = SplitMix64::derive(77, &[lambda.to_bits(), i]);
                let x = sample_poisson(lambda, &mut rng) as f64;
                sum += x;
                sumsq += x * x;
            }
            let mean = sum / n as f64;
            let var = sumsq / n as f64 - mean * mean;
            let mean_tol = 5.0 * (lambda / n as f64).sqrt();
            assert!(
                (mean - lambda).abs() < mean_tol,
                "lambda {lambda}: mean {mean}"
            );
            // Var(sample var) ~ 2 lambda^2 / n for Poisson-ish tails.
            let var_tol = 5.0 * ((2.0 * lambda * lambda + lambda) / n as f64).sqrt();
            assert!(
                (var - lambda).abs() < var_tol.max(0.05),
                "lambda {lambda}: var {var}"
            );
        }
    }
}
