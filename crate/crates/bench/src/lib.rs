//! Shared fixtures for the benchmark targets.

use fedcoal_core::gains::GainReport;
use fedcoal_core::hedonic::MutualGainVector;

/// Deterministic synthetic gain table with mixed-sign marginal gains.
pub fn synthetic_report(n: usize) -> GainReport {
    let pi: Vec<f64> = (0..n).map(|i| 0.25 + 0.1 * i as f64).collect();
    let mut u = vec![0.0; 1 << n];
    for (i, &p) in pi.iter().enumerate() {
        u[1 << i] = p;
    }
    for mask in 1u32..(1 << n) {
        let k = mask.count_ones();
        if k < 2 {
            continue;
        }
        let sum_pi: f64 = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| pi[i])
            .sum();
        // Pseudo-random but reproducible spread around zero.
        let wiggle = ((mask.wrapping_mul(2_654_435_761) >> 7) % 400) as f64 / 100.0 - 2.0;
        u[mask as usize] = sum_pi + wiggle + 0.1 * k as f64;
    }
    GainReport::from_raw(n, u, pi).expect("valid synthetic report")
}

/// Deterministic mutual gains with both signs.
pub fn synthetic_gains(n: usize) -> MutualGainVector {
    MutualGainVector::from_fn(n, |i, j| {
        let h = (i * 31 + j * 17) % 7;
        h as f64 / 2.0 - 1.5
    })
    .expect("valid mutual gains")
}
