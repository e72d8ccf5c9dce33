//! WebAssembly bindings behind the interactive page in `www/`.
//!
//! Each exported function has a plain Rust counterpart returning
//! `Result<_, String>` so it can be tested natively; the exports only convert
//! errors into JavaScript exceptions.

use wasm_bindgen::prelude::*;

use straggler::analytics::{coverage_probability, expected_time_balanced, expected_time_cyclic};
use straggler::cli::log_spaced;
use straggler::model::SystemParams;
use straggler::policies::PolicySpec;
use straggler::sim::{monte_carlo, SimConfig};

/// Largest worker count the page offers; keeps the exact arithmetic instant.
pub const MAX_WORKERS: usize = 400;

fn check_workers(n_workers: usize) -> Result<(), String> {
    if n_workers == 0 || n_workers > MAX_WORKERS {
        return Err(format!("N must be between 1 and {MAX_WORKERS}"));
    }
    Ok(())
}

/// Coverage probability for `B = 1..=b_max` at `n_workers` workers.
pub fn coverage_series(n_workers: usize, b_max: usize) -> Result<Vec<f64>, String> {
    check_workers(n_workers)?;
    (1..=b_max)
        .map(|b| {
            coverage_probability(b as u64, n_workers as u64)
                .map(|p| p.value())
                .map_err(|e| e.to_string())
        })
        .collect()
}

/// Expected completion time of the balanced and cyclic policies over
/// `points` log-spaced rates. The result is three consecutive blocks of
/// length `points`: rates, balanced times, cyclic times.
pub fn latency_series(
    n_workers: usize,
    n_batches: usize,
    rate_lo: f64,
    rate_hi: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    check_workers(n_workers)?;
    if !(rate_lo > 0.0 && rate_hi >= rate_lo && rate_hi.is_finite()) {
        return Err("rates must satisfy 0 < low <= high".into());
    }
    if points < 2 {
        return Err("need at least two rates".into());
    }
    let rates = log_spaced(rate_lo, rate_hi, points);
    let mut out = rates.clone();
    for f in [expected_time_balanced, expected_time_cyclic] {
        for &r in &rates {
            out.push(f(n_workers, n_batches, r).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

/// Monte Carlo estimates for the three six-worker layouts (cyclic, grouped,
/// replicated). Returns `[mean, ci_low, ci_high]` for each, in that order.
pub fn layout_comparison(n_samples: u32, seed: u64) -> Result<Vec<f64>, String> {
    if n_samples < 1000 {
        return Err("use at least 1000 samples".into());
    }
    let mut out = Vec::with_capacity(9);
    for policy in [
        PolicySpec::Cyclic,
        PolicySpec::GroupedOverlap,
        PolicySpec::Balanced,
    ] {
        let est = monte_carlo(&SimConfig {
            n_samples: n_samples as u64,
            seed,
            rate: 1.0,
            policy,
            system: SystemParams::new(6, 6, 3, 1.0),
        })
        .map_err(|e| e.to_string())?;
        out.extend([est.mean, est.ci95_low, est.ci95_high]);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn coverage_curve(n_workers: usize, b_max: usize) -> Result<Vec<f64>, JsError> {
    coverage_series(n_workers, b_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn latency_curves(
    n_workers: usize,
    n_batches: usize,
    rate_lo: f64,
    rate_hi: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    latency_series(n_workers, n_batches, rate_lo, rate_hi, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn compare_layouts(n_samples: u32, seed: u64) -> Result<Vec<f64>, JsError> {
    layout_comparison(n_samples, seed).map_err(|e| JsError::new(&e))
}
