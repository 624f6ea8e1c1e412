use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::Scenario;
use crate::entropy::{neumaier_sum, tail_bound_from_norm};
use crate::error::{invalid, Result};

/// Fewer trials make the confidence intervals meaningless.
pub const MIN_TRIALS: u64 = 100;
/// Every Monte Carlo stream comes from this generator.
pub const RNG_NAME: &str = "ChaCha8Rng";
/// Trials per independent stream; stream `c` is `(seed, c)`.
const CHUNK: u64 = 4096;
/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;
/// `f − Ê f ≥ r` is tested as `f − Ê f ≥ r − THRESHOLD_TOLERANCE·(1 + |r|)`
/// so that lattice-valued functions are not lost to rounding.
const THRESHOLD_TOLERANCE: f64 = 1e-12;

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailRow {
    pub r: f64,
    pub successes: u64,
    /// Fraction of trials with `f − Ê f ≥ r`.
    pub empirical: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub ci_half_width: f64,
    /// `exp(−k r² / (4‖w‖²))`, only for certified functions.
    pub bound: Option<f64>,
    /// `empirical ≤ bound + 3 · ci_half_width`.
    pub consistent: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McTailReport {
    pub function: &'static str,
    /// The function is 1-Lipschitz by construction, so bounds are reported.
    pub certified: bool,
    pub trials: u64,
    pub seed: u64,
    pub generator: &'static str,
    pub k: usize,
    pub weight_norm_sq: f64,
    pub mean: f64,
    pub rows: Vec<TailRow>,
}

fn sample_index(cum: &[f64], u: f64) -> u32 {
    cum.partition_point(|&c| c <= u).min(cum.len() - 1) as u32
}

/// Estimates `P(f − Ê f ≥ r)` from `trials` independent product samples and
/// compares it with the bound for 1-Lipschitz functions.
pub fn mc_tail(scenario: &Scenario) -> Result<McTailReport> {
    if scenario.trials < MIN_TRIALS {
        return invalid(format!("at least {MIN_TRIALS} trials are needed, got {}", scenario.trials));
    }
    let cums: Vec<Vec<f64>> = scenario
        .dists()
        .iter()
        .map(|d| {
            let mut acc = 0.0;
            d.probs()
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect()
        })
        .collect();
    let eval = scenario.evaluator();
    let trials = scenario.trials;
    let chunks = trials.div_ceil(CHUNK);
    let mut values: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
            rng.set_stream(c);
            let count = CHUNK.min(trials - c * CHUNK);
            let mut x = vec![0u32; cums.len()];
            let mut out = Vec::with_capacity(count as usize);
            for _ in 0..count {
                for (xj, cum) in x.iter_mut().zip(&cums) {
                    *xj = sample_index(cum, rng.random::<f64>());
                }
                out.push(eval.eval(&x));
            }
            out
        })
        .collect();
    let mean = neumaier_sum(values.iter().copied()) / trials as f64;
    values.sort_by(f64::total_cmp);

    let certified = scenario.certified();
    let k = scenario.multiplicity();
    let norm_sq = scenario.cover().weight_norm_sq().expect("weighted").to_f64();
    let rows = scenario
        .r_grid
        .iter()
        .map(|&r| {
            let threshold = mean + r - THRESHOLD_TOLERANCE * (1.0 + r.abs());
            let successes = (values.len() - values.partition_point(|&v| v < threshold)) as u64;
            let (ci_lo, ci_hi) = wilson_interval(successes, trials, Z95);
            let empirical = successes as f64 / trials as f64;
            let half = (ci_hi - ci_lo) / 2.0;
            let bound = if certified { Some(tail_bound_from_norm(k, norm_sq, r)?.lipschitz) } else { None };
            Ok(TailRow {
                r,
                successes,
                empirical,
                ci_lo,
                ci_hi,
                ci_half_width: half,
                bound,
                consistent: bound.map(|b| empirical <= b + 3.0 * half),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(McTailReport {
        function: scenario.function().label(),
        certified,
        trials,
        seed: scenario.seed,
        generator: RNG_NAME,
        k,
        weight_norm_sq: norm_sq,
        mean,
        rows,
    })
}
