use serde::Serialize;

use crate::entropy::neumaier_sum;
use crate::error::{invalid, Result};

/// Largest `n` for which binomial probabilities are summed term by term.
pub const BINOMIAL_EXACT_LIMIT: u64 = 1_000_000;

/// `ln P(Bin(n, p) = i)` for `i = 0..=n`.
fn ln_pmf(n: u64, p: f64) -> Vec<f64> {
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut ln_choose = 0.0f64;
    for i in 0..=n {
        let a = if i == 0 { 0.0 } else { i as f64 * lp };
        let b = if i == n { 0.0 } else { (n - i) as f64 * lq };
        out.push(ln_choose + a + b);
        if i < n {
            ln_choose += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
        }
    }
    out
}

fn sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return 0.0;
    }
    m.exp() * neumaier_sum(terms.iter().map(|t| (t - m).exp()))
}

fn check(n: u64, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("p = {p} is not a probability"));
    }
    if n > BINOMIAL_EXACT_LIMIT {
        return invalid(format!("n = {n} is above the term-by-term limit {BINOMIAL_EXACT_LIMIT}"));
    }
    Ok(())
}

/// `P(Bin(n, p) ≥ k)`.
pub fn binomial_tail_at_least(n: u64, p: f64, k: u64) -> Result<f64> {
    check(n, p)?;
    if k == 0 {
        return Ok(1.0);
    }
    if k > n {
        return Ok(0.0);
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let terms = ln_pmf(n, p);
    Ok(sum_exp(&terms[k as usize..]).min(1.0))
}

/// `P(Bin(n, p) < x)`.
pub fn binomial_cdf_below(n: u64, p: f64, x: f64) -> Result<f64> {
    if x.is_nan() {
        return invalid("threshold is NaN");
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    // Smallest integer ≥ x is the first count not below x.
    let k = x.ceil();
    if k > n as f64 {
        check(n, p)?;
        return Ok(1.0);
    }
    Ok(1.0 - binomial_tail_at_least(n, p, k as u64)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BerryEsseenBound {
    pub a: f64,
    pub delta: f64,
    pub n: u64,
    pub k_const: f64,
    /// `n/2 + δ√n`.
    pub threshold: f64,
    /// `P[#{i : X_i = 1} < n/2 + δ√n] − 1/2` with `P[X_i = 1] = 1 − a`.
    pub lhs: Option<f64>,
    /// `K(δ + (a − 1/2)√n + 1/√n)`.
    pub rhs: f64,
    /// `lhs < rhs`.
    pub holds: Option<bool>,
}

/// Both sides of the Berry–Esseen consequence for `n` independent variables
/// with `P[X_i = 0] = a`. The left side is computed exactly up to
/// [`BINOMIAL_EXACT_LIMIT`].
pub fn berry_esseen_bound(a: f64, delta: f64, n: u64, k_const: f64) -> Result<BerryEsseenBound> {
    if !(0.5..=0.75).contains(&a) {
        return invalid(format!("a = {a} is outside [1/2, 3/4]"));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return invalid("δ must be finite and non-negative");
    }
    if n == 0 {
        return invalid("n must be at least 1");
    }
    if !(k_const >= 1.0 && k_const.is_finite()) {
        return invalid("K must be at least 1");
    }
    let sn = (n as f64).sqrt();
    let threshold = n as f64 / 2.0 + delta * sn;
    let rhs = k_const * (delta + (a - 0.5) * sn + 1.0 / sn);
    let lhs = if n <= BINOMIAL_EXACT_LIMIT { Some(binomial_cdf_below(n, 1.0 - a, threshold)? - 0.5) } else { None };
    Ok(BerryEsseenBound { a, delta, n, k_const, threshold, lhs, rhs, holds: lhs.map(|l| l < rhs) })
}
