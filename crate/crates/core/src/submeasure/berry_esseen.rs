//! Parameter sequences `M`, `w`, `ε` for the cover-generated submeasure
//! `φ_{M,w}` built on the tree `M_1 × M_2 × ⋯`.
//!
//! `M_i` grows doubly exponentially, so everything is carried in natural
//! logarithms. Plain values are reported only where they fit in an `f64`.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{check_limit, invalid, Error, Result};

/// Deepest level accepted by [`berry_esseen_params`].
pub const MAX_BERRY_ESSEEN_DEPTH: usize = 8;

const LN2: f64 = std::f64::consts::LN_2;
const SEARCH_DOUBLINGS: u32 = 60;
const SEARCH_BISECTIONS: u32 = 80;

/// A positive function `θ` with `θ(ξ) → 0` as `ξ → 0`, evaluated as
/// `ln θ(ξ)` from `ln ξ`.
#[derive(Clone)]
pub enum Theta {
    /// `θ(ξ) = ξ^p` with `p > 0`.
    Power(f64),
    /// `θ(ξ) = 1 / ln(1 + 1/ξ)`.
    InverseLog,
    /// Any other function, given on the log scale.
    Custom(String, Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Theta {
    pub fn ln_theta(&self, ln_xi: f64) -> f64 {
        match self {
            Theta::Power(p) => p * ln_xi,
            Theta::InverseLog => {
                // ln(1 + e^u) computed without overflow, u = −ln ξ
                let u = -ln_xi;
                let ln_1p_exp = if u > 0.0 { u + (-u).exp().ln_1p() } else { u.exp().ln_1p() };
                -ln_1p_exp.ln()
            }
            Theta::Custom(_, f) => f(ln_xi),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Theta::Power(p) => format!("xi^{p}"),
            Theta::InverseLog => "1/ln(1+1/xi)".to_string(),
            Theta::Custom(name, _) => name.clone(),
        }
    }
}

impl fmt::Debug for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Theta({})", self.label())
    }
}

impl Serialize for Theta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BerryEsseenLevel {
    pub i: usize,
    pub ln_w: f64,
    /// `w_i`, or 0 if it underflows.
    pub w: f64,
    pub ln_m: f64,
    /// `M_i` when it is below 2^53 and therefore exact.
    pub m: Option<u64>,
    /// `ln(M_1⋯M_{i−1})`.
    pub ln_prefix: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BerryEsseenChecks {
    /// `w_i ≤ 2^{−i}` and `2^{2i+5}·M_1⋯M_{i−1}·K^i·√θ(w_i) < 1`.
    pub w_condition: bool,
    /// Both sides of the sandwich for `1/√M_i`.
    pub m_sandwich: bool,
    /// `1/M_i ≤ w_i`.
    pub m_lower: bool,
    /// `ε_{k−1} = K(1/(w_k√M_k) + √M_k·ε_k + 1/√M_k)` for the truncated sums.
    pub eps_recursion: bool,
    /// `ε_0` plus the tail bound stays below 1/4.
    pub eps0_below_quarter: bool,
    /// `ε_0 > ε_1 > ⋯ > ε_{i_max−1} > 0`.
    pub eps_decreasing: bool,
}

impl BerryEsseenChecks {
    pub fn all(&self) -> bool {
        self.w_condition && self.m_sandwich && self.m_lower && self.eps_recursion && self.eps0_below_quarter && self.eps_decreasing
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BerryEsseenParams {
    pub theta: Theta,
    pub k_const: f64,
    pub i_max: usize,
    pub levels: Vec<BerryEsseenLevel>,
    /// `ε_0..ε_{i_max}`: the series summed up to `i_max` (so the last entry is 0).
    /// Deep entries underflow to 0; `ln_eps` keeps them.
    pub eps: Vec<f64>,
    pub ln_eps: Vec<f64>,
    /// Every omitted series term is below `2^{−i−3}`, so each `ε_k` exceeds its
    /// truncation by less than this.
    pub eps_tail_bound: f64,
    pub checks: BerryEsseenChecks,
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Chooses `w_i` and `M_i` for `i = 1..=i_max` and sums the `ε` series.
///
/// `w_i` is the largest value (to about 1e−15 in `ln w`) at most `2^{−i}` that
/// satisfies the `w` condition, found by doubling `−ln w` then bisecting.
/// `M_i = ⌊1/c²⌋` with `c = 2^i·w_i·√(M_1⋯M_{i−1})·√θ(w_i)`.
pub fn berry_esseen_params(theta: &Theta, i_max: usize, k_const: f64) -> Result<BerryEsseenParams> {
    if i_max == 0 {
        return invalid("i_max must be at least 1");
    }
    check_limit("Berry-Esseen depth", i_max, MAX_BERRY_ESSEEN_DEPTH)?;
    if !(k_const >= 1.0 && k_const.is_finite()) {
        return invalid(format!("K must be a finite number at least 1, got {k_const}"));
    }
    if let Theta::Power(p) = theta {
        if !(*p > 0.0 && p.is_finite()) {
            return invalid("theta exponent must be positive");
        }
    }
    let ln_k = k_const.ln();
    let mut levels: Vec<BerryEsseenLevel> = Vec::with_capacity(i_max);
    let mut ln_prefix = 0.0f64;
    for i in 1..=i_max {
        let fi = i as f64;
        let slack = |ln_w: f64| (2.0 * fi + 5.0) * LN2 + ln_prefix + fi * ln_k + 0.5 * theta.ln_theta(ln_w);
        let start = -fi * LN2;
        let mut ok_ln_w = None;
        let mut bad_ln_w = start;
        if slack(start) < 0.0 {
            ok_ln_w = Some(start);
        } else {
            let mut step = 1.0f64;
            for _ in 0..SEARCH_DOUBLINGS {
                let trial = start - step;
                if slack(trial) < 0.0 {
                    ok_ln_w = Some(trial);
                    break;
                }
                bad_ln_w = trial;
                step *= 2.0;
            }
            if let Some(mut good) = ok_ln_w {
                for _ in 0..SEARCH_BISECTIONS {
                    let mid = 0.5 * (good + bad_ln_w);
                    if mid == good || mid == bad_ln_w {
                        break;
                    }
                    if slack(mid) < 0.0 {
                        good = mid;
                    } else {
                        bad_ln_w = mid;
                    }
                }
                ok_ln_w = Some(good);
            }
        }
        let ln_w = ok_ln_w.ok_or_else(|| {
            Error::SearchExhausted(format!("no w_{i} satisfies the w condition within the search budget"))
        })?;
        let ln_c = fi * LN2 + ln_w + 0.5 * ln_prefix + 0.5 * theta.ln_theta(ln_w);
        if !ln_c.is_finite() {
            return Err(Error::SearchExhausted(format!("level {i} leaves the floating-point range")));
        }
        let (ln_m, m) = if -2.0 * ln_c < 53.0 * LN2 {
            let mi = (-2.0 * ln_c).exp().floor().max(1.0);
            (mi.ln(), Some(mi as u64))
        } else {
            (-2.0 * ln_c, None)
        };
        levels.push(BerryEsseenLevel { i, ln_w, w: ln_w.exp(), ln_m, m, ln_prefix });
        ln_prefix += ln_m;
    }

    // ln of the i-th term of ε_k, for k < i ≤ i_max
    let ln_term = |k: usize, i: usize| {
        let lvl = &levels[i - 1];
        let inner: f64 = (k + 1..i).map(|j| levels[j - 1].ln_m).sum();
        let ln_one_plus_inv_w = -lvl.ln_w + lvl.ln_w.exp().ln_1p();
        ln_one_plus_inv_w + 0.5 * inner - 0.5 * lvl.ln_m + (i - k) as f64 * ln_k
    };
    let ln_eps: Vec<f64> = (0..=i_max)
        .map(|k| log_sum_exp(&(k + 1..=i_max).map(|i| ln_term(k, i)).collect::<Vec<_>>()))
        .collect();
    let eps: Vec<f64> = ln_eps.iter().map(|l| l.exp()).collect();
    let eps_tail_bound = (-(i_max as f64) - 3.0).exp2();

    let mut checks = BerryEsseenChecks {
        w_condition: true,
        m_sandwich: true,
        m_lower: true,
        eps_recursion: true,
        eps0_below_quarter: eps[0] + eps_tail_bound < 0.25,
        eps_decreasing: true,
    };
    let tol = |x: f64| 1e-12 * (1.0 + x.abs());
    for lvl in &levels {
        let fi = lvl.i as f64;
        let ln_theta = theta.ln_theta(lvl.ln_w);
        let slack = (2.0 * fi + 5.0) * LN2 + lvl.ln_prefix + fi * ln_k + 0.5 * ln_theta;
        checks.w_condition &= lvl.ln_w <= -fi * LN2 + tol(fi) && slack < 0.0;
        let ln_c = fi * LN2 + lvl.ln_w + 0.5 * lvl.ln_prefix + 0.5 * ln_theta;
        let ln_inv_sqrt_m = -0.5 * lvl.ln_m;
        checks.m_sandwich &= lvl.ln_m >= 0.0
            && ln_c <= ln_inv_sqrt_m + tol(ln_c)
            && ln_inv_sqrt_m <= ln_c + LN2 + tol(ln_c);
        checks.m_lower &= -lvl.ln_m <= lvl.ln_w + tol(lvl.ln_w);
    }
    for k in 1..=i_max {
        let lvl = &levels[k - 1];
        let mut parts = vec![-lvl.ln_w - 0.5 * lvl.ln_m, -0.5 * lvl.ln_m];
        if ln_eps[k] > f64::NEG_INFINITY {
            parts.push(0.5 * lvl.ln_m + ln_eps[k]);
        }
        let rhs = ln_k + log_sum_exp(&parts);
        checks.eps_recursion &= close(ln_eps[k - 1], rhs);
    }
    checks.eps_decreasing = ln_eps[..i_max].windows(2).all(|w| w[1] < w[0]) && ln_eps[i_max - 1].is_finite();

    Ok(BerryEsseenParams { theta: theta.clone(), k_const, i_max, levels, eps, ln_eps, eps_tail_bound, checks })
}
