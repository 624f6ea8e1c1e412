//! Discrete entropy and the inequality chain around it: Shearer-type
//! tensorization over uniform covers, Ledoux's squared-difference bound, the
//! Herbst argument and the resulting Gaussian tail bounds.
//!
//! Everything here is `f64` with compensated sums; inequality slacks are
//! compared against [`SLACK_TOLERANCE`].

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{covering_multiplicity, is_uniform, Cover};
use crate::error::{check_limit, invalid, Result};

/// Tolerance on the sum of a probability vector.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;
/// Negative slack down to this value is treated as rounding noise.
pub const SLACK_TOLERANCE: f64 = 1e-9;
/// Largest product space handled by the exhaustive routines.
pub const PRODUCT_POINT_LIMIT: usize = 1 << 16;
/// Points of `(0, λ]` at which the Herbst hypothesis is sampled.
pub const HERBST_SUBGRID: usize = 64;

/// Neumaier's compensated sum.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn xlnx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteDist {
    probs: Vec<f64>,
}

impl FiniteDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return invalid("a distribution needs at least one point");
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return invalid("probabilities must be finite and non-negative");
        }
        let total = neumaier_sum(probs.iter().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return invalid(format!("probabilities sum to {total}, not 1"));
        }
        Ok(FiniteDist { probs })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return invalid("a distribution needs at least one point");
        }
        Ok(FiniteDist { probs: vec![1.0 / k as f64; k] })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `∫ f dμ`.
    pub fn expect(&self, f: &[f64]) -> f64 {
        neumaier_sum(f.iter().zip(&self.probs).map(|(v, p)| v * p))
    }
}

/// `⊗_j μ_j` on `∏_j Ω_j`. Points are numbered in mixed radix with
/// coordinate 0 varying fastest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductDist {
    factors: Vec<FiniteDist>,
}

impl ProductDist {
    pub fn new(factors: Vec<FiniteDist>) -> Result<Self> {
        if factors.is_empty() {
            return invalid("a product needs at least one factor");
        }
        let mut size = 1usize;
        for f in &factors {
            size = size.saturating_mul(f.len());
        }
        check_limit("product space points", size, PRODUCT_POINT_LIMIT)?;
        Ok(ProductDist { factors })
    }

    pub fn factors(&self) -> &[FiniteDist] {
        &self.factors
    }

    pub fn n_coords(&self) -> usize {
        self.factors.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.factors.iter().map(FiniteDist::len).collect()
    }

    pub fn n_points(&self) -> usize {
        self.factors.iter().map(FiniteDist::len).product()
    }

    /// Coordinates of point `idx`.
    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        self.factors
            .iter()
            .map(|f| {
                let c = idx % f.len();
                idx /= f.len();
                c
            })
            .collect()
    }

    pub fn encode(&self, coords: &[usize]) -> usize {
        let mut idx = 0;
        for (f, &c) in self.factors.iter().zip(coords).rev() {
            idx = idx * f.len() + c;
        }
        idx
    }

    /// `ℙ^μ` as a flat distribution.
    pub fn joint(&self) -> FiniteDist {
        let probs = (0..self.n_points())
            .map(|i| self.decode(i).iter().zip(&self.factors).map(|(&c, f)| f.probs[c]).product())
            .collect();
        FiniteDist { probs }
    }
}

fn check_table(f: &[f64], n: usize) -> Result<()> {
    if f.len() != n {
        return invalid(format!("function has {} values, space has {n} points", f.len()));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return invalid("function values must be finite");
    }
    Ok(())
}

/// `Ent_μ(f) = ∫ f ln f dμ − (∫ f dμ) ln ∫ f dμ`, with `0 ln 0 = 0`.
pub fn ent(f: &[f64], mu: &FiniteDist) -> Result<f64> {
    check_table(f, mu.len())?;
    if f.iter().any(|&v| v < 0.0) {
        return invalid("entropy needs a non-negative function");
    }
    Ok(ent_unchecked(f, &mu.probs))
}

fn ent_unchecked(f: &[f64], p: &[f64]) -> f64 {
    let mean = neumaier_sum(f.iter().zip(p).map(|(v, q)| v * q));
    if mean == 0.0 {
        return 0.0;
    }
    neumaier_sum(f.iter().zip(p).map(|(&v, q)| xlnx(v) * q)) - xlnx(mean)
}

/// `Ent_{ℙ^μ}(f)` for `f` tabulated on the product.
pub fn ent_product(f: &[f64], dist: &ProductDist) -> Result<f64> {
    ent(f, &dist.joint())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub slack: f64,
}

impl InequalityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        InequalityCheck { lhs, rhs, slack: rhs - lhs }
    }

    pub fn holds(&self) -> bool {
        self.slack >= -SLACK_TOLERANCE
    }
}

/// `∫ Ent_{P_C}(f_z) dP_{N∖C}(z)`, where `f_z` fixes the coordinates outside
/// `C` to `z`.
fn conditional_entropy(f: &[f64], dist: &ProductDist, in_c: &[bool]) -> f64 {
    let sizes = dist.sizes();
    // Points sharing z get the same key: the index with the C coordinates zeroed.
    let mut strides = Vec::with_capacity(sizes.len());
    let mut s = 1usize;
    for &k in &sizes {
        strides.push(s);
        s *= k;
    }
    let n = dist.n_points();
    let mut flnf = vec![Vec::new(); n];
    let mut fsum = vec![Vec::new(); n];
    let mut pz = vec![0.0f64; n];
    for (idx, &v) in f.iter().enumerate() {
        let coords = dist.decode(idx);
        let mut key = idx;
        let mut p_c = 1.0;
        let mut p_out = 1.0;
        for (j, &c) in coords.iter().enumerate() {
            let q = dist.factors[j].probs[c];
            if in_c[j] {
                key -= c * strides[j];
                p_c *= q;
            } else {
                p_out *= q;
            }
        }
        flnf[key].push(xlnx(v) * p_c);
        fsum[key].push(v * p_c);
        pz[key] = p_out;
    }
    neumaier_sum((0..n).filter(|&k| !fsum[k].is_empty()).map(|k| {
        let mean = neumaier_sum(fsum[k].iter().copied());
        let e = if mean == 0.0 { 0.0 } else { neumaier_sum(flnf[k].iter().copied()) - xlnx(mean) };
        pz[k] * e
    }))
}

/// `Ent_{ℙ^μ}(f) ≤ (1/k) Σ_i ∫ Ent_{P_{C_i}}(f_z)` for a uniform `k`-cover of
/// the coordinate set.
pub fn shearer_check(f: &[f64], dist: &ProductDist, cover: &Cover, k: usize) -> Result<InequalityCheck> {
    check_table(f, dist.n_points())?;
    if f.iter().any(|&v| v < 0.0) {
        return invalid("entropy needs a non-negative function");
    }
    if cover.ground().n_atoms() != dist.n_coords() {
        return invalid(format!(
            "cover is over {} indices, product has {} coordinates",
            cover.ground().n_atoms(),
            dist.n_coords()
        ));
    }
    if !is_uniform(cover) {
        return invalid("the cover is not uniform");
    }
    let t = covering_multiplicity(cover);
    if k == 0 || t != k {
        return invalid(format!("cover multiplicity is {t}, not {k}"));
    }
    let lhs = ent_product(f, dist)?;
    let terms: Vec<f64> = cover
        .sets()
        .par_iter()
        .map(|c| {
            let in_c: Vec<bool> = (0..dist.n_coords()).map(|j| c.contains(j)).collect();
            conditional_entropy(f, dist, &in_c)
        })
        .collect();
    let rhs = neumaier_sum(terms) / k as f64;
    Ok(InequalityCheck::new(lhs, rhs))
}

/// `Ent_μ(e^f) ≤ Σ_{f(x) ≥ f(y)} (f(x) − f(y))² e^{f(x)} μ(x) μ(y)`.
pub fn ledoux_check(f: &[f64], mu: &FiniteDist) -> Result<InequalityCheck> {
    check_table(f, mu.len())?;
    let p = &mu.probs;
    // Both sides are homogeneous in e^f, so shift by max f against overflow
    // and scale back.
    let top = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let g: Vec<f64> = f.iter().map(|v| (v - top).exp()).collect();
    let lhs = ent_unchecked(&g, p);
    let mut terms = Vec::with_capacity(f.len() * f.len());
    for (x, (&fx, &gx)) in f.iter().zip(&g).enumerate() {
        for (y, &fy) in f.iter().enumerate() {
            if fx >= fy {
                terms.push((fx - fy).powi(2) * gx * p[x] * p[y]);
            }
        }
    }
    let rhs = neumaier_sum(terms);
    let scale = top.exp();
    if scale.is_finite() && scale > 0.0 {
        Ok(InequalityCheck::new(lhs * scale, rhs * scale))
    } else {
        Ok(InequalityCheck::new(lhs, rhs))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HerbstLambdaRow {
    pub lambda: f64,
    /// `Ent(e^{λf}) ≤ (λ²D/2) E[e^{λf}]` at this λ.
    pub hypothesis: bool,
    /// The hypothesis also holds on the sampled points of `(0, λ)`.
    pub hypothesis_all: bool,
    /// `E[e^{λ(f − Ef)}]`.
    pub mgf: f64,
    /// `e^{λ²D/2}`.
    pub mgf_bound: f64,
    pub conclusion: bool,
    /// Jensen: `E[e^{λ(f − Ef)}] ≥ 1`.
    pub jensen: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HerbstTailRow {
    pub r: f64,
    /// `μ{f − Ef ≥ r}`.
    pub tail: f64,
    /// `e^{−r²/(2D)}`.
    pub bound: f64,
    /// The Herbst hypothesis holds on the sampled points of `(0, r/D]`.
    pub hypothesis_all: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HerbstReport {
    pub d: f64,
    pub mean: f64,
    pub lambdas: Vec<HerbstLambdaRow>,
    pub tails: Vec<HerbstTailRow>,
    /// Rows where the hypothesis held on all of the sampled `(0, λ]` but the
    /// conclusion failed. The Herbst argument says this never happens.
    pub violations: usize,
    pub jensen_failures: usize,
}

struct HerbstEval<'a> {
    f: &'a [f64],
    p: &'a [f64],
    mean: f64,
    top: f64,
    d: f64,
}

impl HerbstEval<'_> {
    fn hypothesis(&self, lambda: f64) -> bool {
        // Homogeneous in e^{λf}: evaluate on e^{λ(f − max f)}.
        let g: Vec<f64> = self.f.iter().map(|v| (lambda * (v - self.top)).exp()).collect();
        let e = ent_unchecked(&g, self.p);
        let m = neumaier_sum(g.iter().zip(self.p).map(|(v, q)| v * q));
        e <= lambda * lambda * self.d / 2.0 * m + SLACK_TOLERANCE * m
    }

    fn hypothesis_on(&self, lambda: f64) -> bool {
        (1..=HERBST_SUBGRID).all(|s| self.hypothesis(lambda * s as f64 / HERBST_SUBGRID as f64))
    }

    fn mgf(&self, lambda: f64) -> f64 {
        neumaier_sum(self.f.iter().zip(self.p).map(|(v, q)| (lambda * (v - self.mean)).exp() * q))
    }
}

/// Runs the Herbst argument on a grid of `λ > 0` and the Markov step on a
/// grid of `r > 0`.
///
/// The implication `Ent(e^{λf}) ≤ (λ²D/2) E e^{λf}` on `(0, λ]` ⇒
/// `E e^{λ(f−Ef)} ≤ e^{λ²D/2}` needs the hypothesis on the whole interval, so
/// a failed conclusion counts as a violation only when the hypothesis held on
/// [`HERBST_SUBGRID`] evenly spaced points of `(0, λ]`. The tail at `r` uses
/// `λ = r/D`.
pub fn herbst_chain_check(f: &[f64], dist: &ProductDist, d: f64, lambda_grid: &[f64], r_grid: &[f64]) -> Result<HerbstReport> {
    if !(d > 0.0 && d.is_finite()) {
        return invalid("D must be positive");
    }
    if lambda_grid.iter().chain(r_grid).any(|v| !(*v > 0.0 && v.is_finite())) {
        return invalid("λ and r grids must be positive");
    }
    check_table(f, dist.n_points())?;
    let joint = dist.joint();
    let p = joint.probs();
    let mean = joint.expect(f);
    let top = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let eval = HerbstEval { f, p, mean, top, d };

    let lambdas: Vec<HerbstLambdaRow> = lambda_grid
        .par_iter()
        .map(|&lambda| {
            let hypothesis = eval.hypothesis(lambda);
            let hypothesis_all = hypothesis && eval.hypothesis_on(lambda);
            let mgf = eval.mgf(lambda);
            let mgf_bound = (lambda * lambda * d / 2.0).exp();
            HerbstLambdaRow {
                lambda,
                hypothesis,
                hypothesis_all,
                mgf,
                mgf_bound,
                conclusion: mgf <= mgf_bound * (1.0 + SLACK_TOLERANCE),
                jensen: mgf >= 1.0 - SLACK_TOLERANCE,
            }
        })
        .collect();
    let tails: Vec<HerbstTailRow> = r_grid
        .par_iter()
        .map(|&r| {
            let tail = neumaier_sum(f.iter().zip(p).filter(|(v, _)| **v - mean >= r).map(|(_, q)| *q));
            let bound = (-r * r / (2.0 * d)).exp();
            HerbstTailRow { r, tail, bound, hypothesis_all: eval.hypothesis_on(r / d), holds: tail <= bound + SLACK_TOLERANCE }
        })
        .collect();
    let violations = lambdas.iter().filter(|row| row.hypothesis_all && !row.conclusion).count()
        + tails.iter().filter(|row| row.hypothesis_all && !row.holds).count();
    let jensen_failures = lambdas.iter().filter(|row| !row.jensen).count();
    Ok(HerbstReport { d, mean, lambdas, tails, violations, jensen_failures })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailBound {
    /// `exp(−k r² / (4‖w‖²))`, the one-sided bound for 1-Lipschitz functions.
    pub lipschitz: f64,
    /// `exp(−k r² / (8‖w‖²))`, the bound on the concentration function.
    pub concentration: f64,
    /// `w = 0`: the bounds are reported as 1.
    pub trivial: bool,
}

/// Tail bounds for a `k`-cover with weights `w`.
pub fn tail_bound(k: usize, w: &[f64], r: f64) -> Result<TailBound> {
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return invalid("weights must be finite and non-negative");
    }
    tail_bound_from_norm(k, neumaier_sum(w.iter().map(|v| v * v)), r)
}

/// [`tail_bound`] given `‖w‖²` directly.
pub fn tail_bound_from_norm(k: usize, norm_sq: f64, r: f64) -> Result<TailBound> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    if !(r > 0.0 && r.is_finite()) {
        return invalid("r must be positive");
    }
    if !(norm_sq.is_finite() && norm_sq >= 0.0) {
        return invalid("‖w‖² must be finite and non-negative");
    }
    if norm_sq == 0.0 {
        return Ok(TailBound { lipschitz: 1.0, concentration: 1.0, trivial: true });
    }
    let e = k as f64 * r * r / norm_sq;
    Ok(TailBound { lipschitz: (-e / 4.0).exp(), concentration: (-e / 8.0).exp(), trivial: false })
}
