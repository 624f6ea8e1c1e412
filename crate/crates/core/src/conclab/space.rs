use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::algebra::AtomSet;
use crate::entropy::FiniteDist;
use crate::error::{check_limit, invalid, Result};
use crate::exact::Exact;
use crate::metric::{difference_set, DiffCost};

/// Largest space for the exhaustive concentration function (`2^16` subsets).
pub const ALPHA_EXACT_POINT_LIMIT: usize = 16;
/// Largest space materialized with all pairwise distances.
pub const FINITE_SPACE_POINT_LIMIT: usize = 2048;

const RATIONAL_MAX_DEN: u64 = 1 << 20;

/// The rational with the smallest denominator within one relative machine
/// epsilon of `x`, found from the continued fraction of `x`; the exact binary
/// value of `x` if no denominator up to `2^20` is close enough.
pub fn simplest_rational(x: f64) -> BigRational {
    let exact = BigRational::from_float(x).unwrap_or_else(BigRational::zero);
    if !x.is_finite() || x.fract() == 0.0 {
        return exact;
    }
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut rest = exact.clone();
    let tol = BigRational::from_float(f64::EPSILON * x.abs()).expect("finite");
    loop {
        let a = rest.floor().to_integer();
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        if k2 > BigInt::from(RATIONAL_MAX_DEN) {
            return exact;
        }
        let q = BigRational::new(h2.clone(), k2.clone());
        if (&q - &exact).abs() <= tol {
            return q;
        }
        let frac = &rest - BigRational::from_integer(a);
        if frac.is_zero() {
            return exact;
        }
        rest = frac.recip();
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
    }
}

/// A finite product space with every pairwise distance available.
///
/// Point masses are exact rationals (see [`simplest_rational`]); distances are
/// exact and stored once per distinct difference set.
#[derive(Clone, Debug)]
pub struct FiniteSpace {
    sizes: Vec<usize>,
    points: Vec<Vec<u32>>,
    mu: Vec<BigRational>,
    mu_f64: Vec<f64>,
    class: Vec<u32>,
    costs: Vec<Exact>,
    costs_f64: Vec<f64>,
}

impl FiniteSpace {
    /// `∏_j (Ω_j, μ_j)` with the metric `metric`, points numbered with
    /// coordinate 0 varying fastest.
    pub fn product(dists: &[FiniteDist], metric: &dyn DiffCost) -> Result<Self> {
        if dists.is_empty() {
            return invalid("a product needs at least one factor");
        }
        if metric.n_coords() != dists.len() {
            return invalid(format!("metric has {} coordinates, product has {}", metric.n_coords(), dists.len()));
        }
        let sizes: Vec<usize> = dists.iter().map(FiniteDist::len).collect();
        let total = sizes.iter().try_fold(1usize, |acc, &k| acc.checked_mul(k)).unwrap_or(usize::MAX);
        check_limit("points in the finite space", total, FINITE_SPACE_POINT_LIMIT)?;
        let factor_q: Vec<Vec<BigRational>> = dists
            .iter()
            .map(|d| d.probs().iter().map(|&p| simplest_rational(p)).collect())
            .collect();
        let mut points = Vec::with_capacity(total);
        let mut mu = Vec::with_capacity(total);
        for mut idx in 0..total {
            let mut coords = Vec::with_capacity(sizes.len());
            let mut m = BigRational::one();
            for (j, &k) in sizes.iter().enumerate() {
                let c = idx % k;
                idx /= k;
                m *= &factor_q[j][c];
                coords.push(c as u32);
            }
            points.push(coords);
            mu.push(m);
        }
        let mu_f64 = mu.iter().map(|m| Exact::rational(m.clone()).to_f64()).collect();

        let mut index: HashMap<AtomSet, u32> = HashMap::new();
        let mut costs = Vec::new();
        let mut class = vec![0u32; total * total];
        for x in 0..total {
            for y in x..total {
                let d = difference_set(&points[x], &points[y]);
                let c = match index.get(&d) {
                    Some(&c) => c,
                    None => {
                        let c = costs.len() as u32;
                        costs.push(metric.cost(d)?);
                        index.insert(d, c);
                        c
                    }
                };
                class[x * total + y] = c;
                class[y * total + x] = c;
            }
        }
        let costs_f64 = costs.iter().map(Exact::to_f64).collect();
        Ok(FiniteSpace { sizes, points, mu, mu_f64, class, costs, costs_f64 })
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn alphabet_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn point(&self, i: usize) -> &[u32] {
        &self.points[i]
    }

    pub fn mass(&self, i: usize) -> &BigRational {
        &self.mu[i]
    }

    pub fn masses(&self) -> &[BigRational] {
        &self.mu
    }

    pub fn masses_f64(&self) -> &[f64] {
        &self.mu_f64
    }

    pub fn dist(&self, x: usize, y: usize) -> &Exact {
        &self.costs[self.class[x * self.n_points() + y] as usize]
    }

    pub fn dist_f64(&self, x: usize, y: usize) -> f64 {
        self.costs_f64[self.class[x * self.n_points() + y] as usize]
    }

    pub fn diameter(&self) -> Exact {
        self.costs.iter().cloned().fold(Exact::integer(0), Exact::max)
    }

    /// For each point, the bitset of points at distance strictly below `eps`.
    pub(crate) fn ball_rows(&self, eps: &Exact) -> Vec<Vec<u64>> {
        let n = self.n_points();
        let inside: Vec<bool> = self.costs.iter().map(|c| c < eps).collect();
        let words = n.div_ceil(64);
        (0..n)
            .map(|x| {
                let mut row = vec![0u64; words];
                for y in 0..n {
                    if inside[self.class[x * n + y] as usize] {
                        row[y / 64] |= 1 << (y % 64);
                    }
                }
                row
            })
            .collect()
    }
}
