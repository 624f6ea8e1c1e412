use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::space::{FiniteSpace, ALPHA_EXACT_POINT_LIMIT};
use crate::entropy::neumaier_sum;
use crate::error::{check_limit, invalid, Error, Result};
use crate::exact::Exact;

/// Largest number of random sets in one sampled run.
pub const SAMPLED_FAMILY_LIMIT: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AlphaMode {
    Exhaustive,
    /// The infimum ran over `family_size` candidate sets only.
    Sampled { family_size: usize, seed: u64, generator: &'static str },
}

/// `α(ε) = 1 − inf{μ(B_d(A, ε)) : μ(A) ≥ 1/2}` with `B_d(A, ε) = {x : d(A, x) < ε}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaResult {
    pub epsilon: Exact,
    pub alpha: f64,
    /// Exact value in exhaustive mode.
    pub alpha_exact: Option<Exact>,
    /// `μ(B_d(A, ε))` for the best set found.
    pub ball_mass: f64,
    /// Point indices of that set.
    pub witness: Vec<usize>,
    /// Sampled mode restricts the infimum, so `alpha` is then only a lower
    /// bound on the true value.
    pub lower_bound: bool,
    #[serde(flatten)]
    pub mode: AlphaMode,
}

fn check_eps(eps: &Exact) -> Result<()> {
    if eps.signum() != std::cmp::Ordering::Greater {
        return invalid("ε must be positive");
    }
    Ok(())
}

/// Exhaustive `α(ε)` for each `ε`, over all `2^|X|` subsets.
pub fn alpha_exact(space: &FiniteSpace, eps: &[Exact]) -> Result<Vec<AlphaResult>> {
    let n = space.n_points();
    if n > ALPHA_EXACT_POINT_LIMIT {
        return Err(Error::LimitExceeded {
            what: "points for the exhaustive concentration function (use alpha_sampled)",
            actual: n,
            limit: ALPHA_EXACT_POINT_LIMIT,
        });
    }
    for e in eps {
        check_eps(e)?;
    }
    // Masses as integers over a common denominator.
    let den = space.masses().iter().fold(BigInt::one(), |l, m| l.lcm(m.denom()));
    let nums: Vec<BigInt> = space.masses().iter().map(|m| (m * BigRational::from_integer(den.clone())).to_integer()).collect();
    let size = 1usize << n;
    let mut mass = vec![BigInt::zero(); size];
    for a in 1..size {
        let low = a.trailing_zeros() as usize;
        mass[a] = &mass[a & (a - 1)] + &nums[low];
    }
    let half_ok: Vec<bool> = mass.iter().map(|m| m * 2 >= den).collect();

    eps.par_iter()
        .map(|e| {
            let rows = space.ball_rows(e);
            let ball: Vec<usize> = rows.iter().map(|r| r[0] as usize).collect();
            let mut union = vec![0usize; size];
            let mut best: Option<usize> = None;
            for a in 1..size {
                let low = a.trailing_zeros() as usize;
                union[a] = union[a & (a - 1)] | ball[low];
                if half_ok[a] && best.is_none_or(|b| mass[union[a]] < mass[union[b]]) {
                    best = Some(a);
                }
            }
            let a = best.expect("the whole space has mass 1");
            let inf = BigRational::new(mass[union[a]].clone(), den.clone());
            let alpha = Exact::rational(BigRational::one() - &inf);
            Ok(AlphaResult {
                epsilon: e.clone(),
                alpha: alpha.to_f64(),
                alpha_exact: Some(alpha),
                ball_mass: Exact::rational(inf).to_f64(),
                witness: (0..n).filter(|i| a >> i & 1 == 1).collect(),
                lower_bound: false,
                mode: AlphaMode::Exhaustive,
            })
        })
        .collect()
}

/// Adds points in `order` until the mass reaches 1/2.
fn prefix_to_half(space: &FiniteSpace, order: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let half = BigRational::new(1.into(), 2.into());
    let mut acc = BigRational::zero();
    let mut set = Vec::new();
    for i in order {
        acc += space.mass(i);
        set.push(i);
        if acc >= half {
            break;
        }
    }
    set
}

fn sorted_by(values: &[f64], descending: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        let o = values[a].total_cmp(&values[b]);
        (if descending { o.reverse() } else { o }).then(a.cmp(&b))
    });
    idx
}

/// Cylinders `{x : x_j ∈ S}` for minimal symbol sets `S` of mass at least 1/2.
fn cylinders(space: &FiniteSpace) -> Vec<Vec<usize>> {
    let n = space.n_points();
    let sizes = space.alphabet_sizes();
    let mut out = Vec::new();
    for (j, &k) in sizes.iter().enumerate() {
        if k > 12 {
            continue;
        }
        // Marginal of coordinate j, read off the points.
        let mut marginal = vec![BigRational::zero(); k];
        for i in 0..n {
            marginal[space.point(i)[j] as usize] += space.mass(i);
        }
        let total: BigRational = marginal.iter().sum();
        let half = total / BigRational::from_integer(2.into());
        let qualifies = |s: usize| (0..k).filter(|c| s >> c & 1 == 1).map(|c| &marginal[c]).sum::<BigRational>() >= half;
        for s in 1..(1usize << k) {
            let minimal = qualifies(s) && (0..k).filter(|c| s >> c & 1 == 1).all(|c| !qualifies(s & !(1 << c)));
            if minimal {
                out.push((0..n).filter(|&i| s >> space.point(i)[j] & 1 == 1).collect());
            }
        }
    }
    out
}

/// `α(ε)` with the infimum restricted to a family of candidate sets: sublevel
/// and superlevel sets of each function in `level_functions`, minimal
/// coordinate cylinders, and `family_budget` random sets (distance balls
/// around random centres and random prefixes). The result is a lower bound on
/// the true `α(ε)`.
pub fn alpha_sampled(
    space: &FiniteSpace,
    eps: &Exact,
    family_budget: usize,
    seed: u64,
    level_functions: &[Vec<f64>],
) -> Result<AlphaResult> {
    check_eps(eps)?;
    if family_budget == 0 {
        return invalid("family budget must be at least 1");
    }
    check_limit("sampled family size", family_budget, SAMPLED_FAMILY_LIMIT)?;
    let n = space.n_points();
    for f in level_functions {
        if f.len() != n {
            return invalid(format!("level function has {} values, space has {n} points", f.len()));
        }
    }

    let mut family: Vec<Vec<usize>> = Vec::new();
    for f in level_functions {
        family.push(prefix_to_half(space, sorted_by(f, false)));
        family.push(prefix_to_half(space, sorted_by(f, true)));
    }
    family.extend(cylinders(space));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..family_budget {
        if t % 2 == 0 {
            let c = rng.random_range(0..n);
            let dists: Vec<f64> = (0..n).map(|y| space.dist_f64(c, y)).collect();
            // Random tie-breaking inside each distance shell.
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            order.sort_by(|&a, &b| dists[a].total_cmp(&dists[b]));
            family.push(prefix_to_half(space, order));
        } else {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            family.push(prefix_to_half(space, order));
        }
    }

    let rows = space.ball_rows(eps);
    let mu = space.masses_f64();
    let words = n.div_ceil(64);
    let masses: Vec<f64> = family
        .par_iter()
        .map(|set| {
            let mut ball = vec![0u64; words];
            for &a in set {
                for (w, r) in ball.iter_mut().zip(&rows[a]) {
                    *w |= r;
                }
            }
            neumaier_sum((0..n).filter(|y| ball[y / 64] >> (y % 64) & 1 == 1).map(|y| mu[y]))
        })
        .collect();
    let (best, ball_mass) = masses
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("family is non-empty");
    let mut witness = family[best].clone();
    witness.sort_unstable();
    Ok(AlphaResult {
        epsilon: eps.clone(),
        alpha: (1.0 - ball_mass).max(0.0),
        alpha_exact: None,
        ball_mass,
        witness,
        lower_bound: true,
        mode: AlphaMode::Sampled { family_size: family.len(), seed, generator: super::RNG_NAME },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Cover, GroundSet};
    use crate::entropy::FiniteDist;
    use crate::metric::CoverMetric;

    fn cube(n: usize) -> FiniteSpace {
        let g = GroundSet::new(n).unwrap();
        let c = Cover::weighted(g, g.singletons(), vec![Exact::ratio(1, n as i64); n]).unwrap();
        FiniteSpace::product(&vec![FiniteDist::uniform(2).unwrap(); n], &CoverMetric::new(c).unwrap()).unwrap()
    }

    #[test]
    fn four_cube_quarter() {
        let s = cube(4);
        let r = alpha_exact(&s, &[Exact::ratio(1, 4)]).unwrap();
        assert_eq!(r[0].alpha_exact, Some(Exact::ratio(1, 2)));
        assert_eq!(r[0].ball_mass, 0.5);
    }

    #[test]
    fn monotone_and_zero_past_diameter() {
        let s = cube(3);
        let eps: Vec<Exact> = (1..=8).map(|k| Exact::ratio(k, 6)).collect();
        let r = alpha_exact(&s, &eps).unwrap();
        for w in r.windows(2) {
            assert!(w[1].alpha_exact <= w[0].alpha_exact);
        }
        assert_eq!(r.last().unwrap().alpha_exact, Some(Exact::integer(0)));
        assert!(r.iter().all(|x| x.alpha <= 0.5));
    }

    #[test]
    fn sampled_is_below_exact_and_finds_cylinders() {
        let s = cube(4);
        let exact = alpha_exact(&s, &[Exact::ratio(1, 4), Exact::ratio(1, 2), Exact::ratio(3, 4)]).unwrap();
        for e in &exact {
            let sampled = alpha_sampled(&s, &e.epsilon, 50, 9, &[]).unwrap();
            assert!(sampled.alpha <= e.alpha + 1e-12);
            assert!(sampled.lower_bound);
        }
        let q = alpha_sampled(&s, &Exact::ratio(1, 4), 1, 9, &[]).unwrap();
        assert_eq!(q.alpha, 0.5);
        let far = alpha_sampled(&s, &Exact::integer(2), 5, 9, &[]).unwrap();
        assert_eq!(far.alpha, 0.0);
    }

    #[test]
    fn limits_and_arguments() {
        let s = cube(5);
        assert!(matches!(alpha_exact(&s, &[Exact::ratio(1, 4)]), Err(Error::LimitExceeded { .. })));
        assert!(alpha_sampled(&s, &Exact::ratio(1, 4), 0, 1, &[]).is_err());
        assert!(alpha_sampled(&s, &Exact::integer(0), 3, 1, &[]).is_err());
        assert!(alpha_sampled(&s, &Exact::ratio(1, 4), 3, 1, &[vec![0.0; 3]]).is_err());
    }
}
