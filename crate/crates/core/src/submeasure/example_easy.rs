//! A non-elliptic, non-pathological submeasure on a truncated product
//! `K_1 × ⋯ × K_depth`, covered by coordinate blocks `[i,n] = {x : x_n = i}`
//! of weight `1/√M_n`, together with measures `μ_n` it dominates below `ξ_n`.

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AtomMeasure, Submeasure, SubmeasureKind, WeightedCoverFamily};
use crate::algebra::{AtomSet, GroundSet, MAX_ATOMS};
use crate::error::{check_limit, invalid, Result};
use crate::exact::Exact;

/// How `M_n` is chosen.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MRule {
    /// `M_n = n³`.
    Cube,
    /// `M_1, M_2, …` listed explicitly.
    Explicit(Vec<u64>),
}

impl MRule {
    fn value(&self, n: usize) -> Option<u64> {
        match self {
            MRule::Cube => (n as u64).checked_pow(3),
            MRule::Explicit(v) => v.get(n - 1).copied(),
        }
    }
}

/// The truncated product `∏_{n ≤ depth} K_n` with coordinate 1 varying fastest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelBlockIndex {
    level_sizes: Vec<usize>,
    strides: Vec<usize>,
    n_atoms: usize,
}

impl LevelBlockIndex {
    pub fn new(level_sizes: Vec<usize>) -> Result<Self> {
        if level_sizes.is_empty() || level_sizes.contains(&0) {
            return invalid("level sizes must be positive and non-empty");
        }
        let mut strides = Vec::with_capacity(level_sizes.len());
        let mut n_atoms = 1usize;
        for &k in &level_sizes {
            strides.push(n_atoms);
            n_atoms = n_atoms.saturating_mul(k);
        }
        check_limit("atoms in the truncated product", n_atoms, MAX_ATOMS)?;
        Ok(LevelBlockIndex { level_sizes, strides, n_atoms })
    }

    pub fn depth(&self) -> usize {
        self.level_sizes.len()
    }

    /// `K_n` for `n = 1..=depth`.
    pub fn level_size(&self, n: usize) -> usize {
        self.level_sizes[n - 1]
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// The `n`-th coordinate of a leaf cell.
    pub fn coordinate(&self, atom: usize, n: usize) -> usize {
        atom / self.strides[n - 1] % self.level_sizes[n - 1]
    }

    /// The block `[i,n]`.
    pub fn block(&self, i: usize, n: usize) -> AtomSet {
        AtomSet::from_atoms((0..self.n_atoms).filter(|&a| self.coordinate(a, n) == i))
    }

    /// The partition `{[i,n] : i < K_n}`.
    pub fn level_blocks(&self, n: usize) -> Vec<AtomSet> {
        (0..self.level_size(n)).map(|i| self.block(i, n)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct ExampleEasy {
    pub index: LevelBlockIndex,
    /// `M_1..M_depth`.
    pub m: Vec<u64>,
    /// `ξ_0 = 1, ξ_1, …, ξ_depth` with `ξ_n = 1/√M_n`.
    pub xi: Vec<Exact>,
    pub phi: Submeasure,
    /// `μ_1..μ_depth`.
    pub mu: Vec<AtomMeasure>,
}

impl ExampleEasy {
    pub fn ground(&self) -> GroundSet {
        self.phi.ground()
    }

    /// `μ_n`, for `n = 1..=depth`.
    pub fn mu(&self, n: usize) -> &AtomMeasure {
        &self.mu[n - 1]
    }
}

/// Builds the depth-`depth` truncation.
///
/// The rule must satisfy `n | M_n` and `1 ≤ √M_n/n ≤ √M_{n+1}/(n+1)` for every
/// level used (the second comparison is checked whenever `M_{n+1}` is known).
pub fn example_easy(depth: usize, rule: &MRule) -> Result<ExampleEasy> {
    if depth == 0 {
        return invalid("depth must be at least 1");
    }
    let mut m = Vec::with_capacity(depth + 1);
    for n in 1..=depth + 1 {
        match rule.value(n) {
            Some(v) => m.push(v),
            None if n <= depth => return invalid(format!("M_{n} is not defined by the rule")),
            None => {}
        }
    }
    for (idx, &mn) in m.iter().enumerate() {
        let n = idx as u64 + 1;
        if mn == 0 || mn % n != 0 {
            return invalid(format!("M_{n} = {mn} is not a positive multiple of {n}"));
        }
        if mn < n * n {
            return invalid(format!("M_{n} = {mn} is below {n}²"));
        }
        if let Some(&next) = m.get(idx + 1) {
            // M_n/n² ≤ M_{n+1}/(n+1)², cross-multiplied
            if (mn as u128) * ((n + 1) as u128).pow(2) > (next as u128) * (n as u128).pow(2) {
                return invalid(format!("√M_n/n decreases between levels {n} and {}", n + 1));
            }
        }
    }
    m.truncate(depth);
    let sizes: Vec<usize> = m.iter().enumerate().map(|(i, &mn)| (mn / (i as u64 + 1)) as usize).collect();
    let index = LevelBlockIndex::new(sizes)?;
    let ground = GroundSet::new(index.n_atoms())?;

    let mut xi = vec![Exact::one()];
    xi.extend(m.iter().map(|&mn| Exact::inv_sqrt(mn)));
    let mut generators = Vec::new();
    for n in 1..=depth {
        for block in index.level_blocks(n) {
            generators.push((block, xi[n].clone()));
        }
    }
    let family = WeightedCoverFamily::new(ground, generators, Exact::one())?;
    let phi = Submeasure::cover_generated(family).with_kind(SubmeasureKind::ExampleEasy);

    // μ_n puts 1/√M_n on each point of level n and 1/K_j on the others, so
    // every leaf gets (1/√M_n) · ∏_{j≠n} 1/K_j.
    let mu = (1..=depth)
        .map(|n| {
            let others: u64 = (1..=depth).filter(|&j| j != n).map(|j| index.level_size(j) as u64).product();
            let w = &xi[n] / &Exact::integer(others as i64);
            AtomMeasure::new(ground, vec![w; ground.n_atoms()])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExampleEasy { index, m, xi, phi, mu })
}

/// Largest truncation checked over every subset.
pub const EXAMPLE_EXHAUSTIVE_LIMIT: usize = 16;
const SAMPLE_CHUNK: u64 = 4096;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleEasyCounterexample {
    pub set: AtomSet,
    pub level: usize,
    pub phi: Exact,
    pub mu: Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleEasyCheck {
    pub depth: usize,
    pub n_atoms: usize,
    pub m: Vec<u64>,
    pub xi: Vec<Exact>,
    /// `μ_n(X)` for `n = 1..=depth`.
    pub mu_mass: Vec<Exact>,
    /// `φ([i,n]) ≤ ξ_n` for every block.
    pub blocks_below_xi: bool,
    pub exhaustive: bool,
    pub sets_checked: u64,
    /// Per level, how many checked sets had `φ(A) ≤ ξ_n`.
    pub hypothesis_hits: Vec<u64>,
    /// `φ(A) ≤ ξ_n ⇒ μ_n(A) ≤ φ(A)` on every checked set and level.
    pub implication_holds: bool,
    pub counterexample: Option<ExampleEasyCounterexample>,
}

/// Per-level outcome for one set: hypothesis hits and the first failure.
fn check_set(ex: &ExampleEasy, a: AtomSet, hits: &mut [u64]) -> Option<ExampleEasyCounterexample> {
    let phi = ex.phi.eval(a);
    let mut bad = None;
    for n in 1..=ex.index.depth() {
        if phi <= ex.xi[n] {
            hits[n - 1] += 1;
            let mu = ex.mu(n).eval(a);
            if mu > phi && bad.is_none() {
                bad = Some(ExampleEasyCounterexample { set: a, level: n, phi: phi.clone(), mu });
            }
        }
    }
    bad
}

/// A random set biased towards small unions of blocks, where the hypothesis
/// `φ(A) ≤ ξ_n` is not vacuous.
fn random_set(ex: &ExampleEasy, rng: &mut ChaCha8Rng) -> AtomSet {
    let n_atoms = ex.ground().n_atoms();
    let uniform = |rng: &mut ChaCha8Rng| AtomSet::from_atoms((0..n_atoms).filter(|_| rng.random::<bool>()));
    if rng.random::<bool>() {
        return uniform(rng);
    }
    let depth = ex.index.depth();
    let mut a = AtomSet::EMPTY;
    for _ in 0..rng.random_range(1..=3) {
        let n = rng.random_range(1..=depth);
        a = a.union(ex.index.block(rng.random_range(0..ex.index.level_size(n)), n));
    }
    if rng.random::<bool>() {
        a = a.intersection(uniform(rng));
    }
    a
}

/// Checks the block bounds and the domination implication, over every subset
/// when `samples` is `None` and otherwise over `samples = (count, seed)`
/// random sets.
pub fn example_easy_check(ex: &ExampleEasy, samples: Option<(u64, u64)>) -> Result<ExampleEasyCheck> {
    let depth = ex.index.depth();
    let g = ex.ground();
    let blocks_below_xi = (1..=depth).all(|n| ex.index.level_blocks(n).into_iter().all(|b| ex.phi.eval(b) <= ex.xi[n]));
    let merge = |(mut h1, c1): (Vec<u64>, Option<ExampleEasyCounterexample>), (h2, c2): (Vec<u64>, Option<ExampleEasyCounterexample>)| {
        h1.iter_mut().zip(&h2).for_each(|(a, b)| *a += b);
        (h1, c1.or(c2))
    };
    let (exhaustive, sets_checked, (hits, counterexample)) = match samples {
        None => {
            g.check_exhaustive(EXAMPLE_EXHAUSTIVE_LIMIT)?;
            let total = 1u64 << g.n_atoms();
            let out = (0..total as u128)
                .into_par_iter()
                .fold(
                    || (vec![0u64; depth], None),
                    |(mut h, c), bits| {
                        let bad = check_set(ex, AtomSet(bits), &mut h);
                        (h, c.or(bad))
                    },
                )
                .reduce(|| (vec![0u64; depth], None), merge);
            (true, total, out)
        }
        Some((count, seed)) => {
            if count == 0 {
                return invalid("at least one sample is needed");
            }
            let out = (0..count.div_ceil(SAMPLE_CHUNK))
                .into_par_iter()
                .map(|c| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(c);
                    let mut h = vec![0u64; depth];
                    let mut bad = None;
                    for _ in 0..SAMPLE_CHUNK.min(count - c * SAMPLE_CHUNK) {
                        let a = random_set(ex, &mut rng);
                        let b = check_set(ex, a, &mut h);
                        bad = bad.or(b);
                    }
                    (h, bad)
                })
                .reduce(|| (vec![0u64; depth], None), merge);
            (false, count, out)
        }
    };
    Ok(ExampleEasyCheck {
        depth,
        n_atoms: g.n_atoms(),
        m: ex.m.clone(),
        xi: ex.xi.clone(),
        mu_mass: ex.mu.iter().map(AtomMeasure::mass).collect(),
        blocks_below_xi,
        exhaustive,
        sets_checked,
        hypothesis_hits: hits,
        implication_holds: counterexample.is_none(),
        counterexample,
    })
}
