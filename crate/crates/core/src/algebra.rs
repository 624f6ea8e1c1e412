//! Finite Boolean set algebras: atoms, covers, partitions, and exact
//! minimum-weight set cover.

use std::fmt;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_limit, invalid, Error, Result};
use crate::exact::Exact;

/// Hard upper bound on the number of atoms of any ground set.
pub const MAX_ATOMS: usize = 128;

/// Default bound for routines that enumerate all subsets of the ground set.
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 24;

/// The unit of the algebra: atoms `0..n_atoms`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroundSet {
    n_atoms: usize,
}

impl GroundSet {
    pub fn new(n_atoms: usize) -> Result<Self> {
        if n_atoms == 0 {
            return invalid("ground set needs at least one atom");
        }
        check_limit("atom count", n_atoms, MAX_ATOMS)?;
        Ok(GroundSet { n_atoms })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn full(&self) -> AtomSet {
        AtomSet::full(self.n_atoms)
    }

    pub fn contains(&self, set: AtomSet) -> bool {
        set.is_subset(self.full())
    }

    pub fn check(&self, set: AtomSet) -> Result<()> {
        if self.contains(set) {
            Ok(())
        } else {
            invalid(format!("set {set} has atoms outside 0..{}", self.n_atoms))
        }
    }

    /// Fails with [`Error::LimitExceeded`] when the ground set is too large to
    /// enumerate exhaustively.
    pub fn check_exhaustive(&self, limit: usize) -> Result<()> {
        check_limit("atoms for exhaustive enumeration", self.n_atoms, limit.min(63))
    }

    /// All `2^n` subsets in mask order. Callers must check the size first.
    pub fn subsets(&self) -> impl Iterator<Item = AtomSet> {
        let n = self.n_atoms;
        assert!(n < 64, "subset enumeration over {n} atoms");
        (0..(1u64 << n)).map(|m| AtomSet(m as u128))
    }

    pub fn singletons(&self) -> Vec<AtomSet> {
        (0..self.n_atoms).map(AtomSet::singleton).collect()
    }
}

/// A subset of the ground set, stored as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomSet(pub u128);

impl AtomSet {
    pub const EMPTY: AtomSet = AtomSet(0);

    pub fn full(n: usize) -> Self {
        if n >= 128 {
            AtomSet(u128::MAX)
        } else {
            AtomSet((1u128 << n) - 1)
        }
    }

    pub fn singleton(atom: usize) -> Self {
        AtomSet(1u128 << atom)
    }

    pub fn from_atoms<I: IntoIterator<Item = usize>>(atoms: I) -> Self {
        AtomSet(atoms.into_iter().fold(0u128, |m, a| m | (1u128 << a)))
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    pub fn contains(self, atom: usize) -> bool {
        atom < 128 && self.0 >> atom & 1 == 1
    }

    pub fn insert(&mut self, atom: usize) {
        self.0 |= 1u128 << atom;
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: AtomSet) -> AtomSet {
        AtomSet(self.0 | other.0)
    }

    pub fn intersection(self, other: AtomSet) -> AtomSet {
        AtomSet(self.0 & other.0)
    }

    pub fn difference(self, other: AtomSet) -> AtomSet {
        AtomSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: AtomSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: AtomSet) -> bool {
        self.0 & other.0 == 0
    }

    /// Lowest atom, if any.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let a = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(a)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Display for AtomSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for AtomSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for AtomSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_vec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for AtomSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let atoms = Vec::<usize>::deserialize(d)?;
        if let Some(bad) = atoms.iter().find(|&&a| a >= MAX_ATOMS) {
            return Err(serde::de::Error::custom(format!("atom index {bad} exceeds {MAX_ATOMS}")));
        }
        Ok(AtomSet::from_atoms(atoms))
    }
}

/// A finite sequence of sets, optionally weighted. Empty entries are allowed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cover {
    ground: GroundSet,
    sets: Vec<AtomSet>,
    weights: Option<Vec<Exact>>,
}

impl Cover {
    pub fn new(ground: GroundSet, sets: Vec<AtomSet>) -> Result<Self> {
        if sets.is_empty() {
            return invalid("a cover needs at least one entry");
        }
        for &s in &sets {
            ground.check(s)?;
        }
        Ok(Cover { ground, sets, weights: None })
    }

    pub fn weighted(ground: GroundSet, sets: Vec<AtomSet>, weights: Vec<Exact>) -> Result<Self> {
        Cover::new(ground, sets)?.with_weights(weights)
    }

    pub fn with_weights(mut self, weights: Vec<Exact>) -> Result<Self> {
        if weights.len() != self.sets.len() {
            return invalid(format!(
                "{} weights for {} cover entries",
                weights.len(),
                self.sets.len()
            ));
        }
        if weights.iter().any(Exact::is_negative) {
            return invalid("cover weights must be non-negative");
        }
        self.weights = Some(weights);
        Ok(self)
    }

    /// The singleton partition `({0}, …, {n−1})`.
    pub fn singletons(ground: GroundSet) -> Self {
        Cover { ground, sets: ground.singletons(), weights: None }
    }

    pub fn ground(&self) -> GroundSet {
        self.ground
    }

    pub fn sets(&self) -> &[AtomSet] {
        &self.sets
    }

    pub fn weights(&self) -> Option<&[Exact]> {
        self.weights.as_deref()
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Number of entries containing each atom.
    pub fn hit_counts(&self) -> Vec<usize> {
        (0..self.ground.n_atoms())
            .map(|a| self.sets.iter().filter(|s| s.contains(a)).count())
            .collect()
    }

    /// Squared Euclidean norm of the weights, or `None` when unweighted.
    pub fn weight_norm_sq(&self) -> Option<Exact> {
        self.weights.as_ref().map(|w| w.iter().map(Exact::square).sum())
    }
}

/// `min_x |{i : x ∈ C_i}|`; zero when some atom is uncovered.
pub fn covering_multiplicity(cover: &Cover) -> usize {
    cover.hit_counts().into_iter().min().unwrap_or(0)
}

/// Every atom is hit exactly `covering_multiplicity(cover)` times.
pub fn is_uniform(cover: &Cover) -> bool {
    let counts = cover.hit_counts();
    counts.windows(2).all(|w| w[0] == w[1])
}

/// Shrinks each entry so that every atom is hit exactly `k` times, where `k`
/// is the covering multiplicity. Each atom keeps its `k` lowest-index entries.
pub fn uniform_refinement(cover: &Cover) -> Result<Cover> {
    let k = covering_multiplicity(cover);
    if k == 0 {
        return invalid("uniform refinement needs covering multiplicity at least 1");
    }
    let mut refined = vec![AtomSet::EMPTY; cover.len()];
    for atom in 0..cover.ground.n_atoms() {
        let hits = cover
            .sets
            .iter()
            .enumerate()
            .filter(|(_, s)| s.contains(atom))
            .map(|(i, _)| i)
            .take(k);
        for i in hits {
            refined[i].insert(atom);
        }
    }
    Ok(Cover { ground: cover.ground, sets: refined, weights: cover.weights.clone() })
}

/// An optimal solution of a weighted set-cover instance.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverSolution<W> {
    pub weight: W,
    /// Indices into the candidate list, ascending.
    pub chosen: Vec<usize>,
}

/// Weights accepted by [`min_weight_cover`]: exactly ordered values with an
/// `f64` approximation close enough to prune the search on clear gaps.
pub trait CoverWeight: Clone + PartialOrd + Zero {
    fn approx(&self) -> f64;
}

impl CoverWeight for f64 {
    fn approx(&self) -> f64 {
        *self
    }
}

impl CoverWeight for Exact {
    fn approx(&self) -> f64 {
        self.to_f64()
    }
}

impl CoverWeight for BigRational {
    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl CoverWeight for i64 {
    fn approx(&self) -> f64 {
        *self as f64
    }
}

/// Relative gap below which floating-point costs are not trusted.
const PRUNE_MARGIN: f64 = 1e-9;

struct Candidate<W> {
    index: usize,
    trace: AtomSet,
    weight: W,
    approx: f64,
}

struct Search<'a, W> {
    cands: &'a [Candidate<W>],
    /// For each atom of the target: candidate positions containing it, by weight.
    by_atom: Vec<Vec<usize>>,
    best: Option<(W, f64, Vec<usize>)>,
}

impl<W: CoverWeight> Search<'_, W> {
    /// The heaviest "cheapest candidate through an uncovered atom".
    fn lower_bound(&self, uncovered: AtomSet) -> W {
        let mut lb = W::zero();
        for a in uncovered.iter() {
            let w = &self.cands[self.by_atom[a][0]].weight;
            if *w > lb {
                lb = w.clone();
            }
        }
        lb
    }

    /// Every atom pays at least its cheapest share `w_c / |C_c ∩ U|`.
    fn fractional_bound(&self, uncovered: AtomSet) -> f64 {
        uncovered
            .iter()
            .map(|a| {
                self.by_atom[a]
                    .iter()
                    .map(|&c| self.cands[c].approx / self.cands[c].trace.intersection(uncovered).len() as f64)
                    .fold(f64::INFINITY, f64::min)
            })
            .sum()
    }

    fn exact_cost(&self, chosen: &[usize]) -> W {
        chosen.iter().fold(W::zero(), |acc, &c| acc + self.cands[c].weight.clone())
    }

    fn dfs(&mut self, uncovered: AtomSet, cost_f: f64, chosen: &mut Vec<usize>) {
        if let Some((best, best_f, _)) = &self.best {
            let slack = PRUNE_MARGIN * (1.0 + best_f.abs());
            let lb_f = if uncovered.is_empty() { 0.0 } else { self.fractional_bound(uncovered) };
            if cost_f + lb_f > best_f + slack {
                return;
            }
            if !(cost_f + lb_f < best_f - slack) {
                let bound = self.exact_cost(chosen) + self.lower_bound(uncovered);
                if !(bound < *best) {
                    return;
                }
            }
        }
        if uncovered.is_empty() {
            self.best = Some((self.exact_cost(chosen), cost_f, chosen.clone()));
            return;
        }
        let pivot = uncovered
            .iter()
            .min_by_key(|&a| self.by_atom[a].len())
            .expect("non-empty");
        for k in 0..self.by_atom[pivot].len() {
            let c = self.by_atom[pivot][k];
            chosen.push(c);
            self.dfs(uncovered.difference(self.cands[c].trace), cost_f + self.cands[c].approx, chosen);
            chosen.pop();
        }
    }
}

/// Exact minimum-weight cover of `target` by a subfamily of `candidates`.
///
/// Branch-and-bound: branch on the uncovered atom with the fewest candidates.
/// Subtrees are cut on floating-point costs with a fractional lower bound
/// when the gap is well above rounding error, and on exact costs otherwise.
/// Returns `None` when the union of all candidates misses part of `target`.
pub fn min_weight_cover<W: CoverWeight>(target: AtomSet, candidates: &[AtomSet], weights: &[W]) -> Option<CoverSolution<W>> {
    assert_eq!(candidates.len(), weights.len(), "one weight per candidate");
    if target.is_empty() {
        return Some(CoverSolution { weight: W::zero(), chosen: Vec::new() });
    }
    let reach = candidates.iter().fold(AtomSet::EMPTY, |u, c| u.union(c.intersection(target)));
    if !target.is_subset(reach) {
        return None;
    }

    // Restrict to the target, keep the cheapest copy of each trace, and drop
    // candidates dominated by a cheaper superset.
    let mut cands: Vec<Candidate<W>> = Vec::new();
    for (index, (c, w)) in candidates.iter().zip(weights).enumerate() {
        let trace = c.intersection(target);
        if trace.is_empty() {
            continue;
        }
        match cands.iter_mut().find(|k| k.trace == trace) {
            Some(k) if *w < k.weight => {
                k.index = index;
                k.weight = w.clone();
                k.approx = w.approx();
            }
            Some(_) => {}
            None => cands.push(Candidate { index, trace, weight: w.clone(), approx: w.approx() }),
        }
    }
    let dominated: Vec<bool> = cands
        .iter()
        .map(|c| {
            cands
                .iter()
                .any(|d| d.trace != c.trace && c.trace.is_subset(d.trace) && d.weight <= c.weight)
        })
        .collect();
    let mut cands: Vec<Candidate<W>> = cands
        .into_iter()
        .zip(dominated)
        .filter(|(_, d)| !d)
        .map(|(c, _)| c)
        .collect();
    cands.sort_by(|a, b| a.weight.partial_cmp(&b.weight).unwrap_or(std::cmp::Ordering::Equal).then(a.index.cmp(&b.index)));

    let width = 128 - target.0.leading_zeros() as usize;
    let mut by_atom = vec![Vec::new(); width];
    for (pos, c) in cands.iter().enumerate() {
        for a in c.trace.iter() {
            by_atom[a].push(pos);
        }
    }
    let mut search = Search { cands: &cands, by_atom, best: None };
    search.dfs(target, 0.0, &mut Vec::new());
    let (weight, _, picks) = search.best.expect("target is reachable");
    let mut chosen: Vec<usize> = picks.into_iter().map(|p| cands[p].index).collect();
    chosen.sort_unstable();
    Some(CoverSolution { weight, chosen })
}

/// A finite partition of the ground set into non-empty blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Partition {
    ground: GroundSet,
    blocks: Vec<AtomSet>,
}

impl Partition {
    pub fn new(ground: GroundSet, blocks: Vec<AtomSet>) -> Result<Self> {
        let mut seen = AtomSet::EMPTY;
        for &b in &blocks {
            ground.check(b)?;
            if b.is_empty() {
                return invalid("partition blocks must be non-empty");
            }
            if !b.is_disjoint(seen) {
                return invalid(format!("block {b} overlaps an earlier block"));
            }
            seen = seen.union(b);
        }
        if seen != ground.full() {
            return invalid(format!(
                "blocks miss atoms {}",
                ground.full().difference(seen)
            ));
        }
        Ok(Partition { ground, blocks })
    }

    pub fn whole(ground: GroundSet) -> Self {
        Partition { ground, blocks: vec![ground.full()] }
    }

    pub fn singletons(ground: GroundSet) -> Self {
        Partition { ground, blocks: ground.singletons() }
    }

    pub fn ground(&self) -> GroundSet {
        self.ground
    }

    pub fn blocks(&self) -> &[AtomSet] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `self` is finer than (or equal to) `coarser`: every block of `self`
    /// sits inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.ground == coarser.ground
            && self
                .blocks
                .iter()
                .all(|b| coarser.blocks.iter().any(|c| b.is_subset(*c)))
    }

    /// Union of the blocks whose indices are set in `selection`.
    pub fn union_of(&self, selection: AtomSet) -> AtomSet {
        selection
            .iter()
            .fold(AtomSet::EMPTY, |u, i| u.union(self.blocks[i]))
    }
}

/// The coarsest common refinement: all non-empty pairwise intersections,
/// ordered by `(block of p, block of q)`.
pub fn refine_partitions(p: &Partition, q: &Partition) -> Result<Partition> {
    if p.ground != q.ground {
        return Err(Error::Invalid("partitions over different ground sets".into()));
    }
    let blocks = p
        .blocks
        .iter()
        .flat_map(|b| q.blocks.iter().map(move |c| b.intersection(*c)))
        .filter(|x| !x.is_empty())
        .collect();
    Ok(Partition { ground: p.ground, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn set(atoms: &[usize]) -> AtomSet {
        AtomSet::from_atoms(atoms.iter().copied())
    }

    fn ground(n: usize) -> GroundSet {
        GroundSet::new(n).unwrap()
    }

    #[test]
    fn multiplicity_examples() {
        let g = ground(3);
        assert_eq!(covering_multiplicity(&Cover::new(g, vec![g.full(), g.full()]).unwrap()), 2);
        assert_eq!(covering_multiplicity(&Cover::singletons(g)), 1);
        let tri = Cover::new(g, vec![set(&[0, 1]), set(&[1, 2]), set(&[0, 2])]).unwrap();
        assert_eq!(covering_multiplicity(&tri), 2);
        assert!(is_uniform(&tri));
        let g2 = ground(2);
        assert!(!is_uniform(&Cover::new(g2, vec![set(&[0, 1]), set(&[0])]).unwrap()));
        assert!(is_uniform(&Cover::singletons(g)));
        let gap = Cover::new(g, vec![set(&[0, 1]), AtomSet::EMPTY]).unwrap();
        assert_eq!(covering_multiplicity(&gap), 0);
    }

    #[test]
    fn uniform_refinement_examples() {
        let g = ground(3);
        let tri = Cover::new(g, vec![set(&[0, 1]), set(&[1, 2]), set(&[0, 2])]).unwrap();
        assert_eq!(uniform_refinement(&tri).unwrap(), tri);

        let g2 = ground(2);
        let c = Cover::new(g2, vec![set(&[0, 1]), set(&[0])]).unwrap();
        let r = uniform_refinement(&c).unwrap();
        assert_eq!(r.sets(), &[set(&[0, 1]), AtomSet::EMPTY]);
        assert_eq!(r.hit_counts(), vec![1, 1]);

        let c = Cover::new(g2, vec![g2.full(), g2.full(), set(&[0])]).unwrap();
        let r = uniform_refinement(&c).unwrap();
        assert_eq!(r.sets(), &[set(&[0, 1]), set(&[0, 1]), AtomSet::EMPTY]);
        assert_eq!(covering_multiplicity(&r), 2);

        let bad = Cover::new(g2, vec![set(&[0])]).unwrap();
        assert!(uniform_refinement(&bad).is_err());
    }

    #[test]
    fn min_weight_cover_examples() {
        let none: Vec<AtomSet> = vec![set(&[0])];
        let sol = min_weight_cover(AtomSet::EMPTY, &none, &[Exact::one()]).unwrap();
        assert_eq!(sol.weight, Exact::zero());
        assert!(sol.chosen.is_empty());

        let cands = vec![set(&[0]), set(&[1]), set(&[0, 1])];
        let w = vec![Exact::ratio(3, 5), Exact::ratio(3, 5), Exact::one()];
        let sol = min_weight_cover(set(&[0, 1]), &cands, &w).unwrap();
        assert_eq!(sol.weight, Exact::one());
        assert_eq!(sol.chosen, vec![2]);

        let cands = vec![set(&[0]), set(&[1])];
        assert!(min_weight_cover(set(&[2]), &cands, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn min_weight_cover_zero_weights_and_duplicates() {
        let cands = vec![set(&[0, 1]), set(&[0, 1]), set(&[2]), set(&[1, 2])];
        let w = vec![5.0, 2.0, 0.0, 3.0];
        let sol = min_weight_cover(set(&[0, 1, 2]), &cands, &w).unwrap();
        assert_eq!(sol.weight, 2.0);
        assert_eq!(sol.chosen, vec![1, 2]);
    }

    #[test]
    fn partition_validation() {
        let g = ground(4);
        assert!(Partition::new(g, vec![set(&[0, 1]), set(&[1, 2, 3])]).is_err());
        assert!(Partition::new(g, vec![set(&[0, 1]), set(&[2])]).is_err());
        assert!(Partition::new(g, vec![set(&[0, 1, 2, 3]), AtomSet::EMPTY]).is_err());
    }

    #[test]
    fn refine_examples() {
        let g = ground(4);
        let p = Partition::new(g, vec![set(&[0, 1]), set(&[2, 3])]).unwrap();
        let q = Partition::new(g, vec![set(&[0, 2]), set(&[1, 3])]).unwrap();
        assert_eq!(refine_partitions(&p, &p).unwrap(), p);
        let r = refine_partitions(&p, &q).unwrap();
        assert_eq!(r.blocks(), &[set(&[0]), set(&[1]), set(&[2]), set(&[3])]);
        assert_eq!(refine_partitions(&Partition::whole(g), &q).unwrap(), q);
        assert!(r.refines(&p) && r.refines(&q));
        assert!(!p.refines(&q));
    }
}
