//! Covering numbers, `h_φ`, dominated measures and the classification probe.

mod classify;
pub mod lp;

pub use classify::{
    christensen_gap, classify, classify_with, convergence_diagnostic, default_xi_grid, ChristensenGap, ClassificationReport,
    ConvergenceReport, ConvergenceViolation, Trend, Verdict,
};
pub use lp::{solve_lp, LinearProgram, LpOutcome, LpSolution, OrderedField, RationalLP, Relation, Sense};

use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::algebra::{AtomSet, GroundSet};
use crate::error::{check_limit, invalid, Error, Result};
use crate::exact::Exact;
use crate::submeasure::{AtomMeasure, Submeasure};

/// Largest ground set for the full subset sweep in `h_φ` and the pathology LP.
pub const SWEEP_LIMIT: usize = 16;

/// Up to this many maximal sets, the covering LP gets every row at once.
const ALL_ROWS_LIMIT: usize = 64;
/// Rows added per round of constraint generation.
const ROWS_PER_ROUND: usize = 8;
/// Default cap on generator subsets explored above the sweep limit.
pub const DEFAULT_UNION_BUDGET: usize = 1_000_000;
/// Most generators accepted by the generator-subset pathology LP.
pub const PATHOLOGY_GENERATOR_LIMIT: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverTerm {
    pub set: AtomSet,
    pub multiplicity: u64,
}

/// A covering number together with witnesses on both sides of the LP.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoveringCertificate {
    /// `c(ℬ)`, always rational.
    pub value: Exact,
    /// Distinct non-empty sets handed to the solver.
    pub family_size: usize,
    /// Inclusion-maximal sets among them.
    pub maximal_sets: usize,
    /// A sequence from the family, listed with multiplicities.
    pub primal: Vec<CoverTerm>,
    /// Its length `m = Σ multiplicities`.
    pub length: u64,
    /// Its covering multiplicity `t`; `t/m = value`.
    pub multiplicity: u64,
    /// A measure with `ν(B) ≤ 1` on the family and `ν(1) = 1/value`.
    pub dual: Option<AtomMeasure>,
}

impl CoveringCertificate {
    fn empty(family_size: usize, maximal_sets: usize) -> Self {
        CoveringCertificate {
            value: Exact::zero(),
            family_size,
            maximal_sets,
            primal: Vec::new(),
            length: 0,
            multiplicity: 0,
            dual: None,
        }
    }
}

fn maximal_sets(family: &[AtomSet]) -> Vec<AtomSet> {
    let mut sets: Vec<AtomSet> = family.iter().copied().filter(|s| !s.is_empty()).collect();
    sets.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    sets.dedup();
    let mut kept: Vec<AtomSet> = Vec::new();
    for s in sets {
        if !kept.iter().any(|k| s.is_subset(*k)) {
            kept.push(s);
        }
    }
    kept.sort();
    kept
}

/// `c(ℬ) = sup t(𝒞)/m` over finite sequences `𝒞` from `family`.
///
/// Solved through the dual `max ν(1) s.t. ν(B) ≤ 1 (B ∈ ℬ), ν ≥ 0`, whose value
/// is `1/c`. Its optimal row multipliers are a fractional cover, which is
/// scaled to an integer sequence.
pub fn covering_number(ground: GroundSet, family: &[AtomSet]) -> Result<CoveringCertificate> {
    if family.is_empty() {
        return invalid("covering number of an empty family");
    }
    for &s in family {
        ground.check(s)?;
    }
    let distinct: HashSet<AtomSet> = family.iter().copied().filter(|s| !s.is_empty()).collect();
    covering_number_of_maximal(ground, &maximal_sets(family), distinct.len())
}

fn covering_number_of_maximal(ground: GroundSet, maximal: &[AtomSet], family_size: usize) -> Result<CoveringCertificate> {
    let n = ground.n_atoms();
    let reach = maximal.iter().fold(AtomSet::EMPTY, |u, s| u.union(*s));
    if reach != ground.full() {
        return Ok(CoveringCertificate::empty(family_size, maximal.len()));
    }

    let mut active: Vec<usize> = if maximal.len() <= ALL_ROWS_LIMIT {
        (0..maximal.len()).collect()
    } else {
        let mut rows: Vec<usize> = (0..n)
            .map(|a| maximal.iter().position(|s| s.contains(a)).expect("every atom is reached"))
            .collect();
        rows.sort_unstable();
        rows.dedup();
        rows
    };
    let objective = vec![BigRational::one(); n];
    let row = |s: AtomSet| -> Vec<BigRational> {
        (0..n)
            .map(|a| if s.contains(a) { BigRational::one() } else { BigRational::zero() })
            .collect()
    };
    let solution = loop {
        let mut lp = RationalLP::new(Sense::Maximize, objective.clone());
        for &r in &active {
            lp = lp.constrain(row(maximal[r]), Relation::Le, BigRational::one());
        }
        let sol = match solve_lp(&lp)? {
            LpOutcome::Optimal(s) => s,
            other => unreachable!("covering LP is feasible and bounded, got {other:?}"),
        };
        let violated = most_violated_rows(maximal, &sol.x, &active);
        if violated.is_empty() {
            break sol;
        }
        active.extend(violated);
    };

    let v = solution.value.clone();
    let value = v.recip();
    let x: Vec<BigRational> = solution.duals.iter().map(|y| y / &v).collect();
    let scale = x
        .iter()
        .filter(|q| !q.is_zero())
        .fold(BigInt::one(), |l, q| l.lcm(q.denom()));
    let mut primal = Vec::new();
    let mut hits = vec![0u64; n];
    for (q, &r) in x.iter().zip(&active) {
        if q.is_zero() {
            continue;
        }
        let count = (q * BigRational::from_integer(scale.clone())).to_integer();
        let count = count.to_u64().ok_or(Error::LimitExceeded {
            what: "cover certificate multiplicity",
            actual: usize::MAX,
            limit: u64::MAX as usize,
        })?;
        for a in maximal[r].iter() {
            hits[a] += count;
        }
        primal.push(CoverTerm { set: maximal[r], multiplicity: count });
    }
    primal.sort_by(|a, b| a.set.cmp(&b.set));
    let length = primal.iter().map(|t| t.multiplicity).sum();
    let multiplicity = hits.iter().copied().min().unwrap_or(0);
    let dual = AtomMeasure::new(ground, solution.x.into_iter().map(Exact::rational).collect())?;
    Ok(CoveringCertificate {
        value: Exact::rational(value),
        family_size,
        maximal_sets: maximal.len(),
        primal,
        length,
        multiplicity,
        dual: Some(dual),
    })
}

/// Rows of `maximal` outside `active` with `ν(B) > 1`, most violated first.
fn most_violated_rows(maximal: &[AtomSet], nu: &[BigRational], active: &[usize]) -> Vec<usize> {
    let approx: Vec<f64> = nu.iter().map(|q| q.to_f64().unwrap_or(f64::INFINITY)).collect();
    let mut candidates: Vec<(f64, usize)> = maximal
        .iter()
        .enumerate()
        .map(|(i, s)| (s.iter().map(|a| approx[a]).sum::<f64>(), i))
        .filter(|(v, _)| *v > 1.0 - 1e-9)
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let one = BigRational::one();
    let mut out = Vec::new();
    for (_, i) in candidates {
        if active.contains(&i) {
            continue;
        }
        let exact: BigRational = maximal[i].iter().map(|a| nu[a].clone()).sum();
        if exact > one {
            out.push(i);
            if out.len() == ROWS_PER_ROUND {
                break;
            }
        }
    }
    out
}

/// How the family `{A : φ(A) ≤ ξ}` was enumerated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMethod {
    /// Every subset of the ground set.
    Exhaustive,
    /// Unions of generator sub-collections of total weight at most `ξ`.
    GeneratorUnions,
}

#[derive(Clone, Copy, Debug)]
pub struct HPhiOptions {
    pub sweep_limit: usize,
    pub union_budget: usize,
}

impl Default for HPhiOptions {
    fn default() -> Self {
        HPhiOptions { sweep_limit: SWEEP_LIMIT, union_budget: DEFAULT_UNION_BUDGET }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HPhiResult {
    pub xi: Exact,
    /// `h_φ(ξ) = c({A : φ(A) ≤ ξ})/ξ`.
    pub h: Exact,
    pub xi_h: Exact,
    pub covering: CoveringCertificate,
    /// `ξ·ν`: a measure with `μ(A) ≤ ξ` whenever `φ(A) ≤ ξ` and `μ(1) = 1/h`.
    pub dual: Option<AtomMeasure>,
    pub method: SweepMethod,
    /// Set when the enumeration budget ran out; `h` is then only a lower bound.
    pub lower_bound: bool,
}

/// Precomputed data for evaluating `h_φ` at many `ξ`.
pub(crate) enum HPhiSource {
    Table(Vec<Exact>),
    Generators(Vec<(AtomSet, Exact)>),
}

impl HPhiSource {
    pub(crate) fn new(phi: &Submeasure, opts: &HPhiOptions) -> Result<Self> {
        let n = phi.ground().n_atoms();
        if n <= opts.sweep_limit.min(SWEEP_LIMIT) {
            return Ok(HPhiSource::Table(phi.value_table(SWEEP_LIMIT)?));
        }
        match phi.cover_family() {
            Some(family) => {
                let (sets, weights) = family.candidates();
                let mut gens: Vec<(AtomSet, Exact)> = sets.into_iter().zip(weights).collect();
                gens.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
                Ok(HPhiSource::Generators(gens))
            }
            None => Err(Error::LimitExceeded {
                what: "atoms for the h_phi sweep",
                actual: n,
                limit: opts.sweep_limit.min(SWEEP_LIMIT),
            }),
        }
    }
}

pub fn h_phi(phi: &Submeasure, xi: &Exact) -> Result<HPhiResult> {
    h_phi_with(phi, xi, &HPhiOptions::default())
}

pub fn h_phi_with(phi: &Submeasure, xi: &Exact, opts: &HPhiOptions) -> Result<HPhiResult> {
    let source = HPhiSource::new(phi, opts)?;
    h_phi_from(phi.ground(), &source, xi, opts)
}

pub(crate) fn h_phi_from(ground: GroundSet, source: &HPhiSource, xi: &Exact, opts: &HPhiOptions) -> Result<HPhiResult> {
    if *xi <= Exact::zero() {
        return invalid(format!("xi must be positive, got {xi}"));
    }
    let n = ground.n_atoms();
    let (maximal, family_size, method, lower_bound) = match source {
        HPhiSource::Table(table) => {
            let inside: Vec<bool> = table.iter().map(|v| v <= xi).collect();
            let family_size = inside.iter().skip(1).filter(|&&b| b).count();
            // With φ monotone the family is closed under subsets, so a member
            // is maximal when no one-atom extension is a member.
            let maximal: Vec<AtomSet> = (1..table.len())
                .filter(|&m| inside[m] && (0..n).all(|a| m >> a & 1 == 1 || !inside[m | 1 << a]))
                .map(|m| AtomSet(m as u128))
                .collect();
            (maximal, family_size, SweepMethod::Exhaustive, false)
        }
        HPhiSource::Generators(gens) => {
            let (unions, complete) = generator_unions(gens, xi, opts.union_budget);
            let maximal = maximal_sets(&unions);
            (maximal, unions.len(), SweepMethod::GeneratorUnions, !complete)
        }
    };
    let covering = covering_number_of_maximal(ground, &maximal, family_size)?;
    let h = &covering.value / xi;
    let xi_h = covering.value.clone();
    let dual = if covering.value.is_zero() {
        None
    } else {
        covering.dual.as_ref().map(|nu| nu.scaled(xi))
    };
    Ok(HPhiResult { xi: xi.clone(), h, xi_h, covering, dual, method, lower_bound })
}

/// Distinct unions `⋃S` over sub-collections `S` of weight at most `xi`.
/// Generators must be sorted by weight. Returns `false` if the budget ran out.
fn generator_unions(gens: &[(AtomSet, Exact)], xi: &Exact, budget: usize) -> (Vec<AtomSet>, bool) {
    struct Walk<'a> {
        gens: &'a [(AtomSet, Exact)],
        xi: &'a Exact,
        seen: HashSet<AtomSet>,
        visits: usize,
        budget: usize,
    }
    impl Walk<'_> {
        fn go(&mut self, start: usize, weight: &Exact, union: AtomSet) -> bool {
            self.visits += 1;
            if self.visits > self.budget {
                return false;
            }
            self.seen.insert(union);
            for j in start..self.gens.len() {
                let (set, w) = &self.gens[j];
                let next = weight + w;
                if next > *self.xi {
                    break;
                }
                if set.is_subset(union) {
                    continue;
                }
                if !self.go(j + 1, &next, union.union(*set)) {
                    return false;
                }
            }
            true
        }
    }
    let mut walk = Walk { gens, xi, seen: HashSet::new(), visits: 0, budget };
    let complete = walk.go(0, &Exact::zero(), AtomSet::EMPTY);
    let mut unions: Vec<AtomSet> = walk.seen.into_iter().filter(|s| !s.is_empty()).collect();
    unions.sort();
    (unions, complete)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathologyIndex {
    /// `max μ(1)` over measures `μ ≤ φ`.
    pub mass: Exact,
    pub witness: AtomMeasure,
    /// Constraint rows generated before the optimum was certified.
    pub rows_used: usize,
}

/// The largest total mass of a measure dominated by `φ`; zero means no
/// non-zero measure sits below `φ` on this algebra.
///
/// Up to [`SWEEP_LIMIT`] atoms the constraints `μ(A) ≤ φ(A)` range over all
/// subsets. Larger cover-generated functions use the equivalent constraints
/// `μ(⋃S) ≤ Σ_{j∈S} w_j` over generator sub-collections `S`.
pub fn pathology_index(phi: &Submeasure) -> Result<PathologyIndex> {
    let ground = phi.ground();
    let n = ground.n_atoms();
    let rows: Box<dyn Fn(&[Exact], &[AtomSet]) -> Vec<(AtomSet, Exact)>>;
    let singleton_caps: Vec<Exact>;
    if n <= SWEEP_LIMIT {
        let table = phi.value_table(SWEEP_LIMIT)?;
        singleton_caps = (0..n).map(|a| table[1 << a].clone()).collect();
        rows = Box::new(move |mu: &[Exact], active: &[AtomSet]| {
            let approx: Vec<f64> = mu.iter().map(Exact::to_f64).collect();
            let candidates = (1..table.len()).filter_map(|m| {
                let s = AtomSet(m as u128);
                let gap = s.iter().map(|a| approx[a]).sum::<f64>() - table[m].to_f64();
                (gap > -1e-9).then_some((gap, s, table[m].clone()))
            });
            pick_violated(candidates.collect(), mu, active)
        });
    } else {
        let family = phi.cover_family().ok_or(Error::LimitExceeded {
            what: "atoms for the pathology LP",
            actual: n,
            limit: SWEEP_LIMIT,
        })?;
        let (sets, weights) = family.candidates();
        check_limit("generators for the pathology LP", sets.len(), PATHOLOGY_GENERATOR_LIMIT)?;
        singleton_caps = (0..n).map(|a| phi.eval(AtomSet::singleton(a))).collect();
        rows = Box::new(move |mu: &[Exact], active: &[AtomSet]| {
            let approx: Vec<f64> = mu.iter().map(Exact::to_f64).collect();
            // Cheapest weight for each distinct union of generators.
            let mut best: std::collections::HashMap<AtomSet, Exact> = std::collections::HashMap::new();
            for mask in 1u64..(1 << sets.len()) {
                let mut u = AtomSet::EMPTY;
                let mut w = Exact::zero();
                for (j, (s, wj)) in sets.iter().zip(&weights).enumerate() {
                    if mask >> j & 1 == 1 {
                        u = u.union(*s);
                        w = &w + wj;
                    }
                }
                match best.get(&u) {
                    Some(b) if *b <= w => {}
                    _ => {
                        best.insert(u, w);
                    }
                }
            }
            let candidates = best.into_iter().filter_map(|(s, w)| {
                let gap = s.iter().map(|a| approx[a]).sum::<f64>() - w.to_f64();
                (gap > -1e-9).then_some((gap, s, w))
            });
            pick_violated(candidates.collect(), mu, active)
        });
    }

    let mut active: Vec<(AtomSet, Exact)> = (0..n).map(|a| (AtomSet::singleton(a), singleton_caps[a].clone())).collect();
    loop {
        let mut lp = LinearProgram::<Exact>::new(Sense::Maximize, vec![Exact::one(); n]);
        for (s, cap) in &active {
            let coeffs = (0..n).map(|a| if s.contains(a) { Exact::one() } else { Exact::zero() }).collect();
            lp = lp.constrain(coeffs, Relation::Le, cap.clone());
        }
        let sol = solve_lp(&lp)?.optimal().expect("the zero measure is feasible and singletons bound the mass");
        let sets: Vec<AtomSet> = active.iter().map(|(s, _)| *s).collect();
        let violated = rows(&sol.x, &sets);
        if violated.is_empty() {
            let witness = AtomMeasure::new(ground, sol.x)?;
            return Ok(PathologyIndex { mass: sol.value, witness, rows_used: active.len() });
        }
        active.extend(violated);
    }
}

fn pick_violated(mut candidates: Vec<(f64, AtomSet, Exact)>, mu: &[Exact], active: &[AtomSet]) -> Vec<(AtomSet, Exact)> {
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut out = Vec::new();
    for (_, s, cap) in candidates {
        if active.contains(&s) {
            continue;
        }
        let load: Exact = s.iter().map(|a| &mu[a]).sum();
        if load > cap {
            out.push((s, cap));
            if out.len() == ROWS_PER_ROUND {
                break;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::submeasure::{example_easy, MRule, WeightedCoverFamily};

    fn g(n: usize) -> GroundSet {
        GroundSet::new(n).unwrap()
    }

    fn check_certificate(ground: GroundSet, family: &[AtomSet], cert: &CoveringCertificate) {
        if cert.value.is_zero() {
            return;
        }
        let value = cert.value.to_rational().unwrap();
        assert_eq!(
            BigRational::new(BigInt::from(cert.multiplicity), BigInt::from(cert.length)),
            value
        );
        for t in &cert.primal {
            assert!(family.iter().any(|s| t.set.is_subset(*s)));
        }
        let dual = cert.dual.as_ref().unwrap();
        for s in family {
            assert!(dual.eval(*s) <= Exact::one());
        }
        assert_eq!(dual.mass() * cert.value.clone(), Exact::one());
        let hits: Vec<u64> = (0..ground.n_atoms())
            .map(|a| cert.primal.iter().filter(|t| t.set.contains(a)).map(|t| t.multiplicity).sum())
            .collect();
        assert_eq!(*hits.iter().min().unwrap(), cert.multiplicity);
    }

    #[test]
    fn covering_number_examples() {
        let ground = g(4);
        let whole = [ground.full()];
        let c = covering_number(ground, &whole).unwrap();
        assert_eq!(c.value, Exact::one());
        check_certificate(ground, &whole, &c);

        let singles = ground.singletons();
        let c = covering_number(ground, &singles).unwrap();
        assert_eq!(c.value, Exact::ratio(1, 4));
        assert_eq!(c.length, 4);
        assert_eq!(c.multiplicity, 1);
        check_certificate(ground, &singles, &c);

        let pairs: Vec<AtomSet> = ground.subsets().filter(|s| s.len() == 2).collect();
        let c = covering_number(ground, &pairs).unwrap();
        assert_eq!(c.value, Exact::ratio(1, 2));
        check_certificate(ground, &pairs, &c);

        let c = covering_number(ground, &[AtomSet::EMPTY]).unwrap();
        assert_eq!(c.value, Exact::zero());
        assert!(c.primal.is_empty());
        assert!(covering_number(ground, &[]).is_err());
    }

    #[test]
    fn pairs_value_matches_short_sequences() {
        // Every sequence of length ≤ 6 from the 2-subsets of 4 atoms has t/m ≤ 1/2,
        // and (01, 23) attains it.
        let ground = g(4);
        let pairs: Vec<AtomSet> = ground.subsets().filter(|s| s.len() == 2).collect();
        let mut best = BigRational::zero();
        fn walk(pairs: &[AtomSet], seq: &mut Vec<usize>, start: usize, best: &mut BigRational) {
            if !seq.is_empty() {
                let t = (0..4).map(|a| seq.iter().filter(|&&i| pairs[i].contains(a)).count()).min().unwrap();
                let r = BigRational::new(BigInt::from(t), BigInt::from(seq.len()));
                if r > *best {
                    *best = r;
                }
            }
            if seq.len() == 6 {
                return;
            }
            for i in start..pairs.len() {
                seq.push(i);
                walk(pairs, seq, i, best);
                seq.pop();
            }
        }
        walk(&pairs, &mut Vec::new(), 0, &mut best);
        assert_eq!(Exact::rational(best), covering_number(ground, &pairs).unwrap().value);
    }

    #[test]
    fn constraint_generation_on_large_families() {
        // All 3-subsets of 9 atoms: 84 maximal sets, value 3/9.
        let ground = g(9);
        let triples: Vec<AtomSet> = ground.subsets().filter(|s| s.len() == 3).collect();
        let c = covering_number(ground, &triples).unwrap();
        assert_eq!(c.value, Exact::ratio(1, 3));
        check_certificate(ground, &triples, &c);
    }

    #[test]
    fn h_phi_examples() {
        let ground = g(6);
        let uniform = Submeasure::measure(AtomMeasure::uniform(ground, &Exact::one()));
        let r = h_phi(&uniform, &Exact::ratio(1, 2)).unwrap();
        assert_eq!(r.h, Exact::one());
        assert_eq!(r.covering.value, Exact::ratio(1, 2));
        let dual = r.dual.unwrap();
        assert_eq!(dual.mass(), Exact::one());

        let constant = Submeasure::constant_nonempty(ground, Exact::one()).unwrap();
        let r = h_phi(&constant, &Exact::ratio(1, 2)).unwrap();
        assert_eq!(r.h, Exact::zero());
        assert!(r.dual.is_none());

        assert!(h_phi(&uniform, &Exact::zero()).is_err());
    }

    #[test]
    fn h_phi_never_exceeds_inverse_xi() {
        let ground = g(5);
        let phi = Submeasure::cover_generated(
            WeightedCoverFamily::new(
                ground,
                vec![
                    (AtomSet::from_atoms([0, 1]), Exact::ratio(1, 3)),
                    (AtomSet::from_atoms([2, 3, 4]), Exact::ratio(1, 2)),
                    (AtomSet::from_atoms([1, 2]), Exact::inv_sqrt(8)),
                ],
                Exact::one(),
            )
            .unwrap(),
        );
        for xi in [Exact::ratio(1, 8), Exact::ratio(1, 3), Exact::inv_sqrt(8), Exact::ratio(3, 4), Exact::one()] {
            let r = h_phi(&phi, &xi).unwrap();
            assert!(r.xi_h <= Exact::one());
            if let Some(mu) = &r.dual {
                for s in ground.subsets() {
                    if phi.eval(s) <= xi {
                        assert!(mu.eval(s) <= xi);
                    }
                }
            }
        }
    }

    #[test]
    fn generator_unions_agree_with_sweep() {
        let ex = example_easy(2, &MRule::Cube).unwrap();
        let sweep = HPhiOptions::default();
        let unions = HPhiOptions { sweep_limit: 0, union_budget: DEFAULT_UNION_BUDGET };
        for xi in [Exact::ratio(1, 2), Exact::inv_sqrt(8), Exact::ratio(3, 4), Exact::ratio(1, 5)] {
            let a = h_phi_with(&ex.phi, &xi, &sweep).unwrap();
            let b = h_phi_with(&ex.phi, &xi, &unions).unwrap();
            assert_eq!(a.h, b.h, "xi = {xi}");
            assert_eq!(b.method, SweepMethod::GeneratorUnions);
            assert!(!b.lower_bound);
        }
        let starved = HPhiOptions { sweep_limit: 0, union_budget: 2 };
        assert!(h_phi_with(&ex.phi, &Exact::one(), &starved).unwrap().lower_bound);
    }

    #[test]
    fn pathology_examples() {
        let ground = g(4);
        let w = vec![Exact::ratio(1, 2), Exact::ratio(1, 3), Exact::zero(), Exact::inv_sqrt(2)];
        let mu = Submeasure::make_measure(ground, w.clone()).unwrap();
        let p = pathology_index(&mu).unwrap();
        assert_eq!(p.mass, mu.total());
        assert_eq!(p.witness.weights(), &w[..]);

        let constant = Submeasure::constant_nonempty(ground, Exact::one()).unwrap();
        assert_eq!(pathology_index(&constant).unwrap().mass, Exact::one());
        assert_eq!(pathology_index(&Submeasure::zero(ground)).unwrap().mass, Exact::zero());
    }

    #[test]
    fn pathology_by_generators_matches_sweep() {
        let ex = example_easy(3, &MRule::Cube).unwrap();
        let p = pathology_index(&ex.phi).unwrap();
        assert!(p.mass <= ex.phi.total());
        for s in [ex.ground().full(), ex.index.block(0, 3), ex.index.block(1, 2)] {
            assert!(p.witness.eval(s) <= ex.phi.eval(s));
        }
        // The uniform probability measure sits below φ because M_n ≥ n², and
        // no dominated measure can exceed φ(1) = 1.
        assert_eq!(p.mass, Exact::one());

        let small = example_easy(2, &MRule::Cube).unwrap();
        let sweep = pathology_index(&small.phi).unwrap();
        assert_eq!(sweep.mass, Exact::one());
    }
}
