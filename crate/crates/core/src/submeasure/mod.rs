//! Submeasures on finite set algebras and their concrete constructions.

mod audit;
mod berry_esseen;
mod example_easy;

pub use audit::{audit_exhaustive, audit_submeasure, AuditReport, AuditViolation, ViolationKind, EXHAUSTIVE_AUDIT_LIMIT};
pub use berry_esseen::{berry_esseen_params, BerryEsseenChecks, BerryEsseenLevel, BerryEsseenParams, Theta, MAX_BERRY_ESSEEN_DEPTH};
pub use example_easy::{
    example_easy, example_easy_check, ExampleEasy, ExampleEasyCheck, ExampleEasyCounterexample, LevelBlockIndex, MRule, EXAMPLE_EXHAUSTIVE_LIMIT,
};

use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::algebra::{min_weight_cover, AtomSet, GroundSet};
use crate::error::{check_limit, invalid, Result};
use crate::exact::Exact;

/// Largest ground set for table-backed submeasures and full value tables.
pub const TABLE_LIMIT: usize = 20;

/// A measure given by per-atom weights. Serializes as the weight list.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(into = "Vec<Exact>")]
pub struct AtomMeasure {
    ground: GroundSet,
    atom_weights: Vec<Exact>,
}

impl From<AtomMeasure> for Vec<Exact> {
    fn from(m: AtomMeasure) -> Self {
        m.atom_weights
    }
}

impl AtomMeasure {
    pub fn new(ground: GroundSet, atom_weights: Vec<Exact>) -> Result<Self> {
        if atom_weights.len() != ground.n_atoms() {
            return invalid(format!(
                "{} atom weights for {} atoms",
                atom_weights.len(),
                ground.n_atoms()
            ));
        }
        if atom_weights.iter().any(Exact::is_negative) {
            return invalid("measure weights must be non-negative");
        }
        Ok(AtomMeasure { ground, atom_weights })
    }

    /// Every atom gets `total / n`.
    pub fn uniform(ground: GroundSet, total: &Exact) -> Self {
        let each = total / &Exact::integer(ground.n_atoms() as i64);
        AtomMeasure { ground, atom_weights: vec![each; ground.n_atoms()] }
    }

    pub fn ground(&self) -> GroundSet {
        self.ground
    }

    pub fn weights(&self) -> &[Exact] {
        &self.atom_weights
    }

    pub fn eval(&self, set: AtomSet) -> Exact {
        set.iter().map(|a| &self.atom_weights[a]).sum()
    }

    pub fn mass(&self) -> Exact {
        self.atom_weights.iter().sum()
    }

    pub fn scaled(&self, k: &Exact) -> AtomMeasure {
        AtomMeasure {
            ground: self.ground,
            atom_weights: self.atom_weights.iter().map(|w| w * k).collect(),
        }
    }
}

/// Generators `(C_j, w_j)` together with the weight of covering by the whole
/// space. The induced submeasure is the cheapest cover by generators.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedCoverFamily {
    ground: GroundSet,
    generators: Vec<(AtomSet, Exact)>,
    fallback_weight: Exact,
}

impl WeightedCoverFamily {
    pub fn new(ground: GroundSet, generators: Vec<(AtomSet, Exact)>, fallback_weight: Exact) -> Result<Self> {
        for (set, w) in &generators {
            ground.check(*set)?;
            if *w <= Exact::zero() {
                return invalid(format!("generator {set} has non-positive weight {w}"));
            }
        }
        if fallback_weight <= Exact::zero() {
            return invalid("whole-space weight must be positive");
        }
        Ok(WeightedCoverFamily { ground, generators, fallback_weight })
    }

    pub fn ground(&self) -> GroundSet {
        self.ground
    }

    pub fn generators(&self) -> &[(AtomSet, Exact)] {
        &self.generators
    }

    pub fn fallback_weight(&self) -> &Exact {
        &self.fallback_weight
    }

    /// Generator sets and weights with the whole space appended last.
    pub fn candidates(&self) -> (Vec<AtomSet>, Vec<Exact>) {
        let mut sets: Vec<AtomSet> = self.generators.iter().map(|(s, _)| *s).collect();
        let mut weights: Vec<Exact> = self.generators.iter().map(|(_, w)| w.clone()).collect();
        sets.push(self.ground.full());
        weights.push(self.fallback_weight.clone());
        (sets, weights)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubmeasureKind {
    Measure,
    Table,
    CoverGenerated,
    ExampleEasy,
}

#[derive(Clone, Debug)]
enum Repr {
    Measure(AtomMeasure),
    Table(Arc<Vec<Exact>>),
    Cover {
        family: WeightedCoverFamily,
        sets: Vec<AtomSet>,
        weights: Vec<Exact>,
    },
}

/// A set function on all subsets of a finite ground set.
///
/// The measure and cover constructors always yield genuine submeasures.
/// Table-backed functions are taken as given; use [`audit_submeasure`] to
/// test the axioms.
#[derive(Clone, Debug)]
pub struct Submeasure {
    ground: GroundSet,
    kind: SubmeasureKind,
    repr: Repr,
}

impl Submeasure {
    pub fn measure(m: AtomMeasure) -> Self {
        Submeasure { ground: m.ground, kind: SubmeasureKind::Measure, repr: Repr::Measure(m) }
    }

    pub fn make_measure(ground: GroundSet, atom_weights: Vec<Exact>) -> Result<Self> {
        AtomMeasure::new(ground, atom_weights).map(Submeasure::measure)
    }

    pub fn zero(ground: GroundSet) -> Self {
        Submeasure::measure(AtomMeasure { ground, atom_weights: vec![Exact::zero(); ground.n_atoms()] })
    }

    /// `A ↦ value` for every non-empty `A`.
    pub fn constant_nonempty(ground: GroundSet, value: Exact) -> Result<Self> {
        WeightedCoverFamily::new(ground, Vec::new(), value).map(Submeasure::cover_generated)
    }

    /// A function given by its value on every subset, indexed by bitmask.
    pub fn table(ground: GroundSet, values: Vec<Exact>) -> Result<Self> {
        check_limit("atoms for a value table", ground.n_atoms(), TABLE_LIMIT)?;
        if values.len() != 1usize << ground.n_atoms() {
            return invalid(format!(
                "value table has {} entries, expected 2^{}",
                values.len(),
                ground.n_atoms()
            ));
        }
        if !values[0].is_zero() {
            return invalid("a submeasure vanishes on the empty set");
        }
        if values.iter().any(Exact::is_negative) {
            return invalid("submeasure values must be non-negative");
        }
        Ok(Submeasure { ground, kind: SubmeasureKind::Table, repr: Repr::Table(Arc::new(values)) })
    }

    /// Tabulates `f` over all subsets.
    pub fn tabulate(ground: GroundSet, f: impl Fn(AtomSet) -> Exact) -> Result<Self> {
        check_limit("atoms for a value table", ground.n_atoms(), TABLE_LIMIT)?;
        Submeasure::table(ground, ground.subsets().map(f).collect())
    }

    pub fn cover_generated(family: WeightedCoverFamily) -> Self {
        let (sets, weights) = family.candidates();
        Submeasure {
            ground: family.ground,
            kind: SubmeasureKind::CoverGenerated,
            repr: Repr::Cover { family, sets, weights },
        }
    }

    pub(crate) fn with_kind(mut self, kind: SubmeasureKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn ground(&self) -> GroundSet {
        self.ground
    }

    pub fn kind(&self) -> SubmeasureKind {
        self.kind
    }

    pub fn as_measure(&self) -> Option<&AtomMeasure> {
        match &self.repr {
            Repr::Measure(m) => Some(m),
            _ => None,
        }
    }

    pub fn cover_family(&self) -> Option<&WeightedCoverFamily> {
        match &self.repr {
            Repr::Cover { family, .. } => Some(family),
            _ => None,
        }
    }

    pub fn eval(&self, set: AtomSet) -> Exact {
        debug_assert!(self.ground.contains(set));
        match &self.repr {
            Repr::Measure(m) => m.eval(set),
            Repr::Table(t) => t[set.0 as usize].clone(),
            Repr::Cover { sets, weights, .. } => {
                min_weight_cover(set, sets, weights)
                    .expect("the whole space covers every set")
                    .weight
            }
        }
    }

    /// `φ(1)`.
    pub fn total(&self) -> Exact {
        self.eval(self.ground.full())
    }

    /// Values on all `2^n` subsets, indexed by bitmask.
    ///
    /// Cover-generated functions use the recursion
    /// `φ(A) = min { w_j + φ(A ∖ C_j) : C_j ∋ min A }`, which visits subsets
    /// in increasing mask order.
    pub fn value_table(&self, limit: usize) -> Result<Vec<Exact>> {
        let n = self.ground.n_atoms();
        check_limit("atoms for a value table", n, limit.min(TABLE_LIMIT))?;
        let size = 1usize << n;
        match &self.repr {
            Repr::Table(t) => Ok(t.as_ref().clone()),
            Repr::Measure(m) => {
                let mut out: Vec<Exact> = Vec::with_capacity(size);
                out.push(Exact::zero());
                for mask in 1..size {
                    let low = mask.trailing_zeros() as usize;
                    let v = &out[mask & (mask - 1)] + &m.atom_weights[low];
                    out.push(v);
                }
                Ok(out)
            }
            Repr::Cover { sets, weights, .. } => {
                let mut out: Vec<Exact> = Vec::with_capacity(size);
                out.push(Exact::zero());
                for mask in 1..size {
                    let low = mask.trailing_zeros() as usize;
                    let mut best: Option<Exact> = None;
                    for (s, w) in sets.iter().zip(weights) {
                        if !s.contains(low) {
                            continue;
                        }
                        let rest = mask & !(s.0 as usize);
                        let v = w + &out[rest];
                        if best.as_ref().is_none_or(|b| v < *b) {
                            best = Some(v);
                        }
                    }
                    out.push(best.expect("the whole space contains every atom"));
                }
                Ok(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn g(n: usize) -> GroundSet {
        GroundSet::new(n).unwrap()
    }

    fn set(atoms: &[usize]) -> AtomSet {
        AtomSet::from_atoms(atoms.iter().copied())
    }

    #[test]
    fn measure_examples() {
        let m = Submeasure::make_measure(g(4), vec![Exact::ratio(1, 4); 4]).unwrap();
        assert_eq!(m.eval(set(&[0, 1])), Exact::ratio(1, 2));
        let z = Submeasure::zero(g(4));
        assert_eq!(z.eval(set(&[0, 3])), Exact::zero());
        let m = Submeasure::make_measure(g(3), vec![Exact::integer(1), Exact::integer(2), Exact::integer(3)]).unwrap();
        assert_eq!(m.eval(set(&[0, 2])), Exact::integer(4));
        assert!(Submeasure::make_measure(g(2), vec![Exact::integer(1), Exact::integer(-1)]).is_err());
    }

    #[test]
    fn cover_generated_examples() {
        let n = 5;
        let gens = (0..n).map(|a| (AtomSet::singleton(a), Exact::ratio(1, n as i64))).collect();
        let phi = Submeasure::cover_generated(WeightedCoverFamily::new(g(n), gens, Exact::one()).unwrap());
        assert_eq!(phi.eval(AtomSet::EMPTY), Exact::zero());
        assert_eq!(phi.eval(set(&[3])), Exact::ratio(1, 5));
        assert_eq!(phi.eval(g(n).full()), Exact::one());
    }

    #[test]
    fn value_table_matches_pointwise_evaluation() {
        let ground = g(5);
        let gens = vec![
            (set(&[0, 1]), Exact::ratio(1, 3)),
            (set(&[1, 2, 3]), Exact::inv_sqrt(8)),
            (set(&[4]), Exact::ratio(1, 7)),
            (set(&[0, 4]), Exact::inv_sqrt(27)),
        ];
        let phi = Submeasure::cover_generated(WeightedCoverFamily::new(ground, gens, Exact::one()).unwrap());
        let table = phi.value_table(16).unwrap();
        for s in ground.subsets() {
            assert_eq!(table[s.0 as usize], phi.eval(s), "at {s}");
        }
        let mu = Submeasure::make_measure(ground, (1..=5).map(|k| Exact::ratio(k, 9)).collect()).unwrap();
        let table = mu.value_table(16).unwrap();
        for s in ground.subsets() {
            assert_eq!(table[s.0 as usize], mu.eval(s));
        }
    }

    #[test]
    fn table_validation() {
        assert!(Submeasure::table(g(2), vec![Exact::zero(); 3]).is_err());
        assert!(Submeasure::table(g(1), vec![Exact::one(), Exact::one()]).is_err());
        let t = Submeasure::tabulate(g(3), |s| Exact::integer(s.len() as i64)).unwrap();
        assert_eq!(t.eval(set(&[0, 2])), Exact::integer(2));
        assert_eq!(t.kind(), SubmeasureKind::Table);
    }

    #[test]
    fn rejects_non_positive_generators() {
        assert!(WeightedCoverFamily::new(g(2), vec![(set(&[0]), Exact::zero())], Exact::one()).is_err());
        assert!(WeightedCoverFamily::new(g(2), vec![], Exact::zero()).is_err());
    }
}
