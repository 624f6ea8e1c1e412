use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::Submeasure;
use crate::algebra::AtomSet;
use crate::error::{check_limit, invalid, Result};
use crate::exact::Exact;

/// Largest ground set for the exhaustive audit.
pub const EXHAUSTIVE_AUDIT_LIMIT: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonzeroOnEmpty,
    NotMonotone,
    NotSubadditive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditViolation {
    pub kind: ViolationKind,
    pub a: AtomSet,
    pub b: AtomSet,
    pub phi_a: Exact,
    pub phi_b: Exact,
    pub phi_union: Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub pairs_checked: u64,
    pub exhaustive: bool,
    pub seed: Option<u64>,
    pub passed: bool,
    pub counterexample: Option<AuditViolation>,
}

fn check_pair(a: AtomSet, b: AtomSet, va: &Exact, vb: &Exact, vu: &Exact) -> Option<AuditViolation> {
    let violation = |kind| AuditViolation {
        kind,
        a,
        b,
        phi_a: va.clone(),
        phi_b: vb.clone(),
        phi_union: vu.clone(),
    };
    if va > vu || vb > vu {
        return Some(violation(ViolationKind::NotMonotone));
    }
    // Screen in floating point and only fall back to exact sums near ties.
    let (fa, fb, fu) = (va.to_f64(), vb.to_f64(), vu.to_f64());
    let clear = fu < (fa + fb) * (1.0 - 1e-9);
    if !clear && *vu > va + vb {
        return Some(violation(ViolationKind::NotSubadditive));
    }
    None
}

fn empty_check(phi: &Submeasure) -> Option<AuditViolation> {
    let v = phi.eval(AtomSet::EMPTY);
    (!num_traits::Zero::is_zero(&v)).then(|| AuditViolation {
        kind: ViolationKind::NonzeroOnEmpty,
        a: AtomSet::EMPTY,
        b: AtomSet::EMPTY,
        phi_a: v.clone(),
        phi_b: v.clone(),
        phi_union: v,
    })
}

/// Samples `trials` random pairs `(A, B)` (each atom in each set with
/// probability 1/2) and tests `φ(∅) = 0`, `φ(A), φ(B) ≤ φ(A∪B)` and
/// `φ(A∪B) ≤ φ(A) + φ(B)`. Stops at the first counterexample.
pub fn audit_submeasure(phi: &Submeasure, trials: u64, seed: u64) -> Result<AuditReport> {
    if trials == 0 {
        return invalid("audit needs at least one trial");
    }
    let mut report = AuditReport { pairs_checked: 0, exhaustive: false, seed: Some(seed), passed: true, counterexample: None };
    if let Some(v) = empty_check(phi) {
        report.passed = false;
        report.counterexample = Some(v);
        return Ok(report);
    }
    let full = phi.ground().full().0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let a = AtomSet(rng.random::<u128>() & full);
        let b = AtomSet(rng.random::<u128>() & full);
        let (va, vb, vu) = (phi.eval(a), phi.eval(b), phi.eval(a.union(b)));
        report.pairs_checked += 1;
        if let Some(v) = check_pair(a, b, &va, &vb, &vu) {
            report.passed = false;
            report.counterexample = Some(v);
            break;
        }
    }
    Ok(report)
}

/// Checks the axioms on every subset. Monotonicity is tested on all one-atom
/// extensions and subadditivity on all disjoint pairs, which together imply
/// both axioms for every pair.
pub fn audit_exhaustive(phi: &Submeasure) -> Result<AuditReport> {
    let n = phi.ground().n_atoms();
    check_limit("atoms for an exhaustive audit", n, EXHAUSTIVE_AUDIT_LIMIT)?;
    let table = phi.value_table(EXHAUSTIVE_AUDIT_LIMIT)?;
    let mut report = AuditReport { pairs_checked: 0, exhaustive: true, seed: None, passed: true, counterexample: None };
    if let Some(v) = empty_check(phi) {
        report.passed = false;
        report.counterexample = Some(v);
        return Ok(report);
    }
    let size = 1usize << n;
    let fail = |report: &mut AuditReport, v| {
        report.passed = false;
        report.counterexample = Some(v);
    };
    for mask in 0..size {
        for atom in 0..n {
            if mask >> atom & 1 == 1 {
                continue;
            }
            let bigger = mask | 1 << atom;
            report.pairs_checked += 1;
            if table[mask] > table[bigger] {
                let (a, b) = (AtomSet(mask as u128), AtomSet::singleton(atom));
                fail(&mut report, AuditViolation {
                    kind: ViolationKind::NotMonotone,
                    a,
                    b,
                    phi_a: table[mask].clone(),
                    phi_b: table[1 << atom].clone(),
                    phi_union: table[bigger].clone(),
                });
                return Ok(report);
            }
        }
    }
    for a in 1..size {
        // Iterate over non-empty subsets b of the complement with b > a so that
        // each unordered disjoint pair is seen once.
        let rest = (size - 1) & !a;
        let mut b = rest;
        while b > 0 {
            if b > a {
                report.pairs_checked += 1;
                let (va, vb, vu) = (&table[a], &table[b], &table[a | b]);
                if let Some(v) = check_pair(AtomSet(a as u128), AtomSet(b as u128), va, vb, vu) {
                    fail(&mut report, v);
                    return Ok(report);
                }
            }
            b = (b - 1) & rest;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::GroundSet;
    use crate::submeasure::WeightedCoverFamily;
    use num_traits::{One, Zero};

    #[test]
    fn measures_pass() {
        let g = GroundSet::new(6).unwrap();
        let mu = Submeasure::make_measure(g, (0..6).map(|k| Exact::ratio(k, 5)).collect()).unwrap();
        assert!(audit_submeasure(&mu, 500, 1).unwrap().passed);
        assert!(audit_exhaustive(&mu).unwrap().passed);
    }

    #[test]
    fn squared_cardinality_fails_subadditivity() {
        let g = GroundSet::new(4).unwrap();
        let sq = Submeasure::tabulate(g, |s| Exact::integer((s.len() * s.len()) as i64)).unwrap();
        let r = audit_submeasure(&sq, 500, 7).unwrap();
        assert!(!r.passed);
        assert_eq!(r.counterexample.unwrap().kind, ViolationKind::NotSubadditive);
        let r = audit_exhaustive(&sq).unwrap();
        assert_eq!(r.counterexample.unwrap().kind, ViolationKind::NotSubadditive);
    }

    #[test]
    fn cover_generated_passes() {
        let g = GroundSet::new(7).unwrap();
        let gens = vec![
            (AtomSet::from_atoms([0, 1, 2]), Exact::ratio(1, 2)),
            (AtomSet::from_atoms([2, 3]), Exact::inv_sqrt(8)),
            (AtomSet::from_atoms([4, 5, 6]), Exact::ratio(2, 3)),
            (AtomSet::from_atoms([6]), Exact::inv_sqrt(27)),
        ];
        let phi = Submeasure::cover_generated(WeightedCoverFamily::new(g, gens, Exact::one()).unwrap());
        assert!(audit_submeasure(&phi, 2000, 3).unwrap().passed);
        assert!(audit_exhaustive(&phi).unwrap().passed);
    }

    #[test]
    fn non_monotone_detected() {
        let g = GroundSet::new(2).unwrap();
        let vals = vec![Exact::zero(), Exact::integer(2), Exact::integer(1), Exact::integer(1)];
        let t = Submeasure::table(g, vals).unwrap();
        let r = audit_exhaustive(&t).unwrap();
        assert_eq!(r.counterexample.unwrap().kind, ViolationKind::NotMonotone);
    }
}
