//! Finite-grid evidence for the elliptic / parabolic / hyperbolic trichotomy.

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::{h_phi_from, pathology_index, CoveringCertificate, HPhiOptions, HPhiResult, HPhiSource};
use crate::error::{invalid, Result};
use crate::exact::Exact;
use crate::submeasure::Submeasure;

/// Labels are "-consistent" because a finite grid cannot certify a limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    EllipticConsistent,
    ParabolicConsistent,
    HyperbolicConsistent,
    Inconclusive,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::EllipticConsistent => "elliptic-consistent",
            Verdict::ParabolicConsistent => "parabolic-consistent",
            Verdict::HyperbolicConsistent => "hyperbolic-consistent",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub xi_grid: Vec<Exact>,
    pub h_values: Vec<Exact>,
    pub xi_h_values: Vec<Exact>,
    pub verdict: Verdict,
    pub pathology_index: Exact,
    /// `h ≤ 1/pathology_index` at every grid point (vacuous when the index is 0).
    pub dual_bound_holds: bool,
    /// Some grid point was computed from a truncated enumeration.
    pub lower_bound: bool,
    pub points: Vec<HPhiResult>,
}

/// The largest admissible grid point: `φ(1)`, or 1 when `φ` vanishes.
fn grid_top(phi: &Submeasure) -> Exact {
    let total = phi.total();
    if total.is_zero() {
        Exact::one()
    } else {
        total
    }
}

/// `ξ_j = φ(1)·2^{−j}` for `j = 1..=steps` (with 1 in place of `φ(1) = 0`).
pub fn default_xi_grid(phi: &Submeasure, steps: usize) -> Vec<Exact> {
    let total = grid_top(phi);
    (1..=steps)
        .map(|j| &total / &Exact::integer(1i64 << j.min(62)))
        .collect()
}

pub fn classify(phi: &Submeasure, xi_grid: &[Exact]) -> Result<ClassificationReport> {
    classify_with(phi, xi_grid, &HPhiOptions::default())
}

/// Evaluates `h_φ` on a strictly decreasing grid in `(0, φ(1)]` (or `(0, 1]`
/// when `φ` vanishes) and applies
/// these rules, in order, to the finer half of the grid:
///
/// * hyperbolic-consistent if `ξ·h(ξ) ≥ 1 − ξ` at every point;
/// * parabolic-consistent if `h` stays positive and varies by at most a
///   quarter of its largest value;
/// * elliptic-consistent if `h(ξ)/ξ` stays within twice its largest value on
///   the coarser half;
/// * inconclusive otherwise.
pub fn classify_with(phi: &Submeasure, xi_grid: &[Exact], opts: &HPhiOptions) -> Result<ClassificationReport> {
    let total = grid_top(phi);
    if xi_grid.is_empty() {
        return invalid("empty xi grid");
    }
    if xi_grid.windows(2).any(|w| w[1] >= w[0]) {
        return invalid("xi grid must be strictly decreasing");
    }
    if xi_grid[xi_grid.len() - 1] <= Exact::zero() || xi_grid[0] > total {
        return invalid(format!("xi grid must lie in (0, {total}]"));
    }
    let source = HPhiSource::new(phi, opts)?;
    let points: Vec<HPhiResult> = xi_grid
        .par_iter()
        .map(|xi| h_phi_from(phi.ground(), &source, xi, opts))
        .collect::<Result<_>>()?;
    let pathology = pathology_index(phi)?;

    let h_values: Vec<Exact> = points.iter().map(|p| p.h.clone()).collect();
    let xi_h_values: Vec<Exact> = points.iter().map(|p| p.xi_h.clone()).collect();
    let dual_bound_holds = pathology.mass.is_zero() || h_values.iter().all(|h| h * &pathology.mass <= Exact::one());
    let verdict = verdict(xi_grid, &h_values, &xi_h_values);
    Ok(ClassificationReport {
        xi_grid: xi_grid.to_vec(),
        h_values,
        xi_h_values,
        verdict,
        pathology_index: pathology.mass,
        dual_bound_holds,
        lower_bound: points.iter().any(|p| p.lower_bound),
        points,
    })
}

fn verdict(xi: &[Exact], h: &[Exact], xi_h: &[Exact]) -> Verdict {
    let len = xi.len();
    let split = len / 2;
    let tail = split..len;
    let one = Exact::one();
    if tail.clone().all(|j| xi_h[j] >= &one - &xi[j]) {
        return Verdict::HyperbolicConsistent;
    }
    let tail_h = &h[tail.clone()];
    let max = tail_h.iter().cloned().max().expect("non-empty grid");
    let min = tail_h.iter().cloned().min().expect("non-empty grid");
    if min > Exact::zero() && (&max - &min) * Exact::integer(4) <= max {
        return Verdict::ParabolicConsistent;
    }
    let ratio = |j: usize| &h[j] / &xi[j];
    let head_max = (0..split.max(1)).map(ratio).max().expect("non-empty head");
    let tail_max = tail.map(ratio).max().expect("non-empty tail");
    if tail_max <= head_max * Exact::integer(2) {
        return Verdict::EllipticConsistent;
    }
    Verdict::Inconclusive
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChristensenGap {
    pub xi: Exact,
    pub xi_h: Exact,
    pub one_minus_xi: Exact,
    pub satisfied: bool,
    /// The sequence realizing `ξ·h`, with multiplicities.
    pub certificate: CoveringCertificate,
}

/// Compares `ξ·h_φ(ξ)` with `1 − ξ`.
pub fn christensen_gap(phi: &Submeasure, xi: &Exact) -> Result<ChristensenGap> {
    if *xi <= Exact::zero() || *xi >= Exact::one() {
        return invalid(format!("xi must lie in (0, 1), got {xi}"));
    }
    let r = super::h_phi(phi, xi)?;
    let one_minus_xi = Exact::one() - xi;
    Ok(ChristensenGap {
        xi: xi.clone(),
        satisfied: r.xi_h >= one_minus_xi,
        xi_h: r.xi_h,
        one_minus_xi,
        certificate: r.covering,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceViolation {
    pub xi: Exact,
    pub zeta: Exact,
    pub f_sum: Exact,
    pub lower: Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Increasing,
    Decreasing,
    Constant,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub pairs_checked: usize,
    pub violations: Vec<ConvergenceViolation>,
    /// `(ξ, f(ξ)/ξ)` by decreasing `ξ`.
    pub ratios: Vec<(Exact, Exact)>,
    /// Direction of `f(ξ)/ξ` as `ξ` decreases.
    pub ratio_trend: Trend,
}

/// Checks `f(ξ+ζ) ≥ f(ξ) + f(ζ) − f(ξ)f(ζ)` for every pair of sample points
/// (including `ξ = ζ`) whose sum is also a sample point. A violation in data
/// produced by a finite truncation points at a truncation artifact.
pub fn convergence_diagnostic(samples: &[(Exact, Exact)]) -> Result<ConvergenceReport> {
    if samples.len() < 3 {
        return invalid("convergence diagnostic needs at least 3 samples");
    }
    if samples.iter().any(|(x, _)| *x <= Exact::zero()) {
        return invalid("sample points must be positive");
    }
    let mut sorted: Vec<(Exact, Exact)> = samples.to_vec();
    sorted.sort_by(|a, b| b.0.cmp(&a.0));
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return invalid("duplicate sample point");
    }
    let lookup = |x: &Exact| sorted.iter().find(|(p, _)| p == x).map(|(_, f)| f.clone());
    let mut pairs_checked = 0;
    let mut violations = Vec::new();
    for i in 0..sorted.len() {
        for j in i..sorted.len() {
            let (xi, fx) = &sorted[i];
            let (zeta, fz) = &sorted[j];
            let Some(f_sum) = lookup(&(xi + zeta)) else { continue };
            pairs_checked += 1;
            let lower = fx + fz - fx * fz;
            if f_sum < lower {
                violations.push(ConvergenceViolation { xi: xi.clone(), zeta: zeta.clone(), f_sum, lower });
            }
        }
    }
    let ratios: Vec<(Exact, Exact)> = sorted.iter().map(|(x, f)| (x.clone(), f / x)).collect();
    let ups = ratios.windows(2).filter(|w| w[1].1 > w[0].1).count();
    let downs = ratios.windows(2).filter(|w| w[1].1 < w[0].1).count();
    let ratio_trend = match (ups, downs) {
        (0, 0) => Trend::Constant,
        (_, 0) => Trend::Increasing,
        (0, _) => Trend::Decreasing,
        _ => Trend::Mixed,
    };
    Ok(ConvergenceReport { pairs_checked, violations, ratios, ratio_trend })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::GroundSet;
    use crate::submeasure::{example_easy, AtomMeasure, MRule};

    fn uniform(n: usize, total: Exact) -> Submeasure {
        Submeasure::measure(AtomMeasure::uniform(GroundSet::new(n).unwrap(), &total))
    }

    #[test]
    fn uniform_probability_is_parabolic() {
        let phi = uniform(8, Exact::one());
        let grid = [Exact::ratio(1, 2), Exact::ratio(1, 4), Exact::ratio(1, 8)];
        let r = classify(&phi, &grid).unwrap();
        assert!(r.h_values.iter().all(|h| *h == Exact::one()));
        assert_eq!(r.verdict, Verdict::ParabolicConsistent);
        assert!(r.dual_bound_holds);
        assert_eq!(r.pathology_index, Exact::one());
    }

    #[test]
    fn zero_is_hyperbolic() {
        let phi = Submeasure::zero(GroundSet::new(4).unwrap());
        let r = classify(&phi, &default_xi_grid(&phi, 6)).unwrap();
        assert!(r.xi_h_values.iter().all(|v| *v == Exact::one()));
        assert_eq!(r.verdict, Verdict::HyperbolicConsistent);
        assert_eq!(r.pathology_index, Exact::zero());
    }

    #[test]
    fn rejects_bad_grids() {
        let phi = uniform(4, Exact::one());
        assert!(classify(&phi, &[]).is_err());
        assert!(classify(&phi, &[Exact::ratio(1, 4), Exact::ratio(1, 2)]).is_err());
        assert!(classify(&phi, &[Exact::integer(2), Exact::ratio(1, 2)]).is_err());
        assert!(classify(&phi, &[Exact::ratio(1, 2), Exact::zero()]).is_err());
    }

    #[test]
    fn example_easy_respects_dual_bound() {
        let ex = example_easy(2, &MRule::Cube).unwrap();
        let grid = default_xi_grid(&ex.phi, 10);
        let r = classify(&ex.phi, &grid).unwrap();
        assert!(r.xi_h_values.iter().all(|v| *v <= Exact::one()));
        assert!(r.dual_bound_holds);
    }

    #[test]
    fn christensen_examples() {
        let zero = Submeasure::zero(GroundSet::new(3).unwrap());
        let g = christensen_gap(&zero, &Exact::ratio(1, 3)).unwrap();
        assert!(g.satisfied);
        assert_eq!(g.xi_h, Exact::one());

        let phi = uniform(8, Exact::one());
        let g = christensen_gap(&phi, &Exact::ratio(1, 4)).unwrap();
        assert_eq!(g.xi_h, Exact::ratio(1, 4));
        assert!(!g.satisfied);
        assert!(christensen_gap(&phi, &Exact::one()).is_err());
    }

    #[test]
    fn convergence_examples() {
        let grid: Vec<Exact> = (1..=4).map(|k| Exact::ratio(1, 1 << k)).collect();
        let identity: Vec<(Exact, Exact)> = grid.iter().map(|x| (x.clone(), x.clone())).collect();
        let r = convergence_diagnostic(&identity).unwrap();
        assert!(r.violations.is_empty());
        assert_eq!(r.pairs_checked, 3);
        assert_eq!(r.ratio_trend, Trend::Constant);

        let ones: Vec<(Exact, Exact)> = grid.iter().map(|x| (x.clone(), Exact::one())).collect();
        let r = convergence_diagnostic(&ones).unwrap();
        assert!(r.violations.is_empty());
        assert_eq!(r.ratio_trend, Trend::Increasing);

        let squares: Vec<(Exact, Exact)> = (1..=3).map(|k| (Exact::integer(k), Exact::integer(k * k))).collect();
        let r = convergence_diagnostic(&squares).unwrap();
        assert!(r.violations.is_empty());
        // 1+1 = 2 and 1+2 = 3
        assert_eq!(r.pairs_checked, 2);

        assert!(convergence_diagnostic(&squares[..2]).is_err());
    }
}
