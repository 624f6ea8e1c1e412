use rayon::prelude::*;
use serde::Serialize;

use super::alpha::{alpha_exact, alpha_sampled, AlphaResult};
use super::space::{FiniteSpace, ALPHA_EXACT_POINT_LIMIT, FINITE_SPACE_POINT_LIMIT};
use crate::algebra::{GroundSet, Partition};
use crate::covnum::h_phi;
use crate::entropy::FiniteDist;
use crate::error::{check_limit, invalid, Result};
use crate::exact::Exact;
use crate::metric::BlockMetric;
use crate::submeasure::Submeasure;

const PROBE_XI_STEPS: i64 = 8;
const NOTE: &str = "finitely many refinements with two-point alphabets; evidence only, not a verdict";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeOptions {
    /// Random sets per sampled `α` evaluation.
    pub family_budget: usize,
    pub seed: u64,
    /// Slack allowed when testing that `α` does not grow along the chain.
    pub tolerance: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions { family_budget: 2000, seed: 0, tolerance: 1e-12 }
    }
}

/// The cover of the block set behind a bound column.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeCover {
    /// `blocks` for the blocks themselves, `h_phi` for an LP certificate.
    pub source: &'static str,
    pub xi: Option<Exact>,
    /// Covering multiplicity `k`.
    pub k: u64,
    /// Number of entries `m`.
    pub m: u64,
    /// `Σ φ(C_i)²`.
    pub weight_norm_sq: f64,
}

impl ProbeCover {
    fn bound(&self, eps: f64) -> f64 {
        (-(self.k as f64) * eps * eps / (8.0 * self.weight_norm_sq)).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeRow {
    pub partition: usize,
    pub blocks: usize,
    pub alpha: AlphaResult,
    /// `exp(−k ε² / (8 Σ φ(C_i)²))`.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub epsilons: Vec<Exact>,
    pub covers: Vec<ProbeCover>,
    pub rows: Vec<ProbeRow>,
    /// Per `ε`: `α` never grows from one partition to the next.
    pub non_increasing: Vec<bool>,
    pub note: &'static str,
}

/// `B ↦ φ(⋃B)` on the block index set.
fn quotient(phi: &Submeasure, p: &Partition) -> Result<Submeasure> {
    Submeasure::tabulate(GroundSet::new(p.len())?, |s| phi.eval(p.union_of(s)))
}

/// The cover with the largest `k / Σ φ(C_i)²`: the blocks themselves or an
/// optimal `h_φ` certificate of the quotient at `ξ = φ(1)·2^{−j}`.
fn best_cover(q: &Submeasure) -> Result<ProbeCover> {
    let g = q.ground();
    let singles: Exact = g.singletons().into_iter().map(|b| q.eval(b).square()).sum();
    let mut best = ProbeCover { source: "blocks", xi: None, k: 1, m: g.n_atoms() as u64, weight_norm_sq: singles.to_f64() };
    let top = q.total();
    if top.signum() != std::cmp::Ordering::Greater {
        return Ok(best);
    }
    for j in 0..=PROBE_XI_STEPS {
        let xi = &top * &Exact::ratio(1, 1 << j);
        let r = h_phi(q, &xi)?;
        let cert = &r.covering;
        if cert.multiplicity == 0 {
            continue;
        }
        let norm: Exact = cert
            .primal
            .iter()
            .map(|t| &Exact::integer(t.multiplicity as i64) * &q.eval(t.set).square())
            .sum();
        let candidate = ProbeCover { source: "h_phi", xi: Some(xi), k: cert.multiplicity, m: cert.length, weight_norm_sq: norm.to_f64() };
        let better = candidate.weight_norm_sq == 0.0
            || (candidate.k as f64) * best.weight_norm_sq > (best.k as f64) * candidate.weight_norm_sq;
        if better {
            best = candidate;
        }
    }
    Ok(best)
}

/// `α` of `(2^ℬ, δ_{φ,ℬ}, uniform)` along a refining chain of partitions,
/// next to the concentration bound from the best cover certificate.
///
/// Block sets of at most four blocks are handled exhaustively; larger ones
/// (up to eleven blocks) use [`alpha_sampled`], whose values are lower bounds.
pub fn covering_concentration_probe(phi: &Submeasure, chain: &[Partition], eps: &[Exact], opts: &ProbeOptions) -> Result<ProbeReport> {
    if chain.is_empty() || eps.is_empty() {
        return invalid("the probe needs at least one partition and one ε");
    }
    for (i, p) in chain.iter().enumerate() {
        if p.ground() != phi.ground() {
            return invalid(format!("partition {i} is on a different ground set"));
        }
        if i > 0 && !p.refines(&chain[i - 1]) {
            return invalid(format!("partition {i} does not refine partition {}", i - 1));
        }
        let points = 1usize.checked_shl(p.len() as u32).unwrap_or(usize::MAX);
        check_limit("points of the block product", points, FINITE_SPACE_POINT_LIMIT)?;
    }
    let per_partition: Vec<(ProbeCover, Vec<AlphaResult>)> = chain
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let q = quotient(phi, p)?;
            let cover = best_cover(&q)?;
            let metric = BlockMetric::new(phi.clone(), p.clone())?;
            let space = FiniteSpace::product(&vec![FiniteDist::uniform(2)?; p.len()], &metric)?;
            let alphas = if space.n_points() <= ALPHA_EXACT_POINT_LIMIT {
                alpha_exact(&space, eps)?
            } else {
                let to_origin: Vec<f64> = (0..space.n_points()).map(|x| space.dist_f64(0, x)).collect();
                eps.iter()
                    .map(|e| alpha_sampled(&space, e, opts.family_budget, opts.seed.wrapping_add(i as u64), std::slice::from_ref(&to_origin)))
                    .collect::<Result<Vec<_>>>()?
            };
            Ok((cover, alphas))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (i, (cover, alphas)) in per_partition.iter().enumerate() {
        for a in alphas {
            rows.push(ProbeRow { partition: i, blocks: chain[i].len(), alpha: a.clone(), bound: cover.bound(a.epsilon.to_f64()) });
        }
    }
    let non_increasing = (0..eps.len())
        .map(|e| per_partition.windows(2).all(|w| w[1].1[e].alpha <= w[0].1[e].alpha + opts.tolerance))
        .collect();
    Ok(ProbeReport {
        epsilons: eps.to_vec(),
        covers: per_partition.into_iter().map(|(c, _)| c).collect(),
        rows,
        non_increasing,
        note: NOTE,
    })
}
