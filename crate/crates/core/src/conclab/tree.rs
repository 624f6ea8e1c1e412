//! Labelings of the tree `T_≤ = ⋃_{i≤k} M_1 × ⋯ × M_i` and the relation `∼`
//! between leaf labelings.
//!
//! Nodes of level `i` are numbered `0..M_1⋯M_i` with the first coordinate most
//! significant, so the children of node `t` are `t·M_{i+1} + j`. A leaf
//! labeling `y ∈ 2^T` is a bitmask with bit `t` holding `y(t)`.

use serde::Serialize;

use crate::error::{check_limit, invalid, Result};

/// Largest `|T|` for the tree routines.
pub const TREE_LEAF_LIMIT: usize = 24;
/// Largest `|T|` for the exhaustive inclusion check.
pub const CLAIM_INCLUSION_LEAF_LIMIT: usize = 8;
/// Largest `|T_≤ ∖ {∅}|` for enumerating every candidate `S`.
pub const BRUTEFORCE_NODE_LIMIT: usize = 20;

/// Level sizes `M_1..M_k` and thresholds `d_1..d_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeSpec {
    m: Vec<usize>,
    d: Vec<f64>,
    /// `|level i|` for `i = 0..=k`.
    widths: Vec<usize>,
}

impl TreeSpec {
    pub fn new(m: Vec<usize>, d: Vec<f64>) -> Result<Self> {
        if m.is_empty() || m.len() != d.len() {
            return invalid("need the same positive number of level sizes and thresholds");
        }
        if m.iter().any(|&v| v < 2) {
            return invalid("level sizes must be at least 2");
        }
        if d.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return invalid("thresholds must be positive");
        }
        let mut widths = vec![1usize];
        for &v in &m {
            let w = widths.last().unwrap().saturating_mul(v);
            widths.push(w);
        }
        check_limit("leaves of the tree", *widths.last().unwrap(), TREE_LEAF_LIMIT)?;
        Ok(TreeSpec { m, d, widths })
    }

    pub fn depth(&self) -> usize {
        self.m.len()
    }

    pub fn m(&self) -> &[usize] {
        &self.m
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// `|T|`.
    pub fn leaves(&self) -> usize {
        self.widths[self.depth()]
    }

    /// `|T_≤|`, the root included.
    pub fn nodes(&self) -> usize {
        self.widths.iter().sum()
    }

    fn check_labeling(&self, y: u32) -> Result<()> {
        if self.leaves() < 32 && y >> self.leaves() != 0 {
            return invalid(format!("labeling has bits beyond the {} leaves", self.leaves()));
        }
        Ok(())
    }
}

/// A labeling of `T_≤`, level by level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Labeling {
    pub levels: Vec<Vec<bool>>,
}

impl Labeling {
    pub fn root(&self) -> bool {
        self.levels[0][0]
    }
}

fn extend(y: u32, spec: &TreeSpec, zero_if: impl Fn(usize, usize) -> bool) -> Labeling {
    let k = spec.depth();
    let mut levels = vec![Vec::new(); k + 1];
    levels[k] = (0..spec.leaves()).map(|t| y >> t & 1 == 1).collect();
    for i in (0..k).rev() {
        let mi = spec.m[i];
        levels[i] = (0..spec.widths[i])
            .map(|t| {
                let ones = levels[i + 1][t * mi..(t + 1) * mi].iter().filter(|&&b| b).count();
                !zero_if(i, ones)
            })
            .collect();
    }
    Labeling { levels }
}

/// `ȳ`: an inner node at level `i` is 0 iff at most `M_{i+1}/2` children are 1.
pub fn ybar_extension(y: u32, spec: &TreeSpec) -> Result<Labeling> {
    spec.check_labeling(y)?;
    Ok(extend(y, spec, |i, ones| 2 * ones <= spec.m[i]))
}

/// `ŷ`: an inner node at level `i` is 0 iff fewer than `M_{i+1}/2 + d_{i+1}`
/// children are 1.
pub fn yhat_extension(y: u32, spec: &TreeSpec) -> Result<Labeling> {
    spec.check_labeling(y)?;
    Ok(extend(y, spec, |i, ones| (ones as f64) < spec.m[i] as f64 / 2.0 + spec.d[i]))
}

/// Whether `x ∼ y`: some `S ⊆ T_≤ ∖ {∅}` holds fewer than `d_{i+1}` children
/// of every level-`i` node and contains a non-root prefix of every leaf where
/// `x` and `y` differ.
///
/// The per-node budgets are independent, so a node can leave its subtree out
/// of `S` exactly when fewer than `d_{i+1}` of its children are forced into
/// `S`, a child being forced when its own subtree cannot be handled without it.
pub fn sim_related(x: u32, y: u32, spec: &TreeSpec) -> Result<bool> {
    spec.check_labeling(x)?;
    spec.check_labeling(y)?;
    let k = spec.depth();
    let diff = x ^ y;
    // free[t]: the subtree of t is handled without putting t in S.
    let mut free: Vec<bool> = (0..spec.leaves()).map(|t| diff >> t & 1 == 0).collect();
    for i in (0..k).rev() {
        let mi = spec.m[i];
        free = (0..spec.widths[i])
            .map(|t| {
                let forced = free[t * mi..(t + 1) * mi].iter().filter(|&&f| !f).count();
                (forced as f64) < spec.d[i]
            })
            .collect();
    }
    Ok(free[0])
}

/// [`sim_related`] by trying every `S ⊆ T_≤ ∖ {∅}`.
pub fn sim_related_bruteforce(x: u32, y: u32, spec: &TreeSpec) -> Result<bool> {
    spec.check_labeling(x)?;
    spec.check_labeling(y)?;
    let k = spec.depth();
    let non_root = spec.nodes() - 1;
    check_limit("non-root tree nodes for subset enumeration", non_root, BRUTEFORCE_NODE_LIMIT)?;
    // Bit offsets of levels 1..=k inside S.
    let mut offset = vec![0usize; k + 1];
    for i in 2..=k {
        offset[i] = offset[i - 1] + spec.widths[i - 1];
    }
    let diff = x ^ y;
    let differing: Vec<usize> = (0..spec.leaves()).filter(|t| diff >> t & 1 == 1).collect();
    'sets: for s in 0u32..(1u32 << non_root) {
        for i in 0..k {
            let mi = spec.m[i];
            for t in 0..spec.widths[i] {
                let base = offset[i + 1] + t * mi;
                let inside = ((s >> base) & ((1u32 << mi) - 1)).count_ones();
                if (inside as f64) >= spec.d[i] {
                    continue 'sets;
                }
            }
        }
        for &leaf in &differing {
            let mut node = leaf;
            let mut hit = false;
            for i in (1..=k).rev() {
                if s >> (offset[i] + node) & 1 == 1 {
                    hit = true;
                    break;
                }
                node /= spec.m[i - 1];
            }
            if !hit {
                continue 'sets;
            }
        }
        return Ok(true);
    }
    Ok(false)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClaimReport {
    pub leaves: usize,
    /// `|A|`, `A = {y : ȳ(∅) = 0}`.
    pub size_a: u64,
    /// `2^{|T|−1}`.
    pub lower_bound: u64,
    pub size_bound_holds: bool,
    /// `|B|`, `B = {y : ŷ(∅) = 0}`, when the inclusion was checked.
    pub size_b: Option<u64>,
    /// `{y : ∃x ∈ A, x ∼ y} ⊆ B`, checked when `|T| ≤` [`CLAIM_INCLUSION_LEAF_LIMIT`].
    pub inclusion_holds: Option<bool>,
    pub pairs_checked: u64,
    /// `(x, y)` with `x ∈ A`, `x ∼ y` and `y ∉ B`.
    pub counterexample: Option<(u32, u32)>,
}

/// Checks `|A| ≥ 2^{|T|−1}` and, for small trees, the `∼`-neighbourhood
/// inclusion by enumerating every pair of labelings.
pub fn claim_msds_check(spec: &TreeSpec) -> Result<ClaimReport> {
    let leaves = spec.leaves();
    let count = 1u64 << leaves;
    let in_a: Vec<bool> = (0..count).map(|y| !extend(y as u32, spec, |i, ones| 2 * ones <= spec.m[i]).root()).collect();
    let size_a = in_a.iter().filter(|&&b| b).count() as u64;
    let lower_bound = count / 2;
    let mut report = ClaimReport {
        leaves,
        size_a,
        lower_bound,
        size_bound_holds: size_a >= lower_bound,
        size_b: None,
        inclusion_holds: None,
        pairs_checked: 0,
        counterexample: None,
    };
    if leaves > CLAIM_INCLUSION_LEAF_LIMIT {
        return Ok(report);
    }
    let in_b: Vec<bool> = (0..count).map(|y| !yhat_extension(y as u32, spec).map(|l| l.root()).unwrap_or(true)).collect();
    report.size_b = Some(in_b.iter().filter(|&&b| b).count() as u64);
    let mut holds = true;
    'outer: for y in 0..count {
        if in_b[y as usize] {
            continue;
        }
        for x in 0..count {
            if !in_a[x as usize] {
                continue;
            }
            report.pairs_checked += 1;
            if sim_related(x as u32, y as u32, spec)? {
                holds = false;
                report.counterexample = Some((x as u32, y as u32));
                break 'outer;
            }
        }
    }
    report.inclusion_holds = Some(holds);
    Ok(report)
}
