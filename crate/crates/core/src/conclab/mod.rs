//! Concentration experiments on finite product spaces: Monte Carlo tails,
//! exact and sampled concentration functions, covering-concentration probes
//! along refining partitions, and the tree relations behind the
//! non-concentration example.

mod alpha;
mod binomial;
mod probe;
mod space;
mod tail;
mod tree;

pub use alpha::{alpha_exact, alpha_sampled, AlphaMode, AlphaResult, SAMPLED_FAMILY_LIMIT};
pub use binomial::{berry_esseen_bound, binomial_cdf_below, binomial_tail_at_least, BerryEsseenBound, BINOMIAL_EXACT_LIMIT};
pub use probe::{covering_concentration_probe, ProbeCover, ProbeOptions, ProbeReport, ProbeRow};
pub use space::{simplest_rational, FiniteSpace, ALPHA_EXACT_POINT_LIMIT, FINITE_SPACE_POINT_LIMIT};
pub use tail::{mc_tail, wilson_interval, McTailReport, TailRow, MIN_TRIALS, RNG_NAME};
pub use tree::{
    claim_msds_check, sim_related, sim_related_bruteforce, ybar_extension, yhat_extension, ClaimReport, Labeling, TreeSpec,
    BRUTEFORCE_NODE_LIMIT, CLAIM_INCLUSION_LEAF_LIMIT, TREE_LEAF_LIMIT,
};

use serde::{Deserialize, Serialize};

use crate::algebra::{covering_multiplicity, Cover, MAX_ATOMS};
use crate::entropy::FiniteDist;
use crate::error::{check_limit, invalid, Result};
use crate::exact::Exact;
use crate::metric::{CoverMetric, FloatCoverMetric, ProductPoint};

/// The test function of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LipschitzFn {
    /// `(1/n) Σ_j x_j/(k_j − 1)`, each symbol read as a point of `[0, 1]`.
    CoordinateMean,
    /// `Σ_j a_j x_j/(k_j − 1)`.
    WeightedSum { coeffs: Vec<f64> },
    /// `d_{𝒞,w}(x, p)`.
    DistanceToPoint { point: ProductPoint },
    /// An arbitrary table over the product, coordinate 0 varying fastest.
    /// Never certified, so only usable for exploration.
    Table { values: Vec<f64> },
}

impl LipschitzFn {
    pub fn label(&self) -> &'static str {
        match self {
            LipschitzFn::CoordinateMean => "coordinate_mean",
            LipschitzFn::WeightedSum { .. } => "weighted_sum",
            LipschitzFn::DistanceToPoint { .. } => "distance_to_point",
            LipschitzFn::Table { .. } => "table",
        }
    }
}

/// A product space `∏_j (Ω_j, μ_j)` with a weighted cover of the index set,
/// a test function and the parameters of a Monte Carlo run.
#[derive(Clone, Debug)]
pub struct Scenario {
    dists: Vec<FiniteDist>,
    cover: Cover,
    function: LipschitzFn,
    pub r_grid: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

impl Scenario {
    pub fn new(dists: Vec<FiniteDist>, cover: Cover, function: LipschitzFn, r_grid: Vec<f64>, trials: u64, seed: u64) -> Result<Self> {
        let n = dists.len();
        if n == 0 {
            return invalid("a scenario needs at least one coordinate");
        }
        check_limit("scenario coordinates", n, MAX_ATOMS)?;
        if cover.ground().n_atoms() != n {
            return invalid(format!("cover is over {} indices, scenario has {n}", cover.ground().n_atoms()));
        }
        if cover.weights().is_none() {
            return invalid("the scenario cover needs weights");
        }
        if covering_multiplicity(&cover) == 0 {
            return invalid("the scenario cover misses some index");
        }
        if r_grid.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return invalid("r values must be positive");
        }
        let sizes: Vec<usize> = dists.iter().map(FiniteDist::len).collect();
        match &function {
            LipschitzFn::CoordinateMean => {}
            LipschitzFn::WeightedSum { coeffs } => {
                if coeffs.len() != n || coeffs.iter().any(|a| !a.is_finite()) {
                    return invalid(format!("weighted sum needs {n} finite coefficients"));
                }
            }
            LipschitzFn::DistanceToPoint { point } => {
                ProductPoint::checked(point.coords().to_vec(), &sizes)?;
            }
            LipschitzFn::Table { values } => {
                let total = sizes.iter().try_fold(1usize, |acc, &k| acc.checked_mul(k));
                if total != Some(values.len()) {
                    return invalid("function table does not match the product size");
                }
            }
        }
        Ok(Scenario { dists, cover, function, r_grid, trials, seed })
    }

    pub fn dists(&self) -> &[FiniteDist] {
        &self.dists
    }

    pub fn cover(&self) -> &Cover {
        &self.cover
    }

    pub fn function(&self) -> &LipschitzFn {
        &self.function
    }

    pub fn n_coords(&self) -> usize {
        self.dists.len()
    }

    pub fn alphabet_sizes(&self) -> Vec<usize> {
        self.dists.iter().map(FiniteDist::len).collect()
    }

    /// `k = t(𝒞)`.
    pub fn multiplicity(&self) -> usize {
        covering_multiplicity(&self.cover)
    }

    pub fn weights(&self) -> &[Exact] {
        self.cover.weights().expect("checked in new")
    }

    pub fn metric(&self) -> CoverMetric {
        CoverMetric::new(self.cover.clone()).expect("checked in new")
    }

    /// Whether the test function is 1-Lipschitz for `d_{𝒞,w}` by construction.
    ///
    /// A function changing by at most `c_j` when coordinate `j` changes is
    /// 1-Lipschitz once every entry satisfies `w_i ≥ Σ_{j∈C_i} c_j`, because
    /// any cover of the difference set then pays for every differing coordinate.
    pub fn certified(&self) -> bool {
        let n = self.n_coords() as i64;
        let per_coord: Vec<Exact> = match &self.function {
            LipschitzFn::DistanceToPoint { .. } => return true,
            LipschitzFn::Table { .. } => return false,
            LipschitzFn::CoordinateMean => (0..n).map(|_| Exact::ratio(1, n)).collect(),
            LipschitzFn::WeightedSum { coeffs } => match coeffs.iter().map(|a| Exact::from_f64(a.abs())).collect::<Option<Vec<_>>>() {
                Some(v) => v,
                None => return false,
            },
        };
        self.cover.sets().iter().zip(self.weights()).all(|(c, w)| {
            let need: Exact = c.iter().map(|j| per_coord[j].clone()).sum();
            *w >= need
        })
    }

    /// The test function at every product point, coordinate 0 varying fastest.
    pub fn function_table(&self) -> Result<Vec<f64>> {
        let sizes = self.alphabet_sizes();
        let total = sizes.iter().try_fold(1usize, |acc, &k| acc.checked_mul(k)).unwrap_or(usize::MAX);
        check_limit("points in the function table", total, FINITE_SPACE_POINT_LIMIT)?;
        let eval = self.evaluator();
        let mut x = vec![0u32; sizes.len()];
        let mut out = Vec::with_capacity(total);
        for mut idx in 0..total {
            for (xj, &k) in x.iter_mut().zip(&sizes) {
                *xj = (idx % k) as u32;
                idx /= k;
            }
            out.push(eval.eval(&x));
        }
        Ok(out)
    }

    pub(crate) fn evaluator(&self) -> Evaluator<'_> {
        Evaluator {
            sizes: self.alphabet_sizes(),
            function: &self.function,
            metric: match &self.function {
                LipschitzFn::DistanceToPoint { .. } => Some(self.metric().to_f64()),
                _ => None,
            },
        }
    }
}

pub(crate) struct Evaluator<'a> {
    sizes: Vec<usize>,
    function: &'a LipschitzFn,
    metric: Option<FloatCoverMetric>,
}

impl Evaluator<'_> {
    fn unit(&self, j: usize, c: u32) -> f64 {
        let k = self.sizes[j];
        if k <= 1 {
            0.0
        } else {
            c as f64 / (k - 1) as f64
        }
    }

    pub(crate) fn eval(&self, x: &[u32]) -> f64 {
        match self.function {
            LipschitzFn::CoordinateMean => {
                x.iter().enumerate().map(|(j, &c)| self.unit(j, c)).sum::<f64>() / x.len() as f64
            }
            LipschitzFn::WeightedSum { coeffs } => {
                x.iter().enumerate().map(|(j, &c)| coeffs[j] * self.unit(j, c)).sum()
            }
            LipschitzFn::DistanceToPoint { point } => self
                .metric
                .as_ref()
                .expect("set for distance functions")
                .dist(x, point.coords())
                .expect("scenario covers are checked to reach every coordinate they differ on"),
            LipschitzFn::Table { values } => {
                let mut idx = 0usize;
                for (&c, &k) in x.iter().zip(&self.sizes).rev() {
                    idx = idx * k + c as usize;
                }
                values[idx]
            }
        }
    }
}
