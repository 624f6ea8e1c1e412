//! Input documents. Sets are sorted atom-index arrays, rationals are `"p/q"`
//! strings (or plain integers) and root weights are `{"p": "a/b", "q": n}`.

use serde::Deserialize;

use crate::algebra::{AtomSet, Cover, GroundSet, Partition};
use crate::conclab::{LipschitzFn, Scenario, TreeSpec};
use crate::entropy::{FiniteDist, ProductDist};
use crate::error::{invalid, Result};
use crate::exact::Exact;
use crate::metric::{BlockMetric, CoverMetric, ProductPoint};
use crate::submeasure::{example_easy, AtomMeasure, MRule, Submeasure, Theta, WeightedCoverFamily};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverSpec {
    pub n_atoms: usize,
    pub sets: Vec<AtomSet>,
    #[serde(default)]
    pub weights: Option<Vec<Exact>>,
}

impl CoverSpec {
    pub fn build(&self) -> Result<Cover> {
        let g = GroundSet::new(self.n_atoms)?;
        let c = Cover::new(g, self.sets.clone())?;
        match &self.weights {
            Some(w) => c.with_weights(w.clone()),
            None => Ok(c),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub set: AtomSet,
    pub weight: Exact,
}

fn cube() -> MRule {
    MRule::Cube
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubmeasureSpec {
    Measure { n_atoms: usize, weights: Vec<Exact> },
    UniformMeasure { n_atoms: usize, total: Exact },
    Zero { n_atoms: usize },
    /// `φ(A) = value` for every non-empty `A`.
    ConstantNonempty { n_atoms: usize, value: Exact },
    /// Values indexed by bitmask.
    Table { n_atoms: usize, values: Vec<Exact> },
    CoverGenerated { n_atoms: usize, generators: Vec<GeneratorSpec>, fallback_weight: Exact },
    ExampleEasy {
        depth: usize,
        #[serde(default = "cube")]
        rule: MRule,
    },
}

impl SubmeasureSpec {
    pub fn build(&self) -> Result<Submeasure> {
        let ground = |n: usize| GroundSet::new(n);
        match self {
            SubmeasureSpec::Measure { n_atoms, weights } => Submeasure::make_measure(ground(*n_atoms)?, weights.clone()),
            SubmeasureSpec::UniformMeasure { n_atoms, total } => {
                if total.is_negative() {
                    return invalid("total mass must be non-negative");
                }
                Ok(Submeasure::measure(AtomMeasure::uniform(ground(*n_atoms)?, total)))
            }
            SubmeasureSpec::Zero { n_atoms } => Ok(Submeasure::zero(ground(*n_atoms)?)),
            SubmeasureSpec::ConstantNonempty { n_atoms, value } => Submeasure::constant_nonempty(ground(*n_atoms)?, value.clone()),
            SubmeasureSpec::Table { n_atoms, values } => Submeasure::table(ground(*n_atoms)?, values.clone()),
            SubmeasureSpec::CoverGenerated { n_atoms, generators, fallback_weight } => {
                let gens = generators.iter().map(|g| (g.set, g.weight.clone())).collect();
                let family = WeightedCoverFamily::new(ground(*n_atoms)?, gens, fallback_weight.clone())?;
                Ok(Submeasure::cover_generated(family))
            }
            SubmeasureSpec::ExampleEasy { depth, rule } => Ok(example_easy(*depth, rule)?.phi),
        }
    }
}

pub fn build_partition(ground: GroundSet, blocks: &[AtomSet]) -> Result<Partition> {
    Partition::new(ground, blocks.to_vec())
}

pub fn build_dists(dists: &[Vec<f64>]) -> Result<Vec<FiniteDist>> {
    dists.iter().map(|p| FiniteDist::new(p.clone())).collect()
}

/// A family of sets for `covnum`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDoc {
    pub n_atoms: usize,
    pub family: Vec<AtomSet>,
}

/// A submeasure, optionally with the `ξ` grid for `hphi` and `classify`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmeasureDoc {
    pub submeasure: SubmeasureSpec,
    #[serde(default)]
    pub xi_grid: Option<Vec<Exact>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    /// `d_{𝒞,w}` on a product indexed by the cover's atoms.
    Cover { cover: CoverSpec },
    /// `δ_{φ,ℬ}` on a product indexed by the blocks of `partition`.
    Blocks { submeasure: SubmeasureSpec, partition: Vec<AtomSet> },
    /// Normalized Hamming distance.
    Hamming { n_coords: usize },
}

pub enum BuiltMetric {
    Cover(CoverMetric),
    Blocks(BlockMetric),
    Hamming(usize),
}

impl MetricSpec {
    pub fn build(&self) -> Result<BuiltMetric> {
        match self {
            MetricSpec::Cover { cover } => Ok(BuiltMetric::Cover(CoverMetric::new(cover.build()?)?)),
            MetricSpec::Blocks { submeasure, partition } => {
                let phi = submeasure.build()?;
                let p = build_partition(phi.ground(), partition)?;
                Ok(BuiltMetric::Blocks(BlockMetric::new(phi, p)?))
            }
            MetricSpec::Hamming { n_coords } => {
                if *n_coords == 0 {
                    return invalid("at least one coordinate is needed");
                }
                Ok(BuiltMetric::Hamming(*n_coords))
            }
        }
    }
}

/// Distance queries for `dist`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistDoc {
    pub metric: MetricSpec,
    pub pairs: Vec<(ProductPoint, ProductPoint)>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HerbstSpec {
    pub d: f64,
    pub lambda_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
}

/// Function tables on one product space for `entropy-check`. Shearer runs for
/// each function and cover of the coordinates, Ledoux for each function on
/// the joint distribution, Herbst when `herbst` is given.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyDoc {
    pub dists: Vec<Vec<f64>>,
    pub functions: Vec<Vec<f64>>,
    #[serde(default)]
    pub covers: Vec<CoverSpec>,
    #[serde(default)]
    pub herbst: Option<HerbstSpec>,
}

impl EntropyDoc {
    pub fn product(&self) -> Result<ProductDist> {
        ProductDist::new(build_dists(&self.dists)?)
    }
}

fn default_trials() -> u64 {
    10_000
}

fn default_family_budget() -> usize {
    2000
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaModeSpec {
    /// Exhaustive when the space is small enough, sampled otherwise.
    #[default]
    Auto,
    Exhaustive,
    Sampled,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSpec {
    pub epsilons: Vec<Exact>,
    #[serde(default)]
    pub mode: AlphaModeSpec,
    #[serde(default = "default_family_budget")]
    pub family_budget: usize,
}

/// A Monte Carlo scenario for `concentrate`, optionally with `α` requests.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrateDoc {
    pub dists: Vec<Vec<f64>>,
    pub cover: CoverSpec,
    pub function: LipschitzFn,
    pub r_grid: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub alpha: Option<AlphaSpec>,
}

impl ConcentrateDoc {
    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::new(build_dists(&self.dists)?, self.cover.build()?, self.function.clone(), self.r_grid.clone(), self.trials, self.seed)
    }
}

/// A refining chain of partitions for `probe`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeDoc {
    pub submeasure: SubmeasureSpec,
    pub chain: Vec<Vec<AtomSet>>,
    pub epsilons: Vec<Exact>,
    #[serde(default = "default_family_budget")]
    pub family_budget: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_depth() -> usize {
    2
}

/// Parameters for `example-easy`; every field has a default.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleEasyDoc {
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "cube")]
    pub rule: MRule,
    /// Random sets to check instead of all subsets.
    #[serde(default)]
    pub samples: Option<u64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ExampleEasyDoc {
    fn default() -> Self {
        ExampleEasyDoc { depth: default_depth(), rule: cube(), samples: None, seed: 0 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaSpec {
    /// `ξ^exponent`.
    Power { exponent: f64 },
    /// `1/ln(1 + 1/ξ)`.
    InverseLog,
}

impl ThetaSpec {
    pub fn build(&self) -> Result<Theta> {
        match self {
            ThetaSpec::Power { exponent } if *exponent > 0.0 && exponent.is_finite() => Ok(Theta::Power(*exponent)),
            ThetaSpec::Power { .. } => invalid("the exponent of θ must be positive"),
            ThetaSpec::InverseLog => Ok(Theta::InverseLog),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSpecDoc {
    pub m: Vec<usize>,
    pub d: Vec<f64>,
}

impl TreeSpecDoc {
    pub fn build(&self) -> Result<TreeSpec> {
        TreeSpec::new(self.m.clone(), self.d.clone())
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BerryEsseenBoundSpec {
    pub a: f64,
    pub delta: f64,
    pub n: u64,
}

fn default_theta() -> ThetaSpec {
    ThetaSpec::Power { exponent: 0.5 }
}

fn default_i_max() -> usize {
    3
}

fn one() -> f64 {
    1.0
}

fn default_trees() -> Vec<TreeSpecDoc> {
    vec![TreeSpecDoc { m: vec![2, 2], d: vec![1.0, 1.0] }, TreeSpecDoc { m: vec![3, 2], d: vec![1.0, 1.0] }]
}

/// Parameters for `example-pathological`; every field has a default.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathologicalDoc {
    #[serde(default = "default_theta")]
    pub theta: ThetaSpec,
    #[serde(default = "default_i_max")]
    pub i_max: usize,
    /// `K = max{C(3/4), 1}`.
    #[serde(default = "one")]
    pub k_const: f64,
    #[serde(default = "default_trees")]
    pub trees: Vec<TreeSpecDoc>,
    #[serde(default)]
    pub bounds: Vec<BerryEsseenBoundSpec>,
}

impl Default for PathologicalDoc {
    fn default() -> Self {
        PathologicalDoc { theta: default_theta(), i_max: default_i_max(), k_const: one(), trees: default_trees(), bounds: Vec::new() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn submeasure_specs() {
        let s: SubmeasureSpec = serde_json::from_str(r#"{"kind": "uniform_measure", "n_atoms": 6, "total": "3"}"#).unwrap();
        let phi = s.build().unwrap();
        assert_eq!(phi.eval(AtomSet::from_atoms([0, 1])), Exact::integer(1));

        let s: SubmeasureSpec = serde_json::from_str(
            r#"{"kind": "cover_generated", "n_atoms": 3,
                "generators": [{"set": [0, 1], "weight": {"p": "1/2", "q": 2}}],
                "fallback_weight": 1}"#,
        )
        .unwrap();
        let phi = s.build().unwrap();
        assert_eq!(phi.eval(AtomSet::from_atoms([0, 1])), Exact::inv_sqrt(2));
        assert_eq!(phi.total(), Exact::integer(1));

        let s: SubmeasureSpec = serde_json::from_str(r#"{"kind": "example_easy", "depth": 2}"#).unwrap();
        assert_eq!(s.build().unwrap().ground().n_atoms(), 4);
        let s: SubmeasureSpec = serde_json::from_str(r#"{"kind": "example_easy", "depth": 2, "rule": {"explicit": [1, 8]}}"#).unwrap();
        assert_eq!(s.build().unwrap().ground().n_atoms(), 4);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_sets() {
        assert!(serde_json::from_str::<SubmeasureSpec>(r#"{"kind": "zero", "n_atoms": 2, "extra": 1}"#).is_err());
        let c: CoverSpec = serde_json::from_str(r#"{"n_atoms": 2, "sets": [[0], [5]]}"#).unwrap();
        assert!(c.build().is_err());
    }

    #[test]
    fn concentrate_document() {
        let d: ConcentrateDoc = serde_json::from_str(
            r#"{"dists": [[0.5, 0.5], [0.5, 0.5]],
                "cover": {"n_atoms": 2, "sets": [[0], [1]], "weights": ["1/2", "1/2"]},
                "function": {"kind": "coordinate_mean"},
                "r_grid": [0.25],
                "alpha": {"epsilons": ["1/2"]}}"#,
        )
        .unwrap();
        let s = d.scenario().unwrap();
        assert!(s.certified());
        assert_eq!(s.trials, 10_000);
        assert_eq!(d.alpha.unwrap().mode, AlphaModeSpec::Auto);
    }

    #[test]
    fn defaults() {
        let p: PathologicalDoc = serde_json::from_str("{}").unwrap();
        assert_eq!(p.trees.len(), 2);
        assert!(p.theta.build().is_ok());
        let e: ExampleEasyDoc = serde_json::from_str(r#"{"depth": 3, "samples": 10}"#).unwrap();
        assert_eq!(e.rule, MRule::Cube);
    }
}
