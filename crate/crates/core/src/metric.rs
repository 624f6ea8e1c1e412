//! Pseudo-metrics on finite products: the weighted-cover metric `d_{𝒞,w}` and
//! the block metric `δ_{φ,ℬ}`. Both depend on a pair of points only through the
//! set of coordinates where they differ, which is what [`DiffCost`] captures.

use serde::{Deserialize, Serialize};

use crate::algebra::{min_weight_cover, AtomSet, Cover, GroundSet, Partition, MAX_ATOMS};
use crate::error::{check_limit, invalid, Error, Result};
use crate::exact::Exact;
use crate::submeasure::Submeasure;

/// A point of `∏_j Ω_j`, each `Ω_j` a finite alphabet `{0, …, k_j − 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProductPoint {
    coords: Vec<u32>,
}

impl ProductPoint {
    pub fn new(coords: Vec<u32>) -> Self {
        ProductPoint { coords }
    }

    /// Checks the length and that each coordinate lies in its alphabet.
    pub fn checked(coords: Vec<u32>, alphabet_sizes: &[usize]) -> Result<Self> {
        if coords.len() != alphabet_sizes.len() {
            return invalid(format!("point has {} coordinates, expected {}", coords.len(), alphabet_sizes.len()));
        }
        for (j, (&c, &k)) in coords.iter().zip(alphabet_sizes).enumerate() {
            if c as usize >= k {
                return invalid(format!("coordinate {j} is {c}, alphabet size is {k}"));
            }
        }
        Ok(ProductPoint { coords })
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// `{j : x_j ≠ y_j}`.
    pub fn difference(&self, other: &ProductPoint) -> Result<AtomSet> {
        if self.len() != other.len() {
            return invalid(format!("points have {} and {} coordinates", self.len(), other.len()));
        }
        check_limit("product coordinates", self.len(), MAX_ATOMS)?;
        Ok(difference_set(&self.coords, &other.coords))
    }
}

pub(crate) fn difference_set(x: &[u32], y: &[u32]) -> AtomSet {
    let mut d = AtomSet::EMPTY;
    for (j, (a, b)) in x.iter().zip(y).enumerate() {
        if a != b {
            d.insert(j);
        }
    }
    d
}

/// A pseudo-metric given by a cost of the difference set.
pub trait DiffCost: Sync {
    /// Number of coordinates.
    fn n_coords(&self) -> usize;

    fn cost(&self, diff: AtomSet) -> Result<Exact>;

    fn dist(&self, x: &ProductPoint, y: &ProductPoint) -> Result<Exact> {
        if x.len() != self.n_coords() {
            return invalid(format!("point has {} coordinates, metric expects {}", x.len(), self.n_coords()));
        }
        self.cost(x.difference(y)?)
    }
}

/// `d_{𝒞,w}`: the least total weight of cover entries whose union contains the
/// difference set.
#[derive(Clone, Debug)]
pub struct CoverMetric {
    cover: Cover,
    weights: Vec<Exact>,
    /// Entries are pairwise disjoint, so every cover of `D` must use exactly
    /// the entries meeting `D`.
    disjoint: bool,
}

impl CoverMetric {
    pub fn new(cover: Cover) -> Result<Self> {
        let weights = match cover.weights() {
            Some(w) => w.to_vec(),
            None => return invalid("the cover metric needs a weighted cover"),
        };
        let mut seen = AtomSet::EMPTY;
        let mut disjoint = true;
        for &s in cover.sets() {
            disjoint &= seen.is_disjoint(s);
            seen = seen.union(s);
        }
        Ok(CoverMetric { cover, weights, disjoint })
    }

    pub fn cover(&self) -> &Cover {
        &self.cover
    }

    /// The chosen entries of an optimal cover of `diff`.
    pub fn witness(&self, diff: AtomSet) -> Result<(Exact, Vec<usize>)> {
        self.cover.ground().check(diff)?;
        if self.disjoint {
            let chosen: Vec<usize> = (0..self.cover.len())
                .filter(|&i| !self.cover.sets()[i].is_disjoint(diff))
                .collect();
            let covered = chosen.iter().fold(AtomSet::EMPTY, |u, &i| u.union(self.cover.sets()[i]));
            if !diff.is_subset(covered) {
                return Err(Error::Uncoverable);
            }
            let w = chosen.iter().map(|&i| self.weights[i].clone()).sum();
            return Ok((w, chosen));
        }
        let sol = min_weight_cover(diff, self.cover.sets(), &self.weights).ok_or(Error::Uncoverable)?;
        Ok((sol.weight, sol.chosen))
    }

    /// A floating-point copy for hot loops.
    pub fn to_f64(&self) -> FloatCoverMetric {
        FloatCoverMetric {
            sets: self.cover.sets().to_vec(),
            weights: self.weights.iter().map(Exact::to_f64).collect(),
            n_coords: self.cover.ground().n_atoms(),
            disjoint: self.disjoint,
        }
    }
}

impl DiffCost for CoverMetric {
    fn n_coords(&self) -> usize {
        self.cover.ground().n_atoms()
    }

    fn cost(&self, diff: AtomSet) -> Result<Exact> {
        self.witness(diff).map(|(w, _)| w)
    }
}

/// `d_{𝒞,w}` with `f64` weights. Each distance is a sum of at most 128 rounded
/// weights, so the relative error stays below 1e-12 whenever the optimal cover
/// is unique; ties between covers can only change which optimum is reported.
#[derive(Clone, Debug)]
pub struct FloatCoverMetric {
    sets: Vec<AtomSet>,
    weights: Vec<f64>,
    n_coords: usize,
    disjoint: bool,
}

impl FloatCoverMetric {
    pub fn n_coords(&self) -> usize {
        self.n_coords
    }

    pub fn cost(&self, diff: AtomSet) -> Option<f64> {
        if self.disjoint {
            let mut covered = AtomSet::EMPTY;
            let mut total = 0.0;
            for (s, w) in self.sets.iter().zip(&self.weights) {
                if !s.is_disjoint(diff) {
                    covered = covered.union(*s);
                    total += w;
                }
            }
            return diff.is_subset(covered).then_some(total);
        }
        min_weight_cover(diff, &self.sets, &self.weights).map(|s| s.weight)
    }

    pub fn dist(&self, x: &[u32], y: &[u32]) -> Option<f64> {
        self.cost(difference_set(x, y))
    }
}

/// `δ_{φ,ℬ}(x,y) = φ(⋃{B ∈ ℬ : x(B) ≠ y(B)})`, points indexed by blocks.
#[derive(Clone, Debug)]
pub struct BlockMetric {
    phi: Submeasure,
    partition: Partition,
}

impl BlockMetric {
    pub fn new(phi: Submeasure, partition: Partition) -> Result<Self> {
        if phi.ground() != partition.ground() {
            return invalid("submeasure and partition live on different ground sets");
        }
        Ok(BlockMetric { phi, partition })
    }

    pub fn phi(&self) -> &Submeasure {
        &self.phi
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }
}

impl DiffCost for BlockMetric {
    fn n_coords(&self) -> usize {
        self.partition.len()
    }

    fn cost(&self, diff: AtomSet) -> Result<Exact> {
        GroundSet::new(self.partition.len())?.check(diff)?;
        Ok(self.phi.eval(self.partition.union_of(diff)))
    }
}

/// `d_{𝒞,w}(x, y)`; the cover must carry weights.
pub fn dist_cover(x: &ProductPoint, y: &ProductPoint, cover: &Cover) -> Result<Exact> {
    CoverMetric::new(cover.clone())?.dist(x, y)
}

/// `δ_{φ,ℬ}(x, y)` for points indexed by the blocks of `partition`.
pub fn dist_blocks(x: &ProductPoint, y: &ProductPoint, phi: &Submeasure, partition: &Partition) -> Result<Exact> {
    BlockMetric::new(phi.clone(), partition.clone())?.dist(x, y)
}

/// Normalized Hamming distance `|{j : x_j ≠ y_j}| / n`.
pub fn normalized_hamming(x: &ProductPoint, y: &ProductPoint) -> Result<Exact> {
    let d = x.difference(y)?;
    if x.is_empty() {
        return Ok(Exact::integer(0));
    }
    Ok(Exact::ratio(d.len() as i64, x.len() as i64))
}

/// The cover of the block index set with entries `{B ∈ ℬ : B ⊆ C_i}` and
/// weights `φ(C_i)`. Every `C_i` must be a union of blocks.
pub fn induced_block_cover(cover: &Cover, partition: &Partition, phi: &Submeasure) -> Result<Cover> {
    if cover.ground() != partition.ground() || phi.ground() != partition.ground() {
        return invalid("cover, partition and submeasure must share a ground set");
    }
    let index = GroundSet::new(partition.len())?;
    let mut sets = Vec::with_capacity(cover.len());
    let mut weights = Vec::with_capacity(cover.len());
    for (i, &c) in cover.sets().iter().enumerate() {
        let inside = AtomSet::from_atoms(
            partition.blocks().iter().enumerate().filter(|(_, b)| b.is_subset(c)).map(|(k, _)| k),
        );
        if partition.union_of(inside) != c {
            return invalid(format!("cover entry {i} is not a union of partition blocks"));
        }
        sets.push(inside);
        weights.push(phi.eval(c));
    }
    Cover::weighted(index, sets, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::submeasure::{example_easy, MRule};

    fn pt(c: &[u32]) -> ProductPoint {
        ProductPoint::new(c.to_vec())
    }

    #[test]
    fn equal_points_are_at_zero() {
        let g = GroundSet::new(3).unwrap();
        let c = Cover::weighted(g, g.singletons(), vec![Exact::ratio(1, 3); 3]).unwrap();
        assert_eq!(dist_cover(&pt(&[1, 0, 1]), &pt(&[1, 0, 1]), &c).unwrap(), Exact::integer(0));
    }

    #[test]
    fn singleton_cover_is_hamming() {
        let g = GroundSet::new(10).unwrap();
        let c = Cover::weighted(g, g.singletons(), vec![Exact::ratio(1, 10); 10]).unwrap();
        let x = pt(&[0; 10]);
        let y = pt(&[1, 0, 1, 0, 0, 0, 0, 0, 0, 1]);
        assert_eq!(dist_cover(&x, &y, &c).unwrap(), Exact::ratio(3, 10));
        assert_eq!(normalized_hamming(&x, &y).unwrap(), Exact::ratio(3, 10));
    }

    #[test]
    fn triangle_cover_prefers_two_cheap_sets() {
        // C = ({0,1},{1,2},{0,2}), w = (1,1,5), D = {0,2}: {0,1}∪{1,2} costs 2.
        let g = GroundSet::new(3).unwrap();
        let sets = vec![AtomSet::from_atoms([0, 1]), AtomSet::from_atoms([1, 2]), AtomSet::from_atoms([0, 2])];
        let c = Cover::weighted(g, sets, vec![Exact::integer(1), Exact::integer(1), Exact::integer(5)]).unwrap();
        let m = CoverMetric::new(c.clone()).unwrap();
        let (w, chosen) = m.witness(AtomSet::from_atoms([0, 2])).unwrap();
        assert_eq!(w, Exact::integer(2));
        assert_eq!(chosen, vec![0, 1]);
        assert_eq!(dist_cover(&pt(&[0, 0, 0]), &pt(&[1, 0, 1]), &c).unwrap(), Exact::integer(2));
        assert_eq!(m.to_f64().cost(AtomSet::from_atoms([0, 2])), Some(2.0));
    }

    #[test]
    fn uncoverable_difference_is_an_error() {
        let g = GroundSet::new(3).unwrap();
        let c = Cover::weighted(g, vec![AtomSet::from_atoms([0, 1])], vec![Exact::integer(1)]).unwrap();
        assert!(matches!(dist_cover(&pt(&[0, 0, 0]), &pt(&[0, 0, 1]), &c), Err(Error::Uncoverable)));
        assert!(dist_cover(&pt(&[0, 0]), &pt(&[0, 0, 1]), &c).is_err());
        let unweighted = Cover::new(g, g.singletons()).unwrap();
        assert!(dist_cover(&pt(&[0, 0, 0]), &pt(&[0, 0, 1]), &unweighted).is_err());
    }

    #[test]
    fn block_metric_on_uniform_measure() {
        let g = GroundSet::new(8).unwrap();
        let phi = Submeasure::measure(crate::AtomMeasure::uniform(g, &Exact::integer(1)));
        let blocks = (0..4).map(|k| AtomSet::from_atoms([2 * k, 2 * k + 1])).collect();
        let p = Partition::new(g, blocks).unwrap();
        let x = pt(&[0, 1, 1, 0]);
        assert_eq!(dist_blocks(&x, &x, &phi, &p).unwrap(), Exact::integer(0));
        assert_eq!(dist_blocks(&x, &pt(&[0, 1, 0, 0]), &phi, &p).unwrap(), Exact::ratio(1, 4));
        assert!(dist_blocks(&x, &pt(&[0, 1, 0]), &phi, &p).is_err());
    }

    #[test]
    fn block_metric_on_example_easy() {
        let ex = example_easy(2, &MRule::Cube).unwrap();
        let p = Partition::singletons(ex.ground());
        // Block [0,2] is a single leaf at depth 2.
        let b = ex.index.block(0, 2);
        let mut y = vec![0u32; 4];
        for a in b.iter() {
            y[a] = 1;
        }
        assert_eq!(dist_blocks(&pt(&[0; 4]), &pt(&y), &ex.phi, &p).unwrap(), ex.xi[2]);
    }

    #[test]
    fn block_metric_below_induced_cover_metric() {
        let g = GroundSet::new(6).unwrap();
        let phi = Submeasure::tabulate(g, |s| Exact::integer(s.len().min(2) as i64)).unwrap();
        let p = Partition::new(g, vec![AtomSet::from_atoms([0, 1]), AtomSet::from_atoms([2, 3]), AtomSet::from_atoms([4, 5])]).unwrap();
        let c = Cover::new(g, vec![AtomSet::from_atoms([0, 1, 2, 3]), AtomSet::from_atoms([2, 3, 4, 5]), AtomSet::from_atoms([4, 5, 0, 1])]).unwrap();
        let induced = induced_block_cover(&c, &p, &phi).unwrap();
        assert_eq!(induced.sets()[0], AtomSet::from_atoms([0, 1]));
        let d = CoverMetric::new(induced).unwrap();
        let delta = BlockMetric::new(phi, p).unwrap();
        for diff in GroundSet::new(3).unwrap().subsets() {
            assert!(delta.cost(diff).unwrap() <= d.cost(diff).unwrap());
        }
        let bad = Cover::new(g, vec![AtomSet::from_atoms([0, 2])]).unwrap();
        assert!(induced_block_cover(&bad, delta.partition(), delta.phi()).is_err());
    }

    #[test]
    fn checked_points() {
        assert!(ProductPoint::checked(vec![0, 2], &[2, 3]).is_ok());
        assert!(ProductPoint::checked(vec![2, 0], &[2, 3]).is_err());
        assert!(ProductPoint::checked(vec![0], &[2, 3]).is_err());
    }
}
