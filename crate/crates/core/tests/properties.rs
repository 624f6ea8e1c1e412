use proptest::prelude::*;

use submeasure_lab::algebra::{covering_multiplicity, is_uniform, refine_partitions, uniform_refinement};
use submeasure_lab::conclab::{
    alpha_exact, berry_esseen_bound, claim_msds_check, mc_tail, FiniteSpace, LipschitzFn, Scenario, TreeSpec,
};
use submeasure_lab::covnum::{covering_number, h_phi, pathology_index};
use submeasure_lab::entropy::{ent, herbst_chain_check, ledoux_check, shearer_check, tail_bound, FiniteDist, ProductDist};
use submeasure_lab::metric::{induced_block_cover, BlockMetric, CoverMetric, DiffCost, ProductPoint};
use submeasure_lab::submeasure::{audit_exhaustive, audit_submeasure, berry_esseen_params, Theta, WeightedCoverFamily};
use submeasure_lab::{AtomSet, Cover, Error, Exact, GroundSet, Partition, Submeasure};

fn ground(n: usize) -> GroundSet {
    GroundSet::new(n).unwrap()
}

/// `masks` plus a singleton for every atom they miss.
fn covering(n: usize, masks: &[u128]) -> Vec<AtomSet> {
    let mut sets: Vec<AtomSet> = masks.iter().map(|&m| AtomSet(m)).collect();
    let hit = sets.iter().fold(AtomSet::EMPTY, |u, s| u.union(*s));
    sets.extend(ground(n).full().difference(hit).iter().map(AtomSet::singleton));
    sets
}

fn arb_masks(max_n: usize, max_len: usize) -> impl Strategy<Value = (usize, Vec<u128>)> {
    (1..=max_n).prop_flat_map(move |n| (Just(n), prop::collection::vec(0u128..(1u128 << n), 1..=max_len)))
}

fn partition_from_labels(n: usize, labels: &[usize]) -> Partition {
    let labels_used = labels.iter().max().map_or(0, |m| m + 1);
    let blocks: Vec<AtomSet> = (0..labels_used)
        .map(|l| AtomSet::from_atoms((0..n).filter(|&a| labels[a] == l)))
        .filter(|b| !b.is_empty())
        .collect();
    Partition::new(ground(n), blocks).unwrap()
}

/// A cover-generated submeasure on `n` atoms with weights in quarters.
fn arb_cover_generated(max_n: usize) -> impl Strategy<Value = Submeasure> {
    (1..=max_n).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec((1u128..(1u128 << n), 1i64..8), 0..6),
            1i64..12,
        )
            .prop_map(|(n, gens, fallback)| {
                let gens = gens.into_iter().map(|(m, w)| (AtomSet(m), Exact::ratio(w, 4))).collect();
                let family = WeightedCoverFamily::new(ground(n), gens, Exact::ratio(fallback, 4)).unwrap();
                Submeasure::cover_generated(family)
            })
    })
}

fn arb_dist(max_k: usize) -> impl Strategy<Value = FiniteDist> {
    prop::collection::vec(1u32..10, 2..=max_k).prop_map(|w| {
        let total: u32 = w.iter().sum();
        FiniteDist::new(w.iter().map(|&x| x as f64 / total as f64).collect()).unwrap()
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn multiplicity_is_bounded((n, masks) in arb_masks(10, 8)) {
        let g = ground(n);
        let c = Cover::new(g, masks.iter().map(|&m| AtomSet(m)).collect()).unwrap();
        let k = covering_multiplicity(&c);
        prop_assert!(k <= c.len());
        prop_assert_eq!(k == c.len(), c.sets().iter().all(|&s| s == g.full()));
    }

    #[test]
    fn uniform_refinement_is_uniform((n, masks) in arb_masks(10, 8)) {
        let c = Cover::new(ground(n), covering(n, &masks)).unwrap();
        let r = uniform_refinement(&c).unwrap();
        prop_assert!(is_uniform(&r));
        prop_assert_eq!(covering_multiplicity(&r), covering_multiplicity(&c));
        prop_assert_eq!(r.len(), c.len());
        for (a, b) in r.sets().iter().zip(c.sets()) {
            prop_assert!(a.is_subset(*b));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn common_refinement(
        (n, lp, lq) in (1usize..=12).prop_flat_map(|n| (
            Just(n),
            prop::collection::vec(0..n, n),
            prop::collection::vec(0..n, n),
        ))
    ) {
        let p = partition_from_labels(n, &lp);
        let q = partition_from_labels(n, &lq);
        let r = refine_partitions(&p, &q).unwrap();
        prop_assert!(Partition::new(ground(n), r.blocks().to_vec()).is_ok());
        prop_assert!(r.refines(&p) && r.refines(&q));
        // Coarsest: atoms share a block exactly when they share one in both inputs.
        let same = |part: &Partition, a: usize, b: usize| part.blocks().iter().any(|s| s.contains(a) && s.contains(b));
        for a in 0..n {
            for b in 0..n {
                prop_assert_eq!(same(&r, a, b), same(&p, a, b) && same(&q, a, b));
            }
        }
    }

    #[test]
    fn cover_generated_is_a_submeasure(phi in arb_cover_generated(7)) {
        let audit = audit_exhaustive(&phi).unwrap();
        prop_assert!(audit.passed, "{:?}", audit.counterexample);
        prop_assert_eq!(phi.eval(AtomSet::EMPTY), Exact::integer(0));
    }

    #[test]
    fn covering_number_certificates((n, masks, extra) in (1usize..=6).prop_flat_map(|n| (
        Just(n),
        prop::collection::vec(1u128..(1u128 << n), 1..=10),
        prop::collection::vec(1u128..(1u128 << n), 0..=6),
    ))) {
        let g = ground(n);
        let family = covering(n, &masks);
        let mut larger = family.clone();
        larger.extend(extra.iter().map(|&m| AtomSet(m)));
        let small = covering_number(g, &family).unwrap();
        let big = covering_number(g, &larger).unwrap();
        prop_assert!(small.value <= big.value);

        for cert in [&small, &big] {
            let hits: Vec<u64> = (0..n)
                .map(|a| cert.primal.iter().filter(|t| t.set.contains(a)).map(|t| t.multiplicity).sum())
                .collect();
            prop_assert_eq!(*hits.iter().min().unwrap(), cert.multiplicity);
            prop_assert_eq!(cert.primal.iter().map(|t| t.multiplicity).sum::<u64>(), cert.length);
            prop_assert_eq!(&Exact::ratio(cert.multiplicity as i64, cert.length as i64), &cert.value);
            let dual = cert.dual.as_ref().unwrap();
            prop_assert_eq!(dual.mass(), cert.value.recip().unwrap());
        }
        let dual = small.dual.as_ref().unwrap();
        for &b in &family {
            prop_assert!(dual.eval(b) <= Exact::integer(1));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cover_generated_audit_beyond_exhaustive(
        (n, gens) in (13usize..=60).prop_flat_map(|n| (
            Just(n),
            prop::collection::vec((1u128..(1u128 << n), 1i64..8), 1..8),
        )),
        seed in any::<u64>(),
    ) {
        let gens = gens.into_iter().map(|(m, w)| (AtomSet(m), Exact::ratio(w, 4))).collect();
        let phi = Submeasure::cover_generated(WeightedCoverFamily::new(ground(n), gens, Exact::integer(2)).unwrap());
        let audit = audit_submeasure(&phi, 300, seed).unwrap();
        prop_assert!(audit.passed, "{:?}", audit.counterexample);
    }

    #[test]
    fn h_phi_bounds(phi in arb_cover_generated(6), num in 1i64..24) {
        let xi = Exact::ratio(num, 8);
        let r = h_phi(&phi, &xi).unwrap();
        let path = pathology_index(&phi).unwrap();
        prop_assert!(!r.lower_bound);
        prop_assert!(r.h <= xi.recip().unwrap());
        prop_assert!(r.xi_h <= Exact::integer(1));
        if path.mass > Exact::integer(0) {
            prop_assert!(r.h <= path.mass.recip().unwrap());
        }
        if let Some(dual) = &r.dual {
            for a in phi.ground().subsets() {
                if phi.eval(a) <= xi {
                    prop_assert!(dual.eval(a) <= xi);
                }
            }
        }
    }

    #[test]
    fn pathology_below_total(phi in arb_cover_generated(6)) {
        let p = pathology_index(&phi).unwrap();
        prop_assert!(p.mass <= phi.total());
        prop_assert_eq!(p.witness.mass(), p.mass.clone());
        for a in phi.ground().subsets() {
            prop_assert!(p.witness.eval(a) <= phi.eval(a));
        }
    }

    #[test]
    fn block_distance_below_induced_cover(
        phi in arb_cover_generated(6),
        labels in prop::collection::vec(0usize..6, 6),
        selections in prop::collection::vec(1u128..64, 0..5),
    ) {
        let n = phi.ground().n_atoms();
        let p = partition_from_labels(n, &labels[..n]);
        let b = p.len();
        let mut entries = vec![phi.ground().full()];
        entries.extend(selections.iter().map(|&s| p.union_of(AtomSet(s & ((1u128 << b) - 1)))).filter(|s| !s.is_empty()));
        let c = Cover::new(phi.ground(), entries).unwrap();
        let induced = CoverMetric::new(induced_block_cover(&c, &p, &phi).unwrap()).unwrap();
        let delta = BlockMetric::new(phi.clone(), p.clone()).unwrap();
        for d in ground(b).subsets() {
            prop_assert!(delta.cost(d).unwrap() <= induced.cost(d).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn entropy_nonnegative_and_homogeneous(
        (mu, f) in (2usize..8).prop_flat_map(|k| (
            prop::collection::vec(1u32..20, k).prop_map(|w| {
                let t: u32 = w.iter().sum();
                FiniteDist::new(w.iter().map(|&x| x as f64 / t as f64).collect()).unwrap()
            }),
            prop::collection::vec(0.0f64..10.0, k),
        )),
        c in 0.01f64..100.0,
    ) {
        let e = ent(&f, &mu).unwrap();
        prop_assert!(e >= -1e-9);
        let scaled: Vec<f64> = f.iter().map(|v| c * v).collect();
        let ec = ent(&scaled, &mu).unwrap();
        prop_assert!((ec - c * e).abs() <= 1e-9 * (1.0 + c * f.iter().sum::<f64>()));
    }

    #[test]
    fn ledoux_holds(
        (mu, f) in (2usize..8).prop_flat_map(|k| (
            prop::collection::vec(1u32..20, k).prop_map(|w| {
                let t: u32 = w.iter().sum();
                FiniteDist::new(w.iter().map(|&x| x as f64 / t as f64).collect()).unwrap()
            }),
            prop::collection::vec(-3.0f64..3.0, k),
        )),
    ) {
        let check = ledoux_check(&f, &mu).unwrap();
        prop_assert!(check.holds(), "{check:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn herbst_has_no_violations(
        (dists, f) in prop::collection::vec(arb_dist(3), 1..=4).prop_flat_map(|dists| {
            let points: usize = dists.iter().map(FiniteDist::len).product();
            (Just(dists), prop::collection::vec(0.0f64..2.0, points))
        }),
        d in 0.01f64..2.0,
    ) {
        let dist = ProductDist::new(dists).unwrap();
        let r = herbst_chain_check(&f, &dist, d, &[0.25, 0.5, 1.0, 2.0, 4.0, 8.0], &[0.1, 0.25, 0.5, 1.0]).unwrap();
        prop_assert_eq!(r.violations, 0);
        prop_assert_eq!(r.jensen_failures, 0);
    }

    #[test]
    fn alpha_monotone_and_below_corollary(
        (dists, masks, weights) in (1usize..=4).prop_flat_map(|n| (
            prop::collection::vec(arb_dist(2), n),
            prop::collection::vec(1u128..(1u128 << n), 1..=4),
            prop::collection::vec(1i64..5, 4 + n),
        )),
    ) {
        let n = dists.len();
        let sets = covering(n, &masks);
        let w: Vec<Exact> = weights[..sets.len()].iter().map(|&x| Exact::ratio(x, 4)).collect();
        let cover = Cover::weighted(ground(n), sets, w.clone()).unwrap();
        let k = covering_multiplicity(&cover);
        let w_f64: Vec<f64> = w.iter().map(Exact::to_f64).collect();
        let metric = CoverMetric::new(cover).unwrap();
        let space = FiniteSpace::product(&dists, &metric).unwrap();
        let eps: Vec<Exact> = [1, 2, 3, 4, 6, 8, 12, 16].iter().map(|&e| Exact::ratio(e, 8)).collect();
        let alphas = alpha_exact(&space, &eps).unwrap();
        for pair in alphas.windows(2) {
            prop_assert!(pair[1].alpha <= pair[0].alpha + 1e-12);
        }
        for a in &alphas {
            prop_assert!(a.alpha >= 0.0 && a.alpha <= 0.5 + 1e-12);
            let bound = tail_bound(k, &w_f64, a.epsilon.to_f64()).unwrap().concentration;
            prop_assert!(a.alpha <= bound + 1e-12, "alpha {} bound {}", a.alpha, bound);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn berry_esseen_checks_hold(p in 0.2f64..2.0, i_max in 1usize..=5, k_const in 1.0f64..4.0, inverse_log in any::<bool>()) {
        let theta = if inverse_log { Theta::InverseLog } else { Theta::Power(p) };
        match berry_esseen_params(&theta, i_max, k_const) {
            Ok(params) => prop_assert!(params.checks.all(), "{:?}", params.checks),
            // θ = 1/ln(1 + 1/ξ) pushes −ln w_2 far beyond f64 range.
            Err(Error::SearchExhausted(_)) if inverse_log && i_max >= 2 => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn berry_esseen_bound_is_a_probability(a in 0.5f64..=0.75, delta in 0.001f64..0.5, n in 1u64..5000) {
        let b = berry_esseen_bound(a, delta, n, 1.0).unwrap();
        let j = serde_json::to_value(&b).unwrap();
        for v in j.as_object().unwrap().values().filter_map(|v| v.as_f64()) {
            prop_assert!(v.is_finite());
        }
    }

    #[test]
    fn mc_tail_below_bound(
        (dists, masks, weights, point) in (1usize..=8).prop_flat_map(|n| (
            prop::collection::vec(arb_dist(3), n),
            prop::collection::vec(1u128..(1u128 << n), 1..=4),
            prop::collection::vec(1i64..5, 8 + n),
            prop::collection::vec(0u32..2, n),
        )),
        which in 0usize..2,
        seed in any::<u64>(),
    ) {
        let n = dists.len();
        let sets = covering(n, &masks);
        let w: Vec<Exact> = weights[..sets.len()].iter().map(|&x| Exact::ratio(x, 4)).collect();
        let cover = Cover::weighted(ground(n), sets, w).unwrap();
        let function = if which == 0 {
            LipschitzFn::DistanceToPoint { point: ProductPoint::new(point) }
        } else {
            // Entries have at most 8 coordinates, each changing f by at most 1/32.
            LipschitzFn::WeightedSum { coeffs: vec![1.0 / 32.0; n] }
        };
        let s = Scenario::new(dists, cover, function, vec![0.05, 0.1, 0.25, 0.5, 1.0], 2000, seed).unwrap();
        prop_assert!(s.certified());
        let report = mc_tail(&s).unwrap();
        for row in &report.rows {
            prop_assert_eq!(row.consistent, Some(true), "{:?}", row);
        }
    }
}

#[test]
fn tail_bound_scalings() {
    let w = [0.5, 0.25, 1.0];
    let base = tail_bound(2, &w, 0.7).unwrap();
    let doubled = tail_bound(4, &w, 0.7).unwrap();
    assert!(close(doubled.lipschitz, base.lipschitz * base.lipschitz));
    let scaled: Vec<f64> = w.iter().map(|v| 3.0 * v).collect();
    assert!(close(tail_bound(2, &scaled, 2.1).unwrap().concentration, base.concentration));
}

/// Every uniform cover of `n` coordinates by distinct non-empty subsets.
fn uniform_covers(n: usize) -> Vec<Cover> {
    let subsets: Vec<AtomSet> = (1u128..(1 << n)).map(AtomSet).collect();
    (1u64..(1 << subsets.len()))
        .filter_map(|mask| {
            let sets: Vec<AtomSet> = (0..subsets.len()).filter(|i| mask >> i & 1 == 1).map(|i| subsets[i]).collect();
            let c = Cover::new(ground(n), sets).unwrap();
            (covering_multiplicity(&c) > 0 && is_uniform(&c)).then_some(c)
        })
        .collect()
}

#[test]
fn shearer_on_all_uniform_covers() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for n in 1..=4 {
        let covers = uniform_covers(n);
        assert!(!covers.is_empty());
        for cover in &covers {
            let k = covering_multiplicity(cover);
            for _ in 0..100 {
                let factors = (0..n)
                    .map(|_| {
                        let p = rng.random_range(0.01..0.99);
                        FiniteDist::new(vec![p, 1.0 - p]).unwrap()
                    })
                    .collect();
                let dist = ProductDist::new(factors).unwrap();
                let f: Vec<f64> = (0..dist.n_points()).map(|_| rng.random_range(0.0..5.0)).collect();
                let check = shearer_check(&f, &dist, cover, k).unwrap();
                assert!(check.holds(), "n={n} cover={:?} {check:?}", cover.sets());
            }
        }
    }
}

#[test]
fn claim_on_every_small_tree() {
    let mut shapes: Vec<Vec<usize>> = (2..=8).map(|m| vec![m]).collect();
    for a in 2..=4 {
        for b in 2..=4 {
            if a * b <= 8 {
                shapes.push(vec![a, b]);
            }
        }
    }
    shapes.push(vec![2, 2, 2]);
    let ds = [0.5, 1.0, 2.0];
    for m in &shapes {
        let mut thresholds: Vec<Vec<f64>> = vec![vec![]];
        for _ in m {
            thresholds = thresholds
                .into_iter()
                .flat_map(|t| ds.iter().map(move |&d| [t.clone(), vec![d]].concat()))
                .collect();
        }
        for d in thresholds {
            let spec = TreeSpec::new(m.clone(), d.clone()).unwrap();
            let r = claim_msds_check(&spec).unwrap();
            assert!(r.size_bound_holds, "m={m:?} d={d:?}: {r:?}");
            assert_eq!(r.inclusion_holds, Some(true), "m={m:?} d={d:?}: {r:?}");
        }
    }
}

/// `α(r) ≤ sup_A μ(f_A − E f_A ≥ r/2)` over `f_A = min(d(A, ·), r)`, `μ(A) ≥ 1/2`:
/// the family behind the concentration-function proposition.
#[test]
fn alpha_below_lipschitz_tails_at_half_radius() {
    let g = ground(4);
    let covers = [
        Cover::weighted(g, g.singletons(), vec![Exact::ratio(1, 4); 4]).unwrap(),
        Cover::weighted(g, vec![AtomSet(0b0011), AtomSet(0b0110), AtomSet(0b1100), AtomSet(0b1001)], vec![Exact::ratio(1, 2); 4]).unwrap(),
    ];
    let dists = [
        vec![FiniteDist::uniform(2).unwrap(); 4],
        (1..=4).map(|j| FiniteDist::new(vec![j as f64 / 5.0, 1.0 - j as f64 / 5.0]).unwrap()).collect(),
    ];
    let radii: Vec<Exact> = [1, 2, 3, 4, 6].iter().map(|&e| Exact::ratio(e, 4)).collect();
    for cover in &covers {
        let metric = CoverMetric::new(cover.clone()).unwrap();
        for dist in &dists {
            let space = FiniteSpace::product(dist, &metric).unwrap();
            let alphas = alpha_exact(&space, &radii).unwrap();
            let n = space.n_points();
            let mu = space.masses_f64();
            for a in &alphas {
                let r = a.epsilon.to_f64();
                let mut sup: f64 = 0.0;
                for set in 1u32..(1 << n) {
                    let mass: f64 = (0..n).filter(|x| set >> x & 1 == 1).map(|x| mu[x]).sum();
                    if mass < 0.5 - 1e-12 {
                        continue;
                    }
                    let f: Vec<f64> = (0..n)
                        .map(|x| (0..n).filter(|y| set >> y & 1 == 1).map(|y| space.dist_f64(x, y)).fold(f64::INFINITY, f64::min).min(r))
                        .collect();
                    let mean: f64 = f.iter().zip(mu).map(|(v, p)| v * p).sum();
                    let tail: f64 = f.iter().zip(mu).filter(|(v, _)| **v - mean >= r / 2.0 - 1e-12).map(|(_, p)| p).sum();
                    sup = sup.max(tail);
                }
                assert!(a.alpha <= sup + 1e-12, "alpha({r}) = {} above {sup}", a.alpha);
            }
        }
    }
}
