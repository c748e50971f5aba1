//! Randomized invariants of rewards, gaps, oracles and the tree counter.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use privcsb::env::{make_coverage, make_kpath};
use privcsb::instance::CoverageGraph;
use privcsb::policy::{radius_ldp1, radius_ldp2};
use privcsb::privacy::TreeAggregator;
use privcsb::{DecisionSet, OracleKind, OracleSpec, RewardFn, SuperArm};

/// `(arms, items, edges, mu, nu)`.
type CoverageCase = (usize, usize, Vec<(usize, usize)>, Vec<f64>, Vec<f64>);

fn coverage_case() -> impl Strategy<Value = CoverageCase> {
    (2usize..=6, 1usize..=5).prop_flat_map(|(arms, items)| {
        let edges = prop::collection::btree_set((0..arms, 0..items), 1..=arms * items)
            .prop_map(|s| s.into_iter().collect::<Vec<_>>());
        let mu = prop::collection::vec(0.0f64..=1.0, arms);
        let nu = prop::collection::vec(0.0f64..=1.0, arms);
        (Just(arms), Just(items), edges, mu, nu)
    })
}

fn all_members(arms: usize) -> Vec<SuperArm> {
    (1u32..(1 << arms))
        .map(|mask| SuperArm::new((0..arms).filter(|i| mask >> i & 1 == 1).collect()).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn coverage_is_monotone_and_smooth((arms, items, edges, mu, nu) in coverage_case()) {
        let r = RewardFn::coverage(CoverageGraph::new(arms, items, &edges).unwrap());
        let lo: Vec<f64> = mu.iter().zip(&nu).map(|(a, b)| a.min(*b)).collect();
        let hi: Vec<f64> = mu.iter().zip(&nu).map(|(a, b)| a.max(*b)).collect();
        for s in all_members(arms) {
            let (a, b) = (r.expected_reward(&s, &lo).unwrap(), r.expected_reward(&s, &hi).unwrap());
            prop_assert!(a <= b + 1e-12);
            let l1: f64 = s.iter().map(|i| hi[i] - lo[i]).sum();
            let linf = s.iter().map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
            prop_assert!(b - a <= r.declared_b1() * l1 + 1e-12);
            prop_assert!(b - a <= r.declared_binf() * linf + 1e-12);
        }
    }

    #[test]
    fn linear_is_monotone_and_smooth(
        k in 1usize..=4,
        scale in 0.1f64..=3.0,
        mu in prop::collection::vec(0.0f64..=1.0, 8),
        nu in prop::collection::vec(0.0f64..=1.0, 8),
    ) {
        let r = RewardFn::linear(scale, k).unwrap();
        let s = SuperArm::new((0..k).map(|i| 2 * i).collect()).unwrap();
        let lo: Vec<f64> = mu.iter().zip(&nu).map(|(a, b)| a.min(*b)).collect();
        let hi: Vec<f64> = mu.iter().zip(&nu).map(|(a, b)| a.max(*b)).collect();
        let (a, b) = (r.expected_reward(&s, &lo).unwrap(), r.expected_reward(&s, &hi).unwrap());
        prop_assert!(a <= b + 1e-12);
        let l1: f64 = s.iter().map(|i| hi[i] - lo[i]).sum();
        prop_assert!(b - a <= r.declared_b1() * l1 + 1e-12);
    }

    #[test]
    fn expected_reward_averages_realized((arms, items, edges, mu, _nu) in coverage_case()) {
        let r = RewardFn::coverage(CoverageGraph::new(arms, items, &edges).unwrap());
        for s in all_members(arms) {
            let mut avg = 0.0;
            for mask in 0u32..(1 << arms) {
                let x: Vec<f64> = (0..arms).map(|i| f64::from(mask >> i & 1)).collect();
                let p: f64 = (0..arms).map(|i| if x[i] == 1.0 { mu[i] } else { 1.0 - mu[i] }).product();
                avg += p * r.realized_reward(&s, &x).unwrap();
            }
            prop_assert!((avg - r.expected_reward(&s, &mu).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn gap_profile_matches_brute_force(
        (arms, items, edges, mu, _nu) in coverage_case(),
        k in 1usize..=3,
        alpha in 0.3f64..=1.0,
    ) {
        let inst = make_coverage(arms, items, &edges, k.min(arms), mu).unwrap();
        let members = inst.decision_set().members().unwrap().to_vec();
        let values: Vec<f64> = members.iter().map(|s| inst.expected_reward(s)).collect();
        let opt = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let g = inst.gap_profile(alpha).unwrap();
        prop_assert_eq!(g.opt, opt);
        for i in 0..arms {
            let gaps: Vec<f64> = members
                .iter()
                .zip(&values)
                .filter(|(s, &v)| s.contains(i) && v < alpha * opt)
                .map(|(_, &v)| alpha * opt - v)
                .collect();
            prop_assert_eq!(g.delta_min[i], gaps.iter().copied().reduce(f64::min));
            prop_assert_eq!(g.delta_max[i], gaps.iter().copied().reduce(f64::max));
        }
    }

    #[test]
    fn path_oracle_agrees_with_enumeration(
        paths in 1usize..=6,
        k in 1usize..=4,
        seed in any::<u64>(),
    ) {
        let m = paths * k;
        let inst = make_kpath(m, k, 0.1 * k as f64, 1.0).unwrap();
        let ds = inst.decision_set();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu_bar: Vec<f64> = (0..m).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
        let fast = OracleSpec::new(OracleKind::KPath).solve(ds, inst.reward(), &mu_bar, &mut rng).unwrap();
        let slow = OracleSpec::new(OracleKind::Exact).solve(ds, inst.reward(), &mu_bar, &mut rng).unwrap();
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn radius_scaling(n in 1u64..10_000, horizon in 2u64..1_000_000, k in 1usize..16, eps in 0.05f64..5.0) {
        let ratio = radius_ldp1(n, horizon, k, eps) / radius_ldp2(n, horizon, eps);
        prop_assert!((ratio - (k as f64).sqrt()).abs() < 1e-9);
        let halved = radius_ldp2(n, horizon, eps / 2.0) / radius_ldp2(n, horizon, eps);
        prop_assert!((halved - 2.0).abs() < 1e-9);
    }

    #[test]
    fn noiseless_tree_is_a_running_sum(values in prop::collection::vec(0.0f64..=1.0, 1..300)) {
        let mut tree = TreeAggregator::noiseless(values.len()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut sum = 0.0;
        for (t, &v) in values.iter().enumerate() {
            tree.insert(v, &mut rng).unwrap();
            sum += v;
            prop_assert!((tree.query(t + 1).unwrap() - sum).abs() < 1e-9);
        }
        prop_assert_eq!(tree.draws(), 0);
    }
}

#[test]
fn subsets_enumeration_counts() {
    let ds = DecisionSet::subsets(5, 2).unwrap();
    assert_eq!(ds.members().unwrap().len(), 5 + 10);
}
