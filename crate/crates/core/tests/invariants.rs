use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use transience::gadgets::GamblersRuin;
use transience::mdp::{Fan, FiniteMdp, Mdp, StateId};
use transience::solvers::{evaluate_reach, reach_solution, return_probability, safety_solution, evaluate_safety, DEFAULT_TOL};
use transience::synthesis::{plastering_uniformize, FinitePhi, LocalOracle};
use transience::transforms::adjusted_probabilities;
use transience::verify::{random_finite_mdp, random_md, reach_instance, SinkSpec, TailChains};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_is_valid_and_reproducible(seed in any::<u64>(), n in 1usize..16, acyclic in any::<bool>()) {
        let spec = SinkSpec { acyclic, ..Default::default() };
        let a = random_finite_mdp(seed, n, 3, 0.5, spec).unwrap();
        let b = random_finite_mdp(seed, n, 3, 0.5, spec).unwrap();
        prop_assert!(a.validate().is_ok());
        prop_assert_eq!(a.to_json_string(), b.to_json_string());
        let back = FiniteMdp::from_json_str(&a.to_json_string()).unwrap();
        prop_assert_eq!(back.to_json_string(), a.to_json_string());
    }

    #[test]
    fn optimal_reach_dominates_random_strategies(seed in any::<u64>()) {
        let fm = random_finite_mdp(seed, 10, 3, 0.5, SinkSpec::default()).unwrap();
        let target = fm.indicator(fm.find_label("win"));
        let (val, best) = reach_solution(&fm, &target, DEFAULT_TOL).unwrap();
        let got = evaluate_reach(&fm, &best, &target).unwrap();
        let other = evaluate_reach(&fm, &random_md(&fm, &mut ChaCha8Rng::seed_from_u64(seed)), &target).unwrap();
        for s in 0..fm.len() {
            prop_assert!((0.0..=1.0).contains(&val.values[s]));
            prop_assert!((got[s] - val.values[s]).abs() <= 1e-9);
            prop_assert!(other[s] <= val.values[s] + 1e-9);
        }
    }

    #[test]
    fn safety_value_is_attained(seed in any::<u64>()) {
        let fm = random_finite_mdp(seed, 10, 3, 0.5, SinkSpec::default()).unwrap();
        let avoid = fm.indicator(fm.find_label("lose"));
        let (val, best) = safety_solution(&fm, &avoid, DEFAULT_TOL).unwrap();
        let got = evaluate_safety(&fm, &best, &avoid).unwrap();
        for s in 0..fm.len() {
            prop_assert!((got[s] - val.values[s]).abs() <= 1e-9);
        }
    }

    #[test]
    fn plastering_is_uniformly_eps_optimal(seed in any::<u64>(), eps in 0.01f64..0.5) {
        let (fm, phi) = reach_instance(seed, 14, SinkSpec::default()).unwrap();
        let (sigma, state) = plastering_uniformize(&fm, &phi, eps, &LocalOracle).unwrap();
        let fp = FinitePhi::of(&fm, &phi).unwrap();
        let val = fp.solve(&fm).unwrap().0.values;
        let got = fp.evaluate(&fm, &sigma).unwrap();
        for s in 0..fm.len() {
            prop_assert!(got[s] >= val[s] - eps - 1e-9);
        }
        prop_assert!(state.rounds.iter().all(|r| r.escape_ok() && r.drop_ok()));
    }

    #[test]
    fn tail_copies_round_trip(seed in any::<u64>(), k in 1u64..1_000) {
        let fm = random_finite_mdp(seed, 6, 3, 0.5, SinkSpec::default()).unwrap();
        let tails = TailChains::new(fm);
        for j in 0..tails.absorbing.len() {
            let c = tails.copy(j, k);
            prop_assert_eq!(tails.decode_copy(c), Some((j, k)));
            prop_assert!(!tails.is_skeleton(c));
        }
        for s in tails.skeleton() {
            prop_assert_eq!(tails.decode_copy(s), None);
        }
    }

    #[test]
    fn adjusted_chain_reproduces_fan(r in 0.05f64..0.95) {
        let fan = Fan::new(move |i| (StateId(i as u64), (1.0 - r) * r.powi(i as i32 - 1)));
        let q = adjusted_probabilities(&fan, 25);
        let mut stay = 1.0;
        for (i, qi) in q.iter().enumerate() {
            let p = (1.0 - r) * r.powi(i as i32);
            prop_assert!((stay * qi - p).abs() <= 1e-12);
            stay *= 1.0 - qi;
        }
    }

    #[test]
    fn gamblers_ruin_return_bracketed(p in 0.55f64..0.95) {
        let g = GamblersRuin::new(p).unwrap();
        let a = return_probability(&g, GamblersRuin::w(0), &[100]).unwrap();
        let oracle = (1.0 - p) / p;
        prop_assert!(a.re.lower <= oracle + 1e-9 && oracle <= a.re.upper + 1e-9);
        prop_assert!(g.return_bound(GamblersRuin::w(0)).is_some());
    }
}
