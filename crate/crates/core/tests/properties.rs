use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use oran_slice::experiment::{mean_std, round_robin_mapping};
use oran_slice::feasibility::check;
use oran_slice::io::ScenarioFile;
use oran_slice::oracle::{exhaustive_placement, relative_gap, OracleMode};
use oran_slice::placement::{admitted_ratio, cost_psi, place};
use oran_slice::power::closed_form_scalar;
use oran_slice::radio::zf_beamformer;
use oran_slice::{
    generate_scenario, solve_joint, testkit, ChannelSet, GeneratorConfig, MappingAs, PlacementWeights,
    PowerAllocation, PowerOptions, Radio, Resources,
};

const CAP_TOL: f64 = 1e-9;

fn close(a: &Resources, b: &Resources, tol: f64) -> bool {
    a.to_array().iter().zip(b.to_array()).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn zf_inverts_the_channel(seed in any::<u64>(), r in 1usize..=8, u_frac in 0.0f64..1.0) {
        let u = 1 + ((r as f64 * u_frac) as usize).min(r - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = testkit::random_complex_matrix(&mut rng, r, u);
        if let Ok(w) = zf_beamformer(&h) {
            let e = h.adjoint() * w;
            for i in 0..u {
                for j in 0..u {
                    let target = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((e[(i, j)].re - target).abs() < 1e-8 && e[(i, j)].im.abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn closed_form_is_nonnegative(y in 0.0f64..1e3, w in 1e-6f64..1e3, x in 1e-6f64..1e3, z in 0.0f64..1e3) {
        prop_assert!(closed_form_scalar(y, w, x, z) >= 0.0);
    }

    #[test]
    fn gap_sign_follows_order(oracle in 1e-3f64..1e9, frac in 0.0f64..1.0) {
        let heuristic = oracle * frac;
        prop_assert!(relative_gap(oracle, heuristic) >= 0.0);
        prop_assert!(relative_gap(oracle, oracle / frac.max(1e-3)) <= 0.0);
    }

    #[test]
    fn sample_stddev_is_nonnegative(values in prop::collection::vec(-1e6f64..1e6, 1..40)) {
        let (mean, sd) = mean_std(&values).unwrap();
        prop_assert!(sd >= 0.0);
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(mean >= lo - 1e-9 && mean <= hi + 1e-9);
    }

    #[test]
    fn rates_grow_with_power(seed in 0u64..500, scale in 1.0f64..10.0) {
        let (sc, ch) = testkit::random_instance(2, 2, 2, seed);
        let radio = Radio::new(&sc, &ch).unwrap();
        let a = testkit::feasible_diagonal(&radio);
        let ibar = radio.interference_upper_bound(&a).unwrap();
        let low = PowerAllocation::uniform(&sc, 0.1);
        let high = PowerAllocation::uniform(&sc, 0.1 * scale);
        let r_low = radio.rates(&a, &low, &ibar);
        let r_high = radio.rates(&a, &high, &ibar);
        for (l, h) in r_low.iter().zip(&r_high) {
            prop_assert!(h >= l);
        }
    }

    #[test]
    fn placement_conserves_capacity(seed in 0u64..10_000, n_slices in 1usize..20, n_dcs in 1usize..6, single in any::<bool>()) {
        let cfg = GeneratorConfig { n_slices, n_dcs, ..Default::default() };
        let sc = generate_scenario(&cfg, seed).unwrap();
        let a = round_robin_mapping(&sc);
        let w = PlacementWeights::default();
        let pl = place(&sc, &a, &w, single).unwrap();
        for d in 0..sc.n_dcs() {
            let mut used = Resources::ZERO;
            for s in 0..sc.n_slices() {
                used += pl.shares[s][d];
            }
            prop_assert!(pl.residual[d].min_component() >= -CAP_TOL * sc.dcs[d].capacity.max_component());
            prop_assert!(close(&(used + pl.residual[d]), &sc.dcs[d].capacity, CAP_TOL));
        }
        for s in 0..sc.n_slices() {
            if pl.admitted[s] {
                let mut total = Resources::ZERO;
                for d in 0..sc.n_dcs() {
                    total += pl.shares[s][d];
                }
                prop_assert!(close(&total, &sc.slices[s].total_demand(), CAP_TOL));
                if single {
                    prop_assert_eq!(pl.dcs_of(s).len(), 1);
                }
            } else {
                prop_assert!(pl.dcs_of(s).is_empty());
            }
        }
        let ratio = admitted_ratio(&pl, single);
        prop_assert!((0.0..=1.0).contains(&ratio));
        let (phi, psi) = cost_psi(&sc, &a, &pl, &w);
        prop_assert!(phi >= 0.0 && psi <= phi);
    }

    #[test]
    fn oracle_admits_at_least_as_many(seed in 0u64..10_000, n_slices in 1usize..7, n_dcs in 1usize..4) {
        let mut cfg = GeneratorConfig { n_slices, n_dcs, slice_demand_spread: 0.5, ..Default::default() };
        cfg.slice_demand_mean = cfg.slice_demand_mean.map(|x| x * 3.0);
        cfg.params.nu = 1e6;
        let sc = generate_scenario(&cfg, seed).unwrap();
        let a = round_robin_mapping(&sc);
        let w = PlacementWeights::default();
        let heur = place(&sc, &a, &w, true).unwrap();
        let best = exhaustive_placement(&sc, &a, &w, OracleMode::SingleDc).unwrap().unwrap();
        prop_assert!(heur.n_admitted() <= best.placement.n_admitted());
    }

    #[test]
    fn feasible_solutions_pass_the_checker(seed in 0u64..300) {
        let (sc, ch) = testkit::random_instance(1 + seed as usize % 2, 1, 1 + seed as usize % 2, seed);
        if let Ok(sol) = solve_joint(&sc, &ch, &PowerOptions::default()) {
            if sol.feasible {
                let radio = Radio::new(&sc, &ch).unwrap();
                let report = check(&radio, &sol.mapping, &sol.power, 1e-6);
                prop_assert!(report.is_feasible(), "{:?}", report.violations);
                prop_assert!(sol.power.flat().iter().all(|&p| p >= 0.0));
            }
        }
    }

    #[test]
    fn scenario_files_round_trip(seed in any::<u64>()) {
        let cfg = GeneratorConfig::default();
        let sc = generate_scenario(&cfg, seed).unwrap();
        let ch = ChannelSet::generate(&sc, &cfg.channel, seed);
        let file = ScenarioFile::new(sc, ch, cfg.channel, Some(seed));
        let back = ScenarioFile::from_json(&file.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, file);
    }

    #[test]
    fn mapping_bits_round_trip(v in 1usize..4, s in 1usize..4, bits in any::<u64>()) {
        let bits = bits & ((1u64 << (v * s)) - 1);
        let a = MappingAs::from_bits(v, s, bits);
        let mut back = 0u64;
        for vv in 0..v {
            for ss in 0..s {
                back |= (a.get(vv, ss) as u64) << (vv * s + ss);
            }
        }
        prop_assert_eq!(back, bits);
    }
}
