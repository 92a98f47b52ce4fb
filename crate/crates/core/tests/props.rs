//! Property-based invariants over randomized inputs.

use bellrand::lhvm::SimulationReport;
use bellrand::profile::{
    discretize, inner_density, profile_leq, BitString, BoundSide, Monotone, Profile, SettingSet,
};
use bellrand::rational::{rat, Rat};
use bellrand::report::{
    parse_simulation_csv, parse_solve_csv, SimulationDoc, SolveCsvRow, SolveDoc, WitnessDoc,
    SCHEMA_VERSION,
};
use bellrand::solver::{constraint_density_sets, threshold_construct};
use num_bigint::BigInt;
use num_traits::Zero;
use proptest::prelude::*;

fn profile_strategy(max_len: usize) -> impl Strategy<Value = Profile> {
    prop::collection::vec(0u8..=16, 1..=max_len)
        .prop_map(|v| Profile::new(v.into_iter().map(|x| rat(x as i64, 16)).collect()).unwrap())
}

fn monotone_profile(max_len: usize) -> impl Strategy<Value = (Profile, Monotone)> {
    (profile_strategy(max_len), any::<bool>()).prop_map(|(p, dec)| {
        let mut v = p.values().to_vec();
        if dec {
            v.sort_by(|a, b| b.cmp(a));
            (Profile::new(v).unwrap(), Monotone::Decreasing)
        } else {
            v.sort();
            (Profile::new(v).unwrap(), Monotone::Increasing)
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn leq_is_reflexive_and_inner_density_symmetric(a in profile_strategy(6), b in profile_strategy(6)) {
        prop_assert!(profile_leq(&a, &a));
        prop_assert_eq!(inner_density(&a, &b), inner_density(&b, &a));
    }

    #[test]
    fn leq_is_transitive(a in profile_strategy(4), b in profile_strategy(4), c in profile_strategy(4)) {
        if profile_leq(&a, &b) && profile_leq(&b, &c) {
            prop_assert!(profile_leq(&a, &c));
        }
    }

    #[test]
    fn inner_density_equals_scaled_dot_for_equal_lengths(
        pair in (1usize..=6).prop_flat_map(|n| (
            prop::collection::vec(0u8..=16, n),
            prop::collection::vec(0u8..=16, n),
        ))
    ) {
        let (av, bv) = pair;
        let n = av.len();
        let a = Profile::new(av.iter().map(|&x| rat(x as i64, 16)).collect()).unwrap();
        let b = Profile::new(bv.iter().map(|&x| rat(x as i64, 16)).collect()).unwrap();
        let mut dot = Rat::zero();
        for (x, y) in a.values().iter().zip(b.values()) {
            dot += x * y;
        }
        dot /= BigInt::from(n);
        prop_assert_eq!(inner_density(&a, &b), dot);
    }

    #[test]
    fn discretize_sandwich(pm in monotone_profile(8), m in 2usize..=16) {
        let (p, dir) = pm;
        let upper = discretize(&p, m, BoundSide::Upper, dir).unwrap();
        let lower = discretize(&p, m, BoundSide::Lower, dir).unwrap();
        prop_assert!(profile_leq(&lower, &p));
        prop_assert!(profile_leq(&p, &upper));
    }

    #[test]
    fn set_profiles_live_in_the_unit_box(mask in 1u64..256) {
        let members: Vec<BitString> = (0..8)
            .filter(|s| (mask >> s) & 1 == 1)
            .map(|s| BitString::from_mask(s, 3))
            .collect();
        let s = SettingSet::from_members(3, members).unwrap();
        prop_assert!(s.profile().values().iter().all(|v| v >= &Rat::zero() && v <= &rat(1, 1)));
        let rho = constraint_density_sets(&s, &s).unwrap();
        prop_assert!(rho >= Rat::zero() && rho <= rat(1, 1));
    }

    #[test]
    fn threshold_reports_are_feasible_and_bounded(n in 1u64..=64, c16 in 1i64..=4) {
        let c = rat(c16, 16);
        let t = threshold_construct(n, &c, None).unwrap();
        prop_assert!(t.constraint <= c);
        prop_assert!(t.objective > 0.0 && t.objective <= 1.0);
        prop_assert!(t.l <= n);
    }

    #[test]
    fn solve_csv_round_trips(
        n in 1usize..=4,
        value in 0.0f64..1.0,
        lo in 0.0f64..1.0,
        hi in 0.0f64..1.0,
        sx in 1usize..=16,
        sy in 1usize..=16,
        exhaustive in any::<bool>(),
        cn in 1u32..1000,
        cd in 1000u32..2000,
    ) {
        let doc = SolveDoc {
            schema: SCHEMA_VERSION,
            n,
            c: format!("{cn}/{cd}"),
            value,
            bracket_low: lo,
            bracket_high: hi,
            constraint: format!("{cn}/{}", cd + 1),
            witness_size_x: sx,
            witness_size_y: sy,
            exhaustive,
            witness: WitnessDoc { kind: "sets".into(), set_x: None, set_y: None, p_x: None, p_y: None },
        };
        let parsed = parse_solve_csv(&doc.to_csv()).unwrap();
        prop_assert_eq!(parsed, SolveCsvRow::of(&doc));
    }

    #[test]
    fn simulation_csv_round_trips(
        runs in 1u64..u64::from(u32::MAX),
        s in -4.0f64..4.0,
        se in 0.0f64..1.0,
        p in 0.25f64..1.0,
        seed in any::<u64>(),
    ) {
        let report = SimulationReport { runs, empirical_s: s, standard_error: se, empirical_p: p, seed };
        let doc = SimulationDoc::from_report(&report);
        let parsed = parse_simulation_csv(&doc.to_csv()).unwrap();
        prop_assert_eq!(parsed.empirical_s, doc.empirical_s);
        prop_assert_eq!(parsed.standard_error, doc.standard_error);
        prop_assert_eq!(parsed.empirical_p, doc.empirical_p);
        prop_assert_eq!(parsed.runs, doc.runs);
        prop_assert_eq!(parsed.seed, doc.seed);
    }
}
