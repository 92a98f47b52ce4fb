//! Acceptance gate: one test per release criterion, each printing a
//! PASS/FAIL line (visible with `--nocapture`) and enforcing its stated
//! tolerance and runtime budget.
//!
//! All expected constants below were computed independently before being
//! frozen: closed forms evaluated in IEEE double (cross-checked in a second
//! language), big-integer binomial sums, and a no-pruning brute force over
//! raw subset masks with the quadratic double-sum constraint.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

use bellrand::checks::{all_pass, run_suite, Suite};
use bellrand::lhvm::{
    chsh_value, chsh_value_exact, quantum_faking_strategy, randomness_measure, setting_marginal,
    simulate_runs, strategy_from_sets, uniform_marginal_lift, Lambda, LhvmStrategy,
    OutputFunctions, Settings,
};
use bellrand::math::{
    asymptotic_bounds, binary_entropy, c_q_rational, concave_envelope_g, f_max, PhysicsConstants,
};
use bellrand::profile::{threshold_set, volume_exact, BitString, Profile, SettingSet};
use bellrand::rational::{rat, rat_int, rat_one, rat_to_f64, Rat};
use bellrand::rng::SplitMix64;
use bellrand::solver::{
    bracket_p_n, constraint_density_sets, converse_certificate, solve_uniform_exact, threshold_construct,
    SolveOptions, Witness,
};
fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bellrand"))
}

fn gate(name: &str, budget: Duration, work: impl FnOnce()) {
    let start = Instant::now();
    work();
    let elapsed = start.elapsed();
    assert!(
        elapsed <= budget,
        "{name} exceeded its runtime budget: {elapsed:?} > {budget:?}"
    );
    println!("acceptance {name}: PASS ({elapsed:?})");
}

#[test]
fn a01_headline_bound() {
    gate("01 headline-bound", Duration::from_secs(1), || {
        let out = bin().args(["bound"]).output().expect("binary runs");
        assert!(out.status.success());
        let doc: serde_json::Value = serde_json::from_slice(&out.stdout).expect("JSON report");
        let independent = doc["independent"].as_f64().expect("field present");
        assert!(
            (independent - 0.26428).abs() <= 5e-5,
            "independent bound {independent} not within 5e-5 of 0.26428"
        );
        assert_eq!(doc["schema"], 1);
    });
}

#[test]
fn a02_table_one() {
    gate("02 table-one", Duration::from_secs(1), || {
        let out = bin().args(["table1", "--format", "csv"]).output().expect("binary runs");
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).expect("utf8");
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("regime,correlated,independent"),
            "header changed"
        );
        let parse_row = |line: &str| -> (f64, f64) {
            let f: Vec<&str> = line.split(',').collect();
            (f[1].parse().expect("f64"), f[2].parse().expect("f64"))
        };
        let (corr1, ind1) = parse_row(lines.next().expect("n=1 row"));
        let (corr_inf, ind_inf) = parse_row(lines.next().expect("limit row"));

        // Six-figure targets, frozen from the closed forms.
        assert!((corr1 - 0.284518).abs() <= 1e-6);
        assert!((ind1 - 0.353553).abs() <= 1e-6);
        assert!((corr_inf - 0.258149).abs() <= 1e-6);
        assert!((ind_inf - 0.264286).abs() <= 1e-6);

        // And the closed forms themselves, tight.
        let pc = PhysicsConstants::new();
        assert!((corr1 - (pc.s_q + 4.0) / 24.0).abs() < 1e-12);
        assert!((ind1 - pc.s_q / 8.0).abs() < 1e-12);
        let b = asymptotic_bounds(pc.c_q).expect("c_q in range");
        assert!((corr_inf - b.correlated).abs() < 1e-12);
        assert!((ind_inf - b.independent).abs() < 1e-12);
    });
}

#[test]
fn a03_envelope_constants() {
    gate("03 envelope-constants", Duration::from_secs(1), || {
        let f = f_max(0.0625).expect("in domain").value;
        let g0 = concave_envelope_g(0.0).expect("in domain");
        assert!((f - 1.6226).abs() <= 5e-4, "f(0.0625) = {f}");
        assert!((g0 - 1.6300).abs() <= 5e-4, "g(0) = {g0}");
        assert!(f < g0, "f(0.0625) = {f} must lie strictly below g(0) = {g0}");
    });
}

#[test]
fn a04_closed_form_agreement() {
    gate("04 closed-form-agreement", Duration::from_secs(5), || {
        let mut worst = 0.0f64;
        for i in 0..200 {
            let t = 0.0625 + (0.25 - 0.0625) * i as f64 / 199.0;
            let closed = 2.0 * binary_entropy(t.sqrt()).expect("in range");
            worst = worst.max((f_max(t).expect("in domain").value - closed).abs());
        }
        assert!(worst <= 1e-6, "max |f - 2 h_b(sqrt t)| = {worst}");
    });
}

/// No-pruning brute force over raw subset masks; the constraint is the
/// quadratic double sum, deliberately not the profile route the solver uses.
fn brute_force(n: usize, c: &Rat) -> (u64, Vec<u64>, Vec<u64>) {
    let strings = 1usize << n;
    let total = 1u32 << strings;
    let mut best: Option<(u64, Vec<u64>, Vec<u64>)> = None;
    for mx in 1..total {
        for my in 1..total {
            let xs: Vec<u64> = (0..strings as u64).filter(|s| (mx >> s) & 1 == 1).collect();
            let ys: Vec<u64> = (0..strings as u64).filter(|s| (my >> s) & 1 == 1).collect();
            let mut dot = 0u64;
            for &x in &xs {
                for &y in &ys {
                    dot += (x & y).count_ones() as u64;
                }
            }
            let rho = rat(dot as i64, (n * xs.len() * ys.len()) as i64);
            if &rho <= c {
                let product = (xs.len() * ys.len()) as u64;
                let candidate = (product, xs, ys);
                best = Some(match best.take() {
                    None => candidate,
                    Some(b) => {
                        if candidate.0 > b.0 {
                            candidate
                        } else {
                            b
                        }
                    }
                });
            }
        }
    }
    best.expect("all-zeros pair is always feasible")
}

#[test]
fn a05_exhaustive_small_n_optima() {
    gate("05 exhaustive-small-n", Duration::from_secs(10), || {
        let cq = c_q_rational();
        let quarter = rat(1, 4);
        let opts = SolveOptions::default();

        // Oracle first.
        assert_eq!(brute_force(1, &cq).0, 2);
        assert_eq!(brute_force(1, &quarter).0, 4);
        assert_eq!(brute_force(2, &cq).0, 9);

        let r = solve_uniform_exact(1, &cq, &opts).expect("n=1");
        assert_eq!(r.value, 0.5);
        match &r.witness {
            Witness::Sets { x, y } => {
                assert_eq!(x.to_text(), "0\n");
                assert_eq!(y.to_text(), "0\n1\n");
                assert_eq!((x.size() * y.size()) as u64, brute_force(1, &cq).0);
            }
            _ => panic!("expected set witness"),
        }

        let r = solve_uniform_exact(1, &quarter, &opts).expect("n=1");
        assert_eq!(r.value, 0.25);
        match &r.witness {
            Witness::Sets { x, y } => {
                assert_eq!(x.size(), 2);
                assert_eq!(y.size(), 2);
            }
            _ => panic!("expected set witness"),
        }

        let r = solve_uniform_exact(2, &cq, &opts).expect("n=2");
        assert_eq!(r.value, 1.0 / 3.0);
        match &r.witness {
            Witness::Sets { x, y } => {
                let a21 = threshold_set(2, 1).expect("tiny");
                assert_eq!(x, &a21);
                assert_eq!(y, &a21);
            }
            _ => panic!("expected set witness"),
        }
        assert_eq!(r.constraint_value, rat(1, 9));
    });
}

#[test]
fn a06_distribution_heuristic_n1() {
    gate("06 distribution-heuristic", Duration::from_secs(1), || {
        let cq = c_q_rational();
        let r = bracket_p_n(1, &cq, 1).expect("n=1");
        let target = 0.5 * (1.0 - 2.0 * rat_to_f64(&cq)); // S_Q/8 at the c_Q literal
        assert!(
            (r.value - target).abs() <= 1e-9,
            "heuristic {} vs {target}",
            r.value
        );
        assert!(r.bracket_low - 1e-12 <= r.value && r.value <= r.bracket_high + 1e-12);
        assert!(r.constraint_value <= cq);
    });
}

#[test]
fn a07_threshold_convergence() {
    gate("07 threshold-convergence", Duration::from_secs(30), || {
        let cq = c_q_rational();
        let limit = asymptotic_bounds(rat_to_f64(&cq)).expect("in range").independent;
        for n in 1..=512u64 {
            let t = threshold_construct(n, &cq, None).expect("feasible");
            assert!(
                t.objective >= limit - 1e-6,
                "floor broken at n = {n}: {} < {limit} - 1e-6",
                t.objective
            );
        }
        let t8 = threshold_construct(8, &cq, None).expect("n=8");
        assert_eq!(t8.l, 3);
        assert!(
            (t8.objective - 0.32201734343516736).abs() <= 1e-6,
            "n=8 objective {}",
            t8.objective
        );
        let t1024 = threshold_construct(1024, &cq, None).expect("n=1024");
        assert!(
            (t1024.objective - limit).abs() <= 0.01,
            "n=1024 objective {} vs limit {limit}",
            t1024.objective
        );
    });
}

fn random_set(rng: &mut SplitMix64, n: usize) -> SettingSet {
    let total = 1u64 << n;
    let mut members = Vec::new();
    for mask in 0..total {
        if rng.next_f64() < 0.5 {
            members.push(BitString::from_mask(mask, n));
        }
    }
    if members.is_empty() {
        members.push(BitString::from_mask(rng.next_below(total), n));
    }
    SettingSet::from_members(n, members).expect("distinct")
}

#[test]
fn a08_certificate_soundness() {
    gate("08 certificate-soundness", Duration::from_secs(60), || {
        let cq = c_q_rational();
        let quarter = rat(1, 4);
        let mut rng = SplitMix64::new(0xCE57);
        let mut checked = 0usize;
        for i in 0..100 {
            let c = if i % 2 == 0 { &quarter } else { &cq };
            let (sx, sy) = loop {
                let n = 1 + rng.next_below(6) as usize;
                let sx = random_set(&mut rng, n);
                let sy = random_set(&mut rng, n);
                if &constraint_density_sets(&sx, &sy).expect("same n") <= c {
                    break (sx, sy);
                }
            };
            for m in [2usize, 4, 8] {
                let cert = converse_certificate(&sx, &sy, m, c).expect("feasible pair");
                assert!(
                    cert.certified_size_bound_log2 >= cert.size_product_log2 - 1e-12,
                    "unsound certificate: {} < {} (n={}, m={m})",
                    cert.certified_size_bound_log2,
                    cert.size_product_log2,
                    cert.n
                );
                if cert.relaxed_applicable {
                    assert!(
                        cert.entropy_sum <= cert.f_at_relaxed + 1e-9,
                        "entropy sum {} above f(c + 2/m) = {}",
                        cert.entropy_sum,
                        cert.f_at_relaxed
                    );
                }
                assert!(cert.gap < rat(2, m as i64));
                checked += 1;
            }
        }
        assert_eq!(checked, 300);
    });
}

#[test]
fn a09_property_suites() {
    gate("09 property-suites", Duration::from_secs(120), || {
        let rows = run_suite(Suite::All, 0, 1);
        assert!(all_pass(&rows), "failing rows: {rows:#?}");
        for needed in [
            "Lemma l3",
            "Lemma p1",
            "Lemma 10",
            "Lemma 9",
            "Lemma 7",
            "Theorem 6 finite bound",
            "Lemma 5",
        ] {
            assert!(
                rows.iter().any(|r| r.property == needed),
                "missing property row {needed}"
            );
        }
        let a = Profile::from_decimals(&["0.4", "0.4", "0.4"]).expect("valid");
        assert_eq!(volume_exact(&a, 3).expect("n=3").size, 5);
    });
}

#[test]
fn a10_lhvm_values() {
    gate("10 lhvm-values", Duration::from_secs(10), || {
        // Uniform free-will strategy: S = 2 exactly.
        let uniform: BTreeMap<(BitString, BitString), Rat> = (0..2u8)
            .flat_map(|x| (0..2u8).map(move |y| (x, y)))
            .map(|(x, y)| {
                (
                    (
                        BitString::new(vec![x]).expect("bit"),
                        BitString::new(vec![y]).expect("bit"),
                    ),
                    rat(1, 4),
                )
            })
            .collect();
        let free_will = LhvmStrategy::new(
            1,
            vec![Lambda {
                weight: rat_one(),
                settings: Settings::Joint(uniform),
                outputs: OutputFunctions::ZERO,
            }],
        )
        .expect("valid");
        assert_eq!(chsh_value_exact(&free_will), rat_int(2));

        // The c_Q strategy reaches the quantum value.
        let pc = PhysicsConstants::new();
        let faking = quantum_faking_strategy(&c_q_rational()).expect("valid");
        assert!((chsh_value(&faking) - pc.s_q).abs() <= 1e-12);

        // 200 random lifts have exactly uniform marginals.
        let mut rng = SplitMix64::new(0x11F7);
        let quarter = rat(1, 4);
        for _ in 0..200 {
            let w: Vec<u64> = (0..4).map(|_| 1 + rng.next_below(12)).collect();
            let total: u64 = w.iter().sum();
            let q: [Rat; 4] = [
                rat(w[0] as i64, total as i64),
                rat(w[1] as i64, total as i64),
                rat(w[2] as i64, total as i64),
                rat(w[3] as i64, total as i64),
            ];
            let lifted = uniform_marginal_lift(&q).expect("distribution");
            let marginal = setting_marginal(&lifted).expect("single run");
            assert!(marginal.iter().all(|v| v == &quarter));
        }

        // Threshold-set strategy at n = 8.
        let a83 = threshold_set(8, 3).expect("n=8");
        let s = strategy_from_sets(&a83, &a83).expect("nonempty");
        let value = chsh_value(&s);
        assert!((value - 3.2221066019192968).abs() <= 1e-6);
        assert!(value >= pc.s_q);
        let p = randomness_measure(&s);
        assert!((p - 0.32201734343516736).abs() <= 1e-6);
    });
}

#[test]
fn a11_monte_carlo() {
    gate("11 monte-carlo", Duration::from_secs(60), || {
        let pc = PhysicsConstants::new();
        let faking = quantum_faking_strategy(&c_q_rational()).expect("valid");
        let report = simulate_runs(&faking, 1_000_000, 20260808, 1).expect("tests >= 1");
        assert!(
            (report.empirical_s - pc.s_q).abs() <= 3.0 * report.standard_error,
            "empirical {} +- {} vs {}",
            report.empirical_s,
            report.standard_error,
            pc.s_q
        );
        let again = simulate_runs(&faking, 1_000_000, 20260808, 4).expect("tests >= 1");
        assert_eq!(report, again, "identical seeds must give identical reports");
    });
}
