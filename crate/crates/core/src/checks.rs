//! Seeded self-check suites behind `bellrand verify`.
//!
//! Every property is generated from a SplitMix64 stream derived from
//! (seed, property salt), so reports are bit-identical for fixed inputs and
//! each property's stream is independent of the others. `worst_margin` is
//! the minimum slack for quantitative properties and minus the violation
//! count for exact boolean ones; `pass` means margin >= 0 (informational
//! rows always pass and only report their margin).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::lhvm::{
    chsh_from_sets_exact, chsh_value_exact, quantum_faking_strategy, randomness_measure,
    randomness_measure_exact, setting_marginal, simulate_runs, strategy_from_sets, chsh_value,
    uniform_marginal_lift, Lambda, LhvmStrategy, OutputFunctions, Settings,
};
use crate::math::{
    asymptotic_bounds, binary_entropy, c_q_rational, concave_envelope_g, f_max,
    midpoint_concavity_margin,
};
use crate::profile::{
    discretize, discretization_gap, gamma, inner_density, profile_leq, volume_entropy_bound,
    volume_exact, BitString, BoundSide, Monotone, Profile, SettingSet,
};
use crate::rational::{parse_rat, rat, rat_to_f64, Rat};
use crate::rng::{derive_seed, SplitMix64};
use crate::solver::{
    bracket_p_n, canonicalize, constraint_density_sets, converse_certificate, lp_extreme_point,
    solve_uniform_exact, threshold_construct, uniformize, SolveOptions, Witness,
};

#[derive(Debug, Clone)]
pub struct PropertyReport {
    pub suite: String,
    pub property: String,
    pub statement: String,
    pub samples: usize,
    pub worst_margin: f64,
    pub informational: bool,
    pub pass: bool,
}

impl PropertyReport {
    fn gating(suite: &str, property: &str, statement: &str, samples: usize, margin: f64) -> Self {
        PropertyReport {
            suite: suite.into(),
            property: property.into(),
            statement: statement.into(),
            samples,
            worst_margin: margin,
            informational: false,
            pass: margin >= 0.0,
        }
    }

    fn info(suite: &str, property: &str, statement: &str, samples: usize, margin: f64) -> Self {
        PropertyReport {
            suite: suite.into(),
            property: property.into(),
            statement: statement.into(),
            samples,
            worst_margin: margin,
            informational: true,
            pass: margin.is_finite(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Lemmas,
    Profiles,
    Solver,
    Lhvm,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Suite> {
        match s {
            "lemmas" => Some(Suite::Lemmas),
            "profiles" => Some(Suite::Profiles),
            "solver" => Some(Suite::Solver),
            "lhvm" => Some(Suite::Lhvm),
            "all" => Some(Suite::All),
            _ => None,
        }
    }
}

pub fn all_pass(rows: &[PropertyReport]) -> bool {
    rows.iter().all(|r| r.pass)
}

/// Runs a suite. `samples = 0` keeps each property's default count;
/// otherwise `samples` overrides the count of every sampled property.
pub fn run_suite(suite: Suite, samples: usize, seed: u64) -> Vec<PropertyReport> {
    match suite {
        Suite::Lemmas => lemmas_suite(samples, seed),
        Suite::Profiles => profiles_suite(samples, seed),
        Suite::Solver => solver_suite(samples, seed),
        Suite::Lhvm => lhvm_suite(samples, seed),
        Suite::All => {
            let mut rows = lemmas_suite(samples, seed);
            rows.extend(profiles_suite(samples, seed));
            rows.extend(solver_suite(samples, seed));
            rows.extend(lhvm_suite(samples, seed));
            rows
        }
    }
}

/// Margin for exact boolean properties: 0 when clean, -count on failures.
fn bool_margin(violations: usize) -> f64 {
    if violations == 0 {
        0.0
    } else {
        -(violations as f64)
    }
}

fn n_of(default: usize, samples: usize) -> usize {
    if samples == 0 {
        default
    } else {
        samples
    }
}

fn rng_for(seed: u64, salt: u64) -> SplitMix64 {
    SplitMix64::new(derive_seed(seed, salt))
}

/// Random rational in (0, 1) with denominator up to `max_den`.
fn random_unit_rational(rng: &mut SplitMix64, max_den: u64) -> Rat {
    let den = 2 + rng.next_below(max_den - 1);
    let num = 1 + rng.next_below(den - 1);
    rat(num as i64, den as i64)
}

/// Random profile with components on the grid {0, 1/16, .., cap_sixteenths/16}.
fn random_grid_profile(rng: &mut SplitMix64, len: usize, cap_sixteenths: u64) -> Profile {
    let values = (0..len)
        .map(|_| rat(rng.next_below(cap_sixteenths + 1) as i64, 16))
        .collect();
    Profile::new(values).expect("grid values are in [0,1]")
}

fn random_setting_set(rng: &mut SplitMix64, n: usize) -> SettingSet {
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
    SettingSet::from_members(n, members).expect("distinct masks")
}

// ---------------------------------------------------------------------------
// lemmas
// ---------------------------------------------------------------------------

fn lemmas_suite(samples: usize, seed: u64) -> Vec<PropertyReport> {
    let suite = "lemmas";
    let mut rows = Vec::new();

    // Entropy range and symmetry.
    {
        let n = n_of(10_000, samples);
        let mut rng = rng_for(seed, 0x11);
        let mut margin = f64::INFINITY;
        for _ in 0..n {
            let t = rng.next_f64();
            let h = binary_entropy(t).expect("t in range");
            let h2 = binary_entropy(1.0 - t).expect("1-t in range");
            margin = margin.min(h).min(1.0 - h).min(1e-12 - (h - h2).abs());
        }
        rows.push(PropertyReport::gating(
            suite,
            "entropy symmetry",
            "0 <= h_b(t) <= 1 and |h_b(t) - h_b(1-t)| <= 1e-12",
            n,
            margin,
        ));
    }

    // Lemma l3: x (ceil(1/x) - 1) >= 1/3, exactly on rationals.
    {
        let n = n_of(10_000, samples);
        let mut rng = rng_for(seed, 0x12);
        let mut margin = f64::INFINITY;
        let third = rat(1, 3);
        for _ in 0..n {
            let x = random_unit_rational(&mut rng, 1_000_000);
            let recip_ceil = (Rat::one() / &x).ceil();
            let lhs = &x * (recip_ceil - Rat::one());
            margin = margin.min(rat_to_f64(&(&lhs - &third)));
        }
        rows.push(PropertyReport::gating(
            suite,
            "Lemma l3",
            "x*(ceil(1/x)-1) >= 1/3 exactly for rational x in (0;1)",
            n,
            margin,
        ));
    }

    // Lemma 7: closed form on [0.0625, 0.25].
    {
        let n = n_of(200, samples).max(2);
        let mut worst = 0.0f64;
        for i in 0..n {
            let t = 0.0625 + (0.25 - 0.0625) * i as f64 / (n - 1) as f64;
            let closed = 2.0 * binary_entropy(t.sqrt()).expect("sqrt t in range");
            let diff = (f_max(t).expect("t in domain").value - closed).abs();
            worst = worst.max(diff);
        }
        rows.push(PropertyReport::gating(
            suite,
            "Lemma 7",
            "|f(t) - 2 h_b(sqrt t)| <= 1e-6 on [0.0625;0.25]",
            n,
            1e-6 - worst,
        ));
    }

    // Lemma 8: f nondecreasing.
    {
        let n = n_of(500, samples).max(2);
        let mut margin = f64::INFINITY;
        let mut prev = f_max(0.0).expect("0 in domain").value;
        for i in 1..n {
            let t = 0.25 * i as f64 / (n - 1) as f64;
            let v = f_max(t).expect("t in domain").value;
            margin = margin.min(v - prev + 1e-9);
            prev = v;
        }
        rows.push(PropertyReport::gating(
            suite,
            "Lemma 8",
            "f(t1) <= f(t2) + 1e-9 for t1 <= t2 on a grid",
            n,
            margin,
        ));
    }

    // Lemma 9: mean bound through the concave envelope.
    {
        let n = n_of(1000, samples);
        let mut rng = rng_for(seed, 0x13);
        let cq = rat_to_f64(&c_q_rational());
        let mut margin = f64::INFINITY;
        for _ in 0..n {
            let k = 1 + rng.next_below(8) as usize;
            let cp = rng.next_in(cq, 0.25);
            let mut ts: Vec<f64> = (0..k).map(|_| rng.next_in(0.0, 0.25)).collect();
            let mean: f64 = ts.iter().sum::<f64>() / k as f64;
            if mean > cp {
                let scale = cp / mean;
                for t in &mut ts {
                    *t *= scale;
                }
            }
            let avg: f64 = ts
                .iter()
                .map(|&t| f_max(t).expect("t in domain").value)
                .sum::<f64>()
                / k as f64;
            let bound = f_max(cp).expect("cp in domain").value;
            margin = margin.min(bound + 1e-9 - avg);
        }
        rows.push(PropertyReport::gating(
            suite,
            "Lemma 9",
            "(1/k) sum f(t_i) <= f(c') + 1e-9 when mean(t) <= c' and c' >= c_Q",
            n,
            margin,
        ));
    }

    // Lemma p1 sandwich.
    {
        let n = n_of(500, samples);
        let mut rng = rng_for(seed, 0x14);
        let mut violations = 0usize;
        for _ in 0..n {
            let len = 1 + rng.next_below(8) as usize;
            let m = 2 + rng.next_below(15) as usize;
            let decreasing = rng.next_f64() < 0.5;
            let mut p = random_grid_profile(&mut rng, len, 16);
            let mut vals = p.values().to_vec();
            if decreasing {
                vals.sort_by(|a, b| b.cmp(a));
            } else {
                vals.sort();
            }
            p = Profile::new(vals).expect("sorted grid profile");
            let dir = if decreasing {
                Monotone::Decreasing
            } else {
                Monotone::Increasing
            };
            let upper = discretize(&p, m, BoundSide::Upper, dir).expect("monotone");
            let lower = discretize(&p, m, BoundSide::Lower, dir).expect("monotone");
            if !profile_leq(&lower, &p) || !profile_leq(&p, &upper) {
                violations += 1;
            }
        }
        rows.push(PropertyReport::gating(
            suite,
            "Lemma p1",
            "lower <= a <= upper under the step order for monotone a and m in 2..16",
            n,
            bool_margin(violations),
        ));
    }

    // Lemma 10 gap bound, strict, exact.
    {
        let n = n_of(500, samples);
        let mut rng = rng_for(seed, 0x15);
        let mut margin = f64::INFINITY;
        let mut violations = 0usize;
        for _ in 0..n {
            let len = 1 + rng.next_below(8) as usize;
            let m = 2 + rng.next_below(15) as usize;
            let mut av = random_grid_profile(&mut rng, len, 8).values().to_vec();
            av.sort_by(|a, b| b.cmp(a));
            let a = Profile::new(av).expect("bounded");
            let mut bv = random_grid_profile(&mut rng, len, 8).values().to_vec();
            bv.sort();
            let b = Profile::new(bv).expect("bounded");
            let gap = discretization_gap(&a, &b, m).expect("admissible");
            let slack = rat(2, m as i64) - &gap;
            if slack <= Rat::zero() {
                violations += 1;
            }
            margin = margin.min(rat_to_f64(&slack));
        }
        let margin = if violations > 0 { -(violations as f64) } else { margin };
        rows.push(PropertyReport::gating(
            suite,
            "Lemma 10",
            "(1/m) sum upper_a*upper_b - (1/n) sum a*b < 2/m strictly",
            n,
            margin,
        ));
    }

    // Envelope domination.
    {
        let n = n_of(500, samples).max(2);
        let mut margin = f64::INFINITY;
        for i in 0..n {
            let t = 0.25 * i as f64 / (n - 1) as f64;
            let g = concave_envelope_g(t).expect("t in domain");
            let f = f_max(t).expect("t in domain").value;
            margin = margin.min(g - f + 1e-9);
        }
        rows.push(PropertyReport::gating(
            suite,
            "envelope domination",
            "g(t) >= f(t) - 1e-9 on [0;0.25]",
            n,
            margin,
        ));
    }

    // Midpoint concavity where it is proved.
    {
        let steps = 41;
        let margin = midpoint_concavity_margin(0.0625, 0.25, steps).expect("valid range") + 1e-9;
        rows.push(PropertyReport::gating(
            suite,
            "midpoint concavity",
            "f((t1+t2)/2) >= (f(t1)+f(t2))/2 - 1e-9 on [0.0625;0.25]",
            steps * (steps - 1) / 2,
            margin,
        ));
    }

    // Informational probe below 0.0625 (open territory; no assertion).
    {
        let steps = 41;
        let margin = midpoint_concavity_margin(0.0, 0.0625, steps).expect("valid range");
        rows.push(PropertyReport::info(
            suite,
            "midpoint concavity probe",
            "observed concavity margin of f on [0;0.0625] (informational)",
            steps * (steps - 1) / 2,
            margin,
        ));
    }

    rows
}

// ---------------------------------------------------------------------------
// profiles
// ---------------------------------------------------------------------------

fn profiles_suite(samples: usize, seed: u64) -> Vec<PropertyReport> {
    let suite = "profiles";
    let mut rows = Vec::new();

    // Lemma 1: step integral equals the scaled dot product, exactly.
    {
        let n = n_of(500, samples);
        let mut rng = rng_for(seed, 0x21);
        let mut violations = 0usize;
        for _ in 0..n {
            let len = 1 + rng.next_below(8) as usize;
            let a = random_grid_profile(&mut rng, len, 16);
            let b = random_grid_profile(&mut rng, len, 16);
            let mut dot = Rat::zero();
            for (x, y) in a.values().iter().zip(b.values()) {
                dot += x * y;
            }
            dot /= BigInt::from(len);
            if inner_density(&a, &b) != dot {
                violations += 1;
            }
        }
        rows.push(PropertyReport::gating(
            suite,
            "Lemma 1",
            "integral of f_a f_b equals (1/n) sum a_i b_i exactly",
            n,
            bool_margin(violations),
        ));
    }

    // Lemma 5: volume monotone under the profile order.
    {
        let n = n_of(200, samples);
        let mut rng = rng_for(seed, 0x22);
        let mut violations = 0usize;
        for _ in 0..n {
            let len = 1 + rng.next_below(3) as usize;
            let q = random_grid_profile(&mut rng, len, 16);
            let p_vals = q
                .values()
                .iter()
                .map(|v| v * rat(rng.next_below(5) as i64, 4))
                .collect();
            let p = Profile::new(p_vals).expect("scaled down stays in range");
            let vol_n = 1 + rng.next_below(3) as usize;
            let vp = volume_exact(&p, vol_n).expect("small n").size;
            let vq = volume_exact(&q, vol_n).expect("small n").size;
            if vp > vq {
                violations += 1;
            }
        }
        rows.push(PropertyReport::gating(
            suite,
            "Lemma 5",
            "p <= q implies V_n(p) <= V_n(q)",
            n,
            bool_margin(violations),
        ));
    }

    // Theorem 6 finite bound on the full grid {0,0.1,..,0.5}^3 at n = 3.
    {
        let mut margin = f64::INFINITY;
        let mut count = 0usize;
        for i in 0..=5u64 {
            for j in 0..=5u64 {
                for k in 0..=5u64 {
                    let a = Profile::new(vec![
                        rat(i as i64, 10),
                        rat(j as i64, 10),
                        rat(k as i64, 10),
                    ])
                    .expect("grid");
                    let v = volume_exact(&a, 3).expect("n=3").size;
                    let bound = volume_entropy_bound(&a, 3).expect("bounded");
                    margin = margin.min(bound + 1e-12 - (v as f64).log2());
                    count += 1;
                }
            }
        }
        rows.push(PropertyReport::gating(
            suite,
            "Theorem 6 finite bound",
            "log2 V_3(a) <= sum (l_k-l_{k-1}) h_b(a_k) + 1e-12 on the 0.1 grid",
            count,
            margin,
        ));
    }

    // Profiles of sets are consistent with the order and the volume.
    {
        let mut violations = 0usize;
        for mask in 0u64..256 {
            let members: Vec<BitString> = (0..8)
                .filter(|s| (mask >> s) & 1 == 1)
                .map(|s| BitString::from_mask(s, 3))
                .collect();
            let size = members.len();
            let s = SettingSet::from_members(3, members).expect("distinct");
            let g = gamma(&s);
            if !profile_leq(&g, &g) {
                violations += 1;
                continue;
            }
            if volume_exact(&g, 3).expect("n=3").size < size {
                violations += 1;
            }
        }
        rows.push(PropertyReport::gating(
            suite,
            "gamma compatibility",
            "Gamma(S) <= Gamma(S) and V_3(Gamma(S)) >= |S| for every S in {0;1}^3",
            256,
            bool_margin(violations),
        ));
    }

    rows
}

// ---------------------------------------------------------------------------
// solver
// ---------------------------------------------------------------------------

/// No-pruning brute force for the uniform-support problem: every nonempty
/// subset pair, constraint evaluated by the quadratic double sum (the
/// independent route; the solver itself uses profiles).
pub fn brute_force_uniform(n: usize, c: &Rat) -> (u64, Rat) {
    assert!((1..=3).contains(&n), "oracle is for tiny n");
    let strings = 1usize << n;
    let total = 1u32 << strings;
    let mut best_product = 0u64;
    let mut best_constraint = Rat::zero();
    for mx in 1..total {
        for my in 1..total {
            let mut dot_sum = 0u64;
            for x in 0..strings {
                if (mx >> x) & 1 == 0 {
                    continue;
                }
                for y in 0..strings {
                    if (my >> y) & 1 == 0 {
                        continue;
                    }
                    dot_sum += (x & y).count_ones() as u64;
                }
            }
            let sx = mx.count_ones() as u64;
            let sy = my.count_ones() as u64;
            let rho = Rat::new(
                BigInt::from(dot_sum),
                BigInt::from(n as u64 * sx * sy),
            );
            if &rho <= c && sx * sy > best_product {
                best_product = sx * sy;
                best_constraint = rho;
            }
        }
    }
    (best_product, best_constraint)
}

fn solver_suite(samples: usize, seed: u64) -> Vec<PropertyReport> {
    let suite = "solver";
    let mut rows = Vec::new();
    let cq = c_q_rational();

    // Theorem 3: canonicalization is safe.
    {
        let n = n_of(300, samples);
        let mut rng = rng_for(seed, 0x31);
        let mut margin = f64::INFINITY;
        let mut violations = 0usize;
        for _ in 0..n {
            let dim = 1 + rng.next_below(6) as usize;
            let sx = random_setting_set(&mut rng, dim);
            let sy = random_setting_set(&mut rng, dim);
            let rho_in = constraint_density_sets(&sx, &sy).expect("same n");
            let (cx, cy) = canonicalize(&sx, &sy).expect("nonempty");
            let rho_out = constraint_density_sets(&cx, &cy).expect("same n");
            if cx.size() != sx.size()
                || cy.size() != sy.size()
                || !cx.profile().is_decreasing()
                || !cy.profile().is_increasing()
                || !cx.profile().is_bounded()
                || !cy.profile().is_bounded()
            {
                violations += 1;
            }
            margin = margin.min(rat_to_f64(&(&rho_in - &rho_out)));
        }
        let margin = if violations > 0 { -(violations as f64) } else { margin };
        rows.push(PropertyReport::gating(
            suite,
            "Theorem 3 canonicalize",
            "flip+sort preserves sizes; monotone bounded profiles; constraint not raised",
            n,
            margin,
        ));
    }

    // Pruned exhaustive equals the no-pruning brute force.
    {
        let cs = [
            parse_rat("0.05").expect("literal"),
            cq.clone(),
            parse_rat("0.2").expect("literal"),
            rat(1, 4),
        ];
        let mut violations = 0usize;
        let mut count = 0usize;
        for n in 1..=2usize {
            for c in &cs {
                let (oracle_product, _) = brute_force_uniform(n, c);
                let r = solve_uniform_exact(n, c, &SolveOptions::default()).expect("tiny n");
                let solver_product = match &r.witness {
                    Witness::Sets { x, y } => (x.size() * y.size()) as u64,
                    _ => 0,
                };
                if solver_product != oracle_product {
                    violations += 1;
                }
                count += 1;
            }
        }
        rows.push(PropertyReport::gating(
            suite,
            "pruned vs brute force",
            "canonically pruned optimum equals the unpruned double-sum oracle",
            count,
            bool_margin(violations),
        ));
    }

    // Theorem 2 bracket contains the heuristic value.
    {
        let mut margin = f64::INFINITY;
        for n in 1..=3usize {
            let r = bracket_p_n(n, &cq, 1).expect("small n");
            margin = margin
                .min(r.value - r.bracket_low + 1e-12)
                .min(r.bracket_high - r.value + 1e-12);
        }
        rows.push(PropertyReport::gating(
            suite,
            "Theorem 2 bracket",
            "heuristic value lies in [3^(-2/n) P_n'; P_n'] at c = c_Q",
            3,
            margin,
        ));
    }

    // Theorem 8 floor: the construction never undercuts the limit.
    {
        let n = n_of(512, samples);
        let limit = asymptotic_bounds(rat_to_f64(&cq)).expect("c in range").independent;
        let mut margin = f64::INFINITY;
        for dim in 1..=n as u64 {
            let t = threshold_construct(dim, &cq, None).expect("feasible start");
            margin = margin.min(t.objective - limit + 1e-6);
        }
        rows.push(PropertyReport::gating(
            suite,
            "Theorem 8 floor",
            "threshold objective >= 4^(-h_b(sqrt c_Q)) - 1e-6 for every n",
            n,
            margin,
        ));
    }

    // Theorem 7 soundness on random feasible pairs.
    {
        let n = n_of(100, samples);
        let mut rng = rng_for(seed, 0x32);
        let quarter = rat(1, 4);
        let mut margin = f64::INFINITY;
        let mut violations = 0usize;
        for i in 0..n {
            let c = if i % 2 == 0 { &quarter } else { &cq };
            let mut pair = None;
            for _ in 0..400 {
                let dim = 1 + rng.next_below(6) as usize;
                let sx = random_setting_set(&mut rng, dim);
                let sy = random_setting_set(&mut rng, dim);
                if &constraint_density_sets(&sx, &sy).expect("same n") <= c {
                    pair = Some((sx, sy));
                    break;
                }
            }
            let (sx, sy) = pair.unwrap_or_else(|| {
                let z = SettingSet::from_members(1, vec![BitString::zeros(1)]).expect("singleton");
                (z.clone(), z)
            });
            for m in [2usize, 4, 8, 32] {
                let cert = converse_certificate(&sx, &sy, m, c).expect("feasible");
                margin = margin.min(cert.certified_size_bound_log2 - cert.size_product_log2 + 1e-12);
                if cert.relaxed_applicable {
                    margin = margin.min(cert.f_at_relaxed + 1e-9 - cert.entropy_sum);
                }
                if cert.gap >= rat(2, m as i64) {
                    violations += 1;
                }
            }
        }
        let margin = if violations > 0 { -(violations as f64) } else { margin };
        rows.push(PropertyReport::gating(
            suite,
            "Theorem 7 soundness",
            "certified exponent covers log2(|S_X||S_Y|); entropy sum below f(c + 2/m)",
            n,
            margin,
        ));
    }

    // Reduction contract of the LP step.
    {
        let n = n_of(200, samples);
        let mut rng = rng_for(seed, 0x33);
        let mut margin = f64::INFINITY;
        for _ in 0..n {
            let dim = 1 + rng.next_below(3) as usize;
            let theta: BTreeMap<BitString, Rat> = (0..(1u64 << dim))
                .map(|mask| {
                    (
                        BitString::from_mask(mask, dim),
                        rat(rng.next_below(33) as i64, 32),
                    )
                })
                .collect();
            let lo = 1.0 / (1u64 << dim) as f64;
            let cap = (lo + (1.0 - lo) * rng.next_f64()).min(0.999);
            let ep = lp_extreme_point(&theta, cap).expect("cap in range");
            let bar = uniformize(&ep).expect("atoms exist");
            let max_bar = bar.values().max().expect("nonempty").clone();
            let triple_cap = &ep.cap_mass * BigInt::from(3);
            margin = margin.min(rat_to_f64(&(&triple_cap - &max_bar)));
            let mut bar_weight = Rat::zero();
            for (s, p) in &bar {
                bar_weight += theta.get(s).expect("full theta") * p;
            }
            let star_weight = ep.weighted_sum(&theta);
            margin = margin.min(rat_to_f64(&(&star_weight - &bar_weight)));
        }
        rows.push(PropertyReport::gating(
            suite,
            "reduction contract",
            "uniformized extreme point: max mass <= 3 cap and theta-weight not raised",
            n,
            margin,
        ));
    }

    rows
}

// ---------------------------------------------------------------------------
// lhvm
// ---------------------------------------------------------------------------

fn random_exact_masses(rng: &mut SplitMix64, k: usize) -> Vec<Rat> {
    let weights: Vec<u64> = (0..k).map(|_| 1 + rng.next_below(16)).collect();
    let total: u64 = weights.iter().sum();
    weights
        .iter()
        .map(|&w| rat(w as i64, total as i64))
        .collect()
}

fn random_outputs(rng: &mut SplitMix64) -> OutputFunctions {
    OutputFunctions {
        a0: rng.next_below(2) as u8,
        a1: rng.next_below(2) as u8,
        b0: rng.next_below(2) as u8,
        b1: rng.next_below(2) as u8,
    }
}

fn random_strategy(rng: &mut SplitMix64) -> LhvmStrategy {
    let n = 1 + rng.next_below(3) as usize;
    let l_count = 1 + rng.next_below(4) as usize;
    let weights = random_exact_masses(rng, l_count);
    let lambdas = weights
        .into_iter()
        .map(|weight| {
            let settings = if rng.next_f64() < 0.5 {
                let sx = random_setting_set(rng, n);
                let sy = random_setting_set(rng, n);
                let mx = random_exact_masses(rng, sx.size());
                let my = random_exact_masses(rng, sy.size());
                Settings::Product {
                    x: sx.members().iter().cloned().zip(mx).collect(),
                    y: sy.members().iter().cloned().zip(my).collect(),
                }
            } else {
                let count = 1 + rng.next_below(6) as usize;
                let mut pairs = std::collections::BTreeSet::new();
                for _ in 0..count {
                    pairs.insert((
                        BitString::from_mask(rng.next_below(1 << n), n),
                        BitString::from_mask(rng.next_below(1 << n), n),
                    ));
                }
                let masses = random_exact_masses(rng, pairs.len());
                Settings::Joint(pairs.into_iter().zip(masses).collect())
            };
            Lambda {
                weight,
                settings,
                outputs: random_outputs(rng),
            }
        })
        .collect();
    LhvmStrategy::new(n, lambdas).expect("constructed valid")
}

fn lhvm_suite(samples: usize, seed: u64) -> Vec<PropertyReport> {
    let suite = "lhvm";
    let mut rows = Vec::new();

    // Classical bound for free-will strategies (settings uniform, hence
    // identical across lambdas and marginal-respecting).
    {
        let n = n_of(500, samples);
        let mut rng = rng_for(seed, 0x41);
        let mut margin = f64::INFINITY;
        let two = Rat::from_integer(BigInt::from(2));
        for _ in 0..n {
            let l_count = 1 + rng.next_below(4) as usize;
            let weights = random_exact_masses(&mut rng, l_count);
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
            let lambdas: Vec<Lambda> = weights
                .into_iter()
                .map(|weight| Lambda {
                    weight,
                    settings: Settings::Joint(uniform.clone()),
                    outputs: random_outputs(&mut rng),
                })
                .collect();
            let s = LhvmStrategy::new(1, lambdas).expect("valid");
            let value = chsh_value_exact(&s);
            margin = margin.min(rat_to_f64(&(&two - &value)) + 1e-12);
        }
        rows.push(PropertyReport::gating(
            suite,
            "classical bound",
            "uniform-setting strategies have S <= 2 + 1e-12",
            n,
            margin,
        ));
    }

    // Lift correctness: exact uniform marginal and preserved max mass.
    {
        let n = n_of(200, samples);
        let mut rng = rng_for(seed, 0x42);
        let mut violations = 0usize;
        let quarter = rat(1, 4);
        for _ in 0..n {
            let masses = random_exact_masses(&mut rng, 4);
            let q: [Rat; 4] = [
                masses[0].clone(),
                masses[1].clone(),
                masses[2].clone(),
                masses[3].clone(),
            ];
            let lifted = uniform_marginal_lift(&q).expect("distribution");
            let marginal = setting_marginal(&lifted).expect("single run");
            if marginal.iter().any(|v| v != &quarter) {
                violations += 1;
                continue;
            }
            let qmax = q.iter().max().expect("four masses").clone();
            if randomness_measure_exact(&lifted).0 != qmax {
                violations += 1;
                continue;
            }
            let expected_s = (&q[0] + &q[1] + &q[2] - &q[3]) * BigInt::from(4);
            if chsh_value_exact(&lifted) != expected_s {
                violations += 1;
            }
        }
        rows.push(PropertyReport::gating(
            suite,
            "lift marginal",
            "four-lambda lift: marginal exactly 1/4; max joint mass and S = 4(q00+q01+q10-q11) preserved",
            n,
            bool_margin(violations),
        ));
    }

    // Sets-to-strategy consistency.
    {
        let n = n_of(200, samples);
        let mut rng = rng_for(seed, 0x43);
        let mut violations = 0usize;
        for _ in 0..n {
            let dim = 1 + rng.next_below(6) as usize;
            let sx = random_setting_set(&mut rng, dim);
            let sy = random_setting_set(&mut rng, dim);
            let s = strategy_from_sets(&sx, &sy).expect("nonempty");
            if chsh_value_exact(&s) != chsh_from_sets_exact(&sx, &sy).expect("same n") {
                violations += 1;
            }
        }
        rows.push(PropertyReport::gating(
            suite,
            "sets consistency",
            "S(strategy_from_sets) = 4 - 8 rho exactly",
            n,
            bool_margin(violations),
        ));
    }

    // Monte Carlo error scales as 1/sqrt(tests).
    {
        let strategy = quantum_faking_strategy(&c_q_rational()).expect("c_Q in range");
        let base = 16_384u64;
        let mut margin = f64::INFINITY;
        let mut count = 0usize;
        for (stream, factor) in [(1u64, 2u64), (2, 4), (3, 2)] {
            let s1 = simulate_runs(&strategy, base, derive_seed(seed, 0x44 + stream), 1)
                .expect("tests >= 1");
            let s2 = simulate_runs(&strategy, base * factor, derive_seed(seed, 0x54 + stream), 1)
                .expect("tests >= 1");
            let ratio = s2.standard_error * (factor as f64).sqrt() / s1.standard_error;
            margin = margin.min(0.2 - (ratio - 1.0).abs());
            count += 1;
        }
        rows.push(PropertyReport::gating(
            suite,
            "monte carlo rate",
            "standard error scales as 1/sqrt(tests) within 20%",
            count,
            margin,
        ));
    }

    // Ranges of S and P.
    {
        let n = n_of(200, samples);
        let mut rng = rng_for(seed, 0x46);
        let mut margin = f64::INFINITY;
        for _ in 0..n {
            let s = random_strategy(&mut rng);
            let v = chsh_value(&s);
            let p = randomness_measure(&s);
            margin = margin
                .min(4.0 - v.abs() + 1e-12)
                .min(p - 0.25 + 1e-12)
                .min(1.0 - p + 1e-12);
        }
        rows.push(PropertyReport::gating(
            suite,
            "range",
            "|S| <= 4 and P in [1/4; 1]",
            n,
            margin,
        ));
    }

    rows
}
