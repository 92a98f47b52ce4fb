//! The optimization core: exact small-`n` optima over uniform supports, the
//! greedy capped-LP reduction behind the distribution heuristic, threshold
//! constructions with big-integer counting, and finite-`n` converse
//! certificates.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::math::{asymptotic_bounds, binary_entropy, c_q_rational, f_max};
use crate::pool::run_indexed;
use crate::profile::{
    discretize, gamma, inner_density, threshold_set, volume_entropy_bound, BitString, BoundSide,
    Monotone, Profile, SettingSet,
};
use crate::rational::{log2_biguint, rat, rat_from_f64, rat_to_f64, Rat};

/// A pair of independent, finitely supported distributions over {0,1}^n.
/// Masses are exact rationals; `exact` records whether they were supplied
/// as rationals (sum checked exactly) or as dyadic embeddings of f64 values
/// (sum checked to 1e-12).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductDistribution {
    n: usize,
    p_x: BTreeMap<BitString, Rat>,
    p_y: BTreeMap<BitString, Rat>,
    exact: bool,
}

impl ProductDistribution {
    pub fn new(
        n: usize,
        p_x: BTreeMap<BitString, Rat>,
        p_y: BTreeMap<BitString, Rat>,
        exact: bool,
    ) -> Result<Self> {
        for (name, side) in [("p_x", &p_x), ("p_y", &p_y)] {
            if side.is_empty() {
                return Err(Error::Invalid(format!("{name} has empty support")));
            }
            let mut sum = Rat::zero();
            for (k, v) in side {
                if k.len() != n {
                    return Err(Error::Invalid(format!(
                        "{name} key {k} has length {}, expected {n}",
                        k.len()
                    )));
                }
                if v.is_negative() || v.is_zero() {
                    return Err(Error::Invalid(format!(
                        "{name} mass for {k} must be positive"
                    )));
                }
                sum += v;
            }
            let off = &sum - Rat::one();
            if exact {
                if !off.is_zero() {
                    return Err(Error::Invalid(format!("{name} sums to {sum}, not 1")));
                }
            } else if rat_to_f64(&off).abs() > 1e-12 {
                return Err(Error::Invalid(format!("{name} sums to {sum}, not within 1e-12 of 1")));
            }
        }
        Ok(Self { n, p_x, p_y, exact })
    }

    /// Uniform distributions over the two supports.
    pub fn uniform_over(sx: &SettingSet, sy: &SettingSet) -> Result<Self> {
        if sx.is_empty() || sy.is_empty() {
            return Err(Error::Invalid("uniform distribution needs nonempty support".into()));
        }
        if sx.n() != sy.n() {
            return Err(Error::Invalid("mismatched n".into()));
        }
        let fill = |s: &SettingSet| -> BTreeMap<BitString, Rat> {
            let w = Rat::new(BigInt::one(), BigInt::from(s.size()));
            s.members().iter().map(|m| (m.clone(), w.clone())).collect()
        };
        Self::new(sx.n(), fill(sx), fill(sy), true)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p_x(&self) -> &BTreeMap<BitString, Rat> {
        &self.p_x
    }

    pub fn p_y(&self) -> &BTreeMap<BitString, Rat> {
        &self.p_y
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn max_x(&self) -> Rat {
        self.p_x.values().max().cloned().expect("nonempty")
    }

    pub fn max_y(&self) -> Rat {
        self.p_y.values().max().cloned().expect("nonempty")
    }

    fn mean_vector(side: &BTreeMap<BitString, Rat>, n: usize) -> Vec<Rat> {
        let mut mean = vec![Rat::zero(); n];
        for (s, p) in side {
            for (j, m) in mean.iter_mut().enumerate() {
                if s.bit(j) == 1 {
                    *m += p;
                }
            }
        }
        mean
    }
}

/// Constraint density of a set pair, via profiles (`(1/n) Γ(S_X)·Γ(S_Y)`),
/// never the quadratic double sum.
pub fn constraint_density_sets(sx: &SettingSet, sy: &SettingSet) -> Result<Rat> {
    if sx.n() != sy.n() {
        return Err(Error::Invalid(format!(
            "mismatched n: {} vs {}",
            sx.n(),
            sy.n()
        )));
    }
    Ok(inner_density(&gamma(sx), &gamma(sy)))
}

/// Constraint density of a product distribution:
/// `(1/n) (Σ_x p(x) x)·(Σ_y p(y) y)`.
pub fn constraint_density_dists(d: &ProductDistribution) -> Rat {
    let mx = ProductDistribution::mean_vector(&d.p_x, d.n);
    let my = ProductDistribution::mean_vector(&d.p_y, d.n);
    let mut dot = Rat::zero();
    for (a, b) in mx.iter().zip(&my) {
        dot += a * b;
    }
    dot / BigInt::from(d.n)
}

/// `(max p_x · max p_y)^(1/n)`.
pub fn objective_value(d: &ProductDistribution) -> f64 {
    let m = rat_to_f64(&d.max_x()) * rat_to_f64(&d.max_y());
    m.powf(1.0 / d.n as f64)
}

/// Canonical form for a pair of setting sets: flip every column whose mean
/// exceeds 1/2 (each side independently), then permute the X columns so its
/// profile is decreasing and the Y columns so its profile is increasing.
/// Cardinalities are preserved and the constraint density cannot increase
/// (flips strictly shrink the flipped column's contribution; opposite
/// sorting is the minimizing rearrangement of the pairing sum).
pub fn canonicalize(sx: &SettingSet, sy: &SettingSet) -> Result<(SettingSet, SettingSet)> {
    if sx.is_empty() || sy.is_empty() {
        return Err(Error::Invalid("canonicalize needs nonempty sets".into()));
    }
    if sx.n() != sy.n() {
        return Err(Error::Invalid("mismatched n".into()));
    }
    let half = rat(1, 2);
    let one_side = |s: &SettingSet, decreasing: bool| -> Result<SettingSet> {
        let flips: Vec<bool> = s.profile().values().iter().map(|v| *v > half).collect();
        let flipped = s.flip_columns(&flips)?;
        let vals = flipped.profile().values().to_vec();
        let mut order: Vec<usize> = (0..s.n()).collect();
        if decreasing {
            order.sort_by(|&i, &j| vals[j].cmp(&vals[i]).then(i.cmp(&j)));
        } else {
            order.sort_by(|&i, &j| vals[i].cmp(&vals[j]).then(i.cmp(&j)));
        }
        flipped.permute_columns(&order)
    };
    Ok((one_side(sx, true)?, one_side(sy, false)?))
}

/// Witness of a solve: either a pair of setting sets (uniform supports) or
/// a product distribution.
#[derive(Debug, Clone)]
pub enum Witness {
    Sets { x: SettingSet, y: SettingSet },
    Distribution(ProductDistribution),
}

impl Witness {
    pub fn size_x(&self) -> usize {
        match self {
            Witness::Sets { x, .. } => x.size(),
            Witness::Distribution(d) => d.p_x().len(),
        }
    }

    pub fn size_y(&self) -> usize {
        match self {
            Witness::Sets { y, .. } => y.size(),
            Witness::Distribution(d) => d.p_y().len(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub n: usize,
    pub c: Rat,
    pub value: f64,
    pub witness: Witness,
    pub constraint_value: Rat,
    pub bracket_low: f64,
    pub bracket_high: f64,
    pub exhaustive: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// n = 4 doubles the exponent twice over n = 3; it is opt-in.
    pub allow_n4: bool,
    pub workers: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            allow_n4: false,
            workers: 1,
        }
    }
}

/// One canonical subset class: subsets with equal (size, column sums) are
/// interchangeable for both the constraint and the objective, so only the
/// lexicographically least representative is kept.
#[derive(Debug, Clone)]
struct SubsetClass {
    size: u32,
    colsums: Vec<u32>,
    mask: u32,
}

/// Lexicographic order on the sorted member lists of two subsets of string
/// indices (bit i set = string i present). Elements below the lowest
/// differing bit agree; the side holding that bit continues with a smaller
/// element, unless the other side has nothing left, in which case the other
/// side is a strict prefix and therefore smaller.
fn cmp_masks_lex(a: u32, b: u32) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    if a == b {
        return Ordering::Equal;
    }
    let d = a ^ b;
    let low = d & d.wrapping_neg();
    let a_has_low = a & low != 0;
    let other = if a_has_low { b } else { a };
    let other_continues = other & !((low << 1).wrapping_sub(1)) != 0;
    match (a_has_low, other_continues) {
        (true, true) => Ordering::Less,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Greater,
        (false, false) => Ordering::Less,
    }
}

fn canonical_classes(n: usize, decreasing: bool) -> Vec<SubsetClass> {
    let total = 1u32 << (1 << n);
    let strings = 1usize << n;
    let mut best: BTreeMap<(u32, Vec<u32>), u32> = BTreeMap::new();
    for mask in 1..total {
        let size = mask.count_ones();
        let mut colsums = vec![0u32; n];
        for s in 0..strings {
            if (mask >> s) & 1 == 1 {
                for (j, cs) in colsums.iter_mut().enumerate() {
                    *cs += ((s >> (n - 1 - j)) & 1) as u32;
                }
            }
        }
        // Profile components <= 1/2.
        if colsums.iter().any(|&cs| 2 * cs > size) {
            continue;
        }
        let monotone = if decreasing {
            colsums.windows(2).all(|w| w[0] >= w[1])
        } else {
            colsums.windows(2).all(|w| w[0] <= w[1])
        };
        if !monotone {
            continue;
        }
        best.entry((size, colsums))
            .and_modify(|m| {
                if cmp_masks_lex(mask, *m) == std::cmp::Ordering::Less {
                    *m = mask;
                }
            })
            .or_insert(mask);
    }
    best.into_iter()
        .map(|((size, colsums), mask)| SubsetClass { size, colsums, mask })
        .collect()
}

fn mask_to_set(mask: u32, n: usize) -> Result<SettingSet> {
    let members = (0..(1usize << n))
        .filter(|s| (mask >> s) & 1 == 1)
        .map(|s| BitString::from_mask(s as u64, n))
        .collect();
    SettingSet::from_members(n, members)
}

/// Exact optimum of the uniform-support problem:
/// min `(|S_X|·|S_Y|)^(-1/n)` over nonempty subset pairs with constraint
/// density at most `c`. Exhaustive over canonical pairs (X profile
/// decreasing, Y profile increasing, both bounded by 1/2), which is
/// sufficient because any optimal pair canonicalizes without losing
/// feasibility or cardinality. The witness is the lexicographically least
/// optimal pair of the canonical space.
pub fn solve_uniform_exact(n: usize, c: &Rat, opts: &SolveOptions) -> Result<SolveResult> {
    if c <= &Rat::zero() || c > &rat(1, 4) {
        return Err(Error::Domain(format!("c must be in (0, 1/4], got {c}")));
    }
    match n {
        1..=3 => {}
        4 if opts.allow_n4 => {}
        4 => {
            return Err(Error::Invalid(
                "n = 4 exhaustive search requires the opt-in flag".into(),
            ))
        }
        _ => {
            return Err(Error::Invalid(format!(
                "exhaustive solve supports n in [1, 4], got {n}"
            )))
        }
    }
    let c_num = c
        .numer()
        .to_u128()
        .ok_or_else(|| Error::Invalid("constraint numerator too large".into()))?;
    let c_den = c
        .denom()
        .to_u128()
        .ok_or_else(|| Error::Invalid("constraint denominator too large".into()))?;
    let xs = canonical_classes(n, true);
    let ys = canonical_classes(n, false);

    #[derive(Clone)]
    struct Best {
        product: u64,
        mask_x: u32,
        mask_y: u32,
        dot: u64,
    }
    let consider = |best: &mut Option<Best>, cand: Best| {
        let better = match best {
            None => true,
            Some(b) => {
                (cand.product > b.product)
                    || (cand.product == b.product
                        && (cmp_masks_lex(cand.mask_x, b.mask_x)
                            .then(cmp_masks_lex(cand.mask_y, b.mask_y))
                            == std::cmp::Ordering::Less))
            }
        };
        if better {
            *best = Some(cand);
        }
    };
    let scan_chunk = |chunk: &[SubsetClass]| -> Option<Best> {
        let mut best: Option<Best> = None;
        for x in chunk {
            for y in &ys {
                let dot: u64 = x
                    .colsums
                    .iter()
                    .zip(&y.colsums)
                    .map(|(&a, &b)| (a as u64) * (b as u64))
                    .sum();
                let product = x.size as u64 * y.size as u64;
                // dot/(n*product) <= c, cross-multiplied in u128.
                if (dot as u128) * c_den <= c_num * (n as u128) * (product as u128) {
                    consider(
                        &mut best,
                        Best {
                            product,
                            mask_x: x.mask,
                            mask_y: y.mask,
                            dot,
                        },
                    );
                }
            }
        }
        best
    };

    let workers = opts.workers.max(1);
    let best = if workers > 1 && xs.len() > 64 {
        let chunk_size = xs.len().div_ceil(workers * 4);
        let chunks: Vec<&[SubsetClass]> = xs.chunks(chunk_size).collect();
        let partials = run_indexed(chunks.len(), workers, |i| scan_chunk(chunks[i]));
        let mut merged: Option<Best> = None;
        for p in partials.into_iter().flatten() {
            consider(&mut merged, p);
        }
        merged
    } else {
        scan_chunk(&xs)
    };

    let best = best.ok_or_else(|| {
        Error::Infeasible("no feasible pair (the all-zeros singleton should always work)".into())
    })?;
    let wx = mask_to_set(best.mask_x, n)?;
    let wy = mask_to_set(best.mask_y, n)?;
    let value = match n {
        1 => 1.0 / best.product as f64,
        2 => 1.0 / (best.product as f64).sqrt(),
        _ => (-(best.product as f64).log2() / n as f64).exp2(),
    };
    let constraint_value = Rat::new(
        BigInt::from(best.dot),
        BigInt::from(n as u64 * best.product),
    );
    Ok(SolveResult {
        n,
        c: c.clone(),
        value,
        witness: Witness::Sets { x: wx, y: wy },
        constraint_value,
        bracket_low: value,
        bracket_high: value,
        exhaustive: true,
    })
}

/// Extreme point of the capped simplex LP: mass `cap` on the
/// `floor(1/cap)` strings of smallest theta (ties lexicographic) and the
/// remainder on the next string. `cap` is embedded exactly as a dyadic
/// rational, so all masses and feasibility checks are exact.
#[derive(Debug, Clone)]
pub struct ExtremePoint {
    pub cap: f64,
    pub cap_mass: Rat,
    pub full_atoms: Vec<BitString>,
    pub remainder: Option<(BitString, Rat)>,
}

impl ExtremePoint {
    pub fn to_masses(&self) -> BTreeMap<BitString, Rat> {
        let mut out: BTreeMap<BitString, Rat> = self
            .full_atoms
            .iter()
            .map(|s| (s.clone(), self.cap_mass.clone()))
            .collect();
        if let Some((z, r)) = &self.remainder {
            out.insert(z.clone(), r.clone());
        }
        out
    }

    pub fn weighted_sum(&self, theta: &BTreeMap<BitString, Rat>) -> Rat {
        let mut sum = Rat::zero();
        for (s, p) in self.to_masses() {
            sum += theta.get(&s).cloned().unwrap_or_else(Rat::zero) * p;
        }
        sum
    }
}

fn sorted_by_theta(theta: &BTreeMap<BitString, Rat>) -> Vec<(&BitString, &Rat)> {
    let mut order: Vec<(&BitString, &Rat)> = theta.iter().collect();
    order.sort_by(|(ka, va), (kb, vb)| va.cmp(vb).then(ka.cmp(kb)));
    order
}

/// Minimizes `Σ p(x) theta(x)` subject to `p(x) <= cap` and normalization,
/// by the greedy extreme point.
pub fn lp_extreme_point(theta: &BTreeMap<BitString, Rat>, cap: f64) -> Result<ExtremePoint> {
    if !(cap > 0.0 && cap < 1.0) {
        return Err(Error::Domain(format!("cap must be in (0, 1), got {cap}")));
    }
    if theta.is_empty() {
        return Err(Error::Invalid("theta is empty".into()));
    }
    let n = theta.keys().next().expect("nonempty").len();
    if theta.len() != 1usize << n {
        return Err(Error::Invalid(format!(
            "theta must cover all of {{0,1}}^{n}: {} of {} strings present",
            theta.len(),
            1usize << n
        )));
    }
    let cap_mass = rat_from_f64(cap)?;
    let k_big = (Rat::one() / &cap_mass).floor().to_integer();
    let k = k_big
        .to_usize()
        .ok_or_else(|| Error::Invalid("cap too small".into()))?;
    let remainder_mass = Rat::one() - Rat::from_integer(BigInt::from(k)) * &cap_mass;
    let needs_z = !remainder_mass.is_zero();
    if k > theta.len() || (k == theta.len() && needs_z) {
        return Err(Error::Infeasible(format!(
            "cap {cap} cannot normalize over {} strings",
            theta.len()
        )));
    }
    let order = sorted_by_theta(theta);
    let full_atoms: Vec<BitString> = order[..k].iter().map(|(s, _)| (*s).clone()).collect();
    let remainder = if needs_z {
        Some((order[k].0.clone(), remainder_mass))
    } else {
        None
    };
    Ok(ExtremePoint {
        cap,
        cap_mass,
        full_atoms,
        remainder,
    })
}

/// Uniform distribution over the extreme point's support minus the
/// remainder atom (identity when there is no remainder). The max mass is
/// `1/floor(1/cap) <= 3 cap`, and the theta-weighted sum cannot increase
/// because the remainder atom carries the largest theta of the support.
pub fn uniformize(p_star: &ExtremePoint) -> Result<BTreeMap<BitString, Rat>> {
    if p_star.full_atoms.is_empty() {
        return Err(Error::Invalid("extreme point without full atoms".into()));
    }
    let w = Rat::new(BigInt::one(), BigInt::from(p_star.full_atoms.len()));
    Ok(p_star
        .full_atoms
        .iter()
        .map(|s| (s.clone(), w.clone()))
        .collect())
}

/// All strings of length n in lexicographic order.
fn all_strings(n: usize) -> Vec<BitString> {
    (0..(1u64 << n)).map(|m| BitString::from_mask(m, n)).collect()
}

fn theta_from(side: &BTreeMap<BitString, Rat>, n: usize, strings: &[BitString]) -> BTreeMap<BitString, Rat> {
    let mean = ProductDistribution::mean_vector(side, n);
    strings
        .iter()
        .map(|s| {
            let mut dot = Rat::zero();
            for (j, m) in mean.iter().enumerate() {
                if s.bit(j) == 1 {
                    dot += m;
                }
            }
            (s.clone(), dot)
        })
        .collect()
}

/// Smallest feasible cap for `min_p Σ p θ <= budget` under `p <= cap`,
/// found by bisection on the cap with exact feasibility tests against the
/// sorted theta prefix sums. Returns the cap and its exact greedy weight.
fn minimal_feasible_cap(theta: &BTreeMap<BitString, Rat>, budget: &Rat) -> Result<(f64, Rat)> {
    let order = sorted_by_theta(theta);
    let mut prefix: Vec<Rat> = Vec::with_capacity(order.len() + 1);
    prefix.push(Rat::zero());
    for (_, v) in &order {
        let last = prefix.last().expect("nonempty").clone();
        prefix.push(last + (*v).clone());
    }
    let greedy_weight = |cap: f64| -> Option<Rat> {
        let cap_mass = rat_from_f64(cap).ok()?;
        let k = (Rat::one() / &cap_mass)
            .floor()
            .to_integer()
            .to_usize()?;
        if k > order.len() {
            return None;
        }
        let remainder = Rat::one() - Rat::from_integer(BigInt::from(k)) * &cap_mass;
        if k == order.len() && !remainder.is_zero() {
            return None;
        }
        let mut w = &prefix[k] * &cap_mass;
        if !remainder.is_zero() {
            w += order[k].1 * &remainder;
        }
        Some(w)
    };
    let feasible = |cap: f64| -> bool {
        match greedy_weight(cap) {
            Some(w) => &w <= budget,
            None => false,
        }
    };
    // order.len() is 2^n, so this is exactly the uniform cap.
    let lo0 = 1.0 / order.len() as f64;
    if feasible(lo0) {
        let w = greedy_weight(lo0).expect("feasible cap evaluates");
        return Ok((lo0, w));
    }
    if !feasible(1.0 - f64::EPSILON) {
        return Err(Error::Infeasible("no cap below 1 satisfies the budget".into()));
    }
    let mut lo = lo0;
    let mut hi = 1.0 - f64::EPSILON;
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let w = greedy_weight(hi).expect("hi stays feasible");
    Ok((hi, w))
}

/// Bracket for the distribution problem at (n, c) plus an alternating
/// greedy-LP heuristic.
///
/// The bracket is `[3^(-2/n) U, U]` where `U` is the best known upper value
/// of the uniform-support problem (exhaustive for n <= 3, threshold
/// construction otherwise). The heuristic alternates the capped LP on each
/// side with bisection on the cap; the uniform-support witness itself is
/// also evaluated as a product distribution, so the reported value never
/// exceeds `U`.
pub fn bracket_p_n(n: usize, c: &Rat, workers: usize) -> Result<SolveResult> {
    if n == 0 || n > 12 {
        return Err(Error::Invalid(format!(
            "distribution bracket supports n in [1, 12], got {n}"
        )));
    }
    if c <= &Rat::zero() || c > &rat(1, 4) {
        return Err(Error::Domain(format!("c must be in (0, 1/4], got {c}")));
    }
    // Upper witness from the uniform-support problem.
    let (upper_value, upper_sets): (f64, (SettingSet, SettingSet)) = if n <= 3 {
        let r = solve_uniform_exact(n, c, &SolveOptions { allow_n4: false, workers })?;
        match &r.witness {
            Witness::Sets { x, y } => (r.value, (x.clone(), y.clone())),
            Witness::Distribution(_) => unreachable!("exhaustive solve returns sets"),
        }
    } else {
        let t = threshold_construct(n as u64, c, None)?;
        let set = threshold_set(n, t.l as usize)?;
        (t.objective, (set.clone(), set))
    };

    let strings = all_strings(n);
    let budget = c * BigInt::from(n);
    let uniform: BTreeMap<BitString, Rat> = strings
        .iter()
        .map(|s| (s.clone(), Rat::new(BigInt::one(), BigInt::from(strings.len()))))
        .collect();

    let mut p_y = uniform.clone();
    let mut best: Option<(f64, BTreeMap<BitString, Rat>, BTreeMap<BitString, Rat>)> = None;
    let mut last_caps = (f64::NAN, f64::NAN);
    for _round in 0..32 {
        let theta_x = theta_from(&p_y, n, &strings);
        let (cap_x, _) = minimal_feasible_cap(&theta_x, &budget)?;
        let p_x = lp_extreme_point(&theta_x, cap_x)?.to_masses();

        let theta_y = theta_from(&p_x, n, &strings);
        let (cap_y, _) = minimal_feasible_cap(&theta_y, &budget)?;
        p_y = lp_extreme_point(&theta_y, cap_y)?.to_masses();

        let value = (cap_x * cap_y).powf(1.0 / n as f64);
        if best.as_ref().is_none_or(|(v, _, _)| value < *v) {
            best = Some((value, p_x.clone(), p_y.clone()));
        }
        if (cap_x - last_caps.0).abs() < 1e-15 && (cap_y - last_caps.1).abs() < 1e-15 {
            break;
        }
        last_caps = (cap_x, cap_y);
    }
    let (mut value, mut wx, mut wy) = best.expect("at least one round ran");

    // Candidate from the uniform-support route keeps value <= U.
    let uniform_pair = ProductDistribution::uniform_over(&upper_sets.0, &upper_sets.1)?;
    let uniform_value = objective_value(&uniform_pair);
    if uniform_value < value {
        value = uniform_value;
        wx = uniform_pair.p_x().clone();
        wy = uniform_pair.p_y().clone();
    }

    let dist = ProductDistribution::new(n, wx, wy, false)?;
    let constraint_value = constraint_density_dists(&dist);
    if &constraint_value > c {
        return Err(Error::Invalid(
            "heuristic produced an infeasible distribution (exact check failed)".into(),
        ));
    }
    Ok(SolveResult {
        n,
        c: c.clone(),
        value,
        witness: Witness::Distribution(dist),
        constraint_value,
        bracket_low: 3f64.powf(-2.0 / n as f64) * upper_value,
        bracket_high: upper_value,
        exhaustive: false,
    })
}

/// Threshold-set achievability report: `S_X = S_Y = A_{n,l}` with exact
/// big-integer counting.
#[derive(Debug, Clone)]
pub struct ThresholdReport {
    pub n: u64,
    pub l: u64,
    pub c: Rat,
    /// `log2 |A_{n,l}|`.
    pub size_log2: f64,
    /// Exact `(column mean)^2 = (Σ i C(n,i) / (n Σ C(n,i)))^2`.
    pub constraint: Rat,
    /// `|A_{n,l}|^(-2/n)`.
    pub objective: f64,
    /// `objective - 4^(-h_b(sqrt c))`.
    pub excess: f64,
}

/// Builds the threshold construction at level `l`, or, when `l` is omitted,
/// starts from `l = floor(n sqrt(c))` (always feasible) and sweeps upward to
/// the largest feasible level, which solves the restricted problem exactly
/// since `|A_{n,l}|` grows with `l`.
pub fn threshold_construct(n: u64, c: &Rat, l: Option<u64>) -> Result<ThresholdReport> {
    if n == 0 {
        return Err(Error::Invalid("n must be positive".into()));
    }
    if c <= &Rat::zero() || c > &rat(1, 4) {
        return Err(Error::Domain(format!("c must be in (0, 1/4], got {c}")));
    }
    let c_num = c.numer().magnitude().clone();
    let c_den = c.denom().magnitude().clone();

    // Cumulative |A_{n,l}| and total ones, incrementally in big integers.
    let mut binom = BigUint::one(); // C(n, 0)
    let mut sizes: Vec<BigUint> = vec![BigUint::one()];
    let mut ones: Vec<BigUint> = vec![BigUint::zero()];
    let extend_to = |target: u64, sizes: &mut Vec<BigUint>, ones: &mut Vec<BigUint>, binom: &mut BigUint| {
        while (sizes.len() as u64) <= target {
            let i = sizes.len() as u64; // next level
            *binom = &*binom * BigUint::from(n - (i - 1)) / BigUint::from(i);
            let a = sizes.last().expect("nonempty") + &*binom;
            let o = ones.last().expect("nonempty") + BigUint::from(i) * &*binom;
            sizes.push(a);
            ones.push(o);
        }
    };
    let feasible = |l: u64, sizes: &[BigUint], ones: &[BigUint]| -> bool {
        let a = &sizes[l as usize];
        let o = &ones[l as usize];
        // (o/(n a))^2 <= c  <=>  o^2 c_den <= c_num (n a)^2
        let lhs = o * o * &c_den;
        let na = BigUint::from(n) * a;
        let rhs = &c_num * &na * &na;
        lhs <= rhs
    };

    let chosen = match l {
        Some(l) => {
            if l > n {
                return Err(Error::Invalid(format!("l = {l} exceeds n = {n}")));
            }
            extend_to(l, &mut sizes, &mut ones, &mut binom);
            if !feasible(l, &sizes, &ones) {
                return Err(Error::Infeasible(format!(
                    "threshold level l = {l} violates the constraint at c = {c}"
                )));
            }
            l
        }
        None => {
            // floor(n sqrt(c)): largest l with l^2 c_den <= n^2 c_num.
            let n_big = BigUint::from(n);
            let nn_cnum = &n_big * &n_big * &c_num;
            let mut lo = 0u64;
            let mut hi = n;
            while lo < hi {
                let mid = (lo + hi).div_ceil(2);
                let m = BigUint::from(mid);
                if &m * &m * &c_den <= nn_cnum {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            let mut level = lo;
            extend_to(level, &mut sizes, &mut ones, &mut binom);
            assert!(
                feasible(level, &sizes, &ones),
                "floor(n sqrt c) start must be feasible"
            );
            while level < n {
                extend_to(level + 1, &mut sizes, &mut ones, &mut binom);
                if feasible(level + 1, &sizes, &ones) {
                    level += 1;
                } else {
                    break;
                }
            }
            level
        }
    };

    let a = &sizes[chosen as usize];
    let o = &ones[chosen as usize];
    let size_log2 = log2_biguint(a);
    let objective = (-2.0 * size_log2 / n as f64).exp2();
    let na = BigUint::from(n) * a;
    let constraint = Rat::new(BigInt::from(o * o), BigInt::from(&na * &na));
    let limit = asymptotic_bounds(rat_to_f64(c))?.independent;
    Ok(ThresholdReport {
        n,
        l: chosen,
        c: c.clone(),
        size_log2,
        constraint,
        objective,
        excess: objective - limit,
    })
}

/// Finite-n converse certificate for a feasible set pair.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub n: usize,
    pub m: usize,
    pub c: Rat,
    pub size_x: usize,
    pub size_y: usize,
    /// Upper discretizations of the canonical profiles, capped at 1/2.
    pub a_bar: Profile,
    pub b_bar: Profile,
    /// `(1/m) Σ ā_i b̄_i - (1/n) Σ a_i b_i`, strictly below `2/m`.
    pub gap: Rat,
    /// `(1/m) Σ (h_b(ā_i) + h_b(b̄_i))`.
    pub entropy_sum: f64,
    /// `Σ_k (l_k - l_{k-1})(h_b(ā_k) + h_b(b̄_k))`, `l_k = floor(kn/m)`.
    pub exact_exponent: f64,
    /// `f(min(c + 2/m, 1/4))`.
    pub f_at_relaxed: f64,
    /// Whether `c + 2/m >= c_Q`, the regime where `entropy_sum <= f_at_relaxed`
    /// is guaranteed.
    pub relaxed_applicable: bool,
    /// Certified: `log2(|S_X|·|S_Y|) <=` this value (equals `exact_exponent`).
    pub certified_size_bound_log2: f64,
    pub size_product_log2: f64,
}

pub fn converse_certificate(
    sx: &SettingSet,
    sy: &SettingSet,
    m: usize,
    c: &Rat,
) -> Result<CertificateReport> {
    if m < 2 {
        return Err(Error::Invalid(format!("certificate grid m must be >= 2, got {m}")));
    }
    if sx.is_empty() || sy.is_empty() {
        return Err(Error::Invalid("certificate needs nonempty sets".into()));
    }
    let rho = constraint_density_sets(sx, sy)?;
    if &rho > c {
        return Err(Error::Infeasible(format!(
            "constraint density {rho} exceeds c = {c}"
        )));
    }
    let n = sx.n();
    let (cx, cy) = canonicalize(sx, sy)?;
    let a = cx.profile();
    let b = cy.profile();
    let a_bar_raw = discretize(a, m, BoundSide::Upper, Monotone::Decreasing)?;
    let b_bar_raw = discretize(b, m, BoundSide::Upper, Monotone::Increasing)?;

    let mut coarse = Rat::zero();
    for (x, y) in a_bar_raw.values().iter().zip(b_bar_raw.values()) {
        coarse += x * y;
    }
    coarse /= BigInt::from(m);
    let mut fine = Rat::zero();
    for (x, y) in a.values().iter().zip(b.values()) {
        fine += x * y;
    }
    fine /= BigInt::from(n);
    let gap = coarse - fine;
    if gap >= rat(2, m as i64) {
        return Err(Error::Invalid(format!(
            "discretization gap {gap} reached 2/m; this contradicts the gap lemma"
        )));
    }

    // Cap at 1/2 (only binds for odd m): a binary mean below ā_k can still
    // have entropy up to h_b(1/2), so the sound per-bit bound is
    // h_b(min(ā_k, 1/2)).
    let a_bar = a_bar_raw.clamped_to_half();
    let b_bar = b_bar_raw.clamped_to_half();

    let exact_exponent = volume_entropy_bound(&a_bar, n)? + volume_entropy_bound(&b_bar, n)?;
    let mut entropy_sum = 0.0;
    for (x, y) in a_bar.values().iter().zip(b_bar.values()) {
        entropy_sum += binary_entropy(rat_to_f64(x))? + binary_entropy(rat_to_f64(y))?;
    }
    entropy_sum /= m as f64;

    let c_relaxed = c + rat(2, m as i64);
    let relaxed_applicable = c_relaxed >= c_q_rational();
    let f_input = rat_to_f64(&c_relaxed).min(0.25);
    let f_at_relaxed = f_max(f_input)?.value;
    let size_product_log2 = (sx.size() as f64 * sy.size() as f64).log2();

    Ok(CertificateReport {
        n,
        m,
        c: c.clone(),
        size_x: sx.size(),
        size_y: sy.size(),
        a_bar,
        b_bar,
        gap,
        entropy_sum,
        exact_exponent,
        f_at_relaxed,
        relaxed_applicable,
        certified_size_bound_log2: exact_exponent,
        size_product_log2,
    })
}

/// The always-feasible distribution pair witnessing `P_n < 1/2`: mass
/// `1 - 2c` on the all-zeros string and `2c/(2^n - 1)` on every other
/// string, against a uniform other side. Returns the pair and its
/// objective `(1/2)(1 - 2c)^(1/n)`.
pub fn prop1_feasible(n: usize, c: &Rat) -> Result<(ProductDistribution, f64)> {
    if n == 0 || n > 16 {
        return Err(Error::Invalid(format!(
            "prop1_feasible materializes 2^n masses; n must be in [1, 16], got {n}"
        )));
    }
    if c <= &Rat::zero() || c > &rat(1, 4) {
        return Err(Error::Domain(format!("c must be in (0, 1/4], got {c}")));
    }
    let total = 1u64 << n;
    let zero_mass = Rat::one() - c * BigInt::from(2);
    let other_mass = c * BigInt::from(2) / BigInt::from(total - 1);
    let mut p_x = BTreeMap::new();
    let uniform_mass = Rat::new(BigInt::one(), BigInt::from(total));
    let mut p_y = BTreeMap::new();
    for mask in 0..total {
        let s = BitString::from_mask(mask, n);
        p_y.insert(s.clone(), uniform_mass.clone());
        p_x.insert(
            s,
            if mask == 0 {
                zero_mass.clone()
            } else {
                other_mass.clone()
            },
        );
    }
    let dist = ProductDistribution::new(n, p_x, p_y, true)?;
    let objective = 0.5 * rat_to_f64(&(Rat::one() - c * BigInt::from(2))).powf(1.0 / n as f64);
    Ok((dist, objective))
}
