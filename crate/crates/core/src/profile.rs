//! Profiles of bit-string sets: the step-function view, the partial order,
//! inner-product densities, grid discretizations, and exact small-`n`
//! volumes with their entropy upper bound.
//!
//! Profile components of concrete sets are exact rationals (integer column
//! sum over integer cardinality); floating point only enters through
//! [`volume_entropy_bound`].

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::math::binary_entropy;
use crate::rational::{big_to_usize, ceil_rat, floor_rat, rat, rat_to_f64, Rat};

/// A fixed-length string over {0,1}. Ordering is lexicographic, which for
/// equal lengths coincides with the numeric order of the binary value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString {
    bits: Vec<u8>,
}

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Invalid("bit string must be nonempty".into()));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Invalid("bit string entries must be 0 or 1".into()));
        }
        Ok(Self { bits })
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![0; n] }
    }

    /// Builds from the low `n` bits of `mask`, most significant bit first,
    /// so that numeric order of `mask` equals lexicographic string order.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        let bits = (0..n).map(|j| ((mask >> (n - 1 - j)) & 1) as u8).collect();
        Self { bits }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let bits: Result<Vec<u8>> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Parse(format!("bad character {other:?} in bit string"))),
            })
            .collect();
        Self::new(bits?)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn flipped(&self, flip: &[bool]) -> Self {
        let bits = self
            .bits
            .iter()
            .zip(flip)
            .map(|(&b, &f)| if f { 1 - b } else { b })
            .collect();
        Self { bits }
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        let bits = perm.iter().map(|&j| self.bits[j]).collect();
        Self { bits }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// A vector in `[0,1]^m` together with its step-function view
/// `f_a(t) = a_1` at `t = 0` and `a_ceil(t*m)` for `t in (0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    values: Vec<Rat>,
}

impl Profile {
    pub fn new(values: Vec<Rat>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid("profile must have positive length".into()));
        }
        for v in &values {
            if v.is_negative() || *v > Rat::one() {
                return Err(Error::Invalid(format!(
                    "profile component {v} outside [0, 1]"
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn zero(m: usize) -> Self {
        Self {
            values: vec![Rat::zero(); m],
        }
    }

    pub fn from_decimals(parts: &[&str]) -> Result<Self> {
        let values: Result<Vec<Rat>> = parts.iter().map(|s| crate::rational::parse_rat(s)).collect();
        Self::new(values?)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    pub fn is_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn is_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    /// Whether every component is at most 1/2 (the regime where the volume
    /// entropy bound and the converse machinery apply).
    pub fn is_bounded(&self) -> bool {
        let half = rat(1, 2);
        self.values.iter().all(|v| *v <= half)
    }

    /// Each component capped at 1/2; no-op on bounded profiles.
    pub fn clamped_to_half(&self) -> Self {
        let half = rat(1, 2);
        Self {
            values: self
                .values
                .iter()
                .map(|v| if *v > half { half.clone() } else { v.clone() })
                .collect(),
        }
    }

    pub fn to_f64s(&self) -> Vec<f64> {
        self.values.iter().map(rat_to_f64).collect()
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", crate::rational::format_rat(v))?;
        }
        write!(f, ")")
    }
}

/// Step-function evaluation `f_a(t)` at an exact rational abscissa.
pub fn char_eval(a: &Profile, t: &Rat) -> Result<Rat> {
    if t.is_negative() || *t > Rat::one() {
        return Err(Error::Domain(format!("char_eval needs t in [0,1], got {t}")));
    }
    if t.is_zero() {
        return Ok(a.values[0].clone());
    }
    let idx = ceil_rat(&(t * BigInt::from(a.len())));
    let idx = big_to_usize(&idx)?;
    Ok(a.values[idx - 1].clone())
}

/// Sorted union of step breakpoints `{i/m_a} ∪ {j/m_b}` over `(0, 1]`.
fn union_breakpoints(ma: usize, mb: usize) -> Vec<Rat> {
    let mut set: BTreeSet<Rat> = BTreeSet::new();
    for i in 1..=ma {
        set.insert(rat(i as i64, ma as i64));
    }
    for j in 1..=mb {
        set.insert(rat(j as i64, mb as i64));
    }
    set.into_iter().collect()
}

/// The pointwise partial order on step functions: `a <= b` iff
/// `f_a(r) <= f_b(r)` for every `r in [0,1]`. Both functions are constant
/// between union breakpoints, so comparing at `t = 0` and at every union
/// breakpoint decides the order exactly.
pub fn profile_leq(a: &Profile, b: &Profile) -> bool {
    if a.values[0] > b.values[0] {
        return false;
    }
    for q in union_breakpoints(a.len(), b.len()) {
        let fa = char_eval(a, &q).expect("breakpoint in domain");
        let fb = char_eval(b, &q).expect("breakpoint in domain");
        if fa > fb {
            return false;
        }
    }
    true
}

/// Exact `∫_0^1 f_a f_b dt` via the union breakpoint grid. For equal lengths
/// `n` this equals `(1/n) Σ a_i b_i`.
pub fn inner_density(a: &Profile, b: &Profile) -> Rat {
    let mut total = Rat::zero();
    let mut prev = Rat::zero();
    for q in union_breakpoints(a.len(), b.len()) {
        let fa = char_eval(a, &q).expect("breakpoint in domain");
        let fb = char_eval(b, &q).expect("breakpoint in domain");
        total += fa * fb * (&q - &prev);
        prev = q;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotone {
    Decreasing,
    Increasing,
}

/// Grid discretization of a monotone profile onto `m` cells.
///
/// Decreasing `a`: upper `ā_i = ceil(m f_a((i-1)/m))/m`, lower
/// `a̲_i = floor(m f_a(i/m))/m`. Increasing `b`: upper
/// `b̄_i = ceil(m f_b(i/m))/m`, lower `b̲_i = floor(m f_b((i-1)/m))/m`.
/// The input must actually be monotone in the stated direction; silently
/// sorting would produce bounds for a different profile.
pub fn discretize(a: &Profile, m: usize, side: BoundSide, dir: Monotone) -> Result<Profile> {
    if m == 0 {
        return Err(Error::Invalid("discretization grid must be positive".into()));
    }
    match dir {
        Monotone::Decreasing if !a.is_decreasing() => {
            return Err(Error::Invalid("profile is not decreasing".into()))
        }
        Monotone::Increasing if !a.is_increasing() => {
            return Err(Error::Invalid("profile is not increasing".into()))
        }
        _ => {}
    }
    let mm = BigInt::from(m);
    let mut values = Vec::with_capacity(m);
    for i in 1..=m {
        let at = match (dir, side) {
            (Monotone::Decreasing, BoundSide::Upper) => rat((i - 1) as i64, m as i64),
            (Monotone::Decreasing, BoundSide::Lower) => rat(i as i64, m as i64),
            (Monotone::Increasing, BoundSide::Upper) => rat(i as i64, m as i64),
            (Monotone::Increasing, BoundSide::Lower) => rat((i - 1) as i64, m as i64),
        };
        let fv = char_eval(a, &at)?;
        let scaled = fv * &mm;
        let grid_value = match side {
            BoundSide::Upper => ceil_rat(&scaled),
            BoundSide::Lower => floor_rat(&scaled),
        };
        values.push(Rat::new(grid_value, mm.clone()));
    }
    Profile::new(values)
}

/// `(1/m) Σ ā_i b̄_i - (1/n) Σ a_i b_i` for a decreasing bounded `a` and an
/// increasing bounded `b` of equal length; strictly below `2/m` for `m >= 2`.
pub fn discretization_gap(a: &Profile, b: &Profile, m: usize) -> Result<Rat> {
    if m < 2 {
        return Err(Error::Invalid("discretization_gap needs m >= 2".into()));
    }
    if a.len() != b.len() {
        return Err(Error::Invalid(format!(
            "profiles must have equal length, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if !a.is_decreasing() || !a.is_bounded() {
        return Err(Error::Invalid(
            "first profile must be decreasing with components <= 1/2".into(),
        ));
    }
    if !b.is_increasing() || !b.is_bounded() {
        return Err(Error::Invalid(
            "second profile must be increasing with components <= 1/2".into(),
        ));
    }
    let a_bar = discretize(a, m, BoundSide::Upper, Monotone::Decreasing)?;
    let b_bar = discretize(b, m, BoundSide::Upper, Monotone::Increasing)?;
    let mut coarse = Rat::zero();
    for (x, y) in a_bar.values().iter().zip(b_bar.values()) {
        coarse += x * y;
    }
    coarse /= BigInt::from(m);
    let n = a.len();
    let mut fine = Rat::zero();
    for (x, y) in a.values().iter().zip(b.values()) {
        fine += x * y;
    }
    fine /= BigInt::from(n);
    Ok(coarse - fine)
}

/// A set of distinct same-length bit strings with its cardinality and
/// profile cached at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SettingSet {
    n: usize,
    members: Vec<BitString>,
    profile: Profile,
}

impl SettingSet {
    /// Builds from members (any order); rejects duplicates and mixed lengths.
    pub fn from_members(n: usize, members: Vec<BitString>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("run count n must be positive".into()));
        }
        for m in &members {
            if m.len() != n {
                return Err(Error::Invalid(format!(
                    "member {m} has length {}, expected {n}",
                    m.len()
                )));
            }
        }
        let mut sorted = members;
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Invalid("duplicate members in setting set".into()));
        }
        let profile = Self::compute_profile(n, &sorted);
        Ok(Self {
            n,
            members: sorted,
            profile,
        })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::from_members(n, Vec::new())
    }

    /// The full cube {0,1}^n.
    pub fn full(n: usize) -> Result<Self> {
        if n > 20 {
            return Err(Error::Invalid(format!("refusing to materialize {{0,1}}^{n}")));
        }
        let members = (0..(1u64 << n)).map(|m| BitString::from_mask(m, n)).collect();
        Self::from_members(n, members)
    }

    fn compute_profile(n: usize, members: &[BitString]) -> Profile {
        if members.is_empty() {
            return Profile::zero(n);
        }
        let size = BigInt::from(members.len());
        let values = (0..n)
            .map(|j| {
                let col: u64 = members.iter().map(|m| m.bit(j) as u64).sum();
                Rat::new(BigInt::from(col), size.clone())
            })
            .collect();
        Profile::new(values).expect("column means are in [0,1]")
    }

    /// One bit string per line; all lines the same length; duplicates are an
    /// error. Blank lines and lines starting with `#` are skipped.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut members = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            members.push(BitString::parse(line)?);
        }
        if members.is_empty() {
            return Err(Error::Parse("setting set file has no strings".into()));
        }
        let n = members[0].len();
        if members.iter().any(|m| m.len() != n) {
            return Err(Error::Parse("setting set lines have mixed lengths".into()));
        }
        let mut sorted = members;
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Parse("duplicate bit string in setting set file".into()));
        }
        Self::from_members(n, sorted).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for m in &self.members {
            out.push_str(&m.to_string());
            out.push('\n');
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[BitString] {
        &self.members
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn contains(&self, s: &BitString) -> bool {
        self.members.binary_search(s).is_ok()
    }

    pub fn flip_columns(&self, flip: &[bool]) -> Result<Self> {
        let members = self.members.iter().map(|m| m.flipped(flip)).collect();
        Self::from_members(self.n, members)
    }

    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        let members = self.members.iter().map(|m| m.permuted(perm)).collect();
        Self::from_members(self.n, members)
    }
}

impl fmt::Display for SettingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

/// Profile of a set: the vector of column means, zero for the empty set.
pub fn gamma(s: &SettingSet) -> Profile {
    s.profile().clone()
}

/// All strings in {0,1}^n with at most `l` ones (the threshold set).
pub fn threshold_set(n: usize, l: usize) -> Result<SettingSet> {
    if n == 0 || n > 20 {
        return Err(Error::Invalid(format!(
            "threshold_set materializes members; n must be in [1, 20], got {n}"
        )));
    }
    let members = (0..(1u64 << n))
        .filter(|m| (m.count_ones() as usize) <= l)
        .map(|m| BitString::from_mask(m, n))
        .collect();
    SettingSet::from_members(n, members)
}

/// Result of the exhaustive volume search.
#[derive(Debug, Clone)]
pub struct VolumeResult {
    pub size: usize,
    pub witness: SettingSet,
}

/// Exact `V_n(a)`: the largest `|S|` over `S ⊆ {0,1}^n` with `Γ(S) <= a`,
/// with the lexicographically least maximizing witness.
///
/// The search runs over candidate sizes `k` in descending order. For fixed
/// `k`, domination by `a` is equivalent to per-column integer budgets
/// `colsum_i <= floor(cap_i * k)` where `cap_i` is the minimum of `a` over
/// the step cells overlapping column `i`'s cell, so a first-fit DFS in
/// string order finds the lexicographically least witness directly.
pub fn volume_exact(a: &Profile, n: usize) -> Result<VolumeResult> {
    if !(1..=4).contains(&n) {
        return Err(Error::Domain(format!(
            "volume_exact is exhaustive and capped at n in [1, 4], got {n}"
        )));
    }
    let m = a.len();
    // cap_i = min over a-cells j overlapping ((i-1)/n, i/n].
    let caps: Vec<Rat> = (1..=n)
        .map(|i| {
            (1..=m)
                .filter(|&j| (j - 1) * n < i * m && (i - 1) * m < j * n)
                .map(|j| a.values()[j - 1].clone())
                .min()
                .expect("every column cell overlaps some profile cell")
        })
        .collect();
    let total = 1usize << n;
    for k in (1..=total).rev() {
        let budgets: Vec<u32> = caps
            .iter()
            .map(|cap| {
                let fl = floor_rat(&(cap * BigInt::from(k)));
                fl.to_u32().unwrap_or(u32::MAX).min(k as u32)
            })
            .collect();
        if let Some(masks) = first_fit(n, total, k, &budgets) {
            let members = masks
                .into_iter()
                .map(|mk| BitString::from_mask(mk as u64, n))
                .collect();
            let witness = SettingSet::from_members(n, members)?;
            return Ok(VolumeResult { size: k, witness });
        }
    }
    unreachable!("k = 1 is always feasible via the all-zeros string");
}

/// Lexicographic first-fit search for `k` strings within column budgets.
fn first_fit(n: usize, total: usize, k: usize, budgets: &[u32]) -> Option<Vec<usize>> {
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut sums = vec![0u32; n];
    fn rec(
        start: usize,
        need: usize,
        n: usize,
        total: usize,
        budgets: &[u32],
        chosen: &mut Vec<usize>,
        sums: &mut [u32],
    ) -> bool {
        if need == 0 {
            return true;
        }
        if total - start < need {
            return false;
        }
        for s in start..total {
            if total - s < need {
                break;
            }
            let mut ok = true;
            for j in 0..n {
                if (s >> (n - 1 - j)) & 1 == 1 && sums[j] + 1 > budgets[j] {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            for j in 0..n {
                sums[j] += ((s >> (n - 1 - j)) & 1) as u32;
            }
            chosen.push(s);
            if rec(s + 1, need - 1, n, total, budgets, chosen, sums) {
                return true;
            }
            chosen.pop();
            for j in 0..n {
                sums[j] -= ((s >> (n - 1 - j)) & 1) as u32;
            }
        }
        false
    }
    if rec(0, k, n, total, budgets, &mut chosen, &mut sums) {
        Some(chosen)
    } else {
        None
    }
}

/// Exact finite-`n` exponent bounding the volume:
/// `Σ_k (l_k - l_{k-1}) h_b(a_k)` with `l_k = floor(kn/m)`; guarantees
/// `log2 V_n(a) <=` this value for bounded profiles.
pub fn volume_entropy_bound(a: &Profile, n: usize) -> Result<f64> {
    if !a.is_bounded() {
        return Err(Error::Domain(
            "volume_entropy_bound needs all components <= 1/2".into(),
        ));
    }
    if n == 0 {
        return Err(Error::Invalid("n must be positive".into()));
    }
    let m = a.len() as u64;
    let n = n as u64;
    let mut sum = 0.0;
    let mut prev = 0u64;
    for k in 1..=m {
        let lk = k * n / m;
        let width = (lk - prev) as f64;
        if width > 0.0 {
            sum += width * binary_entropy(rat_to_f64(&a.values()[(k - 1) as usize]))?;
        }
        prev = lk;
    }
    Ok(sum)
}
