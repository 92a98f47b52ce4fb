//! Executable hidden-variable strategies: CHSH values for single- and
//! multi-run tests, the output-function tables, the uniform-marginal
//! four-lambda lift, the randomness measure, and a seeded Monte Carlo
//! simulator with a fixed shard plan.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{BitString, SettingSet};
use crate::rational::{format_rat, parse_rat, rat, rat_to_f64, Rat};
use crate::rng::{derive_seed, SplitMix64};
use crate::solver::constraint_density_sets;

/// Deterministic outputs `a(x, λ)` and `b(y, λ)` for x, y in {0,1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputFunctions {
    pub a0: u8,
    pub a1: u8,
    pub b0: u8,
    pub b1: u8,
}

impl OutputFunctions {
    pub fn new(a0: u8, a1: u8, b0: u8, b1: u8) -> Result<Self> {
        for v in [a0, a1, b0, b1] {
            if v > 1 {
                return Err(Error::Invalid("output bits must be 0 or 1".into()));
            }
        }
        Ok(Self { a0, a1, b0, b1 })
    }

    pub const ZERO: OutputFunctions = OutputFunctions { a0: 0, a1: 0, b0: 0, b1: 0 };

    pub fn a(&self, x: u8) -> u8 {
        if x == 0 {
            self.a0
        } else {
            self.a1
        }
    }

    pub fn b(&self, y: u8) -> u8 {
        if y == 0 {
            self.b0
        } else {
            self.b1
        }
    }

    /// `(-1)^(a(x) xor b(y) + xy)` as +1/-1.
    pub fn sign(&self, x: u8, y: u8) -> i64 {
        let parity = (self.a(x) ^ self.b(y)) + x * y;
        if parity & 1 == 0 {
            1
        } else {
            -1
        }
    }
}

/// Per-lambda device setting distribution: either a joint distribution over
/// pairs of n-bit strings or a product of two marginals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Settings {
    Joint(BTreeMap<(BitString, BitString), Rat>),
    Product {
        x: BTreeMap<BitString, Rat>,
        y: BTreeMap<BitString, Rat>,
    },
}

impl Settings {
    pub fn is_product(&self) -> bool {
        matches!(self, Settings::Product { .. })
    }

    /// Largest joint mass of a setting pair.
    pub fn max_joint_mass(&self) -> Rat {
        match self {
            Settings::Joint(map) => map.values().max().cloned().unwrap_or_else(Rat::zero),
            Settings::Product { x, y } => {
                let mx = x.values().max().cloned().unwrap_or_else(Rat::zero);
                let my = y.values().max().cloned().unwrap_or_else(Rat::zero);
                mx * my
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lambda {
    pub weight: Rat,
    pub settings: Settings,
    pub outputs: OutputFunctions,
}

/// A finite mixture over hidden values λ, each with a setting distribution
/// over pairs of n-bit strings and deterministic outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LhvmStrategy {
    n: usize,
    lambdas: Vec<Lambda>,
}

impl LhvmStrategy {
    pub fn new(n: usize, lambdas: Vec<Lambda>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("run count n must be positive".into()));
        }
        if lambdas.is_empty() {
            return Err(Error::Invalid("strategy needs at least one lambda".into()));
        }
        let mut wsum = Rat::zero();
        for (i, l) in lambdas.iter().enumerate() {
            if l.weight.is_negative() {
                return Err(Error::Invalid(format!("lambda {i} has negative weight")));
            }
            wsum += &l.weight;
            let mut psum = Rat::zero();
            match &l.settings {
                Settings::Joint(map) => {
                    if map.is_empty() {
                        return Err(Error::Invalid(format!("lambda {i} has empty settings")));
                    }
                    for ((x, y), p) in map {
                        if x.len() != n || y.len() != n {
                            return Err(Error::Invalid(format!(
                                "lambda {i} setting pair ({x}, {y}) has wrong length"
                            )));
                        }
                        if p.is_negative() {
                            return Err(Error::Invalid(format!("lambda {i} has negative mass")));
                        }
                        psum += p;
                    }
                }
                Settings::Product { x, y } => {
                    for (name, side) in [("x", x), ("y", y)] {
                        if side.is_empty() {
                            return Err(Error::Invalid(format!(
                                "lambda {i} has empty {name} marginal"
                            )));
                        }
                        let mut s = Rat::zero();
                        for (k, p) in side {
                            if k.len() != n {
                                return Err(Error::Invalid(format!(
                                    "lambda {i} {name} string {k} has wrong length"
                                )));
                            }
                            if p.is_negative() {
                                return Err(Error::Invalid(format!(
                                    "lambda {i} has negative mass"
                                )));
                            }
                            s += p;
                        }
                        if !s.is_one() {
                            return Err(Error::Invalid(format!(
                                "lambda {i} {name} marginal sums to {s}, not 1"
                            )));
                        }
                    }
                    psum = Rat::one();
                }
            }
            if !psum.is_one() {
                return Err(Error::Invalid(format!(
                    "lambda {i} settings sum to {psum}, not 1"
                )));
            }
        }
        if !wsum.is_one() {
            return Err(Error::Invalid(format!("lambda weights sum to {wsum}, not 1")));
        }
        Ok(Self { n, lambdas })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambdas(&self) -> &[Lambda] {
        &self.lambdas
    }
}

/// Collapses a lambda's setting distribution to the per-run pair frequencies
/// `π(x, y | λ) = Σ q(x⃗, y⃗ | λ) · (fraction of runs with pair (x, y))`,
/// indexed `[x][y]`, exactly.
fn pi_table(n: usize, settings: &Settings) -> [[Rat; 2]; 2] {
    let mut pi = [
        [Rat::zero(), Rat::zero()],
        [Rat::zero(), Rat::zero()],
    ];
    let mut add_pair = |x: &BitString, y: &BitString, q: Rat| {
        let mut counts = [[0u32; 2]; 2];
        for i in 0..n {
            counts[x.bit(i) as usize][y.bit(i) as usize] += 1;
        }
        for a in 0..2 {
            for b in 0..2 {
                if counts[a][b] > 0 {
                    pi[a][b] += &q * rat(counts[a][b] as i64, n as i64);
                }
            }
        }
    };
    match settings {
        Settings::Joint(map) => {
            for ((x, y), q) in map {
                add_pair(x, y, q.clone());
            }
        }
        Settings::Product { x, y } => {
            for (xs, px) in x {
                for (ys, py) in y {
                    add_pair(xs, ys, px * py);
                }
            }
        }
    }
    pi
}

/// Exact CHSH value `S = Σ_λ q(λ) · 4 Σ_{x,y} (-1)^(a⊕b+xy) π(x,y|λ)`.
pub fn chsh_value_exact(strategy: &LhvmStrategy) -> Rat {
    let mut total = Rat::zero();
    for l in strategy.lambdas() {
        let pi = pi_table(strategy.n, &l.settings);
        let mut s_lambda = Rat::zero();
        for x in 0..2u8 {
            for y in 0..2u8 {
                let term = &pi[x as usize][y as usize] * BigInt::from(l.outputs.sign(x, y));
                s_lambda += term;
            }
        }
        total += &l.weight * s_lambda * BigInt::from(4);
    }
    total
}

/// CHSH value as f64; always in [-4, 4].
pub fn chsh_value(strategy: &LhvmStrategy) -> f64 {
    rat_to_f64(&chsh_value_exact(strategy))
}

/// One row of the output-function table: the assignment with `a(0, λ) = 0`
/// and the signs its `S_λ/4` puts on `(q00, q01, q10, q11)`.
#[derive(Debug, Clone, Copy)]
pub struct OutputTableRow {
    pub index: u8,
    pub outputs: OutputFunctions,
    pub signs: [i8; 4],
}

/// The eight `a(0, λ) = 0` output assignments with their sign patterns.
/// Rows 1-4 carry exactly one negative sign (the useful ones); rows 5-8 at
/// least three.
pub fn output_tables() -> Vec<OutputTableRow> {
    let assignments: [(u8, u8, u8, u8); 8] = [
        (0, 0, 0, 0),
        (0, 0, 0, 1),
        (0, 1, 0, 0),
        (0, 1, 1, 0),
        (0, 0, 1, 0),
        (0, 0, 1, 1),
        (0, 1, 0, 1),
        (0, 1, 1, 1),
    ];
    assignments
        .iter()
        .enumerate()
        .map(|(i, &(a0, a1, b0, b1))| {
            let outputs = OutputFunctions { a0, a1, b0, b1 };
            let signs = [
                outputs.sign(0, 0) as i8,
                outputs.sign(0, 1) as i8,
                outputs.sign(1, 0) as i8,
                outputs.sign(1, 1) as i8,
            ];
            OutputTableRow {
                index: (i + 1) as u8,
                outputs,
                signs,
            }
        })
        .collect()
}

/// Lifts a single-run joint setting distribution `q*` into the four-lambda
/// strategy whose observable marginal is exactly uniform: `q(λ) = 1/4`,
/// outputs the four one-negative-sign assignments, and row-permuted copies
/// of `q*` as the per-lambda settings. The maximum joint mass (hence the
/// randomness measure) is unchanged and `S = 4(q*00 + q*01 + q*10 - q*11)`.
pub fn uniform_marginal_lift(q_star: &[Rat; 4]) -> Result<LhvmStrategy> {
    let mut sum = Rat::zero();
    for q in q_star {
        if q.is_negative() {
            return Err(Error::Invalid("q* masses must be nonnegative".into()));
        }
        sum += q;
    }
    if !sum.is_one() {
        return Err(Error::Invalid(format!("q* sums to {sum}, not 1")));
    }
    // Row permutations: each column of the 4x4 array holds each q* mass
    // exactly once, which is what forces the uniform marginal.
    let perms: [[usize; 4]; 4] = [
        [0, 1, 2, 3],
        [2, 3, 0, 1],
        [1, 0, 3, 2],
        [3, 2, 1, 0],
    ];
    let outputs = [
        OutputFunctions { a0: 0, a1: 0, b0: 0, b1: 0 },
        OutputFunctions { a0: 0, a1: 0, b0: 0, b1: 1 },
        OutputFunctions { a0: 0, a1: 1, b0: 0, b1: 0 },
        OutputFunctions { a0: 0, a1: 1, b0: 1, b1: 0 },
    ];
    let pair = |idx: usize| -> (BitString, BitString) {
        let x = BitString::new(vec![(idx >> 1) as u8]).expect("bit");
        let y = BitString::new(vec![(idx & 1) as u8]).expect("bit");
        (x, y)
    };
    let lambdas = (0..4)
        .map(|lam| {
            let mut map = BTreeMap::new();
            for slot in 0..4 {
                let mass = q_star[perms[lam][slot]].clone();
                if !mass.is_zero() {
                    map.insert(pair(slot), mass);
                }
            }
            Lambda {
                weight: rat(1, 4),
                settings: Settings::Joint(map),
                outputs: outputs[lam],
            }
        })
        .collect();
    LhvmStrategy::new(1, lambdas)
}

/// The observable setting marginal `Σ_λ q(λ) q(x,y|λ)` of a single-run
/// strategy, indexed by pair slot (x,y) in (00, 01, 10, 11) order.
pub fn setting_marginal(strategy: &LhvmStrategy) -> Result<[Rat; 4]> {
    if strategy.n != 1 {
        return Err(Error::Invalid("marginal is defined for single-run strategies".into()));
    }
    let mut out = [Rat::zero(), Rat::zero(), Rat::zero(), Rat::zero()];
    for l in strategy.lambdas() {
        let add = |out: &mut [Rat; 4], x: &BitString, y: &BitString, q: Rat| {
            let slot = (x.bit(0) * 2 + y.bit(0)) as usize;
            out[slot] += q;
        };
        match &l.settings {
            Settings::Joint(map) => {
                for ((x, y), q) in map {
                    add(&mut out, x, y, q * &l.weight);
                }
            }
            Settings::Product { x, y } => {
                for (xs, px) in x {
                    for (ys, py) in y {
                        add(&mut out, xs, ys, px * py * &l.weight);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `P = (max_{x⃗, y⃗, λ} q(x⃗, y⃗ | λ))^(1/n)`; lies in [1/4, 1].
pub fn randomness_measure(strategy: &LhvmStrategy) -> f64 {
    randomness_measure_exact(strategy).1
}

/// The exact maximum joint mass together with its n-th root.
pub fn randomness_measure_exact(strategy: &LhvmStrategy) -> (Rat, f64) {
    let max = strategy
        .lambdas()
        .iter()
        .map(|l| l.settings.max_joint_mass())
        .max()
        .expect("nonempty");
    let p = rat_to_f64(&max).powf(1.0 / strategy.n as f64);
    (max, p)
}

/// Constant-lambda strategy with uniform product settings over
/// `S_X x S_Y` and all-zero outputs. Its CHSH value is
/// `4 - 8 * constraint_density(S_X, S_Y)` and its randomness measure
/// `(|S_X| |S_Y|)^(-1/n)`.
pub fn strategy_from_sets(sx: &SettingSet, sy: &SettingSet) -> Result<LhvmStrategy> {
    if sx.is_empty() || sy.is_empty() {
        return Err(Error::Invalid("strategy needs nonempty sets".into()));
    }
    if sx.n() != sy.n() {
        return Err(Error::Invalid("mismatched n".into()));
    }
    let fill = |s: &SettingSet| -> BTreeMap<BitString, Rat> {
        let w = Rat::new(BigInt::one(), BigInt::from(s.size()));
        s.members().iter().map(|m| (m.clone(), w.clone())).collect()
    };
    LhvmStrategy::new(
        sx.n(),
        vec![Lambda {
            weight: Rat::one(),
            settings: Settings::Product {
                x: fill(sx),
                y: fill(sy),
            },
            outputs: OutputFunctions::ZERO,
        }],
    )
}

/// Convenience check used by tests: `S(strategy_from_sets) = 4 - 8 rho`.
pub fn chsh_from_sets_exact(sx: &SettingSet, sy: &SettingSet) -> Result<Rat> {
    let rho = constraint_density_sets(sx, sy)?;
    Ok(Rat::from_integer(BigInt::from(4)) - rho * BigInt::from(8))
}

/// Monte Carlo estimate of a strategy's CHSH value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub runs: u64,
    pub empirical_s: f64,
    pub standard_error: f64,
    /// Plug-in randomness estimate: `(max_λ max_{x⃗,y⃗} count(x⃗,y⃗,λ)/count(λ))^(1/n)`.
    pub empirical_p: f64,
    pub seed: u64,
}

/// Sampling-ready view of one lambda.
struct CompiledLambda {
    /// Per-pair tables: cumulative probability, per-test statistic
    /// `(4/n) Σ_i (-1)^(a⊕b+x_i y_i)`, and a (x index, y index) key for
    /// occurrence counting.
    joint: Option<(Vec<f64>, Vec<f64>, Vec<(u32, u32)>)>,
    product: Option<ProductTables>,
}

struct ProductTables {
    x_cdf: Vec<f64>,
    y_cdf: Vec<f64>,
    x_strings: Vec<BitString>,
    y_strings: Vec<BitString>,
    sign: [[i64; 2]; 2],
}

fn cdf(masses: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    masses
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

fn pick(cdf: &[f64], u: f64) -> usize {
    // Last index is taken unconditionally, guarding float drift at the top.
    match cdf[..cdf.len() - 1].iter().position(|&edge| u < edge) {
        Some(i) => i,
        None => cdf.len() - 1,
    }
}

fn compile(strategy: &LhvmStrategy) -> (Vec<f64>, Vec<CompiledLambda>) {
    let n = strategy.n;
    let lambda_cdf = cdf(strategy.lambdas().iter().map(|l| rat_to_f64(&l.weight)));
    let compiled = strategy
        .lambdas()
        .iter()
        .map(|l| {
            let sign = |x: u8, y: u8| l.outputs.sign(x, y);
            match &l.settings {
                Settings::Joint(map) => {
                    let stat = |x: &BitString, y: &BitString| -> f64 {
                        let total: i64 = (0..n).map(|i| sign(x.bit(i), y.bit(i))).sum();
                        4.0 * total as f64 / n as f64
                    };
                    let cdf_v = cdf(map.values().map(rat_to_f64));
                    let stats: Vec<f64> = map.keys().map(|(x, y)| stat(x, y)).collect();
                    let keys: Vec<(u32, u32)> =
                        (0..map.len() as u32).map(|i| (i, 0)).collect();
                    CompiledLambda {
                        joint: Some((cdf_v, stats, keys)),
                        product: None,
                    }
                }
                Settings::Product { x, y } => {
                    let x_cdf = cdf(x.values().map(rat_to_f64));
                    let y_cdf = cdf(y.values().map(rat_to_f64));
                    let tables = ProductTables {
                        x_cdf,
                        y_cdf,
                        x_strings: x.keys().cloned().collect(),
                        y_strings: y.keys().cloned().collect(),
                        sign: [
                            [sign(0, 0), sign(0, 1)],
                            [sign(1, 0), sign(1, 1)],
                        ],
                    };
                    CompiledLambda {
                        joint: None,
                        product: Some(tables),
                    }
                }
            }
        })
        .collect();
    (lambda_cdf, compiled)
}

const SHARD_TESTS: u64 = 1 << 16;

struct ShardOut {
    sum: f64,
    sumsq: f64,
    counts: HashMap<(u32, u32, u32), u64>,
}

fn run_shard(
    lambda_cdf: &[f64],
    compiled: &[CompiledLambda],
    n: usize,
    tests: u64,
    seed: u64,
) -> ShardOut {
    let mut rng = SplitMix64::new(seed);
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut counts: HashMap<(u32, u32, u32), u64> = HashMap::new();
    for _ in 0..tests {
        let lam = pick(lambda_cdf, rng.next_f64());
        let cl = &compiled[lam];
        let (s, key) = if let Some((cdf_v, stats, keys)) = &cl.joint {
            let i = pick(cdf_v, rng.next_f64());
            (stats[i], (lam as u32, keys[i].0, keys[i].1))
        } else {
            let t = cl.product.as_ref().expect("joint or product");
            let xi = pick(&t.x_cdf, rng.next_f64());
            let yi = pick(&t.y_cdf, rng.next_f64());
            let xs = &t.x_strings[xi];
            let ys = &t.y_strings[yi];
            let total: i64 = (0..n)
                .map(|i| t.sign[xs.bit(i) as usize][ys.bit(i) as usize])
                .sum();
            (
                4.0 * total as f64 / n as f64,
                (lam as u32, xi as u32, yi as u32),
            )
        };
        sum += s;
        sumsq += s * s;
        *counts.entry(key).or_insert(0) += 1;
    }
    ShardOut { sum, sumsq, counts }
}

/// Samples `tests` independent n-run tests (λ, then settings, then the
/// deterministic outputs) and reports the plug-in CHSH estimate with its
/// standard error.
///
/// The shard plan is fixed: shards of 2^16 tests, shard `i` seeded with
/// `derive_seed(seed, i)`, merged in shard order. The same plan runs
/// regardless of worker count, so reports are bit-identical for any
/// parallelism level and across platforms.
pub fn simulate_runs(
    strategy: &LhvmStrategy,
    tests: u64,
    seed: u64,
    workers: usize,
) -> Result<SimulationReport> {
    if tests == 0 {
        return Err(Error::Invalid("tests must be >= 1".into()));
    }
    let (lambda_cdf, compiled) = compile(strategy);
    let n = strategy.n;
    let n_shards = tests.div_ceil(SHARD_TESTS) as usize;
    let outs = crate::pool::run_indexed(n_shards, workers, |i| {
        let lo = i as u64 * SHARD_TESTS;
        let count = SHARD_TESTS.min(tests - lo);
        run_shard(&lambda_cdf, &compiled, n, count, derive_seed(seed, i as u64))
    });

    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut counts: HashMap<(u32, u32, u32), u64> = HashMap::new();
    for o in outs {
        sum += o.sum;
        sumsq += o.sumsq;
        for (k, v) in o.counts {
            *counts.entry(k).or_insert(0) += v;
        }
    }
    let t = tests as f64;
    let empirical_s = sum / t;
    let standard_error = if tests > 1 {
        let var = ((sumsq - sum * sum / t) / (t - 1.0)).max(0.0);
        (var / t).sqrt()
    } else {
        0.0
    };

    let mut lambda_totals: HashMap<u32, u64> = HashMap::new();
    for ((lam, _, _), v) in &counts {
        *lambda_totals.entry(*lam).or_insert(0) += v;
    }
    let mut max_share = 0.0f64;
    for ((lam, _, _), v) in &counts {
        let share = *v as f64 / lambda_totals[lam] as f64;
        max_share = max_share.max(share);
    }
    let empirical_p = max_share.powf(1.0 / n as f64);

    Ok(SimulationReport {
        runs: tests,
        empirical_s,
        standard_error,
        empirical_p,
        seed,
    })
}

// ---------------------------------------------------------------------------
// Strategy file format (JSON)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct StrategyDoc {
    n: usize,
    lambdas: Vec<LambdaDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LambdaDoc {
    weight: String,
    settings: SettingsDoc,
    outputs: OutputsDoc,
}

#[derive(Debug, Serialize, Deserialize)]
struct SettingsDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    joint: Option<BTreeMap<String, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    product: Option<ProductDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProductDoc {
    x: BTreeMap<String, String>,
    y: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct OutputsDoc {
    a0: u8,
    a1: u8,
    b0: u8,
    b1: u8,
}

impl LhvmStrategy {
    /// Parses the strategy JSON document: fields `n` and `lambdas`, each
    /// lambda carrying `weight`, `settings` (either `joint` with
    /// `"<xbits>,<ybits>"` keys or `product` with `x`/`y` maps) and
    /// `outputs`. Probabilities are decimal strings or `"p/q"` rationals.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: StrategyDoc =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("strategy JSON: {e}")))?;
        let lambdas: Result<Vec<Lambda>> = doc
            .lambdas
            .iter()
            .map(|l| {
                let weight = parse_rat(&l.weight)?;
                let outputs = OutputFunctions::new(
                    l.outputs.a0,
                    l.outputs.a1,
                    l.outputs.b0,
                    l.outputs.b1,
                )?;
                let settings = match (&l.settings.joint, &l.settings.product) {
                    (Some(joint), None) => {
                        let mut map = BTreeMap::new();
                        for (key, prob) in joint {
                            let (xs, ys) = key.split_once(',').ok_or_else(|| {
                                Error::Parse(format!("joint key {key:?} is not \"<xbits>,<ybits>\""))
                            })?;
                            map.insert(
                                (BitString::parse(xs.trim())?, BitString::parse(ys.trim())?),
                                parse_rat(prob)?,
                            );
                        }
                        Settings::Joint(map)
                    }
                    (None, Some(product)) => {
                        let parse_side = |side: &BTreeMap<String, String>| -> Result<BTreeMap<BitString, Rat>> {
                            side.iter()
                                .map(|(k, v)| Ok((BitString::parse(k)?, parse_rat(v)?)))
                                .collect()
                        };
                        Settings::Product {
                            x: parse_side(&product.x)?,
                            y: parse_side(&product.y)?,
                        }
                    }
                    _ => {
                        return Err(Error::Parse(
                            "settings must have exactly one of `joint` or `product`".into(),
                        ))
                    }
                };
                Ok(Lambda {
                    weight,
                    settings,
                    outputs,
                })
            })
            .collect();
        Self::new(doc.n, lambdas?)
    }

    pub fn to_json(&self) -> String {
        let doc = StrategyDoc {
            n: self.n,
            lambdas: self
                .lambdas
                .iter()
                .map(|l| LambdaDoc {
                    weight: format_rat(&l.weight),
                    settings: match &l.settings {
                        Settings::Joint(map) => SettingsDoc {
                            joint: Some(
                                map.iter()
                                    .map(|((x, y), p)| (format!("{x},{y}"), format_rat(p)))
                                    .collect(),
                            ),
                            product: None,
                        },
                        Settings::Product { x, y } => SettingsDoc {
                            joint: None,
                            product: Some(ProductDoc {
                                x: x.iter().map(|(k, v)| (k.to_string(), format_rat(v))).collect(),
                                y: y.iter().map(|(k, v)| (k.to_string(), format_rat(v))).collect(),
                            }),
                        },
                    },
                    outputs: OutputsDoc {
                        a0: l.outputs.a0,
                        a1: l.outputs.a1,
                        b0: l.outputs.b0,
                        b1: l.outputs.b1,
                    },
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }
}

/// The single-run strategy that fakes the quantum value: the four-lambda
/// lift of the product `p_X(1) = 2c`, `p_Y` uniform, so `q*(1,1) = c` and
/// `S = 4 - 8c`.
pub fn quantum_faking_strategy(c: &Rat) -> Result<LhvmStrategy> {
    if c.is_negative() || c > &rat(1, 2) {
        return Err(Error::Domain(format!("c must be in [0, 1/2], got {c}")));
    }
    let two_c = c * BigInt::from(2);
    let q_star = [
        (Rat::one() - &two_c) * rat(1, 2),
        (Rat::one() - &two_c) * rat(1, 2),
        &two_c * rat(1, 2),
        &two_c * rat(1, 2),
    ];
    uniform_marginal_lift(&q_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::c_q_rational;
    use crate::profile::threshold_set;

    fn uniform_single_run(outputs: OutputFunctions) -> LhvmStrategy {
        let mut map = BTreeMap::new();
        for x in 0..2u8 {
            for y in 0..2u8 {
                map.insert(
                    (BitString::new(vec![x]).unwrap(), BitString::new(vec![y]).unwrap()),
                    rat(1, 4),
                );
            }
        }
        LhvmStrategy::new(
            1,
            vec![Lambda {
                weight: Rat::one(),
                settings: Settings::Joint(map),
                outputs,
            }],
        )
        .unwrap()
    }

    #[test]
    fn chsh_examples() {
        let s = uniform_single_run(OutputFunctions::ZERO);
        assert_eq!(chsh_value_exact(&s), Rat::from_integer(BigInt::from(2)));

        // q(1,1) = c_Q, remainder spread arbitrarily: S = 4 - 8 c_Q.
        let cq = c_q_rational();
        let mut map = BTreeMap::new();
        map.insert(
            (BitString::parse("1").unwrap(), BitString::parse("1").unwrap()),
            cq.clone(),
        );
        map.insert(
            (BitString::parse("0").unwrap(), BitString::parse("0").unwrap()),
            Rat::one() - &cq,
        );
        let s = LhvmStrategy::new(
            1,
            vec![Lambda {
                weight: Rat::one(),
                settings: Settings::Joint(map),
                outputs: OutputFunctions::ZERO,
            }],
        )
        .unwrap();
        let expect = Rat::from_integer(BigInt::from(4)) - &cq * BigInt::from(8);
        assert_eq!(chsh_value_exact(&s), expect);
        let pc = crate::math::PhysicsConstants::new();
        assert!((chsh_value(&s) - pc.s_q).abs() < 1e-12);

        // Point mass on (0,0): the zero-randomness extreme.
        let mut map = BTreeMap::new();
        map.insert(
            (BitString::parse("0").unwrap(), BitString::parse("0").unwrap()),
            Rat::one(),
        );
        let s = LhvmStrategy::new(
            1,
            vec![Lambda {
                weight: Rat::one(),
                settings: Settings::Joint(map),
                outputs: OutputFunctions::ZERO,
            }],
        )
        .unwrap();
        assert_eq!(chsh_value(&s), 4.0);
    }

    #[test]
    fn strategy_validation() {
        let mut short = BTreeMap::new();
        short.insert(
            (BitString::parse("0").unwrap(), BitString::parse("0").unwrap()),
            rat(1, 2),
        );
        let bad = LhvmStrategy::new(
            1,
            vec![Lambda {
                weight: Rat::one(),
                settings: Settings::Joint(short),
                outputs: OutputFunctions::ZERO,
            }],
        );
        assert!(bad.is_err());
        assert!(OutputFunctions::new(0, 2, 0, 0).is_err());
    }

    #[test]
    fn output_table_rows() {
        let rows = output_tables();
        assert_eq!(rows.len(), 8);
        assert_eq!(rows[0].signs, [1, 1, 1, -1]);
        assert_eq!(rows[6].signs, [1, -1, -1, -1]);
        let one_minus = rows
            .iter()
            .filter(|r| r.signs.iter().filter(|&&s| s < 0).count() == 1)
            .count();
        assert_eq!(one_minus, 4);
        for r in &rows[..4] {
            assert_eq!(r.signs.iter().filter(|&&s| s < 0).count(), 1);
        }
        for r in &rows[4..] {
            assert!(r.signs.iter().filter(|&&s| s < 0).count() >= 3);
        }
    }

    #[test]
    fn lift_examples() {
        // Uniform q*: every lambda uniform, S = 2.
        let u = [rat(1, 4), rat(1, 4), rat(1, 4), rat(1, 4)];
        let s = uniform_marginal_lift(&u).unwrap();
        assert_eq!(chsh_value_exact(&s), Rat::from_integer(BigInt::from(2)));
        assert_eq!(setting_marginal(&s).unwrap(), u);
        assert!((randomness_measure(&s) - 0.25).abs() < 1e-15);

        // Product (p(1) = 2 c_Q) x uniform: marginal 1/4, P = (1-2c)/2, S = S_Q.
        let s = quantum_faking_strategy(&c_q_rational()).unwrap();
        assert_eq!(
            setting_marginal(&s).unwrap(),
            [rat(1, 4), rat(1, 4), rat(1, 4), rat(1, 4)]
        );
        let pc = crate::math::PhysicsConstants::new();
        assert!((chsh_value(&s) - pc.s_q).abs() < 1e-12);
        let (max, p) = randomness_measure_exact(&s);
        assert_eq!(max, (Rat::one() - c_q_rational() * BigInt::from(2)) * rat(1, 2));
        assert!((p - 0.35355339059327373).abs() < 1e-12);

        // Point mass q* on (0,0): marginal 1/4, P = 1, S = 4.
        let point = [Rat::one(), Rat::zero(), Rat::zero(), Rat::zero()];
        let s = uniform_marginal_lift(&point).unwrap();
        assert_eq!(
            setting_marginal(&s).unwrap(),
            [rat(1, 4), rat(1, 4), rat(1, 4), rat(1, 4)]
        );
        assert_eq!(randomness_measure(&s), 1.0);
        assert_eq!(chsh_value(&s), 4.0);

        let bad = [rat(1, 2), rat(1, 2), rat(1, 2), rat(1, 2)];
        assert!(uniform_marginal_lift(&bad).is_err());
    }

    #[test]
    fn randomness_examples() {
        let full = SettingSet::full(2).unwrap();
        let s = strategy_from_sets(&full, &full).unwrap();
        assert!((randomness_measure(&s) - 0.25).abs() < 1e-15);

        let point = SettingSet::from_members(2, vec![BitString::parse("10").unwrap()]).unwrap();
        let s = strategy_from_sets(&point, &point).unwrap();
        assert_eq!(randomness_measure(&s), 1.0);

        let a83 = threshold_set(8, 3).unwrap();
        let s = strategy_from_sets(&a83, &a83).unwrap();
        assert!((randomness_measure(&s) - 0.32201734343516736).abs() < 1e-12);
    }

    #[test]
    fn sets_strategy_examples() {
        let full = SettingSet::full(3).unwrap();
        let s = strategy_from_sets(&full, &full).unwrap();
        assert_eq!(chsh_value_exact(&s), Rat::from_integer(BigInt::from(2)));

        let zero = SettingSet::from_members(3, vec![BitString::zeros(3)]).unwrap();
        let s = strategy_from_sets(&zero, &zero).unwrap();
        assert_eq!(chsh_value(&s), 4.0);

        let a83 = threshold_set(8, 3).unwrap();
        let s = strategy_from_sets(&a83, &a83).unwrap();
        let expect = chsh_from_sets_exact(&a83, &a83).unwrap();
        assert_eq!(chsh_value_exact(&s), expect);
        assert_eq!(expect, rat(27868, 8649));
        assert!((chsh_value(&s) - 3.2221066019192968).abs() < 1e-12);
        let pc = crate::math::PhysicsConstants::new();
        assert!(chsh_value(&s) >= pc.s_q);
    }

    #[test]
    fn simulation_is_deterministic_and_sane() {
        let s = quantum_faking_strategy(&c_q_rational()).unwrap();
        let a = simulate_runs(&s, 200_000, 7, 1).unwrap();
        let b = simulate_runs(&s, 200_000, 7, 4).unwrap();
        assert_eq!(a, b);
        let pc = crate::math::PhysicsConstants::new();
        assert!((a.empirical_s - pc.s_q).abs() <= 3.0 * a.standard_error);

        let c = simulate_runs(&s, 200_000, 8, 1).unwrap();
        assert_ne!(a.empirical_s, c.empirical_s);
        assert!(simulate_runs(&s, 0, 7, 1).is_err());
        assert!(a.empirical_s.abs() <= 4.0);
        // Constant observable marginal 1/4 per pair, so the per-lambda share
        // estimates the max conditional mass (1-2c)/2.
        assert!((a.empirical_p - 0.3535).abs() < 0.01);
    }

    #[test]
    fn json_round_trip() {
        let a83 = threshold_set(4, 1).unwrap();
        let s = strategy_from_sets(&a83, &a83).unwrap();
        let text = s.to_json();
        let back = LhvmStrategy::from_json(&text).unwrap();
        assert_eq!(back, s);

        let lifted = quantum_faking_strategy(&rat(1, 8)).unwrap();
        let back = LhvmStrategy::from_json(&lifted.to_json()).unwrap();
        assert_eq!(back, lifted);

        assert!(LhvmStrategy::from_json("{").is_err());
        assert!(LhvmStrategy::from_json("{\"n\":1,\"lambdas\":[]}").is_err());
    }
}
