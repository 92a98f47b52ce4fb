//! Scalar kernel: binary entropy, the constrained two-entropy maximum
//! `f(t) = max_{2t<=x<=1/2} h_b(x) + h_b(t/x)`, its concave envelope `g`,
//! and the closed-form asymptotic bounds.

use crate::error::{Error, Result};
use crate::rational::{parse_rat, Rat};

/// 15 significant digits of `(4 - 2*sqrt(2))/8`, the constraint level of the
/// quantum CHSH maximum. This literal is the crate-wide default whenever an
/// exact rational stand-in for the irrational constant is needed, so that
/// every feasibility comparison is reproducible.
pub const C_Q_DECIMAL: &str = "0.146446609406726";

/// The quantum CHSH maximum `S_Q = 2*sqrt(2)` and the derived constraint
/// level `c_Q = (4 - S_Q)/8`.
#[derive(Debug, Clone, Copy)]
pub struct PhysicsConstants {
    pub s_q: f64,
    pub c_q: f64,
}

impl PhysicsConstants {
    pub fn new() -> Self {
        let s_q = 8f64.sqrt();
        Self {
            s_q,
            c_q: (4.0 - s_q) / 8.0,
        }
    }
}

impl Default for PhysicsConstants {
    fn default() -> Self {
        Self::new()
    }
}

/// The default exact-rational constraint level: `C_Q_DECIMAL` parsed.
pub fn c_q_rational() -> Rat {
    parse_rat(C_Q_DECIMAL).expect("literal parses")
}

/// Binary entropy `h_b(t) = -t log2 t - (1-t) log2 (1-t)`, with the limit
/// convention `h_b(0) = h_b(1) = 0`.
pub fn binary_entropy(t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("binary_entropy needs t in [0,1], got {t}")));
    }
    if t == 0.0 || t == 1.0 {
        return Ok(0.0);
    }
    Ok(-t * t.log2() - (1.0 - t) * (1.0 - t).log2())
}

fn hb(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        -t * t.log2() - (1.0 - t) * (1.0 - t).log2()
    }
}

/// Value and maximizer of the inner maximization of [`f_max`].
#[derive(Debug, Clone, Copy)]
pub struct FMax {
    pub value: f64,
    pub argmax: f64,
}

const SCAN_POINTS: usize = 1024;

/// `f(t) = max_{x in [max(2t, 0+), 1/2]} h_b(x) + h_b(t/x)` for
/// `t in [0, 0.25]`, with `h_b(0/x) := 0` so that `f(0) = 1`.
///
/// A 1024-point scan brackets the maximum and ternary search refines the
/// bracket to `|dx| <= 1e-12`. For `t >= 0.0625` the result agrees with the
/// closed form `2 h_b(sqrt(t))` to well under 1e-9; below 0.0625 unimodality
/// is unproven, which is what the dense scan is for.
pub fn f_max(t: f64) -> Result<FMax> {
    if !(0.0..=0.25).contains(&t) {
        return Err(Error::Domain(format!("f_max needs t in [0, 0.25], got {t}")));
    }
    let objective = |x: f64| hb(x) + hb(t / x);
    let lo = (2.0 * t).max(1e-12);
    let hi = 0.5;
    if lo >= hi {
        // t = 0.25: the feasible interval collapses to {1/2}.
        return Ok(FMax {
            value: objective(0.5),
            argmax: 0.5,
        });
    }
    let step = (hi - lo) / SCAN_POINTS as f64;
    let mut best_i = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    let mut best_x = lo;
    for i in 0..=SCAN_POINTS {
        let x = if i == SCAN_POINTS { hi } else { lo + step * i as f64 };
        let v = objective(x);
        if v > best_v {
            best_v = v;
            best_i = i;
            best_x = x;
        }
    }
    let mut a = if best_i == 0 { lo } else { lo + step * (best_i - 1) as f64 };
    let mut b = if best_i >= SCAN_POINTS { hi } else { lo + step * (best_i + 1) as f64 };
    for _ in 0..200 {
        if b - a <= 1e-12 {
            break;
        }
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if objective(m1) < objective(m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    let xr = 0.5 * (a + b);
    let vr = objective(xr);
    if vr >= best_v {
        Ok(FMax { value: vr, argmax: xr })
    } else {
        Ok(FMax { value: best_v, argmax: best_x })
    }
}

/// The two pieces of the concave envelope: `f0(t) = 2 h_b(sqrt(t))` and its
/// tangent line `f1` at `t_join = 0.14`.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopePieces {
    pub t_join: f64,
    pub f1_slope: f64,
    pub f1_intercept: f64,
}

impl EnvelopePieces {
    pub fn new() -> Self {
        let t_join = 0.14f64;
        let x0 = t_join.sqrt();
        // d/dt 2 h_b(sqrt t) = h_b'(sqrt t)/sqrt t with h_b'(x) = log2((1-x)/x).
        let f1_slope = ((1.0 - x0) / x0).log2() / x0;
        let f1_intercept = 2.0 * hb(x0) - f1_slope * t_join;
        Self {
            t_join,
            f1_slope,
            f1_intercept,
        }
    }

    pub fn f0_at(&self, t: f64) -> Result<f64> {
        if !(0.0..=0.25).contains(&t) {
            return Err(Error::Domain(format!("f0 needs t in [0, 0.25], got {t}")));
        }
        Ok(2.0 * hb(t.sqrt()))
    }

    pub fn f1_at(&self, t: f64) -> f64 {
        self.f1_intercept + self.f1_slope * t
    }

    /// `g(t) = f1(t)` on `[0, 0.14]`, `f0(t)` on `(0.14, 0.25]`.
    pub fn g_at(&self, t: f64) -> Result<f64> {
        if !(0.0..=0.25).contains(&t) {
            return Err(Error::Domain(format!("g needs t in [0, 0.25], got {t}")));
        }
        if t <= self.t_join {
            Ok(self.f1_at(t))
        } else {
            self.f0_at(t)
        }
    }
}

impl Default for EnvelopePieces {
    fn default() -> Self {
        Self::new()
    }
}

/// Concave upper envelope `g` of `f_max` on `[0, 0.25]`.
pub fn concave_envelope_g(t: f64) -> Result<f64> {
    EnvelopePieces::new().g_at(t)
}

/// Asymptotic optima of the two setting-correlation models at constraint
/// level `c`.
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticBounds {
    /// Independent parties: `4^(-h_b(sqrt(c)))`.
    pub independent: f64,
    /// Correlated parties: `3^(-(S+4)/8) * 2^(-h_b((4-S)/8))` with `S = 4 - 8c`.
    pub correlated: f64,
}

pub fn asymptotic_bounds(c: f64) -> Result<AsymptoticBounds> {
    if !(c > 0.0 && c <= 0.25) {
        return Err(Error::Domain(format!(
            "asymptotic_bounds needs c in (0, 0.25], got {c}"
        )));
    }
    let independent = (-2.0 * hb(c.sqrt())).exp2();
    let s = 4.0 - 8.0 * c;
    let correlated = 3f64.powf(-(s + 4.0) / 8.0) * (-hb((4.0 - s) / 8.0)).exp2();
    Ok(AsymptoticBounds {
        independent,
        correlated,
    })
}

/// Worst midpoint-concavity margin of `f_max` over all pairs of a
/// `steps`-point grid on `[lo, hi]`: the minimum of
/// `f((t1+t2)/2) - (f(t1)+f(t2))/2`. Nonnegative (up to roundoff) means no
/// concavity violation was observed.
pub fn midpoint_concavity_margin(lo: f64, hi: f64, steps: usize) -> Result<f64> {
    if !(0.0..=0.25).contains(&lo) || !(0.0..=0.25).contains(&hi) || lo >= hi || steps < 2 {
        return Err(Error::Domain(format!(
            "midpoint probe needs 0 <= lo < hi <= 0.25 and steps >= 2, got [{lo}, {hi}] x {steps}"
        )));
    }
    let grid: Vec<f64> = (0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&t| f_max(t).unwrap().value).collect();
    let mut worst = f64::INFINITY;
    for i in 0..steps {
        for j in (i + 1)..steps {
            let mid = 0.5 * (grid[i] + grid[j]);
            let fm = f_max(mid)?.value;
            worst = worst.min(fm - 0.5 * (values[i] + values[j]));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn physics_constants_are_derived() {
        let pc = PhysicsConstants::new();
        assert!((pc.s_q - 2.0 * 2f64.sqrt()).abs() <= 1e-15 * pc.s_q);
        assert!(pc.c_q > 0.1464 && pc.c_q < 0.1465);
        let lit = crate::rational::rat_to_f64(&c_q_rational());
        assert!((lit - pc.c_q).abs() < 1e-15);
    }

    #[test]
    fn entropy_fixed_points() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert!((binary_entropy(0.25).unwrap() - 0.8112781244591328).abs() < 1e-15);
        // h_b at sqrt(c_Q); doubling and negating twice gives the headline
        // bound 0.26428..., so this digit string is pinned hard.
        let pc = PhysicsConstants::new();
        let h = binary_entropy(pc.c_q.sqrt()).unwrap();
        assert!((h - 0.959915219670087).abs() < 1e-12);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn f_max_collapsed_interval() {
        let r = f_max(0.25).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.argmax, 0.5);
    }

    #[test]
    fn f_max_matches_closed_form_above_sixteenth() {
        let r = f_max(0.0625).unwrap();
        assert!((r.value - 1.6225562489182657).abs() < 1e-9);
        assert!((r.argmax - 0.25).abs() < 1e-6);

        let pc = PhysicsConstants::new();
        let r = f_max(pc.c_q).unwrap();
        let closed = 2.0 * binary_entropy(pc.c_q.sqrt()).unwrap();
        assert!((r.value - closed).abs() < 1e-9);
        assert!((r.argmax - pc.c_q.sqrt()).abs() < 1e-6);

        let r = f_max(0.1).unwrap();
        assert!((r.value - 1.8004640452691347).abs() < 1e-9);
        assert!((r.argmax - 0.1f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn f_max_at_zero_is_one() {
        let r = f_max(0.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        assert!((r.argmax - 0.5).abs() < 1e-6);
        assert!(f_max(-0.01).is_err());
        assert!(f_max(0.26).is_err());
    }

    #[test]
    fn envelope_values() {
        let env = EnvelopePieces::new();
        // Touch at the join is exact by construction.
        assert!((env.f1_at(env.t_join) - env.f0_at(env.t_join).unwrap()).abs() < 1e-12);
        assert!((concave_envelope_g(0.0).unwrap() - 1.6299644920547587).abs() < 1e-12);
        assert_eq!(concave_envelope_g(0.25).unwrap(), 2.0);
        assert!((concave_envelope_g(0.14).unwrap() - 1.907634076616165).abs() < 1e-12);
        assert!(concave_envelope_g(0.3).is_err());
    }

    #[test]
    fn envelope_slope_against_finite_differences() {
        // Independent route: Richardson-extrapolated central differences of f0.
        let env = EnvelopePieces::new();
        let f0 = |t: f64| 2.0 * hb(t.sqrt());
        let d = |h: f64| (f0(env.t_join + h) - f0(env.t_join - h)) / (2.0 * h);
        let fine = d(1e-4);
        let coarse = d(2e-4);
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        assert!((extrapolated - env.f1_slope).abs() < 1e-7);
    }

    #[test]
    fn envelope_is_tangent_line_dominating_f0() {
        // A line touching a concave differentiable function from above is
        // its tangent; check touch + dominance on a dense grid.
        let env = EnvelopePieces::new();
        for i in 0..=2000 {
            let t = 0.25 * i as f64 / 2000.0;
            let gap = env.f1_at(t) - env.f0_at(t).unwrap();
            assert!(gap >= -1e-12, "f1 dips below f0 at t={t}: {gap}");
        }
    }

    #[test]
    fn asymptotic_bounds_known_values() {
        let pc = PhysicsConstants::new();
        let b = asymptotic_bounds(pc.c_q).unwrap();
        assert!((b.independent - 0.26428556992847696).abs() < 1e-12);
        assert!((b.correlated - 0.2581486300058938).abs() < 1e-12);
        let b = asymptotic_bounds(0.25).unwrap();
        assert!((b.independent - 0.25).abs() < 1e-15);
        assert!(asymptotic_bounds(0.0).is_err());
        assert!(asymptotic_bounds(0.26).is_err());
    }

    #[test]
    fn table_one_closed_forms() {
        let pc = PhysicsConstants::new();
        assert!(((pc.s_q + 4.0) / 24.0 - 0.2845177968644246).abs() < 1e-15);
        assert!((pc.s_q / 8.0 - 0.3535533905932738).abs() < 1e-15);
    }
}
