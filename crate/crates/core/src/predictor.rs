//! Closed-form dimension and hitting-regime formulas.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::SnowflakeExponents;
use crate::math;
use crate::radii::{self, ConditionC, RadiusKind, RadiusSequence};

/// Slack for the strict inequalities of the regime tests.
pub const BOUNDARY_EPS: f64 = 1e-12;

/// Bucket depth used when condition (C) has to be read off the buckets.
pub const CONDITION_C_KMAX: u32 = 24;

/// Partial sums `S_k = sum_{i <= k} 1/H_i` for `k = 0..=d`.
fn reciprocal_prefix(h: &SnowflakeExponents) -> Vec<f64> {
    let mut out = vec![0.0];
    for hi in h.values() {
        out.push(out.last().unwrap() + 1.0 / hi);
    }
    out
}

/// Exponent `e` with `Φ^s = r^e` for rectangles of sides `r^{1/H_i}`.
pub fn svf_exponent(h: &SnowflakeExponents, s: f64) -> f64 {
    let d = h.dim();
    let s = s.clamp(0.0, d as f64);
    let whole = (math::floor(s) as usize).min(d);
    let frac = s - whole as f64;
    let prefix = reciprocal_prefix(h);
    if whole == d {
        prefix[d]
    } else {
        prefix[whole] + frac / h.values()[whole]
    }
}

/// Singular value function of the rectangle with sides `r^{1/H_i}`.
pub fn svf_phi(h: &SnowflakeExponents, r: f64, s: f64) -> f64 {
    math::powf(r, svf_exponent(h, s))
}

/// `s_0` as a function of the uncapped exponent `α`, capped at `d`.
pub fn s0_from_alpha(h: &SnowflakeExponents, alpha: f64) -> f64 {
    let d = h.dim();
    let prefix = reciprocal_prefix(h);
    let k0 = (0..=d).rev().find(|&k| prefix[k] <= alpha).unwrap_or(0);
    if k0 == d {
        return d as f64;
    }
    let s0 = k0 as f64 + h.values()[k0] * (alpha - prefix[k0]);
    s0.min(d as f64)
}

/// Dimension `s_0` of the covering set by axis-parallel rectangles with
/// sides `r_n^{1/H_i}`.
pub fn s0_rect(h: &SnowflakeExponents, seq: &RadiusSequence) -> Result<f64> {
    let alpha = seq.limsup_exponent()?.value;
    Ok(s0_from_alpha(h, alpha))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCheckConfig {
    /// Partial-sum checkpoints; consecutive pairs bound the summed blocks.
    pub checkpoints: Vec<u64>,
    pub iterations: u32,
}

impl Default for SeriesCheckConfig {
    fn default() -> Self {
        Self {
            checkpoints: vec![1_000, 10_000, 100_000, 1_000_000],
            iterations: 40,
        }
    }
}

/// Growth exponent of the blocks of `sum_n Φ^s(A_n)`: the least-squares
/// slope of log block sums against log block end. Positive means the
/// series diverges.
pub fn series_growth(
    h: &SnowflakeExponents,
    seq: &RadiusSequence,
    s: f64,
    checkpoints: &[u64],
) -> Result<f64> {
    if checkpoints.len() < 3 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "checkpoints",
            "need at least three increasing checkpoints",
        ));
    }
    let e = svf_exponent(h, s);
    let mut points = Vec::new();
    for w in checkpoints.windows(2) {
        let mut sum = crate::stats::CompensatedSum::new();
        for n in w[0] + 1..=w[1] {
            let r = seq.radius(n).ok_or_else(|| {
                Error::InsufficientData(format!("radius r_{n} is not available"))
            })?;
            sum.add(math::powf(r, e));
        }
        points.push((math::log2(w[1] as f64), math::log2(sum.value())));
    }
    let fit = crate::stats::least_squares(&points)
        .ok_or_else(|| Error::InsufficientData("degenerate checkpoints".into()))?;
    Ok(fit.slope)
}

/// Convergence threshold of `sum_n Φ^s(A_n)` located by bisection on the
/// sign of the block growth exponent.
pub fn s0_series_crosscheck(
    h: &SnowflakeExponents,
    seq: &RadiusSequence,
    cfg: &SeriesCheckConfig,
) -> Result<f64> {
    if !matches!(seq.kind(), RadiusKind::PowerLaw { .. }) {
        return Err(Error::invalid("seq", "series cross-check needs a power law"));
    }
    let d = h.dim() as f64;
    if series_growth(h, seq, d, &cfg.checkpoints)? > 0.0 {
        return Ok(d);
    }
    let (mut lo, mut hi) = (0.0, d);
    for _ in 0..cfg.iterations {
        let mid = 0.5 * (lo + hi);
        if series_growth(h, seq, mid, &cfg.checkpoints)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    AvoidAs,
    HitAsHausdorff,
    HitAsPacking,
    Indeterminate,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::AvoidAs => "AvoidAS",
            Regime::HitAsHausdorff => "HitAS_Hausdorff",
            Regime::HitAsPacking => "HitAS_Packing",
            Regime::Indeterminate => "Indeterminate",
        }
    }

    pub fn is_hitting(self) -> bool {
        matches!(self, Regime::HitAsHausdorff | Regime::HitAsPacking)
    }
}

impl core::fmt::Display for Regime {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeVerdict {
    pub regime: Regime,
    pub t: f64,
    pub alpha: f64,
    pub dim_h: f64,
    pub dim_p: f64,
    pub condition_c: bool,
}

impl RegimeVerdict {
    /// The critical dimension `t - α`.
    pub fn threshold(&self) -> f64 {
        self.t - self.alpha
    }
}

fn check_order(t: f64, alpha: f64, dim_h: f64, dim_p: f64) -> Result<()> {
    let e = BOUNDARY_EPS;
    let ok = |c: bool, msg: &str| {
        if c {
            Ok(())
        } else {
            Err(Error::Ordering(format!(
                "{msg} (t = {t}, alpha = {alpha}, dim_h = {dim_h}, dim_p = {dim_p})"
            )))
        }
    };
    ok(t.is_finite() && t > 0.0, "t must be positive")?;
    ok(alpha >= -e && alpha <= t + e, "need 0 <= alpha <= t")?;
    ok(dim_h >= -e, "need dim_h >= 0")?;
    ok(dim_h <= dim_p + e, "need dim_h <= dim_p")?;
    ok(dim_p <= t + e, "need dim_p <= t")
}

pub fn classify_hitting(
    t: f64,
    alpha: f64,
    dim_h: f64,
    dim_p: f64,
    condition_c: bool,
) -> Result<RegimeVerdict> {
    check_order(t, alpha, dim_h, dim_p)?;
    let crit = t - alpha;
    let regime = if dim_p < crit - BOUNDARY_EPS {
        Regime::AvoidAs
    } else if dim_h > crit + BOUNDARY_EPS {
        Regime::HitAsHausdorff
    } else if dim_p > crit + BOUNDARY_EPS && condition_c {
        Regime::HitAsPacking
    } else {
        Regime::Indeterminate
    };
    Ok(RegimeVerdict {
        regime,
        t,
        alpha,
        dim_h,
        dim_p,
        condition_c,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectBounds {
    pub lower: f64,
    pub upper: f64,
    /// False when `dim_p F < t - α`, where the intersection is a.s. empty
    /// and the bounds carry no information.
    pub applicable: bool,
    pub reason: String,
}

pub fn intersect_bounds(t: f64, alpha: f64, dim_h: f64, dim_p: f64) -> Result<IntersectBounds> {
    check_order(t, alpha, dim_h, dim_p)?;
    let lower = (alpha + dim_h - t).max(0.0);
    let upper = (alpha + dim_p - t).max(0.0);
    let crit = t - alpha;
    let (applicable, reason) = if dim_p < crit - BOUNDARY_EPS {
        (
            false,
            format!("dim_p F = {} < t - alpha = {}: intersection is a.s. empty", fmt_num(dim_p), fmt_num(crit)),
        )
    } else if dim_h > crit + BOUNDARY_EPS {
        (true, format!("dim_h F = {} > t - alpha = {}", fmt_num(dim_h), fmt_num(crit)))
    } else {
        (
            true,
            format!("dim_h F = {} <= t - alpha = {}: lower bound only", fmt_num(dim_h), fmt_num(crit)),
        )
    };
    Ok(IntersectBounds {
        lower,
        upper,
        applicable,
        reason,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum TorusUpper {
    EmptyAs,
    UpperBound(f64),
}

/// Upper bound for the intersection of a rectangle covering set of
/// dimension `s0` with `F`.
pub fn torus_upper(s0: f64, d: usize, dim_p: f64) -> TorusUpper {
    let d = d as f64;
    if dim_p < d - s0 - BOUNDARY_EPS {
        TorusUpper::EmptyAs
    } else {
        TorusUpper::UpperBound((s0 + dim_p - d).max(0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RotatedLower {
    LowerBound(f64),
    HypothesisFails(String),
}

/// Lower bound for randomly rotated generators of dimension `s0_rot`.
pub fn rotated_lower(s0_rot: f64, d: usize, dim_h: f64) -> RotatedLower {
    let df = d as f64;
    if dim_h <= df - s0_rot + BOUNDARY_EPS {
        return RotatedLower::HypothesisFails(format!(
            "dim_h F = {} ≤ d - s0R = {}",
            fmt_num(dim_h),
            fmt_num(df - s0_rot)
        ));
    }
    let big = s0_rot.max(dim_h);
    let half = 0.5 * (df + 1.0);
    if big <= half + BOUNDARY_EPS {
        return RotatedLower::HypothesisFails(format!(
            "max{{s0R, dim_h F}} = {} ≤ {}",
            fmt_num(big),
            fmt_num(half)
        ));
    }
    RotatedLower::LowerBound(s0_rot + dim_h - df)
}

/// Formats `x` as a small fraction when it is one, e.g. `4/3`.
pub fn fmt_num(x: f64) -> String {
    for q in 1..=12i64 {
        let p = math::round(x * q as f64);
        if (p / q as f64 - x).abs() < 1e-9 {
            let p = p as i64;
            return if q == 1 { format!("{p}") } else { format!("{p}/{q}") };
        }
    }
    format!("{x}")
}

/// The torus seen through the snowflake metric `κ` of exponents `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnowflakeProfile {
    pub t: f64,
    pub alpha: f64,
    pub alpha_truncated: bool,
    pub condition_c: bool,
}

impl SnowflakeProfile {
    pub fn classify(&self, dim_h: f64, dim_p: f64) -> Result<RegimeVerdict> {
        classify_hitting(self.t, self.alpha, dim_h, dim_p, self.condition_c)
    }

    pub fn bounds(&self, dim_h: f64, dim_p: f64) -> Result<IntersectBounds> {
        intersect_bounds(self.t, self.alpha, dim_h, dim_p)
    }
}

/// `t = sum 1/H_i` and `α = min{t, limsup log n / (-log r_n)}`.
pub fn snowflake_profile(h: &SnowflakeExponents, seq: &RadiusSequence) -> Result<SnowflakeProfile> {
    let t = h.regularity();
    let est = radii::alpha_of(seq, t)?;
    let cc = radii::condition_c_check(seq, t, CONDITION_C_KMAX)?;
    Ok(SnowflakeProfile {
        t,
        alpha: est.value,
        alpha_truncated: est.truncated,
        condition_c: matches!(cc.verdict, ConditionC::Holds { .. }),
    })
}

/// Rectangle family `H = (1, ε/(1+ε))`, `r_n = n^{-ε}`, whose aligned
/// covering sets miss every horizontal line.
pub fn line_avoiding_family(eps: f64) -> Result<(SnowflakeExponents, RadiusSequence)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid("eps", format!("must lie in (0, 1), got {eps}")));
    }
    let h = SnowflakeExponents::new(vec![1.0, eps / (1.0 + eps)])?;
    let seq = RadiusSequence::power_law(1.0, 1.0 / eps)?;
    Ok((h, seq))
}
