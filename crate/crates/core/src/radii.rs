//! Radius sequences `(r_n)`, their limsup exponent `α`, dyadic buckets
//! `N_k = {n : 2^-(k+1) <= r_n < 2^-k}` and condition (C).

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::math;
use crate::stats::CompensatedSum;

/// Default cap on the number of indices a bucket enumeration may touch.
pub const DEFAULT_INDEX_CAP: u64 = 1_000_000_000;

/// Default slack for the finite-data condition (C) check.
pub const DEFAULT_CONDITION_C_TOL: f64 = 0.1;

/// Generative description of a non-increasing radius sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum RadiusKind {
    /// `r_n = c * n^(-1/a)`.
    PowerLaw { c: f64, a: f64 },
    /// `r_n = lambda^n`.
    Geometric { lambda: f64 },
    /// Finite, validated list `r_1, r_2, ...`.
    Explicit(Vec<f64>),
}

/// A validated radius sequence. Construct through [`RadiusSequence::power_law`],
/// [`RadiusSequence::geometric`] or [`RadiusSequence::explicit`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusSequence {
    kind: RadiusKind,
}

impl RadiusSequence {
    /// `r_n = c n^(-1/a)` with `0 < c <= 1`. With `c = 1` the first radius
    /// equals one and lies outside every bucket.
    pub fn power_law(c: f64, a: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::invalid("c", format!("must lie in (0, 1], got {c}")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid("a", format!("must be positive, got {a}")));
        }
        Ok(Self {
            kind: RadiusKind::PowerLaw { c, a },
        })
    }

    pub fn geometric(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::invalid(
                "lambda",
                format!("must lie in (0, 1), got {lambda}"),
            ));
        }
        Ok(Self {
            kind: RadiusKind::Geometric { lambda },
        })
    }

    /// Non-increasing list of radii in `(0, 1)` whose last value is strictly
    /// below its first.
    pub fn explicit(radii: Vec<f64>) -> Result<Self> {
        if radii.len() < 2 {
            return Err(Error::invalid("radii", "need at least two radii"));
        }
        if let Some(bad) = radii.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(Error::invalid("radii", format!("{bad} is outside (0, 1)")));
        }
        if let Some(i) = radii.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::invalid(
                "radii",
                format!("increases at index {}: {} < {}", i + 2, radii[i], radii[i + 1]),
            ));
        }
        if radii[radii.len() - 1] >= radii[0] {
            return Err(Error::invalid("radii", "sequence is constant"));
        }
        Ok(Self {
            kind: RadiusKind::Explicit(radii),
        })
    }

    pub fn kind(&self) -> &RadiusKind {
        &self.kind
    }

    pub fn is_generative(&self) -> bool {
        !matches!(self.kind, RadiusKind::Explicit(_))
    }

    /// Number of available terms, `None` for generative kinds.
    pub fn len(&self) -> Option<u64> {
        match &self.kind {
            RadiusKind::Explicit(v) => Some(v.len() as u64),
            _ => None,
        }
    }

    /// `r_n` for the 1-based index `n`; `None` when `n = 0` or past the end
    /// of an explicit list.
    pub fn radius(&self, n: u64) -> Option<f64> {
        if n == 0 {
            return None;
        }
        match &self.kind {
            RadiusKind::PowerLaw { c, a } => Some(c * math::powf(n as f64, -1.0 / a)),
            RadiusKind::Geometric { lambda } => Some(math::powf(*lambda, n as f64)),
            RadiusKind::Explicit(v) => v.get((n - 1) as usize).copied(),
        }
    }

    /// `limsup log n / (-log r_n)` without the cap at the ambient dimension.
    pub fn limsup_exponent(&self) -> Result<AlphaEstimate> {
        match &self.kind {
            RadiusKind::PowerLaw { a, .. } => Ok(AlphaEstimate::exact(*a)),
            RadiusKind::Geometric { .. } => Ok(AlphaEstimate::exact(0.0)),
            RadiusKind::Explicit(v) => {
                if v.len() < 8 {
                    return Err(Error::InsufficientData(format!(
                        "explicit sequence has {} radii, need at least 8 to estimate alpha",
                        v.len()
                    )));
                }
                let start = v.len() / 2 + 1;
                let value = (start..=v.len())
                    .map(|n| math::ln(n as f64) / -math::ln(v[n - 1]))
                    .fold(0.0, f64::max);
                Ok(AlphaEstimate {
                    value,
                    truncated: true,
                })
            }
        }
    }

    /// Smallest index `n >= 1` with `r_n < threshold`. For explicit lists
    /// that never drop below the threshold this is `len + 1`.
    fn first_below(&self, threshold: f64, index_cap: u64) -> Result<u64> {
        let guess = match &self.kind {
            RadiusKind::PowerLaw { c, a } => math::powf(c / threshold, *a),
            RadiusKind::Geometric { lambda } => math::ln(threshold) / math::ln(*lambda),
            RadiusKind::Explicit(v) => {
                return Ok(v.partition_point(|r| *r >= threshold) as u64 + 1);
            }
        };
        if !(guess < index_cap as f64) {
            return Err(Error::EnumerationTooLarge {
                needed: guess,
                cap: index_cap,
            });
        }
        // The closed-form guess is within a step or two of the boundary;
        // settle the exact index against the evaluated radii.
        let below = |n: u64| self.radius(n).is_none_or(|r| r < threshold);
        let mut n = (math::floor(guess.max(0.0)) as u64).max(1);
        while n > 1 && below(n - 1) {
            n -= 1;
        }
        while !below(n) {
            n += 1;
        }
        Ok(n)
    }

    /// Index range of bucket `N_k`. The range is contiguous because the
    /// sequence is monotone.
    pub fn bucket_range(&self, k: u32, index_cap: u64) -> Result<Range<u64>> {
        let start = self.first_below(math::dyadic(k), index_cap)?;
        let end = self.first_below(math::dyadic(k + 1), index_cap)?;
        Ok(start..end.max(start))
    }
}

/// Estimate of `α`; `truncated` marks values computed from finite data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaEstimate {
    pub value: f64,
    pub truncated: bool,
}

impl AlphaEstimate {
    fn exact(value: f64) -> Self {
        Self {
            value,
            truncated: false,
        }
    }
}

/// `α = min{t, limsup log n / (-log r_n)}`.
pub fn alpha_of(seq: &RadiusSequence, t: f64) -> Result<AlphaEstimate> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", format!("must be positive, got {t}")));
    }
    let mut est = seq.limsup_exponent()?;
    est.value = est.value.min(t);
    Ok(est)
}

/// Bucket index `k` with `2^-(k+1) <= r < 2^-k`, or `None` for `r >= 1` or
/// non-positive `r`.
pub fn bucket_of(r: f64) -> Option<u32> {
    if !(r > 0.0 && r < 1.0) {
        return None;
    }
    let mut k = math::floor(-math::log2(r)).max(0.0) as u32;
    while r < math::dyadic(k + 1) {
        k += 1;
    }
    while k > 0 && r >= math::dyadic(k) {
        k -= 1;
    }
    Some(k)
}

/// Bucket counts `n_0 .. n_kmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketTable {
    pub kmax: u32,
    pub counts: Vec<u64>,
    pub ranges: Vec<Range<u64>>,
    /// Largest index touched by the enumeration.
    pub truncation: u64,
    /// Largest `k` whose bucket is fully enumerated (`kmax` unless an
    /// explicit list ran out first).
    pub complete_through: Option<u32>,
}

pub fn buckets(seq: &RadiusSequence, kmax: u32) -> Result<BucketTable> {
    buckets_with_cap(seq, kmax, DEFAULT_INDEX_CAP)
}

pub fn buckets_with_cap(seq: &RadiusSequence, kmax: u32, index_cap: u64) -> Result<BucketTable> {
    let ranges = (0..=kmax)
        .map(|k| seq.bucket_range(k, index_cap))
        .collect::<Result<Vec<_>>>()?;
    let counts = ranges.iter().map(|r| r.end - r.start).collect();
    let (truncation, complete_through) = match seq.len() {
        Some(len) => {
            let last = seq.radius(len).unwrap_or(1.0);
            let complete = (0..=kmax).rev().find(|&k| last < math::dyadic(k + 1));
            let touched = ranges.last().map_or(0, |r| r.end).min(len);
            (touched, complete)
        }
        None => (ranges.last().map_or(0, |r| r.end), Some(kmax)),
    };
    Ok(BucketTable {
        kmax,
        counts,
        ranges,
        truncation,
        complete_through,
    })
}

/// `sum_{n=1}^{N} r_n^s`, compensated. Explicit lists contribute at most
/// their length.
pub fn series_sum(seq: &RadiusSequence, s: f64, terms: u64) -> f64 {
    let upper = seq.len().map_or(terms, |len| len.min(terms));
    let mut acc = CompensatedSum::new();
    for n in 1..=upper {
        if let Some(r) = seq.radius(n) {
            acc.add(math::powf(r, s));
        }
    }
    acc.value()
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConditionC {
    /// Subsequence `k_i` with slowly growing ratio and matching exponent.
    Holds { witness: Vec<u32> },
    Fails,
    /// The truncated data cannot decide.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCReport {
    pub verdict: ConditionC,
    pub alpha: f64,
    pub tol: f64,
    /// `(k, log2 n_k / k)` for every examined non-empty bucket.
    pub exponents: Vec<(u32, f64)>,
}

pub fn condition_c_check(seq: &RadiusSequence, t: f64, kmax: u32) -> Result<ConditionCReport> {
    condition_c_check_with_tol(seq, t, kmax, DEFAULT_CONDITION_C_TOL)
}

pub fn condition_c_check_with_tol(
    seq: &RadiusSequence,
    t: f64,
    kmax: u32,
    tol: f64,
) -> Result<ConditionCReport> {
    if kmax < 16 {
        return Err(Error::invalid("kmax", format!("must be at least 16, got {kmax}")));
    }
    let alpha = alpha_of(seq, t)?.value;
    let verdict = match seq.kind() {
        // log2 n_k / k -> a, which matches α = min{t, a} unless a > t.
        RadiusKind::PowerLaw { a, .. } => {
            if *a <= t {
                ConditionC::Holds {
                    witness: (1..=kmax).collect(),
                }
            } else {
                ConditionC::Fails
            }
        }
        RadiusKind::Geometric { .. } => ConditionC::Holds {
            witness: (1..=kmax).collect(),
        },
        RadiusKind::Explicit(_) => {
            let table = buckets(seq, kmax)?;
            return Ok(condition_c_on_buckets(&table, alpha, tol));
        }
    };
    Ok(ConditionCReport {
        verdict,
        alpha,
        tol,
        exponents: Vec::new(),
    })
}

/// Finite-data search for a condition (C) witness in the upper half of the
/// completely enumerated buckets.
pub fn condition_c_on_buckets(table: &BucketTable, alpha: f64, tol: f64) -> ConditionCReport {
    let mut report = ConditionCReport {
        verdict: ConditionC::Inconclusive,
        alpha,
        tol,
        exponents: Vec::new(),
    };
    let Some(top) = table.complete_through else {
        return report;
    };
    for k in 1..=top {
        let nk = table.counts[k as usize];
        if nk > 0 {
            report.exponents.push((k, math::log2(nk as f64) / k as f64));
        }
    }
    // Too few scales to tell a trend from the first few buckets.
    if top < 8 {
        return report;
    }
    let half = top.div_ceil(2);
    let chain: Vec<u32> = report
        .exponents
        .iter()
        .filter(|(k, e)| *k >= half && (e - alpha).abs() <= tol)
        .map(|(k, _)| *k)
        .collect();
    let ratio = 1.0 + tol;
    let spans = chain.len() >= 2
        && f64::from(chain[0]) <= f64::from(half) * ratio
        && f64::from(*chain.last().unwrap()) * ratio >= f64::from(top)
        && chain
            .windows(2)
            .all(|w| w[1] == w[0] + 1 || f64::from(w[1]) <= f64::from(w[0]) * ratio);
    if spans {
        report.verdict = ConditionC::Holds { witness: chain };
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Direct membership oracle: walk `n = 1, 2, ...` and test every radius
    /// against the bucket edges.
    fn enumerate_buckets(seq: &RadiusSequence, kmax: u32) -> Vec<u64> {
        let mut counts = vec![0u64; kmax as usize + 1];
        let floor = libm::ldexp(1.0, -(kmax as i32 + 1));
        let mut n = 1;
        while let Some(r) = seq.radius(n) {
            if r < floor {
                break;
            }
            for k in 0..=kmax {
                let lo = libm::ldexp(1.0, -(k as i32 + 1));
                let hi = libm::ldexp(1.0, -(k as i32));
                if lo <= r && r < hi {
                    counts[k as usize] += 1;
                }
            }
            n += 1;
        }
        counts
    }

    #[test]
    fn alpha_examples() {
        let t = 1.0;
        let pl = RadiusSequence::power_law(1.0, 0.7).unwrap();
        assert_eq!(alpha_of(&pl, t).unwrap().value, 0.7);
        let geo = RadiusSequence::geometric(0.5).unwrap();
        assert_eq!(alpha_of(&geo, t).unwrap().value, 0.0);
        let steep = RadiusSequence::power_law(1.0, 2.0).unwrap();
        assert_eq!(alpha_of(&steep, t).unwrap().value, 1.0);
    }

    #[test]
    fn alpha_rejects_short_explicit() {
        let seq = RadiusSequence::explicit(vec![0.5, 0.4, 0.3]).unwrap();
        assert!(matches!(
            alpha_of(&seq, 1.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn explicit_alpha_is_flagged() {
        let radii: Vec<f64> = (1..=64).map(|n| 0.9 * (n as f64).powf(-2.0)).collect();
        let est = alpha_of(&RadiusSequence::explicit(radii).unwrap(), 1.0).unwrap();
        assert!(est.truncated);
        assert!(est.value > 0.4 && est.value < 0.55, "{}", est.value);
    }

    #[test]
    fn explicit_validation() {
        assert!(RadiusSequence::explicit(vec![0.3, 0.4]).is_err());
        assert!(RadiusSequence::explicit(vec![0.3, 0.3]).is_err());
        assert!(RadiusSequence::explicit(vec![1.0, 0.4]).is_err());
        assert!(RadiusSequence::power_law(1.5, 1.0).is_err());
        assert!(RadiusSequence::geometric(1.0).is_err());
    }

    #[test]
    fn bucket_examples() {
        let half_over_n = RadiusSequence::power_law(0.5, 1.0).unwrap();
        let oracle = enumerate_buckets(&half_over_n, 2);
        assert_eq!(oracle, vec![1, 1, 2]);
        assert_eq!(buckets(&half_over_n, 2).unwrap().counts, oracle);

        let geo = RadiusSequence::geometric(0.5).unwrap();
        assert_eq!(buckets(&geo, 3).unwrap().counts, vec![1, 1, 1, 1]);

        let explicit =
            RadiusSequence::explicit(vec![0.6, 0.3, 0.2, 0.08, 0.05, 0.02, 0.01, 0.005]).unwrap();
        let oracle = enumerate_buckets(&explicit, 2);
        assert_eq!(oracle, vec![1, 1, 1]);
        assert_eq!(buckets(&explicit, 2).unwrap().counts, oracle);
    }

    #[test]
    fn unit_first_radius_sits_outside_buckets() {
        let seq = RadiusSequence::power_law(1.0, 1.0).unwrap();
        let table = buckets(&seq, 4).unwrap();
        assert_eq!(table.ranges[0], 2..3);
        assert_eq!(table.counts, enumerate_buckets(&seq, 4));
        assert_eq!(bucket_of(1.0), None);
    }

    #[test]
    fn bucket_enumeration_cap() {
        let seq = RadiusSequence::power_law(0.5, 1.0).unwrap();
        assert!(matches!(
            buckets_with_cap(&seq, 40, 1_000_000),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn bucket_of_edges() {
        assert_eq!(bucket_of(0.5), Some(0));
        assert_eq!(bucket_of(0.4999), Some(1));
        assert_eq!(bucket_of(0.25), Some(1));
        assert_eq!(bucket_of(libm::ldexp(1.0, -30)), Some(29));
        assert_eq!(bucket_of(libm::ldexp(0.75, -30)), Some(30));
    }

    #[test]
    fn series_examples() {
        let geo = RadiusSequence::geometric(0.5).unwrap();
        assert!((series_sum(&geo, 1.0, 20) - (1.0 - libm::ldexp(1.0, -20))).abs() < 1e-15);
        let seq = RadiusSequence::power_law(0.5, 1.0).unwrap();
        assert_eq!(series_sum(&seq, 2.0, 1), 0.25);
    }

    #[test]
    fn series_partial_sum_near_limit() {
        // Tail bound: sum_{n>N} (1/(2n))^1.5 <= 2 * (1/2)^1.5 * N^-1/2.
        let seq = RadiusSequence::power_law(0.5, 1.0).unwrap();
        let n = 1_000_000u64;
        let partial = series_sum(&seq, 1.5, n);
        let tail_bound = 2.0 * 0.5f64.powf(1.5) * (n as f64).powf(-0.5);
        // zeta(3/2) * 2^-1.5 is the limit.
        let limit = 2.612_375_348_685_488 * 0.5f64.powf(1.5);
        assert!(limit - partial <= tail_bound + 1e-12);
        assert!((limit - partial) < 1e-3);
        assert!(partial < limit);
    }

    #[test]
    fn condition_c_generative() {
        let pl = RadiusSequence::power_law(0.5, 0.7).unwrap();
        let rep = condition_c_check(&pl, 1.0, 32).unwrap();
        assert_eq!(
            rep.verdict,
            ConditionC::Holds {
                witness: (1..=32).collect()
            }
        );
        let geo = RadiusSequence::geometric(0.5).unwrap();
        assert!(matches!(
            condition_c_check(&geo, 1.0, 32).unwrap().verdict,
            ConditionC::Holds { .. }
        ));
        let steep = RadiusSequence::power_law(0.5, 2.0).unwrap();
        assert_eq!(condition_c_check(&steep, 1.0, 32).unwrap().verdict, ConditionC::Fails);
        assert!(condition_c_check(&pl, 1.0, 8).is_err());
    }

    #[test]
    fn condition_c_sparse_buckets_inconclusive() {
        let mut counts = vec![1u64; 33];
        for k in [4usize, 8, 16, 32] {
            counts[k] = 1 << k;
        }
        let table = BucketTable {
            kmax: 32,
            ranges: Vec::new(),
            truncation: counts.iter().sum(),
            counts,
            complete_through: Some(32),
        };
        let rep = condition_c_on_buckets(&table, 1.0, DEFAULT_CONDITION_C_TOL);
        assert_eq!(rep.verdict, ConditionC::Inconclusive);
    }

    #[test]
    fn condition_c_explicit_power_law_holds() {
        let radii: Vec<f64> = (1..=40_000u64)
            .map(|n| 0.999 * (n as f64).powf(-1.0 / 0.7))
            .collect();
        let seq = RadiusSequence::explicit(radii).unwrap();
        let rep = condition_c_check(&seq, 1.0, 16).unwrap();
        assert!(matches!(rep.verdict, ConditionC::Holds { .. }), "{rep:?}");
    }

    #[test]
    fn condition_c_explicit_truncated() {
        let radii: Vec<f64> = (1..=20u64).map(|n| 0.9 / n as f64).collect();
        let seq = RadiusSequence::explicit(radii).unwrap();
        let rep = condition_c_check(&seq, 1.0, 16).unwrap();
        assert_eq!(rep.verdict, ConditionC::Inconclusive);
    }
}
