//! Finite-depth covering-set proxies and the experiments built on them.
//!
//! Generation `k` is the union of `x_n + A_n` over the bucket
//! `N_k = {n : 2^-(k+1) <= r_n < 2^-k}`, rasterized conservatively: a cell
//! is marked when its closure meets the closed generator. The proxy for the
//! limsup set is the intersection of generations `m0..=m1`.
//!
//! Random inputs are keyed by path. Replica `i` of seed `s` uses the stream
//! `at_path(s, [i])`; generator `n` of generation `k` draws its centre from
//! `.derive(k).derive(n).derive(0)` and its rotation from `.derive(1)` of
//! the same node, so aligned and rotated runs share their centres.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exec::ReplicaExecutor;
use crate::geometry::{GeneratingShape, SnowflakeExponents, TorusPoint};
use crate::grid::{OccupancyGrid, DEFAULT_GRID_CAP_BITS};
use crate::predictor;
use crate::radii::{self, RadiusSequence, DEFAULT_INDEX_CAP};
use crate::sampler::{haar_rotation, uniform_point, RngStream};
use crate::stats;
use crate::targets::TargetSet;

#[derive(Debug, Clone, PartialEq)]
pub enum ShapeFamily {
    Ball,
    AxisRect(SnowflakeExponents),
    RotatedRect(SnowflakeExponents),
}

impl ShapeFamily {
    pub fn label(&self) -> &'static str {
        match self {
            ShapeFamily::Ball => "ball",
            ShapeFamily::AxisRect(_) => "axis_rect",
            ShapeFamily::RotatedRect(_) => "rotated_rect",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimWindow {
    pub d: usize,
    pub m0: u32,
    pub m1: u32,
    pub depth: u32,
    pub family: ShapeFamily,
    pub seq: RadiusSequence,
    pub grid_cap_bits: u128,
    pub index_cap: u64,
}

impl SimWindow {
    pub fn new(
        d: usize,
        m0: u32,
        m1: u32,
        depth: u32,
        family: ShapeFamily,
        seq: RadiusSequence,
    ) -> Result<Self> {
        Self::with_caps(d, m0, m1, depth, family, seq, DEFAULT_GRID_CAP_BITS, DEFAULT_INDEX_CAP)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_caps(
        d: usize,
        m0: u32,
        m1: u32,
        depth: u32,
        family: ShapeFamily,
        seq: RadiusSequence,
        grid_cap_bits: u128,
        index_cap: u64,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        if m0 == 0 {
            // Bucket 0 holds radii in [1/2, 1), too large to place.
            return Err(Error::invalid("m0", "generations start at k = 1"));
        }
        if m0 > m1 {
            return Err(Error::invalid("m1", format!("need m0 <= m1, got [{m0}, {m1}]")));
        }
        if depth < m1 {
            return Err(Error::invalid("depth", format!("depth {depth} is below m1 = {m1}")));
        }
        match &family {
            ShapeFamily::Ball => {}
            ShapeFamily::AxisRect(h) | ShapeFamily::RotatedRect(h) => {
                if h.dim() != d {
                    return Err(Error::ShapeMismatch(format!(
                        "exponents are {}-dimensional, window d = {d}",
                        h.dim()
                    )));
                }
            }
        }
        if matches!(family, ShapeFamily::RotatedRect(_)) && !(d == 2 || d == 3) {
            return Err(Error::UnsupportedDimension(d));
        }
        let bits = 1u128.checked_shl(depth * d as u32).unwrap_or(u128::MAX);
        if depth as u128 * d as u128 >= 64 || bits > grid_cap_bits {
            return Err(Error::GridTooLarge {
                bits,
                cap: grid_cap_bits,
            });
        }
        Ok(Self {
            d,
            m0,
            m1,
            depth,
            family,
            seq,
            grid_cap_bits,
            index_cap,
        })
    }

    pub fn empty_grid(&self) -> Result<OccupancyGrid> {
        OccupancyGrid::isotropic(self.d, self.depth, self.grid_cap_bits)
    }

    /// Same window with generations `m0..=m1` replaced.
    pub fn with_generations(&self, m0: u32, m1: u32) -> Result<Self> {
        Self::with_caps(
            self.d,
            m0,
            m1,
            self.depth,
            self.family.clone(),
            self.seq.clone(),
            self.grid_cap_bits,
            self.index_cap,
        )
    }

    /// Same window and seeds with a different shape family.
    pub fn with_family(&self, family: ShapeFamily) -> Result<Self> {
        Self::with_caps(
            self.d,
            self.m0,
            self.m1,
            self.depth,
            family,
            self.seq.clone(),
            self.grid_cap_bits,
            self.index_cap,
        )
    }

    fn shape(&self, r: f64, node: &RngStream) -> Result<GeneratingShape> {
        match &self.family {
            ShapeFamily::Ball => GeneratingShape::ball(self.d, r),
            ShapeFamily::AxisRect(h) => GeneratingShape::axis_rect(h.clone(), r),
            ShapeFamily::RotatedRect(h) => {
                let rot = haar_rotation(&mut node.derive(1), self.d)?;
                GeneratingShape::rotated_rect(h.clone(), r, rot)
            }
        }
    }
}

/// Stream of replica `replica` under `seed`.
pub fn replica_stream(seed: u64, replica: u64) -> RngStream {
    RngStream::at_path(seed, &[replica])
}

/// Union of the generators of bucket `k` at the window depth.
pub fn generation_rasterize(window: &SimWindow, k: u32, replica: &RngStream) -> Result<OccupancyGrid> {
    if k < window.m0 || k > window.m1 {
        return Err(Error::invalid(
            "k",
            format!("generation {k} outside [{}, {}]", window.m0, window.m1),
        ));
    }
    let range = window.seq.bucket_range(k, window.index_cap)?;
    let mut grid = window.empty_grid()?;
    let gen = replica.derive(u64::from(k));
    for n in range {
        let r = window.seq.radius(n).expect("bucket indices lie inside the sequence");
        let node = gen.derive(n);
        let x = uniform_point(&mut node.derive(0), window.d);
        let shape = window.shape(r, &node)?;
        grid.rasterize_shape(&shape, &x);
    }
    Ok(grid)
}

/// `⋂_{k=m0}^{m1} ⋃_{n ∈ N_k} (x_n + A_n)` at the window depth. Stops early
/// once the running intersection is empty.
pub fn limsup_proxy(window: &SimWindow, replica: &RngStream) -> Result<OccupancyGrid> {
    let mut acc = generation_rasterize(window, window.m0, replica)?;
    for k in window.m0 + 1..=window.m1 {
        if acc.is_empty() {
            break;
        }
        acc.and_assign(&generation_rasterize(window, k, replica)?)?;
    }
    Ok(acc)
}

/// Proxy from explicitly placed generators, one list per generation.
pub fn limsup_proxy_explicit(
    d: usize,
    depth: u32,
    generations: &[Vec<(GeneratingShape, TorusPoint)>],
) -> Result<OccupancyGrid> {
    let mut acc = OccupancyGrid::full(alloc::vec![depth; d], DEFAULT_GRID_CAP_BITS)?;
    for gen in generations {
        let mut g = OccupancyGrid::isotropic(d, depth, DEFAULT_GRID_CAP_BITS)?;
        for (shape, x) in gen {
            g.rasterize_shape(shape, x);
        }
        acc.and_assign(&g)?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub counts: Vec<(u32, u64)>,
}

/// Least-squares slope of `log2 N_j` against `j`.
pub fn box_dim_estimate(grid: &OccupancyGrid, jmin: u32, jmax: u32) -> Result<DimEstimate> {
    if grid.is_empty() {
        return Err(Error::EmptySet);
    }
    if jmin >= jmax {
        return Err(Error::invalid("jmin", format!("need jmin < jmax, got [{jmin}, {jmax}]")));
    }
    let counts = grid.counts_by_depth(jmin, jmax)?;
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .map(|&(j, n)| (f64::from(j), crate::math::log2(n as f64)))
        .collect();
    let fit = stats::least_squares(&pts).expect("at least two distinct scales");
    Ok(DimEstimate {
        slope: fit.slope,
        intercept: fit.intercept,
        residual: fit.residual_rms,
        counts,
    })
}

/// Default regression scales `[m/2, m]`.
pub fn default_scales(depth: u32) -> (u32, u32) {
    (depth / 2, depth)
}

pub fn hit_test(e: &OccupancyGrid, f: &OccupancyGrid) -> Result<bool> {
    e.intersects(f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaHit {
    pub replica: u64,
    pub proxy_cells: u64,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitReport {
    pub replicas: u64,
    pub hits: u64,
    pub nonempty_proxies: u64,
    pub frequency: f64,
    /// Wilson 95% interval.
    pub ci: (f64, f64),
    pub per_replica: Vec<ReplicaHit>,
}

pub const WILSON_Z95: f64 = 1.959_963_984_540_054;

pub fn hitting_frequency<X: ReplicaExecutor>(
    window: &SimWindow,
    target: &TargetSet,
    replicas: u64,
    seed: u64,
    exec: &X,
) -> Result<HitReport> {
    if replicas == 0 {
        return Err(Error::invalid("replicas", "need at least one replica"));
    }
    if target.dim() != window.d {
        return Err(Error::ShapeMismatch(format!(
            "target is {}-dimensional, window d = {}",
            target.dim(),
            window.d
        )));
    }
    let f = target.rasterize(window.depth, window.grid_cap_bits)?;
    let rows = exec.map(replicas, |i| -> Result<ReplicaHit> {
        let proxy = limsup_proxy(window, &replica_stream(seed, i))?;
        Ok(ReplicaHit {
            replica: i,
            proxy_cells: proxy.count(),
            hit: hit_test(&proxy, &f)?,
        })
    });
    let per_replica = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let hits = per_replica.iter().filter(|r| r.hit).count() as u64;
    let nonempty = per_replica.iter().filter(|r| r.proxy_cells > 0).count() as u64;
    Ok(HitReport {
        replicas,
        hits,
        nonempty_proxies: nonempty,
        frequency: hits as f64 / replicas as f64,
        ci: stats::wilson_interval(hits, replicas, WILSON_Z95),
        per_replica,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimReport {
    pub replicas: u64,
    /// `None` for replicas whose set was empty.
    pub per_replica: Vec<Option<DimEstimate>>,
    pub nonempty: u64,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
}

impl DimReport {
    pub(crate) fn from_rows(per_replica: Vec<Option<DimEstimate>>) -> Self {
        let slopes: Vec<f64> = per_replica.iter().flatten().map(|e| e.slope).collect();
        Self {
            replicas: per_replica.len() as u64,
            nonempty: slopes.len() as u64,
            median: stats::median(&slopes),
            q1: stats::quantile(&slopes, 0.25),
            q3: stats::quantile(&slopes, 0.75),
            per_replica,
        }
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.per_replica.iter().flatten().map(|e| e.slope).collect()
    }
}

fn estimate_or_none(grid: &OccupancyGrid, jmin: u32, jmax: u32) -> Result<Option<DimEstimate>> {
    match box_dim_estimate(grid, jmin, jmax) {
        Ok(e) => Ok(Some(e)),
        Err(Error::EmptySet) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Box-count slope of the proxy itself, per replica, over `[m/2, m]`.
pub fn cover_dim<X: ReplicaExecutor>(
    window: &SimWindow,
    replicas: u64,
    seed: u64,
    exec: &X,
) -> Result<DimReport> {
    let (jmin, jmax) = default_scales(window.depth);
    let rows = exec.map(replicas, |i| -> Result<Option<DimEstimate>> {
        let proxy = limsup_proxy(window, &replica_stream(seed, i))?;
        estimate_or_none(&proxy, jmin, jmax)
    });
    Ok(DimReport::from_rows(rows.into_iter().collect::<Result<Vec<_>>>()?))
}

/// Box-count slope of `proxy ∩ F` over `[m/2, m]`, per replica.
///
/// For balls the regime is checked first: targets the covering set avoids
/// almost surely are rejected.
pub fn intersection_dim<X: ReplicaExecutor>(
    window: &SimWindow,
    target: &TargetSet,
    replicas: u64,
    seed: u64,
    exec: &X,
) -> Result<DimReport> {
    if target.dim() != window.d {
        return Err(Error::ShapeMismatch(format!(
            "target is {}-dimensional, window d = {}",
            target.dim(),
            window.d
        )));
    }
    if window.family == ShapeFamily::Ball {
        let t = window.d as f64;
        let alpha = radii::alpha_of(&window.seq, t)?.value;
        let cc = radii::condition_c_check(&window.seq, t, predictor::CONDITION_C_KMAX)?;
        let (dh, dp) = target.dims();
        let verdict = predictor::classify_hitting(
            t,
            alpha,
            dh,
            dp,
            matches!(cc.verdict, radii::ConditionC::Holds { .. }),
        )?;
        if !verdict.regime.is_hitting() {
            return Err(Error::NotHittingRegime(verdict.regime.label()));
        }
    }
    let f = target.rasterize(window.depth, window.grid_cap_bits)?;
    let (jmin, jmax) = default_scales(window.depth);
    let rows = exec.map(replicas, |i| -> Result<Option<DimEstimate>> {
        let mut proxy = limsup_proxy(window, &replica_stream(seed, i))?;
        proxy.and_assign(&f)?;
        estimate_or_none(&proxy, jmin, jmax)
    });
    let report = DimReport::from_rows(rows.into_iter().collect::<Result<Vec<_>>>()?);
    if report.nonempty == 0 {
        return Err(Error::NoIntersections);
    }
    Ok(report)
}

/// One-dimensional shadow of the aligned rectangles on the last axis: the
/// interval of length `min(1, r_n^{1/H_d})` around the last coordinate of
/// `x_n`.
#[derive(Debug, Clone)]
pub struct ProjectionCounter {
    lengths: Vec<f64>,
    tail_from: usize,
}

impl ProjectionCounter {
    /// Shadows of `n = 1..=n_max`; `min_generation` splits off the indices
    /// counted as the tail (`r_n < 2^-min_generation`).
    pub fn new(
        h: &SnowflakeExponents,
        seq: &RadiusSequence,
        n_max: u64,
        min_generation: u32,
    ) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::invalid("n_max", "need at least one generator"));
        }
        let inv = 1.0 / h.values()[h.dim() - 1];
        let mut lengths = Vec::with_capacity(n_max as usize);
        let mut tail_from = n_max as usize;
        for n in 1..=n_max {
            let r = seq
                .radius(n)
                .ok_or_else(|| Error::InsufficientData(format!("radius r_{n} is not available")))?;
            if tail_from == n_max as usize && r < crate::math::dyadic(min_generation) {
                tail_from = (n - 1) as usize;
            }
            lengths.push(crate::math::powf(r, inv).min(1.0));
        }
        Ok(Self { lengths, tail_from })
    }

    /// `Σ_n min(1, r_n^{1/H_d})`, the expected count.
    pub fn expected(&self) -> (f64, f64) {
        let mut all = stats::CompensatedSum::new();
        let mut tail = stats::CompensatedSum::new();
        for (i, l) in self.lengths.iter().enumerate() {
            all.add(*l);
            if i >= self.tail_from {
                tail.add(*l);
            }
        }
        (all.value(), tail.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionCount {
    pub all: u64,
    pub tail: u64,
}

/// Number of shadows covering the height `b`.
pub fn projection_hit_count(counter: &ProjectionCounter, b: f64, replica: &RngStream) -> ProjectionCount {
    let b = crate::geometry::wrap_coord(b);
    let mut s = replica.derive(u64::MAX);
    let mut out = ProjectionCount { all: 0, tail: 0 };
    for (i, l) in counter.lengths.iter().enumerate() {
        // Both heights lie in [-1/2, 1/2), so the circle distance needs no
        // floor; this loop runs 10^10 times in a full experiment.
        let diff = (s.next_f64() - 0.5 - b).abs();
        if diff.min(1.0 - diff) <= 0.5 * l {
            out.all += 1;
            if i >= counter.tail_from {
                out.tail += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::geometry::wrap;
    use alloc::vec;

    fn balls(alpha: f64, m0: u32, m1: u32, depth: u32) -> SimWindow {
        SimWindow::new(
            1,
            m0,
            m1,
            depth,
            ShapeFamily::Ball,
            RadiusSequence::power_law(1.0, alpha).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn window_validation() {
        let seq = RadiusSequence::power_law(1.0, 1.0).unwrap();
        assert!(SimWindow::new(1, 0, 3, 4, ShapeFamily::Ball, seq.clone()).is_err());
        assert!(SimWindow::new(1, 4, 3, 4, ShapeFamily::Ball, seq.clone()).is_err());
        assert!(SimWindow::new(1, 2, 5, 4, ShapeFamily::Ball, seq.clone()).is_err());
        assert!(matches!(
            SimWindow::new(2, 2, 5, 16, ShapeFamily::Ball, seq),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn empty_bucket_gives_empty_generation() {
        // No radius lies in [1/4, 1/2).
        let seq = RadiusSequence::explicit(vec![0.2, 0.1, 0.05, 0.04, 0.03, 0.02, 0.01, 0.005]).unwrap();
        let w = SimWindow::new(1, 1, 1, 8, ShapeFamily::Ball, seq).unwrap();
        let g = generation_rasterize(&w, 1, &replica_stream(0, 0)).unwrap();
        assert!(g.is_empty());
    }

    #[test]
    fn single_ball_cell_count() {
        let m = 10;
        for i in 0..50 {
            let mut s = replica_stream(3, i);
            let x = uniform_point(&mut s, 1);
            let mut g = OccupancyGrid::isotropic(1, m, DEFAULT_GRID_CAP_BITS).unwrap();
            g.rasterize_shape(&GeneratingShape::ball(1, 0.3).unwrap(), &x);
            let lo = libm::ceil(0.6 * f64::from(1u32 << m)) as u64;
            assert!((lo..=lo + 2).contains(&g.count()), "{}", g.count());
        }
    }

    #[test]
    fn proxy_of_degenerate_window_is_the_generation() {
        let w = balls(1.0, 5, 5, 10);
        let rs = replica_stream(1, 2);
        assert_eq!(limsup_proxy(&w, &rs).unwrap(), generation_rasterize(&w, 5, &rs).unwrap());
    }

    #[test]
    fn set_intersection_example() {
        let w = 1.0 / 8.0;
        // Balls covering exactly the closed cells {1,2} and {2,3} would also
        // touch neighbours, so shrink slightly inside.
        let cell_ball = |a: f64, b: f64| {
            let c = -0.5 + 0.5 * (a + b) * w;
            let r = 0.5 * (b - a) * w - 1e-9;
            (GeneratingShape::ball(1, r).unwrap(), wrap(&[c]))
        };
        let g = limsup_proxy_explicit(1, 3, &[vec![cell_ball(1.0, 3.0)], vec![cell_ball(2.0, 4.0)]]).unwrap();
        assert_eq!(g.iter_occupied().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn box_dim_edge_cases() {
        let full = OccupancyGrid::full(vec![12], DEFAULT_GRID_CAP_BITS).unwrap();
        assert_eq!(box_dim_estimate(&full, 2, 12).unwrap().slope, 1.0);
        let mut one = OccupancyGrid::isotropic(1, 12, DEFAULT_GRID_CAP_BITS).unwrap();
        one.set(&[77]);
        assert_eq!(box_dim_estimate(&one, 2, 12).unwrap().slope, 0.0);
        one.clear();
        assert_eq!(box_dim_estimate(&one, 2, 12), Err(Error::EmptySet));
        let c = TargetSet::digit_cantor(4, vec![vec![0, 3]]).unwrap();
        let g = c.rasterize(20, DEFAULT_GRID_CAP_BITS).unwrap();
        assert!((box_dim_estimate(&g, 10, 20).unwrap().slope - 0.5).abs() < 0.02);
    }

    #[test]
    fn hit_test_cases() {
        let m = vec![4];
        let empty = OccupancyGrid::new(m.clone(), DEFAULT_GRID_CAP_BITS).unwrap();
        let full = OccupancyGrid::full(m.clone(), DEFAULT_GRID_CAP_BITS).unwrap();
        assert!(!hit_test(&empty, &full).unwrap());
        assert!(hit_test(&full, &full).unwrap());
        let mut a = empty.clone();
        let mut b = empty.clone();
        a.set(&[1]);
        b.set(&[2]);
        assert!(!hit_test(&a, &b).unwrap());
        let other = OccupancyGrid::new(vec![5], DEFAULT_GRID_CAP_BITS).unwrap();
        assert!(hit_test(&a, &other).is_err());
    }

    #[test]
    fn nested_windows_shrink() {
        let w = balls(1.0, 4, 9, 12);
        for i in 0..5 {
            let rs = replica_stream(11, i);
            let mut prev = limsup_proxy(&w.with_generations(4, 4).unwrap(), &rs).unwrap();
            for m1 in 5..=9 {
                let cur = limsup_proxy(&w.with_generations(4, m1).unwrap(), &rs).unwrap();
                assert!(cur.is_subset_of(&prev).unwrap());
                prev = cur;
            }
        }
    }

    #[test]
    fn full_torus_is_hit_by_every_nonempty_proxy() {
        let w = balls(1.0, 4, 8, 10);
        let rep = hitting_frequency(&w, &TargetSet::full_torus(1).unwrap(), 10, 5, &Sequential).unwrap();
        assert_eq!(rep.hits, rep.nonempty_proxies);
        assert!(rep.ci.0 <= rep.frequency && rep.frequency <= rep.ci.1);
    }

    #[test]
    fn avoid_regime_is_rejected() {
        let w = balls(0.2, 4, 8, 10);
        assert!(matches!(
            intersection_dim(&w, &TargetSet::middle_third(), 2, 0, &Sequential),
            Err(Error::NotHittingRegime("AvoidAS"))
        ));
    }

    #[test]
    fn projection_expectation() {
        let (h, seq) = predictor::line_avoiding_family(0.5).unwrap();
        let pc = ProjectionCounter::new(&h, &seq, 1000, 4).unwrap();
        let (all, tail) = pc.expected();
        let direct: f64 = (1..=1000).map(|n| libm::pow(n as f64, -1.5)).sum();
        assert!((all - direct).abs() < 1e-12);
        // r_n < 1/16 from n = 257 on.
        let direct_tail: f64 = (257..=1000).map(|n| libm::pow(n as f64, -1.5)).sum();
        assert!((tail - direct_tail).abs() < 1e-12);
        let c = projection_hit_count(&pc, 0.37, &replica_stream(0, 0));
        assert!(c.all >= 1 && c.tail <= c.all);
    }

    #[test]
    fn projection_count_matches_circle_distance() {
        let (h, seq) = predictor::line_avoiding_family(0.5).unwrap();
        let pc = ProjectionCounter::new(&h, &seq, 5000, 4).unwrap();
        for (replica, b) in [(0, 0.37), (1, -0.49), (2, 0.499)] {
            let stream = replica_stream(9, replica);
            let mut s = stream.derive(u64::MAX);
            let direct = pc
                .lengths
                .iter()
                .filter(|l| crate::geometry::circle_dist(s.next_f64() - 0.5, b) <= 0.5 * **l)
                .count() as u64;
            assert_eq!(projection_hit_count(&pc, b, &stream).all, direct);
        }
    }
}
