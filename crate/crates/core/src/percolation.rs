//! Fractal percolation on the dyadic cube tree.
//!
//! Every cell carries its own stream, derived from its parent's stream by
//! the child's position code, and is kept when the stream's first uniform
//! falls below `p`. Cells are therefore coupled across `p`, and the
//! breadth-first grid and the depth-first survival check see the same tree.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::coversim::{box_dim_estimate, default_scales, replica_stream, DimEstimate, DimReport, WILSON_Z95};
use crate::error::{Error, Result};
use crate::exec::ReplicaExecutor;
use crate::grid::OccupancyGrid;
use crate::math;
use crate::sampler::RngStream;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PercParams {
    pub d: usize,
    pub s: f64,
    pub p: f64,
    pub depth: u32,
}

impl PercParams {
    /// Retention probability `p = 2^-s`.
    pub fn new(d: usize, s: f64, depth: u32) -> Result<Self> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::invalid("s", format!("must be non-negative, got {s}")));
        }
        Self::with_p(d, math::powf(2.0, -s), depth).map(|mut q| {
            q.s = s;
            q
        })
    }

    pub fn with_p(d: usize, p: f64, depth: u32) -> Result<Self> {
        if d == 0 || d > 6 {
            return Err(Error::UnsupportedDimension(d));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::invalid("p", format!("must lie in (0, 1], got {p}")));
        }
        Ok(Self {
            d,
            s: -math::log2(p),
            p,
            depth,
        })
    }

    pub fn arity(&self) -> u64 {
        1 << self.d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PercOutcome {
    pub survived: bool,
    pub grid: OccupancyGrid,
}

fn child_alive(node: &RngStream, code: u64, p: f64) -> Option<RngStream> {
    let child = node.derive(code);
    (child.clone().next_f64() < p).then_some(child)
}

/// Live cells at `params.depth`, built level by level from the root.
pub fn percolate(params: &PercParams, replica: &RngStream, cap_bits: u128) -> Result<PercOutcome> {
    let d = params.d;
    let mut grid = OccupancyGrid::isotropic(d, params.depth, cap_bits)?;
    let mut frontier: Vec<(Vec<u64>, RngStream)> = vec![(vec![0; d], replica.clone())];
    for _ in 0..params.depth {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for (idx, node) in &frontier {
            for code in 0..params.arity() {
                if let Some(child) = child_alive(node, code, params.p) {
                    let cidx = idx
                        .iter()
                        .enumerate()
                        .map(|(i, v)| (v << 1) | (code >> i & 1))
                        .collect();
                    next.push((cidx, child));
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    for (idx, _) in &frontier {
        grid.set(idx);
    }
    Ok(PercOutcome {
        survived: !frontier.is_empty(),
        grid,
    })
}

/// Whether some cell at `depth` survives; depth-first with early exit, so
/// deep trees are cheap.
pub fn survives(params: &PercParams, depth: u32, replica: &RngStream) -> bool {
    let mut stack: Vec<(u32, RngStream)> = vec![(0, replica.clone())];
    while let Some((level, node)) = stack.pop() {
        if level == depth {
            return true;
        }
        for code in (0..params.arity()).rev() {
            if let Some(child) = child_alive(&node, code, params.p) {
                stack.push((level + 1, child));
            }
        }
    }
    false
}

/// Smallest fixed point of `q = (1 - p + p q)^arity`.
pub fn extinction_prob_oracle(p: f64, arity: u32) -> f64 {
    assert!(arity >= 2, "arity must be at least 2");
    if p * f64::from(arity) <= 1.0 {
        return 1.0;
    }
    let mut q = 0.0f64;
    for _ in 0..10_000_000 {
        let next = math::powf(1.0 - p + p * q, f64::from(arity));
        if (next - q).abs() < 1e-15 {
            return next;
        }
        q = next;
    }
    q
}

#[derive(Debug, Clone, PartialEq)]
pub struct PercReport {
    pub replicas: u64,
    /// Replicas where the survivors meet the set.
    pub hits: u64,
    pub frequency: f64,
    pub ci: (f64, f64),
    pub dims: DimReport,
}

/// Intersects survivors with `e` in every replica.
pub fn perc_intersect_dim<X: ReplicaExecutor>(
    params: &PercParams,
    e: &OccupancyGrid,
    replicas: u64,
    seed: u64,
    exec: &X,
) -> Result<PercReport> {
    if replicas == 0 {
        return Err(Error::invalid("replicas", "need at least one replica"));
    }
    if e.dim() != params.d || e.isotropic_depth() != Some(params.depth) {
        return Err(Error::ShapeMismatch(format!(
            "set grid depths {:?} do not match d = {}, depth {}",
            e.depths(),
            params.d,
            params.depth
        )));
    }
    let (jmin, jmax) = default_scales(params.depth);
    let rows = exec.map(replicas, |i| -> Result<Option<DimEstimate>> {
        let out = percolate(params, &replica_stream(seed, i), u128::MAX)?;
        let both = out.grid.and(e)?;
        match box_dim_estimate(&both, jmin, jmax) {
            Ok(est) => Ok(Some(est)),
            Err(Error::EmptySet) => Ok(None),
            Err(err) => Err(err),
        }
    });
    let per_replica = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let dims = DimReport::from_rows(per_replica);
    Ok(PercReport {
        replicas,
        hits: dims.nonempty,
        frequency: dims.nonempty as f64 / replicas as f64,
        ci: stats::wilson_interval(dims.nonempty, replicas, WILSON_Z95),
        dims,
    })
}
