//! Target sets `F` with closed-form Hausdorff and packing dimensions.
//!
//! Both families are coordinate products, so rasterization works one axis at
//! a time. Digit Cantor sets live on `[0, 1)` and are carried onto the torus
//! by `u ↦ u − 1/2`, which keeps dyadic cells aligned.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{wrap_coord, SnowflakeExponents};
use crate::grid::OccupancyGrid;
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub enum TargetKind {
    /// Points whose base-`base` digits along coordinate `i` all lie in
    /// `digits[i]`.
    DigitCantor { base: u32, digits: Vec<Vec<u32>> },
    /// Coordinates `fixed[j].0` (0-based) pinned to `fixed[j].1`; all
    /// other coordinates free.
    AffineSlice { d: usize, fixed: Vec<(usize, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    kind: TargetKind,
    dim_h: f64,
    dim_p: f64,
}

impl TargetSet {
    pub fn digit_cantor(base: u32, digits: Vec<Vec<u32>>) -> Result<Self> {
        if base < 2 {
            return Err(Error::invalid("base", format!("must be at least 2, got {base}")));
        }
        if digits.is_empty() {
            return Err(Error::invalid("digits", "need one digit set per coordinate"));
        }
        let mut cleaned = Vec::with_capacity(digits.len());
        for mut set in digits {
            set.sort_unstable();
            set.dedup();
            if set.is_empty() {
                return Err(Error::invalid("digits", "digit sets must be non-empty"));
            }
            if let Some(bad) = set.iter().find(|&&x| x >= base) {
                return Err(Error::invalid(
                    "digits",
                    format!("digit {bad} is not below the base {base}"),
                ));
            }
            cleaned.push(set);
        }
        let dim: f64 = cleaned
            .iter()
            .map(|s| math::ln(s.len() as f64) / math::ln(f64::from(base)))
            .sum();
        Ok(Self {
            kind: TargetKind::DigitCantor {
                base,
                digits: cleaned,
            },
            dim_h: dim,
            dim_p: dim,
        })
    }

    /// Middle-third Cantor set in one dimension.
    pub fn middle_third() -> Self {
        Self::digit_cantor(3, alloc::vec![alloc::vec![0, 2]]).expect("valid digits")
    }

    pub fn affine_slice(d: usize, fixed: Vec<(usize, f64)>) -> Result<Self> {
        if d == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        let mut fixed: Vec<(usize, f64)> = fixed
            .into_iter()
            .map(|(axis, v)| (axis, wrap_coord(v)))
            .collect();
        fixed.sort_by_key(|p| p.0);
        if let Some((axis, _)) = fixed.iter().find(|p| p.0 >= d) {
            return Err(Error::invalid("fixed", format!("axis {axis} is not below d = {d}")));
        }
        if fixed.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("fixed", "an axis is fixed twice"));
        }
        let dim = (d - fixed.len()) as f64;
        Ok(Self {
            kind: TargetKind::AffineSlice { d, fixed },
            dim_h: dim,
            dim_p: dim,
        })
    }

    pub fn full_torus(d: usize) -> Result<Self> {
        Self::affine_slice(d, Vec::new())
    }

    pub fn kind(&self) -> &TargetKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            TargetKind::DigitCantor { digits, .. } => digits.len(),
            TargetKind::AffineSlice { d, .. } => *d,
        }
    }

    /// `(dim_H F, dim_P F)`; equal for both families.
    pub fn dims(&self) -> (f64, f64) {
        (self.dim_h, self.dim_p)
    }

    /// Dimension of each coordinate factor of the product.
    pub fn factor_dims(&self) -> Vec<f64> {
        match &self.kind {
            TargetKind::DigitCantor { base, digits } => digits
                .iter()
                .map(|s| math::ln(s.len() as f64) / math::ln(f64::from(*base)))
                .collect(),
            TargetKind::AffineSlice { d, fixed } => (0..*d)
                .map(|i| if fixed.iter().any(|p| p.0 == i) { 0.0 } else { 1.0 })
                .collect(),
        }
    }

    /// Dimensions under the snowflake metric `κ`: `Σ s_i / H_i` over the
    /// coordinate factors.
    pub fn dims_snowflake(&self, h: &SnowflakeExponents) -> Result<(f64, f64)> {
        if h.dim() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "target is {}-dimensional, exponents {}",
                self.dim(),
                h.dim()
            )));
        }
        let dim: f64 = self
            .factor_dims()
            .iter()
            .zip(h.values())
            .map(|(s, hi)| s / hi)
            .sum();
        Ok((dim, dim))
    }

    /// Indices of the depth-`m` cells along `axis` that `F` occupies.
    pub fn axis_cells(&self, axis: usize, m: u32) -> Vec<u64> {
        match &self.kind {
            TargetKind::DigitCantor { base, digits } => cantor_axis_cells(*base, &digits[axis], m),
            TargetKind::AffineSlice { fixed, .. } => match fixed.iter().find(|p| p.0 == axis) {
                None => (0..1u64 << m).collect(),
                Some(&(_, c)) => point_axis_cells(c, m),
            },
        }
    }

    /// Occupancy grid of `F` at per-coordinate depths.
    pub fn rasterize_with_depths(&self, depths: &[u32], cap_bits: u128) -> Result<OccupancyGrid> {
        if depths.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{} depths for a {}-dimensional target",
                depths.len(),
                self.dim()
            )));
        }
        let per_axis: Vec<Vec<u64>> = depths
            .iter()
            .enumerate()
            .map(|(axis, &m)| self.axis_cells(axis, m))
            .collect();
        OccupancyGrid::from_product(depths.to_vec(), &per_axis, cap_bits)
    }

    pub fn rasterize(&self, depth: u32, cap_bits: u128) -> Result<OccupancyGrid> {
        self.rasterize_with_depths(&alloc::vec![depth; self.dim()], cap_bits)
    }

    /// Box counts in `κ`-adapted grids: at level `j` coordinate `i` is cut
    /// at depth `round(j / H_i)`. Counts are computed per axis and
    /// multiplied, which is exact for product sets.
    pub fn kappa_box_counts(
        &self,
        h: &SnowflakeExponents,
        jmin: u32,
        jmax: u32,
    ) -> Result<Vec<(u32, u64)>> {
        if h.dim() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "target is {}-dimensional, exponents {}",
                self.dim(),
                h.dim()
            )));
        }
        let mut out = Vec::new();
        for j in jmin..=jmax {
            let mut n = 1u64;
            for (axis, hi) in h.values().iter().enumerate() {
                let m = kappa_axis_depth(j, *hi);
                n = n.saturating_mul(self.axis_cells(axis, m).len() as u64);
            }
            out.push((j, n));
        }
        Ok(out)
    }
}

/// Per-axis depth matching a `κ`-ball of radius `2^-j`.
pub fn kappa_axis_depth(j: u32, h: f64) -> u32 {
    math::round(f64::from(j) / h) as u32
}

/// Closed cells containing the torus coordinate `c`: one, or two when `c`
/// is a cell boundary.
fn point_axis_cells(c: f64, m: u32) -> Vec<u64> {
    let side = 1u64 << m;
    let scaled = (c + 0.5) * side as f64;
    let j = (math::floor(scaled) as u64).min(side - 1);
    if scaled == math::floor(scaled) {
        let prev = (j + side - 1) % side;
        let mut v = alloc::vec![j, prev];
        v.sort_unstable();
        v.dedup();
        v
    } else {
        alloc::vec![j]
    }
}

fn cantor_axis_cells(base: u32, digits: &[u32], m: u32) -> Vec<u64> {
    if base.is_power_of_two() {
        prefix_cells(base.trailing_zeros(), digits, m)
    } else {
        hull_cover_cells(base, digits, m)
    }
}

/// Exact dyadic rasterization for base `2^q`: the depth-`m` cell of a point
/// is the first `m` bits of its digit string, so the occupied cells are the
/// `m`-bit prefixes of words over `digits`.
fn prefix_cells(q: u32, digits: &[u32], m: u32) -> Vec<u64> {
    let full = m / q;
    let rem = m % q;
    let mut cells: Vec<u64> = alloc::vec![0];
    for _ in 0..full {
        cells = cells
            .iter()
            .flat_map(|&v| digits.iter().map(move |&d| (v << q) | u64::from(d)))
            .collect();
    }
    if rem > 0 {
        let mut tops: Vec<u64> = digits.iter().map(|&d| u64::from(d >> (q - rem))).collect();
        tops.dedup();
        cells = cells
            .iter()
            .flat_map(|&v| tops.iter().map(move |&t| (v << rem) | t))
            .collect();
    }
    cells.sort_unstable();
    cells
}

/// Conservative rasterization for other bases: the closed hull of `F` inside
/// each fine cylinder marks every closed cell it meets. Integer arithmetic
/// keeps boundary contacts exact.
fn hull_cover_cells(base: u32, digits: &[u32], m: u32) -> Vec<u64> {
    let side = 1u64 << m;
    let b = u128::from(base);
    // Cylinders of length b^-L with b^-L <= 2^-m / b^2.
    let mut level = 0u32;
    let mut bl: u128 = 1;
    while bl < (u128::from(side)) * b * b {
        bl *= b;
        level += 1;
    }
    let dmin = u128::from(digits[0]);
    let dmax = u128::from(*digits.last().unwrap());
    let denom = bl * (b - 1);
    let mut marked = alloc::vec![false; side as usize];
    let mut stack: Vec<(u32, u128)> = alloc::vec![(0, 0)];
    while let Some((depth, q)) = stack.pop() {
        if depth < level {
            for &d in digits {
                stack.push((depth + 1, q * b + u128::from(d)));
            }
            continue;
        }
        // Hull [q + dmin/(b-1), q + dmax/(b-1)] / b^L, scaled by denom.
        let lo = q * (b - 1) + dmin;
        let hi = q * (b - 1) + dmax;
        let s = u128::from(side);
        let j_min = (lo * s).div_ceil(denom) as i64 - 1;
        let j_max = (hi * s / denom) as i64;
        for j in j_min..=j_max {
            marked[j.rem_euclid(side as i64) as usize] = true;
        }
    }
    marked
        .iter()
        .enumerate()
        .filter_map(|(i, &on)| on.then_some(i as u64))
        .collect()
}
