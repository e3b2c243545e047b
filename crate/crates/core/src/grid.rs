//! Bitset occupancy grids over dyadic cells of the torus.
//!
//! A grid has a depth `m_i` per coordinate, so `2^{Σ m_i}` cells. Cell
//! `(i_0, .., i_{d-1})` is stored at the row-major linear index with the last
//! coordinate varying fastest.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{GeneratingShape, TorusPoint};
use crate::math;

/// Default memory cap: 2^31 bits (256 MiB).
pub const DEFAULT_GRID_CAP_BITS: u128 = 1 << 31;

#[derive(Clone, PartialEq, Eq)]
pub struct OccupancyGrid {
    depths: Vec<u32>,
    total_bits: u32,
    words: Vec<u64>,
}

impl core::fmt::Debug for OccupancyGrid {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("OccupancyGrid")
            .field("depths", &self.depths)
            .field("occupied", &self.count())
            .finish()
    }
}

impl OccupancyGrid {
    /// Empty grid with per-coordinate depths.
    pub fn new(depths: Vec<u32>, cap_bits: u128) -> Result<Self> {
        if depths.is_empty() {
            return Err(Error::UnsupportedDimension(0));
        }
        let total: u32 = depths.iter().sum();
        let bits = 1u128.checked_shl(total).unwrap_or(u128::MAX);
        if total >= 64 || bits > cap_bits {
            return Err(Error::GridTooLarge {
                bits,
                cap: cap_bits,
            });
        }
        let words = vec![0u64; (bits as usize).div_ceil(64)];
        Ok(Self {
            depths,
            total_bits: total,
            words,
        })
    }

    pub fn isotropic(d: usize, depth: u32, cap_bits: u128) -> Result<Self> {
        Self::new(vec![depth; d], cap_bits)
    }

    pub fn full(depths: Vec<u32>, cap_bits: u128) -> Result<Self> {
        let mut g = Self::new(depths, cap_bits)?;
        let n = g.num_cells();
        for w in g.words.iter_mut() {
            *w = u64::MAX;
        }
        if n % 64 != 0 {
            let last = g.words.len() - 1;
            g.words[last] = (1u64 << (n % 64)) - 1;
        }
        Ok(g)
    }

    /// Product grid: a cell is set iff its index along every coordinate
    /// belongs to the corresponding list.
    pub fn from_product(depths: Vec<u32>, per_axis: &[Vec<u64>], cap_bits: u128) -> Result<Self> {
        if per_axis.len() != depths.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} index lists for {} coordinates",
                per_axis.len(),
                depths.len()
            )));
        }
        let mut g = Self::new(depths, cap_bits)?;
        if per_axis.iter().any(|v| v.is_empty()) {
            return Ok(g);
        }
        let mut odometer = vec![0usize; per_axis.len()];
        let mut idx = vec![0u64; per_axis.len()];
        loop {
            for (k, o) in odometer.iter().enumerate() {
                idx[k] = per_axis[k][*o];
            }
            g.set(&idx);
            let mut k = per_axis.len();
            loop {
                if k == 0 {
                    return Ok(g);
                }
                k -= 1;
                odometer[k] += 1;
                if odometer[k] < per_axis[k].len() {
                    break;
                }
                odometer[k] = 0;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.depths.len()
    }

    pub fn depths(&self) -> &[u32] {
        &self.depths
    }

    /// Common depth when all coordinates share it.
    pub fn isotropic_depth(&self) -> Option<u32> {
        let m = self.depths[0];
        self.depths.iter().all(|&x| x == m).then_some(m)
    }

    pub fn num_cells(&self) -> u64 {
        1u64 << self.total_bits
    }

    pub fn linear_index(&self, idx: &[u64]) -> u64 {
        debug_assert_eq!(idx.len(), self.dim());
        idx.iter()
            .zip(&self.depths)
            .fold(0u64, |acc, (i, m)| (acc << m) | (i & ((1u64 << m) - 1)))
    }

    pub fn cell_of_linear(&self, mut lin: u64) -> Vec<u64> {
        let mut idx = vec![0u64; self.dim()];
        for k in (0..self.dim()).rev() {
            let m = self.depths[k];
            idx[k] = lin & ((1u64 << m) - 1);
            lin >>= m;
        }
        idx
    }

    #[inline]
    pub fn set_linear(&mut self, lin: u64) {
        self.words[(lin >> 6) as usize] |= 1u64 << (lin & 63);
    }

    #[inline]
    pub fn get_linear(&self, lin: u64) -> bool {
        self.words[(lin >> 6) as usize] >> (lin & 63) & 1 == 1
    }

    pub fn set(&mut self, idx: &[u64]) {
        let lin = self.linear_index(idx);
        self.set_linear(lin);
    }

    pub fn get(&self, idx: &[u64]) -> bool {
        self.get_linear(self.linear_index(idx))
    }

    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.depths != other.depths {
            return Err(Error::ShapeMismatch(format!(
                "depths {:?} vs {:?}",
                self.depths, other.depths
            )));
        }
        Ok(())
    }

    pub fn and_assign(&mut self, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        self.words
            .iter_mut()
            .zip(&other.words)
            .for_each(|(a, b)| *a &= *b);
        Ok(())
    }

    pub fn or_assign(&mut self, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        self.words
            .iter_mut()
            .zip(&other.words)
            .for_each(|(a, b)| *a |= *b);
        Ok(())
    }

    pub fn and(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.and_assign(other)?;
        Ok(out)
    }

    /// Whether the two grids share an occupied cell.
    pub fn intersects(&self, other: &Self) -> Result<bool> {
        self.check_same_shape(other)?;
        Ok(self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0))
    }

    pub fn is_subset_of(&self, other: &Self) -> Result<bool> {
        self.check_same_shape(other)?;
        Ok(self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0))
    }

    /// Linear indices of occupied cells in increasing order.
    pub fn iter_occupied(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            core::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros();
                bits &= bits - 1;
                Some(((wi as u64) << 6) | u64::from(tz))
            })
        })
    }

    /// Grid at coarser per-coordinate depths; a coarse cell is occupied iff
    /// some child is.
    pub fn coarsen_to(&self, depths: &[u32]) -> Result<Self> {
        if depths.len() != self.dim() || depths.iter().zip(&self.depths).any(|(a, b)| a > b) {
            return Err(Error::ShapeMismatch(format!(
                "cannot coarsen depths {:?} to {:?}",
                self.depths, depths
            )));
        }
        let mut out = Self::new(depths.to_vec(), u128::MAX)?;
        let shifts: Vec<u32> = self.depths.iter().zip(depths).map(|(a, b)| a - b).collect();
        for lin in self.iter_occupied() {
            let mut idx = self.cell_of_linear(lin);
            for (i, s) in idx.iter_mut().zip(&shifts) {
                *i >>= s;
            }
            out.set(&idx);
        }
        Ok(out)
    }

    /// Occupied-cell counts `N_j` after isotropic coarsening to each depth
    /// `j` in `jmin..=jmax`.
    pub fn counts_by_depth(&self, jmin: u32, jmax: u32) -> Result<Vec<(u32, u64)>> {
        let m = self.isotropic_depth().ok_or_else(|| {
            Error::ShapeMismatch(format!("grid depths {:?} are not isotropic", self.depths))
        })?;
        if jmin > jmax || jmax > m {
            return Err(Error::invalid(
                "scales",
                format!("need jmin <= jmax <= {m}, got [{jmin}, {jmax}]"),
            ));
        }
        let d = self.dim();
        let mut out = Vec::with_capacity((jmax - jmin + 1) as usize);
        let mut level = self.coarsen_to(&vec![jmax; d])?;
        let mut j = jmax;
        loop {
            out.push((j, level.count()));
            if j == jmin {
                break;
            }
            j -= 1;
            level = level.coarsen_to(&vec![j; d])?;
        }
        out.reverse();
        Ok(out)
    }

    /// Marks every cell whose closure meets the closed shape placed at `x`.
    pub fn rasterize_shape(&mut self, shape: &GeneratingShape, x: &TorusPoint) {
        let d = self.dim();
        assert!(shape.dim() == d && x.dim() == d, "dimension mismatch");
        let ext = shape.extent();
        let mut lo_idx = vec![0i64; d];
        let mut hi_idx = vec![0i64; d];
        let mut width = vec![0.0; d];
        for k in 0..d {
            let w = math::dyadic(self.depths[k]);
            width[k] = w;
            let c = x.coords()[k] + 0.5;
            lo_idx[k] = math::ceil((c - ext[k]) / w) as i64 - 1;
            hi_idx[k] = math::floor((c + ext[k]) / w) as i64;
        }
        let exact_from_ranges = matches!(shape, GeneratingShape::AxisRect { .. });
        let mut cur = lo_idx.clone();
        let mut rel_lo = vec![0.0; d];
        let mut rel_hi = vec![0.0; d];
        let mut wrapped = vec![0u64; d];
        loop {
            for k in 0..d {
                let side = 1i64 << self.depths[k];
                wrapped[k] = cur[k].rem_euclid(side) as u64;
                rel_lo[k] = -0.5 + cur[k] as f64 * width[k] - x.coords()[k];
                rel_hi[k] = rel_lo[k] + width[k];
            }
            if exact_from_ranges || shape.intersects_box(&rel_lo, &rel_hi) {
                self.set(&wrapped);
            }
            let mut k = d;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                cur[k] += 1;
                if cur[k] <= hi_idx[k] {
                    break;
                }
                cur[k] = lo_idx[k];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{shape_cell_intersects, wrap, DyadicCell, Rotation, SnowflakeExponents};

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            OccupancyGrid::isotropic(2, 16, DEFAULT_GRID_CAP_BITS),
            Err(Error::GridTooLarge { .. })
        ));
        assert!(OccupancyGrid::isotropic(2, 15, DEFAULT_GRID_CAP_BITS).is_ok());
        assert!(OccupancyGrid::isotropic(1, 31, DEFAULT_GRID_CAP_BITS).is_ok());
    }

    #[test]
    fn linear_roundtrip_and_count() {
        let mut g = OccupancyGrid::new(vec![3, 2], DEFAULT_GRID_CAP_BITS).unwrap();
        g.set(&[5, 1]);
        g.set(&[0, 3]);
        assert_eq!(g.count(), 2);
        assert!(g.get(&[5, 1]));
        let lin = g.linear_index(&[5, 1]);
        assert_eq!(g.cell_of_linear(lin), vec![5, 1]);
        let occ: Vec<u64> = g.iter_occupied().collect();
        assert_eq!(occ.len(), 2);
    }

    #[test]
    fn full_grid_counts() {
        let g = OccupancyGrid::full(vec![5], DEFAULT_GRID_CAP_BITS).unwrap();
        assert_eq!(g.count(), 32);
        let counts = g.counts_by_depth(0, 5).unwrap();
        for (j, n) in counts {
            assert_eq!(n, 1 << j);
        }
        let g2 = OccupancyGrid::full(vec![4, 4], DEFAULT_GRID_CAP_BITS).unwrap();
        assert_eq!(g2.count(), 256);
    }

    #[test]
    fn coarsen_matches_children() {
        let mut g = OccupancyGrid::isotropic(2, 4, DEFAULT_GRID_CAP_BITS).unwrap();
        g.set(&[3, 9]);
        g.set(&[2, 8]);
        g.set(&[15, 0]);
        let c = g.coarsen_to(&[2, 2]).unwrap();
        assert_eq!(c.count(), 2);
        assert!(c.get(&[0, 2]) && c.get(&[3, 0]));
        assert!(g.coarsen_to(&[5, 2]).is_err());
    }

    #[test]
    fn shape_mismatch() {
        let a = OccupancyGrid::isotropic(1, 4, DEFAULT_GRID_CAP_BITS).unwrap();
        let b = OccupancyGrid::isotropic(1, 5, DEFAULT_GRID_CAP_BITS).unwrap();
        assert!(a.intersects(&b).is_err());
    }

    fn rasterize_vs_predicate(shape: &GeneratingShape, x: &[f64], depth: u32) {
        let d = x.len();
        let xp = wrap(x);
        let mut g = OccupancyGrid::isotropic(d, depth, DEFAULT_GRID_CAP_BITS).unwrap();
        g.rasterize_shape(shape, &xp);
        for lin in 0..g.num_cells() {
            let cell = DyadicCell::isotropic(depth, g.cell_of_linear(lin));
            assert_eq!(
                g.get_linear(lin),
                shape_cell_intersects(shape, &xp, &cell),
                "cell {:?} for {shape:?} at {x:?}",
                cell.index
            );
        }
    }

    #[test]
    fn rasterization_agrees_with_cell_predicate() {
        let h = SnowflakeExponents::new(vec![1.0, 0.5]).unwrap();
        rasterize_vs_predicate(&GeneratingShape::ball(1, 0.1).unwrap(), &[0.45], 3);
        rasterize_vs_predicate(&GeneratingShape::ball(2, 0.13).unwrap(), &[-0.47, 0.2], 5);
        rasterize_vs_predicate(&GeneratingShape::axis_rect(h.clone(), 0.3).unwrap(), &[0.49, -0.49], 4);
        rasterize_vs_predicate(
            &GeneratingShape::rotated_rect(h, 0.35, Rotation::planar(1.1, true)).unwrap(),
            &[0.3, 0.44],
            5,
        );
    }

    #[test]
    fn product_grid() {
        let g = OccupancyGrid::from_product(vec![2, 3], &[vec![1, 2], vec![0, 5, 7]], DEFAULT_GRID_CAP_BITS)
            .unwrap();
        assert_eq!(g.count(), 6);
        assert!(g.get(&[2, 7]) && !g.get(&[0, 0]));
    }
}
