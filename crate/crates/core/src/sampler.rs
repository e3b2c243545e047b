//! Counter-based, path-keyed random streams.
//!
//! A stream is a 64-bit key plus a counter; output `i` is a SplitMix64
//! finalizer applied to `key + (i + 1) * γ`. Child streams hash the parent
//! key with a child index, so a stream is fixed by `(seed, path)` alone and
//! does not depend on how many other streams were consumed before it.

use alloc::vec;

use crate::error::{Error, Result};
use crate::geometry::{Rotation, TorusPoint};
use crate::math;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    key: u64,
    counter: u64,
}

impl RngStream {
    /// Root stream for a master seed.
    pub fn root(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ 0x6A09_E667_F3BC_C909),
            counter: 0,
        }
    }

    /// Stream at `path` below the root of `seed`, e.g. `[replica, k, n]`.
    pub fn at_path(seed: u64, path: &[u64]) -> Self {
        path.iter().fold(Self::root(seed), |s, &c| s.derive(c))
    }

    /// Child stream; depends only on this stream's key and `child`.
    pub fn derive(&self, child: u64) -> Self {
        let salt = mix64(child.wrapping_add(0x632B_E59B_D9B4_E019));
        Self {
            key: mix64(self.key.wrapping_mul(0xD134_2543_DE82_EF95) ^ salt),
            counter: 0,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_bool(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    /// Standard normal via Box-Muller.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        math::sqrt(-2.0 * math::ln(u1)) * math::cos(core::f64::consts::TAU * u2)
    }
}

/// Uniform point of `[-1/2, 1/2)^d`, independent coordinates.
pub fn uniform_point(stream: &mut RngStream, d: usize) -> TorusPoint {
    let coords: alloc::vec::Vec<f64> = (0..d).map(|_| stream.next_f64() - 0.5).collect();
    crate::geometry::wrap(&coords)
}

/// Haar-distributed element of `O(d)` for `d ∈ {2, 3}`, reflections included.
pub fn haar_rotation(stream: &mut RngStream, d: usize) -> Result<Rotation> {
    match d {
        2 => {
            let angle = core::f64::consts::TAU * stream.next_f64();
            Ok(Rotation::planar(angle, stream.next_bool()))
        }
        3 => {
            // Gram-Schmidt on a Gaussian matrix gives positive diagonal R, so
            // Q is Haar on O(3); the coin then flips the last axis.
            let mut cols = [[0.0f64; 3]; 3];
            for col in cols.iter_mut() {
                for v in col.iter_mut() {
                    *v = stream.next_gaussian();
                }
            }
            for j in 0..3 {
                // Two projection passes keep the columns orthogonal to
                // rounding level.
                for _ in 0..2 {
                    for i in 0..j {
                        let dot: f64 = (0..3).map(|k| cols[j][k] * cols[i][k]).sum();
                        for k in 0..3 {
                            cols[j][k] -= dot * cols[i][k];
                        }
                    }
                }
                let norm = math::sqrt(cols[j].iter().map(|v| v * v).sum());
                for v in cols[j].iter_mut() {
                    *v /= norm;
                }
            }
            if stream.next_bool() {
                for v in cols[2].iter_mut() {
                    *v = -*v;
                }
            }
            let mut m = vec![0.0; 9];
            for (j, col) in cols.iter().enumerate() {
                for (i, v) in col.iter().enumerate() {
                    m[i * 3 + j] = *v;
                }
            }
            Rotation::from_row_major(3, m)
        }
        other => Err(Error::UnsupportedDimension(other)),
    }
}
