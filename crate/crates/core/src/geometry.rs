//! Torus arithmetic on `[-1/2, 1/2)^d`, generating shapes, the snowflake
//! metric `κ` and exact shape/cell intersection predicates.
//!
//! Shapes and cells are both closed: touching boundaries count as an
//! intersection. Every wrap-around decision goes through [`wrap_coord`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Tolerance for `‖RᵀR − I‖_max`.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

/// Reduces one coordinate modulo 1 into `[-1/2, 1/2)`.
#[inline]
pub fn wrap_coord(x: f64) -> f64 {
    let y = x - math::floor(x + 0.5);
    if y >= 0.5 {
        y - 1.0
    } else {
        y
    }
}

/// Distance between two points of the circle `T^1`, in `[0, 1/2]`.
#[inline]
pub fn circle_dist(a: f64, b: f64) -> f64 {
    wrap_coord(a - b).abs()
}

/// A point of the torus, always wrap-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn origin(d: usize) -> Self {
        Self {
            coords: vec![0.0; d],
        }
    }

    /// Translation by an arbitrary vector, wrapped back onto the torus.
    pub fn translate(&self, v: &[f64]) -> Self {
        assert_eq!(v.len(), self.dim(), "dimension mismatch");
        let moved: Vec<f64> = self.coords.iter().zip(v).map(|(a, b)| a + b).collect();
        wrap(&moved)
    }
}

/// Maps an arbitrary vector onto the torus.
pub fn wrap(v: &[f64]) -> TorusPoint {
    TorusPoint {
        coords: v.iter().map(|&x| wrap_coord(x)).collect(),
    }
}

/// Exponents `1 = H_1 >= H_2 >= ... >= H_d > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnowflakeExponents {
    h: Vec<f64>,
}

impl SnowflakeExponents {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::invalid("H", "need at least one exponent"));
        }
        if (h[0] - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("H", format!("H_1 must be 1, got {}", h[0])));
        }
        if let Some(bad) = h.iter().find(|x| !(**x > 0.0)) {
            return Err(Error::invalid("H", format!("exponent {bad} is not positive")));
        }
        if h.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::invalid("H", "exponents must be non-increasing"));
        }
        let mut h = h;
        h[0] = 1.0;
        Ok(Self { h })
    }

    /// All exponents equal to one: squares, i.e. balls of the max metric.
    pub fn isotropic(d: usize) -> Self {
        Self { h: vec![1.0; d] }
    }

    pub fn values(&self) -> &[f64] {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    /// Regularity exponent `t = Σ 1/H_i` of the torus under `κ`.
    pub fn regularity(&self) -> f64 {
        self.h.iter().map(|h| 1.0 / h).sum()
    }

    /// Side lengths `r^(1/H_i)` of the rectangle of "radius" `r`.
    pub fn side_lengths(&self, r: f64) -> Vec<f64> {
        self.h.iter().map(|h| math::powf(r, 1.0 / h)).collect()
    }
}

/// `κ(x, y) = max_i 2^{H_i} |x_i − y_i|^{H_i}` with torus distances.
pub fn kappa_dist(x: &TorusPoint, y: &TorusPoint, h: &SnowflakeExponents) -> f64 {
    assert!(
        x.dim() == y.dim() && x.dim() == h.dim(),
        "dimension mismatch"
    );
    x.coords
        .iter()
        .zip(&y.coords)
        .zip(h.values())
        .map(|((a, b), hi)| math::powf(2.0, *hi) * math::powf(circle_dist(*a, *b), *hi))
        .fold(0.0, f64::max)
}

/// Closed axis-parallel box `center ± half_sides` on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    pub center: TorusPoint,
    pub half_sides: Vec<f64>,
}

impl AxisBox {
    pub fn side_lengths(&self) -> Vec<f64> {
        self.half_sides.iter().map(|h| 2.0 * h).collect()
    }

    pub fn contains(&self, y: &TorusPoint) -> bool {
        self.center
            .coords()
            .iter()
            .zip(y.coords())
            .zip(&self.half_sides)
            .all(|((c, p), h)| circle_dist(*c, *p) <= *h)
    }
}

/// The closed `κ`-ball of radius `r`, written as the box with sides
/// `r^(1/H_i)`.
pub fn kappa_ball_as_rect(center: &TorusPoint, r: f64, h: &SnowflakeExponents) -> Result<AxisBox> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::invalid("r", format!("must lie in (0, 1), got {r}")));
    }
    if center.dim() != h.dim() {
        return Err(Error::ShapeMismatch(format!(
            "center has dimension {}, exponents {}",
            center.dim(),
            h.dim()
        )));
    }
    Ok(AxisBox {
        center: center.clone(),
        half_sides: h.side_lengths(r).into_iter().map(|s| s / 2.0).collect(),
    })
}

/// Orthogonal `d × d` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    d: usize,
    m: Vec<f64>,
}

impl Rotation {
    pub fn identity(d: usize) -> Self {
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = 1.0;
        }
        Self { d, m }
    }

    pub fn from_row_major(d: usize, m: Vec<f64>) -> Result<Self> {
        if m.len() != d * d {
            return Err(Error::invalid("rotation", "matrix has the wrong size"));
        }
        let rot = Self { d, m };
        let err = rot.orthogonality_error();
        if !(err <= ORTHOGONALITY_TOL) {
            return Err(Error::invalid(
                "rotation",
                format!("‖RᵀR − I‖_max = {err:e} exceeds {ORTHOGONALITY_TOL:e}"),
            ));
        }
        Ok(rot)
    }

    /// Rotation of the plane by `angle`, optionally followed by the
    /// reflection of the second axis.
    pub fn planar(angle: f64, reflect: bool) -> Self {
        let (s, c) = (math::sin(angle), math::cos(angle));
        let m = if reflect {
            vec![c, s, s, -c]
        } else {
            vec![c, -s, s, c]
        };
        Self { d: 2, m }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.m[row * self.d + col]
    }

    pub fn orthogonality_error(&self) -> f64 {
        let d = self.d;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let dot: f64 = (0..d).map(|k| self.get(k, i) * self.get(k, j)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    pub fn determinant(&self) -> f64 {
        match self.d {
            1 => self.m[0],
            2 => self.m[0] * self.m[3] - self.m[1] * self.m[2],
            3 => {
                let g = |r, c| self.get(r, c);
                g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1))
                    - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
                    + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0))
            }
            _ => {
                // Gaussian elimination with partial pivoting.
                let d = self.d;
                let mut a = self.m.clone();
                let mut det = 1.0;
                for col in 0..d {
                    let pivot = (col..d)
                        .max_by(|&x, &y| a[x * d + col].abs().total_cmp(&a[y * d + col].abs()))
                        .unwrap();
                    if a[pivot * d + col] == 0.0 {
                        return 0.0;
                    }
                    if pivot != col {
                        for k in 0..d {
                            a.swap(pivot * d + k, col * d + k);
                        }
                        det = -det;
                    }
                    det *= a[col * d + col];
                    for r in col + 1..d {
                        let f = a[r * d + col] / a[col * d + col];
                        for k in col..d {
                            a[r * d + k] -= f * a[col * d + k];
                        }
                    }
                }
                det
            }
        }
    }

    /// `R v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.d)
            .map(|i| (0..self.d).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// `Rᵀ v`.
    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        (0..self.d)
            .map(|i| (0..self.d).map(|j| self.get(j, i) * v[j]).sum())
            .collect()
    }
}

/// The generating set `A_n`, centred at the origin before placement.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratingShape {
    Ball {
        d: usize,
        radius: f64,
    },
    /// Axis-parallel rectangle with sides `radius^(1/H_i)`.
    AxisRect {
        exps: SnowflakeExponents,
        radius: f64,
        half_sides: Vec<f64>,
    },
    /// The same rectangle after an orthogonal map; the columns of
    /// `rotation` are the rectangle's axes.
    RotatedRect {
        exps: SnowflakeExponents,
        radius: f64,
        half_sides: Vec<f64>,
        rotation: Rotation,
    },
}

impl GeneratingShape {
    /// Closed Euclidean ball; `radius < 1/2` so the placed ball does not
    /// wrap onto itself.
    pub fn ball(d: usize, radius: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        if !(radius > 0.0 && radius < 0.5) {
            return Err(Error::invalid(
                "radius",
                format!("ball radius must lie in (0, 1/2), got {radius}"),
            ));
        }
        Ok(GeneratingShape::Ball { d, radius })
    }

    pub fn axis_rect(exps: SnowflakeExponents, radius: f64) -> Result<Self> {
        let half_sides = rect_half_sides(&exps, radius)?;
        Ok(GeneratingShape::AxisRect {
            exps,
            radius,
            half_sides,
        })
    }

    pub fn rotated_rect(exps: SnowflakeExponents, radius: f64, rotation: Rotation) -> Result<Self> {
        if rotation.dim() != exps.dim() {
            return Err(Error::ShapeMismatch(format!(
                "rotation is {}-dimensional, exponents {}",
                rotation.dim(),
                exps.dim()
            )));
        }
        let half_sides = rect_half_sides(&exps, radius)?;
        Ok(GeneratingShape::RotatedRect {
            exps,
            radius,
            half_sides,
            rotation,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            GeneratingShape::Ball { d, .. } => *d,
            GeneratingShape::AxisRect { exps, .. } | GeneratingShape::RotatedRect { exps, .. } => {
                exps.dim()
            }
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            GeneratingShape::Ball { radius, .. }
            | GeneratingShape::AxisRect { radius, .. }
            | GeneratingShape::RotatedRect { radius, .. } => *radius,
        }
    }

    /// Whether [`GeneratingShape::intersects_box`] is exact. Rotated
    /// rectangles in `d >= 3` use a conservative test.
    pub fn is_exact(&self) -> bool {
        !matches!(self, GeneratingShape::RotatedRect { rotation, .. } if rotation.dim() >= 3)
    }

    /// Half extents of the axis-parallel bounding box.
    pub fn extent(&self) -> Vec<f64> {
        match self {
            GeneratingShape::Ball { d, radius } => vec![*radius; *d],
            GeneratingShape::AxisRect { half_sides, .. } => half_sides.clone(),
            GeneratingShape::RotatedRect {
                half_sides,
                rotation,
                ..
            } => (0..rotation.dim())
                .map(|i| {
                    half_sides
                        .iter()
                        .enumerate()
                        .map(|(j, h)| rotation.get(i, j).abs() * h)
                        .sum()
                })
                .collect(),
        }
    }

    /// Point membership for a point given relative to the shape's centre.
    pub fn contains_local(&self, p: &[f64]) -> bool {
        match self {
            GeneratingShape::Ball { radius, .. } => {
                p.iter().map(|x| x * x).sum::<f64>() <= radius * radius
            }
            GeneratingShape::AxisRect { half_sides, .. } => {
                p.iter().zip(half_sides).all(|(x, h)| x.abs() <= *h)
            }
            GeneratingShape::RotatedRect {
                half_sides,
                rotation,
                ..
            } => rotation
                .apply_transpose(p)
                .iter()
                .zip(half_sides)
                .all(|(u, h)| u.abs() <= *h),
        }
    }

    /// Does the closed shape (centred at the origin of `R^d`) meet the closed
    /// box `[lo, hi]`?
    pub fn intersects_box(&self, lo: &[f64], hi: &[f64]) -> bool {
        match self {
            GeneratingShape::Ball { radius, .. } => {
                let d2: f64 = lo
                    .iter()
                    .zip(hi)
                    .map(|(l, h)| {
                        let gap = if *l > 0.0 {
                            *l
                        } else if *h < 0.0 {
                            -*h
                        } else {
                            0.0
                        };
                        gap * gap
                    })
                    .sum();
                d2 <= radius * radius
            }
            GeneratingShape::AxisRect { half_sides, .. } => lo
                .iter()
                .zip(hi)
                .zip(half_sides)
                .all(|((l, h), s)| *l <= *s && *h >= -*s),
            GeneratingShape::RotatedRect {
                half_sides,
                rotation,
                ..
            } => rotated_box_overlap(rotation, half_sides, lo, hi),
        }
    }
}

fn rect_half_sides(exps: &SnowflakeExponents, radius: f64) -> Result<Vec<f64>> {
    if !(radius > 0.0 && radius < 1.0) {
        return Err(Error::invalid(
            "radius",
            format!("must lie in (0, 1), got {radius}"),
        ));
    }
    let half: Vec<f64> = exps.side_lengths(radius).into_iter().map(|s| s / 2.0).collect();
    let half_diag = math::sqrt(half.iter().map(|h| h * h).sum());
    if !(half_diag < 0.5) {
        return Err(Error::invalid(
            "radius",
            format!("rectangle of radius {radius} does not fit in U(0, 1/2)"),
        ));
    }
    Ok(half)
}

/// Separating-axis test between the box `[lo, hi]` and the rectangle
/// `{R u : |u_i| <= h_i}`. Exact in the plane; in higher dimension only the
/// face normals of both boxes and the bounding ball are tested, which can
/// report an intersection that is not there but never misses one.
fn rotated_box_overlap(rot: &Rotation, half: &[f64], lo: &[f64], hi: &[f64]) -> bool {
    let d = rot.dim();
    // Box face normals: the coordinate axes.
    for i in 0..d {
        let reach: f64 = (0..d).map(|j| rot.get(i, j).abs() * half[j]).sum();
        if lo[i] > reach || hi[i] < -reach {
            return false;
        }
    }
    // Rectangle face normals: the columns of R.
    for j in 0..d {
        let mut centre = 0.0;
        let mut radius = 0.0;
        for i in 0..d {
            let c = 0.5 * (lo[i] + hi[i]);
            let e = 0.5 * (hi[i] - lo[i]);
            centre += c * rot.get(i, j);
            radius += e * rot.get(i, j).abs();
        }
        if centre.abs() > radius + half[j] {
            return false;
        }
    }
    if d >= 3 {
        let r2: f64 = half.iter().map(|h| h * h).sum();
        let d2: f64 = lo
            .iter()
            .zip(hi)
            .map(|(l, h)| {
                let gap = l.max(0.0) + (-h).max(0.0);
                gap * gap
            })
            .sum();
        return d2 <= r2;
    }
    true
}

/// A dyadic cell: per-coordinate depth and index, covering
/// `[-1/2 + i 2^-m, -1/2 + (i+1) 2^-m]` in each coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicCell {
    pub depths: Vec<u32>,
    pub index: Vec<u64>,
}

impl DyadicCell {
    pub fn isotropic(depth: u32, index: Vec<u64>) -> Self {
        Self {
            depths: vec![depth; index.len()],
            index,
        }
    }

    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let lo: Vec<f64> = self
            .index
            .iter()
            .zip(&self.depths)
            .map(|(i, m)| -0.5 + *i as f64 * math::dyadic(*m))
            .collect();
        let hi = lo
            .iter()
            .zip(&self.depths)
            .map(|(l, m)| l + math::dyadic(*m))
            .collect();
        (lo, hi)
    }
}

/// Does `x + shape` (wrapped onto the torus) meet the closed `cell`?
pub fn shape_cell_intersects(shape: &GeneratingShape, x: &TorusPoint, cell: &DyadicCell) -> bool {
    let d = shape.dim();
    assert!(x.dim() == d && cell.index.len() == d, "dimension mismatch");
    let (lo, hi) = cell.bounds();
    // The shape sits inside U(x, 1/2), so translates of the cell by -1, 0, 1
    // in each coordinate cover every image that can meet it.
    let mut rel_lo = vec![0.0; d];
    let mut rel_hi = vec![0.0; d];
    let images = 3usize.pow(d as u32);
    for code in 0..images {
        let mut c = code;
        for i in 0..d {
            let shift = (c % 3) as f64 - 1.0;
            c /= 3;
            rel_lo[i] = lo[i] - x.coords()[i] + shift;
            rel_hi[i] = hi[i] - x.coords()[i] + shift;
        }
        if shape.intersects_box(&rel_lo, &rel_hi) {
            return true;
        }
    }
    false
}
