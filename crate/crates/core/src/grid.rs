//! Uniform structured grids (1-D to 4-D), sampled fields, finite-difference
//! derivatives, and trapezoid quadrature.
//!
//! Interior nodes use 4th-order central stencils. On decay-boundary grids the
//! closure near the edges falls back to 2nd-order one-sided stencils; every
//! assertion downstream therefore excludes a boundary margin. Periodic grids
//! wrap and keep 4th order everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Boundary policy of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// The domain is a torus; stencils and shifts wrap.
    Periodic,
    /// Fields are assumed negligible at the edges; stencils go one-sided.
    Decay,
}

impl Boundary {
    pub fn as_str(&self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::Decay => "decay",
        }
    }
}

/// Uniform structured grid geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    shape: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    boundary: Boundary,
}

impl Grid {
    pub fn new(shape: Vec<usize>, spacing: Vec<f64>, origin: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if shape.is_empty() || shape.len() > 4 {
            return Err(Error::DegenerateGrid(format!("rank {} not in 1..=4", shape.len())));
        }
        if shape.len() != spacing.len() || shape.len() != origin.len() {
            return Err(Error::GridMismatch("shape/spacing/origin rank disagreement".into()));
        }
        if shape.iter().any(|&n| n < 5) {
            return Err(Error::DegenerateGrid("every axis needs at least 5 nodes".into()));
        }
        if spacing.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::DegenerateGrid("spacing must be positive and finite".into()));
        }
        Ok(Self { shape, spacing, origin, boundary })
    }

    /// 1-D periodic grid over `[x0, x1)` with `n` nodes.
    pub fn periodic_1d(n: usize, x0: f64, x1: f64) -> Result<Self> {
        let h = (x1 - x0) / n as f64;
        Self::new(vec![n], vec![h], vec![x0], Boundary::Periodic)
    }

    /// 1-D decay grid over `[x0, x1]` inclusive with `n` nodes.
    pub fn decay_1d(n: usize, x0: f64, x1: f64) -> Result<Self> {
        let h = (x1 - x0) / (n - 1) as f64;
        Self::new(vec![n], vec![h], vec![x0], Boundary::Decay)
    }

    /// Isotropic n-D decay cube `[x0, x1]^rank` with `n` nodes per axis.
    pub fn decay_cube(rank: usize, n: usize, x0: f64, x1: f64) -> Result<Self> {
        let h = (x1 - x0) / (n - 1) as f64;
        Self::new(vec![n; rank], vec![h; rank], vec![x0; rank], Boundary::Decay)
    }

    /// Isotropic n-D periodic cube `[x0, x1)^rank`.
    pub fn periodic_cube(rank: usize, n: usize, x0: f64, x1: f64) -> Result<Self> {
        let h = (x1 - x0) / n as f64;
        Self::new(vec![n; rank], vec![h; rank], vec![x0; rank], Boundary::Periodic)
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Row-major strides (last axis contiguous).
    pub fn strides(&self) -> Vec<usize> {
        let r = self.rank();
        let mut s = vec![1usize; r];
        for i in (0..r.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.shape[i + 1];
        }
        s
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        let strides = self.strides();
        multi.iter().zip(strides.iter()).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let strides = self.strides();
        let mut rem = flat;
        let mut out = Vec::with_capacity(self.rank());
        for s in strides {
            out.push(rem / s);
            rem %= s;
        }
        out
    }

    /// Index along one axis of a flat node index.
    pub fn axis_coord(&self, flat: usize, axis: usize) -> usize {
        let strides = self.strides();
        (flat / strides[axis]) % self.shape[axis]
    }

    /// Physical coordinates of a node.
    pub fn position(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.origin[a] + self.spacing[a] * i as f64)
            .collect()
    }

    /// Trapezoid quadrature weight of a node (product over axes). Periodic
    /// axes use the plain rectangle weight `h`.
    pub fn node_weight(&self, flat: usize) -> f64 {
        let mut w = 1.0;
        for a in 0..self.rank() {
            let i = self.axis_coord(flat, a);
            let edge = i == 0 || i == self.shape[a] - 1;
            let wa = match self.boundary {
                Boundary::Periodic => self.spacing[a],
                Boundary::Decay => {
                    if edge {
                        0.5 * self.spacing[a]
                    } else {
                        self.spacing[a]
                    }
                }
            };
            w *= wa;
        }
        w
    }

    /// `true` when the node is at least `margin` nodes away from every
    /// non-periodic edge.
    pub fn is_interior(&self, flat: usize, margin: usize) -> bool {
        if self.boundary == Boundary::Periodic {
            return true;
        }
        (0..self.rank()).all(|a| {
            let i = self.axis_coord(flat, a);
            i >= margin && i + margin < self.shape[a]
        })
    }

    pub fn check_compatible(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "shapes {:?} vs {:?}, boundary {} vs {}",
                self.shape,
                other.shape,
                self.boundary.as_str(),
                other.boundary.as_str()
            )));
        }
        Ok(())
    }

    /// Cell volume `prod h_a` (quadrature weight of a bulk node).
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }
}

/// Derivative order selector for the stencil machinery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Deriv {
    First,
    Second,
}

/// Applies the finite-difference stencil along `axis` to a slice of values.
/// `T` covers both real and complex samples.
fn differentiate<T>(grid: &Grid, vals: &[T], axis: usize, which: Deriv) -> Vec<T>
where
    T: Copy
        + std::ops::Add<Output = T>
        + std::ops::Mul<f64, Output = T>
        + num_complex::ComplexFloat<Real = f64>,
{
    let n = grid.shape()[axis];
    let stride = grid.strides()[axis];
    let h = grid.spacing()[axis];
    let len = grid.len();
    let mut out = Vec::with_capacity(len);

    // (offset, coefficient) stencils; divisor applied at the end
    let central: (&[(isize, f64)], f64) = match which {
        Deriv::First => (&[(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)], 12.0 * h),
        Deriv::Second => (&[(-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)], 12.0 * h * h),
    };
    let near_low: (&[(isize, f64)], f64) = match which {
        Deriv::First => (&[(-1, -1.0), (1, 1.0)], 2.0 * h),
        Deriv::Second => (&[(-1, 1.0), (0, -2.0), (1, 1.0)], h * h),
    };
    let at_low: (&[(isize, f64)], f64) = match which {
        Deriv::First => (&[(0, -3.0), (1, 4.0), (2, -1.0)], 2.0 * h),
        Deriv::Second => (&[(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)], h * h),
    };
    let at_high: (&[(isize, f64)], f64) = match which {
        Deriv::First => (&[(0, 3.0), (-1, -4.0), (-2, 1.0)], 2.0 * h),
        Deriv::Second => (&[(0, 2.0), (-1, -5.0), (-2, 4.0), (-3, -1.0)], h * h),
    };

    for flat in 0..len {
        let i = grid.axis_coord(flat, axis) as isize;
        let (stencil, divisor) = match grid.boundary() {
            Boundary::Periodic => central,
            Boundary::Decay => {
                if i >= 2 && i + 2 < n as isize {
                    central
                } else if i == 0 {
                    at_low
                } else if i == n as isize - 1 {
                    at_high
                } else {
                    near_low // offset 1 from either edge: 2nd-order central
                }
            }
        };
        let mut acc: Option<T> = None;
        for &(off, coef) in stencil {
            let j = match grid.boundary() {
                Boundary::Periodic => (i + off).rem_euclid(n as isize) as usize,
                Boundary::Decay => (i + off) as usize,
            };
            let neighbor = flat as isize + (j as isize - i) * stride as isize;
            let term = vals[neighbor as usize] * coef;
            acc = Some(match acc {
                None => term,
                Some(a) => a + term,
            });
        }
        out.push(acc.expect("nonempty stencil") * (1.0 / divisor));
    }
    out
}

/// Real-valued samples on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values on a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        let n = grid.len();
        Self { grid, values: vec![c; n] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.position(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_compatible(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// First derivative along `axis`.
    pub fn derivative(&self, axis: usize) -> Self {
        Self { grid: self.grid.clone(), values: differentiate(&self.grid, &self.values, axis, Deriv::First) }
    }

    /// Second derivative along `axis`.
    pub fn second_derivative(&self, axis: usize) -> Self {
        Self { grid: self.grid.clone(), values: differentiate(&self.grid, &self.values, axis, Deriv::Second) }
    }

    /// Sum of unmixed second derivatives.
    pub fn laplacian(&self) -> Self {
        let mut acc = self.second_derivative(0);
        for a in 1..self.grid.rank() {
            let d = self.second_derivative(a);
            for (x, y) in acc.values.iter_mut().zip(&d.values) {
                *x += *y;
            }
        }
        acc
    }

    /// Trapezoid quadrature of the field over the whole grid.
    pub fn integrate(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| v * self.grid.node_weight(i))
            .sum()
    }

    /// Quadrature of the field restricted to `mask`-true nodes.
    pub fn integrate_masked(&self, mask: &[bool]) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| mask[*i])
            .map(|(i, &v)| v * self.grid.node_weight(i))
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    /// Max |value| over nodes that are interior by `margin` and mask-true.
    pub fn max_abs_interior(&self, margin: usize, mask: Option<&[bool]>) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.is_interior(*i, margin))
            .filter(|(i, _)| mask.map_or(true, |m| m[*i]))
            .fold(0.0_f64, |m, (_, &v)| m.max(v.abs()))
    }

    /// Quadrature L2 norm `sqrt( int f^2 )` over interior mask-true nodes.
    pub fn l2_norm_interior(&self, margin: usize, mask: Option<&[bool]>) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.is_interior(*i, margin))
            .filter(|(i, _)| mask.map_or(true, |m| m[*i]))
            .map(|(i, &v)| v * v * self.grid.node_weight(i))
            .sum::<f64>()
            .sqrt()
    }

    /// Mask of nodes whose value exceeds `threshold_rel * max`.
    pub fn mask_above(&self, threshold_rel: f64) -> Vec<bool> {
        let cut = threshold_rel * self.max_abs();
        self.values.iter().map(|&v| v.abs() > cut).collect()
    }
}

/// Complex-valued samples on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGridField {
    grid: Grid,
    values: Vec<C64>,
}

impl ComplexGridField {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values on a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> C64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.position(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn derivative(&self, axis: usize) -> Self {
        Self { grid: self.grid.clone(), values: differentiate(&self.grid, &self.values, axis, Deriv::First) }
    }

    pub fn second_derivative(&self, axis: usize) -> Self {
        Self { grid: self.grid.clone(), values: differentiate(&self.grid, &self.values, axis, Deriv::Second) }
    }

    pub fn abs_sq(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.abs_sq().integrate()
    }

    /// Rescales so the quadrature mass of `|psi|^2` is one.
    pub fn normalized(&self) -> Result<Self> {
        let m = self.norm_sq();
        if m <= 0.0 {
            return Err(Error::ZeroVector);
        }
        let s = 1.0 / m.sqrt();
        Ok(Self { grid: self.grid.clone(), values: self.values.iter().map(|z| z * s).collect() })
    }
}

/// Writes a field as CSV (one node per row: coordinates then value) next to a
/// JSON header carrying the grid geometry.
pub fn write_scalar_csv(field: &ScalarField, csv_path: &std::path::Path) -> Result<()> {
    let mut w = csv::Writer::from_path(csv_path)?;
    let rank = field.grid().rank();
    let mut header: Vec<String> = (0..rank).map(|a| format!("x{a}")).collect();
    header.push("value".into());
    w.write_record(&header)?;
    for i in 0..field.grid().len() {
        let mut row: Vec<String> = field.grid().position(i).iter().map(|x| format!("{x}")).collect();
        row.push(format!("{}", field.values()[i]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_grid_header(grid: &Grid, json_path: &std::path::Path) -> Result<()> {
    let s = serde_json::to_string_pretty(grid)?;
    std::fs::write(json_path, s)?;
    Ok(())
}

/// Reads a field written by [`write_scalar_csv`] + [`write_grid_header`].
/// Rows must be in grid order (as written).
pub fn read_scalar_csv(csv_path: &std::path::Path, json_path: &std::path::Path) -> Result<ScalarField> {
    let grid: Grid = serde_json::from_str(&std::fs::read_to_string(json_path)?)?;
    let mut r = csv::Reader::from_path(csv_path)?;
    let rank = grid.rank();
    let mut values = Vec::with_capacity(grid.len());
    for rec in r.records() {
        let rec = rec?;
        let v: f64 = rec
            .get(rank)
            .ok_or_else(|| Error::InvalidConfig("missing value column".into()))?
            .parse()
            .map_err(|e| Error::InvalidConfig(format!("bad value: {e}")))?;
        values.push(v);
    }
    ScalarField::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn index_round_trip() {
        let g = Grid::new(vec![5, 7, 6], vec![0.1, 0.2, 0.3], vec![0.0, -1.0, 2.0], Boundary::Decay).unwrap();
        for flat in [0, 1, 29, 41, 5 * 7 * 6 - 1] {
            let multi = g.multi_index(flat);
            assert_eq!(g.flat_index(&multi), flat);
            for a in 0..3 {
                assert_eq!(g.axis_coord(flat, a), multi[a]);
            }
        }
    }

    #[test]
    fn periodic_derivative_is_fourth_order() {
        let err_at = |n: usize| {
            let g = Grid::periodic_1d(n, 0.0, 2.0 * std::f64::consts::PI).unwrap();
            let f = ScalarField::from_fn(g, |x| x[0].sin());
            let d = f.derivative(0);
            (0..d.grid().len())
                .map(|i| (d.values()[i] - d.grid().position(i)[0].cos()).abs())
                .fold(0.0_f64, f64::max)
        };
        let e1 = err_at(32);
        let e2 = err_at(64);
        let order = (e1 / e2).log2();
        assert!(order > 3.7, "observed order {order}");
    }

    #[test]
    fn decay_interior_second_derivative_is_fourth_order() {
        let err_at = |n: usize| {
            let g = Grid::decay_1d(n, -8.0, 8.0).unwrap();
            let f = ScalarField::from_fn(g, |x| (-x[0] * x[0] / 2.0).exp());
            let d = f.second_derivative(0);
            (0..d.grid().len())
                .filter(|&i| d.grid().is_interior(i, 2))
                .map(|i| {
                    let x = d.grid().position(i)[0];
                    let exact = (x * x - 1.0) * (-x * x / 2.0).exp();
                    (d.values()[i] - exact).abs()
                })
                .fold(0.0_f64, f64::max)
        };
        let e1 = err_at(128);
        let e2 = err_at(256);
        let order = (e1 / e2).log2();
        assert!(order > 3.6, "observed order {order}");
    }

    #[test]
    fn gaussian_mass_integrates_to_one() {
        let g = Grid::decay_1d(512, -10.0, 10.0).unwrap();
        let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let f = ScalarField::from_fn(g, |x| norm * (-x[0] * x[0] / 2.0).exp());
        assert_abs_diff_eq!(f.integrate(), 1.0, epsilon = 1e-10);

        // 2-D isotropic Gaussian
        let g2 = Grid::decay_cube(2, 96, -8.0, 8.0).unwrap();
        let f2 = ScalarField::from_fn(g2, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            (-r2 / 2.0).exp() / (2.0 * std::f64::consts::PI)
        });
        assert_abs_diff_eq!(f2.integrate(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn complex_derivative_matches_parts() {
        let g = Grid::periodic_1d(64, 0.0, 2.0 * std::f64::consts::PI).unwrap();
        let f = ComplexGridField::from_fn(g.clone(), |x| C64::new(x[0].sin(), x[0].cos()));
        let d = f.derivative(0);
        let re = ScalarField::from_fn(g.clone(), |x| x[0].sin()).derivative(0);
        let im = ScalarField::from_fn(g, |x| x[0].cos()).derivative(0);
        for i in 0..d.grid().len() {
            assert_abs_diff_eq!(d.values()[i].re, re.values()[i], epsilon = 1e-14);
            assert_abs_diff_eq!(d.values()[i].im, im.values()[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn multi_axis_derivative_2d() {
        let g = Grid::decay_cube(2, 96, -6.0, 6.0).unwrap();
        let f = ScalarField::from_fn(g, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1]) / 2.0).exp());
        let dx = f.derivative(0);
        let dy = f.derivative(1);
        for i in 0..f.grid().len() {
            if !f.grid().is_interior(i, 2) {
                continue;
            }
            let p = f.grid().position(i);
            let v = f.values()[i];
            assert!((dx.values()[i] - (-p[0]) * v).abs() < 1e-3);
            assert!((dy.values()[i] - (-2.0 * p[1]) * v).abs() < 1e-3);
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join("qgeo_grid_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let g = Grid::decay_cube(2, 8, -1.0, 1.0).unwrap();
        let f = ScalarField::from_fn(g.clone(), |x| x[0] * 1.7 + x[1] * 0.3 + 0.123456789012345);
        let csv_path = dir.join("field.csv");
        let json_path = dir.join("field.json");
        write_scalar_csv(&f, &csv_path).unwrap();
        write_grid_header(&g, &json_path).unwrap();
        let back = read_scalar_csv(&csv_path, &json_path).unwrap();
        assert_eq!(back.grid(), f.grid());
        for (a, b) in back.values().iter().zip(f.values()) {
            let rel = (a - b).abs() / b.abs().max(1e-300);
            assert!(rel < 1e-15, "round trip rel error {rel}");
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(Grid::new(vec![4], vec![0.1], vec![0.0], Boundary::Decay).is_err());
        assert!(Grid::new(vec![8], vec![-0.1], vec![0.0], Boundary::Decay).is_err());
        assert!(Grid::new(vec![8, 8], vec![0.1], vec![0.0], Boundary::Decay).is_err());
        assert!(ScalarField::new(Grid::decay_1d(8, 0.0, 1.0).unwrap(), vec![0.0; 7]).is_err());
    }
}
