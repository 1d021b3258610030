//! Weyl-geometry tensor calculus on sampled metrics and gauge covectors:
//! connection, curvature, the scalar decomposition into Riemannian and gauge
//! parts, the density-built gauge, and the quantum-potential <-> curvature
//! identities.
//!
//! Index and sign conventions, fixed once and verified by oracles:
//!
//! - The Weyl connection is returned exactly as
//!   `G^i_{kl} = -{i,kl} + d^i_k phi_l + d^i_l phi_k - g_kl phi^i`
//!   (transplantation convention: `dA^i = G^i_{kl} A^l dq^k`, so the
//!   Riemannian limit is minus the Christoffel symbol).
//! - Covariant derivatives use `D_i A^k = d_i A^k - G^k_{il} A^l` and
//!   `D_i A_k = d_i A_k + G^l_{ki} A_l`; together with the sign built into
//!   `G` these are the standard covariant derivatives, the `phi = 0` limit
//!   is Levi-Civita, and the commutator `[D_k, D_l] A^i = R^i_{mkl} A^m`
//!   holds with the curvature below.
//! - Curvature is oriented so the Riemannian scalar of a 2-sphere of radius
//!   `a` is `+2/a^2` (sphere-positive). In this orientation the scalar
//!   decomposition reads
//!   `R = Rdot - (n-1) [ (n-2) phi_i phi^i - 2 div phi ]`;
//!   the opposite (gauge-bracket-positive) orientation is reported alongside.
//! - The density fast path [`weyl_scalar_from_density`] keeps the printed
//!   form `R = (1/(2 gamma sqrt rho)) g^{ik} d_i d_k sqrt(rho)`, which lives
//!   in the gauge-bracket-positive orientation: it equals minus the
//!   sphere-positive chain value when evaluated at the chain-consistent
//!   coupling [`gamma_chain_consistent`]. The conventional coupling
//!   [`gamma_coupling`] `= (n-2)/(6(n-1))` differs from the chain-consistent
//!   one by the factor 4/3; reports carry both so the discrepancy is
//!   explicit rather than silently absorbed.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher::{DensityGrid, FisherConvention, MASK_REL};
use crate::grid::{Boundary, Grid, ScalarField};
use crate::madelung::{quantum_potential, STRONG_SUPPORT_REL};

/// Dense tensor field: one `dim^rank` block of components per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    grid: Grid,
    dim: usize,
    rank: u8,
    values: Vec<f64>,
}

impl TensorField {
    pub fn zeros(grid: Grid, dim: usize, rank: u8) -> Self {
        let comps = dim.pow(rank as u32);
        let len = grid.len() * comps;
        Self { grid, dim, rank, values: vec![0.0; len] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> u8 {
        self.rank
    }

    pub fn comps(&self) -> usize {
        self.dim.pow(self.rank as u32)
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank as usize);
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, node: usize, idx: &[usize]) -> f64 {
        self.values[node * self.comps() + self.offset(idx)]
    }

    pub fn set(&mut self, node: usize, idx: &[usize], v: f64) {
        let c = self.comps();
        let o = self.offset(idx);
        self.values[node * c + o] = v;
    }

    /// Extracts one component as a scalar field.
    pub fn component(&self, idx: &[usize]) -> ScalarField {
        let c = self.comps();
        let o = self.offset(idx);
        let vals: Vec<f64> = (0..self.grid.len()).map(|n| self.values[n * c + o]).collect();
        ScalarField::new(self.grid.clone(), vals).expect("component length matches grid")
    }

    pub fn set_component(&mut self, idx: &[usize], field: &ScalarField) {
        let c = self.comps();
        let o = self.offset(idx);
        for n in 0..self.grid.len() {
            self.values[n * c + o] = field.values()[n];
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }
}

/// Constant or per-node metric of a Weyl manifold.
#[derive(Debug, Clone)]
pub enum MetricSpec {
    Constant(DMatrix<f64>),
    Sampled(TensorField),
}

/// Dimension-`n` manifold patch sampled on an `n`-dimensional grid, with a
/// symmetric positive-definite metric and a gauge covector field.
#[derive(Debug, Clone)]
pub struct WeylManifold {
    grid: Grid,
    metric: MetricSpec,
    gauge: TensorField,
}

impl WeylManifold {
    pub fn new(grid: Grid, metric: MetricSpec, gauge: TensorField) -> Result<Self> {
        let n = grid.rank();
        if !(2..=4).contains(&n) {
            return Err(Error::DegenerateGrid(format!("manifold dimension {n} not in 2..=4")));
        }
        match &metric {
            MetricSpec::Constant(m) => {
                if m.nrows() != n || m.ncols() != n {
                    return Err(Error::DimensionMismatch(m.nrows(), n));
                }
                check_spd(m, 0)?;
            }
            MetricSpec::Sampled(t) => {
                t.grid().check_compatible(&grid)?;
                if t.dim() != n || t.rank() != 2 {
                    return Err(Error::DimensionMismatch(t.dim(), n));
                }
                for node in 0..grid.len() {
                    let m = metric_matrix_at(t, node);
                    check_spd(&m, node)?;
                }
            }
        }
        gauge.grid().check_compatible(&grid)?;
        if gauge.dim() != n || gauge.rank() != 1 {
            return Err(Error::DimensionMismatch(gauge.dim(), n));
        }
        if !gauge.values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("gauge covector"));
        }
        Ok(Self { grid, metric, gauge })
    }

    /// Flat manifold (identity metric) with the given gauge field.
    pub fn flat(grid: Grid, gauge: TensorField) -> Result<Self> {
        let n = grid.rank();
        Self::new(grid, MetricSpec::Constant(DMatrix::identity(n, n)), gauge)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.rank()
    }

    pub fn metric(&self) -> &MetricSpec {
        &self.metric
    }

    pub fn gauge(&self) -> &TensorField {
        &self.gauge
    }

    pub fn with_zero_gauge(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            metric: self.metric.clone(),
            gauge: TensorField::zeros(self.grid.clone(), self.n(), 1),
        }
    }

    pub fn metric_at(&self, node: usize) -> DMatrix<f64> {
        match &self.metric {
            MetricSpec::Constant(m) => m.clone(),
            MetricSpec::Sampled(t) => metric_matrix_at(t, node),
        }
    }

    pub fn inverse_metric_at(&self, node: usize) -> DMatrix<f64> {
        self.metric_at(node)
            .try_inverse()
            .expect("metric checked positive-definite at construction")
    }

    /// `sqrt(det g)` at a node.
    pub fn sqrt_det_at(&self, node: usize) -> f64 {
        self.metric_at(node).determinant().max(0.0).sqrt()
    }
}

fn metric_matrix_at(t: &TensorField, node: usize) -> DMatrix<f64> {
    let n = t.dim();
    DMatrix::from_fn(n, n, |i, j| t.get(node, &[i, j]))
}

fn check_spd(m: &DMatrix<f64>, node: usize) -> Result<()> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        return Err(Error::MetricNotPositive(node, min));
    }
    Ok(())
}

/// Levi-Civita Christoffel symbols `{i, kl}` of the metric (zero for a
/// constant metric; 4th-order interior derivatives for a sampled one).
pub fn christoffel(m: &WeylManifold) -> TensorField {
    let n = m.n();
    let grid = m.grid().clone();
    let mut out = TensorField::zeros(grid.clone(), n, 3);
    let sampled = match m.metric() {
        MetricSpec::Constant(_) => None,
        MetricSpec::Sampled(t) => Some(t),
    };
    let Some(t) = sampled else {
        return out;
    };
    // dg[l][(i,k)] = d_l g_ik
    let mut dg = vec![vec![ScalarField::zeros(grid.clone()); n * n]; n];
    for i in 0..n {
        for k in 0..n {
            let comp = t.component(&[i, k]);
            for (l, row) in dg.iter_mut().enumerate() {
                row[i * n + k] = comp.derivative(l);
            }
        }
    }
    for node in 0..grid.len() {
        let ginv = m.inverse_metric_at(node);
        for i in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut acc = 0.0;
                    for h in 0..n {
                        acc += ginv[(i, h)]
                            * (dg[k][h * n + l].values()[node]
                                + dg[l][h * n + k].values()[node]
                                - dg[h][k * n + l].values()[node]);
                    }
                    out.set(node, &[i, k, l], 0.5 * acc);
                }
            }
        }
    }
    out
}

/// Weyl connection coefficients
/// `G^i_{kl} = -{i,kl} + d^i_k phi_l + d^i_l phi_k - g_kl phi^i`,
/// symmetric in the lower pair; reduces to minus the Christoffel symbols at
/// `phi = 0`.
pub fn weyl_connection(m: &WeylManifold) -> TensorField {
    let n = m.n();
    let grid = m.grid().clone();
    let chris = christoffel(m);
    let mut out = TensorField::zeros(grid.clone(), n, 3);
    for node in 0..grid.len() {
        let g = m.metric_at(node);
        let ginv = m.inverse_metric_at(node);
        let phi: Vec<f64> = (0..n).map(|i| m.gauge().get(node, &[i])).collect();
        let phi_up: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| ginv[(i, j)] * phi[j]).sum())
            .collect();
        for i in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let delta_ik = if i == k { 1.0 } else { 0.0 };
                    let delta_il = if i == l { 1.0 } else { 0.0 };
                    let v = -chris.get(node, &[i, k, l])
                        + delta_ik * phi[l]
                        + delta_il * phi[k]
                        - g[(k, l)] * phi_up[i];
                    out.set(node, &[i, k, l], v);
                }
            }
        }
    }
    out
}

/// Index variance selector for [`covariant_derivative`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    Contravariant,
    Covariant,
}

/// Covariant derivative of a rank-1 field: returns a rank-2 field indexed
/// `[derivative axis, component]`, using
/// `D_i A^k = d_i A^k - G^k_{il} A^l` or `D_i A_k = d_i A_k + G^l_{ki} A_l`.
pub fn covariant_derivative(
    field: &TensorField,
    gamma: &TensorField,
    variance: Variance,
) -> Result<TensorField> {
    if field.rank() != 1 {
        return Err(Error::DimensionMismatch(field.rank() as usize, 1));
    }
    field.grid().check_compatible(gamma.grid())?;
    let n = field.dim();
    let grid = field.grid().clone();
    let mut out = TensorField::zeros(grid.clone(), n, 2);
    let partials: Vec<Vec<ScalarField>> = (0..n)
        .map(|k| {
            let comp = field.component(&[k]);
            (0..n).map(|i| comp.derivative(i)).collect()
        })
        .collect();
    for node in 0..grid.len() {
        for i in 0..n {
            for k in 0..n {
                let mut v = partials[k][i].values()[node];
                for l in 0..n {
                    v += match variance {
                        Variance::Contravariant => -gamma.get(node, &[k, i, l]) * field.get(node, &[l]),
                        Variance::Covariant => gamma.get(node, &[l, k, i]) * field.get(node, &[l]),
                    };
                }
                out.set(node, &[i, k], v);
            }
        }
    }
    Ok(out)
}

/// Covariant derivative of a mixed rank-2 field `T_l{}^i` (layout `[l, i]`):
/// returns `[k, l, i] = D_k T_l{}^i`.
pub fn covariant_derivative_mixed(t: &TensorField, gamma: &TensorField) -> Result<TensorField> {
    if t.rank() != 2 {
        return Err(Error::DimensionMismatch(t.rank() as usize, 2));
    }
    t.grid().check_compatible(gamma.grid())?;
    let n = t.dim();
    let grid = t.grid().clone();
    let mut out = TensorField::zeros(grid.clone(), n, 3);
    let partials: Vec<Vec<ScalarField>> = (0..n * n)
        .map(|li| {
            let comp = t.component(&[li / n, li % n]);
            (0..n).map(|k| comp.derivative(k)).collect()
        })
        .collect();
    for node in 0..grid.len() {
        for k in 0..n {
            for l in 0..n {
                for i in 0..n {
                    let mut v = partials[l * n + i][k].values()[node];
                    for m_ in 0..n {
                        // upper index like a vector, lower index like a covector
                        v += -gamma.get(node, &[i, k, m_]) * t.get(node, &[l, m_])
                            + gamma.get(node, &[m_, l, k]) * t.get(node, &[m_, i]);
                    }
                    out.set(node, &[k, l, i], v);
                }
            }
        }
    }
    Ok(out)
}

/// Covariant derivative of the metric, `D_l g_ik` (layout `[l, i, k]`).
/// Nonzero exactly when the gauge is: Weyl nonmetricity `D_l g = 2 phi_l g`.
pub fn metric_covariant_derivative(m: &WeylManifold) -> TensorField {
    let n = m.n();
    let grid = m.grid().clone();
    let gamma = weyl_connection(m);
    let mut out = TensorField::zeros(grid.clone(), n, 3);
    // partial derivatives of the metric components
    let dmetric: Option<Vec<Vec<ScalarField>>> = match m.metric() {
        MetricSpec::Constant(_) => None,
        MetricSpec::Sampled(t) => Some(
            (0..n * n)
                .map(|ik| {
                    let comp = t.component(&[ik / n, ik % n]);
                    (0..n).map(|l| comp.derivative(l)).collect()
                })
                .collect(),
        ),
    };
    for node in 0..grid.len() {
        let g = m.metric_at(node);
        for l in 0..n {
            for i in 0..n {
                for k in 0..n {
                    let mut v = dmetric
                        .as_ref()
                        .map_or(0.0, |dm| dm[i * n + k][l].values()[node]);
                    for h in 0..n {
                        v += gamma.get(node, &[h, i, l]) * g[(h, k)]
                            + gamma.get(node, &[h, k, l]) * g[(i, h)];
                    }
                    out.set(node, &[l, i, k], v);
                }
            }
        }
    }
    out
}

/// Full curvature data of a Weyl manifold.
pub struct CurvatureBundle {
    /// `R^i_{mkl}`, layout `[i, m, k, l]`, sphere-positive orientation.
    pub riemann: TensorField,
    /// `R_ml = R^k_{mkl}`
    pub ricci: TensorField,
    /// `R = g^{ml} R_ml`
    pub scalar: ScalarField,
    /// the same chain recomputed at `phi = 0`
    pub riemannian_scalar: ScalarField,
    /// interior margin inside which the stencils are clean
    pub margin: usize,
}

/// Stencil margin of the curvature chain (derivative of a derivative).
pub const CURVATURE_MARGIN: usize = 4;

/// Riemann, Ricci, and scalar curvature by 4th-order finite differences of
/// the connection. The orientation is sphere-positive: the `phi = 0` scalar
/// of a radius-`a` 2-sphere patch is `+2/a^2`.
pub fn curvature(m: &WeylManifold) -> CurvatureBundle {
    let riemann = riemann_tensor(m);
    let n = m.n();
    let grid = m.grid().clone();
    let mut ricci = TensorField::zeros(grid.clone(), n, 2);
    for node in 0..grid.len() {
        for mm in 0..n {
            for l in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += riemann.get(node, &[k, mm, k, l]);
                }
                ricci.set(node, &[mm, l], acc);
            }
        }
    }
    let scalar = contract_scalar(m, &ricci);
    let riemannian_scalar = ricci_scalar(&m.with_zero_gauge());
    CurvatureBundle { riemann, ricci, scalar, riemannian_scalar, margin: CURVATURE_MARGIN }
}

/// `R^i_{mkl} = d_k C^i_{lm} - d_l C^i_{km} + C^i_{kn} C^n_{lm} - C^i_{ln} C^n_{km}`
/// with `C = -G` (the standard-orientation coefficients).
fn riemann_tensor(m: &WeylManifold) -> TensorField {
    let n = m.n();
    let grid = m.grid().clone();
    let gamma = weyl_connection(m);
    // C = -Gamma
    let c_at = |node: usize, i: usize, k: usize, l: usize| -gamma.get(node, &[i, k, l]);
    // dC[a][(i,k,l)] = d_a C^i_{kl}
    let mut dc: Vec<Vec<ScalarField>> = Vec::with_capacity(n);
    for a in 0..n {
        let mut row = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let comp = gamma.component(&[i, k, l]).map(|v| -v);
                    row.push(comp.derivative(a));
                }
            }
        }
        dc.push(row);
    }
    let mut out = TensorField::zeros(grid.clone(), n, 4);
    for node in 0..grid.len() {
        for i in 0..n {
            for mm in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut v = dc[k][(i * n + l) * n + mm].values()[node]
                            - dc[l][(i * n + k) * n + mm].values()[node];
                        for nn in 0..n {
                            v += c_at(node, i, k, nn) * c_at(node, nn, l, mm)
                                - c_at(node, i, l, nn) * c_at(node, nn, k, mm);
                        }
                        out.set(node, &[i, mm, k, l], v);
                    }
                }
            }
        }
    }
    out
}

fn contract_scalar(m: &WeylManifold, ricci: &TensorField) -> ScalarField {
    let n = m.n();
    let grid = m.grid().clone();
    let vals: Vec<f64> = (0..grid.len())
        .map(|node| {
            let ginv = m.inverse_metric_at(node);
            let mut acc = 0.0;
            for mm in 0..n {
                for l in 0..n {
                    acc += ginv[(mm, l)] * ricci.get(node, &[mm, l]);
                }
            }
            acc
        })
        .collect();
    ScalarField::new(grid, vals).expect("scalar length matches grid")
}

/// Scalar curvature without materializing the rank-4 tensor (memory-light
/// path for fine grids). Same orientation as [`curvature`].
pub fn ricci_scalar(m: &WeylManifold) -> ScalarField {
    let n = m.n();
    let grid = m.grid().clone();
    let gamma = weyl_connection(m);
    // Ricci_ml = sum_k d_k C^k_{lm} - d_l (sum_k C^k_{km})
    //          + sum_kn [ C^k_{kn} C^n_{lm} - C^k_{ln} C^n_{km} ]
    let mut div_term = vec![vec![ScalarField::zeros(grid.clone()); n]; n]; // [l][m]
    for l in 0..n {
        for mm in 0..n {
            let mut acc = ScalarField::zeros(grid.clone());
            for k in 0..n {
                let d = gamma.component(&[k, l, mm]).map(|v| -v).derivative(k);
                acc = acc.zip_with(&d, |a, b| a + b).expect("same grid");
            }
            div_term[l][mm] = acc;
        }
    }
    let mut trace_grad = vec![vec![ScalarField::zeros(grid.clone()); n]; n]; // [l][m] = d_l t_m
    for mm in 0..n {
        let mut t_m = ScalarField::zeros(grid.clone());
        for k in 0..n {
            let comp = gamma.component(&[k, k, mm]).map(|v| -v);
            t_m = t_m.zip_with(&comp, |a, b| a + b).expect("same grid");
        }
        for (l, row) in trace_grad.iter_mut().enumerate() {
            row[mm] = t_m.derivative(l);
        }
    }
    let vals: Vec<f64> = (0..grid.len())
        .map(|node| {
            let ginv = m.inverse_metric_at(node);
            let c_at = |i: usize, k: usize, l: usize| -gamma.get(node, &[i, k, l]);
            let mut acc = 0.0;
            for mm in 0..n {
                for l in 0..n {
                    let mut r_ml = div_term[l][mm].values()[node] - trace_grad[l][mm].values()[node];
                    for k in 0..n {
                        for nn in 0..n {
                            r_ml += c_at(k, k, nn) * c_at(nn, l, mm) - c_at(k, l, nn) * c_at(nn, k, mm);
                        }
                    }
                    acc += ginv[(mm, l)] * r_ml;
                }
            }
            acc
        })
        .collect();
    ScalarField::new(grid, vals).expect("scalar length matches grid")
}

/// Scalar-decomposition residuals of the curvature chain.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DecompositionReport {
    /// max interior residual of `R - [ Rdot - (n-1)((n-2) phi phi - 2 div phi) ]`
    /// (sphere-positive orientation)
    pub max_residual: f64,
    /// max interior residual with the bracket sign of the opposite
    /// orientation, for the record
    pub max_residual_opposite_orientation: f64,
    pub margin: usize,
}

/// Verifies the decomposition of the Weyl scalar into its Riemannian part
/// and gauge terms. In the sphere-positive orientation used by the chain the
/// bracket enters with a minus sign; the opposite-orientation residual is
/// reported alongside so the convention is auditable.
pub fn scalar_decomposition_check(m: &WeylManifold) -> Result<DecompositionReport> {
    scalar_decomposition_check_masked(m, None)
}

/// [`scalar_decomposition_check`] restricted to `mask`-true nodes (used when
/// the gauge comes from a floored density, whose log has a kink outside the
/// strong support).
pub fn scalar_decomposition_check_masked(
    m: &WeylManifold,
    assert_mask: Option<&[bool]>,
) -> Result<DecompositionReport> {
    let n = m.n();
    let grid = m.grid().clone();
    let chain = ricci_scalar(m);
    let riemannian = ricci_scalar(&m.with_zero_gauge());
    // div phi = (1/sqrt g) d_i ( sqrt g  g^{ik} phi_k )
    let mut phi_up_fields = Vec::with_capacity(n);
    for i in 0..n {
        let vals: Vec<f64> = (0..grid.len())
            .map(|node| {
                let ginv = m.inverse_metric_at(node);
                let sg = m.sqrt_det_at(node);
                (0..n).map(|k| sg * ginv[(i, k)] * m.gauge().get(node, &[k])).sum()
            })
            .collect();
        phi_up_fields.push(ScalarField::new(grid.clone(), vals)?);
    }
    let mut div_vals = vec![0.0; grid.len()];
    for (i, field) in phi_up_fields.iter().enumerate() {
        let d = field.derivative(i);
        for (node, dv) in div_vals.iter_mut().enumerate() {
            *dv += d.values()[node];
        }
    }
    for (node, dv) in div_vals.iter_mut().enumerate() {
        *dv /= m.sqrt_det_at(node);
    }
    let div = ScalarField::new(grid.clone(), div_vals)?;

    let mut max_res = 0.0_f64;
    let mut max_res_opp = 0.0_f64;
    for node in 0..grid.len() {
        if !grid.is_interior(node, CURVATURE_MARGIN) {
            continue;
        }
        if let Some(mask) = assert_mask {
            if !mask[node] {
                continue;
            }
        }
        let ginv = m.inverse_metric_at(node);
        let phi: Vec<f64> = (0..n).map(|i| m.gauge().get(node, &[i])).collect();
        let phi_sq: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |k| (i, k)))
            .map(|(i, k)| ginv[(i, k)] * phi[i] * phi[k])
            .sum();
        let bracket = (n as f64 - 1.0) * ((n as f64 - 2.0) * phi_sq - 2.0 * div.values()[node]);
        let r = chain.values()[node];
        let rdot = riemannian.values()[node];
        max_res = max_res.max((r - (rdot - bracket)).abs());
        max_res_opp = max_res_opp.max((r - (rdot + bracket)).abs());
    }
    Ok(DecompositionReport {
        max_residual: max_res,
        max_residual_opposite_orientation: max_res_opp,
        margin: CURVATURE_MARGIN,
    })
}

/// Gauge covector built from a scalar probability density:
/// `phi_i = -(1/(n-2)) d_i log(rho)`. Requires `n >= 3`; masked nodes carry
/// zero gauge.
pub fn gauge_from_density(rho: &ScalarField, n: usize) -> Result<TensorField> {
    if n < 3 {
        return Err(Error::GaugeDimension(n));
    }
    if rho.grid().rank() != n {
        return Err(Error::GridMismatch(format!(
            "density grid rank {} vs manifold dimension {n}",
            rho.grid().rank()
        )));
    }
    let mask = rho.mask_above(MASK_REL);
    let grid = rho.grid().clone();
    let floor = MASK_REL * rho.max_abs();
    // differentiate log(rho) directly: better conditioned in the tails than
    // (d rho)/rho, and exact for Gaussian densities
    let ln_rho = rho.map(|v| v.max(floor).ln());
    let mut out = TensorField::zeros(grid.clone(), n, 1);
    for i in 0..n {
        let d = ln_rho.derivative(i);
        for node in 0..grid.len() {
            if mask[node] {
                out.set(node, &[i], -d.values()[node] / (n as f64 - 2.0));
            }
        }
    }
    Ok(out)
}

/// Density fast path for the Weyl scalar on a Riemann-flat (constant-metric)
/// background: `R = (1/(2 gamma sqrt rho)) g^{ik} d_i d_k sqrt(rho)`
/// (gauge-bracket-positive orientation, as printed; `Rdot = 0`).
pub fn weyl_scalar_from_density(
    rho: &ScalarField,
    inverse_metric: &DMatrix<f64>,
    gamma: f64,
) -> Result<ScalarField> {
    let n = rho.grid().rank();
    if inverse_metric.nrows() != n || inverse_metric.ncols() != n {
        return Err(Error::DimensionMismatch(inverse_metric.nrows(), n));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
    }
    let mask = rho.mask_above(MASK_REL);
    let sqrt_rho = rho.map(|v| v.max(0.0).sqrt());
    // g^{ik} d_i d_k sqrt(rho): unmixed second derivatives plus composed
    // first derivatives for the off-diagonal part
    let grid = rho.grid().clone();
    let mut lap_g = vec![0.0_f64; grid.len()];
    for i in 0..n {
        let dii = sqrt_rho.second_derivative(i);
        for (node, acc) in lap_g.iter_mut().enumerate() {
            *acc += inverse_metric[(i, i)] * dii.values()[node];
        }
        for k in (i + 1)..n {
            if inverse_metric[(i, k)] == 0.0 && inverse_metric[(k, i)] == 0.0 {
                continue;
            }
            let dik = sqrt_rho.derivative(i).derivative(k);
            for (node, acc) in lap_g.iter_mut().enumerate() {
                *acc += (inverse_metric[(i, k)] + inverse_metric[(k, i)]) * dik.values()[node];
            }
        }
    }
    let vals: Vec<f64> = (0..grid.len())
        .map(|node| {
            if mask[node] {
                lap_g[node] / (2.0 * gamma * sqrt_rho.values()[node])
            } else {
                0.0
            }
        })
        .collect();
    ScalarField::new(grid, vals)
}

/// Conventional curvature coupling `gamma = (1/6)(n-2)/(n-1)`.
pub fn gamma_coupling(n: usize) -> f64 {
    (n as f64 - 2.0) / (6.0 * (n as f64 - 1.0))
}

/// Coupling consistent with the decomposition + minimizing-gauge chain:
/// `gamma_c = (1/8)(n-2)/(n-1)`. Substituting the density gauge into the
/// decomposition gives `R - Rdot = 4 (n-1)/(n-2) lap(sqrt rho)/sqrt rho`
/// (bracket-positive orientation), i.e. the fast-path prefactor
/// `1/(2 gamma_c)`; [`gamma_coupling`] overshoots it by 4/3.
pub fn gamma_chain_consistent(n: usize) -> f64 {
    (n as f64 - 2.0) / (8.0 * (n as f64 - 1.0))
}

/// Quantum potential vs curvature, both routes.
#[derive(Debug, Clone, serde::Serialize)]
pub struct QCurvatureReport {
    pub gamma: f64,
    pub gamma_chain: f64,
    /// max pointwise relative gap of `Q` vs `-gamma (hbar^2/m) R_fast(gamma)`
    /// over the strong support (the printed identity; gamma cancels)
    pub fast_path_gap: f64,
    /// max pointwise relative gap of `Q` vs `+gamma_c (hbar^2/m) R_chain`
    /// (sphere-positive tensor chain at the chain-consistent coupling)
    pub chain_gap: f64,
    /// max |Q| over the compared region, for scale
    pub q_scale: f64,
}

/// Verifies `Q = -gamma (hbar^2/m) R` pointwise on a flat background with
/// the density-built gauge, along both the fast path (printed form, any
/// `gamma`) and the full tensor chain (at [`gamma_chain_consistent`], with
/// the orientation flip accounted for).
pub fn q_curvature_identity(
    rho: &DensityGrid,
    hbar: f64,
    mass: f64,
    gamma: f64,
) -> Result<QCurvatureReport> {
    let n = rho.grid().rank();
    if n < 3 {
        return Err(Error::GaugeDimension(n));
    }
    if rho.grid().boundary() != Boundary::Decay {
        return Err(Error::BoundaryPolicy { expected: "decay", found: rho.grid().boundary().as_str() });
    }
    let (q, qmask) = quantum_potential(rho.field(), hbar, mass);
    let strong = rho.field().mask_above(STRONG_SUPPORT_REL);
    let grid = rho.grid();

    let id = DMatrix::identity(n, n);
    let r_fast = weyl_scalar_from_density(rho.field(), &id, gamma)?;
    let gamma_c = gamma_chain_consistent(n);
    let gauge = gauge_from_density(rho.field(), n)?;
    let manifold = WeylManifold::flat(grid.clone(), gauge)?;
    let r_chain = ricci_scalar(&manifold);

    let mut fast_gap = 0.0_f64;
    let mut chain_gap = 0.0_f64;
    let mut q_scale = 0.0_f64;
    for node in 0..grid.len() {
        if !strong[node] || !qmask[node] || !grid.is_interior(node, CURVATURE_MARGIN) {
            continue;
        }
        let qv = q.values()[node];
        q_scale = q_scale.max(qv.abs());
        let scale = qv.abs().max(hbar * hbar / mass);
        let rhs_fast = -gamma * hbar * hbar / mass * r_fast.values()[node];
        fast_gap = fast_gap.max((qv - rhs_fast).abs() / scale);
        let rhs_chain = gamma_c * hbar * hbar / mass * r_chain.values()[node];
        chain_gap = chain_gap.max((qv - rhs_chain).abs() / scale);
    }
    Ok(QCurvatureReport { gamma, gamma_chain: gamma_c, fast_path_gap: fast_gap, chain_gap, q_scale })
}

/// Hamilton-Jacobi + continuity residual fields on a flat Weyl background.
pub struct HjWeylReport {
    pub hj: ScalarField,
    pub continuity: ScalarField,
    pub mask: Vec<bool>,
}

/// Residuals of
///
/// ```text
/// dS/dt + (1/2m) g^{ik} (d_i S - A_i)(d_k S - A_k) + V - gamma (hbar^2/m) R_fast
/// drho/dt + (1/m) d_i [ rho g^{ik} (d_k S - A_k) ]
/// ```
///
/// on a constant-metric background with the density-gauge curvature. For
/// `A = 0`, `g = id` this is the Madelung system with the canonical quantum
/// potential (gamma cancels along the fast path), so Schrodinger-evolved
/// snapshots drive both residuals to zero at scheme order.
#[allow(clippy::too_many_arguments)]
pub fn hj_weyl_residual(
    s: &ScalarField,
    rho: &ScalarField,
    ds_dt: &ScalarField,
    drho_dt: &ScalarField,
    potential: Option<&ScalarField>,
    gauge_potential: Option<&TensorField>,
    inverse_metric: &DMatrix<f64>,
    hbar: f64,
    mass: f64,
    gamma: f64,
) -> Result<HjWeylReport> {
    let grid = rho.grid().clone();
    grid.check_compatible(s.grid())?;
    grid.check_compatible(ds_dt.grid())?;
    grid.check_compatible(drho_dt.grid())?;
    let n = grid.rank();
    if let Some(a) = gauge_potential {
        a.grid().check_compatible(&grid)?;
        if a.rank() != 1 || a.dim() != n {
            return Err(Error::DimensionMismatch(a.dim(), n));
        }
    }
    let mask = rho.mask_above(MASK_REL);
    let r_fast = weyl_scalar_from_density(rho, inverse_metric, gamma)?;
    let grad_s: Vec<ScalarField> = (0..n).map(|i| s.derivative(i)).collect();

    // momentum field p_k = d_k S - A_k and its contravariant flux
    let p_at = |node: usize, k: usize| {
        grad_s[k].values()[node] - gauge_potential.map_or(0.0, |a| a.get(node, &[k]))
    };
    let mut hj_vals = vec![0.0_f64; grid.len()];
    for (node, out) in hj_vals.iter_mut().enumerate() {
        if !mask[node] {
            continue;
        }
        let mut kinetic = 0.0;
        for i in 0..n {
            for k in 0..n {
                kinetic += inverse_metric[(i, k)] * p_at(node, i) * p_at(node, k);
            }
        }
        let v = potential.map_or(0.0, |p| p.values()[node]);
        *out = ds_dt.values()[node] + kinetic / (2.0 * mass) + v
            - gamma * hbar * hbar / mass * r_fast.values()[node];
    }

    // flux^i = rho g^{ik} p_k, then divergence
    let mut cont_vals = drho_dt.values().to_vec();
    for i in 0..n {
        let flux_vals: Vec<f64> = (0..grid.len())
            .map(|node| {
                let mut f = 0.0;
                for k in 0..n {
                    f += inverse_metric[(i, k)] * p_at(node, k);
                }
                rho.values()[node] * f
            })
            .collect();
        let flux = ScalarField::new(grid.clone(), flux_vals)?;
        let d = flux.derivative(i);
        for (node, out) in cont_vals.iter_mut().enumerate() {
            *out += d.values()[node] / mass;
        }
    }
    for (node, out) in cont_vals.iter_mut().enumerate() {
        if !mask[node] {
            *out = 0.0;
        }
    }
    Ok(HjWeylReport {
        hj: ScalarField::new(grid.clone(), hj_vals)?,
        continuity: ScalarField::new(grid, cont_vals)?,
        mask,
    })
}

/// The three integrals of the Fisher <-> curvature chain and the fitted
/// constants between them.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FisherCurvatureReport {
    /// `int rho Q`
    pub mean_q: f64,
    /// `I = int |grad rho|^2 / rho` (unhalved)
    pub fisher_unhalved: f64,
    /// `int rho R_fast(gamma)` (bracket-positive orientation)
    pub int_rho_r: f64,
    pub gamma: f64,
    /// fitted `mean_q / fisher_unhalved`; the identity value is `+hbar^2/8m`
    pub fitted_q_over_fisher: f64,
    /// fitted `fisher_unhalved / int_rho_r`; the implied value is `-8 gamma`
    pub fitted_fisher_over_curvature: f64,
    pub implied_fisher_over_curvature: f64,
    /// the constant `hbar^4 / 96 m^2` evaluated literally
    pub printed_constant: f64,
    /// `fisher_unhalved / (printed_constant * int_rho_r)`: how far the
    /// printed proportionality is from holding (1 would be agreement)
    pub printed_constant_ratio: f64,
}

/// Computes `int rho Q`, the unhalved Fisher functional, and `int rho R`
/// independently, fits the pairwise constants, and evaluates the printed
/// `hbar^4/96 m^2` proportionality for the record.
pub fn fisher_curvature_report(
    rho: &DensityGrid,
    hbar: f64,
    mass: f64,
    gamma: f64,
) -> Result<FisherCurvatureReport> {
    let n = rho.grid().rank();
    if rho.grid().boundary() != Boundary::Decay {
        return Err(Error::BoundaryPolicy { expected: "decay", found: rho.grid().boundary().as_str() });
    }
    let (q, qmask) = quantum_potential(rho.field(), hbar, mass);
    let weighted = rho.field().zip_with(&q, |r, qq| r * qq)?;
    let mean_q = weighted.integrate_masked(&qmask);
    let fisher_unhalved = crate::fisher::fisher_functional(
        rho,
        &DMatrix::identity(n, n),
        FisherConvention::Unhalved,
    )?;
    let r_fast = weyl_scalar_from_density(rho.field(), &DMatrix::identity(n, n), gamma)?;
    let weighted_r = rho.field().zip_with(&r_fast, |r, rr| r * rr)?;
    let int_rho_r = weighted_r.integrate_masked(&qmask);
    let printed_constant = hbar.powi(4) / (96.0 * mass * mass);
    Ok(FisherCurvatureReport {
        mean_q,
        fisher_unhalved,
        int_rho_r,
        gamma,
        fitted_q_over_fisher: mean_q / fisher_unhalved,
        fitted_fisher_over_curvature: fisher_unhalved / int_rho_r,
        implied_fisher_over_curvature: -8.0 * gamma,
        printed_constant,
        printed_constant_ratio: fisher_unhalved / (printed_constant * int_rho_r),
    })
}

/// On-disk manifold description (External-interface JSON).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub dims: Vec<usize>,
    pub spacing: Vec<f64>,
    #[serde(default)]
    pub origin: Option<Vec<f64>>,
    pub boundary: Boundary,
    pub metric: MetricMode,
    pub gauge: GaugeMode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MetricMode {
    Constant { matrix: Vec<Vec<f64>> },
    Sampled { csv: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GaugeMode {
    Zero,
    FromDensity { csv: String },
    Sampled { csv: String },
}

impl ManifoldSpec {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Builds the manifold; CSV references are resolved relative to `base`.
    pub fn build(&self, base: &std::path::Path) -> Result<WeylManifold> {
        let n = self.dims.len();
        let origin = self.origin.clone().unwrap_or_else(|| vec![0.0; n]);
        let grid = Grid::new(self.dims.clone(), self.spacing.clone(), origin, self.boundary)?;
        let metric = match &self.metric {
            MetricMode::Constant { matrix } => {
                let flat: Vec<f64> = matrix.iter().flatten().cloned().collect();
                if flat.len() != n * n {
                    return Err(Error::InvalidConfig("metric matrix shape".into()));
                }
                MetricSpec::Constant(DMatrix::from_row_slice(n, n, &flat))
            }
            MetricMode::Sampled { csv } => {
                MetricSpec::Sampled(read_tensor_csv(&base.join(csv), &grid, n, 2)?)
            }
        };
        let gauge = match &self.gauge {
            GaugeMode::Zero => TensorField::zeros(grid.clone(), n, 1),
            GaugeMode::FromDensity { csv } => {
                let rho = read_density_csv(&base.join(csv), &grid)?;
                gauge_from_density(&rho, n)?
            }
            GaugeMode::Sampled { csv } => read_tensor_csv(&base.join(csv), &grid, n, 1)?,
        };
        WeylManifold::new(grid, metric, gauge)
    }
}

/// Reads a tensor field stored one node per row (grid order), components
/// flattened after the coordinate columns.
pub fn read_tensor_csv(path: &std::path::Path, grid: &Grid, dim: usize, rank: u8) -> Result<TensorField> {
    let mut rdr = csv::Reader::from_path(path)?;
    let coord_cols = grid.rank();
    let comps = dim.pow(rank as u32);
    let mut out = TensorField::zeros(grid.clone(), dim, rank);
    let mut node = 0usize;
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != coord_cols + comps {
            return Err(Error::InvalidConfig(format!(
                "tensor csv row has {} columns, expected {}",
                rec.len(),
                coord_cols + comps
            )));
        }
        for c in 0..comps {
            let v: f64 = rec
                .get(coord_cols + c)
                .unwrap()
                .parse()
                .map_err(|e| Error::InvalidConfig(format!("bad tensor value: {e}")))?;
            out.values[node * comps + c] = v;
        }
        node += 1;
    }
    if node != grid.len() {
        return Err(Error::GridMismatch(format!("{node} csv rows for {} nodes", grid.len())));
    }
    Ok(out)
}

fn read_density_csv(path: &std::path::Path, grid: &Grid) -> Result<ScalarField> {
    let mut rdr = csv::Reader::from_path(path)?;
    let coord_cols = grid.rank();
    let mut values = Vec::with_capacity(grid.len());
    for rec in rdr.records() {
        let rec = rec?;
        let v: f64 = rec
            .get(coord_cols)
            .ok_or_else(|| Error::InvalidConfig("missing density column".into()))?
            .parse()
            .map_err(|e| Error::InvalidConfig(format!("bad density value: {e}")))?;
        values.push(v);
    }
    ScalarField::new(grid.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn constant_gauge(grid: &Grid, phi: &[f64]) -> TensorField {
        let n = phi.len();
        let mut g = TensorField::zeros(grid.clone(), n, 1);
        for node in 0..grid.len() {
            for (i, &v) in phi.iter().enumerate() {
                g.set(node, &[i], v);
            }
        }
        g
    }

    #[test]
    fn flat_zero_gauge_connection_vanishes() {
        let grid = Grid::decay_cube(3, 8, -1.0, 1.0).unwrap();
        let m = WeylManifold::flat(grid.clone(), TensorField::zeros(grid, 3, 1)).unwrap();
        let g = weyl_connection(&m);
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn flat_constant_gauge_connection_closed_form() {
        // G^i_{kl} = d^i_k phi_l + d^i_l phi_k - delta_kl phi^i
        let grid = Grid::decay_cube(3, 8, -1.0, 1.0).unwrap();
        let phi = [0.3, -0.7, 0.2];
        let m = WeylManifold::flat(grid.clone(), constant_gauge(&grid, &phi)).unwrap();
        let g = weyl_connection(&m);
        for node in [0, grid.len() / 2] {
            for i in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let expected = if i == k { phi[l] } else { 0.0 }
                            + if i == l { phi[k] } else { 0.0 }
                            - if k == l { phi[i] } else { 0.0 };
                        assert_abs_diff_eq!(g.get(node, &[i, k, l]), expected, epsilon = 1e-14);
                        // symmetry in the lower pair
                        assert_eq!(g.get(node, &[i, k, l]), g.get(node, &[i, l, k]));
                    }
                }
            }
        }
    }

    #[test]
    fn connection_reduces_to_minus_christoffel_at_zero_gauge() {
        // sampled curved metric, phi = 0
        let grid = Grid::decay_cube(2, 16, 0.5, 1.5).unwrap();
        let n = 2;
        let mut gfield = TensorField::zeros(grid.clone(), n, 2);
        for node in 0..grid.len() {
            let p = grid.position(node);
            // diagonal metric with smooth coefficients
            gfield.set(node, &[0, 0], 1.0 + 0.3 * p[0] * p[0]);
            gfield.set(node, &[1, 1], 2.0 + 0.2 * p[1]);
        }
        let m = WeylManifold::new(
            grid.clone(),
            MetricSpec::Sampled(gfield),
            TensorField::zeros(grid.clone(), n, 1),
        )
        .unwrap();
        let gamma = weyl_connection(&m);
        let chris = christoffel(&m);
        for node in 0..grid.len() {
            if !grid.is_interior(node, 2) {
                continue;
            }
            for i in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        assert_abs_diff_eq!(
                            gamma.get(node, &[i, k, l]),
                            -chris.get(node, &[i, k, l]),
                            epsilon = 1e-12
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn transplantation_changes_length_at_first_order() {
        // dA^i = G^i_{kl} A^l dq^k changes |A| by |A| phi_k dq^k + O(dq^2)
        let grid = Grid::decay_cube(3, 8, -1.0, 1.0).unwrap();
        let phi = [0.4, -0.2, 0.1];
        let m = WeylManifold::flat(grid.clone(), constant_gauge(&grid, &phi)).unwrap();
        let g = weyl_connection(&m);
        let node = grid.len() / 2;
        let a = [0.8, -0.5, 0.3_f64];
        let len = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let dq_dir = [0.2, 0.7, -0.4];
        let mut prev_ratio_err = f64::INFINITY;
        for scale in [1e-2, 5e-3, 2.5e-3] {
            let dq: Vec<f64> = dq_dir.iter().map(|d| d * scale).collect();
            let mut a_new = a;
            for i in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        a_new[i] += g.get(node, &[i, k, l]) * a[l] * dq[k];
                    }
                }
            }
            let dlen = len(&a_new) - len(&a);
            let expected = len(&a) * phi.iter().zip(&dq).map(|(p, d)| p * d).sum::<f64>();
            let err = (dlen - expected).abs() / scale.powi(2);
            // second-order remainder: error / dq^2 stays bounded
            assert!(err < 10.0, "transplantation remainder {err}");
            assert!(err <= prev_ratio_err * 1.5);
            prev_ratio_err = err;
        }
    }

    #[test]
    fn covariant_derivative_basics() {
        let grid = Grid::decay_cube(2, 12, -1.0, 1.0).unwrap();
        let m = WeylManifold::flat(grid.clone(), constant_gauge(&grid, &[0.5, -0.3])).unwrap();
        let gamma = weyl_connection(&m);
        // constant field, zero connection -> zero derivative
        let zero_m = WeylManifold::flat(grid.clone(), TensorField::zeros(grid.clone(), 2, 1)).unwrap();
        let zero_gamma = weyl_connection(&zero_m);
        let mut constant = TensorField::zeros(grid.clone(), 2, 1);
        for node in 0..grid.len() {
            constant.set(node, &[0], 1.5);
            constant.set(node, &[1], -2.0);
        }
        let d = covariant_derivative(&constant, &zero_gamma, Variance::Contravariant).unwrap();
        assert_eq!(d.max_abs(), 0.0);
        // scalar gradient case is the plain partial derivative: check the
        // covariant variance on a gradient field against raw partials
        let s = ScalarField::from_fn(grid.clone(), |x| x[0] * x[0] - 0.5 * x[1]);
        let mut grad = TensorField::zeros(grid.clone(), 2, 1);
        grad.set_component(&[0], &s.derivative(0));
        grad.set_component(&[1], &s.derivative(1));
        let dcov = covariant_derivative(&grad, &gamma, Variance::Covariant).unwrap();
        // the connection part must act: nonzero difference from raw partials
        let raw = s.derivative(0).derivative(1);
        let node = grid.len() / 2;
        assert!((dcov.get(node, &[1, 0]) - raw.values()[node]).abs() > 1e-3);
    }

    #[test]
    fn metric_nonmetricity_is_twice_gauge() {
        // D_l g_ik = 2 phi_l g_ik, nonzero for phi != 0
        let grid = Grid::decay_cube(3, 8, -1.0, 1.0).unwrap();
        let phi = [0.25, -0.4, 0.15];
        let m = WeylManifold::flat(grid.clone(), constant_gauge(&grid, &phi)).unwrap();
        let nm = metric_covariant_derivative(&m);
        assert!(nm.max_abs() > 0.1);
        for node in [0, grid.len() / 3, grid.len() - 1] {
            for l in 0..3 {
                for i in 0..3 {
                    for k in 0..3 {
                        let expected = if i == k { 2.0 * phi[l] } else { 0.0 };
                        assert_abs_diff_eq!(nm.get(node, &[l, i, k]), expected, epsilon = 1e-12);
                    }
                }
            }
        }
        // zero gauge: metric compatibility restored
        let m0 = WeylManifold::flat(grid.clone(), TensorField::zeros(grid, 3, 1)).unwrap();
        assert!(metric_covariant_derivative(&m0).max_abs() < 1e-14);
    }

    #[test]
    fn flat_constant_gauge_scalar_closed_form() {
        // sphere-positive orientation: R = -(n-1)(n-2) |phi|^2 for flat
        // metric and constant gauge
        let grid = Grid::decay_cube(3, 10, -1.0, 1.0).unwrap();
        let phi = [0.3, -0.1, 0.2];
        let phi_sq: f64 = phi.iter().map(|p| p * p).sum();
        let m = WeylManifold::flat(grid.clone(), constant_gauge(&grid, &phi)).unwrap();
        let r = ricci_scalar(&m);
        let expected = -2.0 * phi_sq; // (n-1)(n-2) = 2 at n = 3
        for node in 0..grid.len() {
            if grid.is_interior(node, CURVATURE_MARGIN) {
                assert_abs_diff_eq!(r.values()[node], expected, epsilon = 1e-10);
            }
        }
        // full bundle agrees with the light path
        let bundle = curvature(&m);
        for node in 0..grid.len() {
            if grid.is_interior(node, CURVATURE_MARGIN) {
                assert_abs_diff_eq!(
                    bundle.scalar.values()[node],
                    r.values()[node],
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn gauge_from_density_gaussian_closed_form() {
        // phi_i = x_i / sigma^2 at n = 3 (the -1/(n-2) factor on
        // d_i log rho = -x_i/sigma^2)
        let sigma = 1.3;
        let grid = Grid::decay_cube(3, 24, -5.0, 5.0).unwrap();
        let rho = ScalarField::from_fn(grid.clone(), move |x| {
            (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (2.0 * sigma * sigma)).exp()
        });
        let gauge = gauge_from_density(&rho, 3).unwrap();
        let strong = rho.mask_above(1e-2);
        for node in 0..grid.len() {
            if !strong[node] || !grid.is_interior(node, 2) {
                continue;
            }
            let p = grid.position(node);
            for i in 0..3 {
                assert!(
                    (gauge.get(node, &[i]) - p[i] / (sigma * sigma)).abs() < 1e-6,
                    "gauge mismatch at {p:?}"
                );
            }
        }
        // scale invariance of the log derivative
        let scaled = rho.map(|v| 4.2 * v);
        let gauge2 = gauge_from_density(&scaled, 3).unwrap();
        for node in 0..grid.len() {
            for i in 0..3 {
                assert_abs_diff_eq!(gauge.get(node, &[i]), gauge2.get(node, &[i]), epsilon = 1e-10);
            }
        }
        // uniform density: zero gauge; n = 2 rejected
        let uniform = ScalarField::constant(grid, 1.0);
        assert!(gauge_from_density(&uniform, 3).unwrap().max_abs() < 1e-12);
        let grid2 = Grid::decay_cube(2, 8, -1.0, 1.0).unwrap();
        let rho2 = ScalarField::constant(grid2, 1.0);
        assert!(matches!(gauge_from_density(&rho2, 2), Err(Error::GaugeDimension(2))));
    }

    #[test]
    fn coupling_values() {
        assert_abs_diff_eq!(gamma_coupling(3), 1.0 / 12.0, epsilon = 1e-16);
        assert_abs_diff_eq!(gamma_coupling(4), 1.0 / 9.0, epsilon = 1e-16);
        assert_abs_diff_eq!(gamma_chain_consistent(3), 1.0 / 16.0, epsilon = 1e-16);
        // ratio between the conventional and chain-consistent couplings
        assert_abs_diff_eq!(gamma_coupling(3) / gamma_chain_consistent(3), 4.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn weyl_scalar_from_density_uniform_and_errors() {
        let grid = Grid::periodic_cube(3, 8, 0.0, 1.0).unwrap();
        let uniform = ScalarField::constant(grid, 1.0);
        let id = DMatrix::identity(3, 3);
        let r = weyl_scalar_from_density(&uniform, &id, gamma_coupling(3)).unwrap();
        assert!(r.max_abs() < 1e-10);
        assert!(weyl_scalar_from_density(&uniform, &id, -0.1).is_err());
        let bad = DMatrix::identity(2, 2);
        assert!(weyl_scalar_from_density(&uniform, &bad, 0.1).is_err());
    }

    #[test]
    fn manifold_spec_round_trip() {
        let dir = std::env::temp_dir().join("qgeo_manifold_spec_test");
        std::fs::create_dir_all(&dir).unwrap();
        let spec = ManifoldSpec {
            dims: vec![8, 8, 8],
            spacing: vec![0.25; 3],
            origin: Some(vec![-1.0; 3]),
            boundary: Boundary::Decay,
            metric: MetricMode::Constant { matrix: vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 2.0, 0.0],
                vec![0.0, 0.0, 1.5],
            ]},
            gauge: GaugeMode::Zero,
        };
        let path = dir.join("manifold.json");
        std::fs::write(&path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
        let loaded = ManifoldSpec::load(&path).unwrap();
        let m = loaded.build(&dir).unwrap();
        assert_eq!(m.n(), 3);
        assert_eq!(m.metric_at(0)[(1, 1)], 2.0);
        assert_eq!(m.gauge().max_abs(), 0.0);
        std::fs::remove_dir_all(&dir).ok();
    }
}
