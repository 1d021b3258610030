//! The Kahler triple `(J, g, omega)` on projective space in chart
//! coordinates: Fubini-Study metric, fundamental form, Kahler potential, and
//! geodesic distance.
//!
//! With `z` the chart coordinates of the base ray and `v, w` holomorphic
//! tangent components, the metric and fundamental form are
//!
//! ```text
//! g(v, w)     = 2 nu Re[ (v|w)/(1+|z|^2) - (v|z)(z|w)/(1+|z|^2)^2 ]
//! omega(v, w) = 2 nu Im[ same bracket ]
//! ```
//!
//! and `J` multiplies holomorphic components by `i`. The local Kahler
//! potential is `f = log(1 + |z|^2)`, whose mixed holomorphic Hessian
//! reproduces the metric coefficients (checked by finite differences in the
//! test suite and the verification harness).

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hilbert::{inner_product, ChartPoint, StateVector};
use crate::linalg::hdot;
use crate::C64;

/// Base points are considered equal when coordinates agree to this tolerance.
const BASE_TOL: f64 = 1e-13;

/// Tangent vector at a chart point, stored by holomorphic components.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: ChartPoint,
    components: DVector<C64>,
}

impl TangentVector {
    pub fn new(base: ChartPoint, components: Vec<C64>) -> Result<Self> {
        if components.len() != base.coords().len() {
            return Err(Error::DimensionMismatch(components.len(), base.coords().len()));
        }
        if components.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("tangent components"));
        }
        Ok(Self { base, components: DVector::from_vec(components) })
    }

    pub fn from_vector(base: ChartPoint, components: DVector<C64>) -> Result<Self> {
        Self::new(base, components.iter().copied().collect())
    }

    pub fn base(&self) -> &ChartPoint {
        &self.base
    }

    pub fn components(&self) -> &DVector<C64> {
        &self.components
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { base: self.base.clone(), components: self.components.map(|z| z * c) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same_base(self, other)?;
        Ok(Self { base: self.base.clone(), components: &self.components + &other.components })
    }

    /// Realification `z = (x + i y)/sqrt(2)`: interleaved `[x_0, y_0, ...]`.
    pub fn real_components(&self) -> Vec<f64> {
        realify(&self.components)
    }
}

fn check_same_base(v: &TangentVector, w: &TangentVector) -> Result<()> {
    if !v.base.approx_eq(&w.base, BASE_TOL) {
        return Err(Error::BasePointMismatch);
    }
    Ok(())
}

/// The chart-coordinate bracket `(v|w)/(1+|z|^2) - (v|z)(z|w)/(1+|z|^2)^2`
/// whose real and imaginary parts carry the metric and the fundamental form.
fn fs_bracket(z: &ChartPoint, v: &DVector<C64>, w: &DVector<C64>) -> C64 {
    let d = 1.0 + z.norm_sqr();
    let vw = hdot(v, w);
    let vz = hdot(v, z.coords());
    let zw = hdot(z.coords(), w);
    vw / d - vz * zw / (d * d)
}

/// Fubini-Study metric `g(v, w)` at the common base point.
pub fn fs_metric(v: &TangentVector, w: &TangentVector, nu: f64) -> Result<f64> {
    check_same_base(v, w)?;
    Ok(2.0 * nu * fs_bracket(&v.base, &v.components, &w.components).re)
}

/// Fundamental (symplectic) form `omega(v, w)` at the common base point.
pub fn symplectic_form(v: &TangentVector, w: &TangentVector, nu: f64) -> Result<f64> {
    check_same_base(v, w)?;
    Ok(2.0 * nu * fs_bracket(&v.base, &v.components, &w.components).im)
}

/// Complex structure: multiplies holomorphic components by `i`.
pub fn apply_j(v: &TangentVector) -> TangentVector {
    v.scale(C64::new(0.0, 1.0))
}

/// Local Kahler potential `f(z) = log(1 + |z|^2)`.
pub fn kahler_potential(z: &ChartPoint) -> f64 {
    (1.0 + z.norm_sqr()).ln()
}

/// Geodesic (Fubini-Study) distance between rays: the Hilbert space angle
/// `arccos |<r1|r2>|` of normalized representatives, in `[0, pi/2]`.
///
/// Scale-invariant in both arguments; the overlap is clamped to `[0, 1]`
/// so coincident rays cannot produce NaN through rounding.
pub fn geodesic_distance(r1: &StateVector, r2: &StateVector) -> Result<f64> {
    let n1 = r1.norm();
    let n2 = r2.norm();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let overlap = (inner_product(r1, r2)?.norm() / (n1 * n2)).clamp(0.0, 1.0);
    Ok(overlap.acos())
}

/// Splits the pure-state line element into its Fisher part and its
/// phase-variance part:
///
/// ```text
/// (1/4) ds^2 = (1/4) sum dp_j^2 / p_j  +  [ sum p_j dphi_j^2 - (sum p_j dphi_j)^2 ]
/// ```
///
/// Returns `(fisher_part, phase_variance_part)`. Requires positive `p`
/// summing to one and a mass-preserving perturbation `sum dp = 0`.
pub fn fs_decomposition(p: &[f64], dp: &[f64], dphi: &[f64]) -> Result<(f64, f64)> {
    if p.len() != dp.len() {
        return Err(Error::DimensionMismatch(p.len(), dp.len()));
    }
    if p.len() != dphi.len() {
        return Err(Error::DimensionMismatch(p.len(), dphi.len()));
    }
    for (j, &pj) in p.iter().enumerate() {
        if pj <= 0.0 {
            return Err(Error::NonPositiveProbability(j, pj));
        }
    }
    let dp_sum: f64 = dp.iter().sum();
    if dp_sum.abs() > 1e-12 {
        return Err(Error::UnbalancedPerturbation(dp_sum));
    }
    let fisher_part = 0.25 * p.iter().zip(dp).map(|(pj, dj)| dj * dj / pj).sum::<f64>();
    let mean_dphi: f64 = p.iter().zip(dphi).map(|(pj, fj)| pj * fj).sum();
    let mean_dphi_sq: f64 = p.iter().zip(dphi).map(|(pj, fj)| pj * fj * fj).sum();
    let phase_variance = (mean_dphi_sq - mean_dphi * mean_dphi).max(0.0);
    Ok((fisher_part, phase_variance))
}

/// Seeded random tangent vector with standard complex Gaussian components.
pub fn random_tangent(base: &ChartPoint, seed: u64) -> TangentVector {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let comps: Vec<C64> = (0..base.coords().len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        })
        .collect();
    TangentVector::new(base.clone(), comps).expect("finite Gaussian components")
}

/// Realification of holomorphic components, `z = (x + i y)/sqrt(2)`.
pub fn realify(v: &DVector<C64>) -> Vec<f64> {
    let s = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(2 * v.len());
    for z in v.iter() {
        out.push(s * z.re);
        out.push(s * z.im);
    }
    out
}

pub fn unrealify(x: &[f64]) -> DVector<C64> {
    let s = std::f64::consts::SQRT_2;
    DVector::from_iterator(x.len() / 2, x.chunks_exact(2).map(|c| C64::new(c[0] / s, c[1] / s)))
}

/// `J` in realified coordinates: `(x, y) -> (-y, x)` per complex pair.
fn apply_j_real(x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for i in (0..x.len()).step_by(2) {
        out[i] = -x[i + 1];
        out[i + 1] = x[i];
    }
    out
}

/// Finite-difference Lie bracket `[X, Y]^i = X^j d_j Y^i - Y^j d_j X^i`
/// of vector fields given as closures on realified chart coordinates.
pub fn lie_bracket_fd(
    x_field: &dyn Fn(&[f64]) -> Vec<f64>,
    y_field: &dyn Fn(&[f64]) -> Vec<f64>,
    at: &[f64],
    step: f64,
) -> Vec<f64> {
    let d = at.len();
    let jac = |field: &dyn Fn(&[f64]) -> Vec<f64>| -> Vec<Vec<f64>> {
        // jac[j][i] = d_j field^i by central differences
        (0..d)
            .map(|j| {
                let mut plus = at.to_vec();
                let mut minus = at.to_vec();
                plus[j] += step;
                minus[j] -= step;
                let fp = field(&plus);
                let fm = field(&minus);
                (0..d).map(|i| (fp[i] - fm[i]) / (2.0 * step)).collect()
            })
            .collect()
    };
    let jx = jac(x_field);
    let jy = jac(y_field);
    let xv = x_field(at);
    let yv = y_field(at);
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| xv[j] * jy[j][i] - yv[j] * jx[j][i])
                .sum()
        })
        .collect()
}

/// Nijenhuis torsion residual `max | [JX,JY] - [X,Y] - J[X,JY] - J[JX,Y] |`
/// for the constant-coefficient extensions of `v` and `w`, with Lie brackets
/// evaluated by finite differences. `J` is constant in chart coordinates, so
/// the residual is numerical noise (well below 1e-8).
pub fn nijenhuis_residual(v: &TangentVector, w: &TangentVector) -> Result<f64> {
    check_same_base(v, w)?;
    let at = realify(v.base().coords());
    let xv = v.real_components();
    let yv = w.real_components();
    let x_field = move |_: &[f64]| xv.clone();
    let y_field = move |_: &[f64]| yv.clone();
    let jx_field = |p: &[f64]| apply_j_real(&x_field(p));
    let jy_field = |p: &[f64]| apply_j_real(&y_field(p));
    let step = 1e-4;
    let b_jx_jy = lie_bracket_fd(&jx_field, &jy_field, &at, step);
    let b_x_y = lie_bracket_fd(&x_field, &y_field, &at, step);
    let b_x_jy = lie_bracket_fd(&x_field, &jy_field, &at, step);
    let b_jx_y = lie_bracket_fd(&jx_field, &y_field, &at, step);
    let j_b_x_jy = apply_j_real(&b_x_jy);
    let j_b_jx_y = apply_j_real(&b_jx_y);
    Ok((0..at.len())
        .map(|i| (b_jx_jy[i] - b_x_y[i] - j_b_x_jy[i] - j_b_jx_y[i]).abs())
        .fold(0.0, f64::max))
}
