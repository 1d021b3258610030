//! Observables as Kahlerian functions: mean values, dispersions, Hamiltonian
//! and gradient vector fields, Poisson/Riemann/Kahler brackets, star
//! products, flows, and uncertainty relations.
//!
//! Every bracket is evaluated along two independent routes: the operator
//! algebra side (`<(1/i nu)[A,B]>`, `<AB+BA>`, ...) and the chart geometry
//! side (`omega(X_A, X_B)`, `g(Y_A, Y_B)` built from the vector fields and
//! the Fubini-Study metric). [`bracket_report`] carries both and their
//! residuals; one-sided evaluation cannot catch transcription errors in
//! either formula.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::hilbert::{to_chart, ChartPoint, ChartSelector, HermitianOperator, StateVector};
use crate::kahler::{fs_metric, symplectic_form, TangentVector};
#[cfg(test)]
use crate::kahler::apply_j;
use crate::linalg::{hdot, norm_sqr, HermEigen};
use crate::C64;

/// Mean value `<A> = (x|Ax)/|x|^2` of an observable at a state.
pub fn mean_value(a: &HermitianOperator, x: &StateVector) -> Result<f64> {
    if a.dim() != x.dim() {
        return Err(Error::DimensionMismatch(a.dim(), x.dim()));
    }
    let nsq = norm_sqr(x.amplitudes());
    if nsq == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(hdot(x.amplitudes(), &a.apply(x.amplitudes())).re / nsq)
}

/// Chart-coordinate route for the mean value: `(z+h | A(z+h)) / (1+|z|^2)`
/// with `z+h` the unnormalized chart representative.
pub fn mean_value_chart(a: &HermitianOperator, p: &ChartPoint) -> f64 {
    let zeta = p.embed();
    hdot(&zeta, &(a.entries() * &zeta)).re / (1.0 + p.norm_sqr())
}

/// Square dispersion `Delta^2 A = <(A - <A>)^2>`, clamped at zero.
pub fn dispersion_sq(a: &HermitianOperator, x: &StateVector) -> Result<f64> {
    let mean = mean_value(a, x)?;
    let nsq = norm_sqr(x.amplitudes());
    let ax = a.apply(x.amplitudes());
    let centered = ax - x.amplitudes().map(|z| z * mean);
    Ok(norm_sqr(&centered) / nsq)
}

pub fn dispersion(a: &HermitianOperator, x: &StateVector) -> Result<f64> {
    Ok(dispersion_sq(a, x)?.max(0.0).sqrt())
}

/// Directional derivative of `<A>` along a chart tangent, by the product
/// rule on `(zeta|A zeta)/(1+|z|^2)` with `zeta = z + h`.
pub fn differential_mean(a: &HermitianOperator, eta: &TangentVector) -> f64 {
    let p = eta.base();
    let zeta = p.embed();
    let dir = p.embed_direction(eta.components());
    let d = 1.0 + p.norm_sqr();
    let a_zeta = a.entries() * &zeta;
    let num = 2.0 * hdot(&dir, &a_zeta).re;
    let mean = hdot(&zeta, &a_zeta).re / d;
    let dnorm = 2.0 * hdot(p.coords(), eta.components()).re;
    num / d - mean * dnorm / d
}

/// The same derivative from the projected-gradient expression: the pairing
/// `2 Re ( A zeta / (1+|z|^2) - <h|A zeta>/(1+|z|^2) h - (A zeta|zeta) z /(1+|z|^2)^2 | v )`.
pub fn differential_mean_gradient_form(a: &HermitianOperator, eta: &TangentVector) -> f64 {
    let p = eta.base();
    let k = p.chart_index() - 1;
    let zeta = p.embed();
    let dir = p.embed_direction(eta.components());
    let d = 1.0 + p.norm_sqr();
    let a_zeta = a.entries() * &zeta;
    let h_a_zeta = a_zeta[k]; // (h | A zeta)
    let az_z = hdot(&a_zeta, &zeta);
    let mut grad = DVector::from_element(zeta.len(), C64::new(0.0, 0.0));
    for i in 0..zeta.len() {
        let h_i = if i == k { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
        let z_i = zeta[i] - h_i; // embedded z has zero at the chart slot
        grad[i] = a_zeta[i] / d - h_a_zeta * h_i / d - az_z * z_i / (d * d);
    }
    2.0 * hdot(&grad, &dir).re
}

/// Hamiltonian vector field `X = I d<A>` in chart coordinates:
/// `X(z) = (1/nu) [ i (h|A zeta) zeta - i A zeta ]` with `zeta = z + h`.
pub fn hamiltonian_field(a: &HermitianOperator, p: &ChartPoint, nu: f64) -> TangentVector {
    let zeta = p.embed();
    let k = p.chart_index() - 1;
    let a_zeta = a.entries() * &zeta;
    let i = C64::new(0.0, 1.0);
    let coeff = i * a_zeta[k]; // i (h | A zeta)
    let ambient = zeta.map(|z| z * coeff / nu) - a_zeta.map(|z| z * i / nu);
    strip_chart_slot(p, &ambient)
}

/// Gradient vector field `Y = G d<A>`:
/// `Y(z) = (1/nu) [ -(h|A zeta) zeta + A zeta ]`.
pub fn gradient_field(a: &HermitianOperator, p: &ChartPoint, nu: f64) -> TangentVector {
    let zeta = p.embed();
    let k = p.chart_index() - 1;
    let a_zeta = a.entries() * &zeta;
    let coeff = a_zeta[k];
    let ambient = a_zeta.map(|z| z / nu) - zeta.map(|z| z * coeff / nu);
    strip_chart_slot(p, &ambient)
}

/// Drops the chart slot of an ambient vector whose slot component vanishes.
fn strip_chart_slot(p: &ChartPoint, ambient: &DVector<C64>) -> TangentVector {
    let k = p.chart_index() - 1;
    let comps: Vec<C64> = (0..ambient.len()).filter(|&i| i != k).map(|i| ambient[i]).collect();
    TangentVector::new(p.clone(), comps).expect("tangent length matches base")
}

/// Poisson bracket `{<A>, <B>}(x) = <(1/i nu)[A, B]>(x)`, operator route.
pub fn poisson_bracket(
    a: &HermitianOperator,
    b: &HermitianOperator,
    x: &StateVector,
    nu: f64,
) -> Result<f64> {
    let ab = a.entries() * b.entries();
    let ba = b.entries() * a.entries();
    let comm = ab - ba;
    let nsq = norm_sqr(x.amplitudes());
    if nsq == 0.0 {
        return Err(Error::ZeroVector);
    }
    let val = hdot(x.amplitudes(), &(&comm * x.amplitudes())) / nsq;
    // <[A,B]> is purely imaginary for Hermitian A, B
    Ok((val / C64::new(0.0, nu)).re)
}

/// Riemann bracket `((<A>, <B>)) = (1/nu)<AB+BA> - (2/nu)<A><B>`, operator route.
pub fn riemann_bracket(
    a: &HermitianOperator,
    b: &HermitianOperator,
    x: &StateVector,
    nu: f64,
) -> Result<f64> {
    let anti = a.entries() * b.entries() + b.entries() * a.entries();
    let nsq = norm_sqr(x.amplitudes());
    if nsq == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mean_anti = hdot(x.amplitudes(), &(&anti * x.amplitudes())).re / nsq;
    Ok(mean_anti / nu - 2.0 * mean_value(a, x)? * mean_value(b, x)? / nu)
}

/// Geometry route for the Poisson bracket: `omega(X_A, X_B)` at the chart
/// point of `x`.
pub fn poisson_bracket_geometric(
    a: &HermitianOperator,
    b: &HermitianOperator,
    x: &StateVector,
    nu: f64,
) -> Result<f64> {
    let p = to_chart(x, ChartSelector::Auto)?;
    let xa = hamiltonian_field(a, &p, nu);
    let xb = hamiltonian_field(b, &p, nu);
    symplectic_form(&xa, &xb, nu)
}

/// Geometry route for the Riemann bracket: `g(Y_A, Y_B)`.
pub fn riemann_bracket_geometric(
    a: &HermitianOperator,
    b: &HermitianOperator,
    x: &StateVector,
    nu: f64,
) -> Result<f64> {
    let p = to_chart(x, ChartSelector::Auto)?;
    let ya = gradient_field(a, &p, nu);
    let yb = gradient_field(b, &p, nu);
    fs_metric(&ya, &yb, nu)
}

/// Kahler bracket `<f, h> = ((f,h)) + i {f,h}`.
pub fn kahler_bracket(
    a: &HermitianOperator,
    b: &HermitianOperator,
    x: &StateVector,
    nu: f64,
) -> Result<C64> {
    Ok(C64::new(
        riemann_bracket(a, b, x, nu)?,
        poisson_bracket(a, b, x, nu)?,
    ))
}

/// `f o_nu h = (nu/2)((f,h)) + f h`, the Jordan-product companion.
pub fn circ_product(
    a: &HermitianOperator,
    b: &HermitianOperator,
    x: &StateVector,
    nu: f64,
) -> Result<f64> {
    Ok(0.5 * nu * riemann_bracket(a, b, x, nu)? + mean_value(a, x)? * mean_value(b, x)?)
}

/// `f *_nu h = (nu/2)<f,h> + f h`, the operator-product companion.
pub fn star_product(
    a: &HermitianOperator,
    b: &HermitianOperator,
    x: &StateVector,
    nu: f64,
) -> Result<C64> {
    let fh = mean_value(a, x)? * mean_value(b, x)?;
    Ok(kahler_bracket(a, b, x, nu)? * 0.5 * nu + C64::new(fh, 0.0))
}

/// Mean of the plain operator product, `<AB>` (complex in general).
pub fn operator_product_mean(
    a: &HermitianOperator,
    b: &HermitianOperator,
    x: &StateVector,
) -> Result<C64> {
    let nsq = norm_sqr(x.amplitudes());
    if nsq == 0.0 {
        return Err(Error::ZeroVector);
    }
    let ab = a.entries() * b.entries();
    Ok(hdot(x.amplitudes(), &(&ab * x.amplitudes())) / nsq)
}

/// Both routes of every bracket identity at one state, with residuals.
#[derive(Debug, Clone)]
pub struct BracketReport {
    pub poisson: f64,
    pub riemann: f64,
    pub kahler: C64,
    /// Named identity residuals (absolute values).
    pub residuals: BTreeMap<String, f64>,
}

pub fn bracket_report(
    a: &HermitianOperator,
    b: &HermitianOperator,
    x: &StateVector,
    nu: f64,
) -> Result<BracketReport> {
    let poisson = poisson_bracket(a, b, x, nu)?;
    let riemann = riemann_bracket(a, b, x, nu)?;
    let kahler = C64::new(riemann, poisson);

    let mut residuals = BTreeMap::new();
    residuals.insert(
        "poisson_operator_vs_geometric".to_string(),
        (poisson - poisson_bracket_geometric(a, b, x, nu)?).abs(),
    );
    residuals.insert(
        "riemann_operator_vs_geometric".to_string(),
        (riemann - riemann_bracket_geometric(a, b, x, nu)?).abs(),
    );

    let mean_ab = operator_product_mean(a, b, x)?;
    let fh = mean_value(a, x)? * mean_value(b, x)?;
    residuals.insert(
        "kahler_vs_covariance_form".to_string(),
        (kahler - (mean_ab - fh) * 2.0 / nu).norm(),
    );

    let star = star_product(a, b, x, nu)?;
    let star_ba = star_product(b, a, x, nu)?;
    let circ = circ_product(a, b, x, nu)?;
    residuals.insert("star_vs_operator_product".to_string(), (star - mean_ab).norm());
    let anti_mean = (operator_product_mean(a, b, x)? + operator_product_mean(b, a, x)?).re;
    residuals.insert("circ_vs_jordan_product".to_string(), (circ - 0.5 * anti_mean).abs());
    residuals.insert(
        "star_minus_circ_minus_poisson".to_string(),
        (star - C64::new(circ, 0.0) - C64::new(0.0, 0.5 * nu * poisson)).norm(),
    );
    residuals.insert(
        "circ_from_star_symmetrization".to_string(),
        ((star + star_ba) * 0.5 - C64::new(circ, 0.0)).norm(),
    );
    residuals.insert(
        "poisson_from_star_commutator".to_string(),
        ((star - star_ba) / C64::new(0.0, nu) - C64::new(poisson, 0.0)).norm(),
    );
    Ok(BracketReport { poisson, riemann, kahler, residuals })
}

/// Both sides of the dispersion uncertainty bound at a normalized state.
#[derive(Debug, Clone)]
pub struct UncertaintyReport {
    /// `Delta^2 A . Delta^2 B`
    pub lhs: f64,
    /// `<(1/2i)[A,B]>`, the commutator half-mean
    pub commutator_term: f64,
    /// `(1/2)<AB+BA> - <A><B>`, the quantum covariance
    pub covariance_term: f64,
    /// `commutator_term^2 + covariance_term^2`
    pub rhs: f64,
    /// `lhs - rhs` (nonnegative up to rounding)
    pub slack: f64,
}

/// Evaluates `Delta^2 A . Delta^2 B >= ((hbar/2){F,K})^2 + ({F,K}_+ - FK)^2`
/// where the bracket terms reduce to the commutator half-mean and the
/// covariance; both are also recomputed geometrically in [`bracket_report`].
pub fn uncertainty_check(
    a: &HermitianOperator,
    b: &HermitianOperator,
    x: &StateVector,
    nu: f64,
) -> Result<UncertaintyReport> {
    if !x.is_normalized() {
        return Err(Error::NotNormalized(x.norm()));
    }
    let lhs = dispersion_sq(a, x)? * dispersion_sq(b, x)?;
    // (nu/2) {f,h} = <(1/2i)[A,B]>
    let commutator_term = 0.5 * nu * poisson_bracket(a, b, x, nu)?;
    // (nu/2) ((f,h)) = (1/2)<AB+BA> - <A><B>
    let covariance_term = 0.5 * nu * riemann_bracket(a, b, x, nu)?;
    let rhs = commutator_term * commutator_term + covariance_term * covariance_term;
    Ok(UncertaintyReport { lhs, commutator_term, covariance_term, rhs, slack: lhs - rhs })
}

/// Unitary flow operator `exp(-i (t/nu) A)` by spectral calculus.
pub fn flow_operator(a: &HermitianOperator, t: f64, nu: f64) -> DMatrix<C64> {
    let eig = HermEigen::new(a);
    let n = a.dim();
    let phases = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            (-C64::new(0.0, 1.0) * (t / nu) * eig.eigenvalues[i]).exp()
        } else {
            C64::new(0.0, 0.0)
        }
    });
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// Flow of the Hamiltonian field of `<A>`: `x -> exp(-i (t/nu) A) x`.
pub fn flow(a: &HermitianOperator, t: f64, x: &StateVector, nu: f64) -> Result<StateVector> {
    let eig = HermEigen::new(a);
    let out = eig.apply_function(|l| (-C64::new(0.0, 1.0) * (t / nu) * l).exp(), x.amplitudes());
    StateVector::from_vector(out)
}

/// Pushes a chart tangent forward through a unitary map on the ambient
/// space, returning the tangent in the automatic chart at the image ray.
pub fn pushforward_by_unitary(u: &DMatrix<C64>, v: &TangentVector) -> Result<TangentVector> {
    let zeta = v.base().embed();
    let dir = v.base().embed_direction(v.components());
    let eta = u * zeta;
    let eta_dot = u * dir;
    let image = StateVector::from_vector(eta.clone())?;
    let q = to_chart(&image, ChartSelector::Auto)?;
    let k = q.chart_index() - 1;
    let pivot = eta[k];
    let pivot_dot = eta_dot[k];
    // d/ds [ eta_n / eta_k ] = (etadot_n eta_k - eta_n etadot_k) / eta_k^2
    let comps: Vec<C64> = (0..eta.len())
        .filter(|&i| i != k)
        .map(|i| (eta_dot[i] * pivot - eta[i] * pivot_dot) / (pivot * pivot))
        .collect();
    TangentVector::new(q, comps)
}

/// Kahler norm of `<A>`: `sqrt( sup over rays of <A^dagger A> )`, sampled by
/// projected power iteration on `A^2` with seeded random restarts.
///
/// The dense oracle is [`spectral_norm_dense`]; both agree to 1e-8.
pub fn kahler_norm(a: &HermitianOperator, restarts: usize, seed: u64) -> f64 {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let a2 = a.entries() * a.entries();
    let mut best = 0.0_f64;
    for _ in 0..restarts.max(1) {
        let mut v = crate::hilbert::random_state_with(a.dim(), &mut rng)
            .expect("dim >= 2")
            .amplitudes()
            .clone();
        let mut rayleigh = 0.0;
        for _ in 0..500 {
            let w = &a2 * &v;
            let n = norm_sqr(&w).sqrt();
            if n == 0.0 {
                break; // started in the kernel of A^2
            }
            let next = w.map(|z| z / n);
            let r = hdot(&next, &(&a2 * &next)).re;
            let converged = (r - rayleigh).abs() <= 1e-13 * r.abs().max(1.0);
            v = next;
            rayleigh = r;
            if converged {
                break;
            }
        }
        best = best.max(rayleigh.max(0.0));
    }
    best.sqrt()
}

/// Largest singular value of a Hermitian operator: its spectral radius,
/// from the dense eigendecomposition.
pub fn spectral_norm_dense(a: &HermitianOperator) -> f64 {
    HermEigen::new(a).spectral_radius()
}

/// `true` iff `x` is an eigenvector of `A` within `tol`:
/// `|A x - <A> x| < tol` for normalized `x`. Eigenvectors are exactly the
/// critical points of the mean-value function.
pub fn is_stationary(a: &HermitianOperator, x: &StateVector, tol: f64) -> Result<bool> {
    if !x.is_normalized() {
        return Err(Error::NotNormalized(x.norm()));
    }
    Ok(stationarity_residual(a, x)? < tol)
}

/// `|A x - <A> x|` for normalized `x`.
pub fn stationarity_residual(a: &HermitianOperator, x: &StateVector) -> Result<f64> {
    let mean = mean_value(a, x)?;
    let r = a.apply(x.amplitudes()) - x.amplitudes().map(|z| z * mean);
    Ok(norm_sqr(&r).sqrt())
}
