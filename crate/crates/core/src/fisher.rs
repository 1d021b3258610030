//! Discrete and continuous Fisher information: statistical distance, the
//! Fisher matrix of parametric families, the Fisher functional of a sampled
//! density, translation Fisher information, and the exact-uncertainty
//! quantities of a 1-D wavefunction.
//!
//! Conventions: the information matrix and functional carry a 1/2 prefactor,
//! `I = (g^{ik}/2) int (1/P) dP_i dP_k`; the classical convention without the
//! 1/2 is exposed as [`FisherConvention::Unhalved`] so cross-checks against
//! external references stay explicit.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{Boundary, ComplexGridField, Grid, ScalarField};

/// Probability entries below this floor are clamped and the mass
/// renormalized; `1/p` terms stay finite and the clamp count is reported.
pub const PROB_FLOOR: f64 = 1e-12;

/// Relative magnitude below which grid nodes are excluded from quadratures
/// involving `1/rho` or `1/psi`.
pub const MASK_REL: f64 = 1e-10;

/// Probability vector on a finite outcome set: positive entries, unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    p: Vec<f64>,
    clamped: usize,
}

impl ProbabilityVector {
    /// Normalizes the entries; entries below [`PROB_FLOOR`] (after
    /// normalization) are clamped up and the mass renormalized. Negative
    /// entries are rejected.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::DimensionTooSmall(entries.len()));
        }
        for (j, &e) in entries.iter().enumerate() {
            if !(e >= 0.0) || !e.is_finite() {
                return Err(Error::NonPositiveProbability(j, e));
            }
        }
        let total: f64 = entries.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroVector);
        }
        let mut p: Vec<f64> = entries.iter().map(|e| e / total).collect();
        let clamped = p.iter().filter(|&&x| x < PROB_FLOOR).count();
        if clamped > 0 {
            for x in &mut p {
                if *x < PROB_FLOOR {
                    *x = PROB_FLOOR;
                }
            }
            let t: f64 = p.iter().sum();
            for x in &mut p {
                *x /= t;
            }
        }
        Ok(Self { p, clamped })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    /// Number of entries raised to the floor at construction.
    pub fn clamped_count(&self) -> usize {
        self.clamped
    }
}

/// Discrete Fisher quadratic form `sum dp_j^2 / p_j` for a mass-preserving
/// perturbation (`sum dp = 0` within 1e-12).
pub fn fisher_metric_discrete(p: &ProbabilityVector, dp: &[f64]) -> Result<f64> {
    if dp.len() != p.len() {
        return Err(Error::DimensionMismatch(dp.len(), p.len()));
    }
    let s: f64 = dp.iter().sum();
    if s.abs() > 1e-12 {
        return Err(Error::UnbalancedPerturbation(s));
    }
    Ok(p.values().iter().zip(dp).map(|(pj, dj)| dj * dj / pj).sum())
}

/// Statistical distance `arccos( sum sqrt(p1 p2) )` in `[0, pi/2]`.
pub fn statistical_distance(p1: &ProbabilityVector, p2: &ProbabilityVector) -> Result<f64> {
    if p1.len() != p2.len() {
        return Err(Error::DimensionMismatch(p1.len(), p2.len()));
    }
    let overlap: f64 = p1
        .values()
        .iter()
        .zip(p2.values())
        .map(|(a, b)| (a * b).sqrt())
        .sum();
    Ok(overlap.clamp(0.0, 1.0).acos())
}

/// Nonnegative density sampled on a grid, normalized to unit quadrature mass.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    field: ScalarField,
}

impl DensityGrid {
    pub fn from_field(field: ScalarField) -> Result<Self> {
        if field.values().iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::NonFinite("density values must be nonnegative"));
        }
        let mass = field.integrate();
        if mass <= 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(Self { field: field.map(|v| v / mass) })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::from_field(ScalarField::from_fn(grid, f))
    }

    /// Isotropic (or per-axis) Gaussian centered at `centers`.
    pub fn gaussian(grid: Grid, sigmas: &[f64], centers: &[f64]) -> Result<Self> {
        let rank = grid.rank();
        if sigmas.len() != rank || centers.len() != rank {
            return Err(Error::GridMismatch("sigma/center rank".into()));
        }
        let s = sigmas.to_vec();
        let c = centers.to_vec();
        Self::from_fn(grid, move |x| {
            let e: f64 = x
                .iter()
                .enumerate()
                .map(|(a, xi)| {
                    let d = (xi - c[a]) / s[a];
                    -0.5 * d * d
                })
                .sum();
            e.exp()
        })
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn mass(&self) -> f64 {
        self.field.integrate()
    }

    /// Mask of nodes above [`MASK_REL`] times the peak density.
    pub fn mask(&self) -> Vec<bool> {
        self.field.mask_above(MASK_REL)
    }
}

/// Translation Fisher matrix `I_jk = (1/2) int (1/P) d_j P d_k P` of a
/// sampled density (spatial derivatives, 4th-order interior stencils,
/// masked `1/P`).
pub fn translation_fisher_matrix(rho: &DensityGrid) -> DMatrix<f64> {
    let rank = rho.grid().rank();
    let mask = rho.mask();
    let grads: Vec<ScalarField> = (0..rank).map(|a| rho.field().derivative(a)).collect();
    let mut out = DMatrix::zeros(rank, rank);
    for j in 0..rank {
        for k in j..rank {
            let mut acc = 0.0;
            for i in 0..rho.grid().len() {
                if !mask[i] {
                    continue;
                }
                acc += grads[j].values()[i] * grads[k].values()[i] / rho.values()[i]
                    * rho.grid().node_weight(i);
            }
            out[(j, k)] = 0.5 * acc;
            out[(k, j)] = 0.5 * acc;
        }
    }
    out
}

/// Cross entropy of a density against its translate, exactly and through the
/// quadratic Fisher form: returns `(J_exact, J_quadratic)` where
///
/// ```text
/// J_exact     = int P(y + dy) log[ P(y + dy) / P(y) ]
/// J_quadratic = I_jk dy^j dy^k
/// ```
///
/// The shift must be an integer number of grid steps on every axis. Decay
/// grids reject shifts beyond an eighth of the domain.
pub fn cross_entropy_expansion(rho: &DensityGrid, shift: &[f64]) -> Result<(f64, f64)> {
    let grid = rho.grid();
    let rank = grid.rank();
    if shift.len() != rank {
        return Err(Error::GridMismatch("shift rank".into()));
    }
    let mut steps = Vec::with_capacity(rank);
    for a in 0..rank {
        let s = shift[a] / grid.spacing()[a];
        let rounded = s.round();
        if (s - rounded).abs() > 1e-9 {
            return Err(Error::ShiftNotGridAligned(shift[a], grid.spacing()[a]));
        }
        if grid.boundary() == Boundary::Decay {
            let extent = grid.spacing()[a] * (grid.shape()[a] - 1) as f64;
            if shift[a].abs() > extent / 8.0 {
                return Err(Error::ShiftTooLarge(format!(
                    "axis {a}: |{}| > {}",
                    shift[a],
                    extent / 8.0
                )));
            }
        }
        steps.push(rounded as isize);
    }

    // shifted sample: P~(y) = P(y + dy); out-of-range nodes read as the floor
    let floor = PROB_FLOOR * rho.field().max_abs();
    let len = grid.len();
    let mut shifted = vec![floor; len];
    for i in 0..len {
        let mut multi = grid.multi_index(i);
        let mut ok = true;
        for a in 0..rank {
            let j = multi[a] as isize + steps[a];
            match grid.boundary() {
                Boundary::Periodic => {
                    multi[a] = j.rem_euclid(grid.shape()[a] as isize) as usize;
                }
                Boundary::Decay => {
                    if j < 0 || j >= grid.shape()[a] as isize {
                        ok = false;
                        break;
                    }
                    multi[a] = j as usize;
                }
            }
        }
        if ok {
            shifted[i] = rho.values()[grid.flat_index(&multi)].max(floor);
        }
    }

    let mut j_exact = 0.0;
    for i in 0..len {
        let p = rho.values()[i].max(floor);
        let pt = shifted[i];
        j_exact += pt * (pt / p).ln() * grid.node_weight(i);
    }

    let info = translation_fisher_matrix(rho);
    let mut j_quad = 0.0;
    for j in 0..rank {
        for k in 0..rank {
            j_quad += info[(j, k)] * shift[j] * shift[k];
        }
    }
    Ok((j_exact, j_quad))
}

/// Parametric family of densities over a fixed grid.
pub struct ParametricFamily {
    n_params: usize,
    evaluator: Box<dyn Fn(&Grid, &[f64]) -> Result<DensityGrid> + Send + Sync>,
}

impl ParametricFamily {
    pub fn new(
        n_params: usize,
        evaluator: impl Fn(&Grid, &[f64]) -> Result<DensityGrid> + Send + Sync + 'static,
    ) -> Self {
        Self { n_params, evaluator: Box::new(evaluator) }
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn density(&self, grid: &Grid, theta: &[f64]) -> Result<DensityGrid> {
        if theta.len() != self.n_params {
            return Err(Error::DimensionMismatch(theta.len(), self.n_params));
        }
        (self.evaluator)(grid, theta)
    }
}

/// Fisher information matrix `I_jk(theta) = (1/2) int (1/P) dP/dtheta_j
/// dP/dtheta_k` with parameter derivatives by central differences at step
/// `1e-5 (1 + |theta_j|)`. Symmetric positive semi-definite.
pub fn fisher_matrix(family: &ParametricFamily, grid: &Grid, theta: &[f64]) -> Result<DMatrix<f64>> {
    let m = family.n_params();
    let base = family.density(grid, theta)?;
    let mask = base.mask();
    let mut dps: Vec<Vec<f64>> = Vec::with_capacity(m);
    for j in 0..m {
        let h = 1e-5 * (1.0 + theta[j].abs());
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        tp[j] += h;
        tm[j] -= h;
        let pp = family.density(grid, &tp)?;
        let pm = family.density(grid, &tm)?;
        let dp: Vec<f64> = pp
            .values()
            .iter()
            .zip(pm.values())
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        if dp.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter derivative of the density"));
        }
        dps.push(dp);
    }
    let mut out = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in j..m {
            let mut acc = 0.0;
            for i in 0..grid.len() {
                if !mask[i] {
                    continue;
                }
                acc += dps[j][i] * dps[k][i] / base.values()[i] * grid.node_weight(i);
            }
            out[(j, k)] = 0.5 * acc;
            out[(k, j)] = 0.5 * acc;
        }
    }
    Ok(out)
}

/// Prefactor convention of the Fisher functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FisherConvention {
    /// `(g^{ik}/2) int (1/rho) d_i rho d_k rho`
    Halved,
    /// `g^{ik} int (1/rho) d_i rho d_k rho` (classical convention)
    Unhalved,
}

/// Fisher functional of a sampled density against a constant inverse metric.
/// Rejects inverse metrics that are not positive semi-definite.
pub fn fisher_functional(
    rho: &DensityGrid,
    inverse_metric: &DMatrix<f64>,
    convention: FisherConvention,
) -> Result<f64> {
    let rank = rho.grid().rank();
    if inverse_metric.nrows() != rank || inverse_metric.ncols() != rank {
        return Err(Error::DimensionMismatch(inverse_metric.nrows(), rank));
    }
    let sym = (inverse_metric + inverse_metric.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym.clone());
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -1e-12 {
        return Err(Error::MetricNotPsd(min_eig));
    }
    let mask = rho.mask();
    let grads: Vec<ScalarField> = (0..rank).map(|a| rho.field().derivative(a)).collect();
    let mut acc = 0.0;
    for i in 0..rho.grid().len() {
        if !mask[i] {
            continue;
        }
        let mut q = 0.0;
        for a in 0..rank {
            for b in 0..rank {
                q += sym[(a, b)] * grads[a].values()[i] * grads[b].values()[i];
            }
        }
        acc += q / rho.values()[i] * rho.grid().node_weight(i);
    }
    Ok(match convention {
        FisherConvention::Halved => 0.5 * acc,
        FisherConvention::Unhalved => acc,
    })
}

/// Fisher information of translations of a 1-D density and the Fisher
/// length: `F_X = int P ((log P)')^2 > 0`, `delta_X = F_X^{-1/2}`.
pub fn translation_fisher(rho: &DensityGrid) -> Result<(f64, f64)> {
    if rho.grid().rank() != 1 {
        return Err(Error::GridMismatch("translation Fisher needs a 1-D grid".into()));
    }
    let f = fisher_functional(rho, &DMatrix::identity(1, 1), FisherConvention::Unhalved)?;
    if f <= 0.0 {
        return Err(Error::DegenerateGrid("zero Fisher information".into()));
    }
    Ok((f, 1.0 / f.sqrt()))
}

/// Mean and variance of the position under a 1-D density.
pub fn position_moments(rho: &DensityGrid) -> Result<(f64, f64)> {
    if rho.grid().rank() != 1 {
        return Err(Error::GridMismatch("position moments need a 1-D grid".into()));
    }
    let grid = rho.grid();
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for i in 0..grid.len() {
        let x = grid.position(i)[0];
        let w = rho.values()[i] * grid.node_weight(i);
        m1 += x * w;
        m2 += x * x * w;
    }
    Ok((m1, m2 - m1 * m1))
}

/// Exact-uncertainty quantities of a normalized 1-D wavefunction.
#[derive(Debug, Clone)]
pub struct ExactUncertaintyReport {
    /// Root mean square position deviation.
    pub delta_x: f64,
    /// Fisher length `delta X = F_X^{-1/2}`.
    pub fisher_length: f64,
    /// Total momentum spread.
    pub delta_p: f64,
    /// Spread of the classical momentum field.
    pub delta_p_classical: f64,
    /// Nonclassical spread, `sqrt(dp^2 - dp_cl^2)`; satisfies
    /// `fisher_length * delta_p_nonclassical = hbar/2` up to discretization.
    pub delta_p_nonclassical: f64,
    /// `<p>` from the momentum-operator quadrature.
    pub mean_p: f64,
    /// `<p_cl>` from the classical momentum field.
    pub mean_p_classical: f64,
    /// The classical momentum field `hbar Im(psibar psi')/|psi|^2`
    /// (zero at masked nodes).
    pub p_classical: ScalarField,
    /// Nodes excluded because `|psi|` fell below the mask threshold.
    pub masked_nodes: usize,
}

/// Computes the exact-uncertainty chain for a 1-D wavefunction on a decay
/// grid: `Delta X >= delta X` and `delta X * Delta p_nc = hbar/2`.
pub fn exact_uncertainty(psi: &ComplexGridField, hbar: f64) -> Result<ExactUncertaintyReport> {
    let grid = psi.grid();
    if grid.rank() != 1 {
        return Err(Error::GridMismatch("exact uncertainty needs a 1-D grid".into()));
    }
    if grid.boundary() != Boundary::Decay {
        return Err(Error::BoundaryPolicy { expected: "decay", found: grid.boundary().as_str() });
    }
    let rho_field = psi.abs_sq();
    let mass = rho_field.integrate();
    if (mass - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(mass.sqrt()));
    }
    let rho = DensityGrid::from_field(rho_field.clone())?;
    let (delta_x_sq_mean, var_x) = position_moments(&rho)?;
    let _ = delta_x_sq_mean;
    let delta_x = var_x.sqrt();
    let (_f_x, fisher_length) = translation_fisher(&rho)?;

    let dpsi = psi.derivative(0);
    // <p> = -i hbar int psibar psi' ; imaginary part is the boundary residual
    let mut mean_p_c = num_complex::Complex64::new(0.0, 0.0);
    let mut mean_p2 = 0.0;
    for i in 0..grid.len() {
        let w = grid.node_weight(i);
        mean_p_c += psi.values()[i].conj() * dpsi.values()[i] * w;
        mean_p2 += dpsi.values()[i].norm_sqr() * w;
    }
    let mean_p = (mean_p_c * num_complex::Complex64::new(0.0, -hbar)).re;
    let mean_p2 = hbar * hbar * mean_p2;

    // classical momentum field on unmasked nodes
    let peak = rho_field.max_abs().sqrt(); // max |psi|
    let mut p_cl_vals = vec![0.0; grid.len()];
    let mut masked_nodes = 0;
    let mut mean_pcl = 0.0;
    let mut mean_pcl2 = 0.0;
    for i in 0..grid.len() {
        let amp = psi.values()[i].norm();
        if amp < MASK_REL * peak {
            masked_nodes += 1;
            continue;
        }
        let val = hbar * (psi.values()[i].conj() * dpsi.values()[i]).im / rho_field.values()[i];
        p_cl_vals[i] = val;
        let w = rho_field.values()[i] * grid.node_weight(i);
        mean_pcl += val * w;
        mean_pcl2 += val * val * w;
    }
    let p_classical = ScalarField::new(grid.clone(), p_cl_vals)?;

    let var_p = (mean_p2 - mean_p * mean_p).max(0.0);
    let var_pcl = (mean_pcl2 - mean_pcl * mean_pcl).max(0.0);
    let var_pnc = (var_p - var_pcl).max(0.0);
    Ok(ExactUncertaintyReport {
        delta_x,
        fisher_length,
        delta_p: var_p.sqrt(),
        delta_p_classical: var_pcl.sqrt(),
        delta_p_nonclassical: var_pnc.sqrt(),
        mean_p,
        mean_p_classical: mean_pcl,
        p_classical,
        masked_nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn gaussian_1d(n: usize, l: f64, sigma: f64) -> DensityGrid {
        let grid = Grid::decay_1d(n, -l, l).unwrap();
        DensityGrid::gaussian(grid, &[sigma], &[0.0]).unwrap()
    }

    fn random_prob(n: usize, seed: u64) -> ProbabilityVector {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        ProbabilityVector::new((0..n).map(|_| rng.random::<f64>() + 0.05).collect()).unwrap()
    }

    fn balanced_perturbation(n: usize, seed: u64, scale: f64) -> Vec<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut dp: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() - 0.5) * scale).collect();
        let mean = dp.iter().sum::<f64>() / n as f64;
        for d in &mut dp {
            *d -= mean;
        }
        dp
    }

    #[test]
    fn discrete_metric_basics() {
        let p = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(fisher_metric_discrete(&p, &[0.0, 0.0]).unwrap(), 0.0);
        let eps = 1e-3;
        let v = fisher_metric_discrete(&p, &[eps, -eps]).unwrap();
        assert_abs_diff_eq!(v, 4.0 * eps * eps, epsilon = 1e-18);
        assert!(matches!(
            fisher_metric_discrete(&p, &[0.1, 0.0]),
            Err(Error::UnbalancedPerturbation(_))
        ));
    }

    #[test]
    fn discrete_metric_sqrt_coordinates_oracle() {
        // sum dp^2/p equals 4 sum (d sqrt p)^2 up to O(eps^3)
        let p = random_prob(6, 3);
        let dp = balanced_perturbation(6, 4, 1e-4);
        let metric = fisher_metric_discrete(&p, &dp).unwrap();
        let sqrt_form: f64 = p
            .values()
            .iter()
            .zip(&dp)
            .map(|(pj, dj)| {
                let ds = (pj + dj).sqrt() - pj.sqrt();
                4.0 * ds * ds
            })
            .sum();
        assert!((metric - sqrt_form).abs() / metric < 1e-3);
    }

    #[test]
    fn discrete_metric_is_quadratic_form() {
        // bilinearity by superposition to 1e-12: Q(a+b) + Q(a-b) = 2Q(a) + 2Q(b)
        let p = random_prob(8, 9);
        let a = balanced_perturbation(8, 10, 1e-2);
        let b = balanced_perturbation(8, 11, 1e-2);
        let plus: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let minus: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let lhs = fisher_metric_discrete(&p, &plus).unwrap() + fisher_metric_discrete(&p, &minus).unwrap();
        let rhs = 2.0 * fisher_metric_discrete(&p, &a).unwrap() + 2.0 * fisher_metric_discrete(&p, &b).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn statistical_distance_endpoints_and_limit() {
        let p = ProbabilityVector::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(statistical_distance(&p, &p).unwrap(), 0.0);
        // disjoint supports (floored entries keep this within ~sqrt(floor))
        let a = ProbabilityVector::new(vec![1.0, 0.0]).unwrap();
        let b = ProbabilityVector::new(vec![0.0, 1.0]).unwrap();
        assert!((statistical_distance(&a, &b).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-5);
        // ds^2 -> (1/4) Fisher metric as dp -> 0
        let p = random_prob(6, 21);
        for scale in [1e-3, 1e-4] {
            let dp = balanced_perturbation(6, 22, scale);
            let shifted =
                ProbabilityVector::new(p.values().iter().zip(&dp).map(|(a, b)| a + b).collect())
                    .unwrap();
            let ds = statistical_distance(&p, &shifted).unwrap();
            let quarter_metric = 0.25 * fisher_metric_discrete(&p, &dp).unwrap();
            let ratio = ds * ds / quarter_metric;
            assert!((ratio - 1.0).abs() < 1e-2 * scale / 1e-4, "ratio {ratio} at scale {scale}");
        }
    }

    #[test]
    fn statistical_distance_triangle_and_permutation() {
        for seed in 0..30 {
            let a = random_prob(5, seed);
            let b = random_prob(5, seed + 100);
            let c = random_prob(5, seed + 200);
            let ab = statistical_distance(&a, &b).unwrap();
            let bc = statistical_distance(&b, &c).unwrap();
            let ac = statistical_distance(&a, &c).unwrap();
            assert!(ac <= ab + bc + 1e-12);
            assert_abs_diff_eq!(ab, statistical_distance(&b, &a).unwrap(), epsilon = 1e-15);
            // simultaneous permutation leaves it unchanged
            let perm = |v: &ProbabilityVector| {
                ProbabilityVector::new(v.values().iter().rev().cloned().collect()).unwrap()
            };
            assert_abs_diff_eq!(
                ab,
                statistical_distance(&perm(&a), &perm(&b)).unwrap(),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn cross_entropy_gaussian_oracle() {
        let sigma = 1.3;
        let rho = gaussian_1d(1024, 14.0, sigma);
        let h = rho.grid().spacing()[0];
        assert_eq!(cross_entropy_expansion(&rho, &[0.0]).unwrap(), (0.0, 0.0));
        let dy = 8.0 * h;
        let (exact, quad) = cross_entropy_expansion(&rho, &[dy]).unwrap();
        let oracle = dy * dy / (2.0 * sigma * sigma);
        assert!((quad - oracle).abs() / oracle < 1e-6, "quad {quad} vs {oracle}");
        assert!((exact - oracle).abs() / oracle < 1e-2, "exact {exact} vs {oracle}");
    }

    #[test]
    fn cross_entropy_cubic_convergence() {
        let rho = gaussian_1d(2048, 14.0, 1.0);
        let h = rho.grid().spacing()[0];
        let mut prev_gap = f64::INFINITY;
        for steps in [32.0, 16.0, 8.0] {
            let dy = steps * h;
            let (exact, quad) = cross_entropy_expansion(&rho, &[dy]).unwrap();
            let gap = (exact - quad).abs() / dy.powi(3);
            // |J_exact - J_quad| / |dy|^3 stays bounded as dy halves
            assert!(gap < 1.0, "cubic ratio {gap} at dy {dy}");
            assert!(gap < prev_gap * 4.0);
            prev_gap = gap;
        }
    }

    #[test]
    fn cross_entropy_rejects_misaligned_or_large_shifts() {
        let rho = gaussian_1d(128, 8.0, 1.0);
        let h = rho.grid().spacing()[0];
        assert!(matches!(
            cross_entropy_expansion(&rho, &[0.37 * h]),
            Err(Error::ShiftNotGridAligned(_, _))
        ));
        assert!(matches!(
            cross_entropy_expansion(&rho, &[64.0 * h]),
            Err(Error::ShiftTooLarge(_))
        ));
    }

    #[test]
    fn fisher_matrix_gaussian_location_family() {
        // location family P(x - theta), sigma = 1: I_11 = 1/2 in the halved
        // convention
        let family = ParametricFamily::new(1, |grid, th| {
            DensityGrid::gaussian(grid.clone(), &[1.0], &[th[0]])
        });
        let grid = Grid::decay_1d(768, -12.0, 12.0).unwrap();
        let info = fisher_matrix(&family, &grid, &[0.3]).unwrap();
        assert!((info[(0, 0)] - 0.5).abs() < 1e-6, "I_11 = {}", info[(0, 0)]);

        // reparametrization theta' = 2 theta scales I by 1/4
        let family2 = ParametricFamily::new(1, |grid, th| {
            DensityGrid::gaussian(grid.clone(), &[1.0], &[0.5 * th[0]])
        });
        let info2 = fisher_matrix(&family2, &grid, &[0.6]).unwrap();
        assert!((info2[(0, 0)] - 0.125).abs() < 1e-6, "I'_11 = {}", info2[(0, 0)]);
    }

    #[test]
    fn fisher_matrix_is_psd_on_random_two_parameter_families() {
        for seed in 0..5 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let w: f64 = 0.2 + 0.6 * rng.random::<f64>();
            let family = ParametricFamily::new(2, move |grid, th| {
                let g1 = DensityGrid::gaussian(grid.clone(), &[1.0], &[th[0]])?;
                let g2 = DensityGrid::gaussian(grid.clone(), &[1.5], &[th[1]])?;
                let mixed = g1
                    .field()
                    .zip_with(g2.field(), |a, b| w * a + (1.0 - w) * b)?;
                DensityGrid::from_field(mixed)
            });
            let grid = Grid::decay_1d(512, -14.0, 14.0).unwrap();
            let info = fisher_matrix(&family, &grid, &[0.4, -0.7]).unwrap();
            let eig = nalgebra::SymmetricEigen::new(info);
            let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-10, "min eigenvalue {min} at seed {seed}");
        }
    }

    #[test]
    fn fisher_functional_values_and_scaling() {
        // uniform density on a periodic grid has zero information
        let grid = Grid::periodic_1d(64, 0.0, 2.0).unwrap();
        let uniform = DensityGrid::from_fn(grid, |_| 1.0).unwrap();
        let id = DMatrix::identity(1, 1);
        assert_abs_diff_eq!(
            fisher_functional(&uniform, &id, FisherConvention::Halved).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        // Gaussian: halved I = 1/(2 sigma^2)
        let sigma = 0.8;
        let rho = gaussian_1d(1024, 12.0, sigma);
        let i_half = fisher_functional(&rho, &id, FisherConvention::Halved).unwrap();
        assert!((i_half - 0.5 / (sigma * sigma)).abs() * sigma * sigma * 2.0 < 1e-6);
        // scaling x -> kx multiplies information by k^2
        let k = 2.0;
        let scaled = gaussian_1d(1024, 12.0 / k, sigma / k);
        let i_scaled = fisher_functional(&scaled, &id, FisherConvention::Halved).unwrap();
        assert!((i_scaled / i_half - k * k).abs() < 1e-6);
        // non-PSD metric rejected
        let bad = DMatrix::from_row_slice(1, 1, &[-1.0]);
        assert!(matches!(
            fisher_functional(&rho, &bad, FisherConvention::Halved),
            Err(Error::MetricNotPsd(_))
        ));
    }

    #[test]
    fn fisher_functional_matches_binned_discrete_metric() {
        // continuum limit: (discrete metric under a shift dp) / shift^2
        // approaches the unhalved functional within 2% at 512 bins
        let sigma = 1.1;
        let n = 512;
        let grid = Grid::decay_1d(n, -10.0, 10.0).unwrap();
        let rho = DensityGrid::gaussian(grid.clone(), &[sigma], &[0.0]).unwrap();
        let h = grid.spacing()[0];
        let shift = 2.0 * h;
        let bins =
            ProbabilityVector::new(rho.values().iter().map(|v| v * h).collect()).unwrap();
        let shifted_density =
            DensityGrid::gaussian(grid.clone(), &[sigma], &[shift]).unwrap();
        let shifted_bins =
            ProbabilityVector::new(shifted_density.values().iter().map(|v| v * h).collect())
                .unwrap();
        let dp: Vec<f64> = shifted_bins
            .values()
            .iter()
            .zip(bins.values())
            .map(|(a, b)| a - b)
            .collect();
        let metric = fisher_metric_discrete(&bins, &dp).unwrap();
        let unhalved =
            fisher_functional(&rho, &DMatrix::identity(1, 1), FisherConvention::Unhalved).unwrap();
        let ratio = metric / (shift * shift) / unhalved;
        assert!((ratio - 1.0).abs() < 0.02, "continuum ratio {ratio}");
    }

    #[test]
    fn translation_fisher_gaussian_and_scaling() {
        let sigma = 1.7;
        let rho = gaussian_1d(1024, 18.0, sigma);
        let (f, len) = translation_fisher(&rho).unwrap();
        assert!((f - 1.0 / (sigma * sigma)).abs() * sigma * sigma < 1e-7);
        assert!((len - sigma).abs() < 1e-6);
        // P_k(x) = k P(kx): F -> k^2 F
        let k = 3.0;
        let rho_k = gaussian_1d(1024, 18.0 / k, sigma / k);
        let (fk, _) = translation_fisher(&rho_k).unwrap();
        assert!((fk / f - k * k).abs() < 1e-6);
    }

    #[test]
    fn translation_fisher_grid_convergence_order() {
        let sigma = 1.0;
        let exact = 1.0 / (sigma * sigma);
        let err = |n: usize| {
            let (f, _) = translation_fisher(&gaussian_1d(n, 10.0, sigma)).unwrap();
            (f - exact).abs()
        };
        let e1 = err(128);
        let e2 = err(256);
        assert!(e1 / e2 >= 4.0, "convergence ratio {} below 2nd order", e1 / e2);
    }

    #[test]
    fn cramer_rao_on_mixtures() {
        // Var(X) F_X >= 1 with equality exactly for the Gaussian
        let grid = Grid::decay_1d(1024, -16.0, 16.0).unwrap();
        let gauss = DensityGrid::gaussian(grid.clone(), &[1.4], &[0.0]).unwrap();
        let (f, _) = translation_fisher(&gauss).unwrap();
        let (_, var) = position_moments(&gauss).unwrap();
        assert!((var * f - 1.0).abs() < 1e-6, "Gaussian equality: {}", var * f);
        for seed in 0..10 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let w: f64 = 0.2 + 0.6 * rng.random::<f64>();
            let off: f64 = 1.0 + 2.0 * rng.random::<f64>();
            let a = DensityGrid::gaussian(grid.clone(), &[1.0], &[-off]).unwrap();
            let b = DensityGrid::gaussian(grid.clone(), &[0.7], &[off]).unwrap();
            let mix = DensityGrid::from_field(
                a.field().zip_with(b.field(), |x, y| w * x + (1.0 - w) * y).unwrap(),
            )
            .unwrap();
            let (f, _) = translation_fisher(&mix).unwrap();
            let (_, var) = position_moments(&mix).unwrap();
            assert!(var * f >= 1.0 - 1e-9, "Cramer-Rao violated: {}", var * f);
        }
    }

    fn gaussian_packet(n: usize, l: f64, sigma: f64, k0: f64) -> ComplexGridField {
        let grid = Grid::decay_1d(n, -l, l).unwrap();
        let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma).powf(0.25);
        ComplexGridField::from_fn(grid, |x| {
            let env = norm * (-x[0] * x[0] / (4.0 * sigma * sigma)).exp();
            C64::new(0.0, k0 * x[0]).exp() * env
        })
    }

    #[test]
    fn exact_uncertainty_real_gaussian() {
        let hbar = 1.0;
        let sigma = 1.2;
        let psi = gaussian_packet(1024, 16.0, sigma, 0.0);
        let rep = exact_uncertainty(&psi, hbar).unwrap();
        // real wavefunction: p_cl = 0, so dp_nc = dp
        assert!(rep.delta_p_classical.abs() < 1e-10);
        assert!((rep.delta_p_nonclassical - rep.delta_p).abs() < 1e-10);
        // Gaussian saturates: delta_x = fisher_length = sigma, dp = hbar/(2 sigma)
        assert!((rep.delta_x - sigma).abs() < 1e-6);
        assert!((rep.fisher_length - sigma).abs() < 1e-6);
        let product = rep.fisher_length * rep.delta_p_nonclassical;
        assert!(
            (product - hbar / 2.0).abs() < 1e-6,
            "exact uncertainty product {product}"
        );
        assert!(rep.delta_x >= rep.fisher_length - 1e-9);
    }

    #[test]
    fn exact_uncertainty_modulated_gaussian() {
        let hbar = 1.0;
        let k0 = 1.5;
        let psi = gaussian_packet(4096, 18.0, 1.0, k0);
        let rep = exact_uncertainty(&psi, hbar).unwrap();
        assert!((rep.mean_p - hbar * k0).abs() < 1e-8, "<p> = {}", rep.mean_p);
        assert!(
            (rep.mean_p - rep.mean_p_classical).abs() < 1e-8,
            "<p> {} vs <p_cl> {}",
            rep.mean_p,
            rep.mean_p_classical
        );
        // the exact-uncertainty product is phase-insensitive
        let product = rep.fisher_length * rep.delta_p_nonclassical;
        assert!((product - hbar / 2.0).abs() < 1e-6);
        // chain dX dp >= deltaX dp >= deltaX dp_nc (Gaussian saturates the
        // first link, so allow discretization-scale slack)
        assert!(rep.delta_x * rep.delta_p >= rep.fisher_length * rep.delta_p - 1e-7);
        assert!(rep.fisher_length * rep.delta_p >= product - 1e-7);
    }

    #[test]
    fn exact_uncertainty_requires_decay_normalized() {
        let grid = Grid::periodic_1d(64, -8.0, 8.0).unwrap();
        let psi = ComplexGridField::from_fn(grid, |x| C64::new((-x[0] * x[0]).exp(), 0.0));
        assert!(matches!(
            exact_uncertainty(&psi, 1.0),
            Err(Error::BoundaryPolicy { .. })
        ));
        let grid = Grid::decay_1d(64, -8.0, 8.0).unwrap();
        let unnorm = ComplexGridField::from_fn(grid, |x| C64::new(2.0 * (-x[0] * x[0]).exp(), 0.0));
        assert!(matches!(exact_uncertainty(&unnorm, 1.0), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn probability_vector_clamps_and_reports() {
        let p = ProbabilityVector::new(vec![1.0, 0.0, 1e-20]).unwrap();
        assert_eq!(p.clamped_count(), 2);
        assert!((p.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.values().iter().all(|&x| x >= PROB_FLOOR * 0.5));
        assert!(matches!(
            ProbabilityVector::new(vec![0.5, -0.1]),
            Err(Error::NonPositiveProbability(1, _))
        ));
    }
}
