//! Finite-dimensional complex Hilbert space: states, the Hermitian inner
//! product, rays, and the chart atlas of the projective space.
//!
//! A ray `[psi]` with nonvanishing component `eta_k` has chart coordinates
//! `z_n = eta_n / eta_k` (the `k`-th entry removed), which identifies the
//! chart domain with `C^(N-1)`. All chart formulas are invariant under global
//! phase and scale of the representative.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::C64;

/// `|<psi|psi> - 1|` below this counts as normalized.
pub const NORM_TOL: f64 = 1e-12;

/// Hermiticity deviation accepted (and symmetrized away) at construction.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Chart components with magnitude below this put the ray outside the chart.
pub const CHART_FLOOR: f64 = 1e-300;

/// State vector in `C^N`, `N >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::DimensionTooSmall(amplitudes.len()));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        Ok(Self { amps: DVector::from_vec(amplitudes) })
    }

    pub fn from_vector(amps: DVector<C64>) -> Result<Self> {
        Self::new(amps.iter().copied().collect())
    }

    /// Basis vector `e_k` (0-based) in dimension `n`.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        let mut amps = DVector::from_element(n, C64::new(0.0, 0.0));
        amps[k] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm().powi(2) - 1.0).abs() <= NORM_TOL
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(Self { amps: self.amps.map(|z| z / n) })
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { amps: self.amps.map(|z| z * c) }
    }
}

/// Point of the projective space in chart `k` (1-based): the coordinates are
/// the remaining `N-1` component ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    chart_index: usize,
    coords: DVector<C64>,
}

impl ChartPoint {
    pub fn new(chart_index: usize, coords: Vec<C64>) -> Result<Self> {
        let dim = coords.len() + 1;
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        if chart_index == 0 || chart_index > dim {
            return Err(Error::ChartIndexOutOfRange(chart_index, dim));
        }
        if coords.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("chart coordinates"));
        }
        Ok(Self { chart_index, coords: DVector::from_vec(coords) })
    }

    /// Origin of chart `k` in dimension `n` (the ray of the basis vector).
    pub fn origin(n: usize, chart_index: usize) -> Result<Self> {
        Self::new(chart_index, vec![C64::new(0.0, 0.0); n - 1])
    }

    /// 1-based chart label.
    pub fn chart_index(&self) -> usize {
        self.chart_index
    }

    pub fn coords(&self) -> &DVector<C64> {
        &self.coords
    }

    /// Hilbert dimension `N` of the ambient space.
    pub fn dim(&self) -> usize {
        self.coords.len() + 1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coords.iter().map(|z| z.norm_sqr()).sum()
    }

    /// The unnormalized representative with `1` in the chart slot: the vector
    /// `z + h` in chart language.
    pub fn embed(&self) -> DVector<C64> {
        let n = self.dim();
        let k = self.chart_index - 1;
        let mut out = DVector::from_element(n, C64::new(0.0, 0.0));
        for i in 0..n {
            out[i] = match i.cmp(&k) {
                std::cmp::Ordering::Less => self.coords[i],
                std::cmp::Ordering::Equal => C64::new(1.0, 0.0),
                std::cmp::Ordering::Greater => self.coords[i - 1],
            };
        }
        out
    }

    /// Embed a coordinate direction into the ambient space (zero chart slot).
    pub fn embed_direction(&self, v: &DVector<C64>) -> DVector<C64> {
        let n = self.dim();
        let k = self.chart_index - 1;
        let mut out = DVector::from_element(n, C64::new(0.0, 0.0));
        for i in 0..n {
            if i < k {
                out[i] = v[i];
            } else if i > k {
                out[i] = v[i - 1];
            }
        }
        out
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.chart_index == other.chart_index
            && self.coords.len() == other.coords.len()
            && self
                .coords
                .iter()
                .zip(other.coords.iter())
                .all(|(a, b)| (a - b).norm() <= tol)
    }
}

/// N x N complex Hermitian matrix representing an observable.
///
/// Construction symmetrizes the input; deviations from Hermiticity beyond
/// [`HERMITICITY_TOL`] (relative to the matrix scale) are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    entries: DMatrix<C64>,
}

impl HermitianOperator {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        let n = entries.nrows();
        if n != entries.ncols() {
            return Err(Error::DimensionMismatch(n, entries.ncols()));
        }
        let scale = entries.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let adj = entries.adjoint();
        let dev = (&entries - &adj).iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        if dev > HERMITICITY_TOL * scale {
            return Err(Error::NotHermitian(dev, HERMITICITY_TOL * scale));
        }
        Ok(Self { entries: (entries + adj) * C64::new(0.5, 0.0) })
    }

    pub fn identity(n: usize) -> Self {
        Self { entries: DMatrix::identity(n, n) }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(*d, 0.0);
        }
        Self { entries: m }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn apply(&self, x: &DVector<C64>) -> DVector<C64> {
        &self.entries * x
    }

    /// Seeded random Hermitian matrix with independent Gaussian entries
    /// (GUE-type normalization is irrelevant for identity checks).
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        Self::random_with(n, &mut rng)
    }

    pub fn random_with<R: rand::Rng>(n: usize, rng: &mut R) -> Self {
        let g = DMatrix::from_fn(n, n, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        });
        let adj = g.adjoint();
        Self { entries: (g + adj) * C64::new(0.5, 0.0) }
    }
}

/// Hermitian inner product `<phi|psi>`, conjugate-linear in the first slot.
pub fn inner_product(phi: &StateVector, psi: &StateVector) -> Result<C64> {
    if phi.dim() != psi.dim() {
        return Err(Error::DimensionMismatch(phi.dim(), psi.dim()));
    }
    Ok(phi
        .amps
        .iter()
        .zip(psi.amps.iter())
        .map(|(a, b)| a.conj() * b)
        .sum())
}

/// The real decomposition `<phi|psi> = (1/2 hbar) g + (i/2 hbar) omega`:
/// returns `(g, omega) = (2 hbar Re, 2 hbar Im)` of the inner product.
pub fn metric_decomposition(phi: &StateVector, psi: &StateVector, hbar: f64) -> Result<(f64, f64)> {
    let ip = inner_product(phi, psi)?;
    Ok((2.0 * hbar * ip.re, 2.0 * hbar * ip.im))
}

/// Chart selection for [`to_chart`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartSelector {
    /// Chart of the largest-magnitude component (numerically safest).
    Auto,
    /// Fixed 1-based chart index.
    Index(usize),
}

/// Chart coordinates of the ray of `psi` in chart `k`: component ratios with
/// the `k`-th entry removed. Invariant under global phase and scale.
pub fn to_chart(psi: &StateVector, selector: ChartSelector) -> Result<ChartPoint> {
    let n = psi.dim();
    let k = match selector {
        ChartSelector::Auto => {
            let mut best = 0;
            let mut best_mag = -1.0;
            for i in 0..n {
                let mag = psi.amps[i].norm();
                if mag > best_mag {
                    best_mag = mag;
                    best = i;
                }
            }
            best + 1
        }
        ChartSelector::Index(k) => {
            if k == 0 || k > n {
                return Err(Error::ChartIndexOutOfRange(k, n));
            }
            k
        }
    };
    let pivot = psi.amps[k - 1];
    if pivot.norm() <= CHART_FLOOR {
        return Err(Error::RayOutsideChart(k, pivot.norm()));
    }
    let mut coords = Vec::with_capacity(n - 1);
    for i in 0..n {
        if i != k - 1 {
            coords.push(psi.amps[i] / pivot);
        }
    }
    ChartPoint::new(k, coords)
}

/// Normalized representative of a chart point with the chart-slot component
/// real and positive (the canonical representative used throughout testing).
pub fn from_chart(p: &ChartPoint) -> StateVector {
    let raw = p.embed();
    let norm = (1.0 + p.norm_sqr()).sqrt();
    StateVector { amps: raw.map(|z| z / norm) }
}

/// Re-expresses a chart point in chart `j`.
pub fn chart_transition(p: &ChartPoint, j: usize) -> Result<ChartPoint> {
    to_chart(&from_chart(p), ChartSelector::Index(j))
}

/// Normalized state drawn from the unitarily invariant distribution:
/// independent standard complex Gaussian entries, then normalized.
pub fn random_state(n: usize, seed: u64) -> Result<StateVector> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    random_state_with(n, &mut rng)
}

pub fn random_state_with<R: rand::Rng>(n: usize, rng: &mut R) -> Result<StateVector> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let amps: Vec<C64> = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect();
    StateVector::new(amps)?.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn inner_product_orthonormal_basis() {
        let e1 = StateVector::basis(3, 0).unwrap();
        let e2 = StateVector::basis(3, 1).unwrap();
        assert_eq!(inner_product(&e1, &e1).unwrap(), c(1.0, 0.0));
        assert_eq!(inner_product(&e1, &e2).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn inner_product_hermitian_symmetry() {
        for seed in 0..20 {
            let phi = random_state(5, seed).unwrap();
            let psi = random_state(5, seed + 1000).unwrap();
            let a = inner_product(&phi, &psi).unwrap();
            let b = inner_product(&psi, &phi).unwrap();
            assert_abs_diff_eq!(a.re, b.conj().re, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, b.conj().im, epsilon = 1e-15);
        }
    }

    #[test]
    fn inner_product_conjugate_linear_first_slot() {
        let phi = random_state(4, 7).unwrap();
        let psi = random_state(4, 8).unwrap();
        let lam = c(0.3, -1.2);
        let lhs = inner_product(&phi.scale(lam), &psi).unwrap();
        let rhs = lam.conj() * inner_product(&phi, &psi).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn inner_product_dimension_mismatch() {
        let a = random_state(3, 1).unwrap();
        let b = random_state(4, 2).unwrap();
        assert!(matches!(
            inner_product(&a, &b),
            Err(Error::DimensionMismatch(3, 4))
        ));
    }

    #[test]
    fn metric_decomposition_recomposes() {
        let phi = random_state(4, 3).unwrap();
        let psi = random_state(4, 4).unwrap();
        let hbar = 0.7;
        let (g, w) = metric_decomposition(&phi, &psi, hbar).unwrap();
        let ip = inner_product(&phi, &psi).unwrap();
        let recomposed = C64::new(g / (2.0 * hbar), w / (2.0 * hbar));
        assert!((ip - recomposed).norm() < 1e-15);
    }

    #[test]
    fn basis_ray_is_chart_origin() {
        let e2 = StateVector::basis(4, 1).unwrap();
        let p = to_chart(&e2, ChartSelector::Index(2)).unwrap();
        assert!(p.coords().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn to_chart_hand_example() {
        // (1,2,3)/sqrt(14) in chart 1 has coordinates (2, 3).
        let s = 14.0_f64.sqrt();
        let psi = StateVector::new(vec![c(1.0 / s, 0.0), c(2.0 / s, 0.0), c(3.0 / s, 0.0)]).unwrap();
        let p = to_chart(&psi, ChartSelector::Index(1)).unwrap();
        assert_abs_diff_eq!(p.coords()[0].re, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.coords()[1].re, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn to_chart_ray_invariance() {
        let psi = random_state(5, 11).unwrap();
        let scaled = psi.scale(c(0.0, 2.5)); // phase i, modulus 2.5
        let p1 = to_chart(&psi, ChartSelector::Index(3)).unwrap();
        let p2 = to_chart(&scaled, ChartSelector::Index(3)).unwrap();
        assert!(p1.approx_eq(&p2, 1e-14));
    }

    #[test]
    fn to_chart_outside_chart() {
        let e1 = StateVector::basis(3, 0).unwrap();
        assert!(matches!(
            to_chart(&e1, ChartSelector::Index(2)),
            Err(Error::RayOutsideChart(2, _))
        ));
    }

    #[test]
    fn auto_chart_picks_largest_component() {
        let psi = StateVector::new(vec![c(0.1, 0.0), c(0.0, -0.9), c(0.3, 0.0)]).unwrap();
        let p = to_chart(&psi, ChartSelector::Auto).unwrap();
        assert_eq!(p.chart_index(), 2);
    }

    #[test]
    fn from_chart_origin_is_basis_vector() {
        let p = ChartPoint::origin(4, 3).unwrap();
        let psi = from_chart(&p);
        let e3 = StateVector::basis(4, 2).unwrap();
        assert!((inner_product(&psi, &e3).unwrap().norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn from_chart_hand_example() {
        let p = ChartPoint::new(1, vec![c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        let psi = from_chart(&p);
        let s = 14.0_f64.sqrt();
        assert_abs_diff_eq!(psi.amplitudes()[0].re, 1.0 / s, epsilon = 1e-14);
        assert_abs_diff_eq!(psi.amplitudes()[1].re, 2.0 / s, epsilon = 1e-14);
        assert_abs_diff_eq!(psi.amplitudes()[2].re, 3.0 / s, epsilon = 1e-14);
        assert!(psi.is_normalized());
    }

    #[test]
    fn chart_round_trip_on_random_rays() {
        for seed in 0..100 {
            let psi = random_state(6, seed).unwrap();
            let p = to_chart(&psi, ChartSelector::Auto).unwrap();
            let q = to_chart(&from_chart(&p), ChartSelector::Index(p.chart_index())).unwrap();
            assert!(p.approx_eq(&q, 1e-12), "round trip failed at seed {seed}");
        }
    }

    #[test]
    fn chart_transition_hand_example() {
        // chart-1 coords (2,3) -> chart-2 coords (1/2, 3/2)
        let p = ChartPoint::new(1, vec![c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        let q = chart_transition(&p, 2).unwrap();
        assert_abs_diff_eq!(q.coords()[0].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(q.coords()[1].re, 1.5, epsilon = 1e-14);
    }

    #[test]
    fn chart_transition_identity_and_inverse() {
        for seed in 0..50 {
            let psi = random_state(4, 1000 + seed).unwrap();
            let p = to_chart(&psi, ChartSelector::Auto).unwrap();
            let same = chart_transition(&p, p.chart_index()).unwrap();
            assert!(p.approx_eq(&same, 1e-13));
            // transition to another admissible chart and back
            for j in 1..=4 {
                if j == p.chart_index() {
                    continue;
                }
                if psi.amplitudes()[j - 1].norm() < 1e-3 {
                    continue; // stay away from chart boundaries
                }
                let q = chart_transition(&p, j).unwrap();
                let back = chart_transition(&q, p.chart_index()).unwrap();
                assert!(p.approx_eq(&back, 1e-12));
            }
        }
    }

    #[test]
    fn chart_consistency_up_to_phase() {
        // representatives recovered through different charts differ by a phase
        for seed in 0..30 {
            let psi = random_state(3, 2000 + seed).unwrap();
            if psi.amplitudes().iter().any(|z| z.norm() < 1e-6) {
                continue;
            }
            let a = from_chart(&to_chart(&psi, ChartSelector::Index(1)).unwrap());
            let b = from_chart(&to_chart(&psi, ChartSelector::Index(2)).unwrap());
            let overlap = inner_product(&a, &b).unwrap().norm();
            assert!((overlap - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn random_state_deterministic_and_normalized() {
        let a = random_state(8, 42).unwrap();
        let b = random_state(8, 42).unwrap();
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_state_rejects_small_dimension() {
        assert!(matches!(random_state(1, 0), Err(Error::DimensionTooSmall(1))));
    }

    #[test]
    fn random_state_component_mean_is_small() {
        // Monte-Carlo oracle: mean of each component over many draws -> 0
        // within 5/sqrt(draws) (component variance is 1/N <= 1).
        let draws = 10_000;
        let n = 4;
        let mut mean = vec![C64::new(0.0, 0.0); n];
        for seed in 0..draws {
            let s = random_state(n, seed as u64).unwrap();
            for i in 0..n {
                mean[i] += s.amplitudes()[i];
            }
        }
        let bound = 5.0 / (draws as f64).sqrt();
        for m in &mean {
            assert!((*m / draws as f64).norm() < bound);
        }
    }

    #[test]
    fn hermitian_construction_symmetrizes_and_rejects() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.3), c(0.5, -0.3), c(2.0, 0.0)]);
        let h = HermitianOperator::new(m).unwrap();
        assert_eq!(h.entries()[(0, 1)], h.entries()[(1, 0)].conj());

        let bad = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.3), c(0.4, -0.3), c(2.0, 0.0)]);
        assert!(matches!(HermitianOperator::new(bad), Err(Error::NotHermitian(_, _))));
    }
}
