//! The polar-form system is equivalent to the Schrodinger equation: for an
//! evolved wavefunction, the Hamilton-Jacobi and continuity residuals vanish
//! at the scheme's formal order under simultaneous `(h, dt)` refinement.

use qgeo_core::evolve::{madelung_residual_norms, Scheme};
use qgeo_core::grid::{ComplexGridField, Grid, ScalarField};
use qgeo_core::madelung::Wavefield;
use qgeo_core::C64;

fn free_packet(n: usize, l: f64) -> Wavefield {
    let grid = Grid::periodic_1d(n, -l, l).unwrap();
    let psi = ComplexGridField::from_fn(grid, |x| {
        // drifting Gaussian: sigma0 = 1, k0 = 1
        C64::new(0.0, x[0]).exp() * (-x[0] * x[0] / 4.0).exp()
    });
    Wavefield::new(psi, 1.0, 1.0, None).unwrap()
}

fn oscillator_packet(n: usize, l: f64) -> Wavefield {
    let grid = Grid::periodic_1d(n, -l, l).unwrap();
    let v = ScalarField::from_fn(grid.clone(), |x| 0.5 * x[0] * x[0]);
    let psi = ComplexGridField::from_fn(grid, |x| {
        C64::new((-(x[0] - 1.0) * (x[0] - 1.0) / 2.0).exp(), 0.0)
    });
    Wavefield::new(psi, 1.0, 1.0, Some(v)).unwrap()
}

/// Runs three refinement levels `(n, dt) -> (2n, dt/2) -> (4n, dt/4)` and
/// checks second-order decay plus the final-level tolerance.
fn refinement_sweep(build: impl Fn(usize) -> Wavefield, n0: usize, dt0: f64, t_mid: f64) {
    let mut hj = Vec::new();
    let mut cont = Vec::new();
    for level in 0..3 {
        let n = n0 << level;
        let dt = dt0 / (1 << level) as f64;
        let mid = (t_mid / dt).round() as usize;
        let w = build(n);
        let norms = madelung_residual_norms(&w, dt, mid, Scheme::SplitStep).unwrap();
        assert!(norms.mass_drift < 1e-8, "mass drift {}", norms.mass_drift);
        hj.push(norms.hj_l2);
        cont.push(norms.continuity_l2);
    }
    for k in 0..2 {
        let r_hj = hj[k] / hj[k + 1];
        let r_cont = cont[k] / cont[k + 1];
        assert!(
            r_hj >= 3.5,
            "HJ residual decay ratio {r_hj} below 2nd order: {hj:?}"
        );
        assert!(
            r_cont >= 3.5,
            "continuity residual decay ratio {r_cont} below 2nd order: {cont:?}"
        );
    }
    assert!(hj[2] < 1e-5, "final HJ residual {} too large", hj[2]);
    assert!(cont[2] < 1e-5, "final continuity residual {} too large", cont[2]);
}

#[test]
fn free_packet_residuals_decay_at_second_order() {
    refinement_sweep(|n| free_packet(n, 16.0), 256, 4e-3, 0.256);
}

#[test]
fn harmonic_oscillator_residuals_decay_at_second_order() {
    refinement_sweep(|n| oscillator_packet(n, 12.0), 256, 4e-3, 0.256);
}

#[test]
fn implicit_midpoint_residuals_also_vanish() {
    // the nonperiodic path, at one resolution: residuals stay at the
    // scheme's discretization scale
    let grid = Grid::decay_1d(1024, -16.0, 16.0).unwrap();
    let psi = ComplexGridField::from_fn(grid, |x| {
        C64::new(0.0, x[0]).exp() * (-x[0] * x[0] / 4.0).exp()
    });
    let w = Wavefield::new(psi, 1.0, 1.0, None).unwrap();
    let dt = 1e-3;
    let norms = madelung_residual_norms(&w, dt, 128, Scheme::ImplicitMidpoint).unwrap();
    // CN carries an O(h^2) spatial error through the phase
    assert!(norms.hj_l2 < 5e-3, "CN HJ residual {}", norms.hj_l2);
    assert!(norms.continuity_l2 < 5e-3, "CN continuity residual {}", norms.continuity_l2);
}
