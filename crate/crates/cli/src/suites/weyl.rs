//! Weyl-geometry suite: the sphere oracle, connection and curvature
//! symmetries, the scalar decomposition, the density gauge, and the
//! quantum-potential / Fisher / curvature chain.

use nalgebra::DMatrix;
use qgeo_core::fisher::DensityGrid;
use qgeo_core::grid::{Boundary, Grid, ScalarField};
use qgeo_core::madelung::STRONG_SUPPORT_REL;
use qgeo_core::weyl::{
    christoffel, covariant_derivative, covariant_derivative_mixed, curvature,
    fisher_curvature_report, gamma_coupling, gauge_from_density, metric_covariant_derivative,
    q_curvature_identity, ricci_scalar, scalar_decomposition_check, weyl_connection, MetricSpec,
    TensorField, Variance, WeylManifold, CURVATURE_MARGIN,
};

use crate::config::SuiteConfig;
use crate::report::CheckSet;

fn sphere_manifold(a: f64, nodes: usize) -> anyhow::Result<WeylManifold> {
    let theta_min = 0.7;
    let theta_max = std::f64::consts::PI - 0.7;
    let grid = Grid::new(
        vec![nodes, nodes],
        vec![(theta_max - theta_min) / (nodes - 1) as f64, 1.5 / (nodes - 1) as f64],
        vec![theta_min, 0.0],
        Boundary::Decay,
    )?;
    let mut metric = TensorField::zeros(grid.clone(), 2, 2);
    for node in 0..grid.len() {
        let theta = grid.position(node)[0];
        metric.set(node, &[0, 0], a * a);
        metric.set(node, &[1, 1], a * a * theta.sin() * theta.sin());
    }
    Ok(WeylManifold::new(
        grid.clone(),
        MetricSpec::Sampled(metric),
        TensorField::zeros(grid, 2, 1),
    )?)
}

fn gaussian_3d(nodes: usize, l: f64, sigma: f64) -> anyhow::Result<ScalarField> {
    let grid = Grid::decay_cube(3, nodes, -l, l)?;
    Ok(ScalarField::from_fn(grid, move |x| {
        (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (2.0 * sigma * sigma)).exp()
    }))
}

pub fn run(cfg: &SuiteConfig, checks: &mut CheckSet) -> anyhow::Result<()> {
    let hbar = cfg.hbar;
    let mass = cfg.mass;

    // 2-sphere Riemannian oracle
    {
        let a = 1.7;
        let m = sphere_manifold(a, 96)?;
        let r = ricci_scalar(&m);
        let expected = 2.0 / (a * a);
        let mut gap = 0.0_f64;
        for node in 0..m.grid().len() {
            if m.grid().is_interior(node, CURVATURE_MARGIN) {
                gap = gap.max((r.values()[node] - expected).abs());
            }
        }
        checks.push(
            "sphere_riemannian_scalar",
            "radius-a 2-sphere patch: scalar curvature +2/a^2",
            1e-5,
            expected + gap,
            expected,
            gap,
            1,
        );
    }

    // connection symmetry and the Riemannian limit
    {
        let grid = Grid::decay_cube(2, 16, 0.5, 1.5)?;
        let mut gfield = TensorField::zeros(grid.clone(), 2, 2);
        let mut gauge = TensorField::zeros(grid.clone(), 2, 1);
        for node in 0..grid.len() {
            let p = grid.position(node);
            gfield.set(node, &[0, 0], 1.0 + 0.3 * p[0] * p[0]);
            gfield.set(node, &[1, 1], 2.0 + 0.2 * p[1]);
            gauge.set(node, &[0], 0.2 * p[1]);
            gauge.set(node, &[1], -0.1 * p[0]);
        }
        let m = WeylManifold::new(grid.clone(), MetricSpec::Sampled(gfield.clone()), gauge)?;
        let gamma = weyl_connection(&m);
        let mut asym = 0.0_f64;
        for node in 0..grid.len() {
            for i in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        asym = asym
                            .max((gamma.get(node, &[i, k, l]) - gamma.get(node, &[i, l, k])).abs());
                    }
                }
            }
        }
        checks.push(
            "connection_lower_symmetry",
            "the connection is symmetric in its lower pair",
            1e-15,
            asym,
            0.0,
            asym,
            1,
        );
        let m0 = WeylManifold::new(
            grid.clone(),
            MetricSpec::Sampled(gfield),
            TensorField::zeros(grid.clone(), 2, 1),
        )?;
        let g0 = weyl_connection(&m0);
        let ch = christoffel(&m0);
        let mut gap = 0.0_f64;
        for node in 0..grid.len() {
            if !grid.is_interior(node, 2) {
                continue;
            }
            for i in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        gap = gap
                            .max((g0.get(node, &[i, k, l]) + ch.get(node, &[i, k, l])).abs());
                    }
                }
            }
        }
        checks.push(
            "riemannian_limit",
            "zero gauge reduces the connection to minus the Christoffel symbol",
            1e-12,
            gap,
            0.0,
            gap,
            1,
        );
    }

    // nonmetricity is exactly twice the gauge
    {
        let grid = Grid::decay_cube(3, 8, -1.0, 1.0)?;
        let phi = [0.25, -0.4, 0.15];
        let mut gauge = TensorField::zeros(grid.clone(), 3, 1);
        for node in 0..grid.len() {
            for (i, &v) in phi.iter().enumerate() {
                gauge.set(node, &[i], v);
            }
        }
        let m = WeylManifold::flat(grid.clone(), gauge)?;
        let nm = metric_covariant_derivative(&m);
        let mut gap = 0.0_f64;
        for node in 0..grid.len() {
            for l in 0..3 {
                for i in 0..3 {
                    for k in 0..3 {
                        let expected = if i == k { 2.0 * phi[l] } else { 0.0 };
                        gap = gap.max((nm.get(node, &[l, i, k]) - expected).abs());
                    }
                }
            }
        }
        checks.push(
            "weyl_nonmetricity",
            "D_l g_ik = 2 phi_l g_ik (nonzero by design for phi != 0)",
            1e-12,
            gap,
            0.0,
            gap,
            1,
        );
    }

    // curvature symmetries and the commutator relation
    {
        let rho = gaussian_3d(32, 3.2, 1.5)?;
        let grid = rho.grid().clone();
        let gauge = gauge_from_density(&rho, 3)?;
        let m = WeylManifold::flat(grid.clone(), gauge)?;
        let gamma = weyl_connection(&m);
        let bundle = curvature(&m);
        let mut a = TensorField::zeros(grid.clone(), 3, 1);
        for node in 0..grid.len() {
            let p = grid.position(node);
            a.set(node, &[0], (0.3 * p[0]).sin() + 0.2 * p[1]);
            a.set(node, &[1], 0.5 * p[2] * p[0]);
            a.set(node, &[2], (0.4 * p[1]).cos());
        }
        let da = covariant_derivative(&a, &gamma, Variance::Contravariant)?;
        let dda = covariant_derivative_mixed(&da, &gamma)?;
        let mut comm_gap = 0.0_f64;
        let mut antisym = 0.0_f64;
        let mut bianchi = 0.0_f64;
        for node in 0..grid.len() {
            if !grid.is_interior(node, 6) {
                continue;
            }
            for i in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let lhs = dda.get(node, &[k, l, i]) - dda.get(node, &[l, k, i]);
                        let mut rhs = 0.0;
                        for mm in 0..3 {
                            rhs += bundle.riemann.get(node, &[i, mm, k, l]) * a.get(node, &[mm]);
                        }
                        comm_gap = comm_gap.max((lhs - rhs).abs());
                        for mm in 0..3 {
                            let r = bundle.riemann.get(node, &[i, mm, k, l]);
                            antisym =
                                antisym.max((r + bundle.riemann.get(node, &[i, mm, l, k])).abs());
                            let cyc = r
                                + bundle.riemann.get(node, &[i, k, l, mm])
                                + bundle.riemann.get(node, &[i, l, mm, k]);
                            bianchi = bianchi.max(cyc.abs());
                        }
                    }
                }
            }
        }
        checks.push(
            "commutator_curvature_relation",
            "[D_k, D_l] A^i = R^i_{mkl} A^m by double covariant differences",
            5e-4,
            comm_gap,
            0.0,
            comm_gap,
            1,
        );
        checks.push(
            "riemann_antisymmetry",
            "R^i_{mkl} = -R^i_{mlk}",
            1e-12,
            antisym,
            0.0,
            antisym,
            1,
        );
        checks.push(
            "first_bianchi_cyclic_sum",
            "cyclic sum over the lower slots vanishes",
            1e-6,
            bianchi,
            0.0,
            bianchi,
            1,
        );
    }

    // scalar decomposition: flat Gaussian gauge, zero gauge, curved refinement
    {
        let rho = gaussian_3d(24, 3.5, 1.0)?;
        let gauge = gauge_from_density(&rho, 3)?;
        let m = WeylManifold::flat(rho.grid().clone(), gauge)?;
        let rep = scalar_decomposition_check(&m)?;
        checks.push(
            "decomposition_flat_gaussian_gauge",
            "chain scalar equals Rdot minus the gauge bracket (density gauge)",
            1e-5,
            rep.max_residual,
            0.0,
            rep.max_residual,
            1,
        );
        checks.push_report_only(
            "decomposition_opposite_orientation",
            "residual against the opposite-orientation bracket, for the record",
            rep.max_residual_opposite_orientation,
            0.0,
            rep.max_residual_opposite_orientation,
        );
    }
    {
        let m = sphere_manifold(1.3, 32)?;
        let rep = scalar_decomposition_check(&m)?;
        checks.push(
            "decomposition_zero_gauge_exact",
            "phi = 0 reduces the chain to its Riemannian value exactly",
            1e-12,
            rep.max_residual,
            0.0,
            rep.max_residual,
            1,
        );
    }
    {
        let run_level = |nodes: usize| -> anyhow::Result<f64> {
            let grid = Grid::decay_cube(2, nodes, 0.4, 1.6)?;
            let mut metric = TensorField::zeros(grid.clone(), 2, 2);
            let mut gauge = TensorField::zeros(grid.clone(), 2, 1);
            for node in 0..grid.len() {
                let p = grid.position(node);
                metric.set(node, &[0, 0], 1.0 + 0.3 * (p[0]).sin().powi(2));
                metric.set(node, &[1, 1], 1.2 + 0.2 * p[1]);
                gauge.set(node, &[0], 0.4 * (p[1] * 1.3).sin());
                gauge.set(node, &[1], -0.3 * (p[0] * 1.1).cos());
            }
            let m = WeylManifold::new(grid, MetricSpec::Sampled(metric), gauge)?;
            Ok(scalar_decomposition_check(&m)?.max_residual)
        };
        let e1 = run_level(32)?;
        let e2 = run_level(64)?;
        checks.push(
            "decomposition_fourth_order",
            "curved-background decomposition residual decays at 4th order",
            1e-12,
            e1 / e2,
            8.0,
            (8.0 - e1 / e2).max(0.0),
            2,
        );
        checks.push(
            "decomposition_curved_gate",
            "fine-level decomposition residual",
            1e-5,
            e2,
            0.0,
            e2,
            2,
        );
    }

    // density gauge closed form
    {
        let sigma = 1.3;
        let rho = gaussian_3d(24, 5.0, sigma)?;
        let gauge = gauge_from_density(&rho, 3)?;
        let strong = rho.mask_above(1e-2);
        let grid = rho.grid();
        let mut gap = 0.0_f64;
        for node in 0..grid.len() {
            if !strong[node] || !grid.is_interior(node, 2) {
                continue;
            }
            let p = grid.position(node);
            for i in 0..3 {
                gap = gap.max((gauge.get(node, &[i]) - p[i] / (sigma * sigma)).abs());
            }
        }
        checks.push(
            "density_gauge_gaussian",
            "phi_i = x_i/sigma^2 for an isotropic Gaussian at n = 3",
            1e-6,
            gap,
            0.0,
            gap,
            1,
        );
    }

    // quantum potential vs curvature: printed fast path, tensor chain, n = 4
    {
        let grid = Grid::decay_cube(3, 48, -6.0, 6.0)?;
        let rho = DensityGrid::gaussian(grid, &[1.0; 3], &[0.0; 3])?;
        let rep = q_curvature_identity(&rho, hbar, mass, gamma_coupling(3))?;
        checks.push(
            "q_curvature_fast_gaussian",
            "Q = -gamma (hbar^2/m) R from the density fast path, pointwise",
            1e-6,
            rep.fast_path_gap,
            0.0,
            rep.fast_path_gap,
            1,
        );
        checks.push_report_only(
            "q_curvature_chain_gap_gaussian",
            "gap against the sphere-positive tensor chain at the chain coupling",
            rep.chain_gap,
            0.0,
            rep.chain_gap,
        );
    }
    {
        let mixture = |nodes: usize| -> anyhow::Result<DensityGrid> {
            let grid = Grid::decay_cube(3, nodes, -7.0, 7.0)?;
            Ok(DensityGrid::from_fn(grid, |x| {
                let r1 = (x[0] - 1.2) * (x[0] - 1.2) + x[1] * x[1] + x[2] * x[2];
                let r2 = (x[0] + 1.2) * (x[0] + 1.2) + x[1] * x[1] + x[2] * x[2];
                (-r1 / 2.0).exp() + 0.6 * (-r2 / 2.0).exp()
            })?)
        };
        let rep1 = q_curvature_identity(&mixture(32)?, hbar, mass, gamma_coupling(3))?;
        let rep2 = q_curvature_identity(&mixture(64)?, hbar, mass, gamma_coupling(3))?;
        checks.push(
            "q_curvature_fast_mixture",
            "the fast-path identity on a two-Gaussian mixture",
            1e-6,
            rep2.fast_path_gap,
            0.0,
            rep2.fast_path_gap,
            2,
        );
        checks.push(
            "q_curvature_chain_fourth_order",
            "the tensor-chain route converges at 4th order under refinement",
            1e-12,
            rep1.chain_gap / rep2.chain_gap,
            8.0,
            (8.0 - rep1.chain_gap / rep2.chain_gap).max(0.0),
            2,
        );
    }
    {
        let grid = Grid::decay_cube(4, 20, -4.5, 4.5)?;
        let rho = DensityGrid::gaussian(grid, &[1.0; 4], &[0.0; 4])?;
        let rep = q_curvature_identity(&rho, hbar, mass, gamma_coupling(4))?;
        checks.push(
            "q_curvature_four_dimensions",
            "gamma = 1/9 at n = 4; the flat-background identity still holds",
            1e-6,
            rep.fast_path_gap,
            0.0,
            rep.fast_path_gap,
            1,
        );
    }

    // Fisher <-> curvature chain constants
    {
        let grid = Grid::decay_cube(3, 128, -6.5, 6.5)?;
        let rho = DensityGrid::gaussian(grid, &[1.0; 3], &[0.0; 3])?;
        let gamma = gamma_coupling(3);
        let rep = fisher_curvature_report(&rho, hbar, mass, gamma)?;
        let rel = (rep.fitted_fisher_over_curvature - rep.implied_fisher_over_curvature).abs()
            / rep.implied_fisher_over_curvature.abs();
        checks.push(
            "fisher_curvature_fitted_constant",
            "fitted I / int(rho R) matches -8 gamma",
            1e-5,
            rep.fitted_fisher_over_curvature,
            rep.implied_fisher_over_curvature,
            rel,
            1,
        );
        checks.push(
            "mean_q_over_fisher_constant",
            "fitted int(rho Q)/I matches +hbar^2/8m",
            1e-5,
            rep.fitted_q_over_fisher,
            hbar * hbar / (8.0 * mass),
            (rep.fitted_q_over_fisher - hbar * hbar / (8.0 * mass)).abs()
                / (hbar * hbar / (8.0 * mass)),
            1,
        );
        checks.push_report_only(
            "printed_fisher_curvature_constant",
            "I vs (hbar^4/96 m^2) int(rho R): measured ratio (1 would be agreement)",
            rep.fisher_unhalved,
            rep.printed_constant * rep.int_rho_r,
            rep.printed_constant_ratio,
        );
    }

    // Weyl-form HJ residual at a stationary state and gamma independence
    {
        use qgeo_core::grid::ComplexGridField;
        use qgeo_core::madelung::{hj_residual, lambda_se_equivalent, madelung_split, Wavefield};
        use qgeo_core::weyl::{gamma_chain_consistent, hj_weyl_residual};
        let grid = Grid::decay_1d(2048, -9.0, 9.0)?;
        let m_over_h = mass / hbar;
        let psi = ComplexGridField::from_fn(grid.clone(), move |x| {
            qgeo_core::C64::new((-m_over_h * x[0] * x[0] / 2.0).exp(), 0.0)
        });
        let w = Wavefield::new(psi, hbar, mass, None)?;
        let pair = madelung_split(&w)?;
        let ds_dt = ScalarField::constant(grid.clone(), -0.5 * hbar);
        let drho_dt = ScalarField::zeros(grid.clone());
        let v = ScalarField::from_fn(grid.clone(), move |x| 0.5 * mass * x[0] * x[0]);
        let id = DMatrix::identity(1, 1);
        let rep = hj_weyl_residual(
            &pair.s, &pair.rho, &ds_dt, &drho_dt, Some(&v), None, &id, hbar, mass,
            gamma_chain_consistent(3),
        )?;
        let strong = pair.rho.mask_above(STRONG_SUPPORT_REL);
        let hj_max = rep.hj.max_abs_interior(4, Some(&strong));
        let cont_max = rep.continuity.max_abs_interior(4, Some(&strong));
        checks.push(
            "weyl_hj_stationary_state",
            "curvature-form HJ + continuity residuals at the oscillator ground state",
            1e-6,
            hj_max,
            cont_max,
            hj_max.max(cont_max),
            1,
        );
        let madelung_route =
            hj_residual(&pair, &ds_dt, Some(&v), mass, lambda_se_equivalent(hbar))?;
        let route_gap = rep
            .hj
            .zip_with(&madelung_route, |a, b| a - b)?
            .max_abs_interior(4, Some(&strong));
        checks.push(
            "weyl_hj_matches_information_route",
            "curvature route equals the information-coupling route",
            1e-5,
            route_gap,
            0.0,
            route_gap,
            1,
        );
    }

    Ok(())
}
