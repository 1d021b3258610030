//! Fisher-information suite: the discrete quadratic form, statistical
//! distance, cross entropy, Fisher matrix/functional, Cramer-Rao, and the
//! exact-uncertainty chain.

use nalgebra::DMatrix;
use qgeo_core::fisher::{
    cross_entropy_expansion, exact_uncertainty, fisher_functional, fisher_matrix,
    fisher_metric_discrete, position_moments, statistical_distance, translation_fisher,
    DensityGrid, FisherConvention, ParametricFamily, ProbabilityVector,
};
use qgeo_core::grid::{ComplexGridField, Grid};
use qgeo_core::C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::config::SuiteConfig;
use crate::report::{sweep_worst, CheckSet};

fn random_prob(n: usize, seed: u64) -> ProbabilityVector {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    ProbabilityVector::new((0..n).map(|_| rng.random::<f64>() + 0.05).collect()).unwrap()
}

fn balanced(n: usize, seed: u64, scale: f64) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut dp: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() - 0.5) * scale).collect();
    let mean = dp.iter().sum::<f64>() / n as f64;
    for d in &mut dp {
        *d -= mean;
    }
    dp
}

pub fn run(cfg: &SuiteConfig, checks: &mut CheckSet) -> anyhow::Result<()> {
    let base = cfg.seed.wrapping_mul(3_000_017);
    let trials = cfg.trials.min(500);
    let hbar = cfg.hbar;
    let n_out = 8;

    // quadratic form: superposition identity
    let worst = sweep_worst(trials, |t| {
        let p = random_prob(n_out, base + t);
        let a = balanced(n_out, base + 10_000 + t, 1e-2);
        let b = balanced(n_out, base + 20_000 + t, 1e-2);
        let plus: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let minus: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let lhs = fisher_metric_discrete(&p, &plus).unwrap()
            + fisher_metric_discrete(&p, &minus).unwrap();
        let rhs = 2.0 * fisher_metric_discrete(&p, &a).unwrap()
            + 2.0 * fisher_metric_discrete(&p, &b).unwrap();
        (lhs, rhs, (lhs - rhs).abs())
    });
    checks.push(
        "discrete_metric_quadratic_form",
        "parallelogram law of sum dp^2/p",
        1e-12,
        worst.0,
        worst.1,
        worst.2,
        trials,
    );

    // distance limit: ds^2 / ((1/4) metric) -> 1
    let worst = sweep_worst(trials, |t| {
        let p = random_prob(n_out, base + 30_000 + t);
        let dp = balanced(n_out, base + 40_000 + t, 1e-4);
        let shifted = ProbabilityVector::new(
            p.values().iter().zip(&dp).map(|(a, b)| a + b).collect(),
        )
        .unwrap();
        let ds = statistical_distance(&p, &shifted).unwrap();
        let quarter = 0.25 * fisher_metric_discrete(&p, &dp).unwrap();
        let ratio = ds * ds / quarter;
        (ds * ds, quarter, (ratio - 1.0).abs())
    });
    checks.push(
        "statistical_distance_metric_limit",
        "arccos overlap squared approaches (1/4) sum dp^2/p",
        1e-2,
        worst.0,
        worst.1,
        worst.2,
        trials,
    );

    // triangle inequality and permutation invariance
    let worst = sweep_worst(trials, |t| {
        let a = random_prob(n_out, base + 50_000 + t);
        let b = random_prob(n_out, base + 60_000 + t);
        let c = random_prob(n_out, base + 70_000 + t);
        let ab = statistical_distance(&a, &b).unwrap();
        let bc = statistical_distance(&b, &c).unwrap();
        let ac = statistical_distance(&a, &c).unwrap();
        let slack = (ac - ab - bc).max(0.0);
        let perm = |v: &ProbabilityVector| {
            ProbabilityVector::new(v.values().iter().rev().cloned().collect()).unwrap()
        };
        let perm_gap = (ab - statistical_distance(&perm(&a), &perm(&b)).unwrap()).abs();
        (ac, ab + bc, slack.max(perm_gap))
    });
    checks.push(
        "statistical_distance_metric_axioms",
        "triangle inequality; permutation invariance",
        1e-12,
        worst.0,
        worst.1,
        worst.2,
        trials,
    );

    // cross entropy of a translated Gaussian
    let sigma = 1.3;
    let rho = DensityGrid::gaussian(
        Grid::decay_1d(cfg.grid_nodes.max(512), -14.0, 14.0)?,
        &[sigma],
        &[0.0],
    )?;
    let h = rho.grid().spacing()[0];
    let dy = 8.0 * h;
    let (exact, quad) = cross_entropy_expansion(&rho, &[dy])?;
    let oracle = dy * dy / (2.0 * sigma * sigma);
    checks.push(
        "cross_entropy_quadratic_form",
        "translated-Gaussian cross entropy matches I_jk dy^j dy^k",
        1e-6,
        quad,
        oracle,
        (quad - oracle).abs() / oracle,
        1,
    );
    checks.push(
        "cross_entropy_cubic_remainder",
        "exact minus quadratic cross entropy is O(|dy|^3)",
        1.0,
        exact,
        quad,
        (exact - quad).abs() / dy.powi(3),
        1,
    );

    // Fisher matrix of the Gaussian location family
    let family = ParametricFamily::new(1, |grid, th| {
        DensityGrid::gaussian(grid.clone(), &[1.0], &[th[0]])
    });
    let grid = Grid::decay_1d(768, -12.0, 12.0)?;
    let info = fisher_matrix(&family, &grid, &[0.3])?;
    checks.push(
        "fisher_matrix_location_family",
        "unit-sigma Gaussian location family: I_11 = 1/2",
        1e-6,
        info[(0, 0)],
        0.5,
        (info[(0, 0)] - 0.5).abs(),
        1,
    );
    let family2 = ParametricFamily::new(1, |grid, th| {
        DensityGrid::gaussian(grid.clone(), &[1.0], &[0.5 * th[0]])
    });
    let info2 = fisher_matrix(&family2, &grid, &[0.6])?;
    checks.push(
        "fisher_matrix_reparametrization",
        "theta' = 2 theta scales the information by 1/4",
        1e-6,
        info2[(0, 0)],
        0.125,
        (info2[(0, 0)] - 0.125).abs(),
        1,
    );

    // PSD of random two-parameter families
    let psd_trials = 5;
    let worst = sweep_worst(psd_trials, |t| {
        let mut rng = ChaCha12Rng::seed_from_u64(base + 80_000 + t);
        let w: f64 = 0.2 + 0.6 * rng.random::<f64>();
        let family = ParametricFamily::new(2, move |grid, th| {
            let g1 = DensityGrid::gaussian(grid.clone(), &[1.0], &[th[0]])?;
            let g2 = DensityGrid::gaussian(grid.clone(), &[1.5], &[th[1]])?;
            DensityGrid::from_field(g1.field().zip_with(g2.field(), |a, b| w * a + (1.0 - w) * b)?)
        });
        let grid = Grid::decay_1d(512, -14.0, 14.0).unwrap();
        let info = fisher_matrix(&family, &grid, &[0.4, -0.7]).unwrap();
        let eig = nalgebra::SymmetricEigen::new(info);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        (min, 0.0, (-min).max(0.0))
    });
    checks.push(
        "fisher_matrix_psd",
        "random two-parameter families give PSD information matrices",
        1e-10,
        worst.0,
        worst.1,
        worst.2,
        psd_trials,
    );

    // functional on the Gaussian and its scaling, both conventions
    let id = DMatrix::identity(1, 1);
    let rho_g = DensityGrid::gaussian(Grid::decay_1d(1024, -12.0, 12.0)?, &[0.8], &[0.0])?;
    let i_half = fisher_functional(&rho_g, &id, FisherConvention::Halved)?;
    let i_full = fisher_functional(&rho_g, &id, FisherConvention::Unhalved)?;
    checks.push(
        "fisher_functional_gaussian",
        "halved functional of a Gaussian is 1/(2 sigma^2)",
        1e-6,
        i_half,
        0.5 / 0.64,
        (i_half - 0.5 / 0.64).abs() * 0.64 * 2.0,
        1,
    );
    checks.push(
        "fisher_functional_conventions",
        "the classical convention is exactly twice the halved one",
        1e-14,
        i_full,
        2.0 * i_half,
        (i_full - 2.0 * i_half).abs() / i_full,
        1,
    );
    let k = 2.0;
    let rho_k = DensityGrid::gaussian(Grid::decay_1d(1024, -6.0, 6.0)?, &[0.4], &[0.0])?;
    let i_scaled = fisher_functional(&rho_k, &id, FisherConvention::Halved)?;
    checks.push(
        "fisher_functional_scaling",
        "x -> kx scales the information by k^2",
        1e-6,
        i_scaled / i_half,
        k * k,
        (i_scaled / i_half - k * k).abs(),
        1,
    );

    // translation Fisher information and the Fisher length
    let sig = 1.7;
    let rho_t = DensityGrid::gaussian(Grid::decay_1d(1024, -18.0, 18.0)?, &[sig], &[0.0])?;
    let (f_x, delta_x) = translation_fisher(&rho_t)?;
    checks.push(
        "translation_fisher_gaussian",
        "F_X = 1/sigma^2 and the Fisher length equals sigma",
        1e-6,
        f_x,
        1.0 / (sig * sig),
        (f_x * sig * sig - 1.0).abs().max((delta_x - sig).abs()),
        1,
    );

    // Cramer-Rao on a mixture family, equality for the Gaussian
    let grid_cr = Grid::decay_1d(1024, -16.0, 16.0)?;
    let gauss = DensityGrid::gaussian(grid_cr.clone(), &[1.4], &[0.0])?;
    let (fg, _) = translation_fisher(&gauss)?;
    let (_, var_g) = position_moments(&gauss)?;
    checks.push(
        "cramer_rao_gaussian_equality",
        "Var(X) F_X = 1 exactly for the Gaussian",
        1e-6,
        var_g * fg,
        1.0,
        (var_g * fg - 1.0).abs(),
        1,
    );
    let cr_trials = 10;
    let worst = sweep_worst(cr_trials, |t| {
        let mut rng = ChaCha12Rng::seed_from_u64(base + 90_000 + t);
        let w: f64 = 0.2 + 0.6 * rng.random::<f64>();
        let off: f64 = 1.0 + 2.0 * rng.random::<f64>();
        let a = DensityGrid::gaussian(grid_cr.clone(), &[1.0], &[-off]).unwrap();
        let b = DensityGrid::gaussian(grid_cr.clone(), &[0.7], &[off]).unwrap();
        let mix = DensityGrid::from_field(
            a.field().zip_with(b.field(), |x, y| w * x + (1.0 - w) * y).unwrap(),
        )
        .unwrap();
        let (f, _) = translation_fisher(&mix).unwrap();
        let (_, var) = position_moments(&mix).unwrap();
        (var * f, 1.0, (1.0 - var * f).max(0.0))
    });
    checks.push(
        "cramer_rao_mixtures",
        "Var(X) F_X >= 1 across Gaussian mixtures",
        1e-9,
        worst.0,
        worst.1,
        worst.2,
        cr_trials,
    );

    // binned-density continuum limit of the discrete metric
    {
        let sigma = 1.1;
        let n = 512;
        let grid = Grid::decay_1d(n, -10.0, 10.0)?;
        let rho = DensityGrid::gaussian(grid.clone(), &[sigma], &[0.0])?;
        let h = grid.spacing()[0];
        let shift = 2.0 * h;
        let bins = ProbabilityVector::new(rho.values().iter().map(|v| v * h).collect())?;
        let shifted = DensityGrid::gaussian(grid, &[sigma], &[shift])?;
        let shifted_bins =
            ProbabilityVector::new(shifted.values().iter().map(|v| v * h).collect())?;
        let dp: Vec<f64> = shifted_bins
            .values()
            .iter()
            .zip(bins.values())
            .map(|(a, b)| a - b)
            .collect();
        let metric = fisher_metric_discrete(&bins, &dp)?;
        let unhalved = fisher_functional(&rho, &id, FisherConvention::Unhalved)?;
        let ratio = metric / (shift * shift) / unhalved;
        checks.push(
            "binned_continuum_limit",
            "discrete metric at 512 bins approaches the continuum functional",
            0.02,
            metric / (shift * shift),
            unhalved,
            (ratio - 1.0).abs(),
            1,
        );
    }

    // exact-uncertainty chain on a 1024-node Gaussian wavefield
    {
        let sigma = 1.0;
        let grid = Grid::decay_1d(cfg.grid_nodes, -16.0, 16.0)?;
        let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma).powf(0.25);
        let psi = ComplexGridField::from_fn(grid, move |x| {
            C64::new(norm * (-x[0] * x[0] / (4.0 * sigma * sigma)).exp(), 0.0)
        });
        let rep = exact_uncertainty(&psi, hbar)?;
        let product = rep.fisher_length * rep.delta_p_nonclassical;
        checks.push(
            "exact_uncertainty_product",
            "fisher_length x nonclassical momentum spread = hbar/2",
            1e-6,
            product,
            hbar / 2.0,
            (product - hbar / 2.0).abs(),
            1,
        );
        checks.push(
            "position_spread_dominates_fisher_length",
            "Delta X >= delta X",
            1e-9,
            rep.delta_x,
            rep.fisher_length,
            (rep.fisher_length - rep.delta_x).max(0.0),
            1,
        );
    }
    {
        // momentum-mean identity on a drifting packet
        let k0 = 1.5;
        let grid = Grid::decay_1d(cfg.grid_nodes.max(2048), -18.0, 18.0)?;
        let norm = 1.0 / (2.0 * std::f64::consts::PI).powf(0.25);
        let psi = ComplexGridField::from_fn(grid, move |x| {
            C64::new(0.0, k0 * x[0]).exp() * (norm * (-x[0] * x[0] / 4.0).exp())
        });
        let rep = exact_uncertainty(&psi, hbar)?;
        checks.push(
            "classical_momentum_mean_identity",
            "<p> equals the mean of the classical momentum field",
            1e-8,
            rep.mean_p,
            rep.mean_p_classical,
            (rep.mean_p - rep.mean_p_classical).abs(),
            1,
        );
    }

    Ok(())
}
