//! Bracket-identity suite: operator-algebra vs chart-geometry routes for
//! every bracket, the Jacobi identity, product identities, flows as Kahler
//! isometries, the uncertainty bound, and the Kahler norm.

use qgeo_core::hilbert::{random_state, to_chart, ChartSelector, HermitianOperator};
use qgeo_core::kahler::{fs_metric, random_tangent, symplectic_form};
use qgeo_core::observable::{
    bracket_report, differential_mean, dispersion_sq, flow, flow_operator, hamiltonian_field,
    gradient_field, is_stationary, kahler_norm, mean_value, mean_value_chart, poisson_bracket,
    pushforward_by_unitary, riemann_bracket, spectral_norm_dense, uncertainty_check,
};
use qgeo_core::C64;

use crate::config::SuiteConfig;
use crate::report::{sweep_worst, CheckSet};

pub fn run(cfg: &SuiteConfig, checks: &mut CheckSet) -> anyhow::Result<()> {
    let nu = cfg.hbar;
    let dim = cfg.dim;
    let trials = cfg.trials;
    let base = cfg.seed.wrapping_mul(2_000_003);

    // both routes of every bracket identity
    let route_names = [
        ("poisson_operator_vs_geometric", "{<A>,<B>} = omega(X_A, X_B)", 1e-9),
        ("riemann_operator_vs_geometric", "((<A>,<B>)) = g(Y_A, Y_B)", 1e-9),
        ("kahler_vs_covariance_form", "<f,h> = (2/nu)(<AB> - <A><B>)", 1e-10),
        ("star_vs_operator_product", "f *nu h = <AB>", 1e-10),
        ("circ_vs_jordan_product", "f onu h = (1/2)<AB+BA>", 1e-10),
        ("star_minus_circ_minus_poisson", "f*h = f o h + (i nu/2){f,h}", 1e-10),
        ("circ_from_star_symmetrization", "f o h = (f*h + h*f)/2", 1e-10),
        ("poisson_from_star_commutator", "{f,h} = (f*h - h*f)/(i nu)", 1e-10),
    ];
    for (key, statement, tol) in route_names {
        let worst = sweep_worst(trials, |t| {
            let a = HermitianOperator::random(dim, base + t);
            let b = HermitianOperator::random(dim, base + 100_000 + t);
            let x = random_state(dim, base + 200_000 + t).unwrap();
            let rep = bracket_report(&a, &b, &x, nu).unwrap();
            let r = rep.residuals[key];
            (rep.poisson, rep.riemann, r)
        });
        checks.push(key, statement, tol, worst.0, worst.1, worst.2, trials);
    }

    // antisymmetry / symmetry under swapping
    let worst = sweep_worst(trials, |t| {
        let a = HermitianOperator::random(dim, base + t);
        let b = HermitianOperator::random(dim, base + 100_000 + t);
        let x = random_state(dim, base + 200_000 + t).unwrap();
        let p_ab = poisson_bracket(&a, &b, &x, nu).unwrap();
        let p_ba = poisson_bracket(&b, &a, &x, nu).unwrap();
        let r_ab = riemann_bracket(&a, &b, &x, nu).unwrap();
        let r_ba = riemann_bracket(&b, &a, &x, nu).unwrap();
        let res = (p_ab + p_ba).abs().max((r_ab - r_ba).abs());
        (p_ab, r_ab, res)
    });
    checks.push(
        "bracket_exchange_symmetry",
        "{A,B} = -{B,A} and ((A,B)) = ((B,A))",
        1e-11,
        worst.0,
        worst.1,
        worst.2,
        trials,
    );

    // diagonal Riemann bracket is the dispersion
    let worst = sweep_worst(trials, |t| {
        let a = HermitianOperator::random(dim, base + 300_000 + t);
        let x = random_state(dim, base + 400_000 + t).unwrap();
        let lhs = riemann_bracket(&a, &a, &x, nu).unwrap();
        let rhs = 2.0 / nu * dispersion_sq(&a, &x).unwrap();
        (lhs, rhs, (lhs - rhs).abs())
    });
    checks.push(
        "riemann_diagonal_is_dispersion",
        "((<A>,<A>)) = (2/nu) Delta^2 A",
        1e-10,
        worst.0,
        worst.1,
        worst.2,
        trials,
    );

    // Jacobi identity through nested commutators
    let nested = |a: &HermitianOperator, b: &HermitianOperator| {
        let comm = a.entries() * b.entries() - b.entries() * a.entries();
        HermitianOperator::new(comm / C64::new(0.0, nu)).expect("i[A,B]/nu is Hermitian")
    };
    let jacobi_trials = trials.min(300);
    let worst = sweep_worst(jacobi_trials, |t| {
        let a = HermitianOperator::random(dim, base + 500_000 + t);
        let b = HermitianOperator::random(dim, base + 600_000 + t);
        let c = HermitianOperator::random(dim, base + 700_000 + t);
        let x = random_state(dim, base + 800_000 + t).unwrap();
        let s = poisson_bracket(&a, &nested(&b, &c), &x, nu).unwrap()
            + poisson_bracket(&b, &nested(&c, &a), &x, nu).unwrap()
            + poisson_bracket(&c, &nested(&a, &b), &x, nu).unwrap();
        (s, 0.0, s.abs())
    });
    checks.push(
        "poisson_jacobi_identity",
        "cyclic sum {A,{B,C}} vanishes",
        1e-8,
        worst.0,
        worst.1,
        worst.2,
        jacobi_trials,
    );

    // chart route of the mean value and its differential
    let worst = sweep_worst(trials, |t| {
        let a = HermitianOperator::random(dim, base + 900_000 + t);
        let x = random_state(dim, base + 1_000_000 + t).unwrap();
        let p = to_chart(&x, ChartSelector::Auto).unwrap();
        let lhs = mean_value(&a, &x).unwrap();
        let rhs = mean_value_chart(&a, &p);
        (lhs, rhs, (lhs - rhs).abs())
    });
    checks.push(
        "mean_value_chart_route",
        "<A> = (z+h|A(z+h))/(1+|z|^2)",
        1e-12,
        worst.0,
        worst.1,
        worst.2,
        trials,
    );

    let fd_trials = trials.min(200);
    let worst = sweep_worst(fd_trials, |t| {
        let a = HermitianOperator::random(dim, base + 1_100_000 + t);
        let x = random_state(dim, base + 1_200_000 + t).unwrap();
        let p = to_chart(&x, ChartSelector::Auto).unwrap();
        let eta = random_tangent(&p, base + 1_300_000 + t);
        let analytic = differential_mean(&a, &eta);
        let eps = 1e-5;
        let shift = |s: f64| {
            let coords: Vec<C64> = p
                .coords()
                .iter()
                .zip(eta.components().iter())
                .map(|(z, v)| z + v * s)
                .collect();
            mean_value_chart(&a, &qgeo_core::ChartPoint::new(p.chart_index(), coords).unwrap())
        };
        let fd = (shift(eps) - shift(-eps)) / (2.0 * eps);
        (analytic, fd, (analytic - fd).abs())
    });
    checks.push(
        "differential_mean_fd",
        "d<A>(eta) matches the centered finite difference",
        1e-8,
        worst.0,
        worst.1,
        worst.2,
        fd_trials,
    );

    // defining relations of the Hamiltonian and gradient fields
    let worst = sweep_worst(trials, |t| {
        let a = HermitianOperator::random(dim, base + 1_400_000 + t);
        let x = random_state(dim, base + 1_500_000 + t).unwrap();
        let p = to_chart(&x, ChartSelector::Auto).unwrap();
        let eta = random_tangent(&p, base + 1_600_000 + t);
        let d = differential_mean(&a, &eta);
        let xf = hamiltonian_field(&a, &p, nu);
        let yf = gradient_field(&a, &p, nu);
        let om = symplectic_form(&xf, &eta, nu).unwrap();
        let gm = fs_metric(&yf, &eta, nu).unwrap();
        let res = (om - d).abs().max((gm - d).abs());
        (om, d, res)
    });
    checks.push(
        "field_defining_relations",
        "omega(X, eta) = d<A>(eta) and g(Y, eta) = d<A>(eta)",
        1e-10,
        worst.0,
        worst.1,
        worst.2,
        trials,
    );

    // flow is a Kahler isometry (pushforward preserves g and omega)
    let flow_trials = trials.min(100);
    let worst = sweep_worst(flow_trials, |t| {
        let a = HermitianOperator::random(dim, base + 1_700_000 + t);
        let x = random_state(dim, base + 1_800_000 + t).unwrap();
        let p = to_chart(&x, ChartSelector::Auto).unwrap();
        let v = random_tangent(&p, base + 1_900_000 + t);
        let w = random_tangent(&p, base + 2_000_000 + t);
        let g0 = fs_metric(&v, &w, nu).unwrap();
        let o0 = symplectic_form(&v, &w, nu).unwrap();
        let scale = g0.abs().max(o0.abs()).max(1.0);
        let mut res = 0.0_f64;
        for tt in [0.5, -3.0, 10.0] {
            let u = flow_operator(&a, tt, nu);
            let pv = pushforward_by_unitary(&u, &v).unwrap();
            let pw = pushforward_by_unitary(&u, &w).unwrap();
            res = res.max((fs_metric(&pv, &pw, nu).unwrap() - g0).abs() / scale);
            res = res.max((symplectic_form(&pv, &pw, nu).unwrap() - o0).abs() / scale);
        }
        (g0, o0, res)
    });
    checks.push(
        "flow_kahler_isometry",
        "pushforward by exp(-i t A/nu) preserves g and omega for |t| <= 10",
        1e-8,
        worst.0,
        worst.1,
        worst.2,
        flow_trials,
    );

    // d/dt <B> along the flow of A equals the Poisson bracket
    let worst = sweep_worst(flow_trials, |t| {
        let a = HermitianOperator::random(dim, base + 2_100_000 + t);
        let b = HermitianOperator::random(dim, base + 2_200_000 + t);
        let x = random_state(dim, base + 2_300_000 + t).unwrap();
        let dt = 1e-6;
        let fwd = mean_value(&b, &flow(&a, dt, &x, nu).unwrap()).unwrap();
        let bwd = mean_value(&b, &flow(&a, -dt, &x, nu).unwrap()).unwrap();
        let fd = (fwd - bwd) / (2.0 * dt);
        let pb = poisson_bracket(&b, &a, &x, nu).unwrap();
        (fd, pb, (fd - pb).abs())
    });
    checks.push(
        "flow_derivative_is_bracket",
        "d/dt <B> along the flow of A equals {<B>,<A>}",
        1e-7,
        worst.0,
        worst.1,
        worst.2,
        flow_trials,
    );

    // flow group law and unitarity
    let worst = sweep_worst(flow_trials, |t| {
        let a = HermitianOperator::random(dim, base + 2_400_000 + t);
        let x = random_state(dim, base + 2_500_000 + t).unwrap();
        let st = flow(&a, 0.7, &flow(&a, 1.1, &x, nu).unwrap(), nu).unwrap();
        let direct = flow(&a, 1.8, &x, nu).unwrap();
        let group = (st.amplitudes() - direct.amplitudes()).norm();
        let norm_drift = (flow(&a, 500.0, &x, nu).unwrap().norm() - 1.0).abs();
        (group, norm_drift, group.max(norm_drift))
    });
    checks.push(
        "flow_group_law_unitarity",
        "flow(s) flow(t) = flow(s+t); norm preserved",
        1e-11,
        worst.0,
        worst.1,
        worst.2,
        flow_trials,
    );

    // uncertainty bound and its equality case
    let worst = sweep_worst(trials, |t| {
        let a = HermitianOperator::random(dim, base + 2_600_000 + t);
        let b = HermitianOperator::random(dim, base + 2_700_000 + t);
        let x = random_state(dim, base + 2_800_000 + t).unwrap();
        let rep = uncertainty_check(&a, &b, &x, nu).unwrap();
        ((rep.lhs), rep.rhs, (-rep.slack).max(0.0))
    });
    checks.push(
        "uncertainty_inequality",
        "Delta^2 A Delta^2 B >= commutator^2 + covariance^2",
        1e-10,
        worst.0,
        worst.1,
        worst.2,
        trials,
    );

    let worst = sweep_worst(trials, |t| {
        let a = HermitianOperator::random(dim, base + 2_900_000 + t);
        let x = random_state(dim, base + 3_000_000 + t).unwrap();
        let rep = uncertainty_check(&a, &a, &x, nu).unwrap();
        (rep.lhs, rep.rhs, rep.slack.abs().max(rep.commutator_term.abs()))
    });
    checks.push(
        "uncertainty_equality_diagonal",
        "B = A saturates the bound with zero commutator term",
        1e-9,
        worst.0,
        worst.1,
        worst.2,
        trials,
    );

    // sampled Kahler norm against the dense spectral value
    let norm_trials = trials.min(50);
    let worst = sweep_worst(norm_trials, |t| {
        let a = HermitianOperator::random(dim, base + 3_100_000 + t);
        let sampled = kahler_norm(&a, 64, base + 3_200_000 + t);
        let dense = spectral_norm_dense(&a);
        (sampled, dense, (sampled - dense).abs())
    });
    checks.push(
        "kahler_norm_sampler",
        "sup over rays of sqrt(<A^2>) equals the largest singular value",
        1e-8,
        worst.0,
        worst.1,
        worst.2,
        norm_trials,
    );

    // stationarity detection at eigenvectors
    let worst = sweep_worst(norm_trials, |t| {
        let a = HermitianOperator::random(dim, base + 3_300_000 + t);
        let eig = qgeo_core::linalg::HermEigen::new(&a);
        let x = qgeo_core::StateVector::from_vector(eig.eigenvectors.column(0).into_owned())
            .unwrap();
        let stationary = is_stationary(&a, &x, 1e-10).unwrap();
        // the differential of the mean vanishes there too
        let p = to_chart(&x, ChartSelector::Auto).unwrap();
        let eta = random_tangent(&p, base + 3_400_000 + t);
        let d = differential_mean(&a, &eta).abs();
        (if stationary { 0.0 } else { 1.0 }, 0.0, if stationary { d } else { 1.0 })
    });
    checks.push(
        "eigenvector_is_critical_point",
        "eigenvectors are exactly the stationary rays of <A>",
        1e-10,
        worst.0,
        worst.1,
        worst.2,
        norm_trials,
    );

    Ok(())
}
