//! Kahler-triple suite: metric/form/complex-structure compatibility, the
//! potential Hessian, geodesic distance, and the pure-state line element.

use qgeo_core::hilbert::{from_chart, random_state, to_chart, ChartSelector};
use qgeo_core::kahler::{
    apply_j, fs_decomposition, fs_metric, geodesic_distance, kahler_potential, nijenhuis_residual,
    random_tangent, symplectic_form, TangentVector,
};
use qgeo_core::{ChartPoint, C64};

use crate::config::SuiteConfig;
use crate::report::{sweep_worst, CheckSet};

fn random_triple(dim: usize, nu_seed: u64) -> (ChartPoint, TangentVector, TangentVector) {
    let psi = random_state(dim, nu_seed).expect("dim >= 2");
    let z = to_chart(&psi, ChartSelector::Auto).expect("random states stay inside a chart");
    let v = random_tangent(&z, nu_seed.wrapping_add(0x9e37_79b9));
    let w = random_tangent(&z, nu_seed.wrapping_add(0x3c6e_f372));
    (z, v, w)
}

/// Mixed Wirtinger Hessian of the Kahler potential at `z`, contracted
/// against `(v, w)`; finite differences at step `h`.
fn potential_hessian_contraction(
    z: &ChartPoint,
    v: &TangentVector,
    w: &TangentVector,
    h: f64,
) -> C64 {
    let m = z.coords().len();
    let f = |coords: &nalgebra::DVector<C64>| -> f64 {
        (1.0 + coords.iter().map(|c| c.norm_sqr()).sum::<f64>()).ln()
    };
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..m {
        for b in 0..m {
            let d2 = |da: (f64, f64), db: (f64, f64)| {
                let mut zpp = z.coords().clone();
                zpp[a] += C64::new(da.0 * h, da.1 * h);
                zpp[b] += C64::new(db.0 * h, db.1 * h);
                let mut zpm = z.coords().clone();
                zpm[a] += C64::new(da.0 * h, da.1 * h);
                zpm[b] -= C64::new(db.0 * h, db.1 * h);
                let mut zmp = z.coords().clone();
                zmp[a] -= C64::new(da.0 * h, da.1 * h);
                zmp[b] += C64::new(db.0 * h, db.1 * h);
                let mut zmm = z.coords().clone();
                zmm[a] -= C64::new(da.0 * h, da.1 * h);
                zmm[b] -= C64::new(db.0 * h, db.1 * h);
                (f(&zpp) - f(&zpm) - f(&zmp) + f(&zmm)) / (4.0 * h * h)
            };
            let fxx = d2((1.0, 0.0), (1.0, 0.0));
            let fxy = d2((1.0, 0.0), (0.0, 1.0));
            let fyx = d2((0.0, 1.0), (1.0, 0.0));
            let fyy = d2((0.0, 1.0), (0.0, 1.0));
            // d/dz_a d/dzbar_b f
            let hess = C64::new(0.25 * (fxx + fyy), 0.25 * (fxy - fyx));
            acc += hess * v.components()[a] * w.components()[b].conj();
        }
    }
    acc
}

pub fn run(cfg: &SuiteConfig, checks: &mut CheckSet) -> anyhow::Result<()> {
    let nu = cfg.hbar;
    let dim = cfg.dim;
    let trials = cfg.trials;
    let base = cfg.seed.wrapping_mul(1_000_003);

    let worst = sweep_worst(trials, |t| {
        let (_, v, w) = random_triple(dim, base + t);
        let g_vw = fs_metric(&v, &w, nu).unwrap();
        let g_wv = fs_metric(&w, &v, nu).unwrap();
        (g_vw, g_wv, (g_vw - g_wv).abs())
    });
    checks.push("metric_symmetry", "g(v,w) = g(w,v)", 1e-12, worst.0, worst.1, worst.2, trials);

    let worst = sweep_worst(trials, |t| {
        let (_, v, _) = random_triple(dim, base + t);
        let g_vv = fs_metric(&v, &v, nu).unwrap();
        (g_vv, 0.0, (-g_vv).max(0.0))
    });
    checks.push(
        "metric_positive_definite",
        "g(v,v) > 0 for v != 0",
        1e-15,
        worst.0,
        worst.1,
        worst.2,
        trials,
    );

    let worst = sweep_worst(trials, |t| {
        let (_, v, w) = random_triple(dim, base + t);
        let o_vw = symplectic_form(&v, &w, nu).unwrap();
        let o_wv = symplectic_form(&w, &v, nu).unwrap();
        (o_vw, -o_wv, (o_vw + o_wv).abs())
    });
    checks.push(
        "form_antisymmetry",
        "omega(v,w) = -omega(w,v)",
        1e-12,
        worst.0,
        worst.1,
        worst.2,
        trials,
    );

    let worst = sweep_worst(trials, |t| {
        let (_, v, _) = random_triple(dim, base + t);
        let jjv = apply_j(&apply_j(&v));
        let r = (jjv.components() + v.components()).norm();
        (r, 0.0, r)
    });
    checks.push("complex_structure_squares", "J^2 = -1", 1e-13, worst.0, worst.1, worst.2, trials);

    let worst = sweep_worst(trials, |t| {
        let (_, v, w) = random_triple(dim, base + t);
        let g = fs_metric(&v, &w, nu).unwrap();
        let o_jw = symplectic_form(&v, &apply_j(&w), nu).unwrap();
        (g, o_jw, (g - o_jw).abs())
    });
    checks.push(
        "compatibility_g_omega_j",
        "g(v,w) = omega(v, Jw)",
        1e-12,
        worst.0,
        worst.1,
        worst.2,
        trials,
    );

    let worst = sweep_worst(trials, |t| {
        let (_, v, w) = random_triple(dim, base + t);
        let o = symplectic_form(&v, &w, nu).unwrap();
        let g_jv = fs_metric(&apply_j(&v), &w, nu).unwrap();
        (o, g_jv, (o - g_jv).abs())
    });
    checks.push(
        "compatibility_omega_g_j",
        "omega(v,w) = g(Jv, w)",
        1e-12,
        worst.0,
        worst.1,
        worst.2,
        trials,
    );

    let worst = sweep_worst(trials, |t| {
        let (_, v, w) = random_triple(dim, base + t);
        let g = fs_metric(&v, &w, nu).unwrap();
        let g_j = fs_metric(&apply_j(&v), &apply_j(&w), nu).unwrap();
        (g, g_j, (g - g_j).abs())
    });
    checks.push(
        "metric_j_invariance",
        "g(Jv,Jw) = g(v,w)",
        1e-12,
        worst.0,
        worst.1,
        worst.2,
        trials,
    );

    // potential Hessian reproduces both the metric and the form (finite
    // differences at h = 1e-4, the documented step)
    let fd_trials = trials.min(50);
    let worst = sweep_worst(fd_trials, |t| {
        let (z, v, w) = random_triple(dim, base + t);
        let acc = potential_hessian_contraction(&z, &v, &w, 1e-4);
        let g = fs_metric(&v, &w, nu).unwrap();
        let o = symplectic_form(&v, &w, nu).unwrap();
        // 2 nu Re(acc) = g, 2 nu Im(acc) = -omega
        let res = (2.0 * nu * acc.re - g).abs().max((2.0 * nu * acc.im + o).abs());
        (2.0 * nu * acc.re, g, res)
    });
    checks.push(
        "potential_hessian_fd",
        "central differences of log(1+|z|^2) reproduce g and omega",
        1e-6,
        worst.0,
        worst.1,
        worst.2,
        fd_trials,
    );
    // the potential itself at reference points
    let origin = ChartPoint::origin(dim, 1).expect("dim >= 2");
    checks.push(
        "potential_reference_values",
        "f(0) = 0",
        0.0,
        kahler_potential(&origin),
        0.0,
        kahler_potential(&origin).abs(),
        1,
    );

    let worst = sweep_worst(trials, |t| {
        let a = random_state(dim, base + 7_000_000 + t).unwrap();
        let b = random_state(dim, base + 8_000_000 + t).unwrap();
        if a.amplitudes().iter().any(|z| z.norm() < 1e-6)
            || b.amplitudes().iter().any(|z| z.norm() < 1e-6)
        {
            return (0.0, 0.0, 0.0); // skip raw states on a chart boundary
        }
        let d_direct = geodesic_distance(&a, &b).unwrap();
        let mut worst_gap = 0.0_f64;
        for k in 1..=dim {
            let ra = from_chart(&to_chart(&a, ChartSelector::Index(k)).unwrap());
            let rb = from_chart(&to_chart(&b, ChartSelector::Index(k)).unwrap());
            let d_chart = geodesic_distance(&ra, &rb).unwrap();
            worst_gap = worst_gap.max((d_direct - d_chart).abs());
        }
        (d_direct, d_direct, worst_gap)
    });
    checks.push(
        "geodesic_chart_independence",
        "distance through any chart's representatives agrees",
        1e-10,
        worst.0,
        worst.1,
        worst.2,
        trials,
    );

    let worst = sweep_worst(trials, |t| {
        let (_, v, w) = random_triple(dim, base + 9_000_000 + t);
        let r = nijenhuis_residual(&v, &w).unwrap();
        (r, 0.0, r)
    });
    checks.push(
        "nijenhuis_vanishes",
        "FD Lie brackets: [JX,JY] - [X,Y] - J[X,JY] - J[JX,Y] = 0",
        1e-8,
        worst.0,
        worst.1,
        worst.2,
        trials,
    );

    // pure-state line element: quadratic approximation error decays O(eps)
    // in the normalized comparison, phase-variance part is nonnegative
    let decomposition_sweep = || -> (f64, f64, bool) {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(base + 0x5eed);
        let outcomes = 8;
        let p: Vec<f64> = {
            let raw: Vec<f64> = (0..outcomes).map(|_| rng.random::<f64>() + 0.1).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|x| x / s).collect()
        };
        let mut dp_dir: Vec<f64> = (0..outcomes).map(|_| rng.random::<f64>() - 0.5).collect();
        let mean = dp_dir.iter().sum::<f64>() / outcomes as f64;
        for d in &mut dp_dir {
            *d -= mean;
        }
        let dphi_dir: Vec<f64> = (0..outcomes).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut errs = Vec::new();
        let mut phase_ok = true;
        for eps in [1e-2, 1e-3, 1e-4] {
            let dp: Vec<f64> = dp_dir.iter().map(|d| d * eps).collect();
            let dphi: Vec<f64> = dphi_dir.iter().map(|d| d * eps).collect();
            let (fisher, phase) = fs_decomposition(&p, &dp, &dphi).unwrap();
            phase_ok &= phase >= 0.0;
            // overlap route
            let amp = |j: usize, with: bool| -> C64 {
                let pj = if with { p[j] + dp[j] } else { p[j] };
                let ph = if with { dphi[j] } else { 0.0 };
                C64::new(0.0, ph).exp() * pj.sqrt()
            };
            let overlap: C64 = (0..outcomes).map(|j| amp(j, true).conj() * amp(j, false)).sum();
            let exact = 1.0 - overlap.norm_sqr();
            errs.push(((fisher + phase) - exact).abs() / (eps * eps));
        }
        // normalized error must drop by about 10x per eps decade
        let r1 = errs[1] / errs[0];
        let r2 = errs[2] / errs[1];
        (r1, r2, phase_ok)
    };
    let (r1, r2, phase_ok) = decomposition_sweep();
    checks.push(
        "line_element_decomposition_sweep",
        "Fisher + phase-variance parts match 1-|overlap|^2 with O(eps) normalized error",
        0.3,
        r1,
        r2,
        r1.max(r2),
        3,
    );
    checks.push(
        "phase_variance_nonnegative",
        "the phase term of the line element is a variance",
        0.5,
        if phase_ok { 0.0 } else { 1.0 },
        0.0,
        if phase_ok { 0.0 } else { 1.0 },
        3,
    );
    Ok(())
}
