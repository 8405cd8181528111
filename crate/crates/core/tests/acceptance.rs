//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, with the
//! measured figure, the tolerance and the wall time.
//!
//! Run with `cargo test -p dilastab-core --test acceptance -- --nocapture`
//! to see the table.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_rational::Ratio;

use dilastab::charexp::{
    zbeta_exponent, GflpOracle, LevyOracle, StableIntegralOracle, WienerOracle, ZbetaOracle,
};
use dilastab::kernels::check_kernel_scaling;
use dilastab::montecarlo::{
    cf_match_test, default_cf_queries, ensemble_moments, isometry_check, simulate_aggregate,
    simulate_gflp, two_sample_cf_test, PathEnsemble,
};
use dilastab::report::to_json_string;
use dilastab::scaling::{
    estimate_alpha_from_variance, verify_aggregate_similarity, verify_dilative_stability,
    verify_fg_dilative, wiener_log_pair,
};
use dilastab::{
    as_to_ds, ds_to_as, AggLaw, ExponentQuery, GeneralizedScalingLaw, Kernel, Law, LevyModel,
    QuadratureConfig, ScaleFn, ScalingGrid,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn criterion(n: u32, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let elapsed = start.elapsed();
    let (mut pass, mut detail) = match result {
        Ok(o) => (o.pass, o.detail),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            (false, format!("error: {msg}"))
        }
    };
    if let Some(limit) = limit {
        if elapsed > limit {
            pass = false;
            detail.push_str(&format!("; runtime over the {}s limit", limit.as_secs()));
        }
    }
    println!(
        "criterion {n:>2} {:<4} {name}: {detail} [{:.2}s]",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    pass
}

fn unit_driver() -> LevyModel {
    LevyModel::two_point(1.0, 1.0).unwrap()
}

fn gflp(kernel: Kernel) -> GflpOracle<f64> {
    GflpOracle {
        model: unit_driver(),
        kernel,
        cfg: QuadratureConfig::default(),
    }
}

fn grid(scales: &[f64], thetas: &[f64]) -> ScalingGrid {
    ScalingGrid::new(
        vec![vec![1.0], vec![1.0, 2.0]],
        thetas.to_vec(),
        scales.to_vec(),
    )
    .unwrap()
}

fn c1_kernel_functional_equation() -> Outcome {
    let mut kernels = Vec::new();
    for h in [0.6, 0.75, 0.9] {
        kernels.push(Kernel::sub_fractional(h).unwrap());
    }
    kernels.push(Kernel::log_fractional());
    for k in [0.5, 1.0, 1.5] {
        kernels.push(Kernel::sghir(k).unwrap());
    }
    kernels.push(Kernel::fractional_ma(0.7).unwrap());
    let mut worst = 0.0f64;
    for (i, k) in kernels.iter().enumerate() {
        let dev = check_kernel_scaling(k, &k.claimed_law().unwrap(), 10_000, 1000 + i as u64);
        worst = if dev.is_nan() {
            f64::NAN
        } else {
            worst.max(dev)
        };
    }
    outcome(
        worst <= 1e-10,
        format!(
            "{} kernels, max deviation {worst:.3e} (tol 1e-10)",
            kernels.len()
        ),
    )
}

fn c2_dilative_stability_quadrature() -> Outcome {
    let g = grid(&[0.5, 2.0, 5.0], &[0.5, 1.0, 2.0]);
    let cases = [
        (Kernel::sub_fractional(0.7).unwrap(), Law::new(0.7, 1.0)),
        (Kernel::sghir(1.0).unwrap(), Law::new(0.5, -1.0)),
        (Kernel::log_fractional(), Law::new(0.5, 1.0)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, law) in cases {
        let name = k.name();
        let r = verify_dilative_stability(&gflp(k), &law, &g, 1e-3).unwrap();
        pass &= r.pass;
        parts.push(format!("{name} {:.2e}", r.max_rel_err));
    }
    outcome(pass, format!("max rel err {} (tol 1e-3)", parts.join(", ")))
}

fn c3_covariance() -> Outcome {
    let h: f64 = 0.75;
    let k = Kernel::sub_fractional(h).unwrap();
    let cfg = QuadratureConfig::default();
    let closed = |s: f64, t: f64| {
        t.powf(2.0 * h) + s.powf(2.0 * h)
            - 0.5 * ((s + t).powf(2.0 * h) + (t - s).abs().powf(2.0 * h))
    };
    let grid = [0.5, 1.0, 2.0];
    let mut worst = 0.0f64;
    for &s in &grid {
        for &t in &grid {
            let c = dilastab::charexp::gflp_covariance(&unit_driver(), &k, s, t, &cfg)
                .unwrap()
                .value;
            worst = worst.max((c - closed(s, t)).abs());
        }
    }
    let spot = dilastab::charexp::gflp_covariance(&unit_driver(), &k, 1.0, 1.0, &cfg)
        .unwrap()
        .value;
    let spot_ok = (spot - (2.0 - 2f64.sqrt())).abs() <= 1e-4 && (spot - 0.585786).abs() < 1e-6;
    outcome(
        worst <= 1e-4 && spot_ok,
        format!("max abs err {worst:.2e} (tol 1e-4), Cov(1,1) = {spot:.6}"),
    )
}

fn c4_nonuniqueness() -> Outcome {
    let oracle = StableIntegralOracle {
        kernel: Kernel::well_balanced(0.6, 1.5).unwrap(),
        stable_index: 1.5,
        sigma: 1.0,
        cfg: QuadratureConfig::default(),
    };
    let g = grid(&[0.5, 2.0, 5.0], &[0.5, 1.0, 2.0]);
    let tol = 1e-3;
    let ss = verify_dilative_stability(&oracle, &Law::new(0.6, 0.0), &g, tol).unwrap();
    let ds =
        verify_dilative_stability(&oracle, &Law::new(0.6 - 1.0 / 1.5 + 0.5, 1.0), &g, tol).unwrap();
    let wrong = verify_dilative_stability(&oracle, &Law::new(0.6, 1.0), &g, tol).unwrap();
    let pass = ss.pass && ds.pass && !wrong.pass && wrong.max_rel_err >= 10.0 * tol;
    outcome(
        pass,
        format!(
            "(0.6,0) {:.2e}, (0.4333,1) {:.2e}, wrong (0.6,1) {:.2e} (tol 1e-3, wrong needs >= 1e-2)",
            ss.max_rel_err, ds.max_rel_err, wrong.max_rel_err
        ),
    )
}

fn c5_zbeta() -> Outcome {
    let g = grid(&[0.5, 2.0], &[0.5, 1.0]);
    let tol = 1e-2;
    let mut pass = true;
    let mut parts = Vec::new();
    for beta in [-0.5, 0.0, 0.5] {
        let oracle = ZbetaOracle {
            beta,
            c: 1.0,
            cfg: QuadratureConfig::default(),
        };
        let law = Law::new(1.0 - beta / 2.0, -beta - 1.0);
        let r = verify_dilative_stability(&oracle, &law, &g, tol).unwrap();
        let off =
            verify_dilative_stability(&oracle, &Law::new(law.alpha + 0.1, law.delta), &g, tol)
                .unwrap();
        pass &= r.pass && off.max_rel_err >= 10.0 * tol;
        parts.push(format!(
            "beta {beta}: {:.2e} / perturbed {:.2e}",
            r.max_rel_err, off.max_rel_err
        ));
    }
    // halving the tolerance moves each value by less than the reported error
    let cfg = QuadratureConfig::default();
    let half = QuadratureConfig {
        rel_tol: cfg.rel_tol / 2.0,
        abs_tol: cfg.abs_tol / 2.0,
        ..cfg
    };
    let queries = [
        ExponentQuery::single(1.0, 1.0),
        ExponentQuery::single(0.5, 2.0),
        ExponentQuery::new(vec![1.0, 2.0], vec![1.0, -0.5]).unwrap(),
    ];
    let mut consistent = true;
    let mut worst_ratio = 0.0f64;
    for beta in [-0.5, 0.0, 0.5] {
        for q in &queries {
            let a = zbeta_exponent(beta, 1.0, q, &cfg).unwrap();
            let b = zbeta_exponent(beta, 1.0, q, &half).unwrap();
            let moved = (a.value - b.value).abs();
            consistent &= moved < a.err_estimate;
            worst_ratio = worst_ratio.max(moved / a.err_estimate);
        }
    }
    outcome(
        pass && consistent,
        format!(
            "{} (tol 1e-2); refinement shift / reported error <= {worst_ratio:.2}",
            parts.join(", ")
        ),
    )
}

fn c6_conversions() -> Outcome {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let alpha = rng.gen_range(-3.0..3.0);
        let mag: f64 = rng.gen_range(0.1..3.0);
        let delta = if rng.gen::<bool>() { mag } else { -mag };
        let law = Law::new(alpha, delta);
        let back = as_to_ds(ds_to_as(law).unwrap()).unwrap();
        worst = worst
            .max((back.alpha - alpha).abs())
            .max((back.delta - delta).abs());
        let agg = AggLaw::new(alpha, delta);
        let back = ds_to_as(as_to_ds(agg).unwrap()).unwrap();
        worst = worst
            .max((back.rho1 - alpha).abs())
            .max((back.rho2 - delta).abs());
    }
    let mut exact = true;
    for gamma in [Ratio::new(6i64, 5), Ratio::new(3, 2), Ratio::new(9, 5)] {
        let one = Ratio::from_integer(1);
        let rho = one / (gamma - one);
        let law = as_to_ds(dilastab::laws::AggregateSimilarityLaw::rigidity(rho)).unwrap();
        exact &= law.alpha == (Ratio::from_integer(3) - gamma) / 2 && law.delta == one - gamma;
    }
    outcome(
        worst <= 1e-14 && exact,
        format!("round-trip max err {worst:.2e} (tol 1e-14), rigidity map exact: {exact}"),
    )
}

fn c7_aggregate_similarity() -> Outcome {
    let g = grid(&[1.0], &[0.5, 1.0, 2.0]);
    let levy = LevyOracle {
        model: unit_driver(),
    };
    let lr =
        verify_aggregate_similarity(&levy, &AggLaw::new(0.0, -1.0), &[2, 3, 4], &g, 1e-12).unwrap();
    let law = ds_to_as(Law::new(0.7, 1.0)).unwrap();
    let gr = verify_aggregate_similarity(
        &gflp(Kernel::sub_fractional(0.7).unwrap()),
        &law,
        &[2, 3, 4],
        &g,
        1e-3,
    )
    .unwrap();
    outcome(
        lr.pass && gr.pass,
        format!(
            "levy (0,-1) {:.2e} (tol 1e-12), sub_fractional(0.7) ({:.2},{}) {:.2e} (tol 1e-3)",
            lr.max_rel_err, law.rho1, law.rho2, gr.max_rel_err
        ),
    )
}

/// Everything the Monte Carlo criterion produces, serialized.
struct McArtifacts {
    ensemble_csv: String,
    aggregate_csv: String,
    target_csv: String,
    reports_json: String,
    pass: bool,
    detail: String,
}

fn csv_of(ens: &PathEnsemble, name: &str) -> String {
    let dir =
        std::env::temp_dir().join(format!("dilastab-acceptance-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("ensemble.csv");
    ens.write_csv(&path).unwrap();
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push_str(&std::fs::read_to_string(dir.join("ensemble.meta.json")).unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
    text
}

fn monte_carlo(workers: usize) -> McArtifacts {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .unwrap();
    pool.install(|| {
        let model = unit_driver();
        let kernel = Kernel::sub_fractional(0.75).unwrap();
        let cfg = QuadratureConfig::default();
        let (n, radius, seed) = (20_000, 50.0, 20_240_601);
        let times = [1.0, 2.0, 4.0];
        let ens = simulate_gflp(&model, &kernel, &times, n, radius, seed).unwrap();

        let iso = isometry_check(&ens, &model, &kernel, 3.0, &cfg).unwrap();
        let iso_ok = iso.iter().all(|p| p.pass);

        let oracle = GflpOracle {
            model,
            kernel,
            cfg,
        };
        let queries = default_cf_queries(&times);
        let cf = cf_match_test(&ens, &oracle, &queries, 4.0).unwrap();

        let moments = ensemble_moments(&ens).unwrap();
        let samples: Vec<(f64, f64, f64)> = moments.iter().map(|m| (m.time, m.variance, m.variance_stderr)).collect();
        let alpha = estimate_alpha_from_variance(&samples).unwrap();
        let alpha_ok = (alpha.alpha - 0.75).abs() <= 0.05;

        // Σ_{i≤4} X^{(i)}(t) against 4^{ρ₁} X(4^{-ρ₂} t)
        let m = 4u32;
        let agg_law = ds_to_as(Law::new(0.75, 1.0)).unwrap();
        let mf = m as f64;
        let (c, s) = (mf.powf(agg_law.rho1), mf.powf(-agg_law.rho2));
        let agg_times = [1.0, 2.0];
        let agg = simulate_aggregate(&model, &kernel, m, &agg_times, n, radius, seed + 1).unwrap();
        let target_times: Vec<f64> = agg_times.iter().map(|t| t * s).collect();
        let target = simulate_gflp(&model, &kernel, &target_times, n, radius, seed + 2)
            .unwrap()
            .rescaled(c, s);
        let two = two_sample_cf_test(&agg, &target, &default_cf_queries(&agg_times), 4.0).unwrap();

        let reports_json = to_json_string(&serde_json::json!({
            "isometry": iso,
            "cf_match": cf,
            "moments": moments,
            "alpha": alpha,
            "aggregate": two,
        }))
        .unwrap();
        let iso_detail: Vec<String> = iso
            .iter()
            .map(|p| {
                format!(
                    "t={} |dvar|={:.3} vs 3se+bias={:.3}",
                    p.time,
                    (p.sample_variance - p.analytic_variance).abs(),
                    3.0 * p.variance_stderr + p.bias_bound
                )
            })
            .collect();
        McArtifacts {
            pass: iso_ok && cf.pass && alpha_ok && two.pass,
            detail: format!(
                "isometry [{}]; cf max|z| {:.2} (<= 4, {} queries); alpha {:.4} +- {:.4} (0.75 +- 0.05); m=4 two-sample max|z| {:.2} (<= 4)",
                iso_detail.join(", "),
                cf.max_abs_z,
                cf.points.len(),
                alpha.alpha,
                alpha.stderr,
                two.max_abs_z
            ),
            ensemble_csv: csv_of(&ens, "single"),
            aggregate_csv: csv_of(&agg, "aggregate"),
            target_csv: csv_of(&target, "target"),
            reports_json,
        }
    })
}

fn c9_fg_wiener() -> Outcome {
    let g = ScalingGrid::default();
    let power = GeneralizedScalingLaw::new(ScaleFn::Power(1.0 / 3.0), ScaleFn::Power(1.0 / 3.0));
    let p = verify_fg_dilative(&WienerOracle, &power, &g, 1e-13).unwrap();
    let l = verify_fg_dilative(&WienerOracle, &wiener_log_pair(), &g, 1e-13).unwrap();
    let bad = GeneralizedScalingLaw::new(ScaleFn::Power(1.0), ScaleFn::Power(1.0));
    let b = verify_fg_dilative(&WienerOracle, &bad, &g, 1e-3).unwrap();
    outcome(
        p.pass && l.pass && !b.pass,
        format!(
            "T^(1/3),T^(1/3): {:.1e}; sqrt(T/h),h: {:.1e}; T,T: {:.2e} (must fail)",
            p.max_rel_err, l.max_rel_err, b.max_rel_err
        ),
    )
}

#[test]
fn acceptance_suite() {
    let secs = Duration::from_secs;
    let mut results = vec![
        criterion(
            1,
            "kernel functional equation",
            Some(secs(1)),
            c1_kernel_functional_equation,
        ),
        criterion(
            2,
            "dilative stability via quadrature",
            Some(secs(30)),
            c2_dilative_stability_quadrature,
        ),
        criterion(3, "covariance oracle", Some(secs(5)), c3_covariance),
        criterion(
            4,
            "non-uniqueness of the stable parametrization",
            Some(secs(10)),
            c4_nonuniqueness,
        ),
        criterion(5, "Z_beta scaling law", Some(secs(120)), c5_zbeta),
        criterion(6, "parameter conversions", Some(secs(1)), c6_conversions),
        criterion(
            7,
            "aggregate similarity, exponent level",
            Some(secs(20)),
            c7_aggregate_similarity,
        ),
    ];
    let mut first = None;
    results.push(criterion(
        8,
        "Monte Carlo consistency",
        Some(secs(120)),
        || {
            let a = monte_carlo(rayon::current_num_threads().max(2));
            let o = outcome(a.pass, a.detail.clone());
            first = Some(a);
            o
        },
    ));
    results.push(criterion(
        9,
        "(f,g)-dilative stability of the Wiener process",
        None,
        c9_fg_wiener,
    ));
    results.push(criterion(
        10,
        "reproducibility across worker counts",
        None,
        || {
            let Some(a) = first.as_ref() else {
                return outcome(false, "criterion 8 produced no artifacts");
            };
            let mut same = true;
            for workers in [1, 3] {
                let b = monte_carlo(workers);
                same &= a.ensemble_csv == b.ensemble_csv
                    && a.aggregate_csv == b.aggregate_csv
                    && a.target_csv == b.target_csv
                    && a.reports_json == b.reports_json;
            }
            outcome(
                same,
                format!(
                    "ensembles and reports byte-identical for 1, 3 and {} workers: {same}",
                    rayon::current_num_threads().max(2)
                ),
            )
        },
    ));
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
