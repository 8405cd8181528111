//! Exponent and covariance values against brute-force fixed-grid sums that
//! share no code with the adaptive quadrature.

use dilastab::charexp::{
    gflp_covariance, gflp_exponent, stable_exponent, zbeta_exponent, ExponentQuery,
};
use dilastab::kernels::zbeta_aux;
use dilastab::{Kernel, LevyModel, QuadratureConfig};
use std::f64::consts::PI;

fn midpoint(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

/// Midpoint rule after `u = a + (b-a)(1 - cos πs)/2`, which clusters nodes
/// at both ends and tames integrable endpoint singularities.
fn clustered(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    midpoint(
        |s| f(a + (b - a) * 0.5 * (1.0 - (PI * s).cos())) * (b - a) * 0.5 * PI * (PI * s).sin(),
        0.0,
        1.0,
        n,
    )
}

/// `∫_{c}^{∞}` (dir = 1) or `∫_{-∞}^{c}` (dir = -1) through `u = c + dir e^y`.
fn exp_tail(f: impl Fn(f64) -> f64, c: f64, dir: f64, y0: f64, y1: f64, n: usize) -> f64 {
    midpoint(|y| f(c + dir * y.exp()) * y.exp(), y0, y1, n)
}

#[test]
fn gflp_subfractional_matches_riemann_sum() {
    let m = LevyModel::two_point(1.0, 1.0).unwrap();
    let k = Kernel::sub_fractional(0.7).unwrap();
    let psi = gflp_exponent(
        &m,
        &k,
        &ExponentQuery::single(1.0, 1.0),
        &QuadratureConfig::default(),
    )
    .unwrap();
    let riemann = midpoint(|u| m.phi(k.eval(1.0, u)), -200.0, 200.0, 4_000_000);
    assert!(
        (psi.value - riemann).abs() < 1e-6,
        "{} vs {}",
        psi.value,
        riemann
    );
}

#[test]
fn gflp_two_time_laplace_matches_riemann_sum() {
    let m = LevyModel::laplace(1.5, 2.0).unwrap();
    let k = Kernel::sghir(1.0).unwrap();
    let q = ExponentQuery::new(vec![1.0, 2.0], vec![0.7, -0.4]).unwrap();
    let psi = gflp_exponent(&m, &k, &q, &QuadratureConfig::default()).unwrap();
    let g = |u: f64| m.phi(0.7 * k.eval(1.0, u) - 0.4 * k.eval(2.0, u));
    let riemann = clustered(g, 0.0, 1.0, 200_000) + exp_tail(g, 1.0, 1.0, -30.0, 45.0, 300_000);
    assert!(
        (psi.value - riemann).abs() < 1e-7 * riemann.max(1.0),
        "{} vs {}",
        psi.value,
        riemann
    );
}

#[test]
fn stable_integral_matches_riemann_sum() {
    let k = Kernel::well_balanced(0.6, 1.5).unwrap();
    let psi = stable_exponent(
        &k,
        1.5,
        1.0,
        &ExponentQuery::single(1.0, 1.0),
        &QuadratureConfig::default(),
    )
    .unwrap();
    let g = |u: f64| k.eval(1.0, u).abs().powf(1.5);
    let riemann = exp_tail(g, 0.0, -1.0, -40.0, 40.0, 800_000)
        + clustered(g, 0.0, 1.0, 400_000)
        + exp_tail(g, 1.0, 1.0, -40.0, 40.0, 80_000);
    assert!(
        (psi.value - riemann).abs() < 1e-5,
        "{} vs {}",
        psi.value,
        riemann
    );
}

#[test]
fn zbeta_matches_double_riemann_sum() {
    let psi = zbeta_exponent(
        0.0,
        1.0,
        &ExponentQuery::single(1.0, 1.0),
        &QuadratureConfig::default(),
    )
    .unwrap();
    let (y0, y1, ny) = (1e-4f64.ln(), 1e4f64.ln(), 4000);
    let outer = midpoint(
        |y| {
            let x = y.exp();
            let inner = midpoint(
                |s| {
                    let d = zbeta_aux(x, 1.0 - s) - zbeta_aux(x, -s);
                    d * d
                },
                -50.0,
                1.0,
                51_000,
            );
            -(-0.5 * inner).exp_m1() * x
        },
        y0,
        y1,
        ny,
    );
    let rel = (psi.value - outer).abs() / outer;
    assert!(rel < 1e-3, "{} vs {} (rel {rel})", psi.value, outer);
}

#[test]
fn fractional_ma_covariance_matches_fbm_and_riemann() {
    let m = LevyModel::two_point(1.0, 1.0).unwrap();
    let k = Kernel::fractional_ma(0.75).unwrap();
    let cov = gflp_covariance(&m, &k, 1.0, 2.0, &QuadratureConfig::default())
        .unwrap()
        .value;
    assert!((cov - 2f64.sqrt()).abs() < 1e-6, "{cov}");
    let g = |u: f64| k.eval(1.0, u) * k.eval(2.0, u);
    let riemann = exp_tail(g, 0.0, -1.0, -40.0, 40.0, 400_000)
        + clustered(g, 0.0, 1.0, 100_000)
        + clustered(g, 1.0, 2.0, 100_000);
    assert!((cov - riemann).abs() < 1e-5, "{cov} vs {riemann}");
}

/// One time point: the inner integral is elementary,
/// `I(x) = θ² (t - 2a + b/2)/x² + θ² a²/(2x)` with `a = (1-e^{-xt})/x`
/// and `b = (1-e^{-2xt})/x`; the outer one is a midpoint rule in `ln x`,
/// which converges fast for this smooth, doubly decaying integrand.
#[test]
fn zbeta_single_time_matches_closed_inner_integral() {
    for beta in [-0.5, 0.0, 0.5] {
        for (t, theta) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)] {
            let inner = |x: f64| {
                let a = -(-x * t).exp_m1() / x;
                let b = -(-2.0 * x * t).exp_m1() / x;
                // (t - 2a + b/2)/x² cancels for small xt; use its series there
                let core = if x * t < 1e-2 {
                    t.powi(3) / 3.0 - x * t.powi(4) / 4.0 + 7.0 * x * x * t.powi(5) / 60.0
                } else {
                    (t - 2.0 * a + 0.5 * b) / (x * x)
                };
                theta * theta * (core + 0.5 * a * a / x)
            };
            let reference = midpoint(
                |y| {
                    let x = y.exp();
                    -(-0.5 * inner(x)).exp_m1() * (x.powf(beta) * x)
                },
                -70.0,
                80.0,
                300_000,
            );
            let psi = zbeta_exponent(
                beta,
                1.0,
                &ExponentQuery::single(t, theta),
                &QuadratureConfig::default(),
            )
            .unwrap();
            let diff = (psi.value - reference).abs();
            assert!(
                diff < 1e-8 * reference,
                "beta {beta} t {t}: {} vs {reference}",
                psi.value
            );
            assert!(
                diff <= psi.err_estimate.max(1e-12),
                "error estimate {} below actual {diff}",
                psi.err_estimate
            );
        }
    }
}
