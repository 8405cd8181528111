//! Seeded simulation of generalized fractional Lévy processes.
//!
//! A path is the exact stochastic integral of the kernel against the driver
//! restricted to a window `[-U, U]` (or `[0, U]` for half-line kernels):
//! `S_t = Σ_k f(t, τ_k) J_k` over the driver's jumps. The only error is the
//! truncation, whose effect on the variance is at most
//! `E(L_1^2) ∫_{|u|>U} f(t,u)^2 du`.
//!
//! The negative-time half of the two-sided driver is used as `L(-t)` rather
//! than its left limit; for compound-Poisson drivers the two agree almost
//! surely, since no jump falls at a fixed time.
//!
//! Path `p` draws from substream `(seed, p)` and ensembles are collected in
//! path order, so results do not depend on the number of worker threads.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charexp::ExponentOracle;
use crate::error::{invalid, Error, Result};
use crate::kernels::{Kernel, KernelSpec, Support};
use crate::levy::LevyModel;
use crate::quadrature::{pairwise_sum, QuadratureConfig};
use crate::report::{format_f64, write_json, write_matrix_csv};
use crate::rng::substream;

/// Largest admissible variance bias, as a fraction of the analytic variance.
pub const MAX_BIAS_FRACTION: f64 = 0.01;
/// Target bias fraction for [`default_truncation_radius`].
pub const DEFAULT_BIAS_FRACTION: f64 = 0.001;

/// Everything needed to regenerate an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMeta {
    pub seed: u64,
    pub n_paths: usize,
    pub times: Vec<f64>,
    pub truncation_radius: f64,
    pub model: LevyModel<f64>,
    pub kernel: KernelSpec,
    /// Number of independent copies summed into each sample.
    pub aggregate_m: u32,
    /// `(space factor c, time factor s)`: samples are `c X(s t)` at the listed times.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescale: Option<(f64, f64)>,
    /// Per-time bound on the variance lost to truncation.
    pub variance_bias_bound: Vec<f64>,
}

impl EnsembleMeta {
    /// Rebuilds the ensemble this metadata describes.
    pub fn regenerate(&self) -> Result<PathEnsemble> {
        let kernel = self.kernel.build()?;
        let m = self.aggregate_m.max(1);
        let (c, s) = self.rescale.unwrap_or((1.0, 1.0));
        let sim_times: Vec<f64> = self.times.iter().map(|t| t * s).collect();
        let mut ens = simulate_aggregate(
            &self.model,
            &kernel,
            m,
            &sim_times,
            self.n_paths,
            self.truncation_radius,
            self.seed,
        )?;
        if self.rescale.is_some() {
            ens = ens.rescaled(c, s);
        }
        Ok(ens)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub meta: EnsembleMeta,
    /// Row-major `n_paths × k`.
    pub samples: Vec<f64>,
}

impl PathEnsemble {
    pub fn n_paths(&self) -> usize {
        self.meta.n_paths
    }

    pub fn times(&self) -> &[f64] {
        &self.meta.times
    }

    pub fn k(&self) -> usize {
        self.meta.times.len()
    }

    pub fn row(&self, p: usize) -> &[f64] {
        &self.samples[p * self.k()..(p + 1) * self.k()]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_paths())
            .map(|p| self.samples[p * self.k() + j])
            .collect()
    }

    /// `c X(s t)` reported at times `t`: multiplies samples by `c` and divides
    /// the listed times by `s`.
    pub fn rescaled(mut self, c: f64, s: f64) -> Self {
        for x in &mut self.samples {
            *x *= c;
        }
        for t in &mut self.meta.times {
            *t /= s;
        }
        for b in &mut self.meta.variance_bias_bound {
            *b *= c * c;
        }
        self.meta.rescale = Some((c, s));
        self
    }

    fn column_index(&self, t: f64) -> Option<usize> {
        self.meta
            .times
            .iter()
            .position(|&x| (x - t).abs() <= 1e-12 * x.abs().max(1.0))
    }

    /// CSV with one row per path and one column per time, plus a JSON sidecar
    /// `<stem>.meta.json` next to it.
    pub fn write_csv(&self, csv_path: &Path) -> Result<()> {
        let header: Vec<String> = self
            .meta
            .times
            .iter()
            .map(|&t| format!("t={}", format_f64(t)))
            .collect();
        let file = std::fs::File::create(csv_path)?;
        let mut w = std::io::BufWriter::new(file);
        write_matrix_csv(
            &mut w,
            &header,
            (0..self.n_paths()).map(|p| self.row(p).to_vec()),
        )?;
        w.flush()?;
        write_json(&meta_path(csv_path), &self.meta)
    }
}

/// `ensemble.csv` -> `ensemble.meta.json`.
pub fn meta_path(csv_path: &Path) -> std::path::PathBuf {
    let stem = csv_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("ensemble");
    csv_path.with_file_name(format!("{stem}.meta.json"))
}

fn window(kernel: &Kernel<f64>, radius: f64) -> (f64, f64) {
    match kernel.support() {
        Support::WholeLine => (-radius, radius),
        Support::PositiveHalfline => (0.0, radius),
    }
}

/// `(variance bias bound, analytic variance)` at each time.
pub fn truncation_bias(
    model: &LevyModel<f64>,
    kernel: &Kernel<f64>,
    times: &[f64],
    radius: f64,
    cfg: &QuadratureConfig<f64>,
) -> Result<Vec<(f64, f64)>> {
    let m2 = model.second_moment();
    times
        .iter()
        .map(|&t| {
            let tail = kernel.tail_l2_sq(t, radius, cfg)?;
            let total = kernel.l2_norm_sq(t, cfg)?;
            Ok((m2 * (tail.value + tail.err_estimate), m2 * total.value))
        })
        .collect()
}

fn check_inputs(kernel: &Kernel<f64>, times: &[f64], n: usize, radius: f64) -> Result<()> {
    if n == 0 {
        return invalid("need at least one path");
    }
    if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
        return invalid("need at least one finite time");
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return invalid(format!("truncation radius must be positive, got {radius}"));
    }
    let tmax = times.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    if kernel.support() == Support::WholeLine && radius <= tmax {
        return invalid(format!(
            "truncation radius {radius} must exceed max |t| = {tmax}"
        ));
    }
    Ok(())
}

fn bias_bounds(
    model: &LevyModel<f64>,
    kernel: &Kernel<f64>,
    times: &[f64],
    radius: f64,
) -> Result<Vec<f64>> {
    let cfg = QuadratureConfig::default();
    let pairs = truncation_bias(model, kernel, times, radius, &cfg)?;
    for &(bias, variance) in &pairs {
        if bias > MAX_BIAS_FRACTION * variance {
            return Err(Error::TruncationTooSmall {
                radius,
                bias,
                variance,
                limit_pct: 100.0 * MAX_BIAS_FRACTION,
            });
        }
    }
    Ok(pairs.into_iter().map(|p| p.0).collect())
}

fn path_values(
    model: &LevyModel<f64>,
    kernel: &Kernel<f64>,
    times: &[f64],
    lo: f64,
    hi: f64,
    seed: u64,
    p: u64,
) -> Result<Vec<f64>> {
    let mut rng = substream(seed, p);
    let jumps = model.sample_jumps_in(lo, hi, &mut rng)?;
    Ok(times
        .iter()
        .map(|&t| {
            jumps
                .iter()
                .fold(0.0, |acc, j| acc + kernel.eval(t, j.position) * j.size)
        })
        .collect())
}

/// `n_paths` independent samples of `(S_{t_1}, ..., S_{t_k})`.
pub fn simulate_gflp(
    model: &LevyModel<f64>,
    kernel: &Kernel<f64>,
    times: &[f64],
    n_paths: usize,
    radius: f64,
    seed: u64,
) -> Result<PathEnsemble> {
    simulate_aggregate(model, kernel, 1, times, n_paths, radius, seed)
}

/// `n_groups` samples of the sum of `m` independent copies.
///
/// Group `g` sums paths `g m, ..., g m + m - 1` of the single-copy stream, so
/// `m = 1` reproduces [`simulate_gflp`] exactly.
pub fn simulate_aggregate(
    model: &LevyModel<f64>,
    kernel: &Kernel<f64>,
    m: u32,
    times: &[f64],
    n_groups: usize,
    radius: f64,
    seed: u64,
) -> Result<PathEnsemble> {
    model.validate()?;
    check_inputs(kernel, times, n_groups, radius)?;
    if m == 0 {
        return invalid("aggregate size m must be positive");
    }
    let bias = bias_bounds(model, kernel, times, radius)?;
    let (lo, hi) = window(kernel, radius);
    let k = times.len();
    let rows: Vec<Vec<f64>> = (0..n_groups)
        .into_par_iter()
        .map(|g| {
            let mut sum = vec![0.0; k];
            for i in 0..m as u64 {
                let v = path_values(model, kernel, times, lo, hi, seed, g as u64 * m as u64 + i)?;
                for (s, x) in sum.iter_mut().zip(v) {
                    *s += x;
                }
            }
            Ok(sum)
        })
        .collect::<Result<_>>()?;
    Ok(PathEnsemble {
        meta: EnsembleMeta {
            seed,
            n_paths: n_groups,
            times: times.to_vec(),
            truncation_radius: radius,
            model: *model,
            kernel: KernelSpec::of(kernel),
            aggregate_m: m,
            rescale: None,
            variance_bias_bound: bias.iter().map(|b| b * m as f64).collect(),
        },
        samples: rows.concat(),
    })
}

/// Smallest `U = U_0 2^j` whose variance bias bound is below
/// [`DEFAULT_BIAS_FRACTION`] of the analytic variance at every time.
pub fn default_truncation_radius(
    model: &LevyModel<f64>,
    kernel: &Kernel<f64>,
    times: &[f64],
) -> Result<f64> {
    let cfg = QuadratureConfig::default();
    let tmax = times.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let mut radius = (2.0 * tmax).max(1.0);
    for _ in 0..60 {
        let pairs = truncation_bias(model, kernel, times, radius, &cfg)?;
        if pairs.iter().all(|&(b, v)| b <= DEFAULT_BIAS_FRACTION * v) {
            return Ok(radius);
        }
        radius *= 2.0;
    }
    Err(Error::SearchFailed(
        "no truncation radius below 2^60 meets the bias target".into(),
    ))
}

// ------------------------------------------------------------ statistics

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfEstimate {
    pub re: f64,
    pub im: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    /// `max(stderr_re, stderr_im)`; at most `1/√n`.
    pub stderr: f64,
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn query_columns(ens: &PathEnsemble, q: &ExponentQuery) -> Result<Vec<usize>> {
    q.validate()?;
    q.times
        .iter()
        .map(|&t| {
            ens.column_index(t).ok_or_else(|| {
                Error::InvalidQuery(format!(
                    "time {t} not in ensemble times {:?}",
                    ens.meta.times
                ))
            })
        })
        .collect()
}

type ExponentQuery = crate::charexp::ExponentQuery<f64>;

/// Sample mean of `exp{i Σ θ_j S_{t_j}}` with componentwise standard errors.
pub fn empirical_cf(ens: &PathEnsemble, q: &ExponentQuery) -> Result<CfEstimate> {
    let cols = query_columns(ens, q)?;
    let phases: Vec<f64> = (0..ens.n_paths())
        .map(|p| {
            let row = ens.row(p);
            cols.iter()
                .zip(&q.thetas)
                .fold(0.0, |a, (&c, &th)| a + th * row[c])
        })
        .collect();
    let cos: Vec<f64> = phases.iter().map(|x| x.cos()).collect();
    let sin: Vec<f64> = phases.iter().map(|x| x.sin()).collect();
    let (re, stderr_re) = mean_and_stderr(&cos);
    let (im, stderr_im) = mean_and_stderr(&sin);
    Ok(CfEstimate {
        re,
        im,
        stderr_re,
        stderr_im,
        stderr: stderr_re.max(stderr_im),
    })
}

/// Bound on `|exp(-ψ) - exp(-ψ_U)|` from truncation: `½ (Σ|θ_j| √b_j)²`
/// with `b_j` the per-time variance bias bounds.
fn cf_bias_allowance(ens: &PathEnsemble, cols: &[usize], q: &ExponentQuery) -> f64 {
    let s = cols.iter().zip(&q.thetas).fold(0.0, |a, (&c, &th)| {
        a + th.abs() * ens.meta.variance_bias_bound[c].sqrt()
    });
    0.5 * s * s
}

fn z_score(diff: f64, allowance: f64, stderr: f64) -> f64 {
    let excess = (diff.abs() - allowance).max(0.0);
    if excess == 0.0 {
        0.0
    } else if stderr > 0.0 {
        excess / stderr
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfPoint {
    pub times: Vec<f64>,
    pub thetas: Vec<f64>,
    pub empirical_re: f64,
    pub empirical_im: f64,
    pub reference_re: f64,
    pub reference_im: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub bias_allowance: f64,
    pub z_re: f64,
    pub z_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfMatchReport {
    pub points: Vec<CfPoint>,
    pub max_abs_z: f64,
    pub z_threshold: f64,
    /// Per-comparison two-sided level implied by the threshold, times the
    /// number of comparisons (a Bonferroni bound on the family-wise level).
    pub familywise_level_bound: f64,
    pub pass: bool,
}

impl CfMatchReport {
    fn assemble(points: Vec<CfPoint>, z_threshold: f64) -> Self {
        let max_abs_z = points
            .iter()
            .fold(0.0f64, |a, p| a.max(p.z_re.abs()).max(p.z_im.abs()));
        let comparisons = 2.0 * points.len() as f64;
        let level = libm::erfc(z_threshold / std::f64::consts::SQRT_2);
        Self {
            pass: max_abs_z <= z_threshold,
            points,
            max_abs_z,
            z_threshold,
            familywise_level_bound: (level * comparisons).min(1.0),
        }
    }
}

/// Compares the empirical CF with `exp(-ψ)` from `oracle` at each query.
///
/// The z-score of each component is the excess of the discrepancy over the
/// truncation allowance, divided by its standard error.
pub fn cf_match_test<O: ExponentOracle<f64> + ?Sized>(
    ens: &PathEnsemble,
    oracle: &O,
    queries: &[ExponentQuery],
    z_threshold: f64,
) -> Result<CfMatchReport> {
    if !(z_threshold > 0.0) {
        return invalid("z threshold must be positive");
    }
    let points = queries
        .par_iter()
        .map(|q| {
            let cols = query_columns(ens, q)?;
            let emp = empirical_cf(ens, q)?;
            let psi = oracle.exponent(q)?;
            let reference = (-psi.value).exp();
            let allowance = cf_bias_allowance(ens, &cols, q) + psi.err_estimate;
            Ok(CfPoint {
                times: q.times.clone(),
                thetas: q.thetas.clone(),
                empirical_re: emp.re,
                empirical_im: emp.im,
                reference_re: reference,
                reference_im: 0.0,
                stderr_re: emp.stderr_re,
                stderr_im: emp.stderr_im,
                bias_allowance: allowance,
                z_re: z_score(emp.re - reference, allowance, emp.stderr_re),
                z_im: z_score(emp.im, 0.0, emp.stderr_im),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CfMatchReport::assemble(points, z_threshold))
}

/// Two-sample comparison of empirical CFs with pooled standard errors.
pub fn two_sample_cf_test(
    a: &PathEnsemble,
    b: &PathEnsemble,
    queries: &[ExponentQuery],
    z_threshold: f64,
) -> Result<CfMatchReport> {
    if !(z_threshold > 0.0) {
        return invalid("z threshold must be positive");
    }
    let points = queries
        .iter()
        .map(|q| {
            let (ca, cb) = (query_columns(a, q)?, query_columns(b, q)?);
            let (ea, eb) = (empirical_cf(a, q)?, empirical_cf(b, q)?);
            let allowance = cf_bias_allowance(a, &ca, q) + cf_bias_allowance(b, &cb, q);
            let se_re = ea.stderr_re.hypot(eb.stderr_re);
            let se_im = ea.stderr_im.hypot(eb.stderr_im);
            Ok(CfPoint {
                times: q.times.clone(),
                thetas: q.thetas.clone(),
                empirical_re: ea.re,
                empirical_im: ea.im,
                reference_re: eb.re,
                reference_im: eb.im,
                stderr_re: se_re,
                stderr_im: se_im,
                bias_allowance: allowance,
                z_re: z_score(ea.re - eb.re, allowance, se_re),
                z_im: z_score(ea.im - eb.im, 0.0, se_im),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CfMatchReport::assemble(points, z_threshold))
}

/// Six queries: `θ ∈ {0.5, 1, 2}` at the first time, and the same
/// magnitudes along `(1, -1/2)` at the first two times (or at the first
/// time alone if there is only one).
pub fn default_cf_queries(times: &[f64]) -> Vec<ExponentQuery> {
    let mut out = Vec::with_capacity(6);
    for &th in &[0.5, 1.0, 2.0] {
        out.push(ExponentQuery::single(times[0], th));
    }
    for &th in &[0.5, 1.0, 2.0] {
        if times.len() >= 2 {
            out.push(ExponentQuery {
                times: vec![times[0], times[1]],
                thetas: vec![th, -0.5 * th],
            });
        } else {
            out.push(ExponentQuery::single(times[0], -0.5 * th));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub time: f64,
    pub mean: f64,
    pub mean_stderr: f64,
    pub variance: f64,
    pub variance_stderr: f64,
}

/// Unbiased mean and variance per time. The variance standard error uses
/// `Var(s²) ≈ (μ₄ - σ⁴ (n-3)/(n-1)) / n`.
pub fn ensemble_moments(ens: &PathEnsemble) -> Result<Vec<MomentSummary>> {
    let n = ens.n_paths();
    if n < 2 {
        return invalid("moments need at least two paths");
    }
    let nf = n as f64;
    Ok((0..ens.k())
        .map(|j| {
            let col = ens.column(j);
            let mean = pairwise_sum(&col) / nf;
            let d2: Vec<f64> = col.iter().map(|x| (x - mean).powi(2)).collect();
            let d4: Vec<f64> = d2.iter().map(|x| x * x).collect();
            let variance = pairwise_sum(&d2) / (nf - 1.0);
            let mu4 = pairwise_sum(&d4) / nf;
            let var_of_var = ((mu4 - variance * variance * (nf - 3.0) / (nf - 1.0)) / nf).max(0.0);
            MomentSummary {
                time: ens.meta.times[j],
                mean,
                mean_stderr: (variance / nf).sqrt(),
                variance,
                variance_stderr: var_of_var.sqrt(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsometryPoint {
    pub time: f64,
    pub sample_variance: f64,
    pub variance_stderr: f64,
    pub analytic_variance: f64,
    pub bias_bound: f64,
    pub pass: bool,
}

/// `|sample variance - E(L_1^2) ‖f(t,·)‖²| ≤ n_sigma · stderr + bias bound`.
pub fn isometry_check(
    ens: &PathEnsemble,
    model: &LevyModel<f64>,
    kernel: &Kernel<f64>,
    n_sigma: f64,
    cfg: &QuadratureConfig<f64>,
) -> Result<Vec<IsometryPoint>> {
    let m = ens.meta.aggregate_m.max(1) as f64;
    let (c, s) = ens.meta.rescale.unwrap_or((1.0, 1.0));
    ensemble_moments(ens)?
        .into_iter()
        .enumerate()
        .map(|(j, mo)| {
            let ip = crate::charexp::gflp_covariance(model, kernel, mo.time * s, mo.time * s, cfg)?;
            let analytic = m * c * c * ip.value;
            let bias = ens.meta.variance_bias_bound[j] + m * c * c * ip.err_estimate;
            Ok(IsometryPoint {
                time: mo.time,
                sample_variance: mo.variance,
                variance_stderr: mo.variance_stderr,
                analytic_variance: analytic,
                bias_bound: bias,
                pass: (mo.variance - analytic).abs() <= n_sigma * mo.variance_stderr + bias,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charexp::GflpOracle;

    fn unit() -> LevyModel<f64> {
        LevyModel::two_point(1.0, 1.0).unwrap()
    }

    #[test]
    fn vanishing_intensity_gives_zero_paths() {
        let m = LevyModel::two_point(1e-6, 1.0).unwrap();
        let k = Kernel::sub_fractional(0.75).unwrap();
        let ens = simulate_gflp(&m, &k, &[0.5], 1000, 1.0, 3).unwrap();
        assert!(ens.meta.variance_bias_bound[0] > 0.0);
        let zeros = ens.samples.iter().filter(|&&x| x == 0.0).count();
        assert!(zeros >= 995, "{zeros}");
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let k = Kernel::sghir(1.0).unwrap();
        let r = default_truncation_radius(&unit(), &k, &[1.0, 2.0]).unwrap();
        let a = simulate_gflp(&unit(), &k, &[1.0, 2.0], 500, r, 11).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool
            .install(|| simulate_gflp(&unit(), &k, &[1.0, 2.0], 500, r, 11))
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.meta.regenerate().unwrap(), a);
        let c = simulate_gflp(&unit(), &k, &[1.0, 2.0], 500, r, 12).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn aggregate_of_one_is_plain_simulation() {
        let k = Kernel::log_fractional();
        let a = simulate_gflp(&unit(), &k, &[1.0], 200, 400.0, 5).unwrap();
        let b = simulate_aggregate(&unit(), &k, 1, &[1.0], 200, 400.0, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn aggregate_sums_consecutive_paths() {
        let k = Kernel::log_fractional();
        let single = simulate_gflp(&unit(), &k, &[1.0], 6, 400.0, 5).unwrap();
        let agg = simulate_aggregate(&unit(), &k, 3, &[1.0], 2, 400.0, 5).unwrap();
        assert_eq!(
            agg.samples[0],
            single.samples[0] + single.samples[1] + single.samples[2]
        );
        assert_eq!(
            agg.samples[1],
            single.samples[3] + single.samples[4] + single.samples[5]
        );
    }

    #[test]
    fn small_window_is_rejected() {
        let k = Kernel::fractional_ma(0.9).unwrap();
        let r = simulate_gflp(&unit(), &k, &[1.0], 10, 2.0, 1);
        assert!(matches!(r, Err(Error::TruncationTooSmall { .. })), "{r:?}");
    }

    #[test]
    fn input_validation() {
        let k = Kernel::log_fractional();
        assert!(simulate_gflp(&unit(), &k, &[1.0], 0, 400.0, 1).is_err());
        assert!(simulate_gflp(&unit(), &k, &[1.0], 10, 0.5, 1).is_err());
        assert!(simulate_gflp(&unit(), &k, &[], 10, 400.0, 1).is_err());
        assert!(simulate_aggregate(&unit(), &k, 0, &[1.0], 10, 400.0, 1).is_err());
    }

    #[test]
    fn empirical_cf_basics() {
        let k = Kernel::sghir(1.0).unwrap();
        let ens = simulate_gflp(&unit(), &k, &[1.0], 2000, 1e4, 2).unwrap();
        let z = empirical_cf(&ens, &ExponentQuery::single(1.0, 0.0)).unwrap();
        assert_eq!((z.re, z.im, z.stderr), (1.0, 0.0, 0.0));
        let e = empirical_cf(&ens, &ExponentQuery::single(1.0, 1.0)).unwrap();
        assert!(e.stderr <= 1.0 / (2000f64).sqrt());
        assert!(empirical_cf(&ens, &ExponentQuery::single(3.0, 1.0)).is_err());
    }

    #[test]
    fn moments_of_zero_ensemble() {
        let m = LevyModel::two_point(1e-9, 1.0).unwrap();
        let ens = simulate_gflp(&m, &Kernel::indicator(), &[1.0], 50, 2.0, 0).unwrap();
        let mo = ensemble_moments(&ens).unwrap();
        assert_eq!((mo[0].mean, mo[0].variance), (0.0, 0.0));
    }

    #[test]
    fn matched_oracle_passes_cf_test() {
        let k = Kernel::sghir(1.0).unwrap();
        let times = [1.0, 2.0];
        let r = default_truncation_radius(&unit(), &k, &times).unwrap();
        let ens = simulate_gflp(&unit(), &k, &times, 5000, r, 21).unwrap();
        let oracle = GflpOracle {
            model: unit(),
            kernel: k,
            cfg: QuadratureConfig::default(),
        };
        let rep = cf_match_test(&ens, &oracle, &default_cf_queries(&times), 4.0).unwrap();
        assert!(rep.pass, "{:?}", rep.max_abs_z);
        assert_eq!(rep.points.len(), 6);
        let iso = isometry_check(&ens, &unit(), &k, 3.0, &QuadratureConfig::default()).unwrap();
        assert!(iso.iter().all(|p| p.pass), "{iso:?}");
    }

    #[test]
    fn csv_and_sidecar() {
        let dir = std::env::temp_dir().join(format!("dilastab-mc-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let k = Kernel::log_fractional();
        let ens = simulate_gflp(&unit(), &k, &[1.0, 2.0], 10, 400.0, 9).unwrap();
        let path = dir.join("ensemble.csv");
        ens.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 11);
        let meta: EnsembleMeta =
            serde_json::from_str(&std::fs::read_to_string(dir.join("ensemble.meta.json")).unwrap())
                .unwrap();
        assert_eq!(meta.regenerate().unwrap(), ens);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
