//! Characteristic-exponent oracles.
//!
//! Each oracle evaluates `ψ_{t_1..t_k}(θ_1..θ_k)`, the negative logarithm of
//! the joint characteristic function of `(X_{t_1}, ..., X_{t_k})`, either in
//! closed form or by adaptive quadrature with an error estimate that covers
//! both panel error and the truncated tails.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{zbeta_aux, Kernel};
use crate::levy::{LevyModel, StableLevy};
use crate::quadrature::{
    integrate_segments, merge_breakpoints, Estimate, QuadratureConfig, Segment,
};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentQuery<S> {
    pub times: Vec<S>,
    pub thetas: Vec<S>,
}

impl<S: Real> ExponentQuery<S> {
    pub fn new(times: Vec<S>, thetas: Vec<S>) -> Result<Self> {
        let q = Self { times, thetas };
        q.validate()?;
        Ok(q)
    }

    pub fn single(t: S, theta: S) -> Self {
        Self {
            times: vec![t],
            thetas: vec![theta],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() || self.times.len() != self.thetas.len() {
            return Err(Error::InvalidQuery(format!(
                "times ({}) and thetas ({}) must have equal nonzero length",
                self.times.len(),
                self.thetas.len()
            )));
        }
        if self
            .times
            .iter()
            .chain(&self.thetas)
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidQuery("non-finite time or theta".into()));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.times.len()
    }

    pub fn is_zero(&self) -> bool {
        self.thetas.iter().all(|t| *t == S::zero())
    }

    /// Same thetas at times scaled by `factor`.
    pub fn with_times_scaled(&self, factor: S) -> Self {
        Self {
            times: self.times.iter().map(|&t| t * factor).collect(),
            thetas: self.thetas.clone(),
        }
    }

    /// Same times with thetas scaled by `factor`.
    pub fn with_thetas_scaled(&self, factor: S) -> Self {
        Self {
            times: self.times.clone(),
            thetas: self.thetas.iter().map(|&t| t * factor).collect(),
        }
    }

    pub fn negated(&self) -> Self {
        self.with_thetas_scaled(-S::one())
    }

    fn theta_l1(&self) -> S {
        self.thetas.iter().fold(S::zero(), |a, t| a + t.abs())
    }

    fn max_time(&self) -> S {
        self.times.iter().fold(S::zero(), |a, &t| a.max(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeDomain {
    WholeLine,
    NonNegative,
    /// Strictly ascending positive times (independent-increment formulas).
    AscendingPositive,
}

impl TimeDomain {
    pub fn admits<S: Real>(&self, times: &[S]) -> bool {
        match self {
            TimeDomain::WholeLine => true,
            TimeDomain::NonNegative => times.iter().all(|&t| t >= S::zero()),
            TimeDomain::AscendingPositive => {
                let mut prev = S::zero();
                times.iter().all(|&t| {
                    let ok = t > prev;
                    prev = t;
                    ok
                })
            }
        }
    }
}

/// A deterministic evaluator of characteristic exponents.
pub trait ExponentOracle<S: Real>: Send + Sync {
    fn exponent(&self, q: &ExponentQuery<S>) -> Result<Estimate<S>>;

    fn time_domain(&self) -> TimeDomain;

    fn describe(&self) -> String;

    fn check_query(&self, q: &ExponentQuery<S>) -> Result<()> {
        q.validate()?;
        if !self.time_domain().admits(&q.times) {
            return Err(Error::InvalidQuery(format!(
                "times {:?} outside the time domain {:?} of {}",
                q.times.iter().map(|t| t.as_f64()).collect::<Vec<_>>(),
                self.time_domain(),
                self.describe()
            )));
        }
        Ok(())
    }
}

impl<S: Real, O: ExponentOracle<S> + ?Sized> ExponentOracle<S> for &O {
    fn exponent(&self, q: &ExponentQuery<S>) -> Result<Estimate<S>> {
        (**self).exponent(q)
    }
    fn time_domain(&self) -> TimeDomain {
        (**self).time_domain()
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<S: Real, O: ExponentOracle<S> + ?Sized> ExponentOracle<S> for Box<O> {
    fn exponent(&self, q: &ExponentQuery<S>) -> Result<Estimate<S>> {
        (**self).exponent(q)
    }
    fn time_domain(&self) -> TimeDomain {
        (**self).time_domain()
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

// ---------------------------------------------------------------- GFLP

/// `ψ = ∫ φ(Σ_j θ_j f(t_j, u)) du`.
pub fn gflp_exponent<S: Real>(
    model: &LevyModel<S>,
    kernel: &Kernel<S>,
    q: &ExponentQuery<S>,
    cfg: &QuadratureConfig<S>,
) -> Result<Estimate<S>> {
    q.validate()?;
    cfg.validate()?;
    if q.is_zero() {
        return Ok(Estimate::exact(S::zero()));
    }
    let env = kernel.combined_envelope(&q.times, &q.thetas);
    let sides = kernel.sides();
    // φ(x) ≤ ½ m₂ x², so the tail of ψ is at most ½ m₂ ∫ envelope²
    let quad = S::c(0.5) * model.second_moment();
    let radius = (env.radius_for(S::c(2.0), cfg.abs_tol / quad, sides) * cfg.truncation_safety)
        .max(env.from);
    let integrand = |u: S| {
        let mut x = S::zero();
        for (&t, &th) in q.times.iter().zip(&q.thetas) {
            x = x + th * kernel.eval(t, u);
        }
        model.phi(x)
    };
    let mut est = kernel.integrate_over_support(integrand, &q.times, radius, cfg)?;
    est.err_estimate = est.err_estimate + quad * env.tail_mass(S::c(2.0), radius, sides);
    Ok(est)
}

/// `Cov(S_s, S_t) = E(L_1^2) ∫ f(s,u) f(t,u) du`.
pub fn gflp_covariance<S: Real>(
    model: &LevyModel<S>,
    kernel: &Kernel<S>,
    s: S,
    t: S,
    cfg: &QuadratureConfig<S>,
) -> Result<Estimate<S>> {
    cfg.validate()?;
    let m2 = model.second_moment();
    let ip = kernel.inner_product(s, t, cfg)?;
    Ok(Estimate {
        value: m2 * ip.value,
        err_estimate: m2 * ip.err_estimate,
    })
}

#[derive(Debug, Clone)]
pub struct GflpOracle<S> {
    pub model: LevyModel<S>,
    pub kernel: Kernel<S>,
    pub cfg: QuadratureConfig<S>,
}

impl<S: Real> ExponentOracle<S> for GflpOracle<S> {
    fn exponent(&self, q: &ExponentQuery<S>) -> Result<Estimate<S>> {
        self.check_query(q)?;
        gflp_exponent(&self.model, &self.kernel, q, &self.cfg)
    }
    fn time_domain(&self) -> TimeDomain {
        match self.kernel.kind() {
            crate::kernels::KernelKind::SubFractional { .. }
            | crate::kernels::KernelKind::Sghir { .. } => TimeDomain::NonNegative,
            _ => TimeDomain::WholeLine,
        }
    }
    fn describe(&self) -> String {
        format!("gflp({}, {:?})", self.kernel.name(), self.model.family)
    }
}

// ------------------------------------------------------ stable integral

/// `ψ = ∫ |σ Σ_j θ_j f(t_j, u)|^α du` for a symmetric `α`-stable random measure.
pub fn stable_exponent<S: Real>(
    kernel: &Kernel<S>,
    stable_index: S,
    sigma: S,
    q: &ExponentQuery<S>,
    cfg: &QuadratureConfig<S>,
) -> Result<Estimate<S>> {
    q.validate()?;
    cfg.validate()?;
    if !(stable_index > S::zero() && stable_index <= S::c(2.0)) || !(sigma > S::zero()) {
        return Err(Error::InvalidParameter(format!(
            "stable exponent needs index in (0,2] and sigma > 0, got {:?}, {:?}",
            stable_index, sigma
        )));
    }
    if q.is_zero() {
        return Ok(Estimate::exact(S::zero()));
    }
    let mut env = kernel.combined_envelope(&q.times, &q.thetas);
    env.coef = env.coef * sigma;
    if !(stable_index * env.power > S::one()) {
        return Err(Error::Divergence(format!(
            "|f|^{} decays like |u|^-{} at infinity",
            stable_index.as_f64(),
            (stable_index * env.power).as_f64()
        )));
    }
    let sides = kernel.sides();
    let radius =
        (env.radius_for(stable_index, cfg.abs_tol, sides) * cfg.truncation_safety).max(env.from);
    let integrand = |u: S| {
        let mut x = S::zero();
        for (&t, &th) in q.times.iter().zip(&q.thetas) {
            x = x + th * kernel.eval(t, u);
        }
        (sigma * x).abs().powf(stable_index)
    };
    let mut est = kernel.integrate_over_support(integrand, &q.times, radius, cfg)?;
    est.err_estimate = est.err_estimate + env.tail_mass(stable_index, radius, sides);
    Ok(est)
}

#[derive(Debug, Clone)]
pub struct StableIntegralOracle<S> {
    pub kernel: Kernel<S>,
    pub stable_index: S,
    pub sigma: S,
    pub cfg: QuadratureConfig<S>,
}

impl<S: Real> ExponentOracle<S> for StableIntegralOracle<S> {
    fn exponent(&self, q: &ExponentQuery<S>) -> Result<Estimate<S>> {
        self.check_query(q)?;
        stable_exponent(&self.kernel, self.stable_index, self.sigma, q, &self.cfg)
    }
    fn time_domain(&self) -> TimeDomain {
        TimeDomain::WholeLine
    }
    fn describe(&self) -> String {
        format!(
            "stable_integral({}, index {})",
            self.kernel.name(),
            self.stable_index.as_f64()
        )
    }
}

// ------------------------------------------------------------------ Z_β

/// `∫_ℝ (Σ_j θ_j (f(x, t_j - s) - f(x, -s)))² ds` by quadrature.
///
/// For `s < 0` the bracket equals `e^{xs} Σ_j θ_j f(x, t_j)` exactly; the
/// direct difference would subtract two numbers close to `1/x`.
///
/// The integrand vanishes for `s ≥ max t_j`. On `s < 0` it decays like
/// `e^{2xs}`; the lower limit is pushed out by doubling until the last
/// piece no longer matters.
fn zbeta_inner<S: Real>(
    x: S,
    q: &ExponentQuery<S>,
    cfg: &QuadratureConfig<S>,
) -> Result<Estimate<S>> {
    // on s < 0 every term carries the same factor e^{xs}; summing the
    // coefficients once keeps any cancellation among them constant in s
    let a_neg = q
        .times
        .iter()
        .zip(&q.thetas)
        .fold(S::zero(), |acc, (&t, &th)| acc + th * zbeta_aux(x, t));
    let g = |s: S| {
        let v = if s < S::zero() {
            (x * s).exp() * a_neg
        } else {
            q.times
                .iter()
                .zip(&q.thetas)
                .fold(S::zero(), |acc, (&t, &th)| acc + th * zbeta_aux(x, t - s))
        };
        v * v
    };
    let t_max = q.max_time();
    let mut total = Estimate::exact(S::zero());
    if t_max > S::zero() {
        let mut pts: Vec<S> = q
            .times
            .iter()
            .copied()
            .filter(|&t| t > S::zero() && t < t_max)
            .collect();
        // below each t_j the integrand drops over a layer of width 1/x that
        // a single Gauss-Kronrod panel can step over when x is large
        for &t in &q.times {
            for c in [1.0, 8.0, 64.0] {
                let b = t - S::c(c) / x;
                if b > S::zero() {
                    pts.push(b);
                }
            }
        }
        pts.push(S::zero());
        pts.push(t_max);
        let pts = merge_breakpoints(&pts);
        let segs: Vec<Segment<S>> = pts
            .windows(2)
            .map(|w| Segment::Finite(w[0], w[1]))
            .collect();
        total = integrate_segments(g, &segs, cfg, "zbeta inner")?;
    }
    let mut lo = x.recip();
    let first = integrate_segments(g, &[Segment::Finite(-lo, S::zero())], cfg, "zbeta inner")?;
    total.value = total.value + first.value;
    total.err_estimate = total.err_estimate + first.err_estimate;
    for _ in 0..200 {
        let piece = integrate_segments(g, &[Segment::Finite(-(lo + lo), -lo)], cfg, "zbeta inner")?;
        total.value = total.value + piece.value;
        total.err_estimate = total.err_estimate + piece.err_estimate;
        lo = lo + lo;
        if piece.value.abs() <= cfg.rel_tol * total.value.abs() * S::c(1e-2)
            || piece.value == S::zero()
        {
            // geometric decay: the remainder is below the last piece
            total.err_estimate = total.err_estimate + piece.value.abs();
            return Ok(total);
        }
    }
    Err(Error::NonConvergence {
        layer: "zbeta inner lower limit",
        value: total.value.as_f64(),
        err_estimate: total.err_estimate.as_f64(),
    })
}

/// `ψ = -C ∫_0^∞ (exp{-½ I(x)} - 1) x^β dx` with `I` from [`zbeta_inner`],
/// integrated in `y = ln x`.
pub fn zbeta_exponent<S: Real>(
    beta: S,
    c: S,
    q: &ExponentQuery<S>,
    cfg: &QuadratureConfig<S>,
) -> Result<Estimate<S>> {
    q.validate()?;
    cfg.validate()?;
    if !(beta > -S::one() && beta < S::one()) {
        return Err(Error::InvalidParameter(format!(
            "beta must lie in (-1, 1), got {beta:?}"
        )));
    }
    if !(c > S::zero()) {
        return Err(Error::InvalidParameter(
            "Z_beta constant C must be positive".into(),
        ));
    }
    if q.times.iter().any(|&t| t < S::zero()) {
        return Err(Error::InvalidQuery("Z_beta lives on t >= 0".into()));
    }
    if q.is_zero() {
        return Ok(Estimate::exact(S::zero()));
    }
    let one = S::one();
    let half = S::c(0.5);
    let b1 = beta + one;
    let budget = cfg.abs_tol / (S::c(4.0) * c);
    // near 0 the integrand is at most x^{β+1} in y
    let y_lo = (b1 * budget).ln() / b1;
    // for x ≥ 1: I(x) ≤ Θ²(t_max + ½)/x², integrand ≤ ½ I x^β
    let theta = q.theta_l1();
    let amp = half * theta * theta * (q.max_time() + half);
    let x_hi = (amp / ((one - beta) * budget))
        .powf((one - beta).recip())
        .max(one);
    let y_hi = x_hi.ln().max(one);

    let inner_cfg = QuadratureConfig {
        rel_tol: cfg.rel_tol * S::c(1e-2),
        abs_tol: S::min_positive_value().sqrt(),
        ..*cfg
    };
    let failure = std::cell::RefCell::new(None);
    let outer = |y: S| {
        let x = y.exp();
        match zbeta_inner(x, q, &inner_cfg) {
            Ok(inner) => -(-half * inner.value).exp_m1() * (b1 * y).exp(),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                S::zero()
            }
        }
    };
    let est = integrate_segments(
        outer,
        &[
            Segment::Finite(y_lo, S::zero()),
            Segment::Finite(S::zero(), y_hi),
        ],
        cfg,
        "zbeta outer",
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let est = est?;
    let value = c * est.value;
    let tails = c * ((b1 * y_lo).exp() / b1 + amp * x_hi.powf(beta - one) / (one - beta));
    Ok(Estimate {
        value,
        err_estimate: c * est.err_estimate + tails + inner_cfg.rel_tol * value.abs(),
    })
}

#[derive(Debug, Clone)]
pub struct ZbetaOracle<S> {
    pub beta: S,
    pub c: S,
    pub cfg: QuadratureConfig<S>,
}

impl<S: Real> ExponentOracle<S> for ZbetaOracle<S> {
    fn exponent(&self, q: &ExponentQuery<S>) -> Result<Estimate<S>> {
        self.check_query(q)?;
        zbeta_exponent(self.beta, self.c, q, &self.cfg)
    }
    fn time_domain(&self) -> TimeDomain {
        TimeDomain::NonNegative
    }
    fn describe(&self) -> String {
        format!("zbeta(beta {})", self.beta.as_f64())
    }
}

// ------------------------------------------------------ closed forms

/// Standard Wiener process: `ψ = ½ Σ_{j,l} min(t_j, t_l) θ_j θ_l`.
pub fn wiener_exponent<S: Real>(q: &ExponentQuery<S>) -> Result<S> {
    q.validate()?;
    if q.times.iter().any(|&t| t < S::zero()) {
        return Err(Error::InvalidQuery("Wiener process lives on t >= 0".into()));
    }
    let mut acc = S::zero();
    for (&tj, &aj) in q.times.iter().zip(&q.thetas) {
        for (&tl, &al) in q.times.iter().zip(&q.thetas) {
            acc = acc + tj.min(tl) * aj * al;
        }
    }
    Ok(S::c(0.5) * acc)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WienerOracle;

impl<S: Real> ExponentOracle<S> for WienerOracle {
    fn exponent(&self, q: &ExponentQuery<S>) -> Result<Estimate<S>> {
        self.check_query(q)?;
        wiener_exponent(q).map(Estimate::exact)
    }
    fn time_domain(&self) -> TimeDomain {
        TimeDomain::NonNegative
    }
    fn describe(&self) -> String {
        "wiener".into()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LevyOracle<S> {
    pub model: LevyModel<S>,
}

impl<S: Real> ExponentOracle<S> for LevyOracle<S> {
    fn exponent(&self, q: &ExponentQuery<S>) -> Result<Estimate<S>> {
        self.check_query(q)?;
        self.model
            .multi_exponent(&q.times, &q.thetas)
            .map(Estimate::exact)
    }
    fn time_domain(&self) -> TimeDomain {
        TimeDomain::AscendingPositive
    }
    fn describe(&self) -> String {
        format!("levy({:?})", self.model.family)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StableLevyOracle<S> {
    pub process: StableLevy<S>,
}

impl<S: Real> ExponentOracle<S> for StableLevyOracle<S> {
    fn exponent(&self, q: &ExponentQuery<S>) -> Result<Estimate<S>> {
        self.check_query(q)?;
        self.process
            .multi_exponent(&q.times, &q.thetas)
            .map(Estimate::exact)
    }
    fn time_domain(&self) -> TimeDomain {
        TimeDomain::AscendingPositive
    }
    fn describe(&self) -> String {
        format!("stable_levy(H {})", self.process.hurst.as_f64())
    }
}
