//! Catalog of moving-average kernels `f(t, u)` for generalized fractional
//! Lévy processes `S_t = ∫ f(t,u) L(du)`.
//!
//! Every kernel is total: at the case-boundary points (`u = t`, `u = 0`,
//! non-positive arguments for half-line kernels) the value is defined as 0.
//! Far-tail evaluations avoid cancellation so that quadrature out to very
//! large radii stays accurate.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::laws::ScalingLaw;
use crate::quadrature::{integrate_adaptive, integrate_halfline, Estimate, QuadratureConfig};
use crate::rng::substream;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    WholeLine,
    PositiveHalfline,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind<S> {
    FractionalMa {
        hurst: S,
    },
    SubFractional {
        hurst: S,
    },
    LogFractional,
    Sghir {
        k: S,
    },
    WellBalanced {
        hurst: S,
        stable_index: S,
    },
    /// `𝟙(0 < u ≤ t)`: turns the integral back into the driver itself.
    Indicator,
}

/// Power-law bound `|f(t,u)| ≤ coef · |u|^{-power}` for `|u| ≥ from`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEnvelope<S> {
    pub coef: S,
    pub power: S,
    pub from: S,
}

impl<S: Real> TailEnvelope<S> {
    /// `∫_{|u|>r} (coef |u|^{-power})^q du` over the kernel's support sides.
    pub fn tail_mass(&self, q: S, r: S, sides: S) -> S {
        let e = q * self.power - S::one();
        if self.coef == S::zero() {
            return S::zero();
        }
        sides * self.coef.powf(q) * r.powf(-e) / e
    }

    /// Smallest `r ≥ from` with `tail_mass(q, r) ≤ budget`.
    pub fn radius_for(&self, q: S, budget: S, sides: S) -> S {
        let e = q * self.power - S::one();
        if self.coef == S::zero() || !(e > S::zero()) {
            return self.from;
        }
        // sides·coef^q·r^{-e}/e = budget
        let r = ((sides * self.coef.powf(q)) / (e * budget)).powf(e.recip());
        r.max(self.from).min(S::c(1e150))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel<S> {
    kind: KernelKind<S>,
    /// Normalizing constant multiplying the bracketed expression.
    norm: S,
}

/// `√(Γ(2H+1) sin(πH)) / Γ(H+½)`: the moving-average constant giving
/// `Var(B_1^{(H)}) = 1` for a unit-variance driver.
pub fn fbm_constant(hurst: f64) -> f64 {
    (libm::tgamma(2.0 * hurst + 1.0) * (std::f64::consts::PI * hurst).sin()).sqrt()
        / libm::tgamma(hurst + 0.5)
}

/// `(1 + x)^h + (1 - x)^h - 2`, accurate for tiny `x`.
fn second_difference<S: Real>(h: S, x: S) -> S {
    if x.abs() < S::c(1e-2) {
        // 2 Σ_{k even} C(h,k) x^k
        let x2 = x * x;
        let mut coef = h * (h - S::one()) / S::c(2.0);
        let mut term = coef * x2;
        let mut sum = term;
        for k in (4..=10).step_by(2) {
            let kk = S::c(k as f64);
            coef = coef * (h - kk + S::c(2.0)) * (h - kk + S::one()) / ((kk - S::one()) * kk);
            term = coef * x2.powi(k / 2);
            sum = sum + term;
        }
        S::c(2.0) * sum
    } else {
        x.pow1p_m1(h) + (-x).pow1p_m1(h)
    }
}

/// `(t-u)_+^h - (-u)_+^h`, zero at `u ∈ {t, 0}`.
fn truncated_power_difference<S: Real>(h: S, t: S, u: S) -> S {
    if u == t || u == S::zero() {
        return S::zero();
    }
    raw_power_difference(h, t, u)
}

/// `(t-u)_+^h - (-u)_+^h` with the tail written as `(-u)^h((1+t/(-u))^h - 1)`.
fn raw_power_difference<S: Real>(h: S, t: S, u: S) -> S {
    let a = t - u;
    let b = -u;
    match (a > S::zero(), b > S::zero()) {
        (true, true) => b.powf(h) * (t / b).pow1p_m1(h),
        (true, false) => a.powf(h),
        (false, true) => -b.powf(h),
        (false, false) => S::zero(),
    }
}

impl<S: Real> Kernel<S> {
    fn checked_hurst(hurst: S, name: &str) -> Result<()> {
        if !(hurst > S::c(0.5) && hurst < S::one()) {
            return invalid(format!("{name} needs H in (1/2, 1), got {hurst:?}"));
        }
        Ok(())
    }

    pub fn fractional_ma(hurst: S) -> Result<Self> {
        Self::checked_hurst(hurst, "fractional_ma")?;
        Ok(Self {
            kind: KernelKind::FractionalMa { hurst },
            norm: S::c(fbm_constant(hurst.as_f64())),
        })
    }

    pub fn sub_fractional(hurst: S) -> Result<Self> {
        Self::checked_hurst(hurst, "sub_fractional")?;
        Ok(Self {
            kind: KernelKind::SubFractional { hurst },
            norm: S::c(fbm_constant(hurst.as_f64()) / std::f64::consts::SQRT_2),
        })
    }

    pub fn log_fractional() -> Self {
        Self {
            kind: KernelKind::LogFractional,
            norm: S::one(),
        }
    }

    pub fn sghir(k: S) -> Result<Self> {
        if !(k > S::zero() && k < S::c(2.0)) {
            return invalid(format!("sghir needs K in (0, 2), got {k:?}"));
        }
        Ok(Self {
            kind: KernelKind::Sghir { k },
            norm: S::one(),
        })
    }

    pub fn well_balanced(hurst: S, stable_index: S) -> Result<Self> {
        if !(hurst > S::zero() && hurst < S::one()) {
            return invalid(format!("well_balanced needs H in (0, 1), got {hurst:?}"));
        }
        if !(stable_index > S::zero() && stable_index <= S::c(2.0)) {
            return invalid(format!(
                "stable index must lie in (0, 2], got {stable_index:?}"
            ));
        }
        if (hurst - stable_index.recip()).abs() <= S::epsilon() {
            return invalid("well_balanced needs H != 1/stable_index");
        }
        Ok(Self {
            kind: KernelKind::WellBalanced {
                hurst,
                stable_index,
            },
            norm: S::one(),
        })
    }

    pub fn indicator() -> Self {
        Self {
            kind: KernelKind::Indicator,
            norm: S::one(),
        }
    }

    pub fn kind(&self) -> KernelKind<S> {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            KernelKind::FractionalMa { .. } => "fractional_ma",
            KernelKind::SubFractional { .. } => "sub_fractional",
            KernelKind::LogFractional => "log_fractional",
            KernelKind::Sghir { .. } => "sghir",
            KernelKind::WellBalanced { .. } => "well_balanced",
            KernelKind::Indicator => "indicator",
        }
    }

    pub fn params(&self) -> BTreeMap<String, S> {
        let mut m = BTreeMap::new();
        match self.kind {
            KernelKind::FractionalMa { hurst } | KernelKind::SubFractional { hurst } => {
                m.insert("H".into(), hurst);
            }
            KernelKind::Sghir { k } => {
                m.insert("K".into(), k);
            }
            KernelKind::WellBalanced {
                hurst,
                stable_index,
            } => {
                m.insert("H".into(), hurst);
                m.insert("stable_index".into(), stable_index);
            }
            KernelKind::LogFractional | KernelKind::Indicator => {}
        }
        m
    }

    pub fn claimed_law(&self) -> Option<ScalingLaw<S>> {
        match self.kind {
            KernelKind::FractionalMa { hurst } | KernelKind::SubFractional { hurst } => {
                Some(ScalingLaw::new(hurst, S::one()))
            }
            KernelKind::LogFractional | KernelKind::Indicator => {
                Some(ScalingLaw::new(S::c(0.5), S::one()))
            }
            KernelKind::Sghir { k } => Some(ScalingLaw::new(k / S::c(2.0), -S::one())),
            KernelKind::WellBalanced { .. } => None,
        }
    }

    pub fn support(&self) -> Support {
        match self.kind {
            KernelKind::Sghir { .. } => Support::PositiveHalfline,
            _ => Support::WholeLine,
        }
    }

    /// Points in `u` where `f(t_j, ·)` is non-smooth for some `j`.
    pub fn breakpoints(&self, times: &[S]) -> Vec<S> {
        let mut pts = vec![S::zero()];
        match self.kind {
            KernelKind::Sghir { .. } => {}
            KernelKind::SubFractional { .. } => {
                for &t in times {
                    pts.push(t);
                    pts.push(-t);
                }
            }
            _ => pts.extend_from_slice(times),
        }
        pts
    }

    pub fn eval(&self, t: S, u: S) -> S {
        match self.kind {
            KernelKind::FractionalMa { hurst } => {
                self.norm * truncated_power_difference(hurst - S::c(0.5), t, u)
            }
            KernelKind::SubFractional { hurst } => {
                let h = hurst - S::c(0.5);
                let ta = t.abs();
                if -u > ta {
                    // both truncated powers alive on each side
                    let b = -u;
                    self.norm * b.powf(h) * second_difference(h, ta / b)
                } else {
                    self.norm * (raw_power_difference(h, t, u) + raw_power_difference(h, -t, u))
                }
            }
            KernelKind::LogFractional => {
                if u == t || u == S::zero() {
                    return S::zero();
                }
                let x = t / u;
                if x.abs() < S::c(0.5) {
                    (-x).ln_1p()
                } else {
                    (t - u).abs().ln() - u.abs().ln()
                }
            }
            KernelKind::Sghir { k } => {
                if t <= S::zero() || u <= S::zero() {
                    return S::zero();
                }
                -(-(u * t)).exp_m1() * u.powf(-(k + S::one()) / S::c(2.0))
            }
            KernelKind::WellBalanced {
                hurst,
                stable_index,
            } => {
                if u == t || u == S::zero() {
                    return S::zero();
                }
                let e = hurst - stable_index.recip();
                let x = t / u;
                if x.abs() < S::c(0.5) {
                    u.abs().powf(e) * (-x).pow1p_m1(e)
                } else {
                    (t - u).abs().powf(e) - u.abs().powf(e)
                }
            }
            KernelKind::Indicator => {
                if u > S::zero() && u <= t {
                    S::one()
                } else {
                    S::zero()
                }
            }
        }
    }

    /// Power-law bound on `|f(t, u)|` for large `|u|`.
    pub fn tail_envelope(&self, t: S) -> TailEnvelope<S> {
        let two = S::c(2.0);
        let ta = t.abs();
        let from = (two * ta).max(S::one());
        match self.kind {
            KernelKind::FractionalMa { hurst } => {
                let h = hurst - S::c(0.5);
                TailEnvelope {
                    coef: self.norm * h * ta * two.powf(S::one() - h),
                    power: S::one() - h,
                    from,
                }
            }
            KernelKind::SubFractional { hurst } => {
                let h = hurst - S::c(0.5);
                TailEnvelope {
                    coef: self.norm * h * (S::one() - h) * ta * ta * two.powf(two - h),
                    power: two - h,
                    from,
                }
            }
            KernelKind::LogFractional => TailEnvelope {
                coef: two * ta,
                power: S::one(),
                from,
            },
            KernelKind::Sghir { k } => TailEnvelope {
                coef: if t > S::zero() { S::one() } else { S::zero() },
                power: (k + S::one()) / two,
                from: S::one(),
            },
            KernelKind::WellBalanced {
                hurst,
                stable_index,
            } => {
                let e = hurst - stable_index.recip();
                TailEnvelope {
                    coef: e.abs() * ta * two.powf(S::one() - e),
                    power: S::one() - e,
                    from,
                }
            }
            KernelKind::Indicator => TailEnvelope {
                coef: S::zero(),
                power: S::one(),
                from: ta.max(S::one()),
            },
        }
    }

    /// Envelope of `Σ_j w_j f(t_j, u)` for weights `w_j`.
    pub fn combined_envelope(&self, times: &[S], weights: &[S]) -> TailEnvelope<S> {
        let mut out = self.tail_envelope(S::zero());
        out.coef = S::zero();
        for (&t, &w) in times.iter().zip(weights) {
            let e = self.tail_envelope(t);
            out.coef = out.coef + w.abs() * e.coef;
            out.power = e.power;
            out.from = out.from.max(e.from);
        }
        out
    }

    pub(crate) fn sides(&self) -> S {
        match self.support() {
            Support::WholeLine => S::c(2.0),
            Support::PositiveHalfline => S::one(),
        }
    }

    /// Integrate `g` over the kernel's support up to `radius`.
    pub fn integrate_over_support<F: Fn(S) -> S>(
        &self,
        g: F,
        times: &[S],
        radius: S,
        cfg: &QuadratureConfig<S>,
    ) -> Result<Estimate<S>> {
        let bps = self.breakpoints(times);
        match self.support() {
            Support::WholeLine => integrate_adaptive(g, &bps, radius, cfg),
            Support::PositiveHalfline => integrate_halfline(g, &bps, radius, cfg),
        }
    }

    /// `∫ f(s,u) f(t,u) du`, truncated where the envelope tail drops below
    /// the absolute tolerance.
    pub fn inner_product(&self, s: S, t: S, cfg: &QuadratureConfig<S>) -> Result<Estimate<S>> {
        let es = self.tail_envelope(s);
        let et = self.tail_envelope(t);
        if es.coef == S::zero()
            && et.coef == S::zero()
            && !matches!(self.kind, KernelKind::Indicator)
        {
            return Ok(Estimate::exact(S::zero()));
        }
        let env = TailEnvelope {
            coef: (es.coef * et.coef).sqrt(),
            power: es.power,
            from: es.from.max(et.from),
        };
        let sides = self.sides();
        let radius = env.radius_for(S::c(2.0), cfg.abs_tol, sides) * cfg.truncation_safety;
        let radius = radius.max(env.from);
        let mut est = self.integrate_over_support(
            |u| self.eval(s, u) * self.eval(t, u),
            &[s, t],
            radius,
            cfg,
        )?;
        est.err_estimate = est.err_estimate + env.tail_mass(S::c(2.0), radius, sides);
        Ok(est)
    }

    /// `∫ f(t,u)^2 du`.
    pub fn l2_norm_sq(&self, t: S, cfg: &QuadratureConfig<S>) -> Result<Estimate<S>> {
        self.inner_product(t, t, cfg)
    }

    /// Upper bound on `∫_{|u|>r} f(t,u)^2 du` from the exact tail integral.
    pub fn tail_l2_sq(&self, t: S, radius: S, cfg: &QuadratureConfig<S>) -> Result<Estimate<S>> {
        let total = self.l2_norm_sq(t, cfg)?;
        let inner = match self.support() {
            Support::WholeLine => crate::quadrature::integrate_segments(
                |u| {
                    let v = self.eval(t, u);
                    v * v
                },
                &inner_segments(&self.breakpoints(&[t]), -radius, radius),
                cfg,
                "kernel",
            )?,
            Support::PositiveHalfline => crate::quadrature::integrate_segments(
                |u| {
                    let v = self.eval(t, u);
                    v * v
                },
                &inner_segments(&self.breakpoints(&[t]), S::zero(), radius),
                cfg,
                "kernel",
            )?,
        };
        Ok(Estimate {
            value: (total.value - inner.value).max(S::zero()),
            err_estimate: total.err_estimate + inner.err_estimate,
        })
    }
}

fn inner_segments<S: Real>(bps: &[S], lo: S, hi: S) -> Vec<crate::quadrature::Segment<S>> {
    let mut segs = Vec::new();
    let mut left = lo;
    for b in crate::quadrature::merge_breakpoints(bps) {
        if b > left && b < hi {
            segs.push(crate::quadrature::Segment::Finite(left, b));
            left = b;
        }
    }
    segs.push(crate::quadrature::Segment::Finite(left, hi));
    segs
}

/// `(1 - e^{-xt})/x` for `x, t > 0`, else 0.
pub fn zbeta_aux<S: Real>(x: S, t: S) -> S {
    if x > S::zero() && t > S::zero() {
        -(-(x * t)).exp_m1() / x
    } else {
        S::zero()
    }
}

/// Largest relative deviation of `f(t,u)` from `T^{α-δ/2} f(t/T, u/T^δ)`
/// over `n_samples` random triples.
///
/// `t` and `u` are standard normal (absolute values for half-line kernels,
/// and for `t` of `sub_fractional`, which lives on `t ≥ 0`); `T` is
/// log-uniform on `[0.1, 10]`.
pub fn check_kernel_scaling<S: Real>(
    kernel: &Kernel<S>,
    law: &ScalingLaw<S>,
    n_samples: usize,
    seed: u64,
) -> S {
    let mut rng = substream(seed, 0);
    let space = law.space_exponent();
    let eps = S::c(1e-300).max(S::min_positive_value());
    let half = matches!(kernel.support(), Support::PositiveHalfline);
    let nonneg_t = half || matches!(kernel.kind, KernelKind::SubFractional { .. });
    let mut worst = S::zero();
    for _ in 0..n_samples {
        let mut t: f64 = StandardNormal.sample(&mut rng);
        let mut u: f64 = StandardNormal.sample(&mut rng);
        let big_t = (rng.gen_range(0.1f64.ln()..10f64.ln())).exp();
        if nonneg_t {
            t = t.abs();
        }
        if half {
            u = u.abs();
        }
        let (t, u, big_t) = (S::c(t), S::c(u), S::c(big_t));
        let lhs = kernel.eval(t, u);
        let rhs = big_t.powf(space) * kernel.eval(t / big_t, u / big_t.powf(law.delta));
        let dev = (lhs - rhs).abs() / (lhs.abs() + eps);
        if dev > worst || dev.is_nan() {
            worst = dev;
        }
    }
    worst
}

/// Kernel configuration record: `{"name": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl KernelSpec {
    pub fn build(&self) -> Result<Kernel<f64>> {
        let get = |key: &str| {
            self.params.get(key).copied().ok_or_else(|| {
                crate::Error::InvalidParameter(format!(
                    "kernel {} needs parameter {key}",
                    self.name
                ))
            })
        };
        match self.name.as_str() {
            "fractional_ma" => Kernel::fractional_ma(get("H")?),
            "sub_fractional" => Kernel::sub_fractional(get("H")?),
            "log_fractional" => Ok(Kernel::log_fractional()),
            "sghir" => Kernel::sghir(get("K")?),
            "indicator" => Ok(Kernel::indicator()),
            "well_balanced" => {
                let idx = self
                    .params
                    .get("stable_index")
                    .or_else(|| self.params.get("alpha"))
                    .copied()
                    .ok_or_else(|| {
                        crate::Error::InvalidParameter("well_balanced needs stable_index".into())
                    })?;
                Kernel::well_balanced(get("H")?, idx)
            }
            other => invalid(format!("unknown kernel name {other:?}")),
        }
    }

    pub fn of(kernel: &Kernel<f64>) -> Self {
        Self {
            name: kernel.name().to_string(),
            params: kernel.params(),
        }
    }
}
