//! Scaling-law parameter records and the conversions between dilative
//! stability and aggregate similarity.
//!
//! Conversions are written over [`Field`] so they run exactly on rationals
//! as well as on floats.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::{Field, Real};

/// `(α, δ)`: `ψ_{Tt}(θ) = T^δ ψ_t(T^{α-δ/2} θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingLaw<S> {
    pub alpha: S,
    pub delta: S,
}

impl<S: Field> ScalingLaw<S> {
    pub fn new(alpha: S, delta: S) -> Self {
        Self { alpha, delta }
    }

    /// Self-similarity with index `alpha`.
    pub fn self_similar(alpha: S) -> Self {
        Self::new(alpha, S::zero())
    }

    /// The space-scaling exponent `α - δ/2`.
    pub fn space_exponent(&self) -> S {
        self.alpha - self.delta * S::half()
    }
}

impl<S: fmt::Display> fmt::Display for ScalingLaw<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})-dilative", self.alpha, self.delta)
    }
}

/// `(ρ₁, ρ₂)`: the sum of `m` copies equals `m^{ρ₁} X(m^{-ρ₂} ·)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateSimilarityLaw<S> {
    pub rho1: S,
    pub rho2: S,
}

impl<S: Field> AggregateSimilarityLaw<S> {
    pub fn new(rho1: S, rho2: S) -> Self {
        Self { rho1, rho2 }
    }

    /// Single rigidity index `ρ = ρ₁ = ρ₂`.
    pub fn rigidity(rho: S) -> Self {
        Self::new(rho, rho)
    }
}

/// Dilative stability to aggregate similarity: `(½ - α/δ, -1/δ)`.
pub fn ds_to_as<S: Field>(law: ScalingLaw<S>) -> Result<AggregateSimilarityLaw<S>> {
    if law.delta.is_zero() {
        return invalid(
            "delta = 0 is the purely self-similar case, which has no aggregate-similarity counterpart",
        );
    }
    let rho1 = S::half() - law.alpha / law.delta;
    let rho2 = -(S::one() / law.delta);
    Ok(AggregateSimilarityLaw { rho1, rho2 })
}

/// Aggregate similarity to dilative stability: `(ρ₁/ρ₂ - 1/(2ρ₂), -1/ρ₂)`.
///
/// Holds for infinitely divisible processes with weakly right-continuous
/// finite-dimensional laws; that hypothesis is not checked here.
pub fn as_to_ds<S: Field>(law: AggregateSimilarityLaw<S>) -> Result<ScalingLaw<S>> {
    if law.rho2.is_zero() {
        return invalid("rho2 = 0 has no dilative-stability counterpart");
    }
    let alpha = law.rho1 / law.rho2 - S::half() / law.rho2;
    let delta = -(S::one() / law.rho2);
    Ok(ScalingLaw { alpha, delta })
}

/// Membership test for the line of laws `δ + (α - δ/2)/H = 1` carried by a
/// symmetric `1/H`-stable Lévy process.
pub fn stable_family_laws<S: Real>(hurst: S) -> Result<impl Fn(&ScalingLaw<S>) -> bool> {
    if !(hurst >= S::c(0.5)) {
        return invalid(format!("stable family needs H >= 1/2, got {hurst:?}"));
    }
    Ok(move |law: &ScalingLaw<S>| {
        let lhs = law.delta + (law.alpha - law.delta * S::c(0.5)) / hurst;
        (lhs - S::one()).abs() <= S::c(1e-12)
    })
}

/// Either a power function `T^p` or an arbitrary positive function of `T`.
#[derive(Clone)]
pub enum ScaleFn<S> {
    Power(S),
    Custom {
        name: String,
        f: Arc<dyn Fn(S) -> S + Send + Sync>,
    },
}

impl<S: Real> ScaleFn<S> {
    pub fn custom(name: impl Into<String>, f: impl Fn(S) -> S + Send + Sync + 'static) -> Self {
        ScaleFn::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, t: S) -> S {
        match self {
            ScaleFn::Power(p) => t.powf(*p),
            ScaleFn::Custom { f, .. } => f(t),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ScaleFn::Power(p) => format!("T^{}", p.as_f64()),
            ScaleFn::Custom { name, .. } => name.clone(),
        }
    }
}

impl<S: fmt::Debug> fmt::Debug for ScaleFn<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleFn::Power(p) => write!(f, "T^{p:?}"),
            ScaleFn::Custom { name, .. } => f.write_str(name),
        }
    }
}

/// `(f, g)`: `ψ_{Tt}(θ) = g(T) ψ_t(f(T) θ)`.
#[derive(Debug, Clone)]
pub struct GeneralizedScalingLaw<S> {
    pub f_law: ScaleFn<S>,
    pub g_law: ScaleFn<S>,
}

impl<S: Real> GeneralizedScalingLaw<S> {
    pub fn new(f_law: ScaleFn<S>, g_law: ScaleFn<S>) -> Self {
        Self { f_law, g_law }
    }

    /// The power pair equivalent to an `(α, δ)` law.
    pub fn from_law(law: ScalingLaw<S>) -> Self {
        Self::new(
            ScaleFn::Power(law.space_exponent()),
            ScaleFn::Power(law.delta),
        )
    }
}
