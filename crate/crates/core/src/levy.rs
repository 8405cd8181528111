//! Driving Lévy processes: centered, symmetric, finite-variance compound
//! Poisson families with closed-form exponents, plus the symmetric stable
//! Lévy exponent used as a closed-form oracle with a whole line of scaling
//! laws.

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::substream;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpFamily {
    /// Jumps of size `±a` with probability one half each.
    #[serde(rename = "two_point")]
    TwoPointSymmetric,
    /// Jump sizes with Laplace density `(b/2) e^{-b|x|}`.
    #[serde(rename = "laplace")]
    LaplaceJumps,
}

/// A two-sided compound Poisson process with symmetric jumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyModel<S> {
    pub family: JumpFamily,
    pub intensity: S,
    pub jump_param: S,
}

impl<S: Real> LevyModel<S> {
    pub fn new(family: JumpFamily, intensity: S, jump_param: S) -> Result<Self> {
        let m = Self {
            family,
            intensity,
            jump_param,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn two_point(intensity: S, jump: S) -> Result<Self> {
        Self::new(JumpFamily::TwoPointSymmetric, intensity, jump)
    }

    pub fn laplace(intensity: S, rate: S) -> Result<Self> {
        Self::new(JumpFamily::LaplaceJumps, intensity, rate)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: S| x > S::zero() && x.is_finite();
        if !ok(self.intensity) {
            return invalid(format!(
                "intensity must be positive, got {:?}",
                self.intensity
            ));
        }
        if !ok(self.jump_param) {
            return invalid(format!(
                "jump_param must be positive, got {:?}",
                self.jump_param
            ));
        }
        Ok(())
    }

    /// Characteristic exponent of `L_1`; real because the jump law is symmetric.
    pub fn phi(&self, theta: S) -> S {
        let lambda = self.intensity;
        match self.family {
            JumpFamily::TwoPointSymmetric => lambda * (self.jump_param * theta).one_minus_cos(),
            JumpFamily::LaplaceJumps => {
                let b2 = self.jump_param * self.jump_param;
                let t2 = theta * theta;
                lambda * t2 / (b2 + t2)
            }
        }
    }

    /// `E(L_1^2)`, the integral of `x^2` against the Lévy measure.
    pub fn second_moment(&self) -> S {
        match self.family {
            JumpFamily::TwoPointSymmetric => self.intensity * self.jump_param * self.jump_param,
            JumpFamily::LaplaceJumps => {
                S::c(2.0) * self.intensity / (self.jump_param * self.jump_param)
            }
        }
    }

    /// Exponent of `(L_{t_1}, ..., L_{t_k})` through independent increments.
    pub fn multi_exponent(&self, times: &[S], thetas: &[S]) -> Result<S> {
        increments_exponent(times, thetas, |th| self.phi(th))
    }
}

/// `Σ_j (t_j - t_{j-1}) φ(θ_j + ... + θ_k)` with `t_0 = 0`.
pub(crate) fn increments_exponent<S: Real>(
    times: &[S],
    thetas: &[S],
    phi: impl Fn(S) -> S,
) -> Result<S> {
    if times.len() != thetas.len() || times.is_empty() {
        return Err(Error::InvalidQuery(format!(
            "times ({}) and thetas ({}) must have equal nonzero length",
            times.len(),
            thetas.len()
        )));
    }
    let mut prev = S::zero();
    for &t in times {
        if !(t > prev) {
            return Err(Error::InvalidQuery(
                "Lévy exponent needs strictly ascending positive times".into(),
            ));
        }
        prev = t;
    }
    let mut tail = S::zero();
    let mut total = S::zero();
    for j in (0..times.len()).rev() {
        tail = tail + thetas[j];
        let before = if j == 0 { S::zero() } else { times[j - 1] };
        total = total + (times[j] - before) * phi(tail);
    }
    Ok(total)
}

/// Symmetric `1/H`-stable Lévy process, `ψ_t(θ) = c t |θ|^{1/H}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableLevy<S> {
    pub hurst: S,
    pub scale: S,
}

impl<S: Real> StableLevy<S> {
    pub fn new(hurst: S, scale: S) -> Result<Self> {
        if !(hurst >= S::c(0.5)) || !hurst.is_finite() {
            return invalid(format!("stable Lévy needs H >= 1/2, got {hurst:?}"));
        }
        if !(scale > S::zero()) {
            return invalid("stable Lévy scale must be positive");
        }
        Ok(Self { hurst, scale })
    }

    pub fn phi(&self, theta: S) -> S {
        self.scale * theta.abs().powf(self.hurst.recip())
    }

    pub fn multi_exponent(&self, times: &[S], thetas: &[S]) -> Result<S> {
        increments_exponent(times, thetas, |th| self.phi(th))
    }
}

/// A jump of the driver: location on the time axis and size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub position: f64,
    pub size: f64,
}

impl LevyModel<f64> {
    fn jump_size<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        match self.family {
            JumpFamily::TwoPointSymmetric => sign * self.jump_param,
            JumpFamily::LaplaceJumps => {
                let e = Exp::new(self.jump_param).expect("validated rate");
                sign * e.sample(rng)
            }
        }
    }

    /// Jumps of the driver on `[lo, hi]`: a Poisson count, then sorted
    /// uniform positions, then sizes, all drawn from `rng` in that order.
    pub fn sample_jumps_in<R: Rng + ?Sized>(
        &self,
        lo: f64,
        hi: f64,
        rng: &mut R,
    ) -> Result<Vec<Jump>> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return invalid(format!(
                "jump window [{lo}, {hi}] must be a nonempty finite interval"
            ));
        }
        let mean = self.intensity * (hi - lo);
        let count = if mean > 0.0 {
            let p = Poisson::new(mean).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            p.sample(rng) as usize
        } else {
            0
        };
        let mut positions: Vec<f64> = (0..count).map(|_| rng.gen_range(lo..hi)).collect();
        positions.sort_by(|a, b| a.total_cmp(b));
        Ok(positions
            .into_iter()
            .map(|position| Jump {
                position,
                size: self.jump_size(rng),
            })
            .collect())
    }

    /// Jumps on `[-radius, radius]` from the substream pinned by `seed`.
    pub fn sample_jumps(&self, radius: f64, seed: u64) -> Result<Vec<Jump>> {
        if !(radius > 0.0) {
            return invalid(format!("window radius must be positive, got {radius}"));
        }
        let mut rng = substream(seed, 0);
        self.sample_jumps_in(-radius, radius, &mut rng)
    }
}
