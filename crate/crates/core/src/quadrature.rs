//! Globally adaptive Gauss–Kronrod quadrature.
//!
//! Panels from every segment share one error budget: the panel with the
//! largest error estimate is bisected until the summed estimate drops below
//! `max(abs_tol, rel_tol * |value|)`. Long tails are integrated on a
//! logarithmic scale (`u = ±e^y`) so that power-law decay out to very large
//! truncation radii costs a handful of panels.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig<S> {
    pub rel_tol: S,
    pub abs_tol: S,
    pub max_subdivisions: usize,
    /// Multiplier applied to analytic tail-radius estimates.
    pub truncation_safety: S,
}

impl<S: Real> Default for QuadratureConfig<S> {
    fn default() -> Self {
        Self {
            rel_tol: S::c(1e-8),
            abs_tol: S::c(1e-12),
            max_subdivisions: 10_000,
            truncation_safety: S::c(10.0),
        }
    }
}

impl<S: Real> QuadratureConfig<S> {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: S| x > S::zero() && x.is_finite();
        if !pos(self.rel_tol) || self.rel_tol >= S::one() {
            return invalid(format!("rel_tol must lie in (0,1), got {:?}", self.rel_tol));
        }
        if !pos(self.abs_tol) {
            return invalid(format!("abs_tol must be positive, got {:?}", self.abs_tol));
        }
        if self.max_subdivisions == 0 {
            return invalid("max_subdivisions must be positive");
        }
        if !pos(self.truncation_safety) {
            return invalid("truncation_safety must be positive");
        }
        Ok(())
    }

    /// Same config with both tolerances scaled by `factor`.
    pub fn scaled(&self, factor: S) -> Self {
        Self {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            ..*self
        }
    }
}

/// A value with its absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate<S> {
    pub value: S,
    pub err_estimate: S,
}

impl<S: Real> Estimate<S> {
    pub fn exact(value: S) -> Self {
        Self {
            value,
            err_estimate: S::zero(),
        }
    }
}

/// One piece of the integration domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment<S> {
    /// Plain interval `[a, b]`.
    Finite(S, S),
    /// `[from, to]` with `0 < from < to`, integrated in `y = ln u`.
    LogPositive(S, S),
    /// `[-to, -from]` with `0 < from < to`, integrated in `y = ln(-u)`.
    LogNegative(S, S),
}

impl<S: Real> Segment<S> {
    fn param_range(&self) -> (S, S) {
        match *self {
            Segment::Finite(a, b) => (a, b),
            Segment::LogPositive(from, to) | Segment::LogNegative(from, to) => (from.ln(), to.ln()),
        }
    }

    #[inline]
    fn eval<F: Fn(S) -> S>(&self, f: &F, y: S) -> S {
        match self {
            Segment::Finite(..) => f(y),
            Segment::LogPositive(..) => {
                let u = y.exp();
                f(u) * u
            }
            Segment::LogNegative(..) => {
                let u = y.exp();
                f(-u) * u
            }
        }
    }
}

#[allow(clippy::excessive_precision)]
const XGK21: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG10: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK21: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// 21-point Gauss–Kronrod rule on `[a, b]` with the QUADPACK error estimate.
pub fn gk21<S: Real, F: Fn(S) -> S>(f: F, a: S, b: S) -> (S, S) {
    let half = S::c(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let abs_half = half_len.abs();

    let fc = f(center);
    let mut res_k = fc * S::c(WGK21[10]);
    let mut res_g = S::zero();
    let mut res_abs = res_k.abs();
    let mut fv1 = [S::zero(); 10];
    let mut fv2 = [S::zero(); 10];
    for j in 0..10 {
        let x = half_len * S::c(XGK21[j]);
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        let w = S::c(WGK21[j]);
        res_k = res_k + w * (f1 + f2);
        res_abs = res_abs + w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g = res_g + S::c(WG10[j / 2]) * (f1 + f2);
        }
    }
    let mean = res_k * half;
    let mut res_asc = S::c(WGK21[10]) * (fc - mean).abs();
    for j in 0..10 {
        res_asc = res_asc + S::c(WGK21[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let result = res_k * half_len;
    res_abs = res_abs * abs_half;
    res_asc = res_asc * abs_half;
    let mut err = ((res_k - res_g) * half_len).abs();
    if res_asc != S::zero() && err != S::zero() {
        let scale = (S::c(200.0) * err / res_asc).powf(S::c(1.5));
        err = if scale < S::one() {
            res_asc * scale
        } else {
            res_asc
        };
    }
    let eps = S::epsilon();
    if res_abs > S::min_positive_value() / (S::c(50.0) * eps) {
        err = err.max(S::c(50.0) * eps * res_abs);
    }
    (result, err)
}

#[derive(Debug, Clone, Copy)]
struct Panel<S> {
    seg: usize,
    a: S,
    b: S,
    value: S,
    err: S,
}

impl<S: Real> PartialEq for Panel<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<S: Real> Eq for Panel<S> {}
impl<S: Real> PartialOrd for Panel<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Real> Ord for Panel<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .partial_cmp(&other.err)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.seg.cmp(&self.seg))
            .then_with(|| other.a.partial_cmp(&self.a).unwrap_or(Ordering::Equal))
    }
}

/// Fixed-order pairwise summation.
pub fn pairwise_sum<S: Real>(xs: &[S]) -> S {
    match xs.len() {
        0 => S::zero(),
        1 => xs[0],
        n if n <= 8 => xs.iter().fold(S::zero(), |acc, &x| acc + x),
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

/// Integrate `f` over the union of `segments` with a shared error budget.
pub fn integrate_segments<S: Real, F: Fn(S) -> S>(
    f: F,
    segments: &[Segment<S>],
    cfg: &QuadratureConfig<S>,
    layer: &'static str,
) -> Result<Estimate<S>> {
    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Panel<S>> = Vec::new();
    for (i, seg) in segments.iter().enumerate() {
        let (a, b) = seg.param_range();
        if !(b > a) {
            continue;
        }
        let (value, err) = gk21(|y| seg.eval(&f, y), a, b);
        heap.push(Panel {
            seg: i,
            a,
            b,
            value,
            err,
        });
    }
    let mut count = heap.len();

    let mut run_value = heap
        .iter()
        .fold(S::zero(), |acc, p: &Panel<S>| acc + p.value);
    let mut run_err = heap.iter().fold(S::zero(), |acc, p: &Panel<S>| acc + p.err);

    loop {
        if count % 64 == 0 {
            run_value = S::zero();
            run_err = S::zero();
            for p in heap.iter().chain(frozen.iter()) {
                run_value = run_value + p.value;
                run_err = run_err + p.err;
            }
        }
        let (value, err) = (run_value, run_err.max(S::zero()));
        if !value.is_finite() || !err.is_finite() {
            return Err(Error::NonConvergence {
                layer,
                value: value.as_f64(),
                err_estimate: err.as_f64(),
            });
        }
        let target = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if err <= target {
            break;
        }
        let Some(worst) = heap.pop() else {
            // every panel is at the resolution floor
            return Err(Error::NonConvergence {
                layer,
                value: value.as_f64(),
                err_estimate: err.as_f64(),
            });
        };
        if count >= cfg.max_subdivisions {
            heap.push(worst);
            return Err(Error::NonConvergence {
                layer,
                value: value.as_f64(),
                err_estimate: err.as_f64(),
            });
        }
        let mid = S::c(0.5) * (worst.a + worst.b);
        let width_floor = S::c(64.0)
            * S::epsilon()
            * worst
                .a
                .abs()
                .max(worst.b.abs())
                .max(S::min_positive_value());
        if worst.b - worst.a <= width_floor || mid <= worst.a || mid >= worst.b {
            frozen.push(worst);
            continue;
        }
        let seg = &segments[worst.seg];
        let (v1, e1) = gk21(|y| seg.eval(&f, y), worst.a, mid);
        let (v2, e2) = gk21(|y| seg.eval(&f, y), mid, worst.b);
        run_value = run_value - worst.value + v1 + v2;
        run_err = run_err - worst.err + e1 + e2;
        heap.push(Panel {
            seg: worst.seg,
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Panel {
            seg: worst.seg,
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
        });
        count += 1;
    }

    let mut panels: Vec<Panel<S>> = heap.into_vec();
    panels.extend(frozen);
    panels.sort_by(|p, q| {
        p.seg
            .cmp(&q.seg)
            .then(p.a.partial_cmp(&q.a).unwrap_or(Ordering::Equal))
    });
    let values: Vec<S> = panels.iter().map(|p| p.value).collect();
    let errs: Vec<S> = panels.iter().map(|p| p.err).collect();
    Ok(Estimate {
        value: pairwise_sum(&values),
        err_estimate: pairwise_sum(&errs),
    })
}

/// Sorted, deduplicated copy of `points` (finite values only).
pub fn merge_breakpoints<S: Real>(points: &[S]) -> Vec<S> {
    let mut v: Vec<S> = points.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v.dedup_by(|a, b| *a == *b);
    v
}

fn core_radius<S: Real>(breakpoints: &[S], radius: S) -> S {
    let reach = breakpoints.iter().fold(S::zero(), |m, &b| m.max(b.abs()));
    (S::c(2.0) * reach).max(S::one()).min(radius)
}

/// Split `[lo, hi]` at the interior breakpoints.
fn finite_pieces<S: Real>(lo: S, hi: S, breakpoints: &[S], out: &mut Vec<Segment<S>>) {
    let mut left = lo;
    for &b in breakpoints {
        if b > left && b < hi {
            out.push(Segment::Finite(left, b));
            left = b;
        }
    }
    if hi > left {
        out.push(Segment::Finite(left, hi));
    }
}

/// Integrate `f` over `[-radius, radius]`, split at `breakpoints`.
///
/// The caller picks `radius` from its tail bound so that the mass outside is
/// below its tolerance; beyond twice the largest breakpoint the two tails are
/// handled on a log scale.
pub fn integrate_adaptive<S: Real, F: Fn(S) -> S>(
    f: F,
    breakpoints: &[S],
    radius: S,
    cfg: &QuadratureConfig<S>,
) -> Result<Estimate<S>> {
    cfg.validate()?;
    if !(radius > S::zero()) {
        return invalid("integration radius must be positive");
    }
    let bps = merge_breakpoints(breakpoints);
    let c = core_radius(&bps, radius);
    let mut segs = Vec::new();
    if radius > c {
        segs.push(Segment::LogNegative(c, radius));
    }
    finite_pieces(-c, c, &bps, &mut segs);
    if radius > c {
        segs.push(Segment::LogPositive(c, radius));
    }
    integrate_segments(f, &segs, cfg, "kernel")
}

/// Integrate `f` over `[0, radius]`, split at `breakpoints`.
pub fn integrate_halfline<S: Real, F: Fn(S) -> S>(
    f: F,
    breakpoints: &[S],
    radius: S,
    cfg: &QuadratureConfig<S>,
) -> Result<Estimate<S>> {
    cfg.validate()?;
    if !(radius > S::zero()) {
        return invalid("integration radius must be positive");
    }
    let bps = merge_breakpoints(breakpoints);
    let c = core_radius(&bps, radius);
    let mut segs = Vec::new();
    finite_pieces(S::zero(), c, &bps, &mut segs);
    if radius > c {
        segs.push(Segment::LogPositive(c, radius));
    }
    integrate_segments(f, &segs, cfg, "kernel")
}
