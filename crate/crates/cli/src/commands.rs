//! `verify`, `simulate` and `estimate`.

use std::fmt::Write as _;
use std::path::Path;

use num_rational::Ratio;
use serde::Serialize;
use serde_json::{json, Value};

use dilastab::charexp::{gflp_covariance, ExponentOracle, GflpOracle};
use dilastab::laws::AggregateSimilarityLaw;
use dilastab::montecarlo::{
    cf_match_test, default_cf_queries, default_truncation_radius, ensemble_moments, isometry_check,
    simulate_aggregate, simulate_gflp, two_sample_cf_test, PathEnsemble,
};
use dilastab::report::{format_f64, report_csv, write_json};
use dilastab::scaling::{
    estimate_alpha_from_variance, estimate_law_from_exponent, verify_aggregate_similarity,
    verify_dilative_stability, verify_fg_dilative, wiener_log_pair,
};
use dilastab::{
    as_to_ds, ds_to_as, AggLaw, GeneralizedScalingLaw, Kernel, Law, LevyModel, ScaleFn,
    VerificationReport,
};

use crate::spec::{CheckSpec, EstimateMethod, Expect, ExperimentSpec, OracleSpec, SimulationSpec};
use crate::CliError;

/// Whether the experiment met every expectation.
pub type Verdict = bool;

fn need_oracle(
    spec: &ExperimentSpec,
    what: &str,
) -> Result<Box<dyn ExponentOracle<f64>>, CliError> {
    spec.oracle
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("{what} needs an oracle section")))?
        .build(&spec.quadrature)
}

fn claimed(spec: &ExperimentSpec) -> Result<Option<Law>, CliError> {
    match &spec.oracle {
        Some(o) => o.claimed_law(),
        None => Ok(None),
    }
}

fn law_or_claimed(
    spec: &ExperimentSpec,
    alpha: Option<f64>,
    delta: Option<f64>,
) -> Result<Law, CliError> {
    let c = claimed(spec)?;
    match (alpha.or(c.map(|l| l.alpha)), delta.or(c.map(|l| l.delta))) {
        (Some(a), Some(d)) => Ok(Law::new(a, d)),
        _ => Err(CliError::Config(
            "law parameters omitted and the oracle has no claimed law".into(),
        )),
    }
}

fn gflp_parts(spec: &ExperimentSpec, what: &str) -> Result<(LevyModel, Kernel), CliError> {
    match &spec.oracle {
        Some(OracleSpec::Gflp { model, kernel }) => Ok((*model, kernel.build()?)),
        _ => Err(CliError::Config(format!("{what} needs a gflp oracle"))),
    }
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| {
        CliError::Config(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

#[derive(Serialize)]
struct CheckOutcome {
    kind: &'static str,
    expect: Expect,
    ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    details: Option<Value>,
}

fn scaling_outcome(kind: &'static str, expect: Expect, report: VerificationReport) -> CheckOutcome {
    let ok = report.pass == (expect == Expect::Pass);
    CheckOutcome {
        kind,
        expect,
        ok,
        report: Some(report),
        details: None,
    }
}

fn rigidity(gammas: &[f64]) -> Result<CheckOutcome, CliError> {
    let one = Ratio::from_integer(1i64);
    let mut rows = Vec::new();
    let mut ok = true;
    for &g in gammas {
        let gamma = Ratio::<i64>::approximate_float(g)
            .filter(|r| *r > one)
            .ok_or_else(|| {
                CliError::Config(format!("gamma must be a rational number above 1, got {g}"))
            })?;
        let rho = one / (gamma - one);
        let law = as_to_ds(AggregateSimilarityLaw::rigidity(rho))?;
        let expected = ((Ratio::from_integer(3) - gamma) / 2, one - gamma);
        let exact = law.alpha == expected.0 && law.delta == expected.1;
        ok &= exact;
        rows.push(json!({
            "gamma": gamma.to_string(),
            "rho": rho.to_string(),
            "alpha": law.alpha.to_string(),
            "delta": law.delta.to_string(),
            "expected_alpha": expected.0.to_string(),
            "expected_delta": expected.1.to_string(),
            "exact": exact,
        }));
    }
    Ok(CheckOutcome {
        kind: "rigidity",
        expect: Expect::Pass,
        ok,
        report: None,
        details: Some(Value::Array(rows)),
    })
}

/// Closed-form covariance for kernels normalized to a known Gaussian
/// counterpart, per unit second moment of the driver.
fn reference_covariance(kernel: &Kernel, s: f64, t: f64) -> Option<f64> {
    let h = *kernel.params().get("H")?;
    let p = |x: f64| x.abs().powf(2.0 * h);
    match kernel.name() {
        "sub_fractional" => Some(p(s) + p(t) - 0.5 * (p(s + t) + p(t - s))),
        "fractional_ma" => Some(0.5 * (p(s) + p(t) - p(t - s))),
        _ => None,
    }
}

fn covariance(spec: &ExperimentSpec, times: &[f64], tol: f64) -> Result<CheckOutcome, CliError> {
    let (model, kernel) = gflp_parts(spec, "covariance check")?;
    let m2 = model.second_moment();
    let mut ok = true;
    let mut rows = Vec::new();
    let mut csv = String::from("s,t,covariance,err_estimate,reference\n");
    for &s in times {
        for &t in times {
            let c = gflp_covariance(&model, &kernel, s, t, &spec.quadrature)?;
            let reference = reference_covariance(&kernel, s, t).map(|r| m2 * r);
            if let Some(r) = reference {
                ok &= (c.value - r).abs() <= tol;
            }
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                format_f64(s),
                format_f64(t),
                format_f64(c.value),
                format_f64(c.err_estimate),
                reference.map(format_f64).unwrap_or_default()
            );
            rows.push(json!({"s": s, "t": t, "covariance": c.value, "err_estimate": c.err_estimate, "reference": reference}));
        }
    }
    write_text(&spec.out.join("covariance.csv"), &csv)?;
    Ok(CheckOutcome {
        kind: "covariance",
        expect: Expect::Pass,
        ok,
        report: None,
        details: Some(json!({"tol": tol, "table": rows})),
    })
}

fn run_check(spec: &ExperimentSpec, check: &CheckSpec) -> Result<CheckOutcome, CliError> {
    let grid = &spec.grid;
    Ok(match check {
        CheckSpec::Dilative {
            alpha,
            delta,
            tol,
            expect,
        } => {
            let law = law_or_claimed(spec, *alpha, *delta)?;
            let oracle = need_oracle(spec, "dilative check")?;
            scaling_outcome(
                "dilative",
                *expect,
                verify_dilative_stability(oracle.as_ref(), &law, grid, *tol)?,
            )
        }
        CheckSpec::Fg {
            f_power,
            g_power,
            pair,
            tol,
            expect,
        } => {
            let law = match (f_power, g_power, pair) {
                (Some(f), Some(g), None) => {
                    GeneralizedScalingLaw::new(ScaleFn::Power(*f), ScaleFn::Power(*g))
                }
                _ => wiener_log_pair(),
            };
            let oracle = need_oracle(spec, "fg check")?;
            scaling_outcome(
                "fg",
                *expect,
                verify_fg_dilative(oracle.as_ref(), &law, grid, *tol)?,
            )
        }
        CheckSpec::Aggregate {
            rho1,
            rho2,
            m,
            tol,
            expect,
        } => {
            let law = match (rho1, rho2) {
                (Some(a), Some(b)) => AggLaw::new(*a, *b),
                (None, None) => ds_to_as(law_or_claimed(spec, None, None)?)?,
                _ => {
                    return Err(CliError::Config(
                        "aggregate check needs both rho1 and rho2, or neither".into(),
                    ))
                }
            };
            let oracle = need_oracle(spec, "aggregate check")?;
            scaling_outcome(
                "aggregate",
                *expect,
                verify_aggregate_similarity(oracle.as_ref(), &law, m, grid, *tol)?,
            )
        }
        CheckSpec::Rigidity { gammas } => rigidity(gammas)?,
        CheckSpec::Covariance { times, tol } => covariance(spec, times, *tol)?,
    })
}

/// Runs every check; writes `report.json` and `report.csv`.
pub fn verify(spec: &ExperimentSpec) -> Result<Verdict, CliError> {
    if spec.checks.is_empty() {
        return Err(CliError::Config(
            "verify needs a nonempty checks list".into(),
        ));
    }
    prepare_out(&spec.out)?;
    let outcomes = spec
        .checks
        .iter()
        .map(|c| run_check(spec, c))
        .collect::<Result<Vec<_>, _>>()?;
    let pass = outcomes.iter().all(|o| o.ok);

    let mut csv = String::from("check,kind,T,times,thetas,lhs,rhs,rel_err,label,error\n");
    for (i, o) in outcomes.iter().enumerate() {
        if let Some(r) = &o.report {
            for line in report_csv(r).lines().skip(1) {
                let _ = writeln!(csv, "{i},{},{line}", o.kind);
            }
        }
    }
    write_text(&spec.out.join("report.csv"), &csv)?;
    write_json(
        &spec.out.join("report.json"),
        &json!({
            "command": "verify",
            "experiment": spec.name(),
            "spec": spec,
            "checks": outcomes,
            "pass": pass,
        }),
    )?;
    for (i, o) in outcomes.iter().enumerate() {
        let figure = o
            .report
            .as_ref()
            .map(|r| format!(" max rel err {:.3e} (tol {:e})", r.max_rel_err, r.tol))
            .unwrap_or_default();
        println!(
            "check {i} {}: {}{figure}, expected {}",
            o.kind,
            if o.ok { "ok" } else { "UNEXPECTED" },
            if o.expect == Expect::Pass {
                "pass"
            } else {
                "fail"
            }
        );
    }
    Ok(pass)
}

fn need_simulation(spec: &ExperimentSpec) -> Result<&SimulationSpec, CliError> {
    spec.simulation
        .as_ref()
        .ok_or_else(|| CliError::Config("experiment has no simulation section".into()))
}

fn simulate_ensemble(
    spec: &ExperimentSpec,
    sim: &SimulationSpec,
) -> Result<PathEnsemble, CliError> {
    let (model, kernel) = gflp_parts(spec, "simulation")?;
    let radius = match sim.truncation_radius {
        Some(u) => u,
        None => default_truncation_radius(&model, &kernel, &sim.times)?,
    };
    Ok(simulate_aggregate(
        &model,
        &kernel,
        sim.aggregate_m,
        &sim.times,
        sim.n_paths,
        radius,
        spec.seed,
    )?)
}

/// The aggregate of `m` copies is the GFLP of an `m`-fold more intense driver.
fn aggregate_model(model: &LevyModel, m: u32) -> Result<LevyModel, CliError> {
    Ok(LevyModel::new(
        model.family,
        model.intensity * m as f64,
        model.jump_param,
    )?)
}

fn validate_ensemble(
    spec: &ExperimentSpec,
    sim: &SimulationSpec,
    ens: &PathEnsemble,
) -> Result<Value, CliError> {
    let (model, kernel) = gflp_parts(spec, "validation")?;
    let iso = isometry_check(ens, &model, &kernel, 3.0, &spec.quadrature)?;
    let oracle = GflpOracle {
        model: aggregate_model(&model, sim.aggregate_m)?,
        kernel,
        cfg: spec.quadrature,
    };
    let cf = cf_match_test(
        ens,
        &oracle,
        &default_cf_queries(&sim.times),
        sim.z_threshold,
    )?;
    let moments = ensemble_moments(ens)?;
    let mut pass = cf.pass && iso.iter().all(|p| p.pass);
    let mut out = json!({
        "isometry": iso,
        "cf_match": cf,
        "moments": moments,
    });
    if sim.aggregate_m > 1 {
        // Σ_{i≤m} X^{(i)}(t) against m^{ρ₁} X(m^{-ρ₂} t) from a fresh stream
        let law = match sim.aggregate_law {
            Some((r1, r2)) => AggLaw::new(r1, r2),
            None => ds_to_as(law_or_claimed(spec, None, None)?)?,
        };
        let m = sim.aggregate_m as f64;
        let (c, s) = (m.powf(law.rho1), m.powf(-law.rho2));
        let target_times: Vec<f64> = sim.times.iter().map(|t| t * s).collect();
        let target = simulate_gflp(
            &model,
            &kernel,
            &target_times,
            sim.n_paths,
            ens.meta.truncation_radius,
            spec.seed.wrapping_add(1),
        )?
        .rescaled(c, s);
        let two = two_sample_cf_test(
            ens,
            &target,
            &default_cf_queries(&sim.times),
            sim.z_threshold,
        )?;
        pass &= two.pass;
        out["aggregate_law"] = json!({"rho1": law.rho1, "rho2": law.rho2});
        out["aggregate"] = serde_json::to_value(&two).map_err(dilastab::Error::from)?;
    }
    out["pass"] = json!(pass);
    Ok(out)
}

/// Writes `ensemble.csv` and its metadata; with `validate`, also checks the
/// ensemble against the oracles and writes `report.json`.
pub fn simulate(spec: &ExperimentSpec, validate: bool) -> Result<Verdict, CliError> {
    let sim = need_simulation(spec)?;
    prepare_out(&spec.out)?;
    let ens = simulate_ensemble(spec, sim)?;
    ens.write_csv(&spec.out.join("ensemble.csv"))?;
    println!(
        "simulated {} paths at {} times (m = {}, U = {})",
        ens.n_paths(),
        ens.k(),
        sim.aggregate_m,
        ens.meta.truncation_radius
    );
    if !validate {
        return Ok(true);
    }
    let mut report = validate_ensemble(spec, sim, &ens)?;
    let pass = report["pass"].as_bool().unwrap_or(false);
    report["command"] = json!("simulate");
    report["experiment"] = json!(spec.name());
    report["spec"] = serde_json::to_value(spec).map_err(dilastab::Error::from)?;
    write_json(&spec.out.join("report.json"), &report)?;
    println!(
        "validation: {} (cf max |z| {:.3})",
        if pass { "pass" } else { "FAIL" },
        report["cf_match"]["max_abs_z"].as_f64().unwrap_or(f64::NAN)
    );
    Ok(pass)
}

fn stable_family_residual(spec: &ExperimentSpec, law: &Law) -> Option<f64> {
    match spec.oracle {
        Some(OracleSpec::StableLevy { hurst, .. }) => {
            Some((law.delta + (law.alpha - 0.5 * law.delta) / hurst - 1.0).abs())
        }
        _ => None,
    }
}

/// Writes `estimate.json`; the verdict compares with `estimate.expect`.
pub fn estimate(spec: &ExperimentSpec) -> Result<Verdict, CliError> {
    let est = spec.estimate.clone().unwrap_or_default();
    prepare_out(&spec.out)?;
    let mut pass = true;
    let mut out = match est.method {
        EstimateMethod::Exponent => {
            let oracle = need_oracle(spec, "exponent estimate")?;
            let search = est.search.clone().unwrap_or_default();
            let r = estimate_law_from_exponent(oracle.as_ref(), &search)?;
            let family = stable_family_residual(spec, &r.law);
            if let Some(x) = &est.expect {
                match x.flat {
                    Some(true) => {
                        pass &= r.flat_direction.is_some() && r.residual <= x.tol;
                        if let Some(f) = family {
                            pass &= f <= x.tol;
                        }
                    }
                    flat => {
                        if flat == Some(false) {
                            pass &= r.flat_direction.is_none();
                        }
                        let target = law_or_claimed(spec, x.alpha, x.delta)?;
                        pass &= (r.law.alpha - target.alpha).abs() <= x.tol
                            && (r.law.delta - target.delta).abs() <= x.tol;
                    }
                }
            }
            println!(
                "estimate: alpha {:.6}, delta {:.6}, residual {:.3e}{}",
                r.law.alpha,
                r.law.delta,
                r.residual,
                if r.flat_direction.is_some() {
                    ", flat direction"
                } else {
                    ""
                }
            );
            json!({
                "method": "exponent",
                "alpha_hat": r.law.alpha,
                "delta_hat": r.law.delta,
                "residual": r.residual,
                "flat_direction": r.flat_direction,
                "hessian_eigenvalues": r.hessian_eigenvalues,
                "stable_family_residual": family,
                "search": search,
            })
        }
        EstimateMethod::Variance => {
            let sim = need_simulation(spec)?;
            let ens = simulate_ensemble(spec, sim)?;
            let samples: Vec<(f64, f64, f64)> = ensemble_moments(&ens)?
                .iter()
                .map(|m| (m.time, m.variance, m.variance_stderr))
                .collect();
            let a = estimate_alpha_from_variance(&samples)?;
            if let Some(x) = &est.expect {
                let target = law_or_claimed(spec, x.alpha, Some(0.0))?;
                pass &= (a.alpha - target.alpha).abs() <= x.tol;
            }
            println!("estimate: alpha {:.6} +- {:.6}", a.alpha, a.stderr);
            json!({
                "method": "variance",
                "alpha_hat": a.alpha,
                "alpha_stderr": a.stderr,
                "seed": spec.seed,
                "n_paths": sim.n_paths,
                "times": sim.times,
            })
        }
    };
    out["experiment"] = json!(spec.name());
    out["expect"] = serde_json::to_value(&est.expect).map_err(dilastab::Error::from)?;
    out["pass"] = json!(pass);
    write_json(&spec.out.join("estimate.json"), &out)?;
    Ok(pass)
}
