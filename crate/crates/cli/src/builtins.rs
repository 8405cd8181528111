//! Named experiments. Each supplies every section a config file may omit.

use std::collections::BTreeMap;

use dilastab::kernels::KernelSpec;
use dilastab::{LevyModel, ScalingGrid};

use crate::spec::{
    CheckSpec, EstimateExpect, EstimateMethod, EstimateSpec, Expect, OracleSpec, SimulationSpec,
    SpecFile,
};

pub const NAMES: [&str; 9] = [
    "levy-halves",
    "subfractional-ds",
    "logfractional-ds",
    "sghir-ds",
    "wellbalanced-nonunique",
    "zbeta-ds",
    "wiener-fg",
    "aggsim-roundtrip",
    "ygamma-mapping",
];

fn kernel(name: &str, params: &[(&str, f64)]) -> KernelSpec {
    KernelSpec {
        name: name.into(),
        params: params
            .iter()
            .map(|&(k, v)| (k.to_string(), v))
            .collect::<BTreeMap<_, _>>(),
    }
}

fn unit_driver() -> LevyModel {
    LevyModel::two_point(1.0, 1.0).expect("valid driver")
}

fn gflp(k: KernelSpec) -> Option<OracleSpec> {
    Some(OracleSpec::Gflp {
        model: unit_driver(),
        kernel: k,
    })
}

fn grid(times: &[&[f64]], thetas: &[f64], scales: &[f64]) -> Option<ScalingGrid> {
    Some(ScalingGrid {
        times: times.iter().map(|t| t.to_vec()).collect(),
        thetas: thetas.to_vec(),
        scales: scales.to_vec(),
    })
}

fn dilative(alpha: Option<f64>, delta: Option<f64>, tol: f64, expect: Expect) -> CheckSpec {
    CheckSpec::Dilative {
        alpha,
        delta,
        tol,
        expect,
    }
}

fn claimed(tol: f64) -> CheckSpec {
    dilative(None, None, tol, Expect::Pass)
}

fn law(alpha: f64, delta: f64, tol: f64, expect: Expect) -> CheckSpec {
    dilative(Some(alpha), Some(delta), tol, expect)
}

fn estimate(tol: f64, flat: Option<bool>) -> Option<EstimateSpec> {
    Some(EstimateSpec {
        method: EstimateMethod::Exponent,
        search: None,
        expect: Some(EstimateExpect {
            alpha: None,
            delta: None,
            tol,
            flat,
        }),
    })
}

fn quadrature_grid() -> Option<ScalingGrid> {
    grid(&[&[1.0], &[1.0, 2.0]], &[0.5, 1.0, 2.0], &[0.5, 2.0, 5.0])
}

pub fn builtin(name: &str) -> Option<SpecFile> {
    let spec = match name {
        // every Lévy process is (1/2, 1)-dilatively stable and (0, -1)-aggregate
        // similar; Brownian motion (H = 1/2) carries the whole line α = 1/2
        "levy-halves" => SpecFile {
            oracle: Some(OracleSpec::StableLevy {
                hurst: 0.5,
                scale: 1.0,
            }),
            checks: Some(vec![
                law(0.5, 1.0, 1e-12, Expect::Pass),
                law(0.5, 0.0, 1e-12, Expect::Pass),
                law(0.5, -1.0, 1e-12, Expect::Pass),
                law(0.6, 1.0, 1e-3, Expect::Fail),
                CheckSpec::Aggregate {
                    rho1: Some(0.0),
                    rho2: Some(-1.0),
                    m: vec![2, 3, 4],
                    tol: 1e-12,
                    expect: Expect::Pass,
                },
            ]),
            estimate: estimate(1e-6, Some(true)),
            ..Default::default()
        },
        "subfractional-ds" => SpecFile {
            oracle: gflp(kernel("sub_fractional", &[("H", 0.7)])),
            checks: Some(vec![
                claimed(1e-3),
                CheckSpec::Covariance {
                    times: vec![0.5, 1.0, 2.0],
                    tol: 1e-4,
                },
            ]),
            grid: quadrature_grid(),
            simulation: Some(SimulationSpec {
                n_paths: 20_000,
                times: vec![1.0, 2.0, 4.0],
                truncation_radius: Some(50.0),
                aggregate_m: 1,
                z_threshold: 4.0,
                aggregate_law: None,
            }),
            estimate: estimate(0.01, Some(false)),
            ..Default::default()
        },
        "logfractional-ds" => SpecFile {
            oracle: gflp(kernel("log_fractional", &[])),
            checks: Some(vec![claimed(1e-3)]),
            grid: quadrature_grid(),
            estimate: estimate(0.02, Some(false)),
            ..Default::default()
        },
        "sghir-ds" => SpecFile {
            oracle: gflp(kernel("sghir", &[("K", 1.0)])),
            checks: Some(vec![claimed(1e-3)]),
            grid: quadrature_grid(),
            estimate: estimate(0.02, Some(false)),
            ..Default::default()
        },
        // a self-similar process that is also dilatively stable
        "wellbalanced-nonunique" => SpecFile {
            oracle: Some(OracleSpec::StableIntegral {
                kernel: kernel("well_balanced", &[("H", 0.6), ("stable_index", 1.5)]),
                stable_index: 1.5,
                sigma: 1.0,
            }),
            checks: Some(vec![
                law(0.6, 0.0, 1e-3, Expect::Pass),
                claimed(1e-3),
                law(0.6, 1.0, 1e-3, Expect::Fail),
            ]),
            grid: quadrature_grid(),
            estimate: estimate(1e-3, Some(true)),
            ..Default::default()
        },
        "zbeta-ds" => SpecFile {
            oracle: Some(OracleSpec::Zbeta { beta: 0.0, c: 1.0 }),
            checks: Some(vec![claimed(1e-2)]),
            grid: grid(&[&[1.0], &[1.0, 2.0]], &[0.5, 1.0], &[0.5, 2.0]),
            estimate: estimate(0.05, Some(false)),
            ..Default::default()
        },
        "wiener-fg" => SpecFile {
            oracle: Some(OracleSpec::Wiener),
            checks: Some(vec![
                CheckSpec::Fg {
                    f_power: Some(1.0 / 3.0),
                    g_power: Some(1.0 / 3.0),
                    pair: None,
                    tol: 1e-13,
                    expect: Expect::Pass,
                },
                CheckSpec::Fg {
                    f_power: None,
                    g_power: None,
                    pair: Some("wiener_log".into()),
                    tol: 1e-13,
                    expect: Expect::Pass,
                },
                // g f² = T² ≠ T
                CheckSpec::Fg {
                    f_power: Some(1.0),
                    g_power: Some(1.0),
                    pair: None,
                    tol: 1e-3,
                    expect: Expect::Fail,
                },
            ]),
            ..Default::default()
        },
        "aggsim-roundtrip" => SpecFile {
            oracle: gflp(kernel("sub_fractional", &[("H", 0.75)])),
            checks: Some(vec![
                claimed(1e-3),
                CheckSpec::Aggregate {
                    rho1: None,
                    rho2: None,
                    m: vec![2, 3, 4],
                    tol: 1e-3,
                    expect: Expect::Pass,
                },
            ]),
            grid: quadrature_grid(),
            simulation: Some(SimulationSpec {
                n_paths: 20_000,
                times: vec![1.0, 2.0],
                truncation_radius: Some(50.0),
                aggregate_m: 4,
                z_threshold: 4.0,
                aggregate_law: None,
            }),
            estimate: Some(EstimateSpec {
                method: EstimateMethod::Variance,
                search: None,
                expect: Some(EstimateExpect {
                    alpha: None,
                    delta: None,
                    tol: 0.05,
                    flat: None,
                }),
            }),
            ..Default::default()
        },
        "ygamma-mapping" => SpecFile {
            checks: Some(vec![CheckSpec::Rigidity {
                gammas: vec![1.2, 1.5, 1.8],
            }]),
            ..Default::default()
        },
        _ => return None,
    };
    Some(spec)
}
