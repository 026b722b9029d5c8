//! The invariant suite end to end: pass on solutions, the
//! structural/dynamical split under perturbation, report formats.

use phlo_core::config::RunConfig;
use phlo_core::quadrature::QuadraturePlan;
use phlo_core::report::{run_suite, FieldSource, InvariantClass, SuiteOptions, SuiteReport};
use phlo_core::solutions::{build_solution, PhaseFamily, PhloConfig};
use phlo_core::{DerivativeProvider, ScalarField};

fn small() -> SuiteOptions {
    SuiteOptions {
        probes: 400,
        plan: QuadraturePlan { counts: [16; 3], time_count: 16, ..QuadraturePlan::default() },
        ..SuiteOptions::default()
    }
}

fn failures(r: &SuiteReport) -> Vec<&str> {
    r.failures().map(|f| f.name.as_str()).collect()
}

#[test]
fn every_configuration_passes() {
    for epsilon in [-1.0, 1.0] {
        for kappa in [-1.0, 1.0] {
            for phase_family in [PhaseFamily::Psi1, PhaseFamily::Psi2] {
                let cfg = PhloConfig { epsilon, kappa, phase_family, ..PhloConfig::default() };
                let r = run_suite(&cfg, &small()).unwrap();
                assert!(r.passed, "{cfg:?}: {:?}", failures(&r));
            }
        }
    }
}

#[test]
fn finite_differences_pass_too() {
    let opts = SuiteOptions { provider: DerivativeProvider::fd(), ..small() };
    let r = run_suite(&PhloConfig::default(), &opts).unwrap();
    assert!(r.passed, "{:?}", failures(&r));
}

#[test]
fn perturbation_flips_exactly_the_dynamical_invariants() {
    let cfg = PhloConfig::default();
    let sol = build_solution(&cfg).unwrap();
    let u = &sol.u + &(ScalarField::x() * 0.01);
    let source = FieldSource::Expressions { u: "solution + 0.01*x".into(), p: "solution".into() };
    let opts = SuiteOptions { fields: Some((u, sol.p.clone(), source)), ..small() };
    let r = run_suite(&cfg, &opts).unwrap();
    assert!(!r.passed);
    for inv in &r.results {
        match inv.class {
            InvariantClass::Structural => assert!(inv.passed, "structural {} failed", inv.name),
            InvariantClass::Dynamical => assert!(!inv.passed, "dynamical {} passed", inv.name),
        }
    }
}

#[test]
fn zero_field_reports_undefined_l0() {
    let cfg = PhloConfig::default();
    let z = ScalarField::zero();
    let source = FieldSource::Expressions { u: "0".into(), p: "0".into() };
    let opts = SuiteOptions { fields: Some((z.clone(), z, source)), ..small() };
    let r = run_suite(&cfg, &opts).unwrap();
    let l0 = r.results.iter().find(|x| x.name == "l0_recovery").unwrap();
    assert!(!l0.passed && l0.residual.is_infinite());
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    let entry = json["results"].as_array().unwrap().iter().find(|x| x["name"] == "l0_recovery").unwrap();
    assert!(entry["residual"].is_null());
}

#[test]
fn reports_are_reproducible_and_well_formed() {
    let cfg = PhloConfig::default();
    let a = run_suite(&cfg, &small()).unwrap();
    let b = run_suite(&cfg, &small()).unwrap();
    assert_eq!(a.to_text(), b.to_text());
    assert_eq!(a.to_json(), b.to_json());

    let text = a.to_text();
    assert!(text.starts_with("PhLO verification report\n"));
    assert_eq!(text.matches("[PASS]").count(), a.results.len());
    assert!(text.ends_with(&format!("summary: {} passed, 0 failed\n", a.results.len())));

    let json: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
    for key in
        ["config", "fields", "provider", "seed", "probes", "probe_box", "tolerances", "results", "planck", "passed"]
    {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["fields"]["kind"], "solution");
    assert_eq!(json["config"]["phase_family"], "psi1");
    let first = &json["results"][0];
    for key in ["name", "class", "residual", "tolerance", "probes", "passed", "identity"] {
        assert!(first.get(key).is_some(), "missing result.{key}");
    }
}

#[test]
fn different_seeds_probe_different_points() {
    let cfg = PhloConfig::default();
    let a = run_suite(&cfg, &small()).unwrap();
    let b = run_suite(&cfg, &SuiteOptions { seed: 7, ..small() }).unwrap();
    assert!(b.passed);
    assert_ne!(a.to_json(), b.to_json());
}

#[test]
fn config_text_drives_the_suite() {
    let run = RunConfig::parse("epsilon = 1\nkappa = -1\nphase_family = psi2\ngrid.nx = 16\ngrid.ny = 16\ngrid.nz = 16\ngrid.nt = 16\nprobes = 300\n").unwrap();
    let r = run_suite(&run.phlo, &run.suite_options().unwrap()).unwrap();
    assert!(r.passed, "{:?}", failures(&r));
    assert_eq!(r.probes, 300);

    let bad = RunConfig::parse("u_expr = x\ngrid.nx = 16\ngrid.ny = 16\ngrid.nz = 16\ngrid.nt = 16\n").unwrap();
    let r = run_suite(&bad.phlo, &bad.suite_options().unwrap()).unwrap();
    assert!(!r.passed);
    assert!(r.failures().all(|f| f.class == InvariantClass::Dynamical));
}
