use std::path::Path;

use beable_core::beables::{conditional_expectation, marginal_beable, named_operator};
use beable_core::detection::RngStream;
use beable_core::harness::config::{default_observables, parse_observable};
use beable_core::harness::RunConfig;
use beable_core::scenarios::build_scenario;
use beable_core::spacetime::Event;

fn load(name: &str) -> RunConfig {
    RunConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)).unwrap()
}

#[test]
fn shipped_configs_validate_and_round_trip() {
    for n in 1..=5 {
        let cfg = load(&format!("ex{n}.toml"));
        cfg.validate().unwrap();
        let again = RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, again);
        build_scenario(&cfg.scenario).unwrap();
    }
}

// Averaging the conditioned beable over sampled records gives back the marginal.
fn check_tower(name: &str, query_times: &[f64]) {
    let cfg = load(name);
    let scn = build_scenario(&cfg.scenario).unwrap();
    let n = 4000u64;
    let records: Vec<_> = (0..n).map(|i| scn.sample(&mut RngStream::new(99, i)).unwrap().record).collect();
    let mut varied = false;
    let observables = if cfg.run.observables.is_empty() { default_observables(cfg.scenario.kind) } else { cfg.run.observables.clone() };
    for obs in &observables {
        let (site, op_name) = parse_observable(obs).unwrap();
        let op = named_operator(&scn, &site, &op_name).unwrap();
        let here = scn.sites.iter().find(|s| s.name == site).unwrap().position;
        for &t in query_times {
            let x = Event::new(t, here).unwrap();
            let marginal = marginal_beable(&x, &op, &scn).unwrap().expectation;
            let v: Vec<f64> = records.iter().map(|r| conditional_expectation(&x, &op, r, &scn).unwrap()).collect();
            let m = v.iter().sum::<f64>() / n as f64;
            let var = v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            varied |= var > 1e-6;
            let se = (var / n as f64).sqrt().max(1e-12);
            assert!((m - marginal).abs() < 4.0 * se + 1e-9, "{name} {obs} t={t}: mean {m} marginal {marginal} se {se}");
        }
    }
    assert!(varied, "{name}: records never moved the beable");
}

#[test]
fn single_emitter_tower_property() {
    check_tower("ex1.toml", &[0.3, 1.0, 2.5]);
}

#[test]
fn entangled_pair_tower_property() {
    check_tower("ex2.toml", &[0.02, 0.1, 0.3]);
}

#[test]
fn cascade_tower_property() {
    check_tower("ex3.toml", &[0.5, 1.5, 3.0]);
}

#[test]
fn measuring_device_tower_property() {
    check_tower("ex4.toml", &[0.5, 1.5, 40.0]);
}
