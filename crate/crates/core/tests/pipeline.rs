use std::sync::Arc;

use ldp_sobolev::data::{read_points, write_points};
use ldp_sobolev::estimator::{aggregate, estimate_from_points};
use ldp_sobolev::fourier::SobolevParams;
use ldp_sobolev::harness::{run, ExperimentSpec};
use ldp_sobolev::mechanism::{PrivatizedDataset, Privatizer};
use ldp_sobolev::rng::{purpose, StreamFactory};
use ldp_sobolev::schedule::{dyadic_partition, BlockSchedule};
use ldp_sobolev::testbed::{NuPattern, Truth, TruthSpec};

fn schedule(j: u64, alpha: f64) -> Arc<BlockSchedule> {
    let delta = SobolevParams::isotropic(1, 1.0, 1.0).unwrap();
    Arc::new(dyadic_partition(j, 1).unwrap().allocate_budget(alpha, &delta).unwrap())
}

fn bump_points(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let beta = SobolevParams::isotropic(1, 1.0, 2f64.sqrt()).unwrap();
    let delta = SobolevParams::isotropic(1, 1.0, 1.0).unwrap();
    let truth = Truth::resolve(&TruthSpec::Bump { grid: 2, nu: NuPattern::Dense }, &beta, &delta).unwrap();
    truth.sample(n, &StreamFactory::new(seed, &[purpose::DATA])).unwrap()
}

fn spec(json: &str) -> ExperimentSpec {
    serde_json::from_str(json).unwrap()
}

#[test]
fn sample_privatize_estimate_roundtrip() {
    let pts = bump_points(2000, 11);
    let mut csv = Vec::new();
    write_points(&pts, &mut csv).unwrap();
    let back = read_points(&csv[..]).unwrap();
    assert_eq!(back.len(), pts.len());
    for (a, b) in back.iter().zip(&pts) {
        assert!((a[0] - b[0]).abs() <= 1e-15);
    }

    let sched = schedule(7, 1.0);
    let ds = PrivatizedDataset::from_points(&pts, sched.clone(), 5, &[purpose::PRIVATIZE]).unwrap();
    let mut jsonl = Vec::new();
    ds.write_jsonl(&mut jsonl).unwrap();
    let ds2 = PrivatizedDataset::read_jsonl(&jsonl[..]).unwrap();
    assert_eq!(ds2.records.len(), 2000);
    assert_eq!(ds2.root_seed, 5);
    assert_eq!(ds2.schedule.hash(), sched.hash());

    let from_file = aggregate(&ds2).unwrap();
    let p = Privatizer::new(sched, StreamFactory::new(5, &[purpose::PRIVATIZE])).unwrap();
    let direct = estimate_from_points(&pts, &p, Some(5)).unwrap();
    assert_eq!(from_file.n, direct.n);
    for (a, b) in from_file.coefficients.iter().zip(&direct.coefficients) {
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
}

#[test]
fn private_views_have_constant_magnitude_per_block() {
    let pts = bump_points(300, 2);
    let sched = schedule(15, 0.5);
    let ds = PrivatizedDataset::from_points(&pts, sched.clone(), 9, &[purpose::PRIVATIZE]).unwrap();
    for b in sched.blocks() {
        let mags: Vec<f64> = ds
            .records
            .iter()
            .flat_map(|r| r.values[b.offset..b.offset + b.size].iter().map(|v| v.abs()))
            .collect();
        let m0 = mags[0];
        assert!(m0 > 0.0);
        assert!(mags.iter().all(|&m| (m - m0).abs() <= 1e-12 * m0), "block {:?}", b.label);
    }
}

#[test]
fn constant_coefficient_is_unbiased() {
    let pts = bump_points(40_000, 3);
    let p = Privatizer::new(schedule(1, 1.0), StreamFactory::new(4, &[purpose::PRIVATIZE])).unwrap();
    let est = estimate_from_points(&pts, &p, Some(4)).unwrap();
    let se = (est.block_variance[0] / est.n as f64).sqrt();
    assert!((est.coefficients[0] - 1.0).abs() < 4.0 * se, "{} (se {se})", est.coefficients[0]);
}

#[test]
fn runs_are_deterministic() {
    let s = spec(
        r#"{"truth":{"type":"uniform"},"d":1,"beta":1,"delta":1,"radius":1.4142135623730951,
            "alpha":1,"n_grid":[500,1000],"replications":5,"seed":42}"#,
    );
    let a = run(&s).unwrap();
    let b = run(&s).unwrap();
    assert_eq!(
        serde_json::to_string(&a.summary).unwrap(),
        serde_json::to_string(&b.summary).unwrap()
    );
    assert_eq!(a.records.len(), 10);
    let mut other = s.clone();
    other.seed = 43;
    let c = run(&other).unwrap();
    assert_ne!(a.summary.points[0].mean_risk, c.summary.points[0].mean_risk);
}

#[test]
fn standard_error_shrinks_like_root_r() {
    let base = r#"{"truth":{"type":"uniform"},"d":1,"beta":1,"delta":1,"radius":1.4142135623730951,
        "alpha":1,"n_grid":[1000],"selector":{"type":"fixed","j":3},"seed":7,"replications":"#;
    let se = |r: usize| {
        let s = spec(&format!("{base}{r}}}"));
        run(&s).unwrap().summary.points[0].se
    };
    let ratio = se(50) / se(200);
    assert!((ratio / 2.0 - 1.0).abs() <= 0.2, "se ratio {ratio}");
}

#[test]
fn global_and_block_agree_for_one_coefficient() {
    let delta = SobolevParams::isotropic(1, 1.0, 1.0).unwrap();
    let g = BlockSchedule::global(1, 1).unwrap().allocate_budget(0.8, &delta).unwrap();
    let b = dyadic_partition(1, 1).unwrap().allocate_budget(0.8, &delta).unwrap();
    assert_eq!(g.blocks().len(), 1);
    assert_eq!(b.blocks().len(), 1);
    assert_eq!(g.allocated().unwrap().budgets, b.allocated().unwrap().budgets);
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        r#"{"truth":{"type":"uniform"},"d":1,"beta":1,"delta":1,"radius":1.5,"alpha":0,"n_grid":[100],"replications":2,"seed":1}"#,
        r#"{"truth":{"type":"uniform"},"d":1,"beta":1,"delta":1,"radius":1.5,"alpha":1,"n_grid":[],"replications":2,"seed":1}"#,
        r#"{"truth":{"type":"uniform"},"d":1,"beta":1,"delta":1,"radius":1.5,"alpha":1,"n_grid":[100],"replications":0,"seed":1}"#,
    ];
    for b in bad {
        assert!(run(&spec(b)).is_err(), "{b}");
    }
}
