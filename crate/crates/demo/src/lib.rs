//! Browser bindings: budget allocation, a private estimate of a bump density
//! and an exact LDP audit of one block channel. Each binding returns JSON.

use ldp_sobolev::estimator::{estimate_from_points, tau};
use ldp_sobolev::fourier::SobolevParams;
use ldp_sobolev::mechanism::{max_log_ratio, ChannelParams, Privatizer};
use ldp_sobolev::rng::{purpose, StreamFactory};
use ldp_sobolev::schedule::dyadic_partition;
use ldp_sobolev::testbed::{NuPattern, Truth, TruthSpec};
use rand::Rng;
use serde_json::{json, Value};
use std::sync::Arc;
use wasm_bindgen::prelude::*;

type Out = std::result::Result<Value, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Blocks, budgets and output magnitudes of the dyadic schedule for J on [0,1]^d.
pub fn allocation(j: u32, d: u32, alpha: f64, delta: f64, n: u32) -> Out {
    let dl = SobolevParams::isotropic(d as usize, delta, 1.0).map_err(err)?;
    let s = dyadic_partition(j as u64, d as usize)
        .and_then(|s| s.allocate_budget(alpha, &dl))
        .map_err(err)?;
    let budgets = &s.allocated().map_err(err)?.budgets;
    let (sigma, total) = s.sigma_terms(n.max(1) as u64).map_err(err)?;
    let blocks: Vec<Value> = s
        .blocks()
        .iter()
        .zip(budgets)
        .zip(&sigma)
        .map(|((b, &a), &sg)| {
            let magnitude = ChannelParams::new(b.size, a, d as usize).map(|c| c.magnitude).unwrap_or(f64::NAN);
            json!({ "label": b.label, "size": b.size, "budget": a, "sigma": sg, "magnitude": magnitude })
        })
        .collect();
    Ok(json!({
        "blocks": blocks,
        "sigma_total": total,
        "variance_bound": tau(d as usize, alpha.max(1.0)) * total,
    }))
}

/// Samples n points from a one-dimensional bump density, privatizes them with
/// the dyadic schedule for J and evaluates truth and estimate on a grid.
pub fn estimate_curve(grid: u32, dense: bool, j: u32, alpha: f64, n: u32, seed: u32, points: u32) -> Out {
    let beta = SobolevParams::isotropic(1, 1.0, 2f64.sqrt()).map_err(err)?;
    let delta = SobolevParams::isotropic(1, 1.0, 1.0).map_err(err)?;
    let nu = if dense { NuPattern::Dense } else { NuPattern::Sparse };
    let truth = Truth::resolve(&TruthSpec::Bump { grid, nu }, &beta, &delta).map_err(err)?;
    let seed = seed as u64;
    let pts = truth
        .sample(n as usize, &StreamFactory::new(seed, &[purpose::DATA]))
        .map_err(err)?;
    let sched = Arc::new(
        dyadic_partition(j as u64, 1)
            .and_then(|s| s.allocate_budget(alpha, &delta))
            .map_err(err)?,
    );
    let p = Privatizer::new(sched, StreamFactory::new(seed, &[purpose::PRIVATIZE])).map_err(err)?;
    let est = estimate_from_points(&pts, &p, Some(seed)).map_err(err)?;
    let m = points.max(2);
    let xs: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
    let truth_y: Vec<f64> = xs.iter().map(|&x| truth.density(&[x])).collect();
    let est_y: Vec<f64> = xs.iter().map(|&x| est.eval(&[x])).collect::<Result<_, _>>().map_err(err)?;
    Ok(json!({ "x": xs, "truth": truth_y, "estimate": est_y }))
}

/// Largest log-likelihood ratio of a block channel of size k over random
/// inputs, computed by exact enumeration. `pi` replaces the half-space
/// probability when positive, for a negative control.
pub fn channel_audit(k: u32, budget: f64, pi: f64, inputs: u32, seed: u32) -> Out {
    let mut params = ChannelParams::new(k as usize, budget, 1).map_err(err)?;
    if pi > 0.0 {
        params = params.with_pi(pi);
    }
    let b0 = params.b0;
    let mut rng = StreamFactory::new(seed as u64, &[purpose::DATA]).stream(0, 0);
    let mut xs = vec![vec![b0; k as usize], vec![-b0; k as usize]];
    xs.extend((0..inputs).map(|_| (0..k).map(|_| rng.random_range(-b0..=b0)).collect()));
    let r = max_log_ratio(&params, &xs).map_err(err)?;
    Ok(json!({
        "k": k,
        "budget": budget,
        "pi": params.pi,
        "magnitude": params.magnitude,
        "max_log_ratio": r,
        "pass": r <= budget + 1e-10,
    }))
}

fn to_js(v: Out) -> std::result::Result<String, JsValue> {
    v.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = allocation)]
pub fn allocation_js(j: u32, d: u32, alpha: f64, delta: f64, n: u32) -> std::result::Result<String, JsValue> {
    to_js(allocation(j, d, alpha, delta, n))
}

#[wasm_bindgen(js_name = estimateCurve)]
pub fn estimate_curve_js(
    grid: u32,
    dense: bool,
    j: u32,
    alpha: f64,
    n: u32,
    seed: u32,
    points: u32,
) -> std::result::Result<String, JsValue> {
    to_js(estimate_curve(grid, dense, j, alpha, n, seed, points))
}

#[wasm_bindgen(js_name = channelAudit)]
pub fn channel_audit_js(k: u32, budget: f64, pi: f64, inputs: u32, seed: u32) -> std::result::Result<String, JsValue> {
    to_js(channel_audit(k, budget, pi, inputs, seed))
}
