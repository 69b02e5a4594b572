//! Data-driven choice of J in the style of Goldenshluger and Lepski.
//!
//! Models are J = 2^{L+1} − 1 with 0 ≤ L ≤ ⌊log₂(1 + nα²)⌋ − 1. Each model is
//! privatized in its own pass. With the variance majorant
//! V(J) = √2 τΣ_J √(d log J + 1.5 log(nα²) + log(τΣ_J)) and the bias proxy
//! Â(J) = max_{J'} (d(f̂_{J'}, f̂_{J'∧J}) − κ₁V(J'))₊, the selected model
//! minimises Â(J) + κ₂V(J).

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate_from_points, tau, variance_bound, EstimateFile, EstimateResult, TruthProjection};
use crate::fourier::SobolevParams;
use crate::mechanism::Privatizer;
use crate::rng::{purpose, StreamFactory};
use crate::schedule::{dyadic_level, dyadic_partition, BlockSchedule};
use crate::testbed::Truth;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCollection {
    pub js: Vec<u64>,
    pub n: u64,
    pub alpha: f64,
}

/// {2^{L+1} − 1 : 0 ≤ L ≤ ⌊log₂(1 + nα²)⌋ − 1}.
pub fn model_collection(n: u64, alpha: f64) -> Result<ModelCollection> {
    let na2 = n as f64 * alpha * alpha;
    if !(na2 >= 2.0) {
        return Err(Error::EmptyCollection(na2));
    }
    // Largest p with 2^p ≤ 1 + nα², computed without floating log2 rounding.
    let mut p = 0u32;
    while p < 62 && ((1u64 << (p + 1)) as f64) <= 1.0 + na2 {
        p += 1;
    }
    let js = (0..p).map(|l| (1u64 << (l + 1)) - 1).collect();
    Ok(ModelCollection { js, n, alpha })
}

/// V(J) for an allocated dyadic schedule.
pub fn penalty_v(schedule: &BlockSchedule, n: u64, alpha: f64, a_bound: f64) -> Result<f64> {
    if !(a_bound >= 1.0) {
        return Err(Error::InvalidParameter(format!("A must be at least 1, got {a_bound}")));
    }
    let alloc = schedule.allocated()?;
    if (alloc.alpha - alpha).abs() > 1e-12 * alpha.max(1.0) {
        return Err(Error::ScheduleMismatch(format!(
            "schedule allocates alpha = {}, expected {alpha}",
            alloc.alpha
        )));
    }
    let ts = variance_bound(schedule, n, a_bound)?;
    let na2 = n as f64 * alpha * alpha;
    let log_j = (schedule.num_coefficients() as f64).ln();
    let radicand = log_j + 1.5 * na2.ln() + ts.ln();
    if !(radicand > 0.0) {
        return Err(Error::InvalidParameter(format!("nonpositive penalty radicand {radicand}")));
    }
    Ok(2f64.sqrt() * ts * radicand.sqrt())
}

/// d(f̂_{J'}, f̂_{J'∧J}) where f̂_{J'∧J} truncates f̂_{J'} to {1..J}^d.
pub fn truncation_distance(estimate: &EstimateResult, j: u64) -> Result<f64> {
    let sched = &estimate.schedule;
    let alloc = sched.allocated()?;
    let mut acc = 0.0;
    for (i, (&t, &w)) in estimate.coefficients.iter().zip(&alloc.inv_weights).enumerate() {
        if sched.coords_of(i).iter().any(|&c| c as u64 > j) {
            acc += t * t * w;
        }
    }
    Ok(acc.sqrt())
}

/// Â(J) = max_{J'} (d(f̂_{J'}, f̂_{J'∧J}) − κ₁V(J'))₊.
pub fn empirical_bias_a(
    estimates: &BTreeMap<u64, EstimateResult>,
    j: u64,
    v: &BTreeMap<u64, f64>,
    kappa1: f64,
) -> Result<f64> {
    let mut best: f64 = 0.0;
    for (&jp, est) in estimates {
        let vj = *v.get(&jp).ok_or(Error::MissingEstimate(jp))?;
        if jp <= j {
            continue;
        }
        let dist = truncation_distance(est, j)?;
        best = best.max(dist - kappa1 * vj);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub a_bound: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            a_bound: 1.0,
            kappa1: 2.0,
            kappa2: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionRow {
    pub j: u64,
    pub v: f64,
    pub a: f64,
    pub crit: f64,
}

#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub j_hat: u64,
    pub table: Vec<CriterionRow>,
    pub kappa1: f64,
    pub kappa2: f64,
    pub estimate: EstimateResult,
    /// |M| α: what the separate passes cost under naive composition.
    pub composed_budget: f64,
}

impl SelectionResult {
    pub fn warning(&self) -> String {
        format!(
            "each of the {} models was privatized in a separate pass; naive composition gives a total budget of {}",
            self.table.len(),
            self.composed_budget
        )
    }

    pub fn to_file(&self) -> SelectionFile {
        SelectionFile {
            j_hat: self.j_hat,
            kappa1: self.kappa1,
            kappa2: self.kappa2,
            composed_budget: self.composed_budget,
            warning: self.warning(),
            table: self.table.clone(),
            estimate: self.estimate.to_file(),
        }
    }

    pub fn render_table(&self) -> String {
        let mut s = format!("{:>10} {:>14} {:>14} {:>14}\n", "J", "V(J)", "A(J)", "Crit(J)");
        for r in &self.table {
            let mark = if r.j == self.j_hat { " <" } else { "" };
            s.push_str(&format!("{:>10} {:>14.6e} {:>14.6e} {:>14.6e}{mark}\n", r.j, r.v, r.a, r.crit));
        }
        s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionFile {
    pub j_hat: u64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub composed_budget: f64,
    pub warning: String,
    pub table: Vec<CriterionRow>,
    pub estimate: EstimateFile,
}

/// Picks Ĵ from one estimate per model. Ties go to the smallest J.
pub fn select(estimates: &BTreeMap<u64, EstimateResult>, config: &SelectionConfig) -> Result<SelectionResult> {
    let first = estimates.values().next().ok_or(Error::EmptyCollection(0.0))?;
    let n = first.n;
    let alpha = first.schedule.allocated()?.alpha;
    let mut v = BTreeMap::new();
    for (&j, est) in estimates {
        if est.n != n {
            return Err(Error::ScheduleMismatch(format!("model {j} was fitted on n = {}, expected {n}", est.n)));
        }
        if est.schedule.j() != j {
            return Err(Error::ScheduleMismatch(format!("estimate keyed {j} has J = {}", est.schedule.j())));
        }
        v.insert(j, penalty_v(&est.schedule, n, alpha, config.a_bound)?);
    }
    // For each J', the truncation distances to every smaller model in one sweep.
    let keys: Vec<u64> = estimates.keys().copied().collect();
    let mut trunc: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    for (&jp, est) in estimates {
        let alloc = est.schedule.allocated()?;
        let mut mass = vec![0.0; keys.len()];
        for (i, (&t, &w)) in est.coefficients.iter().zip(&alloc.inv_weights).enumerate() {
            let top = est.schedule.coords_of(i).iter().copied().max().unwrap_or(1) as u64;
            let contrib = t * t * w;
            for (k, &j) in keys.iter().enumerate() {
                if j >= jp {
                    break;
                }
                if top > j {
                    mass[k] += contrib;
                }
            }
        }
        for (k, &j) in keys.iter().enumerate() {
            if j < jp {
                trunc.insert((jp, j), mass[k].sqrt());
            }
        }
    }
    let mut table = Vec::with_capacity(keys.len());
    for &j in &keys {
        let a = keys
            .iter()
            .filter(|&&jp| jp > j)
            .map(|jp| trunc[&(*jp, j)] - config.kappa1 * v[jp])
            .fold(0.0, f64::max);
        table.push(CriterionRow {
            j,
            v: v[&j],
            a,
            crit: a + config.kappa2 * v[&j],
        });
    }
    let mut best = &table[0];
    for row in &table[1..] {
        if row.crit < best.crit {
            best = row;
        }
    }
    Ok(SelectionResult {
        j_hat: best.j,
        table: table.clone(),
        kappa1: config.kappa1,
        kappa2: config.kappa2,
        estimate: estimates[&best.j].clone(),
        composed_budget: keys.len() as f64 * alpha,
    })
}

/// Allocated dyadic schedule for model J.
pub fn model_schedule(j: u64, d: usize, alpha: f64, delta: &SobolevParams) -> Result<Arc<BlockSchedule>> {
    Ok(Arc::new(dyadic_partition(j, d)?.allocate_budget(alpha, delta)?))
}

/// Privatizes the sample once per model and aggregates each pass. Model J
/// uses the stream domain `domain ++ [PRIVATIZE, J]`.
pub fn fit_collection(
    points: &[Vec<f64>],
    collection: &ModelCollection,
    delta: &SobolevParams,
    root_seed: u64,
    domain: &[u64],
) -> Result<BTreeMap<u64, EstimateResult>> {
    let d = delta.dim();
    let mut out = BTreeMap::new();
    for &j in &collection.js {
        dyadic_level(j)?;
        let sched = model_schedule(j, d, collection.alpha, delta)?;
        let streams = StreamFactory::child(root_seed, domain, &[purpose::PRIVATIZE, j]);
        let p = Privatizer::new(sched, streams)?;
        out.insert(j, estimate_from_points(points, &p, Some(root_seed))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailRow {
    pub t: f64,
    pub exceedances: u64,
    pub frequency: f64,
    pub bound: f64,
    pub se: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub j: u64,
    pub n: u64,
    pub v: f64,
    pub tau_sigma: f64,
    pub replications: usize,
    pub mean_distance: f64,
    pub rows: Vec<TailRow>,
    pub pass: bool,
}

/// Tail bound P(d(f̂_J, f_J) ≥ V(J) + t) ≤ (nα²)^{−3/2} (2/(τΣ_J)) exp(−t²/(2(τΣ_J)²)).
pub fn tail_probability_bound(n: u64, alpha: f64, tau_sigma: f64, t: f64) -> f64 {
    let na2 = n as f64 * alpha * alpha;
    na2.powf(-1.5) * 2.0 / tau_sigma * (-t * t / (2.0 * tau_sigma * tau_sigma)).exp()
}

/// Monte Carlo check of the tail bound at t ∈ {0, τΣ_J, 2τΣ_J}. The observed
/// frequency may exceed the bound by at most three binomial standard errors.
pub fn concentration_check(
    schedule: &Arc<BlockSchedule>,
    n: u64,
    alpha: f64,
    truth: &Truth,
    replications: usize,
    a_bound: f64,
    root_seed: u64,
) -> Result<ConcentrationReport> {
    let v = penalty_v(schedule, n, alpha, a_bound)?;
    let ts = variance_bound(schedule, n, a_bound)?;
    let j = schedule.j();
    let (table, _) = truth.table(j as u32)?;
    let proj = TruthProjection::new(&table, schedule)?;
    let dists: Vec<Result<f64>> = crate::par::map_indexed(replications, |r| {
        let pts = truth.sample(n as usize, &StreamFactory::new(root_seed, &[purpose::DATA, r as u64]))?;
        let p = Privatizer::new(schedule.clone(), StreamFactory::new(root_seed, &[purpose::PRIVATIZE, r as u64]))?;
        let est = estimate_from_points(&pts, &p, Some(root_seed))?;
        Ok(proj.variance_distance(&est.coefficients))
    });
    let dists: Vec<f64> = dists.into_iter().collect::<Result<_>>()?;
    let rf = replications as f64;
    let rows: Vec<TailRow> = [0.0, ts, 2.0 * ts]
        .iter()
        .map(|&t| {
            let exceed = dists.iter().filter(|&&x| x >= v + t).count() as u64;
            let bound = tail_probability_bound(n, alpha, ts, t);
            let p = bound.min(1.0);
            let se = (p * (1.0 - p) / rf).sqrt();
            let freq = exceed as f64 / rf;
            TailRow {
                t,
                exceedances: exceed,
                frequency: freq,
                bound,
                se,
                pass: bound >= 1.0 || freq <= bound + 3.0 * se,
            }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    Ok(ConcentrationReport {
        j,
        n,
        v,
        tau_sigma: ts,
        replications,
        mean_distance: dists.iter().sum::<f64>() / rf,
        rows,
        pass,
    })
}

/// τ_{A,d} for reports.
pub fn tau_constant(d: usize, a_bound: f64) -> f64 {
    tau(d, a_bound)
}
