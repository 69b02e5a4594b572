//! Private projection estimator: θ̂_j is the mean of the private views Z_{i,j}.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{adversarial_distance, basis_bound, CoefficientTable, SobolevParams};
use crate::mechanism::{xi, BasisEvaluator, PrivatizedDataset, Privatizer};
use crate::schedule::BlockSchedule;

/// Neumaier-compensated running sums, one per coefficient. For a fixed
/// record order the result is bit-stable.
#[derive(Debug, Clone)]
pub struct Accumulator {
    sums: Vec<f64>,
    comps: Vec<f64>,
    n: u64,
}

impl Accumulator {
    pub fn new(len: usize) -> Self {
        Accumulator {
            sums: vec![0.0; len],
            comps: vec![0.0; len],
            n: 0,
        }
    }

    pub fn add(&mut self, z: &[f64]) {
        for ((s, c), &v) in self.sums.iter_mut().zip(self.comps.iter_mut()).zip(z) {
            let t = *s + v;
            if s.abs() >= v.abs() {
                *c += (*s - t) + v;
            } else {
                *c += (v - t) + *s;
            }
            *s = t;
        }
        self.n += 1;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn means(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.sums
            .iter()
            .zip(&self.comps)
            .map(|(s, c)| (s + c) / n)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct EstimateResult {
    pub schedule: Arc<BlockSchedule>,
    pub n: u64,
    /// θ̂ in the schedule's flat order.
    pub coefficients: Vec<f64>,
    /// Mean over each block of the per-coordinate sample variance of Z.
    pub block_variance: Vec<f64>,
    pub root_seed: Option<u64>,
}

impl EstimateResult {
    fn from_accumulator(schedule: Arc<BlockSchedule>, acc: &Accumulator, root_seed: Option<u64>) -> Result<Self> {
        if acc.count() == 0 {
            return Err(Error::EmptyDataset);
        }
        let coefficients = acc.means();
        let alloc = schedule.allocated()?;
        let n = acc.count();
        let block_variance = schedule
            .blocks()
            .iter()
            .zip(&alloc.budgets)
            .map(|(b, &a)| {
                if n < 2 {
                    return 0.0;
                }
                // |Z| is constant within a block, so Σ(Z − Z̄)² = n(B² − Z̄²).
                let ch = crate::mechanism::ChannelParams::new(b.size, a, schedule.dim());
                let bsq = ch.map(|c| c.magnitude * c.magnitude).unwrap_or(f64::NAN);
                let r = b.offset..b.offset + b.size;
                let mean_sq: f64 = coefficients[r].iter().map(|t| t * t).sum::<f64>() / b.size as f64;
                (bsq - mean_sq) * n as f64 / (n - 1) as f64
            })
            .collect();
        Ok(EstimateResult {
            schedule,
            n,
            coefficients,
            block_variance,
            root_seed,
        })
    }

    pub fn to_table(&self) -> CoefficientTable {
        let mut t = CoefficientTable::new(self.schedule.axis_bounds().to_vec()).expect("schedule bounds are valid");
        for (i, &v) in self.coefficients.iter().enumerate() {
            t.set(self.schedule.index_of(i), v).expect("index inside schedule");
        }
        t
    }

    /// Estimated density value at x (not clipped to be nonnegative).
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let mut phi = vec![0.0; self.schedule.num_coefficients()];
        BasisEvaluator::new(&self.schedule).fill(x, &mut phi)?;
        Ok(phi.iter().zip(&self.coefficients).map(|(p, t)| p * t).sum())
    }

    pub fn to_file(&self) -> EstimateFile {
        EstimateFile {
            coefficients: self.to_table(),
            n: self.n,
            schedule_hash: self.schedule.hash(),
            schedule: (*self.schedule).clone(),
            root_seed: self.root_seed,
            block_variance: self.block_variance.clone(),
        }
    }
}

/// Serialized estimate: coefficient table plus lineage metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateFile {
    pub coefficients: CoefficientTable,
    pub n: u64,
    pub schedule_hash: String,
    pub schedule: BlockSchedule,
    pub root_seed: Option<u64>,
    pub block_variance: Vec<f64>,
}

/// θ̂_j = (1/n) Σ_i Z_{i,j}.
pub fn aggregate(dataset: &PrivatizedDataset) -> Result<EstimateResult> {
    if dataset.records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let len = dataset.schedule.num_coefficients();
    let mut acc = Accumulator::new(len);
    for (i, r) in dataset.records.iter().enumerate() {
        if r.values.len() != len {
            return Err(Error::ScheduleMismatch(format!(
                "record {i} has {} values, schedule has {len}",
                r.values.len()
            )));
        }
        acc.add(&r.values);
    }
    EstimateResult::from_accumulator(dataset.schedule.clone(), &acc, Some(dataset.root_seed))
}

/// Privatizes and aggregates in one pass without storing the views.
/// Record i uses stream i of the privatizer.
pub fn estimate_from_points(points: &[Vec<f64>], privatizer: &Privatizer, root_seed: Option<u64>) -> Result<EstimateResult> {
    let sched = privatizer.schedule().clone();
    let len = sched.num_coefficients();
    let mut eval = BasisEvaluator::new(&sched);
    let mut phi = vec![0.0; len];
    let mut z = vec![0.0; len];
    let mut acc = Accumulator::new(len);
    for (i, x) in points.iter().enumerate() {
        eval.fill(x, &mut phi)?;
        privatizer.privatize_phi(i as u64, &phi, &mut z)?;
        acc.add(&z);
    }
    EstimateResult::from_accumulator(sched, &acc, root_seed)
}

/// Risk of an estimate against a truth: the exact distance on the truth's
/// support and an analytic bound on what lies beyond it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub head: f64,
    pub tail: f64,
}

impl RiskReport {
    pub fn upper(&self) -> f64 {
        self.head + self.tail
    }

    pub fn midpoint(&self) -> f64 {
        self.head + 0.5 * self.tail
    }
}

/// head = d(f̂_J, f_{J_max}) computed exactly; tail = R J_max^{−(β+δ)}, the
/// bias bound for truncating a W^β(R) truth at J_max.
pub fn private_risk(estimate: &EstimateResult, truth: &CoefficientTable, truth_params: &SobolevParams) -> Result<RiskReport> {
    let sched = &estimate.schedule;
    let alloc = sched.allocated()?;
    if truth.dim() != sched.dim() {
        return Err(Error::DimensionMismatch {
            expected: sched.dim(),
            got: truth.dim(),
        });
    }
    if truth.bound().iter().zip(sched.axis_bounds()).any(|(t, s)| t < s) {
        return Err(Error::SupportMismatch(format!(
            "truth support {:?} does not cover the estimate support {:?}",
            truth.bound(),
            sched.axis_bounds()
        )));
    }
    let diff = estimate.to_table().sub(truth)?;
    let head = adversarial_distance(&diff, &alloc.delta)?;
    Ok(RiskReport {
        head,
        tail: tail_bound(truth, truth_params, &alloc.delta),
    })
}

/// R J_max^{−(β+δ)} with J_max the smallest axis bound of the truth table.
pub fn tail_bound(truth: &CoefficientTable, truth_params: &SobolevParams, delta: &SobolevParams) -> f64 {
    let jmax = truth.bound().iter().copied().min().unwrap_or(1) as f64;
    truth_params.radius * jmax.powf(-(truth_params.harmonic_mean() + delta.harmonic_mean()))
}

/// A truth laid out along one schedule, for fast repeated risk evaluation.
#[derive(Debug, Clone)]
pub struct TruthProjection {
    /// θ_j at each schedule coordinate.
    pub inside: Vec<f64>,
    /// Σ θ_j² / w_δ(j) over truth entries outside the schedule box.
    pub outside_sq: f64,
    inv_weights: Vec<f64>,
}

impl TruthProjection {
    pub fn new(truth: &CoefficientTable, schedule: &BlockSchedule) -> Result<Self> {
        let alloc = schedule.allocated()?;
        if truth.dim() != schedule.dim() {
            return Err(Error::DimensionMismatch {
                expected: schedule.dim(),
                got: truth.dim(),
            });
        }
        let bounds = schedule.axis_bounds();
        let inside = (0..schedule.num_coefficients())
            .map(|i| truth.get(&schedule.index_of(i)))
            .collect();
        let outside_sq = truth
            .iter()
            .filter(|(j, _)| j.coords().iter().zip(bounds).any(|(c, b)| c > b))
            .map(|(j, v)| v * v / crate::fourier::sobolev_weight(j, &alloc.delta))
            .sum();
        Ok(TruthProjection {
            inside,
            outside_sq,
            inv_weights: alloc.inv_weights.clone(),
        })
    }

    /// d(f̂_J, f_J): the stochastic part of the risk.
    pub fn variance_distance(&self, coefficients: &[f64]) -> f64 {
        self.inside_sq(coefficients).sqrt()
    }

    /// d(f̂_J, f_{J_max}).
    pub fn head_distance(&self, coefficients: &[f64]) -> f64 {
        (self.inside_sq(coefficients) + self.outside_sq).sqrt()
    }

    fn inside_sq(&self, coefficients: &[f64]) -> f64 {
        coefficients
            .iter()
            .zip(&self.inside)
            .zip(&self.inv_weights)
            .map(|((a, b), w)| (a - b) * (a - b) * w)
            .sum()
    }
}

/// τ_{A,d} = 2 √(2^d / d) ξ_A.
pub fn tau(d: usize, a_bound: f64) -> f64 {
    2.0 * basis_bound(d) / (d as f64).sqrt() * xi(a_bound)
}

/// τ_{A,d} Σ_J, the bound on E d(f̂_J, f_J).
pub fn variance_bound(schedule: &BlockSchedule, n: u64, a_bound: f64) -> Result<f64> {
    let alloc = schedule.allocated()?;
    if a_bound < alloc.alpha {
        return Err(Error::InvalidParameter(format!(
            "A = {a_bound} is below the total budget {}",
            alloc.alpha
        )));
    }
    let (_, sigma) = schedule.sigma_terms(n)?;
    Ok(tau(schedule.dim(), a_bound) * sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::MultiIndex;
    use crate::mechanism::PrivatizedRecord;
    use crate::schedule::dyadic_partition;

    fn sched(j: u64, d: usize, delta: f64) -> Arc<BlockSchedule> {
        Arc::new(
            dyadic_partition(j, d)
                .unwrap()
                .allocate_budget(1.0, &SobolevParams::isotropic(d, delta, 1.0).unwrap())
                .unwrap(),
        )
    }

    #[test]
    fn tau_value() {
        assert!((tau(1, 1.0) - 6.1207).abs() < 1e-3);
        assert!((tau(1, 1.0) - 2.0 * 2f64.sqrt() * xi(1.0)).abs() < 1e-15);
        let s = sched(1, 1, 1.0);
        assert!((variance_bound(&s, 400, 1.0).unwrap() - tau(1, 1.0) / 20.0).abs() < 1e-12);
    }

    #[test]
    fn aggregate_trivial() {
        let s = sched(3, 1, 1.0);
        let rec = PrivatizedRecord {
            values: vec![1.5, -2.0, 0.25],
        };
        let ds = PrivatizedDataset {
            schedule: s.clone(),
            root_seed: 0,
            records: vec![rec.clone()],
        };
        assert_eq!(aggregate(&ds).unwrap().coefficients, rec.values);
        let ds = PrivatizedDataset {
            schedule: s,
            root_seed: 0,
            records: vec![rec.clone(); 7],
        };
        assert_eq!(aggregate(&ds).unwrap().coefficients, rec.values);
    }

    #[test]
    fn risk_examples() {
        let s = sched(3, 2, 1.0);
        let mut truth = CoefficientTable::cube(2, 3).unwrap();
        truth.set(MultiIndex::new(vec![1, 1]).unwrap(), 1.0).unwrap();
        truth.set(MultiIndex::new(vec![2, 3]).unwrap(), 0.1).unwrap();
        let mut est = EstimateResult {
            schedule: s,
            n: 1,
            coefficients: vec![0.0; 9],
            block_variance: vec![],
            root_seed: None,
        };
        for i in 0..9 {
            est.coefficients[i] = truth.get(&est.schedule.index_of(i));
        }
        let params = SobolevParams::isotropic(2, 1.0, 1.0).unwrap();
        let r = private_risk(&est, &truth, &params).unwrap();
        assert_eq!(r.head, 0.0);
        assert!((r.tail - 1.0 / 9.0).abs() < 1e-15);

        est.coefficients[0] += 0.01;
        let r = private_risk(&est, &truth, &params).unwrap();
        assert!((r.head - 0.01 / 2f64.sqrt()).abs() < 1e-15);

        let proj = TruthProjection::new(&truth, &est.schedule).unwrap();
        assert!((proj.head_distance(&est.coefficients) - r.head).abs() < 1e-15);

        let small = CoefficientTable::cube(2, 1).unwrap();
        assert!(matches!(private_risk(&est, &small, &params), Err(Error::SupportMismatch(_))));
    }
}
