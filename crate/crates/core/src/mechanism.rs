//! The coordinate block privacy channel.
//!
//! For a block of k coefficients with budget a, a record x is released as
//! follows:
//!
//! 1. Ṽ_j = ±B_0 independently, with P(Ṽ_j = +B_0) = 1/2 + φ_j(x)/(2B_0).
//! 2. Y ~ Bernoulli(p_k). If Y = 1, T ~ Bernoulli(π_a) and Z is uniform on
//!    {z ∈ {±B_k(a)}^k : ⟨z, Ṽ⟩ > 0} when T = 1, on ⟨z, Ṽ⟩ < 0 when T = 0.
//!    If Y = 0 (only possible for even k), Z is uniform on ⟨z, Ṽ⟩ = 0.
//!
//! With B_k(a) = B_0 (e^a + 1)/(e^a − 1) Γ_k this is a-LDP and E[Z | x] = φ(x).
//! Sampling goes through the agreement signs s_j = sign(z_j Ṽ_j): the number
//! of agreements m is drawn from C(k, m) restricted to m > k/2 (mirrored for
//! T = 0, fixed at k/2 for Y = 0) and then placed uniformly at random.

use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{basis_bound, fill_basis_1d, SobolevParams};
use crate::rng::{StreamFactory, StreamRng};
use crate::schedule::{BlockSchedule, ScheduleKind};

/// Largest block the sampler accepts.
pub const MAX_BLOCK: usize = 1 << 20;
/// Largest block whose output distribution is enumerated exactly.
pub const MAX_ENUMERATION: usize = 10;

/// ln C(n, r).
fn ln_binomial(n: u64, r: u64) -> f64 {
    let r = r.min(n - r);
    (1..=r).map(|i| ((n - r + i) as f64 / i as f64).ln()).sum()
}

/// C(n, r) exactly when it fits in u128.
fn binomial_u128(n: u64, r: u64) -> Option<u128> {
    let r = r.min(n - r);
    let mut c: u128 = 1;
    for i in 0..r {
        c = c.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(c)
}

/// Γ_k with 1/Γ_k = C(k−1, ⌊(k−1)/2⌋) / 2^{k−1}.
pub fn gamma_k(k: usize) -> f64 {
    assert!(k >= 1, "block size must be positive");
    let n = (k - 1) as u64;
    let r = n / 2;
    match binomial_u128(n, r) {
        Some(c) if n < 120 => 2f64.powi(n as i32) / c as f64,
        _ => (n as f64 * std::f64::consts::LN_2 - ln_binomial(n, r)).exp(),
    }
}

/// p_k = P(⟨Z, Ṽ⟩ ≠ 0): 1 for odd k, 1 − C(k, k/2)/2^k for even k.
pub fn p_nonzero(k: usize) -> f64 {
    if k % 2 == 1 {
        return 1.0;
    }
    let n = k as u64;
    let central = match binomial_u128(n, n / 2) {
        Some(c) if n < 120 => c as f64 / 2f64.powi(n as i32),
        _ => (ln_binomial(n, n / 2) - n as f64 * std::f64::consts::LN_2).exp(),
    };
    1.0 - central
}

/// ξ_A = A (e^A + 1)/(e^A − 1).
pub fn xi(a_bound: f64) -> f64 {
    a_bound * (a_bound.exp() + 1.0) / a_bound.exp_m1()
}

/// Deterministic bound 2 ξ_A B_0 √k / a on |Z_j| for budgets a ≤ A.
pub fn magnitude_bound(k: usize, a: f64, d: usize, a_bound: f64) -> f64 {
    2.0 * xi(a_bound) * basis_bound(d) * (k as f64).sqrt() / a
}

/// Constants of one block channel.
#[derive(Debug, Clone)]
pub struct ChannelParams {
    pub k: usize,
    pub budget: f64,
    pub b0: f64,
    pub gamma: f64,
    /// Output magnitude B_k(a).
    pub magnitude: f64,
    pub pi: f64,
    pub p_nonzero: f64,
    /// CDF of the agreement count over m = ⌊k/2⌋+1, ..., k, weights C(k, m).
    upper_cdf: Arc<Vec<f64>>,
}

impl ChannelParams {
    pub fn new(k: usize, budget: f64, d: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("block size must be positive".into()));
        }
        if k > MAX_BLOCK {
            return Err(Error::BlockTooLarge {
                size: k,
                limit: MAX_BLOCK,
            });
        }
        if !(budget > 0.0) || !budget.is_finite() {
            return Err(Error::InvalidParameter(format!("budget must be positive, got {budget}")));
        }
        let b0 = basis_bound(d);
        let gamma = gamma_k(k);
        let ea = budget.exp();
        Ok(ChannelParams {
            k,
            budget,
            b0,
            gamma,
            magnitude: b0 * (ea + 1.0) / budget.exp_m1() * gamma,
            pi: ea / (1.0 + ea),
            p_nonzero: p_nonzero(k),
            upper_cdf: Arc::new(upper_count_cdf(k)),
        })
    }

    /// Same channel with a different half-space probability. Only meant for
    /// negative controls; the result is not a-LDP in general.
    pub fn with_pi(&self, pi: f64) -> Self {
        ChannelParams { pi, ..self.clone() }
    }

    fn m_min(&self) -> usize {
        self.k / 2 + 1
    }

    fn sample_upper_count<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let i = self.upper_cdf.partition_point(|&c| c <= u);
        self.m_min() + i.min(self.upper_cdf.len() - 1)
    }
}

fn upper_count_cdf(k: usize) -> Vec<f64> {
    let m_min = k / 2 + 1;
    // ln C(k, m) from m = k downwards.
    let mut lw = vec![0.0; k - m_min + 1];
    for m in (m_min..k).rev() {
        let next = lw[m + 1 - m_min];
        lw[m - m_min] = next + ((m + 1) as f64 / (k - m) as f64).ln();
    }
    let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|&l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = w
        .iter()
        .map(|&x| {
            acc += x;
            acc / total
        })
        .collect();
    *cdf.last_mut().unwrap() = 1.0;
    cdf
}

/// Privatizes one block of basis values into `out` (same length).
pub fn privatize_block<R: Rng + ?Sized>(
    phi: &[f64],
    params: &ChannelParams,
    rng: &mut R,
    out: &mut [f64],
) -> Result<()> {
    let k = params.k;
    if phi.len() != k || out.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: phi.len().min(out.len()),
        });
    }
    let b0 = params.b0;
    let tol = b0 * (1.0 + 1e-12);
    for (o, &p) in out.iter_mut().zip(phi) {
        if !(p.abs() <= tol) {
            return Err(Error::PhiOutOfRange { value: p, bound: b0 });
        }
        let plus = 0.5 + p / (2.0 * b0);
        *o = if rng.random::<f64>() < plus { 1.0 } else { -1.0 };
    }
    let y = k % 2 == 1 || rng.random::<f64>() < params.p_nonzero;
    let m = if y {
        let t = rng.random::<f64>() < params.pi;
        let m = params.sample_upper_count(rng);
        if t {
            m
        } else {
            k - m
        }
    } else {
        k / 2
    };
    // Sequential selection of exactly m agreeing positions out of k.
    let bmag = params.magnitude;
    let mut rem_m = m;
    let mut rem_k = k;
    for o in out.iter_mut() {
        // u·rem_k < rem_m is always true once rem_m = rem_k and never when rem_m = 0.
        let agree = rng.random::<f64>() * (rem_k as f64) < rem_m as f64;
        rem_m -= agree as usize;
        rem_k -= 1;
        *o *= if agree { bmag } else { -bmag };
    }
    Ok(())
}

/// Exact output distribution of a block channel for k ≤ 10. Entry `z` is
/// the probability of the output whose coordinate i is +B when bit i of `z`
/// is set and −B otherwise.
pub fn channel_pmf(params: &ChannelParams, phi: &[f64]) -> Result<Vec<f64>> {
    let k = params.k;
    if k > MAX_ENUMERATION {
        return Err(Error::BlockTooLarge {
            size: k,
            limit: MAX_ENUMERATION,
        });
    }
    if phi.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: phi.len(),
        });
    }
    let b0 = params.b0;
    if let Some(&p) = phi.iter().find(|p| !(p.abs() <= b0 * (1.0 + 1e-12))) {
        return Err(Error::PhiOutOfRange { value: p, bound: b0 });
    }
    let n = 1usize << k;
    let plus: Vec<f64> = phi.iter().map(|&p| (0.5 + p / (2.0 * b0)).clamp(0.0, 1.0)).collect();
    let pv: Vec<f64> = (0..n)
        .map(|v| {
            (0..k)
                .map(|i| if v >> i & 1 == 1 { plus[i] } else { 1.0 - plus[i] })
                .product()
        })
        .collect();
    // P(z | ṽ) as a function of the agreement count.
    let half = 2f64.powi(k as i32 - 1);
    let cond: Vec<f64> = (0..=k)
        .map(|m| {
            if 2 * m > k {
                params.pi / half
            } else if 2 * m < k {
                (1.0 - params.pi) / half
            } else {
                1.0 / (2.0 * half)
            }
        })
        .collect();
    let mask = n - 1;
    Ok((0..n)
        .map(|z| {
            pv.iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(v, &p)| {
                    let agree = (!(z ^ v) & mask).count_ones() as usize;
                    p * cond[agree]
                })
                .sum()
        })
        .collect())
}

/// max over outputs z and pairs of inputs of ln P(z|φ) − ln P(z|φ').
pub fn max_log_ratio(params: &ChannelParams, inputs: &[Vec<f64>]) -> Result<f64> {
    let n = 1usize << params.k;
    let mut hi = vec![f64::NEG_INFINITY; n];
    let mut lo = vec![f64::INFINITY; n];
    for phi in inputs {
        let pmf = channel_pmf(params, phi)?;
        for (z, p) in pmf.iter().enumerate() {
            let l = p.ln();
            hi[z] = hi[z].max(l);
            lo[z] = lo[z].min(l);
        }
    }
    Ok(hi
        .iter()
        .zip(&lo)
        .map(|(h, l)| h - l)
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockLdp {
    pub label: Vec<u32>,
    pub size: usize,
    pub budget: f64,
    pub max_log_ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LdpReport {
    pub alpha: f64,
    pub total_budget: f64,
    pub blocks: Vec<BlockLdp>,
    pub pass: bool,
}

/// Exact LDP audit of every block of an allocated schedule over the given points.
pub fn verify_ldp(schedule: &BlockSchedule, points: &[Vec<f64>]) -> Result<LdpReport> {
    let alloc = schedule.allocated()?;
    if let Some(b) = schedule.blocks().iter().find(|b| b.size > MAX_ENUMERATION) {
        return Err(Error::BlockTooLarge {
            size: b.size,
            limit: MAX_ENUMERATION,
        });
    }
    let mut eval = BasisEvaluator::new(schedule);
    let phis: Vec<Vec<f64>> = points
        .iter()
        .map(|x| {
            let mut out = vec![0.0; schedule.num_coefficients()];
            eval.fill(x, &mut out).map(|_| out)
        })
        .collect::<Result<_>>()?;
    let mut blocks = Vec::new();
    for (b, &a) in schedule.blocks().iter().zip(&alloc.budgets) {
        let params = ChannelParams::new(b.size, a, schedule.dim())?;
        let inputs: Vec<Vec<f64>> = phis
            .iter()
            .map(|p| p[b.offset..b.offset + b.size].to_vec())
            .collect();
        let r = max_log_ratio(&params, &inputs)?;
        blocks.push(BlockLdp {
            label: b.label.clone(),
            size: b.size,
            budget: a,
            max_log_ratio: r,
            pass: r <= a + 1e-10,
        });
    }
    let total: f64 = alloc.budgets.iter().sum();
    let pass = blocks.iter().all(|b| b.pass) && total <= alloc.alpha * (1.0 + 1e-12);
    Ok(LdpReport {
        alpha: alloc.alpha,
        total_budget: total,
        blocks,
        pass,
    })
}

/// Evaluates all basis functions of a schedule at a point, in flat order.
pub struct BasisEvaluator<'a> {
    schedule: &'a BlockSchedule,
    axis: Vec<Vec<f64>>,
}

impl<'a> BasisEvaluator<'a> {
    pub fn new(schedule: &'a BlockSchedule) -> Self {
        BasisEvaluator {
            schedule,
            axis: schedule
                .axis_bounds()
                .iter()
                .map(|&b| vec![0.0; b as usize])
                .collect(),
        }
    }

    pub fn fill(&mut self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let d = self.schedule.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        if let Some(&bad) = x.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::InvalidParameter(format!("point coordinate {bad} outside [0,1]")));
        }
        for (tab, &t) in self.axis.iter_mut().zip(x) {
            fill_basis_1d(t, tab);
        }
        if d == 1 {
            // One-dimensional schedules list j = 1..J in natural order.
            out.copy_from_slice(&self.axis[0]);
            return Ok(());
        }
        for (i, o) in out.iter_mut().enumerate() {
            let c = self.schedule.coords_of(i);
            *o = c
                .iter()
                .enumerate()
                .map(|(m, &cm)| self.axis[m][(cm - 1) as usize])
                .product();
        }
        Ok(())
    }
}

/// A schedule with its per-block channels and a stream factory; privatizes
/// records independently of the order in which they are processed.
#[derive(Clone)]
pub struct Privatizer {
    schedule: Arc<BlockSchedule>,
    channels: Vec<ChannelParams>,
    streams: StreamFactory,
}

impl Privatizer {
    pub fn new(schedule: Arc<BlockSchedule>, streams: StreamFactory) -> Result<Self> {
        let alloc = schedule.allocated()?;
        let channels = schedule
            .blocks()
            .iter()
            .zip(&alloc.budgets)
            .map(|(b, &a)| ChannelParams::new(b.size, a, schedule.dim()))
            .collect::<Result<_>>()?;
        Ok(Privatizer {
            schedule,
            channels,
            streams,
        })
    }

    pub fn schedule(&self) -> &Arc<BlockSchedule> {
        &self.schedule
    }

    pub fn channels(&self) -> &[ChannelParams] {
        &self.channels
    }

    /// Privatizes precomputed basis values of record `i` into `out`.
    pub fn privatize_phi(&self, i: u64, phi: &[f64], out: &mut [f64]) -> Result<()> {
        for (bi, (b, ch)) in self.schedule.blocks().iter().zip(&self.channels).enumerate() {
            let mut rng: StreamRng = self.streams.stream(i, bi as u64);
            let r = b.offset..b.offset + b.size;
            privatize_block(&phi[r.clone()], ch, &mut rng, &mut out[r])?;
        }
        Ok(())
    }
}

/// Private views of one record, in the schedule's flat coefficient order.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivatizedRecord {
    pub values: Vec<f64>,
}

/// Evaluates the basis at `x` and privatizes every block with its own budget.
pub fn privatize_record(x: &[f64], privatizer: &Privatizer, record_index: u64) -> Result<PrivatizedRecord> {
    let n = privatizer.schedule.num_coefficients();
    let mut phi = vec![0.0; n];
    BasisEvaluator::new(&privatizer.schedule).fill(x, &mut phi)?;
    let mut values = vec![0.0; n];
    privatizer.privatize_phi(record_index, &phi, &mut values)?;
    Ok(PrivatizedRecord { values })
}

/// The comparator channel that privatizes all J^d coefficients as one block
/// with budget α. Builds its channel on every call; simulations should use a
/// [`Privatizer`] over [`BlockSchedule::global`] instead.
pub fn global_privatize<R: Rng + ?Sized>(
    x: &[f64],
    j: u64,
    d: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let sched = BlockSchedule::global(j, d)?
        .allocate_budget(alpha, &SobolevParams::isotropic(d, 1.0, 1.0)?)?;
    let k = sched.num_coefficients();
    let params = ChannelParams::new(k, alpha, d)?;
    let mut phi = vec![0.0; k];
    BasisEvaluator::new(&sched).fill(x, &mut phi)?;
    let mut out = vec![0.0; k];
    privatize_block(&phi, &params, rng, &mut out)?;
    Ok(out)
}

/// Private views of a whole sample together with the schedule and seed that produced them.
#[derive(Debug, Clone)]
pub struct PrivatizedDataset {
    pub schedule: Arc<BlockSchedule>,
    pub root_seed: u64,
    pub records: Vec<PrivatizedRecord>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    root_seed: u64,
    schedule: BlockSchedule,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: Header,
}

#[derive(Serialize, Deserialize)]
struct BlockLine {
    l: Vec<u32>,
    z: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    i: u64,
    blocks: Vec<BlockLine>,
}

const FORMAT: &str = "ldp-sobolev/private-views";

impl PrivatizedDataset {
    /// Privatizes every point with record index equal to its position.
    pub fn from_points(points: &[Vec<f64>], schedule: Arc<BlockSchedule>, root_seed: u64, domain: &[u64]) -> Result<Self> {
        let streams = StreamFactory::new(root_seed, domain);
        let p = Privatizer::new(schedule.clone(), streams)?;
        let records = points
            .iter()
            .enumerate()
            .map(|(i, x)| privatize_record(x, &p, i as u64))
            .collect::<Result<_>>()?;
        Ok(PrivatizedDataset {
            schedule,
            root_seed,
            records,
        })
    }

    /// JSON lines: a header line, then one record per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = HeaderLine {
            header: Header {
                format: FORMAT.into(),
                version: 1,
                root_seed: self.root_seed,
                schedule: (*self.schedule).clone(),
            },
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for (i, r) in self.records.iter().enumerate() {
            let line = RecordLine {
                i: i as u64,
                blocks: self
                    .schedule
                    .blocks()
                    .iter()
                    .map(|b| BlockLine {
                        l: b.label.clone(),
                        z: r.values[b.offset..b.offset + b.size].to_vec(),
                    })
                    .collect(),
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let first = lines.next().ok_or(Error::EmptyDataset)??;
        let header: HeaderLine = serde_json::from_str(&first)?;
        if header.header.format != FORMAT {
            return Err(Error::InvalidParameter(format!(
                "unknown dataset format {}",
                header.header.format
            )));
        }
        let schedule = Arc::new(header.header.schedule);
        let alloc = schedule.allocated()?;
        let magnitudes: Vec<f64> = schedule
            .blocks()
            .iter()
            .zip(&alloc.budgets)
            .map(|(b, &a)| ChannelParams::new(b.size, a, schedule.dim()).map(|c| c.magnitude))
            .collect::<Result<_>>()?;
        let mut records = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: RecordLine = serde_json::from_str(&line)?;
            if rec.blocks.len() != schedule.blocks().len() {
                return Err(Error::ScheduleMismatch(format!(
                    "record {} has {} blocks, schedule has {}",
                    rec.i,
                    rec.blocks.len(),
                    schedule.blocks().len()
                )));
            }
            let mut values = vec![0.0; schedule.num_coefficients()];
            for ((bl, b), &mag) in rec.blocks.iter().zip(schedule.blocks()).zip(&magnitudes) {
                if bl.l != b.label || bl.z.len() != b.size {
                    return Err(Error::ScheduleMismatch(format!(
                        "record {} block {:?} does not match schedule block {:?}",
                        rec.i, bl.l, b.label
                    )));
                }
                if let Some(z) = bl.z.iter().find(|z| (z.abs() - mag).abs() > 1e-9 * mag) {
                    return Err(Error::ScheduleMismatch(format!(
                        "record {} block {:?} has value {z}, expected magnitude {mag}",
                        rec.i, b.label
                    )));
                }
                values[b.offset..b.offset + b.size].copy_from_slice(&bl.z);
            }
            records.push(PrivatizedRecord { values });
        }
        Ok(PrivatizedDataset {
            schedule,
            root_seed: header.header.root_seed,
            records,
        })
    }

    pub fn is_global(&self) -> bool {
        self.schedule.kind() == ScheduleKind::Global
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::dyadic_partition;
    use rand::SeedableRng;

    #[test]
    fn gamma_table() {
        assert_eq!(gamma_k(1), 1.0);
        assert_eq!(gamma_k(2), 2.0);
        assert_eq!(gamma_k(3), 2.0);
        assert!((gamma_k(4) - 8.0 / 3.0).abs() < 1e-15);
        // exact and log-space branches agree at the switch
        let n = 130u64;
        let log_form = (n as f64 * std::f64::consts::LN_2 - ln_binomial(n, n / 2)).exp();
        assert!((gamma_k(131) / log_form - 1.0).abs() < 1e-12);
        for k in 1..=64 {
            assert!(gamma_k(k) <= 2.0 * (k as f64).sqrt());
        }
    }

    #[test]
    fn p_values() {
        assert_eq!(p_nonzero(1), 1.0);
        assert_eq!(p_nonzero(2), 0.5);
        assert!((p_nonzero(4) - (1.0 - 6.0 / 16.0)).abs() < 1e-15);
        for k in [2usize, 4, 6] {
            let zero = (0..1u32 << k).filter(|z| z.count_ones() as usize * 2 == k).count();
            assert!((p_nonzero(k) - (1.0 - zero as f64 / (1u64 << k) as f64)).abs() < 1e-15);
        }
    }

    #[test]
    fn k1_channel() {
        let c = ChannelParams::new(1, 0.8, 1).unwrap();
        let pmf = channel_pmf(&c, &[c.b0]).unwrap();
        assert!((pmf[1] - c.pi).abs() < 1e-15);
        assert!((pmf[0] - (1.0 - c.pi)).abs() < 1e-15);
        let flat = channel_pmf(&c, &[0.0]).unwrap();
        assert!((flat[0] - 0.5).abs() < 1e-15 && (flat[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn k2_hyperplane_mass() {
        let c = ChannelParams::new(2, 1.0, 1).unwrap();
        // With φ = B_0 in both coordinates Ṽ = (+,+), so D⁰ = {(+,−),(−,+)}.
        let pmf = channel_pmf(&c, &[c.b0, c.b0]).unwrap();
        assert!((pmf[0b01] - 0.25).abs() < 1e-15);
        assert!((pmf[0b10] - 0.25).abs() < 1e-15);
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampler_magnitudes_and_counts() {
        let c = ChannelParams::new(6, 0.5, 1).unwrap();
        let mut rng = StreamRng::seed_from_u64(1);
        let mut out = vec![0.0; 6];
        for _ in 0..1000 {
            privatize_block(&[0.3, -1.0, 1.2, 0.0, 0.4, -0.2], &c, &mut rng, &mut out).unwrap();
            assert!(out.iter().all(|z| z.abs() == c.magnitude));
        }
        assert!(privatize_block(&[2.0, 0.0, 0.0, 0.0, 0.0, 0.0], &c, &mut rng, &mut out).is_err());
    }

    #[test]
    fn ldp_examples() {
        let s = dyadic_partition(3, 1)
            .unwrap()
            .allocate_budget(0.5, &SobolevParams::isotropic(1, 1.0, 1.0).unwrap())
            .unwrap();
        let pts: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 0.618) % 1.0]).collect();
        let rep = verify_ldp(&s, &pts).unwrap();
        assert!(rep.pass);

        let tiny = ChannelParams::new(4, 1e-6, 1).unwrap();
        let inputs = vec![vec![1.4, -1.4, 0.0, 1.0], vec![-1.4, 1.4, 1.0, -1.3]];
        assert!(max_log_ratio(&tiny, &inputs).unwrap() <= 1e-5);

        let c = ChannelParams::new(2, 0.5, 1).unwrap();
        let bad = c.with_pi((1.0f64).exp() / (1.0 + (1.0f64).exp()));
        let inputs = vec![vec![c.b0, c.b0], vec![-c.b0, -c.b0]];
        assert!(max_log_ratio(&bad, &inputs).unwrap() > 0.5 + 1e-10);
    }

    #[test]
    fn record_roundtrip() {
        let s = Arc::new(
            dyadic_partition(7, 1)
                .unwrap()
                .allocate_budget(1.0, &SobolevParams::isotropic(1, 2.0, 1.0).unwrap())
                .unwrap(),
        );
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 / 5.0]).collect();
        let ds = PrivatizedDataset::from_points(&pts, s, 42, &[9]).unwrap();
        let mut buf = Vec::new();
        ds.write_jsonl(&mut buf).unwrap();
        let back = PrivatizedDataset::read_jsonl(&buf[..]).unwrap();
        assert_eq!(back.records, ds.records);
        assert_eq!(back.root_seed, 42);
    }
}
