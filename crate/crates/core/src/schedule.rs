//! Dyadic block partitions of {1..J_1} × ... × {1..J_d} and the per-block
//! privacy budget split.
//!
//! Block 𝓵 = (ℓ_1, ..., ℓ_d) covers ∏_m {2^{ℓ_m}, ..., 2^{ℓ_m+1} − 1} and has
//! d_𝓵 = ∏ 2^{ℓ_m} coordinates. Budgets follow
//! α_𝓵 = α ∏_m 2^{ℓ_m(1 − δ_m/d)/2} / S, which minimises the variance term
//! Σ σ_𝓵 under Σ α_𝓵 = α.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fourier::{weight_from_coords, MultiIndex, SobolevParams};

/// Largest allowed total number of coefficients in a schedule.
pub const MAX_COEFFICIENTS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    /// Dyadic blocks, each privatized with its own budget.
    Block,
    /// All coefficients privatized at once as a single block.
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub label: Vec<u32>,
    /// Inclusive per-axis index ranges.
    pub start: Vec<u32>,
    pub end: Vec<u32>,
    pub size: usize,
    /// Position of the block's first coordinate in the flat coefficient order.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub alpha: f64,
    pub delta: SobolevParams,
    pub budgets: Vec<f64>,
    /// S_{d,δ}(J) = Σ_𝓵 ∏_m 2^{ℓ_m(1−δ_m/d)/2}.
    pub s: f64,
    /// 1 / w_δ(j) for every coordinate, in flat order.
    pub inv_weights: Vec<f64>,
}

/// Regime of the discriminator smoothness relative to the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Sub,
    Critical,
    Super,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSchedule {
    kind: ScheduleKind,
    d: usize,
    levels: Vec<u32>,
    axis_bounds: Vec<u32>,
    blocks: Vec<Block>,
    coords: Vec<u32>,
    allocation: Option<Allocation>,
}

/// Returns L with J = 2^{L+1} − 1.
pub fn dyadic_level(j: u64) -> Result<u32> {
    if j == 0 || !(j + 1).is_power_of_two() {
        return Err(Error::NotDyadic(j));
    }
    Ok((j + 1).trailing_zeros() - 1)
}

/// J = 2^{L+1} − 1.
pub fn dyadic_j(level: u32) -> u64 {
    (1u64 << (level + 1)) - 1
}

/// Dyadic partition of {1..J}^d.
pub fn dyadic_partition(j: u64, d: usize) -> Result<BlockSchedule> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be at least 1".into()));
    }
    let l = dyadic_level(j)?;
    BlockSchedule::from_levels(vec![l; d])
}

/// Partition for anisotropic smoothness: axis m gets J_m = 2^{L_m+1} − 1 with
/// L_m = ⌊log₂(J^{β̄/β_m} + 1)⌋ − 1, β̄ the harmonic mean of β.
pub fn anisotropic_partition(j: u64, beta: &SobolevParams, delta: &SobolevParams) -> Result<BlockSchedule> {
    dyadic_level(j)?;
    beta.validate()?;
    delta.validate()?;
    if beta.dim() != delta.dim() {
        return Err(Error::DimensionMismatch {
            expected: beta.dim(),
            got: delta.dim(),
        });
    }
    let bbar = beta.harmonic_mean();
    let dbar = delta.harmonic_mean();
    for m in 0..beta.dim() {
        let br = bbar / beta.smoothness[m];
        let dr = dbar / delta.smoothness[m];
        if (br - dr).abs() > 1e-9 {
            return Err(Error::AnisotropyMismatch {
                axis: m,
                beta_ratio: br,
                delta_ratio: dr,
            });
        }
    }
    let levels = beta
        .smoothness
        .iter()
        .map(|&bm| {
            let t = (j as f64).powf(bbar / bm);
            let lm = (t + 1.0).log2().floor() as i64 - 1;
            lm.max(0) as u32
        })
        .collect();
    BlockSchedule::from_levels(levels)
}

impl BlockSchedule {
    /// Dyadic schedule with per-axis levels L_m.
    pub fn from_levels(levels: Vec<u32>) -> Result<Self> {
        let d = levels.len();
        if d == 0 {
            return Err(Error::InvalidParameter("d must be at least 1".into()));
        }
        if levels.iter().any(|&l| l > 30) {
            return Err(Error::InvalidParameter(format!("levels too large: {levels:?}")));
        }
        let axis_bounds: Vec<u32> = levels.iter().map(|&l| dyadic_j(l) as u32).collect();
        let total = checked_total(&axis_bounds)?;

        let mut blocks = Vec::new();
        let mut coords = Vec::with_capacity(total * d);
        let mut label = vec![0u32; d];
        loop {
            let start: Vec<u32> = label.iter().map(|&l| 1u32 << l).collect();
            let end: Vec<u32> = label.iter().map(|&l| (2u32 << l) - 1).collect();
            let offset = coords.len() / d;
            push_box(&start, &end, &mut coords);
            let size = coords.len() / d - offset;
            blocks.push(Block {
                label: label.clone(),
                start,
                end,
                size,
                offset,
            });
            if !next_lex(&mut label, &levels) {
                break;
            }
        }
        Ok(BlockSchedule {
            kind: ScheduleKind::Block,
            d,
            levels,
            axis_bounds,
            blocks,
            coords,
            allocation: None,
        })
    }

    /// Single block holding all of {1..J}^d, for the global comparator mechanism.
    pub fn global(j: u64, d: usize) -> Result<Self> {
        let l = dyadic_level(j)?;
        if d == 0 {
            return Err(Error::InvalidParameter("d must be at least 1".into()));
        }
        let axis_bounds = vec![j as u32; d];
        let total = checked_total(&axis_bounds)?;
        let start = vec![1u32; d];
        let mut coords = Vec::with_capacity(total * d);
        push_box(&start, &axis_bounds, &mut coords);
        Ok(BlockSchedule {
            kind: ScheduleKind::Global,
            d,
            levels: vec![l; d],
            blocks: vec![Block {
                label: vec![0; d],
                start,
                end: axis_bounds.clone(),
                size: total,
                offset: 0,
            }],
            axis_bounds,
            coords,
            allocation: None,
        })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn axis_bounds(&self) -> &[u32] {
        &self.axis_bounds
    }

    /// J for isotropic schedules (the largest axis bound otherwise).
    pub fn j(&self) -> u64 {
        self.axis_bounds.iter().copied().max().unwrap_or(1) as u64
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn num_coefficients(&self) -> usize {
        self.coords.len() / self.d
    }

    /// Coordinates of the i-th coefficient in flat order.
    pub fn coords_of(&self, i: usize) -> &[u32] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn index_of(&self, i: usize) -> MultiIndex {
        MultiIndex::new(self.coords_of(i).to_vec()).expect("schedule coordinates are positive")
    }

    pub fn allocation(&self) -> Option<&Allocation> {
        self.allocation.as_ref()
    }

    pub fn allocated(&self) -> Result<&Allocation> {
        self.allocation.as_ref().ok_or(Error::Unallocated)
    }

    /// Splits α across blocks. The global schedule puts all of α on its one block.
    pub fn allocate_budget(&self, alpha: f64, delta: &SobolevParams) -> Result<BlockSchedule> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        delta.validate()?;
        if delta.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: delta.dim(),
            });
        }
        let d = self.d as f64;
        let raw: Vec<f64> = match self.kind {
            ScheduleKind::Global => vec![1.0],
            ScheduleKind::Block => self
                .blocks
                .iter()
                .map(|b| {
                    b.label
                        .iter()
                        .zip(&delta.smoothness)
                        .map(|(&l, &dm)| 2f64.powf(l as f64 * (1.0 - dm / d) / 2.0))
                        .product()
                })
                .collect(),
        };
        let s: f64 = raw.iter().sum();
        let mut budgets: Vec<f64> = raw.iter().map(|r| alpha * r / s).collect();
        // Put the rounding residue on the largest budget so Σα_𝓵 = α as closely as f64 allows.
        let residue = alpha - budgets.iter().sum::<f64>();
        if let Some(imax) = (0..budgets.len()).max_by(|&a, &b| budgets[a].total_cmp(&budgets[b])) {
            budgets[imax] += residue;
        }
        let inv_weights = (0..self.num_coefficients())
            .map(|i| 1.0 / weight_from_coords(self.coords_of(i), &delta.smoothness))
            .collect();
        let mut out = self.clone();
        out.allocation = Some(Allocation {
            alpha,
            delta: delta.with_radius(1.0),
            budgets,
            s,
            inv_weights,
        });
        Ok(out)
    }

    /// (σ_𝓵 per block, Σ_J) with σ_𝓵 = ∏_m 2^{ℓ_m(1−δ_m/d)} / (√n α_𝓵) and the
    /// closed form Σ_J = S² / √(nα²).
    pub fn sigma_terms(&self, n: u64) -> Result<(Vec<f64>, f64)> {
        let alloc = self.allocated()?;
        if self.kind != ScheduleKind::Block {
            return Err(Error::ScheduleMismatch(
                "variance terms are defined for dyadic block schedules".into(),
            ));
        }
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let d = self.d as f64;
        let sqrt_n = (n as f64).sqrt();
        let sigma = self
            .blocks
            .iter()
            .zip(&alloc.budgets)
            .map(|(b, &a)| {
                let num: f64 = b
                    .label
                    .iter()
                    .zip(&alloc.delta.smoothness)
                    .map(|(&l, &dm)| 2f64.powf(l as f64 * (1.0 - dm / d)))
                    .product();
                num / (sqrt_n * a)
            })
            .collect();
        let closed = alloc.s * alloc.s / (sqrt_n * alloc.alpha);
        Ok((sigma, closed))
    }

    /// Human-readable table of block label, size and budget.
    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} {:>10} {:>14}", "block", "size", "budget");
        for (i, b) in self.blocks.iter().enumerate() {
            let budget = self
                .allocation
                .as_ref()
                .map(|a| format!("{:.6e}", a.budgets[i]))
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "{:<16} {:>10} {:>14}", format!("{:?}", b.label), b.size, budget);
        }
        if let Some(a) = &self.allocation {
            let _ = writeln!(
                out,
                "total alpha = {}, S = {:.6}, coefficients = {}",
                a.alpha,
                a.s,
                self.num_coefficients()
            );
        }
        out
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("schedule serializes");
        let digest = Sha256::digest(&json);
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

fn checked_total(bounds: &[u32]) -> Result<usize> {
    bounds
        .iter()
        .try_fold(1usize, |acc, &b| acc.checked_mul(b as usize))
        .filter(|&t| t <= MAX_COEFFICIENTS)
        .ok_or(Error::BlockTooLarge {
            size: bounds.iter().map(|&b| b as usize).product::<usize>(),
            limit: MAX_COEFFICIENTS,
        })
}

/// Appends every index of the box ∏[start_m, end_m] in lexicographic order.
fn push_box(start: &[u32], end: &[u32], coords: &mut Vec<u32>) {
    let mut cur = start.to_vec();
    loop {
        coords.extend_from_slice(&cur);
        let mut m = cur.len();
        loop {
            if m == 0 {
                return;
            }
            m -= 1;
            if cur[m] < end[m] {
                cur[m] += 1;
                for (k, c) in cur.iter_mut().enumerate().skip(m + 1) {
                    *c = start[k];
                }
                break;
            }
        }
    }
}

fn next_lex(label: &mut [u32], levels: &[u32]) -> bool {
    for m in (0..label.len()).rev() {
        if label[m] < levels[m] {
            label[m] += 1;
            for l in label.iter_mut().skip(m + 1) {
                *l = 0;
            }
            return true;
        }
    }
    false
}

fn regime_of(delta: f64, d: f64) -> Regime {
    let tol = 1e-12 * d.max(1.0);
    if (delta - d).abs() <= tol {
        Regime::Critical
    } else if delta < d {
        Regime::Sub
    } else {
        Regime::Super
    }
}

/// Largest dyadic J = 2^{L+1} − 1 not exceeding `target` (J = 1 when target < 3).
pub fn round_down_dyadic(target: f64) -> u64 {
    if !(target >= 3.0) {
        return 1;
    }
    let l = ((target + 1.0).log2().floor() as i64 - 1).clamp(0, 40) as u32;
    let mut j = dyadic_j(l);
    // Guard against log2 rounding up at exact powers of two.
    while j as f64 > target && j > 1 {
        j = (j - 1) / 2;
    }
    j
}

/// Recommended J for the block mechanism, rounded down to the dyadic grid:
/// (nα²)^{1/(2β+2d)} below the critical smoothness δ = d,
/// (nα²/log(nα²)^{4d})^{1/(2β+2δ)} at it, and (nα²)^{1/(2β+2δ)} above it.
/// Anisotropic parameters are summarised by their harmonic means.
pub fn theoretical_j(n: u64, alpha: f64, beta: &SobolevParams, delta: &SobolevParams) -> Result<(u64, Regime)> {
    let (b, dl, d) = summarize(beta, delta)?;
    let na2 = check_na2(n, alpha)?;
    let regime = regime_of(dl, d);
    let target = match regime {
        Regime::Sub => na2.powf(1.0 / (2.0 * b + 2.0 * d)),
        Regime::Critical => (na2 / na2.ln().powf(4.0 * d)).powf(1.0 / (2.0 * b + 2.0 * dl)),
        Regime::Super => na2.powf(1.0 / (2.0 * b + 2.0 * dl)),
    };
    Ok((round_down_dyadic(target), regime))
}

/// Recommended J for the global comparator mechanism, where the variance of a
/// J^d-sized block forces J ≍ (nα²)^{1/(2β+2δ+d)} once δ > d/2.
/// The regime tag compares δ with d/2.
pub fn theoretical_j_global(n: u64, alpha: f64, beta: &SobolevParams, delta: &SobolevParams) -> Result<(u64, Regime)> {
    let (b, dl, d) = summarize(beta, delta)?;
    let na2 = check_na2(n, alpha)?;
    let regime = regime_of(dl, d / 2.0);
    let target = match regime {
        Regime::Sub => na2.powf(1.0 / (2.0 * b + 2.0 * d)),
        Regime::Critical => (na2 / na2.ln().powf(d)).powf(1.0 / (2.0 * b + 2.0 * dl + d)),
        Regime::Super => na2.powf(1.0 / (2.0 * b + 2.0 * dl + d)),
    };
    Ok((round_down_dyadic(target), regime))
}

/// Classification of δ against d used by rate statements.
pub fn regime(delta: &SobolevParams) -> Regime {
    regime_of(delta.harmonic_mean(), delta.dim() as f64)
}

fn summarize(beta: &SobolevParams, delta: &SobolevParams) -> Result<(f64, f64, f64)> {
    beta.validate()?;
    delta.validate()?;
    if beta.dim() != delta.dim() {
        return Err(Error::DimensionMismatch {
            expected: beta.dim(),
            got: delta.dim(),
        });
    }
    Ok((beta.harmonic_mean(), delta.harmonic_mean(), beta.dim() as f64))
}

fn check_na2(n: u64, alpha: f64) -> Result<f64> {
    let na2 = n as f64 * alpha * alpha;
    if !(na2 > 1.0) {
        return Err(Error::InvalidParameter(format!("n * alpha^2 = {na2} must exceed 1")));
    }
    Ok(na2)
}

#[derive(Serialize, Deserialize)]
struct BlockRepr {
    label: Vec<u32>,
    start: Vec<u32>,
    end: Vec<u32>,
    size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    budget: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct ScheduleRepr {
    kind: ScheduleKind,
    d: usize,
    levels: Vec<u32>,
    axis_bounds: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<Vec<f64>>,
    blocks: Vec<BlockRepr>,
}

impl Serialize for BlockSchedule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ScheduleRepr {
            kind: self.kind,
            d: self.d,
            levels: self.levels.clone(),
            axis_bounds: self.axis_bounds.clone(),
            alpha: self.allocation.as_ref().map(|a| a.alpha),
            delta: self.allocation.as_ref().map(|a| a.delta.smoothness.clone()),
            blocks: self
                .blocks
                .iter()
                .enumerate()
                .map(|(i, b)| BlockRepr {
                    label: b.label.clone(),
                    start: b.start.clone(),
                    end: b.end.clone(),
                    size: b.size,
                    budget: self.allocation.as_ref().map(|a| a.budgets[i]),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlockSchedule {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = ScheduleRepr::deserialize(de)?;
        let mut sched = match r.kind {
            ScheduleKind::Block => BlockSchedule::from_levels(r.levels.clone()),
            ScheduleKind::Global => {
                let j = r.axis_bounds.first().copied().unwrap_or(1) as u64;
                BlockSchedule::global(j, r.d)
            }
        }
        .map_err(D::Error::custom)?;
        if sched.d != r.d || sched.axis_bounds != r.axis_bounds || sched.blocks.len() != r.blocks.len() {
            return Err(D::Error::custom("schedule description is inconsistent"));
        }
        if let (Some(alpha), Some(delta)) = (r.alpha, r.delta) {
            let delta = SobolevParams::new(delta, 1.0).map_err(D::Error::custom)?;
            sched = sched.allocate_budget(alpha, &delta).map_err(D::Error::custom)?;
            let alloc = sched.allocation.as_ref().unwrap();
            for (b, &want) in r.blocks.iter().zip(&alloc.budgets) {
                if let Some(got) = b.budget {
                    if (got - want).abs() > 1e-12 * alpha.max(1.0) {
                        return Err(D::Error::custom(format!(
                            "budget {got} of block {:?} disagrees with the allocation rule ({want})",
                            b.label
                        )));
                    }
                }
            }
        }
        Ok(sched)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso(d: usize, s: f64) -> SobolevParams {
        SobolevParams::isotropic(d, s, 1.0).unwrap()
    }

    #[test]
    fn partition_examples() {
        let s = dyadic_partition(1, 1).unwrap();
        assert_eq!(s.blocks().len(), 1);
        assert_eq!(s.blocks()[0].size, 1);

        let s = dyadic_partition(3, 1).unwrap();
        let sizes: Vec<usize> = s.blocks().iter().map(|b| b.size).collect();
        assert_eq!(sizes, vec![1, 2]);
        assert_eq!(s.coords_of(1), &[2]);
        assert_eq!(s.coords_of(2), &[3]);

        let s = dyadic_partition(3, 2).unwrap();
        let sizes: Vec<usize> = s.blocks().iter().map(|b| b.size).collect();
        assert_eq!(sizes, vec![1, 2, 2, 4]);
        assert_eq!(s.num_coefficients(), 9);

        assert!(matches!(dyadic_partition(5, 1), Err(Error::NotDyadic(5))));
        assert!(dyadic_partition(0, 1).is_err());
    }

    #[test]
    fn anisotropic_examples() {
        let b = SobolevParams::isotropic(2, 1.0, 2.0).unwrap();
        let a = anisotropic_partition(3, &b, &iso(2, 1.0)).unwrap();
        assert_eq!(a, dyadic_partition(3, 2).unwrap());

        let b = SobolevParams::new(vec![1.0, 2.0], 2.0).unwrap();
        let dl = SobolevParams::new(vec![0.5, 1.0], 1.0).unwrap();
        let a = anisotropic_partition(7, &b, &dl).unwrap();
        let l1 = ((7f64).powf(4.0 / 3.0) + 1.0).log2().floor() as u32 - 1;
        let l2 = ((7f64).powf(2.0 / 3.0) + 1.0).log2().floor() as u32 - 1;
        assert_eq!(a.levels(), &[l1, l2]);
        assert_eq!(a.levels(), &[2, 1]);

        let b = SobolevParams::isotropic(2, 2.0, 2.0).unwrap();
        let a = anisotropic_partition(1, &b, &iso(2, 1.0)).unwrap();
        assert_eq!(a.blocks().len(), 1);

        let bad = SobolevParams::new(vec![1.0, 1.5], 1.0).unwrap();
        assert!(matches!(
            anisotropic_partition(7, &b, &bad),
            Err(Error::AnisotropyMismatch { .. })
        ));
    }

    #[test]
    fn budget_examples() {
        let s = dyadic_partition(7, 1).unwrap().allocate_budget(2.0, &iso(1, 1.0)).unwrap();
        for &a in &s.allocated().unwrap().budgets {
            assert!((a - 2.0 / 3.0).abs() < 1e-15);
        }
        let s = dyadic_partition(1, 2).unwrap().allocate_budget(0.7, &iso(2, 0.3)).unwrap();
        assert_eq!(s.allocated().unwrap().budgets, vec![0.7]);

        let s = dyadic_partition(3, 1).unwrap().allocate_budget(1.0, &iso(1, 3.0)).unwrap();
        let a = s.allocated().unwrap();
        assert!((a.s - 1.5).abs() < 1e-15);
        assert!((a.budgets[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((a.budgets[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sigma_examples() {
        let s = dyadic_partition(1, 1).unwrap().allocate_budget(1.0, &iso(1, 1.0)).unwrap();
        let (_, total) = s.sigma_terms(100).unwrap();
        assert!((total - 0.1).abs() < 1e-15);

        let s = dyadic_partition(3, 1).unwrap().allocate_budget(1.0, &iso(1, 1.0)).unwrap();
        let (sig, total) = s.sigma_terms(400).unwrap();
        assert!((total - 0.2).abs() < 1e-15);
        assert!((sig.iter().sum::<f64>() - total).abs() < 1e-12);

        assert!(matches!(dyadic_partition(3, 1).unwrap().sigma_terms(10), Err(Error::Unallocated)));
    }

    #[test]
    fn theoretical_j_examples() {
        let b = SobolevParams::isotropic(1, 1.0, 2.0).unwrap();
        assert_eq!(theoretical_j(256, 1.0, &b, &iso(1, 2.0)).unwrap(), (1, Regime::Super));
        assert_eq!(theoretical_j(4096, 1.0, &b, &iso(1, 0.5)).unwrap(), (7, Regime::Sub));
        assert_eq!(theoretical_j(4096, 1.0, &b, &iso(1, 1.0)).unwrap().1, Regime::Critical);
        assert!(theoretical_j(1, 1.0, &b, &iso(1, 1.0)).is_err());
    }

    #[test]
    fn dyadic_rounding() {
        assert_eq!(round_down_dyadic(2.52), 1);
        assert_eq!(round_down_dyadic(3.0), 3);
        assert_eq!(round_down_dyadic(8.0), 7);
        assert_eq!(round_down_dyadic(14.999), 7);
        assert_eq!(round_down_dyadic(15.0), 15);
    }

    #[test]
    fn json_roundtrip() {
        let s = dyadic_partition(7, 2).unwrap().allocate_budget(0.8, &iso(2, 1.5)).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: BlockSchedule = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.hash(), s.hash());
        assert!(s.summary_table().contains("[1, 2]"));

        let g = BlockSchedule::global(7, 1).unwrap().allocate_budget(1.0, &iso(1, 2.0)).unwrap();
        let back: BlockSchedule = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
