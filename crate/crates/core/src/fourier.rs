//! Tensor Fourier basis on [0,1]^d, Sobolev weights and the closed-form
//! adversarial distance over the unit Sobolev ball.
//!
//! One-dimensional basis: φ_1 ≡ 1, φ_{2k}(t) = √2 cos(2πkt),
//! φ_{2k+1}(t) = √2 sin(2πkt). The d-dimensional basis is the tensor product,
//! so |φ_j| ≤ 2^{d/2}.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A multi-index j = (j_1, ..., j_d) with every coordinate ≥ 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(coords: Vec<u32>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidIndex("dimension must be at least 1".into()));
        }
        if coords.contains(&0) {
            return Err(Error::InvalidIndex(format!(
                "coordinates must be positive, got {coords:?}"
            )));
        }
        Ok(MultiIndex(coords))
    }

    /// The index (1, ..., 1) of the constant basis function.
    pub fn ones(d: usize) -> Self {
        MultiIndex(vec![1; d.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[u32] {
        &self.0
    }

    pub fn max_coord(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(1)
    }
}

impl TryFrom<Vec<u32>> for MultiIndex {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        MultiIndex::new(v)
    }
}

impl From<MultiIndex> for Vec<u32> {
    fn from(j: MultiIndex) -> Self {
        j.0
    }
}

/// Per-axis smoothness and radius of a Sobolev ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevParams {
    pub smoothness: Vec<f64>,
    pub radius: f64,
}

impl SobolevParams {
    pub fn new(smoothness: Vec<f64>, radius: f64) -> Result<Self> {
        let p = SobolevParams { smoothness, radius };
        p.validate()?;
        Ok(p)
    }

    pub fn isotropic(d: usize, s: f64, radius: f64) -> Result<Self> {
        Self::new(vec![s; d], radius)
    }

    pub fn validate(&self) -> Result<()> {
        if self.smoothness.is_empty() {
            return Err(Error::InvalidParameter("smoothness must have d >= 1 entries".into()));
        }
        if self.smoothness.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "smoothness must be positive and finite, got {:?}",
                self.smoothness
            )));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        Ok(())
    }

    /// Extra check for balls used as density classes: they contain densities only if R² ≥ d.
    pub fn validate_density_class(&self) -> Result<()> {
        self.validate()?;
        let d = self.dim() as f64;
        if self.radius * self.radius < d {
            return Err(Error::InvalidParameter(format!(
                "R^2 = {} < d = {d}: the ball contains no density",
                self.radius * self.radius
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.smoothness.len()
    }

    pub fn is_isotropic(&self) -> bool {
        self.smoothness.windows(2).all(|w| w[0] == w[1])
    }

    /// Harmonic-mean smoothness: 1/s = (1/d) Σ 1/s_m.
    pub fn harmonic_mean(&self) -> f64 {
        let d = self.dim() as f64;
        d / self.smoothness.iter().map(|s| 1.0 / s).sum::<f64>()
    }

    pub fn with_radius(&self, radius: f64) -> Self {
        SobolevParams {
            smoothness: self.smoothness.clone(),
            radius,
        }
    }
}

/// One-dimensional basis function φ_j(t).
pub fn basis_1d(j: u32, t: f64) -> f64 {
    match j {
        0 | 1 => 1.0,
        j if j % 2 == 0 => SQRT_2 * (2.0 * PI * phase(j / 2, t)).cos(),
        j => SQRT_2 * (2.0 * PI * phase((j - 1) / 2, t)).sin(),
    }
}

/// k-th derivative of φ_j(t).
pub fn basis_1d_derivative(j: u32, order: u32, t: f64) -> f64 {
    if order == 0 {
        return basis_1d(j, t);
    }
    if j <= 1 {
        return 0.0;
    }
    let k = j / 2;
    let w = 2.0 * PI * k as f64;
    let arg = 2.0 * PI * phase(k, t);
    // cos^{(r)}(x) = cos(x + rπ/2), sin^{(r)}(x) = sin(x + rπ/2)
    let shift = (order % 4) as f64 * PI / 2.0;
    let trig = if j % 2 == 0 {
        (arg + shift).cos()
    } else {
        (arg + shift).sin()
    };
    SQRT_2 * w.powi(order as i32) * trig
}

/// Fractional part of k·t, reduced before multiplying by 2π to keep the
/// argument small for large frequencies.
fn phase(k: u32, t: f64) -> f64 {
    let x = k as f64 * t;
    x - x.floor()
}

/// Fills `out[i] = φ_{i+1}(t)` for i < out.len() using the angle-addition
/// recurrence, re-anchored on a direct evaluation every few steps.
pub fn fill_basis_1d(t: f64, out: &mut [f64]) {
    const ANCHOR: u32 = 32;
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    let (s1, c1) = (2.0 * PI * phase(1, t)).sin_cos();
    let (mut s, mut c) = (0.0_f64, 1.0_f64);
    let jmax = out.len() as u32;
    let mut k = 1u32;
    while 2 * k <= jmax {
        if k % ANCHOR == 0 {
            let (sk, ck) = (2.0 * PI * phase(k, t)).sin_cos();
            s = sk;
            c = ck;
        } else {
            let (ns, nc) = (s * c1 + c * s1, c * c1 - s * s1);
            s = ns;
            c = nc;
        }
        out[(2 * k - 1) as usize] = SQRT_2 * c.clamp(-1.0, 1.0);
        if 2 * k < jmax {
            out[(2 * k) as usize] = SQRT_2 * s.clamp(-1.0, 1.0);
        }
        k += 1;
    }
}

/// Evaluates φ_j(x) = ∏_m φ_{j_m}(x_m).
pub fn eval_basis(j: &MultiIndex, x: &[f64]) -> Result<f64> {
    if j.dim() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: j.dim(),
            got: x.len(),
        });
    }
    Ok(j.coords()
        .iter()
        .zip(x)
        .map(|(&jm, &xm)| basis_1d(jm, xm))
        .product())
}

/// Sup-norm bound of the d-dimensional basis, B_0 = 2^{d/2}.
pub fn basis_bound(d: usize) -> f64 {
    2f64.powf(d as f64 / 2.0)
}

/// Sobolev weight Σ_m j_m^{2 s_m}.
///
/// Panics if the index and parameter dimensions differ.
pub fn sobolev_weight(j: &MultiIndex, params: &SobolevParams) -> f64 {
    assert_eq!(j.dim(), params.dim(), "index and smoothness dimensions differ");
    weight_from_coords(j.coords(), &params.smoothness)
}

pub(crate) fn weight_from_coords(coords: &[u32], smoothness: &[f64]) -> f64 {
    coords
        .iter()
        .zip(smoothness)
        .map(|(&c, &s)| (c as f64).powf(2.0 * s))
        .sum()
}

/// Finitely supported table of Fourier coefficients. Absent indices are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    d: usize,
    bound: Vec<u32>,
    entries: BTreeMap<MultiIndex, f64>,
}

impl CoefficientTable {
    /// Empty table on {1..bound_m} per axis.
    pub fn new(bound: Vec<u32>) -> Result<Self> {
        if bound.is_empty() || bound.contains(&0) {
            return Err(Error::InvalidParameter(format!("invalid support bound {bound:?}")));
        }
        Ok(CoefficientTable {
            d: bound.len(),
            bound,
            entries: BTreeMap::new(),
        })
    }

    pub fn cube(d: usize, j: u32) -> Result<Self> {
        Self::new(vec![j; d])
    }

    /// The uniform density on [0,1]^d.
    pub fn uniform(d: usize) -> Self {
        let mut t = Self::cube(d, 1).expect("d >= 1");
        t.entries.insert(MultiIndex::ones(d), 1.0);
        t
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn bound(&self) -> &[u32] {
        &self.bound
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn check(&self, j: &MultiIndex) -> Result<()> {
        if j.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: j.dim(),
            });
        }
        if j.coords().iter().zip(&self.bound).any(|(c, b)| c > b) {
            return Err(Error::InvalidIndex(format!(
                "{:?} outside the support bound {:?}",
                j.coords(),
                self.bound
            )));
        }
        Ok(())
    }

    pub fn set(&mut self, j: MultiIndex, theta: f64) -> Result<()> {
        self.check(&j)?;
        if theta == 0.0 {
            self.entries.remove(&j);
        } else {
            self.entries.insert(j, theta);
        }
        Ok(())
    }

    pub fn get(&self, j: &MultiIndex) -> f64 {
        self.entries.get(j).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.entries.iter().map(|(j, &v)| (j, v))
    }

    /// Pointwise difference `self - other` on the union of supports.
    pub fn sub(&self, other: &CoefficientTable) -> Result<CoefficientTable> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: other.d,
            });
        }
        let bound = self
            .bound
            .iter()
            .zip(&other.bound)
            .map(|(a, b)| *a.max(b))
            .collect();
        let mut out = CoefficientTable::new(bound)?;
        for (j, v) in self.iter() {
            out.entries.insert(j.clone(), v);
        }
        for (j, v) in other.iter() {
            *out.entries.entry(j.clone()).or_insert(0.0) -= v;
        }
        out.entries.retain(|_, v| *v != 0.0);
        Ok(out)
    }

    /// Restriction to {1..J}^d (per-axis bounds `bound`).
    pub fn truncate(&self, bound: &[u32]) -> Result<CoefficientTable> {
        if bound.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: bound.len(),
            });
        }
        let mut out = CoefficientTable::new(bound.to_vec())?;
        for (j, v) in self.iter() {
            if j.coords().iter().zip(bound).all(|(c, b)| c <= b) {
                out.entries.insert(j.clone(), v);
            }
        }
        Ok(out)
    }

    /// f(x) = Σ_j θ_j φ_j(x).
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        let tables: Vec<Vec<f64>> = self
            .bound
            .iter()
            .zip(x)
            .map(|(&b, &t)| {
                let mut v = vec![0.0; b as usize];
                fill_basis_1d(t, &mut v);
                v
            })
            .collect();
        Ok(self
            .entries
            .iter()
            .map(|(j, &theta)| {
                theta
                    * j.coords()
                        .iter()
                        .enumerate()
                        .map(|(m, &c)| tables[m][(c - 1) as usize])
                        .product::<f64>()
            })
            .sum())
    }
}

#[derive(Serialize, Deserialize)]
struct TableEntry {
    j: MultiIndex,
    theta: f64,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bound: Option<Vec<u32>>,
    entries: Vec<TableEntry>,
}

impl Serialize for CoefficientTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableRepr {
            d: self.d,
            bound: Some(self.bound.clone()),
            entries: self
                .iter()
                .map(|(j, theta)| TableEntry {
                    j: j.clone(),
                    theta,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoefficientTable {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = TableRepr::deserialize(de)?;
        let bound = match repr.bound {
            Some(b) => b,
            None => {
                let mut b = vec![1u32; repr.d];
                for e in &repr.entries {
                    for (bm, &c) in b.iter_mut().zip(e.j.coords()) {
                        *bm = (*bm).max(c);
                    }
                }
                b
            }
        };
        if bound.len() != repr.d {
            return Err(D::Error::custom("bound length differs from d"));
        }
        let mut t = CoefficientTable::new(bound).map_err(D::Error::custom)?;
        for e in repr.entries {
            t.set(e.j, e.theta).map_err(D::Error::custom)?;
        }
        Ok(t)
    }
}

/// Pointwise evaluation of a coefficient table.
pub fn eval_density(coeffs: &CoefficientTable, x: &[f64]) -> Result<f64> {
    coeffs.eval(x)
}

/// Σ_j w(j) θ_j².
pub fn sobolev_norm_sq(coeffs: &CoefficientTable, params: &SobolevParams) -> f64 {
    coeffs
        .iter()
        .map(|(j, v)| sobolev_weight(j, params) * v * v)
        .sum()
}

/// sup over g in the unit Sobolev ball W^δ(1) of ∫(f₁ − f₂) g, where `diff`
/// holds the coefficients of f₁ − f₂. By Cauchy–Schwarz this equals
/// √(Σ_j diff_j² / w_δ(j)).
pub fn adversarial_distance(diff: &CoefficientTable, discriminator: &SobolevParams) -> Result<f64> {
    check_discriminator(discriminator, diff.dim())?;
    Ok(diff
        .iter()
        .map(|(j, v)| v * v / sobolev_weight(j, discriminator))
        .sum::<f64>()
        .sqrt())
}

pub(crate) fn check_discriminator(disc: &SobolevParams, d: usize) -> Result<()> {
    disc.validate()?;
    if disc.radius != 1.0 {
        return Err(Error::InvalidParameter(format!(
            "discriminator radius must be 1, got {}",
            disc.radius
        )));
    }
    if disc.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: disc.dim(),
        });
    }
    Ok(())
}
