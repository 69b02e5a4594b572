//! Ground-truth densities for simulations.
//!
//! The bump family perturbs the uniform density on a grid of J^d cells:
//! f_ν = 1 + (γ/J^β) Σ_j ν_j G_j, with G_j(x) = ∏_m ψ(J(x_m − (j_m − 1)/J))
//! and ψ the antisymmetric smooth bump on [0,1]. For non-integer smoothness
//! truths are drawn directly in coefficient space instead.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{basis_1d, basis_1d_derivative, basis_bound, fill_basis_1d, weight_from_coords, CoefficientTable, MultiIndex, SobolevParams};
use crate::quadrature::{integrate_breaks, integrate_cube, integrate_tol};
use crate::rng::StreamFactory;

/// Absolute tolerance for ψ norms.
pub const NORM_TOL: f64 = 1e-12;
/// Absolute tolerance for every bump-truth Fourier coefficient.
pub const COEFF_TOL: f64 = 1e-10;
/// Highest derivative order with a symbolic form.
pub const MAX_DERIVATIVE: u32 = 4;

/// ψ(t) = exp(−1/(1−(4t−1)²)) on (0,1/2), −exp(−1/(1−(4t−3)²)) on (1/2,1), 0 elsewhere.
pub fn psi(t: f64) -> f64 {
    psi_derivative(0, t)
}

/// Polynomials P_k with d^k/du^k exp(−1/(1−u²)) = P_k(u) exp(−1/(1−u²)) / (1−u²)^{2k}.
/// P_0 = 1 and P_{k+1} = P_k'(1−u²)² + 4k u P_k (1−u²) − 2u P_k.
fn bump_polynomials() -> &'static [Vec<f64>] {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        let mut out = vec![vec![1.0]];
        for k in 0..MAX_DERIVATIVE as usize {
            let p = &out[k];
            let dp: Vec<f64> = p.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
            let one_minus_u2 = [1.0, 0.0, -1.0];
            let sq = poly_mul(&one_minus_u2, &one_minus_u2);
            let a = poly_mul(&dp, &sq);
            let b = poly_mul(&poly_mul(&[0.0, 4.0 * k as f64], p), &one_minus_u2);
            let c = poly_mul(&[0.0, -2.0], p);
            out.push(poly_add(&poly_add(&a, &b), &c));
        }
        out
    })
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, x) in b.iter().enumerate() {
        out[i] += x;
    }
    out
}

fn poly_eval(p: &[f64], u: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * u + c)
}

fn bump_derivative(k: u32, u: f64) -> f64 {
    let q = 1.0 - u * u;
    if q <= 0.0 {
        return 0.0;
    }
    let h = (-1.0 / q).exp();
    if h == 0.0 {
        return 0.0;
    }
    poly_eval(&bump_polynomials()[k as usize], u) * h / q.powi(2 * k as i32)
}

/// k-th derivative of ψ, k ≤ 4, from the closed form.
pub fn psi_derivative(k: u32, t: f64) -> f64 {
    assert!(k <= MAX_DERIVATIVE, "derivative order {k} above {MAX_DERIVATIVE}");
    let scale = 4f64.powi(k as i32);
    if t > 0.0 && t < 0.5 {
        scale * bump_derivative(k, 4.0 * t - 1.0)
    } else if t > 0.5 && t < 1.0 {
        -scale * bump_derivative(k, 4.0 * t - 3.0)
    } else {
        0.0
    }
}

/// Norms of ψ and its derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiNorms {
    pub sup: f64,
    pub l1: f64,
    pub l2_sq: f64,
    /// ‖ψ^{(k)}‖_2² for k = 1..=4.
    pub derivative_l2_sq: Vec<f64>,
    pub tolerance: f64,
}

impl PsiNorms {
    pub fn l2_sq_of(&self, k: u32) -> f64 {
        if k == 0 {
            self.l2_sq
        } else {
            self.derivative_l2_sq[k as usize - 1]
        }
    }
}

const PSI_BREAKS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn psi_integral<F: FnMut(f64) -> f64>(mut f: F, tol: f64) -> Result<f64> {
    Ok(integrate_breaks(&mut f, &PSI_BREAKS, tol)?.value)
}

/// Computes the ψ norms by adaptive quadrature at the given tolerance.
pub fn compute_psi_norms(tol: f64) -> Result<PsiNorms> {
    let l1 = psi_integral(|t| psi(t).abs(), tol)?;
    let l2_sq = psi_integral(|t| psi(t).powi(2), tol)?;
    let derivative_l2_sq = (1..=MAX_DERIVATIVE)
        .map(|k| {
            let mut f = |t: f64| psi_derivative(k, t).powi(2);
            Ok(integrate_tol(&mut f, &PSI_BREAKS, tol, tol)?.value)
        })
        .collect::<Result<_>>()?;
    Ok(PsiNorms {
        sup: (-1f64).exp(),
        l1,
        l2_sq,
        derivative_l2_sq,
        tolerance: tol,
    })
}

/// Cached norms at [`NORM_TOL`].
pub fn psi_norms() -> &'static PsiNorms {
    static NORMS: OnceLock<PsiNorms> = OnceLock::new();
    NORMS.get_or_init(|| compute_psi_norms(NORM_TOL).expect("psi quadrature converges"))
}

/// G_j(x) = ∏_m ψ(J(x_m − (j_m−1)/J)), supported on the cell ∏[(j_m−1)/J, j_m/J].
pub fn bump_g(j: &MultiIndex, x: &[f64], grid: u32) -> f64 {
    let jf = grid as f64;
    j.coords()
        .iter()
        .zip(x)
        .map(|(&c, &t)| psi(jf * (t - (c - 1) as f64 / jf)))
        .product()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyConstants {
    pub gamma: f64,
    pub eta: f64,
}

/// γ² = min{‖ψ‖_∞^{−2d}, (R²−d)/(d‖ψ‖_2^{2(d−1)}[‖ψ‖_2² + ‖ψ^{(β)}‖_2²])} and
/// η² = 1/(d‖ψ‖_2^{2(d−1)}[‖ψ‖_2² + ‖ψ^{(δ)}‖_2²]).
pub fn family_constants(beta: u32, delta: u32, radius: f64, d: usize) -> Result<FamilyConstants> {
    if beta == 0 || delta == 0 || beta > MAX_DERIVATIVE || delta > MAX_DERIVATIVE {
        return Err(Error::InvalidParameter(format!(
            "bump families need integer smoothness in 1..={MAX_DERIVATIVE}, got beta={beta}, delta={delta}"
        )));
    }
    let df = d as f64;
    if !(radius * radius > df) {
        return Err(Error::InvalidParameter(format!("R^2 = {} must exceed d = {d}", radius * radius)));
    }
    let n = psi_norms();
    let base = df * n.l2_sq.powi(d as i32 - 1);
    let g2 = (n.sup.powi(-2 * d as i32)).min((radius * radius - df) / (base * (n.l2_sq + n.l2_sq_of(beta))));
    let e2 = 1.0 / (base * (n.l2_sq + n.l2_sq_of(delta)));
    Ok(FamilyConstants {
        gamma: g2.sqrt(),
        eta: e2.sqrt(),
    })
}

mod bits {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[bool], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        use serde::de::Error;
        let s = String::deserialize(d)?;
        s.chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                other => Err(D::Error::custom(format!("invalid bit {other:?}"))),
            })
            .collect()
    }
}

/// A member f_ν of the bump family. ν lists the J^d cells in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpFamilySpec {
    pub d: usize,
    pub grid: u32,
    pub beta: u32,
    #[serde(with = "bits")]
    pub nu: Vec<bool>,
    pub gamma: f64,
    #[serde(default, skip_deserializing)]
    pub norms: Option<PsiNorms>,
}

impl BumpFamilySpec {
    pub fn new(d: usize, grid: u32, beta: u32, nu: Vec<bool>, gamma: f64) -> Result<Self> {
        let s = BumpFamilySpec {
            d,
            grid,
            beta,
            nu,
            gamma,
            norms: Some(psi_norms().clone()),
        };
        s.validate()?;
        Ok(s)
    }

    /// Family member with γ taken from [`family_constants`].
    pub fn with_radius(d: usize, grid: u32, beta: u32, delta: u32, radius: f64, nu: Vec<bool>) -> Result<Self> {
        let c = family_constants(beta, delta, radius, d)?;
        Self::new(d, grid, beta, nu, c.gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.grid == 0 {
            return Err(Error::InvalidParameter("d and grid must be positive".into()));
        }
        let cells = (self.grid as usize).checked_pow(self.d as u32);
        if cells != Some(self.nu.len()) {
            return Err(Error::InvalidParameter(format!(
                "nu has {} entries, expected grid^d = {:?}",
                self.nu.len(),
                cells
            )));
        }
        let cap = psi_norms().sup.powi(-(self.d as i32));
        if !(self.gamma >= 0.0) || self.gamma > cap * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "gamma = {} outside [0, ||psi||_inf^-d = {cap}]",
                self.gamma
            )));
        }
        Ok(())
    }

    /// γ / J^β.
    pub fn amplitude(&self) -> f64 {
        self.gamma / (self.grid as f64).powi(self.beta as i32)
    }

    pub fn active_cells(&self) -> usize {
        self.nu.iter().filter(|&&b| b).count()
    }

    fn cell_of(&self, x: &[f64]) -> (usize, Vec<u32>) {
        let g = self.grid;
        let mut flat = 0usize;
        let mut cell = Vec::with_capacity(self.d);
        for &t in x {
            let c = ((t * g as f64).floor() as i64).clamp(0, g as i64 - 1) as u32;
            flat = flat * g as usize + c as usize;
            cell.push(c + 1);
        }
        (flat, cell)
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        let (flat, cell) = self.cell_of(x);
        if !self.nu[flat] {
            return 1.0;
        }
        let j = MultiIndex::new(cell).expect("cells are 1-based");
        1.0 + self.amplitude() * bump_g(&j, x, self.grid)
    }

    /// Rejection envelope M = 1 + γ‖ψ‖_∞^d / J^β.
    pub fn envelope(&self) -> f64 {
        1.0 + self.amplitude() * psi_norms().sup.powi(self.d as i32)
    }

    /// Breakpoints at cell edges and cell midpoints, where ψ pieces join.
    fn breaks(&self) -> Vec<f64> {
        let n = 2 * self.grid;
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }
}

/// Multi-indices of the ν cells that are switched on.
fn active_indices(spec: &BumpFamilySpec) -> Vec<Vec<u32>> {
    let g = spec.grid as usize;
    spec.nu
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(flat, _)| {
            let mut c = vec![0u32; spec.d];
            let mut r = flat;
            for m in (0..spec.d).rev() {
                c[m] = (r % g) as u32 + 1;
                r /= g;
            }
            c
        })
        .collect()
}

/// Draws `n` points from f_ν by rejection from the uniform envelope; point i
/// uses stream i of `streams`.
pub fn sample_density(spec: &BumpFamilySpec, n: usize, streams: &StreamFactory) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let m = spec.envelope();
    Ok((0..n)
        .map(|i| {
            let mut rng = streams.stream(i as u64, 0);
            rejection_draw(spec.d, m, &mut rng, |x| spec.density(x))
        })
        .collect())
}

fn rejection_draw<R: Rng, F: FnMut(&[f64]) -> f64>(d: usize, envelope: f64, rng: &mut R, mut f: F) -> Vec<f64> {
    let mut x = vec![0.0; d];
    loop {
        for t in x.iter_mut() {
            *t = rng.random();
        }
        let u: f64 = rng.random();
        if u * envelope <= f(&x) {
            return x;
        }
    }
}

/// θ_j(f_ν) for j ∈ {1..J_max}^d. Factors with some j_m = 1 vanish exactly
/// because ∫ψ = 0, so θ_{(1,...,1)} = 1 exactly.
pub fn true_coefficients(spec: &BumpFamilySpec, j_max: u32) -> Result<CoefficientTable> {
    spec.validate()?;
    let d = spec.d;
    let g = spec.grid;
    let mut table = CoefficientTable::cube(d, j_max)?;
    table.set(MultiIndex::ones(d), 1.0)?;
    let active = active_indices(spec);
    if active.is_empty() || spec.gamma == 0.0 {
        return Ok(table);
    }
    let integrals = cell_integrals(g, j_max, d)?;
    let amp = spec.amplitude();
    let mut j = vec![2u32; d];
    loop {
        let v: f64 = active
            .iter()
            .map(|cell| {
                cell.iter()
                    .zip(&j)
                    .map(|(&c, &jm)| integrals[(c - 1) as usize][(jm - 1) as usize])
                    .product::<f64>()
            })
            .sum();
        if v != 0.0 {
            table.set(MultiIndex::new(j.clone())?, amp * v)?;
        }
        // next index with every coordinate in 2..=j_max
        let mut m = d;
        loop {
            if m == 0 {
                return Ok(table);
            }
            m -= 1;
            if j[m] < j_max {
                j[m] += 1;
                for r in j.iter_mut().skip(m + 1) {
                    *r = 2;
                }
                break;
            }
        }
    }
}

/// Frequencies up to this j use adaptive quadrature; above it the FFT route.
pub const QUADRATURE_J: u32 = 256;

/// I[c][j] = ∫ ψ(g(t − (c−1)/g)) φ_j(t) dt = (1/g) ∫_0^1 ψ(s) φ_j((s + c − 1)/g) ds
/// for cells c = 1..g and j = 1..j_max (entry j − 1; entry 0 is ∫ψ = 0).
fn cell_integrals(g: u32, j_max: u32, d: usize) -> Result<Vec<Vec<f64>>> {
    let per_entry_tol = COEFF_TOL / (d as f64 * 8.0);
    let mut integrals = vec![vec![0.0; j_max as usize]; g as usize];
    for c in 1..=g {
        for j in 2..=j_max.min(QUADRATURE_J) {
            integrals[(c - 1) as usize][(j - 1) as usize] = cell_integral_quadrature(g, c, j, per_entry_tol)?;
        }
    }
    if j_max > QUADRATURE_J {
        let k_max = (j_max / 2) as usize;
        let tr = psi_transform(g, k_max);
        for c in 1..=g {
            for j in QUADRATURE_J + 1..=j_max {
                integrals[(c - 1) as usize][(j - 1) as usize] = cell_integral_from_transform(&tr, g, c, j);
            }
        }
    }
    Ok(integrals)
}

fn cell_integral_quadrature(g: u32, c: u32, j: u32, tol: f64) -> Result<f64> {
    let mut f = |s: f64| psi(s) * basis_1d(j, (s + (c - 1) as f64) / g as f64);
    Ok(integrate_breaks(&mut f, &PSI_BREAKS, tol * g as f64)?.value / g as f64)
}

/// (C_k, S_k) = ∫_0^1 ψ(s) (cos ω_k s, sin ω_k s) ds with ω_k = 2πk/g, k = 0..=k_max.
/// ψ vanishes to every order at 0 and 1, so the trapezoid rule on M nodes
/// converges faster than any power of 1/M; the sums come from one FFT of
/// length gM with ψ zero-padded.
fn psi_transform(g: u32, k_max: usize) -> Vec<(f64, f64)> {
    use rustfft::{num_complex::Complex, FftPlanner};
    let m = (8 * k_max / g as usize + (1 << 14)).next_power_of_two();
    let len = m * g as usize;
    let mut buf: Vec<Complex<f64>> = (0..len)
        .map(|i| Complex::new(if i < m { psi(i as f64 / m as f64) } else { 0.0 }, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    // forward FFT: Σ ψ_i e^{−2πi k i/(gM)} = M (C_k − i S_k)
    buf[..=k_max].iter().map(|z| (z.re / m as f64, -z.im / m as f64)).collect()
}

fn cell_integral_from_transform(tr: &[(f64, f64)], g: u32, c: u32, j: u32) -> f64 {
    let k = (j / 2) as usize;
    let (ck, sk) = tr[k];
    let theta = 2.0 * std::f64::consts::PI * ((k as u64 * (c as u64 - 1)) % g as u64) as f64 / g as f64;
    let (st, ct) = theta.sin_cos();
    let v = if j % 2 == 0 { ck * ct - sk * st } else { sk * ct + ck * st };
    std::f64::consts::SQRT_2 * v / g as f64
}

/// Functions on [0,1]^d with periodic derivatives, for the membership check.
pub trait SmoothPeriodic {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// ∂^order f / ∂x_axis^order.
    fn partial(&self, axis: usize, order: u32, x: &[f64]) -> f64;
    /// Breakpoints for quadrature on each axis.
    fn breaks(&self) -> Vec<f64> {
        vec![0.0, 1.0]
    }
}

impl SmoothPeriodic for BumpFamilySpec {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.density(x)
    }

    fn partial(&self, axis: usize, order: u32, x: &[f64]) -> f64 {
        if order == 0 {
            return self.density(x);
        }
        let (flat, cell) = self.cell_of(x);
        if !self.nu[flat] {
            return 0.0;
        }
        let jf = self.grid as f64;
        let mut v = self.amplitude();
        for (m, (&c, &t)) in cell.iter().zip(x).enumerate() {
            let s = jf * (t - (c - 1) as f64 / jf);
            v *= if m == axis {
                jf.powi(order as i32) * psi_derivative(order, s)
            } else {
                psi(s)
            };
        }
        v
    }

    fn breaks(&self) -> Vec<f64> {
        BumpFamilySpec::breaks(self)
    }
}

impl SmoothPeriodic for CoefficientTable {
    fn dim(&self) -> usize {
        CoefficientTable::dim(self)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x).unwrap_or(f64::NAN)
    }

    fn partial(&self, axis: usize, order: u32, x: &[f64]) -> f64 {
        self.iter()
            .map(|(j, theta)| {
                theta
                    * j.coords()
                        .iter()
                        .zip(x)
                        .enumerate()
                        .map(|(m, (&c, &t))| {
                            if m == axis {
                                basis_1d_derivative(c, order, t)
                            } else {
                                basis_1d(c, t)
                            }
                        })
                        .product::<f64>()
            })
            .sum()
    }

    fn breaks(&self) -> Vec<f64> {
        // A few panels per period of the highest frequency.
        let top = self.bound().iter().copied().max().unwrap_or(1);
        let n = (top / 2 + 1).clamp(1, 64);
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    /// R² − d (C₁² + C₂²).
    pub margin: f64,
    pub c1_sq: f64,
    pub c2_sq: f64,
}

/// Sufficient condition for f ∈ W^β(R): d(C₁² + C₂²) ≤ R², with C₁² = ∫f² and
/// C₂² = max_m ∫(∂^{β_m} f/∂x_m^{β_m})².
pub fn sobolev_membership_check<F: SmoothPeriodic + ?Sized>(f: &F, beta: &[u32], radius: f64) -> Result<Membership> {
    let d = f.dim();
    if beta.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: beta.len(),
        });
    }
    let breaks = f.breaks();
    let tol = 1e-9;
    let c1_sq = integrate_cube(|x| f.value(x).powi(2), d, &breaks, tol)?;
    let mut c2_sq: f64 = 0.0;
    for (m, &b) in beta.iter().enumerate() {
        let v = integrate_cube(|x| f.partial(m, b, x).powi(2), d, &breaks, tol)?;
        c2_sq = c2_sq.max(v);
    }
    let margin = radius * radius - d as f64 * (c1_sq + c2_sq);
    Ok(Membership {
        member: margin >= 0.0,
        margin,
        c1_sq,
        c2_sq,
    })
}

/// Finitely supported truth synthesized in coefficient space: θ_{(1,...,1)} = 1 and
/// θ_j = c s_j u_j w_β(j)^{−1/2} (∏_m j_m)^{−decay} otherwise, with random signs s_j,
/// u_j ~ U[1/2, 1] and c chosen so that Σ w_β θ² = 0.9 R².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTruthSpec {
    pub d: usize,
    pub j_max: u32,
    pub seed: u64,
    #[serde(default = "default_decay")]
    pub decay: f64,
}

fn default_decay() -> f64 {
    1.0
}

#[derive(Debug, Clone)]
pub struct CoefficientTruth {
    pub spec: CoefficientTruthSpec,
    pub table: CoefficientTable,
    pub envelope: f64,
    /// Lower bound on min f over [0,1]^d.
    pub min_density: f64,
}

const COEFFICIENT_TRUTH_ATTEMPTS: u64 = 64;

impl CoefficientTruth {
    pub fn generate(spec: &CoefficientTruthSpec, beta: &SobolevParams) -> Result<Self> {
        let d = spec.d;
        if beta.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: beta.dim(),
            });
        }
        beta.validate_density_class()?;
        if spec.j_max < 2 {
            return Err(Error::InvalidParameter("j_max must be at least 2".into()));
        }
        let target = 0.9 * beta.radius * beta.radius - d as f64;
        if !(target > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "0.9 R^2 = {} leaves no room above the constant term d = {d}",
                0.9 * beta.radius * beta.radius
            )));
        }
        let mut last = None;
        for attempt in 0..COEFFICIENT_TRUTH_ATTEMPTS {
            let t = Self::draw(spec, beta, target, attempt)?;
            if t.min_density >= 0.0 {
                return Ok(t);
            }
            last = Some(t.min_density);
        }
        Err(Error::InvalidParameter(format!(
            "no nonnegative coefficient truth found in {COEFFICIENT_TRUTH_ATTEMPTS} draws (last lower bound {:?}); lower R or the decay",
            last
        )))
    }

    fn draw(spec: &CoefficientTruthSpec, beta: &SobolevParams, target: f64, attempt: u64) -> Result<Self> {
        let d = spec.d;
        let mut rng = StreamFactory::new(spec.seed, &[crate::rng::purpose::TRUTH, attempt]).stream(0, 0);
        let mut table = CoefficientTable::cube(d, spec.j_max)?;
        let mut raw = Vec::new();
        let mut j = vec![1u32; d];
        loop {
            if j.iter().any(|&c| c != 1) {
                let w = weight_from_coords(&j, &beta.smoothness);
                let prod: f64 = j.iter().map(|&c| c as f64).product();
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let u = 0.5 + 0.5 * rng.random::<f64>();
                raw.push((j.clone(), sign * u / w.sqrt() * prod.powf(-spec.decay), w));
            }
            let mut m = d;
            let done = loop {
                if m == 0 {
                    break true;
                }
                m -= 1;
                if j[m] < spec.j_max {
                    j[m] += 1;
                    for r in j.iter_mut().skip(m + 1) {
                        *r = 1;
                    }
                    break false;
                }
            };
            if done {
                break;
            }
        }
        let norm: f64 = raw.iter().map(|(_, v, w)| w * v * v).sum();
        let c = (target / norm).sqrt();
        table.set(MultiIndex::ones(d), 1.0)?;
        let mut abs_sum = 0.0;
        let mut lip = 0.0;
        for (jj, v, _) in raw {
            let theta = c * v;
            abs_sum += theta.abs();
            lip += theta.abs() * jj.iter().map(|&x| 2.0 * std::f64::consts::PI * (x / 2) as f64).sum::<f64>();
            table.set(MultiIndex::new(jj)?, theta)?;
        }
        let b0 = basis_bound(d);
        let envelope = 1.0 + b0 * abs_sum;
        let min_density = grid_lower_bound(&table, b0 * lip, 1.0 - b0 * abs_sum);
        Ok(CoefficientTruth {
            spec: spec.clone(),
            table,
            envelope,
            min_density,
        })
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.table.eval(x).unwrap_or(f64::NAN)
    }
}

/// Lower bound on the minimum of a trigonometric polynomial: grid minimum
/// minus the Lipschitz slack (d ≤ 2), or the crude bound otherwise.
fn grid_lower_bound(table: &CoefficientTable, lipschitz: f64, crude: f64) -> f64 {
    let d = table.dim();
    let bound = table.bound()[0] as usize;
    match d {
        1 => {
            let n = 8192;
            let mut phi = vec![0.0; bound];
            let coeff: Vec<f64> = (1..=bound as u32)
                .map(|j| table.get(&MultiIndex::new(vec![j]).unwrap()))
                .collect();
            let mut min = f64::INFINITY;
            for i in 0..=n {
                fill_basis_1d(i as f64 / n as f64, &mut phi);
                let v: f64 = phi.iter().zip(&coeff).map(|(a, b)| a * b).sum();
                min = min.min(v);
            }
            (min - lipschitz * 0.5 / n as f64).max(crude)
        }
        2 => {
            let n = 512;
            let mut min = f64::INFINITY;
            for a in 0..=n {
                for b in 0..=n {
                    let v = table.eval(&[a as f64 / n as f64, b as f64 / n as f64]).unwrap();
                    min = min.min(v);
                }
            }
            (min - lipschitz * 0.5 / n as f64).max(crude)
        }
        _ => crude,
    }
}

/// How the cells of a bump family are switched on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NuPattern {
    /// Every cell.
    Dense,
    /// Only the first cell.
    Sparse,
    /// Explicit bit string over cells in lexicographic order.
    Bits(String),
}

/// Truth source of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TruthSpec {
    Uniform,
    Bump { grid: u32, nu: NuPattern },
    Coefficient {
        j_max: u32,
        seed: u64,
        #[serde(default = "default_decay")]
        decay: f64,
    },
}

/// A resolved ground truth ready for sampling and risk evaluation.
#[derive(Debug, Clone)]
pub enum Truth {
    Uniform { d: usize },
    Bump(BumpFamilySpec),
    Coefficient(CoefficientTruth),
}

impl Truth {
    /// Resolves a truth spec for smoothness β (radius R) and discriminator δ.
    pub fn resolve(spec: &TruthSpec, beta: &SobolevParams, delta: &SobolevParams) -> Result<Self> {
        let d = beta.dim();
        match spec {
            TruthSpec::Uniform => Ok(Truth::Uniform { d }),
            TruthSpec::Bump { grid, nu } => {
                let b = integer_smoothness(beta)?;
                let dl = integer_smoothness(delta)?;
                let cells = (*grid as usize).pow(d as u32);
                let bits = match nu {
                    NuPattern::Dense => vec![true; cells],
                    NuPattern::Sparse => {
                        let mut v = vec![false; cells];
                        v[0] = true;
                        v
                    }
                    NuPattern::Bits(s) => s.chars().map(|c| c == '1').collect(),
                };
                Ok(Truth::Bump(BumpFamilySpec::with_radius(d, *grid, b, dl, beta.radius, bits)?))
            }
            TruthSpec::Coefficient { j_max, seed, decay } => Ok(Truth::Coefficient(CoefficientTruth::generate(
                &CoefficientTruthSpec {
                    d,
                    j_max: *j_max,
                    seed: *seed,
                    decay: *decay,
                },
                beta,
            )?)),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Truth::Uniform { d } => *d,
            Truth::Bump(s) => s.d,
            Truth::Coefficient(c) => c.spec.d,
        }
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        match self {
            Truth::Uniform { .. } => 1.0,
            Truth::Bump(s) => s.density(x),
            Truth::Coefficient(c) => c.density(x),
        }
    }

    /// Coefficient table on {1..J_max}^d and whether it is the complete expansion.
    pub fn table(&self, j_max: u32) -> Result<(CoefficientTable, bool)> {
        match self {
            Truth::Uniform { d } => {
                let mut t = CoefficientTable::cube(*d, j_max)?;
                t.set(MultiIndex::ones(*d), 1.0)?;
                Ok((t, true))
            }
            Truth::Bump(s) => Ok((true_coefficients(s, j_max)?, s.active_cells() == 0 || s.gamma == 0.0)),
            Truth::Coefficient(c) => {
                let bound = vec![j_max.max(c.spec.j_max); c.spec.d];
                let mut t = CoefficientTable::new(bound)?;
                for (j, v) in c.table.iter() {
                    t.set(j.clone(), v)?;
                }
                Ok((t, true))
            }
        }
    }

    /// n i.i.d. draws; point i uses stream i.
    pub fn sample(&self, n: usize, streams: &StreamFactory) -> Result<Vec<Vec<f64>>> {
        match self {
            Truth::Uniform { d } => Ok((0..n)
                .map(|i| {
                    let mut rng = streams.stream(i as u64, 0);
                    (0..*d).map(|_| rng.random::<f64>()).collect()
                })
                .collect()),
            Truth::Bump(s) => sample_density(s, n, streams),
            Truth::Coefficient(c) => {
                let d = c.spec.d;
                let m = c.envelope;
                let mut phi = vec![0.0; c.spec.j_max as usize];
                let coeff: Vec<f64> = if d == 1 {
                    (1..=c.spec.j_max).map(|j| c.table.get(&MultiIndex::new(vec![j]).unwrap())).collect()
                } else {
                    vec![]
                };
                Ok((0..n)
                    .map(|i| {
                        let mut rng = streams.stream(i as u64, 0);
                        if d == 1 {
                            rejection_draw(1, m, &mut rng, |x| {
                                fill_basis_1d(x[0], &mut phi);
                                phi.iter().zip(&coeff).map(|(a, b)| a * b).sum()
                            })
                        } else {
                            rejection_draw(d, m, &mut rng, |x| c.density(x))
                        }
                    })
                    .collect())
            }
        }
    }
}

fn integer_smoothness(p: &SobolevParams) -> Result<u32> {
    let s = p.smoothness[0];
    if !p.is_isotropic() || s.fract() != 0.0 || s < 1.0 || s > MAX_DERIVATIVE as f64 {
        return Err(Error::InvalidParameter(format!(
            "bump truths need isotropic integer smoothness in 1..={MAX_DERIVATIVE}, got {:?}",
            p.smoothness
        )));
    }
    Ok(s as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_route_matches_quadrature() {
        for g in [1u32, 2, 3, 4] {
            let tr = psi_transform(g, 200);
            for c in 1..=g {
                for j in (2..=400).step_by(7) {
                    let q = cell_integral_quadrature(g, c, j, 1e-14).unwrap();
                    let f = cell_integral_from_transform(&tr, g, c, j);
                    assert!((q - f).abs() < 1e-12, "g={g} c={c} j={j}: {q} vs {f}");
                }
            }
        }
        let tr = psi_transform(2, 4096);
        for j in [1001u32, 2500, 4003, 8192] {
            for c in 1..=2 {
                let q = cell_integral_quadrature(2, c, j, 1e-14).unwrap();
                let f = cell_integral_from_transform(&tr, 2, c, j);
                assert!((q - f).abs() < 1e-12, "c={c} j={j}: {q} vs {f}");
            }
        }
    }

    #[test]
    fn psi_values() {
        assert_eq!(psi(0.5), 0.0);
        assert_eq!(psi(0.0), 0.0);
        assert_eq!(psi(1.0), 0.0);
        assert!((psi(0.25) - (-1f64).exp()).abs() < 1e-15);
        assert!((psi(0.75) + (-1f64).exp()).abs() < 1e-15);
        for &t in &[0.1, 0.2, 0.33, 0.45] {
            assert!((psi(t) + psi(1.0 - t)).abs() < 1e-15);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for k in 0..MAX_DERIVATIVE {
            for &t in &[0.07, 0.2, 0.31, 0.42, 0.6, 0.81, 0.93] {
                let fd = (psi_derivative(k, t + h) - psi_derivative(k, t - h)) / (2.0 * h);
                let exact = psi_derivative(k + 1, t);
                assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "k={k} t={t}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn norms_known_values() {
        let n = psi_norms();
        assert!((n.l2_sq - 0.066543).abs() < 1e-5);
        assert!((n.l1 - 0.221997).abs() < 1e-5);
        assert!((n.derivative_l2_sq[0] - 3.27670).abs() < 1e-4);
        assert!(psi_integral(psi, 1e-13).unwrap().abs() < 1e-13);
    }

    #[test]
    fn g_examples() {
        let j = MultiIndex::new(vec![1]).unwrap();
        assert!((bump_g(&j, &[1.0 / 8.0], 2) - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(bump_g(&j, &[0.7], 2), 0.0);
    }

    #[test]
    fn gamma_values() {
        let g2 = family_constants(1, 1, 2f64.sqrt(), 1).unwrap().gamma;
        assert!((g2 - 0.5469).abs() < 1e-3);
        assert!(family_constants(1, 1, 1.0, 1).is_err());
        let tiny = family_constants(2, 1, (1.0f64 + 1e-10).sqrt(), 1).unwrap().gamma;
        assert!(tiny < 1e-4);
        assert!(family_constants(1, 1, 100.0, 1).unwrap().gamma <= std::f64::consts::E + 1e-12);
    }

    #[test]
    fn coefficients_single_bump() {
        let s = BumpFamilySpec::new(1, 1, 1, vec![true], 1.0).unwrap();
        let t = true_coefficients(&s, 12).unwrap();
        assert_eq!(t.get(&MultiIndex::ones(1)), 1.0);
        assert!((t.get(&MultiIndex::new(vec![3]).unwrap()) - 0.25678).abs() < 1e-4);
        assert!(t.get(&MultiIndex::new(vec![2]).unwrap()).abs() < 1e-12);
        let zero = BumpFamilySpec::new(2, 2, 1, vec![false; 4], 0.5).unwrap();
        assert_eq!(true_coefficients(&zero, 5).unwrap().len(), 1);
    }

    #[test]
    fn spec_json() {
        let s = BumpFamilySpec::new(2, 2, 1, vec![true, false, false, true], 0.3).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"1001\""));
        let back: BumpFamilySpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.nu, s.nu);
    }
}
