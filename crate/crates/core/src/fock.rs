//! Polynomials in the Fock space F_α(ℂ), stored in the orthonormal basis
//! e_n(z) = sqrt(αⁿ/n!)·zⁿ, together with the reproducing-kernel metric and the
//! two-variable extension used for real-part estimates.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// ln n!, summed directly (exact enough for the degrees used here).
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// ‖e_n‖-normalising factor sqrt(αⁿ/n!), via logarithms above degree 30.
pub fn basis_scale(alpha: f64, n: usize) -> f64 {
    if n <= 30 {
        let mut s = 1.0;
        for k in 1..=n {
            s *= alpha / k as f64;
        }
        s.sqrt()
    } else {
        (0.5 * (n as f64 * alpha.ln() - ln_factorial(n))).exp()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut b = 1.0;
    for j in 0..k {
        b = b * (n - j) as f64 / (j + 1) as f64;
    }
    b
}

fn check_weight(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("weight must be positive, got {alpha}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockPoly {
    alpha: f64,
    coeffs: Vec<Complex64>,
}

impl FockPoly {
    pub fn new(alpha: f64, coeffs: Vec<Complex64>) -> Result<Self> {
        check_weight(alpha)?;
        Ok(Self { alpha, coeffs })
    }

    pub fn zero(alpha: f64) -> Result<Self> {
        Self::new(alpha, Vec::new())
    }

    /// The basis function e_n.
    pub fn basis(alpha: f64, n: usize) -> Result<Self> {
        let mut c = vec![ZERO; n + 1];
        c[n] = Complex64::new(1.0, 0.0);
        Self::new(alpha, c)
    }

    /// From coefficients of 1, z, z², … re-expanded at weight `alpha`.
    pub fn from_monomials(alpha: f64, monomials: &[Complex64]) -> Result<Self> {
        check_weight(alpha)?;
        let coeffs = monomials.iter().enumerate().map(|(n, a)| a / basis_scale(alpha, n)).collect();
        Self::new(alpha, coeffs)
    }

    /// Random coefficients of degree `degree`, normalised to ‖F‖ = 1.
    pub fn random_unit<R: Rng + ?Sized>(alpha: f64, degree: usize, rng: &mut R) -> Result<Self> {
        let mut coeffs: Vec<Complex64> = (0..=degree)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in &mut coeffs {
            *c /= norm;
        }
        Self::new(alpha, coeffs)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| *c != ZERO)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn inner(&self, other: &FockPoly) -> Result<Complex64> {
        same_weight(self, other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum())
    }

    /// Σ c_n e_n(z), with e_n(z) built by e_n = e_{n−1}·z·sqrt(α/n).
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut e = Complex64::new(1.0, 0.0);
        let mut sum = ZERO;
        for (n, c) in self.coeffs.iter().enumerate() {
            if n > 0 {
                e *= z * (self.alpha / n as f64).sqrt();
            }
            sum += c * e;
        }
        sum
    }

    /// Coefficients of 1, z, z², ….
    pub fn to_monomials(&self) -> Vec<Complex64> {
        self.coeffs.iter().enumerate().map(|(n, c)| c * basis_scale(self.alpha, n)).collect()
    }

    /// Horner evaluation of the monomial form.
    pub fn eval_monomial(&self, z: Complex64) -> Complex64 {
        self.to_monomials().iter().rev().fold(ZERO, |acc, a| acc * z + a)
    }

    /// F′, with coefficients d_{n−1} = c_n·sqrt(α n).
    pub fn derivative(&self) -> FockPoly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, c)| c * (self.alpha * n as f64).sqrt())
            .collect();
        Self { alpha: self.alpha, coeffs }
    }

    /// Entire function z ↦ conj(F(conj z)): conjugated basis coefficients.
    pub fn conj_reflect(&self) -> FockPoly {
        Self { alpha: self.alpha, coeffs: self.coeffs.iter().map(|c| c.conj()).collect() }
    }

    pub fn scale(&self, t: Complex64) -> FockPoly {
        Self { alpha: self.alpha, coeffs: self.coeffs.iter().map(|c| c * t).collect() }
    }

    pub fn sub(&self, other: &FockPoly) -> Result<FockPoly> {
        same_weight(self, other)?;
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &[Complex64], k: usize| v.get(k).copied().unwrap_or(ZERO);
        Ok(Self { alpha: self.alpha, coeffs: (0..n).map(|k| get(&self.coeffs, k) - get(&other.coeffs, k)).collect() })
    }

    /// The same polynomial expanded at another weight.
    pub fn reweighted(&self, alpha: f64) -> Result<FockPoly> {
        Self::from_monomials(alpha, &self.to_monomials())
    }

    /// z ↦ F(z + s), expanded at `weight`.
    pub fn translate(&self, s: Complex64, weight: f64) -> Result<FockPoly> {
        let a = self.to_monomials();
        let mut out = vec![ZERO; a.len()];
        for (n, an) in a.iter().enumerate() {
            // (z+s)^n = Σ_k C(n,k) s^{n−k} z^k
            let mut spow = Complex64::new(1.0, 0.0);
            for k in (0..=n).rev() {
                out[k] += an * binomial(n, k) * spow;
                spow *= s;
            }
        }
        Self::from_monomials(weight, &out)
    }

    /// Product of polynomials, expanded at `weight`.
    pub fn mul(&self, other: &FockPoly, weight: f64) -> Result<FockPoly> {
        let (a, b) = (self.to_monomials(), other.to_monomials());
        if a.is_empty() || b.is_empty() {
            return Self::zero(weight);
        }
        let mut out = vec![ZERO; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        Self::from_monomials(weight, &out)
    }
}

fn same_weight(f: &FockPoly, h: &FockPoly) -> Result<()> {
    if f.alpha == h.alpha {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("weights differ: {} vs {}", f.alpha, h.alpha)))
    }
}

/// Reproducing kernel k_z(w) = e^{α w conj z}.
pub fn kernel(alpha: f64, z: Complex64, w: Complex64) -> Complex64 {
    (alpha * w * z.conj()).exp()
}

/// e^u − 1 without cancellation for small u.
fn expm1_complex(u: Complex64) -> Complex64 {
    let s = (0.5 * u.im).sin();
    Complex64::new(u.re.exp_m1() * u.im.cos() - 2.0 * s * s, u.re.exp() * u.im.sin())
}

/// ‖k_z − k_w‖ from the closed form e^{α|z|²} − 2Re e^{α z·w̄} + e^{α|w|²}, rearranged as
/// e^{α|z|²}(|e^u − 1|² + e^{2Re u}(e^{α|δ|²} − 1)) with δ = w − z, u = α δ·z̄, so the
/// radicand is a sum of nonnegative terms.
pub fn dist_alpha(alpha: f64, z: Complex64, w: Complex64) -> f64 {
    dist_alpha_multi(alpha, &[z], &[w])
}

/// The same metric for the kernel e^{α ⟨w, z⟩} on ℂ^d.
pub fn dist_alpha_multi(alpha: f64, z: &[Complex64], w: &[Complex64]) -> f64 {
    assert_eq!(z.len(), w.len(), "points must share a dimension");
    // evaluate in a fixed argument order so the result is exactly symmetric
    let key = |p: &[Complex64]| p.iter().flat_map(|a| [a.re, a.im]).collect::<Vec<f64>>();
    let (z, w) = if key(w).partial_cmp(&key(z)) == Some(std::cmp::Ordering::Less) { (w, z) } else { (z, w) };
    let zz: f64 = z.iter().map(|a| a.norm_sqr()).sum();
    let dd: f64 = z.iter().zip(w).map(|(a, b)| (b - a).norm_sqr()).sum();
    let u: Complex64 = alpha * z.iter().zip(w).map(|(a, b)| (b - a) * a.conj()).sum::<Complex64>();
    let bracket = expm1_complex(u).norm_sqr() + (2.0 * u.re).exp() * (alpha * dd).exp_m1();
    ((alpha * zz).exp() * bracket).sqrt()
}

/// Local bound 4|z−w| e^{α|z|²/2}(α|z| + √α), valid when
/// |z−w| ≤ min(α^{−1/2}, α^{−1}|z|^{−1}); `None` outside that range.
pub fn dist_local_bound(alpha: f64, z: Complex64, w: Complex64) -> Option<f64> {
    let d = (z - w).norm();
    let cap = if z.norm() == 0.0 { alpha.powf(-0.5) } else { alpha.powf(-0.5).min(1.0 / (alpha * z.norm())) };
    (d <= cap).then(|| 4.0 * d * (0.5 * alpha * z.norm_sqr()).exp() * (alpha * z.norm() + alpha.sqrt()))
}

/// Pointwise bound |F(z)| ≤ ‖F‖ e^{α|z|²/2}; the first violating point is returned.
pub fn growth_check(f: &FockPoly, points: &[Complex64]) -> std::result::Result<(), Complex64> {
    growth_check_with_norm(f, f.norm(), points)
}

/// As [`growth_check`] with a caller-supplied norm value.
pub fn growth_check_with_norm(f: &FockPoly, norm: f64, points: &[Complex64]) -> std::result::Result<(), Complex64> {
    for &z in points {
        let bound = norm * (0.5 * f.alpha * z.norm_sqr()).exp();
        if f.eval(z).norm() > bound * (1.0 + 1e-12) {
            return Err(z);
        }
    }
    Ok(())
}

/// sqrt(α(1+α|w|²))·e^{α|w|²/2}·‖F‖, an upper bound for |F′(w)|.
pub fn derivative_bound(alpha: f64, w: Complex64, norm: f64) -> f64 {
    (alpha * (1.0 + alpha * w.norm_sqr())).sqrt() * (0.5 * alpha * w.norm_sqr()).exp() * norm
}

/// FH′ − F′H, expanded in the basis of weight 2α.
pub fn wronskian(f: &FockPoly, h: &FockPoly) -> Result<FockPoly> {
    same_weight(f, h)?;
    let (a, b) = (f.to_monomials(), h.to_monomials());
    let top = a.len() + b.len();
    if a.is_empty() || b.is_empty() {
        return FockPoly::zero(2.0 * f.alpha);
    }
    // coefficient of z^k: Σ_{i<j, i+j=k+1} (j−i)(a_i b_j − a_j b_i), antisymmetric term by term
    let get = |v: &[Complex64], k: usize| v.get(k).copied().unwrap_or(ZERO);
    let mut out = vec![ZERO; top.saturating_sub(2).max(1)];
    for (k, slot) in out.iter_mut().enumerate() {
        let s = k + 1;
        for i in 0..=s / 2 {
            let j = s - i;
            if j <= i {
                continue;
            }
            *slot += (j - i) as f64 * (get(&a, i) * get(&b, j) - get(&a, j) * get(&b, i));
        }
    }
    FockPoly::from_monomials(2.0 * f.alpha, &out)
}

/// Relative residual of FH′ − F′H = F·H̃ − F̃·H at z, where H̃ = H′ − α z̄ H.
/// The left side is the Wronskian polynomial evaluated at z.
pub fn polyanalytic_identity_residual(f: &FockPoly, h: &FockPoly, z: Complex64) -> Result<f64> {
    let w = wronskian(f, h)?.eval(z);
    let alpha = f.alpha;
    let (fv, hv) = (f.eval(z), h.eval(z));
    let ht = h.derivative().eval(z) - alpha * z.conj() * hv;
    let ft = f.derivative().eval(z) - alpha * z.conj() * fv;
    let rhs = fv * ht - ft * hv;
    let scale = (fv * ht).norm() + (ft * hv).norm() + w.norm();
    Ok(if scale == 0.0 { 0.0 } else { (w - rhs).norm() / scale })
}

/// Polynomial in (z₁, z₂) on the Fock space of ℂ² with weight β, in monomial form.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoVarFockPoly {
    beta: f64,
    coeffs: BTreeMap<(usize, usize), Complex64>,
}

impl TwoVarFockPoly {
    pub fn new(beta: f64, coeffs: BTreeMap<(usize, usize), Complex64>) -> Result<Self> {
        check_weight(beta)?;
        Ok(Self { beta, coeffs })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn coeffs(&self) -> &BTreeMap<(usize, usize), Complex64> {
        &self.coeffs
    }

    /// Σ |c_{ab}|² a! b! / β^{a+b}.
    pub fn norm_sqr(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(&(a, b), c)| {
                if *c == ZERO {
                    return 0.0;
                }
                let log = 2.0 * c.norm().ln() + ln_factorial(a) + ln_factorial(b) - (a + b) as f64 * self.beta.ln();
                log.exp()
            })
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn eval(&self, z1: Complex64, z2: Complex64) -> Complex64 {
        self.coeffs.iter().map(|(&(a, b), c)| c * z1.powu(a as u32) * z2.powu(b as u32)).sum()
    }
}

/// G(z₁, z₂) = F′(z₁ + i z₂)·F*(z₁ − i z₂) with F* the coefficient-conjugated F, so that
/// G(x, y) = F′(x+iy)·conj F(x+iy) on ℝ².
pub fn two_var_extension(f: &FockPoly, beta: f64) -> Result<TwoVarFockPoly> {
    if !(beta > 2.0 * f.alpha) {
        return Err(Error::InvalidParameter(format!("beta = {beta} must exceed 2·alpha = {}", 2.0 * f.alpha)));
    }
    let p = f.derivative().to_monomials();
    let q: Vec<Complex64> = f.to_monomials().iter().map(|c| c.conj()).collect();
    let i = Complex64::new(0.0, 1.0);
    let mut coeffs: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
    for (j, pj) in p.iter().enumerate() {
        for (k, qk) in q.iter().enumerate() {
            let base = pj * qk;
            if base == ZERO {
                continue;
            }
            for r in 0..=j {
                for s in 0..=k {
                    let phase = i.powu(r as u32) * (-i).powu(s as u32);
                    let term = base * binomial(j, r) * binomial(k, s) * phase;
                    *coeffs.entry((j + k - r - s, r + s)).or_insert(ZERO) += term;
                }
            }
        }
    }
    TwoVarFockPoly::new(beta, coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionBound {
    pub norm: f64,
    pub bound: f64,
    pub holds: bool,
}

/// ‖G‖ ≤ β²/(β−2α)^{3/2}·‖F‖² for the extension above.
pub fn extension_norm_bound_check(f: &FockPoly, beta: f64) -> Result<ExtensionBound> {
    let g = two_var_extension(f, beta)?;
    let norm = g.norm();
    let bound = beta * beta / (beta - 2.0 * f.alpha).powf(1.5) * f.norm_sqr();
    Ok(ExtensionBound { norm, bound, holds: norm <= bound * (1.0 + 1e-12) })
}

/// |Re G(ζ′)| ≤ ‖G‖·dist_β(ζ′, ζ) for a root ζ of Re G.
pub fn real_part_lipschitz_check(g: &TwoVarFockPoly, zeta: [Complex64; 2], zeta_prime: [Complex64; 2]) -> Result<bool> {
    let at_root = g.eval(zeta[0], zeta[1]).re;
    if at_root.abs() > 1e-8 {
        return Err(Error::Precondition(format!("Re G(zeta) = {at_root} is not zero")));
    }
    let lhs = g.eval(zeta_prime[0], zeta_prime[1]).re.abs();
    let rhs = g.norm() * dist_alpha_multi(g.beta, &zeta_prime, &zeta);
    Ok(lhs <= rhs * (1.0 + 1e-12) + 1e-14)
}
