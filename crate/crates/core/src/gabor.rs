//! Gabor transform with the Gaussian window e^{−π(t−x)²}, the Bargmann transform built
//! on it, Hermite-function signals, and the decay test on lattices.
//!
//! A signal Σ c_n h_n is P(t)e^{−πt²} with P a polynomial, so the Gabor integral is a
//! Gaussian times a polynomial. After completing the square its center is the complex
//! point x/2 − iω/2, and Gauss–Hermite quadrature about that point is exact up to
//! round-off.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fock::FockPoly;
use crate::lattice::Lattice;
use crate::quadrature::{hermite128, GaussRule, PolarRule};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteSignal {
    coeffs: Vec<Complex64>,
}

impl HermiteSignal {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn hermite(n: usize) -> Self {
        let mut c = vec![ZERO; n + 1];
        c[n] = Complex64::new(1.0, 0.0);
        Self::new(c)
    }

    /// e^{−πt²} = 2^{−1/4} h₀.
    pub fn gaussian() -> Self {
        Self::new(vec![Complex64::new(2f64.powf(-0.25), 0.0)])
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn combine(&self, a: Complex64, other: &HermiteSignal, b: Complex64) -> HermiteSignal {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &[Complex64], k: usize| v.get(k).copied().unwrap_or(ZERO);
        Self::new((0..n).map(|k| a * get(&self.coeffs, k) + b * get(&other.coeffs, k)).collect())
    }

    /// Σ c_n q_n(√(2π) t), the polynomial factor, at a complex argument.
    fn poly(&self, t: Complex64) -> Complex64 {
        let y = (2.0 * PI).sqrt() * t;
        let mut prev = ZERO;
        let mut cur = Complex64::new(2f64.powf(0.25), 0.0);
        let mut sum = ZERO;
        for (n, c) in self.coeffs.iter().enumerate() {
            sum += c * cur;
            let nf = n as f64;
            let next = (2.0 / (nf + 1.0)).sqrt() * y * cur - (nf / (nf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
        }
        sum
    }

    /// f(t) on the real line.
    pub fn eval(&self, t: f64) -> Complex64 {
        self.poly(Complex64::new(t, 0.0)) * (-PI * t * t).exp()
    }
}

/// 𝒢f(x, ω) = ∫ f(t) e^{−π(t−x)²} e^{−2πiωt} dt with the 128-node rule.
pub fn gabor_transform(f: &HermiteSignal, x: f64, omega: f64) -> Complex64 {
    gabor_transform_with(f, x, omega, hermite128())
}

/// The same integral with a caller-chosen Gauss–Hermite rule.
pub fn gabor_transform_with(f: &HermiteSignal, x: f64, omega: f64, rule: &GaussRule) -> Complex64 {
    let center = Complex64::new(0.5 * x, -0.5 * omega);
    let scale = (2.0 * PI).sqrt();
    let sum: Complex64 = rule.nodes.iter().zip(&rule.weights).map(|(s, w)| w * f.poly(center + s / scale)).sum();
    let pre = Complex64::new(-0.5 * PI * (x * x + omega * omega), -PI * x * omega).exp();
    pre * sum / scale
}

/// Bf(z) = 𝒢f(Re z, −Im z)·e^{−πi Re z Im z + π|z|²/2}.
pub fn bargmann(f: &HermiteSignal, z: Complex64) -> Complex64 {
    let g = gabor_transform(f, z.re, -z.im);
    g * Complex64::new(0.5 * PI * z.norm_sqr(), -PI * z.re * z.im).exp()
}

/// Coefficients of Bf in the basis of F_π up to `max_degree`, projected by quadrature.
pub fn bargmann_projection(f: &HermiteSignal, max_degree: usize) -> Result<FockPoly> {
    let rule = PolarRule::disk(PI, 4.5 + 0.5 * max_degree as f64, 120, 2 * max_degree + 64);
    let values: Vec<(Complex64, f64, Complex64)> =
        rule.points().iter().map(|&(z, w)| (z, w, bargmann(f, z))).collect();
    let coeffs = (0..=max_degree)
        .map(|n| {
            let e = FockPoly::basis(PI, n).expect("positive weight");
            values.iter().map(|&(z, w, b)| w * b * e.eval(z).conj()).sum()
        })
        .collect();
    FockPoly::new(PI, coeffs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyVerdict {
    pub passed: bool,
    pub c_bound: f64,
    pub max_ratio: f64,
    pub worst_point: Complex64,
    /// Least modulus among points where the bound fails.
    pub first_violation_radius: Option<f64>,
    pub window_radius: f64,
}

/// Checks |𝒢f(λ)| ≤ C e^{−π|λ|²/2} at every lattice point λ = x + iω with |λ| ≤ window.
pub fn hardy_check(f: &HermiteSignal, lattice: &Lattice, c_bound: f64, window: f64) -> Result<HardyVerdict> {
    if !(lattice.area() < 1.0) {
        return Err(Error::Precondition(format!(
            "cell area {} does not give a set of stable sampling (needs < 1)",
            lattice.area()
        )));
    }
    let mut verdict = HardyVerdict {
        passed: true,
        c_bound,
        max_ratio: 0.0,
        worst_point: ZERO,
        first_violation_radius: None,
        window_radius: window,
    };
    for (_, lam) in lattice.enumerate(window) {
        let ratio = gabor_transform(f, lam.re, lam.im).norm() * (0.5 * PI * lam.norm_sqr()).exp();
        if ratio > verdict.max_ratio {
            verdict.max_ratio = ratio;
            verdict.worst_point = lam;
        }
        if ratio > c_bound {
            verdict.passed = false;
            if verdict.first_violation_radius.is_none() {
                verdict.first_violation_radius = Some(lam.norm());
            }
        }
    }
    Ok(verdict)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalClass {
    Real,
    Even,
    EvenReal,
    None,
}

/// Real iff every Hermite coefficient is real; even iff the odd ones vanish.
pub fn symmetry_class(f: &HermiteSignal) -> SignalClass {
    let tol = 1e-12 * f.norm().max(1e-300);
    let real = f.coeffs.iter().all(|c| c.im.abs() <= tol);
    let even = f.coeffs.iter().skip(1).step_by(2).all(|c| c.norm() <= tol);
    match (real, even) {
        (true, true) => SignalClass::EvenReal,
        (true, false) => SignalClass::Real,
        (false, true) => SignalClass::Even,
        (false, false) => SignalClass::None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FockClass {
    /// F* = F: all basis coefficients real.
    Conjugation,
    /// F(−z) = F(z): odd coefficients vanish.
    Even,
    Both,
    None,
}

/// Classifies F by its basis coefficients, up to `tol` relative to ‖F‖.
pub fn fock_symmetry_check(f: &FockPoly, tol: f64) -> FockClass {
    let t = tol * f.norm().max(1e-300);
    let star = f.coeffs().iter().all(|c| c.im.abs() <= t);
    let even = f.coeffs().iter().skip(1).step_by(2).all(|c| c.norm() <= t);
    match (star, even) {
        (true, true) => FockClass::Both,
        (true, false) => FockClass::Conjugation,
        (false, true) => FockClass::Even,
        (false, false) => FockClass::None,
    }
}
