//! Phaseless measurements: the uniqueness product, directional derivatives of
//! Q = |F|² − |H|² and their recombination into ∂_z Q, Rolle points on segments with
//! equal-modulus endpoints, the zero-perturbation bound, and an analyzer for the
//! lifted measurement map on truncated Fock spaces.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fock::{wronskian, FockPoly};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const RANK_TOL: f64 = 1e-10;
const ROLLE_SAMPLES: usize = 10_000;
const ROLLE_TOL: f64 = 1e-9;

/// FH·(FH′ − F′H), expanded at weight 4α.
pub fn uniqueness_product(f: &FockPoly, h: &FockPoly) -> Result<FockPoly> {
    let alpha = f.alpha();
    let fh = f.mul(h, 2.0 * alpha)?;
    fh.mul(&wronskian(f, h)?, 4.0 * alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "relation", rename_all = "snake_case")]
pub enum PhaseRelation {
    Equivalent { tau: Complex64 },
    Distinct,
    Inconclusive,
}

/// Decides whether F and H, of equal modulus on `points`, agree up to a unimodular factor.
pub fn phase_relation_decide(f: &FockPoly, h: &FockPoly, points: &[Complex64]) -> Result<PhaseRelation> {
    for &u in points {
        let (a, b) = (f.eval(u).norm(), h.eval(u).norm());
        if (a - b).abs() > 1e-8 * a.max(b).max(1.0) {
            return Err(Error::Precondition(format!("moduli differ at {u}: {a} vs {b}")));
        }
    }
    let w = wronskian(f, h)?;
    if w.norm() <= 1e-10 * (f.norm() * h.norm()).max(1.0) {
        if f.norm() == 0.0 && h.norm() == 0.0 {
            return Ok(PhaseRelation::Equivalent { tau: Complex64::new(1.0, 0.0) });
        }
        // F = τH: read τ off where H is largest among the data and a few fixed probes
        let probes = [ZERO, Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.5), Complex64::new(-0.4, -0.3)];
        let best = points
            .iter()
            .chain(&probes)
            .copied()
            .max_by(|a, b| h.eval(*a).norm().total_cmp(&h.eval(*b).norm()))
            .expect("probe list is non-empty");
        let hz = h.eval(best);
        if hz.norm() == 0.0 {
            return Ok(PhaseRelation::Inconclusive);
        }
        let tau = f.eval(best) / hz;
        return Ok(if (tau.norm() - 1.0).abs() <= 1e-8 {
            PhaseRelation::Equivalent { tau }
        } else {
            PhaseRelation::Inconclusive
        });
    }
    let g = uniqueness_product(f, h)?;
    Ok(if g.norm() > 0.0 { PhaseRelation::Distinct } else { PhaseRelation::Inconclusive })
}

/// F′F̄ − H′H̄ at z, which is ∂_z(|F|² − |H|²).
pub fn q_derivative(f: &FockPoly, h: &FockPoly, z: Complex64) -> Complex64 {
    f.derivative().eval(z) * f.eval(z).conj() - h.derivative().eval(z) * h.eval(z).conj()
}

/// |F(z)|² − |H(z)|².
pub fn q_value(f: &FockPoly, h: &FockPoly, z: Complex64) -> f64 {
    f.eval(z).norm_sqr() - h.eval(z).norm_sqr()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalSample {
    pub theta: f64,
    pub point: Complex64,
    pub value: f64,
}

/// d/dt Q(z + t e^{iθ}) at t = 0, i.e. Re(2e^{iθ}(F′F̄ − H′H̄)).
pub fn directional_derivative(f: &FockPoly, h: &FockPoly, theta: f64, z: Complex64) -> f64 {
    (2.0 * Complex64::from_polar(1.0, theta) * q_derivative(f, h, z)).re
}

pub fn directional_sample(f: &FockPoly, h: &FockPoly, theta: f64, point: Complex64) -> DirectionalSample {
    DirectionalSample { theta, point, value: directional_derivative(f, h, theta, point) }
}

/// Recovers ∂_z Q from two directional derivatives in non-parallel directions.
pub fn combine_directionals(r1: f64, r2: f64, theta1: f64, theta2: f64) -> Result<Complex64> {
    let s = (theta1 - theta2).sin();
    if s.abs() < 1e-8 {
        return Err(Error::Precondition(format!("directions {theta1} and {theta2} are nearly parallel")));
    }
    let c1 = -Complex64::new(theta2.sin(), theta2.cos()) / (2.0 * s);
    let c2 = Complex64::new(theta1.sin(), theta1.cos()) / (2.0 * s);
    Ok(c1 * r1 + c2 * r2)
}

fn derivative_scale(f: &FockPoly, h: &FockPoly, z: Complex64) -> f64 {
    let a = f.derivative().eval(z).norm() * f.eval(z).norm();
    let b = h.derivative().eval(z).norm() * h.eval(z).norm();
    2.0 * (a + b).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RollePoint {
    pub point: Complex64,
    /// Position on the segment, 0 at `c` and 1 at `a`.
    pub t: f64,
    pub theta: f64,
    pub residual: f64,
    /// Set when no sign change was seen and |δ_θ Q| was minimised instead.
    pub fallback: bool,
}

/// A critical point of Q along the segment [c, a] whose endpoints have |F| = |H|.
pub fn rolle_point(f: &FockPoly, h: &FockPoly, a: Complex64, c: Complex64) -> Result<RollePoint> {
    for z in [a, c] {
        let (x, y) = (f.eval(z).norm(), h.eval(z).norm());
        if (x - y).abs() > 1e-10 * x.max(y).max(1.0) {
            return Err(Error::Precondition(format!("|F| = {x} and |H| = {y} differ at endpoint {z}")));
        }
    }
    if a == c {
        return Err(Error::Precondition("segment endpoints coincide".into()));
    }
    let theta = (a - c).arg();
    let at = |t: f64| c + (a - c) * t;
    let r = |t: f64| directional_derivative(f, h, theta, at(t));
    let finish = |t: f64, fallback| {
        let p = at(t);
        RollePoint { point: p, t, theta, residual: r(t), fallback }
    };

    let values: Vec<f64> = (0..=ROLLE_SAMPLES).map(|k| r(k as f64 / ROLLE_SAMPLES as f64)).collect();
    if values.iter().all(|v| *v == 0.0) {
        return Ok(finish(0.5, false));
    }
    for k in 0..ROLLE_SAMPLES {
        let (v0, v1) = (values[k], values[k + 1]);
        if v0 == 0.0 {
            return Ok(finish(k as f64 / ROLLE_SAMPLES as f64, false));
        }
        if v0.signum() != v1.signum() {
            let (mut lo, mut hi) = (k as f64 / ROLLE_SAMPLES as f64, (k + 1) as f64 / ROLLE_SAMPLES as f64);
            let mut vlo = v0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let vm = r(mid);
                if vm == 0.0 {
                    return Ok(finish(mid, false));
                }
                if vm.signum() == vlo.signum() {
                    lo = mid;
                    vlo = vm;
                } else {
                    hi = mid;
                }
            }
            let t = if r(lo).abs() <= r(hi).abs() { lo } else { hi };
            return Ok(finish(t, false));
        }
    }
    // no sign change on the grid: golden-section on |δ_θ Q| around the smallest sample
    let k = (0..=ROLLE_SAMPLES).min_by(|&i, &j| values[i].abs().total_cmp(&values[j].abs())).unwrap_or(0);
    let step = 1.0 / ROLLE_SAMPLES as f64;
    let (mut lo, mut hi) = (((k as f64 - 1.0) * step).max(0.0), ((k as f64 + 1.0) * step).min(1.0));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if r(x1).abs() < r(x2).abs() {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    Ok(finish(0.5 * (lo + hi), true))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationBound {
    pub lhs: f64,
    pub rhs: f64,
    pub eta: f64,
    pub constant_m: f64,
    pub holds: bool,
}

/// Bounds |∂_z Q(z₀)| from two Rolle points p₁, p₂ near z₀ in directions θ₁, θ₂.
#[allow(clippy::too_many_arguments)]
pub fn zero_perturbation_bound_check(
    f: &FockPoly,
    h: &FockPoly,
    z0: Complex64,
    theta1: f64,
    theta2: f64,
    p1: Complex64,
    p2: Complex64,
    epsilon: f64,
) -> Result<PerturbationBound> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let sin = (theta1 - theta2).sin().abs();
    if sin < 1e-8 {
        return Err(Error::Precondition(format!("directions {theta1} and {theta2} are nearly parallel")));
    }
    let alpha = f.alpha();
    let w = 2.0 * alpha + epsilon;
    let eta = (p1 - z0).norm().max((p2 - z0).norm());
    let cap = if z0.norm() > 0.0 { w.powf(-0.5).min(1.0 / (w * z0.norm())) } else { w.powf(-0.5) };
    if eta > cap {
        return Err(Error::Precondition(format!("perturbation {eta} exceeds the admissible radius {cap}")));
    }
    for (p, theta) in [(p1, theta1), (p2, theta2)] {
        let res = directional_derivative(f, h, theta, p);
        if res.abs() > ROLLE_TOL * derivative_scale(f, h, p) {
            return Err(Error::Precondition(format!("directional derivative {res} at {p} is not zero")));
        }
    }
    let m = 4.0 * w * w / epsilon.powf(1.5) * (w + 1.0) * (f.norm_sqr() + h.norm_sqr());
    let lhs = q_derivative(f, h, z0).norm();
    let rhs = m * (z0.norm() + 1.0) * ((alpha + 0.5 * epsilon) * z0.norm_sqr()).exp() / sin * eta;
    Ok(PerturbationBound { lhs, rhs, eta, constant_m: m, holds: lhs <= rhs })
}

/// F and H = F·P with |P| = 1 at the three vertices, so |F| = |H| there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualModulusInstance {
    pub f: FockPoly,
    pub h: FockPoly,
    pub vertex: Complex64,
    pub a: Complex64,
    pub b: Complex64,
}

/// Random F of the given degree with H = F·P, P quadratic and unimodular at
/// `vertex`, `vertex + η₁e^{iθ₁}` and `vertex + η₂e^{iθ₂}`.
pub fn equal_modulus_instance<R: Rng + ?Sized>(
    alpha: f64,
    degree: usize,
    vertex: Complex64,
    arms: [(f64, f64); 2],
    rng: &mut R,
) -> Result<EqualModulusInstance> {
    let f = FockPoly::random_unit(alpha, degree, rng)?;
    let a = vertex + Complex64::from_polar(arms[0].0, arms[0].1);
    let b = vertex + Complex64::from_polar(arms[1].0, arms[1].1);
    let nodes = [vertex, a, b];
    let phases: Vec<Complex64> =
        (0..3).map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))).collect();
    // Lagrange form of the quadratic, accumulated in monomials
    let mut p = [ZERO; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let scale = phases[i] / ((nodes[i] - nodes[j]) * (nodes[i] - nodes[k]));
        p[0] += scale * nodes[j] * nodes[k];
        p[1] -= scale * (nodes[j] + nodes[k]);
        p[2] += scale;
    }
    let h = f.mul(&FockPoly::from_monomials(alpha, &p)?, alpha)?;
    Ok(EqualModulusInstance { f, h, vertex, a, b })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedWitness {
    /// Basis coefficients of two functions with equal moduli on the point set.
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub max_mismatch: f64,
    pub wronskian_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedReport {
    pub dim: usize,
    pub num_points: usize,
    pub alpha: f64,
    pub singular_values: Vec<f64>,
    pub kernel_dim: usize,
    pub witness: Option<LiftedWitness>,
}

/// e_n(u) for n ≤ `degree`.
fn basis_values(alpha: f64, degree: usize, u: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(degree + 1);
    let mut e = Complex64::new(1.0, 0.0);
    out.push(e);
    for n in 1..=degree {
        e *= u * (alpha / n as f64).sqrt();
        out.push(e);
    }
    out
}

/// Orthonormal real coordinates of a Hermitian matrix: diagonal entries first, then
/// √2·Re X_kl and √2·Im X_kl for k < l.
fn hermitian_coordinates(x: &DMatrix<Complex64>) -> Vec<f64> {
    let n = x.nrows();
    let mut out: Vec<f64> = (0..n).map(|k| x[(k, k)].re).collect();
    for k in 0..n {
        for l in k + 1..n {
            out.push(std::f64::consts::SQRT_2 * x[(k, l)].re);
            out.push(std::f64::consts::SQRT_2 * x[(k, l)].im);
        }
    }
    out
}

fn hermitian_from_coordinates(n: usize, coords: &[f64]) -> DMatrix<Complex64> {
    let mut x = DMatrix::from_element(n, n, ZERO);
    for k in 0..n {
        x[(k, k)] = Complex64::new(coords[k], 0.0);
    }
    let mut idx = n;
    for k in 0..n {
        for l in k + 1..n {
            let v = Complex64::new(coords[idx], coords[idx + 1]) / std::f64::consts::SQRT_2;
            x[(k, l)] = v;
            x[(l, k)] = v.conj();
            idx += 2;
        }
    }
    x
}

/// Measurement row of u in the coordinates of `hermitian_coordinates`, weighted by e^{−α|u|²}.
fn measurement_row(alpha: f64, degree: usize, u: Complex64) -> Vec<f64> {
    let v = basis_values(alpha, degree, u);
    let n = degree + 1;
    let w = (-alpha * u.norm_sqr()).exp();
    let mut row: Vec<f64> = v.iter().map(|e| e.norm_sqr() * w).collect();
    for k in 0..n {
        for l in k + 1..n {
            // v̄_k X_kl v_l + v̄_l X̄_kl v_k = 2 Re(X_kl v̄_k v_l)
            let p = v[k].conj() * v[l];
            row.push(std::f64::consts::SQRT_2 * p.re * w);
            row.push(-std::f64::consts::SQRT_2 * p.im * w);
        }
    }
    row
}

/// |F(u)|² e^{−α|u|²} at each point, computed through the lifted map applied to
/// the rank-one matrix of F's coefficients.
pub fn lifted_measurements(f: &FockPoly, points: &[Complex64]) -> Vec<f64> {
    let c = f.coeffs();
    let n = c.len();
    let degree = n.saturating_sub(1);
    let x = DMatrix::from_fn(n, n, |k, l| c[k].conj() * c[l]);
    let coords = hermitian_coordinates(&x);
    points
        .iter()
        .map(|&u| measurement_row(f.alpha(), degree, u).iter().zip(&coords).map(|(a, b)| a * b).sum())
        .collect()
}

/// Singular values and kernel of X ↦ (v(u)*Xv(u)e^{−α|u|²})_u on (N+1)×(N+1) Hermitian
/// matrices, with a search for a rank-two kernel element giving distinct functions
/// of equal modulus on the points. This is evidence at truncation N only.
pub fn lifted_injectivity(points: &[Complex64], degree: usize, alpha: f64) -> Result<LiftedReport> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("need at least one point".into()));
    }
    if degree > 16 {
        return Err(Error::InvalidParameter(format!("truncation degree {degree} exceeds 16")));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let n = degree + 1;
    let d = n * n;
    let rows = points.len().max(d);
    let mut a = DMatrix::zeros(rows, d);
    for (j, &u) in points.iter().enumerate() {
        for (k, v) in measurement_row(alpha, degree, u).into_iter().enumerate() {
            a[(j, k)] = v;
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let smax = singular_values[0];
    let kernel: Vec<Vec<f64>> = order
        .iter()
        .filter(|&&i| svd.singular_values[i] <= RANK_TOL * smax)
        .map(|&i| v_t.row(i).iter().copied().collect())
        .collect();
    let witness = find_witness(points, n, alpha, &kernel);
    Ok(LiftedReport {
        dim: n,
        num_points: points.len(),
        alpha,
        singular_values,
        kernel_dim: kernel.len(),
        witness,
    })
}

fn find_witness(points: &[Complex64], n: usize, alpha: f64, kernel: &[Vec<f64>]) -> Option<LiftedWitness> {
    if kernel.is_empty() {
        return None;
    }
    let d = n * n;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let trials = kernel.len() + 64;
    for trial in 0..trials {
        let coords: Vec<f64> = if trial < kernel.len() {
            kernel[trial].clone()
        } else {
            let g: Vec<f64> = kernel.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
            (0..d).map(|i| kernel.iter().zip(&g).map(|(k, c)| c * k[i]).sum()).collect()
        };
        let x = hermitian_from_coordinates(n, &coords);
        let eig = x.clone().symmetric_eigen();
        let (mut top, mut bottom) = (0, 0);
        for i in 0..n {
            if eig.eigenvalues[i] > eig.eigenvalues[top] {
                top = i;
            }
            if eig.eigenvalues[i] < eig.eigenvalues[bottom] {
                bottom = i;
            }
        }
        let (lp, lm) = (eig.eigenvalues[top], eig.eigenvalues[bottom]);
        if !(lp > 0.0 && lm < 0.0) {
            continue;
        }
        let vp = eig.eigenvectors.column(top).into_owned();
        let vm = eig.eigenvectors.column(bottom).into_owned();
        let recon = &vp * vp.adjoint() * Complex64::new(lp, 0.0) + &vm * vm.adjoint() * Complex64::new(lm, 0.0);
        if (&x - &recon).norm() > 1e-8 * x.norm() {
            continue;
        }
        // v*Xv = λ₊|x*v|² + λ₋|y*v|², and x*v is the function with coefficients conj(x)
        let fx: Vec<Complex64> = vp.iter().map(|c| c.conj() * lp.sqrt()).collect();
        let fy: Vec<Complex64> = vm.iter().map(|c| c.conj() * (-lm).sqrt()).collect();
        if let Some(w) = validate_witness(points, alpha, fx, fy) {
            return Some(w);
        }
    }
    None
}

fn validate_witness(points: &[Complex64], alpha: f64, x: Vec<Complex64>, y: Vec<Complex64>) -> Option<LiftedWitness> {
    let f = FockPoly::new(alpha, x.clone()).ok()?;
    let h = FockPoly::new(alpha, y.clone()).ok()?;
    let mut mismatch: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &u in points {
        let w = (-alpha * u.norm_sqr()).exp();
        let (a, b) = (f.eval(u).norm_sqr() * w, h.eval(u).norm_sqr() * w);
        mismatch = mismatch.max((a - b).abs());
        scale = scale.max(a).max(b);
    }
    let wronskian_norm = wronskian(&f, &h).ok()?.norm();
    (mismatch <= 1e-8 * scale && wronskian_norm > 1e-6).then_some(LiftedWitness {
        x,
        y,
        max_mismatch: mismatch,
        wronskian_norm,
    })
}
