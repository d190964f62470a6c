//! Weierstrass σ for a lattice, its quasi-periods and quadratic correction, the
//! counterexample Q at critical density, and the interpolating function g_Γ of a
//! set uniformly close to Λ_β with its Lagrange series.
//!
//! σ is the product over 0 < |λ| ≤ R. The omitted factors contribute
//! −Σ_k z^k S_k / k with S_k = Σ_{|λ|>R} λ^{−k}; the even orders up to 20 are put
//! back (odd orders cancel on a symmetric window). S_4, S_6, S_8 come from
//! Eisenstein series minus the partial sums, higher orders from direct tail sums.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lattice::{polar_order, Lattice, LatticeIndex};
use crate::pointset::{density_estimate, DensityReport, IndexedPointSet};
use crate::quadrature::PolarRule;
use crate::sampler::three_lines;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Running product kept as mantissa × e^{ln_scale}.
#[derive(Clone, Copy)]
struct ScaledProduct {
    mant: Complex64,
    ln_scale: f64,
    count: u32,
}

impl ScaledProduct {
    fn new() -> Self {
        Self { mant: ONE, ln_scale: 0.0, count: 0 }
    }

    fn mul(&mut self, f: Complex64) {
        self.mant *= f;
        self.count += 1;
        if self.count.is_multiple_of(32) {
            let m = self.mant.norm();
            if m > 0.0 && m.is_finite() {
                self.ln_scale += m.ln();
                self.mant /= m;
            }
        }
    }

    /// mantissa · exp(ln_scale + exponent)
    fn finish(self, exponent: Complex64) -> Complex64 {
        if self.mant == ZERO {
            return ZERO;
        }
        self.mant * (exponent + self.ln_scale).exp()
    }
}

/// ζ(k) for even k ≥ 4.
fn zeta_even(k: u32) -> f64 {
    match k {
        4 => PI.powi(4) / 90.0,
        6 => PI.powi(6) / 945.0,
        8 => PI.powi(8) / 9450.0,
        _ => (1..2000).rev().map(|n| (n as f64).powi(-(k as i32))).sum(),
    }
}

fn divisor_power_sum(n: u64, p: i32) -> f64 {
    (1..=n).filter(|d| n.is_multiple_of(*d)).map(|d| (d as f64).powi(p)).sum()
}

/// Basis with |ω₁| ≤ |ω₂| and |Re(ω₂/ω₁)| ≤ 1/2, keeping Im(ω₂/ω₁) > 0.
fn reduce_basis(mut w1: Complex64, mut w2: Complex64) -> (Complex64, Complex64) {
    for _ in 0..100 {
        w2 -= w1 * (w2 / w1).re.round();
        if w2.norm() < w1.norm() * (1.0 - 1e-15) {
            (w1, w2) = (w2, -w1);
        } else {
            break;
        }
    }
    (w1, w2)
}

/// Eisenstein series G_k = Σ' λ^{−k} (k even, ≥ 4) from the q-expansion.
pub fn eisenstein(lattice: &Lattice, k: u32) -> Complex64 {
    let (w1, w2) = reduce_basis(lattice.omega1(), lattice.omega2());
    let tau = w2 / w1;
    let q = (Complex64::new(0.0, 2.0 * PI) * tau).exp();
    let mut series = ZERO;
    let mut qn = ONE;
    for n in 1..=60u64 {
        qn *= q;
        if qn.norm() < 1e-40 {
            break;
        }
        series += qn * divisor_power_sum(n, k as i32 - 1);
    }
    let fact: f64 = (1..k).map(f64::from).product();
    let lead = Complex64::new(0.0, 2.0 * PI).powu(k) * 2.0 / fact;
    (2.0 * zeta_even(k) + lead * series) / w1.powu(k)
}

const TAIL_ORDERS: [u32; 9] = [4, 6, 8, 10, 12, 14, 16, 18, 20];

#[derive(Debug, Clone)]
pub struct SigmaEvaluator {
    lattice: Lattice,
    truncation_radius: f64,
    points: Vec<Complex64>,
    sum_inv: Complex64,
    sum_inv_sq: Complex64,
    tail: Vec<(u32, Complex64)>,
    eta1: Complex64,
    eta2: Complex64,
    a_const: Complex64,
    legendre_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaValue {
    pub value: Complex64,
    /// Estimated relative error from the orders beyond those restored.
    pub tail_estimate: f64,
}

impl SigmaEvaluator {
    /// Builds the evaluator and solves for the quasi-periods.
    pub fn new(lattice: Lattice, truncation_radius: f64) -> Result<Self> {
        if lattice.shift() != ZERO {
            return Err(Error::InvalidLattice("sigma needs an unshifted lattice".into()));
        }
        if !(truncation_radius > 0.0) {
            return Err(Error::InvalidParameter(format!("truncation radius {truncation_radius}")));
        }
        let r = truncation_radius;
        let points: Vec<Complex64> =
            lattice.enumerate(r).into_iter().map(|(_, p)| p).filter(|p| *p != ZERO).collect();
        let sum_inv = points.iter().map(|p| p.inv()).sum();
        let sum_inv_sq = points.iter().map(|p| p.inv().powu(2)).sum();
        let far: Vec<Complex64> =
            lattice.enumerate(4.0 * r).into_iter().map(|(_, p)| p).filter(|p| p.norm() > r).collect();
        let tail = TAIL_ORDERS
            .iter()
            .map(|&k| {
                let s = if k <= 8 {
                    let partial: Complex64 = points.iter().map(|p| p.inv().powu(k)).sum();
                    eisenstein(&lattice, k) - partial
                } else {
                    far.iter().map(|p| p.inv().powu(k)).sum()
                };
                (k, s)
            })
            .collect();
        let mut ev = Self {
            lattice,
            truncation_radius: r,
            points,
            sum_inv,
            sum_inv_sq,
            tail,
            eta1: ZERO,
            eta2: ZERO,
            a_const: ZERO,
            legendre_residual: f64::NAN,
        };
        let (w1, w2) = (lattice.omega1(), lattice.omega2());
        ev.eta1 = ev.solve_quasi_period(w1)?;
        ev.eta2 = ev.solve_quasi_period(w2)?;
        ev.legendre_residual = (ev.eta1 * w2 - ev.eta2 * w1 - Complex64::new(0.0, 2.0 * PI)).norm();
        let denom = w1 * w2.conj() - w2 * w1.conj();
        ev.a_const = 0.5 * (ev.eta2 * w1.conj() - ev.eta1 * w2.conj()) / denom;
        Ok(ev)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    pub fn domain_radius(&self) -> f64 {
        self.truncation_radius / 3.0
    }

    pub fn quasi_periods(&self) -> (Complex64, Complex64) {
        (self.eta1, self.eta2)
    }

    /// |η₁ω₂ − η₂ω₁ − 2πi|.
    pub fn legendre_residual(&self) -> f64 {
        self.legendre_residual
    }

    /// Quadratic correction a(Λ) making |σ_Λ| e^{−π|z|²/(2s)} periodic.
    pub fn a_lambda(&self) -> Complex64 {
        self.a_const
    }

    fn check_domain(&self, z: Complex64) -> Result<()> {
        if z.norm() > self.domain_radius() {
            return Err(Error::OutsideDomain { modulus: z.norm(), limit: self.domain_radius() });
        }
        Ok(())
    }

    /// exp exponent shared by σ and the functions derived from it.
    fn exponent(&self, z: Complex64) -> Complex64 {
        let restore: Complex64 = self.tail.iter().map(|&(k, s)| z.powu(k) * s / f64::from(k)).sum();
        z * self.sum_inv + 0.5 * z * z * self.sum_inv_sq - restore
    }

    /// Π (1 − z/μ) over the truncated points with μ not in `skip`.
    fn product(&self, z: Complex64, skip: &[Complex64]) -> ScaledProduct {
        let mut p = ScaledProduct::new();
        for mu in &self.points {
            if !skip.contains(mu) {
                p.mul(ONE - z / mu);
            }
        }
        p
    }

    fn sigma_raw(&self, z: Complex64) -> Complex64 {
        let mut p = self.product(z, &[]);
        p.mul(z);
        p.finish(self.exponent(z))
    }

    fn tail_estimate(&self, z: Complex64) -> f64 {
        let next = 22.0;
        let d = self.lattice.density();
        z.norm().powf(next) * 2.0 * PI * d / (next * (next - 2.0) * self.truncation_radius.powf(next - 2.0))
    }

    pub fn sigma(&self, z: Complex64) -> Result<Complex64> {
        self.check_domain(z)?;
        Ok(self.sigma_raw(z))
    }

    pub fn sigma_with_error(&self, z: Complex64) -> Result<SigmaValue> {
        Ok(SigmaValue { value: self.sigma(z)?, tail_estimate: self.tail_estimate(z) })
    }

    /// σ_Λ(z) = σ(z) e^{a(Λ) z²}.
    pub fn sigma_mod(&self, z: Complex64) -> Result<Complex64> {
        self.check_domain(z)?;
        let mut p = self.product(z, &[]);
        p.mul(z);
        Ok(p.finish(self.exponent(z) + self.a_const * z * z))
    }

    /// σ′ at a lattice point, by removing the vanishing factor exactly.
    pub fn sigma_derivative_at(&self, lambda: Complex64) -> Result<Complex64> {
        self.check_domain(lambda)?;
        if lambda == ZERO {
            return Ok(ONE);
        }
        let mu = self.nearest_point(lambda)?;
        let mut p = self.product(mu, &[mu]);
        p.mul(-ONE);
        Ok(p.finish(self.exponent(mu)))
    }

    fn nearest_point(&self, z: Complex64) -> Result<Complex64> {
        let idx = self
            .lattice
            .index_of(z)
            .ok_or_else(|| Error::Precondition(format!("{z} is not a lattice point")))?;
        let p = self.lattice.point(idx);
        if p == ZERO {
            return Ok(ZERO);
        }
        self.points
            .iter()
            .copied()
            .find(|q| (q - p).norm() <= 1e-12 * p.norm().max(1.0))
            .ok_or_else(|| Error::Precondition(format!("{z} lies beyond the truncation radius")))
    }

    fn solve_quasi_period(&self, omega: Complex64) -> Result<Complex64> {
        let (w1, w2) = (self.lattice.omega1(), self.lattice.omega2());
        let z0 = 0.137 * w1 + 0.291 * w2;
        let z1 = -0.213 * w1 + 0.117 * w2;
        for z in [z0, z1, z0 + omega, z1 + omega] {
            if z.norm() > self.domain_radius() {
                return Err(Error::InvalidParameter(format!(
                    "truncation radius {} too small for periods of length {}",
                    self.truncation_radius,
                    omega.norm()
                )));
            }
        }
        let half = z0 + 0.5 * omega;
        let base = (-self.sigma_raw(z0 + omega) / self.sigma_raw(z0)).ln() / half;
        let mut best: Option<(f64, Complex64)> = None;
        for k in -5..=5 {
            let eta = base + Complex64::new(0.0, 2.0 * PI * f64::from(k)) / half;
            let res = self.quasi_residual(z1, omega, eta);
            if best.is_none_or(|(r, _)| res < r) {
                best = Some((res, eta));
            }
        }
        let (res, eta) = best.expect("eleven candidates");
        if !(res <= 1e-6) {
            return Err(Error::Numerical(format!("quasi-period cross-check residual {res:e}")));
        }
        Ok(eta)
    }

    fn quasi_residual(&self, z: Complex64, omega: Complex64, eta: Complex64) -> f64 {
        let rhs = -self.sigma_raw(z) * (eta * (z + 0.5 * omega)).exp();
        (self.sigma_raw(z + omega) - rhs).norm() / rhs.norm()
    }

    /// Relative residuals of σ(z+ω_j) = −σ(z)e^{η_j(z+ω_j/2)} for j = 1, 2.
    pub fn quasi_periodicity_residual(&self, z: Complex64) -> Result<[f64; 2]> {
        let (w1, w2) = (self.lattice.omega1(), self.lattice.omega2());
        for p in [z, z + w1, z + w2] {
            self.check_domain(p)?;
        }
        Ok([self.quasi_residual(z, w1, self.eta1), self.quasi_residual(z, w2, self.eta2)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaGrowth {
    /// sup of |σ_Λ(z)| e^{−π|z|²/(2s)} over grid points with |z| ≤ radius.
    pub sup: f64,
    /// The same supremum restricted to |z| ≤ radius/2.
    pub sup_inner: f64,
    pub argmax: Complex64,
}

/// Growth ratio of σ_Λ on a square grid of the given step.
pub fn sigma_growth(ev: &SigmaEvaluator, radius: f64, step: f64) -> Result<SigmaGrowth> {
    let s = ev.lattice().area();
    let n = (radius / step).floor() as i64;
    let grid: Vec<Complex64> = (-n..=n)
        .flat_map(|i| (-n..=n).map(move |j| Complex64::new(i as f64 * step, j as f64 * step)))
        .filter(|z| z.norm() <= radius)
        .collect();
    let vals: Vec<(Complex64, f64)> = grid
        .par_iter()
        .map(|&z| Ok((z, ev.sigma_mod(z)?.norm() * (-PI * z.norm_sqr() / (2.0 * s)).exp())))
        .collect::<Result<_>>()?;
    let mut out = SigmaGrowth { sup: 0.0, sup_inner: 0.0, argmax: ZERO };
    for (z, v) in vals {
        if v > out.sup {
            out.sup = v;
            out.argmax = z;
        }
        if z.norm() <= radius / 2.0 {
            out.sup_inner = out.sup_inner.max(v);
        }
    }
    Ok(out)
}

/// Q(z) = σ_Λ(z)/((z−λ)(z−λ′)), bounded on Λ yet not constant at critical density.
#[derive(Debug, Clone)]
pub struct Counterexample<'a> {
    sigma: &'a SigmaEvaluator,
    lambda: Complex64,
    lambda_prime: Complex64,
}

pub fn critical_counterexample(
    ev: &SigmaEvaluator,
    lambda_pt: Complex64,
    lambda_prime: Complex64,
) -> Result<Counterexample<'_>> {
    let a = ev.nearest_point(lambda_pt)?;
    let b = ev.nearest_point(lambda_prime)?;
    if a == b {
        return Err(Error::Precondition("the two removed lattice points coincide".into()));
    }
    Ok(Counterexample { sigma: ev, lambda: a, lambda_prime: b })
}

impl Counterexample<'_> {
    /// Evaluated as a product with the factors at λ, λ′ divided out exactly:
    /// (1 − z/ν)/(z − ν) = −1/ν, and z/(z − 0) = 1.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let ev = self.sigma;
        ev.check_domain(z)?;
        let removed = [self.lambda, self.lambda_prime];
        let mut p = ev.product(z, &removed);
        if !removed.contains(&ZERO) {
            p.mul(z);
        }
        for nu in removed {
            if nu != ZERO {
                p.mul(-nu.inv());
            }
        }
        Ok(p.finish(ev.exponent(z) + ev.a_const * z * z))
    }

    pub fn removed_points(&self) -> (Complex64, Complex64) {
        (self.lambda, self.lambda_prime)
    }

    /// (α/π)∫ |Q|² e^{−α|z|²} over successive annuli between the given radii.
    pub fn norm_increments(&self, alpha: f64, radii: &[f64], radial: usize, angular: usize) -> Result<Vec<f64>> {
        radii
            .windows(2)
            .map(|w| {
                let rule = PolarRule::annulus(alpha, w[0], w[1], radial, angular);
                let vals: Vec<f64> = rule
                    .points()
                    .par_iter()
                    .map(|&(z, wt)| Ok(wt * self.eval(z)?.norm_sqr()))
                    .collect::<Result<_>>()?;
                Ok(vals.iter().sum())
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// g_Γ

#[derive(Debug, Clone)]
pub struct GGammaEvaluator {
    beta: f64,
    truncation_radius: f64,
    gamma00: Complex64,
    /// (γ, λ) pairs entering the product, i.e. all except γ₀₀.
    factors: Vec<(Complex64, Complex64)>,
    sum_inv: Complex64,
    sum_inv_lambda_sq: Complex64,
}

impl GGammaEvaluator {
    /// `gamma_set` holds one point per index of Λ_β = sqrt(π/β)(ℤ+iℤ). Indices with
    /// |λ| ≤ truncation radius enter the product. The point of least modulus (ties: least
    /// principal argument) becomes γ₀₀; if it is not the point at index (0,0) the two
    /// swap lattice partners.
    pub fn new(gamma_set: &IndexedPointSet, beta: f64, truncation_radius: f64) -> Result<Self> {
        let expected = Lattice::critical(beta)?;
        let lat = gamma_set.lattice();
        if (lat.omega1() - expected.omega1()).norm() > 1e-12
            || (lat.omega2() - expected.omega2()).norm() > 1e-12
            || lat.shift() != ZERO
        {
            return Err(Error::Precondition("set must be indexed by sqrt(pi/beta)(Z+iZ)".into()));
        }
        let mut pairs: Vec<(LatticeIndex, Complex64, Complex64)> = Vec::new();
        for (idx, _, pos) in gamma_set.points() {
            let lam = lat.point(idx);
            if lam.norm() > truncation_radius {
                continue;
            }
            if pairs.last().is_some_and(|p| p.0 == idx) {
                return Err(Error::Precondition(format!("several points at index ({}, {})", idx.m, idx.n)));
            }
            pairs.push((idx, pos, lam));
        }
        let origin = pairs
            .iter()
            .position(|p| p.0 == LatticeIndex::ORIGIN)
            .ok_or_else(|| Error::MissingEntry { index: LatticeIndex::ORIGIN, tag: "any".into() })?;
        let least = (0..pairs.len())
            .min_by(|&i, &j| polar_order(pairs[i].1, pairs[j].1))
            .expect("origin entry present");
        // the least-modulus point takes index (0,0); the point there inherits its lattice partner
        let least_lambda = pairs[least].2;
        let origin_gamma = pairs[origin].1;
        let gamma00 = pairs[least].1;
        let mut factors = Vec::with_capacity(pairs.len() - 1);
        for (k, &(_, g, lam)) in pairs.iter().enumerate() {
            if k == least {
                continue;
            }
            if k == origin {
                factors.push((origin_gamma, least_lambda));
            } else {
                factors.push((g, lam));
            }
        }
        if factors.iter().any(|&(g, l)| g == ZERO || l == ZERO) {
            return Err(Error::Precondition("a point other than gamma00 sits at the origin".into()));
        }
        let sum_inv = factors.iter().map(|(g, _)| g.inv()).sum();
        let sum_inv_lambda_sq = factors.iter().map(|(_, l)| l.inv().powu(2)).sum();
        Ok(Self { beta, truncation_radius, gamma00, factors, sum_inv, sum_inv_lambda_sq })
    }

    pub fn gamma00(&self) -> Complex64 {
        self.gamma00
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    /// Points of Γ in the product, γ₀₀ first, then in index order.
    pub fn points(&self) -> Vec<Complex64> {
        std::iter::once(self.gamma00).chain(self.factors.iter().map(|f| f.0)).collect()
    }

    fn exponent(&self, z: Complex64) -> Complex64 {
        z * self.sum_inv + 0.5 * z * z * self.sum_inv_lambda_sq
    }

    fn check(&self, z: Complex64) -> Result<()> {
        if z.norm() > self.truncation_radius {
            return Err(Error::OutsideDomain { modulus: z.norm(), limit: self.truncation_radius });
        }
        Ok(())
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        self.check(z)?;
        let mut p = ScaledProduct::new();
        p.mul(z - self.gamma00);
        for (g, _) in &self.factors {
            p.mul(ONE - z / g);
        }
        Ok(p.finish(self.exponent(z)))
    }

    /// g′_Γ(γ) for γ ∈ Γ, with the vanishing factor removed exactly.
    pub fn derivative_at(&self, gamma_pt: Complex64) -> Result<Complex64> {
        self.check(gamma_pt)?;
        let mut p = ScaledProduct::new();
        if gamma_pt == self.gamma00 {
            for (g, _) in &self.factors {
                p.mul(ONE - gamma_pt / g);
            }
            return Ok(p.finish(self.exponent(gamma_pt)));
        }
        let k = self
            .factors
            .iter()
            .position(|f| f.0 == gamma_pt)
            .ok_or_else(|| Error::Precondition(format!("{gamma_pt} is not a point of the set")))?;
        p.mul(gamma_pt - self.gamma00);
        p.mul(-gamma_pt.inv());
        for (j, (g, _)) in self.factors.iter().enumerate() {
            if j != k {
                p.mul(ONE - gamma_pt / g);
            }
        }
        Ok(p.finish(self.exponent(gamma_pt)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeProbe {
    pub constant_c_big: f64,
    pub constant_c: f64,
    /// min over the window of |g′(γ)| e^{c|γ|ln|γ|} e^{−β|γ|²/2}.
    pub min_normalised: f64,
    pub window_radius: f64,
}

/// Fits C and c in |g′(γ)| ≥ C e^{−c|γ|ln|γ|} e^{β|γ|²/2} over |γ| ≤ window.
pub fn derivative_lower_bound_probe(ev: &GGammaEvaluator, window: f64) -> Result<DerivativeProbe> {
    let pts: Vec<Complex64> = ev.points().into_iter().filter(|g| g.norm() <= window).collect();
    let v: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|&g| Ok((g.norm(), ev.derivative_at(g)?.norm().ln() - 0.5 * ev.beta * g.norm_sqr())))
        .collect::<Result<_>>()?;
    let ln_c_big = v.iter().filter(|p| p.0 <= 2.0).map(|p| p.1).fold(f64::INFINITY, f64::min);
    if !ln_c_big.is_finite() {
        return Err(Error::Precondition("no points within radius 2".into()));
    }
    let c = v
        .iter()
        .filter(|p| p.0 > 2.0)
        .map(|&(r, val)| (ln_c_big - val) / (r * r.ln()))
        .fold(0.0, f64::max);
    let min_normalised = v
        .iter()
        .map(|&(r, val)| {
            let growth = if r > 1.0 { c * r * r.ln() } else { 0.0 };
            (val + growth).exp()
        })
        .fold(f64::INFINITY, f64::min);
    Ok(DerivativeProbe { constant_c_big: ln_c_big.exp(), constant_c: c, min_normalised, window_radius: window })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangeValue {
    pub value: Complex64,
    pub last_increment: f64,
    /// |partial sum increment| over shells [k, k+1) of |γ|, k = 0, 1, ….
    pub shell_increments: Vec<f64>,
}

/// Σ F(γ) g(z)/(g′(γ)(z−γ)) over the samples, summed in order of |γ|.
pub fn lagrange_interpolate(ev: &GGammaEvaluator, samples: &[(Complex64, Complex64)], z: Complex64) -> Result<LagrangeValue> {
    if let Some(&(_, val)) = samples.iter().find(|(g, _)| (g - z).norm() <= 1e-12) {
        return Ok(LagrangeValue { value: val, last_increment: 0.0, shell_increments: Vec::new() });
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&i, &j| polar_order(samples[i].0, samples[j].0));
    let gz = ev.eval(z)?;
    let terms: Vec<(f64, Complex64)> = order
        .par_iter()
        .map(|&i| {
            let (g, val) = samples[i];
            Ok((g.norm(), val * gz / (ev.derivative_at(g)? * (z - g))))
        })
        .collect::<Result<_>>()?;
    let mut value = ZERO;
    let mut shells: Vec<Complex64> = Vec::new();
    let mut last = 0.0;
    for (r, t) in terms {
        value += t;
        last = t.norm();
        let shell = r.floor() as usize;
        if shells.len() <= shell {
            shells.resize(shell + 1, ZERO);
        }
        shells[shell] += t;
    }
    Ok(LagrangeValue { value, last_increment: last, shell_increments: shells.iter().map(|s| s.norm()).collect() })
}

// ---------------------------------------------------------------------------
// three lines

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeLinesNote {
    pub angles: [f64; 3],
    pub sector_angles: [f64; 6],
    pub all_sectors_acute: bool,
    pub pitch: f64,
    pub density: DensityReport,
    /// Densities strictly decrease with the radius.
    pub density_decreasing: bool,
    /// The sampled lines are a discretisation for counting only.
    pub certifying: bool,
}

/// Sector geometry and density profile of three lines through 0 sampled at pitch h.
pub fn three_lines_liouville_note(angles: [f64; 3], pitch: f64, radii: &[f64]) -> Result<ThreeLinesNote> {
    let reach = radii.iter().copied().fold(0.0, f64::max);
    let lines = three_lines(angles, pitch, reach)?;
    let density = density_estimate(&lines.points, ZERO, radii, reach)?;
    let density_decreasing = density.estimates.windows(2).all(|w| w[1].density < w[0].density);
    Ok(ThreeLinesNote {
        angles: lines.angles,
        sector_angles: lines.sector_angles,
        all_sectors_acute: lines.sector_angles.iter().all(|&s| s < PI / 2.0),
        pitch,
        density,
        density_decreasing,
        certifying: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointset::Tag;
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn square() -> SigmaEvaluator {
        SigmaEvaluator::new(Lattice::square(1.0).unwrap(), 30.0).unwrap()
    }

    #[test]
    fn eisenstein_matches_direct_sums() {
        for l in [Lattice::square(1.0).unwrap(), Lattice::new(c(1.0, 0.0), c(0.3, 1.1)).unwrap()] {
            for k in [4u32, 6, 8] {
                let direct: Complex64 = l
                    .enumerate(400.0)
                    .into_iter()
                    .map(|p| p.1)
                    .filter(|p| *p != ZERO)
                    .map(|p| p.inv().powu(k))
                    .sum();
                let g = eisenstein(&l, k);
                // direct partial sums converge like R^{2−k}
                assert!((g - direct).norm() < 1e-4, "k={k}: {g} vs {direct}");
            }
        }
        // square lattice: G_4 is real, G_6 vanishes
        let g = square();
        let g4 = eisenstein(g.lattice(), 4);
        assert!(g4.im.abs() < 1e-14 && (g4.re - 3.1512120021539).abs() < 1e-10);
        assert!(eisenstein(g.lattice(), 6).norm() < 1e-13);
    }

    #[test]
    fn sigma_basics() {
        let ev = square();
        assert_eq!(ev.sigma(ZERO).unwrap(), ZERO);
        assert_eq!(ev.sigma_derivative_at(ZERO).unwrap(), ONE);
        let h = 1e-5;
        let fd = (ev.sigma(c(h, 0.0)).unwrap() - ev.sigma(c(-h, 0.0)).unwrap()) / (2.0 * h);
        assert!((fd - ONE).norm() < 1e-9);
        for (_, p) in ev.lattice().enumerate(9.0) {
            assert_eq!(ev.sigma(p).unwrap(), ZERO);
        }
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let z = crate::rng::uniform_disk(&mut r, 9.0);
            let (a, b) = (ev.sigma(z).unwrap(), ev.sigma(-z).unwrap());
            assert!((a + b).norm() <= 1e-10 * a.norm());
        }
        assert!(matches!(ev.sigma(c(10.5, 0.0)), Err(Error::OutsideDomain { .. })));
        assert!(ev.sigma_with_error(c(9.0, 0.0)).unwrap().tail_estimate < 1e-9);
    }

    #[test]
    fn quasi_periods_of_square_lattice() {
        let ev = square();
        let (e1, e2) = ev.quasi_periods();
        assert!(e1.im.abs() < 1e-9);
        assert!((e2 + Complex64::i() * e1).norm() < 1e-9);
        // classical value: η₁ = π for the square lattice of unit periods
        assert!((e1.re - PI).abs() < 1e-9, "{e1}");
        assert!(ev.legendre_residual() < 1e-6);
        assert!(ev.a_lambda().norm() < 1e-6);
        for k in 0..20 {
            let z = Complex64::from_polar(0.3 + 0.1 * k as f64, 0.7 * k as f64);
            let [r1, r2] = ev.quasi_periodicity_residual(z).unwrap();
            assert!(r1 <= 1e-6 && r2 <= 1e-6, "{z}: {r1} {r2}");
        }
    }

    #[test]
    fn quasi_periods_have_weight_minus_one() {
        let l = Lattice::new(c(1.0, 0.0), c(0.3, 1.1)).unwrap();
        let ev = SigmaEvaluator::new(l, 30.0).unwrap();
        let scale = c(0.6, 0.2);
        let ev2 = SigmaEvaluator::new(l.scaled(scale).unwrap(), 30.0 * scale.norm()).unwrap();
        let (a1, a2) = ev.quasi_periods();
        let (b1, b2) = ev2.quasi_periods();
        assert!((b1 - a1 / scale).norm() < 1e-7 * a1.norm());
        assert!((b2 - a2 / scale).norm() < 1e-7 * a2.norm());
        assert!(ev.legendre_residual() < 1e-6);
    }

    #[test]
    fn sigma_mod_growth_is_periodic() {
        let ev = square();
        let g = sigma_growth(&ev, 8.0, 0.1).unwrap();
        assert!(g.sup.is_finite() && g.sup > 0.0);
        assert!(g.sup <= 1.01 * g.sup_inner, "{g:?}");
        // zeros are the lattice points
        assert_eq!(ev.sigma_mod(c(2.0, -3.0)).unwrap(), ZERO);
        assert!(ev.sigma_mod(c(2.5, -3.0)).unwrap().norm() > 0.0);
    }

    #[test]
    fn counterexample_properties() {
        let ev = SigmaEvaluator::new(Lattice::square(1.0).unwrap(), 36.0).unwrap();
        let q = critical_counterexample(&ev, ZERO, ONE).unwrap();
        assert!((q.eval(ZERO).unwrap() + ONE).norm() < 1e-12);
        let h = 1e-6;
        let near = q.eval(c(h, 0.0)).unwrap();
        assert!((near + ONE).norm() < 1e-4);
        for (_, p) in ev.lattice().enumerate(11.0) {
            if p != ZERO && p != ONE {
                assert_eq!(q.eval(p).unwrap(), ZERO);
            }
        }
        assert!(q.eval(ONE).unwrap().norm() > 0.0);
        assert!(critical_counterexample(&ev, ONE, ONE).is_err());
        assert!(critical_counterexample(&ev, c(0.5, 0.0), ONE).is_err());
        // Q(λ) matches σ_Λ′(λ)/(λ − λ′) away from the origin too
        let q2 = critical_counterexample(&ev, c(1.0, 1.0), c(-2.0, 0.0)).unwrap();
        let lam = c(1.0, 1.0);
        let expected = ev.sigma_derivative_at(lam).unwrap() * (ev.a_lambda() * lam * lam).exp() / (lam - c(-2.0, 0.0));
        assert!((q2.eval(lam).unwrap() - expected).norm() < 1e-10 * expected.norm());
    }

    fn lambda_beta_set(beta: f64, radius: f64) -> IndexedPointSet {
        IndexedPointSet::lattice_points(Lattice::critical(beta).unwrap(), radius, Tag::A).unwrap()
    }

    #[test]
    fn g_gamma_on_the_lattice_is_truncated_sigma() {
        let beta = PI;
        let set = lambda_beta_set(beta, 30.0);
        let ev = GGammaEvaluator::new(&set, beta, 30.0).unwrap();
        assert_eq!(ev.gamma00(), ZERO);
        for p in ev.points().into_iter().filter(|p| p.norm() < 10.0) {
            assert_eq!(ev.eval(p).unwrap(), ZERO);
        }
        let sig = square();
        let z = c(0.4, 0.3);
        // σ differs from the bare product only by the restored tail, tiny at small |z|
        let rel = (ev.eval(z).unwrap() / sig.sigma(z).unwrap() - ONE).norm();
        assert!(rel < 1e-4, "{rel}");
        let d = ev.derivative_at(c(1.0, 1.0)).unwrap();
        let h = 1e-6;
        let fd = (ev.eval(c(1.0 + h, 1.0)).unwrap() - ev.eval(c(1.0 - h, 1.0)).unwrap()) / (2.0 * h);
        assert!((d - fd).norm() < 1e-6 * d.norm());
        let d0 = ev.derivative_at(ZERO).unwrap();
        let fd0 = (ev.eval(c(h, 0.0)).unwrap() - ev.eval(c(-h, 0.0)).unwrap()) / (2.0 * h);
        assert!((d0 - fd0).norm() < 1e-6 * d0.norm());
    }

    #[test]
    fn g_gamma_anchor_swap_and_stability() {
        let beta = 2.0;
        let lattice = Lattice::critical(beta).unwrap();
        let mut set = IndexedPointSet::new(lattice, 20.0, 0.0).unwrap();
        for (idx, p) in lattice.enumerate(20.0) {
            let shift = if idx == LatticeIndex::ORIGIN { c(0.7, -1.1) } else { c(0.01, -0.02) };
            set.insert_position(idx, Tag::A, p + shift).unwrap();
        }
        let ev = GGammaEvaluator::new(&set, beta, 20.0).unwrap();
        // (0,0) moved away, so a neighbour has the least modulus
        assert_ne!(ev.gamma00(), set.position(LatticeIndex::ORIGIN, Tag::A).unwrap());
        for p in ev.points().into_iter().filter(|p| p.norm() < 6.0) {
            assert_eq!(ev.eval(p).unwrap(), ZERO);
        }
        let mut moved = IndexedPointSet::new(lattice, 20.0, 0.0).unwrap();
        for (i, t, p) in set.points() {
            moved.insert_position(i, t, p + Complex64::from_polar(1e-6, (i.m * 7 + i.n) as f64)).unwrap();
        }
        let ev2 = GGammaEvaluator::new(&moved, beta, 20.0).unwrap();
        for z in [c(0.2, 0.3), c(-2.1, 1.4), c(3.3, -3.6)] {
            let (a, b) = (ev.eval(z).unwrap(), ev2.eval(z).unwrap());
            assert!((a - b).norm() <= 1e-4 * a.norm(), "{z}");
        }
    }

    #[test]
    fn derivative_probe_is_positive() {
        let beta = 2.0;
        let ev = GGammaEvaluator::new(&lambda_beta_set(beta, 30.0), beta, 30.0).unwrap();
        let probe = derivative_lower_bound_probe(&ev, 8.0).unwrap();
        assert!(probe.min_normalised > 0.0 && probe.constant_c_big > 0.0);
        assert!(probe.min_normalised >= probe.constant_c_big * (1.0 - 1e-12));
    }

    #[test]
    fn lagrange_reconstructs_constants() {
        let alpha = 1.0;
        let beta = 2.0 * alpha;
        let ev = GGammaEvaluator::new(&lambda_beta_set(beta, 40.0), beta, 40.0).unwrap();
        let samples: Vec<_> = ev.points().into_iter().filter(|g| g.norm() <= 12.0).map(|g| (g, ONE)).collect();
        for z in [c(0.3, 0.2), c(-1.1, 0.7), c(1.5, -1.2)] {
            let v = lagrange_interpolate(&ev, &samples, z).unwrap();
            assert!((v.value - ONE).norm() < 1e-3, "{z}: {}", v.value);
            let tail = &v.shell_increments[6..];
            assert!(tail.windows(2).all(|w| w[1] < w[0]), "{:?}", v.shell_increments);
        }
        let g = samples[3].0;
        assert_eq!(lagrange_interpolate(&ev, &samples, g).unwrap().value, ONE);
    }

    #[test]
    fn three_lines_note() {
        let note = three_lines_liouville_note([0.0, PI / 3.0, 2.0 * PI / 3.0], 1.0, &[10.0, 25.0, 50.0]).unwrap();
        assert!(note.all_sectors_acute && note.density_decreasing && !note.certifying);
        assert!(note.sector_angles.iter().all(|s| (s - PI / 3.0).abs() < 1e-12));
        assert!(note.density.fitted_density <= 0.05);
        assert!(three_lines_liouville_note([0.0, PI / 4.0, PI / 2.0], 1.0, &[10.0]).is_err());
    }
}
