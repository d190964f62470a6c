//! Gauss rules and a polar product rule for Fock-space integrals.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Gauss–Legendre rule on [-1, 1].
    pub fn legendre(n: usize) -> Self {
        assert!(n > 0);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = nf * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Gauss–Hermite rule for the weight e^{-s²} on the real line.
    ///
    /// Nodes start from the eigenvalues of the Jacobi matrix and are polished by
    /// Newton steps on the orthonormal recurrence, which also yields the weights.
    pub fn hermite(n: usize) -> Self {
        assert!(n > 0);
        const PIM4: f64 = 0.751_125_544_464_942_5;
        let jacobi = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i.abs_diff(j) == 1 {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let mut guesses: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
        guesses.sort_by(f64::total_cmp);
        let nf = n as f64;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for mut z in guesses {
            let mut pp = 0.0;
            for _ in 0..20 {
                let (mut p1, mut p2) = (PIM4, 0.0);
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes.push(z);
            weights.push(2.0 / (pp * pp));
        }
        // symmetrize against round-off
        for i in 0..n / 2 {
            let x = 0.5 * (nodes[n - 1 - i] - nodes[i]);
            let w = 0.5 * (weights[i] + weights[n - 1 - i]);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Map a Legendre rule from [-1, 1] onto [a, b].
    pub fn on_interval(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| (mid + half * x, half * w))
            .collect()
    }
}

/// 128-node Gauss–Hermite rule, computed once.
pub fn hermite128() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::hermite(128))
}

/// Polar product rule for ∫_{r0 ≤ |z| ≤ r1} g(z) (α/π) e^{-α|z|²} dA(z):
/// Gauss–Legendre in the radius, trapezoid (spectrally exact for trigonometric
/// polynomials of degree below `angular`) in the angle.
#[derive(Debug, Clone)]
pub struct PolarRule {
    points: Vec<(Complex64, f64)>,
}

impl PolarRule {
    pub fn annulus(alpha: f64, r0: f64, r1: f64, radial: usize, angular: usize) -> Self {
        let radial_rule = GaussRule::legendre(radial).on_interval(r0, r1);
        let dt = 2.0 * PI / angular as f64;
        let mut points = Vec::with_capacity(radial * angular);
        for (r, wr) in radial_rule {
            let w = wr * r * dt * (alpha / PI) * (-alpha * r * r).exp();
            for k in 0..angular {
                points.push((Complex64::from_polar(r, k as f64 * dt), w));
            }
        }
        Self { points }
    }

    pub fn disk(alpha: f64, radius: f64, radial: usize, angular: usize) -> Self {
        Self::annulus(alpha, 0.0, radius, radial, angular)
    }

    pub fn points(&self) -> &[(Complex64, f64)] {
        &self.points
    }

    pub fn integrate<G: Fn(Complex64) -> f64>(&self, g: G) -> f64 {
        self.points.iter().map(|&(z, w)| w * g(z)).sum()
    }

    pub fn integrate_complex<G: Fn(Complex64) -> Complex64>(&self, g: G) -> Complex64 {
        self.points.iter().map(|&(z, w)| g(z) * w).sum()
    }
}
