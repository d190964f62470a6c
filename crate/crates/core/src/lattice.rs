//! Planar lattices mω₁ + nω₂ + shift and their sampling predicates.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Absolute tolerance, in lattice coordinates, for deciding membership.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Radius of the window on which reflection closure is verified.
const CLOSURE_WINDOW: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(i64, i64)", into = "(i64, i64)")]
pub struct LatticeIndex {
    pub m: i64,
    pub n: i64,
}

impl LatticeIndex {
    pub const ORIGIN: LatticeIndex = LatticeIndex { m: 0, n: 0 };

    pub fn new(m: i64, n: i64) -> Self {
        Self { m, n }
    }
}

impl From<(i64, i64)> for LatticeIndex {
    fn from((m, n): (i64, i64)) -> Self {
        Self { m, n }
    }
}

impl From<LatticeIndex> for (i64, i64) {
    fn from(idx: LatticeIndex) -> Self {
        (idx.m, idx.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeRepr", into = "LatticeRepr")]
pub struct Lattice {
    omega1: Complex64,
    omega2: Complex64,
    shift: Complex64,
}

#[derive(Serialize, Deserialize)]
struct LatticeRepr {
    omega1: Complex64,
    omega2: Complex64,
    #[serde(default)]
    shift: Complex64,
}

impl TryFrom<LatticeRepr> for Lattice {
    type Error = Error;

    fn try_from(r: LatticeRepr) -> Result<Self> {
        Lattice::new(r.omega1, r.omega2)?.with_shift(r.shift)
    }
}

impl From<Lattice> for LatticeRepr {
    fn from(l: Lattice) -> Self {
        LatticeRepr { omega1: l.omega1, omega2: l.omega2, shift: l.shift }
    }
}

impl Lattice {
    pub fn new(omega1: Complex64, omega2: Complex64) -> Result<Self> {
        let all_finite = [omega1.re, omega1.im, omega2.re, omega2.im].iter().all(|x| x.is_finite());
        if !all_finite || omega1 == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidLattice(format!("periods {omega1}, {omega2}")));
        }
        let ratio = omega2 / omega1;
        if !(ratio.im > 0.0) {
            return Err(Error::InvalidLattice(format!(
                "Im(omega2/omega1) = {} must be positive",
                ratio.im
            )));
        }
        Ok(Self { omega1, omega2, shift: Complex64::new(0.0, 0.0) })
    }

    /// Lattice generated by `a` and `b` in either order; the pair is swapped when
    /// needed so that the stored basis is positively oriented.
    pub fn from_generators(a: Complex64, b: Complex64) -> Result<Self> {
        if b.norm() > 0.0 && a.norm() > 0.0 && (b / a).im < 0.0 {
            Self::new(b, a)
        } else {
            Self::new(a, b)
        }
    }

    pub fn with_shift(mut self, shift: Complex64) -> Result<Self> {
        if !(shift.re.is_finite() && shift.im.is_finite()) {
            return Err(Error::InvalidLattice(format!("shift {shift}")));
        }
        self.shift = shift;
        Ok(self)
    }

    /// v(ℤ + iℤ).
    pub fn square(v: f64) -> Result<Self> {
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!("lattice spacing {v} must be positive")));
        }
        Self::new(Complex64::new(v, 0.0), Complex64::new(0.0, v))
    }

    /// The square lattice sqrt(π/β)(ℤ + iℤ) of critical density for weight β.
    pub fn critical(beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!("weight {beta} must be positive")));
        }
        Self::square((PI / beta).sqrt())
    }

    pub fn omega1(&self) -> Complex64 {
        self.omega1
    }

    pub fn omega2(&self) -> Complex64 {
        self.omega2
    }

    pub fn shift(&self) -> Complex64 {
        self.shift
    }

    /// Area of a fundamental cell, Im(conj(ω₁)ω₂).
    pub fn area(&self) -> f64 {
        (self.omega1.conj() * self.omega2).im
    }

    pub fn density(&self) -> f64 {
        1.0 / self.area()
    }

    /// The lattice multiplied by a nonzero complex number (shift included).
    pub fn scaled(&self, c: Complex64) -> Result<Self> {
        Self::new(c * self.omega1, c * self.omega2)?.with_shift(c * self.shift)
    }

    pub fn point(&self, idx: LatticeIndex) -> Complex64 {
        self.omega1 * idx.m as f64 + self.omega2 * idx.n as f64 + self.shift
    }

    /// Real coordinates (m, n) with z = mω₁ + nω₂ + shift.
    pub fn coordinates(&self, z: Complex64) -> (f64, f64) {
        let d = z - self.shift;
        let s = self.area();
        let m = -(self.omega2.conj() * d).im / s;
        let n = (self.omega1.conj() * d).im / s;
        (m, n)
    }

    /// Index of `z` if it is a lattice point up to [`MEMBERSHIP_TOL`] in coordinates.
    pub fn index_of(&self, z: Complex64) -> Option<LatticeIndex> {
        let (m, n) = self.coordinates(z);
        let (mr, nr) = (m.round(), n.round());
        if (m - mr).abs() <= MEMBERSHIP_TOL && (n - nr).abs() <= MEMBERSHIP_TOL {
            Some(LatticeIndex::new(mr as i64, nr as i64))
        } else {
            None
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.index_of(z).is_some()
    }

    /// All lattice points with |point| ≤ radius, sorted by (|point|, arg).
    pub fn enumerate(&self, radius: f64) -> Vec<(LatticeIndex, Complex64)> {
        self.enumerate_around(Complex64::new(0.0, 0.0), radius)
    }

    /// All lattice points with |point − center| ≤ radius, sorted by distance then argument.
    pub fn enumerate_around(&self, center: Complex64, radius: f64) -> Vec<(LatticeIndex, Complex64)> {
        if !(radius >= 0.0) {
            return Vec::new();
        }
        let s = self.area();
        let (mc, nc) = self.coordinates(center);
        let dm = self.omega2.norm() * radius / s;
        let dn = self.omega1.norm() * radius / s;
        let (m0, m1) = ((mc - dm).floor() as i64 - 1, (mc + dm).ceil() as i64 + 1);
        let (n0, n1) = ((nc - dn).floor() as i64 - 1, (nc + dn).ceil() as i64 + 1);
        let mut out = Vec::new();
        for m in m0..=m1 {
            for n in n0..=n1 {
                let idx = LatticeIndex::new(m, n);
                let p = self.point(idx);
                if (p - center).norm() <= radius {
                    out.push((idx, p));
                }
            }
        }
        out.sort_by(|a, b| polar_order(a.1 - center, b.1 - center).then(a.0.cmp(&b.0)));
        out
    }

    /// Liouville criterion: s(Λ) < π/α.
    pub fn is_liouville(&self, alpha: f64) -> bool {
        self.area() < PI / alpha
    }

    /// Uniqueness criterion at the critical rate: s(Λ) ≤ π/α.
    pub fn is_uniqueness(&self, alpha: f64) -> bool {
        self.area() <= PI / alpha
    }

    /// Invariance under reflection across both coordinate axes.
    pub fn in_class_l(&self) -> Result<bool> {
        if self.shift != Complex64::new(0.0, 0.0) {
            return Err(Error::Precondition(format!(
                "reflection class is defined for unshifted lattices (shift = {})",
                self.shift
            )));
        }
        let gens = [self.omega1, self.omega2];
        if !gens.iter().all(|w| self.contains(w.conj()) && self.contains(-w)) {
            return Ok(false);
        }
        let reach = CLOSURE_WINDOW.max(2.0 * self.omega1.norm().max(self.omega2.norm()));
        Ok(self
            .enumerate(reach)
            .iter()
            .all(|&(_, p)| self.contains(p.conj()) && self.contains(-p)))
    }

    /// Translates keep the cell area, so Λ − w carries the verdict of Λ.
    pub fn liouville_shift_invariance(&self, alpha: f64, w: Complex64) -> bool {
        let shifted = Self { shift: self.shift - w, ..*self };
        let verdict = shifted.is_liouville(alpha);
        debug_assert_eq!(verdict, self.is_liouville(alpha));
        verdict
    }
}

/// Total order by modulus, then principal argument in (−π, π].
pub fn polar_order(a: Complex64, b: Complex64) -> Ordering {
    a.norm().total_cmp(&b.norm()).then_with(|| principal_arg(a).total_cmp(&principal_arg(b)))
}

/// Argument in (−π, π]; atan2 returns −π for negative reals with a −0 imaginary part.
pub fn principal_arg(z: Complex64) -> f64 {
    let t = z.arg();
    if t == -PI {
        PI
    } else {
        t
    }
}
