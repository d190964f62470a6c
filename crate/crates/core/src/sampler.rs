//! Sampling-set constructions over perturbed lattices, and Monte Carlo estimates
//! for the small-angle probabilities of random triangles.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lattice::{Lattice, LatticeIndex, MEMBERSHIP_TOL};
use crate::pointset::{median_angle, DensityReport, IndexedPointSet, PointSetDoc, Tag};
use crate::rng::{block_stream, index_stream, uniform_disk};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbationMode {
    /// Three offsets of length κ at angles 0, 2π/3, 4π/3.
    Equilateral,
    /// Independent uniform draws on the disk of radius κ.
    #[default]
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub lattice: Lattice,
    pub gamma: f64,
    pub kappa_cap: f64,
    pub window_radius: f64,
    pub seed: u64,
}

impl GeneratorConfig {
    /// Validates γ > 2α for the target weight α and 0 ≤ κ ≤ 1.
    pub fn new(lattice: Lattice, gamma: f64, kappa_cap: f64, window_radius: f64, seed: u64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(gamma > 2.0 * alpha) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma = {gamma} must exceed 2·alpha = {}", 2.0 * alpha)));
        }
        check_cap(kappa_cap, 1.0)?;
        if !(window_radius > 0.0) || !window_radius.is_finite() {
            return Err(Error::InvalidParameter(format!("window radius {window_radius}")));
        }
        Ok(Self { lattice, gamma, kappa_cap, window_radius, seed })
    }
}

fn check_cap(kappa: f64, limit: f64) -> Result<()> {
    if !(0.0..=limit).contains(&kappa) {
        return Err(Error::InvalidParameter(format!("kappa cap {kappa} must lie in [0, {limit}]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstructionKind {
    Det3,
    Rand3,
    Real2,
    Even1,
    OptReal,
    OptEven,
}

impl ConstructionKind {
    pub fn name(self) -> &'static str {
        match self {
            ConstructionKind::Det3 => "det3",
            ConstructionKind::Rand3 => "rand3",
            ConstructionKind::Real2 => "real2",
            ConstructionKind::Even1 => "even1",
            ConstructionKind::OptReal => "optreal",
            ConstructionKind::OptEven => "opteven",
        }
    }
}

/// A generated sampling set. `samples` is the set itself; `triples`, when present,
/// holds the derived triples (A, B, C) whose angles the certificates inspect.
#[derive(Debug, Clone, PartialEq)]
pub struct Construction {
    pub kind: ConstructionKind,
    pub samples: IndexedPointSet,
    pub triples: Option<IndexedPointSet>,
}

impl Construction {
    /// The set on which the angle condition is checked.
    pub fn triple_set(&self) -> &IndexedPointSet {
        self.triples.as_ref().unwrap_or(&self.samples)
    }

    pub fn to_doc(&self) -> ConstructionDoc {
        ConstructionDoc {
            construction: Some(self.kind),
            samples: self.samples.to_doc(),
            triples: self.triples.as_ref().map(IndexedPointSet::to_doc),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<ConstructionKind>,
    #[serde(flatten)]
    pub samples: PointSetDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triples: Option<PointSetDoc>,
}

impl ConstructionDoc {
    pub fn samples(&self) -> Result<IndexedPointSet> {
        IndexedPointSet::from_doc(&self.samples)
    }

    pub fn triples(&self) -> Result<Option<IndexedPointSet>> {
        self.triples.as_ref().map(IndexedPointSet::from_doc).transpose()
    }
}

fn random_offset(seed: u64, idx: LatticeIndex, slot: usize, kappa: f64) -> Complex64 {
    uniform_disk(&mut index_stream(seed, idx.m, idx.n, slot as u64 + 1), kappa)
}

fn equilateral_offset(slot: usize, kappa: f64) -> Complex64 {
    Complex64::from_polar(kappa, TAU * slot as f64 / 3.0)
}

/// Scaled offsets for slot 0..3 at every index, in parallel with index order kept.
fn draw_offsets(
    indices: &[LatticeIndex],
    slots: usize,
    kappa: f64,
    seed: u64,
    mode: PerturbationMode,
) -> Vec<(LatticeIndex, Vec<Complex64>)> {
    indices
        .par_iter()
        .map(|&idx| {
            let offsets = (0..slots)
                .map(|slot| match mode {
                    PerturbationMode::Equilateral => equilateral_offset(slot, kappa),
                    PerturbationMode::Uniform => random_offset(seed, idx, slot, kappa),
                })
                .collect();
            (idx, offsets)
        })
        .collect()
}

fn window_indices(lattice: &Lattice, radius: f64) -> Vec<LatticeIndex> {
    lattice.enumerate(radius).into_iter().map(|(i, _)| i).collect()
}

/// Equilateral micro-triangles a, b, c = λ + κf(λ)·{1, e^{2πi/3}, e^{4πi/3}}.
pub fn deterministic_triple(cfg: &GeneratorConfig) -> Result<Construction> {
    triple_over(cfg, &window_indices(&cfg.lattice, cfg.window_radius), PerturbationMode::Equilateral, Tag::TRIPLE)
        .map(|samples| Construction { kind: ConstructionKind::Det3, samples, triples: None })
}

/// Three independent uniform draws on B_{κf(λ)}(λ) per lattice point.
pub fn random_triple(cfg: &GeneratorConfig) -> Result<Construction> {
    triple_over(cfg, &window_indices(&cfg.lattice, cfg.window_radius), PerturbationMode::Uniform, Tag::DRAWS)
        .map(|samples| Construction { kind: ConstructionKind::Rand3, samples, triples: None })
}

fn triple_over(
    cfg: &GeneratorConfig,
    indices: &[LatticeIndex],
    mode: PerturbationMode,
    tags: [Tag; 3],
) -> Result<IndexedPointSet> {
    let mut set = IndexedPointSet::new(cfg.lattice, cfg.window_radius, cfg.gamma)?;
    for (idx, offsets) in draw_offsets(indices, 3, cfg.kappa_cap, cfg.seed, mode) {
        for (tag, u) in tags.into_iter().zip(offsets) {
            set.insert_scaled(idx, tag, u)?;
        }
    }
    Ok(set)
}

fn require_class_l(lattice: &Lattice) -> Result<()> {
    if lattice.in_class_l()? {
        Ok(())
    } else {
        Err(Error::Precondition("lattice is not invariant under the axis reflections".into()))
    }
}

fn image_index(lattice: &Lattice, z: Complex64) -> Result<LatticeIndex> {
    lattice
        .index_of(z)
        .ok_or_else(|| Error::Numerical(format!("reflected point {z} is not a lattice point")))
}

/// Two draws Z_{λ,1}, Z_{λ,2} per lattice point. The triples
/// (Z_{λ,1}, Z_{λ,2}, conj Z_{λ̄,1}) are indexed by the closed upper half plane.
pub fn real_pair(cfg: &GeneratorConfig) -> Result<Construction> {
    require_class_l(&cfg.lattice)?;
    let lattice = cfg.lattice;
    let indices = window_indices(&lattice, cfg.window_radius);
    let draws: HashMap<LatticeIndex, Vec<Complex64>> =
        draw_offsets(&indices, 2, cfg.kappa_cap, cfg.seed, PerturbationMode::Uniform).into_iter().collect();
    let mut samples = IndexedPointSet::new(lattice, cfg.window_radius, cfg.gamma)?;
    let mut triples = IndexedPointSet::new(lattice, cfg.window_radius, cfg.gamma)?;
    for &idx in &indices {
        let d = &draws[&idx];
        samples.insert_scaled(idx, Tag::L1, d[0])?;
        samples.insert_scaled(idx, Tag::L2, d[1])?;
        let lam = lattice.point(idx);
        if lam.im < -MEMBERSHIP_TOL {
            continue;
        }
        let mirror = image_index(&lattice, lam.conj())?;
        triples.insert_scaled(idx, Tag::A, d[0])?;
        triples.insert_scaled(idx, Tag::B, d[1])?;
        triples.insert_scaled(idx, Tag::C, draws[&mirror][0].conj())?;
    }
    Ok(Construction { kind: ConstructionKind::Real2, samples, triples: Some(triples) })
}

/// One draw per nonzero lattice point. The triples (Z_λ, conj Z_{λ̄}, −Z_{−λ})
/// are indexed by the closed first quadrant without the origin.
pub fn even_single(cfg: &GeneratorConfig) -> Result<Construction> {
    require_class_l(&cfg.lattice)?;
    let lattice = cfg.lattice;
    let indices: Vec<_> = window_indices(&lattice, cfg.window_radius)
        .into_iter()
        .filter(|&i| lattice.point(i).norm() > MEMBERSHIP_TOL)
        .collect();
    let draws: HashMap<LatticeIndex, Complex64> =
        draw_offsets(&indices, 1, cfg.kappa_cap, cfg.seed, PerturbationMode::Uniform)
            .into_iter()
            .map(|(i, d)| (i, d[0]))
            .collect();
    let mut samples = IndexedPointSet::new(lattice, cfg.window_radius, cfg.gamma)?;
    let mut triples = IndexedPointSet::new(lattice, cfg.window_radius, cfg.gamma)?;
    for &idx in &indices {
        samples.insert_scaled(idx, Tag::L1, draws[&idx])?;
        let lam = lattice.point(idx);
        if lam.re < -MEMBERSHIP_TOL || lam.im < -MEMBERSHIP_TOL {
            continue;
        }
        let conj_idx = image_index(&lattice, lam.conj())?;
        let neg_idx = image_index(&lattice, -lam)?;
        triples.insert_scaled(idx, Tag::A, draws[&idx])?;
        triples.insert_scaled(idx, Tag::B, draws[&conj_idx].conj())?;
        triples.insert_scaled(idx, Tag::C, -draws[&neg_idx])?;
    }
    Ok(Construction { kind: ConstructionKind::Even1, samples, triples: Some(triples) })
}

/// Parameters shared by the two density-optimised constructions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptConfig {
    pub v: f64,
    pub gamma: f64,
    pub kappa_cap: f64,
    pub window_radius: f64,
    pub seed: u64,
    pub mode: PerturbationMode,
}

impl OptConfig {
    fn validate(&self, cap_limit: f64) -> Result<()> {
        if !(self.v > 0.0 && self.v < 0.5) {
            return Err(Error::InvalidParameter(format!("v = {} must lie in (0, 1/2)", self.v)));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma = {}", self.gamma)));
        }
        if !(self.window_radius > 0.0) {
            return Err(Error::InvalidParameter(format!("window radius {}", self.window_radius)));
        }
        check_cap(self.kappa_cap, cap_limit)
    }
}

/// v(ℤ+iℤ) + (v/2)i, the lattice carrying the real-class construction.
pub fn opt_real_lattice(v: f64) -> Result<Lattice> {
    Lattice::square(v)?.with_shift(Complex64::new(0.0, v / 2.0))
}

/// Indices of Λ′ = v{m(1+i)+n(1−i)} + (v/2)i inside v(ℤ+iℤ) + (v/2)i.
pub fn in_opt_real_sublattice(idx: LatticeIndex) -> bool {
    (idx.m + idx.n).rem_euclid(2) == 0
}

/// Checks Λ′ ⊔ conj(Λ′) = Λ on the window.
pub fn check_opt_real_partition(v: f64, radius: f64) -> Result<()> {
    let lattice = opt_real_lattice(v)?;
    for (idx, lam) in lattice.enumerate(radius) {
        let mirror = image_index(&lattice, lam.conj())?;
        if in_opt_real_sublattice(idx) == in_opt_real_sublattice(mirror) {
            return Err(Error::Numerical(format!(
                "index ({}, {}) and its conjugate lie on the same side",
                idx.m, idx.n
            )));
        }
    }
    Ok(())
}

/// Triples A, B, C f-close to the index-parity sublattice Λ′; density 3/(2v²).
pub fn density_opt_real(cfg: &OptConfig) -> Result<Construction> {
    cfg.validate(1.0)?;
    let lattice = opt_real_lattice(cfg.v)?;
    check_opt_real_partition(cfg.v, cfg.window_radius)?;
    let gen = GeneratorConfig {
        lattice,
        gamma: cfg.gamma,
        kappa_cap: cfg.kappa_cap,
        window_radius: cfg.window_radius,
        seed: cfg.seed,
    };
    let indices: Vec<_> =
        window_indices(&lattice, cfg.window_radius).into_iter().filter(|&i| in_opt_real_sublattice(i)).collect();
    let samples = triple_over(&gen, &indices, cfg.mode, Tag::TRIPLE)?;
    Ok(Construction { kind: ConstructionKind::OptReal, samples, triples: None })
}

/// v(ℤ+iℤ) + (v/2)(1+i), the lattice carrying the even-real construction.
pub fn opt_even_lattice(v: f64) -> Result<Lattice> {
    Lattice::square(v)?.with_shift(Complex64::new(v / 2.0, v / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrant {
    Q1,
    Q2,
    Q3,
    Q4,
}

/// Which of the column sets Q1..Q4 contains the index:
/// Q1 = (4m, n), Q2 = (−2−4m, n), Q3 = (−3−4m, −n−1), Q4 = (3+4m, −n−1) with m, n ≥ 0.
pub fn opt_even_quadrant(idx: LatticeIndex) -> Option<Quadrant> {
    let (a, b) = (idx.m, idx.n);
    if b >= 0 {
        if a >= 0 && a % 4 == 0 {
            return Some(Quadrant::Q1);
        }
        if a <= -2 && (-2 - a) % 4 == 0 {
            return Some(Quadrant::Q2);
        }
    } else {
        if a <= -3 && (-3 - a) % 4 == 0 {
            return Some(Quadrant::Q3);
        }
        if a >= 3 && (a - 3) % 4 == 0 {
            return Some(Quadrant::Q4);
        }
    }
    None
}

/// Images of an index of v(ℤ+iℤ) + (v/2)(1+i) under z ↦ conj z, −z, −conj z.
fn opt_even_images(idx: LatticeIndex) -> [LatticeIndex; 3] {
    let (a, b) = (idx.m, idx.n);
    [LatticeIndex::new(a, -b - 1), LatticeIndex::new(-a - 1, -b - 1), LatticeIndex::new(-a - 1, b)]
}

/// Checks that Λ′, conj Λ′, −Λ′, −conj Λ′ partition Λ on the window.
pub fn check_opt_even_partition(v: f64, radius: f64) -> Result<()> {
    let lattice = opt_even_lattice(v)?;
    for (idx, lam) in lattice.enumerate(radius) {
        let images = opt_even_images(idx);
        for (image, z) in images.iter().zip([lam.conj(), -lam, -lam.conj()]) {
            if image_index(&lattice, z)? != *image {
                return Err(Error::Numerical(format!("reflection table wrong at ({}, {})", idx.m, idx.n)));
            }
        }
        // exactly one of λ and its three reflections lies in Λ′
        let hits = std::iter::once(idx).chain(images).filter(|&i| opt_even_quadrant(i).is_some()).count();
        if hits != 1 {
            return Err(Error::Numerical(format!(
                "index ({}, {}) has {hits} representatives in the column sets",
                idx.m, idx.n
            )));
        }
    }
    Ok(())
}

/// conj(A) ∪ (−B) ∪ (−conj C) for triples A, B, C f-close to Λ′ = Q1 ⊔ Q2 ⊔ Q3 ⊔ Q4;
/// density 3/(4v²). Entries are indexed by the image lattice point, tags A, B, C
/// recording which reflection produced them. Requires κ ≤ v/4.
pub fn density_opt_even(cfg: &OptConfig) -> Result<Construction> {
    cfg.validate(cfg.v / 4.0)?;
    let lattice = opt_even_lattice(cfg.v)?;
    check_opt_even_partition(cfg.v, cfg.window_radius)?;
    let gen = GeneratorConfig {
        lattice,
        gamma: cfg.gamma,
        kappa_cap: cfg.kappa_cap,
        window_radius: cfg.window_radius,
        seed: cfg.seed,
    };
    let sources: Vec<_> = window_indices(&lattice, cfg.window_radius)
        .into_iter()
        .filter(|&i| opt_even_quadrant(i).is_some())
        .collect();
    let triples = triple_over(&gen, &sources, cfg.mode, Tag::TRIPLE)?;
    let mut samples = IndexedPointSet::new(lattice, cfg.window_radius, cfg.gamma)?;
    for &idx in &sources {
        let [conj_idx, neg_idx, neg_conj_idx] = opt_even_images(idx);
        let get = |tag| triples.scaled_offset(idx, tag).expect("generated above");
        samples.insert_scaled(conj_idx, Tag::A, get(Tag::A).conj())?;
        samples.insert_scaled(neg_idx, Tag::B, -get(Tag::B))?;
        samples.insert_scaled(neg_conj_idx, Tag::C, -get(Tag::C).conj())?;
    }
    Ok(Construction { kind: ConstructionKind::OptEven, samples, triples: Some(triples) })
}

// ---------------------------------------------------------------------------
// three lines through the origin

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeLines {
    /// Line directions reduced to [0, π) and sorted.
    pub angles: [f64; 3],
    /// Opening angles of the six sectors (each gap appears twice).
    pub sector_angles: [f64; 6],
    pub pitch: f64,
    pub radius: f64,
    pub points: Vec<Complex64>,
}

/// Points at pitch h on three lines through 0, over |z| ≤ radius. The lines must
/// cut the plane into six acute sectors.
pub fn three_lines(angles: [f64; 3], pitch: f64, radius: f64) -> Result<ThreeLines> {
    if !(pitch > 0.0) || !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("pitch {pitch}, radius {radius}")));
    }
    let mut a = angles.map(|t| t.rem_euclid(PI));
    a.sort_by(f64::total_cmp);
    let gaps = [a[1] - a[0], a[2] - a[1], PI - (a[2] - a[0])];
    if let Some(bad) = gaps.iter().find(|&&g| !(g > 1e-12 && g < FRAC_PI_2)) {
        return Err(Error::Precondition(format!("sector of opening {bad} is not acute")));
    }
    let steps = (radius / pitch + 1e-9).floor() as i64;
    let mut points = vec![Complex64::new(0.0, 0.0)];
    for &t in &a {
        let dir = Complex64::from_polar(1.0, t);
        for k in 1..=steps {
            let r = k as f64 * pitch;
            points.push(dir * r);
            points.push(-dir * r);
        }
    }
    Ok(ThreeLines {
        angles: a,
        sector_angles: [gaps[0], gaps[1], gaps[2], gaps[0], gaps[1], gaps[2]],
        pitch,
        radius,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReflectionMode {
    Half,
    Quarter,
}

/// S ∪ conj S (half) or S ∪ conj S ∪ −S ∪ −conj S (quarter), duplicates within 1e−12 removed.
/// First occurrences are kept, in input order.
pub fn reflection_closure(points: &[Complex64], mode: ReflectionMode) -> Vec<Complex64> {
    const TOL: f64 = 1e-12;
    let mut images: Vec<Complex64> = points.to_vec();
    images.extend(points.iter().map(|p| p.conj()));
    if mode == ReflectionMode::Quarter {
        images.extend(points.iter().map(|p| -p));
        images.extend(points.iter().map(|p| -p.conj()));
    }
    let cell = |p: Complex64| ((p.re / TOL).floor() as i64, (p.im / TOL).floor() as i64);
    let mut seen: HashMap<(i64, i64), Vec<Complex64>> = HashMap::new();
    let mut out = Vec::new();
    for p in images {
        let (cx, cy) = cell(p);
        let dup = (-1..=1).any(|dx| {
            (-1..=1).any(|dy| {
                seen.get(&(cx + dx, cy + dy)).is_some_and(|b| b.iter().any(|q| (q - p).norm() <= TOL))
            })
        });
        if !dup {
            seen.entry((cx, cy)).or_default().push(p);
            out.push(p);
        }
    }
    out
}

/// Density report helper for constructions: counts over the trusted part of the window.
pub fn construction_density(set: &IndexedPointSet, radii: &[f64]) -> Result<DensityReport> {
    crate::pointset::density_estimate(&set.positions(), Complex64::new(0.0, 0.0), radii, set.trusted_radius())
}

// ---------------------------------------------------------------------------
// Monte Carlo

pub const MC_BLOCK: u64 = 8192;
pub const MC_MIN_TRIALS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub trials: u64,
    pub epsilon: f64,
    pub hits: u64,
    pub p_hat: f64,
    pub stderr: f64,
    pub bound: f64,
    pub passed: bool,
}

fn run_mc<F>(trials: u64, epsilon: f64, seed: u64, domain: u64, draw: F) -> Result<McReport>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> (Complex64, Complex64, Complex64) + Sync,
{
    if trials < MC_MIN_TRIALS {
        return Err(Error::InvalidParameter(format!("need at least {MC_MIN_TRIALS} trials, got {trials}")));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon}")));
    }
    let blocks = trials.div_ceil(MC_BLOCK);
    let hits: u64 = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_stream(seed, domain, b);
            let n = MC_BLOCK.min(trials - b * MC_BLOCK);
            (0..n)
                .filter(|_| {
                    let (a, bb, c) = draw(&mut rng);
                    median_angle(a, bb, c) < epsilon
                })
                .count() as u64
        })
        .collect::<Vec<u64>>()
        .into_iter()
        .sum();
    let p_hat = hits as f64 / trials as f64;
    let stderr = (p_hat * (1.0 - p_hat) / trials as f64).sqrt();
    let bound = 4.0 * epsilon;
    Ok(McReport { trials, epsilon, hits, p_hat, stderr, bound, passed: p_hat + 3.0 * stderr <= bound || bound >= 1.0 })
}

/// P[φ(A, B, C) < ε] for three independent uniform points on the unit disk.
pub fn mc_angle_bound(trials: u64, epsilon: f64, seed: u64) -> Result<McReport> {
    run_mc(trials, epsilon, seed, 1, |rng| (uniform_disk(rng, 1.0), uniform_disk(rng, 1.0), uniform_disk(rng, 1.0)))
}

/// P[φ(A, B, conj A) < ε] for A, B independent uniform on the unit disk about 0.
pub fn mc_mirror_angle_bound(trials: u64, epsilon: f64, seed: u64) -> Result<McReport> {
    run_mc(trials, epsilon, seed, 2, |rng| {
        let a = uniform_disk(rng, 1.0);
        let b = uniform_disk(rng, 1.0);
        (a, b, a.conj())
    })
}

/// Draws used for a sanity check that random triples are almost never collinear.
pub fn collinear_fraction(set: &IndexedPointSet) -> f64 {
    let idx = set.indices();
    if idx.is_empty() {
        return 0.0;
    }
    let degenerate = idx
        .iter()
        .filter(|&&i| {
            let get = |t| set.scaled_offset(i, t).unwrap_or_default();
            let [a, b, c] = Tag::DRAWS.map(get);
            let ab = b - a;
            let ac = c - a;
            (ab.conj() * ac).im == 0.0
        })
        .count();
    degenerate as f64 / idx.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointset::{angle_condition, angle_ratio_bound, certify_f_closeness, separation, verify_f_closeness};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cfg(v: f64, radius: f64, seed: u64) -> GeneratorConfig {
        GeneratorConfig::new(Lattice::square(v).unwrap(), 7.0, 1.0, radius, seed, PI).unwrap()
    }

    #[test]
    fn config_validation() {
        let l = Lattice::square(1.0).unwrap();
        assert!(GeneratorConfig::new(l, 6.0, 1.0, 3.0, 0, PI).is_err());
        assert!(GeneratorConfig::new(l, 7.0, 1.5, 3.0, 0, PI).is_err());
        assert!(GeneratorConfig::new(l, 7.0, 0.5, 0.0, 0, PI).is_err());
        assert!(GeneratorConfig::new(l, 7.0, 0.5, 3.0, 0, PI).is_ok());
    }

    #[test]
    fn deterministic_triple_is_equilateral_and_certified() {
        let mut g = cfg(0.5, 4.0, 0);
        g.kappa_cap = 0.5;
        let det = deterministic_triple(&g).unwrap();
        let s = &det.samples;
        assert_eq!(s.position(LatticeIndex::ORIGIN, Tag::A), Some(c(0.5, 0.0)));
        let b = s.position(LatticeIndex::ORIGIN, Tag::B).unwrap();
        assert!((b - Complex64::from_polar(0.5, TAU / 3.0)).norm() < 1e-15);
        let rep = certify_f_closeness(s, g.gamma, None).unwrap();
        assert!((rep.kappa - 0.5).abs() < 1e-12);
        for beta in [0.1, 0.5, 2.0, 10.0] {
            let a = angle_condition(s, beta).unwrap();
            assert!((a.theta_min - PI / 3.0).abs() < 1e-12);
            assert!(a.sup_ratio <= angle_ratio_bound(PI / 3.0, beta) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn random_triple_contract() {
        let g = cfg(0.45, 6.0, 7);
        let a = random_triple(&g).unwrap();
        let b = random_triple(&g).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples.len(), 3 * g.lattice.enumerate(6.0).len());
        assert!(certify_f_closeness(&a.samples, g.gamma, None).unwrap().kappa <= 1.0 + 1e-12);
        // shared indices agree across windows
        let small = random_triple(&GeneratorConfig { window_radius: 3.0, ..g }).unwrap();
        for (i, t, u) in small.samples.entries() {
            assert_eq!(a.samples.scaled_offset(i, t), Some(u));
        }
        let other = random_triple(&GeneratorConfig { seed: 8, ..g }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn random_triples_are_not_collinear() {
        let g = cfg(0.45, 26.0, 3);
        let set = random_triple(&g).unwrap().samples;
        assert!(set.indices().len() >= 10_000);
        assert_eq!(collinear_fraction(&set), 0.0);
    }

    #[test]
    fn real_pair_triples() {
        let g = cfg(0.5, 8.0, 2);
        let con = real_pair(&g).unwrap();
        let t = con.triples.as_ref().unwrap();
        for idx in t.indices() {
            let lam = g.lattice.point(idx);
            assert!(lam.im >= 0.0);
            let a = t.position(idx, Tag::A).unwrap();
            let cc = t.position(idx, Tag::C).unwrap();
            if lam.im == 0.0 {
                assert_eq!(cc, a.conj());
            }
            assert!((cc - lam).norm() <= (-g.gamma * lam.norm_sqr()).exp() * (1.0 + 1e-12));
        }
        assert!(verify_f_closeness(t, g.gamma, 1.0 + 1e-12, Some(Tag::C)).is_ok());
        let big = real_pair(&GeneratorConfig { window_radius: 30.0, ..g }).unwrap();
        let d = construction_density(&big.samples, &[29.0]).unwrap().fitted_density;
        assert!((d / (2.0 * g.lattice.density()) - 1.0).abs() < 0.03);
        let skew = GeneratorConfig::new(
            Lattice::new(c(1.0, 0.0), c(0.3, 1.0)).unwrap(),
            7.0,
            1.0,
            4.0,
            0,
            PI,
        )
        .unwrap();
        assert!(real_pair(&skew).is_err());
    }

    #[test]
    fn even_single_triples() {
        let mut g = cfg(0.5, 8.0, 4);
        g.kappa_cap = 0.125;
        let con = even_single(&g).unwrap();
        assert!(con.samples.position(LatticeIndex::ORIGIN, Tag::L1).is_none());
        let t = con.triples.as_ref().unwrap();
        for idx in t.indices() {
            let lam = g.lattice.point(idx);
            assert!(lam.re >= 0.0 && lam.im >= 0.0 && lam.norm() > 0.0);
            if lam.im == 0.0 {
                assert_eq!(t.position(idx, Tag::B).unwrap(), t.position(idx, Tag::A).unwrap().conj());
            }
        }
        assert!(separation(&con.samples.positions()).unwrap().delta > 0.25);
        let big = even_single(&GeneratorConfig { window_radius: 30.0, ..g }).unwrap();
        let d = construction_density(&big.samples, &[29.0]).unwrap().fitted_density;
        assert!((d / g.lattice.density() - 1.0).abs() < 0.03);
    }

    fn opt(v: f64, kappa: f64, radius: f64) -> OptConfig {
        OptConfig { v, gamma: 7.0, kappa_cap: kappa, window_radius: radius, seed: 1, mode: PerturbationMode::Uniform }
    }

    #[test]
    fn opt_real_structure() {
        check_opt_real_partition(0.45, 20.0).unwrap();
        let sub = opt_real_lattice(0.45).unwrap();
        let count = sub.enumerate(30.0).into_iter().filter(|&(i, _)| in_opt_real_sublattice(i)).count();
        let d = count as f64 / (PI * 900.0);
        assert!((d * 2.0 * 0.45 * 0.45 - 1.0).abs() < 0.03);
        assert!(density_opt_real(&opt(0.6, 1.0, 5.0)).is_err());
        let con = density_opt_real(&opt(0.45, 1.0, 5.0)).unwrap();
        assert!(con.samples.indices().into_iter().all(in_opt_real_sublattice));
        assert!(certify_f_closeness(&con.samples, 7.0, None).unwrap().kappa <= 1.0);
    }

    #[test]
    fn opt_even_structure() {
        check_opt_even_partition(0.45, 20.0).unwrap();
        assert_eq!(opt_even_quadrant(LatticeIndex::new(0, 0)), Some(Quadrant::Q1));
        assert_eq!(opt_even_quadrant(LatticeIndex::new(-2, 3)), Some(Quadrant::Q2));
        assert_eq!(opt_even_quadrant(LatticeIndex::new(-3, -1)), Some(Quadrant::Q3));
        assert_eq!(opt_even_quadrant(LatticeIndex::new(3, -2)), Some(Quadrant::Q4));
        assert_eq!(opt_even_quadrant(LatticeIndex::new(1, 0)), None);
        assert!(density_opt_even(&opt(0.45, 0.2, 5.0)).is_err());
        let v = 0.45;
        let con = density_opt_even(&opt(v, v / 4.0, 8.0)).unwrap();
        let lattice = *con.samples.lattice();
        // every sample sits near the image of its source under the recorded reflection
        let t = con.triples.as_ref().unwrap();
        for idx in t.indices() {
            let [ci, ni, nci] = opt_even_images(idx);
            let a = t.position(idx, Tag::A).unwrap();
            assert!((con.samples.position(ci, Tag::A).unwrap() - a.conj()).norm() < 1e-12);
            let b = t.position(idx, Tag::B).unwrap();
            assert!((con.samples.position(ni, Tag::B).unwrap() + b).norm() < 1e-12);
            let cc = t.position(idx, Tag::C).unwrap();
            assert!((con.samples.position(nci, Tag::C).unwrap() + cc.conj()).norm() < 1e-12);
        }
        // one sample per index of Λ∖Λ′
        for (idx, _) in lattice.enumerate(8.0) {
            let present = Tag::TRIPLE.iter().filter(|&&tg| con.samples.position(idx, tg).is_some()).count();
            assert_eq!(present, usize::from(opt_even_quadrant(idx).is_none()));
        }
        assert!(certify_f_closeness(&con.samples, 7.0, None).unwrap().kappa <= v / 4.0 * (1.0 + 1e-12));
        assert!(separation(&con.samples.positions()).unwrap().delta >= v / 2.0);
    }

    #[test]
    fn three_lines_examples() {
        let tl = three_lines([0.0, PI / 3.0, 2.0 * PI / 3.0], 0.1, 10.0).unwrap();
        for s in tl.sector_angles {
            assert!((s - PI / 3.0).abs() < 1e-12);
        }
        assert!(three_lines([0.0, FRAC_PI_2, PI / 4.0], 0.1, 10.0).is_err());
        assert!(three_lines([0.0, 0.0, 1.0], 0.1, 10.0).is_err());
        assert_eq!(tl.points.len(), 1 + 6 * 100);
        let wide = three_lines([0.0, PI / 3.0, 2.0 * PI / 3.0], 1.0, 200.0).unwrap();
        let zero = c(0.0, 0.0);
        let rep = crate::pointset::density_estimate(&wide.points, zero, &[25.0, 50.0, 100.0], 200.0).unwrap();
        assert!(rep.estimates.windows(2).all(|w| w[1].density < w[0].density));
        assert!(rep.estimates[1].density <= 0.05);
    }

    #[test]
    fn reflection_examples() {
        let real = vec![c(1.0, 0.0), c(-2.5, 0.0)];
        assert_eq!(reflection_closure(&real, ReflectionMode::Half), real);
        let q = reflection_closure(&[c(0.0, 1.0)], ReflectionMode::Quarter);
        assert_eq!(q.len(), 2);
        assert!(q.contains(&c(0.0, 1.0)) && q.iter().any(|p| (p - c(0.0, -1.0)).norm() < 1e-15));
        let l = Lattice::square(1.0).unwrap();
        let upper: Vec<_> = l.enumerate(5.0).into_iter().map(|p| p.1).filter(|p| p.im >= 0.0).collect();
        let full = reflection_closure(&upper, ReflectionMode::Half);
        assert_eq!(full.len(), l.enumerate(5.0).len());
    }

    #[test]
    fn monte_carlo_examples() {
        let r = mc_angle_bound(100_000, 0.05, 1).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r, mc_angle_bound(100_000, 0.05, 1).unwrap());
        assert_eq!(mc_angle_bound(20_000, 0.0, 1).unwrap().hits, 0);
        let all = mc_mirror_angle_bound(20_000, 2.0, 1).unwrap();
        assert_eq!(all.p_hat, 1.0);
        assert!(all.passed);
        assert!(mc_angle_bound(100, 0.05, 1).is_err());
        let m = mc_mirror_angle_bound(50_000, 0.02, 9).unwrap();
        assert!(m.hits <= m.trials);
        assert!((m.stderr - (m.p_hat * (1.0 - m.p_hat) / m.trials as f64).sqrt()).abs() < 1e-18);
    }

    #[test]
    fn construction_json_round_trip() {
        let g = cfg(0.5, 2.0, 3);
        let con = real_pair(&g).unwrap();
        let text = crate::json::to_string(&con.to_doc()).unwrap();
        let doc: ConstructionDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(doc.construction, Some(ConstructionKind::Real2));
        assert_eq!(doc.samples().unwrap(), con.samples);
        assert_eq!(doc.triples().unwrap(), con.triples);
        assert_eq!(crate::json::to_string(&doc).unwrap(), text);
    }
}
