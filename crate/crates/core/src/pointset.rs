//! Lattice-indexed point families and the geometric certificates run on them.
//!
//! A point is stored as its lattice index plus an offset from the lattice point.
//! Offsets are kept in units of e^{-g|λ|²} (`offset_gamma` = g), so perturbations
//! far below the spacing of doubles near λ are still represented exactly and
//! closeness constants and angles are computed without cancellation.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::json::extended_real;
use crate::lattice::{Lattice, LatticeIndex};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    A,
    B,
    C,
    #[serde(rename = "1")]
    L1,
    #[serde(rename = "2")]
    L2,
    #[serde(rename = "3")]
    L3,
}

impl Tag {
    pub const TRIPLE: [Tag; 3] = [Tag::A, Tag::B, Tag::C];
    pub const DRAWS: [Tag; 3] = [Tag::L1, Tag::L2, Tag::L3];

    /// Position within a triple: A and draw 1 are slot 0, and so on.
    pub fn slot(self) -> usize {
        match self {
            Tag::A | Tag::L1 => 0,
            Tag::B | Tag::L2 => 1,
            Tag::C | Tag::L3 => 2,
        }
    }

    pub fn draw(slot: usize) -> Tag {
        Tag::DRAWS[slot]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::A => "A",
            Tag::B => "B",
            Tag::C => "C",
            Tag::L1 => "1",
            Tag::L2 => "2",
            Tag::L3 => "3",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexedPointSet {
    lattice: Lattice,
    window_radius: f64,
    offset_gamma: f64,
    entries: BTreeMap<(LatticeIndex, Tag), Complex64>,
}

impl IndexedPointSet {
    pub fn new(lattice: Lattice, window_radius: f64, offset_gamma: f64) -> Result<Self> {
        if !(window_radius > 0.0) || !(offset_gamma >= 0.0) || !offset_gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "window radius {window_radius} / offset exponent {offset_gamma}"
            )));
        }
        Ok(Self { lattice, window_radius, offset_gamma, entries: BTreeMap::new() })
    }

    /// The lattice itself over the window (zero offsets), one entry per index.
    pub fn lattice_points(lattice: Lattice, window_radius: f64, tag: Tag) -> Result<Self> {
        let mut set = Self::new(lattice, window_radius, 0.0)?;
        for (idx, _) in lattice.enumerate(window_radius) {
            set.insert_scaled(idx, tag, Complex64::new(0.0, 0.0))?;
        }
        Ok(set)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn window_radius(&self) -> f64 {
        self.window_radius
    }

    pub fn offset_gamma(&self) -> f64 {
        self.offset_gamma
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn check_index(&self, idx: LatticeIndex) -> Result<()> {
        let r = self.lattice.point(idx).norm();
        if r > self.window_radius * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "index ({}, {}) at radius {r} lies outside the window {}",
                idx.m, idx.n, self.window_radius
            )));
        }
        Ok(())
    }

    /// Insert a point given by its offset in units of e^{-offset_gamma·|λ|²}.
    pub fn insert_scaled(&mut self, idx: LatticeIndex, tag: Tag, scaled_offset: Complex64) -> Result<()> {
        self.check_index(idx)?;
        if self.entries.insert((idx, tag), scaled_offset).is_some() {
            return Err(Error::Precondition(format!(
                "duplicate entry at ({}, {}) tag {tag}",
                idx.m, idx.n
            )));
        }
        Ok(())
    }

    /// Insert a point given by its absolute position.
    pub fn insert_position(&mut self, idx: LatticeIndex, tag: Tag, pos: Complex64) -> Result<()> {
        let lam = self.lattice.point(idx);
        let scaled = (pos - lam) * (self.offset_gamma * lam.norm_sqr()).exp();
        self.insert_scaled(idx, tag, scaled)
    }

    fn unscale(&self, idx: LatticeIndex, scaled: Complex64) -> Complex64 {
        if scaled == Complex64::new(0.0, 0.0) {
            return scaled;
        }
        scaled * (-self.offset_gamma * self.lattice.point(idx).norm_sqr()).exp()
    }

    pub fn scaled_offset(&self, idx: LatticeIndex, tag: Tag) -> Option<Complex64> {
        self.entries.get(&(idx, tag)).copied()
    }

    pub fn offset(&self, idx: LatticeIndex, tag: Tag) -> Option<Complex64> {
        self.scaled_offset(idx, tag).map(|u| self.unscale(idx, u))
    }

    pub fn position(&self, idx: LatticeIndex, tag: Tag) -> Option<Complex64> {
        self.offset(idx, tag).map(|d| self.lattice.point(idx) + d)
    }

    /// Entries in (index, tag) order as (index, tag, scaled offset).
    pub fn entries(&self) -> impl Iterator<Item = (LatticeIndex, Tag, Complex64)> + '_ {
        self.entries.iter().map(|(&(i, t), &u)| (i, t, u))
    }

    /// Entries as (index, tag, absolute position).
    pub fn points(&self) -> impl Iterator<Item = (LatticeIndex, Tag, Complex64)> + '_ {
        self.entries().map(|(i, t, u)| (i, t, self.lattice.point(i) + self.unscale(i, u)))
    }

    pub fn positions(&self) -> Vec<Complex64> {
        self.points().map(|(_, _, p)| p).collect()
    }

    pub fn tags(&self) -> Vec<Tag> {
        let mut tags: Vec<Tag> = self.entries.keys().map(|&(_, t)| t).collect();
        tags.sort();
        tags.dedup();
        tags
    }

    pub fn indices(&self) -> Vec<LatticeIndex> {
        let mut idx: Vec<LatticeIndex> = self.entries.keys().map(|&(i, _)| i).collect();
        idx.dedup();
        idx
    }

    pub fn max_offset(&self) -> f64 {
        self.entries().map(|(i, _, u)| self.unscale(i, u).norm()).fold(0.0, f64::max)
    }

    /// Largest radius about 0 on which counts over this window are complete.
    pub fn trusted_radius(&self) -> f64 {
        (self.window_radius - self.max_offset()).max(0.0)
    }

    /// ln(|p − λ| e^{γ|λ|²}) for one entry, −∞ for an unperturbed point.
    fn log_closeness(&self, idx: LatticeIndex, scaled: Complex64, gamma: f64) -> f64 {
        let u = scaled.norm();
        if u == 0.0 {
            return f64::NEG_INFINITY;
        }
        u.ln() + (gamma - self.offset_gamma) * self.lattice.point(idx).norm_sqr()
    }

    pub fn to_doc(&self) -> PointSetDoc {
        PointSetDoc {
            lattice: self.lattice,
            window_radius: self.window_radius,
            offset_gamma: self.offset_gamma,
            points: self
                .entries()
                .map(|(index, tag, u)| PointDoc {
                    index,
                    tag,
                    pos: self.lattice.point(index) + self.unscale(index, u),
                    scaled_offset: Some(u),
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &PointSetDoc) -> Result<Self> {
        let mut set = Self::new(doc.lattice, doc.window_radius, doc.offset_gamma)?;
        for p in &doc.points {
            match p.scaled_offset {
                Some(u) => set.insert_scaled(p.index, p.tag, u)?,
                None => set.insert_position(p.index, p.tag, p.pos)?,
            }
        }
        Ok(set)
    }

    /// One row per point: m,n,tag,re,im.
    pub fn to_csv(&self) -> String {
        use crate::json::format_f64;
        let mut out = String::from("m,n,tag,re,im\n");
        for (i, t, p) in self.points() {
            out.push_str(&format!("{},{},{},{},{}\n", i.m, i.n, t, format_f64(p.re), format_f64(p.im)));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSetDoc {
    pub lattice: Lattice,
    pub window_radius: f64,
    #[serde(default)]
    pub offset_gamma: f64,
    pub points: Vec<PointDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDoc {
    pub index: LatticeIndex,
    pub tag: Tag,
    pub pos: Complex64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled_offset: Option<Complex64>,
}

impl Serialize for IndexedPointSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de> Deserialize<'de> for IndexedPointSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = PointSetDoc::deserialize(d)?;
        Self::from_doc(&doc).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosenessReport {
    #[serde(with = "extended_real")]
    pub kappa: f64,
    pub gamma: f64,
    pub worst_index: LatticeIndex,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleReport {
    pub theta_min: f64,
    pub beta: f64,
    #[serde(with = "extended_real")]
    pub sup_ratio: f64,
    pub worst_index: LatticeIndex,
    pub window_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub radius: f64,
    pub count: usize,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub estimates: Vec<DensityEstimate>,
    pub fitted_density: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub delta: f64,
    pub argmin_pair: (Complex64, Complex64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformCloseness {
    pub delta: f64,
    pub shifted: f64,
}

// ---------------------------------------------------------------------------
// angles

/// Middle interior angle of the triangle (a, b, c); 0 for degenerate triangles.
pub fn median_angle(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    let zero = Complex64::new(0.0, 0.0);
    let (ab, ac, bc) = (b - a, c - a, c - b);
    if ab == zero || ac == zero || bc == zero {
        return 0.0;
    }
    let cross = (ab.conj() * ac).im;
    if cross == 0.0 {
        return 0.0;
    }
    let vertex = |u: Complex64, v: Complex64| {
        let w = u.conj() * v;
        w.im.abs().atan2(w.re)
    };
    let mut angles = [vertex(ab, ac), vertex(-ab, bc), vertex(-ac, -bc)];
    angles.sort_by(f64::total_cmp);
    angles[1].clamp(0.0, PI / 2.0)
}

/// Closeness constant κ = max |p_λ − λ| e^{γ|λ|²} over entries with the given tag
/// (all entries when `tag` is `None`).
pub fn certify_f_closeness(set: &IndexedPointSet, gamma: f64, tag: Option<Tag>) -> Result<ClosenessReport> {
    let mut worst: Option<(f64, LatticeIndex)> = None;
    for (idx, t, u) in set.entries() {
        if tag.is_some_and(|want| want != t) {
            continue;
        }
        let l = set.log_closeness(idx, u, gamma);
        if worst.is_none_or(|(w, _)| l > w) {
            worst = Some((l, idx));
        }
    }
    let (log_kappa, worst_index) = worst.ok_or_else(|| {
        Error::Precondition(format!("no entries with tag {}", tag.map_or("any".into(), |t| t.to_string())))
    })?;
    let kappa = log_kappa.exp();
    Ok(ClosenessReport { kappa, gamma, worst_index, passed: kappa.is_finite() })
}

/// Check |p_λ − λ| ≤ κ e^{−γ|λ|²} entry by entry; returns the first failing index.
pub fn verify_f_closeness(
    set: &IndexedPointSet,
    gamma: f64,
    kappa: f64,
    tag: Option<Tag>,
) -> std::result::Result<(), LatticeIndex> {
    let log_kappa = kappa.ln();
    for (idx, t, u) in set.entries() {
        if tag.is_some_and(|want| want != t) {
            continue;
        }
        if set.log_closeness(idx, u, gamma) > log_kappa {
            return Err(idx);
        }
    }
    Ok(())
}

/// Triples grouped by index, as scaled offsets in slot order.
fn triples(set: &IndexedPointSet) -> Result<Vec<(LatticeIndex, [Complex64; 3])>> {
    let mut grouped: BTreeMap<LatticeIndex, [Option<Complex64>; 3]> = BTreeMap::new();
    for (idx, tag, u) in set.entries() {
        grouped.entry(idx).or_default()[tag.slot()] = Some(u);
    }
    grouped
        .into_iter()
        .map(|(idx, slots)| {
            let mut out = [Complex64::new(0.0, 0.0); 3];
            for (k, s) in slots.iter().enumerate() {
                out[k] = s.ok_or_else(|| Error::MissingEntry { index: idx, tag: Tag::TRIPLE[k].to_string() })?;
            }
            Ok((idx, out))
        })
        .collect()
}

/// Supremum of |λ| e^{−β|λ|²} / φ(a_λ, b_λ, c_λ) over the window.
pub fn angle_condition(set: &IndexedPointSet, beta: f64) -> Result<AngleReport> {
    let mut theta_min = PI / 2.0;
    let mut sup_ratio = 0.0_f64;
    let mut worst_index = LatticeIndex::ORIGIN;
    let mut first = true;
    for (idx, [a, b, c]) in triples(set)? {
        // translation and dilation leave φ unchanged, so compare scaled offsets
        let phi = median_angle(a, b, c);
        theta_min = theta_min.min(phi);
        let lam = set.lattice().point(idx);
        let ratio = if lam.norm() == 0.0 {
            0.0
        } else if phi == 0.0 {
            f64::INFINITY
        } else {
            lam.norm() * (-beta * lam.norm_sqr()).exp() / phi
        };
        if first || ratio > sup_ratio {
            sup_ratio = ratio;
            worst_index = idx;
            first = false;
        }
    }
    if first {
        return Err(Error::Precondition("angle condition needs at least one triple".into()));
    }
    Ok(AngleReport { theta_min, beta, sup_ratio, worst_index, window_radius: set.window_radius() })
}

/// Closed-form supremum for triples whose median angle is at least θ everywhere.
pub fn angle_ratio_bound(theta: f64, beta: f64) -> f64 {
    1.0 / (theta * (2.0 * std::f64::consts::E * beta).sqrt())
}

// ---------------------------------------------------------------------------
// separation, density

fn cell_of(p: Complex64, origin: Complex64, h: f64) -> (i64, i64) {
    (((p.re - origin.re) / h).floor() as i64, ((p.im - origin.im) / h).floor() as i64)
}

/// Exact minimum pairwise distance, via nearest-neighbour ring search on a grid.
pub fn separation(points: &[Complex64]) -> Result<SeparationReport> {
    if points.len() < 2 {
        return Err(Error::Precondition("separation needs at least two points".into()));
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
        hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
    }
    let (dx, dy) = (hi.re - lo.re, hi.im - lo.im);
    let n = points.len() as f64;
    let h = (dx * dy / n).sqrt().max(dx.max(dy) / n);
    if !(h > 0.0) {
        return Ok(SeparationReport { delta: 0.0, argmin_pair: (points[0], points[1]) });
    }
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, &p) in points.iter().enumerate() {
        grid.entry(cell_of(p, lo, h)).or_default().push(i);
    }
    let max_ring = ((dx.max(dy) / h).ceil() as i64) + 1;
    let mut best = f64::INFINITY;
    let mut pair = (0, 1);
    for (i, &p) in points.iter().enumerate() {
        let (cx, cy) = cell_of(p, lo, h);
        let mut k: i64 = 0;
        while k <= max_ring && ((k - 1) as f64) * h < best {
            for gx in -k..=k {
                for gy in -k..=k {
                    if gx.abs().max(gy.abs()) != k {
                        continue;
                    }
                    let Some(bucket) = grid.get(&(cx + gx, cy + gy)) else { continue };
                    for &j in bucket {
                        if j > i {
                            let d = (points[j] - p).norm();
                            if d < best {
                                best = d;
                                pair = (i, j);
                            }
                        }
                    }
                }
            }
            k += 1;
        }
    }
    Ok(SeparationReport { delta: best, argmin_pair: (points[pair.0], points[pair.1]) })
}

/// Counts #(points ∩ B_r(center)) / (π r²) for each radius.
pub fn density_estimate(
    points: &[Complex64],
    center: Complex64,
    radii: &[f64],
    trusted_radius: f64,
) -> Result<DensityReport> {
    if radii.is_empty() {
        return Err(Error::InvalidParameter("no radii given".into()));
    }
    let reach = trusted_radius - center.norm();
    if let Some(&bad) = radii.iter().find(|&&r| !(r > 0.0) || r > reach * (1.0 + 1e-12)) {
        return Err(Error::Precondition(format!(
            "radius {bad} exceeds the trustworthy window {reach} about {center}"
        )));
    }
    let mut dists: Vec<f64> = points.iter().map(|p| (p - center).norm()).collect();
    dists.sort_by(f64::total_cmp);
    let estimates: Vec<DensityEstimate> = radii
        .iter()
        .map(|&r| {
            let count = dists.partition_point(|&d| d <= r);
            DensityEstimate { radius: r, count, density: count as f64 / (PI * r * r) }
        })
        .collect();
    let largest = estimates
        .iter()
        .max_by(|a, b| a.radius.total_cmp(&b.radius))
        .expect("nonempty");
    let fitted_density = largest.density;
    let max_residual = estimates.iter().map(|e| (e.density - fitted_density).abs()).fold(0.0, f64::max);
    Ok(DensityReport { estimates, fitted_density, max_residual })
}

/// Covering certificate for sup_z #(points ∩ B₁(z)): the largest count in balls of
/// radius 1.25 about a 0.25-pitch grid. Every unit ball lies in one of those balls.
pub fn relative_separation_bound(points: &[Complex64]) -> usize {
    const PITCH: f64 = 0.25;
    const REACH: f64 = 1.25;
    if points.is_empty() {
        return 0;
    }
    let mut grid: HashMap<(i64, i64), Vec<Complex64>> = HashMap::new();
    let zero = Complex64::new(0.0, 0.0);
    for &p in points {
        grid.entry(cell_of(p, zero, REACH)).or_default().push(p);
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
        hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
    }
    let gx0 = ((lo.re - REACH) / PITCH).floor() as i64;
    let gx1 = ((hi.re + REACH) / PITCH).ceil() as i64;
    let gy0 = ((lo.im - REACH) / PITCH).floor() as i64;
    let gy1 = ((hi.im + REACH) / PITCH).ceil() as i64;
    let mut best = 0;
    for gx in gx0..=gx1 {
        for gy in gy0..=gy1 {
            let c = Complex64::new(gx as f64 * PITCH, gy as f64 * PITCH);
            let (cx, cy) = cell_of(c, zero, REACH);
            let mut count = 0;
            for ox in -1..=1 {
                for oy in -1..=1 {
                    if let Some(bucket) = grid.get(&(cx + ox, cy + oy)) {
                        count += bucket.iter().filter(|p| (*p - c).norm() <= REACH).count();
                    }
                }
            }
            best = best.max(count);
        }
    }
    best
}

/// Δ = max |p_λ − λ| together with Δ + sqrt(π/(2β)), the constant for the set shifted
/// by at most half a cell of the lattice sqrt(π/β)(ℤ+iℤ).
pub fn uniform_closeness_delta(set: &IndexedPointSet, beta: f64) -> UniformCloseness {
    let delta = set.max_offset();
    UniformCloseness { delta, shifted: delta + (PI / (2.0 * beta)).sqrt() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn brute_min_distance(points: &[Complex64]) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                best = best.min((points[i] - points[j]).norm());
            }
        }
        best
    }

    #[test]
    fn median_angle_examples() {
        let eq = median_angle(c(0.0, 0.0), c(1.0, 0.0), Complex64::from_polar(1.0, PI / 3.0));
        assert!((eq - PI / 3.0).abs() < 1e-15);
        assert_eq!(median_angle(c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)), 0.0);
        assert_eq!(median_angle(c(1.0, 1.0), c(1.0, 1.0), c(2.0, 0.0)), 0.0);
        let right = median_angle(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
        assert!((right - PI / 4.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn median_angle_similarity_invariant(
            pts in proptest::array::uniform6(-3.0f64..3.0),
            u in (0.05f64..4.0, -PI..PI),
            v in (-5.0f64..5.0, -5.0f64..5.0),
        ) {
            let (a, b, cc) = (c(pts[0], pts[1]), c(pts[2], pts[3]), c(pts[4], pts[5]));
            let scale = Complex64::from_polar(u.0, u.1);
            let shift = c(v.0, v.1);
            let phi = median_angle(a, b, cc);
            let moved = median_angle(scale * a + shift, scale * b + shift, scale * cc + shift);
            prop_assert!((phi - moved).abs() <= 1e-10);
            prop_assert!((0.0..=PI / 2.0).contains(&phi));
            for perm in [(b, a, cc), (a, cc, b), (cc, b, a), (b, cc, a), (cc, a, b)] {
                prop_assert!((median_angle(perm.0, perm.1, perm.2) - phi).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn median_angle_similarity_bulk() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let mut p = || c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let (a, b, cc, shift) = (p(), p(), p(), p());
            let scale = p() + c(0.01, 0.0);
            let d = median_angle(a, b, cc) - median_angle(scale * a + shift, scale * b + shift, scale * cc + shift);
            assert!(d.abs() <= 1e-10);
        }
    }

    #[test]
    fn closeness_examples() {
        let l = Lattice::square(1.0).unwrap();
        let set = IndexedPointSet::lattice_points(l, 3.0, Tag::A).unwrap();
        assert_eq!(certify_f_closeness(&set, 7.0, None).unwrap().kappa, 0.0);

        let mut one = IndexedPointSet::new(l, 1.0, 0.0).unwrap();
        one.insert_position(LatticeIndex::ORIGIN, Tag::A, c(0.3, 0.0)).unwrap();
        let rep = certify_f_closeness(&one, 7.0, Some(Tag::A)).unwrap();
        assert!((rep.kappa - 0.3).abs() < 1e-15);
        assert!(rep.passed);
        assert!(certify_f_closeness(&one, 7.0, Some(Tag::B)).is_err());
    }

    #[test]
    fn closeness_constant_is_least() {
        let l = Lattice::square(0.5).unwrap();
        let mut set = IndexedPointSet::new(l, 2.0, 3.0).unwrap();
        for (k, (idx, _)) in l.enumerate(2.0).into_iter().enumerate() {
            let u = Complex64::from_polar(0.1 + 0.8 * ((k * 37 % 11) as f64 / 11.0), k as f64);
            set.insert_scaled(idx, Tag::L1, u).unwrap();
        }
        let rep = certify_f_closeness(&set, 4.0, None).unwrap();
        assert!(verify_f_closeness(&set, 4.0, rep.kappa * (1.0 + 1e-12), None).is_ok());
        assert_eq!(verify_f_closeness(&set, 4.0, rep.kappa * (1.0 - 1e-6), None), Err(rep.worst_index));
    }

    #[test]
    fn angle_condition_examples() {
        let l = Lattice::square(0.5).unwrap();
        let beta = 0.5;
        let mut eq = IndexedPointSet::new(l, 4.0, 7.0).unwrap();
        for (idx, _) in l.enumerate(4.0) {
            for (k, tag) in Tag::TRIPLE.into_iter().enumerate() {
                eq.insert_scaled(idx, tag, Complex64::from_polar(0.5, 2.0 * PI * k as f64 / 3.0)).unwrap();
            }
        }
        let rep = angle_condition(&eq, beta).unwrap();
        assert!((rep.theta_min - PI / 3.0).abs() < 1e-12);
        assert!(rep.sup_ratio <= angle_ratio_bound(PI / 3.0, beta) * (1.0 + 1e-12));

        // all three copies of the lattice: degenerate everywhere
        let mut flat = IndexedPointSet::new(l, 4.0, 0.0).unwrap();
        for (idx, _) in l.enumerate(4.0) {
            for tag in Tag::TRIPLE {
                flat.insert_scaled(idx, tag, c(0.0, 0.0)).unwrap();
            }
        }
        assert!(angle_condition(&flat, beta).unwrap().sup_ratio.is_infinite());

        let mut origin_only = IndexedPointSet::new(l, 0.1, 0.0).unwrap();
        for tag in Tag::TRIPLE {
            origin_only.insert_scaled(LatticeIndex::ORIGIN, tag, c(0.0, 0.0)).unwrap();
        }
        assert_eq!(angle_condition(&origin_only, beta).unwrap().sup_ratio, 0.0);

        let mut missing = IndexedPointSet::new(l, 1.0, 0.0).unwrap();
        missing.insert_scaled(LatticeIndex::ORIGIN, Tag::A, c(0.1, 0.0)).unwrap();
        assert!(matches!(angle_condition(&missing, beta), Err(Error::MissingEntry { .. })));
    }

    #[test]
    fn tiny_offsets_keep_their_angles() {
        // e^{-7·36} is far below the spacing of doubles near |λ| = 6
        let l = Lattice::square(1.0).unwrap();
        let mut set = IndexedPointSet::new(l, 6.0, 7.0).unwrap();
        let idx = LatticeIndex::new(6, 0);
        for (k, tag) in Tag::TRIPLE.into_iter().enumerate() {
            set.insert_scaled(idx, tag, Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 3.0)).unwrap();
        }
        assert_eq!(set.position(idx, Tag::A), Some(c(6.0, 0.0)));
        let rep = angle_condition(&set, 1.0).unwrap();
        assert!((rep.theta_min - PI / 3.0).abs() < 1e-12);
        let k = certify_f_closeness(&set, 7.0, None).unwrap();
        assert!((k.kappa - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separation_examples() {
        let l = Lattice::square(1.0).unwrap();
        let pts: Vec<_> = l.enumerate(6.0).into_iter().map(|p| p.1).collect();
        assert!((separation(&pts).unwrap().delta - 1.0).abs() < 1e-15);
        let mut both = pts.clone();
        both.extend(pts.iter().map(|p| p + c(0.3, 0.0)));
        assert!((separation(&both).unwrap().delta - 0.3).abs() < 1e-12);
        assert!(separation(&pts[..1]).is_err());
        let same = vec![c(1.0, 1.0), c(1.0, 1.0), c(2.0, 0.0)];
        assert_eq!(separation(&same).unwrap().delta, 0.0);
        let line: Vec<_> = (0..50).map(|k| c(k as f64 * 0.7, 0.0)).collect();
        assert!((separation(&line).unwrap().delta - 0.7).abs() < 1e-12);
    }

    #[test]
    fn separation_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for trial in 0..20 {
            let n = 50 + trial * 97;
            let spread = if trial % 3 == 0 { 100.0 } else { 5.0 };
            let pts: Vec<_> =
                (0..n).map(|_| c(rng.random_range(-spread..spread), rng.random_range(0.0..3.0))).collect();
            let rep = separation(&pts).unwrap();
            assert_eq!(rep.delta, brute_min_distance(&pts));
            assert_eq!((rep.argmin_pair.0 - rep.argmin_pair.1).norm(), rep.delta);
        }
    }

    #[test]
    fn density_examples() {
        let l = Lattice::square(1.0).unwrap();
        let pts: Vec<_> = l.enumerate(52.0).into_iter().map(|p| p.1).collect();
        let rep = density_estimate(&pts, c(0.0, 0.0), &[20.0, 50.0], 52.0).unwrap();
        assert!((rep.fitted_density - 1.0).abs() < 0.02);
        assert_eq!(rep.estimates[1].count, pts.iter().filter(|p| p.norm() <= 50.0).count());
        let empty = density_estimate(&[], c(0.0, 0.0), &[3.0], 5.0).unwrap();
        assert_eq!(empty.fitted_density, 0.0);
        assert!(density_estimate(&pts, c(0.0, 0.0), &[60.0], 52.0).is_err());
        assert!(density_estimate(&pts, c(10.0, 0.0), &[45.0], 52.0).is_err());
    }

    #[test]
    fn unit_ball_counts() {
        let l = Lattice::square(1.0).unwrap();
        let pts: Vec<_> = l.enumerate(8.0).into_iter().map(|p| p.1).collect();
        let bound = relative_separation_bound(&pts);
        assert!((5..=9).contains(&bound), "bound {bound}");
        // brute-force sup over a fine grid of unit-ball centres
        let mut exact = 0;
        for i in 0..=40 {
            for j in 0..=40 {
                let z = c(i as f64 / 40.0, j as f64 / 40.0);
                exact = exact.max(pts.iter().filter(|p| (*p - z).norm() <= 1.0).count());
            }
        }
        assert_eq!(exact, 5);
        assert_eq!(relative_separation_bound(&[]), 0);
        let mut three = Vec::new();
        for (k, d) in [c(0.0, 0.0), c(0.01, 0.02), c(-0.03, 0.01)].into_iter().enumerate() {
            three.extend(pts.iter().map(|p| p + d * (k as f64 + 1.0)));
        }
        assert!(relative_separation_bound(&three) <= 3 * bound);
    }

    #[test]
    fn uniform_closeness() {
        let l = Lattice::square(1.0).unwrap();
        let set = IndexedPointSet::lattice_points(l, 3.0, Tag::A).unwrap();
        assert_eq!(uniform_closeness_delta(&set, 2.0).delta, 0.0);
        let mut moved = IndexedPointSet::new(l, 3.0, 0.0).unwrap();
        for (idx, p) in l.enumerate(3.0) {
            moved.insert_position(idx, Tag::A, p + c(0.1, -0.2)).unwrap();
        }
        let u = uniform_closeness_delta(&moved, 2.0);
        assert!((u.delta - 0.05f64.sqrt()).abs() < 1e-12);
        assert!((u.shifted - u.delta - (PI / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn json_and_csv() {
        let l = Lattice::square(0.5).unwrap();
        let mut set = IndexedPointSet::new(l, 1.0, 7.0).unwrap();
        set.insert_scaled(LatticeIndex::new(1, 0), Tag::A, c(0.25, -0.5)).unwrap();
        set.insert_scaled(LatticeIndex::new(0, 0), Tag::L2, c(0.1, 0.0)).unwrap();
        let text = crate::json::to_string(&set).unwrap();
        let back: IndexedPointSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, set);
        assert_eq!(crate::json::to_string(&back).unwrap(), text);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["points"][0]["tag"], "2");
        assert_eq!(v["points"][1]["index"], serde_json::json!([1, 0]));

        // positions only: offsets are recovered relative to the lattice
        let doc = serde_json::json!({
            "lattice": l, "window_radius": 1.0,
            "points": [{"index": [0, 1], "tag": "B", "pos": [0.1, 0.5]}]
        });
        let raw: IndexedPointSet = serde_json::from_value(doc).unwrap();
        assert!((raw.offset(LatticeIndex::new(0, 1), Tag::B).unwrap() - c(0.1, 0.0)).norm() < 1e-15);

        let csv = set.to_csv();
        assert!(csv.starts_with("m,n,tag,re,im\n0,0,2,"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn window_is_enforced() {
        let l = Lattice::square(1.0).unwrap();
        let mut set = IndexedPointSet::new(l, 2.0, 0.0).unwrap();
        assert!(set.insert_scaled(LatticeIndex::new(3, 0), Tag::A, c(0.0, 0.0)).is_err());
        set.insert_scaled(LatticeIndex::new(2, 0), Tag::A, c(0.0, 0.0)).unwrap();
        assert!(set.insert_scaled(LatticeIndex::new(2, 0), Tag::A, c(0.0, 0.0)).is_err());
    }
}
