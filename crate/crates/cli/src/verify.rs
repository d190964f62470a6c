//! Invariant suites behind `fockphase verify`.

use std::f64::consts::PI;

use fock_phase::fock::{
    dist_alpha, dist_local_bound, extension_norm_bound_check, growth_check, polyanalytic_identity_residual, wronskian,
    FockPoly,
};
use fock_phase::gabor::{
    bargmann, bargmann_projection, fock_symmetry_check, gabor_transform, gabor_transform_with, hardy_check,
    symmetry_class, FockClass, HermiteSignal, SignalClass,
};
use fock_phase::lattice::Lattice;
use fock_phase::phaseless::{
    combine_directionals, directional_derivative, equal_modulus_instance, lifted_injectivity, q_derivative, q_value,
    rolle_point, zero_perturbation_bound_check,
};
use fock_phase::pointset::{IndexedPointSet, Tag};
use fock_phase::quadrature::GaussRule;
use fock_phase::rng::uniform_disk;
use fock_phase::special::{critical_counterexample, lagrange_interpolate, sigma_growth, GGammaEvaluator, SigmaEvaluator};
use fock_phase::{Complex64, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{Failure, Target};

#[derive(Debug, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub value: f64,
    /// Upper limit on `value`; absent for pass/fail checks.
    pub tolerance: Option<f64>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub target: &'static str,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// A measured value: either a residual against a tolerance or a boolean outcome.
enum Measure {
    Residual(f64, f64),
    Holds(bool, f64),
}

type Suite = (&'static str, fn(&mut Ctx));

struct Ctx {
    suite: &'static str,
    tol: Option<f64>,
    rng: ChaCha8Rng,
    checks: Vec<Check>,
}

impl Ctx {
    fn record(&mut self, name: &'static str, measured: Result<Measure>) {
        let check = match measured {
            Ok(Measure::Residual(value, default_tol)) => {
                let tol = self.tol.unwrap_or(default_tol);
                Check { suite: self.suite, name, value, tolerance: Some(tol), passed: value <= tol, error: None }
            }
            Ok(Measure::Holds(ok, value)) => {
                Check { suite: self.suite, name, value, tolerance: None, passed: ok, error: None }
            }
            Err(e) => Check {
                suite: self.suite,
                name,
                value: f64::NAN,
                tolerance: None,
                passed: false,
                error: Some(e.to_string()),
            },
        };
        self.checks.push(check);
    }
}

fn suites(target: Target) -> (&'static str, Vec<Suite>) {
    match target {
        Target::Fock => ("fock", vec![("metric", fock_metric), ("wronskian", fock_wronskian), ("extension", fock_extension), ("growth", fock_growth)]),
        Target::Special => ("special", vec![("sigma", special_sigma), ("counterexample", special_counterexample), ("lagrange", special_lagrange)]),
        Target::Gabor => ("gabor", vec![("bargmann", gabor_bargmann), ("hardy", gabor_hardy), ("symmetry", gabor_symmetry)]),
        Target::Phaseless => (
            "phaseless",
            vec![
                ("directional", phaseless_directional),
                ("combine", phaseless_combine),
                ("rolle", phaseless_rolle),
                ("lifted", phaseless_lifted),
            ],
        ),
    }
}

pub fn run(target: Target, only: Option<&str>, tol: Option<f64>, seed: u64) -> std::result::Result<VerifyReport, Failure> {
    let (name, all) = suites(target);
    let chosen: Vec<Suite> = match only {
        Some(want) => {
            let picked: Vec<Suite> = all.iter().copied().filter(|(n, _)| *n == want).collect();
            if picked.is_empty() {
                let names: Vec<&str> = all.iter().map(|(n, _)| *n).collect();
                return Err(Failure::Usage(format!("unknown suite {want:?} for {name}; expected one of {names:?}")));
            }
            picked
        }
        None => all,
    };
    if let Some(t) = tol {
        if !(t > 0.0) {
            return Err(Failure::Usage(format!("--tol must be positive, got {t}")));
        }
    }
    let mut ctx = Ctx { suite: "", tol, rng: ChaCha8Rng::seed_from_u64(seed), checks: Vec::new() };
    for (suite, f) in chosen {
        ctx.suite = suite;
        f(&mut ctx);
    }
    let passed = ctx.checks.iter().all(|c| c.passed);
    Ok(VerifyReport { target: name, seed, checks: ctx.checks, passed })
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn fock_metric(ctx: &mut Ctx) {
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let alpha = ctx.rng.random_range(0.5..4.0);
        let z = uniform_disk(&mut ctx.rng, 1.5);
        let w = z + Complex64::from_polar(ctx.rng.random_range(0.1..1.0), ctx.rng.random_range(0.0..2.0 * PI));
        let expanded = ((alpha * z.norm_sqr()).exp() - 2.0 * (alpha * z * w.conj()).exp().re
            + (alpha * w.norm_sqr()).exp())
        .sqrt();
        worst = worst.max((dist_alpha(alpha, z, w) / expanded - 1.0).abs());
    }
    ctx.record("closed_form_vs_expansion", Ok(Measure::Residual(worst, 1e-12)));
    let mut violations = 0;
    for _ in 0..2000 {
        let alpha: f64 = ctx.rng.random_range(0.5..8.0);
        let z = uniform_disk(&mut ctx.rng, 3.0);
        let cap = alpha.powf(-0.5).min(1.0 / (alpha * z.norm()));
        let w = z + uniform_disk(&mut ctx.rng, cap);
        if dist_local_bound(alpha, z, w).is_some_and(|b| dist_alpha(alpha, z, w) > b) {
            violations += 1;
        }
    }
    ctx.record("local_bound", Ok(Measure::Holds(violations == 0, violations as f64)));
    let (z, w) = (c(0.3, -0.7), c(-1.1, 0.4));
    ctx.record("symmetry", Ok(Measure::Holds(dist_alpha(2.0, z, w) == dist_alpha(2.0, w, z), 0.0)));
}

fn fock_wronskian(ctx: &mut Ctx) {
    let measured = (|| {
        let mut worst: f64 = 0.0;
        let mut anti: f64 = 0.0;
        for _ in 0..50 {
            let f = FockPoly::random_unit(PI, 8, &mut ctx.rng)?;
            let h = FockPoly::random_unit(PI, 6, &mut ctx.rng)?;
            let z = uniform_disk(&mut ctx.rng, 1.5);
            worst = worst.max(polyanalytic_identity_residual(&f, &h, z)?);
            let sum: f64 = wronskian(&f, &h)?
                .coeffs()
                .iter()
                .zip(wronskian(&h, &f)?.coeffs())
                .map(|(a, b)| (a + b).norm())
                .sum();
            anti = anti.max(sum);
        }
        Ok((worst, anti))
    })();
    let (identity, anti) = match measured {
        Ok((a, b)) => (Ok(Measure::Residual(a, 1e-10)), Ok(Measure::Holds(b == 0.0, b))),
        Err(e) => (Err(e), Ok(Measure::Holds(false, f64::NAN))),
    };
    ctx.record("polyanalytic_identity", identity);
    ctx.record("antisymmetry", anti);
}

fn fock_extension(ctx: &mut Ctx) {
    let measured = (|| {
        let mut violations = 0;
        for _ in 0..50 {
            let f = FockPoly::random_unit(1.0, 6, &mut ctx.rng)?;
            if !extension_norm_bound_check(&f, 3.0)?.holds {
                violations += 1;
            }
        }
        Ok(Measure::Holds(violations == 0, violations as f64))
    })();
    ctx.record("norm_bound", measured);
}

fn fock_growth(ctx: &mut Ctx) {
    let measured = (|| {
        let mut failures = 0;
        for _ in 0..50 {
            let f = FockPoly::random_unit(PI, 10, &mut ctx.rng)?;
            let pts: Vec<Complex64> = (0..20).map(|_| uniform_disk(&mut ctx.rng, 3.0)).collect();
            if growth_check(&f, &pts).is_err() {
                failures += 1;
            }
        }
        Ok(Measure::Holds(failures == 0, failures as f64))
    })();
    ctx.record("pointwise_growth", measured);
}

fn special_sigma(ctx: &mut Ctx) {
    let ev = match Lattice::square(1.0).and_then(|l| SigmaEvaluator::new(l, 30.0)) {
        Ok(ev) => ev,
        Err(e) => return ctx.record("evaluator", Err(e)),
    };
    let quasi = (0..20)
        .map(|k| ev.quasi_periodicity_residual(Complex64::from_polar(0.3 + 0.1 * k as f64, 0.7 * k as f64)))
        .try_fold(0.0f64, |m, r| r.map(|[a, b]| m.max(a).max(b)));
    ctx.record("quasi_periodicity", quasi.map(|q| Measure::Residual(q, 1e-6)));
    ctx.record("legendre", Ok(Measure::Residual(ev.legendre_residual(), 1e-6)));
    ctx.record("square_lattice_a", Ok(Measure::Residual(ev.a_lambda().norm(), 1e-6)));
    let growth = sigma_growth(&ev, 8.0, 0.1).map(|g| Measure::Holds(g.sup <= 1.01 * g.sup_inner, g.sup / g.sup_inner));
    ctx.record("growth_ratio", growth);
}

fn special_counterexample(ctx: &mut Ctx) {
    let measured = (|| {
        let ev = SigmaEvaluator::new(Lattice::square(1.0)?, 30.0)?;
        let one = c(1.0, 0.0);
        let q = critical_counterexample(&ev, c(0.0, 0.0), one)?;
        let scale = q.eval(c(0.0, 0.0))?.norm().min(q.eval(one)?.norm());
        let mut worst: f64 = 0.0;
        for (_, p) in ev.lattice().enumerate(9.0) {
            if p.norm() > 0.0 && p != one {
                worst = worst.max(q.eval(p)?.norm() / scale);
            }
        }
        let radii: Vec<f64> = (6..=10).map(f64::from).collect();
        let inc = q.norm_increments(PI, &radii, 16, 240)?;
        Ok((worst, scale, inc.windows(2).all(|w| w[1] < w[0])))
    })();
    match measured {
        Ok((worst, scale, decreasing)) => {
            ctx.record("vanishes_on_lattice", Ok(Measure::Residual(worst, 1e-8)));
            ctx.record("nonzero_at_removed", Ok(Measure::Holds(scale > 0.0, scale)));
            ctx.record("norm_increments_decrease", Ok(Measure::Holds(decreasing, 0.0)));
        }
        Err(e) => ctx.record("counterexample", Err(e)),
    }
}

fn special_lagrange(ctx: &mut Ctx) {
    let measured = (|| {
        let alpha = 1.0;
        let set = IndexedPointSet::lattice_points(Lattice::critical(2.0 * alpha)?, 30.0, Tag::A)?;
        let ev = GGammaEvaluator::new(&set, 2.0 * alpha, 30.0)?;
        let nodes: Vec<Complex64> = ev.points().into_iter().filter(|g| g.norm() <= 12.0).collect();
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let z = uniform_disk(&mut ctx.rng, 2.0);
            for n in 0..2 {
                let f = FockPoly::basis(alpha, n)?;
                let samples: Vec<_> = nodes.iter().map(|&g| (g, f.eval(g))).collect();
                worst = worst.max((lagrange_interpolate(&ev, &samples, z)?.value - f.eval(z)).norm());
            }
        }
        Ok(Measure::Residual(worst, 1e-3))
    })();
    ctx.record("reconstruct_basis", measured);
}

fn gabor_bargmann(ctx: &mut Ctx) {
    let g = HermiteSignal::gaussian();
    let vals: Vec<f64> = (0..20).map(|_| bargmann(&g, uniform_disk(&mut ctx.rng, 3.0)).norm()).collect();
    let spread = vals.iter().fold(0.0f64, |m, v| m.max((v - vals[0]).abs()));
    ctx.record("gaussian_constant_modulus", Ok(Measure::Residual(spread, 1e-5)));
    let measured = (0..5)
        .map(|n| bargmann_projection(&HermiteSignal::hermite(n), 8).map(|p| (n, p)))
        .try_fold(0.0f64, |m, r| {
            r.map(|(n, p)| {
                let norm = p.norm();
                let off = p.coeffs().iter().enumerate().filter(|(k, _)| *k != n).map(|(_, v)| v.norm()).fold(0.0, f64::max);
                m.max(off / norm).max((norm - 2f64.powf(-0.25)).abs() / 2f64.powf(-0.25))
            })
        });
    ctx.record("hermite_to_basis", measured.map(|d| Measure::Residual(d, 1e-4)));
    let fine = GaussRule::hermite(256);
    let f = HermiteSignal::new((0..7).map(|k| Complex64::from_polar(1.0 / (1.0 + k as f64), k as f64)).collect());
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let (x, w) = (ctx.rng.random_range(-3.0..3.0), ctx.rng.random_range(-3.0..3.0));
        worst = worst.max((gabor_transform(&f, x, w) - gabor_transform_with(&f, x, w, &fine)).norm());
    }
    ctx.record("quadrature_refinement", Ok(Measure::Residual(worst, 1e-9)));
}

fn gabor_hardy(ctx: &mut Ctx) {
    let measured = (|| {
        let lattice = Lattice::square(0.9)?;
        let g = hardy_check(&HermiteSignal::gaussian(), &lattice, 0.71, 5.0)?;
        let h1 = hardy_check(&HermiteSignal::hermite(1), &lattice, 0.71, 5.0)?;
        Ok((g, h1))
    })();
    match measured {
        Ok((g, h1)) => {
            ctx.record("gaussian_passes", Ok(Measure::Holds(g.passed, g.max_ratio)));
            let early = h1.first_violation_radius.is_some_and(|r| r <= 2.0);
            ctx.record("h1_fails", Ok(Measure::Holds(!h1.passed && early, h1.max_ratio)));
        }
        Err(e) => ctx.record("hardy", Err(e)),
    }
}

fn gabor_symmetry(ctx: &mut Ctx) {
    let tol = ctx.tol.unwrap_or(1e-8);
    let measured = (|| {
        let even_real = HermiteSignal::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        let signal = symmetry_class(&even_real) == SignalClass::EvenReal;
        let image = fock_symmetry_check(&bargmann_projection(&even_real, 8)?, tol) == FockClass::Both;
        let odd = bargmann_projection(&HermiteSignal::hermite(1), 8)?;
        Ok((signal, image, fock_symmetry_check(&odd, tol) == FockClass::Conjugation))
    })();
    match measured {
        Ok((a, b, d)) => {
            ctx.record("signal_class", Ok(Measure::Holds(a, 0.0)));
            ctx.record("image_class", Ok(Measure::Holds(b, 0.0)));
            ctx.record("odd_real_image", Ok(Measure::Holds(d, 0.0)));
        }
        Err(e) => ctx.record("symmetry", Err(e)),
    }
}

fn phaseless_directional(ctx: &mut Ctx) {
    let measured = (|| {
        let mut worst: f64 = 0.0;
        let h = 1e-4;
        for _ in 0..20 {
            let f = FockPoly::random_unit(PI, 8, &mut ctx.rng)?;
            let g = FockPoly::random_unit(PI, 8, &mut ctx.rng)?;
            for _ in 0..10 {
                let z = uniform_disk(&mut ctx.rng, 0.6);
                let theta = ctx.rng.random_range(0.0..2.0 * PI);
                let e = Complex64::from_polar(1.0, theta);
                let fd = (q_value(&f, &g, z + e * h) - q_value(&f, &g, z - e * h)) / (2.0 * h);
                worst = worst.max((fd - directional_derivative(&f, &g, theta, z)).abs());
            }
        }
        Ok(Measure::Residual(worst, 1e-6))
    })();
    ctx.record("finite_difference", measured);
}

fn phaseless_combine(ctx: &mut Ctx) {
    let measured = (|| {
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let f = FockPoly::random_unit(PI, 6, &mut ctx.rng)?;
            let g = FockPoly::random_unit(PI, 6, &mut ctx.rng)?;
            let z = uniform_disk(&mut ctx.rng, 1.0);
            let t1 = ctx.rng.random_range(0.0..2.0 * PI);
            let t2 = t1 + ctx.rng.random_range(0.2..PI - 0.2);
            let r1 = directional_derivative(&f, &g, t1, z);
            let r2 = directional_derivative(&f, &g, t2, z);
            worst = worst.max((combine_directionals(r1, r2, t1, t2)? - q_derivative(&f, &g, z)).norm());
        }
        Ok(Measure::Residual(worst, 1e-10))
    })();
    ctx.record("recover_derivative", measured);
}

fn phaseless_rolle(ctx: &mut Ctx) {
    let measured = (|| {
        let (mut violations, mut fallbacks) = (0, 0);
        for _ in 0..20 {
            let vertex = uniform_disk(&mut ctx.rng, 0.4);
            let t1 = ctx.rng.random_range(0.0..2.0 * PI);
            let t2 = t1 + ctx.rng.random_range(0.5..PI - 0.5);
            let arms = [(ctx.rng.random_range(0.02..0.2), t1), (ctx.rng.random_range(0.02..0.2), t2)];
            let inst = equal_modulus_instance(PI, 6, vertex, arms, &mut ctx.rng)?;
            let p1 = rolle_point(&inst.f, &inst.h, inst.a, inst.vertex)?;
            let p2 = rolle_point(&inst.f, &inst.h, inst.b, inst.vertex)?;
            fallbacks += usize::from(p1.fallback) + usize::from(p2.fallback);
            let b = zero_perturbation_bound_check(&inst.f, &inst.h, vertex, p1.theta, p2.theta, p1.point, p2.point, 1.0)?;
            if !b.holds {
                violations += 1;
            }
        }
        Ok((violations, fallbacks))
    })();
    match measured {
        Ok((v, f)) => {
            ctx.record("bound_holds", Ok(Measure::Holds(v == 0, v as f64)));
            ctx.record("no_fallback", Ok(Measure::Holds(f == 0, f as f64)));
        }
        Err(e) => ctx.record("rolle", Err(e)),
    }
}

fn phaseless_lifted(ctx: &mut Ctx) {
    ctx.record("single_point_n0", lifted_injectivity(&[c(0.0, 0.0)], 0, PI).map(|r| Measure::Holds(r.kernel_dim == 0, r.kernel_dim as f64)));
    ctx.record("single_point_n1", lifted_injectivity(&[c(0.3, 0.2)], 1, PI).map(|r| Measure::Holds(r.kernel_dim == 3 && r.witness.is_some(), r.kernel_dim as f64)));
    let pts: Vec<Complex64> = (0..20).map(|_| uniform_disk(&mut ctx.rng, 1.2)).collect();
    ctx.record("rank_count", lifted_injectivity(&pts, 3, PI).map(|r| Measure::Holds(r.kernel_dim == 0, r.kernel_dim as f64)));
}
