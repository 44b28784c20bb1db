//! The property battery behind `speiser selftest`: one suite per module,
//! each a list of named checks with the measured quantity in the detail.
//! Inputs come from fixed-seed generators, so reports are reproducible.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cli::{cmd_counting, cmd_render, RunConfig};
use crate::counting::{counting_sample, estimate_order, log_radii, pole_profile};
use crate::covering::{
    branch_derivative_bound, chain_diameter, check_containment, concat_normalization,
    local_inverse_derivative, BranchChain, DEFAULT_C1,
};
use crate::elliptic::{EllipticFunction, Lattice};
use crate::error::{Error, Result};
use crate::mcmullen::{
    dimension_formula, escaping_sampler, mcmullen_bound, pole_bound_closed_form, pole_cover_spec,
    SamplerOptions,
};
use crate::models::{default_offset, Branch, ModelFunction, PoleDatum, PowerLift, WpExp, WpPower};
use crate::orbits::{iterate, render_escape_field, Classification, Schedule};
use crate::sphere::{
    chordal_distance, logarea, spherical_area, Excision, ExtendedComplex, PlanarRegion,
};

/// Suite names in run order.
pub const SUITES: [&str; 8] = [
    "sphere", "elliptic", "models", "counting", "covering", "mcmullen", "orbits", "cli",
];

/// Overrides applied to the battery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelftestOptions {
    /// Inverse-branch constant used by the covering suite.
    pub c1: f64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self { c1: DEFAULT_C1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub checks: Vec<Check>,
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

/// A check whose body failed with an error.
fn run_check(name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match body() {
        Ok((passed, detail)) => check(name, passed, detail),
        Err(e) => check(name, false, format!("error: {e}")),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn sphere_suite() -> Vec<Check> {
    vec![
        run_check("chordal triangle inequality (1e4 triples)", || {
            let mut r = rng(1);
            let mut point = || {
                if r.gen_bool(0.05) {
                    ExtendedComplex::Infinity
                } else {
                    let s = 10f64.powf(r.gen_range(-3.0..3.0));
                    ExtendedComplex::Finite(Complex64::from_polar(s, r.gen_range(-PI..PI)))
                }
            };
            let mut worst: f64 = 0.0;
            for _ in 0..10_000 {
                let (x, y, z) = (point(), point(), point());
                let excess = chordal_distance(x, z) - chordal_distance(x, y) - chordal_distance(y, z);
                worst = worst.max(excess);
            }
            Ok((worst <= 1e-15, format!("max excess {worst:.3e}")))
        }),
        run_check("sphere area 4 pi at 2048^2", || {
            let disk = PlanarRegion::disk(c64(0.0, 0.0), 1.0)?.with_resolution(2048, 2048)?;
            // the unit disk is a hemisphere
            let total = 2.0 * spherical_area(&disk);
            let rel = (total / (4.0 * PI) - 1.0).abs();
            Ok((rel < 1e-3, format!("area {total:.6}, relative error {rel:.2e}")))
        }),
        run_check("logarea monotone under inclusion", || {
            let mut last = 0.0;
            let mut ok = true;
            let mut values = Vec::new();
            for (a, b) in [(1.0, 2.0), (1.0, 3.0), (0.5, 4.0), (0.25, 8.0)] {
                let region = PlanarRegion::rect(a, b, a, b)?.with_resolution(256, 256)?;
                let v = logarea(&region, Excision::None)?.estimate;
                ok &= v > last;
                last = v;
                values.push(format!("{v:.4}"));
            }
            Ok((ok, values.join(" < ")))
        }),
    ]
}

fn random_lattice(r: &mut ChaCha8Rng) -> Result<Lattice> {
    let w1 = Complex64::from_polar(r.gen_range(0.5..2.0), r.gen_range(-PI..PI));
    let tau = c64(r.gen_range(-0.5..0.5), r.gen_range(0.9..2.0));
    Lattice::new(w1, w1 * tau)
}

/// Points of a cell at least `margin` cell diameters from the lattice.
fn cell_points(r: &mut ChaCha8Rng, lat: &Lattice, n: usize, margin: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let z = lat.omega1() * r.gen_range(0.0..1.0) + lat.omega2() * r.gen_range(0.0..1.0);
        if lat.reduce(z).0.norm() >= margin * lat.cell_diameter() {
            out.push(z);
        }
    }
    out
}

fn elliptic_suite() -> Vec<Check> {
    let mut lattices_rng = rng(2);
    let lattices: Vec<Lattice> = (0..5)
        .filter_map(|_| random_lattice(&mut lattices_rng).ok())
        .collect();
    vec![
        run_check("ODE residual 1e3 points x 5 lattices", || {
            let mut r = rng(3);
            let mut worst: f64 = 0.0;
            for lat in &lattices {
                let f = EllipticFunction::new(lat.clone());
                let (g2, g3) = (lat.g2(), lat.g3());
                for z in cell_points(&mut r, lat, 1000, 0.05) {
                    let (p, dp) = f.wp_and_prime(z).ok_or(Error::InvalidModel("pole".into()))?;
                    let rhs = 4.0 * p * p * p - g2 * p - g3;
                    let scale = dp.norm_sqr() + 4.0 * p.norm().powi(3) + g2.norm() * p.norm() + g3.norm();
                    worst = worst.max((dp * dp - rhs).norm() / scale);
                }
            }
            Ok((worst < 1e-9, format!("max relative residual {worst:.3e}")))
        }),
        run_check("double periodicity |m|,|n| <= 3", || {
            let mut r = rng(4);
            let mut worst: f64 = 0.0;
            for lat in &lattices {
                let f = EllipticFunction::new(lat.clone());
                for z in cell_points(&mut r, lat, 50, 0.05) {
                    let base = f.wp(z).finite().ok_or(Error::InvalidModel("pole".into()))?;
                    for m in -3..=3 {
                        for n in -3..=3 {
                            let w = z + lat.omega1() * m as f64 + lat.omega2() * n as f64;
                            let v = f.wp(w).finite().ok_or(Error::InvalidModel("pole".into()))?;
                            worst = worst.max((v - base).norm() / base.norm().max(1.0));
                        }
                    }
                }
            }
            Ok((worst < 1e-10, format!("max deviation {worst:.3e}")))
        }),
        run_check("wp even, wp' odd", || {
            let mut r = rng(5);
            let mut worst: f64 = 0.0;
            for lat in &lattices {
                let f = EllipticFunction::new(lat.clone());
                for z in cell_points(&mut r, lat, 200, 0.05) {
                    let (p, dp) = f.wp_and_prime(z).ok_or(Error::InvalidModel("pole".into()))?;
                    let (q, dq) = f.wp_and_prime(-z).ok_or(Error::InvalidModel("pole".into()))?;
                    worst = worst.max((p - q).norm() / p.norm().max(1.0));
                    worst = worst.max((dp + dq).norm() / dp.norm().max(1.0));
                }
            }
            Ok((worst < 1e-12, format!("max asymmetry {worst:.3e}")))
        }),
        run_check("doubling the truncation", || {
            let mut r = rng(6);
            let mut worst: f64 = 0.0;
            for lat in &lattices {
                let f = EllipticFunction::new(lat.clone());
                let g = EllipticFunction::with_parameters(lat.clone(), 2 * f.truncation(), f.pole_epsilon())?;
                for z in cell_points(&mut r, lat, 200, 0.05) {
                    let a = f.wp(z).finite().ok_or(Error::InvalidModel("pole".into()))?;
                    let b = g.wp(z).finite().ok_or(Error::InvalidModel("pole".into()))?;
                    worst = worst.max((a - b).norm() / a.norm().max(1.0));
                }
            }
            Ok((worst < 1e-12, format!("max change {worst:.3e}")))
        }),
        run_check("critical values sum to zero", || {
            let mut worst: f64 = 0.0;
            for lat in &lattices {
                let e = EllipticFunction::new(lat.clone()).critical_values().values;
                let scale = e.iter().map(|v| v.norm()).fold(1.0, f64::max);
                worst = worst.max((e[0] + e[1] + e[2]).norm() / scale);
            }
            Ok((worst < 1e-10, format!("max |e1+e2+e3| {worst:.3e}")))
        }),
    ]
}

fn unit_lattice() -> EllipticFunction {
    EllipticFunction::new(Lattice::square())
}

fn wpexp_model() -> Result<ModelFunction> {
    let f = unit_lattice();
    let c = default_offset(&f);
    Ok(ModelFunction::WpExp(WpExp::new(f, c)?))
}

fn power_model(rho: f64) -> Result<ModelFunction> {
    let f = unit_lattice();
    let c = default_offset(&f);
    Ok(ModelFunction::WpPower(WpPower::new(f, rho, c, Branch::Plus)?))
}

/// Worst relative deviation of `|f(z)| |z-a|^2` from `|b|^2` at distance
/// `1e-4 |b|` over the first `count` poles.
fn local_expansion_error(m: &ModelFunction, poles: &[PoleDatum], count: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in poles.iter().filter(|p| !p.approximate).take(count) {
        let h = 1e-4 * p.coefficient;
        for k in 0..4 {
            let z = p.location + Complex64::from_polar(h, 0.3 + k as f64 * PI / 2.0);
            let v = m.eval(z)?.finite().ok_or(Error::InvalidModel("sample hit a pole".into()))?;
            worst = worst.max((v.norm() * h * h / (p.coefficient * p.coefficient) - 1.0).abs());
        }
    }
    Ok(worst)
}

fn models_suite() -> Vec<Check> {
    vec![
        run_check("local expansion at 20 poles (exp model)", || {
            let m = wpexp_model()?;
            let poles = m.poles_in_disk(3.0)?;
            let e = local_expansion_error(&m, &poles, 20)?;
            Ok((e < 1e-3, format!("max relative deviation {e:.3e} over {} poles", poles.len().min(20))))
        }),
        run_check("local expansion at 20 poles (power model)", || {
            let m = power_model(1.0)?;
            let poles = m.poles_in_disk(30.0)?;
            let e = local_expansion_error(&m, &poles, 20)?;
            Ok((e < 1e-3, format!("max relative deviation {e:.3e}")))
        }),
        run_check("lift poles are root fibres (N = 2, 3)", || {
            let mut detail = Vec::new();
            let mut ok = true;
            for n in [2u32, 3] {
                let inner = power_model(1.0)?;
                let lift = ModelFunction::PowerLift(PowerLift::new(inner.clone(), n)?);
                let r = 3.0f64;
                let lifted = lift.poles_in_disk(r)?;
                let base = inner.poles_in_disk(r.powi(n as i32))?;
                let fibres = lifted.iter().all(|p| {
                    let w = p.location.powu(n);
                    base.iter().any(|q| (q.location - w).norm() < 1e-8 * (1.0 + w.norm()))
                });
                ok &= fibres && lifted.len() == n as usize * base.len();
                detail.push(format!("N={n}: {} = {}x{}", lifted.len(), n, base.len()));
            }
            Ok((ok, detail.join(", ")))
        }),
        run_check("large values only near inventoried poles", || {
            let m = power_model(1.0)?;
            let threshold = 1e6;
            let r = 10.0;
            let poles = m.poles_in_disk(r + 0.1)?;
            let step = 0.02;
            let n = (2.0 * r / step) as i64;
            let mut stray = 0;
            let mut found = 0;
            for i in 0..=n {
                for j in 0..=n {
                    let z = c64(-r + i as f64 * step + 1e-3, -r + j as f64 * step + 2e-3);
                    if z.norm() > r || m.on_seam(z) {
                        continue;
                    }
                    let big = m.eval(z)?.finite().is_none_or(|v| v.norm() > threshold);
                    if big {
                        found += 1;
                        let near = poles.iter().any(|p| {
                            (z - p.location).norm() <= 2.0 * p.coefficient / threshold.sqrt()
                        });
                        if !near {
                            stray += 1;
                        }
                    }
                }
            }
            Ok((stray == 0 && found > 0, format!("{found} large samples, {stray} outside the outer radii")))
        }),
    ]
}

fn counting_suite() -> Vec<Check> {
    vec![
        run_check("n(r) nondecreasing with jumps of 2", || {
            let m = ModelFunction::PlainWp(EllipticFunction::new(Lattice::new(c64(1.0, 0.0), c64(0.3, 1.1))?));
            let radii = log_radii(1.0, 20.0, 64)?;
            let (n, _) = pole_profile(&m, &radii)?;
            let mono = n.windows(2).all(|w| w[1] >= w[0]);
            let mut exact = true;
            for (k, &r) in radii.iter().enumerate() {
                exact &= n[k] == 2 * m.poles_in_disk(r)?.len() as u64;
            }
            Ok((mono && exact, format!("n(20) = {}", n.last().copied().unwrap_or(0))))
        }),
        run_check("N(r) matches the closed form", || {
            let m = ModelFunction::PlainWp(unit_lattice());
            let radii = log_radii(2.0, 30.0, 16)?;
            let (_, big_n) = pole_profile(&m, &radii)?;
            let mut worst: f64 = 0.0;
            for (k, &r) in radii.iter().enumerate() {
                let exact: f64 = m
                    .poles_in_disk(r)?
                    .iter()
                    .filter(|p| p.location.norm() > 0.0)
                    .map(|p| 2.0 * (r / p.location.norm()).ln())
                    .sum::<f64>()
                    + 2.0 * r.ln();
                worst = worst.max((big_n[k] - exact).abs() / exact.abs().max(1.0));
            }
            Ok((worst < 1e-12, format!("max relative deviation {worst:.3e}")))
        }),
        run_check("T = m + N", || {
            let m = power_model(1.0)?;
            let radii = log_radii(5.0, 50.0, 8)?;
            let cs = counting_sample(&m, &radii, 256)?;
            let worst = (0..radii.len())
                .map(|k| (cs.t[k] - cs.m[k] - cs.big_n[k]).abs())
                .fold(0.0, f64::max);
            Ok((worst < 1e-12, format!("max |T - m - N| {worst:.3e}")))
        }),
        run_check("order estimate stable under doubling Q", || {
            let m = power_model(1.0)?;
            let radii = log_radii(10.0, 300.0, 16)?;
            let a = estimate_order(&counting_sample(&m, &radii, 128)?, 10.0, 300.0)?;
            let b = estimate_order(&counting_sample(&m, &radii, 256)?, 10.0, 300.0)?;
            let d = (a.slope - b.slope).abs();
            Ok((d <= 0.01, format!("slopes {:.5} / {:.5}", a.slope, b.slope)))
        }),
    ]
}

fn covering_suite(opts: &SelftestOptions) -> Vec<Check> {
    let c1 = opts.c1;
    vec![
        run_check("local-model branch derivatives within the C1 bound", || {
            let mut r = rng(7);
            let mut worst = 0.0f64;
            let mut example = String::new();
            for _ in 0..10_000 {
                let b = Complex64::from_polar(10f64.powf(r.gen_range(-2.0..2.0)), r.gen_range(-PI..PI));
                let w = Complex64::from_polar(10f64.powf(r.gen_range(0.0..6.0)), r.gen_range(-PI..PI));
                let measured = local_inverse_derivative(b, w).norm();
                let bound = branch_derivative_bound(b.norm(), w.norm(), c1);
                let ratio = measured / bound;
                if ratio > worst {
                    worst = ratio;
                    example = format!("|g'| = {measured:.6e} vs bound {bound:.6e} at |b| = {:.4e}, |z| = {:.4e}", b.norm(), w.norm());
                }
            }
            Ok((worst <= 1.0 + 1e-12, format!("C1 = {c1}: worst {example}")))
        }),
        run_check("chain diameters submultiplicative", || {
            let mut r = rng(8);
            let big_r = 100.0;
            let mut worst = 0.0f64;
            for _ in 0..1000 {
                let chain = |r: &mut ChaCha8Rng, len: usize| {
                    let poles = (0..len)
                        .map(|_| {
                            let a = Complex64::from_polar(big_r * r.gen_range(1.0..50.0), r.gen_range(-PI..PI));
                            (a, r.gen_range(0.1..10.0))
                        })
                        .collect();
                    BranchChain::new(poles, c1)
                };
                let lx = r.gen_range(1..5);
                let x = chain(&mut r, lx)?;
                let ly = r.gen_range(1..5);
                let y = chain(&mut r, ly)?;
                let (dx, dy, dxy) = (
                    chain_diameter(&x, big_r)?,
                    chain_diameter(&y, big_r)?,
                    chain_diameter(&x.concat(&y), big_r)?,
                );
                let (ne, ns) = concat_normalization(&y, big_r, c1);
                worst = worst.max(dxy.euclidean / (dx.euclidean * dy.euclidean * ne));
                worst = worst.max(dxy.spherical / (dx.spherical * dy.spherical * ns));
            }
            Ok((worst <= 1.0 + 1e-9, format!("max ratio {worst:.12}")))
        }),
        run_check("components contained between the Koebe disks", || {
            let m = power_model(1.0)?;
            let big_r = 1e3;
            let poles: Vec<PoleDatum> = m
                .poles_in_disk(12.0)?
                .into_iter()
                .filter(|p| p.location.re > 0.0 && p.location.arg().abs() < 0.8 * PI)
                .take(10)
                .collect();
            let mut failures = Vec::new();
            for p in &poles {
                let c = check_containment(&m, p, big_r, 48)?;
                if !c.holds() {
                    failures.push(format!("{:.4}: inside {:.3e}, ring {:.3e}", p.location, c.min_inside, c.max_on_ring));
                }
            }
            let ok = failures.is_empty() && poles.len() == 10;
            Ok((ok, if ok { format!("{} poles", poles.len()) } else { failures.join("; ") }))
        }),
    ]
}

fn mcmullen_suite() -> Vec<Check> {
    vec![
        run_check("limit invariant under diameter rescaling", || {
            let spec = pole_cover_spec(1.0, 1e3, 1.0, 1.0, 256)?;
            let mut worst = 0.0f64;
            let mut ok = true;
            for scale in [0.01, 0.5, 3.0, 100.0] {
                let scaled = spec.scaled_diameters(scale)?;
                let d = (mcmullen_bound(&spec).limit - mcmullen_bound(&scaled).limit).abs();
                let allowed = 3.0 / spec.levels() as f64 * f64::ln(scale).abs() / spec.log_diams()[0].abs();
                ok &= d < allowed;
                worst = worst.max(d / allowed);
            }
            Ok((ok, format!("max deviation / allowance {worst:.3e}")))
        }),
        run_check("pole cover bounds match the closed form", || {
            let mut worst = 0.0f64;
            for (rho, big_r, c2, c7) in [(0.5, 1e3, 1.0, 1.0), (1.0, 1e6, 2.0, 0.5), (1.5, 50.0, 0.3, 3.0)] {
                let spec = pole_cover_spec(rho, big_r, c2, c7, 64)?;
                for (i, b) in mcmullen_bound(&spec).raw.iter().enumerate() {
                    worst = worst.max((b - pole_bound_closed_form(rho, big_r, c2, c7, i + 1)).abs());
                }
            }
            Ok((worst < 1e-12, format!("max deviation {worst:.3e}")))
        }),
        run_check("dimension formula increasing onto (0, 2)", || {
            let mut last = 0.0;
            let mut ok = true;
            for k in -40..=40 {
                let d = dimension_formula(10f64.powf(k as f64 / 4.0))?;
                ok &= d > last && d < 2.0;
                last = d;
            }
            ok &= dimension_formula(1e-12)? < 1e-11 && dimension_formula(1e12)? > 2.0 - 1e-11;
            Ok((ok, format!("value at 1e10: {last:.12}")))
        }),
        run_check("sampler output shrinks with depth", || {
            let m = wpexp_model()?;
            let region = PlanarRegion::rect(2.0, 4.0, -1.0, 1.0)?.with_resolution(24, 24)?;
            let counts = (1..=5)
                .map(|depth| escaping_sampler(&m, &region, &Schedule::Exponential, SamplerOptions { depth }).map(|p| p.len()))
                .collect::<Result<Vec<_>>>()?;
            let ok = counts.windows(2).all(|w| w[1] <= w[0]) && counts[4] > 0;
            Ok((ok, format!("counts {counts:?}")))
        }),
    ]
}

fn orbits_suite() -> Vec<Check> {
    vec![
        run_check("iteration is deterministic", || {
            let m = wpexp_model()?;
            let mut ok = true;
            for k in 0..50 {
                let z = c64(0.08 * k as f64, 0.1 * k as f64 - 2.5);
                ok &= iterate(&m, z, &Schedule::Exponential, 16)? == iterate(&m, z, &Schedule::Exponential, 16)?;
            }
            Ok((ok, "50 seeds".into()))
        }),
        run_check("raising the schedule never makes bounded orbits escape", || {
            let m = power_model(1.0)?;
            let mut violations = 0;
            let mut bounded = 0;
            for i in 0..40 {
                for j in 0..40 {
                    let z = c64(0.5 + 0.3 * i as f64, -6.0 + 0.3 * j as f64);
                    let low = iterate(&m, z, &Schedule::Constant(200.0), 12)?.classification;
                    let high = iterate(&m, z, &Schedule::Constant(2000.0), 12)?.classification;
                    if low == Classification::Bounded {
                        bounded += 1;
                        if matches!(high, Classification::Escaping { .. }) {
                            violations += 1;
                        }
                    }
                }
            }
            Ok((violations == 0 && bounded > 0, format!("{bounded} bounded seeds, {violations} flipped")))
        }),
        run_check("inner Koebe disk renders as prepole or escaping", || {
            let m = power_model(1.0)?;
            let big_r: f64 = 1e3;
            let p = m
                .poles_in_disk(6.0)?
                .into_iter()
                .find(|p| p.location.re > 1.0)
                .ok_or(Error::InvalidModel("no pole found".into()))?;
            let h = p.coefficient / (4.0 * big_r.sqrt()) / 2f64.sqrt() * 0.99;
            let region = PlanarRegion::rect(p.location.re - h, p.location.re + h, p.location.im - h, p.location.im + h)?
                .with_resolution(16, 16)?;
            let field = render_escape_field(&m, &region, &Schedule::Constant(big_r), 1)?;
            let good = field.count(|c| matches!(c, Classification::Prepole { step: 1 } | Classification::Escaping { .. }));
            Ok((good == field.pixels.len(), format!("{good}/{} pixels", field.pixels.len())))
        }),
    ]
}

fn cli_suite() -> Vec<Check> {
    vec![
        run_check("effective config round-trips", || {
            let cfg = RunConfig::parse("model = wpexp\nomega2 = 0.2+1.3i\nc7 = 0.125\nschedule = const:7.5\ncover = wpexp\n")?;
            let back = RunConfig::parse(&cfg.effective())?;
            Ok((back == cfg, format!("{} keys", cfg.effective().lines().count())))
        }),
        run_check("render and counting outputs are byte-identical across runs", || {
            let render = RunConfig::parse("model = wpexp\nwidth = 32\nheight = 32\ndepth = 8\nx_min = 1\nx_max = 2\ny_min = -0.5\ny_max = 0.5\n")?;
            let counting = RunConfig::parse("model = power\nr_min = 5\nr_max = 50\nquadrature = 64\n")?;
            let same = cmd_render(&render)? == cmd_render(&render)? && cmd_counting(&counting)? == cmd_counting(&counting)?;
            Ok((same, "two runs compared".into()))
        }),
    ]
}

/// Runs one suite by name.
pub fn run_suite(name: &str, opts: &SelftestOptions) -> Result<SuiteReport> {
    let suite = SUITES
        .iter()
        .copied()
        .find(|s| *s == name)
        .ok_or_else(|| Error::Config(format!("unknown suite '{name}' (known: {})", SUITES.join(", "))))?;
    let start = Instant::now();
    let checks = match suite {
        "sphere" => sphere_suite(),
        "elliptic" => elliptic_suite(),
        "models" => models_suite(),
        "counting" => counting_suite(),
        "covering" => covering_suite(opts),
        "mcmullen" => mcmullen_suite(),
        "orbits" => orbits_suite(),
        _ => cli_suite(),
    };
    Ok(SuiteReport {
        suite,
        checks,
        elapsed: start.elapsed(),
    })
}

/// Runs every suite, or only `filter`.
pub fn run(filter: Option<&str>, opts: &SelftestOptions) -> Result<Vec<SuiteReport>> {
    match filter {
        Some(name) => Ok(vec![run_suite(name, opts)?]),
        None => SUITES.iter().map(|s| run_suite(s, opts)).collect(),
    }
}

/// Check lines of a report, without timings.
pub fn format_report(reports: &[SuiteReport]) -> String {
    let mut out = String::new();
    for r in reports {
        for c in &r.checks {
            out.push_str(&format!(
                "[{}] {}: {}: {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                r.suite,
                c.name,
                c.detail
            ));
        }
    }
    out
}
