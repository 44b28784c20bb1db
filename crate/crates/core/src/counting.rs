//! Nevanlinna counting functions: the pole count `n(r)`, its integrated
//! form `N(r)`, the proximity function `m(r)`, the characteristic
//! `T = m + N`, and order estimates from log-log fits of `n(r)`.
//!
//! Pole counts are exact: poles are streamed from the model inventory into
//! a histogram over the radius grid, so even the `e^{2r}` growth of the
//! exponential model never materialises a pole list.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::ModelFunction;
use crate::sphere::ExtendedComplex;

/// Default number of circle nodes for the proximity function.
pub const DEFAULT_QUADRATURE: usize = 4096;
/// Default radius grid density.
pub const DEFAULT_RADII_PER_DECADE: usize = 64;
/// Minimum number of radii in an order fit.
pub const MIN_FIT_RADII: usize = 5;
const MAX_NUDGES: usize = 8;

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A function whose Nevanlinna functions can be computed.
pub trait CountingTarget: Sync {
    fn value(&self, z: Complex64) -> Result<ExtendedComplex>;
    /// Streams `(|pole|, multiplicity)` for all poles in `|z| <= r`.
    fn for_each_pole(&self, r: f64, visit: &mut dyn FnMut(f64, u32)) -> Result<()>;
    /// Streams `(|z|, multiplicity)` for all solutions of `f(z) = a` in
    /// `|z| <= r`.
    fn for_each_a_point(&self, a: Complex64, r: f64, visit: &mut dyn FnMut(f64, u32)) -> Result<()>;
}

impl CountingTarget for ModelFunction {
    fn value(&self, z: Complex64) -> Result<ExtendedComplex> {
        self.eval(z)
    }

    fn for_each_pole(&self, r: f64, visit: &mut dyn FnMut(f64, u32)) -> Result<()> {
        ModelFunction::for_each_pole(self, r, |p| visit(p.location.norm(), p.multiplicity))
    }

    fn for_each_a_point(&self, a: Complex64, r: f64, visit: &mut dyn FnMut(f64, u32)) -> Result<()> {
        if matches!(self, ModelFunction::GluedOrderTwo(_)) {
            return Err(Error::InvalidModel(
                "a-point counting needs a single inner map".into(),
            ));
        }
        let targets: Vec<(Complex64, u32)> = self.elliptic().solve(a);
        if targets.is_empty() {
            return Err(Error::InvalidModel(format!("no solutions of wp(u) = {a} found")));
        }
        self.for_each_preimage(&targets, r, &mut |p| visit(p.location.norm(), p.multiplicity))
    }
}

/// The constant function, a test field with no poles and no a-points
/// (unless `a` equals the constant, which is rejected).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantField(pub Complex64);

impl CountingTarget for ConstantField {
    fn value(&self, _z: Complex64) -> Result<ExtendedComplex> {
        Ok(ExtendedComplex::Finite(self.0))
    }

    fn for_each_pole(&self, _r: f64, _visit: &mut dyn FnMut(f64, u32)) -> Result<()> {
        Ok(())
    }

    fn for_each_a_point(&self, a: Complex64, _r: f64, _visit: &mut dyn FnMut(f64, u32)) -> Result<()> {
        if a == self.0 {
            return Err(Error::InvalidModel("every point is an a-point".into()));
        }
        Ok(())
    }
}

/// Logarithmically spaced radii from `r_min` to `r_max` inclusive.
pub fn log_radii(r_min: f64, r_max: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) || per_decade == 0 {
        return Err(Error::InvalidRadii(format!(
            "need 0 < r_min < r_max and a positive density, got {r_min}, {r_max}, {per_decade}"
        )));
    }
    let decades = (r_max / r_min).log10();
    let steps = (decades * per_decade as f64).ceil().max(1.0) as usize;
    let mut out: Vec<f64> = (0..=steps)
        .map(|k| r_min * 10f64.powf(decades * k as f64 / steps as f64))
        .collect();
    out[0] = r_min;
    out[steps] = r_max;
    Ok(out)
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidRadii("empty radius grid".into()));
    }
    if radii[0] <= 0.0 || !radii.iter().all(|r| r.is_finite()) {
        return Err(Error::InvalidRadii("radii must be positive and finite".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidRadii("radii must be strictly increasing".into()));
    }
    Ok(())
}

/// `n(r)`: poles in the closed disk counted with multiplicity.
pub fn count_poles(m: &dyn CountingTarget, r: f64) -> Result<u64> {
    let mut n = 0u64;
    m.for_each_pole(r, &mut |_, k| n += k as u64)?;
    Ok(n)
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Exact `n(r_k)` and `N(r_k)` on a radius grid from a stream of
/// `(modulus, multiplicity)`.
fn profile(
    radii: &[f64],
    stream: impl FnOnce(&mut dyn FnMut(f64, u32)) -> Result<()>,
) -> Result<(Vec<u64>, Vec<f64>)> {
    check_radii(radii)?;
    let k = radii.len();
    let mut counts = vec![0u64; k];
    let mut logs = vec![Compensated::default(); k];
    let mut at_origin = 0u64;
    stream(&mut |modulus, mult| {
        if modulus == 0.0 {
            at_origin += mult as u64;
            return;
        }
        let idx = radii.partition_point(|r| *r < modulus);
        if idx < k {
            counts[idx] += mult as u64;
            logs[idx].add(mult as f64 * modulus.ln());
        }
    })?;
    let mut n = Vec::with_capacity(k);
    let mut big_n = Vec::with_capacity(k);
    let mut running = at_origin;
    let mut log_sum = Compensated::default();
    for i in 0..k {
        running += counts[i];
        log_sum.add(logs[i].value());
        n.push(running);
        // sum over poles of mult * log(r/|a|), plus n(0) log r
        big_n.push(running as f64 * radii[i].ln() - log_sum.value());
    }
    Ok((n, big_n))
}

/// `n` and `N` on a radius grid.
pub fn pole_profile(m: &dyn CountingTarget, radii: &[f64]) -> Result<(Vec<u64>, Vec<f64>)> {
    let r_max = *radii.last().ok_or_else(|| Error::InvalidRadii("empty radius grid".into()))?;
    profile(radii, |visit| m.for_each_pole(r_max, visit))
}

/// `N(r) = int_0^r (n(t) - n(0))/t dt + n(0) log r` from the exact jump
/// radii `(|a|, multiplicity)` of `n`; zero moduli contribute to `n(0)`.
pub fn integrated_counting(jumps: &[(f64, u32)], r: f64) -> f64 {
    let mut acc = Compensated::default();
    for &(modulus, mult) in jumps {
        if modulus == 0.0 {
            acc.add(mult as f64 * r.ln());
        } else if modulus <= r {
            acc.add(mult as f64 * (r / modulus).ln());
        }
    }
    acc.value()
}

/// `N(r)` from samples of `n` on a grid, treating `n` as constant between
/// consecutive grid radii (exact when the grid contains every jump).
/// `n0` is the count at the origin.
pub fn integrated_counting_sampled(radii: &[f64], counts: &[u64], n0: u64, r: f64) -> Result<f64> {
    check_radii(radii)?;
    if counts.len() != radii.len() {
        return Err(Error::InvalidRadii("counts and radii differ in length".into()));
    }
    let mut acc = n0 as f64 * r.ln();
    for i in 0..radii.len() {
        let lo = radii[i];
        if lo >= r {
            break;
        }
        let hi = radii.get(i + 1).copied().unwrap_or(f64::INFINITY).min(r);
        acc += (counts[i] - n0) as f64 * (hi / lo).ln();
    }
    Ok(acc)
}

/// Result of a proximity evaluation, keeping any radius adjustment visible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proximity {
    pub value: f64,
    /// The radius actually used after nudging off poles.
    pub radius: f64,
    pub nudges: usize,
}

fn circle_mean(
    f: &(dyn Fn(Complex64) -> Result<ExtendedComplex> + Sync),
    r: f64,
    q: usize,
    integrand: fn(Complex64) -> f64,
) -> Result<Proximity> {
    if q == 0 {
        return Err(Error::InvalidRadii("quadrature needs at least one node".into()));
    }
    let mut radius = r;
    for nudges in 0..=MAX_NUDGES {
        let values: Vec<Result<ExtendedComplex>> = (0..q)
            .into_par_iter()
            .map(|k| {
                let t = 2.0 * PI * (k as f64 + 0.5) / q as f64;
                f(Complex64::from_polar(radius, t))
            })
            .collect();
        let mut total = 0.0;
        let mut hit_pole = false;
        for v in values {
            match v? {
                ExtendedComplex::Finite(w) => total += integrand(w),
                ExtendedComplex::Infinity => {
                    hit_pole = true;
                    break;
                }
            }
        }
        if !hit_pole {
            return Ok(Proximity {
                value: total / q as f64,
                radius,
                nudges,
            });
        }
        radius *= 1.0 + 1e-6;
    }
    Err(Error::InvalidRadii(format!(
        "circle |z| = {r} stays on poles after {MAX_NUDGES} nudges"
    )))
}

fn log_plus(w: Complex64) -> f64 {
    w.norm().ln().max(0.0)
}

fn log_plus_inverse(w: Complex64) -> f64 {
    (-w.norm().ln()).max(0.0)
}

/// `m(r) = (1/2pi) int log+ |f(r e^{it})| dt` by the trapezoid rule.
pub fn proximity(m: &dyn CountingTarget, r: f64, q: usize) -> Result<Proximity> {
    circle_mean(&|z| m.value(z), r, q, log_plus)
}

/// Counting functions on a radius grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingSample {
    pub radii: Vec<f64>,
    pub n: Vec<u64>,
    pub big_n: Vec<f64>,
    pub m: Vec<f64>,
    pub t: Vec<f64>,
    /// Radii where the proximity circle had to be moved off a pole.
    pub nudged: Vec<usize>,
}

impl CountingSample {
    /// CSV with header `r,n,N,m,T`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,n,N,m,T\n");
        for i in 0..self.radii.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                self.radii[i], self.n[i], self.big_n[i], self.m[i], self.t[i]
            );
        }
        out
    }
}

/// `n`, `N`, `m`, `T` at every grid radius. With `q = 0` the proximity is
/// skipped and reported as zero.
pub fn counting_sample(m: &dyn CountingTarget, radii: &[f64], q: usize) -> Result<CountingSample> {
    let (n, big_n) = pole_profile(m, radii)?;
    let mut prox = Vec::with_capacity(radii.len());
    let mut nudged = Vec::new();
    for (i, &r) in radii.iter().enumerate() {
        if q == 0 {
            prox.push(0.0);
            continue;
        }
        let p = proximity(m, r, q)?;
        if p.nudges > 0 {
            nudged.push(i);
        }
        prox.push(p.value);
    }
    let t = prox.iter().zip(&big_n).map(|(a, b)| a + b).collect();
    Ok(CountingSample {
        radii: radii.to_vec(),
        n,
        big_n,
        m: prox,
        t,
        nudged,
    })
}

/// Least-squares fit of `log n` against `log r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderEstimate {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in `log n`.
    pub residual: f64,
    pub window: (f64, f64),
    pub radii_used: usize,
}

/// Fits `log n(r) = slope log r + intercept` over grid radii in
/// `[lo, hi]` with `n > 0`.
pub fn estimate_order_from(radii: &[f64], counts: &[u64], lo: f64, hi: f64) -> Result<OrderEstimate> {
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(counts)
        .filter(|(r, n)| **r >= lo && **r <= hi && **n > 0)
        .map(|(r, n)| (r.ln(), (*n as f64).ln()))
        .collect();
    if pts.len() < MIN_FIT_RADII {
        return Err(Error::WindowTooSmall(pts.len()));
    }
    let (slope, intercept, residual) = least_squares(&pts);
    Ok(OrderEstimate {
        slope,
        intercept,
        residual,
        window: (lo, hi),
        radii_used: pts.len(),
    })
}

/// Order estimate on a window of a counting sample.
pub fn estimate_order(cs: &CountingSample, lo: f64, hi: f64) -> Result<OrderEstimate> {
    estimate_order_from(&cs.radii, &cs.n, lo, hi)
}

/// Lower-order surrogate: the smallest slope over `parts` consecutive
/// sub-windows of equal logarithmic width.
pub fn estimate_lower_order(cs: &CountingSample, lo: f64, hi: f64, parts: usize) -> Result<OrderEstimate> {
    if parts == 0 {
        return Err(Error::WindowTooSmall(0));
    }
    let ratio = (hi / lo).powf(1.0 / parts as f64);
    let mut best: Option<OrderEstimate> = None;
    for k in 0..parts {
        let a = lo * ratio.powi(k as i32);
        let b = if k + 1 == parts { hi } else { a * ratio };
        let est = estimate_order(cs, a, b)?;
        if best.is_none_or(|e| est.slope < e.slope) {
            best = Some(est);
        }
    }
    Ok(best.expect("at least one part"))
}

/// `(slope, intercept, rms residual)` of a least-squares line.
pub(crate) fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Both characteristics in the first fundamental theorem.
#[derive(Debug, Clone, PartialEq)]
pub struct FftResidual {
    pub radii: Vec<f64>,
    /// `T(r, f)`.
    pub t_f: Vec<f64>,
    /// `T(r, 1/(f - a))`.
    pub t_a: Vec<f64>,
    /// `sup_r |T(r, f) - T(r, 1/(f-a))|`.
    pub sup: f64,
}

/// Compares `T(r, f)` with `T(r, 1/(f - a))` over a radius grid.
pub fn fft_residual(m: &dyn CountingTarget, a: Complex64, radii: &[f64], q: usize) -> Result<FftResidual> {
    let r_max = *radii.last().ok_or_else(|| Error::InvalidRadii("empty radius grid".into()))?;
    let (_, n_poles) = pole_profile(m, radii)?;
    let (_, n_apts) = profile(radii, |visit| m.for_each_a_point(a, r_max, visit))?;
    let mut t_f = Vec::with_capacity(radii.len());
    let mut t_a = Vec::with_capacity(radii.len());
    let shifted = |z: Complex64| -> Result<ExtendedComplex> {
        Ok(match m.value(z)? {
            ExtendedComplex::Finite(w) => {
                let d = w - a;
                if d.norm_sqr() == 0.0 {
                    ExtendedComplex::Infinity
                } else {
                    ExtendedComplex::Finite(d)
                }
            }
            ExtendedComplex::Infinity => ExtendedComplex::Finite(c64(0.0, 0.0)),
        })
    };
    for (i, &r) in radii.iter().enumerate() {
        let pf = proximity(m, r, q)?;
        // log+ 1/|f - a|; an exact a-point on the circle reads as a pole of
        // 1/(f-a) and triggers the same nudge
        let pa = circle_mean(&shifted, r, q, log_plus_inverse)?;
        t_f.push(pf.value + n_poles[i]);
        t_a.push(pa.value + n_apts[i]);
    }
    let sup = t_f
        .iter()
        .zip(&t_a)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(FftResidual {
        radii: radii.to_vec(),
        t_f,
        t_a,
        sup,
    })
}
