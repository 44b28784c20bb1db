//! Orbit computation with pole handling, escape classification against a
//! radius schedule, and escape-time fields over planar regions.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::ModelFunction;
use crate::sphere::{ExtendedComplex, PlanarRegion};

/// Default iteration cap.
pub const DEFAULT_CAP: usize = 64;
/// Smallest accepted field resolution per axis.
pub const MIN_FIELD_RESOLUTION: usize = 16;

/// Escape radii `R_k`, `k = 1, 2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    /// `R_k = e^k`.
    Exponential,
    /// `R_k = R` for all `k`.
    Constant(f64),
    /// Nothing ever escapes.
    Infinite,
    /// Explicit radii; the last one repeats.
    Explicit(Vec<f64>),
}

impl Schedule {
    pub fn radius(&self, k: usize) -> f64 {
        match self {
            Schedule::Exponential => (k as f64).exp(),
            Schedule::Constant(r) => *r,
            Schedule::Infinite => f64::INFINITY,
            Schedule::Explicit(v) => match v.len() {
                0 => f64::INFINITY,
                n => v[(k.max(1) - 1).min(n - 1)],
            },
        }
    }
}

/// How an orbit relates to the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// `|z_k| > R_k` for every `k <= depth` (the cap).
    Escaping { depth: usize },
    /// `z_step` is infinity.
    Prepole { step: usize },
    /// No iterate exceeded its radius.
    Bounded,
    /// Exceeded the schedule for the first `depth` steps only, re-entered
    /// later, or lost precision.
    Undetermined { depth: usize },
}

impl Classification {
    /// Escape depth carried by the classification (0 when bounded).
    pub fn depth(&self) -> usize {
        match *self {
            Classification::Escaping { depth } | Classification::Undetermined { depth } => depth,
            Classification::Prepole { step } => step,
            Classification::Bounded => 0,
        }
    }
}

/// An orbit `z, f(z), f^2(z), ...` with its classification.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRecord {
    pub initial: Complex64,
    /// `f(z), ..., f^k(z)`, at most `cap` entries.
    pub trajectory: Vec<ExtendedComplex>,
    pub classification: Classification,
    pub schedule: Schedule,
}

/// Iterates `m` from `z` for up to `cap` steps.
pub fn iterate(m: &ModelFunction, z: Complex64, schedule: &Schedule, cap: usize) -> Result<OrbitRecord> {
    if cap == 0 {
        return Err(Error::InvalidModel("iteration cap must be at least 1".into()));
    }
    let mut trajectory = Vec::with_capacity(cap.min(256));
    let mut run = 0;
    let mut running = true;
    let mut exceeded = false;
    let mut current = z;
    let mut classification = None;
    for k in 1..=cap {
        let v = match m.eval(current) {
            Ok(v) => v,
            Err(_) => {
                classification = Some(Classification::Undetermined { depth: run });
                break;
            }
        };
        trajectory.push(v);
        let w = match v {
            ExtendedComplex::Infinity => {
                classification = Some(Classification::Prepole { step: k });
                break;
            }
            ExtendedComplex::Finite(w) => w,
        };
        if w.norm() > schedule.radius(k) {
            exceeded = true;
            if running {
                run = k;
            }
        } else {
            running = false;
        }
        current = w;
    }
    let classification = classification.unwrap_or(if run == cap {
        Classification::Escaping { depth: cap }
    } else if !exceeded {
        Classification::Bounded
    } else {
        Classification::Undetermined { depth: run }
    });
    Ok(OrbitRecord {
        initial: z,
        trajectory,
        classification,
        schedule: schedule.clone(),
    })
}

/// Whether `|f^k(z)| > R_k` for all `k <= depth`, stopping at the first
/// failure. A pole counts as escaping through every remaining step; the
/// returned step is where infinity was reached (or `depth`).
pub fn escapes_to_depth(m: &ModelFunction, z: Complex64, schedule: &Schedule, depth: usize) -> Option<usize> {
    let mut current = z;
    for k in 1..=depth {
        match m.eval(current) {
            Ok(ExtendedComplex::Infinity) => return Some(k),
            Ok(ExtendedComplex::Finite(w)) if w.norm() > schedule.radius(k) => current = w,
            _ => return None,
        }
    }
    Some(depth)
}

/// `f^k(z)` and its derivative; `None` when an iterate hits a pole.
pub fn forward_with_derivative(m: &ModelFunction, z: Complex64, k: usize) -> Result<Option<(Complex64, Complex64)>> {
    let mut w = z;
    let mut dw = Complex64::new(1.0, 0.0);
    for _ in 0..k {
        match m.eval_with_derivative(w)? {
            Some((v, d)) => {
                dw *= d;
                w = v;
            }
            None => return Ok(None),
        }
    }
    Ok(Some((w, dw)))
}

/// A point `t` next to the pole `a` with `f(t) = target`, by Newton on
/// `1/f(t) = 1/target` started from the leading-order local expansion.
pub fn pole_target(m: &ModelFunction, a: Complex64, target: Complex64) -> Option<Complex64> {
    let (_, dpsi) = m.inner_map_with_derivative(a).ok()?;
    let mut t = a + (dpsi * target.sqrt()).inv();
    let goal = target.inv();
    for _ in 0..40 {
        let (v, d) = m.eval_with_derivative(t).ok()??;
        let g = v.inv() - goal;
        if g.norm() <= 1e-12 * goal.norm() {
            return Some(t);
        }
        let dg = -d / (v * v);
        if dg.norm_sqr() == 0.0 {
            return None;
        }
        t -= g / dg;
    }
    None
}

/// A pole `a` with `R_k < |a|` suited as the `k`-th stop of a designed
/// escaping orbit: among poles found near points of modulus `5/4 R_k` on the
/// imaginary axis, the one with the smallest inner-map derivative, which
/// keeps the expansion along the orbit (and the round-off it amplifies)
/// as small as possible.
pub fn itinerary_pole(m: &ModelFunction, k: usize, schedule: &Schedule) -> Option<Complex64> {
    let r = schedule.radius(k);
    if !r.is_finite() {
        return None;
    }
    let y = 1.25 * r.max(1.0);
    let mut best: Option<(f64, Complex64)> = None;
    for dx in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        for dy in [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
            let q = Complex64::new(dx, y + dy);
            let Ok(Some(a)) = m.nearest_pole(q) else { continue };
            if !(a.norm() > 1.1 * r && a.norm() < 4.0 * r.max(1.0)) {
                continue;
            }
            let Ok((_, d)) = m.inner_map_with_derivative(a) else { continue };
            let score = d.norm();
            if score > 0.0 && best.is_none_or(|(s, _)| score < s) {
                best = Some((score, a));
            }
        }
    }
    best.map(|(_, a)| a)
}

/// The point next to `stops[0]` whose orbit passes next to `stops[1]`,
/// `stops[2]`, ... and finally reaches modulus `2 R_n` at step
/// `n = stops.len()`. Built backwards through local inverses near each
/// pole, which are contracting, so no accuracy is lost in the construction.
pub fn designed_orbit(m: &ModelFunction, stops: &[Complex64], schedule: &Schedule) -> Option<Complex64> {
    let n = stops.len();
    let last = 2.0 * schedule.radius(n);
    if n == 0 || !last.is_finite() {
        return None;
    }
    let mut t = Complex64::new(0.0, last);
    for &a in stops.iter().rev() {
        t = pole_target(m, a, t)?;
    }
    Some(t)
}

/// The per-pixel summary of an orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pixel {
    pub classification: Classification,
    pub depth: usize,
    /// Modulus of the last computed iterate (infinite for prepoles).
    pub final_modulus: f64,
}

/// Orbit classifications at the cell centres of a region.
#[derive(Debug, Clone, PartialEq)]
pub struct EscapeField {
    pub bounds: (f64, f64, f64, f64),
    pub width: usize,
    pub height: usize,
    pub cap: usize,
    /// Row-major, row 0 at the bottom of the region.
    pub pixels: Vec<Pixel>,
}

impl EscapeField {
    pub fn pixel(&self, i: usize, j: usize) -> &Pixel {
        &self.pixels[j * self.width + i]
    }

    /// Cell centre of pixel `(i, j)`.
    pub fn center(&self, i: usize, j: usize) -> Complex64 {
        let (x0, x1, y0, y1) = self.bounds;
        Complex64::new(
            x0 + (i as f64 + 0.5) * ((x1 - x0) / self.width as f64),
            y0 + (j as f64 + 0.5) * ((y1 - y0) / self.height as f64),
        )
    }

    pub fn count(&self, pred: impl Fn(&Classification) -> bool) -> usize {
        self.pixels.iter().filter(|p| pred(&p.classification)).count()
    }
}

/// Iterates every cell centre of the region's grid.
pub fn render_escape_field(
    m: &ModelFunction,
    region: &PlanarRegion,
    schedule: &Schedule,
    cap: usize,
) -> Result<EscapeField> {
    let (width, height) = region.resolution();
    if width < MIN_FIELD_RESOLUTION || height < MIN_FIELD_RESOLUTION {
        return Err(Error::InvalidRegion(format!(
            "field resolution {width}x{height} below {MIN_FIELD_RESOLUTION}"
        )));
    }
    let rows: Vec<Result<Vec<Pixel>>> = (0..height)
        .into_par_iter()
        .map(|j| {
            (0..width)
                .map(|i| {
                    let rec = iterate(m, region.cell_center(i, j), schedule, cap)?;
                    let final_modulus = rec.trajectory.last().map_or(0.0, |v| v.norm());
                    Ok(Pixel {
                        classification: rec.classification,
                        depth: rec.classification.depth(),
                        final_modulus,
                    })
                })
                .collect()
        })
        .collect();
    let mut pixels = Vec::with_capacity(width * height);
    for row in rows {
        pixels.extend(row?);
    }
    Ok(EscapeField {
        bounds: region.bounds(),
        width,
        height,
        cap,
        pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{EllipticFunction, Lattice};
    use crate::models::WpExp;

    fn wpexp() -> ModelFunction {
        let f = EllipticFunction::new(Lattice::square());
        ModelFunction::WpExp(WpExp::new(f, Complex64::new(0.25, 0.25)).unwrap())
    }

    #[test]
    fn pole_is_prepole_one() {
        let m = ModelFunction::PlainWp(EllipticFunction::new(Lattice::square()));
        let rec = iterate(&m, Complex64::new(1.0, 1.0), &Schedule::Exponential, 10).unwrap();
        assert_eq!(rec.classification, Classification::Prepole { step: 1 });
        assert_eq!(rec.trajectory, vec![ExtendedComplex::Infinity]);
    }

    #[test]
    fn infinite_schedule_is_bounded() {
        let m = wpexp();
        let rec = iterate(&m, Complex64::new(-1.0, 0.3), &Schedule::Infinite, 20).unwrap();
        assert!(matches!(
            rec.classification,
            Classification::Bounded | Classification::Prepole { .. } | Classification::Undetermined { .. }
        ));
        if let Classification::Bounded = rec.classification {
            assert_eq!(rec.trajectory.len(), 20);
        }
    }

    #[test]
    fn deterministic() {
        let m = wpexp();
        let a = iterate(&m, Complex64::new(1.3, 0.7), &Schedule::Exponential, 12).unwrap();
        let b = iterate(&m, Complex64::new(1.3, 0.7), &Schedule::Exponential, 12).unwrap();
        assert_eq!(a, b);
        assert!(a.trajectory.len() <= 12);
    }

    #[test]
    fn explicit_schedule_repeats_last() {
        let s = Schedule::Explicit(vec![1.0, 5.0]);
        assert_eq!(s.radius(1), 1.0);
        assert_eq!(s.radius(7), 5.0);
    }

    #[test]
    fn small_field_rejected() {
        let region = PlanarRegion::rect(0.0, 1.0, 0.0, 1.0).unwrap().with_resolution(8, 8).unwrap();
        assert!(render_escape_field(&wpexp(), &region, &Schedule::Exponential, 4).is_err());
    }

    #[test]
    fn designed_orbit_escapes() {
        let m = wpexp();
        let s = Schedule::Exponential;
        let mut stops = vec![m.nearest_pole(Complex64::new(3.5, 0.3)).unwrap().unwrap()];
        for k in 1..5 {
            stops.push(itinerary_pole(&m, k, &s).unwrap());
        }
        let z = designed_orbit(&m, &stops, &s).unwrap();
        let rec = iterate(&m, z, &s, 5).unwrap();
        assert_eq!(rec.classification, Classification::Escaping { depth: 5 });
    }

    #[test]
    fn derivative_chain_matches_difference_quotient() {
        let m = ModelFunction::PlainWp(EllipticFunction::new(Lattice::square()));
        let z = Complex64::new(0.31, 0.22);
        let h = 1e-7;
        let (w, d) = forward_with_derivative(&m, z, 2).unwrap().unwrap();
        let (wh, _) = forward_with_derivative(&m, z + h, 2).unwrap().unwrap();
        assert!(((wh - w) / h - d).norm() < 1e-4 * d.norm());
    }
}
