//! Nested-cover lower bounds for Hausdorff dimension, the cover sequences
//! coming from the pole covering construction, the order/dimension
//! formula, a box-counting oracle, and a sampler for escaping points.
//!
//! For nested compact families whose level-`l` pieces have diameters at
//! most `d_l` and fill each parent with density at least `Delta_l`, the
//! limit set has dimension at least
//! `2 - limsup sum_{j<=l+1} |log Delta_j| / |log d_l|`.
//! Cover sequences are held as logarithms: geometric diameters like
//! `R^{-l}` underflow long before the bound converges.

use std::collections::HashSet;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::counting::least_squares;
use crate::error::{Error, Result};
use crate::models::ModelFunction;
use crate::orbits::{designed_orbit, escapes_to_depth, itinerary_pole, Schedule};
use crate::sphere::PlanarRegion;

/// Density and diameter sequences `Delta_l`, `d_l` for `l = 1..=L`.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedCoverSpec {
    log_deltas: Vec<f64>,
    log_diams: Vec<f64>,
}

impl NestedCoverSpec {
    /// From `ln Delta_l`, `ln d_l`.
    pub fn from_logs(log_deltas: Vec<f64>, log_diams: Vec<f64>) -> Result<Self> {
        if log_deltas.len() != log_diams.len() || log_deltas.len() < 2 {
            return Err(Error::InvalidCoverSpec(format!(
                "need equal-length sequences of at least 2 levels, got {} and {}",
                log_deltas.len(),
                log_diams.len()
            )));
        }
        for (l, &ld) in log_deltas.iter().enumerate() {
            if !(ld <= 0.0) || !ld.is_finite() {
                return Err(Error::InvalidCoverSpec(format!(
                    "Delta_{} = {} outside (0, 1]",
                    l + 1,
                    ld.exp()
                )));
            }
        }
        for (l, &ld) in log_diams.iter().enumerate() {
            if !(ld < 0.0) || ld.is_nan() {
                return Err(Error::DiametersNotContracting {
                    level: l + 1,
                    value: ld.exp(),
                });
            }
        }
        if let Some(l) = log_diams.windows(2).position(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidCoverSpec(format!(
                "diameters not strictly decreasing at level {}",
                l + 2
            )));
        }
        Ok(Self {
            log_deltas,
            log_diams,
        })
    }

    /// From plain values `Delta_l` and `d_l`.
    pub fn from_values(deltas: &[f64], diams: &[f64]) -> Result<Self> {
        if let Some(l) = diams.iter().position(|d| !(*d < 1.0)) {
            return Err(Error::DiametersNotContracting {
                level: l + 1,
                value: diams[l],
            });
        }
        if let Some(l) = deltas.iter().position(|d| !(*d > 0.0)) {
            return Err(Error::InvalidCoverSpec(format!(
                "Delta_{} = {} must be positive",
                l + 1,
                deltas[l]
            )));
        }
        Self::from_logs(
            deltas.iter().map(|d| d.ln()).collect(),
            diams.iter().map(|d| d.ln()).collect(),
        )
    }

    pub fn levels(&self) -> usize {
        self.log_deltas.len()
    }

    pub fn log_deltas(&self) -> &[f64] {
        &self.log_deltas
    }

    pub fn log_diams(&self) -> &[f64] {
        &self.log_diams
    }

    /// The same spec with every diameter multiplied by `scale`.
    pub fn scaled_diameters(&self, scale: f64) -> Result<Self> {
        Self::from_logs(
            self.log_deltas.clone(),
            self.log_diams.iter().map(|d| d + scale.ln()).collect(),
        )
    }
}

/// Per-level bounds and the limit estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSequence {
    /// `beta_l` for `l = 1..L-1` (the sum needs `Delta_{l+1}`).
    pub raw: Vec<f64>,
    /// `raw` clamped to `[0, 2]`.
    pub values: Vec<f64>,
    /// Richardson extrapolation in `1/l` from levels `L', L'/2, L'/4,
    /// L'/8`; the last value when fewer than 8 levels exist.
    pub limit: f64,
    /// The largest value over the final quarter of levels.
    pub tail_max: f64,
    /// First differences `beta_{l+1} - beta_l`.
    pub differences: Vec<f64>,
    /// Whether the differences keep one sign over the final quarter.
    pub monotone_tail: bool,
}

impl BoundSequence {
    /// The limit clamped to `[0, 2]`.
    pub fn clamped_limit(&self) -> f64 {
        self.limit.clamp(0.0, 2.0)
    }
}

fn richardson(beta: impl Fn(usize) -> f64, top: usize) -> f64 {
    // top is a multiple of 8; the step in h = 1/l doubles each row
    let levels = [top / 8, top / 4, top / 2, top];
    let mut table: Vec<f64> = levels.iter().map(|&l| beta(l)).collect();
    for order in 1..table.len() {
        let factor = 2f64.powi(order as i32);
        for i in (order..table.len()).rev() {
            table[i] = (factor * table[i] - table[i - 1]) / (factor - 1.0);
        }
    }
    table[table.len() - 1]
}

/// `beta_l = 2 - sum_{j=1}^{l+1} |log Delta_j| / |log d_l|` at every level.
pub fn mcmullen_bound(spec: &NestedCoverSpec) -> BoundSequence {
    let big_l = spec.levels();
    let mut prefix = Vec::with_capacity(big_l);
    let mut acc = 0.0;
    for ld in &spec.log_deltas {
        acc += ld.abs();
        prefix.push(acc);
    }
    let beta = |l: usize| 2.0 - prefix[l] / spec.log_diams[l - 1].abs();
    let raw: Vec<f64> = (1..big_l).map(beta).collect();
    let values = raw.iter().map(|v| v.clamp(0.0, 2.0)).collect();
    let last = raw.len();
    let tail_start = last - (last / 4).max(1);
    let tail_max = raw[tail_start..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let differences: Vec<f64> = raw.windows(2).map(|w| w[1] - w[0]).collect();
    let tail_diffs = &differences[tail_start.min(differences.len())..];
    let monotone_tail = tail_diffs.iter().all(|d| *d >= 0.0) || tail_diffs.iter().all(|d| *d <= 0.0);
    let top = last - last % 8;
    let limit = if top >= 8 { richardson(beta, top) } else { raw[last - 1] };
    BoundSequence {
        raw,
        values,
        limit,
        tail_max,
        differences,
        monotone_tail,
    }
}

/// Formats `e^x` in scientific notation without leaving log space.
fn format_exp(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "0".into() };
    }
    let t = x / std::f64::consts::LN_10;
    let mut e = t.floor();
    let mut mant = 10f64.powf(t - e);
    if mant >= 9.999_999_999_999_5 {
        mant /= 10.0;
        e += 1.0;
    }
    format!("{mant:.15}e{e}")
}

/// CSV with header `level,delta,diam,bound`.
pub fn bound_table_csv(spec: &NestedCoverSpec, bounds: &BoundSequence) -> String {
    let mut out = String::from("level,delta,diam,bound\n");
    for (i, b) in bounds.raw.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            i + 1,
            format_exp(spec.log_deltas[i]),
            format_exp(spec.log_diams[i]),
            b
        );
    }
    out
}

/// `d_l = (C2 / R^{(1+rho)/2})^l`, `Delta_l = C7/R`.
pub fn pole_cover_spec(rho: f64, r: f64, c2: f64, c7: f64, levels: usize) -> Result<NestedCoverSpec> {
    if !(rho > 0.0) {
        return Err(Error::InvalidOrder(rho));
    }
    if !(c2 > 0.0 && c7 > 0.0 && r > 1.0) {
        return Err(Error::InvalidCoverSpec(format!(
            "need C2, C7 > 0 and R > 1, got C2 = {c2}, C7 = {c7}, R = {r}"
        )));
    }
    let log_ratio = c2.ln() - 0.5 * (1.0 + rho) * r.ln();
    if !(log_ratio < 0.0) {
        return Err(Error::ContractionViolated { ratio: log_ratio.exp() });
    }
    let log_delta = c7.ln() - r.ln();
    if log_delta > 0.0 {
        return Err(Error::ContractionViolated { ratio: log_delta.exp() });
    }
    NestedCoverSpec::from_logs(
        vec![log_delta; levels],
        (1..=levels).map(|l| l as f64 * log_ratio).collect(),
    )
}

/// Closed form of `beta_l` for [`pole_cover_spec`].
pub fn pole_bound_closed_form(rho: f64, r: f64, c2: f64, c7: f64, l: usize) -> f64 {
    let lf = l as f64;
    2.0 - ((lf + 1.0) / lf) * (c7.ln() - r.ln()) / (c2.ln() - 0.5 * (1.0 + rho) * r.ln())
}

/// The escaping refinement with `R_k = e^k`:
/// `d_k = prod_{j<=k} C8 / R_j^{(1+rho)/2}`, `Delta_k = C9/R_k`.
pub fn escaping_cover_spec(rho: f64, c8: f64, c9: f64, levels: usize) -> Result<NestedCoverSpec> {
    if !(rho > 0.0) {
        return Err(Error::InvalidOrder(rho));
    }
    if !(c8 > 0.0 && c9 > 0.0) {
        return Err(Error::InvalidCoverSpec(format!("need C8, C9 > 0, got {c8}, {c9}")));
    }
    let mut log_d = 0.0;
    let mut log_diams = Vec::with_capacity(levels);
    let mut log_deltas = Vec::with_capacity(levels);
    for k in 1..=levels {
        let step = c8.ln() - 0.5 * (1.0 + rho) * k as f64;
        if !(step < 0.0) {
            return Err(Error::ContractionViolated { ratio: step.exp() });
        }
        log_d += step;
        log_diams.push(log_d);
        let ld = c9.ln() - k as f64;
        if ld > 0.0 {
            return Err(Error::ContractionViolated { ratio: ld.exp() });
        }
        log_deltas.push(ld);
    }
    NestedCoverSpec::from_logs(log_deltas, log_diams)
}

/// `d_l = (A4 / (e^R R^{3/2}))^l`, `Delta_l = A5/R^2`.
pub fn wpexp_cover_spec(r: f64, a4: f64, a5: f64, levels: usize) -> Result<NestedCoverSpec> {
    if !(a4 > 0.0 && a5 > 0.0 && r > 1.0) {
        return Err(Error::InvalidCoverSpec(format!(
            "need A4, A5 > 0 and R > 1, got A4 = {a4}, A5 = {a5}, R = {r}"
        )));
    }
    let log_ratio = a4.ln() - r - 1.5 * r.ln();
    if !(log_ratio < 0.0) {
        return Err(Error::ContractionViolated { ratio: log_ratio.exp() });
    }
    let log_delta = a5.ln() - 2.0 * r.ln();
    if log_delta > 0.0 {
        return Err(Error::ContractionViolated { ratio: log_delta.exp() });
    }
    NestedCoverSpec::from_logs(
        vec![log_delta; levels],
        (1..=levels).map(|l| l as f64 * log_ratio).collect(),
    )
}

/// Limit of the bound for [`wpexp_cover_spec`]:
/// `2 - (log A5 - 2 log R)/(log A4 - R - 1.5 log R)`.
pub fn wpexp_bound_limit(r: f64, a4: f64, a5: f64) -> f64 {
    2.0 - (a5.ln() - 2.0 * r.ln()) / (a4.ln() - r - 1.5 * r.ln())
}

/// `2 rho / (1 + rho)`.
pub fn dimension_formula(rho: f64) -> Result<f64> {
    if !(rho > 0.0) || rho.is_nan() {
        return Err(Error::InvalidOrder(rho));
    }
    if rho.is_infinite() {
        return Ok(2.0);
    }
    Ok(2.0 * rho / (1.0 + rho))
}

/// `d / (2 - d)`, the inverse of [`dimension_formula`].
pub fn order_from_dimension(d: f64) -> Result<f64> {
    if !(0.0..2.0).contains(&d) {
        return Err(Error::InvalidDimension(d));
    }
    Ok(d / (2.0 - d))
}

/// Box-counting fit.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxCount {
    pub slope: f64,
    pub intercept: f64,
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Minimum points for a box-counting fit.
pub const MIN_BOX_POINTS: usize = 1000;

/// Slope of `log(occupied boxes)` against `log(1/scale)` on grids anchored
/// at the lower-left corner of the bounding box.
pub fn box_counting_dimension(points: &[Complex64], scales: &[f64]) -> Result<BoxCount> {
    if points.len() < MIN_BOX_POINTS {
        return Err(Error::TooFewPoints(points.len()));
    }
    if scales.len() < 4 {
        return Err(Error::InsufficientScales(format!("{} scales (need 4)", scales.len())));
    }
    if scales.windows(2).any(|w| !(w[1] < w[0])) || !(scales[scales.len() - 1] > 0.0) {
        return Err(Error::InsufficientScales("scales must be positive and decreasing".into()));
    }
    let span = (scales[0] / scales[scales.len() - 1]).log10();
    if span < 1.5 {
        return Err(Error::InsufficientScales(format!("{span:.3} decades (need 1.5)")));
    }
    let x0 = points.iter().map(|p| p.re).fold(f64::INFINITY, f64::min);
    let y0 = points.iter().map(|p| p.im).fold(f64::INFINITY, f64::min);
    let counts: Vec<usize> = scales
        .iter()
        .map(|&s| {
            let boxes: HashSet<(i64, i64)> = points
                .iter()
                .map(|p| (((p.re - x0) / s).floor() as i64, ((p.im - y0) / s).floor() as i64))
                .collect();
            boxes.len()
        })
        .collect();
    let pts: Vec<(f64, f64)> = scales
        .iter()
        .zip(&counts)
        .map(|(s, c)| ((1.0 / s).ln(), (*c as f64).ln()))
        .collect();
    let (slope, intercept, _) = least_squares(&pts);
    Ok(BoxCount {
        slope,
        intercept,
        scales: scales.to_vec(),
        counts,
    })
}

/// `2^{-k}` for `k = k_min..=k_max`.
pub fn dyadic_scales(k_min: i32, k_max: i32) -> Vec<f64> {
    (k_min..=k_max).map(|k| 2f64.powi(-k)).collect()
}

/// Centres of the `4^level` squares of the planar middle-thirds Cantor
/// dust in the unit square.
pub fn cantor_dust(level: u32) -> Vec<Complex64> {
    let mut pts = vec![Complex64::new(0.5, 0.5)];
    let mut side = 1.0;
    for _ in 0..level {
        side /= 3.0;
        pts = pts
            .iter()
            .flat_map(|p| {
                [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)]
                    .map(|(dx, dy)| p + Complex64::new(dx * side, dy * side))
            })
            .collect();
    }
    pts
}

/// The cover spec of the Cantor dust: `Delta = 4/9`, `d_l = sqrt 2 3^{-l}`.
pub fn cantor_dust_spec(levels: usize) -> Result<NestedCoverSpec> {
    NestedCoverSpec::from_logs(
        vec![(4.0f64 / 9.0).ln(); levels],
        (1..=levels)
            .map(|l| 0.5 * 2f64.ln() - l as f64 * 3f64.ln())
            .collect(),
    )
}

/// Parameters of the escaping-point sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerOptions {
    /// Required escape depth `D`.
    pub depth: usize,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self { depth: 6 }
    }
}

/// A point certified to escape through the required depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapingPoint {
    pub z: Complex64,
    /// Step at which infinity was reached, or the required depth.
    pub depth: usize,
}

/// The escaping point contributed by one grid cell, if any.
fn cell_point(
    m: &ModelFunction,
    region: &PlanarRegion,
    schedule: &Schedule,
    cell: (Complex64, f64, f64),
    itinerary: &[Option<Complex64>],
    depth: usize,
) -> Option<EscapingPoint> {
    let (centre, hx, hy) = cell;
    if let Some(d) = escapes_to_depth(m, centre, schedule, depth) {
        return Some(EscapingPoint { z: centre, depth: d });
    }
    let a0 = m.nearest_pole(centre).ok()??;
    let inside = |z: Complex64| (z.re - centre.re).abs() <= hx && (z.im - centre.im).abs() <= hy && region.contains(z);
    if !inside(a0) {
        return None;
    }
    let mut stops = vec![a0];
    let mut found = None;
    for d in 1..=depth {
        if d > 1 {
            stops.push(itinerary[d - 1]?);
        }
        let designed = designed_orbit(m, &stops, schedule)
            .filter(|&z| inside(z))
            .and_then(|z| escapes_to_depth(m, z, schedule, d).map(|e| EscapingPoint { z, depth: e }));
        match designed {
            Some(p) => found = Some(p),
            None if escapes_to_depth(m, centre, schedule, d).is_some() => {}
            None => return None,
        }
    }
    found.filter(|p| p.depth <= depth && stops.len() == depth)
}

/// Deterministic search for points with `|f^k(z)| > R_k` for all
/// `k <= depth`, at most one per cell of the region's grid.
///
/// Plain grid search is hopeless beyond a few steps, since the pieces
/// escaping one step further shrink by roughly `R_k^{3/2}` per step. A cell
/// whose centre does not escape far enough instead contributes a designed
/// orbit: starting next to the pole nearest its centre, the orbit is
/// routed through a fixed itinerary of poles of growing modulus and is
/// constructed backwards through local inverse branches. A cell is kept at
/// depth `D` only if its construction verifies, by plain forward iteration,
/// at every depth up to `D`, so deeper requests keep a subset of the cells.
pub fn escaping_sampler(
    m: &ModelFunction,
    region: &PlanarRegion,
    schedule: &Schedule,
    opts: SamplerOptions,
) -> Result<Vec<EscapingPoint>> {
    if opts.depth == 0 {
        return Err(Error::InvalidRegion("sampler depth must be positive".into()));
    }
    let (nx, ny) = region.resolution();
    let (dx, dy) = region.cell_size();
    let itinerary: Vec<Option<Complex64>> = (0..opts.depth)
        .map(|k| if k == 0 { None } else { itinerary_pole(m, k, schedule) })
        .collect();
    let rows: Vec<Vec<EscapingPoint>> = (0..ny)
        .into_par_iter()
        .map(|j| {
            (0..nx)
                .map(|i| (region.cell_center(i, j), dx / 2.0, dy / 2.0))
                .filter(|c| region.contains(c.0))
                .filter_map(|c| cell_point(m, region, schedule, c, &itinerary, opts.depth))
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// CSV with header `x,y,depth`.
pub fn points_csv(points: &[EscapingPoint]) -> String {
    let mut out = String::from("x,y,depth\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.z.re, p.z.im, p.depth);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_density_gives_two() {
        let spec = NestedCoverSpec::from_values(&[1.0; 10], &(1..=10).map(|l| 0.5f64.powi(l)).collect::<Vec<_>>())
            .unwrap();
        let b = mcmullen_bound(&spec);
        assert!(b.raw.iter().all(|v| *v == 2.0));
        assert_eq!(b.limit, 2.0);
    }

    #[test]
    fn cantor_limit() {
        let b = mcmullen_bound(&cantor_dust_spec(1024).unwrap());
        let exact = 4f64.ln() / 3f64.ln();
        assert!((b.limit - exact).abs() < 1e-9, "{}", b.limit - exact);
        assert!(b.tail_max < exact);
    }

    #[test]
    fn pole_spec_e_rho_one() {
        let spec = pole_cover_spec(1.0, std::f64::consts::E, 1.0, 1.0, 64).unwrap();
        let b = mcmullen_bound(&spec);
        for (i, v) in b.raw.iter().enumerate() {
            let l = (i + 1) as f64;
            assert!((v - (2.0 - (l + 1.0) / l)).abs() < 1e-12);
        }
        assert!((b.limit - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contraction_errors() {
        assert!(matches!(
            pole_cover_spec(1.0, 10.0, 20.0, 1.0, 10),
            Err(Error::ContractionViolated { .. })
        ));
        assert!(matches!(
            NestedCoverSpec::from_values(&[0.5, 0.5], &[0.5, 1.5]),
            Err(Error::DiametersNotContracting { level: 2, .. })
        ));
        assert!(NestedCoverSpec::from_values(&[0.5, 0.5], &[0.5, 0.6]).is_err());
    }

    #[test]
    fn wpexp_closed_form_thirty() {
        let b = mcmullen_bound(&wpexp_cover_spec(30.0, 1.0, 1.0, 200).unwrap());
        let expected = 2.0 - 2.0 * 30f64.ln() / (30.0 + 1.5 * 30f64.ln());
        assert!((b.limit - expected).abs() < 1e-12);
        assert!((expected - 1.806).abs() < 1e-3);
        assert!(wpexp_bound_limit(10.0, 1.0, 1.0) < wpexp_bound_limit(30.0, 1.0, 1.0));
    }

    #[test]
    fn dimension_round_trip() {
        assert_eq!(dimension_formula(1.0).unwrap(), 1.0);
        assert!((dimension_formula(0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((order_from_dimension(2.0 / 3.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(order_from_dimension(2.0).is_err());
        assert!(dimension_formula(0.0).is_err());
    }

    #[test]
    fn box_counting_segment_and_errors() {
        let pts: Vec<Complex64> = (0..20000).map(|k| Complex64::new(k as f64 / 20000.0, 0.3)).collect();
        let bc = box_counting_dimension(&pts, &dyadic_scales(2, 9)).unwrap();
        assert!((bc.slope - 1.0).abs() < 0.05, "{}", bc.slope);
        assert!(matches!(box_counting_dimension(&pts[..10], &dyadic_scales(2, 9)), Err(Error::TooFewPoints(10))));
        assert!(box_counting_dimension(&pts, &dyadic_scales(2, 5)).is_err());
    }

    #[test]
    fn format_in_log_space() {
        assert_eq!(format_exp(0.0), "1.000000000000000e0");
        assert!(format_exp(-600.0 * std::f64::consts::LN_10).ends_with("e-600"));
    }

    #[test]
    fn sampler_is_monotone_and_verified() {
        use crate::elliptic::{EllipticFunction, Lattice};
        use crate::models::{default_offset, WpExp};
        let f = EllipticFunction::new(Lattice::square());
        let m = ModelFunction::WpExp(WpExp::new(f.clone(), default_offset(&f)).unwrap());
        let region = PlanarRegion::rect(2.0, 4.0, -1.0, 1.0).unwrap().with_resolution(16, 16).unwrap();
        let mut last = usize::MAX;
        for depth in 1..=4 {
            let pts = escaping_sampler(&m, &region, &Schedule::Exponential, SamplerOptions { depth }).unwrap();
            assert!(pts.len() <= last);
            last = pts.len();
            for p in &pts {
                assert!(escapes_to_depth(&m, p.z, &Schedule::Exponential, depth).is_some());
            }
        }
        assert!(last > 0);
        let none = escaping_sampler(&m, &region, &Schedule::Infinite, SamplerOptions { depth: 3 }).unwrap();
        assert!(none.is_empty());
    }
}

