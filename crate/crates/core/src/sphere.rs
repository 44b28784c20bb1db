//! Metric and measure utilities on the Riemann sphere and the plane.
//!
//! The sphere carries the chordal metric of the unit sphere, so the area
//! element is `4 dx dy / (1 + x^2 + y^2)^2` and the total area is `4 pi`.
//! All quadratures are midpoint rules on uniform grids, evaluated row by row
//! in parallel and reduced in row order so results do not depend on the
//! thread count.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Default grid resolution per axis.
pub const DEFAULT_RESOLUTION: usize = 1024;

/// Partial sums above this value are reported as divergent.
pub const DIVERGENCE_CAP: f64 = 1e6;

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedComplex {
    Finite(Complex64),
    Infinity,
}

impl ExtendedComplex {
    /// Wraps a complex number; non-finite coordinates become `Infinity`.
    pub fn new(z: Complex64) -> Self {
        if z.re.is_finite() && z.im.is_finite() {
            ExtendedComplex::Finite(z)
        } else {
            ExtendedComplex::Infinity
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedComplex::Infinity)
    }

    pub fn finite(&self) -> Option<Complex64> {
        match self {
            ExtendedComplex::Finite(z) => Some(*z),
            ExtendedComplex::Infinity => None,
        }
    }

    /// Modulus, with `+inf` for the point at infinity.
    pub fn norm(&self) -> f64 {
        match self {
            ExtendedComplex::Finite(z) => z.norm(),
            ExtendedComplex::Infinity => f64::INFINITY,
        }
    }
}

impl From<Complex64> for ExtendedComplex {
    fn from(z: Complex64) -> Self {
        ExtendedComplex::new(z)
    }
}

impl fmt::Display for ExtendedComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedComplex::Finite(z) => write!(f, "{}{:+}i", z.re, z.im),
            ExtendedComplex::Infinity => write!(f, "inf"),
        }
    }
}

/// Chordal distance on the unit Riemann sphere. Bounded by 2.
pub fn chordal_distance(z: ExtendedComplex, w: ExtendedComplex) -> f64 {
    use ExtendedComplex::*;
    match (z, w) {
        (Infinity, Infinity) => 0.0,
        (Finite(a), Infinity) | (Infinity, Finite(a)) => 2.0 / (1.0 + a.norm_sqr()).sqrt(),
        (Finite(a), Finite(b)) => {
            2.0 * (a - b).norm() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt()
        }
    }
}

/// Spherical area density at `z` (with respect to `dx dy`).
#[inline]
pub fn spherical_area_element(z: Complex64) -> f64 {
    let d = 1.0 + z.norm_sqr();
    4.0 / (d * d)
}

pub type Membership = Arc<dyn Fn(Complex64) -> bool + Send + Sync>;

/// An axis-aligned rectangle, optionally cut down by a membership
/// predicate, sampled on a `nx` by `ny` grid of cell centres.
#[derive(Clone)]
pub struct PlanarRegion {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    nx: usize,
    ny: usize,
    predicate: Option<Membership>,
}

impl fmt::Debug for PlanarRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlanarRegion")
            .field("x", &(self.x_min, self.x_max))
            .field("y", &(self.y_min, self.y_max))
            .field("resolution", &(self.nx, self.ny))
            .field("predicate", &self.predicate.is_some())
            .finish()
    }
}

impl PlanarRegion {
    pub fn rect(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if !(x_min < x_max) || !(y_min < y_max) {
            return Err(Error::InvalidRegion(format!(
                "need x_min < x_max and y_min < y_max, got [{x_min},{x_max}]x[{y_min},{y_max}]"
            )));
        }
        if ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidRegion("non-finite bounds".into()));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
            nx: DEFAULT_RESOLUTION,
            ny: DEFAULT_RESOLUTION,
            predicate: None,
        })
    }

    /// The closed disk `|z - center| <= r`, sampled on its bounding square.
    pub fn disk(center: Complex64, r: f64) -> Result<Self> {
        Ok(Self::rect(center.re - r, center.re + r, center.im - r, center.im + r)?
            .with_predicate(move |z| (z - center).norm() <= r))
    }

    /// The open annulus `r_in < |z| < r_out`.
    pub fn annulus(r_in: f64, r_out: f64) -> Result<Self> {
        Ok(Self::rect(-r_out, r_out, -r_out, r_out)?.with_predicate(move |z| {
            let m = z.norm();
            m > r_in && m < r_out
        }))
    }

    pub fn with_resolution(mut self, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidRegion(format!(
                "resolution must be at least 2 per axis, got {nx}x{ny}"
            )));
        }
        self.nx = nx;
        self.ny = ny;
        Ok(self)
    }

    pub fn with_predicate(mut self, f: impl Fn(Complex64) -> bool + Send + Sync + 'static) -> Self {
        self.predicate = Some(Arc::new(f));
        self
    }

    /// Intersects the predicate with another membership test.
    pub fn intersect_with(self, f: impl Fn(Complex64) -> bool + Send + Sync + 'static) -> Self {
        match self.predicate.clone() {
            None => self.with_predicate(f),
            Some(p) => self.with_predicate(move |z| p(z) && f(z)),
        }
    }

    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        (self.x_min, self.x_max, self.y_min, self.y_max)
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (
            (self.x_max - self.x_min) / self.nx as f64,
            (self.y_max - self.y_min) / self.ny as f64,
        )
    }

    /// Cell centre for column `i` and row `j`; row 0 is the bottom row.
    pub fn cell_center(&self, i: usize, j: usize) -> Complex64 {
        let (dx, dy) = self.cell_size();
        Complex64::new(
            self.x_min + (i as f64 + 0.5) * dx,
            self.y_min + (j as f64 + 0.5) * dy,
        )
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let in_rect =
            z.re >= self.x_min && z.re <= self.x_max && z.im >= self.y_min && z.im <= self.y_max;
        in_rect && self.predicate.as_ref().map_or(true, |p| p(z))
    }

    fn rect_contains_origin(&self) -> bool {
        self.x_min <= 0.0 && self.x_max >= 0.0 && self.y_min <= 0.0 && self.y_max >= 0.0
    }

    /// Midpoint-rule integral of `weight` over the sampled region.
    fn integrate(&self, weight: impl Fn(Complex64) -> f64 + Sync) -> f64 {
        let (dx, dy) = self.cell_size();
        let rows: Vec<f64> = (0..self.ny)
            .into_par_iter()
            .map(|j| {
                let mut acc = 0.0;
                for i in 0..self.nx {
                    let z = self.cell_center(i, j);
                    if self.contains(z) {
                        acc += weight(z);
                    }
                }
                acc
            })
            .collect();
        rows.iter().sum::<f64>() * dx * dy
    }
}

/// Grid estimate of the spherical area of a region.
pub fn spherical_area(region: &PlanarRegion) -> f64 {
    region.integrate(spherical_area_element)
}

/// Spherical density `area_chi(A cap B) / area_chi(B)`, sampled on B's grid.
pub fn spherical_density(a: &PlanarRegion, b: &PlanarRegion) -> Result<f64> {
    density_with(a, b, spherical_area_element)
}

/// Euclidean density `area(A cap B) / area(B)`, sampled on B's grid.
pub fn euclidean_density(a: &PlanarRegion, b: &PlanarRegion) -> Result<f64> {
    density_with(a, b, |_| 1.0)
}

fn density_with(
    a: &PlanarRegion,
    b: &PlanarRegion,
    element: impl Fn(Complex64) -> f64 + Sync,
) -> Result<f64> {
    let denom = b.integrate(&element);
    if !(denom > 0.0) {
        return Err(Error::EmptyDenominatorRegion);
    }
    let num = b.integrate(|z| if a.contains(z) { element(z) } else { 0.0 });
    Ok((num / denom).clamp(0.0, 1.0))
}

/// Whether the unit disk is removed before integrating `1/|z|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Excision {
    None,
    UnitDisk,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogArea {
    pub estimate: f64,
    pub divergent: bool,
}

/// Logarithmic area `iint_A dx dy / (x^2 + y^2)`.
pub fn logarea(a: &PlanarRegion, excision: Excision) -> Result<LogArea> {
    if excision == Excision::None && a.rect_contains_origin() && a.contains(Complex64::new(0.0, 0.0))
    {
        return Err(Error::SingularAtOrigin);
    }
    let estimate = a.integrate(|z| {
        let r2 = z.norm_sqr();
        if excision == Excision::UnitDisk && r2 <= 1.0 {
            0.0
        } else if r2 == 0.0 {
            f64::INFINITY
        } else {
            1.0 / r2
        }
    });
    Ok(LogArea {
        estimate,
        divergent: !(estimate <= DIVERGENCE_CAP),
    })
}

/// Log-polar sampling of the exterior of the unit disk, octave by octave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPolarGrid {
    /// Number of octaves `2^k < |z| < 2^(k+1)` sampled, starting at `|z| = 1`.
    pub octaves: usize,
    pub radial_per_octave: usize,
    pub angular: usize,
}

impl Default for LogPolarGrid {
    fn default() -> Self {
        Self {
            octaves: 20,
            radial_per_octave: 64,
            angular: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwbEstimate {
    pub estimate: f64,
    pub finite: bool,
    /// Contribution of each octave, innermost first.
    pub octave_contributions: Vec<f64>,
}

/// Relative size of the outermost octave below which the tail counts as
/// decayed.
pub const TWB_TAIL_TOLERANCE: f64 = 1e-3;

/// Quadrature of `(K - 1) / (x^2 + y^2)` over `|z| > 1`.
///
/// In log-polar coordinates the integrand becomes `(K - 1) d(log r) d(theta)`,
/// so each octave is a rectangle of the `(log r, theta)` plane. The integral
/// is flagged finite when the outermost octave contributes less than
/// [`TWB_TAIL_TOLERANCE`] of the total and the total stays under the cap.
pub fn twb_finiteness(
    dilatation: impl Fn(Complex64) -> f64 + Sync,
    grid: LogPolarGrid,
) -> Result<TwbEstimate> {
    let ln2 = std::f64::consts::LN_2;
    let dt = ln2 / grid.radial_per_octave as f64;
    let dtheta = std::f64::consts::TAU / grid.angular as f64;
    let rows: Vec<std::result::Result<f64, Error>> = (0..grid.octaves * grid.radial_per_octave)
        .into_par_iter()
        .map(|j| {
            let r = ((j as f64 + 0.5) * dt).exp();
            let mut acc = 0.0;
            for i in 0..grid.angular {
                let z = Complex64::from_polar(r, (i as f64 + 0.5) * dtheta);
                let k = dilatation(z);
                if !(k >= 1.0) {
                    return Err(Error::InvalidDilatation {
                        value: k,
                        re: z.re,
                        im: z.im,
                    });
                }
                acc += k - 1.0;
            }
            Ok(acc * dt * dtheta)
        })
        .collect();
    let mut octave_contributions = vec![0.0; grid.octaves];
    for (j, row) in rows.into_iter().enumerate() {
        octave_contributions[j / grid.radial_per_octave] += row?;
    }
    let estimate: f64 = octave_contributions.iter().sum();
    let last = octave_contributions.last().copied().unwrap_or(0.0);
    let finite = estimate <= DIVERGENCE_CAP
        && (estimate == 0.0 || last <= TWB_TAIL_TOLERANCE * estimate);
    Ok(TwbEstimate {
        estimate,
        finite,
        octave_contributions,
    })
}
