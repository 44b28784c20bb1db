//! Koebe distortion bounds and the covering construction around poles.
//!
//! Near a pole `a` with coefficient `b`, the component `U` of
//! `f^{-1}({|w| > R})` containing `a` is trapped between the disks of radii
//! `|b|/(4 sqrt R)` and `2|b|/sqrt R`; inverse branches `g` of `f` on
//! `{|w| > R}` contract like `|b|/|w|^{3/2}`. Chains of such branches give
//! the nested sets whose diameters feed the McMullen bound.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::models::{ModelFunction, PoleDatum};

/// Inverse-branch derivative constant of the pure local model
/// `f = (b/(z-a))^2`.
pub const DEFAULT_C1: f64 = 0.5;

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidLambda(lambda));
    }
    Ok(())
}

/// Growth-theorem coefficients `(lambda/(1+lambda)^2, lambda/(1-lambda)^2)`.
pub fn koebe_value_coefficients(lambda: f64) -> Result<(f64, f64)> {
    check_lambda(lambda)?;
    Ok((lambda / (1.0 + lambda).powi(2), lambda / (1.0 - lambda).powi(2)))
}

/// For `f` univalent on `D(z0, r)` and `|z - z0| = lambda r`, bounds on
/// `|f(z) - f(z0)|` given `|f'(z0)| = deriv`.
pub fn koebe_value_bounds(deriv: f64, r: f64, lambda: f64) -> Result<(f64, f64)> {
    let (lo, hi) = koebe_value_coefficients(lambda)?;
    Ok((lo * deriv * r, hi * deriv * r))
}

/// Bounds on `|f'(z)|` for `|z - z0| = lambda r`:
/// `(1-lambda)/(1+lambda)^3` and `(1+lambda)/(1-lambda)^3` times `deriv`.
pub fn koebe_derivative_bounds(deriv: f64, lambda: f64) -> Result<(f64, f64)> {
    check_lambda(lambda)?;
    Ok((
        deriv * (1.0 - lambda) / (1.0 + lambda).powi(3),
        deriv * (1.0 + lambda) / (1.0 - lambda).powi(3),
    ))
}

/// A closed disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

impl Disk {
    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() <= self.radius
    }
}

/// The disk `D(f(z0), |f'(z0)| r / 4)` covered by `f(D(z0, r))`.
pub fn koebe_quarter(image_center: Complex64, deriv: f64, r: f64) -> Disk {
    Disk {
        center: image_center,
        radius: deriv * r / 4.0,
    }
}

/// The Koebe function `z/(1-z)^2`, extremal for the distortion bounds.
pub fn koebe_extremal(z: Complex64) -> Complex64 {
    let d = Complex64::new(1.0, 0.0) - z;
    z / (d * d)
}

/// Derivative of [`koebe_extremal`]: `(1+z)/(1-z)^3`.
pub fn koebe_extremal_derivative(z: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let d = one - z;
    (one + z) / (d * d * d)
}

/// Disks trapping the component around a pole at escape radius `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverComponent {
    pub pole: Complex64,
    pub coefficient: f64,
    pub escape_radius: f64,
    pub inner_radius: f64,
    pub outer_radius: f64,
}

/// Radii `|b|/(4 sqrt R)` and `2|b|/sqrt R` around a pole.
pub fn component_bounds(p: &PoleDatum, escape_radius: f64) -> Result<CoverComponent> {
    if !(escape_radius > 0.0) || !escape_radius.is_finite() {
        return Err(Error::InvalidRadii(format!(
            "escape radius {escape_radius} must be positive"
        )));
    }
    let s = escape_radius.sqrt();
    Ok(CoverComponent {
        pole: p.location,
        coefficient: p.coefficient,
        escape_radius,
        inner_radius: p.coefficient / (4.0 * s),
        outer_radius: 2.0 * p.coefficient / s,
    })
}

/// `|g'(z)| <= C1 |b| / |z|^{3/2}` for an inverse branch on `|z| >= R`.
pub fn branch_derivative_bound(b: f64, z_modulus: f64, c1: f64) -> f64 {
    c1 * b / z_modulus.powf(1.5)
}

/// Inverse branch `a + b/sqrt(w)` of the local model `(b/(z-a))^2`.
pub fn local_inverse(a: Complex64, b: Complex64, w: Complex64) -> Complex64 {
    a + b / w.sqrt()
}

/// Derivative `-b/(2 w^{3/2})` of [`local_inverse`].
pub fn local_inverse_derivative(b: Complex64, w: Complex64) -> Complex64 {
    -b / (2.0 * w * w.sqrt())
}

/// A sequence of poles `a_{j_1}, ..., a_{j_l}` with coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchChain {
    pub poles: Vec<(Complex64, f64)>,
    pub c1: f64,
}

impl BranchChain {
    pub fn new(poles: Vec<(Complex64, f64)>, c1: f64) -> Result<Self> {
        if poles.is_empty() {
            return Err(Error::EmptyChain);
        }
        if !(c1 > 0.0) || !c1.is_finite() {
            return Err(Error::InvalidCoverSpec(format!("C1 = {c1} must be positive")));
        }
        Ok(Self { poles, c1 })
    }

    pub fn from_poles(poles: &[PoleDatum], c1: f64) -> Result<Self> {
        Self::new(poles.iter().map(|p| (p.location, p.coefficient)).collect(), c1)
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    /// Concatenation, keeping this chain's constant.
    pub fn concat(&self, other: &BranchChain) -> BranchChain {
        let mut poles = self.poles.clone();
        poles.extend_from_slice(&other.poles);
        BranchChain { poles, c1: self.c1 }
    }
}

/// Diameter bounds of the nested set selected by a chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainDiameter {
    pub euclidean: f64,
    pub spherical: f64,
}

/// `C1^{l-1} (4/sqrt R) |b_1| prod_{k>=2} |b_k|/|a_k|^{3/2}` and
/// `C1^{l-1} (32/sqrt R) prod_{k>=1} |b_k|/|a_k|^{3/2}`.
pub fn chain_diameter(chain: &BranchChain, escape_radius: f64) -> Result<ChainDiameter> {
    if chain.is_empty() {
        return Err(Error::EmptyChain);
    }
    for &(a, _) in &chain.poles {
        if a.norm() < escape_radius {
            return Err(Error::ChainLeavesEscapeRegion {
                modulus: a.norm(),
                radius: escape_radius,
            });
        }
    }
    let l = chain.len() as i32;
    let s = escape_radius.sqrt();
    let head = chain.c1.powi(l - 1) / s;
    let ratio = |&(a, b): &(Complex64, f64)| b / a.norm().powf(1.5);
    let tail: f64 = chain.poles[1..].iter().map(ratio).product();
    let euclidean = head * 4.0 * chain.poles[0].1 * tail;
    let spherical = head * 32.0 * ratio(&chain.poles[0]) * tail;
    Ok(ChainDiameter {
        euclidean,
        spherical,
    })
}

/// Factors `(euclidean, spherical)` with
/// `bound(c1 ++ c2) = bound(c1) bound(c2) factor`.
pub fn concat_normalization(second: &BranchChain, escape_radius: f64, c1: f64) -> (f64, f64) {
    let s = escape_radius.sqrt();
    let a = second.poles[0].0.norm();
    (c1 * s / (4.0 * a.powf(1.5)), c1 * s / 32.0)
}

/// Finite singular values: the critical values of the Weierstrass function
/// and, where the inner map has a critical or asymptotic value `c`, `wp(c)`.
pub fn singular_values(m: &ModelFunction) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = m.elliptic().critical_values().values.to_vec();
    let mut extra = |f: &crate::elliptic::EllipticFunction, c: Complex64| {
        if let Some(v) = f.wp(c).finite() {
            out.push(v);
        }
    };
    match m {
        ModelFunction::WpExp(e) => extra(e.elliptic(), e.offset()),
        ModelFunction::WpPower(p) if p.rho() < 2.0 => extra(p.elliptic(), p.offset()),
        ModelFunction::PowerLift(l) => {
            let mut inner = singular_values(l.inner());
            if l.exponent() > 1 {
                if let Ok(v) = l.inner().eval(Complex64::new(0.0, 0.0)) {
                    if let Some(v) = v.finite() {
                        inner.push(v);
                    }
                }
            }
            return inner;
        }
        ModelFunction::GluedOrderTwo(g) => {
            out.extend(g.lower().critical_values().values);
        }
        _ => {}
    }
    out
}

/// Smallest admissible escape radius: four times the largest finite
/// singular value modulus.
pub fn min_escape_radius(m: &ModelFunction) -> f64 {
    4.0 * singular_values(m).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Result of the grid check that `{|f| > R}` near a pole sits between the
/// two component disks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Containment {
    pub component: CoverComponent,
    /// Smallest `|f|` sampled in the inner disk (infinite at the pole).
    pub min_inside: f64,
    /// Largest `|f|` sampled on the ring between the outer radius and 1.5
    /// times it; the ring separates the component from other sets.
    pub max_on_ring: f64,
}

impl Containment {
    pub fn holds(&self) -> bool {
        self.min_inside > self.component.escape_radius && self.max_on_ring <= self.component.escape_radius
    }
}

/// Samples `|f|` on polar grids of the inner disk and the outer ring.
pub fn check_containment(
    m: &ModelFunction,
    p: &PoleDatum,
    escape_radius: f64,
    samples: usize,
) -> Result<Containment> {
    let comp = component_bounds(p, escape_radius)?;
    let modulus = |z: Complex64| -> Result<f64> {
        Ok(m.eval(z)?.finite().map_or(f64::INFINITY, |v| v.norm()))
    };
    let n = samples.max(4);
    let mut min_inside = f64::INFINITY;
    let mut max_on_ring: f64 = 0.0;
    for i in 1..=n {
        let t = i as f64 / n as f64;
        for j in 0..n {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            let dir = Complex64::from_polar(1.0, theta);
            min_inside = min_inside.min(modulus(comp.pole + dir * comp.inner_radius * t)?);
            let ring = comp.outer_radius * (1.0 + 0.5 * (i - 1) as f64 / (n - 1) as f64);
            max_on_ring = max_on_ring.max(modulus(comp.pole + dir * ring)?);
        }
    }
    Ok(Containment {
        component: comp,
        min_inside,
        max_on_ring,
    })
}
