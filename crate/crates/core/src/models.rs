//! Concrete model functions built from the Weierstrass function, their pole
//! inventories, and the quasiconformal interpolation maps used to glue two
//! different lattices along the real line.
//!
//! Every model is `wp(psi(z))` for an explicit inner map `psi`. Poles are
//! exactly the preimages of lattice points under `psi`, so inventories are
//! built by pulling lattice points back rather than by searching; the local
//! coefficient `b` in `f(z) ~ (b/(z-a))^2` is `1/|psi'(a)|`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::elliptic::EllipticFunction;
use crate::error::{Error, Result};
use crate::sphere::ExtendedComplex;

/// Inner arguments larger than this many cell diameters cannot be reduced
/// modulo the lattice in double precision.
pub const PRECISION_LIMIT: f64 = 1_099_511_627_776.0; // 2^40

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Which side of the negative real axis the power map takes there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Argument in `(-pi, pi]`.
    Plus,
    /// Argument in `[-pi, pi)`.
    Minus,
}

impl Branch {
    fn arg(self, z: Complex64) -> f64 {
        let t = z.arg();
        match self {
            Branch::Plus if t == -PI => PI,
            Branch::Minus if t == PI => -PI,
            _ => t,
        }
    }
}

/// A pole of a model function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleDatum {
    pub location: Complex64,
    /// 2 for every double pole; 1 for the simple pole of the arccosh model.
    pub multiplicity: u32,
    /// `|b|` with `f(z)(z-a)^2 -> b^2`; for a simple pole, `|residue|`.
    pub coefficient: f64,
    /// Point of the underlying lattice this pole was pulled back from.
    pub lattice_point: Complex64,
    /// Set when the inner map is not conformal at the pole, so the location
    /// and coefficient are only leading-order.
    pub approximate: bool,
}

/// One preimage of a lattice translate `s + Lambda` under the inner map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Preimage {
    pub location: Complex64,
    pub multiplicity: u32,
    pub coefficient: f64,
    pub inner: Complex64,
    pub approximate: bool,
}

fn check_offset(f: &EllipticFunction, c: Complex64) -> Result<()> {
    let lat = f.lattice();
    let tol = 1e-9 * lat.cell_diameter();
    if !c.re.is_finite() || !c.im.is_finite() {
        return Err(Error::InvalidModel(format!("offset c = {c} is not finite")));
    }
    if lat.contains_point(c, tol) {
        return Err(Error::InvalidModel(format!("offset c = {c} is a lattice point")));
    }
    if lat.contains_point(2.0 * c, tol) {
        return Err(Error::InvalidModel(format!("offset c = {c} is a half period")));
    }
    Ok(())
}

fn guard(f: &EllipticFunction, w: Complex64) -> Result<Complex64> {
    if !(w.norm() <= PRECISION_LIMIT * f.lattice().cell_diameter()) {
        return Err(Error::PrecisionLoss { re: w.re, im: w.im });
    }
    Ok(w)
}

/// The default offset `(omega1 + omega2)/4`, never a lattice point or half
/// period.
pub fn default_offset(f: &EllipticFunction) -> Complex64 {
    (f.lattice().omega1() + f.lattice().omega2()) / 4.0
}

/// `z -> wp(e^z + c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WpExp {
    f: EllipticFunction,
    c: Complex64,
}

impl WpExp {
    pub fn new(f: EllipticFunction, c: Complex64) -> Result<Self> {
        check_offset(&f, c)?;
        Ok(Self { f, c })
    }

    pub fn elliptic(&self) -> &EllipticFunction {
        &self.f
    }

    pub fn offset(&self) -> Complex64 {
        self.c
    }
}

/// `z -> wp(phi(z))` with `phi` the arccosh branch onto the half strip
/// `{Re w > 0, |Im w| < pi}` and the lattice spanned by 1 and `2 pi i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WpCosh {
    f: EllipticFunction,
}

impl WpCosh {
    pub fn new(f: EllipticFunction) -> Result<Self> {
        let lat = f.lattice();
        let tol = 1e-9;
        let ok = lat.contains_point(c64(1.0, 0.0), tol)
            && lat.contains_point(c64(0.0, 2.0 * PI), tol)
            && (lat.cell_area() - 2.0 * PI).abs() < 1e-9;
        if !ok {
            return Err(Error::InvalidModel(
                "arccosh model needs the lattice spanned by 1 and 2*pi*i".into(),
            ));
        }
        Ok(Self { f })
    }

    /// The model on its canonical lattice with the given evaluator settings.
    pub fn standard(truncation: usize, pole_epsilon: f64) -> Result<Self> {
        let lat = crate::elliptic::Lattice::new(c64(1.0, 0.0), c64(0.0, 2.0 * PI))?;
        Self::new(EllipticFunction::with_parameters(lat, truncation, pole_epsilon)?)
    }

    pub fn elliptic(&self) -> &EllipticFunction {
        &self.f
    }
}

/// `log(z + sqrt(z-1) sqrt(z+1))` with principal roots.
pub fn arccosh_branch(z: Complex64) -> Complex64 {
    let one = c64(1.0, 0.0);
    (z + (z - one).sqrt() * (z + one).sqrt()).ln()
}

/// `z -> wp(z^(rho/2) + c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WpPower {
    f: EllipticFunction,
    rho: f64,
    c: Complex64,
    branch: Branch,
}

impl WpPower {
    pub fn new(f: EllipticFunction, rho: f64, c: Complex64, branch: Branch) -> Result<Self> {
        if !(rho > 0.0 && rho <= 2.0) {
            return Err(Error::InvalidModel(format!("rho = {rho} outside (0, 2]")));
        }
        check_offset(&f, c)?;
        Ok(Self { f, rho, c, branch })
    }

    pub fn elliptic(&self) -> &EllipticFunction {
        &self.f
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn offset(&self) -> Complex64 {
        self.c
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    fn power(&self, z: Complex64) -> Complex64 {
        if z.norm_sqr() == 0.0 {
            return c64(0.0, 0.0);
        }
        let e = self.rho / 2.0;
        Complex64::from_polar(z.norm().powf(e), e * self.branch.arg(z))
    }

    fn in_sector(&self, w: Complex64) -> bool {
        let t = w.arg();
        let half = self.rho * PI / 2.0;
        match self.branch {
            Branch::Plus => (t > -half && t <= half) || (self.rho == 2.0 && t == -PI),
            Branch::Minus => (t >= -half && t < half) || (self.rho == 2.0 && t == PI),
        }
    }
}

/// `z -> inner(z^n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLift {
    inner: Box<ModelFunction>,
    n: u32,
}

impl PowerLift {
    pub fn new(inner: ModelFunction, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("lift exponent must be at least 1".into()));
        }
        Ok(Self {
            inner: Box::new(inner),
            n,
        })
    }

    /// The lift with `n = floor(rho)`, for a target order `rho >= 1`.
    pub fn for_order(inner: ModelFunction, rho: f64) -> Result<Self> {
        if !(rho >= 1.0) || !rho.is_finite() {
            return Err(Error::InvalidModel(format!("target order {rho} below 1")));
        }
        Self::new(inner, rho.floor() as u32)
    }

    pub fn inner(&self) -> &ModelFunction {
        &self.inner
    }

    pub fn exponent(&self) -> u32 {
        self.n
    }
}

/// A strictly increasing boundary map of the real line commuting with unit
/// translation.
#[derive(Clone)]
pub enum BoundaryMap {
    Identity,
    /// `x + shift`.
    Shift(f64),
    /// `x + amplitude * sin(2 pi harmonic x)`; needs
    /// `2 pi harmonic |amplitude| < 1`.
    Sine { amplitude: f64, harmonic: u32 },
    /// A user map with its derivative.
    Custom {
        map: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        derivative: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl std::fmt::Debug for BoundaryMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryMap::Identity => write!(f, "Identity"),
            BoundaryMap::Shift(s) => write!(f, "Shift({s})"),
            BoundaryMap::Sine { amplitude, harmonic } => {
                write!(f, "Sine {{ amplitude: {amplitude}, harmonic: {harmonic} }}")
            }
            BoundaryMap::Custom { .. } => write!(f, "Custom"),
        }
    }
}

impl PartialEq for BoundaryMap {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (BoundaryMap::Identity, BoundaryMap::Identity) => true,
            (BoundaryMap::Shift(a), BoundaryMap::Shift(b)) => a == b,
            (
                BoundaryMap::Sine { amplitude: a, harmonic: h },
                BoundaryMap::Sine { amplitude: b, harmonic: k },
            ) => a == b && h == k,
            (BoundaryMap::Custom { map: a, .. }, BoundaryMap::Custom { map: b, .. }) => {
                Arc::ptr_eq(a, b)
            }
            _ => false,
        }
    }
}

impl BoundaryMap {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            BoundaryMap::Identity => x,
            BoundaryMap::Shift(s) => x + s,
            BoundaryMap::Sine { amplitude, harmonic } => {
                x + amplitude * (2.0 * PI * *harmonic as f64 * x).sin()
            }
            BoundaryMap::Custom { map, .. } => map(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            BoundaryMap::Identity | BoundaryMap::Shift(_) => 1.0,
            BoundaryMap::Sine { amplitude, harmonic } => {
                let w = 2.0 * PI * *harmonic as f64;
                1.0 + amplitude * w * (w * x).cos()
            }
            BoundaryMap::Custom { derivative, .. } => derivative(x),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            BoundaryMap::Identity => Ok(()),
            BoundaryMap::Shift(s) if s.is_finite() => Ok(()),
            BoundaryMap::Shift(s) => Err(Error::InvalidModel(format!("shift {s} not finite"))),
            BoundaryMap::Sine { amplitude, harmonic } => {
                if *harmonic == 0 || !(2.0 * PI * *harmonic as f64 * amplitude.abs() < 1.0) {
                    Err(Error::InvalidModel(format!(
                        "sine boundary map amplitude {amplitude}, harmonic {harmonic} is not increasing"
                    )))
                } else {
                    Ok(())
                }
            }
            BoundaryMap::Custom { .. } => {
                for i in 0..=256 {
                    let x = i as f64 / 256.0;
                    let d = self.derivative(x);
                    if !(d > 0.0) {
                        return Err(Error::InvalidModel(format!(
                            "custom boundary map derivative {d} <= 0 at {x}"
                        )));
                    }
                    if (self.eval(x + 1.0) - self.eval(x) - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidModel(
                            "custom boundary map does not commute with unit translation".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// Inverse by bisection; the map moves points by a bounded amount.
    fn inverse(&self, u: f64) -> f64 {
        match self {
            BoundaryMap::Identity => u,
            BoundaryMap::Shift(s) => u - s,
            _ => bisect_increasing(|x| self.eval(x), u, self.displacement() + 1.0),
        }
    }

    /// `sup |map(x) - x|` over one period.
    fn displacement(&self) -> f64 {
        match self {
            BoundaryMap::Identity => 0.0,
            BoundaryMap::Shift(s) => s.abs(),
            BoundaryMap::Sine { amplitude, .. } => amplitude.abs(),
            BoundaryMap::Custom { .. } => (0..=512)
                .map(|i| {
                    let x = i as f64 / 512.0;
                    (self.eval(x) - x).abs()
                })
                .fold(0.0, f64::max),
        }
    }
}

/// Solves `g(x) = u` for increasing `g` with `|g(x) - x| < span`.
fn bisect_increasing(g: impl Fn(f64) -> f64, u: f64, span: f64) -> f64 {
    let mut lo = u - span;
    let mut hi = u + span;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if g(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Boundary data of the interpolation strip: below height `b` the map is
/// `chi1(x) + iy`, above `a'` it is `chi2(x) + i(y - a' + a)`, and in between
/// the two are blended linearly in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationStack {
    a: f64,
    a_prime: f64,
    b: f64,
    chi1: BoundaryMap,
    chi2: BoundaryMap,
}

/// Partial derivatives of a planar map `u + iv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partials {
    pub ux: f64,
    pub uy: f64,
    pub vx: f64,
    pub vy: f64,
}

impl Partials {
    pub fn jacobian(&self) -> f64 {
        self.ux * self.vy - self.uy * self.vx
    }

    /// `d/dz`.
    pub fn dz(&self) -> Complex64 {
        0.5 * c64(self.ux + self.vy, self.vx - self.uy)
    }

    /// `d/dz-bar`.
    pub fn dzbar(&self) -> Complex64 {
        0.5 * c64(self.ux - self.vy, self.vx + self.uy)
    }
}

impl InterpolationStack {
    pub fn new(a: f64, a_prime: f64, b: f64, chi1: BoundaryMap, chi2: BoundaryMap) -> Result<Self> {
        if !(a.is_finite() && a_prime.is_finite() && b.is_finite()) || !(b < a.min(a_prime)) {
            return Err(Error::InvalidModel(format!(
                "strip heights need b < min(a, a'), got a = {a}, a' = {a_prime}, b = {b}"
            )));
        }
        chi1.validate()?;
        chi2.validate()?;
        Ok(Self {
            a,
            a_prime,
            b,
            chi1,
            chi2,
        })
    }

    /// The identity stack with strip heights `0 < 1`.
    pub fn identity() -> Self {
        Self::new(1.0, 1.0, 0.0, BoundaryMap::Identity, BoundaryMap::Identity)
            .expect("identity stack")
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn a_prime(&self) -> f64 {
        self.a_prime
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn chi1(&self) -> &BoundaryMap {
        &self.chi1
    }

    pub fn chi2(&self) -> &BoundaryMap {
        &self.chi2
    }

    /// Height of the interpolation strip in the normalised coordinates.
    pub fn height(&self) -> f64 {
        self.a_prime - self.b
    }

    fn check_strip(&self, z: Complex64) -> Result<()> {
        let h = self.height();
        if !(z.im >= 0.0 && z.im <= h) || !z.re.is_finite() {
            return Err(Error::OutsideInterpolationStrip { im: z.im, height: h });
        }
        Ok(())
    }

    /// `L(x+iy) = (1 - y/h) chi1(x) + (y/h) chi2(x) + i (a-b)/h y` on
    /// `0 <= y <= h`, `h = a' - b`.
    pub fn interpolation_map(&self, z: Complex64) -> Result<Complex64> {
        self.check_strip(z)?;
        Ok(self.l_unchecked(z))
    }

    fn l_unchecked(&self, z: Complex64) -> Complex64 {
        let h = self.height();
        let t = z.im / h;
        let u = (1.0 - t) * self.chi1.eval(z.re) + t * self.chi2.eval(z.re);
        c64(u, (self.a - self.b) / h * z.im)
    }

    /// Partial derivatives of `L`.
    pub fn partials(&self, z: Complex64) -> Result<Partials> {
        self.check_strip(z)?;
        Ok(self.l_partials(z))
    }

    fn l_partials(&self, z: Complex64) -> Partials {
        let h = self.height();
        let t = z.im / h;
        Partials {
            ux: (1.0 - t) * self.chi1.derivative(z.re) + t * self.chi2.derivative(z.re),
            uy: (self.chi2.eval(z.re) - self.chi1.eval(z.re)) / h,
            vx: 0.0,
            vy: (self.a - self.b) / h,
        }
    }

    /// Jacobian of `L`.
    pub fn jacobian(&self, z: Complex64) -> Result<f64> {
        Ok(self.partials(z)?.jacobian())
    }

    /// Dilatation `(|L_z| + |L_zbar|)/(|L_z| - |L_zbar|)`.
    pub fn dilatation(&self, z: Complex64) -> Result<f64> {
        let p = self.partials(z)?;
        let jac = p.jacobian();
        if !(jac > 0.0) {
            return Err(Error::OrientationViolation(jac));
        }
        let (dz, dzb) = (p.dz().norm(), p.dzbar().norm());
        Ok((dz + dzb) / (dz - dzb))
    }

    /// Supremum of the dilatation over an `nx` by `ny` grid of one period
    /// of the strip.
    pub fn max_dilatation(&self, nx: usize, ny: usize) -> Result<f64> {
        let mut k: f64 = 1.0;
        for i in 0..nx {
            for j in 0..=ny {
                let x = i as f64 / nx as f64;
                let y = self.height() * j as f64 / ny.max(1) as f64;
                k = k.max(self.dilatation(c64(x, y))?);
            }
        }
        Ok(k)
    }

    /// The global piecewise map of the plane.
    pub fn map(&self, z: Complex64) -> Complex64 {
        let (x, y) = (z.re, z.im);
        if y <= self.b {
            c64(self.chi1.eval(x), y)
        } else if y >= self.a_prime {
            c64(self.chi2.eval(x), y - self.a_prime + self.a)
        } else {
            self.l_unchecked(c64(x, y - self.b)) + c64(0.0, self.b)
        }
    }

    /// Partial derivatives of [`Self::map`].
    pub fn map_partials(&self, z: Complex64) -> Partials {
        let (x, y) = (z.re, z.im);
        if y <= self.b {
            Partials { ux: self.chi1.derivative(x), uy: 0.0, vx: 0.0, vy: 1.0 }
        } else if y >= self.a_prime {
            Partials { ux: self.chi2.derivative(x), uy: 0.0, vx: 0.0, vy: 1.0 }
        } else {
            self.l_partials(c64(x, y - self.b))
        }
    }

    /// Inverse of [`Self::map`].
    pub fn inverse(&self, w: Complex64) -> Complex64 {
        let (u, v) = (w.re, w.im);
        if v <= self.b {
            c64(self.chi1.inverse(u), v)
        } else if v >= self.a {
            c64(self.chi2.inverse(u), v - self.a + self.a_prime)
        } else {
            let y = (v - self.b) * self.height() / (self.a - self.b);
            let t = y / self.height();
            let span = self.chi1.displacement().max(self.chi2.displacement()) + 1.0;
            let x = bisect_increasing(
                |x| (1.0 - t) * self.chi1.eval(x) + t * self.chi2.eval(x),
                u,
                span,
            );
            c64(x, y + self.b)
        }
    }

    /// A bound on `|map(z) - z|`.
    fn displacement(&self) -> f64 {
        self.chi1.displacement().max(self.chi2.displacement()) + (self.a - self.a_prime).abs()
    }

    fn is_conformal_at(&self, z: Complex64) -> bool {
        let p = self.map_partials(z);
        p.dzbar().norm() <= 1e-12 * p.dz().norm()
    }
}

/// Two Weierstrass functions glued along the real line through
/// interpolation stacks: `wp1(h1(z + c1))` above, `wp2(h2(z + c2))` below.
#[derive(Debug, Clone, PartialEq)]
pub struct GluedOrderTwo {
    upper: EllipticFunction,
    lower: EllipticFunction,
    h1: InterpolationStack,
    h2: InterpolationStack,
    c1: Complex64,
    c2: Complex64,
}

impl GluedOrderTwo {
    pub fn new(
        upper: EllipticFunction,
        lower: EllipticFunction,
        h1: InterpolationStack,
        h2: InterpolationStack,
        c1: Complex64,
        c2: Complex64,
    ) -> Result<Self> {
        for (name, f) in [("upper", &upper), ("lower", &lower)] {
            if !f.lattice().contains_point(c64(1.0, 0.0), 1e-9) {
                return Err(Error::InvalidModel(format!(
                    "{name} lattice does not have the horizontal period 1"
                )));
            }
        }
        if !(c1.re.is_finite() && c1.im.is_finite() && c2.re.is_finite() && c2.im.is_finite()) {
            return Err(Error::InvalidModel("offsets must be finite".into()));
        }
        Ok(Self {
            upper,
            lower,
            h1,
            h2,
            c1,
            c2,
        })
    }

    pub fn upper(&self) -> &EllipticFunction {
        &self.upper
    }

    pub fn lower(&self) -> &EllipticFunction {
        &self.lower
    }

    pub fn stacks(&self) -> (&InterpolationStack, &InterpolationStack) {
        (&self.h1, &self.h2)
    }

    pub fn offsets(&self) -> (Complex64, Complex64) {
        (self.c1, self.c2)
    }

    /// Value of the upper expression, also used on the real line.
    pub fn upper_value(&self, z: Complex64) -> Result<ExtendedComplex> {
        let w = guard(&self.upper, self.h1.map(z + self.c1))?;
        Ok(self.upper.wp(w))
    }

    /// Value of the lower expression, also used on the real line.
    pub fn lower_value(&self, z: Complex64) -> Result<ExtendedComplex> {
        let w = guard(&self.lower, self.h2.map(z + self.c2))?;
        Ok(self.lower.wp(w))
    }

    /// Largest chordal mismatch of the two expressions at real samples.
    pub fn gluing_residual(&self, samples: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &x in samples {
            let z = c64(x, 0.0);
            let d = crate::sphere::chordal_distance(self.upper_value(z)?, self.lower_value(z)?);
            worst = worst.max(d);
        }
        Ok(worst)
    }
}

/// The catalog of model functions.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelFunction {
    PlainWp(EllipticFunction),
    WpExp(WpExp),
    WpCosh(WpCosh),
    WpPower(WpPower),
    PowerLift(PowerLift),
    GluedOrderTwo(GluedOrderTwo),
}

impl ModelFunction {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFunction::PlainWp(_) => "plain",
            ModelFunction::WpExp(_) => "wpexp",
            ModelFunction::WpCosh(_) => "wpcosh",
            ModelFunction::WpPower(_) => "wppower",
            ModelFunction::PowerLift(_) => "lift",
            ModelFunction::GluedOrderTwo(_) => "glued",
        }
    }

    /// The Weierstrass function the model is built on (the upper one for a
    /// glued model).
    pub fn elliptic(&self) -> &EllipticFunction {
        match self {
            ModelFunction::PlainWp(f) => f,
            ModelFunction::WpExp(m) => &m.f,
            ModelFunction::WpCosh(m) => &m.f,
            ModelFunction::WpPower(m) => &m.f,
            ModelFunction::PowerLift(m) => m.inner.elliptic(),
            ModelFunction::GluedOrderTwo(m) => &m.upper,
        }
    }

    /// The inner map `psi` with `f = wp(psi)`; not defined for glued models.
    pub fn inner_map(&self, z: Complex64) -> Result<Complex64> {
        match self {
            ModelFunction::PlainWp(_) => Ok(z),
            ModelFunction::WpExp(m) => Ok(z.exp() + m.c),
            ModelFunction::WpCosh(_) => Ok(arccosh_branch(z)),
            ModelFunction::WpPower(m) => Ok(m.power(z) + m.c),
            ModelFunction::PowerLift(m) => m.inner.inner_map(z.powu(m.n)),
            ModelFunction::GluedOrderTwo(_) => Err(Error::InvalidModel(
                "a glued model has no single inner map".into(),
            )),
        }
    }

    /// The inner map and its derivative.
    pub fn inner_map_with_derivative(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        match self {
            ModelFunction::PlainWp(_) => Ok((z, c64(1.0, 0.0))),
            ModelFunction::WpExp(m) => {
                let e = z.exp();
                Ok((e + m.c, e))
            }
            ModelFunction::WpCosh(_) => {
                let one = c64(1.0, 0.0);
                let root = (z - one).sqrt() * (z + one).sqrt();
                Ok(((z + root).ln(), root.inv()))
            }
            ModelFunction::WpPower(m) => {
                if z.norm_sqr() == 0.0 {
                    return Err(Error::DegeneratePole { re: 0.0, im: 0.0 });
                }
                let h = m.power(z);
                Ok((h + m.c, m.rho / 2.0 * h / z))
            }
            ModelFunction::PowerLift(m) => {
                let n = m.n;
                let zn = z.powu(n);
                let (w, dw) = m.inner.inner_map_with_derivative(zn)?;
                Ok((w, dw * n as f64 * z.powu(n - 1)))
            }
            ModelFunction::GluedOrderTwo(_) => Err(Error::InvalidModel(
                "a glued model has no single inner map".into(),
            )),
        }
    }

    /// `f(z)` and `f'(z)`, or `None` at a pole.
    pub fn eval_with_derivative(&self, z: Complex64) -> Result<Option<(Complex64, Complex64)>> {
        let (w, dw) = self.inner_map_with_derivative(z)?;
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(Error::PrecisionLoss { re: z.re, im: z.im });
        }
        let f = self.elliptic();
        let w = guard(f, w)?;
        Ok(match f.wp_and_prime(w) {
            Some((v, d)) if v.norm() <= crate::elliptic::POLE_MAGNITUDE => Some((v, d * dw)),
            _ => None,
        })
    }

    /// The pole nearest to `z` along the local inverse of the inner map:
    /// the preimage near `z` of the lattice point closest to `psi(z)`.
    pub fn nearest_pole(&self, z: Complex64) -> Result<Option<Complex64>> {
        let (w, _) = self.inner_map_with_derivative(z)?;
        let f = self.elliptic();
        let w = guard(f, w)?;
        let lambda = f.reduce(w).1;
        let mut a = z;
        let scale = 1.0 + lambda.norm();
        for _ in 0..80 {
            let (w, dw) = match self.inner_map_with_derivative(a) {
                Ok(v) => v,
                Err(_) => return Ok(None),
            };
            let r = w - lambda;
            if r.norm() <= 1e-14 * scale {
                return Ok(Some(a));
            }
            if dw.norm_sqr() == 0.0 {
                return Ok(None);
            }
            a -= r / dw;
        }
        Ok(None)
    }

    /// Evaluates the model on the Riemann sphere.
    pub fn eval(&self, z: Complex64) -> Result<ExtendedComplex> {
        match self {
            ModelFunction::GluedOrderTwo(g) => {
                if z.im >= 0.0 {
                    g.upper_value(z)
                } else {
                    g.lower_value(z)
                }
            }
            _ => {
                let w = self.inner_map(z)?;
                if !(w.re.is_finite() && w.im.is_finite()) {
                    return Err(Error::PrecisionLoss { re: z.re, im: z.im });
                }
                let f = self.elliptic();
                Ok(f.wp(guard(f, w)?))
            }
        }
    }

    /// Evaluates at an extended point; infinity is not in the domain of a
    /// transcendental map and yields an error.
    pub fn eval_extended(&self, z: ExtendedComplex) -> Result<ExtendedComplex> {
        match z {
            ExtendedComplex::Finite(z) => self.eval(z),
            ExtendedComplex::Infinity => Err(Error::InvalidModel(
                "cannot evaluate a transcendental map at infinity".into(),
            )),
        }
    }

    /// Whether `z` lies on the branch cut where the model is discontinuous.
    pub fn on_seam(&self, z: Complex64) -> bool {
        match self {
            ModelFunction::WpPower(m) => m.rho < 2.0 && z.im == 0.0 && z.re < 0.0,
            ModelFunction::PowerLift(m) => {
                let w = z.powu(m.n);
                m.inner.on_seam(w)
            }
            _ => false,
        }
    }

    /// Streams every preimage of the lattice translates `s + Lambda` (each
    /// target with a multiplicity) lying in the closed disk `|z| <= radius`.
    pub(crate) fn for_each_preimage(
        &self,
        targets: &[(Complex64, u32)],
        radius: f64,
        visit: &mut dyn FnMut(Preimage),
    ) -> Result<()> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidRadii(format!("radius {radius} must be positive")));
        }
        match self {
            ModelFunction::PlainWp(f) => {
                for &(s, mult) in targets {
                    f.lattice().for_each_point_in_disk(-s, radius, |lam| {
                        let w = lam + s;
                        visit(Preimage {
                            location: w,
                            multiplicity: mult,
                            coefficient: 1.0,
                            inner: w,
                            approximate: false,
                        })
                    });
                }
            }
            ModelFunction::WpPower(m) => {
                let reach = radius.powf(m.rho / 2.0);
                let inv = 2.0 / m.rho;
                for &(s, mult) in targets {
                    m.f.lattice().for_each_point_in_disk(m.c - s, reach, |lam| {
                        let w = lam + s;
                        let d = w - m.c;
                        if d.norm_sqr() == 0.0 || !m.in_sector(d) {
                            return;
                        }
                        let a = Complex64::from_polar(d.norm().powf(inv), d.arg() * inv);
                        if a.norm() > radius {
                            return;
                        }
                        visit(Preimage {
                            location: a,
                            multiplicity: mult,
                            coefficient: inv * a.norm().powf(1.0 - m.rho / 2.0),
                            inner: w,
                            approximate: false,
                        })
                    });
                }
            }
            ModelFunction::WpExp(m) => {
                let reach = radius.exp();
                let floor = (-radius).exp();
                for &(s, mult) in targets {
                    m.f.lattice().for_each_point_in_disk(m.c - s, reach, |lam| {
                        let w = lam + s;
                        let d = w - m.c;
                        let modulus = d.norm();
                        if modulus < floor {
                            return;
                        }
                        let x = modulus.ln();
                        let span2 = radius * radius - x * x;
                        if span2 < 0.0 {
                            return;
                        }
                        let span = span2.sqrt();
                        let theta = d.arg();
                        let k_lo = ((-span - theta) / (2.0 * PI)).ceil() as i64 - 1;
                        let k_hi = ((span - theta) / (2.0 * PI)).floor() as i64 + 1;
                        for k in k_lo..=k_hi {
                            let a = c64(x, theta + 2.0 * PI * k as f64);
                            if a.norm() <= radius {
                                visit(Preimage {
                                    location: a,
                                    multiplicity: mult,
                                    coefficient: 1.0 / modulus,
                                    inner: w,
                                    approximate: false,
                                });
                            }
                        }
                    });
                }
            }
            ModelFunction::WpCosh(m) => {
                let reach = (radius.asinh().powi(2) + PI * PI).sqrt() + 1e-9;
                let tol = 1e-12;
                for &(s, mult) in targets {
                    m.f.lattice().for_each_point_in_disk(-s, reach, |lam| {
                        let w = lam + s;
                        if w.re < -tol || w.im <= -PI + tol || w.im > PI + tol {
                            return;
                        }
                        let on_axis = w.re.abs() <= tol;
                        if on_axis && w.im < -tol {
                            return;
                        }
                        let z = w.cosh();
                        if z.norm() > radius {
                            return;
                        }
                        let critical = on_axis && (w.im.abs() <= tol || (w.im - PI).abs() <= tol);
                        let sh = w.sinh().norm();
                        let (multiplicity, coefficient) = if critical {
                            // cosh is 2:1 at w = 0, i pi; a double pole of wp
                            // becomes simple with residue 1/2
                            (mult.div_ceil(2), 0.5)
                        } else {
                            (mult, sh)
                        };
                        visit(Preimage {
                            location: z,
                            multiplicity,
                            coefficient,
                            inner: w,
                            approximate: false,
                        })
                    });
                }
            }
            ModelFunction::PowerLift(m) => {
                let n = m.n;
                let mut failure = None;
                m.inner.for_each_preimage(targets, radius.powi(n as i32), &mut |p| {
                    if failure.is_some() {
                        return;
                    }
                    if p.location.norm_sqr() == 0.0 && n > 1 {
                        failure = Some(Error::DegeneratePole { re: 0.0, im: 0.0 });
                        return;
                    }
                    let r = p.location.norm().powf(1.0 / n as f64);
                    let t = p.location.arg();
                    for j in 0..n {
                        let z = Complex64::from_polar(r, (t + 2.0 * PI * j as f64) / n as f64);
                        visit(Preimage {
                            location: z,
                            multiplicity: p.multiplicity,
                            coefficient: p.coefficient / (n as f64 * r.powi(n as i32 - 1)),
                            inner: p.inner,
                            approximate: p.approximate,
                        });
                    }
                })?;
                if let Some(e) = failure {
                    return Err(e);
                }
            }
            ModelFunction::GluedOrderTwo(g) => {
                for (f, h, c, upper) in [(&g.upper, &g.h1, g.c1, true), (&g.lower, &g.h2, g.c2, false)] {
                    let reach = radius + c.norm() + h.displacement() + 1.0;
                    let center = g_center(h, c);
                    for &(s, mult) in targets {
                        f.lattice().for_each_point_in_disk(center - s, reach, |lam| {
                            let w = lam + s;
                            let z = h.inverse(w) - c;
                            let side_ok = if upper { z.im >= 0.0 } else { z.im < 0.0 };
                            if !side_ok || z.norm() > radius {
                                return;
                            }
                            let p = h.map_partials(z + c);
                            let conformal = h.is_conformal_at(z + c);
                            visit(Preimage {
                                location: z,
                                multiplicity: mult,
                                coefficient: 1.0 / p.dz().norm(),
                                inner: w,
                                approximate: !conformal,
                            })
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Calls `visit` on every pole with `|a| <= radius`, in enumeration
    /// order.
    pub fn for_each_pole(&self, radius: f64, mut visit: impl FnMut(PoleDatum)) -> Result<()> {
        self.for_each_preimage(&[(c64(0.0, 0.0), 2)], radius, &mut |p| {
            visit(PoleDatum {
                location: p.location,
                multiplicity: p.multiplicity,
                coefficient: p.coefficient,
                lattice_point: p.inner,
                approximate: p.approximate,
            })
        })
    }

    /// Every pole with `|a| <= radius`, sorted by modulus then argument.
    pub fn poles_in_disk(&self, radius: f64) -> Result<Vec<PoleDatum>> {
        let mut out = Vec::new();
        self.for_each_pole(radius, |p| out.push(p))?;
        out.sort_by(|x, y| {
            x.location
                .norm()
                .total_cmp(&y.location.norm())
                .then_with(|| x.location.arg().total_cmp(&y.location.arg()))
        });
        Ok(out)
    }

    /// `|b| = 1/|psi'(a)|` recomputed from the pole location.
    pub fn leading_coefficient(&self, p: &PoleDatum) -> Result<f64> {
        let a = p.location;
        let d = match self {
            ModelFunction::PlainWp(_) => c64(1.0, 0.0),
            ModelFunction::WpExp(_) => a.exp(),
            ModelFunction::WpCosh(_) => {
                if (a - 1.0).norm() < 1e-12 || (a + 1.0).norm() < 1e-12 {
                    return Ok(0.5);
                }
                let one = c64(1.0, 0.0);
                ((a - one).sqrt() * (a + one).sqrt()).inv()
            }
            ModelFunction::WpPower(m) => {
                if a.norm_sqr() == 0.0 {
                    return Err(Error::DegeneratePole { re: 0.0, im: 0.0 });
                }
                let e = m.rho / 2.0;
                Complex64::from_polar(e * a.norm().powf(e - 1.0), (e - 1.0) * m.branch.arg(a))
            }
            ModelFunction::PowerLift(m) => {
                let inner_a = a.powu(m.n);
                let inner = PoleDatum { location: inner_a, ..*p };
                let b = m.inner.leading_coefficient(&inner)?;
                let chain = m.n as f64 * a.norm().powi(m.n as i32 - 1);
                if chain == 0.0 {
                    return Err(Error::DegeneratePole { re: a.re, im: a.im });
                }
                return Ok(b / chain);
            }
            ModelFunction::GluedOrderTwo(g) => {
                let (h, c) = if a.im >= 0.0 { (&g.h1, g.c1) } else { (&g.h2, g.c2) };
                h.map_partials(a + c).dz()
            }
        };
        if d.norm() == 0.0 {
            return Err(Error::DegeneratePole { re: a.re, im: a.im });
        }
        Ok(1.0 / d.norm())
    }

    /// Measured `|b|`: the average of `sqrt(|f(z)|) |z - a|` over four
    /// approach directions at distance `h`.
    pub fn measured_coefficient(&self, a: Complex64, h: f64) -> Result<f64> {
        let mut acc = 0.0;
        for k in 0..4 {
            let dz = Complex64::from_polar(h, PI / 4.0 + k as f64 * PI / 2.0);
            let v = self.eval(a + dz)?;
            let v = v
                .finite()
                .ok_or_else(|| Error::InvalidModel("sample landed on a pole".into()))?;
            acc += v.norm().sqrt() * h;
        }
        Ok(acc / 4.0)
    }
}

fn g_center(h: &InterpolationStack, c: Complex64) -> Complex64 {
    h.map(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::Lattice;

    fn sq() -> EllipticFunction {
        EllipticFunction::new(Lattice::square())
    }

    #[test]
    fn offset_validation() {
        assert!(WpExp::new(sq(), c64(1.0, 0.0)).is_err());
        assert!(WpExp::new(sq(), c64(0.5, 0.5)).is_err());
        assert!(WpExp::new(sq(), c64(0.25, 0.25)).is_ok());
        assert!(WpPower::new(sq(), 2.5, c64(0.25, 0.25), Branch::Plus).is_err());
        assert!(WpPower::new(sq(), 0.0, c64(0.25, 0.25), Branch::Plus).is_err());
        assert!(WpCosh::new(sq()).is_err());
        assert!(PowerLift::new(ModelFunction::PlainWp(sq()), 0).is_err());
    }

    #[test]
    fn wpexp_pole_preimage_is_infinite() {
        let c = c64(0.25, 0.25);
        let m = ModelFunction::WpExp(WpExp::new(sq(), c).unwrap());
        let z = (c64(2.0, 1.0) - c).ln();
        assert!(m.eval(z).unwrap().is_infinite());
        assert!(m.eval(z + c64(0.0, 2.0 * PI)).unwrap().is_infinite());
    }

    #[test]
    fn wpcosh_poles_at_cosh_m() {
        let m = ModelFunction::WpCosh(WpCosh::standard(12, 1e-8).unwrap());
        let poles = m.poles_in_disk(5f64.cosh() + 1e-9).unwrap();
        assert_eq!(poles.len(), 6);
        for (k, p) in poles.iter().enumerate() {
            assert!((p.location - c64((k as f64).cosh(), 0.0)).norm() < 1e-9 * (k as f64).cosh());
            let expected = if k == 0 { 1 } else { 2 };
            assert_eq!(p.multiplicity, expected);
        }
        // simple pole at 1 with residue 1/2
        let z = c64(1.0 + 1e-5, 1e-5);
        let v = m.eval(z).unwrap().finite().unwrap();
        assert!((v * (z - 1.0) - 0.5).norm() < 1e-4, "{v}");
        for k in 1..=3 {
            let a = c64((k as f64).cosh(), 0.0);
            assert!(m.eval(a).unwrap().is_infinite());
        }
    }

    #[test]
    fn power_two_is_shifted_plain() {
        let c = c64(0.21, 0.13);
        let f = EllipticFunction::new(Lattice::new(c64(1.0, 0.0), c64(0.3, 1.1)).unwrap());
        let m = ModelFunction::WpPower(WpPower::new(f.clone(), 2.0, c, Branch::Plus).unwrap());
        for k in 0..50 {
            let z = c64((k as f64 * 0.37).sin() * 3.0, (k as f64 * 0.71).cos() * 2.0);
            let a = m.eval(z).unwrap().finite().unwrap();
            let b = f.wp(z + c).finite().unwrap();
            assert!((a - b).norm() <= 1e-10 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn power_coefficient_matches_local_expansion() {
        let f = EllipticFunction::new(Lattice::square());
        let m = ModelFunction::WpPower(WpPower::new(f, 1.0, c64(0.25, 0.25), Branch::Plus).unwrap());
        let poles = m.poles_in_disk(50.0).unwrap();
        assert!(!poles.is_empty());
        for p in poles.iter().step_by(7) {
            let expected = 2.0 * p.location.norm().sqrt();
            assert!((p.coefficient - expected).abs() < 1e-12 * expected);
            assert!((m.leading_coefficient(p).unwrap() - expected).abs() < 1e-9 * expected);
            let measured = m.measured_coefficient(p.location, 1e-4 * p.coefficient).unwrap();
            assert!((measured - p.coefficient).abs() < 1e-3 * p.coefficient);
        }
    }

    #[test]
    fn plain_coefficient_is_one() {
        let m = ModelFunction::PlainWp(sq());
        for p in m.poles_in_disk(3.0).unwrap() {
            assert_eq!(p.coefficient, 1.0);
            assert_eq!(p.multiplicity, 2);
        }
    }

    #[test]
    fn lift_poles_are_root_fibers() {
        let inner = ModelFunction::WpExp(WpExp::new(sq(), c64(0.25, 0.25)).unwrap());
        let lift = ModelFunction::PowerLift(PowerLift::new(inner.clone(), 3).unwrap());
        let r = 1.5;
        let inner_poles = inner.poles_in_disk(r * r * r).unwrap();
        let lifted = lift.poles_in_disk(r).unwrap();
        assert_eq!(lifted.len(), 3 * inner_poles.len());
        for p in &lifted {
            assert!(lift.eval(p.location).unwrap().is_infinite());
        }
        let plain_lift = ModelFunction::PowerLift(PowerLift::new(ModelFunction::PlainWp(sq()), 2).unwrap());
        assert!(matches!(plain_lift.poles_in_disk(1.0), Err(Error::DegeneratePole { .. })));
    }

    #[test]
    fn seam_flag() {
        let f = sq();
        let m = ModelFunction::WpPower(WpPower::new(f.clone(), 1.0, c64(0.25, 0.25), Branch::Plus).unwrap());
        assert!(m.on_seam(c64(-2.0, 0.0)));
        assert!(!m.on_seam(c64(2.0, 0.0)));
        let minus = ModelFunction::WpPower(WpPower::new(f, 1.0, c64(0.25, 0.25), Branch::Minus).unwrap());
        let z = c64(-2.0, 0.0);
        // the two branches take conjugate-side limits on the seam
        let above = m.eval(c64(-2.0, 1e-12)).unwrap().finite().unwrap();
        let below = m.eval(c64(-2.0, -1e-12)).unwrap().finite().unwrap();
        assert!((m.eval(z).unwrap().finite().unwrap() - above).norm() < 1e-6);
        assert!((minus.eval(z).unwrap().finite().unwrap() - below).norm() < 1e-6);
    }

    #[test]
    fn interpolation_identity_and_boundaries() {
        let s = InterpolationStack::new(2.0, 3.0, 0.5, BoundaryMap::Identity, BoundaryMap::Identity).unwrap();
        let z = c64(0.3, 1.2);
        let l = s.interpolation_map(z).unwrap();
        assert!((l - c64(0.3, 1.5 / 2.5 * 1.2)).norm() < 1e-15);
        let sine = BoundaryMap::Sine { amplitude: 0.1, harmonic: 1 };
        let s = InterpolationStack::new(2.0, 3.0, 0.5, BoundaryMap::Shift(0.2), sine.clone()).unwrap();
        assert_eq!(s.interpolation_map(c64(0.7, 0.0)).unwrap(), c64(0.7 + 0.2, 0.0));
        let top = s.interpolation_map(c64(0.7, 2.5)).unwrap();
        assert!((top - c64(sine.eval(0.7), 1.5)).norm() < 1e-15);
        assert!(matches!(
            s.interpolation_map(c64(0.0, 2.6)),
            Err(Error::OutsideInterpolationStrip { .. })
        ));
    }

    #[test]
    fn dilatation_cases() {
        let id = InterpolationStack::new(1.0, 1.0, 0.0, BoundaryMap::Identity, BoundaryMap::Identity).unwrap();
        assert!((id.dilatation(c64(0.4, 0.5)).unwrap() - 1.0).abs() < 1e-15);
        let s = InterpolationStack::new(
            1.0,
            1.0,
            0.0,
            BoundaryMap::Identity,
            BoundaryMap::Sine { amplitude: 0.1, harmonic: 1 },
        )
        .unwrap();
        let k = s.max_dilatation(64, 16).unwrap();
        assert!(k > 1.0 && k.is_finite());
        let k0 = s.dilatation(c64(0.3, 0.4)).unwrap();
        let k1 = s.dilatation(c64(1.3, 0.4)).unwrap();
        assert!((k0 - k1).abs() < 1e-12);
        let bad = BoundaryMap::Sine { amplitude: 0.2, harmonic: 1 };
        assert!(InterpolationStack::new(1.0, 1.0, 0.0, BoundaryMap::Identity, bad).is_err());
    }

    #[test]
    fn stack_map_inverse_round_trip() {
        let s = InterpolationStack::new(
            1.5,
            2.0,
            0.5,
            BoundaryMap::Sine { amplitude: 0.05, harmonic: 2 },
            BoundaryMap::Sine { amplitude: -0.1, harmonic: 1 },
        )
        .unwrap();
        for k in 0..40 {
            let z = c64(k as f64 * 0.173 - 3.0, k as f64 * 0.1 - 1.0);
            let back = s.inverse(s.map(z));
            assert!((back - z).norm() < 1e-10, "{z} -> {back}");
        }
    }

    #[test]
    fn glued_identity_and_halves() {
        let f = sq();
        let g = GluedOrderTwo::new(
            f.clone(),
            f.clone(),
            InterpolationStack::identity(),
            InterpolationStack::identity(),
            c64(0.1, 0.2),
            c64(0.1, 0.2),
        )
        .unwrap();
        let xs: Vec<f64> = (0..50).map(|k| k as f64 * 0.0377).collect();
        assert!(g.gluing_residual(&xs).unwrap() < 1e-10);
        let m = ModelFunction::GluedOrderTwo(g);
        let poles = m.poles_in_disk(2.0).unwrap();
        assert!(!poles.is_empty());
        for p in &poles {
            assert!(m.eval(p.location).unwrap().is_infinite());
            assert!(!p.approximate);
        }
    }
}
