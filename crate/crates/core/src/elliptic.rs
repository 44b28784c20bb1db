//! Weierstrass elliptic functions over arbitrary rank-2 lattices.
//!
//! Evaluation reduces the argument to the centred fundamental cell of a
//! Gauss-reduced basis and sums the symmetrised lattice series over the box
//! `|m|, |k| <= M`. The part of the series outside the box is not dropped:
//! expanding `1/(z-w)^2 - 1/w^2` in powers of `z/w` leaves only even powers
//! after pairing `w` with `-w`, so the tail equals
//! `sum_j (2j+1) z^(2j) T_(2j+2)(M)` where `T_p(M)` is the lattice sum of
//! `w^-p` over all shells beyond `M`. Those shell tails have a closed
//! Euler-Maclaurin expansion (each shell is a trapezoid rule on the boundary
//! of a parallelogram), which also gives the Eisenstein series in a few
//! dozen shells.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sphere::ExtendedComplex;

/// Default truncation order of the direct box sum.
pub const DEFAULT_TRUNCATION: usize = 12;
/// Default pole threshold, in units of the cell diameter.
pub const DEFAULT_POLE_EPSILON: f64 = 1e-8;
/// Values of larger modulus are reported as the point at infinity.
pub const POLE_MAGNITUDE: f64 = 1e15;

/// Number of even tail orders `T_4, T_6, ...` carried by an evaluator.
const TAIL_TERMS: usize = 14;
/// Shells summed directly before switching to the asymptotic tail when
/// computing the Eisenstein series.
const EISENSTEIN_SHELLS: usize = 24;

/// B_2, B_4, ..., B_16.
const BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Rising factorial `x (x+1) ... (x+m-1)`.
fn rising(x: f64, m: usize) -> f64 {
    (0..m).map(|k| x + k as f64).product()
}

/// `sum_(n > N) n^-s` for real `s > 1`.
fn zeta_tail(s: f64, after: usize) -> f64 {
    let start = after + 1;
    let switch = start.max(48);
    let mut acc = 0.0;
    for n in start..switch {
        acc += (n as f64).powf(-s);
    }
    let a = switch as f64;
    let mut em = a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    for (k, b) in BERNOULLI.iter().enumerate() {
        let two_k = 2 * (k + 1);
        em += b / factorial(two_k) * rising(s, two_k - 1) * a.powf(-s - two_k as f64 + 1.0);
    }
    acc + em
}

/// A rank-2 lattice with cached Eisenstein invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    omega1: Complex64,
    omega2: Complex64,
    basis: (Complex64, Complex64),
    det: f64,
    g2: Complex64,
    g3: Complex64,
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl Lattice {
    /// Builds the lattice spanned by `omega1`, `omega2`. The second
    /// generator is negated if needed so that `Im(omega2/omega1) > 0`.
    pub fn new(omega1: Complex64, omega2: Complex64) -> Result<Self> {
        let cross = (omega1.conj() * omega2).im;
        let scale = omega1.norm() * omega2.norm();
        if !(cross.abs() > 1e-12 * scale) || !scale.is_finite() {
            return Err(Error::DegenerateLattice(
                format!("{omega1}"),
                format!("{omega2}"),
            ));
        }
        let omega2 = if cross < 0.0 { -omega2 } else { omega2 };
        let basis = gauss_reduce(omega1, omega2);
        let det = (basis.0.conj() * basis.1).im;
        let mut lat = Self {
            omega1,
            omega2,
            basis,
            det,
            g2: c64(0.0, 0.0),
            g3: c64(0.0, 0.0),
        };
        let near = lat.shell_sums(EISENSTEIN_SHELLS, &[4, 6]);
        let g4 = near[0] + lat.shell_tail(4, EISENSTEIN_SHELLS);
        let g6 = near[1] + lat.shell_tail(6, EISENSTEIN_SHELLS);
        lat.g2 = 60.0 * g4;
        lat.g3 = 140.0 * g6;
        Ok(lat)
    }

    /// The square lattice spanned by 1 and i.
    pub fn square() -> Self {
        Self::new(c64(1.0, 0.0), c64(0.0, 1.0)).expect("square lattice")
    }

    pub fn omega1(&self) -> Complex64 {
        self.omega1
    }

    pub fn omega2(&self) -> Complex64 {
        self.omega2
    }

    pub fn tau(&self) -> Complex64 {
        self.omega2 / self.omega1
    }

    /// Gauss-reduced basis of the same lattice.
    pub fn reduced_basis(&self) -> (Complex64, Complex64) {
        self.basis
    }

    pub fn cell_area(&self) -> f64 {
        self.det
    }

    /// The longer diagonal of the reduced fundamental parallelogram.
    pub fn cell_diameter(&self) -> f64 {
        let (a, b) = self.basis;
        (a + b).norm().max((a - b).norm())
    }

    pub fn g2(&self) -> Complex64 {
        self.g2
    }

    pub fn g3(&self) -> Complex64 {
        self.g3
    }

    /// Real coordinates of `z` in the reduced basis.
    fn coordinates(&self, z: Complex64) -> (f64, f64) {
        let (a, b) = self.basis;
        let s = (z.conj() * b).im / (a.conj() * b).im;
        let t = (a.conj() * z).im / self.det;
        (s, t)
    }

    fn point(&self, m: f64, k: f64) -> Complex64 {
        self.basis.0 * m + self.basis.1 * k
    }

    /// Whether `z` is a lattice point up to `tol` (absolute).
    pub fn contains_point(&self, z: Complex64, tol: f64) -> bool {
        self.reduce(z).0.norm() <= tol
    }

    /// Splits `z = z0 + lambda` with `lambda` a lattice point and `z0` the
    /// shortest representative among the neighbouring cells.
    pub fn reduce(&self, z: Complex64) -> (Complex64, Complex64) {
        let (s, t) = self.coordinates(z);
        // ceil(x - 1/2) sends exact half-integers down, so 2.5 -> 2
        let m = (s - 0.5).ceil();
        let k = (t - 0.5).ceil();
        let mut lambda = self.point(m, k);
        let mut z0 = z - lambda;
        let (a, b) = self.basis;
        for shift in [a, -a, b, -b, a + b, -a - b, a - b, b - a] {
            let cand = z0 - shift;
            if cand.norm_sqr() < z0.norm_sqr() {
                z0 = cand;
                lambda += shift;
            }
        }
        (z0, lambda)
    }

    /// Rows `(k, m_lo, m_hi)` of the reduced basis meeting the closed disk,
    /// with `m_lo..=m_hi` covering every lattice point of the row inside it.
    /// The bounds are padded by one; callers still test membership.
    pub fn rows_in_disk(&self, center: Complex64, r: f64) -> Vec<(i64, i64, i64)> {
        let (a, b) = self.basis;
        let (_, tc) = self.coordinates(center);
        let t_span = r * a.norm() / self.det;
        let k_lo = (tc - t_span).ceil() as i64 - 1;
        let k_hi = (tc + t_span).floor() as i64 + 1;
        let a2 = a.norm_sqr();
        let mut rows = Vec::with_capacity((k_hi - k_lo + 1).max(0) as usize);
        for k in k_lo..=k_hi {
            // |m a + q|^2 <= r^2 with q = k b - center
            let q = b * k as f64 - center;
            let half_b = (a.conj() * q).re;
            let disc = half_b * half_b - a2 * (q.norm_sqr() - r * r);
            if disc < 0.0 {
                continue;
            }
            let sq = disc.sqrt();
            let m_lo = ((-half_b - sq) / a2).floor() as i64 - 1;
            let m_hi = ((-half_b + sq) / a2).ceil() as i64 + 1;
            rows.push((k, m_lo, m_hi));
        }
        rows
    }

    /// Calls `visit` on every lattice point with `|lambda - center| <= r`.
    pub fn for_each_point_in_disk(&self, center: Complex64, r: f64, mut visit: impl FnMut(Complex64)) {
        for (k, m_lo, m_hi) in self.rows_in_disk(center, r) {
            for m in m_lo..=m_hi {
                let p = self.point(m as f64, k as f64);
                if (p - center).norm() <= r {
                    visit(p);
                }
            }
        }
    }

    /// Every lattice point of the closed disk, sorted by modulus then
    /// argument.
    pub fn points_in_disk(&self, center: Complex64, r: f64) -> Vec<Complex64> {
        let mut out = Vec::new();
        if r >= 0.0 {
            self.for_each_point_in_disk(center, r, |p| out.push(p));
        }
        out.sort_by(|x, y| {
            x.norm()
                .total_cmp(&y.norm())
                .then_with(|| x.arg().total_cmp(&y.arg()))
        });
        out
    }

    /// Points of shell `n`: `max(|m|, |k|) = n` in the reduced basis.
    fn for_each_shell_point(&self, n: i64, mut visit: impl FnMut(Complex64)) {
        if n == 0 {
            visit(c64(0.0, 0.0));
            return;
        }
        for k in -n..=n {
            visit(self.point(n as f64, k as f64));
            visit(self.point(-n as f64, k as f64));
        }
        for m in (-n + 1)..n {
            visit(self.point(m as f64, n as f64));
            visit(self.point(m as f64, -n as f64));
        }
    }

    /// `sum w^-p` over shells `1..=n_max`, for each requested even `p`.
    fn shell_sums(&self, n_max: usize, powers: &[i32]) -> Vec<Complex64> {
        let mut acc = vec![c64(0.0, 0.0); powers.len()];
        // outermost shells first keeps the small terms from being absorbed
        for n in (1..=n_max as i64).rev() {
            self.for_each_shell_point(n, |w| {
                let inv = w.inv();
                for (slot, &p) in acc.iter_mut().zip(powers) {
                    *slot += inv.powi(p);
                }
            });
        }
        acc
    }

    /// `T_p(N) = sum_(shells n > N) w^-p` from the Euler-Maclaurin expansion
    /// of the shell sums.
    pub(crate) fn shell_tail(&self, p: i32, after: usize) -> Complex64 {
        let (a, b) = self.basis;
        let sides = [(a - b, 2.0 * b), (-a - b, 2.0 * b), (b - a, 2.0 * a), (-a - b, 2.0 * a)];
        let pf = p as f64;
        let mut integral = c64(0.0, 0.0);
        for &(start, d) in &sides {
            let end = start + d;
            integral += (end.powf(1.0 - pf) - start.powf(1.0 - pf)) / ((1.0 - pf) * d);
        }
        let mut total = 2.0 * integral * zeta_tail(pf - 1.0, after);
        for (k, bern) in BERNOULLI.iter().enumerate() {
            let m = 2 * k + 1;
            // f^(m)(u) = (-1)^m (p)_m u^(-p-m)
            let coef = -rising(pf, m);
            let mut jump = c64(0.0, 0.0);
            for &(start, d) in &sides {
                let end = start + d;
                let dm = d.powi(m as i32);
                jump += dm * coef * (end.powi(-(p + m as i32)) - start.powi(-(p + m as i32)));
            }
            let two_k = 2 * (k + 1);
            total += bern / factorial(two_k)
                * 2f64.powi(1 - two_k as i32)
                * jump
                * zeta_tail(pf + two_k as f64 - 1.0, after);
        }
        total
    }
}

fn gauss_reduce(mut a: Complex64, mut b: Complex64) -> (Complex64, Complex64) {
    if b.norm_sqr() < a.norm_sqr() {
        std::mem::swap(&mut a, &mut b);
    }
    for _ in 0..200 {
        let mu = (b / a).re.round();
        b -= a * mu;
        if b.norm_sqr() < a.norm_sqr() {
            std::mem::swap(&mut a, &mut b);
        } else {
            break;
        }
    }
    if (a.conj() * b).im < 0.0 {
        b = -b;
    }
    (a, b)
}

/// The Weierstrass function of a lattice, with its evaluation parameters.
#[derive(Debug, Clone)]
pub struct EllipticFunction {
    lattice: Lattice,
    truncation: usize,
    pole_epsilon: f64,
    /// One representative of each `+-w` pair in the box, with `1/w^2`.
    half_box: Vec<(Complex64, Complex64)>,
    /// `T_4(M), T_6(M), ...`
    tails: Vec<Complex64>,
}

impl PartialEq for EllipticFunction {
    fn eq(&self, other: &Self) -> bool {
        self.lattice == other.lattice
            && self.truncation == other.truncation
            && self.pole_epsilon == other.pole_epsilon
    }
}

/// Critical values at the three half periods, with the residual of the
/// cubic `4t^3 - g2 t - g3` at each. The fourth critical value is infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalValues {
    /// `wp(omega1/2)`, `wp((omega1+omega2)/2)`, `wp(omega2/2)`.
    pub values: [Complex64; 3],
    pub residuals: [f64; 3],
}

impl EllipticFunction {
    pub fn new(lattice: Lattice) -> Self {
        Self::with_parameters(lattice, DEFAULT_TRUNCATION, DEFAULT_POLE_EPSILON)
            .expect("default parameters are valid")
    }

    pub fn with_parameters(lattice: Lattice, truncation: usize, pole_epsilon: f64) -> Result<Self> {
        if truncation < 8 {
            return Err(Error::InvalidTruncation(truncation));
        }
        if !(pole_epsilon > 0.0) || !pole_epsilon.is_finite() {
            return Err(Error::InvalidPoleThreshold(pole_epsilon));
        }
        let m = truncation as i64;
        let mut half_box = Vec::with_capacity(((2 * m + 1) * (2 * m + 1) / 2) as usize);
        for k in 0..=m {
            let m_start = if k == 0 { 1 } else { -m };
            for j in m_start..=m {
                let w = lattice.point(j as f64, k as f64);
                half_box.push((w, w.inv().powi(2)));
            }
        }
        // large |w| first
        half_box.sort_by(|x, y| y.0.norm().total_cmp(&x.0.norm()));
        let tails = (0..TAIL_TERMS)
            .map(|j| lattice.shell_tail(2 * j as i32 + 4, truncation))
            .collect();
        Ok(Self {
            lattice,
            truncation,
            pole_epsilon,
            half_box,
            tails,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn pole_epsilon(&self) -> f64 {
        self.pole_epsilon
    }

    /// Absolute pole threshold in the domain of the function.
    pub fn pole_radius(&self) -> f64 {
        self.pole_epsilon * self.lattice.cell_diameter()
    }

    pub fn reduce(&self, z: Complex64) -> (Complex64, Complex64) {
        self.lattice.reduce(z)
    }

    /// `wp` and `wp'` at a reduced, nonzero argument.
    fn series(&self, z: Complex64, want_derivative: bool) -> (Complex64, Complex64) {
        let mut value = c64(0.0, 0.0);
        let mut deriv = c64(0.0, 0.0);
        for &(w, inv_w2) in &self.half_box {
            let a = (z - w).inv();
            let b = (z + w).inv();
            let a2 = a * a;
            let b2 = b * b;
            value += a2 + b2 - 2.0 * inv_w2;
            if want_derivative {
                deriv += a2 * a + b2 * b;
            }
        }
        let z2 = z * z;
        let mut tail = c64(0.0, 0.0);
        let mut tail_d = c64(0.0, 0.0);
        let mut zp = z2;
        let mut zpd = z;
        for (j, t) in self.tails.iter().enumerate() {
            let n = 2.0 * (j + 1) as f64;
            let term = (n + 1.0) * zp * t;
            tail += term;
            if want_derivative {
                tail_d += (n + 1.0) * n * zpd * t;
            }
            zp *= z2;
            zpd *= z2;
        }
        let inv = z.inv();
        let v = inv * inv + value + tail;
        let d = -2.0 * inv * inv * inv - 2.0 * deriv + tail_d;
        (v, d)
    }

    /// The Weierstrass function. Returns infinity within the pole threshold
    /// of a lattice point or when the modulus exceeds [`POLE_MAGNITUDE`].
    pub fn wp(&self, z: Complex64) -> ExtendedComplex {
        let (z0, _) = self.reduce(z);
        if !(z0.norm() >= self.pole_radius()) {
            return ExtendedComplex::Infinity;
        }
        let (v, _) = self.series(z0, false);
        if !(v.norm() <= POLE_MAGNITUDE) {
            return ExtendedComplex::Infinity;
        }
        ExtendedComplex::new(v)
    }

    /// Derivative of the Weierstrass function; infinity within the pole
    /// threshold.
    pub fn wp_prime(&self, z: Complex64) -> ExtendedComplex {
        let (z0, _) = self.reduce(z);
        if !(z0.norm() >= self.pole_radius()) {
            return ExtendedComplex::Infinity;
        }
        ExtendedComplex::new(self.series(z0, true).1)
    }

    /// Both `wp` and `wp'`, or `None` inside the pole threshold.
    pub fn wp_and_prime(&self, z: Complex64) -> Option<(Complex64, Complex64)> {
        let (z0, _) = self.reduce(z);
        if !(z0.norm() >= self.pole_radius()) {
            return None;
        }
        let (v, d) = self.series(z0, true);
        Some((v, d))
    }

    pub fn critical_values(&self) -> CriticalValues {
        let w1 = self.lattice.omega1;
        let w2 = self.lattice.omega2;
        let g2 = self.lattice.g2;
        let g3 = self.lattice.g3;
        let pts = [w1 / 2.0, (w1 + w2) / 2.0, w2 / 2.0];
        let mut values = [c64(0.0, 0.0); 3];
        let mut residuals = [0.0; 3];
        for (i, p) in pts.iter().enumerate() {
            let e = self.wp(*p).finite().expect("half periods are regular");
            values[i] = e;
            residuals[i] = (4.0 * e * e * e - g2 * e - g3).norm();
        }
        CriticalValues { values, residuals }
    }

    /// Solutions of `wp(u) = a` in one fundamental cell, with multiplicity.
    /// A non-critical `a` gives two simple roots `u`, `-u`; a finite
    /// critical value gives one double root at a half period.
    pub fn solve(&self, a: Complex64) -> Vec<(Complex64, u32)> {
        let (r1, r2) = self.lattice.basis;
        let scale = 1.0 + a.norm();
        let mut roots: Vec<Complex64> = Vec::new();
        let seeds = 10;
        for i in 0..seeds {
            for j in 0..seeds {
                let s = (i as f64 + 0.5) / seeds as f64 - 0.5;
                let t = (j as f64 + 0.5) / seeds as f64 - 0.5;
                let mut u = r1 * s + r2 * t;
                let mut converged = false;
                for _ in 0..80 {
                    let Some((v, d)) = self.wp_and_prime(u) else { break };
                    let f = v - a;
                    if f.norm() < 1e-13 * scale {
                        converged = true;
                        break;
                    }
                    if d.norm() == 0.0 {
                        break;
                    }
                    u = self.reduce(u - f / d).0;
                }
                if !converged {
                    continue;
                }
                let u = self.reduce(u).0;
                let tol = 1e-6 * self.lattice.cell_diameter();
                let dup = roots.iter().any(|r| self.lattice.contains_point(u - *r, tol));
                if !dup {
                    roots.push(u);
                }
            }
        }
        if roots.is_empty() {
            return Vec::new();
        }
        let tol = 1e-6 * self.lattice.cell_diameter();
        let u = roots[0];
        if self.lattice.contains_point(2.0 * u, tol) {
            vec![(u, 2)]
        } else {
            vec![(u, 1), (self.reduce(-u).0, 1)]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq() -> EllipticFunction {
        EllipticFunction::new(Lattice::square())
    }

    /// Plain symmetric box sum, no tail correction.
    fn brute_wp(lat: &Lattice, z: Complex64, m: i64) -> Complex64 {
        let (a, b) = lat.reduced_basis();
        let mut s = z.inv().powi(2);
        for j in -m..=m {
            for k in -m..=m {
                if j == 0 && k == 0 {
                    continue;
                }
                let w = a * j as f64 + b * k as f64;
                s += (z - w).inv().powi(2) - w.inv().powi(2);
            }
        }
        s
    }

    #[test]
    fn reduce_examples() {
        let lat = Lattice::square();
        let (z0, l) = lat.reduce(c64(0.0, 0.0));
        assert_eq!((z0, l), (c64(0.0, 0.0), c64(0.0, 0.0)));
        let (z0, l) = lat.reduce(c64(2.5, 3.0));
        assert!((z0 - c64(0.5, 0.0)).norm() < 1e-15, "{z0}");
        assert!((l - c64(2.0, 3.0)).norm() < 1e-15);
        let (z0, l) = lat.reduce(c64(1.0, 0.0));
        assert!(z0.norm() < 1e-15);
        assert!((l - c64(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn orientation_is_normalised() {
        let lat = Lattice::new(c64(1.0, 0.0), c64(0.2, -1.3)).unwrap();
        assert!(lat.tau().im > 0.0);
        assert!(Lattice::new(c64(1.0, 0.0), c64(2.0, 0.0)).is_err());
    }

    #[test]
    fn shell_tail_matches_direct_shells() {
        let lat = Lattice::new(c64(1.0, 0.0), c64(0.3, 1.1)).unwrap();
        for p in [4, 6, 8] {
            let direct = lat.shell_sums(60, &[p])[0] - lat.shell_sums(10, &[p])[0];
            let expected = lat.shell_tail(p, 10) - lat.shell_tail(p, 60);
            assert!(
                (direct - expected).norm() < 1e-14,
                "p={p}: {direct} vs {expected}"
            );
        }
    }

    #[test]
    fn leading_term_near_origin() {
        let f = sq();
        for k in 2..=5 {
            let z = c64(10f64.powi(-k), 0.0);
            let v = f.wp(z).finite().unwrap();
            assert!((z * z * v - 1.0).norm() < 1e-3, "k={k}");
        }
    }

    #[test]
    fn prime_leading_term_near_origin() {
        let f = sq();
        let z = c64(1e-4, 2e-4);
        let d = f.wp_prime(z).finite().unwrap();
        assert!((z * z * z * d + 2.0).norm() < 1e-6);
    }

    #[test]
    fn square_lattice_middle_value_vanishes() {
        let f = sq();
        let v = f.wp(c64(0.5, 0.5)).finite().unwrap();
        assert!(v.norm() < 1e-12, "{v}");
        // independent direct summation (no tail correction)
        let brute = brute_wp(f.lattice(), c64(0.5, 0.5), 400);
        assert!(brute.norm() < 1e-4, "{brute}");
    }

    #[test]
    fn agrees_with_brute_force_at_high_truncation() {
        let lat = Lattice::new(c64(1.0, 0.0), c64(0.3, 1.1)).unwrap();
        let f = EllipticFunction::new(lat.clone());
        let z = c64(0.21, 0.17);
        let v = f.wp(z).finite().unwrap();
        // tail of the plain sum decays like M^-2
        let b1 = brute_wp(&lat, z, 200);
        let b2 = brute_wp(&lat, z, 400);
        let extrapolated = (4.0 * b2 - b1) / 3.0;
        assert!((v - extrapolated).norm() < 1e-6, "{v} vs {extrapolated}");
    }

    #[test]
    fn half_period_is_critical() {
        let f = EllipticFunction::new(Lattice::new(c64(1.0, 0.0), c64(0.3, 1.1)).unwrap());
        let d = f.wp_prime(c64(0.5, 0.0)).finite().unwrap();
        assert!(d.norm() < 1e-10, "{d}");
    }

    #[test]
    fn pole_returns_infinity() {
        let f = sq();
        assert!(f.wp(c64(0.0, 0.0)).is_infinite());
        assert!(f.wp(c64(3.0, -2.0)).is_infinite());
        assert!(f.wp_prime(c64(1.0, 1.0)).is_infinite());
        assert!(!f.wp(c64(1e-6, 0.0)).is_infinite());
    }

    #[test]
    fn parameter_validation() {
        assert!(EllipticFunction::with_parameters(Lattice::square(), 7, 1e-8).is_err());
        assert!(EllipticFunction::with_parameters(Lattice::square(), 8, 0.0).is_err());
    }

    #[test]
    fn critical_values_square_lattice() {
        let cv = sq().critical_values();
        let [e1, e2, e3] = cv.values;
        assert!(e2.norm() < 1e-12);
        assert!(e1.im.abs() < 1e-12 && e3.im.abs() < 1e-12);
        assert!((e1 + e3).norm() < 1e-12);
        assert!(cv.residuals.iter().all(|r| *r < 1e-10));
    }

    #[test]
    fn lattice_points_small_disks() {
        let lat = Lattice::square();
        assert_eq!(lat.points_in_disk(c64(0.0, 0.0), 1.0).len(), 5);
        assert_eq!(lat.points_in_disk(c64(0.0, 0.0), 0.5), vec![c64(0.0, 0.0)]);
    }

    #[test]
    fn solve_finds_both_roots() {
        let f = EllipticFunction::new(Lattice::new(c64(1.0, 0.0), c64(0.3, 1.1)).unwrap());
        let a = c64(2.0, 1.0);
        let roots = f.solve(a);
        assert_eq!(roots.iter().map(|r| r.1).sum::<u32>(), 2);
        for (u, _) in &roots {
            assert!((f.wp(*u).finite().unwrap() - a).norm() < 1e-10);
        }
        let zero = sq().solve(c64(0.0, 0.0));
        assert_eq!(zero.len(), 1);
        assert_eq!(zero[0].1, 2);
    }
}
