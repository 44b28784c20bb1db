use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use speiser::elliptic::{EllipticFunction, Lattice};
use speiser::models::{
    default_offset, BoundaryMap, Branch, GluedOrderTwo, InterpolationStack, ModelFunction, PowerLift, WpCosh, WpExp,
    WpPower,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn square() -> EllipticFunction {
    EllipticFunction::new(Lattice::square())
}

fn power(rho: f64) -> ModelFunction {
    let f = square();
    let off = default_offset(&f);
    ModelFunction::WpPower(WpPower::new(f, rho, off, Branch::Plus).unwrap())
}

fn wpexp() -> ModelFunction {
    let f = square();
    let off = default_offset(&f);
    ModelFunction::WpExp(WpExp::new(f, off).unwrap())
}

#[test]
fn power_pole_count_matches_brute_force_preimages() {
    let m = power(1.0);
    let off = default_offset(m.elliptic());
    let big_r: f64 = 100.0;
    // a = (lambda - c)^2 with lambda - c in the right half-plane image of sqrt
    let mut brute = 0;
    for i in -20i32..=20 {
        for j in -20i32..=20 {
            let w = c(i as f64, j as f64) - off;
            let t = w.arg();
            if w.norm_sqr() <= big_r && t > -PI / 2.0 && t <= PI / 2.0 {
                brute += 1;
            }
        }
    }
    let poles = m.poles_in_disk(big_r).unwrap();
    assert_eq!(poles.len(), brute);
    for p in &poles {
        assert!(m.eval(p.location).unwrap().is_infinite());
    }
}

#[test]
fn power_coefficients_follow_the_local_derivative() {
    for rho in [0.5, 1.0, 1.5] {
        let m = power(rho);
        for p in m.poles_in_disk(40.0).unwrap().iter().filter(|p| p.location.norm() > 1.0) {
            let expected = 2.0 / rho * p.location.norm().powf(1.0 - rho / 2.0);
            assert!((p.coefficient - expected).abs() < 1e-10 * expected);
        }
    }
}

#[test]
fn exp_coefficients_and_local_expansion() {
    let m = wpexp();
    let poles = m.poles_in_disk(3.0).unwrap();
    assert!(poles.len() >= 20);
    for p in poles.iter().take(20) {
        let expected = (-p.location.re).exp();
        assert!((p.coefficient - expected).abs() < 1e-12 * expected);
        let measured = m.measured_coefficient(p.location, 1e-4 * p.coefficient).unwrap();
        assert!((measured - expected).abs() < 1e-3 * expected);
    }
}

#[test]
fn power_two_agrees_with_shifted_plain_at_random_points() {
    let f = square();
    let off = c(0.21, 0.13);
    let m = ModelFunction::WpPower(WpPower::new(f.clone(), 2.0, off, Branch::Plus).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 1000 {
        let z = c(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        if f.lattice().reduce(z + off).0.norm() < 0.05 {
            continue;
        }
        let a = m.eval(z).unwrap().finite().unwrap();
        let b = f.wp(z + off).finite().unwrap();
        assert!((a - b).norm() <= 1e-10 * (1.0 + b.norm()));
        checked += 1;
    }
}

#[test]
fn cosh_poles_sit_at_cosh_of_integers() {
    let m = ModelFunction::WpCosh(WpCosh::standard(12, 1e-8).unwrap());
    let poles = m.poles_in_disk(5f64.cosh() * 1.0001).unwrap();
    assert_eq!(poles.len(), 6);
    for (k, p) in poles.iter().enumerate() {
        assert!((p.location - c((k as f64).cosh(), 0.0)).norm() < 1e-9 * (k as f64).cosh());
        assert_eq!(p.multiplicity, if k == 0 { 1 } else { 2 });
    }
}

#[test]
fn large_values_only_near_listed_poles() {
    for (m, r, step) in [(wpexp(), 3.0, 0.01), (power(1.0), 30.0, 0.05)] {
        let threshold = 1e6;
        let poles = m.poles_in_disk(r + 1.0).unwrap();
        let n = (2.0 * r / step) as i64;
        let (mut found, mut stray) = (0, 0);
        for i in 0..=n {
            for j in 0..=n {
                let z = c(-r + i as f64 * step + 1.3e-3, -r + j as f64 * step + 0.7e-3);
                if z.norm() > r || m.on_seam(z) {
                    continue;
                }
                let v = match m.eval(z) {
                    Ok(v) => v,
                    Err(_) => continue,
                };
                if v.finite().is_none_or(|w| w.norm() > threshold) {
                    found += 1;
                    if !poles.iter().any(|p| (z - p.location).norm() <= 2.0 * p.coefficient / threshold.sqrt()) {
                        stray += 1;
                    }
                }
            }
        }
        assert_eq!(stray, 0, "{}: {stray} of {found} large samples away from poles", m.name());
    }
}

#[test]
fn lift_poles_are_root_fibres() {
    for n in [2u32, 3] {
        let inner = power(1.0);
        let lift = ModelFunction::PowerLift(PowerLift::new(inner.clone(), n).unwrap());
        let r: f64 = 4.0;
        let lifted = lift.poles_in_disk(r).unwrap();
        let base = inner.poles_in_disk(r.powi(n as i32)).unwrap();
        assert_eq!(lifted.len(), n as usize * base.len());
        for p in &lifted {
            let w = p.location.powu(n);
            assert!(base.iter().any(|q| (q.location - w).norm() < 1e-8 * (1.0 + w.norm())));
            assert!(lift.eval(p.location).unwrap().is_infinite());
        }
    }
}

#[test]
fn interpolation_jacobian_matches_finite_differences() {
    let (a, a_prime, b) = (1.3, 0.8, 0.1);
    let stack = InterpolationStack::new(
        a,
        a_prime,
        b,
        BoundaryMap::Sine { amplitude: 0.05, harmonic: 1 },
        BoundaryMap::Sine { amplitude: 0.1, harmonic: 1 },
    )
    .unwrap();
    let h = a_prime - b;
    let d1 = |x: f64| 1.0 + 0.05 * 2.0 * PI * (2.0 * PI * x).cos();
    let d2 = |x: f64| 1.0 + 0.1 * 2.0 * PI * (2.0 * PI * x).cos();
    let step = 1e-5;
    for i in 0..20 {
        for j in 1..10 {
            let z = c(i as f64 / 20.0, h * j as f64 / 10.0);
            let (x, y) = (z.re, z.im);
            let closed = (a - b) / h * ((1.0 - y / h) * d1(x) + y / h * d2(x));
            let l = |w: Complex64| stack.interpolation_map(w).unwrap();
            let lx = (l(z + step) - l(z - step)) / (2.0 * step);
            let ly = (l(z + c(0.0, step)) - l(z - c(0.0, step))) / (2.0 * step);
            let fd = lx.re * ly.im - ly.re * lx.im;
            let jac = stack.jacobian(z).unwrap();
            assert!((jac - closed).abs() < 1e-12);
            assert!((fd - closed).abs() < 1e-6, "at {z}: {fd} vs {closed}");
        }
    }
}

#[test]
fn dilatation_cases() {
    let id = InterpolationStack::new(1.0, 1.0, 0.0, BoundaryMap::Identity, BoundaryMap::Identity).unwrap();
    assert!((id.max_dilatation(32, 16).unwrap() - 1.0).abs() < 1e-14);
    let sine = InterpolationStack::new(
        1.0,
        1.0,
        0.0,
        BoundaryMap::Identity,
        BoundaryMap::Sine { amplitude: 0.1, harmonic: 1 },
    )
    .unwrap();
    let k = sine.max_dilatation(64, 32).unwrap();
    assert!(k.is_finite() && k > 1.0);
    for i in 0..16 {
        for j in 0..=8 {
            let z = c(i as f64 / 16.0 + 0.01, j as f64 / 8.0);
            let here = sine.dilatation(z).unwrap();
            let shifted = sine.dilatation(z + 1.0).unwrap();
            assert!((here - shifted).abs() < 1e-12);
            assert!(here <= k * (1.0 + 1e-3));
        }
    }
}

#[test]
fn gluing_residuals() {
    let samples: Vec<f64> = (0..200).map(|k| k as f64 / 200.0 + 1e-3).collect();
    let id = InterpolationStack::identity;
    let upper = EllipticFunction::new(Lattice::new(c(1.0, 0.0), c(0.3, 1.1)).unwrap());

    let same = GluedOrderTwo::new(upper.clone(), upper.clone(), id(), id(), c(0.2, 0.3), c(0.2, 0.3)).unwrap();
    assert!(same.gluing_residual(&samples).unwrap() < 1e-10);

    // reflection: wp for the conjugate lattice at conj(z) is conj(wp(z)),
    // so the halves agree wherever the upper value is real
    for (tau, off) in [(c(0.0, 1.3), c(0.3, 0.65)), (c(0.5, 0.9), c(0.2, 0.0))] {
        let up = EllipticFunction::new(Lattice::new(c(1.0, 0.0), tau).unwrap());
        let down = EllipticFunction::new(Lattice::new(c(1.0, 0.0), tau.conj()).unwrap());
        let glued = GluedOrderTwo::new(up, down, id(), id(), off, off.conj()).unwrap();
        for &x in &samples {
            let v = glued.upper_value(c(x, 0.0)).unwrap().finite().unwrap();
            assert!(v.im.abs() < 1e-9 * (1.0 + v.norm()));
        }
        assert!(glued.gluing_residual(&samples).unwrap() < 1e-8);
    }

    let lower = EllipticFunction::new(Lattice::new(c(1.0, 0.0), c(0.1, 0.8)).unwrap());
    let mismatched = GluedOrderTwo::new(upper, lower, id(), id(), c(0.2, 0.3), c(0.1, -0.2)).unwrap();
    let r = mismatched.gluing_residual(&samples).unwrap();
    assert!(r > 1e-3 && r <= 2.0);
}
