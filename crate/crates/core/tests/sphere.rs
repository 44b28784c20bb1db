use std::f64::consts::PI;

use num_complex::Complex64;
use speiser::sphere::{
    euclidean_density, logarea, spherical_area, spherical_density, twb_finiteness, Excision, LogPolarGrid,
    PlanarRegion,
};

/// `int_0^1 (2/y) arctan(y/X) dy`, the log-area of the strip outside
/// `|x| <= X`, by composite Simpson.
fn strip_tail(x: f64) -> f64 {
    let n = 2000;
    let h = 1.0 / n as f64;
    let g = |y: f64| if y == 0.0 { 2.0 / x } else { 2.0 / y * (y / x).atan() };
    (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            w * g(k as f64 * h)
        })
        .sum::<f64>()
        * h
        / 3.0
}

#[test]
fn strip_minus_disk_logarea() {
    // over the whole strip the value is int_0^1 2 arcsin(y)/y dy = pi log 2
    let x = 40.0;
    let region = PlanarRegion::rect(-x, x, 0.0, 1.0).unwrap().with_resolution(16384, 256).unwrap();
    let la = logarea(&region, Excision::UnitDisk).unwrap();
    let expected = PI * 2f64.ln() - strip_tail(x);
    assert!(!la.divergent);
    assert!((la.estimate - expected).abs() < 5e-3, "{} vs {expected}", la.estimate);
}

#[test]
fn dilatation_two_on_a_strip_is_finite() {
    let grid = LogPolarGrid {
        octaves: 10,
        radial_per_octave: 32,
        angular: 1 << 16,
    };
    let t = twb_finiteness(|z| if z.im > 0.0 && z.im < 1.0 { 2.0 } else { 1.0 }, grid).unwrap();
    let outside = strip_tail(1024.0);
    assert!((t.estimate - (PI * 2f64.ln() - outside)).abs() < 1e-2, "{}", t.estimate);
    let conformal = twb_finiteness(|_| 1.0, grid).unwrap();
    assert!(conformal.finite && conformal.estimate == 0.0);
}

#[test]
fn cap_areas() {
    for r in [0.5, 1.0, 2.0] {
        let disk = PlanarRegion::disk(Complex64::new(0.0, 0.0), r).unwrap().with_resolution(1024, 1024).unwrap();
        let expected = 4.0 * PI * r * r / (1.0 + r * r);
        assert!((spherical_area(&disk) / expected - 1.0).abs() < 2e-3);
    }
    let small = PlanarRegion::disk(Complex64::new(0.0, 0.0), 1.0).unwrap().with_resolution(1024, 1024).unwrap();
    let big = PlanarRegion::disk(Complex64::new(0.0, 0.0), 2.0).unwrap().with_resolution(1024, 1024).unwrap();
    // caps 2 pi and 16 pi / 5
    assert!((spherical_density(&small, &big).unwrap() - 5.0 / 8.0).abs() < 5e-3);
    assert!((euclidean_density(&small, &big).unwrap() - 0.25).abs() < 5e-3);
}
