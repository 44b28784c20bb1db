use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use speiser::covering::{
    chain_diameter, check_containment, component_bounds, local_inverse, min_escape_radius, BranchChain, DEFAULT_C1,
};
use speiser::elliptic::{EllipticFunction, Lattice};
use speiser::models::{default_offset, Branch, ModelFunction, PoleDatum, WpPower};
use speiser::sphere::{chordal_distance, ExtendedComplex};

fn power_one() -> ModelFunction {
    let f = EllipticFunction::new(Lattice::square());
    let off = default_offset(&f);
    ModelFunction::WpPower(WpPower::new(f, 1.0, off, Branch::Plus).unwrap())
}

#[test]
fn components_lie_between_the_two_disks() {
    let m = power_one();
    let big_r = 1e3;
    assert!(min_escape_radius(&m) < big_r);
    let poles: Vec<PoleDatum> = m
        .poles_in_disk(40.0)
        .unwrap()
        .into_iter()
        .filter(|p| p.location.norm() > 2.0 && p.location.arg().abs() < 0.8 * PI)
        .step_by(5)
        .take(10)
        .collect();
    assert_eq!(poles.len(), 10);
    for p in &poles {
        let comp = component_bounds(p, big_r).unwrap();
        let expected_outer = 2.0 * (2.0 * p.location.norm().sqrt()) / big_r.sqrt();
        assert!((comp.outer_radius - expected_outer).abs() < 1e-9 * expected_outer);
        let check = check_containment(&m, p, big_r, 64).unwrap();
        assert!(check.holds(), "pole {}: inside {}, ring {}", p.location, check.min_inside, check.max_on_ring);
    }
}

/// Composes the local inverses of a two-pole chain over a sample of the
/// escape region `|w| > R` and returns the measured diameters.
fn measured_diameters(a: [Complex64; 2], b: [Complex64; 2], big_r: f64) -> (f64, f64) {
    let mut pts = Vec::new();
    for i in 0..60 {
        let modulus = big_r * 10f64.powf(i as f64 / 6.0);
        for j in 0..48 {
            let w = Complex64::from_polar(modulus, -PI + 2.0 * PI * (j as f64 + 0.5) / 48.0);
            let u = local_inverse(a[1], b[1], w);
            pts.push(local_inverse(a[0], b[0], u));
        }
    }
    let (mut euclid, mut chordal) = (0.0f64, 0.0f64);
    for p in &pts {
        for q in &pts {
            euclid = euclid.max((p - q).norm());
            chordal = chordal.max(chordal_distance(ExtendedComplex::Finite(*p), ExtendedComplex::Finite(*q)));
        }
    }
    (euclid, chordal)
}

#[test]
fn two_step_chain_bound_exceeds_composed_diameter() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let big_r: f64 = 100.0;
    for _ in 0..20 {
        let a: [Complex64; 2] = std::array::from_fn(|_| {
            Complex64::from_polar(big_r * rng.gen_range(1.0..20.0), rng.gen_range(-PI..PI))
        });
        let b: [Complex64; 2] =
            std::array::from_fn(|_| Complex64::from_polar(rng.gen_range(0.1..10.0), rng.gen_range(-PI..PI)));
        let chain = BranchChain::new(vec![(a[0], b[0].norm()), (a[1], b[1].norm())], DEFAULT_C1).unwrap();
        let bound = chain_diameter(&chain, big_r).unwrap();
        let (euclid, chordal) = measured_diameters(a, b, big_r);
        assert!(euclid <= bound.euclidean, "measured {euclid} vs bound {}", bound.euclidean);
        assert!(chordal <= bound.spherical, "measured {chordal} vs bound {}", bound.spherical);
    }
}

#[test]
fn identical_poles_decay_geometrically() {
    let (rho, big_r): (f64, f64) = (1.0, 1e4);
    let a = Complex64::new(2.0 * big_r, 0.0);
    let b = a.norm().powf(1.0 - rho / 2.0);
    for l in 1..=6 {
        let chain = BranchChain::new(vec![(a, b); l], DEFAULT_C1).unwrap();
        let d = chain_diameter(&chain, big_r).unwrap();
        let expected =
            DEFAULT_C1.powi(l as i32 - 1) * 32.0 / big_r.sqrt() * a.norm().powf(-(l as f64) * (1.0 + rho) / 2.0);
        assert!((d.spherical - expected).abs() < 1e-12 * expected);
    }
}
