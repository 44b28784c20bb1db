use std::f64::consts::PI;

use speiser::elliptic::{EllipticFunction, Lattice};
use speiser::mcmullen::{escaping_sampler, SamplerOptions};
use speiser::models::{default_offset, ModelFunction, WpExp};
use speiser::orbits::{iterate, render_escape_field, Classification, Schedule};
use speiser::sphere::PlanarRegion;

fn wpexp() -> ModelFunction {
    let f = EllipticFunction::new(Lattice::square());
    let off = default_offset(&f);
    ModelFunction::WpExp(WpExp::new(f, off).unwrap())
}

#[test]
fn sampled_seeds_escape_to_depth_five() {
    let m = wpexp();
    let region = PlanarRegion::rect(2.0, 4.0, -1.0, 1.0).unwrap().with_resolution(16, 16).unwrap();
    let points = escaping_sampler(&m, &region, &Schedule::Exponential, SamplerOptions { depth: 5 }).unwrap();
    assert!(!points.is_empty());
    for p in points.iter().take(20) {
        let rec = iterate(&m, p.z, &Schedule::Exponential, 5).unwrap();
        assert!(
            matches!(rec.classification, Classification::Escaping { depth: 5 } | Classification::Prepole { .. }),
            "{}: {:?}",
            p.z,
            rec.classification
        );
        for (k, w) in rec.trajectory.iter().enumerate() {
            assert!(w.norm() > ((k + 1) as f64).exp());
        }
    }
}

#[test]
fn infinite_schedule_never_escapes() {
    let m = wpexp();
    for k in 0..20 {
        let z = num_complex::Complex64::new(0.2 * k as f64, 0.3 * k as f64 - 3.0);
        let rec = iterate(&m, z, &Schedule::Infinite, 8).unwrap();
        // orbits that outgrow double precision stop as undetermined, still
        // without a single step counted as escaping
        assert!(matches!(
            rec.classification,
            Classification::Bounded | Classification::Prepole { .. } | Classification::Undetermined { depth: 0 }
        ));
    }
}

#[test]
fn refining_keeps_unchanged_centres() {
    let m = wpexp();
    let coarse =
        render_escape_field(&m, &PlanarRegion::rect(0.0, 4.0, -PI, PI).unwrap().with_resolution(24, 24).unwrap(), &Schedule::Exponential, 4)
            .unwrap();
    let fine =
        render_escape_field(&m, &PlanarRegion::rect(0.0, 4.0, -PI, PI).unwrap().with_resolution(72, 72).unwrap(), &Schedule::Exponential, 4)
            .unwrap();
    let mut compared = 0;
    for j in 0..24 {
        for i in 0..24 {
            let (a, b) = (coarse.center(i, j), fine.center(3 * i + 1, 3 * j + 1));
            if a == b {
                compared += 1;
                assert_eq!(coarse.pixel(i, j), fine.pixel(3 * i + 1, 3 * j + 1));
            }
        }
    }
    assert!(compared > 100, "only {compared} shared centres");
}

#[test]
fn escaping_area_grows_with_real_extent() {
    // e^z equidistributes modulo the lattice, so the escaping density is
    // the same in every window; the escaping area grows with the window
    let m = wpexp();
    let measure = |x_max: f64| {
        let region = PlanarRegion::rect(0.0, x_max, -PI, PI).unwrap().with_resolution(128, 128).unwrap();
        let field = render_escape_field(&m, &region, &Schedule::Exponential, 2).unwrap();
        let fraction = field.count(|c| matches!(c, Classification::Escaping { .. })) as f64 / field.pixels.len() as f64;
        (fraction, fraction * x_max * 2.0 * PI)
    };
    let (narrow, wide) = (measure(2.0), measure(4.0));
    assert!(wide.1 > 1.5 * narrow.1, "{narrow:?} vs {wide:?}");
    assert!((wide.0 - narrow.0).abs() < 0.01, "{narrow:?} vs {wide:?}");
    assert!(narrow.0 > 0.1);
}
