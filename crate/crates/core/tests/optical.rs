use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_4, PI};
use zn_sim::optical::*;

fn window() -> Window {
    Window { x0: -0.5, x1: 2.5, y0: -0.5, y1: 2.5 }
}

#[test]
fn tunneling_shape_lowers_the_even_horizontal_barrier_to_one_twelfth() {
    // along y = 0 with f = 2, φ = π/4: V = (s² − s + 1)/3, s = sin πx; max 1/3, min 1/4
    let shaped = segment_barrier((0.0, 0.0), (1.0, 0.0), &ShapingStep::Eh.hold(2.0), 6000).unwrap();
    assert!((shaped - 1.0 / 12.0).abs() < 1e-6, "{shaped}");
    let standard = segment_barrier((0.0, 0.0), (1.0, 0.0), &Shape::STANDARD, 6000).unwrap();
    assert!((standard - 1.0).abs() < 1e-12);
}

#[test]
fn odd_link_is_not_lowered_by_the_even_shape() {
    let s = ShapingStep::Eh.hold(2.0);
    let even = segment_barrier((0.0, 0.0), (1.0, 0.0), &s, 4000).unwrap();
    let odd = segment_barrier((1.0, 0.0), (2.0, 0.0), &s, 4000).unwrap();
    assert!(odd > even + 0.1, "even {even}, odd {odd}");
}

#[test]
fn mass_shape_raises_even_sites() {
    let h = 0.3;
    let s = ShapingStep::Mass.hold(h);
    let even = v_mat(0.0, 0.0, &s).unwrap();
    let odd = v_mat(1.0, 0.0, &s).unwrap();
    assert!((even - odd - h / (1.0 + h)).abs() < 1e-14);
}

#[test]
fn standard_minima_are_the_sites() {
    let m = v_mat_minima(&Shape::STANDARD, &window()).unwrap();
    assert_eq!(m.len(), 9);
    for p in &m {
        assert!((p.x - p.x.round()).abs() < 1e-9 && (p.y - p.y.round()).abs() < 1e-9);
        assert!(p.value.abs() < 1e-15);
    }
}

#[test]
fn schedules_start_and_end_standard_and_differ_when_held() {
    let mut holds = Vec::new();
    for step in ShapingStep::ALL {
        let s = shaping_schedule(step, 2.0, 1.0, 0.2, 101).unwrap();
        assert_eq!(s.first().unwrap().shape, Shape::STANDARD);
        let last = s.last().unwrap().shape;
        assert!(last.f.abs() + last.g.abs() + last.h.abs() + last.phi.abs() < 1e-14);
        // ramps are monotone on the way up
        let key = |p: &ShapePoint| p.shape.f + p.shape.g + p.shape.h;
        assert!(s[..20].windows(2).all(|w| key(&w[1]) >= key(&w[0])));
        holds.push(s[50].shape);
    }
    for i in 0..holds.len() {
        for j in i + 1..holds.len() {
            assert_ne!(holds[i], holds[j]);
        }
    }
    assert_eq!(ShapingStep::Oh.hold(2.0).phi, -FRAC_PI_4);
    assert!(shaping_schedule(ShapingStep::Eh, 2.0, 1.0, 0.6, 10).is_err());
}

#[test]
fn validity_boundary_and_invalid_region() {
    let edge = validity_boundary();
    assert!((edge - 0.311397).abs() < 1e-5, "{edge}");
    assert!(!polarization_vectors(0.0).valid);
    assert!(!polarization_vectors(-0.1).valid);
    assert!(!polarization_vectors(edge + 1e-6).valid);
    assert!(polarization_vectors(edge - 1e-6).valid);
}

#[test]
fn wavelength_constraint() {
    let lam = 1.0;
    assert!(lattice_spacing_ok(0.36, lam));
    assert!(!lattice_spacing_ok(0.35, lam));
}

#[test]
fn xi_one_tenth_triad_is_orthonormal() {
    let p = polarization_vectors(0.1);
    assert!(p.valid);
    assert!(max_cross_dot(&p) < 1e-10);
    assert!(max_transverse_dot(&p) < 1e-10);
}

proptest! {
    #[test]
    fn triads_are_orthogonal_and_transverse(xi in 1e-4f64..0.3113) {
        let p = polarization_vectors(xi);
        prop_assert!(p.valid);
        let k = wave_vectors(xi);
        for i in 0..3 {
            prop_assert!((dot(&p.e[i], &p.e[i]) - 1.0).abs() < 1e-12);
            prop_assert!(dot(&p.e[i], &k[i]).abs() < 1e-9);
            for j in i + 1..3 {
                prop_assert!(dot(&p.e[i], &p.e[j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences(
        f in 0.0f64..3.0, g in 0.0f64..3.0, h in 0.0f64..1.0, phi in -PI..PI, x in -1.0f64..3.0, y in -1.0f64..3.0
    ) {
        let s = Shape { f, g, h, phi };
        let e = 1e-5;
        let gr = v_mat_gradient(x, y, &s).unwrap();
        let fx = (v_mat(x + e, y, &s).unwrap() - v_mat(x - e, y, &s).unwrap()) / (2.0 * e);
        let fy = (v_mat(x, y + e, &s).unwrap() - v_mat(x, y - e, &s).unwrap()) / (2.0 * e);
        prop_assert!((gr[0] - fx).abs() < 1e-7 && (gr[1] - fy).abs() < 1e-7);
        let hs = v_mat_hessian(x, y, &s).unwrap();
        let hxx = (v_mat_gradient(x + e, y, &s).unwrap()[0] - v_mat_gradient(x - e, y, &s).unwrap()[0]) / (2.0 * e);
        let hyy = (v_mat_gradient(x, y + e, &s).unwrap()[1] - v_mat_gradient(x, y - e, &s).unwrap()[1]) / (2.0 * e);
        prop_assert!((hs[0][0] - hxx).abs() < 1e-5 && (hs[1][1] - hyy).abs() < 1e-5);
    }
}
