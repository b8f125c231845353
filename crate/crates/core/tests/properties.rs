use escobar_lab::functional::Functional;
use escobar_lab::geometry::flat_ball;
use escobar_lab::harmonics::{BoundaryField, Spectral};
use escobar_lab::minimizers::{distance_to_family, Bubble, BubbleParams, NormTag};
use escobar_lab::operators::{dtn_eigenvalues, h_half_norm, InteriorField};
use escobar_lab::Dimension;
use nalgebra::DVector;
use proptest::prelude::*;

fn dim(n: usize) -> Dimension {
    Dimension::new(n).unwrap()
}

fn coeffs(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, len)
}

/// Coefficients of a positive field: a dominant constant plus bounded higher modes.
fn positive_field(n: usize, degree: usize) -> impl Strategy<Value = BoundaryField> {
    let len = Spectral::for_degree(dim(n), degree).len();
    coeffs(len).prop_map(move |mut c| {
        c[0] = 6.0;
        let scale = 0.05;
        for x in c.iter_mut().skip(1) {
            *x *= scale;
        }
        BoundaryField::new(dim(n), degree, DVector::from_vec(c)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval_holds_on_the_grid(n in 3usize..=4, degree in 0usize..=6, seed in coeffs(120)) {
        let s = Spectral::for_degree(dim(n), degree);
        let c = DVector::from_iterator(s.len(), seed.iter().copied().cycle().take(s.len()));
        let samples = s.synthesize_coeffs(&c);
        let squares: Vec<f64> = samples.iter().map(|v| v * v).collect();
        let integral = s.integrate(&squares).unwrap();
        prop_assert!((integral - c.norm_squared()).abs() < 1e-11 * (1.0 + c.norm_squared()));
    }

    #[test]
    fn analysis_inverts_synthesis(n in 3usize..=4, degree in 0usize..=6, seed in coeffs(120)) {
        let s = Spectral::for_degree(dim(n), degree);
        let c = DVector::from_iterator(s.len(), seed.iter().copied().cycle().take(s.len()));
        let back = s.analyze_samples(&s.synthesize_coeffs(&c));
        prop_assert!((back - &c).amax() < 1e-12);
    }

    #[test]
    fn dtn_spectrum_is_linear_in_degree(n in 3usize..=4, degree in 0usize..=10) {
        let s = Spectral::for_degree(dim(n), degree);
        let eig = dtn_eigenvalues(s.basis());
        let c_n = dim(n).c_n();
        for (e, l) in eig.iter().zip(s.basis().degrees()) {
            prop_assert!((e - c_n * l as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn quotient_is_scale_invariant(v in positive_field(3, 4), t in 0.1..10.0f64) {
        let f = Functional::new(&flat_ball(3).unwrap(), 4).unwrap();
        let a = f.eval_qtilde(&v).unwrap();
        let b = f.eval_qtilde(&v.scaled(t)).unwrap();
        prop_assert!((a - b).abs() < 1e-11 * a);
    }

    #[test]
    fn quotient_is_bounded_below_by_the_ball_constant(v in positive_field(3, 4)) {
        let f = Functional::new(&flat_ball(3).unwrap(), 4).unwrap();
        let q = f.eval_qtilde(&v).unwrap();
        prop_assert!(q >= dim(3).ball_sobolev_quotient() - 1e-10);
    }

    #[test]
    fn harmonic_extension_preserves_the_quotient(v in positive_field(4, 3)) {
        let f = Functional::new(&flat_ball(4).unwrap(), 3).unwrap();
        let a = f.eval_qtilde(&v).unwrap();
        let b = f.eval_q(&InteriorField::harmonic(v)).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn bubble_quotient_is_the_ball_constant(
        amp in 0.2..5.0f64,
        chart in prop::collection::vec(-0.5..0.5f64, 3),
    ) {
        let b = Bubble::new(dim(3), BubbleParams::new(amp, chart).unwrap()).unwrap();
        let q = b.exact_qtilde();
        prop_assert!((q - dim(3).ball_sobolev_quotient()).abs() < 1e-8, "{}", q);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn relative_distance_is_scale_invariant(v in positive_field(3, 4), t in 0.2..5.0f64) {
        let a = distance_to_family(&v, NormTag::Hhalf).unwrap().value;
        let b = distance_to_family(&v.scaled(t), NormTag::Hhalf).unwrap().value;
        prop_assert!((a - b).abs() < 1e-6, "{} {}", a, b);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn distance_is_bounded_by_the_constant_fit(v in positive_field(3, 4)) {
        // The constant is a bubble, so the best fit is no worse than projecting onto it.
        let d = distance_to_family(&v, NormTag::Hhalf).unwrap().value;
        let mut rest = v.clone();
        rest.coeffs[0] = 0.0;
        let bound = h_half_norm(&rest) / h_half_norm(&v);
        prop_assert!(d <= bound + 1e-9, "{} {}", d, bound);
    }
}
