use std::f64::consts::PI;

use proptest::prelude::*;

use hydrostat::aniso::{fluctuation_spectral, norm_spectral, vertical_mean_spectral};
use hydrostat::random::{band_limited, band_limited_vector, Parity};
use hydrostat::semigroup::{
    apply_heat, apply_projection_eps, apply_split_heat, div_eps, ProjectionSpec, SpectralVec3,
};
use hydrostat::{Grid, PhysicalField, SpectralField};

fn grid() -> Grid {
    Grid::new_3d(8, 12).unwrap()
}

fn vec3(g: &Grid, seed: u64) -> SpectralVec3 {
    let v = band_limited_vector(g, seed, &[None, None, None]);
    [v[0].clone(), v[1].clone(), v[2].clone()]
}

fn inner(a: &SpectralVec3, b: &SpectralVec3) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            x.coeffs()
                .iter()
                .zip(y.coeffs())
                .map(|(p, q)| (p * q.conj()).re)
                .sum::<f64>()
        })
        .sum()
}

fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.sub(b).inverse().max_abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn physical_round_trip(values in prop::collection::vec(-10.0f64..10.0, 8 * 8 * 12)) {
        let g = grid();
        let f = PhysicalField::new(&g, values.clone()).unwrap();
        let back = f.forward().inverse();
        for (a, b) in back.values().iter().zip(&values) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn parseval(seed in any::<u64>()) {
        let g = grid();
        let f = band_limited(&g, seed, None);
        let phys = f.inverse();
        let lhs = phys.map(|v| v * v).integral();
        let rhs: f64 = f.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>() * (2.0 * PI).powi(3);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1.0));
    }

    #[test]
    fn normalized_norm_grows_with_q(seed in any::<u64>(), q1 in 1.0f64..6.0, dq in 0.0f64..6.0) {
        let g = grid();
        let f = band_limited(&g, seed, None);
        let q2 = q1 + dq;
        let n1 = (2.0 * PI).powf(-1.0 / q1) * norm_spectral(std::slice::from_ref(&f), q1).unwrap();
        let n2 = (2.0 * PI).powf(-1.0 / q2) * norm_spectral(std::slice::from_ref(&f), q2).unwrap();
        prop_assert!(n1 <= n2 * (1.0 + 1e-12));
        let ninf = norm_spectral(std::slice::from_ref(&f), f64::INFINITY).unwrap();
        prop_assert!(n2 <= ninf * (1.0 + 1e-12));
    }

    #[test]
    fn norm_triangle_and_scaling(seed in any::<u64>(), q in 1.0f64..8.0, c in -5.0f64..5.0) {
        let g = grid();
        let v = band_limited_vector(&g, seed, &[None, None]);
        let (a, b) = (&v[0], &v[1]);
        let n = |f: &SpectralField| norm_spectral(std::slice::from_ref(f), q).unwrap();
        prop_assert!(n(&a.add(b)) <= (n(a) + n(b)) * (1.0 + 1e-12));
        prop_assert!((n(&a.scale(c)) - c.abs() * n(a)).abs() <= 1e-12 * n(a).max(1.0));
    }

    #[test]
    fn mean_and_fluctuation_split(seed in any::<u64>()) {
        let g = grid();
        let f = band_limited(&g, seed, Some(Parity::Even));
        let sum = vertical_mean_spectral(&f).add(&fluctuation_spectral(&f));
        prop_assert!(max_diff(&sum, &f) < 1e-13);
        let twice = vertical_mean_spectral(&vertical_mean_spectral(&f));
        prop_assert!(max_diff(&twice, &vertical_mean_spectral(&f)) < 1e-13);
    }

    #[test]
    fn projection_is_orthogonal_projector(s1 in any::<u64>(), s2 in any::<u64>(), eps in 1e-3f64..=1.0) {
        let g = grid();
        let (f, h) = (vec3(&g, s1), vec3(&g, s2));
        let spec = ProjectionSpec::new(eps).unwrap();
        let pf = apply_projection_eps(&f, &spec).unwrap();
        let ph = apply_projection_eps(&h, &spec).unwrap();
        let ppf = apply_projection_eps(&pf, &spec).unwrap();
        for c in 0..3 {
            prop_assert!(max_diff(&ppf[c], &pf[c]) < 1e-13);
        }
        prop_assert!(div_eps(&pf, eps).unwrap().inverse().max_abs() < 1e-10);
        let (l, r) = (inner(&pf, &h), inner(&f, &ph));
        prop_assert!((l - r).abs() <= 1e-12 * (inner(&f, &f) * inner(&h, &h)).sqrt().max(1.0));
        prop_assert!(inner(&pf, &pf) <= inner(&f, &f) * (1.0 + 1e-12));
    }

    #[test]
    fn projection_commutes_with_heat(seed in any::<u64>(), eps in 1e-3f64..=1.0, t in 1e-3f64..2.0) {
        let g = grid();
        let f = vec3(&g, seed);
        let spec = ProjectionSpec::new(eps).unwrap();
        let heat = |v: &SpectralVec3| -> SpectralVec3 {
            [apply_heat(&v[0], t).unwrap(), apply_heat(&v[1], t).unwrap(), apply_heat(&v[2], t).unwrap()]
        };
        let a = apply_projection_eps(&heat(&f), &spec).unwrap();
        let b = heat(&apply_projection_eps(&f, &spec).unwrap());
        for c in 0..3 {
            prop_assert!(max_diff(&a[c], &b[c]) < 1e-13);
        }
    }

    #[test]
    fn heat_semigroup(seed in any::<u64>(), t1 in 1e-3f64..1.0, t2 in 1e-3f64..1.0) {
        let g = grid();
        let f = band_limited(&g, seed, None);
        let two = apply_heat(&apply_heat(&f, t1).unwrap(), t2).unwrap();
        let one = apply_heat(&f, t1 + t2).unwrap();
        prop_assert!(max_diff(&two, &one) < 1e-13);
        let split = apply_split_heat(&f, t1, t1).unwrap();
        prop_assert!(max_diff(&split, &apply_heat(&f, t1).unwrap()) < 1e-13);
        // contraction in every L∞_H L^q
        let n = |x: &SpectralField| norm_spectral(std::slice::from_ref(x), 1.0).unwrap();
        prop_assert!(n(&one) <= n(&f) * (1.0 + 1e-12));
    }
}
