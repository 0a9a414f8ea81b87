use std::f64::consts::PI;

use proptest::prelude::*;
use ptcircle::inverse::{fit_parameters, SpectrumPrefix};
use ptcircle::kernels::{box_kernel, BoxCase, KernelQuery, Wall};
use ptcircle::spectrum::{full_spectrum, sector_matrix};
use ptcircle::twopoint::{diagonalize_u, doubled_state, undoubled_state};
use ptcircle::u2core::{from_matrix, p_theta_map, parity_map, pt_map, time_reversal_map, to_matrix, CharacteristicMatrix, Geometry, Mat2, C64};

fn any_u() -> impl Strategy<Value = CharacteristicMatrix> {
    (0.0..PI, 0.0..PI / 2.0, 0.0..2.0 * PI, 0.0..2.0 * PI).prop_map(|(xi, chi, p1, p2)| {
        CharacteristicMatrix::new(xi, C64::from_polar(chi.cos(), p1), C64::from_polar(chi.sin(), p2)).unwrap()
    })
}

fn any_geometry() -> impl Strategy<Value = Geometry> {
    (0.3..3.0f64, 0.2..3.0f64).prop_map(|(l, l0)| Geometry::new(l, l0).unwrap())
}

fn diff(a: &Mat2, b: &Mat2) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrix_round_trip(u in any_u()) {
        let m = to_matrix(&u);
        let back = to_matrix(&from_matrix(&m).unwrap());
        prop_assert!(diff(&m, &back) < 1e-12);
    }

    #[test]
    fn symmetry_maps_are_involutions(u in any_u()) {
        let m = to_matrix(&u);
        for f in [parity_map, time_reversal_map, pt_map] {
            prop_assert!(diff(&to_matrix(&f(&f(&u))), &m) < 1e-12);
        }
    }

    #[test]
    fn symmetry_maps_keep_the_triple(u in any_u(), theta in 0.0..2.0 * PI) {
        let t = u.spectral_triple();
        for v in [parity_map(&u), time_reversal_map(&u), pt_map(&u), p_theta_map(&u, theta)] {
            prop_assert!(v.spectral_triple().distance(&t) < 1e-12);
        }
    }

    #[test]
    fn levels_are_null_points_of_the_boundary_operator(u in any_u(), g in any_geometry()) {
        let sp = full_spectrum(&u, &g, 12).unwrap();
        prop_assert!(sp.positive().count() == 12);
        prop_assert!(sp.nonpositive().count() <= 2);
        for w in sp.levels.windows(2) {
            prop_assert!(w[0].energy < w[1].energy);
        }
        for l in &sp.levels {
            let m = sector_matrix(&u, &g, l.sector, l.wavenumber);
            let [s_max, s_min] = m.singular_values();
            prop_assert!(s_min <= 1e-8 * s_max.max(1.0), "{l:?}: {s_min:e} / {s_max:e}");
        }
    }

    #[test]
    fn fit_recovers_the_triple(u in any_u()) {
        let g = Geometry::unit();
        let sp = full_spectrum(&u, &g, 60).unwrap();
        let fit = fit_parameters(&SpectrumPrefix::from_spectrum(&sp, g)).unwrap();
        prop_assert!(fit.triple.distance(&u.spectral_triple()) < 1e-8, "{:?} vs {:?}", fit.triple, u.spectral_triple());
    }

    #[test]
    fn doubling_is_invertible(re in prop::collection::vec(-1.0..1.0f64, 1..40)) {
        let mut psi: Vec<C64> = re.iter().map(|x| C64::new(*x, 0.5 * x)).collect();
        if psi.len() % 2 == 1 {
            psi.pop();
        }
        prop_assume!(!psi.is_empty());
        prop_assert_eq!(undoubled_state(&doubled_state(&psi).unwrap()), psi);
    }

    #[test]
    fn diagonalisation_reconstructs(u in any_u()) {
        let (v, tp, tm) = diagonalize_u(&u);
        prop_assert!(tp >= tm);
        prop_assert!((v.determinant() - C64::new(1.0, 0.0)).norm() < 1e-10);
        let d = Mat2::new(C64::from_polar(1.0, tp), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::from_polar(1.0, tm));
        prop_assert!(diff(&(v.adjoint() * d * v), &to_matrix(&u)) < 1e-10);
    }

    #[test]
    fn euclidean_box_kernel_is_symmetric(a in 0.0..1.0f64, b in 0.0..1.0f64, tau in 0.01..1.0f64, w0 in any::<bool>(), w1 in any::<bool>()) {
        let wall = |d: bool| if d { Wall::Dirichlet } else { Wall::Neumann };
        let case = BoxCase::new(wall(w0), wall(w1));
        let g = Geometry::unit();
        let k_ab = box_kernel(case, &g, &KernelQuery::euclidean(a, b, tau, 1e-14).unwrap()).unwrap();
        let k_ba = box_kernel(case, &g, &KernelQuery::euclidean(b, a, tau, 1e-14).unwrap()).unwrap();
        prop_assert!((k_ab - k_ba).norm() <= 1e-12 * k_ab.norm().max(1.0));
    }
}
