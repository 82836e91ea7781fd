use num_traits::ToPrimitive;
use proptest::prelude::*;
use quatma::grid::{
    integrate, integrate_volume, ma_density, ma_top_raw, mollify, read_field, stokes_residual, write_field, Grid,
    GridField, GridForm, MeasureDensity,
};
use quatma::poly::{quadratic_from_matrix, random_form, random_psd_hyperhermitian, PolyCalculus};
use quatma::seeding::trial_rng;

fn sample(grid: Grid, p: &quatma::poly::PolyField) -> GridField {
    let c = p.compile();
    GridField::from_fn(grid, |x| c.eval_real(x))
}

#[test]
fn density_of_psd_quadratics_matches_the_exact_operator() {
    for (n, m) in [(1, 7), (2, 5)] {
        let grid = Grid::new(n, m, -1.0, 1.0).unwrap();
        let calc = PolyCalculus::new(n).unwrap();
        for t in 0..3 {
            let a = random_psd_hyperhermitian(&mut trial_rng(31, t), n).unwrap();
            let p = quadratic_from_matrix(&a);
            let exact = calc.ma_top(&vec![p.clone(); n]).unwrap().constant_term().re.to_f64().unwrap();
            let u = sample(grid, &p);
            let mu = ma_density(&vec![&u; n]).unwrap();
            for i in grid.interior_indices() {
                assert!((mu.get(i) - exact).abs() <= 1e-8 * (1.0 + exact.abs()), "n={n}: {} vs {exact}", mu.get(i));
            }
            assert_eq!(mu.flagged_nodes, 0);
        }
    }
}

#[test]
fn mixed_density_is_symmetric() {
    let grid = Grid::new(2, 5, -1.0, 1.0).unwrap();
    let mut rng = trial_rng(4, 0);
    let u = sample(grid, &quadratic_from_matrix(&random_psd_hyperhermitian(&mut rng, 2).unwrap()));
    let v = GridField::from_fn(grid, |x| x.iter().map(|t| t.powi(4)).sum::<f64>() + x[0] * x[5]);
    let a = ma_top_raw(&[&u, &v]).unwrap();
    let b = ma_top_raw(&[&v, &u]).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()));
    }
}

#[test]
fn constant_density_integrates_to_box_volume() {
    let grid = Grid::new(1, 9, -0.5, 0.5).unwrap();
    let u = GridField::from_fn(grid, |x| x.iter().map(|t| t * t).sum::<f64>() - 1.0);
    let mu = ma_density(&[&u]).unwrap();
    // Interior cells only: (m - 2)^4 cells of volume h^4.
    let expected = 8.0 * (7.0f64 / 8.0).powi(4);
    assert!((mu.total_mass() - expected).abs() < 1e-9);
}

#[test]
fn field_files_round_trip() {
    let grid = Grid::new(1, 5, -1.0, 2.0).unwrap();
    let u = GridField::from_fn(grid, |x| x[0] - 2.0 * x[3]);
    let dir = std::env::temp_dir().join(format!("qma-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("u.bin");
    write_field(&path, &u, "test").unwrap();
    assert_eq!(read_field(&path).unwrap(), u);
    let header = quatma::grid::read_field_json(&path).unwrap();
    assert_eq!((header.n, header.m), (1, 5));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn mollifier_preserves_affine_functions_inside() {
    let grid = Grid::new(1, 9, -1.0, 1.0).unwrap();
    let u = GridField::from_fn(grid, |x| 1.0 + x[0] - 0.5 * x[2]);
    let w = mollify(&u, 2.0 * grid.h()).unwrap();
    assert!(w.sup_distance(&u).unwrap() < 1e-12);
}

#[test]
fn stokes_residual_shrinks_under_refinement() {
    let form = random_form(&mut trial_rng(8, 0), 1, 1).unwrap();
    let residual = |m: usize| {
        let grid = Grid::new(1, m, -1.0, 1.0).unwrap();
        let h = GridField::from_fn(grid, |x| x.iter().map(|t| 1.0 - t * t).product());
        let t = GridForm::sample(grid, &form).unwrap();
        (0..2).map(|a| stokes_residual(&t, &h, a).unwrap()).fold(0.0, f64::max)
    };
    let coarse = residual(9);
    let fine = residual(17);
    // The boundary layer term h(x_1) T(x_0) is first order in h.
    assert!(fine < 0.6 * coarse || fine < 1e-10, "{coarse} -> {fine}");
}

fn small_field() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 5usize.pow(4))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn integrate_is_linear(a in small_field(), b in small_field(), d in prop::collection::vec(0.0f64..3.0, 625), s in -3.0f64..3.0) {
        let grid = Grid::new(1, 5, -1.0, 1.0).unwrap();
        let f = GridField::from_values(grid, a).unwrap();
        let g = GridField::from_values(grid, b).unwrap();
        let mu = MeasureDensity::from_values(grid, d).unwrap();
        let lhs = integrate(&f.add(&g.scale(s)).unwrap(), &mu).unwrap();
        let rhs = integrate(&f, &mu).unwrap() + s * integrate(&g, &mu).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn integrate_is_monotone(a in small_field(), bump in prop::collection::vec(0.0f64..1.0, 625), d in prop::collection::vec(0.0f64..3.0, 625)) {
        let grid = Grid::new(1, 5, -1.0, 1.0).unwrap();
        let f = GridField::from_values(grid, a.clone()).unwrap();
        let g = GridField::from_values(grid, a.iter().zip(&bump).map(|(x, y)| x + y).collect()).unwrap();
        let mu = MeasureDensity::from_values(grid, d).unwrap();
        prop_assert!(integrate(&f, &mu).unwrap() <= integrate(&g, &mu).unwrap() + 1e-12);
        prop_assert!(integrate_volume(&f) <= integrate_volume(&g) + 1e-12);
    }
}
