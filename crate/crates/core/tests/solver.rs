use quatma::energy::functional_f;
use quatma::envelope::{project_p, psh_test, EnvelopeOptions, PshOptions};
use quatma::fields::{random_e0_field, CosineObstacle};
use quatma::grid::{ma_density, Grid, GridField, MeasureDensity};
use quatma::seeding::trial_rng;
use quatma::solver::{
    check_derivative_formula, check_subsolution_solve, laplacian, solve_direct_n1, solve_laplacian, solve_variational,
    SolveConfig,
};
use quatma::Error;

fn cfg() -> SolveConfig {
    SolveConfig::default()
}

fn manufactured(n: usize, m: usize) -> (GridField, MeasureDensity) {
    let grid = Grid::new(n, m, -0.5, 0.5).unwrap();
    let u = GridField::from_fn(grid, |x| x.iter().map(|t| t * t).sum::<f64>() - 1.0);
    let mu = ma_density(&vec![&u; n]).unwrap();
    (u, mu)
}

#[test]
fn laplacian_solve_inverts_the_stencil() {
    let grid = Grid::new(1, 9, -1.0, 1.0).unwrap();
    let x = GridField::from_fn(grid, |p| p.iter().map(|t| 1.0 - t * t).product::<f64>() * (1.0 + p[1]));
    let b = laplacian(&x);
    let y = solve_laplacian(&b, 1e-13, 1000).unwrap();
    assert!(y.sup_distance(&x).unwrap() < 1e-10);
}

#[test]
fn zero_measure_gives_zero() {
    let grid = Grid::new(1, 9, -1.0, 1.0).unwrap();
    let mu = MeasureDensity::zero(grid);
    let d = solve_direct_n1(&mu, None, &cfg()).unwrap();
    assert_eq!(d.phi.sup_norm(), 0.0);
    let v = solve_variational(&mu, None, None, &cfg()).unwrap();
    assert_eq!(v.phi.sup_norm(), 0.0);
    assert!(v.psh.is_psh);
}

#[test]
fn direct_solver_recovers_the_quadratic() {
    let (u, mu) = manufactured(1, 17);
    let r = solve_direct_n1(&mu, Some(&u), &cfg()).unwrap();
    assert!(r.phi.sup_distance(&u).unwrap() < 1e-9);
    assert!(r.residual < 1e-6 && r.psh.is_psh);
}

#[test]
fn direct_solver_is_linear_at_n_one() {
    let grid = Grid::new(1, 9, -1.0, 1.0).unwrap();
    let mu = MeasureDensity::from_fn(grid, |x| 1.0 + x[0] * x[0]).unwrap();
    let a = solve_direct_n1(&mu, None, &cfg()).unwrap().phi;
    let b = solve_direct_n1(&mu.scale(2.0).unwrap(), None, &cfg()).unwrap().phi;
    assert!(b.sup_distance(&a.scale(2.0)).unwrap() < 1e-10);
}

#[test]
fn direct_solver_rejects_n_two() {
    let grid = Grid::new(2, 5, -1.0, 1.0).unwrap();
    let r = solve_direct_n1(&MeasureDensity::zero(grid), None, &cfg());
    assert!(matches!(r, Err(Error::Domain(_))));
}

#[test]
fn variational_agrees_with_direct() {
    let grid = Grid::new(1, 9, -1.0, 1.0).unwrap();
    let mu = MeasureDensity::from_fn(grid, |x| if x[0] > 0.0 { 4.0 } else { 1.0 }).unwrap();
    let d = solve_direct_n1(&mu, None, &cfg()).unwrap();
    let v = solve_variational(&mu, None, None, &cfg()).unwrap();
    let dist = v.phi.sup_distance(&d.phi).unwrap();
    assert!(dist <= 10.0 * d.residual.max(1e-10), "{dist} vs {}", d.residual);
    for w in v.energies.windows(2) {
        assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
    }
}

#[test]
fn solution_minimizes_f_among_perturbations() {
    let grid = Grid::new(1, 9, -1.0, 1.0).unwrap();
    let env = EnvelopeOptions::default();
    let mu = MeasureDensity::from_fn(grid, |x| 2.0 + x[1]).unwrap();
    let phi = solve_variational(&mu, None, None, &cfg()).unwrap().phi;
    let best = functional_f(&phi, &mu).unwrap();
    for t in 0..20 {
        let mut rng = trial_rng(40, t);
        let c = CosineObstacle::random(&mut rng, 1);
        let bump = GridField::from_fn(grid, |x| 0.05 * c.eval(x));
        let other = project_p(&phi.add(&bump).unwrap().with_trace(|_, _| 0.0), &env).unwrap();
        assert!(functional_f(&other, &mu).unwrap() >= best - 1e-10 * best.abs(), "trial {t}");
    }
}

#[test]
fn variational_recovers_the_quadratic_at_n_two() {
    let (u, mu) = manufactured(2, 5);
    let r = solve_variational(&mu, Some(&u), None, &cfg()).unwrap();
    assert!(r.phi.sup_distance(&u).unwrap() < 1e-6);
    assert!(r.psh.is_psh);
    assert!(psh_test(&r.phi, None, &PshOptions::default()).unwrap().is_psh);
}

#[test]
fn derivative_formula_cases() {
    let grid = Grid::new(1, 9, -1.0, 1.0).unwrap();
    let env = EnvelopeOptions::default();
    let mut rng = trial_rng(50, 0);
    let u = random_e0_field(&mut rng, grid, &env).unwrap();
    let v = random_e0_field(&mut rng, grid, &env).unwrap();
    let zero = check_derivative_formula(&u, &GridField::zeros(grid), &[1e-3, -1e-3], &env).unwrap();
    assert_eq!(zero.formula, 0.0);
    // Re-projecting u moves it by the envelope stopping tolerance only.
    assert!(zero.rows.iter().all(|r| r.quotient.abs() < 1e-4), "{:?}", zero.rows);
    let r = check_derivative_formula(&u, &v, &[1e-2, 1e-3, 1e-4, -1e-2, -1e-3, -1e-4], &env).unwrap();
    assert!(r.row(1e-3).unwrap().relative_error < 0.01);
    assert!(r.row(-1e-3).unwrap().relative_error < 0.05);
    assert_eq!(r.row(-1e-3).unwrap().h_t_integrals.len(), 2);
    assert!(check_derivative_formula(&u, &v, &[0.0], &env).is_err());
}

#[test]
fn subsolution_sandwich() {
    let grid = Grid::new(1, 9, -1.0, 1.0).unwrap();
    let env = EnvelopeOptions::default();
    let psi = random_e0_field(&mut trial_rng(60, 0), grid, &env).unwrap();
    let full = ma_density(&[&psi]).unwrap();
    let (same, rep) = check_subsolution_solve(&psi, &full, &cfg()).unwrap();
    assert!(rep.passed && same.phi.sup_distance(&psi).unwrap() < 1e-6);
    let (_, rep) = check_subsolution_solve(&psi, &full.scale(0.5).unwrap(), &cfg()).unwrap();
    assert!(rep.passed && rep.residual < 1e-6, "{rep:?}");
    let (zero, rep) = check_subsolution_solve(&psi, &MeasureDensity::zero(grid), &cfg()).unwrap();
    assert!(rep.passed && zero.phi.sup_norm() == 0.0);
    let too_big = check_subsolution_solve(&psi, &full.scale(2.0).unwrap(), &cfg());
    assert!(matches!(too_big, Err(Error::Domain(_))));
}

#[test]
fn larger_measure_gives_smaller_solution() {
    let grid = Grid::new(1, 9, -1.0, 1.0).unwrap();
    let mu1 = MeasureDensity::from_fn(grid, |x| 2.0 + x[0]).unwrap();
    let mu2 = MeasureDensity::from_fn(grid, |_| 1.0).unwrap();
    let a = solve_variational(&mu1, None, None, &cfg()).unwrap().phi;
    let b = solve_variational(&mu2, None, None, &cfg()).unwrap().phi;
    assert!(a.sub(&b).unwrap().max_value() <= 1e-9);
}
