use quatma::energy::{
    alpha, c_p, capacity_estimate, check_blocki, check_cauchy_schwarz, check_comparison, check_demailly,
    check_energy_estimate, check_holder_step, check_integration_by_parts, check_locality, check_mass_holder,
    check_monotonicity, d_p, energy, energy_p, functional_f, weighted_mass, DpParse, Tolerance,
};
use quatma::envelope::{extremal_function, EnvelopeOptions, KSet, Region};
use quatma::fields::random_e0_field;
use quatma::grid::{ma_density, Grid, GridField, MeasureDensity};
use quatma::seeding::trial_rng;
use quatma::suite::run_inequality_suite;
use quatma::Error;

fn grid() -> Grid {
    Grid::new(1, 9, -1.0, 1.0).unwrap()
}

fn pair(seed: u64) -> (GridField, GridField) {
    let mut rng = trial_rng(seed, 0);
    let env = EnvelopeOptions::default();
    (random_e0_field(&mut rng, grid(), &env).unwrap(), random_e0_field(&mut rng, grid(), &env).unwrap())
}

#[test]
fn equal_arguments_give_equality_or_slack() {
    let (u, _) = pair(1);
    let tol = Tolerance::tight();
    let cs = check_cauchy_schwarz(&u, &u, &[], &tol).unwrap();
    assert!(cs.passed && cs.margin.abs() <= 1e-9 * cs.rhs);
    let ee = check_energy_estimate(&u, &[&u], 2.0, DpParse::Grouped, &tol).unwrap();
    assert!((ee.rhs - d_p(1, 2.0, DpParse::Grouped) * ee.lhs).abs() <= 1e-9 * ee.rhs);
    for m in check_holder_step(&u, &u, &[], 1.0, &tol).unwrap() {
        assert!(m.margin.abs() <= 1e-9 * m.rhs.abs());
    }
    for m in check_comparison(&u, &u, &tol).unwrap() {
        assert!(m.passed && m.lhs == 0.0 && m.rhs == 0.0);
    }
}

#[test]
fn zero_second_argument() {
    let (u, _) = pair(2);
    let z = GridField::zeros(grid());
    let cs = check_cauchy_schwarz(&u, &z, &[], &Tolerance::tight()).unwrap();
    assert_eq!((cs.lhs, cs.rhs), (0.0, 0.0));
}

#[test]
fn shifted_copy_is_an_exact_case() {
    let (u, _) = pair(3);
    let below = u.map(|x| x - 1.0);
    let tol = Tolerance::tight();
    for m in check_demailly(&u, &below, 2.0 * grid().h(), &tol).unwrap() {
        assert!(m.passed && m.margin.abs() <= 1e-9 * (1.0 + m.rhs.abs()), "{m:?}");
    }
    let loc = check_locality(&u, &below, &[], &tol).unwrap();
    assert_eq!(loc.lhs, 0.0);
}

#[test]
fn blocki_vanishes_for_equal_functions() {
    let (u, v) = pair(4);
    let ms = check_blocki(&u, &u, &[&v], &Tolerance::tight()).unwrap();
    assert_eq!(ms[0].lhs, 0.0);
    assert!(ms.iter().all(|m| m.passed));
    let barrier = GridField::constant(grid(), -1.0);
    let ms = check_blocki(&u.add(&v).unwrap(), &u, &[&barrier], &Tolerance::tight()).unwrap();
    assert!(ms.iter().all(|m| m.passed), "{ms:?}");
}

#[test]
fn energy_is_homogeneous_and_f_matches_its_definition() {
    let (u, v) = pair(5);
    let e = energy(&u).unwrap();
    let e2 = energy(&u.scale(2.0)).unwrap();
    // n = 1: E(2u) = 2^(n+1) E(u).
    assert!((e2 - 4.0 * e).abs() <= 1e-9 * e2);
    let mu = ma_density(&[&v]).unwrap();
    let f = functional_f(&u, &mu).unwrap();
    let lin = quatma::grid::integrate(&u, &mu).unwrap();
    assert!((f - (e / 2.0 + lin)).abs() <= 1e-12 * (1.0 + f.abs()));
    assert!((weighted_mass(&u, 1.0, &ma_density(&[&u]).unwrap()).unwrap() - e).abs() <= 1e-12 * e);
}

#[test]
fn domain_errors() {
    let (u, v) = pair(6);
    assert!(matches!(energy_p(&u, 0.5, &[]), Err(Error::Domain(_))));
    assert!(matches!(check_energy_estimate(&u, &[&v], 0.9, DpParse::Grouped, &Tolerance::default()), Err(Error::Domain(_))));
    // u + v <= u but not the other way round.
    let sum = u.add(&v).unwrap();
    assert!(check_monotonicity(&sum, &u, &Tolerance::default()).is_ok());
    assert!(matches!(check_monotonicity(&u, &sum, &Tolerance::default()), Err(Error::Domain(_))));
    let lifted = u.with_trace(|_, _| -1.0);
    assert!(matches!(check_comparison(&lifted, &u, &Tolerance::default()), Err(Error::Domain(_))));
}

#[test]
fn constants_match_their_formulas() {
    assert_eq!(d_p(1, 1.0, DpParse::Grouped), 1.0);
    assert_eq!(d_p(2, 1.0, DpParse::Literal), 1.0);
    assert_eq!(c_p(1.0), 1.0);
    assert_eq!(c_p(2.0), 4.0);
    assert!((alpha(2, 1.0) - (3.0 * 2.0 - 2.0)).abs() < 1e-15);
}

#[test]
fn capacity_estimate_cases() {
    let g = grid();
    let env = EnvelopeOptions::default();
    let phi = extremal_function(g, KSet::Region(Region::ball(vec![], 0.6)), None, &env).unwrap().field;
    let (m, cap) = capacity_estimate(&vec![false; g.len()], &phi, 1.0, &env, &Tolerance::default()).unwrap();
    assert_eq!((m.lhs, m.rhs, cap), (0.0, 0.0, 0.0));
    let mask = |r: f64| -> Vec<bool> {
        (0..g.len()).map(|i| g.point_vec(i).iter().map(|t| t * t).sum::<f64>() <= r * r).collect()
    };
    let (small, c1) = capacity_estimate(&mask(0.3), &phi, 1.0, &env, &Tolerance::default()).unwrap();
    let (_, c2) = capacity_estimate(&mask(0.5), &phi, 1.0, &env, &Tolerance::default()).unwrap();
    assert!(small.passed);
    assert!(c1 <= c2 + 1e-9);
}

#[test]
fn mass_holder_with_weight_on_equal_fields() {
    let (u, v) = pair(7);
    let m = check_mass_holder(&[&u], Some(&v), &Tolerance::tight()).unwrap();
    assert!(m.margin.abs() <= 1e-12 * (1.0 + m.rhs));
}

#[test]
fn integration_by_parts_is_exact_at_n_one() {
    let (u, v) = pair(8);
    let m = check_integration_by_parts(&u, &v, &[], &Tolerance::tight()).unwrap();
    assert!(m.passed, "{m:?}");
}

#[test]
fn small_random_suite_has_no_violations() {
    let env = EnvelopeOptions::default();
    let r = run_inequality_suite(grid(), 17, 8, &Tolerance::default(), &env).unwrap();
    assert!(r.passed, "{:?}", r.checks);
    let tight = run_inequality_suite(grid(), 17, 8, &Tolerance::tight(), &env).unwrap();
    // Demailly carries an O(h) mollifier bias, visible on 9^4 without the h band.
    let bad: Vec<_> = tight.checks.iter().filter(|(k, c)| c.violations > 0 && *k != "demailly").collect();
    assert!(bad.is_empty(), "{bad:?}");
    assert!(MeasureDensity::zero(grid()).is_zero());
}
