use num_rational::BigRational;
use num_traits::Zero;
use quatma::constants::{kappa, kappa_exact};
use quatma::poly::{
    complex_embedding_det, crational, moore_det, quadratic_from_matrix, random_hyperhermitian, random_psd_hyperhermitian,
    verify_identity, HyperhermitianPoly, IdentityOptions, IdentityTag, PolyCalculus, PolyField,
};
use quatma::seeding::trial_rng;

fn squared_norm(n: usize) -> PolyField {
    (0..4 * n).fold(PolyField::zero(), |acc, k| acc.add(&PolyField::var(k).pow(2)))
}

#[test]
fn exact_identities_hold_for_n_one_and_two() {
    for n in [1, 2] {
        for tag in IdentityTag::ALL {
            let r = verify_identity(tag, &IdentityOptions::new(n, 20, 7)).unwrap();
            assert!(r.passed(), "n={n} {tag}: {r:?}");
            assert_eq!(r.worst_residual, "0");
        }
    }
}

#[test]
fn verdicts_do_not_depend_on_the_seed() {
    for seed in [1, 99] {
        for tag in IdentityTag::ALL {
            assert!(verify_identity(tag, &IdentityOptions::new(1, 10, seed)).unwrap().passed());
        }
    }
}

#[test]
fn corrupted_table_is_detected() {
    let mut opts = IdentityOptions::new(1, 10, 3);
    opts.faulty = true;
    let failures = IdentityTag::ALL.iter().filter(|&&t| !verify_identity(t, &opts).unwrap().passed()).count();
    assert!(failures > 0);
    assert!(!verify_identity(IdentityTag::Leibniz, &opts).unwrap().passed());
}

#[test]
fn moore_ratio_is_the_frozen_constant() {
    for n in [1, 2] {
        let r = verify_identity(IdentityTag::MooreCorrespondence, &IdentityOptions::new(n, 50, 11)).unwrap();
        assert_eq!(r.kappa.as_deref(), Some(kappa_exact(n).to_string().as_str()));
        assert_eq!(kappa(n), 1.0);
    }
}

#[test]
fn complex_embedding_is_the_square_of_the_moore_determinant() {
    for n in [1, 2, 3] {
        for t in 0..10 {
            let h = random_hyperhermitian(&mut trial_rng(5, t), n).unwrap();
            let m = moore_det(&h);
            assert_eq!(complex_embedding_det(&h), m.mul(&m), "n={n} trial {t}");
        }
    }
}

#[test]
fn identity_matrix_has_unit_determinant() {
    for n in [1, 2, 3] {
        let h = HyperhermitianPoly::identity(n).unwrap();
        assert_eq!(moore_det(&h), PolyField::from_int(1));
    }
}

#[test]
fn psd_quadratics_have_nonnegative_top_coefficient() {
    for n in [1, 2] {
        let calc = PolyCalculus::new(n).unwrap();
        for t in 0..10 {
            let a = random_psd_hyperhermitian(&mut trial_rng(9, t), n).unwrap();
            let u = quadratic_from_matrix(&a);
            let top = calc.ma_top(&vec![u.clone(); n]).unwrap();
            assert!(top.is_constant());
            let c = top.constant_term();
            assert!(c.im.is_zero() && c.re >= BigRational::zero(), "n={n}: {c:?}");
            assert_eq!(top, calc.ma_index_sum(&vec![u; n]).unwrap());
        }
    }
}

#[test]
fn squared_norm_density() {
    // n = 1: the density is the Laplacian, 2 per coordinate.
    let calc = PolyCalculus::new(1).unwrap();
    assert_eq!(calc.ma_top(&[squared_norm(1)]).unwrap(), PolyField::from_int(8));
    // n = 2: Hessian 8 I_2, Moore determinant 64, times 2!.
    let calc = PolyCalculus::new(2).unwrap();
    let u = squared_norm(2);
    let top = calc.ma_top(&[u.clone(), u]).unwrap();
    assert_eq!(top.constant_term(), crational(BigRational::from_integer(128.into()), BigRational::zero()));
}

#[test]
fn top_coefficient_is_symmetric_in_its_arguments() {
    let calc = PolyCalculus::new(2).unwrap();
    let mut rng = trial_rng(21, 0);
    let a = quadratic_from_matrix(&random_hyperhermitian(&mut rng, 2).unwrap());
    let b = quadratic_from_matrix(&random_hyperhermitian(&mut rng, 2).unwrap());
    assert_eq!(calc.ma_top(&[a.clone(), b.clone()]).unwrap(), calc.ma_top(&[b, a]).unwrap());
}
