use num_rational::BigRational;
use rand::Rng;

use super::{crational, rational, HyperhermitianPoly, Monomial, PolyField};
use crate::algebra::{Form, MultiIndex};
use crate::error::Result;
use crate::quat::Quat;

fn small_rational<R: Rng>(rng: &mut R) -> BigRational {
    rational(rng.gen_range(-4..=4), rng.gen_range(1..=3))
}

/// Random polynomial in `nvars` variables of total degree `<= max_degree` with
/// at most `max_terms` terms and small rational coefficients; complex
/// coefficients when `complex` is set.
pub fn random_poly<R: Rng>(rng: &mut R, nvars: usize, max_degree: usize, max_terms: usize, complex: bool) -> PolyField {
    let mut p = PolyField::zero();
    let terms = rng.gen_range(1..=max_terms.max(1));
    for _ in 0..terms {
        let degree = rng.gen_range(0..=max_degree);
        let mut exps = vec![0u8; nvars];
        for _ in 0..degree {
            exps[rng.gen_range(0..nvars)] += 1;
        }
        let re = small_rational(rng);
        let im = if complex { small_rational(rng) } else { rational(0, 1) };
        p.add_term(Monomial::new(exps), crational(re, im));
    }
    p
}

/// Random form of the given degree over `C^{2n}` with a few polynomial coefficients.
pub fn random_form<R: Rng>(rng: &mut R, n: usize, degree: usize) -> Result<Form<PolyField>> {
    let mut f = Form::zero(n, degree)?;
    let dim = 2 * n;
    for _ in 0..rng.gen_range(1..=3) {
        let mut idx: Vec<usize> = (0..dim).collect();
        // Partial Fisher-Yates to pick `degree` distinct indices.
        for k in 0..degree {
            let j = rng.gen_range(k..dim);
            idx.swap(k, j);
        }
        let mut chosen = idx[..degree].to_vec();
        chosen.sort_unstable();
        f.add_term(MultiIndex::new(&chosen, n)?, random_poly(rng, 4 * n, 3, 4, true))?;
    }
    Ok(f)
}

fn random_quat<R: Rng>(rng: &mut R, range: i64) -> [BigRational; 4] {
    std::array::from_fn(|_| rational(rng.gen_range(-range..=range), 1))
}

/// Random constant hyperhermitian matrix with small integer entries.
pub fn random_hyperhermitian<R: Rng>(rng: &mut R, n: usize) -> Result<HyperhermitianPoly> {
    let mut e: Vec<[BigRational; 4]> = vec![std::array::from_fn(|_| rational(0, 1)); n * n];
    for j in 0..n {
        e[j * n + j] = [rational(rng.gen_range(-4..=4), 1), rational(0, 1), rational(0, 1), rational(0, 1)];
        for k in j + 1..n {
            let q = random_quat(rng, 2);
            e[k * n + j] = [q[0].clone(), -q[1].clone(), -q[2].clone(), -q[3].clone()];
            e[j * n + k] = q;
        }
    }
    HyperhermitianPoly::from_rationals(n, &e)
}

/// Random positive semidefinite hyperhermitian matrix `B^* B` with `B` a small
/// integer quaternion matrix.
pub fn random_psd_hyperhermitian<R: Rng>(rng: &mut R, n: usize) -> Result<HyperhermitianPoly> {
    let b: Vec<Quat<BigRational>> = (0..n * n).map(|_| Quat(random_quat(rng, 2))).collect();
    let mut e = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            let mut acc = Quat::<BigRational>::zero();
            for l in 0..n {
                acc = acc.add(&b[l * n + j].conj().mul(&b[l * n + k]));
            }
            e.push(acc.0);
        }
    }
    HyperhermitianPoly::from_rationals(n, &e)
}

/// `u(q) = Re sum_{j,k} conj(q_j) A_{jk} q_k` with `q_l = x_{4l} + i x_{4l+1} + j x_{4l+2} + k x_{4l+3}`.
///
/// Restricted to a right line `q = xi * lambda` this is `(xi^* A xi) |lambda|^2`,
/// so `u` is plurisubharmonic exactly when `A` is positive semidefinite.
pub fn quadratic_from_matrix(a: &HyperhermitianPoly) -> PolyField {
    let n = a.n();
    let q: Vec<Quat<PolyField>> =
        (0..n).map(|l| Quat(std::array::from_fn(|c| PolyField::var(4 * l + c)))).collect();
    let mut acc = PolyField::zero();
    for j in 0..n {
        for k in 0..n {
            let t = q[j].conj().mul(a.get(j, k)).mul(&q[k]);
            let [re, ..] = t.0;
            acc = acc.add(&re);
        }
    }
    acc
}
