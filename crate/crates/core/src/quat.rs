//! Quaternions over an arbitrary commutative scalar ring, `q = c0 + c1 i + c2 j + c3 k`.

use crate::algebra::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Quat<S: Scalar>(pub [S; 4]);

/// `e_a * e_b = sign * e_c` for the basis `(1, i, j, k)`.
pub const fn unit_product(a: usize, b: usize) -> (i8, usize) {
    const TABLE: [[(i8, usize); 4]; 4] = [
        [(1, 0), (1, 1), (1, 2), (1, 3)],
        [(1, 1), (-1, 0), (1, 3), (-1, 2)],
        [(1, 2), (-1, 3), (-1, 0), (1, 1)],
        [(1, 3), (1, 2), (-1, 1), (-1, 0)],
    ];
    TABLE[a][b]
}

impl<S: Scalar> Quat<S> {
    pub fn zero() -> Self {
        Quat([S::zero(), S::zero(), S::zero(), S::zero()])
    }

    pub fn real(s: S) -> Self {
        Quat([s, S::zero(), S::zero(), S::zero()])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn is_real(&self) -> bool {
        self.0[1..].iter().all(|c| c.is_zero())
    }

    pub fn conj(&self) -> Self {
        let [a, b, c, d] = &self.0;
        Quat([a.clone(), b.negated(), c.negated(), d.negated()])
    }

    pub fn add(&self, o: &Self) -> Self {
        Quat(std::array::from_fn(|k| self.0[k].plus(&o.0[k])))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Quat(std::array::from_fn(|k| self.0[k].minus(&o.0[k])))
    }

    pub fn neg(&self) -> Self {
        Quat(std::array::from_fn(|k| self.0[k].negated()))
    }

    pub fn scale(&self, s: &S) -> Self {
        Quat(std::array::from_fn(|k| self.0[k].times(s)))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero();
        for a in 0..4 {
            if self.0[a].is_zero() {
                continue;
            }
            for b in 0..4 {
                if o.0[b].is_zero() {
                    continue;
                }
                let (sign, c) = unit_product(a, b);
                let p = self.0[a].times(&o.0[b]);
                out.0[c] = if sign > 0 { out.0[c].plus(&p) } else { out.0[c].minus(&p) };
            }
        }
        out
    }

    /// `|q|^2 = q * conj(q)` as a scalar.
    pub fn norm_sqr(&self) -> S {
        self.0.iter().fold(S::zero(), |acc, c| acc.plus(&c.times(c)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: f64, b: f64, c: f64, d: f64) -> Quat<f64> {
        Quat([a, b, c, d])
    }

    #[test]
    fn hamilton_relations() {
        let i = q(0., 1., 0., 0.);
        let j = q(0., 0., 1., 0.);
        let k = q(0., 0., 0., 1.);
        let m1 = q(-1., 0., 0., 0.);
        assert_eq!(i.mul(&i), m1);
        assert_eq!(j.mul(&j), m1);
        assert_eq!(k.mul(&k), m1);
        assert_eq!(i.mul(&j).mul(&k), m1);
        assert_eq!(i.mul(&j), k);
        assert_eq!(j.mul(&i), k.neg());
    }

    #[test]
    fn conj_reverses_products() {
        let a = q(1., 2., -1., 3.);
        let b = q(-2., 0.5, 4., 1.);
        assert_eq!(a.mul(&b).conj(), b.conj().mul(&a.conj()));
        assert_eq!(a.mul(&a.conj()), Quat::real(a.norm_sqr()));
    }
}
