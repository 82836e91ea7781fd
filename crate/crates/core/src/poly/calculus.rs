use num_complex::Complex;

use super::{creal, rational, CRational, PolyField};
use crate::algebra::{top_pairings, Form, MultiIndex, MAX_N};
use crate::error::{Error, Result};

/// One summand `c * d/dx_var` of a first-order operator, `c` in `{+-1, +-i}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NablaTerm {
    pub var: usize,
    pub re: i8,
    pub im: i8,
}

impl NablaTerm {
    const fn new(var: usize, re: i8, im: i8) -> Self {
        NablaTerm { var, re, im }
    }

    pub fn coefficient(&self) -> Complex<f64> {
        Complex::new(self.re as f64, self.im as f64)
    }

    fn exact(&self) -> CRational {
        Complex::new(rational(self.re as i64, 1), rational(self.im as i64, 1))
    }
}

/// The `2n x 2` table of operators `nabla_{j alpha}`; rows `2l, 2l+1` act on the
/// four coordinates of the quaternionic variable `q_l`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NablaTable {
    n: usize,
    entries: Vec<[Vec<NablaTerm>; 2]>,
}

impl NablaTable {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_N {
            return Err(Error::domain(format!("dimension n = {n} unsupported")));
        }
        let mut entries = Vec::with_capacity(2 * n);
        for l in 0..n {
            let x = 4 * l;
            entries.push([
                vec![NablaTerm::new(x, 1, 0), NablaTerm::new(x + 1, 0, 1)],
                vec![NablaTerm::new(x + 2, -1, 0), NablaTerm::new(x + 3, 0, -1)],
            ]);
            entries.push([
                vec![NablaTerm::new(x + 2, 1, 0), NablaTerm::new(x + 3, 0, -1)],
                vec![NablaTerm::new(x, 1, 0), NablaTerm::new(x + 1, 0, -1)],
            ]);
        }
        Ok(NablaTable { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, j: usize, alpha: usize) -> Result<&[NablaTerm]> {
        if j >= 2 * self.n || alpha > 1 {
            return Err(Error::domain(format!(
                "operator index ({j}, {alpha}) outside [0, {}) x {{0, 1}}",
                2 * self.n
            )));
        }
        Ok(&self.entries[j][alpha])
    }
}

/// Exterior calculus `d_0`, `d_1`, `Delta` on polynomial forms over `C^{2n}`.
///
/// A calculus built with [`PolyCalculus::faulty`] adds the zeroth-order term
/// `f` to `nabla_{00} f`, which preserves `d^2 = 0` style identities in degree
/// zero but breaks the Leibniz rule; it exists to exercise failure paths.
#[derive(Clone, Debug)]
pub struct PolyCalculus {
    table: NablaTable,
    fault: bool,
}

impl PolyCalculus {
    pub fn new(n: usize) -> Result<Self> {
        Ok(PolyCalculus { table: NablaTable::new(n)?, fault: false })
    }

    pub fn faulty(n: usize) -> Result<Self> {
        Ok(PolyCalculus { table: NablaTable::new(n)?, fault: true })
    }

    pub fn n(&self) -> usize {
        self.table.n
    }

    pub fn table(&self) -> &NablaTable {
        &self.table
    }

    pub fn nabla_apply(&self, j: usize, alpha: usize, u: &PolyField) -> Result<PolyField> {
        let mut out = PolyField::zero();
        for t in self.table.entry(j, alpha)? {
            out = out.add(&u.derivative(t.var).scale(&t.exact()));
        }
        if self.fault && j == 0 && alpha == 0 {
            out = out.add(u);
        }
        Ok(out)
    }

    fn check_form(&self, f: &Form<PolyField>) -> Result<()> {
        if f.n() != self.n() {
            return Err(Error::domain(format!("form over C^{} given to calculus over C^{}", 2 * f.n(), 2 * self.n())));
        }
        Ok(())
    }

    /// `d_alpha F = sum_{k,I} nabla_{k alpha} f_I w^k ^ w^I`.
    pub fn d(&self, alpha: usize, f: &Form<PolyField>) -> Result<Form<PolyField>> {
        self.check_form(f)?;
        let n = self.n();
        if f.degree() >= 2 * n {
            return Err(Error::domain("d_alpha is not defined on top-degree forms"));
        }
        let mut out = Form::zero(n, f.degree() + 1)?;
        for (index, coeff) in f.terms() {
            for k in 0..2 * n {
                let sign = MultiIndex::single(k).wedge_sign(*index);
                if sign == 0 {
                    continue;
                }
                let mut g = self.nabla_apply(k, alpha, coeff)?;
                if sign < 0 {
                    g = g.neg();
                }
                out.add_term(MultiIndex::single(k).union(*index), g)?;
            }
        }
        Ok(out)
    }

    pub fn d0(&self, f: &Form<PolyField>) -> Result<Form<PolyField>> {
        self.d(0, f)
    }

    pub fn d1(&self, f: &Form<PolyField>) -> Result<Form<PolyField>> {
        self.d(1, f)
    }

    /// `Delta F = d_0 d_1 F`.
    pub fn delta(&self, f: &Form<PolyField>) -> Result<Form<PolyField>> {
        self.d0(&self.d1(f)?)
    }

    /// `Delta u` for a function, as `d_0 d_1 u`.
    pub fn baston(&self, u: &PolyField) -> Result<Form<PolyField>> {
        self.delta(&Form::scalar(self.n(), u.clone())?)
    }

    /// `Delta_{ij} u = (nabla_{i0} nabla_{j1} u - nabla_{i1} nabla_{j0} u) / 2`.
    pub fn baston_entry(&self, i: usize, j: usize, u: &PolyField) -> Result<PolyField> {
        let a = self.nabla_apply(i, 0, &self.nabla_apply(j, 1, u)?)?;
        let b = self.nabla_apply(i, 1, &self.nabla_apply(j, 0, u)?)?;
        Ok(a.sub(&b).scale(&creal(rational(1, 2))))
    }

    /// Dense row-major `2n x 2n` array of `Delta_{ij} u`.
    pub fn baston_matrix(&self, u: &PolyField) -> Result<Vec<PolyField>> {
        let dim = 2 * self.n();
        let mut out = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                out.push(self.baston_entry(i, j, u)?);
            }
        }
        Ok(out)
    }

    /// `sum_{i,j} Delta_{ij} u w^i ^ w^j`, assembled from the coefficient table.
    pub fn baston_table(&self, u: &PolyField) -> Result<Form<PolyField>> {
        let n = self.n();
        let mut out = Form::zero(n, 2)?;
        for i in 0..2 * n {
            for j in 0..2 * n {
                if i == j {
                    continue;
                }
                let c = self.baston_entry(i, j, u)?;
                let sign = MultiIndex::single(i).wedge_sign(MultiIndex::single(j));
                let c = if sign < 0 { c.neg() } else { c };
                out.add_term(MultiIndex::single(i).union(MultiIndex::single(j)), c)?;
            }
        }
        Ok(out)
    }

    /// `Delta u_1 ^ ... ^ Delta u_k` for `k <= n`; the empty product is the 0-form 1.
    pub fn ma_product(&self, us: &[PolyField]) -> Result<Form<PolyField>> {
        let n = self.n();
        if us.len() > n {
            return Err(Error::domain(format!("{} factors exceed n = {n}", us.len())));
        }
        let mut acc = Form::scalar(n, PolyField::from_int(1))?;
        for u in us {
            acc = acc.wedge(&self.baston(u)?)?;
        }
        Ok(acc)
    }

    /// Coefficient of `Omega_{2n}` in `Delta u_1 ^ ... ^ Delta u_n`.
    pub fn ma_top(&self, us: &[PolyField]) -> Result<PolyField> {
        if us.len() != self.n() {
            return Err(Error::domain(format!("need exactly n = {} factors, got {}", self.n(), us.len())));
        }
        self.ma_product(us)?.top_coefficient()
    }

    /// The same coefficient from the signed sum over index tuples,
    /// `sum delta^{i_1 j_1 ... i_n j_n} Delta_{i_1 j_1} u_1 ... Delta_{i_n j_n} u_n`.
    pub fn ma_index_sum(&self, us: &[PolyField]) -> Result<PolyField> {
        let n = self.n();
        if us.len() != n {
            return Err(Error::domain(format!("need exactly n = {n} factors, got {}", us.len())));
        }
        let tables: Vec<Vec<PolyField>> = us.iter().map(|u| self.baston_matrix(u)).collect::<Result<_>>()?;
        let dim = 2 * n;
        let mut acc = PolyField::zero();
        for p in top_pairings(n) {
            let mut prod = PolyField::from_int(1);
            for (k, &(i, j)) in p.pairs.iter().enumerate() {
                prod = prod.mul(&tables[k][i * dim + j]);
            }
            acc = if p.sign > 0 { acc.add(&prod) } else { acc.sub(&prod) };
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::crational;

    fn i_unit() -> CRational {
        crational(rational(0, 1), rational(1, 1))
    }

    #[test]
    fn nabla_examples() {
        let c = PolyCalculus::new(1).unwrap();
        let x0 = PolyField::var(0);
        let x1 = PolyField::var(1);
        assert_eq!(c.nabla_apply(0, 0, &x0).unwrap(), PolyField::from_int(1));
        assert_eq!(c.nabla_apply(0, 0, &x1).unwrap(), PolyField::constant(i_unit()));
        assert!(c.nabla_apply(0, 1, &x0.mul(&x0)).unwrap().is_zero());
        assert!(c.nabla_apply(2, 0, &x0).is_err());
        assert!(c.nabla_apply(0, 2, &x0).is_err());
    }

    #[test]
    fn d0_of_constant_vanishes_and_top_degree_is_rejected() {
        let c = PolyCalculus::new(1).unwrap();
        let f = Form::scalar(1, PolyField::from_int(5)).unwrap();
        assert!(c.d0(&f).unwrap().is_zero());
        let top = Form::top(1, PolyField::var(0)).unwrap();
        assert!(c.d0(&top).is_err());
    }

    #[test]
    fn baston_of_squared_norm_in_one_variable() {
        let c = PolyCalculus::new(1).unwrap();
        let u = (0..4).fold(PolyField::zero(), |acc, k| acc.add(&PolyField::var(k).pow(2)));
        let top = c.baston(&u).unwrap().top_coefficient().unwrap();
        // The four-dimensional Laplacian of |x|^2.
        assert_eq!(top, PolyField::from_int(8));
        assert!(c.baston(&PolyField::from_int(1)).unwrap().is_zero());
    }

    #[test]
    fn baston_table_is_antisymmetric() {
        let c = PolyCalculus::new(2).unwrap();
        let u = PolyField::var(0).mul(&PolyField::var(5)).add(&PolyField::var(2).pow(3));
        let m = c.baston_matrix(&u).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m[i * 4 + j], m[j * 4 + i].neg());
            }
        }
    }
}
