//! (1,1)-tensors on ℝ⁴ stored as 4×4 matrices.
//!
//! Entry `m[r][c]` is the `∂_r` component of the image of `∂_c`, so acting on a
//! vector is the ordinary matrix–vector product. Dual ("starred") projections
//! are stored as the transposed matrices and act on covector component columns
//! the same way.

use crate::exterior::{Coeff, ExteriorError, Form, Vector4};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor11<T> {
    pub m: [[T; 4]; 4],
}

pub type Tensor11Value = Tensor11<f64>;

impl<T: Coeff> Tensor11<T> {
    pub fn from_fn(f: impl Fn(usize, usize) -> T) -> Self {
        Tensor11 { m: std::array::from_fn(|r| std::array::from_fn(|c| f(r, c))) }
    }

    pub fn zero() -> Self {
        Self::from_fn(|_, _| T::zero())
    }

    pub fn identity() -> Self {
        Self::from_fn(|r, c| T::from_f64(if r == c { 1.0 } else { 0.0 }))
    }

    pub fn from_f64(m: [[f64; 4]; 4]) -> Self {
        Self::from_fn(|r, c| T::from_f64(m[r][c]))
    }

    pub fn entry(&self, r: usize, c: usize) -> &T {
        &self.m[r][c]
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Tensor11<U> {
        Tensor11 { m: std::array::from_fn(|r| std::array::from_fn(|c| f(&self.m[r][c]))) }
    }

    pub fn plus(&self, o: &Self) -> Self {
        Self::from_fn(|r, c| self.m[r][c].plus(&o.m[r][c]))
    }

    pub fn minus(&self, o: &Self) -> Self {
        Self::from_fn(|r, c| self.m[r][c].minus(&o.m[r][c]))
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|e| e.scaled(s))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|r, c| self.m[c][r].clone())
    }

    /// Composition `self ∘ other` (matrix product).
    pub fn compose(&self, other: &Self) -> Self {
        Self::from_fn(|r, c| (0..4).fold(T::zero(), |acc, k| acc.plus(&self.m[r][k].times(&other.m[k][c]))))
    }

    pub fn trace(&self) -> T {
        (0..4).fold(T::zero(), |acc, k| acc.plus(&self.m[k][k]))
    }

    pub fn apply(&self, v: &Vector4<T>) -> Vector4<T> {
        Vector4::new(std::array::from_fn(|r| {
            (0..4).fold(T::zero(), |acc, c| acc.plus(&self.m[r][c].times(&v.comps[c])))
        }))
    }

    /// Action of a starred (covector) matrix on a 1-form's component column.
    pub fn apply_covector(&self, a: &Form<T>) -> Result<Form<T>, ExteriorError> {
        a.expect_degree(1)?;
        let col = Vector4::new(std::array::from_fn(|k| a.components()[k].clone()));
        Form::from_components(1, self.apply(&col).comps.to_vec())
    }

    /// Action of a starred matrix on a 2-form: `Σ F_ab P(dx^a) ∧ P(dx^b)`.
    pub fn apply_two_form(&self, f: &Form<T>) -> Result<Form<T>, ExteriorError> {
        f.expect_degree(2)?;
        let images: Vec<Form<T>> = (0..4).map(|a| self.apply_covector(&Form::dx(a))).collect::<Result<_, _>>()?;
        let mut out = Form::zero(2);
        for (i, idx) in crate::exterior::basis(2).iter().enumerate() {
            let coeff = &f.components()[i];
            if coeff.is_zero() {
                continue;
            }
            out = out.plus(&images[idx[0]].wedge(&images[idx[1]])?.times(coeff));
        }
        Ok(out)
    }
}

impl Tensor11<f64> {
    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0, |m, e| m.max(e.abs()))
    }
}
