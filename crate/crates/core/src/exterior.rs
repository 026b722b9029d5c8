//! Pointwise exterior algebra on ℝ⁴ with the metric η = diag(−1, −1, −1, +1).
//!
//! Forms store their components on strictly increasing index tuples; axes are
//! numbered `0..4` for `x, y, z, ξ`. Every contraction below expands to the
//! full antisymmetric sum, so a sum over `α < β` is doubled where the formula
//! asks for `Σ_{α,β}`.
//!
//! The algebra is generic over [`Coeff`] so the same code serves plain values
//! (`f64`) and symbolic fields ([`ScalarField`]).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::ScalarField;

/// Diagonal of the Minkowski metric; also its own inverse.
pub const ETA: [f64; 4] = [-1.0, -1.0, -1.0, 1.0];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExteriorError {
    #[error("degree exceeds 4")]
    DegreeOverflow,
    #[error("expected degree {expected}, got {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("interior product of a 0-form")]
    InteriorOfScalar,
    #[error("form of degree {degree} needs {expected} components, got {found}")]
    ComponentCount { degree: usize, expected: usize, found: usize },
}

/// A point of ℝ⁴ in coordinates `(x, y, z, ξ = ct)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point4 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub xi: f64,
}

impl Point4 {
    pub const ORIGIN: Point4 = Point4 { x: 0.0, y: 0.0, z: 0.0, xi: 0.0 };

    pub fn new(x: f64, y: f64, z: f64, xi: f64) -> Self {
        Point4 { x, y, z, xi }
    }

    pub fn from_array(c: [f64; 4]) -> Self {
        Point4::new(c[0], c[1], c[2], c[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.z, self.xi]
    }

    pub fn is_finite(self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }

    pub fn shifted(self, axis: usize, h: f64) -> Self {
        let mut c = self.to_array();
        c[axis] += h;
        Point4::from_array(c)
    }
}

impl fmt::Display for Point4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.x, self.y, self.z, self.xi)
    }
}

/// Coefficient ring for forms, vectors and (1,1)-tensors.
pub trait Coeff: Clone + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn from_f64(v: f64) -> Self;
    fn is_zero(&self) -> bool;
    fn plus(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
    fn negate(&self) -> Self;
    fn scaled(&self, s: f64) -> Self;
}

impl Coeff for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn negate(&self) -> Self {
        -self
    }
    fn scaled(&self, s: f64) -> Self {
        self * s
    }
}

impl Coeff for ScalarField {
    fn zero() -> Self {
        ScalarField::zero()
    }
    fn from_f64(v: f64) -> Self {
        ScalarField::constant(v)
    }
    fn is_zero(&self) -> bool {
        ScalarField::is_zero(self)
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn negate(&self) -> Self {
        -self
    }
    fn scaled(&self, s: f64) -> Self {
        self * s
    }
}

const BASIS: [&[&[usize]]; 5] = [
    &[&[]],
    &[&[0], &[1], &[2], &[3]],
    &[&[0, 1], &[0, 2], &[0, 3], &[1, 2], &[1, 3], &[2, 3]],
    &[&[0, 1, 2], &[0, 1, 3], &[0, 2, 3], &[1, 2, 3]],
    &[&[0, 1, 2, 3]],
];

/// Increasing index tuples of degree `p`, in storage order.
pub fn basis(p: usize) -> &'static [&'static [usize]] {
    BASIS[p]
}

fn index_of(sorted: &[usize]) -> usize {
    BASIS[sorted.len()].iter().position(|b| *b == sorted).expect("sorted tuple of distinct axes")
}

/// Sorts `indices` and returns the parity of the permutation, or `None` when
/// an axis repeats.
pub fn sort_with_sign(indices: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v = indices.to_vec();
    let mut sign = 1.0;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

fn complement(sorted: &[usize]) -> Vec<usize> {
    (0..4).filter(|a| !sorted.contains(a)).collect()
}

fn eta_product(indices: &[usize]) -> f64 {
    indices.iter().map(|&a| ETA[a]).product()
}

/// Contravariant vector with components `(V^x, V^y, V^z, V^ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector4<T> {
    pub comps: [T; 4],
}

pub type Vector4Value = Vector4<f64>;

impl<T: Coeff> Vector4<T> {
    pub fn new(comps: [T; 4]) -> Self {
        Vector4 { comps }
    }

    pub fn zero() -> Self {
        Vector4::new([T::zero(), T::zero(), T::zero(), T::zero()])
    }

    /// Coordinate field `∂_axis`.
    pub fn coordinate(axis: usize) -> Self {
        let mut v = Self::zero();
        v.comps[axis] = T::from_f64(1.0);
        v
    }

    pub fn plus(&self, o: &Self) -> Self {
        self.zip(o, T::plus)
    }

    pub fn minus(&self, o: &Self) -> Self {
        self.zip(o, T::minus)
    }

    pub fn negate(&self) -> Self {
        self.map(T::negate)
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|c| c.scaled(s))
    }

    pub fn times(&self, f: &T) -> Self {
        self.map(|c| c.times(f))
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Vector4<U> {
        Vector4 { comps: [f(&self.comps[0]), f(&self.comps[1]), f(&self.comps[2]), f(&self.comps[3])] }
    }

    fn zip(&self, o: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        Vector4::new([
            f(&self.comps[0], &o.comps[0]),
            f(&self.comps[1], &o.comps[1]),
            f(&self.comps[2], &o.comps[2]),
            f(&self.comps[3], &o.comps[3]),
        ])
    }

    /// `η(v, w)`.
    pub fn dot(&self, o: &Self) -> T {
        (0..4).fold(T::zero(), |acc, a| acc.plus(&self.comps[a].times(&o.comps[a]).scaled(ETA[a])))
    }

    /// Index lowering `v ↦ η(v, ·)`.
    pub fn flat(&self) -> Form<T> {
        Form { degree: 1, comps: (0..4).map(|a| self.comps[a].scaled(ETA[a])).collect() }
    }
}

impl Vector4<f64> {
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Antisymmetric covariant tensor of degree `0..=4`.
#[derive(Debug, Clone, PartialEq)]
pub struct Form<T> {
    degree: usize,
    comps: Vec<T>,
}

pub type PFormValue = Form<f64>;

impl<T: Coeff> Form<T> {
    pub fn zero(degree: usize) -> Self {
        assert!(degree <= 4, "degree exceeds 4");
        Form { degree, comps: vec![T::zero(); BASIS[degree].len()] }
    }

    pub fn from_components(degree: usize, comps: Vec<T>) -> Result<Self, ExteriorError> {
        if degree > 4 {
            return Err(ExteriorError::DegreeOverflow);
        }
        let expected = BASIS[degree].len();
        if comps.len() != expected {
            return Err(ExteriorError::ComponentCount { degree, expected, found: comps.len() });
        }
        Ok(Form { degree, comps })
    }

    pub fn scalar(value: T) -> Self {
        Form { degree: 0, comps: vec![value] }
    }

    /// Basis 1-form `dx^axis`.
    pub fn dx(axis: usize) -> Self {
        let mut f = Self::zero(1);
        f.comps[axis] = T::from_f64(1.0);
        f
    }

    /// `ω₀ = dx∧dy∧dz∧dξ`.
    pub fn volume() -> Self {
        Form { degree: 4, comps: vec![T::from_f64(1.0)] }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> &[T] {
        &self.comps
    }

    /// Component on an arbitrary index tuple, using the antisymmetric extension.
    pub fn component(&self, indices: &[usize]) -> T {
        assert_eq!(indices.len(), self.degree, "index count must equal degree");
        match sort_with_sign(indices) {
            Some((sorted, sign)) => self.comps[index_of(&sorted)].scaled(sign),
            None => T::zero(),
        }
    }

    /// Sets the component on `indices` (any order; sign adjusted).
    pub fn set(&mut self, indices: &[usize], value: T) {
        assert_eq!(indices.len(), self.degree, "index count must equal degree");
        let (sorted, sign) = sort_with_sign(indices).expect("indices must be distinct");
        self.comps[index_of(&sorted)] = value.scaled(sign);
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Form<U> {
        Form { degree: self.degree, comps: self.comps.iter().map(f).collect() }
    }

    fn zip(&self, o: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        assert_eq!(self.degree, o.degree, "degree mismatch");
        Form { degree: self.degree, comps: self.comps.iter().zip(&o.comps).map(|(a, b)| f(a, b)).collect() }
    }

    pub fn plus(&self, o: &Self) -> Self {
        self.zip(o, T::plus)
    }

    pub fn minus(&self, o: &Self) -> Self {
        self.zip(o, T::minus)
    }

    pub fn negate(&self) -> Self {
        self.map(T::negate)
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|c| c.scaled(s))
    }

    pub fn times(&self, f: &T) -> Self {
        self.map(|c| c.times(f))
    }

    /// Exterior product.
    pub fn wedge(&self, o: &Self) -> Result<Self, ExteriorError> {
        let degree = self.degree + o.degree;
        if degree > 4 {
            return Err(ExteriorError::DegreeOverflow);
        }
        let mut out = Self::zero(degree);
        for (i, a) in BASIS[self.degree].iter().enumerate() {
            if self.comps[i].is_zero() {
                continue;
            }
            for (j, b) in BASIS[o.degree].iter().enumerate() {
                if o.comps[j].is_zero() {
                    continue;
                }
                let joined: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
                if let Some((sorted, sign)) = sort_with_sign(&joined) {
                    let k = index_of(&sorted);
                    out.comps[k] = out.comps[k].plus(&self.comps[i].times(&o.comps[j]).scaled(sign));
                }
            }
        }
        Ok(out)
    }

    /// Hodge star, `(*α)_{ν…} = −(1/p!) α^{μ₁…μₚ} ε_{μ₁…μₚ ν…}` with `ε₁₂₃₄ = +1`.
    ///
    /// With this sign `*(dx∧dz + dx∧dξ) = dy∧dz + dy∧dξ`, and `** = −1` on 2-forms.
    pub fn hodge(&self) -> Self {
        let mut out = Self::zero(4 - self.degree);
        for (i, idx) in BASIS[self.degree].iter().enumerate() {
            let rest = complement(idx);
            let joined: Vec<usize> = idx.iter().chain(rest.iter()).copied().collect();
            let (_, sign) = sort_with_sign(&joined).expect("complementary tuples are disjoint");
            out.comps[index_of(&rest)] = self.comps[i].scaled(-sign * eta_product(idx));
        }
        out
    }

    /// Interior product `i(v)α`, contracting the first slot.
    pub fn interior(&self, v: &Vector4<T>) -> Result<Self, ExteriorError> {
        if self.degree == 0 {
            return Err(ExteriorError::InteriorOfScalar);
        }
        let mut out = Self::zero(self.degree - 1);
        for (j, rest) in BASIS[self.degree - 1].iter().enumerate() {
            let mut acc = T::zero();
            for mu in 0..4 {
                if rest.contains(&mu) || v.comps[mu].is_zero() {
                    continue;
                }
                let mut idx = vec![mu];
                idx.extend_from_slice(rest);
                acc = acc.plus(&v.comps[mu].times(&self.component(&idx)));
            }
            out.comps[j] = acc;
        }
        Ok(out)
    }

    /// Index raising of a 1-form.
    pub fn sharp(&self) -> Result<Vector4<T>, ExteriorError> {
        self.expect_degree(1)?;
        Ok(Vector4::new([
            self.comps[0].scaled(ETA[0]),
            self.comps[1].scaled(ETA[1]),
            self.comps[2].scaled(ETA[2]),
            self.comps[3].scaled(ETA[3]),
        ]))
    }

    /// Pairing `⟨α, v⟩` of a 1-form with a vector.
    pub fn pair(&self, v: &Vector4<T>) -> Result<T, ExteriorError> {
        self.expect_degree(1)?;
        Ok((0..4).fold(T::zero(), |acc, a| acc.plus(&self.comps[a].times(&v.comps[a]))))
    }

    pub fn expect_degree(&self, expected: usize) -> Result<(), ExteriorError> {
        if self.degree == expected {
            Ok(())
        } else {
            Err(ExteriorError::DegreeMismatch { expected, found: self.degree })
        }
    }
}

impl Form<f64> {
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// `F_{μν} G^{μν}` summed over all index pairs.
pub fn invariant_contraction<T: Coeff>(f: &Form<T>, g: &Form<T>) -> Result<T, ExteriorError> {
    f.expect_degree(2)?;
    g.expect_degree(2)?;
    let mut acc = T::zero();
    for (i, idx) in BASIS[2].iter().enumerate() {
        acc = acc.plus(&f.comps[i].times(&g.comps[i]).scaled(2.0 * eta_product(idx)));
    }
    Ok(acc)
}

/// The 1-form `F^{αβ} H_{αβμ} dx^μ` summed over all `α, β`.
pub fn flux_contraction<T: Coeff>(f: &Form<T>, h: &Form<T>) -> Result<Form<T>, ExteriorError> {
    f.expect_degree(2)?;
    h.expect_degree(3)?;
    let mut out = Form::zero(1);
    for mu in 0..4 {
        let mut acc = T::zero();
        for (i, idx) in BASIS[2].iter().enumerate() {
            if idx.contains(&mu) || f.comps[i].is_zero() {
                continue;
            }
            let hc = h.component(&[idx[0], idx[1], mu]);
            acc = acc.plus(&f.comps[i].times(&hc).scaled(2.0 * eta_product(idx)));
        }
        out.comps[mu] = acc;
    }
    Ok(out)
}
