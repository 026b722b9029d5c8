//! Compiled evaluation of scalar-field graphs.
//!
//! [`Program`] flattens a set of root fields into a topologically sorted tape,
//! deduplicating shared nodes. With the dual-number provider each tape slot
//! holds a Taylor jet whose order is the number of deferred derivatives still
//! to be taken above it, so nested `∂` are exact to rounding. With the
//! finite-difference provider the original graph is walked and every
//! [`Node::Partial`] becomes a central difference.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exterior::{Form, Point4, Vector4};
use crate::field::{bump, radial_bump, Node, ScalarField, UnaryFn};
use crate::jet::{self, series, Scratch, MAX_ORDER};
use crate::tensor::Tensor11;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of negative value {0}")]
    NegativeSqrt(f64),
    #[error("non-integer power of non-positive base {0}")]
    NonPositiveBase(f64),
    #[error("{0} is not differentiable at this point")]
    NotDifferentiable(&'static str),
    #[error("derivative nesting exceeds supported jet order {MAX_ORDER}")]
    OrderTooHigh,
}

/// How partial derivatives are resolved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DerivativeProvider {
    /// Forward-mode Taylor jets; exact up to rounding.
    #[default]
    Dual,
    /// Second-order central differences with the given step.
    FiniteDifference { step: f64 },
}

impl DerivativeProvider {
    pub const DEFAULT_FD_STEP: f64 = 1e-5;

    pub fn fd() -> Self {
        DerivativeProvider::FiniteDifference { step: Self::DEFAULT_FD_STEP }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DerivativeProvider::Dual => "dual",
            DerivativeProvider::FiniteDifference { .. } => "fd",
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Var(usize),
    Neg(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Powi(usize, i32),
    Powf(usize, f64),
    Unary(UnaryFn, usize),
    Atan2(usize, usize),
    Partial(usize, usize),
}

#[derive(Debug, Clone)]
struct Instr {
    op: Op,
    order: usize,
    offset: usize,
}

/// A set of scalar fields compiled for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Program {
    roots: Vec<ScalarField>,
    tape: Vec<Instr>,
    outputs: Vec<usize>,
    buffer_len: usize,
    max_order: usize,
}

impl Program {
    pub fn new(roots: Vec<ScalarField>) -> Self {
        let mut slots: HashMap<*const Node, usize> = HashMap::new();
        let mut ops: Vec<Op> = Vec::new();
        let outputs = roots.iter().map(|r| lower(r, &mut slots, &mut ops)).collect::<Vec<_>>();

        let mut orders = vec![0usize; ops.len()];
        for i in (0..ops.len()).rev() {
            let k = orders[i];
            let mut need = |child: usize, extra: usize| {
                orders[child] = orders[child].max(k + extra);
            };
            match ops[i] {
                Op::Const(_) | Op::Var(_) => {}
                Op::Neg(a) | Op::Powi(a, _) | Op::Powf(a, _) | Op::Unary(_, a) => need(a, 0),
                Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Div(a, b) | Op::Atan2(a, b) => {
                    need(a, 0);
                    need(b, 0);
                }
                Op::Partial(a, _) => need(a, 1),
            }
        }
        let max_order = orders.iter().copied().max().unwrap_or(0);

        let mut offset = 0;
        let tape = ops
            .into_iter()
            .zip(orders)
            .map(|(op, order)| {
                let instr = Instr { op, order, offset };
                offset += jet::ncoef(order.min(MAX_ORDER));
                instr
            })
            .collect();
        Program { roots, tape, outputs, buffer_len: offset, max_order }
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn roots(&self) -> &[ScalarField] {
        &self.roots
    }

    pub fn evaluator(&self) -> Evaluator<'_> {
        Evaluator { program: self, buffer: vec![0.0; self.buffer_len], work: Work::default() }
    }

    /// Evaluates every root at `point`.
    pub fn eval(&self, point: Point4, provider: DerivativeProvider) -> Result<Vec<f64>, EvalError> {
        let mut ev = self.evaluator();
        let mut out = vec![0.0; self.len()];
        ev.eval_into(point, provider, &mut out)?;
        Ok(out)
    }

    /// Evaluates every root at every point; rows follow `points`.
    pub fn eval_many(&self, points: &[Point4], provider: DerivativeProvider) -> Result<Vec<Vec<f64>>, EvalError> {
        points
            .par_iter()
            .map_init(
                || self.evaluator(),
                |ev, &p| {
                    let mut out = vec![0.0; self.len()];
                    ev.eval_into(p, provider, &mut out).map(|_| out)
                },
            )
            .collect()
    }
}

fn lower(field: &ScalarField, slots: &mut HashMap<*const Node, usize>, ops: &mut Vec<Op>) -> usize {
    if let Some(&slot) = slots.get(&field.ptr()) {
        return slot;
    }
    let op = match field.as_node() {
        Node::Const(c) => Op::Const(*c),
        Node::Var(v) => Op::Var(*v),
        Node::Neg(a) => Op::Neg(lower(a, slots, ops)),
        Node::Add(a, b) => Op::Add(lower(a, slots, ops), lower(b, slots, ops)),
        Node::Sub(a, b) => Op::Sub(lower(a, slots, ops), lower(b, slots, ops)),
        Node::Mul(a, b) => Op::Mul(lower(a, slots, ops), lower(b, slots, ops)),
        Node::Div(a, b) => Op::Div(lower(a, slots, ops), lower(b, slots, ops)),
        Node::Powi(a, n) => Op::Powi(lower(a, slots, ops), *n),
        Node::Powf(a, r) => Op::Powf(lower(a, slots, ops), *r),
        Node::Unary(f, a) => Op::Unary(*f, lower(a, slots, ops)),
        Node::Atan2(a, b) => Op::Atan2(lower(a, slots, ops), lower(b, slots, ops)),
        Node::Partial(a, v) => Op::Partial(lower(a, slots, ops), *v),
    };
    ops.push(op);
    let slot = ops.len() - 1;
    slots.insert(field.ptr(), slot);
    slot
}

/// Reusable evaluation state for one [`Program`].
pub struct Evaluator<'p> {
    program: &'p Program,
    buffer: Vec<f64>,
    work: Work,
}

/// Per-evaluator scratch shared by the jet kernels.
struct Work {
    scratch: Scratch,
    coeffs: [f64; MAX_ORDER + 2],
    aux: [Vec<f64>; 4],
}

impl Default for Work {
    fn default() -> Self {
        let n = jet::ncoef(MAX_ORDER);
        Work {
            scratch: Scratch::default(),
            coeffs: [0.0; MAX_ORDER + 2],
            aux: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }
}

impl Evaluator<'_> {
    pub fn eval_into(&mut self, point: Point4, provider: DerivativeProvider, out: &mut [f64]) -> Result<(), EvalError> {
        match provider {
            DerivativeProvider::Dual => {
                self.run_tape(point)?;
                for (o, &slot) in out.iter_mut().zip(&self.program.outputs) {
                    *o = self.buffer[self.program.tape[slot].offset];
                }
            }
            DerivativeProvider::FiniteDifference { step } => {
                let mut fd = FdEval { step, cache: HashMap::new() };
                for (o, root) in out.iter_mut().zip(&self.program.roots) {
                    *o = fd.eval(root, point)?;
                }
            }
        }
        Ok(())
    }

    fn run_tape(&mut self, point: Point4) -> Result<(), EvalError> {
        if self.program.max_order > MAX_ORDER {
            return Err(EvalError::OrderTooHigh);
        }
        let coords = point.to_array();
        let tape = &self.program.tape;
        let work = &mut self.work;
        for instr in tape {
            let k = instr.order;
            let n = jet::ncoef(k);
            let (done, rest) = self.buffer.split_at_mut(instr.offset);
            let out = &mut rest[..n];
            let arg = |slot: usize| -> &[f64] {
                let o = tape[slot].offset;
                &done[o..o + jet::ncoef(tape[slot].order)]
            };
            match instr.op {
                Op::Const(c) => jet::constant(c, out),
                Op::Var(v) => jet::variable(coords[v], v, out),
                Op::Neg(a) => {
                    for (o, x) in out.iter_mut().zip(arg(a)) {
                        *o = -x;
                    }
                }
                Op::Add(a, b) => {
                    for ((o, x), y) in out.iter_mut().zip(arg(a)).zip(arg(b)) {
                        *o = x + y;
                    }
                }
                Op::Sub(a, b) => {
                    for ((o, x), y) in out.iter_mut().zip(arg(a)).zip(arg(b)) {
                        *o = x - y;
                    }
                }
                Op::Mul(a, b) => jet::mul(arg(a), arg(b), out, k),
                Op::Div(a, b) => {
                    let denom = arg(b);
                    if denom[0] == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    if k == 0 {
                        out[0] = arg(a)[0] / denom[0];
                    } else {
                        let Work { scratch, coeffs, aux } = work;
                        series::recip(denom[0], k, coeffs);
                        jet::compose(denom, coeffs, &mut aux[0], k, scratch);
                        jet::mul(arg(a), &aux[0], out, k);
                    }
                }
                Op::Powi(a, m) => powi_jet(arg(a), m, out, k, work)?,
                Op::Powf(a, r) => {
                    let base = arg(a);
                    if base[0] < 0.0 || (base[0] == 0.0 && (k > 0 || r < 0.0)) {
                        return Err(EvalError::NonPositiveBase(base[0]));
                    }
                    series::powf(base[0], r, k, &mut work.coeffs);
                    jet::compose(base, &work.coeffs, out, k, &mut work.scratch);
                }
                Op::Unary(f, a) => unary_jet(f, arg(a), out, k, work)?,
                Op::Atan2(a, b) => atan2_jet(arg(a), arg(b), out, k, work)?,
                Op::Partial(a, v) => jet::partial(arg(a), v, out, k),
            }
        }
        Ok(())
    }
}

fn powi_jet(base: &[f64], n: i32, out: &mut [f64], k: usize, work: &mut Work) -> Result<(), EvalError> {
    if k == 0 {
        if n < 0 && base[0] == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        out[0] = base[0].powi(n);
        return Ok(());
    }
    let len = jet::ncoef(k);
    let Work { scratch, coeffs, aux } = work;
    let [acc, sq, tmp, _] = aux;
    jet::constant(1.0, &mut acc[..len]);
    sq[..len].copy_from_slice(&base[..len]);
    let mut e = n.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            jet::mul(acc, sq, tmp, k);
            acc[..len].copy_from_slice(&tmp[..len]);
        }
        e >>= 1;
        if e > 0 {
            jet::mul(sq, sq, tmp, k);
            sq[..len].copy_from_slice(&tmp[..len]);
        }
    }
    if n < 0 {
        if acc[0] == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        series::recip(acc[0], k, coeffs);
        jet::compose(acc, coeffs, out, k, scratch);
    } else {
        out[..len].copy_from_slice(&acc[..len]);
    }
    Ok(())
}

fn unary_jet(f: UnaryFn, a: &[f64], out: &mut [f64], k: usize, work: &mut Work) -> Result<(), EvalError> {
    let t = a[0];
    let c = &mut work.coeffs;
    match f {
        UnaryFn::Sin => series::sin(t, k, c),
        UnaryFn::Cos => series::cos(t, k, c),
        UnaryFn::Exp => series::exp(t, k, c),
        UnaryFn::Sqrt => {
            if t < 0.0 {
                return Err(EvalError::NegativeSqrt(t));
            }
            if t == 0.0 && k > 0 {
                return Err(EvalError::NotDifferentiable("sqrt"));
            }
            series::powf(t, 0.5, k, c);
        }
        UnaryFn::Bump | UnaryFn::RadialBump => {
            let squared = f == UnaryFn::Bump;
            let inside = if squared { t.abs() < 1.0 } else { t < 1.0 };
            if !inside {
                jet::constant(0.0, &mut out[..jet::ncoef(k)]);
            } else if k == 0 {
                out[0] = if squared { bump(t) } else { radial_bump(t) };
            } else {
                mollifier_jet(squared, a, out, k, work);
            }
            return Ok(());
        }
    }
    jet::compose(a, &work.coeffs, out, k, &mut work.scratch);
    Ok(())
}

// exp(−1/(1 − s)) with s = t² (bump) or s = t (radial bump).
fn mollifier_jet(squared: bool, a: &[f64], out: &mut [f64], k: usize, work: &mut Work) {
    let len = jet::ncoef(k);
    let Work { scratch, coeffs, aux } = work;
    let [gap, inv, _, _] = aux;
    if squared {
        jet::mul(a, a, gap, k);
    } else {
        gap[..len].copy_from_slice(&a[..len]);
    }
    for g in gap[..len].iter_mut() {
        *g = -*g;
    }
    gap[0] += 1.0;
    series::recip(gap[0], k, coeffs);
    jet::compose(gap, coeffs, inv, k, scratch);
    for v in inv[..len].iter_mut() {
        *v = -*v;
    }
    series::exp(inv[0], k, coeffs);
    jet::compose(inv, coeffs, out, k, scratch);
}

// atan2(y, x) = atan2(y₀, x₀) + atan((x₀ y − y₀ x) / (x₀ x + y₀ y)).
fn atan2_jet(y: &[f64], x: &[f64], out: &mut [f64], k: usize, work: &mut Work) -> Result<(), EvalError> {
    let (y0, x0) = (y[0], x[0]);
    if k == 0 {
        out[0] = y0.atan2(x0);
        return Ok(());
    }
    if x0 == 0.0 && y0 == 0.0 {
        return Err(EvalError::NotDifferentiable("atan2"));
    }
    let len = jet::ncoef(k);
    let Work { scratch, coeffs, aux } = work;
    let [num, den, inv, w] = aux;
    for i in 0..len {
        num[i] = x0 * y[i] - y0 * x[i];
        den[i] = x0 * x[i] + y0 * y[i];
    }
    series::recip(den[0], k, coeffs);
    jet::compose(den, coeffs, inv, k, scratch);
    jet::mul(num, inv, w, k);
    w[0] = 0.0;
    series::atan_at_zero(k, coeffs);
    jet::compose(w, coeffs, out, k, scratch);
    out[0] = y0.atan2(x0);
    Ok(())
}

struct FdEval {
    step: f64,
    cache: HashMap<*const Node, f64>,
}

impl FdEval {
    fn eval(&mut self, field: &ScalarField, p: Point4) -> Result<f64, EvalError> {
        let shared = field.is_shared();
        if shared {
            if let Some(&v) = self.cache.get(&field.ptr()) {
                return Ok(v);
            }
        }
        let value = match field.as_node() {
            Node::Const(c) => *c,
            Node::Var(v) => p.to_array()[*v],
            Node::Neg(a) => -self.eval(a, p)?,
            Node::Add(a, b) => self.eval(a, p)? + self.eval(b, p)?,
            Node::Sub(a, b) => self.eval(a, p)? - self.eval(b, p)?,
            Node::Mul(a, b) => self.eval(a, p)? * self.eval(b, p)?,
            Node::Div(a, b) => {
                let num = self.eval(a, p)?;
                let den = self.eval(b, p)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                num / den
            }
            Node::Powi(a, n) => {
                let base = self.eval(a, p)?;
                if *n < 0 && base == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                base.powi(*n)
            }
            Node::Powf(a, r) => {
                let base = self.eval(a, p)?;
                if base < 0.0 || (base == 0.0 && *r < 0.0) {
                    return Err(EvalError::NonPositiveBase(base));
                }
                base.powf(*r)
            }
            Node::Unary(f, a) => {
                let t = self.eval(a, p)?;
                if *f == UnaryFn::Sqrt && t < 0.0 {
                    return Err(EvalError::NegativeSqrt(t));
                }
                f.apply(t)
            }
            Node::Atan2(a, b) => self.eval(a, p)?.atan2(self.eval(b, p)?),
            Node::Partial(a, v) => {
                let h = self.step;
                let mut fwd = FdEval { step: h, cache: HashMap::new() };
                let mut bwd = FdEval { step: h, cache: HashMap::new() };
                let plus = fwd.eval(a, p.shifted(*v, h))?;
                let minus = bwd.eval(a, p.shifted(*v, -h))?;
                (plus - minus) / (2.0 * h)
            }
        };
        if shared {
            self.cache.insert(field.ptr(), value);
        }
        Ok(value)
    }
}

impl ScalarField {
    /// One-off evaluation; compile a [`Program`] when evaluating repeatedly.
    pub fn eval(&self, point: Point4, provider: DerivativeProvider) -> Result<f64, EvalError> {
        Program::new(vec![self.clone()]).eval(point, provider).map(|v| v[0])
    }
}

/// Structured collections of scalar fields that evaluate to matching
/// structured values (forms, vectors, tensors, tuples).
pub trait FieldSet {
    type Value;
    fn push_fields(&self, out: &mut Vec<ScalarField>);
    fn read_value(&self, values: &mut std::slice::Iter<'_, f64>) -> Self::Value;
}

impl FieldSet for ScalarField {
    type Value = f64;
    fn push_fields(&self, out: &mut Vec<ScalarField>) {
        out.push(self.clone());
    }
    fn read_value(&self, values: &mut std::slice::Iter<'_, f64>) -> f64 {
        *values.next().expect("value count matches field count")
    }
}

impl FieldSet for Form<ScalarField> {
    type Value = Form<f64>;
    fn push_fields(&self, out: &mut Vec<ScalarField>) {
        out.extend(self.components().iter().cloned());
    }
    fn read_value(&self, values: &mut std::slice::Iter<'_, f64>) -> Form<f64> {
        let comps = self.components().iter().map(|c| c.read_value(values)).collect();
        Form::from_components(self.degree(), comps).expect("component count preserved")
    }
}

impl FieldSet for Vector4<ScalarField> {
    type Value = Vector4<f64>;
    fn push_fields(&self, out: &mut Vec<ScalarField>) {
        out.extend(self.comps.iter().cloned());
    }
    fn read_value(&self, values: &mut std::slice::Iter<'_, f64>) -> Vector4<f64> {
        Vector4::new(std::array::from_fn(|k| self.comps[k].read_value(values)))
    }
}

impl FieldSet for Tensor11<ScalarField> {
    type Value = Tensor11<f64>;
    fn push_fields(&self, out: &mut Vec<ScalarField>) {
        out.extend(self.m.iter().flatten().cloned());
    }
    fn read_value(&self, values: &mut std::slice::Iter<'_, f64>) -> Tensor11<f64> {
        let flat: Vec<f64> = (0..16).map(|_| *values.next().expect("value count matches")).collect();
        Tensor11::from_fn(|r, c| flat[r * 4 + c])
    }
}

impl<S: FieldSet> FieldSet for Vec<S> {
    type Value = Vec<S::Value>;
    fn push_fields(&self, out: &mut Vec<ScalarField>) {
        self.iter().for_each(|s| s.push_fields(out));
    }
    fn read_value(&self, values: &mut std::slice::Iter<'_, f64>) -> Self::Value {
        self.iter().map(|s| s.read_value(values)).collect()
    }
}

macro_rules! tuple_field_set {
    ($($name:ident . $idx:tt),+) => {
        impl<$($name: FieldSet),+> FieldSet for ($($name,)+) {
            type Value = ($($name::Value,)+);
            fn push_fields(&self, out: &mut Vec<ScalarField>) {
                $(self.$idx.push_fields(out);)+
            }
            fn read_value(&self, values: &mut std::slice::Iter<'_, f64>) -> Self::Value {
                ($(self.$idx.read_value(values),)+)
            }
        }
    };
}

tuple_field_set!(A.0, B.1);
tuple_field_set!(A.0, B.1, C.2);
tuple_field_set!(A.0, B.1, C.2, D.3);

/// A [`FieldSet`] compiled once and evaluated at many points.
pub struct CompiledSet<'s, S: FieldSet> {
    set: &'s S,
    program: Program,
}

impl<'s, S: FieldSet + Sync> CompiledSet<'s, S>
where
    S::Value: Send,
{
    pub fn new(set: &'s S) -> Self {
        let mut fields = Vec::new();
        set.push_fields(&mut fields);
        CompiledSet { set, program: Program::new(fields) }
    }

    pub fn eval(&self, point: Point4, provider: DerivativeProvider) -> Result<S::Value, EvalError> {
        let flat = self.program.eval(point, provider)?;
        Ok(self.set.read_value(&mut flat.iter()))
    }

    /// Values at every point, in point order; parallel over points.
    pub fn eval_many(&self, points: &[Point4], provider: DerivativeProvider) -> Result<Vec<S::Value>, EvalError> {
        let n = self.program.len();
        points
            .par_iter()
            .map_init(
                || (self.program.evaluator(), vec![0.0; n]),
                |(ev, buf), &p| {
                    ev.eval_into(p, provider, buf)?;
                    Ok(self.set.read_value(&mut buf.iter()))
                },
            )
            .collect()
    }
}

/// Evaluates a field set at a single point.
pub fn eval_at<S: FieldSet + Sync>(set: &S, point: Point4, provider: DerivativeProvider) -> Result<S::Value, EvalError>
where
    S::Value: Send,
{
    CompiledSet::new(set).eval(point, provider)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64, z: f64, xi: f64) -> Point4 {
        Point4::new(x, y, z, xi)
    }

    #[test]
    fn values_match_direct_arithmetic() {
        let x = ScalarField::x();
        let y = ScalarField::y();
        let f = (&x * &y + x.sin()) / (y.square() + 1.0);
        let p = pt(0.7, -1.3, 0.0, 0.0);
        let expect = (0.7 * -1.3 + 0.7f64.sin()) / (1.69 + 1.0);
        assert!((f.eval(p, DerivativeProvider::Dual).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn nested_partials_of_polynomial() {
        // f = x³ y² ; ∂x∂y f = 6 x² y
        let f = ScalarField::x().powi(3) * ScalarField::y().powi(2);
        let g = f.partial(0).partial(1);
        let v = g.eval(pt(1.5, -2.0, 0.0, 0.0), DerivativeProvider::Dual).unwrap();
        assert!((v - 6.0 * 2.25 * -2.0).abs() < 1e-12);
    }

    #[test]
    fn dual_and_fd_agree_on_transcendental() {
        let x = ScalarField::x();
        let z = ScalarField::z();
        let f = (&x * 0.5).exp() * (z - &x).cos() + ScalarField::y().atan2(&(x + 2.0));
        let p = pt(0.3, 0.4, -0.2, 0.1);
        for axis in 0..4 {
            let d = f.partial(axis);
            let a = d.eval(p, DerivativeProvider::Dual).unwrap();
            let b = d.eval(p, DerivativeProvider::fd()).unwrap();
            assert!((a - b).abs() < 1e-8, "axis {axis}: {a} vs {b}");
        }
    }

    #[test]
    fn division_by_zero_is_reported() {
        let f = ScalarField::one() / ScalarField::x();
        assert_eq!(f.eval(pt(0.0, 0.0, 0.0, 0.0), DerivativeProvider::Dual), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn bump_derivatives_vanish_outside_support() {
        let f = ScalarField::x().bump();
        let d2 = f.partial(0).partial(0);
        assert_eq!(d2.eval(pt(1.0, 0.0, 0.0, 0.0), DerivativeProvider::Dual).unwrap(), 0.0);
        assert_eq!(d2.eval(pt(-3.0, 0.0, 0.0, 0.0), DerivativeProvider::Dual).unwrap(), 0.0);
    }

    #[test]
    fn bump_second_derivative_matches_closed_form() {
        // b(t) = exp(-1/(1-t²)); b' = -2t/(1-t²)² b
        let t = 0.4f64;
        let f = ScalarField::x().bump();
        let d1 = f.partial(0).eval(pt(t, 0.0, 0.0, 0.0), DerivativeProvider::Dual).unwrap();
        let b = (-1.0 / (1.0 - t * t)).exp();
        let expect = -2.0 * t / (1.0 - t * t).powi(2) * b;
        assert!((d1 - expect).abs() < 1e-14);
        let d2 = f.partial(0).partial(0).eval(pt(t, 0.0, 0.0, 0.0), DerivativeProvider::Dual).unwrap();
        let h = 1e-4;
        let fd = (d1_at(t + h) - d1_at(t - h)) / (2.0 * h);
        assert!((d2 - fd).abs() < 1e-6);

        fn d1_at(t: f64) -> f64 {
            let b = (-1.0 / (1.0 - t * t)).exp();
            -2.0 * t / (1.0 - t * t).powi(2) * b
        }
    }
}
