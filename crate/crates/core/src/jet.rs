//! Truncated multivariate Taylor jets in the four coordinates of ℝ⁴.
//!
//! A jet of order `K` stores the Taylor coefficients `f^(α)(p) / α!` for every
//! multi-index `α` with `|α| ≤ K`. Order 1 is the ordinary dual number with a
//! four-component infinitesimal part; higher orders let nested partial
//! derivatives be evaluated in forward mode without finite differencing.
//!
//! Monomials are laid out in graded order (all degree-0, then degree-1, ...),
//! so truncating a jet to a lower order is taking a prefix of its coefficient
//! slice. All arithmetic here works on plain slices so that the compiled
//! evaluator in [`crate::program`] can keep every intermediate in one flat
//! buffer.

use std::sync::OnceLock;

/// Highest jet order supported by the tables.
pub const MAX_ORDER: usize = 6;

/// Number of coefficients of a jet of order `order` in four variables.
pub fn ncoef(order: usize) -> usize {
    tables().ncoef[order]
}

pub(crate) struct JetTables {
    monomials: Vec<[u8; 4]>,
    ncoef: [usize; MAX_ORDER + 1],
    /// Product triples `(i, j, k)` with `m_i + m_j = m_k`, sorted by `|m_k|`.
    mul: Vec<(u16, u16, u16)>,
    /// `mul_len[K]` = number of leading triples with `|m_k| ≤ K`.
    mul_len: [usize; MAX_ORDER + 1],
    /// `shift[i][v]` = index of `m_i + e_v` (only valid for `|m_i| < MAX_ORDER`).
    shift: Vec<[u16; 4]>,
}

pub(crate) fn tables() -> &'static JetTables {
    static TABLES: OnceLock<JetTables> = OnceLock::new();
    TABLES.get_or_init(JetTables::build)
}

impl JetTables {
    fn build() -> Self {
        let mut monomials = Vec::new();
        let mut ncoef = [0usize; MAX_ORDER + 1];
        for degree in 0..=MAX_ORDER {
            // Lexicographically descending exponents so that degree 1 comes out
            // as e_0, e_1, e_2, e_3.
            let mut level = Vec::new();
            for a in (0..=degree).rev() {
                for b in (0..=degree - a).rev() {
                    for c in (0..=degree - a - b).rev() {
                        let d = degree - a - b - c;
                        level.push([a as u8, b as u8, c as u8, d as u8]);
                    }
                }
            }
            monomials.extend(level);
            ncoef[degree] = monomials.len();
        }

        let index_of = |m: [u8; 4]| -> Option<usize> { monomials.iter().position(|&x| x == m) };
        let degree = |m: &[u8; 4]| m.iter().map(|&e| e as usize).sum::<usize>();

        let mut mul = Vec::new();
        for (i, mi) in monomials.iter().enumerate() {
            for (j, mj) in monomials.iter().enumerate() {
                if degree(mi) + degree(mj) > MAX_ORDER {
                    continue;
                }
                let mk = [mi[0] + mj[0], mi[1] + mj[1], mi[2] + mj[2], mi[3] + mj[3]];
                let k = index_of(mk).expect("monomial table is closed under products");
                mul.push((i as u16, j as u16, k as u16));
            }
        }
        mul.sort_by_key(|&(_, _, k)| degree(&monomials[k as usize]));
        let mut mul_len = [0usize; MAX_ORDER + 1];
        for (order, len) in mul_len.iter_mut().enumerate() {
            *len = mul.iter().take_while(|&&(_, _, k)| degree(&monomials[k as usize]) <= order).count();
        }

        let shift = monomials
            .iter()
            .map(|m| {
                let mut row = [u16::MAX; 4];
                if degree(m) < MAX_ORDER {
                    for (v, slot) in row.iter_mut().enumerate() {
                        let mut next = *m;
                        next[v] += 1;
                        *slot = index_of(next).expect("shifted monomial exists") as u16;
                    }
                }
                row
            })
            .collect();

        JetTables { monomials, ncoef, mul, mul_len, shift }
    }
}

/// Writes the jet of the coordinate function `x_axis` at `value`.
pub fn variable(value: f64, axis: usize, out: &mut [f64]) {
    out.fill(0.0);
    out[0] = value;
    if out.len() > 1 {
        out[1 + axis] = 1.0;
    }
}

/// Writes a constant jet.
pub fn constant(value: f64, out: &mut [f64]) {
    out.fill(0.0);
    out[0] = value;
}

/// `out = a * b` truncated to `order`.
pub fn mul(a: &[f64], b: &[f64], out: &mut [f64], order: usize) {
    if order == 0 {
        out[0] = a[0] * b[0];
        return;
    }
    let t = tables();
    out[..t.ncoef[order]].fill(0.0);
    for &(i, j, k) in &t.mul[..t.mul_len[order]] {
        out[k as usize] += a[i as usize] * b[j as usize];
    }
}

/// `out = ∂f/∂x_axis` at order `order`, reading `f` at order `order + 1`.
pub fn partial(f: &[f64], axis: usize, out: &mut [f64], order: usize) {
    let t = tables();
    for i in 0..t.ncoef[order] {
        let exponent = t.monomials[i][axis] as f64 + 1.0;
        out[i] = exponent * f[t.shift[i][axis] as usize];
    }
}

/// Scratch space for [`compose`]; sized for the largest supported order.
pub struct Scratch {
    power: Vec<f64>,
    next: Vec<f64>,
}

impl Default for Scratch {
    fn default() -> Self {
        let n = ncoef(MAX_ORDER);
        Scratch { power: vec![0.0; n], next: vec![0.0; n] }
    }
}

/// `out = Σ_k c_k h^k` where `h = a − a₀` is the nilpotent part of `a` and
/// `c_k` are the Taylor coefficients of a univariate function at `a₀`.
pub fn compose(a: &[f64], coeffs: &[f64], out: &mut [f64], order: usize, scratch: &mut Scratch) {
    let n = ncoef(order);
    out[..n].fill(0.0);
    out[0] = coeffs[0];
    if order == 0 {
        return;
    }
    let Scratch { power, next, .. } = scratch;
    power[..n].copy_from_slice(&a[..n]);
    power[0] = 0.0;
    for k in 1..=order {
        let c = coeffs[k];
        if c != 0.0 {
            for i in 0..n {
                out[i] += c * power[i];
            }
        }
        if k < order {
            mul_nilpotent(power, a, next, order);
            power[..n].copy_from_slice(&next[..n]);
        }
    }
}

// power * (a − a₀); the constant term of `a` is skipped.
fn mul_nilpotent(power: &[f64], a: &[f64], out: &mut [f64], order: usize) {
    let t = tables();
    out[..t.ncoef[order]].fill(0.0);
    for &(i, j, k) in &t.mul[..t.mul_len[order]] {
        if j == 0 {
            continue;
        }
        out[k as usize] += power[i as usize] * a[j as usize];
    }
}

/// Taylor coefficients `f^(k)(x)/k!` for `k = 0..=order` of common functions.
pub mod series {
    pub fn exp(x: f64, order: usize, c: &mut [f64]) {
        let e = x.exp();
        let mut fact = 1.0;
        for (k, ck) in c.iter_mut().enumerate().take(order + 1) {
            if k > 0 {
                fact *= k as f64;
            }
            *ck = e / fact;
        }
    }

    pub fn sin(x: f64, order: usize, c: &mut [f64]) {
        let (s, co) = x.sin_cos();
        let cycle = [s, co, -s, -co];
        let mut fact = 1.0;
        for (k, ck) in c.iter_mut().enumerate().take(order + 1) {
            if k > 0 {
                fact *= k as f64;
            }
            *ck = cycle[k % 4] / fact;
        }
    }

    pub fn cos(x: f64, order: usize, c: &mut [f64]) {
        let (s, co) = x.sin_cos();
        let cycle = [co, -s, -co, s];
        let mut fact = 1.0;
        for (k, ck) in c.iter_mut().enumerate().take(order + 1) {
            if k > 0 {
                fact *= k as f64;
            }
            *ck = cycle[k % 4] / fact;
        }
    }

    /// `1/(x+h)`; caller guarantees `x != 0`.
    pub fn recip(x: f64, order: usize, c: &mut [f64]) {
        let inv = 1.0 / x;
        let mut term = inv;
        for ck in c.iter_mut().take(order + 1) {
            *ck = term;
            term *= -inv;
        }
    }

    /// `(x+h)^r`; caller guarantees `x > 0` whenever `order > 0`.
    pub fn powf(x: f64, r: f64, order: usize, c: &mut [f64]) {
        c[0] = x.powf(r);
        let mut binom = 1.0;
        for k in 1..=order {
            binom *= (r - (k as f64 - 1.0)) / k as f64;
            c[k] = binom * x.powf(r - k as f64);
        }
    }

    /// `atan(h)` around zero.
    pub fn atan_at_zero(order: usize, c: &mut [f64]) {
        for (k, ck) in c.iter_mut().enumerate().take(order + 1) {
            *ck = if k % 2 == 1 {
                let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                sign / k as f64
            } else {
                0.0
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_binomials() {
        assert_eq!(ncoef(0), 1);
        assert_eq!(ncoef(1), 5);
        assert_eq!(ncoef(2), 15);
        assert_eq!(ncoef(3), 35);
        assert_eq!(ncoef(MAX_ORDER), 210);
    }

    #[test]
    fn degree_one_monomials_are_coordinate_directions() {
        let t = tables();
        for v in 0..4 {
            let mut e = [0u8; 4];
            e[v] = 1;
            assert_eq!(t.monomials[1 + v], e);
        }
    }

    #[test]
    fn product_of_variables() {
        // (x y) at (2, 3): value 6, ∂x = 3, ∂y = 2, ∂x∂y coefficient 1.
        let n = ncoef(2);
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut xy = vec![0.0; n];
        variable(2.0, 0, &mut x);
        variable(3.0, 1, &mut y);
        mul(&x, &y, &mut xy, 2);
        assert_eq!(xy[0], 6.0);
        assert_eq!(xy[1], 3.0);
        assert_eq!(xy[2], 2.0);
        let mut dx = vec![0.0; ncoef(1)];
        partial(&xy, 0, &mut dx, 1);
        assert_eq!(dx[0], 3.0);
        assert_eq!(dx[2], 1.0);
    }

    #[test]
    fn composed_exp_matches_closed_form() {
        // exp(x^2) at x = 0.3: f' = 2x e^{x²}, f'' = (2 + 4x²) e^{x²}
        let order = 2;
        let n = ncoef(order);
        let mut x = vec![0.0; n];
        let mut x2 = vec![0.0; n];
        let mut out = vec![0.0; n];
        variable(0.3, 0, &mut x);
        mul(&x, &x, &mut x2, order);
        let mut c = [0.0; MAX_ORDER + 1];
        series::exp(x2[0], order, &mut c);
        let mut scratch = Scratch::default();
        compose(&x2, &c, &mut out, order, &mut scratch);
        let e = (0.09f64).exp();
        assert!((out[0] - e).abs() < 1e-15);
        assert!((out[1] - 0.6 * e).abs() < 1e-15);
        // index of x² monomial is the first degree-2 entry
        assert!((out[5] * 2.0 - (2.0 + 4.0 * 0.09) * e).abs() < 1e-14);
    }
}
