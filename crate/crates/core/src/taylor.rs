//! Dense multivariate truncated Taylor arithmetic.
//!
//! This is the forward-mode differentiation engine behind every jet in the
//! crate. A [`Taylor`] holds the coefficients `c_m = ∂^m f / m!` of a
//! function at a point, for every monomial `m` of total degree up to the
//! truncation order. Arithmetic on truncated series is exact on the retained
//! coefficients, so partial derivatives extracted from a pipeline of these
//! operations carry no truncation error, only rounding.
//!
//! Spaces are keyed by `(n, order)` and cached globally; the product table
//! for a space is precomputed once so multiplication is a flat double loop.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Largest chart dimension the engine supports.
pub const MAX_VARS: usize = 6;
/// Largest truncation order the engine supports.
pub const MAX_ORDER: usize = 9;

pub(crate) type Exp = [u8; MAX_VARS];

const NO_ENTRY: u32 = u32::MAX;

/// Monomial tables for truncated series in `n` variables of degree ≤ `order`.
pub struct Space {
    n: usize,
    order: usize,
    exps: Vec<Exp>,
    index: HashMap<Exp, u32>,
    deg: Vec<u8>,
    /// Product of factorials of the exponents, for partial extraction.
    fact: Vec<f64>,
    /// prod[i*len+j] = index of exps[i]+exps[j], or NO_ENTRY if truncated.
    prod: Option<Vec<u32>>,
}

impl Space {
    pub fn get(n: usize, order: usize) -> Arc<Space> {
        thread_local! {
            static LOCAL: std::cell::RefCell<HashMap<(usize, usize), Arc<Space>>> =
                std::cell::RefCell::new(HashMap::new());
        }
        LOCAL.with(|local| {
            let mut map = local.borrow_mut();
            map.entry((n, order)).or_insert_with(|| Space::get_global(n, order)).clone()
        })
    }

    fn get_global(n: usize, order: usize) -> Arc<Space> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Space>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap();
        guard
            .entry((n, order))
            .or_insert_with(|| Arc::new(Space::build(n, order)))
            .clone()
    }

    fn build(n: usize, order: usize) -> Space {
        assert!(n >= 1 && n <= MAX_VARS, "unsupported variable count {n}");
        assert!(order <= MAX_ORDER, "unsupported jet order {order}");
        let mut exps: Vec<Exp> = Vec::new();
        for d in 0..=order {
            let mut cur = [0u8; MAX_VARS];
            gen_compositions(n, d, 0, &mut cur, &mut exps);
        }
        let mut index = HashMap::with_capacity(exps.len());
        let mut deg = Vec::with_capacity(exps.len());
        let mut fact = Vec::with_capacity(exps.len());
        for (k, e) in exps.iter().enumerate() {
            index.insert(*e, k as u32);
            deg.push(e.iter().sum());
            fact.push(e.iter().map(|&p| factorial(p as usize)).product());
        }
        let len = exps.len();
        let prod = if len * len <= 4_000_000 {
            let mut t = vec![NO_ENTRY; len * len];
            for i in 0..len {
                for j in 0..len {
                    if deg[i] as usize + deg[j] as usize <= order {
                        let mut s = exps[i];
                        for (v, b) in s.iter_mut().zip(exps[j].iter()) {
                            *v += b;
                        }
                        t[i * len + j] = index[&s];
                    }
                }
            }
            Some(t)
        } else {
            None
        };
        Space {
            n,
            order,
            exps,
            index,
            deg,
            fact,
            prod,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn order(&self) -> usize {
        self.order
    }
    pub fn len(&self) -> usize {
        self.exps.len()
    }
    pub(crate) fn exps(&self) -> &[Exp] {
        &self.exps
    }
    pub(crate) fn index_of(&self, e: &Exp) -> Option<usize> {
        self.index.get(e).map(|&k| k as usize)
    }
}

/// All exponent tuples over `n` variables summing exactly to `rem`,
/// filled from position `pos`, appended in lexicographic order.
fn gen_compositions(n: usize, rem: usize, pos: usize, cur: &mut Exp, out: &mut Vec<Exp>) {
    if pos == n - 1 {
        cur[pos] = rem as u8;
        out.push(*cur);
        cur[pos] = 0;
        return;
    }
    for take in 0..=rem {
        cur[pos] = take as u8;
        gen_compositions(n, rem - take, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// A truncated multivariate Taylor series (Taylor coefficients, not
/// derivative values).
#[derive(Clone)]
pub struct Taylor {
    sp: Arc<Space>,
    c: Vec<f64>,
}

impl Taylor {
    pub fn zero(sp: &Arc<Space>) -> Taylor {
        Taylor {
            sp: sp.clone(),
            c: vec![0.0; sp.len()],
        }
    }

    pub fn constant(sp: &Arc<Space>, v: f64) -> Taylor {
        let mut t = Taylor::zero(sp);
        t.c[0] = v;
        t
    }

    /// The seed `x_i = v + ε_i` used to start an evaluation.
    pub fn variable(sp: &Arc<Space>, i: usize, v: f64) -> Taylor {
        assert!(i < sp.n());
        let mut t = Taylor::constant(sp, v);
        if sp.order() >= 1 {
            let mut e = [0u8; MAX_VARS];
            e[i] = 1;
            let k = sp.index_of(&e).unwrap();
            t.c[k] = 1.0;
        }
        t
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.sp
    }
    pub fn n(&self) -> usize {
        self.sp.n()
    }
    pub fn order(&self) -> usize {
        self.sp.order()
    }
    pub fn value(&self) -> f64 {
        self.c[0]
    }
    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    /// Embed into a higher-order space over the same variables.
    pub fn lifted(&self, order: usize) -> Taylor {
        assert!(order >= self.order());
        if order == self.order() {
            return self.clone();
        }
        let sp = Space::get(self.n(), order);
        let mut out = Taylor::zero(&sp);
        for (i, e) in self.sp.exps().iter().enumerate() {
            let c = self.c[i];
            if c != 0.0 {
                out.c[sp.index_of(e).unwrap()] = c;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }

    /// Partial derivative value for a multi-index given as a list of
    /// variable indices (order = list length).
    pub fn partial(&self, vars: &[usize]) -> Result<f64> {
        if vars.len() > self.order() {
            return Err(Error::Capability {
                requested: vars.len(),
                max: self.order(),
            });
        }
        let mut e = [0u8; MAX_VARS];
        for &v in vars {
            if v >= self.n() {
                return Err(Error::domain(format!("variable index {v} out of range")));
            }
            e[v] += 1;
        }
        let k = self
            .sp
            .index_of(&e)
            .ok_or_else(|| Error::domain("multi-index outside space"))?;
        Ok(self.c[k] * self.sp.fact[k])
    }

    pub fn scale(&self, s: f64) -> Taylor {
        let mut out = self.clone();
        for v in &mut out.c {
            *v *= s;
        }
        out
    }

    pub fn mul(&self, o: &Taylor) -> Taylor {
        debug_assert!(Arc::ptr_eq(&self.sp, &o.sp), "space mismatch in mul");
        let len = self.c.len();
        let mut out = vec![0.0; len];
        if let Some(tbl) = &self.sp.prod {
            for i in 0..len {
                let a = self.c[i];
                if a == 0.0 {
                    continue;
                }
                let row = &tbl[i * len..(i + 1) * len];
                for j in 0..len {
                    let b = o.c[j];
                    if b == 0.0 {
                        continue;
                    }
                    let k = row[j];
                    if k != NO_ENTRY {
                        out[k as usize] += a * b;
                    }
                }
            }
        } else {
            let order = self.sp.order;
            for i in 0..len {
                let a = self.c[i];
                if a == 0.0 {
                    continue;
                }
                for j in 0..len {
                    let b = o.c[j];
                    if b == 0.0 {
                        continue;
                    }
                    if self.sp.deg[i] as usize + self.sp.deg[j] as usize > order {
                        continue;
                    }
                    let mut e = self.sp.exps[i];
                    for (v, x) in e.iter_mut().zip(self.sp.exps[j].iter()) {
                        *v += x;
                    }
                    let k = self.sp.index_of(&e).unwrap();
                    out[k] += a * b;
                }
            }
        }
        Taylor {
            sp: self.sp.clone(),
            c: out,
        }
    }

    /// self += s · a · b, without temporaries.
    pub fn mul_acc(&mut self, a: &Taylor, b: &Taylor, s: f64) {
        debug_assert!(Arc::ptr_eq(&self.sp, &a.sp) && Arc::ptr_eq(&self.sp, &b.sp));
        let len = self.c.len();
        if let Some(tbl) = &self.sp.prod {
            for i in 0..len {
                let av = a.c[i] * s;
                if av == 0.0 {
                    continue;
                }
                let row = &tbl[i * len..(i + 1) * len];
                for j in 0..len {
                    let bv = b.c[j];
                    if bv == 0.0 {
                        continue;
                    }
                    let k = row[j];
                    if k != NO_ENTRY {
                        self.c[k as usize] += av * bv;
                    }
                }
            }
        } else {
            let prod = a.mul(b);
            for (dst, src) in self.c.iter_mut().zip(prod.c.iter()) {
                *dst += s * src;
            }
        }
    }

    pub fn add_assign(&mut self, o: &Taylor) {
        debug_assert!(Arc::ptr_eq(&self.sp, &o.sp));
        for (a, b) in self.c.iter_mut().zip(o.c.iter()) {
            *a += b;
        }
    }

    /// ∂/∂x_v, one order lower.
    pub fn derivative(&self, v: usize) -> Taylor {
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        assert!(v < self.n());
        let tgt = Space::get(self.n(), self.order() - 1);
        let mut out = vec![0.0; tgt.len()];
        for (i, e) in self.sp.exps.iter().enumerate() {
            if e[v] > 0 {
                let mut f = *e;
                f[v] -= 1;
                let k = tgt.index_of(&f).unwrap();
                out[k] = self.c[i] * e[v] as f64;
            }
        }
        Taylor { sp: tgt, c: out }
    }

    /// Project onto a lower-order space.
    pub fn truncated(&self, order: usize) -> Taylor {
        assert!(order <= self.order());
        if order == self.order() {
            return self.clone();
        }
        let tgt = Space::get(self.n(), order);
        let mut out = vec![0.0; tgt.len()];
        for (i, e) in self.sp.exps.iter().enumerate() {
            if self.sp.deg[i] as usize <= order {
                out[tgt.index_of(e).unwrap()] = self.c[i];
            }
        }
        Taylor { sp: tgt, c: out }
    }

    /// Compose with a univariate analytic map: `derivs[m]` must be the m-th
    /// derivative of the outer function at `self.value()`, for m ≤ order.
    pub fn compose_univariate(&self, derivs: &[f64]) -> Taylor {
        let k = self.order();
        assert!(derivs.len() > k, "need {} outer derivatives", k + 1);
        let mut dx = self.clone();
        dx.c[0] = 0.0;
        let mut r = Taylor::constant(&self.sp, derivs[k] / factorial(k));
        for m in (0..k).rev() {
            r = r.mul(&dx);
            r.c[0] += derivs[m] / factorial(m);
        }
        r
    }

    pub fn exp(&self) -> Taylor {
        let e0 = self.value().exp();
        let derivs = vec![e0; self.order() + 1];
        self.compose_univariate(&derivs)
    }

    pub fn ln(&self) -> Taylor {
        let c0 = self.value();
        let mut derivs = Vec::with_capacity(self.order() + 1);
        derivs.push(c0.ln());
        let mut d = 1.0 / c0;
        for m in 1..=self.order() {
            derivs.push(d * factorial(m - 1) * if m % 2 == 0 { -1.0 } else { 1.0 });
            d /= c0;
        }
        self.compose_univariate(&derivs)
    }

    pub fn recip(&self) -> Taylor {
        let c0 = self.value();
        let mut derivs = Vec::with_capacity(self.order() + 1);
        let mut d = 1.0 / c0;
        for m in 0..=self.order() {
            derivs.push(d * factorial(m) * if m % 2 == 0 { 1.0 } else { -1.0 });
            d /= c0;
        }
        self.compose_univariate(&derivs)
    }

    /// Real power with positive base value.
    pub fn powf(&self, p: f64) -> Taylor {
        let c0 = self.value();
        let mut derivs = Vec::with_capacity(self.order() + 1);
        let mut coef = 1.0;
        for m in 0..=self.order() {
            derivs.push(coef * c0.powf(p - m as f64));
            coef *= p - m as f64;
        }
        self.compose_univariate(&derivs)
    }

    pub fn sqrt(&self) -> Taylor {
        self.powf(0.5)
    }

    pub fn div(&self, o: &Taylor) -> Taylor {
        self.mul(&o.recip())
    }
}

impl Add for &Taylor {
    type Output = Taylor;
    fn add(self, o: &Taylor) -> Taylor {
        debug_assert!(Arc::ptr_eq(&self.sp, &o.sp));
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(o.c.iter()) {
            *a += b;
        }
        out
    }
}

impl Sub for &Taylor {
    type Output = Taylor;
    fn sub(self, o: &Taylor) -> Taylor {
        debug_assert!(Arc::ptr_eq(&self.sp, &o.sp));
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(o.c.iter()) {
            *a -= b;
        }
        out
    }
}

impl Mul for &Taylor {
    type Output = Taylor;
    fn mul(self, o: &Taylor) -> Taylor {
        Taylor::mul(self, o)
    }
}

impl Neg for &Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        self.scale(-1.0)
    }
}

/// Seed variables `x_i = p_i + ε_i` for an evaluation at a point.
pub fn seed_point(coords: &[f64], order: usize) -> Vec<Taylor> {
    let sp = Space::get(coords.len(), order);
    coords
        .iter()
        .enumerate()
        .map(|(i, &v)| Taylor::variable(&sp, i, v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn polynomial_partials_are_exact() {
        // f = x0^2 x1 at (1, 1, 0, 0)
        let vars = seed_point(&[1.0, 1.0, 0.0, 0.0], 3);
        let f = &(&vars[0] * &vars[0]) * &vars[1];
        assert_close(f.value(), 1.0, 0.0);
        assert_close(f.partial(&[0, 1]).unwrap(), 2.0, 0.0);
        assert_close(f.partial(&[0, 0]).unwrap(), 2.0, 0.0);
        assert_close(f.partial(&[1, 1]).unwrap(), 0.0, 0.0);
        assert_close(f.partial(&[0, 0, 1]).unwrap(), 2.0, 0.0);
        // symmetry of mixed partials is structural
        assert_eq!(
            f.partial(&[0, 1]).unwrap().to_bits(),
            f.partial(&[1, 0]).unwrap().to_bits()
        );
    }

    #[test]
    fn exp_jet_matches_analytic() {
        let vars = seed_point(&[0.3, -0.2], 4);
        let u = &vars[0] * &vars[1]; // x*y
        let f = u.exp();
        let v: f64 = (0.3f64 * -0.2).exp();
        // ∂x∂y e^{xy} = e^{xy}(1 + xy)
        let expect = v * (1.0 + 0.3 * -0.2);
        assert_close(f.partial(&[0, 1]).unwrap(), expect, 1e-14);
        // ∂x² e^{xy} = y² e^{xy}
        assert_close(f.partial(&[0, 0]).unwrap(), 0.04 * v, 1e-14);
    }

    #[test]
    fn recip_and_sqrt_round_trip() {
        let vars = seed_point(&[0.7, 0.1, -0.4], 4);
        let g = &(&Taylor::constant(vars[0].space(), 2.0) + &(&vars[0] * &vars[1])) - &vars[2];
        let r = g.recip();
        let one = g.mul(&r);
        assert_close(one.value(), 1.0, 1e-14);
        for c in &one.coeffs()[1..] {
            assert_close(*c, 0.0, 1e-13);
        }
        let s = g.sqrt();
        let back = s.mul(&s);
        for (a, b) in back.coeffs().iter().zip(g.coeffs()) {
            assert_close(*a, *b, 1e-12);
        }
    }

    #[test]
    fn derivative_shifts_coefficients() {
        let vars = seed_point(&[0.5, 0.25], 3);
        let f = &(&vars[0] * &vars[0]) * &vars[1]; // x²y
        let fx = f.derivative(0); // 2xy
        assert_close(fx.value(), 2.0 * 0.5 * 0.25, 1e-15);
        assert_close(fx.partial(&[0]).unwrap(), 2.0 * 0.25, 1e-15);
        assert_close(fx.partial(&[0, 1]).unwrap(), 2.0, 1e-15);
    }

    #[test]
    fn leibniz_at_jet_level() {
        let vars = seed_point(&[0.2, -0.3, 0.15], 4);
        let f = &(&vars[0] * &vars[1]) + &vars[2];
        let g = vars[0].exp();
        let prod = f.mul(&g);
        // d/dx0 (f g) = f_x g + f g_x
        let lhs = prod.derivative(0);
        let rhs = &f.derivative(0).mul(&g.truncated(3)) + &f.truncated(3).mul(&g.derivative(0));
        for (a, b) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            assert_close(*a, *b, 1e-13);
        }
    }

    #[test]
    fn truncation_keeps_low_coefficients() {
        let vars = seed_point(&[1.1, 0.4], 5);
        let f = vars[0].mul(&vars[1]).exp();
        let t = f.truncated(2);
        assert_eq!(t.order(), 2);
        assert_close(t.partial(&[0, 1]).unwrap(), f.partial(&[0, 1]).unwrap(), 0.0);
    }
}
