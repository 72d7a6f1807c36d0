//! Multivariate polynomials with exact rational coefficients.
//!
//! Used for the principal-part coefficient tables and the obstruction
//! systems, where every printed value must be reproduced with zero
//! tolerance. Variables are named; exponent vectors are dense.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> BigRational {
    BigRational::from(BigInt::from(n))
}

/// A polynomial over named variables with `BigRational` coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    vars: Arc<Vec<String>>,
    /// exponent vector (len = vars.len()) → coefficient, zero entries absent
    terms: BTreeMap<Vec<u8>, BigRational>,
}

impl Poly {
    pub fn zero(vars: &Arc<Vec<String>>) -> Poly {
        Poly {
            vars: vars.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &Arc<Vec<String>>, c: BigRational) -> Poly {
        let mut p = Poly::zero(vars);
        if !c.is_zero() {
            p.terms.insert(vec![0; vars.len()], c);
        }
        p
    }

    pub fn var(vars: &Arc<Vec<String>>, idx: usize) -> Poly {
        assert!(idx < vars.len());
        let mut e = vec![0u8; vars.len()];
        e[idx] = 1;
        let mut p = Poly::zero(vars);
        p.terms.insert(e, rat_int(1));
        p
    }

    pub fn vars(&self) -> &Arc<Vec<String>> {
        &self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u8>, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exps: &[u8]) -> BigRational {
        self.terms.get(exps).cloned().unwrap_or_else(BigRational::zero)
    }

    fn insert(&mut self, e: Vec<u8>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let s = o.get().clone() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.insert(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.insert(e.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        let mut out = Poly::zero(&self.vars);
        for (e, c) in &self.terms {
            out.terms.insert(e.clone(), -c.clone());
        }
        out
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::zero(&self.vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e: Vec<u8> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.insert(e, ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero(&self.vars);
        }
        let mut out = Poly::zero(&self.vars);
        for (e, k) in &self.terms {
            out.terms.insert(e.clone(), k.clone() * c.clone());
        }
        out
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut t = c.to_f64().unwrap();
            for (v, &p) in x.iter().zip(e.iter()) {
                for _ in 0..p {
                    t *= v;
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_rational(&self, x: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (v, &p) in x.iter().zip(e.iter()) {
                for _ in 0..p {
                    t *= v.clone();
                }
            }
            acc += t;
        }
        acc
    }

    /// Clear denominators and divide by the integer content, preserving the
    /// sign of the leading (BTreeMap-first) term.
    pub fn primitive_integer_form(&self) -> Poly {
        if self.terms.is_empty() {
            return self.clone();
        }
        let mut denom_lcm = BigInt::from(1);
        for c in self.terms.values() {
            denom_lcm = num_integer::lcm(denom_lcm, c.denom().clone());
        }
        let mut content: Option<BigInt> = None;
        for c in self.terms.values() {
            let int = c.numer() * &denom_lcm / c.denom();
            content = Some(match content {
                None => int.abs(),
                Some(g) => num_integer::gcd(g, int.abs()),
            });
        }
        let content = content.unwrap();
        let first = self.terms.values().next().unwrap();
        let sign = if first.is_negative() { -1 } else { 1 };
        let factor = BigRational::new(denom_lcm * BigInt::from(sign), content);
        self.scale(&factor)
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let is_const = e.iter().all(|&p| p == 0);
            let unit = mag == rat_int(1);
            if !unit || is_const {
                write!(f, "{mag}")?;
            }
            let mut wrote_var = false;
            for (i, &p) in e.iter().enumerate() {
                if p == 0 {
                    continue;
                }
                if wrote_var || (!unit || is_const) {
                    write!(f, "*")?;
                }
                wrote_var = true;
                write!(f, "{}", self.vars[i])?;
                if p > 1 {
                    write!(f, "^{p}")?;
                }
            }
            let _ = wrote_var;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars() -> Arc<Vec<String>> {
        Arc::new(vec!["x".into(), "y".into()])
    }

    #[test]
    fn arithmetic_and_eval() {
        let v = vars();
        let x = Poly::var(&v, 0);
        let y = Poly::var(&v, 1);
        // (x + 2y)(x - y) = x² + xy - 2y²
        let p = x.add(&y.scale(&rat_int(2))).mul(&x.sub(&y));
        assert_eq!(p.coefficient(&[2, 0]), rat_int(1));
        assert_eq!(p.coefficient(&[1, 1]), rat_int(1));
        assert_eq!(p.coefficient(&[0, 2]), rat_int(-2));
        assert_eq!(p.eval_f64(&[2.0, 3.0]), 4.0 + 6.0 - 18.0);
        let r = p.eval_rational(&[rat(1, 2), rat(1, 3)]);
        assert_eq!(r, rat(1, 4) + rat(1, 6) - rat(2, 9));
    }

    #[test]
    fn primitive_form_matches_display_systems() {
        let v = vars();
        let x = Poly::var(&v, 0);
        let y = Poly::var(&v, 1);
        // -(15/8) x - (1/2) y → 15x + 4y
        let p = x.scale(&rat(-15, 8)).add(&y.scale(&rat(-1, 2)));
        let q = p.primitive_integer_form();
        assert_eq!(q.coefficient(&[1, 0]), rat_int(15));
        assert_eq!(q.coefficient(&[0, 1]), rat_int(4));
    }

    #[test]
    fn display_is_readable() {
        let v = vars();
        let x = Poly::var(&v, 0);
        let y = Poly::var(&v, 1);
        let p = x.mul(&x).scale(&rat(5, 48)).sub(&y);
        assert_eq!(format!("{p}"), "-y + 5/48*x^2");
    }
}
