//! Closed-interval arithmetic with outward rounding.
//!
//! Every operation widens its result by one ulp per endpoint, which keeps
//! enclosures sound without directed-rounding intrinsics. The margins the
//! certifier needs are many orders of magnitude above this slack.

use num_rational::BigRational;
use num_traits::ToPrimitive;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(v: f64) -> Interval {
        Interval { lo: v, hi: v }
    }

    pub fn new(lo: f64, hi: f64) -> Interval {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn from_rational(r: &BigRational) -> Interval {
        let v = r.to_f64().expect("rational in f64 range");
        Interval {
            lo: v.next_down(),
            hi: v.next_up(),
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && self.hi >= 0.0
    }

    /// Distance of the interval from zero; positive iff zero is excluded.
    pub fn zero_margin(&self) -> f64 {
        if self.lo > 0.0 {
            self.lo
        } else if self.hi < 0.0 {
            -self.hi
        } else {
            0.0
        }
    }

    fn widened(lo: f64, hi: f64) -> Interval {
        Interval {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval::widened(self.lo + o.lo, self.hi + o.hi)
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        Interval::widened(self.lo - o.hi, self.hi - o.lo)
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let c = [
            self.lo * o.lo,
            self.lo * o.hi,
            self.hi * o.lo,
            self.hi * o.hi,
        ];
        let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Interval::widened(lo, hi)
    }

    /// Integer power with the even-power tightening around zero.
    pub fn pow(&self, e: u32) -> Interval {
        match e {
            0 => Interval::point(1.0),
            1 => *self,
            _ => {
                if e % 2 == 0 && self.contains_zero() {
                    let m = self.lo.abs().max(self.hi.abs());
                    Interval::widened(0.0, m.powi(e as i32))
                } else {
                    let a = self.lo.powi(e as i32);
                    let b = self.hi.powi(e as i32);
                    Interval::widened(a.min(b), a.max(b))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    #[test]
    fn arithmetic_encloses() {
        let a = Interval::new(1.0, 2.0);
        let b = Interval::new(-3.0, 0.5);
        let p = a.mul(&b);
        assert!(p.lo <= -6.0 && p.hi >= 1.0);
        let s = a.add(&b);
        assert!(s.lo <= -2.0 && s.hi >= 2.5);
        assert!(Interval::new(-2.0, 3.0).pow(2).lo <= 0.0);
        assert!(Interval::new(-2.0, 3.0).pow(2).hi >= 9.0);
        assert!(Interval::new(-2.0, 3.0).pow(3).lo <= -8.0);
        let r = Interval::from_rational(&rat(1, 3));
        assert!(r.lo < 1.0 / 3.0 + 1e-17 && r.hi > 1.0 / 3.0 - 1e-17);
    }

    #[test]
    fn zero_margins() {
        assert_eq!(Interval::new(0.5, 2.0).zero_margin(), 0.5);
        assert_eq!(Interval::new(-2.0, -0.25).zero_margin(), 0.25);
        assert_eq!(Interval::new(-1.0, 1.0).zero_margin(), 0.0);
        assert!(Interval::new(-1.0, 1.0).contains_zero());
    }
}
