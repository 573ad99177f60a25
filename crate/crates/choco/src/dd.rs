//! Double-double scalars used inside long coefficient pipelines.
//!
//! The Möbius compositions and repeated deflations in this crate chain many
//! convolutions; plain f64 accumulation loses enough digits there to spoil
//! the downstream residual certificates. Carrying an unevaluated `hi + lo`
//! pair through the hot loops keeps roughly 31 significant digits and lets
//! every public surface stay plain `f64`.

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Requires |a| >= |b| (or a == 0).
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(a: f64) -> Dd {
        Dd { hi: a, lo: 0.0 }
    }

    /// Exact product of two f64 values.
    #[inline]
    pub fn prod(a: f64, b: f64) -> Dd {
        let (hi, lo) = two_prod(a, b);
        Dd { hi, lo }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> f64 {
        self.value().abs()
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    pub fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    #[inline]
    pub fn add_f64(self, o: f64) -> Dd {
        let (s1, s2) = two_sum(self.hi, o);
        let (hi, lo) = quick_two_sum(s1, s2 + self.lo);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul(self, o: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, o.hi);
        let p2 = p2 + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, o: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, o);
        let (hi, lo) = quick_two_sum(p1, p2 + self.lo * o);
        Dd { hi, lo }
    }

    #[inline]
    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e }.add_f64(q3)
    }

    /// Fused accumulate: self + a*b, with the product kept exact.
    #[inline]
    pub fn mul_add(self, a: f64, b: f64) -> Dd {
        self.add(Dd::prod(a, b))
    }
}

/// Complex double-double. Only what Horner evaluation and synthetic
/// division need.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub const ZERO: Cdd = Cdd { re: Dd::ZERO, im: Dd::ZERO };

    #[inline]
    pub fn new(re: f64, im: f64) -> Cdd {
        Cdd { re: Dd::from_f64(re), im: Dd::from_f64(im) }
    }

    #[inline]
    pub fn sub(self, o: Cdd) -> Cdd {
        Cdd { re: self.re.sub(o.re), im: self.im.sub(o.im) }
    }

    #[inline]
    pub fn mul(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.mul(o.re).sub(self.im.mul(o.im)),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    #[inline]
    pub fn add_f64(self, o: f64) -> Cdd {
        Cdd { re: self.re.add_f64(o), im: self.im }
    }

    #[inline]
    pub fn div(self, o: Cdd) -> Cdd {
        let den = o.re.mul(o.re).add(o.im.mul(o.im));
        let re = self.re.mul(o.re).add(self.im.mul(o.im));
        let im = self.im.mul(o.re).sub(self.re.mul(o.im));
        Cdd { re: re.div(den), im: im.div(den) }
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.re.value().hypot(self.im.value())
    }
}

/// Horner evaluation of a real-coefficient polynomial (ascending order) at a
/// complex point, fully in double-double.
pub(crate) fn horner_cdd(coeffs: &[f64], z: Cdd) -> Cdd {
    let mut acc = Cdd::ZERO;
    for &c in coeffs.iter().rev() {
        acc = acc.mul(z).add_f64(c);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_keeps_hidden_bits() {
        let a = Dd::from_f64(1.0);
        let tiny = Dd::from_f64(1e-25);
        let s = a.add(tiny).sub(a);
        assert_eq!(s.value(), 1e-25);
    }

    #[test]
    fn prod_is_exact() {
        let p = Dd::prod(1.0 + 2f64.powi(-30), 1.0 + 2f64.powi(-30));
        // (1+u)^2 = 1 + 2u + u^2; u^2 = 2^-60 is below single ulp of hi
        let err = p.sub(Dd::from_f64(1.0)).sub(Dd::from_f64(2f64.powi(-29))).value();
        assert!((err - 2f64.powi(-60)).abs() < 1e-32);
    }

    #[test]
    fn div_roundtrip() {
        let a = Dd::from_f64(std::f64::consts::PI);
        let b = Dd::from_f64(std::f64::consts::E);
        let q = a.div(b).mul(b).sub(a);
        assert!(q.abs() < 1e-30);
    }

    #[test]
    fn complex_division() {
        let a = Cdd::new(3.0, 4.0);
        let b = Cdd::new(1.0, -2.0);
        let q = a.div(b).mul(b).sub(a);
        assert!(q.norm() < 1e-30);
    }
}
