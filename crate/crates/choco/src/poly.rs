//! Dense univariate real polynomials.
//!
//! Coefficients are stored in ascending degree order (`coeffs[i]` multiplies
//! `s^i`) and kept canonical: the zero polynomial stores no coefficients,
//! anything else ends on a nonzero coefficient. Products, shifts and
//! divisions accumulate in double-double internally so that chained
//! pipelines stay accurate to well below the certificate tolerances.

use serde::{Deserialize, Deserializer, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::roots;
use num_complex::Complex64;

/// Relative distance at which two roots are considered the same point.
pub const PAIRING_TOL: f64 = 1e-8;
/// Relative remainder above which a claimed factor is rejected.
pub const DEFLATE_TOL: f64 = 1e-8;

/// Dense real-coefficient polynomial in one variable.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Polynomial::new(Vec::<f64>::deserialize(d)?))
    }
}

impl Polynomial {
    /// Builds a polynomial from ascending coefficients, trimming exact
    /// trailing zeros.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn from_coeffs(coeffs: &[f64]) -> Self {
        Polynomial::new(coeffs.to_vec())
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Polynomial { coeffs: vec![1.0] }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    /// `s^k`.
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = 1.0;
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `s^k` (zero beyond the stored length).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Leading coefficient; zero for the zero polynomial.
    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    /// Largest coefficient magnitude.
    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `sum |a_i| * r^i`, the natural magnitude scale of `p` near `|s| = r`.
    pub fn magnitude_at(&self, r: f64) -> f64 {
        let mut acc = 0.0;
        let mut power = 1.0;
        for &c in &self.coeffs {
            acc += c.abs() * power;
            power *= r;
        }
        acc
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| Dd::prod(c, i as f64).value())
            .collect();
        Polynomial::new(coeffs)
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// `p(sigma * s)`.
    pub fn scale_var(&self, sigma: f64) -> Polynomial {
        let mut power = 1.0;
        let coeffs = self
            .coeffs
            .iter()
            .map(|&a| {
                let v = a * power;
                power *= sigma;
                v
            })
            .collect();
        Polynomial::new(coeffs)
    }

    /// Taylor shift `p(s + h)`, accumulated in double-double.
    pub fn shift(&self, h: f64) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return self.clone();
        }
        let n = self.coeffs.len();
        let mut work: Vec<Dd> = self.coeffs.iter().map(|&c| Dd::from_f64(c)).collect();
        // Repeated synthetic division by (s - (-h)) builds the shifted
        // coefficients bottom-up.
        for k in 0..n - 1 {
            for j in (k..n - 1).rev() {
                let bump = work[j + 1].mul_f64(h);
                work[j] = work[j].add(bump);
            }
        }
        Polynomial::new(work.into_iter().map(Dd::value).collect())
    }

    /// Exact-as-possible product; coefficients accumulate in double-double.
    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        let out = mul_dd_f64(&self.coeffs, &other.coeffs);
        Polynomial::new(out.into_iter().map(Dd::value).collect())
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) + other.coeff(i)).collect();
        Polynomial::new(coeffs)
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) - other.coeff(i)).collect();
        Polynomial::new(coeffs)
    }

    /// Long division: returns `(quotient, remainder)` with
    /// `self = q * div + r` and `deg r < deg div`. Double-double inside.
    pub fn long_divide(&self, div: &Polynomial) -> (Polynomial, Polynomial) {
        assert!(!div.is_zero(), "division by zero polynomial");
        let dd = div.degree().unwrap();
        if self.coeffs.len() <= dd {
            return (Polynomial::zero(), self.clone());
        }
        let quot = divide_slices(&self.coeffs, &div.coeffs);
        let q = Polynomial::new(quot.into_iter().map(Dd::value).collect());
        let r = self.sub(&q.mul(div));
        (q, r)
    }

    /// Removes a known factor, failing if the remainder says otherwise.
    ///
    /// The quotient recurrence is run from whichever end of the
    /// coefficient array is numerically stable: from the top when the
    /// factor's roots sit inside the unit circle, from the bottom when
    /// they sit outside (errors otherwise amplify like root^k).
    pub fn deflate_factor(&self, factor: &Polynomial) -> Result<Polynomial> {
        if factor.is_zero() {
            return Err(Error::InvalidInput("deflation by zero polynomial".into()));
        }
        if self.is_zero() {
            return Ok(Polynomial::zero());
        }
        let n = self.degree().unwrap();
        let m = factor.degree().unwrap();
        if n < m {
            return Err(Error::NotAFactor { remainder: 1.0, tolerance: DEFLATE_TOL });
        }
        let scale = self.max_norm();
        let prefer_reversed = factor.coeff(0).abs() > factor.leading().abs();
        let mut best: Option<(Polynomial, f64)> = None;
        for reversed in [prefer_reversed, !prefer_reversed] {
            let q = if reversed {
                if factor.coeff(0) == 0.0 {
                    continue;
                }
                let pr: Vec<f64> = self.coeffs.iter().rev().copied().collect();
                let fr: Vec<f64> = factor.coeffs.iter().rev().copied().collect();
                let qr = divide_slices(&pr, &fr);
                Polynomial::new(qr.into_iter().rev().map(Dd::value).collect())
            } else {
                let quot = divide_slices(&self.coeffs, &factor.coeffs);
                Polynomial::new(quot.into_iter().map(Dd::value).collect())
            };
            let rel = self.sub(&q.mul(factor)).max_norm() / scale;
            if rel <= DEFLATE_TOL {
                return Ok(q);
            }
            if best.as_ref().map_or(true, |(_, r)| rel < *r) {
                best = Some((q, rel));
            }
        }
        Err(Error::NotAFactor {
            remainder: best.map_or(1.0, |(_, r)| r),
            tolerance: DEFLATE_TOL,
        })
    }

    /// All complex roots with multiplicity. See the `roots` module for the
    /// companion-matrix + cluster-refinement scheme.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        roots::find_roots(self)
    }

    /// Rebuilds a real polynomial from real roots, conjugate pair roots
    /// (one representative each, positive imaginary part) and a leading
    /// coefficient.
    pub fn from_root_structure(
        real_roots: &[f64],
        pair_roots: &[Complex64],
        leading: f64,
    ) -> Polynomial {
        let mut acc: Vec<Dd> = vec![Dd::from_f64(leading)];
        for &r in real_roots {
            acc = mul_dd(&acc, &[Dd::from_f64(-r), Dd::ONE]);
        }
        for &z in pair_roots {
            let b = Dd::prod(-2.0, z.re);
            let m = Dd::prod(z.re, z.re).add(Dd::prod(z.im, z.im));
            acc = mul_dd(&acc, &[m, b, Dd::ONE]);
        }
        Polynomial::new(acc.into_iter().map(Dd::value).collect())
    }

    /// Flips the sign so the leading coefficient is positive.
    pub fn with_positive_leading(&self) -> Polynomial {
        if self.leading() < 0.0 {
            self.scale(-1.0)
        } else {
            self.clone()
        }
    }
}


/// Euclidean quotient of coefficient slices (ascending), accumulated in
/// double-double. `p.len() > f.len() - 1` and the leading entry of `f`
/// must be nonzero.
pub(crate) fn divide_slices(p: &[f64], f: &[f64]) -> Vec<Dd> {
    let m = f.len() - 1;
    let lead = Dd::from_f64(f[m]);
    let mut rem: Vec<Dd> = p.iter().map(|&c| Dd::from_f64(c)).collect();
    let mut quot = vec![Dd::ZERO; p.len() - m];
    for k in (0..quot.len()).rev() {
        let q = rem[k + m].div(lead);
        quot[k] = q;
        for i in 0..=m {
            let t = q.mul_f64(f[i]);
            rem[k + i] = rem[k + i].sub(t);
        }
    }
    quot
}

/// Convolution of f64 slices with double-double accumulation.
pub(crate) fn mul_dd_f64(a: &[f64], b: &[f64]) -> Vec<Dd> {
    let mut out = vec![Dd::ZERO; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] = out[i + j].mul_add(ai, bj);
        }
    }
    out
}

/// Convolution of Dd slices (second operand short, e.g. a quadratic).
pub(crate) fn mul_dd(a: &[Dd], b: &[Dd]) -> Vec<Dd> {
    let mut out = vec![Dd::ZERO; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] = out[i + j].add(ai.mul(bj));
        }
    }
    out
}

impl std::ops::Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::add(self, rhs)
    }
}

impl std::ops::Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::sub(self, rhs)
    }
}

impl std::ops::Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::mul(self, rhs)
    }
}

impl std::fmt::Display for Polynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
            if first {
                first = false;
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else if c < 0.0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let a = c.abs();
            match i {
                0 => write!(f, "{a}")?,
                1 if a == 1.0 => write!(f, "s")?,
                1 => write!(f, "{a}*s")?,
                _ if a == 1.0 => write!(f, "s^{i}")?,
                _ => write!(f, "{a}*s^{i}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Polynomial {
        Polynomial::from_coeffs(c)
    }

    #[test]
    fn canonical_form_trims_zeros() {
        let q = p(&[1.0, 2.0, 0.0, 0.0]);
        assert_eq!(q.coeffs(), &[1.0, 2.0]);
        assert_eq!(q.degree(), Some(1));
        assert_eq!(Polynomial::zero().degree(), None);
    }

    #[test]
    fn difference_of_squares() {
        // (s+1)(s-1) = s^2 - 1
        let prod = &p(&[1.0, 1.0]) * &p(&[-1.0, 1.0]);
        assert_eq!(prod, p(&[-1.0, 0.0, 1.0]));
    }

    #[test]
    fn identity_case_keeps_factor() {
        // (s^2 - 2 d s + 1) * 1 + (s^2 - 1) * 0
        let d = 0.7;
        let lhs = p(&[1.0, -2.0 * d, 1.0])
            .mul(&Polynomial::one())
            .add(&p(&[-1.0, 0.0, 1.0]).mul(&Polynomial::zero()));
        assert_eq!(lhs, p(&[1.0, -1.4, 1.0]));
    }

    #[test]
    fn expansion_at_delta_one() {
        // (s^2-2s+1)(s^2+2s+1) = s^4 - 2 s^2 + 1
        let prod = &p(&[1.0, -2.0, 1.0]) * &p(&[1.0, 2.0, 1.0]);
        assert_eq!(prod, p(&[1.0, 0.0, -2.0, 0.0, 1.0]));
    }

    #[test]
    fn monomial_division() {
        let q = Polynomial::monomial(5).deflate_factor(&Polynomial::monomial(2)).unwrap();
        assert_eq!(q, Polynomial::monomial(3));
    }

    #[test]
    fn deflate_exact_factor() {
        // (s^2-1)(s+5) / (s^2-1) = s+5
        let prod = &p(&[-1.0, 0.0, 1.0]) * &p(&[5.0, 1.0]);
        let q = prod.deflate_factor(&p(&[-1.0, 0.0, 1.0])).unwrap();
        assert!((q.coeff(0) - 5.0).abs() < 1e-14);
        assert!((q.coeff(1) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn deflate_rejects_non_factor() {
        let err = p(&[1.0, 0.0, 1.0]).deflate_factor(&p(&[1.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::NotAFactor { .. }));
    }

    #[test]
    fn taylor_shift_quadratic() {
        // (s+0.1)^2 = s^2 + 0.2 s + 0.01
        let shifted = p(&[0.0, 0.0, 1.0]).shift(0.1);
        assert!((shifted.coeff(0) - 0.01).abs() < 1e-16);
        assert!((shifted.coeff(1) - 0.2).abs() < 1e-16);
        assert!((shifted.coeff(2) - 1.0).abs() < 1e-16);
    }

    #[test]
    fn rebuild_from_roots() {
        let q = Polynomial::from_root_structure(&[-1.0], &[Complex64::new(-2.0, 3.0)], 2.0);
        // 2 (s+1)(s^2+4s+13)
        assert_eq!(q.degree(), Some(3));
        assert!((q.coeff(0) - 26.0).abs() < 1e-12);
        assert!((q.coeff(1) - 34.0).abs() < 1e-12);
        assert!((q.coeff(2) - 10.0).abs() < 1e-12);
        assert!((q.coeff(3) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let q = p(&[1.0, 0.0, 1.0]);
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(s, "[1.0,0.0,1.0]");
        let back: Polynomial = serde_json::from_str("[1,0,1,0]").unwrap();
        assert_eq!(back, q);
    }
}
