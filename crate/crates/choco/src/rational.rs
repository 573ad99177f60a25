//! Rational functions and Möbius (fractional linear) substitutions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::poly::{mul_dd, Polynomial, PAIRING_TOL};

/// `s -> (a s + b) / (c s + d)` with `a d - b c != 0`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MobiusMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MobiusMap {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = Dd::prod(a, d).sub(Dd::prod(b, c)).value();
        let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
        if !det.is_finite() || det.abs() <= 1e-14 * scale * scale {
            return Err(Error::InvalidInput(format!(
                "degenerate Möbius map, ad - bc = {det:e}"
            )));
        }
        Ok(MobiusMap { a, b, c, d })
    }

    /// `(1 + s) / (1 - s)`: maps the unit disk onto the right half-plane.
    pub fn cayley() -> Self {
        MobiusMap { a: 1.0, b: 1.0, c: -1.0, d: 1.0 }
    }

    /// `(s - 1) / (s + 1)`: inverse of [`MobiusMap::cayley`].
    pub fn inverse_cayley() -> Self {
        MobiusMap { a: 1.0, b: -1.0, c: 1.0, d: 1.0 }
    }

    /// `s -> s / k`.
    pub fn dilation(k: f64) -> Self {
        MobiusMap { a: 1.0, b: 0.0, c: 0.0, d: k }
    }

    /// `((2 + eps) s + eps) / (eps s + (2 + eps))`: the disk dilation
    /// `s -> s / (1 + eps)` conjugated to the right half-plane. Fixes
    /// `s = +-1` and maps the closed right half-plane strictly inside
    /// itself, so composing a rational function with it pulls imaginary-axis
    /// roots into the open left half-plane.
    pub fn halfplane_dilation(eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidInput(format!("dilation needs eps > 0, got {eps}")));
        }
        MobiusMap::new(2.0 + eps, eps, eps, 2.0 + eps)
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (z * self.a + self.b) / (z * self.c + self.d)
    }

    pub fn inverse(&self) -> MobiusMap {
        MobiusMap { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// Composition `self(other(s))` (matrix product of coefficient tables).
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        MobiusMap {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    /// Numerator/denominator as degree-one polynomials.
    fn parts(&self) -> (Polynomial, Polynomial) {
        (
            Polynomial::from_coeffs(&[self.b, self.a]),
            Polynomial::from_coeffs(&[self.d, self.c]),
        )
    }
}

/// Quotient of two real polynomials; the denominator is nonzero.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        Ok(RationalFunction { num, den })
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.num.eval(z) / self.den.eval(z)
    }

    /// Rescales numerator and denominator jointly so the largest coefficient
    /// magnitude over both is one. The quotient is unchanged.
    pub fn normalized(&self) -> RationalFunction {
        let m = self.num.max_norm().max(self.den.max_norm());
        if m == 0.0 || !m.is_finite() {
            return self.clone();
        }
        RationalFunction { num: self.num.scale(1.0 / m), den: self.den.scale(1.0 / m) }
    }

    /// Substitutes a Möbius map: returns `s -> self(m(s))` as a polynomial
    /// quotient, clearing denominators by `(c s + d)^k` with
    /// `k = max(deg num, deg den)`. No cancellation is attempted here.
    pub fn mobius_compose(&self, m: &MobiusMap) -> Result<RationalFunction> {
        if self.num.is_zero() {
            return RationalFunction::new(Polynomial::zero(), Polynomial::one());
        }
        let dn = self.num.degree().unwrap_or(0);
        let dd_ = self.den.degree().unwrap_or(0);
        let k = dn.max(dd_);
        let (mn, md) = m.parts();
        let powers = homogeneous_powers(&mn, &md, k);
        let num = substitute(&self.num, &powers, k);
        let den = substitute(&self.den, &powers, k);
        // Exact algebra may cancel the top coefficients; rounding leaves
        // junk there instead of zeros. Trim against the joint scale.
        let thresh = 1e-13 * num.max_norm().max(den.max_norm());
        RationalFunction::new(trim_leading(num, thresh), trim_leading(den, thresh))
            .map(|r| r.normalized())
    }

    /// Cancels numerator/denominator root pairs closer than [`PAIRING_TOL`]
    /// (relative), rebuilding both from the surviving roots.
    pub fn lowest_terms(&self) -> Result<RationalFunction> {
        if self.num.is_zero() {
            return RationalFunction::new(Polynomial::zero(), Polynomial::one());
        }
        let mut num_roots = self.num.roots()?;
        let mut den_roots = self.den.roots()?;
        let mut cancelled = false;
        let mut i = 0;
        while i < num_roots.len() {
            let r = num_roots[i];
            let mut matched = None;
            for (j, &s) in den_roots.iter().enumerate() {
                let scale = 1.0f64.max(r.norm()).max(s.norm());
                if (r - s).norm() <= PAIRING_TOL * scale {
                    matched = Some(j);
                    break;
                }
            }
            match matched {
                Some(j) => {
                    den_roots.remove(j);
                    num_roots.remove(i);
                    cancelled = true;
                }
                None => i += 1,
            }
        }
        if !cancelled {
            return Ok(self.clone());
        }
        let num = rebuild(&num_roots, self.num.leading());
        let den = rebuild(&den_roots, self.den.leading());
        RationalFunction::new(num, den)
    }

    /// True when no numerator root pairs with a denominator root.
    pub fn is_lowest_terms(&self) -> Result<bool> {
        if self.num.is_zero() {
            return Ok(true);
        }
        let num_roots = self.num.roots()?;
        let den_roots = self.den.roots()?;
        for r in &num_roots {
            for s in &den_roots {
                let scale = 1.0f64.max(r.norm()).max(s.norm());
                if (r - s).norm() <= PAIRING_TOL * scale {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}


/// Drops leading coefficients of magnitude at most `thresh`.
fn trim_leading(p: Polynomial, thresh: f64) -> Polynomial {
    let mut coeffs = p.coeffs().to_vec();
    while coeffs.last().map_or(false, |c| c.abs() <= thresh) {
        coeffs.pop();
    }
    Polynomial::new(coeffs)
}

/// Rebuilds a real polynomial from a conjugate-closed root multiset.
fn rebuild(roots: &[Complex64], leading: f64) -> Polynomial {
    let mut reals = Vec::new();
    let mut pairs = Vec::new();
    let mut pool: Vec<Complex64> = roots.to_vec();
    pool.sort_by(|a, b| (a.im, a.re).partial_cmp(&(b.im, b.re)).unwrap());
    while let Some(z) = pool.pop() {
        if z.im == 0.0 {
            reals.push(z.re);
            continue;
        }
        if z.im < 0.0 {
            // unpaired lower root (shouldn't happen for real inputs): fold
            pairs.push(z.conj());
            continue;
        }
        // find the nearest conjugate partner
        let mut best: Option<(usize, f64)> = None;
        for (i, w) in pool.iter().enumerate() {
            let d = (w - z.conj()).norm();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        match best {
            Some((i, d)) if d <= 1e-6 * z.norm().max(1.0) => {
                let w = pool.remove(i);
                let avg = 0.5 * (z + w.conj());
                pairs.push(avg);
            }
            _ => {
                // treat as an exact pair on its own
                pairs.push(z);
            }
        }
    }
    Polynomial::from_root_structure(&reals, &pairs, leading)
}

/// Powers `num^i * den^(k-i)` for `i = 0..=k`, accumulated in dd and
/// returned as dd coefficient vectors.
fn homogeneous_powers(mn: &Polynomial, md: &Polynomial, k: usize) -> Vec<Vec<Dd>> {
    let mn: Vec<Dd> = mn.coeffs().iter().map(|&c| Dd::from_f64(c)).collect();
    let md: Vec<Dd> = md.coeffs().iter().map(|&c| Dd::from_f64(c)).collect();
    let mut num_pows: Vec<Vec<Dd>> = vec![vec![Dd::ONE]];
    let mut den_pows: Vec<Vec<Dd>> = vec![vec![Dd::ONE]];
    for i in 1..=k {
        let np = mul_dd(&num_pows[i - 1], &mn);
        let dp = mul_dd(&den_pows[i - 1], &md);
        num_pows.push(np);
        den_pows.push(dp);
    }
    (0..=k).map(|i| mul_dd(&num_pows[i], &den_pows[k - i])).collect()
}

/// `sum_i p_i * num^i * den^(k-i)`, rounded to f64 at the end.
fn substitute(p: &Polynomial, powers: &[Vec<Dd>], k: usize) -> Polynomial {
    let mut acc = vec![Dd::ZERO; k + 1];
    for (i, &c) in p.coeffs().iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for (j, &t) in powers[i].iter().enumerate() {
            if j >= acc.len() {
                acc.resize(j + 1, Dd::ZERO);
            }
            acc[j] = acc[j].add(t.mul_f64(c));
        }
    }
    Polynomial::new(acc.into_iter().map(Dd::value).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Polynomial {
        Polynomial::from_coeffs(c)
    }

    #[test]
    fn reciprocal_of_cayley() {
        // r = 1/s composed with (1+s)/(1-s) gives (1-s)/(1+s)
        let r = RationalFunction::new(Polynomial::one(), p(&[0.0, 1.0])).unwrap();
        let c = r.mobius_compose(&MobiusMap::cayley()).unwrap();
        // up to joint scale
        let scale = c.num().coeff(0);
        assert!((c.num().coeff(1) / scale + 1.0).abs() < 1e-15);
        assert!((c.den().coeff(0) / scale - 1.0).abs() < 1e-15);
        assert!((c.den().coeff(1) / scale - 1.0).abs() < 1e-15);
    }

    #[test]
    fn disk_map_of_simple_quotient() {
        // (s^2-1)/s^2 under (1+s)/(1-s) -> 4s/(1+s)^2
        let r = RationalFunction::new(p(&[-1.0, 0.0, 1.0]), p(&[0.0, 0.0, 1.0])).unwrap();
        let c = r.mobius_compose(&MobiusMap::cayley()).unwrap();
        for t in [0.3, -0.7, 2.0] {
            let z = Complex64::new(t, 0.2);
            let expect = z * 4.0 / ((z + 1.0) * (z + 1.0));
            let got = c.eval(z);
            assert!((got - expect).norm() < 1e-12 * expect.norm().max(1.0));
        }
    }

    #[test]
    fn lowest_terms_cancels_exact_factor() {
        // (s^2-1)/(s-1) -> s+1
        let r = RationalFunction::new(p(&[-1.0, 0.0, 1.0]), p(&[-1.0, 1.0])).unwrap();
        let l = r.lowest_terms().unwrap();
        assert_eq!(l.den().degree(), Some(0));
        let k = l.den().coeff(0);
        assert!((l.num().coeff(0) / k - 1.0).abs() < 1e-12);
        assert!((l.num().coeff(1) / k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lowest_terms_keeps_distinct_factors() {
        // (s+2)(s+3) / ((s+3)(s+4)) -> (s+2)/(s+4)
        let num = p(&[2.0, 1.0]).mul(&p(&[3.0, 1.0]));
        let den = p(&[3.0, 1.0]).mul(&p(&[4.0, 1.0]));
        let l = RationalFunction::new(num, den).unwrap().lowest_terms().unwrap();
        assert_eq!(l.num().degree(), Some(1));
        assert_eq!(l.den().degree(), Some(1));
        assert!((l.num().coeff(0) / l.num().coeff(1) - 2.0).abs() < 1e-9);
        assert!((l.den().coeff(0) / l.den().coeff(1) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn lowest_terms_cancels_perturbed_pair() {
        // Multiply both sides by (s - r) and perturb one copy by 1e-14.
        let base_num = p(&[2.0, 1.0]);
        let base_den = p(&[5.0, 2.0, 1.0]);
        let num = base_num.mul(&p(&[0.7 + 1e-14, 1.0]));
        let den = base_den.mul(&p(&[0.7, 1.0]));
        let l = RationalFunction::new(num, den).unwrap().lowest_terms().unwrap();
        assert_eq!(l.num().degree(), Some(1));
        assert_eq!(l.den().degree(), Some(2));
    }

    #[test]
    fn dilation_chain_matches_composed_map() {
        let eps = 0.01;
        let composed = MobiusMap::cayley()
            .compose(&MobiusMap::dilation(1.0 + eps))
            .compose(&MobiusMap::inverse_cayley());
        let direct = MobiusMap::halfplane_dilation(eps).unwrap();
        // proportional coefficient tables
        let k = direct.a / composed.a;
        for (x, y) in [
            (composed.a, direct.a),
            (composed.b, direct.b),
            (composed.c, direct.c),
            (composed.d, direct.d),
        ] {
            assert!((x * k - y).abs() < 1e-12 * y.abs().max(1.0));
        }
    }

    #[test]
    fn degenerate_map_rejected() {
        assert!(MobiusMap::new(1.0, 2.0, 2.0, 4.0).is_err());
    }
}
