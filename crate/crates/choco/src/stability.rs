//! Stability and quasi-stability predicates.
//!
//! A real polynomial is stable when every root has negative real part and
//! quasi-stable when no root has positive real part. Classification is
//! decided from root locations (the minors test is only one-directional for
//! quasi-stability); the Routh–Hurwitz minors are kept as an independent
//! cross-check for the stable verdict and as the shifted test
//! `A(p(s + eps))` for quasi-stability.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::roots::analyze_roots;

/// Base half-width of the "on the axis" band, relative to root magnitude.
pub const MARGIN_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    #[serde(rename = "stable")]
    Stable,
    #[serde(rename = "quasi-stable-not-stable")]
    QuasiStableNotStable,
    #[serde(rename = "unstable")]
    Unstable,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::Stable => "stable",
            Classification::QuasiStableNotStable => "quasi-stable-not-stable",
            Classification::Unstable => "unstable",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

/// Outcome of [`classify`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityReport {
    pub classification: Classification,
    /// Largest real part over all roots.
    pub margin: f64,
    /// Effective axis tolerance at the root that attains the margin. Repeated
    /// roots widen it to their numerical resolution limit.
    pub tol: f64,
    /// Roots with real part >= -tol.
    pub witness_roots: Vec<ComplexJson>,
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        self.classification == Classification::Stable
    }

    pub fn is_quasi_stable(&self) -> bool {
        self.classification != Classification::Unstable
    }
}

/// The n x n Hurwitz coefficient matrix of a degree-n polynomial with
/// positive leading coefficient: odd-index coefficients across the first
/// row, even-index across the second, shifting right every two rows.
#[derive(Clone, Debug)]
pub struct HurwitzMatrix {
    entries: DMatrix<f64>,
}

impl HurwitzMatrix {
    pub fn from_matrix(entries: DMatrix<f64>) -> Self {
        assert_eq!(entries.nrows(), entries.ncols());
        HurwitzMatrix { entries }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// The n leading principal minors, in order.
    pub fn leading_minors(&self) -> Vec<f64> {
        let n = self.entries.nrows();
        (1..=n)
            .map(|k| {
                let sub = self.entries.view((0, 0), (k, k)).into_owned();
                let (sign, logabs) = signed_log_det(sub);
                sign * logabs.exp()
            })
            .collect()
    }

    /// Exact signs of the n leading principal minors (-1, 0, +1).
    ///
    /// Near the quasi-stable boundary the minors underflow any fixed
    /// precision while staying positive, so the signs are computed in exact
    /// integer arithmetic: every f64 entry is a dyadic rational, the matrix
    /// is scaled by a power of two into integers, and each leading
    /// submatrix goes through fraction-free elimination.
    pub fn minor_signs(&self) -> Vec<i8> {
        let n = self.entries.nrows();
        (1..=n).map(|k| exact_det_sign(&self.entries, k)).collect()
    }
}

/// Exact determinant sign of the leading k x k submatrix.
fn exact_det_sign(m: &DMatrix<f64>, k: usize) -> i8 {
    use num_bigint::BigInt;

    // Decompose each entry as mantissa * 2^exp, exactly.
    let mut mants = vec![0i64; k * k];
    let mut exps = vec![0i64; k * k];
    let mut min_exp = i64::MAX;
    for r in 0..k {
        for c in 0..k {
            let (mant, exp) = dyadic_parts(m[(r, c)]);
            mants[r * k + c] = mant;
            exps[r * k + c] = exp;
            if mant != 0 {
                min_exp = min_exp.min(exp);
            }
        }
    }
    if min_exp == i64::MAX {
        return 0; // all-zero submatrix
    }
    let mut a: Vec<BigInt> = (0..k * k)
        .map(|i| {
            if mants[i] == 0 {
                BigInt::from(0)
            } else {
                BigInt::from(mants[i]) << (exps[i] - min_exp) as usize
            }
        })
        .collect();

    // Bareiss fraction-free elimination with row pivoting.
    let zero = BigInt::from(0);
    let mut sign = 1i8;
    let mut prev = BigInt::from(1);
    for col in 0..k {
        let mut piv = col;
        while piv < k && a[piv * k + col] == zero {
            piv += 1;
        }
        if piv == k {
            return 0;
        }
        if piv != col {
            for c in 0..k {
                a.swap(piv * k + c, col * k + c);
            }
            sign = -sign;
        }
        for r in col + 1..k {
            for c in col + 1..k {
                let num = &a[col * k + col] * &a[r * k + c] - &a[r * k + col] * &a[col * k + c];
                a[r * k + c] = num / &prev;
            }
            a[r * k + col] = zero.clone();
        }
        prev = a[col * k + col].clone();
    }
    let s = a[(k - 1) * k + (k - 1)].sign();
    match s {
        num_bigint::Sign::Plus => sign,
        num_bigint::Sign::Minus => -sign,
        num_bigint::Sign::NoSign => 0,
    }
}

/// `(mantissa, exponent)` with `x = mantissa * 2^exponent`, exact.
fn dyadic_parts(x: f64) -> (i64, i64) {
    if x == 0.0 {
        return (0, 0);
    }
    assert!(x.is_finite(), "non-finite matrix entry");
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    if biased == 0 {
        (sign * frac, -1074)
    } else {
        (sign * (frac + (1i64 << 52)), biased - 1075)
    }
}

/// Builds the Hurwitz matrix. With descending-order coefficients
/// `p = a_0 s^n + a_1 s^(n-1) + ... + a_n`, entry `(r, c)` (1-indexed) is
/// `a_(2c - r)` when that index lies in `0..=n`, else zero.
pub fn hurwitz_matrix(p: &Polynomial) -> Result<HurwitzMatrix> {
    let n = p.degree().ok_or_else(|| Error::InvalidInput("zero polynomial".into()))?;
    let lead = p.leading();
    if lead <= 0.0 {
        return Err(Error::NonPositiveLeading(lead));
    }
    // a[k] is the descending-order coefficient a_k = coeff of s^(n-k)
    let a: Vec<f64> = (0..=n).map(|k| p.coeff(n - k)).collect();
    let entries = DMatrix::from_fn(n, n, |r0, c0| {
        let (r, c) = (r0 as i64 + 1, c0 as i64 + 1);
        let idx = 2 * c - r;
        if (0..=n as i64).contains(&idx) {
            a[idx as usize]
        } else {
            0.0
        }
    });
    Ok(HurwitzMatrix { entries })
}

/// Determinant as `(sign, log |det|)` via partial-pivot elimination, immune
/// to overflow for the large matrices the degree-20 pipeline produces.
fn signed_log_det(mut a: DMatrix<f64>) -> (f64, f64) {
    let n = a.nrows();
    let mut sign = 1.0f64;
    let mut logabs = 0.0f64;
    for k in 0..n {
        let mut piv = k;
        let mut mx = a[(k, k)].abs();
        for i in k + 1..n {
            let v = a[(i, k)].abs();
            if v > mx {
                mx = v;
                piv = i;
            }
        }
        if mx == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        if piv != k {
            a.swap_rows(piv, k);
            sign = -sign;
        }
        let akk = a[(k, k)];
        sign *= akk.signum();
        logabs += akk.abs().ln();
        for i in k + 1..n {
            let f = a[(i, k)] / akk;
            if f == 0.0 {
                continue;
            }
            for j in k + 1..n {
                a[(i, j)] -= f * a[(k, j)];
            }
        }
    }
    (sign, logabs)
}

/// Root-location classification with a minors cross-check on the stable
/// verdict. Constant polynomials are stable by convention.
pub fn classify(p: &Polynomial) -> Result<StabilityReport> {
    if p.is_zero() {
        return Err(Error::InvalidInput("cannot classify the zero polynomial".into()));
    }
    let p = p.with_positive_leading();
    if p.degree() == Some(0) {
        return Ok(StabilityReport {
            classification: Classification::Stable,
            margin: f64::NEG_INFINITY,
            tol: MARGIN_TOL,
            witness_roots: Vec::new(),
        });
    }

    let groups = analyze_roots(&p)?;
    let mut any_right = false;
    let mut any_axis = false;
    let mut margin = f64::NEG_INFINITY;
    let mut margin_tol = MARGIN_TOL;
    let mut witnesses = Vec::new();
    for g in &groups {
        let tol = g.uncertainty.max(MARGIN_TOL * g.center.norm().max(1.0));
        if g.center.re > margin {
            margin = g.center.re;
            margin_tol = tol;
        }
        if g.center.re > tol {
            any_right = true;
        } else if g.center.re >= -tol {
            any_axis = true;
        }
        if g.center.re >= -tol {
            for _ in 0..g.multiplicity {
                witnesses.push(ComplexJson { re: g.center.re, im: g.center.im });
            }
        }
    }
    let classification = if any_right {
        Classification::Unstable
    } else if any_axis {
        Classification::QuasiStableNotStable
    } else {
        Classification::Stable
    };

    if classification == Classification::Stable {
        // Hurwitz: positive leading coefficient and all leading principal
        // minors positive iff stable. Disagreement means the numerics broke.
        let signs = hurwitz_matrix(&p)?.minor_signs();
        if signs.iter().any(|s| *s <= 0) {
            return Err(Error::StabilityConflict(format!(
                "roots give margin {margin:e} but a leading minor is not positive"
            )));
        }
    }

    Ok(StabilityReport { classification, margin, tol: margin_tol, witness_roots: witnesses })
}

/// Asner's shifted test: `p` is quasi-stable iff `A(p(s + eps))` has all
/// leading principal minors positive for every `eps > 0`. This evaluates a
/// single `eps`.
pub fn is_quasi_stable_shifted(p: &Polynomial, eps: f64) -> Result<bool> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("shift needs eps > 0, got {eps}")));
    }
    let shifted = p.with_positive_leading().shift(eps);
    if shifted.degree().map_or(true, |d| d == 0) {
        return Ok(true);
    }
    let m = hurwitz_matrix(&shifted)?;
    Ok(m.minor_signs().iter().all(|s| *s > 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Polynomial {
        Polynomial::from_coeffs(c)
    }

    #[test]
    fn quadratic_matrix_layout() {
        // s^2 + a s + b -> [[a, 0], [1, b]]
        let (a, b) = (3.0, 2.0);
        let m = hurwitz_matrix(&p(&[b, a, 1.0])).unwrap();
        let e = m.entries();
        assert_eq!(
            [e[(0, 0)], e[(0, 1)], e[(1, 0)], e[(1, 1)]],
            [a, 0.0, 1.0, b]
        );
        let minors = m.leading_minors();
        assert!((minors[0] - 3.0).abs() < 1e-12);
        assert!((minors[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_minors_match_hand_expansion() {
        // s^3 + A s^2 + B s + C: minors A, AB - C, (AB - C) C
        let (a, b, c) = (2.0, 3.0, 4.0);
        let m = hurwitz_matrix(&p(&[c, b, a, 1.0])).unwrap();
        let minors = m.leading_minors();
        assert!((minors[0] - a).abs() < 1e-12);
        assert!((minors[1] - (a * b - c)).abs() < 1e-12);
        assert!((minors[2] - (a * b - c) * c).abs() < 1e-10);
    }

    #[test]
    fn identity_minors() {
        let m = HurwitzMatrix::from_matrix(DMatrix::identity(3, 3));
        assert_eq!(m.leading_minors(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn counterexample_minors_nonnegative_but_unstable() {
        // s^4 + 198 s^2 + 101^2 passes the nonnegative-minors test yet is
        // not quasi-stable: the minors test is one-directional.
        let q = p(&[10201.0, 0.0, 198.0, 0.0, 1.0]);
        let m = hurwitz_matrix(&q).unwrap();
        for v in m.leading_minors() {
            assert_eq!(v, 0.0);
        }
        let report = classify(&q).unwrap();
        assert_eq!(report.classification, Classification::Unstable);
    }

    #[test]
    fn simple_stable_line() {
        let r = classify(&p(&[1.0, 1.0])).unwrap();
        assert_eq!(r.classification, Classification::Stable);
        assert!((r.margin + 1.0).abs() < 1e-12);
        assert!(r.witness_roots.is_empty());
    }

    #[test]
    fn pure_power_is_quasi_stable() {
        let r = classify(&Polynomial::monomial(5)).unwrap();
        assert_eq!(r.classification, Classification::QuasiStableNotStable);
        assert_eq!(r.margin, 0.0);
        assert_eq!(r.witness_roots.len(), 5);
    }

    #[test]
    fn negative_leading_is_normalized() {
        let r = classify(&p(&[-1.0, -1.0])).unwrap();
        assert_eq!(r.classification, Classification::Stable);
    }

    #[test]
    fn non_positive_leading_rejected_for_matrix() {
        assert!(matches!(
            hurwitz_matrix(&p(&[1.0, -1.0])),
            Err(Error::NonPositiveLeading(_))
        ));
    }

    #[test]
    fn shifted_test_on_double_zero_root() {
        // s^2 shifted by 0.1 -> s^2 + 0.2 s + 0.01, minors positive
        assert!(is_quasi_stable_shifted(&p(&[0.0, 0.0, 1.0]), 0.1).unwrap());
    }

    #[test]
    fn shifted_test_on_unstable_line() {
        // s - 1 shifted by 0.5 -> s - 0.5, still unstable
        assert!(!is_quasi_stable_shifted(&p(&[-1.0, 1.0]), 0.5).unwrap());
    }

    #[test]
    fn shifted_test_rejects_counterexample() {
        let q = p(&[10201.0, 0.0, 198.0, 0.0, 1.0]);
        assert!(!is_quasi_stable_shifted(&q, 0.01).unwrap());
    }

    #[test]
    fn quasi_stable_high_multiplicity_instance() {
        // (s^2 + 2 d s + 1)(s^2 + A)^3 with d, A > 0: quasi-stable, never
        // unstable, despite the multiplicity-3 axis pair.
        let d = 0.97;
        let a = 1.3;
        let stable_part = p(&[1.0, 2.0 * d, 1.0]);
        let axis = p(&[a, 0.0, 1.0]);
        let x = stable_part.mul(&axis).mul(&axis).mul(&axis);
        let r = classify(&x).unwrap();
        assert_eq!(r.classification, Classification::QuasiStableNotStable);
        assert!(r.margin.abs() <= r.tol);
    }
}
