//! Coefficient-matching systems.
//!
//! Expanding `(s^2 - 2 delta s + 1) x + (s^2 - 1) y - z` for a symbolic
//! template and equating every coefficient to zero yields a multivariate
//! polynomial system in the unknowns. For even-structured templates the odd
//! coefficients vanish identically and the leading coefficient matches by
//! construction, leaving `(deg(x) + 2) / 2` equations — square exactly when
//! the configuration passes `is_square`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::{AlgebraicConfiguration, SymbolicTemplate};
use crate::error::{Error, Result};

/// Sparse multinomial with exact integer coefficients. Exponent vectors are
/// aligned to the owning system's unknown list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u16>, i64>,
}

impl MPoly {
    pub fn zero(nvars: usize) -> Self {
        MPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: i64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0 {
            terms.insert(vec![0; nvars], c);
        }
        MPoly { nvars, terms }
    }

    pub fn var(nvars: usize, idx: usize) -> Self {
        assert!(idx < nvars);
        let mut exp = vec![0u16; nvars];
        exp[idx] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(exp, 1);
        MPoly { nvars, terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn scale(&self, c: i64) -> MPoly {
        if c == 0 {
            return MPoly::zero(self.nvars);
        }
        MPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn add(&self, other: &MPoly) -> MPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut terms = self.terms.clone();
        for (e, v) in &other.terms {
            let entry = terms.entry(e.clone()).or_insert(0);
            *entry += v;
            if *entry == 0 {
                terms.remove(e);
            }
        }
        MPoly { nvars: self.nvars, terms }
    }

    pub fn sub(&self, other: &MPoly) -> MPoly {
        self.add(&other.scale(-1))
    }

    pub fn mul(&self, other: &MPoly) -> MPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut terms: BTreeMap<Vec<u16>, i64> = BTreeMap::new();
        for (ea, va) in &self.terms {
            for (eb, vb) in &other.terms {
                let exp: Vec<u16> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                let entry = terms.entry(exp).or_insert(0);
                *entry += va * vb;
                if *entry == 0 {
                    terms.remove(&ea.iter().zip(eb).map(|(a, b)| a + b).collect::<Vec<_>>());
                }
            }
        }
        MPoly { nvars: self.nvars, terms }
    }

    /// Partial derivative with respect to unknown `idx`.
    pub fn partial(&self, idx: usize) -> MPoly {
        let mut terms = BTreeMap::new();
        for (e, v) in &self.terms {
            if e[idx] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[idx] -= 1;
            terms.insert(e2, v * e[idx] as i64);
        }
        MPoly { nvars: self.nvars, terms }
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        debug_assert_eq!(point.len(), self.nvars);
        let mut acc = 0.0;
        for (e, v) in &self.terms {
            let mut term = *v as f64;
            for (x, &p) in point.iter().zip(e) {
                if p > 0 {
                    term *= x.powi(p as i32);
                }
            }
            acc += term;
        }
        acc
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u16>, &i64)> {
        self.terms.iter()
    }
}

/// `sum_i a[i] * b[j]` convolution of symbolic polynomials in `s`.
pub(crate) fn spoly_mul(a: &[MPoly], b: &[MPoly]) -> Vec<MPoly> {
    let n = a.first().map_or_else(|| b.first().map_or(0, MPoly::nvars), MPoly::nvars);
    let mut out = vec![MPoly::zero(n); a.len() + b.len() - 1];
    for (i, pa) in a.iter().enumerate() {
        if pa.is_zero() {
            continue;
        }
        for (j, pb) in b.iter().enumerate() {
            if pb.is_zero() {
                continue;
            }
            out[i + j] = out[i + j].add(&pa.mul(pb));
        }
    }
    out
}

fn spoly_add(a: &[MPoly], b: &[MPoly], n: usize) -> Vec<MPoly> {
    let len = a.len().max(b.len());
    (0..len)
        .map(|i| {
            let pa = a.get(i).cloned().unwrap_or_else(|| MPoly::zero(n));
            match b.get(i) {
                Some(pb) => pa.add(pb),
                None => pa,
            }
        })
        .collect()
}

/// The square system produced by matching coefficients.
#[derive(Clone, Debug)]
pub struct CoefficientSystem {
    unknowns: Vec<String>,
    equations: Vec<MPoly>,
    jacobian_rows: Vec<Vec<MPoly>>,
    nonneg: Vec<bool>,
    source: Option<AlgebraicConfiguration>,
}

impl CoefficientSystem {
    pub fn unknowns(&self) -> &[String] {
        &self.unknowns
    }

    pub fn equations(&self) -> &[MPoly] {
        &self.equations
    }

    pub fn equation_count(&self) -> usize {
        self.equations.len()
    }

    pub fn unknown_count(&self) -> usize {
        self.unknowns.len()
    }

    pub fn is_square(&self) -> bool {
        self.equation_count() == self.unknown_count()
    }

    /// Mask of unknowns constrained nonnegative for feasibility.
    pub fn nonneg_mask(&self) -> &[bool] {
        &self.nonneg
    }

    pub fn source(&self) -> Option<&AlgebraicConfiguration> {
        self.source.as_ref()
    }

    /// Equation values at a point.
    pub fn residual(&self, point: &[f64]) -> Vec<f64> {
        self.equations.iter().map(|e| e.eval(point)).collect()
    }

    pub fn residual_norm(&self, point: &[f64]) -> f64 {
        self.residual(point).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Exact symbolic Jacobian evaluated at a point.
    pub fn jacobian(&self, point: &[f64]) -> DMatrix<f64> {
        let ne = self.equation_count();
        let nu = self.unknown_count();
        DMatrix::from_fn(ne, nu, |r, c| self.jacobian_rows[r][c].eval(point))
    }

    /// Debug dump: one entry per equation, each a list of
    /// `{"vars": {name: exponent}, "coeff": integer}` terms.
    pub fn dump_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Term {
            vars: BTreeMap<String, u16>,
            coeff: i64,
        }
        let eqs: Vec<Vec<Term>> = self
            .equations
            .iter()
            .map(|eq| {
                eq.terms()
                    .map(|(e, v)| Term {
                        vars: self
                            .unknowns
                            .iter()
                            .zip(e)
                            .filter(|(_, p)| **p > 0)
                            .map(|(n, p)| (n.clone(), *p))
                            .collect(),
                        coeff: *v,
                    })
                    .collect()
            })
            .collect();
        serde_json::to_value(eqs).unwrap()
    }
}

/// Expands the defining identity for a template and equates coefficients.
pub fn build_system(tpl: &SymbolicTemplate) -> Result<CoefficientSystem> {
    let n = tpl.unknown_count();
    let (x, y, z) = tpl.expand_xyz();

    let one = MPoly::constant(n, 1);
    let neg_one = MPoly::constant(n, -1);
    let delta = MPoly::var(n, 0);
    // (s^2 - 2 delta s + 1)
    let left = vec![one.clone(), delta.scale(-2), one.clone()];
    // (s^2 - 1)
    let mid = vec![neg_one, MPoly::zero(n), one];

    let lx = spoly_mul(&left, &x);
    let my = spoly_mul(&mid, &y);
    let mut lhs = spoly_add(&lx, &my, n);
    let minus_z: Vec<MPoly> = z.iter().map(|p| p.scale(-1)).collect();
    lhs = spoly_add(&lhs, &minus_z, n);

    // Leading coefficient must cancel identically; otherwise the template
    // cannot reproduce a monic z of degree deg(x) + 2.
    while lhs.len() > 1 && lhs.last().map_or(false, MPoly::is_zero) {
        lhs.pop();
    }
    let top_expected = z.len() - 1;
    if lhs.len() > top_expected {
        return Err(Error::InvalidConfiguration(
            "leading coefficient does not cancel; deg(y) must stay below deg(x)".into(),
        ));
    }

    let mut equations = Vec::new();
    for (d, coeff) in lhs.iter().enumerate() {
        if coeff.is_zero() {
            continue;
        }
        if tpl.even_structure && d % 2 == 1 {
            return Err(Error::OddCoefficientNonzero { degree: d });
        }
        equations.push(coeff.clone());
    }

    if let Some(cfg) = &tpl.source {
        if equations.len() != cfg.equation_count() {
            return Err(Error::InvalidConfiguration(format!(
                "expected {} equations, got {}",
                cfg.equation_count(),
                equations.len()
            )));
        }
    }

    let jacobian_rows = equations
        .iter()
        .map(|eq| (0..n).map(|v| eq.partial(v)).collect())
        .collect();

    Ok(CoefficientSystem {
        unknowns: tpl.unknowns.clone(),
        equations,
        jacobian_rows,
        nonneg: tpl.nonneg.clone(),
        source: tpl.source.clone(),
    })
}

/// Convenience: template + system for a configuration.
pub fn system_for_configuration(cfg: &AlgebraicConfiguration) -> Result<CoefficientSystem> {
    build_system(&SymbolicTemplate::from_configuration(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_shorthand;

    /// Renders an equation in a canonical human-readable form for tests.
    fn render(sys: &CoefficientSystem, eq: &MPoly) -> String {
        let mut parts = Vec::new();
        for (e, v) in eq.terms() {
            let mut s = format!("{v}");
            for (name, &p) in sys.unknowns().iter().zip(e) {
                for _ in 0..p {
                    s.push('*');
                    s.push_str(name);
                }
            }
            parts.push(s);
        }
        parts.join(" + ")
    }

    #[test]
    fn cubic_fixture_equations() {
        let sys = build_system(&SymbolicTemplate::generic_cubic()).unwrap();
        assert_eq!(sys.unknown_count(), 5);
        assert_eq!(sys.equation_count(), 5);
        // constant term: C - k
        let eq0 = render(&sys, &sys.equations()[0]);
        assert!(eq0.contains("1*C") && eq0.contains("-1*k"), "{eq0}");
        // top emitted equation (s^4): A - 2 delta
        let eq4 = render(&sys, &sys.equations()[4]);
        assert!(eq4.contains("1*A") && eq4.contains("-2*delta"), "{eq4}");
        // check all five at a satisfying point: delta solving 8d^4-8d^2+1=0
        let d = ((2.0 + 2f64.sqrt()) / 4.0).sqrt();
        let a = 2.0 * d;
        let b = 4.0 * d * d - 1.0;
        let c = 4.0 * d * d * d - 2.0 * d;
        let k = c;
        let r = sys.residual_norm(&[d, a, b, c, k]);
        assert!(r < 1e-12, "residual {r}");
    }

    #[test]
    fn quartic_config_system_matches_hand_expansion() {
        // [1],[],[]: {A - 4 d^2 + 2, -4 A d^2 + 2 A + k + 1, A - k}
        let cfg = parse_shorthand("[1],[],[]").unwrap();
        let sys = system_for_configuration(&cfg).unwrap();
        assert_eq!(sys.equation_count(), 3);
        let at = |d: f64, a: f64, k: f64| sys.residual(&[d, a, k]);
        let r = at(0.5, 2.0, 3.0);
        // hand-computed: A - 4 d^2 + 2 = 3; -4 A d^2 + 2 A + k + 1 = 6; A - k = -1
        assert!((r[2] - 3.0).abs() < 1e-14);
        assert!((r[1] - 6.0).abs() < 1e-14);
        assert!((r[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn quartic_closed_form_residual() {
        let cfg = parse_shorthand("[1],[],[]").unwrap();
        let sys = system_for_configuration(&cfg).unwrap();
        let d = (10.0 + 2.0 * 5f64.sqrt()).sqrt() / 4.0;
        let a = 4.0 * d * d - 2.0;
        let r = sys.residual_norm(&[d, a, a]);
        assert!(r < 1e-10, "residual {r}");
    }

    #[test]
    fn record_configuration_is_eleven_by_eleven() {
        let cfg = parse_shorthand("[4,2,2,1],[3,2],[2,2,1]").unwrap();
        let sys = system_for_configuration(&cfg).unwrap();
        assert_eq!(sys.equation_count(), 11);
        assert_eq!(sys.unknown_count(), 11);
    }

    #[test]
    fn equation_count_law() {
        for deg in [4usize, 6, 8, 10] {
            for cfg in crate::config::enumerate_configurations(deg).unwrap() {
                let sys = system_for_configuration(&cfg).unwrap();
                assert_eq!(sys.equation_count(), (deg + 2) / 2);
                assert!(sys.is_square());
            }
        }
    }

    #[test]
    fn jacobian_of_linear_equation() {
        let sys = build_system(&SymbolicTemplate::generic_cubic()).unwrap();
        // equation A - 2 delta: d/dA = 1, d/ddelta = -2
        let point = [0.3, 0.1, 0.2, 0.4, 0.5];
        let jac = sys.jacobian(&point);
        let row = 4; // s^4 coefficient
        assert_eq!(jac[(row, 1)], 1.0);
        assert_eq!(jac[(row, 0)], -2.0);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let cfg = parse_shorthand("[2],[1],[]").unwrap();
        let sys = system_for_configuration(&cfg).unwrap();
        let point = [0.9, 1.3, 0.7, 2.2];
        let jac = sys.jacobian(&point);
        let h = 1e-6;
        for v in 0..sys.unknown_count() {
            let mut plus = point.to_vec();
            let mut minus = point.to_vec();
            plus[v] += h;
            minus[v] -= h;
            let rp = sys.residual(&plus);
            let rm = sys.residual(&minus);
            for e in 0..sys.equation_count() {
                let fd = (rp[e] - rm[e]) / (2.0 * h);
                let an = jac[(e, v)];
                assert!(
                    (fd - an).abs() <= 1e-5 * an.abs().max(1.0),
                    "eq {e} var {v}: fd {fd} vs {an}"
                );
            }
        }
    }

    #[test]
    fn residual_matches_polynomial_route() {
        // Even coefficients of (s^2-2ds+1)x + (s^2-1)y - z computed through
        // the numeric polynomial route must equal the symbolic residual.
        let cfg = parse_shorthand("[2],[1],[]").unwrap();
        let sys = system_for_configuration(&cfg).unwrap();
        let point = [0.8, 1.9, 0.6, -3.0];
        let (x, y, z) = cfg.instantiate(&point).unwrap();
        let d = point[0];
        let lhs = crate::poly::Polynomial::from_coeffs(&[1.0, -2.0 * d, 1.0])
            .mul(&x)
            .add(&crate::poly::Polynomial::from_coeffs(&[-1.0, 0.0, 1.0]).mul(&y))
            .sub(&z);
        let sym = sys.residual(&point);
        // symbolic equations are ascending even degrees 0, 2, 4, ...
        for (i, rv) in sym.iter().enumerate() {
            let pv = lhs.coeff(2 * i);
            assert!(
                (rv - pv).abs() <= 1e-9 * pv.abs().max(1.0),
                "degree {}: {rv} vs {pv}",
                2 * i
            );
        }
        // odd coefficients vanish to rounding level as well
        let scale = lhs.max_norm().max(1.0);
        for dgr in (1..=11).step_by(2) {
            assert!(lhs.coeff(dgr).abs() <= 1e-14 * scale);
        }
    }

    #[test]
    fn equal_degree_template_rejected() {
        // deg(y) = deg(x) cannot cancel the leading coefficient.
        let cfg = AlgebraicConfiguration::new(vec![2], vec![3], vec![]).unwrap();
        let err = system_for_configuration(&cfg).unwrap_err();
        assert!(matches!(err, Error::InvalidConfiguration(_)));
    }
}
