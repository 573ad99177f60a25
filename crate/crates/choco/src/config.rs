//! Algebraic configurations: the combinatorial search space.
//!
//! A configuration prescribes repeated imaginary-axis root pairs for a
//! candidate triple,
//!
//! ```text
//! x(s) = (s^2 + 2 delta s + 1) * prod_i (s^2 + A_i)^(j_i)
//! y(s) = k * prod_i (s^2 + B_i)^(k_i)
//! z(s) = s^c * prod_i (s^2 + C_i)^(l_i)
//! ```
//!
//! written in the shorthand `[j_1,...],[k_1,...],[l_1,...]`. The power `c`
//! is whatever makes `deg(z) = deg(x) + 2`. With `delta > 0` and all
//! `A_i, B_i, C_i >= 0` every instance is quasi-stable by construction, so
//! maximizing `delta` reduces to enumerating configurations whose
//! coefficient-matching system is square and solving each one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::system::MPoly;

/// Multiplicity triple in canonical (non-increasing) order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AlgebraicConfiguration {
    j: Vec<u32>,
    #[serde(rename = "k")]
    kexp: Vec<u32>,
    l: Vec<u32>,
}

impl AlgebraicConfiguration {
    pub fn new(j: Vec<u32>, kexp: Vec<u32>, l: Vec<u32>) -> Result<Self> {
        let cfg = AlgebraicConfiguration { j, kexp, l };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        for (name, list) in [("j", &self.j), ("k", &self.kexp), ("l", &self.l)] {
            if list.iter().any(|&m| m == 0) {
                return Err(Error::InvalidConfiguration(format!(
                    "{name} contains a zero multiplicity"
                )));
            }
            if list.windows(2).any(|w| w[0] < w[1]) {
                return Err(Error::InvalidConfiguration(format!(
                    "{name} multiplicities must be non-increasing"
                )));
            }
        }
        if self.deg_y() > self.deg_x() {
            return Err(Error::InvalidConfiguration(format!(
                "deg(y) = {} exceeds deg(x) = {}",
                self.deg_y(),
                self.deg_x()
            )));
        }
        if 2 * self.sum_l() > self.deg_z() {
            return Err(Error::InvalidConfiguration(
                "z factors exceed deg(x) + 2; the s-power would be negative".into(),
            ));
        }
        Ok(())
    }

    pub fn j(&self) -> &[u32] {
        &self.j
    }

    pub fn kexp(&self) -> &[u32] {
        &self.kexp
    }

    pub fn l(&self) -> &[u32] {
        &self.l
    }

    fn sum_j(&self) -> usize {
        self.j.iter().map(|&v| v as usize).sum()
    }

    fn sum_k(&self) -> usize {
        self.kexp.iter().map(|&v| v as usize).sum()
    }

    fn sum_l(&self) -> usize {
        self.l.iter().map(|&v| v as usize).sum()
    }

    pub fn deg_x(&self) -> usize {
        2 + 2 * self.sum_j()
    }

    pub fn deg_y(&self) -> usize {
        2 * self.sum_k()
    }

    pub fn deg_z(&self) -> usize {
        self.deg_x() + 2
    }

    /// Power of `s` in `z`.
    pub fn s_power(&self) -> usize {
        self.deg_z() - 2 * self.sum_l()
    }

    /// delta, the A_i, B_i, C_i, and k.
    pub fn unknown_count(&self) -> usize {
        self.j.len() + self.kexp.len() + self.l.len() + 2
    }

    /// One equation per matched even coefficient below the leading one.
    pub fn equation_count(&self) -> usize {
        (self.deg_x() + 2) / 2
    }

    /// True when the coefficient-matching system has as many equations as
    /// unknowns.
    pub fn is_square(&self) -> bool {
        self.unknown_count() == self.equation_count()
    }

    /// `delta, A1..Am1, B1..Bm2, C1..Cm3, k`.
    pub fn unknown_names(&self) -> Vec<String> {
        let mut names = vec!["delta".to_string()];
        names.extend((1..=self.j.len()).map(|i| format!("A{i}")));
        names.extend((1..=self.kexp.len()).map(|i| format!("B{i}")));
        names.extend((1..=self.l.len()).map(|i| format!("C{i}")));
        names.push("k".to_string());
        names
    }

    /// Expands the triple at a concrete parameter vector ordered as
    /// [`unknown_names`]. This is the direct numeric route, independent of
    /// the symbolic expansion used to build coefficient systems.
    pub fn instantiate(&self, values: &[f64]) -> Result<(Polynomial, Polynomial, Polynomial)> {
        if values.len() != self.unknown_count() {
            return Err(Error::InvalidInput(format!(
                "expected {} parameter values, got {}",
                self.unknown_count(),
                values.len()
            )));
        }
        let delta = values[0];
        let m1 = self.j.len();
        let m2 = self.kexp.len();
        let a = &values[1..1 + m1];
        let b = &values[1 + m1..1 + m1 + m2];
        let c = &values[1 + m1 + m2..1 + m1 + m2 + self.l.len()];
        let k = values[self.unknown_count() - 1];

        let mut x = Polynomial::from_coeffs(&[1.0, 2.0 * delta, 1.0]);
        for (&ai, &ji) in a.iter().zip(&self.j) {
            let f = Polynomial::from_coeffs(&[ai, 0.0, 1.0]);
            for _ in 0..ji {
                x = x.mul(&f);
            }
        }
        let mut y = Polynomial::constant(k);
        for (&bi, &ki) in b.iter().zip(&self.kexp) {
            let f = Polynomial::from_coeffs(&[bi, 0.0, 1.0]);
            for _ in 0..ki {
                y = y.mul(&f);
            }
        }
        let mut z = Polynomial::monomial(self.s_power());
        for (&ci, &li) in c.iter().zip(&self.l) {
            let f = Polynomial::from_coeffs(&[ci, 0.0, 1.0]);
            for _ in 0..li {
                z = z.mul(&f);
            }
        }
        Ok((x, y, z))
    }
}

impl fmt::Display for AlgebraicConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn bracket(f: &mut fmt::Formatter<'_>, list: &[u32]) -> fmt::Result {
            write!(f, "[")?;
            for (i, v) in list.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{v}")?;
            }
            write!(f, "]")
        }
        bracket(f, &self.j)?;
        write!(f, ",")?;
        bracket(f, &self.kexp)?;
        write!(f, ",")?;
        bracket(f, &self.l)
    }
}

impl FromStr for AlgebraicConfiguration {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let lists = parse_bracket_lists(text)?;
        if lists.len() != 3 {
            return Err(Error::Parse(format!(
                "expected three bracketed lists, found {}",
                lists.len()
            )));
        }
        let mut it = lists.into_iter();
        AlgebraicConfiguration::new(
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
        )
    }
}

/// Parses the shorthand, e.g. `[3,1],[2],[1]`. Empty brackets are allowed.
pub fn parse_shorthand(text: &str) -> Result<AlgebraicConfiguration> {
    text.parse()
}

fn parse_bracket_lists(text: &str) -> Result<Vec<Vec<u32>>> {
    let mut lists = Vec::new();
    let mut rest = text.trim();
    loop {
        if !rest.starts_with('[') {
            return Err(Error::Parse(format!("expected '[' at \"{rest}\"")));
        }
        let close = rest
            .find(']')
            .ok_or_else(|| Error::Parse("unterminated bracket".into()))?;
        let inner = &rest[1..close];
        let mut list = Vec::new();
        for part in inner.split(',') {
            let part = part.trim();
            if part.is_empty() {
                if inner.trim().is_empty() {
                    break;
                }
                return Err(Error::Parse("empty entry in bracket list".into()));
            }
            let v: u32 = part
                .parse()
                .map_err(|_| Error::Parse(format!("not a positive integer: \"{part}\"")))?;
            list.push(v);
        }
        lists.push(list);
        rest = rest[close + 1..].trim_start();
        if rest.is_empty() {
            return Ok(lists);
        }
        rest = rest
            .strip_prefix(',')
            .ok_or_else(|| Error::Parse(format!("expected ',' at \"{rest}\"")))?
            .trim_start();
    }
}

/// All square canonical configurations with the given `deg(x)`, in
/// lexicographic order.
///
/// Configurations with `deg(y) = deg(x)` are omitted: matching the leading
/// coefficient there forces `k = 0` and a zero `y`, so they admit no
/// feasible solution.
pub fn enumerate_configurations(deg_x: usize) -> Result<Vec<AlgebraicConfiguration>> {
    if deg_x < 4 || deg_x % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "deg(x) must be an even integer >= 4, got {deg_x}"
        )));
    }
    let sum_j = (deg_x - 2) / 2;
    let unknown_target = (deg_x + 2) / 2;
    let max_sum_k = deg_x / 2 - 1; // deg(y) <= deg(x) - 2
    let max_sum_l = (deg_x + 2) / 2; // s-power stays nonnegative

    let mut out = Vec::new();
    for j in partitions(sum_j) {
        let m1 = j.len();
        let Some(rem) = unknown_target.checked_sub(m1 + 2) else { continue };
        for m2 in 0..=rem {
            let m3 = rem - m2;
            for kexp in partitions_with_parts(max_sum_k, m2) {
                for l in partitions_with_parts(max_sum_l, m3) {
                    if let Ok(cfg) =
                        AlgebraicConfiguration::new(j.clone(), kexp.clone(), l.clone())
                    {
                        debug_assert!(cfg.is_square());
                        out.push(cfg);
                    }
                }
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// All partitions of `n` (non-increasing parts). `n = 0` gives the empty
/// partition.
fn partitions(n: usize) -> Vec<Vec<u32>> {
    fn rec(n: usize, max_part: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (1..=n.min(max_part)).rev() {
            prefix.push(part as u32);
            rec(n - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n.max(1), &mut Vec::new(), &mut out);
    out
}

/// All partitions with exactly `parts` parts and total at most `max_sum`.
fn partitions_with_parts(max_sum: usize, parts: usize) -> Vec<Vec<u32>> {
    if parts == 0 {
        return vec![Vec::new()];
    }
    if max_sum < parts {
        return Vec::new();
    }
    let mut out = Vec::new();
    for total in parts..=max_sum {
        for p in partitions(total) {
            if p.len() == parts {
                out.push(p);
            }
        }
    }
    out
}

/// A factored symbolic triple: each factor is a polynomial in `s` whose
/// coefficients are integer multinomials in the unknowns.
#[derive(Clone, Debug)]
pub struct SymbolicTemplate {
    pub unknowns: Vec<String>,
    pub(crate) x_factors: Vec<(Vec<MPoly>, u32)>,
    pub(crate) y_factors: Vec<(Vec<MPoly>, u32)>,
    pub(crate) z_factors: Vec<(Vec<MPoly>, u32)>,
    /// True when the structure guarantees only even-degree coefficients in
    /// the matched identity.
    pub even_structure: bool,
    /// Which unknowns are constrained nonnegative for feasibility.
    pub nonneg: Vec<bool>,
    pub source: Option<AlgebraicConfiguration>,
}

impl SymbolicTemplate {
    pub fn from_configuration(cfg: &AlgebraicConfiguration) -> Self {
        let names = cfg.unknown_names();
        let n = names.len();
        let delta = MPoly::var(n, 0);
        let one = MPoly::constant(n, 1);

        let mut x_factors = Vec::new();
        // (s^2 + 2 delta s + 1)
        x_factors.push((vec![one.clone(), delta.scale(2), one.clone()], 1));
        let m1 = cfg.j.len();
        for (i, &ji) in cfg.j.iter().enumerate() {
            let ai = MPoly::var(n, 1 + i);
            x_factors.push((vec![ai, MPoly::zero(n), one.clone()], ji));
        }
        let mut y_factors = Vec::new();
        let k = MPoly::var(n, n - 1);
        y_factors.push((vec![k], 1));
        for (i, &ki) in cfg.kexp.iter().enumerate() {
            let bi = MPoly::var(n, 1 + m1 + i);
            y_factors.push((vec![bi, MPoly::zero(n), one.clone()], ki));
        }
        let mut z_factors = Vec::new();
        if cfg.s_power() > 0 {
            let mut s_pow = vec![MPoly::zero(n); cfg.s_power() + 1];
            s_pow[cfg.s_power()] = one.clone();
            z_factors.push((s_pow, 1));
        } else {
            z_factors.push((vec![one.clone()], 1));
        }
        for (i, &li) in cfg.l.iter().enumerate() {
            let ci = MPoly::var(n, 1 + m1 + cfg.kexp.len() + i);
            z_factors.push((vec![ci, MPoly::zero(n), one.clone()], li));
        }

        let mut nonneg = vec![false; n];
        for flag in nonneg.iter_mut().take(n - 1).skip(1) {
            *flag = true;
        }

        SymbolicTemplate {
            unknowns: names,
            x_factors,
            y_factors,
            z_factors,
            even_structure: true,
            nonneg,
            source: Some(cfg.clone()),
        }
    }

    /// The classic degree-3 instance: generic cubic `x`, constant `y`,
    /// `z = s^5`. Falls outside the even-structured grammar, so it ships as
    /// a hand-built template.
    pub fn generic_cubic() -> Self {
        let names: Vec<String> =
            ["delta", "A", "B", "C", "k"].iter().map(|s| s.to_string()).collect();
        let n = names.len();
        let one = MPoly::constant(n, 1);
        let a = MPoly::var(n, 1);
        let b = MPoly::var(n, 2);
        let c = MPoly::var(n, 3);
        let k = MPoly::var(n, 4);
        let x = vec![c, b, a, one.clone()];
        let y = vec![k];
        let mut z = vec![MPoly::zero(n); 6];
        z[5] = one;
        SymbolicTemplate {
            unknowns: names,
            x_factors: vec![(x, 1)],
            y_factors: vec![(y, 1)],
            z_factors: vec![(z, 1)],
            even_structure: false,
            nonneg: vec![false; n],
            source: None,
        }
    }

    pub fn unknown_count(&self) -> usize {
        self.unknowns.len()
    }

    /// Expands the factored forms into dense symbolic polynomials in `s`.
    pub(crate) fn expand_xyz(&self) -> (Vec<MPoly>, Vec<MPoly>, Vec<MPoly>) {
        let n = self.unknowns.len();
        let expand = |factors: &[(Vec<MPoly>, u32)]| -> Vec<MPoly> {
            let mut acc = vec![MPoly::constant(n, 1)];
            for (base, exp) in factors {
                for _ in 0..*exp {
                    acc = crate::system::spoly_mul(&acc, base);
                }
            }
            acc
        };
        (expand(&self.x_factors), expand(&self.y_factors), expand(&self.z_factors))
    }

    /// Numeric triple through the symbolic route (factor-by-factor
    /// evaluation at the point).
    pub fn instantiate(&self, values: &[f64]) -> Result<(Polynomial, Polynomial, Polynomial)> {
        if values.len() != self.unknowns.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} parameter values, got {}",
                self.unknowns.len(),
                values.len()
            )));
        }
        let eval_factors = |factors: &[(Vec<MPoly>, u32)]| -> Polynomial {
            let mut acc = Polynomial::one();
            for (base, exp) in factors {
                let coeffs: Vec<f64> = base.iter().map(|m| m.eval(values)).collect();
                let f = Polynomial::new(coeffs);
                for _ in 0..*exp {
                    acc = acc.mul(&f);
                }
            }
            acc
        };
        Ok((
            eval_factors(&self.x_factors),
            eval_factors(&self.y_factors),
            eval_factors(&self.z_factors),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_canonical_example() {
        let cfg = parse_shorthand("[3,1],[2],[1]").unwrap();
        assert_eq!(cfg.j(), &[3, 1]);
        assert_eq!(cfg.kexp(), &[2]);
        assert_eq!(cfg.l(), &[1]);
        assert_eq!(cfg.deg_x(), 10);
        assert_eq!(cfg.deg_z(), 12);
        assert_eq!(cfg.s_power(), 10);
        assert!(cfg.is_square());
        assert_eq!(cfg.to_string(), "[3,1],[2],[1]");
    }

    #[test]
    fn parse_empty_lists() {
        let cfg = parse_shorthand("[1],[],[]").unwrap();
        assert_eq!(cfg.deg_x(), 4);
        assert_eq!(cfg.deg_y(), 0);
        assert_eq!(cfg.s_power(), 6);
        assert_eq!(
            cfg.unknown_names(),
            vec!["delta".to_string(), "A1".into(), "k".into()]
        );
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_shorthand("[3,1],[2]").is_err());
        assert!(parse_shorthand("3,1,2").is_err());
        assert!(parse_shorthand("[3,x],[2],[1]").is_err());
        assert!(parse_shorthand("[1,2],[],[]").is_err()); // increasing
        assert!(parse_shorthand("[0],[],[]").is_err());
    }

    #[test]
    fn squareness_counts() {
        assert!(parse_shorthand("[4,2,2,1],[3,2],[2,2,1]").unwrap().is_square());
        assert!(!parse_shorthand("[1],[1],[]").unwrap().is_square());
    }

    #[test]
    fn degree20_record_shorthand() {
        let cfg = parse_shorthand("[4,2,2,1],[3,2],[2,2,1]").unwrap();
        assert_eq!(cfg.deg_x(), 20);
        assert_eq!(cfg.unknown_count(), 11);
        assert_eq!(cfg.equation_count(), 11);
    }

    #[test]
    fn enumerate_smallest_degree() {
        let cfgs = enumerate_configurations(4).unwrap();
        assert_eq!(cfgs.len(), 1);
        assert_eq!(cfgs[0].to_string(), "[1],[],[]");
    }

    #[test]
    fn enumerate_contains_known_winners() {
        let cfgs = enumerate_configurations(10).unwrap();
        assert!(cfgs.iter().any(|c| c.to_string() == "[3,1],[2],[1]"));
        for c in &cfgs {
            assert!(c.is_square());
            assert_eq!(c.deg_x(), 10);
            assert!(c.deg_y() < c.deg_x());
        }
        let cfgs20 = enumerate_configurations(20).unwrap();
        assert!(cfgs20.iter().any(|c| c.to_string() == "[4,2,2,1],[3,2],[2,2,1]"));
        assert!(cfgs20.iter().any(|c| c.to_string() == "[4,2,2,1],[3,2],[2,1,1]"));
    }

    #[test]
    fn enumerate_rejects_odd_degree() {
        assert!(enumerate_configurations(3).is_err());
        assert!(enumerate_configurations(2).is_err());
    }

    #[test]
    fn format_parse_round_trip() {
        for deg in [4usize, 6, 8, 10] {
            for cfg in enumerate_configurations(deg).unwrap() {
                let back = parse_shorthand(&cfg.to_string()).unwrap();
                assert_eq!(back, cfg);
            }
        }
    }

    #[test]
    fn instantiate_structure_check() {
        // degenerate values: delta=1, A=0, k=0
        let cfg = parse_shorthand("[1],[],[]").unwrap();
        let (x, y, z) = cfg.instantiate(&[1.0, 0.0, 0.0]).unwrap();
        // x = (s^2+2s+1) s^2
        assert_eq!(x.coeffs(), &[0.0, 0.0, 1.0, 2.0, 1.0]);
        assert!(y.is_zero());
        assert_eq!(z, Polynomial::monomial(6));
    }

    #[test]
    fn instantiate_degrees_match() {
        let cfg = parse_shorthand("[3,1],[2],[1]").unwrap();
        let vals = [0.9, 1.3, 0.4, 0.5, 2.5, 3.4];
        let (x, y, z) = cfg.instantiate(&vals).unwrap();
        assert_eq!(x.degree(), Some(10));
        assert_eq!(y.degree(), Some(4));
        assert_eq!(z.degree(), Some(12));
    }

    #[test]
    fn symbolic_and_direct_instantiation_agree() {
        let cfg = parse_shorthand("[2],[1],[]").unwrap();
        let tpl = SymbolicTemplate::from_configuration(&cfg);
        let vals = [0.93, 1.7, 0.8, 2.1];
        let (x1, y1, z1) = cfg.instantiate(&vals).unwrap();
        let (x2, y2, z2) = tpl.instantiate(&vals).unwrap();
        for (a, b) in [(&x1, &x2), (&y1, &y2), (&z1, &z2)] {
            let diff = a.sub(b).max_norm();
            assert!(diff <= 1e-12 * a.max_norm().max(1.0));
        }
    }
}
