//! Perturbing a quasi-stable triple into a certified stable one.
//!
//! Given quasi-stable `x, y, z` with
//! `(s^2 - 2 delta s + 1) x + (s^2 - 1) y = z`, form
//! `R(s) = (s^2 - 1) y / z` and substitute the half-plane dilation
//! `s -> ((2 + eps) s + eps) / (eps s + (2 + eps))`. The substitution pulls
//! every imaginary-axis root of the triple strictly into the left
//! half-plane at the cost of shrinking `delta` to
//!
//! ```text
//! delta_eps = (1 - (1 + eps)^2 t^2) / (1 + (1 + eps)^2 t^2),
//! t = sqrt((1 - delta) / (1 + delta)),
//! ```
//!
//! which tends to `delta` as `eps -> 0`. Writing the substituted function
//! in lowest terms as `p/q`, the stable triple is read off from
//! `p = (s^2 - 1) y_hat`, `q - p = (s^2 - 2 delta_eps s + 1) x_hat`,
//! `z_hat = q`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::AlgebraicConfiguration;
use crate::error::{Error, Result};
use crate::poly::{Polynomial, PAIRING_TOL};
use crate::rational::{MobiusMap, RationalFunction};
use crate::stability::{classify, Classification, StabilityReport};

/// Relative identity-residual bound every certificate must meet.
pub const CERT_TOL: f64 = 1e-8;

/// An admissible `delta_hat` with stable witnesses and the residual of the
/// defining identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub delta_hat: f64,
    pub x_hat: Polynomial,
    pub y_hat: Polynomial,
    pub z_hat: Polynomial,
    /// Stability margins (largest root real part) of x_hat, y_hat, z_hat.
    pub margins: [f64; 3],
    /// `max-norm((s^2 - 2 delta_hat s + 1) x_hat + (s^2 - 1) y_hat - z_hat)
    ///  / max-norm(z_hat)`.
    pub identity_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_config: Option<AlgebraicConfiguration>,
}

/// Predicted `delta` after an `eps`-dilation.
pub fn delta_epsilon(delta: f64, epsilon: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::OutOfRange(format!("epsilon must be positive, got {epsilon}")));
    }
    let t_sq = (1.0 - delta) / (1.0 + delta);
    let u = (1.0 + epsilon) * (1.0 + epsilon) * t_sq;
    if u >= 1.0 {
        return Err(Error::OutOfRange(format!(
            "(1 + eps) * t >= 1 at eps = {epsilon}: the dilation pushes the critical \
             points out of the disk"
        )));
    }
    Ok((1.0 - u) / (1.0 + u))
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::CertificationFailed(msg.to_string()))
    }
}

/// Identity residual of a triple, relative to `max-norm(z)`.
pub fn identity_residual(delta: f64, x: &Polynomial, y: &Polynomial, z: &Polynomial) -> f64 {
    let lhs = Polynomial::from_coeffs(&[1.0, -2.0 * delta, 1.0])
        .mul(x)
        .add(&Polynomial::from_coeffs(&[-1.0, 0.0, 1.0]).mul(y))
        .sub(z);
    lhs.max_norm() / z.max_norm().max(f64::MIN_POSITIVE)
}

/// Runs the dilation pipeline and certifies the output.
pub fn perturb(
    delta: f64,
    x: &Polynomial,
    y: &Polynomial,
    z: &Polynomial,
    epsilon: f64,
) -> Result<Certificate> {
    let predicted = delta_epsilon(delta, epsilon)?;
    require(!y.is_zero(), "y must be nonzero")?;
    require(!x.is_zero() && !z.is_zero(), "x and z must be nonzero")?;
    require(
        x.degree() >= y.degree(),
        "deg(x) must be at least deg(y)",
    )?;
    let input_residual = identity_residual(delta, x, y, z);
    require(
        input_residual <= CERT_TOL,
        &format!("input triple violates the identity: residual {input_residual:.3e}"),
    )?;
    for (name, p) in [("x", x), ("y", y), ("z", z)] {
        let report = classify(p)?;
        require(
            report.classification != Classification::Unstable,
            &format!("input {name} is not quasi-stable"),
        )?;
    }

    // R(s) = (s^2 - 1) y / z, substituted with the half-plane dilation.
    let s2m1 = Polynomial::from_coeffs(&[-1.0, 0.0, 1.0]);
    let r = RationalFunction::new(s2m1.mul(y), z.clone())?;
    let m = MobiusMap::halfplane_dilation(epsilon)?;
    let r_eps = r.mobius_compose(&m)?.lowest_terms()?.normalized();

    let p = r_eps.num().clone();
    let q = r_eps.den().clone();
    let d = q.sub(&p);

    // delta_hat comes from the conjugate root pair of q - p in the right
    // half-plane; it must land on the unit circle.
    let droots = d.roots()?;
    let mut rhp: Vec<Complex64> = droots.iter().copied().filter(|r| r.re > 0.0 && r.im > 0.0).collect();
    require(rhp.len() == 1, &format!("expected one critical pair, found {}", rhp.len()))?;
    let critical = rhp.pop().unwrap();
    let modulus = critical.norm();
    require(
        (modulus - 1.0).abs() <= PAIRING_TOL.max(1e-6),
        &format!("critical pair off the unit circle: |root| = {modulus}"),
    )?;
    let delta_hat = critical.re;

    let y_hat = p.deflate_factor(&s2m1)?;
    let crit_factor = Polynomial::from_coeffs(&[1.0, -2.0 * delta_hat, 1.0]);
    let x_hat = d.deflate_factor(&crit_factor)?;
    let z_hat = q;

    require(
        (delta_hat - predicted).abs() <= 1e-6 * predicted.max(1.0),
        &format!("extracted delta_hat {delta_hat} disagrees with prediction {predicted}"),
    )?;

    finish_certificate(
        delta_hat,
        x_hat,
        y_hat,
        z_hat,
        Some(epsilon),
        None,
        &format!("deg(x_hat) must not exceed deg(x) = {:?}", x.degree()),
        x.degree(),
    )
}

#[allow(clippy::too_many_arguments)]
fn finish_certificate(
    delta_hat: f64,
    x_hat: Polynomial,
    y_hat: Polynomial,
    z_hat: Polynomial,
    epsilon: Option<f64>,
    source_config: Option<AlgebraicConfiguration>,
    degree_msg: &str,
    degree_cap: Option<usize>,
) -> Result<Certificate> {
    if let Some(cap) = degree_cap {
        require(x_hat.degree().map_or(true, |d| d <= cap), degree_msg)?;
    }
    // A zero y contributes nothing to the identity and is treated as
    // stable by convention.
    let reports: Vec<StabilityReport> = [&x_hat, &y_hat, &z_hat]
        .iter()
        .map(|p| {
            if p.is_zero() {
                classify(&Polynomial::one())
            } else {
                classify(p)
            }
        })
        .collect::<Result<_>>()?;
    for (name, report) in ["x_hat", "y_hat", "z_hat"].iter().zip(&reports) {
        require(
            report.classification == Classification::Stable,
            &format!("{name} is not stable (margin {:.3e})", report.margin),
        )?;
    }
    let identity = identity_residual(delta_hat, &x_hat, &y_hat, &z_hat);
    require(
        identity <= CERT_TOL,
        &format!("identity residual {identity:.3e} exceeds {CERT_TOL:.1e}"),
    )?;
    Ok(Certificate {
        delta_hat,
        x_hat,
        y_hat,
        z_hat,
        margins: [reports[0].margin, reports[1].margin, reports[2].margin],
        identity_residual: identity,
        epsilon,
        source_config,
    })
}

/// Checking direction: given `delta, x, y`, compute `z` from the identity
/// and certify all three stable with `deg(x) >= deg(y)`.
pub fn certify_admissible(delta: f64, x: &Polynomial, y: &Polynomial) -> Result<Certificate> {
    require(!x.is_zero(), "x must be nonzero")?;
    require(x.degree() >= y.degree(), "deg(x) must be at least deg(y)")?;
    let z = Polynomial::from_coeffs(&[1.0, -2.0 * delta, 1.0])
        .mul(x)
        .add(&Polynomial::from_coeffs(&[-1.0, 0.0, 1.0]).mul(y));
    require(!z.is_zero(), "z vanished identically")?;
    finish_certificate(delta, x.clone(), y.clone(), z, None, None, "", None)
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUARTIC_DELTA: f64 = 0.951_056_516_295_153_5; // sqrt(10 + 2 sqrt 5) / 4
    const GOLDEN: f64 = 1.618_033_988_749_894_8; // (sqrt 5 + 1) / 2

    fn quartic_triple() -> (f64, Polynomial, Polynomial, Polynomial) {
        let d = QUARTIC_DELTA;
        let x = Polynomial::from_coeffs(&[1.0, 2.0 * d, 1.0])
            .mul(&Polynomial::from_coeffs(&[GOLDEN, 0.0, 1.0]));
        let y = Polynomial::constant(GOLDEN);
        let z = Polynomial::monomial(6);
        (d, x, y, z)
    }

    #[test]
    fn delta_epsilon_continuity_at_zero() {
        let d = 0.77;
        let mut prev = 0.0;
        for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
            let v = delta_epsilon(d, eps).unwrap();
            assert!(v < d);
            assert!(v > prev);
            prev = v;
        }
        assert!((prev - d).abs() < 1e-7);
    }

    #[test]
    fn delta_epsilon_worked_value() {
        let v = delta_epsilon(QUARTIC_DELTA, 0.01).unwrap();
        assert!((v - 0.950097).abs() < 1e-6, "got {v}");
        let t_sq = (1.0 - QUARTIC_DELTA) / (1.0 + QUARTIC_DELTA);
        assert!((t_sq - 0.0250855).abs() < 5e-7);
    }

    #[test]
    fn delta_epsilon_monotone_band() {
        let d = 0.9744993;
        let v = delta_epsilon(d, 1e-4).unwrap();
        assert!(v > 0.97449 && v < d);
    }

    #[test]
    fn delta_epsilon_out_of_range() {
        // t(0.1) = sqrt(0.9/1.1) ~ 0.904: eps = 0.2 pushes (1+eps) t past 1.
        assert!(matches!(delta_epsilon(0.1, 0.2), Err(Error::OutOfRange(_))));
        assert!(delta_epsilon(0.1, 0.05).is_ok());
    }

    #[test]
    fn worked_example_end_to_end() {
        let (d, x, y, z) = quartic_triple();
        let cert = perturb(d, &x, &y, &z, 0.01).unwrap();
        assert!((cert.delta_hat - 0.950097).abs() < 1e-5, "{}", cert.delta_hat);
        assert!(cert.identity_residual <= CERT_TOL);
        for m in cert.margins {
            assert!(m < 0.0);
        }
        // y_hat has a single real root near -201 with multiplicity 4
        let roots = cert.y_hat.roots().unwrap();
        assert_eq!(roots.len(), 4);
        for r in roots {
            assert!((r.re + 201.0).abs() < 1e-3, "root {r}");
            assert!(r.im.abs() < 1e-6);
        }
        // critical pair on the unit circle
        let crit = Complex64::new(cert.delta_hat, (1.0 - cert.delta_hat.powi(2)).sqrt());
        assert!((crit.norm() - 1.0).abs() < 1e-8);
        assert!((crit.im - 0.311954).abs() < 1e-4);
    }

    #[test]
    fn smaller_epsilon_comes_closer() {
        let (d, x, y, z) = quartic_triple();
        let cert = perturb(d, &x, &y, &z, 1e-6).unwrap();
        assert!(cert.delta_hat < d);
        assert!(d - cert.delta_hat < 1e-5);
        let predicted = delta_epsilon(d, 1e-6).unwrap();
        assert!((cert.delta_hat - predicted).abs() < 1e-9);
    }

    #[test]
    fn reject_negative_epsilon() {
        let (d, x, y, z) = quartic_triple();
        assert!(matches!(perturb(d, &x, &y, &z, -1.0), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn certify_simple_admissible_point() {
        // x = 1, y = 0, delta = 0.5: z = s^2 - s + 1... unstable.
        // Use delta = -0.5 ... no: delta must make z stable: s^2 - 2 d s + 1
        // is stable for d < 0. For the checking direction with x = 1, y = 0
        // pick delta = 0.5 and expect failure, then a genuinely stable pair.
        let err = certify_admissible(0.5, &Polynomial::one(), &Polynomial::zero());
        assert!(err.is_err());
        // x = s + 3, y = 8: z = (s^2-s+1)(s+3) + 8 s^2 - 8
        //   = s^3 + 10 s^2 - 2 s - 5 ... just verify against classify.
        let x = Polynomial::from_coeffs(&[3.0, 1.0]);
        let y = Polynomial::constant(8.0);
        match certify_admissible(0.5, &x, &y) {
            Ok(cert) => {
                assert!(cert.margins.iter().all(|m| *m < 0.0));
                assert!(cert.identity_residual <= CERT_TOL);
            }
            Err(Error::CertificationFailed(_)) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn certify_round_trips_perturb_output() {
        let (d, x, y, z) = quartic_triple();
        let cert = perturb(d, &x, &y, &z, 0.01).unwrap();
        let again = certify_admissible(cert.delta_hat, &cert.x_hat, &cert.y_hat).unwrap();
        assert!((again.delta_hat - cert.delta_hat).abs() < 1e-15);
        assert!(again.identity_residual <= CERT_TOL);
    }

    #[test]
    fn delta_one_is_never_admissible() {
        // (s-1)^2 x + (s^2-1) y has a root at s = 1 for any x, y.
        let x = Polynomial::from_coeffs(&[1.0, 1.0]);
        let y = Polynomial::constant(1.0);
        let err = certify_admissible(1.0, &x, &y).unwrap_err();
        assert!(matches!(err, Error::CertificationFailed(_)));
    }
}
