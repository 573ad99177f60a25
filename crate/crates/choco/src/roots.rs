//! Polynomial root finding.
//!
//! Strategy: exact zero-root stripping, closed forms through degree two,
//! then balanced companion-matrix eigenvalues. Raw eigenvalues of a root of
//! multiplicity m scatter on a circle of radius ~(eps*cond)^(1/m) around the
//! true root, which is far too coarse to decide whether a repeated root sits
//! on the imaginary axis. So eigenvalues are grouped into clusters, each
//! cluster's center is re-solved as a simple root of the (m-1)-th derivative
//! (Newton in double-double), and the claimed multiplicity is checked by
//! repeated synthetic division. Clusters that fail the check are split and
//! reprocessed at a tighter radius.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dd::{Cdd, Dd};
use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Residual bound accepted for a returned root, relative to the local
/// magnitude `sum |a_i| |r|^i`.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-7;

/// Initial clustering radius, relative to `max(1, |root|)`.
const CLUSTER_TAU: f64 = 0.08;
/// Relative synthetic-division remainder accepted when validating a
/// multiplicity hypothesis.
const VALIDATE_TOL: f64 = 1e-9;

/// One refined root (or conjugate-pair representative) with an uncertainty
/// radius for downstream classification.
#[derive(Clone, Copy, Debug)]
pub(crate) struct RootGroup {
    pub center: Complex64,
    pub multiplicity: usize,
    pub uncertainty: f64,
}

/// Full analysis used by the stability module.
pub(crate) fn analyze_roots(p: &Polynomial) -> Result<Vec<RootGroup>> {
    if p.is_zero() {
        return Err(Error::InvalidInput("roots of the zero polynomial".into()));
    }
    if !p.coeffs().iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidInput("non-finite coefficient".into()));
    }
    let n = p.degree().unwrap();
    if n == 0 {
        return Ok(Vec::new());
    }

    // Exact zero roots: strip stored zeros at the low end.
    let zeros_at_origin = p.coeffs().iter().take_while(|c| **c == 0.0).count();
    let reduced: Vec<f64> = p.coeffs()[zeros_at_origin..].to_vec();
    let mut groups = Vec::new();
    if zeros_at_origin > 0 {
        groups.push(RootGroup {
            center: Complex64::new(0.0, 0.0),
            multiplicity: zeros_at_origin,
            uncertainty: 0.0,
        });
    }
    let m = reduced.len() - 1;
    if m == 0 {
        return Ok(groups);
    }

    // Monic normalization.
    let lead = *reduced.last().unwrap();
    let monic: Vec<f64> = reduced.iter().map(|c| c / lead).collect();

    if m == 1 {
        groups.push(RootGroup {
            center: Complex64::new(-monic[0], 0.0),
            multiplicity: 1,
            uncertainty: 0.0,
        });
        return Ok(groups);
    }
    if m == 2 {
        groups.extend(quadratic_groups(monic[0], monic[1]));
        return Ok(groups);
    }

    let raw = companion_eigenvalues(&monic)?;
    let ctx = RefineContext::new(&monic);
    let points = fold_points(&raw);
    let tol_scale = 1.0;
    let _ = tol_scale;
    let mut found = Vec::new();
    process_clusters(&ctx, &points, CLUSTER_TAU, &mut found);
    groups.extend(found);

    // Residual safety net: every reported center must actually annihilate p.
    for g in &groups {
        if g.center == Complex64::new(0.0, 0.0) && zeros_at_origin > 0 {
            continue;
        }
        let scale = Polynomial::from_coeffs(&monic).magnitude_at(g.center.norm()).max(1.0);
        let val = Polynomial::from_coeffs(&monic).eval(g.center).norm();
        if !(val <= ROOT_RESIDUAL_TOL * scale) {
            return Err(Error::NonConvergence(format!(
                "root residual {val:.3e} above {ROOT_RESIDUAL_TOL:.1e} * {scale:.3e}"
            )));
        }
    }
    Ok(groups)
}

/// Flattened list with multiplicity, mirror roots included.
pub(crate) fn find_roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    let groups = analyze_roots(p)?;
    let mut out = Vec::new();
    for g in &groups {
        for _ in 0..g.multiplicity {
            out.push(g.center);
        }
    }
    out.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    Ok(out)
}

fn quadratic_groups(c0: f64, c1: f64) -> Vec<RootGroup> {
    // s^2 + c1 s + c0, stable quadratic formula.
    let disc = c1 * c1 - 4.0 * c0;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        let q = -0.5 * (c1 + c1.signum() * sq);
        let (r1, r2) = if c1 == 0.0 {
            (sq * 0.5, -sq * 0.5)
        } else if q != 0.0 {
            (q, c0 / q)
        } else {
            (0.0, -c1)
        };
        if (r1 - r2).abs() <= 1e-12 * r1.abs().max(r2.abs()) {
            let c = 0.5 * (r1 + r2);
            vec![RootGroup { center: Complex64::new(c, 0.0), multiplicity: 2, uncertainty: disc.abs().sqrt() }]
        } else {
            vec![
                RootGroup { center: Complex64::new(r1, 0.0), multiplicity: 1, uncertainty: 0.0 },
                RootGroup { center: Complex64::new(r2, 0.0), multiplicity: 1, uncertainty: 0.0 },
            ]
        }
    } else {
        let re = -0.5 * c1;
        let im = (-disc).sqrt() * 0.5;
        vec![
            RootGroup { center: Complex64::new(re, im), multiplicity: 1, uncertainty: 0.0 },
            RootGroup { center: Complex64::new(re, -im), multiplicity: 1, uncertainty: 0.0 },
        ]
    }
}

fn companion_eigenvalues(monic: &[f64]) -> Result<Vec<Complex64>> {
    // Rough root-magnitude scale for picking spectral shifts.
    let n = monic.len() - 1;
    let mut scale: f64 = 1.0;
    for (i, &c) in monic.iter().enumerate().take(n) {
        if c != 0.0 {
            scale = scale.max(c.abs().powf(1.0 / (n - i) as f64));
        }
    }
    // The Francis double shift can cycle forever on spectra symmetric about
    // both axes (eigenvalue quadruples +-a +- bi, typical for even
    // polynomials). Solving C - sigma*I for a nonzero sigma breaks the
    // symmetry; the shifts below are irrational-ish multiples of the root
    // scale so no polynomial family re-creates it.
    for rel in [0.0, 0.618_034, -1.329_535, 2.236_068, -0.267_949] {
        let sigma = rel * scale;
        if let Some(v) = eigen_attempt(monic, sigma) {
            return Ok(v);
        }
    }
    // Last resort: rescale the variable so the coefficient range flattens,
    // then retry the same shift schedule.
    let scaled: Vec<f64> = monic
        .iter()
        .enumerate()
        .map(|(i, &c)| c / scale.powi((n - i) as i32))
        .collect();
    for rel in [0.0, 0.618_034, -1.329_535] {
        if let Some(v) = eigen_attempt(&scaled, rel) {
            return Ok(v.into_iter().map(|z| z * scale).collect());
        }
    }
    Err(Error::NonConvergence(
        "companion eigenvalues failed for every shift".into(),
    ))
}

fn eigen_attempt(monic: &[f64], sigma: f64) -> Option<Vec<Complex64>> {
    let n = monic.len() - 1;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for r in 0..n {
        m[(r, n - 1)] = -monic[r];
        if r > 0 {
            m[(r, r - 1)] = 1.0;
        }
        m[(r, r)] -= sigma;
    }
    balance(&mut m);
    let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 200 * n.max(10))?;
    let eig = schur.complex_eigenvalues();
    let v: Vec<Complex64> =
        eig.iter().map(|z| Complex64::new(z.re + sigma, z.im)).collect();
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Some(v)
    } else {
        None
    }
}

/// Parlett–Reinsch balancing (radix 2), in place.
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let radix = 2.0f64;
    let sqrdx = radix * radix;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut f = 1.0;
                let s = c + r;
                let mut g = r / radix;
                while c < g {
                    f *= radix;
                    c *= sqrdx;
                }
                g = r * radix;
                while c > g {
                    f /= radix;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let ginv = 1.0 / f;
                    for j in 0..n {
                        m[(i, j)] *= ginv;
                    }
                    for j in 0..n {
                        m[(j, i)] *= f;
                    }
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Eigenvalues folded to the closed upper half-plane with weights: a real
/// eigenvalue counts once, a conjugate-pair representative counts twice.
fn fold_points(raw: &[Complex64]) -> Vec<(Complex64, usize)> {
    let mut pts = Vec::new();
    for &z in raw {
        if z.im > 0.0 {
            pts.push((z, 2));
        } else if z.im == 0.0 {
            pts.push((z, 1));
        }
        // strict lower half: mirror of an upper entry, skip
    }
    pts
}

struct RefineContext {
    /// Derivative chain: derivs[k] holds the coefficients of p^(k).
    derivs: Vec<Vec<f64>>,
}

impl RefineContext {
    fn new(monic: &[f64]) -> Self {
        let n = monic.len() - 1;
        let mut derivs = Vec::with_capacity(n + 1);
        derivs.push(monic.to_vec());
        for k in 1..=n {
            let prev = &derivs[k - 1];
            let next: Vec<f64> = prev
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| Dd::prod(c, i as f64).value())
                .collect();
            derivs.push(next);
        }
        RefineContext { derivs }
    }

    fn p(&self) -> &[f64] {
        &self.derivs[0]
    }

    /// Newton for a simple root of p^(order), complex arithmetic in dd.
    fn newton(&self, order: usize, start: Complex64, leash: f64) -> Option<(Complex64, f64)> {
        let f = &self.derivs[order];
        let df = &self.derivs[order + 1];
        let mut z = Cdd::new(start.re, start.im);
        let mut last_step = f64::INFINITY;
        for _ in 0..60 {
            let fv = crate::dd::horner_cdd(f, z);
            let dv = crate::dd::horner_cdd(df, z);
            if dv.norm() == 0.0 {
                return None;
            }
            let step = fv.div(dv);
            z = z.sub(step);
            let cur = Complex64::new(z.re.value(), z.im.value());
            if !(cur.re.is_finite() && cur.im.is_finite()) || (cur - start).norm() > leash {
                return None;
            }
            last_step = step.norm();
            if last_step <= 1e-28 * cur.norm().max(1.0) {
                break;
            }
        }
        Some((Complex64::new(z.re.value(), z.im.value()), last_step))
    }

    /// Divides p by (s - c)^m (real c), checking every remainder.
    fn validate_real(&self, c: f64, m: usize) -> Option<f64> {
        let mut cur: Vec<Dd> = self.p().iter().map(|&v| Dd::from_f64(v)).collect();
        let mut worst: f64 = 0.0;
        for _ in 0..m {
            let scale = local_scale(&cur, c.abs());
            let mut quot = vec![Dd::ZERO; cur.len() - 1];
            let mut carry = Dd::ZERO;
            for i in (1..cur.len()).rev() {
                carry = cur[i].add(carry.mul_f64(c));
                quot[i - 1] = carry;
            }
            let rem = cur[0].add(carry.mul_f64(c));
            let rel = rem.abs() / scale;
            if !(rel <= VALIDATE_TOL) {
                return None;
            }
            worst = worst.max(rel);
            cur = quot;
        }
        Some(worst)
    }

    /// Divides p by (s^2 - 2u s + v)^m where u = Re c, v = |c|^2.
    fn validate_pair(&self, c: Complex64, m: usize) -> Option<f64> {
        let u = c.re;
        let v = c.norm_sqr();
        let mut cur: Vec<Dd> = self.p().iter().map(|&w| Dd::from_f64(w)).collect();
        let mut worst: f64 = 0.0;
        for _ in 0..m {
            if cur.len() < 3 {
                return None;
            }
            let scale = local_scale(&cur, c.norm());
            let n = cur.len() - 1;
            let mut quot = vec![Dd::ZERO; n - 1];
            for i in (0..=n - 2).rev() {
                let mut q = cur[i + 2];
                if i + 1 <= n - 2 {
                    q = q.add(quot[i + 1].mul_f64(2.0 * u));
                }
                if i + 2 <= n - 2 {
                    q = q.sub(quot[i + 2].mul_f64(v));
                }
                quot[i] = q;
            }
            // remainder r1 s + r0
            let mut r1 = cur[1].add(quot[0].mul_f64(2.0 * u));
            if 1 <= n - 2 {
                r1 = r1.sub(quot[1].mul_f64(v));
            }
            let r0 = cur[0].sub(quot[0].mul_f64(v));
            let rel = (r1.abs() * c.norm() + r0.abs()) / scale;
            if !(rel <= VALIDATE_TOL) {
                return None;
            }
            worst = worst.max(rel);
            cur = quot;
        }
        Some(worst)
    }
}

fn local_scale(coeffs: &[Dd], r: f64) -> f64 {
    let mut acc = 0.0f64;
    let mut pow = 1.0f64;
    for c in coeffs {
        acc += c.abs() * pow;
        pow *= r;
    }
    acc.max(f64::MIN_POSITIVE)
}

fn cluster_once(points: &[(Complex64, usize)], tau: f64) -> Vec<Vec<(Complex64, usize)>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = 1.0f64.max(points[i].0.norm().min(points[j].0.norm()));
            if (points[i].0 - points[j].0).norm() <= tau * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut map = std::collections::HashMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        map.entry(r).or_insert_with(Vec::new).push(points[i]);
    }
    let mut clusters: Vec<Vec<(Complex64, usize)>> = map.into_values().collect();
    clusters.sort_by(|a, b| {
        (a[0].0.re, a[0].0.im).partial_cmp(&(b[0].0.re, b[0].0.im)).unwrap()
    });
    clusters
}

fn process_clusters(
    ctx: &RefineContext,
    points: &[(Complex64, usize)],
    tau: f64,
    out: &mut Vec<RootGroup>,
) {
    for cluster in cluster_once(points, tau) {
        handle_cluster(ctx, &cluster, out);
    }
}

/// Candidate split thresholds: the largest relative jumps in the cluster's
/// minimum-spanning-tree edge lengths, best first.
fn gap_cuts(cluster: &[(Complex64, usize)]) -> Vec<f64> {
    let n = cluster.len();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best_dist = vec![f64::INFINITY; n];
    in_tree[0] = true;
    for j in 1..n {
        best_dist[j] = (cluster[0].0 - cluster[j].0).norm();
    }
    let mut edges: Vec<f64> = Vec::with_capacity(n - 1);
    for _ in 1..n {
        let Some((next, d)) = best_dist
            .iter()
            .enumerate()
            .filter(|(i, _)| !in_tree[*i])
            .map(|(i, d)| (i, *d))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        else {
            return Vec::new();
        };
        in_tree[next] = true;
        edges.push(d);
        for j in 0..n {
            if !in_tree[j] {
                best_dist[j] = best_dist[j].min((cluster[next].0 - cluster[j].0).norm());
            }
        }
    }
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let floor = 1e-15 * cluster[0].0.norm().max(1.0);
    let mut cuts: Vec<(f64, f64)> = edges
        .windows(2)
        .filter_map(|w| {
            let (lo, hi) = (w[0].max(floor), w[1]);
            let ratio = hi / lo;
            if ratio >= 2.0 {
                Some((ratio, (lo * hi).sqrt()))
            } else {
                None
            }
        })
        .collect();
    cuts.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    cuts.truncate(3);
    cuts.into_iter().map(|(_, cut)| cut).collect()
}

fn partition_at(
    cluster: &[(Complex64, usize)],
    cut: f64,
) -> Option<Vec<Vec<(Complex64, usize)>>> {
    let n = cluster.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..n {
        for j in i + 1..n {
            if (cluster[i].0 - cluster[j].0).norm() <= cut {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut map = std::collections::HashMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        map.entry(r).or_insert_with(Vec::new).push(cluster[i]);
    }
    if map.len() < 2 {
        return None;
    }
    let mut parts: Vec<Vec<(Complex64, usize)>> = map.into_values().collect();
    parts.sort_by(|a, b| (a[0].0.re, a[0].0.im).partial_cmp(&(b[0].0.re, b[0].0.im)).unwrap());
    Some(parts)
}

/// Resolves one cluster of folded eigenvalues into root groups. Returns
/// true when every emitted group passed a multiplicity validation (or was
/// an isolated simple root); false marks a best-effort fallback.
fn handle_cluster(
    ctx: &RefineContext,
    cluster: &[(Complex64, usize)],
    out: &mut Vec<RootGroup>,
) -> bool {
    let weight: usize = cluster.iter().map(|(_, w)| w).sum();
    let has_real = cluster.iter().any(|(_, w)| *w == 1);
    let mean: Complex64 =
        cluster.iter().map(|(z, w)| z * (*w as f64)).sum::<Complex64>() / weight as f64;
    let diam = cluster
        .iter()
        .flat_map(|a| cluster.iter().map(move |b| (a.0 - b.0).norm()))
        .fold(0.0f64, f64::max);
    let scale = mean.norm().max(1.0);
    let leash = (4.0 * diam + 0.5 * scale).max(1e-2 * scale);

    if cluster.len() == 1 && cluster[0].1 == 1 {
        let z = cluster[0].0;
        let (c, step) = match ctx.newton(0, z, leash) {
            Some((c, step)) => (Complex64::new(c.re, 0.0), step.max(c.im.abs())),
            None => (Complex64::new(z.re, 0.0), diam.max(1e-12)),
        };
        out.push(RootGroup { center: c, multiplicity: 1, uncertainty: uncertainty(c, step) });
        return true;
    }

    // Weighted mean including implicit mirrors. For an axis-straddling
    // cluster the conjugates cancel the imaginary part.
    let real_center = cluster.iter().map(|(z, w)| z.re * *w as f64).sum::<f64>() / weight as f64;
    let looks_real = has_real || mean.im <= (4.0 * diam).max(1e-6 * scale);

    if looks_real {
        // Hypothesis: one real root of multiplicity `weight`.
        if let Some((c, step)) =
            ctx.newton(weight - 1, Complex64::new(real_center, 0.0), leash)
        {
            let c = Complex64::new(c.re, 0.0);
            if ctx.validate_real(c.re, weight).is_some() {
                out.push(RootGroup {
                    center: c,
                    multiplicity: weight,
                    uncertainty: uncertainty(c, step),
                });
                return true;
            }
        }
    }
    if !has_real {
        // Hypothesis: conjugate pair of multiplicity `#members` each.
        let m_pair = cluster.len();
        let upper_mean: Complex64 =
            cluster.iter().map(|(z, _)| z).sum::<Complex64>() / m_pair as f64;
        eprintln!("DBG cluster {:?} mean {upper_mean} m={m_pair}", cluster);
        if let Some((c, step)) = ctx.newton(m_pair - 1, upper_mean, leash) {
            eprintln!("DBG newton -> {c} step {step} validate {:?}", ctx.validate_pair(c, m_pair));
            if c.im > 0.0 && ctx.validate_pair(c, m_pair).is_some() {
                let unc = uncertainty(c, step);
                out.push(RootGroup { center: c, multiplicity: m_pair, uncertainty: unc });
                out.push(RootGroup {
                    center: c.conj(),
                    multiplicity: m_pair,
                    uncertainty: unc,
                });
                return true;
            }
        }
    }

    // Mixed or invalid cluster: cut at the widest internal gaps and keep
    // the first split whose parts all validate.
    if cluster.len() > 1 {
        for cut in gap_cuts(cluster) {
            if let Some(parts) = partition_at(cluster, cut) {
                let mut trial = Vec::new();
                let ok = parts.iter().all(|part| handle_cluster(ctx, part, &mut trial));
                if ok {
                    out.extend(trial);
                    return true;
                }
            }
        }
    }

    // Best effort: polish members one by one.
    for &(z, w) in cluster {
        if w == 1 {
            let (c, step) = match ctx.newton(0, z, leash) {
                Some((c, step)) if c.im.abs() <= 1e-9 * c.norm().max(1.0) => {
                    (Complex64::new(c.re, 0.0), step)
                }
                Some((c, step)) => (Complex64::new(c.re, 0.0), step.max(c.im.abs())),
                None => (z, diam.max(1e-12)),
            };
            out.push(RootGroup {
                center: c,
                multiplicity: 1,
                uncertainty: uncertainty(c, step),
            });
        } else {
            // Single conjugate-pair member: maybe a genuine complex pair,
            // maybe a real double root seen as a tight pair.
            if z.im <= 1e-6 * z.norm().max(1.0) {
                if let Some((c, step)) = ctx.newton(1, Complex64::new(z.re, 0.0), leash) {
                    if ctx.validate_real(c.re, 2).is_some() {
                        out.push(RootGroup {
                            center: Complex64::new(c.re, 0.0),
                            multiplicity: 2,
                            uncertainty: uncertainty(c, step),
                        });
                        continue;
                    }
                }
            }
            let (c, step) = match ctx.newton(0, z, leash) {
                Some(v) => v,
                None => (z, diam.max(1e-12)),
            };
            let unc = uncertainty(c, step);
            out.push(RootGroup { center: c, multiplicity: 1, uncertainty: unc });
            out.push(RootGroup { center: c.conj(), multiplicity: 1, uncertainty: unc });
        }
    }
    false
}

/// Uncertainty of a refined center. The center is a simple root of the
/// (m-1)-th derivative, so its accuracy is governed by the final Newton
/// step, not by the fan radius of the surrounding eigenvalue cluster.
fn uncertainty(c: Complex64, newton_step: f64) -> f64 {
    let scale = c.norm().max(1.0);
    (1e-9 * scale).max(4.0 * newton_step)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        v
    }

    #[test]
    fn perfect_square_quadratic() {
        // s^2 + 2s + 1
        let r = Polynomial::from_coeffs(&[1.0, 2.0, 1.0]).roots().unwrap();
        assert_eq!(r.len(), 2);
        for z in r {
            assert!((z - Complex64::new(-1.0, 0.0)).norm() < 1e-7);
        }
    }

    #[test]
    fn delta_quadratic_roots() {
        // s^2 - 2 d s + 1 with d = 0.95 -> 0.95 +- i sqrt(1-d^2)
        let d = 0.95f64;
        let r = sorted(Polynomial::from_coeffs(&[1.0, -2.0 * d, 1.0]).roots().unwrap());
        let im = (1.0 - d * d).sqrt();
        assert!((r[0] - Complex64::new(d, -im)).norm() < 1e-12);
        assert!((r[1] - Complex64::new(d, im)).norm() < 1e-12);
        assert!((im - 0.3122499).abs() < 1e-7);
    }

    #[test]
    fn biquadratic_half_plane_split() {
        // s^4 + 198 s^2 + 101^2: roots sqrt(-99 +- 20i), none on the axis.
        let p = Polynomial::from_coeffs(&[10201.0, 0.0, 198.0, 0.0, 1.0]);
        let r = p.roots().unwrap();
        assert_eq!(r.len(), 4);
        let mut left = 0;
        let mut right = 0;
        for z in &r {
            assert!(z.re.abs() > 1e-3);
            if z.re > 0.0 {
                right += 1;
            } else {
                left += 1;
            }
            // each root satisfies s^2 = -99 +- 20i
            let w = z * z;
            let d1 = (w - Complex64::new(-99.0, 20.0)).norm();
            let d2 = (w - Complex64::new(-99.0, -20.0)).norm();
            assert!(d1.min(d2) < 1e-9);
        }
        assert_eq!(left, 2);
        assert_eq!(right, 2);
    }

    #[test]
    fn exact_zero_roots_are_stripped() {
        let p = Polynomial::monomial(5);
        let r = p.roots().unwrap();
        assert_eq!(r.len(), 5);
        assert!(r.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn repeated_axis_pair_recovers_multiplicity() {
        // (s^2 + 2)^4: octic with a multiplicity-4 pair on the axis.
        let q = Polynomial::from_coeffs(&[2.0, 0.0, 1.0]);
        let p = q.mul(&q).mul(&q).mul(&q);
        let groups = analyze_roots(&p).unwrap();
        assert_eq!(groups.len(), 2);
        for g in groups {
            assert_eq!(g.multiplicity, 4);
            assert!(g.center.re.abs() < 1e-9, "center re = {}", g.center.re);
            assert!((g.center.im.abs() - 2f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn repeated_real_root_recovers_multiplicity() {
        // (s + 201)^4 scaled
        let lin = Polynomial::from_coeffs(&[201.0, 1.0]);
        let p = lin.mul(&lin).mul(&lin).mul(&lin).scale(3.5);
        let groups = analyze_roots(&p).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].multiplicity, 4);
        assert!((groups[0].center.re + 201.0).abs() < 1e-6);
    }

    #[test]
    fn mixed_cluster_with_nearby_simple_roots() {
        // (s^2+0.229)(s^2+0.309): distinct axis pairs only 0.077 apart.
        let p = Polynomial::from_coeffs(&[0.229, 0.0, 1.0])
            .mul(&Polynomial::from_coeffs(&[0.309, 0.0, 1.0]));
        let groups = analyze_roots(&p).unwrap();
        assert_eq!(groups.len(), 4);
        for g in &groups {
            assert_eq!(g.multiplicity, 1);
            assert!(g.center.re.abs() < 1e-9);
        }
        let mut ims: Vec<f64> = groups.iter().map(|g| g.center.im).filter(|v| *v > 0.0).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ims[0] - 0.229f64.sqrt()).abs() < 1e-9);
        assert!((ims[1] - 0.309f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn quintuple_axis_pair() {
        // (s^2 + 1.7)^5 (s + 0.4): the worst case the search instantiates.
        let q = Polynomial::from_coeffs(&[1.7, 0.0, 1.0]);
        let p = q.mul(&q).mul(&q).mul(&q).mul(&q).mul(&Polynomial::from_coeffs(&[0.4, 1.0]));
        let groups = analyze_roots(&p).unwrap();
        let mut mult_five = 0;
        for g in &groups {
            if g.multiplicity == 5 {
                mult_five += 1;
                assert!(g.center.re.abs() < 1e-9, "re = {:e}", g.center.re);
            }
        }
        assert_eq!(mult_five, 2);
    }

    #[test]
    fn multiple_root_slightly_left_of_axis() {
        // (s^2 + 2e-4 s + 1.0 + 1e-8)^3 has a triple pair at re = -1e-4.
        let q = Polynomial::from_coeffs(&[1.0 + 1e-8, 2e-4, 1.0]);
        let p = q.mul(&q).mul(&q);
        let groups = analyze_roots(&p).unwrap();
        for g in groups {
            assert_eq!(g.multiplicity, 3);
            assert!((g.center.re + 1e-4).abs() < 1e-9);
            assert!(g.uncertainty < 5e-5);
        }
    }

    #[test]
    fn wide_magnitude_range() {
        // roots at -1e-3 and -1e3 and a pair at -2 +- i
        let p = Polynomial::from_root_structure(&[-1e-3, -1e3], &[Complex64::new(-2.0, 1.0)], 1.0);
        let r = p.roots().unwrap();
        assert_eq!(r.len(), 4);
        assert!(r.iter().any(|z| (z - Complex64::new(-1e-3, 0.0)).norm() < 1e-9));
        assert!(r.iter().any(|z| (z - Complex64::new(-1e3, 0.0)).norm() < 1e-6));
        assert!(r.iter().any(|z| (z - Complex64::new(-2.0, 1.0)).norm() < 1e-9));
    }
}
