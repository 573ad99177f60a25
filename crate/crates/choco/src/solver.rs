//! Real-solution search for coefficient systems.
//!
//! Square systems of this size (at most 11 unknowns) respond well to
//! multistart damped Newton: seeds stay real under real arithmetic, the
//! wanted solutions have solid basins, and determinism falls out of seeding
//! every start from the run seed and its index. Feasibility follows the
//! structural sign constraints: `delta > 0` and the squared-factor offsets
//! nonnegative.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{enumerate_configurations, AlgebraicConfiguration, SymbolicTemplate};
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::system::{build_system, CoefficientSystem};

/// Knobs for the multistart Newton search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Random Newton starts per system.
    pub start_count: usize,
    /// Newton iteration cap per start.
    pub newton_max_iter: usize,
    /// Max-norm residual below which a start counts as converged.
    pub converge_tol: f64,
    /// Max-norm parameter distance below which two candidates are the same.
    pub dedupe_tol: f64,
    /// Slack for the nonnegativity constraints.
    pub feas_tol: f64,
    pub rng_seed: u64,
    /// Upper edge of the log-uniform box for nonnegative unknowns.
    pub coef_max: f64,
    /// Half-width of the uniform box for the free scalar `k`.
    pub k_max: f64,
    /// Optional wall-clock budget in seconds for one system.
    pub time_budget: Option<f64>,
    /// Points tried before any random start (e.g. published parameters).
    pub warm_starts: Vec<Vec<f64>>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            start_count: 2_000,
            newton_max_iter: 80,
            converge_tol: 1e-10,
            dedupe_tol: 1e-6,
            feas_tol: 1e-9,
            rng_seed: 0,
            coef_max: 10.0,
            k_max: 300.0,
            time_budget: None,
            warm_starts: Vec::new(),
        }
    }
}

impl SolverSettings {
    /// Default start counts: systems at `deg(x) >= 14` get the large box.
    pub fn for_degree(deg_x: usize) -> Self {
        let mut s = SolverSettings::default();
        if deg_x >= 14 {
            s.start_count = 20_000;
        }
        s
    }
}

/// One deduplicated real solution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionCandidate {
    /// Values ordered like the system's unknowns (`delta` first, `k` last).
    pub params: Vec<f64>,
    /// Max-norm residual at the reported point.
    pub residual_norm: f64,
    /// `delta > 0`, sign constraints met, residual converged.
    pub feasible: bool,
}

impl SolutionCandidate {
    pub fn delta(&self) -> f64 {
        self.params[0]
    }

    pub fn named(&self, names: &[String]) -> Vec<(String, f64)> {
        names.iter().cloned().zip(self.params.iter().copied()).collect()
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn start_seed(seed: u64, idx: u64) -> u64 {
    splitmix64(seed ^ splitmix64(idx.wrapping_add(1)))
}

/// Deterministic per-configuration seed so searches can run in parallel.
pub fn seed_for_configuration(seed: u64, cfg: &AlgebraicConfiguration) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(cfg.to_string().as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

fn sample_start(sys: &CoefficientSystem, settings: &SolverSettings, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = sys.unknown_count();
    let mask = sys.nonneg_mask();
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        if i == 0 {
            v.push(rng.gen_range(1e-3..1.0 - 1e-3));
        } else if mask[i] {
            let lo = 1e-3f64.ln();
            let hi = settings.coef_max.ln();
            v.push(rng.gen_range(lo..hi).exp());
        } else {
            v.push(rng.gen_range(-settings.k_max..settings.k_max));
        }
    }
    v
}

/// Damped Newton from one start. Returns the converged point.
fn newton_from(
    sys: &CoefficientSystem,
    settings: &SolverSettings,
    start: &[f64],
) -> Option<Vec<f64>> {
    let mut v = DVector::from_column_slice(start);
    let mut f = DVector::from_vec(sys.residual(v.as_slice()));
    let mut phi = 0.5 * f.norm_squared();
    for _ in 0..settings.newton_max_iter {
        let fmax = f.amax();
        if !fmax.is_finite() {
            return None;
        }
        if fmax <= settings.converge_tol {
            return Some(v.as_slice().to_vec());
        }
        let jac = sys.jacobian(v.as_slice());
        let lu = jac.lu();
        let dir = lu.solve(&(-&f))?;
        if !dir.iter().all(|d| d.is_finite()) {
            return None;
        }
        let mut lambda = 1.0f64;
        let mut accepted = false;
        for _ in 0..30 {
            let v2 = &v + &dir * lambda;
            let f2 = DVector::from_vec(sys.residual(v2.as_slice()));
            let phi2 = 0.5 * f2.norm_squared();
            if phi2.is_finite() && phi2 <= phi * (1.0 - 2e-4 * lambda) {
                v = v2;
                f = f2;
                phi = phi2;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
        if v.amax() > 1e9 {
            return None;
        }
    }
    if f.amax() <= settings.converge_tol {
        Some(v.as_slice().to_vec())
    } else {
        None
    }
}

/// Sorts values inside groups of unknowns the system cannot distinguish
/// (equal exponents within a factor family), so symmetric solutions
/// deduplicate.
fn canonicalize_params(cfg: &AlgebraicConfiguration, params: &mut [f64]) {
    let mut offset = 1;
    for exps in [cfg.j(), cfg.kexp(), cfg.l()] {
        let mut i = 0;
        while i < exps.len() {
            let mut jend = i + 1;
            while jend < exps.len() && exps[jend] == exps[i] {
                jend += 1;
            }
            if jend - i > 1 {
                let slice = &mut params[offset + i..offset + jend];
                slice.sort_by(|a, b| b.partial_cmp(a).unwrap());
            }
            i = jend;
        }
        offset += exps.len();
    }
}

/// Multistart Newton over one square system. Deterministic for a fixed
/// seed; results sorted by descending `delta`.
pub fn solve_system(
    sys: &CoefficientSystem,
    settings: &SolverSettings,
) -> Result<Vec<SolutionCandidate>> {
    if !sys.is_square() {
        return Err(Error::InvalidInput(format!(
            "system is not square: {} equations, {} unknowns",
            sys.equation_count(),
            sys.unknown_count()
        )));
    }
    for w in &settings.warm_starts {
        if w.len() != sys.unknown_count() {
            return Err(Error::InvalidInput(format!(
                "warm start has {} values, system has {} unknowns",
                w.len(),
                sys.unknown_count()
            )));
        }
    }

    let t0 = Instant::now();
    let out_of_time = AtomicBool::new(false);
    let total = settings.warm_starts.len() + settings.start_count;
    let mut hits: Vec<(usize, Vec<f64>)> = (0..total)
        .into_par_iter()
        .filter_map(|idx| {
            if out_of_time.load(Ordering::Relaxed) {
                return None;
            }
            if let Some(budget) = settings.time_budget {
                if t0.elapsed().as_secs_f64() > budget {
                    out_of_time.store(true, Ordering::Relaxed);
                    return None;
                }
            }
            let start = if idx < settings.warm_starts.len() {
                settings.warm_starts[idx].clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(start_seed(
                    settings.rng_seed,
                    (idx - settings.warm_starts.len()) as u64,
                ));
                sample_start(sys, settings, &mut rng)
            };
            newton_from(sys, settings, &start).map(|v| (idx, v))
        })
        .collect();
    hits.sort_by_key(|(idx, _)| *idx);

    let mask = sys.nonneg_mask();
    let mut candidates: Vec<SolutionCandidate> = Vec::new();
    for (_, mut params) in hits {
        if let Some(cfg) = sys.source() {
            canonicalize_params(cfg, &mut params);
        }
        // Clamp barely-negative constrained parameters onto the boundary
        // when the clamped point still satisfies the system.
        let mut clamped = params.clone();
        let mut any = false;
        for (i, p) in clamped.iter_mut().enumerate() {
            if mask.get(i).copied().unwrap_or(false) && *p < 0.0 && *p > -settings.feas_tol {
                *p = 0.0;
                any = true;
            }
        }
        if any && sys.residual_norm(&clamped) <= settings.converge_tol {
            params = clamped;
        }
        let residual_norm = sys.residual_norm(&params);
        if residual_norm > settings.converge_tol {
            continue;
        }

        let mut merged = false;
        for cand in candidates.iter_mut() {
            let dist = cand
                .params
                .iter()
                .zip(&params)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if dist <= settings.dedupe_tol {
                if residual_norm < cand.residual_norm {
                    cand.params = params.clone();
                    cand.residual_norm = residual_norm;
                }
                merged = true;
                break;
            }
        }
        if !merged {
            candidates.push(SolutionCandidate { params, residual_norm, feasible: false });
        }
    }

    for cand in candidates.iter_mut() {
        let delta_ok = cand.delta() > 0.0;
        let signs_ok = cand
            .params
            .iter()
            .enumerate()
            .all(|(i, &p)| !mask.get(i).copied().unwrap_or(false) || p >= -settings.feas_tol);
        cand.feasible = delta_ok && signs_ok && cand.residual_norm <= settings.converge_tol;
    }

    // Returned candidates must reproduce the defining identity through the
    // plain polynomial route as well.
    if let Some(cfg) = sys.source() {
        candidates.retain(|cand| {
            match identity_residual(cfg, &cand.params) {
                Ok((res, znorm)) => res <= 10.0 * settings.converge_tol * znorm.max(1.0),
                Err(_) => false,
            }
        });
    }

    if candidates.is_empty() {
        return Err(Error::NoSolutions);
    }
    candidates.sort_by(|a, b| {
        b.delta()
            .partial_cmp(&a.delta())
            .unwrap()
            .then(a.residual_norm.partial_cmp(&b.residual_norm).unwrap())
            .then_with(|| a.params.partial_cmp(&b.params).unwrap())
    });
    Ok(candidates)
}

/// Max-norm of `(s^2 - 2 delta s + 1) x + (s^2 - 1) y - z` at an
/// instantiated point, with the max-norm of `z` for scale.
pub fn identity_residual(cfg: &AlgebraicConfiguration, params: &[f64]) -> Result<(f64, f64)> {
    let (x, y, z) = cfg.instantiate(params)?;
    let delta = params[0];
    let lhs = Polynomial::from_coeffs(&[1.0, -2.0 * delta, 1.0])
        .mul(&x)
        .add(&Polynomial::from_coeffs(&[-1.0, 0.0, 1.0]).mul(&y))
        .sub(&z);
    Ok((lhs.max_norm(), z.max_norm()))
}

/// Picks the feasible candidate with maximal `delta`; ties break on smaller
/// residual, then lexicographic parameters.
pub fn best_delta(cands: &[SolutionCandidate]) -> Result<SolutionCandidate> {
    cands
        .iter()
        .filter(|c| c.feasible)
        .max_by(|a, b| {
            a.delta()
                .partial_cmp(&b.delta())
                .unwrap()
                .then(b.residual_norm.partial_cmp(&a.residual_norm).unwrap())
                .then_with(|| b.params.partial_cmp(&a.params).unwrap())
        })
        .cloned()
        .ok_or(Error::NoFeasibleSolution)
}

/// Outcome of solving one configuration during a degree search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum SearchOutcome {
    /// Best feasible candidate.
    Winner(SolutionCandidate),
    /// Solutions exist but none feasible.
    NoFeasible,
    /// The solve failed outright (no convergence, structural error, ...).
    Failed(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchEntry {
    pub config: AlgebraicConfiguration,
    pub outcome: SearchOutcome,
}

impl SearchEntry {
    pub fn delta(&self) -> Option<f64> {
        match &self.outcome {
            SearchOutcome::Winner(c) => Some(c.delta()),
            _ => None,
        }
    }
}

/// Solves every square configuration at a degree and ranks the winners by
/// descending `delta`. Per-configuration failures are recorded, not raised.
pub fn search_degree(deg_x: usize, settings: &SolverSettings) -> Result<Vec<SearchEntry>> {
    search_degree_cached(deg_x, settings, None)
}

/// [`search_degree`] with an optional result cache directory.
pub fn search_degree_cached(
    deg_x: usize,
    settings: &SolverSettings,
    cache_dir: Option<&Path>,
) -> Result<Vec<SearchEntry>> {
    let configs = enumerate_configurations(deg_x)?;
    let mut entries: Vec<SearchEntry> = configs
        .par_iter()
        .map(|cfg| {
            let mut cfg_settings = settings.clone();
            cfg_settings.rng_seed = seed_for_configuration(settings.rng_seed, cfg);
            let outcome = match solve_configuration_cached(cfg, &cfg_settings, cache_dir) {
                Ok((cands, _)) => match best_delta(&cands) {
                    Ok(best) => SearchOutcome::Winner(best),
                    Err(Error::NoFeasibleSolution) => SearchOutcome::NoFeasible,
                    Err(e) => SearchOutcome::Failed(e.to_string()),
                },
                Err(Error::NoSolutions) => SearchOutcome::Failed("no solutions".into()),
                Err(e) => SearchOutcome::Failed(e.to_string()),
            };
            SearchEntry { config: cfg.clone(), outcome }
        })
        .collect();

    entries.sort_by(|a, b| match (a.delta(), b.delta()) {
        (Some(da), Some(db)) => db.partial_cmp(&da).unwrap().then(a.config.cmp(&b.config)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.config.cmp(&b.config),
    });
    Ok(entries)
}

/// Builds the system for a configuration and solves it, consulting the
/// cache when a directory is given. Returns the candidates and whether they
/// came from cache.
pub fn solve_configuration_cached(
    cfg: &AlgebraicConfiguration,
    settings: &SolverSettings,
    cache_dir: Option<&Path>,
) -> Result<(Vec<SolutionCandidate>, bool)> {
    if let Some(dir) = cache_dir {
        if let Some(cands) = cache::load(dir, cfg, settings) {
            return Ok((cands, true));
        }
    }
    let sys = build_system(&SymbolicTemplate::from_configuration(cfg))?;
    let cands = solve_system(&sys, settings)?;
    if let Some(dir) = cache_dir {
        let _ = cache::store(dir, cfg, settings, sys.unknowns(), &cands);
    }
    Ok((cands, false))
}

/// One JSON file per (configuration, settings) pair.
pub mod cache {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct CacheFile {
        config: String,
        unknowns: Vec<String>,
        settings: serde_json::Value,
        candidates: Vec<SolutionCandidate>,
    }

    pub fn digest(cfg: &AlgebraicConfiguration, settings: &SolverSettings) -> String {
        let mut h = Sha256::new();
        h.update(cfg.to_string().as_bytes());
        h.update(serde_json::to_string(settings).unwrap().as_bytes());
        let d = h.finalize();
        hex_prefix(&d, 16)
    }

    fn hex_prefix(bytes: &[u8], chars: usize) -> String {
        let mut s = String::new();
        for b in bytes {
            s.push_str(&format!("{b:02x}"));
            if s.len() >= chars {
                break;
            }
        }
        s.truncate(chars);
        s
    }

    pub fn path_for(dir: &Path, cfg: &AlgebraicConfiguration, settings: &SolverSettings) -> PathBuf {
        let slug: String = cfg
            .to_string()
            .chars()
            .map(|c| if c.is_ascii_digit() { c } else { '_' })
            .collect();
        dir.join(format!("cfg{}-{}.json", slug, digest(cfg, settings)))
    }

    pub fn load(
        dir: &Path,
        cfg: &AlgebraicConfiguration,
        settings: &SolverSettings,
    ) -> Option<Vec<SolutionCandidate>> {
        let path = path_for(dir, cfg, settings);
        let text = std::fs::read_to_string(path).ok()?;
        let file: CacheFile = serde_json::from_str(&text).ok()?;
        if file.config != cfg.to_string() {
            return None;
        }
        Some(file.candidates)
    }

    pub fn store(
        dir: &Path,
        cfg: &AlgebraicConfiguration,
        settings: &SolverSettings,
        unknowns: &[String],
        candidates: &[SolutionCandidate],
    ) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let file = CacheFile {
            config: cfg.to_string(),
            unknowns: unknowns.to_vec(),
            settings: serde_json::to_value(settings).unwrap(),
            candidates: candidates.to_vec(),
        };
        let path = path_for(dir, cfg, settings);
        std::fs::write(path, serde_json::to_string_pretty(&file).unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_shorthand;
    use crate::system::system_for_configuration;

    fn quick_settings() -> SolverSettings {
        SolverSettings { start_count: 400, ..Default::default() }
    }

    #[test]
    fn quartic_golden_solution() {
        let cfg = parse_shorthand("[1],[],[]").unwrap();
        let sys = system_for_configuration(&cfg).unwrap();
        let cands = solve_system(&sys, &quick_settings()).unwrap();
        let best = best_delta(&cands).unwrap();
        let expect = (10.0 + 2.0 * 5f64.sqrt()).sqrt() / 4.0;
        let golden = (5f64.sqrt() + 1.0) / 2.0;
        assert!((best.delta() - expect).abs() < 1e-9, "delta {}", best.delta());
        assert!((best.params[1] - golden).abs() < 1e-9);
        assert!((best.params[2] - golden).abs() < 1e-9);
    }

    #[test]
    fn cubic_fixture_solution() {
        let sys = build_system(&SymbolicTemplate::generic_cubic()).unwrap();
        let cands = solve_system(&sys, &quick_settings()).unwrap();
        let best = best_delta(&cands).unwrap();
        let expect = (2.0 + 2f64.sqrt()).sqrt() / 2.0;
        assert!((best.delta() - expect).abs() < 1e-9);
        let d = best.delta();
        assert!((best.params[1] - 2.0 * d).abs() < 1e-8); // A = 2 delta
        assert!((best.params[2] - (4.0 * d * d - 1.0)).abs() < 1e-8); // B
        assert!((best.params[3] - (4.0 * d * d * d - 2.0 * d)).abs() < 1e-8); // C
        assert!((best.params[4] - best.params[3]).abs() < 1e-8); // k = C
    }

    #[test]
    fn best_delta_filters_infeasible() {
        let cands = vec![
            SolutionCandidate { params: vec![0.5, 1.0, 1.0], residual_norm: 1e-12, feasible: true },
            SolutionCandidate {
                params: vec![0.9, -1.0, 1.0],
                residual_norm: 1e-12,
                feasible: false,
            },
        ];
        assert_eq!(best_delta(&cands).unwrap().delta(), 0.5);
        assert!(matches!(best_delta(&[]), Err(Error::NoFeasibleSolution)));
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = parse_shorthand("[1],[],[]").unwrap();
        let sys = system_for_configuration(&cfg).unwrap();
        let a = solve_system(&sys, &quick_settings()).unwrap();
        let b = solve_system(&sys, &quick_settings()).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.params, y.params);
        }
    }

    #[test]
    fn warm_start_converges_immediately() {
        let cfg = parse_shorthand("[1],[],[]").unwrap();
        let sys = system_for_configuration(&cfg).unwrap();
        let expect = (10.0 + 2.0 * 5f64.sqrt()).sqrt() / 4.0;
        let golden = (5f64.sqrt() + 1.0) / 2.0;
        let settings = SolverSettings {
            start_count: 0,
            warm_starts: vec![vec![0.95, 1.6, 1.6]],
            ..Default::default()
        };
        let cands = solve_system(&sys, &settings).unwrap();
        let best = best_delta(&cands).unwrap();
        assert!((best.delta() - expect).abs() < 1e-10);
        assert!((best.params[1] - golden).abs() < 1e-10);
    }

    #[test]
    fn cache_round_trip() {
        let dir = std::env::temp_dir().join(format!("choco-cache-test-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let cfg = parse_shorthand("[1],[],[]").unwrap();
        let settings = quick_settings();
        let (first, hit1) = solve_configuration_cached(&cfg, &settings, Some(&dir)).unwrap();
        assert!(!hit1);
        let (second, hit2) = solve_configuration_cached(&cfg, &settings, Some(&dir)).unwrap();
        assert!(hit2);
        assert_eq!(first.len(), second.len());
        assert_eq!(first[0].params, second[0].params);
        let _ = std::fs::remove_dir_all(&dir);
    }
}
