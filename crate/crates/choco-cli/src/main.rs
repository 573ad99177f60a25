//! `choco`: enumerate, solve, search, perturb and verify workflows for the
//! Belgian chocolate problem.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 no feasible
//! solution, 4 certification failure, 1 internal numeric failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use choco::config::{enumerate_configurations, parse_shorthand};
use choco::perturb::{certify_admissible, perturb, Certificate};
use choco::solver::{
    best_delta, seed_for_configuration, solve_configuration_cached, search_degree_cached,
    SearchOutcome, SolutionCandidate, SolverSettings,
};
use choco::{Error, Polynomial};

#[derive(Parser)]
#[command(
    name = "choco",
    version,
    about = "Record search and stability certification for the Belgian chocolate problem"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the result (with its run manifest) to a JSON file.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Seed for all randomized work.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Decimal places used when printing delta values.
    #[arg(long, global = true, default_value_t = 7)]
    precision: usize,
    /// Results cache directory (or CHOCO_CACHE_DIR, or ./.choco-cache).
    #[arg(long, global = true, value_name = "PATH")]
    cache_dir: Option<PathBuf>,
    /// Ignore and do not update the results cache.
    #[arg(long, global = true)]
    no_cache: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// List all square configurations at a given degree of x.
    Enumerate {
        #[arg(long)]
        degree: usize,
    },
    /// Solve the coefficient system of one configuration.
    Solve {
        /// Configuration shorthand, e.g. "[3,1],[2],[1]".
        #[arg(long)]
        config: String,
        /// Random Newton starts (default 2000, or 20000 from degree 14).
        #[arg(long)]
        starts: Option<usize>,
        /// JSON array of parameter values tried before any random start.
        #[arg(long, value_name = "JSON")]
        warm_start: Option<String>,
        /// Wall-clock budget in seconds.
        #[arg(long, value_name = "SECONDS")]
        time_budget: Option<f64>,
        /// Report every deduplicated candidate, not just the best.
        #[arg(long)]
        all: bool,
    },
    /// Solve every configuration at a degree and rank by delta.
    Search {
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        starts: Option<usize>,
        /// Permit searches at degree 16 and above.
        #[arg(long)]
        allow_large_degree: bool,
        /// Wall-clock budget in seconds per configuration.
        #[arg(long, value_name = "SECONDS")]
        time_budget: Option<f64>,
    },
    /// Perturb a quasi-stable triple into a certified stable one.
    Perturb {
        /// Configuration to solve and perturb at its best delta.
        #[arg(long, conflicts_with = "input")]
        config: Option<String>,
        /// JSON file {"delta":..,"x":[..],"y":[..],"z":[..]?} to perturb.
        #[arg(long = "in", value_name = "FILE")]
        input: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        epsilon: f64,
        #[arg(long)]
        starts: Option<usize>,
    },
    /// Check a {"delta":..,"x":[..],"y":[..]} triple for admissibility.
    Verify {
        /// JSON file with the triple to check.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
    },
}

/// Error carrying the process exit code.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NoFeasibleSolution | Error::NoSolutions => 3,
            Error::CertificationFailed(_) | Error::NotAFactor { .. } | Error::OutOfRange(_) => 4,
            Error::Parse(_) | Error::InvalidConfiguration(_) | Error::InvalidInput(_) => 2,
            _ => 1,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError { code: 1, message: e.to_string() }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError { code: 2, message: format!("bad JSON input: {e}") }
    }
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    settings: serde_json::Value,
    rng_seed: u64,
    version: &'static str,
    timestamp_unix: u64,
    input_digests: BTreeMap<String, String>,
}

impl RunManifest {
    fn new(command: String, settings: serde_json::Value, rng_seed: u64) -> Self {
        RunManifest {
            command,
            settings,
            rng_seed,
            version: env!("CARGO_PKG_VERSION"),
            timestamp_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            input_digests: BTreeMap::new(),
        }
    }

    fn digest_file(&mut self, path: &Path) -> std::io::Result<()> {
        let bytes = std::fs::read(path)?;
        let mut h = Sha256::new();
        h.update(&bytes);
        let hex: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        self.input_digests.insert(path.display().to_string(), format!("sha256:{hex}"));
        Ok(())
    }
}

fn write_out(path: &Path, manifest: &RunManifest, result: &serde_json::Value) -> std::io::Result<()> {
    let envelope = serde_json::json!({ "manifest": manifest, "result": result });
    std::fs::write(path, serde_json::to_string_pretty(&envelope).unwrap())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.common.jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn cache_dir(common: &Common) -> Option<PathBuf> {
    if common.no_cache {
        return None;
    }
    if let Some(d) = &common.cache_dir {
        return Some(d.clone());
    }
    if let Ok(d) = std::env::var("CHOCO_CACHE_DIR") {
        if !d.is_empty() {
            return Some(PathBuf::from(d));
        }
    }
    Some(PathBuf::from(".choco-cache"))
}

fn fmt_delta(v: f64, precision: usize) -> String {
    format!("{v:.precision$}")
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = cli.common.clone();
    match cli.command {
        Command::Enumerate { degree } => cmd_enumerate(degree, &common),
        Command::Solve { config, starts, warm_start, time_budget, all } => {
            cmd_solve(&config, starts, warm_start.as_deref(), time_budget, all, &common)
        }
        Command::Search { degree, starts, allow_large_degree, time_budget } => {
            cmd_search(degree, starts, allow_large_degree, time_budget, &common)
        }
        Command::Perturb { config, input, epsilon, starts } => {
            cmd_perturb(config.as_deref(), input.as_deref(), epsilon, starts, &common)
        }
        Command::Verify { input } => cmd_verify(&input, &common),
    }
}

fn cmd_enumerate(degree: usize, common: &Common) -> Result<(), CliError> {
    let configs = enumerate_configurations(degree).map_err(|e| CliError::usage(e.to_string()))?;
    match common.format {
        Format::Table => {
            for c in &configs {
                println!("{c}");
            }
        }
        Format::Json => {
            println!("{}", serde_json::to_string_pretty(&configs).unwrap());
        }
        Format::Csv => {
            println!("configuration,deg_x,deg_y,deg_z,s_power");
            for c in &configs {
                println!("\"{c}\",{},{},{},{}", c.deg_x(), c.deg_y(), c.deg_z(), c.s_power());
            }
        }
    }
    if let Some(out) = &common.out {
        let manifest = RunManifest::new(
            format!("enumerate --degree {degree}"),
            serde_json::json!({ "degree": degree }),
            common.seed,
        );
        write_out(out, &manifest, &serde_json::to_value(&configs).unwrap())?;
    }
    Ok(())
}

fn settings_for(
    cfg_degree: usize,
    starts: Option<usize>,
    time_budget: Option<f64>,
    common: &Common,
) -> SolverSettings {
    let mut settings = SolverSettings::for_degree(cfg_degree);
    settings.rng_seed = common.seed;
    if let Some(s) = starts {
        settings.start_count = s;
    }
    settings.time_budget = time_budget;
    settings
}

#[derive(Serialize)]
struct SolveReport {
    config: String,
    delta: f64,
    params: BTreeMap<String, f64>,
    residual_norm: f64,
    feasible: bool,
    candidate_count: usize,
    feasible_count: usize,
    cache_hit: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    candidates: Option<Vec<SolutionCandidate>>,
}

fn cmd_solve(
    config: &str,
    starts: Option<usize>,
    warm_start: Option<&str>,
    time_budget: Option<f64>,
    all: bool,
    common: &Common,
) -> Result<(), CliError> {
    let cfg = parse_shorthand(config).map_err(|e| CliError::usage(e.to_string()))?;
    if !cfg.is_square() {
        return Err(CliError::usage(format!(
            "configuration {cfg} is not square: {} unknowns vs {} equations",
            cfg.unknown_count(),
            cfg.equation_count()
        )));
    }
    let mut settings = settings_for(cfg.deg_x(), starts, time_budget, common);
    settings.rng_seed = seed_for_configuration(common.seed, &cfg);
    if let Some(ws) = warm_start {
        let point: Vec<f64> = serde_json::from_str(ws)?;
        if point.len() != cfg.unknown_count() {
            return Err(CliError::usage(format!(
                "warm start needs {} values for {cfg}",
                cfg.unknown_count()
            )));
        }
        settings.warm_starts.push(point);
    }

    let dir = cache_dir(common);
    let (cands, cache_hit) = solve_configuration_cached(&cfg, &settings, dir.as_deref())?;
    if cache_hit {
        eprintln!("cache: hit");
    }
    let best = best_delta(&cands)?;
    let names = cfg.unknown_names();
    let feasible_count = cands.iter().filter(|c| c.feasible).count();
    let report = SolveReport {
        config: cfg.to_string(),
        delta: best.delta(),
        params: best.named(&names).into_iter().collect(),
        residual_norm: best.residual_norm,
        feasible: best.feasible,
        candidate_count: cands.len(),
        feasible_count,
        cache_hit,
        candidates: if all { Some(cands.clone()) } else { None },
    };

    let p = common.precision;
    match common.format {
        Format::Table => {
            println!("configuration   {}", report.config);
            println!("delta           {}", fmt_delta(report.delta, p));
            for (name, value) in best.named(&names).iter().skip(1) {
                println!("{name:<15} {}", fmt_delta(*value, p));
            }
            println!("residual        {:.3e}", report.residual_norm);
            println!("candidates      {} ({} feasible)", report.candidate_count, feasible_count);
            if all {
                println!();
                println!("{:<4} {:<12} {:<10} params", "#", "delta", "feasible");
                for (i, c) in cands.iter().enumerate() {
                    let vals: Vec<String> =
                        c.params.iter().map(|v| fmt_delta(*v, p)).collect();
                    println!(
                        "{:<4} {:<12} {:<10} [{}]",
                        i,
                        fmt_delta(c.delta(), p),
                        c.feasible,
                        vals.join(", ")
                    );
                }
            }
        }
        Format::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        Format::Csv => {
            let mut header = vec!["config".to_string(), "delta".into()];
            header.extend(names.iter().skip(1).cloned());
            header.push("residual_norm".into());
            header.push("feasible".into());
            println!("{}", header.join(","));
            let mut row = vec![format!("\"{}\"", report.config), fmt_delta(report.delta, p)];
            row.extend(best.params.iter().skip(1).map(|v| fmt_delta(*v, p)));
            row.push(format!("{:.3e}", report.residual_norm));
            row.push(report.feasible.to_string());
            println!("{}", row.join(","));
        }
    }
    if let Some(out) = &common.out {
        let manifest = RunManifest::new(
            format!("solve --config {config}"),
            serde_json::to_value(&settings).unwrap(),
            common.seed,
        );
        write_out(out, &manifest, &serde_json::to_value(&report).unwrap())?;
    }
    Ok(())
}

fn cmd_search(
    degree: usize,
    starts: Option<usize>,
    allow_large_degree: bool,
    time_budget: Option<f64>,
    common: &Common,
) -> Result<(), CliError> {
    if degree >= 16 && !allow_large_degree {
        return Err(CliError::usage(format!(
            "searches at degree {degree} >= 16 are expensive; pass --allow-large-degree \
             (and consider --time-budget)"
        )));
    }
    if degree < 4 || degree % 2 != 0 {
        return Err(CliError::usage(format!("degree must be an even integer >= 4, got {degree}")));
    }
    let settings = settings_for(degree, starts, time_budget, common);
    let dir = cache_dir(common);
    let entries = search_degree_cached(degree, &settings, dir.as_deref())?;

    let p = common.precision;
    match common.format {
        Format::Table => {
            println!("{:<5} {:<28} {:<12} {}", "rank", "configuration", "delta", "residual");
            for (i, e) in entries.iter().enumerate() {
                match &e.outcome {
                    SearchOutcome::Winner(c) => println!(
                        "{:<5} {:<28} {:<12} {:.3e}",
                        i + 1,
                        e.config.to_string(),
                        fmt_delta(c.delta(), p),
                        c.residual_norm
                    ),
                    SearchOutcome::NoFeasible => println!(
                        "{:<5} {:<28} {:<12} no feasible solution",
                        i + 1,
                        e.config.to_string(),
                        "-"
                    ),
                    SearchOutcome::Failed(msg) => println!(
                        "{:<5} {:<28} {:<12} {}",
                        i + 1,
                        e.config.to_string(),
                        "-",
                        msg
                    ),
                }
            }
        }
        Format::Json => println!("{}", serde_json::to_string_pretty(&entries).unwrap()),
        Format::Csv => {
            println!("rank,configuration,delta,residual,status");
            for (i, e) in entries.iter().enumerate() {
                match &e.outcome {
                    SearchOutcome::Winner(c) => println!(
                        "{},\"{}\",{},{:.3e},ok",
                        i + 1,
                        e.config,
                        fmt_delta(c.delta(), p),
                        c.residual_norm
                    ),
                    SearchOutcome::NoFeasible => {
                        println!("{},\"{}\",,,no-feasible", i + 1, e.config)
                    }
                    SearchOutcome::Failed(m) => {
                        println!("{},\"{}\",,,\"{m}\"", i + 1, e.config)
                    }
                }
            }
        }
    }
    if let Some(out) = &common.out {
        let manifest = RunManifest::new(
            format!("search --degree {degree}"),
            serde_json::to_value(&settings).unwrap(),
            common.seed,
        );
        write_out(out, &manifest, &serde_json::to_value(&entries).unwrap())?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct TripleInput {
    delta: f64,
    x: Polynomial,
    y: Polynomial,
    #[serde(default)]
    z: Option<Polynomial>,
}

fn print_certificate(cert: &Certificate, common: &Common) {
    let p = common.precision;
    match common.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(cert).unwrap()),
        _ => {
            println!("delta_hat        {}", fmt_delta(cert.delta_hat, p));
            println!("margin x_hat     {:.6e}", cert.margins[0]);
            println!("margin y_hat     {:.6e}", cert.margins[1]);
            println!("margin z_hat     {:.6e}", cert.margins[2]);
            println!("identity residual {:.3e}", cert.identity_residual);
        }
    }
}

fn cmd_perturb(
    config: Option<&str>,
    input: Option<&Path>,
    epsilon: f64,
    starts: Option<usize>,
    common: &Common,
) -> Result<(), CliError> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(CliError::usage(format!("--epsilon must be positive, got {epsilon}")));
    }
    let mut manifest_inputs: Vec<PathBuf> = Vec::new();
    let (delta, x, y, z, source_config, settings_json) = match (config, input) {
        (Some(shorthand), None) => {
            let cfg = parse_shorthand(shorthand).map_err(|e| CliError::usage(e.to_string()))?;
            if !cfg.is_square() {
                return Err(CliError::usage(format!("configuration {cfg} is not square")));
            }
            let mut settings = settings_for(cfg.deg_x(), starts, None, common);
            settings.rng_seed = seed_for_configuration(common.seed, &cfg);
            let dir = cache_dir(common);
            let (cands, _) = solve_configuration_cached(&cfg, &settings, dir.as_deref())?;
            let best = best_delta(&cands)?;
            let (x, y, z) = cfg.instantiate(&best.params)?;
            (
                best.delta(),
                x,
                y,
                z,
                Some(cfg),
                serde_json::to_value(&settings).unwrap(),
            )
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            let triple: TripleInput = serde_json::from_str(&text)?;
            let z = match triple.z {
                Some(z) => z,
                None => Polynomial::from_coeffs(&[1.0, -2.0 * triple.delta, 1.0])
                    .mul(&triple.x)
                    .add(&Polynomial::from_coeffs(&[-1.0, 0.0, 1.0]).mul(&triple.y)),
            };
            manifest_inputs.push(path.to_path_buf());
            (
                triple.delta,
                triple.x,
                triple.y,
                z,
                None,
                serde_json::json!({ "epsilon": epsilon }),
            )
        }
        _ => {
            return Err(CliError::usage(
                "perturb needs exactly one of --config or --in FILE",
            ))
        }
    };

    let mut cert = perturb(delta, &x, &y, &z, epsilon)?;
    cert.source_config = source_config;
    print_certificate(&cert, common);
    if let Some(out) = &common.out {
        let mut manifest = RunManifest::new(
            format!("perturb --epsilon {epsilon}"),
            settings_json,
            common.seed,
        );
        for pth in &manifest_inputs {
            manifest.digest_file(pth)?;
        }
        write_out(out, &manifest, &serde_json::to_value(&cert).unwrap())?;
    }
    Ok(())
}

fn cmd_verify(input: &Path, common: &Common) -> Result<(), CliError> {
    let text = std::fs::read_to_string(input)?;
    let triple: TripleInput = serde_json::from_str(&text)?;
    match certify_admissible(triple.delta, &triple.x, &triple.y) {
        Ok(cert) => {
            match common.format {
                Format::Json => {
                    println!("{}", serde_json::to_string_pretty(&cert).unwrap())
                }
                _ => {
                    println!("certified: delta = {}", fmt_delta(cert.delta_hat, common.precision));
                    println!("margin x  {:.6e}", cert.margins[0]);
                    println!("margin y  {:.6e}", cert.margins[1]);
                    println!("margin z  {:.6e}", cert.margins[2]);
                    println!("identity residual {:.3e}", cert.identity_residual);
                }
            }
            if let Some(out) = &common.out {
                let mut manifest = RunManifest::new(
                    "verify".to_string(),
                    serde_json::json!({}),
                    common.seed,
                );
                manifest.digest_file(input)?;
                write_out(out, &manifest, &serde_json::to_value(&cert).unwrap())?;
            }
            Ok(())
        }
        Err(e) => Err(e.into()),
    }
}
