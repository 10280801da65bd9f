//! `dumbbell-nls`: computes, continues and verifies standing waves of the
//! cubic focusing NLS equation on the dumbbell graph.
//!
//! Exit codes: 0 success, 1 property failure, 2 root-finder failure,
//! 3 solver failure, 64 usage, 65 malformed data, 66 missing input.

mod config;
mod format;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use config::Config;
use dumbbell_core::closedform::{self, Family, Placement};
use dumbbell_core::elliptic::{self, EllipticModulus};
use dumbbell_core::grid::{DumbbellGrid, GridError};
use dumbbell_core::normalform::PitchforkReport;
use dumbbell_core::solve::{
    self, BranchTable, ContinuationOptions, NewtonOptions, PetviashviliOptions, SeedCenter,
    SolveError, StateTag, StationaryState,
};
use dumbbell_core::spectrum::{self, ResonantKind, SpectrumReport};
use format::{encode_f64, SolutionFile};
use std::io::Write;
use std::path::{Path, PathBuf};

const EXIT_PROPERTY: i32 = 1;
const EXIT_ROOT: i32 = 2;
const EXIT_SOLVER: i32 = 3;
const EXIT_USAGE: i32 = 64;
const EXIT_DATA: i32 = 65;
const EXIT_NOINPUT: i32 = 66;

#[derive(Parser)]
#[command(
    name = "dumbbell-nls",
    version,
    about = "Standing waves of the cubic NLS equation on a dumbbell graph"
)]
struct Cli {
    /// Optional key=value config file with defaults for N and tolerances.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic spectrum of the graph Laplacian: dispersion-relation roots,
    /// double eigenvalues and resonance detection.
    Spectrum {
        /// Half-length of the central segment.
        #[arg(long = "L")]
        l: f64,
        /// Number of roots per dispersion family.
        #[arg(long, default_value_t = 5)]
        count: usize,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute one standing wave at a given lambda and write it to a file.
    Solve {
        #[arg(long = "L")]
        l: f64,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        /// Initial iterate: constant | segment-gauss | ring-gauss | file:PATH.
        #[arg(long, default_value = "segment-gauss")]
        init: String,
        #[arg(long, value_enum, default_value_t = Method::Hybrid)]
        method: Method,
        /// Grid points per ring (default 64, or the config value).
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Continue one or more solution families in lambda and write CSV tables.
    Branch {
        #[arg(long = "L")]
        l: f64,
        /// Family or comma-separated families: constant, asymmetric, symmetric.
        #[arg(long)]
        family: String,
        #[arg(long = "lambda-start", allow_hyphen_values = true)]
        lambda_start: f64,
        #[arg(long = "lambda-end", allow_hyphen_values = true)]
        lambda_end: f64,
        #[arg(long, default_value_t = 40)]
        steps: usize,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a stored solution against a closed-form profile.
    Compare {
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, value_enum)]
        profile: Profile,
    },
    /// Pitchfork bifurcation report: thresholds, normal-form coefficient,
    /// slope-condition terms.
    Normalform {
        #[arg(long = "L")]
        l: f64,
    },
    /// Self-checks of the Jacobi elliptic function layer.
    EllipticCheck,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Petviashvili,
    Newton,
    Hybrid,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Profile {
    SechSegment,
    SechRing,
    Dnoidal,
    Cnoidal,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

type CmdResult = Result<(), Failure>;

fn main() {
    // dying quietly on a closed pipe beats a panic from println!
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    let cfg = match &cli.config {
        Some(path) => match Config::load(path) {
            Ok(cfg) => cfg,
            Err(msg) => {
                eprintln!("error: {msg}");
                std::process::exit(EXIT_USAGE);
            }
        },
        None => Config::default(),
    };
    let result = match cli.command {
        Command::Spectrum { l, count, out } => cmd_spectrum(l, count, out.as_deref()),
        Command::Solve { l, lambda, init, method, n, out } => {
            cmd_solve(&cfg, l, lambda, &init, method, n, &out)
        }
        Command::Branch { l, family, lambda_start, lambda_end, steps, n, out } => {
            cmd_branch(&cfg, l, &family, lambda_start, lambda_end, steps, n, &out)
        }
        Command::Compare { solution, profile } => cmd_compare(&solution, profile),
        Command::Normalform { l } => cmd_normalform(l),
        Command::EllipticCheck => cmd_elliptic_check(),
    };
    if let Err(failure) = result {
        eprintln!("error: {}", failure.message);
        std::process::exit(failure.code);
    }
}

fn build_grid(l: f64, n: usize) -> Result<DumbbellGrid, Failure> {
    DumbbellGrid::new(l, n).map_err(|err| match err {
        GridError::NonCommensurateGrid(_) => {
            let hint = (1..=400)
                .flat_map(|d| [n.saturating_sub(d), n + d])
                .find(|&cand| cand >= 4 && DumbbellGrid::new(l, cand).is_ok());
            let hint = match hint {
                Some(cand) => format!("; nearest commensurate N is {cand}"),
                None => String::new(),
            };
            Failure::new(EXIT_USAGE, format!("{err}{hint}"))
        }
        other => Failure::new(EXIT_USAGE, other.to_string()),
    })
}

fn petviashvili_options(cfg: &Config) -> PetviashviliOptions {
    let mut opts = PetviashviliOptions::default();
    if let Some(tol) = cfg.petviashvili_tol {
        opts.tol = tol;
    }
    if let Some(max_iter) = cfg.max_iter {
        opts.max_iter = max_iter;
    }
    if let Some(gamma) = cfg.gamma {
        opts.gamma = gamma;
    }
    opts
}

fn newton_options(cfg: &Config) -> NewtonOptions {
    let mut opts = NewtonOptions::default();
    if let Some(tol) = cfg.newton_tol {
        opts.tol = tol;
    }
    if let Some(max_iter) = cfg.max_iter {
        opts.max_iter = max_iter;
    }
    opts
}

fn write_text(out: Option<&Path>, body: &str) -> CmdResult {
    match out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| Failure::new(EXIT_DATA, format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn cmd_spectrum(l: f64, count: usize, out: Option<&Path>) -> CmdResult {
    if l <= 0.0 || !l.is_finite() {
        return Err(Failure::new(EXIT_USAGE, format!("--L must be positive, got {l}")));
    }
    if count == 0 {
        return Err(Failure::new(EXIT_USAGE, "--count must be at least 1"));
    }
    let report = SpectrumReport::compute(l, count)
        .map_err(|e| Failure::new(EXIT_ROOT, e.to_string()))?;
    let mut body = String::new();
    body.push_str("# spectrum of -Laplacian on the dumbbell graph\n");
    body.push_str(&format!("L = {}\n", encode_f64(l)));
    match &report.resonance {
        Some(res) => {
            let kind = match res.kind {
                ResonantKind::EvenCosine => "even-cosine",
                ResonantKind::OddSine => "odd-sine",
            };
            body.push_str(&format!(
                "resonance: L = pi*{}/(2*{}), third eigenfunction {kind}\n",
                res.m, res.n
            ));
        }
        None => body.push_str("resonance: none (denominators up to 64)\n"),
    }
    body.push_str("\n# double eigenvalues n^2 (triple at a resonant n)\n");
    for d in &report.doubles {
        body.push_str(&format!("{}\n", encode_f64(*d)));
    }
    body.push_str(
        "\n# even family: omega_n, eigenvalue omega_n^2, tan-form residual, pole-free residual\n",
    );
    for &w in &report.even_roots {
        body.push_str(&format!(
            "{} {} {} {}\n",
            encode_f64(w),
            encode_f64(w * w),
            encode_f64(spectrum::even_residual(l, w)),
            encode_f64(spectrum::even_form_residual(l, w))
        ));
    }
    body.push_str(
        "\n# odd family: Omega_n, eigenvalue Omega_n^2, tan-form residual, pole-free residual\n",
    );
    for &w in &report.odd_roots {
        body.push_str(&format!(
            "{} {} {} {}\n",
            encode_f64(w),
            encode_f64(w * w),
            encode_f64(spectrum::odd_residual(l, w)),
            encode_f64(spectrum::odd_form_residual(l, w))
        ));
    }
    write_text(out, &body)
}

fn solve_with_method(
    cfg: &Config,
    method: Method,
    seed: &dumbbell_core::GraphFunction,
    lambda: f64,
) -> Result<StationaryState, SolveError> {
    match method {
        Method::Petviashvili => solve::petviashvili(seed, lambda, &petviashvili_options(cfg)),
        Method::Newton => solve::newton(seed, lambda, &newton_options(cfg)),
        Method::Hybrid => {
            solve::hybrid(seed, lambda, &petviashvili_options(cfg), &newton_options(cfg))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    cfg: &Config,
    l: f64,
    lambda: f64,
    init: &str,
    method: Method,
    n: Option<usize>,
    out: &Path,
) -> CmdResult {
    if lambda >= 0.0 {
        return Err(Failure::new(EXIT_USAGE, format!("--lambda must be negative, got {lambda}")));
    }
    let (seed, lambda) = match init.strip_prefix("file:") {
        Some(path) => {
            let path = Path::new(path);
            if !path.exists() {
                return Err(Failure::new(
                    EXIT_NOINPUT,
                    format!("no such input: {}", path.display()),
                ));
            }
            let file = SolutionFile::read(path).map_err(|e| Failure::new(EXIT_DATA, e))?;
            let (phi, _) = file.to_profile().map_err(|e| Failure::new(EXIT_DATA, e))?;
            if (phi.grid().l() - l).abs() > 1e-12 * l.max(1.0) {
                return Err(Failure::new(
                    EXIT_USAGE,
                    format!("--L {} does not match the seed file (L = {})", l, phi.grid().l()),
                ));
            }
            if let Some(n) = n {
                if n != phi.grid().n() {
                    return Err(Failure::new(
                        EXIT_USAGE,
                        format!("--N {} does not match the seed file (N = {})", n, phi.grid().n()),
                    ));
                }
            }
            (phi, lambda)
        }
        None => {
            let grid = build_grid(l, n.or(cfg.n).unwrap_or(64))?;
            let seed = match init {
                "constant" => {
                    let p = (lambda.abs() / 2.0).sqrt();
                    dumbbell_core::GraphFunction::constant(&grid, p)
                }
                "segment-gauss" => solve::gaussian_seed(&grid, lambda, SeedCenter::Segment)
                    .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?,
                "ring-gauss" => solve::gaussian_seed(&grid, lambda, SeedCenter::RingPlus)
                    .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?,
                other => {
                    return Err(Failure::new(
                        EXIT_USAGE,
                        format!(
                            "unknown --init `{other}` (expected constant, segment-gauss, \
                             ring-gauss or file:PATH)"
                        ),
                    ))
                }
            };
            (seed, lambda)
        }
    };

    match solve_with_method(cfg, method, &seed, lambda) {
        Ok(state) => {
            SolutionFile::from_state(&state).write(out).map_err(|e| {
                Failure::new(EXIT_DATA, format!("cannot write {}: {e}", out.display()))
            })?;
            println!(
                "lambda={} Q={} E={} residual={} tag={}",
                encode_f64(state.lambda()),
                encode_f64(state.charge()),
                encode_f64(state.energy()),
                encode_f64(state.residual_norm()),
                state.tag()
            );
            Ok(())
        }
        Err(err) => {
            // dump whatever iterate we have for post-mortem inspection
            if let SolveError::MaxIterExceeded { last_iterate: Some(phi), .. } = &err {
                let partial = StationaryState::from_profile((**phi).clone(), lambda);
                let failed = PathBuf::from(format!("{}.failed", out.display()));
                let _ = SolutionFile::from_state(&partial).write(&failed);
            }
            Err(Failure::new(EXIT_SOLVER, err.to_string()))
        }
    }
}

fn family_tag(name: &str) -> Result<StateTag, Failure> {
    match name {
        "constant" => Ok(StateTag::Constant),
        "asymmetric" => Ok(StateTag::Asymmetric),
        "symmetric" => Ok(StateTag::Symmetric),
        other => Err(Failure::new(
            EXIT_USAGE,
            format!("unknown family `{other}` (expected constant, asymmetric or symmetric)"),
        )),
    }
}

fn branch_seed(
    cfg: &Config,
    grid: &DumbbellGrid,
    family: StateTag,
    lambda_start: f64,
) -> Result<StationaryState, Failure> {
    let state = match family {
        StateTag::Constant => closedform::constant_state(lambda_start, grid)
            .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?,
        StateTag::Asymmetric => {
            let seed = solve::gaussian_seed(grid, lambda_start, SeedCenter::RingPlus)
                .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
            solve::hybrid(&seed, lambda_start, &petviashvili_options(cfg), &newton_options(cfg))
                .map_err(|e| Failure::new(EXIT_SOLVER, e.to_string()))?
        }
        StateTag::Symmetric => {
            let seed = solve::gaussian_seed(grid, lambda_start, SeedCenter::Segment)
                .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
            solve::hybrid(&seed, lambda_start, &petviashvili_options(cfg), &newton_options(cfg))
                .map_err(|e| Failure::new(EXIT_SOLVER, e.to_string()))?
        }
        StateTag::Other => unreachable!("rejected by family_tag"),
    };
    if state.tag() != family {
        eprintln!(
            "warning: seed solve at lambda = {lambda_start} classified as `{}`, requested `{family}`",
            state.tag()
        );
    }
    Ok(state)
}

fn family_out_path(out: &Path, family: StateTag, multi: bool) -> PathBuf {
    if !multi {
        return out.to_path_buf();
    }
    match out.extension() {
        Some(ext) => {
            let stem = out.with_extension("");
            PathBuf::from(format!("{}.{}.{}", stem.display(), family, ext.to_string_lossy()))
        }
        None => PathBuf::from(format!("{}.{}", out.display(), family)),
    }
}

fn write_branch(
    table: &BranchTable,
    path: &Path,
    cfg: &Config,
) -> Result<(), Failure> {
    let mut csv = String::from("lambda,Q,E,lplus_eig2\n");
    for row in &table.rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            encode_f64(row.lambda),
            encode_f64(row.q),
            encode_f64(row.e),
            encode_f64(row.lplus_eig2)
        ));
    }
    std::fs::write(path, csv)
        .map_err(|e| Failure::new(EXIT_DATA, format!("cannot write {}: {e}", path.display())))?;

    let newton = newton_options(cfg);
    let meta = serde_json::json!({
        "l": encode_f64(table.meta.l),
        "n": table.meta.n,
        "family": table.family.to_string(),
        "lambda_start": encode_f64(table.meta.lambda_start),
        "lambda_end": encode_f64(table.meta.lambda_end),
        "steps_requested": table.meta.steps,
        "rows_written": table.rows.len(),
        "solver": {
            "newton_tol": newton.tol,
            "newton_max_iter": newton.max_iter,
        },
        "branch_end": table.meta.end.as_ref().map(|end| serde_json::json!({
            "lambda": encode_f64(end.lambda),
            "reason": end.reason,
        })),
        "created_utc": chrono::Utc::now().to_rfc3339(),
    });
    let sidecar = PathBuf::from(format!("{}.meta.json", path.display()));
    std::fs::write(&sidecar, format!("{}\n", serde_json::to_string_pretty(&meta).unwrap()))
        .map_err(|e| Failure::new(EXIT_DATA, format!("cannot write {}: {e}", sidecar.display())))
}

#[allow(clippy::too_many_arguments)]
fn cmd_branch(
    cfg: &Config,
    l: f64,
    family: &str,
    lambda_start: f64,
    lambda_end: f64,
    steps: usize,
    n: Option<usize>,
    out: &Path,
) -> CmdResult {
    if lambda_start >= 0.0 || lambda_end >= 0.0 {
        return Err(Failure::new(EXIT_USAGE, "lambda range must be negative"));
    }
    if steps == 0 {
        return Err(Failure::new(EXIT_USAGE, "--steps must be at least 1"));
    }
    let families: Vec<StateTag> =
        family.split(',').map(|f| family_tag(f.trim())).collect::<Result<_, _>>()?;
    let grid = build_grid(l, n.or(cfg.n).unwrap_or(64))?;
    let multi = families.len() > 1;

    let thread_cap = std::env::var("DUMBBELL_NLS_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or(families.len().max(1));

    let mut results: Vec<Option<Result<BranchTable, Failure>>> =
        (0..families.len()).map(|_| None).collect();
    for chunk_start in (0..families.len()).step_by(thread_cap) {
        let chunk_end = (chunk_start + thread_cap).min(families.len());
        let chunk: Vec<(usize, StateTag)> =
            (chunk_start..chunk_end).map(|i| (i, families[i])).collect();
        let mut outcomes = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&(idx, fam)| {
                    let grid = grid.clone();
                    scope.spawn(move || {
                        let seed = branch_seed(cfg, &grid, fam, lambda_start)?;
                        solve::continue_branch(&seed, lambda_end, steps, &ContinuationOptions {
                            newton: newton_options(cfg),
                            skip_row_spectrum: false,
                        })
                        .map_err(|e| Failure::new(EXIT_SOLVER, e.to_string()))
                        .map(|t| (idx, t))
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("branch worker")).collect::<Vec<_>>()
        });
        for outcome in outcomes.drain(..) {
            match outcome {
                Ok((idx, table)) => results[idx] = Some(Ok(table)),
                Err(failure) => return Err(failure),
            }
        }
    }

    let mut truncated = Vec::new();
    for (fam, result) in families.iter().zip(results) {
        let table = result.expect("all families computed")?;
        let path = family_out_path(out, *fam, multi);
        write_branch(&table, &path, cfg)?;
        println!(
            "{}: {} rows -> {}{}",
            fam,
            table.rows.len(),
            path.display(),
            match &table.meta.end {
                Some(end) => format!(" (branch ended early at lambda = {:.6}: {})", end.lambda, end.reason),
                None => String::new(),
            }
        );
        if table.meta.end.is_some() {
            truncated.push((*fam, table.rows.len()));
        }
    }
    if !truncated.is_empty() {
        let detail = truncated
            .iter()
            .map(|(fam, rows)| format!("{fam} ({rows} rows)"))
            .collect::<Vec<_>>()
            .join(", ");
        return Err(Failure::new(EXIT_SOLVER, format!("branch truncated: {detail}")));
    }
    Ok(())
}

fn cmd_compare(solution: &Path, profile: Profile) -> CmdResult {
    if !solution.exists() {
        return Err(Failure::new(EXIT_NOINPUT, format!("no such input: {}", solution.display())));
    }
    let file = SolutionFile::read(solution).map_err(|e| Failure::new(EXIT_DATA, e))?;
    let (phi, lambda) = file.to_profile().map_err(|e| Failure::new(EXIT_DATA, e))?;
    let grid = phi.grid().clone();
    let mu = lambda.abs().sqrt();

    let closed = match profile {
        Profile::SechSegment => closedform::sech_seed(&grid, lambda, Placement::Segment),
        Profile::SechRing => closedform::sech_seed(&grid, lambda, Placement::Ring),
        Profile::Dnoidal => closedform::solve_k0(mu, grid.l(), Family::Ring)
            .and_then(|m| closedform::dnoidal_state(&m, &grid).map(|s| s.phi().clone())),
        Profile::Cnoidal => closedform::solve_k0(mu, grid.l(), Family::Segment)
            .and_then(|m| closedform::cnoidal_state(&m, &grid).map(|s| s.phi().clone())),
    }
    .map_err(|e| Failure::new(EXIT_ROOT, e.to_string()))?;

    let mut sup = 0.0_f64;
    let mut l2_sq = 0.0_f64;
    for i in 0..grid.dof() {
        let d = phi.values()[i] - closed.values()[i];
        sup = sup.max(d.abs());
        l2_sq += grid.weight(i) * d * d;
    }
    println!(
        "solution {} (lambda={}, L={}, N={}, tag={})",
        solution.display(),
        encode_f64(lambda),
        encode_f64(grid.l()),
        grid.n(),
        file.tag
    );
    println!("sup distance = {}", encode_f64(sup));
    println!("L2 distance  = {}", encode_f64(l2_sq.sqrt()));
    Ok(())
}

fn cmd_normalform(l: f64) -> CmdResult {
    if l <= 0.0 || !l.is_finite() {
        return Err(Failure::new(EXIT_USAGE, format!("--L must be positive, got {l}")));
    }
    let report = PitchforkReport::compute(l).map_err(|e| Failure::new(EXIT_ROOT, e.to_string()))?;
    println!("# pitchfork bifurcation report");
    println!("L        = {}", encode_f64(report.l));
    println!("Omega1   = {}   (first odd dispersion root)", encode_f64(report.omega1_odd));
    println!("omega1   = {}   (first even dispersion root)", encode_f64(report.omega1_even));
    println!("Lambda0  = {}   (symmetry-breaking point)", encode_f64(report.lambda0));
    println!("Q0*      = {}", encode_f64(report.q0_star));
    println!("Q0**     = {}", encode_f64(report.q0_double_star));
    println!(
        "Omega    = {}   ({})",
        encode_f64(report.omega_coef),
        if report.omega_coef < 0.0 { "negative" } else { "UNEXPECTED SIGN" }
    );
    println!("A        = {}", encode_f64(report.a_coef));
    println!("B        = {}", encode_f64(report.b_coef));
    println!(
        "eig coef = {}   ({})",
        encode_f64(report.eig_coef),
        if report.eig_coef > 0.0 { "positive" } else { "UNEXPECTED SIGN" }
    );
    let parts = &report.slope;
    println!(
        "slope I/II/III = {} / {} / {}",
        encode_f64(parts.part_i),
        encode_f64(parts.part_ii),
        encode_f64(parts.part_iii)
    );
    println!(
        "slope sum = {}   ({})",
        encode_f64(parts.sum()),
        if parts.sum() < 0.0 { "negative" } else { "UNEXPECTED SIGN" }
    );
    Ok(())
}

fn cmd_elliptic_check() -> CmdResult {
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("{name}: {} ({detail})", if ok { "pass" } else { "FAIL" });
        all_ok &= ok;
    };

    // identities over a deterministic (xi, k) sweep
    let mut worst = 0.0_f64;
    for i in 0..200 {
        let xi = -15.0 + 30.0 * i as f64 / 199.0;
        for j in 0..50 {
            let k = 0.01 + (0.999999 - 0.01) * j as f64 / 49.0;
            let m = EllipticModulus::from_k(k).expect("valid modulus");
            let (sn, cn, dn) = elliptic::jacobi(xi, &m);
            worst = worst.max((dn * dn + k * k * sn * sn - 1.0).abs());
            worst = worst.max((cn * cn + sn * sn - 1.0).abs());
        }
    }
    check("identities", worst < 1e-12, format!("max residual {worst:.2e}"));

    // periodicity of dn
    let mut worst = 0.0_f64;
    for k in [0.3, 0.8, 0.99, 0.99999] {
        let m = EllipticModulus::from_k(k).expect("valid modulus");
        let kk = elliptic::complete_k(k).expect("k < 1");
        for i in 0..40 {
            let xi = 3.0 * i as f64 / 39.0;
            let (_, _, a) = elliptic::jacobi(xi, &m);
            let (_, _, b) = elliptic::jacobi(xi + 2.0 * kk, &m);
            worst = worst.max((a - b).abs());
        }
    }
    check("dn periodicity", worst < 1e-11, format!("max deviation {worst:.2e}"));

    // derivative formulas at k = 1 against one-sided differences
    let mut worst = 0.0_f64;
    let k = 1.0 - 1e-6;
    let m = EllipticModulus::from_k(k).expect("valid modulus");
    let one = EllipticModulus::from_k(1.0).expect("valid modulus");
    for xi in [0.5, 1.0, 2.0, 3.5] {
        let (sn, cn, dn) = elliptic::jacobi(xi, &m);
        let (sn1, cn1, dn1) = elliptic::jacobi(xi, &one);
        let (ds, dc, dd) = elliptic::dk_jacobi_at_1(xi);
        worst = worst.max(((sn - sn1) / (k - 1.0) - ds).abs());
        worst = worst.max(((cn - cn1) / (k - 1.0) - dc).abs());
        worst = worst.max(((dn - dn1) / (k - 1.0) - dd).abs());
    }
    check("d/dk at k=1", worst < 1e-4, format!("max mismatch {worst:.2e}"));

    // variation-of-constants derivative against centered differences
    let m = EllipticModulus::from_k(0.9).expect("valid modulus");
    let got = elliptic::dk_dn_variation(1.0, &m).expect("away from pole");
    let dk = 1e-6;
    let (_, _, dp) = elliptic::jacobi(1.0, &EllipticModulus::from_k(0.9 + dk).unwrap());
    let (_, _, dm) = elliptic::jacobi(1.0, &EllipticModulus::from_k(0.9 - dk).unwrap());
    let fd = (dp - dm) / (2.0 * dk);
    check(
        "dk_dn variation of constants",
        (got - fd).abs() < 1e-6,
        format!("|analytic - fd| = {:.2e}", (got - fd).abs()),
    );

    // first-order expansion remainder scales quadratically in 1 - k^2
    let mut ok = true;
    let mut detail = String::new();
    for xi in [1.0, 2.0, 4.0] {
        let remainder = |m_prime: f64| {
            let m = EllipticModulus::from_k_prime(m_prime.sqrt()).expect("valid modulus");
            let (_, _, dn) = elliptic::jacobi(xi, &m);
            let sech = 1.0 / xi.cosh();
            (dn - sech - 0.25 * m_prime * (xi.sinh() * xi.cosh() + xi) * xi.tanh() * sech).abs()
        };
        let ratio = remainder(1e-3) / remainder(1e-4);
        ok &= (50.0..=200.0).contains(&ratio);
        detail.push_str(&format!("xi={xi}: {ratio:.0} "));
    }
    check("expansion order", ok, format!("remainder ratios {} (expect ~100)", detail.trim()));

    // complete integrals at reference points
    #[allow(clippy::excessive_precision)]
    let (k_ref, e_ref) = (1.685_750_354_812_596_043_f64, 1.467_462_209_339_427_156_f64);
    let k_ok = (elliptic::complete_k(0.5).expect("valid") - k_ref).abs() < 1e-13
        && (elliptic::complete_e(0.5).expect("valid") - e_ref).abs() < 1e-13
        && (elliptic::complete_k(0.0).expect("valid") - std::f64::consts::FRAC_PI_2).abs()
            < 1e-15;
    check("complete integrals", k_ok, "K and E at reference moduli".to_string());

    std::io::stdout().flush().ok();
    if all_ok {
        Ok(())
    } else {
        Err(Failure::new(EXIT_PROPERTY, "elliptic self-checks failed"))
    }
}
