//! `phs`: validation, well-posedness verdicts, transfer scans, BVP oracle
//! comparisons and simulation for linear second-order port-Hamiltonian systems.
//!
//! Exit codes:
//!
//! | code | meaning                                                         |
//! |------|-----------------------------------------------------------------|
//! | 0    | success; `analyze` found the system well-posed                  |
//! | 1    | validation or passivity failure                                 |
//! | 2    | unreadable input, parse error, unknown key or bad argument      |
//! | 3    | `analyze`: not well-posed                                       |
//! | 4    | `analyze`: numerically marginal or inconclusive                 |
//! | 5    | `simulate`: the boundary closure of the discretization is singular |

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use phs_core::boundary::{wellposedness_verdict, BoundaryDecomposition, Verdict};
use phs_core::linalg::op_norm;
use phs_core::passivity::{check_passivity, dissipation_form_oracle};
use phs_core::registry;
use phs_core::simulator::InputSignal;
use phs_core::simulator::{default_dt, grid_function, simulate, SimConfig};
use phs_core::transfer::{bvp_transfer_matrix, closed_loop_transfer, vertical_line_scan_with, ScanConfig};
use phs_core::validate::validate_spec;
use phs_core::{CMatrix, PhsError, PhsSpec, Tolerances};
use serde_json::json;

#[derive(Parser)]
#[command(name = "phs", version, about = "Well-posedness toolkit for boundary port-Hamiltonian systems")]
struct Cli {
    /// Also write a machine-readable report to this file.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,

    /// Structural tolerance for the skew/Hermitian/rank checks.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Seed for the sampled dissipation check.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for frequency scans (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

/// A system description: a JSON file, `-` for stdin, or a built-in example.
#[derive(Args, Clone)]
struct Source {
    /// Spec file (`-` reads stdin).
    #[arg(value_name = "SPEC", required_unless_present = "example", conflicts_with = "example")]
    path: Option<String>,

    /// Built-in example key (see `phs examples list`).
    #[arg(long)]
    example: Option<String>,

    /// Example parameter override, e.g. `--param rho=2`.
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    params: Vec<(String, f64)>,
}

#[derive(Subcommand)]
enum Command {
    /// Structural checks and the passivity certificate.
    Validate(Source),

    /// Well-posedness verdict from the boundary interconnection.
    Analyze(Source),

    /// Scan ‖G(r + iω)‖ along vertical lines.
    Transfer {
        #[command(flatten)]
        source: Source,
        /// Abscissa of the vertical line; repeat for several lines.
        #[arg(long = "r", default_values_t = [1.0, 10.0, 100.0])]
        r: Vec<f64>,
        #[arg(long, default_value_t = 1e4)]
        omega_max: f64,
        /// Grid points on the coarsest level (doubled three times).
        #[arg(long, default_value_t = 128)]
        samples: usize,
        /// Compare every k-th point of the finest level with the BVP oracle.
        #[arg(long, value_name = "K")]
        oracle_every: Option<usize>,
        /// CSV output; with several `--r` values each file gets an `_r<value>` suffix.
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },

    /// Crank-Nicolson simulation with the energy balance report.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        /// Grid nodes.
        #[arg(long, default_value_t = 201)]
        nx: usize,
        /// Time step (default 1e-3 (b − a)²).
        #[arg(long)]
        dt: Option<f64>,
        /// zero, step:A, sine:A:f or file:PATH.
        #[arg(long, default_value = "zero")]
        input: String,
        /// Initial state CSV `xi,x_1,…,x_n` (or re/im pairs); zero when absent.
        #[arg(long, value_name = "PATH")]
        x0: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
        /// Include the nodal state every k steps in the CSV.
        #[arg(long, value_name = "K")]
        snapshot_every: Option<usize>,
    },

    /// Closed-loop transfer function against the boundary value problem.
    OracleCompare {
        #[command(flatten)]
        source: Source,
        /// Points `RE` or `RE,IM` with RE > 0.
        #[arg(long = "s", value_name = "RE[,IM]", value_parser = parse_complex, allow_hyphen_values = true,
              default_values = ["1", "1,10", "10,100"])]
        s: Vec<Complex64>,
    },

    /// Built-in example registry.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
}

#[derive(Subcommand)]
enum ExamplesAction {
    /// Keys with their expected verdicts.
    List,
    /// Print an example as a spec file.
    Show {
        key: String,
        #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
        params: Vec<(String, f64)>,
    },
}

fn parse_param(text: &str) -> Result<(String, f64), String> {
    let (name, value) = text.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got '{text}'"))?;
    let value: f64 = value.trim().parse().map_err(|_| format!("'{value}' is not a number"))?;
    Ok((name.trim().to_string(), value))
}

fn parse_complex(text: &str) -> Result<Complex64, String> {
    let mut parts = text.split(',');
    let re: f64 = parts.next().unwrap_or("").trim().parse().map_err(|_| format!("bad real part in '{text}'"))?;
    let im: f64 = match parts.next() {
        Some(p) => p.trim().parse().map_err(|_| format!("bad imaginary part in '{text}'"))?,
        None => 0.0,
    };
    if parts.next().is_some() {
        return Err(format!("expected RE or RE,IM, got '{text}'"));
    }
    Ok(Complex64::new(re, im))
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<PhsError> for Failure {
    fn from(err: PhsError) -> Self {
        let code = match &err {
            PhsError::Json(_) | PhsError::Io(_) | PhsError::InvalidParameter(_) | PhsError::Dimension { .. } => 2,
            PhsError::ClosureSingular { .. } => 5,
            _ => 1,
        };
        Failure::new(code, err.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(err: io::Error) -> Self {
        Failure::new(2, err.to_string())
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {err}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    let tol = match cli.tol {
        Some(t) if t > 0.0 && t.is_finite() => Tolerances::with_structural(t),
        Some(t) => return Err(Failure::new(2, format!("--tol must be positive, got {t}"))),
        None => Tolerances::default(),
    };
    match &cli.command {
        Command::Validate(source) => cmd_validate(cli, &load(source)?, &tol),
        Command::Analyze(source) => cmd_analyze(cli, &load(source)?, &tol),
        Command::Transfer { source, r, omega_max, samples, oracle_every, csv } => {
            let spec = load(source)?;
            cmd_transfer(cli, &spec, &tol, r, *omega_max, *samples, *oracle_every, csv.as_deref())
        }
        Command::Simulate { source, t_end, nx, dt, input, x0, csv, snapshot_every } => {
            let spec = load(source)?;
            let config = SimConfig {
                nodes: *nx,
                dt: dt.unwrap_or_else(|| default_dt(&spec)),
                t_end: *t_end,
                snapshot_every: *snapshot_every,
            };
            cmd_simulate(cli, &spec, &tol, &config, input, x0.as_deref(), csv.as_deref())
        }
        Command::OracleCompare { source, s } => cmd_oracle_compare(cli, &load(source)?, &tol, s),
        Command::Examples { action } => cmd_examples(action),
    }
}

fn load(source: &Source) -> Result<PhsSpec, Failure> {
    match (&source.path, &source.example) {
        (_, Some(key)) => {
            let entry = registry::lookup(key).ok_or_else(|| unknown_example(key))?;
            Ok(entry.build_with(&source.params)?)
        }
        (Some(path), None) => {
            if !source.params.is_empty() {
                return Err(Failure::new(2, "--param only applies to built-in examples"));
            }
            let text = if path == "-" {
                let mut buf = String::new();
                io::stdin().read_to_string(&mut buf)?;
                buf
            } else {
                std::fs::read_to_string(path).map_err(|e| Failure::new(2, format!("{path}: {e}")))?
            };
            let label = if path == "-" { "<stdin>" } else { path.as_str() };
            PhsSpec::from_json_str(&text).map_err(|e| Failure::new(2, format!("{label}: {e}")))
        }
        (None, None) => Err(Failure::new(2, "no spec given")),
    }
}

fn unknown_example(key: &str) -> Failure {
    let keys: Vec<&str> = registry::entries().iter().map(|e| e.key).collect();
    Failure::new(2, format!("unknown example '{key}' (known: {})", keys.join(", ")))
}

fn write_json(cli: &Cli, value: &serde_json::Value) -> Result<(), Failure> {
    if let Some(path) = &cli.json {
        let text = serde_json::to_string_pretty(value).map_err(PhsError::from)?;
        std::fs::write(path, text + "\n").map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))
}

const ORACLE_TRIALS: usize = 500;

fn cmd_validate(cli: &Cli, spec: &PhsSpec, tol: &Tolerances) -> CmdResult {
    let report = validate_spec(spec, tol)?;
    println!("system: {} (n = {}, m = {}, [{}, {}])", spec.name, spec.n, spec.m, spec.a, spec.b);
    println!("structural checks:\n{report}");
    if !report.passed() {
        write_json(cli, &json!({ "name": spec.name, "validation": report, "passed": false }))?;
        return Ok(1);
    }
    let cert = check_passivity(spec, tol)?;
    println!("passivity ({:?} form):", cert.mode);
    println!(
        "  eigenvalues in [{:.4e}, {:.4e}], allowed up to {:.3e}: {}",
        cert.min_eigenvalue,
        cert.max_eigenvalue,
        cert.threshold,
        if cert.passed { "pass" } else { "FAIL" }
    );
    if let Some(g) = &cert.gram {
        println!(
            "  Gram condition: min eigenvalue {:.4e}, equality residual {:.3e}: {}",
            g.min_eigenvalue,
            g.equality_residual,
            if g.passed { "pass" } else { "FAIL" }
        );
        if let Some(d) = &g.diagnostic {
            println!("  {d}");
        }
    }
    let sampled = dissipation_form_oracle(spec, ORACLE_TRIALS, cli.seed)?;
    println!("  sampled energy balance over {ORACLE_TRIALS} states (seed {}): max violation {sampled:.3e}", cli.seed);
    let passed = cert.passed && cert.agrees;
    if !cert.agrees {
        println!("  warning: Gram condition and form test disagree");
    }
    println!("overall: {}", if passed { "pass" } else { "FAIL" });
    write_json(
        cli,
        &json!({
            "name": spec.name,
            "validation": report,
            "passivity": cert,
            "sampled_violation": sampled,
            "seed": cli.seed,
            "passed": passed,
        }),
    )?;
    Ok(if passed { 0 } else { 1 })
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::WellPosed | Verdict::WellPosedSufficient => 0,
        Verdict::NotWellPosed => 3,
        Verdict::Inconclusive | Verdict::NumericallyMarginal => 4,
    }
}

fn cmd_analyze(cli: &Cli, spec: &PhsSpec, tol: &Tolerances) -> CmdResult {
    let decomp = wellposedness_verdict(spec, tol)?;
    print!("{}", decomp.text_report(&spec.name));
    write_json(cli, &decomp.to_json(&spec.name))?;
    Ok(verdict_code(decomp.verdict))
}

fn suffixed(path: &Path, r: f64) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}_r{r}{ext}"))
}

#[allow(clippy::too_many_arguments)]
fn cmd_transfer(
    cli: &Cli,
    spec: &PhsSpec,
    tol: &Tolerances,
    rs: &[f64],
    omega_max: f64,
    samples: usize,
    oracle_every: Option<usize>,
    csv: Option<&Path>,
) -> CmdResult {
    let decomp: BoundaryDecomposition = wellposedness_verdict(spec, tol)?;
    println!("system: {}  verdict: {}", spec.name, decomp.verdict);
    if spec.p0.iter().any(|z| z.norm() > 0.0) {
        println!("note: the feedback formula describes the system with P0 = 0");
    }
    let mut summaries = Vec::new();
    for &r in rs {
        let config = ScanConfig { r, omega_max, samples, oracle_every };
        let scan = vertical_line_scan_with(spec, &decomp, &config)?;
        println!(
            "r = {r}: sup ||G|| = {:.6e} at omega = {:.4e}; level sups {:?}; singular points {}; max cond {:.3e}{}; assessment {:?}",
            scan.sup_norm,
            scan.sup_omega,
            scan.level_sups.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>(),
            scan.singular_points,
            scan.max_cond_loop,
            scan.max_oracle_residual.map(|x| format!("; max oracle residual {x:.3e}")).unwrap_or_default(),
            scan.assessment
        );
        if let Some(path) = csv {
            let target = if rs.len() > 1 { suffixed(path, r) } else { path.to_path_buf() };
            let mut out = create(&target)?;
            scan.write_csv(&mut out)?;
            out.flush()?;
        }
        summaries.push(scan.summary_json());
    }
    write_json(cli, &json!({ "name": spec.name, "verdict": decomp.verdict, "scans": summaries }))?;
    Ok(0)
}

fn initial_state(spec: &PhsSpec, nodes: usize, path: Option<&Path>) -> Result<phs_core::CVector, Failure> {
    let Some(path) = path else {
        return Ok(phs_core::CVector::zeros(spec.n * nodes));
    };
    // same layout as an input file, with ξ in place of t
    let profile = InputSignal::from_csv_file(path).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?;
    profile.sample(spec.a, spec.n).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?;
    Ok(grid_function(spec, nodes, |xi| profile.sample(xi, spec.n).expect("width checked above")))
}

fn cmd_simulate(
    cli: &Cli,
    spec: &PhsSpec,
    tol: &Tolerances,
    config: &SimConfig,
    input: &str,
    x0: Option<&Path>,
    csv: Option<&Path>,
) -> CmdResult {
    let report = validate_spec(spec, tol)?;
    if !report.passed() {
        println!("structural checks:\n{report}");
        return Ok(1);
    }
    let signal: InputSignal = input.parse()?;
    // reject a mismatched input file before stepping
    signal.sample(0.0, spec.m)?;
    let x0 = initial_state(spec, config.nodes, x0)?;
    let m = spec.m;
    let u = |t: f64| signal.sample(t, m).expect("checked above");
    let traj = simulate(spec, &x0, &u, config)?;

    let h0 = traj.hamiltonian[0];
    let h_end = *traj.hamiltonian.last().expect("at least the initial level");
    let h_max = traj.hamiltonian.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let violation = traj.max_violation();
    let h = spec.length() / (config.nodes - 1) as f64;
    let t_end = *traj.times.last().expect("at least the initial level");
    let tol_disc = (h * h + config.dt * config.dt) * t_end * h0.max(f64::MIN_POSITIVE) + 1e-12 * (1.0 + h_max);
    println!("system: {}  nodes {}  dt {:.3e}  steps {}", spec.name, config.nodes, config.dt, traj.times.len() - 1);
    println!("H(0) = {h0:.10e}, H(T) = {h_end:.10e}, max H = {h_max:.10e}");
    println!("supplied energy = {:.10e}", traj.supplied.last().copied().unwrap_or(0.0));
    println!(
        "max dissipation-inequality violation = {violation:.3e} (tolerance {tol_disc:.3e}): {}",
        if violation <= tol_disc { "ok" } else { "EXCEEDED" }
    );
    if let Some(w) = &traj.warning {
        println!("warning: {w}");
    }
    if let Some(path) = csv {
        let mut out = create(path)?;
        traj.write_csv(&mut out, config.snapshot_every.is_some())?;
        out.flush()?;
    }
    write_json(
        cli,
        &json!({
            "name": spec.name,
            "nodes": config.nodes,
            "dt": config.dt,
            "t_end": t_end,
            "H0": h0,
            "H_end": h_end,
            "supplied": traj.supplied.last(),
            "max_violation": violation,
            "tolerance": tol_disc,
            "boundary_residual": traj.boundary_residual,
            "warning": traj.warning,
        }),
    )?;
    Ok(0)
}

fn cmd_oracle_compare(cli: &Cli, spec: &PhsSpec, tol: &Tolerances, points: &[Complex64]) -> CmdResult {
    let decomp = wellposedness_verdict(spec, tol)?;
    let mut reference = spec.clone();
    if spec.p0.iter().any(|z| z.norm() > 0.0) {
        println!("note: comparing against the boundary value problem with P0 = 0");
        reference.p0 = CMatrix::zeros(spec.n, spec.n);
    }
    println!("system: {}  verdict: {}", spec.name, decomp.verdict);
    let mut rows = Vec::new();
    for &s in points {
        if !(s.re > 0.0) {
            return Err(Failure::new(2, format!("need Re s > 0, got {s}")));
        }
        let cl = closed_loop_transfer(&decomp, spec.length(), s);
        let bvp = bvp_transfer_matrix(&reference, s);
        let row = match (&cl, &bvp) {
            (Ok(cl), Ok(g)) => {
                let norm = op_norm(g);
                let diff = op_norm(&(&cl.g - g)) / (1.0 + norm);
                println!("s = {s}: ||G|| = {norm:.6e}, relative difference {diff:.3e}, loop cond {:.3e}", cl.cond_loop);
                json!({ "re": s.re, "im": s.im, "g_norm": norm, "relative_difference": diff, "cond_loop": cl.cond_loop })
            }
            _ => {
                let msg = [cl.err().map(|e| e.to_string()), bvp.err().map(|e| e.to_string())]
                    .into_iter()
                    .flatten()
                    .collect::<Vec<_>>()
                    .join("; ");
                println!("s = {s}: {msg}");
                json!({ "re": s.re, "im": s.im, "error": msg })
            }
        };
        rows.push(row);
    }
    write_json(cli, &json!({ "name": spec.name, "points": rows }))?;
    Ok(0)
}

fn cmd_examples(action: &ExamplesAction) -> CmdResult {
    match action {
        ExamplesAction::List => {
            for e in registry::entries() {
                let params: Vec<String> = e.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                println!("{:<14} {:<32} {:<20} {}", e.key, e.expected.label(), params.join(" "), e.provenance);
            }
        }
        ExamplesAction::Show { key, params } => {
            let entry = registry::lookup(key).ok_or_else(|| unknown_example(key))?;
            println!("{}", entry.build_with(params)?.to_json_string());
        }
    }
    Ok(0)
}
