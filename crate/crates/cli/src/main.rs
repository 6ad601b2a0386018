mod complex_arg;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde_json::json;

use loopvertex::combinatorics::{fuss_catalan_number, log_z_series_coefficients, perturbative_partial_sum};
use loopvertex::derivative::s_derivatives;
use loopvertex::kernel::{bound_constant, t_series, t_solve};
use loopvertex::lve::{log_z_partial, LveConfig, WRule};
use loopvertex::oracle::{g2_lvr, g2_oracle, z_lvr, z_oracle};
use loopvertex::record::{format_float, resolve_output_path, CheckOutcome, RunRecord};
use loopvertex::verify::{lve_within_budget, run_suite, Fault, Suite, VerifyOptions};
use loopvertex::{Error, ModelSpec};

use complex_arg::parse_complex;

const VERIFICATION_FAILURE: u8 = 4;

#[derive(Parser)]
#[command(name = "loopvertex", version, about = "Loop vertex kernels, oracles and tree expansion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the run record as JSON
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Write the named results as CSV
    #[arg(long, global = true, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Record wall time (records then differ between runs)
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// T, F, S, E and derivatives of S at one point
    Kernel {
        #[arg(short, default_value_t = 2)]
        p: u32,
        #[arg(short, value_parser = parse_complex, allow_hyphen_values = true)]
        z: Complex64,
        #[arg(long, default_value_t = 4)]
        qmax: usize,
    },
    /// Fuss-Catalan coefficients, the truncated tree-function series and the
    /// perturbative series of Z and log Z
    Series {
        #[arg(short, default_value_t = 2)]
        p: u32,
        /// Number of terms
        #[arg(short, default_value_t = 6)]
        n: u64,
        #[arg(short, value_parser = parse_complex, allow_hyphen_values = true)]
        z: Option<Complex64>,
        #[arg(short = 'l', value_parser = parse_complex, allow_hyphen_values = true)]
        lambda: Option<Complex64>,
    },
    /// Quadrature references for Z and the two-point cumulant
    Oracle {
        #[arg(short, default_value_t = 2)]
        p: u32,
        #[arg(short = 'l', value_parser = parse_complex, allow_hyphen_values = true)]
        lambda: Complex64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
    /// Tree expansion of log Z compared with the oracle
    Lve {
        #[arg(short, default_value_t = 2)]
        p: u32,
        #[arg(short = 'l', value_parser = parse_complex, allow_hyphen_values = true)]
        lambda: Complex64,
        /// Highest order
        #[arg(short, default_value_t = 3)]
        n: usize,
        /// Field samples per tree term
        #[arg(short, default_value_t = 20_000)]
        s: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = RuleArg::Tensor)]
        w_rule: RuleArg,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
    /// Invariant suites; exits 4 if any check fails
    Verify {
        #[arg(value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
    /// Fitted constant of the derivative bound on a sector grid
    BoundFit {
        #[arg(short, default_value_t = 2)]
        p: u32,
        #[arg(long, default_value_t = 8)]
        qmax: usize,
        /// Half-angle of the excluded sector around the positive axis
        #[arg(long, default_value_t = 0.3)]
        epsilon: f64,
        /// Largest |z| on the grid
        #[arg(long, default_value_t = 1e4)]
        rmax: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Tensor,
    Joint,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Kernel,
    Combinatorics,
    Oracle,
    Lve,
    All,
}

struct Outcome {
    record: RunRecord,
    failed: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let outcome = match run(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Numerical {
                best_estimate: Some((re, im)),
                ..
            } = &e
            {
                eprintln!("best estimate: {} {}", format_float(*re), format_float(*im));
            }
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let mut record = outcome.record;
    if cli.output.timing {
        record.wall_time = Some(start.elapsed().as_secs_f64());
    }
    print_record(&record);
    if let Err(e) = persist(&record, &cli.output) {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    if outcome.failed {
        ExitCode::from(VERIFICATION_FAILURE)
    } else {
        ExitCode::SUCCESS
    }
}

fn persist(record: &RunRecord, out: &OutputArgs) -> loopvertex::Result<()> {
    if let Some(path) = &out.json {
        record.write_json(&resolve_output_path(path))?;
    }
    if let Some(path) = &out.csv {
        record.write_csv(&resolve_output_path(path))?;
    }
    Ok(())
}

fn print_record(record: &RunRecord) {
    use std::fmt::Write as _;
    use std::io::Write as _;
    let mut text = String::new();
    let width = record.results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &record.results {
        let value = if r.value.im == 0.0 {
            format_float(r.value.re)
        } else {
            let sign = if r.value.im.is_sign_negative() { '-' } else { '+' };
            format!("{} {sign} {}i", format_float(r.value.re), format_float(r.value.im.abs()))
        };
        let _ = match r.error {
            Some(e) => writeln!(text, "{:width$}  {value}  +- {}", r.name, format_float(e)),
            None => writeln!(text, "{:width$}  {value}", r.name),
        };
    }
    for c in &record.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(text, "{verdict} {}: {}", c.name, c.detail);
    }
    if let Some(t) = record.wall_time {
        let _ = writeln!(text, "wall time {t:.3} s");
    }
    // a closed pipe (e.g. `| head`) is not an error for a report
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn run(command: &Command) -> loopvertex::Result<Outcome> {
    let done = |record| Ok(Outcome { record, failed: false });
    match *command {
        Command::Kernel { p, z, qmax } => done(cmd_kernel(p, z, qmax)?),
        Command::Series { p, n, z, lambda } => done(cmd_series(p, n, z, lambda)?),
        Command::Oracle { p, lambda, tol, epsilon } => done(cmd_oracle(p, lambda, tol, epsilon)?),
        Command::Lve {
            p,
            lambda,
            n,
            s,
            seed,
            w_rule,
            epsilon,
        } => cmd_lve(p, lambda, n, s, seed, w_rule, epsilon),
        Command::Verify {
            suite,
            quick,
            seed,
            ref inject_fault,
        } => cmd_verify(suite, quick, seed, inject_fault.as_deref()),
        Command::BoundFit { p, qmax, epsilon, rmax } => done(cmd_bound_fit(p, qmax, epsilon, rmax)?),
    }
}

fn cmd_kernel(p: u32, z: Complex64, qmax: usize) -> loopvertex::Result<RunRecord> {
    let k = t_solve(p, z)?;
    let mut rec = RunRecord::new("kernel", None, json!({ "p": p, "z": [z.re, z.im], "qmax": qmax }));
    rec.push("T", k.t, None);
    rec.push("F", k.f, None);
    rec.push("S", k.s, None);
    rec.push("E", k.e, None);
    rec.push_real("residual", k.residual);
    rec.push_real("degraded", if k.degraded { 1.0 } else { 0.0 });
    if qmax > 0 {
        for (i, d) in s_derivatives(p, z, qmax)?.into_iter().enumerate() {
            rec.push(format!("S^({})", i + 1), d, None);
        }
    }
    Ok(rec)
}

fn cmd_series(p: u32, n: u64, z: Option<Complex64>, lambda: Option<Complex64>) -> loopvertex::Result<RunRecord> {
    let spec = lambda.map(|l| ModelSpec::new(p, l, 0.1)).transpose()?;
    if spec.is_none() {
        ModelSpec::real(p, 0.0)?;
    }
    let mut rec = RunRecord::new(
        "series",
        spec,
        json!({ "p": p, "n": n, "z": z.map(|z| [z.re, z.im]) }),
    );
    for k in 0..n {
        let c = fuss_catalan_number(p, k).to_f64().unwrap_or(f64::INFINITY);
        rec.push_real(format!("C_{k}"), c);
    }
    if let Some(z) = z {
        let s = t_series(p, z, n as usize)?;
        rec.push("T_series", s.value, None);
        rec.push_real("slow_convergence", if s.slow_convergence { 1.0 } else { 0.0 });
    }
    if let Some(spec) = &spec {
        let last = n.saturating_sub(1);
        rec.push("Z_partial_sum", perturbative_partial_sum(spec, last, 0), None);
        for (k, l) in log_z_series_coefficients(p, last).iter().enumerate().skip(1) {
            rec.push_real(format!("logZ_coeff_{k}"), l.to_f64().unwrap_or(f64::NAN));
        }
    }
    Ok(rec)
}

fn cmd_oracle(p: u32, lambda: Complex64, tol: f64, epsilon: f64) -> loopvertex::Result<RunRecord> {
    let spec = ModelSpec::new(p, lambda, epsilon)?;
    let mut rec = RunRecord::new("oracle", Some(spec), json!({ "tol": tol }));
    let z = z_oracle(&spec, tol)?;
    let g = g2_oracle(&spec, tol)?;
    let zl = z_lvr(&spec, tol)?;
    let gl = g2_lvr(&spec, tol)?;
    rec.push("z_oracle", z.value, Some(z.abs_error_estimate));
    rec.push("g2_oracle", g.value, Some(g.abs_error_estimate));
    rec.push("z_lvr", zl.value, Some(zl.abs_error_estimate));
    rec.push("g2_lvr", gl.value, Some(gl.abs_error_estimate));
    rec.push_real("z_discrepancy", (zl.value - z.value).norm());
    rec.push_real("g2_discrepancy", (gl.value - g.value).norm());
    Ok(rec)
}

#[allow(clippy::too_many_arguments)]
fn cmd_lve(
    p: u32,
    lambda: Complex64,
    n_max: usize,
    samples: usize,
    seed: u64,
    rule: RuleArg,
    epsilon: f64,
) -> loopvertex::Result<Outcome> {
    let spec = ModelSpec::new(p, lambda, epsilon)?;
    let w_rule = match rule {
        RuleArg::Tensor => WRule::TensorQuadrature,
        RuleArg::Joint => WRule::JointMc,
    };
    let config = LveConfig::new(samples, w_rule, seed, n_max)?;
    let config_echo = serde_json::to_value(config).map_err(|e| Error::Contract(e.to_string()))?;
    let mut rec = RunRecord::new("lve", Some(spec), config_echo);
    rec.seed = Some(seed);
    let sum = log_z_partial(&spec, &config)?;
    for (i, o) in sum.orders.iter().enumerate() {
        rec.push(format!("order_{}", i + 1), o.value, Some(o.std_error));
    }
    rec.push("log_z_partial", sum.cumulative.value, Some(sum.cumulative.std_error));
    let exact = z_oracle(&spec, 1e-13)?.value.ln();
    rec.push("log_z_oracle", exact, None);
    let (passed, gap, budget) = lve_within_budget(&spec, &sum)?;
    rec.push_real("gap", gap);
    rec.push_real("budget", budget);
    rec.checks.push(CheckOutcome {
        name: "tree expansion reproduces log Z".into(),
        passed,
        detail: format!("gap {} within budget {}", format_float(gap), format_float(budget)),
    });
    Ok(Outcome { record: rec, failed: !passed })
}

fn cmd_verify(suite: SuiteArg, quick: bool, seed: u64, fault: Option<&str>) -> loopvertex::Result<Outcome> {
    let suite = match suite {
        SuiteArg::Kernel => Suite::Kernel,
        SuiteArg::Combinatorics => Suite::Combinatorics,
        SuiteArg::Oracle => Suite::Oracle,
        SuiteArg::Lve => Suite::Lve,
        SuiteArg::All => Suite::All,
    };
    let fault = fault.map(str::parse::<Fault>).transpose()?;
    let opts = VerifyOptions { quick, seed, fault };
    let echo = serde_json::to_value((suite, opts)).map_err(|e| Error::Contract(e.to_string()))?;
    let mut rec = RunRecord::new("verify", None, echo);
    rec.seed = Some(seed);
    rec.checks = run_suite(suite, &opts);
    let failures = rec.checks.iter().filter(|c| !c.passed).count();
    rec.push_real("checks", rec.checks.len() as f64);
    rec.push_real("failures", failures as f64);
    Ok(Outcome { record: rec, failed: failures > 0 })
}

fn cmd_bound_fit(p: u32, qmax: usize, epsilon: f64, rmax: f64) -> loopvertex::Result<RunRecord> {
    let spec = ModelSpec::new(p, Complex64::new(0.0, 0.0), epsilon)?;
    if rmax.is_nan() || rmax <= 1e-3 {
        return Err(Error::Domain(format!("rmax must exceed 1e-3, got {rmax}")));
    }
    let span = (rmax / 1e-3).log10();
    let mut grid = vec![Complex64::new(0.0, 0.0)];
    for i in 0..24 {
        let r = 1e-3 * 10f64.powf(span * i as f64 / 23.0);
        for k in 0..=16 {
            let lower = epsilon * (1.0 + 1e-9);
            let theta = lower + (std::f64::consts::PI - lower) * k as f64 / 16.0;
            grid.push(Complex64::from_polar(r, theta));
            grid.push(Complex64::from_polar(r, -theta));
        }
    }
    let k = bound_constant(&spec, &grid, qmax)?;
    let mut rec = RunRecord::new(
        "bound-fit",
        Some(spec),
        json!({ "qmax": qmax, "rmax": rmax, "grid_points": grid.len() }),
    );
    rec.push_real("K", k);
    Ok(rec)
}
