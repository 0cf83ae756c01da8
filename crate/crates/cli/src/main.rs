use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vofoc_core::checks::{run_checks, CheckConfig};
use vofoc_core::reference::{evaluate_all, Comparison};
use vofoc_core::{
    builtin_example, gauss_legendre, l2_errors, load_problem, sample_solution, solve_discretized,
    Approach, ControlAffineProblem, DiscretizedProblem, Error, OrderFunction, SolveOptions,
    SolveReport,
};

mod format;

use format::{json_number, json_string, significant};

const CSV_DIGITS: usize = 12;

#[derive(Parser, Debug)]
#[command(
    name = "vofoc",
    version,
    about = "Variable-order fractional optimal control solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a built-in or file-defined problem and write the trajectory and a report.
    Solve(SolveArgs),
    /// Recompute the published performance-index tables and compare.
    Tables,
    /// Cross-check the operational matrices against direct quadrature.
    Check(CheckArgs),
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Built-in problem name (ex1, ex2, ex3).
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    problem: Option<String>,
    /// Problem definition file.
    #[arg(long)]
    file: Option<PathBuf>,
    /// 1 expands the n-th derivative of the state, 2 its Caputo derivative.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    approach: u8,
    /// Highest Bernoulli polynomial degree.
    #[arg(long = "M", default_value_t = 5)]
    m: usize,
    /// Gauss-Legendre node count.
    #[arg(long = "N", default_value_t = 14, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Gradient tolerance for Newton's method.
    #[arg(long, default_value_t = 1e-12)]
    gtol: f64,
    /// Replacement order function alpha(t).
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Number of rows in the CSV, on t = k/(samples - 1).
    #[arg(long, default_value_t = 1001, value_parser = clap::value_parser!(u64).range(2..))]
    samples: u64,
    /// Output prefix: writes <out>.csv and <out>.report.json.
    #[arg(long, default_value = "solution")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Comma-separated order functions to check instead of the default set.
    #[arg(long, value_delimiter = ',')]
    orders: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Tables => cmd_tables(),
        Command::Check(args) => cmd_check(&args),
    }
}

fn load(args: &SolveArgs) -> vofoc_core::Result<ControlAffineProblem> {
    let problem = match (&args.problem, &args.file) {
        (Some(name), _) => builtin_example(name)?,
        (None, Some(path)) => load_problem(path)?,
        (None, None) => unreachable!("clap requires one of --problem/--file"),
    };
    match &args.alpha {
        Some(alpha) => problem.with_order(OrderFunction::parse(alpha)?),
        None => Ok(problem),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = OsString::from(prefix.as_os_str());
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_solve(args: &SolveArgs) -> ExitCode {
    let problem = match load(args) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let approach = Approach::from_number(args.approach).expect("validated by clap");
    let discretized = gauss_legendre(args.n as usize)
        .and_then(|rule| DiscretizedProblem::new(&problem, approach, args.m, &rule));
    let d = match discretized {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let opts = SolveOptions {
        gtol: args.gtol,
        ..SolveOptions::default()
    };
    let (report, converged) = match solve_discretized(&d, &opts) {
        Ok(r) => (r, true),
        Err(Error::NonConvergence(r)) => (*r, false),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };

    let samples = sample_solution(&report, &d, args.samples as usize);
    let csv = write_csv(&samples);
    let json = report_json(&problem, &report, l2_errors(&problem, &samples));
    for (path, text) in [
        (with_suffix(&args.out, ".csv"), csv),
        (with_suffix(&args.out, ".report.json"), json),
    ] {
        if let Err(e) = fs::write(&path, text) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::FAILURE;
        }
    }

    println!(
        "{} approach={} M={} N={}: J={:.6e} residual={:.3e} iterations={} gradient_norm={:.3e}{}",
        problem.name(),
        approach.number(),
        report.degree,
        report.nodes,
        report.performance_index,
        report.residual,
        report.iterations,
        report.gradient_norm,
        if converged { "" } else { " (did not converge)" }
    );
    if converged {
        ExitCode::SUCCESS
    } else {
        eprintln!("error: Newton's method did not converge; best iterate written");
        ExitCode::from(3)
    }
}

fn write_csv(samples: &[vofoc_core::SamplePoint]) -> String {
    let mut out = String::from("t,x,u\n");
    for s in samples {
        let _ = writeln!(
            out,
            "{},{},{}",
            significant(s.t, CSV_DIGITS),
            significant(s.x, CSV_DIGITS),
            significant(s.u, CSV_DIGITS)
        );
    }
    out
}

fn report_json(problem: &ControlAffineProblem, r: &SolveReport, l2: Option<(f64, f64)>) -> String {
    let coeffs: Vec<String> = r.coefficients.iter().map(|a| json_number(*a)).collect();
    let mut fields = vec![
        ("problem", json_string(problem.name())),
        ("approach", r.approach.number().to_string()),
        ("M", r.degree.to_string()),
        ("N", r.nodes.to_string()),
        ("J", json_number(r.performance_index)),
        ("A", format!("[{}]", coeffs.join(", "))),
        ("residual", json_number(r.residual)),
        ("iterations", r.iterations.to_string()),
        ("gradient_norm", json_number(r.gradient_norm)),
    ];
    if let Some((ex, eu)) = l2 {
        fields.push(("l2_state_error", json_number(ex)));
        fields.push(("l2_control_error", json_number(eu)));
    }
    let body: Vec<String> = fields
        .into_iter()
        .map(|(k, v)| format!("  {}: {v}", json_string(k)))
        .collect();
    format!("{{\n{}\n}}\n", body.join(",\n"))
}

fn cmd_tables() -> ExitCode {
    let mut failed = Vec::new();
    for table in evaluate_all() {
        println!("{}", table.table.title);
        for c in &table.cells {
            let verdict = if c.passed() { "PASS" } else { "FAIL" };
            let criterion = match c.cell.comparison {
                Comparison::Relative(tol) => {
                    format!(
                        "deviation {:+7.2}% (tolerance {:.0}%)",
                        100.0 * c.deviation(),
                        100.0 * tol
                    )
                }
                Comparison::AtMost(bound) => format!("required <= {bound:.0e}"),
            };
            println!(
                "  {verdict} {:<34} J={:<11.4e} reported={:<9.2e} {criterion}{}",
                c.cell.to_string(),
                c.performance_index(),
                c.cell.reported,
                c.error
                    .as_deref()
                    .map(|e| format!(" [{e}]"))
                    .unwrap_or_default()
            );
            if !c.passed() {
                failed.push(c.cell.to_string());
            }
        }
        if let Some(mono) = table.monotone() {
            println!(
                "  {} {:?} in M",
                if mono { "PASS" } else { "FAIL" },
                table.table.monotonicity.expect("monotone() is Some")
            );
            if !mono {
                failed.push(format!("{} ordering", table.table.name));
            }
        }
    }
    if failed.is_empty() {
        println!("all cells pass");
        ExitCode::SUCCESS
    } else {
        println!("{} failed:", failed.len());
        for f in &failed {
            println!("  {f}");
        }
        ExitCode::FAILURE
    }
}

fn cmd_check(args: &CheckArgs) -> ExitCode {
    let mut cfg = CheckConfig::default();
    if !args.orders.is_empty() {
        cfg = match cfg.with_orders(&args.orders) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        };
    }
    let cells = match run_checks(&cfg) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut failures = 0;
    for c in &cells {
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        failures += usize::from(!c.passed());
        println!(
            "{verdict} {:<9} {:<32} defect={:<10.3e} tolerance={:.0e}",
            c.group.to_string(),
            c.label,
            c.defect,
            c.tolerance
        );
    }
    println!(
        "{} of {} checks passed",
        cells.len() - failures,
        cells.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
