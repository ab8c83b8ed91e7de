use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use psalloc::asymptotics::{heavy_traffic_pi, tail_pi, Terms};
use psalloc::export::{self, Export, Format};
use psalloc::model::{default_truncation, max_geometric_residual, normalization_residual};
use psalloc::sim::{simulate_aggregate, simulate_detailed, SimConfig};
use psalloc::tables::{self, format_sig3, Rounding};
use psalloc::wasted::{w_mean, w_pmf, WastedConfig};
use psalloc::{closed_form, ctmc, spectral, Error, JointDistribution, Method, ModelParams, SolverConfig};

#[derive(Parser)]
#[command(name = "psalloc", version, about = "Storage allocation under processor sharing")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the joint distribution π(k,r).
    Solve(SolveArgs),
    /// Heavy-traffic table: m = 3, ρ = 1-ε, r = 1/ε.
    Table1(TableArgs),
    /// Large-r table: m = 3, ρ = 0.5, 5 <= r <= 50.
    Table2(TableArgs),
    /// Distribution of the wasted space W.
    Wasted(WastedArgs),
    /// Run a simulator and print a JSON summary.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMethod {
    Ctmc,
    Closed,
    Spectral,
    AsymptoticHt,
    AsymptoticTail,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    rho: f64,
    #[arg(long, value_enum, default_value = "ctmc")]
    method: SolveMethod,
    /// Largest r kept; defaults to a level where the discarded mass is negligible.
    #[arg(long)]
    rmax: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Terms of the heavy-traffic expansion.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    terms: u8,
    #[arg(long, value_enum, default_value = "csv")]
    format: FileFormat,
    /// Output path, `-` for standard output.
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FileFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Text,
    Csv,
    Json,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, value_enum, default_value = "text")]
    format: TableFormat,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum WastedMethod {
    Ctmc,
}

#[derive(Args)]
struct WastedArgs {
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 30)]
    lmax: usize,
    #[arg(long, value_enum, default_value = "ctmc")]
    method: WastedMethod,
    /// Absolute tolerance on each P[W = L].
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long)]
    json: bool,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimMode {
    Aggregate,
    Detailed,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    mode: SimMode,
    /// Primary spaces (detailed mode: projection used for the (k,r) table).
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Recorded events per replication.
    #[arg(long, default_value_t = 1_000_000)]
    events: u64,
    #[arg(long, default_value_t = 100_000)]
    warmup: u64,
    #[arg(long, default_value_t = 4)]
    reps: usize,
    #[arg(long, default_value_t = 10)]
    batches: usize,
    #[arg(long)]
    snapshot_interval: Option<f64>,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let res = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Table1(a) => table1(a),
        Command::Table2(a) => table2(a),
        Command::Wasted(a) => wasted(a),
        Command::Simulate(a) => simulate(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn emit(out: &PathBuf, text: &str) -> CliResult<()> {
    let res = if out.as_os_str() == "-" {
        std::io::stdout().lock().write_all(text.as_bytes())
    } else {
        std::fs::write(out, text)
    };
    res.map_err(|e| Failure::Numeric(format!("cannot write {}: {e}", out.display())))
}

fn solve(a: SolveArgs) -> CliResult<()> {
    let params = ModelParams::new(a.m, a.rho)?;
    let mut cfg = SolverConfig::default_for(&params);
    if let Some(r) = a.rmax {
        cfg = cfg.with_r_max(r);
    }
    if let Some(t) = a.tol {
        cfg = cfg.with_tol(t);
    }
    let table = match a.method {
        SolveMethod::Ctmc => ctmc::solve_stationary(params, &cfg)?,
        SolveMethod::Closed => closed_form::full_distribution(params, &cfg)?,
        SolveMethod::Spectral => spectral::solve(params, &cfg)?,
        SolveMethod::AsymptoticHt | SolveMethod::AsymptoticTail => asymptotic_table(&a, params, cfg.r_max)?,
    };
    let mut doc = Export::new(table);
    if doc.table.method != Method::Asymptotic {
        let (_, rel) = max_geometric_residual(&doc.table);
        let norm = normalization_residual(&doc.table)?;
        let min = doc.table.min_value();
        doc = doc
            .with("geometric_residual", format!("{rel:e}"))
            .with("normalization_residual", format!("{:e}", norm.residual))
            .with("min_value", format!("{min:e}"));
    } else {
        doc = doc.with("terms", a.terms);
    }
    doc = doc.with("default_r_max", default_truncation(&params));
    let format = match a.format {
        FileFormat::Csv => Format::Csv,
        FileFormat::Json => Format::Json,
    };
    emit(&a.out, &export::write(&doc, format)?)
}

/// Asymptotic values for `r >= 1`; `r = 0` is left as NaN.
fn asymptotic_table(a: &SolveArgs, p: ModelParams<f64>, r_max: usize) -> CliResult<JointDistribution<f64>> {
    let terms = if a.terms == 1 { Terms::One } else { Terms::Two };
    let eps = p.epsilon();
    let table = JointDistribution::tabulate(p, r_max, Method::Asymptotic, 0.0, |k, r| {
        if r == 0 {
            return Ok(f64::NAN);
        }
        match a.method {
            SolveMethod::AsymptoticHt => Ok(heavy_traffic_pi(p.m, k, eps, r, terms)?.value),
            _ => tail_pi(p.m, k, p.rho, r),
        }
    })?;
    Ok(table)
}

fn json<T: serde::Serialize>(x: &T) -> CliResult<String> {
    serde_json::to_string_pretty(x)
        .map(|s| s + "\n")
        .map_err(|e| Failure::Numeric(e.to_string()))
}

fn table1(a: TableArgs) -> CliResult<()> {
    let rows = tables::table1()?;
    let text = match a.format {
        TableFormat::Json => json(&rows)?,
        TableFormat::Csv => {
            let mut s = String::from("epsilon,k,r,exact,one_term,two_term\n");
            for x in &rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{:.16e},{:.16e},{:.16e}",
                    x.epsilon, x.k, x.r, x.exact, x.one_term, x.two_term
                );
            }
            s
        }
        TableFormat::Text => {
            let f = |x: f64| format_sig3(x, Rounding::Truncate, 1e-4);
            let mut s = String::from("rho = 1 - eps, m = 3, Y = 1, r = Y/eps\n");
            let _ = writeln!(s, "{:>6} {:>2} {:>10} {:>10} {:>10}", "eps", "k", "exact", "one-term", "two-term");
            for x in &rows {
                let eps = if x.k == 0 { x.epsilon.to_string() } else { String::new() };
                let _ = writeln!(
                    s,
                    "{eps:>6} {:>2} {:>10} {:>10} {:>10}",
                    x.k,
                    f(x.exact),
                    f(x.one_term),
                    f(x.two_term)
                );
            }
            s
        }
    };
    emit(&a.out, &text)
}

fn table2(a: TableArgs) -> CliResult<()> {
    let rows = tables::table2()?;
    let text = match a.format {
        TableFormat::Json => json(&rows)?,
        TableFormat::Csv => {
            let mut s = String::from("r,k,exact,spectral,asymptotic\n");
            for x in &rows {
                let _ = writeln!(s, "{},{},{:.16e},{:.16e},{:.16e}", x.r, x.k, x.exact, x.spectral, x.asymptotic);
            }
            s
        }
        TableFormat::Text => {
            let f = |x: f64| format_sig3(x, Rounding::Nearest, f64::INFINITY);
            let mut s = String::from("rho = 0.5, m = 3\n");
            let _ = writeln!(s, "{:>3} {:>2} {:>10} {:>10}", "r", "k", "exact", "asymptotic");
            for x in &rows {
                let r = if x.k == 0 { x.r.to_string() } else { String::new() };
                let _ = writeln!(s, "{r:>3} {:>2} {:>10} {:>10}", x.k, f(x.exact), f(x.asymptotic));
            }
            s
        }
    };
    emit(&a.out, &text)
}

fn wasted(a: WastedArgs) -> CliResult<()> {
    let WastedMethod::Ctmc = a.method;
    let cfg = WastedConfig {
        tol: a.tol,
        ..WastedConfig::default()
    };
    let d = w_pmf(a.rho, a.lmax, &cfg)?;
    let mean = w_mean(&d);
    let bounds = d.bounds();
    let within = bounds.contains(mean.mean);
    let text = if a.json {
        json(&serde_json::json!({
            "rho": d.rho,
            "lmax": d.lmax,
            "pmf": d.pmf,
            "total": d.total(),
            "mean": mean.mean,
            "mean_tail_estimate": mean.tail_estimate,
            "jmax": d.jmax,
            "j_tail_bound": d.j_tail_bound,
            "model_cut": d.model_cut,
            "models": d.models,
            "p0_direct": d.pmf[0],
            "p0_complement": d.p0_complement,
            "bounds": { "lower": bounds.lower, "upper": bounds.upper, "within": within },
        }))?
    } else {
        let mut s = String::new();
        let _ = writeln!(s, "rho = {}, lmax = {}", d.rho, d.lmax);
        let _ = writeln!(s, "{:>4}  P[W=L]", "L");
        for (l, p) in d.pmf.iter().enumerate() {
            let _ = writeln!(s, "{l:>4}  {p:.10e}");
        }
        let _ = writeln!(s, "sum P[W=L]      {:.12}", d.total());
        let _ = writeln!(s, "E[W]            {:.10} (tail estimate {:.2e})", mean.mean, mean.tail_estimate);
        let _ = writeln!(s, "P[W=0]          {:.12}", d.pmf[0]);
        let _ = writeln!(s, "1 - sum L >= 1  {:.12} (includes mass above lmax)", d.p0_complement);
        let _ = writeln!(
            s,
            "truncation      j <= {} (dropped <= {:.1e} per term), {} models cut at level {}",
            d.jmax, d.j_tail_bound, d.models, d.model_cut
        );
        let _ = writeln!(
            s,
            "heavy-traffic bounds [{:.4}, {:.4}]: {} (asymptotic, diagnostic only)",
            bounds.lower,
            bounds.upper,
            if within { "pass" } else { "fail" }
        );
        s
    };
    emit(&a.out, &text)
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let cfg = SimConfig {
        seed: a.seed,
        warmup_events: a.warmup,
        sample_events: a.events,
        replications: a.reps,
        batches: a.batches,
        snapshot_interval: a.snapshot_interval,
    };
    let summary = match a.mode {
        SimMode::Aggregate => simulate_aggregate(ModelParams::new(a.m, a.rho)?, &cfg)?,
        SimMode::Detailed => simulate_detailed(a.rho, a.m, &cfg)?,
    };
    emit(&a.out, &json(&summary)?)
}
