//! `homog`: effective Hamiltonians, metric reports, the bump certificate and the validation
//! suites from the command line.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 solver failure or a failed check,
//! 3 sufficiency condition violated.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use homog::cell::{effective_on_grid, EffectiveConfig, EffectiveHamiltonian, Method, SampleGrid};
use homog::counterexample::{verify_strict_inequality, BumpProfile, CounterexampleConfig};
use homog::hamiltonian::{builtin_spec, HamiltonianSpec};
use homog::metrics::{metrics_report, MetricsConfig, RegionSpec};
use homog::suite::{run_suites, SuiteConfig, SUITES};
use homog::HomogError;

#[derive(Parser)]
#[command(name = "homog", version, about = "Symplectic homogenization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the effective Hamiltonian; writes effective.json and effective.csv.
    Effective(EffectiveArgs),
    /// Metric report for a region; writes metrics.json and metrics.csv.
    Metrics(MetricsArgs),
    /// Certificate for the plateau bump Hamiltonian; writes certificate.json.
    Counterexample(CounterexampleArgs),
    /// Run the property and oracle suites.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct Common {
    /// Built-in name (integrable, pendulum, bump) or a JSON spec file.
    #[arg(long, default_value = "pendulum")]
    spec: String,
    /// Dimension of a built-in spec.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct SolverArgs {
    /// First softmax temperature.
    #[arg(long)]
    beta0: Option<f64>,
    #[arg(long)]
    stages: Option<usize>,
    /// Accepted certification gap.
    #[arg(long)]
    tol: Option<f64>,
    /// Corrector grid points per axis.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Final time of the Lax-Oleinik march.
    #[arg(long)]
    lo_horizon: Option<f64>,
    /// Grid points per axis of the Lax-Oleinik march.
    #[arg(long)]
    lo_points: Option<usize>,
}

impl SolverArgs {
    fn config(&self) -> EffectiveConfig {
        let mut c = EffectiveConfig::default();
        if let Some(v) = self.beta0 {
            c.solver.beta0 = v;
        }
        if let Some(v) = self.stages {
            c.solver.stages = v;
        }
        if let Some(v) = self.tol {
            c.solver.tol = v;
        }
        if let Some(v) = self.grid_points {
            c.solver.grid_points = v;
        }
        if let Some(v) = self.lo_horizon {
            c.lax_oleinik.horizon = v;
        }
        if let Some(v) = self.lo_points {
            c.lax_oleinik.grid_points = v;
        }
        c
    }
}

#[derive(Args)]
struct EffectiveArgs {
    #[command(flatten)]
    common: Common,
    /// `lo:hi:count`, per axis.
    #[arg(long, allow_hyphen_values = true, default_value = "-2:2:65")]
    p_range: String,
    /// Comma-separated: minimax, minimax-direct, quadrature, lax-oleinik.
    #[arg(long, value_delimiter = ',', default_value = "minimax")]
    method: Vec<Method>,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    common: Common,
    /// `sublevel:<r>` or `unit-ball`.
    #[arg(long)]
    region: RegionSpec,
    /// `lo:hi:count`; by default a range on which the plateau is reached.
    #[arg(long, allow_hyphen_values = true)]
    p_range: Option<String>,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    /// Plateau height.
    #[arg(long = "C", default_value_t = 10.0)]
    high: f64,
    /// Floor value.
    #[arg(long = "c", default_value_t = 0.05)]
    low: f64,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, allow_hyphen_values = true)]
    p_range: Option<String>,
    /// Width of the level-0 truncation in the compactly supported variant.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct ValidateArgs {
    /// Comma-separated subset of the suites.
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    /// Also write validate.json here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

enum Failure {
    Config(String),
    Solver(String),
    Sufficiency(String),
}

impl From<HomogError> for Failure {
    fn from(e: HomogError) -> Self {
        use HomogError::*;
        let msg = e.to_string();
        match e.root_cause() {
            SufficiencyViolated { .. } => Failure::Sufficiency(msg),
            InvalidGrid(_) | InvalidField(_) | InvalidSpec(_) | DimensionMismatch { .. }
            | InvalidWidth(_) | InvalidRegion(_) | DeltaTooLarge(_) | InvalidProfile(_)
            | CutoffOverlap(_) | InvalidConfig(_) | DimensionNot1(_) | UnsupportedSpec(_)
            | NotCompactlySupported | CflViolation { .. } | EmptyInput => Failure::Config(msg),
            _ => Failure::Solver(msg),
        }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Ok(v) = std::env::var("HOMOG_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: HOMOG_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(1);
            }
        }
    }
    let result = match cli.command {
        Command::Effective(a) => cmd_effective(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Counterexample(a) => cmd_counterexample(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("solver error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Sufficiency(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn load_spec(name: &str, dim: usize) -> Result<HamiltonianSpec, Failure> {
    let path = Path::new(name);
    if name.ends_with(".json") || path.is_file() {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("reading {}: {e}", path.display())))?;
        Ok(HamiltonianSpec::from_json(&text)?)
    } else {
        Ok(builtin_spec(name, dim)?)
    }
}

fn parse_range(s: &str, dim: usize) -> Result<SampleGrid, Failure> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Failure::Config(format!("p-range must be lo:hi:count, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    Ok(match dim {
        1 => SampleGrid::line(lo, hi, count)?,
        _ => SampleGrid::square(lo, hi, count)?,
    })
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("creating {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Failure::Config(format!("writing {}: {e}", path.display())))
}

fn effective_csv(runs: &[EffectiveHamiltonian]) -> Result<String, Failure> {
    let first = &runs[0];
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = match first.dim() {
        1 => vec!["p".into()],
        _ => vec!["p1".into(), "p2".into()],
    };
    for r in runs {
        header.push(r.method.clone());
        header.push(format!("{}_lower", r.method));
        header.push(format!("{}_upper", r.method));
    }
    let io = |e: csv::Error| Failure::Config(format!("CSV: {e}"));
    w.write_record(&header).map_err(io)?;
    for i in 0..first.len() {
        let mut row: Vec<String> = first.grid.point(i).iter().map(|x| x.to_string()).collect();
        for r in runs {
            row.extend([r.value[i], r.lower[i], r.upper[i]].map(|v| v.to_string()));
        }
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Config(format!("CSV: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
}

fn cmd_effective(a: EffectiveArgs) -> Outcome {
    let spec = load_spec(&a.common.spec, a.common.dim)?;
    let grid = parse_range(&a.p_range, spec.dim())?;
    let config = a.common.solver.config();
    let mut runs = Vec::new();
    for &m in &a.method {
        runs.push(effective_on_grid(&spec, &grid, m, &config)?);
    }
    if runs.is_empty() {
        return Err(Failure::Config("no method given".into()));
    }
    let methods: serde_json::Map<String, serde_json::Value> =
        runs.iter().map(|r| (r.method.clone(), r.to_json_value())).collect();
    let doc = json!({
        "spec_digest": spec.digest(),
        "seed": a.common.seed,
        "methods": methods,
    });
    write(&a.common.out, "effective.json", &serde_json::to_string_pretty(&doc).expect("JSON"))?;
    write(&a.common.out, "effective.csv", &effective_csv(&runs)?)?;
    for r in &runs {
        println!("{:<16} {} samples, max gap {:.3e}", r.method, r.len(), r.max_gap());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_metrics(a: MetricsArgs) -> Outcome {
    let spec = load_spec(&a.common.spec, a.common.dim)?;
    let p_grid = a.p_range.as_deref().map(|s| parse_range(s, spec.dim())).transpose()?;
    let config = MetricsConfig {
        p_grid,
        effective: a.common.solver.config(),
        ..MetricsConfig::default()
    };
    let report = metrics_report(&spec, a.region, &config)?;
    write(&a.common.out, "metrics.json", &report.to_json())?;
    write(&a.common.out, "metrics.csv", &report.to_csv()?)?;
    println!("region       {}", report.region);
    println!("gamma_inf    {:.6}", report.gamma_inf);
    println!("beta0        {:.6}", report.beta0);
    println!("calabi       {:.6}", report.calabi);
    println!("hofer        [{:.6}, {:.6}]", report.hofer_lower, report.hofer_upper);
    for (k, v) in &report.identity_residuals {
        println!("{k:<28} {v:.3e}");
    }
    println!("passed       {}", report.passed);
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_counterexample(a: CounterexampleArgs) -> Outcome {
    let profile = BumpProfile {
        delta: a.delta,
        high: a.high,
        low: a.low,
        order: 2,
    };
    let p_grid = a.p_range.as_deref().map(|s| parse_range(s, a.dim)).transpose()?;
    let config = CounterexampleConfig {
        n: a.dim,
        p_grid,
        effective: a.solver.config(),
        truncation_eps: a.eps,
    };
    let cert = verify_strict_inequality(&profile, &config)?;
    write(&a.out, "certificate.json", &cert.to_json())?;
    print!("{}", cert.summary_table());
    Ok(if cert.verdict { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_validate(a: ValidateArgs) -> Outcome {
    if let Some(bad) = a.only.iter().find(|o| !SUITES.contains(&o.as_str())) {
        return Err(Failure::Config(format!(
            "unknown suite {bad:?}; expected one of {}",
            SUITES.join(", ")
        )));
    }
    let config = SuiteConfig {
        seed: a.seed,
        ..SuiteConfig::default()
    };
    let reports = run_suites(&a.only, &config);
    let passed = reports.iter().all(|r| r.passed);
    let doc = json!({ "passed": passed, "suites": reports });
    let text = serde_json::to_string_pretty(&doc).expect("JSON");
    if let Some(dir) = &a.out {
        write(dir, "validate.json", &text)?;
    }
    println!("{text}");
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(2) })
}
