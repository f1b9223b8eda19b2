use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use convexmix::signals::{read_trajectory, write_trajectory};
use convexmix::Mode;
use convexmix_cli::audit::{audit, render_text, AuditSettings, Triple};
use convexmix_cli::config::{pick, Config};
use convexmix_cli::experiment::{parse_window, run_experiment, Rate, RunSettings, Source};
use convexmix_cli::plot::{render_svg, PlotOptions};
use convexmix_cli::sweep::{sweep, write_sweep};
use convexmix_cli::verify::{verify, VerifySettings};
use convexmix_cli::{inequality_tolerance, CliError, Result};

#[derive(Parser)]
#[command(name = "convexmix", version, about = "Adaptive convex mixture of two predictors: experiments and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the combiner on a sequence and write trajectory and summary.
    Run(RunArgs),
    /// Seeded property suites for the per-step inequality and friends.
    Verify(VerifyArgs),
    /// Necessary conditions, printed constructions and a violation search.
    LemmaAudit(AuditArgs),
    /// SVG chart of normalized regret and bound from a trajectory file.
    Plot(PlotArgs),
    /// Repeat `run` over several learning rates.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct SourceArgs {
    /// Reference sequence, 1 or 2.
    #[arg(long)]
    case: Option<u8>,
    /// CSV with header y,yhat1,yhat2.
    #[arg(long)]
    input: Option<PathBuf>,
    /// JSON sequence description.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, conflicts_with = "eps")]
    mu: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    lambda_plus: Option<f64>,
    #[arg(long)]
    ybound: Option<f64>,
    #[arg(long)]
    mode: Option<Mode>,
    /// Initial weight instead of 1/2.
    #[arg(long)]
    lambda_init: Option<f64>,
    /// JSON file whose keys mirror these flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Windowed regret over steps A..=B (1-based).
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, conflicts_with = "eps")]
    mu: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    ybound: Option<f64>,
    #[arg(long)]
    lambda_plus: Option<f64>,
    /// Replace the derived `a` (to exercise failure reporting).
    #[arg(long)]
    override_a: Option<f64>,
    /// Grid step for the oracle-agreement suite.
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, conflicts_with_all = ["a", "b", "mu"])]
    eps: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    ybound: Option<f64>,
    #[arg(long)]
    lambda_plus: Option<f64>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Trajectory CSV written by `run`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "regret.svg")]
    out: PathBuf,
    #[arg(long)]
    logx: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, value_delimiter = ',')]
    mu_list: Vec<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_settings(args: &SourceArgs, cfg: &Config, window: Option<String>) -> Result<RunSettings> {
    let case = pick(args.case, &cfg.case);
    let input = pick(args.input.clone(), &cfg.input);
    let spec = pick(args.spec.clone(), &cfg.spec);
    let source = match (case, input, spec) {
        (Some(c), None, None) => Source::Case(c),
        (None, Some(p), None) => Source::Input(p),
        (None, None, Some(p)) => Source::Spec(p),
        _ => return Err(CliError::usage("give exactly one of --case, --input, --spec")),
    };
    // a flag for one rate form displaces a config value for the other
    let rate = match (args.mu, args.eps) {
        (Some(mu), _) => Some(Rate::Mu(mu)),
        (_, Some(eps)) => Some(Rate::Eps(eps)),
        _ => match (cfg.mu, cfg.eps) {
            (Some(_), Some(_)) => return Err(CliError::usage("config sets both mu and eps")),
            (Some(mu), None) => Some(Rate::Mu(mu)),
            (None, Some(eps)) => Some(Rate::Eps(eps)),
            (None, None) => None,
        },
    };
    let window = pick(window, &cfg.window).map(|w| parse_window(&w)).transpose()?;
    Ok(RunSettings {
        source,
        n: pick(args.n, &cfg.n),
        rate,
        lambda_plus: pick(args.lambda_plus, &cfg.lambda_plus),
        y_bound: pick(args.ybound, &cfg.ybound),
        mode: pick(args.mode, &cfg.mode),
        lambda_init: pick(args.lambda_init, &cfg.lambda_init),
        window,
    })
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let cfg = Config::load_opt(args.source.config.as_deref())?;
    let settings = run_settings(&args.source, &cfg, args.window)?;
    let out = pick(args.out, &cfg.out).unwrap_or_else(|| "trajectory.csv".into());
    let summary_path = pick(args.summary, &cfg.summary).unwrap_or_else(|| "summary.json".into());

    let result = run_experiment(&settings)?;
    convexmix_cli::ensure_parent(&out)?;
    write_trajectory(&result.rows, &out)?;
    convexmix_cli::write_json(&summary_path, &result.summary)?;
    let s = &result.summary;
    println!(
        "n = {}, final lambda = {:.6}, beta_o = {:.6}, regret = {:.6}, bound = {:.6}, out-of-range steps = {}",
        s.n, s.final_lambda, s.best_beta, s.regret, s.bound_total, s.out_of_range_steps
    );
    if let Some(w) = &s.window {
        println!("window {}:{}: regret = {:.6}, beta = {:.6}", w.start, w.end, w.regret, w.best_beta);
    }
    if !s.theorem_valid {
        eprintln!("note: {} steps ran outside [lambda+, 1-lambda+]; the bound is not guaranteed", s.out_of_range_steps);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let cfg = Config::load_opt(args.config.as_deref())?;
    let d = VerifySettings::default();
    let rate = match (args.mu, args.eps) {
        (Some(mu), _) => Rate::Mu(mu),
        (_, Some(eps)) => Rate::Eps(eps),
        _ => match (cfg.mu, cfg.eps) {
            (Some(_), Some(_)) => return Err(CliError::usage("config sets both mu and eps")),
            (Some(mu), None) => Rate::Mu(mu),
            (None, Some(eps)) => Rate::Eps(eps),
            (None, None) => d.rate,
        },
    };
    let settings = VerifySettings {
        trials: pick(args.trials, &cfg.trials).unwrap_or(d.trials),
        n: pick(args.n, &cfg.n).unwrap_or(d.n),
        seed: pick(args.seed, &cfg.seed).unwrap_or(d.seed),
        rate,
        y_bound: pick(args.ybound, &cfg.ybound).unwrap_or(d.y_bound),
        lambda_plus: pick(args.lambda_plus, &cfg.lambda_plus).unwrap_or(d.lambda_plus),
        override_a: pick(args.override_a, &cfg.override_a),
        resolution: pick(args.resolution, &cfg.resolution).unwrap_or(d.resolution),
        tolerance: inequality_tolerance()?,
    };
    let out = pick(args.out, &cfg.out).unwrap_or_else(|| "verify_report.json".into());
    let report = verify(&settings)?;
    convexmix_cli::write_json(&out, &report)?;
    for s in &report.suites {
        println!("{:<20} {:>10} checks {:>8} failures", s.name, s.checks, s.failures);
    }
    println!(
        "tolerance {:e}; {} out-of-range steps skipped; {}",
        report.tolerance,
        report.skipped_out_of_range_steps,
        if report.passed { "all suites passed" } else { "FAILED" }
    );
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_audit(args: AuditArgs) -> Result<ExitCode> {
    let cfg = Config::load_opt(args.config.as_deref())?;
    let (a, b, mu) = (pick(args.a, &cfg.a), pick(args.b, &cfg.b), pick(args.mu, &cfg.mu));
    let triple = match (pick(args.eps, &cfg.eps), a, b, mu) {
        (Some(eps), None, None, None) => Triple::Eps(eps),
        (None, Some(a), Some(b), Some(mu)) => Triple::Explicit { a, b, mu },
        (None, None, None, None) => Triple::Eps(0.1),
        _ => return Err(CliError::usage("give either --eps or all of --a, --b, --mu")),
    };
    let settings = AuditSettings {
        triple,
        y_bound: pick(args.ybound, &cfg.ybound).unwrap_or(1.0),
        lambda_plus: pick(args.lambda_plus, &cfg.lambda_plus).unwrap_or(0.08),
        budget: pick(args.budget, &cfg.budget).unwrap_or(10_000),
        seed: pick(args.seed, &cfg.seed).unwrap_or(0),
        tolerance: inequality_tolerance()?,
    };
    let out = pick(args.out, &cfg.out).unwrap_or_else(|| "lemma_audit.json".into());
    let outcome = audit(&settings)?;
    convexmix_cli::write_json(&out, &outcome)?;
    print!("{}", render_text(&outcome));
    Ok(if outcome.violations_found() { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn cmd_plot(args: PlotArgs) -> Result<ExitCode> {
    let rows = read_trajectory(&args.input)?;
    let svg = render_svg(&rows, PlotOptions { logx: args.logx });
    convexmix_cli::write_text(&args.out, &svg)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let cfg = Config::load_opt(args.source.config.as_deref())?;
    if args.source.mu.is_some() || args.source.eps.is_some() {
        return Err(CliError::usage("sweep takes its rates from --mu-list"));
    }
    let mut base = run_settings(&args.source, &Config { mu: None, eps: None, ..cfg.clone() }, None)?;
    base.rate = None;
    let mus = if args.mu_list.is_empty() {
        cfg.mu_list.clone().unwrap_or_default()
    } else {
        args.mu_list
    };
    let dir = pick(args.out, &cfg.out).unwrap_or_else(|| "sweep".into());
    let summaries = sweep(&base, &mus)?;
    let paths = write_sweep(Path::new(&dir), &summaries)?;
    for s in &summaries {
        println!(
            "mu = {:<10} regret = {:>12.6} bound = {:>12.6} bound/n = {:.6}",
            s.mu, s.regret, s.bound_total, s.bound_normalized
        );
    }
    println!("wrote {} files to {}", paths.len(), dir.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::LemmaAudit(a) => cmd_audit(a),
        Command::Plot(a) => cmd_plot(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
