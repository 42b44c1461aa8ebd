//! `beigen` command-line interface.
//!
//! Exit codes: 0 when everything converged or passed, 2 when some trials or
//! checks failed, 1 for usage, parse or configuration errors.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use beigen::{
    enumerate_n2, enumerate_n3, fd_check_gradient, fd_check_hessian, gen_tensor, random_feasible,
    solve, GenSpec, Objective, Sense, SolveResult, TensorFamily,
};
use beigen_cli::{
    render_table, run_trials, write_jsonl, write_tensor_file, CliError, Overrides, RunConfig,
};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "beigen",
    version,
    about = "B-eigenpairs of real symmetric tensors by a feasible conjugate gradient method"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single solve from a seeded random feasible start
    Solve(SolveArgs),
    /// Run a batch of seeded trials; emit JSONL records and a cluster summary
    Bench(BenchArgs),
    /// Finite-difference checks of the gradient and Hessian on random points
    Check(CheckArgs),
    /// Enumerate eigenpairs of a 2- or 3-dimensional instance
    Oracle(OracleArgs),
    /// Generate a tensor instance and write it as a JSON entry file
    Gen(GenArgs),
}

#[derive(Args)]
struct Common {
    /// Path to the JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Override the configured RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the optimization sense: minimize | maximize
    #[arg(long, value_parser = parse_sense)]
    sense: Option<Sense>,
    /// Override the residual tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Override the iteration cap
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Write the per-iteration trace (k, lambda, grad norm, residual, alpha) as CSV
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Override the configured number of trials
    #[arg(long)]
    trials: Option<usize>,
    /// Write JSONL records here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the summary as JSON to this path
    #[arg(long)]
    summary_json: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    /// Number of random feasible points to test
    #[arg(long, default_value_t = 5)]
    points: usize,
    /// Finite-difference step
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    /// Curve-scan grid for 2-dimensional instances
    #[arg(long, default_value_t = 2048)]
    grid: usize,
    /// Multi-start count for 3-dimensional instances
    #[arg(long, default_value_t = 1000)]
    starts: usize,
    /// Print the eigenpairs as JSON instead of a table
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenArgs {
    /// Tensor family: fixed33 | fixed43 | sinsum | randsym | arctansum | randsum
    #[arg(long, value_parser = parse_family)]
    family: TensorFamily,
    /// Tensor order (not required for the fixed families)
    #[arg(long, default_value_t = 0)]
    order: usize,
    /// Tensor dimension (not required for the fixed families)
    #[arg(long, default_value_t = 0)]
    dim: usize,
    /// Seed for the random families
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path
    #[arg(long)]
    out: PathBuf,
}

fn parse_sense(s: &str) -> Result<Sense, String> {
    match s.to_ascii_lowercase().as_str() {
        "min" | "minimize" => Ok(Sense::Minimize),
        "max" | "maximize" => Ok(Sense::Maximize),
        other => Err(format!("unknown sense '{other}'")),
    }
}

fn parse_family(s: &str) -> Result<TensorFamily, String> {
    match s.to_ascii_lowercase().as_str() {
        "fixed33" => Ok(TensorFamily::Fixed33),
        "fixed43" => Ok(TensorFamily::Fixed43),
        "sinsum" => Ok(TensorFamily::SinSum),
        "randsym" => Ok(TensorFamily::RandSym),
        "arctansum" => Ok(TensorFamily::ArctanSum),
        "randsum" => Ok(TensorFamily::RandSum),
        other => Err(format!("unknown tensor family '{other}'")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> beigen_cli::Result<u8> {
    match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Check(args) => cmd_check(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Gen(args) => cmd_gen(args),
    }
}

fn load_with_overrides(common: &Common, trials: Option<usize>) -> beigen_cli::Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    cfg.apply(&Overrides {
        trials,
        seed: common.seed,
        sense: common.sense,
        tol: common.tol,
        max_iter: common.max_iter,
    });
    cfg.validate()?;
    Ok(cfg)
}

fn build_objective(cfg: &RunConfig) -> beigen_cli::Result<Objective> {
    let (tensor, bform) = cfg.build_instance()?;
    Ok(Objective::new(tensor, bform, cfg.sense)?)
}

fn cmd_solve(args: SolveArgs) -> beigen_cli::Result<u8> {
    let cfg = load_with_overrides(&args.common, None)?;
    let objective = build_objective(&cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let x0 = random_feasible(objective.bform(), objective.dim(), &mut rng)?;
    let result = solve(&objective, &x0, &cfg.solver)?;

    print_solve_result(&result);
    if let Some(path) = args.trace {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "k,lambda,grad_norm,res,alpha")?;
        for rec in &result.trace {
            writeln!(
                out,
                "{},{:.17e},{:.17e},{:.17e},{:.17e}",
                rec.k, rec.lambda, rec.grad_norm, rec.residual, rec.alpha
            )?;
        }
    }
    Ok(if result.converged { 0 } else { 2 })
}

fn print_solve_result(result: &SolveResult) {
    println!("converged:  {}", result.converged);
    println!("lambda:     {:.10}", result.eigenpair.lambda);
    println!("residual:   {:.3e}", result.residual());
    println!("iterations: {}", result.iterations);
    println!("backtracks: {}", result.total_backtracks);
    let x = &result.eigenpair.x;
    if x.len() <= 12 {
        let coords: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
        println!("x:          [{}]", coords.join(", "));
    } else {
        let coords: Vec<String> = x.iter().take(6).map(|v| format!("{v:.6}")).collect();
        println!("x:          [{}, ...] ({} components)", coords.join(", "), x.len());
    }
}

fn cmd_bench(args: BenchArgs) -> beigen_cli::Result<u8> {
    let cfg = load_with_overrides(&args.common, args.trials)?;
    let output = run_trials(&cfg)?;

    let table = render_table(&output.summary);
    match &args.out {
        Some(path) => {
            write_jsonl(&output.records, BufWriter::new(File::create(path)?))?;
            print!("{table}");
        }
        None => {
            let stdout = std::io::stdout();
            write_jsonl(&output.records, stdout.lock())?;
            // Keep stdout pure JSONL; the human summary goes to stderr.
            eprint!("{table}");
        }
    }
    if let Some(path) = args.summary_json {
        std::fs::write(path, serde_json::to_string_pretty(&output.summary)?)?;
    }
    Ok(if output.summary.suc == output.summary.trials { 0 } else { 2 })
}

fn cmd_check(args: CheckArgs) -> beigen_cli::Result<u8> {
    let cfg = load_with_overrides(&args.common, None)?;
    let objective = build_objective(&cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst_grad: f64 = 0.0;
    let mut worst_hess: f64 = 0.0;
    println!("{:>6} {:>14} {:>14}", "point", "grad err", "hess err");
    for p in 0..args.points {
        let x = random_feasible(objective.bform(), objective.dim(), &mut rng)?;
        let g = fd_check_gradient(&objective, &x, args.step)?;
        let h = fd_check_hessian(&objective, &x, args.step)?;
        println!("{p:>6} {g:>14.3e} {h:>14.3e}");
        worst_grad = worst_grad.max(g);
        worst_hess = worst_hess.max(h);
    }
    let pass = worst_grad <= 1e-5 && worst_hess <= 1e-4;
    println!(
        "worst: grad {worst_grad:.3e} (tol 1e-5), hess {worst_hess:.3e} (tol 1e-4) -> {}",
        if pass { "pass" } else { "FAIL" }
    );
    Ok(if pass { 0 } else { 2 })
}

fn cmd_oracle(args: OracleArgs) -> beigen_cli::Result<u8> {
    let cfg = load_with_overrides(&args.common, None)?;
    let objective = build_objective(&cfg)?;
    let set = match objective.dim() {
        2 => enumerate_n2(&objective, args.grid)?,
        3 => enumerate_n3(&objective, args.starts, cfg.seed)?,
        n => {
            return Err(CliError::Config(format!(
                "eigenpair enumeration supports dimensions 2 and 3, got {n}"
            )))
        }
    };
    if args.json {
        #[derive(serde::Serialize)]
        struct PairOut {
            lambda: f64,
            res: f64,
            x: Vec<f64>,
        }
        let pairs: Vec<PairOut> = set
            .pairs()
            .iter()
            .map(|p| PairOut {
                lambda: p.lambda,
                res: p.residual,
                x: p.x.iter().copied().collect(),
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&pairs)?);
    } else {
        println!("{} eigenpairs", set.len());
        println!("{:>14} {:>12}  x", "lambda", "res");
        for p in set.pairs() {
            let coords: Vec<String> = p.x.iter().map(|v| format!("{v:+.6}")).collect();
            println!("{:>14.8} {:>12.3e}  [{}]", p.lambda, p.residual, coords.join(", "));
        }
    }
    Ok(0)
}

fn cmd_gen(args: GenArgs) -> beigen_cli::Result<u8> {
    let spec = GenSpec::new(args.family, args.order, args.dim, args.seed);
    let tensor = gen_tensor(&spec)?;
    write_tensor_file(&tensor, &args.out)?;
    eprintln!(
        "wrote order-{} dim-{} tensor ({} unique entries) to {}",
        tensor.order(),
        tensor.dim(),
        tensor.unique_entries().count(),
        args.out.display()
    );
    Ok(0)
}
