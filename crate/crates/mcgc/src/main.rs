use clap::{Args, Parser, Subcommand};
use mcgc::error::McgcError;
use mcgc::graph::FilterParams;
use mcgc::io::{self, SbmConfig};
use mcgc::metrics;
use mcgc::model::MultiViewDataset;
use mcgc::pipeline::{self, ConfigEcho, RunReport, Timings};
use mcgc::solver::{SolverConfig, Variant};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "mcgc", version, about = "Multi-view contrastive graph clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on a dataset and write a JSON report
    Run(RunArgs),
    /// Run every solver variant with a shared seed and emit a comparison table
    Ablate(AblateArgs),
    /// Cartesian parameter sweep over m, s and alpha
    Sweep(SweepArgs),
    /// Generate a synthetic multi-view attributed SBM dataset
    Generate(GenerateArgs),
    /// Evaluate predicted labels against ground truth
    Eval(EvalArgs),
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Trade-off parameter (no universal default; must be chosen per dataset)
    #[arg(long)]
    alpha: f64,
    /// Graph filter order
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Graph filter strength
    #[arg(long, default_value_t = 0.5)]
    s: f64,
    /// Neighbor count for the contrastive term
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Weight-smoothing exponent (must be negative)
    #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
    gamma: f64,
    /// Adam learning rate
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 200)]
    max_epochs: usize,
    /// Relative objective-change stopping tolerance
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Adam steps per outer epoch
    #[arg(long, default_value_t = 50)]
    inner_steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverFlags {
    fn to_config(&self, variant: Variant) -> SolverConfig {
        SolverConfig {
            alpha: self.alpha,
            gamma: self.gamma,
            learning_rate: self.lr,
            max_epochs: self.max_epochs,
            tol: self.tol,
            inner_steps: self.inner_steps,
            seed: self.seed,
            variant,
            filter: FilterParams {
                order: self.m,
                strength: self.s,
            },
            k: self.k,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Dataset directory or manifest.json path
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
    /// Solver variant: full, shared-neighbors, no-contrastive, no-filter, single-view:V
    #[arg(long, default_value = "full")]
    variant: String,
    /// Report output path (JSON)
    #[arg(long)]
    out: PathBuf,
    /// Optional objective-trace CSV path
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
    /// Combined JSON table output path
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV comparison table
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Worker threads for independent cells (0 = all cores)
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated filter orders
    #[arg(long, default_value = "2")]
    m: String,
    /// Comma-separated filter strengths
    #[arg(long, default_value = "0.5")]
    s: String,
    /// Comma-separated trade-off values
    #[arg(long)]
    alpha: String,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
    gamma: f64,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 200)]
    max_epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 50)]
    inner_steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Summary CSV output path
    #[arg(long)]
    out: PathBuf,
    /// Optional directory for per-cell JSON reports
    #[arg(long)]
    reports: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct GenerateArgs {
    /// Comma-separated block sizes
    #[arg(long)]
    blocks: String,
    /// Number of views
    #[arg(long, default_value_t = 2)]
    views: usize,
    /// Within-block edge probability (one value or one per view)
    #[arg(long, default_value = "0.5")]
    p_in: String,
    /// Between-block edge probability (one value or one per view)
    #[arg(long, default_value = "0.02")]
    p_out: String,
    /// Feature dimension (one value or one per view)
    #[arg(long, default_value = "8")]
    feature_dim: String,
    /// Euclidean distance between block feature means
    #[arg(long, default_value_t = 3.0)]
    separation: f64,
    #[arg(long, default_value_t = 1.0)]
    noise_std: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Ground-truth label file (one integer per line)
    #[arg(long)]
    truth: PathBuf,
    /// Predicted label file
    #[arg(long)]
    pred: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("MCGC_LOG", "error"),
    )
    .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };

    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Ablate(args) => cmd_ablate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Eval(args) => cmd_eval(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &McgcError) -> u8 {
    match e {
        McgcError::Config(_) => EXIT_USAGE,
        McgcError::Divergence { .. } | McgcError::Numerical(_) | McgcError::Eigen(_) => {
            EXIT_NUMERIC
        }
        _ => EXIT_DATA,
    }
}

fn parse_variant(text: &str, num_views: usize) -> Result<Variant, McgcError> {
    let norm = text.replace('_', "-");
    match norm.as_str() {
        "full" => Ok(Variant::Full),
        "shared-neighbors" => Ok(Variant::SharedNeighbors),
        "no-contrastive" => Ok(Variant::NoContrastive),
        "no-filter" => Ok(Variant::NoFilter),
        other => {
            if let Some(idx) = other.strip_prefix("single-view:") {
                let v: usize = idx
                    .parse()
                    .map_err(|_| McgcError::Config(format!("bad view index `{idx}`")))?;
                if v >= num_views {
                    return Err(McgcError::Config(format!(
                        "single_view index {v} out of range for {num_views} views"
                    )));
                }
                Ok(Variant::SingleView(v))
            } else {
                Err(McgcError::Config(format!("unknown variant `{text}`")))
            }
        }
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, flag: &str) -> Result<Vec<T>, McgcError> {
    let values: Result<Vec<T>, _> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<T>())
        .collect();
    match values {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(McgcError::Config(format!("--{flag} needs a non-empty comma-separated list"))),
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), McgcError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn error_report(config: &SolverConfig, e: &McgcError) -> RunReport {
    RunReport {
        variant: config.variant.name(),
        config: ConfigEcho::from(config),
        objective_trace: Vec::new(),
        lambda: Vec::new(),
        labels: Vec::new(),
        timing: Timings::default(),
        metrics: None,
        error: Some(e.to_string()),
    }
}

fn cmd_run(args: RunArgs) -> Result<(), McgcError> {
    let dataset = io::load_dataset(&args.data)?;
    let variant = parse_variant(&args.variant, dataset.num_views())?;
    let config = args.solver.to_config(variant);
    match pipeline::run(&dataset, &config) {
        Ok(report) => {
            write_json(&report, &args.out)?;
            if let Some(trace_path) = &args.trace {
                std::fs::write(trace_path, pipeline::trace_csv(&report))?;
            }
            println!("report written to {}", args.out.display());
            Ok(())
        }
        Err(e) => {
            // serialize the failure into the report before exiting nonzero
            write_json(&error_report(&config, &e), &args.out)?;
            Err(e)
        }
    }
}

fn run_cells(
    dataset: &MultiViewDataset,
    configs: &[SolverConfig],
    jobs: usize,
) -> Vec<RunReport> {
    let run_one = |config: &SolverConfig| match pipeline::run(dataset, config) {
        Ok(report) => report,
        Err(e) => error_report(config, &e),
    };
    #[cfg(feature = "parallel")]
    if jobs != 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool");
        return pool.install(|| configs.par_iter().map(run_one).collect());
    }
    let _ = jobs;
    configs.iter().map(run_one).collect()
}

fn metric_csv_fields(report: &RunReport) -> String {
    match &report.metrics {
        Some(m) => format!("{},{},{},{}", m.acc, m.nmi, m.ari, m.f1),
        None => ",,,".to_string(),
    }
}

fn cmd_ablate(args: AblateArgs) -> Result<(), McgcError> {
    let dataset = io::load_dataset(&args.data)?;
    let mut variants = vec![
        Variant::Full,
        Variant::SharedNeighbors,
        Variant::NoContrastive,
        Variant::NoFilter,
    ];
    for v in 0..dataset.num_views() {
        variants.push(Variant::SingleView(v));
    }
    let configs: Vec<SolverConfig> = variants
        .iter()
        .map(|&variant| args.solver.to_config(variant))
        .collect();
    let reports = run_cells(&dataset, &configs, args.jobs);

    write_json(&reports, &args.out)?;
    if let Some(csv_path) = &args.csv {
        let mut csv = String::from("variant,acc,nmi,ari,f1,final_objective,epochs,error\n");
        for report in &reports {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                report.variant,
                metric_csv_fields(report),
                report.objective_trace.last().map_or(String::new(), |o| o.to_string()),
                report.objective_trace.len().saturating_sub(1),
                report.error.clone().unwrap_or_default(),
            ));
        }
        std::fs::write(csv_path, csv)?;
    }
    println!("ablation table written to {}", args.out.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), McgcError> {
    let ms: Vec<usize> = parse_list(&args.m, "m")?;
    let ss: Vec<f64> = parse_list(&args.s, "s")?;
    let alphas: Vec<f64> = parse_list(&args.alpha, "alpha")?;
    let dataset = io::load_dataset(&args.data)?;

    let mut cells = Vec::new();
    for &m in &ms {
        for &s in &ss {
            for &alpha in &alphas {
                cells.push(SolverConfig {
                    alpha,
                    gamma: args.gamma,
                    learning_rate: args.lr,
                    max_epochs: args.max_epochs,
                    tol: args.tol,
                    inner_steps: args.inner_steps,
                    seed: args.seed,
                    variant: Variant::Full,
                    filter: FilterParams {
                        order: m,
                        strength: s,
                    },
                    k: args.k,
                });
            }
        }
    }
    let reports = run_cells(&dataset, &cells, args.jobs);

    let mut csv = String::from("m,s,alpha,acc,nmi,ari,f1,final_objective,epochs,error\n");
    for (config, report) in cells.iter().zip(&reports) {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            config.filter.order,
            config.filter.strength,
            config.alpha,
            metric_csv_fields(report),
            report.objective_trace.last().map_or(String::new(), |o| o.to_string()),
            report.objective_trace.len().saturating_sub(1),
            report.error.clone().unwrap_or_default(),
        ));
    }
    std::fs::write(&args.out, csv)?;

    if let Some(dir) = &args.reports {
        std::fs::create_dir_all(dir)?;
        for (config, report) in cells.iter().zip(&reports) {
            let name = format!(
                "m{}_s{}_alpha{}.json",
                config.filter.order, config.filter.strength, config.alpha
            );
            write_json(report, &dir.join(name))?;
        }
    }
    println!("sweep summary written to {}", args.out.display());
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<(), McgcError> {
    let blocks: Vec<usize> = parse_list(&args.blocks, "blocks")?;
    let broadcast = |text: &str, flag: &str| -> Result<Vec<f64>, McgcError> {
        let list: Vec<f64> = parse_list(text, flag)?;
        match list.len() {
            1 => Ok(vec![list[0]; args.views]),
            n if n == args.views => Ok(list),
            _ => Err(McgcError::Config(format!(
                "--{flag} needs one value or one per view"
            ))),
        }
    };
    let p_in = broadcast(&args.p_in, "p-in")?;
    let p_out = broadcast(&args.p_out, "p-out")?;
    let dims: Vec<usize> = {
        let list: Vec<usize> = parse_list(&args.feature_dim, "feature-dim")?;
        match list.len() {
            1 => vec![list[0]; args.views],
            n if n == args.views => list,
            _ => {
                return Err(McgcError::Config(
                    "--feature-dim needs one value or one per view".into(),
                ))
            }
        }
    };

    let config = SbmConfig {
        blocks,
        edge_probs: p_in.into_iter().zip(p_out).collect(),
        feature_dims: dims,
        separation: args.separation,
        noise_std: args.noise_std,
        seed: args.seed,
    };
    let dataset = io::generate_sbm(&config)?;
    let manifest = io::save_dataset(&dataset, &args.out)?;
    println!("{}", manifest.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), McgcError> {
    let truth = io::read_labels(&args.truth)?;
    let pred = io::read_labels(&args.pred)?;
    let report = metrics::evaluate(&truth, &pred)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("metrics serialize"));
    Ok(())
}
