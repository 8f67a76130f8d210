use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use blendopt::cli::{
    export, generate, ingest, read_curves, read_suppliers, run_experiment, site_refinery, InputPaths, Mode,
    RefineryParams, RunConfig, SyntheticConfig,
};
use blendopt::decentralized::DEFAULT_PATIENCE;
use blendopt::model::ProblemInstance;
use blendopt::{BlendError, Result};

/// Worker threads for the parallel pool.
const THREADS_VAR: &str = "BLENDOPT_THREADS";

#[derive(Parser)]
#[command(name = "blendopt", version, about = "Chance-constrained biomass blending")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Centralized cost and blend per demand level.
    SolveCentralized(RunArgs),
    /// Leader-follower prices, cost and blend per demand level.
    SolveDecentralized(RunArgs),
    /// Paired centralized and decentralized costs per replication.
    Gap(RunArgs),
    /// Risk certificates and a statistical lower bound per demand level.
    Validate(RunArgs),
    /// Pick the refinery site among supplier locations.
    Site(SiteArgs),
    /// Write a synthetic benchmark instance as CSV files.
    GenSynthetic(GenArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Supplier file (`id,x,y` or `id,distance`). Without it the built-in
    /// synthetic benchmark is used.
    #[arg(long, requires = "curves")]
    suppliers: Option<PathBuf>,
    /// Biomass file; defaults to the bundled table.
    #[arg(long)]
    biomass: Option<PathBuf>,
    /// Supply-curve file (`supplier,biomass,bracket,lower,upper,price`).
    #[arg(long)]
    curves: Option<PathBuf>,
    /// Seed of the synthetic benchmark.
    #[arg(long, default_value_t = SyntheticConfig::default().seed)]
    synthetic_seed: u64,
    #[arg(long, default_value_t = SyntheticConfig::default().suppliers)]
    synthetic_suppliers: usize,
    /// Allowable ash content, wt.%.
    #[arg(long, default_value_t = 1.0)]
    ash_limit: f64,
    /// Thermal requirement, 10^9 BTU/year (overridden per demand level).
    #[arg(long, default_value_t = 3838.0)]
    tau: f64,
    #[arg(long, default_value_t = 0.2)]
    beta: f64,
    #[arg(long, default_value_t = 0.2)]
    gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    beta_hat: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma_hat: f64,
}

impl InstanceArgs {
    fn load(&self) -> Result<ProblemInstance> {
        let params = RefineryParams {
            ash_limit: self.ash_limit,
            thermal_gbtu: self.tau,
            risk_ash: self.beta,
            risk_thermal: self.gamma,
            inner_risk_ash: self.beta_hat,
            inner_risk_thermal: self.gamma_hat,
        };
        match (&self.suppliers, &self.curves) {
            (Some(s), Some(c)) => ingest(
                &InputPaths { suppliers: s.clone(), biomass: self.biomass.clone(), curves: c.clone() },
                &params,
            ),
            _ => {
                let cfg = SyntheticConfig {
                    seed: self.synthetic_seed,
                    suppliers: self.synthetic_suppliers,
                    ..SyntheticConfig::default()
                };
                generate(&cfg, params.to_spec()?)
            }
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Demand levels in MDT/year, comma separated. Empty runs once at --tau.
    #[arg(long, value_delimiter = ',', default_values_t = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8])]
    demand: Vec<f64>,
    /// Run once at --tau instead of sweeping demand.
    #[arg(long, conflicts_with = "demand")]
    no_sweep: bool,
    /// Scenarios per sampled problem (N).
    #[arg(short = 'n', long, default_value_t = 50)]
    samples: usize,
    /// Check-sample size for risk certificates (N').
    #[arg(long, default_value_t = 1000)]
    check_samples: usize,
    /// Replications (M).
    #[arg(short = 'm', long, default_value_t = 10)]
    replications: usize,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Non-improving heuristic steps tolerated.
    #[arg(long, default_value_t = DEFAULT_PATIENCE)]
    patience: usize,
    /// Initial upper bound of the ash penalty search.
    #[arg(long)]
    lambda_upper: Option<f64>,
    /// Initial upper bound of the thermal penalty search.
    #[arg(long)]
    mu_upper: Option<f64>,
    /// Also write every sampled scenario set.
    #[arg(long)]
    dump_scenarios: bool,
    #[arg(short, long, default_value = "out")]
    output: PathBuf,
}

#[derive(Args)]
struct SiteArgs {
    /// Supplier file with `x` and `y` columns.
    #[arg(long)]
    suppliers: PathBuf,
    /// Supply curves; total availability weights each supplier. Equal
    /// weights without it.
    #[arg(long)]
    curves: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = SyntheticConfig::default().suppliers)]
    suppliers: usize,
    #[arg(long, default_value_t = SyntheticConfig::default().brackets)]
    brackets: usize,
    #[arg(long, default_value_t = SyntheticConfig::default().seed)]
    seed: u64,
    #[arg(short, long, default_value = "synthetic")]
    output: PathBuf,
}

fn run(mode: Mode, args: &RunArgs) -> Result<()> {
    let instance = args.instance.load()?;
    let config = RunConfig {
        mode,
        demands: if args.no_sweep { Vec::new() } else { args.demand.clone() },
        samples: args.samples,
        check_samples: args.check_samples,
        replications: args.replications,
        delta: args.delta,
        seed: args.seed,
        patience: args.patience,
        lambda_upper: args.lambda_upper,
        mu_upper: args.mu_upper,
        dump_scenarios: args.dump_scenarios,
        output: args.output.clone(),
    };
    let summary = run_experiment(&instance, &config)?;
    println!("{}", summary.table.display());
    Ok(())
}

fn site(args: &SiteArgs) -> Result<()> {
    let name = args.suppliers.display().to_string();
    let records = read_suppliers(&name, std::fs::File::open(&args.suppliers)?)?;
    let placed: Vec<_> = records.iter().filter(|r| r.coords.is_some()).collect();
    if placed.is_empty() {
        return Err(BlendError::Argument(format!("{name} has no coordinates")));
    }
    let weights: Vec<f64> = match &args.curves {
        None => vec![1.0; placed.len()],
        Some(path) => {
            let curves = read_curves(&path.display().to_string(), std::fs::File::open(path)?)?;
            placed
                .iter()
                .map(|r| curves.iter().filter(|((s, _), _)| *s == r.id).map(|(_, c)| c.availability()).sum())
                .collect()
        }
    };
    let coords: Vec<(f64, f64)> = placed.iter().map(|r| r.coords.unwrap()).collect();
    let best = site_refinery(&coords, &weights)?;
    println!("{}\t{}\t{}", placed[best].id, coords[best].0, coords[best].1);
    Ok(())
}

fn gen_synthetic(args: &GenArgs) -> Result<()> {
    let cfg = SyntheticConfig {
        suppliers: args.suppliers,
        brackets: args.brackets,
        seed: args.seed,
        ..SyntheticConfig::default()
    };
    let params = RefineryParams {
        ash_limit: 1.0,
        thermal_gbtu: 3838.0,
        risk_ash: 0.2,
        risk_thermal: 0.2,
        inner_risk_ash: 0.1,
        inner_risk_thermal: 0.1,
    };
    let instance = generate(&cfg, params.to_spec()?)?;
    let paths = export(&instance, &args.output)?;
    println!("{}", paths.suppliers.display());
    println!("{}", paths.biomass.unwrap_or_default().display());
    println!("{}", paths.curves.display());
    Ok(())
}

fn configure_pool() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let threads: usize = raw
        .parse()
        .map_err(|_| BlendError::Argument(format!("{THREADS_VAR}=`{raw}` is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| BlendError::Resource(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_pool().and_then(|_| match &cli.command {
        Command::SolveCentralized(a) => run(Mode::Centralized, a),
        Command::SolveDecentralized(a) => run(Mode::Decentralized, a),
        Command::Gap(a) => run(Mode::Gap, a),
        Command::Validate(a) => run(Mode::Validate, a),
        Command::Site(a) => site(a),
        Command::GenSynthetic(a) => gen_synthetic(a),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
