//! Command-line front end: computes water filling allocations, AVC
//! capacities, symmetrizability reports, Szego tables, and jamming
//! simulations, emitting a JSON envelope (or plot-ready CSV).
//!
//! Exit codes: 0 success, 2 parse/validation/usage error, 3 solver
//! non-convergence.

mod output;

use avcap_core::discrete::{
    deterministic_capacity_with, grid_oracle, min_symm_cost, random_capacity_with,
    SolverOptions, SymmCost,
};
use avcap_core::fading::{fading_det_capacity, fading_random_capacity};
use avcap_core::model::{spec_from_json, ChannelSpec, SpecKind};
use avcap_core::sim::{simulate, JammerStrategy, SimConfig};
use avcap_core::spectral::{
    autocorr_from_psd, colored_capacity, freq_double_waterfill, szego_convergence, DEFAULT_GRID,
};
use avcap_core::waterfill::{
    capacity_closed_form, deterministic_code_capacity_product, double_waterfill, scalar_capacity,
    verify_kkt,
};
use avcap_core::{Error, LogBase};
use clap::{Args, Parser, Subcommand, ValueEnum};
use output::{digest, float_value, fmt_csv, Envelope};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "avcap", version, about = "Capacities and power allocations for arbitrarily varying channels")]
struct Cli {
    /// Logarithm base for reported capacities.
    #[arg(long, global = true, default_value = "2")]
    log_base: LogBaseArg,
    /// Tolerance for the optimality report attached to allocations.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for solver restarts.
    #[arg(long, global = true, default_value_t = 0xA5C1)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogBaseArg {
    #[value(name = "2")]
    Bits,
    #[value(name = "e")]
    Nats,
}

impl From<LogBaseArg> for LogBase {
    fn from(arg: LogBaseArg) -> Self {
        match arg {
            LogBaseArg::Bits => LogBase::Bits,
            LogBaseArg::Nats => LogBase::Nats,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Double water filling allocations.
    Waterfill {
        #[command(subcommand)]
        which: WaterfillCmd,
    },
    /// Channel capacities.
    Capacity {
        #[command(subcommand)]
        which: CapacityCmd,
    },
    /// Symmetrizing kernel and minimal state cost for one parameter value.
    Symmetrize {
        #[arg(long)]
        spec: PathBuf,
        /// Parameter index.
        #[arg(long)]
        t: usize,
    },
    /// Finite-blocklength Toeplitz capacities against the band integral.
    Szego {
        #[arg(long)]
        spec: PathBuf,
        /// Comma-separated increasing blocklengths.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, value_enum, default_value = "json")]
        out: OutFormat,
    },
    /// Monte Carlo jamming simulation.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        sigma2: f64,
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        out: OutFormat,
    },
}

#[derive(Subcommand)]
enum WaterfillCmd {
    /// Gaussian product channel.
    Product(SpecArgs),
    /// Colored-noise channel in the frequency domain.
    Spectral {
        #[command(flatten)]
        spec: SpecArgs,
        /// Quadrature grid size.
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
}

#[derive(Subcommand)]
enum CapacityCmd {
    /// Scalar Gaussian AVC from the closed form.
    Scalar {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        sigma2: f64,
    },
    /// Colored Gaussian noise via frequency-domain water filling.
    Colored {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
    /// Discrete AVC with fixed parameters (min-max solver).
    Discrete {
        #[command(flatten)]
        spec: SpecArgs,
        /// Cross-check against the exhaustive grid oracle with this step
        /// denominator (small alphabets only).
        #[arg(long)]
        oracle_grid: Option<usize>,
        /// Also compute the deterministic code capacity.
        #[arg(long)]
        det: bool,
    },
    /// Fixed fading coefficients.
    Fading {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        det: bool,
    },
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    out: OutFormat,
}

fn read_spec(path: &PathBuf, kind: SpecKind) -> Result<(ChannelSpec, String), Error> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let spec = spec_from_json(&text, kind)?;
    Ok((spec, digest(&bytes)))
}

fn check_grid(grid: usize) -> Result<(), Error> {
    if grid < 64 {
        return Err(Error::Validation {
            field: "grid".to_string(),
            message: format!("quadrature grid must have at least 64 points, got {grid}"),
        });
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    let base: LogBase = cli.log_base.into();
    match cli.command {
        Command::Waterfill { which } => match which {
            WaterfillCmd::Product(args) => waterfill_product(&args, base, cli.tol),
            WaterfillCmd::Spectral { spec, grid } => {
                check_grid(grid)?;
                waterfill_spectral(&spec, grid, base)
            }
        },
        Command::Capacity { which } => match which {
            CapacityCmd::Scalar { gamma, lambda, sigma2 } => {
                let (random, det) = scalar_capacity(gamma, lambda, sigma2);
                let params = json!({"gamma": gamma, "lambda": lambda, "sigma2": sigma2});
                let hash = digest(params.to_string().as_bytes());
                Envelope::new(
                    "capacity scalar",
                    Some(hash),
                    params,
                    json!({
                        "random": base.from_bits(random),
                        "deterministic": base.from_bits(det),
                        "unit": unit_name(base),
                    }),
                )
                .print();
                Ok(())
            }
            CapacityCmd::Colored { spec, grid } => {
                check_grid(grid)?;
                let (loaded, hash) = read_spec(&spec.spec, SpecKind::Spectral)?;
                let ChannelSpec::Spectral(s) = loaded else { unreachable!() };
                let (random, det) = colored_capacity(&s, grid);
                let alloc = freq_double_waterfill(&s, grid);
                Envelope::new(
                    "capacity colored",
                    Some(hash),
                    json!({"spec": spec.spec.display().to_string(), "grid": grid}),
                    json!({
                        "random": base.from_bits(random),
                        "deterministic": base.from_bits(det),
                        "beta": alloc.beta,
                        "alpha": alloc.alpha,
                        "unit": unit_name(base),
                    }),
                )
                .print();
                Ok(())
            }
            CapacityCmd::Discrete { spec, oracle_grid, det } => {
                capacity_discrete(&spec, oracle_grid, det, base, cli.seed)
            }
            CapacityCmd::Fading { spec, det } => capacity_fading(&spec, det, base),
        },
        Command::Symmetrize { spec, t } => symmetrize(&spec, t),
        Command::Szego { spec, n, out } => szego(&spec, &n, out, base),
        Command::Simulate { n, rate, gamma, lambda, sigma2, strategy, trials, seed, out: _ } => {
            let config = SimConfig {
                n,
                rate,
                gamma,
                lambda,
                sigma2,
                strategy: strategy.into(),
                trials,
                seed,
            };
            let report = simulate(&config)?;
            let params = serde_json::to_value(&config).expect("config serializes");
            let hash = digest(params.to_string().as_bytes());
            Envelope::new(
                "simulate",
                Some(hash),
                params,
                serde_json::to_value(&report).expect("report serializes"),
            )
            .print();
            Ok(())
        }
    }
}

fn unit_name(base: LogBase) -> &'static str {
    match base {
        LogBase::Bits => "bits/channel-use",
        LogBase::Nats => "nats/channel-use",
    }
}

fn waterfill_product(args: &SpecArgs, base: LogBase, tol: f64) -> Result<(), Error> {
    let (loaded, hash) = read_spec(&args.spec, SpecKind::Product)?;
    let ChannelSpec::Product(spec) = loaded else { unreachable!() };
    let alloc = double_waterfill(&spec);
    let random = base.from_bits(capacity_closed_form(&spec, &alloc));
    let det = base.from_bits(deterministic_code_capacity_product(&spec));
    let kkt = verify_kkt(&spec, &alloc, tol)?;
    match args.out {
        OutFormat::Json => {
            Envelope::new(
                "waterfill product",
                Some(hash),
                json!({"spec": args.spec.display().to_string(), "tol": tol}),
                json!({
                    "beta": alloc.beta,
                    "alpha": alloc.alpha,
                    "N_star": alloc.n_star,
                    "P_star": alloc.p_star,
                    "capacity_random": random,
                    "capacity_deterministic": det,
                    "unit": unit_name(base),
                    "kkt": {
                        "theta": kkt.theta,
                        "max_residual": kkt.max_residual(),
                        "pass": kkt.pass,
                    },
                }),
            )
            .print();
        }
        OutFormat::Csv => {
            println!("beta,{}", fmt_csv(alloc.beta));
            println!("alpha,{}", fmt_csv(alloc.alpha));
            println!("capacity,{}", fmt_csv(random));
            println!("j,sigma2,N_star,P_star");
            for j in 0..spec.d {
                println!(
                    "{},{},{},{}",
                    j + 1,
                    fmt_csv(spec.sigma2[j]),
                    fmt_csv(alloc.n_star[j]),
                    fmt_csv(alloc.p_star[j])
                );
            }
        }
    }
    Ok(())
}

fn waterfill_spectral(args: &SpecArgs, grid: usize, base: LogBase) -> Result<(), Error> {
    let (loaded, hash) = read_spec(&args.spec, SpecKind::Spectral)?;
    let ChannelSpec::Spectral(spec) = loaded else { unreachable!() };
    let alloc = freq_double_waterfill(&spec, grid);
    let (random, det) = colored_capacity(&spec, grid);
    match args.out {
        OutFormat::Json => {
            Envelope::new(
                "waterfill spectral",
                Some(hash),
                json!({"spec": args.spec.display().to_string(), "grid": grid}),
                json!({
                    "beta": alloc.beta,
                    "alpha": alloc.alpha,
                    "capacity_random": base.from_bits(random),
                    "capacity_deterministic": base.from_bits(det),
                    "unit": unit_name(base),
                    "grid": grid,
                }),
            )
            .print();
        }
        OutFormat::Csv => {
            println!("beta,{}", fmt_csv(alloc.beta));
            println!("alpha,{}", fmt_csv(alloc.alpha));
            println!("capacity,{}", fmt_csv(base.from_bits(random)));
            println!("omega,psi,b_star,a_star");
            for k in 0..alloc.omegas.len() {
                println!(
                    "{},{},{},{}",
                    fmt_csv(alloc.omegas[k]),
                    fmt_csv(alloc.psi[k]),
                    fmt_csv(alloc.b_star[k]),
                    fmt_csv(alloc.a_star[k])
                );
            }
        }
    }
    Ok(())
}

fn capacity_discrete(
    args: &SpecArgs,
    oracle_grid: Option<usize>,
    det: bool,
    base: LogBase,
    seed: u64,
) -> Result<(), Error> {
    let (loaded, hash) = read_spec(&args.spec, SpecKind::Discrete)?;
    let ChannelSpec::Discrete(spec) = loaded else { unreachable!() };
    let opts = SolverOptions { seed, ..SolverOptions::default() };
    let random = random_capacity_with(&spec, &opts)?;
    let mut results = json!({
        "random": {
            "value": base.from_bits(random.value),
            "p": random.p.rows,
            "q": random.q.rows,
            "diagnostics": serde_json::to_value(&random.diagnostics).unwrap(),
        },
        "unit": unit_name(base),
    });
    if let Some(steps) = oracle_grid {
        let oracle = grid_oracle(&spec, steps)?;
        results["oracle"] = json!({
            "value": base.from_bits(oracle.value),
            "lipschitz_slack": base.from_bits(oracle.lipschitz_slack),
            "steps": steps,
        });
    }
    if det {
        let d = deterministic_capacity_with(&spec, &opts)?;
        results["deterministic"] = json!({
            "value": base.from_bits(d.value),
            "l_star": float_value(d.l_star),
            "boundary": d.boundary,
        });
    }
    Envelope::new(
        "capacity discrete",
        Some(hash),
        json!({
            "spec": args.spec.display().to_string(),
            "oracle_grid": oracle_grid,
            "det": det,
        }),
        results,
    )
    .print();
    Ok(())
}

fn capacity_fading(args: &SpecArgs, det: bool, base: LogBase) -> Result<(), Error> {
    let (loaded, hash) = read_spec(&args.spec, SpecKind::Fading)?;
    let ChannelSpec::Fading(spec) = loaded else { unreachable!() };
    let random = fading_random_capacity(&spec)?;
    let mut results = json!({
        "random": {
            "value": base.from_bits(random.value),
            "omega": random.allocation.omega,
            "lambda": random.allocation.lambda,
        },
        "unit": unit_name(base),
    });
    if det {
        let d = fading_det_capacity(&spec)?;
        results["deterministic"] = json!({
            "value": base.from_bits(d.value),
            "l_star": float_value(d.l_star),
            "boundary": d.boundary,
            "allocation": d.allocation.map(|a| json!({"omega": a.omega, "lambda": a.lambda})),
        });
    }
    Envelope::new(
        "capacity fading",
        Some(hash),
        json!({"spec": args.spec.display().to_string(), "det": det}),
        results,
    )
    .print();
    Ok(())
}

fn symmetrize(path: &PathBuf, t: usize) -> Result<(), Error> {
    let (loaded, hash) = read_spec(path, SpecKind::Discrete)?;
    let ChannelSpec::Discrete(spec) = loaded else { unreachable!() };
    if t >= spec.nt {
        return Err(Error::Validation {
            field: "t".to_string(),
            message: format!("parameter index {t} out of range (T = {})", spec.nt),
        });
    }
    // Minimal-cost kernel under the uniform input distribution.
    let uniform = vec![1.0 / spec.nx as f64; spec.nx];
    let results = match min_symm_cost(spec.kernel_slice(t), &uniform, &spec.l) {
        SymmCost::Feasible(kernel) => json!({
            "symmetrizable": true,
            "J": kernel.j,
            "cost": kernel.cost,
            "zero_one_law": kernel.is_zero_one_law(),
            "input": "uniform",
        }),
        SymmCost::Infeasible => json!({
            "symmetrizable": false,
            "J": null,
            "cost": "inf",
        }),
    };
    Envelope::new(
        "symmetrize",
        Some(hash),
        json!({"spec": path.display().to_string(), "t": t}),
        results,
    )
    .print();
    Ok(())
}

fn szego(path: &PathBuf, n_list: &[usize], out: OutFormat, base: LogBase) -> Result<(), Error> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Validation {
            field: "n".to_string(),
            message: "blocklengths must be nonempty and strictly increasing".to_string(),
        });
    }
    let (loaded, hash) = read_spec(path, SpecKind::Spectral)?;
    let ChannelSpec::Spectral(spec) = loaded else { unreachable!() };
    // The Toeplitz model needs the autocorrelation; sampled densities are
    // transformed with lags up to the largest requested blocklength. Lags
    // beyond half the sample count alias, so demand a fine enough grid.
    let max_lag = n_list.last().unwrap() - 1;
    if let avcap_core::Psd::Grid(values) = &spec.psd {
        if 2 * max_lag >= values.len() {
            return Err(Error::Validation {
                field: "n".to_string(),
                message: format!(
                    "blocklength {} needs autocorrelation lags past the sampled grid's \
                     resolution ({} points); supply a finer grid or an autocorr spec",
                    max_lag + 1,
                    values.len()
                ),
            });
        }
    }
    let r = autocorr_from_psd(&spec, max_lag);
    let table = szego_convergence(
        &r,
        spec.constraints.gamma,
        spec.constraints.lambda,
        n_list,
    )?;
    match out {
        OutFormat::Json => {
            Envelope::new(
                "szego",
                Some(hash),
                json!({"spec": path.display().to_string(), "n": n_list}),
                json!({
                    "c_inf": base.from_bits(table.c_inf),
                    "rows": table
                        .rows
                        .iter()
                        .map(|row| {
                            json!({
                                "n": row.n,
                                "c_n": base.from_bits(row.c_n),
                                "gap": base.from_bits(row.gap),
                            })
                        })
                        .collect::<Vec<_>>(),
                    "gaps_monotone": table.gaps_monotone,
                    "unit": unit_name(base),
                }),
            )
            .print();
        }
        OutFormat::Csv => {
            println!("c_inf,{}", fmt_csv(base.from_bits(table.c_inf)));
            println!("n,c_n,gap");
            for row in &table.rows {
                println!(
                    "{},{},{}",
                    row.n,
                    fmt_csv(base.from_bits(row.c_n)),
                    fmt_csv(base.from_bits(row.gap))
                );
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    /// iid Gaussian state at (almost) full power.
    Iid,
    /// Mimic a uniformly drawn codeword.
    Mimic,
}

impl From<StrategyArg> for JammerStrategy {
    fn from(arg: StrategyArg) -> Self {
        match arg {
            StrategyArg::Iid => JammerStrategy::IidGaussian,
            StrategyArg::Mimic => JammerStrategy::CodewordMimic,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::SolverDidNotConverge(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
