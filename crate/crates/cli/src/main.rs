//! `fama`: outage-probability and multiplexing-gain sweeps for slow, fast and
//! opportunistic FAMA.

mod grid;
mod manifest;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fama_core::{
    db_to_linear, estimate_op_sweep, ofama_gain, ofama_gain_approx, op_fast, op_slow_exact,
    op_slow_quadrature, op_slow_upper_bound, BlockStructure, CorrelationModel, CorrelationSpec,
    FamaError, FastMethod, McMode, McSettings, OutageEstimate, SystemConfig,
};
use grid::{parse_count, Axis, Sweep};
use manifest::RunManifest;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "fama",
    version,
    about = "Outage probability and multiplexing gain of FAMA"
)]
struct Cli {
    /// Worker threads (defaults to FAMA_THREADS, then the number of CPUs)
    #[arg(long, global = true, env = "FAMA_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the block structure of a port correlation model as JSON
    Blocks(BlocksArgs),
    /// Outage probability, optionally swept over gamma-db, N, W or U
    Op(OpArgs),
    /// FAMA and O-FAMA multiplexing gain over a U sweep
    Gain(GainArgs),
    /// Re-run the command recorded in a manifest and compare output digests
    Replay(ReplayArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Model {
    Jakes,
    Constant,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Slow,
    Fast,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Exact,
    Quad,
    Ub,
    Mc,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum McKind {
    Approx,
    Composite,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ChannelArgs {
    /// Number of ports
    #[arg(long = "N", default_value_t = 100)]
    n_ports: usize,
    /// Aperture size in wavelengths
    #[arg(long = "W", default_value_t = 1.0)]
    antenna_size: f64,
    /// Intra-block correlation coefficient
    #[arg(long, default_value_t = 0.97)]
    delta: f64,
    /// Eigenvalue threshold for dominant eigenvalues
    #[arg(long = "rho-th", default_value_t = 1.0)]
    rho_th: f64,
    #[arg(long, value_enum, default_value_t = Model::Jakes)]
    model: Model,
    /// Constant-model coefficient (default: averaged Jakes correlation)
    #[arg(long)]
    mu: Option<f64>,
}

impl ChannelArgs {
    fn spec(&self, n_ports: usize, antenna_size: f64) -> CorrelationSpec {
        CorrelationSpec {
            model: match self.model {
                Model::Jakes => CorrelationModel::Jakes,
                Model::Constant => CorrelationModel::Constant,
            },
            n_ports,
            antenna_size,
            mu: self.mu,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct SystemArgs {
    /// Number of users
    #[arg(long = "U", default_value_t = 5)]
    users: usize,
    /// Fading order of the desired link
    #[arg(long, default_value_t = 2)]
    m: u32,
    /// Comma-separated interferer fading orders (default: all equal to m)
    #[arg(long = "m-interferers", value_delimiter = ',')]
    m_interferers: Option<Vec<u32>>,
    /// SIR threshold in dB
    #[arg(long = "gamma-db", default_value_t = -3.0, allow_negative_numbers = true)]
    gamma_db: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct EvalArgs {
    #[arg(long, value_enum, default_value_t = Mode::Slow)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = Method::Quad)]
    method: Method,
    /// Gauss-Laguerre order on the desired-signal axis
    #[arg(long = "n-i", default_value_t = 50)]
    n_i: usize,
    /// Gauss-Laguerre order on the interference axis
    #[arg(long = "n-j", default_value_t = 50)]
    n_j: usize,
    /// Relative tolerance of the adaptive integral
    #[arg(long = "rel-tol", default_value_t = 1e-8)]
    rel_tol: f64,
    /// Monte Carlo trials (accepts 1e6)
    #[arg(long, value_parser = parse_count, default_value = "1000000")]
    trials: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Interference model simulated in fast mode
    #[arg(long = "mc-mode", value_enum, default_value_t = McKind::Approx)]
    mc_mode: McKind,
}

impl EvalArgs {
    fn mc_mode(&self) -> McMode {
        match (self.mode, self.mc_mode) {
            (Mode::Slow, _) => McMode::Slow,
            (Mode::Fast, McKind::Approx) => McMode::FastNakagamiApprox,
            (Mode::Fast, McKind::Composite) => McMode::FastComposite,
        }
    }

    fn seed(&self) -> Option<u64> {
        (self.method == Method::Mc).then_some(self.seed)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to FILE (plus FILE.manifest.json) instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct BlocksArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct OpArgs {
    /// AXIS=start:stop:step with AXIS one of gamma-db, N, W, U (inclusive)
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip)]
    sweep: Option<Sweep>,
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    eval: EvalArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct GainArgs {
    /// Candidate pool sizes for O-FAMA (repeatable); M = U when omitted
    #[arg(long = "M")]
    candidates: Vec<usize>,
    /// U=start:stop:step
    #[arg(long, default_value = "U=2:30:1")]
    #[serde(skip)]
    sweep: Sweep,
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    eval: EvalArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
struct ReplayArgs {
    manifest: PathBuf,
}

/// Text produced by a command plus what its manifest needs.
struct Product {
    text: String,
    params: serde_json::Value,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct OpRow {
    sweep_param: &'static str,
    value: f64,
    p_out: f64,
    method: &'static str,
    error: f64,
    #[serde(rename = "B")]
    num_blocks: usize,
    delta: f64,
}

#[derive(Serialize)]
struct GainRow {
    #[serde(rename = "U")]
    users: usize,
    #[serde(rename = "M")]
    candidates: usize,
    mode: &'static str,
    gain_exact: f64,
    gain_approx: f64,
}

fn system_config(
    sys: &SystemArgs,
    n_ports: usize,
    antenna_size: f64,
    users: usize,
) -> Result<SystemConfig> {
    let interferers = match &sys.m_interferers {
        Some(v) => v.clone(),
        None => vec![sys.m; users.saturating_sub(1)],
    };
    Ok(SystemConfig::new(
        users,
        sys.m,
        interferers,
        db_to_linear(sys.gamma_db),
        n_ports,
        antenna_size,
    )?)
}

fn analytic(
    eval: &EvalArgs,
    cfg: &SystemConfig,
    blocks: &BlockStructure,
) -> Result<OutageEstimate> {
    let est = match (eval.mode, eval.method) {
        (Mode::Slow, Method::Exact) => op_slow_exact(cfg, blocks, eval.rel_tol)?,
        (Mode::Slow, Method::Quad) => op_slow_quadrature(cfg, blocks, eval.n_i, eval.n_j)?,
        (Mode::Slow, Method::Ub) => op_slow_upper_bound(cfg, blocks)?,
        (Mode::Fast, Method::Exact) => op_fast(
            cfg,
            blocks,
            FastMethod::ExactIntegral {
                rel_tol: eval.rel_tol,
            },
        )?,
        (Mode::Fast, Method::Quad) => op_fast(
            cfg,
            blocks,
            FastMethod::Quadrature {
                n_i: eval.n_i,
                n_j: eval.n_j,
            },
        )?,
        (Mode::Fast, Method::Ub) => op_fast(cfg, blocks, FastMethod::UpperBound)?,
        (_, Method::Mc) => unreachable!("Monte Carlo is evaluated in batches"),
    };
    Ok(est)
}

fn monte_carlo(
    eval: &EvalArgs,
    cfg: &SystemConfig,
    blocks: &BlockStructure,
    gammas: &[f64],
) -> Result<Vec<OutageEstimate>> {
    let settings = McSettings::new(eval.trials, eval.seed, eval.mc_mode());
    Ok(estimate_op_sweep(cfg, blocks, &settings, gammas)?)
}

struct Point {
    cfg: SystemConfig,
    blocks: BlockStructure,
}

fn point(sys: &SystemArgs, channel: &ChannelArgs, axis: Option<Axis>, value: f64) -> Result<Point> {
    let (mut n, mut w, mut users) = (channel.n_ports, channel.antenna_size, sys.users);
    let mut sys = sys.clone();
    match axis {
        Some(Axis::GammaDb) => sys.gamma_db = value,
        Some(Axis::N) => n = value as usize,
        Some(Axis::W) => w = value,
        Some(Axis::U) => users = value as usize,
        None => {}
    }
    if axis == Some(Axis::U) && sys.m_interferers.is_some() {
        bail!("--m-interferers cannot be combined with a sweep over U");
    }
    let cfg = system_config(&sys, n, w, users)?;
    let blocks = channel
        .spec(n, w)
        .block_structure(channel.delta, channel.rho_th)?;
    Ok(Point { cfg, blocks })
}

/// Outage at every sweep value, in grid order.
fn outage_sweep(
    sys: &SystemArgs,
    channel: &ChannelArgs,
    eval: &EvalArgs,
    axis: Option<Axis>,
    values: &[f64],
) -> Result<Vec<(Point, OutageEstimate)>> {
    let points = values
        .iter()
        .map(|&v| point(sys, channel, axis, v))
        .collect::<Result<Vec<_>>>()?;
    if eval.method == Method::Mc {
        if axis == Some(Axis::GammaDb) {
            // one set of trials serves every threshold
            let gammas: Vec<f64> = points.iter().map(|p| p.cfg.gamma).collect();
            let ests = monte_carlo(eval, &points[0].cfg, &points[0].blocks, &gammas)?;
            return Ok(points.into_iter().zip(ests).collect());
        }
        let mut out = Vec::with_capacity(points.len());
        for p in points {
            let est = monte_carlo(eval, &p.cfg, &p.blocks, &[p.cfg.gamma])?.remove(0);
            out.push((p, est));
        }
        return Ok(out);
    }
    let ests = points
        .par_iter()
        .map(|p| analytic(eval, &p.cfg, &p.blocks))
        .collect::<Result<Vec<_>>>()?;
    Ok(points.into_iter().zip(ests).collect())
}

/// Shortest round-trip decimal, switching to exponent form for tiny or huge
/// magnitudes.
fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".into()
    } else if (1e-4..1e9).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn to_csv<T: Serialize>(header: &str, rows: &[T]) -> Result<String> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let value = serde_json::to_value(row)?;
        let obj = value.as_object().context("rows serialize to objects")?;
        let cells: Vec<String> = header
            .split(',')
            .map(|k| match &obj[k] {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) if n.is_f64() => {
                    fmt_num(n.as_f64().unwrap_or(f64::NAN))
                }
                v => v.to_string(),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

fn render<T: Serialize>(format: Format, header: &str, rows: &[T]) -> Result<String> {
    match format {
        Format::Csv => to_csv(header, rows),
        Format::Json => Ok(serde_json::to_string_pretty(rows)? + "\n"),
    }
}

fn run_blocks(args: &BlocksArgs) -> Result<Product> {
    let ch = &args.channel;
    let blocks = ch
        .spec(ch.n_ports, ch.antenna_size)
        .block_structure(ch.delta, ch.rho_th)?;
    Ok(Product {
        text: serde_json::to_string_pretty(&blocks)? + "\n",
        params: serde_json::to_value(args)?,
        seed: None,
    })
}

fn run_op(args: &OpArgs) -> Result<Product> {
    let (axis, values) = match &args.sweep {
        Some(s) => (Some(s.axis), s.values.clone()),
        None => (None, vec![args.system.gamma_db]),
    };
    let results = outage_sweep(&args.system, &args.channel, &args.eval, axis, &values)?;
    let rows: Vec<OpRow> = results
        .iter()
        .zip(&values)
        .map(|((p, est), &v)| OpRow {
            sweep_param: axis.unwrap_or(Axis::GammaDb).name(),
            value: v,
            p_out: est.value,
            method: est.method.as_str(),
            error: est.error,
            num_blocks: p.blocks.num_blocks(),
            delta: p.blocks.delta(),
        })
        .collect();
    let mut params = serde_json::to_value(args)?;
    params["sweep"] = serde_json::json!({
        "axis": axis.map(|a| a.name()),
        "values": values,
    });
    Ok(Product {
        text: render(
            args.output.format,
            "sweep_param,value,p_out,method,error,B,delta",
            &rows,
        )?,
        params,
        seed: args.eval.seed(),
    })
}

fn run_gain(args: &GainArgs) -> Result<Product> {
    if args.sweep.axis != Axis::U {
        bail!("gain sweeps run over U, e.g. --sweep U=2:30:1");
    }
    let users: Vec<usize> = args.sweep.values.iter().map(|&v| v as usize).collect();
    let results = outage_sweep(
        &args.system,
        &args.channel,
        &args.eval,
        Some(Axis::U),
        &args.sweep.values,
    )?;
    let mode = match args.eval.mode {
        Mode::Slow => "slow",
        Mode::Fast => "fast",
    };
    let mut rows = Vec::new();
    for (&u, (_, est)) in users.iter().zip(&results) {
        let pool: Vec<usize> = if args.candidates.is_empty() {
            vec![u]
        } else {
            args.candidates.clone()
        };
        for m in pool {
            if m < u {
                eprintln!("skipping U={u}, M={m}: M must be at least U");
                continue;
            }
            rows.push(GainRow {
                users: u,
                candidates: m,
                mode,
                gain_exact: ofama_gain(u, m, est.value)?,
                gain_approx: ofama_gain_approx(u, m, est.value)?,
            });
        }
    }
    let mut params = serde_json::to_value(args)?;
    params["sweep"] = serde_json::json!({ "axis": "U", "values": args.sweep.values });
    Ok(Product {
        text: render(args.output.format, "U,M,mode,gain_exact,gain_approx", &rows)?,
        params,
        seed: args.eval.seed(),
    })
}

fn produce(command: &Command) -> Result<(&'static str, Product, Option<PathBuf>)> {
    Ok(match command {
        Command::Blocks(a) => ("blocks", run_blocks(a)?, a.out.clone()),
        Command::Op(a) => ("op", run_op(a)?, a.output.out.clone()),
        Command::Gain(a) => ("gain", run_gain(a)?, a.output.out.clone()),
        Command::Replay(_) => bail!("replay cannot be nested"),
    })
}

fn replay(args: &ReplayArgs) -> Result<bool> {
    let recorded = RunManifest::load(&args.manifest)?;
    let argv = std::iter::once("fama".to_string()).chain(recorded.args.iter().cloned());
    let cli = Cli::try_parse_from(argv).context("manifest arguments no longer parse")?;
    let (_, product, _) = produce(&cli.command)?;
    let digest = manifest::digest(product.text.as_bytes());
    std::io::stdout().write_all(product.text.as_bytes())?;
    let same = digest == recorded.output_sha256;
    eprintln!(
        "replay of '{}': output digest {}",
        recorded.command,
        if same { "matches" } else { "DIFFERS" }
    );
    Ok(same)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    if let Command::Replay(args) = &cli.command {
        return Ok(if replay(args)? {
            ExitCode::SUCCESS
        } else {
            ExitCode::FAILURE
        });
    }
    let (name, product, out) = produce(&cli.command)?;
    match out {
        Some(path) => {
            std::fs::write(&path, &product.text)
                .with_context(|| format!("writing {}", path.display()))?;
            let args: Vec<String> = std::env::args().skip(1).collect();
            RunManifest::new(
                name,
                args,
                product.params,
                product.seed,
                product.text.as_bytes(),
            )
            .write(&RunManifest::path_for(&path))?;
        }
        None => std::io::stdout().write_all(product.text.as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<FamaError>() {
            return match e {
                FamaError::Domain(_) => 2,
                FamaError::Convergence(_) => 3,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 1;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
