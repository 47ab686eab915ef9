mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use curlcurl::duality::SymbolSpec;
use curlcurl::power::Assembly;
use curlcurl::GridSpec;

use config::{load_kernel, parse_json, read_json, Command, ConfigError, RunConfig, SupercriticalConfig};
use run::{Failure, EXIT_INVALID};

/// Worker threads for the solvers; defaults to the available parallelism.
const THREADS_VAR: &str = "CURLCURL_THREADS";

#[derive(Parser)]
#[command(name = "curlcurl", version, about = "Spectral solvers for nonlocal nonlinear curl-curl equations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Half-width of the box `[-L, L)^d`.
    #[arg(long = "L")]
    l: Option<f64>,
    /// Report JSON; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random initialization for the maximizers.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dump_fields: Option<PathBuf>,
    /// Keep the maximizer's Q history in the report.
    #[arg(long)]
    history: bool,
    /// Maximizer options as a JSON object.
    #[arg(long)]
    maximize: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Energies of the explicit local-model solutions, with ramp refinement.
    Local {
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        sign: i8,
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        /// Family as JSON, e.g. `{"kind":"annulus","rho":0.2,"j":4}`.
        #[arg(long, conflicts_with = "radii")]
        family: Option<String>,
        #[arg(long, value_delimiter = ',')]
        sigma: Option<Vec<f64>>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Kerr quotient: minimizer for plateau kernels, or a shrinking sweep.
    Kerr {
        #[arg(long)]
        kernel: String,
        #[arg(long, conflicts_with = "shrink")]
        minimizer: bool,
        #[arg(long, value_delimiter = ',')]
        shrink: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1.0)]
        bump_radius: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Power-type ground state, or the supercritical sweep when `--supercritical` is given.
    Power {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        kernel: String,
        #[arg(long, value_parser = parse_assembly)]
        assembly: Option<Assembly>,
        #[arg(long, value_delimiter = ',')]
        supercritical: Option<Vec<u32>>,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 4.0)]
        sigma_cells: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Dual ground state.
    Dual {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        kernel: String,
        #[command(flatten)]
        common: Common,
    },
    /// Primal and dual problems for a positive symbol, and their correspondence.
    Duality {
        /// `bessel:<s>` or a JSON symbol.
        #[arg(long)]
        symbol: String,
        #[arg(long)]
        r: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Maximizes the quotient `Q(f) / ||f||_p^2` for a kernel.
    Qmax {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        symmetrize: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Executes a JSON run configuration.
    Run { config: PathBuf },
}

fn parse_assembly(s: &str) -> Result<Assembly, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| "expected irrotational_projection or radial_shells".to_string())
}

fn base(command: Command, c: &Common, defaults: (usize, usize, f64)) -> Result<RunConfig, ConfigError> {
    let grid = GridSpec {
        dim: c.dim.unwrap_or(defaults.0),
        n: c.n.unwrap_or(defaults.1),
        half_width: c.l.unwrap_or(defaults.2),
    };
    let mut cfg = RunConfig::new(command, grid);
    cfg.out = c.out.clone();
    cfg.seed = c.seed;
    cfg.dump_fields = c.dump_fields.clone();
    cfg.history = c.history;
    if let Some(m) = &c.maximize {
        cfg.maximize = Some(parse_json(m, "--maximize")?);
    }
    Ok(cfg)
}

fn build(cmd: Cmd) -> Result<RunConfig, ConfigError> {
    Ok(match cmd {
        Cmd::Local { q, sign, radii, family, sigma, csv, common } => {
            let mut c = base(Command::Local, &common, (3, 96, 0.75))?;
            c.q = Some(q);
            c.sign = Some(sign);
            c.radii = radii;
            c.family = family.map(|f| parse_json(&f, "--family")).transpose()?;
            c.sigma = sigma;
            c.csv = csv;
            c
        }
        Cmd::Kerr { kernel, minimizer, shrink, bump_radius, csv, common } => {
            let mut c = base(Command::Kerr, &common, (3, 48, 2.0))?;
            c.kernel = Some(load_kernel(&kernel)?);
            c.minimizer = minimizer;
            c.shrink = shrink;
            c.bump_radius = bump_radius;
            c.csv = csv;
            c
        }
        Cmd::Power { q, kernel, assembly, supercritical, eps, sigma_cells, csv, common } => {
            let mut c = base(Command::Power, &common, (3, 48, 8.0))?;
            c.q = Some(q);
            c.kernel = Some(load_kernel(&kernel)?);
            c.assembly = assembly;
            c.supercritical = supercritical.map(|n| SupercriticalConfig { n, eps, sigma_cells });
            c.csv = csv;
            c
        }
        Cmd::Dual { r, kernel, common } => {
            let mut c = base(Command::Dual, &common, (3, 48, 8.0))?;
            c.r = Some(r);
            c.kernel = Some(load_kernel(&kernel)?);
            c
        }
        Cmd::Duality { symbol, r, common } => {
            let mut c = base(Command::Duality, &common, (1, 256, 16.0))?;
            c.symbol = Some(SymbolSpec::parse(&symbol).map_err(|e| ConfigError(format!("--symbol: {e}")))?);
            c.r = Some(r);
            c
        }
        Cmd::Qmax { kernel, p, symmetrize, common } => {
            let mut c = base(Command::Qmax, &common, (3, 32, 8.0))?;
            c.kernel = Some(load_kernel(&kernel)?);
            c.p = p;
            if symmetrize {
                let mut m = c.maximize.take().unwrap_or_default();
                m.symmetrize = true;
                c.maximize = Some(m);
            }
            c
        }
        Cmd::Run { config } => read_json(&config)?,
    })
}

fn init_threads() -> Result<(), ConfigError> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| ConfigError(format!("{THREADS_VAR} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = init_threads().map_err(Failure::from).and_then(|_| build(cli.cmd).map_err(Failure::from)).and_then(run::run);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
