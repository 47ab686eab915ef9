use std::fs;
use std::path::Path;

use curlcurl::dual::dual_ground_state;
use curlcurl::duality::duality_run;
use curlcurl::io::{dump_scalar, dump_vector};
use curlcurl::kerr::{kerr_minimizer, kerr_shrinking_family, shrink_rows, BumpPotential, KerrReport};
use curlcurl::local::{sigma_refinement, LocalSolutionSpec};
use curlcurl::power::{ground_state_q, supercritical_blowup_demo, PowerOptions};
use curlcurl::qmax::maximize_scalar_q;
use curlcurl::{Error, Grid, Kernel};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Command, ConfigError, RunConfig};

pub const EXIT_INVALID: u8 = 1;
pub const EXIT_SOLVER: u8 = 2;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure { code: EXIT_INVALID, message: e.0 }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: exit_code(&e), message: e.to_string() }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonConvergence(_) | Error::NotAttained(_) => EXIT_SOLVER,
        _ => EXIT_INVALID,
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_INVALID, message: format!("{}: {e}", path.display()) }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    config: &'a RunConfig,
    result: T,
}

/// Writes `{config, result}` to `out`, or to stdout without one.
fn emit<T: Serialize>(cfg: &RunConfig, result: T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(&Report { config: cfg, result }).expect("reports serialize") + "\n";
    match &cfg.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
            }
            fs::write(path, text).map_err(|e| io_failure(path, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_csv<R: Serialize>(cfg: &RunConfig, rows: &[R]) -> Result<(), Failure> {
    let Some(path) = &cfg.csv else { return Ok(()) };
    let mut w = csv::Writer::from_path(path).map_err(|e| io_failure(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_failure(path, e))?;
    }
    w.flush().map_err(|e| io_failure(path, e))
}

/// Per-row errors are kept; the sweep fails only when every row failed.
fn sweep_status<R>(rows: &[Result<R, Error>]) -> Result<(), Failure> {
    if rows.iter().any(|r| r.is_ok()) {
        return Ok(());
    }
    match rows.iter().find_map(|r| r.as_ref().err()) {
        Some(e) => Err(Failure { code: exit_code(e), message: format!("every sweep row failed; first: {e}") }),
        None => Ok(()),
    }
}

pub fn run(cfg: RunConfig) -> Result<(), Failure> {
    let cfg = cfg.resolve()?;
    let grid = Grid::from_spec(cfg.grid)?;
    match cfg.command {
        Command::Local => local(&cfg, &grid),
        Command::Kerr => kerr(&cfg, &grid),
        Command::Power => power(&cfg, &grid),
        Command::Dual => dual(&cfg, &grid),
        Command::Duality => duality(&cfg, &grid),
        Command::Qmax => qmax(&cfg, &grid),
    }
}

#[derive(Serialize)]
struct LocalCsvRow {
    family: String,
    q: f64,
    sign: i8,
    r_or_rho: f64,
    sigma: Option<f64>,
    #[serde(rename = "I")]
    energy: Option<f64>,
    #[serde(rename = "I_L")]
    linear: Option<f64>,
    nonlinear: Option<f64>,
    residual: Option<f64>,
    observed_order: Option<f64>,
    error: Option<String>,
}

fn local(cfg: &RunConfig, grid: &Grid) -> Result<(), Failure> {
    let q = cfg.q.expect("resolved");
    let sign = cfg.sign.expect("resolved");
    let specs: Vec<(String, f64, LocalSolutionSpec)> = match (&cfg.family, &cfg.radii) {
        (Some(f), _) => vec![("family".into(), 0.0, LocalSolutionSpec { family: f.clone(), q, sign, sigma: 0.0 })],
        (None, Some(radii)) => radii
            .iter()
            .map(|&r| ("ball".into(), r, LocalSolutionSpec { sign, ..LocalSolutionSpec::ball(r, q, 0.0) }))
            .collect(),
        (None, None) => unreachable!("resolved"),
    };
    let h = grid.spacing();
    let sigmas = cfg.sigma.clone().unwrap_or_else(|| vec![8.0 * h, 4.0 * h, 2.0 * h]);
    let results: Vec<_> = specs
        .par_iter()
        .map(|(_, _, spec)| spec.validate().and_then(|_| sigma_refinement(spec, grid, &sigmas)))
        .collect();
    let mut csv_rows = Vec::new();
    for ((name, r, _), res) in specs.iter().zip(&results) {
        match res {
            Ok(rows) => csv_rows.extend(rows.iter().map(|row| LocalCsvRow {
                family: row.family.clone(),
                q: row.q,
                sign: row.sign,
                r_or_rho: row.r_or_rho,
                sigma: Some(row.sigma),
                energy: Some(row.energy),
                linear: Some(row.linear),
                nonlinear: Some(row.nonlinear),
                residual: Some(row.residual),
                observed_order: row.observed_order,
                error: None,
            })),
            Err(e) => csv_rows.push(LocalCsvRow {
                family: name.clone(),
                q,
                sign,
                r_or_rho: *r,
                sigma: None,
                energy: None,
                linear: None,
                nonlinear: None,
                residual: None,
                observed_order: None,
                error: Some(e.to_string()),
            }),
        }
    }
    write_csv(cfg, &csv_rows)?;
    emit(cfg, &csv_rows)?;
    sweep_status(&results)
}

#[derive(Serialize)]
struct MinimizerResult {
    report: KerrReport,
    support_diameter: f64,
}

#[derive(Serialize)]
struct ShrinkCsvRow {
    n: f64,
    #[serde(rename = "I_L")]
    i_l: Option<f64>,
    #[serde(rename = "I_NL")]
    i_nl: Option<f64>,
    quotient: Option<f64>,
    bound: Option<f64>,
    gap: Option<f64>,
    error: Option<String>,
}

fn kerr(cfg: &RunConfig, grid: &Grid) -> Result<(), Failure> {
    let k = Kernel::new(cfg.kernel()?, grid)?;
    if cfg.minimizer {
        let m = kerr_minimizer(&k)?;
        if let Some(dir) = &cfg.dump_fields {
            dump_vector(dir, "E", &m.field)?;
            dump_scalar(dir, "phi", &m.potential)?;
        }
        return emit(cfg, MinimizerResult { report: m.report, support_diameter: m.support_diameter });
    }
    let bump = BumpPotential::new(cfg.bump_radius);
    let ns = cfg.shrink.clone().expect("resolved");
    let results: Vec<_> = ns.par_iter().map(|&n| kerr_shrinking_family(&bump, &[n], &k)).collect();
    let rows: Vec<ShrinkCsvRow> = ns
        .iter()
        .zip(&results)
        .map(|(&n, res)| match res {
            Ok(fam) => {
                let s = &shrink_rows(fam)[0];
                ShrinkCsvRow {
                    n,
                    i_l: Some(s.i_l),
                    i_nl: Some(s.i_nl),
                    quotient: s.quotient,
                    bound: Some(s.bound),
                    gap: s.gap,
                    error: None,
                }
            }
            Err(e) => ShrinkCsvRow {
                n,
                i_l: None,
                i_nl: None,
                quotient: None,
                bound: None,
                gap: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    write_csv(cfg, &rows)?;
    emit(cfg, &rows)?;
    sweep_status(&results)
}

fn power(cfg: &RunConfig, grid: &Grid) -> Result<(), Failure> {
    let k = Kernel::new(cfg.kernel()?, grid)?;
    let q = cfg.q.expect("resolved");
    if let Some(s) = &cfg.supercritical {
        let summary = supercritical_blowup_demo(&k, q, s.eps, &s.n, s.sigma_cells * grid.spacing())?;
        write_csv(cfg, &summary.rows)?;
        return emit(cfg, summary);
    }
    let opts =
        PowerOptions { maximize: cfg.maximize.clone().expect("resolved"), assembly: cfg.assembly.unwrap_or_default() };
    let mut gs = ground_state_q(&k, q, &opts)?;
    if !cfg.history {
        gs.report.maximizer.q_history.clear();
    }
    if let Some(dir) = &cfg.dump_fields {
        dump_vector(dir, "E", &gs.field)?;
        dump_scalar(dir, "phi", &gs.potential)?;
        dump_scalar(dir, "profile", &gs.profile)?;
    }
    emit(cfg, gs.report)
}

fn dual(cfg: &RunConfig, grid: &Grid) -> Result<(), Failure> {
    let r = cfg.r.expect("resolved");
    let mut d = dual_ground_state(cfg.kernel()?, r, grid, cfg.maximize.as_ref().expect("resolved"))?;
    if !cfg.history {
        d.report.maximizer.q_history.clear();
    }
    if let Some(dir) = &cfg.dump_fields {
        dump_vector(dir, "U", &d.u)?;
        dump_vector(dir, "E", &d.e)?;
    }
    emit(cfg, d.report)
}

fn duality(cfg: &RunConfig, grid: &Grid) -> Result<(), Failure> {
    let sym = cfg.symbol.as_ref().expect("resolved");
    let r = cfg.r.expect("resolved");
    let (u, v, mut rep) = duality_run(
        sym,
        r,
        grid,
        cfg.primal.as_ref().expect("resolved"),
        cfg.maximize.as_ref().expect("resolved"),
    )?;
    if !cfg.history {
        rep.dual.maximizer.q_history.clear();
    }
    if let Some(dir) = &cfg.dump_fields {
        dump_scalar(dir, "u", &u)?;
        dump_scalar(dir, "v", &v)?;
    }
    let converged = rep.primal.converged && rep.dual.maximizer.converged;
    emit(cfg, rep)?;
    if converged {
        Ok(())
    } else {
        Err(Failure { code: EXIT_SOLVER, message: "primal or dual iteration did not converge".into() })
    }
}

fn qmax(cfg: &RunConfig, grid: &Grid) -> Result<(), Failure> {
    let k = Kernel::new(cfg.kernel()?, grid)?;
    let (f, mut rep) = maximize_scalar_q(k.multiplier(), cfg.maximize.as_ref().expect("resolved"))?;
    if !cfg.history {
        rep.q_history.clear();
    }
    if let Some(dir) = &cfg.dump_fields {
        dump_scalar(dir, "f", &f)?;
    }
    let converged = rep.converged;
    let (stop, iters) = (rep.stop_reason, rep.iterations);
    emit(cfg, rep)?;
    if converged {
        Ok(())
    } else {
        Err(Failure { code: EXIT_SOLVER, message: format!("maximizer stopped ({stop:?}) after {iters} iterations") })
    }
}
