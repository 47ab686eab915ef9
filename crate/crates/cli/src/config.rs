use std::fmt;
use std::path::{Path, PathBuf};

use curlcurl::duality::{PrimalOptions, SymbolSpec};
use curlcurl::local::Family;
use curlcurl::power::Assembly;
use curlcurl::qmax::{Init, MaximizeOptions};
use curlcurl::{GridSpec, KernelSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Local,
    Kerr,
    Power,
    Dual,
    Duality,
    Qmax,
}

/// Ramp widths in multiples of the grid spacing unless `absolute` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupercriticalConfig {
    pub n: Vec<u32>,
    pub eps: f64,
    #[serde(default = "default_ramp_cells")]
    pub sigma_cells: f64,
}

fn default_ramp_cells() -> f64 {
    4.0
}

fn default_bump_radius() -> f64 {
    1.0
}

/// Everything one invocation needs. Reports embed the resolved copy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<SymbolSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Exponent of the `qmax` command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<i8>,
    /// Local model: explicit family, or balls of the listed radii.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    /// Local model ramp widths, refined in the given order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    #[serde(default)]
    pub minimizer: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shrink: Option<Vec<f64>>,
    #[serde(default = "default_bump_radius")]
    pub bump_radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supercritical: Option<SupercriticalConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maximize: Option<MaximizeOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primal: Option<PrimalOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assembly: Option<Assembly>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub history: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dump_fields: Option<PathBuf>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn fail<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Parses JSON with the source name in front of serde's line and column.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, source: &str) -> Result<T, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError(format!("{source}: {e}")))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    parse_json(&text, &path.display().to_string())
}

/// Kernel from a file path, or from inline JSON when the argument starts with `{`.
pub fn load_kernel(arg: &str) -> Result<KernelSpec, ConfigError> {
    let spec: KernelSpec =
        if arg.trim_start().starts_with('{') { parse_json(arg, "kernel")? } else { read_json(Path::new(arg))? };
    spec.validate().map_err(|e| ConfigError(format!("kernel: {e}")))?;
    Ok(spec)
}

impl RunConfig {
    pub fn new(command: Command, grid: GridSpec) -> Self {
        Self {
            command,
            grid,
            kernel: None,
            symbol: None,
            q: None,
            r: None,
            p: None,
            sign: None,
            family: None,
            radii: None,
            sigma: None,
            minimizer: false,
            shrink: None,
            bump_radius: default_bump_radius(),
            supercritical: None,
            maximize: None,
            primal: None,
            assembly: None,
            seed: None,
            history: false,
            out: None,
            csv: None,
            dump_fields: None,
        }
    }

    fn need<T: Copy>(&self, v: Option<T>, name: &str) -> Result<T, ConfigError> {
        match v {
            Some(x) => Ok(x),
            None => fail(format!("{:?} needs `{name}`", self.command).to_lowercase()),
        }
    }

    pub fn kernel(&self) -> Result<&KernelSpec, ConfigError> {
        self.kernel.as_ref().ok_or_else(|| ConfigError("missing `kernel`".into()))
    }

    /// Checks presence and ranges, then fills solver defaults and the seed.
    pub fn resolve(mut self) -> Result<Self, ConfigError> {
        let g = self.grid;
        if g.n < 2 || g.n % 2 != 0 || !(1..=3).contains(&g.dim) || !(g.half_width > 0.0) {
            return fail(format!("grid needs dim in 1..=3, even n >= 2 and L > 0, got {g:?}"));
        }
        if let Some(k) = &self.kernel {
            k.validate().map_err(|e| ConfigError(format!("kernel: {e}")))?;
        }
        for (name, list) in [("radii", &self.radii), ("sigma", &self.sigma), ("shrink", &self.shrink)] {
            if let Some(v) = list {
                if v.is_empty() {
                    return fail(format!("sweep axis `{name}` is empty"));
                }
                if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return fail(format!("sweep axis `{name}` needs finite nonnegative values"));
                }
            }
        }
        if let Some(s) = &self.supercritical {
            if s.n.is_empty() {
                return fail("sweep axis `supercritical.n` is empty");
            }
        }
        let three_d = |what: &str| if g.dim == 3 { Ok(()) } else { fail(format!("{what} needs a 3-D grid")) };
        let mut maximize = self.maximize.clone().unwrap_or_default();
        match self.command {
            Command::Local => {
                three_d("local")?;
                let q = self.need(self.q, "q")?;
                if !(q > 1.0) {
                    return fail(format!("q must exceed 1, got {q}"));
                }
                if self.family.is_none() && self.radii.is_none() {
                    return fail("local needs `family` or `radii`");
                }
                let sign = self.sign.unwrap_or(1);
                if sign != 1 && sign != -1 {
                    return fail("sign must be +1 or -1");
                }
                self.sign = Some(sign);
            }
            Command::Kerr => {
                three_d("kerr")?;
                self.kernel()?;
                if self.minimizer == self.shrink.is_some() {
                    return fail("kerr needs exactly one of `minimizer` or `shrink`");
                }
            }
            Command::Power => {
                three_d("power")?;
                self.kernel()?;
                let q = self.need(self.q, "q")?;
                if self.supercritical.is_none() && !(q > 1.0 && q < 2.0) {
                    return fail(format!("q must lie in (1, 2), got {q}"));
                }
                if self.supercritical.is_some() && !(q > 2.0) {
                    return fail(format!("supercritical sweep needs q > 2, got {q}"));
                }
                if self.maximize.is_none() {
                    maximize.symmetrize = true;
                }
                if self.supercritical.is_none() {
                    maximize.p = 2.0 / q;
                }
                self.assembly = Some(self.assembly.unwrap_or_default());
            }
            Command::Dual => {
                three_d("dual")?;
                self.kernel()?;
                let r = self.need(self.r, "r")?;
                if !(r > 2.0) {
                    return fail(format!("r must exceed 2, got {r}"));
                }
                maximize.p = r / (r - 1.0);
            }
            Command::Duality => {
                if self.symbol.is_none() {
                    return fail("duality needs `symbol`");
                }
                let r = self.need(self.r, "r")?;
                if !(r > 2.0) {
                    return fail(format!("r must exceed 2, got {r}"));
                }
                maximize.p = r / (r - 1.0);
                self.primal = Some(self.primal.clone().unwrap_or_default());
            }
            Command::Qmax => {
                self.kernel()?;
                maximize.p = self.p.unwrap_or(maximize.p);
                self.p = Some(maximize.p);
            }
        }
        if let Some(seed) = self.seed {
            maximize.init = Init::Random { seed };
        }
        maximize.validate().map_err(|e| ConfigError(format!("maximize: {e}")))?;
        self.maximize = Some(maximize);
        Ok(self)
    }
}
