//! Radial convolution kernels, their Fourier symbols, and the dual tensor multiplier.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{inner, inner_vector, ScalarField, SpectralScalar, SpectralVector, VectorField};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Gaussian,
    Exponential,
    Ball,
    CustomRadial,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub kind: KernelKind,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 2]>>,
}

impl KernelSpec {
    pub fn gaussian(amplitude: f64) -> Self {
        Self { kind: KernelKind::Gaussian, amplitude, radius: None, table: None }
    }

    pub fn exponential(amplitude: f64) -> Self {
        Self { kind: KernelKind::Exponential, amplitude, radius: None, table: None }
    }

    pub fn ball(radius: f64, amplitude: f64) -> Self {
        Self { kind: KernelKind::Ball, amplitude, radius: Some(radius), table: None }
    }

    pub fn custom(table: Vec<[f64; 2]>, amplitude: f64) -> Self {
        Self { kind: KernelKind::CustomRadial, amplitude, radius: None, table: Some(table) }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return invalid(format!("kernel amplitude must be positive, got {}", self.amplitude));
        }
        match self.kind {
            KernelKind::Ball => match self.radius {
                Some(r) if r.is_finite() && r > 0.0 => {}
                _ => return invalid("ball kernel needs a positive radius"),
            },
            KernelKind::CustomRadial => {
                let t = self
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::KernelTable("custom_radial needs a table".into()))?;
                if t.len() < 2 {
                    return Err(Error::KernelTable("table needs at least two rows".into()));
                }
                if t[0][0] != 0.0 {
                    return Err(Error::KernelTable("table must start at r = 0".into()));
                }
                for w in t.windows(2) {
                    if !(w[1][0] > w[0][0]) {
                        return Err(Error::KernelTable("radii must increase strictly".into()));
                    }
                }
                if t.iter().any(|row| !row[1].is_finite()) {
                    return Err(Error::KernelTable("non-finite table value".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// `K(z)` at `|z| = r`. Custom tables are linearly interpolated.
    pub fn value(&self, r: f64) -> f64 {
        let a = self.amplitude;
        match self.kind {
            KernelKind::Gaussian => a * (-r * r).exp(),
            KernelKind::Exponential => a * (-r).exp(),
            KernelKind::Ball => {
                if r < self.radius.unwrap_or(0.0) {
                    a
                } else {
                    0.0
                }
            }
            KernelKind::CustomRadial => a * interpolate(self.table.as_deref().unwrap_or(&[]), r),
        }
    }

    pub fn value_at_zero(&self) -> f64 {
        self.value(0.0)
    }

    /// `delta_K = sup { d : K(z) = K(0) for |z| < d }`.
    pub fn plateau_radius(&self) -> f64 {
        match self.kind {
            KernelKind::Gaussian | KernelKind::Exponential => 0.0,
            KernelKind::Ball => self.radius.unwrap_or(0.0),
            KernelKind::CustomRadial => {
                let t = self.table.as_deref().unwrap_or(&[]);
                let Some(first) = t.first() else { return 0.0 };
                let v0 = first[1];
                let tol = 1e-12 * v0.abs().max(1.0);
                t.iter()
                    .take_while(|row| (row[1] - v0).abs() <= tol)
                    .last()
                    .map_or(0.0, |row| row[0])
            }
        }
    }
}

fn interpolate(t: &[[f64; 2]], r: f64) -> f64 {
    let i = t.partition_point(|row| row[0] <= r);
    if i == 0 {
        return t.first().map_or(0.0, |row| row[1]);
    }
    if i == t.len() {
        return t[t.len() - 1][1];
    }
    let (a, b) = (t[i - 1], t[i]);
    a[1] + (b[1] - a[1]) * (r - a[0]) / (b[0] - a[0])
}

pub fn kernel_plateau_radius(spec: &KernelSpec) -> f64 {
    spec.plateau_radius()
}

/// Kernel sampled at each cell's minimum-image displacement from the origin.
pub fn sample_kernel(spec: &KernelSpec, grid: &Grid) -> Result<ScalarField> {
    spec.validate()?;
    if spec.kind == KernelKind::CustomRadial {
        let reach = (grid.dim() as f64).sqrt() * grid.half_width();
        let last = spec.table.as_ref().and_then(|t| t.last()).map_or(0.0, |r| r[0]);
        if last < reach {
            return Err(Error::KernelTable(format!(
                "table ends at r = {last}, must cover [0, {reach}]"
            )));
        }
    }
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| spec.value(grid.min_image_radius(i)))
        .collect();
    ScalarField::new(grid, values)
}

/// Real Fourier multiplier `f -> F^{-1}(m F f)`.
#[derive(Debug, Clone)]
pub struct ScalarMultiplier {
    grid: Grid,
    symbol: Vec<f64>,
}

impl ScalarMultiplier {
    pub fn new(grid: &Grid, symbol: Vec<f64>) -> Result<Self> {
        if symbol.len() != grid.len() {
            return Err(Error::InvalidGrid("symbol length mismatch".into()));
        }
        Ok(Self { grid: grid.clone(), symbol })
    }

    /// Continuum-scaled symbol of a kernel sampled with its origin at cell `n/2`.
    pub fn from_kernel_samples(k: &ScalarField) -> Self {
        let g = k.grid();
        let spec = k.fft();
        let dv = g.cell_volume();
        let symbol = spec
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let m = g.modes(i);
                let sign = if (m[0] + m[1] + m[2]).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                dv * sign * c.re
            })
            .collect();
        Self { grid: g.clone(), symbol }
    }

    /// Symbol `m(xi)` evaluated on the derivative wavevectors.
    pub fn from_fn(grid: &Grid, m: impl Fn([f64; 3]) -> f64 + Sync) -> Self {
        let symbol = (0..grid.len()).into_par_iter().map(|i| m(grid.wavevector(i))).collect();
        Self { grid: grid.clone(), symbol }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn apply_spectral(&self, s: &mut SpectralScalar) {
        s.coeffs_mut().par_iter_mut().zip(&self.symbol).for_each(|(c, m)| *c *= m);
    }

    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        self.grid.check_same(f.grid())?;
        let mut s = f.fft();
        self.apply_spectral(&mut s);
        Ok(s.ifft())
    }

    /// `integral of (K*f) f`.
    pub fn quadratic_form(&self, f: &ScalarField) -> Result<f64> {
        inner(&self.apply(f)?, f)
    }
}

#[derive(Debug, Clone)]
pub struct Kernel {
    spec: Option<KernelSpec>,
    samples: ScalarField,
    multiplier: ScalarMultiplier,
}

impl Kernel {
    pub fn new(spec: &KernelSpec, grid: &Grid) -> Result<Self> {
        let samples = sample_kernel(spec, grid)?;
        let multiplier = ScalarMultiplier::from_kernel_samples(&samples);
        Ok(Self { spec: Some(spec.clone()), samples, multiplier })
    }

    /// Kernel given directly by its samples (origin at cell `n/2`).
    pub fn from_samples(samples: ScalarField) -> Self {
        let multiplier = ScalarMultiplier::from_kernel_samples(&samples);
        Self { spec: None, samples, multiplier }
    }

    pub fn spec(&self) -> Option<&KernelSpec> {
        self.spec.as_ref()
    }

    pub fn grid(&self) -> &Grid {
        self.samples.grid()
    }

    pub fn samples(&self) -> &ScalarField {
        &self.samples
    }

    pub fn multiplier(&self) -> &ScalarMultiplier {
        &self.multiplier
    }

    pub fn symbol(&self) -> &[f64] {
        self.multiplier.symbol()
    }

    /// `K(0)`, from the `KernelSpec` when known, else the origin sample.
    pub fn value_at_zero(&self) -> f64 {
        match &self.spec {
            Some(s) => s.value_at_zero(),
            None => self.samples.values()[self.grid().origin_index()],
        }
    }

    pub fn plateau_radius(&self) -> f64 {
        self.spec.as_ref().map_or(0.0, |s| s.plateau_radius())
    }

    pub fn convolve(&self, f: &ScalarField) -> Result<ScalarField> {
        self.multiplier.apply(f)
    }

    pub fn quadratic_form(&self, f: &ScalarField) -> Result<f64> {
        self.multiplier.quadratic_form(f)
    }
}

/// Circular convolution `(K*f)(x) = integral K(x-y) f(y) dy` with `K` sampled around cell `n/2`.
pub fn convolve(k: &ScalarField, f: &ScalarField) -> Result<ScalarField> {
    k.grid().check_same(f.grid())?;
    ScalarMultiplier::from_kernel_samples(k).apply(f)
}

/// Per-frequency symmetric 3x3 symbol, stored as `[xx, xy, xz, yy, yz, zz]`.
#[derive(Debug, Clone)]
pub struct TensorMultiplier {
    grid: Grid,
    khat: Vec<f64>,
    entries: Vec<[f64; 6]>,
}

impl TensorMultiplier {
    /// `khat (I - R)/(|xi|^2 + 1) + khat R`, `R(0) := 0`.
    pub fn dual(khat: &ScalarMultiplier) -> Result<Self> {
        let g = khat.grid();
        if g.dim() != 3 {
            return Err(Error::InvalidGrid("dual multiplier needs a 3-D grid".into()));
        }
        let entries = (0..g.len())
            .into_par_iter()
            .map(|i| {
                let xi = g.wavevector(i);
                let k = khat.symbol()[i];
                let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
                let t = 1.0 / (k2 + 1.0);
                let mut out = [0.0; 6];
                let mut p = 0;
                for a in 0..3 {
                    for b in a..3 {
                        let r = if k2 > 0.0 { xi[a] * xi[b] / k2 } else { 0.0 };
                        let id = if a == b { 1.0 } else { 0.0 };
                        out[p] = k * (t * (id - r) + r);
                        p += 1;
                    }
                }
                out
            })
            .collect();
        Ok(Self { grid: g.clone(), khat: khat.symbol().to_vec(), entries })
    }

    /// `c Id` at every frequency.
    pub fn scalar(grid: &Grid, c: f64) -> Result<Self> {
        if grid.dim() != 3 {
            return Err(Error::InvalidGrid("tensor multiplier needs a 3-D grid".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            khat: vec![c; grid.len()],
            entries: vec![[c, 0.0, 0.0, c, 0.0, c]; grid.len()],
        })
    }

    /// `m(xi) Id` for a scalar symbol.
    pub fn diagonal(m: &ScalarMultiplier) -> Result<Self> {
        if m.grid().dim() != 3 {
            return Err(Error::InvalidGrid("tensor multiplier needs a 3-D grid".into()));
        }
        Ok(Self {
            grid: m.grid().clone(),
            khat: m.symbol().to_vec(),
            entries: m.symbol().iter().map(|&c| [c, 0.0, 0.0, c, 0.0, c]).collect(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Scalar kernel symbol the tensor was built from.
    pub fn khat(&self) -> &[f64] {
        &self.khat
    }

    pub fn matrix(&self, i: usize) -> [[f64; 3]; 3] {
        let e = self.entries[i];
        [[e[0], e[1], e[2]], [e[1], e[3], e[4]], [e[2], e[4], e[5]]]
    }

    pub fn apply_spectral(&self, s: &SpectralVector) -> SpectralVector {
        let out: Vec<[Complex64; 3]> = (0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                let e = self.entries[i];
                let c = s.at(i);
                [
                    e[0] * c[0] + e[1] * c[1] + e[2] * c[2],
                    e[1] * c[0] + e[3] * c[1] + e[4] * c[2],
                    e[2] * c[0] + e[4] * c[1] + e[5] * c[2],
                ]
            })
            .collect();
        let comps = std::array::from_fn(|a| out.iter().map(|v| v[a]).collect());
        SpectralVector::new(&self.grid, comps).expect("shape preserved")
    }

    pub fn apply(&self, u: &VectorField) -> Result<VectorField> {
        self.grid.check_same(u.grid())?;
        Ok(self.apply_spectral(&u.fft()).ifft())
    }

    /// `integral of (K*U) . U`.
    pub fn quadratic_form(&self, u: &VectorField) -> Result<f64> {
        inner_vector(&self.apply(u)?, u)
    }
}

pub fn dual_multiplier(spec: &KernelSpec, grid: &Grid) -> Result<TensorMultiplier> {
    let k = Kernel::new(spec, grid)?;
    TensorMultiplier::dual(k.multiplier())
}

/// Continuum Fourier transform of the built-in kernels, for cross-checks.
pub fn continuum_symbol_3d(spec: &KernelSpec, k: f64) -> Option<f64> {
    let a = spec.amplitude;
    match spec.kind {
        KernelKind::Gaussian => Some(a * PI.powf(1.5) * (-k * k / 4.0).exp()),
        KernelKind::Exponential => Some(a * 8.0 * PI / (1.0 + k * k).powi(2)),
        KernelKind::Ball => {
            let r = spec.radius?;
            if k == 0.0 {
                return Some(a * 4.0 * PI * r.powi(3) / 3.0);
            }
            let kr = k * r;
            Some(a * 4.0 * PI * (kr.sin() - kr * kr.cos()) / k.powi(3))
        }
        KernelKind::CustomRadial => None,
    }
}
