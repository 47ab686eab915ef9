//! Real fields on a [`Grid`] and their Fourier coefficients.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct VectorField {
    grid: Grid,
    comps: [Vec<f64>; 3],
}

#[derive(Debug, Clone)]
pub struct SpectralScalar {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct SpectralVector {
    grid: Grid,
    comps: [Vec<Complex64>; 3],
}

impl ScalarField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    /// Samples `f(x)` at every cell position.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64 + Sync) -> Self {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f(grid.position(i)))
            .collect();
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        let values = self.values.par_iter().map(|&v| f(v)).collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .par_iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Circular shift by whole cells along each axis.
    pub fn shifted(&self, shift: [i64; 3]) -> Self {
        let g = &self.grid;
        let n = g.n() as i64;
        let mut out = vec![0.0; g.len()];
        for (i, v) in self.values.iter().enumerate() {
            let m = g.multi_index(i);
            let mut t = [0usize; 3];
            for a in 0..g.dim() {
                t[a] = (m[a] as i64 + shift[a]).rem_euclid(n) as usize;
            }
            out[g.flat_index(t)] = *v;
        }
        Self { grid: g.clone(), values: out }
    }

    pub fn fft(&self) -> SpectralScalar {
        let mut coeffs: Vec<Complex64> =
            self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.fft_forward(&mut coeffs);
        SpectralScalar { grid: self.grid.clone(), coeffs }
    }
}

impl SpectralScalar {
    pub fn new(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidGrid("coefficient count mismatch".into()));
        }
        Ok(Self { grid: grid.clone(), coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Inverse transform; the imaginary part is discarded.
    pub fn ifft(&self) -> ScalarField {
        let mut c = self.coeffs.clone();
        self.grid.fft_inverse(&mut c);
        ScalarField { grid: self.grid.clone(), values: c.iter().map(|z| z.re).collect() }
    }
}

impl VectorField {
    pub fn new(grid: &Grid, comps: [Vec<f64>; 3]) -> Result<Self> {
        if grid.dim() != 3 {
            return Err(Error::InvalidGrid("vector fields need a 3-D grid".into()));
        }
        if comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::InvalidGrid("component length mismatch".into()));
        }
        Ok(Self { grid: grid.clone(), comps })
    }

    pub fn from_components(c: [ScalarField; 3]) -> Result<Self> {
        c[0].grid.check_same(&c[1].grid)?;
        c[0].grid.check_same(&c[2].grid)?;
        let grid = c[0].grid.clone();
        let [a, b, d] = c;
        Self::new(&grid, [a.values, b.values, d.values])
    }

    pub fn zeros(grid: &Grid) -> Result<Self> {
        Self::new(grid, [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]])
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> [f64; 3] + Sync) -> Result<Self> {
        let vals: Vec<[f64; 3]> = (0..grid.len())
            .into_par_iter()
            .map(|i| f(grid.position(i)))
            .collect();
        Self::new(
            grid,
            [
                vals.iter().map(|v| v[0]).collect(),
                vals.iter().map(|v| v[1]).collect(),
                vals.iter().map(|v| v[2]).collect(),
            ],
        )
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, a: usize) -> &[f64] {
        &self.comps[a]
    }

    pub fn components(&self) -> &[Vec<f64>; 3] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [Vec<f64>; 3] {
        &mut self.comps
    }

    pub fn component_field(&self, a: usize) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.comps[a].clone() }
    }

    pub fn at(&self, i: usize) -> [f64; 3] {
        [self.comps[0][i], self.comps[1][i], self.comps[2][i]]
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        let values = (0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                let v = self.at(i);
                (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
            })
            .collect();
        ScalarField { grid: self.grid.clone(), values }
    }

    /// Multiplies each vector by `w(|v|)`.
    pub fn scale_by_magnitude(&self, w: impl Fn(f64) -> f64 + Sync) -> Self {
        let mag = self.magnitude();
        let comps = std::array::from_fn(|a| {
            self.comps[a]
                .par_iter()
                .zip(mag.values())
                .map(|(&v, &m)| v * w(m))
                .collect()
        });
        Self { grid: self.grid.clone(), comps }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let comps = std::array::from_fn(|a| self.comps[a].iter().map(|v| c * v).collect());
        Self { grid: self.grid.clone(), comps }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &Self, s: f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let comps = std::array::from_fn(|a| {
            self.comps[a].iter().zip(&other.comps[a]).map(|(x, y)| x + s * y).collect()
        });
        Ok(Self { grid: self.grid.clone(), comps })
    }

    pub fn max_abs(&self) -> f64 {
        self.magnitude().max_abs()
    }

    pub fn shifted(&self, shift: [i64; 3]) -> Self {
        let comps = std::array::from_fn(|a| self.component_field(a).shifted(shift).values);
        Self { grid: self.grid.clone(), comps }
    }

    pub fn fft(&self) -> SpectralVector {
        let comps = std::array::from_fn(|a| self.component_field(a).fft().coeffs);
        SpectralVector { grid: self.grid.clone(), comps }
    }
}

impl SpectralVector {
    pub fn new(grid: &Grid, comps: [Vec<Complex64>; 3]) -> Result<Self> {
        if grid.dim() != 3 || comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::InvalidGrid("spectral vector shape mismatch".into()));
        }
        Ok(Self { grid: grid.clone(), comps })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> &[Vec<Complex64>; 3] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [Vec<Complex64>; 3] {
        &mut self.comps
    }

    pub fn at(&self, i: usize) -> [Complex64; 3] {
        [self.comps[0][i], self.comps[1][i], self.comps[2][i]]
    }

    pub fn ifft(&self) -> VectorField {
        let comps = std::array::from_fn(|a| {
            SpectralScalar { grid: self.grid.clone(), coeffs: self.comps[a].clone() }
                .ifft()
                .values
        });
        VectorField { grid: self.grid.clone(), comps }
    }
}

/// Rectangle-rule integral.
pub fn integrate(f: &ScalarField) -> f64 {
    f.grid.cell_volume() * f.values.iter().sum::<f64>()
}

/// `integral of f g`.
pub fn inner(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    f.grid.check_same(&g.grid)?;
    let s: f64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum();
    Ok(f.grid.cell_volume() * s)
}

/// `integral of E . F`.
pub fn inner_vector(e: &VectorField, f: &VectorField) -> Result<f64> {
    e.grid.check_same(&f.grid)?;
    let mut s = 0.0;
    for a in 0..3 {
        s += e.comps[a].iter().zip(&f.comps[a]).map(|(x, y)| x * y).sum::<f64>();
    }
    Ok(e.grid.cell_volume() * s)
}

/// Same integral evaluated on DFT coefficients.
pub fn spectral_inner(f: &SpectralScalar, g: &SpectralScalar) -> Result<f64> {
    f.grid.check_same(&g.grid)?;
    let s: f64 = f.coeffs.iter().zip(&g.coeffs).map(|(a, b)| (a * b.conj()).re).sum();
    Ok(s * f.grid.cell_volume() / f.grid.len() as f64)
}

pub trait LpNorm {
    fn lp_norm(&self, p: f64) -> Result<f64>;
}

pub fn lp_norm<F: LpNorm + ?Sized>(f: &F, p: f64) -> Result<f64> {
    f.lp_norm(p)
}

pub(crate) fn lp_of_magnitudes(mags: impl Iterator<Item = f64>, dv: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return invalid(format!("lp_norm needs p >= 1, got {p}"));
    }
    let s: f64 = if p == 2.0 { mags.map(|m| m * m).sum() } else { mags.map(|m| m.powf(p)).sum() };
    Ok((dv * s).powf(1.0 / p))
}

impl LpNorm for ScalarField {
    fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_of_magnitudes(self.values.iter().map(|v| v.abs()), self.grid.cell_volume(), p)
    }
}

impl LpNorm for VectorField {
    fn lp_norm(&self, p: f64) -> Result<f64> {
        let mag = self.magnitude();
        lp_of_magnitudes(mag.values.into_iter(), self.grid.cell_volume(), p)
    }
}

/// L2 norm of the difference of two vector fields.
pub fn l2_distance(a: &VectorField, b: &VectorField) -> Result<f64> {
    a.sub(b)?.lp_norm(2.0)
}
