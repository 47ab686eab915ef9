//! Periodic box `[-L, L)^dim` with cached FFT plans.
//!
//! Cells sit at `x_i = -L + i h`, `h = 2L/n`, so the origin is cell `n/2` on every
//! axis. Storage is row-major with the last axis fastest.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Plain description of a grid, used in configs and reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
}

struct Inner {
    spec: GridSpec,
    spacing: f64,
    wavenumbers: Vec<f64>,
    deriv: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

#[derive(Clone)]
pub struct Grid {
    inner: Arc<Inner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim())
            .field("n", &self.n())
            .field("L", &self.half_width())
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.spec == other.inner.spec
    }
}

impl Grid {
    pub fn new(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n must be even and >= 8, got {n}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("L must be positive, got {half_width}")));
        }
        let wavenumbers: Vec<f64> = (0..n)
            .map(|i| PI * signed_mode(i, n) as f64 / half_width)
            .collect();
        let mut deriv = wavenumbers.clone();
        deriv[n / 2] = 0.0;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(Inner {
                spec: GridSpec { dim, n, half_width },
                spacing: 2.0 * half_width / n as f64,
                wavenumbers,
                deriv,
                forward,
                inverse,
            }),
        })
    }

    pub fn from_spec(spec: GridSpec) -> Result<Self> {
        Self::new(spec.dim, spec.n, spec.half_width)
    }

    pub fn spec(&self) -> GridSpec {
        self.inner.spec
    }

    pub fn dim(&self) -> usize {
        self.inner.spec.dim
    }

    pub fn n(&self) -> usize {
        self.inner.spec.n
    }

    pub fn half_width(&self) -> f64 {
        self.inner.spec.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.inner.spacing
    }

    pub fn cell_volume(&self) -> f64 {
        self.inner.spacing.powi(self.dim() as i32)
    }

    /// Number of cells, `n^dim`.
    pub fn len(&self) -> usize {
        self.n().pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Measure of the box, `(2L)^dim`.
    pub fn box_volume(&self) -> f64 {
        (2.0 * self.half_width()).powi(self.dim() as i32)
    }

    /// Per-axis frequencies `k = pi m / L` in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// Wavenumbers used for derivative symbols: Nyquist entry zeroed.
    pub fn derivative_wavenumbers(&self) -> &[f64] {
        &self.inner.deriv
    }

    pub fn origin_index(&self) -> usize {
        self.flat_index([self.n() / 2; 3])
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let n = self.n();
        let mut out = [0; 3];
        let mut rest = idx;
        for a in (0..self.dim()).rev() {
            out[a] = rest % n;
            rest /= n;
        }
        out
    }

    pub fn flat_index(&self, m: [usize; 3]) -> usize {
        let n = self.n();
        (0..self.dim()).fold(0, |acc, a| acc * n + m[a])
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width() + i as f64 * self.spacing()
    }

    /// Cell position; unused axes are zero.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim() {
            x[a] = self.coordinate(m[a]);
        }
        x
    }

    pub fn radius(&self, idx: usize) -> f64 {
        let x = self.position(idx);
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }

    /// Minimum-image displacement of a cell from the origin cell.
    pub fn min_image(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let n = self.n() as isize;
        let mut x = [0.0; 3];
        for a in 0..self.dim() {
            let mut d = m[a] as isize - n / 2;
            if d >= n / 2 {
                d -= n;
            } else if d < -n / 2 {
                d += n;
            }
            x[a] = d as f64 * self.spacing();
        }
        x
    }

    pub fn min_image_radius(&self, idx: usize) -> f64 {
        let x = self.min_image(idx);
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }

    /// Integer modes `m` of a frequency index (unused axes zero).
    pub fn modes(&self, idx: usize) -> [i64; 3] {
        let m = self.multi_index(idx);
        let mut out = [0; 3];
        for a in 0..self.dim() {
            out[a] = signed_mode(m[a], self.n());
        }
        out
    }

    /// Derivative wavevector at a frequency index.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let mut xi = [0.0; 3];
        for a in 0..self.dim() {
            xi[a] = self.inner.deriv[m[a]];
        }
        xi
    }

    pub fn wavevectors(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.wavevector(i)).collect()
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Unnormalized forward DFT over all axes, in place.
    pub fn fft_forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.forward);
    }

    /// Inverse DFT over all axes, divided by `n^dim`.
    pub fn fft_inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.inverse);
        let s = 1.0 / self.len() as f64;
        data.par_iter_mut().for_each(|c| *c *= s);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n();
        let dim = self.dim();
        assert_eq!(data.len(), self.len());
        let lines = self.len() / n;
        let per_task = (4096 / n).max(1);
        for axis in 0..dim {
            let stride = n.pow((dim - 1 - axis) as u32);
            if stride == 1 {
                data.par_chunks_mut(n * per_task)
                    .for_each(|chunk| plan.process(chunk));
                continue;
            }
            let mut buf = vec![Complex64::default(); data.len()];
            let src: &[Complex64] = data;
            buf.par_chunks_mut(n).enumerate().for_each(|(line, out)| {
                let (outer, inner) = (line / stride, line % stride);
                let base = outer * n * stride + inner;
                for (t, o) in out.iter_mut().enumerate() {
                    *o = src[base + t * stride];
                }
            });
            buf.par_chunks_mut(n * per_task)
                .for_each(|chunk| plan.process(chunk));
            for line in 0..lines {
                let (outer, inner) = (line / stride, line % stride);
                let base = outer * n * stride + inner;
                for t in 0..n {
                    data[base + t * stride] = buf[line * n + t];
                }
            }
        }
    }
}

pub(crate) fn signed_mode(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
