//! Concentration-compactness diagnostics for normalized densities `|f|^p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{integrate, ScalarField};
use crate::grid::Grid;
use crate::kernels::{Kernel, KernelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CcClass {
    Compact,
    Vanishing,
    Dichotomy,
    Undetermined,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcentrationProfile {
    pub radii: Vec<f64>,
    /// `C(R) = max_x mu(B_R(x))` as a fraction of the total mass.
    pub mass: Vec<f64>,
    /// Cell index of the best ball centre per radius.
    pub centers: Vec<usize>,
    pub class: CcClass,
    pub lambda: Option<f64>,
    pub eps: f64,
}

pub const DEFAULT_CC_EPS: f64 = 0.05;

/// Ball masses of `|f|^p` around every cell.
pub fn ball_masses(f: &ScalarField, p: f64, radius: f64) -> Result<ScalarField> {
    let g = f.grid();
    let k = Kernel::new(&KernelSpec::ball(radius, 1.0), g)?;
    k.convolve(&f.map(|v| v.abs().powf(p)))
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Whole-cell shift that moves the best ball of radius `radius` onto the origin cell.
pub fn recentering_shift(f: &ScalarField, p: f64, radius: f64) -> Result<[i64; 3]> {
    let g = f.grid();
    let m = ball_masses(f, p, radius)?;
    let c = g.multi_index(argmax(m.values()));
    let mut shift = [0i64; 3];
    for a in 0..g.dim() {
        shift[a] = (g.n() / 2) as i64 - c[a] as i64;
    }
    Ok(shift)
}

fn default_radii(g: &Grid) -> Vec<f64> {
    let l = g.half_width();
    vec![l / 8.0, l / 4.0, 3.0 * l / 8.0, l / 2.0]
}

pub fn concentration_diagnostics(f: &ScalarField, p: f64, radii: &[f64]) -> Result<ConcentrationProfile> {
    concentration_diagnostics_with(f, p, radii, DEFAULT_CC_EPS)
}

pub fn concentration_diagnostics_with(
    f: &ScalarField,
    p: f64,
    radii: &[f64],
    eps: f64,
) -> Result<ConcentrationProfile> {
    let g = f.grid();
    let l = g.half_width();
    let mut all: Vec<f64> = radii.iter().copied().filter(|r| *r > 0.0).collect();
    all.extend(default_radii(g));
    all.sort_by(|a, b| a.total_cmp(b));
    all.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * l);

    let total = integrate(&f.map(|v| v.abs().powf(p)));
    if !(total > 0.0) {
        return Err(Error::ZeroField);
    }
    let mut mass = Vec::with_capacity(all.len());
    let mut centers = Vec::with_capacity(all.len());
    for &r in &all {
        let m = ball_masses(f, p, r)?;
        let i = argmax(m.values());
        centers.push(i);
        mass.push(m.values()[i] / total);
    }
    let at = |r: f64| {
        let i = all.iter().position(|x| (x - r).abs() <= 1e-12 * l).expect("default radius present");
        mass[i]
    };

    let mut lambda = None;
    let class = if all.iter().zip(&mass).any(|(r, m)| *r <= l / 2.0 + 1e-12 * l && *m >= 1.0 - eps) {
        CcClass::Compact
    } else if at(l / 4.0) <= eps {
        CcClass::Vanishing
    } else {
        let window: Vec<f64> = all
            .iter()
            .zip(&mass)
            .filter(|(r, _)| **r >= l / 8.0 - 1e-12 * l && **r <= l / 2.0 + 1e-12 * l)
            .map(|(_, m)| *m)
            .collect();
        let lo = window.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lo > eps && hi < 1.0 - eps && hi - lo <= eps {
            lambda = Some(window.iter().sum::<f64>() / window.len() as f64);
            CcClass::Dichotomy
        } else {
            CcClass::Undetermined
        }
    };
    Ok(ConcentrationProfile { radii: all, mass, centers, class, lambda, eps })
}
