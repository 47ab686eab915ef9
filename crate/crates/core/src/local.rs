//! Explicit curl-free solution families of the local equation
//! `curl curl E + s E = s |E|^{2q-2} E` and their energies.

use serde::{Deserialize, Serialize};

use crate::calculus::{curl, gradient};
use crate::error::{invalid, Error, Result};
use crate::field::{integrate, LpNorm, ScalarField, VectorField};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Family {
    /// `1_{|x| < 1/j} x/|x|`.
    ShrinkingBall { j: f64 },
    /// `1_{rho < |x| < rho + 1/j} x/|x|`.
    Annulus { rho: f64, j: f64 },
    /// Piecewise-constant selector: `(inner, outer, s)` with `s` in {-1, 0, 1}.
    Shells { shells: Vec<(f64, f64, i8)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSolutionSpec {
    pub family: Family,
    pub q: f64,
    pub sign: i8,
    /// Ramp width in length units; 0 means a sharp jump.
    pub sigma: f64,
}

impl LocalSolutionSpec {
    pub fn ball(radius: f64, q: f64, sigma: f64) -> Self {
        Self { family: Family::ShrinkingBall { j: 1.0 / radius }, q, sign: 1, sigma }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 1.0) {
            return invalid(format!("q must exceed 1, got {}", self.q));
        }
        if self.sign != 1 && self.sign != -1 {
            return invalid("sign must be +1 or -1");
        }
        if !(self.sigma >= 0.0) {
            return invalid("sigma must be nonnegative");
        }
        match &self.family {
            Family::ShrinkingBall { j } if !(*j > 0.0) => invalid("j must be positive"),
            Family::Annulus { rho, j } if !(*j > 0.0 && *rho >= 0.0) => invalid("need j > 0 and rho >= 0"),
            Family::Shells { shells } => {
                for &(a, b, s) in shells {
                    if !(a >= 0.0 && b > a) || !(-1..=1).contains(&s) {
                        return invalid("shells need 0 <= inner < outer and s in {-1, 0, 1}");
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn shells(&self) -> Vec<(f64, f64, i8)> {
        match &self.family {
            Family::ShrinkingBall { j } => vec![(0.0, 1.0 / j, 1)],
            Family::Annulus { rho, j } => vec![(*rho, rho + 1.0 / j, 1)],
            Family::Shells { shells } => shells.clone(),
        }
    }

    /// Outer support radius of the unmollified profile.
    pub fn outer_radius(&self) -> f64 {
        self.shells().iter().filter(|s| s.2 != 0).map(|s| s.1).fold(0.0, f64::max)
    }

    /// Measure of the unmollified support.
    pub fn support_volume(&self) -> f64 {
        let v = |r: f64| 4.0 * std::f64::consts::PI * r.powi(3) / 3.0;
        self.shells().iter().filter(|s| s.2 != 0).map(|s| v(s.1) - v(s.0)).sum()
    }

    /// Closed-form energy of the sharp profile, `sign (q-1)/(2q) |supp|`.
    pub fn exact_energy(&self) -> f64 {
        self.sign as f64 * (self.q - 1.0) / (2.0 * self.q) * self.support_volume()
    }
}

/// `C^infinity` step on `[-1/2, 1/2]`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= -0.5 {
        return 0.0;
    }
    if t >= 0.5 {
        return 1.0;
    }
    let psi = |u: f64| (-1.0 / u).exp();
    let a = psi(t + 0.5);
    a / (a + psi(0.5 - t))
}

/// Radial speed `s(r) = Phi'(r)`, ramps of width `sigma` at each jump.
pub(crate) fn radial_speed(shells: &[(f64, f64, i8)], sigma: f64, r: f64) -> f64 {
    let mut s = 0.0;
    for &(a, b, sel) in shells {
        if sel == 0 {
            continue;
        }
        let v = if sigma == 0.0 {
            if r > a && r < b { 1.0 } else { 0.0 }
        } else {
            let a = a.max(sigma / 2.0);
            smooth_step((r - a) / sigma) * (1.0 - smooth_step((r - b) / sigma))
        };
        s += sel as f64 * v;
    }
    s
}

/// Tabulated `Phi(r) = integral_0^r s`, evaluated by cubic Hermite interpolation.
pub(crate) struct RadialPotential {
    dr: f64,
    phi: Vec<f64>,
    ds: Vec<f64>,
}

impl RadialPotential {
    pub(crate) fn new(speed: impl Fn(f64) -> f64, r_max: f64, dr: f64) -> Self {
        let m = (r_max / dr).ceil() as usize + 1;
        let mut phi = vec![0.0; m + 1];
        let mut ds = vec![0.0; m + 1];
        ds[0] = speed(0.0);
        for i in 1..=m {
            let (r0, r1) = ((i - 1) as f64 * dr, i as f64 * dr);
            ds[i] = speed(r1);
            phi[i] = phi[i - 1] + dr / 6.0 * (ds[i - 1] + 4.0 * speed(0.5 * (r0 + r1)) + ds[i]);
        }
        Self { dr, phi, ds }
    }

    pub(crate) fn eval(&self, r: f64) -> f64 {
        let x = r / self.dr;
        let i = (x.floor() as usize).min(self.phi.len() - 2);
        let t = x - i as f64;
        let (p0, p1) = (self.phi[i], self.phi[i + 1]);
        let (m0, m1) = (self.ds[i] * self.dr, self.ds[i + 1] * self.dr);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * m1
    }
}

/// Sampled potential whose gradient is the family member.
pub fn local_potential(spec: &LocalSolutionSpec, grid: &Grid) -> Result<ScalarField> {
    spec.validate()?;
    if grid.dim() != 3 {
        return Err(Error::InvalidGrid("local model needs a 3-D grid".into()));
    }
    let reach = spec.outer_radius() + spec.sigma / 2.0;
    if reach >= grid.half_width() {
        return invalid(format!(
            "support radius {reach} does not fit in the box of half-width {}",
            grid.half_width()
        ));
    }
    let shells = spec.shells();
    let sigma = spec.sigma;
    if sigma == 0.0 {
        let phi = move |r: f64| {
            shells
                .iter()
                .map(|&(a, b, s)| s as f64 * (r.min(b) - a).max(0.0))
                .sum::<f64>()
        };
        return Ok(ScalarField::from_fn(grid, |x| phi((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt())));
    }
    let dr = sigma.min(grid.spacing()) / 32.0;
    let table = RadialPotential::new(|r| radial_speed(&shells, sigma, r), 3f64.sqrt() * grid.half_width(), dr);
    Ok(ScalarField::from_fn(grid, |x| table.eval((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt())))
}

/// Spectral gradient of the sampled potential; for `sigma = 0` the jump profile
/// `s(|x|) x/|x|` is sampled pointwise instead (no Gibbs ringing, but no longer curl-free).
pub fn build_local_solution(spec: &LocalSolutionSpec, grid: &Grid) -> Result<VectorField> {
    let phi = local_potential(spec, grid)?;
    if spec.sigma > 0.0 {
        return gradient(&phi);
    }
    let shells = spec.shells();
    VectorField::from_fn(grid, |x| {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if r == 0.0 {
            return [0.0; 3];
        }
        let s = radial_speed(&shells, 0.0, r) / r;
        [s * x[0], s * x[1], s * x[2]]
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalEnergy {
    #[serde(rename = "I")]
    pub energy: f64,
    /// `integral |curl E|^2 + sign |E|^2`.
    #[serde(rename = "I_L")]
    pub linear: f64,
    /// `integral |E|^{2q}`.
    pub nonlinear: f64,
}

/// `I = 1/2 integral (|curl E|^2 + s|E|^2) - s/(2q) integral |E|^{2q}`.
pub fn local_energy(e: &VectorField, q: f64, sign: i8) -> Result<LocalEnergy> {
    if !(q > 1.0) {
        return invalid("q must exceed 1");
    }
    let s = sign as f64;
    let c2 = e_sq(&curl(e)?);
    let e2 = e_sq(e);
    let nl = e.lp_norm(2.0 * q)?.powf(2.0 * q);
    let linear = c2 + s * e2;
    Ok(LocalEnergy { energy: 0.5 * linear - s / (2.0 * q) * nl, linear, nonlinear: nl })
}

fn e_sq(e: &VectorField) -> f64 {
    integrate(&e.magnitude().map(|m| m * m))
}

/// `|I'(E)[E]| / ||E||_2^2` for the `+` model.
pub fn nehari_membership_residual(e: &VectorField, q: f64) -> Result<f64> {
    let e2 = e_sq(e);
    if e2 == 0.0 {
        return Err(Error::ZeroField);
    }
    let c2 = e_sq(&curl(e)?);
    let nl = e.lp_norm(2.0 * q)?.powf(2.0 * q);
    Ok((c2 + e2 - nl).abs() / e2)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalRow {
    pub family: String,
    pub q: f64,
    pub sign: i8,
    pub r_or_rho: f64,
    pub sigma: f64,
    #[serde(rename = "I")]
    pub energy: f64,
    #[serde(rename = "I_L")]
    pub linear: f64,
    pub nonlinear: f64,
    pub residual: f64,
    /// Observed order from this and the next two rows; absent on the last two.
    pub observed_order: Option<f64>,
}

/// Energies over a decreasing list of ramp widths.
pub fn sigma_refinement(spec: &LocalSolutionSpec, grid: &Grid, sigmas: &[f64]) -> Result<Vec<LocalRow>> {
    if sigmas.is_empty() {
        return invalid("empty sigma list");
    }
    let (name, r) = match &spec.family {
        Family::ShrinkingBall { j } => ("ball", 1.0 / j),
        Family::Annulus { rho, .. } => ("annulus", *rho),
        Family::Shells { .. } => ("shells", spec.outer_radius()),
    };
    let mut rows = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        let s = LocalSolutionSpec { sigma, ..spec.clone() };
        let e = build_local_solution(&s, grid)?;
        let en = local_energy(&e, s.q, s.sign)?;
        rows.push(LocalRow {
            family: name.into(),
            q: s.q,
            sign: s.sign,
            r_or_rho: r,
            sigma,
            energy: en.energy,
            linear: en.linear,
            nonlinear: en.nonlinear,
            residual: nehari_membership_residual(&e, s.q)?,
            observed_order: None,
        });
    }
    for k in 0..rows.len().saturating_sub(2) {
        let d1 = (rows[k].energy - rows[k + 1].energy).abs();
        let d2 = (rows[k + 1].energy - rows[k + 2].energy).abs();
        let ratio = rows[k].sigma / rows[k + 1].sigma;
        if d1 > 0.0 && d2 > 0.0 && ratio > 1.0 {
            rows[k].observed_order = Some((d1 / d2).ln() / ratio.ln());
        }
    }
    Ok(rows)
}
