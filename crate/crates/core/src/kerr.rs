//! Partially nonlocal Kerr model: `I(E) = 1/2 I_L - 1/4 I_NL` with
//! `I_L = integral |curl E|^2 + |E|^2` and `I_NL = integral (K*|E|^2) |E|^2`.

use serde::{Deserialize, Serialize};

use crate::calculus::{curl, gradient};
use crate::error::{invalid, Error, Result};
use crate::field::{integrate, inner, ScalarField, VectorField};
use crate::grid::Grid;
use crate::kernels::Kernel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KerrReport {
    #[serde(rename = "I_L")]
    pub i_l: f64,
    #[serde(rename = "I_NL")]
    pub i_nl: f64,
    /// `I_L^2 / (4 I_NL)`, absent unless `I_NL > 0`.
    pub quotient: Option<f64>,
    pub t_star: Option<f64>,
    pub energy_at_nehari: Option<f64>,
    /// `1 / (4 K(0))`.
    pub bound: f64,
    pub delta_k: f64,
    pub attained: bool,
}

pub(crate) fn squared_norm(e: &VectorField) -> f64 {
    integrate(&e.magnitude().map(|m| m * m))
}

/// `(I_L, I_NL)`.
pub fn kerr_parts(e: &VectorField, k: &Kernel) -> Result<(f64, f64)> {
    k.grid().check_same(e.grid())?;
    let rho = e.magnitude().map(|m| m * m);
    let i_l = squared_norm(&curl(e)?) + integrate(&rho);
    let i_nl = inner(&k.convolve(&rho)?, &rho)?;
    Ok((i_l, i_nl))
}

/// Direct evaluation of `I(E)`.
pub fn kerr_functional(e: &VectorField, k: &Kernel) -> Result<f64> {
    let (l, nl) = kerr_parts(e, k)?;
    Ok(0.5 * l - 0.25 * nl)
}

pub fn report_from_parts(i_l: f64, i_nl: f64, k0: f64, delta_k: f64) -> KerrReport {
    let pos = i_nl > 0.0;
    KerrReport {
        i_l,
        i_nl,
        quotient: pos.then(|| i_l * i_l / (4.0 * i_nl)),
        t_star: pos.then(|| (i_l / i_nl).sqrt()),
        energy_at_nehari: pos.then(|| i_l * i_l / (4.0 * i_nl)),
        bound: 1.0 / (4.0 * k0),
        delta_k,
        attained: delta_k > 0.0,
    }
}

pub fn kerr_energy(e: &VectorField, k: &Kernel) -> Result<KerrReport> {
    if e.max_abs() == 0.0 {
        return Err(Error::ZeroField);
    }
    let (i_l, i_nl) = kerr_parts(e, k)?;
    Ok(report_from_parts(i_l, i_nl, k.value_at_zero(), k.plateau_radius()))
}

/// Radial bump `a exp(-1/(1 - |x/rho|^2))`, zero for `|x| >= rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpPotential {
    pub radius: f64,
    pub amplitude: f64,
}

impl BumpPotential {
    pub fn new(radius: f64) -> Self {
        Self { radius, amplitude: 1.0 }
    }

    pub fn value(&self, r: f64) -> f64 {
        let t = r / self.radius;
        if t >= 1.0 {
            0.0
        } else {
            self.amplitude * (-1.0 / (1.0 - t * t)).exp()
        }
    }

    pub fn sample(&self, grid: &Grid) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.value((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()))
    }

    /// `x -> n^{1/2} phi(n x)`, whose gradient is `n^{3/2} (grad phi)(n x)`.
    pub fn rescaled(&self, n: f64) -> Self {
        Self { radius: self.radius / n, amplitude: self.amplitude * n.sqrt() }
    }
}

/// Minimum-image diameter of the cells where `|f| > rel * max |f|`.
pub fn support_diameter(f: &ScalarField, rel: f64) -> f64 {
    let g = f.grid();
    let thr = rel * f.max_abs();
    let cells: Vec<[f64; 3]> = (0..g.len())
        .filter(|&i| f.values()[i].abs() > thr)
        .map(|i| g.position(i))
        .collect();
    let period = 2.0 * g.half_width();
    let mut d2max: f64 = 0.0;
    for (a, x) in cells.iter().enumerate() {
        for y in &cells[a + 1..] {
            let mut d2 = 0.0;
            for c in 0..3 {
                let mut d = (x[c] - y[c]).abs();
                if d > period / 2.0 {
                    d = period - d;
                }
                d2 += d * d;
            }
            d2max = d2max.max(d2);
        }
    }
    d2max.sqrt()
}

#[derive(Debug, Clone)]
pub struct KerrMinimizer {
    pub field: VectorField,
    pub potential: ScalarField,
    pub report: KerrReport,
    pub support_diameter: f64,
}

/// Nehari-rescaled gradient of a bump whose support diameter equals `delta_K`.
pub fn kerr_minimizer(k: &Kernel) -> Result<KerrMinimizer> {
    let g = k.grid();
    let delta = k.plateau_radius();
    if !(delta > 0.0) {
        return Err(Error::NotAttained(
            "kernel plateau radius delta_K is 0, so the Kerr infimum 1/(4K(0)) is not attained; \
             minimizers exist if and only if delta_K > 0"
                .into(),
        ));
    }
    if delta / 2.0 >= g.half_width() {
        return invalid("plateau radius exceeds the box");
    }
    let bump = BumpPotential::new(delta / 2.0);
    let phi = bump.sample(g);
    let e = gradient(&phi)?;
    let r = kerr_energy(&e, k)?;
    let t = r.t_star.ok_or_else(|| Error::NonConvergence("I_NL <= 0 for the bump".into()))?;
    let field = e.scaled(t);
    let report = kerr_energy(&field, k)?;
    let potential = phi.scaled(t);
    let support_diameter = support_diameter(&potential, 1e-12);
    Ok(KerrMinimizer { field, potential, report, support_diameter })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShrinkRow {
    pub n: f64,
    #[serde(rename = "I_L")]
    pub i_l: f64,
    #[serde(rename = "I_NL")]
    pub i_nl: f64,
    pub quotient: Option<f64>,
    pub bound: f64,
    pub gap: Option<f64>,
}

/// `E_n = n^{3/2} (grad phi)(n x)` for each `n`, then [`kerr_energy`].
pub fn kerr_shrinking_family(phi: &BumpPotential, n_list: &[f64], k: &Kernel) -> Result<Vec<(f64, KerrReport)>> {
    let g = k.grid();
    if g.dim() != 3 {
        return Err(Error::InvalidGrid("Kerr model needs a 3-D grid".into()));
    }
    if n_list.is_empty() {
        return invalid("empty n list");
    }
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if !(n > 0.0) {
            return invalid(format!("scale n must be positive, got {n}"));
        }
        let b = phi.rescaled(n);
        if b.radius >= g.half_width() {
            return invalid(format!("support of member n = {n} exceeds the box"));
        }
        let cells = 2.0 * b.radius / g.spacing();
        if cells < 8.0 - 1e-9 {
            return invalid(format!("member n = {n} has only {cells:.2} cells across its support (need 8)"));
        }
        let e = gradient(&b.sample(g))?;
        out.push((n, kerr_energy(&e, k)?));
    }
    Ok(out)
}

pub fn shrink_rows(family: &[(f64, KerrReport)]) -> Vec<ShrinkRow> {
    family
        .iter()
        .map(|(n, r)| ShrinkRow {
            n: *n,
            i_l: r.i_l,
            i_nl: r.i_nl,
            quotient: r.quotient,
            bound: r.bound,
            gap: r.quotient.map(|q| q - r.bound),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;

    #[test]
    fn synthetic_fibering_algebra() {
        let r = report_from_parts(2.0, 1.0, 1.0, 0.0);
        assert!((r.t_star.unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.energy_at_nehari, Some(1.0));
        assert!(!r.attained);
        let neg = report_from_parts(2.0, -1.0, 1.0, 0.0);
        assert!(neg.quotient.is_none() && neg.t_star.is_none());
    }

    #[test]
    fn bump_is_compact() {
        let b = BumpPotential::new(0.5);
        assert_eq!(b.value(0.5), 0.0);
        assert!((b.value(0.0) - (-1f64).exp()).abs() < 1e-16);
        let s = b.rescaled(4.0);
        assert_eq!(s.radius, 0.125);
        assert_eq!(s.amplitude, 2.0);
    }

    #[test]
    fn rejects_gaussian_minimizer() {
        let g = Grid::new(3, 8, 2.0).unwrap();
        let k = Kernel::new(&KernelSpec::gaussian(1.0), &g).unwrap();
        assert!(matches!(kerr_minimizer(&k), Err(Error::NotAttained(_))));
    }

    #[test]
    fn resolution_guard() {
        let g = Grid::new(3, 16, 2.0).unwrap();
        let k = Kernel::new(&KernelSpec::gaussian(1.0), &g).unwrap();
        assert!(kerr_shrinking_family(&BumpPotential::new(1.0), &[1.0], &k).is_ok());
        assert!(kerr_shrinking_family(&BumpPotential::new(1.0), &[2.0], &k).is_err());
    }
}
