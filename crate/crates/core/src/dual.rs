//! Dual formulation of `curl curl E + E = K*(|E|^{r-2} E)`: `U = |E|^{r-2} E` is a critical point of
//! `J(U) = (1/r') integral |U|^{r'} - 1/2 integral (K*U) . U` with the tensor multiplier `K`.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::project_longitudinal;
use crate::error::{invalid, Error, Result};
use crate::field::{LpNorm, ScalarField, VectorField};
use crate::grid::Grid;
use crate::kernels::{Kernel, KernelSpec, TensorMultiplier};
use crate::qmax::{maximize_vector_q, MaximizeOptions, MaximizerReport};

pub fn conjugate_exponent(r: f64) -> f64 {
    r / (r - 1.0)
}

/// `J(U) = (1/r') ||U||_{r'}^{r'} - 1/2 integral (K*U) . U`.
pub fn dual_energy(u: &VectorField, m: &TensorMultiplier, r_prime: f64) -> Result<f64> {
    let a = u.lp_norm(r_prime)?.powf(r_prime);
    Ok(a / r_prime - 0.5 * m.quadratic_form(u)?)
}

/// `|U|^{s-2} U`, zero where `U = 0`.
pub fn power_map(u: &VectorField, s: f64) -> VectorField {
    u.scale_by_magnitude(|m| if m > 0.0 { m.powf(s - 2.0) } else { 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualGroundStateReport {
    pub r: f64,
    pub r_prime: f64,
    #[serde(rename = "Q_U")]
    pub q_u: f64,
    pub t_star: f64,
    #[serde(rename = "J_value")]
    pub j_value: f64,
    #[serde(rename = "predicted_J")]
    pub predicted_j: f64,
    pub dual_residual: f64,
    pub maxwell_residual_sol: f64,
    pub maxwell_residual_irr: f64,
    /// `| ||U*||^{r'} - Q(U*) | / ||U*||^{r'}`.
    pub nehari_defect: f64,
    /// `|| |E*|^{r-2}E* - U* ||_{r'} / ||U*||_{r'}`.
    pub inverse_map_defect: f64,
    pub positivity: PositivityCheck,
    pub maximizer: MaximizerReport,
}

#[derive(Debug, Clone)]
pub struct DualGroundState {
    pub u: VectorField,
    pub e: VectorField,
    pub report: DualGroundStateReport,
}

/// Spectral defects of `(|xi|^2+1)(1-R) E = K(1-R) U` and `R E = K R U`, each relative to its left side.
pub fn maxwell_residual(e: &VectorField, u: &VectorField, m: &TensorMultiplier) -> Result<(f64, f64)> {
    let g = m.grid();
    g.check_same(e.grid())?;
    g.check_same(u.grid())?;
    let (se, su) = (e.fft(), u.fft());
    let sums = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let xi = g.wavevector(i);
            let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
            let kh = m.khat()[i];
            let (ce, cu) = (se.at(i), su.at(i));
            let (le, lu) = (project_longitudinal(xi, ce), project_longitudinal(xi, cu));
            let mut acc = [0.0; 4];
            for a in 0..3 {
                let lhs_sol = (k2 + 1.0) * (ce[a] - le[a]);
                let rhs_sol = kh * (cu[a] - lu[a]);
                acc[0] += (lhs_sol - rhs_sol).norm_sqr();
                acc[1] += lhs_sol.norm_sqr();
                acc[2] += (le[a] - kh * lu[a]).norm_sqr();
                acc[3] += le[a].norm_sqr();
            }
            acc
        })
        .collect::<Vec<_>>();
    let mut t = [0.0; 4];
    for s in &sums {
        for a in 0..4 {
            t[a] += s[a];
        }
    }
    let ratio = |num: f64, den: f64| if den > 0.0 { (num / den).sqrt() } else if num > 0.0 { f64::INFINITY } else { 0.0 };
    Ok((ratio(t[0], t[1]), ratio(t[2], t[3])))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityCheck {
    pub scalar_q: f64,
    pub vector_q: f64,
    pub gap: f64,
}

/// Compares `sum K|f^|^2` with `sum F^* K F` for `F^ = (xi/|xi|) f^`, `F^(0) := 0`.
pub fn positivity_transfer_check(f: &ScalarField, k: &Kernel) -> Result<PositivityCheck> {
    let g = k.grid();
    g.check_same(f.grid())?;
    let m = TensorMultiplier::dual(k.multiplier())?;
    let s = f.fft();
    let w = g.cell_volume() / g.len() as f64;
    let parts: Vec<(f64, f64)> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let c = s.coeffs()[i];
            let sq = k.symbol()[i] * c.norm_sqr();
            let xi = g.wavevector(i);
            let kn = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
            if kn == 0.0 {
                return (sq, 0.0);
            }
            let fv: [Complex64; 3] = std::array::from_fn(|a| c * (xi[a] / kn));
            let a = m.matrix(i);
            let mut vq = Complex64::default();
            for r in 0..3 {
                for col in 0..3 {
                    vq += fv[r].conj() * a[r][col] * fv[col];
                }
            }
            (sq, vq.re)
        })
        .collect();
    let scalar_q = w * parts.iter().map(|p| p.0).sum::<f64>();
    let vector_q = w * parts.iter().map(|p| p.1).sum::<f64>();
    Ok(PositivityCheck { scalar_q, vector_q, gap: scalar_q - vector_q })
}

fn centered_bump(g: &Grid) -> ScalarField {
    ScalarField::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp())
}

pub fn dual_ground_state(spec: &KernelSpec, r: f64, grid: &Grid, opts: &MaximizeOptions) -> Result<DualGroundState> {
    if !(r > 2.0) {
        return invalid(format!("r must exceed 2, got {r}"));
    }
    if grid.dim() != 3 {
        return Err(Error::InvalidGrid("dual model needs a 3-D grid".into()));
    }
    let k = Kernel::new(spec, grid)?;
    let positivity = positivity_transfer_check(&centered_bump(grid), &k)?;
    if !(positivity.scalar_q > 0.0) {
        return invalid("kernel fails the positivity hypothesis: integral (K*f) f <= 0 for the test bump");
    }
    let m = TensorMultiplier::dual(k.multiplier())?;
    let rp = conjugate_exponent(r);
    let (u1, mrep) = maximize_vector_q(&m, &MaximizeOptions { p: rp, ..opts.clone() })?;
    if !mrep.converged {
        return Err(Error::NonConvergence(format!(
            "vector maximizer stopped ({:?}) after {} iterations, EL residual {:.3e}",
            mrep.stop_reason, mrep.iterations, mrep.el_residual
        )));
    }
    let nrm = u1.lp_norm(rp)?.powf(rp);
    let q_u = m.quadratic_form(&u1)?;
    let t_star = (q_u / nrm).powf(1.0 / (rp - 2.0));
    let predicted_j = (2.0 - rp) / (2.0 * rp) * (u1.lp_norm(rp)?.powi(2) / q_u).powf(rp / (2.0 - rp));
    let u = u1.scaled(t_star);
    let j_value = dual_energy(&u, &m, rp)?;
    let e = power_map(&u, rp);
    let ku = m.apply(&u)?;
    let dual_residual = e.sub(&ku)?.lp_norm(2.0)? / ku.lp_norm(2.0)?;
    let (sol, irr) = maxwell_residual(&e, &u, &m)?;
    let un = u.lp_norm(rp)?.powf(rp);
    let nehari_defect = (un - m.quadratic_form(&u)?).abs() / un;
    let inverse_map_defect = power_map(&e, r).sub(&u)?.lp_norm(rp)? / u.lp_norm(rp)?;
    let report = DualGroundStateReport {
        r,
        r_prime: rp,
        q_u,
        t_star,
        j_value,
        predicted_j,
        dual_residual,
        maxwell_residual_sol: sol,
        maxwell_residual_irr: irr,
        nehari_defect,
        inverse_map_defect,
        positivity,
        maximizer: mrep,
    };
    Ok(DualGroundState { u, e, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_energy_trivial_cases() {
        let g = Grid::new(3, 8, 2.0).unwrap();
        let m = TensorMultiplier::scalar(&g, 0.0).unwrap();
        let z = VectorField::zeros(&g).unwrap();
        assert_eq!(dual_energy(&z, &m, 1.5).unwrap(), 0.0);
        let u = VectorField::from_fn(&g, |x| [x[0], 1.0, -x[2] * x[1]]).unwrap();
        let want = u.lp_norm(1.5).unwrap().powf(1.5) / 1.5;
        assert!((dual_energy(&u, &m, 1.5).unwrap() - want).abs() < 1e-12 * want);
    }

    #[test]
    fn power_maps_are_inverse() {
        let g = Grid::new(3, 8, 2.0).unwrap();
        let u = VectorField::from_fn(&g, |x| [x[0] + 0.1, x[1] * x[2], -1.0]).unwrap();
        let r = 4.0;
        let back = power_map(&power_map(&u, conjugate_exponent(r)), r);
        assert!(back.sub(&u).unwrap().lp_norm(2.0).unwrap() <= 1e-12 * u.lp_norm(2.0).unwrap());
    }

    #[test]
    fn zero_field_positivity() {
        let g = Grid::new(3, 8, 2.0).unwrap();
        let k = Kernel::new(&KernelSpec::gaussian(1.0), &g).unwrap();
        let c = positivity_transfer_check(&ScalarField::zeros(&g), &k).unwrap();
        assert_eq!((c.scalar_q, c.vector_q, c.gap), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rejects_small_r() {
        let g = Grid::new(3, 8, 2.0).unwrap();
        assert!(dual_ground_state(&KernelSpec::gaussian(1.0), 2.0, &g, &MaximizeOptions::default()).is_err());
    }
}
