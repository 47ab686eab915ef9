//! Power-type nonlocal model `curl curl E + E = (K*|E|^q) |E|^{q-2} E`:
//! energy `I_q = 1/2 I_L - 1/(2q) I_NL`, ground states from the maximizer of `Q` at `p = 2/q`.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::{curl, gradient};
use crate::error::{invalid, Error, Result};
use crate::field::{inner, LpNorm, ScalarField, SpectralScalar, VectorField};
use crate::kerr::squared_norm;
use crate::kernels::Kernel;
use crate::local::{smooth_step, RadialPotential};
use crate::qmax::{maximize_scalar_q, MaximizeOptions, MaximizerReport};

/// `(I_q, I_L, I_NL)`.
pub fn iq_energy(e: &VectorField, k: &Kernel, q: f64) -> Result<(f64, f64, f64)> {
    if !(q > 1.0) {
        return invalid(format!("q must exceed 1, got {q}"));
    }
    k.grid().check_same(e.grid())?;
    let i_l = squared_norm(&curl(e)?) + squared_norm(e);
    let a = e.magnitude().map(|m| m.powf(q));
    let i_nl = inner(&k.convolve(&a)?, &a)?;
    Ok((0.5 * i_l - i_nl / (2.0 * q), i_l, i_nl))
}

/// `((q-1)/(2q)) (I_L^q / I_NL)^{1/(q-1)}`, the maximum of `t -> I_q(tE)`.
pub fn nehari_level(i_l: f64, i_nl: f64, q: f64) -> f64 {
    (q - 1.0) / (2.0 * q) * (i_l.powf(q) / i_nl).powf(1.0 / (q - 1.0))
}

/// `||curl curl E + E - (K*|E|^q)|E|^{q-2}E||_2 / ||curl curl E + E||_2`.
pub fn residual_q(e: &VectorField, k: &Kernel, q: f64) -> Result<f64> {
    if e.max_abs() == 0.0 {
        return Err(Error::ZeroField);
    }
    let lhs = curl(&curl(e)?)?.add(e)?;
    let mag = e.magnitude();
    let conv = k.convolve(&mag.map(|m| m.powf(q)))?;
    let factor: Vec<f64> = mag
        .values()
        .par_iter()
        .zip(conv.values())
        .map(|(&m, &c)| if m > 0.0 { c * m.powf(q - 2.0) } else { 0.0 })
        .collect();
    let rhs = {
        let comps = std::array::from_fn(|a| {
            e.component(a).iter().zip(&factor).map(|(v, f)| v * f).collect()
        });
        VectorField::new(e.grid(), comps)?
    };
    Ok(lhs.sub(&rhs)?.lp_norm(2.0)? / lhs.lp_norm(2.0)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Assembly {
    /// Irrotational projection of the pointwise field `x/|x| f0^{1/q}`.
    #[default]
    IrrotationalProjection,
    /// Shell-averaged radial profile integrated by the trapezoid rule.
    RadialShells,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerOptions {
    pub maximize: MaximizeOptions,
    pub assembly: Assembly,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            maximize: MaximizeOptions { symmetrize: true, ..MaximizeOptions::default() },
            assembly: Assembly::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerGroundStateReport {
    pub q: f64,
    pub p: f64,
    /// `Q` of the normalized `|E*|^q` of the assembled field.
    pub max_q: f64,
    /// `Q` of the scalar maximizer itself.
    pub maximizer_q: f64,
    pub t_star: f64,
    pub energy: f64,
    pub predicted_energy: f64,
    #[serde(rename = "I_L")]
    pub i_l: f64,
    #[serde(rename = "I_NL")]
    pub i_nl: f64,
    pub weak_residual: f64,
    pub curl_norm_rel: f64,
    /// `|I_q'(E*)[E*]| / I_L`.
    pub nehari_defect: f64,
    pub assembly: Assembly,
    pub maximizer: MaximizerReport,
}

#[derive(Debug, Clone)]
pub struct PowerGroundState {
    pub field: VectorField,
    pub potential: ScalarField,
    pub profile: ScalarField,
    pub report: PowerGroundStateReport,
}

fn projected_potential(f0: &ScalarField, q: f64) -> Result<ScalarField> {
    let g = f0.grid();
    let amp = f0.map(|v| v.max(0.0).powf(1.0 / q));
    let hedgehog = VectorField::from_fn(g, |_| [0.0; 3])?;
    let mut comps = hedgehog.components().clone();
    for i in 0..g.len() {
        let x = g.position(i);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if r > 0.0 {
            for a in 0..3 {
                comps[a][i] = x[a] / r * amp.values()[i];
            }
        }
    }
    let s = VectorField::new(g, comps)?.fft();
    let coeffs: Vec<Complex64> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let xi = g.wavevector(i);
            let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
            if k2 == 0.0 {
                return Complex64::default();
            }
            let c = s.at(i);
            -Complex64::i() * (xi[0] * c[0] + xi[1] * c[1] + xi[2] * c[2]) / k2
        })
        .collect();
    Ok(SpectralScalar::new(g, coeffs)?.ifft())
}

fn shell_potential(f0: &ScalarField, q: f64) -> Result<ScalarField> {
    let g = f0.grid();
    let width = g.spacing() * 3f64.sqrt();
    let nb = (3f64.sqrt() * g.half_width() / width).ceil() as usize + 2;
    let mut sum_r = vec![0.0; nb];
    let mut sum_f = vec![0.0; nb];
    let mut count = vec![0usize; nb];
    for i in 0..g.len() {
        let r = g.radius(i);
        let b = ((r / width) as usize).min(nb - 1);
        sum_r[b] += r;
        sum_f[b] += f0.values()[i].max(0.0);
        count[b] += 1;
    }
    let mut nodes = vec![(0.0, f0.values()[g.origin_index()].max(0.0).powf(1.0 / q))];
    for b in 0..nb {
        if count[b] > 0 {
            let r = sum_r[b] / count[b] as f64;
            if r > 0.0 {
                nodes.push((r, (sum_f[b] / count[b] as f64).powf(1.0 / q)));
            }
        }
    }
    let mut phi = vec![0.0; nodes.len()];
    for j in 1..nodes.len() {
        phi[j] = phi[j - 1] + 0.5 * (nodes[j].0 - nodes[j - 1].0) * (nodes[j].1 + nodes[j - 1].1);
    }
    let eval = |r: f64| {
        let j = nodes.partition_point(|n| n.0 <= r);
        if j == 0 {
            return 0.0;
        }
        if j == nodes.len() {
            return phi[nodes.len() - 1];
        }
        let (a, b) = (nodes[j - 1], nodes[j]);
        let t = (r - a.0) / (b.0 - a.0);
        phi[j - 1] + (r - a.0) * (a.1 + 0.5 * t * (b.1 - a.1))
    };
    Ok(ScalarField::from_fn(g, |x| eval((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt())))
}

pub fn ground_state_q(k: &Kernel, q: f64, opts: &PowerOptions) -> Result<PowerGroundState> {
    if !(q > 1.0 && q < 2.0) {
        return invalid(format!("q must lie in (1, 2), got {q}"));
    }
    let g = k.grid();
    if g.dim() != 3 {
        return Err(Error::InvalidGrid("power model needs a 3-D grid".into()));
    }
    let p = 2.0 / q;
    let mopts = MaximizeOptions { p, symmetrize: true, ..opts.maximize.clone() };
    let (f0, mrep) = maximize_scalar_q(k.multiplier(), &mopts)?;
    if !mrep.converged {
        return Err(Error::NonConvergence(format!(
            "maximizer stopped ({:?}) after {} iterations, last step {:.3e}, EL residual {:.3e}",
            mrep.stop_reason,
            mrep.iterations, mrep.last_step, mrep.el_residual
        )));
    }
    let phi0 = match opts.assembly {
        Assembly::IrrotationalProjection => projected_potential(&f0, q)?,
        Assembly::RadialShells => shell_potential(&f0, q)?,
    };
    let e0 = gradient(&phi0)?;
    let (_, l0, nl0) = iq_energy(&e0, k, q)?;
    if !(nl0 > 0.0) {
        return Err(Error::NonConvergence("assembled field has I_NL <= 0".into()));
    }
    let t = (l0 / nl0).powf(1.0 / (2.0 * q - 2.0));
    let field = e0.scaled(t);
    let potential = phi0.scaled(t);
    let (energy, i_l, i_nl) = iq_energy(&field, k, q)?;
    let g2 = field.magnitude().map(|m| m.powf(q));
    let norm = g2.lp_norm(p)?;
    let max_q = k.quadratic_form(&g2.scaled(1.0 / norm))?;
    let predicted = (q - 1.0) / (2.0 * q) * max_q.powf(-1.0 / (q - 1.0));
    let curl_norm_rel = curl(&field)?.lp_norm(2.0)? / field.lp_norm(2.0)?;
    let report = PowerGroundStateReport {
        q,
        p,
        max_q,
        maximizer_q: mrep.q_value,
        t_star: t,
        energy,
        predicted_energy: predicted,
        i_l,
        i_nl,
        weak_residual: residual_q(&field, k, q)?,
        curl_norm_rel,
        nehari_defect: (i_l - i_nl).abs() / i_l,
        assembly: opts.assembly,
        maximizer: mrep,
    };
    Ok(PowerGroundState { field, potential, profile: f0, report })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupercriticalRow {
    pub n: u32,
    pub eps: f64,
    #[serde(rename = "I_L")]
    pub i_l: f64,
    #[serde(rename = "I_NL")]
    pub i_nl: f64,
    pub nehari_level: f64,
    /// Sharp-profile continuum value of `I_L`.
    pub i_l_continuum: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupercriticalSummary {
    pub q: f64,
    pub rows: Vec<SupercriticalRow>,
    pub i_l_ratio: f64,
    pub i_l_bounded: bool,
    pub nehari_strictly_decreasing: bool,
}

/// Exponent `(3/q)(1 - 1/n)` of the profile `|x|^{-a}`.
pub fn supercritical_exponent(q: f64, n: u32) -> f64 {
    3.0 / q * (1.0 - 1.0 / n as f64)
}

/// `E_n = x/|x| min(|x|,h)^{-a}`-capped profile on `|x| <= eps`, ramp width `sigma`.
pub fn supercritical_field(k: &Kernel, q: f64, eps: f64, n: u32, sigma: f64) -> Result<VectorField> {
    let g = k.grid();
    let h = g.spacing();
    let a = supercritical_exponent(q, n);
    let speed = |t: f64| {
        let cut = if sigma > 0.0 { 1.0 - smooth_step((t - eps) / sigma) } else if t <= eps { 1.0 } else { 0.0 };
        t.max(h).powf(-a) * cut
    };
    let table = RadialPotential::new(speed, 3f64.sqrt() * g.half_width(), h.min(sigma.max(h)) / 32.0);
    gradient(&ScalarField::from_fn(g, |x| table.eval((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt())))
}

pub fn supercritical_blowup_demo(
    k: &Kernel,
    q: f64,
    eps: f64,
    n_list: &[u32],
    sigma: f64,
) -> Result<SupercriticalSummary> {
    if !(q > 2.0) {
        return invalid(format!("supercritical demo needs q > 2, got {q}"));
    }
    let g = k.grid();
    if !(eps > 0.0 && eps + sigma / 2.0 < g.half_width()) {
        return invalid("need 0 < eps and eps + sigma/2 < L");
    }
    if n_list.is_empty() || n_list.contains(&0) {
        return invalid("n list must be nonempty with n >= 1");
    }
    let mut rows = Vec::new();
    for &n in n_list {
        let e = supercritical_field(k, q, eps, n, sigma)?;
        let (_, i_l, i_nl) = iq_energy(&e, k, q)?;
        let a = supercritical_exponent(q, n);
        rows.push(SupercriticalRow {
            n,
            eps,
            i_l,
            i_nl,
            nehari_level: nehari_level(i_l, i_nl, q),
            i_l_continuum: 4.0 * std::f64::consts::PI * eps.powf(3.0 - 2.0 * a) / (3.0 - 2.0 * a),
        });
    }
    let hi = rows.iter().map(|r| r.i_l).fold(f64::NEG_INFINITY, f64::max);
    let lo = rows.iter().map(|r| r.i_l).fold(f64::INFINITY, f64::min);
    let ratio = hi / lo;
    let dec = rows.windows(2).all(|w| w[1].nehari_level < w[0].nehari_level);
    Ok(SupercriticalSummary { q, rows, i_l_ratio: ratio, i_l_bounded: ratio <= 2.0, nehari_strictly_decreasing: dec })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::kernels::KernelSpec;

    #[test]
    fn zero_field_energies() {
        let g = Grid::new(3, 8, 2.0).unwrap();
        let k = Kernel::new(&KernelSpec::gaussian(1.0), &g).unwrap();
        let z = VectorField::zeros(&g).unwrap();
        assert_eq!(iq_energy(&z, &k, 1.5).unwrap(), (0.0, 0.0, 0.0));
        assert!(residual_q(&z, &k, 1.5).is_err());
    }

    #[test]
    fn rejects_out_of_range_q() {
        let g = Grid::new(3, 8, 2.0).unwrap();
        let k = Kernel::new(&KernelSpec::gaussian(1.0), &g).unwrap();
        assert!(ground_state_q(&k, 2.0, &PowerOptions::default()).is_err());
        assert!(ground_state_q(&k, 1.0, &PowerOptions::default()).is_err());
        assert!(supercritical_blowup_demo(&k, 2.0, 0.5, &[1], 0.1).is_err());
    }

    #[test]
    fn nehari_level_is_fibering_max() {
        let (l, nl, q) = (1.7, 0.9, 1.5);
        let f = |t: f64| 0.5 * t * t * l - t.powf(2.0 * q) / (2.0 * q) * nl;
        let best = (1..4000).map(|i| f(i as f64 * 1e-3)).fold(f64::NEG_INFINITY, f64::max);
        assert!((best - nehari_level(l, nl, q)).abs() < 1e-6);
    }
}
