//! Primal/dual ground states of `P(D) u = |u|^{r-2} u` for a positive symbol `m(xi) = P(i xi)`.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{inner, LpNorm, ScalarField, SpectralScalar};
use crate::grid::Grid;
use crate::kernels::ScalarMultiplier;
use crate::qmax::{maximize_scalar_q, MaximizeOptions, MaximizerReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "form")]
pub enum SymbolSpec {
    /// `m = (1 + |xi|^2)^s`.
    Bessel { s: f64 },
    /// `m(|xi|)` linearly interpolated from `(|xi|, m)` rows.
    Table { table: Vec<[f64; 2]> },
}

impl SymbolSpec {
    /// Parses `bessel:<s>` or a JSON object.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let spec = if let Some(rest) = t.strip_prefix("bessel:") {
            let s: f64 = rest
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad bessel order `{rest}`")))?;
            SymbolSpec::Bessel { s }
        } else {
            serde_json::from_str(t)?
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SymbolSpec::Bessel { s } if !(*s >= 0.0 && s.is_finite()) => invalid("bessel order must be >= 0"),
            SymbolSpec::Table { table } => {
                if table.len() < 2 || table[0][0] != 0.0 {
                    return invalid("symbol table needs >= 2 rows starting at |xi| = 0");
                }
                if table.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    return invalid("symbol table radii must increase");
                }
                if table.iter().any(|r| !(r[1] > 0.0)) {
                    return invalid("symbol values must be positive");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, k: f64) -> f64 {
        match self {
            SymbolSpec::Bessel { s } => (1.0 + k * k).powf(*s),
            SymbolSpec::Table { table } => {
                let i = table.partition_point(|r| r[0] <= k);
                if i == table.len() {
                    return table[i - 1][1];
                }
                let (a, b) = (table[i - 1], table[i]);
                a[1] + (b[1] - a[1]) * (k - a[0]) / (b[0] - a[0])
            }
        }
    }

    /// Differential order `2s`, when known.
    pub fn order(&self) -> Option<f64> {
        match self {
            SymbolSpec::Bessel { s } => Some(2.0 * s),
            SymbolSpec::Table { .. } => None,
        }
    }

    pub fn multiplier(&self, grid: &Grid) -> Result<ScalarMultiplier> {
        let m = ScalarMultiplier::from_fn(grid, |xi| self.value((xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt()));
        if m.symbol().iter().any(|v| !(*v > 0.0)) {
            return invalid("symbol must be positive at every grid frequency");
        }
        Ok(m)
    }

    pub fn inverse_multiplier(&self, grid: &Grid) -> Result<ScalarMultiplier> {
        let m = self.multiplier(grid)?;
        ScalarMultiplier::new(grid, m.symbol().iter().map(|v| 1.0 / v).collect())
    }

    pub fn label(&self) -> String {
        match self {
            SymbolSpec::Bessel { s } => format!("bessel:{s}"),
            SymbolSpec::Table { .. } => "table".into(),
        }
    }
}

/// `F(u) = |u|^r / r` and its Legendre partner `G(v) = |v|^{r'} / r'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPair {
    pub r: f64,
}

impl PowerPair {
    pub fn r_prime(&self) -> f64 {
        self.r / (self.r - 1.0)
    }
    pub fn f(&self, u: f64) -> f64 {
        u.abs().powf(self.r) / self.r
    }
    pub fn f_u(&self, u: f64) -> f64 {
        signed_power(u, self.r - 1.0)
    }
    pub fn g(&self, v: f64) -> f64 {
        v.abs().powf(self.r_prime()) / self.r_prime()
    }
    pub fn g_v(&self, v: f64) -> f64 {
        signed_power(v, self.r_prime() - 1.0)
    }
}

/// `|x|^e sign(x)`.
pub fn signed_power(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(e)
    }
}

fn check_exponent(m: &SymbolSpec, r: f64, dim: usize) -> Result<()> {
    if !(r > 2.0) {
        return invalid(format!("r must exceed 2, got {r}"));
    }
    if let Some(order) = m.order() {
        let d = dim as f64;
        // order 0 (m = 1) is the pointwise sanity case
        if order > 0.0 && d > order && r >= 2.0 * d / (d - order) {
            return invalid(format!("r = {r} is not subcritical for dim {dim} and order {order}"));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrimalOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PrimalOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 5000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalReport {
    #[serde(rename = "I_value")]
    pub i_value: f64,
    pub el_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub last_step: f64,
}

/// `t u` with `t^2 integral m|u^|^2 = t^r ||u||_r^r`.
fn nehari_scale(u: &ScalarField, m: &ScalarMultiplier, r: f64) -> Result<ScalarField> {
    let a = m.quadratic_form(u)?;
    let b = u.lp_norm(r)?.powf(r);
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::ZeroField);
    }
    Ok(u.scaled((a / b).powf(1.0 / (r - 2.0))))
}

fn el_residual_primal(u: &ScalarField, m: &ScalarMultiplier, r: f64) -> Result<f64> {
    let lhs = m.apply(u)?;
    let d = lhs.zip_with(u, |a, b| a - signed_power(b, r - 1.0))?;
    Ok(d.lp_norm(2.0)? / lhs.lp_norm(2.0)?)
}

/// `u <- NehariScale(F^{-1}(m^{-1} F(|u|^{r-2} u)))` from a Gaussian bump.
pub fn primal_ground_state(
    m: &SymbolSpec,
    r: f64,
    grid: &Grid,
    opts: &PrimalOptions,
) -> Result<(ScalarField, PrimalReport)> {
    check_exponent(m, r, grid.dim())?;
    let mm = m.multiplier(grid)?;
    let minv = m.inverse_multiplier(grid)?;
    let bump = ScalarField::from_fn(grid, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp());
    let mut u = nehari_scale(&bump, &mm, r)?;
    let mut converged = false;
    let mut iterations = 0;
    let mut last_step = f64::INFINITY;
    while iterations < opts.max_iter {
        iterations += 1;
        let next = nehari_scale(&minv.apply(&u.map(|v| signed_power(v, r - 1.0)))?, &mm, r)?;
        last_step = next.zip_with(&u, |a, b| a - b)?.lp_norm(2.0)?;
        u = next;
        if last_step <= opts.tol {
            converged = true;
            break;
        }
    }
    let i_value = (0.5 - 1.0 / r) * u.lp_norm(r)?.powf(r);
    let report = PrimalReport { i_value, el_residual: el_residual_primal(&u, &mm, r)?, iterations, converged, last_step };
    Ok((u, report))
}

/// `I(u) = 1/2 integral m|u^|^2 - (1/r) ||u||_r^r`.
pub fn primal_energy(u: &ScalarField, m: &ScalarMultiplier, r: f64) -> Result<f64> {
    Ok(0.5 * m.quadratic_form(u)? - u.lp_norm(r)?.powf(r) / r)
}

/// `J(v) = (1/r') ||v||_{r'}^{r'} - 1/2 integral (m^{-1} v) v`.
pub fn dual_energy_scalar(v: &ScalarField, minv: &ScalarMultiplier, r_prime: f64) -> Result<f64> {
    Ok(v.lp_norm(r_prime)?.powf(r_prime) / r_prime - 0.5 * minv.quadratic_form(v)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualScalarReport {
    #[serde(rename = "J_value")]
    pub j_value: f64,
    pub dual_residual: f64,
    pub t_star: f64,
    pub maximizer: MaximizerReport,
}

pub fn dual_ground_state_scalar(
    m: &SymbolSpec,
    r: f64,
    grid: &Grid,
    opts: &MaximizeOptions,
) -> Result<(ScalarField, DualScalarReport)> {
    check_exponent(m, r, grid.dim())?;
    let minv = m.inverse_multiplier(grid)?;
    let rp = r / (r - 1.0);
    let (v1, mrep) = maximize_scalar_q(&minv, &MaximizeOptions { p: rp, ..opts.clone() })?;
    let q = minv.quadratic_form(&v1)?;
    let t = (q / v1.lp_norm(rp)?.powf(rp)).powf(1.0 / (rp - 2.0));
    let v = v1.scaled(t);
    let kv = minv.apply(&v)?;
    let d = v.zip_with(&kv, |a, b| signed_power(a, rp - 1.0) - b)?;
    let dual_residual = d.lp_norm(2.0)? / kv.lp_norm(2.0)?;
    let j_value = (1.0 / rp - 0.5) * inner(&kv, &v)?;
    Ok((v, DualScalarReport { j_value, dual_residual, t_star: t, maximizer: mrep }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub map_residual: f64,
    pub energy_gap: f64,
    pub shift: [i64; 3],
    pub sign: f64,
}

/// Whole-cell shift and sign that best align `b` onto `a` (circular cross-correlation).
pub fn align(a: &ScalarField, b: &ScalarField) -> Result<([i64; 3], f64)> {
    let g = a.grid();
    g.check_same(b.grid())?;
    let (fa, fb) = (a.fft(), b.fft());
    let prod: Vec<Complex64> = fa.coeffs().iter().zip(fb.coeffs()).map(|(x, y)| x * y.conj()).collect();
    let corr = SpectralScalar::new(g, prod)?.ifft();
    let mut best = 0;
    for (i, v) in corr.values().iter().enumerate() {
        if v.abs() > corr.values()[best].abs() {
            best = i;
        }
    }
    let m = g.multi_index(best);
    let n = g.n() as i64;
    let mut shift = [0i64; 3];
    for ax in 0..g.dim() {
        let s = m[ax] as i64;
        shift[ax] = if s >= n / 2 { s - n } else { s };
    }
    Ok((shift, corr.values()[best].signum()))
}

pub fn duality_correspondence_check(
    u: &ScalarField,
    v: &ScalarField,
    m: &SymbolSpec,
    r: f64,
) -> Result<Correspondence> {
    let g = u.grid();
    let mm = m.multiplier(g)?;
    let minv = m.inverse_multiplier(g)?;
    let rp = r / (r - 1.0);
    let w = u.map(|x| signed_power(x, r - 1.0));
    let (shift, sign) = align(v, &w)?;
    let aligned = w.shifted(shift).scaled(sign);
    let map_residual = v.zip_with(&aligned, |a, b| a - b)?.lp_norm(rp)? / v.lp_norm(rp)?;
    let i = primal_energy(u, &mm, r)?;
    let j = dual_energy_scalar(v, &minv, rp)?;
    Ok(Correspondence { map_residual, energy_gap: (i - j).abs() / i.abs(), shift, sign })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub symbol: SymbolSpec,
    pub r: f64,
    pub primal: PrimalReport,
    pub dual: DualScalarReport,
    pub correspondence: Correspondence,
}

/// Primal run, dual run and their comparison.
pub fn duality_run(
    m: &SymbolSpec,
    r: f64,
    grid: &Grid,
    primal: &PrimalOptions,
    dual: &MaximizeOptions,
) -> Result<(ScalarField, ScalarField, DualityReport)> {
    let (u, pr) = primal_ground_state(m, r, grid, primal)?;
    let (v, dr) = dual_ground_state_scalar(m, r, grid, dual)?;
    let correspondence = duality_correspondence_check(&u, &v, m, r)?;
    Ok((u, v, DualityReport { symbol: m.clone(), r, primal: pr, dual: dr, correspondence }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_symbols() {
        assert_eq!(SymbolSpec::parse("bessel:1.0").unwrap(), SymbolSpec::Bessel { s: 1.0 });
        let t = SymbolSpec::parse(r#"{"form":"table","table":[[0,1],[100,2]]}"#).unwrap();
        assert!((t.value(50.0) - 1.5).abs() < 1e-15);
        assert!(SymbolSpec::parse("bessel:x").is_err());
        assert!(SymbolSpec::parse(r#"{"form":"table","table":[[0,-1],[1,2]]}"#).is_err());
    }

    #[test]
    fn supercritical_rejected() {
        let g = Grid::new(3, 8, 2.0).unwrap();
        // order 2 in dim 3: critical exponent 6
        let m = SymbolSpec::Bessel { s: 1.0 };
        assert!(primal_ground_state(&m, 6.0, &g, &PrimalOptions::default()).is_err());
        assert!(primal_ground_state(&m, 2.0, &g, &PrimalOptions::default()).is_err());
    }

    #[test]
    fn bessel_1d_primal_converges() {
        let g = Grid::new(1, 128, 12.0).unwrap();
        let m = SymbolSpec::Bessel { s: 1.0 };
        let (u, rep) = primal_ground_state(&m, 4.0, &g, &PrimalOptions::default()).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!(rep.el_residual < 1e-8, "{rep:?}");
        assert!(u.values().iter().all(|v| *v > 0.0));
        let e = primal_energy(&u, &m.multiplier(&g).unwrap(), 4.0).unwrap();
        assert!((e - rep.i_value).abs() < 1e-8 * e.abs());
    }

    #[test]
    fn identity_symbol_fixed_points() {
        let g = Grid::new(1, 16, 2.0).unwrap();
        let m = SymbolSpec::Bessel { s: 0.0 };
        let (u, rep) = primal_ground_state(&m, 4.0, &g, &PrimalOptions::default()).unwrap();
        assert!(rep.converged);
        for v in u.values() {
            assert!(v.abs() < 1e-12 || (v.abs() - 1.0).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn align_recovers_shift() {
        let g = Grid::new(1, 32, 4.0).unwrap();
        let a = ScalarField::from_fn(&g, |x| (-(x[0] - 0.5).powi(2)).exp());
        let b = a.shifted([5, 0, 0]).scaled(-1.0);
        let (s, sign) = align(&a, &b).unwrap();
        assert_eq!(s[0], -5);
        assert_eq!(sign, -1.0);
    }
}
