//! Maximization of `Q(f) = integral (K*f) . f` on the unit sphere of `L^p`, `1 < p < 2`,
//! by the nonlinear power iteration `f <- normalize_p(T(K*f))`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concentration::{concentration_diagnostics_with, recentering_shift, CcClass, DEFAULT_CC_EPS};
use crate::error::{invalid, Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::kernels::{ScalarMultiplier, TensorMultiplier};
use crate::rearrange::{radial_order, rearrange_with, shell_average, shell_blocks};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Init {
    GaussianBump,
    Random { seed: u64 },
    /// Flat values; vector fields are stored component after component.
    Provided { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaximizeOptions {
    pub p: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub relaxation: f64,
    pub symmetrize: bool,
    pub init: Init,
    /// Also stop once the Euler-Lagrange residual drops below this.
    pub residual_tol: Option<f64>,
    pub safeguard: bool,
    pub recenter: bool,
    pub cc_eps: f64,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        Self {
            p: 4.0 / 3.0,
            tol: 1e-10,
            max_iter: 5000,
            relaxation: 1.0,
            symmetrize: false,
            init: Init::GaussianBump,
            residual_tol: None,
            safeguard: true,
            recenter: true,
            cc_eps: DEFAULT_CC_EPS,
        }
    }
}

impl MaximizeOptions {
    pub fn with_p(p: f64) -> Self {
        Self { p, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p < 2.0) {
            return invalid(format!("exponent p must lie in (1, 2), got {}", self.p));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return invalid(format!("relaxation must lie in (0, 1], got {}", self.relaxation));
        }
        if !(self.tol >= 0.0) {
            return invalid("tol must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximizerReport {
    pub p: f64,
    pub q_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub el_residual: f64,
    /// Last successive-iterate `L^p` distance.
    pub last_step: f64,
    pub cc_class: CcClass,
    pub cc_lambda: Option<f64>,
    pub recenter_shift: [i64; 3],
    pub reinitialized: bool,
    pub stop_reason: StopReason,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub q_history: Vec<f64>,
}

impl MaximizerReport {
    pub fn without_history(mut self) -> Self {
        self.q_history.clear();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Successive iterates within `tol`.
    Step,
    /// Euler-Lagrange residual below `residual_tol`.
    Residual,
    /// Every relaxed step lowered `Q` beyond round-off.
    Safeguard,
    MaxIter,
}

/// Relative `Q` drop below which a step still counts as ascent.
pub const ROUNDOFF_DROP: f64 = 1e-13;

/// State is a flat array of `comps * cells` values.
trait Operator: Sync {
    fn grid(&self) -> &Grid;
    fn comps(&self) -> usize;
    fn apply(&self, u: &[f64]) -> Vec<f64>;
}

impl Operator for ScalarMultiplier {
    fn grid(&self) -> &Grid {
        ScalarMultiplier::grid(self)
    }
    fn comps(&self) -> usize {
        1
    }
    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let f = ScalarField::new(self.grid(), u.to_vec()).expect("shape");
        ScalarMultiplier::apply(self, &f).expect("same grid").into_values()
    }
}

impl Operator for TensorMultiplier {
    fn grid(&self) -> &Grid {
        TensorMultiplier::grid(self)
    }
    fn comps(&self) -> usize {
        3
    }
    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let u = to_vector(self.grid(), u.to_vec());
        let w = TensorMultiplier::apply(self, &u).expect("same grid");
        w.components().concat()
    }
}

fn to_vector(g: &Grid, mut flat: Vec<f64>) -> VectorField {
    let n = g.len();
    let c = flat.split_off(2 * n);
    let b = flat.split_off(n);
    VectorField::new(g, [flat, b, c]).expect("shape")
}

struct Ctx<'a> {
    op: &'a dyn Operator,
    n: usize,
    c: usize,
    dv: f64,
    p: f64,
    nonneg: bool,
}

impl Ctx<'_> {
    fn magnitudes(&self, u: &[f64]) -> Vec<f64> {
        if self.c == 1 {
            return u.iter().map(|v| v.abs()).collect();
        }
        (0..self.n)
            .into_par_iter()
            .map(|i| (0..self.c).map(|a| u[a * self.n + i].powi(2)).sum::<f64>().sqrt())
            .collect()
    }

    fn lp(&self, u: &[f64]) -> f64 {
        let s: f64 = self.magnitudes(u).iter().map(|m| m.powf(self.p)).sum();
        (self.dv * s).powf(1.0 / self.p)
    }

    fn normalize(&self, mut u: Vec<f64>) -> Result<Vec<f64>> {
        let nrm = self.lp(&u);
        if !(nrm > 0.0 && nrm.is_finite()) {
            return Err(Error::ZeroField);
        }
        u.par_iter_mut().for_each(|v| *v /= nrm);
        Ok(u)
    }

    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.dv * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    /// Fixed-point map applied to `W = K*U`.
    fn step(&self, w: &[f64]) -> Vec<f64> {
        let e = 1.0 / (self.p - 1.0);
        if self.nonneg {
            return w.par_iter().map(|&v| if v > 0.0 { v.powf(e) } else { 0.0 }).collect();
        }
        let mags = self.magnitudes(w);
        let s = (2.0 - self.p) / (self.p - 1.0);
        let mut out = w.to_vec();
        out.par_chunks_mut(self.n).for_each(|chunk| {
            for (v, m) in chunk.iter_mut().zip(&mags) {
                *v = if *m > 0.0 { *v * m.powf(s) } else { 0.0 };
            }
        });
        out
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.lp(&d)
    }

    /// `||lambda |u|^{p-2} u - K*u||_2 / ||K*u||_2`.
    fn el_residual(&self, u: &[f64], w: &[f64], lambda: f64) -> f64 {
        let mags = self.magnitudes(u);
        let mut num = 0.0;
        let mut den = 0.0;
        for a in 0..self.c {
            for i in 0..self.n {
                let m = mags[i];
                let g = if m > 0.0 { lambda * m.powf(self.p - 2.0) * u[a * self.n + i] } else { 0.0 };
                let wi = w[a * self.n + i];
                num += (g - wi).powi(2);
                den += wi * wi;
            }
        }
        if den > 0.0 { (num / den).sqrt() } else { f64::INFINITY }
    }
}

fn gaussian_bump(g: &Grid, comps: usize) -> Vec<f64> {
    let bump: Vec<f64> = (0..g.len())
        .map(|i| {
            let x = g.position(i);
            (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp()
        })
        .collect();
    if comps == 1 {
        return bump;
    }
    let mut out = vec![0.0; 2 * g.len()];
    out.extend(bump);
    out
}

fn random_init(g: &Grid, comps: usize, seed: u64, nonneg: bool) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..comps * g.len())
        .map(|_| if nonneg { rng.random::<f64>() } else { 2.0 * rng.random::<f64>() - 1.0 })
        .collect()
}

fn initial(g: &Grid, comps: usize, init: &Init, nonneg: bool) -> Result<Vec<f64>> {
    match init {
        Init::GaussianBump => Ok(gaussian_bump(g, comps)),
        Init::Random { seed } => Ok(random_init(g, comps, *seed, nonneg)),
        Init::Provided { values } => {
            if values.len() != comps * g.len() {
                return invalid(format!(
                    "provided init has {} values, expected {}",
                    values.len(),
                    comps * g.len()
                ));
            }
            Ok(if nonneg { values.iter().map(|v| v.abs()).collect() } else { values.clone() })
        }
    }
}

struct Outcome {
    u: Vec<f64>,
    report: MaximizerReport,
}

fn run(op: &dyn Operator, opts: &MaximizeOptions, nonneg: bool) -> Result<Outcome> {
    opts.validate()?;
    let g = op.grid().clone();
    let ctx = Ctx { op, n: g.len(), c: op.comps(), dv: g.cell_volume(), p: opts.p, nonneg };
    let order = (opts.symmetrize && ctx.c == 1).then(|| radial_order(&g));
    let blocks = order.as_ref().map(|o| shell_blocks(&g, o)).unwrap_or_default();
    // rearrange, then flatten each shell so near-ties cannot reshuffle between iterations
    let symmetrize = |u: Vec<f64>| -> Vec<f64> {
        match &order {
            Some(o) => {
                let mut v = rearrange_with(&ScalarField::new(&g, u).expect("shape"), o).into_values();
                shell_average(&mut v, o, &blocks);
                v
            }
            None => u,
        }
    };

    let mut reinitialized = false;
    let mut u = ctx.normalize(symmetrize(initial(&g, ctx.c, &opts.init, nonneg)?))?;
    let mut w = ctx.op.apply(&u);
    let mut q = ctx.dot(&w, &u);
    if !(q > 0.0) {
        reinitialized = true;
        u = ctx.normalize(symmetrize(gaussian_bump(&g, ctx.c)))?;
        w = ctx.op.apply(&u);
        q = ctx.dot(&w, &u);
        if !(q > 0.0) {
            return Err(Error::NonConvergence("Q <= 0 at initialization".into()));
        }
    }

    let mut history = vec![q];
    let mut converged = false;
    let mut iterations = 0;
    let mut last_step = f64::INFINITY;
    let mut reason = StopReason::MaxIter;
    'outer: while iterations < opts.max_iter {
        iterations += 1;
        let t = ctx.normalize(symmetrize(ctx.step(&w)))?;
        let mut alpha = opts.relaxation;
        let (cand, wc, qc) = loop {
            let cand = if alpha >= 1.0 {
                t.clone()
            } else {
                let mix: Vec<f64> = u.iter().zip(&t).map(|(a, b)| (1.0 - alpha) * a + alpha * b).collect();
                ctx.normalize(mix)?
            };
            let wc = ctx.op.apply(&cand);
            let qc = ctx.dot(&wc, &cand);
            if !opts.safeguard || qc >= q * (1.0 - ROUNDOFF_DROP) {
                break (cand, wc, qc);
            }
            let d = ctx.distance(&cand, &u);
            if d <= opts.tol {
                // round-off level decrease at a fixed point: keep the current iterate
                last_step = d;
                converged = true;
                reason = StopReason::Step;
                break 'outer;
            }
            alpha /= 2.0;
            if alpha < 1.0 / 64.0 {
                last_step = d;
                reason = StopReason::Safeguard;
                break 'outer;
            }
        };
        last_step = ctx.distance(&cand, &u);
        u = cand;
        w = wc;
        q = qc;
        history.push(q);
        if last_step <= opts.tol {
            converged = true;
            reason = StopReason::Step;
            break;
        }
        if let Some(rt) = opts.residual_tol {
            if ctx.el_residual(&u, &w, q) <= rt {
                converged = true;
                reason = StopReason::Residual;
                break;
            }
        }
    }

    let el_residual = ctx.el_residual(&u, &w, q);
    let density = ScalarField::new(&g, ctx.magnitudes(&u))?;
    let mut shift = [0i64; 3];
    if opts.recenter && order.is_none() {
        shift = recentering_shift(&density, opts.p, g.half_width() / 8.0)?;
        if shift != [0; 3] {
            u = u
                .chunks(ctx.n)
                .flat_map(|c| ScalarField::new(&g, c.to_vec()).expect("shape").shifted(shift).into_values())
                .collect();
        }
    }
    let density = ScalarField::new(&g, ctx.magnitudes(&u))?;
    let cc = concentration_diagnostics_with(&density, opts.p, &[], opts.cc_eps)?;
    Ok(Outcome {
        u,
        report: MaximizerReport {
            p: opts.p,
            q_value: q,
            iterations,
            converged,
            el_residual,
            last_step,
            cc_class: cc.class,
            cc_lambda: cc.lambda,
            recenter_shift: shift,
            reinitialized,
            stop_reason: reason,
            q_history: history,
        },
    })
}

/// Nonnegative maximizer for a nonnegative kernel symbol.
pub fn maximize_scalar_q(k: &ScalarMultiplier, opts: &MaximizeOptions) -> Result<(ScalarField, MaximizerReport)> {
    let out = run(k, opts, true)?;
    Ok((ScalarField::new(k.grid(), out.u)?, out.report))
}

/// Sign-changing scalar variant: `f <- normalize(|w|^{(2-p)/(p-1)} w)`.
pub fn maximize_scalar_q_signed(
    k: &ScalarMultiplier,
    opts: &MaximizeOptions,
) -> Result<(ScalarField, MaximizerReport)> {
    let out = run(k, opts, false)?;
    Ok((ScalarField::new(k.grid(), out.u)?, out.report))
}

pub fn maximize_vector_q(m: &TensorMultiplier, opts: &MaximizeOptions) -> Result<(VectorField, MaximizerReport)> {
    if m.grid().dim() != 3 {
        return Err(Error::InvalidGrid("vector maximization needs a 3-D grid".into()));
    }
    let mut o = opts.clone();
    o.symmetrize = false;
    let out = run(m, &o, false)?;
    Ok((to_vector(m.grid(), out.u), out.report))
}

/// `Q(f) = integral (K*f) f`.
/// Runs `opts.init` and one random start per seed; keeps the largest `Q`.
pub fn maximize_scalar_q_multistart(
    k: &ScalarMultiplier,
    opts: &MaximizeOptions,
    seeds: &[u64],
) -> Result<(ScalarField, MaximizerReport)> {
    let mut best = maximize_scalar_q(k, opts)?;
    for &seed in seeds {
        let o = MaximizeOptions { init: Init::Random { seed }, ..opts.clone() };
        let cand = maximize_scalar_q(k, &o)?;
        if cand.1.q_value > best.1.q_value {
            best = cand;
        }
    }
    Ok(best)
}

pub fn q_value(k: &ScalarMultiplier, f: &ScalarField) -> Result<f64> {
    k.quadratic_form(f)
}

/// Euler-Lagrange residual of a scalar field at exponent `p`, with `lambda = Q(f)/||f||_p^p`.
pub fn scalar_el_residual(k: &ScalarMultiplier, f: &ScalarField, p: f64) -> Result<f64> {
    let g = f.grid();
    let op: &dyn Operator = k;
    let ctx = Ctx { op, n: g.len(), c: 1, dv: g.cell_volume(), p, nonneg: false };
    let w = k.apply(f)?;
    let lambda = ctx.dot(w.values(), f.values()) / ctx.lp(f.values()).powf(p);
    Ok(ctx.el_residual(f.values(), w.values(), lambda))
}
