#![allow(dead_code)]

use curlcurl::{Grid, ScalarField, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn noise(g: &Grid, rng: &mut ChaCha8Rng) -> ScalarField {
    let v = (0..g.len()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    ScalarField::new(g, v).unwrap()
}

pub fn noise_vector(g: &Grid, rng: &mut ChaCha8Rng) -> VectorField {
    VectorField::from_components([noise(g, rng), noise(g, rng), noise(g, rng)]).unwrap()
}

/// Sum of a few Gaussian blobs with random centers, widths and signs.
pub fn blobs(g: &Grid, rng: &mut ChaCha8Rng, count: usize, positive: bool) -> ScalarField {
    let l = g.half_width();
    let d = g.dim();
    let params: Vec<([f64; 3], f64, f64)> = (0..count)
        .map(|_| {
            let mut c = [0.0; 3];
            for x in c.iter_mut().take(d) {
                *x = rng.random_range(-0.4 * l..0.4 * l);
            }
            let w = rng.random_range(0.15 * l..0.35 * l);
            let a = if positive { rng.random_range(0.2..1.0) } else { rng.random_range(-1.0..1.0) };
            (c, w, a)
        })
        .collect();
    ScalarField::from_fn(g, |x| {
        params
            .iter()
            .map(|(c, w, a)| {
                let r2: f64 = (0..3).map(|k| (x[k] - c[k]).powi(2)).sum();
                a * (-r2 / (w * w)).exp()
            })
            .sum()
    })
}

pub fn blobs_vector(g: &Grid, rng: &mut ChaCha8Rng, count: usize) -> VectorField {
    VectorField::from_components([blobs(g, rng, count, false), blobs(g, rng, count, false), blobs(g, rng, count, false)])
        .unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Dense `A_ij` with `Q(f) = f^T A f`, built directly from a pair-distance kernel on a 1-D grid.
pub fn dense_matrix_1d(g: &Grid, k: impl Fn(f64) -> f64) -> Vec<Vec<f64>> {
    let n = g.n();
    let period = 2.0 * g.half_width();
    let h = g.spacing();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = (i as f64 - j as f64) * h;
                    let d = d - period * (d / period).round();
                    h * h * k(d.abs())
                })
                .collect()
        })
        .collect()
}

/// Multi-start projected-gradient ascent of `f^T A f / ||f||_p^2` over `f >= 0`.
pub fn dense_q_max(a: &[Vec<f64>], h: f64, p: f64, starts: usize, seed: u64) -> f64 {
    let n = a.len();
    let quad = |f: &[f64]| -> f64 { (0..n).map(|i| f[i] * (0..n).map(|j| a[i][j] * f[j]).sum::<f64>()).sum() };
    let norm = |f: &[f64]| -> f64 { (h * f.iter().map(|v| v.powf(p)).sum::<f64>()).powf(1.0 / p) };
    let ratio = |f: &[f64]| -> f64 {
        let nn = norm(f);
        if nn > 0.0 { quad(f) / (nn * nn) } else { f64::NEG_INFINITY }
    };
    let mut r = rng(seed);
    let mut best = f64::NEG_INFINITY;
    for s in 0..starts {
        let mut f: Vec<f64> = if s < n {
            (0..n).map(|i| if i == s { 1.0 } else { 0.05 }).collect()
        } else if s == n {
            vec![1.0; n]
        } else {
            (0..n).map(|_| r.random::<f64>()).collect()
        };
        let nn = norm(&f);
        f.iter_mut().for_each(|v| *v /= nn);
        let mut val = ratio(&f);
        let mut eta = 1.0;
        for _ in 0..20000 {
            let af: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i][j] * f[j]).sum()).collect();
            let qf = quad(&f);
            // on the unit sphere ||f||_p = 1
            let grad: Vec<f64> = (0..n).map(|i| 2.0 * af[i] - 2.0 * qf * h * f[i].powf(p - 1.0)).collect();
            let mut improved = false;
            while eta > 1e-16 {
                let mut c: Vec<f64> = (0..n).map(|i| (f[i] + eta * grad[i]).max(0.0)).collect();
                let cn = norm(&c);
                if cn > 0.0 {
                    c.iter_mut().for_each(|v| *v /= cn);
                    let cv = ratio(&c);
                    if cv > val {
                        let gain = cv - val;
                        f = c;
                        val = cv;
                        eta *= 2.0;
                        improved = gain > 1e-16 * val.abs();
                        break;
                    }
                }
                eta *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best = best.max(newton_polish(a, h, p, &f));
    }
    best
}

/// Newton ascent on `y -> R(y^2)` with a finite-difference Hessian; the pseudo-inverse
/// absorbs the flat scaling direction.
fn newton_polish(a: &[Vec<f64>], h: f64, p: f64, f0: &[f64]) -> f64 {
    use nalgebra::{DMatrix, DVector};
    let n = a.len();
    let ratio = |y: &[f64]| -> f64 {
        let f: Vec<f64> = y.iter().map(|v| v * v).collect();
        let q: f64 = (0..n).map(|i| f[i] * (0..n).map(|j| a[i][j] * f[j]).sum::<f64>()).sum();
        let np = h * f.iter().map(|v| v.powf(p)).sum::<f64>();
        q / np.powf(2.0 / p)
    };
    let grad = |y: &[f64]| -> Vec<f64> {
        let f: Vec<f64> = y.iter().map(|v| v * v).collect();
        let af: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i][j] * f[j]).sum()).collect();
        let q: f64 = (0..n).map(|i| f[i] * af[i]).sum();
        let np = h * f.iter().map(|v| v.powf(p)).sum::<f64>();
        let n2 = np.powf(2.0 / p);
        (0..n)
            .map(|i| {
                let dn2 = 2.0 * np.powf(2.0 / p - 1.0) * h * f[i].powf(p - 1.0);
                let df = 2.0 * af[i] / n2 - q * dn2 / (n2 * n2);
                df * 2.0 * y[i]
            })
            .collect()
    };
    let mut y: Vec<f64> = f0.iter().map(|v| v.sqrt()).collect();
    let mut val = ratio(&y);
    for _ in 0..100 {
        let g = grad(&y);
        let mut hess = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let e = 1e-6 * y[j].abs().max(1e-3);
            let (mut yp, mut ym) = (y.clone(), y.clone());
            yp[j] += e;
            ym[j] -= e;
            let (gp, gm) = (grad(&yp), grad(&ym));
            for i in 0..n {
                hess[(i, j)] = (gp[i] - gm[i]) / (2.0 * e);
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let eig = hess.symmetric_eigen();
        let gv = DVector::from_vec(g.clone());
        let scale = eig.eigenvalues.amax();
        // ascent direction: -H^+ g on the concave part only
        let mut d = DVector::<f64>::zeros(n);
        for k in 0..n {
            let lam = eig.eigenvalues[k];
            let v = eig.eigenvectors.column(k);
            let c = v.dot(&gv);
            if lam < -1e-9 * scale {
                d += v * (-c / lam);
            } else {
                d += v * (c / scale.max(1e-300));
            }
        }
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-12 {
            let cand: Vec<f64> = (0..n).map(|i| y[i] + t * d[i]).collect();
            let cv = ratio(&cand);
            if cv > val {
                y = cand;
                val = cv;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    val
}
