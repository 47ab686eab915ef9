//! Spectral derivatives and the Helmholtz projector.
//!
//! Derivative symbols use `i xi` with the Nyquist wavenumber zeroed.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ScalarField, SpectralVector, VectorField};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn require_3d(g: &crate::grid::Grid) -> Result<()> {
    if g.dim() == 3 {
        Ok(())
    } else {
        Err(Error::InvalidGrid("operation needs a 3-D grid".into()))
    }
}

/// Derivative along one axis; works in any dimension.
pub fn partial(phi: &ScalarField, axis: usize) -> Result<ScalarField> {
    let g = phi.grid();
    if axis >= g.dim() {
        return Err(Error::InvalidParameter(format!("axis {axis} out of range")));
    }
    let mut s = phi.fft();
    let n = g.n();
    let stride = n.pow((g.dim() - 1 - axis) as u32);
    let kd = g.derivative_wavenumbers();
    s.coeffs_mut()
        .par_iter_mut()
        .enumerate()
        .for_each(|(i, c)| *c *= I * kd[(i / stride) % n]);
    Ok(s.ifft())
}

pub fn gradient(phi: &ScalarField) -> Result<VectorField> {
    require_3d(phi.grid())?;
    let s = phi.fft();
    let g = phi.grid();
    let comps = std::array::from_fn(|a| {
        s.coeffs()
            .par_iter()
            .enumerate()
            .map(|(i, c)| c * I * g.wavevector(i)[a])
            .collect()
    });
    Ok(SpectralVector::new(g, comps)?.ifft())
}

pub fn divergence(e: &VectorField) -> Result<ScalarField> {
    require_3d(e.grid())?;
    let g = e.grid();
    let s = e.fft();
    let coeffs: Vec<Complex64> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let xi = g.wavevector(i);
            let c = s.at(i);
            I * (xi[0] * c[0] + xi[1] * c[1] + xi[2] * c[2])
        })
        .collect();
    Ok(crate::field::SpectralScalar::new(g, coeffs)?.ifft())
}

pub fn curl(e: &VectorField) -> Result<VectorField> {
    require_3d(e.grid())?;
    Ok(map_spectral(e, |xi, c| {
        [
            I * (xi[1] * c[2] - xi[2] * c[1]),
            I * (xi[2] * c[0] - xi[0] * c[2]),
            I * (xi[0] * c[1] - xi[1] * c[0]),
        ]
    }))
}

pub fn laplacian(phi: &ScalarField) -> ScalarField {
    let g = phi.grid();
    let mut s = phi.fft();
    s.coeffs_mut().par_iter_mut().enumerate().for_each(|(i, c)| {
        let xi = g.wavevector(i);
        *c *= -(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
    });
    s.ifft()
}

/// Componentwise vector Laplacian.
pub fn vector_laplacian(e: &VectorField) -> Result<VectorField> {
    require_3d(e.grid())?;
    Ok(map_spectral(e, |xi, c| {
        let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        c.map(|z| -k2 * z)
    }))
}

/// Splits `E` into solenoidal `E1 = Pi E` and irrotational `E2 = R E`.
///
/// `R(0) := 0`, so constants go to `E1`.
pub fn helmholtz_project(e: &VectorField) -> Result<(VectorField, VectorField)> {
    require_3d(e.grid())?;
    let g = e.grid();
    let s = e.fft();
    let irr: Vec<[Complex64; 3]> = (0..g.len())
        .into_par_iter()
        .map(|i| project_longitudinal(g.wavevector(i), s.at(i)))
        .collect();
    let mut sol = s.clone();
    let mut lon = s;
    for a in 0..3 {
        for (i, v) in irr.iter().enumerate() {
            sol.components_mut()[a][i] -= v[a];
            lon.components_mut()[a][i] = v[a];
        }
    }
    Ok((sol.ifft(), lon.ifft()))
}

/// `R(xi) c` with `R = xi xi^T / |xi|^2`, zero when `xi = 0`.
pub(crate) fn project_longitudinal(xi: [f64; 3], c: [Complex64; 3]) -> [Complex64; 3] {
    let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    if k2 == 0.0 {
        return [Complex64::default(); 3];
    }
    let d = (xi[0] * c[0] + xi[1] * c[1] + xi[2] * c[2]) / k2;
    [d * xi[0], d * xi[1], d * xi[2]]
}

pub(crate) fn map_spectral(
    e: &VectorField,
    f: impl Fn([f64; 3], [Complex64; 3]) -> [Complex64; 3] + Sync,
) -> VectorField {
    let g = e.grid();
    let s = e.fft();
    let out: Vec<[Complex64; 3]> =
        (0..g.len()).into_par_iter().map(|i| f(g.wavevector(i), s.at(i))).collect();
    let comps = std::array::from_fn(|a| out.iter().map(|v| v[a]).collect());
    SpectralVector::new(g, comps).expect("shape preserved").ifft()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::LpNorm;
    use crate::grid::Grid;

    fn smooth_phi(g: &Grid) -> ScalarField {
        ScalarField::from_fn(g, |x| {
            let r2 = x[0] * x[0] + 2.0 * x[1] * x[1] + 0.5 * x[2] * x[2];
            (-r2).exp() * (1.0 + x[0] - 0.3 * x[1] * x[2])
        })
    }

    #[test]
    fn partial_of_sine_1d() {
        let g = Grid::new(1, 32, std::f64::consts::PI).unwrap();
        let f = ScalarField::from_fn(&g, |x| (3.0 * x[0]).sin());
        let d = partial(&f, 0).unwrap();
        for (i, v) in d.values().iter().enumerate() {
            let x = g.position(i)[0];
            assert!((v - 3.0 * (3.0 * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_gaussian_matches_analytic() {
        let g = Grid::new(3, 48, 6.0).unwrap();
        let f = ScalarField::from_fn(&g, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp());
        let e = gradient(&f).unwrap();
        for i in (0..g.len()).step_by(97) {
            let x = g.position(i);
            let want = -2.0 * x[1] * f.values()[i];
            assert!((e.component(1)[i] - want).abs() < 1e-9);
        }
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        let g = Grid::new(3, 24, 5.0).unwrap();
        let e = gradient(&smooth_phi(&g)).unwrap();
        let c = curl(&e).unwrap();
        assert!(c.lp_norm(2.0).unwrap() <= 1e-12 * e.lp_norm(2.0).unwrap());
    }

    #[test]
    fn helmholtz_splits_gradient_and_constant() {
        let g = Grid::new(3, 24, 5.0).unwrap();
        let e = gradient(&smooth_phi(&g)).unwrap();
        let (e1, e2) = helmholtz_project(&e).unwrap();
        let n = e.lp_norm(2.0).unwrap();
        assert!(e1.lp_norm(2.0).unwrap() <= 1e-10 * n);
        assert!(e2.sub(&e).unwrap().lp_norm(2.0).unwrap() <= 1e-10 * n);

        let c = VectorField::from_fn(&g, |_| [1.0, -2.0, 0.5]).unwrap();
        let (c1, c2) = helmholtz_project(&c).unwrap();
        assert!(c2.lp_norm(2.0).unwrap() < 1e-12);
        assert!(c1.sub(&c).unwrap().lp_norm(2.0).unwrap() < 1e-12);
    }

    #[test]
    fn curl_fields_are_solenoidal() {
        let g = Grid::new(3, 24, 5.0).unwrap();
        let phi = smooth_phi(&g);
        let a = VectorField::from_components([phi.clone(), phi.map(|v| v * v), phi.map(|v| -v)])
            .unwrap();
        let e = curl(&a).unwrap();
        let (_, e2) = helmholtz_project(&e).unwrap();
        assert!(e2.lp_norm(2.0).unwrap() <= 1e-10 * e.lp_norm(2.0).unwrap());
    }

    #[test]
    fn laplacian_matches_vector_laplacian_component() {
        let g = Grid::new(3, 16, 4.0).unwrap();
        let phi = smooth_phi(&g);
        let e = VectorField::from_components([phi.clone(), phi.clone(), phi.clone()]).unwrap();
        let l = laplacian(&phi);
        let vl = vector_laplacian(&e).unwrap();
        for (a, b) in l.values().iter().zip(vl.component(2)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
