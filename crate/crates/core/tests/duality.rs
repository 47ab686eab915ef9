mod common;

use common::*;
use curlcurl::duality::*;
use curlcurl::qmax::MaximizeOptions;
use curlcurl::*;
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::PI;

fn bessel() -> SymbolSpec {
    SymbolSpec::Bessel { s: 1.0 }
}

/// `I = (1/2 - 1/r) ||u||_r^r` for the sech-type solitons of `-u'' + u = |u|^{r-2} u` on the line.
fn soliton_energy(r: f64) -> f64 {
    match r as u32 {
        3 => 6.0 / 5.0,
        4 => 4.0 / 3.0,
        6 => 3f64.sqrt() * PI / 4.0,
        _ => unreachable!(),
    }
}

#[test]
fn primal_and_dual_agree_in_one_dimension() {
    let g = Grid::new(1, 256, 16.0).unwrap();
    for r in [3.0, 4.0, 6.0] {
        let (u, v, rep) = duality_run(&bessel(), r, &g, &PrimalOptions::default(), &MaximizeOptions::default()).unwrap();
        assert!(rep.primal.converged && rep.dual.maximizer.converged);
        assert!(rep.primal.el_residual <= 1e-8, "r={r}: {}", rep.primal.el_residual);
        assert!(rep.dual.dual_residual <= 1e-8, "r={r}: {}", rep.dual.dual_residual);
        assert!(rep.correspondence.energy_gap <= 1e-6);
        assert!(rep.correspondence.map_residual <= 1e-5);
        assert!(rel(rep.primal.i_value, soliton_energy(r)) < 1e-9, "r={r}: {}", rep.primal.i_value);
        assert!(rep.dual.j_value > 0.0);

        let m = bessel().multiplier(&g).unwrap();
        let minv = bessel().inverse_multiplier(&g).unwrap();
        let rp = r / (r - 1.0);
        let direct = primal_energy(&u, &m, r).unwrap();
        assert!(rel(direct, rep.primal.i_value) < 1e-10);
        let j = dual_energy_scalar(&v, &minv, rp).unwrap();
        assert!(rel(j, rep.dual.j_value) < 1e-10);
        assert!((dual_energy_scalar(&v.shifted([37, 0, 0]), &minv, rp).unwrap() - j).abs() < 1e-12);
        assert!((primal_energy(&u.scaled(-1.0), &m, r).unwrap() - direct).abs() < 1e-14);
        assert!((dual_energy_scalar(&v.scaled(-1.0), &minv, rp).unwrap() - j).abs() < 1e-14);
    }
}

#[test]
fn correspondence_survives_shift_and_sign() {
    let g = Grid::new(1, 256, 16.0).unwrap();
    let r = 4.0;
    let (u, v, _) = duality_run(&bessel(), r, &g, &PrimalOptions::default(), &MaximizeOptions::default()).unwrap();
    let c = duality_correspondence_check(&u.shifted([-40, 0, 0]).scaled(-1.0), &v, &bessel(), r).unwrap();
    assert!(c.map_residual <= 1e-5, "{c:?}");
    assert_eq!(c.sign, -1.0);
    assert_eq!(c.shift[0], 40);
}

#[test]
fn three_dimensional_smoke() {
    let g = Grid::new(3, 32, 8.0).unwrap();
    let (_, _, rep) = duality_run(&bessel(), 3.0, &g, &PrimalOptions::default(), &MaximizeOptions::default()).unwrap();
    assert!(rep.primal.converged);
    assert!(rep.correspondence.energy_gap <= 1e-6);
    assert!(rep.correspondence.map_residual <= 1e-5);
}

#[test]
fn report_serializes() {
    let g = Grid::new(1, 64, 12.0).unwrap();
    let (_, _, rep) = duality_run(&bessel(), 4.0, &g, &PrimalOptions::default(), &MaximizeOptions::default()).unwrap();
    let text = serde_json::to_string(&rep).unwrap();
    let back: DualityReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, rep);
}

proptest! {
    #[test]
    fn legendre_pair_identities(r in 2.05f64..10.0, seed in any::<u64>()) {
        let pair = PowerPair { r };
        prop_assert!(((r - 1.0) * (pair.r_prime() - 1.0) - 1.0).abs() < 1e-12);
        let mut g = rng(seed);
        for _ in 0..1000 {
            let z: f64 = g.random_range(-50.0..50.0);
            let u = pair.g_v(z);
            // F(G_v(z)) = z G_v(z) - G(z)
            let lhs = pair.f(u);
            let rhs = z * u - pair.g(z);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1e-300) * 10.0);
            prop_assert!((pair.f_u(u) - z).abs() <= 1e-12 * z.abs());
            prop_assert!((pair.g_v(pair.f_u(z)) - z).abs() <= 1e-12 * z.abs());
        }
    }
}
