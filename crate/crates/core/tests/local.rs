use curlcurl::calculus::curl;
use curlcurl::field::inner_vector;
use curlcurl::local::*;
use curlcurl::*;
use std::f64::consts::PI;

fn norm(e: &VectorField) -> f64 {
    inner_vector(e, e).unwrap().sqrt()
}

#[test]
fn sharp_profile_is_unit_or_zero() {
    let g = Grid::new(3, 24, 1.0).unwrap();
    let e = build_local_solution(&LocalSolutionSpec::ball(0.5, 2.0, 0.0), &g).unwrap();
    let m = e.magnitude();
    assert!(m.values().iter().all(|v| *v == 0.0 || (v - 1.0).abs() < 1e-14));
    for i in 0..g.len() {
        assert_eq!(m.values()[i] > 0.0, g.radius(i) < 0.5 && g.radius(i) > 0.0, "cell {i}");
    }
}

#[test]
fn mollified_fields_are_gradients() {
    let g = Grid::new(3, 48, 0.75).unwrap();
    for spec in [
        LocalSolutionSpec::ball(0.5, 2.0, 4.0 * g.spacing()),
        LocalSolutionSpec { family: Family::Annulus { rho: 0.2, j: 3.0 }, q: 2.0, sign: 1, sigma: 4.0 * g.spacing() },
    ] {
        let e = build_local_solution(&spec, &g).unwrap();
        assert!(norm(&curl(&e).unwrap()) <= 1e-11 * norm(&e));
    }
}

#[test]
fn annulus_support() {
    let g = Grid::new(3, 32, 1.0).unwrap();
    let spec = LocalSolutionSpec { family: Family::Annulus { rho: 0.3, j: 5.0 }, q: 2.0, sign: 1, sigma: 0.0 };
    let m = build_local_solution(&spec, &g).unwrap().magnitude();
    for i in 0..g.len() {
        if m.values()[i] > 0.0 {
            let r = g.radius(i);
            assert!(r > 0.3 && r < 0.5, "{r}");
        }
    }
    assert!(m.max_abs() > 0.0);
}

/// `I = (q-1)/(2q) |B_r|`, i.e. `(pi/3) r^3` at `q = 2`.
#[test]
fn ball_energy_matches_closed_form() {
    let g = Grid::new(3, 64, 0.75).unwrap();
    let h = g.spacing();
    for (r, sign) in [(0.5, 1), (0.5, -1)] {
        let spec = LocalSolutionSpec { sign, ..LocalSolutionSpec::ball(r, 2.0, 2.0 * h) };
        let en = local_energy(&build_local_solution(&spec, &g).unwrap(), 2.0, sign).unwrap();
        let exact = sign as f64 * PI / 3.0 * r * r * r;
        assert!((spec.exact_energy() - exact).abs() < 1e-15);
        assert!((en.energy / exact - 1.0).abs() < 0.05, "{} vs {exact}", en.energy);
        // on the Nehari set I equals (q-1)/(2q) times the nonlinear term
        assert!((en.energy - sign as f64 * 0.25 * en.nonlinear).abs() < 0.05 * exact.abs());
    }
}

#[test]
fn energy_vanishes_cubically() {
    let g = Grid::new(3, 64, 0.75).unwrap();
    let sigma = 2.0 * g.spacing();
    let i = |r: f64| {
        local_energy(&build_local_solution(&LocalSolutionSpec::ball(r, 2.0, sigma), &g).unwrap(), 2.0, 1).unwrap().energy
    };
    let (big, small, tiny) = (i(0.5), i(0.25), i(0.125));
    assert!(big > small && small > tiny && tiny > 0.0);
    assert!((small / big - 0.125).abs() < 0.0125, "{}", small / big);
    assert!(small < big / 2.0);
}

#[test]
fn negative_family_decreases() {
    let g = Grid::new(3, 48, 0.75).unwrap();
    let sigma = 2.0 * g.spacing();
    let e = |r: f64| {
        let spec = LocalSolutionSpec { sign: -1, ..LocalSolutionSpec::ball(r, 2.0, sigma) };
        local_energy(&build_local_solution(&spec, &g).unwrap(), 2.0, -1).unwrap().energy
    };
    let (a, b) = (e(0.25), e(0.5));
    assert!(a < 0.0 && b < a);
}

#[test]
fn nehari_residuals() {
    let g = Grid::new(3, 48, 0.75).unwrap();
    let e = build_local_solution(&LocalSolutionSpec::ball(0.5, 2.0, 2.0 * g.spacing()), &g).unwrap();
    assert!(nehari_membership_residual(&e, 2.0).unwrap() <= 5e-2);
    assert!(nehari_membership_residual(&e.scaled(2.0), 2.0).unwrap() > 0.1);
    assert!(nehari_membership_residual(&VectorField::zeros(&g).unwrap(), 2.0).is_err());
}

#[test]
fn sigma_refinement_converges() {
    let g = Grid::new(3, 96, 0.75).unwrap();
    let h = g.spacing();
    let spec = LocalSolutionSpec::ball(0.25, 2.0, 0.0);
    let rows = sigma_refinement(&spec, &g, &[8.0 * h, 4.0 * h, 2.0 * h]).unwrap();
    assert_eq!(rows.len(), 3);
    let exact = spec.exact_energy();
    let errs: Vec<f64> = rows.iter().map(|r| (r.energy - exact).abs()).collect();
    assert!(errs[2] < errs[1] && errs[1] < errs[0], "{errs:?}");
    assert!(rows[0].observed_order.unwrap() >= 0.8, "{:?}", rows[0].observed_order);
    assert!(rows[2].residual < rows[1].residual && rows[1].residual < rows[0].residual);
    assert!(rows[2].residual <= 5e-2, "{}", rows[2].residual);
}

#[test]
fn spec_validation() {
    let g = Grid::new(3, 16, 0.5).unwrap();
    assert!(build_local_solution(&LocalSolutionSpec::ball(0.5, 2.0, 0.0), &g).is_err());
    assert!(LocalSolutionSpec::ball(0.2, 0.5, 0.0).validate().is_err());
    let bad = LocalSolutionSpec { family: Family::Shells { shells: vec![(0.1, 0.2, 2)] }, q: 2.0, sign: 1, sigma: 0.0 };
    assert!(bad.validate().is_err());
}
