mod common;

use common::*;
use curlcurl::calculus::{curl, gradient};
use curlcurl::field::inner_vector;
use curlcurl::kerr::*;
use curlcurl::*;
use proptest::prelude::*;

fn norm(e: &VectorField) -> f64 {
    inner_vector(e, e).unwrap().sqrt()
}

#[test]
fn synthetic_report() {
    let r = report_from_parts(2.0, 1.0, 1.0, 0.0);
    assert!((r.t_star.unwrap() - 2f64.sqrt()).abs() < 1e-15);
    assert!((r.energy_at_nehari.unwrap() - 1.0).abs() < 1e-15);
    assert!(!r.attained);
    assert!(report_from_parts(1.0, 0.0, 1.0, 0.5).quotient.is_none());
}

#[test]
fn small_gradient_fields_reach_the_bound_for_a_ball_kernel() {
    let g = Grid::new(3, 48, 2.0).unwrap();
    let k = Kernel::new(&KernelSpec::ball(0.8, 1.0), &g).unwrap();
    // support diameter 0.7 < R
    let e = gradient(&BumpPotential::new(0.35).sample(&g)).unwrap();
    let r = kerr_energy(&e, &k).unwrap();
    assert!((r.quotient.unwrap() - 0.25).abs() < 2e-2, "{r:?}");
    // same magnitude, swirling direction
    let swirl = VectorField::from_fn(&g, |x| {
        let rc = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let m = {
            let i = g.flat_index(std::array::from_fn(|a| ((x[a] + g.half_width()) / g.spacing()).round() as usize % g.n()));
            let v = e.at(i);
            (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
        };
        if rc == 0.0 { [0.0, 0.0, m] } else { [-m * x[1] / rc, m * x[0] / rc, 0.0] }
    })
    .unwrap();
    let s = kerr_energy(&swirl, &k).unwrap();
    assert!((s.i_nl - r.i_nl).abs() < 1e-10 * r.i_nl);
    assert!(s.quotient.unwrap() > 0.25 + 1e-3);
    assert!(s.quotient.unwrap() >= r.quotient.unwrap());
}

#[test]
fn minimizer_for_ball_kernels() {
    let g = Grid::new(3, 48, 2.0).unwrap();
    for (radius, a, target, tol) in [(0.6, 1.0, 0.25, 2e-2), (0.5, 2.0, 0.125, 1e-2)] {
        let k = Kernel::new(&KernelSpec::ball(radius, a), &g).unwrap();
        let m = kerr_minimizer(&k).unwrap();
        let q = m.report.quotient.unwrap();
        assert!((q - target).abs() < tol, "R={radius} a={a}: {q}");
        assert!(m.support_diameter <= radius + 1e-12);
        assert!(norm(&curl(&m.field).unwrap()) <= 1e-11 * norm(&m.field));
        // scaled onto the Nehari set: I_L = I_NL
        assert!((m.report.i_l - m.report.i_nl).abs() < 1e-10 * m.report.i_l);
        assert!(m.report.attained);
    }
}

#[test]
fn gaussian_minimizer_is_rejected() {
    let g = Grid::new(3, 16, 2.0).unwrap();
    let k = Kernel::new(&KernelSpec::gaussian(1.0), &g).unwrap();
    match kerr_minimizer(&k) {
        Err(Error::NotAttained(msg)) => assert!(msg.contains("delta_K")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn shrinking_family_approaches_the_bound() {
    let g = Grid::new(3, 64, 2.0).unwrap();
    let k = Kernel::new(&KernelSpec::gaussian(1.0), &g).unwrap();
    let bump = BumpPotential::new(1.0);
    let fam = kerr_shrinking_family(&bump, &[1.0, 2.0, 4.0], &k).unwrap();
    let q: Vec<f64> = fam.iter().map(|(_, r)| r.quotient.unwrap()).collect();
    assert!(q[0] > q[1] && q[1] > q[2], "{q:?}");
    assert!((q[2] - 0.25).abs() < 0.025, "{q:?}");
    assert!(q.iter().all(|v| *v >= 0.25 - 1e-3));
    // n = 4 is only 8 cells across; its norm is resolution-limited
    let norms: Vec<f64> = [1.0, 2.0].iter().map(|n| norm(&gradient(&bump.rescaled(*n).sample(&g)).unwrap())).collect();
    for v in &norms {
        assert!(rel(*v, norms[0]) < 1e-3, "{norms:?}");
    }
    let rows = shrink_rows(&fam);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.gap.unwrap() > 0.0));
}

#[test]
fn ball_kernel_family_sits_on_the_bound_once_small() {
    let g = Grid::new(3, 64, 2.0).unwrap();
    let k = Kernel::new(&KernelSpec::ball(0.6, 1.0), &g).unwrap();
    let fam = kerr_shrinking_family(&BumpPotential::new(1.0), &[1.0, 4.0], &k).unwrap();
    // member n = 4 has diameter 0.5 < 0.6
    assert!(fam[0].1.quotient.unwrap() > 0.27);
    assert!((fam[1].1.quotient.unwrap() - 0.25).abs() < 2e-2);
}

#[test]
fn unresolved_members_are_rejected() {
    let g = Grid::new(3, 16, 2.0).unwrap();
    let k = Kernel::new(&KernelSpec::gaussian(1.0), &g).unwrap();
    assert!(kerr_shrinking_family(&BumpPotential::new(1.0), &[4.0], &k).is_err());
    assert!(kerr_shrinking_family(&BumpPotential::new(1.0), &[], &k).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, ..ProptestConfig::default() })]

    #[test]
    fn quotient_respects_the_lower_bound(seed in any::<u64>(), which in 0usize..3, amp in 0.5f64..3.0) {
        let g = Grid::new(3, 16, 3.0).unwrap();
        let spec = [KernelSpec::gaussian(amp), KernelSpec::exponential(amp), KernelSpec::ball(1.0, amp)][which].clone();
        let k = Kernel::new(&spec, &g).unwrap();
        let e = blobs_vector(&g, &mut rng(seed), 2);
        let r = kerr_energy(&e, &k).unwrap();
        prop_assert!(r.i_nl > 0.0);
        prop_assert!(r.quotient.unwrap() >= 1.0 / (4.0 * amp) - 1e-3);
    }

    #[test]
    fn fibering_maximum_matches_direct_evaluation(seed in any::<u64>()) {
        let g = Grid::new(3, 16, 3.0).unwrap();
        let k = Kernel::new(&KernelSpec::exponential(1.0), &g).unwrap();
        let e = blobs_vector(&g, &mut rng(seed), 2);
        let r = kerr_energy(&e, &k).unwrap();
        let t = r.t_star.unwrap();
        let direct = kerr_functional(&e.scaled(t), &k).unwrap();
        prop_assert!(rel(direct, r.energy_at_nehari.unwrap()) < 1e-10);
        for s in [0.5, 0.9, 1.1, 2.0] {
            prop_assert!(kerr_functional(&e.scaled(s * t), &k).unwrap() < direct);
        }
    }
}
