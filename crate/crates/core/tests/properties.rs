use proptest::prelude::*;

use wavelab::data::{scale_to_epsilon, sobolev_norms, DataPair, Profile, ProfileKind};
use wavelab::estimates::kss_sides;
use wavelab::grid::{build_grid, FieldSnapshot, RadialGrid};
use wavelab::level::LevelCollector;
use wavelab::mollifier::mollify_pair;
use wavelab::multiplier::{
    assemble_densities, flux_weight_constant, log_samples, HTensor, MultiplierField,
};
use wavelab::norms::{NormAccumulator, NormOrder};
use wavelab::solver::{
    solve_linear, solve_quasilinear, CoefficientField, Forcing, HKind, Nonlinearity,
};

fn kind() -> impl Strategy<Value = ProfileKind> {
    prop_oneof![
        Just(ProfileKind::Gaussian),
        Just(ProfileKind::Bump),
        Just(ProfileKind::Ripple)
    ]
}

fn pair_on(grid: &RadialGrid, k: ProfileKind, amp: f64, gamp: f64, c: f64, w: f64) -> DataPair {
    DataPair::from_profiles(
        Profile::new(k, amp, c, w).unwrap(),
        Profile::new(k, gamp, c, w).unwrap(),
        grid,
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn snapshots_vanish_at_the_origin(phi in prop::collection::vec(-5.0..5.0f64, 33), t in 0.0..3.0f64) {
        let g = build_grid(2.0, 32, 0.9, 0.0).unwrap();
        let s = FieldSnapshot::from_phi(t, &phi, &phi, &g).unwrap();
        prop_assert_eq!(s.u[0], 0.0);
        prop_assert_eq!(s.u_t[0], 0.0);
    }

    #[test]
    fn solver_keeps_the_dirichlet_origin(k in kind(), amp in -0.2..0.2f64, c in 0.0..2.0f64, w in 0.5..1.5f64) {
        let g = build_grid(8.0, 128, 0.9, 0.5).unwrap();
        let nl = Nonlinearity::new(1.0, 0.5, HKind::Linear, 0.5);
        let out = solve_quasilinear(&pair_on(&g, k, amp, amp, c, w), &nl, 1.0, &g, &mut []).unwrap();
        prop_assert_eq!(out.final_snapshot.u[0], 0.0);
    }

    #[test]
    fn rescaling_round_trips(k in kind(), amp in 0.1..3.0f64, gamp in -2.0..2.0f64, c in 0.0..2.0f64,
                             w in 0.6..1.5f64, target in 1e-4..10.0f64) {
        let g = build_grid(8.0, 512, 0.9, 0.0).unwrap();
        let p = scale_to_epsilon(&pair_on(&g, k, amp, gamp, c, w), &g, target).unwrap();
        let eps = sobolev_norms(&p, &g).unwrap().epsilon;
        prop_assert!((eps - target).abs() <= 1e-10 * target);
    }

    #[test]
    fn mollification_does_not_increase_data_norms(amp in 0.1..2.0f64, gamp in -1.0..1.0f64,
                                                  c in 0.0..2.0f64, w in 0.7..1.5f64, k in 1u32..4) {
        let g = build_grid(6.0, 768, 0.9, 0.0).unwrap();
        let p = pair_on(&g, ProfileKind::Gaussian, amp, gamp, c, w);
        let m = mollify_pair(&p, 1 << k).unwrap();
        let (a, b) = (sobolev_norms(&p, &g).unwrap(), sobolev_norms(&m, &g).unwrap());
        prop_assert!(b.epsilon <= 1.005 * a.epsilon, "{} > {}", b.epsilon, a.epsilon);
    }

    #[test]
    fn merging_slabs_equals_one_pass(amp in 0.1..1.0f64, split in 1usize..40) {
        let g = build_grid(6.0, 96, 0.9, 0.0).unwrap();
        let mut col = LevelCollector::new(1);
        solve_linear(&pair_on(&g, ProfileKind::Gaussian, amp, 0.3, 0.0, 1.0), &CoefficientField::zero(),
                     &Forcing::zero(), 1.0, &g, &mut [&mut col]).unwrap();
        let lv = &col.levels;
        let split = split.min(lv.len() - 2);
        for order in [NormOrder::First, NormOrder::Second] {
            let (mut whole, mut a, mut b) = (
                NormAccumulator::with_order(&lv[0].grid, order),
                NormAccumulator::with_order(&lv[0].grid, order),
                NormAccumulator::with_order(&lv[0].grid, order),
            );
            lv.iter().for_each(|l| whole.accumulate_level(l).unwrap());
            lv[..=split].iter().for_each(|l| a.accumulate_level(l).unwrap());
            lv[split + 1..].iter().for_each(|l| b.accumulate_level(l).unwrap());
            let (m, w) = (a.merge(&b).unwrap().finalize().unwrap(), whole.finalize().unwrap());
            for (x, y) in [(m.e1, w.e1), (m.y1, w.y1), (m.z1, w.z1), (m.y2, w.y2), (m.z2, w.z2)] {
                prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1e-300), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn z_is_dominated_by_y(k in kind(), amp in 0.05..1.0f64, c in 0.0..2.0f64, t in 0.2..3.0f64) {
        let g = build_grid(8.0, 128, 0.9, 0.0).unwrap();
        let out = solve_linear(&pair_on(&g, k, amp, -amp, c, 1.0), &CoefficientField::zero(), &Forcing::zero(),
                               t, &g, &mut []).unwrap();
        let n = out.norms.finalize().unwrap();
        prop_assert!(n.z1 <= n.y1 * n.z_over_y_factor(), "{} > {}", n.z1, n.y1 * n.z_over_y_factor());
    }

    #[test]
    fn free_energy_density_is_nonnegative(phi in -3.0..3.0f64, pt in -3.0..3.0f64, pr in -3.0..3.0f64,
                                          r in 1e-3..50.0f64, kappa in 0.05..0.95f64) {
        let mf = MultiplierField::kss(kappa).unwrap();
        let s = assemble_densities(phi, pt, pr, &HTensor::isotropic(0.0), &mf, r).unwrap();
        prop_assert!(s.q00 >= 0.0);
        prop_assert!((s.q00 - 0.5 * (pt * pt + pr * pr)).abs() <= 1e-15 * (1.0 + s.q00));
    }

    #[test]
    fn multiplier_is_a_unit_weight(kappa in 0.05..0.95f64, rho in 0.5..300.0f64, r in 1e-4..1e3f64) {
        for mf in [MultiplierField::kss(kappa).unwrap(), MultiplierField::ms(rho).unwrap()] {
            let f = mf.f(r);
            prop_assert!((0.0..=1.0).contains(&f), "{} f({r}) = {f}", mf.variant());
            prop_assert!(flux_weight_constant(&mf, &log_samples(1e-4, 1e3, 200)).is_finite());
        }
    }

    #[test]
    fn estimate_ratio_is_scale_invariant(lambda in 0.01..100.0f64, gamp in -1.0..1.0f64, h in 0.0..0.15f64) {
        let g = build_grid(8.0, 128, 0.9, 1.0 / 6.0).unwrap();
        let p = pair_on(&g, ProfileKind::Gaussian, 1.0, gamp, 0.0, 1.0);
        let hf = CoefficientField::gaussian(h);
        let a = kss_sides(&p, &hf, &Forcing::zero(), 0.25, 2.0, &g).unwrap();
        let b = kss_sides(&p.scaled(lambda), &hf, &Forcing::zero(), 0.25, 2.0, &g).unwrap();
        let (ra, rb) = (a.ratio.unwrap(), b.ratio.unwrap());
        prop_assert!((ra - rb).abs() <= 1e-10 * ra);
    }

    #[test]
    fn waves_stay_inside_the_numerical_light_cone(amp in 0.1..1.0f64, t in 0.2..2.0f64) {
        let g = build_grid(8.0, 256, 0.9, 0.0).unwrap();
        let p = pair_on(&g, ProfileKind::Bump, amp, amp, 0.0, 1.0);
        let out = solve_linear(&p, &CoefficientField::zero(), &Forcing::zero(), t, &g, &mut []).unwrap();
        // the three-point stencil moves information one node per step
        let reach = p.support_radius() + (out.steps + 1) as f64 * g.dr();
        for i in 0..g.len() {
            if g.r(i) > reach {
                prop_assert_eq!(out.final_snapshot.u[i], 0.0);
            }
        }
    }
}
