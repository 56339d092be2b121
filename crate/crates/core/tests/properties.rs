use proptest::prelude::*;

use landau_core::degiorgi::{schedule, truncation_gap};
use landau_core::functionals::{check_interpolation_star, lp_norm};
use landau_core::grid::{integrate, make_grid, ScalarField, SymMatrixField};
use landau_core::harness::fit_decay_rate;
use landau_core::solver::{apply_diffusion, cfl_dt, step_with, Mode, SolverContext, Transverse};

fn field(n: usize, len: f64, values: &[f64]) -> ScalarField {
    let g = make_grid(n, len).unwrap();
    ScalarField::from_vec(g, values.iter().cycle().take(g.num_cells()).copied().collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fit_recovers_power_laws(slope in -2.0f64..0.5, scale in 0.1f64..10.0, t0 in 0.01f64..1.0) {
        let s: Vec<(f64, f64)> = (0..12).map(|i| {
            let t = t0 * 1.5f64.powi(i);
            (t, scale * t.powf(slope))
        }).collect();
        let fit = fit_decay_rate(&s, (0.0, f64::INFINITY)).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-10);
    }

    #[test]
    fn landau_step_keeps_mass_and_sign(values in prop::collection::vec(0.0f64..1.0, 64)) {
        let u = field(8, 8.0, &values);
        let mut ctx = SolverContext::new(*u.grid(), Mode::LandauDiffusion, 1.0 / (8.0 * std::f64::consts::PI)).unwrap();
        let a = ctx.coefficients(&u).unwrap();
        let dt = cfl_dt(&a, u.grid().h(), 0.5, 1.0).unwrap();
        let (next, report) = step_with(&u, &a, dt, &mut ctx).unwrap();
        prop_assert!(report.mass_drift <= 1e-12);
        prop_assert!((integrate(&next) - integrate(&u)).abs() <= 1e-12 * integrate(&u));
        // the explicit step is a convex combination only for the 7-point part,
        // so allow a small undershoot relative to the data
        prop_assert!(next.min() >= -0.05 * u.max());
    }

    #[test]
    fn tendency_sums_to_zero(values in prop::collection::vec(0.0f64..1.0, 27), diag in 0.5f64..2.0, off in -0.2f64..0.2) {
        let u = field(8, 4.0, &values);
        let g = *u.grid();
        let len = g.num_cells();
        let a = SymMatrixField::from_components(g, std::array::from_fn(|s| vec![if s < 3 { diag } else { off }; len])).unwrap();
        for tr in [Transverse::Average, Transverse::Minmod] {
            let out = apply_diffusion(&u, &a, tr).unwrap();
            let total: f64 = out.data().iter().sum();
            let scale: f64 = out.data().iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
            prop_assert!(total.abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn star_interpolation_holds(values in prop::collection::vec(0.0f64..1.0, 8..40)) {
        let g = field(12, 6.0, &values);
        prop_assume!(lp_norm(&g, 1.0).unwrap() > 0.0);
        for (p, q) in [(2.0, 3.0), (3.0, 4.0)] {
            let r = check_interpolation_star(&g, p, q).unwrap();
            prop_assert!(r.ratio <= 1.0 + 1e-6, "{} at ({p}, {q})", r.ratio);
        }
    }

    #[test]
    fn truncation_inequality_is_pointwise(values in prop::collection::vec(0.0f64..5.0, 8..40), a in 0.1f64..3.0) {
        let u = field(8, 4.0, &values);
        prop_assume!(u.max() > 0.0);
        let s = schedule(u.max(), 1.0, 8).unwrap();
        for k in 1..=8 {
            prop_assert!(truncation_gap(&u, s.levels[k - 1], s.levels[k], a).unwrap() <= 1e-13);
        }
    }
}
