use proptest::prelude::*;
use scorelab_core::density::{log_mean, realize_density, DensityField, DensitySpec};
use scorelab_core::fpe::{step, Scheme, SolverConfig};
use scorelab_core::grid::{divergence, gradient, CellField, FaceField, Grid};
use scorelab_core::metrics::{kl_divergence, l2_distance, w1_distance};
use scorelab_core::moser::chang_cooper_drift_for_flux;
use scorelab_core::neural::{evaluate_wide, fit_wide, oscillation_schedule, Activation};
use scorelab_core::particles::fold;

fn grid_strategy() -> impl Strategy<Value = Grid> {
    prop_oneof![
        (4usize..40).prop_map(|n| Grid::line(n).unwrap()),
        (4usize..10, 4usize..10).prop_map(|(a, b)| Grid::new(2, &[a, b]).unwrap()),
    ]
}

fn field(g: Grid, seed: &[f64], lo: f64) -> CellField {
    CellField::from_fn(g, |x| {
        lo + seed[0].abs() * (1.0 + (seed[1] * x[0] + seed[2] * x[1] + seed[3]).sin())
    })
}

fn density(g: Grid, seed: &[f64]) -> DensityField {
    DensityField::normalized(field(g, seed, 0.01)).unwrap()
}

fn drift(g: Grid, seed: &[f64], amp: f64) -> FaceField {
    FaceField::from_vector_fn(g, |x| {
        [
            amp * (seed[0] * x[0] + seed[1]).sin(),
            amp * (seed[2] * x[1] - seed[3] * x[0]).cos(),
        ]
    })
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-6.0f64..6.0, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_is_minus_divergence_adjoint(g in grid_strategy(), a in coeffs(), b in coeffs()) {
        let f = field(g, &a, 0.0);
        let flux = drift(g, &b, 1.0);
        let lhs = gradient(&f).dot(&flux).unwrap();
        let rhs = -f.dot(&divergence(&flux)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn implicit_step_conserves_and_stays_positive(
        g in grid_strategy(), a in coeffs(), b in coeffs(),
        amp in 0.0f64..200.0, dt in 1e-4f64..1e-1, upwind in any::<bool>(),
    ) {
        let cfg = SolverConfig {
            dt,
            scheme: if upwind { Scheme::Upwind } else { Scheme::ChangCooper },
            ..SolverConfig::default()
        };
        let rho = density(g, &a);
        let next = step(&rho, &drift(g, &b, amp), &cfg).unwrap();
        prop_assert!((next.mass() - rho.mass()).abs() <= 1e-9);
        prop_assert!(next.floor() >= -1e-12);
    }

    #[test]
    fn bump_densities_have_unit_mass(
        cx in 0.1f64..0.9, cy in 0.1f64..0.9, w in 0.25f64..0.6, floor in 0.0f64..0.9, n in 16usize..64,
    ) {
        let g = Grid::line(n).unwrap();
        let d = realize_density(&DensitySpec::bump([cx, cy], w, floor), &g).unwrap();
        prop_assert!((d.mass() - 1.0).abs() < 1e-12);
        prop_assert!(d.floor() >= 0.0);
    }

    #[test]
    fn distance_axioms(g in grid_strategy(), a in coeffs(), b in coeffs(), c in coeffs()) {
        let (p, q, r) = (density(g, &a), density(g, &b), density(g, &c));
        let pq = l2_distance(p.field(), q.field()).unwrap();
        let qr = l2_distance(q.field(), r.field()).unwrap();
        let pr = l2_distance(p.field(), r.field()).unwrap();
        prop_assert!(pr <= pq + qr + 1e-12);
        let w = w1_distance(&p, &q).unwrap().value;
        prop_assert!(w >= 0.0);
        prop_assert!((w - w1_distance(&q, &p).unwrap().value).abs() < 1e-12);
        if g.dim() == 1 {
            let wpr = w1_distance(&p, &r).unwrap().value;
            let wqr = w1_distance(&q, &r).unwrap().value;
            prop_assert!(wpr <= w + wqr + 1e-12);
        }
        prop_assert!(kl_divergence(&p, &q).unwrap() >= -1e-14);
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-14);
    }

    #[test]
    fn fold_lands_in_box(x in -50.0f64..50.0) {
        let y = fold(x);
        prop_assert!((0.0..=1.0).contains(&y));
        if (0.0..=1.0).contains(&x) {
            prop_assert_eq!(y, x);
        }
    }

    #[test]
    fn log_mean_between_geometric_and_arithmetic(a in 1e-6f64..1e3, b in 1e-6f64..1e3) {
        let m = log_mean(a, b);
        prop_assert!(m >= (a * b).sqrt() * (1.0 - 1e-12));
        prop_assert!(m <= 0.5 * (a + b) * (1.0 + 1e-12));
    }

    #[test]
    fn flux_inversion_is_exact(l in 1e-3f64..10.0, r in 1e-3f64..10.0, target in -500.0f64..500.0) {
        let h = 1.0 / 64.0;
        let v = chang_cooper_drift_for_flux(l, r, h, target);
        let z = v * h;
        let b = |z: f64| if z == 0.0 { 1.0 } else { z / z.exp_m1() };
        let j = (b(-z) * l - b(z) * r) / h;
        prop_assert!((j - target).abs() <= 1e-9 * target.abs().max(1.0));
    }

    #[test]
    fn oscillation_period_average(seed in 0u64..1000, m in 1usize..6, periods in 1usize..5) {
        let g = Grid::line(8).unwrap();
        let (net, _) = fit_wide(&g, |x| [x[0].sin(), 0.0], m, Activation::default(), seed).unwrap();
        let s = oscillation_schedule(&net, periods, 1.0).unwrap();
        prop_assert_eq!(s.breakpoints.len(), m * periods + 1);
        let x = [0.37, 0.0];
        let avg: f64 = s.layers.iter().enumerate()
            .map(|(k, l)| l.evaluate(x, 1, &s.activation)[0] * (s.breakpoints[k + 1] - s.breakpoints[k]))
            .sum();
        prop_assert!((avg - evaluate_wide(&net, x)[0]).abs() < 1e-9 * (1.0 + avg.abs()));
    }
}
