//! Property tests over seeded random inputs.

mod common;

use num_complex::Complex64;
use proptest::prelude::*;

use visco_core::besov::{
    besov_norm, hybrid_norm, running_time_space_norm, time_space_norm_blocks, NormSpec,
};
use visco_core::bony::{paraproduct, remainder};
use visco_core::initial_data::{generate, DataSpec};
use visco_core::linear_models::{mixed_solve_mode, mode_eigenvalues};
use visco_core::spectral_field::dyadic::block_spectrum;
use visco_core::spectral_field::{
    block_norms, dyadic_cutoffs, grad, random_field, Field, Grid, Spectrum, TensorField, VectorField,
};
use visco_core::viscoelastic::{
    constraint_residuals, d_reformulation, simulate, FriedrichsMask, SimOptions, SimState, SolverOptions,
};

fn grid(n: usize) -> Grid {
    Grid::new(2, n).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn field_strategy() -> impl Strategy<Value = (u64, f64)> {
    (any::<u64>(), 0.0..2.5f64)
}

#[test]
fn dopri5_matches_exponential() {
    let y = common::dopri5(|_, y| vec![-y[0], y[0] - y[1]], 0.0, &[1.0, 0.0], 2.0, 1e-12, 1e-14);
    let e = (-2.0f64).exp();
    assert!((y[0] - e).abs() < 1e-12);
    assert!((y[1] - 2.0 * e).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn partition_of_unity_at_every_mode(n in prop::sample::select(vec![16usize, 32, 64, 128]), pick in any::<prop::sample::Index>()) {
        let g = grid(n);
        let c = dyadic_cutoffs(&g);
        let idx = pick.index(g.len());
        prop_assume!(idx != 0);
        prop_assert!((c.partition_sum(idx) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn blocks_two_apart_are_orthogonal((seed, slope) in field_strategy(), q in 0i32..5, gap in 2i32..5) {
        let g = grid(64);
        let s = random_field(&g, seed, slope, None).spectrum();
        let both = block_spectrum(&block_spectrum(&s, q), q + gap);
        prop_assert_eq!(both.l2_norm(), 0.0);
    }

    #[test]
    fn parseval((seed, slope) in field_strategy(), c in -5.0..5.0f64) {
        let g = grid(32);
        let f = random_field(&g, seed, slope, None).map(|v| v + c);
        prop_assert!(rel(f.l2_norm(), f.spectrum().l2_norm()) <= 1e-12);
    }

    #[test]
    fn norms_are_homogeneous((seed, slope) in field_strategy(), c in -1e3..1e3f64, s in -1.0..2.0f64, r in prop::sample::select(vec![1.0, 2.0, 3.5, f64::INFINITY]), mu in 0.1..5.0f64) {
        let g = grid(32);
        let f = random_field(&g, seed, slope, None);
        let cf = f.scaled(c);
        for spec in [NormSpec::homogeneous(s, r), NormSpec::nonhomogeneous(s, r)] {
            prop_assert!(rel(besov_norm(&cf, &spec).unwrap(), c.abs() * besov_norm(&f, &spec).unwrap()) <= 1e-12);
        }
        let spec = NormSpec::hybrid(s, r, mu);
        prop_assert!(rel(hybrid_norm(&cf, &spec).unwrap(), c.abs() * hybrid_norm(&f, &spec).unwrap()) <= 1e-12);
    }

    #[test]
    fn time_space_norms_grow_with_the_horizon(seed in any::<u64>(), len in 2usize..8, rho in prop::sample::select(vec![1.0, 2.0, f64::INFINITY]), s in 0.0..2.0f64) {
        let g = grid(16);
        let times: Vec<f64> = (0..len).map(|i| 0.1 * i as f64).collect();
        let blocks: Vec<_> = (0..len)
            .map(|i| block_norms(&[&random_field(&g, seed.wrapping_add(i as u64), 1.0, None).spectrum()]))
            .collect();
        let spec = NormSpec::homogeneous(s, 1.0).with_rho(rho);
        let running = running_time_space_norm(&times, &blocks, &spec).unwrap();
        for w in running.windows(2) {
            prop_assert!(w[1] >= w[0] * (1.0 - 1e-14));
        }
        let full = time_space_norm_blocks(&times, &blocks, &spec).unwrap();
        prop_assert!(rel(full, running[len - 1]) <= 1e-12);
    }

    #[test]
    fn interpolation_inequality((seed, slope) in field_strategy(), s1 in -1.0..1.0f64, gap in 0.1..2.0f64, theta in 0.0..1.0f64, r in prop::sample::select(vec![1.0, 2.0, f64::INFINITY])) {
        let g = grid(32);
        let f = random_field(&g, seed, slope, None);
        let s2 = s1 + gap;
        let n = |s: f64| besov_norm(&f, &NormSpec::homogeneous(s, r)).unwrap();
        let mid = n(theta * s1 + (1.0 - theta) * s2);
        prop_assert!(mid <= n(s1).powf(theta) * n(s2).powf(1.0 - theta) * (1.0 + 1e-12));
    }

    #[test]
    fn derivative_equivalence((seed, slope) in field_strategy(), s in -0.5..2.0f64) {
        let g = grid(64);
        let f = random_field(&g, seed, slope, None);
        let gf = grad(&f);
        let ratio = besov_norm(&gf, &NormSpec::homogeneous(s - 1.0, 1.0)).unwrap()
            / besov_norm(&f, &NormSpec::homogeneous(s, 1.0)).unwrap();
        prop_assert!((0.75..=8.0 / 3.0).contains(&ratio), "ratio {}", ratio);
    }

    #[test]
    fn paraproduct_is_bilinear(seed in any::<u64>(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let g = grid(32);
        let [f, h, k] = [0u64, 1, 2].map(|i| random_field(&g, seed.wrapping_mul(3).wrapping_add(i), 1.0, None));
        let mut comb = f.scaled(a);
        comb.axpy(b, &h);
        let lhs = paraproduct(&comb, &k).unwrap();
        let mut rhs = paraproduct(&f, &k).unwrap().scaled(a);
        rhs.axpy(b, &paraproduct(&h, &k).unwrap());
        prop_assert!((&lhs - &rhs).l2_norm() <= 1e-12 * lhs.l2_norm().max(rhs.l2_norm()).max(1e-300));
    }

    #[test]
    fn remainder_is_symmetric(seed in any::<u64>()) {
        let g = grid(32);
        let f = random_field(&g, seed, 1.0, None);
        let h = random_field(&g, seed ^ 0x5555, 0.5, None);
        let r1 = remainder(&f, &h).unwrap();
        let r2 = remainder(&h, &f).unwrap();
        prop_assert!((&r1 - &r2).l2_norm() <= 1e-12 * r1.l2_norm());
    }

    #[test]
    fn eigenvalue_trace_and_determinant(mu in 0.01..10.0f64, x in 1e-3..200.0f64) {
        let [a, b] = mode_eigenvalues(mu, x);
        prop_assert!(((a + b).re + mu * x * x).abs() <= 1e-12 * mu * x * x);
        prop_assert!((a * b - x * x).norm() <= 1e-12 * x * x);
    }

    #[test]
    fn mixed_energy_identity(mu in 0.1..3.0f64, x in 0.1..10.0f64, t in 0.1..3.0f64, e0 in -1.0..1.0f64, d0 in -1.0..1.0f64) {
        // d/dt (|E|^2 + |d|^2) = -2 mu x^2 |d|^2, by central differences.
        let y0 = [Complex64::new(e0, 0.3), Complex64::new(d0, -0.2)];
        let energy = |y: &[Complex64; 2]| y[0].norm_sqr() + y[1].norm_sqr();
        let errs: Vec<f64> = [1e-3, 5e-4].iter().map(|&h| {
            let ys = mixed_solve_mode(mu, x, y0, None, &[t - h, t, t + h]);
            let rate = (energy(&ys[2]) - energy(&ys[0])) / (2.0 * h);
            (rate + 2.0 * mu * x * x * ys[1][1].norm_sqr()).abs()
        }).collect();
        let scale = energy(&y0) * (1.0 + mu * x * x).powi(3);
        prop_assert!(errs[0] <= 1e-4 * scale && errs[1] <= 1e-4 * scale / 3.0 + 1e-11 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn generated_data_is_admissible_and_scaled(seed in 0u64..1000, amp in 1e-3..3e-2f64) {
        let g = grid(32);
        let d = generate(&g, &DataSpec::new(seed, amp), 1.0).unwrap();
        let r = constraint_residuals(&d.e);
        prop_assert!(d.certificate.admissible);
        prop_assert!(r.det <= 1e-8 && r.div_et <= 1e-8 && r.compat <= 1e-8, "{:?}", r);
        prop_assert!(rel(d.certificate.norms.velocity_bdot, amp) <= 1e-12);
        let again = generate(&g, &DataSpec::new(seed, amp), 1.0).unwrap();
        prop_assert_eq!(&again.u.component(0).values(), &d.u.component(0).values());
    }

    #[test]
    fn reformulation_identity_every_state(seed in 0u64..1000, amp in 1e-3..3e-2f64) {
        let g = grid(32);
        let d = generate(&g, &DataSpec::new(seed, amp), 1.0).unwrap();
        let s = SimState::new(d.a, d.u, d.e, 1.0).unwrap();
        let out = simulate(&s, &SimOptions::new(0.1, 0.02), &SolverOptions::default()).unwrap();
        for state in &out.states.snapshots {
            let r = d_reformulation(state, &SolverOptions::default()).unwrap().residuals;
            prop_assert!(r.lambda_identity <= 1e-12, "{:?}", r);
        }
    }

    #[test]
    fn navier_stokes_energy_is_nonincreasing(seed in 0u64..1000, amp in 0.05..0.5f64) {
        let g = grid(32);
        let psi = random_field(&g, seed, 2.0, Some((1.0, 6.0)));
        let gp = grad(&psi);
        let u = VectorField::new(vec![gp.component(1).scaled(amp), gp.component(0).scaled(-amp)]).unwrap();
        let s = SimState::new(Field::zeros(&g), u, TensorField::zeros(&g), 0.5).unwrap();
        let out = simulate(&s, &SimOptions::new(0.2, 0.01), &SolverOptions::default()).unwrap();
        for w in out.diagnostics.windows(2) {
            prop_assert!(w[1].kinetic_energy <= w[0].kinetic_energy + 1e-10);
        }
    }

    #[test]
    fn friedrichs_truncation_is_invariant(seed in 0u64..1000, n_cut in 3.0..9.0f64) {
        let g = grid(32);
        let d = generate(&g, &DataSpec::new(seed, 1e-2), 1.0).unwrap();
        let s = SimState::new(d.a, d.u, d.e, 1.0).unwrap().with_n_cut(n_cut).projected();
        let mask = FriedrichsMask::new(&g, n_cut);
        let out = simulate(&s, &SimOptions::new(0.1, 0.02), &SolverOptions::default()).unwrap();
        for st in &out.states.snapshots {
            let mut spectra: Vec<Spectrum> = vec![st.a.spectrum()];
            spectra.extend(st.u.spectra());
            spectra.extend(st.e.spectra());
            for sp in &spectra {
                prop_assert!(mask.leak(sp) <= 1e-14 * (1.0 + sp.l2_norm()));
            }
        }
    }
}
