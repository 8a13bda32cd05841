use proptest::prelude::*;

use tautline::analysis::{
    check_bv_convergence, check_certificate_reuse, check_fundamental_estimate, check_non_expansive,
    check_semigroup, gnorm, value_function_sweep,
};
use tautline::oracles::{dual_energy, qp_tube_derivative, rof_energy};
use tautline::{
    cumulative, derivative, isotonic_fit, jump_measure, l2_distance, l2_norm, linf_norm_pl,
    mean_zero_split, pairing_with_certificate, pava_oracle, rof_denoise, sup_distance,
    total_variation, verify_certificate, PiecewiseConstantSignal, PiecewiseLinearFunction,
};

fn signal_strategy(max_pieces: usize) -> impl Strategy<Value = PiecewiseConstantSignal> {
    prop::collection::vec((-10.0f64..10.0, 0.25f64..2.0), 1..=max_pieces).prop_map(|cells| {
        let mut bps = vec![0.0];
        for (_, len) in &cells {
            bps.push(bps.last().unwrap() + len);
        }
        PiecewiseConstantSignal::new(bps, cells.into_iter().map(|(v, _)| v).collect()).unwrap()
    })
}

/// A signal with a `λ` drawn log-uniformly from `[10⁻³ g, 2g]`.
fn denoise_case(max_pieces: usize) -> impl Strategy<Value = (PiecewiseConstantSignal, f64)> {
    (signal_strategy(max_pieces), 0.0f64..1.0).prop_map(|(f, t)| {
        let g = gnorm(&f).max(1e-3);
        let lambda = 1e-3 * g * (2000.0f64).powf(t);
        (f, lambda)
    })
}

fn scale(f: &PiecewiseConstantSignal) -> f64 {
    f.sup_norm().max(total_variation(f)).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cumulative_round_trip(f in signal_strategy(40)) {
        let back = derivative(&cumulative(&f));
        prop_assert_eq!(back.breakpoints(), f.breakpoints());
        for (a, b) in back.values().iter().zip(f.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * scale(&f));
        }
    }

    #[test]
    fn total_variation_is_jump_mass(f in signal_strategy(40), c in -5.0f64..5.0) {
        let (pos, neg) = jump_measure(&f).jordan_decomposition();
        let tv = total_variation(&f);
        prop_assert!((tv - pos.total_variation_mass() - neg.total_variation_mass()).abs() <= 1e-12 * scale(&f));
        prop_assert!((total_variation(&f.add_constant(c)) - tv).abs() <= 1e-12 * scale(&f));
    }

    #[test]
    fn pairing_is_bounded_by_total_variation(
        f in signal_strategy(20),
        raw in prop::collection::vec(-1.0f64..1.0, 1..20),
    ) {
        let iv = f.interval();
        let m = raw.len() + 1;
        let mut nodes: Vec<f64> = (0..=m).map(|i| iv.a() + iv.length() * i as f64 / m as f64).collect();
        nodes[m] = iv.b();
        let mut vals = vec![0.0];
        vals.extend(raw);
        vals.push(0.0);
        let xi = PiecewiseLinearFunction::new(nodes, vals).unwrap();
        let pairing = pairing_with_certificate(&f, &xi).unwrap();
        prop_assert!(pairing <= total_variation(&f) + 1e-12 * scale(&f));
    }

    #[test]
    fn gnorm_survives_refinement(f in signal_strategy(20), split in 0.05f64..0.95) {
        let (f0, _) = mean_zero_split(&f);
        let bps = f0.breakpoints();
        let mut fine_bps = vec![bps[0]];
        let mut fine_vals = Vec::new();
        for (w, v) in bps.windows(2).zip(f0.values()) {
            fine_bps.push(w[0] + split * (w[1] - w[0]));
            fine_bps.push(w[1]);
            fine_vals.extend([*v, *v]);
        }
        let fine = PiecewiseConstantSignal::new(fine_bps, fine_vals).unwrap();
        let coarse = linf_norm_pl(&cumulative(&f0));
        let refined = linf_norm_pl(&cumulative(&fine));
        prop_assert!((coarse - refined).abs() <= 1e-12 * scale(&f));
    }

    #[test]
    fn denoising_matches_quadratic_oracle((f, lambda) in denoise_case(40)) {
        let u = rof_denoise(&f, lambda).unwrap().u;
        let oracle = qp_tube_derivative(&f, lambda).unwrap();
        prop_assert!(l2_distance(&u, &oracle).unwrap() <= 1e-6);
    }

    #[test]
    fn denoising_result_is_certified((f, lambda) in denoise_case(60)) {
        let res = rof_denoise(&f, lambda).unwrap();
        let verdict = verify_certificate(&f, lambda, &res.u, &res.certificate, 1e-9);
        prop_assert!(verdict.is_ok(), "{:?}", verdict);
        prop_assert!(res.knots.len() <= f.pieces() + 1);
        let slopes = derivative(&res.string);
        prop_assert!(sup_distance(&slopes, &res.u).unwrap() <= 1e-9 * scale(&f));
        if !res.u.is_constant() {
            prop_assert!((res.certificate.linf_norm() - 1.0).abs() <= 1e-9);
        }
        let energy = rof_energy(&f, &res.u, lambda).unwrap();
        prop_assert!((energy - res.energy).abs() <= 1e-12 * energy.max(1.0));
    }

    #[test]
    fn denoising_minimizes_energy(
        (f, lambda) in denoise_case(30),
        bumps in prop::collection::vec(-1.0f64..1.0, 30),
    ) {
        let res = rof_denoise(&f, lambda).unwrap();
        let u = &res.u;
        let perturbed = PiecewiseConstantSignal::new(
            f.breakpoints().to_vec(),
            f.breakpoints()
                .windows(2)
                .zip(bumps.iter().cycle())
                .map(|(w, b)| u.eval(0.5 * (w[0] + w[1])) + b)
                .collect(),
        )
        .unwrap();
        let zero = PiecewiseConstantSignal::constant(f.interval(), 0.0);
        let mean = PiecewiseConstantSignal::constant(f.interval(), f.mean());
        for v in [f.clone(), zero, mean, perturbed] {
            let gain = rof_energy(&f, &v, lambda).unwrap() - res.energy;
            let margin = 0.5 * l2_distance(&v, u).unwrap().powi(2);
            prop_assert!(gain >= margin - 1e-9 * res.energy.max(1.0));
        }
    }

    #[test]
    fn weak_duality_holds((f, lambda) in denoise_case(30), t in 0.0f64..1.0) {
        let res = rof_denoise(&f, lambda).unwrap();
        let (f0, _) = mean_zero_split(&f);
        // any rescaled certificate stays feasible
        let xi = res.certificate.scale(t);
        let u = f.zip_with(&derivative(&xi), |v, d| v - lambda * d).unwrap();
        let primal = rof_energy(&f0, &u.add_constant(-f.mean()), lambda).unwrap();
        let dual = dual_energy(&f0, &xi, lambda).unwrap();
        prop_assert!(primal >= dual - 1e-9 * primal.abs().max(1.0));
        let f0_res = rof_denoise(&f0, lambda).unwrap();
        let gap = f0_res.energy - dual_energy(&f0, &f0_res.certificate, lambda).unwrap();
        prop_assert!(gap.abs() <= 1e-8 * f0_res.energy.max(1.0));
    }

    #[test]
    fn denoising_commutes_with_constants((f, lambda) in denoise_case(40), c in -20.0f64..20.0) {
        let shifted = rof_denoise(&f.add_constant(c), lambda).unwrap().u;
        let plain = rof_denoise(&f, lambda).unwrap().u.add_constant(c);
        prop_assert!(sup_distance(&shifted, &plain).unwrap() <= 1e-9 * scale(&f).max(c.abs()));
    }

    #[test]
    fn denoising_is_non_expansive(
        (f, lambda) in denoise_case(40),
        noise in prop::collection::vec(-3.0f64..3.0, 40),
    ) {
        let g = PiecewiseConstantSignal::new(
            f.breakpoints().to_vec(),
            f.values().iter().zip(&noise).map(|(v, n)| v + n).collect(),
        )
        .unwrap();
        prop_assert!(check_non_expansive(&f, &g, lambda, 1e-12).unwrap().passed());
    }

    #[test]
    fn jumps_only_shrink((f, lambda) in denoise_case(60)) {
        let verdict = check_fundamental_estimate(&f, lambda, 1e-9).unwrap();
        prop_assert!(verdict.passed(), "{}", verdict);
        let u = rof_denoise(&f, lambda).unwrap().u;
        prop_assert!(u.jump_count() <= f.jump_count());
    }

    #[test]
    fn value_function_sweep_is_consistent(f in signal_strategy(40), lo in 0.0f64..1.0) {
        let g = gnorm(&f).max(1e-3);
        let start = 1e-3 * g * (10.0f64).powf(lo);
        let lambdas: Vec<f64> = (0..16).map(|i| start * (2.0 * g / start).powf(i as f64 / 15.0)).collect();
        prop_assert!(value_function_sweep(&f, &lambdas, 1e-9).is_ok());
    }

    #[test]
    fn convergence_bounds_hold((f, lambda) in denoise_case(60)) {
        let report = check_bv_convergence(&f, &[lambda, 0.5 * lambda, 0.25 * lambda], 1e-9).unwrap();
        prop_assert!(report.verdict.passed(), "{}", report.verdict);
    }

    #[test]
    fn semigroup_law((f, lambda) in denoise_case(40), t in 0.0f64..1.0) {
        let mu = lambda * 2.0 * t;
        let verdict = check_semigroup(&f, lambda, mu, 1e-9).unwrap();
        prop_assert!(verdict.passed(), "{}", verdict);
    }

    #[test]
    fn certificate_reuse((f, lambda) in denoise_case(40), t in 0.001f64..1.0) {
        let verdict = check_certificate_reuse(&f, lambda, lambda * t, 1e-9).unwrap();
        prop_assert!(verdict.passed(), "{}", verdict);
    }

    #[test]
    fn isotonic_matches_pava(f in signal_strategy(80), c in -5.0f64..5.0) {
        let fit = isotonic_fit(&f);
        prop_assert!(fit.u.is_non_decreasing());
        prop_assert!(fit.envelope.is_convex(1e-12 * scale(&f)));
        prop_assert!(sup_distance(&fit.u, &pava_oracle(&f)).unwrap() <= 1e-9);
        let big_f = cumulative(&f);
        let below = big_f.values_on(fit.envelope.nodes());
        for (w, bf) in fit.envelope.values().iter().zip(below) {
            prop_assert!(*w <= bf + 1e-12 * scale(&f));
        }
        let shifted = isotonic_fit(&f.add_constant(c)).u;
        prop_assert!(sup_distance(&shifted, &fit.u.add_constant(c)).unwrap() <= 1e-9 * scale(&f));
    }

    #[test]
    fn isotonic_pools_have_zero_residual_mass(f in signal_strategy(60)) {
        let fit = isotonic_fit(&f);
        let residual = f.sub(&fit.u).unwrap();
        let bps = fit.u.breakpoints();
        for w in bps.windows(2) {
            let mass: f64 = residual
                .breakpoints()
                .windows(2)
                .zip(residual.values())
                .filter(|(c, _)| c[0] >= w[0] && c[1] <= w[1])
                .map(|(c, v)| v * (c[1] - c[0]))
                .sum();
            prop_assert!(mass.abs() <= 1e-9 * scale(&f) * (w[1] - w[0]).max(1.0));
        }
    }

    #[test]
    fn isotonic_beats_block_perturbations(f in signal_strategy(30), eps in -0.5f64..0.5, pick in 0usize..30) {
        let fit = isotonic_fit(&f);
        let vals = fit.u.values();
        let k = pick % vals.len();
        let lo = if k == 0 { f64::NEG_INFINITY } else { vals[k - 1] };
        let hi = vals.get(k + 1).copied().unwrap_or(f64::INFINITY);
        let mut moved = vals.to_vec();
        moved[k] = (moved[k] + eps).clamp(lo, hi);
        let v = PiecewiseConstantSignal::new(fit.u.breakpoints().to_vec(), moved).unwrap();
        let base = l2_norm(&f.sub(&fit.u).unwrap());
        prop_assert!(l2_norm(&f.sub(&v).unwrap()) >= base - 1e-12 * scale(&f));
    }
}
