mod common;

use itertools::Itertools;
use ndarray::{Array1, Array2};
use proptest::prelude::*;

use udp_core::bounds::{l1_bound, noise_level_for, pred_bound, tuning_threshold};
use udp_core::conditions::{
    cone_constant_estimate, distortion_sparsity, h_excess, h_falsify, normalize_columns, rip_constant, udp_excess,
    udp_falsify, udp_from_distortion, udp_from_rip, ConeKind, UdpCertificate,
};
use udp_core::distortion::{distortion_exact, distortion_search, witness_ratio};
use udp_core::harness::{gen_gaussian_design, gen_sparse_target, monte_carlo_ideal, TrialSetup};
use udp_core::linalg::{norm1, norm2, norm_inf, tail_norms, DesignMatrix};
use udp_core::rng::{gaussian_vec, rng_for, Stream};
use udp_core::solvers::{dantzig, lasso, Estimator, RegressionProblem, SolverStatus};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn gaussian(n: usize, p: usize, seed: u64) -> DesignMatrix {
    gen_gaussian_design(n, p, false, seed).unwrap()
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn row_space_gains_lie_between_extreme_singular_values(n in 2usize..9, extra in 0usize..6, seed in any::<u64>()) {
        let d = gaussian(n, n + extra, seed);
        let lo = d.smallest_singular().unwrap();
        let hi = d.largest_singular();
        let mut rng = rng_for(seed, Stream::Falsifier);
        for _ in 0..1000 {
            let u = gaussian_vec(&mut rng, n);
            let v = d.apply_t(u.view());
            let gain = norm2(d.apply(v.view()).view()) / norm2(v.view());
            prop_assert!(gain >= lo * (1.0 - 1e-10) && gain <= hi * (1.0 + 1e-10));
        }
    }

    #[test]
    fn kernel_projection_splits_vectors(n in 2usize..9, extra in 1usize..6, seed in any::<u64>()) {
        let d = gaussian(n, n + extra, seed);
        let mut rng = rng_for(seed, Stream::Falsifier);
        for _ in 0..1000 {
            let g = gaussian_vec(&mut rng, d.p());
            let k = d.project_kernel(g.view());
            let rest = &g - &k;
            // the complement is orthogonal to the kernel
            let back = d.kernel_basis().t().dot(&rest);
            prop_assert!(norm2(back.view()) <= 1e-8 * norm2(g.view()));
            prop_assert!(norm2((&k + &rest - &g).view()) <= 1e-8 * norm2(g.view()));
            prop_assert!(norm2(d.apply(k.view()).view()) <= 1e-8 * d.largest_singular() * norm2(g.view()));
        }
    }

    #[test]
    fn decompose_is_deterministic(n in 2usize..8, extra in 0usize..5, seed in any::<u64>()) {
        let a = gaussian(n, n + extra, seed);
        let b = DesignMatrix::with_default_tol(a.entries().to_owned()).unwrap();
        prop_assert_eq!(a.singular_values(), b.singular_values());
        prop_assert_eq!(a.kernel_basis(), b.kernel_basis());
        prop_assert_eq!(a.right_vectors(), b.right_vectors());
    }

    #[test]
    fn witness_attains_lower_bound(n in 3usize..10, k in 1usize..4, seed in any::<u64>()) {
        let d = gaussian(n, n + k, seed);
        let p = (n + k) as f64;
        let est = distortion_exact(&d, 1e-3).unwrap();
        let r = witness_ratio(Array1::from(est.witness.clone()).view());
        prop_assert!(r >= 1.0 - 1e-12 && r <= p.sqrt() + 1e-12);
        prop_assert!((r - est.lower).abs() <= 1e-6 * est.lower);
        prop_assert!(est.lower <= est.upper);
    }

    #[test]
    fn refinement_is_monotone(n in 3usize..10, seed in any::<u64>()) {
        let d = gaussian(n, n + 2, seed);
        let coarse = distortion_exact(&d, 1e-3).unwrap();
        let fine = distortion_exact(&d, 5e-4).unwrap();
        prop_assert!(fine.upper <= coarse.upper);
        prop_assert!(fine.lower >= coarse.lower);
    }

    #[test]
    fn exact_distortion_contains_vertex_value(n in 3usize..12, seed in any::<u64>()) {
        let d = gaussian(n, n + 2, seed);
        let est = distortion_exact(&d, 1e-4).unwrap();
        let truth = common::distortion_vertices(&common::to_na(d.kernel_basis()));
        prop_assert!(est.lower <= truth + 1e-9 && truth <= est.upper + 1e-9);
    }

    #[test]
    fn search_never_beats_certified_upper(n in 3usize..10, seed in any::<u64>()) {
        let d = gaussian(n, n + 2, seed);
        let exact = distortion_exact(&d, 1e-4).unwrap();
        let search = distortion_search(&d, 32, 300, seed).unwrap();
        prop_assert!(search.lower <= exact.upper + 1e-12);
        prop_assert!(search.lower >= exact.lower - 1e-3);
    }

    #[test]
    fn distortion_scale_invariance(n in 3usize..10, seed in any::<u64>(), e in -4i32..5, c in 0.1f64..10.0) {
        let d = gaussian(n, n + 2, seed);
        let base = distortion_exact(&d, 1e-4).unwrap();
        // powers of two scale the SVD without rounding
        let pow = DesignMatrix::with_default_tol(d.entries().to_owned() * 2f64.powi(e)).unwrap();
        let same = distortion_exact(&pow, 1e-4).unwrap();
        prop_assert_eq!(same.lower, base.lower);
        prop_assert_eq!(same.upper, base.upper);
        let other = DesignMatrix::with_default_tol(d.entries().to_owned() * -c).unwrap();
        let est = distortion_exact(&other, 1e-4).unwrap();
        // same kernel, possibly a rotated basis: the certified brackets overlap
        prop_assert!(est.lower <= base.upper + 1e-12 && base.lower <= est.upper + 1e-12);
        prop_assert!((est.lower - base.lower).abs() <= 1e-4);
    }

    #[test]
    fn distortion_certificate_arithmetic(n in 3usize..12, seed in any::<u64>(), kappa0 in 0.05f64..0.49) {
        let d = gaussian(n, n + 2, seed);
        let est = distortion_exact(&d, 1e-4).unwrap();
        let rho = d.certifiable_rho_n().unwrap();
        let cert = udp_from_distortion(&est, rho, kappa0, d.p()).unwrap();
        let inp = &cert.inputs;
        prop_assert_eq!(cert.s0, distortion_sparsity(kappa0, inp.delta_upper.unwrap(), inp.p.unwrap()));
        prop_assert_eq!(cert.delta, 2.0 * inp.delta_upper.unwrap() / inp.rho_n.unwrap());
    }

    #[test]
    fn falsifier_reports_true_violations(n in 2usize..8, seed in any::<u64>(), s0 in 1usize..4, kappa0 in 0.05f64..0.49, delta in 0.01f64..2.0) {
        let d = gaussian(n, n + 3, seed);
        let cert = UdpCertificate::assumed(s0, kappa0, delta).unwrap();
        if let Some(cx) = udp_falsify(&d, &cert, 2_000, seed).unwrap() {
            let g = Array1::from(cx.gamma.clone());
            prop_assert!(udp_excess(&d, &cert, g.view(), &cx.subset) > 1e-9);
            prop_assert!(cx.subset.len() <= s0);
        }
        if let Some(cx) = h_falsify(&d, s0, kappa0, 2_000, seed).unwrap() {
            let g = Array1::from(cx.gamma.clone());
            prop_assert!(h_excess(&d, s0, kappa0, g.view(), &cx.subset) > 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn distortion_certificates_are_never_refuted(n in 4usize..12, k in 1usize..3, seed in any::<u64>(), kappa0 in 0.2f64..0.49) {
        let d = gaussian(n, n + k, seed);
        let est = distortion_exact(&d, 1e-4).unwrap();
        let cert = udp_from_distortion(&est, d.certifiable_rho_n().unwrap(), kappa0, d.p()).unwrap();
        prop_assert!(udp_falsify(&d, &cert, 20_000, seed).unwrap().is_none());
    }

    #[test]
    fn rip_is_monotone_in_order(seed in any::<u64>()) {
        let d = DesignMatrix::with_default_tol(normalize_columns(&gaussian(6, 9, seed).entries().to_owned())).unwrap();
        let thetas: Vec<f64> = (1..=5).map(|s| rip_constant(&d, s).unwrap()).collect();
        for w in thetas.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn rip_certificates_hold_on_near_isometries(seed in any::<u64>(), kappa_pad in 0.0f64..1.0) {
        let q = common::random_orthogonal(10, seed);
        // small perturbation of an orthonormal design
        let mut rng = rng_for(seed, Stream::Design);
        let noise = Array2::from_shape_vec((10, 10), gaussian_vec(&mut rng, 100).to_vec()).unwrap();
        let d = DesignMatrix::with_default_tol(q + noise * 0.01).unwrap();
        let theta = rip_constant(&d, 5).unwrap();
        prop_assume!(theta < 2f64.sqrt() - 1.0);
        let floor = udp_core::conditions::rip_kappa_floor(theta);
        let kappa0 = floor + (0.5 - floor) * (0.05 + 0.9 * kappa_pad);
        let cert = udp_from_rip(theta, 1, kappa0).unwrap();
        prop_assert!(udp_falsify(&d, &cert, 20_000, seed).unwrap().is_none());
    }

    #[test]
    fn cone_estimate_is_an_upper_bound(seed in any::<u64>(), c0 in 0.2f64..0.6) {
        let d = gaussian(8, 11, seed);
        let est = cone_constant_estimate(&d, 1, c0, ConeKind::Re, 16, seed).unwrap();
        let reference = common::re_constant_small(d.entries(), 1, c0, 0);
        prop_assert!(est >= reference - 1e-7 * (1.0 + reference));
    }

    #[test]
    fn cone_estimate_on_identity(p in 3usize..9, s in 1usize..3, c0 in 0.1f64..2.0) {
        let d = DesignMatrix::with_default_tol(Array2::eye(p)).unwrap();
        for kind in [ConeKind::Re, ConeKind::Compatibility] {
            let est = cone_constant_estimate(&d, s, c0, kind, 32, 1).unwrap();
            prop_assert!(est >= 1.0 - 1e-3 && est <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn lasso_soft_thresholds_orthonormal_designs(p in 2usize..12, seed in any::<u64>(), lambda in 0.01f64..3.0) {
        let d = DesignMatrix::with_default_tol(common::random_orthogonal(p, seed)).unwrap();
        let mut rng = rng_for(seed, Stream::Noise);
        let y = gaussian_vec(&mut rng, p) * 2.0;
        let fit = lasso(&RegressionProblem::new(&d, y.clone()).unwrap(), lambda, 1e-12, 10_000).unwrap();
        let z = d.apply_t(y.view());
        for j in 0..p {
            let st = z[j].signum() * (z[j].abs() - lambda).max(0.0);
            prop_assert!((fit.estimate[j] - st).abs() <= 1e-8);
        }
        prop_assert!(fit.kkt_residual <= 1e-8);
    }

    #[test]
    fn lasso_converges_with_small_kkt_residual(n in 4usize..15, extra in 0usize..10, seed in any::<u64>(), lambda in 0.05f64..2.0) {
        let d = gaussian(n, n + extra, seed);
        let beta = gen_sparse_target(d.p(), 2, 1.0, seed).unwrap();
        let mut rng = rng_for(seed, Stream::Noise);
        let y = d.apply(beta.view()) + gaussian_vec(&mut rng, n) * 0.5;
        let fit = lasso(&RegressionProblem::new(&d, y).unwrap(), lambda, 1e-8, 100_000).unwrap();
        prop_assert_eq!(fit.status, SolverStatus::Converged);
        prop_assert!(fit.kkt_residual <= 1e-8);
    }

    #[test]
    fn dantzig_is_feasible_and_locally_optimal(n in 4usize..10, extra in 0usize..6, seed in any::<u64>(), lambda in 0.1f64..2.0) {
        let d = gaussian(n, n + extra, seed);
        let beta = gen_sparse_target(d.p(), 2, 1.0, seed).unwrap();
        let mut rng = rng_for(seed, Stream::Noise);
        let y = d.apply(beta.view()) + gaussian_vec(&mut rng, n) * 0.5;
        let fit = dantzig(&RegressionProblem::new(&d, y.clone()).unwrap(), lambda, 1e-9, 100_000).unwrap();
        prop_assert_eq!(fit.status, SolverStatus::Converged);
        let b = Array1::from(fit.estimate.clone());
        let corr = |v: &Array1<f64>| norm_inf(d.apply_t((&y - &d.apply(v.view())).view()).view());
        prop_assert!(corr(&b) <= lambda + 1e-9);
        let best = norm1(b.view());
        let mut rng = rng_for(seed, Stream::Falsifier);
        for _ in 0..10_000 {
            let step = gaussian_vec(&mut rng, d.p()) * 10f64.powf(-1.0 - 4.0 * rand::Rng::random::<f64>(&mut rng));
            let cand = &b + &step;
            if corr(&cand) <= lambda {
                prop_assert!(norm1(cand.view()) >= best - 1e-9);
            }
        }
    }

    #[test]
    fn solvers_are_deterministic(n in 4usize..10, extra in 0usize..6, seed in any::<u64>()) {
        let d = gaussian(n, n + extra, seed);
        let mut rng = rng_for(seed, Stream::Noise);
        let y = gaussian_vec(&mut rng, n);
        let prob = RegressionProblem::new(&d, y).unwrap();
        prop_assert_eq!(lasso(&prob, 0.3, 1e-8, 100_000).unwrap(), lasso(&prob, 0.3, 1e-8, 100_000).unwrap());
        prop_assert_eq!(dantzig(&prob, 0.3, 1e-9, 100_000).unwrap(), dantzig(&prob, 0.3, 1e-9, 100_000).unwrap());
    }

    #[test]
    fn top_s_subsets_minimize_tails(p in 2usize..12, seed in any::<u64>()) {
        let mut rng = rng_for(seed, Stream::Target);
        let beta = gaussian_vec(&mut rng, p);
        let tails = tail_norms(beta.view());
        let total = norm1(beta.view());
        for s in 0..=p {
            let best = (0..p)
                .combinations(s)
                .map(|sub| total - sub.iter().map(|&j| beta[j].abs()).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            prop_assert!((tails[s] - best).abs() <= 1e-12 * (1.0 + total));
        }
    }

    #[test]
    fn bound_identities(lambda0 in 0.1f64..5.0, kappa0 in 0.01f64..0.24, rule in 1.0001f64..3.0, delta in 0.1f64..5.0, seed in any::<u64>()) {
        let mut rng = rng_for(seed, Stream::Target);
        let beta = gaussian_vec(&mut rng, 8);
        let cert = UdpCertificate::assumed(4, kappa0, delta).unwrap();
        for est in [Estimator::Lasso, Estimator::Dantzig] {
            let m = if est == Estimator::Lasso { 2.0 } else { 4.0 };
            let lambda = rule * tuning_threshold(lambda0, kappa0, est).unwrap();
            let r = l1_bound(beta.view(), &cert, lambda, lambda0, est).unwrap();
            prop_assert!(r.tuning_ok);
            let pre = m / ((1.0 - lambda0 / lambda) - m * kappa0);
            prop_assert_eq!(r.prefactor.unwrap(), pre);
            // a larger λ lowers the prefactor
            let r2 = l1_bound(beta.view(), &cert, lambda * 1.1, lambda0, est).unwrap();
            prop_assert!(r2.prefactor.unwrap() < pre);
        }
        let lambda = rule * tuning_threshold(lambda0, kappa0, Estimator::Dantzig).unwrap();
        let a = pred_bound(beta.view(), &cert, lambda, lambda0, Estimator::Lasso).unwrap();
        let b = pred_bound(beta.view(), &cert, lambda, lambda0, Estimator::Dantzig).unwrap();
        prop_assert_eq!(a.bound, b.bound);
        prop_assert_eq!(a.per_s, b.per_s);
    }

    #[test]
    fn prefactor_diverges_at_threshold(lambda0 in 0.1f64..5.0, kappa0 in 0.01f64..0.24) {
        for est in [Estimator::Lasso, Estimator::Dantzig] {
            let th = tuning_threshold(lambda0, kappa0, est).unwrap();
            let cert = UdpCertificate::assumed(1, kappa0, 1.0).unwrap();
            let beta = Array1::from_elem(3, 1.0);
            let r = l1_bound(beta.view(), &cert, th * (1.0 + 1e-9), lambda0, est).unwrap();
            prop_assert!(r.prefactor.unwrap() > 1e6);
            let at = l1_bound(beta.view(), &cert, th, lambda0, est).unwrap();
            prop_assert!(!at.tuning_ok && at.bound.is_none());
        }
    }

    #[test]
    fn noise_floor_formula(p in 2usize..10_000, sigma in 0.01f64..10.0, t in 1.0f64..3.0, cnm in 0.1f64..5.0) {
        let m = noise_level_for(cnm, p, sigma, t).unwrap();
        let lp = (p as f64).ln();
        prop_assert!((m.lambda0 - (1.0 + t) * cnm * sigma * lp.sqrt()).abs() <= 1e-12 * m.lambda0);
        prop_assert!(m.prob_floor <= 1.0);
        prop_assert!((0.0..=1.0).contains(&m.prob_floor_clamped()));
    }

    #[test]
    fn pipeline_never_violates_on_event(seed in any::<u64>(), s in 1usize..3, estimator in prop_oneof![Just(Estimator::Lasso), Just(Estimator::Dantzig)]) {
        // orthonormal design: δ = 1, S0 = ⌊κ0²p⌋
        let p = 40;
        let d = DesignMatrix::with_default_tol(common::random_orthogonal(p, seed)).unwrap();
        let est = distortion_exact(&d, 1e-4).unwrap();
        let kappa0 = if estimator == Estimator::Lasso { 0.45 } else { 0.24 };
        let cert = udp_from_distortion(&est, d.certifiable_rho_n().unwrap(), kappa0, p).unwrap();
        prop_assume!(cert.s0 >= 1);
        let beta = gen_sparse_target(p, s, 3.0, seed).unwrap();
        let setup = TrialSetup::new(&d, beta, cert, 0.1, 1.0, 1.05, estimator).unwrap();
        for trial in 0..10 {
            let r = setup.run(seed.wrapping_add(trial)).unwrap();
            prop_assert!(!r.violated);
            prop_assert!(r.appendix_diag_ok);
        }
    }

    #[test]
    fn ideal_risk_respects_lower_bound(seed in any::<u64>()) {
        let d = gaussian(12, 20, seed);
        let beta = gen_sparse_target(20, 3, 1.0, seed).unwrap();
        let support: Vec<usize> = (0..20).filter(|&j| beta[j] != 0.0).collect();
        let mc = monte_carlo_ideal(&d, beta.view(), 1.0, &support, 5_000, seed).unwrap();
        prop_assert!(mc.mean_sq_error >= mc.trace_lower - 3.0 * mc.se_sq_error);
    }
}
