use condsep_core::search::{SearchConfig, Verdict};
use condsep_core::states::{
    build_extension, dedegenerate_weights, random_density, random_separable_with_rank, werner_state,
};
use condsep_core::theorem1::extract;
use condsep_core::{
    classical_cmi, hermitian_eig, kron, matrix_exp, matrix_log, partial_trace, quantum_cmi, search_extension,
    validate_density, verify_extension, von_neumann_entropy, ComplexMatrix, DensityMatrix, Error,
    JointDistribution, SubsystemDims, Tolerances, C64,
};
use proptest::prelude::*;

fn exy() -> impl Strategy<Value = (usize, usize, usize)> {
    prop_oneof![(1usize..=3, Just(2usize), Just(2usize)), (1usize..=2, Just(2usize), Just(3usize))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_preserves_trace((de, dx, dy) in exy(), rank in 1usize..=4, seed in any::<u64>()) {
        let sigma = random_density(&SubsystemDims::exy(de, dx, dy).unwrap(), rank, seed).unwrap();
        for keep in [&["e"][..], &["x"], &["y"], &["x", "e"], &["e", "y"], &["e", "x", "y"]] {
            let m = partial_trace(&sigma, keep).unwrap();
            prop_assert!((m.matrix().trace().re - 1.0).abs() < 1e-12);
            prop_assert!(m.matrix().trace().im.abs() < 1e-12);
        }
    }

    #[test]
    fn kron_trace_factorizes(a_seed in any::<u64>(), b_seed in any::<u64>(), n in 1usize..=3, m in 1usize..=3) {
        let a = random_density(&SubsystemDims::single(n), n, a_seed).unwrap();
        let b = random_density(&SubsystemDims::single(m), m, b_seed).unwrap();
        let a = a.matrix().scale(1.7);
        let ab = kron(&a, b.matrix());
        prop_assert!((ab.trace() - a.trace() * b.matrix().trace()).norm() < 1e-12);
    }

    #[test]
    fn eigenvalues_sum_to_trace(n in 1usize..=8, rank in 1usize..=8, seed in any::<u64>()) {
        let rank = rank.min(n);
        let rho = random_density(&SubsystemDims::single(n), rank, seed).unwrap();
        let eig = hermitian_eig(rho.matrix()).unwrap();
        let sum: f64 = eig.eigenvalues.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(eig.reconstruct().distance(rho.matrix()) < 1e-12);
        prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn exp_inverts_log_on_full_rank(n in 1usize..=6, seed in any::<u64>()) {
        let rho = random_density(&SubsystemDims::single(n), n, seed).unwrap();
        prop_assume!(rho.min_eigenvalue() > 1e-6);
        let back = matrix_exp(&matrix_log(rho.matrix(), 1e-12).unwrap()).unwrap();
        prop_assert!(back.distance(rho.matrix()) < 1e-9);
    }

    #[test]
    fn entropy_is_bounded(n in 1usize..=8, rank in 1usize..=8, seed in any::<u64>()) {
        let rank = rank.min(n);
        let rho = random_density(&SubsystemDims::single(n), rank, seed).unwrap();
        let s = von_neumann_entropy(&rho).unwrap();
        prop_assert!(s >= -1e-12);
        prop_assert!(s <= (rank as f64).log2() + 1e-12);
    }

    #[test]
    fn diagonal_states_match_classical_cmi(
        dims in (1usize..=3, 1usize..=3, 1usize..=3),
        raw in prop::collection::vec(0.0f64..1.0, 27),
    ) {
        let (dx, dy, de) = dims;
        let len = dx * dy * de;
        let mut probs = raw[..len].to_vec();
        probs[0] += 1e-3;
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        let tols = Tolerances::default();
        let p = JointDistribution::new([dx, dy, de], probs, &tols).unwrap();
        let diag = ComplexMatrix::from_fn(len, len, |i, j| {
            if i != j {
                return C64::new(0.0, 0.0);
            }
            let (e, x, y) = (i / (dx * dy), (i / dy) % dx, i % dy);
            C64::new(p.p(x, y, e), 0.0)
        });
        let sigma = validate_density(diag, SubsystemDims::exy(de, dx, dy).unwrap(), &tols).unwrap();
        let q = quantum_cmi(&sigma).unwrap().cmi;
        prop_assert!((q - classical_cmi(&p)).abs() < 1e-12, "{} vs {}", q, classical_cmi(&p));
    }

    #[test]
    fn extension_round_trip_is_sound(
        (de, dx, dy) in prop_oneof![(1usize..=6, Just(2usize), Just(2usize)), (1usize..=4, Just(2usize), Just(3usize))],
        rank in 1usize..=3,
        seed in any::<u64>(),
    ) {
        let tols = Tolerances::default();
        let d = random_separable_with_rank((dx, dy), de, rank, seed).unwrap();
        let rho = d.reconstruct();
        let ext = build_extension(&dedegenerate_weights(&d)).unwrap();
        let cert = verify_extension(&rho, &ext, &tols).unwrap();
        prop_assert!(cert.verdict.overall, "{:?}", cert.verdict.failed());
        let x = extract(&ext, &tols).unwrap();
        prop_assert!(x.rebuild().distance(ext.sigma().matrix()) < 1e-8);
        prop_assert!(x.decomposition.reconstruct_matrix().distance(rho.matrix()) < 1e-8);
    }

    #[test]
    fn looser_tolerances_never_revoke_a_pass(
        seed in any::<u64>(),
        n in 1usize..=4,
        noise in prop_oneof![Just(0.0), 1e-12f64..1e-6],
    ) {
        let tols = Tolerances::default();
        let d = random_separable_with_rank((2, 2), n, 2, seed).unwrap();
        let rho = d.reconstruct();
        let ext = build_extension(&dedegenerate_weights(&d)).unwrap();
        let dims = ext.sigma().dims().clone();
        let junk = random_density(&dims, dims.total(), seed ^ 1).unwrap();
        let mixed = &ext.sigma().matrix().scale(1.0 - noise) + &junk.matrix().scale(noise);
        let sigma = condsep_core::states::ExtensionState::new(validate_density(mixed, dims, &tols).unwrap()).unwrap();
        let strict = verify_extension(&rho, &sigma, &tols).unwrap();
        let mut loose_tols = tols;
        loose_tols.cond1 *= 10.0;
        loose_tols.cond2 *= 10.0;
        loose_tols.cond3 *= 10.0;
        loose_tols.cond4_zero /= 10.0;
        loose_tols.cond4_gap /= 10.0;
        let loose = verify_extension(&rho, &sigma, &loose_tols).unwrap();
        for (s, l) in [
            (strict.verdict.cond1, loose.verdict.cond1),
            (strict.verdict.cond2, loose.verdict.cond2),
            (strict.verdict.cond3, loose.verdict.cond3),
            (strict.verdict.cond4, loose.verdict.cond4),
            (strict.verdict.overall, loose.verdict.overall),
        ] {
            prop_assert!(!s || l);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn search_claims_are_sound(seed in any::<u64>(), rank in 1usize..=6, wide in any::<bool>()) {
        let layout = if wide { SubsystemDims::xy(2, 3) } else { SubsystemDims::xy(2, 2) }.unwrap();
        let rho = random_density(&layout, rank.min(layout.total()), seed).unwrap();
        let config = SearchConfig { restarts: 3, max_iters: 300, trace: true, seed, ..Default::default() };
        let report = search_extension(&rho, &config).unwrap();
        for r in &report.restarts {
            let trace = r.trace.as_ref().unwrap();
            prop_assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
        match report.verdict {
            Verdict::SeparableCertified => {
                let best = report.best.as_ref().unwrap();
                prop_assert!(report.is_ppt);
                prop_assert!(best.reconstruct_matrix().distance(rho.matrix()) <= config.residual_target);
                prop_assert!(report.certificate.as_ref().unwrap().verdict.overall);
            }
            Verdict::EntangledCertified => prop_assert!(!report.is_ppt),
            Verdict::Inconclusive => prop_assert!(report.is_ppt),
        }
    }
}

#[test]
fn separable_werner_states_are_certified() {
    for p in [0.0, 0.1, 0.25, 1.0 / 3.0 - 1e-3] {
        let report = search_extension(&werner_state(p).unwrap(), &SearchConfig::default()).unwrap();
        assert_eq!(report.verdict, Verdict::SeparableCertified, "p = {p}: {:?}", report.note);
    }
}

#[test]
fn invalid_inputs_are_validation_errors() {
    let tols = Tolerances::default();
    let c = |re: f64| C64::new(re, 0.0);
    let not_hermitian = ComplexMatrix::from_row_major(2, 2, vec![c(0.5), c(0.3), c(0.0), c(0.5)]).unwrap();
    let err = validate_density(not_hermitian, SubsystemDims::single(2), &tols).unwrap_err();
    assert!(matches!(err, Error::NotHermitian { .. }) && err.is_validation());

    let negative = ComplexMatrix::from_real_diagonal(&[1.5, -0.5]);
    let err = validate_density(negative, SubsystemDims::single(2), &tols).unwrap_err();
    assert!(matches!(err, Error::NotPositive { .. }) && err.is_validation());

    let rho = DensityMatrix::maximally_mixed(SubsystemDims::xy(2, 2).unwrap());
    assert!(matches!(partial_trace(&rho, &["q"]), Err(Error::UnknownLabel(_))));
    assert!(partial_trace(&rho, &[]).unwrap_err().is_validation());
}
