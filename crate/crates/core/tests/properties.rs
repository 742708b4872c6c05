mod common;

use common::*;
use nalgebra::DMatrix;
use nehari_core::hankel::{build_truncated_hankel, gram_full};
use nehari_core::reduction::{
    kernel_split, normalize_to_g, reduce_map, reduction_mismatch, RANK_TOL,
};
use nehari_core::{
    certify, classify, feasibility_direct, feasibility_schur, iterate_once, loewner_leq,
    min_eigenvalue, normalize_coefficients, principal_sqrt, scalar_aak_oracle, solve,
    solve_rho_min, solve_rho_min_from, solve_strongly_positive, solve_with_reduction,
    ComplexMatrix, DeviationBound, HermitianMatrix, PositivityMargin, SolveStatus, SolverConfig,
    TheoremPath, C64,
};
use proptest::prelude::*;
use rand::Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn min_eigenvalue_bounds_rayleigh_quotients(seed in any::<u64>(), n in 1usize..8) {
        let mut r = rng(seed);
        let a = random_hermitian(&mut r, n);
        let lo = min_eigenvalue(&a);
        prop_assert!((lo - jacobi_min(&a)).abs() <= 1e-12 * (1.0 + a.frobenius_norm()));
        for _ in 0..100 {
            let x = random_complex(&mut r, n, 1);
            let num = (x.adjoint() * a.as_matrix() * &x)[(0, 0)].re;
            let den = x.norm_squared();
            prop_assert!(lo <= num / den + 1e-10);
        }
    }

    #[test]
    fn sqrt_round_trip(seed in any::<u64>(), n in 1usize..=12) {
        let mut r = rng(seed);
        let a = random_psd(&mut r, n);
        let s = principal_sqrt(&a).unwrap();
        prop_assert!(min_eigenvalue(&s) >= -1e-12 * (1.0 + s.frobenius_norm()));
        let err = (s.as_matrix() * s.as_matrix() - a.as_matrix()).norm();
        prop_assert!(err <= 1e-10 * (1.0 + a.frobenius_norm()));
    }

    #[test]
    fn loewner_antisymmetry(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let a = random_hermitian(&mut r, n);
        let tiny = random_hermitian(&mut r, n).scale(1e-15);
        let b = a.add(&tiny);
        if loewner_leq(&a, &b, 0.0).unwrap() && loewner_leq(&b, &a, 0.0).unwrap() {
            prop_assert!(frob(&a, &b) <= 1e-9 * (1.0 + a.frobenius_norm()));
        }
        let c = a.add(&random_psd(&mut r, n));
        prop_assert!(loewner_leq(&a, &c, 1e-12 * (1.0 + c.frobenius_norm())).unwrap());
    }

    #[test]
    fn solve_residual(seed in any::<u64>(), n in 1usize..8, cols in 1usize..4) {
        let mut r = rng(seed);
        let a = random_psd(&mut r, n).add(&HermitianMatrix::scaled_identity(n, 0.1));
        let b = ComplexMatrix::new(random_complex(&mut r, n, cols)).unwrap();
        let x = solve_strongly_positive(&a, &b, PositivityMargin::new(1e-3).unwrap()).unwrap();
        let res = (a.as_matrix() * x.as_matrix() - b.as_matrix()).norm();
        prop_assert!(res <= 1e-10 * (1.0 + b.frobenius_norm()));
    }

    #[test]
    fn gram_block_identity(seed in any::<u64>(), m in 1usize..=3, k in 1usize..=5, extra in 0usize..3) {
        let mut r = rng(seed);
        let blocks = (0..k)
            .map(|_| ComplexMatrix::new(random_complex(&mut r, m, m)).unwrap())
            .collect();
        let c = nehari_core::CoefficientSequence::new(blocks).unwrap();
        let n = k.max(2) + extra;
        let (h, g) = c.gram_blocks(n).unwrap();
        let full = gram_full(&h);
        let rel = frob(&g.assemble(), &full) / (1.0 + full.frobenius_norm());
        prop_assert!(rel <= 1e-12);
        prop_assert!(loewner_leq(&HermitianMatrix::zeros(full.order()), &full, 1e-10 * (1.0 + full.frobenius_norm())).unwrap());
        prop_assert!(min_eigenvalue(&g.a11) >= -1e-10 * (1.0 + g.scale()));
        prop_assert!(min_eigenvalue(&g.a22) >= -1e-10 * (1.0 + g.scale()));
    }

    #[test]
    fn truncation_stability(seed in any::<u64>(), m in 1usize..=3, k in 2usize..=5) {
        let mut r = rng(seed);
        let blocks = (0..k)
            .map(|_| ComplexMatrix::new(random_complex(&mut r, m, m)).unwrap())
            .collect();
        let c = nehari_core::CoefficientSequence::new(blocks).unwrap();
        let (_, small) = c.gram_blocks(k).unwrap();
        let (_, big) = c.gram_blocks(k + 3).unwrap();
        let inner = (k - 1) * m;
        prop_assert_eq!(&small.a11, &big.a11);
        prop_assert_eq!(small.a12.as_matrix(), &big.a12.as_matrix().columns(0, inner).into_owned());
        prop_assert_eq!(small.a22.as_matrix(), &big.a22.as_matrix().view((0, 0), (inner, inner)).into_owned());
        prop_assert!(big.a12.as_matrix().columns(inner, 3 * m).iter().all(|z| *z == C64::new(0.0, 0.0)));
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn solver_bracketing_and_certificate(seed in any::<u64>(), m in 1usize..=3, k in 1usize..=4) {
        let c = generated(m, k, seed);
        let (h, g) = c.gram_blocks(c.default_block_order()).unwrap();
        let cfg = SolverConfig::default();
        let res = solve_rho_min(&g, &cfg).unwrap();
        prop_assert_eq!(res.status, SolveStatus::Converged);
        let tol = cfg.mono_tol * g.scale();
        let hist = &res.history;
        for w in hist.windows(3) {
            if w[0].n % 2 == 0 {
                prop_assert!(loewner_leq(&w[0].q_sq, &w[2].q_sq, tol).unwrap());
            } else {
                prop_assert!(loewner_leq(&w[2].q_sq, &w[0].q_sq, tol).unwrap());
            }
        }
        for e in hist.iter().filter(|r| r.n % 2 == 0) {
            for o in hist.iter().filter(|r| r.n % 2 == 1) {
                prop_assert!(loewner_leq(&e.q_sq, &o.q_sq, tol).unwrap());
            }
        }
        for rec in hist {
            prop_assert!(loewner_leq(&g.a11, &rec.q_sq, tol).unwrap());
        }
        let rho = res.rho_sq_min.as_ref().unwrap();
        let cert = certify(&res, &h, &g, &cfg).unwrap();
        prop_assert!(cert.fixed_point_residual <= 1e-9 * (1.0 + rho.frobenius_norm()));
        prop_assert!(cert.feasibility_margin >= -1e-8 * g.scale());
        prop_assert!(cert.singularity_witness <= 1e-6 * g.scale());
        // replay: recomputing every step reproduces the trace
        for w in hist.windows(2) {
            let again = iterate_once(&w[0].q_sq, &g, &cfg).unwrap();
            prop_assert!(frob(&again, &w[1].q_sq) <= 1e-12 * (1.0 + w[1].q_sq.frobenius_norm()));
        }
    }

    #[test]
    fn warm_start_uniqueness(seed in any::<u64>(), m in 1usize..=3, k in 2usize..=4, shift in 0.01f64..10.0) {
        let c = generated(m, k, seed);
        let (_, g) = c.gram_blocks(k).unwrap();
        let cfg = SolverConfig::default();
        prop_assume!(classify(&g, &cfg) == TheoremPath::Theorem24);
        let cold = solve_rho_min(&g, &cfg).unwrap();
        let start = g.a11.add(&HermitianMatrix::scaled_identity(m, shift));
        let warm = solve_rho_min_from(&g, &start, &cfg).unwrap();
        prop_assert_eq!(warm.status, SolveStatus::Converged);
        let rho = cold.rho_sq_min.as_ref().unwrap();
        if loewner_leq(rho, &start, 0.0).unwrap() {
            prop_assert!(warm.bracketing_verified);
        }
        let d = frob(rho, warm.rho_sq_min.as_ref().unwrap());
        prop_assert!(d <= 1e-8 * g.scale());
    }

    #[test]
    fn scalar_matches_hankel_norm(seed in any::<u64>(), k in 1usize..=5) {
        let c = generated(1, k, seed);
        let (_, g) = c.gram_blocks(c.default_block_order()).unwrap();
        let res = solve(&g, &SolverConfig::default()).unwrap();
        let rho = res.rho_sq_min.unwrap().as_matrix()[(0, 0)].re;
        let h = build_truncated_hankel(&c, k).unwrap();
        let oracle = jacobi_max(&gram_full(&h));
        prop_assert!((rho - oracle).abs() <= 1e-8 * (1.0 + oracle));
        prop_assert!((scalar_aak_oracle(&c).unwrap() - oracle).abs() <= 1e-10 * (1.0 + oracle));
    }

    #[test]
    fn reduction_matches_direct_on_singular_instances(seed in any::<u64>(), m in 2usize..=3, rank in 1usize..=2) {
        prop_assume!(rank < m);
        let base = singular_instance(m, rank, seed);
        let c = rotate(&base, &random_unitary(&mut rng(seed ^ 0x5a5a), m));
        let (h, g) = c.gram_blocks(2).unwrap();
        let cfg = SolverConfig::default();
        prop_assert_eq!(classify(&g, &cfg), TheoremPath::Theorem25Reduction);
        let red = solve_with_reduction(&g, &cfg).unwrap();
        prop_assert_eq!(red.status, SolveStatus::Converged);
        prop_assert!(red.kernel_dims.len() <= m);
        prop_assert_eq!(red.kernel_dims[0], m - rank);
        prop_assert!(red.bracketing_verified);
        let cert = certify(&red, &h, &g, &cfg).unwrap();
        prop_assert!(cert.is_valid(g.scale(), cfg.mono_tol), "{:?}", cert);

        let direct = solve_rho_min(&g, &cfg).unwrap();
        prop_assert_eq!(direct.status, SolveStatus::Converged);
        let d = frob(red.rho_sq_min.as_ref().unwrap(), direct.rho_sq_min.as_ref().unwrap());
        prop_assert!(d <= 1e-9 * g.scale(), "paths differ by {}", d);

        // kernel block form of the fixed point in normalized coordinates
        let nm = normalize_to_g(&g, &cfg).unwrap();
        let split = kernel_split(&nm, RANK_TOL).unwrap();
        let q_g = nm.to_normalized(red.rho_sq_min.as_ref().unwrap());
        let in_basis = split.in_split_basis(&q_g);
        let c_dim = m - split.d_ker;
        let off = in_basis.view((0, c_dim), (c_dim, split.d_ker)).norm();
        let ker = in_basis.view((c_dim, c_dim), (split.d_ker, split.d_ker)).into_owned();
        prop_assert!(off <= 1e-8);
        prop_assert!((ker - DMatrix::<C64>::identity(split.d_ker, split.d_ker)).norm() <= 1e-8);

        // reduced map: positivity and agreement with the full map
        let reduced = reduce_map(&nm, &split).unwrap();
        prop_assert!(min_eigenvalue(&reduced.a11_hat) >= 1.0 - 1e-10);
        let mut r = rng(seed);
        for _ in 0..5 {
            let probe = reduced.a11_hat.add(&random_psd(&mut r, c_dim));
            prop_assert!(reduction_mismatch(&nm, &split, &reduced, &probe).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn back_transform_consistency(seed in any::<u64>(), m in 1usize..=3, k in 2usize..=4) {
        let c = generated(m, k, seed);
        let (_, g) = c.gram_blocks(k).unwrap();
        let cfg = SolverConfig::default();
        let nm = normalize_to_g(&g, &cfg).unwrap();
        let mut r = rng(seed.wrapping_add(1));
        for _ in 0..20 {
            // admissible: q_G² ⪰ I
            let q_g = HermitianMatrix::identity(m).add(&random_psd(&mut r, m));
            let via_g = nm.to_original(&nm.apply(&q_g).unwrap());
            let via_f = iterate_once(&nm.to_original(&q_g), &g, &cfg).unwrap();
            prop_assert!(frob(&via_g, &via_f) <= 1e-10 * (1.0 + via_f.frobenius_norm()));
        }
    }

    #[test]
    fn full_rank_paths_agree(seed in any::<u64>(), m in 1usize..=3, k in 2usize..=4) {
        let c = generated(m, k, seed);
        let (_, g) = c.gram_blocks(k).unwrap();
        let cfg = SolverConfig::default();
        prop_assume!(classify(&g, &cfg) == TheoremPath::Theorem24);
        let a = solve_rho_min(&g, &cfg).unwrap().rho_sq_min.unwrap();
        let b = solve_with_reduction(&g, &cfg).unwrap().rho_sq_min.unwrap();
        prop_assert!(frob(&a, &b) <= 1e-10);
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn feasibility_routes_and_normalization(seed in any::<u64>(), m in 1usize..=3, k in 1usize..=4, t in -0.5f64..0.5) {
        let c = generated(m, k, seed);
        let (_, g) = c.gram_blocks(c.default_block_order()).unwrap();
        let cfg = SolverConfig::default();
        let rho_min = solve(&g, &cfg).unwrap().rho_sq_min.unwrap();
        let mut r = rng(seed);
        let dir = random_hermitian(&mut r, m);
        let rho_sq = rho_min.add(&dir.scale(t * rho_min.frobenius_norm() / (1.0 + dir.frobenius_norm())));
        prop_assume!(min_eigenvalue(&rho_sq) > 1e-6);
        let bound = DeviationBound::from_rho_sq(rho_sq).unwrap();
        let direct = feasibility_direct(&c, &bound, &cfg).unwrap();
        prop_assume!(direct.margin.abs() >= 1e-8 * g.scale());
        if let Some(schur) = feasibility_schur(&g, &bound, &cfg).unwrap().verdict() {
            prop_assert_eq!(schur.feasible, direct.feasible);
            // Schur margin is at least as large in magnitude, same sign
            prop_assert!(schur.margin.abs() + 1e-12 >= direct.margin.abs());
        }
        let normalized = normalize_coefficients(&c, &bound).unwrap();
        let unit = DeviationBound::new(HermitianMatrix::identity(m)).unwrap();
        prop_assert_eq!(feasibility_direct(&normalized, &unit, &cfg).unwrap().feasible, direct.feasible);
    }

    #[test]
    fn threshold_sharpness(seed in any::<u64>(), k in 1usize..=5) {
        let c = generated(1, k, seed);
        let oracle = scalar_aak_oracle(&c).unwrap();
        let eps = 1e-6 * (1.0 + oracle);
        let cfg = SolverConfig::default();
        let at = |v: f64| {
            let b = DeviationBound::from_rho_sq(HermitianMatrix::from_real_rows(&[&[v]]).unwrap()).unwrap();
            feasibility_direct(&c, &b, &cfg).unwrap().feasible
        };
        prop_assert!(at(oracle + eps));
        prop_assert!(!at(oracle - eps));
    }

    #[test]
    fn feasibility_is_monotone(seed in any::<u64>(), m in 1usize..=3, k in 1usize..=4) {
        let c = generated(m, k, seed);
        let mut r = rng(seed);
        let cfg = SolverConfig::default();
        let base = random_psd(&mut r, m).add(&HermitianMatrix::scaled_identity(m, r.random_range(0.1..50.0)));
        let bigger = base.add(&random_psd(&mut r, m));
        let v1 = feasibility_direct(&c, &DeviationBound::from_rho_sq(base).unwrap(), &cfg).unwrap();
        let v2 = feasibility_direct(&c, &DeviationBound::from_rho_sq(bigger).unwrap(), &cfg).unwrap();
        if v1.feasible {
            prop_assert!(v2.feasible);
        }
        prop_assert!(v2.margin >= v1.margin - 1e-10 * (1.0 + v1.margin.abs()));
    }
}

#[test]
fn kernel_reduction_example_oracle() {
    let nm_cfg = SolverConfig::default();
    let g1 = ComplexMatrix::from_real_rows(&[&[2.0, 0.0], &[0.0, 1.0]]).unwrap();
    let g2 = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
    let c = nehari_core::CoefficientSequence::new(vec![g1, g2]).unwrap();
    // rotating the decoupled instance moves the kernel off the axes
    let w = random_unitary(&mut rng(11), 2);
    let rotated = rotate(&c, &w);
    let (_, g) = rotated.gram_blocks(2).unwrap();
    let res = solve(&g, &nm_cfg).unwrap();
    assert_eq!(res.theorem_path, TheoremPath::Theorem25Reduction);
    let diag = HermitianMatrix::from_real_diagonal(&[3.0 + 2.0 * 2f64.sqrt(), 1.0]).unwrap();
    let expect = diag.congruence(&w);
    assert!(frob(res.rho_sq_min.as_ref().unwrap(), &expect) <= 1e-9);
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn instance_round_trip(seed in any::<u64>(), m in 1usize..=3, k in 1usize..=4, with_rho in any::<bool>()) {
        use nehari_core::io::{emit_instance, parse_instance, SolverOverrides};
        let c = generated(m, k, seed);
        let mut inst = nehari_core::io::InstanceFile::new(c);
        if with_rho {
            inst.rho = Some(random_psd(&mut rng(seed), m));
            inst.solver = Some(SolverOverrides { delta: Some(1e-7), tol: None, max_iter: Some(50) });
        }
        let back = parse_instance(&emit_instance(&inst)).unwrap();
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn trace_files_replay(seed in any::<u64>(), m in 1usize..=3, k in 1usize..=4) {
        use nehari_core::io::{format_trace, read_trace_matrices, write_trace_matrices, TRACE_HEADER};
        let c = generated(m, k, seed);
        let (_, g) = c.gram_blocks(c.default_block_order()).unwrap();
        let cfg = SolverConfig::default();
        let res = solve_rho_min(&g, &cfg).unwrap();
        let csv = format_trace(&res.history);
        let mut lines = csv.lines();
        prop_assert_eq!(lines.next(), Some(TRACE_HEADER));
        prop_assert_eq!(lines.count(), res.history.len());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.matrices.json");
        write_trace_matrices(&path, &res.history).unwrap();
        let iterates = read_trace_matrices(&path).unwrap();
        prop_assert_eq!(iterates.len(), res.history.len());
        for w in iterates.windows(2) {
            let again = iterate_once(&w[0], &g, &cfg).unwrap();
            prop_assert!(frob(&again, &w[1]) <= 1e-12 * (1.0 + w[1].frobenius_norm()));
        }
    }
}
