use pssv::matcore::singular_values;
use pssv::metrics::{nrmse, rank_deficiency_ratio};
use pssv::solvers::{kkt_residuals, solve_completion, solve_rpca, CompletionConfig, RpcaConfig};
use pssv::synth::{gen_low_rank, gen_mask, Corruption, PrngStream, SyntheticInstance};

fn planted(seed: u64, trial: u64, cols: usize) -> SyntheticInstance {
    SyntheticInstance::generate(
        1000,
        cols,
        3,
        0.05,
        Corruption::Replace,
        &mut PrngStream::new(seed, trial),
    )
    .unwrap()
}

#[test]
fn planted_instance_is_recovered_by_both_methods() {
    let inst = planted(7, 0, 40);
    let pssv = solve_rpca(&inst.observed, &RpcaConfig::pssv(3)).unwrap();
    let nuclear = solve_rpca(&inst.observed, &RpcaConfig::nuclear()).unwrap();
    assert!(pssv.converged && nuclear.converged);
    assert!(nrmse(&inst.low_rank, &pssv.low_rank).unwrap() < 0.01);
    assert!(nrmse(&inst.low_rank, &nuclear.low_rank).unwrap() < 0.01);
}

#[test]
fn converged_solution_is_nearly_stationary_in_e() {
    let inst = planted(7, 0, 40);
    for cfg in [RpcaConfig::pssv(3), RpcaConfig::nuclear()] {
        let sol = solve_rpca(&inst.observed, &cfg).unwrap();
        let kkt = kkt_residuals(
            &inst.observed,
            &sol.low_rank,
            &sol.sparse,
            &sol.multiplier,
            sol.lambda,
        )
        .unwrap();
        assert!(kkt.feasibility < 1e-7);
        assert!(kkt.e_stationarity < 1e-4, "{kkt:?}");
    }
}

#[test]
fn pssv_keeps_the_target_rank_on_planted_instances() {
    for t in 0..20 {
        let inst = planted(31, t, 40);
        let sol = solve_rpca(&inst.observed, &RpcaConfig::pssv(3)).unwrap();
        let ratio = rank_deficiency_ratio(&sol.low_rank, 3).unwrap();
        assert!(ratio >= 0.01, "trial {t}: ratio {ratio}");
    }
}

#[test]
fn exact_rank_two_input_has_no_sparse_part() {
    let o = gen_low_rank(100, 20, 2, &mut PrngStream::new(3, 0)).unwrap();
    let sol = solve_rpca(&o, &RpcaConfig::pssv(2)).unwrap();
    assert!(sol.sparse.norm() / o.norm() < 1e-6);
    assert!((&sol.low_rank - &o).norm() / o.norm() < 1e-6);
}

#[test]
fn completion_recovers_rank_five_from_half_the_entries() {
    let mut stream = PrngStream::new(11, 0);
    let truth = gen_low_rank(100, 100, 5, &mut stream).unwrap();
    let mask = gen_mask(100, 100, 0.5, &mut stream).unwrap();
    let sol = solve_completion(
        &mask.project(&truth),
        &mask,
        &CompletionConfig::with_rank(5),
    )
    .unwrap();
    assert!(sol.converged);
    assert!(nrmse(&truth, &sol.low_rank).unwrap() < 1e-3);
    let s = singular_values(&sol.low_rank).unwrap();
    assert!(s[5] / s[0] < 1e-4);
}

mod properties {
    use proptest::prelude::*;
    use pssv::matcore::{psvt, psvt_spectrum, singular_values, soft_threshold, DenseMatrix};

    fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = DenseMatrix> {
        (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
            proptest::collection::vec(-10.0f64..10.0, r * c)
                .prop_map(move |v| DenseMatrix::from_vec(r, c, v))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn soft_threshold_is_non_expansive(
            (x, y) in (1usize..8, 1usize..8).prop_flat_map(|(r, c)| {
                let v = proptest::collection::vec(-5.0f64..5.0, r * c);
                (v.clone(), v).prop_map(move |(a, b)| (DenseMatrix::from_vec(r, c, a), DenseMatrix::from_vec(r, c, b)))
            }),
            tau in 0.0f64..3.0,
        ) {
            let sx = soft_threshold(&x, tau).unwrap();
            let sy = soft_threshold(&y, tau).unwrap();
            prop_assert!((&sx - &sy).norm() <= (&x - &y).norm() + 1e-12);
        }

        #[test]
        fn psvt_follows_the_spectrum_rule(y in matrix(9, 7), n in 0usize..4, tau in 0.0f64..5.0) {
            let l = y.nrows().min(y.ncols());
            prop_assume!(n <= l);
            let x = psvt(&y, n, tau).unwrap();
            let mut expected: Vec<f64> = psvt_spectrum(&singular_values(&y).unwrap(), n, tau).iter().copied().collect();
            expected.sort_by(|a, b| b.total_cmp(a));
            let got = singular_values(&x).unwrap();
            let scale = 1.0 + expected[0];
            for (g, e) in got.iter().zip(&expected) {
                prop_assert!((g - e).abs() <= 1e-9 * scale, "{g} vs {e}");
            }
        }
    }
}
