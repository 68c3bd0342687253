use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topictrend::multivar::{
    fit_var, fit_vecm, johansen, normality, point_irf, select_lag, stability, DetSpec, ModelRef, MultiSeries,
};
use topictrend::synthetic::{cointegrated_pair, random_walks, simulate_var};
use topictrend::trend_series::{yearly_prevalence_by_year, CategoryMap, Grouping};

/// Random lag matrices rescaled so the companion spectral radius is `radius`.
fn stable_lags(k: usize, p: usize, radius: f64, rng: &mut ChaCha8Rng) -> Vec<DMatrix<f64>> {
    let a: Vec<DMatrix<f64>> = (0..p).map(|_| DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0))).collect();
    let current = spectral_radius(&a);
    // Scaling A_i by c^i scales every companion root by c.
    let c = radius / current;
    a.into_iter().enumerate().map(|(i, m)| m * c.powi(i as i32 + 1)).collect()
}

fn spectral_radius(a: &[DMatrix<f64>]) -> f64 {
    let k = a[0].nrows();
    let p = a.len();
    let mut comp = DMatrix::zeros(k * p, k * p);
    for (i, m) in a.iter().enumerate() {
        comp.view_mut((0, i * k), (k, k)).copy_from(m);
    }
    for i in k..k * p {
        comp[(i, i - k)] = 1.0;
    }
    comp.complex_eigenvalues().iter().map(|z| z.re.hypot(z.im)).fold(0.0, f64::max)
}

fn random_psd(k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let l = DMatrix::from_fn(k, k, |i, j| if j <= i { rng.gen_range(-1.0..1.0) } else { 0.0 });
    &l * l.transpose() + DMatrix::identity(k, k) * 0.1
}

#[test]
fn johansen_matches_reference_values() {
    // Reference: statsmodels coint_johansen(data, det_order=0, k_ar_diff=1).
    let data = cointegrated_pair(200, 1.0, 0.5, 0.5, 3).unwrap();
    let j = johansen(&data, 2, DetSpec::Constant).unwrap();
    let trace = [50.93398326, 5.20398975];
    let eig = [0.20622844, 0.02594039];
    for i in 0..2 {
        assert!((j.trace[i] - trace[i]).abs() < 1e-6, "trace {i}: {}", j.trace[i]);
        assert!((j.eigenvalues[i] - eig[i]).abs() < 1e-7, "eigenvalue {i}: {}", j.eigenvalues[i]);
    }
    // The second trace exceeds 3.84, so the 5% rule stops at full rank.
    assert_eq!(j.selected_rank, 2);
}

#[test]
fn lag_selection_finds_var2() {
    let a1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.4]);
    let a2 = DMatrix::from_row_slice(2, 2, &[-0.3, 0.0, 0.2, -0.3]);
    let reps = 100;
    let (mut sbic, mut hqic) = (0, 0);
    for seed in 0..reps {
        let data = simulate_var(&[a1.clone(), a2.clone()], &DVector::zeros(2), 1.0, 400, 100, seed).unwrap();
        let sel = select_lag(&data, 6).unwrap();
        sbic += usize::from(sel.best_sbic == 2);
        hqic += usize::from(sel.best_hqic == 2);
    }
    assert!(sbic >= 90, "SBIC picked 2 in {sbic}/{reps}");
    assert!(hqic >= 90, "HQIC picked 2 in {hqic}/{reps}");
}

#[test]
fn jarque_bera_holds_size_under_gaussian_residuals() {
    let reps = 400;
    let mut rejections = 0;
    let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
    for seed in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = DMatrix::from_fn(300, 3, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        let report = normality(&e, &names).unwrap();
        rejections += usize::from(report.joint_jarque_bera.2 < 0.05);
        assert_eq!(report.joint_jarque_bera.1, 6);
    }
    let size = rejections as f64 / reps as f64;
    assert!((0.02..=0.08).contains(&size), "size {size}");
}

#[test]
fn vecm_imposes_exactly_k_minus_r_unit_roots() {
    for seed in 0..5 {
        let pair = cointegrated_pair(200, 1.5, 0.4, 0.3, seed).unwrap();
        let walk = random_walks(1, 200, seed + 100).unwrap();
        let values = DMatrix::from_fn(200, 3, |i, j| if j < 2 { pair.values[(i, j)] } else { walk.values[(i, 0)] });
        let data = MultiSeries::new(vec!["y".into(), "x".into(), "z".into()], values).unwrap();
        for rank in 1..3 {
            let m = fit_vecm(&data, 2, rank, DetSpec::Constant).unwrap();
            let (rows, _) = stability(ModelRef::Vecm(&m));
            assert_eq!(rows.len(), 3 * 2);
            let units = rows.iter().filter(|r| (r.modulus - 1.0).abs() < 1e-8).count();
            assert_eq!(units, 3 - rank, "seed {seed} rank {rank}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn irf_of_stable_var_dies_out(seed in 0u64..10_000, k in 1usize..4, p in 1usize..4, radius in 0.1f64..0.9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = stable_lags(k, p, radius, &mut rng);
        let sigma = random_psd(k, &mut rng);
        let irf = point_irf(&a, &sigma, 200, true).unwrap();
        prop_assert!(irf[200].amax() < 1e-6, "max response {}", irf[200].amax());
    }

    #[test]
    fn var_fit_shapes_and_stability_flag(seed in 0u64..10_000, k in 1usize..4, p in 1usize..4, radius in 0.2f64..0.95) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = stable_lags(k, p, radius, &mut rng);
        let data = simulate_var(&a, &DVector::zeros(k), 1.0, 150, 50, seed).unwrap();
        let m = fit_var(&data, p).unwrap();
        prop_assert_eq!(m.companion().shape(), (k * p, k * p));
        let (rows, stable) = stability(ModelRef::Var(&m));
        prop_assert_eq!(rows.len(), k * p);
        prop_assert_eq!(stable, rows.iter().all(|r| r.modulus < 1.0 - 1e-10));
        prop_assert_eq!(stable, m.is_stable());
        prop_assert!((&m.sigma - m.sigma.transpose()).amax() < 1e-12);
        let ev = m.sigma.clone().symmetric_eigenvalues();
        prop_assert!(ev.iter().all(|v| *v >= -1e-10));
    }

    #[test]
    fn johansen_trace_weakly_decreasing(seed in 0u64..10_000, k in 2usize..4, lags in 1usize..4) {
        let data = random_walks(k, 120, seed).unwrap();
        let j = johansen(&data, lags, DetSpec::Constant).unwrap();
        prop_assert!(j.eigenvalues.iter().all(|l| (0.0..1.0).contains(l)));
        for w in j.eigenvalues.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        for w in j.trace.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn prevalence_rows_sum_to_one(seed in 0u64..10_000, k in 2usize..6, n in 10usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = DMatrix::from_fn(n, k, |_, _| rng.gen_range(0.01..1.0));
        let theta = DMatrix::from_fn(n, k, |i, j| theta[(i, j)] / theta.row(i).sum());
        let years: Vec<i32> = (0..n).map(|i| 2000 + (i % 7) as i32).collect();
        let s = yearly_prevalence_by_year(&theta, &years, &Grouping::Topics).unwrap();
        for r in s.values.row_iter() {
            prop_assert!((r.sum() - 1.0).abs() < 1e-12);
        }
        // Topics left out of the map land in one remaining column, so mass is kept.
        let map = CategoryMap::new([(1, "first".to_string())]);
        let c = yearly_prevalence_by_year(&theta, &years, &Grouping::Categories(map)).unwrap();
        for r in c.values.row_iter() {
            prop_assert!((r.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn prevalence_ignores_document_order(seed in 0u64..10_000, n in 10usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = DMatrix::from_fn(n, 3, |_, _| rng.gen_range(0.0..1.0));
        let years: Vec<i32> = (0..n).map(|_| rng.gen_range(1990..1996)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.reverse();
        let shuffled = DMatrix::from_fn(n, 3, |i, j| theta[(order[i], j)]);
        let shuffled_years: Vec<i32> = order.iter().map(|&i| years[i]).collect();
        let a = yearly_prevalence_by_year(&theta, &years, &Grouping::Topics).unwrap();
        let b = yearly_prevalence_by_year(&shuffled, &shuffled_years, &Grouping::Topics).unwrap();
        prop_assert_eq!(&a.years, &b.years);
        prop_assert_eq!(&a.doc_counts, &b.doc_counts);
        prop_assert!((&a.values - &b.values).amax() < 1e-12);
    }
}
