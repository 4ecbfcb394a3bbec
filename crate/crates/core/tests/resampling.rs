use hetfx::resampling::{ecp, p_value, Tail};
use hetfx::rng::stream_rng;
use hetfx::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn normal_sample(n1: usize, n0: usize, shift: f64, seed: u64) -> ExperimentSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t: Vec<f64> = (0..n1).map(|_| shift + rng.sample::<f64, _>(StandardNormal)).collect();
    let c: Vec<f64> = (0..n0).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    ExperimentSample::from_groups(&t, &c).unwrap()
}

/// Every subset of `0..n` with `k` members, as indicator vectors.
fn all_assignments(n: usize, k: usize) -> Vec<Vec<bool>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).map(|i| m >> i & 1 == 1).collect())
        .collect()
}

#[test]
fn assignment_sampler_is_uniform_on_two_units() {
    let mut rng = stream_rng(11, 0);
    let first = (0..10_000)
        .filter(|_| assignment_sampler(2, 1, &mut rng).unwrap()[0])
        .count() as f64;
    let chi2 = 2.0 * (first - 5000.0).powi(2) / 5000.0;
    // 99.9% point of chi-square with one degree of freedom
    assert!(chi2 < 10.83, "chi2 {chi2}");
}

#[test]
fn assignment_sampler_contract() {
    let mut rng = stream_rng(1, 0);
    assert!(matches!(assignment_sampler(5, 5, &mut rng), Err(Error::InvalidArgument(_))));
    assert!(matches!(assignment_sampler(5, 0, &mut rng), Err(Error::InvalidArgument(_))));
    let a = assignment_sampler(30, 12, &mut stream_rng(4, 2)).unwrap();
    let b = assignment_sampler(30, 12, &mut stream_rng(4, 2)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.iter().filter(|&&x| x).count(), 12);
}

#[test]
fn constant_outcomes_never_reject() {
    let s = ExperimentSample::from_groups(&[2.0; 6], &[2.0; 7]).unwrap();
    for method in [Method::Bootstrap, Method::Permutation] {
        for kind in [StatisticKind::LTheta, StatisticKind::Hkz] {
            let r = run_test(&s, kind, Theta::NORMAL, &ResamplingPlan::new(method, 200, 3)).unwrap();
            assert_eq!(r.observed, 0.0);
            assert_eq!((r.diagnostics.min, r.diagnostics.max), (0.0, 0.0));
            assert!(r.diagnostics.zero_variance);
            assert!(!r.reject, "{kind:?} {method:?}");
        }
    }
}

#[test]
fn permutation_p_value_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let b = 4000;
    for n in [6usize, 7, 8] {
        let n1 = n / 2;
        let y: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let d: Vec<bool> = (0..n).map(|i| i < n1).collect();
        let s = ExperimentSample::new(y, d).unwrap();
        let tau = 0.25;
        let aligned: Vec<f64> =
            s.outcomes().iter().zip(s.treatments()).map(|(v, &t)| if t { *v } else { v + tau }).collect();
        let exact: Vec<f64> = all_assignments(n, n1)
            .into_iter()
            .map(|a| l_theta_stat(&ExperimentSample::new(aligned.clone(), a).unwrap(), Theta::NORMAL))
            .collect();
        let obs = l_theta_stat(&s, Theta::NORMAL);
        let p_exact = p_value(obs, &exact, Tail::TwoSided);
        let plan = ResamplingPlan::new(Method::Permutation, b, 5);
        let r = permutation_test_l(&s, Theta::NORMAL, &plan, Some(tau)).unwrap();
        assert!(
            (r.p_value - p_exact).abs() <= 2.0 / (b as f64).sqrt(),
            "n={n}: mc {} exact {p_exact}",
            r.p_value
        );
        assert!((r.ecp - ecp(obs, &exact)).abs() <= 2.0 / (b as f64).sqrt());
    }
}

#[test]
fn ci_test_dominates_its_grid() {
    let s = normal_sample(30, 30, 0.4, 8);
    for kind in [StatisticKind::LTheta, StatisticKind::Hkz] {
        let plan = ResamplingPlan::new(Method::CiPermutation, 300, 9);
        let r = ci_permutation_test(&s, kind, Theta::NORMAL, &plan).unwrap();
        let grid = r.tau_grid.as_ref().unwrap();
        let ps = r.grid_p_values.as_ref().unwrap();
        assert_eq!(grid.len(), 21);
        let (lo, hi) = welch_ci(&s, 0.999).unwrap();
        assert_eq!((grid[0], grid[20]), (lo, hi));
        for p in ps {
            assert!(r.p_value >= (p + 0.001).min(1.0));
        }
        assert_eq!(r.reject, r.p_value <= 0.05);
    }
}

#[test]
fn single_point_grid_is_the_plain_permutation_test() {
    let s = normal_sample(20, 25, 0.0, 12);
    let perm = permutation_test_l(&s, Theta::NORMAL, &ResamplingPlan::new(Method::Permutation, 500, 4), None)
        .unwrap();
    let plan = ResamplingPlan::new(Method::CiPermutation, 500, 4).with_grid(1, 0.999);
    let ci = ci_permutation_test(&s, StatisticKind::LTheta, Theta::NORMAL, &plan).unwrap();
    assert_eq!(ci.tau, perm.tau);
    assert_eq!(ci.p_value, (perm.p_value + 0.001).min(1.0));
}

#[test]
fn bootstrap_reference_is_centred() {
    let s = normal_sample(60, 60, 0.0, 14);
    let b = 2000;
    let r = bootstrap_test_l(&s, Theta::NORMAL, &ResamplingPlan::new(Method::Bootstrap, b, 15)).unwrap();
    let d = &r.diagnostics;
    assert!(d.mean.abs() <= 3.0 * d.sd / (b as f64).sqrt(), "mean {} sd {}", d.mean, d.sd);
    assert_eq!(d.redraws, 0);
}

#[test]
fn bootstrap_redraws_empty_groups() {
    // with one treated unit, about a third of the draws miss it
    let s = ExperimentSample::from_groups(&[1.0], &[0.0, 0.5, -0.5]).unwrap();
    let r = bootstrap_test_l(&s, Theta::NORMAL, &ResamplingPlan::new(Method::Bootstrap, 300, 2)).unwrap();
    assert!(r.diagnostics.redraws > 0);
    assert_eq!(r.replicates, 300);
}

#[test]
fn reports_are_identical_across_thread_counts() {
    let s = normal_sample(40, 50, 0.3, 16);
    let cov = gen_cov(&DgpConfig::cov(120, Variation::ALL[3], 17)).unwrap();
    let run = || {
        let mut out = Vec::new();
        for (kind, method) in [
            (StatisticKind::LTheta, Method::Bootstrap),
            (StatisticKind::Hkz, Method::Bootstrap),
            (StatisticKind::LTheta, Method::Permutation),
            (StatisticKind::Hkz, Method::Permutation),
            (StatisticKind::LTheta, Method::CiPermutation),
        ] {
            out.push(run_test(&s, kind, Theta::CAUCHY, &ResamplingPlan::new(method, 300, 77)).unwrap());
        }
        let plan = ResamplingPlan::new(Method::CovariatePermutation, 200, 78);
        out.push(run_test(&cov, StatisticKind::DTheta, Theta::NORMAL, &plan).unwrap());
        out
    };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(run);
    for (a, b) in one.iter().zip(&four) {
        assert_eq!(a.observed.to_bits(), b.observed.to_bits());
        assert_eq!(a.p_value.to_bits(), b.p_value.to_bits());
        assert_eq!(a.diagnostics.mean.to_bits(), b.diagnostics.mean.to_bits());
        assert_eq!(a.diagnostics.sd.to_bits(), b.diagnostics.sd.to_bits());
        assert_eq!(a.ecp, b.ecp);
    }
}

#[test]
fn zero_effect_coefficients_make_a_pure_label_permutation() {
    // outcomes depend on X only, identically in both groups, with no noise:
    // the treatment coefficients vanish and every replicate residual is 0
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let n = 60;
    let x: Vec<f64> = (0..n * 2).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..n).map(|i| 1.0 + x[2 * i] - 0.5 * x[2 * i + 1]).collect();
    let d: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let s = ExperimentSample::with_covariates(y, d, Covariates::from_row_major(n, 2, x).unwrap()).unwrap();
    let fit = linear_interaction_fit(&s).unwrap();
    assert!(fit.treatment_shift().abs() < 1e-12);
    let r = covariate_permutation_test(&s, Theta::NORMAL, &ResamplingPlan::new(Method::CovariatePermutation, 100, 1))
        .unwrap();
    assert!(r.observed.abs() < 1e-12);
    assert!(r.diagnostics.max.abs() < 1e-12);
    assert!(!r.reject);
}

#[test]
fn covariate_test_rejects_wrong_inputs() {
    let s = normal_sample(10, 10, 0.0, 3);
    let plan = ResamplingPlan::new(Method::CovariatePermutation, 100, 1);
    assert!(matches!(covariate_permutation_test(&s, Theta::NORMAL, &plan), Err(Error::Precondition(_))));
    let plan = ResamplingPlan::new(Method::Permutation, 100, 1);
    assert!(run_test(&s, StatisticKind::DTheta, Theta::NORMAL, &plan).is_err());
    let plan = ResamplingPlan::new(Method::Permutation, 50, 1);
    assert!(run_test(&s, StatisticKind::LTheta, Theta::NORMAL, &plan).is_err());
}

#[test]
fn welch_interval_covers_the_effect() {
    let reps = 2000;
    let covered = (0..reps)
        .filter(|&r| {
            let s = normal_sample(5000, 5000, 1.0, 1000 + r);
            let (lo, hi) = welch_ci(&s, 0.999).unwrap();
            lo <= 1.0 && 1.0 <= hi
        })
        .count();
    assert!(covered as f64 >= 0.997 * reps as f64, "covered {covered}");
}

#[test]
fn unit_shift_absorbs_effects_linear_in_covariates() {
    let none = simulation::generate(&DgpConfig::cov(300, Variation { systematic: false, idiosyncratic: true }, 41)).unwrap();
    let x = none.covariates().unwrap().clone();
    // add a treatment effect that is exactly linear in the covariates
    let y: Vec<f64> = (0..none.len())
        .map(|i| {
            let r = x.row(i);
            none.outcomes()[i] + f64::from(u8::from(none.treatments()[i])) * (-0.1 + 0.1 * r[0] + 0.4 * r[2])
        })
        .collect();
    let systematic = ExperimentSample::with_covariates(y, none.treatments().to_vec(), x).unwrap();

    let mut plan = ResamplingPlan::new(Method::CovariatePermutation, 400, 9);
    plan.shift_mode = ShiftMode::UnitSpecific;
    let a = covariate_permutation_test(&none, Theta::NORMAL, &plan).unwrap();
    let b = covariate_permutation_test(&systematic, Theta::NORMAL, &plan).unwrap();
    assert!((a.observed - b.observed).abs() < 1e-12);
    assert!((a.diagnostics.mean - b.diagnostics.mean).abs() < 1e-12);
    assert_eq!(a.p_value, b.p_value);
}
