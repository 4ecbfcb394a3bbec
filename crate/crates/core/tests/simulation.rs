use hetfx::simulation::generate;
use hetfx::*;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

#[test]
fn constant_effect_without_heterogeneity() {
    for family in Family::NO_COVARIATES {
        let po = draw_nocov(&DgpConfig::nocov(family, 500, 0.0, 3)).unwrap();
        assert!(po.effects().iter().all(|t| (t - 1.0).abs() < 1e-12), "{family:?}");
        assert_eq!(po.treatments.iter().filter(|&&d| d).count(), 250);
    }
}

#[test]
fn heterogeneity_scales_treated_variance() {
    let s = gen_nocov(&DgpConfig::nocov(Family::Normal, 200_000, 0.5, 4)).unwrap();
    let ratio = var(&s.group(true)) / var(&s.group(false));
    assert!((ratio - 2.25).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn generators_are_seeded() {
    for cfg in [DgpConfig::nocov(Family::T5, 40, 0.2, 9), DgpConfig::cov(40, Variation::ALL[3], 9)] {
        let a = generate(&cfg).unwrap();
        assert_eq!(a, generate(&cfg).unwrap());
        assert_ne!(a, generate(&cfg.with_seed(10)).unwrap());
    }
}

#[test]
fn generator_errors() {
    assert!(gen_nocov(&DgpConfig::nocov(Family::CovariateLinear, 40, 0.0, 1)).is_err());
    assert!(gen_cov(&DgpConfig::nocov(Family::Normal, 40, 0.0, 1)).is_err());
    let mut cfg = DgpConfig::cov(40, Variation::default(), 1);
    cfg.variation = None;
    assert!(matches!(gen_cov(&cfg), Err(Error::InvalidArgument(_))));
    assert!(gen_nocov(&DgpConfig::nocov(Family::Normal, 1, 0.0, 1)).is_err());
}

#[test]
fn covariate_design_effects() {
    let none = draw_cov(&DgpConfig::cov(300, Variation::ALL[0], 5)).unwrap();
    assert!(none.effects().iter().all(|t| (t - 0.3).abs() < 1e-12));
    assert_eq!(none.treatments.iter().filter(|&&d| d).count(), 180);

    let sys = draw_cov(&DgpConfig::cov(300, Variation::ALL[2], 5)).unwrap();
    let x = sys.covariates.as_ref().unwrap();
    for (i, t) in sys.effects().iter().enumerate() {
        let r = x.row(i);
        assert!((t - (0.2 + 0.1 * r[0] + 0.4 * r[2])).abs() < 1e-12);
        assert!(r[1] == 0.0 || r[1] == 1.0);
        assert!(r[2] == 0.0 || r[2] == 1.0);
    }

    // idiosyncratic noise has sd 0.2 around the constant effect
    let idio = draw_cov(&DgpConfig::cov(100_000, Variation::ALL[1], 5)).unwrap();
    let e: Vec<f64> = idio.effects().iter().map(|t| t - 0.3).collect();
    assert!(mean(&e).abs() < 0.005);
    assert!((var(&e).sqrt() - 0.2).abs() < 0.005);
}

#[test]
fn covariate_design_control_mean() {
    let po = draw_cov(&DgpConfig::cov(1_000_000, Variation::ALL[0], 6)).unwrap();
    let m = mean(&po.y0);
    assert!((m - 0.35).abs() < 0.01, "mean {m}");
}

fn smoke_tests() -> Vec<TestSpec> {
    vec![
        TestSpec::new(StatisticKind::LTheta, Method::Permutation, 100),
        TestSpec::new(StatisticKind::Hkz, Method::Bootstrap, 100),
        TestSpec::new(StatisticKind::TStat, Method::Permutation, 100),
    ]
}

#[test]
fn smoke_grid_reports_standard_errors() {
    let grid = [DgpConfig::nocov(Family::Normal, 50, 0.0, 0), DgpConfig::nocov(Family::Exponential, 50, 0.5, 0)];
    let res = run_size_power(&grid, &smoke_tests(), 100, 42).unwrap();
    assert_eq!(res.cells.len(), 6);
    for c in &res.cells {
        assert_eq!(c.replications + c.errors, 100);
        let p = c.rejection_rate;
        assert_eq!(p, c.rejections as f64 / c.replications as f64);
        assert!((c.mc_se - (p * (1.0 - p) / c.replications as f64).sqrt()).abs() < 1e-15);
    }
    // the L and HKZ tests never fail on continuous outcomes
    assert!(res.cells.iter().filter(|c| !c.test.starts_with("tstat")).all(|c| c.errors == 0));
}

#[test]
fn results_are_reproducible_across_thread_counts() {
    let grid = [DgpConfig::nocov(Family::Lognormal, 40, 0.2, 0), DgpConfig::cov(60, Variation::ALL[1], 0)];
    let tests = vec![TestSpec::new(StatisticKind::LTheta, Method::Permutation, 100)];
    let cov_tests = vec![TestSpec::new(StatisticKind::DTheta, Method::CovariatePermutation, 100)];
    let run = || {
        let a = run_size_power(&grid[..1], &tests, 100, 7).unwrap();
        let b = run_size_power(&grid[1..], &cov_tests, 100, 7).unwrap();
        let c = size_adjusted_power(&grid[..1], &tests, 200, 7).unwrap();
        [a, b, c].map(|r| r.cells)
    };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(run);
    assert_eq!(one, three);
}

#[test]
fn size_adjustment_holds_size_on_fresh_null_draws() {
    let tests = vec![
        TestSpec::new(StatisticKind::LTheta, Method::Permutation, 100),
        TestSpec::new(StatisticKind::Hkz, Method::Permutation, 100),
    ];
    let grid = [DgpConfig::nocov(Family::T5, 60, 0.0, 0)];
    let res = size_adjusted_power(&grid, &tests, 2000, 11).unwrap();
    for c in &res.cells {
        assert!((c.rejection_rate - 0.05).abs() <= 0.02, "{}: {}", c.test, c.rejection_rate);
    }
}

#[test]
fn power_grows_with_heterogeneity() {
    let tests = vec![TestSpec::new(StatisticKind::LTheta, Method::Permutation, 100)];
    for n in [100, 400] {
        let grid = [DgpConfig::nocov(Family::Normal, n, 0.2, 0), DgpConfig::nocov(Family::Normal, n, 0.5, 0)];
        let res = size_adjusted_power(&grid, &tests, 2000, 13).unwrap();
        let (lo, hi) = (&res.cells[0], &res.cells[1]);
        let se = (lo.mc_se.powi(2) + hi.mc_se.powi(2)).sqrt();
        assert!(hi.rejection_rate - lo.rejection_rate > 2.0 * se, "n={n}: {} vs {}", lo.rejection_rate, hi.rejection_rate);
    }
}
