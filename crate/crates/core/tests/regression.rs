use hetfx::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_design(n: usize, q: usize, seed: u64) -> (Vec<f64>, Vec<bool>, Covariates) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n * q).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mut d: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
    d[1] = true;
    (y, d, Covariates::from_row_major(n, q, x).unwrap())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn residuals_are_orthogonal_to_the_design() {
    let (y, d, x) = random_design(80, 3, 1);
    let s = ExperimentSample::with_covariates(y.clone(), d.clone(), x.clone()).unwrap();
    let fit = linear_interaction_fit(&s).unwrap();
    let norm_y = dot(&y, &y).sqrt();
    let ones = vec![1.0; 80];
    let dv: Vec<f64> = d.iter().map(|&b| f64::from(u8::from(b))).collect();
    assert!(dot(&fit.residuals, &ones).abs() <= 1e-8 * norm_y);
    assert!(dot(&fit.residuals, &dv).abs() <= 1e-8 * norm_y);
    for j in 0..3 {
        let col: Vec<f64> = x.column(j).collect();
        let inter: Vec<f64> = col.iter().zip(&dv).map(|(a, b)| a * b).collect();
        assert!(dot(&fit.residuals, &col).abs() <= 1e-8 * norm_y);
        assert!(dot(&fit.residuals, &inter).abs() <= 1e-8 * norm_y);
    }
    for (r, (yi, fi)) in fit.residuals.iter().zip(y.iter().zip(&fit.fitted)) {
        assert_eq!(*r, yi - fi);
    }
}

#[test]
fn residual_group_means_vanish() {
    let (y, d, x) = random_design(60, 2, 2);
    let s = ExperimentSample::with_covariates(y, d, x).unwrap();
    let r = residualize_linear(&s).unwrap();
    let (t, c) = r.groups();
    assert!(t.iter().sum::<f64>().abs() / (t.len() as f64) < 1e-10);
    assert!(c.iter().sum::<f64>().abs() / (c.len() as f64) < 1e-10);
}

#[test]
fn covariate_design_without_noise_has_zero_residuals() {
    // no idiosyncratic term and u = 0: outcomes are linear in (1, D, X, DX)
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 50;
    let x: Vec<f64> = (0..n * 4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let d: Vec<bool> = (0..n).map(|i| i % 5 < 3).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let r = &x[4 * i..4 * i + 4];
            let y0 = 0.3 + 0.2 * r[0] + 0.3 * r[1] - 0.4 * r[2] + 0.8 * r[3];
            if d[i] { y0 + 0.2 + 0.1 * r[0] + 0.4 * r[2] } else { y0 }
        })
        .collect();
    let s = ExperimentSample::with_covariates(y, d, Covariates::from_row_major(n, 4, x).unwrap()).unwrap();
    let r = residualize_linear(&s).unwrap();
    assert!(r.residuals().iter().all(|e| e.abs() < 1e-10));
}

#[test]
fn affine_reparameterization_keeps_residuals() {
    let (y, d, x) = random_design(70, 2, 3);
    let rows: Vec<Vec<f64>> = (0..70)
        .map(|i| {
            let r = x.row(i);
            vec![2.0 * r[0] - r[1] + 5.0, 0.5 * r[1] + 0.1 * r[0] - 3.0]
        })
        .collect();
    let x2 = Covariates::from_rows(&rows).unwrap();
    let a = residualize_linear(&ExperimentSample::with_covariates(y.clone(), d.clone(), x).unwrap()).unwrap();
    let b = residualize_linear(&ExperimentSample::with_covariates(y, d, x2).unwrap()).unwrap();
    for (u, v) in a.residuals().iter().zip(b.residuals()) {
        assert!((u - v).abs() <= 1e-8 * u.abs().max(1.0));
    }
}

#[test]
fn residual_statistic_absorbs_linear_functions_of_covariates() {
    let (y, d, x) = random_design(90, 3, 4);
    let shifted: Vec<f64> = (0..90).map(|i| y[i] + 1.5 - 2.0 * x.row(i)[0] + 0.7 * x.row(i)[2]).collect();
    let a = residualize_linear(&ExperimentSample::with_covariates(y, d.clone(), x.clone()).unwrap()).unwrap();
    let b = residualize_linear(&ExperimentSample::with_covariates(shifted, d, x).unwrap()).unwrap();
    let da = d_theta_stat(&a, Theta::NORMAL);
    let db = d_theta_stat(&b, Theta::NORMAL);
    assert!((da - db).abs() <= 1e-8);
}

#[test]
fn nw_examples() {
    let x = Covariates::from_row_major(1, 1, vec![0.4]).unwrap();
    let fit = nw_fit(&x, &[7.0], &NWConfig::default()).unwrap();
    assert_eq!(fit.predict(&[2.0]), 7.0);

    // y = x on a fine grid, interior points
    let n = 400;
    let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let x = Covariates::from_row_major(n, 1, grid.clone()).unwrap();
    let h = bandwidth_rule(&x).unwrap();
    let fit = nw_fit(&x, &grid, &NWConfig::default()).unwrap();
    for &p in grid.iter().filter(|&&p| (0.1..=0.9).contains(&p)) {
        assert!((fit.predict(&[p]) - p).abs() <= 5.0 * h);
    }
}

#[test]
fn nw_weights_are_a_partition_of_unity() {
    let (_, _, x) = random_design(40, 2, 6);
    for kernel in [NwKernel::Gaussian, NwKernel::Epanechnikov] {
        let cfg = NWConfig { kernel, ..Default::default() };
        // predicting a constant recovers it exactly wherever the weights exist
        let fit = nw_fit(&x, &[3.25; 40], &cfg).unwrap();
        for p in [[0.0, 0.0], [1.5, -1.0], [-1.9, 1.9]] {
            assert!((fit.predict(&p) - 3.25).abs() < 1e-12);
        }
    }
}

#[test]
fn bandwidth_scales_with_data_and_size() {
    let v: Vec<f64> = (0..100).map(|i| ((i * 37) % 101) as f64 / 10.0).collect();
    let h = bandwidth_rule(&Covariates::from_row_major(100, 1, v.clone()).unwrap()).unwrap();
    let scaled: Vec<f64> = v.iter().map(|a| a * 3.0).collect();
    let h3 = bandwidth_rule(&Covariates::from_row_major(100, 1, scaled).unwrap()).unwrap();
    assert!((h3 - 3.0 * h).abs() < 1e-12);
    let four: Vec<f64> = v.iter().cycle().take(400).copied().collect();
    let h4 = bandwidth_rule(&Covariates::from_row_major(400, 1, four).unwrap()).unwrap();
    // sd changes slightly with the n-1 divisor; compare with that removed
    let sd = |w: &[f64]| {
        let m = w.iter().sum::<f64>() / w.len() as f64;
        (w.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (w.len() - 1) as f64).sqrt()
    };
    let v4: Vec<f64> = v.iter().cycle().take(400).copied().collect();
    let ratio = (h4 / sd(&v4)) / (h / sd(&v));
    assert!((ratio - 4f64.powf(-0.2)).abs() < 1e-12);
}

#[test]
fn bandwidth_at_unit_scale() {
    let v: Vec<f64> = (0..100).map(|i| ((i * 41) % 97) as f64).collect();
    let m = v.iter().sum::<f64>() / 100.0;
    let sd = (v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / 99.0).sqrt();
    let z: Vec<f64> = v.iter().map(|a| (a - m) / sd).collect();
    let h = bandwidth_rule(&Covariates::from_row_major(100, 1, z).unwrap()).unwrap();
    assert!((h - 1.06 * 100f64.powf(-0.2)).abs() < 1e-12);
    assert!((h - 0.4219).abs() < 1e-4);
}

#[test]
fn nw_residuals_by_group() {
    let (y, d, x) = random_design(60, 2, 7);
    let constant: Vec<f64> = d.iter().map(|&b| if b { 2.0 } else { -1.0 }).collect();
    let s = ExperimentSample::with_covariates(constant, d.clone(), x.clone()).unwrap();
    let r = residualize_nw(&s, &NWConfig::default()).unwrap();
    assert!(r.residuals().iter().all(|e| e.abs() < 1e-12));

    // reversing unit order moves each residual with its unit
    let s = ExperimentSample::with_covariates(y.clone(), d.clone(), x.clone()).unwrap();
    let fwd = residualize_nw(&s, &NWConfig::default()).unwrap();
    let rev_rows: Vec<Vec<f64>> = (0..60).rev().map(|i| x.row(i).to_vec()).collect();
    let rev = ExperimentSample::with_covariates(
        y.iter().rev().copied().collect(),
        d.iter().rev().copied().collect(),
        Covariates::from_rows(&rev_rows).unwrap(),
    )
    .unwrap();
    let back = residualize_nw(&rev, &NWConfig::default()).unwrap();
    for i in 0..60 {
        assert!((fwd.residuals()[i] - back.residuals()[59 - i]).abs() < 1e-12);
    }

    let tiny = ExperimentSample::with_covariates(
        y[..8].to_vec(),
        (0..8).map(|i| i < 3).collect(),
        Covariates::from_row_major(8, 2, x.as_slice()[..16].to_vec()).unwrap(),
    )
    .unwrap();
    assert!(matches!(residualize_nw(&tiny, &NWConfig::default()), Err(Error::Precondition(_))));
}

#[test]
fn nw_residuals_shrink_with_sample_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 5000;
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let d: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let y: Vec<f64> = (0..n).map(|i| if d[i] { x[i].sin() } else { 0.5 * x[i] * x[i] }).collect();
    let s = ExperimentSample::with_covariates(y, d, Covariates::from_row_major(n, 1, x).unwrap()).unwrap();
    let cfg = NWConfig { bandwidth: Bandwidth::Fixed(0.05), ..Default::default() };
    let r = residualize_nw(&s, &cfg).unwrap();
    let mse = r.residuals().iter().map(|e| e * e).sum::<f64>() / n as f64;
    assert!(mse < 1e-3, "mse {mse}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn intercept_and_treatment_design_is_group_demeaning(
        t in prop::collection::vec(-10.0f64..10.0, 1..20),
        c in prop::collection::vec(-10.0f64..10.0, 1..20),
    ) {
        let s = ExperimentSample::from_groups(&t, &c).unwrap();
        let r = residualize_linear(&s).unwrap();
        let mt = t.iter().sum::<f64>() / t.len() as f64;
        let mc = c.iter().sum::<f64>() / c.len() as f64;
        let expect: Vec<f64> = t.iter().map(|v| v - mt).chain(c.iter().map(|v| v - mc)).collect();
        prop_assert_eq!(r.residuals(), &expect[..]);
    }
}
