use hetfx::stats::normal_cdf;
use hetfx::*;
use proptest::prelude::*;

fn brute_l(t: &[f64], c: &[f64], theta: Theta) -> f64 {
    let mean_k = |v: &[f64]| {
        let mut s = 0.0;
        for &a in v {
            for &b in v {
                s += theta.kernel(a - b);
            }
        }
        s / (v.len() * v.len()) as f64
    };
    mean_k(t) - mean_k(c)
}

/// Pair and triple averages by explicit enumeration of `j < l` and
/// `j < l < k`.
fn brute_r(v: &[f64], theta: Theta) -> (f64, f64) {
    let m = v.len();
    let (mut p, mut np, mut tr, mut nt) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..m {
        for l in j + 1..m {
            p += theta.kernel(v[j] - v[l]);
            np += 1.0;
            for k in l + 1..m {
                tr += theta.kernel(v[j] - v[l]) * theta.kernel(v[j] - v[k]);
                nt += 1.0;
            }
        }
    }
    (p / np, tr / nt)
}

fn sample_strategy(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-5.0f64..5.0, 1..max),
        prop::collection::vec(-5.0f64..5.0, 1..max),
    )
}

fn theta_strategy() -> impl Strategy<Value = Theta> {
    prop_oneof![Just(Theta::NORMAL), Just(Theta::CAUCHY), (0.1f64..=2.0).prop_map(|t| Theta::new(t).unwrap())]
}

#[test]
fn ecf_of_three_points() {
    let v = ecf(&[0.0, 1.0, 2.0], 1.0).unwrap();
    assert!((v.re - 0.374_718_489_773_665_8).abs() < 1e-15);
    assert!((v.im - 0.583_589_470_544_526_1).abs() < 1e-15);
    let s = ecf(&[1.3, -1.3], 0.7).unwrap();
    assert!((s.re - (0.7f64 * 1.3).cos()).abs() < 1e-15 && s.im.abs() < 1e-15);
    assert!(ecf(&[], 1.0).is_err());
}

#[test]
fn statistic_worked_examples() {
    let s = ExperimentSample::from_groups(&[0.0, 1.0], &[0.0, 2.0]).unwrap();
    assert!((l_theta_stat(&s, Theta::NORMAL) - 0.174_781_901_141_354_07).abs() < 1e-15);
    let single = ExperimentSample::from_groups(&[3.0], &[-8.0]).unwrap();
    assert_eq!(l_theta_stat(&single, Theta::CAUCHY), 0.0);

    let z = ExperimentSample::from_groups(&[0.0], &[0.0]).unwrap();
    assert!((hkz_stat(&z, 1.0, Theta::NORMAL) - 1.264_241_117_657_115_4).abs() < 1e-15);
    let aligned = ExperimentSample::from_groups(&[2.7], &[0.0]).unwrap();
    assert_eq!(hkz_stat(&aligned, 2.7, Theta::NORMAL), 0.0);

    let r = ResidualizedSample::new(vec![0.0, 1.0], vec![true, false], ResidualMethod::GroupMean).unwrap();
    assert!((d_theta_stat(&r, Theta::NORMAL) - 1.264_241_117_657_115_4).abs() < 1e-15);

    let s = ExperimentSample::from_groups(&[2.0, 4.0], &[1.0, 1.0, 1.0]).unwrap();
    assert_eq!(diff_in_means(&s), 2.0);
}

#[test]
fn zeta_components_on_small_groups() {
    let s = ExperimentSample::from_groups(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0]).unwrap();
    let v = zeta_hat(&s, Theta::NORMAL).unwrap();
    assert!((v.r2_treated - 0.251_358_173_743_872_94).abs() < 1e-15);
    assert!((v.r3_treated - 0.006_737_946_999_085_467).abs() < 1e-15);
    assert!((v.zeta_hat - -0.056_442_984_508_769_55).abs() < 1e-15);

    let dup = ExperimentSample::from_groups(&[0.0, 0.0, 1.0, 1.0, 2.0, 2.0], &[5.0, 1.0, 2.0]).unwrap();
    let v = zeta_hat(&dup, Theta::NORMAL).unwrap();
    assert!((v.r2_treated - 0.401_086_538_995_098_35).abs() < 1e-15);
    assert!((v.r3_treated - 0.105_203_233_832_908_86).abs() < 1e-15);
}

#[test]
fn constant_outcomes_have_zero_variance() {
    let s = ExperimentSample::from_groups(&[4.0; 5], &[4.0; 6]).unwrap();
    let v = zeta_hat(&s, Theta::NORMAL).unwrap();
    assert_eq!((v.r2_treated, v.r3_treated, v.zeta_hat), (1.0, 1.0, 0.0));
    assert!(matches!(t_stat_test(&s, Theta::NORMAL, 0.0), Err(Error::DegenerateVariance(_))));
}

#[test]
fn normal_tail_at_critical_value() {
    assert!((stats::normal_two_sided_p(1.959_964) - 0.05).abs() < 1e-6);
    assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
}

#[test]
fn quadrature_examples() {
    let quad = QuadratureConfig::default();
    let s = ExperimentSample::from_groups(&[0.0, 1.0], &[0.0, 2.0]).unwrap();
    let l2 = l_quadrature_oracle(&s, Theta::NORMAL, quad).unwrap();
    assert!((l2 - 0.174_781_901_141_354_07).abs() < 1e-6);
    // closed form (e^-1 - e^-2) / 2 for the Cauchy weight
    let l1 = l_quadrature_oracle(&s, Theta::CAUCHY, quad).unwrap();
    assert!((l1 - 0.116_272_078_967_414_81).abs() < 1e-6);

    let same = ExperimentSample::from_groups(&[0.3, 1.1, -2.0], &[1.1, -2.0, 0.3]).unwrap();
    for th in [Theta::NORMAL, Theta::CAUCHY] {
        assert!(l_quadrature_oracle(&same, th, quad).unwrap().abs() < 1e-9);
    }
    assert!(l_quadrature_oracle(&s, Theta::new(0.5).unwrap(), quad).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn l_matches_unrestricted_double_sum((t, c) in sample_strategy(12), theta in theta_strategy()) {
        let s = ExperimentSample::from_groups(&t, &c).unwrap();
        prop_assert!((l_theta_stat(&s, theta) - brute_l(&t, &c, theta)).abs() < 1e-12);
    }

    #[test]
    fn l_is_free_of_group_locations(
        (t, c) in sample_strategy(30),
        c1 in -50.0f64..50.0,
        c0 in -50.0f64..50.0,
        theta in theta_strategy(),
    ) {
        let s = ExperimentSample::from_groups(&t, &c).unwrap();
        let t2: Vec<f64> = t.iter().map(|v| v + c1).collect();
        let c2: Vec<f64> = c.iter().map(|v| v + c0).collect();
        let s2 = ExperimentSample::from_groups(&t2, &c2).unwrap();
        prop_assert!((l_theta_stat(&s, theta) - l_theta_stat(&s2, theta)).abs() <= 1e-12);
    }

    #[test]
    fn label_swap_negates_l((t, c) in sample_strategy(30), theta in theta_strategy()) {
        let s = ExperimentSample::from_groups(&t, &c).unwrap();
        prop_assert_eq!(l_theta_stat(&s.swap_labels(), theta), -l_theta_stat(&s, theta));
        prop_assert!(l_theta_stat(&s, theta).abs() < 1.0);
    }

    #[test]
    fn hkz_with_mean_difference_is_free_of_group_locations(
        (t, c) in sample_strategy(30),
        c1 in -20.0f64..20.0,
        c0 in -20.0f64..20.0,
    ) {
        let s = ExperimentSample::from_groups(&t, &c).unwrap();
        let t2: Vec<f64> = t.iter().map(|v| v + c1).collect();
        let c2: Vec<f64> = c.iter().map(|v| v + c0).collect();
        let s2 = ExperimentSample::from_groups(&t2, &c2).unwrap();
        let a = hkz_stat(&s, diff_in_means(&s), Theta::NORMAL);
        let b = hkz_stat(&s2, diff_in_means(&s2), Theta::NORMAL);
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn residual_distance_is_nonnegative((t, c) in sample_strategy(30), theta in theta_strategy()) {
        let n1 = t.len();
        let mut res = t.clone();
        res.extend(&c);
        let d: Vec<bool> = (0..res.len()).map(|i| i < n1).collect();
        let r = ResidualizedSample::new(res, d, ResidualMethod::GroupMean).unwrap();
        let v = d_theta_stat(&r, theta);
        prop_assert!(v >= -1e-12 && v < 4.0);
    }

    #[test]
    fn residual_distance_vanishes_on_equal_multisets(v in prop::collection::vec(-5.0f64..5.0, 1..20)) {
        let mut res = v.clone();
        res.extend(v.iter().rev());
        let d: Vec<bool> = (0..res.len()).map(|i| i < v.len()).collect();
        let r = ResidualizedSample::new(res, d, ResidualMethod::GroupMean).unwrap();
        prop_assert!(d_theta_stat(&r, Theta::NORMAL).abs() <= 1e-12);
    }

    #[test]
    fn ecf_modulus_is_bounded(v in prop::collection::vec(-100.0f64..100.0, 1..40), t in -10.0f64..10.0) {
        let z = ecf(&v, t).unwrap();
        prop_assert!(z.re.abs() <= 1.0 + 1e-15 && z.im.abs() <= 1.0 + 1e-15);
        prop_assert!(z.modulus_sq() <= 1.0 + 1e-14);
    }

    #[test]
    fn zeta_components_match_enumeration(
        t in prop::collection::vec(-3.0f64..3.0, 3..14),
        c in prop::collection::vec(-3.0f64..3.0, 3..14),
        theta in theta_strategy(),
    ) {
        let s = ExperimentSample::from_groups(&t, &c).unwrap();
        let v = zeta_hat(&s, theta).unwrap();
        let (r2t, r3t) = brute_r(&t, theta);
        let (r2c, r3c) = brute_r(&c, theta);
        prop_assert!((v.r2_treated - r2t).abs() <= 1e-12);
        prop_assert!((v.r3_treated - r3t).abs() <= 1e-12);
        prop_assert!((v.r2_control - r2c).abs() <= 1e-12);
        prop_assert!((v.r3_control - r3c).abs() <= 1e-12);
        for r in [v.r2_treated, v.r3_treated, v.r2_control, v.r3_control] {
            prop_assert!(r > 0.0 && r <= 1.0);
        }
    }

    #[test]
    fn t_stat_is_zero_at_its_own_value(t in prop::collection::vec(-3.0f64..3.0, 8..20)) {
        let mut c = t.clone();
        c.push(9.0);
        c.push(9.5);
        let s = ExperimentSample::from_groups(&t, &c).unwrap();
        if let Ok(r) = t_stat_test(&s, Theta::NORMAL, l_theta_stat(&s, Theta::NORMAL)) {
            prop_assert_eq!(r.z, 0.0);
            prop_assert_eq!(r.p_value, 1.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn quadrature_matches_closed_form(
        (t, c) in (prop::collection::vec(-4.0f64..4.0, 1..60), prop::collection::vec(-4.0f64..4.0, 1..60)),
    ) {
        let s = ExperimentSample::from_groups(&t, &c).unwrap();
        for theta in [Theta::NORMAL, Theta::CAUCHY] {
            let q = l_quadrature_oracle(&s, theta, QuadratureConfig::default()).unwrap();
            prop_assert!((q - l_theta_stat(&s, theta)).abs() <= 1e-6);
        }
    }

    #[test]
    fn quadrature_refinement_is_stable((t, c) in sample_strategy(40)) {
        let s = ExperimentSample::from_groups(&t, &c).unwrap();
        let coarse = l_quadrature_oracle(&s, Theta::NORMAL, QuadratureConfig { nodes: 256, ..Default::default() }).unwrap();
        let fine = l_quadrature_oracle(&s, Theta::NORMAL, QuadratureConfig { nodes: 512, ..Default::default() }).unwrap();
        prop_assert!((coarse - fine).abs() <= 1e-8);
    }
}
