use ltv_bootstrap::{
    bootstrap_ltv, difference_test, extrapolate_ltv, fit_loglog, read_daily_csv, welch_t_test, write_daily_csv,
    BootstrapConfig, DailySeries, ExtrapolationConfig, LogLogFit, LtvDistribution, UserCumulative,
};
use proptest::prelude::*;

fn series_strategy() -> impl Strategy<Value = DailySeries> {
    (3usize..20, 0.01f64..10.0, -1.0f64..0.5, 1u32..5)
        .prop_flat_map(|(n, scale, slope, start)| {
            (
                Just(n),
                Just(scale),
                Just(slope),
                Just(start),
                prop::collection::vec(-0.3f64..0.3, n),
            )
        })
        .prop_map(|(n, scale, slope, start, noise)| {
            let days: Vec<u32> = (0..n as u32).map(|i| start + i).collect();
            let values = days
                .iter()
                .zip(&noise)
                .map(|(&d, e)| scale * f64::from(d).powf(slope) * e.exp())
                .collect();
            DailySeries::new("g", days, values, None).unwrap()
        })
}

fn scaled(series: &DailySeries, k: f64) -> DailySeries {
    series
        .with_values(series.values().iter().map(|v| v * k).collect())
        .unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn fit_is_scale_equivariant(series in series_strategy(), k in 0.01f64..100.0) {
        let a = fit_loglog(&series).unwrap();
        let b = fit_loglog(&scaled(&series, k)).unwrap();
        prop_assert!((b.beta0() - a.beta0() - k.ln()).abs() < 1e-9);
        prop_assert!((b.beta1() - a.beta1()).abs() < 1e-9);
        let cfg = ExtrapolationConfig::with_horizon(120);
        let la = extrapolate_ltv(&a, None, &cfg).unwrap();
        let lb = extrapolate_ltv(&b, None, &cfg).unwrap();
        prop_assert!(close(lb, k * la, 1e-9));
    }

    #[test]
    fn residuals_are_centred_and_projection_idempotent(series in series_strategy()) {
        let fit = fit_loglog(&series).unwrap();
        prop_assert!(fit.residuals().iter().sum::<f64>().abs() < 1e-9);
        prop_assert!(fit.sigma2() >= 0.0);
        let again = fit_loglog(&series.with_values(fit.fitted_log().iter().map(|f| f.exp()).collect()).unwrap()).unwrap();
        prop_assert!((again.beta0() - fit.beta0()).abs() < 1e-9);
        prop_assert!((again.beta1() - fit.beta1()).abs() < 1e-9);
    }

    #[test]
    fn exact_power_law_has_zero_residuals(c in 0.001f64..1000.0, b in -2.0f64..2.0, n in 3u32..40) {
        let values = (1..=n).map(|d| c * f64::from(d).powf(b)).collect();
        let fit = fit_loglog(&DailySeries::consecutive("g", values).unwrap()).unwrap();
        prop_assert!((fit.beta0() - c.ln()).abs() < 1e-10);
        prop_assert!((fit.beta1() - b).abs() < 1e-10);
        prop_assert!(fit.residuals().iter().all(|r| r.abs() < 1e-10));
    }

    #[test]
    fn lifetime_grows_with_horizon(b0 in -5.0f64..2.0, b1 in -2.0f64..1.0, h in 1u32..400) {
        let fit = LogLogFit::from_coefficients(b0, b1);
        let short = extrapolate_ltv(&fit, None, &ExtrapolationConfig::with_horizon(h)).unwrap();
        let long = extrapolate_ltv(&fit, None, &ExtrapolationConfig::with_horizon(h + 1)).unwrap();
        prop_assert!(long >= short);
    }

    #[test]
    fn prediction_increases_iff_positive_slope(b1 in -1.0f64..1.0, d in 1u32..1000) {
        let fit = LogLogFit::from_coefficients(0.3, b1);
        let now = fit.predict_log(d, None).unwrap();
        let next = fit.predict_log(d + 1, None).unwrap();
        prop_assert_eq!(next > now, b1 > 0.0);
    }

    #[test]
    fn csv_round_trip(a in series_strategy(), b in series_strategy()) {
        let groups = vec![a.with_label("alpha"), b.with_label("beta")];
        let mut buf = Vec::new();
        write_daily_csv(&mut buf, &groups).unwrap();
        prop_assert_eq!(read_daily_csv(buf.as_slice(), None).unwrap(), groups);
    }

    #[test]
    fn difference_is_antisymmetric(
        samples in prop::collection::vec((0.1f64..10.0, 0.1f64..10.0), 1..60),
    ) {
        let control = LtvDistribution { group_label: "c".into(), samples: samples.iter().map(|s| s.0).collect(), point_estimate: 1.0 };
        let test = LtvDistribution { group_label: "t".into(), samples: samples.iter().map(|s| s.1).collect(), point_estimate: 1.0 };
        let fwd = difference_test(&control, &test, 0.05).unwrap();
        let rev = difference_test(&test, &control, 0.05).unwrap();
        for (x, y) in fwd.diffs.iter().zip(&rev.diffs) {
            prop_assert_eq!(*x, -*y);
        }
        prop_assert_eq!(fwd.p_control_minus_test_positive, rev.p_test_minus_control_positive);
        prop_assert_eq!(fwd.p_test_minus_control_positive, rev.p_control_minus_test_positive);
        prop_assert!(fwd.p_control_minus_test_positive + fwd.p_test_minus_control_positive <= 1.0);
    }

    #[test]
    fn welch_swap_and_shift(
        c in prop::collection::vec(-50.0f64..50.0, 2..15),
        t in prop::collection::vec(-50.0f64..50.0, 2..15),
        shift in -100.0f64..100.0,
    ) {
        let cu = UserCumulative::new("c", c.clone()).unwrap();
        let tu = UserCumulative::new("t", t.clone()).unwrap();
        let fwd = welch_t_test(&cu, &tu).unwrap();
        let rev = welch_t_test(&tu, &cu).unwrap();
        prop_assert!((fwd.t + rev.t).abs() < 1e-9 * (1.0 + fwd.t.abs()));
        prop_assert!((fwd.p_test_greater - (1.0 - rev.p_test_greater)).abs() < 1e-9);

        let cs = UserCumulative::new("c", c.iter().map(|x| x + shift).collect()).unwrap();
        let ts = UserCumulative::new("t", t.iter().map(|x| x + shift).collect()).unwrap();
        let moved = welch_t_test(&cs, &ts).unwrap();
        prop_assert!((moved.t - fwd.t).abs() < 1e-8 * (1.0 + fwd.t.abs()));
    }

    #[test]
    fn welch_reduces_to_pooled_student(
        base in prop::collection::vec(-10.0f64..10.0, 3..12),
        delta in -5.0f64..5.0,
    ) {
        // same size, and equal variances because test is a shifted reversal of control
        let control = base.clone();
        let test: Vec<f64> = base.iter().rev().map(|x| x + delta).collect();
        let n = base.len() as f64;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
        let var = |v: &[f64]| { let m = mean(v); v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) };
        prop_assume!(var(&control) > 1e-6);
        let pooled = ((n - 1.0) * var(&control) + (n - 1.0) * var(&test)) / (2.0 * n - 2.0);
        let student = (mean(&test) - mean(&control)) / (pooled * 2.0 / n).sqrt();
        let w = welch_t_test(&UserCumulative::new("c", control).unwrap(), &UserCumulative::new("t", test).unwrap()).unwrap();
        prop_assert!((w.t - student).abs() < 1e-9 * (1.0 + student.abs()));
        prop_assert!((w.df - (2.0 * n - 2.0)).abs() < 1e-9 * n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bootstrap_scale_equivariance(series in series_strategy(), other in series_strategy(), k in 0.05f64..20.0) {
        let cfg = BootstrapConfig::new(5).with_iterations(64).with_horizon(ExtrapolationConfig::with_horizon(100));
        let control = series.with_label("control");
        let test = other.with_label("test");
        let (c, t) = (bootstrap_ltv(&control, &cfg).unwrap(), bootstrap_ltv(&test, &cfg).unwrap());
        let (ck, tk) = (bootstrap_ltv(&scaled(&control, k), &cfg).unwrap(), bootstrap_ltv(&scaled(&test, k), &cfg).unwrap());
        for (a, b) in c.samples.iter().zip(&ck.samples).chain(t.samples.iter().zip(&tk.samples)) {
            prop_assert!(close(*b, k * a, 1e-9));
        }
        let base = difference_test(&c, &t, 0.05).unwrap();
        let moved = difference_test(&ck, &tk, 0.05).unwrap();
        for (j, (a, b)) in base.diffs.iter().zip(&moved.diffs).enumerate() {
            let size = k * c.samples[j].abs().max(t.samples[j].abs());
            prop_assert!((b - k * a).abs() <= 1e-9 * size);
        }
        prop_assert_eq!(base.p_control_minus_test_positive, moved.p_control_minus_test_positive);
        prop_assert_eq!(base.p_test_minus_control_positive, moved.p_test_minus_control_positive);
        prop_assert_eq!(base.decision, moved.decision);
    }
}
