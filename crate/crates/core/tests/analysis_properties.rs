use proptest::prelude::*;
use qsdlab::analysis::*;
use qsdlab::model::presets;
use qsdlab::spectral::{delta, qsd_solve, truncate};

fn law(raw: Vec<f64>) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

fn laws(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, n).prop_map(law)
}

fn exact_curve(gamma: f64, c: f64, times: Vec<f64>) -> ConvergenceCurve {
    let tv = times.iter().map(|t| c * (-gamma * t).exp()).collect();
    ConvergenceCurve { initial: "exact".into(), times, tv }
}

proptest! {
    #[test]
    fn tv_is_a_metric_on_laws((p, q, r) in (2usize..12).prop_flat_map(|n| (laws(n), laws(n), laws(n)))) {
        let d = |a: &[f64], b: &[f64]| tv_distance(a, b).unwrap();
        prop_assert_eq!(d(&p, &p), 0.0);
        prop_assert_eq!(d(&p, &q), d(&q, &p));
        prop_assert!(d(&p, &q) <= d(&p, &r) + d(&r, &q) + 1e-15);
        prop_assert!((0.0..=2.0 + 1e-15).contains(&d(&p, &q)));
    }

    #[test]
    fn fit_recovers_exact_exponentials(gamma in 0.05..5.0f64, c in 0.1..2.0f64) {
        let horizon = 20.0 / gamma;
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * horizon / 100.0).collect();
        let fit = fit_rate(&exact_curve(gamma, c, times), &BurnIn { head_fraction: 1.0, floor: 1e-300, min_points: 5 }).unwrap();
        prop_assert!((fit.gamma - gamma).abs() <= 1e-6 * gamma);
        prop_assert!((fit.implied_c() - c).abs() <= 1e-6 * c);
        prop_assert!(fit.r_squared > 1.0 - 1e-12);
    }
}

#[test]
fn hand_distance() {
    let d = tv_distance(&[0.382, 0.618], &[0.5, 0.5]).unwrap();
    assert!((d - 0.236).abs() < 1e-12);
}

#[test]
fn window_stops_at_the_floor() {
    let times: Vec<f64> = (0..=60).map(f64::from).collect();
    let mut curve = exact_curve(1.0, 1.0, times);
    for v in curve.tv.iter_mut().skip(30) {
        *v = 1e-14;
    }
    let policy = BurnIn::for_tolerance(1e-14);
    let (start, end) = fit_window(&curve, &policy).unwrap();
    assert_eq!(start, 1);
    assert_eq!(end, 30);
    assert!((fit_rate(&curve, &policy).unwrap().gamma - 1.0).abs() < 1e-9);
    let flat = ConvergenceCurve { initial: "flat".into(), times: vec![0.0, 1.0], tv: vec![0.0, 0.0] };
    assert!(fit_rate(&flat, &policy).is_err());
}

#[test]
fn two_state_rate_is_the_spectral_gap() {
    let gen = truncate(&presets::two_state(), 2).unwrap();
    let res = qsd_solve(&gen, 1e-13).unwrap();
    let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
    let curve = convergence_curve(&gen, &res, &delta(&gen, 0), &times, 1e-14, "1").unwrap();
    assert!((curve.tv[0] - (5f64.sqrt() - 1.0)).abs() < 1e-10);
    let fit = fit_rate(&curve, &BurnIn { floor: 1e-11, ..BurnIn::for_tolerance(1e-14) }).unwrap();
    assert!((fit.gamma - 5f64.sqrt()).abs() < 0.01 * 5f64.sqrt(), "{fit:?}");
}

#[test]
fn qsd_start_stays_put() {
    let gen = truncate(&presets::logistic(1.0, 1.0, 1.0), 60).unwrap();
    let res = qsd_solve(&gen, 1e-12).unwrap();
    let times: Vec<f64> = (0..=20).map(f64::from).collect();
    let curve = convergence_curve(&gen, &res, &res.qsd, &times, 1e-14, "qsd").unwrap();
    assert!(curve.tv.iter().all(|&v| v <= 1e-10), "{:?}", curve.tv);
}

#[test]
fn plateau_approaches_the_eigenfunction() {
    let gen = truncate(&presets::two_state(), 2).unwrap();
    let res = qsd_solve(&gen, 1e-13).unwrap();
    let report = plateau_check(&gen, &res, 0, 10.0, 1e-14).unwrap();
    assert!(report.flat);
    assert!((report.limit - res.eta_fn[0]).abs() < 1e-8 * res.eta_fn[0]);
    assert!(report.qsd_exponential_error <= 1e-9);
    let early = plateau_check(&gen, &res, 0, 0.05, 1e-14).unwrap();
    assert!(!early.flat && early.advice.is_some());
}

#[test]
fn time_to_tv_is_monotone_in_the_target() {
    let gen = truncate(&presets::logistic(1.0, 1.0, 1.0), 60).unwrap();
    let res = qsd_solve(&gen, 1e-12).unwrap();
    let mu0 = delta(&gen, 30);
    let coarse = time_to_tv(&gen, &res, &mu0, 1e-2, 0.1, 2000, 1e-13).unwrap();
    let fine = time_to_tv(&gen, &res, &mu0, 1e-6, 0.1, 2000, 1e-13).unwrap();
    assert!(coarse < fine);
    assert!(time_to_tv(&gen, &res, &mu0, 1e-6, 0.1, 2, 1e-13).is_err());
}

#[test]
fn uniformity_across_starts() {
    let gen = truncate(&presets::logistic(1.0, 1.0, 1.0), 80).unwrap();
    let res = qsd_solve(&gen, 1e-12).unwrap();
    let initials: Vec<(String, Vec<f64>)> = [0usize, 9, 79].iter().map(|&i| (format!("{}", i + 1), delta(&gen, i))).collect();
    let times: Vec<f64> = (0..=60).map(|k| k as f64 * 0.25).collect();
    let report = uniformity_report(&gen, &res, &initials, &times, 1e-13, &BurnIn { floor: 1e-9, ..BurnIn::for_tolerance(1e-13) }, 0.1).unwrap();
    assert!(report.gamma_spread < 0.1, "{:?}", report.flags);
    assert_eq!(report.curves.len(), 3);
    for (k, (_, m)) in report.max_tv.iter().enumerate() {
        assert!(report.curves.iter().all(|c| c.tv[k] <= *m));
    }
}

#[test]
fn svg_plot_is_well_formed() {
    let svg = line_plot_svg(&[("a".into(), vec![(0.0, 1.0), (1.0, 0.1)])], "t", "tv", true);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}
