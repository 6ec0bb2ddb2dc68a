use proptest::prelude::*;
use qsdlab::analysis::tv_distance;
use qsdlab::model::{presets, seq_fn, state_fn, AbsorbedChain, State};
use qsdlab::simulate::*;
use qsdlab::spectral::{delta, evolve, qsd_solve, truncate};

fn csv_of(t: &Trajectory) -> String {
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

/// Wilson score interval at `z` standard deviations.
fn wilson(successes: u64, n: u64, z: f64) -> (f64, f64) {
    let (k, n) = (successes as f64, n as f64);
    let p = k / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    (centre - half, centre + half)
}

fn competitive() -> qsdlab::model::MultiTypeModel {
    presets::lotka_volterra(
        &[2.0, 1.5],
        &[1.0, 1.0],
        &[vec![0.1, 0.05], vec![0.05, 0.1]],
        state_fn(|x| 0.01 * f64::from(x[0] % 3)),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn every_recorded_jump_is_allowed(seed in any::<u64>()) {
        let m = competitive();
        let x0 = State::new(vec![5, 3]).unwrap();
        let path = ssa_trajectory(&m, &x0, 50.0, &SeededRng::new(seed)).unwrap();
        for w in path.records.windows(2) {
            let ((s, x), (t, y)) = (&w[0], &w[1]);
            prop_assert!(t > s);
            prop_assert!(m.transitions_from(x).unwrap().rate_to(y) > 0.0, "{} -> {}", x, y);
        }
        if let Some(tau) = path.absorption_time {
            let (t_last, x_last) = path.records.last().unwrap();
            prop_assert!(tau > *t_last);
            prop_assert!(m.transitions_from(x_last).unwrap().absorption_rate() > 0.0);
        }
    }

    #[test]
    fn same_seed_same_path(seed in any::<u64>()) {
        let m = presets::logistic(2.0, 1.0, 0.1);
        let x0 = State::one(3).unwrap();
        let a = ssa_trajectory(&m, &x0, 20.0, &SeededRng::new(seed)).unwrap();
        let b = ssa_trajectory(&m, &x0, 20.0, &SeededRng::new(seed)).unwrap();
        prop_assert_eq!(csv_of(&a), csv_of(&b));
        let other = ssa_trajectory(&m, &x0, 20.0, &SeededRng::new(seed ^ 1)).unwrap();
        prop_assert_ne!(csv_of(&a), csv_of(&other));
    }
}

#[test]
fn pure_absorption_time_is_exponential() {
    let rho = 2.5;
    let n = 20_000;
    let times = absorption_times(&presets::pure_absorption(rho), &State::one(1).unwrap(), f64::INFINITY, n, &SeededRng::new(11)).unwrap();
    let taus: Vec<f64> = times.into_iter().map(|t| t.unwrap()).collect();
    let mean = taus.iter().sum::<f64>() / n as f64;
    let sd = 1.0 / rho / (n as f64).sqrt();
    assert!((mean - 1.0 / rho).abs() < 4.0 * sd, "mean {mean}");
    // P(τ > 1/ρ) = e⁻¹.
    let beyond = taus.iter().filter(|&&t| t > 1.0 / rho).count() as u64;
    let (lo, hi) = wilson(beyond, n as u64, 3.29);
    assert!(lo <= (-1f64).exp() && (-1f64).exp() <= hi);
}

#[test]
fn censoring_reports_none() {
    let times = absorption_times(&presets::pure_absorption(1e-9), &State::one(1).unwrap(), 1.0, 50, &SeededRng::new(0)).unwrap();
    assert!(times.iter().all(Option::is_none));
}

#[test]
fn two_state_survival_within_wilson_band() {
    let m = presets::two_state();
    let gen = truncate(&m, 2).unwrap();
    let n = 20_000u64;
    for (k, t) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let est = conditional_estimate(&m, &State::one(1).unwrap(), t, n as usize, &SeededRng::new(5).child(k as u64)).unwrap();
        let exact = evolve(&gen, &delta(&gen, 0), t, 1e-14).unwrap().survival;
        let (lo, hi) = wilson(est.survivors, n, 2.576);
        assert!(lo <= exact && exact <= hi, "t = {t}: {exact} not in [{lo}, {hi}]");
    }
}

#[test]
fn conditional_estimate_is_reproducible() {
    let m = presets::logistic(2.0, 1.0, 0.5);
    let x0 = State::one(2).unwrap();
    let a = conditional_estimate(&m, &x0, 3.0, 2000, &SeededRng::new(42)).unwrap();
    let b = conditional_estimate(&m, &x0, 3.0, 2000, &SeededRng::new(42)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.counts.values().sum::<u64>(), a.survivors);
}

#[test]
fn q_process_stays_in_the_retained_set() {
    let gen = truncate(&presets::logistic(1.0, 1.0, 1.0), 30).unwrap();
    let res = qsd_solve(&gen, 1e-12).unwrap();
    let path = q_process_trajectory(&gen, &res, &State::one(1).unwrap(), 500.0, &SeededRng::new(3)).unwrap();
    assert!(path.absorption_time.is_none());
    assert!(path.records.iter().all(|(_, x)| gen.index_of(x).is_some()));
    let q = QProcess::new(&gen, &res).unwrap();
    // From state 1 the only move left after conditioning is upward.
    assert_eq!(q.row(0).len(), 1);
}

#[test]
fn q_process_occupation_on_two_states() {
    let gen = truncate(&presets::two_state(), 2).unwrap();
    let res = qsd_solve(&gen, 1e-13).unwrap();
    let occ = QProcess::new(&gen, &res).unwrap().occupation(&State::one(1).unwrap(), 1e5, &SeededRng::new(8)).unwrap();
    assert!(tv_distance(&occ, &res.q_stationary()).unwrap() <= 0.02, "{occ:?}");
}

#[test]
fn fleming_viot_is_reproducible_and_conserves_particles() {
    let m = presets::logistic_with_catastrophe(2.0, 1.0, 0.5, seq_fn(|k| 0.2 * (k % 2) as f64));
    let law = [(State::one(1).unwrap(), 1.0), (State::one(4).unwrap(), 2.0)];
    let run = |seed| fleming_viot(&m, 200, &law, 10.0, &[1.0, 5.0], &SeededRng::new(seed)).unwrap();
    let a = run(1);
    assert_eq!(a, run(1));
    assert_ne!(a.last, run(2).last);
    assert_eq!(a.snapshots.iter().map(|s| s.time).collect::<Vec<_>>(), [1.0, 5.0]);
    assert_eq!(a.last.time, 10.0);
    for s in a.snapshots.iter().chain([&a.last]) {
        assert_eq!(s.particles.len(), 200);
    }
    assert!(a.resamplings.iter().all(|r| r.particle != r.source && r.time <= 10.0));
    assert!(a.resamplings.windows(2).all(|w| w[1].time >= w[0].time));
    let mut buf = Vec::new();
    a.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 3 * 200);
}

#[test]
fn fleming_viot_rejects_a_single_particle() {
    let law = [(State::one(1).unwrap(), 1.0)];
    assert!(fleming_viot(&presets::two_state(), 1, &law, 1.0, &[], &SeededRng::new(0)).is_err());
}

#[test]
fn substreams_are_distinct_and_stable() {
    let r = SeededRng::new(7);
    assert_eq!(r.child(3).stream(), r.child(3).stream());
    assert_ne!(r.child(3).stream(), r.child(4).stream());
    assert_ne!(r.substream(1).child(0).stream(), r.substream(2).child(0).stream());
}
