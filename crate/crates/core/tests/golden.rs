use std::path::PathBuf;

use qsdlab::criteria::{run_suite, LyapunovReport, SuiteSettings};
use qsdlab::model::{presets, seq_fn, state_fn, RateModel};

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.json"))
}

/// Compares against the stored reports; `UPDATE_GOLDEN=1` rewrites them.
fn assert_golden(name: &str, reports: &[LyapunovReport]) {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, serde_json::to_string_pretty(reports).unwrap() + "\n").unwrap();
        return;
    }
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let stored: Vec<LyapunovReport> = serde_json::from_str(&text).unwrap();
    assert_eq!(stored.len(), reports.len(), "{name}");
    for (old, new) in stored.iter().zip(reports) {
        assert_eq!((&old.criterion, old.verdict, old.range), (&new.criterion, new.verdict, new.range), "{name}");
        assert_eq!(old.witnesses.keys().collect::<Vec<_>>(), new.witnesses.keys().collect::<Vec<_>>(), "{name}/{}", new.criterion);
        for (k, a) in &old.witnesses {
            let b = new.witnesses[k];
            assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{name}/{}/{k}: {a} vs {b}", new.criterion);
        }
        assert_eq!(old.diagnostics, new.diagnostics, "{name}/{}", new.criterion);
    }
}

#[test]
fn logistic_reports() {
    let model = RateModel::Bdc(presets::logistic(1.0, 1.0, 1.0));
    let settings = SuiteSettings { weight: Some(seq_fn(|k| (k as f64).sqrt())), ..SuiteSettings::default() };
    assert_golden("logistic", &run_suite(&model, &settings).unwrap());
}

#[test]
fn catastrophe_reports() {
    let model = RateModel::Bdc(presets::logistic_with_catastrophe(2.0, 1.0, 1.0, seq_fn(|k| 1.0 + 0.5 * if k % 2 == 0 { 1.0 } else { -1.0 })));
    assert_golden("logistic_catastrophe", &run_suite(&model, &SuiteSettings::default()).unwrap());
}

#[test]
fn lotka_volterra_reports() {
    let model = RateModel::MultiType(presets::lotka_volterra(
        &[1.0, 1.0],
        &[1.0, 1.0],
        &[vec![1.0, 0.1], vec![0.1, 1.0]],
        state_fn(|_| 0.0),
    ));
    let settings = SuiteSettings { range: 120, ..SuiteSettings::default() };
    assert_golden("lotka_volterra", &run_suite(&model, &settings).unwrap());
}

#[test]
fn density_dependent_reports() {
    let model = RateModel::MultiType(presets::density_dependent_competition());
    let settings = SuiteSettings { range: 120, ..SuiteSettings::default() };
    assert_golden("density_dependent", &run_suite(&model, &settings).unwrap());
}
