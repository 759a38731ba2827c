mod common;

use common::{slice_sample, typical_day};
use ies_e2e::config::AppConfig;
use ies_e2e::data::{synth_generate, Sample, SynthProfile};
use ies_e2e::eval::{
    case_split, evaluate_forecaster, evaluate_oracle, median, metrics, reduction_pct, run_baselines,
    run_whr_study, METHOD_ORACLE,
};
use ies_e2e::forecast::{Architecture, ForecastModel, ModelKind, Normalizer};
use ies_e2e::ies::IesConfig;
use ies_e2e::qp::{SolveOptions, DEFAULT_EPS};
use nalgebra::DMatrix;

#[test]
fn perfect_prediction_metrics() {
    let y = DMatrix::from_fn(24, 6, |t, c| 0.1 + 0.03 * t as f64 + 0.1 * c as f64);
    let m = metrics(&[y.clone()], &[y], &Normalizer::identity(6));
    assert_eq!((m.mape, m.rmse, m.r2, m.mae_mean), (0.0, 0.0, 1.0, 0.0));
    assert_eq!(m.mape_excluded, 0);
}

#[test]
fn mean_predictor_has_zero_r2() {
    let y = DMatrix::from_fn(5, 6, |t, c| (t * 7 + c * 3) as f64 % 5.0);
    let mean = y.mean();
    let p = DMatrix::from_element(5, 6, mean);
    let m = metrics(&[p], &[y], &Normalizer::identity(6));
    assert!(m.r2.abs() < 1e-12, "{}", m.r2);
}

#[test]
fn three_point_case_by_hand() {
    // channel 0 differs at rows 0 and 2, every other entry is an exact 1
    let mut y = DMatrix::from_element(3, 6, 1.0);
    let mut p = y.clone();
    y[(0, 0)] = 2.0;
    y[(1, 0)] = 2.0;
    y[(2, 0)] = 4.0;
    p[(0, 0)] = 1.0;
    p[(1, 0)] = 2.0;
    p[(2, 0)] = 3.0;
    let m = metrics(&[p], &[y], &Normalizer::identity(6));
    // squared errors 1 + 1 over 18 entries
    assert!((m.rmse - (2.0f64 / 18.0).sqrt()).abs() < 1e-12);
    // relative errors 1/2 and 1/4
    assert!((m.mape - 100.0 * 0.75 / 18.0).abs() < 1e-12);
    let mean_y = 23.0 / 18.0;
    let ss_tot = 2.0 * (2.0f64 - mean_y).powi(2) + (4.0f64 - mean_y).powi(2) + 15.0 * (1.0f64 - mean_y).powi(2);
    assert!((m.r2 - (1.0 - 2.0 / ss_tot)).abs() < 1e-12);
    assert!((m.mae[0].1 - 2.0 / 3.0).abs() < 1e-12);
    assert!((m.mae_mean - 1.0 / 9.0).abs() < 1e-12);
}

#[test]
fn near_zero_truths_are_excluded_from_mape() {
    let mut y = DMatrix::from_element(2, 6, 1.0);
    y[(0, 0)] = 0.0;
    let p = DMatrix::from_element(2, 6, 1.0);
    let m = metrics(&[p], &[y], &Normalizer::identity(6));
    assert_eq!(m.mape_excluded, 1);
    assert_eq!(m.mape, 0.0);
}

#[test]
fn mae_is_in_physical_units() {
    let norm = Normalizer {
        min: vec![10.0; 6],
        scale: vec![100.0; 6],
    };
    let y = DMatrix::from_element(2, 6, 0.5);
    let p = DMatrix::from_element(2, 6, 0.6);
    let m = metrics(&[p], &[y], &norm);
    assert!((m.mae_mean - 10.0).abs() < 1e-9);
    assert!((m.rmse - 0.1).abs() < 1e-12);
}

#[test]
fn median_and_reduction() {
    assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    assert!((reduction_pct(200.0, 180.0) - 10.0).abs() < 1e-12);
    assert_eq!(reduction_pct(0.0, 5.0), 0.0);
}

fn days(n: u64) -> Vec<Sample> {
    (0..n).map(|s| slice_sample(40 + s, 0, 24, 24)).collect()
}

#[test]
fn oracle_dominates_forecast_driven_schedules() {
    let ies = IesConfig::default();
    let samples = days(3);
    let norm = ies_e2e::data::fit_normalizer(&samples).unwrap();
    let opts = SolveOptions::default();
    let oracle = evaluate_oracle(&samples, &ies, DEFAULT_EPS, &opts).unwrap();
    assert!(oracle.metrics.is_none());
    for seed in 0..3 {
        let arch = Architecture {
            kind: ModelKind::Mlp,
            layers: 1,
            hidden: 4,
            ..Architecture::default()
        };
        let model = ForecastModel::init(arch, norm.clone(), seed).unwrap();
        let e = evaluate_forecaster(&model, &samples, &ies, DEFAULT_EPS, &opts).unwrap();
        for (o, f) in oracle.per_day.iter().zip(&e.per_day) {
            assert!(o.total_cost <= f.total_cost + 1e-6, "{} > {}", o.total_cost, f.total_cost);
            assert!(f.deficiency_kw.iter().flatten().all(|d| *d >= 0.0));
        }
        assert!(oracle.cost.total <= e.cost.total);
    }
    assert_eq!(oracle.cost.penalty, 0.0);
}

#[test]
fn waste_heat_recovery_never_costs_more() {
    let ies = IesConfig::default();
    let samples = days(2);
    let rows = run_whr_study(&ies, &samples, &[0.2, 0.6, 1.0], None, DEFAULT_EPS, &SolveOptions::default()).unwrap();
    for r in &rows {
        assert!(r.oracle_cost_with_whr <= r.oracle_cost_without_whr + 1e-6);
        let recomputed = 100.0 * (r.oracle_cost_without_whr - r.oracle_cost_with_whr) / r.oracle_cost_without_whr;
        assert!((recomputed - r.oracle_reduction_pct).abs() < 0.05);
        assert!(r.forecast_cost_with_whr.is_none());
    }
}

#[test]
fn without_waste_heat_the_costs_are_equal() {
    let ies = IesConfig::default();
    let mut samples = days(2);
    for s in &mut samples {
        s.actual.dc_waste_heat.iter_mut().for_each(|v| *v = 0.0);
    }
    let rows = run_whr_study(&ies, &samples, &[0.5, 1.0], None, DEFAULT_EPS, &SolveOptions::default()).unwrap();
    for r in rows {
        assert!((r.oracle_cost_with_whr - r.oracle_cost_without_whr).abs() <= 1e-6 * r.oracle_cost_without_whr.abs());
    }
}

#[test]
fn typical_day_whr_saves_money() {
    let ies = IesConfig::default();
    let mut s = slice_sample(1, 0, 24, 24);
    s.actual = typical_day(24);
    let rows = run_whr_study(&ies, &[s], &[1.0], None, DEFAULT_EPS, &SolveOptions::default()).unwrap();
    assert!(rows[0].oracle_reduction_pct > 0.0);
}

fn small_config() -> AppConfig {
    let mut cfg = AppConfig::default();
    cfg.training.model = Architecture {
        kind: ModelKind::Mlp,
        layers: 1,
        hidden: 4,
        ..Architecture::default()
    };
    cfg.training.epochs = 2;
    cfg.training.batch_size = 4;
    cfg.evaluation.seeds = vec![0, 1];
    cfg.evaluation.scales = vec![0.5, 1.0];
    cfg
}

#[test]
fn baseline_report_is_consistent_and_reproducible() {
    let cfg = small_config();
    let table = synth_generate(9, 12, &SynthProfile::default());
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let a = run_baselines(&cfg, &table, Some(dir_a.path())).unwrap();
    run_baselines(&cfg, &table, Some(dir_b.path())).unwrap();
    let bytes = |d: &tempfile::TempDir| std::fs::read(d.path().join("metrics.json")).unwrap();
    assert_eq!(bytes(&dir_a), bytes(&dir_b));

    assert_eq!(a.cases.len(), 2);
    for c in &a.cases {
        assert_eq!(c.runs.len(), 4);
        let d = c.method("decoupled").unwrap();
        let e = c.method("end_to_end").unwrap();
        assert!(c.oracle.total <= d.cost.total && c.oracle.total <= e.cost.total);
        let red = 100.0 * (d.cost.total - e.cost.total) / d.cost.total;
        assert!((red - c.reduction_pct.unwrap()).abs() < 0.05);
    }
    let csv = std::fs::read_to_string(dir_a.path().join("baselines.csv")).unwrap();
    let optimal: Vec<&str> = csv.lines().filter(|l| l.contains(METHOD_ORACLE)).collect();
    assert_eq!(optimal.len(), 2);
    assert!(optimal.iter().all(|l| l.split(',').nth(2) == Some("-")));
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    let sched = dir_a.path().join("schedules/scale_1.00/end_to_end");
    assert!(std::fs::read_dir(sched).unwrap().count() >= 1);
}

#[test]
fn demand_scaling_scales_the_case() {
    let cfg = small_config();
    let table = synth_generate(9, 12, &SynthProfile::default());
    let full = case_split(&cfg, &table, 1.0).unwrap();
    let half = case_split(&cfg, &table, 0.5).unwrap();
    let (a, b) = (&full.test[0].actual, &half.test[0].actual);
    assert!((b.bldg_elec[5] - 0.5 * a.bldg_elec[5]).abs() < 1e-12);
    assert!((b.dc_elec[5] - 0.5 * a.dc_elec[5]).abs() < 1e-12);
    assert_eq!(b.solar_rad, a.solar_rad);
}
