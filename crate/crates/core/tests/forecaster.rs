use ies_e2e::forecast::{
    calendar_features, Architecture, FeatureWindow, ForecastError, ForecastModel, ModelKind,
    Normalizer, N_CALENDAR,
};
use chrono::NaiveDate;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_arch(kind: ModelKind) -> Architecture {
    Architecture {
        kind,
        layers: 2,
        hidden: 8,
        history: 6,
        horizon: 4,
        channels: 6,
        calendar: N_CALENDAR,
    }
}

fn random_window(arch: &Architecture, seed: u64) -> FeatureWindow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FeatureWindow {
        history: DMatrix::from_fn(arch.history, arch.channels, |_, _| rng.random_range(0.0..1.0)),
        calendar: DMatrix::from_fn(arch.horizon, arch.calendar, |_, _| rng.random_range(-1.0..1.0)),
        target: None,
    }
}

fn model(arch: Architecture, seed: u64) -> ForecastModel {
    ForecastModel::init(arch, Normalizer::identity(arch.channels), seed).unwrap()
}

#[test]
fn zero_parameters_give_zero_output() {
    for kind in [ModelKind::Gru, ModelKind::Mlp] {
        let arch = small_arch(kind);
        let mut m = model(arch, 1);
        let zeros = vec![0.0; m.n_params()];
        m.set_flat_params(&zeros).unwrap();
        let y = m.predict(&random_window(&arch, 2)).unwrap();
        assert_eq!(y.shape(), (4, 6));
        assert!(y.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn prediction_is_deterministic() {
    let arch = small_arch(ModelKind::Gru);
    let m = model(arch, 3);
    let w = random_window(&arch, 4);
    assert_eq!(m.predict(&w).unwrap(), m.predict(&w).unwrap());
    assert_eq!(model(arch, 3), m);
    assert_ne!(model(arch, 4), m);
}

fn scalar_linear(w: f64) -> ForecastModel {
    let arch = Architecture {
        kind: ModelKind::Mlp,
        layers: 0,
        hidden: 0,
        history: 1,
        horizon: 1,
        channels: 1,
        calendar: 0,
    };
    let mut m = model(arch, 0);
    m.set_flat_params(&[w, 0.0]).unwrap();
    m
}

fn scalar_window(x: f64) -> FeatureWindow {
    FeatureWindow {
        history: DMatrix::from_element(1, 1, x),
        calendar: DMatrix::zeros(1, 0),
        target: None,
    }
}

#[test]
fn linear_model_forward_and_gradient() {
    for (w, x) in [(2.0, 3.0), (-0.5, 1.5), (0.0, 7.0)] {
        let m = scalar_linear(w);
        assert_eq!(m.predict(&scalar_window(x)).unwrap()[(0, 0)], w * x);
    }
    let m = scalar_linear(0.7);
    let mut taped = m.predict_with_tape(&scalar_window(3.0)).unwrap();
    let g = taped.backprop(&DMatrix::from_element(1, 1, 1.0)).unwrap();
    assert_eq!(g[0][(0, 0)], 3.0);
    assert_eq!(g[1][(0, 0)], 1.0);
    assert_eq!(
        taped.backprop(&DMatrix::from_element(1, 1, 1.0)).unwrap_err(),
        ForecastError::TapeConsumed
    );
}

#[test]
fn zero_output_gradient_gives_zero_parameter_gradient() {
    let arch = small_arch(ModelKind::Gru);
    let m = model(arch, 5);
    let mut taped = m.predict_with_tape(&random_window(&arch, 6)).unwrap();
    let g = taped.backprop(&DMatrix::zeros(4, 6)).unwrap();
    assert!(g.iter().all(|t| t.iter().all(|v| *v == 0.0)));
}

fn gradcheck(kind: ModelKind, seed: u64) {
    let arch = small_arch(kind);
    let mut m = model(arch, seed);
    let w = random_window(&arch, seed + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 2);
    let dir = DMatrix::from_fn(4, 6, |_, _| rng.random_range(-1.0..1.0));
    let loss = |m: &ForecastModel| m.predict(&w).unwrap().dot(&dir);

    let mut taped = m.predict_with_tape(&w).unwrap();
    let grad = ForecastModel::flatten_grads(&taped.backprop(&dir).unwrap());
    drop(taped);
    let theta = m.flat_params();
    let step = 1e-6;
    let mut fd = vec![0.0; theta.len()];
    for i in 0..theta.len() {
        let mut p = theta.clone();
        p[i] += step;
        m.set_flat_params(&p).unwrap();
        let up = loss(&m);
        p[i] -= 2.0 * step;
        m.set_flat_params(&p).unwrap();
        let dn = loss(&m);
        fd[i] = (up - dn) / (2.0 * step);
    }
    let diff = grad.iter().zip(&fd).fold(0.0f64, |a, (g, f)| a.max((g - f).abs()));
    let scale = fd.iter().fold(1e-3f64, |a, f| a.max(f.abs()));
    assert!(diff / scale <= 1e-4, "{kind:?}: rel err {:e}", diff / scale);
}

#[test]
fn gru_gradient_matches_finite_differences() {
    gradcheck(ModelKind::Gru, 10);
}

#[test]
fn mlp_gradient_matches_finite_differences() {
    gradcheck(ModelKind::Mlp, 20);
}

#[test]
fn shape_mismatch_is_reported() {
    let arch = small_arch(ModelKind::Mlp);
    let m = model(arch, 0);
    let mut w = random_window(&arch, 1);
    w.history = DMatrix::zeros(5, 6);
    assert!(matches!(m.predict(&w), Err(ForecastError::ShapeMismatch(_))));
}

#[test]
fn normalization_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let data = DMatrix::from_fn(50, 6, |_, c| rng.random_range(0.0..100.0 * (c + 1) as f64));
    let n = Normalizer::fit(&data).unwrap();
    let z = n.normalize(&data);
    assert!(z.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
    assert!((n.denormalize(&z) - &data).amax() <= 1e-10);
    let constant = DMatrix::from_element(4, 1, 3.0);
    let n = Normalizer::fit(&constant).unwrap();
    assert_eq!(n.scale[0], 1.0);
}

#[test]
fn checkpoint_round_trip() {
    for kind in [ModelKind::Gru, ModelKind::Mlp] {
        let arch = small_arch(kind);
        let data = DMatrix::from_fn(10, 6, |r, c| (r * c) as f64);
        let m = ForecastModel::init(arch, Normalizer::fit(&data).unwrap(), 11).unwrap();
        let mut buf = Vec::new();
        m.write_json(&mut buf).unwrap();
        let back = ForecastModel::read_json(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }
    assert!(ForecastModel::read_json(&b"{\"format\":\"x\"}"[..]).is_err());
}

#[test]
fn calendar_distinguishes_hours_and_weekends() {
    let d = NaiveDate::from_ymd_opt(2024, 7, 6).unwrap(); // Saturday
    let h0 = calendar_features(d.and_hms_opt(0, 0, 0).unwrap());
    let h23 = calendar_features(d.and_hms_opt(23, 0, 0).unwrap());
    assert_ne!(h0, h23);
    assert_eq!(h0[0], 1.0);
    let monday = calendar_features(NaiveDate::from_ymd_opt(2024, 7, 8).unwrap().and_hms_opt(0, 0, 0).unwrap());
    assert_eq!(monday[0], 0.0);
}

#[test]
fn default_architecture_runs() {
    let arch = Architecture::default();
    let m = model(arch, 0);
    assert_eq!((arch.layers, arch.hidden), (2, 128));
    let y = m.predict(&random_window(&arch, 1)).unwrap();
    assert_eq!(y.shape(), (24, 6));
    assert!(y.iter().all(|v| v.is_finite()));
}
