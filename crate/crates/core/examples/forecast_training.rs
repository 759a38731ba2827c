//! Trains a GRU forecaster on accuracy alone and reports test-set metrics.
//!
//!     cargo run --release --example forecast_training

use ies_e2e::data::{fit_normalizer, make_windows, split, synth_generate, SynthProfile};
use ies_e2e::eval::{evaluate_forecaster, evaluate_oracle};
use ies_e2e::forecast::{Architecture, ForecastModel, ModelKind};
use ies_e2e::ies::IesConfig;
use ies_e2e::qp::{SolveOptions, DEFAULT_EPS};
use ies_e2e::train::{train, TrainMode, TrainingConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ies = IesConfig::default();
    let arch = Architecture {
        kind: ModelKind::Gru,
        layers: 1,
        hidden: 16,
        ..Architecture::default()
    };
    let table = synth_generate(0, 30, &SynthProfile::default());
    let data = split(&make_windows(&table, arch.history, arch.horizon));
    let model = ForecastModel::init(arch, fit_normalizer(&data.train)?, 0)?;
    let cfg = TrainingConfig {
        mode: TrainMode::Decoupled,
        epochs: 15,
        batch_size: 8,
        learning_rate: 3e-3,
        model: arch,
        ..TrainingConfig::default()
    };
    let out = train(model, &data.train, &data.val, &ies, &cfg)?;
    for e in &out.log {
        println!("epoch {:>2}: train error {:9.3}, validation error {:9.3}", e.epoch, e.train_l_error, e.val_l_error);
    }
    println!("best epoch {}", out.best_epoch);

    let opts = SolveOptions::default();
    let eval = evaluate_forecaster(&out.model, &data.test, &ies, DEFAULT_EPS, &opts)?;
    let oracle = evaluate_oracle(&data.test, &ies, DEFAULT_EPS, &opts)?;
    let m = eval.metrics.expect("forecaster metrics");
    println!("test MAPE {:.2}%, RMSE {:.4}, R2 {:.3}", m.mape, m.rmse, m.r2);
    for (ch, mae) in &m.mae {
        println!("  MAE {ch:>14}: {mae:.2}");
    }
    println!("ex-post cost {:.2} against the perfect-information {:.2}", eval.cost.total, oracle.cost.total);
    Ok(())
}
