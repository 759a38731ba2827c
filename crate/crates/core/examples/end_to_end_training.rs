//! Trains the same forecaster twice, once on accuracy alone and once through
//! the dispatch layer with the composite loss, and compares ex-post costs.
//!
//!     cargo run --release --example end_to_end_training

use ies_e2e::data::{fit_normalizer, make_windows, split, synth_generate, SynthProfile};
use ies_e2e::eval::{evaluate_forecaster, evaluate_oracle, reduction_pct};
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
    let norm = fit_normalizer(&data.train)?;
    let opts = SolveOptions::default();

    let mut totals = Vec::new();
    for mode in [TrainMode::Decoupled, TrainMode::EndToEnd] {
        let cfg = TrainingConfig {
            mode,
            epochs: 15,
            batch_size: 8,
            learning_rate: 3e-3,
            model: arch,
            ..TrainingConfig::default()
        };
        let model = ForecastModel::init(arch, norm.clone(), 0)?;
        let out = train(model, &data.train, &data.val, &ies, &cfg)?;
        let last = out.log.last().expect("at least one epoch");
        println!(
            "{mode:?}: best epoch {}, final weights ({:.2}, {:.2}), cost scale {:.2}",
            out.best_epoch, last.alpha, last.beta, out.cost_scale
        );
        let e = evaluate_forecaster(&out.model, &data.test, &ies, DEFAULT_EPS, &opts)?;
        let m = e.metrics.expect("forecaster metrics");
        println!("  test MAPE {:.2}%, ex-post cost {:.2}, penalty {:.2}", m.mape, e.cost.total, e.cost.penalty);
        totals.push(e.cost.total);
    }
    let oracle = evaluate_oracle(&data.test, &ies, DEFAULT_EPS, &opts)?;
    println!(
        "perfect information {:.2}; end-to-end saves {:.2}% over decoupled",
        oracle.cost.total,
        reduction_pct(totals[0], totals[1])
    );
    Ok(())
}
