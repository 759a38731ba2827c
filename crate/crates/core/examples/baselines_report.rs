//! Runs the Decoupled and End-to-End baselines over two demand scales with
//! a small configuration and writes the report files.
//!
//!     cargo run --release --example baselines_report [OUT_DIR]

use std::path::PathBuf;

use ies_e2e::config::AppConfig;
use ies_e2e::eval::run_baselines;
use ies_e2e::forecast::{Architecture, ModelKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ies-e2e-baselines"));
    let mut cfg = AppConfig::default();
    cfg.data.days = 20;
    cfg.training.model = Architecture {
        kind: ModelKind::Gru,
        layers: 1,
        hidden: 8,
        ..Architecture::default()
    };
    cfg.training.epochs = 5;
    cfg.training.batch_size = 8;
    cfg.evaluation.scales = vec![0.5, 1.0];
    cfg.evaluation.seeds = vec![0];
    cfg.validate()?;

    let table = cfg.data.load(&out)?;
    let report = run_baselines(&cfg, &table, Some(&out))?;
    for case in &report.cases {
        println!("scale {:.2}: {} test days, oracle {:.2}", case.scale, case.test_days, case.oracle.total);
        for m in &case.methods {
            println!("  {:>10}: MAPE {:6.2}%, cost {:.2}", m.method, m.mape, m.cost.total);
        }
        if let Some(r) = case.reduction_pct {
            println!("  reduction {r:.2}%");
        }
    }
    println!("report written to {}", out.display());
    Ok(())
}
