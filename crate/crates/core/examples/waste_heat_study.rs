//! Perfect-information cost with and without data center waste heat
//! recovery as the data center workload grows.
//!
//!     cargo run --release --example waste_heat_study

use ies_e2e::data::{make_windows, synth_generate, SynthProfile};
use ies_e2e::eval::run_whr_study;
use ies_e2e::ies::IesConfig;
use ies_e2e::qp::{SolveOptions, DEFAULT_EPS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ies = IesConfig::default();
    let table = synth_generate(0, 8, &SynthProfile::default());
    let days = make_windows(&table, 24, ies.horizon_steps);
    let workloads = [0.2, 0.4, 0.6, 0.8, 1.0];
    let rows = run_whr_study(&ies, &days, &workloads, None, DEFAULT_EPS, &SolveOptions::default())?;
    println!("workload  without WHR     with WHR  reduction");
    for r in rows {
        println!(
            "{:>7.0}% {:>12.2} {:>12.2} {:>9.2}%",
            100.0 * r.workload,
            r.oracle_cost_without_whr,
            r.oracle_cost_with_whr,
            r.oracle_reduction_pct
        );
    }
    Ok(())
}
