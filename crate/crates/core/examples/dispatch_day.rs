//! Builds the day-ahead dispatch QP for one synthetic day, solves it under
//! perfect information and prints the hourly plan of the main devices.
//!
//!     cargo run --example dispatch_day

use ies_e2e::data::{synth_generate, SynthProfile};
use ies_e2e::ies::{build_qp, ex_post_evaluate, IesConfig, Var};
use ies_e2e::qp::{SolveOptions, DEFAULT_EPS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = IesConfig::default();
    let table = synth_generate(0, 2, &SynthProfile::default());
    let day = table.slice(24, cfg.horizon_steps);

    let model = build_qp(&cfg, &day)?.regularized(DEFAULT_EPS);
    println!(
        "{} variables, {} equalities, {} inequalities",
        model.qp.n_vars(),
        model.qp.n_eq(),
        model.qp.n_ineq()
    );
    let d = model.dispatch(&day, &SolveOptions::default())?;
    let shown = [Var::GridBuy, Var::GridSell, Var::EssSoc, Var::ElPower, Var::FcH2, Var::TankKg, Var::ChillerPower];
    print!("hour");
    for v in shown {
        print!(" {:>13}", v.name());
    }
    println!();
    for t in 0..cfg.horizon_steps {
        print!("{t:>4}");
        for v in shown {
            print!(" {:>13.2}", d.schedule.get(v)[t]);
        }
        println!();
    }
    let settled = ex_post_evaluate(&cfg, &d.schedule, &day)?;
    println!("operating cost {:.2}, penalty {:.2}", settled.cost_transactions, settled.penalty);
    Ok(())
}
