//! A battery facing a cheap hour followed by an expensive one charges first
//! and discharges later, matching the closed-form optimum.
//!
//!     cargo run --example price_response

use ies_e2e::ies::{build_qp, operating_cost, IesConfig, ScenarioSeries};
use ies_e2e::qp::{SolveOptions, DEFAULT_EPS};

fn battery_only() -> IesConfig {
    let mut cfg = IesConfig::default();
    cfg.horizon_steps = 2;
    for st in [&mut cfg.tes, &mut cfg.ces] {
        st.rate_max = 0.0;
        st.s_min = 0.0;
        st.s_max = 0.0;
    }
    cfg.ess.s_min = 0.0;
    cfg.ess.s_init = Some(0.0);
    cfg.hess.p_el_max = 0.0;
    cfg.hess.tank_max = 0.0;
    cfg.hess.tank_init = None;
    cfg.hess.buy_max = 0.0;
    cfg.ac.g_ac_max = 0.0;
    cfg.chiller.p_max = 0.0;
    cfg.pv.area_m2 = 0.0;
    cfg.stc.area_m2 = 0.0;
    cfg
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = battery_only();
    let mut s = ScenarioSeries::flat(2, 0.1, 0.0, 0.0);
    s.price_buy[1] = 0.3;
    s.bldg_elec[1] = 50.0;
    let d = build_qp(&cfg, &s)?.regularized(DEFAULT_EPS).dispatch(&s, &SolveOptions::default())?;

    let charge = 50.0 / (cfg.ess.eta_ch * cfg.ess.eta_dis);
    for t in 0..2 {
        println!(
            "hour {t} at price {:.1}: buy {:7.3} kW, charge {:7.3} kW, discharge {:7.3} kW",
            s.price_buy[t],
            d.schedule.grid_buy()[t],
            d.schedule.ess_ch()[t],
            d.schedule.ess_dis()[t]
        );
    }
    println!(
        "cost {:.4}, closed form {:.4} (buying at the peak would cost {:.4})",
        operating_cost(&d.schedule, &s, cfg.step_hours),
        0.1 * charge,
        0.3 * 50.0
    );
    Ok(())
}
