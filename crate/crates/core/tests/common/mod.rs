#![allow(dead_code)]

use ies_e2e::qp::{self, ParamQP, QpData, SolveOptions};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A QP whose primal-dual solution at `prediction` is known in closed form.
pub struct KnownQp {
    pub qp: ParamQP,
    pub prediction: DVector<f64>,
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
    pub mu: DVector<f64>,
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

/// Builds a strictly convex QP by picking the solution first: half of the
/// inequalities are active with multipliers in [0.5, 2], the rest inactive
/// with slacks in [0.5, 2], and the linear cost is set so stationarity holds.
/// The quadratic cost is `M'M` (rank `n/2`) plus `eps * I`.
pub fn random_known_qp(seed: u64, n: usize, m: usize, p: usize, k: usize, eps: f64) -> KnownQp {
    planted(seed, n, m, p, k, eps, false)
}

/// Like [`random_known_qp`] but with a diagonal `Q` (entries in
/// `[eps, 1]`) and inequality row `j` a signed bound on variable `j`.
pub fn random_known_bound_qp(seed: u64, n: usize, m: usize, p: usize, k: usize, eps: f64) -> KnownQp {
    planted(seed, n, m, p.min(n), k, eps, true)
}

fn planted(seed: u64, n: usize, m: usize, p: usize, k: usize, eps: f64, bounds: bool) -> KnownQp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (q, g) = if bounds {
        let q = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.random_range(eps..1.0)));
        let mut g = DMatrix::zeros(p, n);
        for j in 0..p {
            g[(j, j)] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        }
        (q, g)
    } else {
        let half = gaussian_matrix(&mut rng, n / 2 + 1, n);
        let mut q = half.transpose() * &half;
        for i in 0..n {
            q[(i, i)] += eps;
        }
        (q, gaussian_matrix(&mut rng, p, n))
    };
    let a = gaussian_matrix(&mut rng, m, n);
    let b_sens = gaussian_matrix(&mut rng, m, k);
    let h_sens = gaussian_matrix(&mut rng, p, k);
    let x = gaussian_vector(&mut rng, n);
    let lambda = gaussian_vector(&mut rng, m);
    let prediction = gaussian_vector(&mut rng, k);

    let n_active = p / 2;
    let mut mu = DVector::zeros(p);
    let mut slack = DVector::zeros(p);
    for j in 0..p {
        if j < n_active {
            mu[j] = rng.random_range(0.5..2.0);
        } else {
            slack[j] = rng.random_range(0.5..2.0);
        }
    }
    let b0 = &a * &x - &b_sens * &prediction;
    let h0 = &g * &x + &slack - &h_sens * &prediction;
    let c = -(&q * &x + a.tr_mul(&lambda) + g.tr_mul(&mu));

    let mut d = QpData::zeros(n, k)
        .with_eq(a, b0, b_sens)
        .with_ineq(g, h0, h_sens);
    d.quad_cost = q;
    d.lin_cost = c;
    KnownQp {
        qp: d.into_qp().expect("generated QP is valid"),
        prediction,
        x,
        lambda,
        mu,
    }
}

/// Dimensions for the `i`-th instance of a seeded family with `n <= 50`.
pub fn family_dims(seed: u64) -> (usize, usize, usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let n = rng.random_range(4..=50);
    let m = rng.random_range(0..=n / 3);
    let p = rng.random_range(2..=n);
    let k = rng.random_range(1..=6);
    (n, m, p, k)
}

/// Central finite differences of `loss(x*(y))` over every prediction coordinate.
pub fn fd_prediction_gradient(
    qp: &ParamQP,
    prediction: &DVector<f64>,
    loss: impl Fn(&DVector<f64>) -> f64,
    step: f64,
    opts: &SolveOptions,
) -> DVector<f64> {
    DVector::from_fn(prediction.len(), |i, _| {
        let mut up = prediction.clone();
        up[i] += step;
        let mut dn = prediction.clone();
        dn[i] -= step;
        let xu = qp::solve(qp, &up, opts).expect("fd solve +").primal;
        let xd = qp::solve(qp, &dn, opts).expect("fd solve -").primal;
        (loss(&xu) - loss(&xd)) / (2.0 * step)
    })
}

/// `|a - b|_inf / max(|b|_inf, floor)`
pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>, floor: f64) -> f64 {
    let diff = (a - b).amax();
    diff / b.amax().max(floor)
}

/// A hand-written summer day: solar noon peak, office-hours building load,
/// flat data center and two-tier prices.
pub fn typical_day(horizon: usize) -> ies_e2e::ies::ScenarioSeries {
    use std::f64::consts::PI;
    let mut s = ies_e2e::ies::ScenarioSeries::flat(horizon, 0.12, 0.05, 0.0);
    for t in 0..horizon {
        let hour = (t % 24) as f64;
        let day = (-(((hour - 12.5) / 3.5).powi(2))).exp();
        s.solar_rad[t] = if (6.0..=19.0).contains(&hour) { 0.8 * day } else { 0.0 };
        let office = 0.5 - 0.5 * (2.0 * PI * (hour - 3.0) / 24.0).cos();
        s.bldg_elec[t] = 150.0 + 200.0 * office;
        s.bldg_heat[t] = 50.0 + 20.0 * (1.0 - office);
        s.bldg_cool[t] = 60.0 + 120.0 * office;
        s.dc_elec[t] = 300.0;
        s.dc_waste_heat[t] = 50.0;
        if (8.0..22.0).contains(&hour) {
            s.price_buy[t] = 0.30;
        }
    }
    s
}

/// A configuration with every device switched off except the grid.
pub fn bare_config(horizon: usize) -> ies_e2e::ies::IesConfig {
    let mut cfg = ies_e2e::ies::IesConfig::default();
    cfg.horizon_steps = horizon;
    for st in [&mut cfg.ess, &mut cfg.tes, &mut cfg.ces] {
        st.rate_max = 0.0;
        st.s_min = 0.0;
        st.s_max = 0.0;
        st.s_init = None;
    }
    cfg.hess.p_el_max = 0.0;
    cfg.hess.tank_max = 0.0;
    cfg.hess.tank_init = None;
    cfg.hess.buy_max = 0.0;
    cfg.ac.g_ac_max = 0.0;
    cfg.chiller.p_max = 0.0;
    cfg.pv.area_m2 = 0.0;
    cfg.stc.area_m2 = 0.0;
    cfg.hp.eta_hp = 0.0;
    cfg
}

/// A day-ahead sample cut from a noisy typical day: `horizon` target hours
/// starting at `start_hour`, preceded by `history` hours.
pub fn slice_sample(seed: u64, start_hour: usize, history: usize, horizon: usize) -> ies_e2e::data::Sample {
    use ies_e2e::ies::Channel;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut day = typical_day(48);
    for ch in Channel::ALL {
        for v in day.channel_mut(ch) {
            *v *= 1.0 + rng.random_range(-0.2..0.2);
        }
    }
    let t0 = 24 + start_hour;
    let base = chrono::NaiveDate::from_ymd_opt(2024, 6, 4).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let stamps: Vec<_> = (0..horizon)
        .map(|h| base + chrono::Duration::hours((start_hour + h) as i64))
        .collect();
    let cut = |from: usize, len: usize| {
        let mut s = ies_e2e::ies::ScenarioSeries::flat(len, 0.0, 0.0, 0.0);
        for ch in Channel::ALL {
            *s.channel_mut(ch) = day.channel(ch)[from..from + len].to_vec();
        }
        s.price_buy = day.price_buy[from..from + len].to_vec();
        s.price_sell = day.price_sell[from..from + len].to_vec();
        s
    };
    ies_e2e::data::Sample {
        start: stamps[0],
        history: ies_e2e::data::channel_matrix(&cut(t0 - history, history)),
        calendar: ies_e2e::forecast::calendar_matrix(&stamps),
        actual: cut(t0, horizon),
    }
}
