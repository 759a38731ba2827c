mod common;

use approx::assert_abs_diff_eq;
use common::{
    fd_prediction_gradient, family_dims, random_known_bound_qp, random_known_qp, rel_err, KnownQp,
};
use ies_e2e::qp::{
    self, backward, duality_gap, kkt_blocks, kkt_residual, ConstraintRef, ParamQP, QpData,
    QpError, SolveOptions,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dv(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

fn dm(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(r, c, v)
}

/// min x^2 s.t. x >= y
fn square_above(q: f64) -> ParamQP {
    let mut d = QpData::zeros(1, 1).with_ineq(dm(1, 1, &[-1.0]), dv(&[0.0]), dm(1, 1, &[-1.0]));
    d.quad_cost = dm(1, 1, &[q]);
    d.into_qp().unwrap()
}

#[test]
fn square_with_lower_bound() {
    let qp = square_above(2.0);
    let sol = qp::solve(&qp, &dv(&[1.0]), &SolveOptions::default()).unwrap();
    assert_abs_diff_eq!(sol.primal[0], 1.0, epsilon = 1e-6);
    assert_abs_diff_eq!(sol.ineq_duals[0], 2.0, epsilon = 1e-6);
    assert!(sol.kkt_residual <= 1e-8);
}

#[test]
fn box_lp_picks_vertex() {
    let g = dm(4, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]);
    let mut d = QpData::zeros(2, 1).with_ineq(g, dv(&[1.0, 1.0, 0.0, 0.0]), DMatrix::zeros(4, 1));
    d.lin_cost = dv(&[1.0, -1.0]);
    let qp = d.into_qp().unwrap().regularize(1e-6);
    let sol = qp::solve(&qp, &dv(&[0.0]), &SolveOptions::default()).unwrap();
    assert_abs_diff_eq!(sol.primal[0], 0.0, epsilon = 1e-4);
    assert_abs_diff_eq!(sol.primal[1], 1.0, epsilon = 1e-4);
}

#[test]
fn unconstrained_quadratic() {
    let mut d = QpData::zeros(2, 1);
    d.quad_cost = dm(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    d.lin_cost = dv(&[-1.0, 1.0]);
    let qp = d.into_qp().unwrap();
    let sol = qp::solve(&qp, &dv(&[0.0]), &SolveOptions::default()).unwrap();
    let expect = qp
        .quad_cost()
        .clone()
        .lu()
        .solve(&-qp.lin_cost())
        .unwrap();
    assert!((sol.primal - expect).amax() < 1e-10);
}

#[test]
fn recovers_planted_solution() {
    // Q has eigenvalues down to 1e-3, so the primal error is roughly
    // 1e3 times the KKT residual; solve tightly.
    let opts = SolveOptions::with_tol(1e-10);
    for seed in 0..20 {
        let (n, m, p, k) = family_dims(seed);
        let known = random_known_qp(seed, n, m, p, k, 1e-3);
        let sol = qp::solve(&known.qp, &known.prediction, &opts)
            .unwrap_or_else(|e| panic!("seed {seed} ({n},{m},{p}): {e}"));
        assert!(
            (&sol.primal - &known.x).amax() < 1e-6,
            "seed {seed}: primal off by {}",
            (&sol.primal - &known.x).amax()
        );
        assert!((&sol.ineq_duals - &known.mu).amax() < 1e-6, "seed {seed}: mu");
        assert!((&sol.eq_duals - &known.lambda).amax() < 1e-6, "seed {seed}: lambda");
        assert!(kkt_residual(&known.qp, &known.prediction, &sol) <= 1e-10);
    }
}

/// Two-step single battery against a grid with two prices, checked by
/// enumerating net battery power on a 0.1 kW lattice. All data sit on the
/// lattice so the LP optimum is one of the enumerated points.
struct Battery {
    price: [f64; 2],
    soc_init: f64,
    cap: f64,
}

const CH_MAX: f64 = 4.9;
const DIS_MAX: f64 = 5.0;

impl Battery {
    // columns: ch0 ch1 dis0 dis1 soc0 soc1 grid0 grid1; prediction = demand
    fn qp(&self) -> ParamQP {
        let mut a = DMatrix::zeros(4, 8);
        let mut b0 = DVector::zeros(4);
        let mut bs = DMatrix::zeros(4, 2);
        for t in 0..2 {
            a[(t, 4 + t)] = 1.0;
            if t > 0 {
                a[(t, 4 + t - 1)] = -1.0;
            } else {
                b0[t] = self.soc_init;
            }
            a[(t, t)] = -1.0;
            a[(t, 2 + t)] = 1.0;
            let r = 2 + t;
            a[(r, 6 + t)] = 1.0;
            a[(r, 2 + t)] = 1.0;
            a[(r, t)] = -1.0;
            bs[(r, t)] = 1.0;
        }
        let mut g = Vec::new();
        let mut h = Vec::new();
        let mut bound = |col: usize, lo: f64, hi: Option<f64>| {
            let mut row = vec![0.0; 8];
            row[col] = -1.0;
            g.push(row.clone());
            h.push(-lo);
            if let Some(hi) = hi {
                row[col] = 1.0;
                g.push(row);
                h.push(hi);
            }
        };
        for t in 0..2 {
            bound(t, 0.0, Some(CH_MAX));
            bound(2 + t, 0.0, Some(DIS_MAX));
            bound(4 + t, 0.0, Some(self.cap));
            bound(6 + t, 0.0, None);
        }
        let p = g.len();
        let gm = DMatrix::from_fn(p, 8, |i, j| g[i][j]);
        let mut d = QpData::zeros(8, 2)
            .with_eq(a, b0, bs)
            .with_ineq(gm, DVector::from_vec(h), DMatrix::zeros(p, 2));
        d.lin_cost[6] = self.price[0];
        d.lin_cost[7] = self.price[1];
        d.into_qp().unwrap()
    }

    fn brute_force(&self, demand: [f64; 2]) -> f64 {
        let mut best = f64::INFINITY;
        let net = |i: i32| f64::from(i) * 0.1;
        for i in -50..=49 {
            for j in -50..=49 {
                let (u0, u1) = (net(i), net(j));
                let s0 = self.soc_init + u0;
                let s1 = s0 + u1;
                let tol = 1e-9;
                if s0 < -tol || s0 > self.cap + tol || s1 < -tol || s1 > self.cap + tol {
                    continue;
                }
                let g0 = demand[0] + u0;
                let g1 = demand[1] + u1;
                if g0 < -tol || g1 < -tol {
                    continue;
                }
                best = best.min(self.price[0] * g0 + self.price[1] * g1);
            }
        }
        best
    }
}

#[test]
fn battery_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lattice = |rng: &mut ChaCha8Rng, lo: i32, hi: i32| f64::from(rng.random_range(lo..=hi)) * 0.1;
    for case in 0..12 {
        let bat = Battery {
            price: [lattice(&mut rng, 1, 40), lattice(&mut rng, 1, 40)],
            soc_init: lattice(&mut rng, 0, 40),
            cap: 4.0,
        };
        let demand = [lattice(&mut rng, 0, 60), lattice(&mut rng, 0, 60)];
        let qp = bat.qp().regularize(1e-6);
        let sol = qp::solve(&qp, &dv(&demand), &SolveOptions::default()).unwrap();
        let cost = bat.price[0] * sol.primal[6] + bat.price[1] * sol.primal[7];
        let expect = bat.brute_force(demand);
        assert!(
            (cost - expect).abs() <= 1e-3,
            "case {case}: qp {cost} vs enumeration {expect}"
        );
    }
}

#[test]
fn battery_arbitrage_schedule() {
    let bat = Battery {
        price: [1.0, 3.0],
        soc_init: 1.0,
        cap: 4.0,
    };
    let qp = bat.qp().regularize(1e-6);
    let sol = qp::solve(&qp, &dv(&[2.0, 3.0]), &SolveOptions::default()).unwrap();
    let u0 = sol.primal[0] - sol.primal[2];
    let u1 = sol.primal[1] - sol.primal[3];
    assert_abs_diff_eq!(u0, 2.0, epsilon = 1e-3);
    assert_abs_diff_eq!(u1, -3.0, epsilon = 1e-3);
    assert_abs_diff_eq!(bat.brute_force([2.0, 3.0]), 4.0, epsilon = 1e-9);
}

#[test]
fn redundant_equalities_are_dropped() {
    // x1 + x2 = y stated twice and once scaled
    let a = dm(3, 2, &[1.0, 1.0, 1.0, 1.0, 2.0, 2.0]);
    let mut d = QpData::zeros(2, 1).with_eq(a, dv(&[0.0, 0.0, 0.0]), dm(3, 1, &[1.0, 1.0, 2.0]));
    d.quad_cost = DMatrix::identity(2, 2);
    let qp = d.into_qp().unwrap();
    assert_eq!(qp.independent_eq_rows(), vec![0]);
    let sol = qp::solve(&qp, &dv(&[3.0]), &SolveOptions::default()).unwrap();
    assert_abs_diff_eq!(sol.primal[0], 1.5, epsilon = 1e-8);
    assert_abs_diff_eq!(sol.primal[1], 1.5, epsilon = 1e-8);
    assert_eq!(sol.eq_duals[1], 0.0);
    assert_eq!(sol.eq_duals[2], 0.0);
    let grad = backward(&qp, &sol, &dv(&[3.0]), &dv(&[1.0, 0.0])).unwrap();
    assert_abs_diff_eq!(grad[0], 0.5, epsilon = 1e-8);
}

#[test]
fn fixed_variable_by_equal_bounds() {
    // 2 <= x <= 2
    let mut d = QpData::zeros(1, 1).with_ineq(dm(2, 1, &[1.0, -1.0]), dv(&[2.0, -2.0]), DMatrix::zeros(2, 1));
    d.lin_cost = dv(&[1.0]);
    let qp = d.into_qp().unwrap().regularize(1e-4);
    let sol = qp::solve(&qp, &dv(&[0.0]), &SolveOptions::default()).unwrap();
    assert_abs_diff_eq!(sol.primal[0], 2.0, epsilon = 1e-7);
}

#[test]
fn infeasible_reports_row() {
    // x >= 2 and x <= 1
    let mut d = QpData::zeros(1, 1).with_ineq(dm(2, 1, &[-1.0, 1.0]), dv(&[-2.0, 1.0]), DMatrix::zeros(2, 1));
    d.quad_cost = dm(1, 1, &[1.0]);
    let qp = d.into_qp().unwrap();
    match qp::solve(&qp, &dv(&[0.0]), &SolveOptions::default()) {
        Err(QpError::Infeasible { residual, constraint }) => {
            assert!(residual > 0.1);
            assert!(matches!(constraint, Some(ConstraintRef::Ineq(_))));
        }
        other => panic!("expected infeasible, got {other:?}"),
    }
}

#[test]
fn inconsistent_equalities_are_infeasible() {
    let a = dm(2, 1, &[1.0, 1.0]);
    let mut d = QpData::zeros(1, 1).with_eq(a, dv(&[1.0, 2.0]), DMatrix::zeros(2, 1));
    d.quad_cost = dm(1, 1, &[1.0]);
    let qp = d.into_qp().unwrap();
    match qp::solve(&qp, &dv(&[0.0]), &SolveOptions::default()) {
        Err(QpError::Infeasible { constraint, .. }) => {
            assert!(matches!(constraint, Some(ConstraintRef::Eq(_))));
        }
        other => panic!("expected infeasible, got {other:?}"),
    }
}

#[test]
fn unregularized_lp_ray_is_unbounded() {
    // min -x s.t. x >= 0
    let mut d = QpData::zeros(1, 1).with_ineq(dm(1, 1, &[-1.0]), dv(&[0.0]), DMatrix::zeros(1, 1));
    d.lin_cost = dv(&[-1.0]);
    let qp = d.into_qp().unwrap();
    let err = qp::solve(&qp, &dv(&[0.0]), &SolveOptions::default()).unwrap_err();
    assert!(matches!(err, QpError::Unbounded), "{err:?}");
}

#[test]
fn kkt_residual_blocks_are_separate() {
    let qp = square_above(2.0);
    let y = dv(&[1.0]);
    let none = DVector::zeros(0);
    let exact = kkt_blocks(&qp, &y, &dv(&[1.0]), &none, &dv(&[2.0]));
    assert_eq!(exact.residual(), 0.0);

    // stationarity: 2x - mu
    let b = kkt_blocks(&qp, &y, &dv(&[1.0]), &none, &dv(&[1.5]));
    assert_abs_diff_eq!(b.stationarity, 0.5, epsilon = 1e-15);
    assert_eq!(b.complementarity, 0.0);

    // complementarity: mu * (g x - h) at an interior point
    let b = kkt_blocks(&qp, &y, &dv(&[1.25]), &none, &dv(&[2.5]));
    assert_eq!(b.stationarity, 0.0);
    assert_abs_diff_eq!(b.complementarity, 0.625, epsilon = 1e-15);

    // equality block
    let mut d = QpData::zeros(1, 1).with_eq(dm(1, 1, &[1.0]), dv(&[0.0]), dm(1, 1, &[1.0]));
    d.quad_cost = dm(1, 1, &[1.0]);
    let qp = d.into_qp().unwrap();
    let b = kkt_blocks(&qp, &dv(&[2.0]), &dv(&[1.5]), &dv(&[-1.5]), &DVector::zeros(0));
    assert_eq!(b.stationarity, 0.0);
    assert_abs_diff_eq!(b.equality, 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(b.residual(), 0.5, epsilon = 1e-15);
}

#[test]
fn duality_gap_vanishes_at_solution() {
    for seed in 100..110 {
        let (n, m, p, k) = family_dims(seed);
        let known = random_known_qp(seed, n, m, p, k, 1e-3);
        let sol = qp::solve(&known.qp, &known.prediction, &SolveOptions::default()).unwrap();
        let gap = duality_gap(&known.qp, &known.prediction, &sol);
        assert!(gap.abs() < 1e-6, "seed {seed}: gap {gap}");
    }
}

#[test]
fn solve_is_deterministic() {
    let known = random_known_qp(3, 30, 6, 20, 4, 1e-3);
    let a = qp::solve(&known.qp, &known.prediction, &SolveOptions::default()).unwrap();
    let b = qp::solve(&known.qp, &known.prediction, &SolveOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn backward_of_active_lower_bound() {
    // x* = y while the bound is active
    let qp = square_above(2.0);
    let y = dv(&[1.0]);
    let sol = qp::solve(&qp, &y, &SolveOptions::default()).unwrap();
    let grad = backward(&qp, &sol, &y, &dv(&[1.0])).unwrap();
    assert_abs_diff_eq!(grad[0], 1.0, epsilon = 1e-6);

    // inactive bound: x* = 0 for y = -1
    let y = dv(&[-1.0]);
    let sol = qp::solve(&qp, &y, &SolveOptions::default()).unwrap();
    let grad = backward(&qp, &sol, &y, &dv(&[1.0])).unwrap();
    assert_abs_diff_eq!(grad[0], 0.0, epsilon = 1e-6);
}

#[test]
fn backward_through_equality() {
    // min (x - 3)^2 s.t. x = y, so dx/dy = 1
    let mut d = QpData::zeros(1, 1).with_eq(dm(1, 1, &[1.0]), dv(&[0.0]), dm(1, 1, &[1.0]));
    d.quad_cost = dm(1, 1, &[2.0]);
    d.lin_cost = dv(&[-6.0]);
    let qp = d.into_qp().unwrap();
    let y = dv(&[0.7]);
    let sol = qp::solve(&qp, &y, &SolveOptions::default()).unwrap();
    let grad = backward(&qp, &sol, &y, &dv(&[1.0])).unwrap();
    assert_abs_diff_eq!(grad[0], 1.0, epsilon = 1e-10);
}

fn check_backward_against_fd(seed: u64, known: &KnownQp) {
    let tight = SolveOptions {
        tol: 1e-11,
        max_iter: 200,
    };
    let n = known.qp.n_vars();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let target = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let loss = |x: &DVector<f64>| w.dot(x) + 0.5 * (x - &target).norm_squared();

    let sol = qp::solve(&known.qp, &known.prediction, &tight).unwrap();
    let dl_dx = &w + (&sol.primal - &target);
    let analytic = backward(&known.qp, &sol, &known.prediction, &dl_dx).unwrap();
    let numeric = fd_prediction_gradient(&known.qp, &known.prediction, loss, 1e-5, &tight);
    let err = rel_err(&analytic, &numeric, 1e-3);
    assert!(
        err <= 1e-4,
        "seed {seed}: rel err {err:e}\n{analytic}\n{numeric}"
    );
}

#[test]
fn backward_matches_finite_differences() {
    for seed in 200..220 {
        let (n, m, p, k) = family_dims(seed);
        check_backward_against_fd(seed, &random_known_qp(seed, n, m, p, k, 1e-2));
    }
}

#[test]
fn backward_matches_finite_differences_on_bound_rows() {
    for seed in 300..320 {
        let (n, m, p, k) = family_dims(seed);
        let known = random_known_bound_qp(seed, n, m, p, k, 1e-2);
        assert!(known.qp.quad_is_diagonal());
        check_backward_against_fd(seed, &known);
    }
}

#[test]
fn json_dump_round_trips_through_solver() {
    let known = random_known_qp(11, 12, 3, 8, 2, 1e-3);
    let mut buf = Vec::new();
    known.qp.write_json(&mut buf, None).unwrap();
    let (back, _) = ParamQP::read_json(buf.as_slice()).unwrap();
    let a = qp::solve(&known.qp, &known.prediction, &SolveOptions::default()).unwrap();
    let b = qp::solve(&back, &known.prediction, &SolveOptions::default()).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn argmin_invariant_to_cost_scaling(seed in 0u64..1000, scale in 0.1f64..10.0) {
        let known = random_known_qp(seed, 10, 2, 8, 2, 1e-3);
        let mut d = known.qp.data().clone();
        d.quad_cost *= scale;
        d.lin_cost *= scale;
        let scaled = d.into_qp().unwrap();
        let opts = SolveOptions::default();
        let a = qp::solve(&known.qp, &known.prediction, &opts).unwrap();
        let b = qp::solve(&scaled, &known.prediction, &opts).unwrap();
        prop_assert!((&a.primal - &b.primal).amax() < 1e-6);
        prop_assert!((&a.ineq_duals * scale - &b.ineq_duals).amax() < 1e-5 * scale.max(1.0));
    }

    #[test]
    fn solutions_are_feasible(seed in 0u64..1000, shift in -0.05f64..0.05) {
        let (n, m, p, k) = family_dims(seed);
        let known = random_known_qp(seed, n, m, p, k, 1e-3);
        let y = known.prediction.add_scalar(shift);
        let sol = qp::solve(&known.qp, &y, &SolveOptions::default()).unwrap();
        let eq = known.qp.eq_matrix() * &sol.primal - known.qp.eq_rhs(&y);
        let ineq = known.qp.ineq_matrix() * &sol.primal - known.qp.ineq_rhs(&y);
        prop_assert!(eq.amax() < 1e-7);
        prop_assert!(ineq.max() < 1e-7);
        prop_assert!(sol.ineq_duals.min() >= 0.0);
    }
}
