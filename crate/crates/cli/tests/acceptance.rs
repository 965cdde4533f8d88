//! Acceptance suite: one test per shipped guarantee, each printing a
//! PASS line with the measured values. Run with `cargo test --test acceptance`.

use std::time::Instant;

use conorbit::reproduce::{self};
use conorbit::scenario::preset;
use conorbit_core::critical::{
    bracket_critical, chain_audit, chain_audit_values, k_n_estimate, k_obstruction, rect_loop,
    BracketConfig, BracketTarget,
};
use conorbit_core::flow::{
    integrate_el, no_connection_certificate, verify_solution, ConnectionVerdict,
    FlowState,
};
use conorbit_core::geom::{wrap_unit, Vec2};
use conorbit_core::models::{PsiProfile, SurfaceModel};
use conorbit_core::pathspace::{
    action_gradient, discrete_action, loop_action, BoundarySpec, CosetLabel, CurveKind,
    DiscretePath, LoopPath,
};
use conorbit_core::solvers::{
    minimize_action, mountain_pass, straight_seed, struwe_scan, MinimizeConfig, SolveVerdict,
    StringConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn torus_magnetic() -> SurfaceModel {
    SurfaceModel::torus_magnetic(PsiProfile::default()).unwrap()
}

#[test]
fn criterion_01_torus_closed_form_actions() {
    let start = Instant::now();
    let model = torus_magnetic();
    // unit-speed loop along the bump peak: action k - 1/2, any resolution
    for k in [0.1, 0.3, 0.45, 0.7] {
        for n in [8, 32, 128] {
            let lp =
                LoopPath::straight(model.chart(), Vec2::new(0.0, 0.5), [-1, 0], n, 1.0).unwrap();
            let a = loop_action(&model, &lp, k).unwrap().action;
            assert!(
                (a - (k - 0.5)).abs() <= 1e-12,
                "loop action {a} vs {} at k = {k}, n = {n}",
                k - 0.5
            );
        }
    }
    // rectangle concatenations at constant speed sqrt(2k)
    let peak = model.psi().unwrap().peak();
    for k in [0.045, 0.08, 0.125] {
        for n in 1..=10usize {
            let lp = rect_loop(peak, 0.0, n, k);
            let a = loop_action(&model, &lp, k).unwrap().action;
            let expected = n as f64 * (2.0 * (2.0 * k).sqrt() - 1.0) + (2.0 * k).sqrt();
            assert!(
                (a - expected).abs() <= 1e-10,
                "rectangle family n = {n}, k = {k}: {a} vs {expected}"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("[PASS] criterion 1: closed-form torus actions exact ({elapsed:?})");
}

#[test]
fn criterion_02_critical_value_brackets() {
    let start = Instant::now();
    let model = torus_magnetic();
    let cfg = BracketConfig::default();
    let c = bracket_critical(&model, &BracketTarget::ManeC, (0.0, 1.0), &cfg).unwrap();
    assert!(c.contains(0.5), "c bracket [{}, {}]", c.lower, c.upper);
    assert!(c.width() <= 0.05, "c width {}", c.width());
    assert!(c.lower_certified);
    let cu = bracket_critical(&model, &BracketTarget::ManeCuC0, (0.0, 1.0), &cfg).unwrap();
    assert!(cu.contains(0.125), "c_u bracket [{}, {}]", cu.lower, cu.upper);
    assert!(cu.width() <= 0.05, "c_u width {}", cu.width());
    assert!(cu.lower_certified);
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 2: c in [{:.4}, {:.4}], c_u in [{:.4}, {:.4}] ({elapsed:?})",
        c.lower, c.upper, cu.lower, cu.upper
    );
}

#[test]
fn criterion_03_obstruction_and_chain_audits() {
    let start = Instant::now();
    let (model, q0, q1) = preset("torus_point_to_circle").unwrap();
    let k = k_obstruction(&model, &q0, &q1);
    assert!((k - 0.5).abs() <= 1e-4, "obstruction level {k}");

    let cfg = BracketConfig::default();
    // torus scenarios: audit with the pair value included
    for name in [
        "torus_point_to_circle",
        "torus_intersecting_circles",
        "torus_two_circles",
        "torus_orthogonal_circles",
    ] {
        let (model, q0, q1) = preset(name).unwrap();
        chain_audit(&model, Some((&q0, &q1)), &cfg)
            .unwrap_or_else(|e| panic!("chain audit failed on {name}: {e}"));
    }
    // mechanical model: the chain collapses onto the potential maximum
    let mech = SurfaceModel::torus_mechanical(0.7).unwrap();
    chain_audit(&mech, None, &cfg).unwrap();
    // half-plane scenarios carry recorded values (the grid estimator is
    // torus-only); the canonical primitive has critical level 1/2
    chain_audit_values(0.0, (0.5, 0.5), None, (0.5, 0.5), 0.5).unwrap();
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!("[PASS] criterion 3: obstruction level {k:.6}; chain audits green ({elapsed:?})");
}

#[test]
fn criterion_04_conservation_oracles() {
    let model = torus_magnetic();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut worst_i: f64 = 0.0;
    for _ in 0..4 {
        let q = Vec2::new(rng.gen(), rng.gen());
        let ang = rng.gen_range(0.0..std::f64::consts::TAU);
        let speed = rng.gen_range(0.4..1.4);
        let v = Vec2::new(ang.cos(), ang.sin()) * speed;
        let i0 = model.momentum_integral(q, v).unwrap();
        let traj = integrate_el(&model, FlowState { q, v, t: 0.0 }, 10.0, 1e-3).unwrap();
        for s in &traj.states {
            worst_i = worst_i.max((model.momentum_integral(s.q, s.v).unwrap() - i0).abs());
        }
    }
    assert!(worst_i <= 1e-8, "momentum drift {worst_i:.3e}");

    let builtins = [
        (torus_magnetic(), Vec2::new(0.2, 0.3), Vec2::new(0.6, 0.4)),
        (
            SurfaceModel::torus_mechanical(0.7).unwrap(),
            Vec2::new(0.5, 0.25),
            Vec2::new(0.4, 0.5),
        ),
        (
            SurfaceModel::half_plane_horocycle(1.0).unwrap(),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.5, 0.0),
        ),
        (
            SurfaceModel::plane_patch_custom(conorbit_core::geom::Rect::unit(), 1.0, 0.0)
                .unwrap(),
            Vec2::new(0.5, 0.5),
            Vec2::new(0.2, 0.0),
        ),
    ];
    let mut worst_e: f64 = 0.0;
    for (m, q, v) in builtins {
        let traj = integrate_el(&m, FlowState { q, v, t: 0.0 }, 10.0, 1e-3).unwrap();
        worst_e = worst_e.max(traj.energy_drift(&m) / 10.0);
    }
    assert!(worst_e <= 1e-7, "energy drift {worst_e:.3e} per unit time");
    println!(
        "[PASS] criterion 4: momentum drift {worst_i:.2e} <= 1e-8, energy drift {worst_e:.2e}/t <= 1e-7"
    );
}

#[test]
fn criterion_05_no_connection_certificates() {
    let model = torus_magnetic();
    let p0 = Vec2::new(0.5, 0.0);
    let p1 = Vec2::new(0.5, 0.5);
    let c = no_connection_certificate(&model, p0, p1, 0.08).unwrap();
    assert_eq!(c.verdict, ConnectionVerdict::Disjoint);
    let c = no_connection_certificate(&model, p0, p1, 0.125).unwrap();
    assert_eq!(c.verdict, ConnectionVerdict::Overlap { contact: true });
    println!("[PASS] criterion 5: DISJOINT at k = 0.08, contact OVERLAP at k = 0.125");
}

#[test]
fn criterion_06_supercritical_minimizers() {
    let start = Instant::now();
    let (model, q0, q1) = preset("torus_point_to_circle").unwrap();
    let k = 0.75;
    let n = 256;
    let cfg = MinimizeConfig {
        n_segments: n,
        max_iters: 60_000,
        grad_tol: 3e-8,
        ..Default::default()
    };
    let mut labels: Vec<CosetLabel> = Vec::new();
    for w in [-1i64, 0, 1] {
        let init = straight_seed(&model, &q0, &q1, None, Some(0.5), [0, w], k, n).unwrap();
        let rep = minimize_action(&model, &q0, &q1, k, &init, &cfg).unwrap();
        assert_eq!(rep.verdict, SolveVerdict::Converged, "winding {w}");
        let res = rep.residuals.unwrap();
        assert!(res.conormal_0 <= 1e-5 && res.conormal_1 <= 1e-5, "conormal {:?}", res);
        assert!(res.energy_mismatch.abs() <= 1e-5, "energy {:?}", res.energy_mismatch);
        assert!(res.shooting_gap <= 1e-3, "gap {:?}", res.shooting_gap);
        assert_eq!(rep.bound_violations, 0);
        labels.push(rep.component.unwrap());
    }
    labels.sort_by_key(|l| l.0);
    labels.dedup();
    assert!(labels.len() >= 3, "components {labels:?}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 6: minimizers in {} distinct components at k = 0.75 ({elapsed:?})",
        labels.len()
    );
}

#[test]
fn criterion_07_flat_geodesic_actions() {
    let model = SurfaceModel::torus_mechanical(0.0).unwrap();
    let k = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = MinimizeConfig {
        n_segments: 32,
        max_iters: 20_000,
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let a = Vec2::new(rng.gen(), rng.gen());
        let b = Vec2::new(rng.gen(), rng.gen());
        let d = model.chart().distance(a, b);
        if d < 1e-3 {
            continue;
        }
        let q0 = BoundarySpec::Point(a);
        let q1 = BoundarySpec::Point(b);
        let mut init = straight_seed(&model, &q0, &q1, None, None, [0, 0], k, 32).unwrap();
        init.t_total *= 1.7; // start away from the optimal time
        let rep = minimize_action(&model, &q0, &q1, k, &init, &cfg).unwrap();
        assert_eq!(rep.verdict, SolveVerdict::Converged);
        worst = worst.max((rep.action.action - d * (2.0 * k).sqrt()).abs());
    }
    assert!(worst <= 1e-4, "worst action defect {worst:.3e}");
    println!("[PASS] criterion 7: geodesic actions match d sqrt(2k), worst defect {worst:.2e}");
}

#[test]
fn criterion_08_mountain_pass_and_scan() {
    let start = Instant::now();
    let (model, q0, q1) = preset("torus_intersecting_circles").unwrap();
    let sc = conorbit::scenario::Scenario {
        name: "mp".into(),
        model: model.clone(),
        q0,
        q1,
        task: conorbit::scenario::Task::Reproduce { name: None },
        seed: 0,
    };
    let epsilon = 0.05;
    let anchor = sc.anchor(epsilon).unwrap();
    let cfg = StringConfig::default();

    let k = 0.25;
    let (rep, _) = mountain_pass(&model, &q0, &q1, &anchor, k, &cfg, None).unwrap();
    assert_eq!(rep.verdict, SolveVerdict::Converged);
    let a = model.quadratic_bounds().a;
    let alpha = 2.0 * epsilon * (a * k).sqrt();
    assert!(
        rep.minimax_value >= alpha,
        "minimax {} below barrier {alpha}",
        rep.minimax_value
    );
    assert!(
        rep.saddle_grad_norm <= 1e-4,
        "saddle residual {}",
        rep.saddle_grad_norm
    );
    // theta vanishes near the anchor, so the scenario barrier equals the
    // theta-free bound
    assert!(rep.alpha.theta_free.is_some());
    assert!((rep.alpha.best() - alpha).abs() <= 1e-12);

    let grid: Vec<f64> = (0..7).map(|i| 0.15 + 0.05 * i as f64).collect();
    let curve = struwe_scan(&model, &q0, &q1, &anchor, &grid, &cfg).unwrap();
    assert!(
        curve.monotonicity_defect() <= 1e-6,
        "monotonicity defect {}",
        curve.monotonicity_defect()
    );
    // failures are permitted but must be flagged; every converged row must
    // carry a small residual and the quotient time bound
    let converged = curve.rows.iter().filter(|r| r.converged).count();
    for r in &curve.rows {
        if r.converged {
            assert!(r.residual <= 1e-4 * 10.0, "k = {}: residual {}", r.k, r.residual);
            assert!(r.t_bounded, "k = {}: time bound violated", r.k);
        }
    }
    assert!(converged >= 5, "only {converged} of {} energies converged", curve.rows.len());
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 8: minimax {:.4} >= {alpha:.4}; scan monotone, {converged}/7 converged ({elapsed:?})",
        rep.minimax_value
    );
}

#[test]
fn criterion_09_component_threshold_bracket() {
    let (model, q0, q1) = preset("torus_intersecting_circles").unwrap();
    let mut cfg = BracketConfig::default();
    cfg.probe.n_segments = 48;
    let b = k_n_estimate(&model, &q0, &q1, CosetLabel([0, 0]), (0.25, 0.75), &cfg).unwrap();
    assert!(
        b.lower - 1e-9 <= 0.5 && 0.5 <= b.upper + 1e-9,
        "bracket [{}, {}]",
        b.lower,
        b.upper
    );
    assert!(b.upper - b.lower <= 0.05, "width {}", b.upper - b.lower);
    assert!(b.lower_certified);
    // the witness is a negative straight chord through both circles
    let (_, action, at_k) = b.witness.as_ref().unwrap().clone();
    assert!(action < 0.0 && at_k < 0.5);
    println!(
        "[PASS] criterion 9: threshold bracket [{:.4}, {:.4}] contains 1/2",
        b.lower, b.upper
    );
}

#[test]
fn criterion_10_hyperbolic_fixtures() {
    // delegated to the reproduce suite so the CLI surface is exercised too
    let rows = reproduce::run(Some("hyperbolic_circles"), 0).unwrap();
    assert!(rows.iter().all(|r| r.pass), "failing rows: {:#?}", rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| &r.check)
        .collect::<Vec<_>>());
    let rows = reproduce::run(Some("horocycle_orbit"), 0).unwrap();
    assert!(rows.iter().all(|r| r.pass));
    println!("[PASS] criterion 10: hyperbolic circle geometry, action signs, orbit closure");
}

#[test]
fn criterion_11_property_suites() {
    // finite-difference gradient agreement on 100 random paths
    let model = torus_magnetic();
    let q0 = BoundarySpec::Curve(CurveKind::Circle {
        center: Vec2::new(0.35, 0.5),
        radius: 0.25,
    });
    let q1 = BoundarySpec::Curve(CurveKind::HorizontalCircle { y: 0.5 });
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let mut path = DiscretePath::straight(
            model.chart(),
            &q0,
            &q1,
            Some(rng.gen()),
            Some(rng.gen()),
            [0, 0],
            16,
            rng.gen_range(0.3..1.5),
        )
        .unwrap();
        for p in &mut path.interior {
            *p = Vec2::new(
                wrap_unit(p.x + rng.gen_range(-0.02..0.02)),
                wrap_unit(p.y + rng.gen_range(-0.02..0.02)),
            );
        }
        let k = rng.gen_range(0.05..1.0);
        let (_, grad) = action_gradient(&model, &q0, &q1, &path, k).unwrap();
        let flat = grad.flat();
        let h = 1e-6;
        // spot-check a third of the coordinates per path
        for idx in (0..flat.len()).step_by(3) {
            let eval = |p: &DiscretePath| discrete_action(&model, &q0, &q1, p, k).unwrap().action;
            let mut up = path.clone();
            let mut dn = path.clone();
            bump_coord(&mut up, idx, h);
            bump_coord(&mut dn, idx, -h);
            let fd = (eval(&up) - eval(&dn)) / (2.0 * h);
            assert!(
                (flat[idx] - fd).abs() <= 1e-5 * flat[idx].abs().max(1e-2),
                "coord {idx}: {} vs fd {fd}",
                flat[idx]
            );
        }
    }

    // Fenchel identities at 1e-9 on ten thousand samples
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10_000 {
        let q = Vec2::new(rng.gen(), rng.gen());
        let v = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let p = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let s = model.eval(q, v).unwrap();
        let h = model.hamiltonian(q, p).unwrap();
        assert!(p.dot(v) <= s.l + h + 1e-9);
        let h_dual = model.hamiltonian(q, s.dl_dv).unwrap();
        assert!((s.dl_dv.dot(v) - (s.l + h_dual)).abs() <= 1e-9);
        assert!((s.e - h_dual).abs() <= 1e-9);
    }

    // quadratic action bound never violated across a full minimization run
    // (debug assertions also enforce this inside every solver evaluation)
    let cfg = MinimizeConfig {
        n_segments: 64,
        max_iters: 20_000,
        ..Default::default()
    };
    let q0p = BoundarySpec::Point(Vec2::new(0.5, 0.0));
    let init = straight_seed(&model, &q0p, &q1, None, Some(0.5), [0, 0], 0.75, 64).unwrap();
    let rep = minimize_action(&model, &q0p, &q1, 0.75, &init, &cfg).unwrap();
    assert_eq!(rep.bound_violations, 0, "action bound violated during run");

    // quadrature order >= 1.8 on a smooth path
    let smooth_path = |n: usize| {
        let interior: Vec<Vec2> = (1..n)
            .map(|j| {
                let s = j as f64 / n as f64;
                Vec2::new(
                    wrap_unit(0.1 + 0.5 * s + 0.05 * (std::f64::consts::TAU * s).sin()),
                    wrap_unit(0.2 + 0.6 * s - 0.08 * (std::f64::consts::TAU * s).sin()),
                )
            })
            .collect();
        DiscretePath::new(None, interior, None, 0.9).unwrap()
    };
    let qa = BoundarySpec::Point(Vec2::new(0.1, 0.2));
    let qb = BoundarySpec::Point(Vec2::new(0.6, 0.8));
    let a1 = discrete_action(&model, &qa, &qb, &smooth_path(32), 0.4).unwrap().action;
    let a2 = discrete_action(&model, &qa, &qb, &smooth_path(64), 0.4).unwrap().action;
    let a4 = discrete_action(&model, &qa, &qb, &smooth_path(128), 0.4).unwrap().action;
    let quad_rate = ((a1 - a2).abs() / (a2 - a4).abs()).log2();
    assert!(quad_rate >= 1.8, "quadrature order {quad_rate}");

    // integrator order >= 3.8 against a fine reference
    let start = FlowState {
        q: Vec2::new(0.1, 0.45),
        v: Vec2::new(0.4, 0.8),
        t: 0.0,
    };
    let endpoint = |step: f64| {
        integrate_el(&model, start, 1.0, step).unwrap().last().q
    };
    let reference = endpoint(1.0 / 4096.0);
    let e1 = (endpoint(1.0 / 64.0) - reference).norm();
    let e2 = (endpoint(1.0 / 128.0) - reference).norm();
    let rk_rate = (e1 / e2).log2();
    assert!(rk_rate >= 3.8, "integrator order {rk_rate}");

    // shooting gap refines at order >= 1.5 for a converged minimizer
    let mut gaps = Vec::new();
    for n in [32usize, 64, 128] {
        let cfg = MinimizeConfig {
            n_segments: n,
            max_iters: 30_000,
            grad_tol: 1e-8,
            ..Default::default()
        };
        let init = straight_seed(&model, &q0p, &q1, None, Some(0.5), [0, 0], 0.75, n).unwrap();
        let rep = minimize_action(&model, &q0p, &q1, 0.75, &init, &cfg).unwrap();
        assert_eq!(rep.verdict, SolveVerdict::Converged);
        gaps.push(verify_solution(&model, &q0p, &q1, &rep.path, 0.75).shooting_gap);
    }
    let shoot_rate = (gaps[0] / gaps[2]).log2() / 2.0;
    assert!(shoot_rate >= 1.5, "shooting refinement order {shoot_rate} ({gaps:?})");

    println!(
        "[PASS] criterion 11: gradients 1e-5, duality 1e-9, bound clean, orders quad {quad_rate:.2} / rk {rk_rate:.2} / shoot {shoot_rate:.2}"
    );
}

fn bump_coord(path: &mut DiscretePath, idx: usize, h: f64) {
    let n_nodes = path.interior.len();
    if idx == 0 {
        path.s0 = Some(path.s0.unwrap() + h);
    } else if idx < 1 + 2 * n_nodes {
        let j = (idx - 1) / 2;
        if (idx - 1).is_multiple_of(2) {
            path.interior[j].x += h;
        } else {
            path.interior[j].y += h;
        }
    } else if idx == 1 + 2 * n_nodes {
        path.s1 = Some(path.s1.unwrap() + h);
    } else {
        path.t_total += h;
    }
}
