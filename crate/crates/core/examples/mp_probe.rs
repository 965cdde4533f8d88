use conorbit_core::critical::{curve_intersections, nearest_param};
use conorbit_core::models::{PsiProfile, SurfaceModel};
use conorbit_core::pathspace::{BoundarySpec, CurveKind};
use conorbit_core::solvers::*;
use conorbit_core::geom::Vec2;

fn main() {
    let model = SurfaceModel::torus_magnetic(PsiProfile::default()).unwrap();
    let c0 = CurveKind::Circle { center: Vec2::new(0.4, 0.5), radius: 0.3 };
    let c1 = CurveKind::Circle { center: Vec2::new(0.6, 0.5), radius: 0.3 };
    let q0 = BoundarySpec::Curve(c0);
    let q1 = BoundarySpec::Curve(c1);
    let pts = curve_intersections(model.chart(), &q0, &q1, );
    println!("intersections: {:?}", pts);
    let omega = pts.iter().cloned().max_by(|a, b| a.y.total_cmp(&b.y)).unwrap();
    let anchor = OmegaAnchor {
        point: omega,
        s0: nearest_param(model.chart(), &c0, omega),
        s1: nearest_param(model.chart(), &c1, omega),
        epsilon: 0.05,
    };
    println!("anchor {:?}", anchor);
    let cfg = StringConfig::default();
    let t0 = std::time::Instant::now();
    let (rep, _state) = mountain_pass(&model, &q0, &q1, &anchor, 0.25, &cfg, None).unwrap();
    println!("k=0.25: verdict {:?} minimax {:.6} alpha {:?} (best {:.6}) T0 {:.4} grad {:.3e} iters {} elapsed {:?}",
        rep.verdict, rep.minimax_value, rep.alpha.theta_free, rep.alpha.best(), rep.t0, rep.saddle_grad_norm, rep.outer_iterations, t0.elapsed());
    if let Some(s) = &rep.saddle {
        let r = s.residuals.unwrap();
        println!("saddle: A {:.6} T {:.4} conormal ({:.2e},{:.2e}) el {:.2e} gap {:.2e} emis {:.2e}",
            s.action.action, s.path.t_total, r.conormal_0, r.conormal_1, r.el_residual, r.shooting_gap, r.energy_mismatch);
    }
    println!("beads: {:?}", rep.bead_actions.iter().map(|a| (a*1000.0).round()/1000.0).collect::<Vec<_>>());

    // NOT_APPLICABLE above 1/2
    let t0 = std::time::Instant::now();
    let (rep2, _) = mountain_pass(&model, &q0, &q1, &anchor, 0.55, &cfg, None).unwrap();
    println!("k=0.55: verdict {:?} elapsed {:?}", rep2.verdict, t0.elapsed());

    // scan
    let grid: Vec<f64> = (0..7).map(|i| 0.15 + 0.05 * i as f64).collect();
    let t0 = std::time::Instant::now();
    let curve = struwe_scan(&model, &q0, &q1, &anchor, &grid, &cfg).unwrap();
    println!("scan elapsed {:?} monotonicity defect {:.3e}", t0.elapsed(), curve.monotonicity_defect());
    for r in &curve.rows {
        println!("  k {:.2} c {:.6} conv {} T* {:.3} res {:.2e} t_bounded {}", r.k, r.c_omega, r.converged, r.t_star, r.residual, r.t_bounded);
    }
}
