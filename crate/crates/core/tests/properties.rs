//! Cross-module property suites: duality identities, gradient agreement
//! against finite differences, and serialization round trips.

use conorbit_core::geom::{wrap_unit, Vec2};
use conorbit_core::models::{PsiProfile, SurfaceModel};
use conorbit_core::pathspace::{
    action_gradient, discrete_action, lower_bound_estimate, path_from_csv, path_to_csv,
    BoundarySpec, CurveKind, DiscretePath,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn torus_magnetic() -> SurfaceModel {
    SurfaceModel::torus_magnetic(PsiProfile::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Fenchel inequality with equality at the dual point, on random samples.
    #[test]
    fn fenchel_inequality_holds(
        qx in 0.0..1.0f64, qy in 0.0..1.0f64,
        vx in -2.0..2.0f64, vy in -2.0..2.0f64,
        px in -2.0..2.0f64, py in -2.0..2.0f64,
    ) {
        let model = torus_magnetic();
        let q = Vec2::new(qx, qy);
        let v = Vec2::new(vx, vy);
        let p = Vec2::new(px, py);
        let s = model.eval(q, v).unwrap();
        let h = model.hamiltonian(q, p).unwrap();
        prop_assert!(p.dot(v) <= s.l + h + 1e-9);
        let h_dual = model.hamiltonian(q, s.dl_dv).unwrap();
        prop_assert!((s.dl_dv.dot(v) - (s.l + h_dual)).abs() <= 1e-9);
        prop_assert!((s.e - h_dual).abs() <= 1e-9);
    }

    /// Path CSV round trip reproduces every bit of the payload.
    #[test]
    fn path_csv_round_trip(
        s0 in proptest::option::of(0.0..1.0f64),
        t in 0.01..10.0f64,
        nodes in proptest::collection::vec((0.0..1.0f64, 0.0..1.0f64), 1..40),
    ) {
        let interior: Vec<Vec2> = nodes.iter().map(|(x, y)| Vec2::new(*x, *y)).collect();
        let path = DiscretePath::new(s0, interior, None, t).unwrap();
        let q0 = BoundarySpec::Curve(CurveKind::HorizontalCircle { y: 0.5 });
        let q1 = BoundarySpec::Point(Vec2::new(0.25, 0.75));
        let back = path_from_csv(&path_to_csv(&path, &q0, &q1)).unwrap();
        prop_assert_eq!(path.s0.map(f64::to_bits), back.s0.map(f64::to_bits));
        prop_assert_eq!(path.t_total.to_bits(), back.t_total.to_bits());
        prop_assert_eq!(path.interior.len(), back.interior.len());
        for (a, b) in path.interior.iter().zip(back.interior.iter()) {
            prop_assert_eq!(a.x.to_bits(), b.x.to_bits());
            prop_assert_eq!(a.y.to_bits(), b.y.to_bits());
        }
    }
}

/// Full-vector finite-difference agreement on 100 random paths.
#[test]
fn gradient_agrees_with_finite_differences_on_100_paths() {
    let model = torus_magnetic();
    let q0 = BoundarySpec::Curve(CurveKind::Circle {
        center: Vec2::new(0.35, 0.5),
        radius: 0.25,
    });
    let q1 = BoundarySpec::Curve(CurveKind::HorizontalCircle { y: 0.5 });
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 24;
    for trial in 0..100 {
        let mut path = DiscretePath::straight(
            model.chart(),
            &q0,
            &q1,
            Some(rng.gen_range(0.0..1.0)),
            Some(rng.gen_range(0.0..1.0)),
            [0, 0],
            n,
            rng.gen_range(0.2..2.0),
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
        let eval = |p: &DiscretePath| discrete_action(&model, &q0, &q1, p, k).unwrap().action;
        let h = 1e-6;
        let mut coord = 0usize;
        let mut bump = |up: DiscretePath, dn: DiscretePath| {
            let fd = (eval(&up) - eval(&dn)) / (2.0 * h);
            let a = flat[coord];
            assert!(
                (a - fd).abs() <= 1e-5 * a.abs().max(1e-2),
                "trial {trial}, coord {coord}: analytic {a}, fd {fd}"
            );
            coord += 1;
        };
        let mut up = path.clone();
        up.s0 = Some(path.s0.unwrap() + h);
        let mut dn = path.clone();
        dn.s0 = Some(path.s0.unwrap() - h);
        bump(up, dn);
        for j in 0..path.interior.len() {
            for axis in 0..2 {
                let mut up = path.clone();
                let mut dn = path.clone();
                if axis == 0 {
                    up.interior[j].x += h;
                    dn.interior[j].x -= h;
                } else {
                    up.interior[j].y += h;
                    dn.interior[j].y -= h;
                }
                bump(up, dn);
            }
        }
        let mut up = path.clone();
        up.s1 = Some(path.s1.unwrap() + h);
        let mut dn = path.clone();
        dn.s1 = Some(path.s1.unwrap() - h);
        bump(up, dn);
        let mut up = path.clone();
        up.t_total += h;
        let mut dn = path.clone();
        dn.t_total -= h;
        bump(up, dn);
    }
}

/// The quadratic action bound holds for every random path within the
/// certified velocity region.
#[test]
fn action_lower_bound_on_random_paths() {
    let model = torus_magnetic();
    let b = model.quadratic_bounds();
    let q0 = BoundarySpec::Point(Vec2::new(0.1, 0.1));
    let q1 = BoundarySpec::Point(Vec2::new(0.8, 0.6));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let n = rng.gen_range(8..48);
        let interior: Vec<Vec2> = (0..n - 1)
            .map(|_| Vec2::new(rng.gen(), rng.gen()))
            .collect();
        let path = DiscretePath::new(None, interior, None, rng.gen_range(0.2..5.0)).unwrap();
        let k = rng.gen_range(0.0..1.5);
        let v = discrete_action(&model, &q0, &q1, &path, k).unwrap();
        if v.max_speed <= model.v_max() {
            let bound = lower_bound_estimate(v.length, path.t_total, b.a, b.b, k);
            assert!(
                v.action + 1e-9 >= bound,
                "A = {} below bound {bound}",
                v.action
            );
        }
    }
}
