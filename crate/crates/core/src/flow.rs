//! Independent verification oracle: classical Runge-Kutta integration of the
//! Euler-Lagrange flow, residual reports closing the loop between variational
//! minimizers and true orbits, and the conserved-quantity certificate of the
//! torus magnetic system.
//!
//! Nothing here reuses the discrete gradient machinery of `pathspace`; all
//! residuals are recomputed from model evaluations.

use crate::error::FlowError;
use crate::geom::{ChartKind, Vec2};
use crate::models::{ModelFamily, SurfaceModel};
use crate::pathspace::{BoundarySpec, DiscretePath};

/// Half-plane trajectories are truncated when x_2 drops below this height.
const HALF_PLANE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    pub q: Vec2,
    pub v: Vec2,
    pub t: f64,
}

/// An integrated trajectory; `exited` marks truncation at the chart boundary.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<FlowState>,
    pub exited: bool,
}

impl Trajectory {
    pub fn last(&self) -> FlowState {
        *self.states.last().expect("trajectory never empty")
    }

    /// Maximum energy deviation from the initial state.
    pub fn energy_drift(&self, model: &SurfaceModel) -> f64 {
        let e0 = model.energy(self.states[0].q, self.states[0].v);
        self.states
            .iter()
            .map(|s| (model.energy(s.q, s.v) - e0).abs())
            .fold(0.0, f64::max)
    }

    /// Trajectory CSV with columns (t, x, y, vx, vy, E).
    pub fn to_csv(&self, model: &SurfaceModel) -> String {
        let mut out = String::from("t,x,y,vx,vy,E\n");
        for s in &self.states {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                s.t,
                s.q.x,
                s.q.y,
                s.v.x,
                s.v.y,
                model.energy(s.q, s.v)
            ));
        }
        out
    }
}

fn leaves_chart(chart: ChartKind, q: Vec2) -> bool {
    match chart {
        ChartKind::FlatTorus => !q.is_finite(),
        ChartKind::HalfPlane => q.y <= HALF_PLANE_FLOOR,
        ChartKind::PlanePatch(r) => !r.contains(q),
    }
}

/// Classical 4th-order Runge-Kutta on (q, v) with qdot = v and vdot solved
/// from the Euler-Lagrange equation. Positions are kept in lift coordinates;
/// model evaluation handles the torus identification.
pub fn integrate_el(
    model: &SurfaceModel,
    state0: FlowState,
    duration: f64,
    step: f64,
) -> Result<Trajectory, FlowError> {
    if step <= 0.0 {
        return Err(FlowError::NonPositiveStep(step));
    }
    let chart = model.chart();
    if leaves_chart(chart, state0.q) {
        return Err(FlowError::Model(
            model.eval(state0.q, state0.v).err().unwrap_or(
                crate::error::ModelError::DomainViolation {
                    q: state0.q,
                    reason: "initial state outside chart".into(),
                },
            ),
        ));
    }
    let n_steps = (duration / step).ceil().max(1.0) as usize;
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(state0);
    let mut q = state0.q;
    let mut v = state0.v;
    let mut t = state0.t;
    let t_end = state0.t + duration;
    let mut exited = false;

    let accel = |q: Vec2, v: Vec2| model.el_acceleration(q, v);

    'outer: while t < t_end - 1e-15 {
        let h = step.min(t_end - t);
        let stage = |dq: Vec2, dv: Vec2, f: f64| (q + dq * (f * h), v + dv * (f * h));
        let (k1q, k1v) = (v, accel(q, v).map_err(FlowError::Model)?);
        let (q2, v2) = stage(k1q, k1v, 0.5);
        if leaves_chart(chart, q2) {
            exited = true;
            break 'outer;
        }
        let (k2q, k2v) = (v2, accel(q2, v2).map_err(FlowError::Model)?);
        let (q3, v3) = stage(k2q, k2v, 0.5);
        if leaves_chart(chart, q3) {
            exited = true;
            break 'outer;
        }
        let (k3q, k3v) = (v3, accel(q3, v3).map_err(FlowError::Model)?);
        let (q4, v4) = stage(k3q, k3v, 1.0);
        if leaves_chart(chart, q4) {
            exited = true;
            break 'outer;
        }
        let (k4q, k4v) = (v4, accel(q4, v4).map_err(FlowError::Model)?);
        let q_new = q + (k1q + k2q * 2.0 + k3q * 2.0 + k4q) * (h / 6.0);
        let v_new = v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        if leaves_chart(chart, q_new) {
            exited = true;
            break 'outer;
        }
        q = q_new;
        v = v_new;
        t += h;
        states.push(FlowState { q, v, t });
    }
    Ok(Trajectory { states, exited })
}

/// Diagnostics tying a discrete path to a true Euler-Lagrange orbit.
#[derive(Debug, Clone, Copy)]
pub struct ResidualReport {
    /// Max discrete Euler-Lagrange defect |d/dt(d_vL) - d_qL| over interior nodes.
    pub el_residual: f64,
    /// Max |E - E(0)| along the re-integrated orbit.
    pub energy_drift: f64,
    /// |d_vL| paired with the unit boundary tangent at the start.
    pub conormal_0: f64,
    /// Same at the end.
    pub conormal_1: f64,
    /// Chart distance between the variational endpoint and the shot endpoint.
    pub shooting_gap: f64,
    /// Mean quadrature energy minus k.
    pub energy_mismatch: f64,
}

impl ResidualReport {
    pub fn csv_header() -> &'static str {
        "el_residual,energy_drift,conormal_0,conormal_1,shooting_gap,energy_mismatch"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
            self.el_residual,
            self.energy_drift,
            self.conormal_0,
            self.conormal_1,
            self.shooting_gap,
            self.energy_mismatch
        )
    }
}

/// Conormal defect of the covector `dl_dv + correction` against the boundary
/// tangent, normalized by the metric norm of the tangent.
fn conormal_defect(
    model: &SurfaceModel,
    boundary: &BoundarySpec,
    s: Option<f64>,
    covector: Vec2,
    at: Vec2,
) -> f64 {
    match (boundary, s) {
        (BoundarySpec::Curve(c), Some(s)) => {
            let tangent = c.tangent(s);
            let g_norm = model.metric(at).quad(tangent).max(1e-300).sqrt();
            (covector.dot(tangent) / g_norm).abs()
        }
        _ => 0.0,
    }
}

/// Re-integrates a discrete path and reports all closure diagnostics.
///
/// The initial velocity is reconstructed from the first chord (midpoint
/// velocity d_0/(hT)); the shot starts at the first segment midpoint, which
/// is where that velocity is second-order accurate.
pub fn verify_solution(
    model: &SurfaceModel,
    q0: &BoundarySpec,
    q1: &BoundarySpec,
    path: &DiscretePath,
    k: f64,
) -> ResidualReport {
    let chart = model.chart();
    let pts = path.chain(q0, q1);
    let n = path.n_segments();
    let h = 1.0 / n as f64;
    let t_total = path.t_total;

    // per-segment midpoint samples
    let mut mids = Vec::with_capacity(n);
    for i in 0..n {
        let delta = chart.displacement(pts[i], pts[i + 1]);
        let m = chart.midpoint_along(pts[i], delta);
        let v = delta * (1.0 / (h * t_total));
        mids.push(model.eval(m, v));
    }

    let mut el_residual: f64 = 0.0;
    let mut mean_energy = 0.0;
    let mut all_ok = true;
    for s in &mids {
        match s {
            Ok(sample) => mean_energy += h * sample.e,
            Err(_) => all_ok = false,
        }
    }
    for j in 1..n {
        if let (Ok(a), Ok(b)) = (&mids[j - 1], &mids[j]) {
            let defect = (b.dl_dv - a.dl_dv) * (1.0 / (h * t_total))
                - (a.dl_dq + b.dl_dq) * 0.5;
            el_residual = el_residual.max(defect.norm());
        }
    }

    let (conormal_0, conormal_1) = match (&mids[0], &mids[n - 1]) {
        (Ok(first), Ok(last)) => (
            conormal_defect(
                model,
                q0,
                path.s0,
                first.dl_dv - first.dl_dq * (0.5 * h * t_total),
                pts[0],
            ),
            conormal_defect(
                model,
                q1,
                path.s1,
                last.dl_dv + last.dl_dq * (0.5 * h * t_total),
                pts[n],
            ),
        ),
        _ => (f64::NAN, f64::NAN),
    };

    // shooting: start at the first midpoint, land at the far endpoint
    let (shooting_gap, energy_drift) = if all_ok {
        match shoot_trajectory(model, q0, q1, path) {
            Ok(traj) => {
                let gap = chart.distance(chart.canonical(traj.last().q), chart.canonical(pts[n]));
                (gap, traj.energy_drift(model))
            }
            Err(_) => (f64::NAN, f64::NAN),
        }
    } else {
        (f64::NAN, f64::NAN)
    };

    ResidualReport {
        el_residual,
        energy_drift,
        conormal_0,
        conormal_1,
        shooting_gap,
        energy_mismatch: mean_energy - k,
    }
}

/// Re-integrate a discrete path from its reconstructed initial state and
/// return the full trajectory (the same shot `verify_solution` scores).
pub fn shoot_trajectory(
    model: &SurfaceModel,
    q0: &BoundarySpec,
    q1: &BoundarySpec,
    path: &DiscretePath,
) -> Result<Trajectory, FlowError> {
    let chart = model.chart();
    let pts = path.chain(q0, q1);
    let n = path.n_segments();
    let h = 1.0 / n as f64;
    let delta = chart.displacement(pts[0], pts[1]);
    let start = FlowState {
        q: chart.midpoint_along(pts[0], delta),
        v: delta * (1.0 / (h * path.t_total)),
        t: 0.5 * h * path.t_total,
    };
    let duration = path.t_total * (1.0 - 0.5 * h);
    let step = (path.t_total / (8.0 * n as f64)).clamp(1e-7, 1e-3);
    integrate_el(model, start, duration, step)
}

/// Verdict of the conserved-momentum disjointness certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConnectionVerdict {
    /// The momentum ranges are disjoint: no orbit of energy k can connect.
    Disjoint,
    /// Ranges overlap; existence is not decided by this certificate.
    Overlap { contact: bool },
}

#[derive(Debug, Clone, Copy)]
pub struct ConnectionCertificate {
    pub verdict: ConnectionVerdict,
    pub range_0: (f64, f64),
    pub range_1: (f64, f64),
    /// Positive gap means disjoint ranges.
    pub gap: f64,
}

/// Momentum-range certificate for the torus magnetic model: over |v| = sqrt(2k)
/// the conserved quantity at q_i spans [psi(y_i) - sqrt(2k), psi(y_i) + sqrt(2k)].
pub fn no_connection_certificate(
    model: &SurfaceModel,
    q0: Vec2,
    q1: Vec2,
    k: f64,
) -> Result<ConnectionCertificate, FlowError> {
    if model.family() != ModelFamily::TorusMagnetic {
        return Err(FlowError::TorusMagneticRequired);
    }
    let r = (2.0 * k).max(0.0).sqrt();
    let c0 = model.momentum_integral(q0, Vec2::ZERO).unwrap();
    let c1 = model.momentum_integral(q1, Vec2::ZERO).unwrap();
    let range_0 = (c0 - r, c0 + r);
    let range_1 = (c1 - r, c1 + r);
    let gap = (c0 - c1).abs() - 2.0 * r;
    let verdict = if gap > 1e-12 {
        ConnectionVerdict::Disjoint
    } else {
        ConnectionVerdict::Overlap {
            contact: gap.abs() <= 1e-9,
        }
    };
    Ok(ConnectionCertificate {
        verdict,
        range_0,
        range_1,
        gap,
    })
}

/// Finds the first near-return to the initial position after the trajectory
/// has once left its neighborhood; returns (time, distance).
pub fn nearest_return(
    model: &SurfaceModel,
    state0: FlowState,
    t_max: f64,
    step: f64,
) -> Result<Option<(f64, f64)>, FlowError> {
    let traj = integrate_el(model, state0, t_max, step)?;
    let chart = model.chart();
    let start = state0.q;
    let mut left = false;
    let mut best: Option<(f64, f64)> = None;
    let leave_radius = 10.0 * step * (state0.v.norm() + 1e-9);
    for s in &traj.states[1..] {
        let d = chart.distance(s.q, start);
        if !left {
            if d > leave_radius.max(1e-3) {
                left = true;
            }
            continue;
        }
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((s.t - state0.t, d));
        }
    }
    Ok(best)
}
