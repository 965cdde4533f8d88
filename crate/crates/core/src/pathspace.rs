//! Discretized free-time paths with endpoints constrained to submanifolds,
//! the action functional A_k(x, T) = T * sum_i h [L(m_i, d_i/(hT)) + k],
//! and its exact discrete gradient over (s0, nodes, s1, T).
//!
//! Quadrature is the midpoint rule on velocities: second order, and exact
//! for piecewise-linear paths whenever the Lagrangian data is constant
//! along each segment, which makes the closed-form fixture paths exact.

use crate::critical::LatticeClass;
use crate::error::PathError;
use crate::geom::{wrap_signed, wrap_unit, ChartKind, Vec2};
use crate::models::SurfaceModel;

/// Minimum total time accepted by evaluation routines.
pub const MIN_TIME: f64 = 1e-12;

/// Parametrized closed curves available as boundary submanifolds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveKind {
    /// Torus circle {y = const}, parametrized by s -> (s, y).
    HorizontalCircle { y: f64 },
    /// Torus circle {x = const}, parametrized by s -> (x, s).
    VerticalCircle { x: f64 },
    /// Round circle of the chart plane, s -> center + r (cos 2 pi s, sin 2 pi s).
    Circle { center: Vec2, radius: f64 },
    /// Rounded rectangle traversed counterclockwise at constant speed.
    RoundedRect {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        corner: f64,
    },
}

impl CurveKind {
    /// Curve point at parameter s (s is taken modulo 1).
    pub fn at(&self, s: f64) -> Vec2 {
        let s = wrap_unit(s);
        match *self {
            CurveKind::HorizontalCircle { y } => Vec2::new(s, y),
            CurveKind::VerticalCircle { x } => Vec2::new(x, s),
            CurveKind::Circle { center, radius } => {
                let t = std::f64::consts::TAU * s;
                center + Vec2::new(radius * t.cos(), radius * t.sin())
            }
            CurveKind::RoundedRect { .. } => self.rounded_rect_at(s).0,
        }
    }

    /// Tangent dq/ds at parameter s.
    pub fn tangent(&self, s: f64) -> Vec2 {
        let s = wrap_unit(s);
        match *self {
            CurveKind::HorizontalCircle { .. } => Vec2::new(1.0, 0.0),
            CurveKind::VerticalCircle { .. } => Vec2::new(0.0, 1.0),
            CurveKind::Circle { radius, .. } => {
                let t = std::f64::consts::TAU * s;
                Vec2::new(-radius * t.sin(), radius * t.cos()) * std::f64::consts::TAU
            }
            CurveKind::RoundedRect { .. } => self.rounded_rect_at(s).1,
        }
    }

    /// Displacement along the curve lift from parameter `s_from` to `s_to`
    /// (both taken in [0,1), traversed directly without extra turns).
    pub fn lift_displacement(&self, s_from: f64, s_to: f64) -> Vec2 {
        let (s_from, s_to) = (wrap_unit(s_from), wrap_unit(s_to));
        match *self {
            CurveKind::HorizontalCircle { .. } => Vec2::new(s_to - s_from, 0.0),
            CurveKind::VerticalCircle { .. } => Vec2::new(0.0, s_to - s_from),
            // contractible curves: chart displacement carries no winding
            _ => self.at(s_to) - self.at(s_from),
        }
    }

    /// Signed level function whose zero set is the curve (chart-aware).
    pub fn level(&self, chart: ChartKind, q: Vec2) -> f64 {
        match *self {
            CurveKind::HorizontalCircle { y } => {
                if chart.is_torus() {
                    wrap_signed(q.y - y)
                } else {
                    q.y - y
                }
            }
            CurveKind::VerticalCircle { x } => {
                if chart.is_torus() {
                    wrap_signed(q.x - x)
                } else {
                    q.x - x
                }
            }
            CurveKind::Circle { center, radius } => chart.distance(q, center) - radius,
            CurveKind::RoundedRect {
                x_min,
                x_max,
                y_min,
                y_max,
                corner,
            } => {
                let c = Vec2::new(0.5 * (x_min + x_max), 0.5 * (y_min + y_max));
                let half = Vec2::new(0.5 * (x_max - x_min) - corner, 0.5 * (y_max - y_min) - corner);
                let p = chart.displacement(c, q);
                let d = Vec2::new(p.x.abs() - half.x, p.y.abs() - half.y);
                let outside = Vec2::new(d.x.max(0.0), d.y.max(0.0)).norm();
                outside + d.x.max(d.y).min(0.0) - corner
            }
        }
    }

    /// Winding vectors generating the lattice image of the curve's loops
    /// (meaningful on the torus; contractible curves contribute nothing).
    pub fn generators(&self) -> Vec<[i64; 2]> {
        match self {
            CurveKind::HorizontalCircle { .. } => vec![[1, 0]],
            CurveKind::VerticalCircle { .. } => vec![[0, 1]],
            _ => vec![],
        }
    }

    fn rounded_rect_at(&self, s: f64) -> (Vec2, Vec2) {
        let CurveKind::RoundedRect {
            x_min,
            x_max,
            y_min,
            y_max,
            corner: c,
        } = *self
        else {
            unreachable!()
        };
        let w = x_max - x_min - 2.0 * c;
        let h = y_max - y_min - 2.0 * c;
        let quarter = 0.5 * std::f64::consts::PI * c;
        let total = 2.0 * (w + h) + 4.0 * quarter;
        let mut u = s * total;
        // pieces in order: bottom edge, SE corner, right edge, NE corner,
        // top edge, NW corner, left edge, SW corner
        let pieces = [
            (w, 0),
            (quarter, 1),
            (h, 2),
            (quarter, 3),
            (w, 4),
            (quarter, 5),
            (h, 6),
            (quarter, 7),
        ];
        for (len, id) in pieces {
            if u <= len || id == 7 {
                let f = if len > 0.0 { (u / len).clamp(0.0, 1.0) } else { 0.0 };
                let (p, t_unit) = match id {
                    0 => (Vec2::new(x_min + c + f * w, y_min), Vec2::new(1.0, 0.0)),
                    1 => {
                        let a = -std::f64::consts::FRAC_PI_2 + f * std::f64::consts::FRAC_PI_2;
                        let ctr = Vec2::new(x_max - c, y_min + c);
                        (
                            ctr + Vec2::new(c * a.cos(), c * a.sin()),
                            Vec2::new(-a.sin(), a.cos()),
                        )
                    }
                    2 => (Vec2::new(x_max, y_min + c + f * h), Vec2::new(0.0, 1.0)),
                    3 => {
                        let a = f * std::f64::consts::FRAC_PI_2;
                        let ctr = Vec2::new(x_max - c, y_max - c);
                        (
                            ctr + Vec2::new(c * a.cos(), c * a.sin()),
                            Vec2::new(-a.sin(), a.cos()),
                        )
                    }
                    4 => (Vec2::new(x_max - c - f * w, y_max), Vec2::new(-1.0, 0.0)),
                    5 => {
                        let a = std::f64::consts::FRAC_PI_2 + f * std::f64::consts::FRAC_PI_2;
                        let ctr = Vec2::new(x_min + c, y_max - c);
                        (
                            ctr + Vec2::new(c * a.cos(), c * a.sin()),
                            Vec2::new(-a.sin(), a.cos()),
                        )
                    }
                    6 => (Vec2::new(x_min, y_max - c - f * h), Vec2::new(0.0, -1.0)),
                    _ => {
                        let a = std::f64::consts::PI + f * std::f64::consts::FRAC_PI_2;
                        let ctr = Vec2::new(x_min + c, y_min + c);
                        (
                            ctr + Vec2::new(c * a.cos(), c * a.sin()),
                            Vec2::new(-a.sin(), a.cos()),
                        )
                    }
                };
                return (p, t_unit * total);
            }
            u -= len;
        }
        unreachable!()
    }
}

/// A boundary submanifold: a single point or a parametrized closed curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundarySpec {
    Point(Vec2),
    Curve(CurveKind),
}

impl BoundarySpec {
    pub fn is_point(&self) -> bool {
        matches!(self, BoundarySpec::Point(_))
    }

    /// Realized point for an endpoint parameter (None for point boundaries).
    pub fn realize(&self, s: Option<f64>) -> Vec2 {
        match (self, s) {
            (BoundarySpec::Point(q), _) => *q,
            (BoundarySpec::Curve(c), Some(s)) => c.at(s),
            (BoundarySpec::Curve(c), None) => c.at(0.0),
        }
    }

    pub fn tangent(&self, s: f64) -> Vec2 {
        match self {
            BoundarySpec::Point(_) => Vec2::ZERO,
            BoundarySpec::Curve(c) => c.tangent(s),
        }
    }

    pub fn generators(&self) -> Vec<[i64; 2]> {
        match self {
            BoundarySpec::Point(_) => vec![],
            BoundarySpec::Curve(c) => c.generators(),
        }
    }

    /// Reference anchor used by the component labelling.
    pub fn reference_point(&self) -> Vec2 {
        self.realize(Some(0.0))
    }

    /// Immersion and closure checks for curve boundaries.
    pub fn validate(&self, chart: ChartKind) -> Result<(), PathError> {
        if let BoundarySpec::Curve(c) = self {
            for i in 0..256 {
                let s = i as f64 / 256.0;
                if c.tangent(s).norm() < 1e-8 {
                    return Err(PathError::Serialization(format!(
                        "curve not immersed at s = {s}"
                    )));
                }
            }
            let gap = chart.distance(c.at(0.0), c.at(1.0 - 1e-9));
            if gap > 1e-6 {
                return Err(PathError::Serialization(format!(
                    "curve does not close up: gap {gap:.3e}"
                )));
            }
        }
        Ok(())
    }
}

/// A discrete free-time path: endpoint parameters on the boundary curves,
/// interior chart nodes x_1 .. x_{N-1}, and the total time T.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    pub s0: Option<f64>,
    pub interior: Vec<Vec2>,
    pub s1: Option<f64>,
    pub t_total: f64,
}

impl DiscretePath {
    pub fn new(
        s0: Option<f64>,
        interior: Vec<Vec2>,
        s1: Option<f64>,
        t_total: f64,
    ) -> Result<Self, PathError> {
        if t_total <= 0.0 {
            return Err(PathError::NonPositiveTime(t_total));
        }
        if interior.is_empty() {
            return Err(PathError::TooFewSegments(interior.len() + 1));
        }
        Ok(DiscretePath {
            s0,
            interior,
            s1,
            t_total,
        })
    }

    /// Number of segments N (interior nodes + 1).
    pub fn n_segments(&self) -> usize {
        self.interior.len() + 1
    }

    /// Full node chain including realized endpoints.
    pub fn chain(&self, q0: &BoundarySpec, q1: &BoundarySpec) -> Vec<Vec2> {
        let mut pts = Vec::with_capacity(self.interior.len() + 2);
        pts.push(q0.realize(self.s0));
        pts.extend_from_slice(&self.interior);
        pts.push(q1.realize(self.s1));
        pts
    }

    /// Straight-chord path between realized endpoints, optionally with an
    /// extra integer winding added to the connecting displacement (torus).
    #[allow(clippy::too_many_arguments)]
    pub fn straight(
        chart: ChartKind,
        q0: &BoundarySpec,
        q1: &BoundarySpec,
        s0: Option<f64>,
        s1: Option<f64>,
        extra_winding: [i64; 2],
        n: usize,
        t_total: f64,
    ) -> Result<Self, PathError> {
        let a = q0.realize(s0);
        let b = q1.realize(s1);
        let mut delta = chart.displacement(a, b);
        delta.x += extra_winding[0] as f64;
        delta.y += extra_winding[1] as f64;
        let interior: Vec<Vec2> = (1..n)
            .map(|j| chart.canonical(a + delta * (j as f64 / n as f64)))
            .collect();
        DiscretePath::new(
            if q0.is_point() { None } else { s0 },
            interior,
            if q1.is_point() { None } else { s1 },
            t_total,
        )
    }

    /// Insert the chord midpoint of every segment, doubling N.
    pub fn subdivide(&self, chart: ChartKind, q0: &BoundarySpec, q1: &BoundarySpec) -> Self {
        let pts = self.chain(q0, q1);
        let mut interior = Vec::with_capacity(2 * self.n_segments() - 1);
        for i in 0..pts.len() - 1 {
            let d = chart.displacement(pts[i], pts[i + 1]);
            let mid = chart.midpoint_along(pts[i], d);
            if i > 0 {
                interior.push(pts[i]);
            }
            interior.push(mid);
        }
        DiscretePath {
            s0: self.s0,
            interior,
            s1: self.s1,
            t_total: self.t_total,
        }
    }
}

/// A discrete free-time loop; the homotopy class is carried by the node
/// layout under the minimal-image chord convention.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopPath {
    pub nodes: Vec<Vec2>,
    pub t_total: f64,
}

impl LoopPath {
    pub fn new(nodes: Vec<Vec2>, t_total: f64) -> Result<Self, PathError> {
        if t_total <= 0.0 {
            return Err(PathError::NonPositiveTime(t_total));
        }
        if nodes.len() < 3 {
            return Err(PathError::TooFewSegments(nodes.len()));
        }
        Ok(LoopPath { nodes, t_total })
    }

    pub fn n_segments(&self) -> usize {
        self.nodes.len()
    }

    /// Straight loop tracing the lift segment from `base` to `base + winding`.
    pub fn straight(
        chart: ChartKind,
        base: Vec2,
        winding: [i64; 2],
        n: usize,
        t_total: f64,
    ) -> Result<Self, PathError> {
        let w = Vec2::new(winding[0] as f64, winding[1] as f64);
        let nodes: Vec<Vec2> = (0..n)
            .map(|j| chart.canonical(base + w * (j as f64 / n as f64)))
            .collect();
        LoopPath::new(nodes, t_total)
    }

    /// Total integer winding under the minimal-image chord convention.
    pub fn winding(&self, chart: ChartKind) -> [i64; 2] {
        let mut acc = Vec2::ZERO;
        let n = self.nodes.len();
        for i in 0..n {
            acc += chart.displacement(self.nodes[i], self.nodes[(i + 1) % n]);
        }
        [acc.x.round() as i64, acc.y.round() as i64]
    }

    pub fn subdivide(&self, chart: ChartKind) -> Self {
        let n = self.nodes.len();
        let mut nodes = Vec::with_capacity(2 * n);
        for i in 0..n {
            let a = self.nodes[i];
            let d = chart.displacement(a, self.nodes[(i + 1) % n]);
            nodes.push(a);
            nodes.push(chart.midpoint_along(a, d));
        }
        LoopPath {
            nodes,
            t_total: self.t_total,
        }
    }
}

/// Action of a path together with the time derivative and the polygon
/// geometry entering the quadratic lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionValue {
    pub action: f64,
    /// dA/dT; equals the quadrature of (k - E)/T along the path.
    pub da_dt: f64,
    /// Riemannian length of the polygon.
    pub length: f64,
    /// Integral of |x'(s)|^2_g over s in [0, 1].
    pub kinetic: f64,
    /// Largest segment speed |v|_g, for the velocity trust region.
    pub max_speed: f64,
}

/// Gradient of the discrete action over (s0, nodes, s1, T).
#[derive(Debug, Clone)]
pub struct PathGradient {
    pub ds0: Option<f64>,
    pub nodes: Vec<Vec2>,
    pub ds1: Option<f64>,
    pub dt: f64,
}

impl PathGradient {
    pub fn flat(&self) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.nodes.len() * 2 + 3);
        if let Some(v) = self.ds0 {
            z.push(v);
        }
        for n in &self.nodes {
            z.push(n.x);
            z.push(n.y);
        }
        if let Some(v) = self.ds1 {
            z.push(v);
        }
        z.push(self.dt);
        z
    }

    pub fn norm(&self) -> f64 {
        self.flat().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

struct SegmentData {
    // derivative of the segment contribution w.r.t. the left point (delta fixed)
    d_left: Vec2,
    // derivative w.r.t. the displacement (left point fixed)
    d_delta: Vec2,
    // contribution to dA/dT
    d_t: f64,
}

struct ChainAccumulator {
    action: f64,
    da_dt: f64,
    length: f64,
    kinetic: f64,
    max_speed: f64,
    segments: Vec<SegmentData>,
    with_grad: bool,
}

impl ChainAccumulator {
    fn new(n: usize, with_grad: bool) -> Self {
        ChainAccumulator {
            action: 0.0,
            da_dt: 0.0,
            length: 0.0,
            kinetic: 0.0,
            max_speed: 0.0,
            segments: if with_grad {
                Vec::with_capacity(n)
            } else {
                Vec::new()
            },
            with_grad,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push_segment(
        &mut self,
        model: &SurfaceModel,
        index: usize,
        left: Vec2,
        delta: Vec2,
        h: f64,
        t: f64,
        k: f64,
    ) -> Result<(), PathError> {
        let chart = model.chart();
        let mid = chart.midpoint_along(left, delta);
        let v = delta * (1.0 / (h * t));
        let sample = model
            .eval(mid, v)
            .map_err(|_| PathError::NodeOutsideDomain {
                index,
                q: mid,
            })?;
        self.action += h * t * (sample.l + k);
        self.da_dt += h * (k - sample.e);
        let g = model.metric(mid);
        let d2 = g.quad(delta).max(0.0);
        self.length += d2.sqrt();
        self.kinetic += d2 / h;
        self.max_speed = self.max_speed.max(d2.sqrt() / (h * t));
        if self.with_grad {
            self.segments.push(SegmentData {
                d_left: sample.dl_dq * (h * t),
                d_delta: sample.dl_dq * (0.5 * h * t) + sample.dl_dv,
                d_t: h * (k - sample.e),
            });
        }
        Ok(())
    }

    fn value(&self) -> ActionValue {
        ActionValue {
            action: self.action,
            da_dt: self.da_dt,
            length: self.length,
            kinetic: self.kinetic,
            max_speed: self.max_speed,
        }
    }
}

fn check_nodes(model: &SurfaceModel, pts: &[Vec2]) -> Result<(), PathError> {
    for (i, q) in pts.iter().enumerate() {
        if !model.chart().contains(*q) {
            return Err(PathError::NodeOutsideDomain { index: i, q: *q });
        }
    }
    Ok(())
}

fn connect_accumulate(
    model: &SurfaceModel,
    q0: &BoundarySpec,
    q1: &BoundarySpec,
    path: &DiscretePath,
    k: f64,
    with_grad: bool,
) -> Result<(Vec<Vec2>, ChainAccumulator), PathError> {
    if path.t_total < MIN_TIME {
        return Err(PathError::NonPositiveTime(path.t_total));
    }
    let pts = path.chain(q0, q1);
    check_nodes(model, &pts)?;
    let n = path.n_segments();
    let h = 1.0 / n as f64;
    let chart = model.chart();
    let mut acc = ChainAccumulator::new(n, with_grad);
    for i in 0..n {
        let delta = chart.displacement(pts[i], pts[i + 1]);
        acc.push_segment(model, i, pts[i], delta, h, path.t_total, k)?;
    }
    Ok((pts, acc))
}

/// Free-time action of a connecting path.
pub fn discrete_action(
    model: &SurfaceModel,
    q0: &BoundarySpec,
    q1: &BoundarySpec,
    path: &DiscretePath,
    k: f64,
) -> Result<ActionValue, PathError> {
    Ok(connect_accumulate(model, q0, q1, path, k, false)?.1.value())
}

/// Exact gradient of the discretized action over (s0, x_1..x_{N-1}, s1, T).
///
/// Endpoint components are chain-ruled through the boundary parametrizations,
/// so the conormal conditions hold automatically at critical points.
pub fn action_gradient(
    model: &SurfaceModel,
    q0: &BoundarySpec,
    q1: &BoundarySpec,
    path: &DiscretePath,
    k: f64,
) -> Result<(ActionValue, PathGradient), PathError> {
    let (_pts, acc) = connect_accumulate(model, q0, q1, path, k, true)?;
    let n = path.n_segments();
    let seg = &acc.segments;
    let mut nodes = Vec::with_capacity(n - 1);
    for j in 1..n {
        let g = seg[j].d_left - seg[j].d_delta + seg[j - 1].d_delta;
        nodes.push(g);
    }
    let ds0 = match (q0, path.s0) {
        (BoundarySpec::Curve(c), Some(s0)) => {
            Some((seg[0].d_left - seg[0].d_delta).dot(c.tangent(s0)))
        }
        _ => None,
    };
    let ds1 = match (q1, path.s1) {
        (BoundarySpec::Curve(c), Some(s1)) => Some(seg[n - 1].d_delta.dot(c.tangent(s1))),
        _ => None,
    };
    let dt = seg.iter().map(|s| s.d_t).sum();
    Ok((
        acc.value(),
        PathGradient {
            ds0,
            nodes,
            ds1,
            dt,
        },
    ))
}

/// Gradient of a free-time loop over (nodes, T).
#[derive(Debug, Clone)]
pub struct LoopGradient {
    pub nodes: Vec<Vec2>,
    pub dt: f64,
}

fn loop_accumulate(
    model: &SurfaceModel,
    lp: &LoopPath,
    k: f64,
    with_grad: bool,
) -> Result<ChainAccumulator, PathError> {
    if lp.t_total < MIN_TIME {
        return Err(PathError::NonPositiveTime(lp.t_total));
    }
    check_nodes(model, &lp.nodes)?;
    let n = lp.nodes.len();
    let h = 1.0 / n as f64;
    let chart = model.chart();
    let mut acc = ChainAccumulator::new(n, with_grad);
    for i in 0..n {
        let delta = chart.displacement(lp.nodes[i], lp.nodes[(i + 1) % n]);
        acc.push_segment(model, i, lp.nodes[i], delta, h, lp.t_total, k)?;
    }
    Ok(acc)
}

pub fn loop_action(model: &SurfaceModel, lp: &LoopPath, k: f64) -> Result<ActionValue, PathError> {
    Ok(loop_accumulate(model, lp, k, false)?.value())
}

pub fn loop_gradient(
    model: &SurfaceModel,
    lp: &LoopPath,
    k: f64,
) -> Result<(ActionValue, LoopGradient), PathError> {
    let acc = loop_accumulate(model, lp, k, true)?;
    let n = lp.nodes.len();
    let seg = &acc.segments;
    let mut nodes = Vec::with_capacity(n);
    for j in 0..n {
        let prev = (j + n - 1) % n;
        nodes.push(seg[j].d_left - seg[j].d_delta + seg[prev].d_delta);
    }
    let dt = seg.iter().map(|s| s.d_t).sum();
    Ok((acc.value(), LoopGradient { nodes, dt }))
}

/// Quadratic action lower bound of the length estimate:
/// A_k(x, T) >= (a/T) l(x)^2 + T (k - b).
pub fn lower_bound_estimate(length: f64, t_total: f64, a: f64, b: f64, k: f64) -> f64 {
    (a / t_total) * length * length + t_total * (k - b)
}

/// Coset label of a path's connected component in the torus path space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CosetLabel(pub [i64; 2]);

impl std::fmt::Display for CosetLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.0[0], self.0[1])
    }
}

/// Raw integer winding of the closed circuit: reference -> path start
/// (along Q0), the path itself, path end -> reference (along Q1), and a
/// fixed minimal-image closing chord between the two reference anchors.
pub fn path_circuit_winding(
    chart: ChartKind,
    q0: &BoundarySpec,
    q1: &BoundarySpec,
    path: &DiscretePath,
) -> Result<[i64; 2], PathError> {
    if !chart.is_torus() {
        return Err(PathError::TorusRequired);
    }
    let pts = path.chain(q0, q1);
    let mut acc = Vec2::ZERO;
    if let (BoundarySpec::Curve(c), Some(s0)) = (q0, path.s0) {
        acc += c.lift_displacement(0.0, s0);
    }
    for i in 0..pts.len() - 1 {
        acc += chart.displacement(pts[i], pts[i + 1]);
    }
    if let (BoundarySpec::Curve(c), Some(s1)) = (q1, path.s1) {
        acc += c.lift_displacement(s1, 0.0);
    }
    acc += chart.displacement(q1.reference_point(), q0.reference_point());
    let label = [acc.x.round() as i64, acc.y.round() as i64];
    let residue = (acc - Vec2::new(label[0] as f64, label[1] as f64)).norm();
    if residue > 0.25 {
        return Err(PathError::Serialization(format!(
            "circuit winding not near an integer vector (residue {residue:.3})"
        )));
    }
    Ok(label)
}

/// Connected-component label: the circuit winding reduced modulo the
/// sublattice generated by both boundary submanifolds.
pub fn classify_component(
    chart: ChartKind,
    q0: &BoundarySpec,
    q1: &BoundarySpec,
    path: &DiscretePath,
) -> Result<CosetLabel, PathError> {
    let raw = path_circuit_winding(chart, q0, q1, path)?;
    let mut gens = q0.generators();
    gens.extend(q1.generators());
    let lattice = LatticeClass::new(gens);
    Ok(CosetLabel(lattice.reduce(raw)))
}

// ---------------------------------------------------------------------------
// CSV serialization
// ---------------------------------------------------------------------------

fn fmt_f64(v: f64) -> String {
    format!("{v:.17e}")
}

/// Serialize a path with its realized endpoints: header keys s0, s1, T, N,
/// then one (i, x, y) row per node.
pub fn path_to_csv(path: &DiscretePath, q0: &BoundarySpec, q1: &BoundarySpec) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "s0,{}\n",
        path.s0.map(fmt_f64).unwrap_or_default()
    ));
    out.push_str(&format!(
        "s1,{}\n",
        path.s1.map(fmt_f64).unwrap_or_default()
    ));
    out.push_str(&format!("T,{}\n", fmt_f64(path.t_total)));
    out.push_str(&format!("N,{}\n", path.n_segments()));
    out.push_str("i,x,y\n");
    for (i, p) in path.chain(q0, q1).iter().enumerate() {
        out.push_str(&format!("{i},{},{}\n", fmt_f64(p.x), fmt_f64(p.y)));
    }
    out
}

/// Parse a path CSV produced by [`path_to_csv`].
pub fn path_from_csv(text: &str) -> Result<DiscretePath, PathError> {
    let mut s0 = None;
    let mut s1 = None;
    let mut t_total = None;
    let mut n = None;
    let mut rows: Vec<(usize, Vec2)> = Vec::new();
    let mut in_rows = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| PathError::Serialization(format!("line {}: {msg}", lineno + 1));
        if in_rows {
            let mut it = line.split(',');
            let i: usize = it
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad("bad node index"))?;
            let x: f64 = it
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad("bad x"))?;
            let y: f64 = it
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad("bad y"))?;
            rows.push((i, Vec2::new(x, y)));
            continue;
        }
        let (key, value) = line.split_once(',').ok_or_else(|| bad("expected key,value"))?;
        match key {
            "s0" | "s1" => {
                let parsed = if value.is_empty() {
                    None
                } else {
                    Some(value.parse::<f64>().map_err(|_| bad("bad parameter"))?)
                };
                if key == "s0" {
                    s0 = parsed;
                } else {
                    s1 = parsed;
                }
            }
            "T" => t_total = Some(value.parse::<f64>().map_err(|_| bad("bad T"))?),
            "N" => n = Some(value.parse::<usize>().map_err(|_| bad("bad N"))?),
            "i" => in_rows = true,
            other => return Err(bad(&format!("unknown header key `{other}`"))),
        }
    }
    let t_total = t_total.ok_or_else(|| PathError::Serialization("missing T".into()))?;
    let n = n.ok_or_else(|| PathError::Serialization("missing N".into()))?;
    if rows.len() != n + 1 {
        return Err(PathError::Serialization(format!(
            "expected {} node rows, found {}",
            n + 1,
            rows.len()
        )));
    }
    let interior = rows[1..n].iter().map(|(_, p)| *p).collect();
    DiscretePath::new(s0, interior, s1, t_total)
}
