//! Tonelli Lagrangians of electromagnetic type on 2-D chart surfaces:
//! L(q,v) = 1/2 v^T g(q) v + theta_q(v) - V(q).
//!
//! The built-in catalog covers the flat torus with a magnetic bump form,
//! the flat torus with a potential, the hyperbolic half plane with the
//! canonical primitive of the area form (optionally graded along x), and
//! a Euclidean plane patch with a constant magnetic field.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ModelError;
use crate::geom::{ChartKind, Rect, SymMat2, Vec2};

/// Finite-difference step for derivative fallbacks and cross-checks.
pub const FD_STEP: f64 = 1e-5;
/// Gradient tolerance for the inner Legendre problem.
const LEGENDRE_TOL: f64 = 1e-10;
const LEGENDRE_MAX_ITERS: usize = 100;
/// Default velocity trust region (metric norm).
pub const DEFAULT_V_MAX: f64 = 20.0;

/// Smooth bump profile on a compact support, normalized to peak value 1.
///
/// psi(y) = exp(1 - 1/(1 - tau^2)) with tau the affine rescaling of
/// [y_lo, y_hi] onto [-1, 1]; identically zero outside the support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiProfile {
    pub y_lo: f64,
    pub y_hi: f64,
}

impl PsiProfile {
    pub fn new(y_lo: f64, y_hi: f64) -> Result<Self, ModelError> {
        if !(0.0 < y_lo && y_lo < y_hi && y_hi < 1.0) {
            return Err(ModelError::Validation(format!(
                "bump support [{y_lo}, {y_hi}] must satisfy 0 < y_lo < y_hi < 1"
            )));
        }
        Ok(PsiProfile { y_lo, y_hi })
    }

    /// Peak location (midpoint of the support).
    pub fn peak(&self) -> f64 {
        0.5 * (self.y_lo + self.y_hi)
    }

    fn tau(&self, y: f64) -> f64 {
        (2.0 * y - (self.y_lo + self.y_hi)) / (self.y_hi - self.y_lo)
    }

    pub fn value(&self, y: f64) -> f64 {
        let t = self.tau(y);
        let t2 = t * t;
        if t2 >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - t2)).exp()
        }
    }

    pub fn derivative(&self, y: f64) -> f64 {
        let t = self.tau(y);
        let t2 = t * t;
        if t2 >= 1.0 {
            0.0
        } else {
            let one_m = 1.0 - t2;
            let dpsi_dtau = (1.0 - 1.0 / one_m).exp() * (-2.0 * t / (one_m * one_m));
            dpsi_dtau * 2.0 / (self.y_hi - self.y_lo)
        }
    }
}

impl Default for PsiProfile {
    fn default() -> Self {
        // wide enough that the integrator holds the conserved quantities at
        // desk tolerances, narrow enough to leave room for boundary curves
        // crossing entirely outside the support
        PsiProfile {
            y_lo: 0.25,
            y_hi: 0.75,
        }
    }
}

fn smooth_half(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

fn smooth_half_deriv(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp() / (t * t)
    }
}

/// Smooth step from 0 at t<=0 to 1 at t>=1.
fn smooth_step(t: f64) -> f64 {
    let a = smooth_half(t);
    let b = smooth_half(1.0 - t);
    a / (a + b)
}

fn smooth_step_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let a = smooth_half(t);
    let b = smooth_half(1.0 - t);
    let da = smooth_half_deriv(t);
    let db = -smooth_half_deriv(1.0 - t);
    (da * b - a * db) / ((a + b) * (a + b))
}

/// Plateau grading profile with values in [1, 2]: identically 2 outside
/// (c, d), identically 1 on [e, f], smooth and monotone on the ramps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiProfile {
    pub c: f64,
    pub e: f64,
    pub f: f64,
    pub d: f64,
}

impl PhiProfile {
    pub fn new(c: f64, e: f64, f: f64, d: f64) -> Result<Self, ModelError> {
        if !(c < e && e < f && f < d) {
            return Err(ModelError::Validation(format!(
                "grading knots must satisfy c < e < f < d, got {c}, {e}, {f}, {d}"
            )));
        }
        Ok(PhiProfile { c, e, f, d })
    }

    pub fn value(&self, x: f64) -> f64 {
        if x <= self.c || x >= self.d {
            2.0
        } else if x >= self.e && x <= self.f {
            1.0
        } else if x < self.e {
            2.0 - smooth_step((x - self.c) / (self.e - self.c))
        } else {
            2.0 - smooth_step((self.d - x) / (self.d - self.f))
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x <= self.c || x >= self.d || (self.e..=self.f).contains(&x) {
            0.0
        } else if x < self.e {
            -smooth_step_deriv((x - self.c) / (self.e - self.c)) / (self.e - self.c)
        } else {
            smooth_step_deriv((self.d - x) / (self.d - self.f)) / (self.d - self.f)
        }
    }
}

/// Pointwise value-and-derivative pack of the geometric data at a chart point.
#[derive(Debug, Clone, Copy)]
pub struct GeometryJet {
    pub g: SymMat2,
    pub dg_dx: SymMat2,
    pub dg_dy: SymMat2,
    pub theta: Vec2,
    pub dtheta_dx: Vec2,
    pub dtheta_dy: Vec2,
    pub potential: f64,
    pub dpotential: Vec2,
}

/// Geometric data of a model surface (metric, magnetic one-form, potential).
///
/// Implementations may supply analytic derivatives through [`SurfaceGeometry::jet`];
/// otherwise central finite differences at step [`FD_STEP`] are used.
pub trait SurfaceGeometry: Send + Sync {
    fn metric(&self, q: Vec2) -> SymMat2;
    fn one_form(&self, q: Vec2) -> Vec2;
    fn potential(&self, q: Vec2) -> f64;

    fn jet(&self, _q: Vec2) -> Option<GeometryJet> {
        None
    }
}

fn fd_jet(geom: &dyn SurfaceGeometry, q: Vec2) -> GeometryJet {
    let h = FD_STEP;
    let ex = Vec2::new(h, 0.0);
    let ey = Vec2::new(0.0, h);
    let dmat = |a: SymMat2, b: SymMat2| SymMat2 {
        xx: (a.xx - b.xx) / (2.0 * h),
        xy: (a.xy - b.xy) / (2.0 * h),
        yy: (a.yy - b.yy) / (2.0 * h),
    };
    GeometryJet {
        g: geom.metric(q),
        dg_dx: dmat(geom.metric(q + ex), geom.metric(q - ex)),
        dg_dy: dmat(geom.metric(q + ey), geom.metric(q - ey)),
        theta: geom.one_form(q),
        dtheta_dx: (geom.one_form(q + ex) - geom.one_form(q - ex)) * (0.5 / h),
        dtheta_dy: (geom.one_form(q + ey) - geom.one_form(q - ey)) * (0.5 / h),
        potential: geom.potential(q),
        dpotential: Vec2::new(
            (geom.potential(q + ex) - geom.potential(q - ex)) * (0.5 / h),
            (geom.potential(q + ey) - geom.potential(q - ey)) * (0.5 / h),
        ),
    }
}

/// Flat torus with horizontal magnetic one-form theta = psi(y) dx.
struct TorusMagneticGeometry {
    psi: PsiProfile,
}

impl SurfaceGeometry for TorusMagneticGeometry {
    fn metric(&self, _q: Vec2) -> SymMat2 {
        SymMat2::IDENTITY
    }
    fn one_form(&self, q: Vec2) -> Vec2 {
        Vec2::new(self.psi.value(crate::geom::wrap_unit(q.y)), 0.0)
    }
    fn potential(&self, _q: Vec2) -> f64 {
        0.0
    }
    fn jet(&self, q: Vec2) -> Option<GeometryJet> {
        let y = crate::geom::wrap_unit(q.y);
        Some(GeometryJet {
            g: SymMat2::IDENTITY,
            dg_dx: SymMat2::ZERO,
            dg_dy: SymMat2::ZERO,
            theta: Vec2::new(self.psi.value(y), 0.0),
            dtheta_dx: Vec2::ZERO,
            dtheta_dy: Vec2::new(self.psi.derivative(y), 0.0),
            potential: 0.0,
            dpotential: Vec2::ZERO,
        })
    }
}

/// Flat torus with potential V(x,y) = amp sin^2(pi x) sin^2(pi y), no one-form.
struct TorusMechanicalGeometry {
    v_amp: f64,
}

impl SurfaceGeometry for TorusMechanicalGeometry {
    fn metric(&self, _q: Vec2) -> SymMat2 {
        SymMat2::IDENTITY
    }
    fn one_form(&self, _q: Vec2) -> Vec2 {
        Vec2::ZERO
    }
    fn potential(&self, q: Vec2) -> f64 {
        let sx = (std::f64::consts::PI * q.x).sin();
        let sy = (std::f64::consts::PI * q.y).sin();
        self.v_amp * sx * sx * sy * sy
    }
    fn jet(&self, q: Vec2) -> Option<GeometryJet> {
        use std::f64::consts::PI;
        let sx = (PI * q.x).sin();
        let sy = (PI * q.y).sin();
        Some(GeometryJet {
            g: SymMat2::IDENTITY,
            dg_dx: SymMat2::ZERO,
            dg_dy: SymMat2::ZERO,
            theta: Vec2::ZERO,
            dtheta_dx: Vec2::ZERO,
            dtheta_dy: Vec2::ZERO,
            potential: self.v_amp * sx * sx * sy * sy,
            dpotential: Vec2::new(
                self.v_amp * PI * (2.0 * PI * q.x).sin() * sy * sy,
                self.v_amp * PI * sx * sx * (2.0 * PI * q.y).sin(),
            ),
        })
    }
}

/// Hyperbolic half plane with theta = scale * phi(x) dx_1 / x_2.
struct HalfPlaneGeometry {
    scale: f64,
    grading: Option<PhiProfile>,
}

impl HalfPlaneGeometry {
    fn phi(&self, x: f64) -> (f64, f64) {
        match &self.grading {
            None => (1.0, 0.0),
            Some(p) => (p.value(x), p.derivative(x)),
        }
    }
}

impl SurfaceGeometry for HalfPlaneGeometry {
    fn metric(&self, q: Vec2) -> SymMat2 {
        let s = 1.0 / (q.y * q.y);
        SymMat2::diag(s, s)
    }
    fn one_form(&self, q: Vec2) -> Vec2 {
        Vec2::new(self.scale * self.phi(q.x).0 / q.y, 0.0)
    }
    fn potential(&self, _q: Vec2) -> f64 {
        0.0
    }
    fn jet(&self, q: Vec2) -> Option<GeometryJet> {
        let y = q.y;
        let (phi, dphi) = self.phi(q.x);
        let s = 1.0 / (y * y);
        Some(GeometryJet {
            g: SymMat2::diag(s, s),
            dg_dx: SymMat2::ZERO,
            dg_dy: SymMat2::diag(-2.0 / (y * y * y), -2.0 / (y * y * y)),
            theta: Vec2::new(self.scale * phi / y, 0.0),
            dtheta_dx: Vec2::new(self.scale * dphi / y, 0.0),
            dtheta_dy: Vec2::new(-self.scale * phi / (y * y), 0.0),
            potential: 0.0,
            dpotential: Vec2::ZERO,
        })
    }
}

/// Euclidean plane patch with constant magnetic field (theta = -field * y dx)
/// and optional potential well V = amp sin^2(pi x) sin^2(pi y).
struct PatchGeometry {
    field: f64,
    v_amp: f64,
}

impl SurfaceGeometry for PatchGeometry {
    fn metric(&self, _q: Vec2) -> SymMat2 {
        SymMat2::IDENTITY
    }
    fn one_form(&self, q: Vec2) -> Vec2 {
        Vec2::new(-self.field * q.y, 0.0)
    }
    fn potential(&self, q: Vec2) -> f64 {
        if self.v_amp == 0.0 {
            return 0.0;
        }
        let sx = (std::f64::consts::PI * q.x).sin();
        let sy = (std::f64::consts::PI * q.y).sin();
        self.v_amp * sx * sx * sy * sy
    }
    fn jet(&self, q: Vec2) -> Option<GeometryJet> {
        use std::f64::consts::PI;
        let (pot, dpot) = if self.v_amp == 0.0 {
            (0.0, Vec2::ZERO)
        } else {
            let sx = (PI * q.x).sin();
            let sy = (PI * q.y).sin();
            (
                self.v_amp * sx * sx * sy * sy,
                Vec2::new(
                    self.v_amp * PI * (2.0 * PI * q.x).sin() * sy * sy,
                    self.v_amp * PI * sx * sx * (2.0 * PI * q.y).sin(),
                ),
            )
        };
        Some(GeometryJet {
            g: SymMat2::IDENTITY,
            dg_dx: SymMat2::ZERO,
            dg_dy: SymMat2::ZERO,
            theta: Vec2::new(-self.field * q.y, 0.0),
            dtheta_dx: Vec2::ZERO,
            dtheta_dy: Vec2::new(-self.field, 0.0),
            potential: pot,
            dpotential: dpot,
        })
    }
}

/// Which built-in family a model belongs to; drives family-specific oracles
/// such as the conserved momentum of the torus magnetic system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    TorusMagnetic,
    TorusMechanical,
    HalfPlaneHorocycle,
    PlanePatch,
    Custom,
}

/// Quadratic-at-infinity constants: L(q,v) >= a |v|^2 - b on the working region.
///
/// `a` also bounds the velocity Hessian from below (d_vv L >= 2a g), which is
/// what the mountain-pass and isolating-threshold formulas consume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticBounds {
    pub a: f64,
    pub b: f64,
}

/// A Tonelli Lagrangian on a 2-D chart surface.
///
/// Immutable after construction; all evaluation entry points are pure and
/// safe to share across worker threads.
#[derive(Clone)]
pub struct SurfaceModel {
    name: String,
    chart: ChartKind,
    geometry: Arc<dyn SurfaceGeometry>,
    analytic_jet: bool,
    family: ModelFamily,
    bounds: QuadraticBounds,
    v_max: f64,
    psi: Option<PsiProfile>,
}

impl std::fmt::Debug for SurfaceModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SurfaceModel")
            .field("name", &self.name)
            .field("chart", &self.chart)
            .field("family", &self.family)
            .field("bounds", &self.bounds)
            .finish()
    }
}

/// A full first-order sample of the Lagrangian at (q, v).
#[derive(Debug, Clone, Copy)]
pub struct LagrangianSample {
    pub q: Vec2,
    pub v: Vec2,
    pub l: f64,
    pub dl_dv: Vec2,
    pub dl_dq: Vec2,
    /// E(q,v) = d_vL(q,v).v - L(q,v).
    pub e: f64,
}

/// The one-form theta_q = d_vL(q, 0) together with its metric-dual norm.
#[derive(Debug, Clone, Copy)]
pub struct ThetaSample {
    pub theta: Vec2,
    pub dual_norm: f64,
}

impl SurfaceModel {
    /// Flat torus with L = 1/2 |v|^2 + psi(y) v_x.
    pub fn torus_magnetic(psi: PsiProfile) -> Result<Self, ModelError> {
        let model = SurfaceModel {
            name: "torus_magnetic".into(),
            chart: ChartKind::FlatTorus,
            geometry: Arc::new(TorusMagneticGeometry { psi }),
            analytic_jet: true,
            family: ModelFamily::TorusMagnetic,
            // |theta| <= 1, so -theta(v) <= |v| <= v_max on the region
            bounds: QuadraticBounds {
                a: 0.5,
                b: DEFAULT_V_MAX,
            },
            v_max: DEFAULT_V_MAX,
            psi: Some(psi),
        };
        model.validate()?;
        Ok(model)
    }

    /// Flat torus with L = 1/2 |v|^2 - V(q), V = v_amp sin^2(pi x) sin^2(pi y).
    pub fn torus_mechanical(v_amp: f64) -> Result<Self, ModelError> {
        if v_amp < 0.0 {
            return Err(ModelError::Validation(
                "potential amplitude must be non-negative".into(),
            ));
        }
        let model = SurfaceModel {
            name: "torus_mechanical".into(),
            chart: ChartKind::FlatTorus,
            geometry: Arc::new(TorusMechanicalGeometry { v_amp }),
            analytic_jet: true,
            family: ModelFamily::TorusMechanical,
            bounds: QuadraticBounds { a: 0.5, b: v_amp },
            v_max: DEFAULT_V_MAX,
            psi: None,
        };
        model.validate()?;
        Ok(model)
    }

    /// Hyperbolic half plane with L = 1/2 |v|_g^2 + scale * theta(v),
    /// theta the canonical primitive dx_1 / x_2 of the area form.
    pub fn half_plane_horocycle(scale: f64) -> Result<Self, ModelError> {
        Self::half_plane_inner(scale, None)
    }

    /// Half-plane model with the one-form graded by phi(x) in [1, 2].
    pub fn half_plane_graded(scale: f64, phi: PhiProfile) -> Result<Self, ModelError> {
        Self::half_plane_inner(scale, Some(phi))
    }

    fn half_plane_inner(scale: f64, grading: Option<PhiProfile>) -> Result<Self, ModelError> {
        if scale < 0.0 {
            return Err(ModelError::Validation(
                "one-form scale must be non-negative".into(),
            ));
        }
        let phi_max = if grading.is_some() { 2.0 } else { 1.0 };
        let model = SurfaceModel {
            name: if grading.is_some() {
                "half_plane_graded".into()
            } else {
                "half_plane_horocycle".into()
            },
            chart: ChartKind::HalfPlane,
            geometry: Arc::new(HalfPlaneGeometry { scale, grading }),
            analytic_jet: true,
            family: ModelFamily::HalfPlaneHorocycle,
            bounds: QuadraticBounds {
                a: 0.5,
                b: scale * phi_max * DEFAULT_V_MAX,
            },
            v_max: DEFAULT_V_MAX,
            psi: None,
        };
        model.validate()?;
        Ok(model)
    }

    /// Euclidean rectangle with a constant magnetic field and optional potential.
    pub fn plane_patch_custom(rect: Rect, field: f64, v_amp: f64) -> Result<Self, ModelError> {
        if rect.x_min >= rect.x_max || rect.y_min >= rect.y_max {
            return Err(ModelError::Validation("degenerate patch rectangle".into()));
        }
        let theta_max = field.abs() * rect.y_min.abs().max(rect.y_max.abs());
        let model = SurfaceModel {
            name: "plane_patch_custom".into(),
            chart: ChartKind::PlanePatch(rect),
            geometry: Arc::new(PatchGeometry { field, v_amp }),
            analytic_jet: true,
            family: ModelFamily::PlanePatch,
            bounds: QuadraticBounds {
                a: 0.5,
                b: theta_max * DEFAULT_V_MAX + v_amp.max(0.0),
            },
            v_max: DEFAULT_V_MAX,
            psi: None,
        };
        model.validate()?;
        Ok(model)
    }

    /// User-supplied geometry. Derivatives fall back to central differences
    /// unless the geometry implements `jet`.
    pub fn custom(
        name: &str,
        chart: ChartKind,
        geometry: Arc<dyn SurfaceGeometry>,
        bounds: QuadraticBounds,
        v_max: f64,
    ) -> Result<Self, ModelError> {
        let analytic_jet = geometry.jet(Vec2::new(0.3, 0.4)).is_some();
        let model = SurfaceModel {
            name: name.into(),
            chart,
            geometry,
            analytic_jet,
            family: ModelFamily::Custom,
            bounds,
            v_max,
            psi: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn chart(&self) -> ChartKind {
        self.chart
    }

    pub fn family(&self) -> ModelFamily {
        self.family
    }

    pub fn quadratic_bounds(&self) -> QuadraticBounds {
        self.bounds
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    /// True when the potential vanishes identically, i.e. L is of pure
    /// magnetic type 1/2 |v|^2 + theta(v).
    pub fn is_magnetic(&self) -> bool {
        match self.family {
            ModelFamily::TorusMagnetic | ModelFamily::HalfPlaneHorocycle => true,
            ModelFamily::TorusMechanical | ModelFamily::PlanePatch | ModelFamily::Custom => self
                .region_grid(16)
                .into_iter()
                .all(|q| self.geometry.potential(q) == 0.0),
        }
    }

    /// The bump profile of the torus magnetic model, if any.
    pub fn psi(&self) -> Option<PsiProfile> {
        self.psi
    }

    fn check_domain(&self, q: Vec2) -> Result<(), ModelError> {
        if self.chart.contains(q) {
            Ok(())
        } else {
            let reason = match self.chart {
                ChartKind::HalfPlane => "requires x_2 > 0".to_string(),
                ChartKind::PlanePatch(r) => format!(
                    "outside patch [{}, {}] x [{}, {}]",
                    r.x_min, r.x_max, r.y_min, r.y_max
                ),
                ChartKind::FlatTorus => "non-finite coordinates".to_string(),
            };
            Err(ModelError::DomainViolation { q, reason })
        }
    }

    /// Value-and-derivative pack of the geometry, analytic when available.
    pub fn jet(&self, q: Vec2) -> GeometryJet {
        match self.geometry.jet(q) {
            Some(j) => j,
            None => fd_jet(self.geometry.as_ref(), q),
        }
    }

    pub fn metric(&self, q: Vec2) -> SymMat2 {
        self.geometry.metric(q)
    }

    pub fn potential(&self, q: Vec2) -> f64 {
        self.geometry.potential(q)
    }

    /// L, its first derivatives and the energy at (q, v).
    pub fn eval(&self, q: Vec2, v: Vec2) -> Result<LagrangianSample, ModelError> {
        self.check_domain(q)?;
        let jet = self.jet(q);
        let gv = jet.g.mul_vec(v);
        let l = 0.5 * gv.dot(v) + jet.theta.dot(v) - jet.potential;
        let dl_dv = gv + jet.theta;
        let dl_dq = Vec2::new(
            0.5 * jet.dg_dx.quad(v) + jet.dtheta_dx.dot(v) - jet.dpotential.x,
            0.5 * jet.dg_dy.quad(v) + jet.dtheta_dy.dot(v) - jet.dpotential.y,
        );
        let e = dl_dv.dot(v) - l;
        Ok(LagrangianSample {
            q,
            v,
            l,
            dl_dv,
            dl_dq,
            e,
        })
    }

    /// Energy E(q, v) = 1/2 v^T g v + V(q).
    pub fn energy(&self, q: Vec2, v: Vec2) -> f64 {
        0.5 * self.geometry.metric(q).quad(v) + self.geometry.potential(q)
    }

    /// E(q, 0), the energy on the zero section.
    pub fn rest_energy(&self, q: Vec2) -> f64 {
        self.geometry.potential(q)
    }

    /// The one-form theta_q = d_vL(q, 0) and its dual norm |theta_q|.
    pub fn theta_at(&self, q: Vec2) -> Result<ThetaSample, ModelError> {
        self.check_domain(q)?;
        let theta = self.geometry.one_form(q);
        let g_inv = self.geometry.metric(q).inverse();
        let dual_norm = g_inv.quad(theta).max(0.0).sqrt();
        Ok(ThetaSample { theta, dual_norm })
    }

    /// Fenchel-dual Hamiltonian H(q,p) = 1/2 |p - theta_q|^2_{g^-1} + V(q).
    pub fn hamiltonian(&self, q: Vec2, p: Vec2) -> Result<f64, ModelError> {
        self.check_domain(q)?;
        let jet = self.jet(q);
        let d = p - jet.theta;
        Ok(0.5 * jet.g.inverse().quad(d) + jet.potential)
    }

    /// Generic route for the Fenchel dual: damped Newton on the strictly
    /// concave inner problem max_v [ p.v - L(q,v) ], to gradient norm 1e-10.
    pub fn hamiltonian_newton(&self, q: Vec2, p: Vec2) -> Result<f64, ModelError> {
        self.check_domain(q)?;
        let objective = |v: Vec2| -> Result<(f64, Vec2), ModelError> {
            let s = self.eval(q, v)?;
            Ok((p.dot(v) - s.l, p - s.dl_dv))
        };
        let hess = self.geometry.metric(q); // d_vv L for electromagnetic L
        let mut v = Vec2::ZERO;
        let (mut f, mut grad) = objective(v)?;
        for _ in 0..LEGENDRE_MAX_ITERS {
            if grad.norm() <= LEGENDRE_TOL {
                return Ok(f);
            }
            let step = hess.solve(grad);
            let mut t = 1.0;
            loop {
                let v_new = v + step * t;
                let (f_new, g_new) = objective(v_new)?;
                if f_new >= f || t < 1e-12 {
                    v = v_new;
                    f = f_new;
                    grad = g_new;
                    break;
                }
                t *= 0.5;
            }
        }
        if grad.norm() <= LEGENDRE_TOL {
            Ok(f)
        } else {
            Err(ModelError::LegendreNoConvergence {
                iters: LEGENDRE_MAX_ITERS,
                grad_norm: grad.norm(),
            })
        }
    }

    /// Acceleration solved from the Euler-Lagrange equation,
    /// g(q) vdot = d_qL - (D_q g [v]) v - D_q theta [v].
    pub fn el_acceleration(&self, q: Vec2, v: Vec2) -> Result<Vec2, ModelError> {
        self.check_domain(q)?;
        let jet = self.jet(q);
        let dl_dq = Vec2::new(
            0.5 * jet.dg_dx.quad(v) + jet.dtheta_dx.dot(v) - jet.dpotential.x,
            0.5 * jet.dg_dy.quad(v) + jet.dtheta_dy.dot(v) - jet.dpotential.y,
        );
        let dg_v = jet.dg_dx.scale(v.x) + jet.dg_dy.scale(v.y);
        let dtheta_v = jet.dtheta_dx * v.x + jet.dtheta_dy * v.y;
        let rhs = dl_dq - dg_v.mul_vec(v) - dtheta_v;
        Ok(jet.g.solve(rhs))
    }

    /// Conserved momentum of translation-invariant magnetic models:
    /// I(q,v) = d_vL(q,v) . e_x for the torus magnetic family.
    pub fn momentum_integral(&self, q: Vec2, v: Vec2) -> Option<f64> {
        match self.family {
            ModelFamily::TorusMagnetic => Some(v.x + self.geometry.one_form(q).x),
            _ => None,
        }
    }

    /// Sup of the dual norm |theta_q| over the region, by dense sampling
    /// with local refinement around the best cell.
    pub fn theta_sup_norm(&self, grid_n: usize) -> f64 {
        let f = |q: Vec2| self.theta_at(q).map(|t| t.dual_norm).unwrap_or(0.0);
        let mut best_val: f64 = 0.0;
        let mut best_q = Vec2::ZERO;
        for q in self.region_grid(grid_n) {
            let v = f(q);
            if v > best_val {
                best_val = v;
                best_q = q;
            }
        }
        let mut radius = 1.0 / grid_n as f64;
        for _ in 0..40 {
            let mut improved = false;
            for i in -2i32..=2 {
                for j in -2i32..=2 {
                    let q = Vec2::new(
                        best_q.x + radius * i as f64 / 2.0,
                        best_q.y + radius * j as f64 / 2.0,
                    );
                    if !self.chart.contains(self.chart.canonical(q)) {
                        continue;
                    }
                    let v = f(q);
                    if v > best_val {
                        best_val = v;
                        best_q = q;
                        improved = true;
                    }
                }
            }
            if !improved {
                radius *= 0.5;
            }
        }
        best_val
    }

    /// Deterministic sampling grid of the chart working region.
    pub fn region_grid(&self, n: usize) -> Vec<Vec2> {
        let mut pts = Vec::with_capacity(n * n);
        let (x0, x1, y0, y1) = self.region_box();
        for i in 0..n {
            for j in 0..n {
                let fx = (i as f64 + 0.5) / n as f64;
                let fy = (j as f64 + 0.5) / n as f64;
                pts.push(Vec2::new(x0 + fx * (x1 - x0), y0 + fy * (y1 - y0)));
            }
        }
        pts
    }

    fn region_box(&self) -> (f64, f64, f64, f64) {
        match self.chart {
            ChartKind::FlatTorus => (0.0, 1.0, 0.0, 1.0),
            ChartKind::HalfPlane => (-5.0, 5.0, 0.05, 20.0),
            ChartKind::PlanePatch(r) => (r.x_min, r.x_max, r.y_min, r.y_max),
        }
    }

    fn sample_region_point(&self, rng: &mut impl Rng) -> Vec2 {
        let (x0, x1, y0, y1) = self.region_box();
        match self.chart {
            // log-uniform height avoids oversampling the far field
            ChartKind::HalfPlane => {
                let ly = rng.gen_range(y0.ln()..y1.ln());
                Vec2::new(rng.gen_range(x0..x1), ly.exp())
            }
            _ => Vec2::new(rng.gen_range(x0..x1), rng.gen_range(y0..y1)),
        }
    }

    /// Random velocity with metric norm at most v_max at q.
    fn sample_velocity(&self, q: Vec2, rng: &mut impl Rng) -> Vec2 {
        let ang = rng.gen_range(0.0..std::f64::consts::TAU);
        let dir = Vec2::new(ang.cos(), ang.sin());
        let g_norm = self.geometry.metric(q).quad(dir).sqrt();
        let mag = rng.gen_range(0.0..self.v_max);
        dir * (mag / g_norm)
    }

    /// Construction-time checks: metric positivity, torus periodicity,
    /// derivative cross-checks, the certified quadratic bound, and
    /// E(q,0) = 0 for magnetic models.
    fn validate(&self) -> Result<(), ModelError> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);

        for _ in 0..256 {
            let q = self.sample_region_point(&mut rng);
            let g = self.geometry.metric(q);
            let (lo, _hi) = g.eigenvalues();
            if lo.is_nan() || lo < 1e-12 {
                return Err(ModelError::Validation(format!(
                    "metric not positive definite at ({}, {}): min eigenvalue {lo:.3e}",
                    q.x, q.y
                )));
            }
        }

        if self.chart.is_torus() {
            for i in 0..64 {
                let t = i as f64 / 64.0;
                for (a, b) in [
                    (Vec2::new(t, 0.0), Vec2::new(t, 1.0)),
                    (Vec2::new(0.0, t), Vec2::new(1.0, t)),
                ] {
                    let da = self.geometry.one_form(a) - self.geometry.one_form(b);
                    let ga = self.geometry.metric(a);
                    let gb = self.geometry.metric(b);
                    if da.norm() > 1e-10
                        || (ga.xx - gb.xx).abs() > 1e-10
                        || (ga.xy - gb.xy).abs() > 1e-10
                        || (ga.yy - gb.yy).abs() > 1e-10
                    {
                        return Err(ModelError::Validation(format!(
                            "geometry not periodic across the torus identification at t = {t}"
                        )));
                    }
                }
            }
        }

        if self.analytic_jet {
            for _ in 0..24 {
                let q = self.sample_region_point(&mut rng);
                let v = self.sample_velocity(q, &mut rng);
                self.cross_check_derivatives(q, v)?;
            }
        }

        let QuadraticBounds { a, b } = self.bounds;
        for _ in 0..10_000 {
            let q = self.sample_region_point(&mut rng);
            let v = self.sample_velocity(q, &mut rng);
            let l = {
                let g = self.geometry.metric(q);
                0.5 * g.quad(v) + self.geometry.one_form(q).dot(v) - self.geometry.potential(q)
            };
            let vg2 = self.geometry.metric(q).quad(v);
            if l < a * vg2 - b - 1e-9 {
                return Err(ModelError::Validation(format!(
                    "quadratic bound L >= {a} |v|^2 - {b} fails at ({}, {}) with |v|_g = {:.3}: L = {l:.6}",
                    q.x,
                    q.y,
                    vg2.sqrt()
                )));
            }
        }

        if self.is_magnetic() {
            for _ in 0..64 {
                let q = self.sample_region_point(&mut rng);
                if self.rest_energy(q).abs() > 0.0 {
                    return Err(ModelError::Validation(
                        "magnetic model must have E(q,0) = 0".into(),
                    ));
                }
            }
        }

        Ok(())
    }

    fn cross_check_derivatives(&self, q: Vec2, v: Vec2) -> Result<(), ModelError> {
        let s = self.eval(q, v)?;
        let h = FD_STEP;
        let l_of = |q: Vec2, v: Vec2| -> f64 {
            let g = self.geometry.metric(q);
            0.5 * g.quad(v) + self.geometry.one_form(q).dot(v) - self.geometry.potential(q)
        };
        let fd_dv = Vec2::new(
            (l_of(q, v + Vec2::new(h, 0.0)) - l_of(q, v - Vec2::new(h, 0.0))) / (2.0 * h),
            (l_of(q, v + Vec2::new(0.0, h)) - l_of(q, v - Vec2::new(0.0, h))) / (2.0 * h),
        );
        let fd_dq = Vec2::new(
            (l_of(q + Vec2::new(h, 0.0), v) - l_of(q - Vec2::new(h, 0.0), v)) / (2.0 * h),
            (l_of(q + Vec2::new(0.0, h), v) - l_of(q - Vec2::new(0.0, h), v)) / (2.0 * h),
        );
        let scale = 1.0 + s.dl_dv.norm() + s.dl_dq.norm();
        if (s.dl_dv - fd_dv).norm() > 1e-6 * scale || (s.dl_dq - fd_dq).norm() > 1e-6 * scale {
            return Err(ModelError::Validation(format!(
                "analytic derivatives disagree with finite differences at ({}, {})",
                q.x, q.y
            )));
        }
        Ok(())
    }
}

/// Identifiers understood by [`build_catalog_model`].
pub const CATALOG_IDS: [&str; 4] = [
    "torus_magnetic",
    "torus_mechanical",
    "half_plane_horocycle",
    "plane_patch_custom",
];

/// Parameters for catalog construction; unused fields are ignored per model.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub psi_support: (f64, f64),
    pub theta_scale: f64,
    pub grading: Option<PhiProfile>,
    pub v_amp: f64,
    pub field: f64,
    pub patch: Rect,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            psi_support: (0.25, 0.75),
            theta_scale: 1.0,
            grading: None,
            v_amp: 0.7,
            field: 1.0,
            patch: Rect::unit(),
        }
    }
}

/// Build a model from a string identifier, as addressed by scenario configs.
pub fn build_catalog_model(id: &str, params: &ModelParams) -> Result<SurfaceModel, ModelError> {
    match id {
        "torus_magnetic" => {
            let psi = PsiProfile::new(params.psi_support.0, params.psi_support.1)?;
            SurfaceModel::torus_magnetic(psi)
        }
        "torus_mechanical" => SurfaceModel::torus_mechanical(params.v_amp),
        "half_plane_horocycle" => match params.grading {
            None => SurfaceModel::half_plane_horocycle(params.theta_scale),
            Some(phi) => SurfaceModel::half_plane_graded(params.theta_scale, phi),
        },
        "plane_patch_custom" => {
            SurfaceModel::plane_patch_custom(params.patch, params.field, params.v_amp)
        }
        other => Err(ModelError::UnknownModel(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn torus_magnetic() -> SurfaceModel {
        SurfaceModel::torus_magnetic(PsiProfile::default()).unwrap()
    }

    #[test]
    fn psi_profile_shape() {
        let psi = PsiProfile::default();
        assert_relative_eq!(psi.value(0.5), 1.0);
        assert_eq!(psi.value(psi.y_lo - 0.01), 0.0);
        assert_eq!(psi.value(psi.y_hi + 0.01), 0.0);
        assert_eq!(psi.value(0.0), 0.0);
        // monotone up to the peak, down after it
        let mut prev = 0.0;
        for i in 0..=50 {
            let y = psi.y_lo + (0.5 - psi.y_lo) * i as f64 / 50.0;
            let v = psi.value(y);
            assert!(v >= prev - 1e-12, "psi not monotone rising at y = {y}");
            assert!(psi.derivative(y) >= -1e-12);
            prev = v;
        }
        for i in 0..=50 {
            let y = 0.5 + (psi.y_hi - 0.5) * i as f64 / 50.0;
            assert!(psi.derivative(y) <= 1e-12);
        }
        // derivative matches finite differences
        for y in [0.35, 0.45, 0.55, 0.65] {
            let h = 1e-6;
            let fd = (psi.value(y + h) - psi.value(y - h)) / (2.0 * h);
            assert_relative_eq!(psi.derivative(y), fd, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn phi_profile_shape() {
        let phi = PhiProfile::new(-1.0, -0.5, 0.5, 1.0).unwrap();
        assert_relative_eq!(phi.value(-2.0), 2.0);
        assert_relative_eq!(phi.value(2.0), 2.0);
        assert_relative_eq!(phi.value(0.0), 1.0);
        for i in 0..=40 {
            let x = -1.0 + 0.5 * i as f64 / 40.0;
            assert!(phi.derivative(x) <= 1e-12, "phi must decrease on [c, e]");
            assert!((1.0..=2.0).contains(&phi.value(x)));
        }
        for i in 0..=40 {
            let x = 0.5 + 0.5 * i as f64 / 40.0;
            assert!(phi.derivative(x) >= -1e-12, "phi must increase on [f, d]");
        }
    }

    #[test]
    fn torus_lagrangian_fixtures() {
        let model = torus_magnetic();
        // peak of the bump: L = 1/2 + psi(1/2) * 1 = 3/2, E = 1/2
        let s = model
            .eval(Vec2::new(0.5, 0.5), Vec2::new(1.0, 0.0))
            .unwrap();
        assert_relative_eq!(s.l, 1.5, epsilon = 1e-12);
        assert_relative_eq!(s.e, 0.5, epsilon = 1e-12);
        // zero velocity on a magnetic model
        let s0 = model.eval(Vec2::new(0.3, 0.7), Vec2::ZERO).unwrap();
        assert_eq!(s0.l, 0.0);
        assert_eq!(s0.e, 0.0);
    }

    #[test]
    fn half_plane_fixtures() {
        let model = SurfaceModel::half_plane_horocycle(1.0).unwrap();
        let s = model
            .eval(Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0))
            .unwrap();
        assert_relative_eq!(s.l, 1.5, epsilon = 1e-12);
        // theta at (0, 2) is (1/2, 0) with dual norm 1
        let t = model.theta_at(Vec2::new(0.0, 2.0)).unwrap();
        assert_relative_eq!(t.theta.x, 0.5, epsilon = 1e-12);
        assert_relative_eq!(t.theta.y, 0.0);
        assert_relative_eq!(t.dual_norm, 1.0, epsilon = 1e-12);
        // domain rejection below the boundary
        assert!(matches!(
            model.eval(Vec2::new(0.0, -0.1), Vec2::ZERO),
            Err(ModelError::DomainViolation { .. })
        ));
    }

    #[test]
    fn theta_fixtures_on_torus() {
        let model = torus_magnetic();
        let t = model.theta_at(Vec2::new(0.37, 0.5)).unwrap();
        assert_relative_eq!(t.theta.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(t.theta.y, 0.0);
        assert_relative_eq!(t.dual_norm, 1.0, epsilon = 1e-12);
        let mech = SurfaceModel::torus_mechanical(0.7).unwrap();
        let t = mech.theta_at(Vec2::new(0.2, 0.9)).unwrap();
        assert_eq!(t.theta, Vec2::ZERO);
        assert_eq!(t.dual_norm, 0.0);
    }

    #[test]
    fn hamiltonian_fixtures() {
        let model = torus_magnetic();
        // p = theta_q gives H = 0
        let q = Vec2::new(0.1, 0.5);
        let p = model.theta_at(q).unwrap().theta;
        assert_relative_eq!(model.hamiltonian(q, p).unwrap(), 0.0, epsilon = 1e-14);
        // p = 0 at the bump peak gives 1/2 |theta|^2 = 1/2
        assert_relative_eq!(
            model.hamiltonian(q, Vec2::ZERO).unwrap(),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn newton_route_matches_analytic_hamiltonian() {
        let mech = SurfaceModel::torus_mechanical(0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let q = Vec2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let p = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let analytic = 0.5 * p.norm_sq() + mech.potential(q);
            assert_relative_eq!(
                mech.hamiltonian_newton(q, p).unwrap(),
                analytic,
                epsilon = 1e-9
            );
            assert_relative_eq!(
                mech.hamiltonian(q, p).unwrap(),
                analytic,
                epsilon = 1e-12
            );
        }
        let magnetic = torus_magnetic();
        for _ in 0..50 {
            let q = Vec2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let p = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            assert_relative_eq!(
                magnetic.hamiltonian_newton(q, p).unwrap(),
                magnetic.hamiltonian(q, p).unwrap(),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn fenchel_inequality_and_energy_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let models = [
            torus_magnetic(),
            SurfaceModel::torus_mechanical(0.7).unwrap(),
            SurfaceModel::half_plane_horocycle(1.0).unwrap(),
        ];
        for model in &models {
            for _ in 0..2000 {
                let q = model.sample_region_point(&mut rng);
                let v = model.sample_velocity(q, &mut rng) * 0.2;
                let p = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let s = model.eval(q, v).unwrap();
                let h = model.hamiltonian(q, p).unwrap();
                assert!(
                    p.dot(v) <= s.l + h + 1e-9,
                    "Fenchel inequality violated on {}",
                    model.name()
                );
                // equality at p = d_vL(q, v)
                let h_eq = model.hamiltonian(q, s.dl_dv).unwrap();
                assert_relative_eq!(s.dl_dv.dot(v), s.l + h_eq, epsilon = 1e-9);
                // E(q,v) = H(q, d_vL(q,v))
                assert_relative_eq!(s.e, h_eq, epsilon = 1e-9);
                // definitional identity for the energy field
                assert_relative_eq!(s.e, model.energy(q, v), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let models = [
            torus_magnetic(),
            SurfaceModel::torus_mechanical(0.7).unwrap(),
            SurfaceModel::half_plane_horocycle(1.0).unwrap(),
            SurfaceModel::plane_patch_custom(Rect::unit(), 1.0, 0.3).unwrap(),
        ];
        for model in &models {
            for _ in 0..30 {
                let q = model.sample_region_point(&mut rng);
                let v = model.sample_velocity(q, &mut rng) * 0.3;
                model.cross_check_derivatives(q, v).unwrap();
            }
        }
    }

    #[test]
    fn custom_geometry_uses_fd_fallback() {
        struct Tilted;
        impl SurfaceGeometry for Tilted {
            fn metric(&self, q: Vec2) -> SymMat2 {
                SymMat2 {
                    xx: 1.0 + 0.1 * (std::f64::consts::TAU * q.y).sin().powi(2),
                    xy: 0.0,
                    yy: 1.0,
                }
            }
            fn one_form(&self, q: Vec2) -> Vec2 {
                Vec2::new(
                    0.2 * (std::f64::consts::TAU * q.y).cos(),
                    0.2 * (std::f64::consts::TAU * q.x).sin(),
                )
            }
            fn potential(&self, _q: Vec2) -> f64 {
                0.0
            }
        }
        let model = SurfaceModel::custom(
            "tilted",
            ChartKind::FlatTorus,
            Arc::new(Tilted),
            QuadraticBounds { a: 0.25, b: 5.0 },
            10.0,
        )
        .unwrap();
        let s = model
            .eval(Vec2::new(0.2, 0.3), Vec2::new(0.5, -0.4))
            .unwrap();
        // FD derivatives still satisfy the definitional energy identity
        assert_relative_eq!(s.e, s.dl_dv.dot(s.v) - s.l, epsilon = 1e-12);
        assert_relative_eq!(s.e, model.energy(s.q, s.v), epsilon = 1e-7);
    }

    #[test]
    fn catalog_round_trip() {
        let params = ModelParams::default();
        for id in CATALOG_IDS {
            let model = build_catalog_model(id, &params).unwrap();
            assert_eq!(model.name(), id);
        }
        assert!(matches!(
            build_catalog_model("nope", &params),
            Err(ModelError::UnknownModel(_))
        ));
    }

    #[test]
    fn magnetic_rest_energy_is_zero() {
        let model = torus_magnetic();
        let mut max = 0.0_f64;
        for q in model.region_grid(64) {
            max = max.max(model.rest_energy(q).abs());
        }
        assert_eq!(max, 0.0);
    }
}
