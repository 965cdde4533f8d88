//! Small fixed-size geometry: chart points, covectors, symmetric 2x2 matrices,
//! and the chart conventions (torus wrapping, half-plane domain, rectangles).

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// A point or vector in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Euclidean norm of the coordinate tuple.
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

/// Symmetric 2x2 matrix, used for metric tensors and velocity Hessians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymMat2 {
    pub const IDENTITY: SymMat2 = SymMat2 {
        xx: 1.0,
        xy: 0.0,
        yy: 1.0,
    };
    pub const ZERO: SymMat2 = SymMat2 {
        xx: 0.0,
        xy: 0.0,
        yy: 0.0,
    };

    pub fn diag(a: f64, b: f64) -> Self {
        SymMat2 {
            xx: a,
            xy: 0.0,
            yy: b,
        }
    }

    pub fn mul_vec(self, v: Vec2) -> Vec2 {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    /// Quadratic form v^T M v.
    pub fn quad(self, v: Vec2) -> f64 {
        self.mul_vec(v).dot(v)
    }

    pub fn det(self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn inverse(self) -> SymMat2 {
        let d = self.det();
        SymMat2 {
            xx: self.yy / d,
            xy: -self.xy / d,
            yy: self.xx / d,
        }
    }

    /// Solve M u = v.
    pub fn solve(self, v: Vec2) -> Vec2 {
        self.inverse().mul_vec(v)
    }

    /// Eigenvalues in ascending order (always real for symmetric input).
    pub fn eigenvalues(self) -> (f64, f64) {
        let tr = self.xx + self.yy;
        let disc = ((self.xx - self.yy) * 0.5).hypot(self.xy);
        (0.5 * tr - disc, 0.5 * tr + disc)
    }

    pub fn scale(self, s: f64) -> SymMat2 {
        SymMat2 {
            xx: self.xx * s,
            xy: self.xy * s,
            yy: self.yy * s,
        }
    }

}

impl Add for SymMat2 {
    type Output = SymMat2;
    fn add(self, o: SymMat2) -> SymMat2 {
        SymMat2 {
            xx: self.xx + o.xx,
            xy: self.xy + o.xy,
            yy: self.yy + o.yy,
        }
    }
}

/// Axis-aligned rectangle used as the domain of plane-patch charts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn unit() -> Rect {
        Rect {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
        }
    }

    pub fn contains(&self, q: Vec2) -> bool {
        q.x >= self.x_min && q.x <= self.x_max && q.y >= self.y_min && q.y <= self.y_max
    }
}

/// Chart conventions for the supported model surfaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartKind {
    /// Coordinates in [0,1)^2 with periodic identification.
    FlatTorus,
    /// Upper half plane x_2 > 0.
    HalfPlane,
    /// Bounded rectangle in R^2.
    PlanePatch(Rect),
}

/// Fold a coordinate into [0,1).
pub fn wrap_unit(t: f64) -> f64 {
    let r = t - t.floor();
    // t.floor() can leave exactly 1.0 for tiny negative t
    if r >= 1.0 {
        r - 1.0
    } else {
        r
    }
}

/// Signed representative of t modulo 1 in [-1/2, 1/2).
pub fn wrap_signed(t: f64) -> f64 {
    let r = wrap_unit(t + 0.5) - 0.5;
    debug_assert!((-0.5..0.5).contains(&r) || !r.is_finite());
    r
}

impl ChartKind {
    pub fn contains(&self, q: Vec2) -> bool {
        match self {
            ChartKind::FlatTorus => q.is_finite(),
            ChartKind::HalfPlane => q.is_finite() && q.y > 0.0,
            ChartKind::PlanePatch(rect) => q.is_finite() && rect.contains(q),
        }
    }

    /// Canonical chart representative of a point.
    pub fn canonical(&self, q: Vec2) -> Vec2 {
        match self {
            ChartKind::FlatTorus => Vec2::new(wrap_unit(q.x), wrap_unit(q.y)),
            _ => q,
        }
    }

    /// Displacement from `a` to `b`; minimal-image on the torus.
    pub fn displacement(&self, a: Vec2, b: Vec2) -> Vec2 {
        match self {
            ChartKind::FlatTorus => Vec2::new(wrap_signed(b.x - a.x), wrap_signed(b.y - a.y)),
            _ => b - a,
        }
    }

    /// Chart distance between two points (minimal-image on the torus).
    pub fn distance(&self, a: Vec2, b: Vec2) -> f64 {
        self.displacement(a, b).norm()
    }

    /// Point reached from `a` by half of the displacement `d`.
    pub fn midpoint_along(&self, a: Vec2, d: Vec2) -> Vec2 {
        self.canonical(a + d * 0.5)
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, ChartKind::FlatTorus)
    }
}
