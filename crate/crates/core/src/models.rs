//! Fast-slow system abstraction and the two built-in systems under study:
//! a cubic example with odd symmetry and the canonical fold normal form
//! truncated to its leading terms.
//!
//! The full vector field is (f1, f2, eps*g); the frozen (eps = 0) fast
//! subsystem is the planar field (f1, f2) with z as a parameter.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("vector field evaluated to a non-finite component at ({x}, {y}, {z})")]
    NonFinite { x: f64, y: f64, z: f64 },
    #[error("invalid parameters: {0}")]
    BadParams(String),
}

/// A point in the base (x, y, z) space: two fast coordinates and one slow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BasePoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { x: a[0], y: a[1], z: a[2] }
    }

    pub fn dist(&self, other: &BasePoint) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2))
            .sqrt()
    }
}

/// Singular parameter eps and stability parameter delta.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub eps: f64,
    pub delta: f64,
}

impl Params {
    pub fn new(eps: f64, delta: f64) -> Result<Self, ModelError> {
        if eps < 0.0 || delta < 0.0 || !eps.is_finite() || !delta.is_finite() {
            return Err(ModelError::BadParams(format!(
                "eps and delta must be finite and nonnegative, got ({eps}, {delta})"
            )));
        }
        Ok(Self { eps, delta })
    }

    /// Frozen fast subsystem: eps = 0 at the same delta.
    pub fn frozen(self) -> Self {
        Self { eps: 0.0, delta: self.delta }
    }
}

/// Evaluable fast field (f1, f2), slow field g, and the fast Jacobian
/// d(f1,f2)/d(x,y). Implementations are immutable after construction and
/// freely shareable across threads.
pub trait FastSlowSystem: Sync {
    fn fast(&self, p: &BasePoint, prm: &Params) -> [f64; 2];
    fn slow(&self, p: &BasePoint, prm: &Params) -> f64;
    fn fast_jacobian(&self, p: &BasePoint, prm: &Params) -> [[f64; 2]; 2];

    /// Full 3x3 Jacobian of (f1, f2, eps*g). The default central-difference
    /// fallback serves user-defined systems; built-ins override it with the
    /// exact matrix.
    fn full_jacobian(&self, p: &BasePoint, prm: &Params) -> [[f64; 3]; 3] {
        let h = 1e-6;
        let mut jac = [[0.0; 3]; 3];
        for col in 0..3 {
            let mut pp = p.to_array();
            let mut pm = p.to_array();
            pp[col] += h;
            pm[col] -= h;
            let (pp, pm) = (BasePoint::from_array(pp), BasePoint::from_array(pm));
            let fp = self.fast(&pp, prm);
            let fm = self.fast(&pm, prm);
            let gp = self.slow(&pp, prm);
            let gm = self.slow(&pm, prm);
            jac[0][col] = (fp[0] - fm[0]) / (2.0 * h);
            jac[1][col] = (fp[1] - fm[1]) / (2.0 * h);
            jac[2][col] = prm.eps * (gp - gm) / (2.0 * h);
        }
        jac
    }

    fn name(&self) -> &str;

    /// Optional involution on (x, y, z) under which the field is odd.
    fn symmetry(&self, _p: &BasePoint) -> Option<BasePoint> {
        None
    }
}

/// Full velocity 3-vector (f1, f2, eps*g) at a point.
pub fn eval_full_field(
    sys: &dyn FastSlowSystem,
    p: &BasePoint,
    prm: &Params,
) -> Result<[f64; 3], ModelError> {
    let f = sys.fast(p, prm);
    let g = sys.slow(p, prm);
    let v = [f[0], f[1], prm.eps * g];
    if v.iter().any(|c| !c.is_finite()) {
        return Err(ModelError::NonFinite { x: p.x, y: p.y, z: p.z });
    }
    Ok(v)
}

/// Field closure over [x, y, z] suitable for the integrator.
pub fn field_closure<'a>(
    sys: &'a dyn FastSlowSystem,
    prm: Params,
) -> impl Fn(f64, &[f64; 3]) -> [f64; 3] + 'a {
    move |_t, y| {
        let p = BasePoint::from_array(*y);
        let f = sys.fast(&p, &prm);
        [f[0], f[1], prm.eps * sys.slow(&p, &prm)]
    }
}

/// Frozen fast subsystem closure over [x, y] at fixed z.
pub fn frozen_fast_closure<'a>(
    sys: &'a dyn FastSlowSystem,
    z: f64,
    delta: f64,
) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + 'a {
    let prm = Params { eps: 0.0, delta };
    move |_t, y| sys.fast(&BasePoint::new(y[0], y[1], z), &prm)
}

/// The worked example:
///   x' = z + 3(y^3 - y) + delta*x*(1/3 - y^2)
///   y' = -x
///   z' = eps*sin(5y/2)
/// Critical manifold z = 3(y - y^3), x = 0; fold points at
/// (0, -+1/sqrt(3), -+2/sqrt(3)); odd under (x,y,z) -> (-x,-y,-z).
pub struct BuiltinExample;

impl FastSlowSystem for BuiltinExample {
    fn fast(&self, p: &BasePoint, prm: &Params) -> [f64; 2] {
        let (x, y, z) = (p.x, p.y, p.z);
        [
            z + 3.0 * (y * y * y - y) + prm.delta * x * (1.0 / 3.0 - y * y),
            -x,
        ]
    }

    fn slow(&self, p: &BasePoint, _prm: &Params) -> f64 {
        (2.5 * p.y).sin()
    }

    fn fast_jacobian(&self, p: &BasePoint, prm: &Params) -> [[f64; 2]; 2] {
        let (x, y) = (p.x, p.y);
        [
            [
                prm.delta * (1.0 / 3.0 - y * y),
                3.0 * (3.0 * y * y - 1.0) - 2.0 * prm.delta * x * y,
            ],
            [-1.0, 0.0],
        ]
    }

    fn full_jacobian(&self, p: &BasePoint, prm: &Params) -> [[f64; 3]; 3] {
        let j = self.fast_jacobian(p, prm);
        [
            [j[0][0], j[0][1], 1.0],
            [-1.0, 0.0, 0.0],
            [0.0, prm.eps * 2.5 * (2.5 * p.y).cos(), 0.0],
        ]
    }

    fn name(&self) -> &str {
        "example"
    }

    fn symmetry(&self, p: &BasePoint) -> Option<BasePoint> {
        Some(BasePoint::new(-p.x, -p.y, -p.z))
    }
}

/// The canonical fold normal form with higher-order terms dropped:
///   X' = Z - Y^2 + c1*delta*X*Y
///   Y' = -X
///   Z' = -eps
/// Critical manifold X = 0, Z = Y^2 with the fold at the origin. The
/// coefficient of XY is realized as c1*delta, linear in delta.
pub struct CanonicalFold {
    pub c1: f64,
}

impl FastSlowSystem for CanonicalFold {
    fn fast(&self, p: &BasePoint, prm: &Params) -> [f64; 2] {
        [p.z - p.y * p.y + self.c1 * prm.delta * p.x * p.y, -p.x]
    }

    fn slow(&self, _p: &BasePoint, _prm: &Params) -> f64 {
        -1.0
    }

    fn fast_jacobian(&self, p: &BasePoint, prm: &Params) -> [[f64; 2]; 2] {
        let cd = self.c1 * prm.delta;
        [[cd * p.y, -2.0 * p.y + cd * p.x], [-1.0, 0.0]]
    }

    fn full_jacobian(&self, p: &BasePoint, prm: &Params) -> [[f64; 3]; 3] {
        let j = self.fast_jacobian(p, prm);
        [
            [j[0][0], j[0][1], 1.0],
            [-1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0],
        ]
    }

    fn name(&self) -> &str {
        "canonical_fold"
    }
}

pub fn builtin_example() -> BuiltinExample {
    BuiltinExample
}

pub fn builtin_canonical_fold(c1: f64) -> CanonicalFold {
    CanonicalFold { c1 }
}
