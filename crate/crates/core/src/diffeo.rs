//! Self-diffeomorphisms of the model manifolds and their algebra.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{integrate_field, AnalyticField, IntegratorSettings, VectorField};
use crate::lift::CircleLift;
use crate::manifold::{
    angle_diff, distance, exp_point, log_point, ManifoldId, Point, Tangent, TangentVec,
};
use crate::quat::Quat;

/// Default step for geodesic central differences.
pub const FD_STEP: f64 = 1e-5;

/// Allowed deviation from unit norm for quaternion parameters.
pub const UNIT_TOL: f64 = 1e-12;

/// Time-`t` map of a vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTimeMap {
    pub field: Arc<VectorField>,
    pub t: f64,
    pub settings: IntegratorSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diffeo {
    CircleRotation(f64),
    /// `θ ↦ -θ`, complex conjugation on the unit circle.
    CircleReflection,
    CircleLifted(Arc<CircleLift>),
    QuatLeftMult(Quat),
    /// `p ↦ r p r⁻¹`.
    QuatConjugation(Quat),
    TorusTranslation(Vec<f64>),
    FlowTime(Arc<FlowTimeMap>),
    /// Applied right to left.
    Compose(ManifoldId, Vec<Diffeo>),
    Inverse(Box<Diffeo>),
    Power(Box<Diffeo>, i64),
}

fn check_unit(q: Quat) -> Result<Quat> {
    if !q.is_finite() || (q.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidQuaternion(format!("{q:?} is not a unit quaternion")));
    }
    Ok(q.normalize())
}

impl Diffeo {
    pub fn identity(m: ManifoldId) -> Diffeo {
        match m {
            ManifoldId::Circle => Diffeo::CircleRotation(0.0),
            ManifoldId::Sphere3 => Diffeo::QuatLeftMult(Quat::ONE),
            ManifoldId::Torus(n) => Diffeo::TorusTranslation(vec![0.0; n]),
        }
    }

    pub fn quat_left_mult(q: Quat) -> Result<Diffeo> {
        Ok(Diffeo::QuatLeftMult(check_unit(q)?))
    }

    pub fn quat_conjugation(r: Quat) -> Result<Diffeo> {
        Ok(Diffeo::QuatConjugation(check_unit(r)?))
    }

    pub fn circle_lifted(lift: CircleLift) -> Diffeo {
        Diffeo::CircleLifted(Arc::new(lift))
    }

    /// Time-`t` map of `field`. Fields with a closed-form flow collapse to
    /// the corresponding rotation, left multiplication or translation when
    /// the fast path is enabled.
    pub fn flow_time(field: Arc<VectorField>, t: f64, settings: IntegratorSettings) -> Diffeo {
        if settings.exact_fast_path {
            if let VectorField::Analytic(a) = field.as_ref() {
                match a {
                    AnalyticField::ConstantCircle { k } => return Diffeo::CircleRotation(k * t),
                    AnalyticField::LeftInvariantS3 { omega } => {
                        return Diffeo::QuatLeftMult(omega.imag().scale(t).exp_pure().normalize())
                    }
                    AnalyticField::TorusConstant { v } => {
                        return Diffeo::TorusTranslation(v.iter().map(|x| x * t).collect())
                    }
                    AnalyticField::CircleFourier { .. } => {}
                }
            }
        }
        Diffeo::FlowTime(Arc::new(FlowTimeMap { field, t, settings }))
    }

    pub fn manifold(&self) -> ManifoldId {
        match self {
            Diffeo::CircleRotation(_) | Diffeo::CircleReflection | Diffeo::CircleLifted(_) => {
                ManifoldId::Circle
            }
            Diffeo::QuatLeftMult(_) | Diffeo::QuatConjugation(_) => ManifoldId::Sphere3,
            Diffeo::TorusTranslation(v) => ManifoldId::Torus(v.len()),
            Diffeo::FlowTime(f) => f.field.manifold(),
            Diffeo::Compose(m, _) => *m,
            Diffeo::Inverse(d) | Diffeo::Power(d, _) => d.manifold(),
        }
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        self.manifold().ensure_same(p.manifold())?;
        match (self, p) {
            (Diffeo::CircleRotation(a), Point::Circle(t)) => Ok(Point::circle(t + a)),
            (Diffeo::CircleReflection, Point::Circle(t)) => Ok(Point::circle(-t)),
            (Diffeo::CircleLifted(l), Point::Circle(t)) => Ok(Point::circle(l.apply_angle(*t)?)),
            (Diffeo::QuatLeftMult(q), Point::Sphere3(x)) => Ok(Point::Sphere3((*q * *x).normalize())),
            (Diffeo::QuatConjugation(r), Point::Sphere3(x)) => {
                Ok(Point::Sphere3((*r * *x * r.conj()).normalize()))
            }
            (Diffeo::TorusTranslation(v), Point::Torus(x)) => {
                Ok(Point::torus(x.iter().zip(v).map(|(a, b)| a + b).collect()))
            }
            (Diffeo::FlowTime(f), _) => integrate_field(&f.field, f.t, p, &f.settings),
            (Diffeo::Compose(_, parts), _) => {
                let mut x = p.clone();
                for d in parts.iter().rev() {
                    x = d.apply(&x)?;
                }
                Ok(x)
            }
            (Diffeo::Inverse(d), _) => d.apply_inverse(p),
            (Diffeo::Power(d, a), _) => {
                let mut x = p.clone();
                for _ in 0..a.unsigned_abs() {
                    x = if *a > 0 { d.apply(&x)? } else { d.apply_inverse(&x)? };
                }
                Ok(x)
            }
            _ => unreachable!("manifold checked above"),
        }
    }

    fn apply_inverse(&self, p: &Point) -> Result<Point> {
        match (self, p) {
            (Diffeo::CircleLifted(l), Point::Circle(t)) => {
                Ok(Point::circle(l.inverse_eval(t / TAU)? * TAU))
            }
            (Diffeo::Inverse(d), _) => d.apply(p),
            _ => inverse(self).apply(p),
        }
    }

    /// Number of elementary compositions [`power`] performs for exponent `a`;
    /// used to scale tolerances for floating-point accumulation.
    pub fn power_composition_count(&self, a: i64) -> u64 {
        match self {
            _ if a == 0 => 1,
            Diffeo::CircleRotation(_) | Diffeo::TorusTranslation(_) | Diffeo::CircleReflection => 1,
            Diffeo::QuatLeftMult(_) | Diffeo::QuatConjugation(_) => {
                u64::from(Quat::pow_product_count(a)).max(1)
            }
            _ => a.unsigned_abs(),
        }
    }

    /// Serializable descriptor, when this diffeomorphism has one.
    pub fn descriptor(&self) -> Option<DiffeoSpec> {
        Some(match self {
            Diffeo::CircleRotation(a) => DiffeoSpec::Rotation { angle: *a, pi: 0.0 },
            Diffeo::CircleReflection => DiffeoSpec::Reflection,
            Diffeo::CircleLifted(l) => DiffeoSpec::Lifted {
                samples: l.values().to_vec(),
            },
            Diffeo::QuatLeftMult(q) => DiffeoSpec::QuatLeft { q: q.to_array() },
            Diffeo::QuatConjugation(r) => DiffeoSpec::QuatConjugation { r: r.to_array() },
            Diffeo::TorusTranslation(v) => DiffeoSpec::TorusTranslation { v: v.clone() },
            Diffeo::FlowTime(f) => match f.field.as_ref() {
                VectorField::Analytic(a) => DiffeoSpec::FlowTime {
                    field: a.clone(),
                    t: f.t,
                    step: Some(f.settings.step),
                },
                VectorField::Sampled(_) => return None,
            },
            Diffeo::Compose(_, parts) => DiffeoSpec::Compose {
                parts: parts.iter().map(Diffeo::descriptor).collect::<Option<_>>()?,
            },
            Diffeo::Inverse(d) => DiffeoSpec::Inverse {
                of: Box::new(d.descriptor()?),
            },
            Diffeo::Power(d, a) => DiffeoSpec::Power {
                of: Box::new(d.descriptor()?),
                a: *a,
            },
        })
    }
}

impl fmt::Display for Diffeo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diffeo::CircleRotation(a) => write!(f, "rotation({a})"),
            Diffeo::CircleReflection => write!(f, "reflection"),
            Diffeo::CircleLifted(l) => write!(f, "lifted[{}]", l.len()),
            Diffeo::QuatLeftMult(q) => write!(f, "L({:.6},{:.6},{:.6},{:.6})", q.w, q.x, q.y, q.z),
            Diffeo::QuatConjugation(r) => {
                write!(f, "conj({:.6},{:.6},{:.6},{:.6})", r.w, r.x, r.y, r.z)
            }
            Diffeo::TorusTranslation(v) => write!(f, "translate{v:?}"),
            Diffeo::FlowTime(m) => write!(f, "flow(t={})", m.t),
            Diffeo::Compose(_, parts) => {
                let s: Vec<String> = parts.iter().map(ToString::to_string).collect();
                write!(f, "{}", s.join(" ∘ "))
            }
            Diffeo::Inverse(d) => write!(f, "({d})⁻¹"),
            Diffeo::Power(d, a) => write!(f, "({d})^{a}"),
        }
    }
}

/// `d1 ∘ d2`, simplified where the result has an exact closed form.
pub fn compose(d1: &Diffeo, d2: &Diffeo) -> Result<Diffeo> {
    let m = d1.manifold();
    m.ensure_same(d2.manifold())?;
    Ok(match (d1, d2) {
        (Diffeo::CircleRotation(a), Diffeo::CircleRotation(b)) => Diffeo::CircleRotation(a + b),
        (Diffeo::CircleReflection, Diffeo::CircleReflection) => Diffeo::identity(m),
        (Diffeo::QuatLeftMult(p), Diffeo::QuatLeftMult(q)) => Diffeo::QuatLeftMult((*p * *q).normalize()),
        (Diffeo::QuatConjugation(r), Diffeo::QuatConjugation(s)) => {
            Diffeo::QuatConjugation((*r * *s).normalize())
        }
        (Diffeo::TorusTranslation(u), Diffeo::TorusTranslation(v)) => {
            Diffeo::TorusTranslation(u.iter().zip(v).map(|(a, b)| a + b).collect())
        }
        _ => {
            let mut parts = Vec::new();
            for d in [d1, d2] {
                match d {
                    Diffeo::Compose(_, inner) => parts.extend(inner.iter().cloned()),
                    other => parts.push(other.clone()),
                }
            }
            Diffeo::Compose(m, parts)
        }
    })
}

pub fn inverse(d: &Diffeo) -> Diffeo {
    match d {
        Diffeo::CircleRotation(a) => Diffeo::CircleRotation(-a),
        Diffeo::CircleReflection => Diffeo::CircleReflection,
        Diffeo::QuatLeftMult(q) => Diffeo::QuatLeftMult(q.conj()),
        Diffeo::QuatConjugation(r) => Diffeo::QuatConjugation(r.conj()),
        Diffeo::TorusTranslation(v) => Diffeo::TorusTranslation(v.iter().map(|x| -x).collect()),
        Diffeo::FlowTime(f) => Diffeo::FlowTime(Arc::new(FlowTimeMap {
            field: f.field.clone(),
            t: -f.t,
            settings: f.settings,
        })),
        Diffeo::Compose(m, parts) => Diffeo::Compose(*m, parts.iter().rev().map(inverse).collect()),
        Diffeo::Inverse(inner) => (**inner).clone(),
        Diffeo::Power(inner, a) => Diffeo::Power(inner.clone(), -a),
        Diffeo::CircleLifted(_) => Diffeo::Inverse(Box::new(d.clone())),
    }
}

/// `d^a`. Rotations, translations and quaternion maps are reduced
/// algebraically (quaternion powers by binary exponentiation with
/// renormalization); everything else becomes a symbolic power node.
pub fn power(d: &Diffeo, a: i64) -> Diffeo {
    if a == 0 {
        return Diffeo::identity(d.manifold());
    }
    if a == 1 {
        return d.clone();
    }
    match d {
        Diffeo::CircleRotation(al) => Diffeo::CircleRotation(al * a as f64),
        Diffeo::CircleReflection => {
            if a % 2 == 0 {
                Diffeo::identity(ManifoldId::Circle)
            } else {
                Diffeo::CircleReflection
            }
        }
        Diffeo::QuatLeftMult(q) => Diffeo::QuatLeftMult(q.powi_unit(a)),
        Diffeo::QuatConjugation(r) => Diffeo::QuatConjugation(r.powi_unit(a)),
        Diffeo::TorusTranslation(v) => Diffeo::TorusTranslation(v.iter().map(|x| x * a as f64).collect()),
        Diffeo::Power(inner, b) => Diffeo::Power(inner.clone(), a * b),
        _ => Diffeo::Power(Box::new(d.clone()), a),
    }
}

/// Pushforward of a tangent vector. Closed forms for the isometric families
/// and lifts; geodesic central differences otherwise.
pub fn differential(d: &Diffeo, v: &Tangent) -> Result<Tangent> {
    let base = d.apply(&v.base)?;
    let vec = match (d, &v.base, &v.vec) {
        (Diffeo::CircleRotation(_), _, TangentVec::Circle(c)) => TangentVec::Circle(*c),
        (Diffeo::CircleReflection, _, TangentVec::Circle(c)) => TangentVec::Circle(-c),
        (Diffeo::CircleLifted(l), Point::Circle(t), TangentVec::Circle(c)) => {
            TangentVec::Circle(c * l.derivative(t / TAU)?)
        }
        (Diffeo::QuatLeftMult(q), _, TangentVec::Sphere3(w)) => TangentVec::Sphere3(*q * *w),
        (Diffeo::QuatConjugation(r), _, TangentVec::Sphere3(w)) => {
            TangentVec::Sphere3(*r * *w * r.conj())
        }
        (Diffeo::TorusTranslation(_), _, TangentVec::Torus(x)) => TangentVec::Torus(x.clone()),
        _ => return differential_fd(d, v, FD_STEP),
    };
    Tangent::projected(base, vec)
}

/// Central difference along the geodesic through `v.base` in direction `v`,
/// with step `h` in arc length.
pub fn differential_fd(d: &Diffeo, v: &Tangent, h: f64) -> Result<Tangent> {
    let p = &v.base;
    let q = d.apply(p)?;
    let n = v.norm();
    if n == 0.0 {
        return Ok(Tangent::zero(q));
    }
    let unit = v.scale(1.0 / n);
    let plus = d.apply(&exp_point(p, &unit.scale(h))?)?;
    let minus = d.apply(&exp_point(p, &unit.scale(-h))?)?;
    let lp = log_point(&q, &plus)?.vec.components();
    let lm = log_point(&q, &minus)?.vec.components();
    let c: Vec<f64> = lp.iter().zip(&lm).map(|(a, b)| (a - b) * n / (2.0 * h)).collect();
    Tangent::projected(q.clone(), TangentVec::from_components(q.manifold(), &c))
}

/// Largest pointwise distance between two maps over `grid`, with the index
/// of the worst grid point.
pub fn sup_distance_witness(d1: &Diffeo, d2: &Diffeo, grid: &[Point]) -> Result<(f64, usize)> {
    d1.manifold().ensure_same(d2.manifold())?;
    let dists: Vec<f64> = grid
        .par_iter()
        .map(|p| Ok(distance(&d1.apply(p)?, &d2.apply(p)?)))
        .collect::<Result<_>>()?;
    Ok(argmax(&dists))
}

pub fn sup_distance(d1: &Diffeo, d2: &Diffeo, grid: &[Point]) -> Result<f64> {
    Ok(sup_distance_witness(d1, d2, grid)?.0)
}

/// Maximum and its first index; `(0, 0)` for an empty slice.
pub(crate) fn argmax(v: &[f64]) -> (f64, usize) {
    let mut best = (0.0, 0);
    for (i, x) in v.iter().enumerate() {
        if *x > best.0 || x.is_nan() {
            best = (*x, i);
            if x.is_nan() {
                break;
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "class", content = "detail", rename_all = "kebab-case")]
pub enum OrientationClass {
    PreservingDegree1,
    Reversing { degree: i64 },
    Other(String),
}

impl fmt::Display for OrientationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrientationClass::PreservingDegree1 => write!(f, "orientation preserving, degree 1"),
            OrientationClass::Reversing { degree } => write!(f, "degree {degree}"),
            OrientationClass::Other(s) => write!(f, "{s}"),
        }
    }
}

/// Orientation and degree diagnostics, a computable surrogate for isotopy
/// to the identity. Circle maps are classified by their lift increments over
/// the grid; 3-sphere and torus maps by the sign of the Jacobian determinant
/// at every grid point.
pub fn orientation_class(d: &Diffeo, grid: &[Point]) -> Result<OrientationClass> {
    match d.manifold() {
        ManifoldId::Circle => circle_degree(d, grid),
        _ => jacobian_signs(d, grid),
    }
}

fn circle_degree(d: &Diffeo, grid: &[Point]) -> Result<OrientationClass> {
    let mut angles: Vec<f64> = grid.iter().filter_map(Point::as_angle).collect();
    if angles.len() < 3 {
        return Err(Error::InvalidArgument("degree needs at least 3 circle points".into()));
    }
    angles.sort_by(f64::total_cmp);
    let images: Vec<f64> = angles
        .iter()
        .map(|t| Ok(d.apply(&Point::Circle(*t))?.as_angle().unwrap_or(f64::NAN)))
        .collect::<Result<_>>()?;
    let n = images.len();
    let incs: Vec<f64> = (0..n).map(|k| angle_diff(images[k], images[(k + 1) % n])).collect();
    let total: f64 = incs.iter().sum();
    let degree = (total / TAU).round() as i64;
    let pos = incs.iter().filter(|x| **x > 0.0).count();
    let neg = incs.iter().filter(|x| **x < 0.0).count();
    Ok(if degree == 1 && pos == n {
        OrientationClass::PreservingDegree1
    } else if degree == -1 && neg == n {
        OrientationClass::Reversing { degree }
    } else {
        OrientationClass::Other(format!(
            "degree {degree}, {pos} increasing and {neg} decreasing grid increments"
        ))
    })
}

/// Orthonormal tangent frame at `p`: right translates of `i, j, k` on the
/// 3-sphere, coordinate axes on the torus.
fn tangent_frame(p: &Point) -> Vec<TangentVec> {
    match p {
        Point::Sphere3(q) => [Quat::I, Quat::J, Quat::K]
            .iter()
            .map(|e| TangentVec::Sphere3(*e * *q))
            .collect(),
        Point::Torus(x) => (0..x.len())
            .map(|d| {
                let mut e = vec![0.0; x.len()];
                e[d] = 1.0;
                TangentVec::Torus(e)
            })
            .collect(),
        Point::Circle(_) => vec![TangentVec::Circle(1.0)],
    }
}

fn dot(a: &TangentVec, b: &TangentVec) -> f64 {
    a.components().iter().zip(b.components()).map(|(x, y)| x * y).sum()
}

/// Determinant of the differential in the frames of [`tangent_frame`].
pub fn jacobian_det(d: &Diffeo, p: &Point) -> Result<f64> {
    let q = d.apply(p)?;
    let src = tangent_frame(p);
    let dst = tangent_frame(&q);
    let n = src.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (b, e) in src.into_iter().enumerate() {
        let img = differential(d, &Tangent::new(p.clone(), e)?)?;
        for (a, f) in dst.iter().enumerate() {
            m[(a, b)] = dot(&img.vec, f);
        }
    }
    Ok(m.determinant())
}

fn jacobian_signs(d: &Diffeo, grid: &[Point]) -> Result<OrientationClass> {
    let dets: Vec<f64> = grid.par_iter().map(|p| jacobian_det(d, p)).collect::<Result<_>>()?;
    let pos = dets.iter().filter(|x| **x > 0.0).count();
    let neg = dets.iter().filter(|x| **x < 0.0).count();
    Ok(if pos == dets.len() {
        OrientationClass::PreservingDegree1
    } else if neg == dets.len() {
        OrientationClass::Reversing { degree: -1 }
    } else {
        OrientationClass::Other(format!(
            "{pos} positive and {neg} negative Jacobian determinants"
        ))
    })
}

/// Metric-preserving maps used as intertwining candidates.
#[derive(Debug, Clone, PartialEq)]
pub enum Isometry {
    Identity(ManifoldId),
    CircleReflection,
    QuatConjugation(Quat),
    QuatLeftMult(Quat),
}

impl Isometry {
    pub fn to_diffeo(&self) -> Diffeo {
        match self {
            Isometry::Identity(m) => Diffeo::identity(*m),
            Isometry::CircleReflection => Diffeo::CircleReflection,
            Isometry::QuatConjugation(r) => Diffeo::QuatConjugation(*r),
            Isometry::QuatLeftMult(q) => Diffeo::QuatLeftMult(*q),
        }
    }

    pub fn manifold(&self) -> ManifoldId {
        match self {
            Isometry::Identity(m) => *m,
            Isometry::CircleReflection => ManifoldId::Circle,
            _ => ManifoldId::Sphere3,
        }
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        self.to_diffeo().apply(p)
    }

    pub fn differential(&self, v: &Tangent) -> Result<Tangent> {
        differential(&self.to_diffeo(), v)
    }

    pub fn inverse(&self) -> Isometry {
        match self {
            Isometry::QuatConjugation(r) => Isometry::QuatConjugation(r.conj()),
            Isometry::QuatLeftMult(q) => Isometry::QuatLeftMult(q.conj()),
            other => other.clone(),
        }
    }

    /// Largest distortion `|d(Pp, Pq) - d(p, q)|` over grid pairs.
    pub fn distortion(&self, grid: &[Point]) -> Result<f64> {
        let imgs: Vec<Point> = grid.iter().map(|p| self.apply(p)).collect::<Result<_>>()?;
        let mut worst: f64 = 0.0;
        for i in 0..grid.len() {
            for j in i + 1..grid.len() {
                let e = (distance(&imgs[i], &imgs[j]) - distance(&grid[i], &grid[j])).abs();
                worst = worst.max(e);
            }
        }
        Ok(worst)
    }

    pub fn descriptor(&self) -> IsometrySpec {
        match self {
            Isometry::Identity(m) => IsometrySpec::Identity { manifold: *m },
            Isometry::CircleReflection => IsometrySpec::Reflection,
            Isometry::QuatConjugation(r) => IsometrySpec::QuatConjugation { r: r.to_array() },
            Isometry::QuatLeftMult(q) => IsometrySpec::QuatLeft { q: q.to_array() },
        }
    }
}

/// Serializable description of a diffeomorphism, as written in scenario
/// configs and reports. Rotation angles are `angle + pi·π` radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DiffeoSpec {
    Identity {
        manifold: ManifoldId,
    },
    Rotation {
        #[serde(default)]
        angle: f64,
        #[serde(default)]
        pi: f64,
    },
    Reflection,
    QuatLeft {
        q: [f64; 4],
    },
    QuatConjugation {
        r: [f64; 4],
    },
    TorusTranslation {
        v: Vec<f64>,
    },
    FlowTime {
        field: AnalyticField,
        t: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        step: Option<f64>,
    },
    Lifted {
        samples: Vec<f64>,
    },
    Compose {
        parts: Vec<DiffeoSpec>,
    },
    Inverse {
        of: Box<DiffeoSpec>,
    },
    Power {
        of: Box<DiffeoSpec>,
        a: i64,
    },
}

impl DiffeoSpec {
    pub fn build(&self) -> Result<Diffeo> {
        Ok(match self {
            DiffeoSpec::Identity { manifold } => Diffeo::identity(*manifold),
            DiffeoSpec::Rotation { angle, pi } => Diffeo::CircleRotation(angle + pi * PI),
            DiffeoSpec::Reflection => Diffeo::CircleReflection,
            DiffeoSpec::QuatLeft { q } => Diffeo::quat_left_mult(Quat::from_array(*q))?,
            DiffeoSpec::QuatConjugation { r } => Diffeo::quat_conjugation(Quat::from_array(*r))?,
            DiffeoSpec::TorusTranslation { v } => {
                ManifoldId::torus(v.len())?;
                Diffeo::TorusTranslation(v.clone())
            }
            DiffeoSpec::FlowTime { field, t, step } => {
                let settings = step.map_or_else(IntegratorSettings::default, IntegratorSettings::with_step);
                Diffeo::FlowTime(Arc::new(FlowTimeMap {
                    field: Arc::new(field.clone().into()),
                    t: *t,
                    settings,
                }))
            }
            DiffeoSpec::Lifted { samples } => Diffeo::circle_lifted(CircleLift::from_samples(samples.clone())?),
            DiffeoSpec::Compose { parts } => {
                let mut it = parts.iter().rev();
                let first = it
                    .next()
                    .ok_or_else(|| Error::InvalidArgument("empty composition".into()))?
                    .build()?;
                it.try_fold(first, |acc, d| compose(&d.build()?, &acc))?
            }
            DiffeoSpec::Inverse { of } => inverse(&of.build()?),
            DiffeoSpec::Power { of, a } => power(&of.build()?, *a),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IsometrySpec {
    Identity { manifold: ManifoldId },
    Reflection,
    QuatConjugation { r: [f64; 4] },
    QuatLeft { q: [f64; 4] },
}

impl IsometrySpec {
    pub fn build(&self) -> Result<Isometry> {
        Ok(match self {
            IsometrySpec::Identity { manifold } => Isometry::Identity(*manifold),
            IsometrySpec::Reflection => Isometry::CircleReflection,
            IsometrySpec::QuatConjugation { r } => Isometry::QuatConjugation(check_unit(Quat::from_array(*r))?),
            IsometrySpec::QuatLeft { q } => Isometry::QuatLeftMult(check_unit(Quat::from_array(*q))?),
        })
    }
}
