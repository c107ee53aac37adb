//! Model closed manifolds: the circle, the 3-sphere of unit quaternions and
//! the flat n-torus.
//!
//! Circle points are angles in `[0, 2π)`, torus points live in `[0, 1)ⁿ`
//! and 3-sphere points are unit quaternions. Every constructor
//! canonicalizes, so two equal points compare equal coordinate-wise.

use std::f64::consts::{PI, TAU};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::Quat;

/// Points closer than this to the cut locus are refused by [`log_point`].
pub const CUT_LOCUS_MARGIN: f64 = 1e-9;

/// Tangency tolerance for 3-sphere vectors, relative to `max(1, |v|)`.
pub const TANGENCY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManifoldId {
    Circle,
    Sphere3,
    Torus(usize),
}

impl ManifoldId {
    pub fn torus(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("torus dimension must be at least 1".into()));
        }
        Ok(ManifoldId::Torus(n))
    }

    /// Number of ambient coordinates used to store a point.
    pub fn coord_len(self) -> usize {
        match self {
            ManifoldId::Circle => 1,
            ManifoldId::Sphere3 => 4,
            ManifoldId::Torus(n) => n,
        }
    }

    /// Intrinsic dimension.
    pub fn dim(self) -> usize {
        match self {
            ManifoldId::Circle => 1,
            ManifoldId::Sphere3 => 3,
            ManifoldId::Torus(n) => n,
        }
    }

    pub fn ensure_same(self, other: ManifoldId) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ManifoldMismatch {
                expected: self,
                found: other,
            })
        }
    }
}

impl fmt::Display for ManifoldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManifoldId::Circle => write!(f, "S1"),
            ManifoldId::Sphere3 => write!(f, "S3"),
            ManifoldId::Torus(n) => write!(f, "T{n}"),
        }
    }
}

pub(crate) fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

pub(crate) fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed angle difference `b - a` reduced to `(-π, π]`.
pub(crate) fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Signed torus coordinate difference `b - a` reduced to `[-1/2, 1/2)`.
pub(crate) fn unit_diff(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(1.0);
    if d >= 0.5 {
        d - 1.0
    } else {
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Circle(f64),
    Sphere3(Quat),
    Torus(Vec<f64>),
}

impl Point {
    pub fn circle(theta: f64) -> Point {
        Point::Circle(wrap_angle(theta))
    }

    /// Normalizes `q`. Fails on zero or non-finite input.
    pub fn sphere3(q: Quat) -> Result<Point> {
        let n = q.norm();
        if !n.is_finite() || n < 1e-300 {
            return Err(Error::InvalidQuaternion(format!("cannot normalize {q:?}")));
        }
        Ok(Point::Sphere3(q.scale(1.0 / n)))
    }

    pub fn torus(coords: Vec<f64>) -> Point {
        Point::Torus(coords.into_iter().map(wrap_unit).collect())
    }

    pub fn from_coords(m: ManifoldId, c: &[f64]) -> Result<Point> {
        if c.len() != m.coord_len() {
            return Err(Error::InvalidArgument(format!(
                "{m} points need {} coordinates, got {}",
                m.coord_len(),
                c.len()
            )));
        }
        match m {
            ManifoldId::Circle => Ok(Point::circle(c[0])),
            ManifoldId::Sphere3 => Point::sphere3(Quat::new(c[0], c[1], c[2], c[3])),
            ManifoldId::Torus(_) => Ok(Point::torus(c.to_vec())),
        }
    }

    pub fn manifold(&self) -> ManifoldId {
        match self {
            Point::Circle(_) => ManifoldId::Circle,
            Point::Sphere3(_) => ManifoldId::Sphere3,
            Point::Torus(v) => ManifoldId::Torus(v.len()),
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        match self {
            Point::Circle(t) => vec![*t],
            Point::Sphere3(q) => q.to_array().to_vec(),
            Point::Torus(v) => v.clone(),
        }
    }

    pub fn as_angle(&self) -> Option<f64> {
        match self {
            Point::Circle(t) => Some(*t),
            _ => None,
        }
    }

    pub fn as_quat(&self) -> Option<Quat> {
        match self {
            Point::Sphere3(q) => Some(*q),
            _ => None,
        }
    }
}

/// Tangent vector components in the representation of the base point's
/// manifold: a `∂/∂θ` coefficient, an ambient quaternion, or a torus vector.
#[derive(Debug, Clone, PartialEq)]
pub enum TangentVec {
    Circle(f64),
    Sphere3(Quat),
    Torus(Vec<f64>),
}

impl TangentVec {
    pub fn zero(m: ManifoldId) -> TangentVec {
        match m {
            ManifoldId::Circle => TangentVec::Circle(0.0),
            ManifoldId::Sphere3 => TangentVec::Sphere3(Quat::ZERO),
            ManifoldId::Torus(n) => TangentVec::Torus(vec![0.0; n]),
        }
    }

    pub fn components(&self) -> Vec<f64> {
        match self {
            TangentVec::Circle(c) => vec![*c],
            TangentVec::Sphere3(q) => q.to_array().to_vec(),
            TangentVec::Torus(v) => v.clone(),
        }
    }

    pub fn from_components(m: ManifoldId, c: &[f64]) -> TangentVec {
        match m {
            ManifoldId::Circle => TangentVec::Circle(c[0]),
            ManifoldId::Sphere3 => TangentVec::Sphere3(Quat::new(c[0], c[1], c[2], c[3])),
            ManifoldId::Torus(_) => TangentVec::Torus(c.to_vec()),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            TangentVec::Circle(c) => c.abs(),
            TangentVec::Sphere3(q) => q.norm(),
            TangentVec::Torus(v) => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    pub fn scale(&self, s: f64) -> TangentVec {
        match self {
            TangentVec::Circle(c) => TangentVec::Circle(c * s),
            TangentVec::Sphere3(q) => TangentVec::Sphere3(q.scale(s)),
            TangentVec::Torus(v) => TangentVec::Torus(v.iter().map(|x| x * s).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub base: Point,
    pub vec: TangentVec,
}

impl Tangent {
    /// Builds a tangent vector, checking representation and (on the
    /// 3-sphere) tangency within [`TANGENCY_TOL`].
    pub fn new(base: Point, vec: TangentVec) -> Result<Tangent> {
        match (&base, &vec) {
            (Point::Circle(_), TangentVec::Circle(_)) => {}
            (Point::Sphere3(p), TangentVec::Sphere3(v)) => {
                let ip = p.dot(*v);
                if ip.abs() > TANGENCY_TOL * v.norm().max(1.0) {
                    return Err(Error::NotTangent(ip));
                }
            }
            (Point::Torus(p), TangentVec::Torus(v)) if p.len() == v.len() => {}
            _ => {
                return Err(Error::InvalidArgument(
                    "tangent vector representation does not match base point".into(),
                ))
            }
        }
        Ok(Tangent { base, vec })
    }

    /// Tangent at `base` after removing the normal component (3-sphere only).
    pub fn projected(base: Point, vec: TangentVec) -> Result<Tangent> {
        let vec = match (&base, vec) {
            (Point::Sphere3(p), TangentVec::Sphere3(v)) => {
                TangentVec::Sphere3(v - p.scale(p.dot(v)))
            }
            (_, v) => v,
        };
        Tangent::new(base, vec)
    }

    pub fn zero(base: Point) -> Tangent {
        let vec = TangentVec::zero(base.manifold());
        Tangent { base, vec }
    }

    pub fn norm(&self) -> f64 {
        self.vec.norm()
    }

    pub fn scale(&self, s: f64) -> Tangent {
        Tangent {
            base: self.base.clone(),
            vec: self.vec.scale(s),
        }
    }
}

/// Moves `p` along the geodesic with initial velocity `v` for unit time.
pub fn exp_point(p: &Point, v: &Tangent) -> Result<Point> {
    p.manifold().ensure_same(v.base.manifold())?;
    match (p, &v.vec) {
        (Point::Circle(t), TangentVec::Circle(c)) => Ok(Point::circle(t + c)),
        (Point::Sphere3(q), TangentVec::Sphere3(w)) => {
            let ip = q.dot(*w);
            if ip.abs() > TANGENCY_TOL * w.norm().max(1.0) {
                return Err(Error::NotTangent(ip));
            }
            let w = *w - q.scale(ip);
            Ok(Point::Sphere3(sphere_exp(*q, w)))
        }
        (Point::Torus(x), TangentVec::Torus(d)) => Ok(Point::torus(
            x.iter().zip(d).map(|(a, b)| a + b).collect(),
        )),
        _ => Err(Error::InvalidArgument("tangent does not match point".into())),
    }
}

/// Geodesic exponential on the unit 3-sphere for a tangent `w` at `q`.
pub(crate) fn sphere_exp(q: Quat, w: Quat) -> Quat {
    let th = w.norm();
    if th < 1e-300 {
        return q;
    }
    (q.scale(th.cos()) + w.scale(th.sin() / th)).normalize()
}

/// Inverse of [`exp_point`] away from the cut locus.
pub fn log_point(p: &Point, q: &Point) -> Result<Tangent> {
    p.manifold().ensure_same(q.manifold())?;
    let vec = match (p, q) {
        (Point::Circle(a), Point::Circle(b)) => {
            let d = angle_diff(*a, *b);
            if d.abs() > PI - CUT_LOCUS_MARGIN {
                return Err(Error::CutLocus(q.coords()));
            }
            TangentVec::Circle(d)
        }
        (Point::Sphere3(a), Point::Sphere3(b)) => {
            let c = a.dot(*b);
            let perp = *b - a.scale(c);
            let s = perp.norm();
            let th = s.atan2(c);
            if th > PI - CUT_LOCUS_MARGIN {
                return Err(Error::CutLocus(q.coords()));
            }
            if s < 1e-300 {
                TangentVec::Sphere3(Quat::ZERO)
            } else {
                TangentVec::Sphere3(perp.scale(th / s))
            }
        }
        (Point::Torus(a), Point::Torus(b)) => {
            let mut d = Vec::with_capacity(a.len());
            for (x, y) in a.iter().zip(b) {
                let di = unit_diff(*x, *y);
                if di.abs() > 0.5 - CUT_LOCUS_MARGIN {
                    return Err(Error::CutLocus(q.coords()));
                }
                d.push(di);
            }
            TangentVec::Torus(d)
        }
        _ => unreachable!("manifolds checked above"),
    };
    Ok(Tangent {
        base: p.clone(),
        vec,
    })
}

/// Geodesic distance. Circle distances are in radians, torus distances in
/// units of the fundamental domain.
pub fn distance(p: &Point, q: &Point) -> f64 {
    match (p, q) {
        (Point::Circle(a), Point::Circle(b)) => angle_diff(*a, *b).abs(),
        (Point::Sphere3(a), Point::Sphere3(b)) => {
            // atan2 form stays accurate for nearby and nearly antipodal points
            let c = a.dot(*b);
            let s = (*b - a.scale(c)).norm();
            s.atan2(c)
        }
        (Point::Torus(a), Point::Torus(b)) => a
            .iter()
            .zip(b)
            .map(|(x, y)| unit_diff(*x, *y).powi(2))
            .sum::<f64>()
            .sqrt(),
        _ => f64::INFINITY,
    }
}

/// Deterministic sample grid.
///
/// Circle: `resolution` uniform angles. Torus: the lattice with
/// `resolution` points per axis. 3-sphere: `resolution` points of a seeded
/// additive-recurrence (R3) sequence mapped through Shoemake's uniform
/// quaternion parametrization.
pub fn sample_grid(m: ManifoldId, resolution: usize, seed: u64) -> Result<Vec<Point>> {
    if resolution < 2 {
        return Err(Error::InvalidArgument("grid resolution must be at least 2".into()));
    }
    Ok(match m {
        ManifoldId::Circle => circle_grid(resolution, 0.0),
        ManifoldId::Torus(n) => torus_lattice(n, resolution),
        ManifoldId::Sphere3 => sphere_low_discrepancy(resolution, seed),
    })
}

/// `n` uniform circle angles offset by `shift` grid cells.
pub fn circle_grid(n: usize, shift: f64) -> Vec<Point> {
    (0..n)
        .map(|k| Point::circle(TAU * (k as f64 + shift) / n as f64))
        .collect()
}

fn torus_lattice(dim: usize, res: usize) -> Vec<Point> {
    let total = res.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let mut c = vec![0.0; dim];
            for slot in c.iter_mut().rev() {
                *slot = (idx % res) as f64 / res as f64;
                idx /= res;
            }
            Point::Torus(c)
        })
        .collect()
}

fn sphere_low_discrepancy(n: usize, seed: u64) -> Vec<Point> {
    // plastic-number generalization for three dimensions: x^4 = x + 1
    let g = 1.220_744_084_605_759_5_f64;
    let alpha = [1.0 / g, 1.0 / (g * g), 1.0 / (g * g * g)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
    (0..n)
        .map(|k| {
            let kk = (k + 1) as f64;
            let u: Vec<f64> = (0..3).map(|d| (start[d] + kk * alpha[d]).fract()).collect();
            let (s1, s2) = ((1.0 - u[0]).sqrt(), u[0].sqrt());
            let (a, b) = (TAU * u[1], TAU * u[2]);
            let q = Quat::new(s2 * b.cos(), s1 * a.sin(), s1 * a.cos(), s2 * b.sin());
            Point::Sphere3(q.normalize())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn circle_exp_and_log() {
        let p = Point::circle(0.0);
        let v = Tangent::new(p.clone(), TangentVec::Circle(FRAC_PI_2)).unwrap();
        assert_eq!(exp_point(&p, &v).unwrap(), Point::Circle(FRAC_PI_2));
        let l = log_point(&p, &Point::circle(FRAC_PI_2)).unwrap();
        assert_eq!(l.vec, TangentVec::Circle(FRAC_PI_2));
        let l = log_point(&Point::circle(0.1), &Point::circle(TAU - 0.1)).unwrap();
        match l.vec {
            TangentVec::Circle(c) => assert!((c + 0.2).abs() < 1e-15),
            _ => panic!(),
        }
    }

    #[test]
    fn sphere_exp_and_log() {
        let one = Point::Sphere3(Quat::ONE);
        let v = Tangent::new(one.clone(), TangentVec::Sphere3(Quat::pure(FRAC_PI_2, 0., 0.))).unwrap();
        let q = exp_point(&one, &v).unwrap();
        assert!(distance(&q, &Point::Sphere3(Quat::I)) < 1e-16);
        let l = log_point(&one, &Point::Sphere3(Quat::I)).unwrap();
        match l.vec {
            TangentVec::Sphere3(w) => assert!((w - Quat::pure(FRAC_PI_2, 0., 0.)).norm() < 1e-16),
            _ => panic!(),
        }
    }

    #[test]
    fn torus_wraps() {
        let p = Point::torus(vec![0.9, 0.5]);
        let v = Tangent::new(p.clone(), TangentVec::Torus(vec![0.2, 0.0])).unwrap();
        let q = exp_point(&p, &v).unwrap();
        match q {
            Point::Torus(c) => {
                assert!((c[0] - 0.1).abs() < 1e-15);
                assert_eq!(c[1], 0.5);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn distances() {
        assert!((distance(&Point::circle(0.1), &Point::circle(TAU - 0.1)) - 0.2).abs() < 1e-15);
        let d = distance(&Point::Sphere3(Quat::ONE), &Point::Sphere3(-Quat::ONE));
        assert!((d - PI).abs() < 1e-15);
        let d = distance(&Point::torus(vec![0.9]), &Point::torus(vec![0.1]));
        assert!((d - 0.2).abs() < 1e-15);
    }

    #[test]
    fn cut_locus_is_refused() {
        let r = log_point(&Point::Sphere3(Quat::ONE), &Point::Sphere3(-Quat::ONE));
        assert!(matches!(r, Err(Error::CutLocus(_))));
        let r = log_point(&Point::circle(0.0), &Point::circle(PI));
        assert!(matches!(r, Err(Error::CutLocus(_))));
        let r = log_point(&Point::torus(vec![0.0]), &Point::torus(vec![0.5]));
        assert!(matches!(r, Err(Error::CutLocus(_))));
    }

    #[test]
    fn non_tangent_rejected() {
        let one = Point::Sphere3(Quat::ONE);
        let r = Tangent::new(one, TangentVec::Sphere3(Quat::new(0.1, 1.0, 0.0, 0.0)));
        assert!(matches!(r, Err(Error::NotTangent(_))));
    }

    #[test]
    fn grids() {
        let g = sample_grid(ManifoldId::Circle, 4, 99).unwrap();
        let expect = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];
        for (p, e) in g.iter().zip(expect) {
            assert!((p.as_angle().unwrap() - e).abs() < 1e-15);
        }
        let t = sample_grid(ManifoldId::Torus(1), 2, 0).unwrap();
        assert_eq!(t, vec![Point::Torus(vec![0.0]), Point::Torus(vec![0.5])]);
        assert_eq!(sample_grid(ManifoldId::Torus(2), 3, 0).unwrap().len(), 9);
        assert!(sample_grid(ManifoldId::Circle, 1, 0).is_err());
    }

    #[test]
    fn sphere_grid_is_unit_distinct_and_reproducible() {
        let g = sample_grid(ManifoldId::Sphere3, 8, 7).unwrap();
        assert_eq!(g.len(), 8);
        for p in &g {
            assert!((p.as_quat().unwrap().norm() - 1.0).abs() < 1e-12);
        }
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                assert!(distance(&g[i], &g[j]) > 0.0);
            }
        }
        assert_eq!(g, sample_grid(ManifoldId::Sphere3, 8, 7).unwrap());
        assert_ne!(g, sample_grid(ManifoldId::Sphere3, 8, 8).unwrap());
    }

    #[test]
    fn zero_torus_dimension_rejected() {
        assert!(ManifoldId::torus(0).is_err());
        assert_eq!(ManifoldId::torus(3).unwrap(), ManifoldId::Torus(3));
    }
}
