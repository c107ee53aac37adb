//! Vector fields on the model manifolds and their numerical integration.

use std::f64::consts::{FRAC_PI_4, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{self, distance, wrap_angle, ManifoldId, Point, Tangent, TangentVec};
use crate::quat::Quat;

/// Closed-form vector fields used as ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnalyticField {
    /// `ξ(θ) = k` on the circle.
    ConstantCircle { k: f64 },
    /// `ξ(θ) = mean + Σ_j cos[j-1]·cos(jθ) + sin[j-1]·sin(jθ)`.
    CircleFourier {
        mean: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// `ξ(p) = ω·p` for a pure quaternion `ω`; the flow is `exp(tω)·p`.
    LeftInvariantS3 { omega: Quat },
    /// Constant translation field on the torus.
    TorusConstant { v: Vec<f64> },
}

impl AnalyticField {
    pub fn manifold(&self) -> ManifoldId {
        match self {
            AnalyticField::ConstantCircle { .. } | AnalyticField::CircleFourier { .. } => {
                ManifoldId::Circle
            }
            AnalyticField::LeftInvariantS3 { .. } => ManifoldId::Sphere3,
            AnalyticField::TorusConstant { v } => ManifoldId::Torus(v.len()),
        }
    }
}

/// Sampled field with the interpolation rule fixed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    manifold: ManifoldId,
    points: Vec<Point>,
    values: Vec<TangentVec>,
    rule: Interpolation,
}

#[derive(Debug, Clone, PartialEq)]
enum Interpolation {
    /// Trigonometric interpolant, stored as Fourier coefficients in `θ`.
    Trigonometric { mean: f64, cos: Vec<f64>, sin: Vec<f64> },
    /// Multilinear interpolation on a `res`-per-axis lattice.
    Multilinear { res: usize },
    /// Inverse-distance blend of the `k` nearest samples, each carried to
    /// the query point by right trivialization `v·p⁻¹·q`, then projected.
    NearestBlend { k: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum VectorField {
    Analytic(AnalyticField),
    Sampled(SampledField),
}

impl From<AnalyticField> for VectorField {
    fn from(a: AnalyticField) -> Self {
        VectorField::Analytic(a)
    }
}

/// Fourier coefficients at or below this fraction of the field scale are
/// treated as sampling noise when building a trigonometric interpolant.
const FOURIER_NOISE_FLOOR: f64 = 1e-13;

fn fourier_eval(mean: f64, cos: &[f64], sin: &[f64], theta: f64) -> f64 {
    let (s1, c1) = theta.sin_cos();
    let (mut ck, mut sk) = (1.0, 0.0);
    let mut acc = mean;
    for j in 0..cos.len().max(sin.len()) {
        let c_next = ck * c1 - sk * s1;
        let s_next = sk * c1 + ck * s1;
        ck = c_next;
        sk = s_next;
        if let Some(a) = cos.get(j) {
            acc += a * ck;
        }
        if let Some(b) = sin.get(j) {
            acc += b * sk;
        }
    }
    acc
}

impl SampledField {
    /// Builds a sampled field. Circle samples must sit on a uniform grid,
    /// torus samples on the lattice produced by [`manifold::sample_grid`].
    pub fn new(manifold: ManifoldId, points: Vec<Point>, values: Vec<TangentVec>) -> Result<Self> {
        if points.len() != values.len() || points.is_empty() {
            return Err(Error::InvalidArgument("sampled field needs one value per point".into()));
        }
        for (p, v) in points.iter().zip(&values) {
            manifold.ensure_same(p.manifold())?;
            Tangent::new(p.clone(), v.clone())?;
        }
        let rule = match manifold {
            ManifoldId::Circle => trig_coefficients(&points, &values)?,
            ManifoldId::Torus(n) => {
                let res = (points.len() as f64).powf(1.0 / n as f64).round() as usize;
                if res.pow(n as u32) != points.len() {
                    return Err(Error::InvalidArgument("torus samples must form a full lattice".into()));
                }
                Interpolation::Multilinear { res }
            }
            ManifoldId::Sphere3 => Interpolation::NearestBlend {
                k: 4.min(points.len()),
            },
        };
        Ok(SampledField {
            manifold,
            points,
            values,
            rule,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn values(&self) -> &[TangentVec] {
        &self.values
    }

    fn eval(&self, p: &Point) -> Result<TangentVec> {
        match (&self.rule, p) {
            (Interpolation::Trigonometric { mean, cos, sin }, Point::Circle(t)) => {
                Ok(TangentVec::Circle(fourier_eval(*mean, cos, sin, *t)))
            }
            (Interpolation::Multilinear { res }, Point::Torus(x)) => Ok(self.multilinear(*res, x)),
            (Interpolation::NearestBlend { k }, Point::Sphere3(q)) => Ok(self.blend(*k, *q)),
            _ => Err(Error::ManifoldMismatch {
                expected: self.manifold,
                found: p.manifold(),
            }),
        }
    }

    fn multilinear(&self, res: usize, x: &[f64]) -> TangentVec {
        let n = x.len();
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for d in 0..n {
            let s = x[d] * res as f64;
            let fl = s.floor();
            base[d] = (fl as usize) % res;
            frac[d] = s - fl;
        }
        let mut out = vec![0.0; n];
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = 0;
            for d in 0..n {
                let bit = (corner >> (n - 1 - d)) & 1;
                let i = (base[d] + bit) % res;
                w *= if bit == 1 { frac[d] } else { 1.0 - frac[d] };
                idx = idx * res + i;
            }
            if w == 0.0 {
                continue;
            }
            if let TangentVec::Torus(v) = &self.values[idx] {
                for d in 0..n {
                    out[d] += w * v[d];
                }
            }
        }
        TangentVec::Torus(out)
    }

    fn blend(&self, k: usize, q: Quat) -> TangentVec {
        let mut near: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (distance(p, &Point::Sphere3(q)), i))
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut acc = Quat::ZERO;
        let mut wsum = 0.0;
        for &(d, i) in near.iter().take(k) {
            let (Point::Sphere3(p), TangentVec::Sphere3(v)) = (&self.points[i], &self.values[i]) else {
                continue;
            };
            let carried = *v * p.conj();
            if d < 1e-14 {
                acc = carried;
                wsum = 1.0;
                break;
            }
            let w = 1.0 / (d * d);
            acc = acc + carried.scale(w);
            wsum += w;
        }
        let v = acc.scale(1.0 / wsum) * q;
        TangentVec::Sphere3(v - q.scale(q.dot(v)))
    }
}

fn trig_coefficients(points: &[Point], values: &[TangentVec]) -> Result<Interpolation> {
    let n = points.len();
    let theta: Vec<f64> = points.iter().filter_map(Point::as_angle).collect();
    let v: Vec<f64> = values
        .iter()
        .map(|t| match t {
            TangentVec::Circle(c) => *c,
            _ => f64::NAN,
        })
        .collect();
    let t0 = theta[0];
    for (k, t) in theta.iter().enumerate() {
        let expect = wrap_angle(t0 + TAU * k as f64 / n as f64);
        if manifold::angle_diff(expect, *t).abs() > 1e-9 {
            return Err(Error::InvalidArgument(
                "circle samples must lie on a uniform grid".into(),
            ));
        }
    }
    let nf = n as f64;
    let mean = v.iter().sum::<f64>() / nf;
    let half = n / 2;
    let mut cos = Vec::with_capacity(half);
    let mut sin = Vec::with_capacity(half);
    for j in 1..=half {
        let (mut a, mut b) = (0.0, 0.0);
        for (k, vk) in v.iter().enumerate() {
            let ang = TAU * ((j * k) % n) as f64 / nf;
            a += vk * ang.cos();
            b += vk * ang.sin();
        }
        let (mut a, mut b) = (2.0 * a / nf, 2.0 * b / nf);
        if n % 2 == 0 && j == half {
            a *= 0.5;
            b = 0.0;
        }
        // re-express cos(j(θ-θ0)), sin(j(θ-θ0)) in absolute θ
        let (s0, c0) = (j as f64 * t0).sin_cos();
        cos.push(a * c0 - b * s0);
        sin.push(a * s0 + b * c0);
    }
    let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let keep = (0..half)
        .rev()
        .find(|&j| cos[j].abs() + sin[j].abs() > FOURIER_NOISE_FLOOR * scale)
        .map_or(0, |j| j + 1);
    cos.truncate(keep);
    sin.truncate(keep);
    Ok(Interpolation::Trigonometric { mean, cos, sin })
}

impl VectorField {
    pub fn manifold(&self) -> ManifoldId {
        match self {
            VectorField::Analytic(a) => a.manifold(),
            VectorField::Sampled(s) => s.manifold,
        }
    }

    /// Field value at `p` in the manifold's tangent representation.
    pub fn eval(&self, p: &Point) -> Result<TangentVec> {
        self.manifold().ensure_same(p.manifold())?;
        match self {
            VectorField::Analytic(a) => Ok(match (a, p) {
                (AnalyticField::ConstantCircle { k }, _) => TangentVec::Circle(*k),
                (AnalyticField::CircleFourier { mean, cos, sin }, Point::Circle(t)) => {
                    TangentVec::Circle(fourier_eval(*mean, cos, sin, *t))
                }
                (AnalyticField::LeftInvariantS3 { omega }, Point::Sphere3(q)) => {
                    TangentVec::Sphere3(omega.imag() * *q)
                }
                (AnalyticField::TorusConstant { v }, _) => TangentVec::Torus(v.clone()),
                _ => unreachable!("manifold checked above"),
            }),
            VectorField::Sampled(s) => s.eval(p),
        }
    }

    pub fn tangent_at(&self, p: &Point) -> Result<Tangent> {
        Tangent::projected(p.clone(), self.eval(p)?)
    }

    /// Exact flow for fields whose flow is known in closed form.
    pub fn exact_flow(&self, t: f64, p: &Point) -> Option<Point> {
        match (self, p) {
            (VectorField::Analytic(AnalyticField::ConstantCircle { k }), Point::Circle(th)) => {
                Some(Point::circle(th + k * t))
            }
            (VectorField::Analytic(AnalyticField::LeftInvariantS3 { omega }), Point::Sphere3(q)) => {
                let e = omega.imag().scale(t).exp_pure();
                Some(Point::Sphere3((e * *q).normalize()))
            }
            (VectorField::Analytic(AnalyticField::TorusConstant { v }), Point::Torus(x)) => Some(
                Point::torus(x.iter().zip(v).map(|(a, b)| a + b * t).collect()),
            ),
            _ => None,
        }
    }

    /// Replaces a sampled field by a closed form when the samples are
    /// constant (circle, torus) or left-invariant (3-sphere) to within
    /// `spread_tol`.
    pub fn recognize(&self, spread_tol: f64) -> VectorField {
        let VectorField::Sampled(s) = self else {
            return self.clone();
        };
        let n = s.values.len() as f64;
        match s.manifold {
            ManifoldId::Circle => {
                let vals: Vec<f64> = s.values.iter().map(|v| v.components()[0]).collect();
                let (lo, hi) = min_max(&vals);
                if hi - lo < spread_tol {
                    let k = vals.iter().sum::<f64>() / n;
                    return AnalyticField::ConstantCircle { k }.into();
                }
            }
            ManifoldId::Sphere3 => {
                let carried: Vec<Quat> = s
                    .points
                    .iter()
                    .zip(&s.values)
                    .filter_map(|(p, v)| match (p, v) {
                        (Point::Sphere3(p), TangentVec::Sphere3(v)) => Some(*v * p.conj()),
                        _ => None,
                    })
                    .collect();
                let mean = carried
                    .iter()
                    .fold(Quat::ZERO, |a, b| a + *b)
                    .scale(1.0 / n)
                    .imag();
                let spread = carried.iter().map(|c| (*c - mean).norm()).fold(0.0, f64::max);
                if spread < spread_tol {
                    return AnalyticField::LeftInvariantS3 { omega: mean }.into();
                }
            }
            ManifoldId::Torus(dim) => {
                let mut v = vec![0.0; dim];
                let mut spread: f64 = 0.0;
                for d in 0..dim {
                    let col: Vec<f64> = s.values.iter().map(|t| t.components()[d]).collect();
                    let (lo, hi) = min_max(&col);
                    spread = spread.max(hi - lo);
                    v[d] = col.iter().sum::<f64>() / n;
                }
                if spread < spread_tol {
                    return AnalyticField::TorusConstant { v }.into();
                }
            }
        }
        self.clone()
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)))
}

/// Settings for [`integrate_field`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    /// Maximum RK4 step; the actual step is `t / ceil(|t| / step)`.
    pub step: f64,
    /// Use the closed-form flow where one exists.
    #[serde(default = "default_true")]
    pub exact_fast_path: bool,
}

fn default_true() -> bool {
    true
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            step: 1e-3,
            exact_fast_path: true,
        }
    }
}

impl IntegratorSettings {
    pub fn with_step(step: f64) -> Self {
        IntegratorSettings {
            step,
            ..Default::default()
        }
    }

    pub fn rk4_only(step: f64) -> Self {
        IntegratorSettings {
            step,
            exact_fast_path: false,
        }
    }
}

/// Largest geodesic displacement allowed in a single RK4 step.
pub const MAX_STEP_DISPLACEMENT: f64 = FRAC_PI_4;

/// Follows `field` from `p` for time `t` with classical RK4 (fixed step,
/// re-canonicalized after every step), or exactly when a closed form is
/// available and enabled.
pub fn integrate_field(
    field: &VectorField,
    t: f64,
    p: &Point,
    settings: &IntegratorSettings,
) -> Result<Point> {
    field.manifold().ensure_same(p.manifold())?;
    if !(settings.step > 0.0) {
        return Err(Error::InvalidArgument("integrator step must be positive".into()));
    }
    if settings.exact_fast_path {
        if let Some(q) = field.exact_flow(t, p) {
            return Ok(q);
        }
    }
    if t == 0.0 {
        return Ok(p.clone());
    }
    let n = (t.abs() / settings.step).ceil().max(1.0) as usize;
    let h = t / n as f64;
    let mut x = p.clone();
    for _ in 0..n {
        let next = rk4_step(field, &x, h)?;
        let moved = distance(&x, &next);
        if moved > MAX_STEP_DISPLACEMENT {
            return Err(Error::StepRejected {
                moved,
                limit: MAX_STEP_DISPLACEMENT,
            });
        }
        x = next;
    }
    Ok(x)
}

fn rk4_step(field: &VectorField, x: &Point, h: f64) -> Result<Point> {
    match x {
        Point::Circle(th) => {
            let f = |a: f64| -> Result<f64> {
                match field.eval(&Point::Circle(a))? {
                    TangentVec::Circle(c) => Ok(c),
                    _ => unreachable!(),
                }
            };
            // stages are evaluated in the unwrapped chart; the field is 2π-periodic
            let k1 = f(*th)?;
            let k2 = f(th + 0.5 * h * k1)?;
            let k3 = f(th + 0.5 * h * k2)?;
            let k4 = f(th + h * k3)?;
            Ok(Point::circle(th + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)))
        }
        Point::Sphere3(q) => {
            let f = |a: Quat| -> Result<Quat> {
                match field.eval(&Point::Sphere3(a.normalize()))? {
                    TangentVec::Sphere3(v) => Ok(v),
                    _ => unreachable!(),
                }
            };
            let k1 = f(*q)?;
            let k2 = f(*q + k1.scale(0.5 * h))?;
            let k3 = f(*q + k2.scale(0.5 * h))?;
            let k4 = f(*q + k3.scale(h))?;
            let inc = (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0);
            Point::sphere3(*q + inc)
        }
        Point::Torus(c) => {
            let f = |a: Vec<f64>| -> Result<Vec<f64>> {
                match field.eval(&Point::Torus(a.into_iter().map(manifold::wrap_unit).collect()))? {
                    TangentVec::Torus(v) => Ok(v),
                    _ => unreachable!(),
                }
            };
            let axpy = |a: f64, k: &[f64]| -> Vec<f64> {
                c.iter().zip(k).map(|(x, y)| x + a * y).collect()
            };
            let k1 = f(c.clone())?;
            let k2 = f(axpy(0.5 * h, &k1))?;
            let k3 = f(axpy(0.5 * h, &k2))?;
            let k4 = f(axpy(h, &k3))?;
            let next: Vec<f64> = (0..c.len())
                .map(|d| c[d] + h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]))
                .collect();
            Ok(Point::torus(next))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{circle_grid, sample_grid};
    use std::f64::consts::PI;

    fn wobble() -> VectorField {
        AnalyticField::CircleFourier {
            mean: PI,
            cos: vec![],
            sin: vec![0.3],
        }
        .into()
    }

    #[test]
    fn constant_circle_fast_path() {
        let f: VectorField = AnalyticField::ConstantCircle { k: PI }.into();
        let q = integrate_field(&f, 1.0, &Point::circle(0.0), &IntegratorSettings::default()).unwrap();
        assert_eq!(q, Point::Circle(PI));
    }

    #[test]
    fn left_invariant_reaches_antipode() {
        let f: VectorField = AnalyticField::LeftInvariantS3 {
            omega: Quat::I.scale(PI),
        }
        .into();
        let one = Point::Sphere3(Quat::ONE);
        let q = integrate_field(&f, 1.0, &one, &IntegratorSettings::default()).unwrap();
        assert!(distance(&q, &Point::Sphere3(-Quat::ONE)) < 1e-15);
        let r = integrate_field(&f, 1.0, &one, &IntegratorSettings::rk4_only(1e-3)).unwrap();
        assert!(distance(&r, &Point::Sphere3(-Quat::ONE)) < 1e-11);
    }

    #[test]
    fn rk4_self_convergence() {
        let f = wobble();
        let p = Point::circle(0.0);
        let coarse = integrate_field(&f, 1.0, &p, &IntegratorSettings::with_step(1e-3)).unwrap();
        let fine = integrate_field(&f, 1.0, &p, &IntegratorSettings::with_step(1e-4)).unwrap();
        assert!(distance(&coarse, &fine) < 1e-9);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let f = wobble();
        let p = Point::circle(0.4);
        let reference = integrate_field(&f, 1.0, &p, &IntegratorSettings::with_step(1e-4)).unwrap();
        let e1 = distance(&integrate_field(&f, 1.0, &p, &IntegratorSettings::with_step(0.1)).unwrap(), &reference);
        let e2 = distance(&integrate_field(&f, 1.0, &p, &IntegratorSettings::with_step(0.05)).unwrap(), &reference);
        let ratio = e1 / e2;
        assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn oversized_step_rejected() {
        let f: VectorField = AnalyticField::CircleFourier {
            mean: 10.0,
            cos: vec![],
            sin: vec![],
        }
        .into();
        let r = integrate_field(&f, 1.0, &Point::circle(0.0), &IntegratorSettings::with_step(0.5));
        assert!(matches!(r, Err(Error::StepRejected { .. })));
    }

    #[test]
    fn trig_interpolant_reproduces_low_modes() {
        let grid = circle_grid(16, 0.25);
        let truth = |t: f64| 1.0 + 0.5 * (2.0 * t).cos() - 0.25 * (3.0 * t).sin();
        let vals = grid.iter().map(|p| TangentVec::Circle(truth(p.as_angle().unwrap()))).collect();
        let s = SampledField::new(ManifoldId::Circle, grid, vals).unwrap();
        let f = VectorField::Sampled(s);
        for k in 0..50 {
            let t = 0.13 * k as f64;
            let v = f.eval(&Point::circle(t)).unwrap().components()[0];
            assert!((v - truth(wrap_angle(t))).abs() < 1e-13);
        }
    }

    #[test]
    fn torus_multilinear_and_recognition() {
        let grid = sample_grid(ManifoldId::Torus(2), 4, 0).unwrap();
        let vals: Vec<TangentVec> = grid.iter().map(|_| TangentVec::Torus(vec![0.1, -0.2])).collect();
        let f = VectorField::Sampled(SampledField::new(ManifoldId::Torus(2), grid, vals).unwrap());
        let v = f.eval(&Point::torus(vec![0.37, 0.91])).unwrap();
        assert_eq!(v, TangentVec::Torus(vec![0.1, -0.2]));
        match f.recognize(1e-10) {
            VectorField::Analytic(AnalyticField::TorusConstant { v }) => {
                assert!((v[0] - 0.1).abs() < 1e-15 && (v[1] + 0.2).abs() < 1e-15)
            }
            other => panic!("not recognized: {other:?}"),
        }
    }

    #[test]
    fn sphere_blend_reproduces_left_invariant() {
        let omega = Quat::pure(0.2, -0.4, 1.0);
        let grid = sample_grid(ManifoldId::Sphere3, 32, 1).unwrap();
        let vals = grid
            .iter()
            .map(|p| TangentVec::Sphere3(omega * p.as_quat().unwrap()))
            .collect();
        let f = VectorField::Sampled(SampledField::new(ManifoldId::Sphere3, grid, vals).unwrap());
        let q = Quat::new(0.3, 0.1, -0.7, 0.2).normalize();
        match f.eval(&Point::Sphere3(q)).unwrap() {
            TangentVec::Sphere3(v) => assert!((v - omega * q).norm() < 1e-14),
            _ => panic!(),
        }
        match f.recognize(1e-10) {
            VectorField::Analytic(AnalyticField::LeftInvariantS3 { omega: w }) => {
                assert!((w - omega).norm() < 1e-14)
            }
            other => panic!("not recognized: {other:?}"),
        }
    }
}
