//! The flow `Ψ_t` of a root system: exact on rationals whose denominator
//! divides an index, Cauchy limits of dyadic approximants on real times.
//! Also field extraction at `t = 0⁺` and the extract/integrate round trip.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffeo::{argmax, power, Diffeo};
use crate::error::{Error, RefinementRow, Result};
use crate::field::{integrate_field, IntegratorSettings, SampledField, VectorField};
use crate::manifold::{distance, log_point, Point, Tangent, TangentVec};
use crate::report::{CheckEntry, Witness};
use crate::richardson::richardson_halving;
use crate::rootsystem::RootSystem;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A rational time `a/b`, stored reduced with `b ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalTime {
    a: i64,
    b: u64,
}

impl RationalTime {
    pub fn new(a: i64, b: u64) -> Result<Self> {
        if b == 0 {
            return Err(Error::InvalidArgument("time denominator must be positive".into()));
        }
        let g = gcd(a.unsigned_abs(), b).max(1);
        Ok(RationalTime {
            a: a / g as i64,
            b: b / g,
        })
    }

    pub fn zero() -> Self {
        RationalTime { a: 0, b: 1 }
    }

    pub fn numer(self) -> i64 {
        self.a
    }

    pub fn denom(self) -> u64 {
        self.b
    }

    pub fn to_f64(self) -> f64 {
        self.a as f64 / self.b as f64
    }

    pub fn checked_add(self, o: RationalTime) -> Option<RationalTime> {
        let l = self.b / gcd(self.b, o.b) * o.b;
        let a = self.a.checked_mul((l / self.b) as i64)?.checked_add(o.a.checked_mul((l / o.b) as i64)?)?;
        RationalTime::new(a, l).ok()
    }

    /// `t` itself when it is a dyadic rational `a / 2^c` with `c ≤ max_c`.
    pub fn dyadic(t: f64, max_c: u32) -> Option<RationalTime> {
        let scale = 2f64.powi(max_c as i32);
        let s = t * scale;
        if !s.is_finite() || s.fract() != 0.0 || s.abs() >= 9.0e15 {
            return None;
        }
        RationalTime::new(s as i64, 1u64 << max_c).ok()
    }
}

impl fmt::Display for RationalTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.a, self.b)
    }
}

/// Result of a real-time evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct RealEval {
    pub point: Point,
    /// Last Cauchy difference; zero when `t` was reached exactly.
    pub error_estimate: f64,
    pub table: Vec<RefinementRow>,
}

/// Evaluator for `Ψ_t` built on a root system.
#[derive(Debug)]
pub struct FlowApprox {
    source: Arc<RootSystem>,
    max_depth: u32,
    cache: RwLock<HashMap<(u64, i64), Diffeo>>,
}

impl FlowApprox {
    pub fn new(source: Arc<RootSystem>) -> Self {
        let mut max_depth = 0;
        while max_depth < 62 && source.contains(1u64 << (max_depth + 1)) {
            max_depth += 1;
        }
        FlowApprox {
            source,
            max_depth,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn source(&self) -> &RootSystem {
        &self.source
    }

    /// Largest `C` with `2, 4, …, 2^C` all in the index set.
    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    /// `g_b^a`, memoized.
    fn power_of(&self, b: u64, a: i64) -> Result<Diffeo> {
        if let Some(d) = self.cache.read().expect("cache lock").get(&(b, a)) {
            return Ok(d.clone());
        }
        let d = power(self.source.try_root(b)?, a);
        self.cache.write().expect("cache lock").insert((b, a), d.clone());
        Ok(d)
    }

    /// The map `Ψ_{a/b}`, read through coherency in reverse when `b` only
    /// divides an index.
    pub fn rational_map(&self, t: RationalTime) -> Result<Diffeo> {
        let (a, b) = (t.numer(), t.denom());
        if self.source.contains(b) {
            return self.power_of(b, a);
        }
        let kb = self
            .source
            .index_set()
            .into_iter()
            .find(|i| i % b == 0)
            .ok_or(Error::UnreachableDenominator(b))?;
        let k = (kb / b) as i64;
        let ka = a.checked_mul(k).ok_or(Error::UnreachableDenominator(b))?;
        self.power_of(kb, ka)
    }

    /// `Ψ_{a/b}(p) = g_b^a(p)`. Time zero returns `p` unchanged.
    pub fn eval_rational(&self, t: RationalTime, p: &Point) -> Result<Point> {
        if t.numer() == 0 {
            self.source.manifold().ensure_same(p.manifold())?;
            return Ok(p.clone());
        }
        self.rational_map(t)?.apply(p)
    }

    /// `Ψ_t(p)` for real `t` from the dyadic approximants
    /// `t_c = round(t·2^c)/2^c`. At each level the unreduced composition
    /// `g_{2^c}^{a_c}` is compared with the previous level and with the
    /// coherency-reduced evaluation; the larger gap is the level's error
    /// estimate. Stops once the estimate is within `tol`. Fails when the
    /// estimate does not decrease over three consecutive levels.
    pub fn eval_real(&self, t: f64, p: &Point, tol: f64) -> Result<RealEval> {
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("time {t} is not finite")));
        }
        let mut table: Vec<RefinementRow> = Vec::new();
        let mut prev: Option<Point> = None;
        let mut last: Option<(Point, f64)> = None;
        for c in 0..=self.max_depth {
            let b = 1u64 << c;
            let scaled = (t * b as f64).round();
            if scaled.abs() >= 9.0e15 {
                break;
            }
            let a = scaled as i64;
            let tc = RationalTime::new(a, b)?;
            let literal = if a == 0 { p.clone() } else { self.power_of(b, a)?.apply(p)? };
            let reduced = self.eval_rational(tc, p)?;
            let mut est = distance(&literal, &reduced);
            if let Some(q) = &prev {
                est = est.max(distance(&literal, q));
            }
            table.push(RefinementRow {
                level: c,
                time: tc.to_f64(),
                estimate: est,
            });
            let exact = tc.to_f64() == t;
            if est <= tol && (exact || c > 0) {
                return Ok(RealEval {
                    point: reduced,
                    error_estimate: if exact { 0.0 } else { est },
                    table,
                });
            }
            let n = table.len();
            if n >= 3
                && table[n - 1].estimate >= table[n - 2].estimate
                && table[n - 2].estimate >= table[n - 3].estimate
            {
                return Err(Error::ConvergenceFailure { table });
            }
            prev = Some(literal);
            last = Some((reduced, est));
        }
        let (point, error_estimate) =
            last.ok_or_else(|| Error::InvalidArgument(format!("time {t} is out of range")))?;
        Ok(RealEval {
            point,
            error_estimate,
            table,
        })
    }

    /// Exact rational evaluation when `t` is dyadic within the depth,
    /// otherwise [`FlowApprox::eval_real`].
    pub fn eval(&self, t: f64, p: &Point, tol: f64) -> Result<RealEval> {
        if let Some(r) = RationalTime::dyadic(t, self.max_depth) {
            if let Ok(point) = self.eval_rational(r, p) {
                return Ok(RealEval {
                    point,
                    error_estimate: 0.0,
                    table: Vec::new(),
                });
            }
        }
        self.eval_real(t, p, tol)
    }

    /// `ξ(p)` from the forward difference quotients
    /// `D_j = 2^j · log_p(g_{2^j}(p))`, `j = c..=c+r`, Richardson
    /// extrapolated for error terms in powers of `2^{-j}`. A cut-locus hit
    /// moves the window up one level.
    pub fn extract_field(&self, p: &Point, c: u32, r: u32) -> Result<Tangent> {
        let mut start = c;
        loop {
            if start + r > self.max_depth {
                return Err(Error::InvalidArgument(format!(
                    "extraction needs levels {start}..={} but the depth is {}",
                    start + r,
                    self.max_depth
                )));
            }
            match self.quotients(p, start, r) {
                Ok(seq) => {
                    let v = richardson_halving(&seq);
                    return Tangent::projected(p.clone(), TangentVec::from_components(p.manifold(), &v));
                }
                Err(Error::CutLocus(_)) => start += 1,
                Err(e) => return Err(e),
            }
        }
    }

    fn quotients(&self, p: &Point, c: u32, r: u32) -> Result<Vec<Vec<f64>>> {
        (c..=c + r)
            .map(|j| {
                let b = 1u64 << j;
                let q = self.source.try_root(b)?.apply(p)?;
                let v = log_point(p, &q)?;
                Ok(v.vec.components().iter().map(|x| x * b as f64).collect())
            })
            .collect()
    }

    /// Pointwise extraction over `grid`, as a sampled field.
    pub fn extract_field_grid(&self, grid: &[Point], c: u32, r: u32) -> Result<VectorField> {
        let vals: Vec<TangentVec> = grid
            .par_iter()
            .map(|p| Ok(self.extract_field(p, c, r)?.vec))
            .collect::<Result<_>>()?;
        Ok(VectorField::Sampled(SampledField::new(
            self.source.manifold(),
            grid.to_vec(),
            vals,
        )?))
    }
}

/// Time pairs for [`verify_flow_axioms`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimePairs {
    pub rational: Vec<(RationalTime, RationalTime)>,
    pub real: Vec<(f64, f64)>,
}

impl TimePairs {
    /// `(1/4, 1/2)`, `(1/2, 1/2)`, `(3/8, -3/8)`, `(1, -1)`, `(1/2, 3/4)`.
    pub fn standard() -> Self {
        let r = |a, b| RationalTime::new(a, b).expect("valid time");
        TimePairs {
            rational: vec![
                (r(1, 4), r(1, 2)),
                (r(1, 2), r(1, 2)),
                (r(3, 8), r(-3, 8)),
                (r(1, 1), r(-1, 1)),
                (r(1, 2), r(3, 4)),
            ],
            real: Vec::new(),
        }
    }
}

/// `Ψ_0 = id` and `Ψ_{t₂}∘Ψ_{t₁} = Ψ_{t₁+t₂}` on the grid. Real pairs are
/// evaluated with `eval_real` at tolerance `real_tol`; their discrepancy
/// beyond the sum of the three error estimates is reported as a gate.
pub fn verify_flow_axioms(
    fa: &FlowApprox,
    pairs: &TimePairs,
    grid: &[Point],
    tol: f64,
    real_tol: f64,
) -> Result<CheckEntry> {
    let mut worst = 0.0;
    let mut witness = None;
    let mut cases = 0;
    let zero: Vec<f64> = grid
        .iter()
        .map(|p| Ok(distance(&fa.eval_rational(RationalTime::zero(), p)?, p)))
        .collect::<Result<_>>()?;
    let (z, zi) = argmax(&zero);
    if z > 0.0 {
        worst = z;
        witness = grid.get(zi).map(|p| Witness::at(p, vec![0]).with_note("time zero"));
    }
    cases += 1;
    for (t1, t2) in &pairs.rational {
        let sum = t1
            .checked_add(*t2)
            .ok_or_else(|| Error::InvalidArgument("time sum overflows".into()))?;
        let m1 = fa.rational_map(*t1).or_else(|_| zero_map(fa, *t1))?;
        let m2 = fa.rational_map(*t2).or_else(|_| zero_map(fa, *t2))?;
        let m12 = fa.rational_map(sum).or_else(|_| zero_map(fa, sum))?;
        let d: Vec<f64> = grid
            .par_iter()
            .map(|p| Ok(distance(&m2.apply(&m1.apply(p)?)?, &m12.apply(p)?)))
            .collect::<Result<_>>()?;
        let (m, i) = argmax(&d);
        cases += 1;
        if m > worst || witness.is_none() {
            worst = worst.max(m);
            witness = grid.get(i).map(|p| {
                Witness::at(p, vec![t1.numer(), t1.denom() as i64, t2.numer(), t2.denom() as i64])
            });
        }
    }
    let mut excess: f64 = 0.0;
    for (t1, t2) in &pairs.real {
        for p in grid {
            let e1 = fa.eval(*t1, p, real_tol)?;
            let e2 = fa.eval(*t2, &e1.point, real_tol)?;
            let e12 = fa.eval(t1 + t2, p, real_tol)?;
            let d = distance(&e2.point, &e12.point);
            let budget = e1.error_estimate + e2.error_estimate + e12.error_estimate;
            excess = excess.max(d - budget);
        }
        cases += 1;
    }
    let mut e = CheckEntry::new("flow-axioms", worst, tol, cases);
    if let Some(w) = witness {
        e = e.with_witness(w);
    }
    if !pairs.real.is_empty() {
        e = e.with_gate("real-pair-excess-over-estimates", excess.max(0.0), real_tol);
    }
    Ok(e)
}

fn zero_map(fa: &FlowApprox, t: RationalTime) -> Result<Diffeo> {
    if t.numer() == 0 {
        Ok(Diffeo::identity(fa.source().manifold()))
    } else {
        Err(Error::UnreachableDenominator(t.denom()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTripSettings {
    /// First extraction level `c`.
    pub level: u32,
    /// Richardson levels `r`.
    pub richardson: u32,
    /// Spread below which sampled values are replaced by a closed form.
    pub recognize_tol: f64,
    pub integrator: IntegratorSettings,
    pub tol: f64,
}

impl Default for RoundTripSettings {
    fn default() -> Self {
        RoundTripSettings {
            level: 10,
            richardson: 2,
            recognize_tol: 1e-10,
            integrator: IntegratorSettings::default(),
            tol: 1e-6,
        }
    }
}

/// Extracts `ξ̂` from `fa` on `sample_grid`, integrates it for unit time and
/// compares with `f` on `verify_grid`.
pub fn round_trip_check(
    f: &Diffeo,
    fa: &FlowApprox,
    sample_grid: &[Point],
    verify_grid: &[Point],
    settings: &RoundTripSettings,
) -> Result<(CheckEntry, VectorField)> {
    let field = fa
        .extract_field_grid(sample_grid, settings.level, settings.richardson)?
        .recognize(settings.recognize_tol);
    let d: Vec<f64> = verify_grid
        .par_iter()
        .map(|p| Ok(distance(&integrate_field(&field, 1.0, p, &settings.integrator)?, &f.apply(p)?)))
        .collect::<Result<_>>()?;
    let (m, i) = argmax(&d);
    let mut e = CheckEntry::new("round-trip", m, settings.tol, verify_grid.len());
    if let Some(p) = verify_grid.get(i) {
        e = e.with_witness(Witness::at(p, vec![]));
    }
    e = e.with_note(match &field {
        VectorField::Analytic(a) => format!("extracted field recognized as {a:?}"),
        VectorField::Sampled(_) => "extracted field kept as sampled interpolant".to_string(),
    });
    Ok((e, field))
}
