//! Monotone lifts of degree-one circle maps.
//!
//! A lift `F: ℝ → ℝ` satisfies `F(x + 1) = F(x) + 1` and is stored by its
//! values at `x_k = k/N`, in turns. Between nodes it is a cubic Hermite
//! interpolant with centered slopes, limited per interval (Fritsch–Carlson)
//! so the interpolant stays increasing.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CircleLift {
    values: Vec<f64>,
    slopes: Vec<f64>,
}

/// Interpolation stencil of the unlimited (centered-slope) Hermite cubic at
/// one evaluation point: node indices, weights, and the derivative in `x`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stencil {
    pub idx: [usize; 4],
    pub w: [f64; 4],
    /// Integer turn offset carried by the wrapped node values.
    #[cfg_attr(not(test), allow(dead_code))]
    pub offset: f64,
}

impl CircleLift {
    /// Builds a lift from node values. The values must be strictly
    /// increasing and satisfy `values[N-1] < values[0] + 1`.
    pub fn from_samples(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 4 {
            return Err(Error::InvalidArgument("a lift needs at least 4 samples".into()));
        }
        for k in 0..n {
            let next = if k + 1 < n { values[k + 1] } else { values[0] + 1.0 };
            if !(next > values[k]) || !values[k].is_finite() {
                return Err(Error::Interpolation(format!(
                    "lift samples are not strictly increasing at node {k}"
                )));
            }
        }
        let slopes = limited_slopes(&values);
        Ok(CircleLift { values, slopes })
    }

    /// Lift of the identity-shifted map `x ↦ x + shift` sampled on `n` nodes.
    pub fn translation(n: usize, shift: f64) -> Result<Self> {
        Self::from_samples((0..n).map(|k| k as f64 / n as f64 + shift).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Node value with periodic extension: `value(k + N) = value(k) + 1`.
    fn node(&self, k: i64) -> (f64, f64) {
        let n = self.values.len() as i64;
        let wraps = k.div_euclid(n);
        let i = k.rem_euclid(n) as usize;
        (self.values[i] + wraps as f64, self.slopes[i])
    }

    fn locate(&self, x: f64) -> Result<(i64, f64)> {
        if !x.is_finite() {
            return Err(Error::Interpolation(format!("cannot evaluate lift at {x}")));
        }
        let s = x * self.values.len() as f64;
        let j = s.floor();
        Ok((j as i64, s - j))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (j, t) = self.locate(x)?;
        let h = 1.0 / self.values.len() as f64;
        let (y0, m0) = self.node(j);
        let (y1, m1) = self.node(j + 1);
        let (h00, h10, h01, h11) = hermite(t);
        Ok(h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1)
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        let (j, t) = self.locate(x)?;
        let n = self.values.len() as f64;
        let (y0, m0) = self.node(j);
        let (y1, m1) = self.node(j + 1);
        let (d00, d10, d01, d11) = hermite_dt(t);
        Ok(n * (d00 * y0 + d01 * y1) + d10 * m0 + d11 * m1)
    }

    /// Circle map in radians.
    pub fn apply_angle(&self, theta: f64) -> Result<f64> {
        Ok(self.eval(theta / TAU)? * TAU)
    }

    /// Solves `F(x) = y` by bracketing on the nodes, then safeguarded
    /// Newton inside the bracketing cell, to `1e-13` in `x`.
    pub fn inverse_eval(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::Interpolation(format!("cannot invert lift at {y}")));
        }
        let n = self.values.len();
        let turns = (y - self.values[0]).floor();
        let yr = y - turns;
        // largest k with values[k] <= yr, k in 0..n (values[n] := values[0] + 1)
        let k = self.values.partition_point(|v| *v <= yr).saturating_sub(1);
        let h = 1.0 / n as f64;
        let (mut lo, mut hi) = (k as f64 * h, (k + 1) as f64 * h);
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let fx = self.eval(x)? - yr;
            if fx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.derivative(x)?;
            let mut next = if d > 0.0 { x - fx / d } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() < 1e-15 || hi - lo < 1e-13 {
                x = next;
                break;
            }
            x = next;
        }
        Ok(x + turns)
    }

    /// Stencil of the linear (centered-slope) Hermite interpolant at `x`.
    /// Used for Newton Jacobians; agrees with [`CircleLift::eval`] wherever
    /// the slope limiter is inactive.
    pub(crate) fn stencil(n: usize, x: f64) -> Stencil {
        let s = x * n as f64;
        let jf = s.floor();
        let t = s - jf;
        let j = jf as i64;
        let nn = n as i64;
        let (h00, h10, h01, h11) = hermite(t);
        let idx_of = |k: i64| k.rem_euclid(nn) as usize;
        let wrap_of = |k: i64| k.div_euclid(nn) as f64;
        // F(x) = h00 y_j + h01 y_{j+1} + h10/2 (y_{j+1} - y_{j-1}) + h11/2 (y_{j+2} - y_j)
        let w = [-0.5 * h10, h00 - 0.5 * h11, h01 + 0.5 * h10, 0.5 * h11];
        let ks = [j - 1, j, j + 1, j + 2];
        let mut offset = 0.0;
        for (wi, k) in w.iter().zip(ks) {
            offset += wi * wrap_of(k);
        }
        Stencil {
            idx: ks.map(idx_of),
            w,
            offset,
        }
    }
}

fn hermite(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

fn hermite_dt(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    (
        6.0 * t2 - 6.0 * t,
        3.0 * t2 - 4.0 * t + 1.0,
        -6.0 * t2 + 6.0 * t,
        3.0 * t2 - 2.0 * t,
    )
}

fn limited_slopes(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let nf = n as f64;
    let at = |k: i64| -> f64 {
        let nn = n as i64;
        values[k.rem_euclid(nn) as usize] + k.div_euclid(nn) as f64
    };
    let secant = |k: i64| (at(k + 1) - at(k)) * nf;
    let mut m: Vec<f64> = (0..n as i64).map(|k| 0.5 * (secant(k - 1) + secant(k))).collect();
    for k in 0..n {
        let d = secant(k as i64);
        let k1 = (k + 1) % n;
        let a = m[k] / d;
        let b = m[k1] / d;
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m[k] = tau * a * d;
            m[k1] = tau * b * d;
        }
    }
    m
}
