//! Minimal quaternion arithmetic for the 3-sphere model.
//!
//! Components are stored as `(w, x, y, z)` with `w` the real part.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const ONE: Quat = Quat::new(1.0, 0.0, 0.0, 0.0);
    pub const ZERO: Quat = Quat::new(0.0, 0.0, 0.0, 0.0);
    pub const I: Quat = Quat::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quat = Quat::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quat = Quat::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quat { w, x, y, z }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Quat::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Pure quaternion with the given vector part.
    pub fn pure(x: f64, y: f64, z: f64) -> Self {
        Quat::new(0.0, x, y, z)
    }

    pub fn dot(self, o: Quat) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        // hypot-style scaling is unnecessary at the magnitudes used here
        self.norm_sq().sqrt()
    }

    pub fn conj(self) -> Self {
        Quat::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn scale(self, s: f64) -> Self {
        Quat::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    /// Multiplicative inverse. For unit quaternions this is the conjugate.
    pub fn inverse(self) -> Self {
        self.conj().scale(1.0 / self.norm_sq())
    }

    pub fn normalize(self) -> Self {
        self.scale(1.0 / self.norm())
    }

    /// Real part set to zero.
    pub fn imag(self) -> Self {
        Quat::new(0.0, self.x, self.y, self.z)
    }

    pub fn vec_norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Angle between a unit quaternion and `1`, in `[0, π]`.
    pub fn angle_to_one(self) -> f64 {
        self.vec_norm().atan2(self.w)
    }

    /// Exponential of a pure quaternion `v`: `cos|v| + v/|v| sin|v|`.
    /// The real part of `self` is ignored.
    pub fn exp_pure(self) -> Quat {
        let v = self.imag();
        let th = v.vec_norm();
        if th < 1e-300 {
            return Quat::ONE;
        }
        let s = th.sin() / th;
        Quat::new(th.cos(), v.x * s, v.y * s, v.z * s)
    }

    /// Logarithm of a unit quaternion, returned as a pure quaternion.
    pub fn log_unit(self) -> Quat {
        let vn = self.vec_norm();
        let th = vn.atan2(self.w);
        if vn < 1e-300 {
            return Quat::ZERO;
        }
        let s = th / vn;
        Quat::pure(self.x * s, self.y * s, self.z * s)
    }

    /// Principal square root of a unit quaternion: the root with the
    /// smaller angle to `1`. Undefined at `-1`.
    pub fn principal_sqrt(self) -> Option<Quat> {
        let s = Quat::new(1.0 + self.w, self.x, self.y, self.z);
        let n = s.norm();
        if n < 1e-12 {
            return None;
        }
        Some(s.scale(1.0 / n))
    }

    /// Integer power by binary exponentiation with renormalization after
    /// every product. Negative exponents use the conjugate.
    pub fn powi_unit(self, a: i64) -> Quat {
        let mut base = if a < 0 { self.conj() } else { self };
        let mut e = a.unsigned_abs();
        let mut acc = Quat::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = (acc * base).normalize();
            }
            e >>= 1;
            if e > 0 {
                base = (base * base).normalize();
            }
        }
        acc
    }

    /// Number of quaternion products performed by [`Quat::powi_unit`].
    pub fn pow_product_count(a: i64) -> u32 {
        let e = a.unsigned_abs();
        if e == 0 {
            return 0;
        }
        let bits = 64 - e.leading_zeros();
        bits - 1 + e.count_ones()
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Mul for Quat {
    type Output = Quat;
    fn mul(self, r: Quat) -> Quat {
        let (a, b, c, d) = (self.w, self.x, self.y, self.z);
        let (e, f, g, h) = (r.w, r.x, r.y, r.z);
        Quat {
            w: a * e - b * f - c * g - d * h,
            x: a * f + b * e + c * h - d * g,
            y: a * g - b * h + c * e + d * f,
            z: a * h + b * g - c * f + d * e,
        }
    }
}

impl Add for Quat {
    type Output = Quat;
    fn add(self, r: Quat) -> Quat {
        Quat::new(self.w + r.w, self.x + r.x, self.y + r.y, self.z + r.z)
    }
}

impl Sub for Quat {
    type Output = Quat;
    fn sub(self, r: Quat) -> Quat {
        Quat::new(self.w - r.w, self.x - r.x, self.y - r.y, self.z - r.z)
    }
}

impl Neg for Quat {
    type Output = Quat;
    fn neg(self) -> Quat {
        Quat::new(-self.w, -self.x, -self.y, -self.z)
    }
}
