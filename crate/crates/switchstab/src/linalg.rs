//! Minimal fixed-size linear algebra for 2x2 systems.
//!
//! The whole model lives in R^2, so everything here is closed-form:
//! inverses, eigenvalues, and matrix exponentials never need iteration
//! beyond the scaling-and-squaring loop in [`Mat2::affine_step_exact`].

use serde::{Deserialize, Serialize};

pub type Vec2 = [f64; 2];

pub fn v_add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn v_sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn v_scale(a: Vec2, s: f64) -> Vec2 {
    [a[0] * s, a[1] * s]
}

pub fn v_dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn v_norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

pub fn v_is_finite(a: Vec2) -> bool {
    a[0].is_finite() && a[1].is_finite()
}

/// Dense 2x2 real matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const ZERO: Self = Self { m: [[0.0; 2]; 2] };
    pub const IDENTITY: Self = Self {
        m: [[1.0, 0.0], [0.0, 1.0]],
    };

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self {
            m: [[a11, a12], [a21, a22]],
        }
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.m[0][0] + other.m[0][0],
            self.m[0][1] + other.m[0][1],
            self.m[1][0] + other.m[1][0],
            self.m[1][1] + other.m[1][1],
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(
            self.m[0][0] - other.m[0][0],
            self.m[0][1] - other.m[0][1],
            self.m[1][0] - other.m[1][0],
            self.m[1][1] - other.m[1][1],
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(
            self.m[0][0] * other.m[0][0] + self.m[0][1] * other.m[1][0],
            self.m[0][0] * other.m[0][1] + self.m[0][1] * other.m[1][1],
            self.m[1][0] * other.m[0][0] + self.m[1][1] * other.m[1][0],
            self.m[1][0] * other.m[0][1] + self.m[1][1] * other.m[1][1],
        )
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    /// Largest absolute entry; used as the scale for relative thresholds.
    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, &x| acc.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|x| x.is_finite())
    }

    /// Inverse, or `None` when |det| <= tol.
    pub fn try_inverse(&self, tol: f64) -> Option<Self> {
        let d = self.det();
        if d.abs() <= tol {
            return None;
        }
        Some(Self::new(
            self.m[1][1] / d,
            -self.m[0][1] / d,
            -self.m[1][0] / d,
            self.m[0][0] / d,
        ))
    }

    /// Solve A x = rhs by Cramer's rule.
    pub fn solve(&self, rhs: Vec2, tol: f64) -> Option<Vec2> {
        let d = self.det();
        if d.abs() <= tol {
            return None;
        }
        Some([
            (rhs[0] * self.m[1][1] - rhs[1] * self.m[0][1]) / d,
            (rhs[1] * self.m[0][0] - rhs[0] * self.m[1][0]) / d,
        ])
    }

    /// Eigenvalues of a symmetric matrix (both real), ascending.
    pub fn sym_eigenvalues(&self) -> (f64, f64) {
        let a = self.m[0][0];
        let b = 0.5 * (self.m[0][1] + self.m[1][0]);
        let c = self.m[1][1];
        let mean = 0.5 * (a + c);
        let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        (mean - r, mean + r)
    }

    /// Real parts of the eigenvalues (general matrix), ascending.
    pub fn eigen_real_parts(&self) -> (f64, f64) {
        let half_tr = 0.5 * self.trace();
        let disc = half_tr * half_tr - self.det();
        if disc >= 0.0 {
            let s = disc.sqrt();
            (half_tr - s, half_tr + s)
        } else {
            (half_tr, half_tr)
        }
    }

    /// Closed-form matrix exponential.
    ///
    /// Split A = (tr/2) I + N with tr N = 0, so N^2 = -det(N) I and the
    /// series collapses to cosh/sinh (or cos/sin) of a scalar.
    pub fn expm(&self) -> Self {
        let half_tr = 0.5 * self.trace();
        let n = self.sub(&Mat2::IDENTITY.scale(half_tr));
        let s2 = -n.det(); // N^2 = s2 * I
        let (c, k) = if s2 > 1e-24 {
            let s = s2.sqrt();
            (s.cosh(), s.sinh() / s)
        } else if s2 < -1e-24 {
            let s = (-s2).sqrt();
            (s.cos(), s.sin() / s)
        } else {
            // N nilpotent-ish: cosh ~ 1, sinh(s)/s ~ 1
            (1.0, 1.0)
        };
        Mat2::IDENTITY
            .scale(c)
            .add(&n.scale(k))
            .scale(half_tr.exp())
    }

    /// Exact propagation of dx/dt = A x + b over time h.
    ///
    /// Exponentiates the augmented 3x3 matrix [[A, b], [0, 0]] by
    /// scaling-and-squaring with a Taylor series, which stays well defined
    /// for singular A.
    pub fn affine_step_exact(&self, b: Vec2, x: Vec2, h: f64) -> Vec2 {
        // augmented M = [[A*h, b*h], [0, 0]]
        let mut m = [
            [self.m[0][0] * h, self.m[0][1] * h, b[0] * h],
            [self.m[1][0] * h, self.m[1][1] * h, b[1] * h],
            [0.0, 0.0, 0.0],
        ];
        let norm: f64 = m
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, &v| acc.max(v.abs()));
        let mut squarings = 0u32;
        if norm > 0.5 {
            squarings = (norm / 0.5).log2().ceil() as u32;
            let scale = 0.5_f64.powi(squarings as i32);
            for row in m.iter_mut() {
                for v in row.iter_mut() {
                    *v *= scale;
                }
            }
        }
        let mut e = mat3_identity();
        let mut term = mat3_identity();
        for k in 1..=16 {
            term = mat3_mul(&term, &m);
            for row in term.iter_mut() {
                for v in row.iter_mut() {
                    *v /= k as f64;
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    e[i][j] += term[i][j];
                }
            }
        }
        for _ in 0..squarings {
            e = mat3_mul(&e, &e);
        }
        [
            e[0][0] * x[0] + e[0][1] * x[1] + e[0][2],
            e[1][0] * x[0] + e[1][1] * x[1] + e[1][2],
        ]
    }
}

type Mat3 = [[f64; 3]; 3];

fn mat3_identity() -> Mat3 {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}
