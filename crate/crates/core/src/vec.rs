//! Small fixed-size vector math. Planar (dimension-2) data lives in the
//! `z = 0` slice of `Vec3` so that all spherical machinery is written once.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0, 0.0, 0.0]);

    #[inline]
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    /// Planar vector embedded at z = 0.
    #[inline]
    pub fn planar(x: f64, y: f64) -> Self {
        Vec3([x, y, 0.0])
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.0[0]
    }
    #[inline]
    pub fn y(&self) -> f64 {
        self.0[1]
    }
    #[inline]
    pub fn z(&self) -> f64 {
        self.0[2]
    }

    #[inline]
    pub fn dot(&self, other: &Vec3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    #[inline]
    pub fn cross(&self, other: &Vec3) -> Vec3 {
        Vec3([
            self.0[1] * other.0[2] - self.0[2] * other.0[1],
            self.0[2] * other.0[0] - self.0[0] * other.0[2],
            self.0[0] * other.0[1] - self.0[1] * other.0[0],
        ])
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    /// Unit vector in the same direction. Panics on the zero vector in debug
    /// builds; callers guard against degenerate input.
    #[inline]
    pub fn normalized(&self) -> Vec3 {
        let n = self.norm();
        debug_assert!(n > 0.0, "normalizing zero vector");
        self.scale(1.0 / n)
    }

    /// Angle in [0, pi] between two (not necessarily unit) vectors, computed
    /// via atan2 for accuracy near 0 and pi.
    pub fn angle_between(&self, other: &Vec3) -> f64 {
        self.cross(other).norm().atan2(self.dot(other))
    }

    /// Planar angle in (-pi, pi].
    #[inline]
    pub fn planar_angle(&self) -> f64 {
        self.0[1].atan2(self.0[0])
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// An orthonormal basis (e1, e2) of the plane orthogonal to `self`
    /// (assumed unit), right-handed: e1 x e2 = self.
    pub fn tangent_basis(&self) -> (Vec3, Vec3) {
        let pick = if self.0[0].abs() <= self.0[1].abs() && self.0[0].abs() <= self.0[2].abs() {
            Vec3::new(1.0, 0.0, 0.0)
        } else if self.0[1].abs() <= self.0[2].abs() {
            Vec3::new(0.0, 1.0, 0.0)
        } else {
            Vec3::new(0.0, 0.0, 1.0)
        };
        let e1 = (pick - self.scale(pick.dot(self))).normalized();
        let e2 = self.cross(&e1);
        (e1, e2)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3([
            self.0[0] + rhs.0[0],
            self.0[1] + rhs.0[1],
            self.0[2] + rhs.0[2],
        ])
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, rhs: Vec3) {
        *self = *self + rhs;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3([
            self.0[0] - rhs.0[0],
            self.0[1] - rhs.0[1],
            self.0[2] - rhs.0[2],
        ])
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, rhs: f64) -> Vec3 {
        self.scale(rhs)
    }
}

/// Solve a small dense linear system `a x = b` in place by Gaussian
/// elimination with partial pivoting. Returns `None` when the pivot falls
/// below `tiny` (singular to working precision). Used for the local
/// quadratic fits in the verification module; `n <= 6` in practice.
pub fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64], tiny: f64) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|row| row.len() == n));
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < tiny {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_is_right_handed() {
        let e1 = Vec3::new(1.0, 0.0, 0.0);
        let e2 = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(e1.cross(&e2), Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        for v in [
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.6, -0.48, 0.64),
        ] {
            let u = v.normalized();
            let (e1, e2) = u.tangent_basis();
            assert!(e1.dot(&u).abs() < 1e-15);
            assert!(e2.dot(&u).abs() < 1e-15);
            assert!((e1.norm() - 1.0).abs() < 1e-15);
            assert!((e1.cross(&e2) - u).norm() < 1e-15);
        }
    }

    #[test]
    fn dense_solver_roundtrip() {
        let mut a = vec![
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ];
        let x_true = [1.0, -2.0, 0.5];
        let mut b = vec![
            4.0 * x_true[0] + x_true[1],
            x_true[0] + 3.0 * x_true[1] - x_true[2],
            -x_true[1] + 2.0 * x_true[2],
        ];
        let x = solve_dense(&mut a, &mut b, 1e-300).unwrap();
        for (xi, ti) in x.iter().zip(x_true.iter()) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_solver_rejects_singular() {
        let mut a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        let mut b = vec![1.0, 2.0];
        assert!(solve_dense(&mut a, &mut b, 1e-12).is_none());
    }
}
