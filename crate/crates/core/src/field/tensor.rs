//! Plain 3-vector and rank-2 tensor value types used per field entry.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[repr(C)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    #[inline]
    pub fn component(self, k: usize) -> f64 {
        match k {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("vector component index {k} out of range"),
        }
    }

    #[inline]
    pub fn set_component(&mut self, k: usize, v: f64) {
        match k {
            0 => self.x = v,
            1 => self.y = v,
            2 => self.z = v,
            _ => panic!("vector component index {k} out of range"),
        }
    }

    /// Outer product `self ⊗ o`.
    #[inline]
    pub fn outer(self, o: Vec3) -> Tensor3 {
        Tensor3 {
            c: [
                self.x * o.x,
                self.x * o.y,
                self.x * o.z,
                self.y * o.x,
                self.y * o.y,
                self.y * o.z,
                self.z * o.x,
                self.z * o.y,
                self.z * o.z,
            ],
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    #[inline]
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Row-major rank-2 tensor: `c[3*i + j]` is the `(i, j)` entry.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[repr(C)]
pub struct Tensor3 {
    pub c: [f64; 9],
}

impl Tensor3 {
    pub const ZERO: Tensor3 = Tensor3 { c: [0.0; 9] };

    pub fn identity() -> Tensor3 {
        let mut t = Tensor3::ZERO;
        t.c[0] = 1.0;
        t.c[4] = 1.0;
        t.c[8] = 1.0;
        t
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[3 * i + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.c[3 * i + j] = v;
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.c[0] + self.c[4] + self.c[8]
    }

    #[inline]
    pub fn transpose(&self) -> Tensor3 {
        let mut t = Tensor3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                t.set(i, j, self.get(j, i));
            }
        }
        t
    }

    /// Symmetric part `(T + Tᵀ)/2`.
    #[inline]
    pub fn symm(&self) -> Tensor3 {
        let t = self.transpose();
        let mut out = Tensor3::ZERO;
        for k in 0..9 {
            out.c[k] = 0.5 * (self.c[k] + t.c[k]);
        }
        out
    }

    /// Twice the symmetric part `T + Tᵀ`.
    #[inline]
    pub fn two_symm(&self) -> Tensor3 {
        let t = self.transpose();
        let mut out = Tensor3::ZERO;
        for k in 0..9 {
            out.c[k] = self.c[k] + t.c[k];
        }
        out
    }

    /// Deviatoric part `T - (1/3) tr(T) I`.
    #[inline]
    pub fn dev(&self) -> Tensor3 {
        let mut out = *self;
        let third = self.trace() / 3.0;
        out.c[0] -= third;
        out.c[4] -= third;
        out.c[8] -= third;
        out
    }

    /// `T - (2/3) tr(T) I`, the deviatoric form used in stress divergence.
    #[inline]
    pub fn dev2(&self) -> Tensor3 {
        let mut out = *self;
        let two_thirds = 2.0 * self.trace() / 3.0;
        out.c[0] -= two_thirds;
        out.c[4] -= two_thirds;
        out.c[8] -= two_thirds;
        out
    }

    /// `dev2(T + Tᵀ)`.
    #[inline]
    pub fn dev_two_symm(&self) -> Tensor3 {
        self.two_symm().dev2()
    }
}

impl Add for Tensor3 {
    type Output = Tensor3;
    #[inline]
    fn add(self, o: Tensor3) -> Tensor3 {
        let mut out = Tensor3::ZERO;
        for k in 0..9 {
            out.c[k] = self.c[k] + o.c[k];
        }
        out
    }
}

impl Mul<f64> for Tensor3 {
    type Output = Tensor3;
    #[inline]
    fn mul(self, s: f64) -> Tensor3 {
        let mut out = self;
        for k in 0..9 {
            out.c[k] *= s;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dev2_of_identity_is_negated_identity() {
        // Direct formula: I - (2/3)·tr(I)·I = I - 2I = -I.
        let d = Tensor3::identity().dev2();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { -1.0 } else { 0.0 };
                assert_eq!(d.get(i, j), expect);
            }
        }
        // dev itself is trace-free.
        assert_eq!(Tensor3::identity().dev().trace(), 0.0);
    }

    #[test]
    fn outer_product_single_entry() {
        let t = Vec3::new(1.0, 0.0, 0.0).outer(Vec3::new(0.0, 1.0, 0.0));
        for i in 0..3 {
            for j in 0..3 {
                let expect = if (i, j) == (0, 1) { 1.0 } else { 0.0 };
                assert_eq!(t.get(i, j), expect);
            }
        }
    }
}
