use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PimError, Result};

/// Cartesian point (or direction) in metres, global frame unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Cylindrical radius about the z axis.
    pub fn rho(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Proper rotation. Columns are the images of the local x, y, z axes; the
/// local z axis is the dipole axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    m: [[f64; 3]; 3],
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rotation {
    pub const fn identity() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Builds from a row-major matrix, checking `RᵀR = I` and `det R = +1`.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self> {
        let r = Self { m };
        if !r.is_proper(1e-12) {
            return Err(PimError::domain("rotation matrix is not orthonormal with det +1"));
        }
        Ok(r)
    }

    /// Rodrigues rotation about a unit `axis` by `angle` radians.
    pub fn about_axis(axis: Point3, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(PimError::domain("rotation axis must be a non-zero finite vector"));
        }
        let a = axis * (1.0 / n);
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let m = [
            [t * a.x * a.x + c, t * a.x * a.y - s * a.z, t * a.x * a.z + s * a.y],
            [t * a.x * a.y + s * a.z, t * a.y * a.y + c, t * a.y * a.z - s * a.x],
            [t * a.x * a.z - s * a.y, t * a.y * a.z + s * a.x, t * a.z * a.z + c],
        ];
        Ok(Self { m })
    }

    /// The minimal rotation taking the local z axis onto `dir`.
    pub fn z_to(dir: Point3) -> Result<Self> {
        let n = dir.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(PimError::domain("dipole direction must be a non-zero finite vector"));
        }
        let d = dir * (1.0 / n);
        let z = Point3::new(0.0, 0.0, 1.0);
        let axis = z.cross(d);
        let s = axis.norm();
        let c = z.dot(d);
        if s < 1e-15 {
            return if c > 0.0 {
                Ok(Self::identity())
            } else {
                // half turn about x
                Ok(Self {
                    m: [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]],
                })
            };
        }
        Self::about_axis(axis, s.atan2(c))
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.m
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn compose(&self, o: &Rotation) -> Rotation {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.m[i][k] * o.m[k][j]).sum();
            }
        }
        Rotation { m: out }
    }

    /// Global direction of the dipole axis.
    pub fn axis(&self) -> Point3 {
        Point3::new(self.m[0][2], self.m[1][2], self.m[2][2])
    }

    pub fn is_proper(&self, tol: f64) -> bool {
        let rtr = self.transpose().compose(self);
        let ortho = (0..3).all(|i| {
            (0..3).all(|j| {
                let target = if i == j { 1.0 } else { 0.0 };
                (rtr.m[i][j] - target).abs() <= tol
            })
        });
        ortho && (self.det() - 1.0).abs() <= tol
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn apply(&self, p: Point3) -> Point3 {
        let m = &self.m;
        Point3::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z,
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z,
        )
    }

    pub fn apply_complex(&self, v: [Complex64; 3]) -> [Complex64; 3] {
        let m = &self.m;
        let row = |i: usize| v[0] * m[i][0] + v[1] * m[i][1] + v[2] * m[i][2];
        [row(0), row(1), row(2)]
    }
}

/// Coordinate frame a field vector's components refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// (E_ρ, E_φ, E_z) about the dipole's own axis.
    CylindricalLocal,
    /// (E_x, E_y, E_z) in the dipole's local frame.
    CartesianLocal,
    /// (E_x, E_y, E_z) in the array frame.
    CartesianGlobal,
}

/// Complex electric field phasor, V/m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldVector {
    pub components: [Complex64; 3],
    pub frame: Frame,
}

impl FieldVector {
    pub fn zero_global() -> Self {
        Self {
            components: [Complex64::new(0.0, 0.0); 3],
            frame: Frame::CartesianGlobal,
        }
    }

    /// Cylindrical → cartesian at the local observation point (Φ_vect).
    pub fn cyl_to_cartesian(&self, at_local: Point3) -> Result<FieldVector> {
        if self.frame != Frame::CylindricalLocal {
            return Err(PimError::Frame(format!("expected cylindrical-local, got {:?}", self.frame)));
        }
        let phi = at_local.y.atan2(at_local.x);
        let (s, c) = phi.sin_cos();
        let [e_rho, e_phi, e_z] = self.components;
        Ok(FieldVector {
            components: [e_rho * c - e_phi * s, e_rho * s + e_phi * c, e_z],
            frame: Frame::CartesianLocal,
        })
    }

    /// Local cartesian → global cartesian through the element rotation.
    pub fn local_to_global(&self, rot: &Rotation) -> Result<FieldVector> {
        if self.frame != Frame::CartesianLocal {
            return Err(PimError::Frame(format!("expected cartesian-local, got {:?}", self.frame)));
        }
        Ok(FieldVector {
            components: rot.apply_complex(self.components),
            frame: Frame::CartesianGlobal,
        })
    }

    pub fn checked_add(&self, o: &FieldVector) -> Result<FieldVector> {
        if self.frame != Frame::CartesianGlobal || o.frame != Frame::CartesianGlobal {
            return Err(PimError::Frame(format!(
                "field addition requires cartesian-global operands, got {:?} + {:?}",
                self.frame, o.frame
            )));
        }
        let mut c = self.components;
        for (a, b) in c.iter_mut().zip(o.components) {
            *a += b;
        }
        Ok(FieldVector { components: c, frame: Frame::CartesianGlobal })
    }

    pub fn scale(&self, s: Complex64) -> FieldVector {
        FieldVector {
            components: self.components.map(|c| c * s),
            frame: self.frame,
        }
    }

    /// Projection onto a real direction (no conjugation).
    pub fn dot_real(&self, p: Point3) -> Complex64 {
        self.components[0] * p.x + self.components[1] * p.y + self.components[2] * p.z
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}
