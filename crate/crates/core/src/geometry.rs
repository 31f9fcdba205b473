//! Pick-point conversion from the bench (local) frame to the robot frame.
//!
//! All lengths are centimeters. A point in the local frame maps to the robot
//! frame as `p_robot = d + R * p_local`, where `R` is the orientation of the
//! local frame expressed in the robot frame and `d` points from the robot
//! origin to the local origin.
//!
//! The pick-point height above the bench grid is called `plane_height`; it is
//! the constant local `z` coordinate of both pick points.

use thiserror::Error;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Elementwise tolerance on `R^T R - I` and on `det(R) - 1`.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("rotation is not orthonormal: max |R^T R - I| = {0:e}")]
    NotOrthonormal(f64),
    #[error("rotation is a reflection: det = {0}")]
    Reflection(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// A proper rotation matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3(Mat3);

impl Rotation3 {
    pub const IDENTITY: Rotation3 = Rotation3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Rotation by `degrees` about the z axis.
    pub fn about_z(degrees: f64) -> Rotation3 {
        let (s, c) = degrees.to_radians().sin_cos();
        Rotation3([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Rotation3 {
        Rotation3(transpose(&self.0))
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        mat_vec(&self.0, v)
    }

    pub fn compose(&self, inner: &Rotation3) -> Rotation3 {
        Rotation3(mat_mul(&self.0, &inner.0))
    }
}

fn transpose(m: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for (r, row) in m.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            t[c][r] = *v;
        }
    }
    t
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn det(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn norm(v: &Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn validate_rotation(raw: Mat3) -> Result<Rotation3, GeometryError> {
    if raw.iter().flatten().any(|v| !v.is_finite()) {
        return Err(GeometryError::NonFinite("rotation"));
    }
    let gram = mat_mul(&transpose(&raw), &raw);
    let mut worst: f64 = 0.0;
    for (r, row) in gram.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            let ident = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((v - ident).abs());
        }
    }
    let d = det(&raw);
    if d < 0.0 {
        return Err(GeometryError::Reflection(d));
    }
    if worst > ROTATION_TOLERANCE {
        return Err(GeometryError::NotOrthonormal(worst));
    }
    if (d - 1.0).abs() > ROTATION_TOLERANCE {
        return Err(GeometryError::NotOrthonormal((d - 1.0).abs()));
    }
    Ok(Rotation3(raw))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTransform {
    pub rotation: Rotation3,
    pub translation: Vec3,
    pub plane_height: f64,
}

impl FrameTransform {
    pub fn new(rotation: Rotation3, translation: Vec3, plane_height: f64) -> Result<Self, GeometryError> {
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("translation"));
        }
        if !plane_height.is_finite() {
            return Err(GeometryError::NonFinite("plane height"));
        }
        Ok(FrameTransform { rotation, translation, plane_height })
    }

    /// The transform taking robot-frame points back to the local frame.
    pub fn inverse(&self) -> FrameTransform {
        let rt = self.rotation.transpose();
        let d = rt.apply(&self.translation);
        FrameTransform {
            rotation: rt,
            translation: [-d[0], -d[1], -d[2]],
            plane_height: self.plane_height,
        }
    }

    /// `self` applied after `inner`.
    pub fn compose(&self, inner: &FrameTransform) -> FrameTransform {
        FrameTransform {
            rotation: self.rotation.compose(&inner.rotation),
            translation: add(&self.translation, &self.rotation.apply(&inner.translation)),
            plane_height: inner.plane_height,
        }
    }
}

/// Two pick points in the local bench plane: `[x1, y1, x2, y2]`, cm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetVector {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl TargetVector {
    pub fn from_array(v: [f64; 4]) -> Self {
        TargetVector { x1: v[0], y1: v[1], x2: v[2], y2: v[3] }
    }

    /// Both pick points coincide, as with a broken or folded device.
    pub fn is_degenerate(&self) -> bool {
        self.x1 == self.x2 && self.y1 == self.y2
    }
}

pub fn split_target(t: &TargetVector, h: f64) -> (Vec3, Vec3) {
    ([t.x1, t.y1, h], [t.x2, t.y2, h])
}

pub fn to_robot_frame(f: &FrameTransform, p_local: &Vec3) -> Vec3 {
    add(&f.translation, &f.rotation.apply(p_local))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PickPoints {
    pub first: Vec3,
    pub second: Vec3,
    /// Set when both points coincide; the result is still returned.
    pub degenerate: bool,
}

pub fn pick_points_robot(f: &FrameTransform, t: &TargetVector) -> PickPoints {
    let (a, b) = split_target(t, f.plane_height);
    PickPoints {
        first: to_robot_frame(f, &a),
        second: to_robot_frame(f, &b),
        degenerate: t.is_degenerate(),
    }
}
