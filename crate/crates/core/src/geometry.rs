//! World Cartesian <-> target-body cylindrical coordinates.
//!
//! The controller works on `(rho, phi, z)` of each robot measured in a frame
//! centred on the target. [`lift_control`] maps a commanded cylindrical rate
//! back to a world-frame velocity so that the body-frame coordinates evolve
//! exactly as commanded.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Default guard radius around the target's vertical axis, meters.
pub const AXIS_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylindricalCoords {
    pub rho: f64,
    pub phi: f64,
    pub z: f64,
}

impl CylindricalCoords {
    pub fn to_cartesian(&self) -> Vec3 {
        Vec3::new(self.rho * self.phi.cos(), self.rho * self.phi.sin(), self.z)
    }
}

/// Commanded rate of the cylindrical coordinates, `(rho_dot, phi_dot, z_dot)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CylindricalRate {
    pub rho_dot: f64,
    pub phi_dot: f64,
    pub z_dot: f64,
}

impl CylindricalRate {
    pub fn new(rho_dot: f64, phi_dot: f64, z_dot: f64) -> Self {
        Self {
            rho_dot,
            phi_dot,
            z_dot,
        }
    }

    pub fn as_vec(&self) -> Vec3 {
        Vec3::new(self.rho_dot, self.phi_dot, self.z_dot)
    }
}

/// Pose and motion of the target-centred body frame in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyFrame {
    pub origin: Vec3,
    pub rotation: Mat3,
    pub origin_velocity: Vec3,
    pub rotation_rate: Mat3,
}

impl BodyFrame {
    /// Checks that `rotation` is a proper rotation to within 1e-12.
    pub fn new(origin: Vec3, rotation: Mat3, origin_velocity: Vec3, rotation_rate: Mat3) -> Result<Self> {
        let orth = (rotation.transpose() * rotation - Mat3::identity()).amax();
        let det = (rotation.determinant() - 1.0).abs();
        if orth > 1e-12 || det > 1e-12 {
            return Err(Error::InvalidScenario(format!(
                "body frame rotation is not orthonormal (|R^T R - I| = {orth:e}, |det R - 1| = {det:e})"
            )));
        }
        Ok(Self {
            origin,
            rotation,
            origin_velocity,
            rotation_rate,
        })
    }

    pub fn stationary(origin: Vec3) -> Self {
        Self::translating(origin, Vec3::zeros())
    }

    pub fn translating(origin: Vec3, velocity: Vec3) -> Self {
        Self {
            origin,
            rotation: Mat3::identity(),
            origin_velocity: velocity,
            rotation_rate: Mat3::zeros(),
        }
    }

    /// Point expressed in body-frame Cartesian coordinates.
    pub fn to_body(&self, p: &Vec3) -> Vec3 {
        self.rotation.transpose() * (p - self.origin)
    }
}

fn planar_guard(p: &Vec3, guard: f64) -> Result<f64> {
    let r2 = p.x * p.x + p.y * p.y;
    if !(r2 > guard * guard) {
        return Err(Error::AxisSingularity {
            planar_distance: r2.sqrt(),
            guard,
        });
    }
    Ok(r2)
}

/// Angle of `(x, y)` in `[0, 2pi)`. `(-x, 0)` maps to `pi`.
pub fn wrapped_angle(y: f64, x: f64) -> f64 {
    let a = y.atan2(x);
    let a = if a < 0.0 { a + TAU } else { a };
    // atan2 of a tiny negative y can round up to exactly 2pi
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Reduce an angle to `[0, 2pi)`.
pub fn reduce_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Returns the representative of `wrapped` (mod 2pi) closest to `reference`.
pub fn nearest_sheet(wrapped: f64, reference: f64) -> f64 {
    let turns = ((reference - wrapped) / TAU).round();
    wrapped + turns * TAU
}

pub fn cart_to_cyl(p: &Vec3) -> Result<CylindricalCoords> {
    cart_to_cyl_guarded(p, AXIS_GUARD)
}

pub fn cart_to_cyl_guarded(p: &Vec3, guard: f64) -> Result<CylindricalCoords> {
    let r2 = planar_guard(p, guard)?;
    Ok(CylindricalCoords {
        rho: r2.sqrt(),
        phi: wrapped_angle(p.y, p.x),
        z: p.z,
    })
}

/// Jacobian of `(rho, phi, z)` with respect to `(x, y, z)`.
pub fn jacobian(p: &Vec3) -> Result<Mat3> {
    let r2 = planar_guard(p, AXIS_GUARD)?;
    let r = r2.sqrt();
    Ok(Mat3::new(
        p.x / r, p.y / r, 0.0, //
        -p.y / r2, p.x / r2, 0.0, //
        0.0, 0.0, 1.0,
    ))
}

/// Closed-form inverse of [`jacobian`].
pub fn jacobian_inverse(p: &Vec3) -> Result<Mat3> {
    let r2 = planar_guard(p, AXIS_GUARD)?;
    let r = r2.sqrt();
    Ok(Mat3::new(
        p.x / r, -p.y, 0.0, //
        p.y / r, p.x, 0.0, //
        0.0, 0.0, 1.0,
    ))
}

pub fn body_coords(p: &Vec3, frame: &BodyFrame) -> Result<CylindricalCoords> {
    cart_to_cyl(&frame.to_body(p))
}

/// World velocity that realises the cylindrical rate `v` for a robot at `p`.
pub fn lift_control(v: &CylindricalRate, p: &Vec3, frame: &BodyFrame) -> Result<Vec3> {
    let rel = p - frame.origin;
    let local = frame.rotation.transpose() * rel;
    let j_inv = jacobian_inverse(&local)?;
    Ok(frame.origin_velocity
        + frame.rotation * (j_inv * v.as_vec() - frame.rotation_rate.transpose() * rel))
}
