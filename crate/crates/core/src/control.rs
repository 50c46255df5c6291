//! Per-robot distributed control law.
//!
//! Each robot sees only its own cylindrical coordinates and the angles and
//! utilities of its two ring neighbours. Radius and height are regulated by
//! independent proportional loops; the angle tracks a utility-weighted point
//! between the neighbours while advancing at the common angular speed.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::formation::Guideline;
use crate::geometry::{CylindricalCoords, CylindricalRate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlGains {
    pub k_rho: f64,
    pub k_z: f64,
    pub k_phi: f64,
}

impl ControlGains {
    pub fn new(k_rho: f64, k_z: f64, k_phi: f64) -> Result<Self> {
        let gains = Self { k_rho, k_z, k_phi };
        gains.validate()?;
        Ok(gains)
    }

    pub fn uniform(k: f64) -> Result<Self> {
        Self::new(k, k, k)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("k_rho", self.k_rho), ("k_z", self.k_z), ("k_phi", self.k_phi)] {
            if !(k.is_finite() && k > 0.0) {
                return Err(Error::InvalidScenario(format!("{name} must be positive, got {k}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setpoints {
    pub rho_star: f64,
    pub omega_star: f64,
    pub z_star: f64,
}

impl Setpoints {
    pub fn new(rho_star: f64, omega_star: f64, z_star: f64) -> Result<Self> {
        let s = Self {
            rho_star,
            omega_star,
            z_star,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_star.is_finite() && self.rho_star > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "rho_star must be positive, got {}",
                self.rho_star
            )));
        }
        if !self.omega_star.is_finite() || !self.z_star.is_finite() {
            return Err(Error::InvalidScenario("setpoints must be finite".into()));
        }
        Ok(())
    }
}

/// What a robot knows about itself and its ring neighbours.
///
/// Angles are on one continuous sheet with `phi_minus < phi_self < phi_plus`;
/// for the first robot of the ring that places the clockwise neighbour one
/// turn below its wrapped value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborView {
    pub phi_minus: f64,
    pub phi_self: f64,
    pub phi_plus: f64,
    pub mu_minus: f64,
    pub mu_self: f64,
    pub mu_plus: f64,
}

impl NeighborView {
    /// Gap to the counter-clockwise neighbour.
    pub fn gap_ahead(&self) -> f64 {
        self.phi_plus - self.phi_self
    }

    /// Gap from the clockwise neighbour.
    pub fn gap_behind(&self) -> f64 {
        self.phi_self - self.phi_minus
    }
}

/// Desired angle of a robot between its neighbours.
pub fn desired_angle(view: &NeighborView, guideline: Guideline) -> f64 {
    let w = guideline.forward_weight(view.mu_minus, view.mu_self, view.mu_plus);
    view.phi_minus + w * (view.gap_ahead() + view.gap_behind())
}

/// `desired_angle - phi_self`, written in terms of the two gaps so that it
/// never involves a raw angle difference across the 2pi seam.
pub fn angle_error(view: &NeighborView, guideline: Guideline) -> f64 {
    let w = guideline.forward_weight(view.mu_minus, view.mu_self, view.mu_plus);
    w * view.gap_ahead() - (1.0 - w) * view.gap_behind()
}

/// Cylindrical rate command for one robot. `z_star` is the robot's own height setpoint.
pub fn control_law(
    q: &CylindricalCoords,
    view: &NeighborView,
    gains: &ControlGains,
    setpoints: &Setpoints,
    guideline: Guideline,
) -> CylindricalRate {
    CylindricalRate {
        rho_dot: gains.k_rho * (setpoints.rho_star - q.rho),
        phi_dot: setpoints.omega_star + gains.k_phi * angle_error(view, guideline),
        z_dot: gains.k_z * (setpoints.z_star - q.z),
    }
}

/// Stacked desired-angle map `phi_bar = A phi + b` over ring-ordered utilities,
/// with the ring's angles taken in `[first, first + 2pi)`.
pub fn compact_form(guideline: Guideline, mu: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let n = mu.len();
    assert!(n >= 2, "compact form needs at least two robots");
    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let next = (i + 1) % n;
        let w = guideline.forward_weight(mu[prev], mu[i], mu[next]);
        a[(i, prev)] += 1.0 - w;
        a[(i, next)] += w;
    }
    b[0] = -TAU * (1.0 - forward(guideline, mu, 0));
    b[n - 1] += TAU * forward(guideline, mu, n - 1);
    (a, b)
}

fn forward(guideline: Guideline, mu: &[f64], i: usize) -> f64 {
    let n = mu.len();
    guideline.forward_weight(mu[(i + n - 1) % n], mu[i], mu[(i + 1) % n])
}
