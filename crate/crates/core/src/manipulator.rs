//! Two-link planar manipulator: dynamics, friction, kinematics and the two
//! linear-in-parameter regressors.
//!
//! The kinematic parameter vector is ordered `a = (l1 v1, l2 v1, l1 v2, l2 v2)`
//! so that `Z(q, qdot) a = J(q) qdot` holds for arbitrary scaling factors.

use nalgebra::{Matrix2, SMatrix, Vector2, Vector4};
use thiserror::Error;

use crate::numerics::sgn;
use crate::plant::{apply_fault, FaultProfile};

pub type Vector5 = nalgebra::SVector<f64, 5>;
pub type Regressor2x5 = SMatrix<f64, 2, 5>;
pub type Regressor2x4 = SMatrix<f64, 2, 4>;

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManipulatorError {
    #[error("invalid arm parameters: {0}")]
    Params(String),
    #[error("non-finite joint acceleration at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmParams {
    pub m1: f64,
    pub m2: f64,
    pub i1: f64,
    pub i2: f64,
    pub l1: f64,
    pub l2: f64,
    pub lc1: f64,
    pub lc2: f64,
    pub v1: f64,
    pub v2: f64,
    pub fv: Matrix2<f64>,
    pub fc: Matrix2<f64>,
    /// Gravitational acceleration; 0 models a horizontal plane.
    pub grav: f64,
}

impl ArmParams {
    /// Arm with unit scaling factors, the study's friction matrices and gravity on.
    #[allow(clippy::too_many_arguments)]
    pub fn new(m1: f64, m2: f64, i1: f64, i2: f64, l1: f64, l2: f64, lc1: f64, lc2: f64) -> Result<Self, ManipulatorError> {
        let p = ArmParams {
            m1,
            m2,
            i1,
            i2,
            l1,
            l2,
            lc1,
            lc2,
            v1: 1.0,
            v2: 1.0,
            fv: Matrix2::identity(),
            fc: Matrix2::from_element(1.0),
            grav: GRAVITY,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ManipulatorError> {
        let fields = [
            ("m1", self.m1),
            ("m2", self.m2),
            ("I1", self.i1),
            ("I2", self.i2),
            ("l1", self.l1),
            ("l2", self.l2),
            ("lc1", self.lc1),
            ("lc2", self.lc2),
            ("v1", self.v1),
            ("v2", self.v2),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ManipulatorError::Params(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.grav >= 0.0 && self.grav.is_finite()) {
            return Err(ManipulatorError::Params(format!("gravity {} must be non-negative", self.grav)));
        }
        Ok(())
    }

    pub fn without_gravity(mut self) -> Self {
        self.grav = 0.0;
        self
    }

    /// True kinematic parameters `(l1 v1, l2 v1, l1 v2, l2 v2)`.
    pub fn kinematic_params(&self) -> Vector4<f64> {
        Vector4::new(self.l1 * self.v1, self.l2 * self.v1, self.l1 * self.v2, self.l2 * self.v2)
    }
}

/// The six arms of the coordination study.
pub fn paper_arms() -> Vec<ArmParams> {
    let rows = [
        (1.5, 1.3, 0.50, 0.43, 2.0, 2.0, 1.00, 1.00),
        (1.2, 1.5, 0.53, 0.36, 2.3, 1.7, 1.15, 0.85),
        (1.2, 1.3, 0.32, 0.52, 1.8, 2.2, 0.90, 1.10),
        (1.8, 1.5, 0.66, 0.45, 2.1, 1.9, 1.05, 0.95),
        (1.7, 1.6, 0.56, 0.43, 2.0, 1.8, 1.00, 0.90),
        (1.9, 1.3, 0.46, 0.48, 1.7, 2.1, 0.85, 1.05),
    ];
    rows.iter()
        .map(|&(m1, m2, i1, i2, l1, l2, lc1, lc2)| {
            ArmParams::new(m1, m2, i1, i2, l1, l2, lc1, lc2).expect("table parameters are valid")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmState {
    pub q: Vector2<f64>,
    pub qdot: Vector2<f64>,
}

pub fn theta_vector(p: &ArmParams) -> Vector5 {
    Vector5::new(
        p.i1 + p.m1 * p.lc1 * p.lc1 + p.m2 * p.l1 * p.l1,
        p.i2 + p.m2 * p.lc2 * p.lc2,
        p.m2 * p.l1 * p.lc2,
        (p.m1 + p.m2) * p.l1,
        p.m2 * p.l2,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dynamics {
    pub m: Matrix2<f64>,
    pub c: Matrix2<f64>,
    pub g: Vector2<f64>,
}

pub fn dynamics_matrices(s: &ArmState, p: &ArmParams) -> Dynamics {
    let th = theta_vector(p);
    dynamics_from_theta(s, &th, p.grav)
}

pub fn dynamics_from_theta(s: &ArmState, th: &Vector5, grav: f64) -> Dynamics {
    let (c2, s2) = (s.q[1].cos(), s.q[1].sin());
    let c1 = s.q[0].cos();
    let c12 = (s.q[0] + s.q[1]).cos();
    let (dq1, dq2) = (s.qdot[0], s.qdot[1]);
    let m12 = th[1] + th[2] * c2;
    Dynamics {
        m: Matrix2::new(th[0] + th[1] + 2.0 * th[2] * c2, m12, m12, th[1]),
        c: Matrix2::new(-th[2] * s2 * dq2, -th[2] * s2 * (dq1 + dq2), th[2] * s2 * dq1, 0.0),
        g: Vector2::new(th[3] * grav * c1 + th[4] * grav * c12, th[4] * grav * c12),
    }
}

/// Potential energy whose gradient is `G`.
pub fn potential_energy(q: &Vector2<f64>, p: &ArmParams) -> f64 {
    let th = theta_vector(p);
    p.grav * (th[3] * q[0].sin() + th[4] * (q[0] + q[1]).sin())
}

pub fn friction(qdot: &Vector2<f64>, p: &ArmParams) -> Vector2<f64> {
    p.fv * qdot.map(f64::tanh) + p.fc * qdot.map(sgn)
}

pub fn forward_kinematics(q: &Vector2<f64>, p: &ArmParams) -> Vector2<f64> {
    let a = p.kinematic_params();
    forward_kinematics_hat(q, &a)
}

/// Forward map with kinematic parameters `a`.
pub fn forward_kinematics_hat(q: &Vector2<f64>, a: &Vector4<f64>) -> Vector2<f64> {
    let (c1, s1) = (q[0].cos(), q[0].sin());
    let (c12, s12) = ((q[0] + q[1]).cos(), (q[0] + q[1]).sin());
    Vector2::new(a[0] * c1 + a[1] * c12, a[2] * s1 + a[3] * s12)
}

pub fn jacobian(q: &Vector2<f64>, p: &ArmParams) -> Matrix2<f64> {
    jacobian_hat(q, &p.kinematic_params())
}

/// Jacobian built from kinematic parameters `a`; linear in `a`.
pub fn jacobian_hat(q: &Vector2<f64>, a: &Vector4<f64>) -> Matrix2<f64> {
    let (c1, s1) = (q[0].cos(), q[0].sin());
    let (c12, s12) = ((q[0] + q[1]).cos(), (q[0] + q[1]).sin());
    Matrix2::new(-a[0] * s1 - a[1] * s12, -a[1] * s12, a[2] * c1 + a[3] * c12, a[3] * c12)
}

/// `dJ/dq . qdot` for kinematic parameters `a`.
pub fn jacobian_hat_rate(q: &Vector2<f64>, qdot: &Vector2<f64>, a: &Vector4<f64>) -> Matrix2<f64> {
    let (c1, s1) = (q[0].cos(), q[0].sin());
    let (c12, s12) = ((q[0] + q[1]).cos(), (q[0] + q[1]).sin());
    let (w1, w12) = (qdot[0], qdot[0] + qdot[1]);
    Matrix2::new(
        -a[0] * c1 * w1 - a[1] * c12 * w12,
        -a[1] * c12 * w12,
        -a[2] * s1 * w1 - a[3] * s12 * w12,
        -a[3] * s12 * w12,
    )
}

/// `Z` with `Z(q, qdot) a = J(q) qdot`.
pub fn kinematic_regressor(q: &Vector2<f64>, qdot: &Vector2<f64>) -> Regressor2x4 {
    let (c1, s1) = (q[0].cos(), q[0].sin());
    let (c12, s12) = ((q[0] + q[1]).cos(), (q[0] + q[1]).sin());
    let (w1, w12) = (qdot[0], qdot[0] + qdot[1]);
    Regressor2x4::new(-s1 * w1, -s12 * w12, 0.0, 0.0, 0.0, 0.0, c1 * w1, c12 * w12)
}

/// `Y` with `Y theta = M(q) qr_ddot + C(q, qdot) qr_dot + G(q)`.
pub fn dynamic_regressor(
    q: &Vector2<f64>,
    qdot: &Vector2<f64>,
    qr_dot: &Vector2<f64>,
    qr_ddot: &Vector2<f64>,
    grav: f64,
) -> Regressor2x5 {
    let (c2, s2) = (q[1].cos(), q[1].sin());
    let c1 = q[0].cos();
    let c12 = (q[0] + q[1]).cos();
    let (a1, a2) = (qr_ddot[0], qr_ddot[1]);
    let (v1, v2) = (qr_dot[0], qr_dot[1]);
    let (dq1, dq2) = (qdot[0], qdot[1]);
    Regressor2x5::new(
        a1,
        a1 + a2,
        c2 * (2.0 * a1 + a2) - s2 * (dq2 * v1 + (dq1 + dq2) * v2),
        grav * c1,
        grav * c12,
        0.0,
        a1 + a2,
        c2 * a1 + s2 * dq1 * v1,
        0.0,
        grav * c12,
    )
}

/// p_i (cos t + 1.2) with p_i = (-1)^i 0.1 i.
pub fn paper_arm_gain(i: usize, t: f64) -> f64 {
    crate::plant::paper_gain_scale(i) * (t.cos() + 1.2)
}

pub fn paper_arm_disturbance(i: usize, t: f64) -> Vector2<f64> {
    let fi = i as f64;
    let (w1, w2) = (std::f64::consts::PI / (10.0 * fi), std::f64::consts::PI / (20.0 * fi));
    Vector2::new(
        0.2 * (w1 * t).sin() + 0.4 * (w2 * t).sin(),
        0.4 * (w1 * t).cos() + 0.8 * (w2 * t).cos(),
    )
}

/// Joint acceleration under the faulty torque:
/// `M qddot = g (phi tau + psi) + d - C qdot - G - F`.
pub fn arm_derivative(
    s: &ArmState,
    tau: &Vector2<f64>,
    t: f64,
    p: &ArmParams,
    fault: &FaultProfile,
    gain: f64,
    disturbance: &Vector2<f64>,
) -> Result<(Vector2<f64>, Vector2<f64>), ManipulatorError> {
    let dynm = dynamics_matrices(s, p);
    let tau_a = apply_fault(&nalgebra::DVector::from_column_slice(tau.as_slice()), t, fault);
    let tau_a = Vector2::new(tau_a[0], tau_a[1]);
    let rhs = tau_a * gain + disturbance - dynm.c * s.qdot - dynm.g - friction(&s.qdot, p);
    let qddot = dynm.m.lu().solve(&rhs).ok_or(ManipulatorError::NonFinite { t })?;
    if qddot.iter().any(|v| !v.is_finite()) {
        return Err(ManipulatorError::NonFinite { t });
    }
    Ok((s.qdot, qddot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn robot1() -> ArmParams {
        paper_arms().remove(0)
    }

    #[test]
    fn theta_examples() {
        let th = theta_vector(&robot1());
        let expect = Vector5::new(7.2, 1.73, 2.6, 5.6, 2.6);
        assert!((th - expect).amax() < 1e-12, "{th}");
        assert!((theta_vector(&paper_arms()[2])[4] - 2.86).abs() < 1e-12);
        assert!(ArmParams::new(1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn matrices_at_rest() {
        let s = ArmState { q: Vector2::zeros(), qdot: Vector2::zeros() };
        let d = dynamics_matrices(&s, &robot1());
        assert!((d.m - Matrix2::new(14.13, 4.33, 4.33, 1.73)).amax() < 1e-12);
        assert!((d.g - Vector2::new(80.442, 25.506)).amax() < 1e-9);
        assert_eq!(d.c, Matrix2::zeros());
    }

    #[test]
    fn friction_examples() {
        let p = robot1();
        assert_eq!(friction(&Vector2::zeros(), &p), Vector2::zeros());
        let f = friction(&Vector2::new(1.0, 0.0), &p);
        assert!((f - Vector2::new(1.0f64.tanh() + 1.0, 1.0)).amax() < 1e-15);
        assert!((f[0] - 1.761594).abs() < 1e-6);
        let w = Vector2::new(0.3, -1.7);
        assert_eq!(friction(&-w, &p), -friction(&w, &p));
    }

    #[test]
    fn kinematics_examples() {
        let p = robot1();
        assert!((forward_kinematics(&Vector2::zeros(), &p) - Vector2::new(4.0, 0.0)).amax() < 1e-15);
        assert!((forward_kinematics(&Vector2::new(FRAC_PI_2, 0.0), &p) - Vector2::new(0.0, 4.0)).amax() < 1e-15);
        assert!(forward_kinematics(&Vector2::new(0.0, PI), &p).amax() < 1e-15);
        assert_eq!(jacobian(&Vector2::zeros(), &p), Matrix2::new(0.0, 0.0, 4.0, 2.0));
        let z = kinematic_regressor(&Vector2::zeros(), &Vector2::new(1.0, 0.0));
        assert_eq!(z, Regressor2x4::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0));
    }

    #[test]
    fn jacobian_determinant() {
        let p = robot1();
        for &(q1, q2) in &[(0.3, 0.0), (1.1, 0.7), (-2.0, 2.5)] {
            let q = Vector2::new(q1, q2);
            let det = jacobian(&q, &p).determinant();
            assert!((det - p.l1 * p.l2 * p.v1 * p.v2 * q2.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn gravity_only_regressor() {
        let p = robot1();
        let z = Vector2::zeros();
        let y = dynamic_regressor(&z, &z, &z, &z, p.grav);
        assert!((y * theta_vector(&p) - Vector2::new(80.442, 25.506)).amax() < 1e-9);
        assert_eq!(dynamic_regressor(&z, &z, &z, &z, 0.0), Regressor2x5::zeros());
    }

    #[test]
    fn static_equilibrium() {
        let p = robot1();
        let s = ArmState { q: Vector2::new(0.4, -0.9), qdot: Vector2::zeros() };
        let tau = dynamics_matrices(&s, &p).g + friction(&s.qdot, &p);
        let (dq, ddq) = arm_derivative(&s, &tau, 0.0, &p, &FaultProfile::healthy(), 1.0, &Vector2::zeros()).unwrap();
        assert_eq!(dq, Vector2::zeros());
        assert!(ddq.amax() < 1e-12);
    }

    #[test]
    fn arm_gain_example() {
        assert!((paper_arm_gain(2, 0.0) - 0.44).abs() < 1e-12);
        assert!(paper_arm_gain(1, 2.0) < 0.0);
        let d = paper_arm_disturbance(1, 0.0);
        assert!((d - Vector2::new(0.0, 1.2)).amax() < 1e-15);
    }

    #[test]
    fn jacobian_rate_matches_difference() {
        let a = Vector4::new(1.7, 2.2, 1.9, 2.4);
        let q = Vector2::new(0.6, -1.1);
        let w = Vector2::new(0.8, -0.3);
        let h = 1e-6;
        let fd = (jacobian_hat(&(q + w * h), &a) - jacobian_hat(&(q - w * h), &a)) / (2.0 * h);
        assert!((fd - jacobian_hat_rate(&q, &w, &a)).amax() < 1e-8);
    }
}
