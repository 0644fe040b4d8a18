//! Task-space fault-tolerant controller for networked manipulators.
//!
//! Each robot tracks its local estimates `(chi, vartheta)` of the task
//! reference through an adaptive-Jacobian reference velocity, a
//! Nussbaum-scaled control, and dynamic plus kinematic parameter adaptation.

use nalgebra::{Matrix2, Matrix4, SMatrix, Vector2, Vector4};
use thiserror::Error;

use crate::controller::DeltaSchedule;
use crate::manipulator::{
    dynamic_regressor, jacobian_hat, jacobian_hat_rate, kinematic_regressor, Regressor2x4, Regressor2x5, Vector5,
    GRAVITY,
};
use crate::numerics::nussbaum;

pub type Matrix5 = SMatrix<f64, 5, 5>;

/// Regularisation added to `J J^T` when its determinant drops below [`PINV_DET_THRESHOLD`].
pub const PINV_LAMBDA: f64 = 1e-8;
pub const PINV_DET_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskControllerError {
    #[error("invalid task gains: {0}")]
    Gains(String),
}

/// Source of the task velocity used in the reference acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VelocitySource {
    /// Measured end-effector velocity.
    #[default]
    Measured,
    /// `J_hat(q) qdot` from the estimated kinematics.
    Estimated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskGains {
    pub alpha_x: f64,
    pub alpha_r: f64,
    pub k_s: Matrix2<f64>,
    pub k_kappa: f64,
    pub gamma_theta: Matrix5,
    pub gamma_eps: Matrix2<f64>,
    pub lambda: Matrix4<f64>,
    pub delta: DeltaSchedule,
    /// Gravity constant assumed by the dynamic regressor.
    pub gravity: f64,
    pub velocity_source: VelocitySource,
}

impl Default for TaskGains {
    fn default() -> Self {
        TaskGains {
            alpha_x: 1.0,
            alpha_r: 0.5,
            k_s: Matrix2::identity() * 2.0,
            k_kappa: 1.0,
            gamma_theta: Matrix5::identity() * 10.0,
            gamma_eps: Matrix2::identity(),
            lambda: Matrix4::identity(),
            delta: DeltaSchedule::default(),
            gravity: GRAVITY,
            velocity_source: VelocitySource::Measured,
        }
    }
}

fn spd<const D: usize>(m: &SMatrix<f64, D, D>) -> bool
where
    nalgebra::Const<D>: nalgebra::DimMin<nalgebra::Const<D>, Output = nalgebra::Const<D>>,
{
    (m - m.transpose()).amax() <= 1e-12 * m.amax().max(1.0) && m.cholesky().is_some()
}

impl TaskGains {
    pub fn validate(&self) -> Result<(), TaskControllerError> {
        if !(self.alpha_x > 0.75) {
            return Err(TaskControllerError::Gains(format!("alpha_x = {} must exceed 3/4", self.alpha_x)));
        }
        if !(self.alpha_r > 0.0 && self.k_kappa > 0.0) {
            return Err(TaskControllerError::Gains("alpha_r and k_kappa must be positive".into()));
        }
        if !spd(&(self.k_s - Matrix2::identity())) {
            return Err(TaskControllerError::Gains("K_s - I must be positive definite".into()));
        }
        if !spd(&self.gamma_theta) || !spd(&self.gamma_eps) || !spd(&self.lambda) {
            return Err(TaskControllerError::Gains("adaptation gains must be symmetric positive definite".into()));
        }
        if !(self.delta.delta0 > 0.0 && self.delta.decay > 0.0) {
            return Err(TaskControllerError::Gains("delta0 and decay must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskControllerState {
    pub theta_hat: Vector5,
    pub a_hat: Vector4<f64>,
    pub eps_hat: Vector2<f64>,
    pub kappa: f64,
    pub sx_integral: Vector2<f64>,
}

impl TaskControllerState {
    pub const PACKED_LEN: usize = 14;

    pub fn new(a_hat: Vector4<f64>) -> Self {
        TaskControllerState {
            theta_hat: Vector5::zeros(),
            a_hat,
            eps_hat: Vector2::zeros(),
            kappa: 0.0,
            sx_integral: Vector2::zeros(),
        }
    }

    pub fn pack_into(&self, out: &mut [f64]) {
        out[0..5].copy_from_slice(self.theta_hat.as_slice());
        out[5..9].copy_from_slice(self.a_hat.as_slice());
        out[9..11].copy_from_slice(self.eps_hat.as_slice());
        out[11] = self.kappa;
        out[12..14].copy_from_slice(self.sx_integral.as_slice());
    }

    pub fn unpack(d: &[f64]) -> Self {
        TaskControllerState {
            theta_hat: Vector5::from_column_slice(&d[0..5]),
            a_hat: Vector4::from_column_slice(&d[5..9]),
            eps_hat: Vector2::from_column_slice(&d[9..11]),
            kappa: d[11],
            sx_integral: Vector2::from_column_slice(&d[12..14]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sliding {
    pub e_x: Vector2<f64>,
    pub e_v: Vector2<f64>,
    pub s_x: Vector2<f64>,
}

pub fn task_errors_and_sliding(
    x: &Vector2<f64>,
    xdot: &Vector2<f64>,
    chi: &Vector2<f64>,
    vartheta: &Vector2<f64>,
    alpha_x: f64,
) -> Sliding {
    let e_x = x - chi;
    let e_v = xdot - vartheta;
    Sliding { e_x, e_v, s_x: e_v + e_x * alpha_x }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoInverse {
    pub pinv: Matrix2<f64>,
    /// `(J J^T [+ lambda I])^-1`.
    pub w_inv: Matrix2<f64>,
    pub regularized: bool,
}

/// `J^T (J J^T)^-1`, regularised near singularity.
pub fn pseudo_inverse(j: &Matrix2<f64>) -> PseudoInverse {
    let mut w = j * j.transpose();
    let regularized = w.determinant() < PINV_DET_THRESHOLD;
    if regularized {
        w += Matrix2::identity() * PINV_LAMBDA;
    }
    let w_inv = w.try_inverse().unwrap_or_else(|| Matrix2::identity() / PINV_LAMBDA);
    PseudoInverse { pinv: j.transpose() * w_inv, w_inv, regularized }
}

/// Local signals each robot reads at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskSignals {
    pub q: Vector2<f64>,
    pub qdot: Vector2<f64>,
    /// Measured end-effector position and velocity.
    pub x: Vector2<f64>,
    pub xdot: Vector2<f64>,
    pub chi: Vector2<f64>,
    pub vartheta: Vector2<f64>,
    /// Estimator right-hand sides for chi and vartheta.
    pub chi_dot: Vector2<f64>,
    pub vartheta_dot: Vector2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub sliding: Sliding,
    pub j_hat: Matrix2<f64>,
    pub pinv: PseudoInverse,
    pub qr_dot: Vector2<f64>,
    pub qr_ddot: Vector2<f64>,
    pub s: Vector2<f64>,
    pub z: Regressor2x4,
    pub a_hat_dot: Vector4<f64>,
}

/// Reference velocity, its analytic derivative and the joint sliding vector.
pub fn reference_trajectories(sig: &TaskSignals, ctrl: &TaskControllerState, gains: &TaskGains) -> Reference {
    let sliding = task_errors_and_sliding(&sig.x, &sig.xdot, &sig.chi, &sig.vartheta, gains.alpha_x);
    let j_hat = jacobian_hat(&sig.q, &ctrl.a_hat);
    let pinv = pseudo_inverse(&j_hat);
    let w = sig.vartheta - sliding.e_x * gains.alpha_x - ctrl.sx_integral * gains.alpha_r;
    let qr_dot = pinv.pinv * w;
    let s = sig.qdot - qr_dot;
    let z = kinematic_regressor(&sig.q, &sig.qdot);
    let a_hat_dot = gains.lambda * z.transpose() * (sliding.s_x + ctrl.sx_integral * gains.alpha_r - j_hat * s);

    // d/dt J_hat through q and a_hat; J_hat is linear in a_hat
    let j_dot = jacobian_hat_rate(&sig.q, &sig.qdot, &ctrl.a_hat) + jacobian_hat(&sig.q, &a_hat_dot);
    let w_dot_mat = j_dot * j_hat.transpose() + j_hat * j_dot.transpose();
    let pinv_dot = j_dot.transpose() * pinv.w_inv - j_hat.transpose() * pinv.w_inv * w_dot_mat * pinv.w_inv;

    let xdot = match gains.velocity_source {
        VelocitySource::Measured => sig.xdot,
        VelocitySource::Estimated => j_hat * sig.qdot,
    };
    let e_x_dot = xdot - sig.chi_dot;
    let w_dot = sig.vartheta_dot - e_x_dot * gains.alpha_x - sliding.s_x * gains.alpha_r;
    let qr_ddot = pinv.pinv * w_dot + pinv_dot * (j_hat * qr_dot);

    Reference { sliding, j_hat, pinv, qr_dot, qr_ddot, s, z, a_hat_dot }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskControl {
    pub u: Vector2<f64>,
    pub tau: Vector2<f64>,
    pub s_delta: Vector2<f64>,
    pub nussbaum: f64,
}

/// `u = Y theta_hat - J_hat^T K_s J_hat s - diag(s_delta) eps_hat`, `tau = N(kappa) u`.
pub fn task_control_law(
    s: &Vector2<f64>,
    y: &Regressor2x5,
    j_hat: &Matrix2<f64>,
    ctrl: &TaskControllerState,
    gains: &TaskGains,
    t: f64,
) -> TaskControl {
    let d = gains.delta.at(t);
    let s_delta = s.map(|v| v / (v * v + d * d).sqrt());
    let u = y * ctrl.theta_hat - j_hat.transpose() * gains.k_s * j_hat * s - s_delta.component_mul(&ctrl.eps_hat);
    let n = nussbaum(ctrl.kappa);
    TaskControl { u, tau: u * n, s_delta, nussbaum: n }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskRates {
    pub theta_hat: Vector5,
    pub a_hat: Vector4<f64>,
    pub eps_hat: Vector2<f64>,
    pub kappa: f64,
    pub sx_integral: Vector2<f64>,
}

impl TaskRates {
    pub fn pack_into(&self, out: &mut [f64]) {
        TaskControllerState {
            theta_hat: self.theta_hat,
            a_hat: self.a_hat,
            eps_hat: self.eps_hat,
            kappa: self.kappa,
            sx_integral: self.sx_integral,
        }
        .pack_into(out)
    }
}

pub fn task_adaptation(
    reference: &Reference,
    y: &Regressor2x5,
    control: &TaskControl,
    gains: &TaskGains,
) -> TaskRates {
    let s = &reference.s;
    TaskRates {
        theta_hat: -(gains.gamma_theta * (y.transpose() * s)),
        a_hat: reference.a_hat_dot,
        eps_hat: gains.gamma_eps * control.s_delta.component_mul(s),
        kappa: -gains.k_kappa * s.dot(&control.u),
        sx_integral: reference.sliding.s_x,
    }
}

/// Everything one robot's controller produces at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskStep {
    pub reference: Reference,
    pub y: Regressor2x5,
    pub control: TaskControl,
    pub rates: TaskRates,
}

pub fn task_controller_step(sig: &TaskSignals, ctrl: &TaskControllerState, gains: &TaskGains, t: f64) -> TaskStep {
    let reference = reference_trajectories(sig, ctrl, gains);
    let y = dynamic_regressor(&sig.q, &sig.qdot, &reference.qr_dot, &reference.qr_ddot, gains.gravity);
    let control = task_control_law(&reference.s, &y, &reference.j_hat, ctrl, gains, t);
    let rates = task_adaptation(&reference, &y, &control, gains);
    TaskStep { reference, y, control, rates }
}

/// `J_hat s - (s_x + alpha_r int s_x + Z (a_hat - a))`; zero whenever `J_hat J_hat^+ = I`.
pub fn kinematic_relation_residual(
    step: &TaskStep,
    ctrl: &TaskControllerState,
    gains: &TaskGains,
    a_true: &Vector4<f64>,
) -> Vector2<f64> {
    let r = &step.reference;
    r.j_hat * r.s - (r.sliding.s_x + ctrl.sx_integral * gains.alpha_r + r.z * (ctrl.a_hat - a_true))
}

/// Truth-side terms of the closed-loop sliding dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedLoopTruth {
    pub m: Matrix2<f64>,
    pub c: Matrix2<f64>,
    pub qddot: Vector2<f64>,
    /// `b = g phi`.
    pub b: f64,
    /// `D = g psi - F + d`.
    pub d: Vector2<f64>,
    pub theta: Vector5,
}

/// `M s' - (-C s + (b N - 1) u - J^T K J s + Y (theta_hat - theta) + D - diag(s_delta) eps_hat)`.
pub fn closed_loop_residual(
    step: &TaskStep,
    ctrl: &TaskControllerState,
    gains: &TaskGains,
    truth: &ClosedLoopTruth,
) -> Vector2<f64> {
    let r = &step.reference;
    let s = r.s;
    let s_dot = truth.qddot - r.qr_ddot;
    let rhs = -truth.c * s + step.control.u * (truth.b * step.control.nussbaum - 1.0)
        - r.j_hat.transpose() * gains.k_s * r.j_hat * s
        + step.y * (ctrl.theta_hat - truth.theta)
        + truth.d
        - step.control.s_delta.component_mul(&ctrl.eps_hat);
    truth.m * s_dot - rhs
}
