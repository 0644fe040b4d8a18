//! Follower and leader dynamics with actuator faults.
//!
//! A follower is an m-th order chain of n-dimensional integrators whose last
//! block is driven by `f(x)^T theta + g(x) u_a + d(x, t)`. The true parameter,
//! gain and disturbance stay private to this module; controllers only see the
//! known regressor `f`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension { what: &'static str, got: usize, expected: usize },
    #[error("invalid model: {0}")]
    Invalid(String),
}

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type TimeVecFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;
pub type StateMatFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type StateScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type StateTimeVecFn = Arc<dyn Fn(&[f64], f64) -> DVector<f64> + Send + Sync>;

#[derive(Clone)]
pub struct FollowerModel {
    order: usize,
    dim: usize,
    theta: DVector<f64>,
    regressor: StateMatFn,
    gain: StateScalarFn,
    disturbance: StateTimeVecFn,
}

impl fmt::Debug for FollowerModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FollowerModel")
            .field("order", &self.order)
            .field("dim", &self.dim)
            .field("n_params", &self.theta.len())
            .finish_non_exhaustive()
    }
}

impl FollowerModel {
    /// `regressor` maps the stacked state to the r x n matrix f_{i,m}.
    pub fn new(
        order: usize,
        dim: usize,
        theta: DVector<f64>,
        regressor: StateMatFn,
        gain: StateScalarFn,
        disturbance: StateTimeVecFn,
    ) -> Result<Self, PlantError> {
        if order == 0 || dim == 0 {
            return Err(PlantError::Invalid("order and dimension must be positive".into()));
        }
        Ok(FollowerModel { order, dim, theta, regressor, gain, disturbance })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    /// The known part of the model: f_{i,m}(x), shape r x n.
    pub fn regressor(&self) -> Regressor {
        Regressor { f: self.regressor.clone(), rows: self.theta.len(), cols: self.dim }
    }

    /// g_{i,m}(x). Exposed for the simulation harness's consistency checks only.
    pub fn gain_at(&self, x: &[f64]) -> f64 {
        (self.gain)(x)
    }

    pub fn disturbance_at(&self, x: &[f64], t: f64) -> DVector<f64> {
        (self.disturbance)(x, t)
    }

    pub fn true_theta(&self) -> &DVector<f64> {
        &self.theta
    }
}

/// Handle to the known regressor function; the only model piece a controller may use.
#[derive(Clone)]
pub struct Regressor {
    f: StateMatFn,
    rows: usize,
    cols: usize,
}

impl fmt::Debug for Regressor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Regressor({}x{})", self.rows, self.cols)
    }
}

impl Regressor {
    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        (self.f)(x)
    }

    pub fn n_params(&self) -> usize {
        self.rows
    }
}

#[derive(Clone)]
pub struct LeaderModel {
    order: usize,
    dim: usize,
    input: StateTimeVecFn,
}

impl fmt::Debug for LeaderModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LeaderModel").field("order", &self.order).field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl LeaderModel {
    /// `input` is o_{0,m}(x_0, t) with the leader's own input folded in.
    pub fn new(order: usize, dim: usize, input: StateTimeVecFn) -> Result<Self, PlantError> {
        if order == 0 || dim == 0 {
            return Err(PlantError::Invalid("order and dimension must be positive".into()));
        }
        Ok(LeaderModel { order, dim, input })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// x_{0,m}' = o_{0,m}(x_0, t).
    pub fn input_at(&self, x0: &[f64], t: f64) -> DVector<f64> {
        (self.input)(x0, t)
    }
}

#[derive(Clone)]
pub struct FaultSegment {
    pub start: f64,
    pub phi: TimeFn,
    pub psi: TimeVecFn,
}

impl fmt::Debug for FaultSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FaultSegment").field("start", &self.start).finish_non_exhaustive()
    }
}

/// Piecewise-in-time actuator fault `u_a = phi(t) u + psi(t)`; healthy before
/// the first segment.
#[derive(Debug, Clone, Default)]
pub struct FaultProfile {
    segments: Vec<FaultSegment>,
}

impl FaultProfile {
    pub fn healthy() -> Self {
        FaultProfile::default()
    }

    pub fn new(segments: Vec<FaultSegment>) -> Result<Self, PlantError> {
        for w in segments.windows(2) {
            if !(w[1].start > w[0].start) {
                return Err(PlantError::Invalid(format!(
                    "fault segment starts must increase strictly ({} then {})",
                    w[0].start, w[1].start
                )));
            }
        }
        Ok(FaultProfile { segments })
    }

    /// The two-phase schedule: partial loss plus bias on [3, 6), a different
    /// loss plus bias from t = 6 on.
    pub fn paper_schedule() -> Self {
        let seg1 = FaultSegment {
            start: 3.0,
            phi: Arc::new(|t| 0.2 * t.sin() + 0.4),
            psi: Arc::new(|t| DVector::from_vec(vec![2.0, 2.0 * t.cos()])),
        };
        let seg2 = FaultSegment {
            start: 6.0,
            phi: Arc::new(|t| 0.3 * t.cos() + 0.6),
            psi: Arc::new(|t| DVector::from_vec(vec![(0.1 * t).sin(), 3.0])),
        };
        FaultProfile { segments: vec![seg1, seg2] }
    }

    pub fn segments(&self) -> &[FaultSegment] {
        &self.segments
    }

    fn active(&self, t: f64) -> Option<&FaultSegment> {
        self.segments.iter().rev().find(|s| t >= s.start)
    }

    /// (phi(t), psi(t)); psi is `None` while healthy.
    pub fn coefficients(&self, t: f64) -> (f64, Option<DVector<f64>>) {
        match self.active(t) {
            None => (1.0, None),
            Some(s) => ((s.phi)(t), Some((s.psi)(t))),
        }
    }

    /// Sample phi on `[t0, t1]` and report the first time it leaves (0, 1].
    pub fn check_effectiveness(&self, t0: f64, t1: f64, dt: f64) -> Result<(), PlantError> {
        let n = ((t1 - t0) / dt).ceil() as usize;
        for k in 0..=n {
            let t = t0 + k as f64 * dt;
            let (phi, _) = self.coefficients(t);
            if !(phi > 0.0 && phi <= 1.0) {
                return Err(PlantError::Invalid(format!("fault effectiveness phi({t}) = {phi} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

pub fn apply_fault(u: &DVector<f64>, t: f64, profile: &FaultProfile) -> DVector<f64> {
    match profile.coefficients(t) {
        (_, None) => u.clone(),
        (phi, Some(psi)) => u * phi + psi,
    }
}

/// Derivative of the stacked follower state under the faulty input `u_a`.
pub fn follower_derivative(
    x: &[f64],
    u_a: &DVector<f64>,
    t: f64,
    model: &FollowerModel,
) -> Result<DVector<f64>, PlantError> {
    let (m, n) = (model.order, model.dim);
    if x.len() != m * n {
        return Err(PlantError::Dimension { what: "state", got: x.len(), expected: m * n });
    }
    if u_a.len() != n {
        return Err(PlantError::Dimension { what: "input", got: u_a.len(), expected: n });
    }
    let mut dx = DVector::zeros(m * n);
    dx.rows_mut(0, (m - 1) * n).copy_from_slice(&x[n..]);
    let f = (model.regressor)(x);
    let last = f.tr_mul(&model.theta) + u_a * (model.gain)(x) + (model.disturbance)(x, t);
    dx.rows_mut((m - 1) * n, n).copy_from(&last);
    Ok(dx)
}

pub fn leader_derivative(x0: &[f64], t: f64, model: &LeaderModel) -> Result<DVector<f64>, PlantError> {
    let (m, n) = (model.order, model.dim);
    if x0.len() != m * n {
        return Err(PlantError::Dimension { what: "leader state", got: x0.len(), expected: m * n });
    }
    let mut dx = DVector::zeros(m * n);
    dx.rows_mut(0, (m - 1) * n).copy_from_slice(&x0[n..]);
    dx.rows_mut((m - 1) * n, n).copy_from(&(model.input)(x0, t));
    Ok(dx)
}

/// p_i = (-1)^i 0.1 i.
pub fn paper_gain_scale(i: usize) -> f64 {
    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
    sign * 0.1 * i as f64
}

/// Second-order planar follower `i` (1..=6) of the formation study.
///
/// State layout `[p1, p2, v1, v2]`.
pub fn paper_second_order(i: usize) -> FollowerModel {
    let fi = i as f64;
    let theta = DVector::from_vec(vec![0.3 * fi, 0.5 * fi]);
    let p = paper_gain_scale(i);
    let regressor: StateMatFn = Arc::new(|x: &[f64]| {
        // rows index parameters, columns index output components
        DMatrix::from_row_slice(2, 2, &[-x[0].sin(), x[3], x[2], -x[1]])
    });
    let gain: StateScalarFn = Arc::new(move |x: &[f64]| p * x.iter().map(|v| v * v).sum::<f64>().cos());
    let disturbance: StateTimeVecFn = Arc::new(|x: &[f64], t: f64| {
        DVector::from_vec(vec![
            0.1 * (x[0] + x[1]).sin() - 0.3 * (0.3 * t).cos(),
            0.2 * (x[2] * x[3]).cos() + 0.5 * (0.5 * t).sin(),
        ])
    });
    FollowerModel { order: 2, dim: 2, theta, regressor, gain, disturbance }
}

/// The nonlinear leader of the formation study, state `[p1, p2, v1, v2]`.
pub fn paper_leader() -> LeaderModel {
    LeaderModel {
        order: 2,
        dim: 2,
        input: Arc::new(|x: &[f64], t: f64| {
            DVector::from_vec(vec![
                0.1 * (0.1 * x[0] + x[3]).cos() + 0.8 * t.sin(),
                0.2 * (x[1] + 0.2 * x[2]).sin() + 0.8 * t.cos(),
            ])
        }),
    }
}
