//! Nussbaum-gain adaptive backstepping for m-th order followers.
//!
//! The virtual controls are kept as linear forms in the local tracking errors
//! `z_k` and the estimator corrections `c_k = kappa_k sig(.)`, so their time
//! derivatives follow algebraically from `z_k' = z_{k+1} - c_k`. Derivatives
//! of the corrections themselves are not locally available and are dropped;
//! for m = 2 nothing is dropped.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::numerics::nussbaum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerError {
    #[error("backstepping needs order >= 2, got {0}")]
    OrderTooLow(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid controller gains: {0}")]
    Gains(String),
}

/// Integrable smoothing width `delta0 * exp(-decay * t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSchedule {
    pub delta0: f64,
    pub decay: f64,
}

impl DeltaSchedule {
    pub fn at(&self, t: f64) -> f64 {
        self.delta0 * (-self.decay * t).exp()
    }

    /// Closed-form integral over [0, inf).
    pub fn integral(&self) -> f64 {
        self.delta0 / self.decay
    }
}

impl Default for DeltaSchedule {
    fn default() -> Self {
        DeltaSchedule { delta0: 0.05, decay: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains {
    pub kbar: Vec<f64>,
    pub k_kappa: f64,
    pub gamma_theta: DMatrix<f64>,
    pub gamma_eps: DMatrix<f64>,
    pub delta: DeltaSchedule,
}

impl ControllerGains {
    /// Gains of the formation study for r parameters and n outputs.
    pub fn paper(r: usize, n: usize) -> Self {
        ControllerGains {
            kbar: vec![0.8, 80.0],
            k_kappa: 1.0,
            gamma_theta: DMatrix::identity(r, r) * 10.0,
            gamma_eps: DMatrix::identity(n, n),
            delta: DeltaSchedule::default(),
        }
    }

    pub fn validate(&self, order: usize, r: usize, n: usize) -> Result<(), ControllerError> {
        if order < 2 {
            return Err(ControllerError::OrderTooLow(order));
        }
        if self.kbar.len() != order {
            return Err(ControllerError::Gains(format!("{} kbar gains for order {order}", self.kbar.len())));
        }
        if self.kbar.iter().any(|&k| !(k > 0.0)) || !(self.k_kappa > 0.0) {
            return Err(ControllerError::Gains("kbar and k_kappa must be positive".into()));
        }
        if !(self.delta.delta0 > 0.0 && self.delta.decay > 0.0) {
            return Err(ControllerError::Gains("delta0 and decay must be positive".into()));
        }
        for (name, g, dim) in [("gamma_theta", &self.gamma_theta, r), ("gamma_eps", &self.gamma_eps, n)] {
            if g.shape() != (dim, dim) {
                return Err(ControllerError::Gains(format!("{name} must be {dim}x{dim}")));
            }
            if !is_positive_definite(g) {
                return Err(ControllerError::Gains(format!("{name} must be symmetric positive definite")));
            }
        }
        Ok(())
    }
}

pub(crate) fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= 1e-12 * m.amax().max(1.0) && m.clone().cholesky().is_some()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub theta_hat: DVector<f64>,
    pub eps_hat: DVector<f64>,
    pub kappa: f64,
}

impl ControllerState {
    pub fn zeros(r: usize, n: usize) -> Self {
        ControllerState { theta_hat: DVector::zeros(r), eps_hat: DVector::zeros(n), kappa: 0.0 }
    }

    pub fn packed_len(r: usize, n: usize) -> usize {
        r + n + 1
    }

    pub fn pack_into(&self, out: &mut [f64]) {
        let (r, n) = (self.theta_hat.len(), self.eps_hat.len());
        out[..r].copy_from_slice(self.theta_hat.as_slice());
        out[r..r + n].copy_from_slice(self.eps_hat.as_slice());
        out[r + n] = self.kappa;
    }

    pub fn unpack(data: &[f64], r: usize, n: usize) -> Self {
        ControllerState {
            theta_hat: DVector::from_column_slice(&data[..r]),
            eps_hat: DVector::from_column_slice(&data[r..r + n]),
            kappa: data[r + n],
        }
    }
}

/// Coefficients of `sum a_k z_k + sum b_k c_k`.
#[derive(Debug, Clone, PartialEq)]
struct LinForm {
    z: Vec<f64>,
    c: Vec<f64>,
}

impl LinForm {
    fn zero(m: usize) -> Self {
        LinForm { z: vec![0.0; m], c: vec![0.0; m] }
    }

    fn unit(m: usize, k: usize) -> Self {
        let mut f = Self::zero(m);
        f.z[k] = 1.0;
        f
    }

    fn axpy(&mut self, a: f64, other: &LinForm) {
        for (s, o) in self.z.iter_mut().zip(&other.z) {
            *s += a * o;
        }
        for (s, o) in self.c.iter_mut().zip(&other.c) {
            *s += a * o;
        }
    }

    /// d/dt with z_k' = z_{k+1} - c_k; correction derivatives dropped.
    fn derivative(&self) -> LinForm {
        let m = self.z.len();
        let mut d = Self::zero(m);
        for k in 0..m {
            let a = self.z[k];
            if a == 0.0 {
                continue;
            }
            // the recursion never differentiates z_m
            assert!(k + 1 < m, "derivative of z_m requested");
            d.z[k + 1] += a;
            d.c[k] -= a;
        }
        d
    }

    fn eval(&self, z: &[DVector<f64>], c: &[DVector<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(z[0].len());
        for (a, v) in self.z.iter().zip(z).chain(self.c.iter().zip(c)) {
            if *a != 0.0 {
                out.axpy(*a, v, 1.0);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacksteppingErrors {
    /// z~_1..z~_m.
    pub ztilde: Vec<DVector<f64>>,
    /// z*_2..z*_m (index 0 holds z*_2).
    pub zstar: Vec<DVector<f64>>,
    /// d/dt z*_m.
    pub zstar_dot_m: DVector<f64>,
}

/// Local tracking errors: `z_1 = x_1 - xhat_1 - offset`, `z_k = x_k - xhat_k`.
pub fn tracking_errors(x: &[f64], xhat: &[DVector<f64>], offset: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = offset.len();
    xhat.iter()
        .enumerate()
        .map(|(k, e)| {
            let mut z = DVector::from_column_slice(&x[k * n..(k + 1) * n]) - e;
            if k == 0 {
                z -= offset;
            }
            z
        })
        .collect()
}

/// Transformed errors and virtual controls from the local errors `z` and the
/// estimator corrections.
pub fn backstepping_errors(
    z: &[DVector<f64>],
    corrections: &[DVector<f64>],
    kbar: &[f64],
) -> Result<BacksteppingErrors, ControllerError> {
    let m = z.len();
    if m < 2 {
        return Err(ControllerError::OrderTooLow(m));
    }
    if corrections.len() != m || kbar.len() < m - 1 {
        return Err(ControllerError::Dimension(format!(
            "order {m} with {} corrections and {} gains",
            corrections.len(),
            kbar.len()
        )));
    }

    let mut zt = vec![LinForm::unit(m, 0)];
    let mut zs: Vec<LinForm> = Vec::with_capacity(m - 1);
    for q in 0..m - 1 {
        let mut next = LinForm::zero(m);
        next.axpy(-kbar[q], &zt[q]);
        if q > 0 {
            next.axpy(-1.0, &zt[q - 1]);
            next.axpy(1.0, &zs[q - 1].derivative());
        }
        let mut tilde = LinForm::unit(m, q + 1);
        tilde.axpy(-1.0, &next);
        zs.push(next);
        zt.push(tilde);
    }
    let zs_dot = zs[m - 2].derivative();

    Ok(BacksteppingErrors {
        ztilde: zt.iter().map(|f| f.eval(z, corrections)).collect(),
        zstar: zs.iter().map(|f| f.eval(z, corrections)).collect(),
        zstar_dot_m: zs_dot.eval(z, corrections),
    })
}

/// Componentwise `z / sqrt(z^2 + delta^2)`.
pub fn smoothed_direction(z: &DVector<f64>, delta: f64) -> DVector<f64> {
    z.map(|v| v / (v * v + delta * delta).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    pub u: DVector<f64>,
    pub ubar: DVector<f64>,
    pub z_delta: DVector<f64>,
    pub nussbaum: f64,
}

/// `ubar = kbar_m z~_m + z~_{m-1} - z*_m' + f^T theta_hat + diag(z~_delta) eps_hat`, `u = N(kappa) ubar`.
pub fn control_law(
    errors: &BacksteppingErrors,
    f: &DMatrix<f64>,
    ctrl: &ControllerState,
    gains: &ControllerGains,
    t: f64,
) -> ControlOutput {
    let m = errors.ztilde.len();
    let zm = &errors.ztilde[m - 1];
    let z_delta = smoothed_direction(zm, gains.delta.at(t));
    let ubar = zm * gains.kbar[m - 1] + &errors.ztilde[m - 2] - &errors.zstar_dot_m
        + f.tr_mul(&ctrl.theta_hat)
        + z_delta.component_mul(&ctrl.eps_hat);
    let n = nussbaum(ctrl.kappa);
    ControlOutput { u: &ubar * n, ubar, z_delta, nussbaum: n }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationRates {
    pub theta_hat: DVector<f64>,
    pub eps_hat: DVector<f64>,
    pub kappa: f64,
}

pub fn adaptation_derivatives(
    zm: &DVector<f64>,
    out: &ControlOutput,
    f: &DMatrix<f64>,
    gains: &ControllerGains,
) -> AdaptationRates {
    AdaptationRates {
        theta_hat: &gains.gamma_theta * (f * zm),
        eps_hat: &gains.gamma_eps * out.z_delta.component_mul(zm),
        kappa: gains.k_kappa * zm.dot(&out.ubar),
    }
}
