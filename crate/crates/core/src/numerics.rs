//! Scalar primitives, the fixed-step integrator and settling-time detection.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("exponent {0} outside (0, 1]")]
    ExponentOutOfRange(f64),
    #[error("boundary-layer width must be positive, got {0}")]
    BadBoundaryLayer(f64),
    #[error("invalid integrator config: {0}")]
    BadConfig(String),
}

/// How the discontinuous signum is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignumPolicy {
    /// -1 / 0 / +1 with sgn(0) = 0.
    Exact,
    /// x / (|x| + epsilon).
    BoundaryLayer { epsilon: f64 },
}

impl SignumPolicy {
    pub fn boundary_layer(epsilon: f64) -> Result<Self, NumericsError> {
        if epsilon > 0.0 && epsilon.is_finite() {
            Ok(SignumPolicy::BoundaryLayer { epsilon })
        } else {
            Err(NumericsError::BadBoundaryLayer(epsilon))
        }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            SignumPolicy::Exact => sgn(x),
            SignumPolicy::BoundaryLayer { epsilon } => x / (x.abs() + epsilon),
        }
    }
}

impl Default for SignumPolicy {
    fn default() -> Self {
        SignumPolicy::BoundaryLayer { epsilon: 1e-3 }
    }
}

/// Exact signum with sgn(0) = 0.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// sgn(x)|x|^theta without range checking; the hot-path form of [`sig_pow`].
#[inline]
pub fn sig(x: f64, theta: f64) -> f64 {
    sgn(x) * x.abs().powf(theta)
}

/// Componentwise sgn(x_k)|x_k|^theta for theta in (0, 1].
pub fn sig_pow(x: &[f64], theta: f64) -> Result<Vec<f64>, NumericsError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(NumericsError::ExponentOutOfRange(theta));
    }
    Ok(x.iter().map(|&v| sig(v, theta)).collect())
}

pub fn signum(x: &[f64], policy: SignumPolicy) -> Vec<f64> {
    x.iter().map(|&v| policy.apply(v)).collect()
}

/// Nussbaum gain exp(k^2) cos(pi k / 2) + 1.
///
/// Overflows to +-inf once k^2 exceeds ~709; callers guard the argument.
#[inline]
pub fn nussbaum(kappa: f64) -> f64 {
    (kappa * kappa).exp() * (FRAC_PI_2 * kappa).cos() + 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    ExplicitEuler,
    Rk4,
}

impl std::str::FromStr for Scheme {
    type Err = NumericsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "explicit_euler" | "euler" => Ok(Scheme::ExplicitEuler),
            "rk4" => Ok(Scheme::Rk4),
            other => Err(NumericsError::BadConfig(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub step: f64,
    pub scheme: Scheme,
    pub t_end: f64,
    /// Record every `decimation`-th step (1 = full rate).
    pub decimation: usize,
}

impl IntegratorConfig {
    pub const MAX_STEP: f64 = 1e-2;

    pub fn new(step: f64, scheme: Scheme, t_end: f64) -> Result<Self, NumericsError> {
        let cfg = IntegratorConfig { step, scheme, t_end, decimation: 10 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_decimation(mut self, decimation: usize) -> Self {
        self.decimation = decimation.max(1);
        self
    }

    pub fn validate(&self) -> Result<(), NumericsError> {
        if !(self.step > 0.0 && self.step <= Self::MAX_STEP) {
            return Err(NumericsError::BadConfig(format!(
                "step {} must lie in (0, {}]",
                self.step,
                Self::MAX_STEP
            )));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.step) {
            return Err(NumericsError::BadConfig(format!(
                "t_end {} must be finite and at least one step",
                self.t_end
            )));
        }
        if self.decimation == 0 {
            return Err(NumericsError::BadConfig("decimation must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of steps covering [0, t_end], rounded to the nearest grid point.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.step).round() as usize
    }

    /// Grid time of step k; computed by multiplication so it never drifts.
    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { step: 1e-4, scheme: Scheme::ExplicitEuler, t_end: 30.0, decimation: 10 }
    }
}

/// Reusable work buffers for one explicit step.
#[derive(Debug, Clone)]
pub struct Stepper {
    scheme: Scheme,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Stepper {
    pub fn new(scheme: Scheme, dim: usize) -> Self {
        let buf = vec![0.0; dim];
        let (k2, k3, k4, tmp) = match scheme {
            Scheme::ExplicitEuler => (Vec::new(), Vec::new(), Vec::new(), Vec::new()),
            Scheme::Rk4 => (buf.clone(), buf.clone(), buf.clone(), buf.clone()),
        };
        Stepper { scheme, k1: buf, k2, k3, k4, tmp }
    }

    /// Advance `x` from `t` to `t + h` in place.
    pub fn advance<F>(&mut self, rhs: &mut F, t: f64, x: &mut [f64], h: f64)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        match self.scheme {
            Scheme::ExplicitEuler => {
                rhs(t, x, &mut self.k1);
                for (xi, ki) in x.iter_mut().zip(&self.k1) {
                    *xi += h * ki;
                }
            }
            Scheme::Rk4 => {
                rhs(t, x, &mut self.k1);
                stage(&mut self.tmp, x, &self.k1, 0.5 * h);
                rhs(t + 0.5 * h, &self.tmp, &mut self.k2);
                stage(&mut self.tmp, x, &self.k2, 0.5 * h);
                rhs(t + 0.5 * h, &self.tmp, &mut self.k3);
                stage(&mut self.tmp, x, &self.k3, h);
                rhs(t + h, &self.tmp, &mut self.k4);
                for i in 0..x.len() {
                    x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
                }
            }
        }
    }
}

fn stage(out: &mut [f64], x: &[f64], k: &[f64], h: f64) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + h * ki;
    }
}

/// First non-finite component found during integration.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("state component {index} became non-finite at t = {t}")]
pub struct NonFinite {
    pub index: usize,
    pub t: f64,
    /// Samples recorded before the failure.
    pub partial: Sampled,
}

/// Decimated samples of an integration run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sampled {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

/// Fixed-step explicit integration of `x' = rhs(t, x)` over `[0, cfg.t_end]`.
///
/// The initial state and every `cfg.decimation`-th step are recorded, and the
/// final step is always recorded.
pub fn integrate<F>(mut rhs: F, x0: &[f64], cfg: &IntegratorConfig) -> Result<Sampled, NonFinite>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = cfg.n_steps();
    let mut stepper = Stepper::new(cfg.scheme, x0.len());
    let mut x = x0.to_vec();
    let mut out = Sampled::default();
    out.times.push(0.0);
    out.states.push(x.clone());
    for k in 0..n {
        let t = cfg.time(k);
        stepper.advance(&mut rhs, t, &mut x, cfg.step);
        let t_next = cfg.time(k + 1);
        if let Some(index) = x.iter().position(|v| !v.is_finite()) {
            return Err(NonFinite { index, t: t_next, partial: out });
        }
        if (k + 1) % cfg.decimation == 0 || k + 1 == n {
            out.times.push(t_next);
            out.states.push(x.clone());
        }
    }
    Ok(out)
}

/// Smallest sample time after which `values` stays at or below `tol`.
///
/// Non-finite samples count as violations. Returns `None` when the last sample
/// still violates the tolerance (or the series is empty).
pub fn settling_time(times: &[f64], values: &[f64], tol: f64) -> Option<f64> {
    debug_assert_eq!(times.len(), values.len());
    let last_violation = values.iter().rposition(|v| !(v.abs() <= tol));
    match last_violation {
        None => times.first().copied(),
        Some(i) if i + 1 < times.len() => Some(times[i + 1]),
        Some(_) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sig_pow_examples() {
        assert_eq!(sig_pow(&[4.0], 0.5).unwrap(), vec![2.0]);
        assert_eq!(sig_pow(&[-9.0], 0.5).unwrap(), vec![-3.0]);
        assert_eq!(sig_pow(&[0.0, 1.0], 0.7).unwrap(), vec![0.0, 1.0]);
        assert!(sig_pow(&[1.0], 0.0).is_err());
        assert!(sig_pow(&[1.0], 1.5).is_err());
    }

    #[test]
    fn signum_examples() {
        assert_eq!(signum(&[-3.0, 0.0, 0.1], SignumPolicy::Exact), vec![-1.0, 0.0, 1.0]);
        let bl = SignumPolicy::boundary_layer(0.01).unwrap();
        assert_eq!(signum(&[0.0], bl), vec![0.0]);
        assert!((signum(&[0.01], bl)[0] - 0.5).abs() < 1e-15);
        assert!(SignumPolicy::boundary_layer(0.0).is_err());
    }

    #[test]
    fn nussbaum_examples() {
        assert_eq!(nussbaum(0.0), 2.0);
        assert!((nussbaum(1.0) - 1.0).abs() < 1e-15);
        let expect = 1.0 - 4f64.exp();
        assert!((nussbaum(2.0) - expect).abs() < 1e-12);
        assert!((nussbaum(2.0) + 53.598).abs() < 1e-3);
    }

    #[test]
    fn integrate_constant() {
        let cfg = IntegratorConfig::new(1e-3, Scheme::Rk4, 0.5).unwrap();
        let out = integrate(|_, _, dx| dx.iter_mut().for_each(|d| *d = 0.0), &[3.0, -1.0], &cfg).unwrap();
        assert!(out.states.iter().all(|s| s == &vec![3.0, -1.0]));
        assert_eq!(*out.times.last().unwrap(), 0.5);
    }

    #[test]
    fn integrate_euler_decay() {
        let cfg = IntegratorConfig::new(1e-3, Scheme::ExplicitEuler, 1.0).unwrap();
        let out = integrate(|_, x, dx| dx[0] = -x[0], &[1.0], &cfg).unwrap();
        let last = out.states.last().unwrap()[0];
        // Euler gives (1 - h)^(1/h); |that - e^-1| ~ h e^-1 / 2
        assert!((last - (-1f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn integrate_rk4_fourth_order() {
        let err = |h: f64| {
            let cfg = IntegratorConfig::new(h, Scheme::Rk4, 1.0).unwrap();
            let out = integrate(|_, x, dx| dx[0] = -x[0], &[1.0], &cfg).unwrap();
            (out.states.last().unwrap()[0] - (-1f64).exp()).abs()
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        assert!(e1 < 1e-9, "{e1}");
        let ratio = e1 / e2;
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn integrate_reports_nan() {
        let cfg = IntegratorConfig::new(1e-3, Scheme::ExplicitEuler, 1.0).unwrap().with_decimation(1);
        let err = integrate(
            |t, _, dx| dx[0] = if t >= 0.5 - 1e-12 { f64::NAN } else { 0.0 },
            &[1.0],
            &cfg,
        )
        .unwrap_err();
        assert_eq!(err.index, 0);
        assert!((err.t - 0.501).abs() < 1e-9, "{}", err.t);
        assert!(err.partial.states.iter().all(|s| s[0].is_finite()));
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::new(0.02, Scheme::Rk4, 1.0).is_err());
        assert!(IntegratorConfig::new(1e-3, Scheme::Rk4, 1e-4).is_err());
        assert!(IntegratorConfig::new(-1.0, Scheme::Rk4, 1.0).is_err());
    }

    #[test]
    fn settling_examples() {
        let t: Vec<f64> = (0..11).map(|k| k as f64).collect();
        assert_eq!(settling_time(&t, &[0.0; 11], 1e-3), Some(0.0));
        let mut v = vec![1.0; 11];
        v[2] = 0.0;
        v[3] = 0.0;
        for x in v.iter_mut().skip(5) {
            *x = 0.0;
        }
        assert_eq!(settling_time(&t, &v, 1e-3), Some(5.0));
        assert_eq!(settling_time(&t, &[1.0; 11], 1e-3), None);
    }

    proptest! {
        #[test]
        fn sig_pow_is_odd(x in -1e3f64..1e3, theta in 0.01f64..=1.0) {
            let a = sig_pow(&[x], theta).unwrap()[0];
            let b = sig_pow(&[-x], theta).unwrap()[0];
            prop_assert_eq!(a, -b);
        }

        #[test]
        fn sig_pow_unit_exponent_is_identity(x in -1e6f64..1e6) {
            let y = sig_pow(&[x], 1.0).unwrap()[0];
            prop_assert!((y - x).abs() <= 1e-15 * x.abs().max(1.0));
        }
    }
}
