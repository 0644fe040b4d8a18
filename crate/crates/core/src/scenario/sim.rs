use std::cell::Cell;
use std::ops::Range;

use nalgebra::{DVector, Vector2};

use crate::controller::{
    adaptation_derivatives, backstepping_errors, control_law, tracking_errors, ControllerState,
};
use crate::estimator::{estimator_derivative, task_estimator_derivative, EstimatorState};
use crate::manipulator::{
    arm_derivative, dynamics_matrices, forward_kinematics, friction, jacobian, theta_vector, ArmState,
};
use crate::numerics::{IntegratorConfig, Stepper};
use crate::plant::{apply_fault, follower_derivative, leader_derivative};
use crate::task_controller::{
    closed_loop_residual, kinematic_relation_residual, task_controller_step, ClosedLoopTruth, TaskControllerState,
    TaskSignals,
};

use super::metrics::{compute_metrics, Metrics, RunStatus};
use super::trace::SimTrace;
use super::{DivergenceGuard, FormationSpec, Scenario, ScenarioError, ScenarioKind, TaskSpec};

/// Why and when a run was cut.
#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub t: f64,
    /// 1-based follower index when the offending entry belongs to one agent.
    pub agent: Option<usize>,
    pub reason: String,
}

impl std::fmt::Display for Divergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.agent {
            Some(i) => write!(f, "diverged at t = {:.4} (agent {i}): {}", self.t, self.reason),
            None => write!(f, "diverged at t = {:.4}: {}", self.t, self.reason),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub trace: SimTrace,
    pub metrics: Metrics,
    pub status: RunStatus,
    pub divergence: Option<Divergence>,
}

/// Offsets of the generic formation closed loop in the global state:
/// leader, plants, estimators, controllers.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationLayout {
    pub n_agents: usize,
    pub order: usize,
    pub dim: usize,
    pub n_params: Vec<usize>,
    ctrl_start: Vec<usize>,
    len: usize,
}

/// Unpacked composite state of a formation run.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationState {
    pub leader: Vec<f64>,
    pub plants: Vec<Vec<f64>>,
    pub estimators: Vec<EstimatorState>,
    pub controllers: Vec<ControllerState>,
}

impl FormationLayout {
    pub fn new(order: usize, dim: usize, n_params: Vec<usize>) -> Self {
        let n_agents = n_params.len();
        let mut at = (1 + n_agents) * order * dim + n_agents * EstimatorState::packed_len(order, dim);
        let mut ctrl_start = Vec::with_capacity(n_agents);
        for &r in &n_params {
            ctrl_start.push(at);
            at += ControllerState::packed_len(r, dim);
        }
        FormationLayout { n_agents, order, dim, n_params, ctrl_start, len: at }
    }

    fn of(spec: &FormationSpec) -> Self {
        FormationLayout::new(
            spec.leader.order(),
            spec.leader.dim(),
            spec.followers.iter().map(|f| f.n_params()).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn leader(&self) -> Range<usize> {
        0..self.order * self.dim
    }

    pub fn plant(&self, i: usize) -> Range<usize> {
        let w = self.order * self.dim;
        w * (1 + i)..w * (2 + i)
    }

    pub fn estimator(&self, i: usize) -> Range<usize> {
        let w = EstimatorState::packed_len(self.order, self.dim);
        let base = (1 + self.n_agents) * self.order * self.dim;
        base + w * i..base + w * (i + 1)
    }

    pub fn controller(&self, i: usize) -> Range<usize> {
        self.ctrl_start[i]..self.ctrl_start[i] + ControllerState::packed_len(self.n_params[i], self.dim)
    }

    pub fn kappa_index(&self, i: usize) -> usize {
        self.controller(i).end - 1
    }

    pub fn pack(&self, s: &FormationState) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        out[self.leader()].copy_from_slice(&s.leader);
        for i in 0..self.n_agents {
            out[self.plant(i)].copy_from_slice(&s.plants[i]);
            s.estimators[i].pack_into(&mut out[self.estimator(i)]);
            s.controllers[i].pack_into(&mut out[self.controller(i)]);
        }
        out
    }

    pub fn unpack(&self, x: &[f64]) -> FormationState {
        let (m, n) = (self.order, self.dim);
        FormationState {
            leader: x[self.leader()].to_vec(),
            plants: (0..self.n_agents).map(|i| x[self.plant(i)].to_vec()).collect(),
            estimators: (0..self.n_agents).map(|i| EstimatorState::unpack(&x[self.estimator(i)], m, n)).collect(),
            controllers: (0..self.n_agents)
                .map(|i| ControllerState::unpack(&x[self.controller(i)], self.n_params[i], n))
                .collect(),
        }
    }

    fn agent_of(&self, index: usize) -> Option<usize> {
        (0..self.n_agents)
            .find(|&i| {
                self.plant(i).contains(&index) || self.estimator(i).contains(&index) || self.controller(i).contains(&index)
            })
            .map(|i| i + 1)
    }
}

/// Offsets of the manipulator closed loop: `[q, qdot]` per robot, then
/// estimators, then controllers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskLayout {
    pub n_agents: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskState {
    pub arms: Vec<ArmState>,
    pub estimators: Vec<EstimatorState>,
    pub controllers: Vec<TaskControllerState>,
}

impl TaskLayout {
    const EST: usize = 10;

    pub fn len(&self) -> usize {
        self.n_agents * (4 + Self::EST + TaskControllerState::PACKED_LEN)
    }

    pub fn is_empty(&self) -> bool {
        self.n_agents == 0
    }

    pub fn arm(&self, i: usize) -> Range<usize> {
        4 * i..4 * (i + 1)
    }

    pub fn estimator(&self, i: usize) -> Range<usize> {
        let base = 4 * self.n_agents;
        base + Self::EST * i..base + Self::EST * (i + 1)
    }

    pub fn controller(&self, i: usize) -> Range<usize> {
        let base = (4 + Self::EST) * self.n_agents;
        let w = TaskControllerState::PACKED_LEN;
        base + w * i..base + w * (i + 1)
    }

    pub fn kappa_index(&self, i: usize) -> usize {
        self.controller(i).start + 11
    }

    pub fn pack(&self, s: &TaskState) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for i in 0..self.n_agents {
            let a = self.arm(i).start;
            out[a..a + 2].copy_from_slice(s.arms[i].q.as_slice());
            out[a + 2..a + 4].copy_from_slice(s.arms[i].qdot.as_slice());
            s.estimators[i].pack_into(&mut out[self.estimator(i)]);
            s.controllers[i].pack_into(&mut out[self.controller(i)]);
        }
        out
    }

    pub fn unpack(&self, x: &[f64]) -> TaskState {
        TaskState {
            arms: (0..self.n_agents)
                .map(|i| {
                    let a = self.arm(i).start;
                    ArmState { q: Vector2::new(x[a], x[a + 1]), qdot: Vector2::new(x[a + 2], x[a + 3]) }
                })
                .collect(),
            estimators: (0..self.n_agents).map(|i| EstimatorState::unpack(&x[self.estimator(i)], 2, 2)).collect(),
            controllers: (0..self.n_agents).map(|i| TaskControllerState::unpack(&x[self.controller(i)])).collect(),
        }
    }

    fn agent_of(&self, index: usize) -> Option<usize> {
        (0..self.n_agents)
            .find(|&i| {
                self.arm(i).contains(&index) || self.estimator(i).contains(&index) || self.controller(i).contains(&index)
            })
            .map(|i| i + 1)
    }
}

fn vec_cols(cols: &mut Vec<String>, prefix: &str, name: &str, len: usize) {
    cols.extend((0..len).map(|k| format!("{prefix}.{name}[{k}]")));
}

fn formation_columns(lay: &FormationLayout) -> Vec<String> {
    let (m, n) = (lay.order, lay.dim);
    let mut cols = Vec::new();
    vec_cols(&mut cols, "agent0", "x", m * n);
    for i in 0..lay.n_agents {
        let p = format!("agent{}", i + 1);
        vec_cols(&mut cols, &p, "x", m * n);
        vec_cols(&mut cols, &p, "xhat", m * n);
        for name in ["eta", "xi", "rho"] {
            vec_cols(&mut cols, &p, name, n);
        }
        for stem in ["xtilde", "track", "ztilde"] {
            for k in 1..=m {
                vec_cols(&mut cols, &p, &format!("{stem}{k}"), n);
            }
        }
        for name in ["u", "ubar", "ua"] {
            vec_cols(&mut cols, &p, name, n);
        }
        for name in ["nussbaum", "gain", "kappa", "delta"] {
            cols.push(format!("{p}.{name}"));
        }
        vec_cols(&mut cols, &p, "theta_hat", lay.n_params[i]);
        vec_cols(&mut cols, &p, "eps_hat", n);
    }
    cols
}

/// Right-hand side of the formation loop; fills `log` with one trace row when given.
fn formation_eval(
    sc: &Scenario,
    spec: &FormationSpec,
    lay: &FormationLayout,
    t: f64,
    x: &[f64],
    dx: &mut [f64],
    mut log: Option<&mut Vec<f64>>,
) -> Result<(), String> {
    let (m, n) = (lay.order, lay.dim);
    let st = lay.unpack(x);
    let leader: Vec<DVector<f64>> = st.leader.chunks(n).map(DVector::from_column_slice).collect();
    let est = estimator_derivative(&st.estimators, &leader, &sc.graph, &sc.estimator_gains, sc.signum)
        .map_err(|e| e.to_string())?;
    let dl = leader_derivative(&st.leader, t, &spec.leader).map_err(|e| e.to_string())?;
    dx[lay.leader()].copy_from_slice(dl.as_slice());
    if let Some(log) = log.as_deref_mut() {
        log.extend_from_slice(&st.leader);
    }

    for i in 0..lay.n_agents {
        let xi = &st.plants[i];
        let gains = &spec.controller_gains[i];
        let ctrl = &st.controllers[i];
        let model = &spec.followers[i];
        let z = tracking_errors(xi, &st.estimators[i].xhat, &spec.offsets[i]);
        let be = backstepping_errors(&z, &est.corrections[i], &gains.kbar).map_err(|e| e.to_string())?;
        let f = model.regressor().eval(xi);
        let out = control_law(&be, &f, ctrl, gains, t);
        let rates = adaptation_derivatives(&be.ztilde[m - 1], &out, &f, gains);
        let ua = apply_fault(&out.u, t, &sc.faults[i]);
        let dxi = follower_derivative(xi, &ua, t, model).map_err(|e| e.to_string())?;
        dx[lay.plant(i)].copy_from_slice(dxi.as_slice());
        est.d[i].pack_into(&mut dx[lay.estimator(i)]);
        ControllerState { theta_hat: rates.theta_hat, eps_hat: rates.eps_hat, kappa: rates.kappa }
            .pack_into(&mut dx[lay.controller(i)]);

        if let Some(log) = log.as_deref_mut() {
            let e = &st.estimators[i];
            log.extend_from_slice(xi);
            for b in &e.xhat {
                log.extend_from_slice(b.as_slice());
            }
            for v in [&e.eta, &e.xi, &e.rho] {
                log.extend_from_slice(v.as_slice());
            }
            for k in 0..m {
                log.extend((&e.xhat[k] - &leader[k]).iter());
            }
            for k in 0..m {
                let mut err = DVector::from_column_slice(&xi[k * n..(k + 1) * n]) - &leader[k];
                if k == 0 {
                    err -= &spec.offsets[i];
                }
                log.extend(err.iter());
            }
            for zt in &be.ztilde {
                log.extend_from_slice(zt.as_slice());
            }
            for v in [&out.u, &out.ubar, &ua] {
                log.extend_from_slice(v.as_slice());
            }
            log.extend([out.nussbaum, model.gain_at(xi), ctrl.kappa, gains.delta.at(t)]);
            log.extend_from_slice(ctrl.theta_hat.as_slice());
            log.extend_from_slice(ctrl.eps_hat.as_slice());
        }
    }
    Ok(())
}

fn task_columns(n_agents: usize) -> Vec<String> {
    let mut cols = Vec::new();
    vec_cols(&mut cols, "agent0", "xd", 2);
    vec_cols(&mut cols, "agent0", "xd_dot", 2);
    for i in 0..n_agents {
        let p = format!("agent{}", i + 1);
        for name in [
            "q", "qdot", "x", "xdot", "chi", "vartheta", "eta", "xi", "rho", "xtilde1", "xtilde2", "track1", "e_x",
            "s_x", "sx_integral", "s", "u", "tau",
        ] {
            vec_cols(&mut cols, &p, name, 2);
        }
        for name in ["nussbaum", "gain", "kappa"] {
            cols.push(format!("{p}.{name}"));
        }
        vec_cols(&mut cols, &p, "theta_hat", 5);
        vec_cols(&mut cols, &p, "a_hat", 4);
        vec_cols(&mut cols, &p, "eps_hat", 2);
        for name in ["sx_residual", "kinematic_residual", "loop_residual"] {
            vec_cols(&mut cols, &p, name, 2);
        }
        for name in ["loop_scale", "regularized"] {
            cols.push(format!("{p}.{name}"));
        }
    }
    cols
}

fn v2(v: &DVector<f64>) -> Vector2<f64> {
    Vector2::new(v[0], v[1])
}

fn task_eval(
    sc: &Scenario,
    spec: &TaskSpec,
    lay: &TaskLayout,
    t: f64,
    x: &[f64],
    dx: &mut [f64],
    mut log: Option<&mut Vec<f64>>,
) -> Result<(), String> {
    let st = lay.unpack(x);
    let xd = (spec.reference.position)(t);
    let xd_dot = (spec.reference.velocity)(t);
    let r0 = DVector::from_column_slice(xd.as_slice());
    let r1 = DVector::from_column_slice(xd_dot.as_slice());
    let est = task_estimator_derivative(&st.estimators, (&r0, &r1), &sc.graph, &sc.estimator_gains, sc.signum)
        .map_err(|e| e.to_string())?;
    if let Some(log) = log.as_deref_mut() {
        log.extend(xd.iter().chain(xd_dot.iter()));
    }

    for i in 0..lay.n_agents {
        let robot = &spec.robots[i];
        let gains = &spec.gains[i];
        let arm = &st.arms[i];
        let ctrl = &st.controllers[i];
        let e = &st.estimators[i];
        let de = &est.d[i];
        let ee = forward_kinematics(&arm.q, &robot.params);
        let ee_dot = jacobian(&arm.q, &robot.params) * arm.qdot;
        let sig = TaskSignals {
            q: arm.q,
            qdot: arm.qdot,
            x: ee,
            xdot: ee_dot,
            chi: v2(&e.xhat[0]),
            vartheta: v2(&e.xhat[1]),
            chi_dot: v2(&de.xhat[0]),
            vartheta_dot: v2(&de.xhat[1]),
        };
        let step = task_controller_step(&sig, ctrl, gains, t);
        let gain = (robot.gain)(t);
        let dist = (robot.disturbance)(t);
        let (qd, qdd) =
            arm_derivative(arm, &step.control.tau, t, &robot.params, &sc.faults[i], gain, &dist).map_err(|e| e.to_string())?;
        let a = lay.arm(i).start;
        dx[a..a + 2].copy_from_slice(qd.as_slice());
        dx[a + 2..a + 4].copy_from_slice(qdd.as_slice());
        de.pack_into(&mut dx[lay.estimator(i)]);
        step.rates.pack_into(&mut dx[lay.controller(i)]);

        if let Some(log) = log.as_deref_mut() {
            let r = &step.reference;
            let (phi, psi) = sc.faults[i].coefficients(t);
            let psi = psi.map_or(Vector2::zeros(), |p| v2(&p));
            let dyn_m = dynamics_matrices(arm, &robot.params);
            let truth = ClosedLoopTruth {
                m: dyn_m.m,
                c: dyn_m.c,
                qddot: qdd,
                b: gain * phi,
                d: psi * gain - friction(&arm.qdot, &robot.params) + dist,
                theta: theta_vector(&robot.params),
            };
            let kin_res = kinematic_relation_residual(&step, ctrl, gains, &robot.params.kinematic_params());
            let loop_res = closed_loop_residual(&step, ctrl, gains, &truth);
            let sx_def = r.sliding.s_x - (r.sliding.e_v + r.sliding.e_x * gains.alpha_x);
            // magnitude of the largest term of the sliding dynamics
            let s_dot = qdd - r.qr_ddot;
            let scale = [
                (truth.m * s_dot).amax(),
                (truth.c * r.s).amax(),
                (step.control.u * (truth.b * step.control.nussbaum)).amax(),
                step.control.u.amax(),
                (r.j_hat.transpose() * gains.k_s * r.j_hat * r.s).amax(),
                (step.y * ctrl.theta_hat).amax(),
                (step.y * truth.theta).amax(),
                truth.d.amax(),
                step.control.s_delta.component_mul(&ctrl.eps_hat).amax(),
            ]
            .into_iter()
            .fold(0.0, f64::max);

            for v in [
                arm.q,
                arm.qdot,
                ee,
                ee_dot,
                sig.chi,
                sig.vartheta,
                v2(&e.eta),
                v2(&e.xi),
                v2(&e.rho),
                sig.chi - xd,
                sig.vartheta - xd_dot,
                ee - xd,
                r.sliding.e_x,
                r.sliding.s_x,
                ctrl.sx_integral,
                r.s,
                step.control.u,
                step.control.tau,
            ] {
                log.extend_from_slice(v.as_slice());
            }
            log.extend([step.control.nussbaum, gain, ctrl.kappa]);
            log.extend_from_slice(ctrl.theta_hat.as_slice());
            log.extend_from_slice(ctrl.a_hat.as_slice());
            log.extend_from_slice(ctrl.eps_hat.as_slice());
            for v in [sx_def, kin_res, loop_res] {
                log.extend_from_slice(v.as_slice());
            }
            log.extend([scale, if r.pinv.regularized { 1.0 } else { 0.0 }]);
        }
    }
    Ok(())
}

/// Fixed-step loop with guard checks after every step and a trace row every
/// `decimation` steps.
fn drive<F>(
    cfg: &IntegratorConfig,
    guard: &DivergenceGuard,
    columns: Vec<String>,
    x0: Vec<f64>,
    kappa_idx: &[usize],
    agent_of: impl Fn(usize) -> Option<usize>,
    eval: F,
) -> (SimTrace, Option<Divergence>)
where
    F: Fn(f64, &[f64], &mut [f64], Option<&mut Vec<f64>>) -> Result<(), String>,
{
    let mut trace = SimTrace::new(columns);
    let mut x = x0;
    let mut scratch = vec![0.0; x.len()];
    let mut row = Vec::with_capacity(trace.columns.len());

    let mut observe = |t: f64, x: &[f64], trace: &mut SimTrace| -> Option<Divergence> {
        row.clear();
        if let Err(reason) = eval(t, x, &mut scratch, Some(&mut row)) {
            return Some(Divergence { t, agent: None, reason });
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Some(Divergence { t, agent: None, reason: format!("channel `{}` non-finite", trace.columns[j]) });
        }
        trace.push(t, row.clone());
        None
    };
    let check = |t: f64, x: &[f64]| -> Option<Divergence> {
        if let Some(j) = x.iter().position(|v| !(v.abs() <= guard.max_abs_state)) {
            return Some(Divergence {
                t,
                agent: agent_of(j),
                reason: format!("state entry {j} = {:e} exceeds {:e}", x[j], guard.max_abs_state),
            });
        }
        kappa_idx.iter().enumerate().find(|(_, &j)| x[j].abs() > guard.max_kappa).map(|(i, &j)| Divergence {
            t,
            agent: Some(i + 1),
            reason: format!("|kappa| = {:.4} exceeds {}", x[j].abs(), guard.max_kappa),
        })
    };

    if let Some(d) = check(0.0, &x).or_else(|| observe(0.0, &x, &mut trace)) {
        trace.divergence = Some(d.t);
        return (trace, Some(d));
    }
    let n = cfg.n_steps();
    let mut stepper = Stepper::new(cfg.scheme, x.len());
    let failure: Cell<Option<String>> = Cell::new(None);
    let mut rhs = |t: f64, x: &[f64], dx: &mut [f64]| {
        if let Err(e) = eval(t, x, dx, None) {
            let first = failure.take().unwrap_or(e);
            failure.set(Some(first));
            dx.fill(f64::NAN);
        }
    };
    for k in 0..n {
        stepper.advance(&mut rhs, cfg.time(k), &mut x, cfg.step);
        let t = cfg.time(k + 1);
        let mut cut = check(t, &x);
        if let (Some(d), Some(reason)) = (cut.as_mut(), failure.take()) {
            d.reason = reason;
        }
        if cut.is_none() && ((k + 1) % cfg.decimation == 0 || k + 1 == n) {
            cut = observe(t, &x, &mut trace);
        }
        if let Some(d) = cut {
            trace.divergence = Some(d.t);
            return (trace, Some(d));
        }
    }
    (trace, None)
}

fn finish(sc: &Scenario, trace: SimTrace, divergence: Option<Divergence>) -> RunResult {
    let metrics = compute_metrics(&trace, &sc.tolerances);
    let status = if divergence.is_some() { RunStatus::Diverged } else { metrics.status() };
    RunResult { trace, metrics, status, divergence }
}

/// Simulate the closed loop of a validated scenario. Identical inputs give
/// bit-identical traces.
pub fn run(sc: &Scenario) -> Result<RunResult, ScenarioError> {
    sc.validate()?;
    let (trace, divergence) = match &sc.kind {
        ScenarioKind::Formation(spec) => {
            let lay = FormationLayout::of(spec);
            let x0 = lay.pack(&FormationState {
                leader: spec.leader_x0.clone(),
                plants: spec.x0.clone(),
                estimators: spec.estimator0.clone(),
                controllers: spec.controller0.clone(),
            });
            let kappa: Vec<usize> = (0..lay.n_agents).map(|i| lay.kappa_index(i)).collect();
            drive(
                &sc.integrator,
                &sc.guard,
                formation_columns(&lay),
                x0,
                &kappa,
                |j| lay.agent_of(j),
                |t, x, dx, log| formation_eval(sc, spec, &lay, t, x, dx, log),
            )
        }
        ScenarioKind::Task(spec) => {
            let lay = TaskLayout { n_agents: spec.robots.len() };
            let x0 = lay.pack(&TaskState {
                arms: spec.robots.iter().map(|r| r.initial).collect(),
                estimators: spec.estimator0.clone(),
                controllers: spec.robots.iter().map(|r| TaskControllerState::new(r.a_hat0)).collect(),
            });
            let kappa: Vec<usize> = (0..lay.n_agents).map(|i| lay.kappa_index(i)).collect();
            drive(
                &sc.integrator,
                &sc.guard,
                task_columns(lay.n_agents),
                x0,
                &kappa,
                |j| lay.agent_of(j),
                |t, x, dx, log| task_eval(sc, spec, &lay, t, x, dx, log),
            )
        }
    };
    Ok(finish(sc, trace, divergence))
}

/// Run independent scenarios concurrently, one thread each; results keep the input order.
pub fn sweep(scenarios: &[Scenario]) -> Vec<Result<RunResult, ScenarioError>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = scenarios.iter().map(|sc| s.spawn(move || run(sc))).collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DVector, Vector4};
    use proptest::prelude::*;

    fn dv(v: Vec<f64>) -> DVector<f64> {
        DVector::from_vec(v)
    }

    proptest! {
        #[test]
        fn formation_pack_round_trip(
            data in proptest::collection::vec(-1e3..1e3f64, 4 + 3 * 4 + 3 * 10 + 3 * 5),
            ) {
            let lay = FormationLayout::new(2, 2, vec![2, 2, 2]);
            prop_assert_eq!(lay.len(), data.len());
            let s = lay.unpack(&data);
            prop_assert_eq!(lay.pack(&s), data.clone());
            prop_assert_eq!(lay.unpack(&lay.pack(&s)), s);
        }

        #[test]
        fn task_pack_round_trip(data in proptest::collection::vec(-1e3..1e3f64, 2 * 28)) {
            let lay = TaskLayout { n_agents: 2 };
            prop_assert_eq!(lay.len(), data.len());
            let s = lay.unpack(&data);
            prop_assert_eq!(lay.pack(&s), data);
        }
    }

    #[test]
    fn layout_ranges_tile_the_state() {
        let lay = FormationLayout::new(3, 2, vec![4, 1]);
        let mut seen = vec![0u8; lay.len()];
        let mut ranges = vec![lay.leader()];
        for i in 0..2 {
            ranges.extend([lay.plant(i), lay.estimator(i), lay.controller(i)]);
        }
        for r in ranges {
            for j in r {
                seen[j] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert_eq!(lay.agent_of(lay.kappa_index(1)), Some(2));
        assert_eq!(lay.agent_of(0), None);

        let task = TaskLayout { n_agents: 3 };
        let s = TaskState {
            arms: vec![ArmState { q: Vector2::new(1.0, 2.0), qdot: Vector2::new(3.0, 4.0) }; 3],
            estimators: vec![EstimatorState::new(vec![dv(vec![1.0, 1.0]), dv(vec![2.0, 2.0])]); 3],
            controllers: vec![TaskControllerState { kappa: 7.5, ..TaskControllerState::new(Vector4::repeat(0.5)) }; 3],
        };
        let packed = task.pack(&s);
        assert_eq!(packed[task.kappa_index(2)], 7.5);
        assert_eq!(task.unpack(&packed), s);
    }
}
