//! TOML scenario files.
//!
//! A file either starts from a built-in preset (`base = "paper-5a"`) and
//! overrides the run-level sections, or declares a complete formation or
//! manipulator study. Time-varying entries are expression strings over `t`
//! (and `x1..x{mn}` for state-dependent follower terms).

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Vector2};
use serde::Deserialize;

use crate::controller::{ControllerGains, ControllerState, DeltaSchedule};
use crate::estimator::{EstimatorGains, EstimatorState};
use crate::expr::Expr;
use crate::graph::build_graph;
use crate::manipulator::{forward_kinematics, ArmParams, ArmState, GRAVITY};
use crate::numerics::{IntegratorConfig, Scheme, SignumPolicy};
use crate::plant::{FaultProfile, FaultSegment, FollowerModel, LeaderModel};
use crate::task_controller::{Matrix5, TaskGains, VelocitySource};

use super::presets::preset;
use super::{
    DivergenceGuard, FormationSpec, RobotSpec, Scenario, ScenarioError, ScenarioKind, TaskReference, TaskSpec,
    TimeVec2Fn, Tolerances,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    name: Option<String>,
    base: Option<String>,
    kind: Option<String>,
    integrator: Option<IntegratorSection>,
    signum: Option<SignumSection>,
    guard: Option<GuardSection>,
    tolerances: Option<TolSection>,
    graph: Option<GraphSection>,
    estimator: Option<EstimatorSection>,
    faults: Option<FaultSection>,
    leader: Option<LeaderSection>,
    #[serde(default)]
    agent: Vec<AgentSection>,
    reference: Option<ReferenceSection>,
    task_gains: Option<TaskGainSection>,
    #[serde(default)]
    robot: Vec<RobotSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntegratorSection {
    step: Option<f64>,
    scheme: Option<String>,
    t_end: Option<f64>,
    decimation: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignumSection {
    policy: String,
    epsilon: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GuardSection {
    max_abs_state: Option<f64>,
    max_kappa: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TolSection {
    estimator: Option<f64>,
    tracking: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphSection {
    n: usize,
    #[serde(default)]
    edges: Vec<(usize, usize, f64)>,
    leader: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimatorSection {
    kappa: Vec<f64>,
    kappa_eta: f64,
    kappa_xi: f64,
    kappa_rho: f64,
    #[serde(default = "default_exponent")]
    alpha: f64,
    #[serde(default = "default_exponent")]
    beta: f64,
    #[serde(default = "default_exponent")]
    gamma: f64,
    /// `own-state` or `zero`.
    init: Option<String>,
}

fn default_exponent() -> f64 {
    0.7
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FaultSection {
    /// `paper` or `healthy`; mutually exclusive with `segment`.
    schedule: Option<String>,
    #[serde(default)]
    segment: Vec<SegmentSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentSection {
    start: f64,
    phi: String,
    psi: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeaderSection {
    order: usize,
    dim: usize,
    x0: Vec<f64>,
    input: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentSection {
    x0: Vec<f64>,
    offset: Vec<f64>,
    theta: Vec<f64>,
    /// r rows of n expressions in the state.
    regressor: Vec<Vec<String>>,
    gain: String,
    disturbance: Vec<String>,
    controller: ControllerSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllerSection {
    kbar: Vec<f64>,
    k_kappa: f64,
    gamma_theta: f64,
    gamma_eps: f64,
    #[serde(default = "default_delta0")]
    delta0: f64,
    #[serde(default = "default_decay")]
    delta_decay: f64,
    #[serde(default)]
    kappa0: f64,
}

fn default_delta0() -> f64 {
    0.05
}

fn default_decay() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceSection {
    position: Vec<String>,
    velocity: Vec<String>,
    acceleration: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskGainSection {
    alpha_x: Option<f64>,
    alpha_r: Option<f64>,
    k_s: Option<f64>,
    k_kappa: Option<f64>,
    gamma_theta: Option<f64>,
    gamma_eps: Option<f64>,
    lambda: Option<f64>,
    delta0: Option<f64>,
    delta_decay: Option<f64>,
    /// `measured` or `estimated`.
    velocity_source: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotSection {
    m1: f64,
    m2: f64,
    i1: f64,
    i2: f64,
    l1: f64,
    l2: f64,
    lc1: f64,
    lc2: f64,
    #[serde(default = "one")]
    v1: f64,
    #[serde(default = "one")]
    v2: f64,
    #[serde(default = "gravity")]
    gravity: f64,
    q0: [f64; 2],
    #[serde(default)]
    qdot0: [f64; 2],
    gain: String,
    disturbance: Vec<String>,
    /// Initial kinematic estimate as a multiple of the true parameters.
    #[serde(default = "a_hat_scale")]
    a_hat_scale: f64,
}

fn one() -> f64 {
    1.0
}

fn gravity() -> f64 {
    GRAVITY
}

fn a_hat_scale() -> f64 {
    0.8
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    parse_scenario(&text, &path.display().to_string())
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, col)
}

/// Parse and validate scenario text; `origin` labels diagnostics.
pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario, ScenarioError> {
    let file: File = toml::from_str(text).map_err(|e| {
        let (line, col) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        ScenarioError::Parse { path: origin.to_string(), line, col, msg: e.message().to_string() }
    })?;
    let sc = build(file)?;
    sc.validate()?;
    Ok(sc)
}

fn build(file: File) -> Result<Scenario, ScenarioError> {
    let mut sc = match &file.base {
        Some(name) => {
            let full = ["kind", "graph", "leader", "agent", "reference", "robot"];
            let present = [
                file.kind.is_some(),
                file.graph.is_some(),
                file.leader.is_some(),
                !file.agent.is_empty(),
                file.reference.is_some(),
                !file.robot.is_empty(),
            ];
            if let Some((field, _)) = full.iter().zip(present).find(|(_, p)| *p) {
                return Err(ScenarioError::invalid(*field, "cannot be redefined on top of a preset `base`"));
            }
            let mut sc = preset(name)?;
            if let Some(e) = &file.estimator {
                sc.estimator_gains = vec![estimator_gains(e)?; sc.n_agents()];
            }
            if let Some(tg) = &file.task_gains {
                if let ScenarioKind::Task(spec) = &mut sc.kind {
                    spec.gains = vec![task_gains(tg, &spec.gains[0])?; spec.robots.len()];
                } else {
                    return Err(ScenarioError::invalid("task_gains", "only valid for manipulator scenarios"));
                }
            }
            sc
        }
        None => full_scenario(&file)?,
    };
    if let Some(name) = file.name {
        sc.name = name;
    }
    if let Some(f) = &file.faults {
        sc.faults = vec![faults(f)?; sc.n_agents()];
    }
    if let Some(i) = file.integrator {
        if let Some(step) = i.step {
            sc = sc.with_step(step);
        }
        let cfg = &mut sc.integrator;
        if let Some(s) = i.scheme {
            cfg.scheme = s.parse::<Scheme>().map_err(|e| ScenarioError::invalid("integrator.scheme", e.to_string()))?;
        }
        if let Some(t) = i.t_end {
            cfg.t_end = t;
        }
        if let Some(d) = i.decimation {
            cfg.decimation = d;
        }
    }
    if let Some(s) = file.signum {
        sc.signum = match s.policy.as_str() {
            "exact" => SignumPolicy::Exact,
            "boundary-layer" => SignumPolicy::boundary_layer(s.epsilon.unwrap_or(1e-3))
                .map_err(|e| ScenarioError::invalid("signum.epsilon", e.to_string()))?,
            other => return Err(ScenarioError::invalid("signum.policy", format!("unknown policy `{other}`"))),
        };
    }
    if let Some(g) = file.guard {
        sc.guard.max_abs_state = g.max_abs_state.unwrap_or(sc.guard.max_abs_state);
        sc.guard.max_kappa = g.max_kappa.unwrap_or(sc.guard.max_kappa);
    }
    if let Some(t) = file.tolerances {
        sc.tolerances.estimator = t.estimator.unwrap_or(sc.tolerances.estimator);
        sc.tolerances.tracking = t.tracking.unwrap_or(sc.tolerances.tracking);
    }
    Ok(sc)
}

fn require<'a, T>(v: &'a Option<T>, field: &str) -> Result<&'a T, ScenarioError> {
    v.as_ref().ok_or_else(|| ScenarioError::invalid(field, "missing section"))
}

fn parse_expr(src: &str, vars: &[&str], field: &str) -> Result<Expr, ScenarioError> {
    Expr::parse(src, vars).map_err(|e| ScenarioError::invalid(field, e.to_string()))
}

fn time_exprs(srcs: &[String], len: usize, field: &str) -> Result<Vec<Expr>, ScenarioError> {
    if srcs.len() != len {
        return Err(ScenarioError::invalid(field, format!("expected {len} expressions, got {}", srcs.len())));
    }
    srcs.iter().map(|s| parse_expr(s, &["t"], field)).collect()
}

fn time_vec2(srcs: &[String], field: &str) -> Result<TimeVec2Fn, ScenarioError> {
    let e = time_exprs(srcs, 2, field)?;
    Ok(Arc::new(move |t| Vector2::new(e[0].eval(&[t]), e[1].eval(&[t]))))
}

fn estimator_gains(e: &EstimatorSection) -> Result<EstimatorGains, ScenarioError> {
    let g = EstimatorGains {
        kappa: e.kappa.clone(),
        kappa_eta: e.kappa_eta,
        kappa_xi: e.kappa_xi,
        kappa_rho: e.kappa_rho,
        alpha: e.alpha,
        beta: e.beta,
        gamma: e.gamma,
    };
    g.validate(e.kappa.len()).map_err(|err| ScenarioError::invalid("estimator", err.to_string()))?;
    Ok(g)
}

fn faults(f: &FaultSection) -> Result<FaultProfile, ScenarioError> {
    match (&f.schedule, f.segment.is_empty()) {
        (Some(_), false) => Err(ScenarioError::invalid("faults", "give either `schedule` or `segment`, not both")),
        (Some(s), true) => match s.as_str() {
            "paper" => Ok(FaultProfile::paper_schedule()),
            "healthy" => Ok(FaultProfile::healthy()),
            other => Err(ScenarioError::invalid("faults.schedule", format!("unknown schedule `{other}`"))),
        },
        (None, _) => {
            let segments = f
                .segment
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let field = format!("faults.segment[{k}]");
                    let phi = parse_expr(&s.phi, &["t"], &field)?;
                    let psi: Vec<Expr> =
                        s.psi.iter().map(|p| parse_expr(p, &["t"], &field)).collect::<Result<_, _>>()?;
                    Ok(FaultSegment {
                        start: s.start,
                        phi: Arc::new(move |t| phi.eval(&[t])),
                        psi: Arc::new(move |t| DVector::from_iterator(psi.len(), psi.iter().map(|e| e.eval(&[t])))),
                    })
                })
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            FaultProfile::new(segments).map_err(|e| ScenarioError::invalid("faults", e.to_string()))
        }
    }
}

/// Keys left out keep their value in `d`.
fn task_gains(s: &TaskGainSection, d: &TaskGains) -> Result<TaskGains, ScenarioError> {
    let velocity_source = match s.velocity_source.as_deref() {
        None => d.velocity_source,
        Some("measured") => VelocitySource::Measured,
        Some("estimated") => VelocitySource::Estimated,
        Some(other) => {
            return Err(ScenarioError::invalid("task_gains.velocity_source", format!("unknown source `{other}`")))
        }
    };
    let g = TaskGains {
        alpha_x: s.alpha_x.unwrap_or(d.alpha_x),
        alpha_r: s.alpha_r.unwrap_or(d.alpha_r),
        k_s: s.k_s.map_or(d.k_s, |k| Matrix2::identity() * k),
        k_kappa: s.k_kappa.unwrap_or(d.k_kappa),
        gamma_theta: s.gamma_theta.map_or(d.gamma_theta, |k| Matrix5::identity() * k),
        gamma_eps: s.gamma_eps.map_or(d.gamma_eps, |k| Matrix2::identity() * k),
        lambda: s.lambda.map_or(d.lambda, |k| Matrix4::identity() * k),
        delta: DeltaSchedule {
            delta0: s.delta0.unwrap_or(d.delta.delta0),
            decay: s.delta_decay.unwrap_or(d.delta.decay),
        },
        gravity: d.gravity,
        velocity_source,
    };
    g.validate().map_err(|e| ScenarioError::invalid("task_gains", e.to_string()))?;
    Ok(g)
}

fn full_scenario(file: &File) -> Result<Scenario, ScenarioError> {
    let kind = require(&file.kind, "kind")?;
    let g = require(&file.graph, "graph")?;
    let graph = build_graph(&g.edges, &g.leader, g.n)?;
    let est = require(&file.estimator, "estimator")?;
    let gains = estimator_gains(est)?;
    let n_agents = match kind.as_str() {
        "formation" => file.agent.len(),
        "task" => file.robot.len(),
        other => return Err(ScenarioError::invalid("kind", format!("expected `formation` or `task`, got `{other}`"))),
    };
    let own_state = match est.init.as_deref() {
        None | Some("own-state") => true,
        Some("zero") => false,
        Some(other) => return Err(ScenarioError::invalid("estimator.init", format!("unknown init `{other}`"))),
    };
    let kind = if kind == "formation" { formation(file, own_state)? } else { task(file, own_state)? };
    Ok(Scenario {
        name: file.name.clone().unwrap_or_else(|| "scenario".into()),
        graph,
        integrator: IntegratorConfig::default(),
        signum: SignumPolicy::default(),
        guard: DivergenceGuard::default(),
        tolerances: Tolerances::default(),
        estimator_gains: vec![gains; n_agents],
        faults: vec![FaultProfile::healthy(); n_agents],
        kind,
    })
}

fn formation(file: &File, own_state: bool) -> Result<ScenarioKind, ScenarioError> {
    let l = require(&file.leader, "leader")?;
    let (m, n) = (l.order, l.dim);
    if m < 2 || n == 0 {
        return Err(ScenarioError::invalid("leader.order", "order >= 2 and dim >= 1 required"));
    }
    let xs: Vec<String> = (1..=m * n).map(|k| format!("x{k}")).collect();
    let mut vars: Vec<&str> = vec!["t"];
    vars.extend(xs.iter().map(String::as_str));
    let state_vars = &vars[1..];

    let input = l.input.iter().map(|s| parse_expr(s, &vars, "leader.input")).collect::<Result<Vec<_>, _>>()?;
    if input.len() != n {
        return Err(ScenarioError::invalid("leader.input", format!("expected {n} expressions")));
    }
    let leader = LeaderModel::new(
        m,
        n,
        Arc::new(move |x: &[f64], t: f64| {
            let slots: Vec<f64> = std::iter::once(t).chain(x.iter().copied()).collect();
            DVector::from_iterator(input.len(), input.iter().map(|e| e.eval(&slots)))
        }),
    )
    .map_err(|e| ScenarioError::invalid("leader", e.to_string()))?;

    let mut spec = FormationSpec {
        leader,
        leader_x0: l.x0.clone(),
        followers: Vec::new(),
        offsets: Vec::new(),
        x0: Vec::new(),
        estimator0: Vec::new(),
        controller_gains: Vec::new(),
        controller0: Vec::new(),
    };
    for (k, a) in file.agent.iter().enumerate() {
        let field = |f: &str| format!("agent[{}].{f}", k + 1);
        let r = a.theta.len();
        if a.regressor.len() != r || a.regressor.iter().any(|row| row.len() != n) {
            return Err(ScenarioError::invalid(field("regressor"), format!("expected {r} rows of {n} expressions")));
        }
        let reg: Vec<Expr> = a
            .regressor
            .iter()
            .flatten()
            .map(|s| parse_expr(s, state_vars, &field("regressor")))
            .collect::<Result<_, _>>()?;
        let gain = parse_expr(&a.gain, state_vars, &field("gain"))?;
        let dist: Vec<Expr> =
            a.disturbance.iter().map(|s| parse_expr(s, &vars, &field("disturbance"))).collect::<Result<_, _>>()?;
        if dist.len() != n {
            return Err(ScenarioError::invalid(field("disturbance"), format!("expected {n} expressions")));
        }
        let model = FollowerModel::new(
            m,
            n,
            DVector::from_vec(a.theta.clone()),
            Arc::new(move |x: &[f64]| DMatrix::from_iterator(n, r, reg.iter().map(|e| e.eval(x))).transpose()),
            Arc::new(move |x: &[f64]| gain.eval(x)),
            Arc::new(move |x: &[f64], t: f64| {
                let slots: Vec<f64> = std::iter::once(t).chain(x.iter().copied()).collect();
                DVector::from_iterator(dist.len(), dist.iter().map(|e| e.eval(&slots)))
            }),
        )
        .map_err(|e| ScenarioError::invalid(field("model"), e.to_string()))?;
        if a.offset.len() != n || a.x0.len() != m * n {
            return Err(ScenarioError::invalid(field("x0"), format!("x0 needs {} and offset {n} values", m * n)));
        }
        let offset = DVector::from_vec(a.offset.clone());
        let mut xhat = vec![DVector::zeros(n); m];
        if own_state {
            xhat[0] = DVector::from_column_slice(&a.x0[..n]) - &offset;
        }
        let c = &a.controller;
        spec.controller_gains.push(ControllerGains {
            kbar: c.kbar.clone(),
            k_kappa: c.k_kappa,
            gamma_theta: DMatrix::identity(r, r) * c.gamma_theta,
            gamma_eps: DMatrix::identity(n, n) * c.gamma_eps,
            delta: DeltaSchedule { delta0: c.delta0, decay: c.delta_decay },
        });
        spec.controller0.push(ControllerState { kappa: c.kappa0, ..ControllerState::zeros(r, n) });
        spec.estimator0.push(EstimatorState::new(xhat));
        spec.followers.push(model);
        spec.offsets.push(offset);
        spec.x0.push(a.x0.clone());
    }
    Ok(ScenarioKind::Formation(spec))
}

fn task(file: &File, own_state: bool) -> Result<ScenarioKind, ScenarioError> {
    let r = require(&file.reference, "reference")?;
    let reference = TaskReference {
        position: time_vec2(&r.position, "reference.position")?,
        velocity: time_vec2(&r.velocity, "reference.velocity")?,
        acceleration: time_vec2(&r.acceleration, "reference.acceleration")?,
    };
    let gains = match &file.task_gains {
        Some(s) => task_gains(s, &TaskGains::default())?,
        None => TaskGains::default(),
    };
    let mut robots = Vec::new();
    let mut estimator0 = Vec::new();
    for (k, s) in file.robot.iter().enumerate() {
        let field = |f: &str| format!("robot[{}].{f}", k + 1);
        let params = ArmParams {
            v1: s.v1,
            v2: s.v2,
            grav: s.gravity,
            ..ArmParams::new(s.m1, s.m2, s.i1, s.i2, s.l1, s.l2, s.lc1, s.lc2)
                .map_err(|e| ScenarioError::invalid(field("params"), e.to_string()))?
        };
        params.validate().map_err(|e| ScenarioError::invalid(field("params"), e.to_string()))?;
        let gain = parse_expr(&s.gain, &["t"], &field("gain"))?;
        let initial = ArmState { q: Vector2::from(s.q0), qdot: Vector2::from(s.qdot0) };
        let chi = if own_state { forward_kinematics(&initial.q, &params) } else { Vector2::zeros() };
        estimator0.push(EstimatorState::new(vec![
            DVector::from_column_slice(chi.as_slice()),
            DVector::zeros(2),
        ]));
        robots.push(RobotSpec {
            a_hat0: params.kinematic_params() * s.a_hat_scale,
            gain: Arc::new(move |t| gain.eval(&[t])),
            disturbance: time_vec2(&s.disturbance, &field("disturbance"))?,
            initial,
            params,
        });
    }
    let n = robots.len();
    // gravity assumed by the regressor follows the first arm's declaration
    let gravity = robots.first().map_or(GRAVITY, |r| r.params.grav);
    Ok(ScenarioKind::Task(TaskSpec {
        reference,
        robots,
        estimator0,
        gains: vec![TaskGains { gravity, ..gains }; n],
    }))
}
