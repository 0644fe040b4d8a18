use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DVector, Matrix2, Matrix4, Matrix5, Vector2};

use crate::controller::{ControllerGains, ControllerState};
use crate::estimator::{EstimatorGains, EstimatorState};
use crate::graph::{build_graph, DirectedLeaderGraph};
use crate::manipulator::{
    forward_kinematics, paper_arm_disturbance, paper_arm_gain, paper_arms, ArmParams, ArmState,
};
use crate::numerics::{IntegratorConfig, SignumPolicy};
use crate::plant::{paper_leader, paper_second_order, FaultProfile};
use crate::task_controller::TaskGains;

use super::{
    DivergenceGuard, FormationSpec, RobotSpec, Scenario, ScenarioError, ScenarioKind, TaskReference, TaskSpec,
    Tolerances,
};

pub const PRESET_NAMES: [&str; 2] = ["paper-5a", "paper-5b"];

pub fn preset(name: &str) -> Result<Scenario, ScenarioError> {
    match name {
        "paper-5a" => Ok(paper_5a()),
        "paper-5b" => Ok(paper_5b()),
        other => Err(ScenarioError::UnknownPreset(other.to_string())),
    }
}

/// Six followers in two pinned rings of three joined by one cross link.
pub fn six_agent_graph() -> DirectedLeaderGraph {
    let edges = [
        (1, 2, 1.0),
        (2, 3, 1.0),
        (3, 1, 1.0),
        (4, 5, 1.0),
        (5, 6, 1.0),
        (6, 4, 1.0),
        (2, 5, 1.0),
    ];
    build_graph(&edges, &[(1, 1.0), (4, 1.0)], 6).expect("static topology is valid")
}

/// Hexagon offsets, agent i at angle pi - (i - 1) pi / 3 on the unit circle.
pub fn hexagon_offsets() -> Vec<DVector<f64>> {
    let h = 3f64.sqrt() / 2.0;
    [(-1.0, 0.0), (-0.5, h), (0.5, h), (1.0, 0.0), (0.5, -h), (-0.5, -h)]
        .iter()
        .map(|&(a, b)| DVector::from_vec(vec![a, b]))
        .collect()
}

/// The formation study: six heterogeneous second-order followers.
pub fn paper_5a() -> Scenario {
    let n = 6;
    let positions = [(-0.3, -0.5), (-2.0, -1.6), (1.0, -3.0), (0.2, 0.8), (2.0, -1.5), (2.5, 1.8)];
    let offsets = hexagon_offsets();
    let x0: Vec<Vec<f64>> = positions.iter().map(|&(a, b)| vec![a, b, 0.0, 0.0]).collect();
    // each estimate starts at the agent's own formation-shifted position
    let estimator0 = x0
        .iter()
        .zip(&offsets)
        .map(|(x, d)| {
            let p = DVector::from_vec(vec![x[0], x[1]]) - d;
            EstimatorState::new(vec![p, DVector::zeros(2)])
        })
        .collect();
    Scenario {
        name: "paper-5a".into(),
        graph: six_agent_graph(),
        integrator: IntegratorConfig::default(),
        signum: SignumPolicy::default(),
        guard: DivergenceGuard::default(),
        tolerances: Tolerances::default(),
        estimator_gains: vec![EstimatorGains::paper_second_order(); n],
        faults: vec![FaultProfile::paper_schedule(); n],
        kind: ScenarioKind::Formation(FormationSpec {
            leader: paper_leader(),
            leader_x0: vec![0.0, -2.0, 1.0, 0.0],
            followers: (1..=n).map(paper_second_order).collect(),
            offsets,
            x0,
            estimator0,
            controller_gains: vec![ControllerGains::paper(2, 2); n],
            controller0: vec![ControllerState::zeros(2, 2); n],
        }),
    }
}

/// The circle `(1.2 + 0.5 sin 0.6t, 1.0 + 0.5 cos 0.6t)` and its derivatives.
pub fn circle_reference() -> TaskReference {
    TaskReference {
        position: Arc::new(|t| Vector2::new(1.2 + 0.5 * (0.6 * t).sin(), 1.0 + 0.5 * (0.6 * t).cos())),
        velocity: Arc::new(|t| Vector2::new(0.3 * (0.6 * t).cos(), -0.3 * (0.6 * t).sin())),
        acceleration: Arc::new(|t| Vector2::new(-0.18 * (0.6 * t).sin(), -0.18 * (0.6 * t).cos())),
    }
}

/// Elbow-up (q2 > 0) inverse kinematics of a unit-scaled arm; `None` out of reach.
pub fn inverse_kinematics(target: &Vector2<f64>, p: &ArmParams) -> Option<Vector2<f64>> {
    let (l1, l2) = (p.l1, p.l2);
    let c2 = (target.norm_squared() - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    if !(-1.0..=1.0).contains(&c2) {
        return None;
    }
    let q2 = c2.acos();
    let q1 = target[1].atan2(target[0]) - (l2 * q2.sin()).atan2(l1 + l2 * c2);
    Some(Vector2::new(q1, q2))
}

/// Task-space gains used by `paper-5b`.
///
/// The control coefficients dip to about 1% of their peak twice per period, so
/// the loop needs a stiff velocity gain, fast dynamic and kinematic adaptation
/// and a slowly moving Nussbaum argument. The stiffness forces a 1e-5 step.
pub fn coordination_gains() -> TaskGains {
    TaskGains {
        k_s: Matrix2::identity() * 500.0,
        k_kappa: 1e-3,
        gamma_theta: Matrix5::identity() * 1000.0,
        gamma_eps: Matrix2::identity() * 10.0,
        lambda: Matrix4::identity() * 30.0,
        ..TaskGains::default()
    }
}

/// Six heterogeneous arms tracking the circle in a hexagon.
pub fn paper_5b() -> Scenario {
    let n = 6;
    let reference = circle_reference();
    let start = (reference.position)(0.0);
    let robots: Vec<RobotSpec> = paper_arms()
        .into_iter()
        .enumerate()
        .map(|(k, params)| {
            let i = k + 1;
            let angle = 2.0 * PI * i as f64 / 6.0;
            let target = start + Vector2::new(angle.cos(), angle.sin()) * 0.4;
            let q = inverse_kinematics(&target, &params).expect("start points are reachable");
            RobotSpec {
                a_hat0: params.kinematic_params() * 0.8,
                gain: Arc::new(move |t| paper_arm_gain(i, t)),
                disturbance: Arc::new(move |t| paper_arm_disturbance(i, t)),
                initial: ArmState { q, qdot: Vector2::zeros() },
                params,
            }
        })
        .collect();
    let estimator0 = robots
        .iter()
        .map(|r| {
            let x = forward_kinematics(&r.initial.q, &r.params);
            EstimatorState::new(vec![DVector::from_column_slice(x.as_slice()), DVector::zeros(2)])
        })
        .collect();
    Scenario {
        name: "paper-5b".into(),
        graph: six_agent_graph(),
        integrator: IntegratorConfig { step: 1e-5, decimation: 100, ..IntegratorConfig::default() },
        signum: SignumPolicy::default(),
        guard: DivergenceGuard::default(),
        tolerances: Tolerances::default(),
        estimator_gains: vec![EstimatorGains::paper_second_order(); n],
        faults: vec![FaultProfile::paper_schedule(); n],
        kind: ScenarioKind::Task(TaskSpec { reference, robots, estimator0, gains: vec![coordination_gains(); n] }),
    }
}
