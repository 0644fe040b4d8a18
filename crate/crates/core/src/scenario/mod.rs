//! Scenario declaration, closed-loop simulation, traces and metrics.

mod format;
mod metrics;
mod plots;
mod presets;
mod sim;
mod trace;

use std::sync::Arc;

use nalgebra::{DVector, Vector2, Vector4};
use thiserror::Error;

use crate::controller::{ControllerGains, ControllerState};
use crate::estimator::{EstimatorGains, EstimatorState};
use crate::graph::{DirectedLeaderGraph, GraphError};
use crate::manipulator::{ArmParams, ArmState};
use crate::numerics::{IntegratorConfig, SignumPolicy};
use crate::plant::{FaultProfile, FollowerModel, LeaderModel, TimeFn};
use crate::task_controller::TaskGains;

pub use format::{load_scenario, parse_scenario};
pub use metrics::{compute_metrics, AgentMetrics, ErrorSummary, Metrics, RunStatus, Tolerances};
pub use plots::export_plots;
pub use presets::{coordination_gains, paper_5a, paper_5b, preset, PRESET_NAMES};
pub use sim::{run, sweep, Divergence, FormationLayout, FormationState, RunResult, TaskLayout, TaskState};
pub use trace::{export_csv, read_csv, SimTrace};

pub type TimeVec2Fn = Arc<dyn Fn(f64) -> Vector2<f64> + Send + Sync>;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: parse error at line {line}, column {col}: {msg}")]
    Parse { path: String, line: usize, col: usize, msg: String },
    #[error("invalid scenario field `{field}`: {msg}")]
    Validation { field: String, msg: String },
    #[error("unknown preset `{0}` (available: paper-5a, paper-5b)")]
    UnknownPreset(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("trace: {0}")]
    Trace(String),
    #[error("refusing to overwrite existing `{0}` (pass --force)")]
    Exists(String),
    #[error("plot: {0}")]
    Plot(String),
}

impl ScenarioError {
    pub(crate) fn invalid(field: impl Into<String>, msg: impl Into<String>) -> Self {
        ScenarioError::Validation { field: field.into(), msg: msg.into() }
    }
}

/// Abort thresholds checked after every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceGuard {
    pub max_abs_state: f64,
    pub max_kappa: f64,
}

impl Default for DivergenceGuard {
    fn default() -> Self {
        DivergenceGuard { max_abs_state: 1e8, max_kappa: 25.0 }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub graph: DirectedLeaderGraph,
    pub integrator: IntegratorConfig,
    pub signum: SignumPolicy,
    pub guard: DivergenceGuard,
    pub tolerances: Tolerances,
    pub estimator_gains: Vec<EstimatorGains>,
    /// Per-agent actuator fault schedules.
    pub faults: Vec<FaultProfile>,
    pub kind: ScenarioKind,
}

#[derive(Debug, Clone)]
pub enum ScenarioKind {
    Formation(FormationSpec),
    Task(TaskSpec),
}

/// Generic m-th order followers tracking a leader with formation offsets.
#[derive(Debug, Clone)]
pub struct FormationSpec {
    pub leader: LeaderModel,
    pub leader_x0: Vec<f64>,
    pub followers: Vec<FollowerModel>,
    pub offsets: Vec<DVector<f64>>,
    pub x0: Vec<Vec<f64>>,
    pub estimator0: Vec<EstimatorState>,
    pub controller_gains: Vec<ControllerGains>,
    pub controller0: Vec<ControllerState>,
}

/// Reference trajectory with the derivatives the harness needs.
#[derive(Clone)]
pub struct TaskReference {
    pub position: TimeVec2Fn,
    pub velocity: TimeVec2Fn,
    pub acceleration: TimeVec2Fn,
}

impl std::fmt::Debug for TaskReference {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("TaskReference(..)")
    }
}

#[derive(Clone)]
pub struct RobotSpec {
    pub params: ArmParams,
    pub gain: TimeFn,
    pub disturbance: TimeVec2Fn,
    pub initial: ArmState,
    pub a_hat0: Vector4<f64>,
}

impl std::fmt::Debug for RobotSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RobotSpec").field("params", &self.params).field("initial", &self.initial).finish()
    }
}

/// Networked manipulators tracking a task-space reference.
#[derive(Debug, Clone)]
pub struct TaskSpec {
    pub reference: TaskReference,
    pub robots: Vec<RobotSpec>,
    pub estimator0: Vec<EstimatorState>,
    pub gains: Vec<TaskGains>,
}

impl Scenario {
    pub fn n_agents(&self) -> usize {
        self.graph.n_followers()
    }

    /// Cross-section consistency checks.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let n = self.n_agents();
        self.integrator.validate().map_err(|e| ScenarioError::invalid("integrator", e.to_string()))?;
        crate::graph::certificate(&self.graph)?;
        let count = |field: &str, got: usize| {
            if got == n {
                Ok(())
            } else {
                Err(ScenarioError::invalid(field, format!("{got} entries for {n} agents")))
            }
        };
        count("estimator", self.estimator_gains.len())?;
        count("faults", self.faults.len())?;
        for f in &self.faults {
            f.check_effectiveness(0.0, self.integrator.t_end, 1e-2)
                .map_err(|e| ScenarioError::invalid("faults", e.to_string()))?;
        }
        match &self.kind {
            ScenarioKind::Formation(s) => {
                count("agents", s.followers.len())?;
                count("offsets", s.offsets.len())?;
                count("initial states", s.x0.len())?;
                count("estimator initial states", s.estimator0.len())?;
                count("controller gains", s.controller_gains.len())?;
                count("controller initial states", s.controller0.len())?;
                let (m, dim) = (s.leader.order(), s.leader.dim());
                if s.leader_x0.len() != m * dim {
                    return Err(ScenarioError::invalid("leader.x0", format!("expected {} values", m * dim)));
                }
                for (i, f) in s.followers.iter().enumerate() {
                    let field = |name: &str| format!("agent[{}].{name}", i + 1);
                    if f.order() != m || f.dim() != dim {
                        return Err(ScenarioError::invalid(field("order"), "must match the leader"));
                    }
                    if s.offsets[i].len() != dim {
                        return Err(ScenarioError::invalid(field("offset"), format!("expected {dim} values")));
                    }
                    if s.x0[i].len() != m * dim {
                        return Err(ScenarioError::invalid(field("x0"), format!("expected {} values", m * dim)));
                    }
                    let e = &s.estimator0[i];
                    if e.order() != m || e.dim() != dim {
                        return Err(ScenarioError::invalid(field("estimator"), "initial estimate shape"));
                    }
                    self.estimator_gains[i]
                        .validate(m)
                        .map_err(|e| ScenarioError::invalid(field("estimator"), e.to_string()))?;
                    s.controller_gains[i]
                        .validate(m, f.n_params(), dim)
                        .map_err(|e| ScenarioError::invalid(field("controller"), e.to_string()))?;
                    let c = &s.controller0[i];
                    if c.theta_hat.len() != f.n_params() || c.eps_hat.len() != dim {
                        return Err(ScenarioError::invalid(field("controller"), "initial adaptive state shape"));
                    }
                }
            }
            ScenarioKind::Task(s) => {
                count("robots", s.robots.len())?;
                count("estimator initial states", s.estimator0.len())?;
                count("task gains", s.gains.len())?;
                for i in 0..n {
                    let field = |name: &str| format!("robot[{}].{name}", i + 1);
                    s.robots[i].params.validate().map_err(|e| ScenarioError::invalid(field("params"), e.to_string()))?;
                    s.gains[i].validate().map_err(|e| ScenarioError::invalid(field("gains"), e.to_string()))?;
                    self.estimator_gains[i]
                        .validate(2)
                        .map_err(|e| ScenarioError::invalid(field("estimator"), e.to_string()))?;
                    let e = &s.estimator0[i];
                    if e.order() != 2 || e.dim() != 2 {
                        return Err(ScenarioError::invalid(field("estimator"), "initial estimate shape"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.integrator.t_end = t_end;
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        // keep the logging rate when the step changes
        let rate = self.integrator.step * self.integrator.decimation as f64;
        self.integrator.step = step;
        self.integrator.decimation = ((rate / step).round() as usize).max(1);
        self
    }
}
