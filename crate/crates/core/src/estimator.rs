//! Distributed finite-time leader estimator.
//!
//! Every follower keeps estimates `xhat_1..xhat_m` of the leader's chain
//! states, `eta` of the leader's highest derivative, and a second-order
//! sliding filter `(xi, rho)` that reconstructs that derivative from the
//! leader's last state. Only followers pinned to the leader (`a_i0 > 0`) ever
//! read leader signals; everyone else works from neighbour estimates.
//!
//! The task-space variant used by the manipulators is the same law with
//! `m = 2`: `chi = xhat_1`, `vartheta = xhat_2`, and the leader replaced by the
//! reference `(x_d, x_d')`.

use nalgebra::DVector;
use thiserror::Error;

use crate::graph::DirectedLeaderGraph;
use crate::numerics::{sig, SignumPolicy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("graph has {graph} followers but {agents} estimator states were supplied")]
    AgentCount { graph: usize, agents: usize },
    #[error("agent {agent}: {msg}")]
    Shape { agent: usize, msg: String },
    #[error("invalid estimator gains: {0}")]
    Gains(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub xhat: Vec<DVector<f64>>,
    pub eta: DVector<f64>,
    pub xi: DVector<f64>,
    pub rho: DVector<f64>,
}

impl EstimatorState {
    /// Initial state with the given chain estimates; eta, xi and rho start at zero.
    pub fn new(xhat: Vec<DVector<f64>>) -> Self {
        let n = xhat.first().map_or(0, |v| v.len());
        EstimatorState { xhat, eta: DVector::zeros(n), xi: DVector::zeros(n), rho: DVector::zeros(n) }
    }

    pub fn zeros(order: usize, dim: usize) -> Self {
        EstimatorState::new(vec![DVector::zeros(dim); order])
    }

    pub fn order(&self) -> usize {
        self.xhat.len()
    }

    pub fn dim(&self) -> usize {
        self.eta.len()
    }

    /// Scalars in the packed layout: m blocks of xhat, then eta, xi, rho.
    pub fn packed_len(order: usize, dim: usize) -> usize {
        (order + 3) * dim
    }

    pub fn pack_into(&self, out: &mut [f64]) {
        let n = self.dim();
        for (k, b) in self.xhat.iter().enumerate() {
            out[k * n..(k + 1) * n].copy_from_slice(b.as_slice());
        }
        let m = self.order();
        out[m * n..(m + 1) * n].copy_from_slice(self.eta.as_slice());
        out[(m + 1) * n..(m + 2) * n].copy_from_slice(self.xi.as_slice());
        out[(m + 2) * n..(m + 3) * n].copy_from_slice(self.rho.as_slice());
    }

    pub fn unpack(data: &[f64], order: usize, dim: usize) -> Self {
        let block = |k: usize| DVector::from_column_slice(&data[k * dim..(k + 1) * dim]);
        EstimatorState {
            xhat: (0..order).map(block).collect(),
            eta: block(order),
            xi: block(order + 1),
            rho: block(order + 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorGains {
    /// kappa_1..kappa_m; the last entry multiplies the top-order correction.
    pub kappa: Vec<f64>,
    pub kappa_eta: f64,
    pub kappa_xi: f64,
    pub kappa_rho: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EstimatorGains {
    /// Second-order gains of the formation study with all exponents at 0.7.
    pub fn paper_second_order() -> Self {
        EstimatorGains {
            kappa: vec![15.0, 5.0],
            kappa_eta: 8.0,
            kappa_xi: 6.0,
            kappa_rho: 4.0,
            alpha: 0.7,
            beta: 0.7,
            gamma: 0.7,
        }
    }

    pub fn validate(&self, order: usize) -> Result<(), EstimatorError> {
        if self.kappa.len() != order {
            return Err(EstimatorError::Gains(format!("{} order gains for order {order}", self.kappa.len())));
        }
        let positive = self.kappa.iter().chain([&self.kappa_eta, &self.kappa_xi, &self.kappa_rho]);
        if positive.into_iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(EstimatorError::Gains("all gains must be positive".into()));
        }
        for (name, e) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(e > 0.5 && e < 1.0) {
                return Err(EstimatorError::Gains(format!("{name} = {e} outside (0.5, 1)")));
            }
        }
        Ok(())
    }

    fn exponent(&self, k: usize, order: usize) -> f64 {
        if k + 1 == order {
            self.beta
        } else {
            self.gamma
        }
    }
}

/// Time derivative of all estimator states plus the correction terms
/// `kappa_k sig(.)` that the local controllers need.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorDerivative {
    pub d: Vec<EstimatorState>,
    /// `corrections[i][k]` = kappa_k sig^{gamma|beta}(consensus_k) of agent i.
    pub corrections: Vec<Vec<DVector<f64>>>,
}

/// Evaluate the estimator right-hand side for every follower.
///
/// `leader` holds the m leader chain blocks; agent `i` reads it only when
/// `a_i0 > 0`.
pub fn estimator_derivative(
    states: &[EstimatorState],
    leader: &[DVector<f64>],
    graph: &DirectedLeaderGraph,
    gains: &[EstimatorGains],
    policy: SignumPolicy,
) -> Result<EstimatorDerivative, EstimatorError> {
    let n_agents = graph.n_followers();
    if states.len() != n_agents || gains.len() != n_agents {
        return Err(EstimatorError::AgentCount { graph: n_agents, agents: states.len().min(gains.len()) });
    }
    let order = leader.len();
    let dim = leader.first().map_or(0, |v| v.len());
    for (i, s) in states.iter().enumerate() {
        if s.order() != order || s.dim() != dim || s.xhat.iter().any(|b| b.len() != dim) {
            return Err(EstimatorError::Shape {
                agent: i + 1,
                msg: format!("expected order {order}, dim {dim}"),
            });
        }
    }

    let mut d = Vec::with_capacity(n_agents);
    let mut corrections = Vec::with_capacity(n_agents);
    for i in 0..n_agents {
        let (di, ci) = agent_derivative(i, states, leader, graph, &gains[i], policy);
        d.push(di);
        corrections.push(ci);
    }
    Ok(EstimatorDerivative { d, corrections })
}

fn agent_derivative(
    i: usize,
    states: &[EstimatorState],
    leader: &[DVector<f64>],
    graph: &DirectedLeaderGraph,
    gains: &EstimatorGains,
    policy: SignumPolicy,
) -> (EstimatorState, Vec<DVector<f64>>) {
    let me = &states[i];
    let order = me.order();
    let a_i0 = graph.leader_weight(i);
    let pinned = a_i0 > 0.0;

    // consensus sums for each chain order, neighbours first, leader if pinned
    let mut consensus: Vec<DVector<f64>> = vec![DVector::zeros(me.dim()); order];
    let mut eta_err = DVector::zeros(me.dim());
    for (j, a_ij) in graph.neighbors(i) {
        for (k, c) in consensus.iter_mut().enumerate() {
            c.axpy(a_ij, &(&states[j].xhat[k] - &me.xhat[k]), 1.0);
        }
        eta_err.axpy(a_ij, &(&states[j].eta - &me.eta), 1.0);
    }
    if pinned {
        for (k, c) in consensus.iter_mut().enumerate() {
            c.axpy(a_i0, &(&leader[k] - &me.xhat[k]), 1.0);
        }
        eta_err.axpy(a_i0, &(&me.rho - &me.eta), 1.0);
    }

    let corrections: Vec<DVector<f64>> = consensus
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let e = gains.exponent(k, order);
            c.map(|v| gains.kappa[k] * sig(v, e))
        })
        .collect();

    let mut dxhat = Vec::with_capacity(order);
    for k in 0..order {
        let feed = if k + 1 < order { &me.xhat[k + 1] } else { &me.eta };
        dxhat.push(feed + &corrections[k]);
    }
    let deta = eta_err.map(|e| gains.kappa_eta * (sig(e, gains.alpha) + policy.apply(e)));

    let (dxi, drho) = if pinned {
        let gap = &leader[order - 1] - &me.xi;
        let drho = gap.map(|g| gains.kappa_rho * a_i0 * policy.apply(g));
        let dxi = &me.rho + gap.map(|g| gains.kappa_xi * a_i0 * sig(g, 0.5));
        (dxi, drho)
    } else {
        (me.rho.clone(), DVector::zeros(me.dim()))
    };

    (EstimatorState { xhat: dxhat, eta: deta, xi: dxi, rho: drho }, corrections)
}

/// Estimation errors of one agent against the leader truth.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationErrors {
    pub xhat: Vec<DVector<f64>>,
    pub eta: DVector<f64>,
    pub xi: DVector<f64>,
    pub rho: DVector<f64>,
}

/// `leader_rate` is the analytic x_{0,m}'.
pub fn estimation_errors(
    states: &[EstimatorState],
    leader: &[DVector<f64>],
    leader_rate: &DVector<f64>,
) -> Vec<EstimationErrors> {
    let order = leader.len();
    states
        .iter()
        .map(|s| EstimationErrors {
            xhat: s.xhat.iter().zip(leader).map(|(e, l)| e - l).collect(),
            eta: &s.eta - leader_rate,
            xi: &s.xi - &leader[order - 1],
            rho: &s.rho - leader_rate,
        })
        .collect()
}

/// Task-space variant: `chi`/`vartheta` are `xhat[0]`/`xhat[1]`, and the
/// reference position and velocity play the leader.
pub fn task_estimator_derivative(
    states: &[EstimatorState],
    reference: (&DVector<f64>, &DVector<f64>),
    graph: &DirectedLeaderGraph,
    gains: &[EstimatorGains],
    policy: SignumPolicy,
) -> Result<EstimatorDerivative, EstimatorError> {
    let leader = [reference.0.clone(), reference.1.clone()];
    estimator_derivative(states, &leader, graph, gains, policy)
}
