use crate::numerics::settling_time;

use super::trace::SimTrace;

/// Settling thresholds on error norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub estimator: f64,
    pub tracking: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { estimator: 1e-2, tracking: 5e-2 }
    }
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Tolerances { estimator: tol, tracking: tol }
    }
}

/// Per-error-channel summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSummary {
    /// Channel prefix without the agent part, e.g. `xtilde1`.
    pub channel: String,
    pub settling: Option<f64>,
    pub max_norm: f64,
    pub final_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentMetrics {
    pub agent: usize,
    /// Estimator stages `xtilde1..xtilde{m}`.
    pub estimator: Vec<ErrorSummary>,
    /// Tracking errors `track1..track{m}` (task runs log `track1` only).
    pub tracking: Vec<ErrorSummary>,
    /// Sup-norms of adaptive quantities present in the trace, by channel.
    pub adaptive_sup: Vec<(String, f64)>,
}

impl AgentMetrics {
    pub fn max_adaptive_sup(&self) -> f64 {
        self.adaptive_sup.iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    Diverged,
    Inconclusive,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Converged => 0,
            RunStatus::Diverged => 2,
            RunStatus::Inconclusive => 3,
        }
    }
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RunStatus::Converged => "converged",
            RunStatus::Diverged => "diverged",
            RunStatus::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub tolerances: Tolerances,
    pub agents: Vec<AgentMetrics>,
    pub diverged: bool,
    pub t_final: f64,
}

impl Metrics {
    /// Converged when nothing diverged and every error channel settled.
    pub fn status(&self) -> RunStatus {
        if self.diverged {
            return RunStatus::Diverged;
        }
        let settled = |e: &ErrorSummary| e.settling.is_some();
        let all = self.agents.iter().all(|a| a.estimator.iter().all(settled) && a.tracking.iter().all(settled));
        if all && !self.agents.is_empty() {
            RunStatus::Converged
        } else {
            RunStatus::Inconclusive
        }
    }

    pub fn summary(&self) -> String {
        let fmt_t = |t: Option<f64>| t.map_or("-".to_string(), |t| format!("{t:.3}"));
        let mut out = format!(
            "status {} (t_final {:.4}, estimator tol {:e}, tracking tol {:e})\n",
            self.status(),
            self.t_final,
            self.tolerances.estimator,
            self.tolerances.tracking
        );
        for a in &self.agents {
            out.push_str(&format!("agent {}:", a.agent));
            for e in a.estimator.iter().chain(&a.tracking) {
                out.push_str(&format!(" {} settle {} final {:.3e};", e.channel, fmt_t(e.settling), e.final_norm));
            }
            out.push_str(&format!(" adaptive sup {:.3e}\n", a.max_adaptive_sup()));
        }
        out
    }
}

const ADAPTIVE: [&str; 4] = ["theta_hat", "eps_hat", "kappa", "a_hat"];

fn summarize(trace: &SimTrace, prefix: &str, channel: &str, tol: f64) -> Option<ErrorSummary> {
    let norms = trace.norm_channel(&format!("{prefix}.{channel}"))?;
    let settling = if trace.divergence.is_some() { None } else { settling_time(&trace.times, &norms, tol) };
    Some(ErrorSummary {
        channel: channel.to_string(),
        settling,
        max_norm: norms.iter().copied().fold(0.0, f64::max),
        final_norm: norms.last().copied().unwrap_or(f64::NAN),
    })
}

fn staged(trace: &SimTrace, prefix: &str, stem: &str, tol: f64) -> Vec<ErrorSummary> {
    (1..).map_while(|k| summarize(trace, prefix, &format!("{stem}{k}"), tol)).collect()
}

/// Settling times and sup-norms for every follower (`agent0` is the leader and skipped).
pub fn compute_metrics(trace: &SimTrace, tol: &Tolerances) -> Metrics {
    let agents = trace
        .agents()
        .into_iter()
        .filter(|&i| i > 0)
        .map(|i| {
            let prefix = format!("agent{i}");
            let adaptive_sup = ADAPTIVE
                .iter()
                .filter_map(|name| {
                    let full = format!("{prefix}.{name}");
                    let comps = match trace.channel(&full) {
                        Some(c) => vec![c],
                        None => trace.vector_channel(&full),
                    };
                    if comps.is_empty() {
                        return None;
                    }
                    let sup = comps.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
                    Some((name.to_string(), sup))
                })
                .collect();
            AgentMetrics {
                agent: i,
                estimator: staged(trace, &prefix, "xtilde", tol.estimator),
                tracking: staged(trace, &prefix, "track", tol.tracking),
                adaptive_sup,
            }
        })
        .collect();
    let non_finite = trace.rows.iter().flatten().any(|v| !v.is_finite());
    Metrics {
        tolerances: *tol,
        agents,
        diverged: trace.divergence.is_some() || non_finite,
        t_final: trace.divergence.or(trace.times.last().copied()).unwrap_or(0.0),
    }
}
