//! Numeric property suites behind the `verify` subcommand.
//!
//! Every suite draws its samples from a seeded generator, so reports are
//! reproducible.

use nalgebra::{DMatrix, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{build_graph, certificate, DirectedLeaderGraph, CERTIFICATE_RESIDUAL_TOL};
use crate::manipulator::{
    dynamic_regressor, dynamics_matrices, jacobian, kinematic_regressor, paper_arms, theta_vector, ArmParams,
    ArmState,
};
use crate::numerics::nussbaum;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    /// Largest residual seen, in the suite's own units.
    pub worst: f64,
    pub detail: String,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.samples > 0
    }
}

impl std::fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: {} samples, {} violations, worst {:.3e}{}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.samples,
            self.violations,
            self.worst,
            if self.detail.is_empty() { String::new() } else { format!(" ({})", self.detail) }
        )
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Random graph with a leader-rooted spanning tree, `n` in `1..=max_n`,
/// weights in (0, 2].
pub fn random_rooted_graph<R: Rng>(rng: &mut R, max_n: usize) -> DirectedLeaderGraph {
    let n = rng.gen_range(1..=max_n);
    let weight = |rng: &mut R| 2.0 - rng.gen_range(0.0..2.0);
    let mut order: Vec<usize> = (1..=n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut edges = Vec::new();
    let mut leader = Vec::new();
    for (k, &node) in order.iter().enumerate() {
        // parent 0 is the leader
        let parent = if k == 0 { 0 } else { [0].into_iter().chain(order[..k].iter().copied()).nth(rng.gen_range(0..=k)).unwrap() };
        if parent == 0 {
            leader.push((node, weight(rng)));
        } else {
            edges.push((parent, node, weight(rng)));
        }
    }
    for from in 1..=n {
        for to in 1..=n {
            if from != to && rng.gen_bool(0.25) && !edges.iter().any(|e| e.0 == from && e.1 == to) {
                edges.push((from, to, weight(rng)));
            }
        }
        if rng.gen_bool(0.15) && !leader.iter().any(|l| l.0 == from) {
            leader.push((from, weight(rng)));
        }
    }
    build_graph(&edges, &leader, n).expect("generated graph is well formed")
}

pub fn graph_certificates(count: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut violations, mut worst) = (0, 0.0f64);
    for _ in 0..count {
        let g = random_rooted_graph(&mut rng, 8);
        let ok = match certificate(&g) {
            Ok(c) => {
                let ones = DMatrix::from_element(c.pi.len(), 1, 1.0);
                let pi = DMatrix::from_column_slice(c.pi.len(), 1, c.pi.as_slice());
                let residual = (c.h.transpose() * pi - ones).amax();
                let jac = jacobi_eigenvalues(&c.xi)[0];
                let gap = (jac - c.lambda_min_xi).abs();
                worst = worst.max(residual).max(gap);
                residual <= CERTIFICATE_RESIDUAL_TOL
                    && c.pi.iter().all(|&p| p > 0.0)
                    && c.lambda_min_xi > 0.0
                    && jac > 0.0
                    && gap <= 1e-9 * c.lambda_min_xi.abs().max(1.0)
            }
            Err(_) => false,
        };
        violations += usize::from(!ok);
    }
    SuiteReport {
        name: "graph certificates".into(),
        samples: count,
        violations,
        worst,
        detail: "H^T pi = 1, pi > 0, lambda_min(Xi) > 0 vs Jacobi".into(),
    }
}

fn rel_le(a: f64, b: f64, slack: f64) -> bool {
    a <= b + slack * a.abs().max(b.abs()).max(1.0)
}

/// Power-sum bounds for nonnegative numbers.
pub fn lemma_power_sums(draws: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut violations, mut worst) = (0, 0.0f64);
    for k in 0..draws {
        let n = rng.gen_range(1..=10usize);
        let xs: Vec<f64> =
            (0..n).map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..10.0) }).collect();
        let p = if k % 2 == 0 { 1.0 - rng.gen_range(0.0..1.0) } else { rng.gen_range(1.0..4.0) };
        let sum: f64 = xs.iter().sum();
        let sum_p: f64 = xs.iter().map(|x| x.powf(p)).sum();
        let lo = sum.powf(p);
        let scaled = (n as f64).powf(1.0 - p) * lo;
        let (a, b, c) = if p <= 1.0 { (lo, sum_p, scaled) } else { (scaled, sum_p, lo) };
        let ok = rel_le(a, b, 1e-12) && rel_le(b, c, 1e-12);
        worst = worst.max((a - b).max(b - c).max(0.0) / a.abs().max(c.abs()).max(1.0));
        violations += usize::from(!ok);
    }
    SuiteReport {
        name: "power-sum inequality".into(),
        samples: draws,
        violations,
        worst,
        detail: "relative slack 1e-12".into(),
    }
}

/// `0 <= |x| - x^2 / sqrt(x^2 + g^2) <= g`.
pub fn lemma_smoothing_gap(draws: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut violations, mut worst) = (0, 0.0f64);
    for _ in 0..draws {
        let x = rng.gen_range(-1.0..1.0) * 10f64.powf(rng.gen_range(-6.0..4.0));
        let g = 10f64.powf(rng.gen_range(-6.0..2.0));
        let gap = x.abs() - x * x / (x * x + g * g).sqrt();
        let scale = x.abs().max(g);
        let ok = gap >= -1e-12 * scale && gap <= g + 1e-12 * scale;
        worst = worst.max((-gap).max(gap - g).max(0.0) / scale);
        violations += usize::from(!ok);
    }
    SuiteReport { name: "smoothing-gap inequality".into(), samples: draws, violations, worst, detail: "relative slack 1e-12".into() }
}

/// Extremes of the running mean `(1/k) int_0^k N(s) ds` on a uniform grid
/// over `(0, k_max]`, trapezoid rule.
pub fn nussbaum_running_mean_extremes(k_max: f64, step: f64) -> (f64, f64) {
    let n = (k_max / step).round() as usize;
    let (mut integral, mut prev) = (0.0, nussbaum(0.0));
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 1..=n {
        let kappa = k as f64 * step;
        let cur = nussbaum(kappa);
        integral += 0.5 * step * (prev + cur);
        prev = cur;
        let mean = integral / kappa;
        lo = lo.min(mean);
        hi = hi.max(mean);
    }
    (lo, hi)
}

pub fn nussbaum_witness() -> SuiteReport {
    let (lo, hi) = nussbaum_running_mean_extremes(6.0, 1e-4);
    let ok = hi > 10.0 && lo < -10.0;
    SuiteReport {
        name: "Nussbaum oscillation".into(),
        samples: 60_000,
        violations: usize::from(!ok),
        worst: 0.0,
        detail: format!("running mean spans [{lo:.3e}, {hi:.3e}]"),
    }
}

fn random_state<R: Rng>(rng: &mut R) -> ArmState {
    let pi = std::f64::consts::PI;
    ArmState {
        q: Vector2::new(rng.gen_range(-pi..pi), rng.gen_range(-pi..pi)),
        qdot: Vector2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
    }
}

fn vec2<R: Rng>(rng: &mut R) -> Vector2<f64> {
    Vector2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0))
}

/// Worst residual of the four arm properties over `samples` draws for one arm.
/// Order: inertia positive definiteness (min eigenvalue, reported negated when
/// violated), skew symmetry, dynamic regressor, kinematic regressor.
pub fn arm_property_residuals(p: &ArmParams, samples: usize, seed: u64) -> [f64; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [f64::INFINITY, 0.0, 0.0, 0.0];
    let h = 1e-6;
    for _ in 0..samples {
        let s = random_state(&mut rng);
        let d = dynamics_matrices(&s, p);
        let sym = d.m.symmetric_eigenvalues().min();
        let asym = (d.m - d.m.transpose()).amax();
        worst[0] = worst[0].min(if asym > 1e-14 { -asym } else { sym });

        let ahead = ArmState { q: s.q + s.qdot * h, ..s };
        let behind = ArmState { q: s.q - s.qdot * h, ..s };
        let m_dot = (dynamics_matrices(&ahead, p).m - dynamics_matrices(&behind, p).m) / (2.0 * h);
        let v = vec2(&mut rng);
        worst[1] = worst[1].max((v.transpose() * (m_dot - d.c * 2.0) * v)[0].abs());

        let (qr_dot, qr_ddot) = (vec2(&mut rng), vec2(&mut rng));
        let y = dynamic_regressor(&s.q, &s.qdot, &qr_dot, &qr_ddot, p.grav);
        let direct = d.m * qr_ddot + d.c * qr_dot + d.g;
        worst[2] = worst[2].max((y * theta_vector(p) - direct).amax());

        let z = kinematic_regressor(&s.q, &s.qdot);
        worst[3] = worst[3].max((z * p.kinematic_params() - jacobian(&s.q, p) * s.qdot).amax());
    }
    worst
}

pub fn manipulator_identities(samples: usize, seed: u64) -> Vec<SuiteReport> {
    let arms = paper_arms();
    let per_arm: Vec<[f64; 4]> =
        arms.iter().enumerate().map(|(i, p)| arm_property_residuals(p, samples, seed + i as u64)).collect();
    let names = ["inertia positive definite", "skew symmetry", "dynamic regressor identity", "kinematic regressor identity"];
    let tols = [0.0, 1e-6, 1e-10, 1e-10];
    (0..4)
        .map(|k| {
            let (violations, worst) = if k == 0 {
                let min = per_arm.iter().map(|w| w[0]).fold(f64::INFINITY, f64::min);
                (per_arm.iter().filter(|w| w[0] <= 0.0).count(), min)
            } else {
                let max = per_arm.iter().map(|w| w[k]).fold(0.0, f64::max);
                (per_arm.iter().filter(|w| w[k] > tols[k]).count(), max)
            };
            SuiteReport {
                name: names[k].into(),
                samples: samples * arms.len(),
                violations,
                worst,
                detail: if k == 0 { "worst = smallest eigenvalue".into() } else { format!("tolerance {:e}", tols[k]) },
            }
        })
        .collect()
}

/// Every suite at the acceptance sample sizes.
pub fn run_all(seed: u64) -> Vec<SuiteReport> {
    let mut out = vec![graph_certificates(200, seed)];
    out.extend(manipulator_identities(1000, seed));
    out.push(lemma_power_sums(10_000, seed));
    out.push(lemma_smoothing_gap(10_000, seed));
    out.push(nussbaum_witness());
    out
}
