//! One-step dynamics and the simulation loop.
//!
//! Two formulations of the update are provided. [`step_flows`] moves mass
//! along influence edges by the net flow
//! `f_{v→u} = p · x_v · x_u · (1/N_v − 1/N_u)`, where `N_u` is the
//! interaction mass of `u`. [`step_direct`] evaluates the per-node update as
//! the sum of the mass that stays at `u` and the mass arriving from the
//! types that influence it. Both are the same map; keeping the two code
//! paths separate lets each check the other.

use crate::error::{Error, Result};
use crate::model::{FlowField, MassVector, ModelParams, TypeGraph};

/// Interaction mass `N_u = alpha * x_u + Σ_{v ∈ Γ_u} x_v`.
pub fn interaction_mass(x: &MassVector, u: usize, params: &ModelParams, g: &TypeGraph) -> Result<f64> {
    g.check_node(u)?;
    x.check_len(g)?;
    Ok(interaction_mass_unchecked(x.as_slice(), u, params.alpha(), g))
}

fn interaction_mass_unchecked(x: &[f64], u: usize, alpha: f64, g: &TypeGraph) -> f64 {
    alpha * x[u] + g.interaction_neighbors(u).iter().map(|&v| x[v]).sum::<f64>()
}

/// All interaction masses.
pub fn interaction_masses(x: &MassVector, params: &ModelParams, g: &TypeGraph) -> Vec<f64> {
    (0..g.n())
        .map(|u| interaction_mass_unchecked(x.as_slice(), u, params.alpha(), g))
        .collect()
}

#[inline]
fn edge_flow(p: f64, xv: f64, xu: f64, nv: f64, nu: f64) -> f64 {
    // An inactive endpoint carries no flow; this also keeps 1/N away from 0.
    if xv * xu == 0.0 {
        0.0
    } else {
        p * xv * xu * (1.0 / nv - 1.0 / nu)
    }
}

/// Net flow from `v` to `u` along an influence edge. Positive means mass
/// moves from `v` to `u`.
pub fn net_flow(x: &MassVector, edge: (usize, usize), params: &ModelParams, g: &TypeGraph) -> Result<f64> {
    let (v, u) = edge;
    g.check_node(v)?;
    g.check_node(u)?;
    x.check_len(g)?;
    if !g.is_influence_edge(v, u) {
        return Err(Error::NotInfluenceEdge { u: v, v: u });
    }
    let xs = x.as_slice();
    let nv = interaction_mass_unchecked(xs, v, params.alpha(), g);
    let nu = interaction_mass_unchecked(xs, u, params.alpha(), g);
    Ok(edge_flow(params.p(), xs[v], xs[u], nv, nu))
}

/// Flow field of the state `x`.
pub fn flow_field(x: &MassVector, params: &ModelParams, g: &TypeGraph) -> FlowField {
    let xs = x.as_slice();
    let n_mass = interaction_masses(x, params, g);
    let edges = g
        .influence_edges()
        .map(|(a, b)| ((a, b), edge_flow(params.p(), xs[a], xs[b], n_mass[a], n_mass[b])))
        .collect();
    FlowField::from_edges(edges)
}

/// One step in net-flow form: `x_u(t+1) = x_u(t) + Σ_{v ∈ I_u} f_{v→u}(t)`.
pub fn step_flows(x: &MassVector, params: &ModelParams, g: &TypeGraph) -> Result<(MassVector, FlowField)> {
    x.check_len(g)?;
    Ok(step_flows_unchecked(x, params, g))
}

pub(crate) fn step_flows_unchecked(x: &MassVector, params: &ModelParams, g: &TypeGraph) -> (MassVector, FlowField) {
    let ff = flow_field(x, params, g);
    let mut next = x.as_slice().to_vec();
    for ((a, b), f) in ff.iter() {
        next[a] -= f;
        next[b] += f;
    }
    // A node that loses almost all of its mass can land a few ulps below
    // zero; the exact update never goes negative.
    for v in &mut next {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    (MassVector::from_raw(next), ff)
}

/// One step evaluated per node: mass kept at `u` plus mass arriving from
/// every `v` with `u ∈ I_v`.
pub fn step_direct(x: &MassVector, params: &ModelParams, g: &TypeGraph) -> Result<MassVector> {
    x.check_len(g)?;
    let xs = x.as_slice();
    let (alpha, p) = (params.alpha(), params.p());
    let n = g.n();

    let norm: Vec<f64> = (0..n)
        .map(|u| {
            let mut s = alpha * xs[u];
            for &v in g.interaction_neighbors(u) {
                s += xs[v];
            }
            s
        })
        .collect();

    let next = (0..n)
        .map(|u| {
            let xu = xs[u];
            if xu == 0.0 {
                // Every term carries a factor x_u.
                return 0.0;
            }
            let influencers = g.influence_neighbors(u);
            // Own type plus interaction partners that cannot influence u.
            let mut kept = alpha * xu;
            for &v in g.interaction_neighbors(u) {
                if influencers.binary_search(&v).is_err() {
                    kept += xs[v];
                }
            }
            let stay = (1.0 - p) * xu + p * xu * kept / norm[u];
            // Influence is symmetric: u ∈ I_v iff v ∈ I_u.
            let arrive: f64 = influencers
                .iter()
                .filter(|&&v| xs[v] != 0.0)
                .map(|&v| xs[v] * xu / norm[v])
                .sum();
            stay + p * arrive
        })
        .collect();
    Ok(MassVector::from_raw(next))
}

/// Termination rule for [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCriterion {
    /// L1 step size below which a step counts as stationary.
    pub tol: f64,
    /// Consecutive stationary steps required to declare convergence.
    pub window: usize,
    pub max_steps: usize,
}

impl Default for StopCriterion {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            window: 10,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxStepsReached,
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxStepsReached => "max_steps_reached",
        })
    }
}

/// Outcome of a run that did not keep its states.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub status: RunStatus,
    pub steps_taken: usize,
    /// L1 length of the last step; infinite if no step was taken.
    pub final_residual: f64,
    pub final_state: MassVector,
}

/// Recorded run: `states[t]` is `x(t)`, `flows[t]` the flow field that
/// carried `x(t)` to `x(t+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<MassVector>,
    pub flows: Option<Vec<FlowField>>,
    pub status: RunStatus,
    pub steps_taken: usize,
    pub final_residual: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &MassVector {
        self.states.last().expect("trajectory always holds x(0)")
    }

    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }
}

/// Runs the dynamics from `x0`, calling `observe(t, x(t), flows(t), x(t+1))`
/// after every step.
pub fn simulate_with<F>(
    x0: &MassVector,
    params: &ModelParams,
    g: &TypeGraph,
    stop: &StopCriterion,
    mut observe: F,
) -> Result<RunSummary>
where
    F: FnMut(usize, &MassVector, &FlowField, &MassVector),
{
    x0.check_len(g)?;
    let window = stop.window.max(1);
    let mut x = x0.clone();
    let mut quiet = 0usize;
    let mut residual = f64::INFINITY;
    for t in 0..stop.max_steps {
        let (next, ff) = step_flows_unchecked(&x, params, g);
        residual = next.l1_distance(&x);
        observe(t, &x, &ff, &next);
        x = next;
        if residual < stop.tol {
            quiet += 1;
            if quiet >= window {
                return Ok(RunSummary {
                    status: RunStatus::Converged,
                    steps_taken: t + 1,
                    final_residual: residual,
                    final_state: x,
                });
            }
        } else {
            quiet = 0;
        }
    }
    Ok(RunSummary {
        status: RunStatus::MaxStepsReached,
        steps_taken: stop.max_steps,
        final_residual: residual,
        final_state: x,
    })
}

/// Runs the dynamics and records every state (and optionally every flow field).
pub fn simulate(
    x0: &MassVector,
    params: &ModelParams,
    g: &TypeGraph,
    stop: &StopCriterion,
    record_flows: bool,
) -> Result<Trajectory> {
    let mut states = vec![x0.clone()];
    let mut flows = record_flows.then(Vec::new);
    let summary = simulate_with(x0, params, g, stop, |_, _, ff, next| {
        states.push(next.clone());
        if let Some(fl) = flows.as_mut() {
            fl.push(ff.clone());
        }
    })?;
    Ok(Trajectory {
        states,
        flows,
        status: summary.status,
        steps_taken: summary.steps_taken,
        final_residual: summary.final_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3(global: bool) -> TypeGraph {
        let e = [(0, 1), (1, 2)];
        if global {
            TypeGraph::global(3, &e).unwrap()
        } else {
            TypeGraph::local(3, &e).unwrap()
        }
    }

    fn start() -> MassVector {
        MassVector::new(vec![0.4, 0.2, 0.4]).unwrap()
    }

    #[test]
    fn interaction_mass_examples() {
        let a2 = ModelParams::with_alpha(2.0).unwrap();
        let x = start();
        let glob: Vec<f64> = (0..3)
            .map(|u| interaction_mass(&x, u, &a2, &path3(true)).unwrap())
            .collect();
        let loc: Vec<f64> = (0..3)
            .map(|u| interaction_mass(&x, u, &a2, &path3(false)).unwrap())
            .collect();
        for (got, want) in glob.iter().zip([1.4, 1.2, 1.4]) {
            assert!((got - want).abs() < 1e-15);
        }
        for (got, want) in loc.iter().zip([1.0, 1.2, 1.0]) {
            assert!((got - want).abs() < 1e-15);
        }

        let single = TypeGraph::local(1, &[]).unwrap();
        let a3 = ModelParams::with_alpha(3.0).unwrap();
        assert_eq!(
            interaction_mass(&MassVector::point(1, 0), 0, &a3, &single).unwrap(),
            3.0
        );
        assert!(matches!(
            interaction_mass(&x, 3, &a2, &path3(true)),
            Err(Error::NodeOutOfRange { node: 3, n: 3 })
        ));
    }

    #[test]
    fn net_flow_rejects_non_edges() {
        let a2 = ModelParams::with_alpha(2.0).unwrap();
        assert!(matches!(
            net_flow(&start(), (0, 2), &a2, &path3(true)),
            Err(Error::NotInfluenceEdge { .. })
        ));
    }

    #[test]
    fn net_flow_zero_on_inactive_endpoint() {
        let a2 = ModelParams::with_alpha(2.0).unwrap();
        let x = MassVector::new(vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(net_flow(&x, (1, 0), &a2, &path3(false)).unwrap(), 0.0);
        assert_eq!(net_flow(&x, (0, 1), &a2, &path3(true)).unwrap(), 0.0);
    }

    #[test]
    fn equilibria_and_edgeless_graphs_are_fixed() {
        let a2 = ModelParams::with_alpha(2.0).unwrap();
        let x = MassVector::point(3, 1);
        for g in [path3(true), path3(false)] {
            let (next, _) = step_flows(&x, &a2, &g).unwrap();
            assert_eq!(next, x);
            assert_eq!(step_direct(&x, &a2, &g).unwrap(), x);
        }
        let edgeless = TypeGraph::global(3, &[]).unwrap();
        let (next, ff) = step_flows(&start(), &a2, &edgeless).unwrap();
        assert_eq!(next, start());
        assert!(ff.is_empty());
    }

    #[test]
    fn equilibrium_start_converges_in_window_steps() {
        let a2 = ModelParams::with_alpha(2.0).unwrap();
        let x = MassVector::new(vec![0.5, 0.0, 0.5]).unwrap();
        let stop = StopCriterion::default();
        let traj = simulate(&x, &a2, &path3(true), &stop, true).unwrap();
        assert!(traj.converged());
        assert_eq!(traj.steps_taken, stop.window);
        assert_eq!(traj.states.len(), stop.window + 1);
        assert!(traj.states.iter().all(|s| *s == x));
        assert_eq!(traj.flows.as_ref().unwrap().len(), stop.window);
    }

    #[test]
    fn max_steps_guard() {
        let a2 = ModelParams::with_alpha(2.0).unwrap();
        let stop = StopCriterion {
            max_steps: 5,
            ..Default::default()
        };
        let traj = simulate(&start(), &a2, &path3(false), &stop, false).unwrap();
        assert_eq!(traj.status, RunStatus::MaxStepsReached);
        assert_eq!(traj.steps_taken, 5);
        assert_eq!(traj.states.len(), 6);
        assert!(traj.flows.is_none());
    }
}
