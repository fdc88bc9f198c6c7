//! Quantities tracked along trajectories: flow directions, sink
//! configurations on small graphs, and sorted partial sums.

use std::collections::BTreeMap;
use std::fmt;

use crate::dynamics::{interaction_masses, Trajectory};
use crate::error::{Error, Result};
use crate::model::{FlowField, MassVector, ModelParams, TypeGraph, Variant};

/// Flows at or below this magnitude are labeled [`Direction::Zero`].
pub const DEFAULT_DIRECTION_EPS: f64 = 1e-14;

/// Direction of net flow on an edge `(u, v)`, `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `u → v`
    Forward,
    /// `v → u`
    Backward,
    Zero,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
            Direction::Zero => "zero",
        })
    }
}

/// Direction label of every influence edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub labels: BTreeMap<(usize, usize), Direction>,
}

impl Configuration {
    pub fn get(&self, u: usize, v: usize) -> Option<Direction> {
        let label = *self.labels.get(&(u.min(v), u.max(v)))?;
        Some(if u < v {
            label
        } else {
            match label {
                Direction::Forward => Direction::Backward,
                Direction::Backward => Direction::Forward,
                Direction::Zero => Direction::Zero,
            }
        })
    }
}

pub fn flow_configuration(ff: &FlowField, direction_eps: f64) -> Configuration {
    let labels = ff
        .iter()
        .map(|(e, f)| {
            let d = if f > direction_eps {
                Direction::Forward
            } else if f < -direction_eps {
                Direction::Backward
            } else {
                Direction::Zero
            };
            (e, d)
        })
        .collect();
    Configuration { labels }
}

/// Node order `(end, center, end)` of a 3-node path.
fn three_path(g: &TypeGraph) -> Option<(usize, usize, usize)> {
    if g.n() != 3 || g.influence_edge_count() != 2 {
        return None;
    }
    let center = (0..3).find(|&u| g.degree(u) == 2)?;
    let ends = g.influence_neighbors(center);
    Some((ends[0], center, ends[1]))
}

/// Whether a local 3-path with alpha >= 2 is in a sink configuration: the
/// center's interaction mass is at least both ends', or below both.
pub fn is_sink_3path(x: &MassVector, params: &ModelParams, g: &TypeGraph) -> Result<bool> {
    let (a, c, b) = three_path(g)
        .filter(|_| g.variant() == Variant::Local)
        .ok_or_else(|| Error::WrongTopology("expected the local 3-node path".into()))?;
    if params.alpha() < 2.0 {
        return Err(Error::InvalidParams(format!(
            "sink test needs alpha >= 2, got {}",
            params.alpha()
        )));
    }
    x.check_len(g)?;
    let n = interaction_masses(x, params, g);
    let center_max = n[c] >= n[a] && n[c] >= n[b];
    let center_min = n[c] < n[a] && n[c] < n[b];
    Ok(center_max || center_min)
}

/// Center of a local star graph: the unique node of degree >= 2, or node 0
/// for a single edge.
pub fn star_center(g: &TypeGraph) -> Result<usize> {
    let not_star = || Error::WrongTopology("expected a local star graph".into());
    if g.variant() != Variant::Local || g.n() < 2 || g.influence_edge_count() != g.n() - 1 {
        return Err(not_star());
    }
    if g.n() == 2 {
        return Ok(0);
    }
    let center = (0..g.n()).find(|&u| g.degree(u) == g.n() - 1).ok_or_else(not_star)?;
    Ok(center)
}

/// Leaves whose flow currently runs away from the center.
pub fn star_outward_edges(x: &MassVector, params: &ModelParams, g: &TypeGraph) -> Result<Vec<usize>> {
    let c = star_center(g)?;
    x.check_len(g)?;
    let n = interaction_masses(x, params, g);
    Ok(g.influence_neighbors(c)
        .iter()
        .copied()
        .filter(|&v| x[c] * x[v] > 0.0 && n[v] > n[c])
        .collect())
}

/// Number of star edges with flow directed away from the center.
pub fn star_outward_count(x: &MassVector, params: &ModelParams, g: &TypeGraph) -> Result<usize> {
    star_outward_edges(x, params, g).map(|e| e.len())
}

/// `Y_k` = sum of the `k` smallest masses, for `k = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSums(pub Vec<f64>);

impl PartialSums {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn partial_sums(x: &MassVector) -> PartialSums {
    // Ties are irrelevant to the sums; order by node index for determinism.
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]).then(i.cmp(&j)));
    let sums = idx
        .iter()
        .scan(0.0, |acc, &i| {
            *acc += x[i];
            Some(*acc)
        })
        .collect();
    PartialSums(sums)
}

/// One reversal of the flow on an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectionChange {
    /// Index of the flow field (step `t → t+1`) showing the new direction.
    pub step: usize,
    pub old: Direction,
    pub new: Direction,
}

/// Forward/backward reversals per edge, in step order. Passing through a
/// zero label and resuming the same direction is not a change.
pub fn direction_change_log(
    traj: &Trajectory,
    direction_eps: f64,
) -> Result<BTreeMap<(usize, usize), Vec<DirectionChange>>> {
    let flows = traj.flows.as_ref().ok_or(Error::FlowsNotRecorded)?;
    let mut last: BTreeMap<(usize, usize), Direction> = BTreeMap::new();
    let mut log: BTreeMap<(usize, usize), Vec<DirectionChange>> = BTreeMap::new();
    for (step, ff) in flows.iter().enumerate() {
        for (edge, label) in flow_configuration(ff, direction_eps).labels {
            log.entry(edge).or_default();
            if label == Direction::Zero {
                continue;
            }
            match last.insert(edge, label) {
                Some(prev) if prev != label => {
                    log.get_mut(&edge).unwrap().push(DirectionChange {
                        step,
                        old: prev,
                        new: label,
                    });
                }
                _ => {}
            }
        }
    }
    Ok(log)
}

/// Total number of reversals across all edges.
pub fn total_direction_changes(log: &BTreeMap<(usize, usize), Vec<DirectionChange>>) -> usize {
    log.values().map(Vec::len).sum()
}
