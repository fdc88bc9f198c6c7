//! Structural predicates on the influence graph and its active subgraphs.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::model::{MassVector, TypeGraph};

/// Largest component [`is_locally_balanced`] will search by default.
pub const LOCALLY_BALANCED_CAP: usize = 12;

/// Tolerance for "equal masses" in [`is_regular_uniform`].
pub const UNIFORM_TOL: f64 = 1e-9;

/// Subgraph of the influence graph induced by the active types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSubgraph {
    pub nodes: BTreeSet<usize>,
    pub edges: Vec<(usize, usize)>,
    /// Connected components, each sorted, ordered by smallest node.
    pub components: Vec<Vec<usize>>,
}

impl ActiveSubgraph {
    /// Components with at least one edge.
    pub fn nontrivial_components(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.components.iter().filter(|c| c.len() > 1)
    }
}

/// `{u : x_u > activity_eps}`.
pub fn active_set(x: &MassVector, activity_eps: f64) -> BTreeSet<usize> {
    x.as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > activity_eps)
        .map(|(u, _)| u)
        .collect()
}

/// Connected components of the influence subgraph induced by `nodes`.
pub fn induced_components(nodes: &BTreeSet<usize>, g: &TypeGraph) -> Vec<Vec<usize>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &start in nodes {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in g.influence_neighbors(u) {
                if nodes.contains(&v) && seen.insert(v) {
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

pub fn active_subgraph(x: &MassVector, g: &TypeGraph, activity_eps: f64) -> ActiveSubgraph {
    let nodes = active_set(x, activity_eps);
    let edges = g
        .influence_edges()
        .filter(|(u, v)| nodes.contains(u) && nodes.contains(v))
        .collect();
    let components = induced_components(&nodes, g);
    ActiveSubgraph {
        nodes,
        edges,
        components,
    }
}

/// No two members of `s` share an influence edge.
pub fn is_independent(s: &BTreeSet<usize>, g: &TypeGraph) -> bool {
    s.iter()
        .all(|&u| g.influence_neighbors(u).iter().all(|v| !s.contains(v)))
}

/// BFS distances in the influence graph; `None` for unreachable nodes.
pub fn bfs_distances(source: usize, g: &TypeGraph) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.n()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let d = dist[u].unwrap();
        for &v in g.influence_neighbors(u) {
            if dist[v].is_none() {
                dist[v] = Some(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Minimum influence-graph distance over distinct pairs of `s`.
/// `None` stands for infinity: fewer than two nodes, or no connected pair.
pub fn min_pairwise_distance(s: &BTreeSet<usize>, g: &TypeGraph) -> Option<usize> {
    let mut best: Option<usize> = None;
    for &u in s {
        let dist = bfs_distances(u, g);
        for &v in s.range(u + 1..) {
            if let Some(d) = dist[v] {
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
    }
    best
}

/// Active nodes at pairwise distance at least 3.
pub fn is_three_separated(x: &MassVector, g: &TypeGraph, activity_eps: f64) -> bool {
    min_pairwise_distance(&active_set(x, activity_eps), g).is_none_or(|d| d >= 3)
}

fn induced_degree(u: usize, members: &BTreeSet<usize>, g: &TypeGraph) -> usize {
    g.influence_neighbors(u).iter().filter(|v| members.contains(v)).count()
}

/// Two-colorability of the influence subgraph induced by `component`.
pub fn is_bipartite(component: &[usize], g: &TypeGraph) -> bool {
    let members: BTreeSet<usize> = component.iter().copied().collect();
    let mut color: std::collections::BTreeMap<usize, bool> = Default::default();
    for &start in component {
        if color.contains_key(&start) {
            continue;
        }
        color.insert(start, false);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let cu = color[&u];
            for &v in g.influence_neighbors(u) {
                if !members.contains(&v) {
                    continue;
                }
                match color.get(&v) {
                    Some(&cv) if cv == cu => return false,
                    Some(_) => {}
                    None => {
                        color.insert(v, !cu);
                        queue.push_back(v);
                    }
                }
            }
        }
    }
    true
}

/// Common degree of the induced subgraph, if it is regular.
pub fn regular_degree(component: &[usize], g: &TypeGraph) -> Option<usize> {
    let members: BTreeSet<usize> = component.iter().copied().collect();
    let mut degs = component.iter().map(|&u| induced_degree(u, &members, g));
    let first = degs.next()?;
    degs.all(|d| d == first).then_some(first)
}

/// Induced subgraph is regular and `x` is constant on it (within 1e-9).
pub fn is_regular_uniform(x: &MassVector, component: &[usize], g: &TypeGraph) -> bool {
    if regular_degree(component, g).is_none() {
        return false;
    }
    let Some(&first) = component.first() else {
        return false;
    };
    component.iter().all(|&u| (x[u] - x[first]).abs() <= UNIFORM_TOL)
}

/// A partition `V_1..V_k` of a `d`-regular component in which every vertex
/// has exactly `d/(k-1)` neighbors in each other part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancedPartition {
    pub degree: usize,
    pub parts: Vec<Vec<usize>>,
}

impl BalancedPartition {
    pub fn k(&self) -> usize {
        self.parts.len()
    }

    pub fn part_size(&self) -> usize {
        self.parts[0].len()
    }
}

/// Recounts the local-balance condition for `parts` on the induced subgraph
/// of `component`.
pub fn verify_balanced_partition(component: &[usize], parts: &[Vec<usize>], g: &TypeGraph) -> Result<usize> {
    let members: BTreeSet<usize> = component.iter().copied().collect();
    let k = parts.len();
    if k < 2 {
        return Err(Error::PartitionNotBalanced(format!("need at least 2 parts, got {k}")));
    }
    let mut part_of = std::collections::BTreeMap::new();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::PartitionNotBalanced(format!("part {i} is empty")));
        }
        for &u in part {
            if !members.contains(&u) || part_of.insert(u, i).is_some() {
                return Err(Error::PartitionNotBalanced(format!(
                    "node {u} is outside the component or repeated"
                )));
            }
        }
    }
    if part_of.len() != members.len() {
        return Err(Error::PartitionNotBalanced("parts do not cover the component".into()));
    }
    let d =
        regular_degree(component, g).ok_or_else(|| Error::PartitionNotBalanced("component is not regular".into()))?;
    if d % (k - 1) != 0 {
        return Err(Error::PartitionNotBalanced(format!(
            "degree {d} not divisible by k-1 = {}",
            k - 1
        )));
    }
    let per_part = d / (k - 1);
    for &u in component {
        let mut counts = vec![0usize; k];
        for v in g.influence_neighbors(u).iter().filter(|v| members.contains(v)) {
            counts[part_of[v]] += 1;
        }
        let own = part_of[&u];
        for (j, &c) in counts.iter().enumerate() {
            let want = if j == own { 0 } else { per_part };
            if c != want {
                return Err(Error::PartitionNotBalanced(format!(
                    "node {u} has {c} edges to part {j}, expected {want}"
                )));
            }
        }
    }
    Ok(d)
}

struct BalanceSearch<'a> {
    nodes: &'a [usize],
    /// Adjacency in local indices.
    adj: Vec<Vec<usize>>,
    k: usize,
    per_part: usize,
    size: usize,
    assign: Vec<Option<usize>>,
    part_sizes: Vec<usize>,
    /// `counts[u][j]`: assigned neighbors of `u` in part `j`.
    counts: Vec<Vec<usize>>,
}

impl BalanceSearch<'_> {
    fn feasible_after(&self, u: usize) -> bool {
        // Every vertex must still be able to reach exactly `per_part` in
        // each foreign part, and none in its own.
        let check = |w: usize| -> bool {
            let unassigned = self.adj[w].iter().filter(|&&z| self.assign[z].is_none()).count();
            let need: usize = (0..self.k)
                .map(|j| match self.assign[w] {
                    Some(own) if own == j => 0,
                    _ => self.per_part.saturating_sub(self.counts[w][j]),
                })
                .sum();
            let over = (0..self.k).any(|j| match self.assign[w] {
                Some(own) if own == j => self.counts[w][j] > 0,
                _ => self.counts[w][j] > self.per_part,
            });
            !over && (self.assign[w].is_none() || need <= unassigned)
        };
        check(u) && self.adj[u].iter().all(|&w| check(w))
    }

    fn solve(&mut self, idx: usize, used: usize) -> bool {
        if idx == self.nodes.len() {
            return used == self.k;
        }
        // Canonical labeling: a node may open at most one new part.
        let limit = (used + 1).min(self.k);
        for j in 0..limit {
            if self.part_sizes[j] == self.size {
                continue;
            }
            self.assign[idx] = Some(j);
            self.part_sizes[j] += 1;
            for &w in &self.adj[idx] {
                self.counts[w][j] += 1;
            }
            if self.feasible_after(idx) && self.solve(idx + 1, used.max(j + 1)) {
                return true;
            }
            for &w in &self.adj[idx] {
                self.counts[w][j] -= 1;
            }
            self.part_sizes[j] -= 1;
            self.assign[idx] = None;
        }
        false
    }
}

/// Searches for a locally balanced partition of a connected component.
///
/// Returns `Ok(None)` when none exists (including every non-regular or
/// edgeless component), and an error when the component exceeds `cap`.
pub fn is_locally_balanced(component: &[usize], g: &TypeGraph, cap: usize) -> Result<Option<BalancedPartition>> {
    let m = component.len();
    if m > cap {
        return Err(Error::ComponentTooLarge { size: m, cap });
    }
    let Some(d) = regular_degree(component, g) else {
        return Ok(None);
    };
    if d == 0 || m < 2 {
        return Ok(None);
    }
    let index: std::collections::BTreeMap<usize, usize> = component.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let adj: Vec<Vec<usize>> = component
        .iter()
        .map(|&u| {
            g.influence_neighbors(u)
                .iter()
                .filter_map(|v| index.get(v).copied())
                .collect()
        })
        .collect();

    for k in 2..=m {
        if d % (k - 1) != 0 || !m.is_multiple_of(k) {
            continue;
        }
        let mut search = BalanceSearch {
            nodes: component,
            adj: adj.clone(),
            k,
            per_part: d / (k - 1),
            size: m / k,
            assign: vec![None; m],
            part_sizes: vec![0; k],
            counts: vec![vec![0; k]; m],
        };
        if search.solve(0, 0) {
            let mut parts = vec![Vec::new(); k];
            for (i, a) in search.assign.iter().enumerate() {
                parts[a.unwrap()].push(component[i]);
            }
            return Ok(Some(BalancedPartition { degree: d, parts }));
        }
    }
    Ok(None)
}
