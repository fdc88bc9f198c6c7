//! Data model: type graphs, model parameters, mass vectors and flow fields.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Index;

use crate::error::{Error, Result};

/// Tolerance on the total mass of a freshly constructed mass vector.
pub const MASS_SUM_TOL: f64 = 1e-9;

/// Which interaction graph accompanies the influence graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Everyone interacts with everyone; the interaction graph is complete.
    Global,
    /// Interaction graph equals the influence graph.
    Local,
    /// Arbitrary interaction graph containing the influence graph.
    General,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Global => "global",
            Variant::Local => "local",
            Variant::General => "general",
        })
    }
}

/// How the interaction graph is specified when building a [`TypeGraph`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Interaction {
    Global,
    Local,
    Explicit(Vec<(usize, usize)>),
}

/// Influence and interaction graphs over `n` types.
///
/// Edges are undirected and stored as `(u, v)` with `u < v`. The influence
/// graph is always a subgraph of the interaction graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeGraph {
    n: usize,
    variant: Variant,
    influence: BTreeSet<(usize, usize)>,
    interaction: BTreeSet<(usize, usize)>,
    influence_adj: Vec<Vec<usize>>,
    interaction_adj: Vec<Vec<usize>>,
}

fn normalize_edges(n: usize, edges: &[(usize, usize)]) -> Result<BTreeSet<(usize, usize)>> {
    let mut set = BTreeSet::new();
    for &(u, v) in edges {
        if u >= n || v >= n {
            return Err(Error::EdgeOutOfRange { u, v, n });
        }
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        set.insert((u.min(v), u.max(v)));
    }
    Ok(set)
}

fn adjacency(n: usize, edges: &BTreeSet<(usize, usize)>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

impl TypeGraph {
    pub fn new(n: usize, influence: &[(usize, usize)], interaction: Interaction) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let influence = normalize_edges(n, influence)?;
        let (variant, interaction) = match interaction {
            Interaction::Global => {
                let complete = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
                (Variant::Global, complete)
            }
            Interaction::Local => (Variant::Local, influence.clone()),
            Interaction::Explicit(list) => {
                let set = normalize_edges(n, &list)?;
                if let Some(&(u, v)) = influence.difference(&set).next() {
                    return Err(Error::InfluenceNotSubset { u, v });
                }
                (Variant::General, set)
            }
        };
        Ok(Self {
            n,
            variant,
            influence_adj: adjacency(n, &influence),
            interaction_adj: adjacency(n, &interaction),
            influence,
            interaction,
        })
    }

    pub fn global(n: usize, influence: &[(usize, usize)]) -> Result<Self> {
        Self::new(n, influence, Interaction::Global)
    }

    pub fn local(n: usize, influence: &[(usize, usize)]) -> Result<Self> {
        Self::new(n, influence, Interaction::Local)
    }

    /// Same influence graph, different interaction variant. `General` keeps
    /// the current interaction edges.
    pub fn with_variant(&self, variant: Variant) -> Self {
        let edges: Vec<_> = self.influence.iter().copied().collect();
        let interaction = match variant {
            Variant::Global => Interaction::Global,
            Variant::Local => Interaction::Local,
            Variant::General => Interaction::Explicit(self.interaction.iter().copied().collect()),
        };
        Self::new(self.n, &edges, interaction).expect("edges already validated")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn influence_edges(&self) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.influence.iter().copied()
    }

    pub fn interaction_edges(&self) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.interaction.iter().copied()
    }

    pub fn influence_edge_count(&self) -> usize {
        self.influence.len()
    }

    /// Influence neighbors `I_u`, sorted.
    pub fn influence_neighbors(&self, u: usize) -> &[usize] {
        &self.influence_adj[u]
    }

    /// Interaction neighbors `Γ_u`, sorted.
    pub fn interaction_neighbors(&self, u: usize) -> &[usize] {
        &self.interaction_adj[u]
    }

    pub fn is_influence_edge(&self, u: usize, v: usize) -> bool {
        self.influence.contains(&(u.min(v), u.max(v)))
    }

    pub fn degree(&self, u: usize) -> usize {
        self.influence_adj[u].len()
    }

    pub fn check_node(&self, u: usize) -> Result<()> {
        if u < self.n {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { node: u, n: self.n })
        }
    }
}

/// Self-affinity weight `alpha >= 1` and switch probability `p` in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    alpha: f64,
    p: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, p: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 1.0) {
            return Err(Error::InvalidParams(format!("alpha must be >= 1, got {alpha}")));
        }
        if !(p.is_finite() && p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParams(format!("p must lie in (0, 1], got {p}")));
        }
        Ok(Self { alpha, p })
    }

    /// `p = 1`.
    pub fn with_alpha(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// Population fractions per type.
#[derive(Debug, Clone, PartialEq)]
pub struct MassVector(Vec<f64>);

impl MassVector {
    /// Validates non-negativity and that the entries sum to 1 within
    /// [`MASS_SUM_TOL`]. No renormalization is performed.
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidMasses("empty vector".into()));
        }
        if let Some((i, v)) = x.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidMasses(format!("entry {i} is {v}")));
        }
        let sum: f64 = x.iter().sum();
        if (sum - 1.0).abs() > MASS_SUM_TOL {
            return Err(Error::InvalidMasses(format!("entries sum to {sum}, expected 1")));
        }
        Ok(Self(x))
    }

    /// Builds a vector and checks its length against `g`.
    pub fn for_graph(x: Vec<f64>, g: &TypeGraph) -> Result<Self> {
        let m = Self::new(x)?;
        m.check_len(g)?;
        Ok(m)
    }

    /// Normalizes non-negative weights to sum to one.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        let sum: f64 = w.iter().sum();
        if !(sum.is_finite() && sum > 0.0) || w.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidMasses(
                "weights must be non-negative with positive sum".into(),
            ));
        }
        Self::new(w.iter().map(|v| v / sum).collect())
    }

    /// All mass on node `u`.
    pub fn point(n: usize, u: usize) -> Self {
        let mut x = vec![0.0; n];
        x[u] = 1.0;
        Self(x)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub(crate) fn from_raw(x: Vec<f64>) -> Self {
        Self(x)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn l1_distance(&self, other: &MassVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn max_distance(&self, other: &MassVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Zeroes every entry at or below `eps` and renormalizes. Used to read
    /// off the support of a simulated limit, whose vanishing coordinates
    /// decay toward zero without reaching it.
    pub fn snapped(&self, eps: f64) -> MassVector {
        let w: Vec<f64> = self.0.iter().map(|&v| if v > eps { v } else { 0.0 }).collect();
        let sum: f64 = w.iter().sum();
        if sum > 0.0 {
            MassVector(w.into_iter().map(|v| v / sum).collect())
        } else {
            self.clone()
        }
    }

    pub(crate) fn check_len(&self, g: &TypeGraph) -> Result<()> {
        if self.len() == g.n() {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: g.n(),
                found: self.len(),
            })
        }
    }
}

impl Index<usize> for MassVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Net flow on every influence edge at one time step.
///
/// Stored once per undirected edge `(u, v)`, `u < v`, as the flow from `u`
/// to `v`; the reverse orientation is the negation, so antisymmetry holds by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    edges: Vec<((usize, usize), f64)>,
}

impl FlowField {
    pub(crate) fn from_edges(edges: Vec<((usize, usize), f64)>) -> Self {
        debug_assert!(edges.iter().all(|((u, v), _)| u < v));
        Self { edges }
    }

    /// Net flow from `from` to `to`, `None` if the pair is not an influence edge.
    pub fn flow(&self, from: usize, to: usize) -> Option<f64> {
        let key = (from.min(to), from.max(to));
        self.edges.binary_search_by(|(e, _)| e.cmp(&key)).ok().map(|i| {
            let f = self.edges[i].1;
            if from < to {
                f
            } else {
                -f
            }
        })
    }

    /// `((u, v), f_{u→v})` with `u < v`, in edge order.
    pub fn iter(&self) -> impl ExactSizeIterator<Item = ((usize, usize), f64)> + '_ {
        self.edges.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.edges.iter().map(|(_, f)| f.abs()).fold(0.0, f64::max)
    }
}
