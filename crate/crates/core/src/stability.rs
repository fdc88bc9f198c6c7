//! Lyapunov and universal stability of equilibria.
//!
//! Classification walks a ladder of structural criteria; each verdict names
//! the criterion that produced it. The adversarial perturbations that
//! demonstrate instability are exposed as [`PerturbationWitness`] values and
//! reused by the empirical probe.

use std::collections::BTreeSet;
use std::fmt;

use crate::dynamics::interaction_masses;
use crate::equilibrium::{equilibrium_check, DEFAULT_EQUILIBRIUM_TOL};
use crate::error::{Error, Result};
use crate::graph::{
    active_set, active_subgraph, bfs_distances, induced_components, is_bipartite, is_independent, is_locally_balanced,
    is_regular_uniform, min_pairwise_distance, verify_balanced_partition, BalancedPartition, LOCALLY_BALANCED_CAP,
    UNIFORM_TOL,
};
use crate::model::{MassVector, ModelParams, TypeGraph, Variant};
use crate::probe::ProbeReport;

/// Margin for "strictly greater interaction mass".
pub const DOMINANCE_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Unknown => "unknown",
        })
    }
}

/// Criterion behind a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// No flow can ever occur (edgeless influence graph, or global with alpha = 1).
    StaticDynamics,
    /// Global model, alpha > 1: stable iff the active set is independent.
    GlobalIffIndependent,
    /// Independent active set whose members out-weigh every inactive neighbor.
    DominantIndependent,
    /// Active nodes pairwise at distance >= 3.
    ThreeSeparated,
    /// Local model, alpha = 1: active nodes pairwise at distance >= 4.
    DistanceFour,
    /// Local model, alpha = 1, symmetric two-endpoint state on the 4-path.
    FourPathEscape,
    /// Equilibrium for a single alpha only, so not for every alpha > 1.
    NotRegularUniform,
    /// A non-trivial active component is locally balanced.
    LocallyBalanced,
    /// Independent active set with an inactive node seeing two actives.
    IndependentNotThreeSeparated,
    /// Bipartite influence components: universal stability iff 3-separated.
    BipartiteIff,
    /// Open case: conjecturally universally stable iff 3-separated.
    DistanceThreeConjecture,
    Empirical,
}

impl Rule {
    pub fn id(&self) -> &'static str {
        match self {
            Rule::StaticDynamics => "static-dynamics",
            Rule::GlobalIffIndependent => "global-iff-independent",
            Rule::DominantIndependent => "dominant-independent",
            Rule::ThreeSeparated => "three-separated",
            Rule::DistanceFour => "distance-4",
            Rule::FourPathEscape => "four-path-escape",
            Rule::NotRegularUniform => "not-regular-uniform",
            Rule::LocallyBalanced => "locally-balanced",
            Rule::IndependentNotThreeSeparated => "independent-not-3-separated",
            Rule::BipartiteIff => "bipartite-iff-3-separated",
            Rule::DistanceThreeConjecture => "distance-3-conjecture",
            Rule::Empirical => "empirical",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub verdict: Verdict,
    /// Always set unless the verdict is `Unknown` without annotation.
    pub rule: Option<Rule>,
    pub details: String,
    pub empirical: Option<ProbeReport>,
}

impl StabilityVerdict {
    fn new(verdict: Verdict, rule: Rule, details: impl Into<String>) -> Self {
        Self {
            verdict,
            rule: Some(rule),
            details: details.into(),
            empirical: None,
        }
    }

    fn unknown(details: impl Into<String>) -> Self {
        Self {
            verdict: Verdict::Unknown,
            rule: None,
            details: details.into(),
            empirical: None,
        }
    }

    /// Attaches probe statistics. An unknown verdict becomes `Unstable`
    /// (rule `empirical`) when some probe trajectory escaped.
    pub fn with_empirical(mut self, report: ProbeReport) -> Self {
        if self.verdict == Verdict::Unknown && report.escape_count() > 0 {
            self.verdict = Verdict::Unstable;
            self.rule = Some(Rule::Empirical);
            self.details = format!(
                "{}; {} of {} probe runs escaped beyond {:e}",
                self.details,
                report.escape_count(),
                report.runs.len(),
                report.threshold
            );
        }
        self.empirical = Some(report);
        self
    }
}

fn fmt_set(s: &BTreeSet<usize>) -> String {
    let items: Vec<String> = s.iter().map(|u| u.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

/// Node order of `g` as a path `a–b–c–d`, if it is the 4-node path.
fn four_path_order(g: &TypeGraph) -> Option<[usize; 4]> {
    if g.n() != 4 || g.influence_edge_count() != 3 {
        return None;
    }
    let start = (0..4).find(|&u| g.degree(u) == 1)?;
    let mut order = vec![start];
    let mut prev = usize::MAX;
    let mut cur = start;
    while order.len() < 4 {
        let next = g.influence_neighbors(cur).iter().copied().find(|&v| v != prev)?;
        prev = cur;
        cur = next;
        order.push(cur);
    }
    (g.degree(cur) == 1).then(|| [order[0], order[1], order[2], order[3]])
}

/// Lyapunov stability of an equilibrium at the given parameters.
pub fn classify_stability(x: &MassVector, params: &ModelParams, g: &TypeGraph) -> Result<StabilityVerdict> {
    let report = equilibrium_check(x, params, g, DEFAULT_EQUILIBRIUM_TOL)?;
    if !report.is_equilibrium {
        return Err(Error::NotAnEquilibrium {
            residual: report.fixed_point_residual,
        });
    }
    let alpha = params.alpha();
    let active = active_set(x, 0.0);
    let independent = is_independent(&active, g);

    if g.influence_edge_count() == 0 {
        return Ok(StabilityVerdict::new(
            Verdict::Stable,
            Rule::StaticDynamics,
            "influence graph has no edges",
        ));
    }
    if g.variant() == Variant::Global && alpha == 1.0 {
        return Ok(StabilityVerdict::new(
            Verdict::Stable,
            Rule::StaticDynamics,
            "global model with alpha = 1: every interaction mass equals the total mass",
        ));
    }

    if g.variant() == Variant::Global {
        return Ok(if independent {
            StabilityVerdict::new(
                Verdict::Stable,
                Rule::GlobalIffIndependent,
                format!("active set {} is independent", fmt_set(&active)),
            )
        } else {
            StabilityVerdict::new(
                Verdict::Unstable,
                Rule::GlobalIffIndependent,
                format!("active set {} contains adjacent nodes", fmt_set(&active)),
            )
        });
    }

    if independent {
        let masses = interaction_masses(x, params, g);
        let dominant = active.iter().all(|&u| {
            g.influence_neighbors(u)
                .iter()
                .all(|&v| masses[u] > masses[v] + DOMINANCE_MARGIN)
        });
        if dominant {
            return Ok(StabilityVerdict::new(
                Verdict::Stable,
                Rule::DominantIndependent,
                "independent active set; every active node has strictly larger interaction mass than its inactive neighbors",
            ));
        }
    }

    if g.variant() == Variant::Local {
        let dist = min_pairwise_distance(&active, g);
        if alpha > 1.0 && dist.is_none_or(|d| d >= 3) {
            return Ok(StabilityVerdict::new(
                Verdict::Stable,
                Rule::ThreeSeparated,
                "active nodes pairwise at distance >= 3",
            ));
        }
        if alpha == 1.0 {
            if dist.is_none_or(|d| d >= 4) {
                return Ok(StabilityVerdict::new(
                    Verdict::Stable,
                    Rule::DistanceFour,
                    "alpha = 1 and active nodes pairwise at distance >= 4",
                ));
            }
            if let Some([a, _, _, d]) = four_path_order(g) {
                let ends: BTreeSet<usize> = [a, d].into();
                if active == ends && (x[a] - x[d]).abs() <= UNIFORM_TOL {
                    return Ok(StabilityVerdict::new(
                        Verdict::Unstable,
                        Rule::FourPathEscape,
                        "alpha = 1 on the 4-path with equal mass on both endpoints: mass leaks into the middle pair",
                    ));
                }
            }
        }
    }

    Ok(StabilityVerdict::unknown("no criterion applies"))
}

/// How `x` can be an equilibrium of the local model for alpha > 1.
enum AlphaRange {
    /// Equilibrium for every alpha.
    All,
    /// Equilibrium only at this alpha.
    Single(f64),
}

fn local_equilibrium_alphas(x: &MassVector, g: &TypeGraph) -> Option<AlphaRange> {
    let h = active_subgraph(x, g, 0.0);
    let mut pinned: Option<f64> = None;
    for comp in h.nontrivial_components() {
        let own: Vec<f64> = comp.iter().map(|&u| x[u]).collect();
        let nbr: Vec<f64> = comp
            .iter()
            .map(|&u| g.influence_neighbors(u).iter().map(|&v| x[v]).sum())
            .collect();
        let lo = own.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = own.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let alpha = if hi - lo <= UNIFORM_TOL {
            None
        } else {
            // N_u(alpha) = alpha * x_u + nbr_u must agree between the extremes.
            let i = own.iter().position(|&v| v == lo).unwrap();
            let j = own.iter().position(|&v| v == hi).unwrap();
            let a = (nbr[i] - nbr[j]) / (own[j] - own[i]);
            if a <= 1.0 {
                return None;
            }
            Some(a)
        };
        let probe_alpha = alpha.unwrap_or(2.0);
        let ns: Vec<f64> = own.iter().zip(&nbr).map(|(o, s)| probe_alpha * o + s).collect();
        let spread =
            ns.iter().copied().fold(f64::NEG_INFINITY, f64::max) - ns.iter().copied().fold(f64::INFINITY, f64::min);
        if spread > DEFAULT_EQUILIBRIUM_TOL {
            return None;
        }
        if let Some(a) = alpha {
            match pinned {
                Some(p) if (p - a).abs() > 1e-9 * p.max(1.0) => return None,
                _ => pinned = Some(a),
            }
        }
    }
    Some(match pinned {
        Some(a) => AlphaRange::Single(a),
        None => AlphaRange::All,
    })
}

/// Stability for every alpha > 1 in the local model.
///
/// `x` must be an equilibrium of the local model for at least one alpha > 1;
/// otherwise [`Error::NotAnEquilibrium`] is returned.
pub fn classify_universal_stability(x: &MassVector, g: &TypeGraph) -> Result<StabilityVerdict> {
    if g.variant() != Variant::Local {
        return Err(Error::UnsupportedVariant(format!(
            "universal stability is defined for the local model, graph is {}",
            g.variant()
        )));
    }
    x.check_len(g)?;
    let range = match local_equilibrium_alphas(x, g) {
        Some(r) => r,
        None => {
            let a2 = ModelParams::with_alpha(2.0)?;
            let residual = equilibrium_check(x, &a2, g, DEFAULT_EQUILIBRIUM_TOL)?.fixed_point_residual;
            return Err(Error::NotAnEquilibrium { residual });
        }
    };
    let active = active_set(x, 0.0);
    let dist = min_pairwise_distance(&active, g);
    if dist.is_none_or(|d| d >= 3) {
        return Ok(StabilityVerdict::new(
            Verdict::Stable,
            Rule::ThreeSeparated,
            "active nodes pairwise at distance >= 3: stable for every alpha > 1",
        ));
    }
    if let AlphaRange::Single(a) = range {
        return Ok(StabilityVerdict::new(
            Verdict::Unstable,
            Rule::NotRegularUniform,
            format!("an active component is not regular with uniform mass; equilibrium only at alpha = {a}"),
        ));
    }
    let h = active_subgraph(x, g, 0.0);
    for comp in h.nontrivial_components() {
        debug_assert!(is_regular_uniform(x, comp, g));
        if let Ok(Some(partition)) = is_locally_balanced(comp, g, LOCALLY_BALANCED_CAP) {
            return Ok(StabilityVerdict::new(
                Verdict::Unstable,
                Rule::LocallyBalanced,
                format!(
                    "component {:?} is {}-regular and locally balanced with parts {:?}; unstable at alpha = {}",
                    comp,
                    partition.degree,
                    partition.parts,
                    partition.degree + 1
                ),
            ));
        }
    }
    if h.nontrivial_components().next().is_none() {
        let w = witness_not_3separated(x, g, None)?;
        return Ok(StabilityVerdict::new(
            Verdict::Unstable,
            Rule::IndependentNotThreeSeparated,
            format!("independent but not 3-separated; unstable at alpha = {}", w.alpha),
        ));
    }
    let all_nodes: BTreeSet<usize> = (0..g.n()).collect();
    if induced_components(&all_nodes, g).iter().all(|c| is_bipartite(c, g)) {
        return Ok(StabilityVerdict::new(
            Verdict::Unstable,
            Rule::BipartiteIff,
            "bipartite influence components and active nodes closer than distance 3",
        ));
    }
    Ok(StabilityVerdict {
        verdict: Verdict::Unknown,
        rule: Some(Rule::DistanceThreeConjecture),
        details: "regular uniform component that is not locally balanced; conjecturally not universally stable".into(),
        empirical: None,
    })
}

/// Which adversarial construction a witness follows.
#[derive(Debug, Clone, PartialEq)]
pub enum WitnessKind {
    /// Mass `delta` placed on inactive `node`, drawn proportionally from its
    /// active neighbors. Works for alpha = 1 + eta².
    NotThreeSeparated {
        node: usize,
        eta: f64,
        mu: f64,
        neighbor_sum: f64,
    },
    /// Mass `delta` moved uniformly from the other parts onto `parts[0]` of a
    /// locally balanced component. Works for alpha = d + 1.
    LocallyBalanced { partition: BalancedPartition },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationWitness {
    /// Self-affinity at which the construction destabilizes the equilibrium.
    pub alpha: f64,
    pub x: MassVector,
    pub construction: WitnessKind,
    /// Mass moved by the perturbation; the L1 distance to the equilibrium is `2 * delta`.
    pub delta: f64,
    /// Exclusive upper bound on admissible `delta`.
    pub delta_max: f64,
    pub predicted_escape: String,
}

/// Moves `amount` onto `target`, taking it from `sources` in proportion to
/// their current mass.
fn transfer_proportional(x: &MassVector, target: usize, sources: &[usize], amount: f64) -> MassVector {
    let mut v = x.as_slice().to_vec();
    let total: f64 = sources.iter().map(|&s| v[s]).sum();
    for &s in sources {
        v[s] -= amount * v[s] / total;
        if v[s] < 0.0 {
            v[s] = 0.0;
        }
    }
    v[target] += amount;
    MassVector::from_raw(v)
}

/// Inactive nodes with at least two active influence-neighbors.
pub fn crowded_inactive_nodes(x: &MassVector, g: &TypeGraph) -> Vec<usize> {
    let active = active_set(x, 0.0);
    (0..g.n())
        .filter(|u| !active.contains(u))
        .filter(|&u| g.influence_neighbors(u).iter().filter(|v| active.contains(v)).count() >= 2)
        .collect()
}

/// Instability witness for an independent but not 3-separated equilibrium.
///
/// `delta` defaults to half of the admissible range `(0, s − mu − eta²)`.
pub fn witness_not_3separated(x_star: &MassVector, g: &TypeGraph, delta: Option<f64>) -> Result<PerturbationWitness> {
    x_star.check_len(g)?;
    let active = active_set(x_star, 0.0);
    if !is_independent(&active, g) {
        return Err(Error::WitnessPrecondition("active set is not independent".into()));
    }
    let &u = crowded_inactive_nodes(x_star, g)
        .first()
        .ok_or(Error::NoQualifyingNode)?;
    let sources: Vec<usize> = g
        .influence_neighbors(u)
        .iter()
        .copied()
        .filter(|v| active.contains(v))
        .collect();
    let masses: Vec<f64> = sources.iter().map(|&v| x_star[v]).collect();
    let eta = masses.iter().copied().fold(f64::INFINITY, f64::min);
    let mu = masses.iter().copied().fold(0.0, f64::max);
    let s: f64 = masses.iter().sum();
    let delta_max = s - mu - eta * eta;
    let delta = delta.unwrap_or(delta_max / 2.0);
    if !(delta > 0.0 && delta < delta_max) {
        return Err(Error::WitnessPrecondition(format!(
            "delta {delta} outside (0, {delta_max})"
        )));
    }
    Ok(PerturbationWitness {
        alpha: 1.0 + eta * eta,
        x: transfer_proportional(x_star, u, &sources, delta),
        construction: WitnessKind::NotThreeSeparated {
            node: u,
            eta,
            mu,
            neighbor_sum: s,
        },
        delta,
        delta_max,
        predicted_escape: format!("mass on node {u} grows to at least {delta_max}"),
    })
}

/// Instability witness for a uniform equilibrium on a locally balanced component.
pub fn witness_locally_balanced(
    x_star: &MassVector,
    g: &TypeGraph,
    component: &[usize],
    partition: &BalancedPartition,
    delta: f64,
) -> Result<PerturbationWitness> {
    x_star.check_len(g)?;
    let d = verify_balanced_partition(component, &partition.parts, g)?;
    if !is_regular_uniform(x_star, component, g) {
        return Err(Error::WitnessPrecondition(
            "mass is not uniform on the component".into(),
        ));
    }
    let k = partition.parts.len();
    let size = partition.parts[0].len();
    let mu = x_star[component[0]];
    let per_gain = delta / size as f64;
    let per_loss = delta / (size * (k - 1)) as f64;
    let delta_max = mu * (size * (k - 1)) as f64;
    if !(delta > 0.0 && delta < delta_max) {
        return Err(Error::WitnessPrecondition(format!(
            "delta {delta} outside (0, {delta_max})"
        )));
    }
    let mut v = x_star.as_slice().to_vec();
    for (i, part) in partition.parts.iter().enumerate() {
        for &u in part {
            if i == 0 {
                v[u] += per_gain;
            } else {
                v[u] -= per_loss;
            }
        }
    }
    Ok(PerturbationWitness {
        alpha: (d + 1) as f64,
        x: MassVector::from_raw(v),
        construction: WitnessKind::LocallyBalanced {
            partition: partition.clone(),
        },
        delta,
        delta_max,
        predicted_escape: format!("all mass outside part {:?} drains to zero", partition.parts[0]),
    })
}

/// Structured perturbations of L1 size `l1` that target the known escape
/// routes of `x_star`. Returned with a short label each.
pub fn structured_perturbations(x_star: &MassVector, g: &TypeGraph, l1: f64) -> Vec<(String, MassVector)> {
    let mut out = Vec::new();
    if l1 <= 0.0 {
        return out;
    }
    let moved = l1 / 2.0;
    let h = active_subgraph(x_star, g, 0.0);

    // Shift mass along an edge inside each non-trivial active component.
    for comp in h.nontrivial_components() {
        let Some(&(a, b)) = h.edges.iter().find(|(a, _)| comp.contains(a)) else {
            continue;
        };
        let m = moved.min(x_star[b]);
        let mut v = x_star.as_slice().to_vec();
        v[a] += m;
        v[b] -= m;
        out.push((format!("pair-shift {b}->{a}"), MassVector::from_raw(v)));

        if let Ok(Some(p)) = is_locally_balanced(comp, g, LOCALLY_BALANCED_CAP) {
            if let Ok(w) = witness_locally_balanced(x_star, g, comp, &p, moved) {
                out.push(("locally-balanced".to_string(), w.x));
            }
        }
    }

    // Feed an inactive node that sits between several actives.
    if is_independent(&h.nodes, g) {
        for u in crowded_inactive_nodes(x_star, g) {
            let sources: Vec<usize> = g
                .influence_neighbors(u)
                .iter()
                .copied()
                .filter(|v| h.nodes.contains(v))
                .collect();
            let total: f64 = sources.iter().map(|&s| x_star[s]).sum();
            if moved < total {
                out.push((
                    format!("feed-inactive {u}"),
                    transfer_proportional(x_star, u, &sources, moved),
                ));
            }
        }
    }

    // Symmetric leak into both interior nodes of a length-3 path between actives.
    for &a in &h.nodes {
        let dist = bfs_distances(a, g);
        for &d in h.nodes.range(a + 1..) {
            if dist[d] != Some(3) {
                continue;
            }
            let route = g.influence_neighbors(a).iter().find_map(|&b| {
                g.influence_neighbors(b)
                    .iter()
                    .find(|&&c| g.is_influence_edge(c, d) && !h.nodes.contains(&b) && !h.nodes.contains(&c))
                    .map(|&c| (b, c))
            });
            if let Some((b, c)) = route {
                let m = (moved / 2.0).min(x_star[a]).min(x_star[d]);
                let mut v = x_star.as_slice().to_vec();
                v[a] -= m;
                v[b] += m;
                v[d] -= m;
                v[c] += m;
                out.push((format!("symmetric-leak {a}-{b}-{c}-{d}"), MassVector::from_raw(v)));
            }
        }
    }
    out
}
