//! Equilibrium detection.
//!
//! A state is a fixed point exactly when, inside every connected component of
//! the active subgraph, all nodes share the same interaction mass. The check
//! runs that structural test and also measures the fixed-point residual
//! `||step(x) − x||_1`, so the two can be compared.

use crate::dynamics::{interaction_masses, step_flows};
use crate::error::{Error, Result};
use crate::graph::active_subgraph;
use crate::model::{MassVector, ModelParams, TypeGraph};

pub const DEFAULT_EQUILIBRIUM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub is_equilibrium: bool,
    /// Active components with the interaction mass of each member.
    pub per_component_masses: Vec<(Vec<usize>, Vec<f64>)>,
    pub fixed_point_residual: f64,
    /// Largest spread of interaction masses within one component.
    pub max_spread: f64,
}

/// Structural and numeric equilibrium test.
///
/// `is_equilibrium` comes from the structural test with tolerance `tol` on
/// interaction masses. If the structural test passes, the residual is bounded
/// by `2·n·tol`; a larger residual is reported as
/// [`Error::InconsistentEquilibrium`].
pub fn equilibrium_check(x: &MassVector, params: &ModelParams, g: &TypeGraph, tol: f64) -> Result<EquilibriumReport> {
    equilibrium_check_eps(x, params, g, tol, 0.0)
}

/// [`equilibrium_check`] with an explicit activity threshold.
pub fn equilibrium_check_eps(
    x: &MassVector,
    params: &ModelParams,
    g: &TypeGraph,
    tol: f64,
    activity_eps: f64,
) -> Result<EquilibriumReport> {
    x.check_len(g)?;
    let masses = interaction_masses(x, params, g);
    let h = active_subgraph(x, g, activity_eps);
    let mut max_spread: f64 = 0.0;
    let per_component_masses: Vec<_> = h
        .components
        .iter()
        .map(|c| {
            let ns: Vec<f64> = c.iter().map(|&u| masses[u]).collect();
            let lo = ns.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            max_spread = max_spread.max(hi - lo);
            (c.clone(), ns)
        })
        .collect();
    let is_equilibrium = max_spread <= tol;

    let (next, _) = step_flows(x, params, g)?;
    let fixed_point_residual = next.l1_distance(x);

    let bound = 2.0 * g.n() as f64 * tol + 1e-12;
    if is_equilibrium && activity_eps == 0.0 && fixed_point_residual > bound {
        return Err(Error::InconsistentEquilibrium {
            residual: fixed_point_residual,
            bound,
        });
    }
    Ok(EquilibriumReport {
        is_equilibrium,
        per_component_masses,
        fixed_point_residual,
        max_spread,
    })
}
