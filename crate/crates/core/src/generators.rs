//! Standard topologies, random graphs and random mass vectors.
//!
//! Named topologies are built with the local variant; use
//! [`TypeGraph::with_variant`] for the others.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::model::{Interaction, MassVector, TypeGraph, Variant};

/// Path `0 – 1 – … – n-1`.
pub fn path(n: usize) -> Result<TypeGraph> {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    TypeGraph::local(n, &edges)
}

pub fn cycle(n: usize) -> Result<TypeGraph> {
    if n < 3 {
        return Err(Error::WrongTopology(format!("a cycle needs at least 3 nodes, got {n}")));
    }
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    TypeGraph::local(n, &edges)
}

pub fn clique(n: usize) -> Result<TypeGraph> {
    let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    TypeGraph::local(n, &edges)
}

/// Star with center 0 and `leaves` leaves `1..=leaves`.
pub fn star(leaves: usize) -> Result<TypeGraph> {
    let edges: Vec<_> = (1..=leaves).map(|v| (0, v)).collect();
    TypeGraph::local(leaves + 1, &edges)
}

/// Parses a named topology: `4path`, `6cycle`, `3clique`, `star4` (four
/// leaves), `K3`. An optional `:global` / `:local` suffix picks the variant.
pub fn builtin(name: &str) -> Result<TypeGraph> {
    let (base, variant) = match name.split_once(':') {
        Some((b, "global")) => (b, Variant::Global),
        Some((b, "local")) => (b, Variant::Local),
        Some((_, other)) => return Err(Error::Parse(format!("unknown variant suffix '{other}'"))),
        None => (name, Variant::Local),
    };
    let num = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::Parse(format!("unknown graph '{name}'")))
    };
    let g = if let Some(k) = base.strip_prefix("star") {
        star(num(k)?)?
    } else if let Some(k) = base.strip_suffix("star") {
        star(num(k)?)?
    } else if let Some(k) = base.strip_prefix('K') {
        clique(num(k)?)?
    } else if let Some(k) = base.strip_suffix("path") {
        path(num(k)?)?
    } else if let Some(k) = base.strip_suffix("cycle") {
        cycle(num(k)?)?
    } else if let Some(k) = base.strip_suffix("clique") {
        clique(num(k)?)?
    } else {
        return Err(Error::Parse(format!("unknown graph '{name}'")));
    };
    Ok(g.with_variant(variant))
}

/// Erdős–Rényi influence graph. For [`Variant::General`] every non-influence
/// pair joins the interaction graph with probability `extra_p`.
pub fn random_graph<R: Rng + ?Sized>(
    n: usize,
    edge_p: f64,
    variant: Variant,
    extra_p: f64,
    rng: &mut R,
) -> Result<TypeGraph> {
    let mut influence = Vec::new();
    let mut others = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(edge_p) {
                influence.push((u, v));
            } else {
                others.push((u, v));
            }
        }
    }
    let interaction = match variant {
        Variant::Global => Interaction::Global,
        Variant::Local => Interaction::Local,
        Variant::General => {
            let mut all = influence.clone();
            all.extend(others.into_iter().filter(|_| rng.random_bool(extra_p)));
            Interaction::Explicit(all)
        }
    };
    TypeGraph::new(n, &influence, interaction)
}

/// Uniform point on the simplex.
pub fn random_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> MassVector {
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    MassVector::from_weights(&w).expect("exponential weights are positive")
}

/// Uniform point on the face of the simplex spanned by `support`.
pub fn random_on_support<R: Rng + ?Sized>(n: usize, support: &[usize], rng: &mut R) -> MassVector {
    let mut w = vec![0.0; n];
    for &u in support {
        w[u] = Exp1.sample(rng);
    }
    MassVector::from_weights(&w).expect("non-empty support")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn builtin_names() {
        let g = builtin("4path").unwrap();
        assert_eq!((g.n(), g.influence_edge_count(), g.variant()), (4, 3, Variant::Local));
        assert_eq!(builtin("6cycle").unwrap().influence_edge_count(), 6);
        assert_eq!(builtin("K3").unwrap().influence_edge_count(), 3);
        assert_eq!(builtin("star4").unwrap().n(), 5);
        assert_eq!(builtin("3path:global").unwrap().variant(), Variant::Global);
        assert!(builtin("banana").is_err());
        assert!(builtin("3path:weird").is_err());
        assert!(builtin("2cycle").is_err());
    }

    #[test]
    fn random_graphs_respect_variant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for variant in [Variant::Global, Variant::Local, Variant::General] {
            let g = random_graph(6, 0.4, variant, 0.5, &mut rng).unwrap();
            assert_eq!(g.variant(), variant);
            assert!(g
                .influence_edges()
                .all(|(u, v)| g.interaction_neighbors(u).contains(&v)));
        }
        let x = random_simplex(5, &mut rng);
        assert!((x.total() - 1.0).abs() < 1e-12);
        let y = random_on_support(5, &[1, 3], &mut rng);
        assert_eq!((y[0], y[2], y[4]), (0.0, 0.0, 0.0));
    }
}
