//! Checks against independent oracles: exact rational arithmetic for the
//! update rule and brute-force set-partition search for local balance.

use cultdyn::dynamics::{interaction_masses, step_direct, step_flows};
use cultdyn::generators::{clique, cycle, path, star};
use cultdyn::graph::{is_locally_balanced, LOCALLY_BALANCED_CAP};
use cultdyn::stability::{witness_locally_balanced, witness_not_3separated};
use cultdyn::{net_flow, simulate, MassVector, ModelParams, StopCriterion, TypeGraph, Variant};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Q = Ratio<i128>;

fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

fn to_f64(r: Q) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// N_u = alpha x_u + sum over interaction neighbors.
fn exact_n(x: &[Q], alpha: Q, g: &TypeGraph) -> Vec<Q> {
    (0..g.n())
        .map(|u| {
            g.interaction_neighbors(u)
                .iter()
                .fold(alpha * x[u], |acc, &v| acc + x[v])
        })
        .collect()
}

/// Flow form: x_u + sum over influence neighbors of p x_v x_u (1/N_v - 1/N_u).
fn exact_step_flows(x: &[Q], alpha: Q, p: Q, g: &TypeGraph) -> Vec<Q> {
    let n = exact_n(x, alpha, g);
    (0..g.n())
        .map(|u| {
            g.influence_neighbors(u).iter().fold(x[u], |acc, &v| {
                if x[u] == q(0, 1) || x[v] == q(0, 1) {
                    acc
                } else {
                    acc + p * x[v] * x[u] * (n[v].recip() - n[u].recip())
                }
            })
        })
        .collect()
}

/// Direct form: members stay with prob (1 - p), or interact and either keep
/// their type (self or non-influencing partner) or adopt an influencing
/// partner's type; plus inflow from influencing neighbors.
fn exact_step_direct(x: &[Q], alpha: Q, p: Q, g: &TypeGraph) -> Vec<Q> {
    let n = exact_n(x, alpha, g);
    let zero = q(0, 1);
    (0..g.n())
        .map(|u| {
            if x[u] == zero {
                return zero;
            }
            let keep = g
                .interaction_neighbors(u)
                .iter()
                .filter(|v| !g.is_influence_edge(u, **v))
                .fold(alpha * x[u], |acc, &v| acc + x[v]);
            let gain =
                g.influence_neighbors(u).iter().fold(
                    zero,
                    |acc, &v| {
                        if x[v] == zero {
                            acc
                        } else {
                            acc + x[v] * x[u] / n[v]
                        }
                    },
                );
            (q(1, 1) - p) * x[u] + p * x[u] * keep / n[u] + p * gain
        })
        .collect()
}

fn floats(x: &[Q]) -> MassVector {
    MassVector::new(x.iter().map(|&r| to_f64(r)).collect()).unwrap()
}

fn start() -> Vec<Q> {
    vec![q(2, 5), q(1, 5), q(2, 5)]
}

#[test]
fn interaction_mass_examples() {
    let x = floats(&start());
    let a2 = ModelParams::with_alpha(2.0).unwrap();
    let global = path(3).unwrap().with_variant(Variant::Global);
    let local = path(3).unwrap();
    let want_g = exact_n(&start(), q(2, 1), &global);
    let want_l = exact_n(&start(), q(2, 1), &local);
    assert_eq!(want_g, vec![q(7, 5), q(6, 5), q(7, 5)]);
    assert_eq!(want_l, vec![q(1, 1), q(6, 5), q(1, 1)]);
    for (got, want) in interaction_masses(&x, &a2, &global).iter().zip(&want_g) {
        assert!((got - to_f64(*want)).abs() < 1e-15);
    }
    for (got, want) in interaction_masses(&x, &a2, &local).iter().zip(&want_l) {
        assert!((got - to_f64(*want)).abs() < 1e-15);
    }
}

#[test]
fn three_path_first_step_matches_exact_arithmetic() {
    let g = path(3).unwrap().with_variant(Variant::Global);
    let a2 = ModelParams::with_alpha(2.0).unwrap();
    let x = floats(&start());

    let n = exact_n(&start(), q(2, 1), &g);
    let f10 = q(1, 5) * q(2, 5) * (n[1].recip() - n[0].recip());
    assert_eq!(f10, q(1, 105));
    assert!((net_flow(&x, (1, 0), &a2, &g).unwrap() - to_f64(f10)).abs() < 1e-16);

    let flows = exact_step_flows(&start(), q(2, 1), q(1, 1), &g);
    let direct = exact_step_direct(&start(), q(2, 1), q(1, 1), &g);
    assert_eq!(flows, direct);
    assert_eq!(flows, vec![q(43, 105), q(19, 105), q(43, 105)]);

    let (a, _) = step_flows(&x, &a2, &g).unwrap();
    let b = step_direct(&x, &a2, &g).unwrap();
    for u in 0..3 {
        assert!((a[u] - to_f64(flows[u])).abs() < 1e-15);
        assert!((b[u] - to_f64(flows[u])).abs() < 1e-15);
    }
}

#[test]
fn two_clique_step() {
    let g = clique(2).unwrap().with_variant(Variant::Global);
    let x0 = vec![q(3, 5), q(2, 5)];
    let want = exact_step_direct(&x0, q(2, 1), q(1, 1), &g);
    assert_eq!(want, vec![q(87, 140), q(53, 140)]);
    assert_eq!(exact_step_flows(&x0, q(2, 1), q(1, 1), &g), want);
    let got = step_direct(&floats(&x0), &ModelParams::with_alpha(2.0).unwrap(), &g).unwrap();
    assert!((got[0] - 87.0 / 140.0).abs() < 1e-15 && (got[1] - 53.0 / 140.0).abs() < 1e-15);
}

#[test]
fn random_rational_instances_agree_with_exact_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let alphas = [q(1, 1), q(3, 2), q(2, 1), q(5, 2), q(3, 1)];
    let ps = [q(1, 4), q(1, 2), q(1, 1)];
    for _ in 0..300 {
        let n = rng.random_range(2..=5);
        let mut edges = Vec::new();
        let mut extra = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(0.5) {
                    edges.push((u, v));
                } else if rng.random_bool(0.5) {
                    extra.push((u, v));
                }
            }
        }
        let g = match rng.random_range(0..3) {
            0 => TypeGraph::global(n, &edges).unwrap(),
            1 => TypeGraph::local(n, &edges).unwrap(),
            _ => {
                let mut all = edges.clone();
                all.extend(extra);
                TypeGraph::new(n, &edges, cultdyn::Interaction::Explicit(all)).unwrap()
            }
        };
        // Small integer weights, some of them zero.
        let mut w: Vec<i128> = (0..n).map(|_| rng.random_range(0..4)).collect();
        if w.iter().all(|&v| v == 0) {
            w[0] = 1;
        }
        let total: i128 = w.iter().sum();
        let x: Vec<Q> = w.iter().map(|&v| q(v, total)).collect();
        let alpha = alphas[rng.random_range(0..alphas.len())];
        let p = ps[rng.random_range(0..ps.len())];

        let want = exact_step_flows(&x, alpha, p, &g);
        assert_eq!(want, exact_step_direct(&x, alpha, p, &g), "exact forms disagree");

        let params = ModelParams::new(to_f64(alpha), to_f64(p)).unwrap();
        let xf = floats(&x);
        let (a, _) = step_flows(&xf, &params, &g).unwrap();
        let b = step_direct(&xf, &params, &g).unwrap();
        for u in 0..n {
            assert!((a[u] - to_f64(want[u])).abs() < 1e-14);
            assert!((b[u] - to_f64(want[u])).abs() < 1e-14);
        }
    }
}

/// Brute force: does some set partition into k >= 2 blocks give every vertex
/// exactly d/(k-1) neighbors in every other block?
fn brute_force_balanced(n: usize, adj: &[Vec<bool>]) -> bool {
    let degs: Vec<usize> = (0..n).map(|u| adj[u].iter().filter(|&&b| b).count()).collect();
    if n < 2 || degs.iter().any(|&d| d != degs[0]) || degs[0] == 0 {
        return false;
    }
    let d = degs[0];
    // Restricted growth strings enumerate each set partition once.
    let mut rgs = vec![0usize; n];
    loop {
        let k = rgs.iter().max().unwrap() + 1;
        if k >= 2 && d.is_multiple_of(k - 1) {
            let want = d / (k - 1);
            let ok = (0..n).all(|u| {
                (0..k).all(|b| {
                    let c = (0..n).filter(|&v| adj[u][v] && rgs[v] == b).count();
                    if b == rgs[u] {
                        c == 0
                    } else {
                        c == want
                    }
                })
            });
            if ok {
                return true;
            }
        }
        // Next restricted growth string.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return false;
            }
            let prefix_max = rgs[..i].iter().max().copied().unwrap();
            if rgs[i] <= prefix_max {
                rgs[i] += 1;
                for r in rgs.iter_mut().skip(i + 1) {
                    *r = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

fn connected(n: usize, adj: &[Vec<bool>]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for v in 0..n {
            if adj[u][v] && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[test]
fn locally_balanced_matches_brute_force_for_all_small_graphs() {
    let mut checked = 0;
    let mut positives = 0;
    for n in 1..=6usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            let mut adj = vec![vec![false; n]; n];
            for &(u, v) in &edges {
                adj[u][v] = true;
                adj[v][u] = true;
            }
            if !connected(n, &adj) {
                continue;
            }
            let g = TypeGraph::local(n, &edges).unwrap();
            let comp: Vec<usize> = (0..n).collect();
            let got = is_locally_balanced(&comp, &g, LOCALLY_BALANCED_CAP).unwrap();
            let want = brute_force_balanced(n, &adj);
            assert_eq!(got.is_some(), want, "n={n} edges={edges:?}");
            if let Some(p) = got {
                // Recount the returned partition.
                let k = p.parts.len();
                let per = p.degree / (k - 1);
                for (i, part) in p.parts.iter().enumerate() {
                    for &u in part {
                        for (j, other) in p.parts.iter().enumerate() {
                            let c = other.iter().filter(|&&v| adj[u][v]).count();
                            assert_eq!(c, if i == j { 0 } else { per });
                        }
                    }
                }
                positives += 1;
            }
            checked += 1;
        }
    }
    // Labeled connected graphs on 1..=6 vertices.
    assert_eq!(checked, 1 + 1 + 4 + 38 + 728 + 26704);
    assert!(positives > 0);
}

#[test]
fn star_witness_escapes() {
    // Three leaves with mass 1/3 each around an empty center.
    let g = star(3).unwrap();
    let third = 1.0 / 3.0;
    let x_star = MassVector::new(vec![0.0, third, third, third]).unwrap();
    let w = witness_not_3separated(&x_star, &g, Some(1e-3)).unwrap();
    let params = ModelParams::with_alpha(w.alpha).unwrap();
    let traj = simulate(&w.x, &params, &g, &StopCriterion::default(), false).unwrap();
    let peak = traj.states.iter().map(|s| s[0]).fold(0.0, f64::max);
    assert!(
        peak >= w.delta_max - 1e-9,
        "center peaked at {peak}, bound {}",
        w.delta_max
    );
}

#[test]
fn path_witness_escapes() {
    let g = path(5).unwrap();
    let x_star = MassVector::new(vec![0.0, 0.5, 0.0, 0.5, 0.0]).unwrap();
    let w = witness_not_3separated(&x_star, &g, Some(1e-4)).unwrap();
    let params = ModelParams::with_alpha(w.alpha).unwrap();
    let traj = simulate(&w.x, &params, &g, &StopCriterion::default(), false).unwrap();
    let excursion = traj.states.iter().map(|s| s.l1_distance(&x_star)).fold(0.0, f64::max);
    assert!(excursion > 0.1, "excursion {excursion}");
}

#[test]
fn cycle_witness_drains_other_part() {
    let g = cycle(6).unwrap();
    let x_star = MassVector::uniform(6);
    let comp: Vec<usize> = (0..6).collect();
    let p = is_locally_balanced(&comp, &g, LOCALLY_BALANCED_CAP).unwrap().unwrap();
    let w = witness_locally_balanced(&x_star, &g, &comp, &p, 1e-3).unwrap();
    assert_eq!(w.alpha, 3.0);
    let params = ModelParams::with_alpha(w.alpha).unwrap();
    let traj = simulate(&w.x, &params, &g, &StopCriterion::default(), false).unwrap();
    let end = traj.final_state();
    let outside: f64 = (0..6).filter(|u| !p.parts[0].contains(u)).map(|u| end[u]).sum();
    assert!(outside < 1e-6, "{outside}");
}

fn complete_bipartite(a: usize, b: usize) -> TypeGraph {
    let edges: Vec<_> = (0..a).flat_map(|u| (a..a + b).map(move |v| (u, v))).collect();
    TypeGraph::local(a + b, &edges).unwrap()
}

#[test]
fn known_classes_up_to_ten_nodes_are_balanced() {
    let mut graphs = Vec::new();
    for n in 2..=10 {
        graphs.push((format!("K{n}"), clique(n).unwrap()));
    }
    for n in (4..=10).step_by(2) {
        graphs.push((format!("C{n}"), cycle(n).unwrap()));
    }
    for n in [3, 6, 9] {
        graphs.push((format!("C{n}"), cycle(n).unwrap()));
    }
    for m in 1..=5 {
        graphs.push((format!("K{m},{m}"), complete_bipartite(m, m)));
    }
    // Cube and K_{5,5} minus a perfect matching.
    let cube = [
        (0, 1),
        (1, 3),
        (3, 2),
        (2, 0),
        (4, 5),
        (5, 7),
        (7, 6),
        (6, 4),
        (0, 4),
        (1, 5),
        (2, 6),
        (3, 7),
    ];
    graphs.push(("Q3".into(), TypeGraph::local(8, &cube).unwrap()));
    let crown: Vec<_> = (0..5)
        .flat_map(|u| (0..5).filter(move |&v| v != u).map(move |v| (u, 5 + v)))
        .collect();
    graphs.push(("crown10".into(), TypeGraph::local(10, &crown).unwrap()));
    for (name, g) in graphs {
        let comp: Vec<usize> = (0..g.n()).collect();
        assert!(
            is_locally_balanced(&comp, &g, LOCALLY_BALANCED_CAP).unwrap().is_some(),
            "{name}"
        );
    }
    let c5 = cycle(5).unwrap();
    assert!(is_locally_balanced(&[0, 1, 2, 3, 4], &c5, LOCALLY_BALANCED_CAP)
        .unwrap()
        .is_none());
    let c7 = cycle(7).unwrap();
    assert!(
        is_locally_balanced(&(0..7).collect::<Vec<_>>(), &c7, LOCALLY_BALANCED_CAP)
            .unwrap()
            .is_none()
    );
}
