//! Empirical Lyapunov probe: perturb an equilibrium, simulate, and record how
//! far the trajectory wanders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{simulate_with, RunStatus, StopCriterion};
use crate::error::Result;
use crate::model::{MassVector, ModelParams, TypeGraph};
use crate::stability::structured_perturbations;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    /// L1 size of every perturbation.
    pub delta: f64,
    /// Number of random perturbations.
    pub trials: usize,
    pub seed: u64,
    /// A run escapes when its excursion exceeds `escape_factor * delta`.
    pub escape_factor: f64,
    /// Also run the structured escape perturbations.
    pub include_witnesses: bool,
    pub stop: StopCriterion,
}

impl ProbeConfig {
    pub fn new(delta: f64, trials: usize, seed: u64) -> Self {
        Self {
            delta,
            trials,
            seed,
            escape_factor: 10.0,
            include_witnesses: true,
            stop: StopCriterion::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRun {
    pub label: String,
    /// `sup_t ||x(t) − x*||_1`.
    pub excursion: f64,
    pub status: RunStatus,
    pub steps: usize,
    pub final_state: MassVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub delta: f64,
    pub threshold: f64,
    /// Random trials in index order, then structured perturbations.
    pub runs: Vec<ProbeRun>,
}

impl ProbeReport {
    pub fn max_excursion(&self) -> f64 {
        self.runs.iter().map(|r| r.excursion).fold(0.0, f64::max)
    }

    pub fn escape_count(&self) -> usize {
        self.runs.iter().filter(|r| r.excursion > self.threshold).count()
    }

    pub fn escape_fraction(&self) -> f64 {
        if self.runs.is_empty() {
            0.0
        } else {
            self.escape_count() as f64 / self.runs.len() as f64
        }
    }

    pub fn unconverged(&self) -> usize {
        self.runs.iter().filter(|r| r.status != RunStatus::Converged).count()
    }
}

/// Random perturbation of L1 size `l1`: mass moves between uniformly drawn
/// ordered pairs until `l1 / 2` has been transferred.
pub fn random_perturbation<R: Rng + ?Sized>(x: &MassVector, l1: f64, rng: &mut R) -> MassVector {
    let n = x.len();
    let mut v = x.as_slice().to_vec();
    let mut remaining = l1 / 2.0;
    if n < 2 {
        return x.clone();
    }
    let mut attempts = 0usize;
    while remaining > 0.0 {
        attempts += 1;
        let (a, b) = if attempts > 10_000 {
            // Fall back to the heaviest source.
            let a = (0..n).max_by(|&i, &j| v[i].total_cmp(&v[j])).unwrap();
            (a, (a + 1 + rng.random_range(0..n - 1)) % n)
        } else {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a == b {
                continue;
            }
            (a, b)
        };
        let m = v[a].min(remaining);
        if m <= 0.0 {
            continue;
        }
        v[a] -= m;
        v[b] += m;
        remaining -= m;
    }
    MassVector::from_raw(v)
}

fn run_one(
    start: MassVector,
    label: String,
    x_star: &MassVector,
    params: &ModelParams,
    g: &TypeGraph,
    stop: &StopCriterion,
) -> Result<ProbeRun> {
    let mut excursion = start.l1_distance(x_star);
    let summary = simulate_with(&start, params, g, stop, |_, _, _, next| {
        excursion = excursion.max(next.l1_distance(x_star));
    })?;
    Ok(ProbeRun {
        label,
        excursion,
        status: summary.status,
        steps: summary.steps_taken,
        final_state: summary.final_state,
    })
}

/// Perturbs `x_star` (assumed to be an equilibrium) `config.trials` times at
/// L1 size `config.delta`, plus the structured escape perturbations, and
/// simulates each run. Trials run in parallel; trial `i` draws from its own
/// stream of a ChaCha generator seeded with `config.seed`, so the report is
/// deterministic.
pub fn empirical_stability_probe(
    x_star: &MassVector,
    params: &ModelParams,
    g: &TypeGraph,
    config: &ProbeConfig,
) -> Result<ProbeReport> {
    x_star.check_len(g)?;
    let mut starts: Vec<(String, MassVector)> = (0..config.trials)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            (
                format!("random#{i}"),
                random_perturbation(x_star, config.delta, &mut rng),
            )
        })
        .collect();
    if config.include_witnesses {
        starts.extend(structured_perturbations(x_star, g, config.delta));
    }
    let runs = starts
        .into_par_iter()
        .map(|(label, start)| run_one(start, label, x_star, params, g, &config.stop))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbeReport {
        delta: config.delta,
        threshold: config.escape_factor * config.delta,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::path;
    use crate::model::Variant;

    #[test]
    fn random_perturbation_has_exact_size() {
        let x = MassVector::new(vec![0.5, 0.0, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let y = random_perturbation(&x, 1e-3, &mut rng);
            assert!((y.l1_distance(&x) - 1e-3).abs() < 1e-15);
            assert!(y.as_slice().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn zero_delta_means_zero_excursion() {
        let g = path(3).unwrap().with_variant(Variant::Global);
        let x = MassVector::new(vec![0.5, 0.0, 0.5]).unwrap();
        let a2 = ModelParams::with_alpha(2.0).unwrap();
        let r = empirical_stability_probe(&x, &a2, &g, &ProbeConfig::new(0.0, 5, 3)).unwrap();
        assert_eq!(r.runs.len(), 5);
        assert_eq!(r.max_excursion(), 0.0);
        assert_eq!(r.escape_count(), 0);
    }

    #[test]
    fn probe_is_deterministic() {
        let g = path(3).unwrap().with_variant(Variant::Global);
        let x = MassVector::new(vec![0.5, 0.0, 0.5]).unwrap();
        let a2 = ModelParams::with_alpha(2.0).unwrap();
        let cfg = ProbeConfig::new(1e-3, 8, 42);
        let a = empirical_stability_probe(&x, &a2, &g, &cfg).unwrap();
        let b = empirical_stability_probe(&x, &a2, &g, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
