//! Seeded, restarted Lloyd k-means with rotating k-means++ / farthest-first
//! initialization.
//!
//! Shared by angle-bin learning (2-d circle points) and visual-word training
//! (d-dim descriptors). Points are flat row-major `f64` slices.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64, restarts: usize) -> Self {
        Self {
            k,
            seed,
            restarts,
            max_iterations: 100,
            rel_tolerance: 1e-7,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct KMeansRun {
    /// `k * dim` row-major centroids.
    pub centroids: Vec<f64>,
    /// Nearest-centroid assignment of every input point, ties to lowest index.
    #[allow(dead_code)]
    pub assignments: Vec<usize>,
    /// Sum of squared distances of every point to its assigned centroid.
    pub objective: f64,
    /// Assignment-step objective per iteration of the winning restart.
    #[allow(dead_code)]
    pub objective_history: Vec<f64>,
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = x - y;
            t * t
        })
        .sum()
}

/// Counts distinct rows, stopping early once `stop_at` have been seen.
pub(crate) fn distinct_rows(points: &[f64], dim: usize, stop_at: usize) -> usize {
    let mut seen = std::collections::HashSet::new();
    for row in points.chunks_exact(dim) {
        let bits: Vec<u64> = row.iter().map(|v| v.to_bits()).collect();
        seen.insert(bits);
        if seen.len() >= stop_at {
            break;
        }
    }
    seen.len()
}

/// Runs `config.restarts` independent seeded k-means++ / Lloyd runs and keeps
/// the one with the lowest objective (ties to the lowest restart index).
pub(crate) fn run(points: &[f64], dim: usize, config: &KMeansConfig) -> Result<KMeansRun> {
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(Error::InvalidArgument(format!(
            "point buffer of {} values is not a multiple of dim {dim}",
            points.len()
        )));
    }
    let n = points.len() / dim;
    if n == 0 {
        return Err(Error::EmptyInput("no points to cluster".into()));
    }
    if config.k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if config.restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be >= 1".into()));
    }
    if !points.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument(
            "points contain non-finite values".into(),
        ));
    }
    let distinct = distinct_rows(points, dim, config.k);
    if distinct < config.k {
        return Err(Error::DegenerateInput(format!(
            "need at least {} distinct points, found {distinct}",
            config.k
        )));
    }

    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let sub_seeds: Vec<u64> = (0..config.restarts).map(|_| master.random()).collect();

    // Rotate the seeding strategy across restarts: greedy k-means++ picks
    // better average inits, plain k-means++ keeps the pool diverse, and
    // farthest-first covers well-separated configurations.
    let runs: Vec<KMeansRun> = sub_seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let strategy = match i % 3 {
                0 => InitStrategy::GreedyPlusPlus,
                1 => InitStrategy::PlusPlus,
                _ => InitStrategy::FarthestFirst,
            };
            run_single(points, n, dim, config, s, strategy)
        })
        .collect();

    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            a.objective
                .total_cmp(&b.objective)
                .then_with(|| ia.cmp(ib))
        })
        .map(|(_, r)| r)
        .expect("at least one restart");
    Ok(best)
}

#[derive(Clone, Copy)]
enum InitStrategy {
    GreedyPlusPlus,
    PlusPlus,
    FarthestFirst,
}

fn run_single(
    points: &[f64],
    n: usize,
    dim: usize,
    config: &KMeansConfig,
    seed: u64,
    strategy: InitStrategy,
) -> KMeansRun {
    let k = config.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = match strategy {
        InitStrategy::GreedyPlusPlus => init_plus_plus(points, n, dim, k, &mut rng, true),
        InitStrategy::PlusPlus => init_plus_plus(points, n, dim, k, &mut rng, false),
        InitStrategy::FarthestFirst => init_farthest_first(points, n, dim, k, &mut rng),
    };

    let mut assignments = vec![0usize; n];
    let mut point_cost = vec![0f64; n];
    let mut prev_assignments: Option<Vec<usize>> = None;
    let mut history = Vec::new();

    for _ in 0..config.max_iterations {
        assign_step(points, n, dim, &centroids, k, &mut assignments, &mut point_cost);
        fix_empty_clusters(
            points,
            n,
            dim,
            k,
            &mut centroids,
            &mut assignments,
            &mut point_cost,
        );
        let objective: f64 = point_cost.iter().sum();
        if let Some(prev) = history.last() {
            debug_assert!(
                objective <= prev * (1.0 + 1e-12) + 1e-12,
                "k-means objective increased: {prev} -> {objective}"
            );
        }
        let improved = history
            .last()
            .map(|prev: &f64| prev - objective > config.rel_tolerance * prev.max(f64::MIN_POSITIVE))
            .unwrap_or(true);
        history.push(objective);

        let stable = prev_assignments.as_deref() == Some(assignments.as_slice());
        prev_assignments = Some(assignments.clone());
        update_means(points, dim, k, &assignments, &mut centroids);
        if stable || !improved {
            break;
        }
    }

    // Final consistent state: assignments and objective against the returned
    // centroids.
    assign_step(points, n, dim, &centroids, k, &mut assignments, &mut point_cost);
    let objective = point_cost.iter().sum();
    KMeansRun {
        centroids,
        assignments,
        objective,
        objective_history: history,
    }
}

/// k-means++ seeding. In greedy mode each new centroid is drawn several
/// times from the squared-distance distribution and the candidate that
/// minimizes the resulting potential is kept; plain mode draws once.
fn init_plus_plus(
    points: &[f64],
    n: usize,
    dim: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
    greedy: bool,
) -> Vec<f64> {
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let first = rng.random_range(0..n);
    chosen.push(first);

    let candidates = if greedy {
        2 + (k as f64).ln().ceil().max(0.0) as usize
    } else {
        1
    };
    let mut d2: Vec<f64> = (0..n).map(|i| squared_distance(row(i), row(first))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            // All remaining mass sits on duplicates of chosen centroids; the
            // distinct-count precondition guarantees an unpicked value exists.
            let next = (0..n)
                .find(|&i| chosen.iter().all(|&c| row(c) != row(i)))
                .expect("distinct point exists");
            chosen.push(next);
            for (i, d) in d2.iter_mut().enumerate() {
                *d = d.min(squared_distance(row(i), row(next)));
            }
            continue;
        }
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for _ in 0..candidates {
            let cand = sample_by_weight(&d2, rng.random::<f64>() * total);
            let mut new_d2 = vec![0f64; n];
            let mut potential = 0.0;
            for i in 0..n {
                let d = squared_distance(row(i), row(cand)).min(d2[i]);
                new_d2[i] = d;
                potential += d;
            }
            if best.as_ref().is_none_or(|(_, p, _)| potential < *p) {
                best = Some((cand, potential, new_d2));
            }
        }
        let (cand, _, new_d2) = best.expect("at least one candidate");
        chosen.push(cand);
        d2 = new_d2;
    }

    let mut centroids = Vec::with_capacity(k * dim);
    for &c in &chosen {
        centroids.extend_from_slice(row(c));
    }
    centroids
}

/// Farthest-first traversal from a random start: each next centroid is the
/// point with the largest distance to the chosen set, ties to lowest index.
fn init_farthest_first(
    points: &[f64],
    n: usize,
    dim: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let first = rng.random_range(0..n);
    chosen.push(first);
    let mut d2: Vec<f64> = (0..n).map(|i| squared_distance(row(i), row(first))).collect();
    while chosen.len() < k {
        let mut next = 0usize;
        let mut best = -1.0f64;
        for (i, &w) in d2.iter().enumerate() {
            if w > best {
                best = w;
                next = i;
            }
        }
        if best <= 0.0 {
            // Duplicates everywhere; fall back to the first unpicked value.
            next = (0..n)
                .find(|&i| chosen.iter().all(|&c| row(c) != row(i)))
                .expect("distinct point exists");
        }
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(squared_distance(row(i), row(next)));
        }
    }
    let mut centroids = Vec::with_capacity(k * dim);
    for &c in &chosen {
        centroids.extend_from_slice(row(c));
    }
    centroids
}

/// Picks the index whose cumulative weight first covers `t`; zero-weight
/// entries (already-chosen points) are never picked.
fn sample_by_weight(weights: &[f64], mut t: f64) -> usize {
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            t -= w;
            if t <= 0.0 {
                return i;
            }
        }
    }
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .expect("positive weight exists")
}

fn assign_step(
    points: &[f64],
    n: usize,
    dim: usize,
    centroids: &[f64],
    k: usize,
    assignments: &mut [usize],
    point_cost: &mut [f64],
) {
    for i in 0..n {
        let p = &points[i * dim..(i + 1) * dim];
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for c in 0..k {
            let d = squared_distance(p, &centroids[c * dim..(c + 1) * dim]);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        assignments[i] = best;
        point_cost[i] = best_d;
    }
}

/// Re-seeds each empty cluster at the point farthest from its assigned
/// centroid (among clusters that keep at least one member), ties to the
/// lowest point index.
fn fix_empty_clusters(
    points: &[f64],
    n: usize,
    dim: usize,
    k: usize,
    centroids: &mut [f64],
    assignments: &mut [usize],
    point_cost: &mut [f64],
) {
    let mut counts = vec![0usize; k];
    for &a in assignments.iter() {
        counts[a] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut best: Option<usize> = None;
        for i in 0..n {
            if counts[assignments[i]] <= 1 {
                continue;
            }
            match best {
                None => best = Some(i),
                Some(b) if point_cost[i] > point_cost[b] => best = Some(i),
                _ => {}
            }
        }
        let moved = best.expect("a cluster with more than one member exists");
        counts[assignments[moved]] -= 1;
        assignments[moved] = empty;
        counts[empty] = 1;
        centroids[empty * dim..(empty + 1) * dim]
            .copy_from_slice(&points[moved * dim..(moved + 1) * dim]);
        point_cost[moved] = 0.0;
    }
}

fn update_means(points: &[f64], dim: usize, k: usize, assignments: &[usize], centroids: &mut [f64]) {
    centroids.fill(0.0);
    let mut counts = vec![0usize; k];
    for (i, &a) in assignments.iter().enumerate() {
        counts[a] += 1;
        let p = &points[i * dim..(i + 1) * dim];
        for (acc, v) in centroids[a * dim..(a + 1) * dim].iter_mut().zip(p) {
            *acc += v;
        }
    }
    for c in 0..k {
        debug_assert!(counts[c] > 0, "empty cluster after fix-up");
        let inv = 1.0 / counts[c] as f64;
        for v in &mut centroids[c * dim..(c + 1) * dim] {
            *v *= inv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive optimum over all assignments of `points` to `k` clusters.
    fn brute_force_objective(points: &[f64], dim: usize, k: usize) -> f64 {
        let n = points.len() / dim;
        let mut best = f64::INFINITY;
        let total = k.pow(n as u32);
        for code in 0..total {
            let mut assignment = vec![0usize; n];
            let mut c = code;
            for a in assignment.iter_mut() {
                *a = c % k;
                c /= k;
            }
            let mut sums = vec![0f64; k * dim];
            let mut counts = vec![0usize; k];
            for (i, &a) in assignment.iter().enumerate() {
                counts[a] += 1;
                for t in 0..dim {
                    sums[a * dim + t] += points[i * dim + t];
                }
            }
            let mut cost = 0.0;
            for (i, &a) in assignment.iter().enumerate() {
                for t in 0..dim {
                    let mean = sums[a * dim + t] / counts[a] as f64;
                    let dlt = points[i * dim + t] - mean;
                    cost += dlt * dlt;
                }
            }
            if cost < best {
                best = cost;
            }
        }
        best
    }

    #[test]
    fn two_well_separated_clusters() {
        let mut points = Vec::new();
        for _ in 0..100 {
            points.extend_from_slice(&[0.0, 0.0]);
        }
        for _ in 0..100 {
            points.extend_from_slice(&[10.0, 10.0]);
        }
        let run = run(&points, 2, &KMeansConfig::new(2, 7, 4)).unwrap();
        let mut cents: Vec<(f64, f64)> = run
            .centroids
            .chunks_exact(2)
            .map(|c| (c[0], c[1]))
            .collect();
        cents.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(cents, vec![(0.0, 0.0), (10.0, 10.0)]);
        assert!(run.objective.abs() < 1e-12);
    }

    #[test]
    fn objective_history_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let points: Vec<f64> = (0..600).map(|_| rng.random_range(-5.0..5.0)).collect();
        let run = run(&points, 3, &KMeansConfig::new(4, 11, 3)).unwrap();
        for w in run.objective_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
        }
        assert!(run.objective <= run.objective_history.last().unwrap() + 1e-9);
    }

    #[test]
    fn matches_brute_force_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for k in 1..=3usize {
            for n in k..=7usize {
                let points: Vec<f64> = (0..n * 2).map(|_| rng.random_range(-1.0..1.0)).collect();
                let expected = brute_force_objective(&points, 2, k);
                let got = run(&points, 2, &KMeansConfig::new(k, 5, 32)).unwrap();
                assert!(
                    (got.objective - expected).abs() <= 1e-9,
                    "k={k} n={n}: {} vs {expected}",
                    got.objective
                );
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let points: Vec<f64> = (0..400).map(|_| rng.random_range(0.0..1.0)).collect();
        let a = run(&points, 4, &KMeansConfig::new(5, 21, 6)).unwrap();
        let b = run(&points, 4, &KMeansConfig::new(5, 21, 6)).unwrap();
        assert_eq!(a.centroids, b.centroids);
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }

    #[test]
    fn rejects_degenerate_and_empty_input() {
        let err = run(&[], 2, &KMeansConfig::new(2, 0, 1)).unwrap_err();
        assert!(matches!(err, Error::EmptyInput(_)));
        let points = [1.0, 1.0, 1.0, 1.0];
        let err = run(&points, 2, &KMeansConfig::new(2, 0, 1)).unwrap_err();
        assert!(matches!(err, Error::DegenerateInput(_)));
    }

    #[test]
    fn empty_cluster_reseeds_deterministically() {
        // Three collinear points and k=2: some inits leave one centroid
        // unused; the fix must keep both clusters populated.
        let points = [0.0, 1.0, 2.0, 100.0];
        for seed in 0..20 {
            let run = run(&points, 1, &KMeansConfig::new(2, seed, 1)).unwrap();
            let mut counts = [0usize; 2];
            for &a in &run.assignments {
                counts[a] += 1;
            }
            assert!(counts.iter().all(|&c| c > 0));
        }
    }
}
