//! Spherical K-means over an embedding table: vectors are length-normalized
//! so Euclidean distance on the sphere tracks cosine similarity, seeding is
//! k-means++ from an explicit seed, and Lloyd iterations run to an
//! assignment fixpoint.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::lexicons::{EmbeddingTable, FlatClusterLexicon};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct KmeansRun {
    /// Cluster id per table row, in table order.
    pub assignment: Vec<usize>,
    /// Within-cluster sum of squared distances after each assignment step.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter().map(|x| x / norm).collect()
    } else {
        v.to_vec()
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn kmeans_detailed(
    table: &EmbeddingTable,
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<KmeansRun> {
    let n = table.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "k must satisfy 1 <= k <= {n}, got {k}"
        )));
    }
    if max_iters == 0 {
        return Err(Error::invalid("max_iters must be at least 1"));
    }
    let points: Vec<Vec<f64>> = table.vectors.iter().map(|v| normalized(v)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    centers.push(points[first].clone());
    chosen[first] = true;
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if r < w {
                    pick = i;
                    break;
                }
                r -= w;
            }
            pick
        } else {
            // duplicates everywhere: take the first unchosen row
            chosen.iter().position(|&c| !c).expect("k <= n")
        };
        chosen[pick] = true;
        centers.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            let d = dist2(p, centers.last().expect("just pushed"));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    let mut objective = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iters {
        iterations += 1;
        let mut next = vec![0usize; n];
        let mut sse = 0.0;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = dist2(p, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            next[i] = best;
            sse += best_d;
        }
        objective.push(sse);
        let converged = iterations > 1 && next == assignment;
        assignment = next;
        if converged {
            break;
        }
        // update step: normalized mean, keeping the old center for empty
        // or degenerate clusters
        let dim = table.dim;
        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut sizes = vec![0usize; k];
        for (i, &c) in assignment.iter().enumerate() {
            sizes[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(&points[i]) {
                *s += x;
            }
        }
        for (c, sum) in sums.into_iter().enumerate() {
            if sizes[c] == 0 {
                continue;
            }
            let mean: Vec<f64> = sum.iter().map(|x| x / sizes[c] as f64).collect();
            let unit = normalized(&mean);
            if unit.iter().any(|x| *x != 0.0) {
                centers[c] = unit;
            }
        }
    }
    Ok(KmeansRun {
        assignment,
        objective,
        iterations,
    })
}

/// Clusters the table into `k` word classes and returns them as a flat
/// cluster lexicon under `namespace`.
pub fn kmeans(
    table: &EmbeddingTable,
    k: usize,
    seed: u64,
    max_iters: usize,
    namespace: &str,
) -> Result<FlatClusterLexicon> {
    let run = kmeans_detailed(table, k, seed, max_iters)?;
    let mut lex = FlatClusterLexicon::new(namespace, k);
    for (word, &cluster) in table.words.iter().zip(&run.assignment) {
        lex.entries.insert(word.clone(), cluster.to_string());
    }
    Ok(lex)
}
