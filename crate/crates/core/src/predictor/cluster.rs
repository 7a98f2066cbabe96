//! Unsupervised persona discovery with k-means over per-user behaviour.

use std::collections::BTreeMap;

use rand::Rng;

use super::features::{preprocess, DIM};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::synth::{DemandTable, LabeledSample};

pub const MAX_ITERATIONS: usize = 100;

/// Mean feature vector followed by the mean satisfaction (scaled to `[0, 1]`)
/// in each quartile of `qos_p / demand`.
pub const BEHAVIOUR_DIM: usize = DIM + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Users in ascending id order.
    pub user_ids: Vec<u32>,
    /// Cluster of each entry of `user_ids`.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub iterations: usize,
}

impl Clustering {
    pub fn cluster_of(&self, user_id: u32) -> Option<usize> {
        self.user_ids
            .binary_search(&user_id)
            .ok()
            .map(|i| self.assignments[i])
    }
}

pub fn behaviour_vectors(samples: &[LabeledSample], demands: &DemandTable) -> Result<BTreeMap<u32, Vec<f64>>> {
    struct Acc {
        features: [f64; DIM],
        count: f64,
        sat: [f64; 4],
        sat_count: [f64; 4],
    }
    let mut acc: BTreeMap<u32, Acc> = BTreeMap::new();
    for s in samples {
        let demand = demands.application_demand(s.context.application)?;
        let a = acc.entry(s.user_id).or_insert(Acc {
            features: [0.0; DIM],
            count: 0.0,
            sat: [0.0; 4],
            sat_count: [0.0; 4],
        });
        let f = preprocess(&s.context);
        a.features.iter_mut().zip(f.0).for_each(|(x, v)| *x += v);
        a.count += 1.0;
        let q = ((s.qos_p / demand * 4.0).floor().max(0.0) as usize).min(3);
        a.sat[q] += s.satisfaction.value() as f64 / 5.0;
        a.sat_count[q] += 1.0;
    }
    Ok(acc
        .into_iter()
        .map(|(user, a)| {
            let mut v: Vec<f64> = a.features.iter().map(|x| x / a.count).collect();
            v.extend((0..4).map(|q| if a.sat_count[q] > 0.0 { a.sat[q] / a.sat_count[q] } else { 0.0 }));
            (user, v)
        })
        .collect())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(i, c)| (i, sq_dist(point, c)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// Lloyd's k-means with k-means++ seeding. Stops when assignments are stable
/// or after [`MAX_ITERATIONS`].
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<(Vec<usize>, Vec<Vec<f64>>, usize)> {
    if points.is_empty() {
        return Err(Error::Empty("clustering input"));
    }
    if k == 0 || k > points.len() {
        return Err(Error::TooManyClusters {
            clusters: k,
            users: points.len(),
        });
    }
    let mut rng = rng::stream(seed, 0, Purpose::Clustering);
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    while centroids.len() < k {
        let weights: Vec<f64> = points.iter().map(|p| nearest(p, &centroids).1).collect();
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random_range(0.0..total);
            weights
                .iter()
                .position(|&w| {
                    u -= w;
                    u < 0.0
                })
                .unwrap_or(points.len() - 1)
        } else {
            rng.random_range(0..points.len())
        };
        centroids.push(points[next].clone());
    }

    let dim = points[0].len();
    let mut assignments = vec![usize::MAX; points.len()];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        let changed = next != assignments;
        assignments = next;
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            sums[a].iter_mut().zip(p).for_each(|(s, v)| *s += v);
            counts[a] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // re-seed an empty cluster at the point worst served by the others
                let far = points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, nearest(p, &centroids).1))
                    .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
                    .0;
                centroids[c] = points[far].clone();
            }
        }
    }
    Ok((assignments, centroids, iterations))
}

/// Groups users into `num_clusters` personas from their aggregate behaviour.
pub fn cluster_personas(samples: &[LabeledSample], num_clusters: usize, seed: u64, demands: &DemandTable) -> Result<Clustering> {
    if samples.is_empty() {
        return Err(Error::Empty("labelled samples"));
    }
    let vectors = behaviour_vectors(samples, demands)?;
    if num_clusters == 0 || num_clusters > vectors.len() {
        return Err(Error::TooManyClusters {
            clusters: num_clusters,
            users: vectors.len(),
        });
    }
    let (user_ids, points): (Vec<u32>, Vec<Vec<f64>>) = vectors.into_iter().unzip();
    let (assignments, centroids, iterations) = kmeans(&points, num_clusters, seed)?;
    Ok(Clustering {
        user_ids,
        assignments,
        centroids,
        iterations,
    })
}

/// Replaces persona labels with cluster ids.
pub fn relabel_with_clusters(samples: &mut [LabeledSample], clustering: &Clustering) {
    for s in samples {
        s.persona_id = clustering.cluster_of(s.user_id).map(|c| c as u32);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_blobs() {
        let points: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let c = (i % 3) as f64 * 10.0;
                vec![c + (i as f64 * 0.01), c - (i as f64 * 0.02)]
            })
            .collect();
        let (a, _, _) = kmeans(&points, 3, 1).unwrap();
        for i in 0..30 {
            for j in 0..30 {
                assert_eq!(a[i] == a[j], i % 3 == j % 3);
            }
        }
    }

    #[test]
    fn single_cluster_takes_everything() {
        let points: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let (a, c, _) = kmeans(&points, 1, 3).unwrap();
        assert!(a.iter().all(|&x| x == 0));
        assert!((c[0][0] - 4.5).abs() < 1e-12);
    }

    #[test]
    fn too_many_clusters() {
        let points = vec![vec![0.0], vec![1.0]];
        assert!(matches!(kmeans(&points, 3, 0), Err(Error::TooManyClusters { .. })));
        assert!(kmeans(&[], 1, 0).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let points: Vec<Vec<f64>> = (0..50).map(|i| vec![(i * 7 % 13) as f64, (i * 3 % 11) as f64]).collect();
        assert_eq!(kmeans(&points, 4, 9).unwrap(), kmeans(&points, 4, 9).unwrap());
    }
}
