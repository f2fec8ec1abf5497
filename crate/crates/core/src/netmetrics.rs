//! The six structural features used as regression inputs.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

pub const FEATURE_NAMES: [&str; 6] = ["avgdeg", "spl", "cc", "den", "dia", "maxdeg"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub avgdeg: f64,
    pub spl: f64,
    pub cc: f64,
    pub den: f64,
    pub dia: usize,
    pub maxdeg: usize,
}

impl FeatureVector {
    /// Values in the fixed `FEATURE_NAMES` order.
    pub fn to_array(&self) -> [f64; 6] {
        [
            self.avgdeg,
            self.spl,
            self.cc,
            self.den,
            self.dia as f64,
            self.maxdeg as f64,
        ]
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let [avgdeg, spl, cc, den, dia, maxdeg] = <[f64; 6]>::try_from(values)
            .map_err(|_| Error::param(format!("expected 6 features, got {}", values.len())))?;
        Ok(Self {
            avgdeg,
            spl,
            cc,
            den,
            dia: dia.round() as usize,
            maxdeg: maxdeg.round() as usize,
        })
    }
}

pub fn average_degree(graph: &Graph) -> f64 {
    if graph.node_count() == 0 {
        return 0.0;
    }
    2.0 * graph.edge_count() as f64 / graph.node_count() as f64
}

pub fn max_degree(graph: &Graph) -> usize {
    graph.degrees().max().unwrap_or(0)
}

pub fn density(graph: &Graph) -> Result<f64> {
    let n = graph.node_count();
    if n < 2 {
        return Err(Error::param(format!("density needs n >= 2, got {n}")));
    }
    Ok(graph.edge_count() as f64 / (n * (n - 1) / 2) as f64)
}

/// Global transitivity: 3 x triangles / connected triples, 0 without triples.
pub fn clustering_coefficient(graph: &Graph) -> f64 {
    let triples: u64 = graph
        .degrees()
        .map(|d| (d as u64 * d.saturating_sub(1) as u64) / 2)
        .sum();
    if triples == 0 {
        return 0.0;
    }
    // each triangle is seen once per edge
    let closed: u64 = (0..graph.node_count())
        .into_par_iter()
        .map(|u| {
            let nu = graph.neighbors(u);
            nu.iter()
                .filter(|&&v| v > u)
                .map(|&v| sorted_intersection_len(nu, graph.neighbors(v)) as u64)
                .sum::<u64>()
        })
        .sum();
    closed as f64 / triples as f64
}

/// Mean of per-node local clustering (nodes of degree < 2 count as 0).
pub fn average_local_clustering(graph: &Graph) -> f64 {
    let n = graph.node_count();
    if n == 0 {
        return 0.0;
    }
    let total: f64 = (0..n)
        .map(|u| {
            let nu = graph.neighbors(u);
            let d = nu.len();
            if d < 2 {
                return 0.0;
            }
            let links: usize = nu
                .iter()
                .map(|&v| sorted_intersection_len(nu, graph.neighbors(v)))
                .sum::<usize>()
                / 2;
            links as f64 / (d * (d - 1) / 2) as f64
        })
        .sum();
    total / n as f64
}

fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Returns `(distance sum, eccentricity, reached)` for one BFS source.
fn bfs_from(graph: &Graph, source: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) -> (u64, u32, usize) {
    dist.fill(u32::MAX);
    queue.clear();
    dist[source] = 0;
    queue.push_back(source);
    let (mut sum, mut ecc, mut reached) = (0u64, 0u32, 1usize);
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        for &v in graph.neighbors(u) {
            if dist[v] == u32::MAX {
                dist[v] = du + 1;
                sum += (du + 1) as u64;
                ecc = ecc.max(du + 1);
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    (sum, ecc, reached)
}

/// Average shortest path length over unordered pairs and the diameter,
/// from a BFS rooted at every node.
pub fn shortest_path_stats(graph: &Graph) -> Result<(f64, usize)> {
    let n = graph.node_count();
    if n < 2 {
        return Err(Error::param(format!("path statistics need n >= 2, got {n}")));
    }
    let (sum, dia, all_reached) = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![u32::MAX; n], VecDeque::with_capacity(n)),
            |(dist, queue), s| {
                let (sum, ecc, reached) = bfs_from(graph, s, dist, queue);
                (sum, ecc, reached == n)
            },
        )
        .reduce(
            || (0u64, 0u32, true),
            |a, b| (a.0 + b.0, a.1.max(b.1), a.2 && b.2),
        );
    if !all_reached {
        return Err(Error::Disconnected(format!(
            "shortest paths are undefined on a disconnected graph with n={n}"
        )));
    }
    // ordered-pair sum over ordered-pair count
    let spl = sum as f64 / (n as f64 * (n - 1) as f64);
    Ok((spl, dia as usize))
}

pub fn extract_features(graph: &Graph) -> Result<FeatureVector> {
    let (spl, dia) = shortest_path_stats(graph)?;
    Ok(FeatureVector {
        avgdeg: average_degree(graph),
        spl,
        cc: clustering_coefficient(graph),
        den: density(graph)?,
        dia,
        maxdeg: max_degree(graph),
    })
}
