//! Random network generators for the five model families, plus the
//! single-component filter applied to every generated example.

use std::collections::VecDeque;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphBuilder};
use crate::rng::{derive_seed, rng_from_seed, SimRng};

pub const DEFAULT_MAX_RETRIES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "ER")]
    Er,
    #[serde(rename = "WS")]
    Ws,
    #[serde(rename = "SF")]
    Sf,
    #[serde(rename = "BA")]
    Ba,
    #[serde(rename = "SBM")]
    Sbm,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Er, Family::Ws, Family::Sf, Family::Ba, Family::Sbm];

    pub fn tag(self) -> &'static str {
        match self {
            Family::Er => "ER",
            Family::Ws => "WS",
            Family::Sf => "SF",
            Family::Ba => "BA",
            Family::Sbm => "SBM",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Family> {
        Family::ALL
            .into_iter()
            .find(|f| f.tag().eq_ignore_ascii_case(tag))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Family-specific generator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum FamilyParams {
    #[serde(rename = "ER")]
    Er { p: f64 },
    #[serde(rename = "WS")]
    Ws { k_neighbors: usize, p_rewire: f64 },
    /// Holme–Kim power-law cluster growth.
    #[serde(rename = "SF")]
    Sf { m: usize, p_triangle: f64 },
    #[serde(rename = "BA")]
    Ba { m: usize },
    #[serde(rename = "SBM")]
    Sbm {
        block_sizes: Vec<usize>,
        probs: Vec<Vec<f64>>,
    },
}

impl FamilyParams {
    pub fn family(&self) -> Family {
        match self {
            FamilyParams::Er { .. } => Family::Er,
            FamilyParams::Ws { .. } => Family::Ws,
            FamilyParams::Sf { .. } => Family::Sf,
            FamilyParams::Ba { .. } => Family::Ba,
            FamilyParams::Sbm { .. } => Family::Sbm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub params: FamilyParams,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(n: usize, params: FamilyParams, seed: u64) -> Self {
        Self { n, params, seed }
    }

    pub fn family(&self) -> Family {
        self.params.family()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        match &self.params {
            FamilyParams::Er { p } => {
                check_n(n, 2)?;
                check_prob("p", *p)
            }
            FamilyParams::Ws {
                k_neighbors,
                p_rewire,
            } => {
                check_n(n, 3)?;
                check_prob("p_rewire", *p_rewire)?;
                let k = *k_neighbors;
                if k % 2 != 0 || k < 2 || k >= n {
                    return Err(Error::param(format!(
                        "WS k_neighbors must be even with 2 <= k < n, got k={k}, n={n}"
                    )));
                }
                Ok(())
            }
            FamilyParams::Sf { m, p_triangle } => {
                check_m(*m, n)?;
                check_prob("p_triangle", *p_triangle)
            }
            FamilyParams::Ba { m } => check_m(*m, n),
            FamilyParams::Sbm { block_sizes, probs } => {
                let blocks = block_sizes.len();
                if blocks == 0 || block_sizes.iter().sum::<usize>() != n {
                    return Err(Error::param(format!(
                        "SBM block sizes {block_sizes:?} must sum to n={n}"
                    )));
                }
                if probs.len() != blocks || probs.iter().any(|r| r.len() != blocks) {
                    return Err(Error::param(format!(
                        "SBM probability matrix must be {blocks}x{blocks}"
                    )));
                }
                for (i, row) in probs.iter().enumerate() {
                    for (j, &p) in row.iter().enumerate() {
                        check_prob("SBM probability", p)?;
                        if p != probs[j][i] {
                            return Err(Error::param(format!(
                                "SBM probability matrix is not symmetric at ({i},{j})"
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Runs the generator once with `self.seed`.
    pub fn generate(&self) -> Result<Graph> {
        self.validate()?;
        let mut rng = rng_from_seed(self.seed);
        let g = match &self.params {
            FamilyParams::Er { p } => er(self.n, *p, &mut rng),
            FamilyParams::Ws {
                k_neighbors,
                p_rewire,
            } => ws(self.n, *k_neighbors, *p_rewire, &mut rng),
            FamilyParams::Sf { m, p_triangle } => powerlaw_cluster(self.n, *m, *p_triangle, &mut rng),
            FamilyParams::Ba { m } => ba(self.n, *m, &mut rng),
            FamilyParams::Sbm { block_sizes, probs } => sbm(block_sizes, probs, &mut rng),
        };
        Ok(g)
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.params {
            FamilyParams::Er { p } => write!(f, "ER(n={}, p={p})", self.n)?,
            FamilyParams::Ws {
                k_neighbors,
                p_rewire,
            } => write!(f, "WS(n={}, k={k_neighbors}, p={p_rewire})", self.n)?,
            FamilyParams::Sf { m, p_triangle } => {
                write!(f, "SF(n={}, m={m}, p={p_triangle})", self.n)?
            }
            FamilyParams::Ba { m } => write!(f, "BA(n={}, m={m})", self.n)?,
            FamilyParams::Sbm { block_sizes, probs } => {
                write!(f, "SBM(blocks={block_sizes:?}, probs={probs:?})")?
            }
        }
        write!(f, " seed={}", self.seed)
    }
}

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::param(format!("n must be at least {min}, got {n}")));
    }
    Ok(())
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(format!("{name} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

fn check_m(m: usize, n: usize) -> Result<()> {
    if m < 1 || m >= n {
        return Err(Error::param(format!("m must satisfy 1 <= m < n, got m={m}, n={n}")));
    }
    Ok(())
}

pub fn generate_er(n: usize, p: f64, seed: u64) -> Result<Graph> {
    GeneratorSpec::new(n, FamilyParams::Er { p }, seed).generate()
}

pub fn generate_ws(n: usize, k_neighbors: usize, p_rewire: f64, seed: u64) -> Result<Graph> {
    GeneratorSpec::new(
        n,
        FamilyParams::Ws {
            k_neighbors,
            p_rewire,
        },
        seed,
    )
    .generate()
}

pub fn generate_powerlaw_cluster(n: usize, m: usize, p_triangle: f64, seed: u64) -> Result<Graph> {
    GeneratorSpec::new(n, FamilyParams::Sf { m, p_triangle }, seed).generate()
}

pub fn generate_ba(n: usize, m: usize, seed: u64) -> Result<Graph> {
    GeneratorSpec::new(n, FamilyParams::Ba { m }, seed).generate()
}

pub fn generate_sbm(block_sizes: &[usize], probs: &[Vec<f64>], seed: u64) -> Result<Graph> {
    GeneratorSpec::new(
        block_sizes.iter().sum(),
        FamilyParams::Sbm {
            block_sizes: block_sizes.to_vec(),
            probs: probs.to_vec(),
        },
        seed,
    )
    .generate()
}

fn er(n: usize, p: f64, rng: &mut SimRng) -> Graph {
    let mut b = GraphBuilder::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                b.push_edge_unchecked(u, v);
            }
        }
    }
    b.build()
}

fn ws(n: usize, k: usize, p: f64, rng: &mut SimRng) -> Graph {
    let half = k / 2;
    let mut b = GraphBuilder::new(n);
    for j in 1..=half {
        for u in 0..n {
            b.push_edge_unchecked(u, (u + j) % n);
        }
    }
    for j in 1..=half {
        for u in 0..n {
            let v = (u + j) % n;
            if rng.random::<f64>() >= p {
                continue;
            }
            if b.degree(u) >= n - 1 {
                continue;
            }
            let mut w = rng.random_range(0..n);
            while w == u || b.has_edge(u, w) {
                w = rng.random_range(0..n);
            }
            if b.remove_edge(u, v) {
                b.push_edge_unchecked(u, w);
            }
        }
    }
    b.build()
}

/// Draws `count` distinct entries from `urn` (uniformly over urn slots),
/// skipping anything rejected by `exclude`.
fn distinct_from_urn(
    urn: &[usize],
    count: usize,
    rng: &mut SimRng,
    mut exclude: impl FnMut(usize) -> bool,
) -> Vec<usize> {
    let mut picked: Vec<usize> = Vec::with_capacity(count);
    while picked.len() < count {
        let x = urn[rng.random_range(0..urn.len())];
        if !picked.contains(&x) && !exclude(x) {
            picked.push(x);
        }
    }
    picked
}

fn powerlaw_cluster(n: usize, m: usize, p: f64, rng: &mut SimRng) -> Graph {
    let mut b = GraphBuilder::new(n);
    // seed nodes 0..m start isolated and enter the urn once each
    let mut urn: Vec<usize> = (0..m).collect();
    for source in m..n {
        let mut targets = distinct_from_urn(&urn, m, rng, |_| false);
        targets.reverse();
        let mut target = targets.pop().expect("m >= 1");
        b.push_edge_unchecked(source, target);
        urn.push(target);
        let mut count = 1;
        while count < m {
            if rng.random::<f64>() < p {
                let hood: Vec<usize> = b
                    .neighbors(target)
                    .iter()
                    .copied()
                    .filter(|&x| x != source && !b.has_edge(source, x))
                    .collect();
                if !hood.is_empty() {
                    let nbr = hood[rng.random_range(0..hood.len())];
                    b.push_edge_unchecked(source, nbr);
                    urn.push(nbr);
                    count += 1;
                    continue;
                }
            }
            target = match targets.pop() {
                Some(t) if !b.has_edge(source, t) => t,
                // a triangle step already linked this target; draw a fresh one
                _ => distinct_from_urn(&urn, 1, rng, |x| x == source || b.has_edge(source, x))[0],
            };
            b.push_edge_unchecked(source, target);
            urn.push(target);
            count += 1;
        }
        urn.extend(std::iter::repeat_n(source, m));
    }
    b.build()
}

fn ba(n: usize, m: usize, rng: &mut SimRng) -> Graph {
    let mut b = GraphBuilder::new(n);
    let mut urn = Vec::with_capacity(2 * m * n);
    for leaf in 1..=m {
        b.push_edge_unchecked(0, leaf);
        urn.push(0);
        urn.push(leaf);
    }
    for source in m + 1..n {
        let targets = distinct_from_urn(&urn, m, rng, |_| false);
        for &t in &targets {
            b.push_edge_unchecked(source, t);
        }
        urn.extend_from_slice(&targets);
        urn.extend(std::iter::repeat_n(source, m));
    }
    b.build()
}

fn sbm(block_sizes: &[usize], probs: &[Vec<f64>], rng: &mut SimRng) -> Graph {
    let block_of: Vec<usize> = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(blk, &size)| std::iter::repeat_n(blk, size))
        .collect();
    let n = block_of.len();
    let mut b = GraphBuilder::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < probs[block_of[u]][block_of[v]] {
                b.push_edge_unchecked(u, v);
            }
        }
    }
    b.build()
}

/// True iff a breadth-first traversal from node 0 reaches every node.
pub fn is_connected(graph: &Graph) -> bool {
    let n = graph.node_count();
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(u) = queue.pop_front() {
        for &v in graph.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    reached == n
}

#[derive(Debug, Clone)]
pub struct ConnectedGraph {
    pub graph: Graph,
    /// Number of rejected draws before this one.
    pub retries: usize,
    /// Seed that produced `graph`.
    pub seed: u64,
}

/// Generates from `spec`, redrawing with derived seeds until the result is
/// connected. The first attempt uses `spec.seed` itself.
pub fn generate_connected(spec: &GeneratorSpec, max_retries: usize) -> Result<ConnectedGraph> {
    spec.validate()?;
    for attempt in 0..=max_retries {
        let seed = if attempt == 0 {
            spec.seed
        } else {
            derive_seed(spec.seed, &[attempt as u64])
        };
        let graph = GeneratorSpec { seed, ..spec.clone() }.generate()?;
        if is_connected(&graph) {
            return Ok(ConnectedGraph {
                graph,
                retries: attempt,
                seed,
            });
        }
    }
    Err(Error::GenerationFailed {
        spec: spec.to_string(),
        attempts: max_retries + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn er_extremes() {
        assert_eq!(generate_er(5, 0.0, 1).unwrap().edge_count(), 0);
        assert_eq!(generate_er(5, 1.0, 1).unwrap(), Graph::complete(5));
    }

    #[test]
    fn er_rejects_bad_input() {
        assert!(matches!(generate_er(5, 1.5, 1), Err(Error::Param(_))));
        assert!(matches!(generate_er(1, 0.5, 1), Err(Error::Param(_))));
    }

    #[test]
    fn ws_without_rewiring_is_a_lattice() {
        assert_eq!(generate_ws(10, 2, 0.0, 3).unwrap(), Graph::cycle(10));
        let g = generate_ws(10, 4, 0.0, 3).unwrap();
        assert!(g.degrees().all(|d| d == 4));
        assert!(g.has_edge(0, 2) && g.has_edge(0, 8) && !g.has_edge(0, 3));
    }

    #[test]
    fn ws_rejects_odd_k() {
        assert!(matches!(generate_ws(10, 3, 0.1, 1), Err(Error::Param(_))));
        assert!(matches!(generate_ws(10, 10, 0.1, 1), Err(Error::Param(_))));
    }

    #[test]
    fn ws_full_rewiring_keeps_edge_count() {
        let g = generate_ws(50, 6, 1.0, 9).unwrap();
        assert_eq!(g.edge_count(), 150);
        g.validate().unwrap();
    }

    #[test]
    fn growth_models_with_m1_are_trees() {
        let sf = generate_powerlaw_cluster(5, 1, 0.0, 4).unwrap();
        assert_eq!(sf.edge_count(), 4);
        assert!(is_connected(&sf));
        let ba = generate_ba(5, 1, 4).unwrap();
        assert_eq!(ba.edge_count(), 4);
        assert!(is_connected(&ba));
    }

    #[test]
    fn powerlaw_cluster_edge_bookkeeping() {
        for seed in 0..10 {
            let g = generate_powerlaw_cluster(100, 3, 0.2, seed).unwrap();
            assert_eq!(g.edge_count(), 291);
            g.validate().unwrap();
        }
    }

    #[test]
    fn ba_seed_graph_is_a_star() {
        // with n = m + 1 no growth happens
        assert_eq!(generate_ba(4, 3, 0).unwrap(), Graph::star(3));
        let g = generate_ba(5, 3, 0).unwrap();
        assert_eq!(g.edge_count(), 6);
        assert_eq!(g.degree(4), 3);
    }

    #[test]
    fn growth_models_reject_large_m() {
        assert!(generate_ba(5, 5, 0).is_err());
        assert!(generate_powerlaw_cluster(5, 6, 0.1, 0).is_err());
        assert!(generate_ba(5, 0, 0).is_err());
    }

    #[test]
    fn sbm_deterministic_blocks() {
        let g = generate_sbm(&[3, 3], &[vec![1.0, 0.0], vec![0.0, 1.0]], 0).unwrap();
        let expected = Graph::from_edges(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]);
        assert_eq!(g, expected);
        assert!(!is_connected(&g));
    }

    #[test]
    fn sbm_rejects_asymmetric_matrix() {
        let err = generate_sbm(&[2, 2], &[vec![0.5, 0.1], vec![0.2, 0.5]], 0);
        assert!(matches!(err, Err(Error::Param(_))));
        let err = generate_sbm(&[2, 2], &[vec![0.5, 0.1]], 0);
        assert!(matches!(err, Err(Error::Param(_))));
    }

    #[test]
    fn connectivity_examples() {
        assert!(is_connected(&Graph::complete(5)));
        assert!(is_connected(&Graph::path(100)));
        let two_triangles = Graph::from_edges(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]);
        assert!(!is_connected(&two_triangles));
    }

    #[test]
    fn generate_connected_reports_failure() {
        let spec = GeneratorSpec::new(100, FamilyParams::Er { p: 0.001 }, 5);
        match generate_connected(&spec, 3) {
            Err(Error::GenerationFailed { spec, attempts }) => {
                assert!(spec.starts_with("ER(n=100"));
                assert_eq!(attempts, 4);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn generate_connected_first_try_when_dense() {
        let spec = GeneratorSpec::new(100, FamilyParams::Er { p: 0.5 }, 5);
        let c = generate_connected(&spec, DEFAULT_MAX_RETRIES).unwrap();
        assert_eq!(c.retries, 0);
        assert_eq!(c.seed, 5);
    }

    #[test]
    fn spec_serde_roundtrip() {
        let spec = GeneratorSpec::new(
            10,
            FamilyParams::Sbm {
                block_sizes: vec![5, 5],
                probs: vec![vec![0.5, 0.1], vec![0.1, 0.5]],
            },
            3,
        );
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"family\":\"SBM\""));
        let back: GeneratorSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}
