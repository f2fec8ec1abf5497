//! Labelled feature tables: building them from generated networks, CSV
//! persistence, row shuffling, k-fold plans and real-world edge-list ingestion.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epidemic::{compute_r0, persists, simulate, EpidemicParams};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::netgen::{generate_connected, is_connected, Family, FamilyParams, GeneratorSpec};
use crate::netmetrics::{extract_features, FEATURE_NAMES};
use crate::rng::{derive_seed, rng_from_seed, SimRng};

pub const LABEL_COLUMN: &str = "r0";
pub const META_COLUMNS: [&str; 3] = ["family", "seed", "n"];
pub const REAL_FAMILY: &str = "real";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: f64,
    /// Generator family tag (`ER`, `WS`, ...) or `real`.
    pub family: String,
    pub seed: u64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub samples: Vec<Sample>,
}

impl Default for Dataset {
    fn default() -> Self {
        Self::new()
    }
}

impl Dataset {
    /// Empty dataset with the six standard feature columns.
    pub fn new() -> Self {
        Self {
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.features.clone()).collect()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    pub fn filter_family(&self, family: &str) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            samples: self
                .samples
                .iter()
                .filter(|s| s.family == family)
                .cloned()
                .collect(),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn header(&self) -> String {
        let mut cols: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        cols.push(LABEL_COLUMN);
        cols.extend(META_COLUMNS);
        cols.join(",")
    }

    /// CSV text; `comments` are emitted as leading `#` lines.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        out.push_str(&self.header());
        out.push('\n');
        for s in &self.samples {
            for v in &s.features {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{},{},{},{}", s.label, s.family, s.seed, s.n);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Dataset> {
        let mut header: Option<Vec<String>> = None;
        let mut samples = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let Some(names) = &header else {
                header = Some(parse_header(&fields, line_no)?);
                continue;
            };
            let dim = names.len();
            if fields.len() != dim + 4 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected {} fields, found {}", dim + 4, fields.len()),
                });
            }
            let num = |i: usize| -> Result<f64> {
                fields[i].parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("column {} is not a number: {:?}", i + 1, fields[i]),
                })
            };
            let features = (0..dim).map(num).collect::<Result<Vec<_>>>()?;
            let label = num(dim)?;
            let seed = fields[dim + 2].parse::<u64>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("seed is not an integer: {:?}", fields[dim + 2]),
            })?;
            let n = fields[dim + 3].parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("n is not an integer: {:?}", fields[dim + 3]),
            })?;
            samples.push(Sample {
                features,
                label,
                family: fields[dim + 1].to_string(),
                seed,
                n,
            });
        }
        let Some(feature_names) = header else {
            return Err(Error::Parse {
                line: text.lines().count().max(1),
                msg: "missing header row".into(),
            });
        };
        Ok(Dataset {
            feature_names,
            samples,
        })
    }
}

fn parse_header(fields: &[&str], line: usize) -> Result<Vec<String>> {
    let expected_tail = [LABEL_COLUMN, META_COLUMNS[0], META_COLUMNS[1], META_COLUMNS[2]];
    if fields.len() < 5 || fields[fields.len() - 4..] != expected_tail {
        return Err(Error::Parse {
            line,
            msg: format!(
                "header must end with {} and name at least one feature",
                expected_tail.join(",")
            ),
        });
    }
    Ok(fields[..fields.len() - 4].iter().map(|s| s.to_string()).collect())
}

pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, dataset.to_csv(&[]))?;
    Ok(())
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    Dataset::from_csv(&std::fs::read_to_string(path)?)
}

/// Uniform random row permutation. `perm[i]` is the original index of row `i`.
pub fn shuffle(dataset: &Dataset, seed: u64) -> (Dataset, Vec<usize>) {
    let perm = permutation(dataset.len(), &mut rng_from_seed(seed));
    (dataset.subset(&perm), perm)
}

fn permutation(len: usize, rng: &mut SimRng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..len).collect();
    perm.shuffle(rng);
    perm
}

/// Undoes `shuffle` given its permutation.
pub fn unshuffle(shuffled: &Dataset, perm: &[usize]) -> Dataset {
    let mut inverse = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inverse[p] = i;
    }
    shuffled.subset(&inverse)
}

/// Assignment of rows to `k` folds: rows are permuted, then cut into
/// contiguous blocks whose sizes differ by at most one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold index of each original row.
    pub assignments: Vec<usize>,
    pub permutation: Vec<usize>,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.permutation
            .iter()
            .copied()
            .filter(|&row| self.assignments[row] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.permutation
            .iter()
            .copied()
            .filter(|&row| self.assignments[row] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

pub fn kfold_plan(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    kfold_plan_for_len(dataset.len(), k, seed)
}

pub fn kfold_plan_for_len(len: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > len {
        return Err(Error::param(format!(
            "fold count must satisfy 2 <= k <= {len}, got {k}"
        )));
    }
    let permutation = permutation(len, &mut rng_from_seed(seed));
    let (base, extra) = (len / k, len % k);
    let mut assignments = vec![0; len];
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &row in &permutation[pos..pos + size] {
            assignments[row] = fold;
        }
        pos += size;
    }
    Ok(FoldPlan {
        k,
        assignments,
        permutation,
    })
}

/// A real-world network after cleaning.
#[derive(Debug, Clone)]
pub struct EdgeListGraph {
    pub graph: Graph,
    /// Original identifier of each compacted node id.
    pub labels: Vec<String>,
    pub self_loops: usize,
    pub duplicates: usize,
}

/// Parses a whitespace-separated edge list. Extra columns (weights,
/// timestamps) are ignored; identifiers are compacted to `0..n`, in numeric
/// order when every identifier is an integer and in order of first
/// appearance otherwise. Parsing a serialised parse result is the identity.
pub fn parse_edge_list(text: &str) -> Result<EdgeListGraph> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut pairs = Vec::new();
    let mut self_loops = 0;
    let mut intern = |tok: &str, labels: &mut Vec<String>| -> usize {
        *ids.entry(tok.to_string()).or_insert_with(|| {
            labels.push(tok.to_string());
            labels.len() - 1
        })
    };
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let (Some(a), Some(b)) = (toks.next(), toks.next()) else {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected two node ids, found {line:?}"),
            });
        };
        let u = intern(a, &mut labels);
        let v = intern(b, &mut labels);
        if u == v {
            self_loops += 1;
        } else {
            pairs.push((u.min(v), u.max(v)));
        }
    }
    if labels.is_empty() {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            msg: "edge list contains no edges".into(),
        });
    }
    let numeric: Option<Vec<u64>> = labels.iter().map(|l| l.parse().ok()).collect();
    if let Some(values) = numeric {
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by_key(|&i| values[i]);
        let mut rank = vec![0; labels.len()];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new;
        }
        for (u, v) in &mut pairs {
            let (a, b) = (rank[*u], rank[*v]);
            (*u, *v) = (a.min(b), a.max(b));
        }
        labels = order.into_iter().map(|i| labels[i].clone()).collect();
    }
    let raw_pairs = pairs.len();
    pairs.sort_unstable();
    pairs.dedup();
    let duplicates = raw_pairs - pairs.len();
    let graph = Graph::from_edges(labels.len(), pairs);
    Ok(EdgeListGraph {
        graph,
        labels,
        self_loops,
        duplicates,
    })
}

/// Reads and cleans an edge list, rejecting networks with more than one
/// component.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<EdgeListGraph> {
    let path = path.as_ref();
    let parsed = parse_edge_list(&std::fs::read_to_string(path)?)?;
    if parsed.self_loops + parsed.duplicates > 0 {
        info!(
            "{}: dropped {} self-loops and {} duplicate edges",
            path.display(),
            parsed.self_loops,
            parsed.duplicates
        );
    }
    if !is_connected(&parsed.graph) {
        return Err(Error::Disconnected(format!(
            "{} has more than one component",
            path.display()
        )));
    }
    Ok(parsed)
}

/// Builds a labelled sample for an arbitrary connected graph.
pub fn label_graph(graph: &Graph, params: &EpidemicParams, family: &str, seed: u64) -> Result<Sample> {
    let features = extract_features(graph)?;
    let trace = simulate(graph, params, seed)?;
    Ok(Sample {
        features: features.to_array().to_vec(),
        label: compute_r0(&trace)?,
        family: family.to_string(),
        seed,
        n: graph.node_count(),
    })
}

/// How many simulations feed one label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelPolicy {
    /// Independent runs whose R0 values are averaged; the first run uses the
    /// given seed unchanged. Replicates that die out are left out of the
    /// average unless every replicate died out.
    pub replicates: usize,
    /// Extra attempts per replicate when the infection dies out before the
    /// tail window ends. Small populations can lose an endemic infection to
    /// a chance trough; the replicate then takes the first persistent run,
    /// or the last attempt if none persisted.
    pub extinction_retries: usize,
}

impl Default for LabelPolicy {
    fn default() -> Self {
        Self {
            replicates: 1,
            extinction_retries: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelRuns {
    pub simulations: usize,
    /// Replicates that died out in every attempt.
    pub extinct: usize,
}

/// Labels `graph` under `policy`; with the default policy this is exactly
/// [`label_graph`].
pub fn label_graph_with(
    graph: &Graph,
    params: &EpidemicParams,
    family: &str,
    seed: u64,
    policy: &LabelPolicy,
) -> Result<(Sample, LabelRuns)> {
    if policy.replicates == 0 {
        return Err(Error::param("at least one replicate is needed"));
    }
    let features = extract_features(graph)?;
    let mut runs = LabelRuns::default();
    let (mut alive_sum, mut alive_count, mut dead_sum) = (0.0, 0usize, 0.0);
    for rep in 0..policy.replicates {
        let rep_seed = if rep == 0 { seed } else { derive_seed(seed, &[u64::MAX, rep as u64]) };
        for attempt in 0..=policy.extinction_retries {
            let sim_seed = if attempt == 0 { rep_seed } else { derive_seed(rep_seed, &[attempt as u64]) };
            let trace = simulate(graph, params, sim_seed)?;
            runs.simulations += 1;
            if persists(&trace) {
                alive_sum += compute_r0(&trace)?;
                alive_count += 1;
                break;
            }
            if attempt == policy.extinction_retries {
                runs.extinct += 1;
                dead_sum += compute_r0(&trace)?;
            }
        }
    }
    // Persistent replicates define the label; extinct ones only count when
    // nothing persisted.
    let label = if alive_count > 0 {
        alive_sum / alive_count as f64
    } else {
        dead_sum / policy.replicates as f64
    };
    Ok((
        Sample {
            features: features.to_array().to_vec(),
            label,
            family: family.to_string(),
            seed,
            n: graph.node_count(),
        },
        runs,
    ))
}

/// Inclusive numeric range `[lo, hi]`.
pub type Range = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErRange {
    pub count: usize,
    pub p: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WsRange {
    pub count: usize,
    /// Neighbour count range; only even values inside it are drawn.
    pub k: [usize; 2],
    pub p: Range,
    /// Grid step for the rewiring probability; 0 draws continuously.
    pub p_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfRange {
    pub count: usize,
    pub m: [usize; 2],
    pub p_triangle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaRange {
    pub count: usize,
    pub m: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmRange {
    pub count: usize,
    /// Two equal blocks; within- and cross-block probabilities.
    pub p_in: Range,
    pub p_out: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub n: usize,
    pub master_seed: u64,
    pub max_retries: usize,
    #[serde(default)]
    pub labels: LabelPolicy,
    pub epidemic: EpidemicParams,
    pub er: ErRange,
    pub ws: WsRange,
    pub sf: SfRange,
    pub ba: BaRange,
    pub sbm: SbmRange,
}

impl BuildConfig {
    /// Full-size corpus: 1000-node networks, 2552 examples.
    pub fn full() -> Self {
        Self {
            n: 1000,
            master_seed: 2020,
            max_retries: crate::netgen::DEFAULT_MAX_RETRIES,
            labels: LabelPolicy {
                replicates: 1,
                extinction_retries: 10,
            },
            epidemic: EpidemicParams::default(),
            er: ErRange {
                count: 525,
                p: [0.0072, 0.5],
            },
            ws: WsRange {
                count: 520,
                k: [4, 15],
                p: [0.1, 0.5],
                p_step: 0.01,
            },
            sf: SfRange {
                count: 548,
                m: [2, 550],
                p_triangle: 0.2,
            },
            ba: BaRange {
                count: 548,
                m: [2, 550],
            },
            sbm: SbmRange {
                count: 411,
                p_in: [0.01, 0.3],
                p_out: [0.002, 0.05],
            },
        }
    }

    /// Small corpus that builds in seconds: 200-node networks, 20 per family.
    ///
    /// Five nodes start infected, as in the full-size corpus. Ranges keep the
    /// full-size proportions where those stay above the epidemic threshold
    /// (attachment counts up to 0.55 n); lower bounds and the ring-lattice
    /// degrees are raised so every family spans the endemic regime. Each label
    /// averages five persistent runs, which brings label noise at 200 nodes
    /// close to that of a single run at 1000 nodes.
    pub fn desk() -> Self {
        Self {
            n: 200,
            master_seed: 2020,
            max_retries: crate::netgen::DEFAULT_MAX_RETRIES,
            labels: LabelPolicy {
                replicates: 5,
                extinction_retries: 10,
            },
            epidemic: EpidemicParams {
                s0_frac: 0.975,
                i0_frac: 0.025,
                ..EpidemicParams::default()
            },
            er: ErRange {
                count: 20,
                p: [0.06, 0.6],
            },
            ws: WsRange {
                count: 20,
                k: [12, 120],
                p: [0.1, 0.5],
                p_step: 0.01,
            },
            sf: SfRange {
                count: 20,
                m: [6, 110],
                p_triangle: 0.2,
            },
            ba: BaRange {
                count: 20,
                m: [6, 110],
            },
            sbm: SbmRange {
                count: 20,
                p_in: [0.1, 0.8],
                p_out: [0.02, 0.4],
            },
        }
    }

    pub fn with_counts(mut self, per_family: usize) -> Self {
        self.er.count = per_family;
        self.ws.count = per_family;
        self.sf.count = per_family;
        self.ba.count = per_family;
        self.sbm.count = per_family;
        self
    }

    /// Keeps only `family`, with `count` examples.
    pub fn single_family(self, family: Family, count: usize) -> Self {
        let mut cfg = self.with_counts(0);
        match family {
            Family::Er => cfg.er.count = count,
            Family::Ws => cfg.ws.count = count,
            Family::Sf => cfg.sf.count = count,
            Family::Ba => cfg.ba.count = count,
            Family::Sbm => cfg.sbm.count = count,
        }
        cfg
    }

    pub fn count(&self, family: Family) -> usize {
        match family {
            Family::Er => self.er.count,
            Family::Ws => self.ws.count,
            Family::Sf => self.sf.count,
            Family::Ba => self.ba.count,
            Family::Sbm => self.sbm.count,
        }
    }

    pub fn total(&self) -> usize {
        Family::ALL.iter().map(|&f| self.count(f)).sum()
    }

    pub fn validate(&self) -> Result<()> {
        self.epidemic.validate()?;
        if self.labels.replicates == 0 {
            return Err(Error::param("labels.replicates must be at least 1"));
        }
        let prob = |name: &str, r: Range| -> Result<()> {
            if !(0.0 <= r[0] && r[0] <= r[1] && r[1] <= 1.0) {
                return Err(Error::param(format!("{name} range {r:?} must satisfy 0 <= lo <= hi <= 1")));
            }
            Ok(())
        };
        prob("er.p", self.er.p)?;
        prob("ws.p", self.ws.p)?;
        prob("sbm.p_in", self.sbm.p_in)?;
        prob("sbm.p_out", self.sbm.p_out)?;
        prob("sf.p_triangle", [self.sf.p_triangle, self.sf.p_triangle])?;
        if self.ws.count > 0 && even_values(self.ws.k).is_empty() {
            return Err(Error::param(format!("ws.k range {:?} holds no even value", self.ws.k)));
        }
        for (name, m, count) in [("sf.m", self.sf.m, self.sf.count), ("ba.m", self.ba.m, self.ba.count)] {
            if count > 0 && (m[0] < 1 || m[0] > m[1] || m[1] >= self.n) {
                return Err(Error::param(format!(
                    "{name} range {m:?} must satisfy 1 <= lo <= hi < n={}",
                    self.n
                )));
            }
        }
        if self.sbm.count > 0 && !self.n.is_multiple_of(2) {
            return Err(Error::param("SBM uses two equal blocks, so n must be even"));
        }
        Ok(())
    }

    /// Draws the generator parameters of one example.
    pub fn draw_params(&self, family: Family, rng: &mut SimRng) -> FamilyParams {
        match family {
            Family::Er => FamilyParams::Er {
                p: uniform(self.er.p, rng),
            },
            Family::Ws => {
                let ks = even_values(self.ws.k);
                FamilyParams::Ws {
                    k_neighbors: ks[rng.random_range(0..ks.len())],
                    p_rewire: grid_or_uniform(self.ws.p, self.ws.p_step, rng),
                }
            }
            Family::Sf => FamilyParams::Sf {
                m: rng.random_range(self.sf.m[0]..=self.sf.m[1]),
                p_triangle: self.sf.p_triangle,
            },
            Family::Ba => FamilyParams::Ba {
                m: rng.random_range(self.ba.m[0]..=self.ba.m[1]),
            },
            Family::Sbm => {
                let p_in = uniform(self.sbm.p_in, rng);
                let p_out = uniform(self.sbm.p_out, rng);
                FamilyParams::Sbm {
                    block_sizes: vec![self.n / 2, self.n - self.n / 2],
                    probs: vec![vec![p_in, p_out], vec![p_out, p_in]],
                }
            }
        }
    }

    /// Every example of the build in output order, with its seeds.
    pub fn plan(&self) -> Vec<PlannedExample> {
        Family::ALL
            .iter()
            .enumerate()
            .flat_map(|(fi, &family)| {
                (0..self.count(family)).map(move |i| {
                    let path = [fi as u64, i as u64];
                    let mut draw_rng = rng_from_seed(derive_seed(self.master_seed, &[path[0], path[1], 0]));
                    let params = self.draw_params(family, &mut draw_rng);
                    PlannedExample {
                        spec: GeneratorSpec::new(
                            self.n,
                            params,
                            derive_seed(self.master_seed, &[path[0], path[1], 1]),
                        ),
                        sim_seed: derive_seed(self.master_seed, &[path[0], path[1], 2]),
                    }
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct PlannedExample {
    pub spec: GeneratorSpec,
    pub sim_seed: u64,
}

fn uniform(r: Range, rng: &mut SimRng) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..r[1])
    }
}

fn grid_or_uniform(r: Range, step: f64, rng: &mut SimRng) -> f64 {
    if step <= 0.0 {
        return uniform(r, rng);
    }
    let slots = ((r[1] - r[0]) / step + 1e-9).floor() as usize;
    let i = rng.random_range(0..=slots);
    // snap to the decimal grid to avoid 0.1 + 3 * 0.01 = 0.13000000000000003
    ((r[0] + i as f64 * step) * 1e9).round() / 1e9
}

fn even_values(k: [usize; 2]) -> Vec<usize> {
    (k[0].max(2)..=k[1]).filter(|v| v % 2 == 0).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub per_family: Vec<(String, usize)>,
    pub total_retries: usize,
    pub max_retries_seen: usize,
    pub simulations: usize,
    /// Label replicates whose infection died out in every attempt.
    pub extinct: usize,
}

/// Generates, measures and labels every example in `config`. Work runs in
/// parallel; the output order is the plan order.
pub fn build_dataset(config: &BuildConfig) -> Result<(Dataset, BuildStats)> {
    config.validate()?;
    let plan = config.plan();
    info!("building {} examples at n={}", plan.len(), config.n);
    let results: Vec<(Sample, usize, LabelRuns)> = plan
        .par_iter()
        .map(|ex| {
            let connected = generate_connected(&ex.spec, config.max_retries)?;
            let (mut sample, runs) = label_graph_with(
                &connected.graph,
                &config.epidemic,
                ex.spec.family().tag(),
                ex.sim_seed,
                &config.labels,
            )?;
            sample.seed = ex.spec.seed;
            debug!(
                "{} -> R0 {:.3} ({} retries, {} simulations)",
                ex.spec, sample.label, connected.retries, runs.simulations
            );
            Ok((sample, connected.retries, runs))
        })
        .collect::<Result<_>>()?;

    let mut stats = BuildStats::default();
    for family in Family::ALL {
        stats
            .per_family
            .push((family.tag().to_string(), config.count(family)));
    }
    let mut dataset = Dataset::new();
    for (sample, retries, runs) in results {
        stats.simulations += runs.simulations;
        stats.extinct += runs.extinct;
        stats.total_retries += retries;
        stats.max_retries_seen = stats.max_retries_seen.max(retries);
        dataset.samples.push(sample);
    }
    info!(
        "built {} rows, {} generation retries",
        dataset.len(),
        stats.total_retries
    );
    Ok((dataset, stats))
}
