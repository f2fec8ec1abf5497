//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use netr0::netgen::{generate_connected, FamilyParams, GeneratorSpec};
use netr0::rng::{derive_seed, rng_from_seed};
use netr0::Graph;
use rand::Rng;

/// All-pairs distances by Floyd–Warshall on the adjacency matrix.
pub fn floyd_warshall(g: &Graph) -> Vec<Vec<u64>> {
    let n = g.node_count();
    let inf = u64::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for (u, v) in g.edges() {
        d[u][v] = 1;
        d[v][u] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// `(mean distance over ordered pairs, diameter)` from Floyd–Warshall.
pub fn fw_path_stats(g: &Graph) -> (f64, usize) {
    let d = floyd_warshall(g);
    let n = g.node_count();
    let sum: u64 = d.iter().flatten().sum();
    let dia = d.iter().flatten().copied().max().unwrap_or(0);
    (sum as f64 / (n as f64 * (n - 1) as f64), dia as usize)
}

/// Transitivity by enumerating every node triple and every centred triple.
pub fn brute_transitivity(g: &Graph) -> f64 {
    let n = g.node_count();
    let adj = |a: usize, b: usize| g.has_edge(a, b);
    let mut triangles = 0u64;
    let mut triples = 0u64;
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let (ab, bc, ac) = (adj(a, b), adj(b, c), adj(a, c));
                if ab && bc && ac {
                    triangles += 1;
                }
                // each centre of a length-2 path is a connected triple
                triples += u64::from(ab && bc) + u64::from(ab && ac) + u64::from(ac && bc);
            }
        }
    }
    if triples == 0 {
        0.0
    } else {
        (3 * triangles) as f64 / triples as f64
    }
}

/// A random connected graph from family `index % 5` with `n` nodes.
pub fn small_graph(index: u64, n: usize, seed: u64) -> Graph {
    let mut rng = rng_from_seed(derive_seed(seed, &[index]));
    let params = match index % 5 {
        0 => FamilyParams::Er {
            p: rng.random_range(0.15..0.6),
        },
        1 => FamilyParams::Ws {
            k_neighbors: 2 * rng.random_range(1..=((n - 1) / 2).min(4)),
            p_rewire: rng.random_range(0.0..0.6),
        },
        2 => FamilyParams::Sf {
            m: rng.random_range(1..=3.min(n - 1)),
            p_triangle: rng.random_range(0.0..1.0),
        },
        3 => FamilyParams::Ba {
            m: rng.random_range(1..=3.min(n - 1)),
        },
        _ => {
            let a = n / 2;
            let (pi, po) = (rng.random_range(0.3..0.9), rng.random_range(0.05..0.3));
            FamilyParams::Sbm {
                block_sizes: vec![a, n - a],
                probs: vec![vec![pi, po], vec![po, pi]],
            }
        }
    };
    generate_connected(&GeneratorSpec::new(n, params, rng.random()), 200)
        .expect("connected draw")
        .graph
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect()
}

/// Solves `(AᵀA) w = Aᵀ y` for `A = [1 | X]` by Gaussian elimination with
/// partial pivoting.
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len() + 1;
    let row = |r: &Vec<f64>| std::iter::once(1.0).chain(r.iter().copied()).collect::<Vec<f64>>();
    let mut m = vec![vec![0.0; p + 1]; p];
    for (xi, &yi) in x.iter().zip(y) {
        let a = row(xi);
        for i in 0..p {
            for j in 0..p {
                m[i][j] += a[i] * a[j];
            }
            m[i][p] += a[i] * yi;
        }
    }
    for col in 0..p {
        let pivot = (col..p).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, pivot);
        for r in 0..p {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..=p {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    (0..p).map(|i| m[i][p] / m[i][i]).collect()
}

/// Cyclic Jacobi rotations on a symmetric matrix. Returns eigenvalues in
/// descending order and the matching eigenvectors as columns.
pub fn jacobi_eigen(sym: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = sym.len();
    let mut a = sym.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&c| (0..n).map(|r| v[r][c]).collect()).collect();
    (values, vectors)
}

/// Column covariance `XcᵀXc / (n - 1)` of `data` after centring the columns.
pub fn column_covariance(data: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = data.len();
    let d = data[0].len();
    let mean: Vec<f64> = (0..d).map(|j| data.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    (0..d)
        .map(|a| {
            (0..d)
                .map(|b| data.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / (n - 1) as f64)
                .collect()
        })
        .collect()
}

/// Central difference of `f` along every coordinate of `x`.
pub fn central_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// Smallest |pre-activation| of any rectified unit over `xs`, from a plain
/// forward pass over the public layer weights.
pub fn min_hidden_margin(model: &netr0::regress::AnnModel, xs: &[Vec<f64>]) -> f64 {
    let last = model.layers.len() - 1;
    let mut margin = f64::INFINITY;
    for x in xs {
        let mut act = x.clone();
        for (li, layer) in model.layers.iter().enumerate() {
            let z: Vec<f64> = (0..layer.outputs)
                .map(|o| {
                    (0..layer.inputs).map(|k| layer.weights[o * layer.inputs + k] * act[k]).sum::<f64>() + layer.bias[o]
                })
                .collect();
            if li < last {
                margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
            }
            act = z.iter().map(|v| v.max(0.0)).collect();
        }
    }
    margin
}
