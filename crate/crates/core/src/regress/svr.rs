//! Epsilon-insensitive support vector regression trained by sequential
//! minimal optimisation.
//!
//! The dual is written over `2m` variables `beta = [alpha; alpha*]` with
//! signs `s_t = +1` for the first half and `-1` for the second:
//!
//! ```text
//! min 1/2 beta' Q beta + p' beta,   Q_ts = s_t s_u K(x_t, x_u)
//! s.t. sum_t s_t beta_t = 0,  0 <= beta_t <= C
//! p = [eps - y; eps + y]
//! ```
//!
//! Working pairs are chosen by maximal violation with second-order gain,
//! and the solver stops once the violation gap drops below `tol`.

use log::warn;
use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::linear::check_design;
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

/// Floor on the default update cap. Small problems with a low-rank kernel
/// can need far more than `10 m^2` updates to close the gap.
pub const MIN_DEFAULT_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub kernel: KernelSpec,
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    /// Cap on pair updates; `None` means ten sweeps per sample (`10 m`
    /// sweeps of `m` updates), but never fewer than [`MIN_DEFAULT_ITER`].
    pub max_iter: Option<usize>,
}

impl SvrParams {
    pub fn new(kernel: KernelSpec) -> Self {
        Self {
            kernel,
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-3,
            max_iter: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::param(format!("C must be > 0, got {}", self.c)));
        }
        if !(self.epsilon >= 0.0) || !(self.tol > 0.0) {
            return Err(Error::param("epsilon must be >= 0 and tol > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub kernel: KernelSpec,
    pub c: f64,
    pub epsilon: f64,
    /// `alpha_i - alpha*_i` for each retained support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub support_inputs: Vec<Vec<f64>>,
}

impl SvrModel {
    pub fn dim(&self) -> usize {
        self.support_inputs.first().map(Vec::len).unwrap_or(0)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if !self.support_inputs.is_empty() && x.len() != self.dim() {
            return Err(Error::param(format!(
                "SVR model expects {} features, got {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(self.decision(x))
    }

    fn decision(&self, x: &[f64]) -> f64 {
        self.dual_coefs
            .iter()
            .zip(&self.support_inputs)
            .map(|(a, sv)| a * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    pub fn support_count(&self) -> usize {
        self.dual_coefs.len()
    }
}

/// Everything the solver produced, before zero coefficients are dropped.
#[derive(Debug, Clone)]
pub struct SvrFit {
    pub model: SvrModel,
    /// `alpha_i - alpha*_i` for every training row, in input order.
    pub coefs: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Dual objective (maximisation form) after each sweep of `m` updates,
    /// plus the final value.
    pub objective_trace: Vec<f64>,
}

struct Solver<'a> {
    m: usize,
    kmat: &'a [f64],
    c: f64,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    p: Vec<f64>,
}

impl Solver<'_> {
    fn sign(&self, t: usize) -> f64 {
        if t < self.m {
            1.0
        } else {
            -1.0
        }
    }

    fn k(&self, t: usize, u: usize) -> f64 {
        self.kmat[(t % self.m) * self.m + (u % self.m)]
    }

    fn q(&self, t: usize, u: usize) -> f64 {
        self.sign(t) * self.sign(u) * self.k(t, u)
    }

    fn in_up(&self, t: usize) -> bool {
        if t < self.m {
            self.alpha[t] < self.c
        } else {
            self.alpha[t] > 0.0
        }
    }

    fn in_low(&self, t: usize) -> bool {
        if t < self.m {
            self.alpha[t] > 0.0
        } else {
            self.alpha[t] < self.c
        }
    }

    /// Returns the working pair, or `None` when the violation gap is below `tol`.
    fn select(&self, tol: f64) -> Option<(usize, usize)> {
        let n = 2 * self.m;
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if self.in_up(t) {
                let v = -self.sign(t) * self.grad[t];
                if v >= gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        if i == usize::MAX {
            return None;
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        let kii = self.k(i, i);
        for t in 0..n {
            if !self.in_low(t) {
                continue;
            }
            let v = self.sign(t) * self.grad[t];
            gmax2 = gmax2.max(v);
            let diff = gmax + v;
            if diff > 0.0 {
                let mut quad = kii + self.k(t, t) - 2.0 * self.k(i, t);
                if quad <= 0.0 {
                    quad = TAU;
                }
                let gain = -diff * diff / quad;
                if gain <= best {
                    best = gain;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < tol || j == usize::MAX {
            return None;
        }
        Some((i, j))
    }

    fn update(&mut self, i: usize, j: usize) {
        let c = self.c;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if self.sign(i) != self.sign(j) {
            let mut quad = self.q(i, i) + self.q(j, j) + 2.0 * self.q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = self.q(i, i) + self.q(j, j) - 2.0 * self.q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..2 * self.m {
            self.grad[t] += self.q(t, i) * di + self.q(t, j) * dj;
        }
    }

    /// Dual objective in maximisation form, `-(1/2 b'Qb + p'b)`.
    fn objective(&self) -> f64 {
        -0.5 * self
            .alpha
            .iter()
            .zip(self.grad.iter().zip(&self.p))
            .map(|(a, (g, p))| a * (g + p))
            .sum::<f64>()
    }

    fn bias(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free_sum, mut free) = (0.0, 0usize);
        for t in 0..2 * self.m {
            let yg = self.sign(t) * self.grad[t];
            let at_upper = self.alpha[t] >= self.c;
            let at_lower = self.alpha[t] <= 0.0;
            let positive = t < self.m;
            if at_upper {
                if positive {
                    lb = lb.max(yg);
                } else {
                    ub = ub.min(yg);
                }
            } else if at_lower {
                if positive {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                free_sum += yg;
            }
        }
        let rho = if free > 0 {
            free_sum / free as f64
        } else {
            (ub + lb) / 2.0
        };
        -rho
    }
}

pub fn train_svr(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> Result<SvrFit> {
    params.validate()?;
    check_design(x, y)?;
    let m = x.len();
    if m < 2 {
        return Err(Error::param("SVR needs at least two samples"));
    }
    let mut kmat = vec![0.0; m * m];
    for a in 0..m {
        for b in a..m {
            let v = params.kernel.eval(&x[a], &x[b]);
            kmat[a * m + b] = v;
            kmat[b * m + a] = v;
        }
    }
    if kmat.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("kernel matrix is not finite"));
    }
    let p: Vec<f64> = (0..2 * m)
        .map(|t| {
            if t < m {
                params.epsilon - y[t]
            } else {
                params.epsilon + y[t - m]
            }
        })
        .collect();
    let mut solver = Solver {
        m,
        kmat: &kmat,
        c: params.c,
        alpha: vec![0.0; 2 * m],
        grad: p.clone(),
        p,
    };
    let max_iter = params.max_iter.unwrap_or((10 * m * m).max(MIN_DEFAULT_ITER)).max(1);
    let mut trace = vec![solver.objective()];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let Some((i, j)) = solver.select(params.tol) else {
            converged = true;
            break;
        };
        solver.update(i, j);
        iterations += 1;
        if iterations % m == 0 {
            trace.push(solver.objective());
        }
    }
    if !converged {
        // one more check in case the last update closed the gap
        converged = solver.select(params.tol).is_none();
    }
    if !converged {
        warn!("SVR stopped at the iteration cap ({max_iter}) before reaching tol={}", params.tol);
    }
    trace.push(solver.objective());

    let coefs: Vec<f64> = (0..m).map(|i| solver.alpha[i] - solver.alpha[i + m]).collect();
    let bias = solver.bias();
    let (dual_coefs, support_inputs) = coefs
        .iter()
        .zip(x)
        .filter(|(c, _)| **c != 0.0)
        .map(|(c, row)| (*c, row.clone()))
        .unzip();
    Ok(SvrFit {
        model: SvrModel {
            kernel: params.kernel,
            c: params.c,
            epsilon: params.epsilon,
            dual_coefs,
            bias,
            support_inputs,
        },
        coefs,
        iterations,
        converged,
        objective_trace: trace,
    })
}

pub fn predict_svr(model: &SvrModel, x: &[f64]) -> Result<f64> {
    model.predict(x)
}

/// Largest violation of the optimality conditions over the training rows,
/// measured on residuals `r = y - f(x)`:
///
/// * coefficient 0: `|r| <= eps`
/// * coefficient strictly inside `(0, C)`: `r = eps` (or `-eps` when negative)
/// * coefficient at `+C`: `r >= eps`; at `-C`: `r <= -eps`
pub fn kkt_violation(fit: &SvrFit, x: &[Vec<f64>], y: &[f64]) -> f64 {
    let model = &fit.model;
    let (c, eps) = (model.c, model.epsilon);
    fit.coefs
        .iter()
        .zip(x.iter().zip(y))
        .map(|(&coef, (xi, &yi))| {
            let r = yi - model.decision(xi);
            if coef == 0.0 {
                (r.abs() - eps).max(0.0)
            } else if coef >= c {
                (eps - r).max(0.0)
            } else if coef <= -c {
                (r + eps).max(0.0)
            } else if coef > 0.0 {
                (r - eps).abs()
            } else {
                (r + eps).abs()
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn smooth_problem(m: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..m).map(|i| vec![i as f64 / (m - 1) as f64 * 4.0 - 2.0]).collect();
        let y = x.iter().map(|r| (1.5 * r[0]).sin() + 0.3 * r[0]).collect();
        (x, y)
    }

    #[test]
    fn constant_target_needs_no_support_vectors() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64 * 0.1]).collect();
        let y = vec![3.0; 10];
        let fit = train_svr(&x, &y, &SvrParams::new(KernelSpec::rbf(0.5))).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.model.support_count(), 0);
        for xi in &x {
            assert!((fit.model.predict(xi).unwrap() - 3.0).abs() <= 0.1);
        }
        assert!((fit.model.predict(&[100.0, -5.0]).unwrap() - 3.0).abs() <= 0.1);
    }

    #[test]
    fn smooth_function_passes_kkt_audit() {
        let (x, y) = smooth_problem(30);
        let params = SvrParams::new(KernelSpec::rbf(1.0));
        let fit = train_svr(&x, &y, &params).unwrap();
        assert!(fit.converged);
        assert!(kkt_violation(&fit, &x, &y) <= params.tol);
        assert!(fit.model.dual_coefs.iter().all(|a| a.abs() <= params.c));
        // rows whose coefficient is zero sit inside the tube
        for ((coef, xi), yi) in fit.coefs.iter().zip(&x).zip(&y) {
            if *coef == 0.0 {
                assert!((fit.model.predict(xi).unwrap() - yi).abs() <= params.epsilon + params.tol);
            }
        }
    }

    #[test]
    fn dual_objective_never_decreases() {
        let mut rng = rng_from_seed(3);
        let x: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * r[1] * 4.0 + r[2]).collect();
        let fit = train_svr(&x, &y, &SvrParams::new(KernelSpec::rbf(1.0 / 3.0))).unwrap();
        assert!(fit.objective_trace.len() > 2);
        for w in fit.objective_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn iteration_cap_is_reported() {
        let (x, y) = smooth_problem(30);
        let params = SvrParams {
            max_iter: Some(2),
            c: 100.0,
            ..SvrParams::new(KernelSpec::rbf(1.0))
        };
        let fit = train_svr(&x, &y, &params).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 2);
    }

    #[test]
    fn single_support_vector_prediction() {
        let model = SvrModel {
            kernel: KernelSpec::rbf(0.3),
            c: 1.0,
            epsilon: 0.1,
            dual_coefs: vec![1.0],
            bias: 0.25,
            support_inputs: vec![vec![1.0, 2.0]],
        };
        assert_eq!(predict_svr(&model, &[1.0, 2.0]).unwrap(), 1.25);
        assert!(predict_svr(&model, &[1.0]).is_err());
        let empty = SvrModel {
            dual_coefs: vec![],
            support_inputs: vec![],
            ..model
        };
        assert_eq!(predict_svr(&empty, &[9.0, 9.0]).unwrap(), 0.25);
    }

    #[test]
    fn rejects_nan_and_tiny_input() {
        let params = SvrParams::new(KernelSpec::linear());
        assert!(train_svr(&[vec![f64::NAN], vec![1.0]], &[1.0, 2.0], &params).is_err());
        assert!(train_svr(&[vec![1.0]], &[1.0], &params).is_err());
    }
}
