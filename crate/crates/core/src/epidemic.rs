//! Discrete-time SIR dynamics with disease deaths on a static network,
//! per-step rate-constant estimation and the tail-averaged R0.
//!
//! One step is synchronous: every transition is decided from the states at
//! the start of the step. Random draws are consumed in a fixed order
//! (susceptible nodes by ascending id, then infected, then recovered) so a
//! seed fully determines a trace.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{rng_from_seed, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum State {
    S,
    I,
    R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpidemicParams {
    /// Infection shape: a susceptible node with `i` infected neighbours is
    /// infected with probability `1 - exp(-k i)`.
    pub k: f64,
    pub p_ir: f64,
    pub p_id: f64,
    pub p_rs: f64,
    pub s0_frac: f64,
    pub i0_frac: f64,
    pub r0_frac: f64,
    pub steps: usize,
    pub tail: usize,
}

impl Default for EpidemicParams {
    fn default() -> Self {
        Self {
            k: 0.1,
            p_ir: 0.6,
            p_id: 0.3,
            p_rs: 0.1,
            s0_frac: 0.995,
            i0_frac: 0.005,
            r0_frac: 0.0,
            steps: 100,
            tail: 20,
        }
    }
}

/// Step length; all rates are per step.
pub const DT: f64 = 1.0;

impl EpidemicParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(Error::param(format!("k must be finite and >= 0, got {}", self.k)));
        }
        for (name, p) in [
            ("p_ir", self.p_ir),
            ("p_id", self.p_id),
            ("p_rs", self.p_rs),
            ("s0_frac", self.s0_frac),
            ("i0_frac", self.i0_frac),
            ("r0_frac", self.r0_frac),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        let total = self.s0_frac + self.i0_frac + self.r0_frac;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!(
                "initial fractions must sum to 1, got {total}"
            )));
        }
        if self.tail > self.steps {
            return Err(Error::param(format!(
                "tail window {} exceeds horizon {}",
                self.tail, self.steps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub s: usize,
    pub i: usize,
    pub r: usize,
    pub new_si: usize,
    pub new_ir: usize,
    /// Infected nodes that died and re-entered as susceptible.
    pub new_id: usize,
    pub new_rs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub params: EpidemicParams,
    pub n: usize,
    /// `steps + 1` records; record 0 is the initial condition.
    pub records: Vec<StepRecord>,
}

impl SimulationTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,S,I,R,new_SI,new_IR,new_ID,new_RS\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.t, r.s, r.i, r.r, r.new_si, r.new_ir, r.new_id, r.new_rs
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimates {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
}

pub fn infection_probability(k: f64, infected_neighbors: usize) -> f64 {
    -(-k * infected_neighbors as f64).exp_m1()
}

fn count_states(states: &[State]) -> (usize, usize, usize) {
    states.iter().fold((0, 0, 0), |(s, i, r), st| match st {
        State::S => (s + 1, i, r),
        State::I => (s, i + 1, r),
        State::R => (s, i, r + 1),
    })
}

fn seed_count(n: usize, frac: f64, at_least_one: bool) -> usize {
    let c = (n as f64 * frac).round() as usize;
    if at_least_one && frac > 0.0 {
        c.max(1)
    } else {
        c
    }
}

/// Places `round(n i0)` infected (at least one when `i0 > 0`) and
/// `round(n r0)` recovered nodes uniformly at random; the rest are susceptible.
pub fn initialize_states(graph: &Graph, params: &EpidemicParams, rng: &mut SimRng) -> Vec<State> {
    let n = graph.node_count();
    let n_i = seed_count(n, params.i0_frac, true).min(n);
    let n_r = seed_count(n, params.r0_frac, false).min(n - n_i);
    let mut order: Vec<usize> = (0..n).collect();
    order.partial_shuffle(rng, n_i + n_r);
    let mut states = vec![State::S; n];
    for &v in &order[..n_i] {
        states[v] = State::I;
    }
    for &v in &order[n_i..n_i + n_r] {
        states[v] = State::R;
    }
    states
}

/// Advances every node one synchronous step. The returned record carries the
/// compartment counts after the step and the transition counts of the step.
pub fn step(
    graph: &Graph,
    states: &[State],
    params: &EpidemicParams,
    t: usize,
    rng: &mut SimRng,
) -> (Vec<State>, StepRecord) {
    let mut next = states.to_vec();
    let (mut new_si, mut new_ir, mut new_id, mut new_rs) = (0, 0, 0, 0);

    for (v, st) in states.iter().enumerate() {
        if *st != State::S {
            continue;
        }
        let infected = graph
            .neighbors(v)
            .iter()
            .filter(|&&u| states[u] == State::I)
            .count();
        let u: f64 = rng.random();
        if u < infection_probability(params.k, infected) {
            next[v] = State::I;
            new_si += 1;
        }
    }
    for (v, st) in states.iter().enumerate() {
        if *st != State::I {
            continue;
        }
        if rng.random::<f64>() < params.p_ir {
            next[v] = State::R;
            new_ir += 1;
        } else if rng.random::<f64>() < params.p_id {
            // the dead individual is replaced by a fresh susceptible
            next[v] = State::S;
            new_id += 1;
        }
    }
    for (v, st) in states.iter().enumerate() {
        if *st != State::R {
            continue;
        }
        if rng.random::<f64>() < params.p_rs {
            next[v] = State::S;
            new_rs += 1;
        }
    }

    let (s, i, r) = count_states(&next);
    let record = StepRecord {
        t,
        s,
        i,
        r,
        new_si,
        new_ir,
        new_id,
        new_rs,
    };
    (next, record)
}

pub fn simulate(graph: &Graph, params: &EpidemicParams, seed: u64) -> Result<SimulationTrace> {
    params.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut states = initialize_states(graph, params, &mut rng);
    let (s, i, r) = count_states(&states);
    let mut records = Vec::with_capacity(params.steps + 1);
    records.push(StepRecord {
        t: 0,
        s,
        i,
        r,
        new_si: 0,
        new_ir: 0,
        new_id: 0,
        new_rs: 0,
    });
    for t in 1..=params.steps {
        let (next, rec) = step(graph, &states, params, t, &mut rng);
        states = next;
        records.push(rec);
    }
    Ok(SimulationTrace {
        params: params.clone(),
        n: graph.node_count(),
        records,
    })
}

/// Rate constants for one completed step, measured against the compartment
/// sizes at the start of that step. Empty denominators fall back to the
/// model probabilities (or zero transmission for `a`).
pub fn estimate_rates(
    record: &StepRecord,
    prev_s: usize,
    prev_i: usize,
    prev_r: usize,
    params: &EpidemicParams,
) -> RateEstimates {
    let a = if prev_s * prev_i > 0 {
        record.new_si as f64 / (prev_s as f64 * prev_i as f64 * DT)
    } else {
        0.0
    };
    let (b, c) = if prev_i > 0 {
        let recovered = record.new_ir as f64 / (prev_i as f64 * DT);
        let died = record.new_id as f64 / (prev_i as f64 * DT);
        (recovered, (1.0 - recovered) * died)
    } else {
        (params.p_ir, (1.0 - params.p_ir) * params.p_id)
    };
    let e = if prev_r > 0 {
        record.new_rs as f64 / (prev_r as f64 * DT)
    } else {
        params.p_rs
    };
    RateEstimates { a, b, c, e }
}

/// Instantaneous `a N / (b + c)` for each step of the tail window, in step
/// order. Steps with `b + c = 0` contribute 0.
pub fn instantaneous_r0(trace: &SimulationTrace) -> Result<Vec<f64>> {
    let tail = trace.params.tail;
    let steps = trace.records.len().saturating_sub(1);
    if tail > steps {
        return Err(Error::param(format!(
            "tail window {tail} exceeds trace length {steps}"
        )));
    }
    let n = trace.n as f64;
    Ok((steps + 1 - tail..=steps)
        .map(|t| {
            let prev = &trace.records[t - 1];
            let rates = estimate_rates(&trace.records[t], prev.s, prev.i, prev.r, &trace.params);
            let denom = rates.b + rates.c;
            if denom > 0.0 {
                rates.a * n / denom
            } else {
                0.0
            }
        })
        .collect())
}

/// True when the infection is alive at every step that feeds the tail
/// estimate, including the step just before the window.
pub fn persists(trace: &SimulationTrace) -> bool {
    let start = trace.records.len().saturating_sub(trace.params.tail + 1);
    trace.records[start..].iter().all(|r| r.i > 0)
}

/// Mean of the instantaneous R0 over the last `tail` steps.
pub fn compute_r0(trace: &SimulationTrace) -> Result<f64> {
    let values = instantaneous_r0(trace)?;
    if values.is_empty() {
        return Err(Error::param("tail window is empty"));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Fraction that must be immunised to stop persistent spread: `max(0, 1 - 1/R0)`.
pub fn herd_immunity_threshold(r0: f64) -> Result<f64> {
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::param(format!("R0 must be positive and finite, got {r0}")));
    }
    Ok((1.0 - 1.0 / r0).max(0.0))
}
