use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Dims, LocalDomain, Machine, ParError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "2D")]
    TwoD,
    #[serde(rename = "2.5D")]
    TwoAndHalfD,
    #[serde(rename = "recursive")]
    Recursive,
    #[serde(rename = "COSMA")]
    Cosma,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::TwoD,
        Strategy::TwoAndHalfD,
        Strategy::Recursive,
        Strategy::Cosma,
    ];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::TwoD => "2D",
            Strategy::TwoAndHalfD => "2.5D",
            Strategy::Recursive => "recursive",
            Strategy::Cosma => "COSMA",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "2d" => Ok(Strategy::TwoD),
            "2.5d" | "25d" => Ok(Strategy::TwoAndHalfD),
            "recursive" | "carma" => Ok(Strategy::Recursive),
            "cosma" => Ok(Strategy::Cosma),
            other => Err(format!(
                "unknown strategy `{other}` (expected 2d, 2.5d, recursive or cosma)"
            )),
        }
    }
}

/// Per-rank words moved (`q`) and messages (`l`) under one decomposition.
/// `rounds` is the number of communication rounds of the round-based
/// schedule where the model defines one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub strategy: Strategy,
    pub q: f64,
    pub l: f64,
    pub rounds: Option<usize>,
}

fn per_rank_volume(dims: &Dims, machine: &Machine) -> f64 {
    dims.volume() / machine.p as f64
}

/// Side of the resident C block: `sqrt(S)` when memory binds, otherwise the
/// cube root of the per-rank volume.
fn optimal_side(dims: &Dims, machine: &Machine) -> f64 {
    (machine.s as f64).sqrt().min(per_rank_volume(dims, machine).cbrt())
}

/// Integer local domain `a x a x b` with `a = min(floor(sqrt S), round(V^(1/3)))`
/// and `b = ceil(V / a^2)`, `V = mnk/p`.
pub fn optimal_domain(dims: &Dims, machine: &Machine) -> Result<LocalDomain, ParError> {
    machine.validate()?;
    machine.check_fits(dims)?;
    let v = per_rank_volume(dims, machine);
    let a = ((machine.s as f64).sqrt().floor() as usize)
        .min(v.cbrt().round() as usize)
        .max(1);
    let b = ((v / (a * a) as f64).ceil() as usize).max(1);
    Ok(LocalDomain::new(a, a, b, machine.s))
}

/// Words each rank must move: `2V/a + a^2` at the optimal side `a`, which is
/// `3 V^(2/3)` when the whole block fits and `2V/sqrt(S) + S` otherwise.
pub fn predicted_io(dims: &Dims, machine: &Machine) -> Result<f64, ParError> {
    machine.validate()?;
    machine.check_fits(dims)?;
    let v = per_rank_volume(dims, machine);
    let a = optimal_side(dims, machine);
    Ok(2.0 * v / a + a * a)
}

fn cosma_latency(dims: &Dims, machine: &Machine) -> f64 {
    let v = per_rank_volume(dims, machine);
    let a = optimal_side(dims, machine);
    let b = v / (a * a);
    let s = machine.s as f64;
    // outer products per step, at least one
    let step = ((s - a * a) / (2.0 * a)).max(1.0);
    let levels = (dims.m as f64 * dims.n as f64 / (a * a)).log2();
    (b / step * levels).max(0.0)
}

/// Evaluates the general-case (Q, L) pair of `strategy` in real arithmetic.
pub fn strategy_cost(strategy: Strategy, dims: &Dims, machine: &Machine) -> Result<CostEstimate, ParError> {
    machine.validate()?;
    machine.check_fits(dims)?;
    let (m, n, k) = (dims.m as f64, dims.n as f64, dims.k as f64);
    let p = machine.p as f64;
    let s = machine.s as f64;
    let v = per_rank_volume(dims, machine);
    let (q, l, rounds) = match strategy {
        Strategy::TwoD => (k * (m + n) / p.sqrt() + m * n / p, 2.0 * k * p.sqrt().log2(), None),
        Strategy::TwoAndHalfD => {
            let kmn = k * (m + n);
            let q = kmn.powf(1.5) / (p * s.sqrt()) + m * n * s / kmn;
            let c = p * s / (m * k + n * k);
            let l = kmn.powf(2.5) / (p * s.powf(1.5) * (k * m + k * n - m * n)) + 3.0 * c.log2();
            (q, l, None)
        }
        Strategy::Recursive => {
            let a = v.cbrt().min((s / 3.0).sqrt());
            let q = 2.0 * v / a + v.powf(2.0 / 3.0);
            let l = 3f64.powf(1.5) * m * n * k / (p * s.powf(1.5)) + 3.0 * p.log2();
            (q, l, None)
        }
        Strategy::Cosma => {
            let q = predicted_io(dims, machine)?;
            let rounds = optimal_domain(dims, machine)?.steps;
            (q, cosma_latency(dims, machine), Some(rounds))
        }
    };
    Ok(CostEstimate {
        strategy,
        q: q.max(0.0),
        l: l.max(0.0),
        rounds,
    })
}

/// Trades words for messages by fixing `h` outer products per step. The
/// side `a` is the integer minimiser of `2V/a + a^2` among sides leaving room
/// for the step (`a^2 + 2ah <= S`); `l` is the number of steps `ceil(b/h)`.
pub fn io_latency_tradeoff(dims: &Dims, machine: &Machine, h: usize) -> Result<CostEstimate, ParError> {
    machine.validate()?;
    machine.check_fits(dims)?;
    let s = machine.s;
    let max_h = (s - 1) / 2;
    if h == 0 || h > max_h {
        return Err(ParError::StepTooWide { h, max_h });
    }
    // largest a with a^2 + 2ah <= S
    let mut a_max = (s as f64).sqrt() as usize;
    while a_max * a_max + 2 * a_max * h > s {
        a_max -= 1;
    }
    let v = per_rank_volume(dims, machine);
    let q_of = |a: usize| 2.0 * v / a as f64 + (a * a) as f64;
    let root = v.cbrt();
    let mut a = a_max;
    for cand in [root.floor() as usize, root.ceil() as usize] {
        if (1..=a_max).contains(&cand) && q_of(cand) < q_of(a) {
            a = cand;
        }
    }
    let b = ((v / (a * a) as f64).ceil() as usize).max(1);
    let steps = b.div_ceil(h);
    Ok(CostEstimate {
        strategy: Strategy::Cosma,
        q: q_of(a),
        l: steps as f64,
        rounds: Some(steps),
    })
}
