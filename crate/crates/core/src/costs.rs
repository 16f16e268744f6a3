//! BPR travel times, capacity excess and social-cost aggregation.

use crate::error::{Error, Result};
use crate::network::Edge;

/// BPR value for a given flow/capacity ratio. `0^0` is taken as 1, so an
/// edge with power 0 costs `F (1 + B)` at every flow.
fn bpr_at_ratio(edge: &Edge, ratio: f64) -> f64 {
    let term = if edge.power == 0.0 {
        1.0
    } else {
        ratio.powf(edge.power)
    };
    edge.free_flow * (1.0 + edge.b_coeff * term)
}

/// Uncapped BPR travel time `F (1 + B (x / capacity)^p)`.
pub fn bpr_time(edge: &Edge, flow: f64) -> f64 {
    bpr_at_ratio(edge, flow / edge.capacity)
}

/// BPR travel time with the flow/capacity ratio clamped at 1.
pub fn bpr_time_capped(edge: &Edge, flow: f64) -> f64 {
    bpr_at_ratio(edge, (flow / edge.capacity).min(1.0))
}

/// Flow above capacity, or zero.
pub fn excess(edge: &Edge, flow: f64) -> f64 {
    (flow - edge.capacity).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostParams {
    pub capped: bool,
}

impl CostParams {
    pub fn edge_cost(&self, edge: &Edge, flow: f64) -> f64 {
        if self.capped {
            bpr_time_capped(edge, flow)
        } else {
            bpr_time(edge, flow)
        }
    }
}

/// Cost of one action as a function of how many agents take it.
#[derive(Debug, Clone, PartialEq)]
pub enum AbstractCostFn {
    /// `sum_k coeffs[k] * n^k`.
    Polynomial { coeffs: Vec<f64> },
    /// 1 below `(N + 1) / 2` users, `(J + 1)^((2n - N) / N)` from there on.
    Flapping { j: f64, n: f64 },
    /// `n / N + offset`, which is `1/N`-Lipschitz.
    LinearOverN { n: f64, offset: f64 },
}

impl AbstractCostFn {
    pub fn eval(&self, count: f64) -> f64 {
        match self {
            AbstractCostFn::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * count + c)
            }
            AbstractCostFn::Flapping { j, n } => {
                if count < (n + 1.0) / 2.0 {
                    1.0
                } else {
                    (j + 1.0).powf((2.0 * count - n) / n)
                }
            }
            AbstractCostFn::LinearOverN { n, offset } => count / n + offset,
        }
    }
}

/// Population-weighted social cost `sum_m (n_m / N) c_m(n_m)`.
pub fn social_cost_abstract(counts: &[f64], costs: &[AbstractCostFn], total: f64) -> Result<f64> {
    if counts.len() != costs.len() {
        return Err(Error::validation(format!(
            "{} counts for {} cost functions",
            counts.len(),
            costs.len()
        )));
    }
    if total.is_nan() || total <= 0.0 {
        return Err(Error::validation("agent total must be positive"));
    }
    let sum: f64 = counts.iter().sum();
    if (sum - total).abs() > 1e-9 * total {
        return Err(Error::validation(format!(
            "counts sum to {sum}, expected {total}"
        )));
    }
    Ok(counts
        .iter()
        .zip(costs)
        .map(|(&n, c)| n / total * c.eval(n))
        .sum())
}

/// Total travel time: sum over paths of `cost * agents`.
pub fn social_cost_network(paths: &[(f64, f64)]) -> f64 {
    paths.iter().map(|&(cost, agents)| cost * agents).sum()
}

/// Arithmetic mean of a per-period cost series.
pub fn time_averaged_cost(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::validation("empty cost series"));
    }
    Ok(series.iter().sum::<f64>() / series.len() as f64)
}

/// Social cost of splitting `total` agents as `x` on action 1 and
/// `total - x` on action 2, with `x` treated as continuous.
pub fn two_action_split_cost(x: f64, total: f64, c1: &AbstractCostFn, c2: &AbstractCostFn) -> f64 {
    let y = total - x;
    x / total * c1.eval(x) + y / total * c2.eval(y)
}

/// Minimises `f` on `[lo, hi]`: a uniform grid locates the basin, then
/// golden-section search refines it. Returns `(argmin, min)`.
pub fn minimize_on_interval<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, grid: usize) -> (f64, f64) {
    let grid = grid.max(2);
    let step = (hi - lo) / grid as f64;
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for i in 0..=grid {
        let v = f(lo + step * i as f64);
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    let mut a = (lo + step * (best as f64 - 1.0)).max(lo);
    let mut b = (lo + step * (best as f64 + 1.0)).min(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-12 * (1.0 + a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // the grid point can beat the refined one at an endpoint minimum
    if best_val < fx {
        (lo + step * best as f64, best_val)
    } else {
        (x, fx)
    }
}
