//! The per-period network simulation.
//!
//! Each period: draw the population profile, broadcast the per-edge
//! signal from past costs, load every type's demand onto its tight paths,
//! evaluate edge costs and record them, then aggregate social cost and
//! capacity excess. The signal at period `t` depends only on periods
//! before `t`.

use std::io::Write;
use std::sync::Arc;

use crate::assignment::assign;
use crate::costs::{
    bpr_time, bpr_time_capped, excess, minimize_on_interval, social_cost_network, CostParams,
};
use crate::error::{Error, Result};
use crate::instances::Instance;
use crate::network::{DemandTable, Network};
use crate::population::{RenewalProcess, TypeSet};
use crate::rng::{substream, Stream};
use crate::signaling::{emit_signal, CostHistory, Signal, SignalingScheme};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scheme: Arc<dyn SignalingScheme>,
    pub horizon: usize,
    pub seed: u64,
    pub capped: bool,
    pub type_count: usize,
    pub eps: f64,
}

impl RunConfig {
    /// Capped costs, 5 risk types, `eps = 0.15`, 500 periods, seed 1.
    pub fn new(scheme: Arc<dyn SignalingScheme>) -> Self {
        RunConfig {
            scheme,
            horizon: 500,
            seed: 1,
            capped: true,
            type_count: 5,
            eps: 0.15,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::config("horizon must be at least 1"));
        }
        if self.type_count < 2 {
            return Err(Error::config("need at least 2 risk types"));
        }
        if self.eps.is_nan() || self.eps < 0.0 {
            return Err(Error::config("eps must be nonnegative"));
        }
        Ok(())
    }
}

/// Everything observed in one period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodRecord {
    pub t: usize,
    pub flows: Vec<f64>,
    pub costs: Vec<f64>,
    pub social_cost: f64,
    pub total_excess: f64,
    pub weights: Vec<f64>,
    pub signal: Signal,
}

/// Runs `config.horizon` periods on `net` with `demand`.
pub fn run(net: &Network, demand: &DemandTable, config: &RunConfig) -> Result<Vec<PeriodRecord>> {
    config.validate()?;
    for &(o, d) in demand.entries().keys() {
        if o as usize > net.node_count() || d as usize > net.node_count() {
            return Err(Error::validation(format!(
                "demand pair {o}->{d} references a node outside the network"
            )));
        }
    }
    let types = TypeSet::uniform(config.type_count)?;
    let renewal = RenewalProcess::uniform_perturbation(config.type_count, config.eps)?;
    let mut rng = substream(config.seed, Stream::Population, 0);
    let scheme = config.scheme.as_ref();
    let mut history = CostHistory::for_scheme(net.edge_count(), scheme);
    let params = CostParams {
        capped: config.capped,
    };

    let mut records = Vec::with_capacity(config.horizon);
    for t in 1..=config.horizon {
        let profile = renewal.sample(&mut rng);
        let signal = emit_signal(&history, scheme);
        let state = assign(net, demand, &signal, &profile, &types)?;
        let costs: Vec<f64> = net
            .edges()
            .iter()
            .zip(&state.edge_flows)
            .map(|(e, &x)| params.edge_cost(e, x))
            .collect();
        history.record_period(&costs)?;
        let social_cost = social_cost_network(&state.path_costs(&costs));
        let total_excess = net
            .edges()
            .iter()
            .zip(&state.edge_flows)
            .map(|(e, &x)| excess(e, x))
            .sum();
        records.push(PeriodRecord {
            t,
            flows: state.edge_flows,
            costs,
            social_cost,
            total_excess,
            weights: profile.weights().to_vec(),
            signal,
        });
    }
    Ok(records)
}

/// Runs one simulation per scheme, concurrently. Results keep the order
/// of `schemes`.
pub fn sweep(
    net: &Network,
    demand: &DemandTable,
    base: &RunConfig,
    schemes: &[Arc<dyn SignalingScheme>],
) -> Result<Vec<Vec<PeriodRecord>>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = schemes
            .iter()
            .map(|scheme| {
                let config = RunConfig {
                    scheme: scheme.clone(),
                    ..base.clone()
                };
                scope.spawn(move || run(net, demand, &config))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub window: usize,
    pub mean_cost: f64,
    pub mean_excess: f64,
    /// Mean cost minus the reference cost; negative when beating it.
    pub regret: Option<f64>,
}

/// Means over the last `window` periods (default `min(50, T)`).
pub fn summarize(
    records: &[PeriodRecord],
    reference_cost: Option<f64>,
    window: Option<usize>,
) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::validation("no periods to summarize"));
    }
    let window = window.unwrap_or_else(|| records.len().min(50));
    if window == 0 || window > records.len() {
        return Err(Error::validation(format!(
            "summary window {window} outside 1..={}",
            records.len()
        )));
    }
    let tail = &records[records.len() - window..];
    let mean_cost = tail.iter().map(|r| r.social_cost).sum::<f64>() / window as f64;
    let mean_excess = tail.iter().map(|r| r.total_excess).sum::<f64>() / window as f64;
    Ok(Summary {
        window,
        mean_cost,
        mean_excess,
        regret: reference_cost.map(|c| mean_cost - c),
    })
}

/// Mean of `|x_t - x_{t-1}|` over consecutive entries.
pub fn mean_abs_change(series: &[f64]) -> f64 {
    if series.len() < 2 {
        return 0.0;
    }
    series.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (series.len() - 1) as f64
}

/// Flow on edge `edge` in every period.
pub fn edge_flow_series(records: &[PeriodRecord], edge: usize) -> Vec<f64> {
    records.iter().map(|r| r.flows[edge]).collect()
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes one CSV row per period, edge columns in network order.
pub fn write_csv<W: Write>(records: &[PeriodRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let Some(first) = records.first() else {
        w.flush()?;
        return Ok(());
    };
    let edges = first.flows.len();
    let types = first.weights.len();
    let mut header = vec!["t".to_string(), "social_cost".into(), "total_excess".into()];
    header.extend((1..=types).map(|k| format!("w_omega_{k}")));
    for prefix in ["flow", "cost", "ulo", "uhi"] {
        header.extend((1..=edges).map(|e| format!("{prefix}_e{e}")));
    }
    w.write_record(&header)?;
    for r in records {
        let mut row = Vec::with_capacity(header.len());
        row.push(r.t.to_string());
        row.push(fmt_f64(r.social_cost));
        row.push(fmt_f64(r.total_excess));
        row.extend(r.weights.iter().map(|&x| fmt_f64(x)));
        row.extend(r.flows.iter().map(|&x| fmt_f64(x)));
        row.extend(r.costs.iter().map(|&x| fmt_f64(x)));
        row.extend(r.signal.intervals().iter().map(|iv| fmt_f64(iv.lo)));
        row.extend(r.signal.intervals().iter().map(|iv| fmt_f64(iv.hi)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// The two-route Diamond objective `(2-x)(1+(2-x)^2) + x(10+x^6)`.
pub fn diamond_sue_expression(x: f64) -> f64 {
    let y = 2.0 - x;
    y * (1.0 + y * y) + x * (10.0 + x.powi(6))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SueOracle {
    /// Minimiser of [`diamond_sue_expression`] on `[0, 2]`.
    pub x: f64,
    /// Minimum of [`diamond_sue_expression`].
    pub uncapped_cost: f64,
    /// Flows on links 2-3 and 2-4 with `x` read as the 2-4 flow/capacity
    /// ratio and `2 - x` as the 2-3 ratio.
    pub flow_23: f64,
    pub flow_24: f64,
    /// Total capped travel time of that split on the Diamond network.
    pub capped_cost: f64,
    /// Total uncapped travel time of that split on the Diamond network.
    pub network_uncapped_cost: f64,
    pub excess: f64,
}

/// Minimises the Diamond objective and evaluates the optimal split.
pub fn diamond_sue_oracle() -> SueOracle {
    let (x, min) = minimize_on_interval(diamond_sue_expression, 0.0, 2.0, 2000);
    let (net, demand) = Instance::Diamond
        .load()
        .expect("built-in Diamond instance parses");
    let total = demand.total();
    let e23 = net.find_edge(2, 3).expect("Diamond has link 2-3");
    let e24 = net.find_edge(2, 4).expect("Diamond has link 2-4");
    let flow_23 = e23.capacity * (2.0 - x);
    let flow_24 = e24.capacity * x;
    let flows: Vec<f64> = net
        .edges()
        .iter()
        .map(|e| match (e.from, e.to) {
            (1, 2) => total,
            (2, 3) | (3, 5) => flow_23,
            (2, 4) | (4, 5) => flow_24,
            _ => 0.0,
        })
        .collect();
    let sum = |f: fn(&crate::network::Edge, f64) -> f64| -> f64 {
        net.edges().iter().zip(&flows).map(|(e, &q)| q * f(e, q)).sum()
    };
    SueOracle {
        x,
        uncapped_cost: min,
        flow_23,
        flow_24,
        capped_cost: sum(bpr_time_capped),
        network_uncapped_cost: sum(bpr_time),
        excess: net.edges().iter().zip(&flows).map(|(e, &q)| excess(e, q)).sum(),
    }
}
