//! Mapping a broadcast signal and a population profile to choices.
//!
//! The network engine splits each type's demand equally over all tight
//! paths (deterministic); the abstract model lets each type pick one
//! minimising action, breaking ties uniformly at random.

use rand::Rng;

use crate::error::{Error, Result};
use crate::network::{shortest_paths_from, DemandTable, Network, NodeId, TieTolerance};
use crate::population::{PopulationProfile, TypeSet};
use crate::signaling::Signal;

/// Risk-weighted per-edge weights `omega * lo + (1 - omega) * hi`.
pub fn edge_weights(signal: &Signal, omega: f64) -> Vec<f64> {
    signal
        .intervals()
        .iter()
        .map(|iv| omega * iv.lo + (1.0 - omega) * iv.hi)
        .collect()
}

/// Agents of one type travelling between one origin-destination pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupLoad {
    pub origin: NodeId,
    pub dest: NodeId,
    pub omega: f64,
    /// Risk-weighted cost shared by every path in the group's minimiser set.
    pub weighted_cost: f64,
    pub agents: f64,
    /// Fraction of the group's agents crossing each used edge.
    pub edge_shares: Vec<(usize, f64)>,
}

impl GroupLoad {
    /// Mean cost of the group's paths under `edge_costs`; agents are split
    /// equally over paths, so this is the per-agent average.
    pub fn mean_path_cost(&self, edge_costs: &[f64]) -> f64 {
        self.edge_shares
            .iter()
            .map(|&(e, share)| share * edge_costs[e])
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub edge_flows: Vec<f64>,
    pub groups: Vec<GroupLoad>,
}

impl FlowState {
    pub fn total_agents(&self) -> f64 {
        self.groups.iter().map(|g| g.agents).sum()
    }

    /// `(mean path cost, agents)` per group under `edge_costs`.
    pub fn path_costs(&self, edge_costs: &[f64]) -> Vec<(f64, f64)> {
        self.groups
            .iter()
            .map(|g| (g.mean_path_cost(edge_costs), g.agents))
            .collect()
    }
}

/// Loads every (type, origin, destination) group onto its tight paths.
pub fn assign(
    net: &Network,
    demand: &DemandTable,
    signal: &Signal,
    profile: &PopulationProfile,
    types: &TypeSet,
) -> Result<FlowState> {
    if signal.len() != net.edge_count() {
        return Err(Error::validation(format!(
            "signal covers {} edges, network has {}",
            signal.len(),
            net.edge_count()
        )));
    }
    if profile.len() != types.len() {
        return Err(Error::validation(format!(
            "profile has {} weights for {} types",
            profile.len(),
            types.len()
        )));
    }
    let by_origin = demand.by_origin();
    let tol = TieTolerance::default();
    let mut edge_flows = vec![0.0; net.edge_count()];
    let mut groups = Vec::new();

    for (&omega, &mass) in types.omegas().iter().zip(profile.weights()) {
        if mass == 0.0 {
            continue;
        }
        let weights = edge_weights(signal, omega);
        for (&origin, dests) in &by_origin {
            let tree = shortest_paths_from(net, &weights, origin, tol)?;
            for &(dest, flow) in dests {
                let dag = tree.dag_to(net, dest)?;
                let agents = mass * flow;
                let edge_shares = dag.edge_shares(net);
                for &(e, share) in &edge_shares {
                    edge_flows[e] += agents * share;
                }
                groups.push(GroupLoad {
                    origin,
                    dest,
                    omega,
                    weighted_cost: dag.dist[dest as usize],
                    agents,
                    edge_shares,
                });
            }
        }
    }
    Ok(FlowState { edge_flows, groups })
}

/// Indices of the actions minimising the risk-weighted signal.
pub fn minimizers(signal: &Signal, omega: f64) -> Vec<usize> {
    let w = edge_weights(signal, omega);
    let best = w.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = 1e-12 * best.abs().max(1.0);
    w.iter()
        .enumerate()
        .filter(|&(_, &v)| v <= best + slack)
        .map(|(m, _)| m)
        .collect()
}

/// One minimising action, ties broken uniformly with `rng`.
pub fn choose_action<R: Rng + ?Sized>(signal: &Signal, omega: f64, rng: &mut R) -> usize {
    let best = minimizers(signal, omega);
    if best.len() == 1 {
        best[0]
    } else {
        best[rng.gen_range(0..best.len())]
    }
}
