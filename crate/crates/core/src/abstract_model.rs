//! The M-resource agent model.
//!
//! `N` agents split into risk types; each type's mass picks one action
//! minimising its risk-weighted signal. Counts feed the action costs, the
//! costs are recorded, and the next signal is computed from the history,
//! with the initial signal standing in for periods before the first
//! observation.

use std::io::Write;
use std::sync::Arc;

use crate::assignment::choose_action;
use crate::costs::{social_cost_abstract, AbstractCostFn};
use crate::engine::fmt_f64;
use crate::error::{Error, Result};
use crate::population::{PopulationProfile, RenewalProcess, TypeSet};
use crate::rng::{substream, SimRng, Stream};
use crate::signaling::{
    emit_seeded_signal, CostHistory, FullExtreme, Interval, Now, Signal, SignalingScheme,
};
use crate::stats::ks_two_sample;

#[derive(Debug, Clone)]
pub struct AbstractConfig {
    /// Agent count `N`.
    pub agents: usize,
    /// One cost function per action.
    pub costs: Vec<AbstractCostFn>,
    pub scheme: Arc<dyn SignalingScheme>,
    pub types: TypeSet,
    pub renewal: RenewalProcess,
    pub initial_signal: Signal,
    pub seed: u64,
}

impl AbstractConfig {
    pub fn actions(&self) -> usize {
        self.costs.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents < 1 {
            return Err(Error::config("need at least one agent"));
        }
        if self.costs.is_empty() {
            return Err(Error::config("need at least one action"));
        }
        if self.initial_signal.len() != self.costs.len() {
            return Err(Error::config(format!(
                "initial signal covers {} actions, model has {}",
                self.initial_signal.len(),
                self.costs.len()
            )));
        }
        if self.renewal.type_count() != self.types.len() {
            return Err(Error::config(format!(
                "renewal draws {} weights for {} types",
                self.renewal.type_count(),
                self.types.len()
            )));
        }
        Ok(())
    }
}

/// One period of the abstract model.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    /// Signal the agents acted on.
    pub signal: Signal,
    pub counts: Vec<f64>,
    pub costs: Vec<f64>,
    pub social_cost: f64,
}

/// A running trajectory. Two models built from the same seed and replica
/// draw identical population profiles, whatever their initial signals.
#[derive(Debug, Clone)]
pub struct AbstractModel {
    config: AbstractConfig,
    history: CostHistory,
    signal: Signal,
    t: usize,
    population_rng: SimRng,
    tie_rng: SimRng,
}

impl AbstractModel {
    pub fn new(config: AbstractConfig, replica: u64) -> Result<Self> {
        config.validate()?;
        let history = CostHistory::for_scheme(config.actions(), config.scheme.as_ref());
        Ok(AbstractModel {
            signal: config.initial_signal.clone(),
            history,
            t: 0,
            population_rng: substream(config.seed, Stream::Population, replica),
            tie_rng: substream(config.seed, Stream::TieBreak, replica),
            config,
        })
    }

    /// Signal for the next period.
    pub fn signal(&self) -> &Signal {
        &self.signal
    }

    pub fn step(&mut self) -> Result<StepRecord> {
        let profile = self.config.renewal.sample(&mut self.population_rng);
        let counts = self.counts_for(&profile);
        let costs: Vec<f64> = self
            .config
            .costs
            .iter()
            .zip(&counts)
            .map(|(c, &n)| c.eval(n))
            .collect();
        let social_cost = social_cost_abstract(&counts, &self.config.costs, self.config.agents as f64)?;
        self.history.record_period(&costs)?;
        self.t += 1;
        let next = emit_seeded_signal(
            &self.config.initial_signal,
            &self.history,
            self.config.scheme.as_ref(),
        );
        let signal = std::mem::replace(&mut self.signal, next);
        Ok(StepRecord {
            t: self.t,
            signal,
            counts,
            costs,
            social_cost,
        })
    }

    fn counts_for(&mut self, profile: &PopulationProfile) -> Vec<f64> {
        let n = self.config.agents as f64;
        let mut counts = vec![0.0; self.config.actions()];
        for (&omega, &mass) in self.config.types.omegas().iter().zip(profile.weights()) {
            if mass > 0.0 {
                counts[choose_action(&self.signal, omega, &mut self.tie_rng)] += mass * n;
            }
        }
        counts
    }

    pub fn run(&mut self, horizon: usize) -> Result<Vec<StepRecord>> {
        (0..horizon).map(|_| self.step()).collect()
    }
}

/// Writes `t, n_1..n_M, ulo_1..ulo_M, uhi_1..uhi_M, social_cost` rows.
pub fn write_trajectory_csv<W: Write>(records: &[StepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let m = records.first().map_or(0, |r| r.counts.len());
    let mut header = vec!["t".to_string()];
    for prefix in ["n", "ulo", "uhi"] {
        header.extend((1..=m).map(|k| format!("{prefix}_{k}")));
    }
    header.push("social_cost".into());
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.t.to_string()];
        row.extend(r.counts.iter().map(|&x| fmt_f64(x)));
        row.extend(r.signal.intervals().iter().map(|iv| fmt_f64(iv.lo)));
        row.extend(r.signal.intervals().iter().map(|iv| fmt_f64(iv.hi)));
        row.push(fmt_f64(r.social_cost));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// `||s_t(x) - s_t(y)||_1` for `t = 1..=horizon + 1`; entry 0 is the
    /// distance between the initial signals.
    pub coupled_distance: Vec<f64>,
    /// KS statistic of `n_m / N` at the horizon, per action.
    pub ks_per_action: Vec<f64>,
    /// KS statistic for action 1.
    pub ks_distance: f64,
}

/// Runs a coupled pair from `x` and `y`, then `trajectories` independent
/// replicas from each and compares the final count distributions.
pub fn convergence_check(
    config: &AbstractConfig,
    trajectories: usize,
    horizon: usize,
    x: &Signal,
    y: &Signal,
) -> Result<ConvergenceReport> {
    if horizon < 1 || trajectories < 1 {
        return Err(Error::config("horizon and trajectories must be positive"));
    }
    let with_initial = |s: &Signal| AbstractConfig {
        initial_signal: s.clone(),
        ..config.clone()
    };
    let cx = with_initial(x);
    let cy = with_initial(y);

    let mut a = AbstractModel::new(cx.clone(), 0)?;
    let mut b = AbstractModel::new(cy.clone(), 0)?;
    let mut coupled_distance = vec![a.signal().l1_distance(b.signal())];
    for _ in 0..horizon {
        a.step()?;
        b.step()?;
        coupled_distance.push(a.signal().l1_distance(b.signal()));
    }

    let finals_x = final_shares(&cx, trajectories, horizon, 0)?;
    let finals_y = final_shares(&cy, trajectories, horizon, 1)?;
    let ks_per_action: Vec<f64> = (0..config.actions())
        .map(|m| {
            let fx: Vec<f64> = finals_x.iter().map(|v| v[m]).collect();
            let fy: Vec<f64> = finals_y.iter().map(|v| v[m]).collect();
            ks_two_sample(&fx, &fy)
        })
        .collect();
    Ok(ConvergenceReport {
        coupled_distance,
        ks_distance: ks_per_action[0],
        ks_per_action,
    })
}

/// `n_m / N` at `horizon` for replicas `2k + parity`, run concurrently.
fn final_shares(
    config: &AbstractConfig,
    trajectories: usize,
    horizon: usize,
    parity: u64,
) -> Result<Vec<Vec<f64>>> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(trajectories);
    let chunk = trajectories.div_ceil(workers);
    let n = config.agents as f64;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let range = (w * chunk)..((w + 1) * chunk).min(trajectories);
                scope.spawn(move || -> Result<Vec<Vec<f64>>> {
                    range
                        .map(|k| {
                            let mut model = AbstractModel::new(config.clone(), 2 * k as u64 + parity)?;
                            let mut last = None;
                            for _ in 0..horizon {
                                last = Some(model.step()?);
                            }
                            let last = last.expect("horizon is positive");
                            Ok(last.counts.iter().map(|c| c / n).collect())
                        })
                        .collect()
                })
            })
            .collect();
        let mut out = Vec::with_capacity(trajectories);
        for h in handles {
            out.extend(h.join().expect("trajectory thread panicked")?);
        }
        Ok(out)
    })
}

/// The setting used by the `convergence-check` command: `c_m(x) = x/N +
/// 0.1 m`, types `{0, 1/2, 1}`, two equally likely profiles, running
/// min/max signaling. Returns the config and two distinct initial signals.
pub fn default_convergence_setup(agents: usize, actions: usize, seed: u64) -> Result<(AbstractConfig, Signal, Signal)> {
    if actions < 2 {
        return Err(Error::config("need at least two actions"));
    }
    let n = agents as f64;
    let costs = (0..actions)
        .map(|m| AbstractCostFn::LinearOverN {
            n,
            offset: 0.1 * m as f64,
        })
        .collect();
    let renewal = RenewalProcess::finite_support(vec![
        (PopulationProfile::new(vec![0.6, 0.2, 0.2])?, 0.5),
        (PopulationProfile::new(vec![0.2, 0.2, 0.6])?, 0.5),
    ])?;
    let last = (actions - 1) as f64;
    let x = Signal::scalar(&(0..actions).map(|m| 0.5 + 0.1 * m as f64).collect::<Vec<_>>())?;
    let y = Signal::scalar(&(0..actions).map(|m| 0.9 - 0.6 * m as f64 / last).collect::<Vec<_>>())?;
    let config = AbstractConfig {
        agents,
        costs,
        scheme: Arc::new(FullExtreme),
        types: TypeSet::uniform(3)?,
        renewal,
        initial_signal: x.clone(),
        seed,
    };
    Ok((config, x, y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlappingSpec {
    pub j: f64,
    pub n: usize,
}

impl FlappingSpec {
    pub fn new(j: f64, n: usize) -> Result<Self> {
        if !(j > 0.0 && j.is_finite()) {
            return Err(Error::config(format!("J must be positive, got {j}")));
        }
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::config(format!("N must be odd and at least 3, got {n}")));
        }
        Ok(FlappingSpec { j, n })
    }

    /// Exact per-period cost of the half/half split.
    pub fn split_cost(&self) -> f64 {
        let n = self.n as f64;
        let (floor, ceil) = ((self.n / 2) as f64, self.n.div_ceil(2) as f64);
        floor / n + ceil / n * (self.j + 1.0).powf(1.0 / n)
    }

    /// `J + 1 - split_cost()`.
    pub fn closed_form_gap(&self) -> f64 {
        self.j + 1.0 - self.split_cost()
    }

    /// `J - N ((J + 1)^(1/N) - 1)`, a lower bound on the gap.
    pub fn gap_lower_bound(&self) -> f64 {
        let n = self.n as f64;
        self.j - n * ((self.j + 1.0).powf(1.0 / n) - 1.0)
    }
}

/// The shared cost of both actions in the flapping construction.
pub fn flapping_cost(spec: &FlappingSpec) -> AbstractCostFn {
    AbstractCostFn::Flapping {
        j: spec.j,
        n: spec.n as f64,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlappingReport {
    pub scalar: Vec<StepRecord>,
    pub interval: Vec<StepRecord>,
    /// Scalar minus interval social cost in period 2.
    pub gap: f64,
    pub closed_form_gap: f64,
    pub lower_bound: f64,
}

impl FlappingReport {
    pub fn scalar_costs(&self) -> Vec<f64> {
        self.scalar.iter().map(|r| r.social_cost).collect()
    }

    pub fn interval_costs(&self) -> Vec<f64> {
        self.interval.iter().map(|r| r.social_cost).collect()
    }

    /// True iff every scalar-run profile from period 2 on is all-or-nothing.
    pub fn scalar_all_or_nothing(&self) -> bool {
        self.scalar
            .iter()
            .skip(1)
            .all(|r| r.counts.iter().filter(|&&c| c > 0.0).count() == 1)
    }
}

/// Runs the scalar and interval trajectories of the flapping construction.
///
/// Scalar run: one type at `omega = 1/2`, NOW signaling from `(1, 2)`, so
/// all agents switch actions every period. Interval run: `floor(N/2)/N`
/// of the mass at `omega = 0` and the rest at `omega = 1`, starting from
/// `[0, J+3]` and `[1, J+2]`; the risk-seeking half reads the low ends and
/// takes action 1, the risk-averse half reads the high ends and takes
/// action 2. Under `interval_scheme = EXTREME(2)` that split repeats in
/// period 2.
pub fn flapping_demo(
    spec: &FlappingSpec,
    horizon: usize,
    interval_scheme: Arc<dyn SignalingScheme>,
) -> Result<FlappingReport> {
    if horizon < 2 {
        return Err(Error::config("flapping demo needs a horizon of at least 2"));
    }
    let cost = flapping_cost(spec);
    let n = spec.n as f64;

    let scalar_config = AbstractConfig {
        agents: spec.n,
        costs: vec![cost.clone(), cost.clone()],
        scheme: Arc::new(Now),
        types: TypeSet::new(vec![0.5])?,
        renewal: RenewalProcess::finite_support(vec![(PopulationProfile::new(vec![1.0])?, 1.0)])?,
        initial_signal: Signal::scalar(&[1.0, 2.0])?,
        seed: 0,
    };
    let scalar = AbstractModel::new(scalar_config, 0)?.run(horizon)?;

    let low = (spec.n / 2) as f64 / n;
    let interval_config = AbstractConfig {
        agents: spec.n,
        costs: vec![cost.clone(), cost],
        scheme: interval_scheme,
        types: TypeSet::new(vec![0.0, 1.0])?,
        renewal: RenewalProcess::finite_support(vec![(PopulationProfile::new(vec![low, 1.0 - low])?, 1.0)])?,
        initial_signal: Signal::new(vec![
            Interval { lo: 0.0, hi: spec.j + 3.0 },
            Interval { lo: 1.0, hi: spec.j + 2.0 },
        ])?,
        seed: 0,
    };
    let interval = AbstractModel::new(interval_config, 0)?.run(horizon)?;

    Ok(FlappingReport {
        gap: scalar[1].social_cost - interval[1].social_cost,
        closed_form_gap: spec.closed_form_gap(),
        lower_bound: spec.gap_lower_bound(),
        scalar,
        interval,
    })
}
