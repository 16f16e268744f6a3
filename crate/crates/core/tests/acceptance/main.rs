//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits nonzero if any failed.

mod determinism;
mod properties;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use signalsim::abstract_model::{convergence_check, default_convergence_setup, flapping_demo, FlappingSpec};
use signalsim::costs::{minimize_on_interval, two_action_split_cost, AbstractCostFn};
use signalsim::engine::{diamond_sue_expression, diamond_sue_oracle, edge_flow_series, mean_abs_change, run, summarize, RunConfig};
use signalsim::instances::{Instance, DIAMOND_REFERENCE, SIOUX_FALLS_REFERENCE};
use signalsim::signaling::{Extreme, Now, SignalingScheme};

type Criterion = (&'static str, fn() -> Outcome);

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, detail }
    }
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    out.detail.push_str(&format!("; runtime {:.2}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs()));
    if elapsed > limit {
        out.pass = false;
    }
    out
}

fn diamond_run(scheme: Arc<dyn SignalingScheme>, horizon: usize, seed: u64) -> Vec<signalsim::engine::PeriodRecord> {
    let (net, demand) = Instance::Diamond.load().unwrap();
    let config = RunConfig {
        horizon,
        seed,
        ..RunConfig::new(scheme)
    };
    run(&net, &demand, &config).unwrap()
}

fn criterion_1() -> Outcome {
    timed(Duration::from_secs(1), || {
        let o = diamond_sue_oracle();
        // independent check of the minimisation on a dense grid
        let steps = 2_000_000;
        let brute = (0..=steps)
            .map(|i| diamond_sue_expression(2.0 * i as f64 / steps as f64))
            .fold(f64::INFINITY, f64::min);
        let minimiser_ok = (brute - o.uncapped_cost).abs() < 1e-9;
        let reference = DIAMOND_REFERENCE;
        let cost_ok = within(o.uncapped_cost, reference.uncapped_cost.unwrap(), 0.01);
        let capped_ok = within(o.capped_cost, reference.capped_cost.unwrap(), 0.01);
        let excess_ok = within(o.excess, reference.excess.unwrap(), 0.01);
        Outcome::new(
            minimiser_ok && cost_ok && capped_ok && excess_ok,
            format!(
                "objective min {:.6} at x={:.6} (target 621.229 +/- 0.01, dense-grid check {}), capped {:.6} (target 322.307), excess {:.6} (target 15.985)",
                o.uncapped_cost,
                o.x,
                if minimiser_ok { "agrees" } else { "disagrees" },
                o.capped_cost,
                o.excess
            ),
        )
    })
}

fn criterion_2() -> Outcome {
    timed(Duration::from_secs(5), || {
        let target = DIAMOND_REFERENCE.capped_cost.unwrap();
        let extreme = diamond_run(Arc::new(Extreme::new(20).unwrap()), 500, 1);
        let now = diamond_run(Arc::new(Now), 500, 1);
        let e = summarize(&extreme, Some(target), Some(50)).unwrap();
        let n = summarize(&now, Some(target), Some(50)).unwrap();
        let close = (e.mean_cost - target).abs() <= 0.05 * target;
        let below_now = e.mean_cost < n.mean_cost;
        Outcome::new(
            close && below_now,
            format!(
                "EXTREME(20) mean cost {:.3} (band {:.3}..{:.3}), NOW mean cost {:.3}",
                e.mean_cost,
                0.95 * target,
                1.05 * target,
                n.mean_cost
            ),
        )
    })
}

fn criterion_3() -> Outcome {
    timed(Duration::from_secs(5), || {
        let (net, _) = Instance::Diamond.load().unwrap();
        let e23 = net.find_edge(2, 3).unwrap().id;
        let now = diamond_run(Arc::new(Now), 500, 1);
        let extreme = diamond_run(Arc::new(Extreme::new(20).unwrap()), 500, 1);
        // both schemes broadcast real costs from period 3 on
        let now_flows = &edge_flow_series(&now, e23)[2..];
        let ext_flows = &edge_flow_series(&extreme, e23)[2..];
        let big = now_flows.windows(2).filter(|w| (w[1] - w[0]).abs() >= 25.0).count();
        let share = big as f64 / (now_flows.len() - 1) as f64;
        let now_change = mean_abs_change(now_flows);
        let ext_change = mean_abs_change(ext_flows);
        Outcome::new(
            share >= 0.8 && ext_change <= 0.5 * now_change,
            format!(
                "NOW swings >= 25 in {:.1}% of periods; mean |dflow| NOW {:.3}, EXTREME(20) {:.3}",
                100.0 * share,
                now_change,
                ext_change
            ),
        )
    })
}

fn criterion_4() -> Outcome {
    let (net, demand) = Instance::SiouxFalls.load().unwrap();
    let cost_ref = SIOUX_FALLS_REFERENCE.capped_cost.unwrap();
    let excess_ref = SIOUX_FALLS_REFERENCE.excess.unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for r in [5, 10, 20] {
        let start = Instant::now();
        let config = RunConfig {
            horizon: 300,
            seed: 1,
            ..RunConfig::new(Arc::new(Extreme::new(r).unwrap()))
        };
        let records = run(&net, &demand, &config).unwrap();
        let s = summarize(&records, Some(cost_ref), Some(100)).unwrap();
        let elapsed = start.elapsed();
        let ok = s.mean_cost < cost_ref && s.mean_excess < excess_ref && elapsed < Duration::from_secs(120);
        pass &= ok;
        parts.push(format!(
            "r={r}: cost {:.3} (< {cost_ref}) excess {:.3} (< {excess_ref}) in {:.1}s",
            s.mean_cost,
            s.mean_excess,
            elapsed.as_secs_f64()
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn criterion_5() -> Outcome {
    timed(Duration::from_secs(1), || {
        let c1 = AbstractCostFn::Polynomial { coeffs: vec![2.0, 0.0, 0.0, 0.0, 7.2] };
        let c2 = AbstractCostFn::Polynomial { coeffs: vec![5.0, 0.0, 4.0] };
        let f = |x: f64| two_action_split_cost(x, 2.0, &c1, &c2);
        let (x, _) = minimize_on_interval(f, 0.0, 2.0, 1000);
        // independent dense-grid minimiser
        let steps = 200_000;
        let brute = (0..=steps)
            .map(|i| 2.0 * i as f64 / steps as f64)
            .min_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap();
        Outcome::new(
            within(x, 0.86, 0.01) && (x - brute).abs() < 1e-4,
            format!("minimiser {x:.6} (target 0.86 +/- 0.01, dense grid {brute:.5})"),
        )
    })
}

fn criterion_6() -> Outcome {
    timed(Duration::from_secs(1), || {
        let scheme = || -> Arc<dyn SignalingScheme> { Arc::new(Extreme::new(2).unwrap()) };
        let small = flapping_demo(&FlappingSpec::new(7.0, 3).unwrap(), 20, scheme()).unwrap();
        let large = flapping_demo(&FlappingSpec::new(7.0, 101).unwrap(), 20, scheme()).unwrap();
        // closed form: J + 1 - (floor(N/2) + ceil(N/2) (J+1)^(1/N)) / N
        let closed_101 = 8.0 - (50.0 + 51.0 * 8f64.powf(1.0 / 101.0)) / 101.0;
        let small_ok = within(small.gap, 19.0 / 3.0, 1e-12);
        let large_ok = (7.0 - 0.15..=7.0).contains(&large.gap) && within(large.gap, closed_101, 1e-12);
        let o1 = small.scalar_all_or_nothing() && large.scalar_all_or_nothing();
        Outcome::new(
            small_ok && large_ok && o1,
            format!(
                "gap(J=7,N=3) = {:.15} (19/3 = {:.15}); gap(J=7,N=101) = {:.6}; scalar run all-or-nothing from t=2: {o1}",
                small.gap,
                19.0 / 3.0,
                large.gap
            ),
        )
    })
}

fn criterion_7() -> Outcome {
    timed(Duration::from_secs(30), || {
        let (config, x, y) = default_convergence_setup(20, 2, 1).unwrap();
        let report = convergence_check(&config, 2000, 200, &x, &y).unwrap();
        let d0 = report.coupled_distance[0];
        // entry t - 1 holds the distance between the period-t signals
        let d200 = report.coupled_distance[199];
        Outcome::new(
            d200 < 1e-6 * d0 && report.ks_distance < 0.05,
            format!(
                "coupled distance {d0:.4} -> {d200:.3e} at t=200; KS on n1/N over 2000 seeds {:.4}",
                report.ks_distance
            ),
        )
    })
}

fn guarded(f: fn() -> Outcome) -> Outcome {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        }
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("Diamond SUE oracle", criterion_1),
        ("Diamond regret under EXTREME(20)", criterion_2),
        ("Diamond flapping signature", criterion_3),
        ("Sioux Falls cost and excess", criterion_4),
        ("two-action minimiser", criterion_5),
        ("flapping gap", criterion_6),
        ("coupled convergence and KS", criterion_7),
        ("byte-identical CLI outputs", determinism::criterion_8),
        ("property suites", properties::criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = guarded(*f);
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {} ({name}): {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
