use std::collections::BTreeMap;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use signalsim::assignment::assign;
use signalsim::costs::{bpr_time, bpr_time_capped};
use signalsim::network::{parse_network, parse_trips, DemandTable, Edge, Network, NodeId};
use signalsim::population::{PopulationProfile, TypeSet};
use signalsim::signaling::{emit_signal, CostHistory, Extreme, FullExtreme, Interval, Now, Signal};

use crate::Outcome;

type Suite = (&'static str, fn() -> Result<(), String>);

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn edge(nodes: u32) -> impl Strategy<Value = Edge> {
    (
        1..=nodes,
        1..=nodes,
        0.01f64..1e5,
        0.0f64..100.0,
        0.0f64..60.0,
        0.0f64..20.0,
        0.0f64..8.0,
        0.0f64..120.0,
        0.0f64..10.0,
        1u8..4,
    )
        .prop_map(|(from, to, capacity, length, free_flow, b, p, speed, toll, kind)| Edge {
            length,
            speed,
            toll,
            link_type: f64::from(kind),
            ..Edge::new(from, to, capacity, free_flow, b, p)
        })
}

fn network() -> impl Strategy<Value = Network> {
    (2u32..12).prop_flat_map(|n| {
        proptest::collection::vec(edge(n).prop_filter("self-loop", |e| e.from != e.to), 0..30)
            .prop_map(move |edges| Network::new(n as usize, edges).unwrap())
    })
}

fn demand(nodes: u32) -> impl Strategy<Value = DemandTable> {
    proptest::collection::vec((1..=nodes, 1..=nodes, 0.0f64..1e4), 0..20).prop_map(|entries| {
        DemandTable::new(entries.into_iter().filter(|(o, d, _)| o != d)).unwrap()
    })
}

fn parser_round_trip() -> Result<(), String> {
    let mut r = runner(256);
    r.run(&network(), |net| {
        let back = parse_network(&net.to_tntp()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(back, net);
        Ok(())
    })
    .map_err(|e| format!("network round trip: {e}"))?;
    r.run(&demand(30), |table| {
        let back = parse_trips(&table.to_tntp()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(back, table);
        Ok(())
    })
    .map_err(|e| format!("trips round trip: {e}"))
}

/// A strongly connected network: a ring in both directions plus random
/// chords, with random demand, signal, types and profile.
#[derive(Debug, Clone)]
struct AssignCase {
    net: Network,
    demand: DemandTable,
    signal: Signal,
    types: TypeSet,
    profile: PopulationProfile,
}

fn assign_case() -> impl Strategy<Value = AssignCase> {
    (3u32..9, 2usize..6).prop_flat_map(|(n, k)| {
        let chords = proptest::collection::vec((1..=n, 1..=n), 0..12);
        let demand = proptest::collection::vec((1..=n, 1..=n, 0.0f64..500.0), 1..10);
        let profile = proptest::collection::vec(0.0f64..1.0, k);
        (chords, demand, profile, Just(n), Just(k)).prop_flat_map(|(chords, demand, profile, n, k)| {
            let mut edges = Vec::new();
            for v in 1..=n {
                let next = v % n + 1;
                edges.push(Edge::new(v, next, 10.0, 1.0, 0.15, 4.0));
                edges.push(Edge::new(next, v, 10.0, 1.0, 0.15, 4.0));
            }
            edges.extend(chords.into_iter().filter(|(a, b)| a != b).map(|(a, b)| Edge::new(a, b, 10.0, 1.0, 0.15, 4.0)));
            let m = edges.len();
            // small integer bounds make tied shortest paths common
            let intervals = proptest::collection::vec((0u8..4, 0u8..4), m);
            (Just(edges), Just(demand), Just(profile), Just(n), Just(k), intervals)
        })
    })
    .prop_map(|(edges, demand, profile, n, k, intervals)| {
        let net = Network::new(n as usize, edges).unwrap();
        let demand = DemandTable::new(demand.into_iter().filter(|(o, d, _)| o != d)).unwrap();
        let signal = Signal::new(
            intervals
                .into_iter()
                .map(|(lo, w)| Interval { lo: f64::from(lo), hi: f64::from(lo + w) })
                .collect(),
        )
        .unwrap();
        let sum: f64 = profile.iter().sum::<f64>() + 1e-3;
        let mut weights: Vec<f64> = profile.iter().map(|w| (w + 1e-3 / k as f64) / sum).collect();
        let rest = 1.0 - weights[..k - 1].iter().sum::<f64>();
        weights[k - 1] = rest.max(0.0);
        AssignCase {
            net,
            demand,
            signal,
            types: TypeSet::uniform(k).unwrap(),
            profile: PopulationProfile::new(weights).unwrap(),
        }
    })
}

fn flow_conservation() -> Result<(), String> {
    runner(1000)
        .run(&assign_case(), |case| {
            let fs = assign(&case.net, &case.demand, &case.signal, &case.profile, &case.types)
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            let total = case.demand.total();
            let tol = 1e-9 * total.max(1.0);
            prop_assert!((fs.total_agents() - total).abs() <= tol);
            let mut balance: BTreeMap<NodeId, f64> = BTreeMap::new();
            for (e, &x) in case.net.edges().iter().zip(&fs.edge_flows) {
                prop_assert!(x >= 0.0);
                *balance.entry(e.to).or_default() += x;
                *balance.entry(e.from).or_default() -= x;
            }
            for (&(o, d), &q) in case.demand.entries() {
                *balance.entry(d).or_default() -= q;
                *balance.entry(o).or_default() += q;
            }
            for (node, b) in balance {
                prop_assert!(b.abs() <= tol, "node {} imbalance {}", node, b);
            }
            Ok(())
        })
        .map_err(|e| format!("flow conservation: {e}"))
}

fn capped_below_uncapped() -> Result<(), String> {
    runner(1000)
        .run(&(edge(2), 0.0f64..1e6), |(e, x)| {
            prop_assert!(bpr_time_capped(&e, x) <= bpr_time(&e, x));
            Ok(())
        })
        .map_err(|e| format!("capped <= uncapped: {e}"))
}

fn cost_stream() -> impl Strategy<Value = (Vec<Vec<f64>>, usize)> {
    (proptest::collection::vec(proptest::collection::vec(0.0f64..100.0, 3), 1..60), 1usize..30)
}

fn nesting_and_equivalence() -> Result<(), String> {
    runner(500)
        .run(&cost_stream(), |(stream, r)| {
            let extreme = Extreme::new(r).unwrap();
            let one = Extreme::new(1).unwrap();
            let mut he = CostHistory::for_scheme(3, &extreme);
            let mut hf = CostHistory::for_scheme(3, &FullExtreme);
            let mut h1 = CostHistory::for_scheme(3, &one);
            let mut hn = CostHistory::for_scheme(3, &Now);
            for costs in &stream {
                for h in [&mut he, &mut hf, &mut h1, &mut hn] {
                    h.record_period(costs).unwrap();
                }
                let se = emit_signal(&he, &extreme);
                let sf = emit_signal(&hf, &FullExtreme);
                for m in 0..3 {
                    prop_assert!(sf.get(m).contains(se.get(m)));
                }
                if hn.periods() >= 2 {
                    prop_assert_eq!(emit_signal(&h1, &one), emit_signal(&hn, &Now));
                }
            }
            Ok(())
        })
        .map_err(|e| format!("nesting / EXTREME(1) vs NOW: {e}"))
}

pub fn criterion_9() -> Outcome {
    let start = Instant::now();
    let suites: [Suite; 4] = [
        ("parser round trip", parser_round_trip),
        ("flow conservation (1000 cases)", flow_conservation),
        ("capped <= uncapped", capped_below_uncapped),
        ("EXTREME(r) within FULL_EXTREME, EXTREME(1) = NOW", nesting_and_equivalence),
    ];
    let mut failures = Vec::new();
    let mut passed = Vec::new();
    for (name, suite) in suites {
        match suite() {
            Ok(()) => passed.push(name),
            Err(e) => failures.push(e),
        }
    }
    let elapsed = start.elapsed();
    let in_time = elapsed.as_secs_f64() < 30.0;
    Outcome {
        pass: failures.is_empty() && in_time,
        detail: format!(
            "passed [{}]{}; runtime {:.2}s (limit 30s)",
            passed.join(", "),
            if failures.is_empty() { String::new() } else { format!("; failed: {}", failures.join("; ")) },
            elapsed.as_secs_f64()
        ),
    }
}
