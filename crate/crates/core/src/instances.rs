//! Built-in instances: the five-node Diamond and Sioux Falls.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::network::{parse_network, parse_trips, DemandTable, Network};

/// `(from, to, capacity, length, free_flow, B, power)` for the Diamond links.
const DIAMOND_LINKS: [(u32, u32, f64, f64, f64, f64, f64); 5] = [
    (1, 2, 25900.0, 6.0, 6.0, 0.15, 4.0),
    (2, 3, 15.0, 0.0, 2.0, 1.0, 2.0),
    (2, 4, 15.0, 0.0, 2.0, 10.0, 6.0),
    (3, 5, 99900.0, 6.0, 1.0, 0.15, 1.0),
    (4, 5, 99900.0, 6.0, 1.0, 0.15, 1.0),
];

const SIOUX_FALLS_NET: &str = include_str!("../data/SiouxFalls_net.tntp");
const SIOUX_FALLS_TRIPS: &str = include_str!("../data/SiouxFalls_trips.tntp");

/// Published reference equilibrium values used for regret.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Reference {
    pub capped_cost: Option<f64>,
    pub uncapped_cost: Option<f64>,
    pub excess: Option<f64>,
}

impl Reference {
    pub fn cost(&self, capped: bool) -> Option<f64> {
        if capped {
            self.capped_cost
        } else {
            self.uncapped_cost
        }
    }
}

pub const DIAMOND_REFERENCE: Reference = Reference {
    capped_cost: Some(322.307),
    uncapped_cost: Some(621.229),
    excess: Some(15.985),
};

pub const SIOUX_FALLS_REFERENCE: Reference = Reference {
    capped_cost: Some(3_853_754.650),
    uncapped_cost: Some(7_480_225.345),
    excess: Some(265_068.520),
};

/// The Diamond `net.txt`.
pub fn diamond_net_text() -> String {
    let mut out = String::from(
        "<NUMBER OF ZONES> 5\n<NUMBER OF NODES> 5\n<FIRST THRU NODE> 1\n<NUMBER OF LINKS> 5\n<END OF METADATA>\n\n\n",
    );
    out.push_str("~\tInit node\tTerm node\tCapacity\tLength\tFree Flow Time\tB\tPower\tSpeed limit\tToll\tType\t;\n");
    for (from, to, cap, len, ff, b, p) in DIAMOND_LINKS {
        out.push_str(&format!("\t{from}\t{to}\t{cap}\t{len}\t{ff}\t{b}\t{p}\t0\t0\t1\t;\n"));
    }
    out
}

/// The Diamond `trips.txt`.
pub fn diamond_trips_text() -> String {
    "<NUMBER OF ZONES> 5\n<TOTAL OD FLOW> 30\n<END OF METADATA>\nOrigin \t1 \n    5 :    30;\n"
        .to_string()
}

pub fn sioux_falls_net_text() -> &'static str {
    SIOUX_FALLS_NET
}

pub fn sioux_falls_trips_text() -> &'static str {
    SIOUX_FALLS_TRIPS
}

/// Where a network and its demand come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Diamond,
    SiouxFalls,
    Files { net: PathBuf, trips: PathBuf },
}

impl Instance {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "diamond" => Ok(Instance::Diamond),
            "sioux-falls" | "siouxfalls" => Ok(Instance::SiouxFalls),
            other => Err(Error::config(format!(
                "unknown instance {other:?} (expected diamond or sioux-falls)"
            ))),
        }
    }

    pub fn load(&self) -> Result<(Network, DemandTable)> {
        match self {
            Instance::Diamond => Ok((
                parse_network(&diamond_net_text())?,
                parse_trips(&diamond_trips_text())?,
            )),
            Instance::SiouxFalls => Ok((
                parse_network(SIOUX_FALLS_NET)?,
                parse_trips(SIOUX_FALLS_TRIPS)?,
            )),
            Instance::Files { net, trips } => Ok((
                parse_network(&std::fs::read_to_string(net)?)?,
                parse_trips(&std::fs::read_to_string(trips)?)?,
            )),
        }
    }

    /// Reference values known for the built-in instances.
    pub fn reference(&self) -> Reference {
        match self {
            Instance::Diamond => DIAMOND_REFERENCE,
            Instance::SiouxFalls => SIOUX_FALLS_REFERENCE,
            Instance::Files { .. } => Reference::default(),
        }
    }
}
