//! Network and demand data model, TNTP text ingestion and tight
//! shortest-path DAGs.
//!
//! Node ids are 1-based, as in TNTP files. Per-node vectors returned from
//! this module have length `node_count + 1` and leave index 0 unused.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type NodeId = u32;

/// Relative and absolute slack used when deciding whether an edge lies on a
/// shortest path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TieTolerance {
    pub relative: f64,
    pub absolute: f64,
}

impl Default for TieTolerance {
    fn default() -> Self {
        TieTolerance {
            relative: 1e-9,
            absolute: 1e-12,
        }
    }
}

/// A directed link with BPR parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: usize,
    pub from: NodeId,
    pub to: NodeId,
    pub capacity: f64,
    pub length: f64,
    pub free_flow: f64,
    pub b_coeff: f64,
    pub power: f64,
    // retained from the file, not used by any cost model
    pub speed: f64,
    pub toll: f64,
    pub link_type: f64,
}

impl Edge {
    /// An edge with zero length/speed/toll and link type 1.
    pub fn new(
        from: NodeId,
        to: NodeId,
        capacity: f64,
        free_flow: f64,
        b_coeff: f64,
        power: f64,
    ) -> Self {
        Edge {
            id: 0,
            from,
            to,
            capacity,
            length: 0.0,
            free_flow,
            b_coeff,
            power,
            speed: 0.0,
            toll: 0.0,
            link_type: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [
            self.capacity,
            self.length,
            self.free_flow,
            self.b_coeff,
            self.power,
            self.speed,
            self.toll,
            self.link_type,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "edge {}-{} has a non-finite field",
                self.from, self.to
            )));
        }
        if self.capacity <= 0.0 {
            return Err(Error::validation(format!(
                "edge {}-{} has non-positive capacity {}",
                self.from, self.to, self.capacity
            )));
        }
        if self.free_flow < 0.0 || self.b_coeff < 0.0 || self.power < 0.0 {
            return Err(Error::validation(format!(
                "edge {}-{} has a negative free-flow time, B or power",
                self.from, self.to
            )));
        }
        if self.from == 0 || self.to == 0 {
            return Err(Error::validation("node ids are 1-based"));
        }
        if self.from == self.to {
            return Err(Error::validation(format!(
                "self-loop at node {}",
                self.from
            )));
        }
        Ok(())
    }
}

/// Directed multigraph with edges kept in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    node_count: usize,
    edges: Vec<Edge>,
    outgoing: Vec<Vec<usize>>,
}

impl Network {
    /// Builds a network, renumbering edge ids to their position.
    pub fn new(node_count: usize, mut edges: Vec<Edge>) -> Result<Self> {
        let mut outgoing = vec![Vec::new(); node_count + 1];
        for (i, edge) in edges.iter_mut().enumerate() {
            edge.id = i;
            edge.validate()?;
            if edge.from as usize > node_count || edge.to as usize > node_count {
                return Err(Error::validation(format!(
                    "edge {}-{} references a node above node count {}",
                    edge.from, edge.to, node_count
                )));
            }
            outgoing[edge.from as usize].push(i);
        }
        Ok(Network {
            node_count,
            edges,
            outgoing,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn outgoing(&self, node: NodeId) -> &[usize] {
        self.outgoing
            .get(node as usize)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// First edge from `from` to `to`, if any.
    pub fn find_edge(&self, from: NodeId, to: NodeId) -> Option<&Edge> {
        self.outgoing(from)
            .iter()
            .map(|&e| &self.edges[e])
            .find(|e| e.to == to)
    }

    /// Serializes the network as a TNTP net file.
    pub fn to_tntp(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "<NUMBER OF NODES> {}", self.node_count);
        let _ = writeln!(out, "<NUMBER OF LINKS> {}", self.edges.len());
        out.push_str("<END OF METADATA>\n\n");
        out.push_str(
            "~\tfrom\tto\tcapacity\tlength\tfree_flow\tB\tpower\tspeed\ttoll\ttype\t;\n",
        );
        for e in &self.edges {
            let _ = writeln!(
                out,
                "\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t;",
                e.from,
                e.to,
                e.capacity,
                e.length,
                e.free_flow,
                e.b_coeff,
                e.power,
                e.speed,
                e.toll,
                e.link_type
            );
        }
        out
    }
}

/// Origin-destination demand, in agents.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DemandTable {
    entries: BTreeMap<(NodeId, NodeId), f64>,
    total: f64,
}

impl DemandTable {
    /// Builds a table; zero entries are dropped and repeated pairs summed.
    pub fn new<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        let mut map = BTreeMap::new();
        for (o, d, flow) in entries {
            if !flow.is_finite() || flow < 0.0 {
                return Err(Error::validation(format!(
                    "demand {o}->{d} is negative or non-finite: {flow}"
                )));
            }
            if flow == 0.0 {
                continue;
            }
            if o == d {
                return Err(Error::validation(format!(
                    "demand from node {o} to itself"
                )));
            }
            *map.entry((o, d)).or_insert(0.0) += flow;
        }
        let total = map.values().sum();
        Ok(DemandTable {
            entries: map,
            total,
        })
    }

    pub fn entries(&self) -> &BTreeMap<(NodeId, NodeId), f64> {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries grouped by origin, destinations ascending.
    pub fn by_origin(&self) -> BTreeMap<NodeId, Vec<(NodeId, f64)>> {
        let mut out: BTreeMap<NodeId, Vec<(NodeId, f64)>> = BTreeMap::new();
        for (&(o, d), &flow) in &self.entries {
            out.entry(o).or_default().push((d, flow));
        }
        out
    }

    /// Serializes the table as a TNTP trips file.
    pub fn to_tntp(&self) -> String {
        let zones = self
            .entries
            .keys()
            .map(|&(o, d)| o.max(d))
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(out, "<NUMBER OF ZONES> {zones}");
        let _ = writeln!(out, "<TOTAL OD FLOW> {}", self.total);
        out.push_str("<END OF METADATA>\n\n");
        for (o, dests) in self.by_origin() {
            let _ = writeln!(out, "Origin \t{o} ");
            for (d, flow) in dests {
                let _ = writeln!(out, "    {d} :    {flow};");
            }
            out.push('\n');
        }
        out
    }
}

struct Metadata {
    values: BTreeMap<String, String>,
    // index of the first line after the metadata block
    body_start: usize,
}

fn read_metadata(lines: &[&str]) -> Result<Metadata> {
    let mut values = BTreeMap::new();
    let first = lines.iter().position(|l| !l.trim().is_empty());
    let Some(first) = first else {
        return Ok(Metadata {
            values,
            body_start: lines.len(),
        });
    };
    if !lines[first].trim_start().starts_with('<') {
        return Ok(Metadata {
            values,
            body_start: first,
        });
    }
    for (i, raw) in lines.iter().enumerate().skip(first) {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if !line.starts_with('<') {
            return Err(Error::parse(
                i + 1,
                "expected a metadata line or <END OF METADATA>",
            ));
        }
        let close = line
            .find('>')
            .ok_or_else(|| Error::parse(i + 1, "unterminated metadata key"))?;
        let key = line[1..close].trim().to_ascii_uppercase();
        if key == "END OF METADATA" {
            return Ok(Metadata {
                values,
                body_start: i + 1,
            });
        }
        values.insert(key, line[close + 1..].trim().to_string());
    }
    Err(Error::parse(lines.len(), "missing <END OF METADATA>"))
}

fn parse_number(tok: &str, line: usize, what: &str) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::parse(line, format!("non-numeric {what}: {tok:?}")))
}

fn parse_node(tok: &str, line: usize) -> Result<NodeId> {
    let v = parse_number(tok, line, "node id")?;
    if v < 1.0 || v.fract() != 0.0 || v > NodeId::MAX as f64 {
        return Err(Error::parse(line, format!("invalid node id {tok:?}")));
    }
    Ok(v as NodeId)
}

/// Parses a TNTP net file.
pub fn parse_network(text: &str) -> Result<Network> {
    let lines: Vec<&str> = text.lines().collect();
    let meta = read_metadata(&lines)?;
    let declared_nodes = match meta.values.get("NUMBER OF NODES") {
        Some(v) => Some(v.parse::<usize>().map_err(|_| {
            Error::parse(0, format!("invalid <NUMBER OF NODES> value {v:?}"))
        })?),
        None => None,
    };

    let mut edges = Vec::new();
    let mut max_node = 0;
    for (i, raw) in lines.iter().enumerate().skip(meta.body_start) {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('~') {
            continue;
        }
        let Some(body) = line.strip_suffix(';') else {
            return Err(Error::parse(line_no, "edge row not terminated by ';'"));
        };
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() < 10 {
            return Err(Error::parse(
                line_no,
                format!("expected 10 fields, found {}", fields.len()),
            ));
        }
        let from = parse_node(fields[0], line_no)?;
        let to = parse_node(fields[1], line_no)?;
        let mut nums = [0.0; 8];
        for (slot, tok) in nums.iter_mut().zip(&fields[2..10]) {
            *slot = parse_number(tok, line_no, "field")?;
        }
        let [capacity, length, free_flow, b_coeff, power, speed, toll, link_type] = nums;
        max_node = max_node.max(from.max(to) as usize);
        edges.push(Edge {
            id: edges.len(),
            from,
            to,
            capacity,
            length,
            free_flow,
            b_coeff,
            power,
            speed,
            toll,
            link_type,
        });
    }
    let node_count = declared_nodes.unwrap_or(0).max(max_node);
    Network::new(node_count, edges)
}

/// Parses a TNTP trips file.
pub fn parse_trips(text: &str) -> Result<DemandTable> {
    let lines: Vec<&str> = text.lines().collect();
    let meta = read_metadata(&lines)?;
    let mut entries = Vec::new();
    let mut origin: Option<NodeId> = None;

    for (i, raw) in lines.iter().enumerate().skip(meta.body_start) {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('~') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("Origin") {
            let tok = rest.split_whitespace().next().ok_or_else(|| {
                Error::parse(line_no, "Origin without a node id")
            })?;
            origin = Some(parse_node(tok, line_no)?);
            continue;
        }
        let o = origin
            .ok_or_else(|| Error::parse(line_no, "demand entry before any Origin line"))?;
        for chunk in line.split(';') {
            let chunk = chunk.trim();
            if chunk.is_empty() {
                continue;
            }
            let (d, flow) = chunk
                .split_once(':')
                .ok_or_else(|| Error::parse(line_no, format!("expected 'dest : flow', got {chunk:?}")))?;
            let d = parse_node(d.trim(), line_no)?;
            let flow = parse_number(flow.trim(), line_no, "flow")?;
            if flow < 0.0 {
                return Err(Error::validation(format!(
                    "negative demand {flow} from {o} to {d} (line {line_no})"
                )));
            }
            entries.push((o, d, flow));
        }
    }

    let table = DemandTable::new(entries)?;
    if let Some(declared) = meta.values.get("TOTAL OD FLOW") {
        if let Ok(declared) = declared.parse::<f64>() {
            let scale = declared.abs().max(table.total().abs()).max(1.0);
            if (declared - table.total()).abs() > 1e-6 * scale {
                log::warn!(
                    "trips total {} differs from <TOTAL OD FLOW> {}",
                    table.total(),
                    declared
                );
            }
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: NodeId,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, node)
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest distances plus the acyclic tight subgraph.
///
/// An edge `(u, v)` is tight when `dist[u] + w <= dist[v] (1 + rel) + abs`
/// and `u` was settled before `v`. The settle order of Dijkstra's algorithm
/// is a topological order of every tight edge it keeps, so the tight
/// subgraph is acyclic even when zero-weight cycles exist.
#[derive(Debug, Clone)]
pub struct ShortestPathTree {
    origin: NodeId,
    dist: Vec<f64>,
    order: Vec<NodeId>,
    tight: Vec<bool>,
    count_from: Vec<f64>,
}

/// Computes the shortest-path tree from `origin` under nonnegative weights.
pub fn shortest_paths_from(
    net: &Network,
    weights: &[f64],
    origin: NodeId,
    tol: TieTolerance,
) -> Result<ShortestPathTree> {
    if weights.len() != net.edge_count() {
        return Err(Error::validation(format!(
            "{} weights for {} edges",
            weights.len(),
            net.edge_count()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::validation(format!("invalid edge weight {w}")));
    }
    if origin == 0 || origin as usize > net.node_count() {
        return Err(Error::validation(format!("unknown origin node {origin}")));
    }

    let n = net.node_count() + 1;
    let mut dist = vec![f64::INFINITY; n];
    let mut settled = vec![false; n];
    let mut rank = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();
    dist[origin as usize] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        node: origin,
    });
    while let Some(HeapEntry { dist: d, node }) = heap.pop() {
        let u = node as usize;
        if settled[u] || d > dist[u] {
            continue;
        }
        settled[u] = true;
        rank[u] = order.len();
        order.push(node);
        for &e in net.outgoing(node) {
            let v = net.edges[e].to as usize;
            let cand = d + weights[e];
            if !settled[v] && cand < dist[v] {
                dist[v] = cand;
                heap.push(HeapEntry {
                    dist: cand,
                    node: v as NodeId,
                });
            }
        }
    }

    let tight: Vec<bool> = net
        .edges
        .iter()
        .map(|e| {
            let (u, v) = (e.from as usize, e.to as usize);
            settled[u]
                && settled[v]
                && rank[u] < rank[v]
                && dist[u] + weights[e.id] <= dist[v] * (1.0 + tol.relative) + tol.absolute
        })
        .collect();

    let mut count_from = vec![0.0; n];
    count_from[origin as usize] = 1.0;
    for &u in &order {
        let cu = count_from[u as usize];
        for &e in net.outgoing(u) {
            if tight[e] {
                count_from[net.edges[e].to as usize] += cu;
            }
        }
    }

    Ok(ShortestPathTree {
        origin,
        dist,
        order,
        tight,
        count_from,
    })
}

impl ShortestPathTree {
    pub fn origin(&self) -> NodeId {
        self.origin
    }

    pub fn dist(&self) -> &[f64] {
        &self.dist
    }

    /// Restricts the tight subgraph to edges on some origin-to-`dest` path.
    pub fn dag_to(&self, net: &Network, dest: NodeId) -> Result<TightDag> {
        let no_path = Error::NoPath {
            origin: self.origin,
            dest,
        };
        if dest == 0 || dest as usize > net.node_count() || !self.dist[dest as usize].is_finite() {
            return Err(no_path);
        }
        let mut count_to = vec![0.0; self.dist.len()];
        count_to[dest as usize] = 1.0;
        for &u in self.order.iter().rev() {
            let mut acc = count_to[u as usize];
            for &e in net.outgoing(u) {
                if self.tight[e] {
                    acc += count_to[net.edges[e].to as usize];
                }
            }
            count_to[u as usize] = acc;
        }
        let tight_edges: Vec<usize> = net
            .edges
            .iter()
            .filter(|e| {
                self.tight[e.id]
                    && self.count_from[e.from as usize] > 0.0
                    && count_to[e.to as usize] > 0.0
            })
            .map(|e| e.id)
            .collect();
        let total = self.count_from[dest as usize];
        if total <= 0.0 {
            return Err(no_path);
        }
        Ok(TightDag {
            origin: self.origin,
            dest,
            dist: self.dist.clone(),
            tight_edges,
            path_count_from: self.count_from.clone(),
            path_count_to: count_to,
        })
    }

    /// Edge shares of the equal per-path split towards `dest`, without
    /// materialising a [`TightDag`].
    pub fn edge_shares(&self, net: &Network, dest: NodeId) -> Result<Vec<(usize, f64)>> {
        let dag = self.dag_to(net, dest)?;
        Ok(dag.edge_shares(net))
    }
}

/// The set of shortest origin-destination paths, represented implicitly.
#[derive(Debug, Clone)]
pub struct TightDag {
    pub origin: NodeId,
    pub dest: NodeId,
    pub dist: Vec<f64>,
    pub tight_edges: Vec<usize>,
    /// Number of tight paths from the origin to each node.
    pub path_count_from: Vec<f64>,
    /// Number of tight paths from each node to the destination.
    pub path_count_to: Vec<f64>,
}

impl TightDag {
    pub fn total_paths(&self) -> f64 {
        self.path_count_from[self.dest as usize]
    }

    /// Fraction of all tight paths using each tight edge.
    pub fn edge_shares(&self, net: &Network) -> Vec<(usize, f64)> {
        let total = self.total_paths();
        self.tight_edges
            .iter()
            .map(|&e| {
                let edge = &net.edges()[e];
                let through = self.path_count_from[edge.from as usize]
                    * self.path_count_to[edge.to as usize];
                (e, through / total)
            })
            .collect()
    }
}

/// Shortest-path DAG between one origin and one destination.
pub fn shortest_path_dag(
    net: &Network,
    weights: &[f64],
    origin: NodeId,
    dest: NodeId,
    tol: TieTolerance,
) -> Result<TightDag> {
    shortest_paths_from(net, weights, origin, tol)?.dag_to(net, dest)
}
