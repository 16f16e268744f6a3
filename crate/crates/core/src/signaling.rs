//! Cost histories and the signaling schemes built on them.
//!
//! Every scheme implements [`SignalingScheme`] and is constructed by name
//! through a [`SchemeRegistry`], so the engine, the abstract model and the
//! command line all select schemes the same way.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Per-resource record of observed costs.
///
/// Keeps the `window` most recent costs of each resource plus running
/// count, sum, minimum and maximum over the whole history.
#[derive(Debug, Clone)]
pub struct CostHistory {
    window: usize,
    recent: Vec<VecDeque<f64>>,
    count: Vec<usize>,
    sum: Vec<f64>,
    min: Vec<f64>,
    max: Vec<f64>,
}

impl CostHistory {
    pub fn new(width: usize, window: usize) -> Self {
        let window = window.max(1);
        CostHistory {
            window,
            recent: vec![VecDeque::with_capacity(window); width],
            count: vec![0; width],
            sum: vec![0.0; width],
            min: vec![f64::INFINITY; width],
            max: vec![f64::NEG_INFINITY; width],
        }
    }

    /// A history retaining enough recent costs for `scheme`.
    pub fn for_scheme(width: usize, scheme: &dyn SignalingScheme) -> Self {
        Self::new(width, scheme.retained_window())
    }

    pub fn width(&self) -> usize {
        self.recent.len()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    fn check(m: usize, width: usize, cost: f64) -> Result<()> {
        if m >= width {
            return Err(Error::validation(format!(
                "resource index {m} out of range for width {width}"
            )));
        }
        if !cost.is_finite() || cost < 0.0 {
            return Err(Error::validation(format!(
                "cost must be finite and nonnegative, got {cost}"
            )));
        }
        Ok(())
    }

    fn push_unchecked(&mut self, m: usize, cost: f64) {
        let q = &mut self.recent[m];
        if q.len() == self.window {
            q.pop_front();
        }
        q.push_back(cost);
        self.count[m] += 1;
        self.sum[m] += cost;
        self.min[m] = self.min[m].min(cost);
        self.max[m] = self.max[m].max(cost);
    }

    /// Appends one observed cost of resource `m`.
    pub fn record(&mut self, m: usize, cost: f64) -> Result<()> {
        Self::check(m, self.width(), cost)?;
        self.push_unchecked(m, cost);
        Ok(())
    }

    /// Appends one cost per resource. Nothing is recorded if any cost is
    /// invalid.
    pub fn record_period(&mut self, costs: &[f64]) -> Result<()> {
        if costs.len() != self.width() {
            return Err(Error::validation(format!(
                "{} costs for history of width {}",
                costs.len(),
                self.width()
            )));
        }
        for (m, &c) in costs.iter().enumerate() {
            Self::check(m, self.width(), c)?;
        }
        for (m, &c) in costs.iter().enumerate() {
            self.push_unchecked(m, c);
        }
        Ok(())
    }

    /// Number of complete periods recorded (the least per-resource count).
    pub fn periods(&self) -> usize {
        self.count.iter().copied().min().unwrap_or(0)
    }

    pub fn count(&self, m: usize) -> usize {
        self.count[m]
    }

    pub fn recent(&self, m: usize) -> impl Iterator<Item = f64> + '_ {
        self.recent[m].iter().copied()
    }

    pub fn last(&self, m: usize) -> Option<f64> {
        self.recent[m].back().copied()
    }

    pub fn mean(&self, m: usize) -> Option<f64> {
        (self.count[m] > 0).then(|| self.sum[m] / self.count[m] as f64)
    }

    pub fn min(&self, m: usize) -> Option<f64> {
        (self.count[m] > 0).then_some(self.min[m])
    }

    pub fn max(&self, m: usize) -> Option<f64> {
        (self.count[m] > 0).then_some(self.max[m])
    }

    /// Min and max over the `min(r, n)` most recent costs of resource `m`.
    ///
    /// `r` beyond the retained window is clamped to the window.
    pub fn window_extremes(&self, m: usize, r: usize) -> Option<Interval> {
        let q = &self.recent[m];
        let take = r.min(q.len());
        if take == 0 {
            return None;
        }
        let (lo, hi) = q
            .iter()
            .skip(q.len() - take)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| {
                (lo.min(c), hi.max(c))
            });
        Some(Interval { lo, hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn envelope(&self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn contains(&self, other: Interval) -> bool {
        self.lo <= other.lo && other.lo <= other.hi && other.hi <= self.hi
    }

    /// Shrinks about the midpoint by `alpha` (1 keeps, 0 collapses). The
    /// result always stays inside `self`.
    pub fn shrink(&self, alpha: f64) -> Interval {
        if alpha >= 1.0 {
            return *self;
        }
        let mid = self.midpoint();
        let half = 0.5 * (self.hi - self.lo) * alpha;
        Interval {
            lo: (mid - half).clamp(self.lo, self.hi),
            hi: (mid + half).clamp(self.lo, self.hi),
        }
    }
}

/// One interval per resource; scalar signals have `lo == hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    intervals: Vec<Interval>,
}

impl Signal {
    pub fn zeros(width: usize) -> Self {
        Signal {
            intervals: vec![Interval::ZERO; width],
        }
    }

    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if let Some((m, iv)) = intervals
            .iter()
            .enumerate()
            .find(|(_, iv)| !iv.lo.is_finite() || !iv.hi.is_finite() || iv.lo > iv.hi)
        {
            return Err(Error::validation(format!(
                "signal interval {m} is invalid: [{}, {}]",
                iv.lo, iv.hi
            )));
        }
        Ok(Signal { intervals })
    }

    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Interval::point(v)).collect())
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn get(&self, m: usize) -> Interval {
        self.intervals[m]
    }

    pub fn is_scalar(&self) -> bool {
        self.intervals.iter().all(|iv| iv.lo == iv.hi)
    }

    /// `l1` distance between the flattened `(lo, hi)` vectors.
    pub fn l1_distance(&self, other: &Signal) -> f64 {
        self.intervals
            .iter()
            .zip(&other.intervals)
            .map(|(a, b)| (a.lo - b.lo).abs() + (a.hi - b.hi).abs())
            .sum()
    }
}

/// A rule turning a cost history into a broadcast interval per resource.
pub trait SignalingScheme: fmt::Debug + Send + Sync {
    /// Registry name.
    fn name(&self) -> &'static str;

    /// Name plus parameters, for reports and file names.
    fn label(&self) -> String {
        self.name().to_string()
    }

    /// How many recent costs per resource the history must retain.
    fn retained_window(&self) -> usize {
        1
    }

    /// Periods that must be recorded before the scheme stops broadcasting
    /// the all-zero initial signal.
    fn warm_up(&self) -> usize;

    /// Interval for resource `m`. Called only once `history` holds at
    /// least `warm_up()` periods.
    fn interval(&self, history: &CostHistory, m: usize) -> Interval;

    /// Interval for resource `m` when an initial signal `prior` stands in
    /// for the periods before the first observation.
    fn seeded_interval(&self, prior: Interval, history: &CostHistory, m: usize) -> Interval {
        if history.count(m) == 0 {
            prior
        } else {
            self.interval(history, m)
        }
    }

    /// The `r` of the window this scheme draws from, if windowed.
    fn window(&self) -> Option<usize> {
        None
    }

    fn is_scalar(&self) -> bool {
        false
    }
}

/// Most recent cost.
#[derive(Debug, Clone, Copy, Default)]
pub struct Now;

impl SignalingScheme for Now {
    fn name(&self) -> &'static str {
        "now"
    }

    fn warm_up(&self) -> usize {
        1
    }

    fn interval(&self, history: &CostHistory, m: usize) -> Interval {
        Interval::point(history.last(m).unwrap_or(0.0))
    }

    fn is_scalar(&self) -> bool {
        true
    }
}

/// Mean of every cost seen so far.
#[derive(Debug, Clone, Copy, Default)]
pub struct Mean;

impl SignalingScheme for Mean {
    fn name(&self) -> &'static str {
        "mean"
    }

    fn warm_up(&self) -> usize {
        1
    }

    fn interval(&self, history: &CostHistory, m: usize) -> Interval {
        Interval::point(history.mean(m).unwrap_or(0.0))
    }

    fn is_scalar(&self) -> bool {
        true
    }
}

/// Min and max over the `r` most recent costs.
#[derive(Debug, Clone, Copy)]
pub struct Extreme {
    r: usize,
}

impl Extreme {
    pub fn new(r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::config("window r must be at least 1"));
        }
        Ok(Extreme { r })
    }

    pub fn r(&self) -> usize {
        self.r
    }
}

impl SignalingScheme for Extreme {
    fn name(&self) -> &'static str {
        "extreme"
    }

    fn label(&self) -> String {
        format!("extreme-r{}", self.r)
    }

    fn retained_window(&self) -> usize {
        self.r
    }

    fn warm_up(&self) -> usize {
        2
    }

    fn interval(&self, history: &CostHistory, m: usize) -> Interval {
        history.window_extremes(m, self.r).unwrap_or(Interval::ZERO)
    }

    // Window slots before the first period are filled by the prior.
    fn seeded_interval(&self, prior: Interval, history: &CostHistory, m: usize) -> Interval {
        match history.window_extremes(m, self.r) {
            None => prior,
            Some(iv) if history.count(m) < self.r => iv.envelope(prior),
            Some(iv) => iv,
        }
    }

    fn window(&self) -> Option<usize> {
        Some(self.r)
    }
}

/// Min and max over the whole history.
#[derive(Debug, Clone, Copy, Default)]
pub struct FullExtreme;

impl SignalingScheme for FullExtreme {
    fn name(&self) -> &'static str {
        "full-extreme"
    }

    fn warm_up(&self) -> usize {
        2
    }

    fn interval(&self, history: &CostHistory, m: usize) -> Interval {
        match (history.min(m), history.max(m)) {
            (Some(lo), Some(hi)) => Interval { lo, hi },
            _ => Interval::ZERO,
        }
    }

    // Running min/max started from the prior.
    fn seeded_interval(&self, prior: Interval, history: &CostHistory, m: usize) -> Interval {
        match (history.min(m), history.max(m)) {
            (Some(lo), Some(hi)) => prior.envelope(Interval { lo, hi }),
            _ => prior,
        }
    }
}

/// The `r`-extreme interval shrunk about its midpoint by `alpha`.
#[derive(Debug, Clone, Copy)]
pub struct Subinterval {
    extreme: Extreme,
    alpha: f64,
}

impl Subinterval {
    pub fn new(r: usize, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::config(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        Ok(Subinterval {
            extreme: Extreme::new(r)?,
            alpha,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl SignalingScheme for Subinterval {
    fn name(&self) -> &'static str {
        "subinterval"
    }

    fn label(&self) -> String {
        format!("subinterval-r{}-a{}", self.extreme.r, self.alpha)
    }

    fn retained_window(&self) -> usize {
        self.extreme.r
    }

    fn warm_up(&self) -> usize {
        2
    }

    fn interval(&self, history: &CostHistory, m: usize) -> Interval {
        self.extreme.interval(history, m).shrink(self.alpha)
    }

    fn seeded_interval(&self, prior: Interval, history: &CostHistory, m: usize) -> Interval {
        self.extreme
            .seeded_interval(prior, history, m)
            .shrink(self.alpha)
    }

    fn window(&self) -> Option<usize> {
        Some(self.extreme.r)
    }
}

/// Signal broadcast after the periods in `history`; all zeros during the
/// scheme's warm-up.
pub fn emit_signal(history: &CostHistory, scheme: &dyn SignalingScheme) -> Signal {
    let width = history.width();
    if history.periods() < scheme.warm_up() {
        return Signal::zeros(width);
    }
    Signal {
        intervals: (0..width).map(|m| scheme.interval(history, m)).collect(),
    }
}

/// Signal broadcast after `history` when `prior` was broadcast before any
/// observation. No warm-up applies.
pub fn emit_seeded_signal(
    prior: &Signal,
    history: &CostHistory,
    scheme: &dyn SignalingScheme,
) -> Signal {
    Signal {
        intervals: (0..history.width())
            .map(|m| scheme.seeded_interval(prior.get(m), history, m))
            .collect(),
    }
}

/// True iff every interval of `signal` lies inside the min/max envelope of
/// the `r` most recent costs of its resource.
pub fn validate_subinterval(signal: &Signal, history: &CostHistory, r: usize) -> bool {
    signal.len() == history.width()
        && signal
            .intervals()
            .iter()
            .enumerate()
            .all(|(m, &iv)| match history.window_extremes(m, r) {
                Some(env) => env.contains(iv),
                None => false,
            })
}

/// Optional parameters a scheme factory may read.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SchemeParams {
    pub r: Option<usize>,
    pub alpha: Option<f64>,
}

pub type SchemeFactory = fn(&SchemeParams) -> Result<Arc<dyn SignalingScheme>>;

/// Name-keyed constructors for signaling schemes.
pub struct SchemeRegistry {
    factories: BTreeMap<String, SchemeFactory>,
}

fn require_r(name: &str, params: &SchemeParams) -> Result<usize> {
    params
        .r
        .ok_or_else(|| Error::config(format!("scheme {name} requires a window r")))
}

impl SchemeRegistry {
    pub fn empty() -> Self {
        SchemeRegistry {
            factories: BTreeMap::new(),
        }
    }

    /// Registry holding now, mean, extreme, full-extreme and subinterval.
    pub fn with_builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("now", |_| Ok(Arc::new(Now)));
        reg.register("mean", |_| Ok(Arc::new(Mean)));
        reg.register("full-extreme", |_| Ok(Arc::new(FullExtreme)));
        reg.register("extreme", |p| Ok(Arc::new(Extreme::new(require_r("extreme", p)?)?)));
        reg.register("subinterval", |p| {
            let r = require_r("subinterval", p)?;
            Ok(Arc::new(Subinterval::new(r, p.alpha.unwrap_or(0.5))?))
        });
        reg
    }

    /// Adds or replaces a factory.
    pub fn register(&mut self, name: &str, factory: SchemeFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, name: &str, params: &SchemeParams) -> Result<Arc<dyn SignalingScheme>> {
        let factory = self.factories.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.names().collect();
            Error::config(format!(
                "unknown scheme {name:?}; known: {}",
                known.join(", ")
            ))
        })?;
        factory(params)
    }
}

impl Default for SchemeRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}
