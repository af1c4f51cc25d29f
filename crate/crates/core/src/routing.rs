//! Relay route selection over indirect UAV links, route rehabilitation, and
//! QoS maintenance, together with the reliability and pending-request costs
//! that drive admission.

use crate::error::{invalid, Error, Result};
use crate::topology::{distance, Position, UavId};
use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::Ordering;

/// One row of a UAV's routing table, refreshed from hello messages.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteEntry {
    pub uav_id: UavId,
    pub radio_range_g: f64,
    pub intensity_eta: f64,
    pub load_balance_lb: i64,
    pub reliability_nr: f64,
    pub position: Position,
    pub refreshed_at: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RouteTable {
    entries: BTreeMap<UavId, RouteEntry>,
}

impl RouteTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn refresh(&mut self, entry: RouteEntry) {
        self.entries.insert(entry.uav_id, entry);
    }

    /// Drops entries not refreshed within `expiry` seconds of `now`.
    pub fn evict_stale(&mut self, now: f64, expiry: f64) -> Vec<UavId> {
        let stale: Vec<UavId> = self
            .entries
            .values()
            .filter(|e| now - e.refreshed_at > expiry + 1e-9)
            .map(|e| e.uav_id)
            .collect();
        for id in &stale {
            self.entries.remove(id);
        }
        stale
    }

    pub fn get(&self, id: UavId) -> Option<&RouteEntry> {
        self.entries.get(&id)
    }

    pub fn entries(&self) -> impl Iterator<Item = &RouteEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FromIterator<RouteEntry> for RouteTable {
    fn from_iter<I: IntoIterator<Item = RouteEntry>>(iter: I) -> Self {
        RouteTable { entries: iter.into_iter().map(|e| (e.uav_id, e)).collect() }
    }
}

/// The endpoint a route must reach and the UAVs holding a direct link to it.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteTarget {
    pub position: Position,
    pub gateways: BTreeSet<UavId>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteScore {
    pub nr: f64,
    pub cf: f64,
    pub lh: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    /// Source first, last hop holds the direct link to the target.
    pub hops: Vec<UavId>,
    pub total_distance: f64,
    pub nr: f64,
    pub cf: f64,
    pub lh: f64,
    /// Candidates examined while building the route.
    pub candidates_examined: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosThresholds {
    pub nr_th: f64,
    pub cf_th: f64,
    pub lh_th: f64,
}

impl QosThresholds {
    pub fn validate(&self) -> Result<()> {
        if self.nr_th.is_finite() && self.cf_th.is_finite() && self.lh_th.is_finite() {
            Ok(())
        } else {
            Err(invalid("qos thresholds", "must be finite"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QosVerdict {
    Keep,
    Reselect,
}

/// Normalising weights of the reliability cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gammas(pub f64, pub f64, pub f64);

impl Default for Gammas {
    fn default() -> Self {
        Gammas(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityInputs<'a> {
    /// Service demand of every UE counted, requests/s.
    pub service_demands: &'a [f64],
    pub uav_count: u32,
    pub users_handled_eh: u32,
    /// `|U| * T_u`.
    pub max_capacity: u32,
    pub bands_used_nprime: u32,
    pub bands_total_n: u32,
    pub gammas: Gammas,
}

/// Service cost per deployed UAV: total demand over the UAV count.
pub fn service_cost(service_demands: &[f64], uav_count: u32) -> f64 {
    service_demands.iter().sum::<f64>() / uav_count as f64
}

pub fn link_utilization(bands_used: u32, bands_total: u32) -> f64 {
    bands_used as f64 / bands_total as f64
}

pub fn uav_utility(users_handled: u32, max_capacity: u32) -> f64 {
    users_handled as f64 / max_capacity as f64
}

/// `g1 / Sd + g2 * Oc + g3 * Lu`. Larger is more reliable.
pub fn reliability_cost(inputs: &ReliabilityInputs<'_>) -> Result<f64> {
    if inputs.uav_count == 0 {
        return Err(invalid("uav_count", "must be > 0"));
    }
    if inputs.bands_total_n == 0 {
        return Err(invalid("bands_total_n", "must be >= 1"));
    }
    if inputs.max_capacity == 0 {
        return Err(invalid("max_capacity", "must be > 0"));
    }
    let sd = service_cost(inputs.service_demands, inputs.uav_count);
    if !(sd > 0.0) {
        return Err(Error::Domain("no service demand; reliability undefined"));
    }
    let oc = uav_utility(inputs.users_handled_eh, inputs.max_capacity);
    let lu = link_utilization(inputs.bands_used_nprime, inputs.bands_total_n);
    let Gammas(g1, g2, g3) = inputs.gammas;
    Ok(g1 / sd + g2 * oc + g3 * lu)
}

/// Per-zone offered load `lambda` (requests/s) and serving rate `omega` (bit/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneLoad {
    pub lambda: f64,
    pub omega: f64,
}

/// Pending-request cost summed over zones: `sum lambda / (mu * N * omega)`,
/// where `mu` is the inverse mean message size (1/bit).
pub fn pending_cost(zone_loads: &[ZoneLoad], mean_mu: f64, bands_n: u32) -> Result<f64> {
    if !(mean_mu > 0.0) {
        return Err(invalid("mu", "must be > 0"));
    }
    if bands_n == 0 {
        return Err(invalid("n", "must be >= 1"));
    }
    let mut total = 0.0;
    for z in zone_loads {
        if !(z.omega > 0.0) {
            return Err(Error::Domain("zero serving rate gives an unbounded backlog"));
        }
        total += z.lambda / (mean_mu * bands_n as f64 * z.omega);
    }
    Ok(total)
}

#[derive(Clone, PartialEq)]
struct Label {
    dist: f64,
    path: Vec<UavId>,
}

impl Label {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.path.len().cmp(&other.path.len()))
            .then_with(|| self.path.cmp(&other.path))
    }
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap
        other.key_cmp(self)
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn link_ok(a: &RouteEntry, b: &RouteEntry) -> bool {
    distance(a.position, b.position) <= a.radio_range_g.min(b.radio_range_g)
}

/// Selects the shortest relay route from `source` to a gateway of `target`.
///
/// Relay candidates are taken in descending load balance; each is admitted
/// only when its reliability is at most `thresholds.nr_th`. The route with the
/// smallest total distance (hops plus the gateway-to-target leg) wins, ties go
/// to fewer hops and then to the lexicographically smaller hop list. A source
/// that is itself a gateway yields the single-hop route.
pub fn select_route(
    source: UavId,
    target: &RouteTarget,
    table: &RouteTable,
    thresholds: &QosThresholds,
    score: &dyn Fn(&[UavId]) -> RouteScore,
) -> Result<Route> {
    select_route_excluding(source, target, table, thresholds, &[], score)
}

fn select_route_excluding(
    source: UavId,
    target: &RouteTarget,
    table: &RouteTable,
    thresholds: &QosThresholds,
    excluded: &[UavId],
    score: &dyn Fn(&[UavId]) -> RouteScore,
) -> Result<Route> {
    let src = table.get(source).ok_or(Error::RouteNotFound)?;

    let mut candidates: Vec<&RouteEntry> = table
        .entries()
        .filter(|e| e.uav_id != source && !excluded.contains(&e.uav_id))
        .collect();
    candidates.sort_by(|a, b| b.load_balance_lb.cmp(&a.load_balance_lb).then(a.uav_id.cmp(&b.uav_id)));
    let examined = candidates.len() as u32;
    let mut nodes: Vec<&RouteEntry> = Vec::with_capacity(candidates.len() + 1);
    nodes.push(src);
    nodes.extend(candidates.into_iter().filter(|e| e.reliability_nr <= thresholds.nr_th));
    let index: BTreeMap<UavId, usize> = nodes.iter().enumerate().map(|(i, e)| (e.uav_id, i)).collect();

    let mut settled = alloc::vec![false; nodes.len()];
    let mut heap = BinaryHeap::new();
    heap.push(Label { dist: 0.0, path: alloc::vec![source] });
    let mut best: Option<Label> = None;

    while let Some(label) = heap.pop() {
        let here = index[label.path.last().unwrap()];
        if settled[here] {
            continue;
        }
        settled[here] = true;
        let entry = nodes[here];
        if target.gateways.contains(&entry.uav_id) {
            let done = Label { dist: label.dist + distance(entry.position, target.position), path: label.path.clone() };
            if best.as_ref().map_or(true, |b| done.key_cmp(b) == Ordering::Less) {
                best = Some(done);
            }
        }
        for (next, other) in nodes.iter().enumerate() {
            if settled[next] || label.path.contains(&other.uav_id) || !link_ok(entry, other) {
                continue;
            }
            let mut path = label.path.clone();
            path.push(other.uav_id);
            heap.push(Label { dist: label.dist + distance(entry.position, other.position), path });
        }
    }

    let best = best.ok_or(Error::RouteNotFound)?;
    let s = score(&best.path);
    Ok(Route {
        hops: best.path,
        total_distance: best.dist,
        nr: s.nr,
        cf: s.cf,
        lh: s.lh,
        candidates_examined: examined,
    })
}

/// Rebuilds `route` without the hops in `failed` or any hop whose reliability
/// has risen above the admission threshold. The rebuilt route is accepted only
/// if its own reliability is at least `thresholds.nr_th`.
pub fn rehabilitate(
    route: &Route,
    target: &RouteTarget,
    table: &RouteTable,
    thresholds: &QosThresholds,
    failed: &[UavId],
    score: &dyn Fn(&[UavId]) -> RouteScore,
) -> Result<Route> {
    let source = *route.hops.first().ok_or(Error::RouteNotFound)?;
    let mut excluded: Vec<UavId> = failed.iter().copied().filter(|&u| u != source).collect();
    for &hop in &route.hops[1..] {
        match table.get(hop) {
            Some(e) if e.reliability_nr <= thresholds.nr_th => {}
            _ => excluded.push(hop),
        }
    }
    let fresh = select_route_excluding(source, target, table, thresholds, &excluded, score)?;
    if fresh.nr >= thresholds.nr_th {
        Ok(fresh)
    } else {
        Err(Error::RouteNotFound)
    }
}

/// Keeps the route while reliability, pending cost and mapping likelihood all
/// stay at or above their thresholds.
pub fn qos_maintain(route: &Route, thresholds: &QosThresholds) -> QosVerdict {
    if route.nr >= thresholds.nr_th && route.cf >= thresholds.cf_th && route.lh >= thresholds.lh_th {
        QosVerdict::Keep
    } else {
        QosVerdict::Reselect
    }
}
