//! Mutual peering with controller election, heartbeat failure detection, and
//! load balancing of UEs orphaned by a failed UAV.

use crate::error::{Error, Result};
use crate::topology::{distance, load_balance, Endpoint, NetworkState, Position, ServingNode, UavId, UeId, ZoneId};
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeeringState {
    pub controller_uav: Option<UavId>,
    /// Zones whose centroid lies within each accepting UAV's radio range.
    pub accepted_overlaps: BTreeMap<UavId, Vec<ZoneId>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailureEvent {
    pub uav_id: UavId,
    pub detected_at: f64,
    /// Zones that held UEs of the failed UAV.
    pub unhandled_zone_ids: Vec<ZoneId>,
}

/// Farthest served UE of a UAV, i.e. the radio reach it currently needs.
pub fn current_reach(network: &NetworkState, uav: UavId) -> f64 {
    let u = network.uav(uav);
    u.served_ue_ids
        .iter()
        .map(|&e| distance(u.position, network.ue(e).position))
        .fold(0.0, f64::max)
}

/// Every alive UAV whose current reach fits inside its radio range accepts
/// connections from the demand zones it overlaps. The alive UAV nearest its
/// MBS (ties by id) becomes controller.
pub fn peer_and_elect(network: &NetworkState) -> Result<PeeringState> {
    let mut state = PeeringState::default();
    let mut best: Option<(f64, UavId)> = None;
    for uav in network.alive_uavs() {
        if current_reach(network, uav.id) <= uav.radio_range_g {
            let zones: Vec<ZoneId> = network
                .zones
                .iter()
                .filter(|z| distance(z.centroid, uav.position) <= uav.radio_range_g)
                .map(|z| z.id)
                .collect();
            state.accepted_overlaps.insert(uav.id, zones);
        }
        let d = network.uav_mbs_distance(uav.id);
        if best.map_or(true, |(bd, bid)| d < bd || (d == bd && uav.id < bid)) {
            best = Some((d, uav.id));
        }
    }
    state.controller_uav = Some(best.ok_or(Error::NoAliveUav)?.1);
    Ok(state)
}

/// Hello-based failure detector: a UAV is unresponsive once it has missed
/// `missed_limit` consecutive hello intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct HeartbeatMonitor {
    pub interval: f64,
    pub missed_limit: u32,
    last_seen: BTreeMap<UavId, f64>,
}

impl HeartbeatMonitor {
    pub fn new(interval: f64, missed_limit: u32) -> Self {
        HeartbeatMonitor { interval, missed_limit, last_seen: BTreeMap::new() }
    }

    pub fn record(&mut self, uav: UavId, at: f64) {
        self.last_seen.insert(uav, at);
    }

    pub fn forget(&mut self, uav: UavId) {
        self.last_seen.remove(&uav);
    }

    pub fn last_seen(&self, uav: UavId) -> Option<f64> {
        self.last_seen.get(&uav).copied()
    }

    /// Tracked UAVs silent for at least `missed_limit` intervals at `now`.
    pub fn unresponsive(&self, now: f64) -> Vec<UavId> {
        let window = self.interval * self.missed_limit as f64;
        self.last_seen
            .iter()
            .filter(|&(_, &t)| now - t >= window - 1e-9)
            .map(|(&u, _)| u)
            .collect()
    }
}

/// A standby UAV should be flown to `anchor` to pick up `zone`'s orphans.
#[derive(Debug, Clone, PartialEq)]
pub struct LaunchRequest {
    pub zone: ZoneId,
    pub anchor: Position,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Rebalance {
    pub events: Vec<FailureEvent>,
    /// UEs moved onto surviving UAVs, each at most once.
    pub reassigned: Vec<(UeId, UavId)>,
    pub launches: Vec<LaunchRequest>,
    /// Orphaned zones left without UAV service (no absorber, no standby).
    pub unserved_zone_ids: Vec<ZoneId>,
    /// Orphans that are still without a UAV.
    pub stranded: Vec<UeId>,
}

/// Marks `unresponsive` UAVs dead, strips their UEs, moves orphans onto
/// surviving UAVs with spare load balance (descending `L_b`, UEs in
/// `ue_priority` order), and requests standby launches for what is left.
pub fn detect_and_rebalance(
    network: &mut NetworkState,
    peering: &PeeringState,
    unresponsive: &[UavId],
    now: f64,
    ue_priority: &[UeId],
    standby_available: u32,
) -> Result<Rebalance> {
    if peering.controller_uav.is_none() {
        return Err(Error::NoAliveUav);
    }
    let mut out = Rebalance::default();
    let mut orphans: Vec<UeId> = Vec::new();
    for &id in unresponsive {
        if !network.uav(id).alive && network.uav(id).served_ue_ids.is_empty() {
            continue;
        }
        network.uavs[id.index()].alive = false;
        let served = network.uav(id).served_ue_ids.clone();
        let mut zones: Vec<ZoneId> = served.iter().map(|&e| network.ue(e).zone_id).collect();
        zones.sort();
        zones.dedup();
        for &e in &served {
            network.detach(e);
        }
        orphans.extend(served);
        out.events.push(FailureEvent { uav_id: id, detected_at: now, unhandled_zone_ids: zones });
    }
    if out.events.is_empty() {
        return Ok(out);
    }
    let kept: Vec<_> = network
        .links
        .iter()
        .copied()
        .filter(|l| l.kind != crate::topology::LinkKind::UavUe)
        .filter(|l| !touches_dead(network, l.a) && !touches_dead(network, l.b))
        .collect();
    network.set_backhaul_links(&kept)?;

    let mut rank = alloc::vec![usize::MAX; network.ues.len()];
    for (i, e) in ue_priority.iter().enumerate() {
        rank[e.index()] = i;
    }
    orphans.sort_by_key(|e| (rank[e.index()], *e));

    let mut absorbers: Vec<(i64, UavId)> = network
        .alive_uavs()
        .map(|u| (load_balance(u), u.id))
        .filter(|&(lb, _)| lb >= 1)
        .collect();
    absorbers.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

    for &e in &orphans {
        let target = absorbers
            .iter()
            .map(|&(_, u)| u)
            .find(|&u| network.can_serve(ServingNode::Uav(u), e));
        match target {
            Some(u) => {
                network.attach(e, ServingNode::Uav(u))?;
                out.reassigned.push((e, u));
            }
            None => out.stranded.push(e),
        }
    }

    let mut by_zone: BTreeMap<ZoneId, Vec<UeId>> = BTreeMap::new();
    for &e in &out.stranded {
        by_zone.entry(network.ue(e).zone_id).or_default().push(e);
    }
    let mut budget = standby_available;
    for (zone, ues) in by_zone {
        if budget == 0 {
            out.unserved_zone_ids.push(zone);
            continue;
        }
        budget -= 1;
        let (sx, sy) = ues.iter().fold((0.0, 0.0), |(x, y), &e| {
            let p = network.ue(e).position;
            (x + p.x, y + p.y)
        });
        let n = ues.len() as f64;
        out.launches.push(LaunchRequest { zone, anchor: Position::new(sx / n, sy / n) });
    }
    Ok(out)
}

fn touches_dead(network: &NetworkState, e: Endpoint) -> bool {
    matches!(e, Endpoint::Uav(u) if !network.uav(u).alive)
}
