//! UAV-to-zone allocation and UE mapping, plus the handling probability and
//! mapping likelihood used to judge a mapping.

use crate::error::{invalid, Error, Result};
use crate::priority::{record_feedback, zone_requests, FeedbackConfig, PriorityState};
use crate::topology::{distance, NetworkState, Position, ServingNode, UavId, UeId, ZoneId};
use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationConfig {
    /// Requests one UAV absorbs per round; sizes the per-zone UAV demand.
    pub per_uav_request_capacity: f64,
    /// Move allocated UAVs onto their anchor point. When false a UAV must
    /// already sit within its radio range of the anchor.
    pub reposition: bool,
    /// Reset budget; `None` means (zones with demand) x (alive UAVs), so every
    /// zone-UAV pair can be tried once.
    pub max_iterations: Option<u32>,
    pub feedback: FeedbackConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPlan {
    pub assignments: BTreeMap<ZoneId, Vec<UavId>>,
    /// Where each allocated UAV is stationed.
    pub anchors: BTreeMap<UavId, Position>,
    pub mapping: BTreeMap<UeId, UavId>,
    pub iterations_used: u32,
    pub unserved_zone_ids: Vec<ZoneId>,
    pub mapped: u32,
    pub mismatched: u32,
    /// Schema after the feedback step.
    pub priority: PriorityState,
    pub reset_required: bool,
}

/// Number of UAVs a zone asks for.
pub fn required_uavs(zone_requests: u64, per_uav_capacity: f64) -> u32 {
    if zone_requests == 0 {
        return 0;
    }
    libm::ceil(zone_requests as f64 / per_uav_capacity).max(1.0) as u32
}

/// Splits the zone's UEs radially into `k` contiguous groups and returns the
/// centroid of each group, innermost first.
pub fn zone_anchors(network: &NetworkState, zone: ZoneId, k: usize) -> Vec<Position> {
    let ues = &network.zone(zone).ue_ids;
    if k == 0 || ues.is_empty() {
        return Vec::new();
    }
    let mut sorted: Vec<(f64, UeId)> = ues.iter().map(|&e| (network.ue_mbs_distance(e), e)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let k = k.min(sorted.len());
    let (base, extra) = (sorted.len() / k, sorted.len() % k);
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        let chunk = &sorted[start..start + len];
        let (sx, sy) = chunk.iter().fold((0.0, 0.0), |(x, y), &(_, e)| {
            let p = network.ue(e).position;
            (x + p.x, y + p.y)
        });
        out.push(Position::new(sx / len as f64, sy / len as f64));
        start += len;
    }
    out
}

/// Allocates alive UAVs to zones in P3 order and maps each zone's UEs (in P1
/// order) onto its UAVs.
///
/// A UAV that cannot reach its anchor is demoted to the tail of the UAV queue
/// and the attempt counts as one reset iteration. Exceeding the reset budget
/// is an error.
pub fn allocate(
    network: &NetworkState,
    priority: &PriorityState,
    requests: &[u64],
    cfg: &AllocationConfig,
) -> Result<AllocationPlan> {
    if network.mbs_list.is_empty() || network.zones.is_empty() {
        return Err(invalid("network", "no MBS with announced demand zones"));
    }
    if !(cfg.per_uav_request_capacity > 0.0) {
        return Err(invalid("per_uav_request_capacity", "must be > 0"));
    }
    let mut queue: VecDeque<UavId> =
        priority.p2.iter().copied().filter(|&u| network.uav(u).alive).collect();
    let demand_zones = priority
        .p3
        .iter()
        .filter(|&&z| zone_requests(network, z, requests) > 0 && !network.zone(z).ue_ids.is_empty())
        .count();
    let max_iterations = cfg
        .max_iterations
        .unwrap_or((demand_zones * queue.len()) as u32)
        .max(1);

    let mut plan = AllocationPlan {
        assignments: BTreeMap::new(),
        anchors: BTreeMap::new(),
        mapping: BTreeMap::new(),
        iterations_used: 1,
        unserved_zone_ids: Vec::new(),
        mapped: 0,
        mismatched: 0,
        priority: priority.clone(),
        reset_required: false,
    };

    for &zone in &priority.p3 {
        let demand = zone_requests(network, zone, requests);
        let wanted = required_uavs(demand, cfg.per_uav_request_capacity);
        if wanted == 0 || network.zone(zone).ue_ids.is_empty() {
            continue;
        }
        let target = (wanted as usize).min(queue.len());
        let anchors = zone_anchors(network, zone, target);
        let mut granted: Vec<UavId> = Vec::new();
        let mut tried = 0;
        let candidates = queue.len();
        while granted.len() < anchors.len() && tried < candidates {
            let Some(uav_id) = queue.pop_front() else { break };
            tried += 1;
            let uav = network.uav(uav_id);
            let anchor = anchors[granted.len()];
            let station = if cfg.reposition { anchor } else { uav.position };
            if distance(station, anchor) <= uav.radio_range_g {
                plan.anchors.insert(uav_id, station);
                granted.push(uav_id);
                plan.mapped += 1;
            } else {
                queue.push_back(uav_id);
                plan.mismatched += 1;
                plan.iterations_used += 1;
                if plan.iterations_used > max_iterations {
                    return Err(Error::BoundedRetries { iterations: plan.iterations_used });
                }
            }
        }
        if granted.is_empty() {
            plan.unserved_zone_ids.push(zone);
        } else {
            plan.assignments.insert(zone, granted);
        }
    }

    map_ues(network, priority, &mut plan);

    if plan.mapped + plan.mismatched > 0 {
        let fb = record_feedback(priority, plan.mapped, plan.mismatched, &cfg.feedback)?;
        plan.priority = fb.state;
        plan.reset_required = fb.reset_required;
    }
    Ok(plan)
}

fn map_ues(network: &NetworkState, priority: &PriorityState, plan: &mut AllocationPlan) {
    let mut slots: BTreeMap<UavId, u32> = plan
        .anchors
        .keys()
        .map(|&u| {
            let uav = network.uav(u);
            (u, uav.total_user_slots_tu.min(uav.resources_rc / uav.ue_resource_re.max(1)))
        })
        .collect();
    let mut rank = alloc::vec![usize::MAX; network.ues.len()];
    for (i, e) in priority.p1.iter().enumerate() {
        rank[e.index()] = i;
    }
    for (zone, uavs) in &plan.assignments {
        let mut ues = network.zone(*zone).ue_ids.clone();
        ues.sort_by_key(|e| (rank[e.index()], *e));
        for e in ues {
            let p = network.ue(e).position;
            let best = uavs
                .iter()
                .filter(|u| slots[u] > 0)
                .map(|&u| (distance(plan.anchors[&u], p), u))
                .filter(|&(d, u)| d <= network.uav(u).radio_range_g)
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if let Some((_, u)) = best {
                *slots.get_mut(&u).unwrap() -= 1;
                plan.mapping.insert(e, u);
            }
        }
    }
}

impl AllocationPlan {
    /// Moves UAVs to their anchors and attaches mapped UEs. Every UE previously
    /// served by a UAV is released first.
    pub fn apply(&self, network: &mut NetworkState) -> Result<()> {
        for i in 0..network.ues.len() {
            let e = UeId(i as u32);
            if matches!(network.ue(e).served_by, Some(ServingNode::Uav(_))) {
                network.detach(e);
            }
        }
        for (&u, &p) in &self.anchors {
            network.uavs[u.index()].position = p;
        }
        for (&e, &u) in &self.mapping {
            network.attach(e, ServingNode::Uav(u))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HandlingModel {
    pub handled_by_uav_e1: u32,
    pub handled_by_mbs_e2: u32,
    pub total_ues: u32,
    pub allocated_uavs_n0: u32,
}

/// Fraction of a zone's UEs handled by either a UAV or the MBS.
pub fn pr_handled(model: &HandlingModel) -> Result<f64> {
    if model.total_ues == 0 {
        return Err(Error::Domain("handling probability needs at least one UE"));
    }
    let handled = model.handled_by_uav_e1 + model.handled_by_mbs_e2;
    if handled > model.total_ues {
        return Err(Error::Domain("more UEs handled than exist"));
    }
    Ok(handled as f64 / model.total_ues as f64)
}

/// One zone's likelihood factor for `n0` allocated UAVs out of `uav_count`.
fn zone_factor(pr: f64, ue_count: u32, uav_count: u32, n0: u32) -> f64 {
    let per_ue = libm::pow(pr, n0 as f64) * libm::pow(1.0 - pr, (uav_count - n0) as f64);
    (0..ue_count).fold(1.0, |acc, _| acc * per_ue)
}

/// Likelihood that every UE is handled under the per-zone UAV counts in `models`.
pub fn mapping_likelihood(models: &[HandlingModel], uav_count: u32) -> Result<f64> {
    let mut total = 1.0;
    for m in models {
        if m.allocated_uavs_n0 > uav_count {
            return Err(Error::Domain("zone allocated more UAVs than exist"));
        }
        let pr = pr_handled(m)?;
        total *= zone_factor(pr, m.total_ues, uav_count, m.allocated_uavs_n0);
    }
    Ok(total)
}

/// Chooses `n0` per zone to maximise the mapping likelihood. Zones contribute
/// independent non-negative factors, so the per-zone argmax (smallest `n0` on
/// ties) is the global one.
pub fn maximize_likelihood(models: &[HandlingModel], uav_count: u32) -> Result<(Vec<u32>, f64)> {
    let mut best_n0 = Vec::with_capacity(models.len());
    let mut total = 1.0;
    for m in models {
        let pr = pr_handled(m)?;
        let mut best = (0, f64::NEG_INFINITY);
        for n0 in 0..=uav_count {
            let v = zone_factor(pr, m.total_ues, uav_count, n0);
            if v > best.1 {
                best = (n0, v);
            }
        }
        best_n0.push(best.0);
        total *= best.1;
    }
    Ok((best_n0, total))
}
