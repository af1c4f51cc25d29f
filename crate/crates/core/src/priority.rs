//! Priority schema: the three ranked sets (UEs, UAVs, demand zones) and the
//! error/feedback/learning-rate loop that decides when the mapping is reset.
//!
//! Set precedence is fixed: zones are consulted first, then UEs, then UAVs.
//! Every ranking is a deterministic multi-key sort whose last key is the id.

use crate::error::{Error, Result};
use crate::topology::{distance, load_balance, NetworkState, UavId, UeId, ZoneId};
use alloc::vec::Vec;
use core::cmp::Ordering;

#[derive(Debug, Clone, PartialEq)]
pub struct PriorityState {
    /// UEs, highest priority first.
    pub p1: Vec<UeId>,
    /// UAVs, highest priority first.
    pub p2: Vec<UavId>,
    /// Demand zones, highest priority first.
    pub p3: Vec<ZoneId>,
    pub learning_rate: f64,
    pub feedback_rate: f64,
    pub error_rate: f64,
    pub epoch: u64,
}

impl Default for PriorityState {
    fn default() -> Self {
        PriorityState {
            p1: Vec::new(),
            p2: Vec::new(),
            p3: Vec::new(),
            learning_rate: 0.5,
            feedback_rate: 1.0,
            error_rate: 0.0,
            epoch: 0,
        }
    }
}

/// Knobs of the rate-update loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackConfig {
    /// Gain applied to the change in error rate when adapting the learning rate.
    pub kappa: f64,
    /// Error rate above which the mapping must be reset.
    pub reset_threshold: f64,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        FeedbackConfig { kappa: 0.1, reset_threshold: 0.5 }
    }
}

/// Requests observed per UE, indexed by UE id.
pub type RequestCounts<'a> = &'a [u64];

pub fn zone_requests(network: &NetworkState, zone: ZoneId, requests: RequestCounts<'_>) -> u64 {
    network.zone(zone).ue_ids.iter().map(|e| requests[e.index()]).sum()
}

/// Zones by descending aggregate request count, ties by ascending id.
pub fn rank_zones(zones: &[ZoneId], network: &NetworkState, requests: RequestCounts<'_>) -> Vec<ZoneId> {
    let mut keyed: Vec<(u64, ZoneId)> =
        zones.iter().map(|&z| (zone_requests(network, z, requests), z)).collect();
    keyed.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, z)| z).collect()
}

/// Whether some alive UAV has the zone's centroid inside its radio range.
pub fn zone_covered(network: &NetworkState, zone: ZoneId) -> bool {
    let c = network.zone(zone).centroid;
    network.alive_uavs().any(|u| distance(u.position, c) <= u.radio_range_g)
}

/// UEs by descending requests, then descending distance from their MBS, then
/// UEs whose zone is covered by a deployed UAV, then ascending id.
pub fn rank_ues(ues: &[UeId], network: &NetworkState, requests: RequestCounts<'_>) -> Vec<UeId> {
    let covered: Vec<bool> = (0..network.zones.len())
        .map(|z| zone_covered(network, ZoneId(z as u32)))
        .collect();
    let mut keyed: Vec<(u64, f64, bool, UeId)> = ues
        .iter()
        .map(|&e| {
            let zone = network.ue(e).zone_id;
            (requests[e.index()], network.ue_mbs_distance(e), covered[zone.index()], e)
        })
        .collect();
    keyed.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then(b.1.total_cmp(&a.1))
            .then(b.2.cmp(&a.2))
            .then(a.3.cmp(&b.3))
    });
    keyed.into_iter().map(|k| k.3).collect()
}

/// UAVs by descending resource headroom, then descending load balance,
/// then ascending distance to the MBS, then ascending id.
pub fn rank_uavs(uavs: &[UavId], network: &NetworkState) -> Vec<UavId> {
    let mut keyed: Vec<(u32, i64, f64, UavId)> = uavs
        .iter()
        .map(|&u| {
            let uav = network.uav(u);
            (uav.resource_headroom(), load_balance(uav), network.uav_mbs_distance(u), u)
        })
        .collect();
    keyed.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then(b.1.cmp(&a.1))
            .then(a.2.partial_cmp(&b.2).unwrap_or(Ordering::Equal))
            .then(a.3.cmp(&b.3))
    });
    keyed.into_iter().map(|k| k.3).collect()
}

impl PriorityState {
    /// Recomputes all three sets from the current network and request counts.
    /// Only alive UAVs enter P2. Rates and epoch are carried over.
    pub fn rebuild(&self, network: &NetworkState, requests: RequestCounts<'_>) -> PriorityState {
        let zones: Vec<ZoneId> = network.zones.iter().map(|z| z.id).collect();
        let ues: Vec<UeId> = network.ues.iter().map(|e| e.id).collect();
        let uavs: Vec<UavId> = network.alive_uavs().map(|u| u.id).collect();
        PriorityState {
            p1: rank_ues(&ues, network, requests),
            p2: rank_uavs(&uavs, network),
            p3: rank_zones(&zones, network, requests),
            ..self.clone()
        }
    }
}

/// Outcome of a mapping round fed back into the schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Feedback {
    pub state: PriorityState,
    /// The error rate crossed the reset threshold; the caller must reset the mapping.
    pub reset_required: bool,
}

pub fn record_feedback(
    state: &PriorityState,
    mapped: u32,
    mismatched: u32,
    cfg: &FeedbackConfig,
) -> Result<Feedback> {
    let total = mapped + mismatched;
    if total == 0 {
        return Err(Error::Domain("feedback needs at least one mapping attempt"));
    }
    let error_rate = mismatched as f64 / total as f64;
    let feedback_rate = mapped as f64 / total as f64;
    let learning_rate = (state.learning_rate + cfg.kappa * (error_rate - state.error_rate)).clamp(0.0, 1.0);
    Ok(Feedback {
        state: PriorityState {
            learning_rate,
            feedback_rate,
            error_rate,
            epoch: state.epoch + 1,
            ..state.clone()
        },
        reset_required: error_rate > cfg.reset_threshold,
    })
}
