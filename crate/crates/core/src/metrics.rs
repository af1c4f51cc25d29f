//! The nine run metrics, computed from a trace alone.

use crate::topology::ServingNode;
use crate::trace::{Record, TraceEntry};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricsReport {
    /// Share of UE-epochs served at or above the rate threshold, percent.
    pub throughput_coverage_pct: f64,
    pub allocation_iterations: u64,
    /// Share of UE-epochs with a server and SINR at or above threshold, percent.
    pub guaranteed_sir_pct: f64,
    /// Mean capacity of UAV-served UE-epochs, bit/s.
    pub per_ue_capacity_mean: f64,
    /// Fraction of UAV-served UE-epochs at or above the rate threshold.
    pub per_ue_capacity_prob: f64,
    pub messages_disseminated_pct: f64,
    pub end_to_end_delay_s: f64,
    pub link_utilization_pct: f64,
    /// Messages delivered through UAVs per simulated second.
    pub service_dissemination_rate: f64,
    pub route_acquisition_delay_s: f64,
    /// Set when the trace carried no run header.
    pub empty: bool,
}

/// Metric names in CSV order, paired with their value getter.
pub const METRICS: [(&str, fn(&MetricsReport) -> f64); 9] = [
    ("throughput_coverage", |m| m.throughput_coverage_pct),
    ("allocation_iterations", |m| m.allocation_iterations as f64),
    ("guaranteed_sir", |m| m.guaranteed_sir_pct),
    ("per_ue_capacity", |m| m.per_ue_capacity_prob),
    ("messages_disseminated", |m| m.messages_disseminated_pct),
    ("end_to_end_delay", |m| m.end_to_end_delay_s),
    ("link_utilization", |m| m.link_utilization_pct),
    ("service_dissemination_rate", |m| m.service_dissemination_rate),
    ("route_acquisition_delay", |m| m.route_acquisition_delay_s),
];

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

pub fn compute_metrics(trace: &[TraceEntry]) -> MetricsReport {
    let mut horizon = None;
    let (mut sinr_th, mut rate_th) = (f64::INFINITY, f64::INFINITY);
    let (mut assoc, mut covered, mut sir_ok) = (0u64, 0u64, 0u64);
    let (mut uav_assoc, mut uav_cap_sum, mut uav_cap_ok) = (0u64, 0.0, 0u64);
    let (mut generated, mut delivered, mut via_uav) = (0u64, 0u64, 0u64);
    let mut delay_sum = 0.0;
    let (mut epochs, mut util_sum) = (0u64, 0.0);
    let (mut routes, mut route_delay_sum) = (0u64, 0.0);
    let mut iterations = 0u64;

    for entry in trace {
        match &entry.record {
            Record::Run { horizon: h, .. } => horizon = Some(*h),
            Record::Thresholds { sinr, rate, .. } => {
                sinr_th = *sinr;
                rate_th = *rate;
            }
            Record::Arrival { .. } => generated += 1,
            Record::Deliver { node, e2e, .. } => {
                delivered += 1;
                delay_sum += e2e;
                if matches!(node, ServingNode::Uav(_)) {
                    via_uav += 1;
                }
            }
            Record::Epoch { bands_used, bands_total, .. } => {
                epochs += 1;
                util_sum += ratio(*bands_used as f64, *bands_total as f64);
            }
            Record::Alloc { iterations: i, .. } => iterations += u64::from(*i),
            Record::Assoc { node, sinr, capacity, .. } => {
                assoc += 1;
                if node.is_some() {
                    if *capacity >= rate_th {
                        covered += 1;
                    }
                    if *sinr >= sinr_th {
                        sir_ok += 1;
                    }
                }
                if matches!(node, Some(ServingNode::Uav(_))) {
                    uav_assoc += 1;
                    uav_cap_sum += capacity;
                    if *capacity >= rate_th {
                        uav_cap_ok += 1;
                    }
                }
            }
            Record::Route { requested, acquired, .. } => {
                routes += 1;
                route_delay_sum += acquired - requested;
            }
            _ => {}
        }
    }

    let Some(horizon) = horizon else {
        return MetricsReport { empty: true, ..MetricsReport::default() };
    };
    MetricsReport {
        throughput_coverage_pct: 100.0 * ratio(covered as f64, assoc as f64),
        allocation_iterations: iterations,
        guaranteed_sir_pct: 100.0 * ratio(sir_ok as f64, assoc as f64),
        per_ue_capacity_mean: ratio(uav_cap_sum, uav_assoc as f64),
        per_ue_capacity_prob: ratio(uav_cap_ok as f64, uav_assoc as f64),
        messages_disseminated_pct: 100.0 * ratio(delivered as f64, generated as f64),
        end_to_end_delay_s: ratio(delay_sum, delivered as f64),
        link_utilization_pct: 100.0 * ratio(util_sum, epochs as f64),
        service_dissemination_rate: ratio(via_uav as f64, horizon),
        route_acquisition_delay_s: ratio(route_delay_sum, routes as f64),
        empty: false,
    }
}
