//! Event trace records emitted by the engine.

use crate::topology::{ServingNode, UavId, UeId, ZoneId};
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DropReason {
    Unserved,
    QueueFull,
    NodeFailed,
    Horizon,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::Unserved => "unserved",
            DropReason::QueueFull => "queue_full",
            DropReason::NodeFailed => "node_failed",
            DropReason::Horizon => "horizon",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "unserved" => DropReason::Unserved,
            "queue_full" => DropReason::QueueFull,
            "node_failed" => DropReason::NodeFailed,
            "horizon" => DropReason::Horizon,
            _ => return None,
        })
    }
}

/// Per-message delay split. The end-to-end delay is their sum in field order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DelayBreakdown {
    pub transmission: f64,
    pub propagation: f64,
    pub processing: f64,
    pub queuing: f64,
}

impl DelayBreakdown {
    pub fn end_to_end(&self) -> f64 {
        self.transmission + self.propagation + self.processing + self.queuing
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Run { seed: u64, horizon: f64, ue_count: u32, uav_count: u32, bands: u32 },
    Thresholds { sinr: f64, rate: f64, nr: f64, cf: f64, lh: f64 },
    Arrival { msg: u64, ue: UeId, size_bits: f64 },
    Deliver { msg: u64, ue: UeId, node: ServingNode, delay: DelayBreakdown, e2e: f64 },
    Drop { msg: u64, ue: UeId, reason: DropReason },
    Hello { responders: u32 },
    Fail { uav: UavId },
    Detect { uav: UavId, zones: Vec<ZoneId> },
    Launch { uav: UavId, zone: ZoneId },
    Epoch { index: u32, active_uavs: u32, bands_used: u32, bands_total: u32 },
    Alloc { iterations: u32, mapped: u32, mismatched: u32 },
    Assoc { ue: UeId, node: Option<ServingNode>, sinr: f64, capacity: f64 },
    Route { uav: UavId, requested: f64, acquired: f64, hops: Vec<UavId> },
    RouteFail { uav: UavId },
}

impl Record {
    pub fn kind(&self) -> &'static str {
        match self {
            Record::Run { .. } => "run",
            Record::Thresholds { .. } => "thresholds",
            Record::Arrival { .. } => "arrival",
            Record::Deliver { .. } => "deliver",
            Record::Drop { .. } => "drop",
            Record::Hello { .. } => "hello",
            Record::Fail { .. } => "fail",
            Record::Detect { .. } => "detect",
            Record::Launch { .. } => "launch",
            Record::Epoch { .. } => "epoch",
            Record::Alloc { .. } => "alloc",
            Record::Assoc { .. } => "assoc",
            Record::Route { .. } => "route",
            Record::RouteFail { .. } => "route_fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub time: f64,
    pub record: Record,
}

pub type Trace = Vec<TraceEntry>;
