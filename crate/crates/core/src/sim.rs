//! Deterministic discrete-event engine: traffic, delays, failures, and the
//! per-epoch priority, allocation, peering, routing and association pass.

use crate::allocation::{allocate, mapping_likelihood, AllocationConfig, HandlingModel};
use crate::config::ScenarioConfig;
use crate::control::{detect_and_rebalance, peer_and_elect, HeartbeatMonitor};
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, MetricsReport};
use crate::priority::{FeedbackConfig, PriorityState};
use crate::radio::{self, LinkGeometry, RadioParams, SPEED_OF_LIGHT};
use crate::routing::{
    link_utilization, pending_cost, qos_maintain, rehabilitate, reliability_cost, select_route, service_cost,
    uav_utility, QosThresholds, QosVerdict, ReliabilityInputs, Route, RouteEntry, RouteScore, RouteTable,
    RouteTarget, ZoneLoad,
};
use crate::topology::{
    distance, load_balance, Endpoint, Link, LinkKind, LinkLimits, MbsId, NetworkState, Position, ServingNode,
    UavId, UeId, ZoneId,
};
use crate::trace::{DelayBreakdown, DropReason, Record, Trace, TraceEntry};
use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

/// Minimum serving distance, metres. Keeps co-located nodes finite.
pub const MIN_DISTANCE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub trace: Trace,
    pub network: NetworkState,
}

/// Runs one scenario with `ue_count` UEs, `uav_count` UAVs and `seed`.
pub fn run(cfg: &ScenarioConfig, ue_count: u32, uav_count: u32, seed: u64) -> Result<RunOutput> {
    run_with_probe(cfg, ue_count, uav_count, seed, &mut |_, _| {})
}

/// Like [`run`], calling `probe` with the network after every tick.
pub fn run_with_probe(
    cfg: &ScenarioConfig,
    ue_count: u32,
    uav_count: u32,
    seed: u64,
    probe: &mut dyn FnMut(f64, &NetworkState),
) -> Result<RunOutput> {
    cfg.validate()?;
    let mut engine = Engine::new(cfg, ue_count, uav_count, seed)?;
    engine.run(probe)?;
    let report = compute_metrics(&engine.trace);
    Ok(RunOutput { report, trace: engine.trace, network: engine.net })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Fail,
    Launch,
    Epoch,
    Hello,
    Deliver,
    Arrival,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Payload {
    Fail(UavId),
    Launch { zone: ZoneId, anchor: Position },
    Epoch(u32),
    Hello,
    Deliver(u64),
    Arrival(UeId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Event {
    time: f64,
    kind: Kind,
    id: u64,
    seq: u64,
    payload: Payload,
}

impl Event {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.cmp(&other.kind))
            .then(self.id.cmp(&other.id))
            .then(self.seq.cmp(&other.seq))
    }
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct LinkState {
    sinr: f64,
    rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Backhaul {
    /// Sum of inverse leg rates, s/bit.
    inv_rate: f64,
    distance: f64,
    hops: Vec<UavId>,
}

#[derive(Debug, Clone, Default)]
struct NodeQueue {
    free_at: f64,
    finish: VecDeque<f64>,
}

#[derive(Debug, Clone)]
struct InFlight {
    ue: UeId,
    node: ServingNode,
    delay: DelayBreakdown,
    e2e: f64,
    hops: Vec<UavId>,
}

#[derive(Debug, Clone, Copy)]
struct Thresholds {
    sinr: f64,
    rate: f64,
    qos: QosThresholds,
}

struct Engine<'a> {
    cfg: &'a ScenarioConfig,
    radio: RadioParams,
    mbs_radio: RadioParams,
    rng: ChaCha8Rng,
    size_dist: Exp<f64>,
    gap_dist: Exp<f64>,
    net: NetworkState,
    mbs: MbsId,
    priority: PriorityState,
    alloc_cfg: AllocationConfig,
    hb: HeartbeatMonitor,
    failed_at: BTreeMap<UavId, f64>,
    standby_left: u32,
    reset_pending: bool,
    requests: Vec<u64>,
    last_iterations: u32,
    thresholds: Option<Thresholds>,
    routes: BTreeMap<UavId, Route>,
    backhaul: BTreeMap<UavId, Backhaul>,
    links: Vec<LinkState>,
    queues: BTreeMap<ServingNode, NodeQueue>,
    heap: BinaryHeap<Event>,
    seq: u64,
    next_msg: u64,
    inflight: BTreeMap<u64, InFlight>,
    trace: Trace,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a ScenarioConfig, ue_count: u32, uav_count: u32, seed: u64) -> Result<Self> {
        let radio = cfg.radio()?;
        let mbs_radio = RadioParams { num_bands_n: 1, ..radio };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = NetworkState::new(cfg.area_a, LinkLimits { max_mbs_links: cfg.max_cm, max_uav_links: cfg.max_cu });
        let center = cfg.area_a.center();
        let mbs = net.add_mbs(center, cfg.cell_radius, cfg.cell_radius, cfg.zones_k, cfg.max_cm, cfg.mbs_ue_capacity)?;
        let mean_bits = cfg.mean_message_bits();
        for _ in 0..ue_count {
            let r = cfg.cell_radius * libm::sqrt(rng.random::<f64>());
            let theta = 2.0 * core::f64::consts::PI * rng.random::<f64>();
            let p = Position::new(center.x + r * libm::cos(theta), center.y + r * libm::sin(theta));
            net.add_ue(p, cfg.service_s, mean_bits)?;
        }
        for _ in 0..uav_count {
            net.add_uav(center, cfg.uav_spec(), cfg.bands_n)?;
        }
        let size_dist = Exp::new(1.0 / mean_bits).map_err(|_| Error::Domain("message size rate"))?;
        let gap_dist = Exp::new(cfg.service_s).map_err(|_| Error::Domain("arrival rate"))?;
        Ok(Engine {
            cfg,
            radio,
            mbs_radio,
            rng,
            size_dist,
            gap_dist,
            mbs,
            priority: PriorityState::default(),
            alloc_cfg: AllocationConfig {
                per_uav_request_capacity: cfg.tu as f64,
                reposition: true,
                max_iterations: None,
                feedback: FeedbackConfig { kappa: cfg.kappa, reset_threshold: cfg.reset_threshold },
            },
            hb: HeartbeatMonitor::new(cfg.hello, cfg.missed_hellos),
            failed_at: BTreeMap::new(),
            standby_left: cfg.standby,
            reset_pending: false,
            requests: vec![0; ue_count as usize],
            last_iterations: 0,
            thresholds: None,
            routes: BTreeMap::new(),
            backhaul: BTreeMap::new(),
            links: vec![LinkState::default(); ue_count as usize],
            queues: BTreeMap::new(),
            heap: BinaryHeap::new(),
            seq: 0,
            next_msg: 0,
            inflight: BTreeMap::new(),
            trace: vec![TraceEntry {
                time: 0.0,
                record: Record::Run { seed, horizon: cfg.horizon, ue_count, uav_count, bands: cfg.bands_n },
            }],
            net,
        })
    }

    fn push(&mut self, time: f64, kind: Kind, id: u64, payload: Payload) {
        self.seq += 1;
        self.heap.push(Event { time, kind, id, seq: self.seq, payload });
    }

    fn emit(&mut self, time: f64, record: Record) {
        self.trace.push(TraceEntry { time, record });
    }

    fn run(&mut self, probe: &mut dyn FnMut(f64, &NetworkState)) -> Result<()> {
        let horizon = self.cfg.horizon;
        self.push(0.0, Kind::Epoch, 0, Payload::Epoch(0));
        self.push(0.0, Kind::Hello, 0, Payload::Hello);
        for f in &self.cfg.failures.clone() {
            if (f.uav as usize) < self.net.uavs.len() && f.at < horizon {
                self.push(f.at, Kind::Fail, u64::from(f.uav), Payload::Fail(UavId(f.uav)));
            }
        }
        for i in 0..self.net.ues.len() {
            let t = self.gap_dist.sample(&mut self.rng);
            if t < horizon {
                self.push(t, Kind::Arrival, i as u64, Payload::Arrival(UeId(i as u32)));
            }
        }

        while let Some(ev) = self.heap.pop() {
            if ev.time >= horizon {
                break;
            }
            let t = ev.time;
            match ev.payload {
                Payload::Fail(u) => {
                    self.failed_at.entry(u).or_insert(t);
                    self.emit(t, Record::Fail { uav: u });
                }
                Payload::Launch { zone, anchor } => self.on_launch(t, zone, anchor)?,
                Payload::Epoch(i) => {
                    self.on_epoch(t, i)?;
                    let next = (i + 1) as f64 * self.cfg.epoch;
                    if next < horizon {
                        self.push(next, Kind::Epoch, 0, Payload::Epoch(i + 1));
                    }
                }
                Payload::Hello => {
                    self.on_hello(t)?;
                    let next = t + self.cfg.hello;
                    if next < horizon {
                        self.push(next, Kind::Hello, 0, Payload::Hello);
                    }
                }
                Payload::Deliver(msg) => self.on_deliver(t, msg),
                Payload::Arrival(e) => self.on_arrival(t, e),
            }
            if matches!(ev.kind, Kind::Epoch | Kind::Hello | Kind::Launch) {
                self.net.check_invariants()?;
                probe(t, &self.net);
            }
        }

        let pending: Vec<(u64, UeId)> = self.inflight.iter().map(|(&m, f)| (m, f.ue)).collect();
        for (msg, ue) in pending {
            self.emit(horizon, Record::Drop { msg, ue, reason: DropReason::Horizon });
        }
        self.inflight.clear();
        Ok(())
    }

    fn physically_down(&self, u: UavId, t: f64) -> bool {
        self.failed_at.get(&u).is_some_and(|&f| f <= t)
    }

    fn on_arrival(&mut self, t: f64, e: UeId) {
        self.requests[e.index()] += 1;
        let size: f64 = self.size_dist.sample(&mut self.rng);
        let msg = self.next_msg;
        self.next_msg += 1;
        self.emit(t, Record::Arrival { msg, ue: e, size_bits: size });
        let next = t + self.gap_dist.sample(&mut self.rng);
        if next < self.cfg.horizon {
            self.push(next, Kind::Arrival, u64::from(e.0), Payload::Arrival(e));
        }

        let link = self.links[e.index()];
        let (node, bh) = match self.net.ue(e).served_by {
            Some(ServingNode::Uav(u)) => match self.backhaul.get(&u) {
                Some(b) => (ServingNode::Uav(u), b.clone()),
                None => return self.emit(t, Record::Drop { msg, ue: e, reason: DropReason::Unserved }),
            },
            Some(node) => (node, Backhaul { inv_rate: 0.0, distance: 0.0, hops: Vec::new() }),
            None => return self.emit(t, Record::Drop { msg, ue: e, reason: DropReason::Unserved }),
        };
        if !(link.rate > 0.0) {
            return self.emit(t, Record::Drop { msg, ue: e, reason: DropReason::Unserved });
        }

        let cap = self.cfg.queue_capacity as usize;
        let q = self.queues.entry(node).or_default();
        while q.finish.front().is_some_and(|&f| f <= t) {
            q.finish.pop_front();
        }
        if q.finish.len() >= cap {
            return self.emit(t, Record::Drop { msg, ue: e, reason: DropReason::QueueFull });
        }
        let processing = self.last_iterations as f64 * self.cfg.processing_cost;
        let backhaul_tx = size * bh.inv_rate;
        let ready = t + processing + backhaul_tx;
        let start = ready.max(q.free_at);
        let access_tx = size / link.rate;
        q.free_at = start + access_tx;
        q.finish.push_back(q.free_at);

        let node_pos = match node {
            ServingNode::Uav(u) => self.net.uav(u).position,
            ServingNode::Mbs(m) => self.net.mbs_list[m.index()].position,
        };
        let propagation = if self.cfg.propagation {
            (distance(node_pos, self.net.ue(e).position).max(MIN_DISTANCE) + bh.distance) / SPEED_OF_LIGHT
        } else {
            0.0
        };
        let delay = DelayBreakdown { transmission: backhaul_tx + access_tx, propagation, processing, queuing: start - ready };
        let e2e = delay.end_to_end();
        self.inflight.insert(msg, InFlight { ue: e, node, delay, e2e, hops: bh.hops });
        self.push(t + e2e, Kind::Deliver, msg, Payload::Deliver(msg));
    }

    fn on_deliver(&mut self, t: f64, msg: u64) {
        let Some(f) = self.inflight.remove(&msg) else { return };
        let dead = f.hops.iter().any(|&u| self.physically_down(u, t))
            || matches!(f.node, ServingNode::Uav(u) if self.physically_down(u, t));
        if dead {
            self.emit(t, Record::Drop { msg, ue: f.ue, reason: DropReason::NodeFailed });
        } else {
            self.emit(t, Record::Deliver { msg, ue: f.ue, node: f.node, delay: f.delay, e2e: f.e2e });
        }
    }

    fn on_hello(&mut self, t: f64) -> Result<()> {
        let responders: Vec<UavId> =
            self.net.alive_uavs().map(|u| u.id).filter(|&u| !self.physically_down(u, t)).collect();
        for &u in &responders {
            self.hb.record(u, t);
        }
        self.emit(t, Record::Hello { responders: responders.len() as u32 });

        let silent: Vec<UavId> =
            self.hb.unresponsive(t).into_iter().filter(|&u| self.net.uav(u).alive).collect();
        if silent.is_empty() {
            return Ok(());
        }
        let peering = peer_and_elect(&self.net)?;
        let rb = detect_and_rebalance(&mut self.net, &peering, &silent, t, &self.priority.p1, self.standby_left)?;
        for ev in &rb.events {
            self.hb.forget(ev.uav_id);
            self.routes.remove(&ev.uav_id);
            self.backhaul.remove(&ev.uav_id);
            self.emit(t, Record::Detect { uav: ev.uav_id, zones: ev.unhandled_zone_ids.clone() });
        }
        for l in &rb.launches {
            self.standby_left -= 1;
            self.push(t + self.cfg.launch_delay, Kind::Launch, u64::from(l.zone.0), Payload::Launch {
                zone: l.zone,
                anchor: l.anchor,
            });
        }
        // Routes through a dead relay are repaired at once.
        if self.thresholds.is_some() {
            self.maintain_routes(t)?;
        }
        self.compute_links();
        Ok(())
    }

    fn on_launch(&mut self, t: f64, zone: ZoneId, anchor: Position) -> Result<()> {
        let id = self.net.add_uav(anchor, self.cfg.uav_spec(), self.cfg.bands_n)?;
        self.hb.record(id, t);
        self.emit(t, Record::Launch { uav: id, zone });
        let order: Vec<UeId> = self.priority.p1.clone();
        for e in order {
            let ue = self.net.ue(e);
            if ue.zone_id == zone
                && !matches!(ue.served_by, Some(ServingNode::Uav(_)))
                && self.net.can_serve(ServingNode::Uav(id), e)
            {
                self.net.attach(e, ServingNode::Uav(id))?;
            }
        }
        if self.thresholds.is_some() {
            self.maintain_routes(t)?;
        }
        self.compute_links();
        Ok(())
    }

    fn on_epoch(&mut self, t: f64, index: u32) -> Result<()> {
        let counts: Vec<u64> = if index == 0 {
            let expected = libm::round(self.cfg.service_s * self.cfg.epoch) as u64;
            vec![expected; self.net.ues.len()]
        } else {
            core::mem::replace(&mut self.requests, vec![0; self.net.ues.len()])
        };
        self.requests.iter_mut().for_each(|r| *r = 0);
        self.priority = self.priority.rebuild(&self.net, &counts);

        if index == 0 {
            self.capture_sinr_threshold();
        }
        if index == 0 || self.reset_pending {
            let plan = allocate(&self.net, &self.priority, &counts, &self.alloc_cfg)?;
            plan.apply(&mut self.net)?;
            self.priority = plan.priority.clone();
            self.reset_pending = plan.reset_required;
            self.last_iterations = plan.iterations_used;
            self.emit(t, Record::Alloc {
                iterations: plan.iterations_used,
                mapped: plan.mapped,
                mismatched: plan.mismatched,
            });
        }

        self.overlap_mapping()?;
        if index == 0 {
            self.compute_links();
            self.capture_qos_thresholds(t);
        }
        self.maintain_routes(t)?;
        self.fill_mbs()?;
        self.compute_links();
        self.emit_association(t, index);
        Ok(())
    }

    /// Median MBS-only SINR over all UEs, and the band rate it buys.
    fn capture_sinr_threshold(&mut self) {
        let mbs_pos = self.net.mbs_list[self.mbs.index()].position;
        let mut s: Vec<f64> = self
            .net
            .ues
            .iter()
            .map(|u| self.noise_limited_sinr(distance(u.position, mbs_pos)))
            .collect();
        s.sort_by(f64::total_cmp);
        let sinr = match s.len() {
            0 => 0.0,
            n if n % 2 == 1 => s[n / 2],
            n => (s[n / 2 - 1] + s[n / 2]) / 2.0,
        };
        let rate = self.radio.band_width() * libm::log2(1.0 + sinr);
        self.thresholds = Some(Thresholds { sinr, rate, qos: QosThresholds { nr_th: 0.0, cf_th: 0.0, lh_th: 0.0 } });
    }

    fn capture_qos_thresholds(&mut self, t: f64) {
        let active = self.active_uavs();
        let cf = if active.is_empty() {
            0.0
        } else {
            active.iter().map(|&u| self.uav_pending_cost(u)).sum::<f64>() / active.len() as f64
        };
        let qos = QosThresholds { nr_th: self.network_reliability(), cf_th: cf, lh_th: self.network_likelihood() };
        let th = self.thresholds.as_mut().expect("sinr threshold captured first");
        th.qos = qos;
        let (sinr, rate) = (th.sinr, th.rate);
        self.emit(t, Record::Thresholds { sinr, rate, nr: qos.nr_th, cf: qos.cf_th, lh: qos.lh_th });
    }

    fn noise_limited_sinr(&self, d: f64) -> f64 {
        let geom = LinkGeometry { distance_g: d.max(MIN_DISTANCE), interferer_distances: &[] };
        radio::sinr(&self.radio, &geom).unwrap_or(0.0)
    }

    fn active_uavs(&self) -> Vec<UavId> {
        self.net.alive_uavs().filter(|u| !u.served_ue_ids.is_empty()).map(|u| u.id).collect()
    }

    fn overlap_mapping(&mut self) -> Result<()> {
        let peering = match peer_and_elect(&self.net) {
            Ok(p) => p,
            Err(Error::NoAliveUav) => return Ok(()),
            Err(e) => return Err(e),
        };
        let order: Vec<UeId> = self.priority.p1.clone();
        for e in order {
            if matches!(self.net.ue(e).served_by, Some(ServingNode::Uav(_))) {
                continue;
            }
            let zone = self.net.ue(e).zone_id;
            let p = self.net.ue(e).position;
            let best = peering
                .accepted_overlaps
                .iter()
                .filter(|(_, zones)| zones.contains(&zone))
                .map(|(&u, _)| u)
                .filter(|&u| self.net.can_serve(ServingNode::Uav(u), e))
                .map(|u| (distance(self.net.uav(u).position, p), u))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if let Some((_, u)) = best {
                self.net.attach(e, ServingNode::Uav(u))?;
            }
        }
        Ok(())
    }

    fn fill_mbs(&mut self) -> Result<()> {
        let node = ServingNode::Mbs(self.mbs);
        let order: Vec<UeId> = self.priority.p1.clone();
        for e in order {
            if self.net.ue(e).served_by.is_none() && self.net.can_serve(node, e) {
                self.net.attach(e, node)?;
            }
        }
        Ok(())
    }

    /// Network-wide demand term `1 / S_d` inputs: total demand and alive UAVs.
    fn demand(&self) -> (f64, u32) {
        let total: f64 = self.net.ues.iter().map(|u| u.service_demand_s).sum();
        (total, self.net.alive_uavs().count() as u32)
    }

    fn bands_in_use(&self, uavs: &[UavId]) -> u32 {
        uavs.iter().map(|&u| self.net.uav(u).band).collect::<BTreeSet<u32>>().len() as u32
    }

    fn network_reliability(&self) -> f64 {
        let (_, alive) = self.demand();
        let demands: Vec<f64> = self.net.ues.iter().map(|u| u.service_demand_s).collect();
        let active = self.active_uavs();
        let handled = self.net.uavs.iter().filter(|u| u.alive).map(|u| u.served_ue_ids.len() as u32).sum();
        reliability_cost(&ReliabilityInputs {
            service_demands: &demands,
            uav_count: alive,
            users_handled_eh: handled,
            max_capacity: alive * self.cfg.tu,
            bands_used_nprime: self.bands_in_use(&active),
            bands_total_n: self.cfg.bands_n,
            gammas: self.cfg.gammas,
        })
        .unwrap_or(0.0)
    }

    /// Reliability of a hop set, sharing the network-wide service cost.
    fn hops_reliability(&self, hops: &[UavId]) -> f64 {
        let (total, alive) = self.demand();
        if alive == 0 || hops.is_empty() || !(total > 0.0) {
            return 0.0;
        }
        let sd = service_cost(&[total], alive);
        let served: u32 = hops.iter().map(|&u| self.net.uav(u).served_ue_ids.len() as u32).sum();
        let oc = uav_utility(served, hops.len() as u32 * self.cfg.tu);
        let lu = link_utilization(self.bands_in_use(hops), self.cfg.bands_n);
        let g = self.cfg.gammas;
        g.0 / sd + g.1 * oc + g.2 * lu
    }

    fn uav_pending_cost(&self, u: UavId) -> f64 {
        let served = &self.net.uav(u).served_ue_ids;
        if served.is_empty() {
            return 0.0;
        }
        let lambda: f64 = served.iter().map(|&e| self.net.ue(e).service_demand_s).sum();
        let omega = served.iter().map(|&e| self.links[e.index()].rate).sum::<f64>() / served.len() as f64;
        if !(omega > 0.0) {
            return 0.0;
        }
        pending_cost(&[ZoneLoad { lambda, omega }], 1.0 / self.cfg.mean_message_bits(), self.cfg.bands_n).unwrap_or(0.0)
    }

    fn network_likelihood(&self) -> f64 {
        let alive = self.net.alive_uavs().count() as u32;
        let mut models = Vec::new();
        for z in &self.net.zones {
            if z.ue_ids.is_empty() {
                continue;
            }
            let mut e1 = 0;
            let mut e2 = 0;
            let mut uavs = BTreeSet::new();
            for &e in &z.ue_ids {
                match self.net.ue(e).served_by {
                    Some(ServingNode::Uav(u)) => {
                        e1 += 1;
                        uavs.insert(u);
                    }
                    Some(ServingNode::Mbs(_)) => e2 += 1,
                    None => {}
                }
            }
            models.push(HandlingModel {
                handled_by_uav_e1: e1,
                handled_by_mbs_e2: e2,
                total_ues: z.ue_ids.len() as u32,
                allocated_uavs_n0: (uavs.len() as u32).min(alive),
            });
        }
        mapping_likelihood(&models, alive).unwrap_or(0.0)
    }

    fn route_table(&self, t: f64) -> RouteTable {
        let mut table: RouteTable = self
            .net
            .alive_uavs()
            .map(|u| {
                let served = &u.served_ue_ids;
                let eta = if served.is_empty() {
                    0.0
                } else {
                    let mean = served.iter().map(|&e| self.links[e.index()].sinr).sum::<f64>() / served.len() as f64;
                    radio::network_intensity(&self.radio, u.radio_range_g, mean).unwrap_or(0.0)
                };
                RouteEntry {
                    uav_id: u.id,
                    radio_range_g: u.radio_range_g,
                    intensity_eta: eta,
                    load_balance_lb: load_balance(u),
                    reliability_nr: self.hops_reliability(&[u.id]),
                    position: u.position,
                    refreshed_at: self.hb.last_seen(u.id).unwrap_or(t),
                }
            })
            .collect();
        table.evict_stale(t, self.cfg.route_expiry as f64 * self.cfg.hello);
        table
    }

    fn leg_inverse_rate(&self, d: f64) -> f64 {
        let rate = self.radio.band_width() * libm::log2(1.0 + self.noise_limited_sinr(d));
        if rate > 0.0 {
            1.0 / rate
        } else {
            f64::INFINITY
        }
    }

    fn backhaul_of(&self, hops: &[UavId]) -> Backhaul {
        let mbs_pos = self.net.mbs_list[self.mbs.index()].position;
        let mut points: Vec<Position> = hops.iter().map(|&u| self.net.uav(u).position).collect();
        points.push(mbs_pos);
        let (mut inv_rate, mut dist) = (0.0, 0.0);
        for w in points.windows(2) {
            let d = distance(w[0], w[1]).max(MIN_DISTANCE);
            inv_rate += self.leg_inverse_rate(d);
            dist += d;
        }
        Backhaul { inv_rate, distance: dist, hops: hops.to_vec() }
    }

    /// Time to acquire `route`: candidate processing plus a request/reply
    /// exchange over every leg.
    fn acquisition_delay(&self, route: &Route) -> f64 {
        let b = self.backhaul_of(&route.hops);
        route.candidates_examined as f64 * self.cfg.processing_cost + 2.0 * b.distance / SPEED_OF_LIGHT
    }

    /// One gateway per cluster of mutually reachable UAVs, nearest to the MBS
    /// first, then the remaining slots by distance.
    fn pick_gateways(&self, active: &[UavId], mbs_pos: Position, range: f64, slots: usize) -> BTreeSet<UavId> {
        let mut near: Vec<(f64, UavId)> = active
            .iter()
            .map(|&u| (distance(self.net.uav(u).position, mbs_pos), u))
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut cluster: BTreeMap<UavId, usize> = BTreeMap::new();
        for &(_, root) in &near {
            if cluster.contains_key(&root) {
                continue;
            }
            let id = cluster.len();
            let mut stack = vec![root];
            cluster.insert(root, id);
            while let Some(u) = stack.pop() {
                let a = self.net.uav(u);
                for &(_, v) in &near {
                    let b = self.net.uav(v);
                    if !cluster.contains_key(&v)
                        && distance(a.position, b.position) <= a.radio_range_g.min(b.radio_range_g)
                    {
                        cluster.insert(v, id);
                        stack.push(v);
                    }
                }
            }
        }

        let in_range: Vec<UavId> = near.iter().filter(|&&(d, _)| d <= range).map(|&(_, u)| u).collect();
        let mut chosen = BTreeSet::new();
        let mut covered = BTreeSet::new();
        for &u in &in_range {
            if chosen.len() < slots && covered.insert(cluster[&u]) {
                chosen.insert(u);
            }
        }
        for &u in &in_range {
            if chosen.len() < slots {
                chosen.insert(u);
            }
        }
        chosen
    }

    fn maintain_routes(&mut self, t: f64) -> Result<()> {
        let th = self.thresholds.expect("thresholds captured at epoch 0").qos;
        let mbs = &self.net.mbs_list[self.mbs.index()];
        let (mbs_pos, mbs_range, max_links) = (mbs.position, mbs.radio_range, mbs.max_uav_links);
        let active = self.active_uavs();

        let gateways = self.pick_gateways(&active, mbs_pos, mbs_range, max_links as usize);

        let mut links: Vec<Link> = gateways
            .iter()
            .map(|&g| Link { a: Endpoint::Uav(g), b: Endpoint::Mbs(self.mbs), kind: LinkKind::UavMbs })
            .collect();
        let mut pairs: BTreeSet<(UavId, UavId)> = BTreeSet::new();
        let mut cu: BTreeMap<UavId, u32> = BTreeMap::new();
        let full_table = self.route_table(t);
        let lh = self.network_likelihood();
        let target = RouteTarget { position: mbs_pos, gateways: gateways.clone() };

        self.routes.retain(|u, _| active.contains(u) && !gateways.contains(u));
        self.backhaul.clear();
        for &g in &gateways {
            let b = self.backhaul_of(&[g]);
            self.backhaul.insert(g, b);
        }

        for &src in active.iter().filter(|u| !gateways.contains(u)) {
            let max_cu = self.cfg.max_cu;
            let table: RouteTable = full_table
                .entries()
                .filter(|e| {
                    let used = cu.get(&e.uav_id).copied().unwrap_or(0);
                    if e.uav_id == src {
                        used < max_cu
                    } else {
                        used + 2 <= max_cu
                    }
                })
                .cloned()
                .collect();
            let cf = self.uav_pending_cost(src);
            let score = |hops: &[UavId]| RouteScore { nr: self.hops_reliability(hops), cf, lh };

            let outcome = match self.routes.get(&src) {
                Some(old) => {
                    let broken: Vec<UavId> = old.hops[1..]
                        .iter()
                        .copied()
                        .filter(|&h| match table.get(h) {
                            Some(e) => e.reliability_nr > th.nr_th,
                            None => true,
                        })
                        .collect();
                    let geometry_ok = old.hops.windows(2).all(|w| {
                        let (a, b) = (self.net.uav(w[0]), self.net.uav(w[1]));
                        distance(a.position, b.position) <= a.radio_range_g.min(b.radio_range_g)
                    }) && old.hops.last().is_some_and(|l| gateways.contains(l));
                    if !broken.is_empty() || !geometry_ok {
                        rehabilitate(old, &target, &table, &th, &broken, &score).map(|r| (r, true))
                    } else {
                        let s = score(&old.hops);
                        let rescored = Route { nr: s.nr, cf: s.cf, lh: s.lh, ..old.clone() };
                        match qos_maintain(&rescored, &th) {
                            QosVerdict::Keep => Ok((rescored, false)),
                            QosVerdict::Reselect => select_route(src, &target, &table, &th, &score).map(|r| (r, true)),
                        }
                    }
                }
                None => select_route(src, &target, &table, &th, &score).map(|r| (r, true)),
            };

            match outcome {
                Ok((route, fresh)) => {
                    if fresh {
                        let acquired = t + self.acquisition_delay(&route);
                        self.emit(t, Record::Route { uav: src, requested: t, acquired, hops: route.hops.clone() });
                    }
                    for w in route.hops.windows(2) {
                        let key = (w[0].min(w[1]), w[0].max(w[1]));
                        if pairs.insert(key) {
                            *cu.entry(w[0]).or_default() += 1;
                            *cu.entry(w[1]).or_default() += 1;
                            links.push(Link { a: Endpoint::Uav(key.0), b: Endpoint::Uav(key.1), kind: LinkKind::UavUav });
                        }
                    }
                    let b = self.backhaul_of(&route.hops);
                    self.backhaul.insert(src, b);
                    self.routes.insert(src, route);
                }
                Err(Error::RouteNotFound) => {
                    self.routes.remove(&src);
                    self.emit(t, Record::RouteFail { uav: src });
                    let served = self.net.uav(src).served_ue_ids.clone();
                    for e in served {
                        self.net.detach(e);
                    }
                }
                Err(e) => return Err(e),
            }
        }
        self.net.set_backhaul_links(&links)
    }

    fn compute_links(&mut self) {
        let active = self.active_uavs();
        let mut by_band: BTreeMap<u32, Vec<UavId>> = BTreeMap::new();
        for &u in &active {
            by_band.entry(self.net.uav(u).band).or_default().push(u);
        }
        let mut interferers = Vec::new();
        for i in 0..self.net.ues.len() {
            let ue = &self.net.ues[i];
            self.links[i] = match ue.served_by {
                None => LinkState::default(),
                Some(ServingNode::Mbs(m)) => {
                    let d = distance(self.net.mbs_list[m.index()].position, ue.position);
                    let sinr = self.noise_limited_sinr(d);
                    LinkState { sinr, rate: self.mbs_radio.bandwidth_beta * libm::log2(1.0 + sinr) }
                }
                Some(ServingNode::Uav(u)) => {
                    let uav = self.net.uav(u);
                    interferers.clear();
                    if let Some(co) = by_band.get(&uav.band) {
                        interferers.extend(
                            co.iter()
                                .filter(|&&o| o != u)
                                .map(|&o| distance(self.net.uav(o).position, ue.position).max(MIN_DISTANCE)),
                        );
                    }
                    let geom = LinkGeometry {
                        distance_g: distance(uav.position, ue.position).max(MIN_DISTANCE),
                        interferer_distances: &interferers,
                    };
                    let sinr = radio::sinr(&self.radio, &geom).unwrap_or(0.0);
                    LinkState { sinr, rate: self.radio.band_width() * libm::log2(1.0 + sinr) }
                }
            };
        }
    }

    fn emit_association(&mut self, t: f64, index: u32) {
        let sinr_th = self.thresholds.map_or(0.0, |th| th.sinr);
        let mut weak: BTreeMap<ServingNode, u32> = BTreeMap::new();
        for (i, ue) in self.net.ues.iter().enumerate() {
            if let Some(node) = ue.served_by {
                let w = weak.entry(node).or_default();
                if self.links[i].sinr < sinr_th {
                    *w += 1;
                }
            }
        }
        let mut records = Vec::with_capacity(self.net.ues.len());
        for (i, ue) in self.net.ues.iter().enumerate() {
            let sinr = self.links[i].sinr;
            let capacity = match ue.served_by {
                None => 0.0,
                Some(node) => {
                    let y = weak[&node].max(1);
                    let params = match node {
                        ServingNode::Uav(_) => &self.radio,
                        ServingNode::Mbs(_) => &self.mbs_radio,
                    };
                    radio::per_ue_capacity(params, sinr, y).unwrap_or(0.0)
                }
            };
            records.push(Record::Assoc { ue: ue.id, node: ue.served_by, sinr, capacity });
        }
        for r in records {
            self.emit(t, r);
        }
        let active = self.active_uavs();
        let bands_used = self.bands_in_use(&active);
        self.emit(t, Record::Epoch {
            index,
            active_uavs: active.len() as u32,
            bands_used,
            bands_total: self.cfg.bands_n,
        });
    }
}
