//! Network entities and geometry: MBS cells split into angular demand zones,
//! UEs, UAVs, and the link set between them.
//!
//! `NetworkState` owns all resource accounting. UEs are attached and detached
//! only through [`NetworkState::attach`] / [`NetworkState::detach`] so the
//! per-UAV resource sums stay exact.

use crate::error::{invalid, Error, Result};
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(MbsId, "m");
id_type!(ZoneId, "z");
id_type!(UeId, "e");
id_type!(UavId, "u");

/// A node that can serve a UE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ServingNode {
    Mbs(MbsId),
    Uav(UavId),
}

impl fmt::Display for ServingNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ServingNode::Mbs(id) => id.fmt(f),
            ServingNode::Uav(id) => id.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

pub fn distance(a: Position, b: Position) -> f64 {
    libm::hypot(a.x - b.x, a.y - b.y)
}

/// Rectangular simulation area anchored at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn contains(&self, p: Position) -> bool {
        p.is_finite() && p.x >= 0.0 && p.y >= 0.0 && p.x <= self.width && p.y <= self.height
    }

    pub fn center(&self) -> Position {
        Position::new(self.width / 2.0, self.height / 2.0)
    }

    pub fn square_meters(&self) -> f64 {
        self.width * self.height
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mbs {
    pub id: MbsId,
    pub position: Position,
    pub cell_radius: f64,
    /// Reach of the MBS-UAV backhaul link.
    pub radio_range: f64,
    pub zones: Vec<ZoneId>,
    /// Maximum number of UAVs holding a direct link to this MBS.
    pub max_uav_links: u32,
    /// Maximum number of UEs the MBS serves directly.
    pub ue_capacity: u32,
    pub served_ue_ids: Vec<UeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemandZone {
    pub id: ZoneId,
    pub mbs_id: MbsId,
    pub centroid: Position,
    /// Sector start angle and angular width, radians.
    pub sector_start: f64,
    pub sector_width: f64,
    pub ue_ids: Vec<UeId>,
    /// Aggregate request rate of the zone's UEs, requests/s.
    pub request_rate_lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ue {
    pub id: UeId,
    pub zone_id: ZoneId,
    pub position: Position,
    /// Requests per second.
    pub service_demand_s: f64,
    /// Mean message size, bits.
    pub mean_packet_size_inv_mu: f64,
    pub served_by: Option<ServingNode>,
    /// Resource units held while served; zero when unserved.
    pub resources_re: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Uav {
    pub id: UavId,
    pub position: Position,
    pub radio_range_g: f64,
    pub resources_rc: u32,
    pub resources_used: u32,
    /// Resource units each served UE consumes.
    pub ue_resource_re: u32,
    pub total_user_slots_tu: u32,
    pub mbs_links_cm: u32,
    pub uav_links_cu: u32,
    pub served_ue_ids: Vec<UeId>,
    /// Orthogonal band index this UAV transmits on.
    pub band: u32,
    pub alive: bool,
}

impl Uav {
    pub fn resource_headroom(&self) -> u32 {
        self.resources_rc.saturating_sub(self.resources_used)
    }

    pub fn has_slot(&self) -> bool {
        (self.served_ue_ids.len() as u32) < self.total_user_slots_tu
            && self.resources_used + self.ue_resource_re <= self.resources_rc
    }
}

/// Spare connection slots of a UAV: `T_u - (C_m + C_u)`. Negative when overcommitted.
pub fn load_balance(uav: &Uav) -> i64 {
    uav.total_user_slots_tu as i64 - (uav.mbs_links_cm as i64 + uav.uav_links_cu as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LinkKind {
    UavUe,
    UavUav,
    UavMbs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Endpoint {
    Mbs(MbsId),
    Uav(UavId),
    Ue(UeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Link {
    pub a: Endpoint,
    pub b: Endpoint,
    pub kind: LinkKind,
}

/// Per-UAV construction parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavSpec {
    pub radio_range_g: f64,
    pub resources_rc: u32,
    pub ue_resource_re: u32,
    pub total_user_slots_tu: u32,
}

/// Upper bounds on per-UAV link counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkLimits {
    pub max_mbs_links: u32,
    pub max_uav_links: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub area: Area,
    pub limits: LinkLimits,
    pub mbs_list: Vec<Mbs>,
    pub zones: Vec<DemandZone>,
    pub ues: Vec<Ue>,
    pub uavs: Vec<Uav>,
    pub links: Vec<Link>,
}

impl NetworkState {
    pub fn new(area: Area, limits: LinkLimits) -> Self {
        NetworkState {
            area,
            limits,
            mbs_list: Vec::new(),
            zones: Vec::new(),
            ues: Vec::new(),
            uavs: Vec::new(),
            links: Vec::new(),
        }
    }

    /// Adds an MBS whose cell disc is split into `sectors` equal angular zones.
    pub fn add_mbs(
        &mut self,
        position: Position,
        cell_radius: f64,
        radio_range: f64,
        sectors: u32,
        max_uav_links: u32,
        ue_capacity: u32,
    ) -> Result<MbsId> {
        if !self.area.contains(position) {
            return Err(invalid("mbs position", "outside the simulation area"));
        }
        if sectors == 0 {
            return Err(invalid("k", "must be >= 1"));
        }
        if !(cell_radius > 0.0) {
            return Err(invalid("cell_radius", "must be > 0"));
        }
        let id = MbsId(self.mbs_list.len() as u32);
        let width = 2.0 * PI / sectors as f64;
        let mut zones = Vec::with_capacity(sectors as usize);
        for k in 0..sectors {
            let start = k as f64 * width;
            let zid = ZoneId(self.zones.len() as u32);
            self.zones.push(DemandZone {
                id: zid,
                mbs_id: id,
                centroid: sector_centroid(position, cell_radius, start, width),
                sector_start: start,
                sector_width: width,
                ue_ids: Vec::new(),
                request_rate_lambda: 0.0,
            });
            zones.push(zid);
        }
        self.mbs_list.push(Mbs {
            id,
            position,
            cell_radius,
            radio_range,
            zones,
            max_uav_links,
            ue_capacity,
            served_ue_ids: Vec::new(),
        });
        Ok(id)
    }

    /// Adds a UE and files it under the zone of the nearest MBS containing it.
    pub fn add_ue(&mut self, position: Position, service_demand: f64, mean_size_bits: f64) -> Result<UeId> {
        if !self.area.contains(position) {
            return Err(invalid("ue position", "outside the simulation area"));
        }
        let zone_id = self.zone_of(position).ok_or_else(|| invalid("ue position", "not inside any MBS cell"))?;
        let id = UeId(self.ues.len() as u32);
        self.ues.push(Ue {
            id,
            zone_id,
            position,
            service_demand_s: service_demand,
            mean_packet_size_inv_mu: mean_size_bits,
            served_by: None,
            resources_re: 0,
        });
        let zone = &mut self.zones[zone_id.index()];
        zone.ue_ids.push(id);
        zone.request_rate_lambda += service_demand;
        Ok(id)
    }

    pub fn add_uav(&mut self, position: Position, spec: UavSpec, num_bands: u32) -> Result<UavId> {
        if !self.area.contains(position) {
            return Err(invalid("uav position", "outside the simulation area"));
        }
        if spec.ue_resource_re == 0 {
            return Err(invalid("r_e", "must be >= 1"));
        }
        let id = UavId(self.uavs.len() as u32);
        self.uavs.push(Uav {
            id,
            position,
            radio_range_g: spec.radio_range_g,
            resources_rc: spec.resources_rc,
            resources_used: 0,
            ue_resource_re: spec.ue_resource_re,
            total_user_slots_tu: spec.total_user_slots_tu,
            mbs_links_cm: 0,
            uav_links_cu: 0,
            served_ue_ids: Vec::new(),
            band: id.0 % num_bands.max(1),
            alive: true,
        });
        Ok(id)
    }

    pub fn zone_of(&self, p: Position) -> Option<ZoneId> {
        let mbs = self
            .mbs_list
            .iter()
            .filter(|m| distance(m.position, p) <= m.cell_radius)
            .min_by(|a, b| distance(a.position, p).total_cmp(&distance(b.position, p)))?;
        let k = mbs.zones.len();
        let mut angle = libm::atan2(p.y - mbs.position.y, p.x - mbs.position.x);
        if angle < 0.0 {
            angle += 2.0 * PI;
        }
        let width = 2.0 * PI / k as f64;
        let idx = ((angle / width) as usize).min(k - 1);
        Some(mbs.zones[idx])
    }

    pub fn uav(&self, id: UavId) -> &Uav {
        &self.uavs[id.index()]
    }

    pub fn ue(&self, id: UeId) -> &Ue {
        &self.ues[id.index()]
    }

    pub fn zone(&self, id: ZoneId) -> &DemandZone {
        &self.zones[id.index()]
    }

    pub fn mbs_of_zone(&self, id: ZoneId) -> &Mbs {
        &self.mbs_list[self.zones[id.index()].mbs_id.index()]
    }

    pub fn alive_uavs(&self) -> impl Iterator<Item = &Uav> {
        self.uavs.iter().filter(|u| u.alive)
    }

    /// Distance from a UAV to the nearest MBS.
    pub fn uav_mbs_distance(&self, id: UavId) -> f64 {
        let p = self.uavs[id.index()].position;
        self.mbs_list
            .iter()
            .map(|m| distance(m.position, p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn ue_mbs_distance(&self, id: UeId) -> f64 {
        let ue = &self.ues[id.index()];
        distance(self.mbs_of_zone(ue.zone_id).position, ue.position)
    }

    pub fn served_count(&self) -> usize {
        self.ues.iter().filter(|u| u.served_by.is_some()).count()
    }

    /// Whether `node` can take `ue` right now (alive, in range, slot and resources free).
    pub fn can_serve(&self, node: ServingNode, ue: UeId) -> bool {
        let u = &self.ues[ue.index()];
        match node {
            ServingNode::Uav(id) => {
                let uav = &self.uavs[id.index()];
                uav.alive && uav.has_slot() && distance(uav.position, u.position) <= uav.radio_range_g
            }
            ServingNode::Mbs(id) => {
                let m = &self.mbs_list[id.index()];
                (m.served_ue_ids.len() as u32) < m.ue_capacity
            }
        }
    }

    /// Attaches `ue` to `node`, detaching it from any previous server first.
    pub fn attach(&mut self, ue: UeId, node: ServingNode) -> Result<()> {
        if self.ues[ue.index()].served_by == Some(node) {
            return Ok(());
        }
        self.detach(ue);
        if !self.can_serve(node, ue) {
            return Err(Error::Invariant(format!("{node} cannot serve {ue}")));
        }
        match node {
            ServingNode::Uav(id) => {
                let uav = &mut self.uavs[id.index()];
                uav.served_ue_ids.push(ue);
                uav.resources_used += uav.ue_resource_re;
                let re = uav.ue_resource_re;
                self.ues[ue.index()].resources_re = re;
                self.links.push(Link { a: Endpoint::Uav(id), b: Endpoint::Ue(ue), kind: LinkKind::UavUe });
            }
            ServingNode::Mbs(id) => {
                self.mbs_list[id.index()].served_ue_ids.push(ue);
                self.ues[ue.index()].resources_re = 0;
            }
        }
        self.ues[ue.index()].served_by = Some(node);
        Ok(())
    }

    /// Releases `ue` from its server, if any. Returns the former server.
    pub fn detach(&mut self, ue: UeId) -> Option<ServingNode> {
        let prev = self.ues[ue.index()].served_by.take()?;
        match prev {
            ServingNode::Uav(id) => {
                let uav = &mut self.uavs[id.index()];
                uav.served_ue_ids.retain(|&e| e != ue);
                uav.resources_used -= self.ues[ue.index()].resources_re;
                self.links
                    .retain(|l| !(l.kind == LinkKind::UavUe && l.a == Endpoint::Uav(id) && l.b == Endpoint::Ue(ue)));
            }
            ServingNode::Mbs(id) => {
                self.mbs_list[id.index()].served_ue_ids.retain(|&e| e != ue);
            }
        }
        self.ues[ue.index()].resources_re = 0;
        Some(prev)
    }

    pub fn detach_all(&mut self) {
        for i in 0..self.ues.len() {
            self.detach(UeId(i as u32));
        }
    }

    /// Replaces every UAV-UAV and UAV-MBS link and recomputes `C_m`/`C_u`.
    pub fn set_backhaul_links(&mut self, links: &[Link]) -> Result<()> {
        self.links.retain(|l| l.kind == LinkKind::UavUe);
        for uav in &mut self.uavs {
            uav.mbs_links_cm = 0;
            uav.uav_links_cu = 0;
        }
        for &link in links {
            match (link.kind, link.a, link.b) {
                (LinkKind::UavMbs, Endpoint::Uav(u), Endpoint::Mbs(_)) => {
                    self.uavs[u.index()].mbs_links_cm += 1;
                }
                (LinkKind::UavUav, Endpoint::Uav(a), Endpoint::Uav(b)) => {
                    self.uavs[a.index()].uav_links_cu += 1;
                    self.uavs[b.index()].uav_links_cu += 1;
                }
                _ => return Err(Error::Invariant(format!("malformed backhaul link {link:?}"))),
            }
            self.links.push(link);
        }
        Ok(())
    }

    /// Checks every structural invariant: single server per UE, exact resource
    /// sums, slot and link limits, and range soundness of every link.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |msg: alloc::string::String| Err(Error::Invariant(msg));
        let mut seen = alloc::vec![0u32; self.ues.len()];
        for uav in &self.uavs {
            let mut sum = 0u32;
            for &e in &uav.served_ue_ids {
                seen[e.index()] += 1;
                let ue = &self.ues[e.index()];
                if ue.served_by != Some(ServingNode::Uav(uav.id)) {
                    return fail(format!("{e} listed by {} but served_by is {:?}", uav.id, ue.served_by));
                }
                if ue.resources_re == 0 {
                    return fail(format!("{e} served by {} with zero resources", uav.id));
                }
                sum += ue.resources_re;
            }
            if sum != uav.resources_used {
                return fail(format!("{} resource sum {} != recorded {}", uav.id, sum, uav.resources_used));
            }
            if uav.resources_used > uav.resources_rc {
                return fail(format!("{} uses {} > R_c {}", uav.id, uav.resources_used, uav.resources_rc));
            }
            if uav.served_ue_ids.len() as u32 > uav.total_user_slots_tu {
                return fail(format!("{} serves more UEs than T_u", uav.id));
            }
            if uav.mbs_links_cm > self.limits.max_mbs_links || uav.uav_links_cu > self.limits.max_uav_links {
                return fail(format!("{} exceeds link limits (C_m={}, C_u={})", uav.id, uav.mbs_links_cm, uav.uav_links_cu));
            }
        }
        for m in &self.mbs_list {
            for &e in &m.served_ue_ids {
                seen[e.index()] += 1;
                if self.ues[e.index()].served_by != Some(ServingNode::Mbs(m.id)) {
                    return fail(format!("{e} listed by {} but served elsewhere", m.id));
                }
            }
            if m.served_ue_ids.len() as u32 > m.ue_capacity {
                return fail(format!("{} over UE capacity", m.id));
            }
        }
        for ue in &self.ues {
            let expect = u32::from(ue.served_by.is_some());
            if seen[ue.id.index()] != expect {
                return fail(format!("{} appears in {} server lists", ue.id, seen[ue.id.index()]));
            }
        }
        if self.served_count() > self.ues.len() {
            return fail(format!("served count exceeds |E|"));
        }
        for link in &self.links {
            self.check_link_range(link)?;
        }
        Ok(())
    }

    fn endpoint(&self, e: Endpoint) -> (Position, f64) {
        match e {
            Endpoint::Mbs(id) => (self.mbs_list[id.index()].position, self.mbs_list[id.index()].radio_range),
            Endpoint::Uav(id) => (self.uavs[id.index()].position, self.uavs[id.index()].radio_range_g),
            Endpoint::Ue(id) => (self.ues[id.index()].position, f64::INFINITY),
        }
    }

    fn check_link_range(&self, link: &Link) -> Result<()> {
        let (pa, ra) = self.endpoint(link.a);
        let (pb, rb) = self.endpoint(link.b);
        let d = distance(pa, pb);
        let reach = match (link.kind, link.a, link.b) {
            (LinkKind::UavMbs, Endpoint::Mbs(_), _) => ra,
            (LinkKind::UavMbs, _, Endpoint::Mbs(_)) => rb,
            _ => ra.min(rb),
        };
        if d > reach {
            return Err(Error::Invariant(format!("{:?} link {:?}-{:?} spans {d} m", link.kind, link.a, link.b)));
        }
        Ok(())
    }
}

/// Total UEs the UAV fleet can hold: the sum of `floor(R_c / R_e)` over UAVs.
pub fn capacity_headroom(network: &NetworkState) -> Result<u64> {
    let mut total = 0u64;
    for uav in &network.uavs {
        if uav.ue_resource_re == 0 {
            return Err(Error::Domain("R_e of zero makes the UAV capacity unbounded"));
        }
        total += u64::from(uav.resources_rc / uav.ue_resource_re);
    }
    Ok(total)
}

/// Centroid of the annular sector `[start, start + width]` of a disc.
pub fn sector_centroid(center: Position, radius: f64, start: f64, width: f64) -> Position {
    let mid = start + width / 2.0;
    let half = width / 2.0;
    let r = if half >= PI { 0.0 } else { 2.0 * radius * libm::sin(half) / (3.0 * half) };
    Position::new(center.x + r * libm::cos(mid), center.y + r * libm::sin(mid))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limits() -> LinkLimits {
        LinkLimits { max_mbs_links: 5, max_uav_links: 5 }
    }

    fn spec(rc: u32, re: u32) -> UavSpec {
        UavSpec { radio_range_g: 500.0, resources_rc: rc, ue_resource_re: re, total_user_slots_tu: 20 }
    }

    fn small_net() -> NetworkState {
        let mut net = NetworkState::new(Area { width: 4000.0, height: 4000.0 }, limits());
        net.add_mbs(Position::new(2000.0, 2000.0), 1000.0, 1000.0, 12, 5, 3).unwrap();
        net
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(Position::new(0.0, 0.0), Position::new(0.0, 0.0)), 0.0);
        assert_eq!(distance(Position::new(0.0, 0.0), Position::new(3.0, 4.0)), 5.0);
        assert_eq!(distance(Position::new(1.0, 1.0), Position::new(4.0, 5.0)), 5.0);
    }

    #[test]
    fn headroom_examples() {
        let mut net = small_net();
        assert_eq!(capacity_headroom(&net).unwrap(), 0);
        net.add_uav(Position::new(2000.0, 2000.0), spec(10, 2), 2).unwrap();
        assert_eq!(capacity_headroom(&net).unwrap(), 5);
        net.add_uav(Position::new(2000.0, 2000.0), spec(9, 3), 2).unwrap();
        net.add_uav(Position::new(2000.0, 2000.0), spec(7, 7), 2).unwrap();
        assert_eq!(capacity_headroom(&net).unwrap(), 9);
        net.uavs[0].ue_resource_re = 0;
        assert!(capacity_headroom(&net).is_err());
    }

    #[test]
    fn load_balance_examples() {
        let mut net = small_net();
        net.add_uav(Position::new(2000.0, 2000.0), spec(20, 1), 2).unwrap();
        let uav = &mut net.uavs[0];
        uav.total_user_slots_tu = 10;
        uav.mbs_links_cm = 5;
        uav.uav_links_cu = 5;
        assert_eq!(load_balance(uav), 0);
        uav.mbs_links_cm = 2;
        uav.uav_links_cu = 3;
        assert_eq!(load_balance(uav), 5);
        uav.total_user_slots_tu = 4;
        uav.mbs_links_cm = 5;
        uav.uav_links_cu = 0;
        assert_eq!(load_balance(uav), -1);
    }

    #[test]
    fn zones_partition_the_cell() {
        let mut net = small_net();
        assert_eq!(net.zones.len(), 12);
        let east = net.add_ue(Position::new(2500.0, 2001.0), 2.0, 1.0).unwrap();
        let west = net.add_ue(Position::new(1500.0, 1999.0), 2.0, 1.0).unwrap();
        assert_eq!(net.ue(east).zone_id, ZoneId(0));
        assert_eq!(net.ue(west).zone_id, ZoneId(6));
        assert!(net.add_ue(Position::new(10.0, 10.0), 2.0, 1.0).is_err());
        assert_eq!(net.zone(ZoneId(0)).request_rate_lambda, 2.0);
    }

    #[test]
    fn sector_centroid_of_full_disc_is_center() {
        let c = sector_centroid(Position::new(5.0, 5.0), 100.0, 0.0, 2.0 * PI);
        assert!(distance(c, Position::new(5.0, 5.0)) < 1e-9);
    }

    #[test]
    fn attach_detach_keeps_resources_exact() {
        let mut net = small_net();
        let u = net.add_uav(Position::new(2300.0, 2000.0), spec(4, 2), 2).unwrap();
        let a = net.add_ue(Position::new(2400.0, 2000.0), 2.0, 1.0).unwrap();
        let b = net.add_ue(Position::new(2400.0, 2050.0), 2.0, 1.0).unwrap();
        let c = net.add_ue(Position::new(2450.0, 2050.0), 2.0, 1.0).unwrap();
        net.attach(a, ServingNode::Uav(u)).unwrap();
        net.attach(b, ServingNode::Uav(u)).unwrap();
        assert!(net.attach(c, ServingNode::Uav(u)).is_err());
        assert_eq!(net.uav(u).resources_used, 4);
        net.attach(a, ServingNode::Mbs(MbsId(0))).unwrap();
        assert_eq!(net.uav(u).resources_used, 2);
        net.check_invariants().unwrap();
        assert_eq!(net.detach(b), Some(ServingNode::Uav(u)));
        assert_eq!(net.uav(u).resources_used, 0);
        net.check_invariants().unwrap();
    }

    #[test]
    fn out_of_range_attach_rejected() {
        let mut net = small_net();
        let u = net.add_uav(Position::new(2000.0, 2000.0), spec(20, 1), 2).unwrap();
        let far = net.add_ue(Position::new(2900.0, 2000.0), 2.0, 1.0).unwrap();
        assert!(net.attach(far, ServingNode::Uav(u)).is_err());
        assert_eq!(net.ue(far).served_by, None);
    }

    #[test]
    fn mbs_capacity_is_enforced() {
        let mut net = small_net();
        let ues: Vec<_> = (0..4)
            .map(|i| net.add_ue(Position::new(2100.0 + i as f64, 2000.0), 2.0, 1.0).unwrap())
            .collect();
        for &e in &ues[..3] {
            net.attach(e, ServingNode::Mbs(MbsId(0))).unwrap();
        }
        assert!(net.attach(ues[3], ServingNode::Mbs(MbsId(0))).is_err());
        net.check_invariants().unwrap();
    }

    #[test]
    fn backhaul_links_update_counts() {
        let mut net = small_net();
        let a = net.add_uav(Position::new(2300.0, 2000.0), spec(20, 1), 2).unwrap();
        let b = net.add_uav(Position::new(2600.0, 2000.0), spec(20, 1), 2).unwrap();
        net.set_backhaul_links(&[
            Link { a: Endpoint::Uav(a), b: Endpoint::Mbs(MbsId(0)), kind: LinkKind::UavMbs },
            Link { a: Endpoint::Uav(b), b: Endpoint::Uav(a), kind: LinkKind::UavUav },
        ])
        .unwrap();
        assert_eq!((net.uav(a).mbs_links_cm, net.uav(a).uav_links_cu), (1, 1));
        assert_eq!(load_balance(net.uav(b)), 19);
        net.check_invariants().unwrap();
        net.uavs[b.index()].position = Position::new(3200.0, 2000.0);
        assert!(net.check_invariants().is_err());
    }
}
