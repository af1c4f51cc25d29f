//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the code under test beyond the
//! plain data types it builds.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use uavsim_core::allocation::HandlingModel;
use uavsim_core::routing::{QosThresholds, RouteEntry, RouteScore, RouteTable, RouteTarget};
use uavsim_core::topology::{Position, UavId};

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn dist(a: Position, b: Position) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

pub struct Topology {
    pub source: UavId,
    pub target: RouteTarget,
    pub table: RouteTable,
    pub thresholds: QosThresholds,
}

/// Random relay topology with at most `max_uavs` UAVs.
pub fn random_topology(seed: u64, max_uavs: u32) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_uavs);
    let side = rng.random_range(800.0..2000.0);
    let entries: Vec<RouteEntry> = (0..n)
        .map(|i| RouteEntry {
            uav_id: UavId(i),
            radio_range_g: rng.random_range(400.0..900.0),
            intensity_eta: 0.0,
            load_balance_lb: rng.random_range(-3..6),
            reliability_nr: rng.random_range(0.0..1.0),
            position: Position::new(rng.random_range(0.0..side), rng.random_range(0.0..side)),
            refreshed_at: 0.0,
        })
        .collect();
    let mut gateways = BTreeSet::new();
    for i in 0..n {
        if rng.random_bool(0.3) {
            gateways.insert(UavId(i));
        }
    }
    Topology {
        source: UavId(rng.random_range(0..n)),
        target: RouteTarget { position: Position::new(side / 2.0, side / 2.0), gateways },
        table: entries.into_iter().collect(),
        thresholds: QosThresholds { nr_th: rng.random_range(0.3..1.0), cf_th: 0.0, lh_th: 0.0 },
    }
}

pub fn hop_score(hops: &[UavId]) -> RouteScore {
    RouteScore { nr: 1.0 / hops.len() as f64, cf: 0.0, lh: 0.0 }
}

/// Best route by exhaustive search over simple paths: smallest total distance,
/// then fewer hops, then the lexicographically smaller hop list.
pub fn brute_force_route(t: &Topology) -> Option<(Vec<UavId>, f64)> {
    let nodes: Vec<&RouteEntry> = t
        .table
        .entries()
        .filter(|e| e.uav_id == t.source || e.reliability_nr <= t.thresholds.nr_th)
        .collect();
    let src = nodes.iter().position(|e| e.uav_id == t.source)?;
    let mut best: Option<(Vec<UavId>, f64)> = None;
    let mut path = vec![src];
    walk(t, &nodes, &mut path, 0.0, &mut best);
    best
}

fn better(a: &(Vec<UavId>, f64), b: &(Vec<UavId>, f64)) -> bool {
    match a.1.total_cmp(&b.1) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => (a.0.len(), &a.0) < (b.0.len(), &b.0),
    }
}

fn walk(t: &Topology, nodes: &[&RouteEntry], path: &mut Vec<usize>, d: f64, best: &mut Option<(Vec<UavId>, f64)>) {
    let last = nodes[*path.last().unwrap()];
    if t.target.gateways.contains(&last.uav_id) {
        let cand = (path.iter().map(|&i| nodes[i].uav_id).collect(), d + dist(last.position, t.target.position));
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            *best = Some(cand);
        }
    }
    for (i, e) in nodes.iter().enumerate() {
        if path.contains(&i) {
            continue;
        }
        let leg = dist(last.position, e.position);
        if leg > last.radio_range_g.min(e.radio_range_g) {
            continue;
        }
        path.push(i);
        walk(t, nodes, path, d + leg, best);
        path.pop();
    }
}

/// Random handling models for `zones` zones with at most `max_ues` UEs each.
pub fn random_models(seed: u64, zones: usize, max_ues: u32) -> Vec<HandlingModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..zones)
        .map(|_| {
            let total = rng.random_range(1..=max_ues);
            let e1 = rng.random_range(0..=total);
            let e2 = rng.random_range(0..=total - e1);
            HandlingModel { handled_by_uav_e1: e1, handled_by_mbs_e2: e2, total_ues: total, allocated_uavs_n0: 0 }
        })
        .collect()
}

pub fn likelihood_oracle(models: &[HandlingModel], n0: &[u32], uavs: u32) -> f64 {
    models
        .iter()
        .zip(n0)
        .map(|(m, &k)| {
            let pr = f64::from(m.handled_by_uav_e1 + m.handled_by_mbs_e2) / f64::from(m.total_ues);
            let per_ue = pr.powi(k as i32) * (1.0 - pr).powi((uavs - k) as i32);
            per_ue.powi(m.total_ues as i32)
        })
        .product()
}

/// Exhaustive argmax over every per-zone assignment in lexicographic order.
/// Values within `1e-12` relative count as ties and keep the earlier vector.
pub fn brute_force_likelihood(models: &[HandlingModel], uavs: u32) -> (Vec<u32>, f64) {
    let mut cur = vec![0u32; models.len()];
    let mut best = (cur.clone(), likelihood_oracle(models, &cur, uavs));
    loop {
        let mut i = models.len();
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if cur[i] < uavs {
                cur[i] += 1;
                for c in &mut cur[i + 1..] {
                    *c = 0;
                }
                break;
            }
        }
        let v = likelihood_oracle(models, &cur, uavs);
        if v > best.1 && !rel_close(v, best.1, 1e-12) {
            best = (cur.clone(), v);
        }
    }
}

/// Metrics recomputed straight from the text form of a trace, in CSV order.
pub fn metrics_from_text(text: &str) -> Option<[f64; 9]> {
    let mut horizon = None;
    let mut sinr_th = f64::INFINITY;
    let mut rate_th = f64::INFINITY;
    let mut assoc = 0.0;
    let mut covered = 0.0;
    let mut sir_ok = 0.0;
    let mut uav_assoc = 0.0;
    let mut uav_ok = 0.0;
    let mut generated = 0.0;
    let mut delays = Vec::new();
    let mut via_uav = 0.0;
    let mut utils = Vec::new();
    let mut acq = Vec::new();
    let mut iterations = 0.0;
    let num = |s: &str| s.parse::<f64>().unwrap();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        match f[1] {
            "run" => horizon = Some(num(f[3])),
            "thresholds" => {
                sinr_th = num(f[2]);
                rate_th = num(f[3]);
            }
            "arrival" => generated += 1.0,
            "deliver" => {
                delays.push(num(f[9]));
                if f[4].starts_with('u') {
                    via_uav += 1.0;
                }
            }
            "epoch" => {
                let total = num(f[5]);
                utils.push(if total > 0.0 { num(f[4]) / total } else { 0.0 });
            }
            "alloc" => iterations += num(f[2]),
            "assoc" => {
                assoc += 1.0;
                let (sinr, cap) = (num(f[4]), num(f[5]));
                if f[3] != "-" {
                    covered += f64::from(u8::from(cap >= rate_th));
                    sir_ok += f64::from(u8::from(sinr >= sinr_th));
                }
                if f[3].starts_with('u') {
                    uav_assoc += 1.0;
                    uav_ok += f64::from(u8::from(cap >= rate_th));
                }
            }
            "route" => acq.push(num(f[4]) - num(f[3])),
            _ => {}
        }
    }
    let horizon = horizon?;
    let frac = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    let mean = |v: &[f64]| frac(v.iter().sum(), v.len() as f64);
    Some([
        100.0 * frac(covered, assoc),
        iterations,
        100.0 * frac(sir_ok, assoc),
        frac(uav_ok, uav_assoc),
        100.0 * frac(delays.len() as f64, generated),
        mean(&delays),
        100.0 * mean(&utils),
        via_uav / horizon,
        mean(&acq),
    ])
}
