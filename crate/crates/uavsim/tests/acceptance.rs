#[path = "../../core/tests/common/mod.rs"]
mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};
use uavsim::trace::{parse_trace, to_string};
use uavsim_core::allocation::maximize_likelihood;
use uavsim_core::config::{ScenarioConfig, ScriptedFailure};
use uavsim_core::metrics::{compute_metrics, MetricsReport, METRICS};
use uavsim_core::radio::{data_rate, per_ue_capacity, sinr, LinkGeometry, RadioParams};
use uavsim_core::routing::select_route;
use uavsim_core::sim::{run, run_with_probe};
use uavsim_core::topology::{NetworkState, ServingNode};
use uavsim_core::trace::Record;
use uavsim_core::Error;

type Outcome = Result<String, String>;

fn determinism() -> Outcome {
    let cfg = ScenarioConfig::default();
    let start = Instant::now();
    let a = run(&cfg, 1000, 10, 1).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let b = run(&cfg, 1000, 10, 1).map_err(|e| e.to_string())?;
    let (ta, tb) = (to_string(&a.trace), to_string(&b.trace));
    if ta != tb {
        return Err("traces differ for the same seed".into());
    }
    let csv = |r: &MetricsReport| METRICS.iter().map(|(_, g)| g(r).to_string()).collect::<Vec<_>>().join(",");
    if csv(&a.report) != csv(&b.report) {
        return Err("metrics differ for the same seed".into());
    }
    if elapsed >= Duration::from_secs(5) {
        return Err(format!("run took {elapsed:.2?}"));
    }
    Ok(format!("{} trace lines identical, run {elapsed:.2?}", a.trace.len()))
}

fn routing_oracle() -> Outcome {
    let (mut checked, mut seed, mut mismatches) = (0, 0u64, 0);
    while checked < 100 {
        let t = common::random_topology(seed, 8);
        seed += 1;
        let Some((hops, d)) = common::brute_force_route(&t) else {
            if select_route(t.source, &t.target, &t.table, &t.thresholds, &common::hop_score).is_ok() {
                mismatches += 1;
            }
            continue;
        };
        checked += 1;
        match select_route(t.source, &t.target, &t.table, &t.thresholds, &common::hop_score) {
            Ok(r) if r.hops == hops && common::rel_close(r.total_distance, d, 1e-12) => {}
            _ => mismatches += 1,
        }
    }
    if mismatches > 0 {
        return Err(format!("{mismatches} mismatches over {seed} topologies"));
    }
    Ok(format!("{checked} connected topologies, 0 mismatches"))
}

fn likelihood_oracle() -> Outcome {
    let mut n = 0;
    for seed in 0..500u64 {
        let uavs = (seed % 6 + 1) as u32;
        let zones = (seed % 3 + 1) as usize;
        let models = common::random_models(seed, zones, 10);
        let (n0, value) = maximize_likelihood(&models, uavs).map_err(|e| e.to_string())?;
        let (want_n0, want) = common::brute_force_likelihood(&models, uavs);
        if n0 != want_n0 || !common::rel_close(value, want, 1e-12) {
            return Err(format!("seed {seed}: {n0:?}/{value} vs {want_n0:?}/{want}"));
        }
        n += 1;
    }
    Ok(format!("{n} instances agree"))
}

fn radio_properties() -> Outcome {
    let p = RadioParams::from_db(35.0, -11.0, Some(-104.0), 4.0, 10e6, 4, 1.0).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s = |d: f64, i: &[f64]| sinr(&p, &LinkGeometry { distance_g: d, interferer_distances: i }).unwrap();
    for case in 0..1000 {
        let d = rng.random_range(1.0..5000.0);
        let i: Vec<f64> = (0..rng.random_range(0..4)).map(|_| rng.random_range(1.0..5000.0)).collect();
        if s(d + rng.random_range(1.0..1000.0), &i) > s(d, &i) {
            return Err(format!("case {case}: SINR rose with distance"));
        }
        let mut more = i.clone();
        more.push(rng.random_range(1.0..5000.0));
        if s(d, &more) > s(d, &i) {
            return Err(format!("case {case}: SINR rose with an interferer"));
        }
        let x = rng.random_range(0.0..1e4);
        let h = rng.random_range(1e-3..1e3);
        let r = |v: f64| data_rate(&p, v).unwrap();
        if !(r(x + h) > r(x)) || r(x + h / 2.0) < (r(x) + r(x + h)) / 2.0 - 1e-9 * r(x + h) {
            return Err(format!("case {case}: rate not increasing and concave at {x}"));
        }
        let y = rng.random_range(1..1000);
        let c1 = per_ue_capacity(&p, h, y).unwrap();
        let c2 = per_ue_capacity(&p, h, 2 * y).unwrap();
        if c2 != c1 / 2.0 {
            return Err(format!("case {case}: capacity {c1} -> {c2} when y doubled"));
        }
    }
    Ok("1000 cases per property".into())
}

fn conservation_check(net: &NetworkState) -> Result<(), String> {
    let served = net.ues.iter().filter(|u| u.served_by.is_some()).count();
    if served > net.ues.len() {
        return Err("served count exceeds UE count".into());
    }
    let mut lists = vec![0u32; net.ues.len()];
    for uav in &net.uavs {
        let mut sum = 0;
        for e in &uav.served_ue_ids {
            lists[e.index()] += 1;
            sum += net.ues[e.index()].resources_re;
        }
        if sum != uav.resources_used {
            return Err(format!("{} resource sum {sum} != {}", uav.id, uav.resources_used));
        }
    }
    for m in &net.mbs_list {
        for e in &m.served_ue_ids {
            lists[e.index()] += 1;
        }
    }
    for ue in &net.ues {
        if lists[ue.id.index()] != u32::from(ue.served_by.is_some()) {
            return Err(format!("{} held by {} servers", ue.id, lists[ue.id.index()]));
        }
    }
    Ok(())
}

fn conservation() -> Outcome {
    let mut ticks = 0;
    let mut messages = 0;
    for (e, u, seed) in [(100, 1, 1), (300, 3, 2), (600, 6, 3), (1000, 10, 4)] {
        let mut cfg = ScenarioConfig { horizon: 20.0, ..ScenarioConfig::default() };
        cfg.failures = vec![ScriptedFailure { uav: 0, at: 7.3 }];
        let mut bad = None;
        let out = run_with_probe(&cfg, e, u, seed, &mut |t, net| {
            ticks += 1;
            if bad.is_none() {
                bad = conservation_check(net).err().map(|m| format!("t={t}: {m}"));
            }
        })
        .map_err(|e| e.to_string())?;
        if let Some(m) = bad {
            return Err(m);
        }
        let mut arrived = BTreeMap::new();
        let mut resolved = 0;
        for entry in &out.trace {
            match &entry.record {
                Record::Arrival { msg, .. } => {
                    arrived.insert(*msg, entry.time);
                }
                Record::Deliver { msg, delay, e2e, .. } => {
                    resolved += 1;
                    if *e2e != delay.end_to_end() {
                        return Err(format!("msg {msg}: delay parts do not add up"));
                    }
                    match arrived.get(msg) {
                        Some(&a) if entry.time >= a => {}
                        _ => return Err(format!("msg {msg} delivered before arrival")),
                    }
                }
                Record::Drop { .. } => resolved += 1,
                _ => {}
            }
        }
        if resolved != arrived.len() {
            return Err(format!("{} arrivals but {resolved} outcomes", arrived.len()));
        }
        messages += resolved;
    }
    Ok(format!("{ticks} ticks, {messages} messages"))
}

fn failure_recovery() -> Outcome {
    let mut cfg = ScenarioConfig { horizon: 30.0, standby: 1, ..ScenarioConfig::default() };
    cfg.failures = vec![ScriptedFailure { uav: 0, at: 10.5 }];
    let budget = cfg.launch_delay + 2.0 * cfg.epoch;
    let mut worst: f64 = 0.0;
    for seed in 1..=10 {
        let first = run(&cfg, 300, 3, seed).map_err(|e| e.to_string())?;
        let Some((detected, zones)) = first.trace.iter().find_map(|e| match &e.record {
            Record::Detect { zones, .. } => Some((e.time, zones.clone())),
            _ => None,
        }) else {
            return Err(format!("seed {seed}: failure never detected"));
        };
        let mut regained = BTreeMap::new();
        let mut broken = None;
        run_with_probe(&cfg, 300, 3, seed, &mut |t, net| {
            if let Err(e) = net.check_invariants() {
                broken.get_or_insert(format!("t={t}: {e}"));
            }
            if t < detected {
                return;
            }
            for z in &zones {
                let served = net
                    .ues
                    .iter()
                    .any(|u| u.zone_id == *z && matches!(u.served_by, Some(ServingNode::Uav(_))));
                if served {
                    regained.entry(*z).or_insert(t);
                }
            }
        })
        .map_err(|e| e.to_string())?;
        if let Some(b) = broken {
            return Err(format!("seed {seed}: {b}"));
        }
        for z in &zones {
            match regained.get(z) {
                Some(&t) if t - detected <= budget + 1e-9 => worst = worst.max(t - detected),
                Some(&t) => return Err(format!("seed {seed}: {z} regained after {:.2} s", t - detected)),
                None => return Err(format!("seed {seed}: {z} never regained UAV service")),
            }
        }
    }
    Ok(format!("10/10 seeds, slowest {worst:.2} s (budget {budget} s)"))
}

struct Point {
    axis: u32,
    report: MetricsReport,
    max_iter_ratio: f64,
}

fn sweep(cfg: &ScenarioConfig, points: &[(u32, u32, u32)], seeds: u64) -> Result<Vec<Point>, Error> {
    let jobs: Vec<_> = points.iter().flat_map(|&p| (1..=seeds).map(move |s| (p, s))).collect();
    jobs.into_par_iter()
        .map(|((axis, e, u), seed)| {
            let out = run(cfg, e, u, seed)?;
            let bound = f64::from((cfg.zones_k * u).max(1));
            let max_iter_ratio = out
                .trace
                .iter()
                .filter_map(|t| match t.record {
                    Record::Alloc { iterations, .. } => Some(f64::from(iterations) / bound),
                    _ => None,
                })
                .fold(0.0, f64::max);
            Ok(Point { axis, report: out.report, max_iter_ratio })
        })
        .collect()
}

fn seed_means(points: &[Point], get: fn(&MetricsReport) -> f64) -> Vec<(u32, f64)> {
    let mut acc: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
    for p in points {
        let a = acc.entry(p.axis).or_default();
        a.0 += get(&p.report);
        a.1 += 1.0;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n)).collect()
}

fn monotone(means: &[(u32, f64)], rising: bool, band: impl Fn(f64) -> f64) -> Result<(), String> {
    for w in means.windows(2) {
        let (a, b) = (w[0].1, w[1].1);
        let slip = if rising { a - b } else { b - a };
        if slip > band(a) {
            return Err(format!("{}={a:.3} -> {}={b:.3}", w[0].0, w[1].0));
        }
    }
    Ok(())
}

fn fmt_means(m: &[(u32, f64)]) -> String {
    m.iter().map(|(_, v)| format!("{v:.1}")).collect::<Vec<_>>().join(" ")
}

fn trends(alloc_ratio: &mut f64) -> Outcome {
    let cfg = ScenarioConfig::default();
    let start = Instant::now();
    let ue_points: Vec<_> = cfg.sweep_e.iter().map(|&e| (e, e, cfg.uavs_u.hi)).collect();
    let uav_points: Vec<_> = (cfg.uavs_u.lo..=cfg.uavs_u.hi).map(|u| (u, cfg.ues_e.lo, u)).collect();
    let seeds = u64::from(cfg.seeds);
    let by_ue = sweep(&cfg, &ue_points, seeds).map_err(|e| e.to_string())?;
    let by_uav = sweep(&cfg, &uav_points, seeds).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    *alloc_ratio = by_ue.iter().chain(&by_uav).map(|p| p.max_iter_ratio).fold(0.0, f64::max);

    let cov = seed_means(&by_ue, |m| m.throughput_coverage_pct);
    let util = seed_means(&by_uav, |m| m.link_utilization_pct);
    let rate = seed_means(&by_uav, |m| m.service_dissemination_rate);
    monotone(&cov, false, |_| 2.0).map_err(|e| format!("coverage rose: {e}"))?;
    monotone(&util, true, |_| 2.0).map_err(|e| format!("link utilization fell: {e}"))?;
    monotone(&rate, true, |a| 0.02 * a).map_err(|e| format!("service rate fell: {e}"))?;
    if elapsed >= Duration::from_secs(600) {
        return Err(format!("sweep took {elapsed:.1?}"));
    }
    Ok(format!(
        "coverage [{}] utilization [{}] rate [{}] in {elapsed:.1?}",
        fmt_means(&cov),
        fmt_means(&util),
        fmt_means(&rate)
    ))
}

fn allocation_bound(ratio: f64) -> Outcome {
    if ratio <= 1.0 {
        Ok(format!("max iterations / (K*U) = {ratio:.3} over the trend sweep"))
    } else {
        Err(format!("iterations reached {ratio:.3} x K*U"))
    }
}

fn metrics_oracle() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/traces");
    let mut n = 0;
    for entry in fs::read_dir(&dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let text = fs::read_to_string(&path).map_err(|e| e.to_string())?;
        let report = compute_metrics(&parse_trace(&text).map_err(|e| e.to_string())?);
        let want = common::metrics_from_text(&text).ok_or("trace has no run header")?;
        for ((name, get), w) in METRICS.iter().zip(want) {
            if !common::rel_close(get(&report), w, 1e-9) {
                return Err(format!("{}: {name} {} vs {w}", path.display(), get(&report)));
            }
        }
        n += 1;
    }
    if n != 20 {
        return Err(format!("expected 20 stored traces, found {n}"));
    }
    Ok("9 metrics on 20 stored traces".into())
}

fn main() -> ExitCode {
    let mut alloc_ratio = f64::INFINITY;
    let trend = trends(&mut alloc_ratio);
    let results: [(&str, Outcome); 9] = [
        ("determinism", determinism()),
        ("routing-oracle", routing_oracle()),
        ("likelihood-oracle", likelihood_oracle()),
        ("radio-properties", radio_properties()),
        ("conservation", conservation()),
        ("failure-recovery", failure_recovery()),
        ("trend-reproduction", trend),
        ("allocation-bound", allocation_bound(alloc_ratio)),
        ("metrics-oracle", metrics_oracle()),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
