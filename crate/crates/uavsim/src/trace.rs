//! Line-delimited text form of a run trace: `time,kind,fields...`.
//!
//! Floats are written in shortest round-trip form, so reading a written trace
//! gives back the same records bit for bit. Lists use `;` as separator and an
//! unserved association writes `-` as its node.

use std::fmt::Write as _;
use std::io::{self, Write};
use thiserror::Error;
use uavsim_core::topology::{MbsId, ServingNode, UavId, UeId, ZoneId};
use uavsim_core::trace::{DelayBreakdown, DropReason, Record, Trace, TraceEntry};

#[derive(Debug, Error)]
#[error("trace line {line}: {reason}")]
pub struct TraceError {
    pub line: usize,
    pub reason: String,
}

fn node(n: ServingNode) -> String {
    n.to_string()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

pub fn format_entry(e: &TraceEntry) -> String {
    let mut s = format!("{},{}", e.time, e.record.kind());
    let _ = match &e.record {
        Record::Run { seed, horizon, ue_count, uav_count, bands } => {
            write!(s, ",{seed},{horizon},{ue_count},{uav_count},{bands}")
        }
        Record::Thresholds { sinr, rate, nr, cf, lh } => write!(s, ",{sinr},{rate},{nr},{cf},{lh}"),
        Record::Arrival { msg, ue, size_bits } => write!(s, ",{msg},{ue},{size_bits}"),
        Record::Deliver { msg, ue, node: n, delay, e2e } => write!(
            s,
            ",{msg},{ue},{},{},{},{},{},{e2e}",
            node(*n),
            delay.transmission,
            delay.propagation,
            delay.processing,
            delay.queuing
        ),
        Record::Drop { msg, ue, reason } => write!(s, ",{msg},{ue},{}", reason.as_str()),
        Record::Hello { responders } => write!(s, ",{responders}"),
        Record::Fail { uav } => write!(s, ",{uav}"),
        Record::Detect { uav, zones } => write!(s, ",{uav},{}", join(zones)),
        Record::Launch { uav, zone } => write!(s, ",{uav},{zone}"),
        Record::Epoch { index, active_uavs, bands_used, bands_total } => {
            write!(s, ",{index},{active_uavs},{bands_used},{bands_total}")
        }
        Record::Alloc { iterations, mapped, mismatched } => write!(s, ",{iterations},{mapped},{mismatched}"),
        Record::Assoc { ue, node: n, sinr, capacity } => {
            write!(s, ",{ue},{},{sinr},{capacity}", n.map_or("-".to_string(), node))
        }
        Record::Route { uav, requested, acquired, hops } => write!(s, ",{uav},{requested},{acquired},{}", join(hops)),
        Record::RouteFail { uav } => write!(s, ",{uav}"),
    };
    s
}

pub fn write_trace<W: Write>(trace: &[TraceEntry], mut out: W) -> io::Result<()> {
    for e in trace {
        writeln!(out, "{}", format_entry(e))?;
    }
    out.flush()
}

pub fn to_string(trace: &[TraceEntry]) -> String {
    let mut s = String::new();
    for e in trace {
        s.push_str(&format_entry(e));
        s.push('\n');
    }
    s
}

struct Fields<'a> {
    parts: std::str::Split<'a, char>,
}

impl<'a> Fields<'a> {
    fn next(&mut self) -> Result<&'a str, String> {
        self.parts.next().ok_or_else(|| "missing field".to_string())
    }

    fn num<T: std::str::FromStr>(&mut self) -> Result<T, String> {
        let f = self.next()?;
        f.parse().map_err(|_| format!("bad number `{f}`"))
    }

    fn id(&mut self, prefix: char) -> Result<u32, String> {
        let f = self.next()?;
        parse_id(f, prefix)
    }

    fn ids(&mut self, prefix: char) -> Result<Vec<u32>, String> {
        let f = self.next()?;
        if f.is_empty() {
            return Ok(Vec::new());
        }
        f.split(';').map(|p| parse_id(p, prefix)).collect()
    }

    fn node(&mut self) -> Result<Option<ServingNode>, String> {
        let f = self.next()?;
        if f == "-" {
            return Ok(None);
        }
        match f.chars().next() {
            Some('m') => Ok(Some(ServingNode::Mbs(MbsId(parse_id(f, 'm')?)))),
            Some('u') => Ok(Some(ServingNode::Uav(UavId(parse_id(f, 'u')?)))),
            _ => Err(format!("bad node `{f}`")),
        }
    }

    fn done(&mut self) -> Result<(), String> {
        match self.parts.next() {
            None => Ok(()),
            Some(extra) => Err(format!("unexpected field `{extra}`")),
        }
    }
}

fn parse_id(f: &str, prefix: char) -> Result<u32, String> {
    f.strip_prefix(prefix)
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| format!("expected `{prefix}<n>`, got `{f}`"))
}

pub fn parse_entry(line: &str) -> Result<TraceEntry, String> {
    let mut f = Fields { parts: line.split(',') };
    let time: f64 = f.num()?;
    let kind = f.next()?;
    let record = match kind {
        "run" => Record::Run {
            seed: f.num()?,
            horizon: f.num()?,
            ue_count: f.num()?,
            uav_count: f.num()?,
            bands: f.num()?,
        },
        "thresholds" => Record::Thresholds { sinr: f.num()?, rate: f.num()?, nr: f.num()?, cf: f.num()?, lh: f.num()? },
        "arrival" => Record::Arrival { msg: f.num()?, ue: UeId(f.id('e')?), size_bits: f.num()? },
        "deliver" => {
            let msg = f.num()?;
            let ue = UeId(f.id('e')?);
            let n = f.node()?.ok_or("deliver without node")?;
            let delay = DelayBreakdown {
                transmission: f.num()?,
                propagation: f.num()?,
                processing: f.num()?,
                queuing: f.num()?,
            };
            Record::Deliver { msg, ue, node: n, delay, e2e: f.num()? }
        }
        "drop" => {
            let msg = f.num()?;
            let ue = UeId(f.id('e')?);
            let r = f.next()?;
            Record::Drop { msg, ue, reason: DropReason::parse(r).ok_or_else(|| format!("bad drop reason `{r}`"))? }
        }
        "hello" => Record::Hello { responders: f.num()? },
        "fail" => Record::Fail { uav: UavId(f.id('u')?) },
        "detect" => Record::Detect {
            uav: UavId(f.id('u')?),
            zones: f.ids('z')?.into_iter().map(ZoneId).collect(),
        },
        "launch" => Record::Launch { uav: UavId(f.id('u')?), zone: ZoneId(f.id('z')?) },
        "epoch" => Record::Epoch {
            index: f.num()?,
            active_uavs: f.num()?,
            bands_used: f.num()?,
            bands_total: f.num()?,
        },
        "alloc" => Record::Alloc { iterations: f.num()?, mapped: f.num()?, mismatched: f.num()? },
        "assoc" => Record::Assoc { ue: UeId(f.id('e')?), node: f.node()?, sinr: f.num()?, capacity: f.num()? },
        "route" => Record::Route {
            uav: UavId(f.id('u')?),
            requested: f.num()?,
            acquired: f.num()?,
            hops: f.ids('u')?.into_iter().map(UavId).collect(),
        },
        "route_fail" => Record::RouteFail { uav: UavId(f.id('u')?) },
        other => return Err(format!("unknown record kind `{other}`")),
    };
    f.done()?;
    Ok(TraceEntry { time, record })
}

pub fn parse_trace(text: &str) -> Result<Trace, TraceError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| parse_entry(l).map_err(|reason| TraceError { line: i + 1, reason }))
        .collect()
}
