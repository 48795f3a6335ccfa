//! The line-oriented instance file format (version 1).
//!
//! ```text
//! # comments run to the end of the line
//! [horizon]
//! periods = 11              # required
//! period_minutes = 15       # optional, reporting only
//! max_ground_hold = 3       # used to derive missing windows (default 0)
//! max_air_hold = 2          # (default 0)
//! allow_early = 0           # (default 0)
//!
//! [sectors]
//! Mumbai Pune Goa           # whitespace separated, any number of lines
//!
//! [flights]
//! Mu_Pu_Go path=Mumbai>Pune>Goa dep=1 arr=3 turn=1 cg=600 ca=900 transit=1,1
//!
//! [capacities]
//! Goa 1..11 D=* A=1 S=*     # `*` = unbounded; omitted keys stay as before
//!
//! [continuations]
//! Mu_Pu_Go > Go_Ca
//!
//! [windows]                 # optional explicit windows, never overwritten
//! Go_Ca Goa 4..9
//! ```
//!
//! `arr` defaults to `dep` plus the summed transit times and `turn` to 0.
//! Costs accept integers, decimals (`12.5`) and fractions (`25/2`).

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::model::{
    Capacity, CapacityEntry, CapacityProfile, Continuation, Flight, HoldAllowance, Instance, SectorId, Time, Window,
};
use crate::system::Rational;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    Horizon,
    Sectors,
    Flights,
    Capacities,
    Continuations,
    Windows,
}

/// A whitespace-delimited token with its 1-based column.
struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokens(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token { text: &line[s..i], column: line[..s].chars().count() + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token { text: &line[s..], column: line[..s].chars().count() + 1 });
    }
    out
}

struct Ctx {
    line: usize,
}

impl Ctx {
    fn err(&self, column: usize, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, column, message: message.into() }
    }

    fn int<T: std::str::FromStr>(&self, tok: &str, column: usize, what: &str) -> Result<T, ParseError> {
        tok.parse().map_err(|_| self.err(column, format!("invalid {what} `{tok}`")))
    }

    fn capacity(&self, tok: &str, column: usize) -> Result<Capacity, ParseError> {
        if tok == "*" {
            Ok(Capacity::Unbounded)
        } else {
            Ok(Capacity::Limited(self.int(tok, column, "capacity")?))
        }
    }

    fn range(&self, tok: &str, column: usize) -> Result<(Time, Time), ParseError> {
        match tok.split_once("..") {
            Some((a, b)) => Ok((self.int(a, column, "time")?, self.int(b, column, "time")?)),
            None => {
                let t = self.int(tok, column, "time")?;
                Ok((t, t))
            }
        }
    }
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    if let Some((n, d)) = s.split_once('/') {
        let d: i64 = d.parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Rational::new(n.parse().ok()?, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 12 {
            return None;
        }
        let negative = int.starts_with('-');
        let whole: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().ok()? };
        let denom = 10i64.pow(frac.len() as u32);
        let part: i64 = frac.parse().ok()?;
        let magnitude = Rational::from_integer(whole.abs()) + Rational::new(part, denom);
        return Some(if negative { -magnitude } else { magnitude });
    }
    s.parse().ok().map(Rational::from_integer)
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses an instance from text. Windows not given explicitly stay `None`.
pub fn parse_instance_str(text: &str) -> Result<Instance, ParseError> {
    let mut section: Option<Section> = None;
    let mut seen_horizon = false;
    let mut horizon: Option<Time> = None;
    let mut period_minutes = None;
    let mut holds = HoldAllowance::default();
    let mut sectors = Vec::new();
    let mut flights: Vec<Flight> = Vec::new();
    let mut capacities = CapacityProfile::default();
    let mut continuations = Vec::new();
    let mut windows: Vec<(usize, String, usize, String, usize, Window)> = Vec::new();
    let mut horizon_line = 1;

    for (idx, raw_line) in text.lines().enumerate() {
        let ctx = Ctx { line: idx + 1 };
        let line = raw_line.split('#').next().unwrap_or("");
        let toks = tokens(line);
        let Some(first) = toks.first() else { continue };

        if first.text.starts_with('[') {
            let name = line.trim();
            section = Some(match name {
                "[horizon]" => {
                    seen_horizon = true;
                    horizon_line = ctx.line;
                    Section::Horizon
                }
                "[sectors]" => Section::Sectors,
                "[flights]" => Section::Flights,
                "[capacities]" => Section::Capacities,
                "[continuations]" => Section::Continuations,
                "[windows]" => Section::Windows,
                _ => return Err(ctx.err(first.column, format!("unknown section {name}"))),
            });
            continue;
        }
        let Some(sec) = section else {
            return Err(ctx.err(first.column, "content before the first section header"));
        };
        match sec {
            Section::Horizon => {
                let (key, value, vcol) = match toks.as_slice() {
                    [k, eq, v] if eq.text == "=" => (k.text, v.text, v.column),
                    [kv] if kv.text.contains('=') => {
                        let (k, v) = kv.text.split_once('=').unwrap();
                        (k, v, kv.column + k.len() + 1)
                    }
                    _ => return Err(ctx.err(first.column, "expected `key = value`")),
                };
                match key {
                    "periods" => horizon = Some(ctx.int(value, vcol, "horizon")?),
                    "period_minutes" => period_minutes = Some(ctx.int(value, vcol, "period length")?),
                    "max_ground_hold" => holds.max_ground_hold = ctx.int(value, vcol, "hold")?,
                    "max_air_hold" => holds.max_air_hold = ctx.int(value, vcol, "hold")?,
                    "allow_early" => holds.allow_early = ctx.int(value, vcol, "early allowance")?,
                    "version" => {
                        let v: u32 = ctx.int(value, vcol, "version")?;
                        if v != FORMAT_VERSION {
                            return Err(ctx.err(vcol, format!("unsupported format version {v}")));
                        }
                    }
                    _ => return Err(ctx.err(first.column, format!("unknown horizon key `{key}`"))),
                }
            }
            Section::Sectors => sectors.extend(toks.iter().map(|t| SectorId::new(t.text))),
            Section::Flights => flights.push(parse_flight(&ctx, &toks)?),
            Section::Capacities => {
                let [sector, range, keys @ ..] = toks.as_slice() else {
                    return Err(ctx.err(first.column, "expected `sector from..to [D=..] [A=..] [S=..]`"));
                };
                let (from, to) = ctx.range(range.text, range.column)?;
                let mut entry = CapacityEntry {
                    sector: SectorId::new(sector.text),
                    from,
                    to,
                    departure: None,
                    arrival: None,
                    occupancy: None,
                };
                for kv in keys {
                    let Some((k, v)) = kv.text.split_once('=') else {
                        return Err(ctx.err(kv.column, format!("expected key=value, got `{}`", kv.text)));
                    };
                    let cap = ctx.capacity(v, kv.column + k.len() + 1)?;
                    match k {
                        "D" => entry.departure = Some(cap),
                        "A" => entry.arrival = Some(cap),
                        "S" => entry.occupancy = Some(cap),
                        _ => return Err(ctx.err(kv.column, format!("unknown capacity key `{k}`"))),
                    }
                }
                capacities.entries.push(entry);
            }
            Section::Continuations => match toks.as_slice() {
                [a, arrow, b] if arrow.text == ">" => {
                    continuations.push(Continuation { from: a.text.into(), to: b.text.into() })
                }
                _ => return Err(ctx.err(first.column, "expected `from_flight > to_flight`")),
            },
            Section::Windows => {
                let [f, s, r] = toks.as_slice() else {
                    return Err(ctx.err(first.column, "expected `flight sector from..to`"));
                };
                let (a, b) = ctx.range(r.text, r.column)?;
                windows.push((ctx.line, f.text.into(), f.column, s.text.into(), s.column, Window::new(a, b)));
            }
        }
    }

    if !seen_horizon {
        return Err(ParseError { line: 1, column: 1, message: "missing [horizon] section".into() });
    }
    let Some(horizon) = horizon else {
        return Err(ParseError { line: horizon_line, column: 1, message: "missing `periods` in [horizon]".into() });
    };

    for (line, fid, fcol, sid, scol, w) in windows {
        let ctx = Ctx { line };
        let Some(f) = flights.iter_mut().find(|f| f.id == fid) else {
            return Err(ctx.err(fcol, format!("window for unknown flight {fid}")));
        };
        let Some(pos) = f.path.iter().position(|s| s.as_str() == sid) else {
            return Err(ctx.err(scol, format!("sector {sid} is not on the path of {fid}")));
        };
        f.windows[pos] = Some(w);
    }

    Ok(Instance { horizon, period_minutes, holds, sectors, flights, capacities, continuations })
}

fn parse_flight(ctx: &Ctx, toks: &[Token<'_>]) -> Result<Flight, ParseError> {
    let id = toks[0].text.to_string();
    let mut path = None;
    let mut dep = None;
    let mut arr = None;
    let mut turn = 0u32;
    let mut cg = None;
    let mut ca = None;
    let mut transit = None;
    for kv in &toks[1..] {
        let Some((k, v)) = kv.text.split_once('=') else {
            return Err(ctx.err(kv.column, format!("expected key=value, got `{}`", kv.text)));
        };
        let vcol = kv.column + k.len() + 1;
        match k {
            "path" => path = Some(v.split('>').map(SectorId::new).collect::<Vec<_>>()),
            "dep" => dep = Some(ctx.int::<Time>(v, vcol, "departure time")?),
            "arr" => arr = Some(ctx.int::<Time>(v, vcol, "arrival time")?),
            "turn" => turn = ctx.int(v, vcol, "turnaround")?,
            "cg" => cg = Some(parse_rational(v).ok_or_else(|| ctx.err(vcol, format!("invalid cost `{v}`")))?),
            "ca" => ca = Some(parse_rational(v).ok_or_else(|| ctx.err(vcol, format!("invalid cost `{v}`")))?),
            "transit" => {
                let mut ls = Vec::new();
                for part in v.split(',') {
                    ls.push(ctx.int::<u32>(part, vcol, "transit time")?);
                }
                transit = Some(ls);
            }
            _ => return Err(ctx.err(kv.column, format!("unknown flight key `{k}`"))),
        }
    }
    let col = toks[0].column;
    let missing = |key: &str| ctx.err(col, format!("flight {id} is missing `{key}`"));
    let path = path.ok_or_else(|| missing("path"))?;
    let dep = dep.ok_or_else(|| missing("dep"))?;
    let transit_times = transit.ok_or_else(|| missing("transit"))?;
    let ground_cost = cg.ok_or_else(|| missing("cg"))?;
    let air_cost = ca.ok_or_else(|| missing("ca"))?;
    let arr = arr.unwrap_or(dep + transit_times.iter().map(|&l| l as Time).sum::<Time>());
    let n = path.len();
    Ok(Flight {
        id,
        path,
        scheduled_departure: dep,
        scheduled_arrival: arr,
        turnaround: turn,
        ground_cost,
        air_cost,
        transit_times,
        windows: vec![None; n],
    })
}

fn write_capacity(out: &mut String, key: &str, cap: Option<Capacity>) -> fmt::Result {
    match cap {
        None => Ok(()),
        Some(Capacity::Unbounded) => write!(out, " {key}=*"),
        Some(Capacity::Limited(c)) => write!(out, " {key}={c}"),
    }
}

/// Writes the instance in the format [`parse_instance_str`] reads back.
pub fn emit_instance(inst: &Instance) -> String {
    let mut out = String::new();
    emit_into(&mut out, inst).expect("writing to a String cannot fail");
    out
}

fn emit_into(out: &mut String, inst: &Instance) -> fmt::Result {
    writeln!(out, "[horizon]")?;
    writeln!(out, "version = {FORMAT_VERSION}")?;
    writeln!(out, "periods = {}", inst.horizon)?;
    if let Some(p) = inst.period_minutes {
        writeln!(out, "period_minutes = {p}")?;
    }
    writeln!(out, "max_ground_hold = {}", inst.holds.max_ground_hold)?;
    writeln!(out, "max_air_hold = {}", inst.holds.max_air_hold)?;
    writeln!(out, "allow_early = {}", inst.holds.allow_early)?;

    writeln!(out, "\n[sectors]")?;
    for s in &inst.sectors {
        writeln!(out, "{s}")?;
    }

    writeln!(out, "\n[flights]")?;
    for f in &inst.flights {
        let path: Vec<&str> = f.path.iter().map(|s| s.as_str()).collect();
        let transit: Vec<String> = f.transit_times.iter().map(|l| l.to_string()).collect();
        writeln!(
            out,
            "{} path={} dep={} arr={} turn={} cg={} ca={} transit={}",
            f.id,
            path.join(">"),
            f.scheduled_departure,
            f.scheduled_arrival,
            f.turnaround,
            format_rational(&f.ground_cost),
            format_rational(&f.air_cost),
            transit.join(",")
        )?;
    }

    if !inst.capacities.entries.is_empty() {
        writeln!(out, "\n[capacities]")?;
        for e in &inst.capacities.entries {
            write!(out, "{} {}..{}", e.sector, e.from, e.to)?;
            write_capacity(out, "D", e.departure)?;
            write_capacity(out, "A", e.arrival)?;
            write_capacity(out, "S", e.occupancy)?;
            writeln!(out)?;
        }
    }

    if !inst.continuations.is_empty() {
        writeln!(out, "\n[continuations]")?;
        for c in &inst.continuations {
            writeln!(out, "{} > {}", c.from, c.to)?;
        }
    }

    let windows: Vec<_> = inst
        .flights
        .iter()
        .flat_map(|f| f.path.iter().zip(&f.windows).filter_map(move |(s, w)| w.map(|w| (f, s, w))))
        .collect();
    if !windows.is_empty() {
        writeln!(out, "\n[windows]")?;
        for (f, s, w) in windows {
            writeln!(out, "{} {} {}..{}", f.id, s, w.first, w.last)?;
        }
    }
    Ok(())
}
