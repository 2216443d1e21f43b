//! Line-oriented net-definition files.
//!
//! ```text
//! net dual-diamond
//! capacity 1
//! place a.idle alice epi state
//! place ping shared ont frame:alice
//! transition a.offer alice in a.idle:1 own.none:1 out a.offer:1 own.a:1
//! initial a.idle:1 own.none:1
//! mirror place a.idle b.idle
//! mirror transition a.offer b.offer
//! ```
//!
//! Blank lines and `#` comments are ignored. `print_net` is canonical and
//! `parse_net(&print_net(n)) == n`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::agent::Agent;

use super::net::{
    Marking, Owner, OwnershipPattern, PetriNet, Place, PlaceId, PlaceKind, PlaceRole, Transition, TransitionId,
};
use super::PetriError;

fn owner_str(o: Owner) -> &'static str {
    match o {
        Owner::Agent(a) => a.as_str(),
        Owner::Shared => "shared",
    }
}

fn role_str(r: PlaceRole) -> String {
    match r {
        PlaceRole::State => "state".into(),
        PlaceRole::Frame { sender } => format!("frame:{sender}"),
        PlaceRole::Channel => "channel".into(),
        PlaceRole::Ownership(pat) => format!("own:{pat}"),
    }
}

fn arcs_str(arcs: &BTreeMap<PlaceId, u32>) -> String {
    arcs.iter().map(|(p, n)| format!("{p}:{n}")).collect::<Vec<_>>().join(" ")
}

pub fn print_net(net: &PetriNet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "net {}", net.name);
    let _ = writeln!(out, "capacity {}", net.capacity);
    for p in &net.places {
        let kind = match p.kind {
            PlaceKind::Epi => "epi",
            PlaceKind::Ont => "ont",
        };
        let _ = writeln!(out, "place {} {} {kind} {}", p.id, owner_str(p.owner), role_str(p.role));
    }
    for t in &net.transitions {
        let _ = writeln!(
            out,
            "transition {} {} in {} out {}",
            t.id,
            t.controller,
            arcs_str(&t.inputs),
            arcs_str(&t.outputs)
        );
    }
    let marked: BTreeMap<PlaceId, u32> =
        net.initial.0.iter().filter(|(_, &n)| n > 0).map(|(p, &n)| (p.clone(), n)).collect();
    let _ = writeln!(out, "initial {}", arcs_str(&marked));
    for (a, b) in &net.mirror_places {
        let _ = writeln!(out, "mirror place {a} {b}");
    }
    for (a, b) in &net.mirror_transitions {
        let _ = writeln!(out, "mirror transition {a} {b}");
    }
    out
}

fn err(line: usize, msg: impl Into<String>) -> PetriError {
    PetriError::Parse { line, msg: msg.into() }
}

fn parse_agent(line: usize, s: &str) -> Result<Agent, PetriError> {
    match s {
        "alice" => Ok(Agent::Alice),
        "bob" => Ok(Agent::Bob),
        _ => Err(err(line, format!("expected alice or bob, got `{s}`"))),
    }
}

fn parse_role(line: usize, s: &str) -> Result<PlaceRole, PetriError> {
    if s == "state" {
        return Ok(PlaceRole::State);
    }
    if s == "channel" {
        return Ok(PlaceRole::Channel);
    }
    if let Some(a) = s.strip_prefix("frame:") {
        return Ok(PlaceRole::Frame { sender: parse_agent(line, a)? });
    }
    if let Some(pat) = s.strip_prefix("own:") {
        let b: Vec<char> = pat.chars().collect();
        let cell = |c: char| match c {
            'M' => Ok(true),
            '_' => Ok(false),
            _ => Err(err(line, format!("bad ownership pattern `{pat}`"))),
        };
        if b.len() != 2 {
            return Err(err(line, format!("bad ownership pattern `{pat}`")));
        }
        return Ok(PlaceRole::Ownership(OwnershipPattern { alice: cell(b[0])?, bob: cell(b[1])? }));
    }
    Err(err(line, format!("unknown role `{s}`")))
}

fn parse_arc(line: usize, s: &str) -> Result<(PlaceId, u32), PetriError> {
    let (p, n) = s.rsplit_once(':').ok_or_else(|| err(line, format!("arc `{s}` needs place:count")))?;
    let n: u32 = n.parse().map_err(|_| err(line, format!("bad multiplicity in `{s}`")))?;
    Ok((PlaceId::from(p), n))
}

fn parse_arcs(line: usize, toks: &[&str]) -> Result<BTreeMap<PlaceId, u32>, PetriError> {
    let mut out = BTreeMap::new();
    for t in toks {
        let (p, n) = parse_arc(line, t)?;
        if out.insert(p.clone(), n).is_some() {
            return Err(err(line, format!("place `{p}` listed twice")));
        }
    }
    Ok(out)
}

pub fn parse_net(text: &str) -> Result<PetriNet, PetriError> {
    let mut name = None;
    let mut capacity = None;
    let mut places = Vec::new();
    let mut transitions = Vec::new();
    let mut initial = None;
    let mut mirror_places = Vec::new();
    let mut mirror_transitions = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        match toks[0] {
            "net" if toks.len() == 2 => name = Some(toks[1].to_owned()),
            "capacity" if toks.len() == 2 => {
                let c: u32 = toks[1].parse().map_err(|_| err(ln, "bad capacity"))?;
                if c == 0 {
                    return Err(err(ln, "capacity must be positive"));
                }
                capacity = Some(c);
            }
            "place" if toks.len() == 5 => {
                let owner = match toks[2] {
                    "shared" => Owner::Shared,
                    a => Owner::Agent(parse_agent(ln, a)?),
                };
                let kind = match toks[3] {
                    "epi" => PlaceKind::Epi,
                    "ont" => PlaceKind::Ont,
                    k => return Err(err(ln, format!("unknown kind `{k}`"))),
                };
                places.push(Place { id: PlaceId::from(toks[1]), owner, kind, role: parse_role(ln, toks[4])? });
            }
            "transition" if toks.len() >= 4 => {
                if toks[3] != "in" {
                    return Err(err(ln, "expected `in`"));
                }
                let out_at = toks.iter().position(|t| *t == "out").ok_or_else(|| err(ln, "expected `out`"))?;
                transitions.push(Transition {
                    id: TransitionId::from(toks[1]),
                    controller: parse_agent(ln, toks[2])?,
                    inputs: parse_arcs(ln, &toks[4..out_at])?,
                    outputs: parse_arcs(ln, &toks[out_at + 1..])?,
                });
            }
            "initial" => initial = Some(parse_arcs(ln, &toks[1..])?),
            "mirror" if toks.len() == 4 && toks[1] == "place" => {
                mirror_places.push((PlaceId::from(toks[2]), PlaceId::from(toks[3])));
            }
            "mirror" if toks.len() == 4 && toks[1] == "transition" => {
                mirror_transitions.push((TransitionId::from(toks[2]), TransitionId::from(toks[3])));
            }
            other => return Err(err(ln, format!("unrecognized line starting with `{other}`"))),
        }
    }

    let mut net = PetriNet {
        name: name.ok_or_else(|| err(0, "missing `net` line"))?,
        capacity: capacity.ok_or_else(|| err(0, "missing `capacity` line"))?,
        places,
        transitions,
        initial: Marking::default(),
        mirror_places,
        mirror_transitions,
    };
    let mut m = net.empty_marking();
    for (p, n) in initial.ok_or_else(|| err(0, "missing `initial` line"))? {
        *m.0.get_mut(&p).ok_or_else(|| PetriError::UnknownPlace(p.0.clone()))? = n;
    }
    net.initial = m;
    net.validate()?;
    Ok(net)
}
