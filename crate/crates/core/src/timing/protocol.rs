//! Table-driven protocol automata and their text format.
//!
//! ```text
//! protocol <name>
//! primitive rw|swap
//! participant <id>            # may crash, receives inputs in declaration order
//! object <id>                 # shared object, never crashes
//! init <proc> <input|-> <state>
//! start <proc> <msg>          # self-addressed message in flight at time zero
//! on <proc> <state> <from|slot> <msg> -> <next> [send <dest> <msg>]... [decide <0|1>]
//! publish <proc> <state> <0|1>
//! ```
//!
//! A delivery with no matching rule is consumed without a state change.
//! `slot` rules fire at a bisynchronous boundary; their message is the pair of
//! published values `x,y` (participants in order, `_` for none).

use std::collections::HashMap;
use std::fmt;

use super::TimingError;

pub type Sym = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Primitive {
    RwRegister,
    SwapRegister,
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Primitive::RwRegister => "rw",
            Primitive::SwapRegister => "swap",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Proc(usize),
    Slot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub next: Sym,
    pub sends: Vec<(usize, Sym)>,
    pub decide: Option<u8>,
}

#[derive(Debug, Clone)]
pub struct ProtocolSpec {
    pub name: String,
    pub primitive: Primitive,
    /// Participants first, then objects.
    pub processes: Vec<String>,
    pub participants: usize,
    symbols: Vec<String>,
    sym_ids: HashMap<String, Sym>,
    /// `(proc, input)` → initial state; objects use input `None`.
    pub init: HashMap<(usize, Option<u8>), Sym>,
    pub start: Vec<(usize, Sym)>,
    pub rules: HashMap<(usize, Sym, Source, Sym), Rule>,
    pub publish: HashMap<(usize, Sym), u8>,
}

impl ProtocolSpec {
    pub fn sym(&self, s: &str) -> Option<Sym> {
        self.sym_ids.get(s).copied()
    }

    pub fn name_of(&self, s: Sym) -> &str {
        &self.symbols[s as usize]
    }

    pub fn process_index(&self, name: &str) -> Option<usize> {
        self.processes.iter().position(|p| p == name)
    }

    pub fn is_participant(&self, p: usize) -> bool {
        p < self.participants
    }

    pub fn has_slot_rules(&self) -> bool {
        self.rules.keys().any(|(_, _, src, _)| *src == Source::Slot)
    }

    pub fn rule(&self, proc: usize, state: Sym, from: Source, msg: Sym) -> Option<&Rule> {
        self.rules.get(&(proc, state, from, msg))
    }

    /// Published value of `proc` in `state`, if any.
    pub fn published(&self, proc: usize, state: Sym) -> Option<u8> {
        self.publish.get(&(proc, state)).copied()
    }

    /// Symbol for a slot snapshot `x,y,...`.
    pub fn slot_sym(&self, values: &[Option<u8>]) -> Option<Sym> {
        let s: Vec<String> = values.iter().map(|v| v.map_or("_".to_string(), |v| v.to_string())).collect();
        self.sym(&s.join(","))
    }
}

fn intern(symbols: &mut Vec<String>, ids: &mut HashMap<String, Sym>, s: &str) -> Sym {
    if let Some(&id) = ids.get(s) {
        return id;
    }
    let id = symbols.len() as Sym;
    symbols.push(s.to_owned());
    ids.insert(s.to_owned(), id);
    id
}

fn err(line: usize, msg: impl Into<String>) -> TimingError {
    TimingError::Parse { line, msg: msg.into() }
}

fn bit(line: usize, s: &str) -> Result<u8, TimingError> {
    match s {
        "0" => Ok(0),
        "1" => Ok(1),
        _ => Err(err(line, format!("expected 0 or 1, got `{s}`"))),
    }
}

pub fn parse_protocol(text: &str) -> Result<ProtocolSpec, TimingError> {
    let mut name = None;
    let mut primitive = None;
    let mut participants = Vec::new();
    let mut objects = Vec::new();
    let mut body: Vec<(usize, Vec<&str>)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match (toks[0], toks.len()) {
            ("protocol", 2) => name = Some(toks[1].to_owned()),
            ("primitive", 2) => {
                primitive = Some(match toks[1] {
                    "rw" => Primitive::RwRegister,
                    "swap" => Primitive::SwapRegister,
                    p => return Err(err(ln, format!("unknown primitive `{p}`"))),
                })
            }
            ("participant", 2) => participants.push(toks[1].to_owned()),
            ("object", 2) => objects.push(toks[1].to_owned()),
            ("init" | "start" | "on" | "publish", _) => body.push((ln, toks)),
            _ => return Err(err(ln, format!("unrecognized line `{line}`"))),
        }
    }
    if participants.len() != 2 {
        return Err(err(0, format!("need exactly two participants, got {}", participants.len())));
    }

    let n_part = participants.len();
    let processes: Vec<String> = participants.into_iter().chain(objects).collect();
    let mut symbols = Vec::new();
    let mut sym_ids = HashMap::new();
    for x in ["0", "1", "_"] {
        for y in ["0", "1", "_"] {
            intern(&mut symbols, &mut sym_ids, &format!("{x},{y}"));
        }
    }
    let proc_of = |ln: usize, s: &str| -> Result<usize, TimingError> {
        processes.iter().position(|p| p == s).ok_or_else(|| err(ln, format!("unknown process `{s}`")))
    };

    let mut init = HashMap::new();
    let mut start = Vec::new();
    let mut rules = HashMap::new();
    let mut publish = HashMap::new();
    for (ln, toks) in body {
        match toks[0] {
            "init" if toks.len() == 4 => {
                let p = proc_of(ln, toks[1])?;
                let input = if toks[2] == "-" { None } else { Some(bit(ln, toks[2])?) };
                let s = intern(&mut symbols, &mut sym_ids, toks[3]);
                if init.insert((p, input), s).is_some() {
                    return Err(err(ln, "duplicate init"));
                }
            }
            "start" if toks.len() == 3 => {
                let p = proc_of(ln, toks[1])?;
                start.push((p, intern(&mut symbols, &mut sym_ids, toks[2])));
            }
            "publish" if toks.len() == 4 => {
                let p = proc_of(ln, toks[1])?;
                let s = intern(&mut symbols, &mut sym_ids, toks[2]);
                publish.insert((p, s), bit(ln, toks[3])?);
            }
            "on" if toks.len() >= 7 && toks[5] == "->" => {
                let p = proc_of(ln, toks[1])?;
                let state = intern(&mut symbols, &mut sym_ids, toks[2]);
                let from = if toks[3] == "slot" { Source::Slot } else { Source::Proc(proc_of(ln, toks[3])?) };
                let msg = intern(&mut symbols, &mut sym_ids, toks[4]);
                let next = intern(&mut symbols, &mut sym_ids, toks[6]);
                let mut sends = Vec::new();
                let mut decide = None;
                let mut rest = &toks[7..];
                while !rest.is_empty() {
                    match rest {
                        ["send", dest, m, tail @ ..] => {
                            sends.push((proc_of(ln, dest)?, intern(&mut symbols, &mut sym_ids, m)));
                            rest = tail;
                        }
                        ["decide", v, tail @ ..] if decide.is_none() => {
                            decide = Some(bit(ln, v)?);
                            rest = tail;
                        }
                        _ => return Err(err(ln, format!("bad rule tail `{}`", rest.join(" ")))),
                    }
                }
                if rules.insert((p, state, from, msg), Rule { next, sends, decide }).is_some() {
                    return Err(err(ln, "duplicate rule: protocol must be deterministic"));
                }
            }
            _ => return Err(err(ln, format!("malformed `{}` line", toks[0]))),
        }
    }

    for (p, pname) in processes.iter().enumerate() {
        let inputs: &[Option<u8>] = if p < n_part { &[Some(0), Some(1)] } else { &[None] };
        for i in inputs {
            if !init.contains_key(&(p, *i)) {
                return Err(err(0, format!("missing init for `{}` input {:?}", pname, i)));
            }
        }
    }

    Ok(ProtocolSpec {
        name: name.ok_or_else(|| err(0, "missing `protocol` line"))?,
        primitive: primitive.ok_or_else(|| err(0, "missing `primitive` line"))?,
        processes,
        participants: n_part,
        symbols,
        sym_ids,
        init,
        start,
        rules,
        publish,
    })
}

/// Fixtures shipped with the crate, by short name.
pub fn builtin_protocol(name: &str) -> Option<&'static str> {
    Some(match name {
        "rw-flipflop" => include_str!("../../fixtures/rw_flipflop.proto"),
        "rw-wait" => include_str!("../../fixtures/rw_wait.proto"),
        "rw-eager" => include_str!("../../fixtures/rw_eager.proto"),
        "swap" => include_str!("../../fixtures/swap.proto"),
        "swap-slot" => include_str!("../../fixtures/swap_slot.proto"),
        "decide-zero" => include_str!("../../fixtures/decide_zero.proto"),
        _ => return None,
    })
}

pub const BUILTIN_RW: [&str; 3] = ["rw-flipflop", "rw-wait", "rw-eager"];
