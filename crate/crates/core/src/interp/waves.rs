//! VCD output and the translation sidecar.
//!
//! Cycle `k` of a trace is dumped at time `10 * k` with every clock low;
//! clocks rise at `10 * k + 5`. The sidecar is JSON lines, one
//! [`WaveSignal`] per dumped variable, giving the layout needed to render
//! raw bits as typed values.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use vcd::{Command, IdCode, TimescaleUnit, Value as VcdValue};

use crate::bits::{Bit, Bits};
use crate::interp::Trace;
use crate::mir::TypeDesc;

pub const PERIOD: u64 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveSignal {
    /// Scope path and variable, joined with `.`, starting at the top module.
    pub path: String,
    pub module: String,
    pub signal: String,
    pub width: usize,
    #[serde(rename = "type")]
    pub ty: TypeDesc,
}

#[derive(Default)]
struct Scope {
    vars: Vec<(String, usize)>,
    children: BTreeMap<String, Scope>,
}

fn is_clock(ty: &TypeDesc) -> bool {
    matches!(ty, TypeDesc::Clock)
}

fn vcd_bits(b: &Bits) -> Vec<VcdValue> {
    b.bits_lsb()
        .iter()
        .rev()
        .map(|x| match x {
            Bit::Zero => VcdValue::V0,
            Bit::One => VcdValue::V1,
            Bit::X => VcdValue::X,
        })
        .collect()
}

fn build_scope(trace: &Trace) -> Scope {
    let mut root = Scope::default();
    for (i, s) in trace.signals.iter().enumerate() {
        if s.width == 0 {
            continue;
        }
        let mut parts: Vec<&str> = s.name.split('.').collect();
        let var = parts.pop().unwrap_or_default();
        let mut scope = &mut root;
        for p in parts {
            scope = scope.children.entry(p.to_string()).or_default();
        }
        scope.vars.push((var.to_string(), i));
    }
    root
}

fn declare<W: Write>(w: &mut vcd::Writer<W>, scope: &Scope, ids: &mut BTreeMap<usize, IdCode>, trace: &Trace) -> io::Result<()> {
    for (name, i) in &scope.vars {
        let id = w.add_wire(trace.signals[*i].width as u32, name)?;
        ids.insert(*i, id);
    }
    for (name, child) in &scope.children {
        w.add_module(name)?;
        declare(w, child, ids, trace)?;
        w.upscope()?;
    }
    Ok(())
}

pub fn write_vcd<W: Write>(trace: &Trace, top: &str, out: W) -> io::Result<()> {
    let mut w = vcd::Writer::new(out);
    w.timescale(1, TimescaleUnit::NS)?;
    w.add_module(top)?;
    let mut ids = BTreeMap::new();
    declare(&mut w, &build_scope(trace), &mut ids, trace)?;
    w.upscope()?;
    w.enddefinitions()?;

    let clocks: Vec<usize> = ids.keys().copied().filter(|i| is_clock(&trace.signals[*i].ty)).collect();
    let mut last: BTreeMap<usize, Bits> = BTreeMap::new();
    for (k, values) in trace.cycles.iter().enumerate() {
        w.timestamp(k as u64 * PERIOD)?;
        for (&i, &id) in &ids {
            let v = if is_clock(&trace.signals[i].ty) {
                Bits::from_bool(false)
            } else {
                values[i].clone()
            };
            if last.get(&i) != Some(&v) {
                w.change_vector(id, vcd_bits(&v))?;
                last.insert(i, v);
            }
        }
        if k + 1 < trace.cycles.len() && !clocks.is_empty() {
            w.timestamp(k as u64 * PERIOD + PERIOD / 2)?;
            for i in &clocks {
                w.change_vector(ids[i], vcd_bits(&Bits::from_bool(true)))?;
                last.insert(*i, Bits::from_bool(true));
            }
        }
    }
    w.flush()
}

pub fn sidecar(trace: &Trace, top: &str) -> Vec<WaveSignal> {
    trace
        .signals
        .iter()
        .filter(|s| s.width > 0)
        .map(|s| WaveSignal {
            path: format!("{top}.{}", s.name),
            module: s.module.clone(),
            signal: s.local.clone(),
            width: s.width,
            ty: s.ty.clone(),
        })
        .collect()
}

pub fn write_sidecar(trace: &Trace, top: &str) -> String {
    let mut out = String::new();
    for s in sidecar(trace, top) {
        out.push_str(&serde_json::to_string(&s).expect("sidecar entries serialize"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("cannot read waveform: {0}")]
    Io(#[from] io::Error),
    #[error("sidecar line {line}: {source}")]
    Sidecar { line: usize, source: serde_json::Error },
    #[error("no signal `{name}` in the waveform{}", crate::interp::suggest(.suggestions))]
    UnknownSignal { name: String, suggestions: Vec<String> },
}

pub fn parse_sidecar(text: &str) -> Result<Vec<WaveSignal>, TranslateError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|source| TranslateError::Sidecar { line: i + 1, source }))
        .collect()
}

/// One value change of a translated signal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Change {
    pub time: u64,
    pub bits: Bits,
    pub rendered: String,
}

fn from_vcd(values: impl Iterator<Item = VcdValue>, width: usize) -> Bits {
    let msb_first: Vec<Bit> = values
        .map(|v| match v {
            VcdValue::V0 => Bit::Zero,
            VcdValue::V1 => Bit::One,
            VcdValue::X | VcdValue::Z => Bit::X,
        })
        .collect();
    // VCD omits leading zeros; extend from the leftmost given bit.
    let mut lsb: Vec<Bit> = msb_first.into_iter().rev().collect();
    let fill = match lsb.last() {
        Some(Bit::X) => Bit::X,
        _ => Bit::Zero,
    };
    lsb.resize(width, fill);
    Bits::from_bits_lsb(lsb)
}

/// Every change of `name` (a sidecar path, with or without the top module
/// prefix) rendered through its layout.
pub fn translate<R: BufRead>(vcd_in: R, sidecar: &[WaveSignal], name: &str) -> Result<Vec<Change>, TranslateError> {
    let entry = sidecar
        .iter()
        .find(|s| s.path == name || s.path.split_once('.').map(|(_, rest)| rest) == Some(name))
        .ok_or_else(|| TranslateError::UnknownSignal {
            name: name.to_string(),
            suggestions: crate::interp::suggestions(name, sidecar.iter().map(|s| s.path.as_str())),
        })?;
    let mut parser = vcd::Parser::new(vcd_in);
    let header = parser.parse_header()?;
    let path: Vec<&str> = entry.path.split('.').collect();
    let var = header.find_var(&path).ok_or_else(|| TranslateError::UnknownSignal {
        name: entry.path.clone(),
        suggestions: vec![],
    })?;
    let code = var.code;
    let mut time = 0;
    let mut out = vec![];
    for cmd in parser {
        let bits = match cmd? {
            Command::Timestamp(t) => {
                time = t;
                continue;
            }
            Command::ChangeVector(c, v) if c == code => from_vcd(v.iter(), entry.width),
            Command::ChangeScalar(c, v) if c == code => from_vcd(std::iter::once(v), entry.width),
            _ => continue,
        };
        let rendered = entry.ty.decode(&bits).to_string();
        out.push(Change { time, bits, rendered });
    }
    Ok(out)
}
