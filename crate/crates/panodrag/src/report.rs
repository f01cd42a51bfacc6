//! JSON output: the suite report document and per-iteration trace lines.
//!
//! Every float is written with 17 significant digits so values survive a
//! text round trip bit for bit; non-finite values become `null`.

use std::io::Write;
use std::path::Path;

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use panodrag_core::drag::TraceRecord;

/// `f64` serialized with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F17(pub f64);

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw =
            RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl From<f64> for F17 {
    fn from(v: f64) -> Self {
        Self(v)
    }
}

pub fn opt(v: Option<f64>) -> Option<F17> {
    v.map(F17)
}

/// `serialize_with` adapter for plain `f64` fields.
pub fn f17<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    F17(*v).serialize(s)
}

/// `serialize_with` adapter for `Option<f64>` fields.
pub fn f17_opt<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    opt(*v).serialize(s)
}

/// `serialize_with` adapter for `f64` slices.
pub fn f17_vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|&x| F17(x)))
}

/// One line of a drag trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceLine<'a> {
    pub case_id: &'a str,
    pub pair: usize,
    pub k: usize,
    pub handle: [F17; 2],
    pub loss: F17,
    pub direction: [F17; 2],
    pub rx: F17,
    pub ry: F17,
    pub next_handle: [F17; 2],
}

impl<'a> TraceLine<'a> {
    pub fn new(case_id: &'a str, pair: usize, r: &TraceRecord) -> Self {
        Self {
            case_id,
            pair,
            k: r.k,
            handle: [F17(r.handle.i), F17(r.handle.j)],
            loss: F17(r.loss),
            direction: [F17(r.direction.di), F17(r.direction.dj)],
            rx: F17(r.rx),
            ry: F17(r.ry),
            next_handle: [F17(r.next_handle.i), F17(r.next_handle.j)],
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()
}

pub fn write_jsonl<T: Serialize>(path: &Path, lines: &[T]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for line in lines {
        serde_json::to_writer(&mut f, line)?;
        f.write_all(b"\n")?;
    }
    f.flush()
}
