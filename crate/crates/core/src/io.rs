//! File formats: CSV tables, JSON reports, raw arrays, PGM images. Every
//! writer goes through a temporary file and a rename.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::tensor::DenseArray;

/// Magic prefix of the raw array format.
pub const ARRAY_MAGIC: &[u8; 8] = b"WCREG\0v1";

/// 17 significant digits; non-finite values as `inf`, `-inf`, `nan`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn parse_f64(s: &str) -> Option<f64> {
    match s.trim() {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

/// JSON has no non-finite numbers; those become the strings `fmt_f64` uses.
pub fn json_number(v: f64) -> Value {
    if v.is_finite() {
        Value::from(v)
    } else {
        Value::from(fmt_f64(v))
    }
}

pub fn json_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => parse_f64(s),
        _ => None,
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(d) = dir {
        fs::create_dir_all(d)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::config(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable value");
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json(path: &Path) -> Result<Value> {
    let s = fs::read_to_string(path)?;
    serde_json::from_str(&s).map_err(|e| Error::Parse {
        line: e.line(),
        message: format!("{}: {e}", path.display()),
    })
}

/// In-memory CSV table with a header row.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_f64(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| fmt_f64(v)).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: format!("{}: empty file", path.display()),
    })?;
    let mut t = Table {
        header: header.split(',').map(str::to_string).collect(),
        rows: Vec::new(),
    };
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Vec<String> = line.split(',').map(str::to_string).collect();
        if row.len() != t.header.len() {
            return Err(Error::Parse {
                line: i + 2,
                message: format!("expected {} fields, found {}", t.header.len(), row.len()),
            });
        }
        t.rows.push(row);
    }
    Ok(t)
}

/// Column of a table parsed as floats.
pub fn numeric_column(t: &Table, name: &str) -> Result<Vec<f64>> {
    let c = t
        .column(name)
        .ok_or_else(|| Error::config(format!("missing column {name}")))?;
    t.rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            parse_f64(&r[c]).ok_or_else(|| Error::Parse {
                line: i + 2,
                message: format!("bad number {:?} in column {name}", r[c]),
            })
        })
        .collect()
}

/// Magic, `u32` rank, `u32` extents, little-endian `f64` data.
pub fn encode_array(a: &DenseArray) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * (1 + a.shape().len()) + 8 * a.len());
    out.extend_from_slice(ARRAY_MAGIC);
    out.extend_from_slice(&(a.shape().len() as u32).to_le_bytes());
    for &e in a.shape() {
        out.extend_from_slice(&(e as u32).to_le_bytes());
    }
    for v in a.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_array(bytes: &[u8]) -> Result<DenseArray> {
    let bad = |m: &str| Error::Parse {
        line: 0,
        message: format!("raw array: {m}"),
    };
    if bytes.len() < 12 || &bytes[..8] != ARRAY_MAGIC {
        return Err(bad("bad magic"));
    }
    let word = |i: usize| -> Result<u32> {
        bytes
            .get(i..i + 4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
            .ok_or_else(|| bad("truncated header"))
    };
    let rank = word(8)? as usize;
    let mut shape = Vec::with_capacity(rank);
    for k in 0..rank {
        shape.push(word(12 + 4 * k)? as usize);
    }
    let start = 12 + 4 * rank;
    let body = &bytes[start.min(bytes.len())..];
    if body.len() % 8 != 0 {
        return Err(bad("truncated data"));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseArray::new(shape, data)
}

pub fn write_array(path: &Path, a: &DenseArray) -> Result<()> {
    write_atomic(path, &encode_array(a))
}

pub fn read_array(path: &Path) -> Result<DenseArray> {
    decode_array(&fs::read(path)?)
}

/// Binary PGM (P5, maxval 255) of a 2-D array, mapping `[lo, hi]` to
/// `[0, 255]` with clamping. 1-D arrays are written as a single row.
pub fn encode_pgm(a: &DenseArray, lo: f64, hi: f64) -> Vec<u8> {
    let (rows, cols) = match a.shape() {
        [n] => (1, *n),
        [r, c] => (*r, *c),
        s => (1, s.iter().product()),
    };
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    let span = if hi > lo { hi - lo } else { 1.0 };
    out.extend(a.data().iter().map(|&v| {
        let t = ((v - lo) / span).clamp(0.0, 1.0);
        (t * 255.0).round() as u8
    }));
    out
}

pub fn write_pgm(path: &Path, a: &DenseArray, lo: f64, hi: f64) -> Result<()> {
    write_atomic(path, &encode_pgm(a, lo, hi))
}
