//! Run traces as CSV.
//!
//! Leading `#` lines carry run metadata, then one fixed header row, then one
//! row per recorded step. Floats are written with 17 significant digits so
//! they parse back to the identical `f64`. Rows are flushed as they are
//! written, so a killed run leaves a parseable prefix.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const BASE_COLUMNS: [&str; 11] = [
    "step", "t", "dt", "E_total", "E_curv", "E_higgs", "E_pot", "l2_u", "sup_F", "sup_u2",
    "grad_norm",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub step: u64,
    pub t: f64,
    pub dt: f64,
    pub e_total: f64,
    pub e_curv: f64,
    pub e_higgs: f64,
    pub e_pot: f64,
    pub l2_u: f64,
    pub sup_f: f64,
    pub sup_u2: f64,
    pub grad_norm: f64,
    /// `||nabla^(q) F||^2_{L^2}` for `q = 0..=k`, present when derivatives are recorded.
    pub curvature_derivs: Vec<f64>,
}

/// Header row for a trace with `derivs` curvature-derivative columns.
pub fn header(derivs: usize) -> String {
    let mut cols: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    cols.extend((0..derivs).map(|q| format!("d{q}F_l2")));
    cols.join(",")
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

impl TraceRecord {
    pub fn to_csv(&self) -> String {
        let mut out = self.step.to_string();
        for x in [
            self.t,
            self.dt,
            self.e_total,
            self.e_curv,
            self.e_higgs,
            self.e_pot,
            self.l2_u,
            self.sup_f,
            self.sup_u2,
            self.grad_norm,
        ]
        .into_iter()
        .chain(self.curvature_derivs.iter().copied())
        {
            out.push(',');
            out.push_str(&fmt(x));
        }
        out
    }

    pub fn parse(line: &str, derivs: usize) -> Result<Self> {
        let bad = |msg: String| Error::Argument(format!("trace row: {msg}"));
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != BASE_COLUMNS.len() + derivs {
            return Err(bad(format!(
                "expected {} columns, got {}",
                BASE_COLUMNS.len() + derivs,
                fields.len()
            )));
        }
        let step = fields[0]
            .parse::<u64>()
            .map_err(|e| bad(format!("step: {e}")))?;
        let nums = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| bad(format!("`{f}`: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self {
            step,
            t: nums[0],
            dt: nums[1],
            e_total: nums[2],
            e_curv: nums[3],
            e_higgs: nums[4],
            e_pot: nums[5],
            l2_u: nums[6],
            sup_f: nums[7],
            sup_u2: nums[8],
            grad_norm: nums[9],
            curvature_derivs: nums[10..].to_vec(),
        })
    }
}

/// Append-only trace writer.
pub struct TraceWriter<W: Write> {
    out: W,
    derivs: usize,
}

impl<W: Write> TraceWriter<W> {
    /// Writes metadata lines (each prefixed with `# `) and the header row.
    pub fn new(mut out: W, meta: &[String], derivs: usize) -> Result<Self> {
        for m in meta {
            writeln!(out, "# {m}")?;
        }
        writeln!(out, "{}", header(derivs))?;
        out.flush()?;
        Ok(Self { out, derivs })
    }

    pub fn write(&mut self, rec: &TraceRecord) -> Result<()> {
        if rec.curvature_derivs.len() != self.derivs {
            return Err(Error::Argument(format!(
                "trace expects {} derivative columns, record has {}",
                self.derivs,
                rec.curvature_derivs.len()
            )));
        }
        writeln!(self.out, "{}", rec.to_csv())?;
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// A parsed trace: metadata lines (without `# `) and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub meta: Vec<String>,
    pub records: Vec<TraceRecord>,
    pub derivs: usize,
}

/// Reads a trace. A trailing row without its newline (from a killed run) is dropped.
pub fn read_trace<R: Read>(mut reader: R) -> Result<Trace> {
    let mut meta = Vec::new();
    let mut derivs = None;
    let mut records = Vec::new();
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let complete = match text.rfind('\n') {
        Some(i) => &text[..i],
        None => "",
    };
    for line in complete.lines() {
        if let Some(m) = line.strip_prefix('#') {
            meta.push(m.trim_start().to_string());
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        match derivs {
            None => {
                let cols: Vec<&str> = line.trim().split(',').collect();
                if cols.len() < BASE_COLUMNS.len() || cols[..BASE_COLUMNS.len()] != BASE_COLUMNS {
                    return Err(Error::Argument(format!("trace header not recognised: {line}")));
                }
                derivs = Some(cols.len() - BASE_COLUMNS.len());
            }
            Some(d) => records.push(TraceRecord::parse(line, d)?),
        }
    }
    Ok(Trace {
        meta,
        records,
        derivs: derivs.unwrap_or(0),
    })
}
