//! On-disk formats.
//!
//! Record and field files are a one-line JSON header terminated by `\n`,
//! followed by little-endian `f32` samples: trace-major for records
//! (`SASR`), row-major for fields (`FLD2`). Images export to 16-bit binary
//! PGM. Scatterer and layer tables are CSV with `#` comments.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Layer;
use crate::error::{Error, Result};
use crate::grid::{Field2D, Grid2D};
use crate::record::{SasRecord, Sampling};
use crate::scalar::Real;
use crate::scene::{Scatterer, ScattererList};

pub const SAS_MAGIC: &str = "SASR";
pub const FIELD_MAGIC: &str = "FLD2";
pub const FORMAT_VERSION: u32 = 1;

/// Longest header accepted before the newline.
const MAX_HEADER: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SasHeader {
    pub magic: String,
    pub version: u32,
    pub n_traces: usize,
    pub n_samples: usize,
    pub dt: f64,
    pub dx_track: f64,
    pub t0: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub magic: String,
    pub version: u32,
    pub nx: usize,
    pub nz: usize,
    pub dx: f64,
    pub dz: f64,
    pub x0: f64,
    pub z0: f64,
}

/// Header of either file kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Header {
    Sas(SasHeader),
    Field(FieldHeader),
}

fn read_header_line<R: BufRead>(r: &mut R) -> Result<(serde_json::Value, u64)> {
    let mut line = Vec::new();
    r.take(MAX_HEADER).read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Parse {
            offset: line.len() as u64,
            reason: "missing header terminator".into(),
        });
    }
    let value: serde_json::Value =
        serde_json::from_slice(&line[..line.len() - 1]).map_err(|e| Error::Parse {
            offset: e.column().saturating_sub(1) as u64,
            reason: format!("header is not JSON: {e}"),
        })?;
    Ok((value, line.len() as u64))
}

fn check_magic(value: &serde_json::Value, expected: &str) -> Result<()> {
    let found = value.get("magic").and_then(|m| m.as_str()).unwrap_or("");
    if found != expected {
        return Err(Error::BadMagic {
            found: found.to_string(),
            expected: expected.to_string(),
        });
    }
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == FORMAT_VERSION as u64 => Ok(()),
        v => Err(Error::Parse {
            offset: 0,
            reason: format!("unsupported version {v:?}, expected {FORMAT_VERSION}"),
        }),
    }
}

fn typed_header<H: for<'de> Deserialize<'de>>(value: serde_json::Value) -> Result<H> {
    serde_json::from_value(value).map_err(|e| Error::Parse {
        offset: 0,
        reason: format!("bad header: {e}"),
    })
}

fn read_payload<R: Read>(r: &mut R, count: usize, start: u64) -> Result<Vec<f64>> {
    let expected = count as u64 * 4;
    let mut bytes = Vec::with_capacity(count * 4);
    let got = r.take(expected).read_to_end(&mut bytes)? as u64;
    if got < expected {
        return Err(Error::Parse {
            offset: start + got,
            reason: format!("truncated payload: expected {expected} bytes, got {got}"),
        });
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::Parse {
            offset: start + expected,
            reason: "trailing bytes after payload".into(),
        });
    }
    bytes
        .chunks_exact(4)
        .enumerate()
        .map(|(k, b)| {
            let v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            if v.is_finite() {
                Ok(v as f64)
            } else {
                Err(Error::Parse {
                    offset: start + 4 * k as u64,
                    reason: "non-finite sample".into(),
                })
            }
        })
        .collect()
}

fn write_payload<W: Write, T: Real>(w: &mut W, values: &[T]) -> Result<()> {
    for v in values {
        w.write_all(&(v.as_f64() as f32).to_le_bytes())?;
    }
    Ok(())
}

fn write_header<W: Write, H: Serialize>(w: &mut W, header: &H) -> Result<()> {
    serde_json::to_writer(&mut *w, header).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn write_sas<W: Write, T: Real>(w: &mut W, record: &SasRecord<T>) -> Result<()> {
    let header = SasHeader {
        magic: SAS_MAGIC.into(),
        version: FORMAT_VERSION,
        n_traces: record.n_traces,
        n_samples: record.n_samples,
        dt: record.dt,
        dx_track: record.dx_track,
        t0: record.t0,
        c: record.c,
    };
    write_header(w, &header)?;
    write_payload(w, record.data())
}

pub fn read_sas<R: BufRead>(r: &mut R) -> Result<SasRecord<f64>> {
    let (value, start) = read_header_line(r)?;
    check_magic(&value, SAS_MAGIC)?;
    let h: SasHeader = typed_header(value)?;
    let sampling = Sampling {
        n_traces: h.n_traces,
        n_samples: h.n_samples,
        dt: h.dt,
        dx_track: h.dx_track,
        t0: h.t0,
        c: h.c,
    };
    sampling.validate()?;
    let data = read_payload(r, h.n_traces * h.n_samples, start)?;
    SasRecord::from_data(sampling, data)
}

pub fn write_field<W: Write, T: Real>(w: &mut W, field: &Field2D<T>) -> Result<()> {
    let g = field.grid();
    let header = FieldHeader {
        magic: FIELD_MAGIC.into(),
        version: FORMAT_VERSION,
        nx: g.nx,
        nz: g.nz,
        dx: g.dx,
        dz: g.dz,
        x0: g.x0,
        z0: g.z0,
    };
    write_header(w, &header)?;
    write_payload(w, field.values())
}

pub fn read_field<R: BufRead>(r: &mut R) -> Result<Field2D<f64>> {
    let (value, start) = read_header_line(r)?;
    check_magic(&value, FIELD_MAGIC)?;
    let h: FieldHeader = typed_header(value)?;
    let grid = Grid2D::new(h.nx, h.nz, h.dx, h.dz, h.x0, h.z0)?;
    let data = read_payload(r, grid.len(), start)?;
    Field2D::from_values(grid, data)
}

/// Reads only the header of a record or field file.
pub fn read_header<R: BufRead>(r: &mut R) -> Result<Header> {
    let (value, _) = read_header_line(r)?;
    let magic = value.get("magic").and_then(|m| m.as_str()).unwrap_or("");
    if magic == FIELD_MAGIC {
        check_magic(&value, FIELD_MAGIC)?;
        Ok(Header::Field(typed_header(value)?))
    } else {
        check_magic(&value, SAS_MAGIC)?;
        Ok(Header::Sas(typed_header(value)?))
    }
}

pub fn read_sas_file(path: impl AsRef<Path>) -> Result<SasRecord<f64>> {
    read_sas(&mut BufReader::new(File::open(path)?))
}

pub fn write_sas_file<T: Real>(path: impl AsRef<Path>, record: &SasRecord<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_sas(&mut w, record)?;
    w.flush()?;
    Ok(())
}

pub fn read_field_file(path: impl AsRef<Path>) -> Result<Field2D<f64>> {
    read_field(&mut BufReader::new(File::open(path)?))
}

pub fn write_field_file<T: Real>(path: impl AsRef<Path>, field: &Field2D<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field(&mut w, field)?;
    w.flush()?;
    Ok(())
}

/// Gray-level mapping for PGM export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// Field minimum to 0, maximum to 65535; a constant field maps to 0.
    MinMax,
    /// `lo` to 0, `hi` to 65535, clamped outside.
    Fixed(f64, f64),
}

/// Binary 16-bit PGM, width `nx`, height `nz`, row `j = 0` first.
pub fn export_pgm<W: Write, T: Real>(w: &mut W, field: &Field2D<T>, norm: Normalization) -> Result<()> {
    let (lo, hi) = match norm {
        Normalization::MinMax => {
            let (a, b) = field.min_max();
            (a.as_f64(), b.as_f64())
        }
        Normalization::Fixed(lo, hi) => {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid("range", format!("need lo < hi, got {lo}, {hi}")));
            }
            (lo, hi)
        }
    };
    let g = field.grid();
    write!(w, "P5\n{} {}\n65535\n", g.nx, g.nz)?;
    for v in field.values() {
        let level = if hi > lo {
            ((v.as_f64() - lo) / (hi - lo)).clamp(0.0, 1.0) * 65535.0
        } else {
            0.0
        };
        w.write_all(&(level.round() as u16).to_be_bytes())?;
    }
    Ok(())
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(r)
}

/// Numeric rows with exactly `width` columns; a non-numeric first row is
/// taken as a column header and skipped.
fn numeric_rows<R: Read>(r: R, width: usize) -> Result<Vec<(u64, Vec<f64>)>> {
    let mut out = Vec::new();
    for (k, rec) in csv_reader(r).records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            offset: e.position().map_or(0, |p| p.byte()),
            reason: e.to_string(),
        })?;
        let offset = rec.position().map_or(0, |p| p.byte());
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(values) if values.len() == width => out.push((offset, values)),
            Ok(values) => {
                return Err(Error::Parse {
                    offset,
                    reason: format!("expected {width} columns, got {}", values.len()),
                })
            }
            Err(_) if k == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    offset,
                    reason: format!("not a number: {e}"),
                })
            }
        }
    }
    Ok(out)
}

/// Rows of `x,z,amplitude`.
pub fn read_scatterers<R: Read>(r: R) -> Result<ScattererList> {
    numeric_rows(r, 3)?
        .into_iter()
        .map(|(offset, v)| {
            Scatterer::new(v[0], v[1], v[2]).map_err(|e| Error::Parse {
                offset,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Rows of `z_top,c`.
pub fn read_layers<R: Read>(r: R) -> Result<Vec<Layer>> {
    Ok(numeric_rows(r, 2)?
        .into_iter()
        .map(|(_, v)| Layer { z_top: v[0], c: v[1] })
        .collect())
}
