//! CSV formats for run outputs.
//!
//! Floats are written in scientific notation with 17 significant digits, so
//! every file parses back to bit-identical values.

use std::io::{Read, Write};

use crate::classical::PhasePoint;
use crate::error::{Error, Result};
use crate::floquet::{FloquetModes, FrequencyLine, Parity, SweepEntry};
use crate::propagator::TimeSeries;
use crate::spectral::SpectralPeak;

pub const SERIES_HEADER: [&str; 2] = ["t_seconds", "mean_n"];
pub const PEAKS_HEADER: [&str; 2] = ["freq_hz", "power"];
pub const MODES_HEADER: [&str; 4] = ["index", "freq_hz", "overlap", "parity"];
pub const LINES_HEADER: [&str; 4] = ["delta_f_hz", "weight", "i", "j"];
pub const SWEEP_HEADER: [&str; 5] = ["drive", "delta_f_hz", "weight", "i", "j"];
pub const SECTION_HEADER: [&str; 3] = ["seed_index", "phi", "n"];

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse<T: std::str::FromStr>(field: &str, column: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    field
        .parse::<T>()
        .map_err(|e| Error::Parse(format!("column `{column}`: `{field}`: {e}")))
}

fn write_table<W: Write, const N: usize>(
    out: W,
    header: [&str; N],
    rows: impl Iterator<Item = [String; N]>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_table<R: Read, const N: usize>(input: R, header: [&str; N]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let found = r.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Parse(format!(
            "expected header `{}`, got `{}`",
            header.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let records = r.records().collect::<std::result::Result<Vec<_>, _>>()?;
    for rec in &records {
        if rec.len() != N {
            return Err(Error::DimensionMismatch {
                expected: N,
                got: rec.len(),
            });
        }
    }
    Ok(records)
}

/// `<n>(t)` as written to disk: explicit time column plus values.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTable {
    pub t_seconds: Vec<f64>,
    pub mean_n: Vec<f64>,
}

impl From<&TimeSeries> for SeriesTable {
    fn from(ts: &TimeSeries) -> Self {
        SeriesTable {
            t_seconds: ts.times().collect(),
            mean_n: ts.values.clone(),
        }
    }
}

pub fn write_series<W: Write>(out: W, table: &SeriesTable) -> Result<()> {
    if table.t_seconds.len() != table.mean_n.len() {
        return Err(Error::DimensionMismatch {
            expected: table.t_seconds.len(),
            got: table.mean_n.len(),
        });
    }
    write_table(
        out,
        SERIES_HEADER,
        table
            .t_seconds
            .iter()
            .zip(&table.mean_n)
            .map(|(t, n)| [float(*t), float(*n)]),
    )
}

pub fn read_series<R: Read>(input: R) -> Result<SeriesTable> {
    let mut table = SeriesTable {
        t_seconds: Vec::new(),
        mean_n: Vec::new(),
    };
    for rec in read_table(input, SERIES_HEADER)? {
        table.t_seconds.push(parse(&rec[0], "t_seconds")?);
        table.mean_n.push(parse(&rec[1], "mean_n")?);
    }
    Ok(table)
}

pub fn write_peaks<W: Write>(out: W, peaks: &[SpectralPeak]) -> Result<()> {
    write_table(
        out,
        PEAKS_HEADER,
        peaks.iter().map(|p| [float(p.freq_hz), float(p.power)]),
    )
}

pub fn read_peaks<R: Read>(input: R) -> Result<Vec<SpectralPeak>> {
    read_table(input, PEAKS_HEADER)?
        .iter()
        .map(|rec| {
            Ok(SpectralPeak {
                freq_hz: parse(&rec[0], "freq_hz")?,
                power: parse(&rec[1], "power")?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeRow {
    pub index: usize,
    pub freq_hz: f64,
    pub overlap: f64,
    pub parity: Parity,
}

pub fn mode_rows(modes: &FloquetModes, overlaps: &[f64]) -> Vec<ModeRow> {
    (0..modes.len())
        .map(|j| ModeRow {
            index: j,
            freq_hz: modes.freqs_hz[j],
            overlap: overlaps[j],
            parity: modes.parities[j],
        })
        .collect()
}

pub fn write_modes<W: Write>(out: W, rows: &[ModeRow]) -> Result<()> {
    write_table(
        out,
        MODES_HEADER,
        rows.iter().map(|r| {
            [
                r.index.to_string(),
                float(r.freq_hz),
                float(r.overlap),
                r.parity.as_str().to_string(),
            ]
        }),
    )
}

pub fn read_modes<R: Read>(input: R) -> Result<Vec<ModeRow>> {
    read_table(input, MODES_HEADER)?
        .iter()
        .map(|rec| {
            Ok(ModeRow {
                index: parse(&rec[0], "index")?,
                freq_hz: parse(&rec[1], "freq_hz")?,
                overlap: parse(&rec[2], "overlap")?,
                parity: rec[3].parse()?,
            })
        })
        .collect()
}

fn line_fields(l: &FrequencyLine) -> [String; 4] {
    [float(l.delta_f_hz), float(l.weight), l.i.to_string(), l.j.to_string()]
}

fn parse_line(fields: &[&str]) -> Result<FrequencyLine> {
    Ok(FrequencyLine {
        delta_f_hz: parse(fields[0], "delta_f_hz")?,
        weight: parse(fields[1], "weight")?,
        i: parse(fields[2], "i")?,
        j: parse(fields[3], "j")?,
    })
}

pub fn write_lines<W: Write>(out: W, lines: &[FrequencyLine]) -> Result<()> {
    write_table(out, LINES_HEADER, lines.iter().map(line_fields))
}

pub fn read_lines<R: Read>(input: R) -> Result<Vec<FrequencyLine>> {
    read_table(input, LINES_HEADER)?
        .iter()
        .map(|rec| parse_line(&rec.iter().collect::<Vec<_>>()))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub drive: f64,
    pub line: FrequencyLine,
}

pub fn sweep_rows(entries: &[SweepEntry]) -> Vec<SweepRow> {
    entries
        .iter()
        .flat_map(|e| e.lines.iter().map(move |&line| SweepRow { drive: e.drive, line }))
        .collect()
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    write_table(
        out,
        SWEEP_HEADER,
        rows.iter().map(|r| {
            let [a, b, c, d] = line_fields(&r.line);
            [float(r.drive), a, b, c, d]
        }),
    )
}

pub fn read_sweep<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    read_table(input, SWEEP_HEADER)?
        .iter()
        .map(|rec| {
            let fields: Vec<&str> = rec.iter().collect();
            Ok(SweepRow {
                drive: parse(fields[0], "drive")?,
                line: parse_line(&fields[1..])?,
            })
        })
        .collect()
}

pub fn write_section<W: Write>(out: W, orbits: &[Vec<PhasePoint>]) -> Result<()> {
    write_table(
        out,
        SECTION_HEADER,
        orbits
            .iter()
            .enumerate()
            .flat_map(|(k, orbit)| orbit.iter().map(move |p| [k.to_string(), float(p.phi), float(p.n)])),
    )
}

/// Groups points by `seed_index`; indices must be contiguous and ascending.
pub fn read_section<R: Read>(input: R) -> Result<Vec<Vec<PhasePoint>>> {
    let mut orbits: Vec<Vec<PhasePoint>> = Vec::new();
    for rec in read_table(input, SECTION_HEADER)? {
        let seed: usize = parse(&rec[0], "seed_index")?;
        let point = PhasePoint {
            phi: parse(&rec[1], "phi")?,
            n: parse(&rec[2], "n")?,
        };
        if seed == orbits.len() {
            orbits.push(Vec::new());
        } else if seed + 1 != orbits.len() {
            return Err(Error::Parse(format!("seed_index {seed} out of order")));
        }
        orbits[seed].push(point);
    }
    Ok(orbits)
}
