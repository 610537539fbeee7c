//! File formats: field CSV, binary frames, and CSV/JSON exports of measures,
//! masks, ladders, polygons and decay series.
//!
//! Binary frame record (little endian): magic `CLFR`, `u32` version, `u32`
//! ndim, `u64` dims, `f64` origin, `f64` spacing, `f64` time, then the
//! row-major `f64` payload. A frame file is a sequence of records.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::characteristics::CharPolygon;
use crate::decay::DecaySeries;
use crate::degiorgi::TruncationLadder;
use crate::error::{Error, Result};
use crate::grid::{Geometry, ScalarField};
use crate::kinetic::DissipationMeasure;
use crate::structure::JumpMask;

const MAGIC: &[u8; 4] = b"CLFR";
const VERSION: u32 = 1;

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => format_err(path, format!("{other:?}")),
    }
}

fn finish(path: &Path, w: csv::Writer<BufWriter<File>>) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

const AXIS_NAMES: [&str; 3] = ["x", "y", "z"];

/// `x,value` or `x,y,value` rows at the cell centers, last axis fastest.
pub fn write_field_csv(path: &Path, field: &ScalarField) -> Result<()> {
    let g = field.geometry();
    if g.ndim() > AXIS_NAMES.len() {
        return Err(Error::Unsupported(format!("{}-dimensional field CSV", g.ndim())));
    }
    let mut w = csv_writer(path)?;
    let mut header: Vec<&str> = AXIS_NAMES[..g.ndim()].to_vec();
    header.push("value");
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (i, v) in field.values().iter().enumerate() {
        let mut row: Vec<String> = g.center(i).iter().map(|c| format!("{c:e}")).collect();
        row.push(format!("{v:e}"));
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// Reads a field CSV; the grid is inferred from the distinct coordinates,
/// which must be uniformly spaced. The time stamp is set to `time`.
pub fn read_field_csv(path: &Path, time: f64) -> Result<ScalarField> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let ndim = headers.len().saturating_sub(1);
    if ndim == 0 || ndim > AXIS_NAMES.len() || &headers[ndim] != "value" {
        return Err(format_err(path, "expected coordinate columns followed by `value`"));
    }
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let nums: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| format_err(path, format!("line {:?}: {e}", rec.position().map(|p| p.line()))))?;
        if nums.len() != ndim + 1 {
            return Err(format_err(path, "ragged row"));
        }
        rows.push((nums[..ndim].to_vec(), nums[ndim]));
    }
    let mut axes: Vec<Vec<f64>> = vec![Vec::new(); ndim];
    for (c, _) in &rows {
        for k in 0..ndim {
            axes[k].push(c[k]);
        }
    }
    let mut dims = Vec::with_capacity(ndim);
    let mut origin = Vec::with_capacity(ndim);
    let mut spacing = Vec::with_capacity(ndim);
    for ax in &mut axes {
        ax.sort_by(|a, b| a.total_cmp(b));
        ax.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * a.abs().max(1.0));
        if ax.len() < 2 {
            return Err(format_err(path, "need at least two cells per axis"));
        }
        let h = (ax[ax.len() - 1] - ax[0]) / (ax.len() - 1) as f64;
        if ax.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-6 * h) {
            return Err(format_err(path, "coordinates are not uniformly spaced"));
        }
        dims.push(ax.len());
        origin.push(ax[0] - 0.5 * h);
        spacing.push(h);
    }
    let geometry = Geometry::new(dims, origin, spacing)?;
    if rows.len() != geometry.len() {
        return Err(format_err(path, format!(
            "{} rows for a grid of {} cells",
            rows.len(),
            geometry.len()
        )));
    }
    let mut values = vec![f64::NAN; geometry.len()];
    for (c, v) in rows {
        let idx = geometry
            .locate(&c)
            .ok_or_else(|| format_err(path, format!("{c:?} is off the grid")))?;
        values[geometry.flat(&idx)] = v;
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(format_err(path, "duplicate or missing cells"));
    }
    ScalarField::new(geometry, values, time)
}

pub fn encode_frame(field: &ScalarField, out: &mut Vec<u8>) {
    let g = field.geometry();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.ndim() as u32).to_le_bytes());
    for &n in &g.dims {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for &x in g.origin.iter().chain(&g.spacing) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend_from_slice(&field.time.to_le_bytes());
    for &v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.buf.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(s)
    }
    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }
    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
    fn f64(&mut self) -> Option<f64> {
        self.take(8).map(|b| f64::from_le_bytes(b.try_into().unwrap()))
    }
}

fn decode_one(c: &mut Cursor, path: &Path) -> Result<ScalarField> {
    let bad = |what: &str| format_err(path, format!("truncated frame ({what})"));
    if c.take(4) != Some(MAGIC.as_slice()) {
        return Err(format_err(path, "bad frame magic"));
    }
    let version = c.u32().ok_or_else(|| bad("version"))?;
    if version != VERSION {
        return Err(format_err(path, format!("unknown frame version {version}")));
    }
    let ndim = c.u32().ok_or_else(|| bad("ndim"))? as usize;
    if ndim == 0 || ndim > 8 {
        return Err(format_err(path, format!("implausible ndim {ndim}")));
    }
    let dims = (0..ndim)
        .map(|_| c.u64().map(|n| n as usize))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| bad("dims"))?;
    let origin = (0..ndim).map(|_| c.f64()).collect::<Option<Vec<_>>>().ok_or_else(|| bad("origin"))?;
    let spacing = (0..ndim).map(|_| c.f64()).collect::<Option<Vec<_>>>().ok_or_else(|| bad("spacing"))?;
    let time = c.f64().ok_or_else(|| bad("time"))?;
    let geometry = Geometry::new(dims, origin, spacing)?;
    let n = geometry.len();
    let payload = c.take(n * 8).ok_or_else(|| bad("payload"))?;
    let values = payload
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    ScalarField::new(geometry, values, time)
}

pub fn write_frames(path: &Path, frames: &[ScalarField]) -> Result<()> {
    let mut buf = Vec::new();
    for f in frames {
        encode_frame(f, &mut buf);
    }
    let mut w = create(path)?;
    w.write_all(&buf).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_frames(path: &Path) -> Result<Vec<ScalarField>> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    let mut c = Cursor { buf: &buf, pos: 0 };
    let mut out = Vec::new();
    while c.pos < buf.len() {
        out.push(decode_one(&mut c, path)?);
    }
    if out.is_empty() {
        return Err(format_err(path, "no frames"));
    }
    Ok(out)
}

/// Sparse rows `t_index,cell_index,level_index,mass`.
pub fn write_measure_csv(path: &Path, measure: &DissipationMeasure) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["t_index", "cell_index", "level_index", "mass"])
        .map_err(|e| csv_err(path, e))?;
    for e in &measure.entries {
        w.write_record(&[
            e.t_index.to_string(),
            e.cell_index.to_string(),
            e.level_index.to_string(),
            format!("{:e}", e.mass),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// Mask as JSON plus a CSV of flagged cells with their centers and scores.
pub fn write_mask(json_path: &Path, csv_path: &Path, mask: &JumpMask) -> Result<()> {
    write_json(json_path, mask)?;
    let mut w = csv_writer(csv_path)?;
    let d = mask.geometry.ndim();
    let mut header = vec!["cell_index".to_string()];
    header.extend((0..d).map(|k| format!("c{k}")));
    header.push("score".into());
    w.write_record(&header).map_err(|e| csv_err(csv_path, e))?;
    for i in mask.flagged_cells() {
        let mut row = vec![i.to_string()];
        row.extend(mask.geometry.center(i).iter().map(|c| format!("{c:e}")));
        row.push(format!("{:e}", mask.score[i]));
        w.write_record(&row).map_err(|e| csv_err(csv_path, e))?;
    }
    finish(csv_path, w)
}

pub fn write_ladder_csv(path: &Path, ladder: &TruncationLadder) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["k", "ell_k", "r_k", "A_k"]).map_err(|e| csv_err(path, e))?;
    for k in 0..ladder.masses.len() {
        w.write_record(&[
            k.to_string(),
            format!("{:e}", ladder.levels[k]),
            format!("{:e}", ladder.radii[k]),
            format!("{:e}", ladder.masses[k]),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// Vertex rows `t,x[,y],value_lo,value_hi`; a vertex carries the value
/// interval of the segment that ends at it (vertex 0 that of segment 0).
pub fn write_polygon_csv(path: &Path, polygon: &CharPolygon) -> Result<()> {
    let mut w = csv_writer(path)?;
    let d = polygon.points.first().map(|p| p.len()).unwrap_or(1);
    let mut header = vec!["t".to_string()];
    header.extend(AXIS_NAMES.iter().take(d).map(|s| s.to_string()));
    header.extend(["value_lo".to_string(), "value_hi".to_string()]);
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (j, (t, p)) in polygon.times.iter().zip(&polygon.points).enumerate() {
        let (lo, hi) = polygon.segment_hulls[j.saturating_sub(1).min(polygon.segment_hulls.len() - 1)];
        let mut row = vec![format!("{t:e}")];
        row.extend(p.iter().map(|x| format!("{x:e}")));
        row.extend([format!("{lo:e}"), format!("{hi:e}")]);
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

pub fn write_series_csv(path: &Path, series: &DecaySeries) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["t", "sup_norm"]).map_err(|e| csv_err(path, e))?;
    for (t, s) in series.times.iter().zip(&series.sup_norms) {
        w.write_record(&[format!("{t:e}"), format!("{s:e}")])
            .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_round_trip() {
        let g = Geometry::from_box(&[0.0, -1.0], &[1.0, 1.0], &[3, 5]).unwrap();
        let f = ScalarField::from_fn(g, 0.25, |p| p[0] - 2.0 * p[1]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.clfr");
        write_frames(&path, &[f.clone(), f.clone()]).unwrap();
        let back = read_frames(&path).unwrap();
        assert_eq!(back, vec![f.clone(), f]);
        std::fs::write(&path, b"CLFR\x01\x00").unwrap();
        assert!(matches!(read_frames(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let g = Geometry::from_box(&[0.0, -1.0], &[1.0, 1.0], &[4, 6]).unwrap();
        let f = ScalarField::from_fn(g, 0.0, |p| p[0] * p[1]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_field_csv(&path, &f).unwrap();
        let back = read_field_csv(&path, 0.0).unwrap();
        assert!(back.geometry().same_shape(f.geometry()));
        assert!(back.l1_distance(&f).unwrap() < 1e-12);
    }
}
