//! CSV input formats.
//!
//! Trajectories: header `traj_id,seq,x,y`, `seq` running `1..=m` within each
//! trajectory. Labels: header `traj_id,label` with label `+1`, `1` or `-1`.
//! Manifests of planted windows: header `traj_id,start,end` (1-based,
//! inclusive).

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::trajectory::{Label, LabeledDataset, Point, Trajectory};

fn reader(path: &Path, expected: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| Error::input(path, Some(1), format!("unreadable header: {e}")))?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::input(
            path,
            Some(1),
            format!("expected header `{}`", expected.join(",")),
        ));
    }
    Ok(rdr)
}

fn records(
    path: &Path,
    rdr: csv::Reader<File>,
    width: usize,
) -> impl Iterator<Item = Result<(usize, csv::StringRecord)>> + '_ {
    rdr.into_records().map(move |rec| {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize);
            Error::input(path, line, format!("malformed row: {e}"))
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != width {
            return Err(Error::input(
                path,
                Some(line),
                format!(
                    "malformed row: expected {width} fields, found {}",
                    rec.len()
                ),
            ));
        }
        Ok((line, rec))
    })
}

fn field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    rec: &csv::StringRecord,
    i: usize,
    name: &str,
) -> Result<T> {
    rec[i].parse().map_err(|_| {
        Error::input(
            path,
            Some(line),
            format!("malformed row: bad {name} `{}`", &rec[i]),
        )
    })
}

/// Reads and validates a trajectory file and its labels file.
pub fn load_dataset(
    traj_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<LabeledDataset> {
    let traj_path = traj_path.as_ref();
    let labels_path = labels_path.as_ref();

    // traj_id -> (first line, seq -> point)
    let mut rows: BTreeMap<u64, (usize, BTreeMap<u64, Point>)> = BTreeMap::new();
    let rdr = reader(traj_path, &["traj_id", "seq", "x", "y"])?;
    for rec in records(traj_path, rdr, 4) {
        let (line, rec) = rec?;
        let id: u64 = field(traj_path, line, &rec, 0, "traj_id")?;
        let seq: u64 = field(traj_path, line, &rec, 1, "seq")?;
        let x: f64 = field(traj_path, line, &rec, 2, "x")?;
        let y: f64 = field(traj_path, line, &rec, 3, "y")?;
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::input(traj_path, Some(line), "non-finite coordinate"));
        }
        let points = &mut rows.entry(id).or_insert_with(|| (line, BTreeMap::new())).1;
        if points.insert(seq, Point::new(x, y)).is_some() {
            return Err(Error::input(
                traj_path,
                Some(line),
                format!("duplicate (traj_id, seq) = ({id}, {seq})"),
            ));
        }
    }

    let mut labels: BTreeMap<u64, (usize, Label)> = BTreeMap::new();
    let rdr = reader(labels_path, &["traj_id", "label"])?;
    for rec in records(labels_path, rdr, 2) {
        let (line, rec) = rec?;
        let id: u64 = field(labels_path, line, &rec, 0, "traj_id")?;
        let label = Label::parse(&rec[1]).ok_or_else(|| {
            Error::input(
                labels_path,
                Some(line),
                format!("invalid label `{}`", &rec[1]),
            )
        })?;
        match labels.entry(id) {
            Entry::Vacant(v) => {
                v.insert((line, label));
            }
            Entry::Occupied(_) => {
                return Err(Error::input(
                    labels_path,
                    Some(line),
                    format!("duplicate label for trajectory {id}"),
                ))
            }
        }
    }

    let mut trajectories = Vec::with_capacity(rows.len());
    let mut assigned = Vec::with_capacity(rows.len());
    for (id, (line, points)) in rows {
        if let Some((_, &seq)) = points
            .keys()
            .enumerate()
            .find(|&(i, &seq)| seq != i as u64 + 1)
        {
            return Err(Error::input(
                traj_path,
                Some(line),
                format!("trajectory {id}: seq must run 1..m without gaps (unexpected seq {seq})"),
            ));
        }
        let Some(&(_, label)) = labels.get(&id) else {
            return Err(Error::input(
                traj_path,
                Some(line),
                format!("trajectory {id} has no entry in {}", labels_path.display()),
            ));
        };
        trajectories.push(Trajectory {
            id,
            points: points.into_values().collect(),
        });
        assigned.push(label);
    }
    if let Some((id, (line, _))) = labels
        .iter()
        .find(|(id, _)| !trajectories.iter().any(|t| t.id == **id))
    {
        return Err(Error::input(
            labels_path,
            Some(*line),
            format!("trajectory {id} has no points in {}", traj_path.display()),
        ));
    }

    LabeledDataset::new(trajectories, assigned).map_err(|e| match e {
        Error::Dataset(msg) => Error::input(labels_path, None, msg),
        other => other,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes a dataset in the formats read by [`load_dataset`].
pub fn write_dataset(
    dataset: &LabeledDataset,
    traj_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<()> {
    let traj_path = traj_path.as_ref();
    let labels_path = labels_path.as_ref();
    let write = |path: &Path, f: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| {
        let mut w = create(path)?;
        f(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    };
    write(traj_path, &|w| {
        writeln!(w, "traj_id,seq,x,y")?;
        for t in dataset.trajectories() {
            for (i, p) in t.points.iter().enumerate() {
                writeln!(w, "{},{},{},{}", t.id, i + 1, p.x, p.y)?;
            }
        }
        Ok(())
    })?;
    write(labels_path, &|w| {
        writeln!(w, "traj_id,label")?;
        for (t, l) in dataset.trajectories().iter().zip(dataset.labels()) {
            writeln!(w, "{},{}", t.id, l)?;
        }
        Ok(())
    })
}

/// A planted window, in external ids and 1-based indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ManifestRow {
    pub traj_id: u64,
    pub start: usize,
    pub end: usize,
}

pub fn write_manifest(rows: &[ManifestRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let res = (|| {
        writeln!(w, "traj_id,start,end")?;
        for r in rows {
            writeln!(w, "{},{},{}", r.traj_id, r.start, r.end)?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRow>> {
    let path = path.as_ref();
    let rdr = reader(path, &["traj_id", "start", "end"])?;
    records(path, rdr, 3)
        .map(|rec| {
            let (line, rec) = rec?;
            Ok(ManifestRow {
                traj_id: field(path, line, &rec, 0, "traj_id")?,
                start: field(path, line, &rec, 1, "start")?,
                end: field(path, line, &rec, 2, "end")?,
            })
        })
        .collect()
}
