//! Output files of a run.
//!
//! `discoveries.tsv` depends only on the result and the dataset, so equal
//! results give byte-identical tables. Wall time and thread count live only in
//! `summary.json`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::miner::{DiscoveryRecord, MiningConfig, MiningResult, Mode};
use crate::permutation::RNG_NAME;
use crate::trajectory::LabeledDataset;

pub const DISCOVERIES_FILE: &str = "discoveries.tsv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const GEOJSON_FILE: &str = "discoveries.geojson";

const HEADER: &str =
    "sid\ttraj_id\tstart\tend\tlength\tsup_pos\tsup_neg\tsup_total\tp_value\tadjusted_p";

/// Fields of `summary.json`, serialized in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub delta_star: f64,
    pub alpha: f64,
    #[serde(rename = "B")]
    pub perms: usize,
    #[serde(rename = "L")]
    pub min_len: usize,
    #[serde(rename = "K")]
    pub top_k: usize,
    pub eps: f64,
    pub seed: u64,
    pub rng_name: &'static str,
    pub n: usize,
    pub n_pos: usize,
    pub n_neg: usize,
    pub num_discoveries: usize,
    pub nodes_visited: u64,
    pub chains_pruned: u64,
    pub tests_evaluated: u64,
    pub discovery_nodes_visited: u64,
    pub k_index: usize,
    pub bottom_k_min_p: Vec<f64>,
    pub mode: &'static str,
    pub threads: usize,
    pub wall_time_seconds: f64,
}

impl RunSummary {
    pub fn new(
        result: &MiningResult,
        dataset: &LabeledDataset,
        config: &MiningConfig,
        wall_time_seconds: f64,
    ) -> Self {
        let d = &result.diagnostics;
        RunSummary {
            delta_star: result.delta_star,
            alpha: config.alpha,
            perms: config.perms,
            min_len: config.min_len,
            top_k: config.top_k,
            eps: config.eps,
            seed: config.seed,
            rng_name: RNG_NAME,
            n: dataset.len(),
            n_pos: dataset.n_pos(),
            n_neg: dataset.n_neg(),
            num_discoveries: result.discoveries.len(),
            nodes_visited: d.nodes_visited,
            chains_pruned: d.chains_pruned,
            tests_evaluated: d.tests_evaluated,
            discovery_nodes_visited: d.discovery_nodes_visited,
            k_index: d.k_index,
            bottom_k_min_p: d.bottom_k_min_p.clone(),
            mode: match config.mode {
                Mode::Sdsm => "mine",
                Mode::Oracle => "oracle",
            },
            threads: config.threads,
            wall_time_seconds,
        }
    }
}

fn sid_width(count: usize) -> usize {
    count.to_string().len().max(3)
}

/// Six significant digits, locale independent.
pub fn format_p(p: f64) -> String {
    format!("{p:.5e}")
}

/// The discovery table as text, rows in the result's order.
pub fn discoveries_tsv(result: &MiningResult, dataset: &LabeledDataset) -> String {
    let width = sid_width(result.discoveries.len());
    let mut out = String::with_capacity(64 * (result.discoveries.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for (i, d) in result.discoveries.iter().enumerate() {
        let w = d.window;
        out.push_str(&format!(
            "{:0width$}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            i + 1,
            dataset.trajectory(w.traj).id,
            w.start,
            w.end,
            w.len(),
            d.sup_pos,
            d.sup_neg,
            d.sup_total,
            format_p(d.p_value),
            format_p(d.adjusted_p),
        ));
    }
    out
}

fn feature(sid: String, d: &DiscoveryRecord, dataset: &LabeledDataset) -> serde_json::Value {
    let w = d.window;
    let coords: Vec<[f64; 2]> = dataset.points(w.traj)[w.range()]
        .iter()
        .map(|p| [p.x, p.y])
        .collect();
    json!({
        "type": "Feature",
        "geometry": { "type": "LineString", "coordinates": coords },
        "properties": {
            "sid": sid,
            "traj_id": dataset.trajectory(w.traj).id,
            "start": w.start,
            "end": w.end,
            "length": w.len(),
            "sup_pos": d.sup_pos,
            "sup_neg": d.sup_neg,
            "sup_total": d.sup_total,
            "p_value": d.p_value,
            "adjusted_p": d.adjusted_p,
        },
    })
}

pub fn discoveries_geojson(result: &MiningResult, dataset: &LabeledDataset) -> serde_json::Value {
    let width = sid_width(result.discoveries.len());
    let features: Vec<_> = result
        .discoveries
        .iter()
        .enumerate()
        .map(|(i, d)| feature(format!("{:0width$}", i + 1), d, dataset))
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let mut w = File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))?;
    w.write_all(contents)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn pretty(value: &impl Serialize) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report values serialize");
    bytes.push(b'\n');
    bytes
}

/// Writes `discoveries.tsv`, `summary.json` and, if asked, `discoveries.geojson`
/// into `out_dir`, creating it when missing.
pub fn write_reports(
    result: &MiningResult,
    dataset: &LabeledDataset,
    config: &MiningConfig,
    out_dir: impl AsRef<Path>,
    wall_time_seconds: f64,
    geojson: bool,
) -> Result<()> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(
        &dir.join(DISCOVERIES_FILE),
        discoveries_tsv(result, dataset).as_bytes(),
    )?;
    let summary = RunSummary::new(result, dataset, config, wall_time_seconds);
    write_file(&dir.join(SUMMARY_FILE), &pretty(&summary))?;
    if geojson {
        write_file(
            &dir.join(GEOJSON_FILE),
            &pretty(&discoveries_geojson(result, dataset)),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::miner::Diagnostics;
    use crate::neighborhood::tests::worked_example;
    use crate::trajectory::SubTrajRef;

    fn result(discoveries: Vec<DiscoveryRecord>) -> MiningResult {
        MiningResult {
            delta_star: 0.004,
            discoveries,
            diagnostics: Diagnostics {
                k_index: 51,
                bottom_k_min_p: vec![0.001, 0.004],
                ..Diagnostics::default()
            },
        }
    }

    fn one() -> DiscoveryRecord {
        DiscoveryRecord {
            window: SubTrajRef::new(0, 1, 3),
            sup_pos: 0,
            sup_neg: 2,
            sup_total: 2,
            p_value: 1.0 / 3.0,
            adjusted_p: 0.123456789,
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let ds = worked_example();
        let tsv = discoveries_tsv(&result(vec![]), &ds);
        assert_eq!(tsv, format!("{HEADER}\n"));
        let s = RunSummary::new(&result(vec![]), &ds, &MiningConfig::default(), 0.0);
        assert_eq!(s.num_discoveries, 0);
    }

    #[test]
    fn single_row_format() {
        let ds = worked_example();
        let tsv = discoveries_tsv(&result(vec![one()]), &ds);
        let row = tsv.lines().nth(1).unwrap();
        assert_eq!(row, "001\t1\t1\t3\t3\t0\t2\t2\t3.33333e-1\t1.23457e-1");
    }

    #[test]
    fn sid_width_grows() {
        assert_eq!(sid_width(0), 3);
        assert_eq!(sid_width(999), 3);
        assert_eq!(sid_width(1000), 4);
    }

    #[test]
    fn summary_key_order() {
        let ds = worked_example();
        let s = RunSummary::new(&result(vec![one()]), &ds, &MiningConfig::default(), 1.5);
        let text = serde_json::to_string(&s).unwrap();
        let keys = [
            "delta_star",
            "alpha",
            "\"B\"",
            "\"L\"",
            "\"K\"",
            "eps",
            "seed",
            "rng_name",
            "\"n\"",
            "n_pos",
            "n_neg",
            "num_discoveries",
            "nodes_visited",
            "chains_pruned",
            "tests_evaluated",
            "bottom_k_min_p",
            "wall_time_seconds",
        ];
        let positions: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{text}");
        assert!(text.contains("\"k_index\":51"));
    }

    #[test]
    fn rewrite_is_byte_identical() {
        let ds = worked_example();
        let r = result(vec![one()]);
        let dir = tempfile::tempdir().unwrap();
        let cfg = MiningConfig::default();
        write_reports(&r, &ds, &cfg, dir.path().join("a"), 0.1, true).unwrap();
        write_reports(&r, &ds, &cfg, dir.path().join("b"), 0.1, true).unwrap();
        for f in [DISCOVERIES_FILE, SUMMARY_FILE, GEOJSON_FILE] {
            let a = fs::read(dir.path().join("a").join(f)).unwrap();
            let b = fs::read(dir.path().join("b").join(f)).unwrap();
            assert_eq!(a, b, "{f}");
        }
        let geo: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join("a").join(GEOJSON_FILE)).unwrap())
                .unwrap();
        let coords = &geo["features"][0]["geometry"]["coordinates"];
        assert_eq!(coords.as_array().unwrap().len(), 3);
    }

    #[test]
    fn unwritable_directory() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, "x").unwrap();
        let err = write_reports(
            &result(vec![]),
            &worked_example(),
            &MiningConfig::default(),
            &file,
            0.0,
            false,
        );
        assert!(matches!(err, Err(Error::Io { .. })));
    }
}
