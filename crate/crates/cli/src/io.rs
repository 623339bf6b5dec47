//! File formats: data CSV, truth JSON, edge lists and generic JSON helpers.

use std::fs;
use std::path::Path;

use lingam_order::{DataMatrix, Dag, NoiseFamily, Ordering, WeightedDag};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::format(path, e))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// CSV with header `v0,...,v{p-1}` and one observation per row. Values use
/// the shortest representation that parses back to the same `f64`.
pub fn data_to_csv(x: &DataMatrix) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((0..x.p()).map(|k| format!("v{k}"))).expect("in-memory write");
    for i in 0..x.n() {
        w.write_record((0..x.p()).map(|k| x.get(i, k).to_string())).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_csv(path: &Path, x: &DataMatrix) -> Result<()> {
    write_file(path, &data_to_csv(x))
}

pub fn parse_csv(path: &Path, bytes: &[u8]) -> Result<DataMatrix> {
    let mut r = csv::Reader::from_reader(bytes);
    let p = r.headers().map_err(|e| CliError::format(path, e))?.len();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::format(path, e))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(k, f)| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::format(path, format!("line {}: column {k}: `{f}` is not a number", i + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != p {
            return Err(CliError::format(path, format!("line {}: expected {p} fields, found {}", i + 2, row.len())));
        }
        rows.push(row);
    }
    DataMatrix::from_rows(&rows).map_err(|e| CliError::format(path, e))
}

pub fn read_csv(path: &Path) -> Result<DataMatrix> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    parse_csv(path, &bytes)
}

/// Whitespace-separated `from to` pairs, one per line, 0-based. Blank lines
/// and lines starting with `#` are ignored.
pub fn parse_edge_list(path: &Path, text: &str) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let parsed = match f.as_slice() {
            [a, b] => a.parse::<usize>().ok().zip(b.parse::<usize>().ok()),
            _ => None,
        };
        edges.push(parsed.ok_or_else(|| CliError::format(path, format!("line {}: expected `from to`", i + 1)))?);
    }
    Ok(edges)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyJson {
    pub tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df: Option<f64>,
}

impl From<NoiseFamily> for FamilyJson {
    fn from(f: NoiseFamily) -> Self {
        FamilyJson { tag: f.tag().to_string(), df: f.df() }
    }
}

impl FamilyJson {
    pub fn to_family(&self) -> lingam_order::Result<NoiseFamily> {
        match (self.tag.as_str(), self.df) {
            ("scaled-t", Some(df)) => NoiseFamily::scaled_t(df),
            ("scaled-t", None) => Err(lingam_order::Error::InvalidParameter("scaled-t needs df".into())),
            (tag, _) => NoiseFamily::parse(tag),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// Ground truth written next to generated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub p: usize,
    pub edges: Vec<EdgeJson>,
    pub family: FamilyJson,
    pub scales: Vec<f64>,
    pub ordering: Vec<usize>,
    pub seed: u64,
}

impl TruthFile {
    pub fn new(w: &WeightedDag, ordering: &Ordering, seed: u64) -> Self {
        TruthFile {
            p: w.p(),
            edges: w.weighted_edges().into_iter().map(|(from, to, weight)| EdgeJson { from, to, weight }).collect(),
            family: w.family().into(),
            scales: w.scales().to_vec(),
            ordering: ordering.as_slice().to_vec(),
            seed,
        }
    }

    pub fn weighted_dag(&self) -> lingam_order::Result<WeightedDag> {
        let edges: Vec<(usize, usize, f64)> = self.edges.iter().map(|e| (e.from, e.to, e.weight)).collect();
        WeightedDag::from_weighted_edges(self.p, &edges, self.family.to_family()?, self.scales.clone())
    }

    pub fn dag(&self) -> lingam_order::Result<Dag> {
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e.from, e.to)).collect();
        Dag::from_edges(self.p, &edges)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let t: TruthFile = read_json(path)?;
        t.weighted_dag().map_err(|e| CliError::format(path, e))?;
        Ordering::new(t.ordering.clone()).map_err(|e| CliError::format(path, e))?;
        Ok(t)
    }
}
