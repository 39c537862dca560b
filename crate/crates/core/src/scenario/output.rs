use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{IrsRow, LatencyRow, RateMap, ScenarioConfig, ScenarioError, SchemeSummary};

/// A named artifact; `emit_outputs` writes it under the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

impl OutputFile {
    pub fn new(name: &str, contents: String) -> Self {
        Self { name: name.to_owned(), contents }
    }
}

pub fn rate_map_csv(map: &RateMap) -> String {
    let mut s = String::from("x,y,scheme,rate_bps_hz\n");
    for c in &map.cells {
        for &scheme in &map.schemes {
            let _ = writeln!(s, "{},{},{},{}", c.x, c.y, scheme.name(), c.rates[scheme.index()]);
        }
    }
    s
}

pub fn summary_csv(rows: &[SchemeSummary]) -> String {
    let mut s = String::from("scheme,mean_rate_bps_hz,fallback_fraction,drops\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", r.scheme.name(), r.mean_rate_bps_hz, r.fallback_fraction, r.drops);
    }
    s
}

pub fn latency_csv(rows: &[LatencyRow]) -> String {
    let mut s = String::from("antennas,scheme,mean_rate_bps_hz,overhead_s,latency_s\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.antennas, r.scheme.name(), r.mean_rate_bps_hz, r.overhead_s, r.latency_s);
    }
    s
}

pub fn irs_csv(rows: &[IrsRow]) -> String {
    let mut s = String::from("elements,scheme,mean_nmse\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{}", r.elements, r.scheme.name(), r.mean_nmse);
    }
    s
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    outputs: Vec<&'a str>,
    config: &'a ScenarioConfig,
}

/// Run record: tool version, command, seed, output names and the full
/// effective configuration. Contains nothing time- or host-dependent.
pub fn manifest_json(command: &str, cfg: &ScenarioConfig, outputs: &[OutputFile]) -> String {
    let m = Manifest {
        tool: "vbm",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cfg.seed,
        outputs: outputs.iter().map(|o| o.name.as_str()).collect(),
        config: cfg,
    };
    let mut s = serde_json::to_string_pretty(&m).expect("manifest is plain data");
    s.push('\n');
    s
}

pub fn emit_outputs(files: &[OutputFile], out_dir: &Path) -> Result<(), ScenarioError> {
    fs::create_dir_all(out_dir)?;
    for f in files {
        fs::write(out_dir.join(&f.name), &f.contents)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{DropOutcome, Scheme};
    use super::*;

    #[test]
    fn empty_map_is_header_only() {
        let map = RateMap { cells: vec![], schemes: Scheme::ALL.to_vec() };
        assert_eq!(rate_map_csv(&map), "x,y,scheme,rate_bps_hz\n");
    }

    #[test]
    fn rows_per_cell_and_scheme() {
        let cell = DropOutcome { x: 1.0, y: -2.5, rates: [1.0, 2.0, 3.0, 4.0, 5.0], fell_back: [false; 5] };
        let map = RateMap { cells: vec![cell; 4], schemes: Scheme::ALL.to_vec() };
        let csv = rate_map_csv(&map);
        assert_eq!(csv.lines().count(), 1 + 4 * 5);
        assert_eq!(csv.lines().nth(5).unwrap(), "1,-2.5,5g-bm,5");
    }

    #[test]
    fn manifest_is_stable_and_lists_outputs() {
        let cfg = ScenarioConfig::default();
        let files = [OutputFile::new("a.csv", String::new())];
        let a = manifest_json("rate-map", &cfg, &files);
        assert_eq!(a, manifest_json("rate-map", &cfg, &files));
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["outputs"][0], "a.csv");
        assert_eq!(v["config"]["seed"], 1);
    }

    #[test]
    fn emit_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let files = [OutputFile::new("x.csv", "a\n".into())];
        emit_outputs(&files, &dir.path().join("nested")).unwrap();
        assert_eq!(std::fs::read_to_string(dir.path().join("nested/x.csv")).unwrap(), "a\n");
    }
}
