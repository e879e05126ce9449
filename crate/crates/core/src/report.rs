//! Rollups and output documents: per-cell verdicts, the text summary
//! table, the JSON report, and the CSV sidecars.
//!
//! The interesting unit of blame is the *master cell*, not the testcell:
//! a violation inside a boundary band is charged to every master whose
//! outline touches it, and a cell with any such charge is problematic.
//! Violations away from the boundary bands are congestion noise and do
//! not count against a cell.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::drc::{DrcResult, RuleKind};
use crate::library::{LibraryProfile, TechRules};
use crate::route::rng::fnv1a64;

/// Per-master rollup over every checked testcell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CellVerdict {
    pub cell: String,
    /// Boundary violations charged to this master.
    pub drc_count: usize,
    /// Display names of the rules involved, sorted and unique.
    pub types: Vec<String>,
    /// Every master that shares a charged violation with this one
    /// (including itself), sorted and unique.
    pub partners: Vec<String>,
    pub problematic: bool,
}

/// Charge boundary violations to their master cells. Every library cell
/// gets a verdict (clean cells included), sorted by name.
pub fn cell_verdicts(
    results: &[DrcResult],
    library_cells: &[String],
    tech: &TechRules,
) -> Vec<CellVerdict> {
    #[derive(Default)]
    struct Tally {
        count: usize,
        types: BTreeSet<&'static str>,
        partners: BTreeSet<String>,
    }
    let mut tallies: BTreeMap<&str, Tally> = BTreeMap::new();
    for result in results {
        for v in &result.violations {
            if !v.at_boundary {
                continue;
            }
            let display = v.rule.display(tech, v.layer);
            for master in &v.masters {
                let tally = tallies.entry(master.as_str()).or_default();
                tally.count += 1;
                tally.types.insert(display);
                tally.partners.extend(v.masters.iter().cloned());
            }
        }
    }
    let mut names: Vec<&String> = library_cells.iter().collect();
    names.sort();
    names.dedup();
    names
        .into_iter()
        .map(|name| match tallies.get(name.as_str()) {
            Some(tally) => CellVerdict {
                cell: name.clone(),
                drc_count: tally.count,
                types: tally.types.iter().map(|t| t.to_string()).collect(),
                partners: tally.partners.iter().cloned().collect(),
                problematic: tally.count > 0,
            },
            None => CellVerdict {
                cell: name.clone(),
                drc_count: 0,
                types: Vec::new(),
                partners: Vec::new(),
                problematic: false,
            },
        })
        .collect()
}

fn braces(items: &[String]) -> String {
    format!("{{{}}}", items.join(", "))
}

/// The human-readable summary table: clean cells first, then each
/// problematic cell with its count, the masters it clashes with, and the
/// rule types on a continuation line.
pub fn drc_summary(verdicts: &[CellVerdict]) -> String {
    let mut clean: Vec<&CellVerdict> = verdicts.iter().filter(|v| !v.problematic).collect();
    let mut dirty: Vec<&CellVerdict> = verdicts.iter().filter(|v| v.problematic).collect();
    clean.sort_by(|a, b| a.cell.cmp(&b.cell));
    dirty.sort_by(|a, b| a.cell.cmp(&b.cell));

    let mut out = String::new();
    out.push_str("=====\n");
    out.push_str("SCRIPT-Info: Printing DRC Summary ...\n");
    out.push_str("=====\n");
    out.push_str(&format!(
        "##### {} cells without DRC errors #####\n",
        clean.len()
    ));
    out.push_str("-----\n");
    out.push_str(
        "Cell                DRC count  Master Cells with DRC                DRC Types\n",
    );
    out.push_str("-----\n");
    for v in &clean {
        out.push_str(&format!("{:<19} {:>9}\n", v.cell, v.drc_count));
    }
    out.push_str(&format!(
        "##### {} cells with DRC errors #####\n",
        dirty.len()
    ));
    for v in &dirty {
        out.push_str(&format!(
            "{:<19} {:>9}  {}\n",
            v.cell,
            v.drc_count,
            braces(&v.partners)
        ));
        out.push_str(&format!("{:52}{}\n", "", braces(&v.types)));
    }
    out
}

/// Everything that pins down a run: inputs, knobs, and content hashes.
/// `manifest_hash` covers all other fields, so two reports with equal
/// manifests were produced by equivalent runs.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub mode: String,
    pub min_layer: Option<String>,
    pub max_layer: Option<String>,
    pub dpt: String,
    pub rule_inflation: f64,
    pub boundary_margin: Option<i64>,
    pub pin_pairing: String,
    pub net_degree: u32,
    pub strap_density: f64,
    pub rule_deck_hash: String,
    pub cell_file_hash: String,
    pub manifest_hash: String,
}

impl RunManifest {
    /// Fill `manifest_hash` from the canonical serialization of every
    /// other field. Idempotent.
    pub fn seal(&mut self) {
        self.manifest_hash.clear();
        let canonical = serde_json::to_string(self).expect("manifest serializes");
        self.manifest_hash = content_hash(canonical.as_bytes());
    }
}

/// Stable hex content hash used for the manifest and input files.
pub fn content_hash(bytes: &[u8]) -> String {
    format!("{:016x}", fnv1a64(bytes))
}

#[derive(Serialize)]
struct ViolationReport<'a> {
    id: usize,
    rule: RuleKind,
    display: &'static str,
    layer: Option<&'a str>,
    location: [i64; 4],
    nets: &'a [String],
    at_boundary: bool,
    masters: &'a [String],
    shared: bool,
}

#[derive(Serialize)]
struct UnroutedReport<'a> {
    net: &'a str,
    reason: crate::route::UnroutedReason,
}

#[derive(Serialize)]
struct TestcellReport<'a> {
    name: &'a str,
    kind: crate::abutment::TestcellKind,
    instances: usize,
    unrouted: Vec<UnroutedReport<'a>>,
    violations: Vec<ViolationReport<'a>>,
}

#[derive(Serialize)]
struct Totals {
    violations: usize,
    boundary_violations: usize,
    problematic_cells: usize,
}

#[derive(Serialize)]
struct Report<'a> {
    manifest: &'a RunManifest,
    testcells: Vec<TestcellReport<'a>>,
    cells: &'a [CellVerdict],
    totals: Totals,
}

/// The machine-readable report. Violation ids are assigned here,
/// sequentially across the whole run.
pub fn json_report(
    manifest: &RunManifest,
    results: &[DrcResult],
    verdicts: &[CellVerdict],
    tech: &TechRules,
) -> String {
    let mut next_id = 0usize;
    let testcells: Vec<TestcellReport> = results
        .iter()
        .map(|r| TestcellReport {
            name: &r.testcell,
            kind: r.kind,
            instances: r.instances,
            unrouted: r
                .unrouted
                .iter()
                .map(|u| UnroutedReport {
                    net: &u.net,
                    reason: u.reason,
                })
                .collect(),
            violations: r
                .violations
                .iter()
                .map(|v| {
                    next_id += 1;
                    ViolationReport {
                        id: next_id,
                        rule: v.rule,
                        display: v.rule.display(tech, v.layer),
                        layer: v.layer.map(|l| tech.layers[l].name.as_str()),
                        location: [
                            v.location.x_lo,
                            v.location.y_lo,
                            v.location.x_hi,
                            v.location.y_hi,
                        ],
                        nets: &v.nets,
                        at_boundary: v.at_boundary,
                        masters: &v.masters,
                        shared: v.shared,
                    }
                })
                .collect(),
        })
        .collect();
    let totals = Totals {
        violations: results.iter().map(|r| r.violations.len()).sum(),
        boundary_violations: results
            .iter()
            .flat_map(|r| &r.violations)
            .filter(|v| v.at_boundary)
            .count(),
        problematic_cells: verdicts.iter().filter(|v| v.problematic).count(),
    };
    let report = Report {
        manifest,
        testcells,
        cells: verdicts,
        totals,
    };
    serde_json::to_string_pretty(&report).expect("report serializes")
}

/// Cell-width histogram rows, `bucket,fraction`, no header.
pub fn width_histogram_csv(profile: &LibraryProfile) -> String {
    let mut out = String::new();
    for (bucket, fraction) in &profile.histogram {
        out.push_str(&format!("{bucket},{fraction}\n"));
    }
    out
}

/// Per-cell dimensions and pin list.
pub fn profile_csv(profile: &LibraryProfile) -> String {
    let mut out = String::from("cell,width,height,height_rows,pins\n");
    for (name, cell) in &profile.cells {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            name,
            cell.width,
            cell.height,
            cell.height_rows,
            cell.pins.join(";")
        ));
    }
    out
}

/// One timing row per checked testcell.
#[derive(Clone, Debug)]
pub struct TimingRow {
    pub testcell: String,
    pub route_ms: f64,
    pub check_ms: f64,
    pub violations: usize,
}

pub fn timings_csv(rows: &[TimingRow]) -> String {
    let mut out = String::from("testcell,route_ms,check_ms,violations\n");
    for row in rows {
        out.push_str(&format!(
            "{},{:.3},{:.3},{}\n",
            row.testcell, row.route_ms, row.check_ms, row.violations
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abutment::TestcellKind;
    use crate::drc::Violation;
    use crate::geom::Rect;
    use crate::library::{profile_library, Cell, Direction, LayerKind, LayerRule};

    fn tech() -> TechRules {
        let layer = |name: &str, kind| LayerRule {
            name: name.into(),
            kind,
            direction: Direction::Horizontal,
            pitch: 200,
            min_width: 60,
            min_spacing: 60,
            same_net_spacing: 60,
            dp_spacing: 0,
            via_enclosure: 10,
            min_enclosed_width: 60,
        };
        TechRules {
            units_per_micron: 1000,
            site_row_height: 1800,
            layers: vec![
                layer("M1", LayerKind::Routing),
                layer("V1", LayerKind::Cut),
                layer("M2", LayerKind::Routing),
            ],
        }
    }

    fn violation(
        rule: RuleKind,
        layer: Option<usize>,
        at_boundary: bool,
        masters: &[&str],
    ) -> Violation {
        Violation {
            rule,
            layer,
            location: Rect::new(0, 0, 10, 10),
            nets: vec!["net1".into()],
            at_boundary,
            masters: masters.iter().map(|m| m.to_string()).collect(),
            shared: masters.len() > 1,
        }
    }

    fn result(testcell: &str, violations: Vec<Violation>) -> DrcResult {
        DrcResult {
            testcell: testcell.into(),
            kind: TestcellKind::TypeAa,
            instances: 4,
            violations,
            unrouted: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    fn lib(names: &[&str]) -> Vec<String> {
        names.iter().map(|n| n.to_string()).collect()
    }

    #[test]
    fn verdicts_charge_boundary_violations_to_every_touched_master() {
        let results = vec![
            result(
                "scell_A_B",
                vec![
                    violation(RuleKind::DiffNetSpacing, Some(0), true, &["A", "B"]),
                    violation(RuleKind::Open, None, true, &["A"]),
                    // interior violations never charge anyone
                    violation(RuleKind::Short, Some(0), false, &["B"]),
                ],
            ),
            result(
                "scell_A",
                vec![violation(RuleKind::DiffNetSpacing, Some(0), true, &["A"])],
            ),
        ];
        let verdicts = cell_verdicts(&results, &lib(&["A", "B", "C"]), &tech());
        assert_eq!(verdicts.len(), 3);
        let a = &verdicts[0];
        assert_eq!(a.cell, "A");
        assert_eq!(a.drc_count, 3);
        assert_eq!(a.types, vec!["Diff net spacing", "Open"]);
        assert_eq!(a.partners, vec!["A", "B"]);
        assert!(a.problematic);
        let b = &verdicts[1];
        assert_eq!(b.drc_count, 1);
        assert_eq!(b.types, vec!["Diff net spacing"]);
        assert!(b.problematic);
        let c = &verdicts[2];
        assert_eq!(c.drc_count, 0);
        assert!(!c.problematic);
        assert!(c.types.is_empty());
    }

    #[test]
    fn summary_prints_clean_then_dirty_with_type_lines() {
        let results = vec![result(
            "scell_NAND_X",
            vec![
                violation(RuleKind::DiffNetSpacing, Some(0), true, &["NAND"]),
                violation(RuleKind::Open, None, true, &["NAND"]),
            ],
        )];
        let verdicts = cell_verdicts(&results, &lib(&["BUF", "INV", "NAND"]), &tech());
        let summary = drc_summary(&verdicts);
        // backslash continuations would strip the type line's indent, so
        // the golden is joined from explicit lines
        let expected = [
            "=====",
            "SCRIPT-Info: Printing DRC Summary ...",
            "=====",
            "##### 2 cells without DRC errors #####",
            "-----",
            "Cell                DRC count  Master Cells with DRC                DRC Types",
            "-----",
            "BUF                         0",
            "INV                         0",
            "##### 1 cells with DRC errors #####",
            "NAND                        2  {NAND}",
            "                                                    {Diff net spacing, Open}",
            "",
        ]
        .join("\n");
        assert_eq!(summary, expected);
    }

    #[test]
    fn summary_with_no_dirty_cells_ends_after_the_zero_header() {
        let verdicts = cell_verdicts(&[], &lib(&["X"]), &tech());
        let summary = drc_summary(&verdicts);
        assert!(summary.ends_with("##### 0 cells with DRC errors #####\n"));
        assert!(summary.contains("X                           0\n"));
    }

    fn manifest() -> RunManifest {
        RunManifest {
            tool: "abutcheck".into(),
            version: "0.1.0".into(),
            seed: 7,
            mode: "all".into(),
            min_layer: None,
            max_layer: None,
            dpt: "off".into(),
            rule_inflation: 1.0,
            boundary_margin: None,
            pin_pairing: "random".into(),
            net_degree: 2,
            strap_density: 1.0,
            rule_deck_hash: content_hash(b"deck"),
            cell_file_hash: content_hash(b"cells"),
            manifest_hash: String::new(),
        }
    }

    #[test]
    fn manifest_seal_is_idempotent_and_input_sensitive() {
        let mut a = manifest();
        a.seal();
        let first = a.manifest_hash.clone();
        assert_eq!(first.len(), 16);
        a.seal();
        assert_eq!(a.manifest_hash, first);
        let mut b = manifest();
        b.seed = 8;
        b.seal();
        assert_ne!(b.manifest_hash, first);
    }

    #[test]
    fn json_report_assigns_sequential_ids_and_resolves_layers() {
        let results = vec![
            result(
                "scell_A",
                vec![
                    violation(RuleKind::DiffNetSpacing, Some(2), true, &["A"]),
                    violation(RuleKind::Open, None, false, &["A"]),
                ],
            ),
            result(
                "scell_B",
                vec![violation(RuleKind::Short, Some(0), false, &["B"])],
            ),
        ];
        let verdicts = cell_verdicts(&results, &lib(&["A", "B"]), &tech());
        let mut m = manifest();
        m.seal();
        let text = json_report(&m, &results, &verdicts, &tech());
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["manifest"]["tool"], "abutcheck");
        assert_eq!(doc["manifest"]["manifest_hash"], m.manifest_hash.as_str());
        let tcs = doc["testcells"].as_array().unwrap();
        assert_eq!(tcs.len(), 2);
        assert_eq!(tcs[0]["kind"], "TYPE_AA");
        assert_eq!(tcs[0]["violations"][0]["id"], 1);
        assert_eq!(tcs[0]["violations"][1]["id"], 2);
        assert_eq!(tcs[1]["violations"][0]["id"], 3);
        assert_eq!(tcs[0]["violations"][0]["layer"], "M2");
        assert_eq!(tcs[0]["violations"][0]["rule"], "DiffNetSpacing");
        assert_eq!(tcs[0]["violations"][0]["display"], "Diff net spacing");
        assert!(tcs[0]["violations"][1]["layer"].is_null());
        assert_eq!(
            tcs[0]["violations"][0]["location"],
            serde_json::json!([0, 0, 10, 10])
        );
        assert_eq!(doc["totals"]["violations"], 3);
        assert_eq!(doc["totals"]["boundary_violations"], 1);
        assert_eq!(doc["totals"]["problematic_cells"], 1);
        assert_eq!(doc["cells"][0]["cell"], "A");
    }

    #[test]
    fn histogram_and_profile_csv_round_numbers_exactly() {
        let cell = |name: &str, width: i64| Cell {
            name: name.into(),
            width,
            height: 1800,
            height_rows: 1,
            pins: Vec::new(),
            obstructions: Vec::new(),
        };
        let cells = vec![cell("A", 600), cell("B", 600), cell("C", 1200), cell("D", 1800)];
        let profile = profile_library(&cells);
        let csv = width_histogram_csv(&profile);
        assert_eq!(csv, "1,0.5\n2,0.25\n3,0.25\n");
        let pcsv = profile_csv(&profile);
        assert!(pcsv.starts_with("cell,width,height,height_rows,pins\n"));
        assert!(pcsv.contains("A,600,1800,1,\n"));
    }

    #[test]
    fn timing_rows_format_milliseconds() {
        let rows = vec![TimingRow {
            testcell: "scell_A".into(),
            route_ms: 12.3456,
            check_ms: 0.5,
            violations: 4,
        }];
        assert_eq!(
            timings_csv(&rows),
            "testcell,route_ms,check_ms,violations\nscell_A,12.346,0.500,4\n"
        );
    }
}
