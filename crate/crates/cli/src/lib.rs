//! Command implementations behind the `abutcheck` binary.
//!
//! Each subcommand is a thin orchestration layer over `abutcheck-core`:
//! parse the technology deck and cell library, enumerate abutment
//! testcells, route them in parallel, run the rule checks, and write the
//! report files. Everything here is deterministic for a given seed, so
//! `--jobs` only changes wall time, never output bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use abutcheck_core::abutment::{enumerate_library, EnumerationMode, Testcell};
use abutcheck_core::design_io::{def_for_testcell, def_for_top, emit_def, emit_netlist};
use abutcheck_core::drc::{check_design, DptMode, DrcOptions, DrcResult};
use abutcheck_core::library::{parse_cells, parse_tech, profile_library, Cell, TechRules};
use abutcheck_core::report::{
    cell_verdicts, content_hash, drc_summary, json_report, profile_csv, timings_csv,
    width_histogram_csv, RunManifest, TimingRow,
};
use abutcheck_core::route::{route_testcell, PinPairing, RouteOptions, RoutedDesign};
use abutcheck_core::{Diagnostic, Severity};

/// Exit status when every testcell routed and checked clean.
pub const EXIT_CLEAN: i32 = 0;
/// Exit status when the run finished but found violations.
pub const EXIT_VIOLATIONS: i32 = 1;
/// Exit status for configuration or input errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "abutcheck",
    version,
    about = "Find standard cells whose pin placement breaks down when cells abut",
    long_about = "Enumerates the abutment testcells of a standard-cell library \
                  (every cell against itself and every pair, with mirroring), \
                  stress-routes them with randomized nets and power straps, runs \
                  geometric and double-patterning checks, and reports which \
                  library cells are responsible for boundary violations."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Summarize the library: cell sizes, pins, width histogram
    Profile(ProfileCmd),
    /// Enumerate testcells and write netlist + placement files
    Generate(GenerateCmd),
    /// Route every testcell and run the rule checks
    Check(CheckCmd),
    /// Generate, route, and check in one invocation
    Run(CheckCmd),
}

#[derive(Args, Debug, Clone)]
pub struct InputOpts {
    /// Cell library file (LEF-style macros)
    #[arg(long, env = "ABUTCHECK_CELLS")]
    pub cells: PathBuf,
    /// Technology rule deck
    #[arg(long, env = "ABUTCHECK_TECH")]
    pub tech: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct EnumOpts {
    /// Which testcell families to build
    #[arg(long, value_enum, default_value_t = ModeArg::All, env = "ABUTCHECK_MODE")]
    pub mode: ModeArg,
    /// Module name for the combined top-level design
    #[arg(long, default_value = "TOP", env = "ABUTCHECK_TOP_NAME")]
    pub top_name: String,
}

#[derive(Args, Debug, Clone)]
pub struct RouteOpts {
    /// Base seed for net assignment and strap placement
    #[arg(long, default_value_t = 1, env = "ABUTCHECK_SEED")]
    pub seed: u64,
    /// Lowest routing layer of the window, by name (default: derived)
    #[arg(long, env = "ABUTCHECK_MIN_LAYER")]
    pub min_layer: Option<String>,
    /// Highest routing layer of the window, by name (default: derived)
    #[arg(long, env = "ABUTCHECK_MAX_LAYER")]
    pub max_layer: Option<String>,
    /// How signal pins are grouped into nets
    #[arg(long, value_enum, default_value_t = PairingArg::Random, env = "ABUTCHECK_PIN_PAIRING")]
    pub pin_pairing: PairingArg,
    /// Terminals per randomized net
    #[arg(long, default_value_t = 2, env = "ABUTCHECK_NET_DEGREE")]
    pub net_degree: usize,
    /// Fraction of candidate power straps kept (0 disables straps)
    #[arg(long, default_value_t = 1.0, env = "ABUTCHECK_STRAP_DENSITY")]
    pub strap_density: f64,
    /// Extra maze cost per via
    #[arg(long, default_value_t = 5, env = "ABUTCHECK_VIA_COST")]
    pub via_cost: u64,
    /// Negotiation passes before a net is declared congested
    #[arg(long, default_value_t = 20, env = "ABUTCHECK_MAX_RIPUP")]
    pub max_ripup: u32,
    /// Empty margin around each testcell die, in database units
    #[arg(long, default_value_t = 0, env = "ABUTCHECK_DIE_MARGIN")]
    pub die_margin: i64,
}

#[derive(Args, Debug, Clone)]
pub struct DrcOpts {
    /// Double-patterning check mode
    #[arg(long, value_enum, default_value_t = DptArg::Off, env = "ABUTCHECK_DPT")]
    pub dpt: DptArg,
    /// Scale factor >= 1.0 applied to the distance rules
    #[arg(long, default_value_t = 1.0, env = "ABUTCHECK_RULE_INFLATION")]
    pub rule_inflation: f64,
    /// Half-width of the abutment boundary bands, in database units
    /// (default: twice the inflated spacing of the lowest window layer)
    #[arg(long, env = "ABUTCHECK_BOUNDARY_MARGIN")]
    pub boundary_margin: Option<i64>,
    /// Drop double-patterning odd cycles spanning more than this many
    /// database units
    #[arg(long, env = "ABUTCHECK_LOCALITY")]
    pub locality: Option<i64>,
}

#[derive(Args, Debug, Clone)]
pub struct ExecOpts {
    /// Worker threads (default: all available cores)
    #[arg(long, env = "ABUTCHECK_JOBS")]
    pub jobs: Option<usize>,
    /// Write a routed-shape dump per testcell next to the reports
    #[arg(long, env = "ABUTCHECK_DUMP_ROUTES")]
    pub dump_routes: bool,
}

#[derive(Args, Debug)]
pub struct ProfileCmd {
    #[command(flatten)]
    pub inputs: InputOpts,
    /// Directory for profile.csv and histogram.csv (stdout only when unset)
    #[arg(long, env = "ABUTCHECK_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenerateCmd {
    #[command(flatten)]
    pub inputs: InputOpts,
    #[command(flatten)]
    pub enumeration: EnumOpts,
    /// Output directory (created if missing)
    #[arg(long, default_value = "abutcheck_out", env = "ABUTCHECK_OUT_DIR")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct CheckCmd {
    #[command(flatten)]
    pub inputs: InputOpts,
    #[command(flatten)]
    pub enumeration: EnumOpts,
    #[command(flatten)]
    pub route: RouteOpts,
    #[command(flatten)]
    pub drc: DrcOpts,
    #[command(flatten)]
    pub exec: ExecOpts,
    /// Output directory (created if missing)
    #[arg(long, default_value = "abutcheck_out", env = "ABUTCHECK_OUT_DIR")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// One self-abutment testcell per cell
    SingleCell,
    /// One testcell per cell pair
    CellByCell,
    /// Pair testcells plus one combined top-level design
    CombinedTop,
    /// Self-abutment and pair testcells (top-level included)
    All,
}

impl ModeArg {
    pub fn to_mode(self) -> EnumerationMode {
        match self {
            ModeArg::SingleCell => EnumerationMode::SingleCellOnly,
            ModeArg::CellByCell => EnumerationMode::CellByCellOnly,
            ModeArg::CombinedTop => EnumerationMode::AllComboInOneCellOnly,
            ModeArg::All => EnumerationMode::All,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DptArg {
    Precolored,
    Recolor,
    Off,
}

impl DptArg {
    pub fn to_mode(self) -> DptMode {
        match self {
            DptArg::Precolored => DptMode::Precolored,
            DptArg::Recolor => DptMode::Recolor,
            DptArg::Off => DptMode::Off,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PairingArg {
    Random,
    Aligned,
}

impl PairingArg {
    pub fn to_pairing(self) -> PinPairing {
        match self {
            PairingArg::Random => PinPairing::Random,
            PairingArg::Aligned => PinPairing::Aligned,
        }
    }
}

/// The CLI-facing name of a `ValueEnum` variant (kebab-case), for echoing
/// configuration back into the run manifest.
fn value_name<T: ValueEnum>(value: T) -> String {
    value
        .to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

/// Parsed technology deck and cell library plus the input hashes recorded
/// in the run manifest.
pub struct LoadedInputs {
    pub tech: TechRules,
    pub cells: Vec<Cell>,
    pub cell_map: BTreeMap<String, Cell>,
    pub diagnostics: Vec<Diagnostic>,
    pub rule_deck_hash: String,
    pub cell_file_hash: String,
}

pub fn load_inputs(cells_path: &Path, tech_path: &Path) -> Result<LoadedInputs> {
    let tech_text = fs::read_to_string(tech_path)
        .with_context(|| format!("reading technology deck {}", tech_path.display()))?;
    let (tech, mut diagnostics) = parse_tech(&tech_text)
        .with_context(|| format!("parsing technology deck {}", tech_path.display()))?;

    let cell_text = fs::read_to_string(cells_path)
        .with_context(|| format!("reading cell library {}", cells_path.display()))?;
    let parsed = parse_cells(&cell_text, &tech)
        .with_context(|| format!("parsing cell library {}", cells_path.display()))?;
    diagnostics.extend(parsed.diagnostics);

    let cell_map: BTreeMap<String, Cell> = parsed
        .cells
        .iter()
        .map(|c| (c.name.clone(), c.clone()))
        .collect();

    Ok(LoadedInputs {
        tech,
        cells: parsed.cells,
        cell_map,
        diagnostics,
        rule_deck_hash: content_hash(tech_text.as_bytes()),
        cell_file_hash: content_hash(cell_text.as_bytes()),
    })
}

fn report_diagnostics(diagnostics: &[Diagnostic]) {
    for diag in diagnostics {
        let tag = match diag.severity {
            Severity::Info => "info",
            Severity::Warning => "warning",
        };
        eprintln!("{tag}: {}", diag.message);
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn cmd_profile(cmd: &ProfileCmd) -> Result<i32> {
    let inputs = load_inputs(&cmd.inputs.cells, &cmd.inputs.tech)?;
    report_diagnostics(&inputs.diagnostics);
    let profile = profile_library(&inputs.cells);

    let mut out = String::new();
    writeln!(
        out,
        "library: {} cells, min width {} units",
        profile.cells.len(),
        profile.min_width
    )?;
    for (name, cell) in &profile.cells {
        writeln!(
            out,
            "  {name}: {} x {} units, {} row(s), pins {}",
            cell.width,
            cell.height,
            cell.height_rows,
            cell.pins.join(",")
        )?;
    }
    writeln!(out, "width histogram (bucket = multiple of min width):")?;
    for (bucket, fraction) in &profile.histogram {
        writeln!(out, "  {bucket}: {fraction}")?;
    }
    print!("{out}");

    if let Some(dir) = &cmd.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_file(dir, "profile.csv", &profile_csv(&profile))?;
        write_file(dir, "histogram.csv", &width_histogram_csv(&profile))?;
        println!("wrote profile.csv and histogram.csv to {}", dir.display());
    }
    Ok(EXIT_CLEAN)
}

/// A testcell module on its own, in the same shape `emit_netlist` gives it
/// inside the full netlist.
fn testcell_netlist(testcell: &Testcell) -> String {
    let mut out = format!("module {} ();\n", testcell.name);
    for inst in &testcell.instances {
        out.push_str(&format!("  {} {} (.*);\n", inst.cell, inst.name));
    }
    out.push_str("endmodule\n");
    out
}

/// Write per-testcell netlist + placement files, the full netlist, and
/// (for combined modes) the stacked top-level placement.
pub fn write_generated(
    dir: &Path,
    testcells: &[Testcell],
    mode: EnumerationMode,
    top_name: &str,
    tech: &TechRules,
) -> Result<usize> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for tc in testcells {
        write_file(dir, &format!("{}.v", tc.name), &testcell_netlist(tc))?;
        write_file(
            dir,
            &format!("{}.def", tc.name),
            &emit_def(&def_for_testcell(tc, tech.units_per_micron)),
        )?;
    }
    write_file(
        dir,
        &format!("{top_name}.v"),
        &emit_netlist(testcells, top_name),
    )?;
    let mut files = 2 * testcells.len() + 1;
    if mode.combined_top() {
        // One empty site row between stacked testcells keeps them from
        // abutting each other in the combined design.
        let top = def_for_top(testcells, top_name, tech.units_per_micron, tech.site_row_height);
        write_file(dir, &format!("{top_name}.def"), &emit_def(&top))?;
        files += 1;
    }
    Ok(files)
}

pub fn cmd_generate(cmd: &GenerateCmd) -> Result<i32> {
    let inputs = load_inputs(&cmd.inputs.cells, &cmd.inputs.tech)?;
    report_diagnostics(&inputs.diagnostics);
    let mode = cmd.enumeration.mode.to_mode();
    let testcells = enumerate_library(&inputs.cells, mode, inputs.tech.site_row_height);
    let files = write_generated(
        &cmd.out_dir,
        &testcells,
        mode,
        &cmd.enumeration.top_name,
        &inputs.tech,
    )?;
    println!(
        "generated {} testcell(s), {} file(s) in {}",
        testcells.len(),
        files,
        cmd.out_dir.display()
    );
    Ok(EXIT_CLEAN)
}

/// Plain-text dump of a routed testcell, one shape per line.
fn routes_dump(design: &RoutedDesign, tech: &TechRules) -> String {
    let mut out = format!(
        "# testcell {} ({} net(s), {} unrouted)\n# layer x_lo y_lo x_hi y_hi class net mask\n",
        design.testcell,
        design.nets.len(),
        design.unrouted.len()
    );
    for shape in &design.shapes {
        out.push_str(&format!(
            "{} {} {} {} {} {:?} {} {}\n",
            tech.layers[shape.layer].name,
            shape.rect.x_lo,
            shape.rect.y_lo,
            shape.rect.x_hi,
            shape.rect.y_hi,
            shape.class,
            shape.net.as_deref().unwrap_or("-"),
            shape.mask
        ));
    }
    out
}

struct TestcellOutcome {
    result: DrcResult,
    timing: TimingRow,
}

fn process_testcell(
    testcell: &Testcell,
    inputs: &LoadedInputs,
    route_options: &RouteOptions,
    drc_options: &DrcOptions,
    dump_dir: Option<&Path>,
) -> Result<TestcellOutcome> {
    let route_start = Instant::now();
    let design = route_testcell(testcell, &inputs.cell_map, &inputs.tech, route_options)
        .with_context(|| format!("routing testcell {}", testcell.name))?;
    let route_ms = route_start.elapsed().as_secs_f64() * 1e3;

    if let Some(dir) = dump_dir {
        write_file(
            dir,
            &format!("{}.routes.txt", testcell.name),
            &routes_dump(&design, &inputs.tech),
        )?;
    }

    let check_start = Instant::now();
    let result = check_design(&design, testcell, &inputs.cell_map, &inputs.tech, drc_options)
        .with_context(|| format!("checking testcell {}", testcell.name))?;
    let check_ms = check_start.elapsed().as_secs_f64() * 1e3;

    let timing = TimingRow {
        testcell: testcell.name.clone(),
        route_ms,
        check_ms,
        violations: result.violations.len(),
    };
    Ok(TestcellOutcome { result, timing })
}

pub fn cmd_check(cmd: &CheckCmd, also_generate: bool) -> Result<i32> {
    let inputs = load_inputs(&cmd.inputs.cells, &cmd.inputs.tech)?;
    report_diagnostics(&inputs.diagnostics);
    let mode = cmd.enumeration.mode.to_mode();
    let testcells = enumerate_library(&inputs.cells, mode, inputs.tech.site_row_height);

    fs::create_dir_all(&cmd.out_dir)
        .with_context(|| format!("creating {}", cmd.out_dir.display()))?;
    if also_generate {
        write_generated(
            &cmd.out_dir,
            &testcells,
            mode,
            &cmd.enumeration.top_name,
            &inputs.tech,
        )?;
    }

    let route_options = RouteOptions {
        seed: cmd.route.seed,
        min_layer: cmd.route.min_layer.clone(),
        max_layer: cmd.route.max_layer.clone(),
        via_cost: cmd.route.via_cost,
        max_ripup: cmd.route.max_ripup,
        strap_density: cmd.route.strap_density,
        net_degree: cmd.route.net_degree,
        pin_pairing: cmd.route.pin_pairing.to_pairing(),
        die_margin: cmd.route.die_margin,
    };
    let drc_options = DrcOptions {
        dpt: cmd.drc.dpt.to_mode(),
        rule_inflation: cmd.drc.rule_inflation,
        boundary_margin: cmd.drc.boundary_margin,
        locality: cmd.drc.locality,
    };
    let dump_dir = cmd.exec.dump_routes.then_some(cmd.out_dir.as_path());

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cmd.exec.jobs.unwrap_or(0))
        .build()
        .context("building worker pool")?;
    let outcomes: Vec<TestcellOutcome> = pool.install(|| {
        testcells
            .par_iter()
            .map(|tc| process_testcell(tc, &inputs, &route_options, &drc_options, dump_dir))
            .collect::<Result<Vec<_>>>()
    })?;

    let results: Vec<DrcResult> = outcomes.iter().map(|o| o.result.clone()).collect();
    let timings: Vec<TimingRow> = outcomes.into_iter().map(|o| o.timing).collect();
    for result in &results {
        report_diagnostics(&result.diagnostics);
    }

    let library_names: Vec<String> = inputs.cells.iter().map(|c| c.name.clone()).collect();
    let verdicts = cell_verdicts(&results, &library_names, &inputs.tech);

    let mut manifest = RunManifest {
        tool: "abutcheck".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cmd.route.seed,
        mode: value_name(cmd.enumeration.mode),
        min_layer: cmd.route.min_layer.clone(),
        max_layer: cmd.route.max_layer.clone(),
        dpt: value_name(cmd.drc.dpt),
        rule_inflation: cmd.drc.rule_inflation,
        boundary_margin: cmd.drc.boundary_margin,
        pin_pairing: value_name(cmd.route.pin_pairing),
        net_degree: cmd.route.net_degree as u32,
        strap_density: cmd.route.strap_density,
        rule_deck_hash: inputs.rule_deck_hash.clone(),
        cell_file_hash: inputs.cell_file_hash.clone(),
        manifest_hash: String::new(),
    };
    manifest.seal();

    let summary = drc_summary(&verdicts);
    write_file(&cmd.out_dir, "summary.txt", &summary)?;
    write_file(
        &cmd.out_dir,
        "report.json",
        &json_report(&manifest, &results, &verdicts, &inputs.tech),
    )?;
    write_file(&cmd.out_dir, "timings.csv", &timings_csv(&timings))?;

    print!("{summary}");
    let total_violations: usize = results.iter().map(|r| r.violations.len()).sum();
    let total_unrouted: usize = results.iter().map(|r| r.unrouted.len()).sum();
    let problematic = verdicts.iter().filter(|v| v.problematic).count();
    println!(
        "checked {} testcell(s): {} violation(s), {} unrouted net(s), {} problematic cell(s)",
        results.len(),
        total_violations,
        total_unrouted,
        problematic
    );
    println!("reports written to {}", cmd.out_dir.display());

    if total_violations > 0 {
        Ok(EXIT_VIOLATIONS)
    } else {
        Ok(EXIT_CLEAN)
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Profile(cmd) => cmd_profile(cmd),
        Command::Generate(cmd) => cmd_generate(cmd),
        Command::Check(cmd) => cmd_check(cmd, false),
        Command::Run(cmd) => cmd_check(cmd, true),
    }
}
