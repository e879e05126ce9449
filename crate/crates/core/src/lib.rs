//! Core library behind the `abutcheck` tool: enumerate the abutment
//! testcells of a standard-cell library, stress-route them under randomized
//! congestion, and run rule-based checks (including double patterning) to
//! find cells whose pin placement causes trouble at cell boundaries.
//!
//! The pipeline stages map onto the modules here:
//!
//! - [`library`]: cell geometry + technology rule parsing and profiling
//! - [`abutment`]: orientation algebra and testcell enumeration
//! - [`design_io`]: netlist / placement text formats
//! - [`route`]: power preroute, random straps, and the grid maze router
//! - [`drc`]: geometric rule checks, double-patterning analysis, boundary
//!   filtering, rule inflation
//! - [`report`]: per-cell verdicts, text summary, JSON report, histograms
//!
//! All geometry is integer database units (1000/µm, see [`geom`]); every
//! stage is deterministic given its inputs and a seed.

pub mod abutment;
pub mod design_io;
pub mod drc;
pub mod geom;
pub mod library;
pub mod report;
pub mod route;

use serde::Serialize;

/// Non-fatal finding surfaced while parsing or running a stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Severity {
    Info,
    Warning,
}

impl Diagnostic {
    pub fn warning(message: impl Into<String>) -> Diagnostic {
        Diagnostic { severity: Severity::Warning, message: message.into() }
    }

    pub fn info(message: impl Into<String>) -> Diagnostic {
        Diagnostic { severity: Severity::Info, message: message.into() }
    }
}
