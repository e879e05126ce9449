//! Technology rule file parser.
//!
//! One statement per line, `#` starts a comment:
//!
//! ```text
//! UNITS 1000
//! SITEROW 1.8
//! LAYER M1 ROUTING HORIZONTAL PITCH 0.2 WIDTH 0.06 SPACING 0.06 DPSPACING 0.07
//! LAYER V1 CUT PITCH 0.2 WIDTH 0.06 SPACING 0.08 ENCLOSURE 0.01
//! ```
//!
//! `UNITS` (database units per micron, default 1000) must precede any
//! scaled statement. All other values are decimal microns and must land
//! exactly on the unit grid. Layers are listed bottom-up and must
//! alternate ROUTING and CUT, starting with ROUTING.

use thiserror::Error;

use super::{Direction, LayerKind, LayerRule, TechRules};
use crate::geom::parse_scaled_decimal;
use crate::Diagnostic;

#[derive(Debug, Error)]
pub enum TechError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown layer kind `{token}` (expected ROUTING or CUT)")]
    UnknownLayerKind { line: usize, token: String },
    #[error("line {line}: duplicate layer `{name}`")]
    DuplicateLayer { line: usize, name: String },
    #[error("line {line}: routing layer `{layer}` needs a HORIZONTAL or VERTICAL direction")]
    MissingDirection { line: usize, layer: String },
    #[error("line {line}: layer `{layer}` breaks the routing/cut alternation")]
    NonAlternating { line: usize, layer: String },
    #[error("technology file defines no site row height (SITEROW)")]
    MissingSiteRow,
}

fn syntax(line: usize, message: impl Into<String>) -> TechError {
    TechError::Syntax {
        line,
        message: message.into(),
    }
}

/// Parse a technology rule file. Returns the rules plus non-fatal
/// diagnostics (currently: routing pitch too small for width + spacing).
pub fn parse_tech(text: &str) -> Result<(TechRules, Vec<Diagnostic>), TechError> {
    let mut tech = TechRules {
        units_per_micron: 1000,
        site_row_height: 0,
        layers: Vec::new(),
    };
    let mut diagnostics = Vec::new();
    let mut saw_site_row = false;
    let mut saw_scaled_statement = false;

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        match tokens[0] {
            "UNITS" => {
                if saw_scaled_statement {
                    return Err(syntax(line, "UNITS must precede SITEROW and LAYER statements"));
                }
                let value: i64 = tokens
                    .get(1)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| syntax(line, "UNITS expects one integer argument"))?;
                if value <= 0 || tokens.len() != 2 {
                    return Err(syntax(line, "UNITS expects one positive integer argument"));
                }
                tech.units_per_micron = value;
            }
            "SITEROW" => {
                saw_scaled_statement = true;
                let value = tokens
                    .get(1)
                    .and_then(|t| parse_scaled_decimal(t, tech.units_per_micron))
                    .ok_or_else(|| syntax(line, "SITEROW expects one decimal micron argument"))?;
                if value <= 0 || tokens.len() != 2 {
                    return Err(syntax(line, "SITEROW expects one positive micron argument"));
                }
                tech.site_row_height = value;
                saw_site_row = true;
            }
            "LAYER" => {
                saw_scaled_statement = true;
                let rule = parse_layer(&tokens, line, tech.units_per_micron)?;
                if tech.layers.iter().any(|l| l.name == rule.name) {
                    return Err(TechError::DuplicateLayer { line, name: rule.name });
                }
                match tech.layers.last() {
                    None if rule.kind == LayerKind::Cut => {
                        return Err(syntax(line, "the layer stack must start with a routing layer"));
                    }
                    Some(prev) if prev.kind == rule.kind => {
                        return Err(TechError::NonAlternating { line, layer: rule.name });
                    }
                    _ => {}
                }
                if rule.kind == LayerKind::Routing && rule.pitch < rule.min_width + rule.min_spacing
                {
                    diagnostics.push(Diagnostic::warning(format!(
                        "layer {}: pitch {} is smaller than min width {} + min spacing {}",
                        rule.name, rule.pitch, rule.min_width, rule.min_spacing
                    )));
                }
                tech.layers.push(rule);
            }
            other => return Err(syntax(line, format!("unknown statement `{other}`"))),
        }
    }

    if !saw_site_row {
        return Err(TechError::MissingSiteRow);
    }
    Ok((tech, diagnostics))
}

fn parse_layer(tokens: &[&str], line: usize, units: i64) -> Result<LayerRule, TechError> {
    let name = *tokens
        .get(1)
        .ok_or_else(|| syntax(line, "LAYER expects a layer name"))?;
    let kind_token = *tokens
        .get(2)
        .ok_or_else(|| syntax(line, "LAYER expects ROUTING or CUT after the name"))?;
    let kind = match kind_token {
        "ROUTING" => LayerKind::Routing,
        "CUT" => LayerKind::Cut,
        other => {
            return Err(TechError::UnknownLayerKind {
                line,
                token: other.to_string(),
            })
        }
    };

    let mut cursor = 3;
    let direction = match tokens.get(cursor) {
        Some(&"HORIZONTAL") | Some(&"VERTICAL") if kind == LayerKind::Cut => {
            return Err(syntax(line, format!("cut layer {name} carries no direction")));
        }
        Some(&"HORIZONTAL") => {
            cursor += 1;
            Direction::Horizontal
        }
        Some(&"VERTICAL") => {
            cursor += 1;
            Direction::Vertical
        }
        _ if kind == LayerKind::Routing => {
            return Err(TechError::MissingDirection {
                line,
                layer: name.to_string(),
            });
        }
        _ => Direction::None,
    };

    let mut pitch = None;
    let mut width = None;
    let mut spacing = None;
    let mut same_net = None;
    let mut dp_spacing = None;
    let mut enclosure = None;
    let mut min_enclosed = None;
    while cursor < tokens.len() {
        let key = tokens[cursor];
        let value = tokens
            .get(cursor + 1)
            .and_then(|t| parse_scaled_decimal(t, units))
            .ok_or_else(|| {
                syntax(line, format!("attribute {key} expects a decimal micron value on the unit grid"))
            })?;
        let slot = match key {
            "PITCH" => &mut pitch,
            "WIDTH" => &mut width,
            "SPACING" => &mut spacing,
            "SAMENETSPACING" => &mut same_net,
            "DPSPACING" => &mut dp_spacing,
            "ENCLOSURE" => &mut enclosure,
            "MINENCLOSEDWIDTH" => &mut min_enclosed,
            other => return Err(syntax(line, format!("unknown layer attribute `{other}`"))),
        };
        if slot.is_some() {
            return Err(syntax(line, format!("duplicate layer attribute `{key}`")));
        }
        *slot = Some(value);
        cursor += 2;
    }

    let pitch = pitch.ok_or_else(|| syntax(line, format!("layer {name} is missing PITCH")))?;
    let min_width = width.ok_or_else(|| syntax(line, format!("layer {name} is missing WIDTH")))?;
    let min_spacing =
        spacing.ok_or_else(|| syntax(line, format!("layer {name} is missing SPACING")))?;
    Ok(LayerRule {
        name: name.to_string(),
        kind,
        direction,
        pitch,
        min_width,
        min_spacing,
        same_net_spacing: same_net.unwrap_or(min_spacing),
        dp_spacing: dp_spacing.unwrap_or(0),
        via_enclosure: enclosure.unwrap_or(0),
        min_enclosed_width: min_enclosed.unwrap_or(min_width),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "\
# five-layer toy stack
UNITS 1000
SITEROW 1.8
LAYER M1 ROUTING HORIZONTAL PITCH 0.2 WIDTH 0.06 SPACING 0.06 DPSPACING 0.07
LAYER V1 CUT PITCH 0.2 WIDTH 0.06 SPACING 0.08 ENCLOSURE 0.01
LAYER M2 ROUTING HORIZONTAL PITCH 0.2 WIDTH 0.1 SPACING 0.1
LAYER V2 CUT PITCH 0.2 WIDTH 0.06 SPACING 0.08 ENCLOSURE 0.01
LAYER M3 ROUTING VERTICAL PITCH 0.2 WIDTH 0.1 SPACING 0.1
";

    #[test]
    fn toy_stack_parses_with_defaults() {
        let (tech, diags) = parse_tech(TOY).unwrap();
        assert!(diags.is_empty());
        assert_eq!(tech.units_per_micron, 1000);
        assert_eq!(tech.site_row_height, 1800);
        assert_eq!(tech.layers.len(), 5);
        let m1 = &tech.layers[0];
        assert_eq!(
            (m1.pitch, m1.min_width, m1.min_spacing, m1.dp_spacing),
            (200, 60, 60, 70)
        );
        assert_eq!(m1.same_net_spacing, 60); // defaults to SPACING
        assert_eq!(m1.min_enclosed_width, 60); // defaults to WIDTH
        assert_eq!(m1.direction, Direction::Horizontal);
        let v1 = &tech.layers[1];
        assert_eq!((v1.kind, v1.via_enclosure), (LayerKind::Cut, 10));
        assert_eq!(v1.direction, Direction::None);
        assert_eq!(tech.routing_layers(), vec![0, 2, 4]);
        assert_eq!(tech.cut_between(2, 4), Some(3));
        assert_eq!(tech.cut_between(0, 4), None);
    }

    #[test]
    fn pitch_smaller_than_width_plus_spacing_warns() {
        let text = "SITEROW 1.8\nLAYER M1 ROUTING HORIZONTAL PITCH 0.1 WIDTH 0.06 SPACING 0.06\n";
        let (_, diags) = parse_tech(text).unwrap();
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("pitch 100"));
    }

    #[test]
    fn structural_errors_are_reported() {
        let dup = "SITEROW 1.8\nLAYER M1 ROUTING HORIZONTAL PITCH 0.2 WIDTH 0.1 SPACING 0.1\n\
                   LAYER V1 CUT PITCH 0.2 WIDTH 0.06 SPACING 0.08\n\
                   LAYER M1 ROUTING VERTICAL PITCH 0.2 WIDTH 0.1 SPACING 0.1\n";
        assert!(matches!(parse_tech(dup), Err(TechError::DuplicateLayer { line: 4, .. })));

        let no_dir = "SITEROW 1.8\nLAYER M1 ROUTING PITCH 0.2 WIDTH 0.1 SPACING 0.1\n";
        assert!(matches!(parse_tech(no_dir), Err(TechError::MissingDirection { .. })));

        let two_routing = "SITEROW 1.8\nLAYER M1 ROUTING HORIZONTAL PITCH 0.2 WIDTH 0.1 SPACING 0.1\n\
                           LAYER M2 ROUTING VERTICAL PITCH 0.2 WIDTH 0.1 SPACING 0.1\n";
        assert!(matches!(parse_tech(two_routing), Err(TechError::NonAlternating { .. })));

        let bad_kind = "SITEROW 1.8\nLAYER M1 POLY PITCH 0.2 WIDTH 0.1 SPACING 0.1\n";
        assert!(matches!(parse_tech(bad_kind), Err(TechError::UnknownLayerKind { .. })));

        let cut_first = "SITEROW 1.8\nLAYER V0 CUT PITCH 0.2 WIDTH 0.06 SPACING 0.08\n";
        assert!(matches!(parse_tech(cut_first), Err(TechError::Syntax { .. })));

        assert!(matches!(parse_tech(""), Err(TechError::MissingSiteRow)));
    }

    #[test]
    fn units_must_come_first_and_values_must_be_exact() {
        let late_units = "SITEROW 1.8\nUNITS 2000\n";
        assert!(matches!(parse_tech(late_units), Err(TechError::Syntax { line: 2, .. })));

        // 0.005 microns at 100 units/micron is half a unit
        let coarse = "UNITS 100\nSITEROW 1.8\nLAYER M1 ROUTING HORIZONTAL PITCH 0.2 WIDTH 0.005 SPACING 0.1\n";
        assert!(matches!(parse_tech(coarse), Err(TechError::Syntax { line: 3, .. })));

        // the same value is fine at the default 1000 units/micron
        let fine = "SITEROW 1.8\nLAYER M1 ROUTING HORIZONTAL PITCH 0.2 WIDTH 0.005 SPACING 0.15\n";
        let (tech, _) = parse_tech(fine).unwrap();
        assert_eq!(tech.layers[0].min_width, 5);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "\n# leading comment\nSITEROW 1.8 # trailing comment\n\n";
        let (tech, _) = parse_tech(text).unwrap();
        assert_eq!(tech.site_row_height, 1800);
    }
}
