//! Cell file parser and emitter.
//!
//! The format is a small LEF-style subset with full physical geometry:
//!
//! ```text
//! MACRO INVX1
//!   SIZE 0.4 BY 1.8 ;
//!   PIN A USE SIGNAL ;
//!     PORT
//!       LAYER M1 MASK 1 ;
//!       RECT 0.06 0.86 0.14 0.94 ;
//!     END PORT
//!   END A
//!   OBS
//!     LAYER M2 ;
//!     RECT 0.35 0.35 0.65 1.05 ;
//!   END
//! END INVX1
//! ```
//!
//! Coordinates are decimal microns scaled to database units (1000/micron)
//! at parse time. `USE` is optional; pins without it are classified by
//! name (`VDD` → POWER, `VSS` → GROUND, anything else SIGNAL). `MASK`
//! pre-assigns a double-patterning color to the following rectangles.
//!
//! [`emit_cells`] writes the same format back; parsing its output
//! reproduces the input cells exactly.

use thiserror::Error;

use super::{bind_row_heights, Cell, LayerShape, Pin, PinKind, PinShape, TechRules};
use crate::geom::{dbu_to_microns, microns_to_dbu, Rect};
use crate::Diagnostic;

#[derive(Debug, Error)]
pub enum LefError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown layer `{layer}`")]
    UnknownLayer { line: usize, layer: String },
    #[error("line {line}: pin {pin} of cell {cell} has a shape outside the cell outline")]
    PinOutsideCell { line: usize, cell: String, pin: String },
    #[error("line {line}: duplicate cell `{name}`")]
    DuplicateCell { line: usize, name: String },
}

/// Result of parsing a cell file: accepted cells in file order, plus
/// diagnostics (REJECTED_CELL for bad row heights, a warning for cells
/// that carry pins but no obstruction geometry).
#[derive(Debug)]
pub struct ParsedCells {
    pub cells: Vec<Cell>,
    pub diagnostics: Vec<Diagnostic>,
}

struct Tokens<'a> {
    items: Vec<(&'a str, usize)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Tokens<'a> {
        let mut items = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("");
            for word in content.split_whitespace() {
                // Split attached semicolons so `0.94;` tokenizes cleanly.
                let mut rest = word;
                while let Some(stripped) = rest.strip_prefix(';') {
                    items.push((";", idx + 1));
                    rest = stripped;
                }
                let mut tail = 0;
                while let Some(stripped) = rest.strip_suffix(';') {
                    tail += 1;
                    rest = stripped;
                }
                if !rest.is_empty() {
                    items.push((rest, idx + 1));
                }
                for _ in 0..tail {
                    items.push((";", idx + 1));
                }
            }
        }
        Tokens { items, pos: 0 }
    }

    fn peek(&self) -> Option<&'a str> {
        self.items.get(self.pos).map(|&(t, _)| t)
    }

    fn line(&self) -> usize {
        self.items
            .get(self.pos.min(self.items.len().saturating_sub(1)))
            .map(|&(_, l)| l)
            .unwrap_or(0)
    }

    fn next(&mut self) -> Option<(&'a str, usize)> {
        let item = self.items.get(self.pos).copied();
        self.pos += 1;
        item
    }

    fn expect(&mut self, want: &str) -> Result<usize, LefError> {
        match self.next() {
            Some((tok, line)) if tok == want => Ok(line),
            Some((tok, line)) => Err(LefError::Syntax {
                line,
                message: format!("expected `{want}`, found `{tok}`"),
            }),
            None => Err(LefError::Syntax {
                line: self.line(),
                message: format!("expected `{want}`, found end of file"),
            }),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(&'a str, usize), LefError> {
        match self.next() {
            Some((";", line)) => Err(LefError::Syntax {
                line,
                message: format!("expected {what}"),
            }),
            None => Err(LefError::Syntax {
                line: self.line(),
                message: format!("expected {what}, found end of file"),
            }),
            Some((tok, line)) => Ok((tok, line)),
        }
    }

    fn coord(&mut self) -> Result<(i64, usize), LefError> {
        let (tok, line) = self.ident("a coordinate")?;
        microns_to_dbu(tok)
            .map(|v| (v, line))
            .ok_or_else(|| LefError::Syntax {
                line,
                message: format!("`{tok}` is not a micron value on the database-unit grid"),
            })
    }
}

fn classify_by_name(name: &str) -> PinKind {
    if name.contains("VDD") {
        PinKind::Power
    } else if name.contains("VSS") {
        PinKind::Ground
    } else {
        PinKind::Signal
    }
}

/// Parse a cell file against an already-parsed technology (layer names are
/// validated, heights are bound to site rows).
pub fn parse_cells(text: &str, tech: &TechRules) -> Result<ParsedCells, LefError> {
    let mut tokens = Tokens::new(text);
    let mut cells: Vec<Cell> = Vec::new();

    while let Some((tok, line)) = tokens.next() {
        if tok != "MACRO" {
            return Err(LefError::Syntax {
                line,
                message: format!("expected `MACRO`, found `{tok}`"),
            });
        }
        let (name, line) = tokens.ident("a cell name")?;
        if cells.iter().any(|c| c.name == name) {
            return Err(LefError::DuplicateCell {
                line,
                name: name.to_string(),
            });
        }
        cells.push(parse_macro(&mut tokens, name, tech)?);
    }

    let mut diagnostics = Vec::new();
    diagnostics.extend(bind_row_heights(&mut cells, tech));
    for cell in &cells {
        if !cell.pins.is_empty() && cell.obstructions.is_empty() {
            diagnostics.push(Diagnostic::warning(format!(
                "cell {} has pins but no obstruction geometry; internal blockages are invisible to routing and checks",
                cell.name
            )));
        }
    }
    Ok(ParsedCells { cells, diagnostics })
}

fn parse_macro(tokens: &mut Tokens, name: &str, tech: &TechRules) -> Result<Cell, LefError> {
    let mut size: Option<(i64, i64)> = None;
    let mut pins: Vec<Pin> = Vec::new();
    let mut obstructions: Vec<LayerShape> = Vec::new();

    loop {
        let (tok, line) = match tokens.next() {
            Some(item) => item,
            None => {
                return Err(LefError::Syntax {
                    line: 0,
                    message: format!("cell {name} is not closed by `END {name}`"),
                })
            }
        };
        match tok {
            "SIZE" => {
                let (w, _) = tokens.coord()?;
                tokens.expect("BY")?;
                let (h, line) = tokens.coord()?;
                tokens.expect(";")?;
                if w <= 0 || h <= 0 {
                    return Err(LefError::Syntax {
                        line,
                        message: format!("cell {name} must have a positive SIZE"),
                    });
                }
                size = Some((w, h));
            }
            "PIN" => pins.push(parse_pin(tokens, name, tech)?),
            "OBS" => parse_obs(tokens, &mut obstructions, tech)?,
            "END" => {
                let (closer, line) = tokens.ident("the cell name")?;
                if closer != name {
                    return Err(LefError::Syntax {
                        line,
                        message: format!("expected `END {name}`, found `END {closer}`"),
                    });
                }
                let (width, height) = size.ok_or_else(|| LefError::Syntax {
                    line,
                    message: format!("cell {name} has no SIZE statement"),
                })?;
                let outline = Rect::new(0, 0, width, height);
                for pin in &pins {
                    for shape in &pin.shapes {
                        if !outline.contains_rect(&shape.rect) {
                            return Err(LefError::PinOutsideCell {
                                line,
                                cell: name.to_string(),
                                pin: pin.name.clone(),
                            });
                        }
                    }
                }
                return Ok(Cell {
                    name: name.to_string(),
                    width,
                    height,
                    height_rows: 0, // bound against the site row height afterwards
                    pins,
                    obstructions,
                });
            }
            other => {
                return Err(LefError::Syntax {
                    line,
                    message: format!("unexpected `{other}` in cell {name}"),
                })
            }
        }
    }
}

fn parse_pin(tokens: &mut Tokens, cell: &str, tech: &TechRules) -> Result<Pin, LefError> {
    let (pin_name, _) = tokens.ident("a pin name")?;
    let mut kind = None;
    if tokens.peek() == Some("USE") {
        tokens.next();
        let (use_token, line) = tokens.ident("a pin use")?;
        kind = Some(match use_token {
            "SIGNAL" => PinKind::Signal,
            "POWER" => PinKind::Power,
            "GROUND" => PinKind::Ground,
            other => {
                return Err(LefError::Syntax {
                    line,
                    message: format!("unknown pin use `{other}`"),
                })
            }
        });
        tokens.expect(";")?;
    } else if tokens.peek() == Some(";") {
        // bare header like `PIN VDD ;` — classification falls to the name
        tokens.next();
    }
    let mut shapes = Vec::new();
    loop {
        let (tok, line) = match tokens.next() {
            Some(item) => item,
            None => {
                return Err(LefError::Syntax {
                    line: 0,
                    message: format!("pin {pin_name} of cell {cell} is not closed"),
                })
            }
        };
        match tok {
            "PORT" => parse_port(tokens, &mut shapes, tech)?,
            "END" => {
                let (closer, line) = tokens.ident("the pin name")?;
                if closer != pin_name {
                    return Err(LefError::Syntax {
                        line,
                        message: format!("expected `END {pin_name}`, found `END {closer}`"),
                    });
                }
                return Ok(Pin {
                    name: pin_name.to_string(),
                    kind: kind.unwrap_or_else(|| classify_by_name(pin_name)),
                    shapes,
                });
            }
            other => {
                return Err(LefError::Syntax {
                    line,
                    message: format!("unexpected `{other}` in pin {pin_name}"),
                })
            }
        }
    }
}

fn parse_port(
    tokens: &mut Tokens,
    shapes: &mut Vec<PinShape>,
    tech: &TechRules,
) -> Result<(), LefError> {
    let mut layer: Option<(String, u8)> = None;
    loop {
        match tokens.next() {
            Some(("LAYER", _)) => {
                let (layer_name, line) = tokens.ident("a layer name")?;
                if tech.layer_index(layer_name).is_none() {
                    return Err(LefError::UnknownLayer {
                        line,
                        layer: layer_name.to_string(),
                    });
                }
                let mut mask = 0u8;
                if tokens.peek() == Some("MASK") {
                    tokens.next();
                    let (mask_token, line) = tokens.ident("a mask number")?;
                    mask = match mask_token {
                        "1" => 1,
                        "2" => 2,
                        other => {
                            return Err(LefError::Syntax {
                                line,
                                message: format!("MASK must be 1 or 2, found `{other}`"),
                            })
                        }
                    };
                }
                tokens.expect(";")?;
                layer = Some((layer_name.to_string(), mask));
            }
            Some(("RECT", line)) => {
                let (layer_name, mask) = layer.clone().ok_or_else(|| LefError::Syntax {
                    line,
                    message: "RECT before any LAYER in PORT".to_string(),
                })?;
                let (x1, _) = tokens.coord()?;
                let (y1, _) = tokens.coord()?;
                let (x2, _) = tokens.coord()?;
                let (y2, _) = tokens.coord()?;
                tokens.expect(";")?;
                shapes.push(PinShape {
                    layer: layer_name,
                    mask,
                    rect: Rect::new(x1, y1, x2, y2),
                });
            }
            Some(("END", _)) => {
                tokens.expect("PORT")?;
                return Ok(());
            }
            Some((other, line)) => {
                return Err(LefError::Syntax {
                    line,
                    message: format!("unexpected `{other}` in PORT"),
                })
            }
            None => {
                return Err(LefError::Syntax {
                    line: 0,
                    message: "PORT is not closed by `END PORT`".to_string(),
                })
            }
        }
    }
}

fn parse_obs(
    tokens: &mut Tokens,
    obstructions: &mut Vec<LayerShape>,
    tech: &TechRules,
) -> Result<(), LefError> {
    let mut layer: Option<String> = None;
    loop {
        match tokens.peek() {
            Some("LAYER") => {
                tokens.next();
                let (layer_name, line) = tokens.ident("a layer name")?;
                if tech.layer_index(layer_name).is_none() {
                    return Err(LefError::UnknownLayer {
                        line,
                        layer: layer_name.to_string(),
                    });
                }
                tokens.expect(";")?;
                layer = Some(layer_name.to_string());
            }
            Some("RECT") => {
                let (_, line) = tokens.next().unwrap();
                let layer_name = layer.clone().ok_or_else(|| LefError::Syntax {
                    line,
                    message: "RECT before any LAYER in OBS".to_string(),
                })?;
                let (x1, _) = tokens.coord()?;
                let (y1, _) = tokens.coord()?;
                let (x2, _) = tokens.coord()?;
                let (y2, _) = tokens.coord()?;
                tokens.expect(";")?;
                obstructions.push(LayerShape {
                    layer: layer_name,
                    rect: Rect::new(x1, y1, x2, y2),
                });
            }
            _ => {
                // OBS closes with a bare END (the macro's own END always
                // carries the cell name after it, parsed by the caller).
                tokens.expect("END")?;
                return Ok(());
            }
        }
    }
}

/// Write cells back out in the cell-file format. `parse_cells` applied to
/// the output reproduces the input exactly.
pub fn emit_cells(cells: &[Cell]) -> String {
    let mut out = String::new();
    for cell in cells {
        out.push_str(&format!("MACRO {}\n", cell.name));
        out.push_str(&format!(
            "  SIZE {} BY {} ;\n",
            dbu_to_microns(cell.width),
            dbu_to_microns(cell.height)
        ));
        for pin in &cell.pins {
            let use_token = match pin.kind {
                PinKind::Signal => "SIGNAL",
                PinKind::Power => "POWER",
                PinKind::Ground => "GROUND",
            };
            out.push_str(&format!("  PIN {} USE {} ;\n", pin.name, use_token));
            out.push_str("    PORT\n");
            for shape in &pin.shapes {
                if shape.mask != 0 {
                    out.push_str(&format!("      LAYER {} MASK {} ;\n", shape.layer, shape.mask));
                } else {
                    out.push_str(&format!("      LAYER {} ;\n", shape.layer));
                }
                out.push_str(&format!(
                    "      RECT {} {} {} {} ;\n",
                    dbu_to_microns(shape.rect.x_lo),
                    dbu_to_microns(shape.rect.y_lo),
                    dbu_to_microns(shape.rect.x_hi),
                    dbu_to_microns(shape.rect.y_hi)
                ));
            }
            out.push_str("    END PORT\n");
            out.push_str(&format!("  END {}\n", pin.name));
        }
        if !cell.obstructions.is_empty() {
            out.push_str("  OBS\n");
            for obs in &cell.obstructions {
                out.push_str(&format!("    LAYER {} ;\n", obs.layer));
                out.push_str(&format!(
                    "    RECT {} {} {} {} ;\n",
                    dbu_to_microns(obs.rect.x_lo),
                    dbu_to_microns(obs.rect.y_lo),
                    dbu_to_microns(obs.rect.x_hi),
                    dbu_to_microns(obs.rect.y_hi)
                ));
            }
            out.push_str("  END\n");
        }
        out.push_str(&format!("END {}\n\n", cell.name));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::parse_tech;

    fn toy_tech() -> TechRules {
        let text = "SITEROW 1.8\n\
                    LAYER M1 ROUTING HORIZONTAL PITCH 0.2 WIDTH 0.06 SPACING 0.06 DPSPACING 0.07\n\
                    LAYER V1 CUT PITCH 0.2 WIDTH 0.06 SPACING 0.08 ENCLOSURE 0.01\n\
                    LAYER M2 ROUTING HORIZONTAL PITCH 0.2 WIDTH 0.1 SPACING 0.1\n";
        parse_tech(text).unwrap().0
    }

    const INV: &str = "\
MACRO INVX1
  SIZE 0.4 BY 1.8 ;
  PIN A USE SIGNAL ;
    PORT
      LAYER M1 MASK 1 ;
      RECT 0.06 0.86 0.14 0.94 ;
    END PORT
  END A
  PIN VDD ;
    PORT
      LAYER M1 ;
      RECT 0 1.74 0.4 1.8 ;
    END PORT
  END VDD
  OBS
    LAYER M2 ;
    RECT 0.15 0.35 0.25 1.05 ;
  END
END INVX1
";

    #[test]
    fn parses_pins_masks_and_obstructions() {
        let parsed = parse_cells(INV, &toy_tech()).unwrap();
        assert_eq!(parsed.cells.len(), 1);
        let cell = &parsed.cells[0];
        assert_eq!((cell.width, cell.height, cell.height_rows), (400, 1800, 1));
        assert_eq!(cell.pins.len(), 2);
        let a = cell.pin("A").unwrap();
        assert_eq!(a.kind, PinKind::Signal);
        assert_eq!(a.shapes[0].mask, 1);
        assert_eq!(a.shapes[0].rect, Rect::new(60, 860, 140, 940));
        // no USE clause: classified by name
        assert_eq!(cell.pin("VDD").unwrap().kind, PinKind::Power);
        assert_eq!(cell.obstructions.len(), 1);
        assert_eq!(cell.obstructions[0].layer, "M2");
        assert!(parsed.diagnostics.is_empty());
    }

    #[test]
    fn emit_parse_round_trip_is_exact() {
        let tech = toy_tech();
        let original = parse_cells(INV, &tech).unwrap().cells;
        let emitted = emit_cells(&original);
        let reparsed = parse_cells(&emitted, &tech).unwrap().cells;
        assert_eq!(original, reparsed);
        // and the second emission is byte-identical
        assert_eq!(emitted, emit_cells(&reparsed));
    }

    #[test]
    fn empty_input_yields_no_cells() {
        let parsed = parse_cells("", &toy_tech()).unwrap();
        assert!(parsed.cells.is_empty());
        assert!(parsed.diagnostics.is_empty());
    }

    #[test]
    fn pin_outside_outline_is_an_error() {
        let text = "\
MACRO BAD
  SIZE 0.4 BY 1.8 ;
  PIN A USE SIGNAL ;
    PORT
      LAYER M1 ;
      RECT 0.3 0.8 0.5 0.9 ;
    END PORT
  END A
END BAD
";
        assert!(matches!(
            parse_cells(text, &toy_tech()),
            Err(LefError::PinOutsideCell { .. })
        ));
    }

    #[test]
    fn unknown_layer_is_an_error() {
        let text = "\
MACRO BAD
  SIZE 0.4 BY 1.8 ;
  PIN A USE SIGNAL ;
    PORT
      LAYER M9 ;
      RECT 0.1 0.8 0.2 0.9 ;
    END PORT
  END A
END BAD
";
        assert!(matches!(parse_cells(text, &toy_tech()), Err(LefError::UnknownLayer { .. })));
    }

    #[test]
    fn bad_row_height_is_rejected_with_diagnostic() {
        let text = "\
MACRO ODD
  SIZE 0.4 BY 2.5 ;
  PIN A USE SIGNAL ;
    PORT
      LAYER M1 ;
      RECT 0.1 0.8 0.2 0.9 ;
    END PORT
  END A
END ODD
";
        let parsed = parse_cells(text, &toy_tech()).unwrap();
        assert!(parsed.cells.is_empty());
        assert!(parsed.diagnostics[0].message.contains("REJECTED_CELL ODD"));
    }

    #[test]
    fn pins_without_obstructions_warn() {
        let text = "\
MACRO THIN
  SIZE 0.4 BY 1.8 ;
  PIN A USE SIGNAL ;
    PORT
      LAYER M1 ;
      RECT 0.1 0.8 0.2 0.9 ;
    END PORT
  END A
END THIN
";
        let parsed = parse_cells(text, &toy_tech()).unwrap();
        assert_eq!(parsed.cells.len(), 1);
        assert!(parsed
            .diagnostics
            .iter()
            .any(|d| d.message.contains("no obstruction geometry")));
    }

    #[test]
    fn attached_semicolons_and_duplicates() {
        let text = "MACRO A\n  SIZE 0.4 BY 1.8;\nEND A\nMACRO A\n  SIZE 0.4 BY 1.8 ;\nEND A\n";
        assert!(matches!(
            parse_cells(text, &toy_tech()),
            Err(LefError::DuplicateCell { line: 4, .. })
        ));
    }
}
