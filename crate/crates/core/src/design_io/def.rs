//! DEF 5.6 subset: design name, distance units, a COMPONENTS section of
//! placed instances, and the die area. The emitter writes one fixed
//! statement order; the parser accepts the statements in any order and
//! skips a TECHNOLOGY line if present.

use thiserror::Error;

use super::{tokenize, Cursor};
use crate::abutment::{Orientation, Testcell};
use crate::geom::Rect;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefComponent {
    pub name: String,
    pub cell: String,
    pub x: i64,
    pub y: i64,
    pub orientation: Orientation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefDesign {
    pub name: String,
    pub units_per_micron: i64,
    pub die: Rect,
    pub components: Vec<DefComponent>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DefError {
    #[error("DEF syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("COMPONENTS header says {expected} but section holds {found}")]
    ComponentCount { expected: usize, found: usize },
    #[error("DEF is missing a {0} statement")]
    MissingSection(&'static str),
}

fn syntax(line: usize, message: impl Into<String>) -> DefError {
    DefError::Syntax { line, message: message.into() }
}

/// The placement view of a single testcell.
pub fn def_for_testcell(testcell: &Testcell, units_per_micron: i64) -> DefDesign {
    DefDesign {
        name: testcell.name.clone(),
        units_per_micron,
        die: testcell.die,
        components: testcell
            .instances
            .iter()
            .map(|inst| DefComponent {
                name: inst.name.clone(),
                cell: inst.cell.clone(),
                x: inst.x,
                y: inst.y,
                orientation: inst.orientation,
            })
            .collect(),
    }
}

/// One combined placement holding every testcell: testcells are stacked
/// bottom-up in the given order, separated by `row_gap` of empty space so
/// no two testcells abut, and components take hierarchical names
/// `<testcell>/<instance>`.
pub fn def_for_top(
    testcells: &[Testcell],
    top_name: &str,
    units_per_micron: i64,
    row_gap: i64,
) -> DefDesign {
    let mut components = Vec::new();
    let mut y_off = 0i64;
    let mut width = 0i64;
    for tc in testcells {
        for inst in &tc.instances {
            components.push(DefComponent {
                name: format!("{}/{}", tc.name, inst.name),
                cell: inst.cell.clone(),
                x: inst.x,
                y: inst.y + y_off,
                orientation: inst.orientation,
            });
        }
        width = width.max(tc.die.x_hi);
        y_off += tc.die.height() + row_gap;
    }
    let height = if testcells.is_empty() { 0 } else { y_off - row_gap };
    DefDesign {
        name: top_name.to_string(),
        units_per_micron,
        die: Rect::new(0, 0, width, height),
        components,
    }
}

pub fn emit_def(design: &DefDesign) -> String {
    let mut out = String::new();
    out.push_str("VERSION 5.6 ;\n");
    out.push_str(&format!("DESIGN {} ;\n", design.name));
    out.push_str(&format!("UNITS DISTANCE MICRONS {} ;\n", design.units_per_micron));
    out.push_str(&format!("COMPONENTS {} ;\n", design.components.len()));
    for c in &design.components {
        out.push_str(&format!(
            "- {} {} + PLACED ( {} {} ) {} ;\n",
            c.name,
            c.cell,
            c.x,
            c.y,
            c.orientation.def_code()
        ));
    }
    out.push_str("END COMPONENTS\n");
    out.push_str(&format!(
        "DIEAREA ( {} {} ) ( {} {} ) ;\n",
        design.die.x_lo, design.die.y_lo, design.die.x_hi, design.die.y_hi
    ));
    out.push_str("END DESIGN\n");
    out
}

struct Parser<'a> {
    cursor: Cursor<'a>,
}

impl<'a> Parser<'a> {
    fn next(&mut self, what: &str) -> Result<(&'a str, usize), DefError> {
        self.cursor
            .next()
            .ok_or_else(|| syntax(self.cursor.last_line(), format!("expected {what}, found end of file")))
    }

    fn expect(&mut self, want: &str) -> Result<usize, DefError> {
        let (tok, line) = self.next(&format!("`{want}`"))?;
        if tok == want {
            Ok(line)
        } else {
            Err(syntax(line, format!("expected `{want}`, found `{tok}`")))
        }
    }

    fn integer(&mut self, what: &str) -> Result<i64, DefError> {
        let (tok, line) = self.next(what)?;
        tok.parse::<i64>().map_err(|_| syntax(line, format!("expected {what}, found `{tok}`")))
    }

    fn point(&mut self) -> Result<(i64, i64), DefError> {
        self.expect("(")?;
        let x = self.integer("x coordinate")?;
        let y = self.integer("y coordinate")?;
        self.expect(")")?;
        Ok((x, y))
    }

    fn component(&mut self) -> Result<DefComponent, DefError> {
        let (name, _) = self.next("component name")?;
        let name = name.to_string();
        let (cell, _) = self.next("cell name")?;
        let cell = cell.to_string();
        self.expect("+")?;
        self.expect("PLACED")?;
        let (x, y) = self.point()?;
        let (code, line) = self.next("orientation")?;
        let orientation = Orientation::from_def_code(code)
            .ok_or_else(|| syntax(line, format!("unknown orientation `{code}`")))?;
        self.expect(";")?;
        Ok(DefComponent { name, cell, x, y, orientation })
    }
}

/// Parse the DEF subset. Statement order is free; `TECHNOLOGY` statements
/// are skipped. `DESIGN` and `DIEAREA` are required, units default to
/// 1000 per micron when the `UNITS` statement is absent.
pub fn parse_def(text: &str) -> Result<DefDesign, DefError> {
    let tokens = tokenize(text);
    let mut p = Parser { cursor: Cursor::new(&tokens) };
    let mut name: Option<String> = None;
    let mut units: Option<i64> = None;
    let mut die: Option<Rect> = None;
    let mut components: Option<Vec<DefComponent>> = None;

    while let Some((tok, line)) = p.cursor.next() {
        match tok {
            "VERSION" | "TECHNOLOGY" => {
                p.next("statement argument")?;
                p.expect(";")?;
            }
            "DESIGN" => {
                let (n, _) = p.next("design name")?;
                name = Some(n.to_string());
                p.expect(";")?;
            }
            "UNITS" => {
                p.expect("DISTANCE")?;
                p.expect("MICRONS")?;
                units = Some(p.integer("unit count")?);
                p.expect(";")?;
            }
            "COMPONENTS" => {
                let expected = p.integer("component count")? as usize;
                p.expect(";")?;
                let mut list = Vec::new();
                loop {
                    match p.next("component line or `END COMPONENTS`")? {
                        ("-", _) => list.push(p.component()?),
                        ("END", _) => {
                            p.expect("COMPONENTS")?;
                            break;
                        }
                        (other, line) => {
                            return Err(syntax(line, format!("unexpected token `{other}` in COMPONENTS")))
                        }
                    }
                }
                if list.len() != expected {
                    return Err(DefError::ComponentCount { expected, found: list.len() });
                }
                components = Some(list);
            }
            "DIEAREA" => {
                let (x1, y1) = p.point()?;
                let (x2, y2) = p.point()?;
                p.expect(";")?;
                die = Some(Rect::new(x1, y1, x2, y2));
            }
            "END" => {
                p.expect("DESIGN")?;
                break;
            }
            other => return Err(syntax(line, format!("unexpected statement `{other}`"))),
        }
    }

    Ok(DefDesign {
        name: name.ok_or(DefError::MissingSection("DESIGN"))?,
        units_per_micron: units.unwrap_or(1000),
        die: die.ok_or(DefError::MissingSection("DIEAREA"))?,
        components: components.unwrap_or_default(),
    })
}
