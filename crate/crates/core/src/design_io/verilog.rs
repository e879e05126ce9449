//! Structural Verilog subset: empty-port modules whose bodies are bare
//! instantiations. Leaf instances use the wildcard connection `(.*)`,
//! module instances in the top module use empty parens.

use thiserror::Error;

use super::{tokenize, Cursor};
use crate::abutment::Testcell;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetlistInstance {
    pub cell: String,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetlistModule {
    pub name: String,
    /// Ordered instantiations. In testcell modules these reference library
    /// cells; in the top module they reference the testcell modules.
    pub instances: Vec<NetlistInstance>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetlistError {
    #[error("netlist syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
}

fn syntax(line: usize, message: impl Into<String>) -> NetlistError {
    NetlistError::Syntax { line, message: message.into() }
}

/// The module list a testcell set publishes: one module per testcell plus
/// a top module instantiating each of them once as U1, U2, ...
pub fn netlist_modules(testcells: &[Testcell], top_name: &str) -> Vec<NetlistModule> {
    let mut modules: Vec<NetlistModule> = testcells
        .iter()
        .map(|tc| NetlistModule {
            name: tc.name.clone(),
            instances: tc
                .instances
                .iter()
                .map(|inst| NetlistInstance { cell: inst.cell.clone(), name: inst.name.clone() })
                .collect(),
        })
        .collect();
    modules.push(NetlistModule {
        name: top_name.to_string(),
        instances: testcells
            .iter()
            .enumerate()
            .map(|(i, tc)| NetlistInstance { cell: tc.name.clone(), name: format!("U{}", i + 1) })
            .collect(),
    });
    modules
}

/// Render the netlist for a testcell set. The final module is the top
/// module; its instantiations use empty parens, every other module's use
/// the wildcard form.
pub fn emit_netlist(testcells: &[Testcell], top_name: &str) -> String {
    let modules = netlist_modules(testcells, top_name);
    let mut out = String::new();
    for (i, module) in modules.iter().enumerate() {
        let is_top = i + 1 == modules.len();
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("module {} ();\n", module.name));
        for inst in &module.instances {
            let body = if is_top { "()" } else { "(.*)" };
            out.push_str(&format!("  {} {} {};\n", inst.cell, inst.name, body));
        }
        out.push_str("endmodule\n");
    }
    out
}

struct Parser<'a> {
    cursor: Cursor<'a>,
}

impl<'a> Parser<'a> {
    fn next(&mut self, what: &str) -> Result<(&'a str, usize), NetlistError> {
        self.cursor
            .next()
            .ok_or_else(|| syntax(self.cursor.last_line(), format!("expected {what}, found end of file")))
    }

    fn expect(&mut self, want: &str) -> Result<usize, NetlistError> {
        let (tok, line) = self.next(&format!("`{want}`"))?;
        if tok == want {
            Ok(line)
        } else {
            Err(syntax(line, format!("expected `{want}`, found `{tok}`")))
        }
    }

    fn instance_body(&mut self) -> Result<(), NetlistError> {
        self.expect("(")?;
        match self.next("instance body")? {
            (")", _) => Ok(()),
            (".*", _) => {
                self.expect(")")?;
                Ok(())
            }
            (".", _) => match self.next("`*`")? {
                ("*", _) => {
                    self.expect(")")?;
                    Ok(())
                }
                (tok, line) => Err(syntax(line, format!("expected `*`, found `{tok}`"))),
            },
            (tok, line) => Err(syntax(line, format!("unexpected instance body `{tok}`"))),
        }
    }
}

/// Parse the module subset emitted by [`emit_netlist`]. Instance bodies
/// may be `(.*)`, the spaced variant `(. *)`, or empty parens.
pub fn parse_netlist(text: &str) -> Result<Vec<NetlistModule>, NetlistError> {
    let tokens = tokenize(text);
    let mut p = Parser { cursor: Cursor::new(&tokens) };
    let mut modules = Vec::new();

    while !p.cursor.is_done() {
        p.expect("module")?;
        let (name, _) = p.next("module name")?;
        let name = name.to_string();
        p.expect("(")?;
        p.expect(")")?;
        p.expect(";")?;

        let mut instances = Vec::new();
        loop {
            let (tok, _) = p.next("`endmodule`")?;
            if tok == "endmodule" {
                break;
            }
            let cell = tok.to_string();
            let (inst, _) = p.next("instance name")?;
            let inst = inst.to_string();
            p.instance_body()?;
            p.expect(";")?;
            instances.push(NetlistInstance { cell, name: inst });
        }
        modules.push(NetlistModule { name, instances });
    }
    Ok(modules)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abutment::{make_type_aa, make_type_ab};
    use crate::library::Cell;

    fn cell(name: &str, width: i64) -> Cell {
        Cell {
            name: name.into(),
            width,
            height: 1800,
            height_rows: 1,
            pins: Vec::new(),
            obstructions: Vec::new(),
        }
    }

    #[test]
    fn emits_the_expected_text() {
        let inv = cell("INVX1", 400);
        let tcs = vec![make_type_aa(&inv)];
        let text = emit_netlist(&tcs, "TOP");
        assert_eq!(
            text,
            "module scell_INVX1 ();\n\
             \x20 INVX1 U1 (.*);\n\
             \x20 INVX1 U2 (.*);\n\
             \x20 INVX1 U3 (.*);\n\
             \x20 INVX1 U4 (.*);\n\
             endmodule\n\
             \n\
             module TOP ();\n\
             \x20 scell_INVX1 U1 ();\n\
             endmodule\n"
        );
    }

    #[test]
    fn round_trips_through_the_parser() {
        let a = cell("INVX1", 400);
        let b = cell("NAND2", 600);
        let tcs = vec![make_type_aa(&a), make_type_aa(&b), make_type_ab(&a, &b)];
        let text = emit_netlist(&tcs, "TOP");
        let parsed = parse_netlist(&text).unwrap();
        assert_eq!(parsed, netlist_modules(&tcs, "TOP"));
        // emission is deterministic
        assert_eq!(text, emit_netlist(&tcs, "TOP"));
    }

    #[test]
    fn accepts_spaced_wildcard_and_duplicate_names() {
        let text = "\
module scell_<typeA> ();
  <typeA> U1 (. *);
  <typeA> U2 (. *);
  <typeA> U3 (. *);
  <typeA> U4 (. *);
endmodule

module TOP ();
  scell_<typeA> U1 ();
  scell_<typeA>_<typeB> U1 ();
  mcell_<typeA>_<typeB> U2 ();
endmodule
";
        let modules = parse_netlist(text).unwrap();
        assert_eq!(modules.len(), 2);
        assert_eq!(modules[0].name, "scell_<typeA>");
        assert_eq!(modules[0].instances.len(), 4);
        assert_eq!(modules[0].instances[0].cell, "<typeA>");
        assert_eq!(modules[1].instances.len(), 3);
        assert_eq!(modules[1].instances[1].name, "U1");
    }

    #[test]
    fn rejects_malformed_bodies() {
        let err = parse_netlist("module m ();\n  C U1 (.+);\nendmodule\n").unwrap_err();
        assert!(matches!(err, NetlistError::Syntax { line: 2, .. }), "{err}");
        let err = parse_netlist("module m ();\n  C U1 (.*)\nendmodule\n").unwrap_err();
        assert!(matches!(err, NetlistError::Syntax { .. }), "{err}");
    }

    #[test]
    fn empty_input_is_an_empty_netlist() {
        assert_eq!(parse_netlist("").unwrap(), Vec::new());
    }
}
