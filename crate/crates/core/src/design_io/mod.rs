//! Netlist and placement file exchange.
//!
//! Testcells leave the tool as a structural Verilog netlist plus DEF
//! placements, and the same subset grammars can be read back in. Both
//! emitters are deterministic: the same testcell set produces the same
//! bytes.

mod def;
mod verilog;

pub use def::{def_for_testcell, def_for_top, emit_def, parse_def, DefComponent, DefDesign, DefError};
pub use verilog::{emit_netlist, netlist_modules, parse_netlist, NetlistError, NetlistInstance, NetlistModule};

/// Tokens with their source line; `(`, `)`, and `;` become standalone
/// tokens even when glued to a neighboring word (`TOP;`, `(.*)`).
fn tokenize(text: &str) -> Vec<(String, usize)> {
    let mut tokens = Vec::new();
    for (i, line) in text.lines().enumerate() {
        for word in line.split_whitespace() {
            let mut cur = String::new();
            for ch in word.chars() {
                if matches!(ch, '(' | ')' | ';') {
                    if !cur.is_empty() {
                        tokens.push((std::mem::take(&mut cur), i + 1));
                    }
                    tokens.push((ch.to_string(), i + 1));
                } else {
                    cur.push(ch);
                }
            }
            if !cur.is_empty() {
                tokens.push((cur, i + 1));
            }
        }
    }
    tokens
}

/// Token cursor shared by the two parsers; callers wrap the `Option`
/// results into their own error types.
struct Cursor<'a> {
    tokens: &'a [(String, usize)],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(tokens: &'a [(String, usize)]) -> Cursor<'a> {
        Cursor { tokens, pos: 0 }
    }

    fn is_done(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    /// Line to report an error at when the stream runs out.
    fn last_line(&self) -> usize {
        self.tokens.last().map(|t| t.1).unwrap_or(1)
    }

    fn peek(&self) -> Option<(&'a str, usize)> {
        self.tokens.get(self.pos).map(|(s, l)| (s.as_str(), *l))
    }

    fn next(&mut self) -> Option<(&'a str, usize)> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }
}
