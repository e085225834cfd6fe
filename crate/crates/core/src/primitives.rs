//! Function and terminal sets.
//!
//! Every primitive is binary. Two families exist: the ten two-input logic
//! gates used for circuit synthesis, and `+`, `-`, `*` for symbolic
//! regression.

use std::fmt;

use crate::error::{Error, Result};

/// One of the ten two-input gates, identified by its id 0..=9.
///
/// | id | output  | id | output  |
/// |----|---------|----|---------|
/// | 0  | a·b     | 5  | a ⊕ ¬b  |
/// | 1  | a·¬b    | 6  | a + b   |
/// | 2  | ¬a·b    | 7  | a + ¬b  |
/// | 3  | ¬a·¬b   | 8  | ¬a + b  |
/// | 4  | a ⊕ b   | 9  | ¬a + ¬b |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gate(u8);

impl Gate {
    pub const COUNT: u8 = 10;

    pub fn new(id: u8) -> Result<Self> {
        if id < Self::COUNT {
            Ok(Gate(id))
        } else {
            Err(Error::UnknownGate(id))
        }
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Gate> {
        (0..Self::COUNT).map(Gate)
    }

    /// Applies the gate to 64 packed fitness cases at once.
    #[inline]
    pub fn apply_word(self, a: u64, b: u64) -> u64 {
        match self.0 {
            0 => a & b,
            1 => a & !b,
            2 => !a & b,
            3 => !a & !b,
            4 => a ^ b,
            5 => a ^ !b,
            6 => a | b,
            7 => a | !b,
            8 => !a | b,
            _ => !a | !b,
        }
    }

    #[inline]
    pub fn apply_bool(self, a: bool, b: bool) -> bool {
        self.apply_word(a as u64, b as u64) & 1 == 1
    }

    /// Short name used in chromosome and netlist text, e.g. `g4`.
    pub fn name(self) -> String {
        format!("g{}", self.0)
    }

    /// Formula over inputs `a` and `b` in ASCII operators.
    pub fn formula(self) -> &'static str {
        const FORMULAS: [&str; 10] =
            ["a & b", "a & !b", "!a & b", "!a & !b", "a ^ b", "a ^ !b", "a | b", "a | !b", "!a | b", "!a | !b"];
        FORMULAS[self.0 as usize]
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Primitive {
    Gate(Gate),
    Add,
    Sub,
    Mul,
}

impl Primitive {
    pub fn name(self) -> String {
        match self {
            Primitive::Gate(g) => g.name(),
            Primitive::Add => "+".into(),
            Primitive::Sub => "-".into(),
            Primitive::Mul => "*".into(),
        }
    }

    pub fn apply_real(self, a: f64, b: f64) -> Option<f64> {
        match self {
            Primitive::Add => Some(a + b),
            Primitive::Sub => Some(a - b),
            Primitive::Mul => Some(a * b),
            Primitive::Gate(_) => None,
        }
    }

    pub fn as_gate(self) -> Option<Gate> {
        match self {
            Primitive::Gate(g) => Some(g),
            _ => None,
        }
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Functions plus named terminals. Terminal `i` refers to input variable `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveSet {
    functions: Vec<Primitive>,
    terminals: Vec<String>,
}

impl PrimitiveSet {
    pub fn new(functions: Vec<Primitive>, terminals: Vec<String>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::PrimitiveSet("no functions".into()));
        }
        if terminals.is_empty() {
            return Err(Error::PrimitiveSet("no terminals".into()));
        }
        for (i, f) in functions.iter().enumerate() {
            if functions[..i].contains(f) {
                return Err(Error::PrimitiveSet(format!("duplicate function `{f}`")));
            }
        }
        for (i, t) in terminals.iter().enumerate() {
            if terminals[..i].contains(t) {
                return Err(Error::PrimitiveSet(format!("duplicate terminal `{t}`")));
            }
            if t.is_empty() || t.chars().any(|c| c.is_whitespace() || c == ',' || c == ':') {
                return Err(Error::PrimitiveSet(format!("bad terminal name `{t}`")));
            }
            if functions.iter().any(|f| f.name() == *t) {
                return Err(Error::PrimitiveSet(format!("terminal `{t}` shadows a function")));
            }
        }
        Ok(PrimitiveSet { functions, terminals })
    }

    /// All ten gates over inputs `x0..x{n-1}`.
    pub fn gates(inputs: usize) -> Result<Self> {
        Self::new(Gate::all().map(Primitive::Gate).collect(), numbered_terminals(inputs))
    }

    /// `+`, `-`, `*` over the given terminal names.
    pub fn arithmetic<S: Into<String>>(terminals: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::new(vec![Primitive::Add, Primitive::Sub, Primitive::Mul], terminals.into_iter().map(Into::into).collect())
    }

    pub fn functions(&self) -> &[Primitive] {
        &self.functions
    }

    pub fn terminal_count(&self) -> usize {
        self.terminals.len()
    }

    pub fn terminal_name(&self, index: usize) -> Option<&str> {
        self.terminals.get(index).map(String::as_str)
    }

    pub fn contains(&self, op: Primitive) -> bool {
        self.functions.contains(&op)
    }

    pub fn function_by_name(&self, name: &str) -> Option<Primitive> {
        self.functions.iter().copied().find(|f| f.name() == name)
    }

    pub fn terminal_by_name(&self, name: &str) -> Option<usize> {
        self.terminals.iter().position(|t| t == name)
    }

    /// True when every function is a logic gate.
    pub fn is_boolean(&self) -> bool {
        self.functions.iter().all(|f| f.as_gate().is_some())
    }
}

fn numbered_terminals(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_ids_are_bounded() {
        assert!(Gate::new(9).is_ok());
        assert_eq!(Gate::new(10), Err(Error::UnknownGate(10)));
    }

    #[test]
    fn gate_truth_tables() {
        // Row order (a,b) = (0,0),(0,1),(1,0),(1,1).
        let expect: [[bool; 4]; 10] = [
            [false, false, false, true],
            [false, false, true, false],
            [false, true, false, false],
            [true, false, false, false],
            [false, true, true, false],
            [true, false, false, true],
            [false, true, true, true],
            [true, false, true, true],
            [true, true, false, true],
            [true, true, true, false],
        ];
        for g in Gate::all() {
            let got: Vec<bool> = [(false, false), (false, true), (true, false), (true, true)]
                .iter()
                .map(|&(a, b)| g.apply_bool(a, b))
                .collect();
            assert_eq!(got, expect[g.id() as usize], "gate {g}");
        }
    }

    #[test]
    fn pset_rejects_degenerate_sets() {
        assert!(PrimitiveSet::new(vec![], vec!["a".into()]).is_err());
        assert!(PrimitiveSet::new(vec![Primitive::Add], vec![]).is_err());
        assert!(PrimitiveSet::new(vec![Primitive::Add, Primitive::Add], vec!["a".into()]).is_err());
        assert!(PrimitiveSet::gates(0).is_err());
        assert!(PrimitiveSet::arithmetic(["a", "a"]).is_err());
    }

    #[test]
    fn name_lookup() {
        let p = PrimitiveSet::gates(3).unwrap();
        assert_eq!(p.terminal_by_name("x2"), Some(2));
        assert_eq!(p.function_by_name("g7"), Some(Primitive::Gate(Gate(7))));
        assert!(p.is_boolean());
        assert!(!PrimitiveSet::arithmetic(["a"]).unwrap().is_boolean());
    }
}
