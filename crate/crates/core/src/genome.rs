//! Linear MEP genome: genes, chromosomes, random construction, validation
//! and expression decoding.
//!
//! Gene positions are 1-based everywhere (`Gene::Function` argument indices,
//! text formats, reports). Position 1 lives at `genes()[0]`.

use std::fmt::{self, Write as _};

use rand::Rng;

use crate::error::{Error, Result};
use crate::primitives::{Primitive, PrimitiveSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gene {
    /// Reference to input variable `var` (0-based).
    Terminal { var: usize },
    /// Binary primitive applied to the expressions at two earlier positions.
    Function { op: Primitive, args: [usize; 2] },
}

impl Gene {
    pub fn terminal(var: usize) -> Self {
        Gene::Terminal { var }
    }

    pub fn function(op: Primitive, a: usize, b: usize) -> Self {
        Gene::Function { op, args: [a, b] }
    }

    pub fn is_function(&self) -> bool {
        matches!(self, Gene::Function { .. })
    }

    /// Number of mutable symbols: the head, plus two pointers for functions.
    pub fn slot_count(&self) -> usize {
        if self.is_function() {
            3
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    genes: Vec<Gene>,
}

/// A broken chromosome rule, reported by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// 1-based gene position; 0 for whole-chromosome problems.
    pub position: usize,
    pub rule: Rule,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    Empty,
    FirstGeneNotTerminal,
    ArgumentNotLower { arg: usize },
    ArgumentZero,
    UnknownTerminal { var: usize },
    UnknownFunction { op: Primitive },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            Rule::Empty => write!(f, "chromosome has no genes"),
            Rule::FirstGeneNotTerminal => write!(f, "gene {}: first gene must be a terminal", self.position),
            Rule::ArgumentNotLower { arg } => {
                write!(f, "gene {}: argument {arg} is not lower than its position", self.position)
            }
            Rule::ArgumentZero => write!(f, "gene {}: argument index 0 (positions start at 1)", self.position),
            Rule::UnknownTerminal { var } => {
                write!(f, "gene {}: terminal {var} not in the terminal set", self.position)
            }
            Rule::UnknownFunction { op } => {
                write!(f, "gene {}: function `{op}` not in the function set", self.position)
            }
        }
    }
}

impl Chromosome {
    /// Wraps genes without checking them; see [`validate`].
    pub fn from_genes(genes: Vec<Gene>) -> Self {
        Chromosome { genes }
    }

    pub fn genes(&self) -> &[Gene] {
        &self.genes
    }

    pub fn into_genes(self) -> Vec<Gene> {
        self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    /// Gene at 1-based `position`.
    pub fn gene(&self, position: usize) -> Option<&Gene> {
        position.checked_sub(1).and_then(|i| self.genes.get(i))
    }

    pub fn set_gene(&mut self, position: usize, gene: Gene) -> Result<()> {
        let len = self.genes.len();
        match position.checked_sub(1).and_then(|i| self.genes.get_mut(i)) {
            Some(slot) => {
                *slot = gene;
                Ok(())
            }
            None => Err(Error::GeneIndex { index: position, len }),
        }
    }

    pub fn function_count(&self) -> usize {
        self.genes.iter().filter(|g| g.is_function()).count()
    }

    /// One line per gene: `<pos>: <terminal>` or `<pos>: <op> <a>, <b>`.
    pub fn to_text(&self, pset: &PrimitiveSet) -> String {
        let mut out = String::new();
        for (i, g) in self.genes.iter().enumerate() {
            let _ = match g {
                Gene::Terminal { var } => match pset.terminal_name(*var) {
                    Some(name) => writeln!(out, "{}: {name}", i + 1),
                    None => writeln!(out, "{}: ?{var}", i + 1),
                },
                Gene::Function { op, args } => writeln!(out, "{}: {op} {}, {}", i + 1, args[0], args[1]),
            };
        }
        out
    }

    /// Parses the [`Chromosome::to_text`] format. Blank lines and lines
    /// starting with `#` are skipped. The result is validated.
    pub fn parse(text: &str, pset: &PrimitiveSet) -> Result<Self> {
        let mut genes = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = lineno + 1;
            let (pos, body) = line.split_once(':').ok_or_else(|| Error::parse(lineno, "expected `<pos>: <gene>`"))?;
            let pos: usize =
                pos.trim().parse().map_err(|_| Error::parse(lineno, format!("bad position `{}`", pos.trim())))?;
            if pos != genes.len() + 1 {
                return Err(Error::parse(lineno, format!("expected position {}, found {pos}", genes.len() + 1)));
            }
            genes.push(parse_gene(body.trim(), pset).map_err(|m| Error::parse(lineno, m))?);
        }
        let c = Chromosome { genes };
        validate(&c, pset).map_err(|v| {
            let msg: Vec<String> = v.iter().map(ToString::to_string).collect();
            Error::InvalidChromosome(msg.join("; "))
        })?;
        Ok(c)
    }
}

fn parse_gene(body: &str, pset: &PrimitiveSet) -> std::result::Result<Gene, String> {
    let mut parts = body.splitn(2, char::is_whitespace);
    let head = parts.next().unwrap_or_default();
    match parts.next().map(str::trim) {
        None | Some("") => {
            pset.terminal_by_name(head).map(Gene::terminal).ok_or_else(|| format!("unknown terminal `{head}`"))
        }
        Some(rest) => {
            let op = pset.function_by_name(head).ok_or_else(|| format!("unknown function `{head}`"))?;
            let (a, b) = rest.split_once(',').ok_or_else(|| format!("expected `<a>, <b>` after `{head}`"))?;
            let a = a.trim().parse().map_err(|_| format!("bad argument `{}`", a.trim()))?;
            let b = b.trim().parse().map_err(|_| format!("bad argument `{}`", b.trim()))?;
            Ok(Gene::function(op, a, b))
        }
    }
}

/// Random gene for 1-based `position`. Position 1 is always a terminal.
/// Elsewhere a function is chosen with probability `p_function`, its
/// operator uniformly from the set and both arguments uniformly on
/// `1..position`.
pub fn random_gene<R: Rng + ?Sized>(position: usize, pset: &PrimitiveSet, rng: &mut R, p_function: f64) -> Gene {
    debug_assert!(position >= 1);
    if position > 1 && rng.gen_bool(p_function.clamp(0.0, 1.0)) {
        let fs = pset.functions();
        let op = fs[rng.gen_range(0..fs.len())];
        let a = rng.gen_range(1..position);
        let b = rng.gen_range(1..position);
        Gene::function(op, a, b)
    } else {
        Gene::terminal(rng.gen_range(0..pset.terminal_count()))
    }
}

pub fn random_chromosome<R: Rng + ?Sized>(len: usize, pset: &PrimitiveSet, rng: &mut R, p_function: f64) -> Chromosome {
    let genes = (1..=len).map(|pos| random_gene(pos, pset, rng, p_function)).collect();
    Chromosome { genes }
}

/// Checks all chromosome and gene rules against `pset`.
pub fn validate(c: &Chromosome, pset: &PrimitiveSet) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    if c.genes.is_empty() {
        out.push(Violation { position: 0, rule: Rule::Empty });
    }
    for (i, g) in c.genes.iter().enumerate() {
        let position = i + 1;
        match *g {
            Gene::Terminal { var } => {
                if var >= pset.terminal_count() {
                    out.push(Violation { position, rule: Rule::UnknownTerminal { var } });
                }
            }
            Gene::Function { op, args } => {
                if position == 1 {
                    out.push(Violation { position, rule: Rule::FirstGeneNotTerminal });
                }
                if !pset.contains(op) {
                    out.push(Violation { position, rule: Rule::UnknownFunction { op } });
                }
                for arg in args {
                    if arg == 0 {
                        out.push(Violation { position, rule: Rule::ArgumentZero });
                    } else if arg >= position {
                        out.push(Violation { position, rule: Rule::ArgumentNotLower { arg } });
                    }
                }
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Expression tree rooted at one gene.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(usize),
    Apply(Primitive, Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Infix rendering: `a+b`, `(a+b)*(c+d)`. Gates render as calls,
    /// e.g. `g6(g0(x0, x3), g0(x1, x2))`.
    pub fn to_infix(&self, pset: &PrimitiveSet) -> String {
        let mut s = String::new();
        self.write_infix(pset, &mut s, true);
        s
    }

    fn write_infix(&self, pset: &PrimitiveSet, s: &mut String, top: bool) {
        match self {
            Expr::Var(v) => match pset.terminal_name(*v) {
                Some(name) => s.push_str(name),
                None => {
                    let _ = write!(s, "?{v}");
                }
            },
            Expr::Apply(Primitive::Gate(g), a, b) => {
                let _ = write!(s, "{g}(");
                a.write_infix(pset, s, true);
                s.push_str(", ");
                b.write_infix(pset, s, true);
                s.push(')');
            }
            Expr::Apply(op, a, b) => {
                if !top {
                    s.push('(');
                }
                a.write_infix(pset, s, false);
                s.push_str(&op.name());
                b.write_infix(pset, s, false);
                if !top {
                    s.push(')');
                }
            }
        }
    }

    /// Evaluates one boolean fitness case; `inputs` bit `j` is variable `j`.
    pub fn eval_bool(&self, inputs: u64) -> Option<bool> {
        match self {
            Expr::Var(v) => Some((inputs >> v) & 1 == 1),
            Expr::Apply(op, a, b) => Some(op.as_gate()?.apply_bool(a.eval_bool(inputs)?, b.eval_bool(inputs)?)),
        }
    }

    pub fn eval_real(&self, inputs: &[f64]) -> Option<f64> {
        match self {
            Expr::Var(v) => inputs.get(*v).copied(),
            Expr::Apply(op, a, b) => op.apply_real(a.eval_real(inputs)?, b.eval_real(inputs)?),
        }
    }
}

/// Expression encoded by gene `index` (1-based).
pub fn decode_expression(c: &Chromosome, index: usize) -> Result<Expr> {
    decode_expression_visiting(c, index, &mut |_| {})
}

/// Like [`decode_expression`], calling `visit` with every gene position the
/// traversal reads.
pub fn decode_expression_visiting(c: &Chromosome, index: usize, visit: &mut dyn FnMut(usize)) -> Result<Expr> {
    let gene = c.gene(index).ok_or(Error::GeneIndex { index, len: c.len() })?;
    visit(index);
    match *gene {
        Gene::Terminal { var } => Ok(Expr::Var(var)),
        Gene::Function { op, args: [a, b] } => {
            if a >= index || b >= index {
                return Err(Error::InvalidChromosome(format!("gene {index} points forward")));
            }
            let left = decode_expression_visiting(c, a, visit)?;
            let right = decode_expression_visiting(c, b, visit)?;
            Ok(Expr::Apply(op, Box::new(left), Box::new(right)))
        }
    }
}
