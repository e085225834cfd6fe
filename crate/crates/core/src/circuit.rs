//! Gate netlists extracted from chromosome genes.
//!
//! Extraction keeps only the function genes reachable from the chosen gene
//! and renumbers them `1..=gates` in chromosome order. Shared subcircuits
//! appear once. No logic simplification is done, so the gate count is the
//! number of reachable function genes.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::eval::{Evaluator, TruthVector};
use crate::genome::{Chromosome, Gene};
use crate::knapsack::TruthTable;
use crate::primitives::Gate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    /// Input variable, 0-based.
    Input(usize),
    /// Gate node, 1-based.
    Node(usize),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Input(j) => write!(f, "x{j}"),
            Source::Node(id) => write!(f, "{id}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Node {
    pub gate: Gate,
    pub sources: [Source; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Netlist {
    inputs: usize,
    nodes: Vec<Node>,
    output: Source,
}

impl Netlist {
    /// Checks that every source exists and precedes its consumer.
    pub fn new(inputs: usize, nodes: Vec<Node>, output: Source) -> Result<Self> {
        let check = |s: Source, before: usize| match s {
            Source::Input(j) if j >= inputs => Err(Error::InputIndex { index: j, inputs }),
            Source::Node(id) if id == 0 || id >= before => {
                Err(Error::InvalidChromosome(format!("node reference {id} is not an earlier node")))
            }
            _ => Ok(()),
        };
        for (i, node) in nodes.iter().enumerate() {
            for s in node.sources {
                check(s, i + 1)?;
            }
        }
        check(output, nodes.len() + 1)?;
        Ok(Netlist { inputs, nodes, output })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn output(&self) -> Source {
        self.output
    }

    pub fn gate_count(&self) -> usize {
        self.nodes.len()
    }

    /// Output for one case, computed gate by gate from a lookup table
    /// rather than through the packed evaluator.
    pub fn eval_case(&self, case: usize) -> bool {
        let mut values = Vec::with_capacity(self.nodes.len());
        let read = |s: Source, values: &[bool]| match s {
            Source::Input(j) => (case >> j) & 1 == 1,
            Source::Node(id) => values[id - 1],
        };
        for node in &self.nodes {
            let a = read(node.sources[0], &values);
            let b = read(node.sources[1], &values);
            values.push(gate_lookup(node.gate, a, b));
        }
        read(self.output, &values)
    }

    pub fn output_column(&self) -> Vec<bool> {
        (0..1usize << self.inputs).map(|c| self.eval_case(c)).collect()
    }

    /// Listing in the chromosome line style:
    ///
    /// ```text
    /// inputs 4
    /// 1: g0 x0, x3
    /// 2: g0 x1, x2
    /// 3: g6 1, 2
    /// output 3
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "inputs {}", self.inputs);
        for (i, n) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "{}: {} {}, {}", i + 1, n.gate, n.sources[0], n.sources[1]);
        }
        let _ = writeln!(s, "output {}", self.output);
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut inputs = None;
        let mut nodes = Vec::new();
        let mut output = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if output.is_some() {
                return Err(Error::parse(line_no, "content after `output`"));
            }
            if let Some(v) = line.strip_prefix("inputs ") {
                let n: usize = v.trim().parse().map_err(|_| Error::parse(line_no, "bad input count"))?;
                inputs = Some(n);
            } else if let Some(v) = line.strip_prefix("output ") {
                let src = parse_source(v.trim()).ok_or_else(|| Error::parse(line_no, "bad output source"))?;
                check_source(src, inputs.unwrap_or(0), nodes.len()).map_err(|m| Error::parse(line_no, m))?;
                output = Some(src);
            } else {
                let Some(n) = inputs else {
                    return Err(Error::parse(line_no, "gate before `inputs`"));
                };
                let node = parse_node(line, nodes.len() + 1).map_err(|m| Error::parse(line_no, m))?;
                for src in node.sources {
                    check_source(src, n, nodes.len()).map_err(|m| Error::parse(line_no, m))?;
                }
                nodes.push(node);
            }
        }
        let last = text.lines().count().max(1);
        let inputs = inputs.ok_or_else(|| Error::parse(last, "missing `inputs` line"))?;
        let output = output.ok_or_else(|| Error::parse(last, "missing `output` line"))?;
        Netlist::new(inputs, nodes, output)
    }
}

fn parse_source(s: &str) -> Option<Source> {
    match s.strip_prefix('x') {
        Some(j) => j.parse().ok().map(Source::Input),
        None => s.parse().ok().map(Source::Node),
    }
}

fn check_source(src: Source, inputs: usize, nodes: usize) -> std::result::Result<(), String> {
    match src {
        Source::Input(j) if j >= inputs => Err(format!("input x{j} out of range for {inputs} inputs")),
        Source::Node(id) if id == 0 || id > nodes => Err(format!("node {id} is not an earlier node")),
        _ => Ok(()),
    }
}

fn parse_node(line: &str, expected: usize) -> std::result::Result<Node, String> {
    let (id, body) = line.split_once(':').ok_or("expected `<id>: <gate> <a>, <b>`")?;
    if id.trim().parse::<usize>().ok() != Some(expected) {
        return Err(format!("expected node {expected}, found `{}`", id.trim()));
    }
    let body = body.trim();
    let (gate, args) = body.split_once(char::is_whitespace).ok_or("missing gate arguments")?;
    let gate = gate
        .strip_prefix('g')
        .and_then(|g| g.parse::<u8>().ok())
        .and_then(|g| Gate::new(g).ok())
        .ok_or_else(|| format!("unknown gate `{gate}`"))?;
    let (a, b) = args.split_once(',').ok_or("expected `<a>, <b>`")?;
    let a = parse_source(a.trim()).ok_or_else(|| format!("bad source `{}`", a.trim()))?;
    let b = parse_source(b.trim()).ok_or_else(|| format!("bad source `{}`", b.trim()))?;
    Ok(Node { gate, sources: [a, b] })
}

// Row bits (a,b) = 00, 01, 10, 11 from least significant.
const GATE_ROWS: [u8; 10] = [0b1000, 0b0100, 0b0010, 0b0001, 0b0110, 0b1001, 0b1110, 0b1101, 0b1011, 0b0111];

fn gate_lookup(gate: Gate, a: bool, b: bool) -> bool {
    let row = (a as u8) << 1 | b as u8;
    (GATE_ROWS[gate.id() as usize] >> row) & 1 == 1
}

/// Netlist for gene `index` (1-based) of a gate chromosome over `inputs`
/// variables.
pub fn extract_circuit(c: &Chromosome, index: usize, inputs: usize) -> Result<Netlist> {
    if index == 0 || index > c.len() {
        return Err(Error::GeneIndex { index, len: c.len() });
    }
    let mut reachable = BTreeSet::new();
    let mut stack = vec![index];
    while let Some(pos) = stack.pop() {
        if let Gene::Function { args, .. } = c.genes()[pos - 1] {
            if reachable.insert(pos) {
                for a in args {
                    if a == 0 || a >= pos {
                        return Err(Error::InvalidChromosome(format!("gene {pos} has a bad argument")));
                    }
                    stack.push(a);
                }
            }
        }
    }
    // Position -> node id, ascending positions give a topological order.
    let mut ids = vec![0usize; c.len() + 1];
    for (id, &pos) in reachable.iter().enumerate() {
        ids[pos] = id + 1;
    }
    let source = |pos: usize| -> Result<Source> {
        match c.genes()[pos - 1] {
            Gene::Terminal { var } if var < inputs => Ok(Source::Input(var)),
            Gene::Terminal { var } => Err(Error::InputIndex { index: var, inputs }),
            Gene::Function { .. } => Ok(Source::Node(ids[pos])),
        }
    };
    let mut nodes = Vec::with_capacity(reachable.len());
    for &pos in &reachable {
        let Gene::Function { op, args: [a, b] } = c.genes()[pos - 1] else { unreachable!() };
        let gate = op.as_gate().ok_or_else(|| Error::PrimitiveMismatch(op.name()))?;
        nodes.push(Node { gate, sources: [source(a)?, source(b)?] });
    }
    Netlist::new(inputs, nodes, source(index)?)
}

pub fn gate_count(nl: &Netlist) -> usize {
    nl.gate_count()
}

/// A perfect gene and its netlist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerfectCircuit {
    pub gene: usize,
    pub netlist: Netlist,
}

/// Smallest netlist among genes matching `target` exactly; ties go to the
/// lowest gene position.
pub fn shortest_perfect_circuit(c: &Chromosome, target: &TruthTable) -> Result<Option<PerfectCircuit>> {
    let n = target.inputs();
    let mut eval = Evaluator::new(n)?;
    let perfect: Vec<usize> =
        eval.evaluate(c)?.iter().enumerate().filter(|(_, v)| *v == &target.outputs).map(|(i, _)| i + 1).collect();
    let mut best: Option<PerfectCircuit> = None;
    for gene in perfect {
        let netlist = extract_circuit(c, gene, n)?;
        if best.as_ref().is_none_or(|b| netlist.gate_count() < b.netlist.gate_count()) {
            best = Some(PerfectCircuit { gene, netlist });
        }
    }
    Ok(best)
}

/// Cases where the netlist disagrees with `target`.
pub fn mismatches(nl: &Netlist, target: &TruthTable) -> Result<Vec<usize>> {
    if nl.inputs() != target.inputs() {
        return Err(Error::LengthMismatch { left: 1 << nl.inputs(), right: target.rows() });
    }
    Ok((0..target.rows()).filter(|&c| nl.eval_case(c) != target.outputs.get(c)).collect())
}

pub fn verify(nl: &Netlist, target: &TruthTable) -> Result<bool> {
    Ok(mismatches(nl, target)?.is_empty())
}

/// Output column as a packed vector.
pub fn netlist_truth_vector(nl: &Netlist) -> Result<TruthVector> {
    TruthVector::from_bools(&nl.output_column())
}

/// Graphviz description. Every input gets a node, gates are boxes labelled
/// with their formula, edges carry the `a`/`b` operand role.
pub fn export_dot(nl: &Netlist) -> String {
    let name = |s: Source| match s {
        Source::Input(j) => format!("x{j}"),
        Source::Node(id) => format!("n{id}"),
    };
    let mut s = String::from("digraph circuit {\n  rankdir=LR;\n");
    for j in 0..nl.inputs {
        let _ = writeln!(s, "  x{j} [shape=circle, label=\"x{j}\"];");
    }
    for (i, n) in nl.nodes.iter().enumerate() {
        let _ = writeln!(s, "  n{} [shape=box, label=\"{}: {}\"];", i + 1, n.gate, n.gate.formula());
    }
    s.push_str("  out [shape=doublecircle, label=\"out\"];\n");
    for (i, n) in nl.nodes.iter().enumerate() {
        for (role, src) in ["a", "b"].iter().zip(n.sources) {
            let _ = writeln!(s, "  {} -> n{} [label=\"{role}\"];", name(src), i + 1);
        }
    }
    let _ = writeln!(s, "  {} -> out;", name(nl.output));
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knapsack::{generate_truth_table, KnapsackInstance};
    use crate::primitives::Primitive;

    fn g(id: u8) -> Primitive {
        Primitive::Gate(Gate::new(id).unwrap())
    }

    /// (x0·x3) + (x1·x2): sets {1,4} or {2,3} reach 5.
    fn three_gate() -> Chromosome {
        Chromosome::from_genes(vec![
            Gene::terminal(0),
            Gene::terminal(3),
            Gene::function(g(0), 1, 2),
            Gene::terminal(1),
            Gene::terminal(2),
            Gene::function(g(0), 4, 5),
            Gene::function(g(6), 3, 6),
        ])
    }

    fn table(n: usize, k: u64) -> TruthTable {
        generate_truth_table(&KnapsackInstance::new(n, k).unwrap()).unwrap()
    }

    #[test]
    fn lookup_matches_gate_words() {
        for gate in Gate::all() {
            for (a, b) in [(false, false), (false, true), (true, false), (true, true)] {
                assert_eq!(gate_lookup(gate, a, b), gate.apply_bool(a, b), "{gate} {a} {b}");
            }
        }
    }

    #[test]
    fn three_gate_extraction() {
        let nl = extract_circuit(&three_gate(), 7, 4).unwrap();
        assert_eq!(gate_count(&nl), 3);
        assert_eq!(nl.to_text(), "inputs 4\n1: g0 x0, x3\n2: g0 x1, x2\n3: g6 1, 2\noutput 3\n");
        assert!(verify(&nl, &table(4, 5)).unwrap());
        let diff = mismatches(&nl, &table(4, 6)).unwrap();
        assert!(diff.contains(&9), "{diff:?}");
        assert!(!verify(&nl, &table(4, 6)).unwrap());
    }

    #[test]
    fn terminal_gene_extracts_to_wire() {
        let nl = extract_circuit(&three_gate(), 2, 4).unwrap();
        assert_eq!(gate_count(&nl), 0);
        assert_eq!(nl.output(), Source::Input(3));
        let x0 = TruthTable::new(crate::eval::input_truth_vector(0, 4).unwrap(), "");
        assert!(verify(&extract_circuit(&three_gate(), 1, 4).unwrap(), &x0).unwrap());
    }

    #[test]
    fn dead_genes_are_pruned() {
        let mut genes = three_gate().into_genes();
        genes.insert(6, Gene::function(g(4), 1, 2));
        // Renumber the final OR so it skips the dead XOR at position 7.
        genes[7] = Gene::function(g(6), 3, 6);
        let c = Chromosome::from_genes(genes);
        let nl = extract_circuit(&c, 8, 4).unwrap();
        assert_eq!(gate_count(&nl), 3);
        assert!(nl.nodes().iter().all(|n| n.gate != Gate::new(4).unwrap()));
    }

    #[test]
    fn shared_subcircuit_counted_once() {
        let c = Chromosome::from_genes(vec![
            Gene::terminal(0),
            Gene::terminal(1),
            Gene::function(g(0), 1, 2),
            Gene::function(g(6), 3, 3),
        ]);
        assert_eq!(gate_count(&extract_circuit(&c, 4, 2).unwrap()), 2);
    }

    #[test]
    fn extraction_errors() {
        assert!(matches!(extract_circuit(&three_gate(), 0, 4), Err(Error::GeneIndex { .. })));
        assert!(matches!(extract_circuit(&three_gate(), 8, 4), Err(Error::GeneIndex { .. })));
        assert!(matches!(extract_circuit(&three_gate(), 7, 3), Err(Error::InputIndex { .. })));
    }

    #[test]
    fn shortest_perfect_prefers_fewer_gates() {
        let t = table(4, 5);
        assert_eq!(shortest_perfect_circuit(&three_gate(), &table(4, 6)).unwrap(), None);
        let one = shortest_perfect_circuit(&three_gate(), &t).unwrap().unwrap();
        assert_eq!((one.gene, one.netlist.gate_count()), (7, 3));

        // Gene 9 is a 5-gate solution, gene 10 the 3-gate one.
        let mut genes = three_gate().into_genes();
        genes.truncate(6);
        genes.push(Gene::function(g(7), 1, 1)); // 7: x0 + !x0 = 1
        genes.push(Gene::function(g(0), 3, 7)); // 8: x0·x3·1
        genes.push(Gene::function(g(6), 8, 6)); // 9
        genes.push(Gene::function(g(6), 3, 6)); // 10
        let c = Chromosome::from_genes(genes);
        assert_eq!(extract_circuit(&c, 9, 4).unwrap().gate_count(), 5);
        let best = shortest_perfect_circuit(&c, &t).unwrap().unwrap();
        assert_eq!((best.gene, best.netlist.gate_count()), (10, 3));
    }

    #[test]
    fn text_round_trip_and_errors() {
        let nl = extract_circuit(&three_gate(), 7, 4).unwrap();
        assert_eq!(Netlist::parse(&nl.to_text()).unwrap(), nl);
        assert!(matches!(Netlist::parse("inputs 2\n1: g0 x0, 2\noutput 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(Netlist::parse("inputs 2\n1: g12 x0, x1\noutput 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(Netlist::parse("inputs 2\n1: g0 x0, x1\n"), Err(Error::Parse { .. })));
        assert!(matches!(Netlist::parse("inputs 2\noutput x5\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn dot_export() {
        let nl = extract_circuit(&three_gate(), 7, 4).unwrap();
        let dot = export_dot(&nl);
        assert_eq!(dot, export_dot(&nl));
        assert_eq!(dot.matches("->").count(), 7);
        assert_eq!(dot.matches("shape=box").count(), 3);
        assert_eq!(dot.matches("shape=circle").count(), 4);
        assert!(dot.contains("n3 -> out;"));

        let wire = Netlist::new(1, vec![], Source::Input(0)).unwrap();
        let dot = export_dot(&wire);
        assert_eq!(dot.matches("->").count(), 1);
        assert!(dot.contains("x0 -> out;"));
    }
}
