//! Bit-parallel evaluation and fitness assignment.
//!
//! A chromosome is evaluated in one top-down pass: every gene's output over
//! all fitness cases is computed from the already-computed outputs of its
//! arguments, so each function gene costs exactly one vector operation and
//! every gene yields a fitness. The chromosome's fitness is the minimum over
//! its genes, ties going to the lowest position.

use std::fmt;

use crate::error::{Error, Result};
use crate::genome::{Chromosome, Gene};
use crate::primitives::Gate;

/// Largest supported number of circuit inputs (2^20 fitness cases).
pub const MAX_INPUTS: usize = 20;

/// Output bits of one node across all `2^n` fitness cases, packed 64 per
/// word. Case `c` lives at bit `c % 64` of word `c / 64`; unused high bits of
/// a short vector are kept zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruthVector {
    inputs: usize,
    words: Vec<u64>,
}

fn word_count(inputs: usize) -> usize {
    (1usize << inputs).div_ceil(64)
}

fn tail_mask(inputs: usize) -> u64 {
    if inputs >= 6 {
        u64::MAX
    } else {
        (1u64 << (1u32 << inputs)) - 1
    }
}

fn check_inputs(inputs: usize) -> Result<()> {
    if (1..=MAX_INPUTS).contains(&inputs) {
        Ok(())
    } else {
        Err(Error::InputCount(inputs))
    }
}

impl TruthVector {
    pub fn zeros(inputs: usize) -> Result<Self> {
        check_inputs(inputs)?;
        Ok(TruthVector { inputs, words: vec![0; word_count(inputs)] })
    }

    pub fn constant(inputs: usize, value: bool) -> Result<Self> {
        let mut v = Self::zeros(inputs)?;
        if value {
            v.words.fill(u64::MAX);
            v.mask_tail();
        }
        Ok(v)
    }

    /// Builds a vector from one bool per case; the length must be `2^n`.
    pub fn from_bools(bits: &[bool]) -> Result<Self> {
        let inputs = inputs_for_len(bits.len())?;
        let mut v = Self::zeros(inputs)?;
        for (c, &b) in bits.iter().enumerate() {
            v.set(c, b);
        }
        Ok(v)
    }

    /// Parses a `0`/`1` string; character `c` is case `c`.
    pub fn from_bit_string(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .enumerate()
            .map(|(i, ch)| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::parse(0, format!("non-binary character `{other}` at position {i}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bools(&bits)
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len()).map(|c| if self.get(c) { '1' } else { '0' }).collect()
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    /// Number of fitness cases, `2^n`.
    pub fn len(&self) -> usize {
        1 << self.inputs
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, case: usize) -> bool {
        assert!(case < self.len(), "case {case} out of range");
        (self.words[case / 64] >> (case % 64)) & 1 == 1
    }

    pub fn set(&mut self, case: usize, value: bool) {
        assert!(case < self.len(), "case {case} out of range");
        let bit = 1u64 << (case % 64);
        if value {
            self.words[case / 64] |= bit;
        } else {
            self.words[case / 64] &= !bit;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_constant(&self) -> bool {
        let ones = self.count_ones();
        ones == 0 || ones == self.len()
    }

    /// Number of cases where the two vectors differ.
    pub fn hamming(&self, other: &TruthVector) -> Result<usize> {
        self.same_shape(other)?;
        Ok(self.words.iter().zip(&other.words).map(|(a, b)| (a ^ b).count_ones() as usize).sum())
    }

    /// Cases where the two vectors differ, ascending.
    pub fn mismatches(&self, other: &TruthVector) -> Result<Vec<usize>> {
        self.same_shape(other)?;
        Ok((0..self.len()).filter(|&c| self.get(c) != other.get(c)).collect())
    }

    fn same_shape(&self, other: &TruthVector) -> Result<()> {
        if self.inputs != other.inputs {
            return Err(Error::LengthMismatch { left: self.len(), right: other.len() });
        }
        Ok(())
    }

    fn mask_tail(&mut self) {
        if let Some(last) = self.words.last_mut() {
            *last &= tail_mask(self.inputs);
        }
    }

    fn assign_gate(&mut self, gate: Gate, a: &TruthVector, b: &TruthVector) {
        for ((out, &x), &y) in self.words.iter_mut().zip(&a.words).zip(&b.words) {
            *out = gate.apply_word(x, y);
        }
        self.mask_tail();
    }
}

impl fmt::Debug for TruthVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruthVector({})", self.to_bit_string())
    }
}

fn inputs_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::InputCount(len));
    }
    let n = len.trailing_zeros() as usize;
    check_inputs(n)?;
    Ok(n)
}

/// Column of input variable `j`: bit `c` is bit `j` of the case index.
pub fn input_truth_vector(j: usize, inputs: usize) -> Result<TruthVector> {
    check_inputs(inputs)?;
    if j >= inputs {
        return Err(Error::InputIndex { index: j, inputs });
    }
    let mut v = TruthVector::zeros(inputs)?;
    if j < 6 {
        // Within a word the pattern repeats every 2^(j+1) bits.
        let period = 1u32 << (j + 1);
        let mut pattern = 0u64;
        for bit in 0..64u32 {
            if bit % period >= period / 2 {
                pattern |= 1 << bit;
            }
        }
        v.words.fill(pattern);
    } else {
        let span = 1usize << (j - 6);
        for (w, word) in v.words.iter_mut().enumerate() {
            if (w / span) % 2 == 1 {
                *word = u64::MAX;
            }
        }
    }
    v.mask_tail();
    Ok(v)
}

/// Bitwise application of gate `gate_id` (0..=9).
pub fn apply_gate(gate_id: u8, a: &TruthVector, b: &TruthVector) -> Result<TruthVector> {
    let gate = Gate::new(gate_id)?;
    a.same_shape(b)?;
    let mut out = a.clone();
    out.assign_gate(gate, a, b);
    Ok(out)
}

/// Reusable evaluation state for one input count.
///
/// Holds the input columns and one scratch vector per gene, and counts gate
/// applications so the single-pass property can be observed.
#[derive(Debug, Clone)]
pub struct Evaluator {
    inputs: Vec<TruthVector>,
    scratch: Vec<TruthVector>,
    applications: u64,
}

impl Evaluator {
    pub fn new(inputs: usize) -> Result<Self> {
        let columns = (0..inputs).map(|j| input_truth_vector(j, inputs)).collect::<Result<_>>()?;
        Ok(Evaluator { inputs: columns, scratch: Vec::new(), applications: 0 })
    }

    pub fn input_count(&self) -> usize {
        self.inputs.len()
    }

    /// Total gate-vector applications performed so far.
    pub fn applications(&self) -> u64 {
        self.applications
    }

    pub fn reset_applications(&mut self) {
        self.applications = 0;
    }

    /// Evaluates every gene; element `i` of the result is gene `i + 1`.
    pub fn evaluate(&mut self, c: &Chromosome) -> Result<&[TruthVector]> {
        let n = self.inputs.len();
        let zero = TruthVector::zeros(n)?;
        self.scratch.resize(c.len(), zero);
        for (i, gene) in c.genes().iter().enumerate() {
            let (done, rest) = self.scratch.split_at_mut(i);
            let out = &mut rest[0];
            match *gene {
                Gene::Terminal { var } => {
                    let col = self.inputs.get(var).ok_or(Error::InputIndex { index: var, inputs: n })?;
                    out.words.copy_from_slice(&col.words);
                }
                Gene::Function { op, args: [a, b] } => {
                    let gate = op.as_gate().ok_or_else(|| Error::PrimitiveMismatch(op.name()))?;
                    let position = i + 1;
                    if a == 0 || b == 0 || a >= position || b >= position {
                        return Err(Error::InvalidChromosome(format!("gene {position} has a bad argument")));
                    }
                    out.assign_gate(gate, &done[a - 1], &done[b - 1]);
                    self.applications += 1;
                }
            }
        }
        Ok(&self.scratch[..c.len()])
    }

    /// Hamming fitness of every gene against `target`.
    pub fn fitness(&mut self, c: &Chromosome, target: &TruthVector) -> Result<FitnessReport> {
        if target.inputs() != self.inputs.len() {
            return Err(Error::LengthMismatch { left: 1 << self.inputs.len(), right: target.len() });
        }
        let vectors = self.evaluate(c)?;
        let per_gene = vectors.iter().map(|v| v.hamming(target).map(|d| d as f64)).collect::<Result<Vec<_>>>()?;
        FitnessReport::from_per_gene(per_gene)
    }
}

/// One vector per gene, evaluated in a single pass.
pub fn evaluate_boolean(c: &Chromosome, inputs: usize) -> Result<Vec<TruthVector>> {
    Ok(Evaluator::new(inputs)?.evaluate(c)?.to_vec())
}

pub fn fitness_boolean(c: &Chromosome, target: &TruthVector) -> Result<FitnessReport> {
    Evaluator::new(target.inputs())?.fitness(c, target)
}

/// Per-gene fitness and the chromosome's best (minimum) entry.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessReport {
    pub best_fitness: f64,
    /// 1-based position of the first gene attaining `best_fitness`.
    pub best_gene: usize,
    pub per_gene_fitness: Vec<f64>,
}

impl FitnessReport {
    pub fn from_per_gene(per_gene_fitness: Vec<f64>) -> Result<Self> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &f) in per_gene_fitness.iter().enumerate() {
            if best.is_none_or(|(_, b)| f < b) {
                best = Some((i, f));
            }
        }
        let (i, best_fitness) = best.ok_or_else(|| Error::InvalidChromosome("chromosome has no genes".into()))?;
        Ok(FitnessReport { best_fitness, best_gene: i + 1, per_gene_fitness })
    }

    pub fn is_perfect(&self) -> bool {
        self.best_fitness == 0.0
    }
}

/// One regression sample: a value per terminal and the expected output.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionCase {
    pub inputs: Vec<f64>,
    pub target: f64,
}

impl RegressionCase {
    pub fn new(inputs: Vec<f64>, target: f64) -> Self {
        RegressionCase { inputs, target }
    }
}

/// Value of every gene on one case. Non-finite entries mark expressions
/// that overflowed or became undefined.
pub fn evaluate_regression(c: &Chromosome, case: &RegressionCase) -> Result<Vec<f64>> {
    let mut values: Vec<f64> = Vec::with_capacity(c.len());
    for (i, gene) in c.genes().iter().enumerate() {
        let v = match *gene {
            Gene::Terminal { var } => {
                *case.inputs.get(var).ok_or(Error::InputIndex { index: var, inputs: case.inputs.len() })?
            }
            Gene::Function { op, args: [a, b] } => {
                let position = i + 1;
                if a == 0 || b == 0 || a >= position || b >= position {
                    return Err(Error::InvalidChromosome(format!("gene {position} has a bad argument")));
                }
                op.apply_real(values[a - 1], values[b - 1]).ok_or_else(|| Error::PrimitiveMismatch(op.name()))?
            }
        };
        values.push(v);
    }
    Ok(values)
}

/// Sum of absolute errors per gene; infeasible genes get `+inf`.
pub fn fitness_regression(c: &Chromosome, cases: &[RegressionCase]) -> Result<FitnessReport> {
    if cases.is_empty() {
        return Err(Error::NoCases);
    }
    let mut per_gene = vec![0.0f64; c.len()];
    for case in cases {
        for (acc, o) in per_gene.iter_mut().zip(evaluate_regression(c, case)?) {
            *acc += (o - case.target).abs();
        }
    }
    for f in &mut per_gene {
        if !f.is_finite() {
            *f = f64::INFINITY;
        }
    }
    FitnessReport::from_per_gene(per_gene)
}
