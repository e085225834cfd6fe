//! Subset-sum decision tables.
//!
//! Case `c` of an `n`-input table encodes the member set
//! `M(c) = { j + 1 : bit j of c is set }` drawn from the base set `1..=n`.
//! Its output is whether some subset of `M(c)` sums to the target.

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{TruthVector, MAX_INPUTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnapsackInstance {
    pub n: usize,
    pub k: u64,
}

impl KnapsackInstance {
    pub fn new(n: usize, k: u64) -> Result<Self> {
        let inst = KnapsackInstance { n, k };
        inst.check()?;
        Ok(inst)
    }

    pub fn check(&self) -> Result<()> {
        if !(1..=MAX_INPUTS).contains(&self.n) {
            return Err(Error::Instance(format!("n = {} outside 1..={MAX_INPUTS}", self.n)));
        }
        Ok(())
    }

    pub fn max_sum(&self) -> u64 {
        let n = self.n as u64;
        n * (n + 1) / 2
    }

    /// Targets outside `1..=n(n+1)/2` produce a constant table.
    pub fn is_degenerate(&self) -> bool {
        self.k == 0 || self.k > self.max_sum()
    }
}

/// True iff some subset of `members` (the empty one included) sums to `k`.
///
/// Dynamic programming over achievable sums, kept as a bitset truncated at
/// `k`.
pub fn subset_sum_oracle(members: &[u64], k: u64) -> bool {
    let Ok(k) = usize::try_from(k) else {
        return false;
    };
    let words = k / 64 + 1;
    let mut reach = vec![0u64; words];
    reach[0] = 1;
    for &m in members {
        let Ok(m) = usize::try_from(m) else { continue };
        if m == 0 || m > k {
            continue;
        }
        let (ws, bs) = (m / 64, m % 64);
        for w in (ws..words).rev() {
            let mut shifted = reach[w - ws] << bs;
            if bs > 0 && w > ws {
                shifted |= reach[w - ws - 1] >> (64 - bs);
            }
            reach[w] |= shifted;
        }
        if (reach[k / 64] >> (k % 64)) & 1 == 1 {
            return true;
        }
    }
    (reach[k / 64] >> (k % 64)) & 1 == 1
}

/// Members of the set encoded by fitness case `case`.
pub fn members_of_case(case: usize, n: usize) -> Vec<u64> {
    (0..n).filter(|j| (case >> j) & 1 == 1).map(|j| j as u64 + 1).collect()
}

/// Single-output truth table with a free-text label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    pub outputs: TruthVector,
    pub label: String,
}

impl TruthTable {
    pub fn new(outputs: TruthVector, label: impl Into<String>) -> Self {
        TruthTable { outputs, label: label.into() }
    }

    pub fn inputs(&self) -> usize {
        self.outputs.inputs()
    }

    pub fn rows(&self) -> usize {
        self.outputs.len()
    }

    /// Writes the text format:
    ///
    /// ```text
    /// inputs <n>
    /// label <text>
    /// table <2^n binary characters, case 0 first>
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "inputs {}", self.inputs());
        if !self.label.is_empty() {
            let _ = writeln!(s, "label {}", self.label);
        }
        let _ = writeln!(s, "table {}", self.outputs.to_bit_string());
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut inputs: Option<usize> = None;
        let mut label = String::new();
        let mut table: Option<TruthVector> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "inputs" => {
                    if inputs.is_some() {
                        return Err(Error::parse(line_no, "duplicate `inputs` line"));
                    }
                    let n: usize = value
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(line_no, format!("bad input count `{}`", value.trim())))?;
                    if !(1..=MAX_INPUTS).contains(&n) {
                        return Err(Error::parse(line_no, format!("input count {n} outside 1..={MAX_INPUTS}")));
                    }
                    inputs = Some(n);
                }
                "label" if inputs.is_some() && table.is_none() => label = value.to_string(),
                "table" => {
                    let n = inputs.ok_or_else(|| Error::parse(line_no, "`table` before `inputs`"))?;
                    if table.is_some() {
                        return Err(Error::parse(line_no, "duplicate `table` line"));
                    }
                    let bits = value.trim();
                    if let Some((pos, ch)) = bits.chars().enumerate().find(|(_, c)| *c != '0' && *c != '1') {
                        return Err(Error::parse(line_no, format!("non-binary character `{ch}` at column {pos}")));
                    }
                    if bits.len() != 1 << n {
                        return Err(Error::parse(
                            line_no,
                            format!("expected {} outputs for {n} inputs, found {}", 1usize << n, bits.len()),
                        ));
                    }
                    table = Some(TruthVector::from_bit_string(bits).map_err(|e| Error::parse(line_no, e.to_string()))?);
                }
                other => return Err(Error::parse(line_no, format!("unexpected `{other}`"))),
            }
        }
        let last = text.lines().count().max(1);
        if inputs.is_none() {
            return Err(Error::parse(last, "missing `inputs` line"));
        }
        let outputs = table.ok_or_else(|| Error::parse(last, "missing `table` line"))?;
        Ok(TruthTable { outputs, label })
    }

    pub fn save<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_text().as_bytes())
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self> {
        let mut s = String::new();
        r.read_to_string(&mut s).map_err(|e| Error::Io(e.to_string()))?;
        Self::parse(&s)
    }
}

/// Truth table of the subset-sum decision for `inst`, one row per member set.
pub fn generate_truth_table(inst: &KnapsackInstance) -> Result<TruthTable> {
    inst.check()?;
    if inst.is_degenerate() {
        log::warn!("target {} is outside 1..={} for n = {}; the table is constant", inst.k, inst.max_sum(), inst.n);
    }
    let mut out = TruthVector::zeros(inst.n)?;
    for case in 0..out.len() {
        out.set(case, subset_sum_oracle(&members_of_case(case, inst.n), inst.k));
    }
    Ok(TruthTable::new(out, format!("knapsack n={} k={}", inst.n, inst.k)))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive sub-mask enumeration, independent of the DP.
    fn brute(case: usize, n: usize, k: u64) -> bool {
        let full = case & ((1 << n) - 1);
        let mut sub = full;
        loop {
            let s: u64 = (0..n).filter(|j| (sub >> j) & 1 == 1).map(|j| j as u64 + 1).sum();
            if s == k {
                return true;
            }
            if sub == 0 {
                return false;
            }
            sub = (sub - 1) & full;
        }
    }

    #[test]
    fn oracle_examples() {
        let m = [2, 5, 6];
        assert!(subset_sum_oracle(&m, 7));
        assert!(!subset_sum_oracle(&m, 10));
        let sums: Vec<u64> = (1..=13).filter(|&k| subset_sum_oracle(&m, k)).collect();
        assert_eq!(sums, vec![2, 5, 6, 7, 8, 11, 13]);
        assert!(!subset_sum_oracle(&m, 14));
        assert!(subset_sum_oracle(&[], 0));
        assert!(!subset_sum_oracle(&[], 3));
        assert!(subset_sum_oracle(&[1, 2, 3, 4], 5));
    }

    #[test]
    fn oracle_crosses_word_boundaries() {
        let m = [60, 70, 5, 64];
        for k in 0..=200 {
            let mut expect = false;
            for mask in 0..16u32 {
                let s: u64 = (0..4).filter(|i| mask >> i & 1 == 1).map(|i| m[i]).sum();
                expect |= s == k;
            }
            assert_eq!(subset_sum_oracle(&m, k), expect, "k={k}");
        }
    }

    #[test]
    fn n4_k5_table() {
        let t = generate_truth_table(&KnapsackInstance::new(4, 5).unwrap()).unwrap();
        assert_eq!(t.rows(), 16);
        assert_eq!(t.outputs.count_ones(), 7);
        assert!(t.outputs.get(9));
        assert!(t.outputs.get(6));
        assert!(!t.outputs.get(0));
        for c in 0..16 {
            assert_eq!(t.outputs.get(c), brute(c, 4, 5));
        }
    }

    #[test]
    fn bit_order_for_string_encoding() {
        // "0100110": positions 2, 5, 6 set.
        let case = "0100110".chars().enumerate().filter(|(_, ch)| *ch == '1').map(|(p, _)| 1usize << p).sum::<usize>();
        assert_eq!(case, 50);
        assert_eq!(members_of_case(case, 7), vec![2, 5, 6]);
        let t = generate_truth_table(&KnapsackInstance::new(7, 14).unwrap()).unwrap();
        assert!(!t.outputs.get(50));
    }

    #[test]
    fn unreachable_target_is_constant() {
        let inst = KnapsackInstance::new(3, 7).unwrap();
        assert!(inst.is_degenerate());
        let t = generate_truth_table(&inst).unwrap();
        assert_eq!(t.outputs.count_ones(), 0);
        assert!(t.outputs.is_constant());
        assert!(KnapsackInstance::new(0, 1).is_err());
        assert!(KnapsackInstance::new(21, 1).is_err());
    }

    #[test]
    fn file_round_trip() {
        let t = generate_truth_table(&KnapsackInstance::new(4, 5).unwrap()).unwrap();
        let mut buf = Vec::new();
        t.save(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, format!("inputs 4\nlabel knapsack n=4 k=5\ntable {}\n", t.outputs.to_bit_string()));
        assert_eq!(TruthTable::load(&buf[..]).unwrap(), t);
    }

    #[test]
    fn n1_tables_parse() {
        for bits in ["00", "01", "10", "11"] {
            let t = TruthTable::parse(&format!("inputs 1\ntable {bits}\n")).unwrap();
            assert_eq!(t.outputs.to_bit_string(), bits);
            assert_eq!(t.label, "");
        }
        let t = generate_truth_table(&KnapsackInstance::new(1, 1).unwrap()).unwrap();
        assert_eq!(t.outputs.to_bit_string(), "01");
    }

    #[test]
    fn malformed_tables() {
        let err = |s: &str| TruthTable::parse(s).unwrap_err();
        assert!(matches!(err("inputs 2\ntable 010\n"), Error::Parse { line: 2, .. }));
        assert!(matches!(err("inputs 2\ntable 01x0\n"), Error::Parse { line: 2, .. }));
        assert!(matches!(err("inputs two\ntable 0101\n"), Error::Parse { line: 1, .. }));
        assert!(matches!(err("table 0101\n"), Error::Parse { line: 1, .. }));
        assert!(matches!(err("inputs 2\n"), Error::Parse { .. }));
        assert!(matches!(err("inputs 2\nfoo bar\ntable 0101\n"), Error::Parse { line: 2, .. }));
        assert!(matches!(err("inputs 0\ntable 0\n"), Error::Parse { line: 1, .. }));
        assert!(matches!(err("# c\ninputs 2\ntable 01\n"), Error::Parse { line: 3, .. }));
        let t = TruthTable::parse("# c\ninputs 2\n# d\ntable 0110\n").unwrap();
        assert_eq!(t.outputs.to_bit_string(), "0110");
    }
}
