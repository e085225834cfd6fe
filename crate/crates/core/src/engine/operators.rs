//! Selection, recombination and mutation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Individual;
use crate::error::{Error, Result};
use crate::genome::{random_gene, Chromosome, Gene};
use crate::primitives::PrimitiveSet;

/// Binary tournament: two uniform draws with replacement, lower fitness
/// wins, a tie is settled by a fair coin.
pub fn tournament_select<R: Rng + ?Sized>(pop: &[Individual], rng: &mut R) -> usize {
    let a = rng.gen_range(0..pop.len());
    let b = rng.gen_range(0..pop.len());
    let (fa, fb) = (pop[a].fitness(), pop[b].fitness());
    if fa < fb {
        a
    } else if fb < fa {
        b
    } else if rng.gen_bool(0.5) {
        a
    } else {
        b
    }
}

/// Which parent the first offspring takes a gene from; the second
/// offspring takes the other parent's gene.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parent {
    First,
    Second,
}

pub fn uniform_crossover_with_mask(
    p1: &Chromosome,
    p2: &Chromosome,
    mask: &[Parent],
) -> Result<(Chromosome, Chromosome)> {
    if p1.len() != p2.len() {
        return Err(Error::ChromosomeLength { left: p1.len(), right: p2.len() });
    }
    if mask.len() != p1.len() {
        return Err(Error::ChromosomeLength { left: p1.len(), right: mask.len() });
    }
    let (o1, o2) = p1
        .genes()
        .iter()
        .zip(p2.genes())
        .zip(mask)
        .map(|((&a, &b), m)| match m {
            Parent::First => (a, b),
            Parent::Second => (b, a),
        })
        .unzip();
    Ok((Chromosome::from_genes(o1), Chromosome::from_genes(o2)))
}

/// Uniform recombination with one fair coin per position.
pub fn uniform_crossover<R: Rng + ?Sized>(
    p1: &Chromosome,
    p2: &Chromosome,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome)> {
    let mask: Vec<Parent> =
        (0..p1.len()).map(|_| if rng.gen_bool(0.5) { Parent::First } else { Parent::Second }).collect();
    uniform_crossover_with_mask(p1, p2, &mask)
}

/// How `mutations_per_chromosome` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationMode {
    /// Exactly that many events, slots drawn uniformly with replacement.
    #[default]
    Exact,
    /// Each slot mutates independently with probability `m / slots`.
    Expected,
}

/// A single symbol change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationEvent {
    /// Replace the whole gene at `position`.
    Head { position: usize, gene: Gene },
    /// Repoint argument `which` (0 or 1) of the function gene at `position`.
    Arg { position: usize, which: usize, value: usize },
}

pub fn apply_mutation(c: &mut Chromosome, event: MutationEvent) -> Result<()> {
    match event {
        MutationEvent::Head { position, gene } => c.set_gene(position, gene),
        MutationEvent::Arg { position, which, value } => {
            let len = c.len();
            match c.gene(position) {
                Some(&Gene::Function { op, mut args }) if which < 2 => {
                    args[which] = value;
                    c.set_gene(position, Gene::Function { op, args })
                }
                Some(_) => Err(Error::InvalidChromosome(format!("gene {position} has no argument {which}"))),
                None => Err(Error::GeneIndex { index: position, len }),
            }
        }
    }
}

/// A head event redraws only the head symbol. A function gene keeps its
/// arguments; a terminal that was a function in the parent regains the
/// parent's arguments.
fn random_event<R: Rng + ?Sized>(
    parent: &Chromosome,
    c: &Chromosome,
    position: usize,
    slot: usize,
    pset: &PrimitiveSet,
    rng: &mut R,
    p_function: f64,
) -> MutationEvent {
    if slot == 0 {
        let mut gene = random_gene(position, pset, rng, p_function);
        if let Gene::Function { args, .. } = &mut gene {
            let kept = [&c.genes()[position - 1], &parent.genes()[position - 1]].into_iter().find_map(|g| match g {
                Gene::Function { args, .. } => Some(*args),
                Gene::Terminal { .. } => None,
            });
            if let Some(old) = kept {
                *args = old;
            }
        }
        MutationEvent::Head { position, gene }
    } else {
        debug_assert!(c.gene(position).is_some_and(Gene::is_function));
        MutationEvent::Arg { position, which: slot - 1, value: rng.gen_range(1..position) }
    }
}

/// Applies `count` mutation events (or the expected-value variant) and
/// returns the offspring. Head slots redraw the gene's symbol; argument
/// slots redraw a pointer on `1..position`.
pub fn mutate<R: Rng + ?Sized>(
    c: &Chromosome,
    count: usize,
    mode: MutationMode,
    pset: &PrimitiveSet,
    rng: &mut R,
    p_function: f64,
) -> Chromosome {
    let mut out = c.clone();
    if count == 0 || out.is_empty() {
        return out;
    }
    match mode {
        MutationMode::Exact => {
            for _ in 0..count {
                let total: usize = out.genes().iter().map(Gene::slot_count).sum();
                let mut pick = rng.gen_range(0..total);
                let mut position = 1;
                for g in out.genes() {
                    if pick < g.slot_count() {
                        break;
                    }
                    pick -= g.slot_count();
                    position += 1;
                }
                let event = random_event(c, &out, position, pick, pset, rng, p_function);
                apply_mutation(&mut out, event).expect("event targets an existing slot");
            }
        }
        MutationMode::Expected => {
            let total: usize = out.genes().iter().map(Gene::slot_count).sum();
            let p = (count as f64 / total as f64).min(1.0);
            for position in 1..=out.len() {
                for slot in 0..3 {
                    // A head mutation may have turned the gene into a terminal.
                    if slot >= out.genes()[position - 1].slot_count() {
                        break;
                    }
                    if rng.gen_bool(p) {
                        let event = random_event(c, &out, position, slot, pset, rng, p_function);
                        apply_mutation(&mut out, event).expect("event targets an existing slot");
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::FitnessReport;
    use crate::genome::{random_chromosome, validate};
    use crate::primitives::Primitive;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ind(f: f64) -> Individual {
        Individual::new(Chromosome::from_genes(vec![Gene::terminal(0)]), FitnessReport::from_per_gene(vec![f]).unwrap())
    }

    #[test]
    fn tournament_prefers_lower_fitness() {
        let pop = [ind(0.0), ind(5.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let picks: Vec<usize> = (0..1000).map(|_| tournament_select(&pop, &mut rng)).collect();
        // Index 1 wins only when drawn twice: about a quarter of the time.
        let ones = picks.iter().filter(|&&i| i == 1).count();
        assert!((180..320).contains(&ones), "{ones}");
        let mut rng2 = ChaCha8Rng::seed_from_u64(3);
        let again: Vec<usize> = (0..1000).map(|_| tournament_select(&pop, &mut rng2)).collect();
        assert_eq!(picks, again);
    }

    #[test]
    fn tournament_ties_are_uniform() {
        let pop = [ind(1.0), ind(1.0), ind(1.0), ind(1.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut counts = [0usize; 4];
        for _ in 0..8000 {
            counts[tournament_select(&pop, &mut rng)] += 1;
        }
        assert!(counts.iter().all(|&c| (1800..2200).contains(&c)), "{counts:?}");
    }

    #[test]
    fn crossover_identity_masks() {
        let p = PrimitiveSet::gates(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_chromosome(8, &p, &mut rng, 0.5);
        let b = random_chromosome(8, &p, &mut rng, 0.5);
        let (o1, o2) = uniform_crossover_with_mask(&a, &b, &[Parent::First; 8]).unwrap();
        assert_eq!((o1, o2), (a.clone(), b.clone()));
        let (o1, o2) = uniform_crossover(&a, &a, &mut rng).unwrap();
        assert_eq!((&o1, &o2), (&a, &a));
        let short = random_chromosome(3, &p, &mut rng, 0.5);
        assert!(uniform_crossover(&a, &short, &mut rng).is_err());
    }

    #[test]
    fn zero_mutations_is_identity() {
        let p = PrimitiveSet::gates(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = random_chromosome(12, &p, &mut rng, 0.5);
        assert_eq!(mutate(&c, 0, MutationMode::Exact, &p, &mut rng, 0.5), c);
        assert_eq!(mutate(&c, 0, MutationMode::Expected, &p, &mut rng, 0.5), c);
    }

    #[test]
    fn mutation_keeps_validity() {
        let p = PrimitiveSet::gates(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for i in 0..2000 {
            let len = 1 + i % 20;
            let c = random_chromosome(len, &p, &mut rng, 0.5);
            for mode in [MutationMode::Exact, MutationMode::Expected] {
                let m = mutate(&c, 5, mode, &p, &mut rng, 0.5);
                assert_eq!(validate(&m, &p), Ok(()));
                assert_eq!(m.len(), c.len());
            }
        }
    }

    #[test]
    fn arg_event_on_terminal_is_rejected() {
        let mut c = Chromosome::from_genes(vec![Gene::terminal(0), Gene::function(Primitive::Add, 1, 1)]);
        assert!(apply_mutation(&mut c, MutationEvent::Arg { position: 1, which: 0, value: 1 }).is_err());
        assert!(apply_mutation(&mut c, MutationEvent::Arg { position: 2, which: 2, value: 1 }).is_err());
        assert!(apply_mutation(&mut c, MutationEvent::Arg { position: 3, which: 0, value: 1 }).is_err());
    }
}
