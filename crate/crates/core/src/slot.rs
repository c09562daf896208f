//! Slot-based stream generator.
//!
//! Every class pool is cut into `N·K/C` chunks and each of the `N`
//! experiences receives `K` chunks of `K` distinct classes. All dataset
//! instances appear exactly once, so repetition happens only at the level of
//! concepts. `K = C/N` gives a class-incremental stream and `K = C` a
//! domain-incremental one.

use rand::seq::{index, IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::stream::{Experience, GeneratorSpec, Provenance, SlotRef, Stream};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotConfig {
    /// Number of experiences `N`.
    pub experiences: usize,
    /// Slots per experience `K`.
    pub slots_per_experience: usize,
    pub seed: u64,
}

impl SlotConfig {
    pub fn new(experiences: usize, slots_per_experience: usize, seed: u64) -> Self {
        Self {
            experiences,
            slots_per_experience,
            seed,
        }
    }

    /// Chunks each class is split into, `⌈N·K/C⌉`.
    pub fn chunks_per_class(&self, classes: usize) -> usize {
        (self.experiences * self.slots_per_experience).div_ceil(classes)
    }

    /// Chunks beyond the `N·K` regular slots; they all go to experience 0.
    pub fn overflow_chunks(&self, classes: usize) -> usize {
        classes * self.chunks_per_class(classes) - self.experiences * self.slots_per_experience
    }

    pub fn validate(&self, classes: usize) -> Result<()> {
        let (n, k, c) = (self.experiences, self.slots_per_experience, classes);
        if n == 0 {
            return Err(Error::config("slot generator: N must be >= 1"));
        }
        if k == 0 {
            return Err(Error::config("slot generator: K must be >= 1"));
        }
        if k > c {
            return Err(Error::config(format!(
                "slot generator: K = {k} exceeds the number of classes C = {c}"
            )));
        }
        if c % n != 0 {
            return Err(Error::config(format!(
                "slot generator: C mod N must be 0 (C = {c}, N = {n})"
            )));
        }
        Ok(())
    }
}

/// Splits `pool` into `parts` contiguous chunks; the first `len % parts`
/// chunks get one extra element.
fn split_even(pool: &[usize], parts: usize) -> Vec<Vec<usize>> {
    let base = pool.len() / parts;
    let extra = pool.len() % parts;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for p in 0..parts {
        let len = base + usize::from(p < extra);
        out.push(pool[start..start + len].to_vec());
        start += len;
    }
    out
}

pub fn generate_slot_stream(dataset: &LabeledDataset, cfg: &SlotConfig) -> Result<Stream> {
    let c = dataset.num_classes();
    cfg.validate(c)?;
    let (n, k) = (cfg.experiences, cfg.slots_per_experience);
    let chunks = cfg.chunks_per_class(c);
    for class in 0..c {
        let have = dataset.class_indices(class).len();
        if have < chunks {
            return Err(Error::config(format!(
                "slot generator: class {class} has {have} instances, needs at least {chunks}"
            )));
        }
    }

    let mut rng = seeded(cfg.seed);
    let mut class_chunks: Vec<Vec<Vec<usize>>> = (0..c)
        .map(|class| {
            let mut pool = dataset.class_indices(class).to_vec();
            pool.shuffle(&mut rng);
            split_even(&pool, chunks)
        })
        .collect();
    let mut next_chunk = vec![0usize; c];
    let mut remaining = vec![chunks; c];
    let mut notes = Vec::new();

    // When N·K is not a multiple of C the surplus chunks come from distinct
    // random classes and are appended to the first experience.
    let mut overflow: Vec<usize> = index::sample(&mut rng, c, cfg.overflow_chunks(c)).into_vec();
    overflow.sort_unstable();
    for &y in &overflow {
        remaining[y] -= 1;
    }

    // With R experiences left, a class holding R chunks must be placed now or
    // it would need two slots in some later experience. Placing those first
    // and drawing the rest uniformly keeps every remaining class at <= R-1
    // chunks, so the assignment never dead-ends.
    let mut experiences = Vec::with_capacity(n);
    for index in 0..n {
        let left = n - index;
        let mut chosen: Vec<usize> = (0..c).filter(|&y| remaining[y] == left).collect();
        let optional: Vec<usize> = (0..c)
            .filter(|&y| remaining[y] > 0 && remaining[y] < left)
            .collect();
        let need = k - chosen.len();
        chosen.extend(optional.choose_multiple(&mut rng, need).copied());
        debug_assert_eq!(chosen.len(), k);
        chosen.sort_unstable();
        for &y in &chosen {
            remaining[y] -= 1;
        }
        if index == 0 && !overflow.is_empty() {
            let dup = overflow.iter().filter(|y| chosen.contains(y)).count();
            notes.push(format!(
                "experience 0 holds {} overflow chunks ({dup} from classes already in a regular slot)",
                overflow.len()
            ));
            chosen.extend(overflow.iter().copied());
        }

        let mut instances = Vec::new();
        let mut slots = Vec::with_capacity(chosen.len());
        for &y in &chosen {
            let chunk = next_chunk[y];
            instances.append(&mut class_chunks[y][chunk]);
            slots.push(SlotRef { class: y, chunk });
            next_chunk[y] += 1;
        }
        experiences.push(Experience {
            index,
            instances,
            present_classes: chosen.into_iter().collect(),
            provenance: Provenance::SlotAssignment { slots },
        });
    }
    debug_assert!(remaining.iter().all(|&r| r == 0));

    Ok(Stream::new(
        GeneratorSpec::Slot(cfg.clone()),
        dataset,
        experiences,
        notes,
    ))
}

/// One stream per `K`, all sharing `seed`.
pub fn sweep_k(
    dataset: &LabeledDataset,
    experiences: usize,
    k_values: &[usize],
    seed: u64,
) -> Result<Vec<Stream>> {
    k_values
        .iter()
        .map(|&k| generate_slot_stream(dataset, &SlotConfig::new(experiences, k, seed)))
        .collect()
}
