//! Bounded rehearsal memories.
//!
//! Three storage policies share one [`ReplayBuffer`]:
//!
//! * **Reservoir** keeps a uniform sample of every item streamed past it, so
//!   class proportions in memory follow the stream.
//! * **Class-balanced** splits the capacity evenly over all classes seen so
//!   far (`⌊M/|C|⌋` each, the `M mod |C|` leftover slots going to the
//!   earliest-seen classes).
//! * **Frequency-aware** counts in how many experiences each class has been
//!   observed and gives class `c` a share proportional to `1/O[c]`, so rarely
//!   repeated classes keep more samples. Slots a class cannot fill are handed
//!   to the most observed classes so the memory stays full.
//!
//! The buffer stores dataset instance indices, never feature copies. Class
//! observation counts are tracked for every policy (they feed the trace CSV),
//! but only the frequency-aware policy uses them.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StoragePolicy {
    #[serde(rename = "rs")]
    Reservoir,
    #[serde(rename = "cb")]
    ClassBalanced,
    #[serde(rename = "fa")]
    FrequencyAware,
}

impl StoragePolicy {
    pub fn short_name(self) -> &'static str {
        match self {
            StoragePolicy::Reservoir => "rs",
            StoragePolicy::ClassBalanced => "cb",
            StoragePolicy::FrequencyAware => "fa",
        }
    }
}

impl fmt::Display for StoragePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for StoragePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "rs" | "reservoir" => Ok(StoragePolicy::Reservoir),
            "cb" | "class-balanced" | "class_balanced" => Ok(StoragePolicy::ClassBalanced),
            "fa" | "frequency-aware" | "frequency_aware" => Ok(StoragePolicy::FrequencyAware),
            other => Err(Error::config(format!("unknown buffer policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StoredSample {
    pub instance: usize,
    pub class: usize,
}

/// Per-class slot targets.
pub type QuotaVector = BTreeMap<usize, usize>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer {
    capacity: usize,
    policy: StoragePolicy,
    items: Vec<StoredSample>,
    /// Classes in order of first sighting.
    seen: Vec<usize>,
    observations: BTreeMap<usize, u64>,
    /// Items streamed past the buffer (reservoir counter).
    streamed: u64,
    /// Last computed per-class quota, before any fill step.
    quota: QuotaVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BufferComposition {
    pub counts: BTreeMap<usize, usize>,
    pub total: usize,
    /// Stored infrequent samples over total stored; 0 for an empty buffer.
    pub infrequent_ratio: f64,
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub experience_index: usize,
    pub class_id: usize,
    pub stored_count: usize,
    pub observation_count: u64,
    pub quota: Option<usize>,
}

impl ReplayBuffer {
    pub fn new(policy: StoragePolicy, capacity: usize) -> Self {
        Self {
            capacity,
            policy,
            items: Vec::with_capacity(capacity),
            seen: Vec::new(),
            observations: BTreeMap::new(),
            streamed: 0,
            quota: QuotaVector::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn policy(&self) -> StoragePolicy {
        self.policy
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn samples(&self) -> &[StoredSample] {
        &self.items
    }

    pub fn seen_classes(&self) -> &[usize] {
        &self.seen
    }

    pub fn observations(&self) -> &BTreeMap<usize, u64> {
        &self.observations
    }

    pub fn streamed(&self) -> u64 {
        self.streamed
    }

    /// Quota from the most recent update (empty for reservoir).
    pub fn quota(&self) -> &QuotaVector {
        &self.quota
    }

    pub fn class_counts(&self) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for s in &self.items {
            *counts.entry(s.class).or_insert(0) += 1;
        }
        counts
    }

    /// Absorbs one experience, given as `(instance, class)` pairs.
    pub fn update<R: Rng + ?Sized>(&mut self, data: &[(usize, usize)], rng: &mut R) {
        self.observe(data);
        match self.policy {
            StoragePolicy::Reservoir => self.update_rs(data, rng),
            StoragePolicy::ClassBalanced => {
                self.quota = class_balanced_quotas(&self.seen, self.capacity);
                let quota = self.quota.clone();
                self.apply_targets(&quota, data, false, rng);
            }
            StoragePolicy::FrequencyAware => {
                self.quota = frequency_aware_quotas(&self.observations, self.capacity);
                let quota = self.quota.clone();
                self.apply_targets(&quota, data, true, rng);
            }
        }
        debug_assert!(self.items.len() <= self.capacity);
    }

    fn observe(&mut self, data: &[(usize, usize)]) {
        let present: BTreeSet<usize> = data.iter().map(|&(_, c)| c).collect();
        for c in present {
            let count = self.observations.entry(c).or_insert(0);
            if *count == 0 {
                self.seen.push(c);
            }
            *count += 1;
        }
    }

    fn update_rs<R: Rng + ?Sized>(&mut self, data: &[(usize, usize)], rng: &mut R) {
        if self.capacity == 0 {
            self.streamed += data.len() as u64;
            return;
        }
        for &(instance, class) in data {
            self.streamed += 1;
            let sample = StoredSample { instance, class };
            if self.items.len() < self.capacity {
                self.items.push(sample);
            } else {
                let j = rng.random_range(0..self.streamed);
                if (j as usize) < self.capacity {
                    self.items[j as usize] = sample;
                }
            }
        }
    }

    /// Moves every class to its target count: uniform eviction when
    /// shrinking, uniform insertion of not-yet-stored incoming samples when
    /// growing. With `fill`, slots a class cannot use are redistributed to
    /// the most observed classes first.
    fn apply_targets<R: Rng + ?Sized>(
        &mut self,
        quota: &QuotaVector,
        data: &[(usize, usize)],
        fill: bool,
        rng: &mut R,
    ) {
        let mut stored: BTreeMap<usize, Vec<StoredSample>> = BTreeMap::new();
        for s in self.items.drain(..) {
            stored.entry(s.class).or_default().push(s);
        }
        let mut incoming: BTreeMap<usize, Vec<StoredSample>> = BTreeMap::new();
        {
            let mut taken: BTreeSet<usize> = stored
                .values()
                .flatten()
                .map(|s| s.instance)
                .collect();
            for &(instance, class) in data {
                if taken.insert(instance) {
                    incoming
                        .entry(class)
                        .or_default()
                        .push(StoredSample { instance, class });
                }
            }
        }
        let available = |c: usize| {
            stored.get(&c).map_or(0, Vec::len) + incoming.get(&c).map_or(0, Vec::len)
        };

        let mut targets: BTreeMap<usize, usize> = quota
            .iter()
            .map(|(&c, &q)| (c, q.min(available(c))))
            .collect();
        if fill {
            let used: usize = targets.values().sum();
            let mut unused = self.capacity.saturating_sub(used);
            let mut order: Vec<usize> = targets.keys().copied().collect();
            order.sort_by_key(|c| (Reverse(self.observations.get(c).copied().unwrap_or(0)), *c));
            for c in order {
                if unused == 0 {
                    break;
                }
                let t = targets.get_mut(&c).expect("class in targets");
                let extra = (available(c) - *t).min(unused);
                *t += extra;
                unused -= extra;
            }
        }

        for (&c, &target) in &targets {
            let mut have = stored.remove(&c).unwrap_or_default();
            if have.len() > target {
                let keep = index::sample(rng, have.len(), target).into_vec();
                let mut keep_sorted = keep;
                keep_sorted.sort_unstable();
                have = keep_sorted.into_iter().map(|i| have[i]).collect();
            } else if have.len() < target {
                if let Some(fresh) = incoming.get(&c) {
                    let want = (target - have.len()).min(fresh.len());
                    let mut picks = index::sample(rng, fresh.len(), want).into_vec();
                    picks.sort_unstable();
                    have.extend(picks.into_iter().map(|i| fresh[i]));
                }
            }
            self.items.extend(have);
        }
    }

    /// `count` stored samples, without replacement when possible.
    pub fn sample_batch<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<StoredSample> {
        if self.items.is_empty() || count == 0 {
            return Vec::new();
        }
        if count <= self.items.len() {
            index::sample(rng, self.items.len(), count)
                .into_iter()
                .map(|i| self.items[i])
                .collect()
        } else {
            let mut out: Vec<StoredSample> = self.items.clone();
            while out.len() < count {
                out.push(self.items[rng.random_range(0..self.items.len())]);
            }
            out.shuffle(rng);
            out
        }
    }

    pub fn composition(&self, infrequent: Option<&BTreeSet<usize>>) -> BufferComposition {
        buffer_composition(self, infrequent)
    }

    pub fn trace_rows(&self, experience_index: usize) -> Vec<TraceRow> {
        let counts = self.class_counts();
        let mut classes = self.seen.clone();
        classes.sort_unstable();
        classes
            .into_iter()
            .map(|c| TraceRow {
                experience_index,
                class_id: c,
                stored_count: counts.get(&c).copied().unwrap_or(0),
                observation_count: self.observations.get(&c).copied().unwrap_or(0),
                quota: self.quota.get(&c).copied(),
            })
            .collect()
    }
}

pub fn buffer_composition(
    buffer: &ReplayBuffer,
    infrequent: Option<&BTreeSet<usize>>,
) -> BufferComposition {
    let counts = buffer.class_counts();
    let total = buffer.len();
    let infrequent_count: usize = match infrequent {
        Some(set) => counts
            .iter()
            .filter(|(c, _)| set.contains(c))
            .map(|(_, n)| n)
            .sum(),
        None => 0,
    };
    BufferComposition {
        infrequent_ratio: if total == 0 {
            0.0
        } else {
            infrequent_count as f64 / total as f64
        },
        counts,
        total,
        empty: total == 0,
    }
}

/// `⌊M/|C|⌋` slots per seen class, leftovers to the earliest-seen classes.
pub fn class_balanced_quotas(seen_in_order: &[usize], capacity: usize) -> QuotaVector {
    let n = seen_in_order.len();
    if n == 0 {
        return QuotaVector::new();
    }
    let base = capacity / n;
    let extra = capacity % n;
    seen_in_order
        .iter()
        .enumerate()
        .map(|(rank, &c)| (c, base + usize::from(rank < extra)))
        .collect()
}

/// Rounds up, treating values within relative 1e-9 of an integer as that
/// integer so exact shares like 80.00000000000001 do not gain a slot.
fn ceil_snapped(v: f64) -> usize {
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v.abs().max(1.0) {
        r as usize
    } else {
        v.ceil() as usize
    }
}

/// Frequency-aware quota: `S[c] = ⌈M · (1/O[c]) / Σ_d 1/O[d]⌉`, then trimmed
/// one slot at a time from the most observed class (ties: larger quota, then
/// lower class id) until the total is at most `M`.
pub fn frequency_aware_quotas(observations: &BTreeMap<usize, u64>, capacity: usize) -> QuotaVector {
    let live: Vec<(usize, u64)> = observations
        .iter()
        .filter(|(_, &o)| o > 0)
        .map(|(&c, &o)| (c, o))
        .collect();
    if live.is_empty() {
        return QuotaVector::new();
    }
    let inv_total: f64 = live.iter().map(|&(_, o)| 1.0 / o as f64).sum();
    let mut quota: QuotaVector = live
        .iter()
        .map(|&(c, o)| {
            let share = capacity as f64 / (o as f64 * inv_total);
            (c, ceil_snapped(share))
        })
        .collect();
    let mut total: usize = quota.values().sum();
    while total > capacity {
        let victim = live
            .iter()
            .filter(|(c, _)| quota[c] > 0)
            .max_by_key(|&&(c, o)| (o, quota[&c], Reverse(c)))
            .map(|&(c, _)| c)
            .expect("total > capacity implies a positive quota");
        *quota.get_mut(&victim).expect("victim present") -= 1;
        total -= 1;
    }
    quota
}
