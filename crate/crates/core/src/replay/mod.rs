//! Bounded experience pool with uniform or proportional prioritized sampling.
//!
//! Snapshot format (little endian): the bytes `XPOOL`, a format version
//! `u32` (= 1), the mode byte (0 uniform, 1 prioritized), capacity `u64`,
//! total pushes `u64`, stored count `u64`, max priority `f64`, then for every
//! stored item oldest first: its priority `f64`, the byte length `u64` of its
//! JSON encoding, and the JSON bytes.

mod sum_tree;

use std::io::{Read, Write};

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use sum_tree::SumTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    Uniform,
    Prioritized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerConfig {
    pub priority_exponent: f64,
    pub importance_start: f64,
    pub importance_end: f64,
    pub priority_floor: f64,
}

impl Default for PerConfig {
    fn default() -> Self {
        Self {
            priority_exponent: 0.6,
            importance_start: 0.4,
            importance_end: 1.0,
            priority_floor: 1e-3,
        }
    }
}

impl PerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !(unit.contains(&self.priority_exponent)
            && unit.contains(&self.importance_start)
            && unit.contains(&self.importance_end))
        {
            return Err(Error::Config("PER exponents must lie in [0, 1]".into()));
        }
        if self.priority_floor.is_nan() || self.priority_floor <= 0.0 {
            return Err(Error::Config("priority_floor must be positive".into()));
        }
        Ok(())
    }

    /// Importance exponent after `progress` ∈ [0, 1] of training.
    pub fn importance_exponent(&self, progress: f64) -> f64 {
        let p = progress.clamp(0.0, 1.0);
        self.importance_start + (self.importance_end - self.importance_start) * p
    }
}

/// A sampled item, its stable index and its importance weight.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a, T> {
    pub item: &'a T,
    pub index: u64,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct ExperiencePool<T> {
    capacity: usize,
    items: Vec<T>,
    /// Raw priorities (`|δ| + floor`), parallel to `items`.
    raw: Vec<f64>,
    pushed: u64,
    mode: SamplingMode,
    tree: SumTree,
    max_priority: f64,
    per: PerConfig,
    stale_updates: u64,
}

impl<T> ExperiencePool<T> {
    pub fn new(capacity: usize, mode: SamplingMode, per: PerConfig) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("pool capacity must be at least 1".into()));
        }
        per.validate()?;
        Ok(Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            raw: Vec::with_capacity(capacity.min(1 << 16)),
            pushed: 0,
            mode,
            tree: SumTree::new(capacity),
            max_priority: 1.0,
            per,
            stale_updates: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }

    pub fn per(&self) -> &PerConfig {
        &self.per
    }

    pub fn stale_updates(&self) -> u64 {
        self.stale_updates
    }

    pub fn tree(&self) -> &SumTree {
        &self.tree
    }

    fn slot(&self, index: u64) -> usize {
        (index % self.capacity as u64) as usize
    }

    fn live(&self, index: u64) -> bool {
        index < self.pushed && index + (self.items.len() as u64) >= self.pushed
    }

    /// Stable index of the oldest stored item.
    pub fn oldest_index(&self) -> u64 {
        self.pushed - self.items.len() as u64
    }

    pub fn get(&self, index: u64) -> Option<&T> {
        self.live(index).then(|| &self.items[self.slot(index)])
    }

    /// Raw priority of a stored item.
    pub fn priority(&self, index: u64) -> Option<f64> {
        self.live(index).then(|| self.raw[self.slot(index)])
    }

    /// Stores `item`, evicting the oldest when full. New items get the
    /// largest priority seen so far unless one is given.
    pub fn push(&mut self, item: T, priority: Option<f64>) -> u64 {
        let p = priority.map_or(self.max_priority, |p| p.max(self.per.priority_floor));
        self.max_priority = self.max_priority.max(p);
        let index = self.pushed;
        let slot = self.slot(index);
        if self.items.len() < self.capacity {
            self.items.push(item);
            self.raw.push(p);
        } else {
            self.items[slot] = item;
            self.raw[slot] = p;
        }
        self.tree.set(slot, p.powf(self.per.priority_exponent));
        self.pushed += 1;
        index
    }

    /// Probability that one draw selects `index`.
    pub fn probability(&self, index: u64) -> Option<f64> {
        if !self.live(index) {
            return None;
        }
        Some(match self.mode {
            SamplingMode::Uniform => 1.0 / self.items.len() as f64,
            SamplingMode::Prioritized => self.tree.get(self.slot(index)) / self.tree.total(),
        })
    }

    /// Draws `batch` items with replacement. `beta` is the importance
    /// exponent; weights are normalised so the batch maximum is 1.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, beta: f64, rng: &mut R) -> Result<Vec<Sample<'_, T>>> {
        let n = self.items.len();
        if n < batch || batch == 0 {
            return Err(Error::Refused(format!(
                "pool holds {n} items, batch of {batch} requested"
            )));
        }
        let base = self.oldest_index();
        let index_of = |slot: usize| {
            // slots hold indices congruent to them modulo capacity
            let cap = self.capacity as u64;
            let off = (slot as u64 + cap - base % cap) % cap;
            base + off
        };
        let mut out = Vec::with_capacity(batch);
        match self.mode {
            SamplingMode::Uniform => {
                for _ in 0..batch {
                    let slot = rng.gen_range(0..n);
                    out.push(Sample {
                        item: &self.items[slot],
                        index: index_of(slot),
                        weight: 1.0,
                    });
                }
            }
            SamplingMode::Prioritized => {
                let total = self.tree.total();
                let mut max_w: f64 = 0.0;
                for _ in 0..batch {
                    let slot = self.tree.find(rng.gen::<f64>() * total);
                    let p = self.tree.get(slot) / total;
                    let w = (n as f64 * p).powf(-beta);
                    max_w = max_w.max(w);
                    out.push(Sample {
                        item: &self.items[slot],
                        index: index_of(slot),
                        weight: w,
                    });
                }
                for s in &mut out {
                    s.weight /= max_w;
                }
            }
        }
        Ok(out)
    }

    /// Sets priorities from TD errors; indices of evicted items are skipped
    /// and counted.
    pub fn update_priorities(&mut self, indices: &[u64], td_errors: &[f64]) -> Result<()> {
        if indices.len() != td_errors.len() {
            return Err(Error::InvalidInput("indices and td errors differ in length".into()));
        }
        for (&i, &d) in indices.iter().zip(td_errors) {
            if !self.live(i) {
                self.stale_updates += 1;
                continue;
            }
            if self.mode == SamplingMode::Uniform {
                continue;
            }
            let p = d.abs() + self.per.priority_floor;
            let slot = self.slot(i);
            self.raw[slot] = p;
            self.max_priority = self.max_priority.max(p);
            self.tree.set(slot, p.powf(self.per.priority_exponent));
        }
        Ok(())
    }

    /// Stored items, oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        let base = self.oldest_index();
        (0..self.items.len() as u64).map(move |k| &self.items[self.slot(base + k)])
    }
}

const MAGIC: &[u8; 5] = b"XPOOL";
const VERSION: u32 = 1;

impl<T: Serialize + DeserializeOwned> ExperiencePool<T> {
    pub fn snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[match self.mode {
            SamplingMode::Uniform => 0,
            SamplingMode::Prioritized => 1,
        }])?;
        w.write_all(&(self.capacity as u64).to_le_bytes())?;
        w.write_all(&self.pushed.to_le_bytes())?;
        w.write_all(&(self.items.len() as u64).to_le_bytes())?;
        w.write_all(&self.max_priority.to_le_bytes())?;
        let base = self.oldest_index();
        for k in 0..self.items.len() as u64 {
            let slot = self.slot(base + k);
            w.write_all(&self.raw[slot].to_le_bytes())?;
            let bytes = serde_json::to_vec(&self.items[slot])?;
            w.write_all(&(bytes.len() as u64).to_le_bytes())?;
            w.write_all(&bytes)?;
        }
        Ok(())
    }

    pub fn restore<R: Read>(mut r: R, per: PerConfig) -> Result<Self> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::InvalidInput("not a pool snapshot".into()));
        }
        let version = u32::from_le_bytes(read_array(&mut r)?);
        if version != VERSION {
            return Err(Error::InvalidInput(format!("unsupported snapshot version {version}")));
        }
        let mut mode = [0u8; 1];
        r.read_exact(&mut mode)?;
        let mode = match mode[0] {
            0 => SamplingMode::Uniform,
            1 => SamplingMode::Prioritized,
            m => return Err(Error::InvalidInput(format!("unknown pool mode {m}"))),
        };
        let capacity = u64::from_le_bytes(read_array(&mut r)?) as usize;
        let pushed = u64::from_le_bytes(read_array(&mut r)?);
        let len = u64::from_le_bytes(read_array(&mut r)?);
        let max_priority = f64::from_le_bytes(read_array(&mut r)?);
        if len > capacity as u64 || len > pushed {
            return Err(Error::InvalidInput("inconsistent snapshot header".into()));
        }
        if len < capacity as u64 && pushed != len {
            return Err(Error::InvalidInput("inconsistent snapshot header".into()));
        }
        let mut pool = Self::new(capacity, mode, per)?;
        for _ in 0..len {
            let p = f64::from_le_bytes(read_array(&mut r)?);
            let n = u64::from_le_bytes(read_array(&mut r)?) as usize;
            let mut buf = vec![0u8; n];
            r.read_exact(&mut buf)?;
            let item: T = serde_json::from_slice(&buf)?;
            pool.push(item, Some(p));
        }
        // a full ring restored from slot 0 is rotated back to its slots
        let shift = ((pushed - len) % capacity as u64) as usize;
        pool.items.rotate_right(shift);
        pool.raw.rotate_right(shift);
        pool.pushed = pushed;
        for slot in 0..pool.items.len() {
            pool.tree.set(slot, pool.raw[slot].powf(pool.per.priority_exponent));
        }
        pool.max_priority = max_priority;
        Ok(pool)
    }
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pool(cap: usize, mode: SamplingMode) -> ExperiencePool<u32> {
        ExperiencePool::new(cap, mode, PerConfig::default()).unwrap()
    }

    #[test]
    fn ring_evicts_oldest() {
        let mut p = pool(3, SamplingMode::Uniform);
        for i in 0..5 {
            p.push(i, None);
        }
        assert_eq!(p.len(), 3);
        assert_eq!(p.iter().copied().collect::<Vec<_>>(), vec![2, 3, 4]);
        assert!(p.get(1).is_none());
        assert_eq!(p.get(2), Some(&2));
    }

    #[test]
    fn fresh_push_is_sampleable() {
        let mut p = pool(4, SamplingMode::Prioritized);
        p.push(7, None);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = p.sample(1, 0.4, &mut rng).unwrap();
        assert_eq!(*s[0].item, 7);
        assert_eq!(s[0].weight, 1.0);
    }

    #[test]
    fn underfull_refused() {
        let p = pool(4, SamplingMode::Uniform);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(p.sample(1, 0.4, &mut rng), Err(Error::Refused(_))));
    }

    #[test]
    fn zero_td_error_keeps_floor() {
        let mut p = pool(4, SamplingMode::Prioritized);
        let i = p.push(1, None);
        p.push(2, None);
        p.update_priorities(&[i], &[0.0]).unwrap();
        assert_eq!(p.priority(i), Some(1e-3));
        assert!(p.probability(i).unwrap() > 0.0);
    }

    #[test]
    fn stale_updates_are_counted() {
        let mut p = pool(2, SamplingMode::Prioritized);
        let first = p.push(0, None);
        p.push(1, None);
        p.push(2, None);
        p.update_priorities(&[first], &[5.0]).unwrap();
        assert_eq!(p.stale_updates(), 1);
    }

    #[test]
    fn sampled_indices_resolve_to_items() {
        let mut p = pool(5, SamplingMode::Prioritized);
        for i in 0..12 {
            p.push(i, Some(1.0 + i as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            for s in p.sample(5, 1.0, &mut rng).unwrap() {
                assert_eq!(p.get(s.index), Some(s.item));
                assert!(s.weight > 0.0 && s.weight <= 1.0);
            }
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let mut p = pool(3, SamplingMode::Prioritized);
        for i in 0..5 {
            p.push(i, Some(i as f64 + 0.5));
        }
        let mut buf = Vec::new();
        p.snapshot(&mut buf).unwrap();
        let q = ExperiencePool::<u32>::restore(&buf[..], PerConfig::default()).unwrap();
        assert_eq!(q.iter().collect::<Vec<_>>(), p.iter().collect::<Vec<_>>());
        for i in 2..5 {
            assert_eq!(q.priority(i), p.priority(i));
        }
        assert!((q.tree().total() - p.tree().total()).abs() < 1e-12);
    }
}
