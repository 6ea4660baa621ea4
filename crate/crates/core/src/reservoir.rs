//! Uniform sampling without replacement from a stream of unknown length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tape::{Namespace, RandomTape};

/// Fixed-capacity reservoir. `count` starts at 0, and the `i`-th arrival
/// (1-based) past capacity replaces a uniform slot with probability `s/i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reservoir<T> {
    capacity: usize,
    slots: Vec<T>,
    count: u64,
}

impl<T: Clone> Reservoir<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParameter("reservoir capacity must be ≥ 1".into()));
        }
        Ok(Self {
            capacity,
            slots: Vec::with_capacity(capacity.min(1 << 20)),
            count: 0,
        })
    }

    /// A single draw `j ∈ [0, count)` keyed on the arrival index decides both
    /// whether to replace (`j < s`) and which slot.
    pub fn update(&mut self, item: T, tape: &RandomTape) {
        self.count += 1;
        if self.slots.len() < self.capacity {
            self.slots.push(item);
            return;
        }
        let j = tape.index(Namespace::Reservoir, &[self.count], self.count);
        if (j as usize) < self.capacity {
            self.slots[j as usize] = item;
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn items(&self) -> &[T] {
        &self.slots
    }

    pub fn into_items(self) -> Vec<T> {
        self.slots
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fills_in_order() {
        let tape = RandomTape::new(3);
        let mut r = Reservoir::new(3).unwrap();
        for x in [10, 20, 30] {
            r.update(x, &tape);
        }
        assert_eq!(r.items(), &[10, 20, 30]);
        let mut r = Reservoir::new(5).unwrap();
        for x in 0..5 {
            r.update(x, &tape);
        }
        assert_eq!(r.items(), &[0, 1, 2, 3, 4]);
        assert!(Reservoir::<u8>::new(0).is_err());
    }

    #[test]
    fn fourth_item_replacement_rate() {
        let trials = 40_000;
        let mut replaced = 0;
        let mut slot = [0usize; 3];
        for s in 0..trials {
            let tape = RandomTape::new(s);
            let mut r = Reservoir::new(3).unwrap();
            for x in 0..4 {
                r.update(x, &tape);
            }
            if let Some(pos) = r.items().iter().position(|&x| x == 3) {
                replaced += 1;
                slot[pos] += 1;
            }
        }
        let f = replaced as f64 / trials as f64;
        assert!((f - 0.75).abs() < 4.0 * (0.75 * 0.25 / trials as f64).sqrt());
        for c in slot {
            assert!((c as f64 / replaced as f64 - 1.0 / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn single_slot_keeps_each_item_equally() {
        let n = 8u64;
        let trials = 80_000;
        let mut kept = vec![0usize; n as usize];
        for s in 0..trials {
            let tape = RandomTape::new(s);
            let mut r = Reservoir::new(1).unwrap();
            for x in 0..n {
                r.update(x, &tape);
            }
            kept[r.items()[0] as usize] += 1;
        }
        let p = 1.0 / n as f64;
        let sd = (trials as f64 * p * (1.0 - p)).sqrt();
        for c in kept {
            assert!((c as f64 - trials as f64 * p).abs() < 4.0 * sd);
        }
    }
}
