//! Exact configuration sets: one bit per subset of the universe.

use std::fmt;

use super::{Configuration, FeatureUniverse};
use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

/// A set of configurations over a fixed universe, closed under
/// complement, intersection and union within that universe. Bit `m` is
/// set iff the configuration with mask `m` is a member.
#[derive(Clone)]
pub struct ConfigSet {
    universe: FeatureUniverse,
    bits: Vec<u64>,
}

fn words_for(count: usize) -> usize {
    count.div_ceil(WORD_BITS)
}

impl ConfigSet {
    pub fn empty(universe: &FeatureUniverse) -> Self {
        ConfigSet {
            universe: universe.clone(),
            bits: vec![0; words_for(universe.config_count())],
        }
    }

    pub fn full(universe: &FeatureUniverse) -> Self {
        let mut set = Self::empty(universe);
        for word in &mut set.bits {
            *word = u64::MAX;
        }
        set.clear_tail();
        set
    }

    /// All configurations containing feature `index`.
    pub fn with_feature(universe: &FeatureUniverse, index: usize) -> Self {
        let mut set = Self::empty(universe);
        if index < 6 {
            // the pattern repeats within every 64-bit word
            let mut pattern = 0u64;
            for bit in 0..WORD_BITS {
                if bit >> index & 1 == 1 {
                    pattern |= 1 << bit;
                }
            }
            for word in &mut set.bits {
                *word = pattern;
            }
        } else {
            // whole words are uniformly in or out
            for (w, word) in set.bits.iter_mut().enumerate() {
                if (w * WORD_BITS) >> index & 1 == 1 {
                    *word = u64::MAX;
                }
            }
        }
        set.clear_tail();
        set
    }

    fn clear_tail(&mut self) {
        let count = self.universe.config_count();
        let rem = count % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.bits.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn universe(&self) -> &FeatureUniverse {
        &self.universe
    }

    fn check(&self, other: &ConfigSet) -> Result<()> {
        if self.universe != other.universe {
            return Err(Error::UniverseMismatch);
        }
        Ok(())
    }

    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        for word in &mut out.bits {
            *word = !*word;
        }
        out.clear_tail();
        out
    }

    pub fn intersect(&self, other: &ConfigSet) -> Self {
        assert!(self.universe == other.universe, "mixed universes in `intersect`");
        let mut out = self.clone();
        for (word, o) in out.bits.iter_mut().zip(&other.bits) {
            *word &= o;
        }
        out
    }

    pub fn union(&self, other: &ConfigSet) -> Self {
        assert!(self.universe == other.universe, "mixed universes in `union`");
        let mut out = self.clone();
        for (word, o) in out.bits.iter_mut().zip(&other.bits) {
            *word |= o;
        }
        out
    }

    pub fn difference(&self, other: &ConfigSet) -> Self {
        self.intersect(&other.complement())
    }

    pub fn is_subset(&self, other: &ConfigSet) -> Result<bool> {
        self.check(other)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0))
    }

    pub fn contains(&self, config: &Configuration) -> Result<bool> {
        if *config.universe() != self.universe {
            return Err(Error::UniverseMismatch);
        }
        let mask = config.mask() as usize;
        Ok(self.bits[mask / WORD_BITS] >> (mask % WORD_BITS) & 1 == 1)
    }

    pub fn insert(&mut self, config: &Configuration) -> Result<()> {
        if *config.universe() != self.universe {
            return Err(Error::UniverseMismatch);
        }
        let mask = config.mask() as usize;
        self.bits[mask / WORD_BITS] |= 1 << (mask % WORD_BITS);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|w| *w == 0)
    }

    /// Members in ascending bit-vector order.
    pub fn configs(&self) -> Vec<Configuration> {
        let mut out = Vec::with_capacity(self.len());
        for (w, word) in self.bits.iter().enumerate() {
            let mut rest = *word;
            while rest != 0 {
                let bit = rest.trailing_zeros() as usize;
                out.push(self.universe.config((w * WORD_BITS + bit) as u32));
                rest &= rest - 1;
            }
        }
        out
    }
}

impl PartialEq for ConfigSet {
    fn eq(&self, other: &Self) -> bool {
        self.universe == other.universe && self.bits == other.bits
    }
}

impl Eq for ConfigSet {}

impl fmt::Debug for ConfigSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let members: Vec<String> = self.configs().iter().map(|c| format!("{{{c}}}")).collect();
        write!(f, "ConfigSet{{{}}}", members.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn with_feature_matches_filter_definition() {
        let u = FeatureUniverse::new((0..8).map(|i| format!("F{i}"))).unwrap();
        for idx in 0..8 {
            let set = ConfigSet::with_feature(&u, idx);
            for mask in 0..u.config_count() as u32 {
                assert_eq!(set.contains(&u.config(mask)).unwrap(), mask >> idx & 1 == 1);
            }
        }
    }

    #[test]
    fn full_and_empty_are_complements() {
        let u = FeatureUniverse::new(["A", "B", "C"]).unwrap();
        assert_eq!(ConfigSet::full(&u).complement(), ConfigSet::empty(&u));
        assert_eq!(ConfigSet::full(&u).len(), 8);
    }
}
