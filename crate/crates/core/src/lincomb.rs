//! Sparse rational linear combinations over an ordered key set.
//!
//! Every container in the crate that collects like terms (weight polynomials,
//! bilinear term lists, unary multiplier lists) is a thin wrapper over
//! [`LinComb`]. Zero coefficients are never stored, so two combinations are
//! equal exactly when they denote the same formal sum.

use std::collections::btree_map::{self, Entry};
use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinComb<K: Ord> {
    terms: BTreeMap<K, BigRational>,
}

impl<K: Ord> Default for LinComb<K> {
    fn default() -> Self {
        Self {
            terms: BTreeMap::new(),
        }
    }
}

impl<K: Ord + Clone> LinComb<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(key: K, coeff: BigRational) -> Self {
        let mut out = Self::new();
        out.add(key, coeff);
        out
    }

    pub fn add(&mut self, key: K, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(key) {
            Entry::Vacant(slot) => {
                slot.insert(coeff);
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += coeff;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn add_all(&mut self, other: &LinComb<K>) {
        for (k, c) in other.iter() {
            self.add(k.clone(), c.clone());
        }
    }

    pub fn sub_all(&mut self, other: &LinComb<K>) {
        for (k, c) in other.iter() {
            self.add(k.clone(), -c.clone());
        }
    }

    pub fn scaled(&self, factor: &BigRational) -> Self {
        if factor.is_zero() {
            return Self::new();
        }
        Self {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.clone(), c * factor))
                .collect(),
        }
    }

    pub fn get(&self, key: &K) -> Option<&BigRational> {
        self.terms.get(key)
    }

    pub fn remove(&mut self, key: &K) -> Option<BigRational> {
        self.terms.remove(key)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> btree_map::Iter<'_, K, BigRational> {
        self.terms.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.terms.keys()
    }
}

impl<K: Ord + Clone> FromIterator<(K, BigRational)> for LinComb<K> {
    fn from_iter<I: IntoIterator<Item = (K, BigRational)>>(iter: I) -> Self {
        let mut out = Self::new();
        for (k, c) in iter {
            out.add(k, c);
        }
        out
    }
}

impl<K: Ord> IntoIterator for LinComb<K> {
    type Item = (K, BigRational);
    type IntoIter = btree_map::IntoIter<K, BigRational>;

    fn into_iter(self) -> Self::IntoIter {
        self.terms.into_iter()
    }
}

impl<'a, K: Ord> IntoIterator for &'a LinComb<K> {
    type Item = (&'a K, &'a BigRational);
    type IntoIter = btree_map::Iter<'a, K, BigRational>;

    fn into_iter(self) -> Self::IntoIter {
        self.terms.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn cancellation_removes_key() {
        let mut c = LinComb::new();
        c.add("a", q(2));
        c.add("a", q(-2));
        assert!(c.is_empty());
    }

    #[test]
    fn zero_is_never_stored() {
        let c: LinComb<&str> = [("a", q(0)), ("b", q(1))].into_iter().collect();
        assert_eq!(c.len(), 1);
        assert!(c.get(&"a").is_none());
    }

    #[test]
    fn scaling_by_zero_empties() {
        let c = LinComb::single(1u8, q(5));
        assert!(c.scaled(&q(0)).is_empty());
        assert_eq!(c.scaled(&q(3)).get(&1), Some(&q(15)));
    }
}
