//! Exact multisets, element types, and the order statistics shared by the
//! median mechanisms.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::Bound::Excluded;

use serde::de::Deserializer;
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element of `[n] ∪ {⋆}`. Ids are 1-based. `⋆` serializes as `"star"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Elem {
    Item(u32),
    Star,
}

impl Elem {
    pub fn id(self) -> Option<u32> {
        match self {
            Elem::Item(i) => Some(i),
            Elem::Star => None,
        }
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Elem::Item(i) => write!(f, "{i}"),
            Elem::Star => f.write_str("star"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ElemRepr {
    Item(u32),
    Tag(String),
}

impl Serialize for Elem {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Elem::Item(i) => ElemRepr::Item(*i),
            Elem::Star => ElemRepr::Tag("star".into()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Elem {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ElemRepr::deserialize(d)? {
            ElemRepr::Item(i) => Ok(Elem::Item(i)),
            ElemRepr::Tag(t) if t == "star" => Ok(Elem::Star),
            ElemRepr::Tag(t) => Err(serde::de::Error::custom(format!("unknown element `{t}`"))),
        }
    }
}

/// A real-valued data point with a total order (`f64::total_cmp`).
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub f64);

impl Point {
    pub fn get(self) -> f64 {
        self.0
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Point {}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl From<f64> for Point {
    fn from(v: f64) -> Self {
        Point(v)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Anything a multiset can hold.
pub trait Element: Ord + Clone + fmt::Debug + fmt::Display + Send + Sync + 'static {}

impl<T: Ord + Clone + fmt::Debug + fmt::Display + Send + Sync + 'static> Element for T {}

/// A multiset with exact occurrence counts. Absent keys have count zero;
/// stored counts are always positive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multiset<T: Ord> {
    counts: BTreeMap<T, u64>,
    total: u64,
}

impl<T: Ord> Default for Multiset<T> {
    fn default() -> Self {
        Self {
            counts: BTreeMap::new(),
            total: 0,
        }
    }
}

impl<T: Element> Multiset<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, x: T, m: u64) {
        if m == 0 {
            return;
        }
        *self.counts.entry(x).or_insert(0) += m;
        self.total += m;
    }

    /// Removes `m` copies of `x`, failing without modification if fewer are present.
    pub fn remove(&mut self, x: &T, m: u64) -> Result<()> {
        let present = self.count(x);
        if present < m {
            return Err(Error::Underflow {
                element: x.to_string(),
                requested: m,
                present,
            });
        }
        if present == m {
            self.counts.remove(x);
        } else if let Some(c) = self.counts.get_mut(x) {
            *c -= m;
        }
        self.total -= m;
        Ok(())
    }

    /// Functional form of [`Multiset::remove`].
    pub fn without(&self, x: &T, m: u64) -> Result<Self> {
        let mut out = self.clone();
        out.remove(x, m)?;
        Ok(out)
    }

    /// Applies a whole batch or nothing.
    pub fn remove_all(&mut self, batch: &[DeletionRequest<T>]) -> Result<()> {
        let mut next = self.clone();
        for req in batch {
            next.remove(&req.element, req.multiplicity)?;
        }
        *self = next;
        Ok(())
    }

    pub fn count(&self, x: &T) -> u64 {
        self.counts.get(x).copied().unwrap_or(0)
    }

    pub fn contains(&self, x: &T) -> bool {
        self.counts.contains_key(x)
    }

    pub fn total_size(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// Distinct elements in ascending order with their counts.
    pub fn iter(&self) -> impl Iterator<Item = (&T, u64)> + '_ {
        self.counts.iter().map(|(k, &v)| (k, v))
    }

    /// All elements in ascending order, repeated by multiplicity.
    pub fn to_sorted_vec(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.total as usize);
        for (x, c) in self.iter() {
            out.extend(std::iter::repeat_n(x.clone(), c as usize));
        }
        out
    }

    pub fn min(&self) -> Option<&T> {
        self.counts.keys().next()
    }

    pub fn max(&self) -> Option<&T> {
        self.counts.keys().next_back()
    }

    /// The `rank`-th smallest element, 1-based, counting multiplicity.
    pub fn nth_smallest(&self, rank: u64) -> Option<&T> {
        if rank == 0 || rank > self.total {
            return None;
        }
        let mut seen = 0;
        for (x, c) in self.iter() {
            seen += c;
            if seen >= rank {
                return Some(x);
            }
        }
        None
    }

    /// Number of elements strictly between `lo` and `hi` (in either order).
    pub fn count_strictly_between(&self, a: &T, b: &T) -> u64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if lo >= hi {
            return 0;
        }
        self.counts
            .range((Excluded(lo), Excluded(hi)))
            .map(|(_, &c)| c)
            .sum()
    }
}

impl<T: Element> FromIterator<T> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut m = Multiset::new();
        for x in iter {
            m.insert(x, 1);
        }
        m
    }
}

impl<T: Element + Serialize> Serialize for Multiset<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.counts.len()))?;
        for (x, c) in self.iter() {
            seq.serialize_element(&(x, c))?;
        }
        seq.end()
    }
}

impl<'de, T: Element + Deserialize<'de>> Deserialize<'de> for Multiset<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<(T, u64)> = Vec::deserialize(d)?;
        let mut m = Multiset::new();
        for (x, c) in pairs {
            m.insert(x, c);
        }
        Ok(m)
    }
}

impl Multiset<Elem> {
    /// `Star(T)`, the number of `⋆` symbols.
    pub fn star_count(&self) -> u64 {
        self.count(&Elem::Star)
    }

    /// Checks that every id lies in `1..=n`.
    pub fn check_domain(&self, n: u32) -> Result<()> {
        for (x, _) in self.iter() {
            if let Elem::Item(i) = x {
                if *i == 0 || *i > n {
                    return Err(Error::InvalidElement(x.to_string()));
                }
            }
        }
        Ok(())
    }

    /// `T ∖ {⋆}` as occurrence counts per id.
    pub fn items(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.iter().filter_map(|(x, c)| x.id().map(|i| (i, c)))
    }

    /// Builds `ids ∪ (stars copies of ⋆)`.
    pub fn from_ids(ids: impl IntoIterator<Item = u32>, stars: u64) -> Self {
        let mut m: Multiset<Elem> = ids.into_iter().map(Elem::Item).collect();
        m.insert(Elem::Star, stars);
        m
    }
}

/// A request to delete `multiplicity` copies of `element`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeletionRequest<T> {
    #[serde(rename = "elem")]
    pub element: T,
    #[serde(rename = "mult")]
    pub multiplicity: u64,
}

impl<T> DeletionRequest<T> {
    pub fn new(element: T, multiplicity: u64) -> Result<Self> {
        if multiplicity == 0 {
            return Err(Error::ZeroMultiplicity);
        }
        Ok(Self {
            element,
            multiplicity,
        })
    }

    pub fn one(element: T) -> Self {
        Self {
            element,
            multiplicity: 1,
        }
    }
}

/// The median `x_⌈n/2⌉` of the sorted data (1-based), i.e. `x_{(n+1)/2}` for
/// odd `n` and `x_{n/2}` for even `n`.
pub fn exact_median<T: Element>(d: &Multiset<T>) -> Result<T> {
    d.nth_smallest(d.total_size().div_ceil(2))
        .cloned()
        .ok_or(Error::EmptyDataset)
}

/// Number of elements of `d` strictly between `z` and the exact median,
/// counting multiplicity.
pub fn rank_error<T: Element>(d: &Multiset<T>, z: &T) -> Result<u64> {
    let med = exact_median(d)?;
    Ok(d.count_strictly_between(z, &med))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[f64]) -> Multiset<Point> {
        v.iter().copied().map(Point).collect()
    }

    #[test]
    fn remove_to_empty() {
        let mut t = Multiset::new();
        t.insert(Elem::Item(1), 3);
        t.remove(&Elem::Item(1), 3).unwrap();
        assert!(t.is_empty());
        assert_eq!(t, Multiset::new());
    }

    #[test]
    fn remove_stars() {
        let mut t = Multiset::from_ids([1, 1, 1], 6);
        t.remove(&Elem::Star, 2).unwrap();
        assert_eq!(t.count(&Elem::Item(1)), 3);
        assert_eq!(t.star_count(), 4);
        assert_eq!(t.total_size(), 7);
    }

    #[test]
    fn remove_underflow_leaves_set_untouched() {
        let mut t = Multiset::from_ids([5], 0);
        let before = t.clone();
        let err = t.remove(&Elem::Item(5), 2).unwrap_err();
        assert!(matches!(err, Error::Underflow { present: 1, requested: 2, .. }));
        assert_eq!(t, before);
    }

    #[test]
    fn batch_removal_is_atomic() {
        let mut t = Multiset::from_ids([1, 2], 0);
        let batch = [DeletionRequest::one(Elem::Item(1)), DeletionRequest::one(Elem::Item(3))];
        assert!(t.remove_all(&batch).is_err());
        assert_eq!(t.total_size(), 2);
    }

    #[test]
    fn star_counts() {
        assert_eq!(Multiset::<Elem>::new().star_count(), 0);
        assert_eq!(Multiset::from_ids([3], 12).star_count(), 12);
        // k = 2, r = 2 → 3kr stars
        let (k, r) = (2u64, 2u64);
        assert_eq!(Multiset::from_ids([1, 4, 7], 3 * k * r).star_count(), 12);
    }

    #[test]
    fn domain_check() {
        assert!(Multiset::from_ids([1, 8], 2).check_domain(8).is_ok());
        assert!(Multiset::from_ids([9], 0).check_domain(8).is_err());
        assert!(Multiset::from_ids([0], 0).check_domain(8).is_err());
    }

    #[test]
    fn star_serializes_as_string() {
        let json = serde_json::to_string(&vec![Elem::Item(3), Elem::Star]).unwrap();
        assert_eq!(json, r#"[3,"star"]"#);
        let back: Vec<Elem> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![Elem::Item(3), Elem::Star]);
        assert!(serde_json::from_str::<Elem>(r#""moon""#).is_err());
    }

    #[test]
    fn median_rules() {
        assert_eq!(exact_median(&pts(&[1.0, 2.0, 3.0])).unwrap(), Point(2.0));
        assert_eq!(exact_median(&pts(&[1.0, 2.0, 3.0, 4.0])).unwrap(), Point(2.0));
        assert_eq!(exact_median(&Multiset::<Point>::new()), Err(Error::EmptyDataset));
    }

    #[test]
    fn footnote_median() {
        let mut d = Multiset::new();
        d.insert(Point(0.0), 10);
        d.insert(Point(0.25), 1);
        d.insert(Point(1.0), 12);
        assert_eq!(d.total_size(), 23);
        assert_eq!(exact_median(&d).unwrap(), Point(1.0));
        d.remove(&Point(1.0), 1).unwrap();
        assert_eq!(exact_median(&d).unwrap(), Point(0.25));
    }

    #[test]
    fn rank_errors() {
        let d = pts(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(rank_error(&d, &Point(3.0)).unwrap(), 0);
        assert_eq!(rank_error(&d, &Point(5.0)).unwrap(), 1);
        assert_eq!(rank_error(&d, &Point(0.0)).unwrap(), 2);
        assert_eq!(rank_error(&Multiset::<Point>::new(), &Point(0.0)), Err(Error::EmptyDataset));
    }

    #[test]
    fn multiset_json_round_trip() {
        let t = Multiset::from_ids([2, 2, 5], 3);
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"[[2,2],[5,1],["star",3]]"#);
        assert_eq!(serde_json::from_str::<Multiset<Elem>>(&json).unwrap(), t);
    }

    proptest! {
        #[test]
        fn removals_conserve_size(xs in prop::collection::vec(0u8..6, 1..60), dels in prop::collection::vec((0u8..6, 1u64..4), 0..20)) {
            let mut t: Multiset<u8> = xs.iter().copied().collect();
            let initial = t.total_size();
            let mut removed = 0;
            for (x, m) in dels {
                if t.remove(&x, m).is_ok() {
                    removed += m;
                }
                let sum: u64 = t.iter().map(|(_, c)| c).sum();
                prop_assert_eq!(sum, t.total_size());
                prop_assert!(t.iter().all(|(_, c)| c > 0));
            }
            prop_assert_eq!(t.total_size() + removed, initial);
        }

        #[test]
        fn remove_then_insert_restores(xs in prop::collection::vec(0u8..6, 1..40), pick in 0usize..40, m in 1u64..3) {
            let t: Multiset<u8> = xs.iter().copied().collect();
            let x = xs[pick % xs.len()];
            if let Ok(mut u) = t.without(&x, m) {
                u.insert(x, m);
                prop_assert_eq!(u, t);
            }
        }

        #[test]
        fn median_permutation_invariant(mut xs in prop::collection::vec(-50i32..50, 1..40), seed in any::<u64>()) {
            let a: Multiset<i32> = xs.iter().copied().collect();
            // deterministic shuffle
            let mut s = seed;
            for i in (1..xs.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                xs.swap(i, (s >> 33) as usize % (i + 1));
            }
            let b: Multiset<i32> = xs.iter().copied().collect();
            prop_assert_eq!(exact_median(&a).unwrap(), exact_median(&b).unwrap());
            let mut sorted = xs.clone();
            sorted.sort();
            prop_assert_eq!(exact_median(&a).unwrap(), sorted[sorted.len().div_ceil(2) - 1]);
        }

        #[test]
        fn median_has_zero_rank_error(xs in prop::collection::vec(-50i32..50, 1..40)) {
            let d: Multiset<i32> = xs.into_iter().collect();
            let med = exact_median(&d).unwrap();
            prop_assert_eq!(rank_error(&d, &med).unwrap(), 0);
        }
    }
}
