//! Canonical traces, attractor cycles and trace sets.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::GlobalState;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("a trace needs at least two states")]
    TooShort,
    #[error("state {index} repeats an earlier state before the end of the trace")]
    EarlyRepeat { index: usize },
    #[error("the last state does not repeat an earlier state")]
    NoClosingRepeat,
}

/// A finite trace `<S0, .., Sn>`: `S0..S(n-1)` are pairwise distinct and `Sn`
/// equals one of them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "TraceRepr", into = "TraceRepr")]
pub struct Trace {
    states: Vec<GlobalState>,
}

#[derive(Serialize, Deserialize)]
struct TraceRepr {
    states: Vec<GlobalState>,
}

impl TryFrom<TraceRepr> for Trace {
    type Error = TraceError;
    fn try_from(r: TraceRepr) -> Result<Self, Self::Error> {
        Trace::new(r.states)
    }
}

impl From<Trace> for TraceRepr {
    fn from(t: Trace) -> Self {
        TraceRepr { states: t.states }
    }
}

impl Trace {
    /// Checks the canonical form; does not check steps against any model.
    pub fn new(states: Vec<GlobalState>) -> Result<Trace, TraceError> {
        if states.len() < 2 {
            return Err(TraceError::TooShort);
        }
        let n = states.len() - 1;
        let mut seen: HashMap<&GlobalState, usize> = HashMap::with_capacity(n);
        for (i, s) in states[..n].iter().enumerate() {
            if seen.insert(s, i).is_some() {
                return Err(TraceError::EarlyRepeat { index: i });
            }
        }
        if !seen.contains_key(&states[n]) {
            return Err(TraceError::NoClosingRepeat);
        }
        Ok(Trace { states })
    }

    pub(crate) fn new_unchecked(states: Vec<GlobalState>) -> Trace {
        debug_assert!(Trace::new(states.clone()).is_ok());
        Trace { states }
    }

    pub fn states(&self) -> &[GlobalState] {
        &self.states
    }

    pub fn initial(&self) -> &GlobalState {
        &self.states[0]
    }

    pub fn last(&self) -> &GlobalState {
        &self.states[self.states.len() - 1]
    }

    /// Number of states listed, including the closing repeat.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index `k` of the first state of the terminal cycle (`Sn = Sk`).
    pub fn cycle_start(&self) -> usize {
        let last = self.last();
        self.states
            .iter()
            .position(|s| s == last)
            .expect("canonical trace closes on an earlier state")
    }

    pub fn contains(&self, s: &GlobalState) -> bool {
        self.states.contains(s)
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, s) in self.states.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ">")
    }
}

/// An attractor cycle stored at minimal period and in canonical rotation
/// (the rotation that starts with the smallest state).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Attractor {
    cycle: Vec<GlobalState>,
}

impl Attractor {
    /// Normalises a cyclic sequence: a repeated traversal `(a,b,a,b)` is cut
    /// to its minimal period, then rotated to start at its smallest state.
    ///
    /// Panics on an empty cycle.
    pub fn from_cycle(mut cycle: Vec<GlobalState>) -> Attractor {
        assert!(!cycle.is_empty(), "an attractor has at least one state");
        let len = cycle.len();
        let period = (1..=len)
            .find(|&p| len.is_multiple_of(p) && (p..len).all(|i| cycle[i] == cycle[i - p]))
            .unwrap_or(len);
        cycle.truncate(period);
        let start = cycle
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        cycle.rotate_left(start);
        Attractor { cycle }
    }

    pub fn states(&self) -> &[GlobalState] {
        &self.cycle
    }

    pub fn period(&self) -> usize {
        self.cycle.len()
    }

    pub fn is_point(&self) -> bool {
        self.cycle.len() == 1
    }

    pub fn contains(&self, s: &GlobalState) -> bool {
        self.cycle.contains(s)
    }
}

/// Writes `a -> b -> a`.
impl fmt::Display for Attractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.cycle {
            write!(f, "{s} -> ")?;
        }
        write!(f, "{}", self.cycle[0])
    }
}

/// The cycle `Sk..S(n-1)` a canonical trace ends in.
pub fn attractor_of(t: &Trace) -> Attractor {
    let k = t.cycle_start();
    Attractor::from_cycle(t.states[k..t.states.len() - 1].to_vec())
}

/// A set of traces, deduplicated by exact sequence equality and iterated in
/// lexicographic order (by initial state first).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TraceSet {
    traces: BTreeSet<Trace>,
}

impl TraceSet {
    pub fn new() -> Self {
        TraceSet::default()
    }

    pub fn insert(&mut self, t: Trace) -> bool {
        self.traces.insert(t)
    }

    pub fn contains(&self, t: &Trace) -> bool {
        self.traces.contains(t)
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Trace> {
        self.traces.iter()
    }

    pub fn is_subset(&self, other: &TraceSet) -> bool {
        self.traces.is_subset(&other.traces)
    }

    /// Traces of `self` missing from `other`, in order.
    pub fn difference<'a>(&'a self, other: &'a TraceSet) -> impl Iterator<Item = &'a Trace> {
        self.traces.difference(&other.traces)
    }
}

impl FromIterator<Trace> for TraceSet {
    fn from_iter<I: IntoIterator<Item = Trace>>(iter: I) -> Self {
        TraceSet {
            traces: iter.into_iter().collect(),
        }
    }
}

impl IntoIterator for TraceSet {
    type Item = Trace;
    type IntoIter = std::collections::btree_set::IntoIter<Trace>;
    fn into_iter(self) -> Self::IntoIter {
        self.traces.into_iter()
    }
}

impl<'a> IntoIterator for &'a TraceSet {
    type Item = &'a Trace;
    type IntoIter = std::collections::btree_set::Iter<'a, Trace>;
    fn into_iter(self) -> Self::IntoIter {
        self.traces.iter()
    }
}
