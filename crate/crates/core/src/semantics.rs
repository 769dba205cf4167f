//! Synchronous update semantics.
//!
//! Every entity is updated at once from the current global state, so the
//! dynamics form a functional graph on the state space: each state has exactly
//! one successor. A trace is the forward orbit up to the first repeat, and the
//! attractors are the cycles of that graph.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write;

use thiserror::Error;

use crate::model::{mixed_radix_decode, mixed_radix_encode, Limits, Mvn};
use crate::state::GlobalState;
use crate::trace::{Attractor, Trace, TraceSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("state space of {size} global states exceeds the limit of {limit}")]
    StateSpaceTooLarge { size: u128, limit: u64 },
}

/// The synchronous successor of `s`. `s` must be a valid state of `m`.
pub fn successor(m: &Mvn, s: &GlobalState) -> GlobalState {
    let values = s.values();
    let mut inputs = Vec::new();
    let next = m
        .entities()
        .iter()
        .zip(m.tables())
        .map(|(e, t)| {
            inputs.clear();
            inputs.extend(e.inputs().iter().map(|&i| values[i]));
            let row = t.row_index(&inputs).expect("state is valid for the model");
            t.output(row)
        })
        .collect();
    GlobalState::new(next)
}

/// The canonical trace from `s0`, computed by iterating `successor` without
/// materialising the state space.
pub fn trace_from(m: &Mvn, s0: &GlobalState) -> Trace {
    let mut seen: HashMap<GlobalState, usize> = HashMap::new();
    let mut states = Vec::new();
    let mut cur = s0.clone();
    while !seen.contains_key(&cur) {
        seen.insert(cur.clone(), states.len());
        let next = successor(m, &cur);
        states.push(cur);
        cur = next;
    }
    states.push(cur);
    Trace::new_unchecked(states)
}

/// `s2` is reachable from `s1` (in zero or more steps). Dynamics are
/// deterministic, so the trace from `s1` is the entire forward orbit.
pub fn reachable(m: &Mvn, s1: &GlobalState, s2: &GlobalState) -> bool {
    trace_from(m, s1).contains(s2)
}

/// The trace semantics of `m` under the default limits.
pub fn language(m: &Mvn) -> Result<TraceSet, SemanticsError> {
    Ok(StateGraph::build(m, &Limits::default())?.language())
}

/// All attractors of `m` under the default limits.
pub fn attractors(m: &Mvn) -> Result<BTreeSet<Attractor>, SemanticsError> {
    Ok(StateGraph::build(m, &Limits::default())?.attractors())
}

/// The full state transition graph as a successor array over encoded states.
#[derive(Debug, Clone)]
pub struct StateGraph<'m> {
    model: &'m Mvn,
    radices: Vec<u32>,
    succ: Vec<usize>,
}

impl<'m> StateGraph<'m> {
    pub fn build(m: &'m Mvn, limits: &Limits) -> Result<StateGraph<'m>, SemanticsError> {
        let size = m.state_space_size();
        if size > limits.max_states as u128 {
            return Err(SemanticsError::StateSpaceTooLarge {
                size,
                limit: limits.max_states,
            });
        }
        let size = size as usize;
        let radices = m.radices();
        let mut succ = Vec::with_capacity(size);
        let mut digits = vec![0u32; radices.len()];
        let mut next = vec![0u32; radices.len()];
        let mut inputs = Vec::new();
        for _ in 0..size {
            for (slot, (e, t)) in next.iter_mut().zip(m.entities().iter().zip(m.tables())) {
                inputs.clear();
                inputs.extend(e.inputs().iter().map(|&i| digits[i]));
                *slot = t.output(mixed_radix_encode(t.radices(), &inputs).unwrap());
            }
            succ.push(mixed_radix_encode(&radices, &next).unwrap());
            // odometer increment, last entity fastest
            for (d, &r) in digits.iter_mut().zip(&radices).rev() {
                *d += 1;
                if *d < r {
                    break;
                }
                *d = 0;
            }
        }
        Ok(StateGraph {
            model: m,
            radices,
            succ,
        })
    }

    pub fn model(&self) -> &'m Mvn {
        self.model
    }

    /// Number of global states.
    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    pub fn successors(&self) -> &[usize] {
        &self.succ
    }

    pub fn successor_index(&self, i: usize) -> usize {
        self.succ[i]
    }

    pub fn state(&self, i: usize) -> GlobalState {
        GlobalState::new(mixed_radix_decode(&self.radices, i))
    }

    pub fn index(&self, s: &GlobalState) -> Option<usize> {
        mixed_radix_encode(&self.radices, s.values())
    }

    /// The canonical trace from state `start`, as encoded indices.
    pub fn trace_indices(&self, start: usize) -> Vec<usize> {
        let mut pos: HashMap<usize, usize> = HashMap::new();
        let mut out = Vec::new();
        let mut cur = start;
        while pos.insert(cur, out.len()).is_none() {
            out.push(cur);
            cur = self.succ[cur];
        }
        out.push(cur);
        out
    }

    pub fn trace(&self, start: usize) -> Trace {
        Trace::new_unchecked(
            self.trace_indices(start)
                .into_iter()
                .map(|i| self.state(i))
                .collect(),
        )
    }

    /// Traces from every state, lazily, in encoding order of the initial state.
    pub fn traces(&self) -> impl Iterator<Item = Trace> + '_ {
        (0..self.len()).map(|i| self.trace(i))
    }

    pub fn language(&self) -> TraceSet {
        self.traces().collect()
    }

    /// The cycles of the successor graph, found by a single colouring pass.
    pub fn attractors(&self) -> BTreeSet<Attractor> {
        const UNSEEN: usize = usize::MAX;
        let mut walk_of = vec![UNSEEN; self.len()];
        let mut out = BTreeSet::new();
        for start in 0..self.len() {
            if walk_of[start] != UNSEEN {
                continue;
            }
            let mut cur = start;
            while walk_of[cur] == UNSEEN {
                walk_of[cur] = start;
                cur = self.succ[cur];
            }
            // the walk closed on itself: `cur` lies on a fresh cycle
            if walk_of[cur] == start {
                let mut cycle = vec![self.state(cur)];
                let mut s = self.succ[cur];
                while s != cur {
                    cycle.push(self.state(s));
                    s = self.succ[s];
                }
                out.insert(Attractor::from_cycle(cycle));
            }
        }
        out
    }

    pub fn reachable(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.len()];
        let mut cur = from;
        while !seen[cur] {
            if cur == to {
                return true;
            }
            seen[cur] = true;
            cur = self.succ[cur];
        }
        false
    }

    /// Graphviz rendering: one node per global state, one edge per step.
    /// States on an attractor are drawn as double circles.
    pub fn to_dot(&self) -> String {
        let m = self.model;
        let on_cycle: BTreeSet<GlobalState> = self
            .attractors()
            .into_iter()
            .flat_map(|a| a.states().to_vec())
            .collect();
        let mut out = String::new();
        writeln!(out, "digraph \"{}\" {{", escape(m.name())).unwrap();
        writeln!(out, "    node [shape=circle];").unwrap();
        for i in 0..self.len() {
            let s = self.state(i);
            let shape = if on_cycle.contains(&s) {
                " [shape=doublecircle]"
            } else {
                ""
            };
            writeln!(out, "    \"{}\"{};", m.format_state(&s), shape).unwrap();
        }
        for (i, &j) in self.succ.iter().enumerate() {
            writeln!(
                out,
                "    \"{}\" -> \"{}\";",
                m.format_state(&self.state(i)),
                m.format_state(&self.state(j))
            )
            .unwrap();
        }
        writeln!(out, "}}").unwrap();
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
