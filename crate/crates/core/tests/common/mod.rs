//! Random small models and mappings, plus oracles that recompute results
//! from first principles without the library's graph or search code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use mvnabs::model::{EntityDef, MvnDef, RowDef, TableDef};
use mvnabs::{
    abstract_tables, abstract_trace, enumerate_state_mappings, AbstractedTrace, AbstractionMapping,
    EntityMapping, GlobalState, Mvn, Trace,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random valid model with `1..=max_entities` entities, each with at most
/// `max_state` as its highest state and at most two inputs.
pub fn random_model(rng: &mut impl Rng, max_entities: usize, max_state: u32) -> Mvn {
    let k = rng.gen_range(1..=max_entities);
    let ids: Vec<String> = (1..=k).map(|i| format!("g{i}")).collect();
    let maxes: Vec<u32> = (0..k).map(|_| rng.gen_range(1..=max_state)).collect();
    let mut entities = Vec::new();
    let mut tables = Vec::new();
    for i in 0..k {
        let n_inputs = rng.gen_range(0..=k.min(2));
        let mut pool: Vec<usize> = (0..k).collect();
        pool.shuffle(rng);
        let inputs: Vec<usize> = pool[..n_inputs].to_vec();
        let rows = cartesian(&inputs.iter().map(|&j| maxes[j]).collect::<Vec<_>>())
            .into_iter()
            .map(|r| RowDef {
                inputs: r,
                output: rng.gen_range(0..=maxes[i]),
                line: None,
            })
            .collect();
        entities.push(EntityDef {
            id: ids[i].clone(),
            max_state: maxes[i],
            inputs: inputs.iter().map(|&j| ids[j].clone()).collect(),
            line: None,
        });
        tables.push(TableDef {
            entity: ids[i].clone(),
            rows,
            line: None,
        });
    }
    Mvn::from_def(&MvnDef {
        name: "rnd".into(),
        entities,
        tables,
    })
    .expect("generated model is valid")
}

/// A random mapping merging at least one entity with three or more states.
pub fn random_mapping(rng: &mut impl Rng, m: &Mvn) -> Option<AbstractionMapping> {
    let mergeable: Vec<usize> = (0..m.len())
        .filter(|&i| m.entity(i).max_state() >= 2)
        .collect();
    if mergeable.is_empty() {
        return None;
    }
    let forced = *mergeable.choose(rng).unwrap();
    let entries = (0..m.len())
        .map(|i| {
            if mergeable.contains(&i) && (i == forced || rng.gen_bool(0.5)) {
                let states = m.entity(i).radix() as usize;
                let n = rng.gen_range(2..states);
                let all = enumerate_state_mappings(states, n).unwrap();
                EntityMapping::Merge(all.choose(rng).unwrap().clone())
            } else {
                EntityMapping::Identity
            }
        })
        .collect();
    Some(AbstractionMapping::new(entries).unwrap())
}

/// A model together with a legal mapping, generated from a seed.
pub fn random_instance(seed: u64) -> (Mvn, AbstractionMapping) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let m = random_model(&mut rng, 3, 3);
        if let Some(phi) = random_mapping(&mut rng, &m) {
            return (m, phi);
        }
    }
}

pub fn instances() -> impl Strategy<Value = (Mvn, AbstractionMapping)> {
    any::<u64>().prop_map(random_instance)
}

pub fn models() -> impl Strategy<Value = Mvn> {
    any::<u64>().prop_map(|seed| random_model(&mut ChaCha8Rng::seed_from_u64(seed), 3, 3))
}

/// Lexicographic product of `0..=max` per position.
pub fn cartesian(maxes: &[u32]) -> Vec<Vec<u32>> {
    maxes.iter().fold(vec![Vec::new()], |acc, &mx| {
        acc.into_iter()
            .flat_map(|p| {
                (0..=mx).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect()
    })
}

/// All global states in lexicographic order.
pub fn all_states(m: &Mvn) -> Vec<GlobalState> {
    let maxes: Vec<u32> = m.entities().iter().map(|e| e.max_state()).collect();
    cartesian(&maxes)
        .into_iter()
        .map(GlobalState::new)
        .collect()
}

/// One synchronous step, read straight from the row lists.
pub fn step(m: &Mvn, s: &GlobalState) -> GlobalState {
    let v = s.values();
    GlobalState::new(
        m.entities()
            .iter()
            .zip(m.tables())
            .map(|(e, t)| {
                let inputs: Vec<u32> = e.inputs().iter().map(|&j| v[j]).collect();
                t.rows().find(|(r, _)| *r == inputs).unwrap().1
            })
            .collect(),
    )
}

pub fn orbit(m: &Mvn, s: &GlobalState) -> Vec<GlobalState> {
    let mut out = vec![s.clone()];
    loop {
        let next = step(m, out.last().unwrap());
        let done = out.contains(&next);
        out.push(next);
        if done {
            return out;
        }
    }
}

pub fn language(m: &Mvn) -> BTreeSet<Vec<GlobalState>> {
    all_states(m).iter().map(|s| orbit(m, s)).collect()
}

/// Cycles of the step function, as state sets.
pub fn cycles(m: &Mvn) -> BTreeSet<BTreeSet<GlobalState>> {
    all_states(m)
        .iter()
        .map(|s| {
            let o = orbit(m, s);
            let last = o.last().unwrap();
            let k = o.iter().position(|x| x == last).unwrap();
            o[k..o.len() - 1].iter().cloned().collect()
        })
        .collect()
}

/// Maps a concrete sequence pointwise and applies the validity and
/// truncation rules directly.
pub fn abstract_sequence(
    phi: &AbstractionMapping,
    seq: &[GlobalState],
) -> Option<Vec<GlobalState>> {
    let mapped: Vec<GlobalState> = seq.iter().map(|s| phi.apply(s)).collect();
    let mut next_of: HashMap<&GlobalState, &GlobalState> = HashMap::new();
    for w in mapped.windows(2) {
        if let Some(prev) = next_of.insert(&w[0], &w[1]) {
            if prev != &w[1] {
                return None;
            }
        }
    }
    let mut out = Vec::new();
    for s in mapped.iter() {
        let repeat = out.contains(s);
        out.push(s.clone());
        if repeat {
            break;
        }
    }
    Some(out)
}

pub fn abstracted_language(m: &Mvn, phi: &AbstractionMapping) -> BTreeSet<Vec<GlobalState>> {
    language(m)
        .iter()
        .filter_map(|t| abstract_sequence(phi, t))
        .collect()
}

/// `a` abstracts `m` by trace inclusion, ignoring structure.
pub fn is_abstraction(a: &Mvn, m: &Mvn, phi: &AbstractionMapping) -> bool {
    language(a).is_subset(&abstracted_language(m, phi))
}

/// Whether some deterministic restriction of the abstracted tables runs
/// through every step of `seq`: each (entity, abstract row) pair must be
/// asked for a single output that the tables allow.
pub fn some_candidate_runs(m: &Mvn, phi: &AbstractionMapping, seq: &[GlobalState]) -> bool {
    let cands = abstract_tables(m, phi).unwrap();
    let mut need: BTreeMap<(usize, Vec<u32>), u32> = BTreeMap::new();
    for w in seq.windows(2) {
        for (e, (ent, table)) in cands.entities().iter().zip(cands.tables()).enumerate() {
            let row: Vec<u32> = ent.inputs().iter().map(|&j| w[0].values()[j]).collect();
            let out = w[1].values()[e];
            let idx = (0..table.options().len())
                .find(|&r| table.row_inputs(r) == row)
                .unwrap();
            if !table.options()[idx].contains(&out) {
                return false;
            }
            if *need.entry((e, row)).or_insert(out) != out {
                return false;
            }
        }
    }
    true
}

/// Abstracted traces of `m` that no candidate model produces.
pub fn unrealised_abstracted_traces(m: &Mvn, phi: &AbstractionMapping) -> Vec<Trace> {
    language(m)
        .iter()
        .filter_map(|t| abstract_sequence(phi, t))
        .filter(|t| !some_candidate_runs(m, phi, t))
        .map(|t| Trace::new(t).unwrap())
        .collect()
}

/// The library's abstracted trace, if valid, as a plain sequence.
pub fn lib_abstract(phi: &AbstractionMapping, t: &Trace) -> Option<Vec<GlobalState>> {
    match abstract_trace(phi, t) {
        AbstractedTrace::Valid(v) => Some(v.states().to_vec()),
        AbstractedTrace::Invalid { .. } => None,
    }
}
