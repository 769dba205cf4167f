//! State-merging abstractions: state mappings, their lifting to states,
//! traces and trace sets, and the abstraction / exact-abstraction relations.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::model::{mixed_radix_decode, mixed_radix_encode, Limits, Mvn};
use crate::semantics::{SemanticsError, StateGraph};
use crate::state::GlobalState;
use crate::trace::{Trace, TraceSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("a state mapping needs a source with at least three states, got {0}")]
    BooleanSource(usize),
    #[error("mapping is not surjective: target {missing} of 0..{max} is never hit")]
    NotSurjective { missing: u32, max: u32 },
    #[error("mapping collapses every state onto a single state")]
    SingularCodomain,
    #[error("mapping merges no states ({0} sources onto {0} targets)")]
    NotMerging(usize),
    #[error("abstraction mapping contains only identities")]
    AllIdentity,
    #[error("abstraction mapping has {found} entries but the model has {expected} entities")]
    Arity { expected: usize, found: usize },
    #[error("state mapping for `{entity}` covers {found} states but the entity has {expected}")]
    DomainMismatch {
        entity: String,
        expected: usize,
        found: usize,
    },
    #[error("no surjection from {m} states onto {n} states merges states; need 2 <= n < m")]
    InvalidSizes { m: usize, n: usize },
}

/// A surjection from `0..domain` onto `0..codomain` with
/// `2 <= codomain < domain`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateMapping {
    image: Vec<u32>,
    codomain: u32,
}

impl StateMapping {
    /// `image[s]` is the state that `s` is merged into.
    pub fn new(image: Vec<u32>) -> Result<StateMapping, MappingError> {
        if image.len() < 3 {
            return Err(MappingError::BooleanSource(image.len()));
        }
        let max = *image.iter().max().unwrap();
        if max == 0 {
            return Err(MappingError::SingularCodomain);
        }
        let mut hit = vec![false; max as usize + 1];
        for &t in &image {
            hit[t as usize] = true;
        }
        if let Some(missing) = hit.iter().position(|h| !h) {
            return Err(MappingError::NotSurjective {
                missing: missing as u32,
                max,
            });
        }
        if max as usize + 1 >= image.len() {
            return Err(MappingError::NotMerging(image.len()));
        }
        Ok(StateMapping {
            image,
            codomain: max + 1,
        })
    }

    pub fn apply(&self, s: u32) -> u32 {
        self.image[s as usize]
    }

    pub fn image(&self) -> &[u32] {
        &self.image
    }

    pub fn domain_size(&self) -> usize {
        self.image.len()
    }

    pub fn codomain_size(&self) -> u32 {
        self.codomain
    }
}

impl std::fmt::Display for StateMapping {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .image
            .iter()
            .enumerate()
            .map(|(s, t)| format!("{s}->{t}"))
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// All surjections from `m` states onto `n` states (`2 <= n < m`), in
/// lexicographic order of their value tables.
pub fn enumerate_state_mappings(m: usize, n: usize) -> Result<Vec<StateMapping>, MappingError> {
    if n < 2 || n >= m {
        return Err(MappingError::InvalidSizes { m, n });
    }
    fn extend(
        prefix: &mut Vec<u32>,
        used: &mut [usize],
        unused: usize,
        m: usize,
        out: &mut Vec<StateMapping>,
    ) {
        if prefix.len() == m {
            out.push(StateMapping {
                image: prefix.clone(),
                codomain: used.len() as u32,
            });
            return;
        }
        let remaining = m - prefix.len();
        for t in 0..used.len() {
            let fresh = used[t] == 0;
            let unused_after = unused - fresh as usize;
            // every still-unused target must fit in the remaining positions
            if unused_after > remaining - 1 {
                continue;
            }
            used[t] += 1;
            prefix.push(t as u32);
            extend(prefix, used, unused_after, m, out);
            prefix.pop();
            used[t] -= 1;
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(m), &mut vec![0; n], n, m, &mut out);
    Ok(out)
}

/// Per-entity component of an abstraction mapping.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityMapping {
    Identity,
    Merge(StateMapping),
}

impl EntityMapping {
    pub fn apply(&self, s: u32) -> u32 {
        match self {
            EntityMapping::Identity => s,
            EntityMapping::Merge(sm) => sm.apply(s),
        }
    }

    /// Size of the abstract range for an entity with `radix` concrete states.
    pub fn abstract_radix(&self, radix: u32) -> u32 {
        match self {
            EntityMapping::Identity => radix,
            EntityMapping::Merge(sm) => sm.codomain_size(),
        }
    }
}

/// A family of per-entity mappings, positionally aligned with the entities of
/// the concrete model, with at least one true state mapping.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AbstractionMapping {
    entries: Vec<EntityMapping>,
}

impl AbstractionMapping {
    pub fn new(entries: Vec<EntityMapping>) -> Result<AbstractionMapping, MappingError> {
        if entries.iter().all(|e| matches!(e, EntityMapping::Identity)) {
            return Err(MappingError::AllIdentity);
        }
        Ok(AbstractionMapping { entries })
    }

    /// Maps one entity of `m` and leaves every other entity unchanged.
    pub fn single(m: &Mvn, entity: usize, sm: StateMapping) -> Result<Self, MappingError> {
        let mut entries = vec![EntityMapping::Identity; m.len()];
        entries[entity] = EntityMapping::Merge(sm);
        let phi = AbstractionMapping::new(entries)?;
        phi.check_fits(m)?;
        Ok(phi)
    }

    pub fn entries(&self) -> &[EntityMapping] {
        &self.entries
    }

    /// Checks that every state mapping covers exactly its entity's range.
    pub fn check_fits(&self, m: &Mvn) -> Result<(), MappingError> {
        if self.entries.len() != m.len() {
            return Err(MappingError::Arity {
                expected: m.len(),
                found: self.entries.len(),
            });
        }
        for (e, entry) in m.entities().iter().zip(&self.entries) {
            if let EntityMapping::Merge(sm) = entry {
                if sm.domain_size() != e.radix() as usize {
                    return Err(MappingError::DomainMismatch {
                        entity: e.id().to_string(),
                        expected: e.radix() as usize,
                        found: sm.domain_size(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Highest abstract state of each entity of `m`.
    pub fn abstract_max_states(&self, m: &Mvn) -> Vec<u32> {
        m.entities()
            .iter()
            .zip(&self.entries)
            .map(|(e, entry)| entry.abstract_radix(e.radix()) - 1)
            .collect()
    }

    pub fn apply(&self, s: &GlobalState) -> GlobalState {
        GlobalState::new(
            s.values()
                .iter()
                .zip(&self.entries)
                .map(|(&v, entry)| entry.apply(v))
                .collect(),
        )
    }
}

/// Pointwise application of `phi` to a global state.
pub fn apply_to_state(phi: &AbstractionMapping, s: &GlobalState) -> GlobalState {
    phi.apply(s)
}

/// True iff `a_state` is the image of `m_state` under `phi`.
pub fn corresponding_states(
    a_state: &GlobalState,
    m_state: &GlobalState,
    phi: &AbstractionMapping,
) -> bool {
    phi.apply(m_state) == *a_state
}

/// The result of mapping a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AbstractedTrace {
    /// Consistent, cut back to canonical form.
    Valid(Trace),
    /// Positions `first < second` map to the same abstract state but their
    /// successors map to different abstract states.
    Invalid { first: usize, second: usize },
}

impl AbstractedTrace {
    pub fn valid(&self) -> Option<&Trace> {
        match self {
            AbstractedTrace::Valid(t) => Some(t),
            AbstractedTrace::Invalid { .. } => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self, AbstractedTrace::Valid(_))
    }
}

/// Maps every state of `t`, rejects the result if some abstract state has two
/// different abstract successors, and otherwise truncates at the first
/// repeated abstract state.
pub fn abstract_trace(phi: &AbstractionMapping, t: &Trace) -> AbstractedTrace {
    let mapped: Vec<GlobalState> = t.states().iter().map(|s| phi.apply(s)).collect();
    match check_mapped(&mapped) {
        Ok(k) => {
            let mut states = mapped;
            states.truncate(k + 1);
            AbstractedTrace::Valid(Trace::new_unchecked(states))
        }
        Err((first, second)) => AbstractedTrace::Invalid { first, second },
    }
}

/// For a mapped sequence `x0..xn`: the smallest `k` with `xk` repeating an
/// earlier element, or the first conflicting pair of positions.
fn check_mapped<T: Eq + std::hash::Hash>(mapped: &[T]) -> Result<usize, (usize, usize)> {
    let n = mapped.len() - 1;
    let mut first_at: HashMap<&T, usize> = HashMap::with_capacity(n);
    let mut cut = None;
    for (j, x) in mapped[..n].iter().enumerate() {
        match first_at.get(x) {
            Some(&i) => {
                if mapped[i + 1] != mapped[j + 1] {
                    return Err((i, j));
                }
                cut.get_or_insert(j);
            }
            None => {
                first_at.insert(x, j);
            }
        }
    }
    Ok(cut.unwrap_or(n))
}

/// The valid abstracted traces of a trace set, deduplicated.
pub fn abstract_language(phi: &AbstractionMapping, ts: &TraceSet) -> TraceSet {
    ts.iter()
        .filter_map(|t| match abstract_trace(phi, t) {
            AbstractedTrace::Valid(v) => Some(v),
            AbstractedTrace::Invalid { .. } => None,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error(
        "entity lists differ: abstract model has [{abstract_ids}], concrete has [{concrete_ids}]"
    )]
    Entities {
        abstract_ids: String,
        concrete_ids: String,
    },
    #[error("neighbourhood of `{entity}` differs between the models")]
    Neighbourhood { entity: String },
    #[error("entity `{entity}` ranges over 0..{found}, the mapping's codomain is 0..{expected}")]
    Range {
        entity: String,
        expected: u32,
        found: u32,
    },
    #[error(transparent)]
    Mapping(#[from] MappingError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbstractionError {
    #[error("models are not comparable: {0}")]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// Requires same entities and neighbourhoods, and `a`'s ranges equal to the
/// codomains of `phi` on `m`.
pub fn check_structure(a: &Mvn, m: &Mvn, phi: &AbstractionMapping) -> Result<(), StructureError> {
    phi.check_fits(m)?;
    let ids = |x: &Mvn| {
        x.entities()
            .iter()
            .map(|e| e.id().to_string())
            .collect::<Vec<_>>()
            .join(", ")
    };
    if a.len() != m.len()
        || a.entities()
            .iter()
            .zip(m.entities())
            .any(|(x, y)| x.id() != y.id())
    {
        return Err(StructureError::Entities {
            abstract_ids: ids(a),
            concrete_ids: ids(m),
        });
    }
    if let Some(e) = a
        .entities()
        .iter()
        .zip(m.entities())
        .find(|(x, y)| x.inputs() != y.inputs())
    {
        return Err(StructureError::Neighbourhood {
            entity: e.0.id().to_string(),
        });
    }
    for ((ea, expected), _) in a
        .entities()
        .iter()
        .zip(phi.abstract_max_states(m))
        .zip(m.entities())
    {
        if ea.max_state() != expected {
            return Err(StructureError::Range {
                entity: ea.id().to_string(),
                expected,
                found: ea.max_state(),
            });
        }
    }
    Ok(())
}

/// Outcome of the trace-inclusion check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    /// The first trace of the abstract model (by initial state) that is not
    /// an abstracted trace of the concrete model.
    Fails {
        witness: Trace,
    },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn witness(&self) -> Option<&Trace> {
        match self {
            Verdict::Holds => None,
            Verdict::Fails { witness } => Some(witness),
        }
    }
}

/// `phi(L(m))` for a fixed concrete model, computed once and reused to check
/// any number of candidate abstract models.
#[derive(Debug, Clone)]
pub struct AbstractedLanguage {
    phi: AbstractionMapping,
    concrete: Mvn,
    abstract_radices: Vec<u32>,
    traces: HashSet<Vec<usize>>,
    all_valid: bool,
    limits: Limits,
}

impl AbstractedLanguage {
    pub fn new(
        m: &Mvn,
        phi: &AbstractionMapping,
        limits: &Limits,
    ) -> Result<AbstractedLanguage, AbstractionError> {
        phi.check_fits(m).map_err(StructureError::from)?;
        let graph = StateGraph::build(m, limits)?;
        let abstract_radices: Vec<u32> = phi.abstract_max_states(m).iter().map(|x| x + 1).collect();
        let code: Vec<usize> = (0..graph.len())
            .map(|i| {
                mixed_radix_encode(&abstract_radices, phi.apply(&graph.state(i)).values()).unwrap()
            })
            .collect();
        let mut traces = HashSet::new();
        let mut all_valid = true;
        for start in 0..graph.len() {
            let mapped: Vec<usize> = graph
                .trace_indices(start)
                .into_iter()
                .map(|i| code[i])
                .collect();
            match check_mapped(&mapped) {
                Ok(k) => {
                    let mut t = mapped;
                    t.truncate(k + 1);
                    traces.insert(t);
                }
                Err(_) => all_valid = false,
            }
        }
        Ok(AbstractedLanguage {
            phi: phi.clone(),
            concrete: m.clone(),
            abstract_radices,
            traces,
            all_valid,
            limits: *limits,
        })
    }

    pub fn mapping(&self) -> &AbstractionMapping {
        &self.phi
    }

    pub fn concrete(&self) -> &Mvn {
        &self.concrete
    }

    /// Number of distinct valid abstracted traces.
    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Every trace of the concrete model had a valid abstraction.
    pub fn all_valid(&self) -> bool {
        self.all_valid
    }

    pub fn contains(&self, t: &Trace) -> bool {
        let encoded: Option<Vec<usize>> = t
            .states()
            .iter()
            .map(|s| mixed_radix_encode(&self.abstract_radices, s.values()))
            .collect();
        encoded.is_some_and(|e| self.traces.contains(&e))
    }

    pub fn to_trace_set(&self) -> TraceSet {
        self.traces
            .iter()
            .map(|t| {
                Trace::new_unchecked(
                    t.iter()
                        .map(|&i| GlobalState::new(mixed_radix_decode(&self.abstract_radices, i)))
                        .collect(),
                )
            })
            .collect()
    }

    /// Trace inclusion `L(a) ⊆ phi(L(m))` after the structural check.
    pub fn check(&self, a: &Mvn) -> Result<Verdict, AbstractionError> {
        check_structure(a, &self.concrete, &self.phi)?;
        Ok(self.check_unchecked_structure(a))
    }

    /// Trace inclusion for a model already known to have the right structure.
    pub(crate) fn check_unchecked_structure(&self, a: &Mvn) -> Verdict {
        let graph = StateGraph::build(a, &self.limits)
            .expect("abstract state space is no larger than the concrete one");
        for start in 0..graph.len() {
            let t = graph.trace_indices(start);
            if !self.traces.contains(&t) {
                return Verdict::Fails {
                    witness: graph.trace(start),
                };
            }
        }
        Verdict::Holds
    }

    /// Counts the abstract model's traces missing from `phi(L(m))`; zero iff
    /// the inclusion holds.
    pub fn count_missing(&self, a: &Mvn) -> usize {
        let graph = StateGraph::build(a, &self.limits).expect("checked structure");
        (0..graph.len())
            .filter(|&s| !self.traces.contains(&graph.trace_indices(s)))
            .count()
    }
}

/// Decides `a ⊑φ m`: same structure and every trace of `a` is a valid
/// abstracted trace of `m`.
pub fn check_abstraction(
    a: &Mvn,
    m: &Mvn,
    phi: &AbstractionMapping,
) -> Result<Verdict, AbstractionError> {
    check_structure(a, m, phi)?;
    AbstractedLanguage::new(m, phi, &Limits::default())?.check(a)
}

/// Evidence for the exact-abstraction relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactVerdict {
    pub abstraction: Verdict,
    /// Every trace of the concrete model abstracts to a valid trace.
    pub all_traces_valid: bool,
    /// `L(a) = phi(L(m))`.
    pub languages_equal: bool,
}

impl ExactVerdict {
    pub fn is_exact(&self) -> bool {
        self.abstraction.holds() && self.all_traces_valid && self.languages_equal
    }
}

pub fn check_exact(
    a: &Mvn,
    m: &Mvn,
    phi: &AbstractionMapping,
) -> Result<ExactVerdict, AbstractionError> {
    check_structure(a, m, phi)?;
    let abstracted = AbstractedLanguage::new(m, phi, &Limits::default())?;
    let abstraction = abstracted.check(a)?;
    // with inclusion, equality holds iff both sides have the same size; L(a)
    // has one trace per state
    let languages_equal = abstraction.holds() && abstracted.len() as u128 == a.state_space_size();
    Ok(ExactVerdict {
        abstraction,
        all_traces_valid: abstracted.all_valid(),
        languages_equal,
    })
}

/// Positive reachability transfer: if `from →* to` in the abstraction `a`
/// (which must abstract `m` under `phi`), returns concrete states
/// `S1 →* S2` of `m` with `phi(S1) = from` and `phi(S2) = to`.
///
/// Returns `None` when `to` is not reachable in `a`. That outcome says nothing
/// about the concrete model.
pub fn transfer_reachability(
    a: &Mvn,
    m: &Mvn,
    phi: &AbstractionMapping,
    from: &GlobalState,
    to: &GlobalState,
) -> Result<Option<(GlobalState, GlobalState)>, AbstractionError> {
    let abstracted = AbstractedLanguage::new(m, phi, &Limits::default())?;
    if !abstracted.check(a)?.holds() {
        return Ok(None);
    }
    if !crate::semantics::reachable(a, from, to) {
        return Ok(None);
    }
    let graph = StateGraph::build(m, &Limits::default())?;
    for start in 0..graph.len() {
        let s1 = graph.state(start);
        if phi.apply(&s1) != *from {
            continue;
        }
        let t = graph.trace(start);
        if let AbstractedTrace::Valid(v) = abstract_trace(phi, &t) {
            if v.contains(to) {
                let s2 = t
                    .states()
                    .iter()
                    .find(|s| phi.apply(s) == *to)
                    .expect("a valid abstracted trace is a prefix of the mapped trace")
                    .clone();
                return Ok(Some((s1, s2)));
            }
        }
    }
    unreachable!("abstraction holds, so some concrete trace abstracts to the trace from `from`")
}
