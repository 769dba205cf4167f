//! Abstraction identification.
//!
//! Applying a mapping to every row of every next-state table gives tables whose
//! rows hold *sets* of abstract outputs. Any abstraction of the model picks one
//! output per row, so only those deterministic restrictions need checking.
//! A brute-force search over every model with the right shape is kept as an
//! oracle for small cases.

use std::collections::BTreeSet;

use rayon::prelude::*;
use thiserror::Error;

use crate::abstraction::{
    check_structure, enumerate_state_mappings, AbstractedLanguage, AbstractionError,
    AbstractionMapping, EntityMapping, MappingError, StructureError, Verdict,
};
use crate::model::{mixed_radix_decode, Entity, Limits, Mvn, Table};
use crate::semantics::SemanticsError;
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("{what} count {count} exceeds the limit of {limit}")]
    GuardExceeded {
        what: &'static str,
        count: u128,
        limit: u64,
    },
    #[error("model has no entity with more than two states, so no state mapping exists")]
    NoLegalMapping,
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

impl From<AbstractionError> for SearchError {
    fn from(e: AbstractionError) -> Self {
        match e {
            AbstractionError::Structure(s) => SearchError::Structure(s),
            AbstractionError::Semantics(s) => SearchError::Semantics(s),
        }
    }
}

impl SearchError {
    pub fn is_guard(&self) -> bool {
        matches!(
            self,
            SearchError::GuardExceeded { .. }
                | SearchError::Semantics(SemanticsError::StateSpaceTooLarge { .. })
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub limits: Limits,
    /// Check candidates on the rayon pool. Results are identical either way.
    pub parallel: bool,
    /// Keep a witness trace for every rejected candidate.
    pub keep_rejections: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            limits: Limits::default(),
            parallel: true,
            keep_rejections: false,
        }
    }
}

/// A possibly non-deterministic next-state table over abstract inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateTable {
    radices: Vec<u32>,
    options: Vec<Vec<u32>>,
}

impl CandidateTable {
    /// Abstract input radices, one per neighbourhood member.
    pub fn radices(&self) -> &[u32] {
        &self.radices
    }

    /// Sorted, non-empty output set of every abstract row.
    pub fn options(&self) -> &[Vec<u32>] {
        &self.options
    }

    pub fn row_inputs(&self, row: usize) -> Vec<u32> {
        mixed_radix_decode(&self.radices, row)
    }

    /// Number of deterministic restrictions of this table.
    pub fn choices(&self) -> u128 {
        self.options
            .iter()
            .try_fold(1u128, |acc, o| acc.checked_mul(o.len() as u128))
            .unwrap_or(u128::MAX)
    }

    pub fn is_deterministic(&self) -> bool {
        self.options.iter().all(|o| o.len() == 1)
    }
}

/// The tables obtained by applying a mapping to a model: the generator of
/// every candidate abstraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateTableSet {
    name: String,
    entities: Vec<Entity>,
    tables: Vec<CandidateTable>,
}

/// Applies `phi` row by row to the tables of `m`.
pub fn abstract_tables(
    m: &Mvn,
    phi: &AbstractionMapping,
) -> Result<CandidateTableSet, MappingError> {
    phi.check_fits(m)?;
    let maxes = phi.abstract_max_states(m);
    let entries = phi.entries();
    let tables = m
        .entities()
        .iter()
        .zip(m.tables())
        .enumerate()
        .map(|(i, (e, t))| {
            let radices: Vec<u32> = e.inputs().iter().map(|&j| maxes[j] + 1).collect();
            let size: usize = radices.iter().map(|&r| r as usize).product();
            let mut sets = vec![BTreeSet::new(); size];
            for (row, out) in t.rows() {
                let mapped: Vec<u32> = row
                    .iter()
                    .zip(e.inputs())
                    .map(|(&v, &j)| entries[j].apply(v))
                    .collect();
                let idx = crate::model::mixed_radix_encode(&radices, &mapped).unwrap();
                sets[idx].insert(entries[i].apply(out));
            }
            CandidateTable {
                radices,
                options: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
            }
        })
        .collect();
    Ok(CandidateTableSet {
        name: m.name().to_string(),
        entities: m.entities_with_ranges(&maxes),
        tables,
    })
}

impl CandidateTableSet {
    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn tables(&self) -> &[CandidateTable] {
        &self.tables
    }

    /// Candidate count of each entity's table.
    pub fn choices_per_entity(&self) -> Vec<u128> {
        self.tables.iter().map(CandidateTable::choices).collect()
    }

    /// Total number of candidate models, saturating at `u128::MAX`.
    pub fn candidate_count(&self) -> u128 {
        self.tables
            .iter()
            .try_fold(1u128, |acc, t| acc.checked_mul(t.choices()))
            .unwrap_or(u128::MAX)
    }

    pub fn is_deterministic(&self) -> bool {
        self.tables.iter().all(CandidateTable::is_deterministic)
    }

    /// Name given to the candidate at `index`.
    pub fn candidate_name(&self, index: usize) -> String {
        format!("{}_abs{}", self.name, index)
    }

    /// The candidate at position `index` of the enumeration order: the first
    /// row of the first entity is the most significant choice, and choices
    /// follow ascending output value.
    pub fn candidate(&self, index: usize) -> Mvn {
        let mut rest = index;
        let mut outputs: Vec<Vec<u32>> = self
            .tables
            .iter()
            .map(|t| vec![0; t.options.len()])
            .collect();
        for (t, out) in self.tables.iter().zip(outputs.iter_mut()).rev() {
            for (opts, slot) in t.options.iter().zip(out.iter_mut()).rev() {
                *slot = opts[rest % opts.len()];
                rest /= opts.len();
            }
        }
        debug_assert_eq!(rest, 0, "candidate index out of range");
        let tables = self
            .tables
            .iter()
            .zip(outputs)
            .map(|(t, out)| Table::new(t.radices.clone(), out))
            .collect();
        Mvn::from_parts(self.candidate_name(index), self.entities.clone(), tables)
    }

    fn guarded_count(&self, limits: &Limits) -> Result<usize, SearchError> {
        let count = self.candidate_count();
        if count > limits.max_candidates as u128 {
            return Err(SearchError::GuardExceeded {
                what: "candidate model",
                count,
                limit: limits.max_candidates,
            });
        }
        Ok(count as usize)
    }

    /// Every deterministic restriction, each exactly once, in index order.
    pub fn enumerate_candidates(
        &self,
        limits: &Limits,
    ) -> Result<impl Iterator<Item = Mvn> + '_, SearchError> {
        let count = self.guarded_count(limits)?;
        Ok((0..count).map(move |i| self.candidate(i)))
    }

    /// Row-wise membership: every table of `a` picks an allowed output.
    pub fn admits(&self, a: &Mvn) -> bool {
        a.len() == self.entities.len()
            && a.entities().iter().zip(&self.entities).all(|(x, y)| x == y)
            && a.tables().iter().zip(&self.tables).all(|(t, c)| {
                t.radices() == c.radices.as_slice()
                    && t.outputs()
                        .iter()
                        .zip(&c.options)
                        .all(|(o, opts)| opts.binary_search(o).is_ok())
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub index: usize,
    pub witness: Trace,
}

/// Result of searching one mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchReport {
    pub candidate_count: u128,
    pub choices_per_entity: Vec<u128>,
    /// Verified abstractions in enumeration order.
    pub abstractions: Vec<Mvn>,
    /// Filled only when `keep_rejections` is set.
    pub rejections: Vec<Rejection>,
}

/// All abstractions of `m` under `phi`, found among the candidates of
/// `abstract_tables(m, phi)`.
pub fn find_abstractions(
    m: &Mvn,
    phi: &AbstractionMapping,
    opts: &SearchOptions,
) -> Result<SearchReport, SearchError> {
    let candidates = abstract_tables(m, phi)?;
    let count = candidates.guarded_count(&opts.limits)?;
    let abstracted = AbstractedLanguage::new(m, phi, &opts.limits)?;
    if count > 0 {
        check_structure(&candidates.candidate(0), m, phi)?;
    }

    let check = |i: usize| {
        let a = candidates.candidate(i);
        let verdict = abstracted.check_unchecked_structure(&a);
        (i, a, verdict)
    };
    let verdicts: Vec<(usize, Mvn, Verdict)> = if opts.parallel {
        (0..count).into_par_iter().map(check).collect()
    } else {
        (0..count).map(check).collect()
    };

    let mut report = SearchReport {
        candidate_count: count as u128,
        choices_per_entity: candidates.choices_per_entity(),
        abstractions: Vec::new(),
        rejections: Vec::new(),
    };
    for (index, a, verdict) in verdicts {
        match verdict {
            Verdict::Holds => report.abstractions.push(a),
            Verdict::Fails { witness } if opts.keep_rejections => {
                report.rejections.push(Rejection { index, witness })
            }
            Verdict::Fails { .. } => {}
        }
    }
    Ok(report)
}

/// The exact abstraction of `m` under `phi`, if any. It exists exactly when
/// the candidate set is a singleton, so only the count is inspected.
pub fn find_exact(m: &Mvn, phi: &AbstractionMapping) -> Result<Option<Mvn>, SearchError> {
    let candidates = abstract_tables(m, phi)?;
    Ok(if candidates.candidate_count() == 1 {
        Some(candidates.candidate(0))
    } else {
        None
    })
}

/// Every well-defined abstraction mapping of `m`: per entity with more than
/// two states, the identity or any surjection onto 2..(states - 1) states;
/// the all-identity family is excluded. Order is lexicographic over entities,
/// identity first, then by codomain size and value table.
pub fn mapping_families(m: &Mvn) -> Result<Vec<AbstractionMapping>, SearchError> {
    let per_entity: Vec<Vec<EntityMapping>> = m
        .entities()
        .iter()
        .map(|e| {
            let states = e.radix() as usize;
            let mut opts = vec![EntityMapping::Identity];
            for n in 2..states {
                opts.extend(
                    enumerate_state_mappings(states, n)
                        .expect("2 <= n < states")
                        .into_iter()
                        .map(EntityMapping::Merge),
                );
            }
            opts
        })
        .collect();
    if per_entity.iter().all(|o| o.len() == 1) {
        return Err(SearchError::NoLegalMapping);
    }
    let mut families: Vec<Vec<EntityMapping>> = vec![Vec::new()];
    for opts in &per_entity {
        families = families
            .into_iter()
            .flat_map(|prefix| {
                opts.iter().map(move |o| {
                    let mut f = prefix.clone();
                    f.push(o.clone());
                    f
                })
            })
            .collect();
    }
    Ok(families
        .into_iter()
        .filter_map(|f| AbstractionMapping::new(f).ok())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingOutcome {
    pub mapping: AbstractionMapping,
    pub candidate_count: u128,
    pub abstractions: Vec<Mvn>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllMappingsReport {
    pub outcomes: Vec<MappingOutcome>,
}

impl AllMappingsReport {
    /// No mapping admits any abstraction.
    pub fn none_found(&self) -> bool {
        self.outcomes.iter().all(|o| o.abstractions.is_empty())
    }
}

/// Runs `find_abstractions` for every mapping family of `m`. The total number
/// of candidates over all families is held to `max_candidates`.
pub fn find_abstractions_all_mappings(
    m: &Mvn,
    opts: &SearchOptions,
) -> Result<AllMappingsReport, SearchError> {
    let families = mapping_families(m)?;
    let mut total: u128 = 0;
    for phi in &families {
        total = total.saturating_add(abstract_tables(m, phi)?.candidate_count());
    }
    if total > opts.limits.max_candidates as u128 {
        return Err(SearchError::GuardExceeded {
            what: "total candidate model",
            count: total,
            limit: opts.limits.max_candidates,
        });
    }
    let outcomes = families
        .into_iter()
        .map(|phi| {
            let report = find_abstractions(m, &phi, opts)?;
            Ok(MappingOutcome {
                mapping: phi,
                candidate_count: report.candidate_count,
                abstractions: report.abstractions,
            })
        })
        .collect::<Result<_, SearchError>>()?;
    Ok(AllMappingsReport { outcomes })
}

/// Unpruned search: every deterministic model with the structure of `m` and
/// the ranges of `phi`'s codomains, filtered by the abstraction check. A
/// testing oracle; refuses more than `max_brute_force` models.
pub fn brute_force_abstractions(
    m: &Mvn,
    phi: &AbstractionMapping,
    limits: &Limits,
) -> Result<Vec<Mvn>, SearchError> {
    phi.check_fits(m)?;
    let maxes = phi.abstract_max_states(m);
    let row_radices: Vec<Vec<u32>> = m
        .entities()
        .iter()
        .map(|e| e.inputs().iter().map(|&j| maxes[j] + 1).collect())
        .collect();
    // one digit per (entity, row), each ranging over the entity's abstract states
    let digit_radix: Vec<u32> = row_radices
        .iter()
        .zip(&maxes)
        .flat_map(|(r, &mx)| {
            let rows: usize = r.iter().map(|&x| x as usize).product();
            std::iter::repeat_n(mx + 1, rows)
        })
        .collect();
    let total = digit_radix
        .iter()
        .try_fold(1u128, |acc, &r| acc.checked_mul(r as u128))
        .unwrap_or(u128::MAX);
    if total > limits.max_brute_force as u128 {
        return Err(SearchError::GuardExceeded {
            what: "brute-force model",
            count: total,
            limit: limits.max_brute_force,
        });
    }
    let abstracted = AbstractedLanguage::new(m, phi, limits)?;
    let mut found = Vec::new();
    let mut digits = vec![0u32; digit_radix.len()];
    for index in 0..total as usize {
        let mut offset = 0;
        let tables = row_radices
            .iter()
            .map(|r| {
                let rows: usize = r.iter().map(|&x| x as usize).product();
                let t = Table::new(r.clone(), digits[offset..offset + rows].to_vec());
                offset += rows;
                t
            })
            .collect();
        let a = m.with_ranges_and_tables(format!("{}_bf{}", m.name(), index), &maxes, tables);
        if abstracted.check(&a)?.holds() {
            found.push(a);
        }
        for (d, &r) in digits.iter_mut().zip(&digit_radix).rev() {
            *d += 1;
            if *d < r {
                break;
            }
            *d = 0;
        }
    }
    Ok(found)
}
