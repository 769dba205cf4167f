//! The network data model: entities, next-state tables, global states and
//! structural validation.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::state::GlobalState;

/// Guards on exhaustive work. Exceeding one is reported, never truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Largest global state space that is explored exhaustively.
    pub max_states: u64,
    /// Largest candidate set that is enumerated.
    pub max_candidates: u64,
    /// Largest model space the unpruned brute-force search will walk.
    pub max_brute_force: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: 1 << 24,
            max_candidates: 1 << 20,
            max_brute_force: 1 << 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("model is invalid ({} violation(s)); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),
    #[error("state has {found} components, model has {expected} entities")]
    StateArity { expected: usize, found: usize },
    #[error("state component {value} of entity `{entity}` is outside 0..{max}")]
    StateOutOfRange {
        entity: String,
        value: u32,
        max: u32,
    },
    #[error("state index {index} is outside the state space")]
    IndexOutOfRange { index: usize },
    #[error("malformed state `{0}`")]
    MalformedState(String),
}

/// One regulatory entity: its identifier, highest state and ordered inputs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Entity {
    id: String,
    max_state: u32,
    inputs: Vec<usize>,
}

impl Entity {
    pub fn id(&self) -> &str {
        &self.id
    }

    /// The entity ranges over `0..=max_state`.
    pub fn max_state(&self) -> u32 {
        self.max_state
    }

    /// Number of states the entity can take.
    pub fn radix(&self) -> u32 {
        self.max_state + 1
    }

    /// Positions (in entity order) of the neighbourhood.
    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }
}

/// A total deterministic next-state table, stored densely. Row `r` is the
/// mixed-radix encoding of the input tuple, first input most significant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Table {
    radices: Vec<u32>,
    outputs: Vec<u32>,
}

impl Table {
    pub(crate) fn new(radices: Vec<u32>, outputs: Vec<u32>) -> Self {
        debug_assert_eq!(
            radices.iter().map(|&r| r as usize).product::<usize>(),
            outputs.len()
        );
        Table { radices, outputs }
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// Number of states of each input column.
    pub fn radices(&self) -> &[u32] {
        &self.radices
    }

    pub fn outputs(&self) -> &[u32] {
        &self.outputs
    }

    pub fn output(&self, row: usize) -> u32 {
        self.outputs[row]
    }

    pub fn row_index(&self, inputs: &[u32]) -> Option<usize> {
        mixed_radix_encode(&self.radices, inputs)
    }

    pub fn row_inputs(&self, row: usize) -> Vec<u32> {
        mixed_radix_decode(&self.radices, row)
    }

    /// Rows in lexicographic input order.
    pub fn rows(&self) -> impl Iterator<Item = (Vec<u32>, u32)> + '_ {
        self.outputs
            .iter()
            .enumerate()
            .map(|(row, &out)| (self.row_inputs(row), out))
    }
}

/// A validated multi-valued network. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mvn {
    name: String,
    entities: Vec<Entity>,
    tables: Vec<Table>,
}

impl Mvn {
    /// Builds a model from an unchecked definition, reporting every violation.
    pub fn from_def(def: &MvnDef) -> Result<Mvn, ModelError> {
        let violations = validate_model(def);
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }
        let index: HashMap<&str, usize> = def
            .entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.as_str(), i))
            .collect();
        let entities: Vec<Entity> = def
            .entities
            .iter()
            .map(|e| Entity {
                id: e.id.clone(),
                max_state: e.max_state,
                inputs: e.inputs.iter().map(|id| index[id.as_str()]).collect(),
            })
            .collect();
        let tables = entities
            .iter()
            .map(|entity| {
                let radices: Vec<u32> =
                    entity.inputs.iter().map(|&i| entities[i].radix()).collect();
                let size: usize = radices.iter().map(|&r| r as usize).product();
                let mut outputs = vec![0; size];
                for row in def.rows_of(&entity.id) {
                    let idx = mixed_radix_encode(&radices, &row.inputs)
                        .expect("validated row inputs are in range");
                    outputs[idx] = row.output;
                }
                Table::new(radices, outputs)
            })
            .collect();
        Ok(Mvn {
            name: def.name.clone(),
            entities,
            tables,
        })
    }

    /// Assembles a model from parts that are valid by construction.
    pub(crate) fn from_parts(name: String, entities: Vec<Entity>, tables: Vec<Table>) -> Mvn {
        debug_assert_eq!(entities.len(), tables.len());
        Mvn {
            name,
            entities,
            tables,
        }
    }

    /// Same entities, ranges and inputs as `self`, with new ranges and tables.
    pub(crate) fn with_ranges_and_tables(
        &self,
        name: String,
        max_states: &[u32],
        tables: Vec<Table>,
    ) -> Mvn {
        Mvn::from_parts(name, self.entities_with_ranges(max_states), tables)
    }

    /// The entities of `self` with new ranges.
    pub(crate) fn entities_with_ranges(&self, max_states: &[u32]) -> Vec<Entity> {
        self.entities
            .iter()
            .zip(max_states)
            .map(|(e, &max_state)| Entity {
                id: e.id.clone(),
                max_state,
                inputs: e.inputs.clone(),
            })
            .collect()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn entity(&self, i: usize) -> &Entity {
        &self.entities[i]
    }

    pub fn entity_index(&self, id: &str) -> Option<usize> {
        self.entities.iter().position(|e| e.id == id)
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    pub fn table(&self, i: usize) -> &Table {
        &self.tables[i]
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn radices(&self) -> Vec<u32> {
        self.entities.iter().map(Entity::radix).collect()
    }

    /// Product of the per-entity range sizes, saturating at `u128::MAX`.
    pub fn state_space_size(&self) -> u128 {
        self.entities
            .iter()
            .try_fold(1u128, |acc, e| acc.checked_mul(e.radix() as u128))
            .unwrap_or(u128::MAX)
    }

    /// True if every entity has at most ten states, so that global states can
    /// be written as plain digit strings.
    pub fn uses_digit_strings(&self) -> bool {
        self.entities.iter().all(|e| e.radix() <= 10)
    }

    /// Same entities and neighbourhoods, ignoring ranges and tables.
    pub fn same_structure(&self, other: &Mvn) -> bool {
        self.entities.len() == other.entities.len()
            && self
                .entities
                .iter()
                .zip(&other.entities)
                .all(|(a, b)| a.id == b.id && a.inputs == b.inputs)
    }

    /// Equality of everything except the model name.
    pub fn same_network(&self, other: &Mvn) -> bool {
        self.entities == other.entities && self.tables == other.tables
    }

    pub fn check_state(&self, s: &GlobalState) -> Result<(), ModelError> {
        if s.len() != self.entities.len() {
            return Err(ModelError::StateArity {
                expected: self.entities.len(),
                found: s.len(),
            });
        }
        for (e, &v) in self.entities.iter().zip(s.values()) {
            if v > e.max_state {
                return Err(ModelError::StateOutOfRange {
                    entity: e.id.clone(),
                    value: v,
                    max: e.max_state,
                });
            }
        }
        Ok(())
    }

    /// Mixed-radix index of a state; the first entity is the most significant
    /// digit.
    pub fn encode_state(&self, s: &GlobalState) -> Result<usize, ModelError> {
        self.check_state(s)?;
        mixed_radix_encode(&self.radices(), s.values())
            .ok_or(ModelError::IndexOutOfRange { index: usize::MAX })
    }

    pub fn decode_state(&self, index: usize) -> Result<GlobalState, ModelError> {
        if (index as u128) >= self.state_space_size() {
            return Err(ModelError::IndexOutOfRange { index });
        }
        Ok(GlobalState::new(mixed_radix_decode(&self.radices(), index)))
    }

    /// Iterates the state space in encoding order.
    pub fn states(&self) -> impl Iterator<Item = GlobalState> + '_ {
        let radices = self.radices();
        let size = usize::try_from(self.state_space_size()).unwrap_or(usize::MAX);
        (0..size).map(move |i| GlobalState::new(mixed_radix_decode(&radices, i)))
    }

    /// Parses a state written as a digit string (only when every range has at
    /// most ten states) or as comma-separated values, optionally parenthesised.
    pub fn parse_state(&self, text: &str) -> Result<GlobalState, ModelError> {
        let trimmed = text.trim();
        let inner = trimmed
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .unwrap_or(trimmed);
        let malformed = || ModelError::MalformedState(text.to_string());
        let values: Vec<u32> = if inner.contains(',') || self.entities.len() == 1 {
            inner
                .split(',')
                .map(|v| v.trim().parse::<u32>().map_err(|_| malformed()))
                .collect::<Result<_, _>>()?
        } else if self.uses_digit_strings() && inner.chars().all(|c| c.is_ascii_digit()) {
            inner.chars().map(|c| c.to_digit(10).unwrap()).collect()
        } else {
            return Err(malformed());
        };
        let s = GlobalState::new(values);
        self.check_state(&s)?;
        Ok(s)
    }

    /// Writes a state the way `parse_state` reads it back.
    pub fn format_state(&self, s: &GlobalState) -> String {
        if self.uses_digit_strings() {
            s.values().iter().map(|v| v.to_string()).collect()
        } else {
            let parts: Vec<String> = s.values().iter().map(|v| v.to_string()).collect();
            format!("({})", parts.join(","))
        }
    }

    /// Unchecked definition of this model; re-validating it yields no
    /// violations.
    pub fn to_def(&self) -> MvnDef {
        MvnDef {
            name: self.name.clone(),
            entities: self
                .entities
                .iter()
                .map(|e| EntityDef {
                    id: e.id.clone(),
                    max_state: e.max_state,
                    inputs: e
                        .inputs
                        .iter()
                        .map(|&i| self.entities[i].id.clone())
                        .collect(),
                    line: None,
                })
                .collect(),
            tables: self
                .entities
                .iter()
                .zip(&self.tables)
                .map(|(e, t)| TableDef {
                    entity: e.id.clone(),
                    line: None,
                    rows: t
                        .rows()
                        .map(|(inputs, output)| RowDef {
                            inputs,
                            output,
                            line: None,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

pub(crate) fn mixed_radix_encode(radices: &[u32], digits: &[u32]) -> Option<usize> {
    if radices.len() != digits.len() {
        return None;
    }
    let mut index = 0usize;
    for (&r, &d) in radices.iter().zip(digits) {
        if d >= r {
            return None;
        }
        index = index.checked_mul(r as usize)?.checked_add(d as usize)?;
    }
    Some(index)
}

pub(crate) fn mixed_radix_decode(radices: &[u32], mut index: usize) -> Vec<u32> {
    let mut digits = vec![0; radices.len()];
    for (slot, &r) in digits.iter_mut().zip(radices).rev() {
        *slot = (index % r as usize) as u32;
        index /= r as usize;
    }
    digits
}

/// An unchecked model definition as read from text. Rows are explicit (any
/// shorthand has already been expanded); several rows may share inputs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MvnDef {
    pub name: String,
    pub entities: Vec<EntityDef>,
    pub tables: Vec<TableDef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityDef {
    pub id: String,
    pub max_state: u32,
    pub inputs: Vec<String>,
    pub line: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableDef {
    pub entity: String,
    pub rows: Vec<RowDef>,
    pub line: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowDef {
    pub inputs: Vec<u32>,
    pub output: u32,
    pub line: Option<usize>,
}

impl MvnDef {
    fn rows_of<'a>(&'a self, entity: &'a str) -> impl Iterator<Item = &'a RowDef> + 'a {
        self.tables
            .iter()
            .filter(move |t| t.entity == entity)
            .flat_map(|t| t.rows.iter())
    }

    fn table_line(&self, entity: &str) -> Option<usize> {
        self.tables
            .iter()
            .find(|t| t.entity == entity)
            .and_then(|t| t.line)
    }
}

/// A broken model invariant, located at an entity and (when known) a line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub entity: Option<String>,
    pub line: Option<usize>,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    NoEntities,
    DuplicateEntity,
    EmptyRange,
    UnknownInput {
        input: String,
    },
    TableForUnknownEntity,
    MissingTable,
    TableTooLarge,
    RowArity {
        expected: usize,
        found: usize,
    },
    InputOutOfRange {
        column: usize,
        value: u32,
        max: u32,
    },
    OutputOutOfRange {
        inputs: Vec<u32>,
        output: u32,
        max: u32,
    },
    MissingRow {
        inputs: Vec<u32>,
    },
    ConflictingRow {
        inputs: Vec<u32>,
        outputs: (u32, u32),
        other_line: Option<usize>,
    },
}

fn digits(values: &[u32]) -> String {
    let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    parts.join(" ")
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        let entity = self.entity.as_deref().unwrap_or("?");
        match &self.kind {
            ViolationKind::NoEntities => write!(f, "model declares no entities"),
            ViolationKind::DuplicateEntity => write!(f, "duplicate entity `{entity}`"),
            ViolationKind::EmptyRange => {
                write!(f, "entity `{entity}` must have at least two states")
            }
            ViolationKind::UnknownInput { input } => {
                write!(f, "entity `{entity}` has unknown input `{input}`")
            }
            ViolationKind::TableForUnknownEntity => {
                write!(f, "table for undeclared entity `{entity}`")
            }
            ViolationKind::MissingTable => write!(f, "missing table for entity `{entity}`"),
            ViolationKind::TableTooLarge => {
                write!(f, "table of `{entity}` has too many rows to store")
            }
            ViolationKind::RowArity { expected, found } => write!(
                f,
                "row of `{entity}` has {found} input column(s), expected {expected}"
            ),
            ViolationKind::InputOutOfRange { column, value, max } => write!(
                f,
                "input column {} of `{entity}` has state {value} outside 0..{max}",
                column + 1
            ),
            ViolationKind::OutputOutOfRange {
                inputs,
                output,
                max,
            } => write!(
                f,
                "output out of range in `{entity}` row [{}]: {output} is outside 0..{max}",
                digits(inputs)
            ),
            ViolationKind::MissingRow { inputs } => {
                write!(f, "missing row [{}] in table `{entity}`", digits(inputs))
            }
            ViolationKind::ConflictingRow {
                inputs,
                outputs,
                other_line,
            } => {
                write!(
                    f,
                    "conflicting row [{}] in table `{entity}`: outputs {} and {}",
                    digits(inputs),
                    outputs.0,
                    outputs.1
                )?;
                if let Some(l) = other_line {
                    write!(f, " (first given on line {l})")?;
                }
                Ok(())
            }
        }
    }
}

/// Largest number of rows a single table may have.
const MAX_TABLE_ROWS: u128 = 1 << 24;

/// Checks every model invariant. An empty result means the definition builds.
pub fn validate_model(def: &MvnDef) -> Vec<Violation> {
    let mut out = Vec::new();
    let at = |entity: &str, line: Option<usize>, kind| Violation {
        entity: Some(entity.to_string()),
        line,
        kind,
    };

    if def.entities.is_empty() {
        out.push(Violation {
            entity: None,
            line: None,
            kind: ViolationKind::NoEntities,
        });
        return out;
    }

    let mut ranges: HashMap<&str, u32> = HashMap::new();
    for e in &def.entities {
        if ranges.insert(e.id.as_str(), e.max_state).is_some() {
            out.push(at(&e.id, e.line, ViolationKind::DuplicateEntity));
        }
        if e.max_state < 1 {
            out.push(at(&e.id, e.line, ViolationKind::EmptyRange));
        }
    }
    for t in &def.tables {
        if !ranges.contains_key(t.entity.as_str()) {
            out.push(at(&t.entity, t.line, ViolationKind::TableForUnknownEntity));
        }
    }

    for e in &def.entities {
        let mut input_radices = Vec::with_capacity(e.inputs.len());
        let mut inputs_ok = true;
        for input in &e.inputs {
            match ranges.get(input.as_str()) {
                Some(&m) => input_radices.push(m + 1),
                None => {
                    inputs_ok = false;
                    out.push(at(
                        &e.id,
                        e.line,
                        ViolationKind::UnknownInput {
                            input: input.clone(),
                        },
                    ));
                }
            }
        }
        if !def.tables.iter().any(|t| t.entity == e.id) {
            out.push(at(&e.id, e.line, ViolationKind::MissingTable));
            continue;
        }
        if !inputs_ok {
            continue;
        }
        let size: u128 = input_radices.iter().map(|&r| r as u128).product();
        if size > MAX_TABLE_ROWS {
            out.push(at(
                &e.id,
                def.table_line(&e.id),
                ViolationKind::TableTooLarge,
            ));
            continue;
        }

        let mut seen: BTreeMap<Vec<u32>, (u32, Option<usize>)> = BTreeMap::new();
        for row in def.rows_of(&e.id) {
            if row.inputs.len() != input_radices.len() {
                out.push(at(
                    &e.id,
                    row.line,
                    ViolationKind::RowArity {
                        expected: input_radices.len(),
                        found: row.inputs.len(),
                    },
                ));
                continue;
            }
            let bad_column = row
                .inputs
                .iter()
                .zip(&input_radices)
                .position(|(&v, &r)| v >= r);
            if let Some(column) = bad_column {
                out.push(at(
                    &e.id,
                    row.line,
                    ViolationKind::InputOutOfRange {
                        column,
                        value: row.inputs[column],
                        max: input_radices[column] - 1,
                    },
                ));
                continue;
            }
            if row.output > e.max_state {
                out.push(at(
                    &e.id,
                    row.line,
                    ViolationKind::OutputOutOfRange {
                        inputs: row.inputs.clone(),
                        output: row.output,
                        max: e.max_state,
                    },
                ));
            }
            match seen.get(&row.inputs) {
                Some(&(prev, prev_line)) if prev != row.output => out.push(at(
                    &e.id,
                    row.line,
                    ViolationKind::ConflictingRow {
                        inputs: row.inputs.clone(),
                        outputs: (prev, row.output),
                        other_line: prev_line,
                    },
                )),
                Some(_) => {}
                None => {
                    seen.insert(row.inputs.clone(), (row.output, row.line));
                }
            }
        }

        let size = size as usize;
        if seen.len() < size {
            for idx in 0..size {
                let inputs = mixed_radix_decode(&input_radices, idx);
                if !seen.contains_key(&inputs) {
                    out.push(at(
                        &e.id,
                        def.table_line(&e.id),
                        ViolationKind::MissingRow { inputs },
                    ));
                }
            }
        }
    }
    out
}
