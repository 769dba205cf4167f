//! JSON documents for models, traces, attractors, verdicts and search results.
//!
//! Every document deserializes back into the same value, and models convert
//! back into validated [`Mvn`]s.

use serde::{Deserialize, Serialize};

use crate::abstraction::Verdict;
use crate::model::{EntityDef, ModelError, Mvn, MvnDef, RowDef, TableDef};
use crate::search::{AllMappingsReport, CandidateTableSet, SearchReport};
use crate::state::GlobalState;
use crate::trace::{Attractor, Trace};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityJson {
    pub id: String,
    pub max_state: u32,
    pub inputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowJson {
    pub inputs: Vec<u32>,
    pub output: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableJson {
    pub entity: String,
    pub rows: Vec<RowJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelJson {
    pub name: String,
    pub entities: Vec<EntityJson>,
    pub tables: Vec<TableJson>,
}

impl From<&Mvn> for ModelJson {
    fn from(m: &Mvn) -> Self {
        ModelJson {
            name: m.name().to_string(),
            entities: m
                .entities()
                .iter()
                .map(|e| EntityJson {
                    id: e.id().to_string(),
                    max_state: e.max_state(),
                    inputs: e
                        .inputs()
                        .iter()
                        .map(|&i| m.entity(i).id().to_string())
                        .collect(),
                })
                .collect(),
            tables: m
                .entities()
                .iter()
                .zip(m.tables())
                .map(|(e, t)| TableJson {
                    entity: e.id().to_string(),
                    rows: t
                        .rows()
                        .map(|(inputs, output)| RowJson { inputs, output })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<&ModelJson> for Mvn {
    type Error = ModelError;
    fn try_from(j: &ModelJson) -> Result<Mvn, ModelError> {
        let def = MvnDef {
            name: j.name.clone(),
            entities: j
                .entities
                .iter()
                .map(|e| EntityDef {
                    id: e.id.clone(),
                    max_state: e.max_state,
                    inputs: e.inputs.clone(),
                    line: None,
                })
                .collect(),
            tables: j
                .tables
                .iter()
                .map(|t| TableDef {
                    entity: t.entity.clone(),
                    rows: t
                        .rows
                        .iter()
                        .map(|r| RowDef {
                            inputs: r.inputs.clone(),
                            output: r.output,
                            line: None,
                        })
                        .collect(),
                    line: None,
                })
                .collect(),
        };
        Mvn::from_def(&def)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceJson {
    pub states: Vec<GlobalState>,
}

impl From<&Trace> for TraceJson {
    fn from(t: &Trace) -> Self {
        TraceJson {
            states: t.states().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttractorJson {
    pub cycle: Vec<GlobalState>,
}

impl From<&Attractor> for AttractorJson {
    fn from(a: &Attractor) -> Self {
        AttractorJson {
            cycle: a.states().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictJson {
    pub holds: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<TraceJson>,
}

impl From<&Verdict> for VerdictJson {
    fn from(v: &Verdict) -> Self {
        VerdictJson {
            holds: v.holds(),
            witness: v.witness().map(TraceJson::from),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionJson {
    pub index: usize,
    pub witness: TraceJson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchJson {
    pub candidate_count: u64,
    pub abstractions: Vec<ModelJson>,
    pub guard_exceeded: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rejections: Vec<RejectionJson>,
}

impl SearchJson {
    pub fn from_report(r: &SearchReport) -> Self {
        SearchJson {
            candidate_count: r.candidate_count.min(u64::MAX as u128) as u64,
            abstractions: r.abstractions.iter().map(ModelJson::from).collect(),
            guard_exceeded: false,
            rejections: r
                .rejections
                .iter()
                .map(|x| RejectionJson {
                    index: x.index,
                    witness: TraceJson::from(&x.witness),
                })
                .collect(),
        }
    }

    /// The document for a search stopped by a guard.
    pub fn guard_exceeded(candidate_count: u64) -> Self {
        SearchJson {
            candidate_count,
            abstractions: Vec::new(),
            guard_exceeded: true,
            rejections: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRowJson {
    pub inputs: Vec<u32>,
    pub outputs: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateTableJson {
    pub entity: String,
    pub rows: Vec<CandidateRowJson>,
}

/// The abstracted, possibly non-deterministic tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateTablesJson {
    pub candidate_count: u64,
    pub choices_per_entity: Vec<u64>,
    pub tables: Vec<CandidateTableJson>,
}

impl From<&CandidateTableSet> for CandidateTablesJson {
    fn from(c: &CandidateTableSet) -> Self {
        let clamp = |n: u128| n.min(u64::MAX as u128) as u64;
        CandidateTablesJson {
            candidate_count: clamp(c.candidate_count()),
            choices_per_entity: c.choices_per_entity().into_iter().map(clamp).collect(),
            tables: c
                .entities()
                .iter()
                .zip(c.tables())
                .map(|(e, t)| CandidateTableJson {
                    entity: e.id().to_string(),
                    rows: t
                        .options()
                        .iter()
                        .enumerate()
                        .map(|(r, o)| CandidateRowJson {
                            inputs: t.row_inputs(r),
                            outputs: o.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingSearchJson {
    /// The mapping in `.map` syntax, one `map` entry per merged entity.
    pub mapping: Vec<String>,
    pub search: SearchJson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllMappingsJson {
    pub mappings: Vec<MappingSearchJson>,
}

impl AllMappingsJson {
    pub fn from_report(m: &Mvn, r: &AllMappingsReport) -> Self {
        AllMappingsJson {
            mappings: r
                .outcomes
                .iter()
                .map(|o| MappingSearchJson {
                    mapping: crate::parser::mapping_lines(&o.mapping, m),
                    search: SearchJson {
                        candidate_count: o.candidate_count.min(u64::MAX as u128) as u64,
                        abstractions: o.abstractions.iter().map(ModelJson::from).collect(),
                        guard_exceeded: false,
                        rejections: Vec::new(),
                    },
                })
                .collect(),
        }
    }
}
