//! Text formats for models (`.mvn`) and abstraction mappings (`.map`).
//!
//! Model files are line oriented; `#` starts a comment:
//!
//! ```text
//! mvn ex1
//! entity g1 states 0..1 inputs g2
//! entity g2 states 0..2 inputs g1 g2
//! table g2
//! 0   0,1 -> 1
//! ```
//!
//! A table row has one column per input; a column may list several states
//! separated by commas, and the row then stands for every combination.
//!
//! Mapping files name the model they apply to and give one `map` line per
//! merged entity. Entities without a `map` line keep their states.
//!
//! ```text
//! abstraction phi_g2 for ex1
//! map g2: 0->0, 1->0, 2->1
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write};

use thiserror::Error;

use crate::abstraction::{AbstractionMapping, EntityMapping, MappingError, StateMapping};
use crate::model::{
    validate_model, EntityDef, Mvn, MvnDef, RowDef, TableDef, Violation, ViolationKind,
};

/// A located problem in a source file. Line and column are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub kind: DiagnosticKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosticKind {
    Syntax(String),
    /// The text parsed but the model breaks an invariant.
    Model(Violation),
    Mapping(MappingError),
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosticKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            DiagnosticKind::Model(v) => {
                // the line is already part of the diagnostic
                let v = Violation {
                    line: None,
                    ..v.clone()
                };
                write!(f, "{v}")
            }
            DiagnosticKind::Mapping(e) => write!(f, "{e}"),
        }
    }
}

/// Every diagnostic found in one file, in line order.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl ParseError {
    fn single(line: usize, column: usize, kind: DiagnosticKind) -> Self {
        ParseError {
            diagnostics: vec![Diagnostic { line, column, kind }],
        }
    }

    pub fn has_violation(&self, pred: impl Fn(&ViolationKind) -> bool) -> bool {
        self.diagnostics
            .iter()
            .any(|d| matches!(&d.kind, DiagnosticKind::Model(v) if pred(&v.kind)))
    }
}

/// A parsed model together with its source.
#[derive(Debug, Clone)]
pub struct ModelDocument {
    pub text: String,
    pub model: Mvn,
    /// For each entity and dense row index, the lines that define the row.
    pub row_lines: Vec<Vec<Vec<usize>>>,
}

struct Line<'a> {
    number: usize,
    text: &'a str,
}

impl<'a> Line<'a> {
    /// Whitespace-separated tokens with their 1-based columns.
    fn tokens(&self) -> Vec<(usize, &'a str)> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, c) in self.text.char_indices() {
            match (c.is_whitespace(), start) {
                (true, Some(s)) => {
                    out.push((s + 1, &self.text[s..i]));
                    start = None;
                }
                (false, None) => start = Some(i),
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((s + 1, &self.text[s..]));
        }
        out
    }

    fn syntax(&self, column: usize, msg: impl Into<String>) -> Diagnostic {
        Diagnostic {
            line: self.number,
            column,
            kind: DiagnosticKind::Syntax(msg.into()),
        }
    }
}

fn significant_lines(text: &str) -> impl Iterator<Item = Line<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let text = raw.split('#').next().unwrap_or("");
        (!text.trim().is_empty()).then_some(Line {
            number: i + 1,
            text,
        })
    })
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '\''))
}

fn parse_value(line: &Line, column: usize, s: &str) -> Result<u32, Diagnostic> {
    s.parse::<u32>()
        .map_err(|_| line.syntax(column, format!("expected a state value, found `{s}`")))
}

/// `0..m`; ranges must start at 0.
fn parse_range(line: &Line, column: usize, s: &str) -> Result<u32, Diagnostic> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| line.syntax(column, format!("expected a range `0..m`, found `{s}`")))?;
    let lo = parse_value(line, column, lo)?;
    let hi = parse_value(line, column + s.find("..").unwrap() + 2, hi)?;
    if lo != 0 {
        return Err(line.syntax(column, "state ranges must start at 0"));
    }
    Ok(hi)
}

/// Splits the left side of a row into columns. Commas bind neighbouring
/// tokens, so `0, 1 2` is two columns.
fn row_columns<'a>(tokens: Vec<(usize, &'a str)>, text: &'a str) -> Vec<(usize, String)> {
    let _ = text;
    let mut out: Vec<(usize, String)> = Vec::new();
    for (col, tok) in tokens {
        match out.last_mut() {
            Some((_, prev)) if prev.ends_with(',') || tok.starts_with(',') => prev.push_str(tok),
            _ => out.push((col, tok.to_string())),
        }
    }
    out
}

fn parse_row(line: &Line) -> Result<(Vec<Vec<u32>>, u32), Diagnostic> {
    let arrow = line.text.find("->").unwrap();
    let lhs = Line {
        number: line.number,
        text: &line.text[..arrow],
    };
    let rhs_tokens: Vec<(usize, &str)> = Line {
        number: line.number,
        text: &line.text[arrow + 2..],
    }
    .tokens()
    .into_iter()
    .map(|(c, t)| (c + arrow + 2, t))
    .collect();
    let output = match rhs_tokens.as_slice() {
        [(c, t)] => parse_value(line, *c, t)?,
        [] => return Err(line.syntax(arrow + 3, "row has no output after `->`")),
        [_, (c, _), ..] => return Err(line.syntax(*c, "row has more than one output")),
    };
    let mut columns = Vec::new();
    for (col, tok) in row_columns(lhs.tokens(), lhs.text) {
        let mut alternatives = Vec::new();
        let mut offset = 0;
        for part in tok.split(',') {
            if part.is_empty() {
                return Err(line.syntax(col + offset, "empty state in a column list"));
            }
            alternatives.push(parse_value(line, col + offset, part)?);
            offset += part.len() + 1;
        }
        alternatives.sort_unstable();
        alternatives.dedup();
        columns.push(alternatives);
    }
    Ok((columns, output))
}

/// Cartesian product of the column alternatives, in lexicographic order.
fn expand(columns: &[Vec<u32>]) -> Vec<Vec<u32>> {
    columns.iter().fold(vec![Vec::new()], |acc, alts| {
        acc.into_iter()
            .flat_map(|prefix| {
                alts.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

/// Reads a model file into an unchecked definition, expanding shorthand rows.
/// Only syntax is checked here.
pub fn parse_model_def(text: &str) -> Result<MvnDef, ParseError> {
    let mut def = MvnDef::default();
    let mut header: Option<usize> = None;
    let mut current_table: Option<usize> = None;
    let mut diagnostics = Vec::new();

    for line in significant_lines(text) {
        let tokens = line.tokens();
        let (kw_col, keyword) = tokens[0];
        let result: Result<(), Diagnostic> = (|| match keyword {
            "mvn" => {
                if header.is_some() {
                    return Err(line.syntax(kw_col, "duplicate `mvn` header"));
                }
                match tokens.as_slice() {
                    [_, (_, name)] if is_identifier(name) => {
                        def.name = name.to_string();
                        header = Some(line.number);
                        Ok(())
                    }
                    [_, (c, name), ..] if !is_identifier(name) => {
                        Err(line.syntax(*c, format!("invalid model name `{name}`")))
                    }
                    _ => Err(line.syntax(kw_col, "expected `mvn <name>`")),
                }
            }
            "entity" => {
                let expect = |c: usize| {
                    line.syntax(c, "expected `entity <id> states 0..<m> inputs <id>...`")
                };
                let (c, id) = *tokens.get(1).ok_or_else(|| expect(kw_col))?;
                if !is_identifier(id) {
                    return Err(line.syntax(c, format!("invalid entity name `{id}`")));
                }
                match tokens.get(2) {
                    Some((_, "states")) => {}
                    Some((c, _)) => return Err(expect(*c)),
                    None => return Err(expect(kw_col)),
                }
                let (rc, range) = *tokens.get(3).ok_or_else(|| expect(kw_col))?;
                let max_state = parse_range(&line, rc, range)?;
                let inputs = match tokens.get(4) {
                    Some((_, "inputs")) => tokens[5..]
                        .iter()
                        .map(|&(c, t)| {
                            if is_identifier(t) {
                                Ok(t.to_string())
                            } else {
                                Err(line.syntax(c, format!("invalid input name `{t}`")))
                            }
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                    Some((c, _)) => return Err(expect(*c)),
                    None => Vec::new(),
                };
                def.entities.push(EntityDef {
                    id: id.to_string(),
                    max_state,
                    inputs,
                    line: Some(line.number),
                });
                Ok(())
            }
            "table" => match tokens.as_slice() {
                [_, (_, id)] if is_identifier(id) => {
                    def.tables.push(TableDef {
                        entity: id.to_string(),
                        rows: Vec::new(),
                        line: Some(line.number),
                    });
                    current_table = Some(def.tables.len() - 1);
                    Ok(())
                }
                _ => Err(line.syntax(kw_col, "expected `table <id>`")),
            },
            _ if line.text.contains("->") => {
                let t = current_table
                    .ok_or_else(|| line.syntax(kw_col, "table row outside a `table` section"))?;
                let (columns, output) = parse_row(&line)?;
                for inputs in expand(&columns) {
                    def.tables[t].rows.push(RowDef {
                        inputs,
                        output,
                        line: Some(line.number),
                    });
                }
                Ok(())
            }
            other => Err(line.syntax(kw_col, format!("unexpected `{other}`"))),
        })();
        if let Err(d) = result {
            diagnostics.push(d);
        }
    }
    if header.is_none() {
        diagnostics.insert(
            0,
            Diagnostic {
                line: 1,
                column: 1,
                kind: DiagnosticKind::Syntax("missing `mvn <name>` header".into()),
            },
        );
    }
    if diagnostics.is_empty() {
        Ok(def)
    } else {
        Err(ParseError { diagnostics })
    }
}

/// Parses and validates a model, keeping the source lines of every row.
pub fn parse_model_document(text: &str) -> Result<ModelDocument, ParseError> {
    let def = parse_model_def(text)?;
    let violations = validate_model(&def);
    if !violations.is_empty() {
        let last_line = text.lines().count().max(1);
        let mut diagnostics: Vec<Diagnostic> = violations
            .into_iter()
            .map(|v| Diagnostic {
                line: v.line.unwrap_or(last_line),
                column: 1,
                kind: DiagnosticKind::Model(v),
            })
            .collect();
        diagnostics.sort_by_key(|d| d.line);
        return Err(ParseError { diagnostics });
    }
    let model = Mvn::from_def(&def).expect("validated");
    let row_lines = model
        .entities()
        .iter()
        .zip(model.tables())
        .map(|(e, t)| {
            let mut lines = vec![Vec::new(); t.len()];
            for td in def.tables.iter().filter(|td| td.entity == e.id()) {
                for row in &td.rows {
                    let idx = t.row_index(&row.inputs).unwrap();
                    if let Some(l) = row.line {
                        if !lines[idx].contains(&l) {
                            lines[idx].push(l);
                        }
                    }
                }
            }
            lines
        })
        .collect();
    Ok(ModelDocument {
        text: text.to_string(),
        model,
        row_lines,
    })
}

pub fn parse_model(text: &str) -> Result<Mvn, ParseError> {
    parse_model_document(text).map(|d| d.model)
}

/// Canonical text of a model: explicit rows in lexicographic input order.
pub fn serialize_model(m: &Mvn) -> String {
    let mut out = String::new();
    writeln!(out, "mvn {}", m.name()).unwrap();
    for e in m.entities() {
        write!(out, "entity {} states 0..{} inputs", e.id(), e.max_state()).unwrap();
        for &i in e.inputs() {
            write!(out, " {}", m.entity(i).id()).unwrap();
        }
        out.push('\n');
    }
    for (e, t) in m.entities().iter().zip(m.tables()) {
        writeln!(out, "\ntable {}", e.id()).unwrap();
        for (inputs, output) in t.rows() {
            for v in &inputs {
                write!(out, "{v} ").unwrap();
            }
            writeln!(out, "-> {output}").unwrap();
        }
    }
    out
}

/// A parsed mapping file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingDocument {
    pub name: String,
    pub model: String,
    /// Explicit `map` lines in file order.
    pub entries: Vec<MapEntry>,
}

/// One `map` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapEntry {
    pub entity: String,
    /// `(source, target)` pairs as written.
    pub pairs: Vec<(u32, u32)>,
    pub line: usize,
}

/// Reads a mapping file without resolving it against a model.
pub fn parse_mapping_document(text: &str) -> Result<MappingDocument, ParseError> {
    let mut header: Option<(String, String)> = None;
    let mut entries = Vec::new();
    let mut diagnostics = Vec::new();
    for line in significant_lines(text) {
        let tokens = line.tokens();
        let (kw_col, keyword) = tokens[0];
        let result: Result<(), Diagnostic> = (|| match keyword {
            "abstraction" => {
                if header.is_some() {
                    return Err(line.syntax(kw_col, "duplicate `abstraction` header"));
                }
                match tokens.as_slice() {
                    [_, (_, name), (_, "for"), (_, model)]
                        if is_identifier(name) && is_identifier(model) =>
                    {
                        header = Some((name.to_string(), model.to_string()));
                        Ok(())
                    }
                    _ => Err(line.syntax(kw_col, "expected `abstraction <name> for <model>`")),
                }
            }
            "map" => {
                let body_start = line.text.find("map").unwrap() + 3;
                let body = &line.text[body_start..];
                let colon = body
                    .find(':')
                    .ok_or_else(|| line.syntax(kw_col, "expected `map <entity>: a->b, ...`"))?;
                let entity = body[..colon].trim();
                if !is_identifier(entity) {
                    return Err(
                        line.syntax(body_start + 1, format!("invalid entity name `{entity}`"))
                    );
                }
                let mut pairs = Vec::new();
                let mut offset = body_start + colon + 1;
                for part in body[colon + 1..].split(',') {
                    let column = offset + 1 + (part.len() - part.trim_start().len());
                    offset += part.len() + 1;
                    let (a, b) = part.trim().split_once("->").ok_or_else(|| {
                        line.syntax(column, format!("expected `a->b`, found `{}`", part.trim()))
                    })?;
                    pairs.push((
                        parse_value(&line, column, a.trim())?,
                        parse_value(&line, column, b.trim())?,
                    ));
                }
                entries.push(MapEntry {
                    entity: entity.to_string(),
                    pairs,
                    line: line.number,
                });
                Ok(())
            }
            other => Err(line.syntax(kw_col, format!("unexpected `{other}`"))),
        })();
        if let Err(d) = result {
            diagnostics.push(d);
        }
    }
    if header.is_none() {
        diagnostics.insert(
            0,
            Diagnostic {
                line: 1,
                column: 1,
                kind: DiagnosticKind::Syntax(
                    "missing `abstraction <name> for <model>` header".into(),
                ),
            },
        );
    }
    if !diagnostics.is_empty() {
        return Err(ParseError { diagnostics });
    }
    let (name, model) = header.unwrap();
    Ok(MappingDocument {
        name,
        model,
        entries,
    })
}

impl MappingDocument {
    /// Resolves the entries against `m`; entities without an entry map by
    /// identity.
    pub fn resolve(&self, m: &Mvn) -> Result<AbstractionMapping, ParseError> {
        if self.model != m.name() {
            return Err(ParseError::single(
                1,
                1,
                DiagnosticKind::Syntax(format!(
                    "mapping is for model `{}`, not `{}`",
                    self.model,
                    m.name()
                )),
            ));
        }
        let mut by_entity: BTreeMap<usize, StateMapping> = BTreeMap::new();
        let mut diagnostics = Vec::new();
        let mut seen_lines: HashMap<usize, usize> = HashMap::new();
        for MapEntry {
            entity,
            pairs,
            line,
        } in &self.entries
        {
            let syntax = |msg: String| Diagnostic {
                line: *line,
                column: 1,
                kind: DiagnosticKind::Syntax(msg),
            };
            let Some(i) = m.entity_index(entity) else {
                diagnostics.push(syntax(format!("unknown entity `{entity}`")));
                continue;
            };
            if let Some(prev) = seen_lines.insert(i, *line) {
                diagnostics.push(syntax(format!(
                    "entity `{entity}` is already mapped on line {prev}"
                )));
                continue;
            }
            let states = m.entity(i).radix() as usize;
            let mut image = vec![None; states];
            let mut bad = None;
            for &(a, b) in pairs {
                match image.get_mut(a as usize) {
                    None => {
                        bad = Some(format!(
                            "state {a} is outside the range 0..{} of `{entity}`",
                            states - 1
                        ))
                    }
                    Some(Some(_)) => bad = Some(format!("state {a} of `{entity}` is mapped twice")),
                    Some(slot) => *slot = Some(b),
                }
            }
            if bad.is_none() {
                if let Some(s) = image.iter().position(Option::is_none) {
                    bad = Some(format!("state {s} of `{entity}` is not mapped"));
                }
            }
            if let Some(msg) = bad {
                diagnostics.push(syntax(msg));
                continue;
            }
            match StateMapping::new(image.into_iter().map(Option::unwrap).collect()) {
                Ok(sm) => {
                    by_entity.insert(i, sm);
                }
                Err(e) => diagnostics.push(Diagnostic {
                    line: *line,
                    column: 1,
                    kind: DiagnosticKind::Mapping(e),
                }),
            }
        }
        if !diagnostics.is_empty() {
            return Err(ParseError { diagnostics });
        }
        let entries = (0..m.len())
            .map(|i| match by_entity.remove(&i) {
                Some(sm) => EntityMapping::Merge(sm),
                None => EntityMapping::Identity,
            })
            .collect();
        AbstractionMapping::new(entries).map_err(|e| {
            let line = self.entries.first().map_or(1, |e| e.line);
            ParseError::single(line, 1, DiagnosticKind::Mapping(e))
        })
    }
}

pub fn parse_mapping(text: &str, m: &Mvn) -> Result<AbstractionMapping, ParseError> {
    parse_mapping_document(text)?.resolve(m)
}

/// The `map` lines of `phi`, one per merged entity.
pub fn mapping_lines(phi: &AbstractionMapping, m: &Mvn) -> Vec<String> {
    m.entities()
        .iter()
        .zip(phi.entries())
        .filter_map(|(e, entry)| match entry {
            EntityMapping::Merge(sm) => Some(format!("map {}: {sm}", e.id())),
            EntityMapping::Identity => None,
        })
        .collect()
}

/// Text of a mapping that `parse_mapping` reads back.
pub fn serialize_mapping(name: &str, phi: &AbstractionMapping, m: &Mvn) -> String {
    let mut out = format!("abstraction {name} for {}\n", m.name());
    for line in mapping_lines(phi, m) {
        writeln!(out, "{line}").unwrap();
    }
    out
}
