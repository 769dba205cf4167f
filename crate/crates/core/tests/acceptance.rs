//! Release criteria. Each test prints one `PASS`/`FAIL` line; run with
//! `-- --nocapture --test-threads=1` to see them in order.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use mvnabs::parser::{parse_model_def, ParseError};
use mvnabs::search::SearchOptions;
use mvnabs::{
    abstract_language, abstract_tables, abstract_trace, attractor_of, brute_force_abstractions,
    bundled, check_exact, find_abstractions, find_abstractions_all_mappings, find_exact,
    mapping_families, parse_model, serialize_model, AbstractedTrace, AbstractionMapping, Attractor,
    GlobalState, Limits, Mvn, StateGraph, Trace, TraceSet,
};

fn st(s: &str) -> GlobalState {
    mvnabs::state::st(s)
}

fn tr(states: &[&str]) -> Trace {
    Trace::new(states.iter().map(|s| st(s)).collect()).unwrap()
}

fn serial() -> SearchOptions {
    SearchOptions {
        parallel: false,
        ..SearchOptions::default()
    }
}

/// Collects named checks for one criterion, then prints and asserts.
struct Criterion {
    id: &'static str,
    title: &'static str,
    started: Instant,
    limit: Duration,
    failures: Vec<String>,
}

impl Criterion {
    fn new(id: &'static str, title: &'static str, limit_secs: u64) -> Self {
        Criterion {
            id,
            title,
            started: Instant::now(),
            limit: Duration::from_secs(limit_secs),
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    /// Prints a status line for the checks made since `mark`.
    fn part(&self, mark: usize, name: &str) -> usize {
        let status = if self.failures.len() == mark {
            "PASS"
        } else {
            "FAIL"
        };
        println!("    [{status}] {name}");
        self.failures.len()
    }

    fn finish(mut self) {
        let elapsed = self.started.elapsed();
        if elapsed > self.limit {
            self.failures
                .push(format!("took {elapsed:?}, limit {:?}", self.limit));
        }
        let status = if self.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        println!(
            "criterion {} [{status}] {} ({:.2?})",
            self.id, self.title, elapsed
        );
        for f in &self.failures {
            println!("    - {f}");
        }
        assert!(
            self.failures.is_empty(),
            "criterion {} failed: {:?}",
            self.id,
            self.failures
        );
    }
}

#[test]
fn criterion_1_ex1_semantics() {
    let mut c = Criterion::new("1", "Ex1 traces and attractors", 1);
    let ex1 = bundled::ex1();
    let g = StateGraph::build(&ex1, &Limits::default()).unwrap();
    let expected: TraceSet = [
        tr(&["00", "11", "10", "10"]),
        tr(&["01", "12", "01"]),
        tr(&["02", "02"]),
        tr(&["10", "10"]),
        tr(&["11", "10", "10"]),
        tr(&["12", "01", "12"]),
    ]
    .into_iter()
    .collect();
    c.check(
        g.language() == expected,
        "language differs from the six traces",
    );
    let oracle: BTreeSet<Vec<GlobalState>> = expected.iter().map(|t| t.states().to_vec()).collect();
    c.check(common::language(&ex1) == oracle, "step oracle disagrees");

    let atts = g.attractors();
    let want: BTreeSet<Attractor> = [
        Attractor::from_cycle(vec![st("10")]),
        Attractor::from_cycle(vec![st("02")]),
        Attractor::from_cycle(vec![st("01"), st("12")]),
    ]
    .into_iter()
    .collect();
    c.check(atts == want, format!("attractors {atts:?}"));
    c.check(
        atts.iter().filter(|a| a.period() == 2).count() == 1,
        "expected one period-2 attractor",
    );
    c.finish();
}

#[test]
fn criterion_2_abstracted_language() {
    let mut c = Criterion::new("2", "abstracted traces of Ex1", 1);
    let ex1 = bundled::ex1();
    let phi = bundled::phi_g2();
    let lang = mvnabs::language(&ex1).unwrap();
    let per_trace = [
        ("00", vec!["00", "10", "10"]),
        ("01", vec!["00", "11", "00"]),
        ("02", vec!["01", "01"]),
        ("10", vec!["10", "10"]),
        ("11", vec!["10", "10"]),
        ("12", vec!["11", "00", "11"]),
    ];
    for (start, want) in &per_trace {
        let t = lang.iter().find(|t| t.initial() == &st(start)).unwrap();
        match abstract_trace(&phi, t) {
            AbstractedTrace::Valid(v) => c.check(v == tr(want), format!("{start}: got {v}")),
            AbstractedTrace::Invalid { .. } => c.check(false, format!("{start}: invalid")),
        }
    }
    let got = abstract_language(&phi, &lang);
    let want: TraceSet = per_trace.iter().map(|(_, w)| tr(w)).collect();
    c.check(got == want, "abstracted language differs");
    c.check(got.len() == 5, "expected five distinct abstracted traces");
    // two distinct abstracted traces start in 00
    c.check(
        got.iter().filter(|t| t.initial() == &st("00")).count() == 2,
        "expected two traces from 00",
    );
    let oracle = common::abstracted_language(&ex1, &phi);
    c.check(
        oracle == got.iter().map(|t| t.states().to_vec()).collect(),
        "oracle disagrees",
    );

    let five = tr(&["00", "11", "01", "02", "02"]);
    match abstract_trace(&phi, &five) {
        AbstractedTrace::Invalid { first, second } => {
            let mapped: Vec<GlobalState> = five.states().iter().map(|s| phi.apply(s)).collect();
            c.check(
                mapped[first] == st("00") && mapped[second] == st("00"),
                format!("witness positions {first}, {second}"),
            );
        }
        AbstractedTrace::Valid(v) => c.check(false, format!("five-state trace valid: {v}")),
    }
    c.check(
        common::abstract_sequence(&phi, five.states()).is_none(),
        "oracle accepts the five-state trace",
    );
    c.finish();
}

#[test]
fn criterion_3_ex1_search() {
    let mut c = Criterion::new("3", "Ex1 candidates and search", 1);
    let ex1 = bundled::ex1();
    let phi = bundled::phi_g2();
    let cands = abstract_tables(&ex1, &phi).unwrap();
    c.check(cands.candidate_count() == 2, "candidate count");
    let opts = SearchOptions {
        keep_rejections: true,
        ..serial()
    };
    let r = find_abstractions(&ex1, &phi, &opts).unwrap();
    c.check(r.abstractions.len() == 1, "expected one abstraction");
    if let Some(ab2) = r.abstractions.first() {
        c.check(ab2.same_network(&bundled::ex2()), "abstraction is not Ex2");
    }
    c.check(r.rejections.len() == 1, "expected one rejection");
    if let Some(rej) = r.rejections.first() {
        let ab1 = cands.candidate(rej.index);
        c.check(
            ab1.same_network(&bundled::ab1()),
            "rejected model is not AB1",
        );
        let w = rej.witness.states().to_vec();
        c.check(
            common::language(&ab1).contains(&w),
            "witness is not a trace of AB1",
        );
        c.check(
            !common::abstracted_language(&ex1, &phi).contains(&w),
            "witness is an abstracted trace",
        );
    }
    c.finish();
}

#[test]
fn criterion_4_no_abstraction_exists() {
    let mut c = Criterion::new("4", "Ex3 has no abstraction under any mapping", 5);
    let ex3 = bundled::ex3();
    let r = find_abstractions_all_mappings(&ex3, &serial()).unwrap();
    c.check(
        r.outcomes.len() == 6,
        format!("{} mappings", r.outcomes.len()),
    );
    c.check(r.none_found(), "some mapping admits an abstraction");
    for o in &r.outcomes {
        if let Ok(brute) = brute_force_abstractions(&ex3, &o.mapping, &Limits::default()) {
            c.check(brute.is_empty(), "brute force finds an abstraction");
        }
    }
    c.finish();
}

#[test]
fn criterion_5_pl2() {
    let mut c = Criterion::new("5", "PL2 case study", 1);
    let pl2 = bundled::pl2();
    let phi = bundled::phi_cro();
    let atts = mvnabs::attractors(&pl2).unwrap();
    let want: BTreeSet<Attractor> = [
        Attractor::from_cycle(vec![st("10")]),
        Attractor::from_cycle(vec![st("00"), st("11")]),
        Attractor::from_cycle(vec![st("01"), st("02")]),
    ]
    .into_iter()
    .collect();
    c.check(atts == want, "attractors");
    c.check(
        abstract_tables(&pl2, &phi).unwrap().candidate_count() == 2,
        "candidate count",
    );
    let found = find_abstractions(&pl2, &phi, &serial())
        .unwrap()
        .abstractions;
    c.check(found.len() == 1, "expected one abstraction");
    if let Some(a) = found.first() {
        let apl2 = bundled::apl2();
        for (x, y) in a.tables().iter().zip(apl2.tables()) {
            c.check(x.outputs() == y.outputs(), "table rows differ from APL2");
        }
        c.check(a.same_network(&apl2), "not APL2");
    }
    let lang = mvnabs::language(&pl2).unwrap();
    for (start, want) in [
        ("00", vec!["00", "11", "00"]),
        ("01", vec!["01", "01"]),
        ("02", vec!["01", "01"]),
        ("10", vec!["10", "10"]),
        ("11", vec!["11", "00", "11"]),
        ("12", vec!["11", "01", "01"]),
    ] {
        let t = lang.iter().find(|t| t.initial() == &st(start)).unwrap();
        let got = common::lib_abstract(&phi, t);
        c.check(
            got == Some(tr(&want).states().to_vec()),
            format!("trace from {start}"),
        );
    }
    c.finish();
}

#[test]
fn criterion_6_pl4() {
    let mut c = Criterion::new("6", "PL4 case study", 30);
    let pl4 = bundled::pl4();
    let phi = bundled::phi_pl4();
    c.check(pl4.state_space_size() == 48, "state space");
    let atts = mvnabs::attractors(&pl4).unwrap();
    let want: BTreeSet<Attractor> = [
        Attractor::from_cycle(vec![st("0300"), st("0200")]),
        Attractor::from_cycle(vec![st("1000"), st("2100")]),
        Attractor::from_cycle(vec![st("2000")]),
    ]
    .into_iter()
    .collect();
    c.check(atts == want, "attractors");
    let cands = abstract_tables(&pl4, &phi).unwrap();
    c.check(cands.candidate_count() == 256, "candidate count");
    c.check(
        cands.choices_per_entity() == vec![4, 4, 8, 2],
        "per-entity choices",
    );
    let found = find_abstractions(&pl4, &phi, &serial())
        .unwrap()
        .abstractions;
    c.check(found.len() == 2, format!("{} abstractions", found.len()));
    if let [a, b] = found.as_slice() {
        let cii = pl4.entity_index("CII").unwrap();
        for (i, (x, y)) in a.tables().iter().zip(b.tables()).enumerate() {
            let diff: Vec<Vec<u32>> = x
                .rows()
                .zip(y.rows())
                .filter(|(p, q)| p.1 != q.1)
                .map(|(p, _)| p.0)
                .collect();
            let want: Vec<Vec<u32>> = if i == cii {
                vec![vec![0, 1, 1]]
            } else {
                vec![]
            };
            c.check(diff == want, format!("entity {i} differs at {diff:?}"));
        }
        let bundled_pair = [bundled::apl4_1(), bundled::apl4_2()];
        for m in [a, b] {
            c.check(
                bundled_pair.iter().any(|x| x.same_network(m)),
                "not one of APL4_1/APL4_2",
            );
            let atts = mvnabs::attractors(m).unwrap();
            for p in ["0100", "1000"] {
                c.check(
                    atts.contains(&Attractor::from_cycle(vec![st(p)])),
                    format!("missing point attractor {p}"),
                );
            }
        }
    }
    c.finish();
}

#[test]
fn criterion_7_oracle_equivalence() {
    let mut c = Criterion::new("7", "pruned search equals brute force", 120);
    for (m, phi) in [
        (bundled::ex1(), bundled::phi_g2()),
        (bundled::pl2(), bundled::phi_cro()),
    ] {
        let found = find_abstractions(&m, &phi, &serial()).unwrap().abstractions;
        let brute = brute_force_abstractions(&m, &phi, &Limits::default()).unwrap();
        c.check(
            found.len() == brute.len() && found.iter().zip(&brute).all(|(a, b)| a.same_network(b)),
            format!("{} disagrees", m.name()),
        );
    }
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 200 && seed < 20_000 {
        let (m, phi) = common::random_instance(seed);
        seed += 1;
        let Ok(brute) = brute_force_abstractions(&m, &phi, &Limits::default()) else {
            continue;
        };
        checked += 1;
        let found = find_abstractions(&m, &phi, &serial()).unwrap().abstractions;
        let same =
            found.len() == brute.len() && found.iter().zip(&brute).all(|(a, b)| a.same_network(b));
        c.check(same, format!("seed {} disagrees", seed - 1));
    }
    c.check(
        checked >= 200,
        format!("only {checked} random instances fit the guard"),
    );
    println!("    {checked} random instances checked ({seed} generated)");
    c.finish();
}

/// Whether `t` is a trace of at least one candidate model, by computing the
/// language of every candidate.
fn in_some_candidate(candidates: &[BTreeSet<Vec<GlobalState>>], t: &[GlobalState]) -> bool {
    candidates.iter().any(|l| l.contains(t))
}

fn inclusion_violations(m: &Mvn, phi: &AbstractionMapping) -> Option<Vec<Trace>> {
    let cands = abstract_tables(m, phi).unwrap();
    if cands.candidate_count() > 4096 {
        return None;
    }
    let langs: Vec<_> = cands
        .enumerate_candidates(&Limits::default())
        .unwrap()
        .map(|a| common::language(&a))
        .collect();
    Some(
        common::abstracted_language(m, phi)
            .into_iter()
            .filter(|t| !in_some_candidate(&langs, t))
            .map(|t| Trace::new(t).unwrap())
            .collect(),
    )
}

#[test]
fn criterion_8_theorem_suites() {
    let mut c = Criterion::new("8", "theorem suites", 600);
    let paper_pairs = [
        (bundled::ex1(), bundled::phi_g2()),
        (bundled::pl2(), bundled::phi_cro()),
        (bundled::pl4(), bundled::phi_pl4()),
    ];

    let mark = 0;
    // abstracted traces of the model are traces of the candidate models
    let mut instances: Vec<(Mvn, AbstractionMapping)> = paper_pairs.to_vec();
    for m in [bundled::ex1(), bundled::ex3(), bundled::pl2()] {
        for phi in mapping_families(&m).unwrap() {
            instances.push((m.clone(), phi));
        }
    }
    instances.extend((0..300).map(common::random_instance));
    let (mut checked, mut violations) = (0, 0);
    let mut first = None;
    for (m, phi) in &instances {
        if let Some(v) = inclusion_violations(m, phi) {
            checked += 1;
            if !v.is_empty() && first.is_none() {
                first = Some(format!("{}: {}", m.name(), v[0]));
            }
            violations += v.len();
        }
    }
    println!("    trace inclusion: {checked} instances, {violations} violations");
    c.check(
        violations == 0,
        format!(
            "trace inclusion: {violations} abstracted traces belong to no candidate (first: {})",
            first.unwrap_or_default()
        ),
    );

    let mark = c.part(mark, "abstracted traces lie in the candidate languages");

    // reachability and attractors transfer from every found abstraction
    for (m, phi) in &paper_pairs {
        let concrete = common::language(m);
        for a in find_abstractions(m, phi, &serial()).unwrap().abstractions {
            for s1 in common::all_states(&a) {
                for s2 in common::orbit(&a, &s1) {
                    let ok = concrete
                        .iter()
                        .any(|t| phi.apply(&t[0]) == s1 && t.iter().any(|x| phi.apply(x) == s2));
                    c.check(ok, format!("{}: {s1} ->* {s2} does not transfer", m.name()));
                }
            }
        }
    }
    let mark = c.part(mark, "reachability transfers from found abstractions");
    for (m, phi) in &paper_pairs {
        let abstracted_attractors: BTreeSet<Attractor> = common::language(m)
            .iter()
            .filter_map(|t| common::abstract_sequence(phi, t))
            .map(|t| attractor_of(&Trace::new(t).unwrap()))
            .collect();
        for a in find_abstractions(m, phi, &serial()).unwrap().abstractions {
            for att in mvnabs::attractors(&a).unwrap() {
                c.check(
                    abstracted_attractors.contains(&att),
                    format!("{}: attractor {att} not abstracted", m.name()),
                );
            }
        }
    }

    let mark = c.part(
        mark,
        "attractors of found abstractions are abstracted attractors",
    );

    // exact abstraction exists iff the candidate set is a singleton
    let (mut singletons, mut exact_seen) = (0, 0);
    for seed in 0..300 {
        let (m, phi) = common::random_instance(seed);
        let count = abstract_tables(&m, &phi).unwrap().candidate_count();
        if count == 1 {
            singletons += 1;
            match find_exact(&m, &phi).unwrap() {
                Some(a) => {
                    let exact = common::language(&a) == common::abstracted_language(&m, &phi)
                        && common::language(&m)
                            .iter()
                            .all(|t| common::abstract_sequence(&phi, t).is_some());
                    c.check(
                        exact,
                        format!("seed {seed}: singleton candidate is not exact"),
                    );
                    c.check(
                        check_exact(&a, &m, &phi).unwrap().is_exact(),
                        "check_exact disagrees",
                    );
                }
                None => c.check(
                    false,
                    format!("seed {seed}: no exact model for a singleton"),
                ),
            }
        } else {
            c.check(
                find_exact(&m, &phi).unwrap().is_none(),
                "find_exact on several candidates",
            );
        }
        if let Ok(all) = brute_force_abstractions(&m, &phi, &Limits::default()) {
            for a in all {
                if check_exact(&a, &m, &phi).unwrap().is_exact() {
                    exact_seen += 1;
                    c.check(
                        count == 1,
                        format!("seed {seed}: exact abstraction with {count} candidates"),
                    );
                }
            }
        }
    }
    c.part(mark, "exact abstraction iff singleton candidate set");
    println!(
        "    exactness: {singletons} singleton candidate sets, {exact_seen} exact abstractions"
    );
    c.finish();
}

fn has_line(e: &ParseError) -> bool {
    e.diagnostics.iter().all(|d| d.line > 0)
}

#[test]
fn criterion_9_parser() {
    let mut c = Criterion::new("9", "parser", 5);
    for m in bundled::models() {
        let again = parse_model(&serialize_model(&m)).unwrap();
        c.check(again == m, format!("{} does not round-trip", m.name()));
    }
    let pl4 = bundled::pl4();
    for (id, rows) in [("CI", 24), ("Cro", 12), ("CII", 24), ("N", 12)] {
        let t = pl4.table(pl4.entity_index(id).unwrap());
        c.check(t.len() == rows, format!("{id} has {} rows", t.len()));
    }
    // the unexpanded file lists fewer rows than the total table
    let def = parse_model_def(bundled::PL4).unwrap();
    let listed: usize = bundled::PL4.lines().filter(|l| l.contains("->")).count();
    let expanded: usize = def.tables.iter().map(|t| t.rows.len()).sum();
    c.check(
        listed < expanded && expanded == 72,
        format!("{listed} lines expand to {expanded} rows"),
    );

    let header = "mvn bad\nentity a states 0..1 inputs a b\nentity b states 0..2 inputs a\n";
    let tables_b = "table b\n0 -> 1\n1 -> 2\n";
    let fixtures = [
        format!("{header}table a\n0 0,1,2 -> 1\n1 0,1,2 -> 0\n0 2 -> 0\n{tables_b}"),
        format!("{header}table a\n0,1 0,1,2 -> 1\n1 1 -> 0\n{tables_b}"),
        format!("{header}table a\n0 0,1,2 -> 1\n1 0,1,2 -> 0\ntable b\n0 -> 1\n1 -> 2\n0 -> 0\n"),
    ];
    for (i, text) in fixtures.iter().enumerate() {
        match parse_model(text) {
            Ok(_) => c.check(false, format!("conflicting fixture {i} accepted")),
            Err(e) => {
                c.check(has_line(&e), "diagnostic without a line");
                c.check(
                    e.to_string().contains("conflicting row"),
                    format!("fixture {i}: {e}"),
                );
            }
        }
    }
    // identical repeats are collapsed
    let dup = format!("{header}table a\n0 0,1,2 -> 1\n1 0,1,2 -> 0\n0 2 -> 1\n{tables_b}");
    c.check(
        parse_model(&dup).is_ok(),
        "identical duplicate row rejected",
    );
    c.finish();
}
