//! The example models and mappings shipped with the crate.

use crate::abstraction::AbstractionMapping;
use crate::model::Mvn;
use crate::parser::{parse_mapping, parse_model};

pub const EX1: &str = include_str!("../models/ex1.mvn");
pub const EX2: &str = include_str!("../models/ex2.mvn");
pub const AB1: &str = include_str!("../models/ab1.mvn");
pub const EX3: &str = include_str!("../models/ex3.mvn");
pub const PL2: &str = include_str!("../models/pl2.mvn");
pub const APL2: &str = include_str!("../models/apl2.mvn");
pub const PL4: &str = include_str!("../models/pl4.mvn");
pub const APL4_1: &str = include_str!("../models/apl4_1.mvn");
pub const APL4_2: &str = include_str!("../models/apl4_2.mvn");
pub const PHI_G2: &str = include_str!("../models/phi_g2.map");
pub const PHI_CRO: &str = include_str!("../models/phi_cro.map");
pub const PHI_PL4: &str = include_str!("../models/phi_pl4.map");

fn model(text: &str) -> Mvn {
    parse_model(text).expect("bundled model is valid")
}

pub fn ex1() -> Mvn {
    model(EX1)
}

pub fn ex2() -> Mvn {
    model(EX2)
}

pub fn ab1() -> Mvn {
    model(AB1)
}

pub fn ex3() -> Mvn {
    model(EX3)
}

pub fn pl2() -> Mvn {
    model(PL2)
}

pub fn apl2() -> Mvn {
    model(APL2)
}

pub fn pl4() -> Mvn {
    model(PL4)
}

pub fn apl4_1() -> Mvn {
    model(APL4_1)
}

pub fn apl4_2() -> Mvn {
    model(APL4_2)
}

/// Merges levels 0 and 1 of `g2` in Ex1.
pub fn phi_g2() -> AbstractionMapping {
    parse_mapping(PHI_G2, &ex1()).expect("bundled mapping is valid")
}

/// Merges levels 1 and 2 of `Cro` in PL2.
pub fn phi_cro() -> AbstractionMapping {
    parse_mapping(PHI_CRO, &pl2()).expect("bundled mapping is valid")
}

/// Makes `CI` and `Cro` Boolean in PL4.
pub fn phi_pl4() -> AbstractionMapping {
    parse_mapping(PHI_PL4, &pl4()).expect("bundled mapping is valid")
}

/// Every bundled model, in a fixed order.
pub fn models() -> Vec<Mvn> {
    vec![
        ex1(),
        ex2(),
        ab1(),
        ex3(),
        pl2(),
        apl2(),
        pl4(),
        apl4_1(),
        apl4_2(),
    ]
}

/// Looks a bundled model up by name.
pub fn model_named(name: &str) -> Option<Mvn> {
    models().into_iter().find(|m| m.name() == name)
}
