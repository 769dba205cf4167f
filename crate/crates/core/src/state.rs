use std::fmt;

use serde::{Deserialize, Serialize};

/// One state per entity, in entity declaration order.
///
/// The derived ordering is lexicographic, which for states of the same model
/// coincides with the order of their mixed-radix encodings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GlobalState(Vec<u32>);

impl GlobalState {
    pub fn new(values: Vec<u32>) -> Self {
        GlobalState(values)
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, entity: usize) -> u32 {
        self.0[entity]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_values(self) -> Vec<u32> {
        self.0
    }
}

impl From<Vec<u32>> for GlobalState {
    fn from(values: Vec<u32>) -> Self {
        GlobalState(values)
    }
}

/// Digit string when every component is a single digit, `(a,b,..)` otherwise.
impl fmt::Display for GlobalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&v| v < 10) {
            for v in &self.0 {
                write!(f, "{v}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
            write!(f, "({})", parts.join(","))
        }
    }
}

/// Builds a state from a digit string such as `"0300"`. Test and example
/// convenience; panics on non-digits.
pub fn st(digits: &str) -> GlobalState {
    GlobalState(
        digits
            .chars()
            .map(|c| c.to_digit(10).expect("digit"))
            .collect(),
    )
}
